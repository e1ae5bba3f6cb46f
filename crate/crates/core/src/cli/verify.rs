//! Cross-engine verification suite.
//!
//! Every check lands in one of four states. `documented` means the printed
//! expression disagrees with the exact engine, the mismatch is one of the
//! catalogued [`Discrepancy`] items, and the exact replacement does agree.
//! Only `fail` makes the run unsuccessful.

use std::f64::consts::PI;

use serde::Serialize;

use crate::closedform::{self, derived, ClosedFormInputs, Discrepancy};
use crate::error::Result;
use crate::gaussian_meter::{postselect, MomentReport};
use crate::grid_oracle::{grid_run, GridSpec, DEFAULT_EXTENT_SIGMAS};
use crate::hardy::{
    build_scenario, default_continuous_couplings, default_discrete_couplings, p_continuous, p_discrete,
    p_discrete_transcription, weak_value_table, HardyCase, HardyScenario, Meter,
};
use crate::hilbert::{Ket, Operator, Tensor};
use crate::momentum_oracle::expm_moments;
use crate::probes::single_pointer_probe;
use crate::qubit_meter::{
    self, construction_residual, evolve_postselect_qubit, evolve_total, meter_expectation, QubitMeterScenario,
};
use crate::random::{
    random_commuting_pair, random_ket, random_pre_post, random_qubit_involution, random_real_ket, seeded,
    PairKind,
};
use crate::series::{bisect, fit_proportional, linspace, logspace, polyfit};
use crate::weakvalue::{postselect_probability, weak_value_set, WeakValueSet};

/// Dimensionless couplings `g/sigma` of the cross-engine sweep.
pub const COUPLINGS: [f64; 6] = [0.01, 0.1, 0.5, 1.0, 2.0, 3.0];
/// Analytic engine against analytic oracle or exact closed form.
pub const ANALYTIC_TOL: f64 = 1e-10;
/// Analytic engine against the grid at full resolution.
pub const GRID_TOL: f64 = 1e-6;
/// Grid tolerance below [`FULL_GRID_N`].
pub const GRID_TOL_RELAXED: f64 = 1e-5;
pub const FULL_GRID_N: usize = 1024;
/// Qubit engine constructions.
pub const QUBIT_TOL: f64 = 1e-12;
/// Lower cutoff of the relative-error denominator: differences between
/// quantities both below it are compared absolutely.
pub const RELATIVE_FLOOR: f64 = 1e-3;
/// Smallest post-selection probability of a random scenario.
pub const MIN_POSTSELECT_PROB: f64 = 0.05;

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyOptions {
    /// Skip the grid oracle.
    pub fast: bool,
    pub grid_n: usize,
    /// Random pre/post pairs per observable structure.
    pub pairs: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { fast: false, grid_n: FULL_GRID_N, pairs: 50, seed: 2718 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Documented,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub status: Status,
    /// Headline number compared against `tolerance`.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
    pub discrepancies: Vec<&'static str>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub documented: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub pairs: usize,
    pub fast: bool,
    pub grid_n: Option<usize>,
    pub grid_tolerance: Option<f64>,
    pub grid_tolerance_relaxed: bool,
    pub checks: Vec<Check>,
    pub summary: Summary,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn summary_lines(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .checks
            .iter()
            .map(|c| {
                let status = match c.status {
                    Status::Pass => "PASS",
                    Status::Fail => "FAIL",
                    Status::Documented => "DOC ",
                    Status::Skipped => "SKIP",
                };
                format!("[{status}] {}/{}: {}", c.group, c.name, c.detail)
            })
            .collect();
        let s = self.summary;
        lines.push(format!(
            "summary: {} pass, {} fail, {} documented, {} skipped",
            s.pass, s.fail, s.documented, s.skipped
        ));
        lines
    }
}

/// `|a - b| / max(|a|, |b|, RELATIVE_FLOOR)`.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    (a - b).abs() / a.abs().max(b.abs()).max(RELATIVE_FLOOR)
}

/// Running maximum of an error with the location of the worst case.
#[derive(Clone, Debug, Default)]
struct Worst {
    err: f64,
    at: String,
    failures: Vec<String>,
}

impl Worst {
    fn add(&mut self, err: f64, at: impl FnOnce() -> String) {
        if err.is_nan() {
            self.failures.push(at());
        } else if err > self.err {
            self.err = err;
            self.at = at();
        }
    }

    fn fail(&mut self, at: String) {
        self.failures.push(at);
    }

    fn value(&self) -> f64 {
        if self.failures.is_empty() {
            self.err
        } else {
            f64::INFINITY
        }
    }

    fn describe(&self, tol: f64) -> String {
        let mut s = format!("max err {:.3e} (tol {tol:.0e})", self.err);
        if !self.at.is_empty() {
            s += &format!(" at {}", self.at);
        }
        if let Some(first) = self.failures.first() {
            s += &format!("; {} evaluation error(s), first: {first}", self.failures.len());
        }
        s
    }
}

struct Builder {
    checks: Vec<Check>,
}

impl Builder {
    fn push(&mut self, group: &'static str, name: impl Into<String>, status: Status, detail: String) -> &mut Check {
        self.checks.push(Check {
            group,
            name: name.into(),
            status,
            value: None,
            tolerance: None,
            detail,
            discrepancies: vec![],
        });
        self.checks.last_mut().expect("just pushed")
    }

    fn threshold(&mut self, group: &'static str, name: impl Into<String>, worst: &Worst, tol: f64) {
        let value = worst.value();
        let status = if value <= tol { Status::Pass } else { Status::Fail };
        let c = self.push(group, name, status, worst.describe(tol));
        c.value = Some(value);
        c.tolerance = Some(tol);
    }

    /// A printed expression: passes at `tol`, is documented when it misses,
    /// is whitelisted, and the exact replacement (`exact`) passes.
    fn printed(
        &mut self,
        group: &'static str,
        name: &str,
        printed: &Worst,
        exact: &Worst,
        tol: f64,
        whitelist: &[Discrepancy],
    ) {
        let (pv, ev) = (printed.value(), exact.value());
        let status = if pv <= tol {
            Status::Pass
        } else if !whitelist.is_empty() && ev <= tol {
            Status::Documented
        } else {
            Status::Fail
        };
        let mut detail = format!("printed: {}; exact: {}", printed.describe(tol), exact.describe(tol));
        if status == Status::Documented {
            let notes: Vec<&str> = whitelist.iter().map(|d| d.description()).collect();
            detail += &format!("; known: {}", notes.join(" | "));
        }
        let c = self.push(group, name, status, detail);
        c.value = Some(pv);
        c.tolerance = Some(tol);
        if status == Status::Documented {
            c.discrepancies = whitelist.iter().map(|d| d.id()).collect();
        }
    }
}

/// One random continuous-meter scenario.
#[derive(Clone, Debug)]
pub struct RandomScenario {
    pub pre: Ket,
    pub post: Ket,
    pub a: Operator,
    pub b: Operator,
}

/// `count` seeded scenarios of the given structure on two qubits.
pub fn random_scenarios(seed: u64, count: usize, kind: PairKind) -> Vec<RandomScenario> {
    let stream = match kind {
        PairKind::Involutory => 1,
        PairKind::Projector => 2,
    };
    let mut rng = seeded(seed.wrapping_mul(31).wrapping_add(stream));
    (0..count)
        .map(|_| {
            let (pre, post) = random_pre_post(&mut rng, 4, MIN_POSTSELECT_PROB);
            let (a, b) = random_commuting_pair(&mut rng, kind);
            RandomScenario { pre, post, a, b }
        })
        .collect()
}

fn kind_name(kind: PairKind) -> &'static str {
    match kind {
        PairKind::Involutory => "involutory",
        PairKind::Projector => "projector",
    }
}

fn compare_reports(worst: &mut Worst, lhs: &MomentReport, rhs: &MomentReport, at: &dyn Fn(&str) -> String) {
    for ((field, l), r) in MomentReport::FIELDS.iter().zip(lhs.values()).zip(rhs.values()) {
        worst.add(rel_diff(l, r), || at(field));
    }
}

/// Printed and exact forms for one moment, evaluated on every sample.
struct FormCheck {
    name: &'static str,
    printed: Box<dyn Fn(&ClosedFormInputs) -> Result<f64>>,
    exact: Box<dyn Fn(&ClosedFormInputs) -> Result<f64>>,
    engine: fn(&MomentReport) -> f64,
    whitelist: &'static [Discrepancy],
}

fn involutory_forms() -> Vec<FormCheck> {
    vec![
        FormCheck {
            name: "xy_involutory",
            printed: Box::new(closedform::cf_xy_inv),
            exact: Box::new(derived::xy_involutory),
            engine: |m| m.xy,
            whitelist: &[Discrepancy::XyInvolutoryFactorTwo],
        },
        FormCheck {
            name: "x_py_involutory",
            printed: Box::new(closedform::cf_xpy_inv),
            exact: Box::new(derived::xpy_involutory),
            engine: |m| m.x_py,
            whitelist: &[Discrepancy::XpyInvolutoryNormalization],
        },
        FormCheck {
            name: "x_involutory",
            printed: Box::new(closedform::cf_x_inv),
            exact: Box::new(derived::x_involutory),
            engine: |m| m.x,
            whitelist: &[],
        },
        FormCheck {
            name: "x2_involutory_normalized",
            printed: Box::new(|inp| closedform::cf_x2_inv(inp).map(|r| r.normalized_fi)),
            exact: Box::new(derived::x2_involutory),
            engine: |m| m.x2,
            whitelist: &[Discrepancy::X2Unnormalized],
        },
        FormCheck {
            name: "y_involutory_exact",
            printed: Box::new(derived::y_involutory),
            exact: Box::new(derived::y_involutory),
            engine: |m| m.y,
            whitelist: &[],
        },
        FormCheck {
            name: "px_py_involutory_exact",
            printed: Box::new(derived::pxpy_involutory),
            exact: Box::new(derived::pxpy_involutory),
            engine: |m| m.px_py,
            whitelist: &[],
        },
        FormCheck {
            name: "w_involutory_exact",
            printed: Box::new(|inp| Ok(derived::w_involutory(inp))),
            exact: Box::new(|inp| Ok(derived::w_involutory(inp))),
            engine: |m| m.w_norm,
            whitelist: &[],
        },
    ]
}

fn projector_forms() -> Vec<FormCheck> {
    vec![
        FormCheck {
            name: "xy_projector",
            printed: Box::new(closedform::cf_xy_proj),
            exact: Box::new(derived::xy_projector),
            engine: |m| m.xy,
            whitelist: &[Discrepancy::ProjectorNormalization, Discrepancy::XyProjectorBracket],
        },
        FormCheck {
            name: "x_projector",
            printed: Box::new(closedform::cf_x_proj),
            exact: Box::new(derived::x_projector),
            engine: |m| m.x,
            whitelist: &[Discrepancy::ProjectorNormalization, Discrepancy::XProjectorMissingCoupling],
        },
        FormCheck {
            name: "px_py_projector",
            printed: Box::new(closedform::cf_pxpy_proj),
            exact: Box::new(derived::pxpy_projector),
            engine: |m| m.px_py,
            whitelist: &[Discrepancy::ProjectorNormalization],
        },
        FormCheck {
            name: "y_projector_exact",
            printed: Box::new(derived::y_projector),
            exact: Box::new(derived::y_projector),
            engine: |m| m.y,
            whitelist: &[],
        },
        FormCheck {
            name: "w_projector_exact",
            printed: Box::new(|inp| Ok(derived::w_projector(inp))),
            exact: Box::new(|inp| Ok(derived::w_projector(inp))),
            engine: |m| m.w_norm,
            whitelist: &[],
        },
    ]
}

fn cross_engine(b: &mut Builder, opts: &VerifyOptions, grid_tol: f64) {
    for kind in [PairKind::Involutory, PairKind::Projector] {
        let scenarios = random_scenarios(opts.seed, opts.pairs, kind);
        let forms = match kind {
            PairKind::Involutory => involutory_forms(),
            PairKind::Projector => projector_forms(),
        };
        let mut expm = Worst::default();
        let mut grid = Worst::default();
        let mut printed: Vec<Worst> = forms.iter().map(|_| Worst::default()).collect();
        let mut exact: Vec<Worst> = forms.iter().map(|_| Worst::default()).collect();
        let sigma = 1.0;
        for (k, s) in scenarios.iter().enumerate() {
            let wv = match weak_value_set(&s.pre, &s.post, &s.a, &s.b) {
                Ok(wv) => wv,
                Err(e) => {
                    expm.fail(format!("pair {k}: {e}"));
                    continue;
                }
            };
            for &u in &COUPLINGS {
                let g = u * sigma;
                let at = |field: &str| format!("pair {k}, g/sigma {u}, {field}");
                let engine = match postselect(&s.pre, &s.post, &s.a, &s.b, g, sigma).and_then(|p| p.moments()) {
                    Ok(m) => m,
                    Err(e) => {
                        expm.fail(format!("{}: {e}", at("engine")));
                        continue;
                    }
                };
                match expm_moments(&s.pre, &s.post, &s.a, &s.b, g, sigma) {
                    Ok(m) => compare_reports(&mut expm, &engine, &m, &at),
                    Err(e) => expm.fail(format!("{}: {e}", at("expm"))),
                }
                if !opts.fast {
                    let spec = GridSpec::new(opts.grid_n, DEFAULT_EXTENT_SIGMAS * sigma);
                    match spec.and_then(|spec| grid_run(&s.pre, &s.post, &s.a, &s.b, g, sigma, spec)) {
                        Ok(m) => compare_reports(&mut grid, &engine, &m, &at),
                        Err(e) => grid.fail(format!("{}: {e}", at("grid"))),
                    }
                }
                let inp = ClosedFormInputs::new(wv, g, sigma).expect("finite coupling, positive width");
                for (i, f) in forms.iter().enumerate() {
                    let target = (f.engine)(&engine);
                    match (f.printed)(&inp) {
                        Ok(v) => printed[i].add(rel_diff(v, target), || at(f.name)),
                        Err(e) => printed[i].fail(format!("{}: {e}", at(f.name))),
                    }
                    match (f.exact)(&inp) {
                        Ok(v) => exact[i].add(rel_diff(v, target), || at(f.name)),
                        Err(e) => exact[i].fail(format!("{}: {e}", at(f.name))),
                    }
                }
            }
        }
        let name = kind_name(kind);
        b.threshold("engine_vs_expm", format!("moments_{name}"), &expm, ANALYTIC_TOL);
        if opts.fast {
            b.push("engine_vs_grid", format!("moments_{name}"), Status::Skipped, "skipped (--fast)".into());
        } else {
            b.threshold("engine_vs_grid", format!("moments_{name}_n{}", opts.grid_n), &grid, grid_tol);
        }
        for (i, f) in forms.iter().enumerate() {
            b.printed("engine_vs_closed_form", f.name, &printed[i], &exact[i], ANALYTIC_TOL, f.whitelist);
        }
    }
}

fn series_checks(b: &mut Builder, opts: &VerifyOptions) {
    let sigma = 1.0;
    let scenarios = random_scenarios(opts.seed, 5.min(opts.pairs.max(1)), PairKind::Involutory);

    // second-order joint inference error scales as (g/sigma)^2
    let couplings = logspace(1e-3, 1e-1, 9);
    let mut worst_r2 = 1.0_f64;
    let mut problems = vec![];
    for (k, s) in scenarios.iter().enumerate() {
        let run = || -> Result<f64> {
            let wv = weak_value_set(&s.pre, &s.post, &s.a, &s.b)?;
            let mut t = vec![];
            let mut err = vec![];
            for &g in &couplings {
                let xy = postselect(&s.pre, &s.post, &s.a, &s.b, g, sigma)?.moments()?.xy;
                let inp = ClosedFormInputs::new(wv, g, sigma)?;
                err.push((closedform::rs_second_order(&inp, xy)? - wv.ab_w.re).abs());
                t.push((g / sigma).powi(2));
            }
            Ok(fit_proportional(&t, &err)?.r_squared)
        };
        match run() {
            Ok(r2) => worst_r2 = worst_r2.min(r2),
            Err(e) => problems.push(format!("pair {k}: {e}")),
        }
    }
    let status = if problems.is_empty() && worst_r2 >= 0.999 { Status::Pass } else { Status::Fail };
    let c = b.push(
        "series",
        "second_order_joint_inference",
        status,
        format!("min R^2 of error ~ C (g/sigma)^2 over {} pairs: {worst_r2:.6} (need >= 0.999){}", scenarios.len(), if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }),
    );
    c.value = Some(worst_r2);
    c.tolerance = Some(0.999);

    // cubic coefficient of <X>_fi against the printed bracket
    let gs = linspace(1e-3, 1e-2, 5);
    let mut worst = Worst::default();
    for (k, s) in scenarios.iter().enumerate() {
        let run = || -> Result<f64> {
            let wv = weak_value_set(&s.pre, &s.post, &s.a, &s.b)?;
            let mut u = vec![];
            let mut y = vec![];
            for &g in &gs {
                let x = postselect(&s.pre, &s.post, &s.a, &s.b, g, sigma)?.moments()?.x;
                u.push(g * g);
                y.push(x / g);
            }
            // odd polynomial through g^7: a g^5-truncated fit leaves a bias
            // of order c7 (g/sigma)^4 ~ 1e-8 at the top of the window
            let c = polyfit(&u, &y, 3)?;
            let printed = closedform::x_inv_cubic_bracket(&wv) / (4.0 * sigma * sigma);
            Ok((c[1] - printed).abs() / printed.abs().max(1.0))
        };
        match run() {
            Ok(e) => worst.add(e, || format!("pair {k}")),
            Err(e) => worst.fail(format!("pair {k}: {e}")),
        }
    }
    b.threshold("series", "x_cubic_coefficient", &worst, 1e-8);

    // single-pointer inference of a real joint weak value
    let (status, detail, value) = match infer_joint_scaling(opts.seed) {
        Ok((e1, e2, ab)) => {
            let ratio = e1 / e2;
            let ok = e1 < 1e-12 || (3.5..=4.5).contains(&ratio);
            (
                if ok { Status::Pass } else { Status::Fail },
                format!(
                    "(AB)_w = {ab:.6}; error {e1:.3e} at g/sigma 0.05 and {e2:.3e} at 0.025 (ratio {ratio:.3}, quadratic => 4)"
                ),
                Some(e1),
            )
        }
        Err(e) => (Status::Fail, e.to_string(), None),
    };
    let c = b.push("series", "infer_joint_from_single", status, detail);
    c.value = value;
}

/// Real scenario for joint inference: `sigma_z` on each qubit between real
/// random states. Returns the inference errors at `g/sigma = 0.05, 0.025` and
/// the true joint weak value.
pub fn infer_joint_scaling(seed: u64) -> Result<(f64, f64, f64)> {
    let mut rng = seeded(seed.wrapping_add(99));
    let id = Operator::identity(2);
    let (a, b) = (Operator::pauli_z().tensor(&id), id.tensor(&Operator::pauli_z()));
    let (pre, post, wv) = loop {
        let (pre, post) = (random_real_ket(&mut rng, 4), random_real_ket(&mut rng, 4));
        if postselect_probability(&pre, &post) < MIN_POSTSELECT_PROB {
            continue;
        }
        let wv = weak_value_set(&pre, &post, &a, &b)?;
        if wv.b_w.re.abs() > 0.1 {
            break (pre, post, wv);
        }
    };
    let err = |g: f64| -> Result<f64> {
        let x = postselect(&pre, &post, &a, &b, g, 1.0)?.moments()?.x;
        let inferred = closedform::infer_joint_from_single(x, &ClosedFormInputs::new(wv, g, 1.0)?)?;
        Ok((inferred - wv.ab_w.re).abs())
    };
    Ok((err(0.05)?, err(0.025)?, wv.ab_w.re))
}

fn hardy_checks(b: &mut Builder) {
    match build_scenario(Meter::Continuous { sigma: 1.0 }).and_then(|s| weak_value_table(&s)) {
        Ok(t) => {
            let expected = [1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, -1.0];
            let err = t.values().iter().zip(expected).fold(t.max_imag, |m, (v, e)| m.max((v - e).abs()));
            let status = if err <= 1e-15 { Status::Pass } else { Status::Fail };
            let c = b.push("hardy", "weak_value_table", status, format!("{:?}, max dev {err:.1e}", t.values()));
            c.value = Some(err);
            c.tolerance = Some(1e-15);
        }
        Err(e) => {
            b.push("hardy", "weak_value_table", Status::Fail, e.to_string());
        }
    }
    if let Err(e) = hardy_continuous(b) {
        b.push("hardy_continuous", "evaluation", Status::Fail, e.to_string());
    }
    if let Err(e) = hardy_discrete(b) {
        b.push("hardy_discrete", "evaluation", Status::Fail, e.to_string());
    }
}

fn probabilities(s: &HardyScenario, g: f64) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (i, case) in HardyCase::ALL.iter().enumerate() {
        out[i] = match s.meter {
            Meter::Continuous { .. } => p_continuous(s, *case, g)?.engine,
            Meter::Qubit => p_discrete(s, *case, g)?.engine,
        };
    }
    Ok(out)
}

fn within(b: &mut Builder, group: &'static str, name: &str, value: f64, tol: f64, detail: String, whitelist: &[Discrepancy]) {
    let status = if value <= tol {
        Status::Pass
    } else if whitelist.is_empty() {
        Status::Fail
    } else {
        Status::Documented
    };
    let c = b.push(group, name, status, detail);
    c.value = Some(value);
    c.tolerance = Some(tol);
    if status == Status::Documented {
        c.discrepancies = whitelist.iter().map(|d| d.id()).collect();
    }
}

/// Shared P1 / symmetry checks over a sweep.
fn sweep_shape(b: &mut Builder, group: &'static str, s: &HardyScenario, couplings: &[f64]) -> Result<()> {
    let (mut p1, mut sym) = (0.0_f64, 0.0_f64);
    for &g in couplings {
        let p = probabilities(s, g)?;
        p1 = p1.max(p[0].abs());
        sym = sym.max((p[1] - p[2]).abs());
    }
    within(b, group, "p1_vanishes", p1, 1e-12, format!("max |P1| = {p1:.1e} over {} couplings", couplings.len()), &[]);
    within(b, group, "p2_equals_p3", sym, 1e-12, format!("max |P2 - P3| = {sym:.1e}"), &[]);
    Ok(())
}

fn weak_limits(b: &mut Builder, group: &'static str, s: &HardyScenario, g: f64, whitelist: &[Discrepancy]) -> Result<()> {
    let p = probabilities(s, g)?;
    let target = HardyCase::ALL.map(|c| c.weak_limit());
    let dev = p.iter().zip(target).fold(0.0_f64, |m, (v, t)| m.max((v - t).abs()));
    within(b, group, "weak_limits", dev, 1e-4, format!("P({g}) = {p:.6?}, target {target:?}"), whitelist);
    Ok(())
}

fn hardy_continuous(b: &mut Builder) -> Result<()> {
    let group = "hardy_continuous";
    let s = build_scenario(Meter::Continuous { sigma: 1.0 })?;
    let couplings = default_continuous_couplings(1.0);
    sweep_shape(b, group, &s, &couplings)?;
    weak_limits(b, group, &s, 1e-2, &[])?;
    let root = bisect(|g| Ok(p_continuous(&s, HardyCase::ApartApart, g)?.engine), 1.5, 1.8, 1e-12)?;
    within(b, group, "p4_zero_crossing", (root - 1.6651).abs(), 5e-4, format!("root at g/sigma = {root:.10}, expected 1.6651"), &[]);
    let p = probabilities(&s, 5.0)?;
    let dev = p[1..].iter().fold(0.0_f64, |m, v| m.max((v - 1.0 / 3.0).abs()));
    within(b, group, "plateau_one_third", dev, 1e-3, format!("P2..P4 at g/sigma = 5: {:.6?}", &p[1..]), &[]);
    let mut worst = Worst::default();
    for &g in &couplings {
        for case in HardyCase::ALL {
            let pt = p_continuous(&s, case, g)?;
            worst.add(rel_diff(pt.engine, pt.closed_form), || format!("P{} at g = {g:.4e}", case.id()));
        }
    }
    b.threshold(group, "closed_form_agreement", &worst, ANALYTIC_TOL);
    Ok(())
}

/// Published discrete spot values at `g = 1`.
pub const DISCRETE_SPOT: [(HardyCase, f64); 2] = [(HardyCase::OverlapApart, 1.05185), (HardyCase::ApartApart, -1.10371)];

fn hardy_discrete(b: &mut Builder) -> Result<()> {
    let group = "hardy_discrete";
    let doc = [Discrepancy::HardyDiscreteClosedForm];
    let s = build_scenario(Meter::Qubit)?;
    sweep_shape(b, group, &s, &default_discrete_couplings())?;
    weak_limits(b, group, &s, 1e-2, &doc)?;
    let root = bisect(|g| Ok(p_discrete(&s, HardyCase::ApartApart, g)?.engine), 1.2, 1.9, 1e-12)?;
    within(b, group, "p4_zero_crossing", (root - PI / 2.0).abs(), 1e-6, format!("root at g = {root:.12}, expected pi/2"), &[]);
    for (case, expected) in DISCRETE_SPOT {
        let v = p_discrete(&s, case, 1.0)?.engine;
        within(
            b,
            group,
            &format!("spot_p{}", case.id()),
            (v - expected).abs(),
            1e-4,
            format!("P{}(1) = {v:.6}, published {expected}", case.id()),
            &doc,
        );
    }
    let mut printed = Worst::default();
    let mut exact = Worst::default();
    for g in [0.01, 0.3, 1.0, 2.0] {
        for case in HardyCase::ALL {
            // compare meter shifts, before the division by g^2
            let engine = p_discrete(&s, case, g)?.engine * g * g;
            let wv = s.weak_values(case)?;
            let at = || format!("P{} at g = {g}", case.id());
            match p_discrete_transcription(&s, case, g) {
                Ok(v) => printed.add(rel_diff(v * g * g, engine), at),
                Err(e) => printed.fail(format!("{}: {e}", at())),
            }
            exact.add(rel_diff(qubit_meter::derived::hardy_qubit(&wv, g)?, engine), at);
        }
    }
    b.printed(group, "printed_general_form", &printed, &exact, ANALYTIC_TOL, &doc);
    Ok(())
}

fn random_qubit_scenario(rng: &mut crate::random::ScenarioRng) -> Result<QubitMeterScenario> {
    let (pre, post) = random_pre_post(rng, 4, MIN_POSTSELECT_PROB);
    let (pa, pb) = random_commuting_pair(rng, PairKind::Projector);
    let meter = random_ket(rng, 4);
    let (s1, s2) = (random_qubit_involution(rng), random_qubit_involution(rng));
    let g = 2.0 * PI * rand::Rng::random::<f64>(rng);
    QubitMeterScenario::new(pre, post, pa, pb, meter, s1, s2, g)
}

fn qubit_checks(b: &mut Builder, opts: &VerifyOptions) {
    let group = "qubit_meter";
    let mut rng = seeded(opts.seed.wrapping_add(7));
    let (mut construction, mut unitarity, mut period) = (Worst::default(), Worst::default(), Worst::default());
    let (mut printed, mut exact) = (Worst::default(), Worst::default());
    for k in 0..100 {
        let run = |construction: &mut Worst,
                   unitarity: &mut Worst,
                   period: &mut Worst,
                   printed: &mut Worst,
                   exact: &mut Worst,
                   s: &QubitMeterScenario|
         -> Result<()> {
            let at = || format!("scenario {k}, g = {:.4}", s.g());
            construction.add(construction_residual(s)?, at);
            unitarity.add((evolve_total(s)?.norm_sqr() - 1.0).abs(), at);
            let shifted = evolve_total(&s.with_coupling(s.g() + 2.0 * PI)?)?;
            period.add((shifted.vector() - evolve_total(s)?.vector()).camax(), at);
            let wv: WeakValueSet = s.weak_values()?;
            let (s1, s2) = s.meter_couplings();
            let out = evolve_postselect_qubit(s)?;
            let engine = meter_expectation(&out.state, s.meter_init(), &(&s1 * &s2))?;
            let moments = s.meter_moments();
            match qubit_meter::cf_qubit_joint(&wv, s.g(), moments) {
                Ok(r) => printed.add(rel_diff(r.value - moments.joint, engine), at),
                Err(e) => printed.fail(format!("{}: {e}", at())),
            }
            exact.add(rel_diff(qubit_meter::derived::qubit_joint(&wv, s.g(), moments)?, engine), at);
            Ok(())
        };
        let result = random_qubit_scenario(&mut rng)
            .and_then(|s| run(&mut construction, &mut unitarity, &mut period, &mut printed, &mut exact, &s));
        if let Err(e) = result {
            construction.fail(format!("scenario {k}: {e}"));
        }
    }
    b.threshold(group, "eta_vs_expm", &construction, QUBIT_TOL);
    b.threshold(group, "unitarity", &unitarity, QUBIT_TOL);
    b.threshold(group, "two_pi_periodicity", &period, 1e-10);
    b.printed(group, "printed_joint_form", &printed, &exact, ANALYTIC_TOL, &[Discrepancy::QubitJointTranscription]);
}

fn single_pointer_checks(b: &mut Builder) {
    for g in [0.01, 0.1] {
        match single_pointer_probe(PI / 6.0, g, 1.0, 1e-6) {
            Ok(r) => {
                let status = if r.matches_joint { Status::Pass } else { Status::Documented };
                let c = b.push("single_pointer", format!("tilted_g{g}"), status, r.finding.clone());
                c.value = Some(r.estimate);
                if status == Status::Documented {
                    c.discrepancies = vec![Discrepancy::SinglePointerImaginaryJoint.id()];
                }
            }
            Err(e) => {
                b.push("single_pointer", format!("tilted_g{g}"), Status::Fail, e.to_string());
            }
        }
    }
}

fn determinism_check(b: &mut Builder) {
    let couplings = default_continuous_couplings(1.0);
    let run = || super::commands::hardy_table(Meter::Continuous { sigma: 1.0 }, &couplings).map(|t| t.to_csv_string());
    let (status, detail) = match (run(), run()) {
        (Ok(x), Ok(y)) if x == y => (Status::Pass, format!("two Hardy tables, {} bytes each, identical", x.len())),
        (Ok(_), Ok(_)) => (Status::Fail, "repeated Hardy tables differ".into()),
        (Err(e), _) | (_, Err(e)) => (Status::Fail, e.to_string()),
    };
    b.push("determinism", "hardy_table", status, detail);
}

/// Runs the whole suite.
pub fn run_verify(opts: &VerifyOptions) -> VerifyReport {
    let grid_tol = if opts.grid_n >= FULL_GRID_N { GRID_TOL } else { GRID_TOL_RELAXED };
    let mut b = Builder { checks: vec![] };
    cross_engine(&mut b, opts, grid_tol);
    series_checks(&mut b, opts);
    hardy_checks(&mut b);
    qubit_checks(&mut b, opts);
    single_pointer_checks(&mut b);
    determinism_check(&mut b);
    let mut summary = Summary::default();
    for c in &b.checks {
        match c.status {
            Status::Pass => summary.pass += 1,
            Status::Fail => summary.fail += 1,
            Status::Documented => summary.documented += 1,
            Status::Skipped => summary.skipped += 1,
        }
    }
    VerifyReport {
        seed: opts.seed,
        pairs: opts.pairs,
        fast: opts.fast,
        grid_n: (!opts.fast).then_some(opts.grid_n),
        grid_tolerance: (!opts.fast).then_some(grid_tol),
        grid_tolerance_relaxed: !opts.fast && grid_tol > GRID_TOL,
        checks: b.checks,
        summary,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_difference() {
        assert_eq!(rel_diff(1.0, 1.0), 0.0);
        assert!((rel_diff(2.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((rel_diff(1e-5, 0.0) - 1e-2).abs() < 1e-15);
    }

    #[test]
    fn fast_run_skips_grid_and_reports_every_group() {
        let opts = VerifyOptions { fast: true, pairs: 3, ..VerifyOptions::default() };
        let r = run_verify(&opts);
        let groups: std::collections::BTreeSet<_> = r.checks.iter().map(|c| c.group).collect();
        for g in ["engine_vs_expm", "engine_vs_grid", "engine_vs_closed_form", "series", "hardy", "hardy_continuous", "hardy_discrete", "qubit_meter", "single_pointer", "determinism"] {
            assert!(groups.contains(g), "missing group {g}");
        }
        assert!(r.checks.iter().filter(|c| c.group == "engine_vs_grid").all(|c| c.status == Status::Skipped));
        let failed: Vec<_> = r.checks.iter().filter(|c| c.status == Status::Fail).map(|c| format!("{}/{}: {}", c.group, c.name, c.detail)).collect();
        assert!(failed.is_empty(), "{failed:#?}");
    }
}
