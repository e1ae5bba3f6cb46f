//! Hardy's two-interferometer setup: states, path projectors, the weak-value
//! table and the four joint weak probabilities as functions of coupling.
//!
//! Each particle lives in the path space spanned by `|O> = (1, 0)` and
//! `|NO> = (0, 1)`; the two-particle space is ordered `A (x) B`.
//!
//! Continuous meter: the probabilities are `<dQ>/g^2` with
//! `dQ = XY - sigma^4 PxPy`, where `sigma` is the width appearing in the
//! pointer amplitude `exp(-x^2 / 2 sigma^2)`. The Gaussian engine is
//! parametrized by the amplitude `exp(-x^2 / 4 s^2)`, so it runs at
//! `s = sigma / sqrt 2`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussian_meter::postselect_projector;
use crate::hilbert::{Ket, Operator, Tensor, C64};
use crate::qubit_meter::{
    cf_hardy_qubit, evolve_postselect_qubit, hardy_meter_observable, meter_expectation,
    QubitMeterScenario,
};
use crate::series::{fit_proportional, logspace};
use crate::weakvalue::{weak_value, weak_value_set, WeakValueSet};

/// Pointer attached to the two path projectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Meter {
    Continuous { sigma: f64 },
    Qubit,
}

/// The four joint path events, numbered as in the usual presentation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HardyCase {
    /// both particles in the overlapping arms
    OverlapOverlap = 1,
    /// A overlapping, B not
    OverlapApart = 2,
    /// A not overlapping, B overlapping
    ApartOverlap = 3,
    /// neither overlapping
    ApartApart = 4,
}

impl HardyCase {
    pub const ALL: [HardyCase; 4] =
        [HardyCase::OverlapOverlap, HardyCase::OverlapApart, HardyCase::ApartOverlap, HardyCase::ApartApart];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        HardyCase::ALL
            .iter()
            .copied()
            .find(|c| c.id() == id)
            .ok_or_else(|| Error::InvalidArgument(format!("Hardy case must be 1..=4, got {id}")))
    }

    /// Limit of the joint weak probability at vanishing coupling.
    pub fn weak_limit(self) -> f64 {
        match self {
            HardyCase::OverlapOverlap => 0.0,
            HardyCase::OverlapApart | HardyCase::ApartOverlap => 1.0,
            HardyCase::ApartApart => -1.0,
        }
    }
}

impl fmt::Display for HardyCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.id())
    }
}

/// States and path projectors of the setup.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyScenario {
    pub pre: Ket,
    pub post: Ket,
    pub p_overlap: Operator,
    pub p_apart: Operator,
    pub meter: Meter,
}

/// Builds the pre-selection `(|O,NO> + |NO,O> + |NO,NO>)/sqrt 3` and the
/// post-selection `(|O> - |NO>)(|O> - |NO>)/2`.
pub fn build_scenario(meter: Meter) -> Result<HardyScenario> {
    if let Meter::Continuous { sigma } = meter {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
    }
    let third = 1.0 / 3.0_f64.sqrt();
    // basis order |O,O>, |O,NO>, |NO,O>, |NO,NO>
    let pre = Ket::from_real(&[0.0, third, third, third])?;
    let minus = Ket::from_real(&[FRAC_1_SQRT_2, -FRAC_1_SQRT_2])?;
    let post = minus.tensor(&minus);
    Ok(HardyScenario {
        pre,
        post,
        p_overlap: Operator::projector(&Ket::basis(2, 0))?,
        p_apart: Operator::projector(&Ket::basis(2, 1))?,
        meter,
    })
}

impl HardyScenario {
    /// Path projector lifted to particle A.
    pub fn on_a(&self, overlap: bool) -> Operator {
        let p = if overlap { &self.p_overlap } else { &self.p_apart };
        p.tensor(&Operator::identity(2))
    }

    /// Path projector lifted to particle B.
    pub fn on_b(&self, overlap: bool) -> Operator {
        let p = if overlap { &self.p_overlap } else { &self.p_apart };
        Operator::identity(2).tensor(p)
    }

    /// `(P_A (x) I, I (x) P_B)` for a case.
    pub fn pair(&self, case: HardyCase) -> (Operator, Operator) {
        let (a_over, b_over) = match case {
            HardyCase::OverlapOverlap => (true, true),
            HardyCase::OverlapApart => (true, false),
            HardyCase::ApartOverlap => (false, true),
            HardyCase::ApartApart => (false, false),
        };
        (self.on_a(a_over), self.on_b(b_over))
    }

    pub fn weak_values(&self, case: HardyCase) -> Result<WeakValueSet> {
        let (a, b) = self.pair(case);
        weak_value_set(&self.pre, &self.post, &a, &b)
    }

    fn sigma(&self) -> Result<f64> {
        match self.meter {
            Meter::Continuous { sigma } => Ok(sigma),
            Meter::Qubit => Err(Error::InvalidArgument("scenario has a qubit meter".into())),
        }
    }
}

/// The eight single and joint path weak values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakValueTable {
    pub overlap_a: f64,
    pub overlap_b: f64,
    pub apart_a: f64,
    pub apart_b: f64,
    pub overlap_overlap: f64,
    pub overlap_apart: f64,
    pub apart_overlap: f64,
    pub apart_apart: f64,
    /// Largest imaginary part among the eight.
    pub max_imag: f64,
}

impl WeakValueTable {
    /// In the order `O_A, O_B, NO_A, NO_B, O_A O_B, O_A NO_B, NO_A O_B, NO_A NO_B`.
    pub fn values(&self) -> [f64; 8] {
        [
            self.overlap_a,
            self.overlap_b,
            self.apart_a,
            self.apart_b,
            self.overlap_overlap,
            self.overlap_apart,
            self.apart_overlap,
            self.apart_apart,
        ]
    }

    pub const LABELS: [&'static str; 8] =
        ["P_OA", "P_OB", "P_NOA", "P_NOB", "P_OA*P_OB", "P_OA*P_NOB", "P_NOA*P_OB", "P_NOA*P_NOB"];
}

pub fn weak_value_table(s: &HardyScenario) -> Result<WeakValueTable> {
    let w = |op: &Operator| weak_value(&s.pre, &s.post, op);
    let singles = [w(&s.on_a(true))?, w(&s.on_b(true))?, w(&s.on_a(false))?, w(&s.on_b(false))?];
    let mut joints = [C64::new(0.0, 0.0); 4];
    for (slot, case) in joints.iter_mut().zip(HardyCase::ALL) {
        let (a, b) = s.pair(case);
        *slot = w(&(&a * &b))?;
    }
    let max_imag = singles.iter().chain(&joints).fold(0.0_f64, |m, z| m.max(z.im.abs()));
    Ok(WeakValueTable {
        overlap_a: singles[0].re,
        overlap_b: singles[1].re,
        apart_a: singles[2].re,
        apart_b: singles[3].re,
        overlap_overlap: joints[0].re,
        overlap_apart: joints[1].re,
        apart_overlap: joints[2].re,
        apart_apart: joints[3].re,
        max_imag,
    })
}

/// Joint weak probability from the exact engine, with the published closed
/// form alongside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardyPoint {
    pub engine: f64,
    pub closed_form: f64,
}

fn require_positive_g(g: f64) -> Result<()> {
    if g.is_finite() && g > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("g must be positive, got {g}")))
    }
}

/// Published continuous-meter probability as a function of `u = g^2/sigma^2`.
pub fn p_continuous_closed_form(case: HardyCase, g: f64, sigma: f64) -> f64 {
    let u = (g / sigma).powi(2);
    let (e4, e2) = ((u / 4.0).exp(), (u / 2.0).exp());
    let den = 2.0 - 4.0 * e4 + 3.0 * e2;
    match case {
        HardyCase::OverlapOverlap => 0.0,
        HardyCase::OverlapApart | HardyCase::ApartOverlap => (1.0 - e4 + e2) / den,
        HardyCase::ApartApart => (e2 - 2.0 * e4) / den,
    }
}

/// `<XY>_fi - w <PxPy>_fi` divided by `g^2`, with the engine at pointer width
/// `engine_sigma`.
fn delta_q_over_g2(s: &HardyScenario, case: HardyCase, g: f64, engine_sigma: f64, weight: f64) -> Result<f64> {
    let (a, b) = s.pair(case);
    let m = postselect_projector(&s.pre, &s.post, &a, &b, g, engine_sigma)?.moments()?;
    Ok((m.xy - weight * m.px_py) / (g * g))
}

/// Continuous-meter joint weak probability.
pub fn p_continuous(s: &HardyScenario, case: HardyCase, g: f64) -> Result<HardyPoint> {
    require_positive_g(g)?;
    let sigma = s.sigma()?;
    let engine = delta_q_over_g2(s, case, g, sigma * FRAC_1_SQRT_2, sigma.powi(4))?;
    Ok(HardyPoint { engine, closed_form: p_continuous_closed_form(case, g, sigma) })
}

/// The same observable with `sigma` read as the pointer width of the Gaussian
/// engine (`exp(-x^2/4 sigma^2)`), for comparison.
pub fn p_continuous_engine_width(s: &HardyScenario, case: HardyCase, g: f64) -> Result<f64> {
    require_positive_g(g)?;
    let sigma = s.sigma()?;
    delta_q_over_g2(s, case, g, sigma, sigma.powi(4))
}

/// Published discrete-meter probability.
pub fn p_discrete_closed_form(case: HardyCase, g: f64) -> f64 {
    let (c, c2) = (g.cos(), (2.0 * g).cos());
    let den = 8.0 * c - 3.0 * c2 - 7.0;
    match case {
        HardyCase::OverlapOverlap => 0.0,
        HardyCase::OverlapApart | HardyCase::ApartOverlap => (2.0 * c - c2 - 3.0) / den,
        HardyCase::ApartApart => (4.0 * c - c2 - 1.0) / den,
    }
}

/// Qubit-meter scenario for a Hardy case: `sigma_x` couplings, meter in `|00>`.
pub fn qubit_scenario(s: &HardyScenario, case: HardyCase, g: f64) -> Result<QubitMeterScenario> {
    let (a, b) = s.pair(case);
    QubitMeterScenario::new(
        s.pre.clone(),
        s.post.clone(),
        a,
        b,
        Ket::basis(4, 0),
        Operator::pauli_x(),
        Operator::pauli_x(),
        g,
    )
}

/// Discrete-meter joint weak probability.
pub fn p_discrete(s: &HardyScenario, case: HardyCase, g: f64) -> Result<HardyPoint> {
    require_positive_g(g)?;
    if g >= PI {
        return Err(Error::InvalidArgument(format!("g must lie in (0, pi), got {g}")));
    }
    let q = qubit_scenario(s, case, g)?;
    let out = evolve_postselect_qubit(&q)?;
    let shift = meter_expectation(&out.state, q.meter_init(), &hardy_meter_observable())?;
    Ok(HardyPoint { engine: shift / (g * g), closed_form: p_discrete_closed_form(case, g) })
}

/// The printed general discrete expression, divided by `g^2`.
pub fn p_discrete_transcription(s: &HardyScenario, case: HardyCase, g: f64) -> Result<f64> {
    require_positive_g(g)?;
    Ok(cf_hardy_qubit(&s.weak_values(case)?, g)?.value / (g * g))
}

/// One sweep sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HardySample {
    pub g: f64,
    pub engine: f64,
    pub closed_form: f64,
}

/// Probability curve of one case over a coupling sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct HardyCurve {
    pub case: HardyCase,
    pub meter: Meter,
    pub samples: Vec<HardySample>,
}

/// Default continuous sweep: 200 log-spaced `g/sigma` in `[1e-3, 5]`.
pub fn default_continuous_couplings(sigma: f64) -> Vec<f64> {
    logspace(1e-3, 5.0, 200).into_iter().map(|u| u * sigma).collect()
}

/// Default discrete sweep: 200 evenly spaced interior points of `(0, pi)`.
pub fn default_discrete_couplings() -> Vec<f64> {
    (1..=200).map(|k| PI * k as f64 / 201.0).collect()
}

pub fn sweep(s: &HardyScenario, case: HardyCase, couplings: &[f64]) -> Result<HardyCurve> {
    let samples = couplings
        .iter()
        .map(|&g| {
            let p = match s.meter {
                Meter::Continuous { .. } => p_continuous(s, case, g)?,
                Meter::Qubit => p_discrete(s, case, g)?,
            };
            Ok(HardySample { g, engine: p.engine, closed_form: p.closed_form })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(HardyCurve { case, meter: s.meter, samples })
}

/// Small-coupling behaviour of one curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeakLimitReport {
    pub case_id: u8,
    pub target: f64,
    /// Dimensionless coupling of the largest sample used.
    pub probe: f64,
    pub value_at_probe: f64,
    pub deviation: f64,
    /// Fitted `C` in `|P - target| = C (g/sigma)^2`.
    pub quadratic_coeff: f64,
    pub r_squared: f64,
    pub samples_used: usize,
}

/// Fits the approach of the engine curve to its weak limit over samples with
/// dimensionless coupling at most `probe_max`.
pub fn weak_limit_check(curve: &HardyCurve, probe_max: f64) -> Result<WeakLimitReport> {
    let scale = match curve.meter {
        Meter::Continuous { sigma } => sigma,
        Meter::Qubit => 1.0,
    };
    let used: Vec<&HardySample> =
        curve.samples.iter().filter(|s| s.g / scale <= probe_max * (1.0 + 1e-12)).collect();
    if used.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "weak-limit check needs at least two samples with coupling <= {probe_max}"
        )));
    }
    let target = curve.case.weak_limit();
    let t: Vec<f64> = used.iter().map(|s| (s.g / scale).powi(2)).collect();
    let dev: Vec<f64> = used.iter().map(|s| (s.engine - target).abs()).collect();
    let last = used.iter().max_by(|a, b| a.g.total_cmp(&b.g)).expect("non-empty");
    let (quadratic_coeff, r_squared) = if dev.iter().all(|d| *d <= 1e-13) {
        (0.0, 1.0)
    } else {
        let fit = fit_proportional(&t, &dev)?;
        (fit.coeff, fit.r_squared)
    };
    Ok(WeakLimitReport {
        case_id: curve.case.id(),
        target,
        probe: last.g / scale,
        value_at_probe: last.engine,
        deviation: (last.engine - target).abs(),
        quadratic_coeff,
        r_squared,
        samples_used: used.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weakvalue::postselect_probability;

    fn continuous() -> HardyScenario {
        build_scenario(Meter::Continuous { sigma: 1.0 }).unwrap()
    }

    #[test]
    fn states_and_projectors() {
        let s = continuous();
        let overlap = s.post.inner(&s.pre);
        assert!((overlap - C64::from(-1.0 / (2.0 * 3.0_f64.sqrt()))).norm() < 1e-15);
        assert!((postselect_probability(&s.pre, &s.post) - 1.0 / 12.0).abs() < 1e-15);
        assert_eq!(s.pre.amplitudes()[0], C64::new(0.0, 0.0));
        let sum = &s.p_overlap + &s.p_apart;
        assert!(sum.distance(&Operator::identity(2)) < 1e-15);
    }

    #[test]
    fn weak_value_table_entries() {
        let t = weak_value_table(&continuous()).unwrap();
        let expected = [1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, -1.0];
        for (v, e) in t.values().iter().zip(expected) {
            assert!((v - e).abs() < 1e-15, "{v} vs {e}");
        }
        assert!(t.max_imag < 1e-15);
        let joint_sum: f64 = t.values()[4..].iter().sum();
        assert!((joint_sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn continuous_spot_values() {
        let s = continuous();
        let p2 = p_continuous(&s, HardyCase::OverlapApart, 1.0).unwrap();
        assert!((p2.engine - p2.closed_form).abs() < 1e-12);
        assert!((p2.closed_form - 0.753949723504627).abs() < 1e-12);
        let p4 = p_continuous(&s, HardyCase::ApartApart, 1.0).unwrap();
        assert!((p4.engine - (-0.507899447009255)).abs() < 1e-12);
        let p1 = p_continuous(&s, HardyCase::OverlapOverlap, 0.37).unwrap();
        assert!(p1.engine.abs() < 1e-12);
    }

    #[test]
    fn discrete_case_one_vanishes() {
        let s = build_scenario(Meter::Qubit).unwrap();
        for &g in &[0.1, 1.0, 2.0] {
            assert!(p_discrete(&s, HardyCase::OverlapOverlap, g).unwrap().engine.abs() < 1e-12);
        }
        assert!(p_discrete(&s, HardyCase::OverlapApart, PI).is_err());
    }

    #[test]
    fn continuous_weak_limit() {
        let s = continuous();
        let curve = sweep(&s, HardyCase::ApartApart, &logspace(1e-3, 1e-2, 8)).unwrap();
        let rep = weak_limit_check(&curve, 1e-2).unwrap();
        assert!(rep.deviation < 1e-4);
        assert!(rep.r_squared > 0.999);
    }

    #[test]
    fn case_ids_round_trip() {
        for c in HardyCase::ALL {
            assert_eq!(HardyCase::from_id(c.id()).unwrap(), c);
        }
        assert!(HardyCase::from_id(5).is_err());
    }
}
