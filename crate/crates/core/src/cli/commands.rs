//! Subcommand implementations. Each returns the bytes to emit; the binary
//! decides whether they go to a file or to stdout.

use std::path::PathBuf;

use serde::Serialize;

use super::config::{CommandName, MeterKind, RunConfig, ScenarioConfig};
use super::table::SweepTable;
use super::verify::{run_verify, VerifyOptions};
use super::CliError;
use crate::gaussian_meter::{postselect, MomentReport};
use crate::grid_oracle::{grid_run, GridSpec, DEFAULT_EXTENT_SIGMAS};
use crate::hardy::{
    build_scenario, default_continuous_couplings, default_discrete_couplings, p_continuous, p_discrete,
    HardyCase, HardyPoint, Meter,
};
use crate::hilbert::{Operator, C64};
use crate::momentum_oracle::expm_moments;
use crate::qubit_meter::{evolve_postselect_qubit, meter_expectation, QubitMeterScenario};
use crate::weakvalue::weak_value_set;

/// Largest fraction of sweep points allowed to be dropped as degenerate.
pub const MAX_DEGENERATE_FRACTION: f64 = 0.01;

/// Parsed command line.
#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub fast: bool,
    pub grid_n: Option<usize>,
}

/// What a command produced.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutput {
    /// Primary artifact (JSON or CSV).
    pub body: String,
    /// Human-readable lines for stderr; also printed to stdout by `verify`.
    pub log: Vec<String>,
    /// Set when the command ran but some check failed.
    pub failure: Option<String>,
}

impl CommandOutput {
    fn ok(body: String, log: Vec<String>) -> Self {
        CommandOutput { body, log, failure: None }
    }
}

/// Resolves the output path: `--out` wins over the config's `output`.
pub fn output_path(inv: &Invocation) -> Option<PathBuf> {
    inv.out.clone().or_else(|| inv.config.output.clone())
}

pub fn run(command: CommandName, inv: &Invocation) -> Result<CommandOutput, CliError> {
    if let Some(declared) = &inv.config.command {
        if *declared != command {
            return Err(CliError::Config(super::ConfigError::Invalid {
                key: "command".into(),
                reason: format!("config declares `{}` but `{}` was invoked", declared.as_str(), command.as_str()),
            }));
        }
    }
    if let Some(n) = inv.grid_n {
        if !n.is_power_of_two() || n < crate::grid_oracle::MIN_N {
            return Err(CliError::Config(super::ConfigError::Invalid {
                key: "--grid-n".into(),
                reason: format!("must be a power of two >= 256, got {n}"),
            }));
        }
    }
    match command {
        CommandName::Weakvalue => run_weakvalue(&inv.config.scenario),
        CommandName::Moments => run_moments(inv),
        CommandName::Sweep => run_sweep(&inv.config.scenario),
        CommandName::Hardy => run_hardy(&inv.config.scenario),
        CommandName::Verify => {
            let mut opts = VerifyOptions { fast: inv.fast, ..VerifyOptions::default() };
            if let Some(n) = inv.grid_n.or(inv.config.scenario.grid_n) {
                opts.grid_n = n;
            }
            if let Some(seed) = inv.config.scenario.seed {
                opts.seed = seed;
            }
            let report = run_verify(&opts);
            let body = serde_json::to_string_pretty(&report).map_err(|e| CliError::Internal(e.to_string()))? + "\n";
            let failure = (!report.passed()).then(|| format!("{} check(s) failed", report.summary.fail));
            Ok(CommandOutput { body, log: report.summary_lines(), failure })
        }
    }
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Serialize)]
struct WeakValueOutput {
    a_w: [f64; 2],
    b_w: [f64; 2],
    ab_w: [f64; 2],
    overlap: [f64; 2],
    postselect_prob: f64,
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map(|s| s + "\n").map_err(|e| CliError::Internal(e.to_string()))
}

fn run_weakvalue(sc: &ScenarioConfig) -> Result<CommandOutput, CliError> {
    let wv = weak_value_set(&sc.pre()?, &sc.post()?, &sc.observable_a()?, &sc.observable_b()?)?;
    let out = WeakValueOutput {
        a_w: pair(wv.a_w),
        b_w: pair(wv.b_w),
        ab_w: pair(wv.ab_w),
        overlap: pair(wv.overlap),
        postselect_prob: wv.postselect_prob,
    };
    Ok(CommandOutput::ok(to_json(&out)?, vec![]))
}

#[derive(Serialize)]
struct ContinuousMoments {
    meter: &'static str,
    g: f64,
    sigma: f64,
    engine: MomentReport,
    expm_oracle: MomentReport,
    grid_oracle: Option<MomentReport>,
    grid_n: Option<usize>,
}

#[derive(Serialize)]
struct QubitDisplacements {
    meter: &'static str,
    g: f64,
    first: f64,
    second: f64,
    joint: f64,
}

fn qubit_scenario(sc: &ScenarioConfig, g: f64) -> Result<QubitMeterScenario, CliError> {
    Ok(QubitMeterScenario::new(
        sc.pre()?,
        sc.post()?,
        sc.observable_a()?,
        sc.observable_b()?,
        sc.meter_init()?,
        sc.meter_coupling(true)?,
        sc.meter_coupling(false)?,
        g,
    )?)
}

/// `(<S1>, <S2>, <S1 S2>)` displacements of the post-selected qubit meter.
fn qubit_displacements(s: &QubitMeterScenario) -> Result<[f64; 3], CliError> {
    let out = evolve_postselect_qubit(s)?;
    let (s1, s2) = s.meter_couplings();
    let joint = &s1 * &s2;
    let shift = |m: &Operator| meter_expectation(&out.state, s.meter_init(), m);
    Ok([shift(&s1)?, shift(&s2)?, shift(&joint)?])
}

fn run_moments(inv: &Invocation) -> Result<CommandOutput, CliError> {
    let sc = &inv.config.scenario;
    let g = sc.coupling()?;
    match sc.meter {
        MeterKind::Continuous => {
            let (pre, post, a, b) = (sc.pre()?, sc.post()?, sc.observable_a()?, sc.observable_b()?);
            let sigma = sc.sigma();
            let engine = postselect(&pre, &post, &a, &b, g, sigma)?.moments()?;
            let expm_oracle = expm_moments(&pre, &post, &a, &b, g, sigma)?;
            let grid_n = if inv.fast { None } else { inv.grid_n.or(sc.grid_n) };
            let grid_oracle = match grid_n {
                Some(n) => {
                    let spec = GridSpec::new(n, DEFAULT_EXTENT_SIGMAS * sigma)?;
                    Some(grid_run(&pre, &post, &a, &b, g, sigma, spec)?)
                }
                None => None,
            };
            let out = ContinuousMoments { meter: "continuous", g, sigma, engine, expm_oracle, grid_oracle, grid_n };
            Ok(CommandOutput::ok(to_json(&out)?, vec![]))
        }
        MeterKind::Qubit => {
            let [first, second, joint] = qubit_displacements(&qubit_scenario(sc, g)?)?;
            let out = QubitDisplacements { meter: "qubit", g, first, second, joint };
            Ok(CommandOutput::ok(to_json(&out)?, vec![]))
        }
    }
}

fn dropped_log(table: &SweepTable) -> Vec<String> {
    table.dropped().iter().map(|(g, why)| format!("dropped g = {g:e}: {why}")).collect()
}

fn run_sweep(sc: &ScenarioConfig) -> Result<CommandOutput, CliError> {
    let range = sc.g_range.ok_or_else(|| super::ConfigError::Missing("scenario.g_range".into()))?;
    let couplings = range.samples();
    let table = match sc.meter {
        MeterKind::Continuous => {
            let (pre, post, a, b) = (sc.pre()?, sc.post()?, sc.observable_a()?, sc.observable_b()?);
            let sigma = sc.sigma();
            let mut table = SweepTable::new(std::iter::once("g").chain(MomentReport::FIELDS));
            for g in couplings {
                match postselect(&pre, &post, &a, &b, g, sigma).and_then(|s| s.moments()) {
                    Ok(m) => table.push(g, &m.values())?,
                    Err(e) => table.drop_point(g, e.to_string()),
                }
            }
            table
        }
        MeterKind::Qubit => {
            let base = qubit_scenario(sc, couplings[0])?;
            let mut table = SweepTable::new(["g", "s1", "s2", "s1s2"]);
            for g in couplings {
                match qubit_displacements(&base.with_coupling(g)?) {
                    Ok(v) => table.push(g, &v)?,
                    Err(e) => table.drop_point(g, e.to_string()),
                }
            }
            table
        }
    };
    Ok(CommandOutput::ok(table.to_csv_string(), dropped_log(&table)))
}

/// Header of the Hardy table.
pub const HARDY_COLUMNS: [&str; 9] = ["g", "P1", "P2", "P3", "P4", "P1_cf", "P2_cf", "P3_cf", "P4_cf"];

/// Hardy probabilities of all four cases over `couplings`.
pub fn hardy_table(meter: Meter, couplings: &[f64]) -> Result<SweepTable, CliError> {
    let s = build_scenario(meter)?;
    let mut table = SweepTable::new(HARDY_COLUMNS);
    for &g in couplings {
        let points: Result<Vec<HardyPoint>, _> = HardyCase::ALL
            .iter()
            .map(|&case| match meter {
                Meter::Continuous { .. } => p_continuous(&s, case, g),
                Meter::Qubit => p_discrete(&s, case, g),
            })
            .collect();
        match points {
            Ok(p) => {
                let row: Vec<f64> =
                    p.iter().map(|x| x.engine).chain(p.iter().map(|x| x.closed_form)).collect();
                table.push(g, &row)?;
            }
            Err(e) => table.drop_point(g, e.to_string()),
        }
    }
    let dropped = table.dropped().len();
    if dropped as f64 > MAX_DEGENERATE_FRACTION * couplings.len() as f64 {
        return Err(CliError::Degenerate(format!(
            "{dropped} of {} couplings gave degenerate pointer norms",
            couplings.len()
        )));
    }
    Ok(table)
}

fn run_hardy(sc: &ScenarioConfig) -> Result<CommandOutput, CliError> {
    let meter = match sc.meter {
        MeterKind::Continuous => Meter::Continuous { sigma: sc.sigma() },
        MeterKind::Qubit => Meter::Qubit,
    };
    let couplings = match (&sc.g_range, meter) {
        (Some(r), _) => r.samples(),
        (None, Meter::Continuous { sigma }) => default_continuous_couplings(sigma),
        (None, Meter::Qubit) => default_discrete_couplings(),
    };
    let table = hardy_table(meter, &couplings)?;
    Ok(CommandOutput::ok(table.to_csv_string(), dropped_log(&table)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::parse_config;

    fn invocation(text: &str) -> Invocation {
        Invocation { config: parse_config(text).unwrap(), ..Invocation::default() }
    }

    #[test]
    fn hardy_defaults_have_200_rows() {
        let out = run(CommandName::Hardy, &invocation("[scenario]\nmeter = \"continuous\"\nsigma = 1\n")).unwrap();
        let lines: Vec<&str> = out.body.lines().collect();
        assert_eq!(lines.len(), 201);
        assert_eq!(lines[0], HARDY_COLUMNS.join(","));
    }

    #[test]
    fn declared_command_must_match() {
        let err = run(CommandName::Sweep, &invocation("command = \"hardy\"\n")).unwrap_err();
        assert_eq!(err.kind(), "config");
    }

    #[test]
    fn sweep_requires_a_range() {
        let err = run(CommandName::Sweep, &invocation("[scenario]\n")).unwrap_err();
        assert!(err.to_string().contains("g_range"));
    }

    #[test]
    fn weakvalue_reports_all_three() {
        let text = "[scenario]\npre = [[1,0],[0,0],[0,0],[0,0]]\n\
                    post = [[0.5,0],[0.5,0],[0.5,0],[0.5,0]]\n\
                    a = [\"sigma_x\", \"identity\"]\nb = [\"identity\", \"sigma_x\"]\n";
        let out = run(CommandName::Weakvalue, &invocation(text)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&out.body).unwrap();
        assert_eq!(v["a_w"][0].as_f64().unwrap(), 1.0);
        assert_eq!(v["ab_w"][0].as_f64().unwrap(), 1.0);
        assert!((v["postselect_prob"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    }
}
