//! Run configuration read from a TOML document.
//!
//! ```toml
//! command = "moments"          # optional; must match the subcommand if given
//! output = "moments.json"      # optional; --out takes precedence
//!
//! [scenario]
//! pre = [[1, 0], [0, 0], [0, 0], [0, 0]]     # complex amplitudes as [re, im]
//! post = [[0.8, 0], [0, 0], [0, 0.6], [0, 0]]
//! a = ["sigma_x", "identity"]                # tensor product of factors
//! b = ["identity", "sigma_z"]
//! meter = "continuous"                       # or "qubit"
//! sigma = 1.0
//! g = 0.5
//! g_range = [1e-3, 5, 200, "log"]            # or "linear"
//! grid_n = 512
//! ```
//!
//! Observables are a builtin name (`sigma_x`, `sigma_y`, `sigma_z`,
//! `identity`), `{ proj = [...] }` for the projector on a ket,
//! `{ matrix = [[...], ...] }` with complex entries, or a list of factors.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::Error;
use crate::hilbert::{Ket, Operator, Tensor, C64};
use crate::series::{linspace, logspace};

/// A complex number written as `[re, im]`.
pub type ComplexPair = [f64; 2];

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandName {
    Weakvalue,
    Moments,
    Sweep,
    Hardy,
    Verify,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Weakvalue => "weakvalue",
            CommandName::Moments => "moments",
            CommandName::Sweep => "sweep",
            CommandName::Hardy => "hardy",
            CommandName::Verify => "verify",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeterKind {
    #[default]
    Continuous,
    Qubit,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Builtin(String),
    Projector { proj: Vec<ComplexPair> },
    Matrix { matrix: Vec<Vec<ComplexPair>> },
    Product(Vec<ObservableSpec>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Linear,
}

/// `[lo, hi, n, spacing]`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(try_from = "(f64, f64, usize, Spacing)")]
pub struct GRange {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub spacing: Spacing,
}

impl TryFrom<(f64, f64, usize, Spacing)> for GRange {
    type Error = String;
    fn try_from((lo, hi, n, spacing): (f64, f64, usize, Spacing)) -> Result<Self, String> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(format!("g_range bounds must satisfy lo < hi, got [{lo}, {hi}]"));
        }
        if n < 1 {
            return Err("g_range needs at least one sample".into());
        }
        if spacing == Spacing::Log && lo <= 0.0 {
            return Err(format!("log-spaced g_range needs lo > 0, got {lo}"));
        }
        Ok(GRange { lo, hi, n, spacing })
    }
}

impl GRange {
    pub fn samples(&self) -> Vec<f64> {
        match self.spacing {
            Spacing::Log => logspace(self.lo, self.hi, self.n),
            Spacing::Linear => linspace(self.lo, self.hi, self.n),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub pre: Option<Vec<ComplexPair>>,
    pub post: Option<Vec<ComplexPair>>,
    pub a: Option<ObservableSpec>,
    pub b: Option<ObservableSpec>,
    #[serde(default)]
    pub meter: MeterKind,
    pub sigma: Option<f64>,
    pub g: Option<f64>,
    pub g_range: Option<GRange>,
    pub grid_n: Option<usize>,
    pub meter_init: Option<Vec<ComplexPair>>,
    pub coupling_a: Option<ObservableSpec>,
    pub coupling_b: Option<ObservableSpec>,
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<CommandName>,
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub scenario: ScenarioConfig,
}

/// Configuration problems, reported with the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{key}`: {reason}")]
    Invalid { key: String, reason: String },
    #[error("missing required key `{0}`")]
    Missing(String),
}

fn invalid(key: &str, reason: impl ToString) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), reason: reason.to_string() }
}

/// Parses and validates every supplied field.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string().split_whitespace().collect::<Vec<_>>().join(" ")))?;
    cfg.scenario.validate()?;
    Ok(cfg)
}

fn to_ket(key: &str, amps: &[ComplexPair]) -> Result<Ket, ConfigError> {
    Ket::new(amps.iter().map(|[re, im]| C64::new(*re, *im)).collect()).map_err(|e| invalid(key, e))
}

fn normalized_ket(key: &str, amps: &[ComplexPair]) -> Result<Ket, ConfigError> {
    let ket = to_ket(key, amps)?;
    ket.require_normalized().map_err(|e| invalid(key, e))?;
    Ok(ket)
}

fn build_observable(key: &str, spec: &ObservableSpec) -> Result<Operator, ConfigError> {
    let op = match spec {
        ObservableSpec::Builtin(name) => match name.as_str() {
            "sigma_x" => Operator::pauli_x(),
            "sigma_y" => Operator::pauli_y(),
            "sigma_z" => Operator::pauli_z(),
            "identity" => Operator::identity(2),
            other => return Err(invalid(key, format!("unknown builtin observable `{other}`"))),
        },
        ObservableSpec::Projector { proj } => {
            let ket = normalized_ket(key, proj)?;
            Operator::projector(&ket).map_err(|e| invalid(key, e))?
        }
        ObservableSpec::Matrix { matrix } => {
            let rows: Vec<Vec<C64>> =
                matrix.iter().map(|r| r.iter().map(|[re, im]| C64::new(*re, *im)).collect()).collect();
            Operator::from_rows(&rows).map_err(|e| invalid(key, e))?
        }
        ObservableSpec::Product(factors) => {
            let mut it = factors.iter();
            let first = it.next().ok_or_else(|| invalid(key, "empty tensor product"))?;
            let mut acc = build_observable(key, first)?;
            for f in it {
                acc = acc.tensor(&build_observable(key, f)?);
            }
            acc
        }
    };
    op.require_hermitian().map_err(|e| invalid(key, e))?;
    Ok(op)
}

impl ScenarioConfig {
    fn validate(&self) -> Result<(), ConfigError> {
        let pre = self.pre.as_deref().map(|p| normalized_ket("scenario.pre", p)).transpose()?;
        let post = self.post.as_deref().map(|p| normalized_ket("scenario.post", p)).transpose()?;
        if let (Some(pre), Some(post)) = (&pre, &post) {
            if pre.dim() != post.dim() {
                return Err(invalid("scenario.post", Error::DimensionMismatch { expected: pre.dim(), found: post.dim() }));
            }
        }
        for (key, spec) in [("scenario.a", &self.a), ("scenario.b", &self.b)] {
            if let Some(spec) = spec {
                let op = build_observable(key, spec)?;
                if let Some(pre) = &pre {
                    if op.dim() != pre.dim() {
                        return Err(invalid(key, Error::DimensionMismatch { expected: pre.dim(), found: op.dim() }));
                    }
                }
            }
        }
        if let Some(s) = self.sigma {
            if !(s.is_finite() && s > 0.0) {
                return Err(invalid("scenario.sigma", format!("must be positive, got {s}")));
            }
        }
        if let Some(g) = self.g {
            if !g.is_finite() {
                return Err(invalid("scenario.g", "must be finite"));
            }
        }
        if let Some(n) = self.grid_n {
            if !n.is_power_of_two() || n < crate::grid_oracle::MIN_N {
                return Err(invalid("scenario.grid_n", format!("must be a power of two >= 256, got {n}")));
            }
        }
        if let Some(m) = &self.meter_init {
            let k = normalized_ket("scenario.meter_init", m)?;
            if k.dim() != 4 {
                return Err(invalid("scenario.meter_init", "two-qubit meter state needs 4 amplitudes"));
            }
        }
        for (key, spec) in [("scenario.coupling_a", &self.coupling_a), ("scenario.coupling_b", &self.coupling_b)] {
            if let Some(spec) = spec {
                let op = build_observable(key, spec)?;
                op.require_involutory().map_err(|e| invalid(key, e))?;
                if op.dim() != 2 {
                    return Err(invalid(key, "meter coupling must act on one qubit"));
                }
            }
        }
        Ok(())
    }

    pub fn pre(&self) -> Result<Ket, ConfigError> {
        normalized_ket("scenario.pre", self.pre.as_deref().ok_or_else(|| ConfigError::Missing("scenario.pre".into()))?)
    }

    pub fn post(&self) -> Result<Ket, ConfigError> {
        normalized_ket("scenario.post", self.post.as_deref().ok_or_else(|| ConfigError::Missing("scenario.post".into()))?)
    }

    pub fn observable_a(&self) -> Result<Operator, ConfigError> {
        build_observable("scenario.a", self.a.as_ref().ok_or_else(|| ConfigError::Missing("scenario.a".into()))?)
    }

    pub fn observable_b(&self) -> Result<Operator, ConfigError> {
        build_observable("scenario.b", self.b.as_ref().ok_or_else(|| ConfigError::Missing("scenario.b".into()))?)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma.unwrap_or(1.0)
    }

    pub fn coupling(&self) -> Result<f64, ConfigError> {
        self.g.ok_or_else(|| ConfigError::Missing("scenario.g".into()))
    }

    pub fn meter_init(&self) -> Result<Ket, ConfigError> {
        match &self.meter_init {
            Some(m) => normalized_ket("scenario.meter_init", m),
            None => Ok(Ket::basis(4, 0)),
        }
    }

    pub fn meter_coupling(&self, first: bool) -> Result<Operator, ConfigError> {
        let (key, spec) = if first {
            ("scenario.coupling_a", &self.coupling_a)
        } else {
            ("scenario.coupling_b", &self.coupling_b)
        };
        match spec {
            Some(s) => build_observable(key, s),
            None => Ok(Operator::pauli_x()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_hardy_config() {
        let cfg = parse_config("command = \"hardy\"\n[scenario]\nmeter = \"continuous\"\nsigma = 1\n").unwrap();
        assert_eq!(cfg.command, Some(CommandName::Hardy));
        assert_eq!(cfg.scenario.meter, MeterKind::Continuous);
        assert_eq!(cfg.scenario.sigma(), 1.0);
    }

    #[test]
    fn rejects_unnormalized_pre() {
        let err = parse_config("[scenario]\npre = [[1, 0], [1, 0]]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid { ref key, .. } if key == "scenario.pre"), "{err}");
    }

    #[test]
    fn log_range_has_requested_samples() {
        let cfg = parse_config("[scenario]\ng_range = [1e-3, 5, 200, \"log\"]\n").unwrap();
        let g = cfg.scenario.g_range.unwrap().samples();
        assert_eq!(g.len(), 200);
        assert!((g[0] - 1e-3).abs() < 1e-18 && (g[199] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(parse_config("[scenario]\nsgima = 1\n"), Err(ConfigError::Parse(_))));
        assert!(matches!(parse_config("colour = 1\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = parse_config("[scenario]\nsigma = = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn observable_forms() {
        let cfg = parse_config(
            "[scenario]\npre = [[1,0],[0,0],[0,0],[0,0]]\na = [\"sigma_x\", \"identity\"]\nb = { proj = [[0,0],[1,0],[0,0],[0,0]] }\n",
        )
        .unwrap();
        let a = cfg.scenario.observable_a().unwrap();
        assert_eq!(a.dim(), 4);
        assert!(crate::hilbert::classify(&cfg.scenario.observable_b().unwrap()).idempotent);
        let bad = parse_config("[scenario]\na = \"sigma_w\"\n").unwrap_err();
        assert!(bad.to_string().contains("scenario.a"));
        let non_herm = parse_config("[scenario]\na = { matrix = [[[0,0],[1,0]],[[0,0],[0,0]]] }\n");
        assert!(non_herm.is_err());
    }

    #[test]
    fn bad_ranges_rejected() {
        assert!(parse_config("[scenario]\ng_range = [0, 5, 10, \"log\"]\n").is_err());
        assert!(parse_config("[scenario]\ng_range = [5, 1, 10, \"linear\"]\n").is_err());
        assert!(parse_config("[scenario]\ngrid_n = 300\n").is_err());
    }
}
