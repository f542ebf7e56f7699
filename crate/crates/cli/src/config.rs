use std::fs;
use std::path::{Path, PathBuf};

use arlda::suite::{self, OracleKind, ProblemId, SuiteProblem};
use arlda::{AccuracyFloor, AccuracyMaxima, AlgoConstants, OuterFunction, OuterKind};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(CliError::Config(format!("unknown format '{other}' (expected csv or json)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloorConfig {
    pub f: f64,
    pub g: f64,
    pub c: f64,
    #[serde(rename = "J")]
    pub j: f64,
}

/// Optional replacements for individual algorithm constants.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstantOverrides {
    pub eta1: Option<f64>,
    pub eta2: Option<f64>,
    pub gamma1: Option<f64>,
    pub gamma2: Option<f64>,
    pub gamma3: Option<f64>,
    pub alpha: Option<f64>,
    pub kappa_omega: Option<f64>,
    pub gamma_eps: Option<f64>,
    pub sigma_min: Option<f64>,
    /// Same cap for all four accuracies.
    pub eps_max: Option<f64>,
}

/// Everything a solve, sweep or audit needs. Mirrors the command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemId,
    pub dim: Option<usize>,
    pub h: Option<OuterKind>,
    pub h_weight: Option<f64>,
    pub oracle: OracleKind,
    pub seed: u64,
    pub floors: FloorConfig,
    pub epsilon: Vec<f64>,
    pub monotonic: bool,
    pub max_iters: Option<usize>,
    pub sigma0: Option<f64>,
    pub constants: ConstantOverrides,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            problem: ProblemId::Quad,
            dim: None,
            h: None,
            h_weight: None,
            oracle: OracleKind::Exact,
            seed: 0,
            floors: FloorConfig::default(),
            epsilon: Vec::new(),
            monotonic: false,
            max_iters: None,
            sigma0: None,
            constants: ConstantOverrides::default(),
            out: None,
            format: OutputFormat::Csv,
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 1e-4;

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn epsilons(&self) -> Vec<f64> {
        if self.epsilon.is_empty() {
            vec![DEFAULT_EPSILON]
        } else {
            self.epsilon.clone()
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for &e in &self.epsilons() {
            if !(e > 0.0 && e < 1.0) {
                return Err(CliError::Config(format!("epsilon must lie in (0,1), got {e}")));
            }
        }
        let fl = self.floors;
        if [fl.f, fl.g, fl.c, fl.j].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CliError::Config("floors must be finite and nonnegative".into()));
        }
        if let Some(w) = self.h_weight {
            if !(w.is_finite() && w >= 0.0) {
                return Err(CliError::Config(format!("h weight must be finite and nonnegative, got {w}")));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<SuiteProblem<f64>, CliError> {
        let p = suite::build::<f64>(self.problem, self.dim)?;
        if self.h.is_none() && self.h_weight.is_none() {
            return Ok(p);
        }
        let kind = self.h.unwrap_or(p.spec.h.kind());
        let weight = self.h_weight.unwrap_or(p.spec.h.weight());
        let h = match kind {
            OuterKind::WeightedL1 => {
                let cw: Vec<f64> = (0..p.spec.m).map(|i| 1.0 + i as f64 / p.spec.m as f64).collect();
                OuterFunction::weighted_l1(weight, cw)
            }
            k => OuterFunction::new(k, weight),
        };
        Ok(p.with_outer(h))
    }

    pub fn floors(&self) -> AccuracyFloor<f64> {
        AccuracyFloor { floor_f: self.floors.f, floor_g: self.floors.g, floor_c: self.floors.c, floor_j: self.floors.j }
    }

    /// Constants for one solve at accuracy `epsilon`.
    pub fn constants_for(&self, epsilon: f64) -> Result<AlgoConstants<f64>, CliError> {
        let mut c = AlgoConstants::<f64>::default().with_epsilon(epsilon);
        let o = self.constants;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut c.eta1, o.eta1);
        set(&mut c.eta2, o.eta2);
        set(&mut c.gamma1, o.gamma1);
        set(&mut c.gamma2, o.gamma2);
        set(&mut c.gamma3, o.gamma3);
        set(&mut c.alpha, o.alpha);
        set(&mut c.gamma_eps, o.gamma_eps);
        set(&mut c.sigma_min, o.sigma_min);
        // κ_ω follows α and η₁ unless given explicitly.
        c.kappa_omega = o.kappa_omega.unwrap_or(c.alpha * c.eta1 / 3.0);
        if let Some(m) = o.eps_max {
            c.eps_max = AccuracyMaxima::uniform(m);
        }
        set(&mut c.sigma0, self.sigma0);
        if let Some(k) = self.max_iters {
            c.max_iterations = k;
        }
        c.monotonic = self.monotonic;
        c.validate()?;
        Ok(c)
    }
}
