use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::manifold::{StandardLoopParams, DEFAULT_SAMPLES, MIN_SAMPLES};
use crate::dynamics_oracle::DEFAULT_STEPS_PER_SAMPLE;

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SpinBerry,
    GhoUncoupled,
    HybridSpinOsc,
    HybridGho,
    FullQuantum,
    OracleQuantum,
    OracleClassical,
    Fig1,
    Fig2,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SpinBerry => "spin-berry",
            Experiment::GhoUncoupled => "gho-uncoupled",
            Experiment::HybridSpinOsc => "hybrid-spin-osc",
            Experiment::HybridGho => "hybrid-gho",
            Experiment::FullQuantum => "full-quantum",
            Experiment::OracleQuantum => "oracle-quantum",
            Experiment::OracleClassical => "oracle-classical",
            Experiment::Fig1 => "fig1",
            Experiment::Fig2 => "fig2",
        }
    }

    /// Parameters a sweep may vary for this experiment.
    pub fn sweepable(self) -> &'static [&'static str] {
        match self {
            Experiment::SpinBerry => &["theta", "b"],
            Experiment::GhoUncoupled => &["epsilon"],
            Experiment::HybridSpinOsc => &["lambda", "j_action", "epsilon"],
            Experiment::HybridGho => &["k", "d", "epsilon", "j_action"],
            Experiment::FullQuantum => &["k", "d", "epsilon"],
            Experiment::OracleQuantum => &["slowness", "theta"],
            Experiment::OracleClassical => &["slowness", "epsilon"],
            Experiment::Fig1 | Experiment::Fig2 => &[],
        }
    }
}

/// Spin in a field traversing a cone of half-angle `theta` about the B3 axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinParams {
    pub mu: f64,
    pub b: f64,
    pub theta: f64,
    pub cycles: usize,
}

impl Default for SpinParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            b: 1.0,
            theta: PI / 2.0,
            cycles: 1,
        }
    }
}

/// Spin coupled to a classical GHO; the field azimuth and the GHO triple
/// `(a mu (1 + eps cos), -a eps sin, a/mu (1 - eps cos))` share one unit period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpinOscParams {
    pub mu: f64,
    pub lambda: f64,
    pub b: f64,
    pub i_plus: f64,
    pub i_minus: f64,
    pub j_action: f64,
    pub a: f64,
    pub mu_osc: f64,
    pub epsilon: f64,
}

impl Default for SpinOscParams {
    fn default() -> Self {
        Self {
            mu: 1.0,
            lambda: 0.05,
            b: 1.0,
            i_plus: 0.5,
            i_minus: 0.5,
            j_action: 1.0,
            a: 2.0,
            mu_osc: 1.0,
            epsilon: 0.5,
        }
    }
}

/// Quantum numbers of the fully quantum coupled oscillators.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FullQuantumParams {
    /// Level of the light (`q`) oscillator.
    pub light: u32,
    /// Level of the heavy (`Q`) oscillator.
    pub heavy: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Linear,
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub parameter: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    #[serde(default = "linear")]
    pub scale: Scale,
}

fn linear() -> Scale {
    Scale::Linear
}

impl Sweep {
    pub fn values(&self) -> Vec<f64> {
        let n = self.count;
        (0..n)
            .map(|i| {
                let f = i as f64 / (n - 1) as f64;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * f,
                    Scale::Log => (self.start.ln() + (self.stop.ln() - self.start.ln()) * f).exp(),
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub n_samples: usize,
    pub slowness: f64,
    pub steps_per_sample: usize,
    /// Log-spaced coupling points per ratio in fig1/fig2 (a `K = 0` row is added).
    pub fig_points: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            n_samples: DEFAULT_SAMPLES,
            slowness: 1e3,
            steps_per_sample: DEFAULT_STEPS_PER_SAMPLE,
            fig_points: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputOptions {
    pub directory: PathBuf,
    pub emit_svg: bool,
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            emit_svg: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub standard: StandardLoopParams,
    /// Frequency ratios `(n1, n2)` for the figure sweeps.
    #[serde(default = "default_ratios")]
    pub ratios: Vec<(u32, u32)>,
    #[serde(default)]
    pub spin: SpinParams,
    #[serde(default)]
    pub spin_osc: SpinOscParams,
    #[serde(default)]
    pub full_quantum: FullQuantumParams,
    /// Initial `(Q, P)` of the classical oracle.
    #[serde(default = "default_initial")]
    pub initial: (f64, f64),
    #[serde(default)]
    pub sweep: Option<Sweep>,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default)]
    pub output: OutputOptions,
    #[serde(default)]
    pub seed: u64,
}

pub fn default_ratios() -> Vec<(u32, u32)> {
    vec![(1, 1), (2, 1), (1, 2)]
}

fn default_initial() -> (f64, f64) {
    (1.0, 0.0)
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            standard: StandardLoopParams::default(),
            ratios: default_ratios(),
            spin: SpinParams::default(),
            spin_osc: SpinOscParams::default(),
            full_quantum: FullQuantumParams::default(),
            initial: default_initial(),
            sweep: None,
            numerics: Numerics::default(),
            output: OutputOptions::default(),
            seed: 0,
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::ConfigInvalid(m));
        if self.numerics.n_samples < MIN_SAMPLES {
            return bad(format!("n_samples must be >= {MIN_SAMPLES}"));
        }
        if !(self.numerics.slowness > 0.0) {
            return bad("slowness must be positive".into());
        }
        if self.numerics.steps_per_sample == 0 {
            return bad("steps_per_sample must be >= 1".into());
        }
        if matches!(self.experiment, Experiment::Fig1 | Experiment::Fig2) {
            if self.ratios.is_empty() {
                return bad("ratios must not be empty".into());
            }
            if self.numerics.fig_points < 2 {
                return bad("fig_points must be >= 2".into());
            }
            if self.sweep.is_some() {
                return bad("fig1/fig2 use their own coupling grid; remove `sweep`".into());
            }
        }
        for &(a, b) in &self.ratios {
            if a == 0 || b == 0 {
                return bad(format!("ratio ({a}, {b}) has a zero entry"));
            }
        }
        if let Some(s) = &self.sweep {
            if s.count < 2 {
                return bad(format!("sweep count must be >= 2, got {}", s.count));
            }
            if !self.experiment.sweepable().contains(&s.parameter.as_str()) {
                return bad(format!(
                    "parameter `{}` cannot be swept in {} (allowed: {:?})",
                    s.parameter,
                    self.experiment.name(),
                    self.experiment.sweepable()
                ));
            }
            if !s.start.is_finite() || !s.stop.is_finite() {
                return bad("sweep bounds must be finite".into());
            }
            if s.scale == Scale::Log && !(s.start > 0.0 && s.stop > 0.0) {
                return bad("log sweeps need positive bounds".into());
            }
        }
        self.standard
            .validate()
            .map_err(|e| CliError::ConfigInvalid(e.to_string()))?;
        Ok(())
    }

    /// Copy of the config with one swept parameter set.
    pub fn with_value(&self, parameter: &str, value: f64) -> Self {
        let mut c = self.clone();
        match parameter {
            "theta" => c.spin.theta = value,
            "b" => c.spin.b = value,
            "epsilon" => {
                c.standard.epsilon = value;
                c.spin_osc.epsilon = value;
            }
            "lambda" => c.spin_osc.lambda = value,
            "j_action" => {
                c.standard.j_action = value;
                c.spin_osc.j_action = value;
            }
            "k" => c.standard.k = value,
            "d" => c.standard.k = value * c.standard.k_scale(),
            "slowness" => c.numerics.slowness = value,
            _ => unreachable!("validated sweep parameter"),
        }
        c
    }
}
