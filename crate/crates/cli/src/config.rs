//! Experiment configuration (TOML).

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ssfm_core::engine::{AllPassSpec, NonlinearPhaseSpec, Propagator, StepScheme};
use ssfm_core::{capacity::energy_for_snr, ChannelParams, InputKind, SimulationGrid};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid: SimulationGrid,
    pub channel: ChannelSection,
    #[serde(default)]
    pub model: ModelSection,
    pub input: InputSection,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub beta2: f64,
    #[serde(default)]
    pub beta3: f64,
    pub gamma: f64,
    pub n_ase: f64,
    pub b_n: f64,
    /// Text file of L per-bin amplitude gains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub loss_profile_file: Option<PathBuf>,
    /// Text file of L per-bin noise-variance multipliers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_profile_file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub scheme: StepScheme,
    #[serde(default)]
    pub linear: AllPassSpec,
    /// Defaults to Kerr with `channel.gamma`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<NonlinearPhaseSpec>,
}

/// Launch distribution and level. Exactly one of `energy`, `power` and
/// `snr_db` sets the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSection {
    #[serde(flatten)]
    pub kind: InputKind,
    /// Block energy E0 (sum of |a|^2).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    /// Per-sample power P = E0 / L.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub realizations: usize,
    pub seed: u64,
    pub retain_trajectory: bool,
    /// Out-of-band power fraction for the bandwidth measurement.
    pub epsilon: f64,
    pub knn_k: usize,
    pub bootstrap_resamples: usize,
    /// Ensemble size for the entropy checks of `verify`.
    pub entropy_realizations: usize,
    /// Ensemble size for the rate estimate; defaults to `realizations`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mi_realizations: Option<usize>,
    /// Undo the accumulated dispersion before the auxiliary-channel fit.
    pub compensate_dispersion: bool,
    /// SNR points for `sweep` and `mi`.
    pub snr_db: Vec<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            realizations: 1000,
            seed: 0,
            retain_trajectory: false,
            epsilon: 1e-3,
            knn_k: 4,
            bootstrap_resamples: 100,
            entropy_realizations: 20_000,
            mi_realizations: None,
            compensate_dispersion: true,
            snr_db: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    /// Realizations written to the trajectory dump; all when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dump_realizations: Option<usize>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            dump_realizations: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads and validates a config; relative profile paths resolve against
    /// the config file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.channel.loss_profile_file, &mut cfg.channel.noise_profile_file]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.channel_params()?;
        let levels = [self.input.energy, self.input.power, self.input.snr_db];
        if levels.iter().flatten().count() > 1 {
            return Err(CliError::Config(
                "input: set only one of `energy`, `power`, `snr_db`".into(),
            ));
        }
        for (name, v) in [("input.energy", self.input.energy), ("input.power", self.input.power)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Config(format!("{name} must be > 0, got {v}")));
                }
            }
        }
        if self.run.realizations == 0 {
            return Err(CliError::Config("run.realizations must be >= 1".into()));
        }
        if !(self.run.epsilon > 0.0 && self.run.epsilon < 1.0) {
            return Err(CliError::Config(format!(
                "run.epsilon must lie in (0, 1), got {}",
                self.run.epsilon
            )));
        }
        if !(1..=20).contains(&self.run.knn_k) {
            return Err(CliError::Config(format!("run.knn_k must be in 1..=20, got {}", self.run.knn_k)));
        }
        if let Some(v) = self.run.snr_db.iter().find(|v| !v.is_finite()) {
            return Err(CliError::Config(format!("run.snr_db contains {v}")));
        }
        Ok(())
    }

    /// Channel parameters with profile files loaded.
    pub fn channel_params(&self) -> Result<ChannelParams, CliError> {
        let c = &self.channel;
        let params = ChannelParams {
            beta2: c.beta2,
            beta3: c.beta3,
            gamma: c.gamma,
            n_ase: c.n_ase,
            b_n: c.b_n,
            loss_profile: c.loss_profile_file.as_deref().map(read_profile).transpose()?,
            noise_profile: c.noise_profile_file.as_deref().map(read_profile).transpose()?,
        };
        params
            .validate_for(&self.grid)
            .map_err(|e| CliError::Config(format!("channel: {e}")))?;
        Ok(params)
    }

    pub fn nonlinear(&self) -> NonlinearPhaseSpec {
        self.model
            .nonlinear
            .clone()
            .unwrap_or_else(|| NonlinearPhaseSpec::kerr(self.channel.gamma))
    }

    pub fn propagator(&self) -> Result<Propagator, CliError> {
        Propagator::new(
            self.grid,
            self.channel_params()?,
            self.nonlinear(),
            self.model.linear.clone(),
            self.model.scheme,
        )
        .map_err(|e| CliError::Config(format!("model: {e}")))
    }

    /// Launch energy E0 from whichever level is configured.
    pub fn input_energy(&self) -> Result<f64, CliError> {
        let l = self.grid.num_samples() as f64;
        match (self.input.energy, self.input.power, self.input.snr_db) {
            (Some(e), _, _) => Ok(e),
            (_, Some(p), _) => Ok(p * l),
            (_, _, Some(db)) => self.energy_for_snr_db(db),
            _ => Err(CliError::Config(
                "input: one of `energy`, `power`, `snr_db` is required".into(),
            )),
        }
    }

    pub fn energy_for_snr_db(&self, snr_db: f64) -> Result<f64, CliError> {
        let params = self.channel_params()?;
        if params.n_ase == 0.0 {
            return Err(CliError::Config("an SNR level needs channel.n_ase > 0".into()));
        }
        Ok(energy_for_snr(db_to_linear(snr_db), &params, &self.grid))
    }

    pub fn mi_realizations(&self) -> usize {
        self.run.mi_realizations.unwrap_or(self.run.realizations)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Whitespace-, comma- or newline-separated numbers; `#` starts a comment.
pub fn read_profile(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()) {
            let v = tok.parse::<f64>().map_err(|_| {
                CliError::Config(format!("{}:{}: cannot parse `{tok}`", path.display(), i + 1))
            })?;
            out.push(v);
        }
    }
    Ok(out)
}
