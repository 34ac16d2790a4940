use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::estimators::{build_e2_data, build_e3_data, E2Data, E3Data, LogUniformSampler};
use crate::fem::{assemble, TruthSystem};
use crate::precision::TWO_PROD_USES_FMA;
use crate::reduced::{greedy_build, GreedyOptions, GreedyStep, ReducedModel};

pub const ARTIFACT_VERSION: u32 = 1;
pub const ARTIFACT_FILE: &str = "model.json";

/// Everything the online stage needs, serialized bit-exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub version: u32,
    pub config: ExperimentConfig,
    /// Whether the producing build used fused multiply-add in `two_prod`.
    pub fma: bool,
    pub history: Vec<GreedyStep>,
    pub model: ReducedModel,
    pub e2: E2Data,
    pub e3: E3Data,
}

impl Artifact {
    pub fn path_in(dir: &Path) -> PathBuf {
        dir.join(ARTIFACT_FILE)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Artifact(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: Self = serde_json::from_str(text).map_err(|e| Error::Artifact(e.to_string()))?;
        if a.version != ARTIFACT_VERSION {
            return Err(Error::Artifact(format!(
                "unsupported artifact version {} (expected {ARTIFACT_VERSION})",
                a.version
            )));
        }
        Ok(a)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Reassembles the truth system the model was built on.
    pub fn truth_system(&self) -> Result<TruthSystem> {
        let sys = assemble(self.config.n_cells)?;
        if sys.dim() != self.model.truth_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.model.truth_dim(),
                got: sys.dim(),
            });
        }
        Ok(sys)
    }

    /// Checks that `config` describes the same discretization and basis.
    pub fn check_config(&self, config: &ExperimentConfig) -> Result<()> {
        if config.n_cells != self.config.n_cells {
            return Err(Error::DimensionMismatch {
                expected: self.config.n_cells,
                got: config.n_cells,
            });
        }
        if config.rb_size != self.model.len() {
            return Err(Error::DimensionMismatch {
                expected: self.model.len(),
                got: config.rb_size,
            });
        }
        Ok(())
    }
}

/// Builds the artifact for `config` without touching the file system.
pub fn build_artifact(config: &ExperimentConfig) -> Result<Artifact> {
    config.validate()?;
    let sys = assemble(config.n_cells)?;
    let options = GreedyOptions {
        n_max: config.rb_size,
        ..Default::default()
    };
    let (model, history) = greedy_build(&sys, &config.training_grid(), options)?;
    if model.len() != config.rb_size {
        return Err(Error::Config(format!(
            "greedy stopped at N = {} before reaching rb_size = {}",
            model.len(),
            config.rb_size
        )));
    }
    let e2 = build_e2_data(&sys, &model)?;
    let sampler = LogUniformSampler {
        mu_min: config.mu_min,
        mu_max: config.mu_max,
    };
    let e3 = build_e3_data(&sys, &model, &sampler, config.seed, config.oversample)?;
    Ok(Artifact {
        version: ARTIFACT_VERSION,
        // Artifacts are location independent.
        config: ExperimentConfig {
            output_dir: PathBuf::new(),
            ..config.clone()
        },
        fma: TWO_PROD_USES_FMA,
        history,
        model,
        e2,
        e3,
    })
}

/// Offline stage: builds the artifact and writes it to `output_dir`.
pub fn run_offline(config: &ExperimentConfig) -> Result<Artifact> {
    let artifact = build_artifact(config)?;
    artifact.save(&Artifact::path_in(&config.output_dir))?;
    Ok(artifact)
}
