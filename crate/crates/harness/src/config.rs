//! Run configuration: a TOML file plus command-line overrides.

use std::path::Path;

use missbench_core::evalpipe::ProtocolConfig;
use missbench_core::missingness::SamplerParams;
use missbench_core::predictors::{PredictorConfig, PredictorKind};
use missbench_core::seed::sha256_hex;
use missbench_core::{SamplerKind, SamplerSpec};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "MISSBENCH_WORKERS";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Worker threads; falls back to the environment, then to the number of CPUs.
    pub workers: Option<usize>,
    pub samplers: Vec<SamplerKind>,
    pub predictors: Vec<PredictorKind>,
    pub protocol: ProtocolConfig,
    pub sampler_params: SamplerParams,
    #[serde(rename = "predictor")]
    pub predictor_config: PredictorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            workers: None,
            samplers: SamplerKind::ALL.to_vec(),
            predictors: PredictorKind::ALL.to_vec(),
            protocol: ProtocolConfig::default(),
            sampler_params: SamplerParams::default(),
            predictor_config: PredictorConfig::default(),
        }
    }
}

/// Command-line values that win over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub retention: Option<f64>,
    pub repeats: Option<usize>,
    pub folds: Option<usize>,
    pub samplers: Option<Vec<SamplerKind>>,
    pub predictors: Option<Vec<PredictorKind>>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(w) = o.workers {
            self.workers = Some(w);
        }
        if let Some(r) = o.retention {
            self.protocol.retention = r;
        }
        if let Some(r) = o.repeats {
            self.protocol.repeats = r;
        }
        if let Some(f) = o.folds {
            self.protocol.folds = f;
        }
        if let Some(s) = &o.samplers {
            self.samplers = s.clone();
        }
        if let Some(p) = &o.predictors {
            self.predictors = p.clone();
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let err = |m: String| Err(HarnessError::Config(m));
        if let Err(e) = self.protocol.validate() {
            return err(e.to_string());
        }
        if let Err(e) = self.predictor_config.validate() {
            return err(e.to_string());
        }
        if self.samplers.is_empty() || self.predictors.is_empty() {
            return err("at least one sampler and one predictor are required".into());
        }
        if self.workers == Some(0) {
            return err("workers must be positive".into());
        }
        for &kind in &self.samplers {
            if let Err(e) = self.spec(kind).validate() {
                return err(e.to_string());
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(d) = self.samplers.iter().find(|s| !seen.insert(s.name())) {
            return err(format!("sampler {d} listed twice"));
        }
        let mut seen = std::collections::BTreeSet::new();
        if let Some(d) = self.predictors.iter().find(|p| !seen.insert(p.name())) {
            return err(format!("predictor {d} listed twice"));
        }
        Ok(())
    }

    pub fn spec(&self, kind: SamplerKind) -> SamplerSpec {
        SamplerSpec::with_params(kind, self.sampler_params)
    }

    /// Worker count from the config, then the environment, then the CPU count.
    pub fn resolved_workers(&self) -> Result<usize, HarnessError> {
        if let Some(w) = self.workers {
            return Ok(w);
        }
        if let Ok(v) = std::env::var(WORKERS_ENV) {
            return match v.trim().parse::<usize>() {
                Ok(w) if w > 0 => Ok(w),
                _ => Err(HarnessError::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
            };
        }
        Ok(std::thread::available_parallelism().map_or(1, |n| n.get()))
    }

    /// Fingerprint of everything that influences results. The worker count
    /// is left out because it cannot change any output byte.
    pub fn fingerprint(&self) -> String {
        let mut canonical = self.clone();
        canonical.workers = None;
        let text = toml::to_string(&canonical).expect("config serializes");
        sha256_hex(text.as_bytes())
    }
}
