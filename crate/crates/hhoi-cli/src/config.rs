//! Run configuration: defaults, the optional TOML file, presets and
//! command-line overrides, resolved in that order. The fully-resolved
//! configuration is echoed into every output so runs are reproducible
//! from their artifacts alone.

use serde::{Deserialize, Serialize};

use hhoi::diffusion::NoiseSchedule;
use hhoi::sampler::GuidanceConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub training: TrainingConfig,
    pub schedule: ScheduleConfig,
    pub guidance: GuidanceSection,
    pub network: NetworkConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub codec_epochs: usize,
    pub batch_size: usize,
    pub holdout_fraction: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleConfig {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GuidanceSection {
    pub steps: usize,
    pub t_guide: f64,
    pub lambda1_cap: f64,
    pub lambda1_coef: f64,
    pub lambda2_cap: f64,
    pub lambda2_coef: f64,
    pub stability_margin: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    /// `full` or `toy` (half-width score networks).
    pub score_width: String,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            threads: 1,
            training: TrainingConfig::default(),
            schedule: ScheduleConfig::default(),
            guidance: GuidanceSection::default(),
            network: NetworkConfig::default(),
        }
    }
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 20_000,
            codec_epochs: 300,
            batch_size: 500,
            holdout_fraction: 0.1,
        }
    }
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let s = NoiseSchedule::default();
        ScheduleConfig {
            sigma_min: s.sigma_min,
            sigma_max: s.sigma_max,
            epsilon: s.epsilon,
        }
    }
}

impl Default for GuidanceSection {
    fn default() -> Self {
        let g = GuidanceConfig::default();
        GuidanceSection {
            steps: g.steps,
            t_guide: g.t_guide,
            lambda1_cap: g.lambda1_cap,
            lambda1_coef: g.lambda1_coef,
            lambda2_cap: g.lambda2_cap,
            lambda2_coef: g.lambda2_coef,
            stability_margin: g.stability_margin,
        }
    }
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            score_width: "full".into(),
        }
    }
}

impl RunConfig {
    /// Desk-scale profile: short schedules, half-width score networks,
    /// both worker threads.
    pub fn apply_toy_preset(&mut self) {
        self.training.epochs = 300;
        self.training.codec_epochs = 80;
        self.guidance.steps = 200;
        self.network.score_width = "toy".into();
        self.threads = 2;
    }

    pub fn schedule(&self) -> hhoi::Result<NoiseSchedule> {
        NoiseSchedule::new(
            self.schedule.sigma_min,
            self.schedule.sigma_max,
            self.schedule.epsilon,
        )
    }

    pub fn guidance(&self) -> GuidanceConfig {
        GuidanceConfig {
            steps: self.guidance.steps,
            t_guide: self.guidance.t_guide,
            lambda1_cap: self.guidance.lambda1_cap,
            lambda1_coef: self.guidance.lambda1_coef,
            lambda2_cap: self.guidance.lambda2_cap,
            lambda2_coef: self.guidance.lambda2_coef,
            stability_margin: self.guidance.stability_margin,
        }
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// Load (optional file) → preset → seed fallback chain.
pub fn resolve_config(
    file: Option<&std::path::Path>,
    preset: Option<&str>,
    seed_flag: Option<u64>,
) -> Result<RunConfig, String> {
    let mut config = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
            toml::from_str::<RunConfig>(&text).map_err(|e| format!("bad config file: {e}"))?
        }
        None => RunConfig::default(),
    };
    match preset {
        Some("toy") => config.apply_toy_preset(),
        Some(other) => return Err(format!("unknown preset {other:?} (expected: toy)")),
        None => {}
    }
    // seed precedence: flag > config file > HHOI_SEED > default
    if let Some(seed) = seed_flag {
        config.seed = seed;
    } else if config.seed == 0 {
        if let Ok(env_seed) = std::env::var("HHOI_SEED") {
            config.seed = env_seed
                .parse()
                .map_err(|_| format!("HHOI_SEED is not an integer: {env_seed:?}"))?;
        }
    }
    Ok(config)
}
