//! Run configuration shared by the engine, critic, baselines, and CLI.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// All tunables for one run. Loss weights `alpha`/`beta` follow the
/// critic's scoring rule `alpha * l_feas + beta * l_div`; they default
/// to 1.0 each since the balance is otherwise unspecified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Tree depth of each hypothesis (number of predicted steps).
    pub depth: usize,
    /// Branching factor requested from the generator per expansion.
    pub branching: usize,
    /// Last time step of the run; anchors must satisfy `t + depth <= horizon`.
    pub horizon: u32,
    pub alpha: f64,
    pub beta: f64,
    /// Offset sequences the critic draws per baseline trajectory.
    pub critic_samples: usize,
    /// Counterfactual survivors kept per baseline trajectory.
    pub critic_keep: usize,
    pub seed: u64,
    pub feedback_enabled: bool,
    /// Expand/enrich/integrate cycles per measurement window.
    pub iterations_per_window: usize,
    /// Generation rounds used by the guided-iteration baseline.
    pub giot_rounds: usize,
    /// Node budget guard for exhaustive enumeration.
    pub node_budget: u64,
    /// Fraction of each proposal batch the scripted generator devotes to
    /// near-miss infeasible candidates.
    pub miss_rate: f64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            depth: 4,
            branching: 4,
            horizon: 16,
            alpha: 1.0,
            beta: 1.0,
            critic_samples: 64,
            critic_keep: 8,
            seed: 42,
            feedback_enabled: true,
            iterations_per_window: 3,
            giot_rounds: 3,
            node_budget: 10_000_000,
            miss_rate: 0.25,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("branching must be at least 1")]
    ZeroBranching,
    #[error("critic_keep ({keep}) must not exceed critic_samples ({samples})")]
    KeepExceedsSamples { keep: usize, samples: usize },
    #[error("anchor time {anchor} plus depth {depth} exceeds horizon {horizon}")]
    DepthBeyondHorizon {
        anchor: u32,
        depth: usize,
        horizon: u32,
    },
    #[error("loss weights must be non-negative")]
    NegativeWeight,
    #[error("miss_rate must lie in [0, 1]")]
    MissRateRange,
}

impl RunConfig {
    /// Check the structural invariants; `anchor_time` is the earliest
    /// anchor the run will expand from.
    pub fn validate(&self, anchor_time: u32) -> Result<(), ConfigError> {
        if self.depth == 0 {
            return Err(ConfigError::ZeroDepth);
        }
        if self.branching == 0 {
            return Err(ConfigError::ZeroBranching);
        }
        if self.critic_keep > self.critic_samples {
            return Err(ConfigError::KeepExceedsSamples {
                keep: self.critic_keep,
                samples: self.critic_samples,
            });
        }
        if anchor_time as u64 + self.depth as u64 > self.horizon as u64 {
            return Err(ConfigError::DepthBeyondHorizon {
                anchor: anchor_time,
                depth: self.depth,
                horizon: self.horizon,
            });
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return Err(ConfigError::NegativeWeight);
        }
        if !(0.0..=1.0).contains(&self.miss_rate) {
            return Err(ConfigError::MissRateRange);
        }
        Ok(())
    }

    /// The ablation used by the plain tree-search baseline: no critic,
    /// no feedback.
    pub fn without_critic_and_feedback(&self) -> RunConfig {
        RunConfig {
            critic_samples: 0,
            critic_keep: 0,
            feedback_enabled: false,
            ..self.clone()
        }
    }

    /// Stable digest of the whole configuration, embedded in reports so
    /// evaluations never join runs produced under different settings.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        format!("{:016x}", crate::rng::mix_str(0x5eed_cafe_f00d_d1ce, &json))
    }
}
