//! Run manifest: per-stage input/output counts, retention percentages,
//! the config hash, and start/finish timestamps.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StageCount {
    pub name: String,
    pub input_count: u64,
    pub output_count: u64,
    /// Output as a percentage of input (100.0 for a pass-through stage).
    pub retained_pct: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub started_at: String,
    pub finished_at: String,
    pub stages: Vec<StageCount>,
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        RunManifest {
            config_hash,
            started_at: litforge_core::report::utc_now(),
            finished_at: String::new(),
            stages: Vec::new(),
        }
    }

    pub fn record_stage(&mut self, name: &str, input_count: u64, output_count: u64) {
        let retained_pct = if input_count == 0 {
            100.0
        } else {
            (output_count as f64 / input_count as f64 * 1000.0).round() / 10.0
        };
        self.stages.push(StageCount {
            name: name.to_string(),
            input_count,
            output_count,
            retained_pct,
        });
    }

    pub fn finish(&mut self) {
        self.finished_at = litforge_core::report::utc_now();
    }

    /// Record counts along the retention chain never increase.
    pub fn retention_chain_is_monotone(&self) -> bool {
        self.stages.windows(2).all(|w| w[1].output_count <= w[0].output_count)
    }

    pub fn stage(&self, name: &str) -> Option<&StageCount> {
        self.stages.iter().find(|s| s.name == name)
    }
}
