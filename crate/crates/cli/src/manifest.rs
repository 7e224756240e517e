//! Run manifests: the machine-readable record tying a run's config hash,
//! code version, seed policy and output digests together. Identical
//! (config, seed) pairs reproduce bit-identical CSV outputs; the manifest
//! itself carries wall-clock times and is not byte-stable.

use crate::csvout::fnv1a64;
use serde::{Deserialize, Serialize};
use std::time::{SystemTime, UNIX_EPOCH};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutputDigest {
    pub file: String,
    pub fnv1a64: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u64,
    pub experiment: String,
    pub config_hash: String,
    pub code_version: String,
    pub master_seed: u64,
    /// stream indices are `(stage << 40) | trajectory`, one stage per
    /// pipeline phase
    pub seed_policy: String,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn begin(experiment: &str, config_hash: u64, master_seed: u64) -> Self {
        RunManifest {
            schema_version: crate::config::SCHEMA_VERSION,
            experiment: experiment.to_string(),
            config_hash: format!("{config_hash:016x}"),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            master_seed,
            seed_policy: "chacha8 stream = (stage << 40) | trajectory_index".to_string(),
            started_unix: now_unix(),
            finished_unix: 0,
            outputs: Vec::new(),
        }
    }

    pub fn record_output(&mut self, file: &str, contents: &str) {
        self.outputs.push(OutputDigest {
            file: file.to_string(),
            fnv1a64: format!("{:016x}", fnv1a64(contents.as_bytes())),
            bytes: contents.len(),
        });
    }

    pub fn finish(mut self) -> Self {
        self.finished_unix = now_unix();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
