//! Stable seed derivation.
//!
//! Every random decision in a run is keyed by a path of names and indices
//! hashed with SHA-256, so results never depend on scheduling order or on the
//! platform's default hasher.

use sha2::{Digest, Sha256};

#[derive(Clone, Debug)]
pub struct SeedPath {
    hasher: Sha256,
}

impl SeedPath {
    pub fn new(master: u64) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"missbench/v1");
        hasher.update(master.to_le_bytes());
        Self { hasher }
    }

    pub fn name(mut self, part: &str) -> Self {
        // length prefix keeps ("ab","c") distinct from ("a","bc")
        self.hasher.update((part.len() as u64).to_le_bytes());
        self.hasher.update(part.as_bytes());
        self
    }

    pub fn index(mut self, i: u64) -> Self {
        self.hasher.update([0xff]);
        self.hasher.update(i.to_le_bytes());
        self
    }

    pub fn finish(self) -> u64 {
        let digest = self.hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        u64::from_le_bytes(bytes)
    }
}

/// Per-cell seed from (master, network, sampler, predictor, repeat, fold).
pub fn cell_seed(
    master: u64,
    network: &str,
    sampler: &str,
    predictor: &str,
    repeat: usize,
    fold: usize,
) -> u64 {
    SeedPath::new(master)
        .name(network)
        .name(sampler)
        .name(predictor)
        .index(repeat as u64)
        .index(fold as u64)
        .finish()
}

/// Hex SHA-256 of arbitrary bytes, used for config fingerprints.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
