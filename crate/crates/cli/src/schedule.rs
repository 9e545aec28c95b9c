//! Keyed-hash seed schedule.
//!
//! The seed of trial `i` in stage `name` is the first eight bytes (little
//! endian) of `SHA-256(root_le || name || 0x00 || i_le)`. Stages never share a
//! stream, and any single stage can be re-run from the root seed alone.

use hypercount::stitch::SeedSchedule;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Sha256Schedule {
    pub root: u64,
}

impl Sha256Schedule {
    pub fn new(root: u64) -> Self {
        Sha256Schedule { root }
    }
}

impl SeedSchedule for Sha256Schedule {
    fn seed(&self, stage: &str, index: u64) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.root.to_le_bytes());
        hasher.update(stage.as_bytes());
        hasher.update([0u8]);
        hasher.update(index.to_le_bytes());
        let digest = hasher.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}
