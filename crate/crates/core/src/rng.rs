//! Counter-based random streams.
//!
//! Every replica owns independent ChaCha8 streams keyed by the master seed and
//! addressed by `(replica, lane)`. Nothing is shared between replicas, so a
//! replica's draws do not depend on scheduling or on how many other replicas
//! ran before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent purposes a replica draws randomness for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lane {
    /// Forward transitions `X_1, X_2, ...`.
    Forward = 0,
    /// Dual-kernel transitions `X_{-1}, X_{-2}, ...`.
    Backward = 1,
    /// Extra randomness of randomized solvers (uniform threshold, mixture coin).
    Auxiliary = 2,
    /// Resampling in bootstrap estimators.
    Bootstrap = 3,
}

const LANES: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicaStreams {
    pub master_seed: u64,
    pub replica: u64,
}

impl ReplicaStreams {
    pub fn new(master_seed: u64, replica: u64) -> Self {
        Self {
            master_seed,
            replica,
        }
    }

    pub fn lane(&self, lane: Lane) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(expand_seed(self.master_seed));
        rng.set_stream(self.replica.wrapping_mul(LANES).wrapping_add(lane as u64));
        rng
    }
}

/// SplitMix64 expansion of a 64-bit seed into a 256-bit ChaCha key.
fn expand_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^= z >> 31;
        chunk.copy_from_slice(&z.to_le_bytes());
    }
    key
}
