use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Address of an independent random stream: `(root_seed, stream_id)`.
///
/// Streams are ChaCha8 keyed by the root seed with the stream id selecting
/// the ChaCha stream, so per-trial generators never share state and can be
/// derived in any order on any thread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub root_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(root_seed: u64, stream_id: u64) -> Self {
        RngStream {
            root_seed,
            stream_id,
        }
    }

    /// Child stream for `tag`, deterministic in `(self, tag)`.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream {
            root_seed: self.root_seed,
            stream_id: splitmix64(
                splitmix64(self.stream_id) ^ tag.wrapping_mul(0xA24B_AED4_963E_E407),
            ),
        }
    }

    /// Child stream addressed by a path of tags.
    pub fn derive_path(&self, tags: &[u64]) -> RngStream {
        tags.iter().fold(*self, |s, &t| s.derive(t))
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.root_seed);
        rng.set_stream(self.stream_id);
        rng
    }

    pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
        rng.sample(StandardNormal)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
