//! Seeded random substreams.
//!
//! Every concern that consumes randomness draws from its own ChaCha stream
//! derived from the episode seed, so swapping the controller (MARL, matching,
//! random) never perturbs the user layout or the channel realisation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Stream identifiers. Agent policy streams are `POLICY_BASE + m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Users,
    Placement,
    Channel,
    Policy(usize),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Users => 1,
            Stream::Placement => 2,
            Stream::Channel => 3,
            Stream::Policy(m) => 1_000 + m as u64,
        }
    }
}

pub fn substream(seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}
