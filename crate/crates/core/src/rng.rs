//! Engine random number generator.
//!
//! Both engines draw every random variate from a single ChaCha8 generator
//! whose full state (seed, stream, word position) serializes into
//! checkpoints, so a resumed run continues the exact stream of an
//! uninterrupted one.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator owned by engine state. All stochastic operations
/// (proposals, resets, completions, acceptance draws) consume from it.
pub type EngineRng = ChaCha8Rng;

/// Creates an engine generator from a 64-bit seed.
pub fn seeded(seed: u64) -> EngineRng {
    EngineRng::seed_from_u64(seed)
}

/// Serde adapter capturing a ChaCha8 generator as (seed, stream, word_pos).
///
/// Restoring those three values reproduces the generator bit-exactly.
/// The word position is stored as u64; positions anywhere near that range
/// would require reading 2^66 bytes of output first.
pub mod serde_chacha {
    use super::EngineRng;
    use rand_chacha::rand_core::SeedableRng;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Snapshot {
        seed: [u8; 32],
        stream: u64,
        word_pos: u64,
    }

    pub fn serialize<S: Serializer>(rng: &EngineRng, ser: S) -> Result<S::Ok, S::Error> {
        Snapshot {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos() as u64,
        }
        .serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<EngineRng, D::Error> {
        let snap = Snapshot::deserialize(de)?;
        let mut rng = EngineRng::from_seed(snap.seed);
        rng.set_stream(snap.stream);
        rng.set_word_pos(snap.word_pos as u128);
        Ok(rng)
    }
}
