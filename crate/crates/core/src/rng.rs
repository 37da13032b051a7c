use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams derived from one seed. Each consumer gets its
/// own stream id so that adding draws in one place never shifts another.
#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub(crate) enum Stream {
    Coefficients = 1,
    Covariates = 2,
    Noise = 3,
    RandomIntercepts = 4,
    Variational = 5,
    Posterior = 6,
    MirrorShuffle = 7,
    Split = 8,
    Folds = 9,
    Knockoff = 10,
}

pub(crate) fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
