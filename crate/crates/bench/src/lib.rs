//! Fixtures shared by the benchmarks.

use fiberqrng_core::extractor::output_length;
use fiberqrng_core::{Bits, StreamRng, ToeplitzSeed};

/// A generation-sized block and a seed sized for `private_fraction`.
pub fn toeplitz_fixture(n: usize, private_fraction: f64) -> (Bits, ToeplitzSeed) {
    let mut rng = StreamRng::new(7, 0, 0);
    let m = output_length(n, private_fraction, 2f64.powi(-50)).expect("valid sizing");
    let seed = ToeplitzSeed::random(n, m, &mut rng).expect("valid seed");
    (Bits::random(n, &mut rng), seed)
}

pub fn random_bits(len: usize) -> Bits {
    Bits::random(len, &mut StreamRng::new(8, 0, 0))
}
