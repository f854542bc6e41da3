//! Shared fixtures for the benchmark targets.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gpsurvey_core::field::{synth_field, GridField, SynthFieldParams};
use gpsurvey_core::kernel::HyperParams;
use gpsurvey_core::sogp::{BasisVectorSet, SogpConfig};

pub fn bench_hp() -> HyperParams {
    HyperParams::from_natural(0.05, 1.5, &[4.0, 4.0]).unwrap()
}

pub fn bench_field(seed: u64) -> GridField {
    synth_field(&SynthFieldParams {
        seed,
        width: 48,
        height: 48,
        bump_count: 3,
        amplitude_range: (1.0, 3.0),
        length_scale_range: (8.0, 16.0),
    })
    .unwrap()
}

/// Random 2-D points over a `48 x 48` extent with noisy field targets.
pub fn bench_samples(seed: u64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let field = bench_field(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = rng.random_range(0..48usize);
        let y = rng.random_range(0..48usize);
        points.push(vec![x as f64, y as f64]);
        let v = field.value(gpsurvey_core::field::Cell::new(x, y)).unwrap();
        targets.push(v + 0.05 * rng.random_range(-1.0..1.0));
    }
    (points, targets)
}

/// A model warmed up with `n` streamed samples at capacity `m`.
pub fn warmed_bv(seed: u64, n: usize, m: usize) -> BasisVectorSet {
    let (points, targets) = bench_samples(seed, n);
    let mut bv = BasisVectorSet::new(SogpConfig::new(m, bench_hp())).unwrap();
    for (p, y) in points.iter().zip(&targets) {
        bv.process(p, *y).unwrap();
    }
    bv
}
