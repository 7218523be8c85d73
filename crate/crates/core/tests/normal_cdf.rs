// Reference values are quoted at the precision they were printed with.
#![allow(clippy::excessive_precision)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use replab::normal::{normal_cdf, normal_sf};

mod common;
use common::phi_series;

#[test]
fn series_oracle_reproduces_reference_values() {
    // 25-digit references.
    let refs = [
        (1.96, 0.975_002_104_851_779_565_863_4),
        (-3.0, 0.001_349_898_031_630_094_526_651_8),
        (0.5, 0.691_462_461_274_013_103_637_7),
        (5.0, 0.999_999_713_348_428_120_806_1),
        (-1.2345, 0.108_508_323_362_670_160_744_0),
    ];
    for (x, want) in refs {
        assert!((phi_series(x) - want).abs() < 1e-15, "oracle at {x}");
        assert!((normal_cdf(x) - want).abs() < 1e-15, "kernel at {x}");
    }
    assert!((normal_cdf(-8.0) - 6.220_960_574_271_784e-16).abs() < 1e-28);
    assert!((normal_cdf(-20.0) / 2.753_624_118_606_233_7e-89 - 1.0).abs() < 1e-12);
}

#[test]
fn kernel_matches_series_oracle_at_sampled_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let x = if i < 400 {
            -10.0 + 20.0 * i as f64 / 399.0
        } else {
            rng.gen_range(-12.0..12.0)
        };
        let err = (normal_cdf(x) - phi_series(x)).abs();
        worst = worst.max(err);
        assert!(err <= 1e-12, "x = {x}, error {err:e}");
    }
    assert!(worst < 1e-14, "worst error {worst:e}");
}

#[test]
fn symmetry_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(-40.0..40.0);
        assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() <= 1e-12);
        assert!((normal_sf(x) - (1.0 - normal_cdf(x))).abs() <= 1e-12);
    }
}
