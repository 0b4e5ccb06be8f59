mod common;

use proptest::prelude::*;
use tailcop::gaussian::{
    average_gaussian_grid, bivariate_normal_cdf, gaussian_copula_cdf, gaussian_copula_density,
    gaussian_grid, std_normal_cdf, std_normal_quantile,
};
use tailcop::{
    average_pairwise_density, difference_map, pearson_matrix, sample_panel, CorrelationMatrix64,
    DifferenceOptions, GaussianGridCache, SynthKind, SynthSpec,
};

#[test]
fn normal_cdf_matches_quadrature() {
    for k in -40..=40 {
        let x = k as f64 * 0.2;
        let oracle = tailcop_oracle::normal_cdf(x);
        assert!((std_normal_cdf(x) - oracle).abs() < 1e-13, "x = {x}");
    }
}

#[test]
fn normal_quantile_matches_bisection() {
    for u in [1e-6, 0.001, 0.02, 0.1, 0.3, 0.5, 0.77, 0.975, 0.999_99] {
        let oracle = tailcop_oracle::normal_quantile(u);
        assert!((std_normal_quantile(u).unwrap() - oracle).abs() < 1e-9, "u = {u}");
    }
}

#[test]
fn bivariate_cdf_matches_nested_quadrature() {
    for (x, y, c) in [(0.3, -0.4, 0.5), (-1.2, -2.0, 0.9), (1.5, 0.2, -0.7), (-0.5, 2.5, 0.2), (-3.0, -3.0, 0.95)] {
        let oracle = tailcop_oracle::bivariate_normal_cdf(x, y, c);
        let got = bivariate_normal_cdf(x, y, c).unwrap();
        assert!((got - oracle).abs() < 1e-9, "({x}, {y}, {c}): {got} vs {oracle}");
    }
}

#[test]
fn grid_nodes_match_quadrature_copula() {
    let m = 5;
    for c in [-0.6, 0.3, 0.8] {
        let grid = gaussian_grid(c, m).unwrap();
        for i in 1..m {
            for j in 1..m {
                let oracle = tailcop_oracle::gaussian_copula_cdf(i as f64 / 5.0, j as f64 / 5.0, c);
                assert!((grid.cumulative(i, j) - oracle).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn corner_cell_is_copula_at_corner() {
    let grid = gaussian_grid(0.5f64, 50).unwrap();
    let oracle = tailcop_oracle::gaussian_copula_cdf(0.02, 0.02, 0.5);
    assert!((grid.density(0, 0) - oracle).abs() < 1e-9);
}

#[test]
fn integrated_density_gives_unit_mass_and_margins() {
    let c = 0.4;
    let m = 4;
    let grid = gaussian_grid(c, m).unwrap();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let (u0, v0) = (i as f64 / m as f64, j as f64 / m as f64);
            let h = 1.0 / m as f64;
            // Interior cells only: corner cells hold integrable singularities.
            if i > 0 && j > 0 && i + 1 < m && j + 1 < m {
                let mass = tailcop_oracle::simpson_pieces(
                    &|u| tailcop_oracle::simpson(&|v| gaussian_copula_density(u, v, c).unwrap(), v0, v0 + h, 1e-12),
                    u0,
                    u0 + h,
                    4,
                    1e-11,
                );
                assert!((grid.density(i, j) - mass).abs() < 1e-8);
            }
            total += grid.density(i, j);
        }
    }
    assert!((total - 1.0).abs() < 1e-6);
    let big = gaussian_grid(0.7f64, 50).unwrap();
    for i in 0..50 {
        let row: f64 = (0..50).map(|j| big.density(i, j)).sum();
        assert!((row - 0.02).abs() < 1e-6);
    }
}

#[test]
fn constant_matrix_averages_to_single_grid() {
    let cache = GaussianGridCache::new(10, None).unwrap();
    let avg = average_gaussian_grid(&CorrelationMatrix64::constant(6, 0.35).unwrap(), &cache).unwrap();
    let single = gaussian_grid(0.35, 10).unwrap();
    for (a, b) in avg.density_cells().iter().zip(single.density_cells()) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(cache.len(), 1);
}

#[test]
fn difference_map_vanishes_on_gaussian_panel() {
    let t = 40_000;
    let spec = SynthSpec::new(SynthKind::Gaussian(0.4f64), 5, t, 99);
    let panel = sample_panel(&spec).unwrap();
    let m = 10;
    let emp = average_pairwise_density(&panel, m).unwrap();
    let corr = pearson_matrix(&panel).unwrap();
    let diff = difference_map(&emp, &corr, DifferenceOptions::default()).unwrap();
    let gauss = gaussian_grid(0.4, m).unwrap();
    assert!(diff.total().abs() < 1e-9);
    for i in 0..m {
        for j in 0..m {
            let p = gauss.density(i, j);
            let sigma = (p * (1.0 - p) / t as f64).sqrt();
            assert!(diff.value(i, j).abs() < 5.0 * sigma, "cell ({i}, {j})");
        }
    }
}

proptest! {
    #[test]
    fn copula_cdf_respects_frechet_bounds(u in 0.0f64..=1.0, v in 0.0f64..=1.0, c in -1.0f64..=1.0) {
        let got = gaussian_copula_cdf(u, v, c).unwrap();
        prop_assert!(got >= (u + v - 1.0).max(0.0) - 1e-15);
        prop_assert!(got <= u.min(v) + 1e-15);
        let swapped = gaussian_copula_cdf(v, u, c).unwrap();
        prop_assert!((got - swapped).abs() < 1e-14);
    }

    #[test]
    fn copula_cdf_increases_with_correlation(u in 0.01f64..0.99, v in 0.01f64..0.99, a in -0.95f64..0.95, d in 0.01f64..0.05) {
        let lo = gaussian_copula_cdf(u, v, a).unwrap();
        let hi = gaussian_copula_cdf(u, v, a + d).unwrap();
        prop_assert!(hi >= lo - 1e-14);
    }
}
