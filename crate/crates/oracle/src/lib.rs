//! Slow, independent reference computations used only by tests.
//!
//! Everything here is deliberately naive: adaptive Simpson quadrature,
//! bisection and brute-force counting. None of it shares code with `tailcop`.

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 60)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol.max(f64::EPSILON * (left + right).abs()) {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Simpson over `[a, b]` split into `pieces` equal panels, each refined
/// adaptively. Splitting keeps the adaptive rule from missing narrow peaks.
pub fn simpson_pieces(f: &dyn Fn(f64) -> f64, a: f64, b: f64, pieces: usize, tol: f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == pieces { b } else { lo + h };
            simpson(f, lo, hi, tol / pieces as f64)
        })
        .sum()
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal CDF by quadrature of the density from -12.
pub fn normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        1.0 - normal_cdf(-x)
    } else if x < -12.0 {
        0.0
    } else {
        simpson_pieces(&normal_pdf, -12.0, x, 32, 1e-17)
    }
}

/// Standard normal quantile by bisection on `normal_cdf`.
pub fn normal_quantile(u: f64) -> f64 {
    assert!(u > 0.0 && u < 1.0);
    let (mut lo, mut hi) = (-12.0f64, 12.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < u {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub fn bivariate_normal_pdf(x: f64, y: f64, c: f64) -> f64 {
    let det = 1.0 - c * c;
    let q = (x * x - 2.0 * c * x * y + y * y) / det;
    (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
}

/// Bivariate standard normal CDF by nested Simpson quadrature of the joint
/// density over `[-10, x] x [-10, y]`.
pub fn bivariate_normal_cdf(x: f64, y: f64, c: f64) -> f64 {
    let (x, y) = (x.min(10.0), y.min(10.0));
    if x <= -10.0 || y <= -10.0 {
        return 0.0;
    }
    let inner = |s: f64| simpson_pieces(&|t| bivariate_normal_pdf(s, t, c), -10.0, y, 8, 1e-12);
    simpson_pieces(&inner, -10.0, x, 8, 1e-11)
}

/// Gaussian copula CDF via the quadrature normal quantile and joint CDF.
pub fn gaussian_copula_cdf(u: f64, v: f64, c: f64) -> f64 {
    if u <= 0.0 || v <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return v.min(1.0);
    }
    if v >= 1.0 {
        return u;
    }
    bivariate_normal_cdf(normal_quantile(u), normal_quantile(v), c)
}

/// Gaussian copula density from the quadrature quantile.
pub fn gaussian_copula_density(u: f64, v: f64, c: f64) -> f64 {
    let (x, y) = (normal_quantile(u), normal_quantile(v));
    bivariate_normal_pdf(x, y, c) / (normal_pdf(x) * normal_pdf(y))
}

/// Smallest sample value whose ECDF count reaches `num/den` of the sample,
/// found by scanning every candidate.
pub fn quantile_ratio(sample: &[f64], num: u64, den: u64) -> f64 {
    let n = sample.len() as u64;
    let mut best = f64::INFINITY;
    for &x in sample {
        let count = sample.iter().filter(|&&y| y <= x).count() as u64;
        if count * den >= num * n && x < best {
            best = x;
        }
    }
    best
}

fn bin_of(series: &[f64], x: f64, m: usize) -> usize {
    let n = series.len();
    (1..=m)
        .find(|&i| {
            let hi = quantile_ratio(series, i as u64, m as u64);
            x <= hi
        })
        .map(|i| i - 1)
        .unwrap_or_else(|| panic!("value {x} outside sample range of {n} points"))
}

/// Density-grid cell counts: cell `(i, j)` counts times whose first value lies
/// in bin `i` (values up to the `(i+1)/m` quantile, above the `i/m` quantile;
/// the first bin includes the minimum) and likewise for the second series.
pub fn density_counts(x: &[f64], y: &[f64], m: usize) -> Vec<Vec<u64>> {
    let mut counts = vec![vec![0u64; m]; m];
    for (&a, &b) in x.iter().zip(y) {
        counts[bin_of(x, a, m)][bin_of(y, b, m)] += 1;
    }
    counts
}

/// Fraction of times both values are at or below the `u` and `v` quantiles.
pub fn empirical_copula(x: &[f64], y: &[f64], u: (u64, u64), v: (u64, u64)) -> f64 {
    if u.0 == 0 || v.0 == 0 {
        return 0.0;
    }
    let qx = quantile_ratio(x, u.0, u.1);
    let qy = quantile_ratio(y, v.0, v.1);
    let hits = x.iter().zip(y).filter(|(&a, &b)| a <= qx && b <= qy).count();
    hits as f64 / x.len() as f64
}

/// Sample Pearson correlation, two-pass.
pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_known_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-13);
        assert!((normal_cdf(-1.0) - 0.15865525393145707).abs() < 1e-13);
    }

    #[test]
    fn bivariate_independent_factorises() {
        let v = bivariate_normal_cdf(0.3, -0.7, 0.0);
        assert!((v - normal_cdf(0.3) * normal_cdf(-0.7)).abs() < 1e-11);
        let origin = bivariate_normal_cdf(0.0, 0.0, 0.5);
        let exact = 0.25 + 0.5f64.asin() / (2.0 * std::f64::consts::PI);
        assert!((origin - exact).abs() < 1e-11);
    }

    #[test]
    fn brute_force_quantile() {
        let s = [3.0, 1.0, 2.0, 2.0];
        assert_eq!(quantile_ratio(&s, 0, 1), 1.0);
        assert_eq!(quantile_ratio(&s, 1, 4), 1.0);
        assert_eq!(quantile_ratio(&s, 1, 2), 2.0);
        assert_eq!(quantile_ratio(&s, 1, 1), 3.0);
    }
}
