//! Empirical copula of a return pair on an `m x m` quantile grid, and its
//! average over every pair of a panel.
//!
//! Cell `(i, j)` (zero-based) holds the fraction of time steps whose first
//! return lies in the `i`-th quantile bin `(F1^-1(i/m), F1^-1((i+1)/m)]` and
//! whose second return lies in the `j`-th bin of the second margin. The first
//! bin is closed below, so every observation lands in exactly one cell.
//! Observations tied at a bin edge fall into the lower bin.
//!
//! Cumulative node `(i, j)` (for `0 <= i, j <= m`) is `Cop(i/m, j/m)`, the
//! fraction of steps with `r1 <= F1^-1(i/m)` and `r2 <= F2^-1(j/m)`.

use rayon::prelude::*;

use crate::empirical::{check_finite, min_ranks, EmpiricalDistribution};
use crate::ingest::ReturnMatrix;
use crate::{Error, Result, Scalar};

/// Copula density cell masses plus the cumulative copula on grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CopulaGrid<T> {
    resolution: usize,
    density: Vec<T>,
    cumulative: Vec<T>,
    sample_count: usize,
    pair_count: usize,
}

impl<T: Scalar> CopulaGrid<T> {
    /// Builds a grid from integer cell counts accumulated over `pair_count`
    /// pairs of `sample_count` observations each.
    pub(crate) fn from_counts(
        resolution: usize,
        counts: &[u64],
        sample_count: usize,
        pair_count: usize,
    ) -> Self {
        let m = resolution;
        debug_assert_eq!(counts.len(), m * m);
        let total = T::from_count(sample_count) * T::from_count(pair_count);
        let to_mass = |c: u64| T::from_u64(c).expect("count fits scalar") / total;

        let mut prefix = vec![0u64; (m + 1) * (m + 1)];
        for i in 1..=m {
            let mut row = 0u64;
            for j in 1..=m {
                row += counts[(i - 1) * m + (j - 1)];
                prefix[i * (m + 1) + j] = prefix[(i - 1) * (m + 1) + j] + row;
            }
        }
        Self {
            resolution,
            density: counts.iter().map(|&c| to_mass(c)).collect(),
            cumulative: prefix.into_iter().map(to_mass).collect(),
            sample_count,
            pair_count,
        }
    }

    /// Builds a grid from explicit cell masses and cumulative nodes.
    /// `sample_count == 0` marks an analytic grid with no sampling slack.
    pub(crate) fn from_parts(
        resolution: usize,
        density: Vec<T>,
        cumulative: Vec<T>,
        sample_count: usize,
        pair_count: usize,
    ) -> Self {
        assert_eq!(density.len(), resolution * resolution);
        assert_eq!(cumulative.len(), (resolution + 1) * (resolution + 1));
        Self {
            resolution,
            density,
            cumulative,
            sample_count,
            pair_count,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Observations per series backing the estimate; 0 for analytic grids.
    pub fn sample_count(&self) -> usize {
        self.sample_count
    }

    /// Number of asset pairs averaged into this grid.
    pub fn pair_count(&self) -> usize {
        self.pair_count
    }

    /// Counting slack `1 / sample_count` (zero for analytic grids).
    pub fn slack(&self) -> T {
        if self.sample_count == 0 {
            T::zero()
        } else {
            T::one() / T::from_count(self.sample_count)
        }
    }

    /// Mass of zero-based cell `(i, j)`.
    pub fn density(&self, i: usize, j: usize) -> T {
        self.density[i * self.resolution + j]
    }

    /// Row-major cell masses.
    pub fn density_cells(&self) -> &[T] {
        &self.density
    }

    /// `Cop(i/m, j/m)` for `0 <= i, j <= m`.
    pub fn cumulative(&self, i: usize, j: usize) -> T {
        self.cumulative[i * (self.resolution + 1) + j]
    }

    /// Row-major cumulative nodes, `(m+1) x (m+1)`.
    pub fn cumulative_nodes(&self) -> &[T] {
        &self.cumulative
    }

    /// Cumulative copula at arbitrary `(u, v)` by bilinear interpolation
    /// between nodes. Arguments are clamped to `[0, 1]`.
    pub fn cop(&self, u: T, v: T) -> T {
        let (i0, fu) = self.locate(u);
        let (j0, fv) = self.locate(v);
        let c00 = self.cumulative(i0, j0);
        if fu == T::zero() && fv == T::zero() {
            return c00;
        }
        let c10 = self.cumulative(i0 + 1, j0);
        let c01 = self.cumulative(i0, j0 + 1);
        let c11 = self.cumulative(i0 + 1, j0 + 1);
        let one = T::one();
        c00 * (one - fu) * (one - fv) + c10 * fu * (one - fv) + c01 * (one - fu) * fv + c11 * fu * fv
    }

    // Lower node index and fractional offset; values within a few ulps of a
    // node snap to it so node-aligned levels are read back exactly.
    fn locate(&self, u: T) -> (usize, T) {
        let m = T::from_count(self.resolution);
        let s = (u.max(T::zero()).min(T::one())) * m;
        let nearest = s.round();
        let s = if (s - nearest).abs() <= T::epsilon() * m * T::lit(8.0) {
            nearest
        } else {
            s
        };
        let i0 = s.floor().to_usize().unwrap_or(0).min(self.resolution - 1);
        (i0, s - T::from_count(i0))
    }

    /// Grid of the swapped pair `(r2, r1)`.
    pub fn transpose(&self) -> Self {
        let m = self.resolution;
        let mut density = self.density.clone();
        for i in 0..m {
            for j in 0..m {
                density[j * m + i] = self.density[i * m + j];
            }
        }
        let mut cumulative = self.cumulative.clone();
        for i in 0..=m {
            for j in 0..=m {
                cumulative[j * (m + 1) + i] = self.cumulative[i * (m + 1) + j];
            }
        }
        Self {
            density,
            cumulative,
            ..*self
        }
    }

    /// Sum of all cell masses.
    pub fn total_mass(&self) -> T {
        self.density.iter().copied().sum()
    }
}

fn check_pair<T: Scalar>(r1: &[T], r2: &[T]) -> Result<()> {
    if r1.len() != r2.len() {
        return Err(Error::LengthMismatch {
            left: r1.len(),
            right: r2.len(),
        });
    }
    if r1.is_empty() {
        return Err(Error::EmptySample);
    }
    check_finite(r1, "first series")?;
    check_finite(r2, "second series")
}

fn check_probability<T: Scalar>(name: &'static str, u: T) -> Result<()> {
    if u >= T::zero() && u <= T::one() {
        Ok(())
    } else {
        Err(Error::out_of_range(name, u.to_f64_lossy(), "[0, 1]"))
    }
}

fn check_resolution(m: usize) -> Result<()> {
    if m < 2 || m > u16::MAX as usize {
        Err(Error::InvalidResolution(m))
    } else {
        Ok(())
    }
}

/// Pointwise empirical copula `(1/T) sum_t 1[r1 <= F1^-1(u)] 1[r2 <= F2^-1(v)]`.
///
/// `Cop(0, v) = Cop(u, 0) = 0`, matching row and column zero of [`CopulaGrid`].
pub fn empirical_copula_cumulative<T: Scalar>(r1: &[T], r2: &[T], u: T, v: T) -> Result<T> {
    check_pair(r1, r2)?;
    check_probability("u", u)?;
    check_probability("v", v)?;
    if u == T::zero() || v == T::zero() {
        return Ok(T::zero());
    }
    let q1 = EmpiricalDistribution::new(r1)?.quantile(u)?;
    let q2 = EmpiricalDistribution::new(r2)?.quantile(v)?;
    let hits = r1
        .iter()
        .zip(r2)
        .filter(|(&a, &b)| a <= q1 && b <= q2)
        .count();
    Ok(T::from_count(hits) / T::from_count(r1.len()))
}

/// Zero-based quantile bin of every observation at resolution `m`.
///
/// `x <= F^-1(k/m)` holds exactly when `#{y < x} < ceil(k T / m)`, so the
/// bin is `floor(#{y < x} * m / T)`.
pub(crate) fn quantile_bins<T: Scalar>(series: &[T], m: usize) -> Vec<u16> {
    let n = series.len() as u64;
    min_ranks(series)
        .into_iter()
        .map(|below| ((below as u64 * m as u64) / n) as u16)
        .collect()
}

fn accumulate_pair(bins1: &[u16], bins2: &[u16], m: usize, counts: &mut [u64]) {
    for (&a, &b) in bins1.iter().zip(bins2) {
        counts[a as usize * m + b as usize] += 1;
    }
}

/// Gridded empirical copula density of one pair.
pub fn empirical_copula_density<T: Scalar>(r1: &[T], r2: &[T], m: usize) -> Result<CopulaGrid<T>> {
    check_resolution(m)?;
    check_pair(r1, r2)?;
    let mut counts = vec![0u64; m * m];
    accumulate_pair(&quantile_bins(r1, m), &quantile_bins(r2, m), m, &mut counts);
    Ok(CopulaGrid::from_counts(m, &counts, r1.len(), 1))
}

/// Elementwise mean of the `K(K-1)/2` pair grids of a panel.
///
/// Pair counts are accumulated as integers, so the result is bit-identical
/// for every thread count and evaluation order.
pub fn average_pairwise_density<T: Scalar>(
    matrix: &ReturnMatrix<T>,
    m: usize,
) -> Result<CopulaGrid<T>> {
    check_resolution(m)?;
    let k = matrix.assets();
    if k < 2 {
        return Err(Error::TooFewAssets {
            required: 2,
            actual: k,
        });
    }
    let bins: Vec<Vec<u16>> = (0..k)
        .into_par_iter()
        .map(|a| quantile_bins(matrix.series(a), m))
        .collect();
    let counts = (0..k - 1)
        .into_par_iter()
        .fold(
            || vec![0u64; m * m],
            |mut acc, i| {
                for j in i + 1..k {
                    accumulate_pair(&bins[i], &bins[j], m, &mut acc);
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; m * m],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    Ok(CopulaGrid::from_counts(
        m,
        &counts,
        matrix.len(),
        k * (k - 1) / 2,
    ))
}

/// Joint CDF `F(x, y) = Cop(F1(x), F2(y))` with the copula read off the grid
/// by bilinear interpolation.
pub fn rebuild_joint_cdf<T: Scalar>(
    grid: &CopulaGrid<T>,
    f1: &EmpiricalDistribution<T>,
    f2: &EmpiricalDistribution<T>,
    x: T,
    y: T,
) -> T {
    grid.cop(f1.ecdf(x), f2.ecdf(y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|t| ((t * 7919) % n) as f64 * 0.37 - 3.0).collect()
    }

    #[test]
    fn comonotone_pair_puts_mass_on_diagonal() {
        let m = 5;
        let r = ramp(m * 4);
        let g = empirical_copula_density(&r, &r, m).unwrap();
        for i in 0..m {
            for j in 0..m {
                let expected = if i == j { 0.2 } else { 0.0 };
                assert_eq!(g.density(i, j), expected);
            }
        }
        assert_eq!(g.cumulative(m, m), 1.0);
        assert_eq!(g.cumulative(2, 3), 0.4);
    }

    #[test]
    fn countermonotone_pair_at_median() {
        let r = ramp(20);
        let neg: Vec<f64> = r.iter().map(|x| -x).collect();
        assert_eq!(empirical_copula_cumulative(&r, &r, 0.5, 0.5).unwrap(), 0.5);
        assert_eq!(empirical_copula_cumulative(&r, &neg, 0.5, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn boundary_levels_give_zero() {
        let r = ramp(10);
        assert_eq!(empirical_copula_cumulative(&r, &r, 0.0, 0.7).unwrap(), 0.0);
        assert_eq!(empirical_copula_cumulative(&r, &r, 0.7, 0.0).unwrap(), 0.0);
        assert_eq!(empirical_copula_cumulative(&r, &r, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn errors_on_bad_input() {
        let r = ramp(10);
        assert!(matches!(
            empirical_copula_density(&r, &r[..9], 5),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            empirical_copula_density(&r, &r, 1),
            Err(Error::InvalidResolution(1))
        ));
        assert!(empirical_copula_density::<f64>(&[], &[], 3).is_err());
        assert!(empirical_copula_cumulative(&r, &r, 1.5, 0.5).is_err());
    }

    #[test]
    fn ties_go_to_lower_bin() {
        // Half the observations tie at zero: all of them sit in the first bin.
        let r = [0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_bins(&r, 4), vec![0, 0, 0, 0, 2, 2, 3, 3]);
        let g = empirical_copula_density(&r, &r, 4).unwrap();
        assert_eq!(g.total_mass(), 1.0);
        assert_eq!(g.cumulative(1, 4), 0.5);
        assert_eq!(g.cumulative(2, 4), 0.5);
    }

    #[test]
    fn uneven_bins_when_length_not_multiple_of_resolution() {
        let r = ramp(7);
        let g = empirical_copula_density(&r, &r, 3).unwrap();
        let per_bin: Vec<f64> = (0..3).map(|i| g.density(i, i) * 7.0).collect();
        assert_eq!(per_bin, vec![3.0, 2.0, 2.0]);
    }

    #[test]
    fn bilinear_interpolation_hits_nodes_exactly() {
        let r = ramp(100);
        let s: Vec<f64> = r.iter().map(|x| (x * 1.3).sin()).collect();
        let g = empirical_copula_density(&r, &s, 10).unwrap();
        assert_eq!(g.cop(0.3, 0.7), g.cumulative(3, 7));
        assert_eq!(g.cop(0.0, 0.5), 0.0);
        assert_eq!(g.cop(1.0, 1.0), 1.0);
        let mid = g.cop(0.35, 0.7);
        assert!((mid - 0.5 * (g.cumulative(3, 7) + g.cumulative(4, 7))).abs() < 1e-15);
    }

    #[test]
    fn rebuild_joint_cdf_limits() {
        let r = ramp(40);
        let f = EmpiricalDistribution::new(&r).unwrap();
        let g = empirical_copula_density(&r, &r, 8).unwrap();
        assert_eq!(rebuild_joint_cdf(&g, &f, &f, 1e6, 1e6), 1.0);
        assert_eq!(rebuild_joint_cdf(&g, &f, &f, -1e6, 0.0), 0.0);
    }

    #[test]
    fn transpose_swaps_axes() {
        let r = ramp(30);
        let s: Vec<f64> = r.iter().map(|x| (x * 2.1).cos()).collect();
        let g = empirical_copula_density(&r, &s, 4).unwrap();
        assert_eq!(empirical_copula_density(&s, &r, 4).unwrap(), g.transpose());
    }
}
