//! Tail-dependence coefficients, Pearson correlation matrices and the
//! rolling-window comparison of average correlation against tail dependence.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;

use crate::copula::{average_pairwise_density, CopulaGrid};
use crate::gaussian::gaussian_copula_cdf;
use crate::ingest::ReturnMatrix;
use crate::{Error, Result, Scalar};

/// Symmetric `K x K` Pearson matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T> {
    size: usize,
    values: Vec<T>,
}

impl<T: Scalar> CorrelationMatrix<T> {
    /// Row-major `size x size` values; checked for symmetry, unit diagonal
    /// and `|c| <= 1`.
    pub fn new(size: usize, values: Vec<T>) -> Result<Self> {
        if values.len() != size * size {
            return Err(Error::LengthMismatch {
                left: values.len(),
                right: size * size,
            });
        }
        let matrix = Self { size, values };
        matrix.check_symmetric()?;
        for i in 0..size {
            if matrix.get(i, i) != T::one() {
                return Err(Error::InvalidCorrelationMatrix(format!(
                    "diagonal entry {i} is not 1"
                )));
            }
        }
        if let Some(c) = matrix.values.iter().find(|c| !(c.abs() <= T::one())) {
            return Err(Error::InvalidCorrelation(c.to_f64_lossy()));
        }
        Ok(matrix)
    }

    /// Every off-diagonal entry equal to `c`.
    pub fn constant(size: usize, c: T) -> Result<Self> {
        let values = (0..size * size)
            .map(|idx| if idx / size == idx % size { T::one() } else { c })
            .collect();
        Self::new(size, values)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.size + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn pair_count(&self) -> usize {
        self.size * self.size.saturating_sub(1) / 2
    }

    /// `(i, j, C_ij)` for `i < j` in lexicographic order.
    pub fn upper_pairs(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.size).flat_map(move |i| (i + 1..self.size).map(move |j| (i, j, self.get(i, j))))
    }

    pub fn check_symmetric(&self) -> Result<()> {
        for i in 0..self.size {
            for j in i + 1..self.size {
                if self.get(i, j) != self.get(j, i) {
                    return Err(Error::NotSymmetric { i, j });
                }
            }
        }
        Ok(())
    }
}

/// Tail coefficients at a list of `alpha` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct TailCurve<T> {
    pub alphas: Vec<T>,
    pub lower: Vec<T>,
    pub upper: Vec<T>,
}

/// How `lambda_u` is read off the copula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpperTailConvention {
    /// `1 - Cop(1 - a, 1 - a)`: probability that at least one return exceeds
    /// its `(1 - a)`-quantile.
    #[default]
    Literal,
    /// `1 - 2(1 - a) + Cop(1 - a, 1 - a)`: probability that both exceed it.
    Survival,
}

fn check_alpha<T: Scalar>(alpha: T) -> Result<()> {
    if alpha > T::zero() && alpha <= T::lit(0.5) {
        Ok(())
    } else {
        Err(Error::out_of_range("alpha", alpha.to_f64_lossy(), "(0, 0.5]"))
    }
}

/// `lambda_l(a) = Cop(a, a)`, interpolated bilinearly on the cumulative grid.
pub fn lower_tail<T: Scalar>(grid: &CopulaGrid<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    Ok(grid.cop(alpha, alpha))
}

/// `lambda_u(a) = 1 - Cop(1 - a, 1 - a)`.
pub fn upper_tail<T: Scalar>(grid: &CopulaGrid<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    let q = T::one() - alpha;
    Ok(T::one() - grid.cop(q, q))
}

/// Joint exceedance `P(U > 1 - a, V > 1 - a) = 1 - 2(1 - a) + Cop(1 - a, 1 - a)`.
pub fn upper_tail_survival<T: Scalar>(grid: &CopulaGrid<T>, alpha: T) -> Result<T> {
    check_alpha(alpha)?;
    let q = T::one() - alpha;
    Ok((T::one() - T::lit(2.0) * q + grid.cop(q, q)).max(T::zero()))
}

fn upper_with<T: Scalar>(grid: &CopulaGrid<T>, alpha: T, convention: UpperTailConvention) -> Result<T> {
    match convention {
        UpperTailConvention::Literal => upper_tail(grid, alpha),
        UpperTailConvention::Survival => upper_tail_survival(grid, alpha),
    }
}

impl<T: Scalar> TailCurve<T> {
    pub fn from_grid(
        grid: &CopulaGrid<T>,
        alphas: &[T],
        convention: UpperTailConvention,
    ) -> Result<Self> {
        Ok(Self {
            alphas: alphas.to_vec(),
            lower: alphas
                .iter()
                .map(|&a| lower_tail(grid, a))
                .collect::<Result<_>>()?,
            upper: alphas
                .iter()
                .map(|&a| upper_with(grid, a, convention))
                .collect::<Result<_>>()?,
        })
    }
}

/// Sample Pearson coefficients of every asset pair.
pub fn pearson_matrix<T: Scalar>(matrix: &ReturnMatrix<T>) -> Result<CorrelationMatrix<T>> {
    let n = matrix.len();
    if n < 2 {
        return Err(Error::TooFewObservations {
            required: 2,
            actual: n,
        });
    }
    let k = matrix.assets();
    let count = T::from_count(n);
    // Standardize once: centred series scaled to unit norm.
    let unit: Vec<Vec<T>> = (0..k)
        .into_par_iter()
        .map(|a| {
            let series = matrix.series(a);
            let mean = series.iter().copied().sum::<T>() / count;
            let centred: Vec<T> = series.iter().map(|&x| x - mean).collect();
            let norm = centred.iter().map(|&x| x * x).sum::<T>().sqrt();
            if norm == T::zero() {
                return Err(Error::ZeroVariance {
                    asset: matrix.asset_ids()[a].clone(),
                });
            }
            Ok(centred.into_iter().map(|x| x / norm).collect())
        })
        .collect::<Result<_>>()?;

    let rows: Vec<Vec<T>> = (0..k)
        .into_par_iter()
        .map(|i| {
            (i + 1..k)
                .map(|j| {
                    let dot: T = unit[i].iter().zip(&unit[j]).map(|(&a, &b)| a * b).sum();
                    dot.max(-T::one()).min(T::one())
                })
                .collect()
        })
        .collect();
    let mut values = vec![T::zero(); k * k];
    for i in 0..k {
        values[i * k + i] = T::one();
        for (offset, &c) in rows[i].iter().enumerate() {
            let j = i + 1 + offset;
            values[i * k + j] = c;
            values[j * k + i] = c;
        }
    }
    CorrelationMatrix::new(k, values)
}

/// Mean of the strictly upper-triangle entries.
pub fn mean_correlation<T: Scalar>(corr: &CorrelationMatrix<T>) -> Result<T> {
    if corr.size() < 2 {
        return Err(Error::TooFewAssets {
            required: 2,
            actual: corr.size(),
        });
    }
    let sum: T = corr.upper_pairs().map(|(_, _, c)| c).sum();
    Ok(sum / T::from_count(corr.pair_count()))
}

/// Mean over pairs of the Gaussian tail coefficient `Cop_{C_ij}(a, a)`.
pub fn average_gaussian_tail<T: Scalar>(corr: &CorrelationMatrix<T>, alpha: T) -> Result<T> {
    Ok(average_gaussian_tails(corr, &[alpha])?[0])
}

/// [`average_gaussian_tail`] for several levels, evaluating each distinct
/// coefficient once. Weights are `count / pairs`, so a constant matrix
/// reproduces the single-pair value exactly.
pub fn average_gaussian_tails<T: Scalar>(corr: &CorrelationMatrix<T>, alphas: &[T]) -> Result<Vec<T>> {
    for &a in alphas {
        check_alpha(a)?;
    }
    let pairs = corr.pair_count();
    if pairs == 0 {
        return Err(Error::TooFewAssets {
            required: 2,
            actual: corr.size(),
        });
    }
    let mut groups: BTreeMap<u64, (T, usize)> = BTreeMap::new();
    for (_, _, c) in corr.upper_pairs() {
        let c = c + T::zero();
        groups.entry(c.to_f64_lossy().to_bits()).or_insert((c, 0)).1 += 1;
    }
    let groups: Vec<(T, usize)> = groups.into_values().collect();
    let values: Vec<Vec<T>> = groups
        .par_iter()
        .map(|&(c, _)| {
            alphas
                .iter()
                .map(|&a| gaussian_copula_cdf(a, a, c))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    let total = T::from_count(pairs);
    let mut out = vec![T::zero(); alphas.len()];
    for ((_, count), row) in groups.iter().zip(&values) {
        let weight = T::from_count(*count) / total;
        for (acc, &v) in out.iter_mut().zip(row) {
            *acc += weight * v;
        }
    }
    Ok(out)
}

/// Consecutive non-overlapping windows of `window_days` trading days; a
/// trailing partial window is dropped.
pub fn partition_windows<T: Scalar>(
    matrix: &ReturnMatrix<T>,
    window_days: usize,
) -> Result<Vec<ReturnMatrix<T>>> {
    if window_days == 0 {
        return Err(Error::out_of_range("window_days", 0.0, ">= 1"));
    }
    let days = matrix.day_ranges();
    if days.len() < window_days {
        return Err(Error::WindowTooLong {
            window_days,
            available: days.len(),
        });
    }
    days.chunks_exact(window_days)
        .map(|chunk| {
            let start = chunk[0].1.start;
            let end = chunk[chunk.len() - 1].1.end;
            matrix.slice(start..end)
        })
        .collect()
}

/// Per-window summary: averaged copula, empirical and Gaussian tail curves,
/// and the mean pairwise correlation.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowReport<T> {
    pub window_start: NaiveDate,
    pub window_end: NaiveDate,
    pub mean_correlation: T,
    pub tail: TailCurve<T>,
    /// Average Gaussian-implied coefficient; lower and upper coincide.
    pub gaussian_tail: TailCurve<T>,
    pub sample_count: usize,
    pub grid: CopulaGrid<T>,
}

pub fn window_report<T: Scalar>(
    window: &ReturnMatrix<T>,
    m: usize,
    alphas: &[T],
    convention: UpperTailConvention,
) -> Result<WindowReport<T>> {
    let grid = average_pairwise_density(window, m)?;
    let tail = TailCurve::from_grid(&grid, alphas, convention)?;
    let corr = pearson_matrix(window)?;
    let gauss = average_gaussian_tails(&corr, alphas)?;
    let (window_start, window_end) = window.period();
    Ok(WindowReport {
        window_start,
        window_end,
        mean_correlation: mean_correlation(&corr)?,
        tail,
        gaussian_tail: TailCurve {
            alphas: alphas.to_vec(),
            lower: gauss.clone(),
            upper: gauss,
        },
        sample_count: window.len(),
        grid,
    })
}

/// Window reports over the whole matrix in chronological order.
pub fn dynamics<T: Scalar>(
    matrix: &ReturnMatrix<T>,
    window_days: usize,
    m: usize,
    alphas: &[T],
    convention: UpperTailConvention,
) -> Result<Vec<WindowReport<T>>> {
    partition_windows(matrix, window_days)?
        .par_iter()
        .map(|w| window_report(w, m, alphas, convention))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::empirical_copula_density;
    use chrono::{Duration, NaiveDateTime};

    fn independence(m: usize) -> CopulaGrid<f64> {
        crate::gaussian::gaussian_grid(0.0, m).unwrap()
    }

    fn stamps(days: usize, per_day: usize) -> Vec<NaiveDateTime> {
        let cal = crate::TradingCalendar::default();
        cal.trading_days(NaiveDate::from_ymd_opt(2008, 1, 2).unwrap(), days)
            .into_iter()
            .flat_map(|d| (0..per_day as u32).map(move |k| d.and_hms_opt(9, 30, 0).unwrap() + Duration::minutes(30 * k as i64)))
            .collect()
    }

    fn matrix(rows: Vec<Vec<f64>>, days: usize, per_day: usize) -> ReturnMatrix<f64> {
        let ids = (0..rows.len()).map(|k| format!("S{k}")).collect();
        ReturnMatrix::new(ids, 30, rows, stamps(days, per_day)).unwrap()
    }

    #[test]
    fn independence_tails() {
        let g = independence(50);
        assert!((lower_tail(&g, 0.1).unwrap() - 0.01).abs() < 1e-15);
        assert!((upper_tail(&g, 0.1).unwrap() - 0.19).abs() < 1e-15);
        assert!((upper_tail_survival(&g, 0.1).unwrap() - 0.01).abs() < 1e-15);
    }

    #[test]
    fn comonotone_tails() {
        let r: Vec<f64> = (0..100).map(|t| ((t * 37) % 100) as f64).collect();
        let g = empirical_copula_density(&r, &r, 50).unwrap();
        assert!((lower_tail(&g, 0.1).unwrap() - 0.1).abs() < 1e-15);
        assert!((upper_tail(&g, 0.1).unwrap() - 0.1).abs() < 1e-15);
        assert!((upper_tail_survival(&g, 0.1).unwrap() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn alpha_range_is_checked() {
        let g = independence(10);
        assert!(lower_tail(&g, 0.0).is_err());
        assert!(lower_tail(&g, 0.6).is_err());
        assert!(upper_tail(&g, -0.1).is_err());
        assert!(lower_tail(&g, 0.5).is_ok());
    }

    #[test]
    fn pearson_self_and_negation() {
        let a: Vec<f64> = (0..20).map(|t| (t as f64 * 0.7).sin()).collect();
        let neg: Vec<f64> = a.iter().map(|x| -x).collect();
        let m = matrix(vec![a.clone(), a, neg], 2, 10);
        let c = pearson_matrix(&m).unwrap();
        assert!((c.get(0, 1) - 1.0).abs() < 1e-15);
        assert!((c.get(0, 2) + 1.0).abs() < 1e-15);
        assert_eq!(c.get(1, 1), 1.0);
    }

    #[test]
    fn pearson_reports_flat_series() {
        let a: Vec<f64> = (0..10).map(|t| t as f64).collect();
        let m = matrix(vec![a, vec![0.5; 10]], 1, 10);
        match pearson_matrix(&m) {
            Err(Error::ZeroVariance { asset }) => assert_eq!(asset, "S1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mean_correlation_examples() {
        assert_eq!(mean_correlation(&CorrelationMatrix::constant(2, 0.3).unwrap()).unwrap(), 0.3);
        let c = mean_correlation(&CorrelationMatrix::constant(6, 0.45f64).unwrap()).unwrap();
        assert!((c - 0.45).abs() < 1e-15);
        assert_eq!(mean_correlation(&CorrelationMatrix::constant(5, 0.0).unwrap()).unwrap(), 0.0);
        assert!(mean_correlation(&CorrelationMatrix::<f64>::constant(1, 0.0).unwrap()).is_err());
    }

    #[test]
    fn correlation_matrix_validation() {
        assert!(matches!(
            CorrelationMatrix::new(2, vec![1.0, 0.2, 0.3, 1.0]),
            Err(Error::NotSymmetric { i: 0, j: 1 })
        ));
        assert!(CorrelationMatrix::new(2, vec![1.0, 1.2, 1.2, 1.0]).is_err());
        assert!(CorrelationMatrix::new(2, vec![0.9, 0.2, 0.2, 1.0]).is_err());
    }

    #[test]
    fn gaussian_tail_limits() {
        let zero = CorrelationMatrix::constant(4, 0.0f64).unwrap();
        assert!((average_gaussian_tail(&zero, 0.1).unwrap() - 0.01).abs() < 1e-16);
        let one = CorrelationMatrix::constant(4, 1.0).unwrap();
        assert_eq!(average_gaussian_tail(&one, 0.1).unwrap(), 0.1);
        let c = CorrelationMatrix::constant(7, 0.37).unwrap();
        assert_eq!(
            average_gaussian_tail(&c, 0.05).unwrap(),
            gaussian_copula_cdf(0.05, 0.05, 0.37).unwrap()
        );
    }

    #[test]
    fn windows_truncate_trailing_days() {
        let rows = vec![(0..250).map(|t| t as f64).collect(), (0..250).map(|t| -(t as f64)).collect()];
        let m = matrix(rows, 25, 10);
        let w = partition_windows(&m, 10).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w[0].len(), 100);
        assert_eq!(w[1].series(0)[0], 100.0);
        assert!(matches!(
            partition_windows(&m, 30),
            Err(Error::WindowTooLong { .. })
        ));
        assert!(partition_windows(&m, 0).is_err());
        let m20 = m.slice(0..200).unwrap();
        assert_eq!(partition_windows(&m20, 10).unwrap().len(), 2);
    }

    #[test]
    fn identical_series_window() {
        let a: Vec<f64> = (0..130).map(|t| ((t * 53) % 130) as f64 - 60.0).collect();
        let m = matrix(vec![a.clone(), a.clone(), a], 10, 13);
        let report = window_report(&m, 10, &[0.1, 0.25], UpperTailConvention::Literal).unwrap();
        assert!((report.mean_correlation - 1.0).abs() < 1e-15);
        assert!((report.tail.lower[0] - 0.1).abs() < 1e-15);
        assert!((report.gaussian_tail.lower[0] - 0.1).abs() < 1e-6);
        assert!((report.gaussian_tail.lower[1] - 0.25).abs() < 1e-6);
        assert_eq!(report.sample_count, 130);
    }
}
