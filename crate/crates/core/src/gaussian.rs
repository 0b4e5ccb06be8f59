//! Standard normal functions, the Gaussian copula and the difference between
//! an averaged empirical copula and its correlation-matched Gaussian average.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::copula::CopulaGrid;
use crate::quad;
use crate::taildep::CorrelationMatrix;
use crate::{Error, Result, Scalar};

/// Integration cut-off for the bivariate CDF; `Phi(-10) < 1e-23`.
const TAIL_CUTOFF: f64 = 10.0;

/// Below this `|x| / sqrt(2)` the erf power series is used, above it the
/// erfc continued fraction.
const SERIES_LIMIT: f64 = 2.5;

/// Correlation parameter of a bivariate Gaussian copula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianCopulaParams<T> {
    c: T,
}

impl<T: Scalar> GaussianCopulaParams<T> {
    pub fn new(c: T) -> Result<Self> {
        check_correlation(c)?;
        Ok(Self { c })
    }

    pub fn correlation(&self) -> T {
        self.c
    }

    pub fn cdf(&self, u: T, v: T) -> Result<T> {
        gaussian_copula_cdf(u, v, self.c)
    }

    pub fn density(&self, u: T, v: T) -> Result<T> {
        gaussian_copula_density(u, v, self.c)
    }
}

fn check_correlation<T: Scalar>(c: T) -> Result<()> {
    if c.abs() <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidCorrelation(c.to_f64_lossy()))
    }
}

fn check_unit<T: Scalar>(name: &'static str, u: T) -> Result<()> {
    if u >= T::zero() && u <= T::one() {
        Ok(())
    } else {
        Err(Error::out_of_range(name, u.to_f64_lossy(), "[0, 1]"))
    }
}

pub fn std_normal_pdf<T: Scalar>(x: T) -> T {
    (-(x * x) * T::lit(0.5)).exp() / (T::TAU()).sqrt()
}

// erf(z) = 2/sqrt(pi) exp(-z^2) sum_n 2^n z^(2n+1) / (2n+1)!!, all terms positive.
fn erf_series<T: Scalar>(z: T) -> T {
    let two_z2 = T::lit(2.0) * z * z;
    let mut term = z;
    let mut sum = z;
    let mut n = T::zero();
    for _ in 0..200 {
        n += T::one();
        term = term * two_z2 / (T::lit(2.0) * n + T::one());
        sum += term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    T::FRAC_2_SQRT_PI() * (-(z * z)).exp() * sum
}

// erfc(z) for z >= SERIES_LIMIT via the Laplace continued fraction
// sqrt(pi) e^{z^2} erfc(z) = 1/(z + (1/2)/(z + 1/(z + (3/2)/(z + ...)))).
fn erfc_continued_fraction<T: Scalar>(z: T) -> T {
    let tiny = T::min_positive_value().sqrt();
    let mut f = z;
    let mut c = f;
    let mut d = T::zero();
    for n in 1..500 {
        let a = T::from_count(n) * T::lit(0.5);
        d = z + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = z + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = T::one() / d;
        let delta = c * d;
        f *= delta;
        if (delta - T::one()).abs() <= T::epsilon() {
            break;
        }
    }
    (-(z * z)).exp() * T::FRAC_2_SQRT_PI() * T::lit(0.5) / f
}

/// Standard normal CDF `Phi(x)`.
pub fn std_normal_cdf<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let z = x.abs() * T::FRAC_1_SQRT_2();
    if z < T::lit(SERIES_LIMIT) {
        let half_erf = T::lit(0.5) * erf_series(z);
        if x < T::zero() {
            T::lit(0.5) - half_erf
        } else {
            T::lit(0.5) + half_erf
        }
    } else {
        let tail = T::lit(0.5) * erfc_continued_fraction(z);
        if x < T::zero() {
            tail
        } else {
            T::one() - tail
        }
    }
}

// Rational approximation with |error| < 4.5e-4, used as the starting point.
fn quantile_guess_lower<T: Scalar>(p: T) -> T {
    let t = (T::lit(-2.0) * p.ln()).sqrt();
    let num = T::lit(2.515517) + t * (T::lit(0.802853) + t * T::lit(0.010328));
    let den = T::one() + t * (T::lit(1.432788) + t * (T::lit(0.189269) + t * T::lit(0.001308)));
    -(t - num / den)
}

fn quantile_lower<T: Scalar>(p: T) -> T {
    let mut x = quantile_guess_lower(p);
    for _ in 0..8 {
        let pdf = std_normal_pdf(x);
        if pdf == T::zero() {
            break;
        }
        // Halley step on Phi(x) - p.
        let u = (std_normal_cdf(x) - p) / pdf;
        let step = u / (T::one() + x * u * T::lit(0.5));
        x -= step;
        if step.abs() <= T::epsilon() * (T::one() + x.abs()) {
            break;
        }
    }
    x
}

/// Standard normal quantile `Phi^-1(u)` for `u` in `(0, 1)`.
pub fn std_normal_quantile<T: Scalar>(u: T) -> Result<T> {
    if !(u > T::zero() && u < T::one()) {
        return Err(Error::out_of_range("u", u.to_f64_lossy(), "(0, 1)"));
    }
    let half = T::lit(0.5);
    Ok(if u == half {
        T::zero()
    } else if u < half {
        quantile_lower(u)
    } else {
        // 1 - u is exact for u in [0.5, 1).
        -quantile_lower(T::one() - u)
    })
}

/// `P(X <= x, Y <= y)` for a standard bivariate normal with correlation `c`.
///
/// Computed as `int_{-inf}^{x} phi(s) Phi((y - c s) / sqrt(1 - c^2)) ds`
/// with adaptive Gauss-Kronrod quadrature; `|c| = 1` is handled in closed form.
pub fn bivariate_normal_cdf<T: Scalar>(x: T, y: T, c: T) -> Result<T> {
    check_correlation(c)?;
    if x.is_nan() || y.is_nan() || c.is_nan() {
        return Err(Error::NonFinite("bivariate normal argument"));
    }
    if x == T::neg_infinity() || y == T::neg_infinity() {
        return Ok(T::zero());
    }
    if x == T::infinity() {
        return Ok(std_normal_cdf(y));
    }
    if y == T::infinity() {
        return Ok(std_normal_cdf(x));
    }
    if c == T::one() {
        return Ok(std_normal_cdf(x.min(y)));
    }
    if c == -T::one() {
        return Ok(if x + y > T::zero() {
            std_normal_cdf(x) - std_normal_cdf(-y)
        } else {
            T::zero()
        });
    }
    if c == T::zero() {
        return Ok(std_normal_cdf(x) * std_normal_cdf(y));
    }

    // Integrate over the variable with the smaller limit.
    let (x, y) = if x <= y { (x, y) } else { (y, x) };
    let cutoff = T::lit(TAIL_CUTOFF);
    let upper = x.min(cutoff);
    if upper <= -cutoff {
        return Ok(T::zero());
    }
    let scale = ((T::one() - c) * (T::one() + c)).sqrt();
    let integrand = |s: T| std_normal_pdf(s) * std_normal_cdf((y - c * s) / scale);
    let tol = T::lit(1e-14).max(T::epsilon() * T::lit(64.0));
    // The conditional CDF steps from 1 to 0 around s = y / c.
    let value = quad::integrate(integrand, -cutoff, upper, &[y / c, T::zero()], tol);
    Ok(value.max(T::zero()).min(std_normal_cdf(x)))
}

/// Gaussian copula `Cop_c(u, v) = Phi_2(Phi^-1(u), Phi^-1(v); c)`.
///
/// Boundary arguments follow the copula limits `Cop(0, v) = 0`, `Cop(1, v) = v`.
pub fn gaussian_copula_cdf<T: Scalar>(u: T, v: T, c: T) -> Result<T> {
    check_unit("u", u)?;
    check_unit("v", v)?;
    check_correlation(c)?;
    if u == T::zero() || v == T::zero() {
        return Ok(T::zero());
    }
    if u == T::one() {
        return Ok(v);
    }
    if v == T::one() {
        return Ok(u);
    }
    if c == T::one() {
        return Ok(u.min(v));
    }
    if c == -T::one() {
        return Ok((u + v - T::one()).max(T::zero()));
    }
    if c == T::zero() {
        return Ok(u * v);
    }
    let value = bivariate_normal_cdf(std_normal_quantile(u)?, std_normal_quantile(v)?, c)?;
    let lower = (u + v - T::one()).max(T::zero());
    Ok(value.max(lower).min(u.min(v)))
}

/// Gaussian copula density `phi_c(a, b) / (phi(a) phi(b))` with
/// `a = Phi^-1(u)`, `b = Phi^-1(v)`.
pub fn gaussian_copula_density<T: Scalar>(u: T, v: T, c: T) -> Result<T> {
    check_correlation(c)?;
    if c.abs() == T::one() {
        return Err(Error::DegenerateCorrelation(c.to_f64_lossy()));
    }
    let a = std_normal_quantile(u)?;
    let b = std_normal_quantile(v)?;
    let det = (T::one() - c) * (T::one() + c);
    let exponent = -(c * c * (a * a + b * b) - T::lit(2.0) * c * a * b) / (T::lit(2.0) * det);
    Ok(exponent.exp() / det.sqrt())
}

/// Analytic Gaussian copula on the `m x m` grid: cumulative nodes from
/// [`gaussian_copula_cdf`], cell masses by inclusion-exclusion over corners.
pub fn gaussian_grid<T: Scalar>(c: T, m: usize) -> Result<CopulaGrid<T>> {
    if m < 2 {
        return Err(Error::InvalidResolution(m));
    }
    check_correlation(c)?;
    let n = m + 1;
    let level = |i: usize| T::from_count(i) / T::from_count(m);
    // Upper triangle j >= i; the Gaussian copula is exchangeable.
    let rows: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i..n)
                .map(|j| gaussian_copula_cdf(level(i), level(j), c))
                .collect::<Result<Vec<T>>>()
        })
        .collect::<Result<_>>()?;
    let mut cumulative = vec![T::zero(); n * n];
    for (i, row) in rows.iter().enumerate() {
        for (offset, &value) in row.iter().enumerate() {
            let j = i + offset;
            cumulative[i * n + j] = value;
            cumulative[j * n + i] = value;
        }
    }
    let node = |i: usize, j: usize| cumulative[i * n + j];
    let mut density = vec![T::zero(); m * m];
    for i in 0..m {
        for j in 0..m {
            let mass = (node(i + 1, j + 1) - node(i, j + 1)) - (node(i + 1, j) - node(i, j));
            density[i * m + j] = mass.max(T::zero());
        }
    }
    Ok(CopulaGrid::from_parts(m, density, cumulative, 0, 1))
}

/// Thread-safe memo of Gaussian grids keyed on the (optionally rounded)
/// correlation. Cached grids are pure functions of the key, so results do not
/// depend on which worker filled an entry.
#[derive(Debug)]
pub struct GaussianGridCache<T> {
    resolution: usize,
    step: Option<T>,
    grids: Mutex<HashMap<u64, Arc<CopulaGrid<T>>>>,
}

impl<T: Scalar> GaussianGridCache<T> {
    /// `step = Some(s)` rounds correlations to multiples of `s` before lookup.
    pub fn new(resolution: usize, step: Option<T>) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidResolution(resolution));
        }
        if let Some(s) = step {
            if !(s > T::zero() && s <= T::one()) {
                return Err(Error::out_of_range("correlation step", s.to_f64_lossy(), "(0, 1]"));
            }
        }
        Ok(Self {
            resolution,
            step,
            grids: Mutex::new(HashMap::new()),
        })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Correlation actually used for `c` after rounding.
    pub fn snap(&self, c: T) -> T {
        match self.step {
            Some(s) => ((c / s).round() * s).max(-T::one()).min(T::one()),
            None => c,
        }
    }

    fn key(c: T) -> u64 {
        // -0.0 and 0.0 share an entry.
        (c + T::zero()).to_f64_lossy().to_bits()
    }

    pub fn get(&self, c: T) -> Result<Arc<CopulaGrid<T>>> {
        check_correlation(c)?;
        let c = self.snap(c);
        let key = Self::key(c);
        if let Some(grid) = self.grids.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(grid));
        }
        let grid = Arc::new(gaussian_grid(c, self.resolution)?);
        let mut grids = self.grids.lock().expect("cache lock");
        Ok(Arc::clone(grids.entry(key).or_insert(grid)))
    }

    pub fn len(&self) -> usize {
        self.grids.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Options for [`difference_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DifferenceOptions<T> {
    /// Correlations are rounded to this step before building Gaussian grids;
    /// `None` uses every coefficient exactly.
    pub correlation_step: Option<T>,
}

impl<T: Scalar> Default for DifferenceOptions<T> {
    fn default() -> Self {
        Self {
            correlation_step: Some(T::lit(1e-3)),
        }
    }
}

/// Signed cell-mass differences `empirical - Gaussian` on an `m x m` grid.
/// Positive cells are where the Gaussian copula is less dense.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceGrid<T> {
    resolution: usize,
    values: Vec<T>,
}

impl<T: Scalar> DifferenceGrid<T> {
    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[i * self.resolution + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn total(&self) -> T {
        self.values.iter().copied().sum()
    }
}

/// Average of the Gaussian grids of every upper-triangle coefficient of `corr`.
pub fn average_gaussian_grid<T: Scalar>(
    corr: &CorrelationMatrix<T>,
    cache: &GaussianGridCache<T>,
) -> Result<CopulaGrid<T>> {
    let pairs = corr.pair_count();
    if pairs == 0 {
        return Err(Error::TooFewAssets {
            required: 2,
            actual: corr.size(),
        });
    }
    // Group pairs by snapped correlation; summing over sorted keys keeps the
    // result independent of scheduling.
    let mut groups: BTreeMap<u64, (T, usize)> = BTreeMap::new();
    for (_, _, c) in corr.upper_pairs() {
        let c = cache.snap(c);
        groups
            .entry(GaussianGridCache::<T>::key(c))
            .or_insert((c, 0))
            .1 += 1;
    }
    let groups: Vec<(T, usize)> = groups.into_values().collect();
    let grids: Vec<Arc<CopulaGrid<T>>> = groups
        .par_iter()
        .map(|&(c, _)| cache.get(c))
        .collect::<Result<_>>()?;

    let m = cache.resolution();
    let total = T::from_count(pairs);
    let mut density = vec![T::zero(); m * m];
    let mut cumulative = vec![T::zero(); (m + 1) * (m + 1)];
    for ((_, count), grid) in groups.iter().zip(&grids) {
        let weight = T::from_count(*count) / total;
        for (acc, &x) in density.iter_mut().zip(grid.density_cells()) {
            *acc += weight * x;
        }
        for (acc, &x) in cumulative.iter_mut().zip(grid.cumulative_nodes()) {
            *acc += weight * x;
        }
    }
    Ok(CopulaGrid::from_parts(m, density, cumulative, 0, pairs))
}

/// Difference between the averaged empirical copula and the average of the
/// Gaussian copulae implied by each pair's correlation coefficient.
///
/// By linearity this equals the pairwise average of the per-pair differences.
pub fn difference_map<T: Scalar>(
    empirical: &CopulaGrid<T>,
    corr: &CorrelationMatrix<T>,
    options: DifferenceOptions<T>,
) -> Result<DifferenceGrid<T>> {
    let cache = GaussianGridCache::new(empirical.resolution(), options.correlation_step)?;
    difference_map_with_cache(empirical, corr, &cache)
}

pub fn difference_map_with_cache<T: Scalar>(
    empirical: &CopulaGrid<T>,
    corr: &CorrelationMatrix<T>,
    cache: &GaussianGridCache<T>,
) -> Result<DifferenceGrid<T>> {
    if empirical.resolution() != cache.resolution() {
        return Err(Error::ResolutionMismatch {
            expected: empirical.resolution(),
            actual: cache.resolution(),
        });
    }
    corr.check_symmetric()?;
    if empirical.pair_count() != corr.pair_count() {
        return Err(Error::PairCountMismatch {
            grid: empirical.pair_count(),
            matrix: corr.pair_count(),
        });
    }
    let gaussian = average_gaussian_grid(corr, cache)?;
    let values = empirical
        .density_cells()
        .iter()
        .zip(gaussian.density_cells())
        .map(|(&e, &g)| e - g)
        .collect();
    Ok(DifferenceGrid {
        resolution: empirical.resolution(),
        values,
    })
}
