//! Step-function ECDF and its generalized inverse on finite samples.
//!
//! `F(x)` is the fraction of observations `<= x`, so tied observations share
//! the largest rank of their group. The quantile is the smallest sample value
//! whose ECDF reaches `u`; at `u = 0` it is the sample minimum.

use std::cmp::Ordering;

use crate::{Error, Result, Scalar};

/// Sorted copy of a sample together with the time index of each sorted entry.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDistribution<T> {
    sorted: Vec<T>,
    original_index: Vec<usize>,
}

pub(crate) fn check_finite<T: Scalar>(series: &[T], what: &'static str) -> Result<()> {
    if series.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

#[inline]
pub(crate) fn cmp_finite<T: Scalar>(a: &T, b: &T) -> Ordering {
    a.partial_cmp(b).expect("finite values are totally ordered")
}

/// Permutation sorting `series` ascending; ties keep time order.
pub(crate) fn sort_order<T: Scalar>(series: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..series.len()).collect();
    order.sort_by(|&a, &b| cmp_finite(&series[a], &series[b]));
    order
}

impl<T: Scalar> EmpiricalDistribution<T> {
    pub fn new(sample: &[T]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        check_finite(sample, "sample")?;
        let original_index = sort_order(sample);
        let sorted = original_index.iter().map(|&t| sample[t]).collect();
        Ok(Self {
            sorted,
            original_index,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_sample(&self) -> &[T] {
        &self.sorted
    }

    /// `original_index()[k]` is the time index of `sorted_sample()[k]`.
    pub fn original_index(&self) -> &[usize] {
        &self.original_index
    }

    pub fn min(&self) -> T {
        self.sorted[0]
    }

    pub fn max(&self) -> T {
        self.sorted[self.sorted.len() - 1]
    }

    /// Number of observations `<= x`.
    pub fn count_le(&self, x: T) -> usize {
        self.sorted.partition_point(|&s| s <= x)
    }

    /// Number of observations `< x`.
    pub fn count_lt(&self, x: T) -> usize {
        self.sorted.partition_point(|&s| s < x)
    }

    /// Size of the largest group of equal observations.
    pub fn largest_tie(&self) -> usize {
        self.sorted
            .chunk_by(|a, b| a == b)
            .map(<[T]>::len)
            .max()
            .unwrap_or(0)
    }

    /// Margin slack from ties: `ecdf(quantile(u)) - u` never exceeds this.
    pub fn tie_slack(&self) -> T {
        T::from_count(self.largest_tie()) / T::from_count(self.len())
    }

    pub fn ecdf(&self, x: T) -> T {
        T::from_count(self.count_le(x)) / T::from_count(self.len())
    }

    /// Smallest sample value whose ECDF is `>= u`; the minimum for `u = 0`.
    pub fn quantile(&self, u: T) -> Result<T> {
        if !(u >= T::zero() && u <= T::one()) {
            return Err(Error::out_of_range("u", u.to_f64_lossy(), "[0, 1]"));
        }
        if u == T::zero() {
            return Ok(self.min());
        }
        let n = T::from_count(self.len());
        // ECDF at sorted position k is nondecreasing in k.
        let k = partition_point_by_index(self.len(), |k| {
            T::from_count(self.count_le(self.sorted[k])) / n < u
        });
        Ok(self.sorted[k.min(self.len() - 1)])
    }

    /// Quantile at the exact rational level `num / den` (`num <= den`, `den > 0`).
    pub fn quantile_ratio(&self, num: usize, den: usize) -> T {
        assert!(den > 0 && num <= den, "quantile level {num}/{den} outside [0, 1]");
        if num == 0 {
            return self.min();
        }
        let n = self.len() as u128;
        let k = partition_point_by_index(self.len(), |k| {
            (self.count_le(self.sorted[k]) as u128) * (den as u128) < (num as u128) * n
        });
        self.sorted[k.min(self.len() - 1)]
    }
}

fn partition_point_by_index(len: usize, mut pred: impl FnMut(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (0, len);
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        if pred(mid) {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Per-observation count of samples `<= x(t)` (maximal rank within ties).
pub fn max_ranks<T: Scalar>(series: &[T]) -> Vec<usize> {
    let order = sort_order(series);
    let mut ranks = vec![0; series.len()];
    let mut end = order.len();
    for k in (0..order.len()).rev() {
        if k + 1 < order.len() && series[order[k]] != series[order[k + 1]] {
            end = k + 1;
        }
        ranks[order[k]] = end;
    }
    ranks
}

/// Per-observation count of samples `< x(t)` (zero-based minimal rank).
pub fn min_ranks<T: Scalar>(series: &[T]) -> Vec<usize> {
    let order = sort_order(series);
    let mut ranks = vec![0; series.len()];
    let mut start = 0;
    for k in 0..order.len() {
        if k > 0 && series[order[k]] != series[order[k - 1]] {
            start = k;
        }
        ranks[order[k]] = start;
    }
    ranks
}

/// Maps each observation to its ECDF value; ties share the top rank of their group.
pub fn rank_transform<T: Scalar>(series: &[T]) -> Result<Vec<T>> {
    if series.is_empty() {
        return Err(Error::EmptySample);
    }
    check_finite(series, "series")?;
    let n = T::from_count(series.len());
    Ok(max_ranks(series)
        .into_iter()
        .map(|r| T::from_count(r) / n)
        .collect())
}
