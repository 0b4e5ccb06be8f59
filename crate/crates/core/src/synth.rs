//! Seeded synthetic return panels with known dependence.
//!
//! The random stream is ChaCha20 (`rand_chacha::ChaCha20Rng::seed_from_u64`)
//! feeding `rand_distr::StandardNormal`; the same seed gives bit-identical
//! panels on every platform and thread count.

use chrono::{Duration, NaiveDate, NaiveDateTime};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ingest::{PricePanel, ReturnMatrix, TradingCalendar};
use crate::{Error, Result, Scalar};

/// Dependence structure of a synthetic panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SynthKind<T> {
    /// Standard normal returns, every pair with correlation `c`.
    Gaussian(T),
    Independent,
    /// One common driver, asset `k` scaled by `1 + k/2`.
    Comonotone,
    /// One common driver with alternating sign; adjacent assets are
    /// countermonotone, assets of equal parity comonotone.
    Countermonotone,
}

impl<T: Scalar> SynthKind<T> {
    fn validate(&self, assets: usize) -> Result<()> {
        if let SynthKind::Gaussian(c) = *self {
            if !(c.abs() <= T::one()) {
                return Err(Error::InvalidCorrelation(c.to_f64_lossy()));
            }
            let bound = -1.0 / (assets as f64 - 1.0);
            if c.to_f64_lossy() < bound {
                return Err(Error::InfeasibleEquicorrelation {
                    c: c.to_f64_lossy(),
                    assets,
                    bound,
                });
            }
        }
        Ok(())
    }
}

/// Where synthetic observations sit in calendar time.
#[derive(Debug, Clone, PartialEq)]
pub struct Timeline {
    pub calendar: TradingCalendar,
    pub start: NaiveDate,
    pub interval_minutes: u32,
}

impl Default for Timeline {
    fn default() -> Self {
        Self {
            calendar: TradingCalendar::default(),
            start: NaiveDate::from_ymd_opt(2007, 1, 3).expect("valid date"),
            interval_minutes: 30,
        }
    }
}

impl Timeline {
    pub fn per_day(&self) -> Result<usize> {
        Ok(self.calendar.intervals_per_session(self.interval_minutes)? as usize)
    }

    /// Interval start times of `len` consecutive returns, filling each
    /// session before moving to the next trading day.
    pub fn stamps(&self, len: usize) -> Result<Vec<NaiveDateTime>> {
        let per_day = self.per_day()?;
        let days = self.calendar.trading_days(self.start, len.div_ceil(per_day));
        Ok(days
            .into_iter()
            .flat_map(|d| {
                (0..per_day as u32).map(move |k| (d, k))
            })
            .take(len)
            .map(|(d, k)| self.calendar.grid_point(d, self.interval_minutes, k))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec<T> {
    pub kind: SynthKind<T>,
    pub assets: usize,
    pub length: usize,
    pub seed: u64,
    pub timeline: Timeline,
}

impl<T: Scalar> SynthSpec<T> {
    pub fn new(kind: SynthKind<T>, assets: usize, length: usize, seed: u64) -> Self {
        Self {
            kind,
            assets,
            length,
            seed,
            timeline: Timeline::default(),
        }
    }
}

/// A stretch of `length` observations drawn with one dependence structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regime<T> {
    pub kind: SynthKind<T>,
    pub length: usize,
}

fn draw(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn sample_panel<T: Scalar>(spec: &SynthSpec<T>) -> Result<ReturnMatrix<T>> {
    sample_regimes(
        &[Regime {
            kind: spec.kind,
            length: spec.length,
        }],
        spec.assets,
        spec.seed,
        &spec.timeline,
    )
}

/// Consecutive regimes sharing one random stream.
pub fn sample_regimes<T: Scalar>(
    regimes: &[Regime<T>],
    assets: usize,
    seed: u64,
    timeline: &Timeline,
) -> Result<ReturnMatrix<T>> {
    if assets < 2 {
        return Err(Error::InvalidSpec(format!("need at least 2 assets, got {assets}")));
    }
    let length: usize = regimes.iter().map(|r| r.length).sum();
    if regimes.is_empty() || regimes.iter().any(|r| r.length == 0) {
        return Err(Error::InvalidSpec("every regime needs at least one observation".into()));
    }
    for regime in regimes {
        regime.kind.validate(assets)?;
    }

    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rows: Vec<Vec<T>> = vec![Vec::with_capacity(length); assets];
    let mut idio = vec![0.0f64; assets];
    for regime in regimes {
        for _ in 0..regime.length {
            match regime.kind {
                SynthKind::Gaussian(c) => {
                    let c = c.to_f64_lossy();
                    if c >= 0.0 {
                        // One common factor plus idiosyncratic noise.
                        let factor = draw(&mut rng);
                        let (load, noise) = (c.sqrt(), (1.0 - c).sqrt());
                        for row in rows.iter_mut() {
                            row.push(T::lit(load * factor + noise * draw(&mut rng)));
                        }
                    } else {
                        // Symmetric square root of the equicorrelation matrix.
                        idio.iter_mut().for_each(|e| *e = draw(&mut rng));
                        let k = assets as f64;
                        let own = (1.0 - c).sqrt();
                        let shared = ((1.0 + (k - 1.0) * c).max(0.0).sqrt() - own) / k;
                        let total: f64 = idio.iter().sum();
                        for (row, e) in rows.iter_mut().zip(&idio) {
                            row.push(T::lit(own * e + shared * total));
                        }
                    }
                }
                SynthKind::Independent => {
                    for row in rows.iter_mut() {
                        row.push(T::lit(draw(&mut rng)));
                    }
                }
                SynthKind::Comonotone => {
                    let x = draw(&mut rng);
                    for (k, row) in rows.iter_mut().enumerate() {
                        row.push(T::lit(x * (1.0 + 0.5 * k as f64)));
                    }
                }
                SynthKind::Countermonotone => {
                    let x = draw(&mut rng);
                    for (k, row) in rows.iter_mut().enumerate() {
                        row.push(T::lit(if k % 2 == 0 { x } else { -x }));
                    }
                }
            }
        }
    }
    let width = (assets - 1).to_string().len().max(3);
    let ids = (0..assets).map(|k| format!("A{k:0width$}")).collect();
    ReturnMatrix::new(ids, timeline.interval_minutes, rows, timeline.stamps(length)?)
}

/// `n` draws of a standard bivariate normal with correlation `c`, built as
/// `y = c x + sqrt(1 - c^2) z`.
pub fn sample_bivariate_gaussian<T: Scalar>(c: T, n: usize, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(c.abs() <= T::one()) {
        return Err(Error::InvalidCorrelation(c.to_f64_lossy()));
    }
    if n == 0 {
        return Err(Error::InvalidSpec("need at least one draw".into()));
    }
    let c = c.to_f64_lossy();
    let noise = ((1.0 - c) * (1.0 + c)).sqrt();
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x = draw(&mut rng);
        let z = draw(&mut rng);
        xs.push(T::lit(x));
        ys.push(T::lit(c * x + noise * z));
    }
    Ok((xs, ys))
}

/// Turns standardized returns into a price panel on `calendar`: asset `k`
/// starts at `base_price * (1 + k % 7)` and moves by `exp(vol_k * r)` per
/// interval with `vol_k = volatility * (1 + (k % 4) / 4)`. Arithmetic returns
/// recovered from these prices are a strictly increasing transform of `r`,
/// so every pairwise copula is preserved.
pub fn price_panel<T: Scalar>(
    matrix: &ReturnMatrix<T>,
    calendar: &TradingCalendar,
    base_price: T,
    volatility: T,
) -> Result<PricePanel<T>> {
    if !(base_price > T::zero() && volatility > T::zero()) {
        return Err(Error::InvalidSpec("base price and volatility must be positive".into()));
    }
    let k = matrix.assets();
    let step = Duration::minutes(i64::from(matrix.interval_minutes()));
    let vols: Vec<T> = (0..k)
        .map(|a| volatility * (T::one() + T::from_count(a % 4) * T::lit(0.25)))
        .collect();
    let mut current: Vec<T> = (0..k)
        .map(|a| base_price * T::from_count(1 + a % 7))
        .collect();
    let mut timestamps = Vec::new();
    let mut prices: Vec<Vec<Option<T>>> = vec![Vec::new(); k];
    for (t, &start) in matrix.stamps().iter().enumerate() {
        if timestamps.last() != Some(&start) {
            timestamps.push(start);
            for (row, &p) in prices.iter_mut().zip(&current) {
                row.push(Some(p));
            }
        }
        timestamps.push(start + step);
        for a in 0..k {
            current[a] *= (vols[a] * matrix.series(a)[t]).exp();
            prices[a].push(Some(current[a]));
        }
    }
    PricePanel::new(matrix.asset_ids().to_vec(), timestamps, prices, calendar.clone())
}
