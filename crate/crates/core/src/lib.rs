//! Empirical copula densities and tail-dependence coefficients for panels of
//! asset returns, with the analytic Gaussian copula as a reference model.
//!
//! The pipeline runs `ingest` (prices to intraday returns), `empirical`
//! (step ECDF and quantiles), `copula` (gridded empirical copula for one pair
//! or averaged over every pair), `gaussian` (normal machinery, Gaussian
//! copula grids and the empirical-minus-Gaussian difference map) and `taildep`
//! (tail coefficients, Pearson matrices and rolling windows). `synth`
//! generates seeded ground-truth panels.
//!
//! Every numeric type is generic over [`Scalar`]; the `*64` / `*32` aliases
//! below fix the precision.

pub mod copula;
pub mod empirical;
mod error;
pub mod export;
pub mod gaussian;
pub mod ingest;
mod quad;
pub mod scalar;
pub mod synth;
pub mod taildep;

pub use copula::{
    average_pairwise_density, empirical_copula_cumulative, empirical_copula_density,
    rebuild_joint_cdf, CopulaGrid,
};
pub use empirical::{rank_transform, EmpiricalDistribution};
pub use error::{Error, Result};
pub use gaussian::{
    bivariate_normal_cdf, difference_map, gaussian_copula_cdf, gaussian_copula_density,
    gaussian_grid, std_normal_cdf, std_normal_pdf, std_normal_quantile, DifferenceGrid,
    DifferenceOptions, GaussianCopulaParams, GaussianGridCache,
};
pub use ingest::{
    compute_returns, load_prices, pair_view, LoadReport, PricePanel, ReturnMatrix,
    TradingCalendar,
};
pub use scalar::Scalar;
pub use synth::{sample_bivariate_gaussian, sample_panel, Regime, SynthKind, SynthSpec, Timeline};
pub use taildep::{
    average_gaussian_tail, dynamics, lower_tail, mean_correlation, partition_windows,
    pearson_matrix, upper_tail, upper_tail_survival, window_report, CorrelationMatrix, TailCurve,
    UpperTailConvention, WindowReport,
};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Alpha levels used by default for tail curves.
pub const DEFAULT_ALPHAS: [f64; 4] = [0.02, 0.04, 0.1, 0.25];

/// Default copula grid resolution.
pub const DEFAULT_RESOLUTION: usize = 50;

/// Default rolling window length in trading days.
pub const DEFAULT_WINDOW_DAYS: usize = 10;

pub type PricePanel64 = PricePanel<f64>;
pub type PricePanel32 = PricePanel<f32>;
pub type ReturnMatrix64 = ReturnMatrix<f64>;
pub type ReturnMatrix32 = ReturnMatrix<f32>;
pub type EmpiricalDistribution64 = EmpiricalDistribution<f64>;
pub type EmpiricalDistribution32 = EmpiricalDistribution<f32>;
pub type CopulaGrid64 = CopulaGrid<f64>;
pub type CopulaGrid32 = CopulaGrid<f32>;
pub type DifferenceGrid64 = DifferenceGrid<f64>;
pub type DifferenceGrid32 = DifferenceGrid<f32>;
pub type CorrelationMatrix64 = CorrelationMatrix<f64>;
pub type CorrelationMatrix32 = CorrelationMatrix<f32>;
pub type TailCurve64 = TailCurve<f64>;
pub type TailCurve32 = TailCurve<f32>;
pub type WindowReport64 = WindowReport<f64>;
pub type WindowReport32 = WindowReport<f32>;
