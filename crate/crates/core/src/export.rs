//! CSV writers for grids, difference maps, tail curves and window relations.
//!
//! Numbers are written with their shortest round-trip decimal form. Columns
//! ending in `_permille` carry the same quantity multiplied by 1000.

use std::io::Write;

use crate::copula::CopulaGrid;
use crate::gaussian::DifferenceGrid;
use crate::taildep::{TailCurve, WindowReport};
use crate::{Error, Result, Scalar};

fn permille<T: Scalar>(x: T) -> T {
    x * T::lit(1000.0)
}

fn level<T: Scalar>(i: usize, m: usize) -> T {
    T::from_count(i) / T::from_count(m)
}

/// `i,j,u_hi,v_hi,density,cumulative` with one-based cell indices; appends
/// `density_permille` when requested.
pub fn write_grid_csv<T: Scalar, W: Write>(grid: &CopulaGrid<T>, mut sink: W, with_permille: bool) -> Result<()> {
    let m = grid.resolution();
    write!(sink, "i,j,u_hi,v_hi,density,cumulative")?;
    if with_permille {
        write!(sink, ",density_permille")?;
    }
    writeln!(sink)?;
    for i in 1..=m {
        for j in 1..=m {
            let d = grid.density(i - 1, j - 1);
            write!(
                sink,
                "{i},{j},{},{},{},{}",
                level::<T>(i, m),
                level::<T>(j, m),
                d,
                grid.cumulative(i, j)
            )?;
            if with_permille {
                write!(sink, ",{}", permille(d))?;
            }
            writeln!(sink)?;
        }
    }
    sink.flush()?;
    Ok(())
}

/// `i,j,u_hi,v_hi,d,d_permille`.
pub fn write_difference_csv<T: Scalar, W: Write>(diff: &DifferenceGrid<T>, mut sink: W) -> Result<()> {
    let m = diff.resolution();
    writeln!(sink, "i,j,u_hi,v_hi,d,d_permille")?;
    for i in 1..=m {
        for j in 1..=m {
            let d = diff.value(i - 1, j - 1);
            writeln!(
                sink,
                "{i},{j},{},{},{},{}",
                level::<T>(i, m),
                level::<T>(j, m),
                d,
                permille(d)
            )?;
        }
    }
    sink.flush()?;
    Ok(())
}

/// `alpha,lambda_lower,lambda_upper,lambda_gauss`.
pub fn write_tail_curve_csv<T: Scalar, W: Write>(
    curve: &TailCurve<T>,
    gaussian: &[T],
    mut sink: W,
) -> Result<()> {
    if gaussian.len() != curve.alphas.len() {
        return Err(Error::LengthMismatch {
            left: curve.alphas.len(),
            right: gaussian.len(),
        });
    }
    writeln!(sink, "alpha,lambda_lower,lambda_upper,lambda_gauss")?;
    for (k, alpha) in curve.alphas.iter().enumerate() {
        writeln!(
            sink,
            "{alpha},{},{},{}",
            curve.lower[k], curve.upper[k], gaussian[k]
        )?;
    }
    sink.flush()?;
    Ok(())
}

/// `window_start,window_end,mean_corr,alpha,lambda_lower,lambda_upper,lambda_gauss`,
/// one row per window and alpha.
pub fn write_relation_csv<T: Scalar, W: Write>(reports: &[WindowReport<T>], mut sink: W) -> Result<()> {
    writeln!(
        sink,
        "window_start,window_end,mean_corr,alpha,lambda_lower,lambda_upper,lambda_gauss"
    )?;
    for r in reports {
        for (k, alpha) in r.tail.alphas.iter().enumerate() {
            writeln!(
                sink,
                "{},{},{},{alpha},{},{},{}",
                r.window_start,
                r.window_end,
                r.mean_correlation,
                r.tail.lower[k],
                r.tail.upper[k],
                r.gaussian_tail.lower[k]
            )?;
        }
    }
    sink.flush()?;
    Ok(())
}
