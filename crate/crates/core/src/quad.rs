//! Globally adaptive 7/15-point Gauss-Kronrod quadrature.

#![allow(clippy::excessive_precision)]

use crate::Scalar;

const KRONROD_NODES: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const KRONROD_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
const GAUSS_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_SEGMENTS: usize = 2000;

struct Segment<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn gauss_kronrod<T: Scalar>(f: &mut impl FnMut(T) -> T, a: T, b: T) -> Segment<T> {
    let half = (b - a) * T::lit(0.5);
    let center = (a + b) * T::lit(0.5);
    let fc = f(center);
    let mut kronrod = fc * T::lit(KRONROD_WEIGHTS[7]);
    let mut gauss = fc * T::lit(GAUSS_WEIGHTS[3]);
    for k in 0..7 {
        let dx = half * T::lit(KRONROD_NODES[k]);
        let pair = f(center - dx) + f(center + dx);
        kronrod += pair * T::lit(KRONROD_WEIGHTS[k]);
        if k % 2 == 1 {
            gauss += pair * T::lit(GAUSS_WEIGHTS[k / 2]);
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).abs();
    Segment { a, b, value, error }
}

/// Integrates `f` over `[a, b]`, pre-split at `breaks` (points outside the
/// interval are ignored), bisecting the worst segment until the summed error
/// estimate drops below `abs_tol`.
pub(crate) fn integrate<T: Scalar>(
    mut f: impl FnMut(T) -> T,
    a: T,
    b: T,
    breaks: &[T],
    abs_tol: T,
) -> T {
    if !(b > a) {
        return T::zero();
    }
    let mut points = vec![a];
    let mut inner: Vec<T> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).expect("finite break points"));
    points.extend(inner);
    points.push(b);

    let mut segments: Vec<Segment<T>> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gauss_kronrod(&mut f, w[0], w[1]))
        .collect();

    while segments.len() < MAX_SEGMENTS {
        let total_error: T = segments.iter().map(|s| s.error).sum();
        if total_error <= abs_tol {
            break;
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.partial_cmp(&y.1.error).expect("finite error"))
            .map(|(idx, _)| idx)
            .expect("at least one segment");
        let seg = segments.swap_remove(worst);
        let mid = (seg.a + seg.b) * T::lit(0.5);
        if !(mid > seg.a && mid < seg.b) {
            // Segment cannot be split further at this precision.
            segments.push(Segment {
                error: T::zero(),
                ..seg
            });
            continue;
        }
        segments.push(gauss_kronrod(&mut f, seg.a, mid));
        segments.push(gauss_kronrod(&mut f, mid, seg.b));
    }
    // Summing in position order keeps the result independent of refinement order.
    segments.sort_by(|x, y| x.a.partial_cmp(&y.a).expect("finite endpoints"));
    segments.iter().map(|s| s.value).sum()
}
