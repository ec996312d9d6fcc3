//! Small dense matrix helpers on top of `nalgebra::DMatrix`.

use nalgebra::DMatrix;
use num_traits::Float;

/// Coefficients of the [13/13] Padé approximant to `exp`.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];

/// 1-norm bound under which the [13/13] approximant is accurate to unit roundoff.
const THETA13: f64 = 5.371_920_351_148_152;

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

/// `max |a - b|` entrywise. Shapes must agree.
pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    debug_assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Maximum absolute column sum.
pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Maximum absolute row sum.
pub fn norm_inf(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `(m + mᵀ) / 2`.
pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Matrix exponential by scaling and squaring with a [13/13] Padé approximant.
///
/// Returns `None` only if the Padé denominator is singular, which does not
/// happen for finite input after scaling.
pub fn expm(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    assert!(a.is_square(), "expm needs a square matrix");
    let dim = a.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let nrm = norm1(a);
    if nrm == 0.0 {
        return Some(id);
    }
    if !nrm.is_finite() {
        return None;
    }

    let s = if nrm > THETA13 {
        Float::ceil(Float::log2(nrm / THETA13)) as i32
    } else {
        0
    };
    let scaled = a * Float::powi(2.0, -s);

    let b = &PADE13;
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3]
        + &id * b[1];
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2]
        + &id * b[0];

    let num = &v + &u;
    let den = &v - &u;
    let mut r = den.lu().solve(&num)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Some(r)
}
