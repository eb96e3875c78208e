//! Matrix exponential by scaling and squaring with a degree-13 Padé approximant.

use nalgebra::DMatrix;
use ndarray::Array2;

use crate::C64;

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
const THETA13: f64 = 5.371_920_351_148_152;

pub(crate) fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn lincomb(terms: &[(f64, &Array2<C64>)], identity_coeff: f64) -> Array2<C64> {
    let n = terms[0].1.nrows();
    let mut out = Array2::<C64>::zeros((n, n));
    for &(c, m) in terms {
        out.scaled_add(C64::new(c, 0.0), m);
    }
    for i in 0..n {
        out[[i, i]] += identity_coeff;
    }
    out
}

/// `exp(a)` for a square complex matrix.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a.mapv(|z| z / 2f64.powi(s));

    let b = &PADE13;
    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);

    let inner_u = a6.dot(&lincomb(&[(b[13], &a6), (b[11], &a4), (b[9], &a2)], 0.0));
    let u = a.dot(&lincomb(
        &[(1.0, &inner_u), (b[7], &a6), (b[5], &a4), (b[3], &a2)],
        b[1],
    ));
    let inner_v = a6.dot(&lincomb(&[(b[12], &a6), (b[10], &a4), (b[8], &a2)], 0.0));
    let v = lincomb(&[(1.0, &inner_v), (b[6], &a6), (b[4], &a4), (b[2], &a2)], b[0]);

    let p = to_dmatrix(&(&v + &u));
    let q = to_dmatrix(&(&v - &u));
    let r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is singular");
    let mut r = from_dmatrix(&r);
    for _ in 0..s {
        r = r.dot(&r);
    }
    r
}

pub(crate) fn to_dmatrix(a: &Array2<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

fn from_dmatrix(a: &DMatrix<C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_matrix() {
        let mut a = Array2::<C64>::zeros((3, 3));
        a[[0, 0]] = C64::new(1.0, 0.0);
        a[[1, 1]] = C64::new(-2.0, 0.5);
        a[[2, 2]] = C64::new(0.0, 30.0);
        let e = expm(&a);
        for i in 0..3 {
            assert!((e[[i, i]] - a[[i, i]].exp()).norm() < 1e-12);
        }
        assert!(e[[0, 1]].norm() < 1e-14);
    }

    #[test]
    fn rotation_generator() {
        // exp([[0, -t], [t, 0]]) is a rotation by t
        let t = 7.3;
        let mut a = Array2::<C64>::zeros((2, 2));
        a[[0, 1]] = C64::new(-t, 0.0);
        a[[1, 0]] = C64::new(t, 0.0);
        let e = expm(&a);
        assert!((e[[0, 0]].re - t.cos()).abs() < 1e-12);
        assert!((e[[1, 0]].re - t.sin()).abs() < 1e-12);
    }

    #[test]
    fn nilpotent_is_polynomial() {
        let mut a = Array2::<C64>::zeros((3, 3));
        a[[0, 1]] = C64::new(2.0, 0.0);
        a[[1, 2]] = C64::new(3.0, 0.0);
        let e = expm(&a);
        // I + A + A²/2
        assert!((e[[0, 2]].re - 3.0).abs() < 1e-12);
        assert!((e[[0, 1]].re - 2.0).abs() < 1e-12);
    }
}
