//! Wigner function from the displaced-parity series.
//!
//! `W(α) = Tr[ρ D(2α) Π]/π`. The Fock elements of `D(2α)` are written with
//! the normalised Laguerre functions
//! `f_m⁽ᵏ⁾(x) = √(m!/(m+k)!) x^{k/2} e^{−x/2} L_m⁽ᵏ⁾(x)`, `x = 4|α|²`,
//! which are bounded by one. For each `k` they are generated by upward
//! recurrence in `m`, which follows the dominant solution, with a running
//! log scale so that neither the tiny starting values nor intermediate
//! growth leave the floating-point range.

use ndarray::Array2;
use rayon::prelude::*;
use std::f64::consts::PI;

use super::CvDensity;
use crate::C64;

const BIG: f64 = 1e150;

/// Wigner function at a single phase-space point, normalised so that
/// `∬ W dq dp = 1`.
pub fn wigner_point(rho: &CvDensity, q: f64, p: f64) -> f64 {
    let d = rho.dim();
    let mat = rho.matrix();
    // β = 2α with α = (q + ip)/√2
    let beta = C64::new(q, p) * 2f64.sqrt();
    let x = beta.norm_sqr();
    let parity = |m: usize| if m % 2 == 0 { 1.0 } else { -1.0 };
    if x == 0.0 {
        return (0..d).map(|m| parity(m) * mat[[m, m]].re).sum::<f64>() / PI;
    }
    let phase = beta / beta.norm();
    let ln_x = x.ln();
    let ln_big = BIG.ln();
    let mut w = 0.0;
    let mut ln_fact = 0.0; // ln k!
    let mut rot = C64::new(1.0, 0.0); // e^{ikθ}
    for k in 0..d {
        if k > 0 {
            ln_fact += (k as f64).ln();
            rot *= phase;
        }
        let weight = if k == 0 { 1.0 } else { 2.0 };
        let kf = k as f64;
        let mut scale = 0.5 * kf * ln_x - 0.5 * x - 0.5 * ln_fact;
        let mut factor = scale.exp();
        let (mut prev, mut cur) = (0.0, 1.0);
        for m in 0..d - k {
            let f = cur * factor;
            if f != 0.0 {
                w += weight * parity(m) * f * (mat[[m, m + k]] * rot).re;
            }
            let mf = m as f64;
            let next =
                ((2.0 * mf + 1.0 + kf - x) * cur - (mf * (mf + kf)).sqrt() * prev) / ((mf + 1.0) * (mf + kf + 1.0)).sqrt();
            prev = cur;
            cur = next;
            if cur.abs() > BIG {
                cur /= BIG;
                prev /= BIG;
                scale += ln_big;
                factor = scale.exp();
            }
        }
    }
    w / PI
}

/// Wigner function on a rectangular grid; entry `[i, j]` is `W(q_i, p_j)`.
pub fn wigner(rho: &CvDensity, qgrid: &[f64], pgrid: &[f64]) -> Array2<f64> {
    let rows: Vec<Vec<f64>> = qgrid
        .par_iter()
        .map(|&q| pgrid.iter().map(|&p| wigner_point(rho, q, p)).collect())
        .collect();
    Array2::from_shape_fn((qgrid.len(), pgrid.len()), |(i, j)| rows[i][j])
}
