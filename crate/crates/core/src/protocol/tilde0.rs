//! The pointer state `|0̃⟩`, whose position wavefunction is
//! `sinc(πq/2λ)/√(2λ)`.
//!
//! The exact state has infinite energy, so every construction here is a
//! finite-energy stand-in. The sinc projection is the reference the transfer
//! error is measured against.

use ndarray::{Array1, Array2};
use std::f64::consts::PI;

use super::gates::{ConditionalGate, PauliAxis};
use super::ProtocolParams;
use crate::error::Result;
use crate::hilbert::{self, hermite_functions, CvState, QuadratureEigenbasis};
use crate::quad::{self, QuadOptions};
use crate::C64;

/// Truncation used for the reference expansion before it is cut to `d`;
/// larger working truncations expand to `3d/2` instead.
pub const REFERENCE_DIM: usize = 300;
/// Half-width of the position window integrated over.
pub const INTEGRATION_RANGE: f64 = 60.0;
pub const QUADRATURE_TOL: f64 = 1e-10;
/// `λ e^r` at the optimum of the squeezed-vacuum overlap.
pub const SQUEEZE_PRODUCT: f64 = 1.12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tilde0Method {
    SincProjection,
    IteratedEncode,
    Squeezed,
}

impl std::str::FromStr for Tilde0Method {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sinc-projection" => Ok(Self::SincProjection),
            "iterated-encode" => Ok(Self::IteratedEncode),
            "squeezed" => Ok(Self::Squeezed),
            other => Err(format!("unknown tilde0 method `{other}`")),
        }
    }
}

/// How a `|0̃⟩` approximation was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct Tilde0Report {
    pub method: Tilde0Method,
    /// Fock levels used before projecting down to the working truncation.
    pub reference_dim: usize,
    /// Squared norm of the expansion that survived the cut to `d`.
    pub retained_norm: f64,
    pub quadrature_error: f64,
    pub quadrature_tolerance: f64,
    pub integration_range: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Tilde0 {
    pub state: CvState,
    pub report: Tilde0Report,
}

/// `⟨n|0̃⟩ = ∫ hₙ(q) sinc(πq/2λ)/√(2λ) dq`, integrated over `[−60, 60]`,
/// cut to `d` levels and renormalised. Odd components vanish by parity and
/// are set to zero exactly.
pub fn sinc_projection(lambda: f64, d: usize) -> Result<Tilde0> {
    let d_ref = if d < REFERENCE_DIM { REFERENCE_DIM } else { d + d / 2 };
    let scale = (2.0 * lambda).sqrt().recip();
    let half_period = 2.0 * lambda;
    let integrand = |q: f64, out: &mut [f64]| {
        hermite_functions(q, d_ref, out);
        let x = PI * q / (2.0 * lambda);
        let s = if x == 0.0 { 1.0 } else { x.sin() / x };
        for v in out.iter_mut() {
            *v *= s * scale;
        }
    };
    let opts = QuadOptions {
        tolerance: QUADRATURE_TOL / 2.0,
        // one panel per sinc half-period keeps the oscillation resolved
        initial_panels: (INTEGRATION_RANGE / half_period).ceil() as usize,
        max_depth: 30,
    };
    let res = quad::integrate(&integrand, d_ref, 0.0, INTEGRATION_RANGE, opts)?;
    let full: Vec<f64> = res
        .values
        .iter()
        .enumerate()
        .map(|(n, v)| if n % 2 == 0 { 2.0 * v } else { 0.0 })
        .collect();
    let total: f64 = full.iter().map(|v| v * v).sum();
    let kept: f64 = full[..d].iter().map(|v| v * v).sum();
    let state = CvState::normalized(Array1::from_iter(full[..d].iter().map(|&v| C64::new(v, 0.0))))?;
    Ok(Tilde0 {
        state,
        report: Tilde0Report {
            method: Tilde0Method::SincProjection,
            reference_dim: d_ref,
            retained_norm: kept / total,
            quadrature_error: 2.0 * res.error_estimate,
            quadrature_tolerance: QUADRATURE_TOL,
            integration_range: INTEGRATION_RANGE,
            evaluations: res.evaluations,
        },
    })
}

/// Runs the `N` interaction rounds on vacuum with a single qubit that is
/// reset to `|0⟩` after each round, and returns the dominant eigenvector of
/// the resulting mode state.
fn iterated_encode(params: &ProtocolParams) -> Result<Tilde0> {
    let d = params.dim();
    let basis = QuadratureEigenbasis::new(d)?;
    // Columns hold the unnormalised mode branches left behind by each reset.
    let mut branches = Array2::<C64>::zeros((d, 1));
    branches[[0, 0]] = C64::new(1.0, 0.0);
    for k in 1..=params.n_qubits() {
        let b = branches.ncols();
        let mut psi = Array2::<C64>::zeros((d, 2 * b));
        for j in 0..b {
            psi.column_mut(2 * j).assign(&branches.column(j));
        }
        let v = params.kick(k);
        let w = params.signed_shift(k);
        ConditionalGate::new(1, PauliAxis::Y, basis.exp_iq(v), basis.exp_iq(-v)).apply(&mut psi);
        ConditionalGate::new(1, PauliAxis::X, basis.exp_ip(w), basis.exp_ip(-w)).apply(&mut psi);
        branches = psi;
    }
    // Dominant eigenvector of ρ = B B† via the smaller Gram matrix B† B.
    let bh = branches.t().mapv(|z| z.conj());
    let gram = bh.dot(&branches);
    let (vals, vecs) = hilbert::hermitian_eigen(&gram);
    let top = vals.len() - 1;
    let mut amps = branches.dot(&vecs.column(top));
    let anchor = amps
        .iter()
        .copied()
        .fold(C64::new(0.0, 0.0), |best, z| if z.norm() > best.norm() + 1e-12 { z } else { best });
    let phase = anchor.conj() / anchor.norm();
    amps.mapv_inplace(|z| z * phase);
    Ok(Tilde0 {
        state: CvState::normalized(amps)?,
        report: Tilde0Report {
            method: Tilde0Method::IteratedEncode,
            reference_dim: d,
            retained_norm: vals[top],
            quadrature_error: 0.0,
            quadrature_tolerance: 0.0,
            integration_range: 0.0,
            evaluations: 0,
        },
    })
}

/// Builds an approximation of `|0̃⟩` for the given parameters.
pub fn tilde0(params: &ProtocolParams, method: Tilde0Method) -> Result<Tilde0> {
    match method {
        Tilde0Method::SincProjection => sinc_projection(params.lambda(), params.dim()),
        Tilde0Method::IteratedEncode => iterated_encode(params),
        Tilde0Method::Squeezed => {
            let r = (SQUEEZE_PRODUCT / params.lambda()).ln();
            Ok(Tilde0 {
                state: hilbert::squeezed_vacuum(params.dim(), r)?,
                report: Tilde0Report {
                    method,
                    reference_dim: params.dim(),
                    retained_norm: 1.0,
                    quadrature_error: 0.0,
                    quadrature_tolerance: 0.0,
                    integration_range: 0.0,
                    evaluations: 0,
                },
            })
        }
    }
}
