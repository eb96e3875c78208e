//! Encoding a mode into `N` qubits with `U = Π_k W_k V_k` (qubit 1 first),
//! the transfer error `ε`, decoding, and recovered fidelity.
//!
//! Joint amplitudes are stored CV-major: a `(d, 2^N)` matrix whose entry
//! `[n, b]` multiplies `|n⟩ ⊗ |b⟩`.

mod gates;
mod optimize;
mod tilde0;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{self, CvDensity, CvState, Ket, QuadratureEigenbasis};
use crate::noise::{self, KrausChannel, Target};
use crate::register::{to_phi_basis, BranchEnsemble, RegisterState};
use crate::C64;

pub use gates::{gate_v, gate_v_with, gate_w, gate_w_with, ConditionalGate, PauliAxis};
pub use optimize::{
    log_grid, optimize_lambda, optimize_lambda_for, Evaluator, LambdaOptimum, COARSE_POINTS, EDGE_LIMIT, LAMBDA_RANGE,
};
pub use tilde0::{
    sinc_projection, tilde0, Tilde0, Tilde0Method, Tilde0Report, INTEGRATION_RANGE, QUADRATURE_TOL, REFERENCE_DIM,
    SQUEEZE_PRODUCT,
};

/// Norm drift after encoding that triggers a truncation warning.
pub const NORM_DRIFT_WARN: f64 = 1e-6;
/// Fraction of the Fock basis (from the top) watched for truncation effects.
pub const EDGE_FRACTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolParams {
    lambda: f64,
    n_qubits: usize,
    dim: usize,
}

impl ProtocolParams {
    pub fn new(lambda: f64, n_qubits: usize, dim: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "interaction parameter must be positive",
            });
        }
        if n_qubits < 2 {
            return Err(Error::InvalidDimension {
                dim: n_qubits,
                reason: "protocol needs at least two qubits",
            });
        }
        if dim < 2 {
            return Err(Error::InvalidDimension {
                dim,
                reason: "need at least two Fock levels",
            });
        }
        Ok(Self { lambda, n_qubits, dim })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn register_len(&self) -> usize {
        1 << self.n_qubits
    }

    /// `v_k = π/(2λ2^k)`.
    pub fn kick(&self, k: usize) -> f64 {
        std::f64::consts::PI / (2.0 * self.lambda * 2f64.powi(k as i32))
    }

    /// `w_k = λ2^k/2`.
    pub fn shift(&self, k: usize) -> f64 {
        self.lambda * 2f64.powi(k as i32) / 2.0
    }

    /// `w_k` with the sign used in `W_k`: negative on the last qubit.
    pub fn signed_shift(&self, k: usize) -> f64 {
        if k == self.n_qubits {
            -self.shift(k)
        } else {
            self.shift(k)
        }
    }

    /// Warns when the largest conditional displacement plus the input's
    /// support radius reaches the classical turning point of `|d−1⟩`.
    pub fn truncation_warning(&self, support_radius: f64) -> Option<String> {
        let reach = self.lambda * 2f64.powi(self.n_qubits as i32) * std::f64::consts::SQRT_2 / 2.0 + support_radius;
        let turning = (2.0 * self.dim as f64 - 1.0).sqrt();
        (reach >= turning).then(|| format!("displacement reach {reach:.2} >= turning point {turning:.2}"))
    }
}

/// Joint state of the mode and the register.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    amps: Array2<C64>,
}

impl HybridState {
    pub fn new(amps: Array2<C64>) -> Result<Self> {
        let cols = amps.ncols();
        if cols < 4 || !cols.is_power_of_two() {
            return Err(Error::InvalidDimension {
                dim: cols,
                reason: "register part must have 2^N columns with N >= 2",
            });
        }
        let amps = amps.as_standard_layout().into_owned();
        let n = hilbert::norm(amps.view().into_shape_with_order(amps.len()).expect("standard layout"));
        if (n - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: n,
                reason: "hybrid state must be normalised",
            });
        }
        Ok(Self { amps })
    }

    /// `|cv⟩ ⊗ |reg⟩`.
    pub fn product(cv: &CvState, reg: &RegisterState) -> Result<Self> {
        let (d, r) = (cv.dim(), reg.amps().len());
        Self::new(Array2::from_shape_fn((d, r), |(n, b)| cv.amps()[n] * reg.amps()[b]))
    }

    pub fn cv_dim(&self) -> usize {
        self.amps.nrows()
    }

    pub fn n_qubits(&self) -> usize {
        self.amps.ncols().trailing_zeros() as usize
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        hilbert::norm(self.ket())
    }

    /// `(⟨cv| ⊗ I)|Ψ⟩`: an unnormalised register vector.
    pub fn project_cv(&self, cv: &CvState) -> Result<Array1<C64>> {
        if cv.dim() != self.cv_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.cv_dim(),
                got: cv.dim(),
            });
        }
        Ok(self.amps.t().dot(&cv.amps().mapv(|z| z.conj())))
    }

    /// `Tr_CV |Ψ⟩⟨Ψ|`.
    pub fn reduced_register(&self) -> Array2<C64> {
        self.amps.t().dot(&self.amps.mapv(|z| z.conj()))
    }

    /// `Tr_DV |Ψ⟩⟨Ψ|`.
    pub fn reduced_cv(&self) -> Result<CvDensity> {
        CvDensity::new(self.amps.dot(&self.amps.t().mapv(|z| z.conj())))
    }

    /// Population in the top `fraction` of the Fock basis.
    pub fn edge_population(&self, fraction: f64) -> f64 {
        let d = self.cv_dim();
        let start = d - ((d as f64 * fraction).ceil() as usize).min(d);
        self.amps
            .axis_iter(Axis(0))
            .skip(start)
            .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>())
            .sum()
    }
}

impl Ket for HybridState {
    fn ket(&self) -> ArrayView1<'_, C64> {
        self.amps.view().into_shape_with_order(self.amps.len()).expect("standard layout")
    }
}

/// Register content after projecting the mode onto `|0̃⟩`.
#[derive(Debug, Clone)]
pub struct EncodedRegister {
    /// `(⟨0̃| ⊗ I) U |ψ, 0⟩`, computational basis, norm² = 1 − ε.
    pub amplitudes: Array1<C64>,
    pub epsilon: f64,
    /// Population left in the top tenth of the Fock basis after encoding.
    pub edge_population: f64,
}

impl EncodedRegister {
    /// Components in the `|φ_s⟩` basis, indexed by sign-vector label.
    pub fn phi_amplitudes(&self) -> Vec<C64> {
        to_phi_basis(&self.amplitudes)
    }
}

/// Mode reset to `|0̃⟩` plus the register's reduced state as a spectral
/// branch ensemble.
#[derive(Debug, Clone)]
pub struct ResetOutcome {
    pub tilde0: CvState,
    pub register: BranchEnsemble,
    /// Number of branches above the pruning threshold.
    pub rank: usize,
}

/// Result of encode → reset → (noise) → decode.
#[derive(Debug, Clone)]
pub struct Recovery {
    pub fidelity: f64,
    pub epsilon: f64,
    /// Weight of the heaviest branch right after the reset.
    pub dominant_weight: f64,
    pub branches_decoded: usize,
    /// Mode state after decoding, register traced out.
    pub recovered: CvDensity,
}

/// Cached gates and reference state for one `(λ, N, d)`.
#[derive(Debug, Clone)]
pub struct Protocol {
    params: ProtocolParams,
    // V_1, W_1, V_2, W_2, …
    gates: Vec<ConditionalGate>,
    tilde0: Tilde0,
}

fn clamp_unit(x: f64, what: &str) -> f64 {
    if x < 0.0 {
        if x < -1e-12 {
            log::debug!("clamped {what} = {x:.3e} to 0");
        }
        0.0
    } else {
        x
    }
}

impl Protocol {
    /// Builds the gates and the sinc-projection reference.
    pub fn new(params: ProtocolParams) -> Result<Self> {
        let reference = sinc_projection(params.lambda(), params.dim())?;
        Self::with_reference(params, reference)
    }

    pub fn with_reference(params: ProtocolParams, tilde0: Tilde0) -> Result<Self> {
        if tilde0.state.dim() != params.dim() {
            return Err(Error::DimensionMismatch {
                expected: params.dim(),
                got: tilde0.state.dim(),
            });
        }
        let basis = QuadratureEigenbasis::new(params.dim())?;
        let mut gates = Vec::with_capacity(2 * params.n_qubits());
        for k in 1..=params.n_qubits() {
            gates.push(gate_v_with(k, &params, &basis)?);
            gates.push(gate_w_with(k, &params, &basis)?);
        }
        Ok(Self { params, gates, tilde0 })
    }

    pub fn params(&self) -> &ProtocolParams {
        &self.params
    }

    pub fn gates(&self) -> &[ConditionalGate] {
        &self.gates
    }

    pub fn tilde0(&self) -> &CvState {
        &self.tilde0.state
    }

    pub fn tilde0_report(&self) -> &Tilde0Report {
        &self.tilde0.report
    }

    fn check_input(&self, input: &CvState) -> Result<()> {
        if input.dim() != self.params.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.params.dim(),
                got: input.dim(),
            });
        }
        Ok(())
    }

    fn check_hybrid(&self, state: &HybridState) -> Result<()> {
        if state.cv_dim() != self.params.dim() || state.n_qubits() != self.params.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.params.dim() * self.params.register_len(),
                got: state.matrix().len(),
            });
        }
        Ok(())
    }

    /// Applies `U` in place to stacked register blocks.
    pub fn apply_forward(&self, psi: &mut Array2<C64>) {
        for g in &self.gates {
            g.apply(psi);
        }
    }

    /// Applies `U†` in place: gates in reverse order, each adjointed.
    pub fn apply_adjoint(&self, psi: &mut Array2<C64>) {
        for g in self.gates.iter().rev() {
            g.adjoint().apply(psi);
        }
    }

    /// `U (|ψ⟩ ⊗ |0…0⟩)`.
    pub fn encode(&self, input: &CvState) -> Result<HybridState> {
        self.check_input(input)?;
        let mut psi = Array2::<C64>::zeros((self.params.dim(), self.params.register_len()));
        psi.column_mut(0).assign(input.amps());
        self.apply_forward(&mut psi);
        let out = HybridState { amps: psi };
        let drift = (out.norm() - 1.0).abs();
        if drift > NORM_DRIFT_WARN {
            log::warn!("norm drift {drift:.3e} after encoding; truncation too small");
        }
        Ok(out)
    }

    /// `U† |Ψ⟩`.
    pub fn decode(&self, state: &HybridState) -> Result<HybridState> {
        self.check_hybrid(state)?;
        let mut psi = state.amps.clone();
        self.apply_adjoint(&mut psi);
        Ok(HybridState { amps: psi })
    }

    /// Encodes `input` and projects the mode on `|0̃⟩`.
    pub fn encoded_register(&self, input: &CvState) -> Result<EncodedRegister> {
        let enc = self.encode(input)?;
        self.project_encoded(&enc)
    }

    fn project_encoded(&self, enc: &HybridState) -> Result<EncodedRegister> {
        let amplitudes = enc.project_cv(self.tilde0())?;
        let kept: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum();
        Ok(EncodedRegister {
            amplitudes,
            epsilon: clamp_unit(1.0 - kept, "epsilon").min(1.0),
            edge_population: enc.edge_population(EDGE_FRACTION),
        })
    }

    /// Transfer error `ε = 1 − ‖(⟨0̃| ⊗ I) U|ψ, 0⟩‖²`.
    pub fn epsilon(&self, input: &CvState) -> Result<f64> {
        Ok(self.encoded_register(input)?.epsilon)
    }

    /// Replaces the mode by `|0̃⟩` and returns the register's reduced state.
    pub fn reset_cv(&self, state: &HybridState) -> Result<ResetOutcome> {
        self.check_hybrid(state)?;
        let register = BranchEnsemble::from_density(&state.reduced_register())?;
        Ok(ResetOutcome {
            tilde0: self.tilde0().clone(),
            rank: register.len(),
            register,
        })
    }

    /// Decodes `|0̃⟩ ⊗ |χ_j⟩` for every branch; returns per-branch overlaps
    /// `|⟨ψ, 0|U†|0̃, χ_j⟩|²` and the mode density `Σ_j p_j Tr_DV(...)`.
    fn decode_branches(&self, input: &CvState, ens: &BranchEnsemble) -> Result<(Vec<f64>, Array2<C64>)> {
        let d = self.params.dim();
        let r = self.params.register_len();
        let per_chunk = (4096 / r).max(1);
        let t0 = self.tilde0().amps();
        let input_conj = input.amps().mapv(|z| z.conj());
        let chunks: Vec<&[crate::register::Branch]> = ens.branches().chunks(per_chunk).collect();
        let parts: Vec<(Vec<f64>, Array2<C64>)> = chunks
            .par_iter()
            .map(|chunk| {
                let mut psi = Array2::<C64>::zeros((d, chunk.len() * r));
                for (j, br) in chunk.iter().enumerate() {
                    for n in 0..d {
                        for b in 0..r {
                            psi[[n, j * r + b]] = t0[n] * br.state[b];
                        }
                    }
                }
                self.apply_adjoint(&mut psi);
                let overlaps: Vec<f64> = (0..chunk.len())
                    .map(|j| {
                        let col = psi.column(j * r);
                        input_conj.iter().zip(col.iter()).map(|(a, b)| a * b).sum::<C64>().norm_sqr()
                    })
                    .collect();
                for (j, br) in chunk.iter().enumerate() {
                    let s = br.weight.sqrt();
                    psi.slice_mut(ndarray::s![.., j * r..(j + 1) * r]).mapv_inplace(|z| z * s);
                }
                let rho = psi.dot(&psi.t().mapv(|z| z.conj()));
                (overlaps, rho)
            })
            .collect();
        let mut overlaps = Vec::with_capacity(ens.len());
        let mut rho = Array2::<C64>::zeros((d, d));
        for (o, m) in parts {
            overlaps.extend(o);
            rho += &m;
        }
        Ok((overlaps, rho))
    }

    /// Full pipeline: encode, reset the mode to `|0̃⟩`, optionally apply
    /// `channel` to every qubit, decode each branch and compare with the
    /// input.
    pub fn recover(&self, input: &CvState, channel: Option<&KrausChannel>) -> Result<Recovery> {
        let enc = self.encode(input)?;
        let epsilon = self.project_encoded(&enc)?.epsilon;
        let reset = self.reset_cv(&enc)?;
        let dominant_weight = reset.register.branches().first().map_or(0.0, |b| b.weight);
        let mut ens = reset.register;
        if let Some(ch) = channel {
            let before = ens.len();
            ens = noise::apply_to_register(&ens, ch, Target::All)?;
            if ens.len() != before {
                ens = ens.compress()?;
            }
        }
        let (overlaps, rho) = self.decode_branches(input, &ens)?;
        let fidelity: f64 = ens.branches().iter().zip(&overlaps).map(|(b, o)| b.weight * o).sum();
        // renormalise away the pruned weight before validating
        let tr: f64 = (0..rho.nrows()).map(|i| rho[[i, i]].re).sum();
        let recovered = CvDensity::new(rho.mapv(|z| z / tr))?;
        Ok(Recovery {
            fidelity: fidelity.clamp(0.0, 1.0),
            epsilon,
            dominant_weight,
            branches_decoded: ens.len(),
            recovered,
        })
    }

    /// `(ε, F)` from one encoding without decoding anything, using
    /// `F = Σ_j p_j |⟨χ_j|Ψ̃⟩|²` with `Ψ̃ = (⟨0̃| ⊗ I) U |ψ, 0⟩`.
    pub fn overlap_recovery(&self, input: &CvState, channel: Option<&KrausChannel>) -> Result<(f64, f64)> {
        let enc = self.encode(input)?;
        let reg = self.project_encoded(&enc)?;
        let mut ens = self.reset_cv(&enc)?.register;
        if let Some(ch) = channel {
            ens = noise::apply_to_register(&ens, ch, Target::All)?;
        }
        let fidelity: f64 = ens
            .branches()
            .iter()
            .map(|b| {
                let ov: C64 = b.state.iter().zip(reg.amplitudes.iter()).map(|(c, a)| c.conj() * a).sum();
                b.weight * ov.norm_sqr()
            })
            .sum();
        Ok((reg.epsilon, fidelity.clamp(0.0, 1.0)))
    }

    pub fn recovered_fidelity(&self, input: &CvState, channel: Option<&KrausChannel>) -> Result<f64> {
        Ok(self.recover(input, channel)?.fidelity)
    }
}

/// One-shot `U (|ψ⟩ ⊗ |0…0⟩)`.
pub fn encode(input: &CvState, params: &ProtocolParams) -> Result<HybridState> {
    let basis = QuadratureEigenbasis::new(params.dim())?;
    let mut psi = Array2::<C64>::zeros((params.dim(), params.register_len()));
    if input.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: input.dim(),
        });
    }
    psi.column_mut(0).assign(input.amps());
    for k in 1..=params.n_qubits() {
        gate_v_with(k, params, &basis)?.apply(&mut psi);
        gate_w_with(k, params, &basis)?.apply(&mut psi);
    }
    HybridState::new(psi)
}

/// One-shot transfer error against the sinc-projection `|0̃⟩`.
pub fn epsilon(input: &CvState, params: &ProtocolParams) -> Result<f64> {
    Protocol::new(*params)?.epsilon(input)
}

/// One-shot recovered fidelity.
pub fn recovered_fidelity(input: &CvState, params: &ProtocolParams, channel: Option<&KrausChannel>) -> Result<f64> {
    Protocol::new(*params)?.recovered_fidelity(input, channel)
}

#[cfg(test)]
mod tests;
