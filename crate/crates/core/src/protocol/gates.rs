//! Conditional displacements `exp(i θ G ⊗ σ)` with `G ∈ {q̂, p̂}` and
//! `σ ∈ {σ_x, σ_y}` acting on one qubit of the register.

use ndarray::Array2;

use super::ProtocolParams;
use crate::error::{Error, Result};
use crate::hilbert::QuadratureEigenbasis;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliAxis {
    X,
    Y,
}

impl PauliAxis {
    /// Normalised eigenvectors for eigenvalues `+1` and `−1`.
    pub fn eigenvectors(self) -> ([C64; 2], [C64; 2]) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            PauliAxis::X => ([C64::new(h, 0.0), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(-h, 0.0)]),
            PauliAxis::Y => ([C64::new(h, 0.0), C64::new(0.0, h)], [C64::new(h, 0.0), C64::new(0.0, -h)]),
        }
    }
}

/// `plus ⊗ |e₊⟩⟨e₊| + minus ⊗ |e₋⟩⟨e₋|` on qubit `qubit` (1-based).
#[derive(Debug, Clone)]
pub struct ConditionalGate {
    qubit: usize,
    axis: PauliAxis,
    plus: Array2<C64>,
    minus: Array2<C64>,
}

impl ConditionalGate {
    pub fn new(qubit: usize, axis: PauliAxis, plus: Array2<C64>, minus: Array2<C64>) -> Self {
        assert!(qubit >= 1);
        assert_eq!(plus.dim(), minus.dim());
        Self {
            qubit,
            axis,
            plus,
            minus,
        }
    }

    pub fn qubit(&self) -> usize {
        self.qubit
    }

    pub fn axis(&self) -> PauliAxis {
        self.axis
    }

    pub fn plus_block(&self) -> &Array2<C64> {
        &self.plus
    }

    pub fn minus_block(&self) -> &Array2<C64> {
        &self.minus
    }

    pub fn cv_dim(&self) -> usize {
        self.plus.nrows()
    }

    pub fn adjoint(&self) -> Self {
        let dag = |m: &Array2<C64>| m.t().mapv(|z| z.conj());
        Self {
            qubit: self.qubit,
            axis: self.axis,
            plus: dag(&self.plus),
            minus: dag(&self.minus),
        }
    }

    /// Same blocks, acting on a different qubit.
    pub fn on_qubit(&self, qubit: usize) -> Self {
        Self {
            qubit,
            ..self.clone()
        }
    }

    /// Applies the gate in place to a `(d, M)` amplitude matrix whose column
    /// index carries the register index in its low bits. Several register
    /// states can be stacked side by side as long as each occupies an aligned
    /// block of `2^N` columns.
    pub fn apply(&self, psi: &mut Array2<C64>) {
        let d = psi.nrows();
        assert_eq!(d, self.cv_dim(), "gate and state truncations differ");
        let mask = 1usize << (self.qubit - 1);
        let cols = psi.ncols();
        assert!(mask < cols, "qubit outside the register");
        let lows: Vec<usize> = (0..cols).filter(|c| c & mask == 0).collect();
        let (ep, em) = self.axis.eigenvectors();
        let h = lows.len();
        let mut a_plus = Array2::<C64>::zeros((d, h));
        let mut a_minus = Array2::<C64>::zeros((d, h));
        for n in 0..d {
            let row = psi.row(n);
            for (j, &c0) in lows.iter().enumerate() {
                let (x0, x1) = (row[c0], row[c0 | mask]);
                a_plus[[n, j]] = ep[0].conj() * x0 + ep[1].conj() * x1;
                a_minus[[n, j]] = em[0].conj() * x0 + em[1].conj() * x1;
            }
        }
        let b_plus = self.plus.dot(&a_plus);
        let b_minus = self.minus.dot(&a_minus);
        for n in 0..d {
            let mut row = psi.row_mut(n);
            for (j, &c0) in lows.iter().enumerate() {
                let (bp, bm) = (b_plus[[n, j]], b_minus[[n, j]]);
                row[c0] = ep[0] * bp + em[0] * bm;
                row[c0 | mask] = ep[1] * bp + em[1] * bm;
            }
        }
    }

    /// Dense joint matrix on `d·2^N`, CV-major. Only sensible for small sizes.
    pub fn to_dense(&self, n_qubits: usize) -> Array2<C64> {
        let d = self.cv_dim();
        let r = 1usize << n_qubits;
        let dim = d * r;
        let mut out = Array2::<C64>::zeros((dim, dim));
        for col in 0..dim {
            let mut psi = Array2::<C64>::zeros((d, r));
            psi[[col / r, col % r]] = C64::new(1.0, 0.0);
            self.apply(&mut psi);
            for (row, z) in psi.iter().enumerate() {
                out[[row, col]] = *z;
            }
        }
        out
    }
}

fn check_qubit(k: usize, params: &ProtocolParams) -> Result<()> {
    if k == 0 || k > params.n_qubits() {
        return Err(Error::QubitIndex {
            index: k,
            n_qubits: params.n_qubits(),
        });
    }
    Ok(())
}

/// `V_k = exp(i v_k q̂ σ_y⁽ᵏ⁾)` with `v_k = π/(2λ2^k)`.
pub fn gate_v_with(k: usize, params: &ProtocolParams, basis: &QuadratureEigenbasis) -> Result<ConditionalGate> {
    check_qubit(k, params)?;
    let v = params.kick(k);
    Ok(ConditionalGate::new(k, PauliAxis::Y, basis.exp_iq(v), basis.exp_iq(-v)))
}

/// `W_k = exp(± i w_k p̂ σ_x⁽ᵏ⁾)` with `w_k = λ2^k/2`; the sign is negative
/// for the last qubit.
pub fn gate_w_with(k: usize, params: &ProtocolParams, basis: &QuadratureEigenbasis) -> Result<ConditionalGate> {
    check_qubit(k, params)?;
    let w = params.signed_shift(k);
    Ok(ConditionalGate::new(k, PauliAxis::X, basis.exp_ip(w), basis.exp_ip(-w)))
}

pub fn gate_v(k: usize, params: &ProtocolParams) -> Result<ConditionalGate> {
    gate_v_with(k, params, &QuadratureEigenbasis::new(params.dim())?)
}

pub fn gate_w(k: usize, params: &ProtocolParams) -> Result<ConditionalGate> {
    gate_w_with(k, params, &QuadratureEigenbasis::new(params.dim())?)
}
