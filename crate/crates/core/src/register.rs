//! Bookkeeping for the qubit register.
//!
//! Qubits are numbered `k = 1..=N`, with qubit 1 interacting with the mode
//! first. In the computational basis qubit `k` is bit `k − 1` of the register
//! index (qubit 1 least significant). A [`SignVector`] `s` labels the product
//! state with qubit `k` in the `s_k` eigenstate of `σ_x`; its integer label
//! sets bit `k − 1` to `(1 − s_k)/2`.

use ndarray::Array1;
use std::fmt;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SignVector(Vec<i8>);

impl SignVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.is_empty() {
            return Err(Error::InvalidDimension {
                dim: 0,
                reason: "sign vector needs at least one qubit",
            });
        }
        if let Some(&bad) = signs.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidParameter {
                name: "sign",
                value: bad as f64,
                reason: "entries must be +1 or -1",
            });
        }
        Ok(Self(signs))
    }

    pub fn from_index(index: usize, n_qubits: usize) -> Self {
        assert!(n_qubits >= 1 && index < 1 << n_qubits, "index out of range");
        Self(
            (0..n_qubits)
                .map(|k| if index >> k & 1 == 0 { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .map(|(k, &s)| if s < 0 { 1 << k } else { 0 })
            .sum()
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    pub fn signs(&self) -> &[i8] {
        &self.0
    }

    /// `s_k` for 1-based `k`.
    pub fn sign(&self, k: usize) -> f64 {
        self.0[k - 1] as f64
    }

    /// All `2^N` sign vectors in index order.
    pub fn all(n_qubits: usize) -> impl Iterator<Item = SignVector> {
        (0..1usize << n_qubits).map(move |i| SignVector::from_index(i, n_qubits))
    }
}

impl fmt::Display for SignVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|&s| if s > 0 { "+" } else { "-" }).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Pure state of `N` qubits in the computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    amps: Array1<C64>,
    n_qubits: usize,
}

impl RegisterState {
    pub fn new(amps: Array1<C64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::InvalidDimension {
                dim: len,
                reason: "register length must be 2^N with N >= 1",
            });
        }
        let n = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: n,
                reason: "register state must be normalised",
            });
        }
        Ok(Self {
            amps,
            n_qubits: len.trailing_zeros() as usize,
        })
    }

    pub fn normalized(amps: Array1<C64>) -> Result<Self> {
        let n = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: n,
                reason: "cannot normalise a zero or non-finite vector",
            });
        }
        Self::new(amps.mapv(|z| z / n))
    }

    /// `|0…0⟩`.
    pub fn ground(n_qubits: usize) -> Self {
        let mut amps = Array1::zeros(1 << n_qubits);
        amps[0] = C64::new(1.0, 0.0);
        Self { amps, n_qubits }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amps(self) -> Array1<C64> {
        self.amps
    }
}

impl crate::hilbert::Ket for RegisterState {
    fn ket(&self) -> ndarray::ArrayView1<'_, C64> {
        self.amps.view()
    }
}

/// `|φ_s⟩ = ⊗_k (|0⟩ + s_k|1⟩)/√2`.
pub fn phi_state(s: &SignVector) -> RegisterState {
    let n = s.n_qubits();
    let scale = 2f64.powf(-(n as f64) / 2.0);
    let amps = Array1::from_shape_fn(1 << n, |b| {
        let sign: f64 = (0..n)
            .filter(|&k| b >> k & 1 == 1)
            .map(|k| s.signs()[k] as f64)
            .product();
        C64::new(sign * scale, 0.0)
    });
    RegisterState { amps, n_qubits: n }
}

/// `γ_s = Σ_{k=1}^{N−2} (s_k + s_{k+1})/2 + (s_{N−1} − s_N)/2`.
///
/// Only the parity matters physically; the integer is kept so comparisons
/// are exact.
pub fn gamma(s: &SignVector) -> Result<i32> {
    let n = s.n_qubits();
    if n < 2 {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: "phase bookkeeping needs N >= 2",
        });
    }
    let sg = |k: usize| s.signs()[k - 1] as i32;
    let pairs: i32 = (1..=n.saturating_sub(2)).map(|k| (sg(k) + sg(k + 1)) / 2).sum();
    Ok(pairs + (sg(n - 1) - sg(n)) / 2)
}

/// `(−1)^γ_s`.
pub fn gamma_sign(s: &SignVector) -> Result<f64> {
    Ok(if gamma(s)?.rem_euclid(2) == 0 { 1.0 } else { -1.0 })
}

/// Sampling point `q_s = Σ_{l<N} s_l λ2^{l−1} − s_N λ2^{N−1}`.
pub fn grid_point(s: &SignVector, lambda: f64) -> f64 {
    let n = s.n_qubits();
    let head: f64 = (1..n).map(|l| s.sign(l) * lambda * 2f64.powi(l as i32 - 1)).sum();
    head - s.sign(n) * lambda * 2f64.powi(n as i32 - 1)
}

/// Components `⟨φ_s|χ⟩` for every sign vector, in index order.
///
/// This is a Walsh–Hadamard transform of the computational amplitudes.
pub fn to_phi_basis(amps: &Array1<C64>) -> Vec<C64> {
    let mut v = amps.to_vec();
    let len = v.len();
    assert!(len.is_power_of_two());
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut stride = 1;
    while stride < len {
        for base in (0..len).step_by(2 * stride) {
            for i in base..base + stride {
                let (a, b) = (v[i], v[i + stride]);
                v[i] = (a + b) * h;
                v[i + stride] = (a - b) * h;
            }
        }
        stride *= 2;
    }
    v
}

/// Inverse of [`to_phi_basis`] (the transform is an involution).
pub fn from_phi_basis(coeffs: &[C64]) -> Array1<C64> {
    Array1::from(to_phi_basis(&Array1::from(coeffs.to_vec())))
}

/// Weight below which a branch is dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-12;

/// One member of a [`BranchEnsemble`]: a normalised register state and its
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub weight: f64,
    pub state: Array1<C64>,
}

/// Mixed register state held as a pure-state decomposition `{(p_j, |χ_j⟩)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchEnsemble {
    n_qubits: usize,
    branches: Vec<Branch>,
}

impl BranchEnsemble {
    pub fn pure(state: RegisterState) -> Self {
        Self {
            n_qubits: state.n_qubits,
            branches: vec![Branch {
                weight: 1.0,
                state: state.amps,
            }],
        }
    }

    /// Builds an ensemble from raw branches. Weights are taken as given;
    /// states are renormalised.
    pub fn from_branches(n_qubits: usize, branches: Vec<(f64, Array1<C64>)>) -> Result<Self> {
        let mut out = Vec::with_capacity(branches.len());
        for (w, s) in branches {
            if s.len() != 1 << n_qubits {
                return Err(Error::DimensionMismatch {
                    expected: 1 << n_qubits,
                    got: s.len(),
                });
            }
            let n = s.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if w > PRUNE_THRESHOLD && n > 0.0 {
                out.push(Branch {
                    weight: w,
                    state: s.mapv(|z| z / n),
                });
            }
        }
        Ok(Self {
            n_qubits,
            branches: out,
        })
    }

    /// Spectral decomposition of a register density matrix, heaviest branch
    /// first, dropping eigenvalues below [`PRUNE_THRESHOLD`].
    pub fn from_density(rho: &ndarray::Array2<C64>) -> Result<Self> {
        let len = rho.nrows();
        if len < 2 || !len.is_power_of_two() || rho.ncols() != len {
            return Err(Error::InvalidDimension {
                dim: len,
                reason: "register density must be 2^N x 2^N",
            });
        }
        let (vals, vecs) = crate::hilbert::hermitian_eigen(rho);
        let branches = (0..len)
            .rev()
            .filter(|&i| vals[i] > PRUNE_THRESHOLD)
            .map(|i| Branch {
                weight: vals[i],
                state: vecs.column(i).to_owned(),
            })
            .collect();
        Ok(Self {
            n_qubits: len.trailing_zeros() as usize,
            branches,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// `ρ = Σ_j p_j |χ_j⟩⟨χ_j|`.
    pub fn density(&self) -> ndarray::Array2<C64> {
        let len = 1 << self.n_qubits;
        let mut rho = ndarray::Array2::<C64>::zeros((len, len));
        for b in &self.branches {
            for i in 0..len {
                let x = b.state[i] * b.weight;
                if x == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..len {
                    rho[[i, j]] += x * b.state[j].conj();
                }
            }
        }
        rho
    }

    /// Re-expresses the ensemble by its eigendecomposition, so it never holds
    /// more than `2^N` branches.
    pub fn compress(&self) -> Result<Self> {
        Self::from_density(&self.density())
    }
}
