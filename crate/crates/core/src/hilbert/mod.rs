//! Truncated-Fock numerics for a single bosonic mode.
//!
//! Conventions: `q̂ = (a + a†)/√2`, `p̂ = i(a† − a)/√2`, so `[q̂, p̂] = i` and
//! the vacuum has `⟨q̂²⟩ = 1/2`. Basis index = photon number.

mod basis;
mod expm;
mod wigner;

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array1, Array2, ArrayView1};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::C64;

pub use basis::QuadratureEigenbasis;
pub use expm::expm;
pub use wigner::{wigner, wigner_point};

pub(crate) use expm::to_dmatrix;

/// Norm leakage tolerated when a standard state is cut off at `d` levels.
pub const LEAKAGE_THRESHOLD: f64 = 1e-6;
const NORM_TOL: f64 = 1e-10;

fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension {
            dim: d,
            reason: "need at least two Fock levels",
        });
    }
    Ok(())
}

/// Anything that exposes a normalised amplitude vector.
pub trait Ket {
    fn ket(&self) -> ArrayView1<'_, C64>;
}

/// Pure state of the mode in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct CvState {
    amps: Array1<C64>,
}

impl CvState {
    /// Wraps an already normalised amplitude vector.
    pub fn new(amps: Array1<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        let norm = norm(amps.view());
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: norm,
                reason: "state vector must be normalised",
            });
        }
        Ok(Self { amps })
    }

    /// Normalises `amps` and wraps it.
    pub fn normalized(amps: Array1<C64>) -> Result<Self> {
        check_dim(amps.len())?;
        let n = norm(amps.view());
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter {
                name: "norm",
                value: n,
                reason: "cannot normalise a zero or non-finite vector",
            });
        }
        Ok(Self {
            amps: amps.mapv(|z| z / n),
        })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amps(&self) -> &Array1<C64> {
        &self.amps
    }

    pub fn into_amps(self) -> Array1<C64> {
        self.amps
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expect(&self, op: &CvOperator) -> C64 {
        let a_psi = op.mat.dot(&self.amps);
        inner(self.amps.view(), a_psi.view())
    }

    /// Photon-number distribution.
    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Re-expresses the state in a smaller or larger truncation, renormalising.
    /// Returns the state and the norm that did not fit.
    pub fn resized(&self, d: usize) -> Result<(CvState, f64)> {
        check_dim(d)?;
        let mut amps = Array1::zeros(d);
        let keep = d.min(self.dim());
        amps.slice_mut(ndarray::s![..keep])
            .assign(&self.amps.slice(ndarray::s![..keep]));
        let lost = self.amps.iter().skip(keep).map(|z| z.norm_sqr()).sum::<f64>();
        Ok((CvState::normalized(amps)?, lost))
    }

    pub fn to_density(&self) -> CvDensity {
        let d = self.dim();
        CvDensity {
            mat: Array2::from_shape_fn((d, d), |(i, j)| self.amps[i] * self.amps[j].conj()),
        }
    }
}

impl Ket for CvState {
    fn ket(&self) -> ArrayView1<'_, C64> {
        self.amps.view()
    }
}

/// Dense operator on the truncated mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOperator {
    mat: Array2<C64>,
}

impl CvOperator {
    pub fn from_matrix(mat: Array2<C64>) -> Result<Self> {
        check_dim(mat.nrows())?;
        if mat.nrows() != mat.ncols() {
            return Err(Error::DimensionMismatch {
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn apply(&self, state: &CvState) -> Result<Array1<C64>> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.dim(),
            });
        }
        Ok(self.mat.dot(state.amps()))
    }

    pub fn dagger(&self) -> CvOperator {
        CvOperator {
            mat: self.mat.t().mapv(|z| z.conj()),
        }
    }

    pub fn compose(&self, other: &CvOperator) -> CvOperator {
        CvOperator {
            mat: self.mat.dot(&other.mat),
        }
    }

    /// Largest deviation of `A†A` from the identity on the lower `fraction`
    /// of the basis. Operators obtained by exponentiating truncated
    /// generators only need to be unitary away from the cutoff.
    pub fn interior_unitarity_defect(&self, fraction: f64) -> f64 {
        let k = ((self.dim() as f64) * fraction).floor() as usize;
        let ad_a = self.mat.t().mapv(|z| z.conj()).dot(&self.mat);
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((ad_a[[i, j]] - target).norm());
            }
        }
        worst
    }
}

/// Density operator of the mode.
#[derive(Debug, Clone, PartialEq)]
pub struct CvDensity {
    mat: Array2<C64>,
}

impl CvDensity {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(mat: Array2<C64>) -> Result<Self> {
        let op = CvOperator::from_matrix(mat)?;
        let mat = op.mat;
        let d = mat.nrows();
        let mut herm: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                herm = herm.max((mat[[i, j]] - mat[[j, i]].conj()).norm());
            }
        }
        if herm > 1e-10 {
            return Err(Error::InvalidParameter {
                name: "hermiticity",
                value: herm,
                reason: "density matrix must be Hermitian",
            });
        }
        let tr: f64 = (0..d).map(|i| mat[[i, i]].re).sum();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::InvalidParameter {
                name: "trace",
                value: tr,
                reason: "density matrix must have unit trace",
            });
        }
        let rho = Self { mat };
        let min_eig = rho.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < -1e-8 {
            return Err(Error::InvalidParameter {
                name: "eigenvalue",
                value: min_eig,
                reason: "density matrix must be positive semidefinite",
            });
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.mat
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.mat[[i, i]].re).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(to_dmatrix(&self.mat));
        eig.eigenvalues.iter().copied().collect()
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.mat[[i, i]].re).collect()
    }
}

pub(crate) fn inner(a: ArrayView1<C64>, b: ArrayView1<C64>) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub(crate) fn norm(a: ArrayView1<C64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Lowering operator `a`.
pub fn annihilation(d: usize) -> Result<CvOperator> {
    check_dim(d)?;
    let mut mat = Array2::zeros((d, d));
    for n in 1..d {
        mat[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    Ok(CvOperator { mat })
}

/// Position quadrature `q̂ = (a + a†)/√2`.
pub fn quadrature_q(d: usize) -> Result<CvOperator> {
    let a = annihilation(d)?;
    let mat = (&a.mat + &a.mat.t()).mapv(|z| z / 2f64.sqrt());
    Ok(CvOperator { mat })
}

/// Momentum quadrature `p̂ = i(a† − a)/√2`.
pub fn quadrature_p(d: usize) -> Result<CvOperator> {
    let a = annihilation(d)?;
    let i = C64::new(0.0, 1.0);
    let mat = (&a.mat.t() - &a.mat).mapv(|z| i * z / 2f64.sqrt());
    Ok(CvOperator { mat })
}

/// Number operator `a†a`.
pub fn number(d: usize) -> Result<CvOperator> {
    check_dim(d)?;
    let mut mat = Array2::zeros((d, d));
    for n in 0..d {
        mat[[n, n]] = C64::new(n as f64, 0.0);
    }
    Ok(CvOperator { mat })
}

/// Raised when a displacement is large compared to the truncation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationWarning {
    pub beta_abs: f64,
    pub limit: f64,
}

impl std::fmt::Display for TruncationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "displacement |beta|={:.3} exceeds sqrt(d)/4={:.3}",
            self.beta_abs, self.limit
        )
    }
}

/// `D(β) = exp(β a† − β* a)` together with a truncation diagnostic.
pub fn displacement_checked(d: usize, beta: C64) -> Result<(CvOperator, Option<TruncationWarning>)> {
    let a = annihilation(d)?;
    let gen = Array2::from_shape_fn((d, d), |(i, j)| {
        beta * a.mat[[j, i]].conj() - beta.conj() * a.mat[[i, j]]
    });
    let limit = (d as f64).sqrt() / 4.0;
    let warning = (beta.norm() > limit).then_some(TruncationWarning {
        beta_abs: beta.norm(),
        limit,
    });
    if let Some(w) = warning {
        log::warn!("{w}");
    }
    Ok((CvOperator { mat: expm(&gen) }, warning))
}

/// `D(β) = exp(β a† − β* a)`.
pub fn displacement(d: usize, beta: C64) -> Result<CvOperator> {
    displacement_checked(d, beta).map(|(op, _)| op)
}

/// `S(r) = exp(r (a² − a†²)/2)`; for `r > 0` it narrows the `q` quadrature.
pub fn squeeze(d: usize, r: f64) -> Result<CvOperator> {
    let a = annihilation(d)?;
    let a2 = a.mat.dot(&a.mat);
    let gen = Array2::from_shape_fn((d, d), |(i, j)| 0.5 * r * (a2[[i, j]] - a2[[j, i]].conj()));
    Ok(CvOperator { mat: expm(&gen) })
}

fn finish_truncated(amps: Array1<C64>, exact_norm_sqr: f64) -> Result<CvState> {
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    let leakage = (1.0 - kept / exact_norm_sqr).max(0.0);
    if leakage > LEAKAGE_THRESHOLD {
        return Err(Error::Truncation {
            leakage,
            threshold: LEAKAGE_THRESHOLD,
        });
    }
    CvState::normalized(amps)
}

/// Fock state `|m⟩`.
pub fn fock(d: usize, m: usize) -> Result<CvState> {
    check_dim(d)?;
    if m >= d {
        return Err(Error::Truncation {
            leakage: 1.0,
            threshold: LEAKAGE_THRESHOLD,
        });
    }
    let mut amps = Array1::zeros(d);
    amps[m] = C64::new(1.0, 0.0);
    Ok(CvState { amps })
}

/// Vacuum `|0⟩`.
pub fn vacuum(d: usize) -> Result<CvState> {
    fock(d, 0)
}

/// Coherent state `|α⟩` from its Poisson amplitudes.
pub fn coherent(d: usize, alpha: C64) -> Result<CvState> {
    check_dim(d)?;
    let mut amps = Array1::zeros(d);
    amps[0] = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 1..d {
        amps[n] = amps[n - 1] * alpha / (n as f64).sqrt();
    }
    finish_truncated(amps, 1.0)
}

/// Squeezed vacuum `S(r)|0⟩`: even Fock components
/// `c₂ₙ = (−tanh r)ⁿ √((2n)!) / (2ⁿ n! √cosh r)`.
pub fn squeezed_vacuum(d: usize, r: f64) -> Result<CvState> {
    check_dim(d)?;
    let t = r.tanh();
    let mut amps = Array1::zeros(d);
    let mut c = 1.0 / r.cosh().sqrt();
    let mut n = 0;
    while 2 * n < d {
        amps[2 * n] = C64::new(c, 0.0);
        let k = n as f64;
        c *= -t * ((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0));
        n += 1;
    }
    finish_truncated(amps, 1.0)
}

/// Even cat state `(e^{−i√2αp̂} + e^{i√2αp̂})|vac⟩`, normalised. The two
/// branches are displaced vacua with `⟨q̂⟩ = ±√2α`.
pub fn cat(d: usize, alpha: f64) -> Result<CvState> {
    check_dim(d)?;
    // Poisson tail of one branch bounds the truncation loss.
    coherent(d, C64::new(alpha, 0.0))?;
    let vac = vacuum(d)?;
    let plus = displacement(d, C64::new(alpha, 0.0))?.apply(&vac)?;
    let minus = displacement(d, C64::new(-alpha, 0.0))?.apply(&vac)?;
    CvState::normalized(&plus + &minus)
}

/// Orthonormal Hermite functions `h₀(q) … h_{d−1}(q)` under the
/// `⟨q²⟩_vac = 1/2` convention, by upward recurrence.
///
/// The Gaussian factor is carried as a separate exponent so that high
/// orders stay finite far from the origin, where `h₀` itself underflows.
pub fn hermite_functions(q: f64, d: usize, out: &mut [f64]) {
    debug_assert!(out.len() >= d);
    if d == 0 {
        return;
    }
    const BIG: f64 = 1e150;
    let mut log_scale = -0.5 * q * q;
    let mut factor = log_scale.exp();
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    out[0] = cur * factor;
    for n in 0..d - 1 {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * q * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > BIG {
            prev /= BIG;
            cur /= BIG;
            log_scale += BIG.ln();
            factor = log_scale.exp();
        }
        out[n + 1] = cur * factor;
    }
}

/// Position-representation wavefunction `ψ(q) = Σₙ cₙ hₙ(q)`.
pub fn wavefunction(state: &CvState, qgrid: &[f64]) -> Vec<C64> {
    let d = state.dim();
    let mut h = vec![0.0; d];
    qgrid
        .iter()
        .map(|&q| {
            hermite_functions(q, d, &mut h);
            state.amps.iter().zip(&h).map(|(c, hn)| c * hn).sum()
        })
        .collect()
}

/// `|⟨a|b⟩|²` for two pure states of equal dimension.
pub fn fidelity_pure<K: Ket>(a: &K, b: &K) -> Result<f64> {
    let (x, y) = (a.ket(), b.ket());
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(inner(x, y).norm_sqr().min(1.0))
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity_mixed(psi: &CvState, rho: &CvDensity) -> Result<f64> {
    if psi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: psi.dim(),
        });
    }
    let r_psi = rho.mat.dot(psi.amps());
    Ok(inner(psi.amps().view(), r_psi.view()).re)
}

/// Density matrix from a weighted set of (unnormalised is fine) kets.
pub fn density_from_ensemble(d: usize, kets: &[(f64, Array1<C64>)]) -> Result<CvDensity> {
    let mut mat = Array2::<C64>::zeros((d, d));
    for (w, k) in kets {
        for i in 0..d {
            let ki = k[i] * *w;
            for j in 0..d {
                mat[[i, j]] += ki * k[j].conj();
            }
        }
    }
    CvDensity::new(mat)
}

/// Hermitian eigendecomposition (ascending eigenvalues; eigenvectors as columns).
pub(crate) fn hermitian_eigen(mat: &Array2<C64>) -> (Vec<f64>, Array2<C64>) {
    let eig = SymmetricEigen::new(to_dmatrix(mat));
    let n = mat.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs: DMatrix<C64> = eig.eigenvectors;
    let out = Array2::from_shape_fn((n, n), |(r, c)| vecs[(r, order[c])]);
    (vals, out)
}
