//! Closed-form references: the cosine-product kernel, the ideal encoded
//! register, a brute-force branch expansion for position eigenstates, and
//! the squeezed-vacuum overlap with `|0̃⟩`.

use std::f64::consts::{FRAC_PI_4, PI, SQRT_2};

use ndarray::Array1;
use statrs::function::erf::erf;

use crate::error::{Error, Result};
use crate::hilbert::{wavefunction, CvState};
use crate::quad::{self, QuadOptions};
use crate::register::{from_phi_basis, gamma_sign, grid_point, SignVector};
use crate::C64;

/// Largest register for which [`exact_position_expansion`] enumerates.
pub const MAX_EXPANSION_QUBITS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    lambda: f64,
    n_qubits: usize,
    qgrid: Vec<f64>,
}

impl OracleConfig {
    pub fn new(lambda: f64, n_qubits: usize, qgrid: Vec<f64>) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                value: lambda,
                reason: "must be positive",
            });
        }
        if n_qubits < 2 {
            return Err(Error::InvalidDimension {
                dim: n_qubits,
                reason: "need at least two qubits",
            });
        }
        Ok(Self { lambda, n_qubits, qgrid })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn qgrid(&self) -> &[f64] {
        &self.qgrid
    }

    /// [`cos_product`] over the configured grid.
    pub fn kernel(&self) -> Vec<f64> {
        self.qgrid.iter().map(|&q| cos_product(q, self.lambda, self.n_qubits)).collect()
    }

    pub fn encoded_amplitudes(&self, input: &CvState) -> EncodedAmplitudes {
        encoded_amplitudes(input, self.lambda, self.n_qubits)
    }
}

/// `Π_{k=1}^{N} cos(πq/(2λ2^k))`.
pub fn cos_product(q: f64, lambda: f64, n: usize) -> f64 {
    (1..=n).map(|k| (PI * q / (2.0 * lambda * 2f64.powi(k as i32))).cos()).product()
}

/// `sin(x)/x` with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Ideal register content for an input wavefunction.
#[derive(Debug, Clone)]
pub struct EncodedAmplitudes {
    /// Normalised `(−1)^{γ_s} √(2λ) ψ(q_s)`, indexed by sign-vector label.
    pub phi: Vec<C64>,
    /// Norm before normalisation.
    pub raw_norm: f64,
}

impl EncodedAmplitudes {
    /// The same state in the computational basis.
    pub fn computational(&self) -> Array1<C64> {
        from_phi_basis(&self.phi)
    }
}

pub fn encoded_amplitudes(input: &CvState, lambda: f64, n: usize) -> EncodedAmplitudes {
    let signs: Vec<SignVector> = SignVector::all(n).collect();
    let grid: Vec<f64> = signs.iter().map(|s| grid_point(s, lambda)).collect();
    let psi = wavefunction(input, &grid);
    let scale = (2.0 * lambda).sqrt();
    let raw: Vec<C64> = signs
        .iter()
        .zip(&psi)
        .map(|(s, &z)| z * scale * gamma_sign(s).expect("n >= 2"))
        .collect();
    let raw_norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let phi = if raw_norm > 0.0 {
        raw.iter().map(|z| z / raw_norm).collect()
    } else {
        raw
    };
    EncodedAmplitudes { phi, raw_norm }
}

/// `min_θ ‖a − e^{iθ} b‖` for unit vectors; the global phase of a register
/// state is not observable.
pub fn phase_aligned_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let overlap: C64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    (na * na + nb * nb - 2.0 * overlap.norm()).max(0.0).sqrt()
}

/// One term of the branch expansion of `U|q⟩|0…0⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct PositionBranch {
    pub signs: SignVector,
    /// Coefficient in front of `|position⟩ ⊗ |φ_s⟩`.
    pub coefficient: f64,
    pub position: f64,
}

/// Follows `|q⟩|0…0⟩` through every `V_k`, `W_k` pair by applying the 2×2
/// qubit rotations and shifting the position eigenvalue in each `σ_x`
/// branch. Returns the `2^N` branches in sign-vector index order.
pub fn exact_position_expansion(q: f64, lambda: f64, n: usize) -> Result<Vec<PositionBranch>> {
    if !(2..=MAX_EXPANSION_QUBITS).contains(&n) {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: "brute-force expansion supports 2..=5 qubits",
        });
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut out = Vec::with_capacity(1 << n);
    for index in 0..1usize << n {
        let s = SignVector::from_index(index, n);
        let mut x = q;
        let mut coeff = 1.0;
        for k in 1..=n {
            let theta = PI / (2.0 * lambda * 2f64.powi(k as i32)) * x;
            // exp(iθσ_y)|0⟩ = cos θ|0⟩ − sin θ|1⟩, read in the σ_x basis
            let (c0, c1) = (theta.cos(), -theta.sin());
            let sk = s.sign(k);
            coeff *= h * (c0 + sk * c1);
            let w = lambda * 2f64.powi(k as i32) / 2.0;
            let dir = if k == n { -1.0 } else { 1.0 };
            // exp(i w p)|x⟩ = |x − w⟩
            x -= dir * sk * w;
        }
        out.push(PositionBranch {
            signs: s,
            coefficient: coeff,
            position: x,
        });
    }
    Ok(out)
}

/// Sign of the branch coefficient at `q = q_s`, relative to the overall
/// factor `(−1)^N` shared by all branches.
pub fn extracted_sign(s: &SignVector, lambda: f64) -> Result<f64> {
    let n = s.n_qubits();
    let qs = grid_point(s, lambda);
    let branches = exact_position_expansion(qs, lambda, n)?;
    let c = branches[s.index()].coefficient;
    let global = if n % 2 == 0 { 1.0 } else { -1.0 };
    Ok((c * global).signum())
}

/// Largest register handled by the position-space evaluators.
pub const MAX_TREE_QUBITS: usize = 16;

/// Fills `coeff[i]` and `pos[i]` with the coefficient and final position of
/// branch `i` of `U|q⟩|0…0⟩`, growing the branch tree one qubit at a time.
pub fn branch_tree(q: f64, lambda: f64, n: usize, coeff: &mut [f64], pos: &mut [f64]) {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    coeff[0] = 1.0;
    pos[0] = q;
    for k in 1..=n {
        let half = 1usize << (k - 1);
        let v = PI / (2.0 * lambda * 2f64.powi(k as i32));
        let w = lambda * 2f64.powi(k as i32) / 2.0;
        let dir = if k == n { -1.0 } else { 1.0 };
        for j in 0..half {
            let (c, x) = (coeff[j], pos[j]);
            let (c0, c1) = ((v * x).cos(), -(v * x).sin());
            coeff[j] = c * h * (c0 + c1);
            pos[j] = x - dir * w;
            coeff[j | half] = c * h * (c0 - c1);
            pos[j | half] = x + dir * w;
        }
    }
}

/// `⟨0̃, φ_s| U |ψ, 0…0⟩ = ∫ ψ(q) c_s(q) ⟨0̃|q − q_s⟩ dq` with the exact
/// sinc pointer state, integrated over `|q| ≤ reach`. No Fock truncation is
/// involved beyond the input's own expansion. Indexed by sign-vector label.
pub fn projected_amplitudes(input: &CvState, lambda: f64, n: usize, reach: f64) -> Result<Vec<C64>> {
    if !(2..=MAX_TREE_QUBITS).contains(&n) {
        return Err(Error::InvalidDimension {
            dim: n,
            reason: "position-space evaluation supports 2..=16 qubits",
        });
    }
    let m = 1usize << n;
    let amps = input.amps();
    let d = amps.len();
    let scale = (2.0 * lambda).sqrt().recip();
    let f = |q: f64, out: &mut [f64]| {
        let mut h = vec![0.0; d];
        crate::hilbert::hermite_functions(q, d, &mut h);
        let psi: C64 = amps.iter().zip(&h).map(|(c, hn)| c * hn).sum();
        let mut coeff = vec![0.0; m];
        let mut pos = vec![0.0; m];
        branch_tree(q, lambda, n, &mut coeff, &mut pos);
        for i in 0..m {
            let k = coeff[i] * sinc(PI * pos[i] / (2.0 * lambda)) * scale;
            out[2 * i] = psi.re * k;
            out[2 * i + 1] = psi.im * k;
        }
    };
    let opts = QuadOptions {
        tolerance: 1e-11,
        initial_panels: ((reach / lambda).ceil() as usize).max(16),
        max_depth: 30,
    };
    let r = quad::integrate(&f, 2 * m, -reach, reach, opts)?;
    Ok((0..m).map(|i| C64::new(r.values[2 * i], r.values[2 * i + 1])).collect())
}

/// Position window holding the input: the classical turning point of its
/// highest populated level plus a margin.
pub fn support_reach(input: &CvState) -> f64 {
    let top = input.amps().iter().rposition(|z| z.norm_sqr() > 1e-30).unwrap_or(0);
    (2.0 * top as f64 + 1.0).sqrt() + 8.0
}

/// Transfer error against the exact pointer state, free of Fock truncation
/// of the joint state.
pub fn position_epsilon(input: &CvState, lambda: f64, n: usize) -> Result<f64> {
    let amps = projected_amplitudes(input, lambda, n, support_reach(input))?;
    let kept: f64 = amps.iter().map(|z| z.norm_sqr()).sum();
    Ok((1.0 - kept).clamp(0.0, 1.0))
}

/// `(2/√π) λe^r erf(π/(2√2 λe^r))²`.
pub fn squeezed_overlap(lambda: f64, r: f64) -> f64 {
    squeezed_overlap_product(lambda * r.exp())
}

/// [`squeezed_overlap`] as a function of `x = λe^r` alone.
pub fn squeezed_overlap_product(x: f64) -> f64 {
    let e = erf(PI / (2.0 * SQRT_2 * x));
    2.0 / PI.sqrt() * x * e * e
}

/// `|⟨S(r)|0̃⟩|²` by direct position-space quadrature of the squeezed
/// Gaussian against `sinc(πq/2λ)/√(2λ)`.
pub fn squeezed_overlap_numeric(lambda: f64, r: f64) -> Result<f64> {
    let a = (2.0 * r).exp();
    let norm = (a / PI).powf(0.25) / (2.0 * lambda).sqrt();
    let f = |q: f64| norm * (-a * q * q / 2.0).exp() * sinc(PI * q / (2.0 * lambda));
    // the Gaussian is negligible beyond 40 standard deviations
    let reach = (40.0 / a.sqrt()).min(crate::protocol::INTEGRATION_RANGE);
    let opts = QuadOptions {
        tolerance: 1e-13,
        initial_panels: ((reach / (2.0 * lambda)).ceil() as usize).max(16),
        max_depth: 30,
    };
    let half = quad::integrate_scalar(&f, 0.0, reach, opts)?.0;
    Ok((2.0 * half).powi(2))
}

/// Location and value of the maximum of [`squeezed_overlap_product`],
/// found by bisection on the sign of its derivative.
pub fn squeezed_optimum() -> Result<(f64, f64)> {
    let c = PI / (2.0 * SQRT_2);
    // d/dx [x erf(c/x)²] ∝ erf(c/x) − (4c/(√π x)) e^{−c²/x²}
    let slope = |x: f64| erf(c / x) - 4.0 * c / (PI.sqrt() * x) * (-(c * c) / (x * x)).exp();
    let (mut lo, mut hi) = (0.5, 3.0);
    if !(slope(lo) > 0.0 && slope(hi) < 0.0) {
        return Err(Error::RootBracket {
            what: "squeezed overlap optimum",
            target: 0.0,
            low: lo,
            high: hi,
        });
    }
    while hi - lo > 1e-14 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    Ok((x, squeezed_overlap_product(x)))
}

/// `cos(π/4 ± θ)`, the branch amplitudes left by one `V_k` on `|0⟩`.
pub fn rotation_branches(theta: f64) -> (f64, f64) {
    ((FRAC_PI_4 + theta).cos(), (FRAC_PI_4 - theta).cos())
}
