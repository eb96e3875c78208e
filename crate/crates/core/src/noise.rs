//! Single-qubit Kraus channels acting on the stored register.

use ndarray::{Array1, Array2};
use std::fmt;

use crate::error::{Error, Result};
use crate::register::BranchEnsemble;
use crate::C64;

pub type Mat2 = [[C64; 2]; 2];

const COMPLETENESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChannelKind {
    Identity,
    Dephasing { p_z: f64 },
    AmplitudeDamping { gamma: f64 },
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelKind::Identity => write!(f, "identity"),
            ChannelKind::Dephasing { p_z } => write!(f, "dephasing(p_z={p_z})"),
            ChannelKind::AmplitudeDamping { gamma } => write!(f, "amplitude-damping(gamma={gamma})"),
        }
    }
}

/// A completely positive, trace-preserving single-qubit map `ρ ↦ Σ_j K_j ρ K_j†`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    ops: Vec<Mat2>,
    kind: ChannelKind,
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn check_probability(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::InvalidParameter {
            name,
            value,
            reason: "must lie in [0, 1]",
        });
    }
    Ok(())
}

impl KrausChannel {
    /// Validates completeness `Σ K†K = I` before wrapping the operators.
    pub fn new(ops: Vec<Mat2>, kind: ChannelKind) -> Result<Self> {
        let ch = Self { ops, kind };
        let defect = ch.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(Error::InvalidParameter {
                name: "completeness",
                value: defect,
                reason: "Kraus operators must satisfy sum K^dag K = I",
            });
        }
        Ok(ch)
    }

    pub fn identity() -> Self {
        Self {
            ops: vec![[[c(1.0), c(0.0)], [c(0.0), c(1.0)]]],
            kind: ChannelKind::Identity,
        }
    }

    pub fn ops(&self) -> &[Mat2] {
        &self.ops
    }

    pub fn kind(&self) -> ChannelKind {
        self.kind
    }

    /// Largest entry of `|Σ K†K − I|`.
    pub fn completeness_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let s: C64 = self
                    .ops
                    .iter()
                    .map(|k| k[0][i].conj() * k[0][j] + k[1][i].conj() * k[1][j])
                    .sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((s - target).norm());
            }
        }
        worst
    }
}

/// Phase flip with probability `p_z`: `K₁ = √(1−p_z) I`, `K₂ = √p_z σ_z`.
pub fn dephasing(p_z: f64) -> Result<KrausChannel> {
    check_probability("p_z", p_z)?;
    let a = (1.0 - p_z).sqrt();
    let b = p_z.sqrt();
    KrausChannel::new(
        vec![[[c(a), c(0.0)], [c(0.0), c(a)]], [[c(b), c(0.0)], [c(0.0), c(-b)]]],
        ChannelKind::Dephasing { p_z },
    )
}

/// Decay `|1⟩ → |0⟩` with probability `γ`:
/// `K₁ = |0⟩⟨0| + √(1−γ)|1⟩⟨1|`, `K₂ = √γ |0⟩⟨1|`.
pub fn amplitude_damping(gamma: f64) -> Result<KrausChannel> {
    check_probability("gamma", gamma)?;
    KrausChannel::new(
        vec![
            [[c(1.0), c(0.0)], [c(0.0), c((1.0 - gamma).sqrt())]],
            [[c(0.0), c(gamma.sqrt())], [c(0.0), c(0.0)]],
        ],
        ChannelKind::AmplitudeDamping { gamma },
    )
}

/// Which qubits a channel acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// A single qubit, 1-based.
    Qubit(usize),
    /// Every qubit independently, in order `1..=N`.
    All,
}

/// `K` acting on qubit `k` (1-based) of a register vector.
pub fn apply_single(state: &Array1<C64>, op: &Mat2, k: usize) -> Array1<C64> {
    let mask = 1usize << (k - 1);
    let mut out = state.clone();
    for b0 in (0..state.len()).filter(|b| b & mask == 0) {
        let b1 = b0 | mask;
        let (x0, x1) = (state[b0], state[b1]);
        out[b0] = op[0][0] * x0 + op[0][1] * x1;
        out[b1] = op[1][0] * x0 + op[1][1] * x1;
    }
    out
}

fn apply_one_qubit(ens: &BranchEnsemble, ch: &KrausChannel, k: usize) -> BranchEnsemble {
    let mut next = Vec::with_capacity(ens.len() * ch.ops().len());
    for br in ens.branches() {
        for op in ch.ops() {
            let v = apply_single(&br.state, op, k);
            let w = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            next.push((br.weight * w, v));
        }
    }
    BranchEnsemble::from_branches(ens.n_qubits(), next).expect("branch dimensions are preserved")
}

/// Splits every branch into one weighted sub-branch per Kraus operator.
/// Sub-branches below the pruning threshold are dropped; the order is
/// (parent branch, Kraus index), so the result is deterministic.
pub fn apply_to_register(ens: &BranchEnsemble, ch: &KrausChannel, target: Target) -> Result<BranchEnsemble> {
    let n = ens.n_qubits();
    match target {
        Target::Qubit(k) => {
            if k == 0 || k > n {
                return Err(Error::QubitIndex { index: k, n_qubits: n });
            }
            Ok(apply_one_qubit(ens, ch, k))
        }
        Target::All => Ok((1..=n).fold(ens.clone(), |e, k| apply_one_qubit(&e, ch, k))),
    }
}

/// Direct superoperator action `Σ_j K_j ρ K_j†` on qubit `k` of a register
/// density matrix.
pub fn apply_to_density(rho: &Array2<C64>, ch: &KrausChannel, k: usize) -> Array2<C64> {
    let len = rho.nrows();
    let mut out = Array2::<C64>::zeros((len, len));
    for op in ch.ops() {
        // K ρ K† = (K (K ρ)†)†
        let mut kr = Array2::<C64>::zeros((len, len));
        for j in 0..len {
            let col = apply_single(&rho.column(j).to_owned(), op, k);
            kr.column_mut(j).assign(&col);
        }
        let kr_dag = kr.t().mapv(|z| z.conj());
        for j in 0..len {
            let col = apply_single(&kr_dag.column(j).to_owned(), op, k);
            for i in 0..len {
                out[[j, i]] += col[i].conj();
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::register::{RegisterState, PRUNE_THRESHOLD};
    use approx::assert_abs_diff_eq;

    fn spectral_norm(m: &Mat2) -> f64 {
        // largest singular value of a 2x2 matrix
        let a = [
            [
                C64::new(m[0][0].norm_sqr() + m[1][0].norm_sqr(), 0.0),
                m[0][0].conj() * m[0][1] + m[1][0].conj() * m[1][1],
            ],
            [
                m[0][1].conj() * m[0][0] + m[1][1].conj() * m[1][0],
                C64::new(m[0][1].norm_sqr() + m[1][1].norm_sqr(), 0.0),
            ],
        ];
        let tr = a[0][0].re + a[1][1].re;
        let det = a[0][0].re * a[1][1].re - a[0][1].norm_sqr();
        ((tr + (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    fn random_register(n: usize, seed: f64) -> Array1<C64> {
        let v = Array1::from_shape_fn(1 << n, |b| C64::new((seed * (b + 1) as f64).sin(), (seed + b as f64).cos()));
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.mapv(|z| z / nrm)
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(dephasing(-0.1).is_err());
        assert!(amplitude_damping(1.5).is_err());
    }

    #[test]
    fn completeness_certified() {
        for p in [0.0, 0.05, 0.5, 1.0] {
            assert!(dephasing(p).unwrap().completeness_defect() < 1e-14);
            assert!(amplitude_damping(p).unwrap().completeness_defect() < 1e-14);
        }
        let bad = vec![[[c(0.5), c(0.0)], [c(0.0), c(0.5)]]];
        assert!(KrausChannel::new(bad, ChannelKind::Identity).is_err());
    }

    #[test]
    fn dephasing_zero_is_identity() {
        let ch = dephasing(0.0).unwrap();
        let st = RegisterState::new(random_register(3, 0.7)).unwrap();
        let ens = BranchEnsemble::pure(st);
        let out = apply_to_register(&ens, &ch, Target::All).unwrap();
        assert_eq!(out.len(), 1);
        assert_abs_diff_eq!(out.branches()[0].weight, 1.0, epsilon = 1e-14);
        for (a, b) in out.branches()[0].state.iter().zip(ens.branches()[0].state.iter()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn full_decay() {
        let ch = amplitude_damping(1.0).unwrap();
        let mut rho = Array2::<C64>::zeros((2, 2));
        rho[[1, 1]] = c(1.0);
        let out = apply_to_density(&rho, &ch, 1);
        assert_abs_diff_eq!(out[[0, 0]].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[[1, 1]].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn dephasing_kraus_norms() {
        let ch = dephasing(0.05).unwrap();
        assert_abs_diff_eq!(spectral_norm(&ch.ops()[0]), 0.95f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(spectral_norm(&ch.ops()[1]), 0.05f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn weight_conserved_on_six_qubits() {
        let ch = dephasing(0.05).unwrap();
        let st = RegisterState::new(random_register(6, 1.3)).unwrap();
        let out = apply_to_register(&BranchEnsemble::pure(st), &ch, Target::All).unwrap();
        assert_abs_diff_eq!(out.total_weight(), 1.0, epsilon = 1e-9);
        assert!(out.len() <= 64);
        // each qubit doubles the branch count; p_z^6 ≈ 1.6e-8 keeps all 64
        assert_eq!(out.branches().iter().filter(|b| b.weight > PRUNE_THRESHOLD).count(), 64);
    }

    #[test]
    fn bad_qubit_index() {
        let st = RegisterState::ground(2);
        let ens = BranchEnsemble::pure(st);
        assert!(matches!(
            apply_to_register(&ens, &dephasing(0.1).unwrap(), Target::Qubit(3)),
            Err(Error::QubitIndex { .. })
        ));
    }

    #[test]
    fn branches_match_superoperator() {
        for n in 1..=3 {
            for ch in [dephasing(0.13).unwrap(), amplitude_damping(0.31).unwrap()] {
                let a = random_register(n, 0.4);
                let b = random_register(n, 2.1);
                let ens = BranchEnsemble::from_branches(n, vec![(0.6, a), (0.4, b)]).unwrap();
                let mut rho = ens.density();
                for k in 1..=n {
                    rho = apply_to_density(&rho, &ch, k);
                }
                let via_branches = apply_to_register(&ens, &ch, Target::All).unwrap().density();
                for (x, y) in rho.iter().zip(via_branches.iter()) {
                    assert!((x - y).norm() < 1e-10);
                }
            }
        }
    }
}
