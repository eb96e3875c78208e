//! Seeded random superpositions `Σ_m e^{−κm} c_m |m⟩` with `κ` tuned to a
//! target mean photon number.
//!
//! Each state draws from its own ChaCha8 stream `(seed, stream)`, so an
//! ensemble can be generated in any order or in parallel with identical
//! results.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{CvState, Ket};
use crate::C64;

pub const DEFAULT_TERMS: usize = 200;
pub const KAPPA_RANGE: (f64, f64) = (0.0, 50.0);
pub const NBAR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomStateSpec {
    pub n_terms: usize,
    pub target_nbar: f64,
    pub seed: u64,
    /// Independent stream within `seed`; ensemble member index.
    pub stream: u64,
    pub dim: usize,
}

impl RandomStateSpec {
    pub fn new(target_nbar: f64, seed: u64, dim: usize) -> Self {
        Self {
            n_terms: DEFAULT_TERMS.min(dim),
            target_nbar,
            seed,
            stream: 0,
            dim,
        }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self { stream, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_terms == 0 || self.n_terms > self.dim {
            return Err(Error::InvalidDimension {
                dim: self.n_terms,
                reason: "number of terms must be in 1..=dim",
            });
        }
        if !(self.target_nbar > 0.0 && self.target_nbar < self.n_terms as f64 / 2.0) {
            return Err(Error::InvalidParameter {
                name: "target_nbar",
                value: self.target_nbar,
                reason: "must lie in (0, n_terms/2)",
            });
        }
        Ok(())
    }
}

/// Uniform amplitudes in `[0, 1)` and phases in `[0, 2π)`.
fn draw_coefficients(spec: &RandomStateSpec) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);
    (0..spec.n_terms)
        .map(|_| {
            let amp: f64 = rng.random();
            let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            C64::from_polar(amp, phase)
        })
        .collect()
}

/// Mean photon number of the filtered, normalised coefficients.
fn filtered_nbar(weights: &[f64], kappa: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (m, w) in weights.iter().enumerate() {
        let f = w * (-2.0 * kappa * m as f64).exp();
        num += m as f64 * f;
        den += f;
    }
    num / den
}

/// Filter strength giving mean photon number `target` for the given draws.
pub fn solve_kappa(coeffs: &[C64], target: f64) -> Result<f64> {
    let weights: Vec<f64> = coeffs.iter().map(|z| z.norm_sqr()).collect();
    let (mut lo, mut hi) = KAPPA_RANGE;
    let (n_lo, n_hi) = (filtered_nbar(&weights, lo), filtered_nbar(&weights, hi));
    // n̄ falls as κ grows
    if !(n_hi <= target && target <= n_lo) {
        return Err(Error::RootBracket {
            what: "filter strength kappa",
            target,
            low: n_hi,
            high: n_lo,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let n = filtered_nbar(&weights, mid);
        if (n - target).abs() < NBAR_TOL * 1e-3 || hi - lo < 1e-15 {
            return Ok(mid);
        }
        if n > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A normalised random state with mean photon number `spec.target_nbar`.
pub fn random_state(spec: &RandomStateSpec) -> Result<CvState> {
    spec.validate()?;
    let c = draw_coefficients(spec);
    let kappa = solve_kappa(&c, spec.target_nbar)?;
    let mut amps = Array1::<C64>::zeros(spec.dim);
    for (m, z) in c.iter().enumerate() {
        amps[m] = z * (-kappa * m as f64).exp();
    }
    let state = CvState::normalized(amps)?;
    let nbar = mean_photon(&state);
    if (nbar - spec.target_nbar).abs() > NBAR_TOL {
        return Err(Error::RootBracket {
            what: "filter strength kappa",
            target: spec.target_nbar,
            low: nbar,
            high: nbar,
        });
    }
    Ok(state)
}

/// `Σ_m m |⟨m|ψ⟩|²`.
pub fn mean_photon<K: Ket>(state: &K) -> f64 {
    state.ket().iter().enumerate().map(|(m, z)| m as f64 * z.norm_sqr()).sum()
}

/// `count` states on streams `0..count` of `spec.seed`.
pub fn ensemble(spec: &RandomStateSpec, count: usize) -> Result<Vec<CvState>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| random_state(&spec.with_stream(i)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{fock, vacuum};
    use proptest::prelude::*;

    #[test]
    fn mean_photon_of_basis_states() {
        assert_eq!(mean_photon(&fock(10, 3).unwrap()), 3.0);
        assert_eq!(mean_photon(&vacuum(10).unwrap()), 0.0);
    }

    #[test]
    fn hits_target() {
        for target in [1.0, 3.0, 7.0] {
            let s = random_state(&RandomStateSpec::new(target, 11, 200)).unwrap();
            assert!((mean_photon(&s) - target).abs() < NBAR_TOL);
        }
    }

    #[test]
    fn strong_filter_tends_to_vacuum() {
        let c = draw_coefficients(&RandomStateSpec::new(1.0, 3, 200));
        let w: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
        assert!(filtered_nbar(&w, 50.0) < 1e-20);
    }

    #[test]
    fn same_seed_same_state() {
        let spec = RandomStateSpec::new(3.0, 42, 150);
        let a = random_state(&spec).unwrap();
        let b = random_state(&spec).unwrap();
        assert_eq!(a.amps(), b.amps());
        let c = random_state(&spec.with_stream(1)).unwrap();
        assert_ne!(a.amps(), c.amps());
    }

    #[test]
    fn ensemble_is_order_independent() {
        let spec = RandomStateSpec::new(3.0, 7, 120);
        let par = ensemble(&spec, 12).unwrap();
        for (i, s) in par.iter().enumerate() {
            let seq = random_state(&spec.with_stream(i as u64)).unwrap();
            assert_eq!(s.amps(), seq.amps());
        }
    }

    #[test]
    fn rejects_unreachable_targets() {
        assert!(random_state(&RandomStateSpec::new(150.0, 1, 200)).is_err());
        assert!(random_state(&RandomStateSpec::new(-1.0, 1, 200)).is_err());
        let spec = RandomStateSpec {
            n_terms: 300,
            ..RandomStateSpec::new(2.0, 1, 200)
        };
        assert!(random_state(&spec).is_err());
    }

    #[test]
    fn unreachable_within_bracket_reports_diagnostics() {
        // all weight on m = 0 cannot reach any positive target
        let c = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0)];
        match solve_kappa(&c, 0.5) {
            Err(Error::RootBracket { low, high, .. }) => assert!(low <= high),
            other => panic!("{other:?}"),
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn nbar_decreases_with_kappa(seed in 0u64..10_000, k in 0.0f64..5.0, dk in 0.01f64..1.0) {
            let c = draw_coefficients(&RandomStateSpec::new(1.0, seed, 200));
            let w: Vec<f64> = c.iter().map(|z| z.norm_sqr()).collect();
            prop_assert!(filtered_nbar(&w, k + dk) < filtered_nbar(&w, k));
        }

        #[test]
        fn any_reachable_target(seed in 0u64..10_000, target in 0.2f64..20.0) {
            let s = random_state(&RandomStateSpec::new(target, seed, 200)).unwrap();
            prop_assert!((mean_photon(&s) - target).abs() < NBAR_TOL);
        }
    }
}
