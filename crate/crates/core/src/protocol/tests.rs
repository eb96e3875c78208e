use super::*;
use crate::hilbert::{cat, coherent, fidelity_pure, fock, squeezed_vacuum, vacuum};
use crate::noise::dephasing;
use approx::assert_abs_diff_eq;
use ndarray::Array1;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn params(lambda: f64, n: usize, d: usize) -> ProtocolParams {
    ProtocolParams::new(lambda, n, d).unwrap()
}

fn random_state(d: usize, seed: u64) -> CvState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cut = d / 3;
    let amps = Array1::from_shape_fn(d, |n| {
        if n < cut {
            C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    CvState::normalized(amps).unwrap()
}

fn mean_q(state: &Array2<C64>, q: &Array2<C64>) -> f64 {
    let flat: Vec<C64> = state.iter().copied().collect();
    let d = q.nrows();
    let r = state.ncols();
    let mut acc = C64::new(0.0, 0.0);
    for b in 0..r {
        for m in 0..d {
            for n in 0..d {
                acc += flat[m * r + b].conj() * q[[m, n]] * flat[n * r + b];
            }
        }
    }
    acc.re
}

#[test]
fn params_validation() {
    assert!(ProtocolParams::new(0.0, 4, 50).is_err());
    assert!(ProtocolParams::new(0.1, 1, 50).is_err());
    assert!(ProtocolParams::new(0.1, 4, 1).is_err());
    assert!(ProtocolParams::new(f64::NAN, 4, 50).is_err());
}

#[test]
fn kick_shift_products() {
    let p = params(0.137, 6, 10);
    for k in 1..=6 {
        for l in 1..=6 {
            let want = 2f64.powi(l as i32 - k as i32) * std::f64::consts::FRAC_PI_4;
            assert_abs_diff_eq!(p.kick(k) * p.shift(l), want, epsilon = 1e-12);
        }
    }
    assert!(p.signed_shift(6) < 0.0 && p.signed_shift(5) > 0.0);
}

#[test]
fn truncation_warning_threshold() {
    assert!(params(0.1, 4, 200).truncation_warning(3.0).is_none());
    assert!(params(0.5, 8, 200).truncation_warning(3.0).is_some());
}

#[test]
fn gate_index_errors() {
    let p = params(0.2, 3, 20);
    assert!(matches!(gate_v(0, &p), Err(Error::QubitIndex { .. })));
    assert!(matches!(gate_w(4, &p), Err(Error::QubitIndex { .. })));
}

#[test]
fn gates_are_unitary() {
    let p = params(0.25, 3, 40);
    for k in 1..=3 {
        for g in [gate_v(k, &p).unwrap(), gate_w(k, &p).unwrap()] {
            let u = g.to_dense(3);
            let uu = u.t().mapv(|z| z.conj()).dot(&u);
            let defect = uu
                .indexed_iter()
                .map(|((i, j), z)| (z - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm())
                .fold(0.0, f64::max);
            assert!(defect < 1e-8, "k={k} defect {defect}");
        }
    }
}

#[test]
fn gates_act_only_on_their_qubit() {
    // Register |0⟩ on the target qubit with |1⟩ on the spectators:
    // the spectator bits must stay put.
    let p = params(0.3, 3, 40);
    let g = gate_v(2, &p).unwrap();
    let mut psi = Array2::<C64>::zeros((40, 8));
    psi[[0, 0b101]] = C64::new(1.0, 0.0);
    g.apply(&mut psi);
    for (n, row) in psi.outer_iter().enumerate() {
        for (b, z) in row.iter().enumerate() {
            if b != 0b101 && b != 0b111 {
                assert!(z.norm() < 1e-14, "leak to n={n} b={b:03b}");
            }
        }
    }
}

#[test]
fn w_shift_direction_and_last_qubit_flip() {
    let d = 60;
    let q = hilbert::quadrature_q(d).unwrap();
    let p = params(0.2, 3, d);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let shifted = |k: usize| {
        // vacuum ⊗ |+⟩ on qubit k
        let mut psi = Array2::<C64>::zeros((d, 8));
        psi[[0, 0]] = C64::new(h, 0.0);
        psi[[0, 1 << (k - 1)]] = C64::new(h, 0.0);
        gate_w(k, &p).unwrap().apply(&mut psi);
        mean_q(&psi, q.matrix())
    };
    for k in 1..3 {
        assert_abs_diff_eq!(shifted(k), -p.shift(k), epsilon = 1e-6);
    }
    // same magnitude on the last qubit, reversed direction
    assert_abs_diff_eq!(shifted(3), p.shift(3), epsilon = 1e-6);
}

#[test]
fn v_on_position_like_state() {
    // narrowly squeezed state displaced to q0 approximates |q0⟩
    let d = 200;
    let r = 1.6;
    let q0 = 0.7;
    let disp = hilbert::displacement(d, C64::new(q0 / std::f64::consts::SQRT_2, 0.0)).unwrap();
    let sq = squeezed_vacuum(d, r).unwrap();
    let x = CvState::normalized(disp.apply(&sq).unwrap()).unwrap();
    let p = params(0.3, 2, d);
    let v = p.kick(1);
    let mut psi = Array2::<C64>::zeros((d, 4));
    psi.column_mut(0).assign(x.amps());
    gate_v(1, &p).unwrap().apply(&mut psi);
    // weights on |±⟩ of qubit 1
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let (mut w_plus, mut w_minus) = (0.0, 0.0);
    for n in 0..d {
        w_plus += ((psi[[n, 0]] + psi[[n, 1]]) * h).norm_sqr();
        w_minus += ((psi[[n, 0]] - psi[[n, 1]]) * h).norm_sqr();
    }
    // cos²(π/4 ± vq) = (1 ∓ sin 2vq)/2, averaged over the Gaussian spread
    // of the squeezed state; the narrow-state limit is the bare cosine
    let var = (-2.0 * r).exp() / 2.0;
    let smear = (-2.0 * v * v * var).exp();
    let s2 = (2.0 * v * q0).sin();
    assert_abs_diff_eq!(w_plus, (1.0 - s2 * smear) / 2.0, epsilon = 1e-3);
    assert_abs_diff_eq!(w_minus, (1.0 + s2 * smear) / 2.0, epsilon = 1e-3);
}

#[test]
fn encode_preserves_norm_and_round_trips() {
    let proto = Protocol::new(params(0.2, 4, 120)).unwrap();
    for seed in 0..5 {
        let x = random_state(120, seed);
        let enc = proto.encode(&x).unwrap();
        assert_abs_diff_eq!(enc.norm(), 1.0, epsilon = 1e-6);
        let dec = proto.decode(&enc).unwrap();
        let back = dec.matrix().column(0).to_owned();
        let err: f64 = back.iter().zip(x.amps()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        assert!(err < 1e-7, "seed {seed}: {err}");
    }
}

#[test]
fn free_encode_matches_engine() {
    let p = params(0.25, 3, 60);
    let x = coherent(60, C64::new(0.5, 0.3)).unwrap();
    let a = encode(&x, &p).unwrap();
    let b = Protocol::new(p).unwrap().encode(&x).unwrap();
    let diff = (a.matrix() - b.matrix()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    assert!(diff < 1e-13);
}

#[test]
fn dimension_mismatch() {
    let proto = Protocol::new(params(0.2, 3, 40)).unwrap();
    assert!(matches!(proto.encode(&vacuum(30).unwrap()), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn hybrid_state_validation() {
    assert!(HybridState::new(Array2::zeros((4, 3))).is_err());
    assert!(HybridState::new(Array2::zeros((4, 4))).is_err());
    let s = HybridState::product(&vacuum(5).unwrap(), &RegisterState::ground(2)).unwrap();
    assert_eq!(s.n_qubits(), 2);
    assert_abs_diff_eq!(s.reduced_register()[[0, 0]].re, 1.0, epsilon = 1e-15);
}

#[test]
fn reset_of_product_is_single_branch() {
    let proto = Protocol::new(params(0.25, 3, 80)).unwrap();
    let reg = crate::register::phi_state(&crate::register::SignVector::from_index(5, 3));
    let s = HybridState::product(proto.tilde0(), &reg).unwrap();
    let out = proto.reset_cv(&s).unwrap();
    assert_eq!(out.rank, 1);
    assert_abs_diff_eq!(out.register.branches()[0].weight, 1.0, epsilon = 1e-12);
}

#[test]
fn reset_weights_sum_to_one() {
    let proto = Protocol::new(params(0.25, 4, 120)).unwrap();
    let enc = proto.encode(&fock(120, 2).unwrap()).unwrap();
    let out = proto.reset_cv(&enc).unwrap();
    assert_abs_diff_eq!(out.register.total_weight(), 1.0, epsilon = 1e-9);
    assert!(out.rank > 1);
}

#[test]
fn epsilon_vacuum_below_fock1() {
    let proto = Protocol::new(params(0.15, 5, 150)).unwrap();
    let e0 = proto.epsilon(&vacuum(150).unwrap()).unwrap();
    let e1 = proto.epsilon(&fock(150, 1).unwrap()).unwrap();
    assert!(e0 < e1, "{e0} {e1}");
    assert!(e0 < 0.05, "{e0}");
}

#[test]
fn epsilon_grows_with_fock_index() {
    let proto = Protocol::new(params(0.3, 4, 150)).unwrap();
    let eps: Vec<f64> = (0..5).map(|m| proto.epsilon(&fock(150, m).unwrap()).unwrap()).collect();
    for w in eps.windows(2) {
        assert!(w[0] <= w[1] + 1e-6, "{eps:?}");
    }
}

#[test]
fn epsilon_has_interior_minimum_in_lambda() {
    let x = fock(200, 1).unwrap();
    // below λ ≈ 0.09 the box |p| < π/(2λ) no longer fits into 200 levels
    let grid = log_grid(0.09, 0.6, 14);
    let eps: Vec<f64> = grid
        .iter()
        .map(|&l| Protocol::new(params(l, 4, 200)).unwrap().epsilon(&x).unwrap())
        .collect();
    let best = (0..eps.len()).min_by(|&i, &j| eps[i].total_cmp(&eps[j])).unwrap();
    assert!(best > 0 && best < eps.len() - 1, "{eps:?}");
    assert!(eps[..best].windows(2).all(|w| w[1] < w[0]), "{eps:?}");
    assert!(eps[best..].windows(2).all(|w| w[1] > w[0]), "{eps:?}");
}

#[test]
fn recovery_obeys_sandwich() {
    let d = 150;
    let proto = Protocol::new(params(0.28, 4, d)).unwrap();
    for x in [fock(d, 0).unwrap(), fock(d, 1).unwrap(), fock(d, 3).unwrap(), cat(d, 1.0).unwrap(), random_state(d, 9)] {
        let rec = proto.recover(&x, None).unwrap();
        let e = rec.epsilon;
        assert!(rec.fidelity >= (1.0 - e).powi(2) - 1e-6, "{} vs {e}", rec.fidelity);
        assert!(rec.fidelity <= 1.0 - e + 1e-6, "{} vs {e}", rec.fidelity);
        assert!(rec.dominant_weight >= 1.0 - e - 1e-9);
        assert_abs_diff_eq!(rec.recovered.trace(), 1.0, epsilon = 1e-9);
    }
}

#[test]
fn recovered_density_bounds_branch_fidelity() {
    let d = 120;
    let proto = Protocol::new(params(0.3, 3, d)).unwrap();
    let x = fock(d, 1).unwrap();
    let rec = proto.recover(&x, None).unwrap();
    // the mode-only overlap ignores the register and can only be larger
    let f = crate::hilbert::fidelity_mixed(&x, &rec.recovered).unwrap();
    assert!(f >= rec.fidelity - 1e-12, "{f} {}", rec.fidelity);
    assert!(f <= 1.0 + 1e-12);
}

#[test]
fn fidelity_shortcut_agrees() {
    // F = ⟨Ψ̃|ρ_DV|Ψ̃⟩ with Ψ̃ = (⟨0̃| ⊗ I) U |ψ, 0⟩
    let d = 120;
    let proto = Protocol::new(params(0.3, 4, d)).unwrap();
    let x = fock(d, 2).unwrap();
    let enc = proto.encode(&x).unwrap();
    let psi_t = enc.project_cv(proto.tilde0()).unwrap();
    let rho = enc.reduced_register();
    let f_direct = psi_t.mapv(|z| z.conj()).dot(&rho.dot(&psi_t)).re;
    assert_abs_diff_eq!(proto.recovered_fidelity(&x, None).unwrap(), f_direct, epsilon = 1e-10);
    let (eps, f_fast) = proto.overlap_recovery(&x, None).unwrap();
    assert_abs_diff_eq!(f_fast, f_direct, epsilon = 1e-10);
    assert_abs_diff_eq!(eps, proto.epsilon(&x).unwrap(), epsilon = 1e-12);
    let ch = dephasing(0.05).unwrap();
    let slow = proto.recovered_fidelity(&x, Some(&ch)).unwrap();
    let (_, fast) = proto.overlap_recovery(&x, Some(&ch)).unwrap();
    assert_abs_diff_eq!(slow, fast, epsilon = 1e-9);
}

#[test]
fn zero_dephasing_is_exact() {
    let d = 100;
    let proto = Protocol::new(params(0.3, 3, d)).unwrap();
    let x = fock(d, 1).unwrap();
    let f0 = proto.recovered_fidelity(&x, None).unwrap();
    let f1 = proto.recovered_fidelity(&x, Some(&dephasing(0.0).unwrap())).unwrap();
    assert_abs_diff_eq!(f0, f1, epsilon = 1e-12);
    let f2 = proto.recovered_fidelity(&x, Some(&dephasing(0.1).unwrap())).unwrap();
    assert!(f2 < f0);
}

fn oracle_distance(input: &CvState, lambda: f64, n: usize, d: usize) -> f64 {
    let proto = Protocol::new(params(lambda, n, d)).unwrap();
    let phi = proto.encoded_register(input).unwrap().phi_amplitudes();
    let norm = phi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let phi: Vec<C64> = phi.iter().map(|z| z / norm).collect();
    let ideal = crate::oracle::encoded_amplitudes(input, lambda, n);
    crate::oracle::phase_aligned_distance(&phi, &ideal.phi)
}

#[test]
fn unitary_projection_matches_branch_integral() {
    let d = 200;
    let lambda = 0.25;
    for (n, x) in [(4, fock(d, 1).unwrap()), (5, coherent(d, C64::new(0.4, -0.3)).unwrap())] {
        let proto = Protocol::new(params(lambda, n, d)).unwrap();
        let phi = proto.encoded_register(&x).unwrap().phi_amplitudes();
        let want = crate::oracle::projected_amplitudes(&x, lambda, n, 14.0).unwrap();
        let err = phi.iter().zip(&want).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-3, "n={n}: {err}");
    }
}

#[test]
fn vacuum_encoding_matches_oracle() {
    // the gap to the ideal register shrinks linearly in λ at fixed λ2^N
    let coarse = oracle_distance(&vacuum(300).unwrap(), 0.2, 6, 300);
    let fine = oracle_distance(&vacuum(300).unwrap(), 0.1, 7, 300);
    assert!(fine < 1.5e-2, "{fine}");
    assert!((fine / coarse - 0.5).abs() < 0.05, "{coarse} {fine}");
}

#[test]
fn oracle_distance_is_truncation_free() {
    let x = vacuum(200).unwrap();
    let fock_space = oracle_distance(&x, 0.2, 6, 200);
    let amps = crate::oracle::projected_amplitudes(&x, 0.2, 6, crate::oracle::support_reach(&x)).unwrap();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let amps: Vec<C64> = amps.iter().map(|z| z / norm).collect();
    let ideal = crate::oracle::encoded_amplitudes(&x, 0.2, 6);
    let position_space = crate::oracle::phase_aligned_distance(&amps, &ideal.phi);
    assert_abs_diff_eq!(fock_space, position_space, epsilon = 1e-4);
}

#[test]
fn oracle_sign_pattern_matches_fock1() {
    let dist = oracle_distance(&fock(300, 1).unwrap(), 0.1, 7, 300);
    assert!(dist < 2e-2, "{dist}");
}

#[test]
fn tilde0_sinc_is_even_and_normalised() {
    let t = sinc_projection(0.2, 150).unwrap();
    for (n, z) in t.state.amps().iter().enumerate() {
        if n % 2 == 1 {
            assert_eq!(*z, C64::new(0.0, 0.0));
        }
    }
    assert!(t.report.quadrature_error < QUADRATURE_TOL);
    assert!(t.report.retained_norm > 0.0 && t.report.retained_norm <= 1.0);
}

#[test]
fn tilde0_momentum_cross_check() {
    // ⟨n|0̃⟩ = iⁿ √(λ/π) ∫_{−P}^{P} hₙ(p) dp, P = π/(2λ)
    let lambda = 0.3;
    let d = 60;
    let t = sinc_projection(lambda, d).unwrap();
    let big_p = std::f64::consts::PI / (2.0 * lambda);
    let f = |p: f64, out: &mut [f64]| crate::hilbert::hermite_functions(p, REFERENCE_DIM, out);
    let res = crate::quad::integrate(&f, REFERENCE_DIM, -big_p, big_p, Default::default()).unwrap();
    let scale = (lambda / std::f64::consts::PI).sqrt();
    let total: f64 = res.values.iter().map(|v| (v * scale).powi(2)).sum();
    let kept: f64 = res.values[..d].iter().map(|v| (v * scale).powi(2)).sum();
    assert_abs_diff_eq!(kept / total, t.report.retained_norm, epsilon = 1e-8);
    let norm = kept.sqrt();
    for n in (0..d).step_by(2) {
        let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let want = sign * res.values[n] * scale / norm;
        assert_abs_diff_eq!(t.state.amps()[n].re, want, epsilon = 1e-8);
    }
}

#[test]
fn tilde0_squeezed_fidelity() {
    for lambda in [0.2, 0.3] {
        let p = params(lambda, 4, 300);
        let a = tilde0(&p, Tilde0Method::SincProjection).unwrap();
        let b = tilde0(&p, Tilde0Method::Squeezed).unwrap();
        let f = fidelity_pure(&a.state, &b.state).unwrap();
        assert!((f - 0.89).abs() < 0.01, "lambda {lambda}: {f}");
    }
}

#[test]
fn tilde0_iterated_encode_fidelity() {
    let p = params(0.1, 8, 300);
    let a = tilde0(&p, Tilde0Method::SincProjection).unwrap();
    let b = tilde0(&p, Tilde0Method::IteratedEncode).unwrap();
    let f = fidelity_pure(&a.state, &b.state).unwrap();
    assert!(f > 0.99, "{f}");
}

#[test]
fn method_parsing() {
    assert_eq!("squeezed".parse::<Tilde0Method>().unwrap(), Tilde0Method::Squeezed);
    assert!("sinc".parse::<Tilde0Method>().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn round_trip_random_inputs(seed in 0u64..1000, n in 2usize..6, lambda in 0.1f64..0.5) {
        let d = 80;
        let proto = Protocol::new(params(lambda, n, d)).unwrap();
        let x = random_state(d, seed);
        let dec = proto.decode(&proto.encode(&x).unwrap()).unwrap();
        let err: f64 = dec.matrix().column(0).iter().zip(x.amps()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(err < 1e-7);
    }

    #[test]
    fn epsilon_in_unit_interval(m in 0usize..6, lambda in 0.05f64..0.8) {
        let proto = Protocol::new(params(lambda, 3, 100)).unwrap();
        let e = proto.epsilon(&fock(100, m).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
    }
}
