use cvq_core::hilbert;
use cvq_core::noise::{amplitude_damping, dephasing};
use cvq_core::protocol::{Protocol, ProtocolParams};
use cvq_core::randgen::{random_state, RandomStateSpec};
use proptest::prelude::*;

fn protocol(lambda: f64, n: usize, d: usize) -> Protocol {
    Protocol::new(ProtocolParams::new(lambda, n, d).unwrap()).unwrap()
}

// Values frozen from a reference run; any drift means the numerics changed.
#[test]
fn noisy_fidelities_are_stable() {
    let proto = protocol(0.07, 6, 200);
    let fock5 = hilbert::fock(200, 5).unwrap();
    let clean = proto.recover(&fock5, None).unwrap();
    assert!((clean.fidelity - 0.630264139969).abs() < 1e-9);
    let zf = proto.recover(&fock5, Some(&dephasing(0.05).unwrap())).unwrap();
    assert!((zf.fidelity - 0.520295021760).abs() < 1e-9);
    let af = proto.recover(&fock5, Some(&amplitude_damping(0.05).unwrap())).unwrap();
    assert!((af.fidelity - 0.541565506240).abs() < 1e-9);
}

#[test]
fn fast_fidelity_matches_pipeline() {
    let proto = protocol(0.1, 5, 200);
    let x = random_state(&RandomStateSpec::new(3.0, 5, 200)).unwrap();
    let ch = dephasing(0.05).unwrap();
    let full = proto.recover(&x, Some(&ch)).unwrap();
    let (eps, f) = proto.overlap_recovery(&x, Some(&ch)).unwrap();
    assert!((eps - full.epsilon).abs() < 1e-10);
    assert!((f - full.fidelity).abs() < 1e-9);
}

#[test]
fn recovered_state_is_a_density() {
    let proto = protocol(0.15, 4, 200);
    let x = hilbert::cat(200, 2.0).unwrap();
    let rec = proto.recover(&x, Some(&amplitude_damping(0.1).unwrap())).unwrap();
    assert!((rec.recovered.trace() - 1.0).abs() < 1e-10);
    let min = rec.recovered.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
    assert!(min > -1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn fidelity_within_error_bounds(stream in 0u64..1000, nbar in 0.5f64..4.0, n in 4usize..6) {
        let proto = protocol(0.12, n, 150);
        let x = random_state(&RandomStateSpec::new(nbar, 99, 150).with_stream(stream)).unwrap();
        let (e, f) = proto.overlap_recovery(&x, None).unwrap();
        prop_assert!(f <= 1.0 - e + 1e-9);
        prop_assert!(f >= (1.0 - e).powi(2) - 1e-9);
    }
}
