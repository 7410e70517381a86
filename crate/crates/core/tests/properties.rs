use proptest::prelude::*;

use qubench_core::circgen::{
    dagger_circuit, generate_random_circuit, ideal_unitary, parse_openqasm, target_cnot_count, to_openqasm, Topology,
};
use qubench_core::fitting::{fit_decay, FitOptions};
use qubench_core::noise::NoiseModel;
use qubench_core::protocols::{DecaySample, Protocol};
use qubench_core::qcore::{equal_up_to_phase, max_abs, ptm_from_unitary, CMatrix, DensityMatrix};
use qubench_core::sim::simulate;
use qubench_core::twirl::{randomized_compile, randomized_compile_with, FinalFrame};

fn preset_label() -> impl Strategy<Value = &'static str> {
    prop_oneof![
        Just("depolarizing"),
        Just("t1"),
        Just("t2"),
        Just("coherent1q"),
        Just("coherent2q"),
    ]
}

fn topology(w: usize, ring: bool) -> Topology {
    if ring && w > 2 {
        Topology::ring(w)
    } else {
        Topology::line(w)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noisy_channels_are_trace_preserving(label in preset_label(), strength in 0.0f64..0.5) {
        let model = NoiseModel::preset(label, strength).unwrap();
        for class in [qubench_core::GateClass::OneQubitGate, qubench_core::GateClass::TwoQubitGate] {
            for ch in model.channels(class) {
                prop_assert!(ch.trace_preservation_error() < 1e-10);
            }
        }
    }

    #[test]
    fn simulated_states_stay_physical(
        label in preset_label(),
        strength in 1e-4f64..0.3,
        w in 1usize..=3,
        depth in 1usize..6,
        seed in any::<u64>(),
    ) {
        let xi = if w > 1 { 0.5 } else { 0.0 };
        let Ok(circuit) = generate_random_circuit(w, depth, xi, &Topology::line(w), seed) else {
            return Ok(());
        };
        let noise = NoiseModel::preset(label, strength).unwrap();
        let state = simulate(&circuit, &noise).unwrap();
        prop_assert!(state.validate().is_ok());
    }

    #[test]
    fn ptm_of_a_product_is_the_product_of_ptms(w in 1usize..=2, s1 in any::<u64>(), s2 in any::<u64>()) {
        let xi = if w > 1 { 0.5 } else { 0.0 };
        let a = generate_random_circuit(w, 2, xi, &Topology::line(w), s1).unwrap();
        let b = generate_random_circuit(w, 2, xi, &Topology::line(w), s2).unwrap();
        let (ua, ub) = (ideal_unitary(&a).unwrap(), ideal_unitary(&b).unwrap());
        let joint = ptm_from_unitary(&(&ub * &ua)).unwrap();
        let composed = ptm_from_unitary(&ub).unwrap().matrix() * ptm_from_unitary(&ua).unwrap().matrix();
        prop_assert!((joint.matrix() - composed).abs().max() < 1e-10);
    }

    #[test]
    fn generation_is_deterministic_and_hits_the_density(
        w in 2usize..=4,
        depth in 1usize..12,
        xi in 0.0f64..=1.0,
        ring in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let t = topology(w, ring);
        let first = generate_random_circuit(w, depth, xi, &t, seed);
        let second = generate_random_circuit(w, depth, xi, &t, seed);
        match (first, second) {
            (Ok(a), Ok(b)) => {
                prop_assert_eq!(&a, &b);
                prop_assert_eq!(a.depth(), depth);
                prop_assert_eq!(a.cnot_count(), target_cnot_count(w, depth, xi));
                prop_assert!(a.validate().is_ok());
            }
            (Err(_), Err(_)) => prop_assert!(target_cnot_count(w, depth, xi) > depth * t.max_matching()),
            _ => prop_assert!(false, "same seed gave different outcomes"),
        }
    }

    #[test]
    fn circuit_then_dagger_is_identity(w in 1usize..=3, depth in 1usize..8, seed in any::<u64>()) {
        let xi = if w > 1 { 0.5 } else { 0.0 };
        let c = generate_random_circuit(w, depth, xi, &Topology::line(w), seed).unwrap();
        let u = ideal_unitary(&c.then(&dagger_circuit(&c)).unwrap()).unwrap();
        prop_assert!(equal_up_to_phase(&u, &CMatrix::identity(1 << w, 1 << w), 1e-10));
    }

    #[test]
    fn twirling_preserves_the_unitary_and_depth(
        w in 1usize..=3,
        depth in 1usize..8,
        seed in any::<u64>(),
        twirl_seed in any::<u64>(),
    ) {
        let xi = if w > 1 { 0.5 } else { 0.0 };
        let c = generate_random_circuit(w, depth, xi, &Topology::line(w), seed).unwrap();
        let u = ideal_unitary(&c).unwrap();
        let (absorbed, _) = randomized_compile(&c, twirl_seed).unwrap();
        prop_assert_eq!(absorbed.depth(), c.depth());
        prop_assert_eq!(absorbed.cnot_count(), c.cnot_count());
        prop_assert!(equal_up_to_phase(&ideal_unitary(&absorbed).unwrap(), &u, 1e-10));

        let tracked = randomized_compile_with(&c, twirl_seed, FinalFrame::Track).unwrap();
        let corrected = tracked.final_frame.matrix() * ideal_unitary(&tracked.circuit).unwrap();
        prop_assert!(equal_up_to_phase(&corrected, &u, 1e-10));
    }

    #[test]
    fn qasm_round_trip_keeps_the_unitary(w in 1usize..=3, depth in 1usize..6, seed in any::<u64>(), tw in any::<u64>()) {
        let xi = if w > 1 { 0.5 } else { 0.0 };
        let c = generate_random_circuit(w, depth, xi, &Topology::line(w), seed).unwrap();
        let compiled = randomized_compile_with(&c, tw, FinalFrame::Track).unwrap().circuit;
        let back = parse_openqasm(&to_openqasm(&compiled)).unwrap();
        prop_assert_eq!(back.depth(), compiled.depth());
        prop_assert!(equal_up_to_phase(&ideal_unitary(&back).unwrap(), &ideal_unitary(&compiled).unwrap(), 1e-10));
    }

    #[test]
    fn maximally_mixed_input_is_a_fixed_point_of_unital_noise(
        label in prop_oneof![Just("depolarizing"), Just("t2"), Just("coherent1q")],
        strength in 0.0f64..0.5,
    ) {
        let model = NoiseModel::preset(label, strength).unwrap();
        let mixed = DensityMatrix::maximally_mixed(1);
        for ch in model.channels(qubench_core::GateClass::OneQubitGate) {
            let out = ch.apply_to_operator(mixed.matrix());
            prop_assert!(max_abs(&(out - mixed.matrix())) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn decay_constant_ignores_amplitude_scale(
        p in 0.8f64..0.97,
        b in 0.2f64..0.7,
        scale in 0.5f64..2.0,
    ) {
        let samples = |amp: f64| -> Vec<DecaySample> {
            [2usize, 4, 8, 16, 32]
                .iter()
                .map(|&m| DecaySample {
                    protocol: Protocol::MRB,
                    depth: m,
                    circuit_seed: m as u64,
                    pauli_label: None,
                    value: amp * p.powi(m as i32),
                })
                .collect()
        };
        let opts = FitOptions::for_protocol(Protocol::MRB, 2).with_resamples(0);
        let base = fit_decay(&samples(b), &opts).unwrap();
        let scaled = fit_decay(&samples(b * scale), &opts).unwrap();
        prop_assert!((base.p - p).abs() < 1e-6);
        prop_assert!((scaled.p - base.p).abs() < 1e-6);
    }
}
