mod common;

use qmemcap::channels::{
    apply_branch_sequence, apply_memory_channel_n, cyclic_shift, identity_transition, MemoryChannel,
    QubitChannel,
};
use qmemcap::linalg::ComplexMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn branches() -> Vec<QubitChannel> {
    vec![
        QubitChannel::amplitude_damping(0.2).unwrap(),
        QubitChannel::depolarizing(0.3).unwrap(),
        QubitChannel::amplitude_damping(0.7).unwrap(),
    ]
}

#[test]
fn markov_cyclic_shift_is_periodic() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let periodic = MemoryChannel::periodic(branches()).unwrap();
    let markov = MemoryChannel::markov(branches(), cyclic_shift(3), vec![1.0 / 3.0; 3]).unwrap();
    for n in 1..=3 {
        let rho = common::random_state(&mut rng, 1 << n);
        let a = apply_memory_channel_n(&periodic, &rho, n).unwrap();
        let b = apply_memory_channel_n(&markov, &rho, n).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-12);
    }
}

#[test]
fn markov_identity_is_random() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = vec![0.5, 0.2, 0.3];
    let random = MemoryChannel::random(branches(), q.clone()).unwrap();
    let markov = MemoryChannel::markov(branches(), identity_transition(3), q).unwrap();
    for n in 1..=3 {
        let rho = common::random_state(&mut rng, 1 << n);
        let a = apply_memory_channel_n(&random, &rho, n).unwrap();
        let b = apply_memory_channel_n(&markov, &rho, n).unwrap();
        assert!(a.matrix().max_abs_diff(b.matrix()) <= 1e-12);
    }
}

#[test]
fn periodic_matches_explicit_offsets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let b = branches();
    let mc = MemoryChannel::periodic(b.clone()).unwrap();
    let rho = common::random_state(&mut rng, 4);
    let mut expected = ComplexMatrix::zeros(4);
    for k in 0..3 {
        let out = apply_branch_sequence(&b, &[k, (k + 1) % 3], &rho).unwrap();
        expected = &expected + &out.matrix().scale_real(1.0 / 3.0);
    }
    let got = mc.apply_n(&rho, 2).unwrap();
    assert!(got.matrix().max_abs_diff(&expected) <= 1e-12);
}

#[test]
fn random_matches_explicit_mixture() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let b = branches();
    let q = [0.1, 0.6, 0.3];
    let mc = MemoryChannel::random(b.clone(), q.to_vec()).unwrap();
    let rho = common::random_state(&mut rng, 8);
    let mut expected = ComplexMatrix::zeros(8);
    for (i, qi) in q.iter().enumerate() {
        let out = apply_branch_sequence(&b, &[i, i, i], &rho).unwrap();
        expected = &expected + &out.matrix().scale_real(*qi);
    }
    let got = mc.apply_n(&rho, 3).unwrap();
    assert!(got.matrix().max_abs_diff(&expected) <= 1e-12);
}

#[test]
fn markov_chain_weights_follow_transitions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let b = branches()[..2].to_vec();
    let q = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
    let lambda = vec![0.75, 0.25];
    let mc = MemoryChannel::markov(b.clone(), q.clone(), lambda.clone()).unwrap();
    let rho = common::random_state(&mut rng, 4);
    let mut expected = ComplexMatrix::zeros(4);
    for (i, row) in q.iter().enumerate() {
        for (j, qij) in row.iter().enumerate() {
            let w = lambda[i] * qij;
            let out = apply_branch_sequence(&b, &[i, j], &rho).unwrap();
            expected = &expected + &out.matrix().scale_real(w);
        }
    }
    let got = mc.apply_n(&rho, 2).unwrap();
    assert!(got.matrix().max_abs_diff(&expected) <= 1e-12);
}

#[test]
fn rejects_non_stationary_lambda() {
    let q = vec![vec![0.9, 0.1], vec![0.3, 0.7]];
    let r = MemoryChannel::markov(branches()[..2].to_vec(), q, vec![0.5, 0.5]);
    assert!(r.is_err());
}
