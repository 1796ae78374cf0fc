#![allow(dead_code)]

use num_complex::Complex64;
use qmemcap::channels::QubitChannel;
use qmemcap::linalg::{ComplexMatrix, DensityMatrix};
use rand::Rng;

pub fn gaussian_amplitudes(rng: &mut impl Rng, dim: usize) -> Vec<Complex64> {
    (0..dim)
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect()
}

/// Mixture of three random pure states.
pub fn random_state(rng: &mut impl Rng, dim: usize) -> DensityMatrix {
    let w: Vec<f64> = (0..3).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let mut m = ComplexMatrix::zeros(dim);
    for wi in w {
        let psi = DensityMatrix::pure(&gaussian_amplitudes(rng, dim)).unwrap();
        m = &m + &psi.matrix().scale_real(wi / total);
    }
    DensityMatrix::new(m).unwrap()
}

pub fn random_unitary(rng: &mut impl Rng) -> ComplexMatrix {
    let v = gaussian_amplitudes(rng, 2);
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let (a, b) = (v[0] / n, v[1] / n);
    let phase = Complex64::from_polar(1.0, rng.random::<f64>() * std::f64::consts::TAU);
    ComplexMatrix::from_rows(&[vec![a * phase, -b.conj() * phase], vec![b * phase, a.conj() * phase]]).unwrap()
}

/// Random mixture of unitaries, as Kraus operators `√p_i U_i`.
pub fn random_kraus_channel(rng: &mut impl Rng) -> QubitChannel {
    let k = rng.random_range(1..=3);
    let w: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    let ops = w
        .iter()
        .map(|wi| random_unitary(rng).scale_real((wi / total).sqrt()))
        .collect();
    QubitChannel::kraus(ops).unwrap()
}

pub fn random_channel(rng: &mut impl Rng) -> QubitChannel {
    match rng.random_range(0..3) {
        0 => QubitChannel::amplitude_damping(rng.random::<f64>()).unwrap(),
        1 => QubitChannel::depolarizing(rng.random::<f64>()).unwrap(),
        _ => random_kraus_channel(rng),
    }
}
