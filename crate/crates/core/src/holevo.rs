//! Holevo quantity of qubit ensembles. Amplitude damping driven by a
//! mirror-image pair of pure states has closed forms.

use num_complex::Complex64;

use crate::channels::QubitChannel;
use crate::error::{Error, Result};
use crate::linalg::{
    binary_entropy_unchecked, von_neumann_entropy, ComplexMatrix, DensityMatrix, STATE_TOL,
};

/// Weighted list of qubit input states.
#[derive(Clone, Debug)]
pub struct Ensemble {
    items: Vec<(f64, DensityMatrix)>,
}

impl Ensemble {
    pub fn new(items: Vec<(f64, DensityMatrix)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::validation("empty ensemble"));
        }
        if items.iter().any(|(p, s)| !(*p >= 0.0) || s.dim() != 2) {
            return Err(Error::validation(
                "ensemble needs nonnegative weights on qubit states",
            ));
        }
        let total: f64 = items.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > STATE_TOL {
            return Err(Error::validation(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { items })
    }

    pub fn single(state: DensityMatrix) -> Result<Self> {
        Self::new(vec![(1.0, state)])
    }

    pub fn items(&self) -> &[(f64, DensityMatrix)] {
        &self.items
    }
}

/// Two pure states `[[a, ±b], [±b, 1 - a]]`, `b = √(a(1 - a))`, weighted ½ each.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MirrorPair {
    a: f64,
}

impl MirrorPair {
    pub fn new(a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!("mirror-pair parameter a = {a} outside [0, 1]")));
        }
        Ok(Self { a })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn off_diagonal(&self) -> f64 {
        (self.a * (1.0 - self.a)).sqrt()
    }

    /// The two states, `+b` first.
    pub fn states(&self) -> [DensityMatrix; 2] {
        let b = self.off_diagonal();
        let make = |sign: f64| {
            DensityMatrix::qubit(self.a, Complex64::new(sign * b, 0.0)).expect("pure qubit state")
        };
        [make(1.0), make(-1.0)]
    }

    pub fn ensemble(&self) -> Ensemble {
        let [plus, minus] = self.states();
        Ensemble {
            items: vec![(0.5, plus), (0.5, minus)],
        }
    }
}

/// `Σ_j p_j Φ(ρ_j)`.
pub fn average_output(ch: &QubitChannel, e: &Ensemble) -> Result<DensityMatrix> {
    let mut acc = ComplexMatrix::zeros(2);
    for (p, rho) in e.items() {
        acc = &acc + &ch.apply(rho)?.matrix().scale_real(*p);
    }
    DensityMatrix::new(acc)
}

/// `S(Σ p_j Φ(ρ_j)) - Σ p_j S(Φ(ρ_j))` in bits.
pub fn holevo_quantity(ch: &QubitChannel, e: &Ensemble) -> Result<f64> {
    let total = von_neumann_entropy(&average_output(ch, e)?)?;
    let mut conditional = 0.0;
    for (p, rho) in e.items() {
        if *p > 0.0 {
            conditional += p * von_neumann_entropy(&ch.apply(rho)?)?;
        }
    }
    Ok((total - conditional).max(0.0))
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

/// `4γ(1-γ)(1-a)²`, the quantity under the square root in the output spectrum.
fn spectral_gap_term(gamma: f64, a: f64) -> f64 {
    4.0 * gamma * (1.0 - gamma) * (1.0 - a) * (1.0 - a)
}

/// Eigenvalues `½(1 ± √(1 - 4γ(1-γ)(1-a)²))` of an amplitude-damped mirror state,
/// larger first.
pub fn mirror_output_eigenvalues(gamma: f64, a: f64) -> Result<[f64; 2]> {
    check_unit("gamma", gamma)?;
    check_unit("a", a)?;
    let t = spectral_gap_term(gamma, a);
    let x = (1.0 - t).max(0.0).sqrt();
    // ½(1 - x) written as t / (2(1 + x)) to keep precision when t is tiny
    let small = 0.5 * t / (1.0 + x);
    Ok([1.0 - small, small])
}

/// Holevo quantity of the amplitude-damping channel for the mirror pair at `a`.
pub fn chi_ad_mirror(gamma: f64, a: f64) -> Result<f64> {
    let [_, small] = mirror_output_eigenvalues(gamma, a)?;
    let top = a + (1.0 - a) * gamma;
    Ok(binary_entropy_unchecked(top.clamp(0.0, 1.0)) - binary_entropy_unchecked(small))
}

/// `dχ/da` for the amplitude-damping mirror pair, in nats.
pub fn dchi_da_ad(gamma: f64, a: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("gamma = {gamma} outside [0, 1)")));
    }
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::Singular(format!("derivative undefined at a = {a}")));
    }
    if gamma == 0.0 {
        return Ok(((1.0 - a) / a).ln());
    }
    let t = spectral_gap_term(gamma, a);
    let x = (1.0 - t).max(0.0).sqrt();
    if x == 0.0 {
        return Err(Error::Singular(format!(
            "degenerate output spectrum at gamma = {gamma}, a = {a}"
        )));
    }
    let one_minus_x = t / (1.0 + x);
    let population = (1.0 - a) * (1.0 - gamma) / (a + (1.0 - a) * gamma);
    let first = (1.0 - gamma) * population.ln();
    let second = 2.0 * gamma * (1.0 - gamma) * (1.0 - a) / x * ((1.0 + x) / one_minus_x).ln();
    Ok(first + second)
}
