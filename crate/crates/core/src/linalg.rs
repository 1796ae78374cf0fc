//! Small dense complex matrices, Hermitian eigenvalues and entropies.
//!
//! Everything here works on matrices of dimension at most 16, which covers
//! states on up to four qubits. Dimension 2 takes a closed-form path; larger
//! Hermitian matrices go through cyclic Jacobi rotations.

use std::fmt;
use std::ops::{Add, Mul};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 16;

/// Entrywise tolerance for Hermiticity and unit trace of states.
pub const STATE_TOL: f64 = 1e-10;

const JACOBI_OFF_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            let row: Vec<String> = (0..self.dim)
                .map(|c| {
                    let z = self[(r, c)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn new(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::validation(format!(
                "matrix dimension {dim} outside 1..={MAX_DIM}"
            )));
        }
        if data.len() != dim * dim {
            return Err(Error::validation(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("matrix has non-finite entries"));
        }
        Ok(Self { dim, data })
    }

    /// Builds a matrix from rows of complex entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::validation("matrix is not square"));
        }
        Self::new(dim, rows.iter().flatten().copied().collect())
    }

    pub fn from_real(dim: usize, data: &[f64]) -> Result<Self> {
        Self::new(dim, data.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        let mut data = vec![ZERO; dim * dim];
        for (i, &v) in values.iter().enumerate() {
            data[i * dim + i] = Complex64::new(v, 0.0);
        }
        Self::new(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let n = self.dim;
        let mut out = Self::zeros(n);
        for r in 0..n {
            for c in 0..n {
                out[(c, r)] = self[(r, c)].conj();
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.dim, other.dim);
        let dim = n * m;
        let mut out = Self::zeros(dim);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                if a == ZERO {
                    continue;
                }
                for k in 0..m {
                    for l in 0..m {
                        out[(i * m + k, j * m + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    /// `K ρ K†`.
    pub fn sandwich(&self, rho: &Self) -> Self {
        &(self * rho) * &self.adjoint()
    }

    /// Largest entrywise deviation from Hermiticity.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.dim;
        let mut worst: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                worst = worst.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.dim + c]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in product");
        let n = self.dim;
        let mut out = ComplexMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        out
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in sum");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

/// Pauli X, Y, Z.
pub fn paulis() -> [ComplexMatrix; 3] {
    let i = Complex64::new(0.0, 1.0);
    [
        ComplexMatrix {
            dim: 2,
            data: vec![ZERO, ONE, ONE, ZERO],
        },
        ComplexMatrix {
            dim: 2,
            data: vec![ZERO, -i, i, ZERO],
        },
        ComplexMatrix {
            dim: 2,
            data: vec![ONE, ZERO, ZERO, -ONE],
        },
    ]
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > STATE_TOL {
            return Err(Error::validation(format!(
                "state is not Hermitian (defect {defect:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::validation(format!("state trace {tr} is not 1")));
        }
        let min_eig = herm_eigenvalues(&matrix)?
            .last()
            .copied()
            .unwrap_or(0.0);
        if min_eig < -STATE_TOL {
            return Err(Error::validation(format!(
                "state has negative eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self { matrix })
    }

    /// Qubit state `[[a, b], [conj(b), 1 - a]]`.
    pub fn qubit(a: f64, b: Complex64) -> Result<Self> {
        Self::new(ComplexMatrix::new(
            2,
            vec![Complex64::new(a, 0.0), b, b.conj(), Complex64::new(1.0 - a, 0.0)],
        )?)
    }

    /// Pure state `|ψ⟩⟨ψ|` from an amplitude vector, normalised on the way in.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm: f64 = amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            return Err(Error::validation("zero state vector"));
        }
        let n = amplitudes.len();
        let mut m = ComplexMatrix::zeros(n);
        for r in 0..n {
            for c in 0..n {
                m[(r, c)] = amplitudes[r] * amplitudes[c].conj() / (norm * norm);
            }
        }
        Self::new(m)
    }

    /// Qubit pure state on the Bloch sphere at polar angle `theta`, azimuth `phi`.
    pub fn bloch_pure(theta: f64, phi: f64) -> Self {
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let amps = [Complex64::new(c, 0.0), Complex64::from_polar(s, phi)];
        Self::pure(&amps).expect("unit vector")
    }

    pub fn maximally_mixed(dim: usize) -> Result<Self> {
        Self::new(ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64))
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim
    }

    /// `ρ ⊗ σ`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        Self::new(self.matrix.kron(&other.matrix))
    }

    /// Bloch vector `(tr ρX, tr ρY, tr ρZ)` of a qubit state.
    pub fn bloch_vector(&self) -> Result<[f64; 3]> {
        if self.dim() != 2 {
            return Err(Error::validation("Bloch vector needs a qubit state"));
        }
        let m = &self.matrix;
        let off = m[(0, 1)];
        Ok([2.0 * off.re, -2.0 * off.im, (m[(0, 0)] - m[(1, 1)]).re])
    }

    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }
}

/// Eigenvalues of a Hermitian matrix, sorted descending.
pub fn herm_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    let defect = m.hermitian_defect();
    if defect > STATE_TOL {
        return Err(Error::validation(format!(
            "matrix is not Hermitian (defect {defect:e})"
        )));
    }
    let mut vals = match m.dim {
        1 => vec![m[(0, 0)].re],
        2 => {
            let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
            let b = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
            if b == ZERO {
                return Ok(if a >= d { vec![a, d] } else { vec![d, a] });
            }
            let mean = 0.5 * (a + d);
            let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
            vec![mean + radius, mean - radius]
        }
        _ => jacobi_eigenvalues(m),
    };
    vals.sort_by(|x, y| y.total_cmp(x));
    Ok(vals)
}

/// Cyclic Jacobi eigenvalue iteration for a Hermitian matrix of any size.
///
/// Input is assumed Hermitian; only the upper triangle drives the rotations.
/// Values are returned in diagonal order, unsorted.
pub fn jacobi_eigenvalues(m: &ComplexMatrix) -> Vec<f64> {
    let n = m.dim;
    let mut a = m.clone();
    // symmetrise so roundoff in the input cannot break the rotation algebra
    for r in 0..n {
        a[(r, r)] = Complex64::new(a[(r, r)].re, 0.0);
        for c in (r + 1)..n {
            let v = 0.5 * (a[(r, c)] + a[(c, r)].conj());
            a[(r, c)] = v;
            a[(c, r)] = v.conj();
        }
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|r| ((r + 1)..n).map(move |c| (r, c)))
            .map(|(r, c)| 2.0 * a[(r, c)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off < JACOBI_OFF_TOL {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, p, q);
            }
        }
    }
    (0..n).map(|i| a[(i, i)].re).collect()
}

/// One Jacobi rotation annihilating entry `(p, q)`.
///
/// The rotation is `G = D R` with `D = diag(1, e^{-iφ})` stripping the phase of
/// `a_pq` and `R` the real symmetric Jacobi rotation; `A ← G† A G`.
fn rotate(a: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let phase = apq / mag; // e^{iφ}
    let (app, aqq) = (a[(p, p)].re, a[(q, q)].re);
    let theta = (aqq - app) / (2.0 * mag);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let t = if theta == 0.0 { 1.0 } else { t };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    // columns of G restricted to (p, q)
    let g_pp = Complex64::new(c, 0.0);
    let g_pq = Complex64::new(s, 0.0);
    let g_qp = -phase.conj() * s;
    let g_qq = phase.conj() * c;
    let n = a.dim;
    // A ← A G
    for k in 0..n {
        let (akp, akq) = (a[(k, p)], a[(k, q)]);
        a[(k, p)] = akp * g_pp + akq * g_qp;
        a[(k, q)] = akp * g_pq + akq * g_qq;
    }
    // A ← G† A
    for k in 0..n {
        let (apk, aqk) = (a[(p, k)], a[(q, k)]);
        a[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
        a[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
}

fn entropy_term(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        let p = p.min(1.0);
        -p * p.log2()
    }
}

/// Von Neumann entropy in bits.
pub fn von_neumann_entropy(rho: &DensityMatrix) -> Result<f64> {
    Ok(entropy_of_spectrum(&herm_eigenvalues(rho.matrix())?))
}

/// `-Σ λ log2 λ` with nonpositive entries contributing zero.
pub fn entropy_of_spectrum(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|&l| entropy_term(l)).sum()
}

/// Binary entropy in bits. Exactly symmetric under `x ↦ 1 - x`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(-1e-12..=1.0 + 1e-12).contains(&x) {
        return Err(Error::Domain(format!("binary entropy argument {x} outside [0, 1]")));
    }
    Ok(binary_entropy_unchecked(x.clamp(0.0, 1.0)))
}

pub(crate) fn binary_entropy_unchecked(x: f64) -> f64 {
    // canonicalise to the larger half so h(x) and h(1 - x) share one evaluation path
    let hi = if x >= 0.5 { x } else { 1.0 - x };
    let lo = 1.0 - hi;
    entropy_term(lo) + entropy_term(hi)
}

/// Entropy of a qubit state with Bloch radius `r`.
pub(crate) fn qubit_entropy_from_radius(r: f64) -> f64 {
    binary_entropy_unchecked(0.5 * (1.0 + r.min(1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_eigenvalues() {
        assert_eq!(herm_eigenvalues(&ComplexMatrix::identity(2)).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_eigenvalues_sorted() {
        let m = ComplexMatrix::diag(&[0.3, 0.7]).unwrap();
        assert_eq!(herm_eigenvalues(&m).unwrap(), vec![0.7, 0.3]);
    }

    #[test]
    fn amplitude_damped_mirror_state_eigenvalues() {
        // γ = 0.5, a = 0.5, b = 0.5: output [[0.75, 0.5/√2], [0.5/√2, 0.25]]
        let off = 0.5 * 0.5f64.sqrt();
        let m = ComplexMatrix::new(2, vec![c(0.75, 0.0), c(off, 0.0), c(off, 0.0), c(0.25, 0.0)])
            .unwrap();
        let got = herm_eigenvalues(&m).unwrap();
        // independent route: roots of λ² - tr λ + det
        let (tr, det) = (1.0, 0.75 * 0.25 - off * off);
        let disc = (tr * tr - 4.0 * det).sqrt();
        let expected = [0.5 * (tr + disc), 0.5 * (tr - disc)];
        let closed = [0.5 * (1.0 + 0.75f64.sqrt()), 0.5 * (1.0 - 0.75f64.sqrt())];
        for i in 0..2 {
            assert!((got[i] - expected[i]).abs() < 1e-14);
            assert!((got[i] - closed[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = ComplexMatrix::new(2, vec![ONE, c(0.5, 0.0), ZERO, ONE]).unwrap();
        assert!(matches!(herm_eigenvalues(&m), Err(Error::Validation(_))));
    }

    #[test]
    fn jacobi_matches_closed_form_on_qubit() {
        let m = ComplexMatrix::new(2, vec![c(0.6, 0.0), c(0.1, -0.2), c(0.1, 0.2), c(0.4, 0.0)])
            .unwrap();
        let mut j = jacobi_eigenvalues(&m);
        j.sort_by(|x, y| y.total_cmp(x));
        let closed = herm_eigenvalues(&m).unwrap();
        for (a, b) in j.iter().zip(&closed) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn jacobi_on_known_spectrum() {
        // U diag(0.1, 0.2, 0.3, 0.4) U† with U = H ⊗ S-like unitary
        let h = ComplexMatrix::from_real(2, &[1.0, 1.0, 1.0, -1.0])
            .unwrap()
            .scale_real(1.0 / 2f64.sqrt());
        let s = ComplexMatrix::new(2, vec![ONE, ZERO, ZERO, c(0.0, 1.0)]).unwrap();
        let u = &h.kron(&s) * &s.kron(&h);
        let d = ComplexMatrix::diag(&[0.1, 0.2, 0.3, 0.4]).unwrap();
        let m = &(&u * &d) * &u.adjoint();
        let vals = herm_eigenvalues(&m).unwrap();
        for (v, e) in vals.iter().zip([0.4, 0.3, 0.2, 0.1]) {
            assert!((v - e).abs() < 1e-12, "{vals:?}");
        }
    }

    #[test]
    fn entropy_examples() {
        let mixed = DensityMatrix::maximally_mixed(2).unwrap();
        assert!((von_neumann_entropy(&mixed).unwrap() - 1.0).abs() < 1e-15);
        let pure = DensityMatrix::bloch_pure(1.1, 0.4);
        assert!(von_neumann_entropy(&pure).unwrap().abs() < 1e-12);
        let rho = DensityMatrix::new(ComplexMatrix::diag(&[0.9330, 0.0670]).unwrap()).unwrap();
        // high-precision value of -0.933 log2 0.933 - 0.067 log2 0.067
        assert!((von_neumann_entropy(&rho).unwrap() - 0.354_627_167_196_725).abs() < 1e-13);
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.1).unwrap() - 0.468_995_593_589_281_2).abs() < 1e-14);
        assert!(matches!(binary_entropy(1.1), Err(Error::Domain(_))));
        assert!(matches!(binary_entropy(-0.01), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_states_rejected() {
        let bad_trace = ComplexMatrix::diag(&[0.5, 0.6]).unwrap();
        assert!(DensityMatrix::new(bad_trace).is_err());
        let negative = ComplexMatrix::diag(&[1.2, -0.2]).unwrap();
        assert!(DensityMatrix::new(negative).is_err());
        assert!(ComplexMatrix::new(17, vec![ZERO; 289]).is_err());
    }

    #[test]
    fn bloch_vector_of_plus_state() {
        let plus = DensityMatrix::bloch_pure(std::f64::consts::FRAC_PI_2, 0.0);
        let r = plus.bloch_vector().unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && r[1].abs() < 1e-15 && r[2].abs() < 1e-15);
    }
}
