//! Qubit channels and memory channels built from them.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{paulis, ComplexMatrix, DensityMatrix};

/// Completeness tolerance `‖Σ K†K - I‖∞`.
pub const COMPLETENESS_TOL: f64 = 1e-10;
/// Probability-vector and row-sum tolerance.
pub const PROB_TOL: f64 = 1e-10;
/// Stationarity tolerance `‖λQ - λ‖∞`.
pub const STATIONARY_TOL: f64 = 1e-8;
/// Largest number of qubits for n-fold application.
pub const MAX_QUBITS: usize = 4;

/// A completely positive trace-preserving map on one qubit.
#[derive(Clone, Debug, PartialEq)]
pub enum QubitChannel {
    AmplitudeDamping { gamma: f64 },
    /// `ρ ↦ (1 - p) ρ + p I/2`.
    Depolarizing { p: f64 },
    Kraus(Vec<ComplexMatrix>),
}

fn check_unit(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::validation(format!("{name} = {x} outside [0, 1]")));
    }
    Ok(())
}

impl QubitChannel {
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        check_unit("gamma", gamma)?;
        Ok(Self::AmplitudeDamping { gamma })
    }

    pub fn depolarizing(p: f64) -> Result<Self> {
        check_unit("p", p)?;
        Ok(Self::Depolarizing { p })
    }

    pub fn kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::validation("empty Kraus list"));
        }
        if ops.iter().any(|k| k.dim() != 2) {
            return Err(Error::validation("Kraus operators must be 2x2"));
        }
        let defect = completeness_defect(&ops);
        if defect > COMPLETENESS_TOL {
            return Err(Error::validation(format!(
                "Kraus operators are not trace preserving (defect {defect:e})"
            )));
        }
        Ok(Self::Kraus(ops))
    }

    /// Damping parameter when this is an amplitude-damping channel.
    pub fn gamma(&self) -> Option<f64> {
        match self {
            Self::AmplitudeDamping { gamma } => Some(*gamma),
            _ => None,
        }
    }

    pub fn kraus_operators(&self) -> Result<Vec<ComplexMatrix>> {
        let ops = match self {
            Self::AmplitudeDamping { gamma } => vec![
                ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, (1.0 - gamma).sqrt()])?,
                ComplexMatrix::from_real(2, &[0.0, gamma.sqrt(), 0.0, 0.0])?,
            ],
            Self::Depolarizing { p } => {
                let mut ops = vec![ComplexMatrix::identity(2).scale_real((1.0 - 0.75 * p).sqrt())];
                if *p > 0.0 {
                    let w = (0.25 * p).sqrt();
                    ops.extend(paulis().iter().map(|s| s.scale_real(w)));
                }
                ops
            }
            Self::Kraus(ops) => ops.clone(),
        };
        let defect = completeness_defect(&ops);
        if defect > COMPLETENESS_TOL {
            return Err(Error::validation(format!(
                "Kraus operators are not trace preserving (defect {defect:e})"
            )));
        }
        Ok(ops)
    }

    /// Applies the channel to a qubit state.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != 2 {
            return Err(Error::validation(format!(
                "qubit channel applied to a {}-dimensional state",
                rho.dim()
            )));
        }
        let m = rho.matrix();
        let out = match self {
            Self::AmplitudeDamping { gamma } => {
                let a = m[(0, 0)].re;
                let b = m[(0, 1)];
                let shrink = (1.0 - gamma).sqrt();
                ComplexMatrix::new(
                    2,
                    vec![
                        Complex64::new(a + (1.0 - a) * gamma, 0.0),
                        b * shrink,
                        b.conj() * shrink,
                        Complex64::new((1.0 - a) * (1.0 - gamma), 0.0),
                    ],
                )?
            }
            Self::Depolarizing { p } => {
                let mixed = ComplexMatrix::identity(2).scale_real(0.5 * p);
                &m.scale_real(1.0 - p) + &mixed
            }
            Self::Kraus(ops) => kraus_sum(ops, m),
        };
        Ok(DensityMatrix::from_trusted(out))
    }
}

/// Free-function form of [`QubitChannel::apply`].
pub fn apply_qubit_channel(ch: &QubitChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    ch.apply(rho)
}

pub fn kraus_operators(ch: &QubitChannel) -> Result<Vec<ComplexMatrix>> {
    ch.kraus_operators()
}

fn kraus_sum(ops: &[ComplexMatrix], rho: &ComplexMatrix) -> ComplexMatrix {
    ops.iter()
        .map(|k| k.sandwich(rho))
        .reduce(|acc, x| &acc + &x)
        .unwrap_or_else(|| ComplexMatrix::zeros(rho.dim()))
}

fn completeness_defect(ops: &[ComplexMatrix]) -> f64 {
    let dim = ops.first().map_or(2, ComplexMatrix::dim);
    let sum = ops
        .iter()
        .map(|k| &k.adjoint() * k)
        .fold(ComplexMatrix::zeros(dim), |acc, x| &acc + &x);
    sum.max_abs_diff(&ComplexMatrix::identity(dim))
}

/// How the branch applied at each channel use is selected.
#[derive(Clone, Debug, PartialEq)]
pub enum MemoryLaw {
    /// Branches applied cyclically from a uniformly random starting offset.
    Periodic,
    /// One branch drawn with probability `q[i]` and used for every letter.
    Random { q: Vec<f64> },
    /// Markov chain with `transition[i][j]` = P(next = j | current = i).
    Markov {
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct MemoryChannel {
    branches: Vec<QubitChannel>,
    memory: MemoryLaw,
}

fn check_distribution(name: &str, v: &[f64]) -> Result<()> {
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::validation(format!("{name} has negative or non-finite entries")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::validation(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

impl MemoryChannel {
    pub fn new(branches: Vec<QubitChannel>, memory: MemoryLaw) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::validation("memory channel needs at least one branch"));
        }
        let m = branches.len();
        match &memory {
            MemoryLaw::Periodic => {}
            MemoryLaw::Random { q } => {
                if q.len() != m {
                    return Err(Error::validation(format!(
                        "q has {} entries for {m} branches",
                        q.len()
                    )));
                }
                check_distribution("q", q)?;
            }
            MemoryLaw::Markov {
                transition,
                stationary,
            } => {
                if transition.len() != m || transition.iter().any(|row| row.len() != m) {
                    return Err(Error::validation(format!(
                        "transition matrix must be {m}x{m}"
                    )));
                }
                if stationary.len() != m {
                    return Err(Error::validation(format!(
                        "lambda has {} entries for {m} branches",
                        stationary.len()
                    )));
                }
                for (i, row) in transition.iter().enumerate() {
                    check_distribution(&format!("row {i} of Q"), row)?;
                }
                check_distribution("lambda", stationary)?;
                for j in 0..m {
                    let flow: f64 = (0..m).map(|i| stationary[i] * transition[i][j]).sum();
                    if (flow - stationary[j]).abs() > STATIONARY_TOL {
                        return Err(Error::validation("lambda is not invariant under Q"));
                    }
                }
            }
        }
        Ok(Self { branches, memory })
    }

    pub fn periodic(branches: Vec<QubitChannel>) -> Result<Self> {
        Self::new(branches, MemoryLaw::Periodic)
    }

    pub fn random(branches: Vec<QubitChannel>, q: Vec<f64>) -> Result<Self> {
        Self::new(branches, MemoryLaw::Random { q })
    }

    pub fn markov(
        branches: Vec<QubitChannel>,
        transition: Vec<Vec<f64>>,
        stationary: Vec<f64>,
    ) -> Result<Self> {
        Self::new(
            branches,
            MemoryLaw::Markov {
                transition,
                stationary,
            },
        )
    }

    pub fn branches(&self) -> &[QubitChannel] {
        &self.branches
    }

    pub fn memory(&self) -> &MemoryLaw {
        &self.memory
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Probability with which each branch is selected for a message.
    ///
    /// Markov memory returns the stationary distribution of the initial branch.
    pub fn branch_probabilities(&self) -> Vec<f64> {
        match &self.memory {
            MemoryLaw::Periodic => vec![1.0 / self.len() as f64; self.len()],
            MemoryLaw::Random { q } => q.clone(),
            MemoryLaw::Markov { stationary, .. } => stationary.clone(),
        }
    }

    /// Every branch sequence of length `n` with nonzero weight, in lexicographic
    /// order of the starting branch.
    pub fn branch_sequences(&self, n: usize) -> Vec<(f64, Vec<usize>)> {
        let l = self.len();
        match &self.memory {
            MemoryLaw::Periodic => (0..l)
                .map(|i| (1.0 / l as f64, (0..n).map(|k| (i + k) % l).collect()))
                .collect(),
            MemoryLaw::Random { q } => q
                .iter()
                .enumerate()
                .filter(|(_, &w)| w > 0.0)
                .map(|(i, &w)| (w, vec![i; n]))
                .collect(),
            MemoryLaw::Markov {
                transition,
                stationary,
            } => {
                let mut seqs: Vec<(f64, Vec<usize>)> = stationary
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(i, &w)| (w, vec![i]))
                    .collect();
                for _ in 1..n {
                    seqs = seqs
                        .into_iter()
                        .flat_map(|(w, seq)| {
                            let last = *seq.last().expect("nonempty");
                            transition[last]
                                .iter()
                                .enumerate()
                                .filter(|(_, &t)| t > 0.0)
                                .map(move |(j, &t)| {
                                    let mut next = seq.clone();
                                    next.push(j);
                                    (w * t, next)
                                })
                                .collect::<Vec<_>>()
                        })
                        .collect();
                }
                seqs
            }
        }
    }

    /// Applies the memory channel to an `n`-qubit state.
    pub fn apply_n(&self, rho: &DensityMatrix, n: usize) -> Result<DensityMatrix> {
        check_n(rho, n)?;
        let kraus: Vec<Vec<ComplexMatrix>> = self
            .branches
            .iter()
            .map(QubitChannel::kraus_operators)
            .collect::<Result<_>>()?;
        let mut out = ComplexMatrix::zeros(rho.dim());
        for (w, seq) in self.branch_sequences(n) {
            let term = apply_product_kraus(&kraus, &seq, rho.matrix());
            out = &out + &term.scale_real(w);
        }
        Ok(DensityMatrix::from_trusted(out))
    }
}

/// Free-function form of [`MemoryChannel::apply_n`].
pub fn apply_memory_channel_n(
    mc: &MemoryChannel,
    rho: &DensityMatrix,
    n: usize,
) -> Result<DensityMatrix> {
    mc.apply_n(rho, n)
}

fn check_n(rho: &DensityMatrix, n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::validation(format!("n = {n} outside 1..={MAX_QUBITS}")));
    }
    if rho.dim() != 1 << n {
        return Err(Error::validation(format!(
            "state of dimension {} is not a {n}-qubit state",
            rho.dim()
        )));
    }
    Ok(())
}

/// `(Φ_{seq[0]} ⊗ … ⊗ Φ_{seq[n-1]})(ρ)` for the given branch sequence.
pub fn apply_branch_sequence(
    branches: &[QubitChannel],
    seq: &[usize],
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    check_n(rho, seq.len())?;
    if seq.iter().any(|&i| i >= branches.len()) {
        return Err(Error::validation("branch index out of range"));
    }
    let kraus: Vec<Vec<ComplexMatrix>> = branches
        .iter()
        .map(QubitChannel::kraus_operators)
        .collect::<Result<_>>()?;
    Ok(DensityMatrix::from_trusted(apply_product_kraus(
        &kraus,
        seq,
        rho.matrix(),
    )))
}

fn apply_product_kraus(kraus: &[Vec<ComplexMatrix>], seq: &[usize], rho: &ComplexMatrix) -> ComplexMatrix {
    let n = seq.len();
    let mut state = rho.clone();
    for (qubit, &branch) in seq.iter().enumerate() {
        let left = ComplexMatrix::identity(1 << qubit);
        let right = ComplexMatrix::identity(1 << (n - qubit - 1));
        let embedded: Vec<ComplexMatrix> = kraus[branch]
            .iter()
            .map(|k| left.kron(k).kron(&right))
            .collect();
        state = kraus_sum(&embedded, &state);
    }
    state
}

/// Cyclic-shift transition matrix `θ_{i,j} = [j = i + 1 mod L]`.
pub fn cyclic_shift(l: usize) -> Vec<Vec<f64>> {
    (0..l)
        .map(|i| (0..l).map(|j| if j == (i + 1) % l { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn identity_transition(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|i| (0..m).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}
