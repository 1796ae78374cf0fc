//! Product-state capacities of periodic and random memory channels, and the
//! scales of capacities indexed by how many branches a code must serve.
//!
//! For a periodic channel with branches `Φ_0 … Φ_{L-1}`:
//!
//! * `C_p   = (1/L) sup_P Σ_i I(P; Φ_i)`
//! * `C̄_p  = (1/L) Σ_i sup_P I(P; Φ_i)`
//! * `C_p^(r) = 1/(rL) max_{i_1<…<i_r} Σ_k sup_P Σ_m I(P; Φ_{i_m+k})`
//!
//! with `C_p^(1) = C̄_p` and `C_p^(L) = C_p`. For a random channel with branch
//! probabilities `q_i` and a branch set `Δ`, `C_p^Δ = sup_P min_{i∈Δ} I(P; Φ_i)`
//! and `C̄_p^Δ = max_{i∈Δ} sup_P I(P; Φ_i)`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Mutex;

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::channels::QubitChannel;
use crate::error::{Error, Result};
use crate::optim::{
    maximize_chi, maximize_chi_min, maximize_chi_sum, GenericSolver, DEFAULT_TOL,
};
use crate::report::{fmt_sig, fmt_subset};

/// Largest branch count for exhaustive subset enumeration.
pub const MAX_BRANCHES: usize = 12;

/// Default sphere subdivisions for branches without a closed form.
pub const DEFAULT_ENSEMBLE_GRID: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BranchSupremum {
    /// Maximising mirror-pair parameter; absent for generic branches.
    #[serde(with = "crate::report::sig_opt")]
    pub a_max: Option<f64>,
    #[serde(with = "crate::report::sig")]
    pub chi_star: f64,
}

/// Suprema of Holevo-quantity combinations over input ensembles.
pub trait BranchSolver: Send + Sync {
    fn branch_count(&self) -> usize;

    /// `sup_P Σ_{i ∈ branches} I(P; Φ_i)`; indices may repeat.
    fn sup_sum(&self, branches: &[usize]) -> Result<f64>;

    /// `sup_P min_{i ∈ branches} I(P; Φ_i)`.
    fn sup_min(&self, branches: &[usize]) -> Result<f64>;

    fn supremum(&self, branch: usize) -> Result<BranchSupremum>;
}

/// Closed-form mirror-pair solver for amplitude-damping branches.
#[derive(Clone, Debug)]
pub struct AmplitudeDampingBranches {
    gammas: Vec<f64>,
    tol: f64,
}

impl AmplitudeDampingBranches {
    pub fn new(gammas: &[f64], tol: f64) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::validation("no branches given"));
        }
        if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
            return Err(Error::validation(format!("gamma = {g} outside [0, 1]")));
        }
        Ok(Self {
            gammas: gammas.to_vec(),
            tol,
        })
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    fn select(&self, branches: &[usize]) -> Result<Vec<f64>> {
        if branches.is_empty() {
            return Err(Error::validation("empty branch list"));
        }
        branches
            .iter()
            .map(|&i| {
                self.gammas
                    .get(i)
                    .copied()
                    .ok_or_else(|| Error::validation(format!("branch {i} out of range")))
            })
            .collect()
    }
}

impl BranchSolver for AmplitudeDampingBranches {
    fn branch_count(&self) -> usize {
        self.gammas.len()
    }

    fn sup_sum(&self, branches: &[usize]) -> Result<f64> {
        let gammas = self.select(branches)?;
        let weights = vec![1.0; gammas.len()];
        Ok(maximize_chi_sum(&gammas, &weights, self.tol)?.value)
    }

    fn sup_min(&self, branches: &[usize]) -> Result<f64> {
        Ok(maximize_chi_min(&self.select(branches)?, self.tol)?.value)
    }

    fn supremum(&self, branch: usize) -> Result<BranchSupremum> {
        let gamma = self.select(&[branch])?[0];
        let r = maximize_chi(gamma, self.tol)?;
        Ok(BranchSupremum {
            a_max: Some(r.argmax),
            chi_star: r.value,
        })
    }
}

/// Grid-ensemble solver for arbitrary qubit branches.
#[derive(Clone, Debug)]
pub struct GenericBranches {
    solver: GenericSolver,
}

impl GenericBranches {
    pub fn new(channels: &[QubitChannel], grid: usize) -> Result<Self> {
        Ok(Self {
            solver: GenericSolver::new(channels, grid)?,
        })
    }
}

impl BranchSolver for GenericBranches {
    fn branch_count(&self) -> usize {
        self.solver.channel_count()
    }

    fn sup_sum(&self, branches: &[usize]) -> Result<f64> {
        let weights = vec![1.0; branches.len()];
        Ok(self.solver.sup_weighted(branches, &weights)?.value)
    }

    fn sup_min(&self, branches: &[usize]) -> Result<f64> {
        Ok(self.solver.sup_min(branches)?.value)
    }

    fn supremum(&self, branch: usize) -> Result<BranchSupremum> {
        Ok(BranchSupremum {
            a_max: None,
            chi_star: self.solver.sup_weighted(&[branch], &[1.0])?.value,
        })
    }
}

/// Closed forms when every branch is amplitude damping, the grid ensemble
/// search otherwise.
pub fn branch_solver(channels: &[QubitChannel], tol: f64, grid: usize) -> Result<Box<dyn BranchSolver>> {
    let gammas: Option<Vec<f64>> = channels.iter().map(QubitChannel::gamma).collect();
    Ok(match gammas {
        Some(g) => Box::new(AmplitudeDampingBranches::new(&g, tol)?),
        None => Box::new(GenericBranches::new(channels, grid)?),
    })
}

fn check_subset(subset: &[usize], count: usize) -> Result<()> {
    if subset.is_empty() {
        return Err(Error::validation("empty branch subset"));
    }
    if subset.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::validation("branch subset must be strictly increasing"));
    }
    if subset.iter().any(|&i| i >= count) {
        return Err(Error::validation(format!(
            "branch subset {subset:?} out of range for {count} branches"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleEntry {
    #[serde(with = "crate::report::sig")]
    pub value: f64,
    pub best_subset: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    #[serde(with = "crate::report::sig")]
    pub cp: f64,
    #[serde(with = "crate::report::sig")]
    pub cbar: f64,
    pub scale: BTreeMap<usize, ScaleEntry>,
    pub per_branch_suprema: Vec<BranchSupremum>,
}

impl CapacityReport {
    pub fn branch_count(&self) -> usize {
        self.per_branch_suprema.len()
    }

    /// Columns `r, value_bits, subset, error_threshold`.
    pub fn to_csv(&self) -> String {
        let l = self.branch_count() as f64;
        let mut out = String::from("r,value_bits,subset,error_threshold\n");
        for (r, e) in &self.scale {
            let _ = writeln!(
                out,
                "{r},{},{},{}",
                fmt_sig(e.value),
                fmt_subset(&e.best_subset),
                fmt_sig(1.0 - *r as f64 / l)
            );
        }
        out
    }
}

/// One step of the periodic staircase: rate `value` is achievable for any
/// error bound above `error_threshold = 1 - r/L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseStep {
    pub r: usize,
    #[serde(with = "crate::report::sig")]
    pub value: f64,
    pub subset: Vec<usize>,
    #[serde(with = "crate::report::sig")]
    pub error_threshold: f64,
}

pub fn staircase_csv(steps: &[StaircaseStep]) -> String {
    let mut out = String::from("r,value_bits,subset,error_threshold\n");
    for s in steps {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            s.r,
            fmt_sig(s.value),
            fmt_subset(&s.subset),
            fmt_sig(s.error_threshold)
        );
    }
    out
}

/// Capacity evaluations for a periodic channel, memoised on branch sets.
pub struct PeriodicScales<'a> {
    solver: &'a dyn BranchSolver,
    memo: Mutex<HashMap<Vec<usize>, f64>>,
}

impl<'a> PeriodicScales<'a> {
    pub fn new(solver: &'a dyn BranchSolver) -> Result<Self> {
        let l = solver.branch_count();
        if l == 0 || l > MAX_BRANCHES {
            return Err(Error::validation(format!(
                "periodic channel needs 1..={MAX_BRANCHES} branches, got {l}"
            )));
        }
        Ok(Self {
            solver,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn period(&self) -> usize {
        self.solver.branch_count()
    }

    fn sup_sum(&self, mut branches: Vec<usize>) -> Result<f64> {
        branches.sort_unstable();
        if let Some(v) = self.memo.lock().expect("memo lock").get(&branches) {
            return Ok(*v);
        }
        let v = self.solver.sup_sum(&branches)?;
        self.memo.lock().expect("memo lock").insert(branches, v);
        Ok(v)
    }

    pub fn capacity(&self) -> Result<f64> {
        let l = self.period();
        Ok(self.sup_sum((0..l).collect())? / l as f64)
    }

    pub fn cbar(&self) -> Result<f64> {
        let l = self.period();
        let mut total = 0.0;
        for i in 0..l {
            total += self.solver.supremum(i)?.chi_star;
        }
        Ok(total / l as f64)
    }

    /// `1/(rL) Σ_k sup_P Σ_m I(P; Φ_{i_m+k})` for one offset set.
    pub fn subset_value(&self, subset: &[usize]) -> Result<f64> {
        let l = self.period();
        check_subset(subset, l)?;
        let mut total = 0.0;
        for k in 0..l {
            total += self.sup_sum(subset.iter().map(|i| (i + k) % l).collect())?;
        }
        Ok(total / (subset.len() * l) as f64)
    }

    /// `C_p^(r)` and the first maximising subset in lexicographic order.
    pub fn scale(&self, r: usize) -> Result<ScaleEntry> {
        let l = self.period();
        if r == 0 || r > l {
            return Err(Error::validation(format!("r = {r} outside 1..={l}")));
        }
        let mut best: Option<ScaleEntry> = None;
        for subset in (0..l).combinations(r) {
            let value = self.subset_value(&subset)?;
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(ScaleEntry {
                    value,
                    best_subset: subset,
                });
            }
        }
        Ok(best.expect("at least one subset"))
    }

    pub fn report(&self) -> Result<CapacityReport> {
        let l = self.period();
        let per_branch_suprema = (0..l)
            .map(|i| self.solver.supremum(i))
            .collect::<Result<Vec<_>>>()?;
        let cbar = per_branch_suprema.iter().map(|s| s.chi_star).sum::<f64>() / l as f64;
        let scale = (1..=l)
            .map(|r| Ok((r, self.scale(r)?)))
            .collect::<Result<BTreeMap<_, _>>>()?;
        Ok(CapacityReport {
            cp: self.capacity()?,
            cbar,
            scale,
            per_branch_suprema,
        })
    }

    pub fn staircase(&self) -> Result<Vec<StaircaseStep>> {
        let l = self.period();
        (1..=l)
            .map(|r| {
                let e = self.scale(r)?;
                Ok(StaircaseStep {
                    r,
                    value: e.value,
                    subset: e.best_subset,
                    error_threshold: 1.0 - r as f64 / l as f64,
                })
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomScaleEntry {
    pub delta: Vec<usize>,
    #[serde(with = "crate::report::sig")]
    pub q_delta: f64,
    #[serde(with = "crate::report::sig")]
    pub c_delta: f64,
    #[serde(with = "crate::report::sig")]
    pub cbar_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomScaleReport {
    pub per_subset: Vec<RandomScaleEntry>,
}

impl RandomScaleReport {
    /// Columns `delta, q_delta, c_delta_bits, cbar_delta_bits`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("delta,q_delta,c_delta_bits,cbar_delta_bits\n");
        for e in &self.per_subset {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_subset(&e.delta),
                fmt_sig(e.q_delta),
                fmt_sig(e.c_delta),
                fmt_sig(e.cbar_delta)
            );
        }
        out
    }

    pub fn get(&self, delta: &[usize]) -> Option<&RandomScaleEntry> {
        self.per_subset.iter().find(|e| e.delta == delta)
    }
}

/// Capacity evaluations for a random channel.
pub struct RandomScales<'a> {
    solver: &'a dyn BranchSolver,
    q: Vec<f64>,
    suprema: Vec<f64>,
}

impl<'a> RandomScales<'a> {
    pub fn new(solver: &'a dyn BranchSolver, q: &[f64]) -> Result<Self> {
        let m = solver.branch_count();
        if q.len() != m {
            return Err(Error::validation(format!("q has {} entries for {m} branches", q.len())));
        }
        if q.iter().any(|x| !(*x >= 0.0)) || (q.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::validation("q is not a probability vector"));
        }
        let suprema = (0..m)
            .map(|i| Ok(solver.supremum(i)?.chi_star))
            .collect::<Result<_>>()?;
        Ok(Self {
            solver,
            q: q.to_vec(),
            suprema,
        })
    }

    pub fn branch_count(&self) -> usize {
        self.q.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.q
    }

    /// Product-state capacity `sup_P min_i I(P; Φ_i)` over all branches.
    pub fn capacity(&self) -> Result<f64> {
        let all: Vec<usize> = (0..self.branch_count()).collect();
        self.solver.sup_min(&all)
    }

    pub fn delta(&self, delta: &[usize]) -> Result<RandomScaleEntry> {
        check_subset(delta, self.branch_count())?;
        let c_delta = if delta.len() == 1 {
            self.suprema[delta[0]]
        } else {
            self.solver.sup_min(delta)?
        };
        Ok(RandomScaleEntry {
            delta: delta.to_vec(),
            q_delta: delta.iter().map(|&i| self.q[i]).sum(),
            c_delta,
            cbar_delta: delta
                .iter()
                .map(|&i| self.suprema[i])
                .fold(f64::NEG_INFINITY, f64::max),
        })
    }

    /// Every nonempty subset, ordered by size then lexicographically.
    pub fn report(&self) -> Result<RandomScaleReport> {
        let m = self.branch_count();
        if m > MAX_BRANCHES {
            return Err(Error::validation(format!(
                "subset enumeration limited to {MAX_BRANCHES} branches"
            )));
        }
        let per_subset = (1..=m)
            .flat_map(|size| (0..m).combinations(size))
            .map(|d| self.delta(&d))
            .collect::<Result<_>>()?;
        Ok(RandomScaleReport { per_subset })
    }
}

fn ad_solver(gammas: &[f64], tol: f64) -> Result<AmplitudeDampingBranches> {
    AmplitudeDampingBranches::new(gammas, tol)
}

/// `C_p` of a periodic channel with amplitude-damping branches.
pub fn capacity_periodic(branch_gammas: &[f64], tol: f64) -> Result<f64> {
    PeriodicScales::new(&ad_solver(branch_gammas, tol)?)?.capacity()
}

/// `C̄_p` of a periodic channel with amplitude-damping branches.
pub fn cbar_periodic(branch_gammas: &[f64], tol: f64) -> Result<f64> {
    PeriodicScales::new(&ad_solver(branch_gammas, tol)?)?.cbar()
}

/// `C_p^(r)` and its maximising offset subset.
pub fn scale_r(branch_gammas: &[f64], r: usize, tol: f64) -> Result<(f64, Vec<usize>)> {
    let e = PeriodicScales::new(&ad_solver(branch_gammas, tol)?)?.scale(r)?;
    Ok((e.value, e.best_subset))
}

/// `C_p^(2)`.
pub fn pair_capacity(branch_gammas: &[f64], tol: f64) -> Result<(f64, Vec<usize>)> {
    if branch_gammas.len() < 2 {
        return Err(Error::validation("pair capacity needs at least two branches"));
    }
    scale_r(branch_gammas, 2, tol)
}

/// `½(χ*(γ0) + χ*(γ1))`, the average of the single-branch suprema.
pub fn chi_star_avg_pair(gamma0: f64, gamma1: f64, tol: f64) -> Result<f64> {
    cbar_periodic(&[gamma0, gamma1], tol)
}

/// `(q(Δ), C_p^Δ, C̄_p^Δ)` for amplitude-damping branches.
pub fn random_scale(branch_gammas: &[f64], q: &[f64], delta: &[usize]) -> Result<(f64, f64, f64)> {
    let solver = ad_solver(branch_gammas, DEFAULT_TOL)?;
    let e = RandomScales::new(&solver, q)?.delta(delta)?;
    Ok((e.q_delta, e.c_delta, e.cbar_delta))
}

pub fn staircase_profile(branch_gammas: &[f64], tol: f64) -> Result<Vec<StaircaseStep>> {
    PeriodicScales::new(&ad_solver(branch_gammas, tol)?)?.staircase()
}
