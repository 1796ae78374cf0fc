//! Ensemble search over pure qubit inputs on a polar/azimuthal grid.
//!
//! Each grid state is pushed through the channel once and kept as the Bloch
//! vector and entropy of its output. Two searches run on that table:
//!
//! * an exhaustive pair search, optimising the mixing weight of every pair of
//!   grid states by golden section (the Holevo quantity is concave in the
//!   weights);
//! * a multiplicative-weights ascent over all grid states at once, which for a
//!   single channel is the Blahut–Arimoto iteration for classical-quantum
//!   channels. The result is reduced to at most four states by Carathéodory
//!   pivoting, which keeps the average output fixed and never raises the
//!   conditional entropy.
//!
//! The ascent also backs capacity computations for branches without a closed
//! form: weighted sums of Holevo quantities, and minima through a softmin.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::channels::QubitChannel;
use crate::error::{Error, Result};
use crate::linalg::{qubit_entropy_from_radius, DensityMatrix};
use crate::optim::maximize_concave_1d;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    /// Upper bound on `grid^(2·n_states)`.
    pub budget: f64,
    /// Stop the ascent once the duality gap drops below this, in bits.
    pub gap_tol: f64,
    pub max_iters: usize,
    /// Temperature of the softmin used for min-objectives, in bits.
    pub softmin_temperature: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: 1e12,
            gap_tol: 1e-10,
            max_iters: 20_000,
            softmin_temperature: 1e-4,
        }
    }
}

/// Grid of pure states: polar angles `kπ/grid` for `k = 0..=grid` and azimuths
/// `2πl/grid`, with each pole listed once.
pub fn sphere_grid(grid: usize) -> Vec<(f64, f64)> {
    let mut pts = vec![(0.0, 0.0)];
    for k in 1..grid {
        let theta = k as f64 * PI / grid as f64;
        for l in 0..grid {
            pts.push((theta, 2.0 * PI * l as f64 / grid as f64));
        }
    }
    pts.push((PI, 0.0));
    pts
}

#[derive(Clone, Copy, Debug)]
struct Output {
    bloch: [f64; 3],
    entropy: f64,
}

/// Channel outputs for every grid state.
#[derive(Clone, Debug)]
struct OutputTable {
    outputs: Vec<Output>,
}

impl OutputTable {
    fn new(ch: &QubitChannel, points: &[(f64, f64)]) -> Result<Self> {
        let outputs = points
            .iter()
            .map(|&(theta, phi)| {
                let out = ch.apply(&DensityMatrix::bloch_pure(theta, phi))?;
                let bloch = out.bloch_vector()?;
                Ok(Output {
                    bloch,
                    entropy: qubit_entropy_from_radius(norm(&bloch)),
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { outputs })
    }

    fn average(&self, p: &[f64], support: &[usize]) -> [f64; 3] {
        let mut s = [0.0; 3];
        for &x in support {
            for c in 0..3 {
                s[c] += p[x] * self.outputs[x].bloch[c];
            }
        }
        s
    }

    fn holevo(&self, p: &[f64], support: &[usize]) -> f64 {
        let s = self.average(p, support);
        let conditional: f64 = support.iter().map(|&x| p[x] * self.outputs[x].entropy).sum();
        qubit_entropy_from_radius(norm(&s)) - conditional
    }

    /// `D(σ_x ‖ σ̄)` in bits for every state in `support`, with σ̄ given by Bloch vector `s`.
    fn divergences(&self, s: &[f64; 3], support: &[usize], out: &mut [f64]) {
        let radius = norm(s);
        let log_hi = (0.5 * (1.0 + radius)).log2();
        let log_lo = (0.5 * (1.0 - radius)).max(1e-300).log2();
        for (slot, &x) in out.iter_mut().zip(support) {
            let o = &self.outputs[x];
            let overlap = if radius < 1e-15 {
                0.0
            } else {
                dot(&o.bloch, s) / radius
            };
            let w_hi = 0.5 * (1.0 + overlap);
            let w_lo = 0.5 * (1.0 - overlap);
            let mut cross = w_hi * log_hi;
            if w_lo > 1e-15 {
                cross += w_lo * log_lo;
            }
            *slot = (-o.entropy - cross).max(0.0);
        }
    }
}

fn norm(v: &[f64; 3]) -> f64 {
    dot(v, v).sqrt()
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// How several Holevo quantities are combined into one objective.
#[derive(Clone, Debug)]
enum Aggregate {
    /// Normalised weights.
    Sum(Vec<f64>),
    Min { temperature: f64 },
}

#[derive(Clone, Debug)]
struct Ascent {
    p: Vec<f64>,
    /// Exact objective at `p`: weighted sum, or plain minimum.
    value: f64,
    upper_bound: f64,
    iterations: usize,
}

/// Per-channel Holevo values and the aggregation weights at `p`.
fn aggregate_weights(agg: &Aggregate, chis: &[f64]) -> (Vec<f64>, f64) {
    match agg {
        Aggregate::Sum(w) => {
            let v = w.iter().zip(chis).map(|(w, c)| w * c).sum();
            (w.clone(), v)
        }
        Aggregate::Min { temperature } => {
            let lo = chis.iter().copied().fold(f64::INFINITY, f64::min);
            let e: Vec<f64> = chis.iter().map(|c| (-(c - lo) / temperature).exp()).collect();
            let z: f64 = e.iter().sum();
            let smooth = lo - temperature * z.ln();
            (e.iter().map(|x| x / z).collect(), smooth)
        }
    }
}

fn multiplicative_ascent(
    tables: &[&OutputTable],
    agg: &Aggregate,
    support: &[usize],
    n_states: usize,
    cfg: &SearchConfig,
) -> Ascent {
    let mut p = vec![0.0; n_states];
    for &x in support {
        p[x] = 1.0 / support.len() as f64;
    }
    let mut grad = vec![0.0; support.len()];
    let mut div = vec![0.0; support.len()];
    let mut eta: f64 = 1.0;
    let mut iterations = 0;

    let evaluate = |p: &[f64]| -> (Vec<f64>, Vec<f64>, f64) {
        let chis: Vec<f64> = tables.iter().map(|t| t.holevo(p, support)).collect();
        let (lambda, smooth) = aggregate_weights(agg, &chis);
        (chis, lambda, smooth)
    };

    let (mut chis, mut lambda, mut smooth) = evaluate(&p);
    let upper_bound;
    loop {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (t, &l) in tables.iter().zip(&lambda) {
            if l == 0.0 {
                continue;
            }
            let s = t.average(&p, support);
            t.divergences(&s, support, &mut div);
            for (g, d) in grad.iter_mut().zip(&div) {
                *g += l * d;
            }
        }
        let linear: f64 = lambda.iter().zip(&chis).map(|(l, c)| l * c).sum();
        let top = grad.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let gap = (top - linear).max(0.0);
        if gap < cfg.gap_tol || iterations >= cfg.max_iters {
            let slack = match agg {
                Aggregate::Sum(_) => 0.0,
                Aggregate::Min { temperature } => temperature * (tables.len() as f64).ln(),
            };
            upper_bound = smooth + gap + slack;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..40 {
            let mut next = p.clone();
            let mut z = 0.0;
            for (&x, g) in support.iter().zip(&grad) {
                next[x] = p[x] * (eta * LN_2 * (g - top)).exp();
                z += next[x];
            }
            for &x in support {
                next[x] /= z;
            }
            let (c2, l2, s2) = evaluate(&next);
            if s2 >= smooth - 1e-15 {
                p = next;
                chis = c2;
                lambda = l2;
                smooth = s2;
                eta = (eta * 1.25).min(8.0);
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            upper_bound = smooth + gap;
            break;
        }
    }
    let value = match agg {
        Aggregate::Sum(w) => w.iter().zip(&chis).map(|(w, c)| w * c).sum(),
        Aggregate::Min { .. } => chis.iter().copied().fold(f64::INFINITY, f64::min),
    };
    Ascent {
        p,
        value,
        upper_bound,
        iterations,
    }
}

/// Null vector of a 4×5 matrix by Gaussian elimination.
fn null_vector(mut m: [[f64; 5]; 4]) -> [f64; 5] {
    let mut pivot_cols = Vec::with_capacity(4);
    let mut row = 0;
    for col in 0..5 {
        if row == 4 {
            break;
        }
        let (best, mag) = (row..4)
            .map(|r| (r, m[r][col].abs()))
            .fold((row, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc });
        if mag < 1e-13 {
            continue;
        }
        m.swap(row, best);
        let pv = m[row][col];
        for c in 0..5 {
            m[row][c] /= pv;
        }
        for r in 0..4 {
            if r != row {
                let f = m[r][col];
                if f != 0.0 {
                    for c in 0..5 {
                        m[r][c] -= f * m[row][c];
                    }
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
    }
    let free = (0..5).find(|c| !pivot_cols.contains(c)).expect("4x5 has a free column");
    let mut v = [0.0; 5];
    v[free] = 1.0;
    for (r, &pc) in pivot_cols.iter().enumerate() {
        v[pc] = -m[r][free];
    }
    v
}

/// Shrinks the support of `p` to at most four states without lowering the
/// Holevo quantity.
fn caratheodory_reduce(table: &OutputTable, p: &mut [f64]) -> Vec<usize> {
    let mut support: Vec<usize> = (0..p.len()).filter(|&x| p[x] > 0.0).collect();
    while support.len() > 4 {
        let cols = &support[..5];
        let mut a = [[0.0; 5]; 4];
        for (j, &x) in cols.iter().enumerate() {
            a[0][j] = 1.0;
            for c in 0..3 {
                a[c + 1][j] = table.outputs[x].bloch[c];
            }
        }
        let mut v = null_vector(a);
        let slope: f64 = cols
            .iter()
            .zip(&v)
            .map(|(&x, vj)| vj * table.outputs[x].entropy)
            .sum();
        if slope > 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        let (hit, step) = cols
            .iter()
            .zip(&v)
            .enumerate()
            .filter(|(_, (_, &vj))| vj < 0.0)
            .map(|(j, (&x, &vj))| (j, p[x] / -vj))
            .fold((usize::MAX, f64::INFINITY), |acc, c| if c.1 < acc.1 { c } else { acc });
        if hit == usize::MAX {
            break;
        }
        for (&x, vj) in cols.iter().zip(&v) {
            p[x] = (p[x] + step * vj).max(0.0);
        }
        p[cols[hit]] = 0.0;
        support.retain(|&x| p[x] > 0.0);
    }
    let total: f64 = support.iter().map(|&x| p[x]).sum();
    for &x in &support {
        p[x] /= total;
    }
    support
}

/// Best ensemble found by [`brute_force_ensemble_search_with`].
#[derive(Clone, Debug)]
pub struct EnsembleSearch {
    pub value: f64,
    /// `(probability, polar angle, azimuth)` of each member.
    pub members: Vec<(f64, f64, f64)>,
}

/// Best Holevo quantity over ensembles of at most `n_states` pure grid states.
pub fn brute_force_ensemble_search(ch: &QubitChannel, n_states: usize, grid: usize) -> Result<f64> {
    Ok(brute_force_ensemble_search_with(ch, n_states, grid, &SearchConfig::default())?.value)
}

pub fn brute_force_ensemble_search_with(
    ch: &QubitChannel,
    n_states: usize,
    grid: usize,
    cfg: &SearchConfig,
) -> Result<EnsembleSearch> {
    if !(1..=4).contains(&n_states) {
        return Err(Error::validation(format!("n_states = {n_states} outside 1..=4")));
    }
    if grid < 8 {
        return Err(Error::validation(format!("grid = {grid} below 8")));
    }
    let requested = (grid as f64).powi(2 * n_states as i32);
    if requested > cfg.budget {
        return Err(Error::ResourceLimit {
            requested,
            budget: cfg.budget,
        });
    }
    let points = sphere_grid(grid);
    let table = OutputTable::new(ch, &points)?;
    let member = |p: f64, x: usize| (p, points[x].0, points[x].1);

    let mut best = EnsembleSearch {
        value: 0.0,
        members: vec![member(1.0, 0)],
    };
    if n_states >= 2 {
        let (value, i, j, w) = best_pair(&table)?;
        if value > best.value {
            best = EnsembleSearch {
                value,
                members: vec![member(w, i), member(1.0 - w, j)],
            };
        }
    }
    if n_states >= 3 {
        let all: Vec<usize> = (0..points.len()).collect();
        let agg = Aggregate::Sum(vec![1.0]);
        let ascent = multiplicative_ascent(&[&table], &agg, &all, points.len(), cfg);
        let mut p = ascent.p;
        let support = caratheodory_reduce(&table, &mut p);
        let candidate = if support.len() <= n_states {
            Some((table.holevo(&p, &support), support, p))
        } else {
            // four states left but only three allowed: re-optimise each triple
            let mut out: Option<(f64, Vec<usize>, Vec<f64>)> = None;
            for skip in 0..support.len() {
                let sub: Vec<usize> = support
                    .iter()
                    .enumerate()
                    .filter(|(k, _)| *k != skip)
                    .map(|(_, &x)| x)
                    .collect();
                let a = multiplicative_ascent(&[&table], &agg, &sub, points.len(), cfg);
                if out.as_ref().is_none_or(|o| a.value > o.0) {
                    out = Some((a.value, sub, a.p));
                }
            }
            out
        };
        if let Some((value, support, p)) = candidate {
            if value > best.value {
                best = EnsembleSearch {
                    value,
                    members: support.iter().map(|&x| member(p[x], x)).collect(),
                };
            }
        }
    }
    Ok(best)
}

/// Exhaustive search over pairs of grid states. Ties go to the
/// lexicographically smallest pair, so the result is order independent.
fn best_pair(table: &OutputTable) -> Result<(f64, usize, usize, f64)> {
    let n = table.outputs.len();
    let candidates = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::NEG_INFINITY, i, i, 1.0);
            for j in (i + 1)..n {
                let (oi, oj) = (table.outputs[i], table.outputs[j]);
                let f = |w: f64| {
                    let mut s = [0.0; 3];
                    for c in 0..3 {
                        s[c] = w * oi.bloch[c] + (1.0 - w) * oj.bloch[c];
                    }
                    qubit_entropy_from_radius(norm(&s)) - w * oi.entropy - (1.0 - w) * oj.entropy
                };
                let r = maximize_concave_1d(f, 0.0, 1.0, 1e-10)?;
                if r.value > best.0 {
                    best = (r.value, i, j, r.argmax);
                }
            }
            Ok(best)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(candidates
        .into_iter()
        .fold((0.0, 0, 0, 1.0), |acc, c| if c.0 > acc.0 { c } else { acc }))
}

/// Result of an ensemble optimisation over several channels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnsembleOpt {
    pub value: f64,
    /// Certified upper bound on the grid-restricted supremum.
    pub upper_bound: f64,
    pub iterations: usize,
}

/// Capacity solver for arbitrary qubit channels, restricted to grid-supported
/// ensembles.
#[derive(Clone, Debug)]
pub struct GenericSolver {
    tables: Vec<OutputTable>,
    n_points: usize,
    cfg: SearchConfig,
}

impl GenericSolver {
    pub fn new(channels: &[QubitChannel], grid: usize) -> Result<Self> {
        Self::with_config(channels, grid, SearchConfig {
            gap_tol: 1e-9,
            ..SearchConfig::default()
        })
    }

    pub fn with_config(channels: &[QubitChannel], grid: usize, cfg: SearchConfig) -> Result<Self> {
        if grid < 2 {
            return Err(Error::validation(format!("grid = {grid} below 2")));
        }
        if channels.is_empty() {
            return Err(Error::validation("no channels given"));
        }
        let points = sphere_grid(grid);
        let tables = channels
            .iter()
            .map(|ch| OutputTable::new(ch, &points))
            .collect::<Result<_>>()?;
        Ok(Self {
            tables,
            n_points: points.len(),
            cfg,
        })
    }

    pub fn channel_count(&self) -> usize {
        self.tables.len()
    }

    fn check(&self, branches: &[usize]) -> Result<()> {
        if branches.is_empty() {
            return Err(Error::validation("empty branch list"));
        }
        if branches.iter().any(|&i| i >= self.tables.len()) {
            return Err(Error::validation("branch index out of range"));
        }
        Ok(())
    }

    /// `sup_P Σ_i w_i χ_i(P)` over the listed branches.
    pub fn sup_weighted(&self, branches: &[usize], weights: &[f64]) -> Result<EnsembleOpt> {
        self.check(branches)?;
        if weights.len() != branches.len() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::validation("weights must be nonnegative, one per branch"));
        }
        let total: f64 = weights.iter().sum();
        if total == 0.0 {
            return Ok(EnsembleOpt {
                value: 0.0,
                upper_bound: 0.0,
                iterations: 0,
            });
        }
        let tables: Vec<&OutputTable> = branches.iter().map(|&i| &self.tables[i]).collect();
        let agg = Aggregate::Sum(weights.iter().map(|w| w / total).collect());
        let all: Vec<usize> = (0..self.n_points).collect();
        let a = multiplicative_ascent(&tables, &agg, &all, self.n_points, &self.cfg);
        Ok(EnsembleOpt {
            value: a.value * total,
            upper_bound: a.upper_bound * total,
            iterations: a.iterations,
        })
    }

    /// `sup_P min_i χ_i(P)` over the listed branches.
    pub fn sup_min(&self, branches: &[usize]) -> Result<EnsembleOpt> {
        self.check(branches)?;
        let tables: Vec<&OutputTable> = branches.iter().map(|&i| &self.tables[i]).collect();
        let agg = Aggregate::Min {
            temperature: self.cfg.softmin_temperature,
        };
        let all: Vec<usize> = (0..self.n_points).collect();
        let a = multiplicative_ascent(&tables, &agg, &all, self.n_points, &self.cfg);
        Ok(EnsembleOpt {
            value: a.value,
            upper_bound: a.upper_bound,
            iterations: a.iterations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::maximize_chi;

    fn ad(g: f64) -> QubitChannel {
        QubitChannel::amplitude_damping(g).unwrap()
    }

    #[test]
    fn grid_has_poles_once() {
        let pts = sphere_grid(8);
        assert_eq!(pts.len(), 2 + 7 * 8);
        assert_eq!(pts[0], (0.0, 0.0));
        assert_eq!(*pts.last().unwrap(), (PI, 0.0));
    }

    #[test]
    fn identity_channel_pair_reaches_one() {
        for grid in [8, 9, 12] {
            let v = brute_force_ensemble_search(&ad(0.0), 2, grid).unwrap();
            assert!((v - 1.0).abs() < 1e-12, "grid {grid}: {v}");
        }
    }

    #[test]
    fn dead_channel_carries_nothing() {
        for n in 1..=4 {
            assert!(brute_force_ensemble_search(&ad(1.0), n, 8).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn single_state_is_zero() {
        assert_eq!(brute_force_ensemble_search(&ad(0.3), 1, 8).unwrap(), 0.0);
    }

    #[test]
    fn argument_checks() {
        assert!(brute_force_ensemble_search(&ad(0.3), 0, 8).is_err());
        assert!(brute_force_ensemble_search(&ad(0.3), 5, 8).is_err());
        assert!(brute_force_ensemble_search(&ad(0.3), 2, 7).is_err());
        assert!(matches!(
            brute_force_ensemble_search(&ad(0.3), 4, 40),
            Err(Error::ResourceLimit { .. })
        ));
    }

    #[test]
    fn monotone_in_states_and_nested_grids() {
        let ch = ad(0.3);
        let mut prev = 0.0;
        for n in 1..=4 {
            let v = brute_force_ensemble_search(&ch, n, 12).unwrap();
            assert!(v >= prev - 1e-12, "n = {n}");
            prev = v;
        }
        for n in 2..=4 {
            let coarse = brute_force_ensemble_search(&ch, n, 8).unwrap();
            let fine = brute_force_ensemble_search(&ch, n, 16).unwrap();
            assert!(fine >= coarse - 1e-9, "n = {n}: {fine} < {coarse}");
        }
    }

    #[test]
    fn close_to_mirror_pair_supremum() {
        let ch = ad(0.3);
        let star = maximize_chi(0.3, 1e-10).unwrap().value;
        let found = brute_force_ensemble_search_with(&ch, 4, 16, &SearchConfig::default()).unwrap();
        assert!(found.value - star < 1e-3);
        assert!(star - found.value < 1e-2);
        assert!(found.members.len() <= 4);
        let total: f64 = found.members.iter().map(|m| m.0).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn caratheodory_keeps_value() {
        let ch = ad(0.45);
        let points = sphere_grid(10);
        let table = OutputTable::new(&ch, &points).unwrap();
        let mut p: Vec<f64> = (0..points.len()).map(|x| 1.0 + (x % 7) as f64).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= total);
        let all: Vec<usize> = (0..points.len()).collect();
        let before = table.holevo(&p, &all);
        let avg_before = table.average(&p, &all);
        let support = caratheodory_reduce(&table, &mut p);
        assert!(support.len() <= 4);
        assert!(table.holevo(&p, &support) >= before - 1e-12);
        let avg_after = table.average(&p, &support);
        for c in 0..3 {
            assert!((avg_before[c] - avg_after[c]).abs() < 1e-10);
        }
    }

    #[test]
    fn generic_solver_matches_closed_form() {
        let chans = [ad(0.2), ad(0.5)];
        let solver = GenericSolver::new(&chans, 24).unwrap();
        let single = solver.sup_weighted(&[0], &[1.0]).unwrap();
        let star = maximize_chi(0.2, 1e-10).unwrap().value;
        assert!(single.value <= star + 1e-9 && star - single.value < 1e-3);
        assert!(single.upper_bound >= single.value);
        let m = solver.sup_min(&[0, 1]).unwrap();
        let star1 = maximize_chi(0.5, 1e-10).unwrap().value;
        assert!((m.value - star1).abs() < 1e-3);
    }

    #[test]
    fn depolarizing_pair_is_additive() {
        let chans = [
            QubitChannel::depolarizing(0.1).unwrap(),
            QubitChannel::depolarizing(0.3).unwrap(),
        ];
        let solver = GenericSolver::new(&chans, 12).unwrap();
        let joint = solver.sup_weighted(&[0, 1], &[1.0, 1.0]).unwrap().value;
        let sep = solver.sup_weighted(&[0], &[1.0]).unwrap().value
            + solver.sup_weighted(&[1], &[1.0]).unwrap().value;
        assert!((joint - sep).abs() < 1e-9);
    }
}
