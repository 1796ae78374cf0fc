//! Monte Carlo view of the capacity scales.
//!
//! Decoding is modelled by an idealised asymptotic oracle: a branch is decoded
//! correctly exactly when the coding theorem for the chosen branch set
//! guarantees codes with vanishing error on that branch at the given rate.
//! Identifying the branch (the preamble) is taken as free and perfect. No
//! codebook or measurement is simulated.

use std::fmt::Write as _;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{fmt_sig, fmt_subset};
use crate::scales::{PeriodicScales, RandomScales};

/// Rates closer than this to a capacity threshold are rejected.
pub const RATE_EPS: f64 = 1e-12;

const CHUNK: usize = 4096;

/// Memory channel together with the capacity evaluations it needs.
pub enum ChannelModel<'a> {
    Periodic(PeriodicScales<'a>),
    Random(RandomScales<'a>),
}

impl ChannelModel<'_> {
    pub fn branch_count(&self) -> usize {
        match self {
            Self::Periodic(p) => p.period(),
            Self::Random(r) => r.branch_count(),
        }
    }

    /// Probability that each branch is selected for a message.
    pub fn branch_probabilities(&self) -> Vec<f64> {
        match self {
            Self::Periodic(p) => vec![1.0 / p.period() as f64; p.period()],
            Self::Random(r) => r.probabilities().to_vec(),
        }
    }

    /// Rate threshold for a target set: the subset's periodic scale value, or
    /// `C_p^Δ` for a random channel.
    pub fn subset_value(&self, subset: &[usize]) -> Result<f64> {
        match self {
            Self::Periodic(p) => p.subset_value(subset),
            Self::Random(r) => Ok(r.delta(subset)?.c_delta),
        }
    }

    pub fn subset_mass(&self, subset: &[usize]) -> f64 {
        let probs = self.branch_probabilities();
        subset.iter().map(|&i| probs[i]).sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy {
    pub target_subset: Vec<usize>,
    /// Bits per channel use.
    pub rate: f64,
}

impl Strategy {
    pub fn new(mut target_subset: Vec<usize>, rate: f64) -> Result<Self> {
        target_subset.sort_unstable();
        target_subset.dedup();
        if target_subset.is_empty() {
            return Err(Error::validation("strategy needs a nonempty target subset"));
        }
        if !(rate >= 0.0) || !rate.is_finite() {
            return Err(Error::validation(format!("rate {rate} must be finite and nonnegative")));
        }
        Ok(Self {
            target_subset,
            rate,
        })
    }
}

fn check_rate(rate: f64, threshold: f64) -> Result<()> {
    if (rate - threshold).abs() <= RATE_EPS {
        return Err(Error::IndeterminateRate { rate, threshold });
    }
    Ok(())
}

/// Which branches are decoded correctly under `strategy`.
pub fn success_oracle(model: &ChannelModel<'_>, strategy: &Strategy) -> Result<Vec<bool>> {
    let threshold = model.subset_value(&strategy.target_subset)?;
    check_rate(strategy.rate, threshold)?;
    let achievable = strategy.rate < threshold;
    Ok((0..model.branch_count())
        .map(|i| achievable && strategy.target_subset.contains(&i))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub drawn_branch: usize,
    pub success: bool,
    /// Seed from which this trial's branch draw is reproduced.
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrialRun {
    /// Fraction of failed trials.
    pub empirical_error: f64,
    /// Largest empirical failure fraction among branches that were drawn.
    pub empirical_max_branch_error: f64,
    /// Branch-probability weighted error of the oracle.
    pub average_error: f64,
    /// Worst error over branches with positive probability.
    pub max_branch_error: f64,
    pub records: Vec<TrialRecord>,
}

/// Draws the branch for one trial from its seed.
pub fn draw_branch(trial_seed: u64, dist: &WeightedIndex<f64>) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    dist.sample(&mut rng)
}

/// Per-trial seeds: word `t` of the ChaCha stream keyed by `seed`.
fn trial_seeds(seed: u64, start: usize, len: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_word_pos(2 * start as u128);
    (0..len).map(|_| rng.next_u64()).collect()
}

pub fn run_trials(
    model: &ChannelModel<'_>,
    strategy: &Strategy,
    n_trials: usize,
    seed: u64,
) -> Result<TrialRun> {
    if n_trials == 0 {
        return Err(Error::validation("n_trials must be at least 1"));
    }
    let success = success_oracle(model, strategy)?;
    let probs = model.branch_probabilities();
    let dist = WeightedIndex::new(&probs)
        .map_err(|e| Error::validation(format!("branch probabilities: {e}")))?;

    let records: Vec<TrialRecord> = (0..n_trials.div_ceil(CHUNK))
        .into_par_iter()
        .flat_map_iter(|c| {
            let start = c * CHUNK;
            let len = CHUNK.min(n_trials - start);
            trial_seeds(seed, start, len).into_iter().map(|s| {
                let branch = draw_branch(s, &dist);
                TrialRecord {
                    drawn_branch: branch,
                    success: success[branch],
                    seed: s,
                }
            })
        })
        .collect();

    let mut drawn = vec![0usize; probs.len()];
    let mut failed = vec![0usize; probs.len()];
    for r in &records {
        drawn[r.drawn_branch] += 1;
        if !r.success {
            failed[r.drawn_branch] += 1;
        }
    }
    let failures: usize = failed.iter().sum();
    let empirical_max_branch_error = drawn
        .iter()
        .zip(&failed)
        .filter(|(d, _)| **d > 0)
        .map(|(&d, &f)| f as f64 / d as f64)
        .fold(0.0, f64::max);
    let average_error = probs
        .iter()
        .zip(&success)
        .filter(|(_, &s)| !s)
        .map(|(p, _)| p)
        .sum();
    let max_branch_error = if probs.iter().zip(&success).any(|(&p, &s)| p > 0.0 && !s) {
        1.0
    } else {
        0.0
    };
    Ok(TrialRun {
        empirical_error: failures as f64 / n_trials as f64,
        empirical_max_branch_error,
        average_error,
        max_branch_error,
        records,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaircaseRow {
    #[serde(with = "crate::report::sig")]
    pub rate: f64,
    pub subset: Vec<usize>,
    #[serde(with = "crate::report::sig")]
    pub q_subset: f64,
    #[serde(with = "crate::report::sig")]
    pub theoretical_error: f64,
    #[serde(with = "crate::report::sig")]
    pub empirical_error: f64,
    pub n_trials: usize,
    pub seed: u64,
}

/// Target subset for `rate`: the largest branch set whose capacity exceeds
/// the rate (most probability mass for random channels). When no set works
/// the best single-branch set is returned and every trial fails.
pub fn choose_subset(model: &ChannelModel<'_>, rate: f64) -> Result<Vec<usize>> {
    match model {
        ChannelModel::Periodic(p) => {
            let mut fallback = None;
            for r in (1..=p.period()).rev() {
                let e = p.scale(r)?;
                check_rate(rate, e.value)?;
                if rate < e.value {
                    return Ok(e.best_subset);
                }
                fallback = Some(e.best_subset);
            }
            Ok(fallback.expect("period is at least one"))
        }
        ChannelModel::Random(r) => {
            let report = r.report()?;
            let mut best: Option<(f64, Vec<usize>)> = None;
            let mut fallback: Option<(f64, Vec<usize>)> = None;
            for e in &report.per_subset {
                check_rate(rate, e.c_delta)?;
                if rate < e.c_delta && best.as_ref().is_none_or(|b| e.q_delta > b.0 + 1e-15) {
                    best = Some((e.q_delta, e.delta.clone()));
                }
                if e.delta.len() == 1 && fallback.as_ref().is_none_or(|f| e.c_delta > f.0) {
                    fallback = Some((e.c_delta, e.delta.clone()));
                }
            }
            Ok(best.or(fallback).expect("at least one branch").1)
        }
    }
}

pub fn empirical_staircase(
    model: &ChannelModel<'_>,
    rates: &[f64],
    n_trials: usize,
    seed: u64,
) -> Result<Vec<StaircaseRow>> {
    if rates.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::validation("rates must be sorted ascending"));
    }
    rates
        .iter()
        .map(|&rate| {
            let subset = choose_subset(model, rate)?;
            let strategy = Strategy::new(subset.clone(), rate)?;
            let run = run_trials(model, &strategy, n_trials, seed)?;
            Ok(StaircaseRow {
                rate,
                q_subset: model.subset_mass(&subset),
                subset,
                theoretical_error: run.average_error,
                empirical_error: run.empirical_error,
                n_trials,
                seed,
            })
        })
        .collect()
}

/// Columns `rate_bits, subset, q_subset, theoretical_error, empirical_error, n_trials, seed`.
pub fn staircase_rows_csv(rows: &[StaircaseRow]) -> String {
    let mut out =
        String::from("rate_bits,subset,q_subset,theoretical_error,empirical_error,n_trials,seed\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_sig(r.rate),
            fmt_subset(&r.subset),
            fmt_sig(r.q_subset),
            fmt_sig(r.theoretical_error),
            fmt_sig(r.empirical_error),
            r.n_trials,
            r.seed
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scales::AmplitudeDampingBranches;

    const TOL: f64 = 1e-9;

    fn periodic(gammas: &[f64]) -> AmplitudeDampingBranches {
        AmplitudeDampingBranches::new(gammas, TOL).unwrap()
    }

    #[test]
    fn zero_rate_succeeds_on_target() {
        let s = periodic(&[0.1, 0.3, 0.5]);
        let model = ChannelModel::Periodic(PeriodicScales::new(&s).unwrap());
        let ok = success_oracle(&model, &Strategy::new(vec![0, 2], 0.0).unwrap()).unwrap();
        assert_eq!(ok, vec![true, false, true]);
    }

    #[test]
    fn above_cbar_fails_everywhere() {
        let s = periodic(&[0.0, 0.4]);
        let scales = PeriodicScales::new(&s).unwrap();
        let cbar = scales.cbar().unwrap();
        let model = ChannelModel::Periodic(scales);
        for subset in [vec![0], vec![1], vec![0, 1]] {
            let ok = success_oracle(&model, &Strategy::new(subset, cbar + 1e-3).unwrap()).unwrap();
            assert!(ok.iter().all(|s| !s));
        }
    }

    #[test]
    fn between_capacities_full_subset_fails() {
        let s = periodic(&[0.0, 0.4]);
        let scales = PeriodicScales::new(&s).unwrap();
        let (cp, cbar) = (scales.capacity().unwrap(), scales.cbar().unwrap());
        let model = ChannelModel::Periodic(scales);
        let rate = 0.5 * (cp + cbar);
        let ok = success_oracle(&model, &Strategy::new(vec![0, 1], rate).unwrap()).unwrap();
        assert_eq!(ok, vec![false, false]);
        let ok = success_oracle(&model, &Strategy::new(vec![0], rate).unwrap()).unwrap();
        assert_eq!(ok, vec![true, false]);
    }

    #[test]
    fn threshold_rate_is_indeterminate() {
        let s = periodic(&[0.2, 0.2]);
        let scales = PeriodicScales::new(&s).unwrap();
        let cp = scales.capacity().unwrap();
        let model = ChannelModel::Periodic(scales);
        let r = success_oracle(&model, &Strategy::new(vec![0, 1], cp).unwrap());
        assert!(matches!(r, Err(Error::IndeterminateRate { .. })));
    }

    #[test]
    fn random_channel_oracle() {
        let s = periodic(&[0.1, 0.6]);
        let model = ChannelModel::Random(RandomScales::new(&s, &[0.25, 0.75]).unwrap());
        let c_both = model.subset_value(&[0, 1]).unwrap();
        let ok = success_oracle(&model, &Strategy::new(vec![0, 1], c_both - 0.01).unwrap()).unwrap();
        assert_eq!(ok, vec![true, true]);
        let ok = success_oracle(&model, &Strategy::new(vec![0, 1], c_both + 0.01).unwrap()).unwrap();
        assert_eq!(ok, vec![false, false]);
    }

    #[test]
    fn full_subset_below_capacity_never_fails() {
        let s = periodic(&[0.0, 0.4, 0.7]);
        let scales = PeriodicScales::new(&s).unwrap();
        let cp = scales.capacity().unwrap();
        let model = ChannelModel::Periodic(scales);
        let run = run_trials(&model, &Strategy::new(vec![0, 1, 2], 0.9 * cp).unwrap(), 5000, 7).unwrap();
        assert_eq!(run.empirical_error, 0.0);
        assert_eq!(run.max_branch_error, 0.0);
    }

    #[test]
    fn trials_are_deterministic_and_replayable() {
        let s = periodic(&[0.0, 0.4, 0.7]);
        let model = ChannelModel::Periodic(PeriodicScales::new(&s).unwrap());
        let strategy = Strategy::new(vec![1], 0.1).unwrap();
        let a = run_trials(&model, &strategy, 10_000, 99).unwrap();
        let b = run_trials(&model, &strategy, 10_000, 99).unwrap();
        assert_eq!(a, b);
        let c = run_trials(&model, &strategy, 10_000, 100).unwrap();
        assert_ne!(a.records, c.records);
        let dist = WeightedIndex::new(model.branch_probabilities()).unwrap();
        for r in a.records.iter().step_by(997) {
            assert_eq!(draw_branch(r.seed, &dist), r.drawn_branch);
        }
        // the prefix of a longer run matches a shorter run
        let short = run_trials(&model, &strategy, 5000, 99).unwrap();
        assert_eq!(short.records[..], a.records[..5000]);
    }

    #[test]
    fn staircase_policy() {
        let s = periodic(&[0.0, 0.4]);
        let scales = PeriodicScales::new(&s).unwrap();
        let (cp, cbar) = (scales.capacity().unwrap(), scales.cbar().unwrap());
        let model = ChannelModel::Periodic(scales);
        let rows = empirical_staircase(&model, &[0.1 * cp, 0.5 * cp], 2000, 3).unwrap();
        assert!(rows.iter().all(|r| r.theoretical_error == 0.0 && r.empirical_error == 0.0));
        let rows = empirical_staircase(&model, &[cbar + 0.01, cbar + 0.1], 2000, 3).unwrap();
        assert!(rows.iter().all(|r| r.theoretical_error == 1.0 && r.empirical_error == 1.0));
        assert!(empirical_staircase(&model, &[0.5, 0.1], 10, 3).is_err());
        let csv = staircase_rows_csv(&rows);
        assert!(csv.starts_with("rate_bits,subset,q_subset,theoretical_error,empirical_error,n_trials,seed\n"));
    }

    #[test]
    fn random_staircase_prefers_mass() {
        let s = periodic(&[0.1, 0.6, 0.3]);
        let scales = RandomScales::new(&s, &[0.2, 0.5, 0.3]).unwrap();
        let all = scales.capacity().unwrap();
        let model = ChannelModel::Random(scales);
        let subset = choose_subset(&model, 0.5 * all).unwrap();
        assert_eq!(subset, vec![0, 1, 2]);
        let c1 = model.subset_value(&[1]).unwrap();
        let c02 = model.subset_value(&[0, 2]).unwrap();
        // a rate only branches 0 and 2 can carry
        let rate = 0.5 * (c1 + c02);
        assert!(c1 < rate && rate < c02);
        assert_eq!(choose_subset(&model, rate).unwrap(), vec![0, 2]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Strategy::new(vec![], 0.1).is_err());
        assert!(Strategy::new(vec![0], -0.1).is_err());
        let s = periodic(&[0.0, 0.4]);
        let model = ChannelModel::Periodic(PeriodicScales::new(&s).unwrap());
        assert!(run_trials(&model, &Strategy::new(vec![0], 0.1).unwrap(), 0, 1).is_err());
        assert!(success_oracle(&model, &Strategy::new(vec![5], 0.1).unwrap()).is_err());
    }
}
