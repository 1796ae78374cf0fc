//! Command-line front end.
//!
//! A channel-spec document looks like
//!
//! ```json
//! {"branches": [{"type": "amplitude_damping", "gamma": 0.4},
//!               {"type": "depolarizing", "p": 0.1},
//!               {"type": "kraus", "kraus_ops": [[[[1,0],[0,0]],[[0,0],[1,0]]]]}],
//!  "memory": {"kind": "periodic"}}
//! ```
//!
//! The `memory` object takes the forms `{"kind": "periodic"}`,
//! `{"kind": "random", "q": [...]}` and `{"kind": "markov", "Q": [[...]], "lambda": [...]}`. Kraus operators are
//! row-major matrices of `[re, im]` pairs. Branch indices are 0-based.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{MemoryChannel, MemoryLaw, QubitChannel};
use crate::error::{Error, Result};
use crate::holevo::chi_ad_mirror;
use crate::linalg::ComplexMatrix;
use crate::optim::{maximize_chi, maximize_chi_sum, MIN_TOL};
use crate::report::{fmt_sig, fmt_subset};
use crate::scales::{
    branch_solver, staircase_csv, BranchSolver, PeriodicScales, RandomScales, StaircaseStep,
    DEFAULT_ENSEMBLE_GRID,
};
use crate::simulate::{empirical_staircase, run_trials, staircase_rows_csv, ChannelModel, Strategy};

pub const MAX_TOL: f64 = 1e-2;

/// Default number of points for sweeps over the mirror-pair parameter.
pub const DEFAULT_SWEEP_GRID: usize = 101;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Holevo quantity of the mirror pair over a grid of `a`, per branch.
    Chi,
    /// Maximising mirror-pair parameter and supremum, per branch.
    Amax,
    /// Periodic capacities and every scale `C_p^(r)`.
    Capacity,
    /// One periodic scale `C_p^(r)`; needs `--r`.
    Scale,
    /// Random-channel scales for one branch set (`--delta`) or all of them.
    RandomScale,
    /// Two-branch amplitude-damping comparison table; takes no spec.
    AppendixA,
    /// Periodic staircase, or the simulated staircase at the `--rate` values.
    Staircase,
    /// Monte Carlo error for `--subset` at one `--rate`.
    Simulate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "qmemcap", version, about = "Capacity scales of qubit channels with classical memory")]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Channel-spec JSON file.
    pub spec_path: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Sweep points for `chi` (default 101); sphere subdivisions for
    /// branches without a closed form (default 24).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long)]
    pub r: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub delta: Option<Vec<usize>>,
    /// Bits per channel use; a comma-separated ascending list for `staircase`.
    #[arg(long, value_delimiter = ',')]
    pub rate: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub subset: Option<Vec<usize>>,
    /// Grid step in gamma for `appendix-a`.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if !(MIN_TOL..=MAX_TOL).contains(&self.tol) {
            return Err(Error::validation(format!(
                "--tol {} outside [{MIN_TOL:e}, {MAX_TOL:e}]",
                self.tol
            )));
        }
        if let Some(g) = self.grid {
            if g < 2 {
                return Err(Error::validation("--grid must be at least 2"));
            }
        }
        if self.trials == 0 {
            return Err(Error::validation("--trials must be at least 1"));
        }
        Ok(())
    }

    fn sphere_grid(&self) -> usize {
        self.grid.unwrap_or(DEFAULT_ENSEMBLE_GRID)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum BranchSpec {
    AmplitudeDamping { gamma: f64 },
    Depolarizing { p: f64 },
    Kraus { kraus_ops: Vec<Vec<Vec<[f64; 2]>>> },
}

impl BranchSpec {
    pub fn build(&self) -> Result<QubitChannel> {
        match self {
            Self::AmplitudeDamping { gamma } => QubitChannel::amplitude_damping(*gamma),
            Self::Depolarizing { p } => QubitChannel::depolarizing(*p),
            Self::Kraus { kraus_ops } => {
                let ops = kraus_ops
                    .iter()
                    .map(|rows| {
                        let rows: Vec<Vec<Complex64>> = rows
                            .iter()
                            .map(|row| row.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())
                            .collect();
                        ComplexMatrix::from_rows(&rows)
                    })
                    .collect::<Result<_>>()?;
                QubitChannel::kraus(ops)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MemorySpec {
    Periodic,
    Random {
        q: Vec<f64>,
    },
    Markov {
        #[serde(rename = "Q")]
        transition: Vec<Vec<f64>>,
        lambda: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub branches: Vec<BranchSpec>,
    pub memory: MemorySpec,
}

impl ChannelSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::validation(format!("channel spec: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::validation(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn build(&self) -> Result<MemoryChannel> {
        let branches = self
            .branches
            .iter()
            .map(BranchSpec::build)
            .collect::<Result<Vec<_>>>()?;
        let memory = match &self.memory {
            MemorySpec::Periodic => MemoryLaw::Periodic,
            MemorySpec::Random { q } => MemoryLaw::Random { q: q.clone() },
            MemorySpec::Markov { transition, lambda } => MemoryLaw::Markov {
                transition: transition.clone(),
                stationary: lambda.clone(),
            },
        };
        MemoryChannel::new(branches, memory)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiRow {
    pub branch: usize,
    #[serde(with = "crate::report::sig")]
    pub gamma: f64,
    #[serde(with = "crate::report::sig")]
    pub a: f64,
    #[serde(with = "crate::report::sig")]
    pub chi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmaxRow {
    pub branch: usize,
    #[serde(with = "crate::report::sig_opt")]
    pub gamma: Option<f64>,
    #[serde(with = "crate::report::sig_opt")]
    pub a_max: Option<f64>,
    #[serde(with = "crate::report::sig")]
    pub chi_star: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AppendixRow {
    #[serde(with = "crate::report::sig")]
    pub gamma0: f64,
    #[serde(with = "crate::report::sig")]
    pub gamma1: f64,
    #[serde(with = "crate::report::sig")]
    pub a_max: f64,
    #[serde(with = "crate::report::sig")]
    pub cp: f64,
    #[serde(with = "crate::report::sig")]
    pub a_max0: f64,
    #[serde(with = "crate::report::sig")]
    pub a_max1: f64,
    #[serde(with = "crate::report::sig")]
    pub chi_avg: f64,
    #[serde(with = "crate::report::sig")]
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub subset: Vec<usize>,
    #[serde(with = "crate::report::sig")]
    pub rate: f64,
    #[serde(with = "crate::report::sig")]
    pub threshold: f64,
    pub n_trials: usize,
    pub seed: u64,
    #[serde(with = "crate::report::sig")]
    pub empirical_error: f64,
    #[serde(with = "crate::report::sig")]
    pub average_error: f64,
    #[serde(with = "crate::report::sig")]
    pub empirical_max_branch_error: f64,
    #[serde(with = "crate::report::sig")]
    pub max_branch_error: f64,
}

/// Gamma grid `0, step, …, 1`; `step` must divide the unit interval.
fn gamma_grid(step: f64) -> Result<Vec<f64>> {
    let n = (1.0 / step).round();
    if !(step > 0.0) || !(n >= 1.0) || (n * step - 1.0).abs() > 1e-9 {
        return Err(Error::validation(format!("step {step} does not divide [0, 1]")));
    }
    let n = n as usize;
    Ok((0..=n).map(|k| k as f64 / n as f64).collect())
}

/// Two-branch amplitude-damping comparison of `C_p` against the average of
/// single-branch suprema over every ordered pair on the gamma grid.
pub fn cmd_appendix_a(step: f64, tol: f64) -> Result<Vec<AppendixRow>> {
    let grid = gamma_grid(step)?;
    let singles = grid
        .par_iter()
        .map(|&g| maximize_chi(g, tol))
        .collect::<Result<Vec<_>>>()?;
    let pairs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..grid.len()).map(move |j| (i, j)))
        .collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            let joint = maximize_chi_sum(&[grid[i], grid[j]], &[0.5, 0.5], tol)?;
            let chi_avg = 0.5 * (singles[i].value + singles[j].value);
            Ok(AppendixRow {
                gamma0: grid[i],
                gamma1: grid[j],
                a_max: joint.argmax,
                cp: joint.value,
                a_max0: singles[i].argmax,
                a_max1: singles[j].argmax,
                chi_avg,
                gap: chi_avg - joint.value,
            })
        })
        .collect()
}

pub fn appendix_csv(rows: &[AppendixRow]) -> String {
    let mut out = String::from("gamma0,gamma1,a_max,cp_bits,a_max0,a_max1,chi_avg_bits,gap_bits\n");
    for r in rows {
        let cols = [r.gamma0, r.gamma1, r.a_max, r.cp, r.a_max0, r.a_max1, r.chi_avg, r.gap];
        let line: Vec<String> = cols.iter().map(|&x| fmt_sig(x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn require_periodic(mc: &MemoryChannel, command: &str) -> Result<()> {
    match mc.memory() {
        MemoryLaw::Periodic => Ok(()),
        _ => Err(Error::validation(format!("`{command}` needs periodic memory"))),
    }
}

fn require_random<'a>(mc: &'a MemoryChannel, command: &str) -> Result<&'a [f64]> {
    match mc.memory() {
        MemoryLaw::Random { q } => Ok(q),
        _ => Err(Error::validation(format!("`{command}` needs random memory"))),
    }
}

fn model<'a>(mc: &MemoryChannel, solver: &'a dyn BranchSolver, command: &str) -> Result<ChannelModel<'a>> {
    match mc.memory() {
        MemoryLaw::Periodic => Ok(ChannelModel::Periodic(PeriodicScales::new(solver)?)),
        MemoryLaw::Random { q } => Ok(ChannelModel::Random(RandomScales::new(solver, q)?)),
        MemoryLaw::Markov { .. } => Err(Error::validation(format!(
            "`{command}` needs periodic or random memory"
        ))),
    }
}

fn sorted_indices(name: &str, v: &Option<Vec<usize>>) -> Result<Vec<usize>> {
    let mut v = v
        .clone()
        .ok_or_else(|| Error::validation(format!("--{name} is required")))?;
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

fn cmd_chi(mc: &MemoryChannel, cfg: &RunConfig) -> Result<String> {
    let points = cfg.grid.unwrap_or(DEFAULT_SWEEP_GRID);
    let mut rows = Vec::new();
    for (branch, ch) in mc.branches().iter().enumerate() {
        let gamma = ch.gamma().ok_or_else(|| {
            Error::validation(format!("`chi` needs amplitude-damping branches; branch {branch} is not"))
        })?;
        for k in 0..points {
            let a = k as f64 / (points - 1) as f64;
            rows.push(ChiRow {
                branch,
                gamma,
                a,
                chi: chi_ad_mirror(gamma, a)?,
            });
        }
    }
    match cfg.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let mut out = String::from("branch,gamma,a,chi_bits\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{}", r.branch, fmt_sig(r.gamma), fmt_sig(r.a), fmt_sig(r.chi));
            }
            Ok(out)
        }
    }
}

fn cmd_amax(mc: &MemoryChannel, solver: &dyn BranchSolver, cfg: &RunConfig) -> Result<String> {
    let rows = (0..mc.len())
        .map(|i| {
            let s = solver.supremum(i)?;
            Ok(AmaxRow {
                branch: i,
                gamma: mc.branches()[i].gamma(),
                a_max: s.a_max,
                chi_star: s.chi_star,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match cfg.format {
        Format::Json => to_json(&rows),
        Format::Csv => {
            let opt = |x: Option<f64>| x.map(fmt_sig).unwrap_or_default();
            let mut out = String::from("branch,gamma,a_max,chi_star_bits\n");
            for r in &rows {
                let _ = writeln!(out, "{},{},{},{}", r.branch, opt(r.gamma), opt(r.a_max), fmt_sig(r.chi_star));
            }
            Ok(out)
        }
    }
}

fn cmd_scale(scales: &PeriodicScales<'_>, cfg: &RunConfig) -> Result<String> {
    let r = cfg.r.ok_or_else(|| Error::validation("--r is required"))?;
    let e = scales.scale(r)?;
    let step = StaircaseStep {
        r,
        value: e.value,
        subset: e.best_subset,
        error_threshold: 1.0 - r as f64 / scales.period() as f64,
    };
    match cfg.format {
        Format::Json => to_json(&step),
        Format::Csv => Ok(staircase_csv(&[step])),
    }
}

fn cmd_random_scale(scales: &RandomScales<'_>, cfg: &RunConfig) -> Result<String> {
    match &cfg.delta {
        Some(_) => {
            let e = scales.delta(&sorted_indices("delta", &cfg.delta)?)?;
            match cfg.format {
                Format::Json => to_json(&e),
                Format::Csv => Ok(crate::scales::RandomScaleReport { per_subset: vec![e] }.to_csv()),
            }
        }
        None => {
            let report = scales.report()?;
            match cfg.format {
                Format::Json => to_json(&report),
                Format::Csv => Ok(report.to_csv()),
            }
        }
    }
}

fn cmd_staircase(mc: &MemoryChannel, solver: &dyn BranchSolver, cfg: &RunConfig) -> Result<String> {
    match &cfg.rate {
        None => {
            require_periodic(mc, "staircase")?;
            let steps = PeriodicScales::new(solver)?.staircase()?;
            match cfg.format {
                Format::Json => to_json(&steps),
                Format::Csv => Ok(staircase_csv(&steps)),
            }
        }
        Some(rates) => {
            let m = model(mc, solver, "staircase")?;
            let rows = empirical_staircase(&m, rates, cfg.trials, cfg.seed)?;
            match cfg.format {
                Format::Json => to_json(&rows),
                Format::Csv => Ok(staircase_rows_csv(&rows)),
            }
        }
    }
}

fn cmd_simulate(mc: &MemoryChannel, solver: &dyn BranchSolver, cfg: &RunConfig) -> Result<String> {
    let rate = match cfg.rate.as_deref() {
        Some([r]) => *r,
        _ => return Err(Error::validation("`simulate` needs exactly one --rate")),
    };
    let subset = sorted_indices("subset", &cfg.subset)?;
    let m = model(mc, solver, "simulate")?;
    let strategy = Strategy::new(subset, rate)?;
    let threshold = m.subset_value(&strategy.target_subset)?;
    let run = run_trials(&m, &strategy, cfg.trials, cfg.seed)?;
    let summary = SimulationSummary {
        subset: strategy.target_subset,
        rate,
        threshold,
        n_trials: cfg.trials,
        seed: cfg.seed,
        empirical_error: run.empirical_error,
        average_error: run.average_error,
        empirical_max_branch_error: run.empirical_max_branch_error,
        max_branch_error: run.max_branch_error,
    };
    match cfg.format {
        Format::Json => to_json(&summary),
        Format::Csv => Ok(format!(
            "subset,rate_bits,threshold_bits,n_trials,seed,empirical_error,average_error,empirical_max_branch_error,max_branch_error\n{},{},{},{},{},{},{},{},{}\n",
            fmt_subset(&summary.subset),
            fmt_sig(summary.rate),
            fmt_sig(summary.threshold),
            summary.n_trials,
            summary.seed,
            fmt_sig(summary.empirical_error),
            fmt_sig(summary.average_error),
            fmt_sig(summary.empirical_max_branch_error),
            fmt_sig(summary.max_branch_error),
        )),
    }
}

/// Runs one command and returns the rendered report.
pub fn run(cfg: &RunConfig) -> Result<String> {
    cfg.validate()?;
    if cfg.command == Command::AppendixA {
        let rows = cmd_appendix_a(cfg.step, cfg.tol)?;
        return match cfg.format {
            Format::Json => to_json(&rows),
            Format::Csv => Ok(appendix_csv(&rows)),
        };
    }
    let path = cfg
        .spec_path
        .as_deref()
        .ok_or_else(|| Error::validation("a channel-spec path is required"))?;
    let mc = ChannelSpec::load(path)?.build()?;
    if cfg.command == Command::Chi {
        return cmd_chi(&mc, cfg);
    }
    let solver = branch_solver(mc.branches(), cfg.tol, cfg.sphere_grid())?;
    let solver = solver.as_ref();
    match cfg.command {
        Command::Amax => cmd_amax(&mc, solver, cfg),
        Command::Capacity => {
            require_periodic(&mc, "capacity")?;
            let report = PeriodicScales::new(solver)?.report()?;
            match cfg.format {
                Format::Json => to_json(&report),
                Format::Csv => Ok(report.to_csv()),
            }
        }
        Command::Scale => {
            require_periodic(&mc, "scale")?;
            cmd_scale(&PeriodicScales::new(solver)?, cfg)
        }
        Command::RandomScale => {
            let q = require_random(&mc, "random-scale")?;
            cmd_random_scale(&RandomScales::new(solver, q)?, cfg)
        }
        Command::Staircase => cmd_staircase(&mc, solver, cfg),
        Command::Simulate => cmd_simulate(&mc, solver, cfg),
        Command::Chi | Command::AppendixA => unreachable!("handled above"),
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Runs `cfg` and returns the process exit status; failures print one line
/// to standard error.
pub fn cmd_dispatch(cfg: &RunConfig) -> i32 {
    match run(cfg).and_then(|text| emit(cfg, &text)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("qmemcap: {e}");
            e.exit_code()
        }
    }
}
