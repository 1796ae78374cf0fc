//! One-dimensional concave maximisation and root finding, plus the
//! mirror-pair objectives built on them.

pub mod ensemble;

pub use ensemble::{
    brute_force_ensemble_search, brute_force_ensemble_search_with, EnsembleSearch, GenericSolver,
    SearchConfig,
};

use crate::error::{Error, Result};
use crate::holevo::chi_ad_mirror;

/// Default tolerance on the maximising argument.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Smallest tolerance accepted by the scalar searches.
pub const MIN_TOL: f64 = 1e-12;

/// Search window for mirror-pair maximisation. The optimum sits at `a ≥ ½`;
/// the right edge stays off the derivative singularity at `a = 1`.
pub const AD_SEARCH_LO: f64 = 0.5 - 1e-3;
pub const AD_SEARCH_HI: f64 = 1.0 - 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptResult {
    pub argmax: f64,
    pub value: f64,
    pub iterations: usize,
    /// Half-width of the final bracket around `argmax`.
    pub achieved_tol: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

fn eval(f: &impl Fn(f64) -> f64, x: f64) -> Result<f64> {
    let y = f(x);
    if !y.is_finite() {
        return Err(Error::Numerical(format!("objective is {y} at {x}")));
    }
    Ok(y)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(tol >= MIN_TOL) || !tol.is_finite() {
        return Err(Error::validation(format!("tolerance {tol} below {MIN_TOL:e}")));
    }
    Ok(())
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// When every evaluation returns the same value the function is treated as
/// flat and the interval midpoint is reported.
pub fn maximize_concave_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<OptResult> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::validation(format!("invalid interval [{lo}, {hi}]")));
    }
    check_tol(tol)?;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(&f, x1)?;
    let mut f2 = eval(&f, x2)?;
    let reference = f1;
    let mut flat = f1 == f2;
    let mut iterations = 0;
    while 0.5 * (b - a) > tol {
        iterations += 1;
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(&f, x2)?;
            flat &= f2 == reference;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(&f, x1)?;
            flat &= f1 == reference;
        }
    }
    let argmax = if flat { 0.5 * (lo + hi) } else { 0.5 * (a + b) };
    Ok(OptResult {
        argmax,
        value: eval(&f, argmax)?,
        iterations,
        achieved_tol: 0.5 * (b - a),
    })
}

/// Bisection for a sign change of `g` on `[lo, hi]`.
pub fn find_root_bisection(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::validation(format!("invalid interval [{lo}, {hi}]")));
    }
    check_tol(tol)?;
    let (mut a, mut b) = (lo, hi);
    let mut ga = eval(&g, a)?;
    let gb = eval(&g, b)?;
    if ga == 0.0 {
        return Ok(a);
    }
    if gb == 0.0 {
        return Ok(b);
    }
    if ga.signum() == gb.signum() {
        return Err(Error::Bracketing { lo, hi });
    }
    while b - a > tol {
        let mid = 0.5 * (a + b);
        let gm = eval(&g, mid)?;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == ga.signum() {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

fn check_gammas(gammas: &[f64]) -> Result<()> {
    if gammas.is_empty() {
        return Err(Error::validation("no damping parameters given"));
    }
    if let Some(g) = gammas.iter().find(|g| !(0.0..=1.0).contains(*g)) {
        return Err(Error::validation(format!("gamma = {g} outside [0, 1]")));
    }
    Ok(())
}

/// Maximises `a ↦ Σ w_i χ(γ_i, a)` over the mirror-pair parameter.
pub fn maximize_chi_sum(gammas: &[f64], weights: &[f64], tol: f64) -> Result<OptResult> {
    check_gammas(gammas)?;
    if weights.len() != gammas.len() {
        return Err(Error::validation("gammas and weights differ in length"));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::validation("weights must be nonnegative"));
    }
    maximize_concave_1d(
        |a| {
            gammas
                .iter()
                .zip(weights)
                .filter(|(_, &w)| w > 0.0)
                .map(|(&g, &w)| w * chi_ad_mirror(g, a).unwrap_or(f64::NAN))
                .sum()
        },
        AD_SEARCH_LO,
        AD_SEARCH_HI,
        tol,
    )
}

/// Maximises `a ↦ min_i χ(γ_i, a)`; a minimum of concave functions is concave.
pub fn maximize_chi_min(gammas: &[f64], tol: f64) -> Result<OptResult> {
    check_gammas(gammas)?;
    maximize_concave_1d(
        |a| {
            gammas
                .iter()
                .map(|&g| chi_ad_mirror(g, a).unwrap_or(f64::NAN))
                .fold(f64::INFINITY, f64::min)
        },
        AD_SEARCH_LO,
        AD_SEARCH_HI,
        tol,
    )
}

/// Mirror-pair supremum of a single amplitude-damping channel.
pub fn maximize_chi(gamma: f64, tol: f64) -> Result<OptResult> {
    maximize_chi_sum(&[gamma], &[1.0], tol)
}
