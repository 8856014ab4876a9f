//! Estimation of the dependence parameter from count tables.
//!
//! With the root observed the maximum-likelihood estimate is closed form.
//! With the root hidden, two and three leaves still admit closed forms; in
//! general a moment estimate seeds an EM iteration whose E- and M-steps
//! collapse into a single update of `rho`.

use serde::Serialize;

use crate::counts::CountTable;
use crate::dependence::csd;
use crate::error::{domain, Error, Result};
use crate::model::{rho_to_alpha, root_posterior, stats_unchecked, ModelSpec};

/// Upper cap for latent-root estimates that run into `rho = 1`.
pub const RHO_CAP: f64 = 1.0 - 1e-9;

/// Floor for the EM starting value; `rho = 0` is a fixed point of the update.
pub const EM_INIT_FLOOR: f64 = 0.01;

/// Conditions noted while computing an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    /// The raw estimate was negative and has been set to zero.
    ClampedToZero,
    /// The raw estimate reached one and has been capped just below it.
    Boundary,
    /// The data carry no evidence of dependence; `rho` (and its sign) cannot
    /// be recovered.
    NonIdentifiable,
    /// EM stopped at `max_iterations` before meeting the tolerance.
    MaxIterations,
}

/// A point estimate with every derived quantity computed from `rho` by the
/// same closed maps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub rho: f64,
    pub rho_squared: f64,
    pub alpha: f64,
    pub flags: Vec<Flag>,
}

impl Estimate {
    fn from_rho(rho: f64, flags: Vec<Flag>) -> Self {
        Self {
            rho,
            rho_squared: rho * rho,
            alpha: rho_to_alpha(rho).expect("estimates are kept in [0, 1)"),
            flags,
        }
    }

    /// Keeps the squared value as computed rather than re-squaring `rho`.
    fn from_rho_squared(rho_squared: f64, flags: Vec<Flag>) -> Self {
        let rho = rho_squared.sqrt();
        Self {
            rho_squared,
            ..Self::from_rho(rho, flags)
        }
    }

    pub fn has(&self, flag: Flag) -> bool {
        self.flags.contains(&flag)
    }

    pub fn odds_ratio(&self) -> f64 {
        self.alpha * self.alpha
    }

    pub fn relative_chance(&self) -> f64 {
        self.alpha
    }

    pub fn chance_difference(&self) -> f64 {
        self.rho
    }

    /// Two-factor leaf-root log-linear term, `log(alpha) / 2`.
    pub fn loglinear_two_factor(&self) -> f64 {
        0.5 * self.alpha.ln()
    }
}

fn nonempty_total(counts: &CountTable) -> Result<f64> {
    let n = counts.total();
    if !(n > 0.0) {
        return domain("the count table is empty");
    }
    Ok(n)
}

fn require_leaf_table(counts: &CountTable) -> Result<()> {
    if counts.root_observed() {
        return domain("expected a leaf-only table (root hidden)");
    }
    Ok(())
}

/// Clamps a raw estimate of `rho^2` into `[0, RHO_CAP^2]`.
fn clamp_squared(raw: f64) -> (f64, Vec<Flag>) {
    if raw <= 0.0 {
        let mut flags = vec![Flag::NonIdentifiable];
        if raw < 0.0 {
            flags.insert(0, Flag::ClampedToZero);
        }
        (0.0, flags)
    } else if raw >= RHO_CAP * RHO_CAP {
        (RHO_CAP * RHO_CAP, vec![Flag::Boundary])
    } else {
        (raw, Vec::new())
    }
}

/// Closed-form maximum-likelihood estimate with the root observed: the mean
/// over leaves of the leaf-root cross-sum differences.
pub fn mle_observed(counts: &CountTable) -> Result<Estimate> {
    if !counts.root_observed() {
        return domain("mle_observed needs the root column");
    }
    nonempty_total(counts)?;
    let q = counts.leaves();
    let mut sum = 0.0;
    for leaf in 0..q {
        sum += csd(&counts.pair_margin(leaf, q)?)?;
    }
    let raw = sum / q as f64;
    Ok(if raw < 0.0 {
        Estimate::from_rho(0.0, vec![Flag::ClampedToZero, Flag::NonIdentifiable])
    } else if raw >= 1.0 {
        // largest double below one
        Estimate::from_rho(1.0 - f64::EPSILON / 2.0, vec![Flag::Boundary])
    } else if raw == 0.0 {
        Estimate::from_rho(0.0, vec![Flag::NonIdentifiable])
    } else {
        Estimate::from_rho(raw, Vec::new())
    })
}

/// Uncentered second moment of the leaf mean in -1/1 coding,
/// `sum_t n_t s_t^2 / (n Q^2)`.
pub fn leaf_mean_second_moment(counts: &CountTable) -> Result<f64> {
    let n = nonempty_total(counts)?;
    let q = counts.leaves();
    let by_ones = counts_by_ones(counts);
    let weighted: f64 = by_ones
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let s = 2.0 * k as f64 - q as f64;
            c * s * s
        })
        .sum();
    Ok(weighted / (n * (q * q) as f64))
}

/// Unclamped moment estimate of `rho^2`, `(Q v - 1) / (Q - 1)`.
pub fn mom_raw(counts: &CountTable) -> Result<f64> {
    let q = counts.leaves();
    if q < 2 {
        return Err(Error::NonIdentifiable(
            "a single leaf carries no information on rho".into(),
        ));
    }
    let v = leaf_mean_second_moment(counts)?;
    Ok((q as f64 * v - 1.0) / (q as f64 - 1.0))
}

/// Method-of-moments estimate from the variance identity
/// `Q Var(mean) = 1 + (Q - 1) rho^2`.
pub fn mom_estimate(counts: &CountTable) -> Result<Estimate> {
    require_leaf_table(counts)?;
    let (sq, flags) = clamp_squared(mom_raw(counts)?);
    Ok(Estimate::from_rho_squared(sq, flags))
}

/// Closed-form latent-root MLE for two or three leaves: `rho^2` is the
/// (mean) cross-sum difference over leaf pairs.
pub fn closed_form_latent(counts: &CountTable) -> Result<Estimate> {
    require_leaf_table(counts)?;
    let q = counts.leaves();
    if !(2..=3).contains(&q) {
        return Err(Error::Unsupported(format!(
            "no closed form for {q} leaves; use em_fit"
        )));
    }
    nonempty_total(counts)?;
    let mut sum = 0.0;
    let mut pairs = 0;
    for a in 0..q {
        for b in a + 1..q {
            sum += csd(&counts.pair_margin(a, b)?)?;
            pairs += 1;
        }
    }
    let (sq, flags) = clamp_squared(sum / pairs as f64);
    Ok(Estimate::from_rho_squared(sq, flags))
}

/// Counts aggregated by the number of leaves at level 1.
fn counts_by_ones(counts: &CountTable) -> Vec<f64> {
    let q = counts.leaves();
    let mut out = vec![0.0; q + 1];
    for (t, &c) in counts.counts().iter().enumerate() {
        out[stats_unchecked(t, q).ones as usize] += c;
    }
    out
}

/// `log pi(a)` for a leaf pattern with `ones` leaves at level 1, from the
/// product form so that no power of `alpha` is formed.
fn log_leaf_prob(ln_agree: f64, ln_disagree: f64, leaves: usize, ones: usize) -> f64 {
    let k = ones as f64;
    let rest = (leaves - ones) as f64;
    let x = k * ln_agree + rest * ln_disagree;
    let y = k * ln_disagree + rest * ln_agree;
    let hi = x.max(y);
    let lo = x.min(y);
    let lse = if lo == f64::NEG_INFINITY {
        hi
    } else {
        hi + (lo - hi).exp().ln_1p()
    };
    lse - (leaves + 1) as f64 * std::f64::consts::LN_2
}

fn loglik_by_ones(rho: f64, by_ones: &[f64]) -> f64 {
    let q = by_ones.len() - 1;
    let ln_agree = rho.ln_1p();
    let ln_disagree = (-rho).ln_1p();
    by_ones
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0.0)
        .map(|(k, &c)| c * log_leaf_prob(ln_agree, ln_disagree, q, k))
        .sum()
}

/// Marginal log-likelihood of a leaf-only table, `sum_t n_t log pi(a_t; rho)`.
pub fn loglik(rho: f64, counts: &CountTable) -> Result<f64> {
    require_leaf_table(counts)?;
    if !(0.0..1.0).contains(&rho) {
        return domain(format!("rho must lie in [0, 1), got {rho}"));
    }
    Ok(loglik_by_ones(rho, &counts_by_ones(counts)))
}

/// Brute-force maximizer of [`loglik`] over `{0, step, 2 step, ...} ∩ [0, 1)`.
pub fn grid_mle_oracle(counts: &CountTable, step: f64) -> Result<f64> {
    require_leaf_table(counts)?;
    if !(step > 0.0 && step <= 0.01) {
        return domain(format!("grid step must lie in (0, 0.01], got {step}"));
    }
    let by_ones = counts_by_ones(counts);
    let points = (1.0 / step).ceil() as usize;
    let mut best = (0.0, loglik_by_ones(0.0, &by_ones));
    for i in 1..points {
        let rho = i as f64 * step;
        if rho >= 1.0 {
            break;
        }
        let ll = loglik_by_ones(rho, &by_ones);
        if ll > best.1 {
            best = (rho, ll);
        }
    }
    Ok(best.0)
}

/// `s (alpha^s - 1) / (alpha^s + 1)`, evaluated as
/// `|s| tanh(|s| log(alpha) / 2)`; even in `s` and never negative.
pub fn t_term(alpha: f64, s: i32) -> f64 {
    debug_assert!(alpha >= 1.0);
    t_term_log(alpha.ln(), s)
}

#[inline]
fn t_term_log(log_alpha: f64, s: i32) -> f64 {
    let a = s.unsigned_abs() as f64;
    a * (0.5 * a * log_alpha).tanh()
}

/// E-step: splits each leaf count between the two root levels by the
/// conditional distribution of the root under `spec`.
pub fn em_estep(spec: &ModelSpec, counts: &CountTable) -> Result<CountTable> {
    require_leaf_table(counts)?;
    let q = counts.leaves();
    if spec.leaves() != q {
        return domain("model and table disagree on the number of leaves");
    }
    let half = 1usize << q;
    let mut out = vec![0.0; 2 * half];
    for (t, &n) in counts.counts().iter().enumerate() {
        let s = stats_unchecked(t, q).leaf_sum;
        let (weak, strong) = root_posterior(spec.alpha(), s);
        out[t + half] = n * strong;
        out[t] = n - out[t + half];
        debug_assert!((out[t] - n * weak).abs() <= 1e-9 * n.max(1.0));
    }
    CountTable::new(q, true, out)
}

/// M-step on a complete table: `sum_t s_t (n(a_t, 1) - n(a_t, 0)) / (n Q)`.
pub fn em_mstep(pseudo: &CountTable) -> Result<f64> {
    if !pseudo.root_observed() {
        return domain("em_mstep needs root-level pseudo-counts");
    }
    let n = nonempty_total(pseudo)?;
    let q = pseudo.leaves();
    let half = 1usize << q;
    let c = pseudo.counts();
    let sum: f64 = (0..half)
        .map(|t| stats_unchecked(t, q).leaf_sum as f64 * (c[t + half] - c[t]))
        .sum();
    Ok(sum / (n * q as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmConfig {
    /// Stop once `|rho(m+1) - rho(m)| < tolerance`.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starting value; the clamped moment estimate when absent.
    pub init: Option<f64>,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-4,
            max_iterations: 500,
            init: None,
        }
    }
}

impl EmConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EmStep {
    pub iteration: usize,
    pub rho: f64,
    pub alpha: f64,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmTrace {
    /// Step 0 holds the starting value.
    pub iterations: Vec<EmStep>,
    pub converged: bool,
    pub final_rho: f64,
    pub flags: Vec<Flag>,
}

impl EmTrace {
    /// Number of updates performed.
    pub fn updates(&self) -> usize {
        self.iterations.len() - 1
    }

    /// True when the log-likelihood never drops by more than `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.iterations
            .windows(2)
            .all(|w| w[1].loglik >= w[0].loglik - slack)
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::from_rho(self.final_rho, self.flags.clone())
    }
}

/// The single EM update `rho' = sum_t T_t n_t / (n Q)`, on counts grouped by
/// the number of ones.
fn em_update(rho: f64, by_ones: &[f64], n: f64) -> f64 {
    let q = by_ones.len() - 1;
    let log_alpha = rho.ln_1p() - (-rho).ln_1p();
    let sum: f64 = by_ones
        .iter()
        .enumerate()
        .map(|(k, &c)| c * t_term_log(log_alpha, 2 * k as i32 - q as i32))
        .sum();
    sum / (n * q as f64)
}

/// Runs EM on a leaf-only table until the change in `rho` drops below the
/// tolerance.
pub fn em_fit(counts: &CountTable, config: &EmConfig) -> Result<EmTrace> {
    require_leaf_table(counts)?;
    if !(config.tolerance > 0.0) || config.max_iterations == 0 {
        return domain("EM needs a positive tolerance and at least one iteration");
    }
    let n = nonempty_total(counts)?;
    let raw = mom_raw(counts)?;
    let mut flags = Vec::new();
    let start = match config.init {
        Some(r) if r > 0.0 && r < 1.0 => r,
        Some(r) => return domain(format!("EM start must lie in (0, 1), got {r}")),
        None => clamp_squared(raw).0.sqrt().max(EM_INIT_FLOOR),
    };
    let by_ones = counts_by_ones(counts);
    let record = |iteration: usize, rho: f64| EmStep {
        iteration,
        rho,
        alpha: rho_to_alpha(rho).expect("rho kept in [0, 1)"),
        loglik: loglik_by_ones(rho, &by_ones),
    };

    let mut rho = start;
    let mut iterations = vec![record(0, rho)];
    let mut converged = false;
    for m in 1..=config.max_iterations {
        let mut next = em_update(rho, &by_ones, n);
        if !next.is_finite() {
            return Err(Error::Numerical(format!("EM update at step {m} is {next}")));
        }
        if next >= RHO_CAP {
            next = RHO_CAP;
            if !flags.contains(&Flag::Boundary) {
                flags.push(Flag::Boundary);
            }
        }
        iterations.push(record(m, next));
        let change = (next - rho).abs();
        rho = next;
        if change < config.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        flags.push(Flag::MaxIterations);
    }

    let mut final_rho = rho;
    if loglik_by_ones(0.0, &by_ones) >= loglik_by_ones(rho, &by_ones) {
        // Independence fits at least as well; the iteration only creeps
        // towards zero from the floor.
        final_rho = 0.0;
        if raw < 0.0 {
            flags.push(Flag::ClampedToZero);
        }
        flags.push(Flag::NonIdentifiable);
    }
    Ok(EmTrace {
        iterations,
        converged,
        final_rho,
        flags,
    })
}
