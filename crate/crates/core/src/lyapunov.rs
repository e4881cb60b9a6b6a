//! Trajectory simulation with per-step renormalization, partial Lyapunov
//! exponents and Monte-Carlo exponents under random switching.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{co_norm, operator_norm, vec_norm, SystemSpec};
use crate::spectral::{BoundsTable, CoBoundsTable};
use crate::symbolic::LawProgram;

/// Default gap between limsup and liminf estimates that flags irregularity.
pub const DEFAULT_IRREGULARITY_TOL: f64 = 1e-2;

/// Renormalized state stored at a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub n: u64,
    /// `x_n / ‖x_n‖`
    pub state: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub x0: Vec<f64>,
    pub law_id: String,
    pub horizon: u64,
    /// `log ‖x0‖`
    pub log_norm0: f64,
    /// `log ‖x_n‖` for `n = 1..=horizon`, natural log
    pub log_norms: Vec<f64>,
    /// `(1/n) log ‖x_n‖`
    pub partial_exponents: Vec<f64>,
    /// states at `n = 1, 2, 4, …` and at the horizon
    pub checkpoints: Vec<Checkpoint>,
}

impl TrajectoryRecord {
    /// Unit state at the horizon.
    pub fn final_state(&self) -> &[f64] {
        &self.checkpoints.last().expect("horizon >= 1").state
    }

    /// `‖x_n‖`; may overflow for long trajectories.
    pub fn norm_at(&self, n: u64) -> Option<f64> {
        self.log_norms.get((n as usize).checked_sub(1)?).map(|l| l.exp())
    }
}

/// `x_n = S_{σ(n)} x_{n−1}` with the state rescaled to unit length each step
/// and the scale accumulated in log form.
pub fn simulate(sys: &SystemSpec, law: &LawProgram, x0: &[f64], horizon: u64) -> Result<TrajectoryRecord> {
    let symbols = law.symbols(horizon)?;
    crate::symbolic::check_symbols(&symbols, sys.k())?;
    simulate_symbols(sys, &symbols, x0, law.describe())
}

fn simulate_symbols(sys: &SystemSpec, symbols: &[u32], x0: &[f64], law_id: String) -> Result<TrajectoryRecord> {
    if x0.len() != sys.dim() {
        return Err(Error::Domain(format!("x0 has {} entries, system dimension is {}", x0.len(), sys.dim())));
    }
    let r0 = vec_norm(x0);
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(Error::Domain("x0 must be a nonzero finite vector".into()));
    }
    if symbols.is_empty() {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    let mut x: Vec<f64> = x0.iter().map(|v| v / r0).collect();
    let mut log = r0.ln();
    let mut log_norms = Vec::with_capacity(symbols.len());
    let mut partial = Vec::with_capacity(symbols.len());
    let mut checkpoints = Vec::new();
    let horizon = symbols.len() as u64;
    for (i, &s) in symbols.iter().enumerate() {
        let n = i as u64 + 1;
        x = sys.mat(s).mul_vec(&x);
        let r = vec_norm(&x);
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Numeric(format!("state degenerated at step {n} (norm {r})")));
        }
        for v in x.iter_mut() {
            *v /= r;
        }
        log += r.ln();
        log_norms.push(log);
        partial.push(log / n as f64);
        if n.is_power_of_two() || n == horizon {
            checkpoints.push(Checkpoint { n, state: x.clone() });
        }
    }
    Ok(TrajectoryRecord {
        x0: x0.to_vec(),
        law_id,
        horizon,
        log_norm0: r0.ln(),
        log_norms,
        partial_exponents: partial,
        checkpoints,
    })
}

/// Index set over which partial exponents are scanned.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailWindows {
    /// every `n` with `from ≤ n ≤ to`; the default is `[⌈N/2⌉, N]`
    Range { from: u64, to: u64 },
    Checkpoints { indices: Vec<u64> },
}

impl TailWindows {
    pub fn tail_half(horizon: u64) -> Self {
        TailWindows::Range { from: horizon.div_ceil(2).max(1), to: horizon }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub liminf_est: f64,
    pub liminf_at: u64,
    pub limsup_est: f64,
    pub limsup_at: u64,
    pub irregular: bool,
    pub irregularity_tol: f64,
    pub windows: TailWindows,
}

pub fn partial_exponents(rec: &TrajectoryRecord, windows: &TailWindows, irregularity_tol: f64) -> Result<ExponentSummary> {
    let indices: Vec<u64> = match windows {
        TailWindows::Range { from, to } => {
            if *from == 0 || from > to {
                return Err(Error::Domain(format!("empty window [{from}, {to}]")));
            }
            (*from..=*to).collect()
        }
        TailWindows::Checkpoints { indices } => indices.clone(),
    };
    if indices.is_empty() {
        return Err(Error::Domain("no window indices".into()));
    }
    let mut lo = (f64::INFINITY, 0);
    let mut hi = (f64::NEG_INFINITY, 0);
    for n in indices {
        let v = *rec
            .partial_exponents
            .get((n as usize).wrapping_sub(1))
            .ok_or(Error::Horizon { index: n, horizon: rec.horizon })?;
        if v < lo.0 {
            lo = (v, n);
        }
        if v > hi.0 {
            hi = (v, n);
        }
    }
    Ok(ExponentSummary {
        liminf_est: lo.0,
        liminf_at: lo.1,
        limsup_est: hi.0,
        limsup_at: hi.1,
        irregular: hi.0 - lo.0 > irregularity_tol,
        irregularity_tol,
        windows: windows.clone(),
    })
}

fn check_weights(k: usize, weights: &[f64]) -> Result<()> {
    if weights.len() != k {
        return Err(Error::Domain(format!("{} weights given for {k} symbols", weights.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Domain("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

/// Generator for one Monte-Carlo trial: the seed picks the generator, the
/// trial index picks an independent stream.
fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// The i.i.d. law of trial `trial`, followed by the trial's random unit initial state.
pub fn sample_trial(k: usize, dim: usize, weights: &[f64], horizon: u64, seed: u64, trial: u64) -> Result<(LawProgram, Vec<f64>)> {
    check_weights(k, weights)?;
    if horizon == 0 {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    let mut rng = trial_rng(seed, trial);
    let x0 = loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let n = vec_norm(&v);
        if n > 1e-12 {
            break v.iter().map(|x| x / n).collect::<Vec<f64>>();
        }
    };
    let dist = WeightedIndex::new(weights).map_err(|e| Error::Domain(format!("weights: {e}")))?;
    let symbols: Vec<u32> = (0..horizon).map(|_| dist.sample(&mut rng) as u32 + 1).collect();
    Ok((LawProgram::finite(&symbols)?, x0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
    pub horizon: u64,
    pub seed: u64,
    pub weights: Vec<f64>,
    /// per-trial `λ_N`
    pub estimates: Vec<f64>,
}

/// Mean and standard error of `λ_N` over `trials` independent i.i.d. laws.
pub fn random_switching_exponent(
    sys: &SystemSpec,
    weights: &[f64],
    trials: u64,
    horizon: u64,
    seed: u64,
) -> Result<MonteCarloSummary> {
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    check_weights(sys.k(), weights)?;
    let estimates: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let (law, x0) = sample_trial(sys.k(), sys.dim(), weights, horizon, seed, t)?;
            let rec = simulate(sys, &law, &x0, horizon)?;
            Ok(*rec.partial_exponents.last().expect("horizon >= 1"))
        })
        .collect::<Result<_>>()?;
    let m = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / m;
    let std_error = if estimates.len() > 1 {
        let var = estimates.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0);
        (var / m).sqrt()
    } else {
        0.0
    };
    Ok(MonteCarloSummary { mean, std_error, trials, horizon, seed, weights: weights.to_vec(), estimates })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentCheck {
    pub index: usize,
    pub horizon: u64,
    pub lambda: f64,
    pub slack: f64,
    pub lower: f64,
    pub upper: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// `log` of the best co-radius lower bound
    pub log_co_lower: f64,
    /// `log` of the best radius upper bound
    pub log_upper: f64,
    /// single-step ratio bound entering the slack
    pub kappa: f64,
    pub block_length: usize,
    pub checks: Vec<ExponentCheck>,
    pub violations: usize,
}

/// Every `λ_N` must lie in `[log ρ̂_co⁻ − s, log ρ̂⁺ + s]` with
/// `s = (n*·log κ + |log ‖x0‖|)/N`, where `n*` is the block length of the
/// bounds used and `κ` bounds how far a single step can depart from them.
pub fn exponent_vs_jsr_bounds(
    sys: &SystemSpec,
    records: &[TrajectoryRecord],
    bounds: &BoundsTable,
    cobounds: &CoBoundsTable,
) -> Result<ConsistencyReport> {
    let upper = bounds.best_upper;
    let n_up = bounds.best_upper_n;
    let (n_lo, co_lower) = cobounds
        .rows
        .iter()
        .map(|r| (r.n, r.lower))
        .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    if n_up == 0 || n_lo == 0 {
        return Err(Error::Domain("empty bounds tables".into()));
    }
    let max_step = sys.matrices().iter().map(operator_norm).fold(0.0, f64::max);
    let min_step = sys.matrices().iter().map(co_norm).fold(f64::INFINITY, f64::min);
    let kappa = (max_step / upper).max(co_lower / min_step).max(1.0);
    let block = n_up.max(n_lo);
    let (lo, hi) = (co_lower.ln(), upper.ln());
    let mut checks = Vec::new();
    for (i, rec) in records.iter().enumerate() {
        let n = rec.horizon;
        let lambda = *rec.partial_exponents.last().expect("nonempty record");
        let slack = (block as f64 * kappa.ln() + rec.log_norm0.abs()) / n as f64;
        let eps = 1e-9;
        let within = lambda >= lo - slack - eps && lambda <= hi + slack + eps;
        checks.push(ExponentCheck { index: i, horizon: n, lambda, slack, lower: lo - slack, upper: hi + slack, within });
    }
    let violations = checks.iter().filter(|c| !c.within).count();
    Ok(ConsistencyReport { log_co_lower: lo, log_upper: hi, kappa, block_length: block, checks, violations })
}
