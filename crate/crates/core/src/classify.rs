//! Balde–Jouan classification of switching laws by their constant runs, and
//! the finite-horizon stability check for nonchaotic laws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ScaledMat, SystemSpec};
use crate::symbolic::LawProgram;

/// A maximal constant run `σ(start) = … = σ(start + length − 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Run {
    pub start: u64,
    pub length: u64,
    /// reaches the horizon, so it may continue past it
    pub open: bool,
}

/// Longest completed run recorded by the end of a dyadic window `[2^j, 2^{j+1})`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub j: u32,
    pub end: u64,
    pub record: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolRuns {
    pub symbol: u32,
    pub runs: Vec<Run>,
    pub envelope: Vec<WindowRecord>,
    /// the record at every window strictly exceeds the record two windows earlier
    pub growing: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunProfile {
    pub horizon: u64,
    pub symbols: Vec<SymbolRuns>,
}

impl RunProfile {
    pub fn symbol(&self, s: u32) -> Option<&SymbolRuns> {
        self.symbols.iter().find(|r| r.symbol == s)
    }

    pub fn max_run(&self) -> u64 {
        self.symbols.iter().flat_map(|s| s.runs.iter().map(|r| r.length)).max().unwrap_or(0)
    }
}

/// Fewest complete dyadic windows for which growth is assessed.
const MIN_WINDOWS: usize = 4;

/// Maximal-run decomposition of `σ(1..=horizon)`, grouped per symbol.
pub fn bj_run_profile(law: &LawProgram, horizon: u64) -> Result<RunProfile> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    let symbols = law.symbols(horizon)?;
    let mut by_symbol: Vec<SymbolRuns> = Vec::new();
    let mut i = 0usize;
    while i < symbols.len() {
        let s = symbols[i];
        let mut j = i + 1;
        while j < symbols.len() && symbols[j] == s {
            j += 1;
        }
        let run = Run { start: i as u64 + 1, length: (j - i) as u64, open: j == symbols.len() };
        match by_symbol.iter_mut().find(|r| r.symbol == s) {
            Some(r) => r.runs.push(run),
            None => by_symbol.push(SymbolRuns { symbol: s, runs: vec![run], envelope: Vec::new(), growing: false }),
        }
        i = j;
    }
    by_symbol.sort_by_key(|r| r.symbol);
    for sr in &mut by_symbol {
        sr.envelope = envelope(&sr.runs, horizon);
        sr.growing = sr.envelope.len() >= MIN_WINDOWS
            && sr.envelope.windows(3).all(|w| w[2].record > w[0].record);
    }
    Ok(RunProfile { horizon, symbols: by_symbol })
}

fn envelope(runs: &[Run], horizon: u64) -> Vec<WindowRecord> {
    let mut out = Vec::new();
    let mut j = 0u32;
    loop {
        let end = (1u64 << (j + 1)) - 1;
        if end > horizon {
            break;
        }
        let record = runs
            .iter()
            .filter(|r| !r.open && r.start + r.length - 1 <= end)
            .map(|r| r.length)
            .max()
            .unwrap_or(0);
        out.push(WindowRecord { j, end, record });
        j += 1;
        if j >= 63 {
            break;
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum BjVerdict {
    /// eventually constant
    NonchaoticCertified,
    /// eventually periodic with a nontrivial period: runs are bounded
    ChaoticCertified { period: Vec<u32> },
    /// some symbol has arbitrarily long, arbitrarily late runs over the horizon
    CandidateNonchaotic { growing_symbols: Vec<u32>, horizon: u64 },
    Undetermined { max_run: u64, horizon: u64 },
}

/// Eventually periodic laws are decided exactly; others from run evidence.
pub fn bj_verdict(law: &LawProgram, horizon: u64) -> Result<BjVerdict> {
    if let LawProgram::Periodic(p) = law {
        let c = p.canonical();
        return Ok(if c.is_eventually_constant() {
            BjVerdict::NonchaoticCertified
        } else {
            BjVerdict::ChaoticCertified { period: c.period.symbols().to_vec() }
        });
    }
    let profile = bj_run_profile(law, horizon)?;
    let growing: Vec<u32> = profile.symbols.iter().filter(|s| s.growing).map(|s| s.symbol).collect();
    Ok(if growing.is_empty() {
        BjVerdict::Undetermined { max_run: profile.max_run(), horizon }
    } else {
        BjVerdict::CandidateNonchaotic { growing_symbols: growing, horizon }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonchaoticStability {
    pub pass: bool,
    pub delta: f64,
    /// first `n` with `‖S_{σ(n)}⋯S_{σ(1)}‖ ≤ δ`
    pub crossing: Option<u64>,
    /// every later norm stays at or below the norm at the crossing
    pub running_max_flat: bool,
    /// every later norm stays at or below `δ`
    pub stays_below: bool,
    pub final_log_norm: f64,
    pub horizon: u64,
}

/// Passes when the product norm drops to `δ` and never rises above the
/// value it had at that first crossing.
pub fn stability_under_nonchaotic(sys: &SystemSpec, law: &LawProgram, horizon: u64, delta: f64) -> Result<NonchaoticStability> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("δ must lie in (0, 1), got {delta}")));
    }
    let symbols = law.symbols(horizon)?;
    crate::symbolic::check_symbols(&symbols, sys.k())?;
    let log_delta = delta.ln();
    let mut acc = ScaledMat::identity(sys.dim());
    let mut crossing: Option<(u64, f64)> = None;
    let (mut flat, mut below) = (true, true);
    let mut last = 0.0;
    for (i, &s) in symbols.iter().enumerate() {
        acc.left_mul(sys.mat(s));
        let l = acc.log_norm();
        last = l;
        match crossing {
            None if l <= log_delta => crossing = Some((i as u64 + 1, l)),
            None => {}
            Some((_, at)) => {
                flat &= l <= at;
                below &= l <= log_delta;
            }
        }
    }
    Ok(NonchaoticStability {
        pass: crossing.is_some() && flat,
        delta,
        crossing: crossing.map(|c| c.0),
        running_max_flat: crossing.is_some() && flat,
        stays_below: crossing.is_some() && below,
        final_log_norm: last,
        horizon,
    })
}
