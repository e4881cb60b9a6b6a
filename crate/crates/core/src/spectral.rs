//! Joint spectral radius and co-radius bounds by word enumeration, plus the
//! certificates and probes built on the same enumeration.
//!
//! All searches visit words in (length, lexicographic) order and break ties
//! in favour of the earliest word, so results do not depend on how the work
//! is split across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{co_norm, jacobi_svd, operator_norm, spectral_radius, vec_norm, Mat, SystemSpec};
use crate::symbolic::Word;

/// Default cap on the number of word products evaluated by one search.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

/// Relative gap below which two values count as tied.
const TIE_REL: f64 = 1e-12;

/// Words per parallel work unit are grouped under prefixes of this many leaves.
const SPLIT_LEAVES: u64 = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumOptions {
    pub budget: u64,
}

impl Default for EnumOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET }
    }
}

/// Total number of words of lengths `1..=depth` over `k` symbols.
pub fn words_up_to(k: usize, depth: usize) -> u64 {
    let mut total: u64 = 0;
    let mut level: u64 = 1;
    for _ in 0..depth {
        level = level.saturating_mul(k as u64);
        total = total.saturating_add(level);
    }
    total
}

/// Largest depth `≤ n_max` whose full enumeration stays within `budget`.
pub fn max_depth_within_budget(k: usize, n_max: usize, budget: u64) -> usize {
    (0..=n_max).take_while(|&d| words_up_to(k, d) <= budget).last().unwrap_or(0)
}

/// Strictly larger beyond a relative tie band; an infinite `b` has no band.
fn exceeds(a: f64, b: f64) -> bool {
    if b.is_finite() { a > b + TIE_REL * b.abs() } else { a > b }
}

fn is_necklace(w: &[u32]) -> bool {
    let n = w.len();
    (1..n).all(|r| {
        for i in 0..n {
            let (x, y) = (w[i], w[(i + r) % n]);
            if x != y {
                return x < y;
            }
        }
        true
    })
}

/// Lexicographically smallest rotation.
fn least_rotation(w: &[u32]) -> Vec<u32> {
    let n = w.len();
    (0..n)
        .map(|r| w[r..].iter().chain(&w[..r]).copied().collect::<Vec<u32>>())
        .min()
        .expect("nonempty word")
}

#[derive(Clone, Debug)]
struct Ext {
    value: f64,
    word: Vec<u32>,
}

fn keep_max(slot: &mut Option<Ext>, value: f64, word: &[u32]) {
    match slot {
        Some(e) if !exceeds(value, e.value) => {}
        _ => *slot = Some(Ext { value, word: word.to_vec() }),
    }
}

fn keep_min(slot: &mut Option<Ext>, value: f64, word: &[u32]) {
    match slot {
        Some(e) if !exceeds(e.value, value) => {}
        _ => *slot = Some(Ext { value, word: word.to_vec() }),
    }
}

fn keep_first(slot: &mut Option<Ext>, value: f64, word: &[u32]) {
    if slot.is_none() {
        *slot = Some(Ext { value, word: word.to_vec() });
    }
}

#[derive(Clone, Copy, Default)]
struct Wants {
    rho: bool,
    conorm: bool,
    min_norm: bool,
    thresholds: bool,
}

/// Per-length extremes gathered during enumeration.
#[derive(Clone, Debug, Default)]
struct Level {
    max_norm: Option<Ext>,
    min_norm: Option<Ext>,
    max_conorm: Option<Ext>,
    min_conorm: Option<Ext>,
    /// over necklace representatives only
    max_rho: Option<Ext>,
    first_contract: Option<Ext>,
    first_expand: Option<Ext>,
}

impl Level {
    /// Fold in `later`, whose words all follow this level's words.
    fn absorb(&mut self, later: Level) {
        fn mx(a: &mut Option<Ext>, b: Option<Ext>) {
            if let Some(b) = b {
                keep_max(a, b.value, &b.word);
            }
        }
        fn mn(a: &mut Option<Ext>, b: Option<Ext>) {
            if let Some(b) = b {
                keep_min(a, b.value, &b.word);
            }
        }
        fn first(a: &mut Option<Ext>, b: Option<Ext>) {
            if a.is_none() {
                *a = b;
            }
        }
        mx(&mut self.max_norm, later.max_norm);
        mn(&mut self.min_norm, later.min_norm);
        mx(&mut self.max_conorm, later.max_conorm);
        mn(&mut self.min_conorm, later.min_conorm);
        mx(&mut self.max_rho, later.max_rho);
        first(&mut self.first_contract, later.first_contract);
        first(&mut self.first_expand, later.first_expand);
    }
}

struct Visitor<'a> {
    sys: &'a SystemSpec,
    wants: Wants,
    depth: usize,
}

impl Visitor<'_> {
    fn visit(&self, levels: &mut [Level], word: &[u32], prod: &Mat) -> Result<()> {
        let tol = self.sys.tol();
        let lvl = &mut levels[word.len() - 1];
        let norm = operator_norm(prod);
        keep_max(&mut lvl.max_norm, norm, word);
        if self.wants.min_norm {
            keep_min(&mut lvl.min_norm, norm, word);
        }
        if self.wants.thresholds && norm < 1.0 - tol {
            keep_first(&mut lvl.first_contract, norm, word);
        }
        if self.wants.conorm {
            let co = co_norm(prod);
            keep_max(&mut lvl.max_conorm, co, word);
            keep_min(&mut lvl.min_conorm, co, word);
            if self.wants.thresholds && co > 1.0 + tol {
                keep_first(&mut lvl.first_expand, co, word);
            }
        }
        if self.wants.rho && is_necklace(word) {
            keep_max(&mut lvl.max_rho, spectral_radius(prod)?, word);
        }
        Ok(())
    }

    fn dfs(&self, levels: &mut [Level], word: &mut Vec<u32>, prod: &Mat) -> Result<()> {
        self.visit(levels, word, prod)?;
        if word.len() == self.depth {
            return Ok(());
        }
        for s in 1..=self.sys.k() as u32 {
            let child = self.sys.mat(s).mul(prod);
            word.push(s);
            self.dfs(levels, word, &child)?;
            word.pop();
        }
        Ok(())
    }

    /// Visit every word of length `1..=depth`, splitting the tree at a fixed
    /// prefix length for parallel work.
    fn run(&self) -> Result<Vec<Level>> {
        let k = self.sys.k();
        let depth = self.depth;
        let mut levels = vec![Level::default(); depth];
        if depth == 0 {
            return Ok(levels);
        }
        let mut split = 1;
        while split < depth && (k as u64).saturating_pow(split as u32) < SPLIT_LEAVES {
            split += 1;
        }
        // shallow levels sequentially, in lexicographic order
        for len in 1..split {
            for word in words_of_length(k, len) {
                let prod = self.sys.product(&word)?;
                self.visit(&mut levels, &word, &prod)?;
            }
        }
        let prefixes = words_of_length(k, split);
        let chunks: Vec<Result<Vec<Level>>> = prefixes
            .into_par_iter()
            .map(|mut word| {
                let mut local = vec![Level::default(); depth];
                let prod = self.sys.product(&word)?;
                self.dfs(&mut local, &mut word, &prod)?;
                Ok(local)
            })
            .collect();
        for chunk in chunks {
            for (lvl, part) in levels.iter_mut().zip(chunk?) {
                lvl.absorb(part);
            }
        }
        Ok(levels)
    }
}

/// All words of length `len` in lexicographic order.
fn words_of_length(k: usize, len: usize) -> Vec<Vec<u32>> {
    let count = k.pow(len as u32);
    (0..count)
        .map(|mut idx| {
            let mut w = vec![0u32; len];
            for slot in w.iter_mut().rev() {
                *slot = (idx % k) as u32 + 1;
                idx /= k;
            }
            w
        })
        .collect()
}

fn enumerate(sys: &SystemSpec, n_max: usize, opts: &EnumOptions, wants: Wants) -> Result<(Vec<Level>, usize)> {
    if n_max == 0 {
        return Err(Error::Domain("enumeration depth must be at least 1".into()));
    }
    let depth = max_depth_within_budget(sys.k(), n_max, opts.budget);
    if depth == 0 {
        return Err(Error::Domain(format!(
            "budget {} does not cover even the {} words of length 1",
            opts.budget,
            sys.k()
        )));
    }
    let levels = Visitor { sys, wants, depth }.run()?;
    Ok((levels, depth))
}

fn word(v: &[u32]) -> Word {
    Word::new(v.to_vec()).expect("enumerated words are nonempty and 1-based")
}

fn ext_word(e: &Option<Ext>) -> Word {
    word(&e.as_ref().expect("every level has at least one word").word)
}

fn ext_value(e: &Option<Ext>) -> f64 {
    e.as_ref().expect("every level has at least one word").value
}

/// One word length of a [`BoundsTable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub n: usize,
    /// `max_{|w|=n} ‖S(w)‖^{1/n}`
    pub upper: f64,
    /// `max_{|w|=n} ρ(S(w))^{1/n}`
    pub lower: f64,
    pub witness_upper: Word,
    pub witness_lower: Word,
    /// running minimum of `upper` over rows `1..=n`
    pub best_upper: f64,
    /// running maximum of `lower` over rows `1..=n`
    pub best_lower: f64,
}

/// Two-sided joint spectral radius bounds per word length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsTable {
    pub rows: Vec<BoundsRow>,
    pub best_upper: f64,
    pub best_lower: f64,
    /// row where `best_upper` was first attained
    pub best_upper_n: usize,
    pub best_lower_n: usize,
    pub requested_depth: usize,
    /// deepest length enumerated exhaustively; less than requested when the budget ran out
    pub completed_depth: usize,
    pub evaluations: u64,
}

impl BoundsTable {
    pub fn is_partial(&self) -> bool {
        self.completed_depth < self.requested_depth
    }

    pub fn witness_lower(&self) -> &Word {
        &self.rows[self.best_lower_n - 1].witness_lower
    }

    pub fn witness_upper(&self) -> &Word {
        &self.rows[self.best_upper_n - 1].witness_upper
    }
}

pub fn jsr_bounds(sys: &SystemSpec, n_max: usize) -> Result<BoundsTable> {
    jsr_bounds_with(sys, n_max, &EnumOptions::default())
}

pub fn jsr_bounds_with(sys: &SystemSpec, n_max: usize, opts: &EnumOptions) -> Result<BoundsTable> {
    let wants = Wants { rho: true, ..Wants::default() };
    let (levels, depth) = enumerate(sys, n_max, opts, wants)?;
    Ok(bounds_from_levels(sys.k(), &levels, n_max, depth))
}

fn bounds_from_levels(k: usize, levels: &[Level], requested: usize, depth: usize) -> BoundsTable {
    let mut rows = Vec::with_capacity(depth);
    let (mut best_upper, mut best_lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut bu_n, mut bl_n) = (0, 0);
    for (i, lvl) in levels.iter().enumerate() {
        let n = i + 1;
        let root = 1.0 / n as f64;
        let upper = ext_value(&lvl.max_norm).powf(root);
        let lower = ext_value(&lvl.max_rho).powf(root);
        if bu_n == 0 || exceeds(best_upper, upper) {
            best_upper = upper;
            bu_n = n;
        }
        if bl_n == 0 || exceeds(lower, best_lower) {
            best_lower = lower;
            bl_n = n;
        }
        rows.push(BoundsRow {
            n,
            upper,
            lower,
            witness_upper: ext_word(&lvl.max_norm),
            witness_lower: ext_word(&lvl.max_rho),
            best_upper,
            best_lower,
        });
    }
    BoundsTable {
        rows,
        best_upper,
        best_lower,
        best_upper_n: bu_n,
        best_lower_n: bl_n,
        requested_depth: requested,
        completed_depth: depth,
        evaluations: words_up_to(k, depth),
    }
}

/// One word length of a [`CoBoundsTable`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoBoundsRow {
    pub n: usize,
    /// `min_{|w|=n} ‖S(w)‖_co^{1/n}`, obtained from the inverse system
    pub lower: f64,
    /// `min_{|w|=n} ρ_co(S(w))^{1/n}`, obtained from the inverse system
    pub upper: f64,
    pub witness_lower: Word,
    pub witness_upper: Word,
    /// the same minimum co-norm computed directly on the system
    pub direct_lower: f64,
    pub direct_witness: Word,
    pub best_lower: f64,
    pub best_upper: f64,
}

/// Joint spectral co-radius bounds per word length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoBoundsTable {
    pub rows: Vec<CoBoundsRow>,
    pub best_lower: f64,
    pub best_upper: f64,
    pub requested_depth: usize,
    pub completed_depth: usize,
    /// largest `|lower − direct_lower|` over rows
    pub max_direct_residual: f64,
    /// bounds table of the inverse system the co-radius bounds were read from
    pub inverse: BoundsTable,
}

impl CoBoundsTable {
    pub fn is_partial(&self) -> bool {
        self.completed_depth < self.requested_depth
    }
}

pub fn cojsr_bounds(sys: &SystemSpec, n_max: usize) -> Result<CoBoundsTable> {
    cojsr_bounds_with(sys, n_max, &EnumOptions::default())
}

/// Word `v` of the inverse system has product `S(reverse v)⁻¹`, so witnesses
/// are reversed back into the original system's symbol order.
pub fn cojsr_bounds_with(sys: &SystemSpec, n_max: usize, opts: &EnumOptions) -> Result<CoBoundsTable> {
    let inv_sys = sys.inverse_system()?;
    // the inverse enumeration and the direct check share one budget
    let half = EnumOptions { budget: opts.budget / 2 };
    let inverse = jsr_bounds_with(&inv_sys, n_max, &half)?;
    let wants = Wants { conorm: true, ..Wants::default() };
    let (direct, depth) = enumerate(sys, inverse.completed_depth, &half, wants)?;
    debug_assert_eq!(depth, inverse.completed_depth);

    let mut rows = Vec::with_capacity(depth);
    let (mut best_lower, mut best_upper) = (f64::NEG_INFINITY, f64::INFINITY);
    let mut max_resid: f64 = 0.0;
    for (r, lvl) in inverse.rows.iter().zip(&direct) {
        let lower = 1.0 / r.upper;
        let upper = 1.0 / r.lower;
        let direct_lower = ext_value(&lvl.min_conorm).powf(1.0 / r.n as f64);
        best_lower = best_lower.max(lower);
        best_upper = best_upper.min(upper);
        max_resid = max_resid.max((lower - direct_lower).abs());
        rows.push(CoBoundsRow {
            n: r.n,
            lower,
            upper,
            witness_lower: r.witness_upper.reversed(),
            witness_upper: word(&least_rotation(r.witness_lower.reversed().symbols())),
            direct_lower,
            direct_witness: ext_word(&lvl.min_conorm),
            best_lower,
            best_upper,
        });
    }
    Ok(CoBoundsTable {
        rows,
        best_lower,
        best_upper,
        requested_depth: n_max,
        completed_depth: depth,
        max_direct_residual: max_resid,
        inverse,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum StabilityVerdict {
    AllStableUpTo { length: usize },
    CounterexampleWord { word: Word, rho: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: StabilityVerdict,
    /// `max ρ(S(w))^{1/|w|}` over the enumerated words
    pub max_ratio: f64,
    pub argmax: Word,
    pub requested_depth: usize,
    pub completed_depth: usize,
}

/// Looks for a word whose product has spectral radius `≥ 1 − tol`.
pub fn periodic_stability_check(sys: &SystemSpec, max_len: usize) -> Result<StabilityReport> {
    periodic_stability_check_with(sys, max_len, &EnumOptions::default())
}

pub fn periodic_stability_check_with(sys: &SystemSpec, max_len: usize, opts: &EnumOptions) -> Result<StabilityReport> {
    let table = jsr_bounds_with(sys, max_len, opts)?;
    let tol = sys.tol();
    // shortest length whose maximal radius reaches the threshold, then the
    // lexicographically first word of that length doing so
    let counterexample = match table.rows.iter().find(|r| r.lower.powi(r.n as i32) >= 1.0 - tol) {
        Some(r) => first_unstable_word(sys, r.n, tol)?,
        None => None,
    };
    let verdict = match counterexample {
        Some((word, rho)) => StabilityVerdict::CounterexampleWord { word, rho },
        None => StabilityVerdict::AllStableUpTo { length: table.completed_depth },
    };
    Ok(StabilityReport {
        verdict,
        max_ratio: table.best_lower,
        argmax: table.witness_lower().clone(),
        requested_depth: max_len,
        completed_depth: table.completed_depth,
    })
}

/// Lexicographically first necklace of length `len` with `ρ ≥ 1 − tol`.
fn first_unstable_word(sys: &SystemSpec, len: usize, tol: f64) -> Result<Option<(Word, f64)>> {
    for w in words_of_length(sys.k(), len) {
        if !is_necklace(&w) {
            continue;
        }
        let rho = spectral_radius(&sys.product(&w)?)?;
        if rho >= 1.0 - tol {
            return Ok(Some((word(&w), rho)));
        }
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfeasibleSide {
    /// no product can expand: the joint spectral radius is at most 1
    Expansion,
    /// no product can contract: the joint spectral co-radius is at least 1
    Contraction,
    Both,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum FeasibilityVerdict {
    FeasibleWitness {
        w_contract: Word,
        w_expand: Word,
        contract_norm: f64,
        expand_conorm: f64,
    },
    InfeasibleCertified {
        side: InfeasibleSide,
        /// first length at which a certificate holds
        n: usize,
        /// the certifying extreme at `n`: max norm for the expansion side, min co-norm otherwise
        value: f64,
        /// `max_{|w|=m} ‖S(w)‖ ≤ 1 + tol` at `m = expansion_n`
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_norm: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expansion_n: Option<usize>,
        /// `min_{|w|=m} ‖S(w)‖_co ≥ 1 − tol` at `m = contraction_n`
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_conorm: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        contraction_n: Option<usize>,
    },
    Undetermined {
        best_contract_norm: f64,
        best_contract_word: Word,
        best_expand_conorm: f64,
        best_expand_word: Word,
        searched_depth: usize,
        requested_depth: usize,
    },
}

pub fn chaos_feasibility(sys: &SystemSpec, max_len: usize) -> Result<FeasibilityVerdict> {
    chaos_feasibility_with(sys, max_len, &EnumOptions::default())
}

pub fn chaos_feasibility_with(sys: &SystemSpec, max_len: usize, opts: &EnumOptions) -> Result<FeasibilityVerdict> {
    let tol = sys.tol();
    let wants = Wants { conorm: true, min_norm: true, thresholds: true, rho: false };
    let (levels, depth) = enumerate(sys, max_len, opts, wants)?;

    let contract = levels.iter().find_map(|l| l.first_contract.clone());
    let expand = levels.iter().find_map(|l| l.first_expand.clone());
    if let (Some(c), Some(e)) = (&contract, &expand) {
        return Ok(FeasibilityVerdict::FeasibleWitness {
            w_contract: word(&c.word),
            w_expand: word(&e.word),
            contract_norm: c.value,
            expand_conorm: e.value,
        });
    }

    let expansion_n = levels.iter().position(|l| ext_value(&l.max_norm) <= 1.0 + tol);
    let contraction_n = levels.iter().position(|l| ext_value(&l.min_conorm) >= 1.0 - tol);
    let certified = match (expansion_n, contraction_n) {
        (Some(a), Some(b)) => Some((InfeasibleSide::Both, a.min(b))),
        (Some(a), None) => Some((InfeasibleSide::Expansion, a)),
        (None, Some(b)) => Some((InfeasibleSide::Contraction, b)),
        (None, None) => None,
    };
    if let Some((side, idx)) = certified {
        let max_norm = expansion_n.map(|a| ext_value(&levels[a].max_norm));
        let min_conorm = contraction_n.map(|b| ext_value(&levels[b].min_conorm));
        let value = if expansion_n == Some(idx) { max_norm } else { min_conorm }.expect("side present");
        return Ok(FeasibilityVerdict::InfeasibleCertified {
            side,
            n: idx + 1,
            value,
            max_norm,
            expansion_n: expansion_n.map(|a| a + 1),
            min_conorm,
            contraction_n: contraction_n.map(|b| b + 1),
        });
    }

    // best evidence: smallest normalized norm and largest normalized co-norm
    let mut best_c: Option<(f64, Word, f64)> = None;
    let mut best_e: Option<(f64, Word, f64)> = None;
    for (i, l) in levels.iter().enumerate() {
        let root = 1.0 / (i + 1) as f64;
        let mn = l.min_norm.as_ref().expect("min norm tracked");
        let mx = l.max_conorm.as_ref().expect("max co-norm tracked");
        if best_c.as_ref().is_none_or(|b| exceeds(b.0, mn.value.powf(root))) {
            best_c = Some((mn.value.powf(root), word(&mn.word), mn.value));
        }
        if best_e.as_ref().is_none_or(|b| exceeds(mx.value.powf(root), b.0)) {
            best_e = Some((mx.value.powf(root), word(&mx.word), mx.value));
        }
    }
    let (_, cw, cn) = best_c.expect("depth >= 1");
    let (_, ew, en) = best_e.expect("depth >= 1");
    Ok(FeasibilityVerdict::Undetermined {
        best_contract_norm: cn,
        best_contract_word: cw,
        best_expand_conorm: en,
        best_expand_word: ew,
        searched_depth: depth,
        requested_depth: max_len,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthStrategy {
    /// dominance pruning when every generator is entrywise nonnegative, else brute force
    #[default]
    Auto,
    BruteForce,
    /// exact for nonnegative systems: drops products dominated entrywise by another
    Dominance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthPoint {
    pub n: usize,
    /// `max_{|w|=n} ‖S(w)‖`
    pub g: f64,
    pub witness: Word,
}

/// Least-squares fit of `log g_n ≈ slope · log n + intercept`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    /// root-mean-square residual in log space
    pub residual: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthCurve {
    pub points: Vec<GrowthPoint>,
    pub fit: Option<ExponentFit>,
    pub strategy: GrowthStrategy,
    pub requested_depth: usize,
    pub completed_depth: usize,
    pub evaluations: u64,
}

pub fn growth_curve(sys: &SystemSpec, n_max: usize) -> Result<GrowthCurve> {
    growth_curve_with(sys, n_max, GrowthStrategy::Auto, &EnumOptions::default())
}

pub fn growth_curve_with(
    sys: &SystemSpec,
    n_max: usize,
    strategy: GrowthStrategy,
    opts: &EnumOptions,
) -> Result<GrowthCurve> {
    if n_max == 0 {
        return Err(Error::Domain("growth curve depth must be at least 1".into()));
    }
    let nonneg = sys.matrices().iter().all(Mat::is_nonnegative);
    let strategy = match strategy {
        GrowthStrategy::Auto if nonneg => GrowthStrategy::Dominance,
        GrowthStrategy::Auto => GrowthStrategy::BruteForce,
        GrowthStrategy::Dominance if !nonneg => {
            return Err(Error::Domain("dominance pruning needs entrywise nonnegative generators".into()))
        }
        s => s,
    };
    let (points, evaluations) = match strategy {
        GrowthStrategy::Dominance => dominance_growth(sys, n_max, opts.budget),
        _ => {
            let (levels, depth) = enumerate(sys, n_max, opts, Wants::default())?;
            let pts = levels
                .iter()
                .enumerate()
                .map(|(i, l)| GrowthPoint { n: i + 1, g: ext_value(&l.max_norm), witness: ext_word(&l.max_norm) })
                .collect();
            (pts, words_up_to(sys.k(), depth))
        }
    };
    let completed = points.len();
    let tail = completed.div_ceil(2);
    let fit = fit_exponent(&points, completed + 1 - tail, completed);
    Ok(GrowthCurve { points, fit, strategy, requested_depth: n_max, completed_depth: completed, evaluations })
}

/// Fit over the points with `from ≤ n ≤ to`; `None` with fewer than two usable points.
pub fn fit_exponent(points: &[GrowthPoint], from: usize, to: usize) -> Option<ExponentFit> {
    let xy: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.n >= from && p.n <= to && p.g > 0.0)
        .map(|p| ((p.n as f64).ln(), p.g.ln()))
        .collect();
    if xy.len() < 2 {
        return None;
    }
    let m = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / m;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xy.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum::<f64>() / m).sqrt();
    Some(ExponentFit { slope, intercept, residual, from, to })
}

/// Exact max-norm curve for entrywise nonnegative systems. For such systems
/// `Y ≥ X ≥ 0` implies `‖SY‖ ≥ ‖SX‖` for every generator `S`, so a product
/// dominated by another one can be dropped without losing any maximiser.
fn dominance_growth(sys: &SystemSpec, n_max: usize, budget: u64) -> (Vec<GrowthPoint>, u64) {
    let k = sys.k() as u32;
    let mut frontier: Vec<(Vec<u32>, Mat)> = (1..=k).map(|s| (vec![s], sys.mat(s).clone())).collect();
    let mut evaluations = k as u64;
    let mut points = Vec::new();
    for n in 1..=n_max {
        frontier = prune_dominated(frontier);
        let mut best: Option<Ext> = None;
        for (w, m) in &frontier {
            keep_max(&mut best, operator_norm(m), w);
        }
        let best = best.expect("frontier is never empty");
        points.push(GrowthPoint { n, g: best.value, witness: word(&best.word) });
        if n == n_max {
            break;
        }
        let next_cost = frontier.len() as u64 * k as u64;
        if evaluations + next_cost > budget {
            break;
        }
        evaluations += next_cost;
        frontier = frontier
            .iter()
            .flat_map(|(w, m)| {
                (1..=k).map(move |s| {
                    let mut w2 = w.clone();
                    w2.push(s);
                    (w2, sys.mat(s).mul(m))
                })
            })
            .collect();
    }
    (points, evaluations)
}

/// Keep products not dominated by another. `Y` removes `X` when `Y ≥ X`
/// entrywise and either `Y > X` everywhere or `Y`'s word precedes `X`'s, so
/// the lexicographically first maximiser always survives. The relation is
/// transitive and acyclic: `X` survives iff nothing removes it, and anything
/// removed is removed by a survivor.
fn prune_dominated(mut items: Vec<(Vec<u32>, Mat)>) -> Vec<(Vec<u32>, Mat)> {
    items.sort_by(|a, b| a.0.cmp(&b.0));
    let stride = items.first().map_or(0, |(_, m)| m.as_slice().len());
    let flat: Vec<f64> = items.iter().flat_map(|(_, m)| m.as_slice().iter().copied()).collect();
    let entries = |i: usize| &flat[i * stride..(i + 1) * stride];
    let removes = |i: usize, j: usize| {
        let (y, x) = (entries(i), entries(j));
        y.iter().zip(x).all(|(y, x)| y >= x) && (i < j || y.iter().zip(x).all(|(y, x)| y > x))
    };
    // a dominator never has a smaller rounded entry sum, so one sweep by
    // decreasing sum against the survivors so far misses only equal-sum ties
    let sums: Vec<f64> = (0..items.len()).map(|i| entries(i).iter().sum()).collect();
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| sums[b].total_cmp(&sums[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for &j in &order {
        if !kept.iter().any(|&i| removes(i, j)) {
            kept.push(j);
        }
    }
    let mut survivors: Vec<usize> = kept
        .iter()
        .filter(|&&j| !kept.iter().any(|&i| i != j && sums[i] == sums[j] && removes(i, j)))
        .copied()
        .collect();
    survivors.sort_unstable();
    let mut slots: Vec<Option<(Vec<u32>, Mat)>> = items.into_iter().map(Some).collect();
    survivors.into_iter().map(|j| slots[j].take().expect("distinct indices")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinitenessCandidate {
    pub word: Word,
    /// `ρ(S(w))^{1/|w|}`
    pub value: f64,
    /// `best_upper − value`
    pub gap: f64,
    /// gap within tolerance: the candidate attains the radius numerically
    pub verified: bool,
    pub completed_depth: usize,
}

pub fn finiteness_candidate(sys: &SystemSpec, n_max: usize) -> Result<FinitenessCandidate> {
    let table = jsr_bounds(sys, n_max)?;
    let gap = table.best_upper - table.best_lower;
    Ok(FinitenessCandidate {
        word: table.witness_lower().clone(),
        value: table.best_lower,
        gap,
        verified: gap <= sys.tol(),
        completed_depth: table.completed_depth,
    })
}

/// A subspace left invariant by every generator within tolerance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantSubspace {
    /// orthonormal basis
    pub basis: Vec<Vec<f64>>,
    /// largest sine of the angle between `S_k v` and the subspace over generators and basis vectors
    pub residual: f64,
    /// word whose eigenvector produced the candidate
    pub source: Word,
    /// found as the orthogonal complement of a common eigenvector of the transposes
    pub from_transpose: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReducibilityReport {
    pub depth: usize,
    /// empty means none found up to `depth`, which does not prove irreducibility
    pub candidates: Vec<InvariantSubspace>,
}

impl ReducibilityReport {
    pub fn none_found(&self) -> bool {
        self.candidates.is_empty()
    }
}

/// Sound but incomplete search for common invariant subspaces: candidate
/// lines are real eigenvectors of products up to `depth`; hyperplanes come
/// from the same search on the transposed system.
pub fn reducibility_probe(sys: &SystemSpec, depth: usize) -> Result<ReducibilityReport> {
    if depth == 0 {
        return Err(Error::Domain("probe depth must be at least 1".into()));
    }
    let d = sys.dim();
    let tol = sys.tol();
    let mut candidates: Vec<InvariantSubspace> = Vec::new();
    if d == 1 {
        return Ok(ReducibilityReport { depth, candidates });
    }
    let transposed: Vec<Mat> = sys.matrices().iter().map(Mat::transpose).collect();
    let depth = max_depth_within_budget(sys.k(), depth, DEFAULT_BUDGET / 16).max(1);

    for (from_transpose, mats) in [(false, sys.matrices().to_vec()), (true, transposed)] {
        if from_transpose && d == 2 {
            // hyperplanes of the plane are lines, already covered
            break;
        }
        let mut seen: Vec<Vec<f64>> = Vec::new();
        for len in 1..=depth {
            for w in words_of_length(sys.k(), len) {
                if !is_necklace(&w) {
                    continue;
                }
                let mut prod = mats[w[0] as usize - 1].clone();
                for &s in &w[1..] {
                    prod = mats[s as usize - 1].mul(&prod);
                }
                for v in real_eigenvectors(&prod)? {
                    if seen.iter().any(|u| crate::linalg::dot(u, &v).abs() >= 1.0 - 1e-9) {
                        continue;
                    }
                    seen.push(v.clone());
                    let resid = line_residual(&mats, &v);
                    if resid > tol {
                        continue;
                    }
                    let (basis, residual) = if from_transpose {
                        let basis = orthogonal_complement(&v);
                        (basis.clone(), subspace_residual(sys.matrices(), &basis))
                    } else {
                        (vec![v.clone()], resid)
                    };
                    if residual <= tol {
                        candidates.push(InvariantSubspace { basis, residual, source: word(&w), from_transpose });
                    }
                }
            }
        }
    }
    Ok(ReducibilityReport { depth, candidates })
}

/// Unit vectors spanning the null spaces `ker(A − λI)` for real eigenvalues `λ`.
fn real_eigenvectors(a: &Mat) -> Result<Vec<Vec<f64>>> {
    let scale = a.max_abs().max(1.0);
    let mut out = Vec::new();
    let mut lambdas: Vec<f64> = Vec::new();
    for z in crate::linalg::eigenvalues(a)? {
        if z.im.abs() > 1e-9 * scale {
            continue;
        }
        if lambdas.iter().any(|l| (l - z.re).abs() <= 1e-12 * scale) {
            continue;
        }
        lambdas.push(z.re);
        let shifted = a.sub(&Mat::identity(a.dim()).scale(z.re));
        let (sigma, vecs) = jacobi_svd(&shifted, true);
        let v = vecs.last().expect("dim >= 1").clone();
        let nv = vec_norm(&v);
        if sigma.last().copied().unwrap_or(0.0) <= 1e-8 * scale && nv > 0.0 {
            out.push(v.iter().map(|x| x / nv).collect());
        }
    }
    Ok(out)
}

/// Largest sine between `M v` and the line through `v`.
fn line_residual(mats: &[Mat], v: &[f64]) -> f64 {
    subspace_residual(mats, &[v.to_vec()])
}

fn subspace_residual(mats: &[Mat], basis: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for m in mats {
        for b in basis {
            let y = m.mul_vec(b);
            let ny = vec_norm(&y);
            if ny == 0.0 {
                continue;
            }
            let mut r = y.clone();
            for q in basis {
                let c = crate::linalg::dot(q, &y);
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= c * qi;
                }
            }
            worst = worst.max(vec_norm(&r) / ny);
        }
    }
    worst
}

/// Orthonormal basis of `v⊥` by Gram–Schmidt on the standard basis.
fn orthogonal_complement(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    let mut basis: Vec<Vec<f64>> = vec![v.to_vec()];
    for i in 0..d {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        for q in &basis {
            let c = crate::linalg::dot(q, &e);
            for (ei, qi) in e.iter_mut().zip(q) {
                *ei -= c * qi;
            }
        }
        let n = vec_norm(&e);
        if n > 1e-8 {
            basis.push(e.iter().map(|x| x / n).collect());
        }
        if basis.len() == d {
            break;
        }
    }
    basis.remove(0);
    basis
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockCoJsrReport {
    pub split: usize,
    pub whole: CoBoundsTable,
    pub block_a: CoBoundsTable,
    pub block_b: CoBoundsTable,
    /// `|best_upper(whole) − min(best_upper(A), best_upper(B))|`
    pub min_rule_residual: f64,
    pub depth: usize,
}

/// For block upper-triangular generators the co-radius of the whole equals
/// the smaller co-radius of the two diagonal-block systems.
pub fn block_cojsr_check(sys: &SystemSpec, split: usize, depth: usize) -> Result<BlockCoJsrReport> {
    let d = sys.dim();
    if split == 0 || split >= d {
        return Err(Error::Domain(format!("block split must lie in 1..{d}, got {split}")));
    }
    let tol = sys.tol();
    for (idx, m) in sys.matrices().iter().enumerate() {
        for i in split..d {
            for j in 0..split {
                if m.get(i, j).abs() > tol {
                    return Err(Error::Domain(format!(
                        "matrix {} is not block upper-triangular at split {split}: entry ({}, {}) = {}",
                        idx + 1,
                        i + 1,
                        j + 1,
                        m.get(i, j)
                    )));
                }
            }
        }
    }
    let sub = |start: usize, size: usize| -> Result<SystemSpec> {
        let mats = sys.matrices().iter().map(|m| m.diagonal_block(start, size)).collect();
        SystemSpec::with_tolerances(mats, sys.nonsingularity_tol(), tol)
    };
    let a = sub(0, split)?;
    let b = sub(split, d - split)?;
    let whole = cojsr_bounds(sys, depth)?;
    let common = whole.completed_depth;
    let block_a = cojsr_bounds(&a, common)?;
    let block_b = cojsr_bounds(&b, common)?;
    let common = common.min(block_a.completed_depth).min(block_b.completed_depth);
    let at = |t: &CoBoundsTable| t.rows[common - 1].best_upper;
    let min_rule_residual = (at(&whole) - at(&block_a).min(at(&block_b))).abs();
    Ok(BlockCoJsrReport { split, whole, block_a, block_b, min_rule_residual, depth: common })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{word_product, Mat};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const PHI: f64 = 1.618033988749895;

    fn sys(mats: Vec<Mat>) -> SystemSpec {
        SystemSpec::new(mats).unwrap()
    }

    fn diag_pair() -> SystemSpec {
        sys(vec![Mat::diag(&[2.0, 0.5]), Mat::diag(&[3.0, 1.0 / 3.0])])
    }

    fn scalar_pair() -> SystemSpec {
        sys(vec![Mat::scalar(0.5), Mat::scalar(2.0)])
    }

    fn w(v: &[u32]) -> Word {
        Word::new(v.to_vec()).unwrap()
    }

    /// Brute-force reference without necklace dedup or parallel split.
    fn naive_rows(s: &SystemSpec, n_max: usize) -> Vec<(f64, Vec<u32>, f64, Vec<u32>)> {
        (1..=n_max)
            .map(|n| {
                let mut best_norm = (f64::NEG_INFINITY, vec![]);
                let mut best_rho = (f64::NEG_INFINITY, vec![]);
                for wd in words_of_length(s.k(), n) {
                    let p = s.product(&wd).unwrap();
                    let nn = operator_norm(&p);
                    let r = spectral_radius(&p).unwrap();
                    if exceeds(nn, best_norm.0) {
                        best_norm = (nn, wd.clone());
                    }
                    if exceeds(r, best_rho.0) {
                        best_rho = (r, wd.clone());
                    }
                }
                (best_norm.0, best_norm.1, best_rho.0, best_rho.1)
            })
            .collect()
    }

    #[test]
    fn jsr_examples() {
        let single = sys(vec![Mat::diag(&[2.0])]);
        let t = jsr_bounds(&single, 4).unwrap();
        for r in &t.rows {
            assert!((r.upper - 2.0).abs() < 1e-12 && (r.lower - 2.0).abs() < 1e-12);
        }

        let t = jsr_bounds(&diag_pair(), 3).unwrap();
        assert!((t.best_lower - 3.0).abs() < 1e-9 && (t.best_upper - 3.0).abs() < 1e-9);
        assert_eq!(t.witness_lower(), &w(&[2]));
        assert!(!t.is_partial());

        let t = jsr_bounds(&scalar_pair(), 4).unwrap();
        assert!((t.best_upper - 2.0).abs() < 1e-12 && (t.best_lower - 2.0).abs() < 1e-12);
        assert_eq!(t.witness_lower(), &w(&[2]));
        assert_eq!(t.witness_upper(), &w(&[2]));
    }

    #[test]
    fn cojsr_examples() {
        let t = cojsr_bounds(&diag_pair(), 3).unwrap();
        assert!((t.best_lower - 1.0 / 3.0).abs() < 1e-9);
        assert!((t.best_upper - 1.0 / 3.0).abs() < 1e-9);
        assert!((t.rows[0].lower - 1.0 / 3.0).abs() < 1e-9 && (t.rows[0].upper - 1.0 / 3.0).abs() < 1e-9);
        assert!(t.max_direct_residual < 1e-12);

        let t = cojsr_bounds(&sys(vec![Mat::rotation(0.7)]), 4).unwrap();
        assert!((t.best_lower - 1.0).abs() < 1e-12 && (t.best_upper - 1.0).abs() < 1e-12);

        let t = cojsr_bounds(&scalar_pair(), 4).unwrap();
        assert!((t.best_lower - 0.5).abs() < 1e-12 && (t.best_upper - 0.5).abs() < 1e-12);
        assert_eq!(t.rows[2].witness_lower, w(&[1, 1, 1]));
    }

    #[test]
    fn cojsr_witnesses_map_back_to_original_order() {
        let s = sys(vec![
            Mat::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]).unwrap(),
            Mat::from_rows(&[vec![0.5, 0.0], vec![1.0, 3.0]]).unwrap(),
        ]);
        let t = cojsr_bounds(&s, 5).unwrap();
        for r in &t.rows {
            let p = word_product(&s, &r.witness_lower).unwrap();
            let v = co_norm(&p).powf(1.0 / r.n as f64);
            assert!((v - r.lower).abs() < 1e-9, "row {}: {v} vs {}", r.n, r.lower);
            assert!((r.lower - r.direct_lower).abs() < 1e-9);
        }
    }

    #[test]
    fn enumeration_matches_naive_reference() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let mats: Vec<Mat> = (0..3)
                .map(|_| Mat::from_row_major(2, (0..4).map(|_| rng.random_range(-1.5..1.5)).collect()).unwrap())
                .collect();
            let Ok(s) = SystemSpec::new(mats) else { continue };
            let t = jsr_bounds(&s, 6).unwrap();
            for (r, (nn, nw, rr, _)) in t.rows.iter().zip(naive_rows(&s, 6)) {
                let diff = (r.upper - nn.powf(1.0 / r.n as f64)).abs();
                assert!(diff < 1e-12, "row {}: diff {diff}", r.n);
                assert_eq!(r.witness_upper.symbols(), nw.as_slice());
                assert!((r.lower - rr.powf(1.0 / r.n as f64)).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn budget_yields_partial_table() {
        let opts = EnumOptions { budget: 2 + 4 + 8 };
        let t = jsr_bounds_with(&scalar_pair(), 10, &opts).unwrap();
        assert_eq!(t.completed_depth, 3);
        assert_eq!(t.requested_depth, 10);
        assert!(t.is_partial());
        assert_eq!(t.rows.len(), 3);
        assert_eq!(max_depth_within_budget(2, 30, DEFAULT_BUDGET), 19);
    }

    #[test]
    fn stability_examples() {
        let s = sys(vec![Mat::rotation(0.3).scale(0.99), Mat::rotation(1.1).scale(0.99)]);
        let r = periodic_stability_check(&s, 6).unwrap();
        assert_eq!(r.verdict, StabilityVerdict::AllStableUpTo { length: 6 });
        assert!((r.max_ratio - 0.99).abs() < 1e-12);

        let s = sys(vec![Mat::diag(&[2.0, 0.5]), Mat::identity(2)]);
        let r = periodic_stability_check(&s, 2).unwrap();
        match r.verdict {
            StabilityVerdict::CounterexampleWord { word, rho } => {
                assert_eq!(word, w(&[1]));
                assert!((rho - 2.0).abs() < 1e-12);
            }
            v => panic!("unexpected {v:?}"),
        }

        let s = sys(vec![Mat::scalar(0.5)]);
        let r = periodic_stability_check(&s, 3).unwrap();
        assert_eq!(r.verdict, StabilityVerdict::AllStableUpTo { length: 3 });
        assert!((r.max_ratio - 0.5).abs() < 1e-12);
    }

    #[test]
    fn feasibility_examples() {
        match chaos_feasibility(&scalar_pair(), 1).unwrap() {
            FeasibilityVerdict::FeasibleWitness { w_contract, w_expand, .. } => {
                assert_eq!(w_contract, w(&[1]));
                assert_eq!(w_expand, w(&[2]));
            }
            v => panic!("unexpected {v:?}"),
        }
        match chaos_feasibility(&sys(vec![Mat::rotation(1.0)]), 1).unwrap() {
            FeasibilityVerdict::InfeasibleCertified { side, n, value, .. } => {
                assert_eq!(side, InfeasibleSide::Both);
                assert_eq!(n, 1);
                assert!((value - 1.0).abs() < 1e-12);
            }
            v => panic!("unexpected {v:?}"),
        }
        let s = sys(vec![Mat::diag(&[0.5, 2.0]), Mat::identity(2)]);
        match chaos_feasibility(&s, 6).unwrap() {
            FeasibilityVerdict::Undetermined { best_contract_norm, best_contract_word, searched_depth, .. } => {
                assert_eq!(best_contract_norm, 1.0);
                assert_eq!(best_contract_word, w(&[2]));
                assert_eq!(searched_depth, 6);
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn feasible_witnesses_replay() {
        let s = sys(vec![
            Mat::from_rows(&[vec![0.5, 0.5], vec![0.0, 0.5]]).unwrap(),
            Mat::from_rows(&[vec![2.0, 0.0], vec![2.0, 2.0]]).unwrap(),
        ]);
        match chaos_feasibility(&s, 4).unwrap() {
            FeasibilityVerdict::FeasibleWitness { w_contract, w_expand, contract_norm, expand_conorm } => {
                let c = operator_norm(&word_product(&s, &w_contract).unwrap());
                let e = co_norm(&word_product(&s, &w_expand).unwrap());
                assert_eq!(c, contract_norm);
                assert_eq!(e, expand_conorm);
                assert!(c < 1.0 - s.tol() && e > 1.0 + s.tol());
            }
            v => panic!("unexpected {v:?}"),
        }
    }

    #[test]
    fn growth_examples() {
        let s = sys(vec![Mat::rotation(0.3).scale(0.99), Mat::rotation(1.1).scale(0.99)]);
        let c = growth_curve(&s, 10).unwrap();
        for p in &c.points {
            assert!((p.g - 0.99f64.powi(p.n as i32)).abs() < 1e-12);
        }

        let shear = sys(vec![Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap()]);
        let c = growth_curve(&shear, 64).unwrap();
        assert_eq!(c.strategy, GrowthStrategy::Dominance);
        for p in &c.points {
            let n = p.n as f64;
            assert!((p.g - (n + (n * n + 4.0).sqrt()) / 2.0).abs() < 1e-9 * n);
        }
        let fit = c.fit.unwrap();
        assert_eq!((fit.from, fit.to), (33, 64));
        assert!((fit.slope - 1.0).abs() < 1e-2);
    }

    #[test]
    fn dominance_agrees_with_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..8 {
            let mats: Vec<Mat> = (0..2)
                .map(|_| Mat::from_row_major(2, (0..4).map(|_| rng.random_range(0.0..1.0)).collect()).unwrap())
                .collect();
            let Ok(s) = SystemSpec::new(mats) else { continue };
            let opts = EnumOptions::default();
            let a = growth_curve_with(&s, 10, GrowthStrategy::Dominance, &opts).unwrap();
            let b = growth_curve_with(&s, 10, GrowthStrategy::BruteForce, &opts).unwrap();
            for (p, q) in a.points.iter().zip(&b.points) {
                assert!((p.g - q.g).abs() <= 1e-12 * q.g);
                assert_eq!(p.witness, q.witness);
            }
        }
        let shears = sys(vec![
            Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap().scale(1.0 / PHI),
            Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap().scale(1.0 / PHI),
        ]);
        let opts = EnumOptions::default();
        let a = growth_curve_with(&shears, 12, GrowthStrategy::Dominance, &opts).unwrap();
        let b = growth_curve_with(&shears, 12, GrowthStrategy::BruteForce, &opts).unwrap();
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p.g - q.g).abs() <= 1e-12 * q.g);
            assert_eq!(p.witness, q.witness);
        }
    }

    #[test]
    fn finiteness_examples() {
        let f = finiteness_candidate(&diag_pair(), 4).unwrap();
        assert_eq!(f.word, w(&[2]));
        assert!((f.value - 3.0).abs() < 1e-12 && f.gap.abs() < 1e-9 && f.verified);

        let f = finiteness_candidate(&sys(vec![Mat::rotation(0.4)]), 3).unwrap();
        assert_eq!(f.word, w(&[1]));
        assert!((f.value - 1.0).abs() < 1e-12 && f.gap.abs() < 1e-9);

        let s = sys(vec![
            Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap().scale(0.9),
            Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap().scale(0.9),
        ]);
        let f = finiteness_candidate(&s, 8).unwrap();
        let t = jsr_bounds(&s, 8).unwrap();
        assert_eq!(f.word, *t.witness_lower());
        // the product of the two shears is symmetric, so its norm meets its spectral radius
        assert!(f.gap.abs() < 1e-12 && f.verified);
        let direct = spectral_radius(&word_product(&s, &f.word).unwrap()).unwrap().powf(1.0 / f.word.len() as f64);
        assert!((direct - f.value).abs() < 1e-12);
    }

    #[test]
    fn reducibility_examples() {
        let shear = Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let r = reducibility_probe(&sys(vec![shear.clone(), shear]), 3).unwrap();
        assert_eq!(r.candidates.len(), 1);
        let v = &r.candidates[0].basis[0];
        assert!((v[0].abs() - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        assert_eq!(r.candidates[0].residual, 0.0);

        let r = reducibility_probe(&sys(vec![Mat::rotation(0.5), Mat::rotation(1.3)]), 4).unwrap();
        assert!(r.none_found());

        let tri = sys(vec![
            Mat::from_rows(&[vec![2.0, 1.0, 0.5], vec![0.0, 1.0, 0.3], vec![0.0, 0.0, 3.0]]).unwrap(),
            Mat::from_rows(&[vec![0.5, 0.2, 1.0], vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 0.7]]).unwrap(),
        ]);
        let r = reducibility_probe(&tri, 2).unwrap();
        let e1 = r.candidates.iter().find(|c| c.basis.len() == 1 && (c.basis[0][0].abs() - 1.0).abs() < 1e-9);
        assert!(e1.is_some_and(|c| c.residual <= 1e-12));
        // the span of e1, e2 comes from the transposed search
        let plane = r.candidates.iter().find(|c| c.from_transpose).expect("leading plane");
        assert_eq!(plane.basis.len(), 2);
        assert!(plane.basis.iter().all(|b| b[2].abs() < 1e-9));
    }

    #[test]
    fn block_cojsr_examples() {
        let s = sys(vec![Mat::diag(&[2.0, 0.5])]);
        let r = block_cojsr_check(&s, 1, 3).unwrap();
        assert!((r.whole.best_upper - 0.5).abs() < 1e-12);
        assert!(r.min_rule_residual < 1e-12);

        let s = sys(vec![
            Mat::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]).unwrap(),
            Mat::from_rows(&[vec![0.5, 0.0], vec![0.0, 1.0 / 3.0]]).unwrap(),
        ]);
        let r = block_cojsr_check(&s, 1, 4).unwrap();
        assert!(r.min_rule_residual <= s.tol());

        let bad = sys(vec![Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 1.0]]).unwrap()]);
        assert!(matches!(block_cojsr_check(&bad, 1, 2), Err(Error::Domain(_))));
    }

    #[test]
    fn necklaces() {
        assert!(is_necklace(&[1, 1, 2]));
        assert!(!is_necklace(&[1, 2, 1]));
        assert!(is_necklace(&[1, 2, 1, 2]));
        assert_eq!(least_rotation(&[2, 1, 1]), vec![1, 1, 2]);
    }

    fn arb_pair() -> impl Strategy<Value = SystemSpec> {
        proptest::collection::vec(-2.0f64..2.0, 8).prop_filter_map("singular", |v| {
            let a = Mat::from_row_major(2, v[..4].to_vec()).ok()?;
            let b = Mat::from_row_major(2, v[4..].to_vec()).ok()?;
            if co_norm(&a) < 0.05 || co_norm(&b) < 0.05 {
                return None;
            }
            SystemSpec::new(vec![a, b]).ok()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 64, rng_seed: proptest::test_runner::RngSeed::Fixed(17), ..ProptestConfig::default() })]

        #[test]
        fn sandwich_and_monotone(s in arb_pair()) {
            let t = jsr_bounds(&s, 7).unwrap();
            let mut prev = f64::INFINITY;
            for r in &t.rows {
                prop_assert!(r.lower <= r.upper + 1e-9);
                prop_assert!(r.best_lower <= r.best_upper + 1e-9);
                prop_assert!(r.best_upper <= prev);
                prop_assert!(r.upper <= t.rows[0].upper + 1e-9);
                prev = r.best_upper;
            }
            for r in t.rows.iter().filter(|r| 2 * r.n <= t.rows.len()) {
                prop_assert!(t.rows[2 * r.n - 1].upper <= r.upper * (1.0 + 1e-12));
            }
            let c = cojsr_bounds(&s, 7).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for r in &c.rows {
                prop_assert!(r.lower <= r.upper + 1e-9);
                prop_assert!(r.best_lower >= prev);
                prev = r.best_lower;
            }
        }

        #[test]
        fn cojsr_duality(s in arb_pair()) {
            let c = cojsr_bounds(&s, 6).unwrap();
            let inv = jsr_bounds(&s.inverse_system().unwrap(), 6).unwrap();
            prop_assert!((c.best_lower - 1.0 / inv.best_upper).abs() <= 1e-9 * c.best_lower.max(1.0));
            prop_assert!((c.best_upper - 1.0 / inv.best_lower).abs() <= 1e-9 * c.best_upper.max(1.0));
            prop_assert!(c.max_direct_residual <= 1e-9);
        }

        #[test]
        fn scaling_equivariance(s in arb_pair(), c in 0.2f64..5.0) {
            let a = jsr_bounds(&s, 6).unwrap();
            let b = jsr_bounds(&s.scaled(c).unwrap(), 6).unwrap();
            for (ra, rb) in a.rows.iter().zip(&b.rows) {
                prop_assert!((rb.upper - c * ra.upper).abs() <= 1e-9 * rb.upper.max(1.0));
                prop_assert!((rb.lower - c * ra.lower).abs() <= 1e-9 * rb.lower.max(1.0));
                prop_assert_eq!(&ra.witness_upper, &rb.witness_upper);
                prop_assert_eq!(&ra.witness_lower, &rb.witness_lower);
            }
        }
    }

    #[test]
    fn results_independent_of_thread_count() {
        let s = sys(vec![
            Mat::from_rows(&[vec![0.3, 1.2], vec![-0.4, 0.9]]).unwrap(),
            Mat::from_rows(&[vec![1.1, 0.0], vec![0.5, -0.7]]).unwrap(),
            Mat::from_rows(&[vec![0.2, -0.6], vec![0.8, 0.4]]).unwrap(),
        ]);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| (jsr_bounds(&s, 8).unwrap(), chaos_feasibility(&s, 8).unwrap()))
        };
        assert_eq!(run(1), run(8));
    }
}
