//! Words, switching laws, the shift map and the metric on the space of laws.
//!
//! Symbols are 1-based (`1..=K`). An infinite switching law is represented by
//! a [`LawProgram`]: a finite description that can be evaluated at any index
//! it defines.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synth::UniformGenerator;

/// A finite, nonempty sequence of 1-based symbols.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Word(Vec<u32>);

impl Word {
    pub fn new(symbols: Vec<u32>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::Domain("a word must contain at least one symbol".into()));
        }
        if symbols.contains(&0) {
            return Err(Error::Domain("symbols are 1-based; found 0".into()));
        }
        Ok(Self(symbols))
    }

    pub fn single(symbol: u32) -> Result<Self> {
        Self::new(vec![symbol])
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn check_alphabet(&self, k: usize) -> Result<()> {
        check_symbols(&self.0, k)
    }

    /// The word read back to front.
    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }
}

impl TryFrom<Vec<u32>> for Word {
    type Error = Error;

    fn try_from(v: Vec<u32>) -> Result<Self> {
        Word::new(v)
    }
}

impl From<Word> for Vec<u32> {
    fn from(w: Word) -> Self {
        w.0
    }
}

impl std::fmt::Display for Word {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "{}", parts.join(" "))
    }
}

pub(crate) fn check_symbols(symbols: &[u32], k: usize) -> Result<()> {
    match symbols.iter().find(|&&s| s == 0 || s as usize > k) {
        Some(s) => Err(Error::Domain(format!("symbol {s} outside alphabet 1..={k}"))),
        None => Ok(()),
    }
}

fn check_nonzero(symbols: &[u32]) -> Result<()> {
    if symbols.contains(&0) {
        return Err(Error::Domain("symbols are 1-based; found 0".into()));
    }
    Ok(())
}

/// `prefix` followed by `period` repeated forever.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PeriodicRepr")]
pub struct PeriodicLaw {
    pub prefix: Vec<u32>,
    pub period: Word,
}

#[derive(Deserialize)]
struct PeriodicRepr {
    #[serde(default)]
    prefix: Vec<u32>,
    period: Word,
}

impl TryFrom<PeriodicRepr> for PeriodicLaw {
    type Error = Error;

    fn try_from(r: PeriodicRepr) -> Result<Self> {
        check_nonzero(&r.prefix)?;
        Ok(Self { prefix: r.prefix, period: r.period })
    }
}

impl PeriodicLaw {
    pub fn new(prefix: Vec<u32>, period: Word) -> Result<Self> {
        check_nonzero(&prefix)?;
        Ok(Self { prefix, period })
    }

    fn eval(&self, n: u64) -> u32 {
        let p = self.prefix.len() as u64;
        if n <= p {
            self.prefix[(n - 1) as usize]
        } else {
            let per = self.period.len() as u64;
            self.period.0[((n - p - 1) % per) as usize]
        }
    }

    /// Shortest period and shortest prefix describing the same sequence.
    pub fn canonical(&self) -> PeriodicLaw {
        let per = &self.period.0;
        let n = per.len();
        let root_len = (1..=n)
            .find(|&l| n % l == 0 && per.chunks(l).all(|c| c == &per[..l]))
            .unwrap_or(n);
        let mut period: Vec<u32> = per[..root_len].to_vec();
        let mut prefix = self.prefix.clone();
        while let (Some(&last_pre), Some(&last_per)) = (prefix.last(), period.last()) {
            if last_pre != last_per {
                break;
            }
            prefix.pop();
            period.rotate_right(1);
        }
        PeriodicLaw { prefix, period: Word(period) }
    }

    /// True when the sequence is eventually a single repeated symbol.
    pub fn is_eventually_constant(&self) -> bool {
        let first = self.period.0[0];
        self.period.0.iter().all(|&s| s == first)
    }
}

/// A word repeated `repeats` times.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "(Word, u64)", into = "(Word, u64)")]
pub struct Block {
    pub word: Word,
    pub repeats: u64,
}

impl Block {
    pub fn new(word: Word, repeats: u64) -> Result<Self> {
        if repeats == 0 {
            return Err(Error::Domain("block repeats must be positive".into()));
        }
        Ok(Self { word, repeats })
    }

    pub fn len(&self) -> u64 {
        self.word.len() as u64 * self.repeats
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl TryFrom<(Word, u64)> for Block {
    type Error = Error;

    fn try_from((word, repeats): (Word, u64)) -> Result<Self> {
        Block::new(word, repeats)
    }
}

impl From<Block> for (Word, u64) {
    fn from(b: Block) -> Self {
        (b.word, b.repeats)
    }
}

/// Generator for an unbounded tail of constant blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BlockTail {
    /// Block `i` (from 0) is `symbols[i % len]` repeated `first_length · ratio^i` times.
    Geometric { symbols: Vec<u32>, first_length: u64, ratio: u64 },
}

impl BlockTail {
    fn validate(&self) -> Result<()> {
        match self {
            BlockTail::Geometric { symbols, first_length, ratio } => {
                if symbols.is_empty() {
                    return Err(Error::Domain("geometric tail needs at least one symbol".into()));
                }
                check_nonzero(symbols)?;
                if *first_length == 0 || *ratio == 0 {
                    return Err(Error::Domain("geometric tail lengths must be positive".into()));
                }
                Ok(())
            }
        }
    }

    /// Symbol at 0-based offset `r` into the tail.
    fn eval(&self, mut r: u64) -> u32 {
        match self {
            BlockTail::Geometric { symbols, first_length, ratio } => {
                let mut len = *first_length;
                let mut i = 0usize;
                while r >= len {
                    r -= len;
                    len = len.saturating_mul(*ratio);
                    i += 1;
                }
                symbols[i % symbols.len()]
            }
        }
    }

    /// Split off the first block, returning it and the remaining tail.
    fn split_first(&self) -> (Block, BlockTail) {
        match self {
            BlockTail::Geometric { symbols, first_length, ratio } => {
                let block = Block { word: Word(vec![symbols[0]]), repeats: *first_length };
                let mut rest = symbols.clone();
                rest.rotate_left(1);
                let tail = BlockTail::Geometric {
                    symbols: rest,
                    first_length: first_length.saturating_mul(*ratio),
                    ratio: *ratio,
                };
                (block, tail)
            }
        }
    }
}

/// `prefix`, then explicit blocks, then an optional unbounded tail.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BlockScheduleRepr", into = "BlockScheduleRepr")]
pub struct BlockSchedule {
    prefix: Vec<u32>,
    blocks: Vec<Block>,
    tail: Option<BlockTail>,
    /// cumulative end position (1-based, inclusive) of each explicit block
    ends: Vec<u64>,
}

#[derive(Serialize, Deserialize)]
struct BlockScheduleRepr {
    #[serde(default)]
    prefix: Vec<u32>,
    #[serde(default)]
    blocks: Vec<Block>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<BlockTail>,
}

impl TryFrom<BlockScheduleRepr> for BlockSchedule {
    type Error = Error;

    fn try_from(r: BlockScheduleRepr) -> Result<Self> {
        BlockSchedule::new(r.prefix, r.blocks, r.tail)
    }
}

impl From<BlockSchedule> for BlockScheduleRepr {
    fn from(b: BlockSchedule) -> Self {
        Self { prefix: b.prefix, blocks: b.blocks, tail: b.tail }
    }
}

impl BlockSchedule {
    pub fn new(prefix: Vec<u32>, blocks: Vec<Block>, tail: Option<BlockTail>) -> Result<Self> {
        check_nonzero(&prefix)?;
        if let Some(t) = &tail {
            t.validate()?;
        }
        let mut s = Self { prefix, blocks: Vec::new(), tail, ends: Vec::new() };
        for b in blocks {
            s.push_block(b);
        }
        Ok(s)
    }

    /// A finite schedule listing every symbol explicitly, run-length compressed.
    pub fn from_symbols(symbols: &[u32]) -> Result<Self> {
        check_nonzero(symbols)?;
        let mut s = Self::new(Vec::new(), Vec::new(), None)?;
        for &sym in symbols {
            s.push_symbol_run(sym, 1);
        }
        Ok(s)
    }

    pub fn prefix(&self) -> &[u32] {
        &self.prefix
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tail(&self) -> Option<&BlockTail> {
        self.tail.as_ref()
    }

    pub(crate) fn push_block(&mut self, b: Block) {
        let start = self.ends.last().copied().unwrap_or(self.prefix.len() as u64);
        self.ends.push(start.saturating_add(b.len()));
        self.blocks.push(b);
    }

    /// Append a word block, merging with the previous block when the word matches.
    pub(crate) fn push_word(&mut self, word: Word, repeats: u64) {
        if repeats == 0 {
            return;
        }
        if let Some(last) = self.blocks.last_mut() {
            if last.word == word {
                last.repeats += repeats;
                let add = word.len() as u64 * repeats;
                *self.ends.last_mut().expect("ends tracks blocks") += add;
                return;
            }
        }
        self.push_block(Block { word, repeats });
    }

    pub(crate) fn push_symbol_run(&mut self, symbol: u32, repeats: u64) {
        self.push_word(Word(vec![symbol]), repeats);
    }

    /// Length of the explicit part (prefix plus blocks).
    pub fn explicit_len(&self) -> u64 {
        self.ends.last().copied().unwrap_or(self.prefix.len() as u64)
    }

    /// `None` when a tail makes the schedule unbounded.
    pub fn horizon(&self) -> Option<u64> {
        match self.tail {
            Some(_) => None,
            None => Some(self.explicit_len()),
        }
    }

    fn eval(&self, n: u64) -> Result<u32> {
        let p = self.prefix.len() as u64;
        if n <= p {
            return Ok(self.prefix[(n - 1) as usize]);
        }
        let explicit = self.explicit_len();
        if n <= explicit {
            // first block whose end reaches n
            let i = self.ends.partition_point(|&e| e < n);
            let start = if i == 0 { p } else { self.ends[i - 1] };
            let b = &self.blocks[i];
            let offset = (n - start - 1) % b.word.len() as u64;
            return Ok(b.word.0[offset as usize]);
        }
        match &self.tail {
            Some(t) => Ok(t.eval(n - explicit - 1)),
            None => Err(Error::Horizon { index: n, horizon: explicit }),
        }
    }

    fn rebuilt(prefix: Vec<u32>, blocks: Vec<Block>, tail: Option<BlockTail>) -> BlockSchedule {
        let mut s = BlockSchedule { prefix, blocks: Vec::new(), tail, ends: Vec::new() };
        for b in blocks {
            s.push_block(b);
        }
        s
    }

    /// Drop the first symbol. `None` if the schedule is exhausted.
    fn shifted(&self) -> Option<BlockSchedule> {
        if !self.prefix.is_empty() {
            return Some(Self::rebuilt(self.prefix[1..].to_vec(), self.blocks.clone(), self.tail.clone()));
        }
        if let Some(first) = self.blocks.first() {
            // w^r loses its first symbol: (w[1..]) then w^(r-1)
            let prefix = first.word.0[1..].to_vec();
            let mut rest = Vec::with_capacity(self.blocks.len());
            if first.repeats > 1 {
                rest.push(Block { word: first.word.clone(), repeats: first.repeats - 1 });
            }
            rest.extend(self.blocks[1..].iter().cloned());
            return Some(Self::rebuilt(prefix, rest, self.tail.clone()));
        }
        let (block, rest) = self.tail.as_ref()?.split_first();
        Self::rebuilt(Vec::new(), vec![block], Some(rest)).shifted()
    }
}

/// An adaptively synthesized law: the blocks emitted so far plus the
/// generator state that produces further blocks on demand.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesizedLaw {
    pub schedule: BlockSchedule,
    pub generator: UniformGenerator,
}

impl SynthesizedLaw {
    /// A copy whose explicit schedule covers at least `n` symbols.
    pub fn extended_to(&self, n: u64) -> Result<SynthesizedLaw> {
        let mut out = self.clone();
        while out.schedule.explicit_len() < n {
            out.generator.emit_stage(&mut out.schedule)?;
        }
        Ok(out)
    }
}

/// An infinite (or explicitly finite) switching law `σ: N → {1..K}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawProgram {
    Periodic(PeriodicLaw),
    Blocks(BlockSchedule),
    Synthesized(Box<SynthesizedLaw>),
}

impl LawProgram {
    pub fn periodic(prefix: Vec<u32>, period: Vec<u32>) -> Result<Self> {
        Ok(LawProgram::Periodic(PeriodicLaw::new(prefix, Word::new(period)?)?))
    }

    pub fn constant(symbol: u32) -> Result<Self> {
        Self::periodic(Vec::new(), vec![symbol])
    }

    /// A finite law listing its symbols.
    pub fn finite(symbols: &[u32]) -> Result<Self> {
        Ok(LawProgram::Blocks(BlockSchedule::from_symbols(symbols)?))
    }

    /// `(a^{first}, b^{first·ratio}, a^{first·ratio²}, …)` cycling through `symbols`.
    pub fn geometric(symbols: Vec<u32>, first_length: u64, ratio: u64) -> Result<Self> {
        let tail = BlockTail::Geometric { symbols, first_length, ratio };
        Ok(LawProgram::Blocks(BlockSchedule::new(Vec::new(), Vec::new(), Some(tail))?))
    }

    /// Number of defined indices, `None` for unbounded laws.
    pub fn horizon(&self) -> Option<u64> {
        match self {
            LawProgram::Periodic(_) | LawProgram::Synthesized(_) => None,
            LawProgram::Blocks(b) => b.horizon(),
        }
    }

    /// `σ(n)` for 1-based `n`.
    pub fn evaluate(&self, n: u64) -> Result<u32> {
        if n == 0 {
            return Err(Error::Domain("law indices start at 1".into()));
        }
        match self {
            LawProgram::Periodic(p) => Ok(p.eval(n)),
            LawProgram::Blocks(b) => b.eval(n),
            LawProgram::Synthesized(s) => {
                if n <= s.schedule.explicit_len() {
                    s.schedule.eval(n)
                } else {
                    s.extended_to(n)?.schedule.eval(n)
                }
            }
        }
    }

    /// `σ(1), …, σ(horizon)`.
    pub fn symbols(&self, horizon: u64) -> Result<Vec<u32>> {
        if let Some(h) = self.horizon() {
            if horizon > h {
                return Err(Error::Horizon { index: horizon, horizon: h });
            }
        }
        match self {
            LawProgram::Synthesized(s) if horizon > s.schedule.explicit_len() => {
                let ext = s.extended_to(horizon)?;
                (1..=horizon).map(|n| ext.schedule.eval(n)).collect()
            }
            _ => (1..=horizon).map(|n| self.evaluate(n)).collect(),
        }
    }

    /// Check every symbol up to `horizon` lies in `1..=k`.
    pub fn check_alphabet(&self, k: usize, horizon: u64) -> Result<()> {
        check_symbols(&self.symbols(horizon)?, k)
    }

    /// The one-sided shift: `evaluate(shift(L), n) = evaluate(L, n + 1)`.
    pub fn shift(&self) -> Result<LawProgram> {
        match self {
            LawProgram::Periodic(p) => {
                if p.prefix.is_empty() {
                    let mut period = p.period.0.clone();
                    period.rotate_left(1);
                    Ok(LawProgram::Periodic(PeriodicLaw { prefix: Vec::new(), period: Word(period) }))
                } else {
                    Ok(LawProgram::Periodic(PeriodicLaw { prefix: p.prefix[1..].to_vec(), period: p.period.clone() }))
                }
            }
            LawProgram::Blocks(b) => match b.shifted() {
                Some(s) => Ok(LawProgram::Blocks(s)),
                None => Err(Error::Horizon { index: 1, horizon: 0 }),
            },
            LawProgram::Synthesized(s) => {
                let s = if s.schedule.explicit_len() == 0 { s.extended_to(1)? } else { (**s).clone() };
                let schedule = s.schedule.shifted().expect("nonempty schedule shifts");
                Ok(LawProgram::Synthesized(Box::new(SynthesizedLaw { schedule, generator: s.generator })))
            }
        }
    }

    /// Canonical form for structural comparison of periodic laws.
    pub fn canonical(&self) -> LawProgram {
        match self {
            LawProgram::Periodic(p) => LawProgram::Periodic(p.canonical()),
            other => other.clone(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            LawProgram::Periodic(p) => format!("periodic(prefix={:?}, period={:?})", p.prefix, p.period.0),
            LawProgram::Blocks(b) => format!(
                "blocks(prefix_len={}, blocks={}, tail={})",
                b.prefix.len(),
                b.blocks.len(),
                b.tail.is_some()
            ),
            LawProgram::Synthesized(s) => format!("synthesized(emitted={})", s.schedule.explicit_len()),
        }
    }
}

/// The cylinder of laws with `σ(start + i) = symbols[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderPattern {
    pub start: u64,
    pub symbols: Vec<u32>,
}

impl CylinderPattern {
    pub fn new(start: u64, symbols: Vec<u32>) -> Result<Self> {
        if start == 0 {
            return Err(Error::Domain("cylinder start index is 1-based".into()));
        }
        check_nonzero(&symbols)?;
        Ok(Self { start, symbols })
    }
}

pub fn evaluate(law: &LawProgram, n: u64) -> Result<u32> {
    law.evaluate(n)
}

pub fn shift(law: &LawProgram) -> Result<LawProgram> {
    law.shift()
}

/// Truncation of `d(σ,σ') = Σ |σ(n) − σ'(n)| / Kⁿ` to `n ≤ horizon`.
/// Returns `(value, tail_bound)`; the true distance lies in `[value, value + tail_bound]`.
pub fn law_metric_truncated(a: &LawProgram, b: &LawProgram, horizon: u64, k: usize) -> Result<(f64, f64)> {
    if horizon == 0 {
        return Err(Error::Domain("metric truncation needs a positive horizon".into()));
    }
    if k == 0 {
        return Err(Error::Domain("alphabet size must be positive".into()));
    }
    let xs = a.symbols(horizon)?;
    let ys = b.symbols(horizon)?;
    let kf = k as f64;
    let mut weight = 1.0;
    let mut value = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        weight /= kf;
        value += (*x as f64 - *y as f64).abs() * weight;
    }
    Ok((value, kf.powf(-(horizon as f64))))
}

pub fn matches_cylinder(law: &LawProgram, pat: &CylinderPattern) -> Result<bool> {
    for (i, &s) in pat.symbols.iter().enumerate() {
        if law.evaluate(pat.start + i as u64)? != s {
            return Ok(false);
        }
    }
    Ok(true)
}
