//! Constructive synthesis of fiber-chaotic and zero-exponent switching laws,
//! with certificates that can be replayed by plain word products.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{co_norm, operator_norm, vec_norm, Mat, ScaledMat, SystemSpec};
use crate::lyapunov::simulate;
use crate::symbolic::{BlockSchedule, LawProgram, SynthesizedLaw, Word};

/// Default cap on the repeat count searched per stage.
pub const DEFAULT_REPEAT_CAP: u64 = 1_000_000;

/// One stage of a uniform fiber-chaos certificate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosStage {
    pub k: usize,
    /// repeats of the contracting word
    pub ell_k: u64,
    /// repeats of the expanding word
    #[serde(rename = "L_k")]
    pub big_l_k: u64,
    pub contract_target: f64,
    pub expand_target: f64,
    /// operator norm of the cumulative product after the contracting block
    pub norm_after_contract: f64,
    /// co-norm of the cumulative product after the expanding block
    pub conorm_after_expand: f64,
    /// law length after the contracting block
    pub contract_end: u64,
    /// law length after the expanding block
    pub cumulative_length: u64,
    /// whether `ell_k < L_k`; the norm targets do not need it
    pub ordering_holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosCertificate {
    pub prefix: Vec<u32>,
    pub w_contract: Word,
    pub w_expand: Word,
    pub stages: Vec<ChaosStage>,
}

impl ChaosCertificate {
    /// Stages whose repeat counts break the `ell_k < L_k` ordering.
    pub fn ordering_violations(&self) -> Vec<usize> {
        self.stages.iter().filter(|s| !s.ordering_holds).map(|s| s.k).collect()
    }
}

/// Stage targets `(norm below, co-norm above)`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSchedule {
    /// `(1/k, k)`
    #[default]
    Reciprocal,
    /// explicit targets; stages past the list end stop the generator
    Explicit { targets: Vec<(f64, f64)> },
}

impl TargetSchedule {
    fn at(&self, k: usize) -> Option<(f64, f64)> {
        match self {
            TargetSchedule::Reciprocal => Some((1.0 / k as f64, k as f64)),
            TargetSchedule::Explicit { targets } => targets.get(k - 1).copied(),
        }
    }
}

/// Resumable state of the uniform synthesis: enough to emit every later
/// stage bit-identically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGenerator {
    sys: SystemSpec,
    w_contract: Word,
    w_expand: Word,
    contract_mat: Mat,
    expand_mat: Mat,
    targets: TargetSchedule,
    repeat_cap: u64,
    next_k: usize,
    cumulative: ScaledMat,
    length: u64,
}

impl UniformGenerator {
    pub fn new(
        sys: &SystemSpec,
        w_contract: Word,
        w_expand: Word,
        prefix: &[u32],
        targets: TargetSchedule,
        repeat_cap: u64,
    ) -> Result<Self> {
        w_contract.check_alphabet(sys.k())?;
        w_expand.check_alphabet(sys.k())?;
        crate::symbolic::check_symbols(prefix, sys.k())?;
        let tol = sys.tol();
        let contract_mat = sys.product(w_contract.symbols())?;
        let expand_mat = sys.product(w_expand.symbols())?;
        let cn = operator_norm(&contract_mat);
        if cn >= 1.0 - tol {
            return Err(Error::Precondition(format!(
                "contracting word needs ‖S(w_contract)‖ < 1 − tol; got {cn}"
            )));
        }
        let ec = co_norm(&expand_mat);
        if ec <= 1.0 + tol {
            return Err(Error::Precondition(format!(
                "expanding word needs ‖S(w_expand)‖_co > 1 + tol; got {ec}"
            )));
        }
        let mut cumulative = ScaledMat::identity(sys.dim());
        for &s in prefix {
            cumulative.left_mul(sys.mat(s));
        }
        Ok(Self {
            sys: sys.clone(),
            w_contract,
            w_expand,
            contract_mat,
            expand_mat,
            targets,
            repeat_cap,
            next_k: 1,
            cumulative,
            length: prefix.len() as u64,
        })
    }

    pub fn next_stage(&self) -> usize {
        self.next_k
    }

    /// Least repeat count of `block` driving the cumulative product past a target.
    fn least_repeats(&mut self, contract: bool, target: f64, k: usize) -> Result<(u64, f64)> {
        let tol = self.sys.tol();
        let block = if contract { &self.contract_mat } else { &self.expand_mat };
        for r in 1..=self.repeat_cap {
            self.cumulative.left_mul(block);
            let value = if contract {
                self.cumulative.log_norm().exp()
            } else {
                self.cumulative.log_co_norm().exp()
            };
            let hit = if contract { value < target - tol } else { value > target + tol };
            if hit {
                return Ok((r, value));
            }
        }
        Err(Error::CapExceeded {
            what: format!("{} repeats", if contract { "contracting" } else { "expanding" }),
            cap: self.repeat_cap,
            stage: k,
            partial: None,
        })
    }

    /// Append the next stage's two blocks to `schedule`.
    pub fn emit_stage(&mut self, schedule: &mut BlockSchedule) -> Result<ChaosStage> {
        let k = self.next_k;
        let (lo, hi) = self
            .targets
            .at(k)
            .ok_or_else(|| Error::Domain(format!("target schedule has no stage {k}")))?;
        let (ell, norm) = self.least_repeats(true, lo, k)?;
        self.length += ell * self.w_contract.len() as u64;
        let contract_end = self.length;
        let (big_l, conorm) = self.least_repeats(false, hi, k)?;
        self.length += big_l * self.w_expand.len() as u64;
        schedule.push_word(self.w_contract.clone(), ell);
        schedule.push_word(self.w_expand.clone(), big_l);
        self.next_k += 1;
        Ok(ChaosStage {
            k,
            ell_k: ell,
            big_l_k: big_l,
            contract_target: lo,
            expand_target: hi,
            norm_after_contract: norm,
            conorm_after_expand: conorm,
            contract_end,
            cumulative_length: self.length,
            ordering_holds: ell < big_l,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformSynthesis {
    pub law: LawProgram,
    pub certificate: ChaosCertificate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformOptions {
    pub targets: TargetSchedule,
    pub repeat_cap: u64,
}

impl Default for UniformOptions {
    fn default() -> Self {
        Self { targets: TargetSchedule::Reciprocal, repeat_cap: DEFAULT_REPEAT_CAP }
    }
}

/// The law `prefix, w_c^{ℓ_1}, w_e^{L_1}, w_c^{ℓ_2}, …` with least repeat
/// counts meeting the stage targets.
pub fn synthesize_uniform(
    sys: &SystemSpec,
    w_contract: &Word,
    w_expand: &Word,
    prefix: &[u32],
    k_max: usize,
    opts: &UniformOptions,
) -> Result<UniformSynthesis> {
    if k_max == 0 {
        return Err(Error::Domain("k_max must be at least 1".into()));
    }
    let mut gen = UniformGenerator::new(
        sys,
        w_contract.clone(),
        w_expand.clone(),
        prefix,
        opts.targets.clone(),
        opts.repeat_cap,
    )?;
    let mut schedule = BlockSchedule::new(prefix.to_vec(), Vec::new(), None)?;
    let mut cert = ChaosCertificate {
        prefix: prefix.to_vec(),
        w_contract: w_contract.clone(),
        w_expand: w_expand.clone(),
        stages: Vec::with_capacity(k_max),
    };
    for _ in 0..k_max {
        match gen.emit_stage(&mut schedule) {
            Ok(stage) => cert.stages.push(stage),
            Err(Error::CapExceeded { what, cap, stage, .. }) => {
                return Err(Error::CapExceeded { what, cap, stage, partial: Some(Box::new(cert)) })
            }
            Err(e) => return Err(e),
        }
    }
    let law = LawProgram::Synthesized(Box::new(SynthesizedLaw { schedule, generator: gen }));
    Ok(UniformSynthesis { law, certificate: cert })
}

/// One step of a product ledger, natural logs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub n: u64,
    pub log_norm: f64,
    pub log_conorm: f64,
}

/// Running `log ‖S_{σ(n)}⋯S_{σ(1)}‖` and co-norm for `n = 1..=horizon`.
pub fn replay_fixed_schedule(sys: &SystemSpec, law: &LawProgram, horizon: u64) -> Result<Vec<LedgerEntry>> {
    let symbols = law.symbols(horizon)?;
    crate::symbolic::check_symbols(&symbols, sys.k())?;
    let mut acc = ScaledMat::identity(sys.dim());
    let mut out = Vec::with_capacity(symbols.len());
    for (i, &s) in symbols.iter().enumerate() {
        acc.left_mul(sys.mat(s));
        out.push(LedgerEntry { n: i as u64 + 1, log_norm: acc.log_norm(), log_conorm: acc.log_co_norm() });
    }
    Ok(out)
}

/// Extreme of a scanned ledger.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LedgerExtreme {
    pub n: u64,
    pub log_value: f64,
    pub value: f64,
}

impl LedgerExtreme {
    fn new(n: u64, log_value: f64) -> Self {
        Self { n, log_value, value: log_value.exp() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChaosCheck {
    pub pass: bool,
    pub horizon: u64,
    pub delta: f64,
    pub big_m: f64,
    /// smallest norm along the ledger (first index on ties)
    pub min_norm: LedgerExtreme,
    /// largest co-norm (uniform check) or norm (pointwise check)
    pub max_value: LedgerExtreme,
}

fn check_thresholds(delta: f64, big_m: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0 && big_m > 1.0) {
        return Err(Error::Domain(format!("need 0 < δ < 1 < M, got δ = {delta}, M = {big_m}")));
    }
    Ok(())
}

fn scan(logs_min: impl Iterator<Item = f64>, logs_max: impl Iterator<Item = f64>) -> (LedgerExtreme, LedgerExtreme) {
    let mut lo = LedgerExtreme::new(0, f64::INFINITY);
    for (i, v) in logs_min.enumerate() {
        if v < lo.log_value {
            lo = LedgerExtreme::new(i as u64 + 1, v);
        }
    }
    let mut hi = LedgerExtreme::new(0, f64::NEG_INFINITY);
    for (i, v) in logs_max.enumerate() {
        if v > hi.log_value {
            hi = LedgerExtreme::new(i as u64 + 1, v);
        }
    }
    (lo, hi)
}

/// Finite proxy of uniform fiber chaos: some product norm below `δ` and some
/// product co-norm above `M` within the horizon.
pub fn verify_uniform_chaotic(
    sys: &SystemSpec,
    law: &LawProgram,
    horizon: u64,
    delta: f64,
    big_m: f64,
) -> Result<ChaosCheck> {
    check_thresholds(delta, big_m)?;
    let ledger = replay_fixed_schedule(sys, law, horizon)?;
    let (min_norm, max_value) = scan(ledger.iter().map(|e| e.log_norm), ledger.iter().map(|e| e.log_conorm));
    let pass = min_norm.log_value < delta.ln() && max_value.log_value > big_m.ln();
    Ok(ChaosCheck { pass, horizon, delta, big_m, min_norm, max_value })
}

/// The same proxy along the single trajectory from `x0`.
pub fn verify_pointwise_chaotic(
    sys: &SystemSpec,
    law: &LawProgram,
    x0: &[f64],
    horizon: u64,
    delta: f64,
    big_m: f64,
) -> Result<ChaosCheck> {
    check_thresholds(delta, big_m)?;
    let rec = simulate(sys, law, x0, horizon)?;
    let (min_norm, max_value) = scan(rec.log_norms.iter().copied(), rec.log_norms.iter().copied());
    let pass = min_norm.log_value < delta.ln() && max_value.log_value > big_m.ln();
    Ok(ChaosCheck { pass, horizon, delta, big_m, min_norm, max_value })
}

/// A direction together with a law driving it toward zero or infinity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSpec {
    pub x: Vec<f64>,
    pub law: LawProgram,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationCaps {
    pub align_cap: u64,
    pub drive_cap: u64,
    /// largest denominator `q` in the rational-angle exclusion test
    pub q_max: u32,
}

impl Default for RotationCaps {
    fn default() -> Self {
        Self { align_cap: 1_000_000, drive_cap: 10_000, q_max: 64 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSynthInput {
    /// symbol of the rotation generator
    pub rot_index: u32,
    pub stable: DriveSpec,
    pub divergent: DriveSpec,
    /// initial state whose trajectory is made to oscillate
    pub u: Vec<f64>,
    /// decreasing thresholds, one per stage
    pub eps_schedule: Vec<f64>,
    #[serde(default)]
    pub caps: RotationCaps,
}

/// One alignment by repeated rotation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    pub repeats: u64,
    /// line angle to the drive direction when accepted
    pub angle: f64,
    /// accepted tolerance
    pub delta: f64,
    /// law length after the alignment block
    pub end_index: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationStage {
    pub k: usize,
    pub eps: f64,
    pub align_down: Alignment,
    /// nominal drive length and the norm of its product
    pub nominal_down: u64,
    pub nominal_down_norm: f64,
    pub drive_down: u64,
    pub min_index: u64,
    pub min_norm: f64,
    pub align_up: Alignment,
    pub nominal_up: u64,
    pub nominal_up_norm: f64,
    pub drive_up: u64,
    pub max_index: u64,
    pub max_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationSynthesis {
    pub law: LawProgram,
    pub u: Vec<f64>,
    pub stages: Vec<RotationStage>,
}

/// Angle between the lines through `a` and `b`, in `[0, π/2]`.
pub fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let cross = a[0] * b[1] - a[1] * b[0];
    let dot = a[0] * b[0] + a[1] * b[1];
    cross.abs().atan2(dot.abs())
}

fn check_rotation(m: &Mat, tol: f64, q_max: u32) -> Result<f64> {
    let gram = m.transpose().mul(m).sub(&Mat::identity(2));
    let det = m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0);
    if gram.max_abs() > tol.max(1e-12) || (det - 1.0).abs() > tol.max(1e-12) {
        return Err(Error::Precondition("the rotation generator is not a rotation within tolerance".into()));
    }
    let theta = m.get(1, 0).atan2(m.get(0, 0));
    let alpha = (theta / (2.0 * PI)).rem_euclid(1.0);
    for q in 1..=q_max {
        let qf = f64::from(q);
        let p = (alpha * qf).round();
        if (alpha - p / qf).abs() <= tol {
            return Err(Error::Precondition(format!(
                "rotation angle 2π·{alpha} is within {tol} of the rational 2π·{p}/{q}"
            )));
        }
    }
    Ok(alpha)
}

struct Tracker<'a> {
    sys: &'a SystemSpec,
    x: Vec<f64>,
    schedule: BlockSchedule,
    n: u64,
}

impl Tracker<'_> {
    fn apply(&mut self, s: u32) {
        self.x = self.sys.mat(s).mul_vec(&self.x);
        self.schedule.push_symbol_run(s, 1);
        self.n += 1;
    }

    fn norm(&self) -> f64 {
        vec_norm(&self.x)
    }
}

/// Nominal pass: run `law` from `‖x‖·dir` until `done` holds. Returns the
/// step count and the norm of the drive product.
fn nominal_drive(
    sys: &SystemSpec,
    law: &LawProgram,
    start: &[f64],
    cap: u64,
    done: impl Fn(f64) -> bool,
    k: usize,
) -> Result<(u64, f64)> {
    let mut y = start.to_vec();
    let mut prod = Mat::identity(2);
    for m in 1..=cap {
        let s = law.evaluate(m)?;
        sys.check_symbol(s)?;
        y = sys.mat(s).mul_vec(&y);
        prod = sys.mat(s).mul(&prod);
        if done(vec_norm(&y)) {
            return Ok((m, operator_norm(&prod)));
        }
    }
    Err(Error::CapExceeded { what: "drive length".into(), cap, stage: k, partial: None })
}

fn align(tr: &mut Tracker, rot: u32, dir: &[f64], delta: f64, cap: u64, k: usize) -> Result<Alignment> {
    let mut repeats = 0;
    loop {
        let angle = line_angle(&tr.x, dir);
        if angle <= delta {
            return Ok(Alignment { repeats, angle, delta, end_index: tr.n });
        }
        if repeats == cap {
            return Err(Error::CapExceeded { what: "alignment repeats".into(), cap, stage: k, partial: None });
        }
        tr.apply(rot);
        repeats += 1;
    }
}

fn drive(tr: &mut Tracker, law: &LawProgram, cap: u64, done: impl Fn(f64) -> bool, k: usize) -> Result<u64> {
    for m in 1..=cap {
        tr.apply(law.evaluate(m)?);
        if done(tr.norm()) {
            return Ok(m);
        }
    }
    Err(Error::CapExceeded { what: "drive length".into(), cap, stage: k, partial: None })
}

fn unit(v: &[f64], what: &str) -> Result<Vec<f64>> {
    let n = vec_norm(v);
    if v.len() != 2 || !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("{what} must be a nonzero finite vector in the plane")));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Staged synthesis for planar systems with an irrational rotation: rotate
/// the state onto a direction the stable law drives to zero, drive it below
/// `ε_k`, rotate onto a direction the divergent law drives to infinity, and
/// drive it above `1/ε_k`.
///
/// Each alignment tolerance is chosen after a nominal pass: if the exact
/// drive product `P` takes `‖u‖·x̄` below `ε_k/2`, any state within line
/// angle `δ = ε_k / (2‖P‖‖u‖)` of `x̄` ends below `ε_k`; symmetrically for
/// the upward drive with target `2/ε_k` and `δ = 1 / (ε_k‖P‖‖u‖)`.
pub fn synthesize_rotation(sys: &SystemSpec, input: &RotationSynthInput, stage_count: usize) -> Result<RotationSynthesis> {
    if sys.dim() != 2 {
        return Err(Error::Domain("rotation synthesis needs a planar system".into()));
    }
    if stage_count == 0 || stage_count > input.eps_schedule.len() {
        return Err(Error::Domain(format!(
            "stage count {stage_count} must lie in 1..={}",
            input.eps_schedule.len()
        )));
    }
    if input.eps_schedule.iter().any(|e| !(*e > 0.0 && *e < 1.0))
        || input.eps_schedule.windows(2).any(|w| w[1] >= w[0])
    {
        return Err(Error::Domain("eps schedule must be strictly decreasing in (0, 1)".into()));
    }
    let caps = input.caps;
    let rot = input.rot_index;
    check_rotation(sys.matrix(rot)?, sys.tol(), caps.q_max)?;
    let xbar = unit(&input.stable.x, "stable direction")?;
    let ybar = unit(&input.divergent.x, "divergent direction")?;
    unit(&input.u, "target vector")?;
    if (vec_norm(&input.stable.x) - 1.0).abs() > 1e-9 || (vec_norm(&input.divergent.x) - 1.0).abs() > 1e-9 {
        return Err(Error::Domain("drive directions must be unit vectors".into()));
    }

    let mut tr = Tracker {
        sys,
        x: input.u.clone(),
        schedule: BlockSchedule::new(Vec::new(), Vec::new(), None)?,
        n: 0,
    };
    let mut stages = Vec::with_capacity(stage_count);
    for (i, &eps) in input.eps_schedule.iter().take(stage_count).enumerate() {
        let k = i + 1;

        // down: nominal pass from the aligned state
        let r = tr.norm();
        let start: Vec<f64> = xbar.iter().map(|c| c * r).collect();
        let (nominal_down, p_down) =
            nominal_drive(sys, &input.stable.law, &start, caps.drive_cap, |v| v < eps / 2.0, k)?;
        let delta = eps / (2.0 * p_down.max(f64::MIN_POSITIVE) * r);
        let align_down = align(&mut tr, rot, &xbar, delta, caps.align_cap, k)?;
        let drive_down = drive(&mut tr, &input.stable.law, caps.drive_cap, |v| v < eps, k)?;
        let (min_index, min_norm) = (tr.n, tr.norm());

        // up
        let r = tr.norm();
        let start: Vec<f64> = ybar.iter().map(|c| c * r).collect();
        let (nominal_up, p_up) =
            nominal_drive(sys, &input.divergent.law, &start, caps.drive_cap, |v| v > 2.0 / eps, k)?;
        let delta = 1.0 / (eps * p_up.max(f64::MIN_POSITIVE) * r);
        let align_up = align(&mut tr, rot, &ybar, delta.min(PI / 2.0), caps.align_cap, k)?;
        let drive_up = drive(&mut tr, &input.divergent.law, caps.drive_cap, |v| v > 1.0 / eps, k)?;
        let (max_index, max_norm) = (tr.n, tr.norm());

        stages.push(RotationStage {
            k,
            eps,
            align_down,
            nominal_down,
            nominal_down_norm: p_down,
            drive_down,
            min_index,
            min_norm,
            align_up,
            nominal_up,
            nominal_up_norm: p_up,
            drive_up,
            max_index,
            max_norm,
        });
    }
    Ok(RotationSynthesis { law: LawProgram::Blocks(tr.schedule), u: input.u.clone(), stages })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionBound {
    pub a: f64,
    pub b: f64,
    /// `min(1, smallest co-norm of a partial word product)`
    pub m_lo: f64,
    /// `max(1, largest norm of a partial word product)`
    pub m_hi: f64,
    pub lower: f64,
    pub upper: f64,
    /// index of the first word boundary with the state norm inside `[a, b]`
    pub first_crossing: Option<u64>,
    /// `max(|log lower|, |log upper|)`; bounds `|log ‖x_n‖|` past the crossing
    pub log_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroExponentSynthesis {
    pub law: LawProgram,
    pub excursion: ExcursionBound,
}

fn partial_extremes(sys: &SystemSpec, w: &Word) -> (f64, f64) {
    let mut acc = Mat::identity(sys.dim());
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &s in w.symbols() {
        acc = sys.mat(s).mul(&acc);
        lo = lo.min(co_norm(&acc));
        hi = hi.max(operator_norm(&acc));
    }
    (lo, hi)
}

/// Greedy ping-pong keeping `‖x_n‖` in an annulus: whole contracting words
/// while `‖x‖ > 1`, whole expanding words while `‖x‖ ≤ 1`.
pub fn synthesize_zero_exponent(
    sys: &SystemSpec,
    w_contract: &Word,
    w_expand: &Word,
    x0: &[f64],
    band: (f64, f64),
    horizon: u64,
) -> Result<ZeroExponentSynthesis> {
    let (a, b) = band;
    if !(a > 0.0 && a < 1.0 && b > 1.0) {
        return Err(Error::Domain(format!("band needs 0 < a < 1 < b, got ({a}, {b})")));
    }
    if x0.len() != sys.dim() || !x0.iter().all(|v| v.is_finite()) || vec_norm(x0) == 0.0 {
        return Err(Error::Domain("x0 must be a nonzero finite vector of the system dimension".into()));
    }
    if horizon == 0 {
        return Err(Error::Domain("horizon must be positive".into()));
    }
    w_contract.check_alphabet(sys.k())?;
    w_expand.check_alphabet(sys.k())?;
    let tol = sys.tol();
    let pc = sys.product(w_contract.symbols())?;
    let pe = sys.product(w_expand.symbols())?;
    let (cn, cc) = (operator_norm(&pc), co_norm(&pc));
    let (en, ec) = (operator_norm(&pe), co_norm(&pe));
    if cn >= 1.0 - tol {
        return Err(Error::Precondition(format!("‖S(w_contract)‖ < 1 − tol fails: ‖S(w_contract)‖ = {cn}")));
    }
    if ec <= 1.0 + tol {
        return Err(Error::Precondition(format!("‖S(w_expand)‖_co > 1 + tol fails: ‖S(w_expand)‖_co = {ec}")));
    }
    if cc < a {
        return Err(Error::Precondition(format!("a ≤ ‖S(w_contract)‖_co fails: a = {a}, co-norm = {cc}")));
    }
    if en > b {
        return Err(Error::Precondition(format!("‖S(w_expand)‖ ≤ b fails: b = {b}, norm = {en}")));
    }
    let (lo_c, hi_c) = partial_extremes(sys, w_contract);
    let (lo_e, hi_e) = partial_extremes(sys, w_expand);
    let m_lo = lo_c.min(lo_e).min(1.0);
    let m_hi = hi_c.max(hi_e).max(1.0);

    let mut x = x0.to_vec();
    let mut n: u64 = 0;
    let mut first_crossing = None;
    let mut schedule = BlockSchedule::new(Vec::new(), Vec::new(), None)?;
    while n < horizon {
        let r = vec_norm(&x);
        if first_crossing.is_none() && (a..=b).contains(&r) {
            first_crossing = Some(n);
        }
        let word = if r > 1.0 { w_contract } else { w_expand };
        let take = (word.len() as u64).min(horizon - n) as usize;
        for &s in &word.symbols()[..take] {
            x = sys.mat(s).mul_vec(&x);
        }
        if take == word.len() {
            schedule.push_word(word.clone(), 1);
        } else {
            for &s in &word.symbols()[..take] {
                schedule.push_symbol_run(s, 1);
            }
        }
        // keep the state representable; the norm test only needs its size
        let r = vec_norm(&x);
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::Numeric("state left the representable range".into()));
        }
        n += take as u64;
    }
    let lower = a * m_lo;
    let upper = b * m_hi;
    Ok(ZeroExponentSynthesis {
        law: LawProgram::Blocks(schedule),
        excursion: ExcursionBound {
            a,
            b,
            m_lo,
            m_hi,
            lower,
            upper,
            first_crossing,
            log_bound: lower.ln().abs().max(upper.ln().abs()),
        },
    })
}
