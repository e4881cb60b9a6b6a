//! File formats: system and law JSON, versioned report envelopes and CSV tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat, SystemSpec, DEFAULT_NONSINGULARITY_TOL, DEFAULT_TOL};
use crate::classify::{BjVerdict, NonchaoticStability, RunProfile};
use crate::lyapunov::{ExponentSummary, MonteCarloSummary, TrajectoryRecord};
use crate::spectral::{
    BoundsTable, CoBoundsTable, FeasibilityVerdict, FinitenessCandidate, GrowthCurve, StabilityReport,
};
use crate::symbolic::LawProgram;
use crate::synth::{ChaosCertificate, RotationSynthesis, UniformSynthesis, ZeroExponentSynthesis};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of a [`SystemSpec`]; matrices are nested row-major arrays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub dim: usize,
    pub matrices: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonsingularity_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn check_schema(v: u32) -> Result<()> {
    if v != SCHEMA_VERSION {
        return Err(Error::Parse(format!("unsupported schema_version {v}, expected {SCHEMA_VERSION}")));
    }
    Ok(())
}

impl SystemFile {
    pub fn from_spec(sys: &SystemSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            dim: sys.dim(),
            matrices: sys.matrices().iter().map(Mat::rows).collect(),
            labels: sys.labels().map(<[String]>::to_vec),
            nonsingularity_tol: Some(sys.nonsingularity_tol()),
            tol: Some(sys.tol()),
        }
    }

    pub fn into_spec(self) -> Result<SystemSpec> {
        check_schema(self.schema_version)?;
        if self.dim == 0 {
            return Err(Error::Input("dim must be positive".into()));
        }
        let mut mats = Vec::with_capacity(self.matrices.len());
        for (i, rows) in self.matrices.iter().enumerate() {
            if rows.len() != self.dim || rows.iter().any(|r| r.len() != self.dim) {
                return Err(Error::Input(format!("matrix {} is not {d}×{d}", i + 1, d = self.dim)));
            }
            mats.push(Mat::from_rows(rows).map_err(|e| Error::Input(format!("matrix {}: {e}", i + 1)))?);
        }
        let sys = SystemSpec::with_tolerances(
            mats,
            self.nonsingularity_tol.unwrap_or(DEFAULT_NONSINGULARITY_TOL),
            self.tol.unwrap_or(DEFAULT_TOL),
        )?;
        match self.labels {
            Some(l) => sys.with_labels(l),
            None => Ok(sys),
        }
    }
}

/// Parse and validate a system; parse errors carry line and column.
pub fn parse_system(text: &str) -> Result<SystemSpec> {
    let file: SystemFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.into_spec()
}

pub fn load_system(path: impl AsRef<Path>) -> Result<SystemSpec> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_system(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn system_to_json(sys: &SystemSpec) -> String {
    serde_json::to_string_pretty(&SystemFile::from_spec(sys)).expect("system serializes")
}

#[derive(Serialize, Deserialize)]
struct LawFile {
    #[serde(default = "schema_version")]
    schema_version: u32,
    #[serde(flatten)]
    law: LawProgram,
}

pub fn parse_law(text: &str) -> Result<LawProgram> {
    let file: LawFile = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    check_schema(file.schema_version)?;
    Ok(file.law)
}

pub fn load_law(path: impl AsRef<Path>) -> Result<LawProgram> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_law(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn law_to_json(law: &LawProgram) -> String {
    let file = LawFile { schema_version: SCHEMA_VERSION, law: law.clone() };
    serde_json::to_string_pretty(&file).expect("law serializes")
}

/// Versioned wrapper for every JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub schema_version: u32,
    pub kind: String,
    pub result: T,
}

impl<T> Envelope<T> {
    pub fn new(kind: impl Into<String>, result: T) -> Self {
        Self { schema_version: SCHEMA_VERSION, kind: kind.into(), result }
    }
}

impl<T: Serialize> Envelope<T> {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn parse_envelope<T: for<'de> Deserialize<'de>>(text: &str) -> Result<Envelope<T>> {
    let env: Envelope<T> = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    check_schema(env.schema_version)?;
    Ok(env)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub bounds: BoundsTable,
    pub cobounds: CoBoundsTable,
    pub stability: StabilityReport,
    pub finiteness: FinitenessCandidate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthesisMode {
    Uniform,
    Rotation,
    ZeroExponent,
}

/// Output of a synthesis run. Exactly the fields relevant to `mode` and to
/// how far the run got are present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub mode: SynthesisMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feasibility: Option<FeasibilityVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniform: Option<UniformSynthesis>,
    /// stages completed before a repeat cap was hit
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partial: Option<ChaosCertificate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<RotationSynthesis>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zero_exponent: Option<ZeroExponentSynthesis>,
}

impl SynthesisReport {
    pub fn empty(mode: SynthesisMode) -> Self {
        Self { mode, feasibility: None, uniform: None, partial: None, rotation: None, zero_exponent: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trajectory: TrajectoryRecord,
    pub exponents: ExponentSummary,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub profile: RunProfile,
    pub verdict: BjVerdict,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<NonchaoticStability>,
}

/// `n,lower,upper,witness_lower,witness_upper`; words are space separated.
pub fn bounds_csv(table: &BoundsTable) -> String {
    let mut out = String::from("n,lower,upper,witness_lower,witness_upper\n");
    for r in &table.rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.n, r.lower, r.upper, r.witness_lower, r.witness_upper);
    }
    out
}

pub fn cobounds_csv(table: &CoBoundsTable) -> String {
    let mut out = String::from("n,lower,upper,witness_lower,witness_upper,direct_lower\n");
    for r in &table.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n, r.lower, r.upper, r.witness_lower, r.witness_upper, r.direct_lower
        );
    }
    out
}

/// `n,log_norm,partial_exponent`, one row per step.
pub fn trajectory_csv(rec: &TrajectoryRecord) -> String {
    let mut out = String::with_capacity(rec.log_norms.len() * 40 + 32);
    out.push_str("n,log_norm,partial_exponent\n");
    for (i, (l, p)) in rec.log_norms.iter().zip(&rec.partial_exponents).enumerate() {
        let _ = writeln!(out, "{},{l},{p}", i + 1);
    }
    out
}

/// Side-by-side bounds and co-bounds; cells past a table's completed depth stay empty.
pub fn analysis_csv(bounds: &BoundsTable, co: &CoBoundsTable) -> String {
    let mut out =
        String::from("n,lower,upper,witness_lower,witness_upper,co_lower,co_upper,co_witness_lower,co_witness_upper\n");
    let rows = bounds.rows.len().max(co.rows.len());
    for i in 0..rows {
        let _ = write!(out, "{}", i + 1);
        match bounds.rows.get(i) {
            Some(r) => {
                let _ = write!(out, ",{},{},{},{}", r.lower, r.upper, r.witness_lower, r.witness_upper);
            }
            None => out.push_str(",,,,"),
        }
        match co.rows.get(i) {
            Some(r) => {
                let _ = writeln!(out, ",{},{},{},{}", r.lower, r.upper, r.witness_lower, r.witness_upper);
            }
            None => out.push_str(",,,,\n"),
        }
    }
    out
}

/// `trial,estimate`
pub fn monte_carlo_csv(summary: &MonteCarloSummary) -> String {
    let mut out = String::from("trial,estimate\n");
    for (t, e) in summary.estimates.iter().enumerate() {
        let _ = writeln!(out, "{t},{e}");
    }
    out
}

pub fn growth_csv(curve: &GrowthCurve) -> String {
    let mut out = String::from("n,g,witness\n");
    for p in &curve.points {
        let _ = writeln!(out, "{},{},{}", p.n, p.g, p.witness);
    }
    out
}
