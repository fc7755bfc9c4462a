//! Mining jobs: enumerate a space, measure every machine on a range of unary
//! inputs, fit its sequences, analyse its dimension and persist the results
//! as JSON Lines.
//!
//! A job directory holds `manifest.json` with the job parameters and three
//! append-only streams: `metrics.jsonl`, `fits.jsonl` and `dimensions.jsonl`.
//! Machines are processed in ascending id order in chunks; a chunk's metrics
//! and fits are written before its dimension records, so a machine counts as
//! done once its dimension record is present. Resuming drops partial
//! records of unfinished machines and carries on.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algebra::Rational;
use num_traits::One;
use crate::dimension::{
    analyze, log_ratio, ratio_fallback, Bucket, BranchClasses, DimensionReport, Findings, Flag,
    LimitValue, MachineModels, RatioValue, RawSeries,
};
use crate::error::{Error, Result};
use crate::machine::{unary_input, MachineId, Space, TransitionTable};
use crate::seq::{fit_sequence, lcm, FitReport, SequenceModel, Term, Verdict, MIN_TERMS};
use crate::sim::{run, RunMetrics, RunOptions, Status, DEFAULT_BUDGET};

pub const MANIFEST: &str = "manifest.json";
pub const METRICS: &str = "metrics.jsonl";
pub const FITS: &str = "fits.jsonl";
pub const DIMENSIONS: &str = "dimensions.jsonl";

/// Last input of the extended pass for alternating machines.
pub const EXTENDED_INPUTS: u64 = 60;
/// Step budget per input of the extended pass.
pub const EXTENDED_BUDGET: u64 = 100_000_000;
/// The extended pass stops after this many consecutive inputs exhaust the
/// budget: one full period of every split the fitter tries.
pub const EXTENDED_STOP: usize = 6;
/// A machine whose last this many inputs all diverge gets no dimension.
pub const TAIL_INPUTS: usize = 6;
/// Machines per parallel chunk.
const CHUNK: usize = 512;
/// Divergence marker in function fingerprints.
pub const DIVERGENCE_MARK: &str = "-";

/// Inclusive range of unary inputs, written `a..b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputRange {
    pub start: u64,
    pub end: u64,
}

impl InputRange {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if start == 0 {
            return Err(Error::InvalidInput("inputs start at 1".into()));
        }
        if end < start {
            return Err(Error::InvalidInput(format!("empty input range {start}..{end}")));
        }
        Ok(Self { start, end })
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> {
        self.start..=self.end
    }

    pub fn len(&self) -> usize {
        (self.end - self.start + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl Default for InputRange {
    fn default() -> Self {
        Self { start: 1, end: 21 }
    }
}

impl fmt::Display for InputRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

impl FromStr for InputRange {
    type Err = Error;

    /// Parses `"a..b"` (inclusive) or a single `"a"`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("input range must look like \"a..b\", got {s:?}"));
        let (a, b) = match s.split_once("..") {
            Some((a, b)) => (a, b.strip_prefix('=').unwrap_or(b)),
            None => (s, s),
        };
        let a = a.trim().parse().map_err(|_| bad())?;
        let b = b.trim().parse().map_err(|_| bad())?;
        InputRange::new(a, b)
    }
}

/// Parameters of a mining run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MiningJob {
    pub space: Space,
    pub inputs: InputRange,
    pub budget: u64,
    /// Keep one machine per twin class, weighted by the class size. Applies
    /// to full enumerations only; explicit id lists are mined as given.
    pub twin_reduction: bool,
    /// Last input of the extended pass; at or below `inputs.end` disables it.
    pub extended_inputs: u64,
    pub extended_budget: u64,
    pub translation_proof: bool,
    pub ids: Option<Vec<u64>>,
}

impl MiningJob {
    pub fn new(space: Space) -> Self {
        Self {
            space,
            inputs: InputRange::default(),
            budget: DEFAULT_BUDGET,
            twin_reduction: true,
            extended_inputs: EXTENDED_INPUTS,
            extended_budget: EXTENDED_BUDGET,
            translation_proof: true,
            ids: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        InputRange::new(self.inputs.start, self.inputs.end)?;
        if self.budget == 0 || self.extended_budget == 0 {
            return Err(Error::InvalidInput("step budgets must be at least 1".into()));
        }
        if let Some(ids) = &self.ids {
            for &v in ids {
                MachineId::new(v, self.space)?;
            }
        }
        Ok(())
    }

    fn options(&self, budget: u64) -> RunOptions {
        RunOptions::with_budget(budget).translation_proof(self.translation_proof)
    }

    /// Machines to mine with their weights, ascending by id.
    pub fn machines(&self) -> Result<Vec<(MachineId, u64)>> {
        if let Some(ids) = &self.ids {
            let set: BTreeSet<u64> = ids.iter().copied().collect();
            return set
                .into_iter()
                .map(|v| Ok((MachineId::new(v, self.space)?, 1)))
                .collect();
        }
        let space = self.space;
        if !self.twin_reduction {
            return Ok(space.enumerate().map(|id| (id, 1)).collect());
        }
        Ok((0..space.size())
            .into_par_iter()
            .filter_map(|v| {
                let id = MachineId { value: v, space };
                let class = id.twin_class();
                (class[0] == id).then_some((id, class.len() as u64))
            })
            .collect())
    }

    /// Number of machines the job stands for, counting twins.
    pub fn weight(&self) -> u64 {
        match &self.ids {
            Some(ids) => ids.iter().collect::<BTreeSet<_>>().len() as u64,
            None => self.space.size(),
        }
    }
}

/// One run of one machine on one input.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub machine: u64,
    pub x: u64,
    pub status: String,
    pub t: String,
    pub s: String,
    #[serde(rename = "N")]
    pub n: String,
    /// Black cells of the halting row.
    pub final_row: String,
    /// Output tape as a bit string from the edge cell.
    pub output: Option<String>,
    pub extended: bool,
}

/// Fitting outcome for one sequence of one machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitRecord {
    pub machine: u64,
    /// `t`, `s`, `N` or `N+final` (halting row included).
    pub sequence: String,
    pub verdict: Verdict,
    pub kind: Option<String>,
    pub model: Option<String>,
    pub dropped: usize,
    pub fitted: usize,
    pub holdout: Vec<u64>,
    pub refit: bool,
    pub chain: Vec<String>,
    /// Fitted on the extended input range.
    pub extended: bool,
}

/// Dimension analysis of one machine.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DimensionRecord {
    pub machine: u64,
    /// Machines represented, counting twins.
    pub class_size: u64,
    pub halted: usize,
    pub dropped_cycle: usize,
    pub dropped_translation: usize,
    pub dropped_budget: usize,
    /// Too few halting inputs for a dimension.
    pub undefined: bool,
    pub t_class: Option<String>,
    pub s_class: Option<String>,
    pub n_class: Option<String>,
    pub d: Option<String>,
    /// `d` with the halting row counted as well.
    pub d_final_row: Option<String>,
    pub upper_bound: Option<String>,
    pub c_tau: Option<String>,
    /// Set when `c_τ` is an exact rational.
    pub c_tau_exact: Option<String>,
    pub c_tau_branches: Vec<String>,
    pub log_n_over_st: Option<String>,
    /// `None` when every input diverges.
    pub bucket: Option<Bucket>,
    pub findings: Option<Findings>,
    /// Exact models for all of `t`, `s` and `N`.
    pub full_models: bool,
    /// `s/t → 0` implies `d ≥ 1`.
    pub lower_bound: Flag,
    /// `log(t − s)/log t → 1` along the models when `s/t → 0`.
    pub log_quotient: Flag,
    /// `s/t` over each residue class decreases from its first to its last
    /// halted input; set for super-linear machines only.
    pub s_over_t_decreasing: Option<bool>,
    /// Every halted input is returned unchanged.
    pub tape_identity: bool,
    pub extended: bool,
    /// SHA-256 of the output tapes over the job inputs.
    pub fingerprint: String,
    /// Some input diverged.
    pub fingerprint_marked: bool,
    /// Some input ran out of budget, so the marker may hide a halting run.
    pub fingerprint_unknown: bool,
}

/// Everything a machine contributes to the job directory.
#[derive(Debug, Clone, PartialEq)]
pub struct MachineOutcome {
    pub metrics: Vec<MetricsRecord>,
    pub fits: Vec<FitRecord>,
    pub dimension: DimensionRecord,
}

fn bits(tape: &crate::machine::InputTape) -> String {
    tape.cells().iter().map(|&c| if c { '1' } else { '0' }).collect()
}

fn metrics_record(machine: u64, x: u64, m: &RunMetrics, extended: bool) -> MetricsRecord {
    MetricsRecord {
        machine,
        x,
        status: m.status.label().to_string(),
        t: m.t.to_string(),
        s: m.s.to_string(),
        n: m.n.to_string(),
        final_row: m.final_row_black.to_string(),
        output: m.output.as_ref().map(bits),
        extended,
    }
}

fn fit_record(machine: u64, sequence: &str, r: &FitReport, extended: bool) -> FitRecord {
    FitRecord {
        machine,
        sequence: sequence.to_string(),
        verdict: r.verdict,
        kind: r.model.as_ref().map(|m| m.kind().to_string()),
        model: r.model.as_ref().map(|m| m.to_string()),
        dropped: r.dropped,
        fitted: r.fitted,
        holdout: r.holdout.clone(),
        refit: r.refit,
        chain: r.chain.clone(),
        extended,
    }
}

/// Function fingerprint: output bit strings over the inputs, divergent runs
/// replaced by [`DIVERGENCE_MARK`].
pub fn fingerprint(runs: &[(u64, RunMetrics)]) -> String {
    let text: Vec<String> = runs
        .iter()
        .map(|(_, m)| match &m.output {
            Some(o) if m.status.is_halted() => bits(o),
            _ => DIVERGENCE_MARK.to_string(),
        })
        .collect();
    let digest = Sha256::digest(text.join(",").as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// The measured sequences of a machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Seq {
    T,
    S,
    N,
    NFinal,
}

impl Seq {
    const ALL: [Seq; 4] = [Seq::T, Seq::S, Seq::N, Seq::NFinal];

    fn name(&self) -> &'static str {
        match self {
            Seq::T => "t",
            Seq::S => "s",
            Seq::N => "N",
            Seq::NFinal => "N+final",
        }
    }

    fn value(&self, m: &RunMetrics) -> BigUint {
        match self {
            Seq::T => m.t.clone(),
            Seq::S => m.s.clone(),
            Seq::N => m.n.clone(),
            Seq::NFinal => m.n_with_final_row(),
        }
    }

    fn terms(&self, runs: &[(u64, RunMetrics)]) -> Vec<Term> {
        runs.iter()
            .filter(|(_, m)| m.status.is_halted())
            .map(|(x, m)| (*x, BigInt::from(self.value(m))))
            .collect()
    }
}

fn run_inputs(table: &TransitionTable, xs: impl Iterator<Item = u64>, opts: RunOptions) -> Result<Vec<(u64, RunMetrics)>> {
    xs.map(|x| Ok((x, run(table, &unary_input(x)?, opts))))
        .collect()
}

/// Like [`run_inputs`], but gives up after [`EXTENDED_STOP`] consecutive
/// budget exhaustions since runtimes only grow further out.
fn run_extended(table: &TransitionTable, xs: impl Iterator<Item = u64>, opts: RunOptions) -> Result<Vec<(u64, RunMetrics)>> {
    let mut out = Vec::new();
    let mut exhausted = 0;
    for x in xs {
        let m = run(table, &unary_input(x)?, opts);
        exhausted = if m.status == Status::BudgetExceeded { exhausted + 1 } else { 0 };
        out.push((x, m));
        if exhausted == EXTENDED_STOP {
            break;
        }
    }
    Ok(out)
}

fn raw_series(runs: &[(u64, RunMetrics)], n: Seq) -> RawSeries {
    RawSeries {
        t: Seq::T.terms(runs),
        s: Seq::S.terms(runs),
        n: n.terms(runs),
    }
}

fn model_of(r: &FitReport) -> Option<SequenceModel> {
    r.is_exact().then(|| r.model.clone()).flatten()
}

fn models_with_fallback(t: &FitReport, s: &FitReport, n: &FitReport, raw: &RawSeries) -> MachineModels {
    let (t, s, n) = (model_of(t), model_of(s), model_of(n));
    let n = match (&n, &s, &t) {
        (None, Some(s), Some(t)) => ratio_fallback(raw, s, t),
        _ => n,
    };
    MachineModels { t, s, n }
}

/// `s` against `t` branch by branch: `Some(true)` when every branch of `s`
/// grows strictly slower.
fn space_negligible(s: &BranchClasses, t: &BranchClasses) -> Option<bool> {
    let p = lcm(s.period, t.period);
    let mut all = true;
    let mut any = false;
    for r in 0..p {
        match (s.at(r), t.at(r)) {
            (Some(a), Some(b)) => {
                any = true;
                all &= a.compare(b)? == std::cmp::Ordering::Less;
            }
            (None, None) => {}
            _ => return None,
        }
    }
    any.then_some(all)
}

fn super_linear(t: &BranchClasses) -> Option<bool> {
    match t.max() {
        crate::dimension::GrowthClass::Unknown => None,
        m => Some(!m.poly_degree().is_some_and(|d| d <= 1)),
    }
}

/// Checks that `s/t` drops from the first to the last halted input of each
/// residue class.
fn s_over_t_decreasing(runs: &[(u64, RunMetrics)], period: u64) -> Option<bool> {
    let t = Seq::T.terms(runs);
    let s = Seq::S.terms(runs);
    let mut any = false;
    for r in 0..period {
        let class: Vec<(&BigInt, &BigInt)> = t
            .iter()
            .zip(&s)
            .filter(|((x, _), _)| x % period == r)
            .map(|((_, t), (_, s))| (s, t))
            .collect();
        if class.len() < 2 {
            continue;
        }
        any = true;
        let (s0, t0) = class[0];
        let (s1, t1) = class[class.len() - 1];
        if s1 * t0 >= s0 * t1 {
            return Some(false);
        }
    }
    any.then_some(true)
}

/// Evaluation points for the log quotient check.
const LOG_POINTS: [u64; 3] = [1_000, 10_000, 100_000];
/// Largest allowed `|1 − log(t − s)/log t|` at the last point.
const LOG_TOLERANCE: f64 = 0.01;

fn closed(m: &SequenceModel) -> bool {
    match m {
        SequenceModel::Polynomial { .. } | SequenceModel::ExpPoly(_) => true,
        SequenceModel::PeriodicSplit { branches, .. } => branches.iter().flatten().all(closed),
        _ => false,
    }
}

/// Along every residue class, `|1 − log(t − s)/log t|` shrinks over
/// [`LOG_POINTS`] and ends below [`LOG_TOLERANCE`].
fn log_quotient(t: &SequenceModel, s: &SequenceModel) -> Flag {
    if !closed(t) || !closed(s) {
        return Flag::Indeterminate;
    }
    let p = lcm(t.period(), s.period());
    for r in 0..p {
        let mut last = f64::INFINITY;
        for base in LOG_POINTS {
            let x = base + (r + p - base % p) % p;
            let (Some(tv), Some(sv)) = (t.value(x), s.value(x)) else {
                return Flag::Indeterminate;
            };
            let Some(q) = log_ratio(&(&tv - &sv), &tv) else {
                return Flag::Indeterminate;
            };
            let gap = (1.0 - q).abs();
            if gap > last {
                return Flag::False;
            }
            last = gap;
        }
        if last > LOG_TOLERANCE {
            return Flag::False;
        }
    }
    Flag::True
}

fn ratio_text(v: &RatioValue) -> String {
    v.to_string()
}

/// Measures, fits and analyses one machine.
pub fn analyze_machine(job: &MiningJob, id: MachineId, class_size: u64) -> Result<MachineOutcome> {
    let table = id.decode();
    let machine = id.value;
    let base = run_inputs(&table, job.inputs.iter(), job.options(job.budget))?;
    let mut metrics: Vec<MetricsRecord> = base.iter().map(|(x, m)| metrics_record(machine, *x, m, false)).collect();
    let count = |f: fn(&Status) -> bool| base.iter().filter(|(_, m)| f(&m.status)).count();
    let halted = count(|s| s.is_halted());
    let tail_halts = base.iter().rev().take(TAIL_INPUTS).any(|(_, m)| m.status.is_halted());
    let tape_identity = halted > 0
        && base
            .iter()
            .filter(|(_, m)| m.status.is_halted())
            .all(|(x, m)| m.output.as_ref() == unary_input(*x).ok().as_ref());
    let mut dim = DimensionRecord {
        machine,
        class_size,
        halted,
        dropped_cycle: count(|s| matches!(s, Status::DivergentByCycle { .. })),
        dropped_translation: count(|s| matches!(s, Status::DivergentByTranslation { .. })),
        dropped_budget: count(|s| matches!(s, Status::BudgetExceeded)),
        undefined: halted < MIN_TERMS || !tail_halts,
        t_class: None,
        s_class: None,
        n_class: None,
        d: None,
        d_final_row: None,
        upper_bound: None,
        c_tau: None,
        c_tau_exact: None,
        c_tau_branches: Vec::new(),
        log_n_over_st: None,
        bucket: (halted > 0).then_some(Bucket::Unclassified),
        findings: None,
        full_models: false,
        lower_bound: Flag::Na,
        log_quotient: Flag::Na,
        s_over_t_decreasing: None,
        tape_identity,
        extended: false,
        fingerprint: fingerprint(&base),
        fingerprint_marked: halted < base.len(),
        fingerprint_unknown: count(|s| matches!(s, Status::BudgetExceeded)) > 0,
    };
    if dim.undefined {
        return Ok(MachineOutcome {
            metrics,
            fits: Vec::new(),
            dimension: dim,
        });
    }

    let mut reports: Vec<FitReport> = Seq::ALL.iter().map(|q| fit_sequence(&q.terms(&base))).collect::<Result<_>>()?;
    let mut extended_flags = [false; 4];
    let mut runs = base.clone();
    let failed = reports.iter().any(|r| !r.is_exact());
    let periodic = reports
        .iter()
        .any(|r| r.is_exact() && r.model.as_ref().is_some_and(|m| m.period() > 1));
    if failed && periodic && job.extended_inputs > job.inputs.end {
        let extra = run_extended(&table, job.inputs.end + 1..=job.extended_inputs, job.options(job.extended_budget))?;
        metrics.extend(extra.iter().map(|(x, m)| metrics_record(machine, *x, m, true)));
        runs.extend(extra);
        dim.extended = true;
        for (i, q) in Seq::ALL.iter().enumerate() {
            if !reports[i].is_exact() {
                reports[i] = fit_sequence(&q.terms(&runs))?;
                extended_flags[i] = true;
            }
        }
    }
    let fits = Seq::ALL
        .iter()
        .zip(&reports)
        .zip(extended_flags)
        .map(|((q, r), e)| fit_record(machine, q.name(), r, e))
        .collect();

    let raw = raw_series(&runs, Seq::N);
    let models = models_with_fallback(&reports[0], &reports[1], &reports[2], &raw);
    let report: DimensionReport = analyze(&models, &raw);
    let raw_final = raw_series(&runs, Seq::NFinal);
    let final_models = models_with_fallback(&reports[0], &reports[1], &reports[3], &raw_final);
    let final_report = analyze(&final_models, &raw_final);

    dim.t_class = Some(report.t.to_string());
    dim.s_class = Some(report.s.to_string());
    dim.n_class = Some(report.n.to_string());
    dim.d = Some(report.d.to_string());
    dim.d_final_row = Some(final_report.d.to_string());
    dim.upper_bound = Some(report.upper_bound.to_string());
    dim.c_tau = Some(ratio_text(&report.c_tau.liminf));
    dim.c_tau_exact = match &report.c_tau.liminf {
        RatioValue::Exact(c) => Some(c.to_string()),
        _ => None,
    };
    dim.c_tau_branches = report
        .c_tau
        .branches
        .iter()
        .map(|b| b.as_ref().map_or("nil".to_string(), ratio_text))
        .collect();
    dim.log_n_over_st = Some(report.log_n_over_st.to_string());
    dim.bucket = Some(report.bucket);
    dim.full_models = reports[..3].iter().all(|r| r.is_exact());
    let superlinear = super_linear(&report.t);
    if superlinear == Some(true) {
        let period = [&models.t, &models.s].iter().filter_map(|m| m.as_ref()).map(|m| m.period()).fold(1, lcm);
        dim.s_over_t_decreasing = s_over_t_decreasing(&base, period);
    }
    dim.lower_bound = match (superlinear, space_negligible(&report.s, &report.t)) {
        (Some(false), _) => Flag::Na,
        (_, Some(false)) => Flag::Na,
        (Some(true), Some(true)) => match LimitValue::Exact(Rational::one()).le(&report.d) {
            Some(true) => Flag::True,
            Some(false) => Flag::False,
            None => Flag::Indeterminate,
        },
        _ => Flag::Indeterminate,
    };
    dim.log_quotient = match (&dim.lower_bound, &models.t, &models.s) {
        (Flag::Na, _, _) => Flag::Na,
        (_, Some(t), Some(s)) => log_quotient(t, s),
        _ => Flag::Indeterminate,
    };
    dim.findings = Some(report.findings);
    Ok(MachineOutcome { metrics, fits, dimension: dim })
}

/// Counts reported at the end of a mining run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct MineSummary {
    /// Machines analysed in this invocation.
    pub processed: usize,
    /// Machines found complete from an earlier invocation.
    pub resumed: usize,
    pub dropped_cycle: usize,
    pub dropped_translation: usize,
    pub dropped_budget: usize,
    pub undefined: usize,
    pub unclassified: usize,
    pub extended: usize,
}

impl MineSummary {
    fn add(&mut self, d: &DimensionRecord) {
        self.dropped_cycle += d.dropped_cycle;
        self.dropped_translation += d.dropped_translation;
        self.dropped_budget += d.dropped_budget;
        self.undefined += d.undefined as usize;
        self.unclassified += (d.bucket == Some(Bucket::Unclassified)) as usize;
        self.extended += d.extended as usize;
    }
}

impl fmt::Display for MineSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "machines processed: {} (resumed: {})", self.processed, self.resumed)?;
        writeln!(
            f,
            "dropped inputs: {} cycle, {} translated cycle, {} budget",
            self.dropped_cycle, self.dropped_translation, self.dropped_budget
        )?;
        writeln!(f, "undefined dimension: {}", self.undefined)?;
        writeln!(f, "unclassified: {}", self.unclassified)?;
        write!(f, "extended pass: {}", self.extended)
    }
}

fn open_append(path: &Path) -> Result<BufWriter<File>> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    Ok(BufWriter::new(file))
}

/// Parses a JSON Lines file, ignoring a torn last line.
pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str(line) {
            Ok(v) => out.push(v),
            Err(_) if i + 1 == lines.len() => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct MachineOnly {
    machine: u64,
}

/// Rewrites `path` keeping only complete lines of finished machines.
fn prune(path: &Path, done: &BTreeSet<u64>) -> Result<()> {
    let lines: Vec<String> = if path.exists() {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        BufReader::new(file)
            .lines()
            .collect::<std::io::Result<_>>()
            .map_err(|e| Error::io(path, e))?
    } else {
        Vec::new()
    };
    let tmp = path.with_extension("jsonl.tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        for line in &lines {
            let keep = serde_json::from_str::<MachineOnly>(line).is_ok_and(|m| done.contains(&m.machine));
            if keep {
                writeln!(w, "{line}").map_err(|e| Error::io(&tmp, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn write_lines<T: Serialize>(w: &mut BufWriter<File>, path: &Path, items: &[T]) -> Result<()> {
    for item in items {
        let line = serde_json::to_string(item)?;
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Reads the manifest of a job directory.
pub fn read_manifest(dir: &Path) -> Result<MiningJob> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Mines `job` into `dir`, resuming an earlier run of the same job.
/// `progress` receives (done, total) after every chunk.
pub fn mine(job: &MiningJob, dir: &Path, mut progress: impl FnMut(usize, usize)) -> Result<MineSummary> {
    job.validate()?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest = dir.join(MANIFEST);
    if manifest.exists() {
        let existing = read_manifest(dir)?;
        if &existing != job {
            return Err(Error::InvalidInput(format!(
                "{} holds a different job; use a fresh directory",
                dir.display()
            )));
        }
    } else {
        let tmp = dir.join("manifest.json.tmp");
        fs::write(&tmp, serde_json::to_string_pretty(job)? + "\n").map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &manifest).map_err(|e| Error::io(&manifest, e))?;
    }
    let paths: Vec<PathBuf> = [METRICS, FITS, DIMENSIONS].iter().map(|f| dir.join(f)).collect();
    let finished: Vec<DimensionRecord> = read_jsonl(&paths[2])?;
    let done: BTreeSet<u64> = finished.iter().map(|d| d.machine).collect();
    for p in &paths {
        prune(p, &done)?;
    }
    let mut summary = MineSummary {
        resumed: done.len(),
        ..MineSummary::default()
    };
    for d in &finished {
        summary.add(d);
    }
    let todo: Vec<(MachineId, u64)> = job.machines()?.into_iter().filter(|(id, _)| !done.contains(&id.value)).collect();
    let total = todo.len() + done.len();
    let mut writers = paths.iter().map(|p| open_append(p)).collect::<Result<Vec<_>>>()?;
    for chunk in todo.chunks(CHUNK) {
        let outcomes: Vec<MachineOutcome> = chunk
            .par_iter()
            .map(|(id, w)| analyze_machine(job, *id, *w))
            .collect::<Result<_>>()?;
        for o in &outcomes {
            write_lines(&mut writers[0], &paths[0], &o.metrics)?;
            write_lines(&mut writers[1], &paths[1], &o.fits)?;
        }
        for (w, p) in writers.iter_mut().zip(&paths).take(2) {
            w.flush().map_err(|e| Error::io(p, e))?;
        }
        let dims: Vec<&DimensionRecord> = outcomes.iter().map(|o| &o.dimension).collect();
        write_lines(&mut writers[2], &paths[2], &dims)?;
        writers[2].flush().map_err(|e| Error::io(&paths[2], e))?;
        for d in dims {
            summary.add(d);
        }
        summary.processed += chunk.len();
        progress(summary.processed + summary.resumed, total);
    }
    Ok(summary)
}
