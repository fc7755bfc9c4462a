//! Aggregation of a mining job directory: census tables and the verdicts of
//! the per-machine assertions.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;

use crate::dimension::{Bucket, Findings, Flag, RatioMembership};
use crate::error::Result;
use crate::machine::Space;
use crate::pipeline::{read_jsonl, read_manifest, DimensionRecord, DIMENSIONS};

/// Canonical machines and the machines they stand for.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Count {
    pub canonical: u64,
    pub weighted: u64,
}

impl Count {
    fn add(&mut self, weight: u64) {
        self.canonical += 1;
        self.weighted += weight;
    }
}

/// Distinct function fingerprints.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FingerprintCounts {
    pub distinct: usize,
    /// Fingerprints of machines halting on every input.
    pub total_functions: usize,
    /// Fingerprints containing a divergence marker.
    pub marked: usize,
    /// Marked fingerprints where some input ran out of budget.
    pub unknown: usize,
}

/// Census of a job directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusTable {
    pub space: Space,
    /// Machines the job stands for.
    pub expected: u64,
    /// Machines covered by finished records.
    pub covered: u64,
    pub partial: bool,
    pub coverage: f64,
    pub records: u64,
    pub all_divergent: Count,
    /// Counts per bucket over machines with at least one halting input.
    pub buckets: BTreeMap<Bucket, Count>,
    /// Counts per dimension value; undefined dimensions are keyed
    /// `undefined`.
    pub dimensions: BTreeMap<String, Count>,
    pub fingerprints: FingerprintCounts,
    pub extended: u64,
    pub dropped_cycle: u64,
    pub dropped_translation: u64,
    pub dropped_budget: u64,
}

/// Reads the dimension records of a job directory.
pub fn load_records(dir: &Path) -> Result<Vec<DimensionRecord>> {
    read_jsonl(&dir.join(DIMENSIONS))
}

/// Census over the finished records of `dir`.
pub fn census(dir: &Path) -> Result<CensusTable> {
    let job = read_manifest(dir)?;
    let records = load_records(dir)?;
    Ok(census_of(job.space, job.weight(), &records))
}

pub fn census_of(space: Space, expected: u64, records: &[DimensionRecord]) -> CensusTable {
    let mut buckets: BTreeMap<Bucket, Count> = Bucket::ALL.iter().map(|b| (*b, Count::default())).collect();
    let mut dimensions: BTreeMap<String, Count> = BTreeMap::new();
    let mut all_divergent = Count::default();
    let mut fingerprints: BTreeMap<&str, (bool, bool)> = BTreeMap::new();
    let mut covered = 0;
    let (mut extended, mut cyc, mut tr, mut bud) = (0, 0, 0, 0);
    for r in records {
        let w = r.class_size;
        covered += w;
        extended += r.extended as u64;
        cyc += r.dropped_cycle as u64;
        tr += r.dropped_translation as u64;
        bud += r.dropped_budget as u64;
        fingerprints.entry(&r.fingerprint).or_insert((r.fingerprint_marked, r.fingerprint_unknown));
        match r.bucket {
            None => all_divergent.add(w),
            Some(b) => {
                buckets.get_mut(&b).unwrap().add(w);
                let key = match (&r.d, r.undefined) {
                    (Some(d), false) => d.clone(),
                    _ => "undefined".to_string(),
                };
                dimensions.entry(key).or_default().add(w);
            }
        }
    }
    let marked = fingerprints.values().filter(|(m, _)| *m).count();
    CensusTable {
        space,
        expected,
        covered,
        partial: covered < expected,
        coverage: if expected == 0 { 1.0 } else { covered as f64 / expected as f64 },
        records: records.len() as u64,
        all_divergent,
        buckets,
        dimensions,
        fingerprints: FingerprintCounts {
            distinct: fingerprints.len(),
            total_functions: fingerprints.len() - marked,
            marked,
            unknown: fingerprints.values().filter(|(m, u)| *m && *u).count(),
        },
        extended,
        dropped_cycle: cyc,
        dropped_translation: tr,
        dropped_budget: bud,
    }
}

impl CensusTable {
    /// Machines with at least one halting input.
    pub fn analyzed(&self) -> Count {
        self.buckets.values().fold(Count::default(), |a, c| Count {
            canonical: a.canonical + c.canonical,
            weighted: a.weighted + c.weighted,
        })
    }

    pub fn bucket(&self, b: Bucket) -> Count {
        self.buckets.get(&b).copied().unwrap_or_default()
    }

    /// Machines in the super-polynomial buckets.
    pub fn super_polynomial(&self) -> Count {
        self.buckets
            .iter()
            .filter(|(b, _)| b.is_super_polynomial())
            .fold(Count::default(), |a, (_, c)| Count {
                canonical: a.canonical + c.canonical,
                weighted: a.weighted + c.weighted,
            })
    }
}

impl fmt::Display for CensusTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "space ({})", self.space)?;
        if self.partial {
            writeln!(
                f,
                "PARTIAL: {} of {} machines covered ({:.2}%)",
                self.covered,
                self.expected,
                100.0 * self.coverage
            )?;
        }
        let width = Bucket::ALL.iter().map(|b| b.label().len()).max().unwrap_or(0).max(24);
        writeln!(f)?;
        writeln!(f, "{:<width$}  {:>10}  {:>10}", "bucket", "canonical", "machines")?;
        for (b, c) in &self.buckets {
            writeln!(f, "{:<width$}  {:>10}  {:>10}", b.label(), c.canonical, c.weighted)?;
        }
        let a = self.analyzed();
        writeln!(f, "{:<width$}  {:>10}  {:>10}", "total analyzed", a.canonical, a.weighted)?;
        writeln!(
            f,
            "{:<width$}  {:>10}  {:>10}",
            "all inputs divergent", self.all_divergent.canonical, self.all_divergent.weighted
        )?;
        writeln!(f)?;
        writeln!(f, "{:<width$}  {:>10}  {:>10}", "dimension", "canonical", "machines")?;
        for (d, c) in &self.dimensions {
            writeln!(f, "{:<width$}  {:>10}  {:>10}", d, c.canonical, c.weighted)?;
        }
        writeln!(f)?;
        let fp = &self.fingerprints;
        writeln!(f, "distinct function fingerprints: {}", fp.distinct)?;
        writeln!(f, "  halting on every input: {}", fp.total_functions)?;
        writeln!(f, "  with divergence markers: {}", fp.marked)?;
        writeln!(f)?;
        writeln!(
            f,
            "dropped inputs: {} cycle, {} translated cycle, {} budget; extended pass: {}",
            self.dropped_cycle, self.dropped_translation, self.dropped_budget, self.extended
        )?;
        writeln!(f)?;
        writeln!(
            f,
            "note: a fingerprint is the tuple of output bit strings over the job inputs with every"
        )?;
        writeln!(
            f,
            "non-halting input replaced by one marker; {} fingerprints carry markers, {} of them",
            fp.marked, fp.unknown
        )?;
        write!(f, "because an input ran out of budget rather than provably diverging.")
    }
}

/// Tally of one flag across records.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FlagTally {
    #[serde(rename = "true")]
    pub yes: u64,
    #[serde(rename = "false")]
    pub no: u64,
    pub indeterminate: u64,
    pub na: u64,
}

impl FlagTally {
    fn add(&mut self, f: Flag) {
        match f {
            Flag::True => self.yes += 1,
            Flag::False => self.no += 1,
            Flag::Indeterminate => self.indeterminate += 1,
            Flag::Na => self.na += 1,
        }
    }
}

/// A failed universal assertion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub machine: u64,
    pub assertion: &'static str,
    pub detail: String,
}

/// Verdicts over all records of a job directory.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct VerifySummary {
    pub records: u64,
    pub analyzed: u64,
    pub violations: Vec<Violation>,
    /// Tallies of the findings flags, keyed `F0` to `F5`.
    pub findings: BTreeMap<String, FlagTally>,
    pub membership: BTreeMap<String, u64>,
    /// Tallies of the universal assertions.
    pub assertions: BTreeMap<String, FlagTally>,
}

/// Upper bound `d ≤ 1 + liminf log s / log t`.
pub const BOUND: &str = "dimension bound";
/// `s/t → 0` implies `d ≥ 1`.
pub const LOWER_BOUND: &str = "lower bound";
/// `log(t − s)/log t → 1` when `s/t → 0`.
pub const LOG_QUOTIENT: &str = "log quotient";
/// Super-linear machines: measured `s/t` decreases.
pub const SPACE_TIME_RATIO: &str = "s/t decreasing";
/// Exact nonzero `c_τ` forces `d` to equal the bound.
pub const NONZERO_RATIO: &str = "nonzero ratio bound";
/// Full models: `liminf log N / log(s·t) = 1`.
pub const FULL_MODELS: &str = "log N over log st";
/// Excluding or including the halting row gives the same `d`.
pub const COUNTING: &str = "counting convention";

fn flag(b: Option<bool>) -> Flag {
    match b {
        Some(true) => Flag::True,
        Some(false) => Flag::False,
        None => Flag::Na,
    }
}

fn membership_label(m: RatioMembership) -> &'static str {
    match m {
        RatioMembership::Listed => "listed",
        RatioMembership::Novel => "novel value",
        RatioMembership::Band => "band",
        RatioMembership::OutOfRange => "out of range",
        RatioMembership::Undefined => "undefined",
    }
}

/// Runs the universal assertions on every record.
pub fn verify_records(records: &[DimensionRecord]) -> VerifySummary {
    let mut out = VerifySummary {
        records: records.len() as u64,
        ..VerifySummary::default()
    };
    for name in [BOUND, LOWER_BOUND, LOG_QUOTIENT, SPACE_TIME_RATIO, NONZERO_RATIO, FULL_MODELS, COUNTING] {
        out.assertions.insert(name.to_string(), FlagTally::default());
    }
    for r in records {
        let Some(f) = &r.findings else {
            continue;
        };
        out.analyzed += 1;
        let Findings {
            f0,
            f1,
            f2,
            f3,
            f3_membership,
            f4,
            f5,
            bound_holds,
        } = f.clone();
        for (k, v) in [("F0", f0), ("F1", f1), ("F2", f2), ("F3", f3), ("F4", f4), ("F5", f5)] {
            out.findings.entry(k.to_string()).or_default().add(v);
        }
        *out.membership.entry(membership_label(f3_membership).to_string()).or_default() += 1;
        let nonzero = r.c_tau_exact.as_ref().is_some_and(|c| c != "0");
        let checks = [
            (BOUND, bound_holds),
            (LOWER_BOUND, r.lower_bound),
            (LOG_QUOTIENT, r.log_quotient),
            (SPACE_TIME_RATIO, flag(r.s_over_t_decreasing)),
            (NONZERO_RATIO, if nonzero { f1 } else { Flag::Na }),
            (FULL_MODELS, if r.full_models { f2 } else { Flag::Na }),
            (COUNTING, if r.d.is_some() { flag(Some(r.d == r.d_final_row)) } else { Flag::Na }),
        ];
        for (name, v) in checks {
            out.assertions.get_mut(name).unwrap().add(v);
            if v == Flag::False {
                out.violations.push(Violation {
                    machine: r.machine,
                    assertion: name,
                    detail: format!(
                        "d = {}, bound = {}, d with halting row = {}, c = {}",
                        r.d.as_deref().unwrap_or("-"),
                        r.upper_bound.as_deref().unwrap_or("-"),
                        r.d_final_row.as_deref().unwrap_or("-"),
                        r.c_tau.as_deref().unwrap_or("-")
                    ),
                });
            }
        }
    }
    out
}

pub fn verify(dir: &Path) -> Result<VerifySummary> {
    Ok(verify_records(&load_records(dir)?))
}

fn write_tally(f: &mut fmt::Formatter<'_>, name: &str, t: &FlagTally) -> fmt::Result {
    writeln!(
        f,
        "  {name:<22} true {:>7}  false {:>7}  indeterminate {:>7}  n/a {:>7}",
        t.yes, t.no, t.indeterminate, t.na
    )
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {} (analyzed: {})", self.records, self.analyzed)?;
        writeln!(f, "assertions:")?;
        for (k, t) in &self.assertions {
            write_tally(f, k, t)?;
        }
        writeln!(f, "findings:")?;
        for (k, t) in &self.findings {
            write_tally(f, k, t)?;
        }
        let listed: BTreeSet<_> = self.membership.iter().collect();
        write!(f, "ratio limits:")?;
        for (k, v) in listed {
            write!(f, " {k} {v};")?;
        }
        writeln!(f)?;
        if self.violations.is_empty() {
            write!(f, "violations: none")
        } else {
            writeln!(f, "violations: {}", self.violations.len())?;
            for v in &self.violations {
                writeln!(f, "  machine {}: {} ({})", v.machine, v.assertion, v.detail)?;
            }
            Ok(())
        }
    }
}
