//! Rendering of space-time diagrams and the search for symmetric performers:
//! machine pairs whose diagrams on a set of inputs are time-reversed images
//! of each other.

use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::machine::{unary_input, Action, MachineId, Space, TransitionTable};
use crate::pipeline::InputRange;
use crate::sim::{run, run_with_diagram, RunOptions, SpaceTimeDiagram};

/// White columns between diagrams on a composite sheet.
pub const SHEET_GAP: usize = 2;

/// Files written by [`render`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RenderOutcome {
    pub written: Vec<PathBuf>,
    /// Inputs without a halting run, with the reason.
    pub skipped: Vec<(u64, String)>,
    pub sheet: Option<PathBuf>,
}

fn write_pbm(path: &Path, diagram: &SpaceTimeDiagram) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    diagram.write_pbm(&mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes diagrams side by side, top aligned, edge on the right of each.
pub fn write_sheet<W: Write>(out: &mut W, diagrams: &[SpaceTimeDiagram]) -> std::io::Result<()> {
    let width = diagrams.iter().map(|d| d.width()).sum::<usize>() + SHEET_GAP * diagrams.len().saturating_sub(1);
    let height = diagrams.iter().map(|d| d.height()).max().unwrap_or(0);
    writeln!(out, "P1")?;
    writeln!(out, "{width} {height}")?;
    let mut rows: Vec<Box<dyn Iterator<Item = Vec<bool>>>> = diagrams.iter().map(|d| Box::new(d.rows()) as _).collect();
    for _ in 0..height {
        let mut line = Vec::with_capacity(width);
        for (i, (it, d)) in rows.iter_mut().zip(diagrams).enumerate() {
            if i > 0 {
                line.extend(std::iter::repeat_n("0", SHEET_GAP));
            }
            match it.next() {
                Some(row) => line.extend(row.iter().rev().map(|&c| if c { "1" } else { "0" })),
                None => line.extend(std::iter::repeat_n("0", d.width())),
            }
        }
        writeln!(out, "{}", line.join(" "))?;
    }
    Ok(())
}

/// Renders one PBM per halting input into `dir` as `<id>_x<x>.pbm`, and
/// with `sheet` also `<id>_sheet.pbm`.
pub fn render(id: MachineId, inputs: InputRange, budget: u64, dir: &Path, sheet: bool) -> Result<RenderOutcome> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let table = id.decode();
    let mut out = RenderOutcome::default();
    let mut kept = Vec::new();
    for x in inputs.iter() {
        let (m, d) = run_with_diagram(&table, &unary_input(x)?, RunOptions::with_budget(budget));
        if !m.status.is_halted() {
            out.skipped.push((x, m.status.to_string()));
            continue;
        }
        let path = dir.join(format!("{}_x{x}.pbm", id.value));
        write_pbm(&path, &d)?;
        out.written.push(path);
        kept.push(d);
    }
    if sheet && !kept.is_empty() {
        let path = dir.join(format!("{}_sheet.pbm", id.value));
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        write_sheet(&mut w, &kept).map_err(|e| Error::io(&path, e))?;
        w.flush().map_err(|e| Error::io(&path, e))?;
        out.sheet = Some(path);
    }
    Ok(out)
}

/// The reversed machine: each rule `(state, color) → (color', state', dir)`
/// becomes `(state', color') → (color, state, reversed dir)`. Defined only
/// when the old rules hit every case exactly once.
pub fn reversed_table(table: &TransitionTable) -> Option<TransitionTable> {
    let rules = table.rules().map(|(q, c, a)| {
        (
            (a.next_state, a.write),
            Action::new(c, a.direction.reversed(), q),
        )
    });
    TransitionTable::from_rules(table.states(), rules).ok()
}

/// A pair of symmetric performers. Machines drawing identical diagrams on
/// the searched inputs (they differ only in rules those runs never use) form
/// a diagram class; each side of a pair is reported by its smallest
/// canonical member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymmetricPair {
    pub first: u64,
    pub second: u64,
    /// Canonical machines drawing the same diagrams as `first`.
    pub first_class: usize,
    pub second_class: usize,
    /// The reversed machine of `first` draws the diagrams of `second`.
    pub reversed_table: bool,
    /// `(x, t)` per input.
    pub steps: Vec<(u64, u64)>,
}

/// Result of a symmetric performer search.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SymmetricSearch {
    /// Canonical machines returning every input unchanged.
    pub identity_machines: usize,
    /// Of those, machines whose diagrams are not all time palindromes.
    pub candidates: usize,
    pub pairs: Vec<SymmetricPair>,
}

/// Every row `0..=t` of a halting run.
fn full_rows(table: &TransitionTable, x: u64, opts: RunOptions) -> Result<Option<Vec<Vec<bool>>>> {
    let (m, d) = run_with_diagram(table, &unary_input(x)?, opts);
    Ok(m.status.is_halted().then(|| d.rows().collect()))
}

fn diagrams_of(table: &TransitionTable, xs: &[u64], opts: RunOptions) -> Result<Option<Vec<Vec<Vec<bool>>>>> {
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        match full_rows(table, x, opts)? {
            Some(rows) => out.push(rows),
            None => return Ok(None),
        }
    }
    Ok(Some(out))
}

fn digest<'a>(diagrams: impl Iterator<Item = &'a Vec<Vec<bool>>>, reversed: bool) -> [u8; 32] {
    let mut h = Sha256::new();
    for rows in diagrams {
        let mut feed = |r: &Vec<bool>| {
            let bytes: Vec<u8> = r.iter().map(|&c| c as u8).collect();
            h.update(bytes);
            h.update([2u8]);
        };
        if reversed {
            rows.iter().rev().for_each(&mut feed);
        } else {
            rows.iter().for_each(&mut feed);
        }
        h.update([3u8]);
    }
    h.finalize().into()
}

fn identity_on(table: &TransitionTable, xs: &[u64], opts: RunOptions) -> bool {
    xs.iter().all(|&x| {
        let input = unary_input(x).expect("positive input");
        let m = run(table, &input, opts);
        m.status.is_halted() && m.output.as_ref() == Some(&input)
    })
}

fn mirrored(a: &[Vec<Vec<bool>>], b: &[Vec<Vec<bool>>]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(ra, rb)| ra.iter().eq(rb.iter().rev()))
}

/// Searches `space` for symmetric performers on the even inputs `xs`: pairs
/// whose full diagrams (rows `0..=t`) are time-reversed images of each
/// other.
///
/// The first row is the input and the last the output, so only machines
/// returning every input unchanged qualify; they are filtered first.
/// Diagrams that are time palindromes only match their own class and are
/// not reported. Candidates are matched by hashing their forward and
/// reversed diagrams and every hit is confirmed row by row. Each pair
/// records whether the reversed machine of the first side accounts for it.
pub fn symmetric_performers(space: Space, xs: &[u64], budget: u64) -> Result<SymmetricSearch> {
    if xs.is_empty() || xs.iter().any(|x| x % 2 == 1 || *x == 0) {
        return Err(Error::InvalidInput("symmetric search needs positive even inputs".into()));
    }
    let mut xs = xs.to_vec();
    xs.sort_unstable();
    xs.dedup();
    let opts = RunOptions::with_budget(budget).translation_proof(true);
    let identity: Vec<MachineId> = (0..space.size())
        .into_par_iter()
        .map(|v| MachineId { value: v, space })
        .filter(|id| identity_on(&id.decode(), &xs, opts) && id.canonical_twin() == *id)
        .collect();
    let digests: Vec<(MachineId, [u8; 32], [u8; 32])> = identity
        .par_iter()
        .map(|id| {
            let d = diagrams_of(&id.decode(), &xs, opts)?.expect("identity machines halt");
            Ok((*id, digest(d.iter(), false), digest(d.iter(), true)))
        })
        .collect::<Result<_>>()?;
    let candidates: Vec<&(MachineId, [u8; 32], [u8; 32])> = digests.iter().filter(|(_, f, r)| f != r).collect();
    // Diagram classes in order of their smallest member.
    let mut classes: Vec<([u8; 32], [u8; 32], Vec<MachineId>)> = Vec::new();
    let mut index: HashMap<[u8; 32], usize> = HashMap::new();
    for (id, f, r) in &candidates {
        let i = *index.entry(*f).or_insert_with(|| {
            classes.push((*f, *r, Vec::new()));
            classes.len() - 1
        });
        classes[i].2.push(*id);
    }
    let mut pairs = Vec::new();
    for (i, (_, rev, members)) in classes.iter().enumerate() {
        let Some(&j) = index.get(rev) else {
            continue;
        };
        if j <= i {
            continue;
        }
        let (a, b) = (members[0], classes[j].2[0]);
        let ta = a.decode();
        let da = diagrams_of(&ta, &xs, opts)?.expect("identity machines halt");
        let db = diagrams_of(&b.decode(), &xs, opts)?.expect("identity machines halt");
        if !mirrored(&da, &db) {
            continue;
        }
        let hat = match reversed_table(&ta) {
            Some(t) => diagrams_of(&t, &xs, opts)?,
            None => None,
        };
        pairs.push(SymmetricPair {
            first: a.value,
            second: b.value,
            first_class: members.len(),
            second_class: classes[j].2.len(),
            reversed_table: hat.as_ref() == Some(&db),
            steps: xs.iter().zip(&da).map(|(x, rows)| (*x, rows.len() as u64 - 1)).collect(),
        });
    }
    Ok(SymmetricSearch {
        identity_machines: identity.len(),
        candidates: candidates.len(),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reversed_table_is_an_involution_when_defined() {
        let space = Space::two_two();
        for id in space.enumerate() {
            let t = id.decode();
            if let Some(r) = reversed_table(&t) {
                assert_eq!(reversed_table(&r), Some(t));
            }
        }
    }

    #[test]
    fn sheet_width_adds_gaps() {
        let t = MachineId::new(346, Space::two_two()).unwrap().decode();
        let ds: Vec<SpaceTimeDiagram> = (1..=3)
            .map(|x| run_with_diagram(&t, &unary_input(x).unwrap(), RunOptions::default()).1)
            .collect();
        let mut buf = Vec::new();
        write_sheet(&mut buf, &ds).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let dims = text.lines().nth(1).unwrap();
        let w: usize = ds.iter().map(|d| d.width()).sum::<usize>() + 2 * SHEET_GAP;
        let h = ds.iter().map(|d| d.height()).max().unwrap();
        assert_eq!(dims, format!("{w} {h}"));
    }
}
