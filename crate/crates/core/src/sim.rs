//! Budgeted execution of a machine on an input tape.
//!
//! Measurements follow the conventions of the mined data sets:
//!
//! * `t` is the number of steps up to and including the step that falls off
//!   the tape.
//! * `s` is the largest cell index the head visits, i.e. its distance from
//!   the edge cell `c0`. A machine that never leaves `c0` has `s = 0`.
//! * `N` counts black cells in the `t` configurations that precede each
//!   step (rows `0..t` of the diagram; the halting row is excluded),
//!   restricted to the visited columns `0..=s`.
//!
//! By default divergence is proved only by exact repetition of a
//! configuration (state, head, tape over the visited extent). A translated
//! cycle proof can be enabled on top: two frontier records in the same state
//! whose tape windows agree, shifted, over everything the head read in
//! between. The run from the second record then repeats the first one moved
//! away from the edge, forever.

use std::fmt;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::machine::{Direction, InputTape, TransitionTable, COLORS};

/// Default step budget per input.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Head position, state and tape of a running machine.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    /// One-based.
    pub state: u8,
    pub head: usize,
    /// Largest index visited so far.
    pub max_visited: usize,
    pub tape: Vec<bool>,
}

impl Configuration {
    pub fn initial(input: &InputTape) -> Self {
        let mut tape = input.cells().to_vec();
        if tape.is_empty() {
            tape.push(false);
        }
        Self {
            state: 1,
            head: 0,
            max_visited: 0,
            tape,
        }
    }

    pub fn read(&self) -> u8 {
        self.tape.get(self.head).copied().unwrap_or(false) as u8
    }

    /// Tape content over `0..=max_visited`.
    pub fn visited(&self) -> Vec<bool> {
        (0..=self.max_visited)
            .map(|i| self.tape.get(i).copied().unwrap_or(false))
            .collect()
    }
}

/// Outcome of a single step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Moved(Configuration),
    /// The head fell off the edge. Holds the final configuration.
    Halt(Configuration),
}

/// Applies one rule: write, move, change state.
pub fn step(config: &Configuration, table: &TransitionTable) -> Step {
    let mut next = config.clone();
    let action = table.rule(config.state, config.read());
    if next.head >= next.tape.len() {
        next.tape.resize(next.head + 1, false);
    }
    next.tape[config.head] = action.write == 1;
    next.state = action.next_state;
    match action.direction {
        Direction::Right if config.head == 0 => Step::Halt(next),
        Direction::Right => {
            next.head -= 1;
            Step::Moved(next)
        }
        Direction::Left => {
            next.head += 1;
            next.max_visited = next.max_visited.max(next.head);
            Step::Moved(next)
        }
    }
}

/// How a run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Status {
    Halted,
    /// Configurations after `first` and `second` steps coincide.
    DivergentByCycle { first: u64, second: u64 },
    /// The run after `second` steps repeats the run after `first` steps,
    /// translated away from the edge.
    DivergentByTranslation { first: u64, second: u64 },
    BudgetExceeded,
}

impl Status {
    pub fn is_halted(&self) -> bool {
        matches!(self, Status::Halted)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Status::Halted => "halted",
            Status::DivergentByCycle { .. } => "cycle",
            Status::DivergentByTranslation { .. } => "translation",
            Status::BudgetExceeded => "budget",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Status::DivergentByCycle { first, second } => {
                write!(f, "cycle between steps {first} and {second}")
            }
            Status::DivergentByTranslation { first, second } => {
                write!(f, "translated cycle between steps {first} and {second}")
            }
            other => f.write_str(other.label()),
        }
    }
}

/// Per-input measurement record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMetrics {
    pub status: Status,
    /// Steps taken.
    pub t: BigUint,
    /// Largest visited cell index.
    pub s: BigUint,
    /// Black cells over rows `0..t`, columns `0..=s`.
    pub n: BigUint,
    /// Black cells of the final row within columns `0..=s`.
    pub final_row_black: BigUint,
    /// Final tape with trailing white cells removed (halted runs only).
    pub output: Option<InputTape>,
}

impl RunMetrics {
    /// `N` under the convention that also counts the halting row.
    pub fn n_with_final_row(&self) -> BigUint {
        &self.n + &self.final_row_black
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub budget: u64,
    pub cycle_detection: bool,
    pub translation_proof: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
            cycle_detection: true,
            translation_proof: false,
        }
    }
}

impl RunOptions {
    pub fn with_budget(budget: u64) -> Self {
        Self {
            budget,
            ..Self::default()
        }
    }

    pub fn translation_proof(mut self, on: bool) -> Self {
        self.translation_proof = on;
        self
    }
}

/// Rule table flattened for the inner loop: bit 0 write, bit 1 moves right,
/// bits 2.. zero-based next state.
struct Compiled {
    rules: [u8; 2 * crate::machine::MAX_STATES as usize],
}

impl Compiled {
    fn new(table: &TransitionTable) -> Self {
        let mut rules = [0u8; 2 * crate::machine::MAX_STATES as usize];
        for (state, color, a) in table.rules() {
            let i = (state as usize - 1) * COLORS as usize + color as usize;
            rules[i] = a.write
                | (matches!(a.direction, Direction::Right) as u8) << 1
                | (a.next_state - 1) << 2;
        }
        Self { rules }
    }
}

/// Bit-packed tape growing away from the edge.
#[derive(Clone)]
struct Tape {
    words: Vec<u64>,
}

impl Tape {
    fn new(input: &InputTape) -> Self {
        let mut words = vec![0u64; input.extent() / 64 + 2];
        for (i, &c) in input.cells().iter().enumerate() {
            if c {
                words[i >> 6] |= 1 << (i & 63);
            }
        }
        Self { words }
    }

    #[inline(always)]
    fn get(&self, i: usize) -> u64 {
        (self.words[i >> 6] >> (i & 63)) & 1
    }

    /// Cells `end - 127 ..= end`, cell `end` in the top bit. Cells before the
    /// edge read as white.
    fn window(&self, end: usize) -> u128 {
        if end < WINDOW - 1 {
            return self.bits_from(0) << (WINDOW - 1 - end);
        }
        self.bits_from(end + 1 - WINDOW)
    }

    /// 128 cells from `start` on, cell `start` in bit 0.
    #[inline(always)]
    fn bits_from(&self, start: usize) -> u128 {
        let word = |k: usize| self.words.get(k).copied().unwrap_or(0) as u128;
        let (k, o) = (start >> 6, start & 63);
        let low = word(k) | word(k + 1) << 64;
        if o == 0 {
            low
        } else {
            low >> o | word(k + 2) << (128 - o)
        }
    }

    fn count_ones(&self, upto: usize) -> u64 {
        (0..=upto).map(|i| self.get(i)).sum()
    }

    fn to_cells(&self, len: usize) -> Vec<bool> {
        (0..len).map(|i| self.get(i) == 1).collect()
    }
}

/// Width in cells of the tape window kept at each frontier record.
const WINDOW: usize = 128;

/// Last time the head reached a new maximum in a given state.
#[derive(Clone, Copy)]
struct FrontierRecord {
    step: u64,
    head: usize,
    window: u128,
    /// Smallest head position since this record.
    low: usize,
}

struct Snapshot {
    step: u64,
    state: u8,
    head: usize,
    max: usize,
    words: Vec<u64>,
}

/// Records every cell change so the diagram can be rebuilt.
trait Recorder {
    fn record(&mut self, row: u64, cell: usize, color: bool);
}

struct NoRecord;

impl Recorder for NoRecord {
    #[inline(always)]
    fn record(&mut self, _: u64, _: usize, _: bool) {}
}

impl Recorder for Vec<(usize, usize, bool)> {
    #[inline(always)]
    fn record(&mut self, row: u64, cell: usize, color: bool) {
        self.push((row as usize, cell, color));
    }
}

fn run_inner<R: Recorder>(
    table: &TransitionTable,
    input: &InputTape,
    opts: RunOptions,
    recorder: &mut R,
) -> RunMetrics {
    let compiled = Compiled::new(table);
    let rules = compiled.rules;
    let mut tape = Tape::new(input);
    let input_extent = input.extent();
    let mut state: u8 = 0;
    let mut head: usize = 0;
    let mut max: usize = 0;
    let mut black: u64 = input.black_cells() as u64;
    let mut n_acc: u128 = 0;
    let mut t: u64 = 0;
    let mut snapshot = Snapshot {
        step: 0,
        state: 0,
        head: 0,
        max: 0,
        words: tape.words[..1].to_vec(),
    };
    let mut next_snapshot: u64 = 1;
    let budget = opts.budget;
    let states = table.states() as usize;
    let mut records: [Option<FrontierRecord>; crate::machine::MAX_STATES as usize] =
        [None; crate::machine::MAX_STATES as usize];

    let status = loop {
        if t >= budget {
            break Status::BudgetExceeded;
        }
        n_acc += black as u128;
        let word = head >> 6;
        let bit = head & 63;
        let color = (tape.words[word] >> bit) & 1;
        let r = rules[(state as usize) << 1 | color as usize];
        let write = (r & 1) as u64;
        if write != color {
            tape.words[word] ^= 1 << bit;
            black = black + write - color;
            recorder.record(t + 1, head, write == 1);
        }
        state = r >> 2;
        t += 1;
        if r & 2 != 0 {
            if head == 0 {
                break Status::Halted;
            }
            head -= 1;
            if opts.translation_proof {
                for rec in records[..states].iter_mut().flatten() {
                    rec.low = rec.low.min(head);
                }
            }
        } else {
            head += 1;
            if head > max {
                max = head;
                if (head >> 6) + 1 >= tape.words.len() {
                    let len = tape.words.len();
                    tape.words.resize(len * 2, 0);
                }
                if opts.translation_proof && head >= input_extent {
                    let window = tape.window(head);
                    if let Some(rec) = records[state as usize] {
                        // Everything read since the record lies in `rec.low..=rec.head`.
                        let len = rec.head - rec.low + 1;
                        if len <= WINDOW && rec.window >> (WINDOW - len) == window >> (WINDOW - len)
                        {
                            break Status::DivergentByTranslation {
                                first: rec.step,
                                second: t,
                            };
                        }
                    }
                    records[state as usize] = Some(FrontierRecord {
                        step: t,
                        head,
                        window,
                        low: head,
                    });
                }
            }
        }
        if opts.cycle_detection {
            if state == snapshot.state
                && head == snapshot.head
                && max == snapshot.max
                && tape.words[..snapshot.words.len()] == snapshot.words[..]
            {
                break Status::DivergentByCycle {
                    first: snapshot.step,
                    second: t,
                };
            }
            if t == next_snapshot {
                next_snapshot = next_snapshot.saturating_mul(2);
                snapshot.step = t;
                snapshot.state = state;
                snapshot.head = head;
                snapshot.max = max;
                snapshot.words.clear();
                snapshot
                    .words
                    .extend_from_slice(&tape.words[..(max >> 6) + 1]);
            }
        }
    };

    // Untouched input cells beyond the visited extent stay black in every row.
    let beyond = (max + 1..input_extent).filter(|&i| input.get(i)).count() as u128;
    let n = n_acc - beyond * t as u128;
    let final_black = tape.count_ones(max);
    let output = status.is_halted().then(|| {
        let len = (max + 1).max(input_extent);
        InputTape::from_cells(tape.to_cells(len))
    });
    RunMetrics {
        status,
        t: BigUint::from(t),
        s: BigUint::from(max as u64),
        n: BigUint::from(n),
        final_row_black: BigUint::from(final_black),
        output,
    }
}

/// Runs `table` on `input` until it halts, provably diverges or the budget
/// is spent.
pub fn run(table: &TransitionTable, input: &InputTape, opts: RunOptions) -> RunMetrics {
    run_inner(table, input, opts, &mut NoRecord)
}

/// Runs and also records the space-time diagram.
pub fn run_with_diagram(
    table: &TransitionTable,
    input: &InputTape,
    opts: RunOptions,
) -> (RunMetrics, SpaceTimeDiagram) {
    let mut changes = Vec::new();
    let metrics = run_inner(table, input, opts, &mut changes);
    let width = metrics_s(&metrics) + 1;
    let initial = (0..width).map(|i| input.get(i)).collect();
    let rows = metrics_t(&metrics) as usize + 1;
    (
        metrics,
        SpaceTimeDiagram {
            width,
            rows,
            initial,
            changes,
        },
    )
}

fn metrics_s(m: &RunMetrics) -> usize {
    u64::try_from(&m.s).unwrap_or(u64::MAX) as usize
}

fn metrics_t(m: &RunMetrics) -> u64 {
    u64::try_from(&m.t).unwrap_or(u64::MAX)
}

/// Renders the diagram of a halting run; other outcomes are reported as
/// errors carrying their status.
pub fn render_diagram(
    table: &TransitionTable,
    input: &InputTape,
    budget: u64,
) -> Result<SpaceTimeDiagram> {
    let (metrics, diagram) = run_with_diagram(table, input, RunOptions::with_budget(budget));
    if !metrics.status.is_halted() {
        return Err(Error::NotHalted {
            x: input.black_cells() as u64,
            status: metrics.status.to_string(),
        });
    }
    Ok(diagram)
}

/// Tape configurations over time: row 0 is the input, row `i` the tape after
/// step `i`. Stored as the initial row plus the per-step cell changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTimeDiagram {
    width: usize,
    rows: usize,
    initial: Vec<bool>,
    /// `(row, cell, new color)` in row order.
    changes: Vec<(usize, usize, bool)>,
}

impl SpaceTimeDiagram {
    /// Number of columns (`s + 1`).
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of rows (`t + 1`).
    pub fn height(&self) -> usize {
        self.rows
    }

    /// Iterates the rows top to bottom.
    pub fn rows(&self) -> impl Iterator<Item = Vec<bool>> + '_ {
        let mut row = self.initial.clone();
        let mut j = 0;
        (0..self.rows).map(move |i| {
            while j < self.changes.len() && self.changes[j].0 == i {
                let (_, cell, color) = self.changes[j];
                row[cell] = color;
                j += 1;
            }
            row.clone()
        })
    }

    /// Black cells over the first `rows` rows.
    pub fn black_cells(&self, rows: usize) -> u128 {
        self.rows()
            .take(rows)
            .map(|r| r.iter().filter(|&&c| c).count() as u128)
            .sum()
    }

    /// Writes a plain PBM (P1) image, one row per time step. Column 0 of the
    /// image is the cell farthest from the edge so the edge is on the right.
    pub fn write_pbm<W: std::io::Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "P1")?;
        writeln!(out, "{} {}", self.width, self.rows)?;
        for row in self.rows() {
            let line: Vec<&str> = row.iter().rev().map(|&c| if c { "1" } else { "0" }).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    /// Mirror image along the time axis: last row first.
    pub fn time_reversed_rows(&self) -> Vec<Vec<bool>> {
        let mut rows: Vec<Vec<bool>> = self.rows().collect();
        rows.reverse();
        rows
    }
}

/// Halting measurements over a range of unary inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricsSeries {
    /// `(x, metrics)` for halted inputs, ascending in `x`.
    pub points: Vec<(u64, RunMetrics)>,
    pub dropped_cycle: usize,
    pub dropped_translation: usize,
    pub dropped_budget: usize,
}

impl MetricsSeries {
    pub fn dropped(&self) -> usize {
        self.dropped_cycle + self.dropped_translation + self.dropped_budget
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> Vec<u64> {
        self.points.iter().map(|(x, _)| *x).collect()
    }

    pub fn t(&self) -> Vec<(u64, BigUint)> {
        self.points.iter().map(|(x, m)| (*x, m.t.clone())).collect()
    }

    pub fn s(&self) -> Vec<(u64, BigUint)> {
        self.points.iter().map(|(x, m)| (*x, m.s.clone())).collect()
    }

    pub fn n(&self) -> Vec<(u64, BigUint)> {
        self.points.iter().map(|(x, m)| (*x, m.n.clone())).collect()
    }
}

/// Runs every unary input in `inputs` and keeps the halted ones.
pub fn metrics_series(
    table: &TransitionTable,
    inputs: impl IntoIterator<Item = u64>,
    opts: RunOptions,
) -> Result<MetricsSeries> {
    let mut series = MetricsSeries {
        points: Vec::new(),
        dropped_cycle: 0,
        dropped_translation: 0,
        dropped_budget: 0,
    };
    let mut any = false;
    for x in inputs {
        any = true;
        let m = run(table, &crate::machine::unary_input(x)?, opts);
        match m.status {
            Status::Halted => series.points.push((x, m)),
            Status::DivergentByCycle { .. } => series.dropped_cycle += 1,
            Status::DivergentByTranslation { .. } => series.dropped_translation += 1,
            Status::BudgetExceeded => series.dropped_budget += 1,
        }
    }
    if !any {
        return Err(Error::InvalidInput("empty input range".into()));
    }
    Ok(series)
}
