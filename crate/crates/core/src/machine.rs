//! Machine spaces, Wolfram-style machine numbers and input tapes.
//!
//! A machine in `(n, 2)` space is a total map from `(state, read color)` to
//! an action `(write color, direction, next state)`. Machine numbers are the
//! base-`4n` rendering of the table with `2n` digits. The most significant
//! digit holds the case `(1, 1)`, followed by `(1, 0)`, `(2, 1)`, `(2, 0)`,
//! and so on. A digit value `v` decodes as
//!
//! ```text
//! next state  = v / 4 + 1
//! write color = (v / 2) % 2
//! direction   = Right if v % 2 == 1 else Left
//! ```
//!
//! The tape is one-way infinite. Cell `c0` sits next to the edge, `Right`
//! moves toward the edge and `Left` moves away from it. Moving `Right` from
//! `c0` falls off the tape and halts the machine.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of tape colors. Only binary tapes are supported.
pub const COLORS: u8 = 2;

/// Largest state count whose space size still fits in a `u64`.
pub const MAX_STATES: u8 = 6;

/// An `(n, k)` space of Turing machines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Space {
    pub states: u8,
    pub colors: u8,
}

impl Space {
    pub fn new(states: u8, colors: u8) -> Result<Self> {
        if colors != COLORS {
            return Err(Error::UnsupportedSpace(format!(
                "only k = {COLORS} colors are supported, got k = {colors}"
            )));
        }
        if states == 0 || states > MAX_STATES {
            return Err(Error::UnsupportedSpace(format!(
                "state count must lie in 1..={MAX_STATES}, got n = {states}"
            )));
        }
        Ok(Self { states, colors })
    }

    /// `(2, 2)` space.
    pub const fn two_two() -> Self {
        Self { states: 2, colors: 2 }
    }

    /// `(3, 2)` space.
    pub const fn three_two() -> Self {
        Self { states: 3, colors: 2 }
    }

    /// Radix of a machine number: `2nk`.
    pub fn radix(&self) -> u64 {
        2 * self.states as u64 * self.colors as u64
    }

    /// Number of digits of a machine number: `nk`.
    pub fn digits(&self) -> usize {
        self.states as usize * self.colors as usize
    }

    /// `(2nk)^(nk)`.
    pub fn size(&self) -> u64 {
        self.radix().pow(self.digits() as u32)
    }

    /// Lazily yields every machine number of the space in ascending order.
    pub fn enumerate(&self) -> impl Iterator<Item = MachineId> + '_ {
        let space = *self;
        (0..self.size()).map(move |value| MachineId { value, space })
    }
}

impl fmt::Display for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.states, self.colors)
    }
}

impl FromStr for Space {
    type Err = Error;

    /// Parses `"n,k"`, e.g. `"3,2"`.
    fn from_str(s: &str) -> Result<Self> {
        let (n, k) = s
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("space must look like \"n,k\", got {s:?}")))?;
        let n: u8 = n
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad state count in {s:?}")))?;
        let k: u8 = k
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad color count in {s:?}")))?;
        Space::new(n, k)
    }
}

/// A machine number within a given space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MachineId {
    pub value: u64,
    pub space: Space,
}

impl PartialOrd for Space {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Space {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.states, self.colors).cmp(&(other.states, other.colors))
    }
}

impl MachineId {
    pub fn new(value: u64, space: Space) -> Result<Self> {
        if value >= space.size() {
            return Err(Error::OutOfRange {
                value,
                bound: space.size(),
                space,
            });
        }
        Ok(Self { value, space })
    }

    pub fn decode(&self) -> TransitionTable {
        TransitionTable::decode(*self)
    }

    /// Least machine number reachable by relabeling states `2..=n`.
    pub fn canonical_twin(&self) -> MachineId {
        self.twin_class().into_iter().min().unwrap_or(*self)
    }

    /// All distinct machines obtained by relabeling states `2..=n`, sorted.
    pub fn twin_class(&self) -> Vec<MachineId> {
        let table = self.decode();
        let n = self.space.states;
        let mut ids: Vec<MachineId> = relabelings(n)
            .iter()
            .map(|perm| table.relabel(perm).encode())
            .collect();
        ids.sort();
        ids.dedup();
        ids
    }
}

impl fmt::Display for MachineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Head movement. `Right` moves toward the tape edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

impl Direction {
    pub fn reversed(self) -> Self {
        match self {
            Direction::Left => Direction::Right,
            Direction::Right => Direction::Left,
        }
    }
}

/// The action triple of a single rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Action {
    pub write: u8,
    pub direction: Direction,
    /// One-based.
    pub next_state: u8,
}

impl Action {
    pub fn new(write: u8, direction: Direction, next_state: u8) -> Self {
        Self {
            write,
            direction,
            next_state,
        }
    }

    fn digit(&self) -> u64 {
        let dir = matches!(self.direction, Direction::Right) as u64;
        2 * COLORS as u64 * (self.next_state as u64 - 1) + 2 * self.write as u64 + dir
    }

    fn from_digit(v: u64) -> Self {
        let k = COLORS as u64;
        Self {
            write: ((v / 2) % k) as u8,
            direction: if v % 2 == 1 {
                Direction::Right
            } else {
                Direction::Left
            },
            next_state: (v / (2 * k)) as u8 + 1,
        }
    }
}

/// Complete rule set of a machine with `states` states and two colors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransitionTable {
    states: u8,
    /// Indexed by `(state - 1) * 2 + color`.
    rules: Vec<Action>,
}

impl TransitionTable {
    /// Builds a table from rules listed as `(state, read color) -> action`.
    /// Every case must appear exactly once.
    pub fn from_rules(
        states: u8,
        rules: impl IntoIterator<Item = ((u8, u8), Action)>,
    ) -> Result<Self> {
        let space = Space::new(states, COLORS)?;
        let mut slots: Vec<Option<Action>> = vec![None; space.digits()];
        for ((state, color), action) in rules {
            if state == 0 || state > states || color >= COLORS {
                return Err(Error::MalformedTable(format!(
                    "case ({state}, {color}) lies outside the {space} space"
                )));
            }
            Self::check_action(states, &action)?;
            let slot = &mut slots[Self::index(state, color)];
            if slot.is_some() {
                return Err(Error::MalformedTable(format!(
                    "case ({state}, {color}) is given twice"
                )));
            }
            *slot = Some(action);
        }
        let rules = slots
            .into_iter()
            .enumerate()
            .map(|(i, a)| {
                a.ok_or_else(|| {
                    Error::MalformedTable(format!(
                        "missing rule for case ({}, {})",
                        i / 2 + 1,
                        i % 2
                    ))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { states, rules })
    }

    fn check_action(states: u8, action: &Action) -> Result<()> {
        if action.write >= COLORS {
            return Err(Error::MalformedTable(format!(
                "write color {} is not a tape color",
                action.write
            )));
        }
        if action.next_state == 0 || action.next_state > states {
            return Err(Error::MalformedTable(format!(
                "next state {} lies outside 1..={states}",
                action.next_state
            )));
        }
        Ok(())
    }

    fn index(state: u8, color: u8) -> usize {
        (state as usize - 1) * COLORS as usize + color as usize
    }

    pub fn decode(id: MachineId) -> Self {
        let space = id.space;
        let radix = space.radix();
        let digits = space.digits();
        let mut rules = vec![Action::from_digit(0); digits];
        let mut rest = id.value;
        // Least significant digit first: it belongs to the last case (n, 0).
        for case in (0..digits).rev() {
            let state = (case / 2) as u8 + 1;
            let color = 1 - (case % 2) as u8;
            rules[Self::index(state, color)] = Action::from_digit(rest % radix);
            rest /= radix;
        }
        Self {
            states: space.states,
            rules,
        }
    }

    pub fn encode(&self) -> MachineId {
        let space = self.space();
        let radix = space.radix();
        let mut value = 0u64;
        for case in 0..space.digits() {
            let state = (case / 2) as u8 + 1;
            let color = 1 - (case % 2) as u8;
            value = value * radix + self.rule(state, color).digit();
        }
        MachineId { value, space }
    }

    pub fn space(&self) -> Space {
        Space {
            states: self.states,
            colors: COLORS,
        }
    }

    pub fn states(&self) -> u8 {
        self.states
    }

    pub fn rule(&self, state: u8, color: u8) -> Action {
        self.rules[Self::index(state, color)]
    }

    /// `(state, color, action)` triples in case order.
    pub fn rules(&self) -> impl Iterator<Item = (u8, u8, Action)> + '_ {
        self.rules
            .iter()
            .enumerate()
            .map(|(i, a)| ((i / 2) as u8 + 1, (i % 2) as u8, *a))
    }

    /// Applies a state relabeling. `perm[s - 1]` is the new label of state `s`.
    pub fn relabel(&self, perm: &[u8]) -> Self {
        debug_assert_eq!(perm.len(), self.states as usize);
        let mut rules = self.rules.clone();
        for (state, color, action) in self.rules() {
            let moved = Action {
                next_state: perm[action.next_state as usize - 1],
                ..action
            };
            rules[Self::index(perm[state as usize - 1], color)] = moved;
        }
        Self {
            states: self.states,
            rules,
        }
    }
}

/// Permutations of `1..=n` that fix state 1, as label vectors.
pub(crate) fn relabelings(n: u8) -> Vec<Vec<u8>> {
    fn permute(rest: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
        if k == rest.len() {
            let mut perm = vec![1];
            perm.extend_from_slice(rest);
            out.push(perm);
            return;
        }
        for i in k..rest.len() {
            rest.swap(k, i);
            permute(rest, k + 1, out);
            rest.swap(k, i);
        }
    }
    let mut rest: Vec<u8> = (2..=n).collect();
    let mut out = Vec::new();
    permute(&mut rest, 0, &mut out);
    out
}

/// Finitely many black cells on a one-way infinite tape, `cells[0]` at the edge.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InputTape {
    cells: Vec<bool>,
}

impl InputTape {
    /// Trailing white cells are dropped so equal tapes compare equal.
    pub fn from_cells(mut cells: Vec<bool>) -> Self {
        while cells.last() == Some(&false) {
            cells.pop();
        }
        Self { cells }
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, index: usize) -> bool {
        self.cells.get(index).copied().unwrap_or(false)
    }

    pub fn black_cells(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Index one past the last black cell.
    pub fn extent(&self) -> usize {
        self.cells.len()
    }
}

/// Unary input `x`: cells `c0 ..= c(x-1)` black.
pub fn unary_input(x: u64) -> Result<InputTape> {
    if x == 0 {
        return Err(Error::InvalidInput(
            "unary inputs start at 1".to_string(),
        ));
    }
    Ok(InputTape {
        cells: vec![true; x as usize],
    })
}

/// Binary input coding that interleaves digit cells with a terminating marker.
///
/// With `k` the bit length of `a` (`k = 1` for `a = 0`), cell `c(2i)` carries
/// bit `i` of `a` for `0 <= i <= k`, odd cells are white except `c(2k+1)`.
pub fn rho_input(a: u64) -> InputTape {
    let k = if a == 0 { 1 } else { 64 - a.leading_zeros() as usize };
    let mut cells = vec![false; 2 * k + 2];
    for i in 0..=k {
        cells[2 * i] = i < 64 && (a >> i) & 1 == 1;
    }
    cells[2 * k + 1] = true;
    InputTape::from_cells(cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(value: u64, space: Space) -> MachineId {
        MachineId::new(value, space).unwrap()
    }

    #[test]
    fn decode_zero_is_all_minimal_actions() {
        let table = id(0, Space::two_two()).decode();
        for (_, _, action) in table.rules() {
            assert_eq!(action, Action::new(0, Direction::Left, 1));
        }
    }

    #[test]
    fn out_of_range_names_bound() {
        let err = MachineId::new(4096, Space::two_two()).unwrap_err();
        assert!(err.to_string().contains("4096"), "{err}");
    }

    #[test]
    fn roundtrips() {
        for (v, sp) in [
            (346, Space::two_two()),
            (0, Space::two_two()),
            (1_728_529, Space::three_two()),
        ] {
            assert_eq!(id(v, sp).decode().encode().value, v);
        }
    }

    #[test]
    fn most_significant_digit_is_state_one_black() {
        // 4095 = every digit 7: next state 2, write 1, Right.
        let t = id(7 * 8 * 8 * 8, Space::two_two()).decode();
        assert_eq!(t.rule(1, 1), Action::new(1, Direction::Right, 2));
        assert_eq!(t.rule(1, 0), Action::new(0, Direction::Left, 1));
        let t = id(1, Space::two_two()).decode();
        assert_eq!(t.rule(2, 0), Action::new(0, Direction::Right, 1));
    }

    #[test]
    fn busy_beaver_twins_share_a_canonical_id() {
        let a = id(599_063, Space::three_two());
        let b = id(666_364, Space::three_two());
        assert_eq!(a.canonical_twin(), b.canonical_twin());
        assert_eq!(a.canonical_twin().value, 599_063);
        assert_eq!(a.twin_class(), vec![a, b]);
    }

    #[test]
    fn two_state_twins_are_trivial() {
        for m in Space::two_two().enumerate().step_by(37) {
            assert_eq!(m.canonical_twin(), m);
        }
    }

    #[test]
    fn space_sizes() {
        assert_eq!(Space::two_two().size(), 4096);
        assert_eq!(Space::three_two().size(), 2_985_984);
        let first: Vec<u64> = Space::two_two().enumerate().take(3).map(|m| m.value).collect();
        assert_eq!(first, vec![0, 1, 2]);
        assert_eq!(Space::two_two().enumerate().count(), 4096);
    }

    #[test]
    fn parse_space() {
        assert_eq!("3,2".parse::<Space>().unwrap(), Space::three_two());
        assert!("3,3".parse::<Space>().is_err());
        assert!("3".parse::<Space>().is_err());
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let act = Action::new(0, Direction::Left, 1);
        let missing = TransitionTable::from_rules(2, [((1, 0), act), ((1, 1), act), ((2, 0), act)]);
        assert!(matches!(missing, Err(Error::MalformedTable(_))));
        let bad_state = TransitionTable::from_rules(
            2,
            [
                ((1, 0), act),
                ((1, 1), act),
                ((2, 0), act),
                ((2, 1), Action::new(0, Direction::Left, 3)),
            ],
        );
        assert!(matches!(bad_state, Err(Error::MalformedTable(_))));
    }

    #[test]
    fn unary_inputs() {
        assert!(unary_input(0).is_err());
        assert_eq!(unary_input(1).unwrap().cells(), &[true]);
        let three = unary_input(3).unwrap();
        assert_eq!(three.cells(), &[true, true, true]);
        assert!(!three.get(3));
        assert_eq!(unary_input(14).unwrap().black_cells(), 14);
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_input(1).cells(), &[true, false, false, true]);
        assert_eq!(
            rho_input(2).cells(),
            &[false, false, true, false, false, true]
        );
        assert_eq!(rho_input(0).cells(), &[false, false, false, true]);
    }

    #[test]
    fn relabelings_fix_state_one() {
        let perms = relabelings(3);
        assert_eq!(perms.len(), 2);
        assert!(perms.iter().all(|p| p[0] == 1));
        assert_eq!(relabelings(2), vec![vec![1, 2]]);
    }
}

#[cfg(test)]
mod props {
    use super::*;
    use crate::sim::{run, RunOptions};
    use proptest::prelude::*;

    fn action(states: u8) -> impl Strategy<Value = Action> {
        (0..COLORS, any::<bool>(), 1..=states).prop_map(|(w, right, q)| {
            let d = if right { Direction::Right } else { Direction::Left };
            Action::new(w, d, q)
        })
    }

    fn table(states: u8) -> impl Strategy<Value = TransitionTable> {
        prop::collection::vec(action(states), 2 * states as usize).prop_map(move |acts| {
            let rules = acts
                .into_iter()
                .enumerate()
                .map(|(i, a)| (((i / 2) as u8 + 1, (i % 2) as u8), a));
            TransitionTable::from_rules(states, rules).unwrap()
        })
    }

    #[test]
    fn every_two_two_id_roundtrips() {
        for id in Space::two_two().enumerate() {
            assert_eq!(id.decode().encode(), id);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn tables_roundtrip(t in (2u8..=4).prop_flat_map(table)) {
            prop_assert_eq!(t.encode().decode(), t);
        }

        #[test]
        fn ids_roundtrip(v in 0..Space::three_two().size()) {
            let id = MachineId::new(v, Space::three_two()).unwrap();
            prop_assert_eq!(id.decode().encode(), id);
        }

        #[test]
        fn unary_input_has_x_black_cells(x in 1u64..5000) {
            let tape = unary_input(x).unwrap();
            prop_assert_eq!(tape.black_cells() as u64, x);
            prop_assert_eq!(tape.extent() as u64, x);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn twins_have_identical_metrics(v in 0..Space::three_two().size()) {
            let id = MachineId::new(v, Space::three_two()).unwrap();
            let (a, b) = (id.decode(), id.canonical_twin().decode());
            let opts = RunOptions::with_budget(100_000);
            for x in 1..=10 {
                let input = unary_input(x).unwrap();
                prop_assert_eq!(run(&a, &input, opts), run(&b, &input, opts));
            }
        }
    }

    #[test]
    fn rho_is_injective_below_two_to_the_sixteen() {
        let mut seen = std::collections::HashSet::new();
        for a in 0..1u64 << 16 {
            assert!(seen.insert(rho_input(a).cells().to_vec()), "rho({a}) repeats");
        }
    }
}
