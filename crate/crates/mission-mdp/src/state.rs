//! Factored mission state space: layout, mixed-radix indexing, enumeration.
//!
//! A mission state is a tuple of discrete variables
//! `(f, r_1..r_k, g_1..g_k, l, c, t, m)`: fault mode, per-goal range
//! flags, per-goal priorities, grid location, goal commitment, threat
//! level and navigation mode. States are stored densely: every state maps
//! to a unique flat index under a fixed mixed-radix digit order
//! (most significant first)
//!
//! ```text
//! [fault-1, r_1 .. r_k, g_1 .. g_k, location, commitment, threat, mode]
//! ```
//!
//! Fault is 1-based externally and 0-based as a digit. The total state
//! count is `f * (2^k * 3^k * (k+1)) * l * t * m`, which grows
//! nonlinearly in the number of goals, so counting is done in `u128`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Flat index of a state under a layout's mixed-radix order.
pub type StateIndex = usize;

/// Number of range levels per goal (in range / out of range).
pub const RANGE_LEVELS: u32 = 2;
/// Number of goal priority levels (achieved, low, high).
pub const PRIORITY_LEVELS: u32 = 3;

/// Default ceiling on dense enumeration; layouts beyond this are countable
/// but not materializable.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 28;

/// Serialized form of a layout: only the five free counts. The remaining
/// ranges (range flags, priorities, commitment) are fixed by construction.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct LayoutSpec {
    fault_count: u32,
    goal_count: u32,
    location_count: u32,
    threat_count: u32,
    mode_count: u32,
}

/// Shape of the factored state space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "LayoutSpec", into = "LayoutSpec")]
pub struct StateLayout {
    fault_count: u32,
    goal_count: u32,
    location_count: u32,
    threat_count: u32,
    mode_count: u32,
    /// Radix of each digit, most significant first.
    radices: Vec<u32>,
    /// Stride of each digit when the space is enumerable, else empty.
    strides: Vec<usize>,
}

impl TryFrom<LayoutSpec> for StateLayout {
    type Error = Error;
    fn try_from(s: LayoutSpec) -> Result<Self> {
        StateLayout::new(
            s.fault_count,
            s.goal_count,
            s.location_count,
            s.threat_count,
            s.mode_count,
        )
    }
}

impl From<StateLayout> for LayoutSpec {
    fn from(l: StateLayout) -> LayoutSpec {
        LayoutSpec {
            fault_count: l.fault_count,
            goal_count: l.goal_count,
            location_count: l.location_count,
            threat_count: l.threat_count,
            mode_count: l.mode_count,
        }
    }
}

impl StateLayout {
    pub fn new(
        fault_count: u32,
        goal_count: u32,
        location_count: u32,
        threat_count: u32,
        mode_count: u32,
    ) -> Result<Self> {
        let mut violations = Vec::new();
        for (name, v) in [
            ("fault_count", fault_count),
            ("goal_count", goal_count),
            ("location_count", location_count),
            ("threat_count", threat_count),
            ("mode_count", mode_count),
        ] {
            if v < 1 {
                violations.push(format!("layout.{name}: must be >= 1, got {v}"));
            }
        }
        if !violations.is_empty() {
            return Err(Error::Validation(violations));
        }

        let k = goal_count as usize;
        let mut radices = Vec::with_capacity(2 * k + 5);
        radices.push(fault_count);
        radices.extend(std::iter::repeat(RANGE_LEVELS).take(k));
        radices.extend(std::iter::repeat(PRIORITY_LEVELS).take(k));
        radices.push(location_count);
        radices.push(goal_count + 1); // commitment: 0 or a goal index
        radices.push(threat_count);
        radices.push(mode_count);

        let mut layout = StateLayout {
            fault_count,
            goal_count,
            location_count,
            threat_count,
            mode_count,
            radices,
            strides: Vec::new(),
        };
        if layout.state_count() <= usize::MAX as u128 {
            let n = layout.radices.len();
            let mut strides = vec![1usize; n];
            for i in (0..n - 1).rev() {
                strides[i] = strides[i + 1]
                    .checked_mul(layout.radices[i + 1] as usize)
                    .unwrap_or(usize::MAX);
            }
            layout.strides = strides;
        }
        Ok(layout)
    }

    /// Single-goal layout with the same fault/grid/threat/mode ranges.
    pub fn with_single_goal(&self) -> StateLayout {
        StateLayout::new(
            self.fault_count,
            1,
            self.location_count,
            self.threat_count,
            self.mode_count,
        )
        .expect("restricting goals preserves validity")
    }

    pub fn fault_count(&self) -> u32 {
        self.fault_count
    }
    pub fn goal_count(&self) -> u32 {
        self.goal_count
    }
    pub fn location_count(&self) -> u32 {
        self.location_count
    }
    pub fn threat_count(&self) -> u32 {
        self.threat_count
    }
    pub fn mode_count(&self) -> u32 {
        self.mode_count
    }
    pub fn range_levels(&self) -> u32 {
        RANGE_LEVELS
    }
    pub fn priority_levels(&self) -> u32 {
        PRIORITY_LEVELS
    }
    pub fn commitment_levels(&self) -> u32 {
        self.goal_count + 1
    }

    /// Exact state count `f * 2^k * 3^k * (k+1) * l * t * m`.
    pub fn state_count(&self) -> u128 {
        let k = self.goal_count;
        let mut n: u128 = self.fault_count as u128;
        for _ in 0..k {
            n = n.saturating_mul(RANGE_LEVELS as u128);
        }
        for _ in 0..k {
            n = n.saturating_mul(PRIORITY_LEVELS as u128);
        }
        n = n.saturating_mul((k + 1) as u128);
        n = n.saturating_mul(self.location_count as u128);
        n = n.saturating_mul(self.threat_count as u128);
        n = n.saturating_mul(self.mode_count as u128);
        n
    }

    /// State count as a dense array size, or a capacity error when it
    /// exceeds the enumeration cap.
    pub fn dense_count(&self) -> Result<usize> {
        let n = self.state_count();
        if n > DEFAULT_ENUMERATION_CAP {
            return Err(Error::capacity(format!(
                "state space has {n} states, enumeration cap is {DEFAULT_ENUMERATION_CAP}"
            )));
        }
        Ok(n as usize)
    }

    // Digit positions within the radix vector.
    pub(crate) fn digit_count(&self) -> usize {
        self.radices.len()
    }
    pub(crate) fn fault_pos(&self) -> usize {
        0
    }
    pub(crate) fn range_pos(&self, goal: usize) -> usize {
        1 + goal
    }
    pub(crate) fn priority_pos(&self, goal: usize) -> usize {
        1 + self.goal_count as usize + goal
    }
    pub(crate) fn location_pos(&self) -> usize {
        1 + 2 * self.goal_count as usize
    }
    pub(crate) fn commitment_pos(&self) -> usize {
        2 + 2 * self.goal_count as usize
    }
    pub(crate) fn threat_pos(&self) -> usize {
        3 + 2 * self.goal_count as usize
    }
    pub(crate) fn mode_pos(&self) -> usize {
        4 + 2 * self.goal_count as usize
    }
    pub(crate) fn radices(&self) -> &[u32] {
        &self.radices
    }
    pub(crate) fn strides(&self) -> &[usize] {
        debug_assert!(
            !self.strides.is_empty(),
            "layout too large for dense indexing"
        );
        &self.strides
    }

    /// Flat index from a digit vector. Digits must be within their radices.
    pub(crate) fn index_of_digits(&self, digits: &[u32]) -> usize {
        debug_assert_eq!(digits.len(), self.radices.len());
        let strides = self.strides();
        let mut idx = 0usize;
        for (i, &d) in digits.iter().enumerate() {
            debug_assert!(d < self.radices[i]);
            idx += d as usize * strides[i];
        }
        idx
    }

    /// Digit vector of a flat index, written into `out`.
    pub(crate) fn digits_of_index(&self, idx: usize, out: &mut [u32]) {
        debug_assert_eq!(out.len(), self.radices.len());
        let strides = self.strides();
        let mut rem = idx;
        for i in 0..out.len() {
            out[i] = (rem / strides[i]) as u32;
            rem %= strides[i];
        }
    }
}

/// One factored global state. Fault is 1-based; all other variables are
/// 0-based as in the layout ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissionState {
    /// Fault mode in `[1, fault_count]`.
    pub fault: u32,
    /// Per-goal range feasibility flags, length `goal_count`.
    pub range_flags: Vec<bool>,
    /// Per-goal priorities in `{0, 1, 2}`, length `goal_count`.
    pub goal_priorities: Vec<u8>,
    /// Grid cell in `[0, location_count)`.
    pub location: u32,
    /// Committed goal: 0 for none, else a 1-based goal index.
    pub commitment: u32,
    /// Threat level in `[0, threat_count)`.
    pub threat: u32,
    /// Navigation mode: 0 normal, 1 agile.
    pub nav_mode: u32,
}

impl MissionState {
    /// The all-minimal state of a layout: healthy, out of range, no
    /// priorities, cell 0, uncommitted, no threat, normal mode.
    pub fn minimal(layout: &StateLayout) -> MissionState {
        let k = layout.goal_count() as usize;
        MissionState {
            fault: 1,
            range_flags: vec![false; k],
            goal_priorities: vec![0; k],
            location: 0,
            commitment: 0,
            threat: 0,
            nav_mode: 0,
        }
    }

    /// Parse a state from the flat field order `(f, r_1..r_k, g_1..g_k,
    /// l, c, t, m)` used in trajectory logs and reports.
    pub fn from_flat(fields: &[u32], layout: &StateLayout) -> Result<MissionState> {
        let k = layout.goal_count() as usize;
        let expect = 2 * k + 5;
        if fields.len() != expect {
            return Err(Error::contract(format!(
                "flat state needs {expect} fields for {k} goals, got {}",
                fields.len()
            )));
        }
        let s = MissionState {
            fault: fields[0],
            range_flags: (0..k).map(|j| fields[1 + j] != 0).collect(),
            goal_priorities: (0..k).map(|j| fields[1 + k + j] as u8).collect(),
            location: fields[1 + 2 * k],
            commitment: fields[2 + 2 * k],
            threat: fields[3 + 2 * k],
            nav_mode: fields[4 + 2 * k],
        };
        s.validate(layout)?;
        Ok(s)
    }

    /// Check every field against its layout bound; errors name the field.
    pub fn validate(&self, layout: &StateLayout) -> Result<()> {
        let k = layout.goal_count() as usize;
        if self.fault < 1 || self.fault > layout.fault_count() {
            return Err(Error::bounds(format!(
                "fault: {} outside [1, {}]",
                self.fault,
                layout.fault_count()
            )));
        }
        if self.range_flags.len() != k {
            return Err(Error::bounds(format!(
                "range_flags: expected length {k}, got {}",
                self.range_flags.len()
            )));
        }
        if self.goal_priorities.len() != k {
            return Err(Error::bounds(format!(
                "goal_priorities: expected length {k}, got {}",
                self.goal_priorities.len()
            )));
        }
        for (j, &g) in self.goal_priorities.iter().enumerate() {
            if g as u32 >= PRIORITY_LEVELS {
                return Err(Error::bounds(format!(
                    "goal_priorities[{j}]: {g} outside [0, 2]"
                )));
            }
        }
        if self.location >= layout.location_count() {
            return Err(Error::bounds(format!(
                "location: {} outside [0, {})",
                self.location,
                layout.location_count()
            )));
        }
        if self.commitment > layout.goal_count() {
            return Err(Error::bounds(format!(
                "commitment: {} outside [0, {}]",
                self.commitment,
                layout.goal_count()
            )));
        }
        if self.threat >= layout.threat_count() {
            return Err(Error::bounds(format!(
                "threat: {} outside [0, {})",
                self.threat,
                layout.threat_count()
            )));
        }
        if self.nav_mode >= layout.mode_count() {
            return Err(Error::bounds(format!(
                "nav_mode: {} outside [0, {})",
                self.nav_mode,
                layout.mode_count()
            )));
        }
        Ok(())
    }

    pub(crate) fn write_digits(&self, layout: &StateLayout, out: &mut [u32]) {
        let k = layout.goal_count() as usize;
        out[layout.fault_pos()] = self.fault - 1;
        for j in 0..k {
            out[layout.range_pos(j)] = self.range_flags[j] as u32;
            out[layout.priority_pos(j)] = self.goal_priorities[j] as u32;
        }
        out[layout.location_pos()] = self.location;
        out[layout.commitment_pos()] = self.commitment;
        out[layout.threat_pos()] = self.threat;
        out[layout.mode_pos()] = self.nav_mode;
    }

    pub(crate) fn from_digits(layout: &StateLayout, digits: &[u32]) -> MissionState {
        let k = layout.goal_count() as usize;
        MissionState {
            fault: digits[layout.fault_pos()] + 1,
            range_flags: (0..k).map(|j| digits[layout.range_pos(j)] != 0).collect(),
            goal_priorities: (0..k)
                .map(|j| digits[layout.priority_pos(j)] as u8)
                .collect(),
            location: digits[layout.location_pos()],
            commitment: digits[layout.commitment_pos()],
            threat: digits[layout.threat_pos()],
            nav_mode: digits[layout.mode_pos()],
        }
    }
}

/// Exact state count of a layout (closed form, `u128`).
pub fn state_count(layout: &StateLayout) -> u128 {
    layout.state_count()
}

/// Mixed-radix index of a valid state.
pub fn encode_state(state: &MissionState, layout: &StateLayout) -> Result<StateIndex> {
    state.validate(layout)?;
    let mut digits = vec![0u32; layout.digit_count()];
    state.write_digits(layout, &mut digits);
    Ok(layout.index_of_digits(&digits))
}

/// Inverse of [`encode_state`].
pub fn decode_state(idx: StateIndex, layout: &StateLayout) -> Result<MissionState> {
    let n = layout.dense_count()?;
    if idx >= n {
        return Err(Error::bounds(format!(
            "state index {idx} outside [0, {n})"
        )));
    }
    let mut digits = vec![0u32; layout.digit_count()];
    layout.digits_of_index(idx, &mut digits);
    Ok(MissionState::from_digits(layout, &digits))
}

/// Iterator over every `(index, state)` pair in index order.
pub struct StateIter<'a> {
    layout: &'a StateLayout,
    digits: Vec<u32>,
    next: usize,
    count: usize,
}

impl<'a> Iterator for StateIter<'a> {
    type Item = (StateIndex, MissionState);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.count {
            return None;
        }
        let idx = self.next;
        let state = MissionState::from_digits(self.layout, &self.digits);
        // Odometer increment over the radix vector.
        for pos in (0..self.digits.len()).rev() {
            self.digits[pos] += 1;
            if self.digits[pos] < self.layout.radices()[pos] {
                break;
            }
            self.digits[pos] = 0;
        }
        self.next += 1;
        Some((idx, state))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.count - self.next;
        (rem, Some(rem))
    }
}

impl ExactSizeIterator for StateIter<'_> {}

/// Stream every state exactly once in index order. Errors when the state
/// count exceeds the enumeration cap.
pub fn enumerate_states(layout: &StateLayout) -> Result<StateIter<'_>> {
    let count = layout.dense_count()?;
    Ok(StateIter {
        layout,
        digits: vec![0u32; layout.digit_count()],
        next: 0,
        count,
    })
}
