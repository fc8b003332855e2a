//! On-disk formats: the policy file, residual-history CSV, agreement
//! chart CSVs and content hashing for run manifests.
//!
//! The policy file is line-oriented text so two runs can be diffed
//! byte-for-byte on the action array:
//!
//! ```text
//! mission-policy v1
//! layout <fault> <goals> <locations> <threats> <modes>
//! actions <count>
//! <one 1-based action id per state, in state-index order>
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::solver::Policy;
use crate::state::StateLayout;

pub const POLICY_FORMAT_HEADER: &str = "mission-policy v1";

/// Serialize a policy with its layout header.
pub fn policy_to_string(policy: &Policy, layout: &StateLayout, num_actions: usize) -> String {
    let mut out = String::with_capacity(policy.actions.len() * 3 + 64);
    out.push_str(POLICY_FORMAT_HEADER);
    out.push('\n');
    let _ = writeln!(
        out,
        "layout {} {} {} {} {}",
        layout.fault_count(),
        layout.goal_count(),
        layout.location_count(),
        layout.threat_count(),
        layout.mode_count()
    );
    let _ = writeln!(out, "actions {num_actions}");
    for &a in &policy.actions {
        let _ = writeln!(out, "{}", a + 1);
    }
    out
}

/// Parse a policy file, returning the policy, its layout and the action
/// count recorded in the header.
pub fn policy_from_str(text: &str) -> Result<(Policy, StateLayout, usize)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::contract("empty policy file"))?;
    if header.trim() != POLICY_FORMAT_HEADER {
        return Err(Error::contract(format!(
            "unrecognized policy header {header:?}"
        )));
    }
    let layout_line = lines
        .next()
        .ok_or_else(|| Error::contract("policy file missing layout line"))?;
    let nums: Vec<u32> = layout_line
        .strip_prefix("layout ")
        .ok_or_else(|| Error::contract("second line must start with 'layout '"))?
        .split_whitespace()
        .map(|t| t.parse::<u32>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::contract(format!("bad layout digits: {e}")))?;
    if nums.len() != 5 {
        return Err(Error::contract(format!(
            "layout line needs 5 digits, got {}",
            nums.len()
        )));
    }
    let layout = StateLayout::new(nums[0], nums[1], nums[2], nums[3], nums[4])?;
    let actions_line = lines
        .next()
        .ok_or_else(|| Error::contract("policy file missing actions line"))?;
    let num_actions: usize = actions_line
        .strip_prefix("actions ")
        .ok_or_else(|| Error::contract("third line must start with 'actions '"))?
        .trim()
        .parse()
        .map_err(|e| Error::contract(format!("bad action count: {e}")))?;

    let expected = layout.dense_count()?;
    let mut actions = Vec::with_capacity(expected);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let id: u32 = line
            .trim()
            .parse()
            .map_err(|e| Error::contract(format!("line {}: bad action id: {e}", i + 4)))?;
        if id < 1 || id as usize > num_actions {
            return Err(Error::contract(format!(
                "line {}: action id {id} outside [1, {num_actions}]",
                i + 4
            )));
        }
        actions.push((id - 1) as u16);
    }
    if actions.len() != expected {
        return Err(Error::contract(format!(
            "policy has {} entries, layout needs {expected}",
            actions.len()
        )));
    }
    Ok((Policy { actions }, layout, num_actions))
}

/// Residual history as two-column CSV: `sweep,residual`.
pub fn residual_csv(residual_history: &[f64]) -> String {
    let mut out = String::from("sweep,residual\n");
    for (i, r) in residual_history.iter().enumerate() {
        let _ = writeln!(out, "{},{r:e}", i + 1);
    }
    out
}

/// Two small CSVs mirroring the agreement bar charts: absolute counts
/// and percentages of matching/mismatching states.
pub fn agreement_csvs(report: &crate::verify::PolicyComparisonReport) -> (String, String) {
    let counts = format!(
        "category,count\nmatching,{}\nmismatching,{}\n",
        report.matching, report.mismatching
    );
    let percent = format!(
        "category,percent\nmatching,{:.6}\nmismatching,{:.6}\n",
        report.match_percent,
        100.0 - report.match_percent
    );
    (counts, percent)
}

/// FNV-1a 64-bit content hash, used for manifest entries.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_roundtrip() {
        let layout = StateLayout::new(2, 1, 2, 1, 1).unwrap();
        let n = layout.dense_count().unwrap();
        let policy = Policy {
            actions: (0..n).map(|i| (i % 6) as u16).collect(),
        };
        let text = policy_to_string(&policy, &layout, 6);
        let (back, back_layout, na) = policy_from_str(&text).unwrap();
        assert_eq!(back.actions, policy.actions);
        assert_eq!(back_layout, layout);
        assert_eq!(na, 6);
    }

    #[test]
    fn truncated_policy_is_rejected() {
        let layout = StateLayout::new(2, 1, 2, 1, 1).unwrap();
        let n = layout.dense_count().unwrap();
        let policy = Policy {
            actions: vec![0; n],
        };
        let text = policy_to_string(&policy, &layout, 6);
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(policy_from_str(&truncated).is_err());
    }

    #[test]
    fn alien_header_is_rejected() {
        assert!(policy_from_str("something else\n").is_err());
    }

    #[test]
    fn residual_csv_shape() {
        let csv = residual_csv(&[1.0, 0.5, 0.25]);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.starts_with("sweep,residual"));
        assert!(csv.contains("3,2.5e-1"));
    }

    #[test]
    fn fnv_is_stable() {
        // Reference value of FNV-1a 64 for "a".
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_ne!(fnv1a64(b"mission"), fnv1a64(b"mission "));
    }
}
