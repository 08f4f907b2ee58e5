//! Coarse-to-fine encoding of remaining-step counts as paths in a balanced
//! binary tree.
//!
//! With `L` levels the leaves cover `1..=2^L`. Entry `k` (1-based) of a path
//! is the bucket index at denominator `2^k`, so `n = 6` with three levels is
//! `(2, 3, 6)` and reads `2/2 -> 3/4 -> 6/8`.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Trajectory;

pub const DEFAULT_LEVELS: u32 = 6;
const MAX_LEVELS: u32 = 32;
const BOX_OPEN: &str = "<num_box>";
const BOX_CLOSE: &str = "</num_box>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DistanceError {
    #[error("distance must be at least 1, got {0}")]
    Domain(u64),
    #[error("level count must be in 1..={MAX_LEVELS}, got {0}")]
    Levels(u32),
    #[error("entry {level} = {value} is outside 1..={bound}")]
    OutOfRange {
        level: usize,
        value: u64,
        bound: u64,
    },
    #[error("entry {level} = {value} does not refine its parent bucket {parent}")]
    Refinement {
        level: usize,
        value: u64,
        parent: u64,
    },
    #[error("paths have different level counts ({0} vs {1})")]
    LevelMismatch(usize, usize),
    #[error("token parse error at byte {at}: {message}")]
    Token { at: usize, message: String },
}

/// A validated root-to-leaf path `(t_1, ..., t_L)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u64>", into = "Vec<u64>")]
pub struct DistancePath(Vec<u64>);

impl DistancePath {
    /// Validates both the range and refinement invariants.
    pub fn new(entries: Vec<u64>) -> Result<Self, DistanceError> {
        if entries.is_empty() || entries.len() > MAX_LEVELS as usize {
            return Err(DistanceError::Levels(entries.len() as u32));
        }
        for (i, &value) in entries.iter().enumerate() {
            let bound = 1u64 << (i + 1);
            if value < 1 || value > bound {
                return Err(DistanceError::OutOfRange {
                    level: i + 1,
                    value,
                    bound,
                });
            }
            if i > 0 {
                let parent = entries[i - 1];
                if value != 2 * parent - 1 && value != 2 * parent {
                    return Err(DistanceError::Refinement {
                        level: i + 1,
                        value,
                        parent,
                    });
                }
            }
        }
        Ok(DistancePath(entries))
    }

    pub fn entries(&self) -> &[u64] {
        &self.0
    }

    pub fn levels(&self) -> usize {
        self.0.len()
    }

    /// Largest representable distance, the worst path.
    pub fn worst(levels: u32) -> Result<Self, DistanceError> {
        encode_distance(u64::MAX, levels)
    }
}

impl TryFrom<Vec<u64>> for DistancePath {
    type Error = DistanceError;

    fn try_from(entries: Vec<u64>) -> Result<Self, DistanceError> {
        DistancePath::new(entries)
    }
}

impl From<DistancePath> for Vec<u64> {
    fn from(path: DistancePath) -> Self {
        path.0
    }
}

impl fmt::Display for DistancePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u64::to_string).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Encodes `n` (clamped to `2^levels`) as `t_k = ceil(n / 2^(levels - k))`.
pub fn encode_distance(n: u64, levels: u32) -> Result<DistancePath, DistanceError> {
    if n < 1 {
        return Err(DistanceError::Domain(n));
    }
    if levels == 0 || levels > MAX_LEVELS {
        return Err(DistanceError::Levels(levels));
    }
    let n = n.min(1u64 << levels);
    let entries = (1..=levels)
        .map(|k| n.div_ceil(1u64 << (levels - k)))
        .collect();
    Ok(DistancePath(entries))
}

pub fn decode_distance(path: &DistancePath) -> u64 {
    *path.0.last().expect("paths are non-empty")
}

/// Lexicographic comparison; coincides with numeric order of decoded values.
pub fn compare_distance(a: &DistancePath, b: &DistancePath) -> Result<Ordering, DistanceError> {
    if a.levels() != b.levels() {
        return Err(DistanceError::LevelMismatch(a.levels(), b.levels()));
    }
    Ok(a.0.cmp(&b.0))
}

/// `<num_box><|num-t1-of-2|>...<|num-tL-of-2^L|></num_box>`
pub fn serialize_distance_tokens(path: &DistancePath) -> String {
    let mut out = String::from(BOX_OPEN);
    for (i, t) in path.0.iter().enumerate() {
        out.push_str(&format!("<|num-{t}-of-{}|>", 1u64 << (i + 1)));
    }
    out.push_str(BOX_CLOSE);
    out
}

pub fn parse_distance_tokens(text: &str) -> Result<DistancePath, DistanceError> {
    let err = |at: usize, message: &str| DistanceError::Token {
        at,
        message: message.to_string(),
    };
    let body = text
        .strip_prefix(BOX_OPEN)
        .ok_or_else(|| err(0, "missing <num_box>"))?;
    let body = body
        .strip_suffix(BOX_CLOSE)
        .ok_or_else(|| err(text.len(), "missing </num_box>"))?;
    let mut entries = Vec::new();
    let mut rest = body;
    while !rest.is_empty() {
        let at = text.len() - rest.len() - BOX_CLOSE.len();
        let inner = rest
            .strip_prefix("<|num-")
            .ok_or_else(|| err(at, "expected <|num-"))?;
        let end = inner
            .find("|>")
            .ok_or_else(|| err(at, "unterminated token"))?;
        let (t, d) = inner[..end]
            .split_once("-of-")
            .ok_or_else(|| err(at, "expected num-T-of-D"))?;
        let digits = |s: &str| -> Result<u64, DistanceError> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
                return Err(err(at, "non-numeric token field"));
            }
            if s.len() > 1 && s.starts_with('0') {
                return Err(err(at, "leading zero in token field"));
            }
            s.parse().map_err(|_| err(at, "number out of range"))
        };
        let t = digits(t)?;
        let d = digits(d)?;
        let level = entries.len() + 1;
        if level > MAX_LEVELS as usize || d != 1u64 << level {
            return Err(err(at, "denominator out of level order"));
        }
        entries.push(t);
        rest = &inner[end + 2..];
    }
    DistancePath::new(entries)
}

/// Scalar used where a single higher-is-better number is required:
/// `1 - decode(path) / 2^L`.
pub fn distance_value(path: &DistancePath) -> f64 {
    1.0 - decode_distance(path) as f64 / (1u64 << path.levels()) as f64
}

/// Per-state minimum remaining steps observed on proved trajectories.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceTable {
    levels: u32,
    remaining: HashMap<String, u64>,
}

impl DistanceTable {
    pub fn new(levels: u32) -> Self {
        DistanceTable {
            levels,
            remaining: HashMap::new(),
        }
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.remaining.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remaining.is_empty()
    }

    pub fn observe(&mut self, state: &str, remaining: u64) {
        let slot = self.remaining.entry(state.to_string()).or_insert(remaining);
        *slot = (*slot).min(remaining);
    }

    /// Estimated path; unseen states get the worst path.
    pub fn estimate(&self, state: &str) -> DistancePath {
        let n = self.remaining.get(state).copied().unwrap_or(u64::MAX);
        encode_distance(n.max(1), self.levels).expect("table levels validated at construction")
    }

    pub fn raw(&self, state: &str) -> Option<u64> {
        self.remaining.get(state).copied()
    }
}

pub fn fit_distance_critic(
    trajectories: &[Trajectory],
    levels: u32,
) -> Result<DistanceTable, DistanceError> {
    if levels == 0 || levels > MAX_LEVELS {
        return Err(DistanceError::Levels(levels));
    }
    let mut table = DistanceTable::new(levels);
    for traj in trajectories.iter().filter(|t| t.proved) {
        let m = traj.steps.len();
        for (i, step) in traj.steps.iter().enumerate() {
            table.observe(step.state.text(), (m - i) as u64);
        }
    }
    Ok(table)
}
