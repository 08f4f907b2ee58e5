//! Training records and their prompt templates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critic::{
    encode_distance, parse_distance_tokens, serialize_distance_tokens, DistanceError, PrmLabel,
};

const POLICY_HEAD: &str = "Given the Lean 4 tactic state, suggest a next tactic.\nTactic state:\n";
const POLICY_TAIL: &str = "\n\nNext tactic:\n";
const DISTANCE_HEAD: &str = "Here is a Lean4 state:\n";
const DISTANCE_TAIL: &str =
    "\n\n----------------\nPlease tell me how many more tactic steps are needed to finish this state.\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    PolicyStep,
    DistanceLabel,
    PrmLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingRecord {
    pub kind: RecordKind,
    pub statement_id: String,
    pub prompt: String,
    pub target: String,
}

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("record line {line}: {source}")]
    Json {
        line: usize,
        source: serde_json::Error,
    },
    #[error("record line {line}: prompt does not follow the {kind:?} template")]
    Template { line: usize, kind: RecordKind },
    #[error("record line {line}: {source}")]
    Distance { line: usize, source: DistanceError },
    #[error("record line {line}: PRM target must be +1 or -1")]
    PrmTarget { line: usize },
}

pub fn policy_prompt(state: &str) -> String {
    format!("{POLICY_HEAD}{state}{POLICY_TAIL}")
}

pub fn distance_prompt(state: &str) -> String {
    format!("{DISTANCE_HEAD}{state}{DISTANCE_TAIL}")
}

/// The state embedded in a policy prompt.
pub fn parse_policy_prompt(prompt: &str) -> Option<&str> {
    prompt.strip_prefix(POLICY_HEAD)?.strip_suffix(POLICY_TAIL)
}

/// The state embedded in a distance-critic prompt.
pub fn parse_distance_prompt(prompt: &str) -> Option<&str> {
    prompt
        .strip_prefix(DISTANCE_HEAD)?
        .strip_suffix(DISTANCE_TAIL)
}

pub fn policy_record(statement_id: &str, state: &str, tactic: &str) -> TrainingRecord {
    TrainingRecord {
        kind: RecordKind::PolicyStep,
        statement_id: statement_id.to_string(),
        prompt: policy_prompt(state),
        target: tactic.to_string(),
    }
}

pub fn distance_record(
    statement_id: &str,
    state: &str,
    remaining: u64,
    levels: u32,
) -> Result<TrainingRecord, DistanceError> {
    let path = encode_distance(remaining, levels)?;
    Ok(TrainingRecord {
        kind: RecordKind::DistanceLabel,
        statement_id: statement_id.to_string(),
        prompt: distance_prompt(state),
        target: serialize_distance_tokens(&path),
    })
}

pub fn prm_record(label: &PrmLabel) -> TrainingRecord {
    TrainingRecord {
        kind: RecordKind::PrmLabel,
        statement_id: label.statement_id.clone(),
        prompt: label.state_text.clone(),
        target: if label.label > 0 { "+1" } else { "-1" }.to_string(),
    }
}

pub fn records_to_jsonl(records: &[TrainingRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

/// Parses one JSON line and checks it against the template of its kind.
pub fn parse_record_line(text: &str, line: usize) -> Result<TrainingRecord, RecordError> {
    let rec: TrainingRecord =
        serde_json::from_str(text).map_err(|source| RecordError::Json { line, source })?;
    match rec.kind {
        RecordKind::PolicyStep => {
            if parse_policy_prompt(&rec.prompt).is_none() {
                return Err(RecordError::Template {
                    line,
                    kind: rec.kind,
                });
            }
        }
        RecordKind::DistanceLabel => {
            if parse_distance_prompt(&rec.prompt).is_none() {
                return Err(RecordError::Template {
                    line,
                    kind: rec.kind,
                });
            }
            parse_distance_tokens(&rec.target)
                .map_err(|source| RecordError::Distance { line, source })?;
        }
        RecordKind::PrmLabel => {
            if rec.target != "+1" && rec.target != "-1" {
                return Err(RecordError::PrmTarget { line });
            }
        }
    }
    Ok(rec)
}

pub fn parse_records_jsonl(text: &str) -> Result<Vec<TrainingRecord>, RecordError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_record_line(l, i + 1))
        .collect()
}
