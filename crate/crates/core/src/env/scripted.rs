//! Transition-table environment loaded from (or serialized to) TSV.
//!
//! ```text
//! #statement<TAB>id<TAB>goal_state
//! src_state<TAB>tactic<TAB>dst_state      (dst `QED` completes the proof)
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use thiserror::Error;

use super::{ApplyResult, EnvError, Environment, TimeoutPolicy};
use crate::escape::{escape_field, unescape_field};
use crate::model::{ProofState, Statement, QED};

const HEADER: &str = "#statement";

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {message}")]
pub struct ScriptedParseError {
    pub line: usize,
    pub message: String,
}

impl ScriptedParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ScriptedParseError {
            line,
            message: message.into(),
        }
    }
}

/// Deterministic transition relation over state texts. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ScriptedEnvironment {
    statements: Vec<Statement>,
    transitions: BTreeMap<String, BTreeMap<String, String>>,
}

impl ScriptedEnvironment {
    /// Builds an environment, checking the same invariants as the parser.
    pub fn new(
        statements: Vec<Statement>,
        rows: impl IntoIterator<Item = (String, String, String)>,
    ) -> Result<Self, EnvError> {
        let mut env = ScriptedEnvironment {
            statements,
            transitions: BTreeMap::new(),
        };
        for (src, tactic, dst) in rows {
            env.insert_row(src, tactic, dst).map_err(EnvError::Config)?;
        }
        env.check_statements().map_err(EnvError::Config)?;
        Ok(env)
    }

    fn insert_row(&mut self, src: String, tactic: String, dst: String) -> Result<(), String> {
        if src.is_empty() || tactic.is_empty() || dst.is_empty() {
            return Err("empty field".into());
        }
        if src == QED {
            return Err("the QED sentinel cannot be a source state".into());
        }
        let out = self.transitions.entry(src.clone()).or_default();
        if out.contains_key(&tactic) {
            return Err(format!("duplicate transition for ({src:?}, {tactic:?})"));
        }
        out.insert(tactic, dst);
        Ok(())
    }

    fn check_statements(&self) -> Result<(), String> {
        let mut seen = HashSet::new();
        for st in &self.statements {
            if !seen.insert(st.id.as_str()) {
                return Err(format!("duplicate statement id `{}`", st.id));
            }
            if !st.goal_state.is_qed() && !self.transitions.contains_key(st.goal_state.text()) {
                return Err(format!(
                    "goal of statement `{}` is neither a source state nor terminal",
                    st.id
                ));
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self, ScriptedParseError> {
        let mut env = ScriptedEnvironment::default();
        let mut ids = HashSet::new();
        let mut header_lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.strip_suffix('\r').unwrap_or(raw);
            if raw.is_empty() {
                continue;
            }
            let fields: Vec<&str> = raw.split('\t').collect();
            let unescape = |s: &str| {
                unescape_field(s).map_err(|e| ScriptedParseError::new(line, e.to_string()))
            };
            if fields[0] == HEADER {
                if fields.len() != 3 {
                    return Err(ScriptedParseError::new(
                        line,
                        "statement header needs an id and a goal state",
                    ));
                }
                let id = unescape(fields[1])?;
                if id.is_empty() {
                    return Err(ScriptedParseError::new(line, "empty statement id"));
                }
                if !ids.insert(id.clone()) {
                    return Err(ScriptedParseError::new(
                        line,
                        format!("duplicate statement id `{id}`"),
                    ));
                }
                let goal = ProofState::new(unescape(fields[2])?);
                let statement = Statement::new(id, goal, "scripted")
                    .map_err(|e| ScriptedParseError::new(line, e.to_string()))?;
                env.statements.push(statement);
                header_lines.push(line);
                continue;
            }
            if fields.len() != 3 {
                return Err(ScriptedParseError::new(
                    line,
                    format!("expected 3 tab-separated fields, found {}", fields.len()),
                ));
            }
            let src = unescape(fields[0])?;
            let tactic = unescape(fields[1])?;
            let dst = unescape(fields[2])?;
            env.insert_row(src, tactic, dst)
                .map_err(|m| ScriptedParseError::new(line, m))?;
        }
        if env.statements.is_empty() {
            return Err(ScriptedParseError::new(0, "missing statement header"));
        }
        for (st, &line) in env.statements.iter().zip(&header_lines) {
            if !st.goal_state.is_qed() && !env.transitions.contains_key(st.goal_state.text()) {
                return Err(ScriptedParseError::new(
                    line,
                    format!("goal of `{}` has no outgoing transitions", st.id),
                ));
            }
        }
        Ok(env)
    }

    /// Headers in statement order, then rows sorted by (source, tactic).
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for st in &self.statements {
            out.push_str(&format!(
                "{HEADER}\t{}\t{}\n",
                escape_field(&st.id),
                escape_field(st.goal_state.text())
            ));
        }
        for (src, tactic, dst) in self.rows() {
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                escape_field(src),
                escape_field(tactic),
                escape_field(dst)
            ));
        }
        out
    }

    pub fn statements(&self) -> &[Statement] {
        &self.statements
    }

    pub fn statement(&self, id: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.id == id)
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &str, &str)> {
        self.transitions.iter().flat_map(|(src, out)| {
            out.iter()
                .map(move |(t, d)| (src.as_str(), t.as_str(), d.as_str()))
        })
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.values().map(BTreeMap::len).sum()
    }

    /// Outgoing (tactic, destination) pairs of a state in tactic order.
    pub fn outgoing(&self, state: &str) -> impl Iterator<Item = (&str, &str)> {
        self.transitions
            .get(state)
            .into_iter()
            .flat_map(|m| m.iter().map(|(t, d)| (t.as_str(), d.as_str())))
    }

    pub fn lookup(&self, state: &str, tactic: &str) -> Option<&str> {
        self.transitions.get(state)?.get(tactic).map(String::as_str)
    }

    /// Every state text that appears as a source or destination, QED excluded.
    pub fn states(&self) -> Vec<&str> {
        let mut all: Vec<&str> = self
            .transitions
            .iter()
            .flat_map(|(src, out)| {
                std::iter::once(src.as_str()).chain(out.values().map(String::as_str))
            })
            .filter(|s| *s != QED)
            .collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn with_statements(&self, statements: Vec<Statement>) -> Result<Self, EnvError> {
        let env = ScriptedEnvironment {
            statements,
            transitions: self.transitions.clone(),
        };
        env.check_statements().map_err(EnvError::Config)?;
        Ok(env)
    }
}

impl Environment for ScriptedEnvironment {
    fn apply_tactic(
        &self,
        state: &ProofState,
        tactic: &str,
        _timeout: &TimeoutPolicy,
    ) -> Result<ApplyResult, EnvError> {
        Ok(match self.lookup(state.text(), tactic) {
            None => ApplyResult::Invalid,
            Some(QED) => ApplyResult::Proved,
            Some(dst) => ApplyResult::NewState(ProofState::new(dst)),
        })
    }

    fn candidate_tactics(&self, state: &ProofState) -> Vec<String> {
        self.outgoing(state.text())
            .map(|(t, _)| t.to_string())
            .collect()
    }
}

pub fn load_scripted(path: &Path) -> Result<ScriptedEnvironment, EnvError> {
    let text = fs::read_to_string(path)?;
    ScriptedEnvironment::parse(&text)
        .map_err(|e| EnvError::Config(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = "#statement\tthm1\t⊢ P\n\
                         ⊢ P\texact h\tQED\n\
                         ⊢ P\tintro x\tx : α\\n⊢ P\n\
                         x : α\\n⊢ P\tsimp\tQED\n";

    #[test]
    fn loads_three_rows() {
        let env = ScriptedEnvironment::parse(SMALL).unwrap();
        assert_eq!(env.transition_count(), 3);
        assert_eq!(env.statements().len(), 1);
        assert_eq!(env.lookup("x : α\n⊢ P", "simp"), Some(QED));
    }

    #[test]
    fn apply_lookup() {
        let env = ScriptedEnvironment::parse(SMALL).unwrap();
        let t = TimeoutPolicy::default();
        let p = ProofState::new("⊢ P");
        assert_eq!(
            env.apply_tactic(&p, "exact h", &t).unwrap(),
            ApplyResult::Proved
        );
        assert_eq!(
            env.apply_tactic(&p, "ring", &t).unwrap(),
            ApplyResult::Invalid
        );
        assert_eq!(
            env.apply_tactic(&p, "intro x", &t).unwrap(),
            ApplyResult::NewState(ProofState::new("x : α\n⊢ P"))
        );
        assert_eq!(env.candidate_tactics(&p), vec!["exact h", "intro x"]);
    }

    #[test]
    fn duplicate_row_reports_its_line() {
        let text = format!("{SMALL}⊢ P\texact h\tQED\n");
        let err = ScriptedEnvironment::parse(&text).unwrap_err();
        assert_eq!(err.line, 5);
    }

    #[test]
    fn malformed_row_reports_its_line() {
        let err = ScriptedEnvironment::parse("#statement\ta\t⊢ P\n⊢ P\tonly two\n").unwrap_err();
        assert_eq!(err.line, 2);
        let err = ScriptedEnvironment::parse("#statement\ta\t⊢ P\n⊢ P\tt\tbad\\q\n").unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn missing_header_is_an_error() {
        let err = ScriptedEnvironment::parse("⊢ P\texact h\tQED\n").unwrap_err();
        assert!(err.message.contains("missing statement header"));
    }

    #[test]
    fn goal_without_transitions_is_rejected() {
        let err = ScriptedEnvironment::parse("#statement\ta\t⊢ Q\n⊢ P\tt\tQED\n").unwrap_err();
        assert_eq!(err.line, 1);
    }

    #[test]
    fn tsv_round_trip() {
        let env = ScriptedEnvironment::parse(SMALL).unwrap();
        let again = ScriptedEnvironment::parse(&env.to_tsv()).unwrap();
        assert_eq!(env, again);
    }
}
