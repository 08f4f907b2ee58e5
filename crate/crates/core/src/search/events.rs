//! Line-delimited search event log used for replay and determinism checks.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::model::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Select,
    Expand,
    Insert,
    Dedup,
    Reject,
    Prove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEvent {
    pub step: usize,
    pub event: EventKind,
    pub node_id: NodeId,
    pub payload: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    events: Vec<SearchEvent>,
}

impl EventLog {
    pub fn push(&mut self, step: usize, event: EventKind, node_id: NodeId, payload: Value) {
        self.events.push(SearchEvent {
            step,
            event,
            node_id,
            payload,
        });
    }

    pub fn events(&self) -> &[SearchEvent] {
        &self.events
    }

    pub fn of_kind(&self, kind: EventKind) -> impl Iterator<Item = &SearchEvent> {
        self.events.iter().filter(move |e| e.event == kind)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }

    pub fn parse_jsonl(text: &str) -> Result<Self, serde_json::Error> {
        let events = text
            .lines()
            .filter(|l| !l.is_empty())
            .map(serde_json::from_str)
            .collect::<Result<_, _>>()?;
        Ok(EventLog { events })
    }
}
