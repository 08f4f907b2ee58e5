//! Newline-delimited JSON protocol for external policy servers.
//!
//! Request: `{"type":"sample","statement":..,"state":..,"k":8,"temperatures":[..]}`
//! Response: `{"tactics":[{"text":"..","token_logprobs":[-0.1,-0.3]}]}`
//!
//! One request, one response, in order, over either a TCP stream or the
//! standard input/output of a child process.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{dedup_tactics, Policy, PolicyError, SamplingPlan, SearchRng};
use crate::model::{ProofState, Statement, Tactic};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyWireRequest {
    #[serde(rename = "type")]
    pub kind: String,
    pub statement: String,
    pub state: String,
    pub k: usize,
    pub temperatures: Vec<f64>,
}

impl PolicyWireRequest {
    pub fn sample(statement: &Statement, state: &ProofState, plan: &SamplingPlan) -> Self {
        PolicyWireRequest {
            kind: "sample".to_string(),
            statement: statement.goal_state.text().to_string(),
            state: state.text().to_string(),
            k: plan.total_k,
            temperatures: plan.temperatures(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTactic {
    pub text: String,
    pub token_logprobs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyWireResponse {
    pub tactics: Vec<WireTactic>,
}

impl PolicyWireResponse {
    pub fn into_tactics(self) -> Vec<Tactic> {
        self.tactics
            .into_iter()
            .map(|t| Tactic {
                text: t.text,
                token_logprobs: t.token_logprobs,
            })
            .collect()
    }
}

pub fn parse_wire_request(line: &str) -> Result<PolicyWireRequest, PolicyError> {
    let req: PolicyWireRequest =
        serde_json::from_str(line.trim_end()).map_err(|e| PolicyError::Malformed(e.to_string()))?;
    if req.kind != "sample" {
        return Err(PolicyError::Malformed(format!(
            "unknown request type `{}`",
            req.kind
        )));
    }
    if req.temperatures.len() != req.k {
        return Err(PolicyError::Malformed(
            "one temperature per sample expected".into(),
        ));
    }
    Ok(req)
}

/// Parses and validates one response line against a request for `k` tactics.
pub fn parse_wire_response(line: &str, k: usize) -> Result<PolicyWireResponse, PolicyError> {
    let resp: PolicyWireResponse =
        serde_json::from_str(line.trim_end()).map_err(|e| PolicyError::Malformed(e.to_string()))?;
    if resp.tactics.len() > k {
        return Err(PolicyError::Malformed(format!(
            "{} tactics returned for k = {k}",
            resp.tactics.len()
        )));
    }
    for t in &resp.tactics {
        if t.text.is_empty() {
            return Err(PolicyError::Malformed("empty tactic text".into()));
        }
        if t.token_logprobs.is_empty() {
            return Err(PolicyError::Malformed(format!(
                "tactic `{}` has no token scores",
                t.text
            )));
        }
        if let Some(v) = t
            .token_logprobs
            .iter()
            .find(|v| !(v.is_finite() && **v <= 0.0))
        {
            return Err(PolicyError::Malformed(format!(
                "tactic `{}` has log-probability {v} > 0",
                t.text
            )));
        }
    }
    Ok(resp)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "snake_case")]
pub enum Endpoint {
    /// `host:port` of a TCP server; one connection per request.
    Tcp { address: String },
    /// Program and arguments of a child process speaking the protocol on
    /// its standard input and output.
    Command { argv: Vec<String> },
}

/// Sends one request over a fresh TCP connection and returns the validated
/// response.
pub fn external_policy_call(
    endpoint: &Endpoint,
    request: &PolicyWireRequest,
    timeout: Duration,
) -> Result<PolicyWireResponse, PolicyError> {
    match endpoint {
        Endpoint::Tcp { address } => tcp_call(address, request, timeout),
        Endpoint::Command { .. } => {
            let conn = ChildConnection::spawn(endpoint)?;
            let mut conn = Some(conn);
            child_call(&mut conn, endpoint, request, timeout)
        }
    }
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(
        e.kind(),
        std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut
    )
}

fn tcp_call(
    address: &str,
    request: &PolicyWireRequest,
    timeout: Duration,
) -> Result<PolicyWireResponse, PolicyError> {
    let deadline = Instant::now() + timeout;
    let secs = timeout.as_secs_f64();
    let addr = address
        .to_socket_addrs()
        .map_err(|e| PolicyError::Connection(e.to_string()))?
        .next()
        .ok_or_else(|| PolicyError::Connection(format!("`{address}` resolves to nothing")))?;
    let stream = TcpStream::connect_timeout(&addr, timeout).map_err(|e| {
        if is_timeout(&e) {
            PolicyError::Timeout(secs)
        } else {
            PolicyError::Connection(e.to_string())
        }
    })?;
    let remaining = deadline
        .checked_duration_since(Instant::now())
        .filter(|d| !d.is_zero())
        .ok_or(PolicyError::Timeout(secs))?;
    stream
        .set_read_timeout(Some(remaining))
        .and_then(|_| stream.set_write_timeout(Some(remaining)))
        .map_err(|e| PolicyError::Connection(e.to_string()))?;
    let mut line = serde_json::to_string(request).expect("request serializes");
    line.push('\n');
    (&stream)
        .write_all(line.as_bytes())
        .map_err(|e| PolicyError::Connection(e.to_string()))?;
    let mut reader = BufReader::new(&stream);
    let mut response = String::new();
    match reader.read_line(&mut response) {
        Ok(0) => Err(PolicyError::Connection(
            "server closed the connection".into(),
        )),
        Ok(_) => parse_wire_response(&response, request.k),
        Err(e) if is_timeout(&e) => Err(PolicyError::Timeout(secs)),
        Err(e) => Err(PolicyError::Connection(e.to_string())),
    }
}

struct ChildConnection {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
}

impl ChildConnection {
    fn spawn(endpoint: &Endpoint) -> Result<Self, PolicyError> {
        let Endpoint::Command { argv } = endpoint else {
            unreachable!("child connections are only built for command endpoints")
        };
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| PolicyError::Connection("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| PolicyError::Connection(format!("spawning `{program}`: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                let res = reader.read_line(&mut line).map(|_| line);
                let stop = matches!(&res, Ok(l) if l.is_empty()) || res.is_err();
                if tx.send(res).is_err() || stop {
                    break;
                }
            }
        });
        Ok(ChildConnection {
            child,
            stdin,
            lines: rx,
        })
    }
}

impl Drop for ChildConnection {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

fn child_call(
    slot: &mut Option<ChildConnection>,
    endpoint: &Endpoint,
    request: &PolicyWireRequest,
    timeout: Duration,
) -> Result<PolicyWireResponse, PolicyError> {
    if slot.is_none() {
        *slot = Some(ChildConnection::spawn(endpoint)?);
    }
    let conn = slot.as_mut().expect("connection present");
    let mut line = serde_json::to_string(request).expect("request serializes");
    line.push('\n');
    let sent = conn
        .stdin
        .write_all(line.as_bytes())
        .and_then(|_| conn.stdin.flush());
    if let Err(e) = sent {
        *slot = None;
        return Err(PolicyError::Connection(e.to_string()));
    }
    let outcome = match conn.lines.recv_timeout(timeout) {
        Ok(Ok(l)) if l.is_empty() => Err(PolicyError::Connection("policy process exited".into())),
        Ok(Ok(l)) => return parse_wire_response(&l, request.k),
        Ok(Err(e)) => Err(PolicyError::Connection(e.to_string())),
        Err(RecvTimeoutError::Timeout) => Err(PolicyError::Timeout(timeout.as_secs_f64())),
        Err(RecvTimeoutError::Disconnected) => {
            Err(PolicyError::Connection("policy process exited".into()))
        }
    };
    // The stream is out of step with our requests; restart on next use.
    *slot = None;
    outcome
}

/// A [`Policy`] backed by an external server.
pub struct ExternalPolicy {
    endpoint: Endpoint,
    timeout: Duration,
    child: Mutex<Option<ChildConnection>>,
}

impl ExternalPolicy {
    pub fn new(endpoint: Endpoint, timeout: Duration) -> Self {
        ExternalPolicy {
            endpoint,
            timeout,
            child: Mutex::new(None),
        }
    }

    pub fn call(&self, request: &PolicyWireRequest) -> Result<PolicyWireResponse, PolicyError> {
        match &self.endpoint {
            Endpoint::Tcp { address } => tcp_call(address, request, self.timeout),
            Endpoint::Command { .. } => {
                let mut slot = self.child.lock().unwrap_or_else(|p| p.into_inner());
                child_call(&mut slot, &self.endpoint, request, self.timeout)
            }
        }
    }
}

impl Policy for ExternalPolicy {
    fn sample_tactics(
        &self,
        statement: &Statement,
        state: &ProofState,
        _candidates: &[String],
        plan: &SamplingPlan,
        _rng: &mut SearchRng,
    ) -> Result<Vec<Tactic>, PolicyError> {
        plan.validate()?;
        let request = PolicyWireRequest::sample(statement, state, plan);
        Ok(dedup_tactics(self.call(&request)?.into_tactics()))
    }
}
