//! The generation boundary: one provider interface for every agent role
//! (planning, description, expression synthesis, repair, mutation,
//! crossover, verification, summaries), with a deterministic heuristic
//! implementation, a remote chat-completion client, and a record/replay
//! decorator.

pub mod heuristic;
pub mod remote;
pub mod replay;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl;
use crate::evolution::Hypothesis;

pub use heuristic::HeuristicProvider;
pub use remote::RemoteProvider;
pub use replay::{RecordingProvider, ReplayProvider};

/// Summary card of a parent trajectory, embedded in mutation and crossover
/// request context.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentCard {
    pub trajectory_id: String,
    pub hypothesis: Hypothesis,
    pub best_expression: String,
    pub rank_ic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RequestKind {
    /// Propose a hypothesis for exploration direction `direction`.
    Plan {
        direction: usize,
        attempt: usize,
        /// First expressions of already-planned directions, for
        /// complementarity.
        rejected: Vec<String>,
    },
    /// Produce the semantic description of a hypothesis (optionally of a
    /// concrete expression realizing it).
    Describe {
        hypothesis: Hypothesis,
        expression: Option<String>,
    },
    /// Produce the `attempt`-th expression realizing a hypothesis.
    Express {
        hypothesis: Hypothesis,
        attempt: usize,
        rejected: Vec<String>,
    },
    /// Fix an expression that failed parsing or the gate.
    Repair {
        hypothesis: Hypothesis,
        expression: String,
        reasons: Vec<String>,
        attempt: usize,
    },
    /// Locally refine the faulty action of a parent trajectory.
    Mutate {
        hypothesis: Hypothesis,
        expression: String,
        fault: String,
        attempt: usize,
    },
    /// Synthesize a child from ≥ 2 parent cards.
    Crossover {
        parents: Vec<ParentCard>,
        attempt: usize,
    },
    /// Check hypothesis/description/expression alignment.
    Verify {
        hypothesis: Hypothesis,
        description: String,
        expression: String,
    },
    /// Free-text trajectory summary.
    Summarize { card: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRequest {
    pub kind: RequestKind,
    /// Retry budget (≥ 1) for providers that can produce malformed output.
    pub budget: u32,
}

impl ProviderRequest {
    pub fn new(kind: RequestKind) -> Self {
        ProviderRequest { kind, budget: 3 }
    }

    /// Stable content hash, used for replay keys and heuristic seeding.
    pub fn fingerprint(&self) -> String {
        let json = serde_json::to_string(self).expect("request serializes");
        let mut h = Sha256::new();
        h.update(json.as_bytes());
        hex(&h.finalize())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail { component: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum ResponsePayload {
    Hypothesis(Hypothesis),
    Text(String),
    Expression(String),
    Verdict(Verdict),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum Provenance {
    Heuristic { seed: u64, rule_id: String },
    Remote { model: String, request_id: String },
    Replay { original: Box<Provenance> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderResponse {
    pub payload: ResponsePayload,
    pub provenance: Provenance,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("no applicable generation rule within budget")]
    RuleExhausted,
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited by endpoint")]
    RateLimited,
    #[error("response violated the expected schema after {budget} attempts: {detail}")]
    SchemaViolation { budget: u32, detail: String },
    #[error("authentication failure: {0}")]
    AuthFailure(String),
    #[error("missing configuration: {0}")]
    MissingConfig(String),
    #[error("no recorded response for request {fingerprint}")]
    ReplayMiss { fingerprint: String },
}

/// A generation backend. Implementations must be deterministic per
/// (configuration, request content) where claimed, and safe to call from
/// multiple threads.
pub trait Provider: Send + Sync {
    fn name(&self) -> &str;
    fn respond(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError>;

    /// Respond and enforce the boundary invariant: expression payloads are
    /// re-parsed and canonicalized before crossing into the engine; an
    /// unparseable expression is a schema violation.
    fn respond_validated(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let mut resp = self.respond(req)?;
        if let ResponsePayload::Expression(text) = &resp.payload {
            match dsl::parse(text) {
                Ok(e) => resp.payload = ResponsePayload::Expression(dsl::canonicalize(&e)),
                Err(err) => {
                    return Err(ProviderError::SchemaViolation {
                        budget: req.budget,
                        detail: format!("unparseable expression {text:?}: {err}"),
                    })
                }
            }
        }
        Ok(resp)
    }
}

impl Provider for Box<dyn Provider> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn respond(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        (**self).respond(req)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
