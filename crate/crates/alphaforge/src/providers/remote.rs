//! Remote chat-completion provider.
//!
//! Issues OpenAI-style chat requests to a configurable endpoint and maps
//! each request kind onto a versioned prompt template. The model must
//! answer with a single JSON object in a declared shape; malformed answers
//! are retried within the request budget.
//!
//! Configuration comes from the environment:
//! `ALPHAFORGE_LLM_ENDPOINT`, `ALPHAFORGE_LLM_KEY`, `ALPHAFORGE_LLM_MODEL`.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::evolution::Hypothesis;

use super::{
    Provenance, Provider, ProviderError, ProviderRequest, ProviderResponse, RequestKind,
    ResponsePayload, Verdict,
};

pub const ENDPOINT_VAR: &str = "ALPHAFORGE_LLM_ENDPOINT";
pub const KEY_VAR: &str = "ALPHAFORGE_LLM_KEY";
pub const MODEL_VAR: &str = "ALPHAFORGE_LLM_MODEL";

/// Bumped whenever any prompt text changes, and logged in provenance via
/// the request id so recorded runs stay attributable to their prompts.
pub const PROMPT_VERSION: &str = "v1";

pub struct RemoteProvider {
    endpoint: String,
    key: String,
    model: String,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(endpoint: String, key: String, model: String) -> Self {
        RemoteProvider {
            endpoint,
            key,
            model,
            client: reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(120))
                .build()
                .expect("client builds"),
        }
    }

    /// Construct from the `ALPHAFORGE_LLM_*` environment variables.
    pub fn from_env() -> Result<Self, ProviderError> {
        let get = |var: &str| {
            std::env::var(var).map_err(|_| ProviderError::MissingConfig(var.to_string()))
        };
        Ok(RemoteProvider::new(get(ENDPOINT_VAR)?, get(KEY_VAR)?, get(MODEL_VAR)?))
    }

    fn call(&self, prompt: &ChatPrompt) -> Result<(String, String), ProviderError> {
        let body = json!({
            "model": self.model,
            "messages": [
                {"role": "system", "content": prompt.system},
                {"role": "user", "content": prompt.user},
            ],
            "temperature": 0.7,
            "response_format": {"type": "json_object"},
        });
        let resp = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.key)
            .json(&body)
            .send()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        match resp.status().as_u16() {
            401 | 403 => return Err(ProviderError::AuthFailure(resp.status().to_string())),
            429 => return Err(ProviderError::RateLimited),
            s if s >= 400 => {
                return Err(ProviderError::Transport(format!("status {s}")));
            }
            _ => {}
        }
        let parsed: ChatCompletion = resp
            .json()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ProviderError::Transport("empty choices".to_string()))?;
        Ok((content, parsed.id.unwrap_or_default()))
    }
}

#[derive(Debug, Deserialize)]
struct ChatCompletion {
    id: Option<String>,
    choices: Vec<Choice>,
}

#[derive(Debug, Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Debug, Deserialize)]
struct ChoiceMessage {
    content: String,
}

pub struct ChatPrompt {
    pub system: String,
    pub user: String,
}

const SYSTEM_PREAMBLE: &str = "You are a quantitative researcher generating alpha factors in a \
small expression language over $open, $high, $low, $close, $volume, $vwap with rolling \
(TS_*), cross-sectional (RANK, ZSCORE, ...), arithmetic, and technical operators. \
Always answer with a single JSON object and nothing else.";

/// Render the versioned prompt for one request kind.
pub fn render_prompt(req: &ProviderRequest) -> ChatPrompt {
    let system = format!("{SYSTEM_PREAMBLE} (prompt {PROMPT_VERSION})");
    let user = match &req.kind {
        RequestKind::Plan {
            direction,
            rejected,
            ..
        } => json!({
            "task": "plan",
            "instruction": "Propose one research hypothesis for a new exploration direction, \
maximally complementary to the directions already planned. Answer shape: {statement, \
observation, justification, domain_knowledge, parameters}.",
            "direction": direction,
            "already_planned_first_expressions": rejected,
        })
        .to_string(),
        RequestKind::Describe {
            hypothesis,
            expression,
        } => json!({
            "task": "describe",
            "instruction": "Write a one-sentence semantic description of the signal. Mention \
only features the expression actually uses. Answer shape: {description}.",
            "hypothesis": hypothesis,
            "expression": expression,
        })
        .to_string(),
        RequestKind::Express {
            hypothesis,
            attempt,
            rejected,
        } => json!({
            "task": "express",
            "instruction": "Produce one expression realizing the hypothesis, different from \
all rejected ones. Answer shape: {expression}.",
            "hypothesis": hypothesis,
            "attempt": attempt,
            "rejected": rejected,
        })
        .to_string(),
        RequestKind::Repair {
            hypothesis,
            expression,
            reasons,
            ..
        } => json!({
            "task": "repair",
            "instruction": "The expression was rejected for the listed reasons. Return a \
minimally changed expression fixing them. Answer shape: {expression}.",
            "hypothesis": hypothesis,
            "expression": expression,
            "reasons": reasons,
        })
        .to_string(),
        RequestKind::Mutate {
            hypothesis,
            expression,
            fault,
            ..
        } => json!({
            "task": "mutate",
            "instruction": "Rewrite only the localized faulty decision: alter a window, swap \
an operator, substitute a feature, or add a regime condition. Answer shape: {expression}.",
            "hypothesis": hypothesis,
            "expression": expression,
            "fault": fault,
        })
        .to_string(),
        RequestKind::Crossover { parents, .. } => json!({
            "task": "crossover",
            "instruction": "Compose the strongest segments of the parent trajectories into one \
child expression and cite what was inherited. Answer shape: {expression}.",
            "parents": parents.iter().map(|p| json!({
                "trajectory_id": p.trajectory_id,
                "core_hypothesis": p.hypothesis.statement,
                "best_expression": p.best_expression,
                "rank_ic": p.rank_ic,
            })).collect::<Vec<_>>(),
        })
        .to_string(),
        RequestKind::Verify {
            hypothesis,
            description,
            expression,
        } => json!({
            "task": "verify",
            "instruction": "Check alignment among hypothesis, description, and expression. \
Answer shape: {verdict: \"pass\"} or {verdict: \"fail\", component, reason}.",
            "hypothesis": hypothesis,
            "description": description,
            "expression": expression,
        })
        .to_string(),
        RequestKind::Summarize { card } => json!({
            "task": "summarize",
            "instruction": "Summarize the trajectory card in at most three sentences. Answer \
shape: {summary}.",
            "card": card,
        })
        .to_string(),
    };
    ChatPrompt { system, user }
}

/// Parse the model's JSON answer into the payload expected for the kind.
pub fn parse_payload(kind: &RequestKind, content: &str) -> Result<ResponsePayload, String> {
    let value: serde_json::Value =
        serde_json::from_str(content).map_err(|e| format!("not JSON: {e}"))?;
    let text_field = |key: &str| -> Result<String, String> {
        value
            .get(key)
            .and_then(|v| v.as_str())
            .map(str::to_string)
            .ok_or_else(|| format!("missing string field {key:?}"))
    };
    match kind {
        RequestKind::Plan { direction, .. } => {
            let parameters: BTreeMap<String, f64> = value
                .get("parameters")
                .and_then(|p| p.as_object())
                .map(|m| {
                    m.iter()
                        .filter_map(|(k, v)| v.as_f64().map(|x| (k.clone(), x)))
                        .collect()
                })
                .unwrap_or_default();
            Ok(ResponsePayload::Hypothesis(Hypothesis {
                id: format!("d{direction}-remote"),
                statement: text_field("statement")?,
                observation: text_field("observation").unwrap_or_default(),
                justification: text_field("justification").unwrap_or_default(),
                domain_knowledge: text_field("domain_knowledge").unwrap_or_default(),
                parameters,
            }))
        }
        RequestKind::Describe { .. } => Ok(ResponsePayload::Text(text_field("description")?)),
        RequestKind::Express { .. }
        | RequestKind::Repair { .. }
        | RequestKind::Mutate { .. }
        | RequestKind::Crossover { .. } => {
            Ok(ResponsePayload::Expression(text_field("expression")?))
        }
        RequestKind::Verify { .. } => match text_field("verdict")?.as_str() {
            "pass" => Ok(ResponsePayload::Verdict(Verdict::Pass)),
            "fail" => Ok(ResponsePayload::Verdict(Verdict::Fail {
                component: text_field("component")?,
                reason: text_field("reason").unwrap_or_default(),
            })),
            other => Err(format!("unknown verdict {other:?}")),
        },
        RequestKind::Summarize { .. } => Ok(ResponsePayload::Text(text_field("summary")?)),
    }
}

impl Provider for RemoteProvider {
    fn name(&self) -> &str {
        "remote"
    }

    fn respond(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let prompt = render_prompt(req);
        let mut last_detail = String::new();
        for attempt in 0..req.budget {
            let (content, request_id) = match self.call(&prompt) {
                Ok(pair) => pair,
                Err(ProviderError::RateLimited) => {
                    std::thread::sleep(Duration::from_millis(500 * (attempt as u64 + 1)));
                    last_detail = "rate limited".to_string();
                    continue;
                }
                Err(other) => return Err(other),
            };
            match parse_payload(&req.kind, &content) {
                Ok(payload) => {
                    return Ok(ProviderResponse {
                        payload,
                        provenance: Provenance::Remote {
                            model: self.model.clone(),
                            request_id: format!("{request_id}#{PROMPT_VERSION}"),
                        },
                    })
                }
                Err(detail) => last_detail = detail,
            }
        }
        Err(ProviderError::SchemaViolation {
            budget: req.budget,
            detail: last_detail,
        })
    }
}
