//! Deterministic rule-based provider.
//!
//! Every response is a pure function of (provider seed, request content):
//! the request fingerprint seeds a private RNG stream, so identical
//! requests always draw identical randomness regardless of call order.
//! This is what makes mining runs resumable and byte-reproducible.
//!
//! Rule table (also used for repair):
//! - `window-double` / `window-halve`: scale every window parameter.
//! - `op-swap`: replace one operator with a same-category peer of equal
//!   arity and parameter signature.
//! - `feature-sub`: substitute one feature leaf for another.
//! - `wrap-rank`: wrap the expression in cross-sectional RANK.
//! - `regime-wrap`: condition the signal on a high-volatility regime via
//!   WHERE(GT(TS_STD($close,20),MEAN(TS_STD($close,20))), e, -e).
//! - crossover: graft a random full subtree of one parent into a
//!   kind-compatible site of the other.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::dsl::ops::{self, OperatorSpec, ParamValue};
use crate::dsl::{canonicalize, parse, Expr, FeatureField};
use crate::evolution::Hypothesis;

use super::{
    Provenance, Provider, ProviderError, ProviderRequest, ProviderResponse, RequestKind,
    ResponsePayload, Verdict,
};

/// One exploration direction: a hypothesis card plus three candidate
/// expression templates. `{w}` is the window placeholder.
struct DirectionTemplate {
    statement: &'static str,
    observation: &'static str,
    justification: &'static str,
    domain_knowledge: &'static str,
    description: &'static str,
    default_window: usize,
    /// Whether every expression uses `{w}` (then the hypothesis carries a
    /// window parameter the verifier can check).
    windowed: bool,
    expressions: [&'static str; 3],
}

static TEMPLATES: &[DirectionTemplate] = &[
    DirectionTemplate {
        statement: "Trade-weighted average price pressure relative to the close",
        observation: "Stocks whose vwap sits above the close attracted buying through the session.",
        justification: "Intraday accumulation pressure tends to persist over the next days.",
        domain_knowledge: "vwap aggregates where volume actually traded, unlike the closing print.",
        description: "Measures how far the vwap sits from the close as a pressure signal.",
        default_window: 5,
        windowed: false,
        expressions: [
            "$vwap/$close-1",
            "RANK($vwap/$close-1)",
            "TS_MEAN($vwap/$close-1,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Short-horizon price reversal over {w} days",
        observation: "Recent losers bounce and recent winners fade at the weekly horizon.",
        justification: "Liquidity provision is rewarded after short-term over-reaction.",
        domain_knowledge: "Classic short-term reversal effect in equity cross-sections.",
        description: "Ranks stocks by inverted recent close momentum.",
        default_window: 5,
        windowed: true,
        expressions: [
            "-TS_PCTCHANGE($close,{w})",
            "RANK(TS_MEAN($close,{w})/$close-1)",
            "-DELTA($close,{w})/DELAY($close,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Price position within the {w}-day high/low channel",
        observation: "Closes near the channel top precede continuation; closes near the bottom precede bounces.",
        justification: "Breakout and support levels summarize recent supply and demand.",
        domain_knowledge: "Stochastic-oscillator style channel position.",
        description: "Locates the close inside its recent trading channel.",
        default_window: 10,
        windowed: true,
        expressions: [
            "($close-TS_MIN($low,{w}))/(TS_MAX($high,{w})-TS_MIN($low,{w}))",
            "$close/TS_MAX($high,{w})-1",
            "TS_MIN($low,{w})/$close-1",
        ],
    },
    DirectionTemplate {
        statement: "Abnormal volume relative to its {w}-day average",
        observation: "Volume spikes mark information arrival before prices fully adjust.",
        justification: "Attention and information flow lead returns.",
        domain_knowledge: "Volume surprise is a standard liquidity/attention proxy.",
        description: "Compares today's volume with its own recent history.",
        default_window: 20,
        windowed: true,
        expressions: [
            "$volume/TS_MEAN($volume,{w})-1",
            "RANK(DELTA($volume,{w}))",
            "TS_ZSCORE($volume,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Co-movement of close and volume over {w} days",
        observation: "Price moves confirmed by volume carry more signal than unconfirmed ones.",
        justification: "Volume-supported trends are less likely to revert.",
        domain_knowledge: "Price-volume correlation underlies many classic formulaic alphas.",
        description: "Correlates close changes with volume over a rolling window.",
        default_window: 10,
        windowed: true,
        expressions: [
            "TS_CORR($close,$volume,{w})",
            "RANK(TS_CORR(TS_PCTCHANGE($close,1),$volume,{w}))",
            "TS_COVARIANCE($close,$volume,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Low-volatility preference over {w} days",
        observation: "Calm names outperform turbulent ones on a risk-adjusted basis.",
        justification: "The low-volatility anomaly: lottery-like stocks are overpriced.",
        domain_knowledge: "Defensive factor construction from realized close volatility.",
        description: "Penalizes stocks with large recent close volatility.",
        default_window: 20,
        windowed: true,
        expressions: [
            "-TS_STD($close,{w})",
            "-TS_STD(TS_PCTCHANGE($close,1),{w})",
            "RANK(-TS_VAR($close,{w}))",
        ],
    },
    DirectionTemplate {
        statement: "Medium-term momentum over {w} days",
        observation: "Winners keep winning over multi-week horizons.",
        justification: "Underreaction to fundamental news produces drift.",
        domain_knowledge: "Cross-sectional momentum is among the most robust anomalies.",
        description: "Scores stocks by trailing close appreciation.",
        default_window: 20,
        windowed: true,
        expressions: [
            "TS_PCTCHANGE($close,{w})",
            "EMA($close,{w})/$close-1",
            "TS_RANK($close,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Intraday strength from open to close",
        observation: "Session-long buying that holds into the close signals conviction.",
        justification: "Intraday drift reflects order-flow imbalance.",
        domain_knowledge: "Candlestick body position relative to the day's range.",
        description: "Uses the open to close move as a daily conviction gauge.",
        default_window: 5,
        windowed: false,
        expressions: [
            "($close-$open)/$open",
            "RANK(($close-$open)/($high-$low))",
            "TS_MEAN(($close-$open)/$open,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Overnight gap behavior",
        observation: "Large overnight gaps partially reverse during the following days.",
        justification: "Overnight prices overshoot on thin liquidity.",
        domain_knowledge: "Open versus prior close decomposes returns into overnight and intraday.",
        description: "Relates today's open to the previous close.",
        default_window: 5,
        windowed: false,
        expressions: [
            "$open/DELAY($close,1)-1",
            "RANK($open/DELAY($close,1)-1)",
            "TS_MEAN($open/DELAY($close,1)-1,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Overbought and oversold pressure over {w} days",
        observation: "Extreme oscillator readings precede mean reversion.",
        justification: "Bounded momentum oscillators normalize gains against losses.",
        domain_knowledge: "Relative-strength style indicators over the close.",
        description: "Builds oscillator readings from the close series.",
        default_window: 14,
        windowed: true,
        expressions: [
            "-RSI($close,{w})",
            "WMA($close,{w})/$close-1",
            "TS_ARGMAX($close,{w})",
        ],
    },
    DirectionTemplate {
        statement: "Persistent trend quality in the close",
        observation: "Smooth trends attract follow-on flows; choppy ones do not.",
        justification: "Moving-average crossovers capture trend persistence.",
        domain_knowledge: "MACD-family constructions over the close.",
        description: "Contrasts fast and slow smoothings of the close.",
        default_window: 10,
        windowed: false,
        expressions: [
            "MACD($close,12,26)",
            "EMA($close,12)-EMA($close,26)",
            "DECAYLINEAR(DELTA($close,1),{w})",
        ],
    },
    DirectionTemplate {
        statement: "Cross-sectional crowding of volume",
        observation: "Relative, not absolute, volume identifies where attention concentrates.",
        justification: "Cross-sectional standardization removes size effects.",
        domain_knowledge: "Peer-relative volume as a crowding proxy.",
        description: "Standardizes volume across the universe each day.",
        default_window: 5,
        windowed: false,
        expressions: ["ZSCORE($volume)", "RANK($volume)-0.5", "SCALE($volume*$close)"],
    },
];

pub struct HeuristicProvider {
    seed: u64,
}

impl HeuristicProvider {
    pub fn new(seed: u64) -> Self {
        HeuristicProvider { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Private RNG stream for one request: hash(seed ‖ request content).
    fn rng_for(&self, req: &ProviderRequest) -> ChaCha8Rng {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(req.fingerprint().as_bytes());
        let digest = h.finalize();
        ChaCha8Rng::seed_from_u64(u64::from_le_bytes(digest[..8].try_into().unwrap()))
    }

    fn ok(&self, payload: ResponsePayload, rule_id: &str) -> ProviderResponse {
        ProviderResponse {
            payload,
            provenance: Provenance::Heuristic {
                seed: self.seed,
                rule_id: rule_id.to_string(),
            },
        }
    }
}

/// Template index encoded in hypothesis ids of the form `d{n}-t{idx}`.
fn template_of(h: &Hypothesis) -> Option<&'static DirectionTemplate> {
    let idx: usize = h
        .id
        .split("-t")
        .nth(1)?
        .split(|c: char| !c.is_ascii_digit())
        .next()?
        .parse()
        .ok()?;
    TEMPLATES.get(idx)
}

fn hypothesis_window(h: &Hypothesis, fallback: usize) -> usize {
    h.parameters
        .get("window")
        .map(|w| *w as usize)
        .or_else(|| window_from_text(&h.statement))
        .unwrap_or(fallback)
}

/// First "<N>-day" window mentioned in free text.
pub fn window_from_text(s: &str) -> Option<usize> {
    for (pos, _) in s.match_indices("-day") {
        let digits: String = s[..pos]
            .chars()
            .rev()
            .take_while(|c| c.is_ascii_digit())
            .collect();
        if !digits.is_empty() {
            let n: usize = digits.chars().rev().collect::<String>().parse().ok()?;
            if n >= 1 {
                return Some(n);
            }
        }
    }
    None
}

fn instantiate(template: &str, window: usize) -> String {
    template.replace("{w}", &window.to_string())
}

impl Provider for HeuristicProvider {
    fn name(&self) -> &str {
        "heuristic"
    }

    fn respond(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let mut rng = self.rng_for(req);
        match &req.kind {
            RequestKind::Plan {
                direction, attempt, ..
            } => {
                let ti = (direction + attempt) % TEMPLATES.len();
                let t = &TEMPLATES[ti];
                let w = t.default_window;
                let mut parameters = BTreeMap::new();
                if t.windowed {
                    parameters.insert("window".to_string(), w as f64);
                }
                let h = Hypothesis {
                    id: format!("d{direction}-t{ti}"),
                    statement: instantiate(t.statement, w),
                    observation: t.observation.to_string(),
                    justification: t.justification.to_string(),
                    domain_knowledge: t.domain_knowledge.to_string(),
                    parameters,
                };
                Ok(self.ok(ResponsePayload::Hypothesis(h), "plan-template"))
            }
            RequestKind::Describe {
                hypothesis,
                expression,
            } => {
                let text = match expression.as_deref().and_then(|e| parse(e).ok()) {
                    Some(e) => {
                        let feats: Vec<&str> =
                            e.base_features().iter().map(|f| f.name()).collect();
                        if feats.is_empty() {
                            "Constant signal with no market inputs.".to_string()
                        } else {
                            format!("Signal built from {}.", feats.join(", "))
                        }
                    }
                    None => match template_of(hypothesis) {
                        Some(t) => t.description.to_string(),
                        None => format!("Captures: {}.", hypothesis.statement),
                    },
                };
                Ok(self.ok(ResponsePayload::Text(text), "describe-template"))
            }
            RequestKind::Express {
                hypothesis,
                attempt,
                rejected,
            } => {
                let (t, w) = match template_of(hypothesis) {
                    Some(t) => (t, hypothesis_window(hypothesis, t.default_window)),
                    None => {
                        // Unknown lineage (e.g. crossover child): free text
                        // hints first, otherwise a seeded template draw.
                        let t = if hypothesis.statement.contains("high/low") {
                            &TEMPLATES[2]
                        } else {
                            &TEMPLATES[rng.gen_range(0..TEMPLATES.len())]
                        };
                        (t, hypothesis_window(hypothesis, t.default_window))
                    }
                };
                let n = t.expressions.len();
                for k in 0..n {
                    let text = instantiate(t.expressions[(attempt + k) % n], w);
                    let canonical = canonicalize(&parse(&text).expect("template parses"));
                    if !rejected.contains(&canonical) {
                        return Ok(self.ok(ResponsePayload::Expression(canonical), "express-template"));
                    }
                }
                Err(ProviderError::RuleExhausted)
            }
            RequestKind::Repair {
                hypothesis,
                expression,
                reasons,
                attempt,
            } => match parse(expression) {
                Err(_) => {
                    // Unparseable: fall back to a fresh template expression.
                    let t = template_of(hypothesis).unwrap_or(&TEMPLATES[0]);
                    let w = hypothesis_window(hypothesis, t.default_window);
                    let text = instantiate(t.expressions[(attempt + 1) % t.expressions.len()], w);
                    Ok(self.ok(ResponsePayload::Expression(text), "repair-fresh"))
                }
                Ok(e) => {
                    let oversized = reasons.iter().any(|r| r.contains("SymbolLength"));
                    if oversized {
                        if let Expr::Apply { children, .. } = &e {
                            if let Some(first) = children.first() {
                                return Ok(self.ok(
                                    ResponsePayload::Expression(canonicalize(first)),
                                    "repair-unwrap",
                                ));
                            }
                        }
                    }
                    let (rewritten, rule) = apply_some_rule(&e, &mut rng, *attempt)
                        .ok_or(ProviderError::RuleExhausted)?;
                    Ok(self.ok(
                        ResponsePayload::Expression(canonicalize(&rewritten)),
                        rule,
                    ))
                }
            },
            RequestKind::Mutate {
                expression, attempt, ..
            } => {
                let e = parse(expression).map_err(|err| ProviderError::SchemaViolation {
                    budget: req.budget,
                    detail: format!("mutate target does not parse: {err}"),
                })?;
                let (rewritten, rule) =
                    apply_some_rule(&e, &mut rng, *attempt).ok_or(ProviderError::RuleExhausted)?;
                Ok(self.ok(ResponsePayload::Expression(canonicalize(&rewritten)), rule))
            }
            RequestKind::Crossover { parents, attempt } => {
                if parents.len() < 2 {
                    return Err(ProviderError::SchemaViolation {
                        budget: req.budget,
                        detail: "crossover needs at least two parents".to_string(),
                    });
                }
                let a = parse(&parents[0].best_expression).map_err(|err| {
                    ProviderError::SchemaViolation {
                        budget: req.budget,
                        detail: format!("parent expression does not parse: {err}"),
                    }
                })?;
                let b = parse(&parents[1].best_expression).map_err(|err| {
                    ProviderError::SchemaViolation {
                        budget: req.budget,
                        detail: format!("parent expression does not parse: {err}"),
                    }
                })?;
                for _ in 0..=*attempt {
                    // burn draws so retries explore different sites
                    let _ = rng.gen::<u64>();
                }
                let child = graft(&a, &b, &mut rng).ok_or(ProviderError::RuleExhausted)?;
                Ok(self.ok(
                    ResponsePayload::Expression(canonicalize(&child)),
                    "crossover-graft",
                ))
            }
            RequestKind::Verify {
                hypothesis,
                description,
                expression,
            } => {
                let verdict = verify_rules(hypothesis, description, expression);
                Ok(self.ok(ResponsePayload::Verdict(verdict), "verify-rules"))
            }
            RequestKind::Summarize { card } => Ok(self.ok(
                ResponsePayload::Text(format!("Trajectory summary: {card}")),
                "summarize-template",
            )),
        }
    }
}

/// Rule-based consistency verdict over (hypothesis, description,
/// expression): the description must be non-empty, every feature it names
/// must appear in the expression, and every window parameter declared on
/// the hypothesis must appear among the expression's parameters.
pub fn verify_rules(h: &Hypothesis, description: &str, expression: &str) -> Verdict {
    if description.trim().is_empty() {
        return Verdict::Fail {
            component: "description".to_string(),
            reason: "description is empty".to_string(),
        };
    }
    let e = match parse(expression) {
        Ok(e) => e,
        Err(err) => {
            return Verdict::Fail {
                component: "expression".to_string(),
                reason: format!("does not parse: {err}"),
            }
        }
    };
    let feats = e.base_features();
    let lower = description.to_ascii_lowercase();
    for f in FeatureField::ALL {
        if lower.contains(f.name()) && !feats.contains(&f) {
            return Verdict::Fail {
                component: "expression".to_string(),
                reason: format!("description names {} but the expression does not use it", f.name()),
            };
        }
    }
    let windows: Vec<usize> = e
        .nodes()
        .iter()
        .filter_map(|n| match n {
            Expr::Apply { params, .. } => Some(params.iter().filter_map(|p| p.as_window())),
            _ => None,
        })
        .flatten()
        .collect();
    for (key, value) in &h.parameters {
        if key.contains("window") && !windows.contains(&(*value as usize)) {
            return Verdict::Fail {
                component: "expression".to_string(),
                reason: format!("hypothesis window {value} absent from the expression"),
            };
        }
    }
    Verdict::Pass
}

// ---------------------------------------------------------------------------
// Rewrite rules
// ---------------------------------------------------------------------------

/// Apply the first applicable rule starting from a seeded offset; returns
/// the rewritten tree and the rule id.
fn apply_some_rule(
    e: &Expr,
    rng: &mut ChaCha8Rng,
    attempt: usize,
) -> Option<(Expr, &'static str)> {
    const N_RULES: usize = 6;
    let start = rng.gen_range(0..N_RULES) + attempt;
    for k in 0..N_RULES {
        let rewritten = match (start + k) % N_RULES {
            0 => window_double(e).map(|x| (x, "window-double")),
            1 => window_halve(e).map(|x| (x, "window-halve")),
            2 => op_swap(e, rng).map(|x| (x, "op-swap")),
            3 => feature_substitute(e, rng).map(|x| (x, "feature-sub")),
            4 => Some((wrap_rank(e), "wrap-rank")),
            _ => Some((regime_wrap(e), "regime-wrap")),
        };
        if let Some(hit) = rewritten {
            return Some(hit);
        }
    }
    None
}

fn map_params(e: &Expr, f: &impl Fn(usize) -> usize) -> Expr {
    match e {
        Expr::Apply {
            op,
            children,
            params,
        } => Expr::Apply {
            op,
            children: children.iter().map(|c| map_params(c, f)).collect(),
            params: params
                .iter()
                .map(|p| match p {
                    ParamValue::Window(w) => ParamValue::Window(f(*w)),
                    other => *other,
                })
                .collect(),
        },
        other => other.clone(),
    }
}

fn has_window(e: &Expr, pred: impl Fn(usize) -> bool) -> bool {
    e.nodes().iter().any(|n| match n {
        Expr::Apply { params, .. } => params
            .iter()
            .any(|p| p.as_window().map(&pred).unwrap_or(false)),
        _ => false,
    })
}

/// Double every window parameter.
pub fn window_double(e: &Expr) -> Option<Expr> {
    has_window(e, |_| true).then(|| map_params(e, &|w| w * 2))
}

/// Halve every window parameter (floored at 1).
pub fn window_halve(e: &Expr) -> Option<Expr> {
    has_window(e, |w| w > 1).then(|| map_params(e, &|w| (w / 2).max(1)))
}

/// Same-category, same-signature peers of an operator.
fn peers(op: &'static OperatorSpec) -> Vec<&'static OperatorSpec> {
    ops::callable()
        .filter(|cand| {
            cand.name != op.name
                && cand.category == op.category
                && cand.arity == op.arity
                && cand.output == op.output
                && cand.params.len() == op.params.len()
                && cand
                    .params
                    .iter()
                    .zip(op.params.iter())
                    .all(|(a, b)| a.1 == b.1)
        })
        .collect()
}

/// Swap one operator application for a random category peer.
pub fn op_swap(e: &Expr, rng: &mut ChaCha8Rng) -> Option<Expr> {
    let nodes = e.nodes();
    let sites: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| match n {
            Expr::Apply { op, .. } => op.infix.is_none() && !peers(op).is_empty(),
            _ => false,
        })
        .map(|(i, _)| i)
        .collect();
    if sites.is_empty() {
        return None;
    }
    let site = sites[rng.gen_range(0..sites.len())];
    let old_op = match nodes[site] {
        Expr::Apply { op, .. } => *op,
        _ => unreachable!(),
    };
    let alts = peers(old_op);
    let new_op = alts[rng.gen_range(0..alts.len())];
    Some(rewrite_at(e, site, &|n| match n {
        Expr::Apply {
            children, params, ..
        } => Expr::Apply {
            op: new_op,
            children: children.clone(),
            params: params.clone(),
        },
        other => other.clone(),
    }))
}

/// Replace one feature leaf with a different feature.
pub fn feature_substitute(e: &Expr, rng: &mut ChaCha8Rng) -> Option<Expr> {
    let nodes = e.nodes();
    let sites: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| matches!(n, Expr::Feature(_)))
        .map(|(i, _)| i)
        .collect();
    if sites.is_empty() {
        return None;
    }
    let site = sites[rng.gen_range(0..sites.len())];
    let current = match nodes[site] {
        Expr::Feature(f) => *f,
        _ => unreachable!(),
    };
    let others: Vec<FeatureField> = FeatureField::ALL
        .into_iter()
        .filter(|f| *f != current)
        .collect();
    let replacement = others[rng.gen_range(0..others.len())];
    Some(rewrite_at(e, site, &|_| Expr::Feature(replacement)))
}

/// Wrap the whole expression in cross-sectional RANK.
pub fn wrap_rank(e: &Expr) -> Expr {
    Expr::apply(ops::lookup("RANK").unwrap(), vec![e.clone()], vec![])
}

/// Condition the signal on a high-volatility regime.
pub fn regime_wrap(e: &Expr) -> Expr {
    let t = canonicalize(e);
    parse(&format!(
        "WHERE(GT(TS_STD($close,20),MEAN(TS_STD($close,20))),{t},-({t}))"
    ))
    .expect("regime template parses")
}

/// Rebuild the tree with `f` applied to the node at preorder index `idx`.
pub fn rewrite_at(e: &Expr, idx: usize, f: &dyn Fn(&Expr) -> Expr) -> Expr {
    fn walk(e: &Expr, counter: &mut usize, idx: usize, f: &dyn Fn(&Expr) -> Expr) -> Expr {
        let me = *counter;
        *counter += 1;
        if me == idx {
            // advance the counter past the replaced subtree
            *counter += e.node_count() - 1;
            return f(e);
        }
        match e {
            Expr::Apply {
                op,
                children,
                params,
            } => Expr::Apply {
                op,
                children: children.iter().map(|c| walk(c, counter, idx, f)).collect(),
                params: params.clone(),
            },
            other => other.clone(),
        }
    }
    let mut counter = 0;
    walk(e, &mut counter, idx, f)
}

/// Graft a random full subtree of `a` into a kind-compatible site of `b`.
pub fn graft(a: &Expr, b: &Expr, rng: &mut ChaCha8Rng) -> Option<Expr> {
    let a_nodes = a.nodes();
    for _ in 0..16 {
        let donor = a_nodes[rng.gen_range(0..a_nodes.len())].clone();
        let sites: Vec<usize> = b
            .nodes()
            .iter()
            .enumerate()
            .filter(|(_, n)| n.output_kind() == donor.output_kind())
            .map(|(i, _)| i)
            .collect();
        if sites.is_empty() {
            continue;
        }
        let site = sites[rng.gen_range(0..sites.len())];
        return Some(rewrite_at(b, site, &|_| donor.clone()));
    }
    None
}
