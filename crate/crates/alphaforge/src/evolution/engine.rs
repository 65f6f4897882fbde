//! The mining workflow: planning initialization, trajectory execution
//! (describe → express → gate → evaluate), mutation with a frozen prefix,
//! crossover with explicit lineage, and the round scheduler.

use serde_json::json;

use crate::backtest::{simulate, StrategyConfig};
use crate::dsl::{canonicalize, parse, Expr};
use crate::eval::{evaluate, FactorMatrixOf};
use crate::matrix::Matrix;
use crate::metrics::{self, annualized_metrics, EvaluationReport};
use crate::panel::PanelOf;
use crate::providers::{
    ParentCard, Provider, ProviderRequest, RequestKind, ResponsePayload, Verdict,
};
use crate::structure::{gate, ComplexityWeights, GateConfig, GateDecision};

use super::{
    factor_id, pool_snapshot, pool_update, reward, EvolutionConfig, EvolutionError, FactorPool,
    FactorRecord, Hypothesis, Phase, PoolSnapshot, StepKind, StepOutcome, Trajectory,
    TrajectoryStep, TRAJECTORY_SCHEMA,
};

/// Retries granted to repair a rejected expression within one attempt.
const REPAIR_BUDGET: usize = 2;
/// Retries granted to plan one non-redundant direction.
const PLAN_BUDGET: usize = 12;

/// Resolved date-index sets for the three splits.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    /// Positional split by fractions; the remainder is the test set.
    pub fn positional(n_dates: usize, train_frac: f64, valid_frac: f64) -> SplitIndices {
        let n_train = ((n_dates as f64) * train_frac).floor() as usize;
        let n_valid = ((n_dates as f64) * valid_frac).floor() as usize;
        SplitIndices {
            train: (0..n_train).collect(),
            valid: (n_train..n_train + n_valid).collect(),
            test: (n_train + n_valid..n_dates).collect(),
        }
    }
}

/// Everything a trajectory needs to evaluate factors: the preprocessed
/// panel, labels, splits, and the gate configuration.
pub struct MiningContext {
    pub panel: PanelOf<f64>,
    pub labels: Matrix<f64>,
    pub split: SplitIndices,
    pub strategy: StrategyConfig,
    pub gate: GateConfig,
    pub weights: ComplexityWeights,
}

impl MiningContext {
    pub fn new(
        raw: &PanelOf<f64>,
        split: SplitIndices,
        strategy: StrategyConfig,
        gate: GateConfig,
        weights: ComplexityWeights,
    ) -> Result<Self, EvolutionError> {
        let panel = raw.preprocess();
        let labels = panel.make_labels();
        if labels.valid_count() == 0 {
            return Err(EvolutionError::Data(
                "no valid labels: the panel is too short for two-day forward returns".to_string(),
            ));
        }
        if split.valid.is_empty() {
            return Err(EvolutionError::Data("empty validation split".to_string()));
        }
        Ok(MiningContext {
            panel,
            labels,
            split,
            strategy,
            gate,
            weights,
        })
    }

    /// Complexity normalizer for the reward; falls back to the default
    /// budget when the gate has its complexity control disabled.
    pub fn max_complexity(&self) -> f64 {
        self.gate
            .max_complexity
            .or(GateConfig::default().max_complexity)
            .unwrap()
    }

    /// Evaluate an expression and report metrics over the given date
    /// indices (predictive always; strategy when a backtest is feasible).
    pub fn evaluate_on(&self, e: &Expr, indices: &[usize]) -> (FactorMatrixOf<f64>, EvaluationReport) {
        let fm = evaluate(e, &self.panel).expect("non-empty panel");
        let strategy_metrics = self.backtest_on(&fm, indices);
        let report = metrics::report(
            &fm.expr_text,
            &fm.values,
            &self.labels,
            Some(indices),
            strategy_metrics.as_ref().map(|(sm, to)| (sm, to.as_slice())),
        );
        (fm, report)
    }

    fn backtest_on(
        &self,
        fm: &FactorMatrixOf<f64>,
        indices: &[usize],
    ) -> Option<(metrics::StrategyMetrics, Vec<f64>)> {
        let (&start, &end) = (indices.first()?, indices.last()?);
        let result = simulate(&fm.values, &self.panel, &self.strategy, start, end + 1).ok()?;
        let excess = result.excess_after_cost();
        if excess.is_empty() {
            return None;
        }
        Some((annualized_metrics(&excess, false), result.turnover()))
    }
}

fn request(kind: RequestKind) -> ProviderRequest {
    ProviderRequest::new(kind)
}

fn expression_payload(resp: ResponsePayload) -> Option<String> {
    match resp {
        ResponsePayload::Expression(text) => Some(text),
        _ => None,
    }
}

/// Plan `n_directions` hypotheses whose first expressions are mutually
/// non-redundant under the structural gate.
pub fn plan_init(
    ctx: &MiningContext,
    cfg: &EvolutionConfig,
    provider: &dyn Provider,
) -> Result<Vec<Hypothesis>, EvolutionError> {
    let mut hypotheses = Vec::new();
    let mut first_exprs: Vec<Expr> = Vec::new();
    let mut first_texts: Vec<String> = Vec::new();
    for direction in 0..cfg.n_directions {
        let mut planned = None;
        for attempt in 0..PLAN_BUDGET {
            let resp = provider
                .respond_validated(&request(RequestKind::Plan {
                    direction,
                    attempt,
                    rejected: first_texts.clone(),
                }))
                .map_err(|e| EvolutionError::ProviderExhausted(e.to_string()))?;
            let h = match resp.payload {
                ResponsePayload::Hypothesis(h) => h,
                _ => continue,
            };
            let Ok(expr_resp) = provider.respond_validated(&request(RequestKind::Express {
                hypothesis: h.clone(),
                attempt: 0,
                rejected: first_texts.clone(),
            })) else {
                continue;
            };
            let Some(text) = expression_payload(expr_resp.payload) else {
                continue;
            };
            let Ok(e) = parse(&text) else { continue };
            let fm = evaluate(&e, &ctx.panel).expect("non-empty panel");
            if gate(&e, &first_exprs, &fm, &[], &ctx.gate, &ctx.weights).is_accept() {
                planned = Some((h, e, text));
                break;
            }
        }
        match planned {
            Some((h, e, text)) => {
                hypotheses.push(h);
                first_exprs.push(e);
                first_texts.push(text);
            }
            None => {
                return Err(EvolutionError::ProviderExhausted(format!(
                    "no non-redundant hypothesis for direction {direction} within {PLAN_BUDGET} attempts"
                )))
            }
        }
    }
    Ok(hypotheses)
}

struct WorkflowSpec {
    id: String,
    round: usize,
    phase: Phase,
    direction_id: usize,
    parent_ids: Vec<String>,
    hypothesis: Hypothesis,
    /// Byte-frozen steps inherited from a mutation parent.
    frozen: Vec<TrajectoryStep>,
    /// Factors whose expression steps sit inside the frozen prefix.
    inherited: Vec<FactorRecord>,
    /// Expression text for the first regenerated attempt (mutation
    /// refinement or crossover graft).
    first_override: Option<String>,
}

/// Execute the workflow from (possibly frozen) steps to a terminal
/// evaluation step. Never fails: a trajectory without surviving factors
/// carries the reward sentinel.
fn run_workflow(
    spec: WorkflowSpec,
    ctx: &MiningContext,
    cfg: &EvolutionConfig,
    provider: &dyn Provider,
    pool: &FactorPool,
) -> Trajectory {
    let h = &spec.hypothesis;
    let mut steps = spec.frozen;
    let mut factors: Vec<FactorRecord> = spec
        .inherited
        .into_iter()
        .map(|mut f| {
            f.trajectory_id = spec.id.clone();
            f
        })
        .collect();

    let push = |steps: &mut Vec<TrajectoryStep>, kind, payload, outcome| -> usize {
        let index = steps.len();
        steps.push(TrajectoryStep {
            index,
            kind,
            payload,
            outcome,
        });
        index
    };

    if steps.is_empty() {
        push(
            &mut steps,
            StepKind::Hypothesis,
            json!({ "hypothesis": h }),
            StepOutcome::Ok,
        );
    }

    // Reuse a frozen description when present, otherwise request one.
    let frozen_description = steps.iter().find_map(|s| {
        (s.kind == StepKind::Description)
            .then(|| s.payload.get("description").and_then(|d| d.as_str()))
            .flatten()
            .map(str::to_string)
    });
    let description = match frozen_description {
        Some(d) => d,
        None => {
            let text = provider
                .respond(&request(RequestKind::Describe {
                    hypothesis: h.clone(),
                    expression: spec.first_override.clone(),
                }))
                .ok()
                .and_then(|r| match r.payload {
                    ResponsePayload::Text(t) => Some(t),
                    _ => None,
                })
                .unwrap_or_else(|| format!("Captures: {}.", h.statement));
            push(
                &mut steps,
                StepKind::Description,
                json!({ "description": text }),
                StepOutcome::Ok,
            );
            text
        }
    };

    // Refined actions deliberately override the hypothesis' initial
    // parameterization, so derived phases verify without it.
    let verify_hypothesis = if spec.phase == Phase::Original {
        h.clone()
    } else {
        Hypothesis {
            parameters: Default::default(),
            ..h.clone()
        }
    };

    // Redundancy context: the admitted pool plus this trajectory's own
    // accepted factors.
    let mut zoo: Vec<Expr> = pool.expressions();
    let mut zoo_values: Vec<FactorMatrixOf<f64>> = zoo
        .iter()
        .filter_map(|e| evaluate(e, &ctx.panel).ok())
        .collect();
    let mut seen_texts: Vec<String> = factors.iter().map(|f| f.expression.clone()).collect();
    for f in &factors {
        if let Ok(e) = parse(&f.expression) {
            if let Ok(fm) = evaluate(&e, &ctx.panel) {
                zoo.push(e);
                zoo_values.push(fm);
            }
        }
    }

    let mut first_override = spec.first_override;
    let attempts_done = factors.len();
    for slot in attempts_done..cfg.factors_per_hypothesis {
        // Obtain the attempt's initial expression text.
        let mut current = match first_override.take() {
            Some(text) => text,
            None => {
                match provider.respond_validated(&request(RequestKind::Express {
                    hypothesis: h.clone(),
                    attempt: slot,
                    rejected: seen_texts.clone(),
                })) {
                    Ok(resp) => match expression_payload(resp.payload) {
                        Some(text) => text,
                        None => continue,
                    },
                    Err(err) => {
                        push(
                            &mut steps,
                            StepKind::Expression,
                            json!({ "attempt": slot }),
                            StepOutcome::Failed(err.to_string()),
                        );
                        continue;
                    }
                }
            }
        };

        // Parse/gate/repair loop for this attempt.
        let mut accepted: Option<(Expr, String, usize)> = None;
        for repair_round in 0..=REPAIR_BUDGET {
            let step_kind = if repair_round == 0 {
                StepKind::Expression
            } else {
                StepKind::Repair
            };
            let (expr, canonical) = match parse(&current) {
                Ok(e) => {
                    let canonical = canonicalize(&e);
                    (e, canonical)
                }
                Err(err) => {
                    push(
                        &mut steps,
                        step_kind,
                        json!({ "attempt": slot, "expression": current }),
                        StepOutcome::Failed(format!("parse: {err}")),
                    );
                    if repair_round == REPAIR_BUDGET {
                        break;
                    }
                    match provider.respond(&request(RequestKind::Repair {
                        hypothesis: h.clone(),
                        expression: current.clone(),
                        reasons: vec![format!("parse: {err}")],
                        attempt: repair_round,
                    })) {
                        Ok(resp) => match expression_payload(resp.payload) {
                            Some(text) => {
                                current = text;
                                continue;
                            }
                            None => break,
                        },
                        Err(_) => break,
                    }
                }
            };

            let expr_step = push(
                &mut steps,
                step_kind,
                json!({ "attempt": slot, "expression": canonical }),
                StepOutcome::Ok,
            );

            let fm = evaluate(&expr, &ctx.panel).expect("non-empty panel");
            let decision = gate(&expr, &zoo, &fm, &zoo_values, &ctx.gate, &ctx.weights);
            let verdict = provider
                .respond(&request(RequestKind::Verify {
                    hypothesis: verify_hypothesis.clone(),
                    description: description.clone(),
                    expression: canonical.clone(),
                }))
                .ok()
                .and_then(|r| match r.payload {
                    ResponsePayload::Verdict(v) => Some(v),
                    _ => None,
                })
                .unwrap_or(Verdict::Pass);

            let mut reasons: Vec<String> = Vec::new();
            if let GateDecision::Reject(gate_reasons) = &decision {
                reasons.extend(gate_reasons.iter().map(|r| format!("{r:?}")));
            }
            if let Verdict::Fail { component, reason } = &verdict {
                reasons.push(format!("inconsistent {component}: {reason}"));
            }
            let outcome = if reasons.is_empty() {
                StepOutcome::Ok
            } else {
                StepOutcome::Failed(reasons.join("; "))
            };
            push(
                &mut steps,
                StepKind::GateCheck,
                json!({
                    "expression": canonical,
                    "gate": serde_json::to_value(&decision).unwrap(),
                    "verdict": serde_json::to_value(&verdict).unwrap(),
                }),
                outcome.clone(),
            );

            if matches!(outcome, StepOutcome::Ok) {
                accepted = Some((expr, canonical, expr_step));
                break;
            }
            if repair_round == REPAIR_BUDGET {
                break;
            }
            match provider.respond(&request(RequestKind::Repair {
                hypothesis: h.clone(),
                expression: canonical.clone(),
                reasons,
                attempt: repair_round,
            })) {
                Ok(resp) => match expression_payload(resp.payload) {
                    Some(text) => current = text,
                    None => break,
                },
                Err(_) => break,
            }
        }

        if let Some((expr, canonical, expr_step)) = accepted {
            let (fm, report) = ctx.evaluate_on(&expr, &ctx.split.valid);
            factors.push(FactorRecord {
                factor_id: factor_id(&canonical),
                expression: canonical.clone(),
                hypothesis_id: h.id.clone(),
                trajectory_id: spec.id.clone(),
                step_index: expr_step,
                report,
            });
            seen_texts.push(canonical);
            zoo.push(expr);
            zoo_values.push(fm);
        }
    }

    // Terminal evaluation step.
    let card = format!(
        "{} factor(s); best validation RankIC {}",
        factors.len(),
        factors
            .iter()
            .map(|f| f.report.rank_ic_mean)
            .fold(f64::NEG_INFINITY, f64::max)
    );
    let summary = provider
        .respond(&request(RequestKind::Summarize { card }))
        .ok()
        .and_then(|r| match r.payload {
            ResponsePayload::Text(t) => Some(t),
            _ => None,
        })
        .unwrap_or_default();
    let reports: Vec<&EvaluationReport> = factors.iter().map(|f| &f.report).collect();
    push(
        &mut steps,
        StepKind::Evaluation,
        json!({ "reports": reports, "summary": summary }),
        StepOutcome::Ok,
    );

    let mut trajectory = Trajectory {
        schema: TRAJECTORY_SCHEMA.to_string(),
        id: spec.id,
        round: spec.round,
        phase: spec.phase,
        direction_id: spec.direction_id,
        parent_ids: spec.parent_ids,
        steps,
        factors,
        reward: None,
    };
    trajectory.reward = reward(&trajectory, &ctx.weights, ctx.max_complexity()).ok();
    trajectory
}

/// Run one original trajectory for a planned hypothesis.
pub fn run_trajectory(
    h: &Hypothesis,
    ctx: &MiningContext,
    cfg: &EvolutionConfig,
    provider: &dyn Provider,
    pool: &FactorPool,
    id: &str,
    round: usize,
    direction_id: usize,
) -> Trajectory {
    run_workflow(
        WorkflowSpec {
            id: id.to_string(),
            round,
            phase: Phase::Original,
            direction_id,
            parent_ids: vec![],
            hypothesis: h.clone(),
            frozen: vec![],
            inherited: vec![],
            first_override: None,
        },
        ctx,
        cfg,
        provider,
        pool,
    )
}

/// The hypothesis recorded in a trajectory's first step.
pub fn hypothesis_of(t: &Trajectory) -> Option<Hypothesis> {
    t.steps
        .first()
        .and_then(|s| s.payload.get("hypothesis").cloned())
        .and_then(|v| serde_json::from_value(v).ok())
}

/// Fault localization: the earliest failed step, else the expression step
/// of the lowest-RankIC factor, else the description step.
pub fn fault_index(t: &Trajectory) -> usize {
    if let Some(s) = t
        .steps
        .iter()
        .find(|s| matches!(s.outcome, StepOutcome::Failed(_)))
    {
        return s.index;
    }
    t.factors
        .iter()
        .filter(|f| f.report.rank_ic_mean.is_finite())
        .min_by(|a, b| {
            a.report
                .rank_ic_mean
                .partial_cmp(&b.report.rank_ic_mean)
                .unwrap()
        })
        .map(|f| f.step_index)
        .unwrap_or(1.min(t.steps.len().saturating_sub(1)))
}

/// Mutation: freeze the parent's steps up to and including the fault,
/// refine the faulty action via the provider, and re-run the workflow from
/// the frozen prefix.
pub fn mutate(
    parent: &Trajectory,
    ctx: &MiningContext,
    cfg: &EvolutionConfig,
    provider: &dyn Provider,
    pool: &FactorPool,
    id: &str,
    round: usize,
) -> Trajectory {
    let h = hypothesis_of(parent).unwrap_or_else(|| Hypothesis {
        id: format!("{}-h", parent.id),
        statement: "unrecorded hypothesis".to_string(),
        observation: String::new(),
        justification: String::new(),
        domain_knowledge: String::new(),
        parameters: Default::default(),
    });
    let k = fault_index(parent);
    let frozen: Vec<TrajectoryStep> = parent.steps[..=k].to_vec();
    let inherited: Vec<FactorRecord> = parent
        .factors
        .iter()
        .filter(|f| f.step_index < k)
        .cloned()
        .collect();

    let fault_step = &parent.steps[k];
    let fault_reason = match &fault_step.outcome {
        StepOutcome::Failed(reason) => reason.clone(),
        StepOutcome::Ok => "lowest validation RankIC among the parent's factors".to_string(),
    };
    let fault_expr = fault_step
        .payload
        .get("expression")
        .and_then(|v| v.as_str())
        .map(str::to_string)
        .or_else(|| parent.best_factor().map(|f| f.expression.clone()));

    let mut refined = None;
    if let Some(expression) = fault_expr {
        for attempt in 0..3 {
            match provider.respond_validated(&request(RequestKind::Mutate {
                hypothesis: h.clone(),
                expression: expression.clone(),
                fault: fault_reason.clone(),
                attempt,
            })) {
                Ok(resp) => {
                    if let Some(text) = expression_payload(resp.payload) {
                        refined = Some(text);
                        break;
                    }
                }
                Err(_) => continue,
            }
        }
    }

    run_workflow(
        WorkflowSpec {
            id: id.to_string(),
            round,
            phase: Phase::Mutation,
            direction_id: parent.direction_id,
            parent_ids: vec![parent.id.clone()],
            hypothesis: h,
            frozen,
            inherited,
            first_override: refined,
        },
        ctx,
        cfg,
        provider,
        pool,
    )
}

/// Crossover: synthesize a child from ≥ 2 parents' cards; the provider
/// supplies the grafted first expression, and the child records the full
/// lineage.
pub fn crossover(
    parents: &[&Trajectory],
    ctx: &MiningContext,
    cfg: &EvolutionConfig,
    provider: &dyn Provider,
    pool: &FactorPool,
    id: &str,
    round: usize,
) -> Trajectory {
    assert!(parents.len() >= 2, "crossover needs at least two parents");
    let cards: Vec<ParentCard> = parents
        .iter()
        .map(|p| ParentCard {
            trajectory_id: p.id.clone(),
            hypothesis: hypothesis_of(p).unwrap_or_else(|| Hypothesis {
                id: format!("{}-h", p.id),
                statement: String::new(),
                observation: String::new(),
                justification: String::new(),
                domain_knowledge: String::new(),
                parameters: Default::default(),
            }),
            best_expression: p
                .best_factor()
                .map(|f| f.expression.clone())
                .unwrap_or_else(|| "$close".to_string()),
            rank_ic: p.best_factor().map(|f| f.report.rank_ic_mean),
        })
        .collect();

    // Child hypothesis references parents by direction, not by feature
    // vocabulary, so consistency checks bind to the realized expression.
    let h = Hypothesis {
        id: format!("x-{id}"),
        statement: format!(
            "Composite of directions {} and {}",
            parents[0].direction_id, parents[1].direction_id
        ),
        observation: format!("Inherits from trajectories {} and {}.", parents[0].id, parents[1].id),
        justification: "High-reward segments of both parents may combine into a stronger signal."
            .to_string(),
        domain_knowledge: String::new(),
        parameters: Default::default(),
    };

    let mut graft = None;
    for attempt in 0..3 {
        match provider.respond_validated(&request(RequestKind::Crossover {
            parents: cards.clone(),
            attempt,
        })) {
            Ok(resp) => {
                if let Some(text) = expression_payload(resp.payload) {
                    graft = Some(text);
                    break;
                }
            }
            Err(_) => continue,
        }
    }

    run_workflow(
        WorkflowSpec {
            id: id.to_string(),
            round,
            phase: Phase::Crossover,
            direction_id: parents[0].direction_id,
            parent_ids: parents.iter().map(|p| p.id.clone()).collect(),
            hypothesis: h,
            frozen: vec![],
            inherited: vec![],
            first_override: graft,
        },
        ctx,
        cfg,
        provider,
        pool,
    )
}

/// One completed round: its trajectories and the pool snapshot taken after
/// the round's pool_update.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Generation {
    pub round: usize,
    pub trajectories: Vec<Trajectory>,
    pub snapshot: PoolSnapshot,
}

/// Full evolutionary loop: 𝒯₀ from planning, then per iteration a
/// mutation phase over the selected parents followed by a crossover phase,
/// with a greedy pool rebuild after every round. `on_trajectory` fires for
/// every finished trajectory in order (the JSONL log hook).
pub fn evolve(
    ctx: &MiningContext,
    cfg: &EvolutionConfig,
    provider: &dyn Provider,
    mut on_trajectory: impl FnMut(&Trajectory),
) -> Result<Vec<Generation>, EvolutionError> {
    let mut all_factors: Vec<FactorRecord> = Vec::new();
    let mut generations: Vec<Generation> = Vec::new();

    let hypotheses = plan_init(ctx, cfg, provider)?;
    let mut pool = FactorPool::empty();
    let mut current: Vec<Trajectory> = Vec::new();
    for (d, h) in hypotheses.iter().enumerate() {
        let id = format!("r0-d{d}");
        let t = run_trajectory(h, ctx, cfg, provider, &pool, &id, 0, d);
        on_trajectory(&t);
        all_factors.extend(t.factors.clone());
        current.push(t);
    }
    pool = pool_update(&all_factors, &ctx.panel, pool.corr_threshold, pool.cap_ratio);
    generations.push(Generation {
        round: 0,
        trajectories: current.clone(),
        snapshot: pool_snapshot(&pool, &ctx.panel, 0),
    });

    for round in 1..=cfg.n_iterations {
        // Parent selection: top rewards of the previous generation.
        let mut ranked: Vec<&Trajectory> = current.iter().collect();
        ranked.sort_by(|a, b| {
            b.reward_key()
                .partial_cmp(&a.reward_key())
                .unwrap()
                .then(a.id.cmp(&b.id))
        });
        let take = cfg
            .parent_selection_size
            .unwrap_or(ranked.len().div_ceil(2))
            .max(2)
            .min(ranked.len());
        let selected: Vec<&Trajectory> = ranked[..take].to_vec();

        let mut next: Vec<Trajectory> = Vec::new();
        for (i, parent) in selected.iter().enumerate() {
            let id = format!("r{round}-m{i}");
            let t = mutate(parent, ctx, cfg, provider, &pool, &id, round);
            on_trajectory(&t);
            all_factors.extend(t.factors.clone());
            next.push(t);
        }
        for (j, pair) in selected.chunks(2).enumerate() {
            if pair.len() < 2 {
                break;
            }
            let id = format!("r{round}-x{j}");
            let t = crossover(&[pair[0], pair[1]], ctx, cfg, provider, &pool, &id, round);
            on_trajectory(&t);
            all_factors.extend(t.factors.clone());
            next.push(t);
        }

        pool = pool_update(&all_factors, &ctx.panel, pool.corr_threshold, pool.cap_ratio);
        generations.push(Generation {
            round,
            trajectories: next.clone(),
            snapshot: pool_snapshot(&pool, &ctx.panel, round),
        });
        current = next;
    }
    Ok(generations)
}
