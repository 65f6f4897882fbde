//! Trajectory-level evolutionary search: the trajectory/step data model,
//! terminal reward, the global factor pool, and (in [`engine`]) the
//! planning, mutation, crossover, and iteration scheduler.

pub mod engine;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dsl::{parse, Expr};
use crate::eval::{evaluate, FactorMatrixOf};
use crate::metrics::EvaluationReport;
use crate::panel::PanelOf;
use crate::structure::{complexity, value_correlation, ComplexityWeights};

pub use engine::{evolve, plan_init, run_trajectory, Generation, MiningContext, SplitIndices};

/// Log schema identifier written into every persisted trajectory.
pub const TRAJECTORY_SCHEMA: &str = "trajectory.v1";

/// A candidate market mechanism driving one exploration direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    pub id: String,
    pub statement: String,
    pub observation: String,
    pub justification: String,
    pub domain_knowledge: String,
    /// Named numeric parameters (window lengths and similar).
    pub parameters: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepKind {
    Hypothesis,
    Description,
    Expression,
    Repair,
    GateCheck,
    Evaluation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum StepOutcome {
    Ok,
    Failed(String),
}

/// One recorded state/action of a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStep {
    pub index: usize,
    pub kind: StepKind,
    pub payload: serde_json::Value,
    pub outcome: StepOutcome,
}

impl TrajectoryStep {
    /// Canonical byte representation used by the prefix-freeze invariant
    /// (serde_json sorts object keys, so this is stable).
    pub fn canonical_bytes(&self) -> String {
        serde_json::to_string(self).expect("step serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Original,
    Mutation,
    Crossover,
}

/// One evaluated factor mined by a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorRecord {
    /// Content hash of the canonical expression text.
    pub factor_id: String,
    pub expression: String,
    pub hypothesis_id: String,
    pub trajectory_id: String,
    /// Index of the expression step that produced this factor.
    pub step_index: usize,
    pub report: EvaluationReport,
}

/// Stable content id for a canonical expression.
pub fn factor_id(canonical_text: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical_text.as_bytes());
    crate::providers::hex(&h.finalize())[..16].to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub schema: String,
    pub id: String,
    pub round: usize,
    pub phase: Phase,
    pub direction_id: usize,
    /// Empty for original, one for mutation, ≥ 2 for crossover.
    pub parent_ids: Vec<String>,
    pub steps: Vec<TrajectoryStep>,
    pub factors: Vec<FactorRecord>,
    /// None is the −∞ sentinel for trajectories with no surviving factor.
    pub reward: Option<f64>,
}

impl Trajectory {
    /// The trajectory's best factor by validation RankIC.
    pub fn best_factor(&self) -> Option<&FactorRecord> {
        self.factors
            .iter()
            .filter(|f| f.report.rank_ic_mean.is_finite())
            .max_by(|a, b| {
                a.report
                    .rank_ic_mean
                    .partial_cmp(&b.report.rank_ic_mean)
                    .unwrap()
            })
    }

    /// Reward ordering key; the None sentinel ranks below everything.
    pub fn reward_key(&self) -> f64 {
        self.reward.unwrap_or(f64::NEG_INFINITY)
    }
}

#[derive(Debug, Error)]
pub enum EvolutionError {
    #[error("trajectory has no evaluated factor")]
    NoEvaluatedFactor,
    #[error("provider exhausted: {0}")]
    ProviderExhausted(String),
    #[error("data error: {0}")]
    Data(String),
}

/// Terminal reward R(τ) = 𝓛 − λ·ℛ, where 𝓛 is the best factor's mean
/// validation RankIC and ℛ its complexity normalized against
/// `max_complexity`.
pub fn reward(
    t: &Trajectory,
    w: &ComplexityWeights,
    max_complexity: f64,
) -> Result<f64, EvolutionError> {
    let best = t.best_factor().ok_or(EvolutionError::NoEvaluatedFactor)?;
    let expr = parse(&best.expression).map_err(|e| EvolutionError::Data(e.to_string()))?;
    let normalized = complexity(&expr, w) / max_complexity;
    Ok(best.report.rank_ic_mean - w.lambda * normalized)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub n_directions: usize,
    pub n_iterations: usize,
    pub factors_per_hypothesis: usize,
    /// Parents selected per iteration; defaults to half the previous
    /// generation (minimum 2).
    pub parent_selection_size: Option<usize>,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        EvolutionConfig {
            n_directions: 10,
            n_iterations: 5,
            factors_per_hypothesis: 3,
            parent_selection_size: None,
            lambda: 0.05,
            seed: 1,
        }
    }
}

/// The alpha zoo: mutually low-correlation validated factors, rebuilt
/// greedily after every iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FactorPool {
    pub admitted: Vec<FactorRecord>,
    pub corr_threshold: f64,
    pub cap_ratio: f64,
    pub total_mined: usize,
}

impl FactorPool {
    pub fn empty() -> Self {
        FactorPool {
            admitted: Vec::new(),
            corr_threshold: 0.7,
            cap_ratio: 0.5,
            total_mined: 0,
        }
    }

    pub fn best_rank_ic(&self) -> Option<f64> {
        self.admitted
            .iter()
            .map(|f| f.report.rank_ic_mean)
            .fold(None, |acc, v| Some(acc.map_or(v, |a: f64| a.max(v))))
    }

    pub fn expressions(&self) -> Vec<Expr> {
        self.admitted
            .iter()
            .filter_map(|f| parse(&f.expression).ok())
            .collect()
    }
}

/// Rebuild the pool greedily from scratch: candidates sorted by RankIC
/// descending (ties by factor-id), admitted while below the cap and while
/// |corr| with every already-admitted factor stays under the threshold.
pub fn pool_update(
    all_factors: &[FactorRecord],
    panel: &PanelOf<f64>,
    corr_threshold: f64,
    cap_ratio: f64,
) -> FactorPool {
    // Deduplicate by factor id (same id ⇒ same expression text).
    let mut seen = std::collections::BTreeSet::new();
    let mut candidates: Vec<&FactorRecord> = all_factors
        .iter()
        .filter(|f| seen.insert(f.factor_id.clone()) && f.report.rank_ic_mean.is_finite())
        .collect();
    candidates.sort_by(|a, b| {
        b.report
            .rank_ic_mean
            .partial_cmp(&a.report.rank_ic_mean)
            .unwrap()
            .then(a.factor_id.cmp(&b.factor_id))
    });

    let total = seen.len();
    let cap = (cap_ratio * total as f64).floor() as usize;
    let mut admitted: Vec<FactorRecord> = Vec::new();
    let mut admitted_values: Vec<FactorMatrixOf<f64>> = Vec::new();
    for cand in candidates {
        if admitted.len() >= cap {
            break;
        }
        let expr = match parse(&cand.expression) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let fm = match evaluate(&expr, panel) {
            Ok(fm) => fm,
            Err(_) => continue,
        };
        let redundant = admitted_values.iter().any(|existing| {
            value_correlation(&fm, existing)
                .map(|c| c.abs() >= corr_threshold)
                .unwrap_or(false)
        });
        if !redundant {
            admitted.push(cand.clone());
            admitted_values.push(fm);
        }
    }
    FactorPool {
        admitted,
        corr_threshold,
        cap_ratio,
        total_mined: total,
    }
}

/// Pool snapshot with correlation evidence, for the JSON external format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolSnapshot {
    pub round: usize,
    pub pool: FactorPool,
    /// Pairwise value correlations among admitted factors (diagonal 1).
    pub correlations: Vec<Vec<f64>>,
}

pub fn pool_snapshot(pool: &FactorPool, panel: &PanelOf<f64>, round: usize) -> PoolSnapshot {
    let matrices: Vec<Option<FactorMatrixOf<f64>>> = pool
        .admitted
        .iter()
        .map(|f| parse(&f.expression).ok().and_then(|e| evaluate(&e, panel).ok()))
        .collect();
    let n = matrices.len();
    let mut correlations = vec![vec![f64::NAN; n]; n];
    for i in 0..n {
        for j in 0..n {
            correlations[i][j] = if i == j {
                1.0
            } else {
                match (&matrices[i], &matrices[j]) {
                    (Some(a), Some(b)) => value_correlation(a, b).unwrap_or(f64::NAN),
                    _ => f64::NAN,
                }
            };
        }
    }
    PoolSnapshot {
        round,
        pool: pool.clone(),
        correlations,
    }
}
