//! Structural controls: complexity score, AST redundancy via the largest
//! common full subtree, value-level correlation, and the accept/reject gate.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::{validate_constraints, ConstraintConfig, ConstraintViolation, Expr};
use crate::eval::FactorMatrixOf;
use crate::num::Scalar;

/// Weights of the complexity score and the reward regularization strength.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComplexityWeights {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub lambda: f64,
}

impl Default for ComplexityWeights {
    fn default() -> Self {
        ComplexityWeights {
            alpha1: 1.0,
            alpha2: 1.0,
            alpha3: 1.0,
            lambda: 0.05,
        }
    }
}

/// Complexity: α₁·SL + α₂·PC + α₃·ln(1 + |F|).
pub fn complexity(e: &Expr, w: &ComplexityWeights) -> f64 {
    let meta = e.meta();
    w.alpha1 * meta.symbol_length as f64
        + w.alpha2 * meta.param_count as f64
        + w.alpha3 * (1.0 + meta.base_features.len() as f64).ln()
}

/// Node label for isomorphism matching: operator name for applications,
/// field for feature leaves, a single shared label for constant leaves.
/// Parameter and constant values never participate.
fn label(e: &Expr) -> &str {
    match e {
        Expr::Feature(f) => f.name(),
        Expr::Const(_) => "const",
        Expr::Apply { op, .. } => op.name,
    }
}

/// Whether the full subtrees rooted at `a` and `b` are isomorphic:
/// identical labels with identically ordered, pairwise-isomorphic children.
fn full_subtree_equal(a: &Expr, b: &Expr) -> bool {
    if label(a) != label(b) {
        return false;
    }
    match (a, b) {
        (Expr::Apply { children: ca, .. }, Expr::Apply { children: cb, .. }) => {
            ca.len() == cb.len()
                && ca.iter().zip(cb.iter()).all(|(x, y)| full_subtree_equal(x, y))
        }
        _ => true,
    }
}

/// Size of the largest common isomorphic full subtree: the maximum node
/// count over all (root-in-a, root-in-b) pairs whose full subtrees match.
pub fn subtree_similarity(a: &Expr, b: &Expr) -> usize {
    let mut best = 0;
    for na in a.nodes() {
        let size = na.node_count();
        if size <= best {
            continue;
        }
        for nb in b.nodes() {
            if nb.node_count() == size && full_subtree_equal(na, nb) {
                best = size;
                break;
            }
        }
    }
    best
}

/// Maximum similarity of `e` against every member of the zoo; 0 on empty.
pub fn max_similarity(e: &Expr, zoo: &[Expr]) -> usize {
    zoo.iter().map(|z| subtree_similarity(e, z)).max().unwrap_or(0)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorrelationError {
    #[error("fewer than {min} joint-valid cells ({got})")]
    InsufficientOverlap { got: usize, min: usize },
}

/// Pearson correlation over all cells valid in both matrices, flattened.
pub fn value_correlation<F: Scalar>(
    f: &FactorMatrixOf<F>,
    g: &FactorMatrixOf<F>,
) -> Result<F, CorrelationError> {
    assert_eq!(f.values.shape(), g.values.shape(), "panel shape mismatch");
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let (n, t) = f.values.shape();
    for i in 0..n {
        for c in 0..t {
            let (a, b) = (f.values.get(i, c), g.values.get(i, c));
            if a.is_valid() && b.is_valid() {
                xs.push(a);
                ys.push(b);
            }
        }
    }
    if xs.len() < 3 {
        return Err(CorrelationError::InsufficientOverlap {
            got: xs.len(),
            min: 3,
        });
    }
    // Degenerate (zero-variance) overlap is treated as uncorrelated.
    Ok(crate::matrix::pearson(&xs, &ys).unwrap_or_else(F::zero))
}

/// Structural-similarity budget: absolute node count, or a fraction of the
/// candidate's own node count.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SimilarityLimit {
    Nodes(usize),
    FractionOfCandidate(f64),
}

impl SimilarityLimit {
    fn budget(&self, candidate_nodes: usize) -> f64 {
        match self {
            SimilarityLimit::Nodes(n) => *n as f64,
            SimilarityLimit::FractionOfCandidate(f) => f * candidate_nodes as f64,
        }
    }
}

/// Gate thresholds. Each control can be disabled independently for
/// ablation runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateConfig {
    pub constraints: Option<ConstraintConfig>,
    pub max_complexity: Option<f64>,
    pub max_similarity: Option<SimilarityLimit>,
    /// Candidates must keep |corr| strictly below this against every pool
    /// factor.
    pub max_abs_correlation: Option<f64>,
}

impl Default for GateConfig {
    fn default() -> Self {
        let constraints = ConstraintConfig::default();
        // A budget consistent with the structural constraints under unit weights.
        let max_complexity = constraints.max_symbol_length as f64
            + constraints.max_symbol_length as f64 * constraints.max_free_arg_ratio
            + (1.0 + constraints.max_base_features as f64).ln();
        GateConfig {
            constraints: Some(constraints),
            max_complexity: Some(max_complexity),
            max_similarity: Some(SimilarityLimit::FractionOfCandidate(0.6)),
            max_abs_correlation: Some(0.7),
        }
    }
}

impl GateConfig {
    pub fn disabled() -> Self {
        GateConfig {
            constraints: None,
            max_complexity: None,
            max_similarity: None,
            max_abs_correlation: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateReason {
    Constraints(Vec<ConstraintViolation>),
    Complexity { score: f64, max: f64 },
    StructuralRedundancy { similarity: usize, budget: f64 },
    ValueRedundancy { correlation: f64, max: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GateDecision {
    Accept,
    Reject(Vec<GateReason>),
}

impl GateDecision {
    pub fn is_accept(&self) -> bool {
        matches!(self, GateDecision::Accept)
    }
}

/// Evaluate every enabled control; Reject lists all violated ones.
pub fn gate<F: Scalar>(
    e: &Expr,
    zoo: &[Expr],
    fm: &FactorMatrixOf<F>,
    pool_matrices: &[FactorMatrixOf<F>],
    cfg: &GateConfig,
    w: &ComplexityWeights,
) -> GateDecision {
    let mut reasons = Vec::new();

    if let Some(constraints) = &cfg.constraints {
        let violations = validate_constraints(e, constraints);
        if !violations.is_empty() {
            reasons.push(GateReason::Constraints(violations));
        }
    }
    if let Some(max) = cfg.max_complexity {
        let score = complexity(e, w);
        if score > max {
            reasons.push(GateReason::Complexity { score, max });
        }
    }
    if let Some(limit) = &cfg.max_similarity {
        let similarity = max_similarity(e, zoo);
        let budget = limit.budget(e.node_count());
        if (similarity as f64) > budget {
            reasons.push(GateReason::StructuralRedundancy { similarity, budget });
        }
    }
    if let Some(max) = cfg.max_abs_correlation {
        for pm in pool_matrices {
            // Insufficient overlap is treated as non-redundant.
            if let Ok(corr) = value_correlation(fm, pm) {
                let corr = corr.to_f64().unwrap_or(0.0);
                if corr.abs() >= max {
                    reasons.push(GateReason::ValueRedundancy {
                        correlation: corr,
                        max,
                    });
                    break;
                }
            }
        }
    }

    if reasons.is_empty() {
        GateDecision::Accept
    } else {
        GateDecision::Reject(reasons)
    }
}
