//! The factor-expression language: grammar, operator library, AST,
//! canonical printing, and structural constraints.

pub mod canon;
pub mod ops;
pub mod parser;

pub use canon::canonicalize;
pub use ops::{OpCategory, OperatorSpec, OutputKind, ParamKind, ParamValue};
pub use parser::parse;

use std::fmt;

use thiserror::Error;

/// The six raw feature leaves. No other leaf feature is parseable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FeatureField {
    Open,
    High,
    Low,
    Close,
    Volume,
    Vwap,
}

impl FeatureField {
    pub const ALL: [FeatureField; 6] = [
        FeatureField::Open,
        FeatureField::High,
        FeatureField::Low,
        FeatureField::Close,
        FeatureField::Volume,
        FeatureField::Vwap,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            FeatureField::Open => "open",
            FeatureField::High => "high",
            FeatureField::Low => "low",
            FeatureField::Close => "close",
            FeatureField::Volume => "volume",
            FeatureField::Vwap => "vwap",
        }
    }

    pub fn from_name(name: &str) -> Option<FeatureField> {
        let lower = name.to_ascii_lowercase();
        FeatureField::ALL.into_iter().find(|f| f.name() == lower)
    }

    /// Index into a panel's feature axis.
    pub fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for FeatureField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A factor expression tree. Parameters (windows, scalars) are node
/// attributes, not children; node counting and subtree matching see only
/// feature leaves, constant leaves, and operator applications.
#[derive(Debug, Clone)]
pub enum Expr {
    Feature(FeatureField),
    Const(f64),
    Apply {
        op: &'static OperatorSpec,
        children: Vec<Expr>,
        params: Vec<ParamValue>,
    },
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Expr::Feature(a), Expr::Feature(b)) => a == b,
            (Expr::Const(a), Expr::Const(b)) => a == b,
            (
                Expr::Apply {
                    op: oa,
                    children: ca,
                    params: pa,
                },
                Expr::Apply {
                    op: ob,
                    children: cb,
                    params: pb,
                },
            ) => oa.name == ob.name && pa == pb && ca == cb,
            _ => false,
        }
    }
}

impl Expr {
    pub fn apply(op: &'static OperatorSpec, children: Vec<Expr>, params: Vec<ParamValue>) -> Expr {
        debug_assert_eq!(children.len(), op.arity);
        debug_assert_eq!(params.len(), op.params.len());
        Expr::Apply {
            op,
            children,
            params,
        }
    }

    /// All nodes in depth-first preorder; the position in the returned list
    /// is the node's stable id within this tree.
    pub fn nodes(&self) -> Vec<&Expr> {
        let mut out = Vec::new();
        fn walk<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
            out.push(e);
            if let Expr::Apply { children, .. } = e {
                for c in children {
                    walk(c, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Number of tree nodes (parameters excluded).
    pub fn node_count(&self) -> usize {
        self.nodes().len()
    }

    pub fn output_kind(&self) -> OutputKind {
        match self {
            Expr::Feature(_) | Expr::Const(_) => OutputKind::Numeric,
            Expr::Apply { op, .. } => op.output,
        }
    }

    /// Set of feature leaves used by the expression.
    pub fn base_features(&self) -> std::collections::BTreeSet<FeatureField> {
        self.nodes()
            .into_iter()
            .filter_map(|n| match n {
                Expr::Feature(f) => Some(*f),
                _ => None,
            })
            .collect()
    }

    /// Free-parameter count: parameter values on operator nodes plus
    /// constant leaves (constants are tunable too).
    pub fn param_count(&self) -> usize {
        self.nodes()
            .into_iter()
            .map(|n| match n {
                Expr::Const(_) => 1,
                Expr::Apply { params, .. } => params.len(),
                Expr::Feature(_) => 0,
            })
            .sum()
    }

    pub fn meta(&self) -> ExprMeta {
        let canonical = canonicalize(self);
        ExprMeta {
            symbol_length: canonical.len(),
            param_count: self.param_count(),
            base_features: self.base_features(),
            node_count: self.node_count(),
            canonical_text: canonical,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonicalize(self))
    }
}

/// Derived per-expression measurements backing the complexity score.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprMeta {
    pub canonical_text: String,
    pub symbol_length: usize,
    pub param_count: usize,
    pub base_features: std::collections::BTreeSet<FeatureField>,
    pub node_count: usize,
}

/// Errors from parsing and validation.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DslError {
    #[error("syntax error at position {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("operator {op} takes {expected} argument(s), got {got}")]
    Arity {
        op: String,
        expected: usize,
        got: usize,
    },
    #[error("unknown operator {0}")]
    UnknownOperator(String),
    #[error("unknown feature ${0}")]
    UnknownFeature(String),
    #[error("bad parameter {slot} for {op}: {reason}")]
    BadParameter {
        op: String,
        slot: String,
        reason: String,
    },
}

/// Structural constraint thresholds for generated factors.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ConstraintConfig {
    /// Maximum canonical-text length.
    pub max_symbol_length: usize,
    /// Maximum number of distinct base features.
    pub max_base_features: usize,
    /// Maximum free-argument ratio (param-count / node-count), inclusive.
    pub max_free_arg_ratio: f64,
}

impl Default for ConstraintConfig {
    fn default() -> Self {
        ConstraintConfig {
            max_symbol_length: 250,
            max_base_features: 6,
            max_free_arg_ratio: 0.5,
        }
    }
}

/// A violated structural constraint. Violations are data, not errors.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum ConstraintViolation {
    SymbolLength { length: usize, max: usize },
    BaseFeatures { count: usize, max: usize },
    FreeArgRatio { ratio: f64, max: f64 },
}

/// Returns every violated constraint; an empty list means pass.
pub fn validate_constraints(e: &Expr, cfg: &ConstraintConfig) -> Vec<ConstraintViolation> {
    let meta = e.meta();
    let mut violations = Vec::new();
    if meta.symbol_length > cfg.max_symbol_length {
        violations.push(ConstraintViolation::SymbolLength {
            length: meta.symbol_length,
            max: cfg.max_symbol_length,
        });
    }
    if meta.base_features.len() > cfg.max_base_features {
        violations.push(ConstraintViolation::BaseFeatures {
            count: meta.base_features.len(),
            max: cfg.max_base_features,
        });
    }
    let ratio = meta.param_count as f64 / meta.node_count as f64;
    if ratio > cfg.max_free_arg_ratio {
        violations.push(ConstraintViolation::FreeArgRatio {
            ratio,
            max: cfg.max_free_arg_ratio,
        });
    }
    violations
}
