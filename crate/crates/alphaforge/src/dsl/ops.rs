//! The operator library: one spec per supported operator.

use std::collections::HashMap;
use std::sync::OnceLock;

/// Operator family, used for documentation and for category-preserving
/// rewrites in the mutation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpCategory {
    TimeSeries,
    CrossSectional,
    Mathematical,
    Technical,
    Logical,
    Auxiliary,
}

/// What an operator produces. Booleans are represented numerically (1.0/0.0)
/// at evaluation time; the kind is used for graft-site compatibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    Numeric,
    Boolean,
}

/// Kind of a parameter slot. Windows are strictly positive integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Window,
    Scalar,
    Threshold,
}

/// A concrete parameter value attached to an operator node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamValue {
    Window(usize),
    Real(f64),
}

impl ParamValue {
    pub fn as_window(&self) -> Option<usize> {
        match self {
            ParamValue::Window(w) => Some(*w),
            ParamValue::Real(_) => None,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            ParamValue::Window(w) => Some(*w as f64),
            ParamValue::Real(r) => Some(*r),
        }
    }
}

/// Static description of one operator in the library.
#[derive(Debug)]
pub struct OperatorSpec {
    pub name: &'static str,
    pub category: OpCategory,
    /// Number of expression children.
    pub arity: usize,
    /// Named parameter slots, in call order after the children.
    pub params: &'static [(&'static str, ParamKind)],
    pub output: OutputKind,
    /// Infix symbol and precedence for the arithmetic operators
    /// (higher binds tighter); None prints as a function call.
    pub infix: Option<(&'static str, u8)>,
}

use OpCategory::*;
use OutputKind::*;
use ParamKind::*;

const W: &[(&str, ParamKind)] = &[("window", Window)];
const NONE: &[(&str, ParamKind)] = &[];

macro_rules! op {
    ($name:expr, $cat:expr, $arity:expr, $params:expr, $out:expr) => {
        OperatorSpec {
            name: $name,
            category: $cat,
            arity: $arity,
            params: $params,
            output: $out,
            infix: None,
        }
    };
    ($name:expr, $cat:expr, $arity:expr, $params:expr, $out:expr, $sym:expr, $prec:expr) => {
        OperatorSpec {
            name: $name,
            category: $cat,
            arity: $arity,
            params: $params,
            output: $out,
            infix: Some(($sym, $prec)),
        }
    };
}

/// Every operator the grammar accepts.
pub static OPERATORS: &[OperatorSpec] = &[
    // Infix arithmetic (precedence: + - at 1, * / at 2, unary - at 3).
    op!("ADD", Mathematical, 2, NONE, Numeric, "+", 1),
    op!("SUB", Mathematical, 2, NONE, Numeric, "-", 1),
    op!("MUL", Mathematical, 2, NONE, Numeric, "*", 2),
    op!("DIV", Mathematical, 2, NONE, Numeric, "/", 2),
    op!("NEG", Mathematical, 1, NONE, Numeric, "-", 3),
    // Time-series: rolling statistics along the time axis per instrument.
    op!("DELTA", TimeSeries, 1, W, Numeric),
    op!("DELAY", TimeSeries, 1, W, Numeric),
    op!("TS_MEAN", TimeSeries, 1, W, Numeric),
    op!("TS_STD", TimeSeries, 1, W, Numeric),
    op!("TS_VAR", TimeSeries, 1, W, Numeric),
    op!("TS_MAX", TimeSeries, 1, W, Numeric),
    op!("TS_MIN", TimeSeries, 1, W, Numeric),
    op!("TS_SUM", TimeSeries, 1, W, Numeric),
    op!("TS_RANK", TimeSeries, 1, W, Numeric),
    op!("TS_CORR", TimeSeries, 2, W, Numeric),
    op!("TS_COVARIANCE", TimeSeries, 2, W, Numeric),
    op!("TS_ARGMAX", TimeSeries, 1, W, Numeric),
    op!("TS_ARGMIN", TimeSeries, 1, W, Numeric),
    op!("TS_SKEW", TimeSeries, 1, W, Numeric),
    op!("TS_KURT", TimeSeries, 1, W, Numeric),
    op!("TS_PCTCHANGE", TimeSeries, 1, W, Numeric),
    op!("TS_ZSCORE", TimeSeries, 1, W, Numeric),
    op!(
        "TS_QUANTILE",
        TimeSeries,
        1,
        &[("window", Window), ("q", Threshold)],
        Numeric
    ),
    // Cross-sectional: statistics across instruments per date.
    op!("RANK", CrossSectional, 1, NONE, Numeric),
    op!("ZSCORE", CrossSectional, 1, NONE, Numeric),
    op!("SCALE", CrossSectional, 1, NONE, Numeric),
    op!("MEAN", CrossSectional, 1, NONE, Numeric),
    op!("STD", CrossSectional, 1, NONE, Numeric),
    op!("MEDIAN", CrossSectional, 1, NONE, Numeric),
    op!("MAX", CrossSectional, 1, NONE, Numeric),
    op!("MIN", CrossSectional, 1, NONE, Numeric),
    op!("SKEW", CrossSectional, 1, NONE, Numeric),
    op!("KURT", CrossSectional, 1, NONE, Numeric),
    // Element-wise mathematical functions.
    op!("ABS", Mathematical, 1, NONE, Numeric),
    op!("SIGN", Mathematical, 1, NONE, Numeric),
    op!("LOG", Mathematical, 1, NONE, Numeric),
    op!("EXP", Mathematical, 1, NONE, Numeric),
    op!("SQRT", Mathematical, 1, NONE, Numeric),
    op!("POW", Mathematical, 1, &[("exponent", Scalar)], Numeric),
    op!("INV", Mathematical, 1, NONE, Numeric),
    // Technical indicators.
    op!("SMA", Technical, 1, W, Numeric),
    op!("EMA", Technical, 1, W, Numeric),
    op!("WMA", Technical, 1, W, Numeric),
    op!(
        "MACD",
        Technical,
        1,
        &[("fast", Window), ("slow", Window)],
        Numeric
    ),
    op!("RSI", Technical, 1, W, Numeric),
    op!(
        "BB_UPPER",
        Technical,
        1,
        &[("window", Window), ("k", Scalar)],
        Numeric
    ),
    op!(
        "BB_LOWER",
        Technical,
        1,
        &[("window", Window), ("k", Scalar)],
        Numeric
    ),
    op!("DECAYLINEAR", Technical, 1, W, Numeric),
    op!("REGBETA", Technical, 2, W, Numeric),
    op!("REGRESI", Technical, 2, W, Numeric),
    // Comparison and conditional.
    op!("GT", Logical, 2, NONE, Boolean),
    op!("LT", Logical, 2, NONE, Boolean),
    op!("GE", Logical, 2, NONE, Boolean),
    op!("LE", Logical, 2, NONE, Boolean),
    op!("AND", Logical, 2, NONE, Boolean),
    op!("OR", Logical, 2, NONE, Boolean),
    op!("WHERE", Logical, 3, NONE, Numeric),
    // Auxiliary helpers.
    op!("COUNT", Auxiliary, 1, W, Numeric),
    op!("SUMIF", Auxiliary, 2, W, Numeric),
    op!("FILTER", Auxiliary, 2, NONE, Numeric),
    op!("PROD", Auxiliary, 1, W, Numeric),
    op!("HIGHDAY", Auxiliary, 1, W, Numeric),
    op!("LOWDAY", Auxiliary, 1, W, Numeric),
];

/// Look up an operator by (case-insensitive) name.
pub fn lookup(name: &str) -> Option<&'static OperatorSpec> {
    static INDEX: OnceLock<HashMap<String, &'static OperatorSpec>> = OnceLock::new();
    let index = INDEX.get_or_init(|| {
        OPERATORS
            .iter()
            .map(|spec| (spec.name.to_string(), spec))
            .collect()
    });
    index.get(&name.to_ascii_uppercase()).copied()
}

/// Operators usable in the function-call position of the grammar
/// (everything except the infix/unary arithmetic forms).
pub fn callable() -> impl Iterator<Item = &'static OperatorSpec> {
    OPERATORS.iter().filter(|spec| spec.infix.is_none())
}
