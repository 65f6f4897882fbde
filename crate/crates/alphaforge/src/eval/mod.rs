//! Expression interpreter: evaluates an AST over a panel into an N×T
//! factor matrix. These definitions are the normative operator semantics;
//! the naive per-cell reference evaluator in the integration tests must
//! agree with them exactly.

pub mod kernels;

use thiserror::Error;

use crate::dsl::{Expr, ParamValue};
use crate::matrix::{average_ranks, Matrix};
use crate::num::Scalar;
use crate::panel::PanelOf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("panel has no instruments or no dates")]
    EmptyPanel,
}

/// The evaluated values of one expression over one panel.
#[derive(Debug, Clone)]
pub struct FactorMatrixOf<F: Scalar> {
    pub values: Matrix<F>,
    /// Canonical text of the evaluated expression.
    pub expr_text: String,
}

pub fn evaluate<F: Scalar>(e: &Expr, p: &PanelOf<F>) -> Result<FactorMatrixOf<F>, EvalError> {
    if p.n_symbols() == 0 || p.n_dates() == 0 {
        return Err(EvalError::EmptyPanel);
    }
    Ok(FactorMatrixOf {
        values: eval_node(e, p),
        expr_text: crate::dsl::canonicalize(e),
    })
}

/// Batch evaluation; per-expression errors never abort the batch.
pub fn evaluate_many<F: Scalar>(
    exprs: &[Expr],
    p: &PanelOf<F>,
) -> Vec<Result<FactorMatrixOf<F>, EvalError>> {
    exprs.iter().map(|e| evaluate(e, p)).collect()
}

fn eval_node<F: Scalar>(e: &Expr, p: &PanelOf<F>) -> Matrix<F> {
    let (n, t) = (p.n_symbols(), p.n_dates());
    match e {
        Expr::Feature(f) => p.feature(*f).clone(),
        Expr::Const(v) => {
            let mut m = Matrix::invalid(n, t);
            let fv = F::from_f64_c(*v);
            for i in 0..n {
                for c in 0..t {
                    m.set(i, c, fv);
                }
            }
            m
        }
        Expr::Apply {
            op,
            children,
            params,
        } => {
            let kids: Vec<Matrix<F>> = children.iter().map(|c| eval_node(c, p)).collect();
            apply_op(op.name, &kids, params)
        }
    }
}

fn window(params: &[ParamValue], idx: usize) -> usize {
    params[idx].as_window().expect("window parameter")
}

fn real<F: Scalar>(params: &[ParamValue], idx: usize) -> F {
    F::from_f64_c(params[idx].as_real().expect("real parameter"))
}

fn apply_op<F: Scalar>(name: &str, kids: &[Matrix<F>], params: &[ParamValue]) -> Matrix<F> {
    use kernels as k;
    match name {
        // arithmetic
        "ADD" => kids[0].zip(&kids[1], |a, b| a + b),
        "SUB" => kids[0].zip(&kids[1], |a, b| a - b),
        "MUL" => kids[0].zip(&kids[1], |a, b| a * b),
        "DIV" => kids[0].zip(&kids[1], |a, b| a / b),
        "NEG" => kids[0].map(|a| -a),
        // time-series
        "DELTA" => shift_combine(&kids[0], window(params, 0), |now, then| now - then),
        "DELAY" => shift_combine(&kids[0], window(params, 0), |_, then| then),
        "TS_PCTCHANGE" => shift_combine(&kids[0], window(params, 0), |now, then| now / then - F::one()),
        "TS_MEAN" | "SMA" => per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::mean)),
        "TS_SUM" => per_row(&kids[0], |x| {
            k::rolling(x, window(params, 0), |w| {
                w.iter().fold(F::zero(), |a, &b| a + b)
            })
        }),
        "TS_STD" => per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::sample_std)),
        "TS_VAR" => per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::sample_var)),
        "TS_MAX" => per_row(&kids[0], |x| {
            k::rolling(x, window(params, 0), |w| {
                w.iter().fold(F::neg_infinity(), |a, &b| a.max(b))
            })
        }),
        "TS_MIN" => per_row(&kids[0], |x| {
            k::rolling(x, window(params, 0), |w| {
                w.iter().fold(F::infinity(), |a, &b| a.min(b))
            })
        }),
        "TS_SKEW" => per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::sample_skew)),
        "TS_KURT" => per_row(&kids[0], |x| {
            k::rolling(x, window(params, 0), k::sample_excess_kurt)
        }),
        "TS_RANK" => per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::ts_rank_last)),
        "TS_ZSCORE" => per_row(&kids[0], |x| {
            k::rolling(x, window(params, 0), |w| {
                let s = k::sample_std(w);
                if !s.is_valid() || s <= F::zero() {
                    F::invalid()
                } else {
                    (w[w.len() - 1] - k::mean(w)) / s
                }
            })
        }),
        "TS_QUANTILE" => {
            let q: F = real(params, 1);
            per_row(&kids[0], |x| {
                k::rolling(x, window(params, 0), |w| k::quantile(w, q))
            })
        }
        "TS_ARGMAX" | "HIGHDAY" => {
            per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::argmax_offset))
        }
        "TS_ARGMIN" | "LOWDAY" => {
            per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::argmin_offset))
        }
        "TS_CORR" => per_row2(&kids[0], &kids[1], |x, y| {
            k::rolling2(x, y, window(params, 0), k::window_corr)
        }),
        "TS_COVARIANCE" => per_row2(&kids[0], &kids[1], |x, y| {
            k::rolling2(x, y, window(params, 0), k::window_cov)
        }),
        // cross-sectional
        "RANK" => per_col(&kids[0], cs_rank),
        "ZSCORE" => per_col(&kids[0], cs_zscore),
        "SCALE" => per_col(&kids[0], cs_scale),
        "MEAN" => per_col(&kids[0], |col| cs_broadcast(col, k::mean)),
        "STD" => per_col(&kids[0], |col| cs_broadcast(col, k::sample_std)),
        "MEDIAN" => per_col(&kids[0], |col| cs_broadcast(col, k::median)),
        "MAX" => per_col(&kids[0], |col| {
            cs_broadcast(col, |v| v.iter().fold(F::neg_infinity(), |a, &b| a.max(b)))
        }),
        "MIN" => per_col(&kids[0], |col| {
            cs_broadcast(col, |v| v.iter().fold(F::infinity(), |a, &b| a.min(b)))
        }),
        "SKEW" => per_col(&kids[0], |col| cs_broadcast(col, k::sample_skew)),
        "KURT" => per_col(&kids[0], |col| cs_broadcast(col, k::sample_excess_kurt)),
        // element-wise math
        "ABS" => kids[0].map(|a| a.abs()),
        "SIGN" => kids[0].map(|a| {
            if a > F::zero() {
                F::one()
            } else if a < F::zero() {
                -F::one()
            } else {
                F::zero()
            }
        }),
        "LOG" => kids[0].map(|a| a.ln()),
        "EXP" => kids[0].map(|a| a.exp()),
        "SQRT" => kids[0].map(|a| a.sqrt()),
        "POW" => {
            let a: F = real(params, 0);
            kids[0].map(|x| x.powf(a))
        }
        "INV" => kids[0].map(|x| F::one() / x),
        // technical
        "EMA" => per_row(&kids[0], |x| k::ema(x, window(params, 0))),
        "WMA" | "DECAYLINEAR" => {
            per_row(&kids[0], |x| k::rolling(x, window(params, 0), k::wma_last))
        }
        "MACD" => {
            let fast = per_row(&kids[0], |x| k::ema(x, window(params, 0)));
            let slow = per_row(&kids[0], |x| k::ema(x, window(params, 1)));
            fast.zip(&slow, |a, b| a - b)
        }
        "RSI" => per_row(&kids[0], |x| {
            // w diffs need w+1 observations
            k::rolling(x, window(params, 0) + 1, k::rsi_last)
        }),
        "BB_UPPER" => {
            let kf: F = real(params, 1);
            per_row(&kids[0], |x| {
                k::rolling(x, window(params, 0), |w| {
                    k::mean(w) + kf * k::sample_std(w)
                })
            })
        }
        "BB_LOWER" => {
            let kf: F = real(params, 1);
            per_row(&kids[0], |x| {
                k::rolling(x, window(params, 0), |w| {
                    k::mean(w) - kf * k::sample_std(w)
                })
            })
        }
        "REGBETA" => per_row2(&kids[0], &kids[1], |y, x| {
            k::rolling2(y, x, window(params, 0), k::window_regbeta)
        }),
        "REGRESI" => per_row2(&kids[0], &kids[1], |y, x| {
            k::rolling2(y, x, window(params, 0), k::window_regresi)
        }),
        // logical
        "GT" => kids[0].zip(&kids[1], |a, b| bool_val(a > b)),
        "LT" => kids[0].zip(&kids[1], |a, b| bool_val(a < b)),
        "GE" => kids[0].zip(&kids[1], |a, b| bool_val(a >= b)),
        "LE" => kids[0].zip(&kids[1], |a, b| bool_val(a <= b)),
        "AND" => kids[0].zip(&kids[1], |a, b| {
            bool_val(a != F::zero() && b != F::zero())
        }),
        "OR" => kids[0].zip(&kids[1], |a, b| {
            bool_val(a != F::zero() || b != F::zero())
        }),
        "WHERE" => where_select(&kids[0], &kids[1], &kids[2]),
        // auxiliary
        "COUNT" => per_row(&kids[0], |x| {
            k::rolling(x, window(params, 0), |w| {
                w.iter().fold(F::zero(), |acc, &v| {
                    if v != F::zero() {
                        acc + F::one()
                    } else {
                        acc
                    }
                })
            })
        }),
        "SUMIF" => {
            let masked = kids[0].zip(&kids[1], |x, c| if c != F::zero() { x } else { F::zero() });
            per_row(&masked, |x| {
                k::rolling(x, window(params, 0), |w| {
                    w.iter().fold(F::zero(), |a, &b| a + b)
                })
            })
        }
        "FILTER" => kids[0].zip(&kids[1], |x, c| {
            if c != F::zero() {
                x
            } else {
                F::invalid()
            }
        }),
        "PROD" => per_row(&kids[0], |x| {
            k::rolling(x, window(params, 0), |w| {
                w.iter().fold(F::one(), |a, &b| a * b)
            })
        }),
        other => unreachable!("operator {other} not wired into the interpreter"),
    }
}

fn bool_val<F: Scalar>(b: bool) -> F {
    if b {
        F::one()
    } else {
        F::zero()
    }
}

/// now = x[t], then = x[t−w]; output valid only where both are.
fn shift_combine<F: Scalar>(m: &Matrix<F>, w: usize, f: impl Fn(F, F) -> F) -> Matrix<F> {
    let (n, t_len) = m.shape();
    let mut out = Matrix::invalid(n, t_len);
    for i in 0..n {
        for t in w..t_len {
            let now = m.get(i, t);
            let then = m.get(i, t - w);
            if now.is_valid() && then.is_valid() {
                out.set(i, t, f(now, then));
            }
        }
    }
    out
}

fn per_row<F: Scalar>(m: &Matrix<F>, f: impl Fn(&[F]) -> Vec<F>) -> Matrix<F> {
    let (n, t_len) = m.shape();
    let mut out = Matrix::invalid(n, t_len);
    for i in 0..n {
        out.set_row(i, &f(m.row(i)));
    }
    out
}

fn per_row2<F: Scalar>(a: &Matrix<F>, b: &Matrix<F>, f: impl Fn(&[F], &[F]) -> Vec<F>) -> Matrix<F> {
    assert_eq!(a.shape(), b.shape());
    let (n, t_len) = a.shape();
    let mut out = Matrix::invalid(n, t_len);
    for i in 0..n {
        out.set_row(i, &f(a.row(i), b.row(i)));
    }
    out
}

fn per_col<F: Scalar>(m: &Matrix<F>, f: impl Fn(&[F]) -> Vec<F>) -> Matrix<F> {
    let (n, t_len) = m.shape();
    let mut out = Matrix::invalid(n, t_len);
    for t in 0..t_len {
        let col = f(&m.col(t));
        assert_eq!(col.len(), n);
        for i in 0..n {
            out.set(i, t, col[i]);
        }
    }
    out
}

/// Average-rank percentile in (0, 1] over the valid cross-section.
fn cs_rank<F: Scalar>(col: &[F]) -> Vec<F> {
    let ranks = average_ranks(col);
    let n_valid = col.iter().filter(|v| v.is_valid()).count();
    if n_valid == 0 {
        return vec![F::invalid(); col.len()];
    }
    let denom = F::from_count(n_valid);
    ranks
        .into_iter()
        .map(|r| if r.is_valid() { r / denom } else { F::invalid() })
        .collect()
}

fn cs_zscore<F: Scalar>(col: &[F]) -> Vec<F> {
    let valid: Vec<F> = col.iter().copied().filter(|v| v.is_valid()).collect();
    let s = kernels::sample_std(&valid);
    if !s.is_valid() || s <= F::zero() {
        return vec![F::invalid(); col.len()];
    }
    let m = kernels::mean(&valid);
    col.iter()
        .map(|&v| if v.is_valid() { (v - m) / s } else { F::invalid() })
        .collect()
}

/// x / Σ|x| over the valid cross-section, so Σ|out| = 1.
fn cs_scale<F: Scalar>(col: &[F]) -> Vec<F> {
    let total = col
        .iter()
        .filter(|v| v.is_valid())
        .fold(F::zero(), |a, &b| a + b.abs());
    if total <= F::zero() {
        return vec![F::invalid(); col.len()];
    }
    col.iter()
        .map(|&v| if v.is_valid() { v / total } else { F::invalid() })
        .collect()
}

/// Broadcast a cross-sectional statistic of the valid entries to every
/// instrument whose own input is valid.
fn cs_broadcast<F: Scalar>(col: &[F], stat: impl Fn(&[F]) -> F) -> Vec<F> {
    let valid: Vec<F> = col.iter().copied().filter(|v| v.is_valid()).collect();
    if valid.is_empty() {
        return vec![F::invalid(); col.len()];
    }
    let s = stat(&valid);
    col.iter()
        .map(|&v| if v.is_valid() { s } else { F::invalid() })
        .collect()
}

fn where_select<F: Scalar>(cond: &Matrix<F>, a: &Matrix<F>, b: &Matrix<F>) -> Matrix<F> {
    let (n, t_len) = cond.shape();
    let mut out = Matrix::invalid(n, t_len);
    for i in 0..n {
        for t in 0..t_len {
            let c = cond.get(i, t);
            if !c.is_valid() {
                continue;
            }
            let v = if c != F::zero() { a.get(i, t) } else { b.get(i, t) };
            out.set(i, t, v);
        }
    }
    out
}
