//! Predictive-power metrics (IC, RankIC, ICIR) and strategy performance
//! metrics (ARR, IR, MDD, Calmar) over daily excess returns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{pearson, spearman, Matrix};
use crate::num::Scalar;

/// Trading days per year, used by the annualization formulas.
pub const TRADING_DAYS: f64 = 252.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("fewer than 3 jointly valid instruments at date index {t}")]
    InsufficientCrossSection { t: usize },
    #[error("series dispersion is zero")]
    ZeroDispersion,
    #[error("series has fewer than {min} defined entries")]
    TooShort { min: usize },
    #[error("maximum drawdown is zero; Calmar undefined")]
    ZeroDrawdown,
}

/// Pearson correlation between the factor and label cross-sections at date
/// `t`, over jointly valid instruments.
pub fn ic_daily<F: Scalar>(f: &Matrix<F>, y: &Matrix<F>, t: usize) -> Result<F, MetricError> {
    let (xs, ys) = joint_column(f, y, t)?;
    pearson(&xs, &ys).ok_or(MetricError::ZeroDispersion)
}

/// Spearman correlation (Pearson on average ranks) at date `t`.
pub fn rank_ic_daily<F: Scalar>(f: &Matrix<F>, y: &Matrix<F>, t: usize) -> Result<F, MetricError> {
    let (xs, ys) = joint_column(f, y, t)?;
    spearman(&xs, &ys).ok_or(MetricError::ZeroDispersion)
}

fn joint_column<F: Scalar>(
    f: &Matrix<F>,
    y: &Matrix<F>,
    t: usize,
) -> Result<(Vec<F>, Vec<F>), MetricError> {
    assert_eq!(f.shape(), y.shape(), "factor/label shape mismatch");
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in 0..f.shape().0 {
        let (a, b) = (f.get(s, t), y.get(s, t));
        if a.is_valid() && b.is_valid() {
            xs.push(a);
            ys.push(b);
        }
    }
    if xs.len() < 3 {
        return Err(MetricError::InsufficientCrossSection { t });
    }
    Ok((xs, ys))
}

/// Information ratio of a metric series: mean / sample std (n−1).
pub fn icir(series: &[f64]) -> Result<f64, MetricError> {
    if series.len() < 2 {
        return Err(MetricError::TooShort { min: 2 });
    }
    let mean = series.iter().sum::<f64>() / series.len() as f64;
    let var = series.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (series.len() - 1) as f64;
    let std = var.sqrt();
    if std == 0.0 {
        return Err(MetricError::ZeroDispersion);
    }
    Ok(mean / std)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictiveMetrics {
    pub ic_series: Vec<f64>,
    pub rank_ic_series: Vec<f64>,
    pub ic_mean: f64,
    pub icir: Option<f64>,
    pub rank_ic_mean: f64,
    pub rank_icir: Option<f64>,
    pub n_dates: usize,
}

/// Per-date IC/RankIC across `dates` (all columns when `None`). Dates with
/// an insufficient or degenerate cross-section are skipped, not zero-filled.
pub fn predictive_metrics<F: Scalar>(
    f: &Matrix<F>,
    y: &Matrix<F>,
    dates: Option<&[usize]>,
) -> PredictiveMetrics {
    let all: Vec<usize> = (0..f.shape().1).collect();
    let dates = dates.unwrap_or(&all);
    let mut ic_series = Vec::new();
    let mut rank_ic_series = Vec::new();
    for &t in dates {
        if let Ok(ic) = ic_daily(f, y, t) {
            ic_series.push(ic.to_f64().unwrap());
        }
        if let Ok(ric) = rank_ic_daily(f, y, t) {
            rank_ic_series.push(ric.to_f64().unwrap());
        }
    }
    let mean = |s: &[f64]| {
        if s.is_empty() {
            f64::NAN
        } else {
            s.iter().sum::<f64>() / s.len() as f64
        }
    };
    PredictiveMetrics {
        ic_mean: mean(&ic_series),
        icir: icir(&ic_series).ok(),
        rank_ic_mean: mean(&rank_ic_series),
        rank_icir: icir(&rank_ic_series).ok(),
        n_dates: ic_series.len(),
        ic_series,
        rank_ic_series,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyMetrics {
    pub arr: f64,
    pub ir: Option<f64>,
    pub mdd: f64,
    pub calmar: Option<f64>,
    pub cumulative_curve: Vec<f64>,
}

/// Annualized strategy metrics from a daily excess-return series.
///
/// The cumulative curve is additive (Cₜ = Σ_{u≤t} r_u) by default;
/// `compounded` switches to Π(1+r)−1. MDD is the most negative value of
/// Cₜ − max_{u≤t} C_u, hence ≤ 0. Calmar = ARR / |MDD|, undefined when
/// the drawdown is zero.
pub fn annualized_metrics(daily_excess: &[f64], compounded: bool) -> StrategyMetrics {
    assert!(!daily_excess.is_empty(), "empty excess-return series");
    let mean = daily_excess.iter().sum::<f64>() / daily_excess.len() as f64;
    let arr = mean * TRADING_DAYS;
    let ir = icir(daily_excess).ok().map(|x| x * TRADING_DAYS.sqrt());

    let mut curve = Vec::with_capacity(daily_excess.len());
    let mut acc = if compounded { 1.0 } else { 0.0 };
    for &r in daily_excess {
        if compounded {
            acc *= 1.0 + r;
            curve.push(acc - 1.0);
        } else {
            acc += r;
            curve.push(acc);
        }
    }
    let mdd = max_drawdown(&curve);
    let calmar = calmar_ratio(arr, mdd).ok();
    StrategyMetrics {
        arr,
        ir,
        mdd,
        calmar,
        cumulative_curve: curve,
    }
}

/// Largest peak-to-trough decline of a cumulative curve (≤ 0).
pub fn max_drawdown(curve: &[f64]) -> f64 {
    let mut peak = f64::NEG_INFINITY;
    let mut mdd = 0.0f64;
    for &c in curve {
        peak = peak.max(c);
        mdd = mdd.min(c - peak);
    }
    mdd
}

/// Calmar ratio from an annualized return and a signed (≤ 0) drawdown.
pub fn calmar_ratio(arr: f64, mdd: f64) -> Result<f64, MetricError> {
    if mdd == 0.0 {
        return Err(MetricError::ZeroDrawdown);
    }
    Ok(arr / mdd.abs())
}

/// Flat bundle of everything the evaluation pipeline reports for one
/// factor. Undefined components are absent, never substituted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub expression: String,
    pub n_dates: usize,
    pub ic_mean: f64,
    pub icir: Option<f64>,
    pub rank_ic_mean: f64,
    pub rank_icir: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ir: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mdd: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calmar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_turnover: Option<f64>,
}

/// Bundle predictive metrics with optional strategy output.
pub fn report<F: Scalar>(
    expression: &str,
    f: &Matrix<F>,
    y: &Matrix<F>,
    dates: Option<&[usize]>,
    strategy: Option<(&StrategyMetrics, &[f64])>,
) -> EvaluationReport {
    let pm = predictive_metrics(f, y, dates);
    let (arr, ir, mdd, calmar, mean_turnover) = match strategy {
        Some((sm, turnover)) => (
            Some(sm.arr),
            sm.ir,
            Some(sm.mdd),
            sm.calmar,
            (!turnover.is_empty())
                .then(|| turnover.iter().sum::<f64>() / turnover.len() as f64),
        ),
        None => (None, None, None, None, None),
    };
    EvaluationReport {
        expression: expression.to_string(),
        n_dates: pm.n_dates,
        ic_mean: pm.ic_mean,
        icir: pm.icir,
        rank_ic_mean: pm.rank_ic_mean,
        rank_icir: pm.rank_icir,
        arr,
        ir,
        mdd,
        calmar,
        mean_turnover,
    }
}
