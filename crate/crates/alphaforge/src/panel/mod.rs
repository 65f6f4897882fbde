//! Market data model: aligned instruments × dates × features panel,
//! preprocessing, label construction, and cross-sectional rank normalization.

pub mod csv_io;
pub mod synth;

pub use csv_io::ingest_csv;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::FeatureField;
use crate::matrix::{average_ranks, Matrix};
use crate::num::Scalar;

/// CSRankNorm scale constant: maps uniform percentiles to roughly unit
/// standard deviation (1/sqrt(1/12) ≈ 3.46).
pub const CS_RANK_NORM_SCALE: f64 = 3.46;

#[derive(Debug, Error)]
pub enum PanelError {
    #[error("malformed row at line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("duplicate cell for ({date}, {symbol})")]
    DuplicateCell { date: String, symbol: String },
    #[error("empty input file")]
    EmptyFile,
    #[error("dates not strictly increasing at index {0}")]
    UnorderedDates(usize),
    #[error("duplicate symbol {0}")]
    DuplicateSymbol(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// Aligned N instruments × T dates × 6 features tensor. A cell is missing
/// iff its stored value is non-finite. Dates are opaque ISO-8601 tokens;
/// trading-day arithmetic is positional.
#[derive(Debug, Clone)]
pub struct PanelOf<F: Scalar> {
    symbols: Vec<String>,
    dates: Vec<String>,
    features: Vec<Matrix<F>>, // indexed by FeatureField::index()
}

impl<F: Scalar> PanelOf<F> {
    pub fn new(symbols: Vec<String>, dates: Vec<String>) -> Result<Self, PanelError> {
        for i in 1..dates.len() {
            if dates[i - 1] >= dates[i] {
                return Err(PanelError::UnorderedDates(i));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for s in &symbols {
            if !seen.insert(s.clone()) {
                return Err(PanelError::DuplicateSymbol(s.clone()));
            }
        }
        let n = symbols.len();
        let t = dates.len();
        Ok(PanelOf {
            symbols,
            dates,
            features: (0..FeatureField::ALL.len())
                .map(|_| Matrix::invalid(n, t))
                .collect(),
        })
    }

    pub fn n_symbols(&self) -> usize {
        self.symbols.len()
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn dates(&self) -> &[String] {
        &self.dates
    }

    pub fn feature(&self, f: FeatureField) -> &Matrix<F> {
        &self.features[f.index()]
    }

    pub fn feature_mut(&mut self, f: FeatureField) -> &mut Matrix<F> {
        &mut self.features[f.index()]
    }

    pub fn date_index(&self, date: &str) -> Option<usize> {
        self.dates.iter().position(|d| d == date)
    }

    /// Truncate to the first `t` dates (used by no-lookahead checks).
    pub fn truncated(&self, t: usize) -> PanelOf<F> {
        let t = t.min(self.n_dates());
        let mut out = PanelOf::new(self.symbols.clone(), self.dates[..t].to_vec()).unwrap();
        for f in FeatureField::ALL {
            for i in 0..self.n_symbols() {
                for c in 0..t {
                    out.feature_mut(f).set(i, c, self.feature(f).get(i, c));
                }
            }
        }
        out
    }

    /// Forward-fill missing values per symbol along time. Non-finite inputs
    /// were already normalized to missing at write time; leading missing
    /// cells stay missing (no backfill).
    pub fn preprocess(&self) -> PanelOf<F> {
        let mut out = self.clone();
        for f in FeatureField::ALL {
            let m = out.feature_mut(f);
            for i in 0..m.n_rows() {
                let mut last = F::invalid();
                for t in 0..m.n_cols() {
                    let v = m.get(i, t);
                    if v.is_valid() {
                        last = v;
                    } else if last.is_valid() {
                        m.set(i, t, last);
                    }
                }
            }
        }
        out
    }

    /// Next-day forward returns: y[s,t] = close[s,t+2]/close[s,t+1] − 1
    /// where both closes are valid and close[s,t+1] > 0. The last two
    /// columns are always missing.
    pub fn make_labels(&self) -> Matrix<F> {
        let close = self.feature(FeatureField::Close);
        let (n, t_len) = close.shape();
        let mut y = Matrix::invalid(n, t_len);
        for s in 0..n {
            for t in 0..t_len.saturating_sub(2) {
                let p1 = close.get(s, t + 1);
                let p2 = close.get(s, t + 2);
                if p1.is_valid() && p2.is_valid() && p1 > F::zero() {
                    y.set(s, t, p2 / p1 - F::one());
                }
            }
        }
        y
    }
}

/// Per-date cross-sectional rank normalization: percentile (average-rank)
/// mapped to (pct − 0.5) × 3.46. Missing cells stay missing.
pub fn cs_rank_norm<F: Scalar>(m: &Matrix<F>) -> Matrix<F> {
    let (n, t_len) = m.shape();
    let mut out = Matrix::invalid(n, t_len);
    let half = F::from_f64_c(0.5);
    let scale = F::from_f64_c(CS_RANK_NORM_SCALE);
    for t in 0..t_len {
        let col = m.col(t);
        let ranks = average_ranks(&col);
        let n_valid = col.iter().filter(|v| v.is_valid()).count();
        if n_valid == 0 {
            continue;
        }
        let denom = F::from_count(n_valid);
        for i in 0..n {
            if ranks[i].is_valid() {
                out.set(i, t, (ranks[i] / denom - half) * scale);
            }
        }
    }
    out
}

/// Chronologically ordered train/validation/test date ranges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: DateRange,
    pub valid: DateRange,
    pub test: DateRange,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DateRange {
    pub start: String,
    pub end: String,
}

impl DateRange {
    pub fn new(start: &str, end: &str) -> Self {
        DateRange {
            start: start.to_string(),
            end: end.to_string(),
        }
    }

    /// Positional indices of the panel dates covered by this range.
    pub fn indices(&self, dates: &[String]) -> Vec<usize> {
        dates
            .iter()
            .enumerate()
            .filter(|(_, d)| self.start.as_str() <= d.as_str() && d.as_str() <= self.end.as_str())
            .map(|(i, _)| i)
            .collect()
    }
}

impl SplitSpec {
    /// Split a date axis positionally by fractions (train, valid, rest test).
    pub fn positional(dates: &[String], train_frac: f64, valid_frac: f64) -> SplitSpec {
        let t = dates.len();
        let n_train = ((t as f64) * train_frac).floor() as usize;
        let n_valid = ((t as f64) * valid_frac).floor() as usize;
        let train_end = n_train.saturating_sub(1).min(t.saturating_sub(1));
        let valid_end = (n_train + n_valid).saturating_sub(1).min(t.saturating_sub(1));
        SplitSpec {
            train: DateRange::new(&dates[0], &dates[train_end]),
            valid: DateRange::new(
                &dates[(train_end + 1).min(t - 1)],
                &dates[valid_end],
            ),
            test: DateRange::new(&dates[(valid_end + 1).min(t - 1)], &dates[t - 1]),
        }
    }
}
