//! TopkDropout portfolio simulation with transaction costs, open-price
//! execution, and limit-threshold trade halts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dsl::FeatureField;
use crate::matrix::Matrix;
use crate::panel::PanelOf;

pub type Value = f64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub topk: usize,
    pub n_drop: usize,
    pub buy_fee: f64,
    pub sell_fee: f64,
    /// Halt an instrument when |open_t / close_{t−1} − 1| ≥ this threshold.
    pub limit_threshold: f64,
    /// Externally supplied per-date benchmark returns; equal-weight
    /// buy-and-hold of the universe when absent.
    pub benchmark_returns: Option<Vec<f64>>,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        StrategyConfig {
            topk: 50,
            n_drop: 5,
            buy_fee: 0.0005,
            sell_fee: 0.0015,
            limit_threshold: 0.095,
            benchmark_returns: None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BacktestError {
    #[error("universe is empty")]
    EmptyUniverse,
    #[error("split [{start}, {end}) out of range for {n_dates} dates")]
    SplitOutOfRange {
        start: usize,
        end: usize,
        n_dates: usize,
    },
    #[error("n_drop ({n_drop}) exceeds topk ({topk})")]
    BadConfig { topk: usize, n_drop: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Buy,
    Sell,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trade {
    pub date: String,
    pub symbol: String,
    pub side: Side,
    pub price: f64,
    /// Fee as a fraction of portfolio value (notional fraction × fee rate).
    pub fee: f64,
}

/// One record per trading date; the JSONL external format serializes these
/// in order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DailyRecord {
    pub date: String,
    pub holdings: Vec<String>,
    pub portfolio_return: f64,
    pub benchmark_return: f64,
    pub transaction_cost: f64,
    pub excess_after_cost: f64,
    pub turnover: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationResult {
    pub daily: Vec<DailyRecord>,
    pub trades: Vec<Trade>,
}

impl SimulationResult {
    pub fn excess_after_cost(&self) -> Vec<f64> {
        self.daily.iter().map(|d| d.excess_after_cost).collect()
    }

    pub fn turnover(&self) -> Vec<f64> {
        self.daily.iter().map(|d| d.turnover).collect()
    }

    /// One JSON object per line, one line per trading date.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for d in &self.daily {
            out.push_str(&serde_json::to_string(d).unwrap());
            out.push('\n');
        }
        out
    }

    pub fn trades_csv(&self) -> String {
        let mut out = String::from("date,symbol,side,price,fee\n");
        for t in &self.trades {
            let side = match t.side {
                Side::Buy => "buy",
                Side::Sell => "sell",
            };
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t.date, t.symbol, side, t.price, t.fee
            ));
        }
        out
    }
}

/// Simulate TopkDropout over the date indices `[start, end)` of the panel.
///
/// Scores carry a one-day signal-to-trade lag: the score column at t−1
/// drives trades executed at the date-t open. The daily portfolio return
/// spans open_t → open_{t+1}, so the final simulated date is the last one
/// with a following open; trades on a date with no following open are not
/// simulated. Holdings are equal-weighted and trades of halted or missing
/// instruments are skipped.
pub fn simulate(
    scores: &Matrix<Value>,
    panel: &PanelOf<Value>,
    cfg: &StrategyConfig,
    start: usize,
    end: usize,
) -> Result<SimulationResult, BacktestError> {
    let n = panel.n_symbols();
    let t_total = panel.n_dates();
    if n == 0 {
        return Err(BacktestError::EmptyUniverse);
    }
    if cfg.n_drop > cfg.topk {
        return Err(BacktestError::BadConfig {
            topk: cfg.topk,
            n_drop: cfg.n_drop,
        });
    }
    if start >= end || end > t_total {
        return Err(BacktestError::SplitOutOfRange {
            start,
            end,
            n_dates: t_total,
        });
    }
    assert_eq!(scores.shape(), (n, t_total), "score/panel shape mismatch");

    let open = panel.feature(FeatureField::Open);
    let close = panel.feature(FeatureField::Close);

    // Buy-and-hold benchmark state: per-symbol value relatives, equal
    // initial notional.
    let mut bench_value: Vec<f64> = vec![1.0; n];

    let mut holdings: Vec<usize> = Vec::new();
    let mut daily = Vec::new();
    let mut trades = Vec::new();

    for t in start..end {
        // Need the next open to price the day's return.
        if t + 1 >= t_total {
            break;
        }

        let tradable = |s: usize| -> bool {
            if !open.is_valid(s, t) {
                return false;
            }
            if t > 0 && close.is_valid(s, t - 1) {
                let gap = (open.get(s, t) / close.get(s, t - 1) - 1.0).abs();
                if gap >= cfg.limit_threshold {
                    return false;
                }
            }
            true
        };
        let score_at = |s: usize| -> f64 {
            if t > 0 {
                scores.get(s, t - 1)
            } else {
                f64::NAN
            }
        };

        // Ranked candidate list: valid prior-date score, best first.
        // Ties break on symbol index for determinism.
        let mut candidates: Vec<usize> = (0..n).filter(|&s| score_at(s).is_finite()).collect();
        candidates.sort_by(|&a, &b| {
            score_at(b)
                .partial_cmp(&score_at(a))
                .unwrap()
                .then(a.cmp(&b))
        });

        let held_before = holdings.len();
        let mut sells: Vec<usize> = Vec::new();
        let mut buys: Vec<usize> = Vec::new();

        if holdings.is_empty() {
            buys = candidates
                .iter()
                .copied()
                .filter(|&s| tradable(s))
                .take(cfg.topk)
                .collect();
        } else if !candidates.is_empty() {
            // Current holdings, worst score first; a holding with no valid
            // score ranks below every scored holding.
            let mut ranked: Vec<usize> = holdings.clone();
            ranked.sort_by(|&a, &b| {
                let (sa, sb) = (score_at(a), score_at(b));
                match (sa.is_finite(), sb.is_finite()) {
                    (false, false) => a.cmp(&b),
                    (false, true) => std::cmp::Ordering::Less,
                    (true, false) => std::cmp::Ordering::Greater,
                    (true, true) => sa.partial_cmp(&sb).unwrap().then(a.cmp(&b)),
                }
            });
            sells = ranked
                .iter()
                .copied()
                .filter(|&s| tradable(s))
                .take(cfg.n_drop)
                .collect();
            let keep: Vec<usize> = holdings
                .iter()
                .copied()
                .filter(|s| !sells.contains(s))
                .collect();
            let slots = cfg.topk.saturating_sub(keep.len());
            buys = candidates
                .iter()
                .copied()
                .filter(|&s| tradable(s) && !keep.contains(&s) && !sells.contains(&s))
                .take(slots)
                .collect();
            holdings = keep;
        }
        holdings.extend(buys.iter().copied());
        holdings.sort_unstable();

        let held_after = holdings.len();
        let buy_frac = if held_after > 0 {
            buys.len() as f64 / held_after as f64
        } else {
            0.0
        };
        let sell_frac = if held_before > 0 {
            sells.len() as f64 / held_before as f64
        } else {
            0.0
        };
        let cost = buy_frac * cfg.buy_fee + sell_frac * cfg.sell_fee;
        let turnover = buy_frac + sell_frac;

        for &s in &sells {
            trades.push(Trade {
                date: panel.dates()[t].clone(),
                symbol: panel.symbols()[s].clone(),
                side: Side::Sell,
                price: open.get(s, t),
                fee: cfg.sell_fee / held_before.max(1) as f64,
            });
        }
        for &s in &buys {
            trades.push(Trade {
                date: panel.dates()[t].clone(),
                symbol: panel.symbols()[s].clone(),
                side: Side::Buy,
                price: open.get(s, t),
                fee: cfg.buy_fee / held_after.max(1) as f64,
            });
        }

        // Equal-weight portfolio return over holdings with a priced leg.
        let rets: Vec<f64> = holdings
            .iter()
            .filter(|&&s| open.is_valid(s, t) && open.is_valid(s, t + 1))
            .map(|&s| open.get(s, t + 1) / open.get(s, t) - 1.0)
            .collect();
        let r_port = if rets.is_empty() {
            0.0
        } else {
            rets.iter().sum::<f64>() / rets.len() as f64
        };

        let r_bench = match &cfg.benchmark_returns {
            Some(series) => series.get(t - start).copied().unwrap_or(0.0),
            None => {
                let before: f64 = bench_value.iter().sum();
                for s in 0..n {
                    if open.is_valid(s, t) && open.is_valid(s, t + 1) {
                        bench_value[s] *= open.get(s, t + 1) / open.get(s, t);
                    }
                }
                let after: f64 = bench_value.iter().sum();
                after / before - 1.0
            }
        };

        daily.push(DailyRecord {
            date: panel.dates()[t].clone(),
            holdings: holdings.iter().map(|&s| panel.symbols()[s].clone()).collect(),
            portfolio_return: r_port,
            benchmark_return: r_bench,
            transaction_cost: cost,
            excess_after_cost: r_port - r_bench - cost,
            turnover,
        });
    }

    Ok(SimulationResult { daily, trades })
}
