//! Shared test harness: a naive per-cell reference evaluator (independent
//! of the library's interpreter), random expression/panel generators, and
//! a brute-force subtree-similarity reference.

#![allow(dead_code)]

use alphaforge::dsl::ops::{self, OperatorSpec, ParamKind, ParamValue};
use alphaforge::dsl::{Expr, FeatureField};
use alphaforge::panel::PanelOf;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// n_symbols × n_dates grid; NaN encodes a missing cell.
pub type Grid = Vec<Vec<f64>>;

fn norm(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NAN
    }
}

fn all_valid(w: &[f64]) -> bool {
    w.iter().all(|v| v.is_finite())
}

// --- naive window statistics -------------------------------------------

fn o_mean(w: &[f64]) -> f64 {
    w.iter().sum::<f64>() / w.len() as f64
}

fn o_var(w: &[f64]) -> f64 {
    if w.len() < 2 {
        return f64::NAN;
    }
    let m = o_mean(w);
    w.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (w.len() - 1) as f64
}

fn o_std(w: &[f64]) -> f64 {
    o_var(w).sqrt()
}

fn o_skew(w: &[f64]) -> f64 {
    let n = w.len();
    if n < 3 {
        return f64::NAN;
    }
    let s = o_std(w);
    if !s.is_finite() || s <= 0.0 {
        return f64::NAN;
    }
    let m = o_mean(w);
    let sum3: f64 = w.iter().map(|x| ((x - m) / s).powi(3)).sum();
    let nf = n as f64;
    nf / ((nf - 1.0) * (nf - 2.0)) * sum3
}

fn o_kurt(w: &[f64]) -> f64 {
    let n = w.len();
    if n < 4 {
        return f64::NAN;
    }
    let s = o_std(w);
    if !s.is_finite() || s <= 0.0 {
        return f64::NAN;
    }
    let m = o_mean(w);
    let sum4: f64 = w.iter().map(|x| ((x - m) / s).powi(4)).sum();
    let (nf, n1, n2, n3) = (n as f64, (n - 1) as f64, (n - 2) as f64, (n - 3) as f64);
    nf * (nf + 1.0) / (n1 * n2 * n3) * sum4 - 3.0 * n1 * n1 / (n2 * n3)
}

fn o_median(w: &[f64]) -> f64 {
    let mut s = w.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn o_quantile(w: &[f64], q: f64) -> f64 {
    let mut s = w.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n == 0 {
        return f64::NAN;
    }
    let q = q.clamp(0.0, 1.0);
    let h = (n - 1) as f64 * q;
    let lo = (h.floor() as usize).min(n - 1);
    let frac = h - h.floor();
    if lo + 1 < n {
        s[lo] + frac * (s[lo + 1] - s[lo])
    } else {
        s[lo]
    }
}

/// 1-based average ranks of the valid entries; invalid entries get NaN.
fn o_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_finite()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![f64::NAN; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + 1 + j + 1) as f64 / 2.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn o_ts_rank(w: &[f64]) -> f64 {
    let ranks = o_ranks(w);
    ranks[w.len() - 1] / w.len() as f64
}

fn o_argmax(w: &[f64]) -> f64 {
    let mut best = w[w.len() - 1];
    let mut offset = 0usize;
    for (k, &v) in w.iter().rev().enumerate() {
        if v > best {
            best = v;
            offset = k;
        }
    }
    offset as f64
}

fn o_argmin(w: &[f64]) -> f64 {
    let mut best = w[w.len() - 1];
    let mut offset = 0usize;
    for (k, &v) in w.iter().rev().enumerate() {
        if v < best {
            best = v;
            offset = k;
        }
    }
    offset as f64
}

fn o_pearson(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = o_mean(x);
    let my = o_mean(y);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y.iter()) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return f64::NAN;
    }
    sxy / (sxx * syy).sqrt()
}

fn o_cov(x: &[f64], y: &[f64]) -> f64 {
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = o_mean(x);
    let my = o_mean(y);
    x.iter().zip(y.iter()).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / (x.len() - 1) as f64
}

fn o_regbeta(y: &[f64], x: &[f64]) -> f64 {
    let vx = o_var(x);
    if !vx.is_finite() || vx <= 0.0 {
        return f64::NAN;
    }
    o_cov(x, y) / vx
}

fn o_regresi(y: &[f64], x: &[f64]) -> f64 {
    let b = o_regbeta(y, x);
    if !b.is_finite() {
        return f64::NAN;
    }
    let a = o_mean(y) - b * o_mean(x);
    y[y.len() - 1] - (a + b * x[x.len() - 1])
}

fn o_wma(w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &v) in w.iter().enumerate() {
        let weight = (i + 1) as f64;
        num += weight * v;
        den += weight;
    }
    num / den
}

fn o_rsi(w: &[f64]) -> f64 {
    let mut gains = 0.0;
    let mut losses = 0.0;
    for pair in w.windows(2) {
        let d = pair[1] - pair[0];
        if d > 0.0 {
            gains += d;
        } else {
            losses -= d;
        }
    }
    if losses == 0.0 {
        return 100.0;
    }
    100.0 - 100.0 / (1.0 + gains / losses)
}

// --- grid combinators ---------------------------------------------------

fn shape(g: &Grid) -> (usize, usize) {
    (g.len(), g.first().map_or(0, |r| r.len()))
}

fn grid_map(g: &Grid, f: impl Fn(f64) -> f64) -> Grid {
    g.iter()
        .map(|row| {
            row.iter()
                .map(|&v| if v.is_finite() { norm(f(v)) } else { f64::NAN })
                .collect()
        })
        .collect()
}

fn grid_zip(a: &Grid, b: &Grid, f: impl Fn(f64, f64) -> f64) -> Grid {
    a.iter()
        .zip(b.iter())
        .map(|(ra, rb)| {
            ra.iter()
                .zip(rb.iter())
                .map(|(&x, &y)| {
                    if x.is_finite() && y.is_finite() {
                        norm(f(x, y))
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect()
}

fn grid_rolling(g: &Grid, w: usize, f: impl Fn(&[f64]) -> f64) -> Grid {
    let (_, t_len) = shape(g);
    g.iter()
        .map(|row| {
            (0..t_len)
                .map(|t| {
                    if w == 0 || t + 1 < w {
                        return f64::NAN;
                    }
                    let win = &row[t + 1 - w..=t];
                    if all_valid(win) {
                        norm(f(win))
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect()
}

fn grid_rolling2(a: &Grid, b: &Grid, w: usize, f: impl Fn(&[f64], &[f64]) -> f64) -> Grid {
    let (_, t_len) = shape(a);
    a.iter()
        .zip(b.iter())
        .map(|(ra, rb)| {
            (0..t_len)
                .map(|t| {
                    if w == 0 || t + 1 < w {
                        return f64::NAN;
                    }
                    let (wa, wb) = (&ra[t + 1 - w..=t], &rb[t + 1 - w..=t]);
                    if all_valid(wa) && all_valid(wb) {
                        norm(f(wa, wb))
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect()
}

fn grid_shift(g: &Grid, w: usize, f: impl Fn(f64, f64) -> f64) -> Grid {
    let (_, t_len) = shape(g);
    g.iter()
        .map(|row| {
            (0..t_len)
                .map(|t| {
                    if t < w {
                        return f64::NAN;
                    }
                    let (now, then) = (row[t], row[t - w]);
                    if now.is_finite() && then.is_finite() {
                        norm(f(now, then))
                    } else {
                        f64::NAN
                    }
                })
                .collect()
        })
        .collect()
}

fn grid_per_col(g: &Grid, f: impl Fn(&[f64]) -> Vec<f64>) -> Grid {
    let (n, t_len) = shape(g);
    let mut out = vec![vec![f64::NAN; t_len]; n];
    for t in 0..t_len {
        let col: Vec<f64> = (0..n).map(|i| g[i][t]).collect();
        let res = f(&col);
        for i in 0..n {
            out[i][t] = norm(res[i]);
        }
    }
    out
}

fn col_rank(col: &[f64]) -> Vec<f64> {
    let ranks = o_ranks(col);
    let n_valid = col.iter().filter(|v| v.is_finite()).count();
    if n_valid == 0 {
        return vec![f64::NAN; col.len()];
    }
    ranks.iter().map(|&r| r / n_valid as f64).collect()
}

fn col_zscore(col: &[f64]) -> Vec<f64> {
    let valid: Vec<f64> = col.iter().copied().filter(|v| v.is_finite()).collect();
    let s = o_std(&valid);
    if !s.is_finite() || s <= 0.0 {
        return vec![f64::NAN; col.len()];
    }
    let m = o_mean(&valid);
    col.iter()
        .map(|&v| if v.is_finite() { (v - m) / s } else { f64::NAN })
        .collect()
}

fn col_scale(col: &[f64]) -> Vec<f64> {
    let total: f64 = col.iter().filter(|v| v.is_finite()).map(|v| v.abs()).sum();
    if total <= 0.0 {
        return vec![f64::NAN; col.len()];
    }
    col.iter()
        .map(|&v| if v.is_finite() { v / total } else { f64::NAN })
        .collect()
}

fn col_broadcast(col: &[f64], stat: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let valid: Vec<f64> = col.iter().copied().filter(|v| v.is_finite()).collect();
    if valid.is_empty() {
        return vec![f64::NAN; col.len()];
    }
    let s = stat(&valid);
    col.iter()
        .map(|&v| if v.is_finite() { s } else { f64::NAN })
        .collect()
}

fn grid_ema(g: &Grid, w: usize) -> Grid {
    let alpha = 2.0 / (w + 1) as f64;
    g.iter()
        .map(|row| {
            let mut out = vec![f64::NAN; row.len()];
            let mut state = f64::NAN;
            for (t, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    state = f64::NAN;
                    continue;
                }
                state = if state.is_finite() {
                    alpha * v + (1.0 - alpha) * state
                } else {
                    v
                };
                out[t] = norm(state);
            }
            out
        })
        .collect()
}

// --- the oracle ---------------------------------------------------------

/// Naive per-cell reference evaluation of `e` over `p`. Shares no code
/// with the library's interpreter.
pub fn oracle(e: &Expr, p: &PanelOf<f64>) -> Grid {
    let (n, t_len) = (p.n_symbols(), p.n_dates());
    match e {
        Expr::Feature(f) => {
            let m = p.feature(*f);
            (0..n).map(|i| (0..t_len).map(|t| m.get(i, t)).collect()).collect()
        }
        Expr::Const(v) => vec![vec![norm(*v); t_len]; n],
        Expr::Apply { op, children, params } => {
            let kids: Vec<Grid> = children.iter().map(|c| oracle(c, p)).collect();
            oracle_op(op.name, &kids, params)
        }
    }
}

fn win_param(params: &[ParamValue], idx: usize) -> usize {
    params[idx].as_window().expect("window parameter")
}

fn real_param(params: &[ParamValue], idx: usize) -> f64 {
    params[idx].as_real().expect("real parameter")
}

fn oracle_op(name: &str, kids: &[Grid], params: &[ParamValue]) -> Grid {
    let b = |c: bool| if c { 1.0 } else { 0.0 };
    match name {
        "ADD" => grid_zip(&kids[0], &kids[1], |a, c| a + c),
        "SUB" => grid_zip(&kids[0], &kids[1], |a, c| a - c),
        "MUL" => grid_zip(&kids[0], &kids[1], |a, c| a * c),
        "DIV" => grid_zip(&kids[0], &kids[1], |a, c| a / c),
        "NEG" => grid_map(&kids[0], |a| -a),
        "DELTA" => grid_shift(&kids[0], win_param(params, 0), |now, then| now - then),
        "DELAY" => grid_shift(&kids[0], win_param(params, 0), |_, then| then),
        "TS_PCTCHANGE" => grid_shift(&kids[0], win_param(params, 0), |now, then| now / then - 1.0),
        "TS_MEAN" | "SMA" => grid_rolling(&kids[0], win_param(params, 0), o_mean),
        "TS_SUM" => grid_rolling(&kids[0], win_param(params, 0), |w| w.iter().sum()),
        "TS_STD" => grid_rolling(&kids[0], win_param(params, 0), o_std),
        "TS_VAR" => grid_rolling(&kids[0], win_param(params, 0), o_var),
        "TS_MAX" => grid_rolling(&kids[0], win_param(params, 0), |w| {
            w.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        }),
        "TS_MIN" => grid_rolling(&kids[0], win_param(params, 0), |w| {
            w.iter().cloned().fold(f64::INFINITY, f64::min)
        }),
        "TS_SKEW" => grid_rolling(&kids[0], win_param(params, 0), o_skew),
        "TS_KURT" => grid_rolling(&kids[0], win_param(params, 0), o_kurt),
        "TS_RANK" => grid_rolling(&kids[0], win_param(params, 0), o_ts_rank),
        "TS_ZSCORE" => grid_rolling(&kids[0], win_param(params, 0), |w| {
            let s = o_std(w);
            if !s.is_finite() || s <= 0.0 {
                f64::NAN
            } else {
                (w[w.len() - 1] - o_mean(w)) / s
            }
        }),
        "TS_QUANTILE" => {
            let q = real_param(params, 1);
            grid_rolling(&kids[0], win_param(params, 0), |w| o_quantile(w, q))
        }
        "TS_ARGMAX" | "HIGHDAY" => grid_rolling(&kids[0], win_param(params, 0), o_argmax),
        "TS_ARGMIN" | "LOWDAY" => grid_rolling(&kids[0], win_param(params, 0), o_argmin),
        "TS_CORR" => grid_rolling2(&kids[0], &kids[1], win_param(params, 0), o_pearson),
        "TS_COVARIANCE" => grid_rolling2(&kids[0], &kids[1], win_param(params, 0), o_cov),
        "RANK" => grid_per_col(&kids[0], col_rank),
        "ZSCORE" => grid_per_col(&kids[0], col_zscore),
        "SCALE" => grid_per_col(&kids[0], col_scale),
        "MEAN" => grid_per_col(&kids[0], |c| col_broadcast(c, o_mean)),
        "STD" => grid_per_col(&kids[0], |c| col_broadcast(c, o_std)),
        "MEDIAN" => grid_per_col(&kids[0], |c| col_broadcast(c, o_median)),
        "MAX" => grid_per_col(&kids[0], |c| {
            col_broadcast(c, |v| v.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
        }),
        "MIN" => grid_per_col(&kids[0], |c| {
            col_broadcast(c, |v| v.iter().cloned().fold(f64::INFINITY, f64::min))
        }),
        "SKEW" => grid_per_col(&kids[0], |c| col_broadcast(c, o_skew)),
        "KURT" => grid_per_col(&kids[0], |c| col_broadcast(c, o_kurt)),
        "ABS" => grid_map(&kids[0], f64::abs),
        "SIGN" => grid_map(&kids[0], |a| {
            if a > 0.0 {
                1.0
            } else if a < 0.0 {
                -1.0
            } else {
                0.0
            }
        }),
        "LOG" => grid_map(&kids[0], f64::ln),
        "EXP" => grid_map(&kids[0], f64::exp),
        "SQRT" => grid_map(&kids[0], f64::sqrt),
        "POW" => {
            let a = real_param(params, 0);
            grid_map(&kids[0], |x| x.powf(a))
        }
        "INV" => grid_map(&kids[0], |x| 1.0 / x),
        "EMA" => grid_ema(&kids[0], win_param(params, 0)),
        "WMA" | "DECAYLINEAR" => grid_rolling(&kids[0], win_param(params, 0), o_wma),
        "MACD" => {
            let fast = grid_ema(&kids[0], win_param(params, 0));
            let slow = grid_ema(&kids[0], win_param(params, 1));
            grid_zip(&fast, &slow, |a, c| a - c)
        }
        "RSI" => grid_rolling(&kids[0], win_param(params, 0) + 1, o_rsi),
        "BB_UPPER" => {
            let k = real_param(params, 1);
            grid_rolling(&kids[0], win_param(params, 0), |w| o_mean(w) + k * o_std(w))
        }
        "BB_LOWER" => {
            let k = real_param(params, 1);
            grid_rolling(&kids[0], win_param(params, 0), |w| o_mean(w) - k * o_std(w))
        }
        "REGBETA" => grid_rolling2(&kids[0], &kids[1], win_param(params, 0), o_regbeta),
        "REGRESI" => grid_rolling2(&kids[0], &kids[1], win_param(params, 0), o_regresi),
        "GT" => grid_zip(&kids[0], &kids[1], |a, c| b(a > c)),
        "LT" => grid_zip(&kids[0], &kids[1], |a, c| b(a < c)),
        "GE" => grid_zip(&kids[0], &kids[1], |a, c| b(a >= c)),
        "LE" => grid_zip(&kids[0], &kids[1], |a, c| b(a <= c)),
        "AND" => grid_zip(&kids[0], &kids[1], |a, c| b(a != 0.0 && c != 0.0)),
        "OR" => grid_zip(&kids[0], &kids[1], |a, c| b(a != 0.0 || c != 0.0)),
        "WHERE" => {
            let (n, t_len) = shape(&kids[0]);
            let mut out = vec![vec![f64::NAN; t_len]; n];
            for i in 0..n {
                for t in 0..t_len {
                    let c = kids[0][i][t];
                    if !c.is_finite() {
                        continue;
                    }
                    out[i][t] = norm(if c != 0.0 { kids[1][i][t] } else { kids[2][i][t] });
                }
            }
            out
        }
        "COUNT" => grid_rolling(&kids[0], win_param(params, 0), |w| {
            w.iter().filter(|&&v| v != 0.0).count() as f64
        }),
        "SUMIF" => {
            let masked = grid_zip(&kids[0], &kids[1], |x, c| if c != 0.0 { x } else { 0.0 });
            grid_rolling(&masked, win_param(params, 0), |w| w.iter().sum())
        }
        "FILTER" => grid_zip(&kids[0], &kids[1], |x, c| if c != 0.0 { x } else { f64::NAN }),
        "PROD" => grid_rolling(&kids[0], win_param(params, 0), |w| w.iter().product()),
        other => panic!("oracle does not know operator {other}"),
    }
}

// --- random generation --------------------------------------------------

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_feature(r: &mut ChaCha8Rng) -> FeatureField {
    FeatureField::ALL[r.gen_range(0..FeatureField::ALL.len())]
}

fn random_const(r: &mut ChaCha8Rng) -> f64 {
    match r.gen_range(0..4) {
        0 => r.gen_range(-3i64..=3) as f64,
        1 => r.gen_range(0.0..2.0),
        2 => -r.gen_range(0.0..2.0),
        _ => 0.5,
    }
}

fn random_params(spec: &OperatorSpec, r: &mut ChaCha8Rng, max_window: usize) -> Vec<ParamValue> {
    spec.params
        .iter()
        .map(|(_, kind)| match kind {
            ParamKind::Window => ParamValue::Window(r.gen_range(1..=max_window)),
            ParamKind::Scalar => ParamValue::Real([-2.0, -0.5, 0.5, 1.0, 2.0, 3.0][r.gen_range(0..6)]),
            ParamKind::Threshold => ParamValue::Real([0.0, 0.25, 0.5, 0.75, 1.0][r.gen_range(0..5)]),
        })
        .collect()
}

/// Random expression of depth ≤ `depth` over the full operator library.
pub fn random_expr(r: &mut ChaCha8Rng, depth: usize, max_window: usize) -> Expr {
    if depth == 0 || r.gen_range(0..100) < 20 {
        return if r.gen_range(0..100) < 70 {
            Expr::Feature(random_feature(r))
        } else {
            Expr::Const(random_const(r))
        };
    }
    let spec = &ops::OPERATORS[r.gen_range(0..ops::OPERATORS.len())];
    let children = (0..spec.arity)
        .map(|_| random_expr(r, depth - 1, max_window))
        .collect();
    let params = random_params(spec, r, max_window);
    Expr::apply(spec, children, params)
}

/// Random panel with ~10% missing cells and a mix of price-like and
/// signed values, exercising every operator's domain edges.
pub fn random_panel(r: &mut ChaCha8Rng, n: usize, t: usize) -> PanelOf<f64> {
    let symbols: Vec<String> = (0..n).map(|i| format!("S{i}")).collect();
    let dates: Vec<String> = (0..t).map(|d| format!("2020{:04}", d + 1)).collect();
    let mut panel = PanelOf::new(symbols, dates).unwrap();
    for f in FeatureField::ALL {
        let m = panel.feature_mut(f);
        for i in 0..n {
            for c in 0..t {
                if r.gen_range(0..100) < 10 {
                    continue; // leave missing
                }
                let v = match f {
                    FeatureField::Volume => r.gen_range(0.0..1e4),
                    _ => r.gen_range(-5.0..50.0),
                };
                m.set(i, c, v);
            }
        }
    }
    panel
}

// --- brute-force subtree similarity ------------------------------------

fn label(e: &Expr) -> &str {
    match e {
        Expr::Feature(f) => f.name(),
        Expr::Const(_) => "const",
        Expr::Apply { op, .. } => op.name,
    }
}

fn iso(a: &Expr, b: &Expr) -> bool {
    if label(a) != label(b) {
        return false;
    }
    match (a, b) {
        (Expr::Apply { children: ca, .. }, Expr::Apply { children: cb, .. }) => {
            ca.len() == cb.len() && ca.iter().zip(cb.iter()).all(|(x, y)| iso(x, y))
        }
        _ => true,
    }
}

/// Exhaustive enumeration over every (root-in-a, root-in-b) pair.
pub fn brute_similarity(a: &Expr, b: &Expr) -> usize {
    let mut best = 0;
    for na in a.nodes() {
        for nb in b.nodes() {
            if iso(na, nb) {
                best = best.max(na.node_count());
            }
        }
    }
    best
}
