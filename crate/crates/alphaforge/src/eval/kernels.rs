//! Rolling and distribution statistics shared by the time-series and
//! cross-sectional operators. All kernels require every input in scope to
//! be valid; a window containing any missing value yields a missing output.

use crate::matrix::average_ranks;
use crate::num::Scalar;

/// Apply `f` over each full window of length `w`. Output is missing for
/// warm-up prefixes and for windows containing any missing value.
pub fn rolling<F: Scalar>(x: &[F], w: usize, f: impl Fn(&[F]) -> F) -> Vec<F> {
    let mut out = vec![F::invalid(); x.len()];
    if w == 0 || w > x.len() {
        return out;
    }
    for t in (w - 1)..x.len() {
        let win = &x[t + 1 - w..=t];
        if win.iter().all(|v| v.is_valid()) {
            out[t] = f(win);
        }
    }
    out
}

/// Two-series rolling kernel with the same validity contract.
pub fn rolling2<F: Scalar>(x: &[F], y: &[F], w: usize, f: impl Fn(&[F], &[F]) -> F) -> Vec<F> {
    assert_eq!(x.len(), y.len());
    let mut out = vec![F::invalid(); x.len()];
    if w == 0 || w > x.len() {
        return out;
    }
    for t in (w - 1)..x.len() {
        let (wx, wy) = (&x[t + 1 - w..=t], &y[t + 1 - w..=t]);
        if wx.iter().all(|v| v.is_valid()) && wy.iter().all(|v| v.is_valid()) {
            out[t] = f(wx, wy);
        }
    }
    out
}

pub fn mean<F: Scalar>(xs: &[F]) -> F {
    xs.iter().fold(F::zero(), |a, &b| a + b) / F::from_count(xs.len())
}

/// Sample variance (n−1); missing for fewer than two points.
pub fn sample_var<F: Scalar>(xs: &[F]) -> F {
    if xs.len() < 2 {
        return F::invalid();
    }
    let m = mean(xs);
    xs.iter()
        .map(|&x| (x - m) * (x - m))
        .fold(F::zero(), |a, b| a + b)
        / F::from_count(xs.len() - 1)
}

pub fn sample_std<F: Scalar>(xs: &[F]) -> F {
    sample_var(xs).sqrt()
}

/// Adjusted Fisher-Pearson sample skewness; missing below three points or
/// at zero dispersion.
pub fn sample_skew<F: Scalar>(xs: &[F]) -> F {
    let n = xs.len();
    if n < 3 {
        return F::invalid();
    }
    let s = sample_std(xs);
    if !s.is_valid() || s <= F::zero() {
        return F::invalid();
    }
    let m = mean(xs);
    let sum3 = xs
        .iter()
        .map(|&x| {
            let z = (x - m) / s;
            z * z * z
        })
        .fold(F::zero(), |a, b| a + b);
    let nf = F::from_count(n);
    nf / (F::from_count(n - 1) * F::from_count(n - 2)) * sum3
}

/// Sample excess kurtosis; missing below four points or at zero dispersion.
pub fn sample_excess_kurt<F: Scalar>(xs: &[F]) -> F {
    let n = xs.len();
    if n < 4 {
        return F::invalid();
    }
    let s = sample_std(xs);
    if !s.is_valid() || s <= F::zero() {
        return F::invalid();
    }
    let m = mean(xs);
    let sum4 = xs
        .iter()
        .map(|&x| {
            let z = (x - m) / s;
            z * z * z * z
        })
        .fold(F::zero(), |a, b| a + b);
    let nf = F::from_count(n);
    let n1 = F::from_count(n - 1);
    let n2 = F::from_count(n - 2);
    let n3 = F::from_count(n - 3);
    nf * (nf + F::one()) / (n1 * n2 * n3) * sum4 - F::from_f64_c(3.0) * n1 * n1 / (n2 * n3)
}

/// Median with the average-of-middle-two convention.
pub fn median<F: Scalar>(xs: &[F]) -> F {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n == 0 {
        return F::invalid();
    }
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / F::from_f64_c(2.0)
    }
}

/// Linear-interpolation quantile over a sorted copy of the window.
pub fn quantile<F: Scalar>(xs: &[F], q: F) -> F {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n == 0 {
        return F::invalid();
    }
    let q = q.max(F::zero()).min(F::one());
    let h = F::from_count(n - 1) * q;
    let lo = h.floor();
    let lo_idx = lo.to_usize().unwrap_or(0).min(n - 1);
    let frac = h - lo;
    if lo_idx + 1 < n {
        s[lo_idx] + frac * (s[lo_idx + 1] - s[lo_idx])
    } else {
        s[lo_idx]
    }
}

/// Rank of the last element within the window, average ties, scaled to
/// (0, 1] by the window length.
pub fn ts_rank_last<F: Scalar>(win: &[F]) -> F {
    let ranks = average_ranks(win);
    ranks[win.len() - 1] / F::from_count(win.len())
}

/// Offset from today (0..w−1) of the window maximum; the latest
/// occurrence wins ties.
pub fn argmax_offset<F: Scalar>(win: &[F]) -> F {
    let mut best = win[win.len() - 1];
    let mut offset = 0usize;
    for (k, &v) in win.iter().rev().enumerate() {
        if v > best {
            best = v;
            offset = k;
        }
    }
    F::from_count(offset)
}

pub fn argmin_offset<F: Scalar>(win: &[F]) -> F {
    let mut best = win[win.len() - 1];
    let mut offset = 0usize;
    for (k, &v) in win.iter().rev().enumerate() {
        if v < best {
            best = v;
            offset = k;
        }
    }
    F::from_count(offset)
}

/// Pearson correlation of two full windows; missing at zero variance.
pub fn window_corr<F: Scalar>(x: &[F], y: &[F]) -> F {
    crate::matrix::pearson(x, y).unwrap_or_else(F::invalid)
}

/// Sample covariance (n−1) of two full windows.
pub fn window_cov<F: Scalar>(x: &[F], y: &[F]) -> F {
    let n = x.len();
    if n < 2 {
        return F::invalid();
    }
    let mx = mean(x);
    let my = mean(y);
    x.iter()
        .zip(y.iter())
        .map(|(&a, &b)| (a - mx) * (b - my))
        .fold(F::zero(), |acc, v| acc + v)
        / F::from_count(n - 1)
}

/// Rolling OLS slope of y on x over the window; missing when x is constant.
pub fn window_regbeta<F: Scalar>(y: &[F], x: &[F]) -> F {
    let vx = sample_var(x);
    if !vx.is_valid() || vx <= F::zero() {
        return F::invalid();
    }
    window_cov(x, y) / vx
}

/// OLS residual of y on x at the last point of the window.
pub fn window_regresi<F: Scalar>(y: &[F], x: &[F]) -> F {
    let b = window_regbeta(y, x);
    if !b.is_valid() {
        return F::invalid();
    }
    let a = mean(y) - b * mean(x);
    y[y.len() - 1] - (a + b * x[x.len() - 1])
}

/// Exponential moving average: α = 2/(w+1), seeded at the first valid
/// value. A missing input yields a missing output and resets the
/// recursion; the next valid value re-seeds it.
pub fn ema<F: Scalar>(x: &[F], w: usize) -> Vec<F> {
    let alpha = F::from_f64_c(2.0) / F::from_count(w + 1);
    let mut out = vec![F::invalid(); x.len()];
    let mut state = F::invalid();
    for (t, &v) in x.iter().enumerate() {
        if !v.is_valid() {
            state = F::invalid();
            continue;
        }
        state = if state.is_valid() {
            alpha * v + (F::one() - alpha) * state
        } else {
            v
        };
        out[t] = state;
    }
    out
}

/// Linearly decaying weighted mean: weights w, w−1, …, 1 with w on the
/// most recent observation, normalized.
pub fn wma_last<F: Scalar>(win: &[F]) -> F {
    let mut num = F::zero();
    let mut den = F::zero();
    for (i, &v) in win.iter().enumerate() {
        let weight = F::from_count(i + 1); // oldest gets 1, newest gets w
        num = num + weight * v;
        den = den + weight;
    }
    num / den
}

/// RSI over the last `w` diffs via simple rolling averages of gains and
/// losses; 100 when the average loss is zero.
pub fn rsi_last<F: Scalar>(win: &[F]) -> F {
    // win has w+1 values -> w diffs
    let mut gains = F::zero();
    let mut losses = F::zero();
    for pair in win.windows(2) {
        let d = pair[1] - pair[0];
        if d > F::zero() {
            gains = gains + d;
        } else {
            losses = losses - d;
        }
    }
    let hundred = F::from_f64_c(100.0);
    if losses == F::zero() {
        return hundred;
    }
    hundred - hundred / (F::one() + gains / losses)
}
