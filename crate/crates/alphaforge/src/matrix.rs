//! Dense instruments × dates matrix with NaN-encoded missing cells.

use crate::num::Scalar;

/// Row-major N×T matrix. Rows are instruments, columns are trading dates.
/// A cell is missing iff its value is non-finite; [`Matrix::set`] normalizes
/// every non-finite write to the canonical NaN encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F: Scalar> {
    n_rows: usize,
    n_cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Matrix<F> {
    pub fn invalid(n_rows: usize, n_cols: usize) -> Self {
        Matrix {
            n_rows,
            n_cols,
            data: vec![F::invalid(); n_rows * n_cols],
        }
    }

    pub fn from_rows(rows: &[Vec<F>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.len());
        let mut m = Matrix::invalid(n_rows, n_cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_cols, "ragged row");
            for (t, &v) in row.iter().enumerate() {
                m.set(i, t, v);
            }
        }
        m
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> F {
        self.data[row * self.n_cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: F) {
        self.data[row * self.n_cols + col] = if v.is_valid() { v } else { F::invalid() };
    }

    #[inline]
    pub fn is_valid(&self, row: usize, col: usize) -> bool {
        self.get(row, col).is_valid()
    }

    pub fn row(&self, row: usize) -> &[F] {
        &self.data[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn col(&self, col: usize) -> Vec<F> {
        (0..self.n_rows).map(|i| self.get(i, col)).collect()
    }

    pub fn set_col(&mut self, col: usize, values: &[F]) {
        assert_eq!(values.len(), self.n_rows);
        for (i, &v) in values.iter().enumerate() {
            self.set(i, col, v);
        }
    }

    pub fn set_row(&mut self, row: usize, values: &[F]) {
        assert_eq!(values.len(), self.n_cols);
        for (t, &v) in values.iter().enumerate() {
            self.set(row, t, v);
        }
    }

    pub fn map<G: Fn(F) -> F>(&self, f: G) -> Matrix<F> {
        let mut out = Matrix::invalid(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for t in 0..self.n_cols {
                let v = self.get(i, t);
                if v.is_valid() {
                    out.set(i, t, f(v));
                }
            }
        }
        out
    }

    pub fn zip<G: Fn(F, F) -> F>(&self, other: &Matrix<F>, f: G) -> Matrix<F> {
        assert_eq!(self.shape(), other.shape(), "shape mismatch");
        let mut out = Matrix::invalid(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for t in 0..self.n_cols {
                let (a, b) = (self.get(i, t), other.get(i, t));
                if a.is_valid() && b.is_valid() {
                    out.set(i, t, f(a, b));
                }
            }
        }
        out
    }

    /// Number of valid cells.
    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|v| v.is_valid()).count()
    }
}

/// Average ranks (1-based) of the valid entries of `values`; invalid entries
/// yield NaN. Ties receive the mean of the ranks they span.
pub fn average_ranks<F: Scalar>(values: &[F]) -> Vec<F> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i].is_valid()).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![F::invalid(); values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged over the tie group
        let avg = F::from_count(i + 1 + j + 1) / F::from_f64_c(2.0);
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Pearson correlation over the pairs where both entries are valid.
/// Returns `None` when fewer than two joint-valid pairs exist or either
/// side has zero variance.
pub fn pearson<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    assert_eq!(xs.len(), ys.len());
    let pairs: Vec<(F, F)> = xs
        .iter()
        .zip(ys.iter())
        .filter(|(x, y)| x.is_valid() && y.is_valid())
        .map(|(&x, &y)| (x, y))
        .collect();
    if pairs.len() < 2 {
        return None;
    }
    let n = F::from_count(pairs.len());
    let mx = pairs.iter().map(|p| p.0).fold(F::zero(), |a, b| a + b) / n;
    let my = pairs.iter().map(|p| p.1).fold(F::zero(), |a, b| a + b) / n;
    let mut sxx = F::zero();
    let mut syy = F::zero();
    let mut sxy = F::zero();
    for (x, y) in pairs {
        let dx = x - mx;
        let dy = y - my;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
        sxy = sxy + dx * dy;
    }
    if sxx <= F::zero() || syy <= F::zero() {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Spearman correlation: Pearson over joint-valid average-rank vectors.
pub fn spearman<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    assert_eq!(xs.len(), ys.len());
    // Restrict to joint-valid positions before ranking so each side is
    // ranked over the same support.
    let mut jx = Vec::new();
    let mut jy = Vec::new();
    for (x, y) in xs.iter().zip(ys.iter()) {
        if x.is_valid() && y.is_valid() {
            jx.push(*x);
            jy.push(*y);
        }
    }
    pearson(&average_ranks(&jx), &average_ranks(&jy))
}

/// Sample mean; `None` on empty input.
pub fn mean<F: Scalar>(xs: &[F]) -> Option<F> {
    if xs.is_empty() {
        return None;
    }
    Some(xs.iter().fold(F::zero(), |a, &b| a + b) / F::from_count(xs.len()))
}

/// Sample standard deviation with n−1 denominator; `None` for fewer than two points.
pub fn sample_std<F: Scalar>(xs: &[F]) -> Option<F> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs)?;
    let ss = xs.iter().map(|&x| (x - m) * (x - m)).fold(F::zero(), |a, b| a + b);
    Some((ss / F::from_count(xs.len() - 1)).sqrt())
}
