//! Compressed sparse row storage and a banded Cholesky factorization.
//!
//! Every matrix assembled in this crate comes from a structured grid, so the
//! natural node numbering already has a small bandwidth and a banded direct
//! factorization is enough for the shifted solves used by the eigensolver
//! and the Newton iteration.

use std::fmt::Write as _;

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    /// Set for matrices built by [`CsrMatrix::from_laplacian`]: the
    /// diagonal part not accounted for by the edge weights.
    reaction: Option<Vec<f64>>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix from `(row, col, value)` triplets; duplicate
    /// entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}×{n}");
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for (j, v) in row {
                if last == Some(j) {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
            reaction: None,
        }
    }

    /// Weighted graph Laplacian `Σ w (e_a - e_b)(e_a - e_b)ᵀ` over `edges`
    /// plus `diag(reaction)`. Products are evaluated in difference form, so
    /// the Laplacian part maps constants to exactly zero.
    pub fn from_laplacian(n: usize, edges: &[(usize, usize, f64)], reaction: &[f64]) -> Self {
        assert_eq!(reaction.len(), n);
        let mut triplets = Vec::with_capacity(4 * edges.len() + n);
        for &(a, b, w) in edges {
            triplets.extend([(a, a, w), (b, b, w), (a, b, -w), (b, a, -w)]);
        }
        triplets.extend(reaction.iter().enumerate().map(|(i, &r)| (i, i, r)));
        Self {
            reaction: Some(reaction.to_vec()),
            ..Self::from_triplets(n, &triplets)
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            row_ptr: vec![0; n + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            reaction: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates over stored entries as `(row, col, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        if let Some(reaction) = &self.reaction {
            return (0..self.n)
                .map(|i| {
                    let xi = x[i];
                    let off: f64 = (self.row_ptr[i]..self.row_ptr[i + 1])
                        .filter(|&k| self.col_idx[k] != i)
                        .map(|k| self.values[k] * (x[self.col_idx[k]] - xi))
                        .sum();
                    reaction[i] * xi + off
                })
                .collect();
        }
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.values[k] * x[self.col_idx[k]])
                    .sum()
            })
            .collect()
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.n);
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// Largest absolute difference `|A_ij - A_ji|` over stored entries.
    pub fn asymmetry(&self) -> f64 {
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Half bandwidth: `max |i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        self.iter().map(|(i, j, _)| i.abs_diff(j)).max().unwrap_or(0)
    }

    /// Dense copy, row-major. Intended for small matrices and tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, j, v) in self.iter() {
            d[i][j] += v;
        }
        d
    }

    /// Coordinate text format: a `%%` header line, the `rows cols nnz`
    /// line, then one `row col value` line per entry with 1-based indices.
    pub fn to_coo_text(&self) -> String {
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, self.nnz());
        for (i, j, v) in self.iter() {
            let _ = writeln!(out, "{} {} {:.17e}", i + 1, j + 1, v);
        }
        out
    }

    /// Banded lower-triangular copy of `self + diag(shift)`, ready for
    /// [`BandedCholesky::factor`]. Only the lower triangle is read.
    pub fn to_banded(&self, shift: Option<&[f64]>) -> BandedMatrix {
        let bw = self.bandwidth();
        let mut band = BandedMatrix::zeros(self.n, bw);
        for (i, j, v) in self.iter() {
            if j <= i {
                *band.entry_mut(i, j) += v;
            }
        }
        if let Some(d) = shift {
            assert_eq!(d.len(), self.n);
            for (i, di) in d.iter().enumerate() {
                *band.entry_mut(i, i) += di;
            }
        }
        band
    }
}

/// Symmetric banded matrix, lower band stored row by row:
/// `data[i * (bw + 1) + k] = A[i][i - k]`.
#[derive(Clone, Debug)]
pub struct BandedMatrix {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    fn entry_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        debug_assert!(j <= i && i - j <= self.bw);
        &mut self.data[i * (self.bw + 1) + (i - j)]
    }

    fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * (self.bw + 1) + (i - j)]
    }
}

/// `A = L Lᵀ` for a symmetric positive definite banded `A`.
#[derive(Clone, Debug)]
pub struct BandedCholesky {
    factor: BandedMatrix,
    min_pivot_ratio: f64,
}

impl BandedCholesky {
    pub fn factor(mut a: BandedMatrix) -> Result<Self> {
        let (n, bw) = (a.n, a.bw);
        let mut max_pivot: f64 = 0.0;
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let lo = j.saturating_sub(bw);
            let mut d = a.entry(j, j);
            for k in lo..j {
                let l = a.entry(j, k);
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { row: j, pivot: d });
            }
            let djj = d.sqrt();
            max_pivot = max_pivot.max(d);
            min_pivot = min_pivot.min(d);
            *a.entry_mut(j, j) = djj;
            for i in (j + 1)..(j + bw + 1).min(n) {
                let lo_i = i.saturating_sub(bw).max(lo);
                let mut s = a.entry(i, j);
                for k in lo_i..j {
                    s -= a.entry(i, k) * a.entry(j, k);
                }
                *a.entry_mut(i, j) = s / djj;
            }
        }
        Ok(Self {
            factor: a,
            min_pivot_ratio: if n == 0 { 1.0 } else { min_pivot / max_pivot },
        })
    }

    /// Smallest over largest squared pivot; a cheap conditioning indicator.
    pub fn min_pivot_ratio(&self) -> f64 {
        self.min_pivot_ratio
    }

    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let (n, bw) = (l.n, l.bw);
        assert_eq!(rhs.len(), n);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.entry(i, k) * y[k];
            }
            y[i] = s / l.entry(i, i);
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..(i + bw + 1).min(n) {
                s -= l.entry(k, i) * y[k];
            }
            y[i] = s / l.entry(i, i);
        }
        y
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ w_i a_i b_i`.
pub(crate) fn wdot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, x), y)| w * x * y).sum()
}
