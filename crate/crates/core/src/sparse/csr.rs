use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn new(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != n_rows + 1 || row_ptr[0] != 0 {
            return Err(Error::Dimension(
                "row_ptr must have n_rows + 1 entries starting at 0".into(),
            ));
        }
        if row_ptr.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Dimension("row_ptr is not monotone".into()));
        }
        let nnz = row_ptr[n_rows];
        if col_idx.len() != nnz || values.len() != nnz {
            return Err(Error::Dimension(format!("expected {nnz} stored entries")));
        }
        for r in 0..n_rows {
            let cols = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) || cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::Dimension(format!(
                    "row {r} columns unsorted or out of range"
                )));
            }
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    /// Sums duplicate entries.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(Error::Dimension(format!(
                    "triplet ({r},{c}) outside {n_rows}x{n_cols}"
                )));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Zero-valued matrix whose pattern couples every row dof of a cell with
    /// every column dof of the same cell.
    pub fn pattern_from_cells<'a>(
        n_rows: usize,
        n_cols: usize,
        cells: impl Iterator<Item = (&'a [usize], &'a [usize])>,
    ) -> Self {
        let mut rows: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n_rows];
        for (rd, cd) in cells {
            for &r in rd {
                rows[r].extend(cd.iter().copied());
            }
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        for row in rows {
            col_idx.extend(row);
            row_ptr.push(col_idx.len());
        }
        let values = vec![0.0; col_idx.len()];
        CsrMatrix {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    /// Storage index of entry `(r, c)` if it is in the pattern.
    #[inline]
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.col_idx[start..self.row_ptr[r + 1]]
            .binary_search(&c)
            .ok()
            .map(|k| start + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` to an entry that must already be in the pattern.
    #[inline]
    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        let k = self.position(r, c).expect("entry outside sparsity pattern");
        self.values[k] += v;
    }

    pub fn zeros_like(&self) -> Self {
        CsrMatrix {
            values: vec![0.0; self.values.len()],
            ..self.clone()
        }
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.n_rows == other.n_rows
            && self.n_cols == other.n_cols
            && self.row_ptr == other.row_ptr
            && self.col_idx == other.col_idx
    }

    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::Dimension(format!(
                "spmv: {} columns, vector of length {}",
                self.n_cols,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x` without dimension checks beyond slice indexing.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate().take(self.n_rows) {
            let span = self.row_ptr[r]..self.row_ptr[r + 1];
            *yr = self.col_idx[span.clone()]
                .iter()
                .zip(&self.values[span])
                .map(|(&c, &v)| v * x[c])
                .sum();
        }
    }

    /// `y = Aᵀ x`.
    pub fn spmv_transpose(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(Error::Dimension(format!(
                "spmvᵀ: {} rows, vector of length {}",
                self.n_rows,
                x.len()
            )));
        }
        let mut y = vec![0.0; self.n_cols];
        for (r, &xr) in x.iter().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xr;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for i in 0..self.n_cols {
            counts[i + 1] += counts[i];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let k = next[c];
                col_idx[k] = r;
                values[k] = v;
                next[c] += 1;
            }
        }
        CsrMatrix {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    /// `Σ cᵢ Aᵢ` over matrices sharing one pattern.
    pub fn linear_combination(terms: &[(f64, &CsrMatrix)]) -> Result<Self> {
        let (_, first) = *terms
            .first()
            .ok_or_else(|| Error::Dimension("empty combination".into()))?;
        let mut out = first.zeros_like();
        for &(c, m) in terms {
            if !m.same_pattern(first) {
                return Err(Error::Dimension(
                    "linear combination requires identical patterns".into(),
                ));
            }
            for (o, v) in out.values.iter_mut().zip(&m.values) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// Assembles `[[a, b], [c, d]]` from four blocks of equal shape.
    pub fn block2x2(a: &CsrMatrix, b: &CsrMatrix, c: &CsrMatrix, d: &CsrMatrix) -> Result<Self> {
        let (n, m) = (a.n_rows, a.n_cols);
        if [b, c, d].iter().any(|x| x.n_rows != n || x.n_cols != m) {
            return Err(Error::Dimension(
                "block2x2 requires equally shaped blocks".into(),
            ));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(a.nnz() + b.nnz() + c.nnz() + d.nnz());
        let mut values = Vec::with_capacity(col_idx.capacity());
        for (left, right) in [(a, b), (c, d)] {
            for r in 0..n {
                let (lc, lv) = left.row(r);
                col_idx.extend_from_slice(lc);
                values.extend_from_slice(lv);
                let (rc, rv) = right.row(r);
                col_idx.extend(rc.iter().map(|&j| j + m));
                values.extend_from_slice(rv);
                row_ptr.push(col_idx.len());
            }
        }
        Ok(CsrMatrix {
            n_rows: 2 * n,
            n_cols: 2 * m,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n_cols]; self.n_rows];
        for (r, row) in d.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                row[c] = v;
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |aᵢⱼ - aⱼᵢ| / max |aᵢⱼ|`.
    pub fn symmetry_defect(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst: f64 = 0.0;
        for r in 0..self.n_rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst / scale
    }

    pub fn scale(&mut self, c: f64) {
        self.values.iter_mut().for_each(|v| *v *= c);
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spmv_examples() {
        let x = vec![1.5, -2.0, 3.0];
        assert_eq!(CsrMatrix::identity(3).spmv(&x).unwrap(), x);
        let z = CsrMatrix::from_triplets(3, 3, &[]).unwrap();
        assert_eq!(z.spmv(&x).unwrap(), vec![0.0; 3]);
        let a =
            CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0), (1, 1, 4.0)])
                .unwrap();
        assert_eq!(a.spmv(&[1.0, 1.0]).unwrap(), vec![3.0, 7.0]);
        assert!(matches!(a.spmv(&[1.0]), Err(Error::Dimension(_))));
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a =
            CsrMatrix::from_triplets(2, 3, &[(0, 2, 1.0), (0, 0, 2.0), (0, 2, 0.5), (1, 1, -1.0)])
                .unwrap();
        assert_eq!(a.col_idx(), &[0, 2, 1]);
        assert_eq!(a.get(0, 2), 1.5);
        assert_eq!(a.nnz(), 3);
    }

    #[test]
    fn validation_rejects_bad_structure() {
        assert!(CsrMatrix::new(2, 2, vec![0, 1], vec![0], vec![1.0]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![1, 0], vec![1.0, 1.0]).is_err());
        assert!(CsrMatrix::new(1, 2, vec![0, 2], vec![0, 1], vec![1.0, 1.0]).is_ok());
    }

    #[test]
    fn block_matrix_layout() {
        let i = CsrMatrix::identity(2);
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 1, 5.0)]).unwrap();
        let b = CsrMatrix::block2x2(&i, &a, &a.transpose(), &i).unwrap();
        let d = b.to_dense();
        assert_eq!(d[0], vec![1.0, 0.0, 0.0, 5.0]);
        assert_eq!(d[3], vec![5.0, 0.0, 0.0, 1.0]);
        assert_eq!(d[2], vec![0.0, 0.0, 1.0, 0.0]);
    }

    fn arb_matrix() -> impl Strategy<Value = (CsrMatrix, Vec<f64>, Vec<f64>)> {
        (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
            (
                prop::collection::vec((0..r, 0..c, -10.0f64..10.0), 0..30),
                prop::collection::vec(-5.0f64..5.0, c),
                prop::collection::vec(-5.0f64..5.0, r),
            )
                .prop_map(move |(t, x, y)| (CsrMatrix::from_triplets(r, c, &t).unwrap(), x, y))
        })
    }

    proptest! {
        #[test]
        fn transpose_is_adjoint((a, x, y) in arb_matrix()) {
            let ax = a.spmv(&x).unwrap();
            let aty = a.transpose().spmv(&y).unwrap();
            let lhs = dot(&ax, &y);
            let rhs = dot(&x, &aty);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
            prop_assert_eq!(a.transpose().transpose(), a.clone());
            for (u, v) in a.spmv_transpose(&y).unwrap().iter().zip(&aty) {
                prop_assert!((u - v).abs() <= 1e-12 * (1.0 + v.abs()));
            }
        }
    }
}
