//! Exact rational linear algebra: dense matrices and an incremental echelon form.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use crate::polyring::{rat_to_f64, Rational};

/// Dense row-major rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        QMatrix { rows, cols, data: vec![Rational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Rational::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        QMatrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Rational] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows, "inner dimension mismatch");
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out.data[i * other.cols + j] += a * b;
                    }
                }
            }
        }
        out
    }

    /// `selfᵀ · a · self`.
    pub fn congruence(&self, a: &QMatrix) -> QMatrix {
        self.transpose().mul(&a.mul(self))
    }

    pub fn scale(&self, c: &Rational) -> QMatrix {
        QMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|x| x * c).collect() }
    }

    pub fn add(&self, other: &QMatrix) -> QMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        QMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    /// `selfᵀ (I_m ⊗ a) self`, summed block by block without forming the Kronecker product.
    pub fn block_congruence(&self, a: &QMatrix) -> QMatrix {
        let d = a.rows;
        assert_eq!(self.rows % d, 0, "row count must be a multiple of the block size");
        let blocks = self.rows / d;
        let mut out = QMatrix::zeros(self.cols, self.cols);
        for b in 0..blocks {
            let block = self.row_block(b * d, d);
            out = out.add(&block.congruence(a));
        }
        out
    }

    pub fn row_block(&self, start: usize, count: usize) -> QMatrix {
        QMatrix {
            rows: count,
            cols: self.cols,
            data: self.data[start * self.cols..(start + count) * self.cols].to_vec(),
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| rat_to_f64(&self[(i, j)]))
    }

    /// Determinant by fraction-exact Gaussian elimination.
    pub fn determinant(&self) -> Rational {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Rational::one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !a[(r, col)].is_zero()) else {
                return Rational::zero();
            };
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[(col, col)].clone();
            det *= &p;
            for r in (col + 1)..n {
                let f = &a[(r, col)] / &p;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = &a[(col, j)] * &f;
                    a.data[r * n + j] -= v;
                }
            }
        }
        det
    }

    /// Solves `self · x = b` for square nonsingular `self`; `None` if singular.
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut rhs = b.to_vec();
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                }
                rhs.swap(piv, col);
            }
            let inv = a[(col, col)].recip();
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = &a[(r, col)] * &inv;
                if f.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = &a[(col, j)] * &f;
                    a.data[r * n + j] -= v;
                }
                let v = &rhs[col] * &f;
                rhs[r] -= v;
            }
        }
        Some((0..n).map(|i| &rhs[i] / &a[(i, i)]).collect())
    }

    /// Gauss–Jordan inverse; `None` if singular.
    pub fn inverse(&self) -> Option<QMatrix> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = QMatrix::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            if piv != col {
                for j in 0..n {
                    a.data.swap(piv * n + j, col * n + j);
                    inv.data.swap(piv * n + j, col * n + j);
                }
            }
            let p = a[(col, col)].recip();
            for j in 0..n {
                a.data[col * n + j] *= &p;
                inv.data[col * n + j] *= &p;
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    let v = &a.data[col * n + j] * &f;
                    a.data[r * n + j] -= v;
                    let w = &inv.data[col * n + j] * &f;
                    inv.data[r * n + j] -= w;
                }
            }
        }
        Some(inv)
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Rational;
    fn index(&self, (i, j): (usize, usize)) -> &Rational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Rational {
        &mut self.data[i * self.cols + j]
    }
}

/// Sparse rational vector as sorted `(index, value)` pairs without zeros.
pub type SparseVec = Vec<(usize, Rational)>;

#[derive(Clone, Debug)]
struct EchelonRow {
    pivot: usize,
    entries: HashMap<usize, Rational>,
    /// This row as a combination of inserted vectors, keyed by tag.
    combo: HashMap<usize, Rational>,
}

/// Fully reduced row echelon form built incrementally, tracking how every
/// stored row combines the inserted vectors.
#[derive(Clone, Debug, Default)]
pub struct Echelon {
    rows: Vec<EchelonRow>,
    pivot_row: HashMap<usize, usize>,
}

impl Echelon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    // Returns the residual of `v` after eliminating pivots, and the
    // coefficients of the stored rows used.
    fn reduce(&self, v: &SparseVec) -> (HashMap<usize, Rational>, Vec<(usize, Rational)>) {
        let mut residual: HashMap<usize, Rational> = v.iter().cloned().collect();
        let mut used = Vec::new();
        for (idx, val) in v {
            if let Some(&r) = self.pivot_row.get(idx) {
                // rows are fully reduced, so v's pivot entries are unaffected by other rows
                used.push((r, val.clone()));
                for (j, a) in &self.rows[r].entries {
                    let e = residual.entry(*j).or_insert_with(Rational::zero);
                    *e -= val * a;
                }
            }
        }
        residual.retain(|_, x| !x.is_zero());
        (residual, used)
    }

    /// Inserts `v` with the given tag; returns true when the rank increases.
    pub fn insert(&mut self, v: &SparseVec, tag: usize) -> bool {
        let (residual, used) = self.reduce(v);
        if residual.is_empty() {
            return false;
        }
        let pivot = *residual.keys().min().unwrap();
        let inv = residual[&pivot].recip();
        let entries: HashMap<usize, Rational> =
            residual.into_iter().map(|(j, x)| (j, x * &inv)).collect();
        let mut combo: HashMap<usize, Rational> = HashMap::new();
        combo.insert(tag, inv.clone());
        for (r, c) in &used {
            for (t, x) in &self.rows[*r].combo {
                *combo.entry(*t).or_insert_with(Rational::zero) -= c * x * &inv;
            }
        }
        combo.retain(|_, x| !x.is_zero());
        // eliminate the new pivot from existing rows
        for row in &mut self.rows {
            let Some(f) = row.entries.get(&pivot).cloned() else { continue };
            for (j, x) in &entries {
                let e = row.entries.entry(*j).or_insert_with(Rational::zero);
                *e -= &f * x;
            }
            row.entries.retain(|_, x| !x.is_zero());
            for (t, x) in &combo {
                let e = row.combo.entry(*t).or_insert_with(Rational::zero);
                *e -= &f * x;
            }
            row.combo.retain(|_, x| !x.is_zero());
        }
        self.pivot_row.insert(pivot, self.rows.len());
        self.rows.push(EchelonRow { pivot, entries, combo });
        true
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).0.is_empty()
    }

    /// Expresses `v` as a combination of inserted vectors (by tag), if possible.
    pub fn express(&self, v: &SparseVec) -> Option<HashMap<usize, Rational>> {
        let (residual, used) = self.reduce(v);
        if !residual.is_empty() {
            return None;
        }
        let mut out: HashMap<usize, Rational> = HashMap::new();
        for (r, c) in used {
            for (t, x) in &self.rows[r].combo {
                *out.entry(*t).or_insert_with(Rational::zero) += &c * x;
            }
        }
        out.retain(|_, x| !x.is_zero());
        Some(out)
    }

    /// The residual of `v` modulo the stored span, as a sorted sparse vector.
    pub fn residual(&self, v: &SparseVec) -> SparseVec {
        let mut r: SparseVec = self.reduce(v).0.into_iter().collect();
        r.sort_by_key(|(j, _)| *j);
        r
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.pivot).collect()
    }
}

/// Row-sparse rational matrix; rows are sorted sparse vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseQMatrix {
    ncols: usize,
    rows: Vec<SparseVec>,
}

impl SparseQMatrix {
    pub fn new(ncols: usize, rows: Vec<SparseVec>) -> Self {
        debug_assert!(rows.iter().all(|r| r.iter().all(|(j, x)| *j < ncols && !x.is_zero())));
        SparseQMatrix { ncols, rows }
    }

    pub fn identity(n: usize) -> Self {
        SparseQMatrix { ncols: n, rows: (0..n).map(|i| vec![(i, Rational::one())]).collect() }
    }

    pub fn from_dense(m: &QMatrix) -> Self {
        let rows = (0..m.nrows())
            .map(|i| {
                m.row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, x)| !x.is_zero())
                    .map(|(j, x)| (j, x.clone()))
                    .collect()
            })
            .collect();
        SparseQMatrix { ncols: m.ncols(), rows }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn to_dense(&self) -> QMatrix {
        let mut m = QMatrix::zeros(self.rows.len(), self.ncols);
        for (i, row) in self.rows.iter().enumerate() {
            for (j, x) in row {
                m[(i, *j)] = x.clone();
            }
        }
        m
    }

    /// `self · b` for a row-sparse right factor.
    pub fn mul_sparse(&self, b: &SparseQMatrix) -> SparseQMatrix {
        assert_eq!(self.ncols, b.nrows());
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let mut acc: HashMap<usize, Rational> = HashMap::new();
                for (k, a) in row {
                    for (j, x) in &b.rows[*k] {
                        *acc.entry(*j).or_insert_with(Rational::zero) += a * x;
                    }
                }
                let mut out: SparseVec = acc.into_iter().filter(|(_, x)| !x.is_zero()).collect();
                out.sort_by_key(|(j, _)| *j);
                out
            })
            .collect();
        SparseQMatrix { ncols: b.ncols, rows }
    }

    /// `I_m ⊗ self`.
    pub fn kron_identity_left(&self, m: usize) -> SparseQMatrix {
        let mut rows = Vec::with_capacity(m * self.rows.len());
        for b in 0..m {
            for row in &self.rows {
                rows.push(row.iter().map(|(j, x)| (b * self.ncols + j, x.clone())).collect());
            }
        }
        SparseQMatrix { ncols: m * self.ncols, rows }
    }

    /// `selfᵀ (I ⊗ a) self` where the block size is `a`'s dimension.
    pub fn block_congruence(&self, a: &QMatrix) -> QMatrix {
        let d = a.nrows();
        assert_eq!(self.rows.len() % d, 0, "row count must be a multiple of the block size");
        let n = self.ncols;
        let mut out = QMatrix::zeros(n, n);
        for block in self.rows.chunks(d) {
            // x = a · block  (d × n), then out += blockᵀ · x
            let mut x = QMatrix::zeros(d, n);
            for (r, row) in block.iter().enumerate() {
                for (c, v) in row {
                    for i in 0..d {
                        let air = &a[(i, r)];
                        if !air.is_zero() {
                            x[(i, *c)] += air * v;
                        }
                    }
                }
            }
            for (r, row) in block.iter().enumerate() {
                for (c, v) in row {
                    for j in 0..n {
                        let xr = &x[(r, j)];
                        if !xr.is_zero() {
                            out[(*c, j)] += v * xr;
                        }
                    }
                }
            }
        }
        out
    }

    /// Float copy as `(row, col, value)` triplets grouped by row.
    pub fn to_f64_rows(&self) -> Vec<Vec<(usize, f64)>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(j, x)| (*j, rat_to_f64(x))).collect())
            .collect()
    }
}
