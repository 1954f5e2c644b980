//! Smallest eigenvalue of symmetric-definite pencils `(A, B)`.
//!
//! Small problems go through a dense Cholesky reduction and a symmetric
//! eigensolve. Large ones use Lanczos in the `B` inner product on `B⁻¹A`
//! with full reorthogonalization and explicit restarts, and only need
//! matrix-vector products, so operators may be implicit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EigError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("right-hand matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Symmetric linear operator on `R^d`.
pub trait SymOperator: Send + Sync {
    fn dim(&self) -> usize;

    /// `y = self · x`.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn diagonal(&self) -> Vec<f64> {
        let d = self.dim();
        let mut e = vec![0.0; d];
        let mut y = vec![0.0; d];
        (0..d)
            .map(|i| {
                e[i] = 1.0;
                self.apply(&e, &mut y);
                e[i] = 0.0;
                y[i]
            })
            .collect()
    }

    /// True when the operator is known to be diagonal.
    fn is_diagonal(&self) -> bool {
        false
    }

    /// Dense copy, column by column.
    fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d);
        let mut e = vec![0.0; d];
        let mut y = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            self.apply(&e, &mut y);
            e[j] = 0.0;
            out.column_mut(j).copy_from_slice(&y);
        }
        out
    }

    /// Upper bound on the spectral norm (default: power-free bound from a few probes).
    fn norm_bound(&self) -> f64 {
        let dense = self.to_dense();
        inf_norm(&dense)
    }
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Lower-triangle compressed sparse symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSym {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseSym {
    /// Builds from `(i, j, v)` triplets; entries from either triangle are
    /// folded into the lower one and duplicates are summed.
    pub fn from_triplets(dim: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); dim];
        for (i, j, v) in triplets {
            let (r, c) = if i >= j { (i, j) } else { (j, i) };
            *rows[r].entry(c).or_insert(0.0) += v;
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for row in rows {
            for (c, v) in row {
                if v != 0.0 {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseSym { dim, row_ptr, cols, vals }
    }

    /// Number of stored (lower-triangle) entries.
    pub fn stored_entries(&self) -> usize {
        self.vals.len()
    }

    /// Iterates stored lower-triangle entries `(i, j, v)` with `j ≤ i`.
    pub fn lower_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.dim).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |p| (i, self.cols[p], self.vals[p]))
        })
    }
}

/// Symmetric matrix storage.
#[derive(Debug, Clone, PartialEq)]
pub enum SymmetricMatrix {
    /// Full dense storage; callers must supply a symmetric matrix.
    Dense(DMatrix<f64>),
    Sparse(SparseSym),
    Diagonal(Vec<f64>),
}

impl SymmetricMatrix {
    /// Dense storage after averaging with the transpose.
    pub fn dense_symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        SymmetricMatrix::Dense((m + t) * 0.5)
    }

    pub fn identity(d: usize) -> Self {
        SymmetricMatrix::Diagonal(vec![1.0; d])
    }

    pub fn is_finite(&self) -> bool {
        match self {
            SymmetricMatrix::Dense(m) => m.iter().all(|x| x.is_finite()),
            SymmetricMatrix::Sparse(s) => s.vals.iter().all(|x| x.is_finite()),
            SymmetricMatrix::Diagonal(d) => d.iter().all(|x| x.is_finite()),
        }
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }
}

impl SymOperator for SymmetricMatrix {
    fn dim(&self) -> usize {
        match self {
            SymmetricMatrix::Dense(m) => m.nrows(),
            SymmetricMatrix::Sparse(s) => s.dim,
            SymmetricMatrix::Diagonal(d) => d.len(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            SymmetricMatrix::Dense(m) => {
                let d = m.nrows();
                // symmetric: y_i = column_i · x, columns are contiguous
                if d >= 256 {
                    y.par_iter_mut().enumerate().for_each(|(i, yi)| {
                        *yi = dot(m.column(i).as_slice(), x);
                    });
                } else {
                    for (i, yi) in y.iter_mut().enumerate() {
                        *yi = dot(m.column(i).as_slice(), x);
                    }
                }
            }
            SymmetricMatrix::Sparse(s) => {
                y.iter_mut().for_each(|v| *v = 0.0);
                for i in 0..s.dim {
                    for p in s.row_ptr[i]..s.row_ptr[i + 1] {
                        let (j, v) = (s.cols[p], s.vals[p]);
                        y[i] += v * x[j];
                        if j != i {
                            y[j] += v * x[i];
                        }
                    }
                }
            }
            SymmetricMatrix::Diagonal(d) => {
                for ((yi, di), xi) in y.iter_mut().zip(d).zip(x) {
                    *yi = di * xi;
                }
            }
        }
    }

    fn diagonal(&self) -> Vec<f64> {
        match self {
            SymmetricMatrix::Dense(m) => m.diagonal().iter().copied().collect(),
            SymmetricMatrix::Sparse(s) => {
                let mut out = vec![0.0; s.dim];
                for (i, j, v) in s.lower_entries() {
                    if i == j {
                        out[i] = v;
                    }
                }
                out
            }
            SymmetricMatrix::Diagonal(d) => d.clone(),
        }
    }

    fn is_diagonal(&self) -> bool {
        matches!(self, SymmetricMatrix::Diagonal(_))
    }

    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            SymmetricMatrix::Dense(m) => m.clone(),
            SymmetricMatrix::Sparse(s) => {
                let mut out = DMatrix::zeros(s.dim, s.dim);
                for (i, j, v) in s.lower_entries() {
                    out[(i, j)] = v;
                    out[(j, i)] = v;
                }
                out
            }
            SymmetricMatrix::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_vec(d.clone())),
        }
    }

    fn norm_bound(&self) -> f64 {
        match self {
            SymmetricMatrix::Dense(m) => inf_norm(m),
            SymmetricMatrix::Sparse(s) => {
                let mut rows = vec![0.0; s.dim];
                for (i, j, v) in s.lower_entries() {
                    rows[i] += v.abs();
                    if i != j {
                        rows[j] += v.abs();
                    }
                }
                rows.into_iter().fold(0.0, f64::max)
            }
            SymmetricMatrix::Diagonal(d) => d.iter().map(|x| x.abs()).fold(0.0, f64::max),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EigPath {
    Dense,
    Iterative,
}

impl EigPath {
    pub fn name(&self) -> &'static str {
        match self {
            EigPath::Dense => "dense",
            EigPath::Iterative => "iterative",
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigOptions {
    /// Relative tolerance; defaults depend on the path.
    pub tol: Option<f64>,
    /// Largest dimension handled by the dense path.
    pub dense_cutoff: usize,
    /// Cap on operator applications for the iterative path (default `10·d`).
    pub max_iter: Option<usize>,
    pub seed: u64,
    /// Forces a path regardless of dimension.
    pub force_path: Option<EigPath>,
    /// Return the eigenvector.
    pub want_vector: bool,
}

impl Default for EigOptions {
    fn default() -> Self {
        EigOptions {
            tol: None,
            dense_cutoff: 512,
            max_iter: None,
            seed: 0x5eed,
            force_path: None,
            want_vector: true,
        }
    }
}

pub const DENSE_TOL: f64 = 1e-9;
pub const ITERATIVE_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct EigResult {
    pub lambda_min: f64,
    pub vector: Option<Vec<f64>>,
    pub iterations: usize,
    /// `‖Av − λBv‖ / (‖A‖·‖v‖)` for the returned vector.
    pub residual_norm: f64,
    pub path: EigPath,
    pub converged: bool,
}

/// `λ_min(A, B)` for symmetric `A` and symmetric positive definite `B`.
pub fn lambda_min_generalized(
    a: &dyn SymOperator,
    b: &dyn SymOperator,
    opts: &EigOptions,
) -> Result<EigResult, EigError> {
    if a.dim() != b.dim() {
        return Err(EigError::DimensionMismatch(a.dim(), b.dim()));
    }
    let d = a.dim();
    let path = opts.force_path.unwrap_or(if d <= opts.dense_cutoff {
        EigPath::Dense
    } else {
        EigPath::Iterative
    });
    match path {
        EigPath::Dense => dense_lambda_min(&a.to_dense(), &b.to_dense(), opts),
        EigPath::Iterative => lanczos_lambda_min(a, b, opts),
    }
}

/// Dense path: `B = LLᵀ`, eigensolve of `L⁻¹AL⁻ᵀ`.
pub fn dense_lambda_min(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    opts: &EigOptions,
) -> Result<EigResult, EigError> {
    let d = a.nrows();
    if a.ncols() != d || b.nrows() != d || b.ncols() != d {
        return Err(EigError::DimensionMismatch(d, b.nrows()));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(EigError::NonFinite);
    }
    if d == 0 {
        return Ok(EigResult {
            lambda_min: f64::INFINITY,
            vector: None,
            iterations: 0,
            residual_norm: 0.0,
            path: EigPath::Dense,
            converged: true,
        });
    }
    let bs = (b + b.transpose()) * 0.5;
    let as_ = (a + a.transpose()) * 0.5;
    let chol = bs.clone().cholesky().ok_or(EigError::NotPositiveDefinite)?;
    let l = chol.l();
    // C = L⁻¹ A L⁻ᵀ
    let x = l.solve_lower_triangular(&as_).ok_or(EigError::NotPositiveDefinite)?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or(EigError::NotPositiveDefinite)?;
    let c = (&c + c.transpose()) * 0.5;
    let eig = SymmetricEigen::new(c);
    let (imin, lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let y = eig.eigenvectors.column(imin).into_owned();
    let v = l.transpose().solve_upper_triangular(&y).ok_or(EigError::NotPositiveDefinite)?;
    let r = &as_ * &v - (&bs * &v) * lambda;
    let scale = inf_norm(&as_).max(inf_norm(&bs) * lambda.abs()).max(f64::MIN_POSITIVE);
    let residual_norm = r.norm() / (scale * v.norm());
    let _ = opts;
    Ok(EigResult {
        lambda_min: lambda,
        vector: opts.want_vector.then(|| v.iter().copied().collect()),
        iterations: 1,
        residual_norm,
        path: EigPath::Dense,
        converged: true,
    })
}

/// Applies `B⁻¹`.
enum BSolver<'a> {
    Diagonal(Vec<f64>),
    Dense(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Cg { op: &'a dyn SymOperator, inv_diag: Vec<f64> },
}

impl<'a> BSolver<'a> {
    fn new(b: &'a dyn SymOperator) -> Result<Self, EigError> {
        let d = b.dim();
        if b.is_diagonal() {
            let diag = b.diagonal();
            if diag.iter().any(|&x| !(x > 0.0)) {
                return Err(EigError::NotPositiveDefinite);
            }
            return Ok(BSolver::Diagonal(diag.iter().map(|x| 1.0 / x).collect()));
        }
        if d <= 3000 {
            let dense = b.to_dense();
            let dense = (&dense + dense.transpose()) * 0.5;
            return dense.cholesky().map(BSolver::Dense).ok_or(EigError::NotPositiveDefinite);
        }
        let diag = b.diagonal();
        if diag.iter().any(|&x| !(x > 0.0)) {
            return Err(EigError::NotPositiveDefinite);
        }
        Ok(BSolver::Cg { op: b, inv_diag: diag.iter().map(|x| 1.0 / x).collect() })
    }

    fn solve(&self, rhs: &[f64], out: &mut [f64]) -> Result<(), EigError> {
        match self {
            BSolver::Diagonal(inv) => {
                for ((o, r), i) in out.iter_mut().zip(rhs).zip(inv) {
                    *o = r * i;
                }
                Ok(())
            }
            BSolver::Dense(ch) => {
                let x = ch.solve(&DVector::from_column_slice(rhs));
                out.copy_from_slice(x.as_slice());
                Ok(())
            }
            BSolver::Cg { op, inv_diag } => pcg(*op, inv_diag, rhs, out),
        }
    }
}

// Jacobi-preconditioned conjugate gradients to near machine precision.
fn pcg(op: &dyn SymOperator, inv_diag: &[f64], rhs: &[f64], x: &mut [f64]) -> Result<(), EigError> {
    let d = rhs.len();
    x.iter_mut().for_each(|v| *v = 0.0);
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; d];
    let mut rz = dot(&r, &z);
    let target = 1e-14 * dot(rhs, rhs).sqrt();
    for _ in 0..(10 * d).max(100) {
        if dot(&r, &r).sqrt() <= target {
            return Ok(());
        }
        op.apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(EigError::NotPositiveDefinite);
        }
        let alpha = rz / pap;
        axpy(alpha, &p, x);
        axpy(-alpha, &ap, &mut r);
        for i in 0..d {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..d {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(())
}

/// Iterative path: Lanczos on `B⁻¹A` in the `B` inner product.
///
/// The Krylov space of `σI − B⁻¹A` equals that of `B⁻¹A`, so targeting the
/// smallest eigenvalue needs no explicit shift: the smallest Ritz value is used.
pub fn lanczos_lambda_min(
    a: &dyn SymOperator,
    b: &dyn SymOperator,
    opts: &EigOptions,
) -> Result<EigResult, EigError> {
    let d = a.dim();
    if d != b.dim() {
        return Err(EigError::DimensionMismatch(d, b.dim()));
    }
    let tol = opts.tol.unwrap_or(ITERATIVE_TOL);
    let max_iter = opts.max_iter.unwrap_or(10 * d).max(1);
    let solver = BSolver::new(b)?;
    let max_basis = d.min(1000).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut start: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut total = 0usize;
    let a_norm = a.norm_bound().max(f64::MIN_POSITIVE);

    loop {
        let (theta, v, est, used, exhausted) =
            lanczos_cycle(a, b, &solver, &start, max_basis, max_iter - total, tol, &mut rng)?;
        total += used;
        let converged = est <= tol;
        if converged || exhausted || total >= max_iter {
            let lambda = theta;
            let mut av = vec![0.0; d];
            let mut bv = vec![0.0; d];
            a.apply(&v, &mut av);
            b.apply(&v, &mut bv);
            let r: f64 = av.iter().zip(&bv).map(|(x, y)| (x - lambda * y).powi(2)).sum::<f64>().sqrt();
            let vn = dot(&v, &v).sqrt();
            return Ok(EigResult {
                lambda_min: lambda,
                vector: opts.want_vector.then_some(v),
                iterations: total,
                residual_norm: r / (a_norm * vn),
                path: EigPath::Iterative,
                converged: converged || exhausted,
            });
        }
        // explicit restart from the current Ritz vector
        start = v;
    }
}

// One Lanczos cycle. Returns (θ_min, Ritz vector, relative residual estimate,
// operator applications, whether the whole space was exhausted).
#[allow(clippy::too_many_arguments)]
fn lanczos_cycle(
    a: &dyn SymOperator,
    b: &dyn SymOperator,
    solver: &BSolver<'_>,
    start: &[f64],
    max_basis: usize,
    budget: usize,
    tol: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Vec<f64>, f64, usize, bool), EigError> {
    let d = a.dim();
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut bq: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut w = start.to_vec();
    let mut bw = vec![0.0; d];
    b.apply(&w, &mut bw);
    let nrm = dot(&w, &bw).sqrt();
    if !(nrm > 0.0) {
        return Err(EigError::NotPositiveDefinite);
    }
    w.iter_mut().for_each(|x| *x /= nrm);
    bw.iter_mut().for_each(|x| *x /= nrm);

    let mut used = 0usize;
    let mut aq = vec![0.0; d];
    let mut r = vec![0.0; d];
    let mut br = vec![0.0; d];
    let mut exhausted = false;
    let mut last: (f64, Vec<f64>, f64) = (f64::NAN, Vec::new(), f64::INFINITY);

    loop {
        q.push(w.clone());
        bq.push(bw.clone());
        let j = q.len() - 1;
        a.apply(&q[j], &mut aq);
        used += 1;
        let alpha = dot(&q[j], &aq);
        alphas.push(alpha);
        solver.solve(&aq, &mut r)?;
        // r ← r − Q (Qᵀ B r), twice
        for _ in 0..2 {
            b.apply(&r, &mut br);
            let coeffs: Vec<f64> = q.iter().map(|qi| dot(qi, &br)).collect();
            for (qi, c) in q.iter().zip(&coeffs) {
                axpy(-c, qi, &mut r);
            }
        }
        b.apply(&r, &mut br);
        let mut beta = dot(&r, &br).max(0.0).sqrt();

        let k = alphas.len();
        let check = k == max_basis || used >= budget || k % 5 == 0 || k == d || beta == 0.0;
        let scale_hint = alphas.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        let breakdown = beta <= 1e-12 * scale_hint;
        if check || breakdown {
            let (theta, s, scale) = tridiag_min(&alphas, &betas);
            let est = if breakdown { 0.0 } else { (beta * s[k - 1]).abs() / scale };
            let mut v = vec![0.0; d];
            for (qi, si) in q.iter().zip(&s) {
                axpy(*si, qi, &mut v);
            }
            last = (theta, v, est);
            if k >= d {
                exhausted = true;
            }
            if (est <= tol && !breakdown) || k == max_basis || used >= budget || exhausted {
                break;
            }
        }
        if breakdown {
            // invariant subspace found: continue with a fresh direction
            let mut fresh: Vec<f64> = (0..d).map(|_| rng.gen::<f64>() - 0.5).collect();
            for _ in 0..2 {
                let mut bf = vec![0.0; d];
                b.apply(&fresh, &mut bf);
                let coeffs: Vec<f64> = q.iter().map(|qi| dot(qi, &bf)).collect();
                for (qi, c) in q.iter().zip(&coeffs) {
                    axpy(-c, qi, &mut fresh);
                }
            }
            r = fresh;
            b.apply(&r, &mut br);
            let n = dot(&r, &br).max(0.0).sqrt();
            if !(n > 0.0) {
                exhausted = true;
                break;
            }
            r.iter_mut().for_each(|x| *x /= n);
            br.iter_mut().for_each(|x| *x /= n);
            beta = 0.0;
            betas.push(beta);
        } else {
            r.iter_mut().for_each(|x| *x /= beta);
            br.iter_mut().for_each(|x| *x /= beta);
            betas.push(beta);
        }
        w = r.clone();
        bw = br.clone();
    }
    Ok((last.0, last.1, last.2, used, exhausted))
}

// Smallest eigenpair of the Lanczos tridiagonal matrix and its spectral radius.
fn tridiag_min(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>, f64) {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    let (imin, theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let scale = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    (theta, eig.eigenvectors.column(imin).iter().copied().collect(), scale)
}

/// True iff a Cholesky factorization succeeds with every pivot above `tol · trace/d`.
pub fn is_positive_definite(b: &dyn SymOperator, tol: f64) -> bool {
    let m = b.to_dense();
    let d = m.nrows();
    if d == 0 {
        return true;
    }
    if m.iter().any(|x| !x.is_finite()) {
        return false;
    }
    let trace: f64 = m.diagonal().iter().sum();
    if !(trace > 0.0) {
        return false;
    }
    let threshold = tol * trace / d as f64;
    let mut l = DMatrix::<f64>::zeros(d, d);
    for j in 0..d {
        let mut pivot = m[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if !(pivot > threshold) {
            return false;
        }
        let root = pivot.sqrt();
        l[(j, j)] = root;
        for i in (j + 1)..d {
            let mut s = 0.5 * (m[(i, j)] + m[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / root;
        }
    }
    true
}
