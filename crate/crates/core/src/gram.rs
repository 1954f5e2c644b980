//! Gram matrices modulo the ideal: the minimal-norm solve, the two
//! initializations at the starting level, and the per-level lift.
//!
//! With stored polynomials `h` and square-scale `s` (normalized family
//! `√s·h`), the formulas used are
//!
//! * Method 1: `M_κ(q) = P̃ᵀ Ỹ(q) P̃`,
//! * Method 2: `M_κ(q) = P̃ᵀ Ỹ(q − q₀) P̃ + q₀ s^κ P̃ᵀP̃`,
//! * lift: `M_{k+1} = s · L̃ᵀ (I_m ⊗ M_k) L̃`,
//! * direct: `M_k = s^{k−κ} · T̃ᵀ (I ⊗ M_κ) T̃`,
//!
//! where `Ỹ(q)` is the minimal-Frobenius-norm symmetric matrix with
//! `(h^{⊗κ})ᵀ Ỹ h^{⊗κ} ≡ q` and `P̃, L̃, T̃` are the structure matrices for
//! the unscaled `h`.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eig::{is_positive_definite, SparseSym, SymOperator, SymmetricMatrix};
use crate::exact::{QMatrix, SparseQMatrix};
use crate::polyring::{rat_to_f64, Polynomial, Rational};
use crate::subspace::{tuples, BasisTower, SphericalSystem, SubspaceBasis, SubspaceError};

/// Largest `m^κ` for which the minimal-norm solve runs in exact arithmetic.
pub const EXACT_TUPLE_LIMIT: usize = 64;
/// Largest dimension for which exact Gram matrices are kept alongside floats.
pub const EXACT_DIM_CAP: usize = 200;
/// Positive-definiteness tolerance (relative to `trace/d`) for Method 1.
pub const PD_TOL: f64 = 1e-10;
/// Levels above this dimension are represented as implicit operators.
pub const DENSE_LIFT_CAP: usize = 4000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GramError {
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error("polynomial is not in U_2κ: normal form {residual} is outside the span")]
    Infeasible { residual: String },
    #[error(
        "Method 1 produced a Gram matrix for 1 that is not positive definite; use Method 2, which is always valid"
    )]
    NotPositiveDefinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitMethod {
    Method1,
    Method2,
}

impl InitMethod {
    pub fn name(&self) -> &'static str {
        match self {
            InitMethod::Method1 => "method1",
            InitMethod::Method2 => "method2",
        }
    }
}

/// Shared float operator.
pub type Operator = Arc<dyn SymOperator>;

/// One Gram matrix: a float operator plus an exact copy while it stays small.
#[derive(Clone)]
pub struct GramMatrix {
    pub exact: Option<QMatrix>,
    pub op: Operator,
}

impl GramMatrix {
    pub fn from_exact(m: QMatrix) -> Self {
        GramMatrix { op: compact(m.to_f64()), exact: Some(m) }
    }

    pub fn from_float(m: DMatrix<f64>) -> Self {
        GramMatrix { op: compact(m), exact: None }
    }

    pub fn from_op(op: Operator) -> Self {
        GramMatrix { exact: None, op }
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

impl std::fmt::Debug for GramMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GramMatrix")
            .field("dim", &self.dim())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

/// Gram matrices of `p` and of `1` at one level.
#[derive(Clone, Debug)]
pub struct GramPair {
    pub level: usize,
    pub method: InitMethod,
    pub p: GramMatrix,
    pub one: GramMatrix,
}

impl GramPair {
    pub fn dim(&self) -> usize {
        self.p.dim()
    }
}

/// Float storage chosen by structure: diagonal, sparse lower triangle, or dense.
pub fn compact(m: DMatrix<f64>) -> Operator {
    let d = m.nrows();
    let mut nnz = 0usize;
    let mut off_diag = false;
    for j in 0..d {
        for i in j..d {
            if m[(i, j)] != 0.0 || m[(j, i)] != 0.0 {
                nnz += 1;
                off_diag |= i != j;
            }
        }
    }
    if !off_diag {
        return Arc::new(SymmetricMatrix::Diagonal((0..d).map(|i| m[(i, i)]).collect()));
    }
    if d > 64 && nnz * 5 < d * (d + 1) / 2 {
        let trip = (0..d).flat_map(|j| (j..d).map(move |i| (i, j))).filter_map(|(i, j)| {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            (v != 0.0).then_some((i, j, v))
        });
        return Arc::new(SymmetricMatrix::Sparse(SparseSym::from_triplets(d, trip.collect::<Vec<_>>())));
    }
    Arc::new(SymmetricMatrix::dense_symmetrized(m))
}

fn pow(s: &Rational, e: usize) -> Rational {
    (0..e).fold(Rational::one(), |acc, _| acc * s)
}

enum LinearSolve {
    Exact(QMatrix),
    Float(DMatrix<f64>),
}

/// Minimal-norm Gram solver for one spherical system and level `κ`,
/// reusable across right-hand sides.
pub struct MinNormSolver {
    kappa: usize,
    n_tuples: usize,
    basis_2k: Arc<SubspaceBasis>,
    /// Multiset index of every `(a, b)` tuple pair, row-major.
    pair_multiset: Vec<u32>,
    /// Coordinates of each multiset product in the level-2κ basis.
    coords: Vec<Vec<Rational>>,
    coords_f64: Vec<Vec<f64>>,
    inverse: LinearSolve,
}

impl MinNormSolver {
    pub fn new(tower: &BasisTower, kappa: usize) -> Result<Self, GramError> {
        let sys = tower.system().clone();
        let m = sys.m();
        let basis_2k = tower.basis(2 * kappa)?;
        let tup = tuples(m, kappa);
        let n = tup.len();

        let mut index: HashMap<Vec<usize>, u32> = HashMap::new();
        let mut multisets: Vec<Vec<usize>> = Vec::new();
        let mut pair_multiset = vec![0u32; n * n];
        let mut weights: Vec<u64> = Vec::new();
        for a in 0..n {
            for b in 0..n {
                let mut key: Vec<usize> = tup[a].iter().chain(&tup[b]).copied().collect();
                key.sort_unstable();
                let id = *index.entry(key.clone()).or_insert_with(|| {
                    multisets.push(key);
                    weights.push(0);
                    (multisets.len() - 1) as u32
                });
                weights[id as usize] += 1;
                pair_multiset[a * n + b] = id;
            }
        }
        let coords: Vec<Vec<Rational>> = multisets
            .par_iter()
            .map(|ms| {
                let nf = sys.product_nf(ms)?;
                basis_2k.coordinates_nf(&nf).ok_or_else(|| {
                    SubspaceError::Internal("product of h's outside U_2κ".into())
                })
            })
            .collect::<Result<_, _>>()?;
        let coords_f64: Vec<Vec<f64>> =
            coords.iter().map(|c| c.iter().map(rat_to_f64).collect()).collect();
        let d = basis_2k.dim();

        let inverse = if n <= EXACT_TUPLE_LIMIT {
            let mut g = QMatrix::zeros(d, d);
            for (c, w) in coords.iter().zip(&weights) {
                let w = Rational::from_integer((*w).into());
                let nz: Vec<(usize, &Rational)> =
                    c.iter().enumerate().filter(|(_, x)| !x.is_zero()).collect();
                for &(i, x) in &nz {
                    let wx = &w * x;
                    for &(j, y) in &nz {
                        g[(i, j)] += &wx * y;
                    }
                }
            }
            LinearSolve::Exact(g.inverse().ok_or_else(|| {
                SubspaceError::Internal("singular constraint Gram matrix".into())
            })?)
        } else {
            let mut g = DMatrix::<f64>::zeros(d, d);
            for (c, w) in coords_f64.iter().zip(&weights) {
                let w = *w as f64;
                for i in 0..d {
                    if c[i] == 0.0 {
                        continue;
                    }
                    for j in 0..d {
                        g[(i, j)] += w * c[i] * c[j];
                    }
                }
            }
            let inv = match g.clone().cholesky() {
                Some(ch) => ch.inverse(),
                None => g
                    .svd(true, true)
                    .pseudo_inverse(1e-12)
                    .map_err(|e| SubspaceError::Internal(e.to_string()))?,
            };
            LinearSolve::Float(inv)
        };

        Ok(MinNormSolver { kappa, n_tuples: n, basis_2k, pair_multiset, coords, coords_f64, inverse })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.inverse, LinearSolve::Exact(_))
    }

    pub fn basis_2k(&self) -> &Arc<SubspaceBasis> {
        &self.basis_2k
    }

    /// `Ỹ(q)` from coordinates of `q` in the level-2κ basis (exact path).
    pub fn y_exact(&self, q_coords: &[Rational]) -> Option<QMatrix> {
        let LinearSolve::Exact(inv) = &self.inverse else { return None };
        let d = q_coords.len();
        let lambda: Vec<Rational> = (0..d)
            .map(|i| (0..d).fold(Rational::zero(), |acc, j| acc + &inv[(i, j)] * &q_coords[j]))
            .collect();
        let values: Vec<Rational> = self
            .coords
            .iter()
            .map(|c| c.iter().zip(&lambda).fold(Rational::zero(), |acc, (x, l)| acc + x * l))
            .collect();
        let n = self.n_tuples;
        let mut y = QMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                y[(a, b)] = values[self.pair_multiset[a * n + b] as usize].clone();
            }
        }
        Some(y)
    }

    /// `Ỹ(q)` in floating point.
    pub fn y_float(&self, q_coords: &[Rational]) -> DMatrix<f64> {
        if let Some(y) = self.y_exact(q_coords) {
            return y.to_f64();
        }
        let LinearSolve::Float(inv) = &self.inverse else { unreachable!() };
        let c = nalgebra::DVector::from_iterator(q_coords.len(), q_coords.iter().map(rat_to_f64));
        let lambda = inv * c;
        let values: Vec<f64> = self
            .coords_f64
            .iter()
            .map(|c| c.iter().zip(lambda.iter()).map(|(x, l)| x * l).sum())
            .collect();
        let n = self.n_tuples;
        DMatrix::from_fn(n, n, |a, b| values[self.pair_multiset[a * n + b] as usize])
    }

    /// Coordinates of `q` in the level-2κ basis or an infeasibility error.
    pub fn coordinates(
        &self,
        q: &Polynomial,
        sys: &SphericalSystem,
    ) -> Result<Vec<Rational>, GramError> {
        let nf = sys.ctx().normal_form(q).map_err(SubspaceError::from)?;
        self.basis_2k
            .coordinates_nf(&nf)
            .ok_or_else(|| GramError::Infeasible { residual: nf.to_string() })
    }
}

/// Minimal-norm symmetric Gram matrix of `q` with respect to `h^{⊗κ}` (for the
/// stored, unscaled `h`), exact when `m^κ ≤ 64`.
pub fn min_norm_gram_exact(
    tower: &BasisTower,
    q: &Polynomial,
    kappa: usize,
) -> Result<QMatrix, GramError> {
    let solver = MinNormSolver::new(tower, kappa)?;
    let c = solver.coordinates(q, tower.system())?;
    solver
        .y_exact(&c)
        .ok_or_else(|| SubspaceError::Internal("exact path unavailable for this size".into()).into())
}

/// Starting-level data shared by every objective: `P̃`, the min-norm solver,
/// and `s^κ P̃ᵀP̃`.
pub struct Initializer {
    pub kappa: usize,
    pub solver: MinNormSolver,
    pub p: SparseQMatrix,
    p_f64: DMatrix<f64>,
    sys: Arc<SphericalSystem>,
    ptp_scaled: GramMatrix,
    one_coords: Vec<Rational>,
    constant_row: Vec<Rational>,
    keep_exact: bool,
}

impl Initializer {
    pub fn new(tower: &BasisTower, kappa: usize) -> Result<Self, GramError> {
        let sys = tower.system().clone();
        let basis = tower.basis(kappa)?;
        let p = crate::subspace::build_p(&sys, kappa, &basis)?;
        let solver = MinNormSolver::new(tower, kappa)?;
        let keep_exact = solver.is_exact() && basis.dim() <= EXACT_DIM_CAP;
        let p_dense = p.to_dense();
        let p_f64 = p_dense.to_f64();
        let sk = pow(sys.square_scale(), kappa);
        let ptp_scaled = if keep_exact {
            GramMatrix::from_exact(p_dense.transpose().mul(&p_dense).scale(&sk))
        } else {
            GramMatrix::from_float(p_f64.transpose() * &p_f64 * rat_to_f64(&sk))
        };
        let n = sys.nvars();
        let one_coords = solver.coordinates(&Polynomial::one(n), &sys)?;
        let one = crate::polyring::Monomial::one(n);
        let constant_row =
            solver.basis_2k().elements().iter().map(|e| e.coefficient(&one)).collect();
        Ok(Initializer {
            kappa,
            solver,
            p,
            p_f64,
            sys,
            ptp_scaled,
            one_coords,
            constant_row,
            keep_exact,
        })
    }

    pub fn system(&self) -> &Arc<SphericalSystem> {
        &self.sys
    }

    /// Coordinates of `q` in the level-2κ basis.
    pub fn coordinates(&self, q: &Polynomial) -> Result<Vec<Rational>, GramError> {
        self.solver.coordinates(q, &self.sys)
    }

    fn congruence(&self, coords: &[Rational]) -> GramMatrix {
        if self.keep_exact {
            let y = self.solver.y_exact(coords).expect("exact solver");
            GramMatrix::from_exact(self.p.block_congruence(&y))
        } else {
            let y = self.solver.y_float(coords);
            GramMatrix::from_float(self.p_f64.transpose() * y * &self.p_f64)
        }
    }

    /// Gram matrix at level κ of the class with the given level-2κ coordinates.
    pub fn gram_of_coords(&self, coords: &[Rational], method: InitMethod) -> GramMatrix {
        match method {
            InitMethod::Method1 => self.congruence(coords),
            InitMethod::Method2 => {
                // constant term of the normal form
                let q0 = coords
                    .iter()
                    .zip(&self.constant_row)
                    .fold(Rational::zero(), |acc, (c, e)| acc + c * e);
                let shifted: Vec<Rational> =
                    coords.iter().zip(&self.one_coords).map(|(c, e)| c - &q0 * e).collect();
                let base = self.congruence(&shifted);
                match (&base.exact, &self.ptp_scaled.exact) {
                    (Some(b), Some(t)) => GramMatrix::from_exact(b.add(&t.scale(&q0))),
                    _ => {
                        let t = self.ptp_scaled.op.to_dense() * rat_to_f64(&q0);
                        GramMatrix::from_float(base.op.to_dense() + t)
                    }
                }
            }
        }
    }

    /// Gram matrix of `q` at level κ.
    pub fn gram_of(&self, q: &Polynomial, method: InitMethod) -> Result<GramMatrix, GramError> {
        Ok(self.gram_of_coords(&self.coordinates(q)?, method))
    }

    /// `M_κ(1)` without a definiteness check.
    pub fn gram_of_one(&self, method: InitMethod) -> GramMatrix {
        match method {
            InitMethod::Method2 => self.ptp_scaled.clone(),
            InitMethod::Method1 => self.congruence(&self.one_coords),
        }
    }

    /// `M_κ(1)`; Method 1 fails when it is not positive definite.
    pub fn checked_one(&self, method: InitMethod) -> Result<GramMatrix, GramError> {
        let one = self.gram_of_one(method);
        if method == InitMethod::Method1 && !is_positive_definite(one.op.as_ref(), PD_TOL) {
            return Err(GramError::NotPositiveDefinite);
        }
        Ok(one)
    }

    /// Gram pair `(M_κ(p), M_κ(1))`.
    pub fn init(&self, p: &Polynomial, method: InitMethod) -> Result<GramPair, GramError> {
        let one = self.checked_one(method)?;
        Ok(GramPair { level: self.kappa, method, p: self.gram_of(p, method)?, one })
    }
}

/// Method 1 initialization at level κ.
pub fn method1_init(tower: &BasisTower, p: &Polynomial, kappa: usize) -> Result<GramPair, GramError> {
    Initializer::new(tower, kappa)?.init(p, InitMethod::Method1)
}

/// Method 2 initialization at level κ.
pub fn method2_init(tower: &BasisTower, p: &Polynomial, kappa: usize) -> Result<GramPair, GramError> {
    Initializer::new(tower, kappa)?.init(p, InitMethod::Method2)
}

/// Float copy of a row-sparse structure matrix.
#[derive(Debug, Clone)]
pub struct SparseF64 {
    pub ncols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseF64 {
    pub fn from_exact(m: &SparseQMatrix) -> Self {
        SparseF64 { ncols: m.ncols(), rows: m.to_f64_rows() }
    }
}

/// `scale · Lᵀ (I ⊗ M) L` computed densely, block by block.
pub fn block_congruence_f64(l: &SparseF64, m: &DMatrix<f64>, scale: f64) -> DMatrix<f64> {
    let d = m.nrows();
    let dn = l.ncols;
    assert_eq!(l.rows.len() % d, 0);
    let mut out = DMatrix::<f64>::zeros(dn, dn);
    for block in l.rows.chunks(d) {
        // xt = (M · L_i)ᵀ, stored column per block row
        let mut xt = DMatrix::<f64>::zeros(dn, d);
        for (r, row) in block.iter().enumerate() {
            for &(c, v) in row {
                // column r of M is row r (symmetric)
                let col = m.column(r);
                for i in 0..d {
                    xt[(c, i)] += v * col[i];
                }
            }
        }
        // out[:, c] += v · xt[:, r]ᵀ… using symmetry of the result
        let xt_t = xt.transpose();
        for (r, row) in block.iter().enumerate() {
            let src = xt_t.row(r).transpose();
            for &(c, v) in row {
                let mut dst = out.column_mut(c);
                dst.axpy(v, &src, 1.0);
            }
        }
    }
    let t = out.transpose();
    (out + t) * (0.5 * scale)
}

/// Implicit `scale · Lᵀ (I ⊗ M) L` operator.
pub struct CongruenceOp {
    inner: Operator,
    l: Arc<SparseF64>,
    scale: f64,
}

impl CongruenceOp {
    pub fn new(inner: Operator, l: Arc<SparseF64>, scale: f64) -> Self {
        CongruenceOp { inner, l, scale }
    }
}

impl SymOperator for CongruenceOp {
    fn dim(&self) -> usize {
        self.l.ncols
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let d = self.inner.dim();
        let blocks = self.l.rows.len() / d;
        let parts: Vec<Vec<f64>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let rows = &self.l.rows[b * d..(b + 1) * d];
                let lx: Vec<f64> = rows
                    .iter()
                    .map(|row| row.iter().map(|&(c, v)| v * x[c]).sum())
                    .collect();
                let mut mlx = vec![0.0; d];
                self.inner.apply(&lx, &mut mlx);
                let mut out = vec![0.0; self.l.ncols];
                for (row, w) in rows.iter().zip(&mlx) {
                    for &(c, v) in row {
                        out[c] += v * w;
                    }
                }
                out
            })
            .collect();
        y.iter_mut().for_each(|v| *v = 0.0);
        for part in parts {
            for (yi, pi) in y.iter_mut().zip(part) {
                *yi += self.scale * pi;
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        // ‖Lᵀ(I⊗M)L‖ ≤ ‖M‖·‖L‖², with ‖L‖² bounded by ‖L‖₁‖L‖∞
        let mut col = vec![0.0f64; self.l.ncols];
        let mut row_max = 0.0f64;
        for row in &self.l.rows {
            let mut s = 0.0;
            for &(c, v) in row {
                col[c] += v.abs();
                s += v.abs();
            }
            row_max = row_max.max(s);
        }
        let col_max = col.into_iter().fold(0.0, f64::max);
        self.scale.abs() * self.inner.norm_bound() * col_max * row_max
    }
}

/// `scale · Lᵀ (I ⊗ M) L` for one Gram matrix: exact while small, then dense
/// float, then implicit.
pub fn congruence(
    g: &GramMatrix,
    l: &SparseQMatrix,
    l_f64: &Arc<SparseF64>,
    scale: &Rational,
) -> GramMatrix {
    let dn = l.ncols();
    if let Some(e) = &g.exact {
        if dn <= EXACT_DIM_CAP {
            return GramMatrix::from_exact(l.block_congruence(e).scale(scale));
        }
    }
    let s = rat_to_f64(scale);
    if dn <= DENSE_LIFT_CAP && g.dim() <= DENSE_LIFT_CAP {
        GramMatrix::from_float(block_congruence_f64(l_f64, &g.op.to_dense(), s))
    } else {
        GramMatrix::from_op(Arc::new(CongruenceOp::new(g.op.clone(), l_f64.clone(), s)))
    }
}

/// Lifts a pair to the next level with `L̃_{k+1}`.
pub fn lift(pair: &GramPair, sys: &SphericalSystem, l: &SparseQMatrix) -> GramPair {
    let l_f64 = Arc::new(SparseF64::from_exact(l));
    let s = sys.square_scale();
    GramPair {
        level: pair.level + 1,
        method: pair.method,
        p: congruence(&pair.p, l, &l_f64, s),
        one: congruence(&pair.one, l, &l_f64, s),
    }
}

/// Direct construction `M_k = s^{k−κ} T̃ᵀ (I ⊗ M_κ) T̃`.
pub fn noniterative(pair: &GramPair, t: &SparseQMatrix, sys: &SphericalSystem, k: usize) -> GramPair {
    let sk = pow(sys.square_scale(), k - pair.level);
    let t_f64 = Arc::new(SparseF64::from_exact(t));
    GramPair {
        level: k,
        method: pair.method,
        p: congruence(&pair.p, t, &t_f64, &sk),
        one: congruence(&pair.one, t, &t_f64, &sk),
    }
}

/// Exact Gram residual `NF(zᵀ M z − target)`.
pub fn gram_residual(
    sys: &SphericalSystem,
    basis: &SubspaceBasis,
    m: &QMatrix,
    target: &Polynomial,
) -> Result<Polynomial, GramError> {
    let n = sys.nvars();
    let z = basis.elements();
    let mut acc = Polynomial::zero(n);
    for i in 0..z.len() {
        let mut row = Polynomial::zero(n);
        for j in 0..z.len() {
            if !m[(i, j)].is_zero() {
                row = &row + &z[j].scale(&m[(i, j)]);
            }
        }
        acc = &acc + &(&z[i] * &row);
    }
    Ok(sys.ctx().normal_form(&(&acc - target)).map_err(SubspaceError::from)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ideal::{GroebnerContext, IdealPresentation};
    use crate::polyring::{parse_with, rat, rat_int};

    fn tower(gens: &[&str], h: &[&str], s: Rational, names: &[&str]) -> BasisTower {
        let polys = gens.iter().map(|g| parse_with(g, names).unwrap()).collect();
        let ctx = GroebnerContext::new(&IdealPresentation::new(names.len(), polys).unwrap()).unwrap();
        let h = h.iter().map(|g| parse_with(g, names).unwrap()).collect();
        BasisTower::new(Arc::new(SphericalSystem::verify(h, s, Arc::new(ctx)).unwrap()))
    }

    fn q(rows: &[&[i64]], den: i64) -> QMatrix {
        QMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x, den)).collect()).collect())
    }

    #[test]
    fn circle_min_norm_matrices() {
        let names = ["x1", "x2"];
        let t = tower(&["x1^2 + x2^2 - 1"], &["x1", "x2"], rat_int(1), &names);
        let y1 = min_norm_gram_exact(&t, &Polynomial::one(2), 2).unwrap();
        assert_eq!(y1, q(&[&[3, 0, 0, 1], &[0, 1, 1, 0], &[0, 1, 1, 0], &[1, 0, 0, 3]], 3));
        let p = parse_with("x1^3*x2 - 2*x1*x2^3 + x1*x2 + x2^4", &names).unwrap();
        let yp = min_norm_gram_exact(&t, &p, 2).unwrap();
        assert_eq!(yp, q(&[&[0, 2, 2, 0], &[2, 0, 0, -1], &[2, 0, 0, -1], &[0, -1, -1, 4]], 4));
    }

    #[test]
    fn gram_of_constant_is_scaled_ptp() {
        let names = ["x1", "x2"];
        let t = tower(&["x1^2 + x2^2 - 1"], &["x1", "x2"], rat_int(1), &names);
        let init = Initializer::new(&t, 1).unwrap();
        let pair = init.init(&Polynomial::constant(2, rat(7, 2)), InitMethod::Method2).unwrap();
        let ptp = pair.one.exact.clone().unwrap();
        assert_eq!(pair.p.exact.unwrap(), ptp.scale(&rat(7, 2)));
    }

    #[test]
    fn lift_and_direct_agree_exactly() {
        let names = ["x1", "x2"];
        let t = tower(&["x1^2 + x2^2 - 1"], &["x1", "x2"], rat_int(1), &names);
        let p = parse_with("x1^3*x2 - 2*x1*x2^3 + x1*x2 + x2^4", &names).unwrap();
        let pair = method2_init(&t, &p, 2).unwrap();
        let sys = t.system().clone();
        let l3 = t.lift(3).unwrap();
        let lifted = lift(&pair, &sys, &l3);
        let direct = noniterative(&pair, &t.noniterative_t(2, 3).unwrap(), &sys, 3);
        assert_eq!(lifted.p.exact, direct.p.exact);
        assert_eq!(lifted.one.exact, direct.one.exact);
        let b3 = t.basis(3).unwrap();
        assert!(gram_residual(&sys, &b3, lifted.p.exact.as_ref().unwrap(), &p).unwrap().is_zero());
        assert!(gram_residual(&sys, &b3, lifted.one.exact.as_ref().unwrap(), &Polynomial::one(2))
            .unwrap()
            .is_zero());
    }

    #[test]
    fn float_lift_matches_exact() {
        let names = ["x1", "x2", "x3"];
        let t = tower(&["x1^2 - 1", "x2^2 - 1", "x3^2 - 1"], &["1", "x1", "x2", "x3"], rat(1, 4), &names);
        let p = parse_with("x1*x2 - 2*x2*x3 + x1 + 1/2", &names).unwrap();
        let pair = method2_init(&t, &p, 1).unwrap();
        let sys = t.system().clone();
        let l2 = t.lift(2).unwrap();
        let exact = lift(&pair, &sys, &l2);
        let float = block_congruence_f64(&SparseF64::from_exact(&l2), &pair.p.op.to_dense(), 0.25);
        let diff = (exact.p.exact.unwrap().to_f64() - &float).abs().max();
        assert!(diff < 1e-12);
        let op = CongruenceOp::new(pair.p.op.clone(), Arc::new(SparseF64::from_exact(&l2)), 0.25);
        assert!((op.to_dense() - float).abs().max() < 1e-12);
    }
}
