//! Spherical systems, the subspaces `U_k` of the quotient ring they span, and
//! the structure matrices relating consecutive levels.
//!
//! A [`SphericalSystem`] stores polynomials `h` and a rational square-scale `s`
//! with `s · Σ h_i² ≡ 1`. The normalized family is `√s · h`; since `√s` may be
//! irrational it is never formed. Bases and structure matrices are expressed
//! for the unscaled `h`, and the Gram layer reinserts powers of `s`.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::exact::{Echelon, QMatrix, SparseQMatrix, SparseVec};
use crate::ideal::{GroebnerContext, IdealError};
use crate::polyring::{Monomial, Polynomial, Rational};

/// Default largest level searched when locating the starting level.
pub const DEFAULT_K_MAX: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubspaceError {
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error("the system is empty")]
    Empty,
    #[error("polynomials are not spherical modulo the ideal: s·Σh² − 1 reduces to {residual}")]
    NotSpherical { residual: String },
    #[error("square-scale must be positive")]
    BadScale,
    #[error(
        "objective is not in U_2k for any k ≤ {k_max}; consider adding a positive constant to the spherical system"
    )]
    NotRepresentable { k_max: usize },
    #[error("basis elements are linearly dependent modulo the ideal")]
    DependentElements,
    #[error("internal inconsistency: {0}")]
    Internal(String),
}

/// Polynomials whose scaled squares sum to one modulo the ideal.
#[derive(Debug, Clone)]
pub struct SphericalSystem {
    h: Vec<Polynomial>,
    square_scale: Rational,
    ctx: Arc<GroebnerContext>,
    contains_constant: bool,
}

impl SphericalSystem {
    /// Verifies `s · Σ h_i² ≡ 1` exactly.
    pub fn verify(
        h: Vec<Polynomial>,
        square_scale: Rational,
        ctx: Arc<GroebnerContext>,
    ) -> Result<Self, SubspaceError> {
        if h.is_empty() {
            return Err(SubspaceError::Empty);
        }
        if !square_scale.is_positive() {
            return Err(SubspaceError::BadScale);
        }
        let n = ctx.nvars();
        for p in &h {
            if p.nvars() != n {
                return Err(IdealError::DimensionMismatch { expected: n, found: p.nvars() }.into());
            }
        }
        let mut sum = Polynomial::zero(n);
        for p in &h {
            sum = &sum + &(p * p);
        }
        let residual = ctx.normal_form(&(&sum.scale(&square_scale) - &Polynomial::one(n)))?;
        if !residual.is_zero() {
            return Err(SubspaceError::NotSpherical { residual: residual.to_string() });
        }
        let contains_constant =
            h.iter().any(|p| !p.is_zero() && p.is_constant() && p.constant_term().is_positive());
        let h = h.iter().map(|p| ctx.normal_form(p)).collect::<Result<Vec<_>, _>>()?;
        Ok(SphericalSystem { h, square_scale, ctx, contains_constant })
    }

    pub fn h(&self) -> &[Polynomial] {
        &self.h
    }

    pub fn m(&self) -> usize {
        self.h.len()
    }

    pub fn square_scale(&self) -> &Rational {
        &self.square_scale
    }

    pub fn ctx(&self) -> &Arc<GroebnerContext> {
        &self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.ctx.nvars()
    }

    pub fn contains_constant(&self) -> bool {
        self.contains_constant
    }

    /// Normal form of `Π h_i` over a multiset of indices.
    pub fn product_nf(&self, multiset: &[usize]) -> Result<Polynomial, SubspaceError> {
        let mut acc = Polynomial::one(self.nvars());
        for &i in multiset {
            acc = self.ctx.normal_form(&(&acc * &self.h[i]))?;
        }
        Ok(acc)
    }
}

/// A basis of `U_k` made of normal-form polynomials.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    level: usize,
    elements: Vec<Polynomial>,
    /// Index multiset whose product each element is, when built from products.
    labels: Option<Vec<Vec<usize>>>,
    monomials: Vec<Monomial>,
    monomial_index: HashMap<Monomial, usize>,
    echelon: Echelon,
}

impl SubspaceBasis {
    /// Wraps given normal-form elements; fails if they are dependent.
    pub fn from_elements(
        level: usize,
        elements: Vec<Polynomial>,
        ctx: &GroebnerContext,
    ) -> Result<Self, SubspaceError> {
        let elements = elements
            .iter()
            .map(|e| ctx.normal_form(e))
            .collect::<Result<Vec<_>, _>>()?;
        let mut b = SubspaceBasis {
            level,
            elements: Vec::new(),
            labels: None,
            monomials: Vec::new(),
            monomial_index: HashMap::new(),
            echelon: Echelon::new(),
        };
        for e in elements {
            if !b.try_push(e) {
                return Err(SubspaceError::DependentElements);
            }
        }
        Ok(b)
    }

    fn empty(level: usize) -> Self {
        SubspaceBasis {
            level,
            elements: Vec::new(),
            labels: Some(Vec::new()),
            monomials: Vec::new(),
            monomial_index: HashMap::new(),
            echelon: Echelon::new(),
        }
    }

    fn vectorize_growing(&mut self, f: &Polynomial) -> SparseVec {
        let mut v: SparseVec = f
            .terms()
            .iter()
            .map(|(m, c)| {
                let next = self.monomials.len();
                let idx = *self.monomial_index.entry(m.clone()).or_insert(next);
                if idx == next {
                    self.monomials.push(m.clone());
                }
                (idx, c.clone())
            })
            .collect();
        v.sort_by_key(|(j, _)| *j);
        v
    }

    fn vectorize(&self, f: &Polynomial) -> Option<SparseVec> {
        let mut v = Vec::with_capacity(f.num_terms());
        for (m, c) in f.terms() {
            v.push((*self.monomial_index.get(m)?, c.clone()));
        }
        v.sort_by_key(|(j, _)| *j);
        Some(v)
    }

    // Appends `e` (already in normal form) when it is independent.
    fn try_push(&mut self, e: Polynomial) -> bool {
        let v = self.vectorize_growing(&e);
        if self.echelon.insert(&v, self.elements.len()) {
            self.elements.push(e);
            true
        } else {
            false
        }
    }

    /// Attaches product labels, one index multiset per element.
    pub fn with_labels(mut self, labels: Vec<Vec<usize>>) -> Self {
        assert_eq!(labels.len(), self.dim());
        self.labels = Some(labels);
        self
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[Polynomial] {
        &self.elements
    }

    pub fn labels(&self) -> Option<&[Vec<usize>]> {
        self.labels.as_deref()
    }

    pub fn monomials(&self) -> &[Monomial] {
        &self.monomials
    }

    /// Coordinates of an already-reduced polynomial, or `None` if not a member.
    pub fn coordinates_nf(&self, nf: &Polynomial) -> Option<Vec<Rational>> {
        let v = self.vectorize(nf)?;
        let combo = self.echelon.express(&v)?;
        let mut out = vec![Rational::zero(); self.dim()];
        for (t, x) in combo {
            out[t] = x;
        }
        Some(out)
    }

    /// Coordinates of `f + I` in this basis, or `None` if `f + I ∉ U_k`.
    pub fn coordinates(
        &self,
        f: &Polynomial,
        ctx: &GroebnerContext,
    ) -> Result<Option<Vec<Rational>>, SubspaceError> {
        Ok(self.coordinates_nf(&ctx.normal_form(f)?))
    }

    fn sparse_coordinates_nf(&self, nf: &Polynomial) -> Option<SparseVec> {
        let v = self.vectorize(nf)?;
        let mut out: SparseVec = self.echelon.express(&v)?.into_iter().collect();
        out.sort_by_key(|(j, _)| *j);
        Some(out)
    }

    /// The basis `z' = G z`; `g` must be invertible.
    pub fn rebase(&self, g: &QMatrix, ctx: &GroebnerContext) -> Result<Self, SubspaceError> {
        let n = ctx.nvars();
        let elements = (0..g.nrows())
            .map(|i| {
                let mut acc = Polynomial::zero(n);
                for (j, e) in self.elements.iter().enumerate() {
                    acc = &acc + &e.scale(&g[(i, j)]);
                }
                acc
            })
            .collect();
        SubspaceBasis::from_elements(self.level, elements, ctx)
    }
}

/// Computes the basis of the next level greedily together with the matrix `L`
/// expressing `h ⊗ z_k` in it.
fn next_level(
    sys: &SphericalSystem,
    prev: &SubspaceBasis,
) -> Result<(SubspaceBasis, SparseQMatrix), SubspaceError> {
    let m = sys.m();
    let d = prev.dim();
    // products h_i · z_j, row index i·d + j
    let products: Vec<Polynomial> = (0..m * d)
        .into_par_iter()
        .map(|r| sys.ctx.normal_form(&(&sys.h[r / d] * &prev.elements[r % d])))
        .collect::<Result<_, _>>()?;

    let mut next = SubspaceBasis::empty(prev.level + 1);
    match prev.labels() {
        Some(labels) => {
            // deduplicate by multiset and offer candidates in lexicographic order
            let mut candidates: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
            for r in 0..m * d {
                let mut key = labels[r % d].clone();
                key.push(r / d);
                key.sort_unstable();
                candidates.entry(key).or_insert(r);
            }
            let mut kept = Vec::new();
            for (key, r) in candidates {
                if next.try_push(products[r].clone()) {
                    kept.push(key);
                }
            }
            next.labels = Some(kept);
        }
        None => {
            next.labels = None;
            for p in &products {
                next.try_push(p.clone());
            }
        }
    }
    let rows = products
        .iter()
        .map(|p| {
            next.sparse_coordinates_nf(p)
                .ok_or_else(|| SubspaceError::Internal("product outside the next level".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let l = SparseQMatrix::new(next.dim(), rows);
    Ok((next, l))
}

fn first_level(sys: &SphericalSystem) -> SubspaceBasis {
    let mut b = SubspaceBasis::empty(1);
    let mut kept = Vec::new();
    for (i, h) in sys.h.iter().enumerate() {
        if b.try_push(h.clone()) {
            kept.push(vec![i]);
        }
    }
    b.labels = Some(kept);
    b
}

/// Builds the deterministic greedy basis of `U_k`.
pub fn build_basis(sys: &SphericalSystem, k: usize) -> Result<SubspaceBasis, SubspaceError> {
    assert!(k >= 1, "levels start at 1");
    let mut b = first_level(sys);
    for _ in 1..k {
        b = next_level(sys, &b)?.0;
    }
    Ok(b)
}

/// Matrix `L` with `L z_{k+1} ≡ h ⊗ z_k` for arbitrary bases of consecutive levels.
pub fn build_l(
    sys: &SphericalSystem,
    basis_k: &SubspaceBasis,
    basis_k1: &SubspaceBasis,
) -> Result<SparseQMatrix, SubspaceError> {
    let d = basis_k.dim();
    let rows = (0..sys.m() * d)
        .into_par_iter()
        .map(|r| {
            let p = sys.ctx.normal_form(&(&sys.h[r / d] * &basis_k.elements[r % d]))?;
            basis_k1
                .sparse_coordinates_nf(&p)
                .ok_or_else(|| SubspaceError::Internal("h ⊗ z_k is not in the next level".into()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SparseQMatrix::new(basis_k1.dim(), rows))
}

/// Enumerates index tuples of length `k` over `0..m` in Kronecker order.
pub fn tuples(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..k {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..m).map(move |i| {
                    let mut u = t.clone();
                    u.push(i);
                    u
                })
            })
            .collect();
    }
    out
}

/// Matrix `P` with `P z_κ ≡ h^{⊗κ}`, one row per index tuple.
pub fn build_p(
    sys: &SphericalSystem,
    kappa: usize,
    basis: &SubspaceBasis,
) -> Result<SparseQMatrix, SubspaceError> {
    let mut cache: HashMap<Vec<usize>, SparseVec> = HashMap::new();
    let mut rows = Vec::new();
    for t in tuples(sys.m(), kappa) {
        let mut key = t.clone();
        key.sort_unstable();
        if !cache.contains_key(&key) {
            let nf = sys.product_nf(&key)?;
            let c = basis.sparse_coordinates_nf(&nf).ok_or_else(|| {
                SubspaceError::Internal("product of h's outside the basis span".into())
            })?;
            cache.insert(key.clone(), c);
        }
        rows.push(cache[&key].clone());
    }
    Ok(SparseQMatrix::new(basis.dim(), rows))
}

/// Lazily built chain of bases and lift matrices for one spherical system.
///
/// Levels may be pinned to caller-supplied bases; later levels are then
/// grown greedily from the pinned one.
#[derive(Debug)]
pub struct BasisTower {
    sys: Arc<SphericalSystem>,
    pinned: HashMap<usize, Arc<SubspaceBasis>>,
    bases: Mutex<Vec<Arc<SubspaceBasis>>>,
    lifts: Mutex<Vec<Arc<SparseQMatrix>>>,
}

impl BasisTower {
    pub fn new(sys: Arc<SphericalSystem>) -> Self {
        Self::with_pinned(sys, HashMap::new())
    }

    pub fn with_pinned(sys: Arc<SphericalSystem>, pinned: HashMap<usize, SubspaceBasis>) -> Self {
        BasisTower {
            sys,
            pinned: pinned.into_iter().map(|(k, b)| (k, Arc::new(b))).collect(),
            bases: Mutex::new(Vec::new()),
            lifts: Mutex::new(Vec::new()),
        }
    }

    /// Tower with levels `1..=bases.len()` already built; `lifts[i]` is `L_{i+2}`.
    pub fn from_parts(
        sys: Arc<SphericalSystem>,
        bases: Vec<SubspaceBasis>,
        lifts: Vec<SparseQMatrix>,
    ) -> Self {
        assert_eq!(lifts.len() + 1, bases.len().max(1));
        BasisTower {
            sys,
            pinned: HashMap::new(),
            bases: Mutex::new(bases.into_iter().map(Arc::new).collect()),
            lifts: Mutex::new(lifts.into_iter().map(Arc::new).collect()),
        }
    }

    pub fn system(&self) -> &Arc<SphericalSystem> {
        &self.sys
    }

    fn extend_to(&self, k: usize) -> Result<(), SubspaceError> {
        let mut bases = self.bases.lock().unwrap();
        let mut lifts = self.lifts.lock().unwrap();
        if bases.is_empty() {
            let b = match self.pinned.get(&1) {
                Some(b) => b.clone(),
                None => Arc::new(first_level(&self.sys)),
            };
            bases.push(b);
        }
        while bases.len() < k {
            let prev = bases.last().unwrap().clone();
            let level = prev.level + 1;
            let (basis, l) = match self.pinned.get(&level) {
                Some(b) => (b.clone(), build_l(&self.sys, &prev, b)?),
                None => {
                    let (b, l) = next_level(&self.sys, &prev)?;
                    (Arc::new(b), l)
                }
            };
            bases.push(basis);
            lifts.push(Arc::new(l));
        }
        Ok(())
    }

    /// Basis of `U_k` (k ≥ 1).
    pub fn basis(&self, k: usize) -> Result<Arc<SubspaceBasis>, SubspaceError> {
        assert!(k >= 1, "levels start at 1");
        self.extend_to(k)?;
        Ok(self.bases.lock().unwrap()[k - 1].clone())
    }

    /// Matrix `L_k` with `L_k z_k ≡ h ⊗ z_{k−1}` (k ≥ 2).
    pub fn lift(&self, k: usize) -> Result<Arc<SparseQMatrix>, SubspaceError> {
        assert!(k >= 2, "lift matrices start at level 2");
        self.extend_to(k)?;
        Ok(self.lifts.lock().unwrap()[k - 2].clone())
    }

    /// Levels already materialized.
    pub fn built_levels(&self) -> usize {
        self.bases.lock().unwrap().len()
    }

    /// Smallest `k ≤ k_max` with `p + I ∈ U_{2k}`, and the coordinates there.
    pub fn find_kappa(
        &self,
        p: &Polynomial,
        k_max: usize,
    ) -> Result<(usize, Vec<Rational>), SubspaceError> {
        let nf = self.sys.ctx.normal_form(p)?;
        for k in 1..=k_max {
            if let Some(c) = self.basis(2 * k)?.coordinates_nf(&nf) {
                return Ok((k, c));
            }
        }
        Err(SubspaceError::NotRepresentable { k_max })
    }

    /// `T_k` with `T_k z_k ≡ h^{⊗(k−κ)} ⊗ z_κ`, via `T_{k+1} = (I_m ⊗ T_k) L_{k+1}`.
    pub fn noniterative_t(&self, kappa: usize, k: usize) -> Result<SparseQMatrix, SubspaceError> {
        assert!(k >= kappa);
        let mut t = SparseQMatrix::identity(self.basis(kappa)?.dim());
        for level in kappa + 1..=k {
            let l = self.lift(level)?;
            t = t.kron_identity_left(self.sys.m()).mul_sparse(&l);
        }
        Ok(t)
    }
}

/// Smallest `k ≤ k_max` with `p + I ∈ U_{2k}`.
pub fn find_kappa(
    sys: &Arc<SphericalSystem>,
    p: &Polynomial,
    k_max: usize,
) -> Result<usize, SubspaceError> {
    Ok(BasisTower::new(sys.clone()).find_kappa(p, k_max)?.0)
}

/// Checks `rows · z ≡ targets` exactly for a structure matrix.
pub fn verify_structure(
    ctx: &GroebnerContext,
    matrix: &SparseQMatrix,
    basis: &SubspaceBasis,
    targets: &[Polynomial],
) -> Result<bool, SubspaceError> {
    let n = ctx.nvars();
    for (row, target) in matrix.rows().iter().zip(targets) {
        let mut acc = Polynomial::zero(n);
        for (j, x) in row {
            acc = &acc + &basis.elements[*j].scale(x);
        }
        if !ctx.equivalent(&acc, target)? {
            return Ok(false);
        }
    }
    Ok(matrix.nrows() == targets.len())
}

/// The polynomials `h_{t_1} ⋯ h_{t_k}` in Kronecker order.
pub fn kron_products(sys: &SphericalSystem, k: usize) -> Vec<Polynomial> {
    tuples(sys.m(), k)
        .into_iter()
        .map(|t| {
            t.iter()
                .fold(Polynomial::one(sys.nvars()), |acc, &i| &acc * &sys.h[i])
        })
        .collect()
}

/// `h ⊗ z` in row order `i · d + j`.
pub fn kron_with_basis(sys: &SphericalSystem, basis: &SubspaceBasis) -> Vec<Polynomial> {
    let mut out = Vec::with_capacity(sys.m() * basis.dim());
    for h in &sys.h {
        for z in &basis.elements {
            out.push(h * z);
        }
    }
    out
}
