//! The hierarchy driver: starting level, initialization, per-level lift,
//! eigensolve, and the bound report.
//!
//! Structure that depends only on the ideal and the spherical system (bases,
//! lift matrices, the `M_k(1)` chain) lives in a [`PrecomputedContext`] that
//! can be shared by many objectives and cached on disk.

use std::collections::{BTreeMap, HashMap};
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use num_traits::One;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::eig::{lambda_min_generalized, EigOptions, EigPath};
use crate::exact::{SparseQMatrix, SparseVec};
use crate::gram::{congruence, GramError, GramMatrix, InitMethod, Initializer, SparseF64};
use crate::ideal::{BasisSource, GroebnerContext, GroebnerOptions, IdealError, IdealPresentation};
use crate::polyring::{format_rational, parse_rational, Monomial, Polynomial, Rational};
use crate::subspace::{BasisTower, SphericalSystem, SubspaceBasis, SubspaceError};

/// Slack allowed between consecutive bounds before a monotonicity warning.
pub const MONOTONE_SLACK: f64 = 1e-8;

/// Cache file format tag.
pub const CONTEXT_FORMAT: &str = "spectrax-context/1";

#[derive(Debug, Error)]
pub enum HierarchyError {
    #[error(transparent)]
    Ideal(#[from] IdealError),
    #[error(transparent)]
    Subspace(#[from] SubspaceError),
    #[error(transparent)]
    Gram(#[from] GramError),
    #[error("no spherical system was given for this problem")]
    NoSphericalSystem,
    #[error("problem does not match the precomputed context: {0}")]
    ContextMismatch(String),
    #[error("context cache: {0}")]
    Cache(String),
    #[error("the number of levels must be at least 1")]
    NoLevels,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[default]
    Minimize,
    Maximize,
}

impl FromStr for Sense {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "min" | "minimize" => Ok(Sense::Minimize),
            "max" | "maximize" => Ok(Sense::Maximize),
            _ => Err(format!("unknown sense '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Method1,
    Method2,
    /// Method 1, falling back to Method 2 when `M_κ(1)` is not positive definite.
    #[default]
    Auto,
}

impl FromStr for MethodChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "method1" | "1" => Ok(MethodChoice::Method1),
            "method2" | "2" => Ok(MethodChoice::Method2),
            "auto" => Ok(MethodChoice::Auto),
            _ => Err(format!("unknown method '{s}' (expected method1, method2 or auto)")),
        }
    }
}

/// How levels above κ are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Construction {
    /// Lift level by level with `L_{k+1}`.
    #[default]
    Iterative,
    /// Build each level directly from level κ with `T_k`.
    Direct,
}

/// Spherical polynomials `h` with square-scale `s`, meaning `s·Σ h_i² ≡ 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SphericalSpec {
    pub polys: Vec<Polynomial>,
    pub square_scale: Rational,
}

/// A polynomial optimization problem over the real variety of an ideal.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub variables: Vec<String>,
    pub objective: Polynomial,
    pub ideal: IdealPresentation,
    pub spherical: Option<SphericalSpec>,
    pub sense: Sense,
    /// User-fixed bases for some levels; other levels are grown greedily.
    pub pinned: BTreeMap<usize, Vec<Polynomial>>,
    /// Builder remarks carried into reports.
    pub notes: Vec<String>,
}

impl ProblemSpec {
    pub fn new(variables: Vec<String>, objective: Polynomial, ideal: IdealPresentation) -> Self {
        ProblemSpec {
            variables,
            objective,
            ideal,
            spherical: None,
            sense: Sense::Minimize,
            pinned: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_sense(mut self, sense: Sense) -> Self {
        self.sense = sense;
        self
    }

    pub fn with_spherical(mut self, polys: Vec<Polynomial>, square_scale: Rational) -> Self {
        self.spherical = Some(SphericalSpec { polys, square_scale });
        self
    }

    pub fn with_pinned_basis(mut self, level: usize, elements: Vec<Polynomial>) -> Self {
        self.pinned.insert(level, elements);
        self
    }

    pub fn with_objective(&self, objective: Polynomial) -> Self {
        ProblemSpec { objective, ..self.clone() }
    }

    /// The objective that is minimized internally.
    pub fn internal_objective(&self) -> Polynomial {
        match self.sense {
            Sense::Minimize => self.objective.clone(),
            Sense::Maximize => -&self.objective,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub k_max: usize,
    pub method: MethodChoice,
    /// Wall-clock budget for the whole run; see [`LevelStatus`].
    pub budget: Option<Duration>,
    pub construction: Construction,
    pub eig: EigOptions,
    pub groebner: GroebnerOptions,
}

impl SolveOptions {
    pub fn new(k_max: usize) -> Self {
        SolveOptions {
            k_max,
            method: MethodChoice::Auto,
            budget: None,
            construction: Construction::Iterative,
            eig: EigOptions { want_vector: false, ..EigOptions::default() },
            groebner: GroebnerOptions::default(),
        }
    }

    pub fn method(mut self, method: MethodChoice) -> Self {
        self.method = method;
        self
    }

    pub fn budget(mut self, budget: Duration) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn construction(mut self, construction: Construction) -> Self {
        self.construction = construction;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LevelStatus {
    Solved,
    /// The budget was spent before the level started.
    Skipped,
    /// The level finished after the budget ran out; its bound is discarded.
    OverBudget,
    Failed(String),
}

impl LevelStatus {
    pub fn name(&self) -> &'static str {
        match self {
            LevelStatus::Solved => "solved",
            LevelStatus::Skipped => "skipped",
            LevelStatus::OverBudget => "over_budget",
            LevelStatus::Failed(_) => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelRecord {
    pub k: usize,
    pub d_k: Option<usize>,
    /// Bound in the problem's sense (a lower bound when minimizing, an upper
    /// bound when maximizing).
    pub bound: Option<f64>,
    pub eig_path: Option<EigPath>,
    pub eig_residual: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub wall_time: Duration,
    pub status: LevelStatus,
}

impl LevelRecord {
    fn empty(k: usize, d_k: Option<usize>, status: LevelStatus) -> Self {
        LevelRecord {
            k,
            d_k,
            bound: None,
            eig_path: None,
            eig_residual: None,
            iterations: 0,
            converged: false,
            wall_time: Duration::ZERO,
            status,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub kappa: usize,
    pub method: InitMethod,
    pub sense: Sense,
    pub levels: Vec<LevelRecord>,
    pub monotone_ok: bool,
    pub warnings: Vec<String>,
}

impl BoundReport {
    pub fn bounds(&self) -> Vec<Option<f64>> {
        self.levels.iter().map(|l| l.bound).collect()
    }

    pub fn bound_at(&self, k: usize) -> Option<f64> {
        self.levels.iter().find(|l| l.k == k).and_then(|l| l.bound)
    }

    /// Tightest bound over the solved levels.
    pub fn best(&self) -> Option<f64> {
        let it = self.levels.iter().filter_map(|l| l.bound);
        match self.sense {
            Sense::Minimize => it.reduce(f64::max),
            Sense::Maximize => it.reduce(f64::min),
        }
    }

    /// Highest level with a bound.
    pub fn level_reached(&self) -> Option<usize> {
        self.levels.iter().filter(|l| l.bound.is_some()).map(|l| l.k).max()
    }

    /// True when some level failed or did not converge.
    pub fn has_failures(&self) -> bool {
        self.levels.iter().any(|l| {
            matches!(l.status, LevelStatus::Failed(_))
                || (l.status == LevelStatus::Solved && !l.converged)
        })
    }
}

type ChainKey = (usize, InitMethod);

/// Everything that depends only on the ideal and the spherical system.
///
/// Interior caches fill on demand and never change values once filled, so a
/// context behaves as an immutable value and can be shared across threads.
pub struct PrecomputedContext {
    presentation: IdealPresentation,
    spherical: SphericalSpec,
    pinned: BTreeMap<usize, Vec<Polynomial>>,
    sys: Arc<SphericalSystem>,
    tower: Arc<BasisTower>,
    levels: usize,
    inits: Mutex<HashMap<usize, Arc<Initializer>>>,
    chains: Mutex<HashMap<ChainKey, Arc<Mutex<Vec<GramMatrix>>>>>,
}

impl std::fmt::Debug for PrecomputedContext {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PrecomputedContext")
            .field("levels", &self.levels)
            .field("m", &self.sys.m())
            .field("built_levels", &self.tower.built_levels())
            .finish()
    }
}

impl PrecomputedContext {
    /// Lazy context: levels are built when first needed.
    pub fn build(
        ideal: &IdealPresentation,
        spherical: &SphericalSpec,
        pinned: &BTreeMap<usize, Vec<Polynomial>>,
        levels: usize,
        opts: GroebnerOptions,
    ) -> Result<Self, HierarchyError> {
        let ctx = Arc::new(GroebnerContext::from_presentation(ideal, opts)?);
        Self::assemble(ideal, spherical, pinned, levels, ctx, None)
    }

    /// Context for the ideal and spherical system of a problem.
    pub fn for_spec(spec: &ProblemSpec, levels: usize, opts: GroebnerOptions) -> Result<Self, HierarchyError> {
        let sph = spec.spherical.as_ref().ok_or(HierarchyError::NoSphericalSystem)?;
        Self::build(&spec.ideal, sph, &spec.pinned, levels, opts)
    }

    fn assemble(
        ideal: &IdealPresentation,
        spherical: &SphericalSpec,
        pinned: &BTreeMap<usize, Vec<Polynomial>>,
        levels: usize,
        ctx: Arc<GroebnerContext>,
        parts: Option<(Vec<SubspaceBasis>, Vec<SparseQMatrix>)>,
    ) -> Result<Self, HierarchyError> {
        if levels == 0 {
            return Err(HierarchyError::NoLevels);
        }
        let sys = Arc::new(SphericalSystem::verify(
            spherical.polys.clone(),
            spherical.square_scale.clone(),
            ctx.clone(),
        )?);
        let tower = match parts {
            Some((bases, lifts)) => BasisTower::from_parts(sys.clone(), bases, lifts),
            None => {
                let mut fixed = HashMap::new();
                for (&level, elems) in pinned {
                    fixed.insert(level, SubspaceBasis::from_elements(level, elems.clone(), &ctx)?);
                }
                BasisTower::with_pinned(sys.clone(), fixed)
            }
        };
        Ok(PrecomputedContext {
            presentation: ideal.clone(),
            spherical: spherical.clone(),
            pinned: pinned.clone(),
            sys,
            tower: Arc::new(tower),
            levels,
            inits: Mutex::new(HashMap::new()),
            chains: Mutex::new(HashMap::new()),
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn system(&self) -> &Arc<SphericalSystem> {
        &self.sys
    }

    pub fn groebner(&self) -> &Arc<GroebnerContext> {
        self.sys.ctx()
    }

    pub fn tower(&self) -> &Arc<BasisTower> {
        &self.tower
    }

    /// Starting-level data for κ, shared across objectives.
    pub fn initializer(&self, kappa: usize) -> Result<Arc<Initializer>, HierarchyError> {
        if let Some(init) = self.inits.lock().unwrap().get(&kappa) {
            return Ok(init.clone());
        }
        let init = Arc::new(Initializer::new(&self.tower, kappa)?);
        Ok(self.inits.lock().unwrap().entry(kappa).or_insert(init).clone())
    }

    /// `M_k(1)` on the iterative chain started at κ by `method`.
    pub fn one_at(&self, kappa: usize, method: InitMethod, k: usize) -> Result<GramMatrix, HierarchyError> {
        assert!(k >= kappa);
        let chain = {
            let mut chains = self.chains.lock().unwrap();
            match chains.get(&(kappa, method)) {
                Some(c) => c.clone(),
                None => {
                    let first = self.initializer(kappa)?.checked_one(method)?;
                    let c = Arc::new(Mutex::new(vec![first]));
                    chains.insert((kappa, method), c.clone());
                    c
                }
            }
        };
        let mut chain = chain.lock().unwrap();
        let s = self.sys.square_scale();
        while chain.len() <= k - kappa {
            let level = kappa + chain.len();
            let l = self.tower.lift(level)?;
            let l_f64 = Arc::new(SparseF64::from_exact(&l));
            let next = congruence(chain.last().unwrap(), &l, &l_f64, s);
            chain.push(next);
        }
        Ok(chain[k - kappa].clone())
    }

    /// Lifts a Gram matrix from level `from` to level `to` along the L chain.
    pub fn lift_to(&self, g: &GramMatrix, from: usize, to: usize) -> Result<GramMatrix, HierarchyError> {
        let s = self.sys.square_scale();
        let mut cur = g.clone();
        for level in from + 1..=to {
            let l = self.tower.lift(level)?;
            cur = congruence(&cur, &l, &Arc::new(SparseF64::from_exact(&l)), s);
        }
        Ok(cur)
    }

    /// Builds bases and lift matrices up to the context's level count and the
    /// Method 2 chain of `M_k(1)` from level 1.
    pub fn warm(&self) -> Result<(), HierarchyError> {
        self.tower.basis(self.levels)?;
        self.one_at(1, InitMethod::Method2, self.levels)?;
        Ok(())
    }

    fn check_matches(&self, spec: &ProblemSpec) -> Result<(), HierarchyError> {
        if spec.ideal != self.presentation {
            return Err(HierarchyError::ContextMismatch("ideal presentation differs".into()));
        }
        match &spec.spherical {
            Some(s) if *s == self.spherical => {}
            _ => return Err(HierarchyError::ContextMismatch("spherical system differs".into())),
        }
        if spec.pinned != self.pinned {
            return Err(HierarchyError::ContextMismatch("pinned bases differ".into()));
        }
        Ok(())
    }
}

/// Eagerly built context for reuse across objectives over one ideal.
pub fn precompute(
    ideal: &IdealPresentation,
    spherical: &SphericalSpec,
    levels: usize,
) -> Result<PrecomputedContext, HierarchyError> {
    let ctx = PrecomputedContext::build(ideal, spherical, &BTreeMap::new(), levels, GroebnerOptions::default())?;
    ctx.warm()?;
    Ok(ctx)
}

/// Bounds for levels κ..k_max.
pub fn solve(spec: &ProblemSpec, k_max: usize, method: MethodChoice) -> Result<BoundReport, HierarchyError> {
    solve_with_options(spec, &SolveOptions::new(k_max).method(method))
}

pub fn solve_with_options(spec: &ProblemSpec, opts: &SolveOptions) -> Result<BoundReport, HierarchyError> {
    let ctx = PrecomputedContext::for_spec(spec, opts.k_max.max(1), opts.groebner)?;
    solve_with_context(spec, &ctx, opts)
}

/// Solves against a precomputed context; starting levels above the context's
/// level count are reported as not representable.
pub fn solve_with_context(
    spec: &ProblemSpec,
    ctx: &PrecomputedContext,
    opts: &SolveOptions,
) -> Result<BoundReport, HierarchyError> {
    ctx.check_matches(spec)?;
    if opts.k_max == 0 {
        return Err(HierarchyError::NoLevels);
    }
    let start = Instant::now();
    let mut warnings = spec.notes.clone();
    let p = spec.internal_objective();
    let (kappa, coords) = ctx.tower.find_kappa(&p, opts.k_max.min(ctx.levels))?;
    let init = ctx.initializer(kappa)?;

    let method = match opts.method {
        MethodChoice::Method1 => {
            ctx.one_at(kappa, InitMethod::Method1, kappa)?;
            InitMethod::Method1
        }
        MethodChoice::Method2 => InitMethod::Method2,
        MethodChoice::Auto => match ctx.one_at(kappa, InitMethod::Method1, kappa) {
            Ok(_) => InitMethod::Method1,
            Err(HierarchyError::Gram(GramError::NotPositiveDefinite)) => {
                warnings.push(
                    "Method 1 gave an indefinite Gram matrix for 1; switched to Method 2".into(),
                );
                InitMethod::Method2
            }
            Err(e) => return Err(e),
        },
    };

    let p_kappa = init.gram_of_coords(&coords, method);
    let one_kappa = ctx.one_at(kappa, method, kappa)?;
    let s = ctx.sys.square_scale().clone();
    let sign = if spec.sense == Sense::Maximize { -1.0 } else { 1.0 };

    let mut levels = Vec::new();
    let mut internal: Vec<(usize, f64)> = Vec::new();
    let mut prev_p: Option<GramMatrix> = None;
    let mut t: Option<SparseQMatrix> = None;
    let mut scale = Rational::one();
    let mut broken = false;
    for k in kappa..=opts.k_max {
        let d_k = (k <= ctx.tower.built_levels()).then(|| ctx.tower.basis(k).map(|b| b.dim()).ok()).flatten();
        if broken {
            levels.push(LevelRecord::empty(k, d_k, LevelStatus::Skipped));
            continue;
        }
        if opts.budget.is_some_and(|b| start.elapsed() >= b) {
            levels.push(LevelRecord::empty(k, d_k, LevelStatus::Skipped));
            continue;
        }
        let t0 = Instant::now();
        let built = build_level(ctx, opts.construction, k, kappa, method, &p_kappa, &one_kappa, prev_p.as_ref(), &mut t, &mut scale, &s);
        let (pk, onek) = match built {
            Ok(x) => x,
            Err(e) => {
                let mut rec = LevelRecord::empty(k, d_k, LevelStatus::Failed(e.to_string()));
                rec.wall_time = t0.elapsed();
                levels.push(rec);
                broken = true;
                continue;
            }
        };
        let d_k = Some(pk.dim());
        let mut rec = LevelRecord::empty(k, d_k, LevelStatus::Solved);
        match lambda_min_generalized(pk.op.as_ref(), onek.op.as_ref(), &opts.eig) {
            Ok(res) => {
                rec.eig_path = Some(res.path);
                rec.eig_residual = Some(res.residual_norm);
                rec.iterations = res.iterations;
                rec.converged = res.converged;
                rec.bound = Some(sign * res.lambda_min);
                if !res.converged {
                    warnings.push(format!("level {k}: eigensolver did not reach tolerance"));
                }
            }
            Err(e) => rec.status = LevelStatus::Failed(e.to_string()),
        }
        rec.wall_time = t0.elapsed();
        if opts.budget.is_some_and(|b| start.elapsed() > b) && rec.status == LevelStatus::Solved {
            rec.status = LevelStatus::OverBudget;
            rec.bound = None;
        }
        if let Some(b) = rec.bound {
            internal.push((k, sign * b));
        }
        levels.push(rec);
        prev_p = Some(pk);
    }

    let mut monotone_ok = true;
    for w in internal.windows(2) {
        if w[1].1 < w[0].1 - MONOTONE_SLACK {
            monotone_ok = false;
            warnings.push(format!(
                "bound decreased from level {} to {} by {:.3e} (numerical)",
                w[0].0,
                w[1].0,
                w[0].1 - w[1].1
            ));
        }
    }
    Ok(BoundReport { kappa, method, sense: spec.sense, levels, monotone_ok, warnings })
}

#[allow(clippy::too_many_arguments)]
fn build_level(
    ctx: &PrecomputedContext,
    construction: Construction,
    k: usize,
    kappa: usize,
    method: InitMethod,
    p_kappa: &GramMatrix,
    one_kappa: &GramMatrix,
    prev_p: Option<&GramMatrix>,
    t: &mut Option<SparseQMatrix>,
    scale: &mut Rational,
    s: &Rational,
) -> Result<(GramMatrix, GramMatrix), HierarchyError> {
    if k == kappa {
        return Ok((p_kappa.clone(), one_kappa.clone()));
    }
    let l = ctx.tower.lift(k)?;
    match construction {
        Construction::Iterative => {
            let l_f64 = Arc::new(SparseF64::from_exact(&l));
            let pk = congruence(prev_p.expect("previous level"), &l, &l_f64, s);
            Ok((pk, ctx.one_at(kappa, method, k)?))
        }
        Construction::Direct => {
            let next = match t.take() {
                None => (*l).clone(),
                Some(prev) => prev.kron_identity_left(ctx.sys.m()).mul_sparse(&l),
            };
            *scale *= s;
            let t_f64 = Arc::new(SparseF64::from_exact(&next));
            let pk = congruence(p_kappa, &next, &t_f64, scale);
            let onek = congruence(one_kappa, &next, &t_f64, scale);
            *t = Some(next);
            Ok((pk, onek))
        }
    }
}

// Cache file layout. Polynomials are stored as (exponents, coefficient) lists.
type StoredPoly = Vec<(Vec<u32>, String)>;

#[derive(Serialize, Deserialize)]
struct StoredLevel {
    level: usize,
    elements: Vec<StoredPoly>,
    labels: Option<Vec<Vec<usize>>>,
}

#[derive(Serialize, Deserialize)]
struct StoredLift {
    ncols: usize,
    rows: Vec<Vec<(usize, String)>>,
}

#[derive(Serialize, Deserialize)]
struct StoredPayload {
    presentation_digest: String,
    spherical: Vec<StoredPoly>,
    square_scale: String,
    levels: usize,
    groebner_source: BasisSource,
    groebner_basis: Vec<StoredPoly>,
    bases: Vec<StoredLevel>,
    lifts: Vec<StoredLift>,
}

#[derive(Serialize, Deserialize)]
struct StoredContext {
    format: String,
    checksum: String,
    payload: StoredPayload,
}

fn store_poly(p: &Polynomial) -> StoredPoly {
    p.terms().iter().map(|(m, c)| (m.exponents().to_vec(), format_rational(c))).collect()
}

fn load_poly(stored: &StoredPoly, nvars: usize, order: crate::MonomialOrder) -> Result<Polynomial, HierarchyError> {
    let mut terms = Vec::with_capacity(stored.len());
    for (e, c) in stored {
        if e.len() != nvars {
            return Err(HierarchyError::Cache("monomial of the wrong arity".into()));
        }
        let c = parse_rational(c).map_err(|e| HierarchyError::Cache(e.to_string()))?;
        terms.push((Monomial::new(e.clone()), c));
    }
    Ok(Polynomial::from_terms(nvars, order, terms))
}

fn checksum(payload: &StoredPayload) -> Result<String, HierarchyError> {
    let text = serde_json::to_string(payload).map_err(|e| HierarchyError::Cache(e.to_string()))?;
    Ok(hex::encode(Sha256::digest(text.as_bytes())))
}

impl PrecomputedContext {
    /// JSON snapshot of the Gröbner basis, bases and lift matrices built so far.
    pub fn to_json(&self) -> Result<String, HierarchyError> {
        let built = self.tower.built_levels();
        let bases = (1..=built)
            .map(|k| {
                let b = self.tower.basis(k)?;
                Ok(StoredLevel {
                    level: k,
                    elements: b.elements().iter().map(store_poly).collect(),
                    labels: b.labels().map(|l| l.to_vec()),
                })
            })
            .collect::<Result<Vec<_>, HierarchyError>>()?;
        let lifts = (2..=built)
            .map(|k| {
                let l = self.tower.lift(k)?;
                Ok(StoredLift {
                    ncols: l.ncols(),
                    rows: l
                        .rows()
                        .iter()
                        .map(|r| r.iter().map(|(j, x)| (*j, format_rational(x))).collect())
                        .collect(),
                })
            })
            .collect::<Result<Vec<_>, HierarchyError>>()?;
        let g = self.groebner();
        let payload = StoredPayload {
            presentation_digest: self.presentation.digest(),
            spherical: self.spherical.polys.iter().map(store_poly).collect(),
            square_scale: format_rational(&self.spherical.square_scale),
            levels: self.levels,
            groebner_source: g.source(),
            groebner_basis: g.basis().iter().map(store_poly).collect(),
            bases,
            lifts,
        };
        let stored = StoredContext { format: CONTEXT_FORMAT.into(), checksum: checksum(&payload)?, payload };
        serde_json::to_string(&stored).map_err(|e| HierarchyError::Cache(e.to_string()))
    }

    /// Restores a snapshot written by [`to_json`](Self::to_json) for the same
    /// ideal and spherical system; mismatches and corruption are errors.
    pub fn from_json(
        text: &str,
        ideal: &IdealPresentation,
        spherical: &SphericalSpec,
    ) -> Result<Self, HierarchyError> {
        let stored: StoredContext =
            serde_json::from_str(text).map_err(|e| HierarchyError::Cache(e.to_string()))?;
        if stored.format != CONTEXT_FORMAT {
            return Err(HierarchyError::Cache(format!("unknown format '{}'", stored.format)));
        }
        if checksum(&stored.payload)? != stored.checksum {
            return Err(HierarchyError::Cache("checksum mismatch".into()));
        }
        let p = stored.payload;
        if p.presentation_digest != ideal.digest() {
            return Err(HierarchyError::ContextMismatch("ideal presentation differs".into()));
        }
        let n = ideal.nvars;
        let order = ideal.order;
        let sph = p.spherical.iter().map(|q| load_poly(q, n, order)).collect::<Result<Vec<_>, _>>()?;
        let scale = parse_rational(&p.square_scale).map_err(|e| HierarchyError::Cache(e.to_string()))?;
        if sph != spherical.polys || scale != spherical.square_scale {
            return Err(HierarchyError::ContextMismatch("spherical system differs".into()));
        }
        let gb = p.groebner_basis.iter().map(|q| load_poly(q, n, order)).collect::<Result<Vec<_>, _>>()?;
        let ctx = Arc::new(GroebnerContext::from_parts(ideal, gb, p.groebner_source));
        let mut bases = Vec::new();
        for lvl in &p.bases {
            let elems = lvl.elements.iter().map(|q| load_poly(q, n, order)).collect::<Result<Vec<_>, _>>()?;
            let mut b = SubspaceBasis::from_elements(lvl.level, elems, &ctx)?;
            if let Some(labels) = &lvl.labels {
                b = b.with_labels(labels.clone());
            }
            bases.push(b);
        }
        let lifts = p
            .lifts
            .iter()
            .map(|l| {
                let rows = l
                    .rows
                    .iter()
                    .map(|r| {
                        r.iter()
                            .map(|(j, x)| Ok((*j, parse_rational(x).map_err(|e| HierarchyError::Cache(e.to_string()))?)))
                            .collect::<Result<SparseVec, HierarchyError>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(SparseQMatrix::new(l.ncols, rows))
            })
            .collect::<Result<Vec<_>, HierarchyError>>()?;
        if lifts.len() + 1 != bases.len().max(1) {
            return Err(HierarchyError::Cache("level and lift counts disagree".into()));
        }
        Self::assemble(ideal, spherical, &BTreeMap::new(), p.levels, ctx, Some((bases, lifts)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::{parse_with, rat, rat_int};

    fn names(n: &[&str]) -> Vec<String> {
        n.iter().map(|s| s.to_string()).collect()
    }

    fn hypercube3() -> ProblemSpec {
        let v = ["x1", "x2", "x3"];
        let gens = ["x1^2 - 1", "x2^2 - 1", "x3^2 - 1"].iter().map(|g| parse_with(g, &v).unwrap()).collect();
        let ideal = IdealPresentation::new(3, gens).unwrap();
        let p = parse_with("2*x1^2 + x1*x2 - 5*x2^2 - 2*x2*x3 + 3*x1 - 2*x3 + 12", &v).unwrap();
        let h = ["1", "x1", "x2", "x3"].iter().map(|g| parse_with(g, &v).unwrap()).collect();
        ProblemSpec::new(names(&v), p, ideal).with_spherical(h, rat(1, 4))
    }

    #[test]
    fn hypercube_level_one() {
        let r = solve(&hypercube3(), 1, MethodChoice::Auto).unwrap();
        assert_eq!(r.kappa, 1);
        let b = r.bound_at(1).unwrap();
        assert!(b > 0.735 && b < 0.745, "{b}");
    }

    #[test]
    fn zero_and_constant_objectives() {
        let spec = hypercube3();
        let zero = spec.with_objective(Polynomial::zero(3));
        for b in solve(&zero, 3, MethodChoice::Auto).unwrap().bounds() {
            assert!(b.unwrap().abs() < 1e-12);
        }
        let c = spec.with_objective(Polynomial::constant(3, rat(-7, 3)));
        for b in solve(&c, 3, MethodChoice::Method2).unwrap().bounds() {
            assert!((b.unwrap() + 7.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn maximize_is_negated() {
        let spec = hypercube3();
        let neg = spec.with_objective(-&spec.objective).with_sense(Sense::Maximize);
        let a = solve(&spec, 2, MethodChoice::Auto).unwrap();
        let b = solve(&neg, 2, MethodChoice::Auto).unwrap();
        for (x, y) in a.bounds().iter().zip(b.bounds()) {
            assert_eq!(x.unwrap(), -y.unwrap());
        }
    }

    #[test]
    fn context_cache_round_trip() {
        let spec = hypercube3();
        let sph = spec.spherical.clone().unwrap();
        let ctx = precompute(&spec.ideal, &sph, 3).unwrap();
        let text = ctx.to_json().unwrap();
        let back = PrecomputedContext::from_json(&text, &spec.ideal, &sph).unwrap();
        let opts = SolveOptions::new(3);
        let a = solve_with_context(&spec, &ctx, &opts).unwrap();
        let b = solve_with_context(&spec, &back, &opts).unwrap();
        assert_eq!(a.bounds(), b.bounds());
        let tampered = text.replacen("\"1\"", "\"2\"", 1);
        assert!(PrecomputedContext::from_json(&tampered, &spec.ideal, &sph).is_err());
    }

    #[test]
    fn budget_zero_skips_everything() {
        let opts = SolveOptions::new(3).budget(Duration::ZERO);
        let r = solve_with_options(&hypercube3(), &opts).unwrap();
        assert!(r.levels.iter().all(|l| l.status == LevelStatus::Skipped && l.bound.is_none()));
    }

    #[test]
    fn mismatched_context_is_rejected() {
        let spec = hypercube3();
        let ctx = PrecomputedContext::for_spec(&spec, 2, GroebnerOptions::default()).unwrap();
        let other = spec.clone().with_spherical(spec.spherical.clone().unwrap().polys, rat_int(1));
        assert!(matches!(
            solve_with_context(&other, &ctx, &SolveOptions::new(2)),
            Err(HierarchyError::ContextMismatch(_))
        ));
    }
}
