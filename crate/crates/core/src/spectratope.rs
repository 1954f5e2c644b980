//! Spectratope outer approximations: support functions over
//! `S_k = {M_k⋆(X) : ⟨M_k(1), X⟩ = 1, X ⪰ 0}`, 2-D boundary sampling and
//! one-sided containment checks.
//!
//! Coordinates live in `U_{2b}` for a base level `b` (κ of an objective, or
//! the first level whose `U_{2b}` holds every linear polynomial).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DVector;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::eig::{lambda_min_generalized, EigError, EigOptions, SymOperator};
use crate::gram::{InitMethod, Operator};
use crate::hierarchy::{HierarchyError, PrecomputedContext, SphericalSpec};
use crate::ideal::IdealPresentation;
use crate::polyring::{parse_with, Polynomial, Rational};
use crate::subspace::SubspaceBasis;

/// Slack for supporting-hyperplane checks.
pub const SUPPORT_TOL: f64 = 1e-8;

/// Default number of directions for 2-D boundaries.
pub const DEFAULT_DIRECTIONS: usize = 360;

/// `Σ c_i A_i` applied without forming the sum.
struct Combination {
    terms: Vec<(f64, Operator)>,
    dim: usize,
}

impl SymOperator for Combination {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        y.iter_mut().for_each(|v| *v = 0.0);
        let mut tmp = vec![0.0; self.dim];
        for (c, a) in &self.terms {
            a.apply(x, &mut tmp);
            for (yi, ti) in y.iter_mut().zip(&tmp) {
                *yi += c * ti;
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        self.terms.iter().map(|(c, a)| c.abs() * a.norm_bound()).sum()
    }
}

fn quad(a: &dyn SymOperator, v: &[f64]) -> f64 {
    let mut y = vec![0.0; v.len()];
    a.apply(v, &mut y);
    v.iter().zip(&y).map(|(a, b)| a * b).sum()
}

/// Linear Gram map `M_k : U_{2b} → S^{d_k}` at one level, with `M_k(1)`.
pub struct SpectratopeHandle {
    level: usize,
    base: usize,
    basis: Arc<SubspaceBasis>,
    maps: Vec<Operator>,
    one: Operator,
    /// `M_k(x_j)` for each variable when affine coordinates are available.
    affine: Option<Vec<Operator>>,
    eig: EigOptions,
}

impl SpectratopeHandle {
    /// Builds `M_k(e_i)` for every basis element `e_i` of `U_{2·base}`.
    pub fn new(
        ctx: &PrecomputedContext,
        base: usize,
        level: usize,
        method: InitMethod,
    ) -> Result<Self, HierarchyError> {
        assert!(level >= base);
        let init = ctx.initializer(base)?;
        let basis = init.solver.basis_2k().clone();
        let d = basis.dim();
        let unit = |i: usize| {
            (0..d).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect::<Vec<_>>()
        };
        let maps = (0..d)
            .into_par_iter()
            .map(|i| {
                let g = init.gram_of_coords(&unit(i), method);
                Ok(ctx.lift_to(&g, base, level)?.op)
            })
            .collect::<Result<Vec<_>, HierarchyError>>()?;
        let one = ctx.one_at(base, method, level)?.op;
        let n = ctx.system().nvars();
        let affine = (0..n)
            .map(|j| basis.coordinates(&Polynomial::var(n, j), ctx.groebner()))
            .collect::<Result<Option<Vec<_>>, _>>()?
            .map(|coords| {
                coords
                    .iter()
                    .map(|c| Ok(ctx.lift_to(&init.gram_of_coords(c, method), base, level)?.op))
                    .collect::<Result<Vec<_>, HierarchyError>>()
            })
            .transpose()?;
        Ok(SpectratopeHandle {
            level,
            base,
            basis,
            maps,
            one,
            affine,
            eig: EigOptions { want_vector: true, ..EigOptions::default() },
        })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn base(&self) -> usize {
        self.base
    }

    /// Basis of the coordinate space `U_{2·base}`.
    pub fn basis(&self) -> &Arc<SubspaceBasis> {
        &self.basis
    }

    pub fn gram_of_one(&self) -> &Operator {
        &self.one
    }

    pub fn has_affine(&self) -> bool {
        self.affine.is_some()
    }

    fn combination(&self, ops: &[Operator], c: &[f64], sign: f64) -> Combination {
        let terms = ops
            .iter()
            .zip(c)
            .filter(|(_, &ci)| ci != 0.0)
            .map(|(a, &ci)| (sign * ci, a.clone()))
            .collect();
        Combination { terms, dim: self.one.dim() }
    }

    fn support_in(&self, ops: &[Operator], c: &[f64]) -> Result<(f64, Option<Vec<f64>>), EigError> {
        assert_eq!(ops.len(), c.len(), "direction has the wrong length");
        let a = self.combination(ops, c, -1.0);
        let r = lambda_min_generalized(&a, self.one.as_ref(), &self.eig)?;
        Ok((-r.lambda_min, r.vector))
    }

    /// `max ⟨c, y⟩` over `S_k`, with `c` in coordinates of `U_{2·base}`.
    pub fn support(&self, c: &[f64]) -> Result<f64, EigError> {
        Ok(self.support_in(&self.maps, c)?.0)
    }

    /// Support in affine coordinates `x = P z_{2·base}`.
    pub fn support_affine(&self, c: &[f64]) -> Result<f64, EigError> {
        let ops = self.affine.as_ref().expect("affine coordinates are not available at this base level");
        Ok(self.support_in(ops, c)?.0)
    }

    /// Support in affine coordinates and the affine image of the maximizer.
    pub fn support_point_affine(&self, c: &[f64]) -> Result<(f64, Vec<f64>), EigError> {
        let ops = self.affine.as_ref().expect("affine coordinates are not available at this base level");
        let (value, v) = self.support_in(ops, c)?;
        let v = v.expect("eigenvector requested");
        let norm = quad(self.one.as_ref(), &v);
        Ok((value, ops.iter().map(|a| quad(a.as_ref(), &v) / norm).collect()))
    }

    /// Supports in `n_directions` evenly spaced angles of the 2-D affine plane.
    pub fn boundary_2d(&self, n_directions: usize) -> Result<BoundaryPolygon, EigError> {
        let dims = self.affine.as_ref().map_or(0, |a| a.len());
        assert_eq!(dims, 2, "boundary sampling needs two affine coordinates");
        let points = (0..n_directions)
            .into_par_iter()
            .map(|t| {
                let angle = 2.0 * PI * t as f64 / n_directions as f64;
                let direction = [angle.cos(), angle.sin()];
                let (support, p) = self.support_point_affine(&direction)?;
                Ok(BoundaryPoint { angle, direction, support, point: [p[0], p[1]] })
            })
            .collect::<Result<Vec<_>, EigError>>()?;
        Ok(BoundaryPolygon { level: self.level, points })
    }

    /// `z_{2·base}(x)`, the coordinate image of a point.
    pub fn coordinate_image(&self, x: &[f64]) -> Vec<f64> {
        self.basis.elements().iter().map(|e| e.eval_f64(x)).collect()
    }

    /// Checks `⟨c, z_{2·base}(x)⟩ ≤ support(c) + tol` for every point and
    /// direction; the directions are the coordinate axes (both signs) and
    /// `n_random` seeded random unit vectors.
    pub fn containment_check(
        &self,
        points: &[Vec<f64>],
        n_random: usize,
        seed: u64,
    ) -> Result<ContainmentReport, EigError> {
        let d = self.basis.dim();
        let mut directions: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            for s in [1.0, -1.0] {
                let mut c = vec![0.0; d];
                c[i] = s;
                directions.push(c);
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_random {
            let c = DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0)).normalize();
            directions.push(c.iter().copied().collect());
        }
        let supports =
            directions.par_iter().map(|c| self.support(c)).collect::<Result<Vec<_>, _>>()?;
        let images: Vec<Vec<f64>> = points.iter().map(|x| self.coordinate_image(x)).collect();
        let mut violations = Vec::new();
        for (pi, y) in images.iter().enumerate() {
            for (di, (c, &s)) in directions.iter().zip(&supports).enumerate() {
                let lhs: f64 = c.iter().zip(y).map(|(a, b)| a * b).sum();
                if lhs > s + SUPPORT_TOL * (1.0 + s.abs()) {
                    violations.push(Violation { point: pi, direction: di, value: lhs, support: s });
                }
            }
        }
        Ok(ContainmentReport { points: points.len(), directions: directions.len(), violations })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryPoint {
    pub angle: f64,
    pub direction: [f64; 2],
    pub support: f64,
    pub point: [f64; 2],
}

/// Supporting lines of a projected spectratope.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryPolygon {
    pub level: usize,
    pub points: Vec<BoundaryPoint>,
}

impl BoundaryPolygon {
    /// Points `x` in the plane violating some supporting line by more than `tol`.
    pub fn outside(&self, x: [f64; 2], tol: f64) -> Option<&BoundaryPoint> {
        self.points.iter().find(|b| b.direction[0] * x[0] + b.direction[1] * x[1] > b.support + tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub point: usize,
    pub direction: usize,
    pub value: f64,
    pub support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub points: usize,
    pub directions: usize,
    pub violations: Vec<Violation>,
}

impl ContainmentReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Smallest `k ≤ k_max` whose `U_{2k}` contains every variable.
pub fn affine_level(ctx: &PrecomputedContext, k_max: usize) -> Result<Option<usize>, HierarchyError> {
    let n = ctx.system().nvars();
    for k in 1..=k_max {
        let b = ctx.tower().basis(2 * k)?;
        let mut all = true;
        for j in 0..n {
            if b.coordinates(&Polynomial::var(n, j), ctx.groebner())?.is_none() {
                all = false;
                break;
            }
        }
        if all {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// A named ideal with a spherical system, for figures and checks.
#[derive(Debug, Clone)]
pub struct Preset {
    pub variables: Vec<String>,
    pub ideal: IdealPresentation,
    pub spherical: SphericalSpec,
}

fn preset(vars: &[&str], gens: &[&str], h: &[&str], s: Rational) -> Preset {
    let p = |t: &str| parse_with(t, vars).expect("preset polynomial");
    Preset {
        variables: vars.iter().map(|v| v.to_string()).collect(),
        ideal: IdealPresentation::new(vars.len(), gens.iter().map(|g| p(g)).collect()).expect("preset ideal"),
        spherical: SphericalSpec { polys: h.iter().map(|t| p(t)).collect(), square_scale: s },
    }
}

/// The curve `x² + 2y² − 2x³y − 2x²y² + 2x⁴y² = 4` with spherical polynomials
/// `(y − x²y)/2, (x − x²y)/2, y/2`. A constant is appended so that the
/// subspaces are nested: stored as `(y − x²y, x − x²y, y, 2)` with square-scale 1/8.
pub fn ex51_preset() -> Preset {
    preset(
        &["x", "y"],
        &["x^2 + 2*y^2 - 2*x^3*y - 2*x^2*y^2 + 2*x^4*y^2 - 4"],
        &["y - x^2*y", "x - x^2*y", "y", "2"],
        Rational::new(1.into(), 8.into()),
    )
}

/// The unit circle with spherical polynomials `(x1, x2, 1)/√2`.
pub fn circle_preset() -> Preset {
    preset(&["x1", "x2"], &["x1^2 + x2^2 - 1"], &["x1", "x2", "1"], Rational::new(1.into(), 2.into()))
}
