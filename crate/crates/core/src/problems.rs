//! Builders for max-cut, distance to a variety, and the tensor spectral norm,
//! with closed-form Gram matrices for the first two max-cut levels.

use std::collections::{BTreeMap, HashSet};

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eig::{lambda_min_generalized, EigError, EigOptions, SparseSym, SymmetricMatrix};
use crate::hierarchy::{ProblemSpec, Sense};
use crate::ideal::IdealPresentation;
use crate::polyring::{Monomial, Polynomial, Rational};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid graph: {0}")]
    Graph(String),
    #[error("invalid tensor: {0}")]
    Tensor(String),
    #[error("invalid input: {0}")]
    Input(String),
}

fn exact(x: f64) -> Result<Rational, ProblemError> {
    Rational::from_float(x).ok_or_else(|| ProblemError::Input(format!("non-finite value {x}")))
}

/// Undirected weighted graph; edges are stored once with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl Graph {
    /// Normalizes endpoints and sums parallel edges; rejects loops,
    /// out-of-range endpoints and non-finite weights.
    pub fn new(n: usize, edges: Vec<(usize, usize, f64)>) -> Result<Self, ProblemError> {
        let mut merged: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (i, j, w) in edges {
            if i == j {
                return Err(ProblemError::Graph(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(ProblemError::Graph(format!("edge ({i}, {j}) outside 0..{n}")));
            }
            if !w.is_finite() {
                return Err(ProblemError::Graph(format!("weight of ({i}, {j}) is not finite")));
            }
            *merged.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
        }
        let edges = merged.into_iter().filter(|(_, w)| *w != 0.0).map(|((i, j), w)| (i, j, w)).collect();
        Ok(Graph { n, edges })
    }

    pub fn empty(n: usize) -> Self {
        Graph { n, edges: Vec::new() }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, 1.0))).collect();
        Graph { n, edges }
    }

    /// Erdős–Rényi graph: each pair is an edge with probability `rho`.
    pub fn erdos_renyi(n: usize, rho: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < rho {
                    edges.push((i, j, 1.0));
                }
            }
        }
        Graph { n, edges }
    }

    /// Edge list with one `i j [w]` per line (0-based); `#` starts a comment.
    /// A line `n <count>` fixes the vertex count, which otherwise is one more
    /// than the largest endpoint.
    pub fn parse_edge_list(text: &str) -> Result<Self, ProblemError> {
        let mut n: Option<usize> = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || ProblemError::Graph(format!("line {}: cannot parse '{raw}'", lineno + 1));
            if fields[0] == "n" {
                n = Some(fields.get(1).ok_or_else(bad)?.parse().map_err(|_| bad())?);
                continue;
            }
            if fields.len() < 2 || fields.len() > 3 {
                return Err(bad());
            }
            let i: usize = fields[0].parse().map_err(|_| bad())?;
            let j: usize = fields[1].parse().map_err(|_| bad())?;
            let w: f64 = match fields.get(2) {
                Some(w) => w.parse().map_err(|_| bad())?,
                None => 1.0,
            };
            edges.push((i, j, w));
        }
        let n = n.unwrap_or_else(|| edges.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0));
        Graph::new(n, edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|&&(i, j, _)| i == v || j == v).count()
    }

    pub fn adjacency_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.n, self.n);
        for &(i, j, w) in &self.edges {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        a
    }

    pub fn adjacency(&self) -> SymmetricMatrix {
        SymmetricMatrix::Sparse(SparseSym::from_triplets(
            self.n,
            self.edges.iter().map(|&(i, j, w)| (j, i, w)),
        ))
    }

    /// `⟨A, 11ᵀ⟩`, twice the total edge weight.
    pub fn total_weight(&self) -> f64 {
        2.0 * self.edges.iter().map(|e| e.2).sum::<f64>()
    }

    /// Weight of the cut given by the sign of each vertex.
    pub fn cut_value(&self, side: &[bool]) -> f64 {
        self.edges.iter().filter(|&&(i, j, _)| side[i] != side[j]).map(|e| e.2).sum()
    }
}

fn var_names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// `min xᵀAx` over `{±1}^n` with `h_i = x_i` and square-scale `1/n`.
pub fn maxcut_spec(g: &Graph) -> Result<ProblemSpec, ProblemError> {
    let n = g.n();
    if n == 0 {
        return Err(ProblemError::Graph("graph has no vertices".into()));
    }
    let gens = (0..n)
        .map(|i| &Polynomial::var(n, i).pow(2) - &Polynomial::one(n))
        .collect();
    let ideal = IdealPresentation::new(n, gens).map_err(|e| ProblemError::Input(e.to_string()))?.trusted(true);
    let mut terms = Vec::with_capacity(g.edges().len());
    for &(i, j, w) in g.edges() {
        let mut e = vec![0u32; n];
        e[i] = 1;
        e[j] = 1;
        terms.push((Monomial::new(e), exact(2.0 * w)?));
    }
    let objective = Polynomial::from_terms(n, ideal.order, terms);
    let h = (0..n).map(|i| Polynomial::var(n, i)).collect();
    Ok(ProblemSpec::new(var_names("x", n), objective, ideal)
        .with_spherical(h, Rational::new(1.into(), (n as i64).into())))
}

/// Upper bound on the max cut from a lower bound on `min xᵀAx`.
pub fn cut_bound(g: &Graph, min_bound: f64) -> f64 {
    0.5 * (g.total_weight() - min_bound) + 0.0
}

/// Level-1 pair `(M_1(p), M_1(1)) = (A, I/n)` in the basis `x`.
pub fn maxcut_level1_closed_form(g: &Graph) -> (SymmetricMatrix, SymmetricMatrix) {
    let n = g.n();
    (g.adjacency(), SymmetricMatrix::Diagonal(vec![1.0 / n as f64; n]))
}

/// Index of `x_i x_j` (`i < j`) in the level-2 basis `(1, x_i x_j)_{i<j}`.
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    1 + i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Level-2 pair in the basis `(1, x_i x_j)_{i<j}`, sparse.
pub fn maxcut_level2_closed_form(g: &Graph) -> (SymmetricMatrix, SymmetricMatrix) {
    let n = g.n();
    let nf = n as f64;
    let d = 1 + n * n.saturating_sub(1) / 2;
    let idx = |a: usize, b: usize| pair_index(n, a.min(b), a.max(b));
    let mut trip = Vec::new();
    for &(k, l, w) in g.edges() {
        trip.push((idx(k, l), 0, 2.0 * w / nf));
        for i in (0..n).filter(|&i| i != k && i != l) {
            trip.push((idx(i, k), idx(i, l), w / nf));
        }
    }
    let mut one = vec![2.0 / (nf * nf); d];
    one[0] = 1.0 / nf;
    (SymmetricMatrix::Sparse(SparseSym::from_triplets(d, trip)), SymmetricMatrix::Diagonal(one))
}

/// Lower bound on `min xᵀAx` from a closed-form level (1 or 2).
pub fn maxcut_closed_form_bound(g: &Graph, level: usize, opts: &EigOptions) -> Result<f64, EigError> {
    if g.edges().is_empty() {
        return Ok(0.0);
    }
    let (mp, m1) = match level {
        1 => maxcut_level1_closed_form(g),
        2 => maxcut_level2_closed_form(g),
        _ => panic!("closed forms exist for levels 1 and 2 only"),
    };
    Ok(lambda_min_generalized(&mp, &m1, opts)?.lambda_min)
}

fn embed(p: &Polynomial, nvars: usize) -> Polynomial {
    Polynomial::from_terms(
        nvars,
        p.order(),
        p.terms().iter().map(|(m, c)| {
            let mut e = m.exponents().to_vec();
            e.resize(nvars, 0);
            (Monomial::new(e), c.clone())
        }),
    )
}

/// Squared distance from `point` to the real variety of `generators`, over
/// the ball of squared radius `r2` via a slack variable `y` with
/// `R² − ‖x‖² − y² = 0` and spherical system `{1, x, y}/√(R²+1)`.
pub fn distance_spec(
    variables: &[String],
    generators: &[Polynomial],
    r2: &Rational,
    point: &[Rational],
) -> Result<ProblemSpec, ProblemError> {
    let n = variables.len();
    if point.len() != n {
        return Err(ProblemError::Input(format!("point has {} coordinates, expected {n}", point.len())));
    }
    if r2 <= &Rational::zero() {
        return Err(ProblemError::Input("squared radius must be positive".into()));
    }
    let nv = n + 1;
    let mut slack = "y".to_string();
    while variables.contains(&slack) {
        slack.push('_');
    }
    let mut names = variables.to_vec();
    names.push(slack);
    let mut gens: Vec<Polynomial> = generators.iter().map(|g| embed(g, nv)).collect();
    let mut ball = Polynomial::constant(nv, r2.clone());
    for i in 0..nv {
        ball = &ball - &Polynomial::var(nv, i).pow(2);
    }
    gens.push(ball);
    let ideal = IdealPresentation::new(nv, gens).map_err(|e| ProblemError::Input(e.to_string()))?;
    let mut objective = Polynomial::zero(nv);
    for (i, c) in point.iter().enumerate() {
        let d = &Polynomial::var(nv, i) - &Polynomial::constant(nv, c.clone());
        objective = &objective + &(&d * &d);
    }
    let mut h = vec![Polynomial::one(nv)];
    h.extend((0..nv).map(|i| Polynomial::var(nv, i)));
    let s = Rational::one() / (r2 + Rational::one());
    let mut spec = ProblemSpec::new(names, objective, ideal).with_spherical(h, s);
    spec.notes.push(
        "distance bounds assume the variety lies in the ball of the given radius; the caller must ensure this"
            .into(),
    );
    Ok(spec)
}

/// Distance bound from a bound on the squared distance.
pub fn distance_from_bound(bound: f64) -> f64 {
    bound.max(0.0).sqrt()
}

/// Dense order-3 tensor, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor3 {
    dims: [usize; 3],
    values: Vec<f64>,
}

impl Tensor3 {
    pub fn new(dims: [usize; 3], values: Vec<f64>) -> Result<Self, ProblemError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(ProblemError::Tensor("dimensions must be positive".into()));
        }
        if values.len() != dims.iter().product::<usize>() {
            return Err(ProblemError::Tensor(format!(
                "expected {} values, found {}",
                dims.iter().product::<usize>(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProblemError::Tensor("entries must be finite".into()));
        }
        Ok(Tensor3 { dims, values })
    }

    /// Sum of `r` rank-one tensors built from unit vectors with uniform
    /// `[-1, 1]` entries, scaled by `10 / r`.
    pub fn random_low_rank(dims: [usize; 3], r: usize, seed: u64) -> Self {
        assert!(r >= 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut unit = |d: usize| {
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.into_iter().map(|x| x / norm).collect::<Vec<_>>()
        };
        let mut values = vec![0.0; dims.iter().product()];
        let scale = 10.0 / r as f64;
        for _ in 0..r {
            let (u, v, w) = (unit(dims[0]), unit(dims[1]), unit(dims[2]));
            for i in 0..dims[0] {
                for j in 0..dims[1] {
                    for k in 0..dims[2] {
                        values[(i * dims[1] + j) * dims[2] + k] += scale * u[i] * v[j] * w[k];
                    }
                }
            }
        }
        Tensor3 { dims, values }
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dims[1] + j) * self.dims[2] + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// `max ⟨T, X⟩` over unit-norm rank-one tensors: the ideal is generated by
/// `‖X‖_F² − 1` and the 2×2 minors of the three matricizations; the spherical
/// system is `{X_ijk} ∪ {1}` with square-scale 1/2.
pub fn tensor_norm_spec(t: &Tensor3) -> Result<ProblemSpec, ProblemError> {
    let [n1, n2, n3] = t.dims();
    let nv = n1 * n2 * n3;
    let names: Vec<String> = (0..n1)
        .flat_map(|i| (0..n2).flat_map(move |j| (0..n3).map(move |k| format!("X_{}_{}_{}", i + 1, j + 1, k + 1))))
        .collect();
    let x = |idx: usize| Polynomial::var(nv, idx);

    let mut frob = -&Polynomial::one(nv);
    for v in 0..nv {
        frob = &frob + &x(v).pow(2);
    }
    let mut gens = vec![frob];
    let mut seen: HashSet<String> = HashSet::new();
    // matricization along each mode: rows index that mode, columns the rest
    for mode in 0..3 {
        let rows = t.dims()[mode];
        let cols = nv / rows;
        let entry = |r: usize, c: usize| {
            let (i, j, k) = match mode {
                0 => (r, c / n3, c % n3),
                1 => (c / n3, r, c % n3),
                _ => (c / n2, c % n2, r),
            };
            t.index(i, j, k)
        };
        for r1 in 0..rows {
            for r2 in r1 + 1..rows {
                for c1 in 0..cols {
                    for c2 in c1 + 1..cols {
                        let minor = &(&x(entry(r1, c1)) * &x(entry(r2, c2))) - &(&x(entry(r1, c2)) * &x(entry(r2, c1)));
                        if minor.is_zero() {
                            continue;
                        }
                        if seen.insert(minor.monic().to_string()) {
                            gens.push(minor);
                        }
                    }
                }
            }
        }
    }
    let ideal = IdealPresentation::new(nv, gens).map_err(|e| ProblemError::Input(e.to_string()))?;
    let mut terms = Vec::new();
    for (idx, &v) in t.values().iter().enumerate() {
        if v != 0.0 {
            terms.push((Monomial::var(nv, idx), exact(v)?));
        }
    }
    let objective = Polynomial::from_terms(nv, ideal.order, terms);
    let mut h: Vec<Polynomial> = (0..nv).map(x).collect();
    h.push(Polynomial::one(nv));
    Ok(ProblemSpec::new(names, objective, ideal)
        .with_sense(Sense::Maximize)
        .with_spherical(h, Rational::new(1.into(), 2.into())))
}
