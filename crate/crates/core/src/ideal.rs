//! Ideal presentations, Buchberger's algorithm and normal forms.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::polyring::{Monomial, MonomialOrder, Polynomial, Rational};

/// Default cap on the number of S-polynomial reductions Buchberger may perform.
pub const DEFAULT_REDUCTION_CAP: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IdealError {
    #[error("dimension mismatch: expected {expected} indeterminates, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("generator {0} is the zero polynomial")]
    ZeroGenerator(usize),
    #[error(
        "Gröbner basis computation exceeded {cap} pair reductions; supply a trusted basis instead"
    )]
    ResourceLimit { cap: usize },
    #[error("trusted basis is not a Gröbner basis: S-polynomial of elements {i} and {j} reduces to {residual}")]
    NotGroebner { i: usize, j: usize, residual: String },
}

/// Generators of an ideal together with how their Gröbner basis is obtained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdealPresentation {
    pub nvars: usize,
    pub generators: Vec<Polynomial>,
    /// The generators already form a Gröbner basis under `order`.
    pub trusted_groebner: bool,
    pub order: MonomialOrder,
}

impl IdealPresentation {
    pub fn new(nvars: usize, generators: Vec<Polynomial>) -> Result<Self, IdealError> {
        for (i, g) in generators.iter().enumerate() {
            if g.nvars() != nvars {
                return Err(IdealError::DimensionMismatch { expected: nvars, found: g.nvars() });
            }
            if g.is_zero() {
                return Err(IdealError::ZeroGenerator(i));
            }
        }
        Ok(IdealPresentation {
            nvars,
            generators,
            trusted_groebner: false,
            order: MonomialOrder::default(),
        })
    }

    pub fn trusted(mut self, trusted: bool) -> Self {
        self.trusted_groebner = trusted;
        self
    }

    pub fn with_order(mut self, order: MonomialOrder) -> Self {
        self.order = order;
        self
    }

    /// Hex SHA-256 digest of the canonical printed presentation.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(format!("nvars={};order={};", self.nvars, self.order.name()));
        for g in &self.generators {
            hasher.update(g.with_order(MonomialOrder::Grevlex).to_string());
            hasher.update(";");
        }
        hex::encode(hasher.finalize())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisSource {
    Computed,
    Trusted,
}

/// Options for obtaining a Gröbner basis.
#[derive(Debug, Clone, Copy)]
pub struct GroebnerOptions {
    pub reduction_cap: usize,
    /// Run the S-polynomial check on trusted bases.
    pub verify_trusted: bool,
}

impl Default for GroebnerOptions {
    fn default() -> Self {
        GroebnerOptions { reduction_cap: DEFAULT_REDUCTION_CAP, verify_trusted: true }
    }
}

type TermList = Arc<Vec<(Monomial, Rational)>>;

/// A reduced Gröbner basis with normal-form reduction.
///
/// Normal forms of monomials are memoized; the cache is internal and does
/// not affect results, so the context behaves as an immutable value.
#[derive(Debug)]
pub struct GroebnerContext {
    nvars: usize,
    order: MonomialOrder,
    basis: Vec<Polynomial>,
    source: BasisSource,
    digest: String,
    monomial_nf: RwLock<HashMap<Monomial, TermList>>,
}

impl Clone for GroebnerContext {
    fn clone(&self) -> Self {
        GroebnerContext {
            nvars: self.nvars,
            order: self.order,
            basis: self.basis.clone(),
            source: self.source,
            digest: self.digest.clone(),
            monomial_nf: RwLock::new(self.monomial_nf.read().unwrap().clone()),
        }
    }
}

impl GroebnerContext {
    /// Builds the context for a presentation: Buchberger for ordinary
    /// presentations, inter-reduction (and optional verification) for trusted ones.
    pub fn from_presentation(
        pres: &IdealPresentation,
        opts: GroebnerOptions,
    ) -> Result<Self, IdealError> {
        let gens: Vec<Polynomial> =
            pres.generators.iter().map(|g| g.with_order(pres.order)).collect();
        let (basis, source) = if pres.trusted_groebner {
            let reduced = reduce_basis(gens, pres.order);
            if opts.verify_trusted {
                verify_groebner(&reduced)?;
            }
            (reduced, BasisSource::Trusted)
        } else {
            (buchberger(pres.nvars, gens, pres.order, opts.reduction_cap)?, BasisSource::Computed)
        };
        Ok(GroebnerContext {
            nvars: pres.nvars,
            order: pres.order,
            basis,
            source,
            digest: pres.digest(),
            monomial_nf: RwLock::new(HashMap::new()),
        })
    }

    /// Rebuilds a context from a basis computed earlier for `pres`.
    pub fn from_parts(pres: &IdealPresentation, basis: Vec<Polynomial>, source: BasisSource) -> Self {
        GroebnerContext {
            nvars: pres.nvars,
            order: pres.order,
            basis,
            source,
            digest: pres.digest(),
            monomial_nf: RwLock::new(HashMap::new()),
        }
    }

    /// Computes a Gröbner basis with default options.
    pub fn new(pres: &IdealPresentation) -> Result<Self, IdealError> {
        Self::from_presentation(pres, GroebnerOptions::default())
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> MonomialOrder {
        self.order
    }

    pub fn basis(&self) -> &[Polynomial] {
        &self.basis
    }

    pub fn source(&self) -> BasisSource {
        self.source
    }

    /// Digest of the presentation this context was built from.
    pub fn presentation_digest(&self) -> &str {
        &self.digest
    }

    /// True when the ideal is the whole ring.
    pub fn is_unit_ideal(&self) -> bool {
        self.basis.iter().any(|g| g.is_constant())
    }

    fn divisor_of(&self, m: &Monomial) -> Option<&Polynomial> {
        self.basis.iter().find(|g| g.leading_monomial().map_or(false, |lm| lm.divides(m)))
    }

    /// True when no basis leading monomial divides `m`.
    pub fn is_standard(&self, m: &Monomial) -> bool {
        self.divisor_of(m).is_none()
    }

    fn monomial_normal_form(&self, m: &Monomial) -> TermList {
        if let Some(hit) = self.monomial_nf.read().unwrap().get(m) {
            return hit.clone();
        }
        let value: TermList = match self.divisor_of(m) {
            None => Arc::new(vec![(m.clone(), Rational::one())]),
            Some(g) => {
                // m = q * LM(g) and g is monic, so m ≡ -q * tail(g)
                let lm = g.leading_monomial().unwrap();
                let q = lm.quotient_of(m);
                let mut acc: HashMap<Monomial, Rational> = HashMap::new();
                for (t, c) in &g.terms()[1..] {
                    let sub = self.monomial_normal_form(&t.mul(&q));
                    for (s, d) in sub.iter() {
                        *acc.entry(s.clone()).or_insert_with(Rational::zero) -= c * d;
                    }
                }
                let p = Polynomial::from_terms(self.nvars, self.order, acc);
                Arc::new(p.terms().to_vec())
            }
        };
        self.monomial_nf.write().unwrap().insert(m.clone(), value.clone());
        value
    }

    pub fn normal_form(&self, f: &Polynomial) -> Result<Polynomial, IdealError> {
        if f.nvars() != self.nvars {
            return Err(IdealError::DimensionMismatch { expected: self.nvars, found: f.nvars() });
        }
        let mut acc: HashMap<Monomial, Rational> = HashMap::new();
        for (m, c) in f.terms() {
            for (s, d) in self.monomial_normal_form(m).iter() {
                *acc.entry(s.clone()).or_insert_with(Rational::zero) += c * d;
            }
        }
        Ok(Polynomial::from_terms(self.nvars, self.order, acc))
    }

    /// Normal form of a product without forming the full product first.
    pub fn normal_form_product(
        &self,
        a: &Polynomial,
        b: &Polynomial,
    ) -> Result<Polynomial, IdealError> {
        self.normal_form(&a.checked_mul(b).map_err(|_| IdealError::DimensionMismatch {
            expected: a.nvars(),
            found: b.nvars(),
        })?)
    }

    pub fn equivalent(&self, f: &Polynomial, g: &Polynomial) -> Result<bool, IdealError> {
        if g.nvars() != f.nvars() {
            return Err(IdealError::DimensionMismatch { expected: f.nvars(), found: g.nvars() });
        }
        Ok(self.normal_form(&(f - g))?.is_zero())
    }

    pub fn contains(&self, f: &Polynomial) -> Result<bool, IdealError> {
        Ok(self.normal_form(f)?.is_zero())
    }
}

// ---------------------------------------------------------------------------
// division

/// Accumulator for multivariate division keyed so that the largest term pops last.
struct Dividend {
    order: MonomialOrder,
    terms: BTreeMap<Vec<i64>, (Monomial, Rational)>,
}

impl Dividend {
    fn new(f: &Polynomial) -> Self {
        let order = f.order();
        let terms = f
            .terms()
            .iter()
            .map(|(m, c)| (order.sort_key(m), (m.clone(), c.clone())))
            .collect();
        Dividend { order, terms }
    }

    fn add(&mut self, m: Monomial, c: Rational) {
        let key = self.order.sort_key(&m);
        match self.terms.get_mut(&key) {
            Some(entry) => {
                entry.1 += c;
                if entry.1.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, (m, c));
            }
        }
    }

    fn pop_leading(&mut self) -> Option<(Monomial, Rational)> {
        self.terms.pop_last().map(|(_, t)| t)
    }
}

/// Fully reduces `f` by `divisors` (which need not form a Gröbner basis).
pub fn reduce(f: &Polynomial, divisors: &[&Polynomial]) -> Polynomial {
    let order = f.order();
    let mut work = Dividend::new(f);
    let mut rem = Vec::new();
    while let Some((m, c)) = work.pop_leading() {
        let hit = divisors
            .iter()
            .find(|g| g.leading_monomial().map_or(false, |lm| lm.divides(&m)));
        match hit {
            Some(g) => {
                let (lm, lc) = g.leading_term().unwrap();
                let q = lm.quotient_of(&m);
                let factor = &c / lc;
                for (t, a) in &g.terms()[1..] {
                    work.add(t.mul(&q), -(&factor * a));
                }
            }
            None => rem.push((m, c)),
        }
    }
    Polynomial::from_sorted_terms(f.nvars(), order, rem)
}

fn s_polynomial(f: &Polynomial, g: &Polynomial) -> Polynomial {
    let (mf, cf) = f.leading_term().unwrap();
    let (mg, cg) = g.leading_term().unwrap();
    let l = mf.lcm(mg);
    let a = f.mul_term(&mf.quotient_of(&l), &cf.recip());
    let b = g.mul_term(&mg.quotient_of(&l), &cg.recip());
    &a - &b
}

/// Minimalizes, tail-reduces and normalizes a generating set to a reduced basis.
fn reduce_basis(gens: Vec<Polynomial>, order: MonomialOrder) -> Vec<Polynomial> {
    let mut gens: Vec<Polynomial> =
        gens.into_iter().filter(|g| !g.is_zero()).map(|g| g.monic()).collect();
    // discard elements whose leading monomial is divisible by another's
    gens.sort_by(|a, b| order.cmp(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
    let mut minimal: Vec<Polynomial> = Vec::new();
    for g in gens {
        let lm = g.leading_monomial().unwrap();
        if !minimal.iter().any(|h| h.leading_monomial().unwrap().divides(lm)) {
            minimal.push(g);
        }
    }
    let mut out = Vec::with_capacity(minimal.len());
    for i in 0..minimal.len() {
        let others: Vec<&Polynomial> =
            minimal.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, g)| g).collect();
        out.push(reduce(&minimal[i], &others).monic());
    }
    out
}

/// Checks that every S-polynomial reduces to zero; coprime pairs are skipped.
pub fn verify_groebner(basis: &[Polynomial]) -> Result<(), IdealError> {
    let refs: Vec<&Polynomial> = basis.iter().collect();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let (a, b) = (&basis[i], &basis[j]);
            if a.leading_monomial().unwrap().is_coprime(b.leading_monomial().unwrap()) {
                continue;
            }
            let r = reduce(&s_polynomial(a, b), &refs);
            if !r.is_zero() {
                return Err(IdealError::NotGroebner { i, j, residual: r.to_string() });
            }
        }
    }
    Ok(())
}

#[derive(Clone)]
struct Pair {
    i: usize,
    j: usize,
    lcm: Monomial,
}

/// Buchberger's algorithm with normal selection and the Gebauer–Möller criteria.
pub fn buchberger(
    nvars: usize,
    generators: Vec<Polynomial>,
    order: MonomialOrder,
    reduction_cap: usize,
) -> Result<Vec<Polynomial>, IdealError> {
    let mut polys: Vec<Polynomial> = Vec::new();
    let mut active: Vec<usize> = Vec::new();
    let mut pairs: Vec<Pair> = Vec::new();

    let initial: Vec<Polynomial> =
        generators.into_iter().filter(|g| !g.is_zero()).map(|g| g.monic()).collect();
    if initial.iter().any(|g| g.is_constant()) {
        return Ok(vec![Polynomial::one(nvars).with_order(order)]);
    }
    for g in initial {
        polys.push(g);
        update(&polys, &mut active, &mut pairs, polys.len() - 1, order);
    }

    let mut reductions = 0usize;
    while !pairs.is_empty() {
        // normal selection: smallest lcm, ties broken by indices for determinism
        let pick = (0..pairs.len())
            .min_by(|&a, &b| {
                order
                    .cmp(&pairs[a].lcm, &pairs[b].lcm)
                    .then((pairs[a].i, pairs[a].j).cmp(&(pairs[b].i, pairs[b].j)))
            })
            .unwrap();
        let pair = pairs.swap_remove(pick);
        reductions += 1;
        if reductions > reduction_cap {
            return Err(IdealError::ResourceLimit { cap: reduction_cap });
        }
        let divisors: Vec<&Polynomial> = active.iter().map(|&k| &polys[k]).collect();
        let r = reduce(&s_polynomial(&polys[pair.i], &polys[pair.j]), &divisors);
        if r.is_zero() {
            continue;
        }
        if r.is_constant() {
            return Ok(vec![Polynomial::one(nvars).with_order(order)]);
        }
        polys.push(r.monic());
        update(&polys, &mut active, &mut pairs, polys.len() - 1, order);
    }

    let basis: Vec<Polynomial> = active.iter().map(|&k| polys[k].clone()).collect();
    let mut reduced = reduce_basis(basis, order);
    reduced.sort_by(|a, b| order.cmp(a.leading_monomial().unwrap(), b.leading_monomial().unwrap()));
    Ok(reduced)
}

// Gebauer–Möller installation of a new element `h` into the pair set.
fn update(
    polys: &[Polynomial],
    active: &mut Vec<usize>,
    pairs: &mut Vec<Pair>,
    h: usize,
    _order: MonomialOrder,
) {
    let lh = polys[h].leading_monomial().unwrap().clone();
    let lm = |k: usize| polys[k].leading_monomial().unwrap();

    let mut candidates: Vec<Pair> = active
        .iter()
        .map(|&g| Pair { i: g, j: h, lcm: lh.lcm(lm(g)) })
        .collect();
    let mut kept: Vec<Pair> = Vec::new();
    while let Some(p) = candidates.pop() {
        let coprime = lh.is_coprime(lm(p.i));
        let dominated = candidates.iter().chain(kept.iter()).any(|q| q.lcm.divides(&p.lcm));
        if coprime || !dominated {
            kept.push(p);
        }
    }
    // product criterion
    kept.retain(|p| !lh.is_coprime(lm(p.i)));

    // chain criterion on old pairs
    pairs.retain(|p| {
        !(lh.divides(&p.lcm)
            && lh.lcm(lm(p.i)) != p.lcm
            && lh.lcm(lm(p.j)) != p.lcm)
    });
    pairs.extend(kept);

    active.retain(|&g| !lh.divides(lm(g)));
    active.push(h);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::parse_with;

    fn ctx(gens: &[&str], names: &[&str]) -> GroebnerContext {
        let polys = gens.iter().map(|g| parse_with(g, names).unwrap()).collect();
        GroebnerContext::new(&IdealPresentation::new(names.len(), polys).unwrap()).unwrap()
    }

    #[test]
    fn hypercube_generators_are_already_a_basis() {
        let names = ["x1", "x2", "x3"];
        let c = ctx(&["x1^2 - 1", "x2^2 - 1", "x3^2 - 1"], &names);
        assert_eq!(c.basis().len(), 3);
        let nf = c.normal_form(&parse_with("x1^2*x2 + x2", &names).unwrap()).unwrap();
        assert_eq!(nf, parse_with("2*x2", &names).unwrap());
        let one = c.normal_form(&parse_with("x1^2", &names).unwrap()).unwrap();
        assert_eq!(one, Polynomial::one(3));
    }

    #[test]
    fn principal_monomial_ideal() {
        let c = ctx(&["x1"], &["x1", "x2"]);
        assert_eq!(c.basis(), &[parse_with("x1", &["x1", "x2"]).unwrap()]);
    }

    #[test]
    fn twisted_cubic_basis() {
        let names = ["x", "y", "z"];
        let c = ctx(&["x^2 - y", "x^3 - z"], &names);
        verify_groebner(c.basis()).unwrap();
        assert!(c.contains(&parse_with("x*y - z", &names).unwrap()).unwrap());
        assert!(c.contains(&parse_with("y^3 - z^2", &names).unwrap()).unwrap());
    }

    #[test]
    fn inconsistent_ideal_gives_unit() {
        let c = ctx(&["x - 1", "x - 2"], &["x"]);
        assert!(c.is_unit_ideal());
    }

    #[test]
    fn resource_cap_is_an_error() {
        let names = ["x", "y", "z"];
        let polys = ["x^2 - y", "x^3 - z"]
            .iter()
            .map(|g| parse_with(g, &names).unwrap())
            .collect();
        let pres = IdealPresentation::new(3, polys).unwrap();
        let opts = GroebnerOptions { reduction_cap: 0, verify_trusted: true };
        assert_eq!(
            GroebnerContext::from_presentation(&pres, opts).unwrap_err(),
            IdealError::ResourceLimit { cap: 0 }
        );
    }

    #[test]
    fn trusted_basis_is_verified() {
        let names = ["x", "y"];
        let gens = vec![parse_with("x^2 - y", &names).unwrap(), parse_with("x*y - 1", &names).unwrap()];
        let pres = IdealPresentation::new(2, gens).unwrap().trusted(true);
        assert!(matches!(GroebnerContext::new(&pres), Err(IdealError::NotGroebner { .. })));
    }
}
