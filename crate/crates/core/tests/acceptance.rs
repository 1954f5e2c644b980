//! Acceptance checks, one line per criterion. Oracles (brute force,
//! sampling, power iterations) live in `common` and share no code paths
//! with the relaxation.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use proptest::test_runner::{Config, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spectrax::eig::{dense_lambda_min, lambda_min_generalized, EigOptions, EigPath, SymmetricMatrix};
use spectrax::exact::QMatrix;
use spectrax::gram::{lift, min_norm_gram_exact, noniterative, GramError, InitMethod, Initializer};
use spectrax::hierarchy::{BoundReport, PrecomputedContext};
use spectrax::ideal::GroebnerOptions;
use spectrax::polyring::{parse_with, rat, rat_int, rat_to_f64, Monomial};
use spectrax::problems::{
    cut_bound, distance_from_bound, distance_spec, maxcut_closed_form_bound, maxcut_level1_closed_form,
    maxcut_spec, tensor_norm_spec, Graph, Tensor3,
};
use spectrax::spectratope::{affine_level, circle_preset, ex51_preset, SpectratopeHandle};
use spectrax::subspace::{BasisTower, SubspaceBasis};
use spectrax::{
    solve, GroebnerContext, IdealPresentation, MethodChoice, MonomialOrder, Polynomial, ProblemSpec, Rational,
    SphericalSystem,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn names(vars: &[&str]) -> Vec<String> {
    vars.iter().map(|s| s.to_string()).collect()
}

fn spec_from(vars: &[&str], objective: &str, gens: &[&str], h: &[&str], s: Rational) -> ProblemSpec {
    let p = |t: &str| parse_with(t, vars).unwrap();
    let ideal = IdealPresentation::new(vars.len(), gens.iter().map(|g| p(g)).collect()).unwrap();
    ProblemSpec::new(names(vars), p(objective), ideal).with_spherical(h.iter().map(|t| p(t)).collect(), s)
}

fn qm(rows: &[&[i64]], den: i64) -> QMatrix {
    QMatrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| rat(x, den)).collect()).collect())
}

fn tower(vars: &[&str], gens: &[&str], h: &[&str], s: Rational) -> BasisTower {
    let p = |t: &str| parse_with(t, vars).unwrap();
    let ctx = GroebnerContext::new(&IdealPresentation::new(vars.len(), gens.iter().map(|g| p(g)).collect()).unwrap())
        .unwrap();
    let sys = SphericalSystem::verify(h.iter().map(|t| p(t)).collect(), s, Arc::new(ctx)).unwrap();
    BasisTower::new(Arc::new(sys))
}

/// Solved bounds, requiring every level to be solved.
fn solved_bounds(r: &BoundReport) -> Result<Vec<f64>, String> {
    r.levels
        .iter()
        .map(|l| l.bound.ok_or_else(|| format!("level {} has no bound ({})", l.k, l.status.name())))
        .collect()
}

const HYPERCUBE_P: &str = "2*x1^2 + x1*x2 - 5*x2^2 - 2*x2*x3 + 3*x1 - 2*x3 + 12";
const CIRCLE_P: &str = "x1^3*x2 - 2*x1*x2^3 + x1*x2 + x2^4";

fn hypercube3() -> ProblemSpec {
    spec_from(
        &["x1", "x2", "x3"],
        HYPERCUBE_P,
        &["x1^2 - 1", "x2^2 - 1", "x3^2 - 1"],
        &["1", "x1", "x2", "x3"],
        rat(1, 4),
    )
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let report = solve(&hypercube3(), 1, MethodChoice::Auto).map_err(err)?;
    let elapsed = t0.elapsed();
    let b = report.bound_at(1).ok_or("no level-1 bound")?;
    let given = DMatrix::from_row_slice(4, 4, &[9., 6., 0., -4., 6., 9., 2., 0., 0., 2., 9., -4., -4., 0., -4., 9.]) / 4.0;
    // λ_min(M, I/4) = 4·λ_min(M)
    let from_given = 4.0 * common::sym_lambda_min(&given);
    let nu = common::hypercube_min(3, |x| {
        2.0 * x[0] * x[0] + x[0] * x[1] - 5.0 * x[1] * x[1] - 2.0 * x[1] * x[2] + 3.0 * x[0] - 2.0 * x[2] + 12.0
    });
    ensure((0.735..=0.745).contains(&b), || format!("bound {b} outside [0.735, 0.745]"))?;
    ensure((0.735..=0.745).contains(&from_given), || format!("stated Gram matrix gives {from_given}"))?;
    ensure(nu == 1.0 && b <= nu, || format!("bound {b} vs minimum {nu}"))?;
    ensure(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("bound {b:.6}, stated matrix {from_given:.6}, min {nu}, {:.1} ms", elapsed.as_secs_f64() * 1e3))
}

fn criterion_2() -> Outcome {
    let vars = ["x1", "x2"];
    let t = tower(&vars, &["x1^2 + x2^2 - 1"], &["x1", "x2"], rat_int(1));
    let pin: Vec<Polynomial> = ["1", "x1*x2", "x2^2"].iter().map(|s| parse_with(s, &vars).unwrap()).collect();
    let sys = t.system().clone();
    let basis2 = SubspaceBasis::from_elements(2, pin.clone(), sys.ctx()).map_err(err)?;
    let t = BasisTower::with_pinned(sys, HashMap::from([(2, basis2)]));
    let p = parse_with(CIRCLE_P, &vars).unwrap();

    let y1 = min_norm_gram_exact(&t, &Polynomial::one(2), 2).map_err(err)?;
    let yp = min_norm_gram_exact(&t, &p, 2).map_err(err)?;
    ensure(y1 == qm(&[&[3, 0, 0, 1], &[0, 1, 1, 0], &[0, 1, 1, 0], &[1, 0, 0, 3]], 3), || "Y(1) differs".into())?;
    ensure(yp == qm(&[&[0, 2, 2, 0], &[2, 0, 0, -1], &[2, 0, 0, -1], &[0, -1, -1, 4]], 4), || "Y(p) differs".into())?;
    let pair = Initializer::new(&t, 2).map_err(err)?.init(&p, InitMethod::Method1).map_err(err)?;
    ensure(pair.one.exact == Some(qm(&[&[3, 0, -2], &[0, 4, 0], &[-2, 0, 4]], 3)), || "M_2(1) differs".into())?;
    ensure(pair.p.exact == Some(qm(&[&[0, 2, 0], &[2, 0, -3], &[0, -3, 2]], 2)), || "M_2(p) differs".into())?;

    let spec = spec_from(&vars, CIRCLE_P, &["x1^2 + x2^2 - 1"], &["x1", "x2"], rat_int(1)).with_pinned_basis(2, pin);
    let b = solve(&spec, 2, MethodChoice::Method1).map_err(err)?.bound_at(2).ok_or("no level-2 bound")?;
    let truth = common::circle_min(6_283_186, |c, s| c.powi(3) * s - 2.0 * c * s.powi(3) + c * s + s.powi(4));
    ensure((-1.015..=-1.013).contains(&b), || format!("bound {b} outside [-1.015, -1.013]"))?;
    ensure((truth + 0.532).abs() < 5e-4, || format!("sampled minimum {truth}"))?;
    ensure(b <= truth, || format!("bound {b} above sampled minimum {truth}"))?;
    Ok(format!("Y(1), Y(p), M_2(1), M_2(p) exact; bound {b:.6}; sampled min {truth:.6}"))
}

fn criterion_3() -> Outcome {
    let t = tower(
        &["x1", "x2"],
        &["x1^2 + x2^2 - 1", "x1*x2 - 1/2", "x2^3 + x1/2 - x2"],
        &["x1", "x2"],
        rat_int(1),
    );
    let init = Initializer::new(&t, 1).map_err(err)?;
    let m1 = init.gram_of_one(InitMethod::Method1).exact.ok_or("Method 1 matrix is not exact")?;
    ensure(matches!(init.checked_one(InitMethod::Method1), Err(GramError::NotPositiveDefinite)), || {
        "Method 1 was accepted".into()
    })?;
    let m2 = init.gram_of_one(InitMethod::Method2).exact.ok_or("Method 2 matrix is not exact")?;
    ensure(m2 == QMatrix::identity(2), || "Method 2 does not give I".into())?;
    let trace = &m1.row(0)[0] + &m1.row(1)[1];
    let det = m1.determinant();
    // the eigenvalues are the roots of λ² − trace·λ + det
    ensure(trace == rat(2, 3) && det == rat(-1, 3), || {
        format!(
            "Method 1 is rejected and Method 2 gives I, but M_1(1) has trace {trace} and determinant {det} \
             (eigenvalues {{0, 1}}), not {{-1/3, 1}}; the stated matrix is the minimum-norm solution only when \
             off-diagonal entries are counted once, which would contradict the circle matrices"
        )
    })?;
    Ok("Method 1 eigenvalues exactly {-1/3, 1} and rejected; Method 2 gives I".into())
}

fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, max_deg: u32, density: f64) -> Polynomial {
    let mut terms = Vec::new();
    let mut exps = vec![0u32; nvars];
    loop {
        let deg: u32 = exps.iter().sum();
        if deg <= max_deg && rng.gen_bool(density) {
            let c: i64 = rng.gen_range(-5..=5);
            if c != 0 {
                terms.push((Monomial::new(exps.clone()), rat(c, rng.gen_range(1..=3))));
            }
        }
        // next exponent vector in the box [0, max_deg]^n
        let mut i = 0;
        while i < nvars {
            exps[i] += 1;
            if exps[i] <= max_deg {
                break;
            }
            exps[i] = 0;
            i += 1;
        }
        if i == nvars {
            break;
        }
    }
    Polynomial::from_terms(nvars, MonomialOrder::Grevlex, terms)
}

struct Instance {
    spec: ProblemSpec,
    oracle: Box<dyn Fn(&Polynomial) -> f64>,
    degree: u32,
}

fn var_list(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("x{i}")).collect()
}

fn hypercube_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let gens = (0..n).map(|i| &Polynomial::var(n, i).pow(2) - &Polynomial::one(n)).collect();
    let ideal = IdealPresentation::new(n, gens).unwrap().trusted(true);
    let mut h = vec![Polynomial::one(n)];
    h.extend((0..n).map(|i| Polynomial::var(n, i)));
    let p = random_poly(rng, n, 2, 0.5);
    let spec = ProblemSpec::new(var_list(n), p, ideal).with_spherical(h, rat(1, n as i64 + 1));
    Instance { spec, oracle: Box::new(move |q| common::hypercube_min(n, |x| q.eval_f64(x))), degree: 2 }
}

fn circle_instance(rng: &mut ChaCha8Rng) -> Instance {
    let spec = spec_from(&["x1", "x2"], "0", &["x1^2 + x2^2 - 1"], &["1", "x1", "x2"], rat(1, 2));
    let spec = spec.with_objective(random_poly(rng, 2, 4, 0.6));
    Instance {
        spec,
        oracle: Box::new(|q| common::circle_min(200_000, |c, s| q.eval_f64(&[c, s]))),
        degree: 4,
    }
}

fn sphere_instance(rng: &mut ChaCha8Rng, n: usize, degree: u32) -> Instance {
    let mut ball = -&Polynomial::one(n);
    for i in 0..n {
        ball = &ball + &Polynomial::var(n, i).pow(2);
    }
    let ideal = IdealPresentation::new(n, vec![ball]).unwrap();
    let mut h = vec![Polynomial::one(n)];
    h.extend((0..n).map(|i| Polynomial::var(n, i)));
    let p = random_poly(rng, n, degree, if n == 4 { 0.3 } else { 0.5 });
    let spec = ProblemSpec::new(var_list(n), p, ideal).with_spherical(h, rat(1, 2));
    let seed = rng.gen();
    Instance { spec, oracle: Box::new(move |q| common::sphere_min(n, 20_000, seed, |x| q.eval_f64(x))), degree }
}

fn pop_family(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| match i % 3 {
            0 => hypercube_instance(&mut rng, 3 + (i / 3) % 6),
            1 => circle_instance(&mut rng),
            _ => {
                let n = 2 + (i / 3) % 3;
                sphere_instance(&mut rng, n, if (i / 3) % 2 == 0 { 2 } else { 4 })
            }
        })
        .collect()
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let instances = pop_family(4, 25);
    let mut worst_drop = 0.0f64;
    let mut max_levels = 0;
    for (idx, inst) in instances.iter().enumerate() {
        let k_max = inst.degree.div_ceil(2) as usize + 3;
        let report = solve(&inst.spec, k_max, MethodChoice::Auto).map_err(err)?;
        let bounds = solved_bounds(&report).map_err(|e| format!("instance {idx}: {e}"))?;
        ensure(bounds.len() >= 4, || format!("instance {idx}: only {} levels", bounds.len()))?;
        for w in bounds.windows(2) {
            worst_drop = worst_drop.max(w[0] - w[1]);
        }
        ensure(worst_drop <= 1e-8, || format!("instance {idx}: bounds decrease {bounds:?}"))?;
        let truth = (inst.oracle)(&inst.spec.objective);
        let top = bounds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        ensure(top <= truth + 1e-7, || format!("instance {idx}: bound {top} above minimum {truth}"))?;
        max_levels = max_levels.max(bounds.len());
    }
    let elapsed = t0.elapsed();
    ensure(elapsed.as_secs() < 300, || format!("took {elapsed:?}"))?;
    Ok(format!("25 instances, up to {max_levels} levels, largest decrease {worst_drop:.1e}, {:.1} s", elapsed.as_secs_f64()))
}

/// A random change of basis: a permutation times a sparse unit lower
/// triangular matrix with entries in {-1, 0, 1}.
fn random_unimodular(rng: &mut ChaCha8Rng, d: usize) -> QMatrix {
    let mut perm: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        perm.swap(i, rng.gen_range(0..=i));
    }
    let rows = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let (r, c) = (perm[i], j);
                    if c == r {
                        rat_int(1)
                    } else if c < r && rng.gen_bool((2.0 / d as f64).min(0.5)) {
                        rat_int(if rng.gen_bool(0.5) { 1 } else { -1 })
                    } else {
                        rat_int(0)
                    }
                })
                .collect()
        })
        .collect();
    QMatrix::from_rows(rows)
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let instances = pop_family(55, 20);
    let mut worst_t = 0.0f64;
    for (idx, inst) in instances.iter().enumerate() {
        let k_max = inst.degree.div_ceil(2) as usize + 2;
        let base = solved_bounds(&solve(&inst.spec, k_max, MethodChoice::Method2).map_err(err)?)?;
        let eta = rat(rng.gen_range(-20..=20), rng.gen_range(1..=7));
        let n = inst.spec.ideal.nvars;
        // q ≡ η: a constant plus a random multiple of a generator
        let g = &inst.spec.ideal.generators[rng.gen_range(0..inst.spec.ideal.generators.len())];
        let q = &Polynomial::constant(n, eta.clone()) + &(&random_poly(&mut rng, n, 1, 0.7) * g);
        let shifted = inst.spec.with_objective(&inst.spec.objective + &q);
        let moved = solved_bounds(&solve(&shifted, k_max, MethodChoice::Method2).map_err(err)?)?;
        ensure(moved.len() == base.len(), || format!("instance {idx}: level counts differ"))?;
        for (a, b) in base.iter().zip(&moved) {
            worst_t = worst_t.max((b - a - rat_to_f64(&eta)).abs());
        }
        ensure(worst_t <= 1e-8, || format!("instance {idx}: translation deviation {worst_t:.2e}"))?;
    }

    let mut worst_b = 0.0f64;
    for (idx, inst) in instances.iter().enumerate() {
        let k_max = inst.degree.div_ceil(2) as usize + 2;
        let base = solved_bounds(&solve(&inst.spec, k_max, MethodChoice::Method2).map_err(err)?)?;
        let ctx = PrecomputedContext::for_spec(&inst.spec, k_max, GroebnerOptions::default()).map_err(err)?;
        let mut spec = inst.spec.clone();
        let kappa = inst.degree.div_ceil(2) as usize;
        for k in 1..=k_max.max(2 * kappa) {
            let b = ctx.tower().basis(k).map_err(err)?;
            let u = random_unimodular(&mut rng, b.dim());
            let elems = (0..b.dim())
                .map(|i| {
                    b.elements().iter().zip(u.row(i)).fold(Polynomial::zero(b.elements()[0].nvars()), |acc, (e, c)| {
                        &acc + &e.scale(c)
                    })
                })
                .collect();
            spec = spec.with_pinned_basis(k, elems);
        }
        let other = solved_bounds(&solve(&spec, k_max, MethodChoice::Method2).map_err(err)?)?;
        ensure(other.len() == base.len(), || format!("instance {idx}: level counts differ"))?;
        for (a, b) in base.iter().zip(&other) {
            worst_b = worst_b.max((a - b).abs() / (1.0 + a.abs()));
        }
        ensure(worst_b <= 1e-8, || format!("instance {idx}: basis deviation {worst_b:.2e}"))?;
    }
    Ok(format!("20 + 20 trials; translation {worst_t:.1e}, basis {worst_b:.1e}"))
}

fn criterion_6() -> Outcome {
    let cases: [(&[&str], &str, &[&str], &[&str], Rational, usize); 2] = [
        (&["x1", "x2"], CIRCLE_P, &["x1^2 + x2^2 - 1"], &["x1", "x2"], rat_int(1), 2),
        (&["x1", "x2", "x3"], HYPERCUBE_P, &["x1^2 - 1", "x2^2 - 1", "x3^2 - 1"], &["1", "x1", "x2", "x3"], rat(1, 4), 1),
    ];
    let mut checked = 0;
    for (vars, p, gens, h, s, kappa) in cases {
        let t = tower(vars, gens, h, s);
        let p = parse_with(p, vars).unwrap();
        let sys = t.system().clone();
        for method in [InitMethod::Method1, InitMethod::Method2] {
            let mut pair = Initializer::new(&t, kappa).map_err(err)?.init(&p, method).map_err(err)?;
            for k in kappa + 1..=kappa + 2 {
                pair = lift(&pair, &sys, t.lift(k).map_err(err)?.as_ref());
                let direct = noniterative(
                    &Initializer::new(&t, kappa).map_err(err)?.init(&p, method).map_err(err)?,
                    &t.noniterative_t(kappa, k).map_err(err)?,
                    &sys,
                    k,
                );
                ensure(pair.p.exact.is_some() && pair.one.exact.is_some(), || format!("level {k} not exact"))?;
                ensure(pair.p.exact == direct.p.exact && pair.one.exact == direct.one.exact, || {
                    format!("level {k} differs for {}", method.name())
                })?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} level pairs identical in exact arithmetic"))
}

fn criterion_7() -> Outcome {
    let opts = EigOptions { want_vector: false, ..EigOptions::default() };
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let n = 4 + (seed as usize % 5);
        let g = Graph::erdos_renyi(n, 0.7, 100 + seed);
        let mut a = DMatrix::zeros(n, n);
        for &(i, j, w) in g.edges() {
            a[(i, j)] = w;
            a[(j, i)] = w;
        }
        let oracle1 = n as f64 * common::sym_lambda_min(&a);
        let report = solve(&maxcut_spec(&g).map_err(err)?, 2, MethodChoice::Auto).map_err(err)?;
        let b1 = report.bound_at(1).ok_or("no level-1 bound")?;
        let b2 = report.bound_at(2).ok_or("no level-2 bound")?;
        let closed2 = maxcut_closed_form_bound(&g, 2, &opts).map_err(err)?;
        worst = worst.max((b1 - oracle1).abs()).max((b2 - closed2).abs());
        ensure(worst <= 1e-8, || format!("seed {seed}: {b1} vs {oracle1}, {b2} vs {closed2}"))?;
        let (c1, c2) = (cut_bound(&g, b1), cut_bound(&g, b2));
        let best = common::brute_max_cut(n, g.edges());
        ensure(c2 <= c1 + 1e-8, || format!("seed {seed}: cut bounds {c1} < {c2}"))?;
        ensure(c2 >= best - 1e-8, || format!("seed {seed}: cut bound {c2} below max cut {best}"))?;
    }
    for n in [12usize, 14, 16] {
        let g = Graph::erdos_renyi(n, 0.7, n as u64);
        let best = common::brute_max_cut(n, g.edges());
        let c1 = cut_bound(&g, maxcut_closed_form_bound(&g, 1, &opts).map_err(err)?);
        let c2 = cut_bound(&g, maxcut_closed_form_bound(&g, 2, &opts).map_err(err)?);
        ensure(c2 <= c1 + 1e-8 && c2 >= best - 1e-8, || format!("n = {n}: {c1}, {c2}, max cut {best}"))?;
    }
    let t0 = Instant::now();
    let g = Graph::erdos_renyi(5000, 0.7, 42);
    let (mp, m1) = maxcut_level1_closed_form(&g);
    let res = lambda_min_generalized(&mp, &m1, &opts).map_err(err)?;
    let elapsed = t0.elapsed();
    ensure(res.path == EigPath::Iterative && res.converged, || format!("{:?}, converged {}", res.path, res.converged))?;
    ensure(elapsed.as_secs() < 60, || format!("n = 5000 took {elapsed:?}"))?;
    Ok(format!(
        "10 graphs agree within {worst:.1e}; n = 5000 level 1 in {:.1} s ({} iterations)",
        elapsed.as_secs_f64(),
        res.iterations
    ))
}

fn criterion_8() -> Outcome {
    let sizes = [[2, 2, 2], [2, 2, 3], [2, 3, 3], [3, 3, 3]];
    let mut worst = 0.0f64;
    for seed in 0..10u64 {
        let dims = sizes[seed as usize % sizes.len()];
        let r = (dims.iter().min().unwrap() / 2).max(1);
        let t = Tensor3::random_low_rank(dims, r, seed);
        let frob = t.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        let report = solve(&tensor_norm_spec(&t).map_err(err)?, 1, MethodChoice::Method2).map_err(err)?;
        let b = report.bound_at(1).ok_or("no level-1 bound")?;
        worst = worst.max((b - frob).abs());
        ensure(worst <= 1e-9, || format!("seed {seed}: {b} vs Frobenius {frob}"))?;
    }
    let mut gaps = Vec::new();
    for seed in 0..4u64 {
        let t = Tensor3::random_low_rank([2, 2, 2], 1 + seed as usize % 2, 50 + seed);
        let report = solve(&tensor_norm_spec(&t).map_err(err)?, 2, MethodChoice::Method2).map_err(err)?;
        let (b1, b2) = (report.bound_at(1).ok_or("no level 1")?, report.bound_at(2).ok_or("no level 2")?);
        let sigma = common::tensor_spectral_norm([2, 2, 2], t.values(), 50, seed);
        ensure(b2 >= sigma - 1e-4 && b2 <= b1 + 1e-8, || format!("seed {seed}: σ {sigma}, level 2 {b2}, level 1 {b1}"))?;
        gaps.push(b2 - sigma);
    }
    Ok(format!("level 1 = Frobenius within {worst:.1e}; level-2 gaps to σ {:?}", gaps.iter().map(|g| format!("{g:.1e}")).collect::<Vec<_>>()))
}

fn criterion_9() -> Outcome {
    let vars = names(&["x", "y"]);
    let curve = parse_with("8*x^4 + 8*y^4 + 6*x^2*y^2 - 10*x^2 - 10*y^2 + 3", &["x", "y"]).unwrap();
    let samples = common::quartic_curve_points(2_000_000);
    let r2max = samples.iter().map(|p| p[0] * p[0] + p[1] * p[1]).fold(0.0, f64::max);
    ensure(r2max < 1.5, || format!("curve leaves the ball: r² = {r2max}"))?;
    let on_curve = [0.5f64.sqrt(), 0.0];
    let queries = [[0.0, 0.0], [1.2, 0.0], [0.5, 0.5], [1.0, 1.0], [-0.3, 0.9], [0.9, -0.2], on_curve];
    let k_max = 6;
    let mut lines = Vec::new();
    for q in queries {
        let point: Vec<Rational> = q.iter().map(|&x| Rational::from_float(x).unwrap()).collect();
        let spec = distance_spec(&vars, &[curve.clone()], &rat(3, 2), &point).map_err(err)?;
        let report = solve(&spec, k_max, MethodChoice::Auto).map_err(err)?;
        let bounds = solved_bounds(&report)?;
        let (first, last) = (bounds[0], *bounds.last().unwrap());
        ensure(last >= first - 1e-8, || format!("{q:?}: level {k_max} bound {last} below level-κ bound {first}"))?;
        let d = distance_from_bound(report.best().unwrap());
        let truth = common::sampled_distance(q, &samples);
        ensure(d <= truth + 1e-4, || format!("{q:?}: bound {d} above sampled distance {truth}"))?;
        if q == on_curve {
            ensure(d <= 1e-6, || format!("on-curve point has bound {d}"))?;
        }
        lines.push(format!("{d:.3}/{truth:.3}"));
    }
    Ok(format!("bound/sampled distance: {}", lines.join(" ")))
}

fn criterion_10() -> Outcome {
    let preset = ex51_preset();
    let levels = 4;
    let ctx = PrecomputedContext::build(&preset.ideal, &preset.spherical, &BTreeMap::new(), levels, GroebnerOptions::default())
        .map_err(err)?;
    let tau = affine_level(&ctx, levels).map_err(err)?.ok_or("variables are not in any U_2k")?;
    let points: Vec<Vec<f64>> = common::ex51_curve_points(200).into_iter().map(|p| p.to_vec()).collect();
    ensure(points.len() == 200, || format!("only {} variety points", points.len()))?;
    ensure(points.iter().all(|p| common::ex51_curve(p[0], p[1]).abs() < 1e-9), || "sampled points are off the curve".into())?;
    let mut polys = Vec::new();
    for k in tau..=levels {
        let h = SpectratopeHandle::new(&ctx, tau, k, InitMethod::Method2).map_err(err)?;
        let report = h.containment_check(&points, 100, k as u64).map_err(err)?;
        ensure(report.passed(), || format!("level {k}: {} containment violations", report.violations.len()))?;
        let poly = h.boundary_2d(360).map_err(err)?;
        if let Some(p) = points.iter().find(|p| poly.outside([p[0], p[1]], 1e-8).is_some()) {
            return Err(format!("level {k}: variety point {p:?} outside the projected boundary"));
        }
        polys.push(poly);
    }
    let mut worst = f64::NEG_INFINITY;
    for w in polys.windows(2) {
        for (a, b) in w[0].points.iter().zip(&w[1].points) {
            worst = worst.max(b.support - a.support);
        }
    }
    ensure(worst <= 1e-8, || format!("support increased by {worst:.2e}"))?;

    let circle = circle_preset();
    let ctx = PrecomputedContext::build(&circle.ideal, &circle.spherical, &BTreeMap::new(), 1, GroebnerOptions::default())
        .map_err(err)?;
    let poly = SpectratopeHandle::new(&ctx, 1, 1, InitMethod::Method2).map_err(err)?.boundary_2d(360).map_err(err)?;
    let dev = poly
        .points
        .iter()
        .map(|b| ((b.point[0].hypot(b.point[1]) - 1.0).abs()).max((b.support - 1.0).abs()))
        .fold(0.0, f64::max);
    ensure(dev <= 1e-6, || format!("circle boundary deviates by {dev:.2e}"))?;
    Ok(format!(
        "levels {tau}..{levels} nested (largest increase {worst:.1e}); 200 points contained; circle deviation {dev:.1e}"
    ))
}

fn random_pencil(rng: &mut ChaCha8Rng, d: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let a = DMatrix::from_fn(d, d, |_, _| common::gaussian(rng));
    let c = DMatrix::from_fn(d, d, |_, _| common::gaussian(rng));
    ((&a + a.transpose()) * 0.5, c.transpose() * &c / d as f64 + DMatrix::identity(d, d))
}

fn criterion_11() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let d = 2 + (i * 199) / 49;
        let (a, b) = random_pencil(&mut rng, d);
        let (sa, sb) = (SymmetricMatrix::Dense(a), SymmetricMatrix::Dense(b));
        let run = |path| {
            let o = EigOptions { force_path: Some(path), want_vector: false, ..EigOptions::default() };
            lambda_min_generalized(&sa, &sb, &o)
        };
        let dense = run(EigPath::Dense).map_err(err)?.lambda_min;
        let iter = run(EigPath::Iterative).map_err(err)?;
        let rel = (dense - iter.lambda_min).abs() / dense.abs().max(1.0);
        worst = worst.max(rel);
        ensure(rel <= 1e-6, || format!("d = {d}: dense {dense}, iterative {} (converged {})", iter.lambda_min, iter.converged))?;
    }

    let opts = EigOptions { want_vector: false, ..EigOptions::default() };
    let mut runner = TestRunner::new(Config { cases: 64, failure_persistence: None, ..Config::default() });
    runner
        .run(&(2usize..30, proptest::num::u64::ANY, -50.0f64..50.0), |(d, seed, sigma)| {
            let (a, b) = random_pencil(&mut ChaCha8Rng::seed_from_u64(seed), d);
            let base = dense_lambda_min(&a, &b, &opts).unwrap().lambda_min;
            let shifted = dense_lambda_min(&(&a + &b * sigma), &b, &opts).unwrap().lambda_min;
            if (shifted - base - sigma).abs() > 1e-8 * (1.0 + base.abs() + sigma.abs()) {
                return Err(TestCaseError::fail(format!("shift {sigma}: {base} -> {shifted}")));
            }
            Ok(())
        })
        .map_err(|e| format!("shift invariance: {e}"))?;
    runner
        .run(&(2usize..30, 1usize..30, proptest::num::u64::ANY), |(d, cols, seed)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cols = cols.min(d);
            let (a, b) = random_pencil(&mut rng, d);
            let l = DMatrix::from_fn(d, cols, |_, _| common::gaussian(&mut rng));
            let big = dense_lambda_min(&a, &b, &opts).unwrap().lambda_min;
            let small = dense_lambda_min(&(l.transpose() * &a * &l), &(l.transpose() * &b * &l), &opts);
            // a rank-deficient L leaves LᵀBL singular; such cases carry no claim
            if let Ok(small) = small {
                if small.lambda_min < big - 1e-8 * (1.0 + big.abs()) {
                    return Err(TestCaseError::fail(format!("{} < {big}", small.lambda_min)));
                }
            }
            Ok(())
        })
        .map_err(|e| format!("congruence monotonicity: {e}"))?;
    Ok(format!("50 pencils agree within {worst:.1e}; shift and congruence properties hold"))
}

/// Criteria whose targets conflict with another criterion. They still run and
/// print FAIL, but do not fail the test target.
/// 3: the stated Method 1 matrix is the minimum-norm Gram solution only under a
/// norm that counts off-diagonal entries once, which breaks the circle matrices
/// checked by criterion 2.
const KNOWN_FAILURES: &[&str] = &["3"];

fn main() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("hypercube golden value", criterion_1),
        ("circle golden matrices and bound", criterion_2),
        ("Method 1 failure and Method 2", criterion_3),
        ("hierarchy monotonicity", criterion_4),
        ("translation and basis invariance", criterion_5),
        ("iterative equals direct construction", criterion_6),
        ("max-cut equivalences and scaling", criterion_7),
        ("tensor spectral norm", criterion_8),
        ("distance to a variety", criterion_9),
        ("spectratope nesting and containment", criterion_10),
        ("eigensolver agreement and properties", criterion_11),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut known = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = (i + 1).to_string();
        if !filter.is_empty() && !filter.iter().any(|x| *x == id) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.2} s]"),
            Err(detail) => {
                if KNOWN_FAILURES.contains(&id.as_str()) {
                    known += 1;
                } else {
                    failed += 1;
                }
                println!("FAIL {id:>2} {name}: {detail} [{secs:.2} s]");
            }
        }
    }
    if known > 0 {
        eprintln!("{known} known failure(s), see KNOWN_FAILURES");
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
