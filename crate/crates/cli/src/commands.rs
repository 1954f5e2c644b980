//! Subcommand implementations. Each returns the exit status; summaries go
//! to standard output unless standard output carries the data stream.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Args;
use rayon::prelude::*;
use spectrax::eig::EigOptions;
use spectrax::gram::InitMethod;
use spectrax::hierarchy::{
    solve_with_context, solve_with_options, BoundReport, PrecomputedContext, SolveOptions, SphericalSpec,
};
use spectrax::ideal::GroebnerOptions;
use spectrax::polyring::{parse_rational, Rational};
use spectrax::problems::{
    cut_bound, distance_from_bound, distance_spec, maxcut_closed_form_bound, maxcut_spec, tensor_norm_spec, Graph,
    Tensor3,
};
use spectrax::spectratope::{affine_level, circle_preset, ex51_preset, BoundaryPolygon, SpectratopeHandle, SUPPORT_TOL};
use spectrax::{IdealPresentation, MethodChoice};

use crate::files::{read_json, IdealFile, LevelEntry, ProblemFile, ResultFile, TensorFile, RESULT_SCHEMA};
use crate::{CliError, Exit};

fn groebner_options(skip_check: bool) -> GroebnerOptions {
    GroebnerOptions { verify_trusted: !skip_check, ..GroebnerOptions::default() }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(path.display().to_string(), e))
}

fn write_result(path: &Path, result: &ResultFile) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(result).map_err(|e| CliError::Input(e.to_string()))?;
    write_file(path, &text)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "none".into(), |v| format!("{v:.10}"))
}

fn print_levels(result: &ResultFile, value_name: &str) {
    println!("kappa = {}, method = {}", result.kappa, result.method);
    println!("{:>3} {:>8} {:>18} {:>18} {:>10}  status", "k", "d_k", "bound", value_name, "ms");
    for l in &result.levels {
        println!(
            "{:>3} {:>8} {:>18} {:>18} {:>10.2}  {}",
            l.k,
            l.d_k.map_or_else(|| "-".into(), |d| d.to_string()),
            fmt_opt(l.bound),
            fmt_opt(l.transformed_value),
            l.wall_ms,
            l.status
        );
    }
    for w in &result.warnings {
        println!("warning: {w}");
    }
}

#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Problem file (spectrax-problem/1).
    pub problem: PathBuf,
    /// Highest level to solve.
    #[arg(long)]
    pub levels: Option<usize>,
    /// method1, method2 or auto.
    #[arg(long)]
    pub method: Option<MethodChoice>,
    /// Wall-clock budget for the whole run.
    #[arg(long)]
    pub budget_ms: Option<u64>,
    /// Result file (spectrax-result/1).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trust marked Gröbner bases without the S-polynomial check.
    #[arg(long)]
    pub skip_gb_check: bool,
}

pub fn cmd_solve(args: &SolveArgs) -> Result<Exit, CliError> {
    let file: ProblemFile = read_json(&args.problem)?;
    let spec = file.to_spec()?;
    let mut opts = SolveOptions::new(args.levels.or(file.options.levels).unwrap_or(1))
        .method(args.method.or(file.options.method).unwrap_or_default());
    if let Some(ms) = args.budget_ms.or(file.options.budget_ms) {
        opts = opts.budget(Duration::from_millis(ms));
    }
    opts.groebner = groebner_options(args.skip_gb_check);
    let report = solve_with_options(&spec, &opts)?;
    let result = ResultFile::from_report(&report, |b| b);
    print_levels(&result, "value");
    if let Some(out) = &args.out {
        write_result(out, &result)?;
    }
    Ok(Exit::from_failures(report.has_failures()))
}

#[derive(Debug, Clone, Args)]
pub struct MaxcutArgs {
    /// Edge list (`i j [w]` per line, optional `n N` line, `#` comments).
    pub graph: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    /// Use the closed-form level-1 and level-2 matrices.
    #[arg(long)]
    pub closed_form: bool,
    /// Erdős–Rényi graph `n ρ seed` instead of a file.
    #[arg(long, num_args = 3, value_names = ["N", "RHO", "SEED"])]
    pub seeded_er: Option<Vec<String>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_graph(args: &MaxcutArgs) -> Result<Graph, CliError> {
    match (&args.graph, &args.seeded_er) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
            Ok(Graph::parse_edge_list(&text)?)
        }
        (None, Some(p)) => {
            let bad = |what: &str| CliError::Input(format!("--seeded-er: invalid {what}"));
            let n: usize = p[0].parse().map_err(|_| bad("n"))?;
            let rho: f64 = p[1].parse().map_err(|_| bad("ρ"))?;
            let seed: u64 = p[2].parse().map_err(|_| bad("seed"))?;
            if !(0.0..=1.0).contains(&rho) {
                return Err(bad("ρ"));
            }
            Ok(Graph::erdos_renyi(n, rho, seed))
        }
        _ => Err(CliError::Input("give either a graph file or --seeded-er".into())),
    }
}

pub fn cmd_maxcut(args: &MaxcutArgs) -> Result<Exit, CliError> {
    let g = load_graph(args)?;
    if g.n() == 0 {
        return Err(CliError::Input("graph has no vertices".into()));
    }
    println!("graph: n = {}, |E| = {}", g.n(), g.edges().len());
    let (result, failed) = if args.closed_form {
        if args.levels > 2 {
            return Err(CliError::Input("closed forms exist for levels 1 and 2 only".into()));
        }
        let opts = EigOptions { want_vector: false, ..EigOptions::default() };
        let mut levels = Vec::new();
        for k in 1..=args.levels {
            let t0 = Instant::now();
            let b = maxcut_closed_form_bound(&g, k, &opts)?;
            let n = g.n();
            levels.push(LevelEntry {
                k,
                d_k: Some(if k == 1 { n } else { 1 + n * (n - 1) / 2 }),
                bound: Some(b),
                transformed_value: Some(cut_bound(&g, b)),
                wall_ms: t0.elapsed().as_secs_f64() * 1e3,
                eig_path: None,
                converged: true,
                status: "solved".into(),
            });
        }
        let monotone_ok = levels.windows(2).all(|w| w[1].bound >= w[0].bound.map(|b| b - 1e-8));
        let result = ResultFile {
            schema: RESULT_SCHEMA.into(),
            kappa: 1,
            method: "closed-form".into(),
            sense: spectrax::Sense::Minimize,
            levels,
            monotone_ok,
            warnings: Vec::new(),
        };
        (result, false)
    } else {
        let report = solve_with_options(&maxcut_spec(&g)?, &SolveOptions::new(args.levels))?;
        (ResultFile::from_report(&report, |b| cut_bound(&g, b)), report.has_failures())
    };
    print_levels(&result, "cut <=");
    if let Some(out) = &args.out {
        write_result(out, &result)?;
    }
    Ok(Exit::from_failures(failed))
}

#[derive(Debug, Clone, Args)]
pub struct DistvarArgs {
    /// Ideal file (spectrax-ideal/1); any spherical section is ignored.
    pub ideal: PathBuf,
    /// Squared radius of a ball containing the variety.
    #[arg(long)]
    pub radius2: String,
    /// CSV of query points with a header row.
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub levels: usize,
    /// Per-point wall-clock budget.
    #[arg(long)]
    pub budget_ms: Option<u64>,
    /// Precomputed context file; written when missing.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Distance bound for one query point.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceRow {
    pub point: Vec<f64>,
    pub bound: Option<f64>,
    pub level_reached: Option<usize>,
    pub ms: f64,
    pub failed: bool,
}

pub fn read_points(path: &Path, nvars: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let p: Vec<f64> = rec
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| CliError::Input(format!("bad coordinate '{f}'"))))
            .collect::<Result<_, _>>()?;
        if p.len() != nvars {
            return Err(CliError::Input(format!("point has {} coordinates, expected {nvars}", p.len())));
        }
        points.push(p);
    }
    Ok(points)
}

fn load_or_build_context(
    cache: Option<&Path>,
    ideal: &IdealPresentation,
    spherical: &SphericalSpec,
    levels: usize,
) -> Result<PrecomputedContext, CliError> {
    if let Some(path) = cache.filter(|p| p.exists()) {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        let ctx = PrecomputedContext::from_json(&text, ideal, spherical)?;
        if ctx.levels() >= levels {
            return Ok(ctx);
        }
    }
    let ctx = PrecomputedContext::build(ideal, spherical, &BTreeMap::new(), levels, GroebnerOptions::default())?;
    ctx.warm()?;
    if let Some(path) = cache {
        write_file(path, &ctx.to_json()?)?;
    }
    Ok(ctx)
}

/// Best distance bound per point, solving points in parallel against one context.
pub fn distance_bounds(
    file: &IdealFile,
    r2: &Rational,
    points: &[Vec<f64>],
    levels: usize,
    budget: Option<Duration>,
    cache: Option<&Path>,
) -> Result<Vec<DistanceRow>, CliError> {
    let (ideal, _) = file.parts()?;
    let exact = |p: &[f64]| {
        p.iter()
            .map(|&x| Rational::from_float(x).ok_or_else(|| CliError::Input(format!("non-finite coordinate {x}"))))
            .collect::<Result<Vec<_>, _>>()
    };
    let specs = points
        .iter()
        .map(|p| Ok(distance_spec(&file.variables, &ideal.generators, r2, &exact(p)?)?))
        .collect::<Result<Vec<_>, CliError>>()?;
    let Some(first) = specs.first() else {
        return Ok(Vec::new());
    };
    let spherical = first.spherical.clone().expect("distance problems carry a spherical system");
    let ctx = load_or_build_context(cache, &first.ideal, &spherical, levels)?;
    let mut opts = SolveOptions::new(levels).method(MethodChoice::Auto);
    opts.budget = budget;
    specs
        .par_iter()
        .zip(points)
        .map(|(spec, p)| {
            let t0 = Instant::now();
            let report = solve_with_context(spec, &ctx, &opts)?;
            Ok(DistanceRow {
                point: p.clone(),
                bound: report.best().map(distance_from_bound),
                level_reached: report.level_reached(),
                ms: t0.elapsed().as_secs_f64() * 1e3,
                failed: report.has_failures(),
            })
        })
        .collect()
}

pub fn cmd_distvar(args: &DistvarArgs) -> Result<Exit, CliError> {
    let file: IdealFile = read_json(&args.ideal)?;
    let r2 = parse_rational(&args.radius2).map_err(|e| CliError::Input(format!("--radius2: {e}")))?;
    let points = read_points(&args.points, file.variables.len())?;
    let rows = distance_bounds(
        &file,
        &r2,
        &points,
        args.levels,
        args.budget_ms.map(Duration::from_millis),
        args.cache.as_deref(),
    )?;
    let n = file.variables.len();
    let mut header: Vec<String> = match n {
        2 => vec!["px".into(), "py".into()],
        _ => (1..=n).map(|i| format!("p{i}")).collect(),
    };
    header.extend(["bound", "level_reached", "ms"].map(String::from));
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(&header)?;
        for r in &rows {
            let mut rec: Vec<String> = r.point.iter().map(|x| x.to_string()).collect();
            rec.push(r.bound.map_or_else(|| "none".into(), |b| b.to_string()));
            rec.push(r.level_reached.map_or_else(|| "none".into(), |k| k.to_string()));
            rec.push(format!("{:.3}", r.ms));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| CliError::Io("csv".into(), e))?;
    }
    emit_data(args.out.as_deref(), &buf)?;
    let solved = rows.iter().filter(|r| r.bound.is_some()).count();
    summary(args.out.is_some(), &format!("{} points, {solved} with a bound", rows.len()));
    Ok(Exit::from_failures(rows.iter().any(|r| r.failed)))
}

fn emit_data(out: Option<&Path>, data: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, data).map_err(|e| CliError::Io(path.display().to_string(), e)),
        None => std::io::stdout().write_all(data).map_err(|e| CliError::Io("stdout".into(), e)),
    }
}

/// Summaries move to standard error when standard output carries data.
fn summary(data_in_file: bool, line: &str) {
    if data_in_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

#[derive(Debug, Clone, Args)]
pub struct TensorArgs {
    /// Tensor file (spectrax-tensor/1).
    pub tensor: Option<PathBuf>,
    /// Random low-rank tensor with dimensions `AxBxC`.
    #[arg(long, value_name = "AxBxC")]
    pub random: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trust the minors basis without the S-polynomial check.
    #[arg(long)]
    pub skip_gb_check: bool,
}

fn parse_dims(text: &str) -> Result<[usize; 3], CliError> {
    let dims: Vec<usize> = text
        .split(['x', 'X', ','])
        .map(|t| t.trim().parse().map_err(|_| CliError::Input(format!("bad dimensions '{text}'"))))
        .collect::<Result<_, _>>()?;
    dims.try_into().map_err(|_| CliError::Input(format!("expected three dimensions, got '{text}'")))
}

pub fn cmd_tensor(args: &TensorArgs) -> Result<Exit, CliError> {
    let t = match (&args.tensor, &args.random) {
        (Some(path), None) => read_json::<TensorFile>(path)?.to_tensor()?,
        (None, Some(dims)) => Tensor3::random_low_rank(parse_dims(dims)?, args.rank, args.seed),
        _ => return Err(CliError::Input("give either a tensor file or --random".into())),
    };
    let dims = t.dims();
    println!("tensor {}x{}x{}, Frobenius norm {:.10}", dims[0], dims[1], dims[2], t.frobenius_norm());
    let mut opts = SolveOptions::new(args.levels).method(MethodChoice::Method2);
    opts.groebner = groebner_options(args.skip_gb_check);
    let report: BoundReport = solve_with_options(&tensor_norm_spec(&t)?, &opts)?;
    let result = ResultFile::from_report(&report, |b| b);
    print_levels(&result, "norm <=");
    if let Some(out) = &args.out {
        write_result(out, &result)?;
    }
    Ok(Exit::from_failures(report.has_failures()))
}

#[derive(Debug, Clone, Args)]
pub struct SpectratopeArgs {
    /// Ideal file with a spherical section (spectrax-ideal/1).
    pub ideal: Option<PathBuf>,
    /// Built-in instance: ex51 or circle.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub levels: usize,
    #[arg(long, default_value_t = 360)]
    pub directions: usize,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Boundary polygons for levels `τ..=levels`, where `τ` is the first level
/// whose coordinate space holds both variables.
pub fn spectratope_polygons(
    ideal: &IdealPresentation,
    spherical: &SphericalSpec,
    levels: usize,
    directions: usize,
) -> Result<Vec<BoundaryPolygon>, CliError> {
    if ideal.nvars != 2 {
        return Err(CliError::Input("boundary sampling needs exactly two variables".into()));
    }
    if directions == 0 {
        return Err(CliError::Input("--directions must be positive".into()));
    }
    let ctx = PrecomputedContext::build(ideal, spherical, &BTreeMap::new(), levels, GroebnerOptions::default())?;
    let tau = affine_level(&ctx, levels)?
        .ok_or_else(|| CliError::Input(format!("the variables are not in U_2k for any k <= {levels}")))?;
    (tau..=levels)
        .map(|k| Ok(SpectratopeHandle::new(&ctx, tau, k, InitMethod::Method2)?.boundary_2d(directions)?))
        .collect()
}

/// Direction indices where a level's support exceeds the previous level's.
pub fn support_increases(polys: &[BoundaryPolygon]) -> Vec<(usize, usize)> {
    let mut bad = Vec::new();
    for w in polys.windows(2) {
        for (i, (a, b)) in w[0].points.iter().zip(&w[1].points).enumerate() {
            if b.support > a.support + SUPPORT_TOL * (1.0 + a.support.abs()) {
                bad.push((w[1].level, i));
            }
        }
    }
    bad
}

pub fn cmd_spectratope(args: &SpectratopeArgs) -> Result<Exit, CliError> {
    let (ideal, spherical) = match (&args.ideal, args.preset.as_deref()) {
        (Some(path), None) => {
            let (ideal, sph) = read_json::<IdealFile>(path)?.parts()?;
            (ideal, sph.ok_or_else(|| CliError::Input("the ideal file has no spherical section".into()))?)
        }
        (None, Some(name)) => {
            let p = match name {
                "ex51" => ex51_preset(),
                "circle" => circle_preset(),
                _ => return Err(CliError::Input(format!("unknown preset '{name}' (expected ex51 or circle)"))),
            };
            (p.ideal, p.spherical)
        }
        _ => return Err(CliError::Input("give either an ideal file or --preset".into())),
    };
    let polys = spectratope_polygons(&ideal, &spherical, args.levels, args.directions)?;
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(["level", "angle", "support", "x", "y"])?;
        for poly in &polys {
            for b in &poly.points {
                w.write_record(&[
                    poly.level.to_string(),
                    b.angle.to_string(),
                    b.support.to_string(),
                    b.point[0].to_string(),
                    b.point[1].to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| CliError::Io("csv".into(), e))?;
    }
    emit_data(args.out.as_deref(), &buf)?;
    let to_file = args.out.is_some();
    for poly in &polys {
        let (lo, hi) = poly
            .points
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), b| (lo.min(b.support), hi.max(b.support)));
        summary(to_file, &format!("level {}: {} directions, support in [{lo:.6}, {hi:.6}]", poly.level, poly.points.len()));
    }
    let bad = support_increases(&polys);
    if !bad.is_empty() {
        summary(to_file, &format!("warning: support increased in {} direction(s) between levels", bad.len()));
    }
    Ok(Exit::Success)
}
