//! Independent oracles shared by the integration tests: brute force and
//! sampling, computed without any of the relaxation machinery.

#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum of `f` over `{±1}^n` by enumeration.
pub fn hypercube_min(n: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    let mut x = vec![0.0; n];
    for mask in 0u64..(1 << n) {
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = if mask >> i & 1 == 1 { 1.0 } else { -1.0 };
        }
        best = best.min(f(&x));
    }
    best
}

/// Minimum of `f(cos θ, sin θ)` over `steps` equally spaced angles.
pub fn circle_min(steps: usize, f: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
    use rayon::prelude::*;
    (0..steps)
        .into_par_iter()
        .map(|i| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / steps as f64;
            f(t.cos(), t.sin())
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// Smallest value of `f` on random unit vectors followed by projected
/// gradient-free coordinate polishing; an upper bound on the true minimum.
pub fn sphere_min(n: usize, samples: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normalize = |v: &mut Vec<f64>| {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= r);
    };
    let mut best_x = vec![0.0; n];
    let mut best = f64::INFINITY;
    for _ in 0..samples {
        let mut v: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
        normalize(&mut v);
        let val = f(&v);
        if val < best {
            best = val;
            best_x = v;
        }
    }
    let mut step = 0.1;
    while step > 1e-9 {
        let mut improved = false;
        for i in 0..n {
            for s in [step, -step] {
                let mut v = best_x.clone();
                v[i] += s;
                normalize(&mut v);
                let val = f(&v);
                if val < best {
                    best = val;
                    best_x = v;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

pub fn gaussian(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Points on `8(x⁴+y⁴) − 10(x²+y²) + 6x²y² + 3 = 0`, from the polar form
/// `a r⁴ − 10 r² + 3 = 0` with `a = 8 − 10 cos²θ sin²θ`.
pub fn quartic_curve_points(steps: usize) -> Vec<[f64; 2]> {
    let mut pts = Vec::with_capacity(2 * steps);
    for i in 0..steps {
        let t = 2.0 * std::f64::consts::PI * i as f64 / steps as f64;
        let (c, s) = (t.cos(), t.sin());
        let a = 8.0 - 10.0 * c * c * s * s;
        let disc = 100.0 - 12.0 * a;
        if disc < 0.0 {
            continue;
        }
        for r2 in [(10.0 - disc.sqrt()) / (2.0 * a), (10.0 + disc.sqrt()) / (2.0 * a)] {
            if r2 > 0.0 {
                let r = r2.sqrt();
                pts.push([r * c, r * s]);
            }
        }
    }
    pts
}

pub fn quartic_curve(x: f64, y: f64) -> f64 {
    8.0 * (x.powi(4) + y.powi(4)) - 10.0 * (x * x + y * y) + 6.0 * x * x * y * y + 3.0
}

/// Distance from `p` to a sampled point set.
pub fn sampled_distance(p: [f64; 2], pts: &[[f64; 2]]) -> f64 {
    pts.iter()
        .map(|q| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min)
}

/// Real points of `x² + 2y² − 2x³y − 2x²y² + 2x⁴y² = 4`, solving the
/// quadratic in `y` on a fine grid of `x` and keeping `count` evenly strided roots.
pub fn ex51_curve_points(count: usize) -> Vec<[f64; 2]> {
    let steps = 20_000;
    let mut all = Vec::new();
    for i in 0..=steps {
        let x = -3.0 + 6.0 * i as f64 / steps as f64;
        let a = 2.0 - 2.0 * x * x + 2.0 * x.powi(4);
        let b = -2.0 * x.powi(3);
        let c = x * x - 4.0;
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            continue;
        }
        for sign in [1.0, -1.0] {
            all.push([x, (-b + sign * disc.sqrt()) / (2.0 * a)]);
        }
    }
    let stride = (all.len() / count).max(1);
    all.into_iter().step_by(stride).take(count).collect()
}

pub fn ex51_curve(x: f64, y: f64) -> f64 {
    x * x + 2.0 * y * y - 2.0 * x.powi(3) * y - 2.0 * x * x * y * y + 2.0 * x.powi(4) * y * y - 4.0
}

/// Spectral norm of an order-3 tensor by alternating power iterations from
/// `starts` random initial points.
pub fn tensor_spectral_norm(dims: [usize; 3], values: &[f64], starts: usize, seed: u64) -> f64 {
    let [n1, n2, n3] = dims;
    let t = |i: usize, j: usize, k: usize| values[(i * n2 + j) * n3 + k];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unit = |v: Vec<f64>| {
        let r = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / r).collect::<Vec<_>>()
    };
    let mut best = 0.0f64;
    for _ in 0..starts {
        let mut v = unit((0..n2).map(|_| gaussian(&mut rng)).collect());
        let mut w = unit((0..n3).map(|_| gaussian(&mut rng)).collect());
        let mut val = 0.0;
        for _ in 0..500 {
            let u = unit((0..n1).map(|i| (0..n2).flat_map(|j| (0..n3).map(move |k| (j, k))).map(|(j, k)| t(i, j, k) * v[j] * w[k]).sum()).collect());
            v = unit((0..n2).map(|j| (0..n1).flat_map(|i| (0..n3).map(move |k| (i, k))).map(|(i, k)| t(i, j, k) * u[i] * w[k]).sum()).collect());
            let raw: Vec<f64> =
                (0..n3).map(|k| (0..n1).flat_map(|i| (0..n2).map(move |j| (i, j))).map(|(i, j)| t(i, j, k) * u[i] * v[j]).sum()).collect();
            let next = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
            w = unit(raw);
            if (next - val).abs() < 1e-15 {
                val = next;
                break;
            }
            val = next;
        }
        best = best.max(val);
    }
    best
}

/// Maximum cut by enumeration (vertex 0 fixed on one side).
pub fn brute_max_cut(n: usize, edges: &[(usize, usize, f64)]) -> f64 {
    let mut best = 0.0f64;
    for mask in 0u64..(1 << (n - 1)) {
        let side = |v: usize| v > 0 && (mask >> (v - 1)) & 1 == 1;
        let cut: f64 = edges.iter().filter(|(i, j, _)| side(*i) != side(*j)).map(|e| e.2).sum();
        best = best.max(cut);
    }
    best
}

/// `λ_min` of a dense symmetric matrix.
pub fn sym_lambda_min(m: &DMatrix<f64>) -> f64 {
    m.clone().symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}
