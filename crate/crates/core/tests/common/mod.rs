//! Oracles written independently of the library's discrete operators.
#![allow(dead_code)]

use std::f64::consts::PI;

use conekahler::local_models::{Jet2, LocalData};
use num_complex::Complex64;
use rand::Rng;

/// `(u(i+1,j) + u(i−1,j) + u(i,j+1) + u(i,j−1) − 4u(i,j)) · N²` on the periodic `N × N` grid.
pub fn five_point(n: usize, u: &[f64]) -> Vec<f64> {
    let h2 = (n * n) as f64;
    let at = |i: usize, j: usize| u[(j % n) * n + (i % n)];
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            let s = at(i + 1, j) + at(i + n - 1, j) + at(i, j + 1) + at(i, j + n - 1) - 4.0 * at(i, j);
            out[j * n + i] = s * h2;
        }
    }
    out
}

/// `K = −Δ log ρ / (2ρ)` at every node; the caller skips the apex.
pub fn curvature(n: usize, density: &[f64]) -> Vec<f64> {
    let logd: Vec<f64> = density.iter().map(|d| d.ln()).collect();
    five_point(n, &logd).iter().zip(density).map(|(l, d)| -l / (2.0 * d)).collect()
}

/// Distance from node `k` to node `apex` on the unit torus.
pub fn torus_dist(n: usize, k: usize, apex: usize) -> f64 {
    let h = 1.0 / n as f64;
    let d = |a: usize, b: usize| {
        let x = (a as f64 - b as f64).abs();
        x.min(n as f64 - x) * h
    };
    d(k % n, apex % n).hypot(d(k / n, apex / n))
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// `K` of `(a + r^{2β−2})|dz|²` by sixth-order central differences of `log λ`.
pub fn conformal_curvature_fd(x: f64, y: f64, a: f64, beta: f64) -> f64 {
    let lam = |x: f64, y: f64| a + (x * x + y * y).powf(beta - 1.0);
    let h = 0.02 * x.hypot(y);
    let c = [(1.0 / 90.0, 3.0), (-3.0 / 20.0, 2.0), (1.5, 1.0)];
    let second = |f: &dyn Fn(f64) -> f64| {
        let mut acc = -49.0 / 18.0 * f(0.0);
        for (w, k) in c {
            acc += w * (f(k * h) + f(-k * h));
        }
        acc / (h * h)
    };
    let lxx = second(&|s| lam(x + s, y).ln());
    let lyy = second(&|s| lam(x, y + s).ln());
    -(lxx + lyy) / (2.0 * lam(x, y))
}

fn c(rng: &mut impl Rng, s: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s))
}

/// Random local data with `Ω = I + BB*` positive definite, `F > 0`, `δ > 0`.
pub fn random_local_data(rng: &mut impl Rng, n: usize, beta: f64) -> LocalData {
    let b: Vec<Complex64> = (0..n * n).map(|_| c(rng, 0.3)).collect();
    let mut omega = vec![Complex64::new(0.0, 0.0); n * n];
    let mut hess = vec![Complex64::new(0.0, 0.0); n * n];
    let raw: Vec<Complex64> = (0..n * n).map(|_| c(rng, 0.4)).collect();
    for i in 0..n {
        for j in 0..n {
            let mut v = Complex64::new(if i == j { 1.0 } else { 0.0 }, 0.0);
            for k in 0..n {
                v += b[i * n + k] * b[j * n + k].conj();
            }
            omega[i * n + j] = v;
            hess[i * n + j] = (raw[i * n + j] + raw[j * n + i].conj()) * 0.5;
        }
    }
    let m = 10f64.powf(rng.gen_range(-4.0..-0.4));
    let mut z = vec![Complex64::from_polar(m, rng.gen_range(-PI..PI))];
    z.extend((1..n).map(|_| c(rng, 0.5)));
    LocalData {
        f: Jet2 { value: rng.gen_range(0.5..2.0), grad: (0..n).map(|_| c(rng, 0.5)).collect(), hess },
        omega,
        z,
        beta,
        delta: rng.gen_range(0.05..0.3),
    }
}
