use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Fourier diagonalization of the periodic 5-point stencil on an `N × N` grid.
pub struct Spectral {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Symbol of `−½Δ₅` (non-negative, zero only at the constant mode).
    symbol: Vec<f64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let h2 = 1.0 / (n * n) as f64;
        let s: Vec<f64> = (0..n).map(|k| (PI * k as f64 / n as f64).sin().powi(2)).collect();
        let mut symbol = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                symbol[j * n + i] = 2.0 * (s[i] + s[j]) / h2;
            }
        }
        Self { n, fwd, inv, symbol }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        plan.process(buf);
        let mut t = vec![Complex64::new(0.0, 0.0); n * n];
        for j in 0..n {
            for i in 0..n {
                t[i * n + j] = buf[j * n + i];
            }
        }
        plan.process(&mut t);
        for j in 0..n {
            for i in 0..n {
                buf[j * n + i] = t[i * n + j];
            }
        }
    }

    fn apply_multiplier(&self, u: &[f64], m: impl Fn(usize) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, &self.fwd);
        for (k, c) in buf.iter_mut().enumerate() {
            *c *= m(k);
        }
        self.transform(&mut buf, &self.inv);
        let scale = 1.0 / (n * n) as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    /// Solve `(−½Δ₅ + shift)u = rhs`. For `shift = 0` the constant mode of
    /// `rhs` is discarded and `u` has zero mean.
    pub fn solve(&self, rhs: &[f64], shift: f64) -> Vec<f64> {
        self.apply_multiplier(rhs, |k| {
            let d = self.symbol[k] + shift;
            if d == 0.0 {
                0.0
            } else {
                1.0 / d
            }
        })
    }

    /// Low-pass filter with cutoff `K = 1/scale` cycles per unit length.
    ///
    /// The multiplier is `1` for `|ξ| ≤ K/2`, `0` for `|ξ| ≥ K`, with a `C^∞`
    /// transition in between, so fields band-limited to `K/2` are reproduced
    /// exactly and every output is a trigonometric polynomial.
    pub fn mollify(&self, u: &[f64], scale: f64) -> Vec<f64> {
        let n = self.n as i64;
        let wrap = |k: i64| if k > n / 2 { k - n } else { k };
        let cutoff = 1.0 / scale;
        self.apply_multiplier(u, |k| {
            let kx = wrap(k as i64 % n) as f64;
            let ky = wrap(k as i64 / n) as f64;
            low_pass(kx.hypot(ky) / cutoff)
        })
    }

    /// Eigenvalues of `−½Δ₅`, unsorted.
    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }
}

fn low_pass(t: f64) -> f64 {
    if t <= 0.5 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let f = |x: f64| if x > 0.0 { (-1.0 / x).exp() } else { 0.0 };
    let x = 2.0 * t - 1.0;
    f(1.0 - x) / (f(1.0 - x) + f(x))
}
