//! Pointwise formulas for the standard reference metric near the divisor.
//!
//! Locally the reference metric is `ω = Ω + i∂∂̄(F|z₁|^{2β})` with `F > 0`
//! smooth and `Ω` a smooth Kähler form. Its components in the adapted frame
//! are computed two ways: by the closed-form expressions, and by pulling back
//! `Γ = Ω + i∂∂̄(F|w|²)` on `ℂ^{n+1}` along `Φ(z) = (z, z₁^β)`.
//!
//! All inputs are order-2 jets at the evaluation point; no symbolic
//! differentiation happens here.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cone_geometry::FrameHermitian;
use crate::{Error, Result};

/// Value, `∂F/∂z_a` and `∂²F/∂z_a∂z̄_b` of a real function at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<Complex64>,
    /// Row-major `n × n`, Hermitian.
    pub hess: Vec<Complex64>,
}

/// Everything needed to evaluate the reference metric at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalData {
    /// Jet of `F`; the metric uses `δ·F`.
    pub f: Jet2,
    /// `Ω_{ab̄}` at the point, row-major `n × n`.
    pub omega: Vec<Complex64>,
    /// The point `(z₁, …, z_n)` in complex coordinates.
    pub z: Vec<Complex64>,
    pub beta: f64,
    pub delta: f64,
}

impl LocalData {
    pub fn n(&self) -> usize {
        self.z.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n();
        if n == 0 || self.f.grad.len() != n || self.f.hess.len() != n * n || self.omega.len() != n * n {
            return Err(Error::InvalidParameter("jet dimensions do not match the point".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {} not in (0, 1]", self.beta)));
        }
        if !(self.delta > 0.0) || !(self.f.value > 0.0) {
            return Err(Error::InvalidParameter("need F > 0 and delta > 0".into()));
        }
        let om = FrameHermitian { n, entries: self.omega.clone() };
        if !om.is_positive_definite() {
            return Err(Error::InvalidParameter("Omega is not positive definite".into()));
        }
        Ok(())
    }

    fn scaled(&self) -> (f64, Vec<Complex64>, Vec<Complex64>) {
        let d = self.delta;
        (
            d * self.f.value,
            self.f.grad.iter().map(|g| g * d).collect(),
            self.f.hess.iter().map(|h| h * d).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceComponents {
    pub metric: FrameHermitian,
    /// `false` when `|z₁|` is too large for the data (the "δ small" regime failed).
    pub positive_definite: bool,
}

/// `g(v_i, v̄_j)` of `Ω + i∂∂̄(δF|z₁|^{2β})` by the closed-form expressions.
///
/// With `F_a = ∂F/∂z_a`, `F_{ab̄} = ∂²F/∂z_a∂z̄_b`:
///
/// - `g₁₁̄ = |z₁|^{2−2β}Ω₁₁̄ + |z₁|²F₁₁̄ + β(z₁F₁ + z̄₁F₁̄) + β²F`
/// - `g₁ⱼ̄ = |z₁|^{1−β}Ω₁ⱼ̄ + |z₁|^{1+β}F₁ⱼ̄ + β|z₁|^{β−1}z̄₁F_ȷ̄`
/// - `gⱼₖ̄ = Ωⱼₖ̄ + |z₁|^{2β}Fⱼₖ̄`
///
/// On the axis every power of `|z₁|` vanishes, so `g₁ⱼ̄ = 0` there.
pub fn reference_components(d: &LocalData) -> Result<ReferenceComponents> {
    d.validate()?;
    let n = d.n();
    let beta = d.beta;
    let (fv, fa, fab) = d.scaled();
    let z1 = d.z[0];
    let m = z1.norm();
    let pw = |e: f64| if m == 0.0 { 0.0 } else { m.powf(e) };
    let mut g = FrameHermitian::zeros(n);

    let g11 = d.omega[0] * pw(2.0 - 2.0 * beta)
        + fab[0] * (m * m)
        + (z1 * fa[0] + z1.conj() * fa[0].conj()) * beta
        + beta * beta * fv;
    g.set(0, 0, g11);
    for j in 1..n {
        // |z1|^{β−1} z̄1 = |z1|^β e^{−iθ}
        let tail = if m == 0.0 { Complex64::new(0.0, 0.0) } else { z1.conj() / m * pw(beta) };
        let g1j = d.omega[j] * pw(1.0 - beta) + fab[j] * pw(1.0 + beta) + tail * fa[j].conj() * beta;
        g.set(0, j, g1j);
        g.set(j, 0, g1j.conj());
        for k in 1..n {
            g.set(j, k, d.omega[j * n + k] + fab[j * n + k] * pw(2.0 * beta));
        }
    }
    let positive_definite = g.is_positive_definite();
    Ok(ReferenceComponents { metric: g, positive_definite })
}

/// Branch of `arg z` taking values in `(cut − 2π, cut]`.
fn branch_arg(z: Complex64, cut: f64) -> f64 {
    let mut a = z.arg();
    while a > cut {
        a -= 2.0 * PI;
    }
    while a <= cut - 2.0 * PI {
        a += 2.0 * PI;
    }
    a
}

/// Pull back `Γ = Ω + i∂∂̄(δF|w|²)` along `Φ(z) = (z, z₁^β)` and express it in
/// the adapted frame. `branch_cut` is the excluded ray of `z₁^β` (`π` is the
/// negative real axis).
///
/// `dΦ(v₁) = |z₁|^{1−β}∂₁ + βe^{i(β−1)arg z₁}∂_w`, `dΦ(v_j) = ∂_j`, and
/// `Γ_{ab̄} = Ω_{ab̄} + |w|²F_{ab̄}`, `Γ_{aw̄} = wF_a`, `Γ_{ww̄} = F`.
pub fn sturm_pullback(d: &LocalData, branch_cut: f64) -> Result<FrameHermitian> {
    d.validate()?;
    let n = d.n();
    let beta = d.beta;
    let (fv, fa, fab) = d.scaled();
    let z1 = d.z[0];
    let m = z1.norm();
    let arg = if m == 0.0 { 0.0 } else { branch_arg(z1, branch_cut) };
    let w = if m == 0.0 { Complex64::new(0.0, 0.0) } else { Complex64::from_polar(m.powf(beta), beta * arg) };
    let w2 = w.norm_sqr();

    // Γ on ℂ^{n+1}, index n is w
    let dim = n + 1;
    let mut gam = vec![Complex64::new(0.0, 0.0); dim * dim];
    for a in 0..n {
        for b in 0..n {
            gam[a * dim + b] = d.omega[a * n + b] + fab[a * n + b] * w2;
        }
        gam[a * dim + n] = fa[a] * w;
        gam[n * dim + a] = fa[a].conj() * w.conj();
    }
    gam[n * dim + n] = Complex64::new(fv, 0.0);

    let mut frame = vec![vec![Complex64::new(0.0, 0.0); dim]; n];
    frame[0][0] = Complex64::new(if m == 0.0 { 0.0 } else { m.powf(1.0 - beta) }, 0.0);
    frame[0][n] = Complex64::from_polar(beta, (beta - 1.0) * arg);
    for (j, v) in frame.iter_mut().enumerate().skip(1) {
        v[j] = Complex64::new(1.0, 0.0);
    }

    let mut g = FrameHermitian::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for a in 0..dim {
                for b in 0..dim {
                    acc += frame[i][a] * frame[j][b].conj() * gam[a * dim + b];
                }
            }
            g.set(i, j, acc);
        }
    }
    Ok(g)
}

/// Gaussian curvature of `g_a = (a + |z₁|^{2β−2})|dz₁|²` on the punctured disc:
/// `K_a = −2(1−β)²a|z₁|^{2−4β} / (1 + a|z₁|^{2−2β})³`.
///
/// The prefactor is the one produced by `K = −(2λ)⁻¹Δ log λ` with the
/// Euclidean Laplacian and `λ = a + |z₁|^{2β−2}`.
pub fn gaussian_curvature_ka(z1: Complex64, a: f64, beta: f64) -> Result<f64> {
    let r = z1.norm();
    if r == 0.0 {
        return Err(Error::InvalidParameter("K_a is not defined at z1 = 0".into()));
    }
    if a.abs() >= 1.0 {
        return Err(Error::InvalidParameter(format!("|a| = {} must be < 1", a.abs())));
    }
    let denom = 1.0 + a * r.powf(2.0 - 2.0 * beta);
    if denom <= 0.0 {
        return Err(Error::InvalidParameter(format!("non-positive denominator {denom} at |z1| = {r}")));
    }
    Ok(-2.0 * (1.0 - beta).powi(2) * a * r.powf(2.0 - 4.0 * beta) / denom.powi(3))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DivergenceVerdict {
    DivergesToMinusInfinity,
    DivergesToPlusInfinity,
    IdenticallyZero,
    /// `β ≤ 1/2`: the exponent `2 − 4β` is non-negative, nothing is claimed.
    NoDivergenceClaimed,
    /// The samples are not monotone toward the axis.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnboundednessReport {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub verdict: DivergenceVerdict,
}

/// Evaluate `K_a` along decreasing radii and classify the trend.
pub fn curvature_unboundedness_scan(a: f64, beta: f64, radii: &[f64]) -> Result<UnboundednessReport> {
    if radii.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter("radii must decrease strictly".into()));
    }
    let values = radii
        .iter()
        .map(|&r| gaussian_curvature_ka(Complex64::new(r, 0.0), a, beta))
        .collect::<Result<Vec<_>>>()?;
    let verdict = if beta <= 0.5 {
        DivergenceVerdict::NoDivergenceClaimed
    } else if values.iter().all(|v| *v == 0.0) {
        DivergenceVerdict::IdenticallyZero
    } else if values.windows(2).all(|w| w[1] < w[0]) && values.iter().all(|v| *v < 0.0) {
        DivergenceVerdict::DivergesToMinusInfinity
    } else if values.windows(2).all(|w| w[1] > w[0]) && values.iter().all(|v| *v > 0.0) {
        DivergenceVerdict::DivergesToPlusInfinity
    } else {
        DivergenceVerdict::Inconclusive
    };
    Ok(UnboundednessReport { radii: radii.to_vec(), values, verdict })
}

/// Adapted-frame components after the change `z̃₁ = z₁`, `z̃₂ = z₁ + z₂` on `ℂ²`.
///
/// `g₁₁̄ = g̃₁₁̄ + |z₁|^{1−β}(g̃₁₂̄ + g̃₂₁̄) + |z₁|^{2−2β}g̃₂₂̄`,
/// `g₁₂̄ = g̃₁₂̄ + |z₁|^{1−β}g̃₂₂̄`, `g₂₂̄ = g̃₂₂̄`.
pub fn coordinate_change_components(tilde: &FrameHermitian, z1: Complex64, beta: f64) -> Result<FrameHermitian> {
    if tilde.n != 2 {
        return Err(Error::InvalidParameter(format!("coordinate change is defined for n = 2, got {}", tilde.n)));
    }
    let m = z1.norm();
    let k = if m == 0.0 { 0.0 } else { m.powf(1.0 - beta) };
    let mut g = FrameHermitian::zeros(2);
    g.set(0, 0, tilde.get(0, 0) + (tilde.get(0, 1) + tilde.get(1, 0)) * k + tilde.get(1, 1) * (k * k));
    g.set(0, 1, tilde.get(0, 1) + tilde.get(1, 1) * k);
    g.set(1, 0, tilde.get(1, 0) + tilde.get(1, 1) * k);
    g.set(1, 1, tilde.get(1, 1));
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn flat_data(z1: Complex64, beta: f64) -> LocalData {
        LocalData {
            f: Jet2 { value: 1.0, grad: vec![c(0.0, 0.0); 2], hess: vec![c(0.0, 0.0); 4] },
            omega: vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            z: vec![z1, c(0.3, 0.1)],
            beta,
            delta: 1.0,
        }
    }

    #[test]
    fn zero_jet_components() {
        let beta = 0.6;
        let z1 = c(0.2, -0.1);
        let g = reference_components(&flat_data(z1, beta)).unwrap();
        let want = z1.norm().powf(2.0 - 2.0 * beta) + beta * beta;
        assert!((g.metric.get(0, 0) - c(want, 0.0)).norm() < 1e-15);
        assert_eq!(g.metric.get(0, 1), c(0.0, 0.0));
        assert_eq!(g.metric.get(1, 1), c(1.0, 0.0));
        assert!(g.positive_definite);
    }

    #[test]
    fn axis_kills_mixed_terms() {
        let mut d = flat_data(c(0.0, 0.0), 0.7);
        d.f.grad = vec![c(0.4, 0.2), c(-0.3, 0.5)];
        d.f.hess = vec![c(0.2, 0.0), c(0.1, 0.1), c(0.1, -0.1), c(0.3, 0.0)];
        d.omega[1] = c(0.2, 0.3);
        d.omega[2] = c(0.2, -0.3);
        let g = reference_components(&d).unwrap().metric;
        assert_eq!(g.get(0, 1), c(0.0, 0.0));
        assert_eq!(g.get(1, 0), c(0.0, 0.0));
        assert!((g.get(0, 0) - c(0.49, 0.0)).norm() < 1e-15);
        let s = sturm_pullback(&d, PI).unwrap();
        assert!(s.max_abs_diff(&g) < 1e-15);
    }

    #[test]
    fn beta_one_pullback_is_graph() {
        let mut d = flat_data(c(-0.3, 0.2), 1.0);
        d.f.grad = vec![c(0.1, 0.2), c(0.0, -0.1)];
        let a = reference_components(&d).unwrap().metric;
        let b = sturm_pullback(&d, PI).unwrap();
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn ka_trivial_zeros() {
        assert_eq!(gaussian_curvature_ka(c(0.3, 0.1), 0.0, 0.7).unwrap(), 0.0);
        assert_eq!(gaussian_curvature_ka(c(0.3, 0.1), 0.5, 1.0).unwrap(), 0.0);
        assert!(gaussian_curvature_ka(c(0.0, 0.0), 0.5, 0.7).is_err());
        assert!(gaussian_curvature_ka(c(0.3, 0.0), 1.0, 0.7).is_err());
    }

    #[test]
    fn unboundedness_verdicts() {
        let radii: Vec<f64> = (1..=6).map(|k| 10f64.powi(-k)).collect();
        let rep = curvature_unboundedness_scan(0.5, 0.75, &radii).unwrap();
        assert_eq!(rep.verdict, DivergenceVerdict::DivergesToMinusInfinity);
        assert!(*rep.values.last().unwrap() < -1e3);
        let rep = curvature_unboundedness_scan(-0.5, 0.75, &radii).unwrap();
        assert_eq!(rep.verdict, DivergenceVerdict::DivergesToPlusInfinity);
        let rep = curvature_unboundedness_scan(0.0, 0.75, &radii).unwrap();
        assert_eq!(rep.verdict, DivergenceVerdict::IdenticallyZero);
        assert!(rep.values.iter().all(|v| *v == 0.0));
        let rep = curvature_unboundedness_scan(0.5, 0.5, &radii).unwrap();
        assert_eq!(rep.verdict, DivergenceVerdict::NoDivergenceClaimed);
    }

    #[test]
    fn coordinate_change_examples() {
        let id = FrameHermitian::identity(2);
        let g = coordinate_change_components(&id, c(0.25, 0.0), 0.5).unwrap();
        assert!((g.get(0, 0) - c(1.25, 0.0)).norm() < 1e-15);
        assert!((g.get(0, 1) - c(0.5, 0.0)).norm() < 1e-15);
        assert_eq!(g.get(1, 1), c(1.0, 0.0));
        let mut t = FrameHermitian::identity(2);
        t.set(0, 1, c(0.1, 0.2));
        t.set(1, 0, c(0.1, -0.2));
        assert_eq!(coordinate_change_components(&t, c(0.0, 0.0), 0.7).unwrap(), t);
        assert!(coordinate_change_components(&FrameHermitian::identity(3), c(0.1, 0.0), 0.5).is_err());
    }
}
