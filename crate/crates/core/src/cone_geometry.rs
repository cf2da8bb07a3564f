//! The flat model cone on `ℂⁿ`.
//!
//! `g_(β) = β²|z₁|^{2β−2}|dz₁|² + Σ_{j≥2}|dz_j|²` has a cone of total angle
//! `2πβ` along `{z₁ = 0}`. Writing `z₁ = r^{1/β}e^{iθ}` gives the cone chart,
//! in which `g_(β) = dr² + β²r²dθ² + Σ|dz_j|²` is quasi-isometric to the
//! Euclidean metric. Hölder quantities are always measured with the induced
//! distance `d_β`.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Default cap on the number of pairs scanned by [`holder_seminorm`].
pub const DEFAULT_PAIR_CAP: usize = 1_000_000;

/// Cone angle parameter `β` and Hölder exponent `α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeParams {
    pub beta: f64,
    pub alpha: f64,
}

impl ConeParams {
    /// Parameters for metric regularity: `0 < α ≤ 1/β − 1` and `α ≤ 1`.
    pub fn new(beta: f64, alpha: f64) -> Result<Self> {
        let p = Self::for_measurement(beta, alpha)?;
        if alpha > 1.0 / beta - 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "alpha = {alpha} exceeds 1/beta - 1 = {}",
                1.0 / beta - 1.0
            )));
        }
        Ok(p)
    }

    /// Looser constructor for pure seminorm measurement: any `α ∈ (0, 1]`.
    ///
    /// `β = 1` is accepted here as the smooth (Euclidean) limit.
    pub fn for_measurement(beta: f64, alpha: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta = {beta} not in (0, 1]")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} not in (0, 1]")));
        }
        Ok(Self { beta, alpha })
    }

    /// The largest exponent for which the coordinate-independent definition works.
    pub fn alpha_threshold(&self) -> f64 {
        1.0 / self.beta - 1.0
    }
}

/// The transverse coordinate of a model point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Transverse {
    Complex(Complex64),
    Cone { r: f64, theta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    Complex,
    Cone,
}

/// A point of `ℂⁿ` given in either the complex or the cone chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub first: Transverse,
    pub rest: Vec<Complex64>,
}

impl ModelPoint {
    pub fn complex(z1: Complex64, rest: Vec<Complex64>) -> Self {
        Self { first: Transverse::Complex(z1), rest }
    }

    pub fn cone(r: f64, theta: f64, rest: Vec<Complex64>) -> Self {
        Self { first: Transverse::Cone { r, theta: wrap_angle(theta) }, rest }
    }

    pub fn chart(&self) -> Chart {
        match self.first {
            Transverse::Complex(_) => Chart::Complex,
            Transverse::Cone { .. } => Chart::Cone,
        }
    }

    pub fn dim(&self) -> usize {
        self.rest.len() + 1
    }

    /// `(r, θ)` of the first coordinate, converting if necessary.
    pub fn cone_coords(&self, beta: f64) -> (f64, f64) {
        match self.first {
            Transverse::Cone { r, theta } => (r, theta),
            Transverse::Complex(z) => complex_to_cone(z, beta),
        }
    }

    /// `z₁`, converting if necessary.
    pub fn z1(&self, beta: f64) -> Complex64 {
        match self.first {
            Transverse::Complex(z) => z,
            Transverse::Cone { r, theta } => cone_to_complex(r, theta, beta),
        }
    }
}

fn wrap_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU
    if t >= TAU {
        0.0
    } else {
        t
    }
}

fn complex_to_cone(z: Complex64, beta: f64) -> (f64, f64) {
    let m = z.norm();
    if m == 0.0 {
        return (0.0, 0.0);
    }
    (m.powf(beta), wrap_angle(z.arg()))
}

fn cone_to_complex(r: f64, theta: f64, beta: f64) -> Complex64 {
    if r == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::from_polar(r.powf(1.0 / beta), theta)
}

/// Hermitian component matrix `g(v_i, v̄_j)` in the adapted frame
/// `v₁ = |z₁|^{1−β}∂/∂z₁`, `v_j = ∂/∂z_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameHermitian {
    pub n: usize,
    /// Row-major, `entries[i * n + j] = g(v_i, v̄_j)`.
    pub entries: Vec<Complex64>,
}

impl FrameHermitian {
    pub fn zeros(n: usize) -> Self {
        Self { n, entries: vec![Complex64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.entries[i * self.n + j] = v;
    }

    pub fn hermitian_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()) * 0.5
        });
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_positive_definite(&self) -> bool {
        self.min_eigenvalue() > 0.0
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `g_(β)` in the adapted frame: `diag(β², 1, …, 1)`, the same at every point.
pub fn model_metric(p: &ModelPoint, params: &ConeParams) -> FrameHermitian {
    let mut g = FrameHermitian::identity(p.dim());
    g.set(0, 0, Complex64::new(params.beta * params.beta, 0.0));
    g
}

/// `(g_(β)(t, t), |t|²_Euclid)` for a real tangent vector written in cone
/// coordinates `(dr, dθ, Re dz₂, Im dz₂, …)`, with the Euclidean metric being
/// the one for which `(r, θ)` are polar coordinates.
pub fn model_quadratic_forms(p: &ModelPoint, tangent: &[f64], params: &ConeParams) -> (f64, f64) {
    let (r, _) = p.cone_coords(params.beta);
    let (dr, dth) = (tangent[0], tangent[1]);
    let flat: f64 = tangent[2..].iter().map(|x| x * x).sum();
    let g = dr * dr + params.beta * params.beta * r * r * dth * dth + flat;
    let e = dr * dr + r * r * dth * dth + flat;
    (g, e)
}

/// Convert a point to the requested chart. The apex maps to `θ = 0`.
pub fn chart_convert(p: &ModelPoint, target: Chart, params: &ConeParams) -> ModelPoint {
    let first = match target {
        Chart::Complex => Transverse::Complex(p.z1(params.beta)),
        Chart::Cone => {
            let (r, theta) = p.cone_coords(params.beta);
            Transverse::Cone { r, theta }
        }
    };
    ModelPoint { first, rest: p.rest.clone() }
}

/// Geodesic distance on the 2-D cone of total angle `2πβ`.
pub fn cone_plane_distance(r1: f64, th1: f64, r2: f64, th2: f64, beta: f64) -> f64 {
    let d = (th1 - th2).rem_euclid(TAU);
    let circ = d.min(TAU - d);
    let opening = beta * circ;
    if opening <= PI {
        let sq = r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * opening.cos();
        sq.max(0.0).sqrt()
    } else {
        r1 + r2
    }
}

/// `d_β(p, q)`.
pub fn cone_distance(p: &ModelPoint, q: &ModelPoint, params: &ConeParams) -> f64 {
    let (r1, t1) = p.cone_coords(params.beta);
    let (r2, t2) = q.cone_coords(params.beta);
    let dc = cone_plane_distance(r1, t1, r2, t2, params.beta);
    let flat: f64 = p.rest.iter().zip(&q.rest).map(|(a, b)| (a - b).norm_sqr()).sum();
    (dc * dc + flat).sqrt()
}

/// `max |u(x) − u(y)| / d_β(x, y)^α` over sample pairs, scanning at most
/// [`DEFAULT_PAIR_CAP`] pairs.
pub fn holder_seminorm(samples: &[(ModelPoint, f64)], params: &ConeParams) -> Result<f64> {
    holder_seminorm_capped(samples, params, DEFAULT_PAIR_CAP)
}

/// As [`holder_seminorm`] with an explicit pair budget. Above the budget the
/// samples are thinned by a fixed stride, so the result is deterministic.
pub fn holder_seminorm_capped(samples: &[(ModelPoint, f64)], params: &ConeParams, cap: usize) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: samples.len() });
    }
    let m = samples.len();
    let stride = if m * (m - 1) / 2 <= cap {
        1
    } else {
        let m_max = ((1.0 + (1.0 + 8.0 * cap as f64).sqrt()) / 2.0).floor().max(2.0) as usize;
        m.div_ceil(m_max)
    };
    let picked: Vec<&(ModelPoint, f64)> = samples.iter().step_by(stride).collect();
    let mut best = 0.0f64;
    for (i, (x, ux)) in picked.iter().map(|s| (&s.0, s.1)).enumerate() {
        for (y, uy) in picked[i + 1..].iter().map(|s| (&s.0, s.1)) {
            let d = cone_distance(x, y, params);
            let du = (ux - uy).abs();
            if d == 0.0 {
                if du > 0.0 {
                    return Err(Error::NotAFunction(ux, uy));
                }
                continue;
            }
            best = best.max(du / d.powf(params.alpha));
        }
    }
    Ok(best)
}

/// Result of a log-log exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    /// Fitted exponent, capped at 1.
    pub exponent: f64,
    /// Least-squares slope before capping.
    pub raw_slope: f64,
    /// The increments were identically zero.
    pub constant_input: bool,
}

/// Fit the Hölder exponent of `v` at `0` from samples `(r, v(r) − v(0))`
/// along a sequence `r → 0`: slope of `log|Δv|` against `log r`, capped at 1.
pub fn holder_exponent_fit(radial_samples: &[(f64, f64)]) -> Result<ExponentFit> {
    if radial_samples.len() < 5 {
        return Err(Error::TooFewSamples { needed: 5, got: radial_samples.len() });
    }
    let pts: Vec<(f64, f64)> = radial_samples
        .iter()
        .filter(|(r, v)| *r > 0.0 && v.abs() > 0.0 && v.is_finite())
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(ExponentFit { exponent: 1.0, raw_slope: f64::INFINITY, constant_input: true });
    }
    let slope = least_squares_slope(&pts);
    Ok(ExponentFit { exponent: slope.min(1.0), raw_slope: slope, constant_input: false })
}

pub(crate) fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FormKind {
    /// `(1,0)`-forms.
    OneZero,
    /// `(1,1)`-forms.
    OneOne,
}

/// Basis elements built from `ε̃ = β|z₁|^{β−1}dz₁` and `dz_j`, `j ≥ 2`
/// (indices are 0-based, so `Dz(1)` is `dz₂`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FormBasis {
    Eps,
    Dz(usize),
    EpsEpsBar,
    EpsDzBar(usize),
    DzEpsBar(usize),
    DzDzBar(usize, usize),
}

impl FormBasis {
    /// Components that must vanish on `{z₁ = 0}`.
    pub fn must_vanish(&self) -> bool {
        matches!(self, FormBasis::Eps | FormBasis::EpsDzBar(_) | FormBasis::DzEpsBar(_))
    }
}

/// Raw coefficients in the `dz` basis, sampled at points off `{z₁ = 0}`.
///
/// For `(1,0)`-forms each sample carries `n` coefficients `a_j` of `dz_j`;
/// for `(1,1)`-forms `n²` row-major coefficients `a_{jk}` of `dz_j∧dz̄_k`.
#[derive(Debug, Clone)]
pub struct RawForm {
    pub kind: FormKind,
    pub n: usize,
    pub samples: Vec<(Complex64, Vec<Complex64>)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormComponents {
    pub kind: FormKind,
    /// `|z₁|` of every sample, aligned with the component vectors.
    pub radii: Vec<f64>,
    pub components: BTreeMap<FormBasis, Vec<Complex64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormVerdict {
    /// Every component required to vanish on the axis tends to 0.
    pub vanishing_holds: bool,
    /// No component diverges as `z₁ → 0`.
    pub bounded: bool,
    /// Fitted decay exponent of `|component|` in `|z₁|`, per non-zero component.
    pub decay_exponents: BTreeMap<FormBasis, f64>,
}

impl FormVerdict {
    pub fn is_c_alpha(&self) -> bool {
        self.vanishing_holds && self.bounded
    }
}

/// Rewrite a form in the `{ε̃, dz_j}` basis and test the axis conditions.
///
/// `dz₁ = e^{iθ}|z₁|^{1−β}ε/β = |z₁|^{1−β}ε̃/β·(z₁/|z₁|)⁰`, i.e. in terms of
/// `ε̃` the factor is the real `|z₁|^{1−β}/β`. The limit test fits
/// `log|component|` against `log|z₁|`: a positive slope means decay.
pub fn decompose_form(raw: &RawForm, params: &ConeParams) -> Result<(FormComponents, FormVerdict)> {
    let n = raw.n;
    let beta = params.beta;
    let expected = match raw.kind {
        FormKind::OneZero => n,
        FormKind::OneOne => n * n,
    };
    let mut components: BTreeMap<FormBasis, Vec<Complex64>> = BTreeMap::new();
    let mut radii = Vec::with_capacity(raw.samples.len());
    for (z1, coeffs) in &raw.samples {
        if coeffs.len() != expected {
            return Err(Error::InvalidParameter(format!(
                "expected {expected} coefficients, got {}",
                coeffs.len()
            )));
        }
        let m = z1.norm();
        if m == 0.0 {
            return Err(Error::InvalidParameter("form samples must lie off {z1 = 0}".into()));
        }
        radii.push(m);
        let k = m.powf(1.0 - beta) / beta;
        let mut push = |b: FormBasis, v: Complex64| components.entry(b).or_default().push(v);
        match raw.kind {
            FormKind::OneZero => {
                push(FormBasis::Eps, coeffs[0] * k);
                for (j, c) in coeffs.iter().enumerate().skip(1) {
                    push(FormBasis::Dz(j), *c);
                }
            }
            FormKind::OneOne => {
                push(FormBasis::EpsEpsBar, coeffs[0] * k * k);
                for j in 1..n {
                    push(FormBasis::EpsDzBar(j), coeffs[j] * k);
                    push(FormBasis::DzEpsBar(j), coeffs[j * n] * k);
                    for l in 1..n {
                        push(FormBasis::DzDzBar(j, l), coeffs[j * n + l]);
                    }
                }
            }
        }
    }

    let mut verdict = FormVerdict { vanishing_holds: true, bounded: true, decay_exponents: BTreeMap::new() };
    for (basis, vals) in &components {
        let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale < 1e-300 {
            continue;
        }
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .zip(vals)
            .filter(|(_, v)| v.norm() > 1e-14 * scale)
            .map(|(r, v)| (r.ln(), v.norm().ln()))
            .collect();
        let slope = if pts.len() >= 2 && pts.iter().any(|p| (p.0 - pts[0].0).abs() > 1e-12) {
            least_squares_slope(&pts)
        } else {
            0.0
        };
        verdict.decay_exponents.insert(*basis, slope);
        if slope < -1e-6 {
            verdict.bounded = false;
        }
        if basis.must_vanish() && slope <= 1e-6 {
            verdict.vanishing_holds = false;
        }
    }
    Ok((FormComponents { kind: raw.kind, radii, components }, verdict))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn model_metric_is_diag_beta_squared() {
        let params = ConeParams::for_measurement(0.5, 0.5).unwrap();
        let p = ModelPoint::complex(c(0.3, -0.2), vec![c(1.0, 0.0)]);
        let g = model_metric(&p, &params);
        assert_eq!(g.get(0, 0), c(0.25, 0.0));
        assert_eq!(g.get(1, 1), c(1.0, 0.0));
        assert_eq!(g.get(0, 1), c(0.0, 0.0));

        let params = ConeParams::for_measurement(1.0, 0.5).unwrap();
        let p = ModelPoint::complex(c(0.0, 0.0), vec![c(0.0, 0.0); 2]);
        assert_eq!(model_metric(&p, &params), FrameHermitian::identity(3));
    }

    #[test]
    fn regularity_params_respect_threshold() {
        assert!(ConeParams::new(0.75, 0.3).is_ok());
        assert!(ConeParams::new(0.75, 0.4).is_err());
        assert!(ConeParams::new(0.0, 0.1).is_err());
        assert!(ConeParams::for_measurement(0.75, 0.9).is_ok());
    }

    #[test]
    fn chart_examples() {
        let params = ConeParams::for_measurement(0.5, 0.5).unwrap();
        let p = ModelPoint::complex(c(1.0, 0.0), vec![]);
        assert_eq!(p.cone_coords(0.5), (1.0, 0.0));
        let p = ModelPoint::complex(c(4.0, 0.0), vec![]);
        let q = chart_convert(&p, Chart::Cone, &params);
        assert_eq!(q.cone_coords(0.5), (2.0, 0.0));
        let apex = ModelPoint::complex(c(0.0, 0.0), vec![]);
        assert_eq!(apex.cone_coords(0.5), (0.0, 0.0));
    }

    #[test]
    fn distance_examples() {
        let params = ConeParams::for_measurement(0.5, 0.5).unwrap();
        let p = ModelPoint::cone(1.0, 0.3, vec![c(0.1, 0.2)]);
        assert_eq!(cone_distance(&p, &p, &params), 0.0);
        let a = ModelPoint::cone(1.0, 1.0, vec![]);
        let b = ModelPoint::cone(3.0, 1.0, vec![]);
        assert!((cone_distance(&a, &b, &params) - 2.0).abs() < 1e-15);
        let a = ModelPoint::cone(1.0, 0.0, vec![]);
        let b = ModelPoint::cone(1.0, PI, vec![]);
        assert!((cone_distance(&a, &b, &params) - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn through_apex_branch() {
        // β = 0.9, Δθ = π: opening 0.9π ≤ π, law of cosines
        let a = ModelPoint::cone(1.0, 0.0, vec![]);
        let b = ModelPoint::cone(2.0, PI, vec![]);
        let params = ConeParams::for_measurement(0.9, 0.5).unwrap();
        let want = (5.0f64 - 4.0 * (0.9 * PI).cos()).sqrt();
        assert!((cone_distance(&a, &b, &params) - want).abs() < 1e-14);
        // at opening exactly π the two branches agree
        let params = ConeParams::for_measurement(1.0, 0.5).unwrap();
        assert!((cone_distance(&a, &b, &params) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn holder_constant_is_zero_and_duplicates_rejected() {
        let params = ConeParams::for_measurement(0.5, 0.5).unwrap();
        let s: Vec<_> = (0..10).map(|i| (ModelPoint::cone(i as f64 * 0.1, 0.2, vec![]), 3.0)).collect();
        assert_eq!(holder_seminorm(&s, &params).unwrap(), 0.0);
        let dup = vec![
            (ModelPoint::cone(0.5, 0.2, vec![]), 1.0),
            (ModelPoint::cone(0.5, 0.2, vec![]), 2.0),
        ];
        assert!(matches!(holder_seminorm(&dup, &params), Err(Error::NotAFunction(..))));
        assert!(holder_seminorm(&dup[..1], &params).is_err());
    }

    #[test]
    fn exponent_fit_examples() {
        let geo: Vec<f64> = (0..12).map(|k| 0.5f64.powi(k)).collect();
        let lin: Vec<_> = geo.iter().map(|&r| (r, r)).collect();
        assert!((holder_exponent_fit(&lin).unwrap().exponent - 1.0).abs() < 1e-12);
        let quad: Vec<_> = geo.iter().map(|&r| (r, r * r)).collect();
        let fit = holder_exponent_fit(&quad).unwrap();
        assert_eq!(fit.exponent, 1.0);
        assert!((fit.raw_slope - 2.0).abs() < 1e-12);
        let flat: Vec<_> = geo.iter().map(|&r| (r, 0.0)).collect();
        assert!(holder_exponent_fit(&flat).unwrap().constant_input);
        assert!(holder_exponent_fit(&lin[..4]).is_err());
    }

    #[test]
    fn model_kahler_form_decomposes_to_constant() {
        let beta = 0.6;
        let params = ConeParams::for_measurement(beta, 0.5).unwrap();
        let samples = (1..=10)
            .map(|k| {
                let z1 = Complex64::from_polar(0.5f64.powi(k), 0.3 * k as f64);
                let a11 = beta * beta * z1.norm().powf(2.0 * beta - 2.0);
                (z1, vec![c(a11, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
            })
            .collect();
        let raw = RawForm { kind: FormKind::OneOne, n: 2, samples };
        let (comp, verdict) = decompose_form(&raw, &params).unwrap();
        for v in &comp.components[&FormBasis::EpsEpsBar] {
            assert!((v - c(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(comp.components[&FormBasis::EpsDzBar(1)].iter().all(|v| v.norm() == 0.0));
        assert!(verdict.is_c_alpha());
    }

    #[test]
    fn mixed_component_decays_like_power() {
        let beta = 0.75;
        let params = ConeParams::for_measurement(beta, 0.3).unwrap();
        let samples: Vec<_> = (1..=10)
            .map(|k| {
                let z1 = Complex64::from_polar(0.5f64.powi(k), 1.0);
                (z1, vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)])
            })
            .collect();
        let raw = RawForm { kind: FormKind::OneOne, n: 2, samples: samples.clone() };
        let (comp, verdict) = decompose_form(&raw, &params).unwrap();
        for (r, v) in comp.radii.iter().zip(&comp.components[&FormBasis::EpsDzBar(1)]) {
            assert!((v.norm() - r.powf(1.0 - beta) / beta).abs() < 1e-14);
        }
        assert!(verdict.vanishing_holds);
        assert!((verdict.decay_exponents[&FormBasis::EpsDzBar(1)] - 0.25).abs() < 1e-12);

        // a (1,0) form with dz1-coefficient |z1|^{-1} diverges in the ε̃ basis
        let samples = samples
            .iter()
            .map(|(z1, _)| (*z1, vec![c(1.0 / z1.norm(), 0.0), c(1.0, 0.0)]))
            .collect();
        let raw = RawForm { kind: FormKind::OneZero, n: 2, samples };
        let (_, verdict) = decompose_form(&raw, &params).unwrap();
        assert!(!verdict.bounded);
        assert!(!verdict.is_c_alpha());
    }

    #[test]
    fn beta_one_decomposition_is_relabeling() {
        let params = ConeParams::for_measurement(1.0, 0.5).unwrap();
        let coeffs = vec![c(0.3, 0.1), c(-0.2, 0.5), c(0.7, 0.0), c(1.5, 0.2)];
        let raw = RawForm { kind: FormKind::OneOne, n: 2, samples: vec![(c(0.2, 0.4), coeffs.clone())] };
        let (comp, _) = decompose_form(&raw, &params).unwrap();
        assert_eq!(comp.components[&FormBasis::EpsEpsBar][0], coeffs[0]);
        assert_eq!(comp.components[&FormBasis::EpsDzBar(1)][0], coeffs[1]);
        assert_eq!(comp.components[&FormBasis::DzEpsBar(1)][0], coeffs[2]);
        assert_eq!(comp.components[&FormBasis::DzDzBar(1, 1)][0], coeffs[3]);
    }
}
