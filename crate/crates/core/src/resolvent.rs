//! The 2D free resolvent near the threshold: Hankel kernels, the logarithmic
//! part `P±`, weighted Hilbert–Schmidt surrogates of `∂ᵏ_ζ(R± − P±)`, and the
//! charge-smoothed quantities.

use std::f64::consts::{FRAC_1_PI, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::bessel::{hankel0_plus, j1, series0, series1, y1_regular, EULER_GAMMA, SERIES_SWITCH};
use crate::charge::{ChargeModel, RadialProfile};
use crate::fit::{fit_power_law, DecayFit};
use crate::laplace::{KappaEvaluator, NuEvaluator};
use crate::quadrature::{adaptive, GaussRule, Tolerance};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn apply(self, v: Complex64) -> Complex64 {
        match self {
            Branch::Plus => v,
            Branch::Minus => v.conj(),
        }
    }
}

/// Admissible arguments of [`hankel_h0`].
pub const ARG_RANGE: (f64, f64) = (1e-8, 1e4);

fn check_arg(s: f64) -> Result<()> {
    if !(s > ARG_RANGE.0 && s < ARG_RANGE.1) {
        return Err(Error::OutOfRange(format!(
            "argument {s} outside ({}, {})",
            ARG_RANGE.0, ARG_RANGE.1
        )));
    }
    Ok(())
}

/// `H₀^±(s) = J₀(s) ± i Y₀(s)`.
pub fn hankel_h0(s: f64, branch: Branch) -> Result<Complex64> {
    check_arg(s)?;
    Ok(branch.apply(hankel0_plus(s)))
}

/// `h± = ±i/4 + (ln 2 − γ)/(2π)`.
pub fn log_constant(branch: Branch) -> Complex64 {
    branch.apply(Complex64::new((2f64.ln() - EULER_GAMMA) / (2.0 * PI), 0.25))
}

/// `R±(ζ², z) = ±(i/4) H₀^±(ζ|z|)`.
pub fn resolvent_kernel(zeta: f64, r: f64, branch: Branch) -> Result<Complex64> {
    let h = hankel_h0(zeta * r, branch)?;
    Ok(match branch {
        Branch::Plus => Complex64::new(0.0, 0.25) * h,
        Branch::Minus => Complex64::new(0.0, -0.25) * h,
    })
}

/// `P±(ζ, z) = −ln(ζ|z|)/(2π) + h±`.
pub fn log_kernel(zeta: f64, r: f64, branch: Branch) -> Complex64 {
    -(zeta * r).ln() / (2.0 * PI) + log_constant(branch)
}

/// `D(s) = R₊ − P₊` at `ζ|z| = s` and its first two derivatives in `s`.
///
/// Below the series switch the logarithm is cancelled inside the ascending series.
pub fn difference_derivatives(s: f64) -> Result<[Complex64; 3]> {
    check_arg(s)?;
    let i4 = Complex64::new(0.0, 0.25);
    if s < SERIES_SWITCH {
        let (jm1, s0) = series0(s);
        let (j1v, y1r) = series1(s);
        let l = (0.5 * s).ln() + EULER_GAMMA;
        let d0 = i4 * jm1 - (l * jm1 + s0) / (2.0 * PI);
        let d1 = -i4 * j1v + 0.25 * y1r;
        let y0 = 2.0 * FRAC_1_PI * (l * (1.0 + jm1) + s0);
        let d2 = -i4 * (1.0 + jm1 - j1v / s) + 0.25 * (y0 - y1r / s);
        Ok([d0, d1, d2])
    } else {
        let h0 = hankel0_plus(s);
        let h1 = Complex64::new(j1(s), y1_regular(s) - 2.0 * FRAC_1_PI / s);
        let d0 = i4 * h0 + s.ln() / (2.0 * PI) - log_constant(Branch::Plus);
        let d1 = -i4 * h1 + 1.0 / (2.0 * PI * s);
        let d2 = -i4 * (h0 - h1 / s) - 1.0 / (2.0 * PI * s * s);
        Ok([d0, d1, d2])
    }
}

/// `R±(ζ², z) − P±(ζ, z)`.
pub fn resolvent_minus_log(zeta: f64, z: [f64; 2], branch: Branch) -> Result<Complex64> {
    let r = z[0].hypot(z[1]);
    Ok(branch.apply(difference_derivatives(zeta * r)?[0]))
}

/// `∂ᵏ_ζ (R± − P±)(ζ, r) = rᵏ D⁽ᵏ⁾(ζ r)`.
pub fn difference_kernel(k: usize, zeta: f64, r: f64, branch: Branch) -> Result<Complex64> {
    if k > 2 {
        return Err(Error::OutOfRange(format!(
            "derivative order {k} not in 0..=2"
        )));
    }
    Ok(branch.apply(difference_derivatives(zeta * r)?[k] * r.powi(k as i32)))
}

/// Discretization of the doubly weighted Hilbert–Schmidt integral
/// `2π ∫∫ ⟨r₁⟩^{−2β} ⟨r₂⟩^{−2β} ∫₀^{2π} |K(|x − y|)|² dθ r₁ r₂ dr₁ dr₂`.
#[derive(Clone, Debug, Serialize)]
pub struct HsOptions {
    pub radius: f64,
    /// Radial panels, geometric from `inner` to `radius` after one panel on `[0, inner]`.
    pub radial_panels: usize,
    pub inner: f64,
    pub per_panel: usize,
    /// Angular panels on `[0, π]`, geometric toward `θ = 0`.
    pub angular_panels: usize,
    pub angular_min: f64,
}

impl Default for HsOptions {
    fn default() -> Self {
        Self {
            radius: 40.0,
            radial_panels: 24,
            inner: 0.05,
            per_panel: 8,
            angular_panels: 8,
            angular_min: 1e-3,
        }
    }
}

impl HsOptions {
    pub fn refined(&self) -> Self {
        Self {
            radial_panels: self.radial_panels * 3 / 2,
            per_panel: self.per_panel + 4,
            angular_panels: self.angular_panels * 3 / 2,
            ..self.clone()
        }
    }

    fn rules(&self) -> Result<(GaussRule, GaussRule)> {
        if !(self.radius > self.inner
            && self.inner > 0.0
            && self.radial_panels > 0
            && self.angular_panels > 0)
        {
            return Err(Error::Config(format!(
                "inconsistent HS discretization {self:?}"
            )));
        }
        let geo = |a: f64, b: f64, n: usize| -> Vec<f64> {
            (0..=n)
                .map(|i| a * (b / a).powf(i as f64 / n as f64))
                .collect()
        };
        let mut re = vec![0.0];
        re.extend(geo(self.inner, self.radius, self.radial_panels));
        let mut te = vec![0.0];
        te.extend(geo(self.angular_min, PI, self.angular_panels));
        Ok((
            GaussRule::composite(&re, self.per_panel),
            GaussRule::composite(&te, self.per_panel),
        ))
    }
}

/// Measured surrogate of `‖⟨x⟩^{−β} K ⟨y⟩^{−β}‖` for the three kernels `∂ᵏ_ζ(R₊ − P₊)`.
#[derive(Clone, Debug, Serialize)]
pub struct WeightedOperatorProbe {
    pub beta: f64,
    pub zeta: f64,
    pub radius: f64,
    pub norms: [f64; 3],
}

pub fn hs_norms(zeta: f64, beta: f64, opts: &HsOptions) -> Result<WeightedOperatorProbe> {
    let (rr, tr) = opts.rules()?;
    let w: Vec<f64> = rr
        .nodes
        .iter()
        .zip(&rr.weights)
        .map(|(&r, &wr)| r * (1.0 + r * r).powf(-beta) * wr)
        .collect();
    let cos: Vec<f64> = tr.nodes.iter().map(|t| t.cos()).collect();
    let n = rr.nodes.len();
    let rows: Vec<[f64; 3]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut acc = [0.0; 3];
            let ri = rr.nodes[i];
            for j in 0..=i {
                let rj = rr.nodes[j];
                let pair = if i == j { 1.0 } else { 2.0 } * w[i] * w[j];
                let mut ang = [0.0; 3];
                for (c, &wt) in cos.iter().zip(&tr.weights) {
                    let d = (ri * ri + rj * rj - 2.0 * ri * rj * c)
                        .max(0.0)
                        .sqrt()
                        .max(1e-7 / zeta.max(1e-300));
                    let dd = difference_derivatives((zeta * d).max(2.0 * ARG_RANGE.0))
                        .expect("range checked");
                    let mut dk = 1.0;
                    for k in 0..3 {
                        ang[k] += wt * (dd[k] * dk).norm_sqr();
                        dk *= d;
                    }
                }
                for k in 0..3 {
                    // θ ∈ [0, π] covers half the circle
                    acc[k] += pair * 2.0 * ang[k];
                }
            }
            acc
        })
        .collect();
    let mut s = [0.0; 3];
    for r in &rows {
        for k in 0..3 {
            s[k] += r[k];
        }
    }
    Ok(WeightedOperatorProbe {
        beta,
        zeta,
        radius: opts.radius,
        norms: s.map(|v| (2.0 * PI * v).sqrt()),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ThresholdFit {
    pub k: usize,
    pub beta: f64,
    pub zetas: Vec<f64>,
    pub norms: Vec<f64>,
    pub fit: DecayFit,
    /// Relative change of the surrogate at the middle `ζ` under refinement.
    pub refinement: f64,
}

/// Allowed relative change under refinement.
pub const REFINEMENT_TOL: f64 = 1e-2;

/// Fitted exponents of the weighted HS surrogate of `∂ᵏ_ζ(R± − P±)` for `k = 0, 1, 2`.
pub fn threshold_exponent_fits(
    beta: f64,
    zetas: &[f64],
    opts: &HsOptions,
) -> Result<[ThresholdFit; 3]> {
    if !(beta > 2.5) {
        return Err(Error::Config(format!(
            "weight beta = {beta} must exceed 5/2"
        )));
    }
    if zetas.is_empty() {
        return Err(Error::Config("empty zeta sweep".into()));
    }
    let probes: Vec<WeightedOperatorProbe> = zetas
        .iter()
        .map(|&z| hs_norms(z, beta, opts))
        .collect::<Result<_>>()?;
    let mid = zetas[zetas.len() / 2];
    let base = &probes[zetas.len() / 2];
    let fine = hs_norms(mid, beta, &opts.refined())?;
    let window = (
        zetas.iter().cloned().fold(f64::INFINITY, f64::min),
        zetas.iter().cloned().fold(0.0, f64::max),
    );
    let mut out = Vec::with_capacity(3);
    for k in 0..3 {
        let refinement = (fine.norms[k] - base.norms[k]).abs() / base.norms[k];
        if refinement > REFINEMENT_TOL {
            return Err(Error::Quadrature(format!(
                "HS surrogate for k = {k} moved by {refinement:.2e} under refinement"
            )));
        }
        let norms: Vec<f64> = probes.iter().map(|p| p.norms[k]).collect();
        let scale = norms.iter().cloned().fold(0.0, f64::max);
        let fit = fit_power_law(zetas, &norms, window, scale)?;
        out.push(ThresholdFit {
            k,
            beta,
            zetas: zetas.to_vec(),
            norms,
            fit,
            refinement,
        });
    }
    Ok(out.try_into().expect("three fits"))
}

pub fn threshold_exponent_fit(
    k: usize,
    beta: f64,
    zetas: &[f64],
    opts: &HsOptions,
) -> Result<ThresholdFit> {
    if k > 2 {
        return Err(Error::OutOfRange(format!(
            "derivative order {k} not in 0..=2"
        )));
    }
    let [a, b, c] = threshold_exponent_fits(beta, zetas, opts)?;
    Ok([a, b, c].into_iter().nth(k).expect("k <= 2"))
}

/// Barycentric Chebyshev interpolant of a smooth function on `[0, b]`.
#[derive(Clone, Debug)]
struct Chebyshev {
    b: f64,
    x: Vec<f64>,
    f: Vec<f64>,
}

impl Chebyshev {
    fn new<F: Fn(f64) -> Result<f64> + Sync>(b: f64, n: usize, f: F) -> Result<Self> {
        let x: Vec<f64> = (0..=n)
            .map(|j| 0.5 * b * (1.0 - (PI * j as f64 / n as f64).cos()))
            .collect();
        let f = x.par_iter().map(|&x| f(x)).collect::<Result<_>>()?;
        Ok(Self { b, x, f })
    }

    fn eval(&self, t: f64) -> f64 {
        if t >= self.b {
            return 0.0;
        }
        let n = self.x.len() - 1;
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..=n {
            let d = t - self.x[j];
            if d == 0.0 {
                return self.f[j];
            }
            let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
            if j == 0 || j == n {
                w *= 0.5;
            }
            num += w * self.f[j] / d;
            den += w / d;
        }
        num / den
    }
}

/// `ρ(r) = ∫₀^∞ ρ₁(k) J₀(kr) k dk`.
pub fn radial_density(profile: &RadialProfile, r: f64) -> Result<f64> {
    let kc = profile.cutoff();
    // panels short against the J₀ period up to r = 60
    let n = ((kc / 0.05).ceil() as usize).max(1);
    let edges: Vec<f64> = (0..=n).map(|i| kc * i as f64 / n as f64).collect();
    let v = GaussRule::composite(&edges, 16)
        .integrate(|k| profile.value(k) * crate::bessel::j0(k * r) * k);
    if !v.is_finite() {
        return Err(Error::Quadrature(format!("density at r = {r} not finite")));
    }
    Ok(v)
}

/// The charge density in a form cheap to evaluate anywhere.
#[derive(Clone, Debug)]
pub struct RadialDensity {
    table: Chebyshev,
    pub support: f64,
}

impl RadialDensity {
    pub fn new(profile: &RadialProfile) -> Result<Self> {
        // support: last radius on a coarse scan where |ρ| clears the transform noise
        let scan: Vec<(f64, f64)> = (0..=160)
            .map(|i| {
                let r = 0.25 * i as f64;
                radial_density(profile, r).map(|v| (r, v.abs()))
            })
            .collect::<Result<_>>()?;
        let peak = scan.iter().fold(0.0_f64, |m, v| m.max(v.1));
        let support = scan
            .iter()
            .filter(|v| v.1 > 1e-13 * peak)
            .map(|v| v.0)
            .fold(0.0, f64::max)
            + 1.0;
        let table = Chebyshev::new(support, 160, |r| radial_density(profile, r))?;
        Ok(Self { table, support })
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.table.eval(r)
    }
}

/// `g₀ϱ(y) · ŷ = −(1/2π) ∫ ln|y − x| ϱ(x) · ŷ dx = ½ ∫ r² ρ(r) min(r,|y|)/max(r,|y|) dr`.
pub fn log_convolution(rho: &RadialDensity, s: f64) -> Result<f64> {
    let tol = Tolerance::default();
    let f = |r: f64| {
        let ratio = if r < s { r / s } else { s / r };
        r * r * rho.eval(r) * ratio
    };
    let mut v = 0.0;
    if s > 0.0 && s < rho.support {
        v += adaptive(f, 0.0, s, tol)?.0 + adaptive(f, s, rho.support, tol)?.0;
    } else if s > 0.0 {
        v += adaptive(f, 0.0, rho.support, tol)?.0;
    }
    Ok(0.5 * v)
}

/// Angular averages of `ϱ · ŷ` on circles `|x − y| = d` around `y = (s, 0)`,
/// folded with the radial weights `d dd`. A radial kernel then acts by a dot product.
#[derive(Clone, Debug)]
pub struct RingProfile {
    pub s: f64,
    d: Vec<f64>,
    mass: Vec<f64>,
}

impl RingProfile {
    pub fn new(rho: &RadialDensity, s: f64) -> Self {
        let sup = rho.support;
        let lo = (s - sup).max(0.0);
        let hi = s + sup;
        // graded toward d = 0 for the logarithm
        let mut edges = vec![0.0];
        edges.extend((1..=24).rev().map(|j| 0.25 * 0.5f64.powi(j)));
        edges.push(0.25);
        if lo > 0.25 {
            edges.push(lo);
        }
        let lo = lo.max(0.25);
        let n = ((hi - lo) / 0.5).ceil() as usize;
        for i in 1..=n {
            edges.push(lo + (hi - lo) * i as f64 / n as f64);
        }
        let radial = GaussRule::composite(&edges, 10);
        let full: Vec<f64> = (0..96).map(|j| 2.0 * PI * j as f64 / 96.0).collect();
        let value = |d: f64, a: f64| {
            let x0 = s + d * a.cos();
            let r = x0.hypot(d * a.sin());
            // ϱ · ŷ = x₀ ρ(r)
            if r < sup {
                x0 * rho.eval(r)
            } else {
                0.0
            }
        };
        let mut d_out = Vec::with_capacity(radial.nodes.len());
        let mut mass = Vec::with_capacity(radial.nodes.len());
        for (&d, &w) in radial.nodes.iter().zip(&radial.weights) {
            // the circle meets the support where cos α < c
            let c = if s > 0.0 {
                (sup * sup - s * s - d * d) / (2.0 * s * d)
            } else {
                1.0
            };
            let ring = if c >= 1.0 {
                full.iter().map(|&a| value(d, a)).sum::<f64>() * (2.0 * PI / 96.0)
            } else if c <= -1.0 {
                0.0
            } else {
                // symmetric under α → −α
                let arc = GaussRule::composite(&[c.acos(), 0.5 * (c.acos() + PI), PI], 24);
                2.0 * arc.integrate(|a| value(d, a))
            };
            d_out.push(d);
            mass.push(ring * d * w);
        }
        Self { s, d: d_out, mass }
    }

    /// `∫ K(|x − y|) ϱ(x) · ŷ dx`.
    pub fn apply<K: Fn(f64) -> Complex64>(&self, kernel: K) -> Complex64 {
        self.d
            .iter()
            .zip(&self.mass)
            .map(|(&d, &m)| kernel(d) * m)
            .sum()
    }

    /// `[P±(μ) ϱ](y) · ŷ`.
    pub fn log_term(&self, mu: f64, branch: Branch) -> Complex64 {
        self.apply(|d| log_kernel(mu, d, branch))
    }

    /// `[(R₋(μ²) − P₋(μ)) ϱ](y) · ŷ`, the remainder `(g(iμ+0) − g₀)ϱ` for `μ > 0`.
    pub fn remainder(&self, mu: f64) -> Result<Complex64> {
        if !(mu > 0.0) {
            return Err(Error::OutOfRange(format!("mu = {mu} must be positive")));
        }
        Ok(self.apply(|d| {
            if d * mu > 2.0 * ARG_RANGE.0 {
                difference_derivatives(d * mu).expect("in range")[0].conj()
            } else {
                Complex64::default()
            }
        }))
    }
}

pub fn log_term_convolution(rho: &RadialDensity, mu: f64, s: f64, branch: Branch) -> Complex64 {
    RingProfile::new(rho, s).log_term(mu, branch)
}

pub fn smoothed_remainder(rho: &RadialDensity, mu: f64, s: f64) -> Result<Complex64> {
    RingProfile::new(rho, s).remainder(mu)
}

/// `g(λ)ϱ(y) · ŷ = −∫ ρ₁'(k) J₁(k s) k / (k² + λ²) dk` for `λ = iμ + ε`.
pub fn smoothed_resolvent_kspace(
    profile: &RadialProfile,
    mu: f64,
    eps: f64,
    s: f64,
) -> Result<Complex64> {
    let lam = Complex64::new(eps, mu);
    let f = |k: f64| -profile.derivative(k) * j1(k * s) * k / (k * k + lam * lam);
    let m = mu.abs();
    let kc = profile.cutoff();
    let mut breaks = vec![0.0];
    for w in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5] {
        if m - w > *breaks.last().expect("non-empty") {
            breaks.push(m - w);
        }
    }
    if m > 0.0 {
        breaks.push(m);
    }
    for w in [1e-5, 1e-4, 1e-3, 1e-2, 1e-1] {
        if m + w < kc {
            breaks.push(m + w);
        }
    }
    breaks.push(kc);
    let tol = Tolerance {
        abs: 1e-13,
        rel: 1e-11,
        max_intervals: 20000,
    };
    let re = crate::quadrature::adaptive_breaks(|k| f(k).re, &breaks, tol)?.0;
    let im = crate::quadrature::adaptive_breaks(|k| f(k).im, &breaks, tol)?.0;
    Ok(Complex64::new(re, im))
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothedOptions {
    pub beta: f64,
    /// Evaluation radii `|y| ≤ y_max`.
    pub y_max: f64,
    pub y_panels: usize,
    pub mus: Vec<f64>,
    /// Frequencies compared for the cancellation check.
    pub cancellation_mus: (f64, f64),
}

impl Default for SmoothedOptions {
    fn default() -> Self {
        Self {
            beta: 3.0,
            y_max: 40.0,
            y_panels: 8,
            mus: crate::fit::logspace(1e-3, 1e-1, 9),
            cancellation_mus: (1e-3, 1e-2),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SmoothedReport {
    /// `max_y |[P(μ₁)ϱ](y) − [P(μ₂)ϱ](y)|`.
    pub cancellation: f64,
    /// `max_y |[P(μ)ϱ](y) − g₀ϱ(y)|`.
    pub log_match: f64,
    pub mus: Vec<f64>,
    /// `‖⟨y⟩^{−β}(g(iμ+0) − g₀)ϱ‖_{L²}`.
    pub norms: Vec<f64>,
    pub fit: DecayFit,
}

pub fn smoothed_resolvent_asymptotics(
    c: &ChargeModel,
    opts: &SmoothedOptions,
) -> Result<SmoothedReport> {
    let rho = RadialDensity::new(c.profile())?;
    // y nodes: geometric panels on [0, y_max]
    let mut edges = vec![0.0];
    for i in 0..=opts.y_panels {
        edges.push(0.25 * (opts.y_max / 0.25).powf(i as f64 / opts.y_panels as f64));
    }
    let yr = GaussRule::composite(&edges, 8);

    let rings: Vec<RingProfile> = yr
        .nodes
        .par_iter()
        .map(|&s| RingProfile::new(&rho, s))
        .collect();
    let (m1, m2) = opts.cancellation_mus;
    let checks: Vec<(f64, f64)> = rings
        .par_iter()
        .map(|ring| {
            let p1 = ring.log_term(m1, Branch::Plus);
            let p2 = ring.log_term(m2, Branch::Plus);
            let pm = ring.log_term(m1, Branch::Minus);
            let g0 = log_convolution(&rho, ring.s)?;
            Ok(((p1 - p2).norm().max((p1 - pm).norm()), (p1 - g0).norm()))
        })
        .collect::<Result<_>>()?;
    let cancellation = checks.iter().fold(0.0_f64, |m, v| m.max(v.0));
    let log_match = checks.iter().fold(0.0_f64, |m, v| m.max(v.1));

    let norms: Vec<f64> = opts
        .mus
        .iter()
        .map(|&mu| {
            let vals: Vec<f64> = rings
                .par_iter()
                .map(|ring| ring.remainder(mu).map(|v| v.norm_sqr()))
                .collect::<Result<_>>()?;
            let mut acc = 0.0;
            for ((&s, &w), v) in yr.nodes.iter().zip(&yr.weights).zip(vals) {
                acc += w * s * (1.0 + s * s).powf(-opts.beta) * v;
            }
            Ok((2.0 * PI * acc).sqrt())
        })
        .collect::<Result<_>>()?;
    let window = (
        opts.mus.iter().cloned().fold(f64::INFINITY, f64::min),
        opts.mus.iter().cloned().fold(0.0, f64::max),
    );
    let scale = norms.iter().cloned().fold(0.0, f64::max);
    let fit = fit_power_law(&opts.mus, &norms, window, scale)?;
    Ok(SmoothedReport {
        cancellation,
        log_match,
        mus: opts.mus.clone(),
        norms,
        fit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HighEnergyReport {
    pub window: (f64, f64),
    pub kappa: DecayFit,
    pub numerator: DecayFit,
    pub nu_tilde: DecayFit,
}

/// Decay exponents of `|κ(iμ+0)|`, of the numerator of `ν̃` and of `ν̃` over `window`.
pub fn high_energy_decay(
    ev: &NuEvaluator,
    window: (f64, f64),
    samples: usize,
) -> Result<HighEnergyReport> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::Config(format!("bad window {window:?}")));
    }
    let mus = crate::fit::logspace(window.0, window.1, samples);
    let k: &KappaEvaluator = ev.kappa_evaluator();
    let rows: Vec<(f64, f64, f64)> = mus
        .par_iter()
        .map(|&m| {
            Ok((
                k.kappa(m)?.norm(),
                ev.numerator(m)?.norm(),
                ev.nu_tilde(m)?.norm(),
            ))
        })
        .collect::<Result<_>>()?;
    let col = |f: fn(&(f64, f64, f64)) -> f64| -> Result<DecayFit> {
        let ys: Vec<f64> = rows.iter().map(f).collect();
        let scale = ys.iter().cloned().fold(0.0, f64::max);
        fit_power_law(&mus, &ys, window, scale)
    };
    Ok(HighEnergyReport {
        window,
        kappa: col(|r| r.0)?,
        numerator: col(|r| r.1)?,
        nu_tilde: col(|r| r.2)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{j0, y0};
    use crate::fit::logspace;
    use crate::grid::SpectralGrid;
    use crate::laplace::{RadialWeight, SeparableData};

    #[test]
    fn hankel_small_argument() {
        let s: f64 = 1e-3;
        let h = hankel_h0(s, Branch::Plus).unwrap();
        let lead = Complex64::new(1.0, 2.0 / PI * ((0.5 * s).ln() + EULER_GAMMA));
        assert!((h - lead).norm() < 10.0 * s * s * s.ln().abs());
        assert!((h - lead).norm() > 0.1 * s * s);
        assert!(hankel_h0(1e-9, Branch::Plus).is_err());
        assert!(hankel_h0(2e4, Branch::Minus).is_err());
    }

    #[test]
    fn hankel_branches_and_first_zero() {
        // bisection on the series for the first zero of J0
        let (mut a, mut b) = (2.0, 3.0);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if (1.0 + series0(a).0) * (1.0 + series0(m).0) <= 0.0 {
                b = m;
            } else {
                a = m;
            }
        }
        assert!((a - 2.404825557695773).abs() < 1e-14);
        assert!(hankel_h0(a, Branch::Plus).unwrap().re.abs() < 1e-14);
        for &s in &[0.01, 1.0, 7.5, 20.0, 300.0] {
            let p = hankel_h0(s, Branch::Plus).unwrap();
            let m = hankel_h0(s, Branch::Minus).unwrap();
            assert_eq!(p.conj(), m);
            assert!((p.re - j0(s)).abs() < 1e-15 && (p.im - y0(s)).abs() < 1e-14);
        }
    }

    #[test]
    fn log_constants() {
        let h = log_constant(Branch::Plus);
        assert_eq!(h.im, 0.25);
        assert_eq!(log_constant(Branch::Minus), h.conj());
        // R₊ − P₊ → 0 at the threshold
        let d = resolvent_minus_log(1.0, [1e-6, 0.0], Branch::Plus).unwrap();
        assert!(d.norm() < 1e-10);
    }

    #[test]
    fn difference_matches_direct_form() {
        for &s in &[0.05, 0.7, 3.0, 12.9, 13.1, 40.0] {
            let direct =
                Complex64::new(0.0, 0.25) * hankel0_plus(s) - log_kernel(1.0, s, Branch::Plus);
            let d = difference_derivatives(s).unwrap()[0];
            assert!((d - direct).norm() < 1e-12, "{s}");
        }
    }

    #[test]
    fn difference_derivatives_by_finite_differences() {
        for &s in &[0.3, 2.0, 9.0, 12.99, 13.01, 25.0] {
            let d = difference_derivatives(s).unwrap();
            let h = 1e-4;
            let f = |x: f64| difference_derivatives(x).unwrap();
            let d1 = (f(s + h)[0] - f(s - h)[0]) / (2.0 * h);
            let d2 = (f(s + h)[1] - f(s - h)[1]) / (2.0 * h);
            assert!((d1 - d[1]).norm() < 1e-7, "{s}: {d1} vs {}", d[1]);
            assert!((d2 - d[2]).norm() < 1e-7, "{s}: {d2} vs {}", d[2]);
        }
    }

    #[test]
    fn pointwise_threshold_values() {
        let v = resolvent_minus_log(1.0, [1e-4, 0.0], Branch::Plus).unwrap();
        assert!(v.norm() < 1e-6);
        let p = resolvent_minus_log(0.5, [3.0, 4.0], Branch::Plus).unwrap();
        let m = resolvent_minus_log(0.5, [3.0, 4.0], Branch::Minus).unwrap();
        assert_eq!(p.conj(), m);
        let far = resolvent_minus_log(1.0, [10.0, 0.0], Branch::Plus).unwrap();
        let lg = 10f64.ln() / (2.0 * PI);
        assert!((far.re - lg).abs() < 0.1 * lg, "{far}");
    }

    #[test]
    fn hs_monotone_in_beta_and_stable() {
        let opts = HsOptions {
            radial_panels: 12,
            ..HsOptions::default()
        };
        let a = hs_norms(0.01, 2.6, &opts).unwrap();
        let b = hs_norms(0.01, 3.0, &opts).unwrap();
        let c = hs_norms(0.01, 4.0, &opts).unwrap();
        for k in 0..3 {
            assert!(a.norms[k] >= b.norms[k] && b.norms[k] >= c.norms[k]);
        }
    }

    #[test]
    fn hs_kernel_zero_at_threshold() {
        assert!(
            hs_norms(
                1e-7,
                3.0,
                &HsOptions {
                    radial_panels: 8,
                    ..HsOptions::default()
                }
            )
            .unwrap()
            .norms[0]
                < 1e-10
        );
    }

    fn density() -> RadialDensity {
        RadialDensity::new(&RadialProfile::reference()).unwrap()
    }

    #[test]
    fn reference_density_closed_form() {
        let rho = density();
        for &r in &[0.0, 0.5, 1.7, 3.0, 6.0, 11.0] {
            let exact = (0.5 - r * r / 8.0) * (-r * r / 4.0f64).exp();
            assert!((rho.eval(r) - exact).abs() < 1e-13, "{r}");
        }
    }

    #[test]
    fn log_convolution_two_routes() {
        let rho = density();
        let p = RadialProfile::reference();
        for &s in &[0.3, 1.0, 2.5, 7.0, 20.0] {
            let a = log_convolution(&rho, s).unwrap();
            let b = smoothed_resolvent_kspace(&p, 0.0, 0.0, s).unwrap();
            assert!((a - b.re).abs() < 1e-10 && b.im == 0.0, "{s}: {a} vs {b}");
        }
        // g₀ kernel vanishes at unit distance
        assert_eq!(
            log_kernel(1.0, 1.0, Branch::Plus) - log_constant(Branch::Plus),
            Complex64::default()
        );
    }

    #[test]
    fn log_term_cancels() {
        let rho = density();
        for &s in &[0.5, 2.0, 9.0] {
            let a = log_term_convolution(&rho, 1e-3, s, Branch::Plus);
            let b = log_term_convolution(&rho, 1e-2, s, Branch::Plus);
            let g0 = log_convolution(&rho, s).unwrap();
            assert!((a - b).norm() < 1e-10, "{s}");
            assert!((a - g0).norm() < 1e-8, "{s}: {a} vs {g0}");
        }
    }

    #[test]
    fn remainder_matches_epsilon_limit() {
        let rho = density();
        let p = RadialProfile::reference();
        for &(mu, s) in &[(0.05, 1.0), (0.3, 2.0), (1.0, 4.0)] {
            let x = log_convolution(&rho, s).unwrap() + smoothed_remainder(&rho, mu, s).unwrap();
            let k = 2.0 * smoothed_resolvent_kspace(&p, mu, 5e-7, s).unwrap()
                - smoothed_resolvent_kspace(&p, mu, 1e-6, s).unwrap();
            assert!((x - k).norm() < 1e-8, "mu {mu} s {s}: {x} vs {k}");
        }
    }

    #[test]
    fn high_energy_rates() {
        let g = SpectralGrid::new(32, 20.0).unwrap();
        let c = ChargeModel::reference(&g).unwrap();
        let data = SeparableData {
            a: 0.0,
            b: 0.5,
            phi_lambda: RadialWeight::one(),
            phi_pi: RadialWeight::gaussian(1.0),
        };
        let ev = NuEvaluator::new(&c, 10.0, data).unwrap();
        let r = high_energy_decay(&ev, (20.0, 200.0), 12).unwrap();
        assert!((r.kappa.exponent + 2.0).abs() < 0.05, "{:?}", r.kappa);
        assert!(r.numerator.exponent <= -1.7 && r.nu_tilde.exponent <= -1.7);
    }

    #[test]
    fn threshold_fit_small() {
        let zetas = logspace(1e-3, 1e-1, 8);
        let opts = HsOptions {
            radial_panels: 12,
            ..HsOptions::default()
        };
        let f = threshold_exponent_fit(0, 3.0, &zetas, &opts);
        assert!(f.is_ok(), "{f:?}");
        assert!(threshold_exponent_fit(0, 2.0, &zetas, &opts).is_err());
        assert!(threshold_exponent_fit(3, 3.0, &zetas, &opts).is_err());
    }
}
