//! Boundary values on the line `λ = iμ + 0` and inversion back to `ν(t)`.
//!
//! Every pairing reduces to `F_φ(μ) = 2π ∫ ρ₁'(k)² φ(k) k / (k² − μ² + i0 sgn μ) dk`,
//! evaluated in `u = k²` as a principal value plus the Sokhotski–Plemelj residue.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::charge::{ChargeModel, RadialProfile};
use crate::free_wave::UniformSeries;
use crate::grid::{FieldPair, VectorField};
use crate::quadrature::{adaptive, GaussRule, Tolerance};
use crate::{Error, Result};

type WeightFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Radial weight `φ(|k|)` of the separable initial data.
#[derive(Clone)]
pub struct RadialWeight {
    f: WeightFn,
    label: String,
}

impl fmt::Debug for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialWeight({})", self.label)
    }
}

impl RadialWeight {
    pub fn one() -> Self {
        Self::new("1", |_| 1.0)
    }

    /// `exp(−width k²)`.
    pub fn gaussian(width: f64) -> Self {
        Self::new(&format!("exp(-{width}k^2)"), move |k| {
            (-width * k * k).exp()
        })
    }

    pub fn new<F: Fn(f64) -> f64 + Send + Sync + 'static>(label: &str, f: F) -> Self {
        Self {
            f: Arc::new(f),
            label: label.to_string(),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, k: f64) -> f64 {
        (self.f)(k)
    }
}

fn tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-15,
        rel: 1e-12,
        max_intervals: 4000,
    }
}

/// `κ(iμ+0)` and the weighted pairings `F_φ(μ)`.
#[derive(Clone, Debug)]
pub struct KappaEvaluator {
    profile: RadialProfile,
    u_cut: f64,
}

impl KappaEvaluator {
    pub fn new(c: &ChargeModel) -> Self {
        Self::from_profile(c.profile().clone())
    }

    pub fn from_profile(profile: RadialProfile) -> Self {
        let kc = profile.cutoff();
        Self {
            profile,
            u_cut: kc * kc,
        }
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    fn density(&self, u: f64, phi: &RadialWeight) -> f64 {
        let k = u.max(0.0).sqrt();
        let d = self.profile.derivative(k);
        d * d * phi.eval(k)
    }

    /// `F_φ(μ)`; for `φ = 1` this is `κ(iμ+0)`.
    pub fn pairing(&self, mu: f64, phi: &RadialWeight) -> Result<Complex64> {
        if !mu.is_finite() {
            return Err(Error::OutOfRange(format!("mu = {mu}")));
        }
        let g = |u: f64| self.density(u, phi);
        let s = mu * mu;
        let uc = self.u_cut;
        let tol = tolerance();
        let re = if s == 0.0 {
            adaptive(|u| if u > 0.0 { g(u) / u } else { 0.0 }, 0.0, uc, tol)?.0
        } else if s < uc {
            let gs = g(s);
            let w = (2.0 * s).min(uc);
            let sub = |u: f64| {
                let d = u - s;
                if d == 0.0 {
                    0.0
                } else {
                    (g(u) - gs) / d
                }
            };
            let mut v = adaptive(sub, 0.0, s, tol)?.0 + adaptive(sub, s, w, tol)?.0;
            v += gs * ((w - s) / s).ln();
            if w < uc {
                v += adaptive(|u| g(u) / (u - s), w, uc, tol)?.0;
            }
            v
        } else {
            adaptive(|u| g(u) / (u - s), 0.0, uc, tol)?.0
        };
        let im = if s < uc {
            -PI * PI * mu.signum() * g(s)
        } else {
            0.0
        };
        let v = Complex64::new(PI * re, im);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Quadrature(format!("F({mu}) = {v}")));
        }
        Ok(v)
    }

    pub fn kappa(&self, mu: f64) -> Result<Complex64> {
        self.pairing(mu, &RadialWeight::one())
    }

    /// `2π ∫ ρ₁'² φ k^{2j+1} dk`, the coefficients of the large-μ expansion of `F_φ`.
    pub fn moment(&self, phi: &RadialWeight, j: i32) -> Result<f64> {
        let g = |u: f64| self.density(u, phi) * u.powi(j);
        Ok(PI * adaptive(g, 0.0, self.u_cut, tolerance())?.0)
    }
}

pub fn kappa_line(c: &ChargeModel, mu: f64) -> Result<Complex64> {
    KappaEvaluator::new(c).kappa(mu)
}

/// Minimum of `|I + κ(iμ+0)|` over a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct NondegeneracyReport {
    pub min_abs: f64,
    pub argmin: f64,
    pub threshold: f64,
    pub holds: bool,
}

pub const NONDEGENERACY_THRESHOLD: f64 = 1e-6;

pub fn check_nondegeneracy(
    c: &ChargeModel,
    inertia: f64,
    mus: &[f64],
) -> Result<NondegeneracyReport> {
    if mus.is_empty() {
        return Err(Error::Config("empty mu sweep".into()));
    }
    let ev = KappaEvaluator::new(c);
    let vals: Vec<(f64, f64)> = mus
        .par_iter()
        .map(|&m| ev.kappa(m).map(|k| (m, (inertia + k).norm())))
        .collect::<Result<_>>()?;
    let (argmin, min_abs) =
        vals.into_iter().fold(
            (f64::NAN, f64::INFINITY),
            |a, b| if b.1 < a.1 { b } else { a },
        );
    Ok(NondegeneracyReport {
        min_abs,
        argmin,
        threshold: NONDEGENERACY_THRESHOLD,
        holds: min_abs > NONDEGENERACY_THRESHOLD,
    })
}

/// `Λ̂₀ = a Jϱ̂ φ_Λ(|k|)`, `Π̂₀ = b Jϱ̂ φ_Π(|k|)`.
#[derive(Clone, Debug)]
pub struct SeparableData {
    pub a: f64,
    pub b: f64,
    pub phi_lambda: RadialWeight,
    pub phi_pi: RadialWeight,
}

impl SeparableData {
    pub fn zero() -> Self {
        Self {
            a: 0.0,
            b: 0.0,
            phi_lambda: RadialWeight::one(),
            phi_pi: RadialWeight::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.a == 0.0 && self.b == 0.0
    }

    /// The data as a spectral field pair on the charge's grid.
    pub fn field_pair(&self, c: &ChargeModel) -> FieldPair {
        let g = c.grid();
        let jv = c.j_varrho_hat();
        let build = |amp: f64, phi: &RadialWeight| {
            VectorField::from_spectral_fn(g, |i| {
                let w = amp * phi.eval(g.knorm(i));
                [w * jv.comp(0)[i], w * jv.comp(1)[i]]
            })
        };
        FieldPair {
            a: build(self.a, &self.phi_lambda),
            pi: build(self.b, &self.phi_pi),
        }
    }
}

/// `ν̃(iμ+0) = ⟨K̂₀/(k² + λ²), Jϱ̂⟩ / (I + κ)` for separable data.
#[derive(Clone, Debug)]
pub struct NuEvaluator {
    kappa: KappaEvaluator,
    inertia: f64,
    data: SeparableData,
}

impl NuEvaluator {
    pub fn new(c: &ChargeModel, inertia: f64, data: SeparableData) -> Result<Self> {
        if !(inertia > 0.0) {
            return Err(Error::Config(format!(
                "moment of inertia must be positive, got {inertia}"
            )));
        }
        Ok(Self {
            kappa: KappaEvaluator::new(c),
            inertia,
            data,
        })
    }

    pub fn kappa_evaluator(&self) -> &KappaEvaluator {
        &self.kappa
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn data(&self) -> &SeparableData {
        &self.data
    }

    /// `iμ a F_Λ(μ) + b F_Π(μ)`.
    pub fn numerator(&self, mu: f64) -> Result<Complex64> {
        let mut v = Complex64::default();
        if self.data.a != 0.0 {
            v += Complex64::new(0.0, mu)
                * self.data.a
                * self.kappa.pairing(mu, &self.data.phi_lambda)?;
        }
        if self.data.b != 0.0 {
            v += self.data.b * self.kappa.pairing(mu, &self.data.phi_pi)?;
        }
        Ok(v)
    }

    pub fn nu_tilde(&self, mu: f64) -> Result<Complex64> {
        if self.data.is_zero() {
            return Ok(Complex64::default());
        }
        let d = self.inertia + self.kappa.kappa(mu)?;
        if d.norm() < NONDEGENERACY_THRESHOLD {
            return Err(Error::Degenerate(d.norm()));
        }
        Ok(self.numerator(mu)? / d)
    }

    /// Coefficients of `ν̃ = ν₀/λ + ν₁/λ² + ν₂/λ³ + O(λ⁻⁴)`, `λ = iμ`.
    pub fn large_mu_coefficients(&self) -> Result<[f64; 3]> {
        let i = self.inertia;
        let d = &self.data;
        let (m_l, m3_l) = if d.a != 0.0 {
            (
                self.kappa.moment(&d.phi_lambda, 0)?,
                self.kappa.moment(&d.phi_lambda, 1)?,
            )
        } else {
            (0.0, 0.0)
        };
        let m_p = if d.b != 0.0 {
            self.kappa.moment(&d.phi_pi, 0)?
        } else {
            0.0
        };
        let m1 = self.kappa.moment(&RadialWeight::one(), 0)?;
        let nu0 = d.a * m_l / i;
        let nu1 = d.b * m_p / i;
        let nu2 = -(d.a * m3_l + nu0 * m1) / i;
        Ok([nu0, nu1, nu2])
    }
}

pub fn nu_tilde_line(
    c: &ChargeModel,
    inertia: f64,
    data: &SeparableData,
    mu: f64,
) -> Result<Complex64> {
    NuEvaluator::new(c, inertia, data.clone())?.nu_tilde(mu)
}

/// `h(λ) = Σ αₙ/(λ+1)ⁿ` sharing the first three large-λ coefficients of `ν̃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailModel {
    pub alpha: [f64; 3],
}

impl TailModel {
    pub fn from_coefficients(nu: [f64; 3]) -> Self {
        Self {
            alpha: [nu[0], nu[0] + nu[1], nu[0] + 2.0 * nu[1] + nu[2]],
        }
    }

    pub fn eval(&self, mu: f64) -> Complex64 {
        let q = Complex64::new(1.0, mu).inv();
        q * (self.alpha[0] + q * (self.alpha[1] + q * self.alpha[2]))
    }

    /// Inverse transform `(α₁ + α₂ t + α₃ t²/2) e^{−t}`.
    pub fn inverse(&self, t: f64) -> f64 {
        (self.alpha[0] + t * (self.alpha[1] + 0.5 * t * self.alpha[2])) * (-t).exp()
    }
}

#[derive(Clone, Debug)]
pub struct InversionOptions {
    pub mu_max: f64,
    /// Left end of the geometric panels toward `μ = 0`.
    pub mu_min: f64,
    pub geometric_panels: usize,
    /// Geometric panels stop here.
    pub mu_knee: f64,
    pub fine_width: f64,
    /// Fine panels stop here.
    pub mu_fine: f64,
    pub coarse_width: f64,
    pub per_panel: usize,
    /// Largest admissible `|ν̃ − h|` at `μ_max`.
    pub budget: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self {
            mu_max: 200.0,
            mu_min: 1e-8,
            geometric_panels: 60,
            mu_knee: 0.5,
            fine_width: 0.01,
            mu_fine: 12.0,
            coarse_width: 0.02,
            per_panel: 12,
            budget: 1e-8,
        }
    }
}

impl InversionOptions {
    fn rule(&self) -> Result<GaussRule> {
        let ok = self.mu_min > 0.0
            && self.mu_min < self.mu_knee
            && self.mu_knee < self.mu_fine
            && self.mu_fine < self.mu_max
            && self.fine_width > 0.0
            && self.coarse_width > 0.0
            && self.geometric_panels > 0
            && self.per_panel > 0;
        if !ok {
            return Err(Error::Config(format!(
                "inconsistent inversion grid {self:?}"
            )));
        }
        // geometric toward 0 until a panel would exceed the fine width
        let mut edges = vec![0.0, self.mu_min];
        let q = (self.mu_knee / self.mu_min).powf(1.0 / self.geometric_panels as f64);
        loop {
            let last = *edges.last().expect("non-empty");
            let next = last * q;
            if next - last > self.fine_width || next >= self.mu_knee {
                break;
            }
            edges.push(next);
        }
        let push_uniform = |edges: &mut Vec<f64>, to: f64, w: f64| {
            let from = *edges.last().expect("non-empty");
            let n = ((to - from) / w).ceil().max(1.0) as usize;
            for i in 1..=n {
                edges.push(from + (to - from) * i as f64 / n as f64);
            }
        };
        push_uniform(&mut edges, self.mu_fine, self.fine_width);
        push_uniform(&mut edges, self.mu_max, self.coarse_width);
        Ok(GaussRule::composite(&edges, self.per_panel))
    }
}

/// `ν(t)` on a uniform time grid together with the spectral samples used.
#[derive(Clone, Debug)]
pub struct NuInversion {
    pub nu: UniformSeries,
    pub mu: Vec<f64>,
    pub nu_tilde: Vec<Complex64>,
    pub tail: TailModel,
    /// `|ν̃ − h|` at `μ_max`.
    pub truncation: f64,
}

const RESYNC: usize = 256;
const NODE_CHUNK: usize = 512;

/// `ν(tₙ) = (1/π) Re ∫₀^{μmax} e^{iμt}(ν̃ − h) dμ + h⁻¹(t)` at `tₙ = n dt`, `n = 0..=steps`.
pub fn invert_nu(
    ev: &NuEvaluator,
    dt: f64,
    steps: usize,
    opts: &InversionOptions,
) -> Result<NuInversion> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    if ev.data.is_zero() {
        return Ok(NuInversion {
            nu: UniformSeries::new(dt, vec![0.0; steps + 1]),
            mu: Vec::new(),
            nu_tilde: Vec::new(),
            tail: TailModel { alpha: [0.0; 3] },
            truncation: 0.0,
        });
    }
    let rule = opts.rule()?;
    let tail = TailModel::from_coefficients(ev.large_mu_coefficients()?);
    let truncation = (ev.nu_tilde(opts.mu_max)? - tail.eval(opts.mu_max)).norm();
    if truncation > opts.budget {
        return Err(Error::Budget(format!(
            "|nu~ - h| = {truncation:.3e} at mu_max = {} exceeds {:.1e}",
            opts.mu_max, opts.budget
        )));
    }
    for &m in &[0.3, 1.7, 9.0] {
        let p = ev.nu_tilde(m)?;
        let q = ev.nu_tilde(-m)?;
        if (p.conj() - q).norm() > 1e-10 * p.norm().max(1e-300) {
            return Err(Error::Quadrature(format!(
                "nu~ violates conjugate symmetry at mu = {m}: {p} vs {q}"
            )));
        }
    }
    let values: Vec<Complex64> = rule
        .nodes
        .par_iter()
        .map(|&m| ev.nu_tilde(m))
        .collect::<Result<_>>()?;
    let weighted: Vec<(f64, Complex64)> = rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .zip(&values)
        .map(|((&m, &w), &v)| (m, w * (v - tail.eval(m))))
        .collect();
    let partial: Vec<Vec<f64>> = weighted
        .par_chunks(NODE_CHUNK)
        .map(|chunk| {
            let mut acc = vec![0.0; steps + 1];
            for &(m, z) in chunk {
                let rot = Complex64::cis(m * dt);
                let mut ph = Complex64::new(1.0, 0.0);
                for (n, a) in acc.iter_mut().enumerate() {
                    if n % RESYNC == 0 {
                        ph = Complex64::cis(m * dt * n as f64);
                    }
                    *a += (z * ph).re;
                    ph *= rot;
                }
            }
            acc
        })
        .collect();
    let mut nu = vec![0.0; steps + 1];
    for p in &partial {
        for (a, b) in nu.iter_mut().zip(p) {
            *a += b;
        }
    }
    for (n, v) in nu.iter_mut().enumerate() {
        *v = *v / PI + tail.inverse(n as f64 * dt);
    }
    Ok(NuInversion {
        nu: UniformSeries::new(dt, nu),
        mu: rule.nodes,
        nu_tilde: values,
        tail,
        truncation,
    })
}

/// `ν(tₙ)` at `tₙ = n dt` from the trapezoid rule over the whole line on the uniform grid
/// `μⱼ = j δμ`, `δμ = 2π/(P dt)`, summed by one FFT of length `P`.
///
/// The rule returns the periodization `Σₘ ν(t + mP dt)` exactly up to the truncation at
/// `μ_max`; causality removes `m < 0`, and `P dt ≥ period_factor · steps · dt` keeps the
/// `m ≥ 1` images at the level of `ν(P dt)`.
pub fn invert_nu_periodized(
    ev: &NuEvaluator,
    dt: f64,
    steps: usize,
    mu_max: f64,
    period_factor: f64,
    budget: f64,
) -> Result<NuInversion> {
    if !(dt > 0.0) || !(period_factor >= 2.0) {
        return Err(Error::Config(format!(
            "dt = {dt}, period factor = {period_factor}"
        )));
    }
    if ev.data.is_zero() {
        return Ok(NuInversion {
            nu: UniformSeries::new(dt, vec![0.0; steps + 1]),
            mu: Vec::new(),
            nu_tilde: Vec::new(),
            tail: TailModel { alpha: [0.0; 3] },
            truncation: 0.0,
        });
    }
    if mu_max * dt >= PI {
        return Err(Error::UnderSampled(format!(
            "mu_max = {mu_max} beyond the Nyquist limit of dt = {dt}"
        )));
    }
    let p = ((period_factor * (steps + 1) as f64).ceil() as usize).next_power_of_two();
    let dmu = 2.0 * PI / (p as f64 * dt);
    let jmax = (mu_max / dmu).floor() as usize;
    let tail = TailModel::from_coefficients(ev.large_mu_coefficients()?);
    let mu: Vec<f64> = (0..=jmax).map(|j| j as f64 * dmu).collect();
    let values: Vec<Complex64> = mu
        .par_iter()
        .map(|&m| ev.nu_tilde(m))
        .collect::<Result<_>>()?;
    let truncation = (values[jmax] - tail.eval(mu[jmax])).norm();
    if truncation > budget {
        return Err(Error::Budget(format!(
            "|nu~ - h| = {truncation:.3e} at mu_max = {mu_max} exceeds {budget:.1e}"
        )));
    }
    let mut buf = vec![Complex64::default(); p];
    for (j, (&m, &v)) in mu.iter().zip(&values).enumerate() {
        buf[j] = v - tail.eval(m);
    }
    let r0 = buf[0].re;
    FftPlanner::new().plan_fft_inverse(p).process(&mut buf);
    let nu: Vec<f64> = (0..=steps)
        .map(|n| dmu / (2.0 * PI) * (2.0 * buf[n].re - r0) + tail.inverse(n as f64 * dt))
        .collect();
    Ok(NuInversion {
        nu: UniformSeries::new(dt, nu),
        mu,
        nu_tilde: values,
        tail,
        truncation,
    })
}

/// CSV of `(μ, Re κ, Im κ, Re ν̃, Im ν̃)`.
pub fn write_line_csv<W: Write>(
    out: &mut W,
    header_comment: &str,
    ev: &NuEvaluator,
    mus: &[f64],
) -> Result<()> {
    let rows: Vec<(f64, Complex64, Complex64)> = mus
        .par_iter()
        .map(|&m| Ok((m, ev.kappa.kappa(m)?, ev.nu_tilde(m)?)))
        .collect::<Result<_>>()?;
    writeln!(out, "# {header_comment}")?;
    writeln!(out, "mu,re_kappa,im_kappa,re_nu_tilde,im_nu_tilde")?;
    for (m, k, n) in rows {
        writeln!(
            out,
            "{m:.10e},{:.17e},{:.17e},{:.17e},{:.17e}",
            k.re, k.im, n.re, n.im
        )?;
    }
    Ok(())
}

/// CSV of `(t, ν_laplace, ν_timedomain)` on the common time samples.
pub fn write_nu_csv<W: Write>(
    out: &mut W,
    header_comment: &str,
    laplace: &UniformSeries,
    dynamics: &UniformSeries,
    every: usize,
) -> Result<()> {
    if (laplace.dt - dynamics.dt).abs() > 1e-12 * laplace.dt {
        return Err(Error::Config(format!(
            "time steps differ: {} vs {}",
            laplace.dt, dynamics.dt
        )));
    }
    writeln!(out, "# {header_comment}")?;
    writeln!(out, "t,nu_laplace,nu_timedomain")?;
    let n = laplace.values.len().min(dynamics.values.len());
    for i in (0..n).step_by(every.max(1)) {
        writeln!(
            out,
            "{:.6},{:.17e},{:.17e}",
            i as f64 * laplace.dt,
            laplace.values[i],
            dynamics.values[i]
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::{fit_power_law, logspace, smoothness_probe};
    use crate::grid::SpectralGrid;
    use crate::quadrature::adaptive_breaks;

    fn charge() -> ChargeModel {
        ChargeModel::reference(&SpectralGrid::new(64, 40.0).unwrap()).unwrap()
    }

    fn reference_rho_prime(k: f64) -> f64 {
        (2.0 * k - 2.0 * k.powi(3)) * (-k * k).exp()
    }

    /// `κ(iμ + ε)` straight from the k-integral.
    fn kappa_direct(mu: f64, eps: f64) -> Complex64 {
        let lam = Complex64::new(eps, mu);
        let f = |k: f64| {
            let d = reference_rho_prime(k);
            2.0 * PI * d * d * k / (k * k + lam * lam)
        };
        let m = mu.abs();
        let mut breaks = vec![0.0];
        for w in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
            if m - w > *breaks.last().unwrap() {
                breaks.push(m - w);
            }
        }
        breaks.push(m);
        for w in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1] {
            breaks.push(m + w);
        }
        breaks.push(8.0);
        let tol = Tolerance {
            abs: 1e-12,
            rel: 1e-10,
            max_intervals: 20000,
        };
        let re = adaptive_breaks(|k| f(k).re, &breaks, tol).unwrap().0;
        let im = adaptive_breaks(|k| f(k).im, &breaks, tol).unwrap().0;
        Complex64::new(re, im)
    }

    #[test]
    fn kappa_at_zero_is_pi() {
        let k = kappa_line(&charge(), 0.0).unwrap();
        assert!((k.re - PI).abs() < 1e-10 && k.im == 0.0, "{k}");
        let c = charge();
        let near = kappa_line(&c, 1e-6).unwrap();
        assert!((near - k).norm() < 1e-8);
    }

    #[test]
    fn kappa_matches_epsilon_limit() {
        let ev = KappaEvaluator::new(&charge());
        for &mu in &[0.3, 0.8, 1.0, 1.5, 2.5, -0.7] {
            let a = ev.kappa(mu).unwrap();
            // first-order extrapolation of the ε → 0 limit
            let b = 2.0 * kappa_direct(mu, 5e-6) - kappa_direct(mu, 1e-5);
            assert!((a - b).norm() < 1e-6 * PI, "mu {mu}: {a} vs {b}");
        }
    }

    #[test]
    fn kappa_imaginary_part() {
        let ev = KappaEvaluator::new(&charge());
        assert!(ev.kappa(1.0).unwrap().im.abs() < 1e-30);
        for &mu in &[0.2f64, 0.5, 2.0, -1.3] {
            let d = reference_rho_prime(mu.abs());
            let want = -PI * PI * mu.signum() * d * d;
            assert!((ev.kappa(mu).unwrap().im - want).abs() < 1e-14);
        }
    }

    #[test]
    fn kappa_threshold_smoothness() {
        let ev = KappaEvaluator::new(&charge());
        let f = |m: f64| ev.kappa(m).unwrap();
        // κ' is continuous through 0 with a μ log μ modulus: one-sided values shrink together
        let mut last = f64::INFINITY;
        for &d in &[1e-3, 1e-5, 1e-7] {
            let right = smoothness_probe(f, d, 1, 0.5 * d, (0.0, 10.0)).unwrap();
            let left = smoothness_probe(f, -d, 1, 0.5 * d, (-10.0, 0.0)).unwrap();
            let gap = (right.value - left.value).norm();
            assert!(gap < 0.1 * last, "{d}: {right:?} {left:?}");
            last = gap;
        }
        assert!(last < 1e-3, "{last}");
        for &m in &[-7.0, -2.0, -0.5, 0.5, 3.0, 9.0] {
            let p = smoothness_probe(f, m, 2, 1e-3, (-10.0, 10.0)).unwrap();
            assert!(
                p.value.norm() < 1e3 && p.error < 1e-3 * p.value.norm().max(1.0),
                "{m}: {p:?}"
            );
        }
    }

    #[test]
    fn threshold_remainder_rate() {
        let ev = KappaEvaluator::new(&charge());
        let phi = RadialWeight::gaussian(0.5);
        let f0 = ev.pairing(0.0, &phi).unwrap();
        let mus = logspace(1e-3, 1e-1, 12);
        let ys: Vec<f64> = mus
            .iter()
            .map(|&m| (ev.pairing(m, &phi).unwrap() - f0).norm())
            .collect();
        let fit = fit_power_law(&mus, &ys, (1e-3, 1e-1), 1.0).unwrap();
        assert!(fit.exponent >= 1.4, "{fit:?}");
    }

    #[test]
    fn nondegeneracy_sweeps() {
        let c = charge();
        let mus: Vec<f64> = (0..=400).map(|i| -50.0 + 0.25 * i as f64).collect();
        let r = check_nondegeneracy(&c, 1.0, &mus).unwrap();
        assert!(r.holds && r.min_abs > 0.0);
        let r = check_nondegeneracy(&c, 1e6, &mus).unwrap();
        assert!((r.min_abs - 1e6).abs() < 10.0);
        let r = check_nondegeneracy(&c, 1.0, &[0.0]).unwrap();
        assert!((r.min_abs - (1.0 + PI)).abs() < 1e-10);
    }

    fn sample_data() -> SeparableData {
        SeparableData {
            a: 0.3,
            b: 0.5,
            phi_lambda: RadialWeight::gaussian(0.5),
            phi_pi: RadialWeight::gaussian(1.0),
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let c = charge();
        let ev = NuEvaluator::new(&c, 1.0, SeparableData::zero()).unwrap();
        assert_eq!(ev.nu_tilde(0.7).unwrap(), Complex64::default());
        let inv = invert_nu(&ev, 0.1, 10, &InversionOptions::default()).unwrap();
        assert!(inv.nu.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn nu_tilde_conjugate_symmetry() {
        let c = charge();
        let ev = NuEvaluator::new(&c, 2.0, sample_data()).unwrap();
        for &m in &[1e-4, 0.4, 1.0, 2.2, 30.0] {
            let p = ev.nu_tilde(m).unwrap();
            let q = ev.nu_tilde(-m).unwrap();
            assert!((p.conj() - q).norm() <= 1e-10 * p.norm(), "{m}");
        }
    }

    #[test]
    fn nu_tilde_small_mu() {
        let c = charge();
        let d = sample_data();
        let inertia = 2.0;
        let ev = NuEvaluator::new(&c, inertia, d.clone()).unwrap();
        let ke = ev.kappa_evaluator();
        let fl = ke.pairing(0.0, &d.phi_lambda).unwrap().re;
        let fp = ke.pairing(0.0, &d.phi_pi).unwrap().re;
        for &m in &[1e-3, 3e-3, 1e-2] {
            let lead = Complex64::new(d.b * fp, m * d.a * fl) / (inertia + PI);
            let v = ev.nu_tilde(m).unwrap();
            assert!((v - lead).norm() < 5.0 * m.powf(1.5), "{m}: {v} vs {lead}");
        }
    }

    #[test]
    fn nu_tilde_high_energy_rate() {
        let c = charge();
        let ev = NuEvaluator::new(&c, 1.0, sample_data()).unwrap();
        let mus = logspace(20.0, 200.0, 16);
        let ys: Vec<f64> = mus
            .iter()
            .map(|&m| ev.nu_tilde(m).unwrap().norm())
            .collect();
        let f = fit_power_law(&mus, &ys, (20.0, 200.0), 1.0).unwrap();
        // a ≠ 0 makes the leading term ν₀/λ
        assert!((f.exponent + 1.0).abs() < 0.05, "{f:?}");
        let d = SeparableData {
            a: 0.0,
            ..sample_data()
        };
        let ev = NuEvaluator::new(&c, 1.0, d).unwrap();
        let ys: Vec<f64> = mus
            .iter()
            .map(|&m| ev.nu_tilde(m).unwrap().norm())
            .collect();
        let f = fit_power_law(&mus, &ys, (20.0, 200.0), 1.0).unwrap();
        assert!(f.exponent <= -1.8, "{f:?}");
    }

    #[test]
    fn tail_model_matches_large_mu() {
        let c = charge();
        let ev = NuEvaluator::new(&c, 1.5, sample_data()).unwrap();
        let h = TailModel::from_coefficients(ev.large_mu_coefficients().unwrap());
        let r1 = (ev.nu_tilde(50.0).unwrap() - h.eval(50.0)).norm();
        let r2 = (ev.nu_tilde(100.0).unwrap() - h.eval(100.0)).norm();
        // O(μ⁻⁴) residual
        assert!(r1 / r2 > 12.0 && r1 / r2 < 20.0, "{r1} {r2}");
        // inverse transform of the absolutely integrable part against direct quadrature;
        // the 1/(1 + iμ) term inverts to e^{-t} in closed form
        let h = TailModel {
            alpha: [0.0, h.alpha[1], h.alpha[2]],
        };
        let t = 1.3;
        let mut s = 0.0;
        let rule =
            GaussRule::composite(&(0..=40000).map(|i| i as f64 * 0.05).collect::<Vec<_>>(), 8);
        for (&m, &w) in rule.nodes.iter().zip(&rule.weights) {
            s += w * (Complex64::cis(m * t) * h.eval(m)).re;
        }
        assert!(
            (s / PI - h.inverse(t)).abs() < 1e-6,
            "{} vs {}",
            s / PI,
            h.inverse(t)
        );
    }

    #[test]
    fn truncation_budget_enforced() {
        let c = charge();
        let ev = NuEvaluator::new(&c, 1.0, sample_data()).unwrap();
        let opts = InversionOptions {
            mu_max: 14.0,
            budget: 1e-12,
            ..InversionOptions::default()
        };
        assert!(matches!(
            invert_nu(&ev, 0.1, 10, &opts),
            Err(Error::Budget(_))
        ));
    }
}
