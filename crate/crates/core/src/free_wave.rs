//! The free wave group `W(t)` on `(A, Π)` pairs.
//!
//! Two realizations are kept side by side: exact per-mode rotation
//! ([`WavePropagator`]) and superposition of ring averages weighted by the
//! retarded kernel `G` ([`kernel_apply`]).

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bessel::{j0, j1};
use crate::charge::ChargeModel;
use crate::grid::{energy_norm, FieldPair, Repr, SpectralGrid};
use crate::quadrature::GaussRule;
use crate::{Error, Result};

/// Samples `v(n dt)`, `n = 0, 1, ...`.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformSeries {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(dt: f64, values: Vec<f64>) -> Self {
        Self { dt, values }
    }

    pub fn end_time(&self) -> f64 {
        self.dt * (self.values.len().saturating_sub(1)) as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |n| n as f64 * self.dt)
    }

    /// Index of the sample at time `t`, if `t` is on the lattice.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt;
        let n = x.round();
        if (x - n).abs() < 1e-6 && n >= 0.0 && (n as usize) < self.values.len() {
            Some(n as usize)
        } else {
            None
        }
    }
}

/// Per-mode rotation coefficients for a fixed time step.
#[derive(Clone, Debug)]
pub struct WavePropagator {
    t: f64,
    cos: Vec<f64>,
    sinc: Vec<f64>,
    ksin: Vec<f64>,
}

impl WavePropagator {
    pub fn new(grid: &SpectralGrid, t: f64) -> Self {
        let (cos, (sinc, ksin)): (Vec<f64>, (Vec<f64>, Vec<f64>)) = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = grid.knorm(i);
                let (s, c) = (k * t).sin_cos();
                let sinc = if k == 0.0 { t } else { s / k };
                (c, (sinc, k * s))
            })
            .unzip();
        Self { t, cos, sinc, ksin }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// In-place `Z ← W(t) Z`; `Z` must be spectral.
    pub fn apply(&self, z: &mut FieldPair) -> Result<()> {
        if z.a.repr() != Repr::Spectral || z.pi.repr() != Repr::Spectral {
            return Err(Error::Representation("propagator acts on spectral data"));
        }
        for c in 0..2 {
            let a = z.a.comp_mut(c);
            let p = z.pi.comp_mut(c);
            a.par_iter_mut()
                .zip(p.par_iter_mut())
                .enumerate()
                .for_each(|(i, (av, pv))| {
                    let a0 = *av;
                    let p0 = *pv;
                    *av = self.cos[i] * a0 + self.sinc[i] * p0;
                    *pv = -self.ksin[i] * a0 + self.cos[i] * p0;
                });
        }
        Ok(())
    }
}

/// `W(t) Z` by exact per-mode rotation; the k = 0 mode drifts `A ← A + tΠ`.
pub fn propagate(grid: &SpectralGrid, z: &FieldPair, t: f64) -> Result<FieldPair> {
    let mut out = z.to_spectral(grid)?;
    WavePropagator::new(grid, t).apply(&mut out)?;
    Ok(out)
}

/// Retarded kernel `G(z, t) = θ(t - |z|) / (2 pi (t² - |z|²)^{1/2})`.
pub fn kernel_g(z: [f64; 2], t: f64) -> f64 {
    let r2 = z[0] * z[0] + z[1] * z[1];
    if t <= 0.0 || r2 >= t * t {
        return 0.0;
    }
    1.0 / (2.0 * PI * (t * t - r2).sqrt())
}

/// `∂_z^α ∂_t^j G` inside the light cone, for `|α| + j <= 2`.
pub fn kernel_g_derivative(z: [f64; 2], t: f64, alpha: [u8; 2], j: u8) -> Result<f64> {
    let order = alpha[0] + alpha[1] + j;
    if order > 2 {
        return Err(Error::OutOfRange(format!("derivative order {order} > 2")));
    }
    let r2 = z[0] * z[0] + z[1] * z[1];
    if t <= 0.0 || r2 >= t * t {
        return Ok(0.0);
    }
    let c = 1.0 / (2.0 * PI);
    let d = t * t - r2;
    let d32 = d.powf(-1.5);
    let d52 = d.powf(-2.5);
    let v = match (alpha, j) {
        ([0, 0], 0) => c / d.sqrt(),
        ([0, 0], 1) => -c * t * d32,
        ([0, 0], 2) => -c * d32 + 3.0 * c * t * t * d52,
        ([1, 0], 0) => c * z[0] * d32,
        ([0, 1], 0) => c * z[1] * d32,
        ([1, 0], 1) => -3.0 * c * t * z[0] * d52,
        ([0, 1], 1) => -3.0 * c * t * z[1] * d52,
        ([2, 0], 0) => c * d32 + 3.0 * c * z[0] * z[0] * d52,
        ([0, 2], 0) => c * d32 + 3.0 * c * z[1] * z[1] * d52,
        ([1, 1], 0) => 3.0 * c * z[0] * z[1] * d52,
        _ => unreachable!(),
    };
    Ok(v)
}

/// Multipliers of `G*` and `Ġ*` at wavenumber `k`, from
/// `G * f = t ∫_0^{pi/2} sin α · Ring_{t sin α} f dα` where a ring average of
/// radius `r` acts as `J0(|k| r)`.
fn ring_multipliers(k: f64, t: f64, rule: &GaussRule) -> (f64, f64) {
    let mut g = 0.0;
    let mut gd = 0.0;
    for (&a, &w) in rule.nodes.iter().zip(&rule.weights) {
        let s = a.sin();
        let arg = k * t * s;
        let b0 = j0(arg);
        g += w * s * b0;
        gd += w * (s * b0 - arg * s * j1(arg));
    }
    (t * g, gd)
}

/// `W(t) Z` assembled from the kernel matrix `[[Ġ, G], [G̈, Ġ]]`.
///
/// `support_radius` bounds the support of `Z`; the light cone must stay inside the box.
pub fn kernel_apply(
    grid: &SpectralGrid,
    z: &FieldPair,
    t: f64,
    support_radius: f64,
) -> Result<FieldPair> {
    if support_radius + t >= 0.5 * grid.length() {
        return Err(Error::Support(format!(
            "R0 + t = {} reaches the box half-width {}",
            support_radius + t,
            0.5 * grid.length()
        )));
    }
    let mut out = z.to_spectral(grid)?;
    if t == 0.0 {
        return Ok(out);
    }
    let kmax = grid.axis_k().iter().fold(0.0_f64, |m, v| m.max(v.abs())) * 2f64.sqrt();
    let nodes = (1.2 * kmax * t) as usize + 48;
    let panels = nodes.div_ceil(24);
    let edges: Vec<f64> = (0..=panels)
        .map(|i| FRAC_PI_2 * i as f64 / panels as f64)
        .collect();
    let rule = GaussRule::composite(&edges, 24);

    let (pos, distinct) = radial_keys(grid);
    let dk = grid.dk();
    let lut: Vec<(f64, f64)> = distinct
        .par_iter()
        .map(|&m| ring_multipliers(dk * (m as f64).sqrt(), t, &rule))
        .collect();
    let mult: Vec<(f64, f64)> = pos.iter().map(|&p| lut[p]).collect();

    for c in 0..2 {
        let a0: Vec<Complex64> = out.a.comp(c).to_vec();
        let p0: Vec<Complex64> = out.pi.comp(c).to_vec();
        let a = out.a.comp_mut(c);
        a.par_iter_mut().enumerate().for_each(|(i, v)| {
            let (g, gd) = mult[i];
            *v = gd * a0[i] + g * p0[i];
        });
        let p = out.pi.comp_mut(c);
        p.par_iter_mut().enumerate().for_each(|(i, v)| {
            let (g, gd) = mult[i];
            let k2 = {
                let k = grid.kvec(i);
                k[0] * k[0] + k[1] * k[1]
            };
            *v = -k2 * g * a0[i] + gd * p0[i];
        });
    }
    Ok(out)
}

/// Trapezoid weights for `n + 1` samples of spacing `dt`.
fn trapezoid_weight(n: usize, last: usize, dt: f64) -> f64 {
    if n == 0 || n == last {
        0.5 * dt
    } else {
        dt
    }
}

/// Integer key `n1² + n2²` of each mode, and the sorted distinct keys.
fn radial_keys(grid: &SpectralGrid) -> (Vec<usize>, Vec<u64>) {
    let n = grid.n();
    let idx = |m: usize| -> i64 {
        if m < n / 2 {
            m as i64
        } else {
            m as i64 - n as i64
        }
    };
    let keys: Vec<u64> = (0..grid.len())
        .map(|i| {
            let (a, b) = (idx(i % n), idx(i / n));
            (a * a + b * b) as u64
        })
        .collect();
    let mut distinct = keys.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let pos: Vec<usize> = keys
        .iter()
        .map(|k| distinct.binary_search(k).expect("present"))
        .collect();
    (pos, distinct)
}

fn effective_kmax(grid: &SpectralGrid, c: &ChargeModel) -> f64 {
    let kgrid = grid.axis_k().iter().fold(0.0_f64, |m, v| m.max(v.abs())) * 2f64.sqrt();
    kgrid.min(c.profile().cutoff())
}

/// `Σ_n w_n e^{i k n dt}` by phase recurrence, re-anchored every 256 terms.
fn oscillatory_sum(k: f64, w: &[f64], dt: f64) -> Complex64 {
    let rot = Complex64::from_polar(1.0, k * dt);
    let mut ph = Complex64::new(1.0, 0.0);
    let mut s = Complex64::default();
    for (n, &v) in w.iter().enumerate() {
        if n % 256 == 0 {
            ph = Complex64::from_polar(1.0, k * dt * n as f64);
        }
        s += v * ph;
        ph *= rot;
    }
    s
}

/// `Z(t) = W(t) Z0 − ∫_0^t W(t − s) (0, ν(s) J varrho) ds`, trapezoid in `s`.
pub fn duhamel_solve(
    grid: &SpectralGrid,
    z0: &FieldPair,
    nu: &UniformSeries,
    c: &ChargeModel,
    t: f64,
) -> Result<FieldPair> {
    let last = nu.index_of(t).ok_or_else(|| {
        Error::UnderSampled(format!("t = {t} is not a sample time of the series"))
    })?;
    if nu.dt * effective_kmax(grid, c) > 0.5 {
        return Err(Error::UnderSampled(format!(
            "dt = {} too coarse for wavenumbers up to {}",
            nu.dt,
            effective_kmax(grid, c)
        )));
    }
    let mut z = propagate(grid, z0, t)?;
    let (pos, distinct) = radial_keys(grid);
    let dk = grid.dk();
    let weights: Vec<f64> = (0..=last)
        .map(|n| trapezoid_weight(n, last, nu.dt) * nu.values[n])
        .collect();
    let lin: f64 = weights
        .iter()
        .enumerate()
        .map(|(n, w)| w * (t - n as f64 * nu.dt))
        .sum();
    // S(k) = Σ w_n ν_n e^{i k (t - s_n)}
    let sums: Vec<Complex64> = distinct
        .par_iter()
        .map(|&m| {
            let k = dk * (m as f64).sqrt();
            let s = Complex64::from_polar(1.0, k * t) * oscillatory_sum(-k, &weights, nu.dt);
            if m == 0 {
                // sin(kτ)/k → τ
                Complex64::new(s.re, lin)
            } else {
                s
            }
        })
        .collect();
    let jv = c.j_varrho_hat();
    for comp in 0..2 {
        let f = jv.comp(comp);
        z.a.comp_mut(comp)
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| {
                let s = sums[pos[i]];
                let k = dk * (distinct[pos[i]] as f64).sqrt();
                let sinc = if k == 0.0 { s.im } else { s.im / k };
                *v -= sinc * f[i];
            });
        z.pi.comp_mut(comp)
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| {
                *v -= sums[pos[i]].re * f[i];
            });
    }
    Ok(z)
}

/// Controls for [`scattering_state`].
#[derive(Clone, Copy, Debug)]
pub struct ScatterOptions {
    /// Required bound on `|ν|` near the truncation time.
    pub nu_floor: f64,
    /// Allowed tail contribution relative to `‖Ψ+‖`.
    pub tail_rel: f64,
    /// Radial quadrature nodes for `‖r(t)‖`.
    pub radial_nodes: usize,
}

impl Default for ScatterOptions {
    fn default() -> Self {
        Self {
            nu_floor: 1e-8,
            tail_rel: 1e-6,
            radial_nodes: 256,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScatteringData {
    pub psi_plus: FieldPair,
    pub psi_norm: f64,
    pub times: Vec<f64>,
    pub r_norms: Vec<f64>,
    pub tail_bound: f64,
    pub truncation: f64,
}

/// `Ψ+ = Z0 − ∫_0^∞ W(−s) R(s) ds` with `R = (0, ν J varrho)`, and
/// `‖r(t)‖_E = ‖∫_t^∞ W(t − s) R(s) ds‖_E` at the requested times.
///
/// `ν = ω − ω*` is sampled from 0 to the truncation time.
pub fn scattering_state(
    grid: &SpectralGrid,
    z0: &FieldPair,
    nu: &UniformSeries,
    c: &ChargeModel,
    r_times: &[f64],
    opts: ScatterOptions,
) -> Result<ScatteringData> {
    if nu.dt * effective_kmax(grid, c) > 0.5 {
        return Err(Error::UnderSampled(format!(
            "dt = {} too coarse for wavenumbers up to {}",
            nu.dt,
            effective_kmax(grid, c)
        )));
    }
    let tcut = nu.end_time();
    let last = nu.values.len() - 1;
    let peak = nu.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let tail_env = nu.values[last * 9 / 10..]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.0 && tail_env > opts.nu_floor {
        return Err(Error::Budget(format!(
            "|nu| = {tail_env:.3e} near truncation time {tcut}, above {:.1e}",
            opts.nu_floor
        )));
    }
    // Ψ+ on the grid
    let mut psi = z0.to_spectral(grid)?;
    let (pos, distinct) = radial_keys(grid);
    let dk = grid.dk();
    let weights: Vec<f64> = (0..=last)
        .map(|n| trapezoid_weight(n, last, nu.dt) * nu.values[n])
        .collect();
    let lin: f64 = weights
        .iter()
        .enumerate()
        .map(|(n, w)| w * n as f64 * nu.dt)
        .sum();
    let kc = c.profile().cutoff();
    let sums: Vec<(Complex64, f64)> = distinct
        .par_iter()
        .map(|&m| {
            let k = dk * (m as f64).sqrt();
            // J varrho^ vanishes to working precision past the profile cutoff
            let s = if k > kc {
                Complex64::default()
            } else {
                oscillatory_sum(k, &weights, nu.dt)
            };
            (s, lin)
        })
        .collect();
    let jv = c.j_varrho_hat();
    for comp in 0..2 {
        let f = jv.comp(comp);
        psi.a
            .comp_mut(comp)
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| {
                let (s, lin) = sums[pos[i]];
                let k = dk * (distinct[pos[i]] as f64).sqrt();
                let sinc = if k == 0.0 { lin } else { s.im / k };
                *v += sinc * f[i];
            });
        psi.pi
            .comp_mut(comp)
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| {
                *v -= sums[pos[i]].0.re * f[i];
            });
    }
    let psi_norm = energy_norm(grid, &psi)?;

    // tail bound from the decay of the envelope over the last half of the record
    let jnorm = c.varrho_norm_sq().sqrt();
    let tail_bound = tail_integral_bound(nu) * jnorm;
    if psi_norm > 0.0 && tail_bound > opts.tail_rel * psi_norm {
        return Err(Error::Budget(format!(
            "truncation tail {tail_bound:.3e} exceeds {:.1e} of |Psi+| = {psi_norm:.3e}",
            opts.tail_rel
        )));
    }

    let r_norms = remainder_norms(nu, c, r_times, opts.radial_nodes)?;
    Ok(ScatteringData {
        psi_plus: psi,
        psi_norm,
        times: r_times.to_vec(),
        r_norms,
        tail_bound,
        truncation: tcut,
    })
}

/// Bound on `∫_T^∞ |ν|` from a power-law fit to the envelope over `[T/2, T]`.
fn tail_integral_bound(nu: &UniformSeries) -> f64 {
    let last = nu.values.len() - 1;
    let tcut = nu.end_time();
    let env_end = nu.values[last * 9 / 10..]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    if env_end == 0.0 {
        return 0.0;
    }
    let env_mid = nu.values[last * 4 / 10..last / 2 + 1]
        .iter()
        .fold(0.0_f64, |m, v| m.max(v.abs()));
    let p = if env_mid > 0.0 {
        (env_end / env_mid).ln() / (0.95 / 0.45_f64).ln()
    } else {
        -2.0
    };
    let p = p.min(-1.5);
    env_end * tcut / (-p - 1.0)
}

/// `‖r(t)‖_E² = 2 pi ∫ rho1'(k)² |∫_t^T ν(s) e^{iks} ds|² k dk`.
fn remainder_norms(
    nu: &UniformSeries,
    c: &ChargeModel,
    r_times: &[f64],
    nodes: usize,
) -> Result<Vec<f64>> {
    let last = nu.values.len() - 1;
    let mut idx = Vec::with_capacity(r_times.len());
    for &t in r_times {
        idx.push(nu.index_of(t).ok_or_else(|| {
            Error::UnderSampled(format!("r(t) requested at off-lattice time {t}"))
        })?);
    }
    let kc = c.profile().cutoff();
    let panels = nodes.div_ceil(16).max(1);
    let edges: Vec<f64> = (0..=panels)
        .map(|i| kc * i as f64 / panels as f64)
        .collect();
    let rule = GaussRule::composite(&edges, 16);
    // per k node: backward cumulative trapezoid, recorded at the requested indices
    let contrib: Vec<Vec<f64>> = rule
        .nodes
        .par_iter()
        .zip(rule.weights.par_iter())
        .map(|(&k, &w)| {
            let d = c.profile().derivative(k);
            let weight = 2.0 * PI * w * d * d * k;
            let step = Complex64::from_polar(1.0, -k * nu.dt);
            let mut phase = Complex64::from_polar(1.0, k * last as f64 * nu.dt);
            let mut acc = Complex64::default();
            let mut at = vec![0.0; last + 1];
            let mut prev: Option<Complex64> = None;
            for n in (0..=last).rev() {
                let f = nu.values[n] * phase;
                if let Some(p) = prev {
                    acc += 0.5 * nu.dt * (p + f);
                }
                at[n] = acc.norm_sqr();
                prev = Some(f);
                phase *= step;
                if n % 256 == 0 {
                    phase = Complex64::from_polar(1.0, k * (n as f64 - 1.0) * nu.dt);
                }
            }
            idx.iter().map(|&i| weight * at[i]).collect()
        })
        .collect();
    let mut out = vec![0.0; idx.len()];
    for row in &contrib {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    Ok(out.into_iter().map(f64::sqrt).collect())
}
