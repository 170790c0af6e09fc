//! Radial neutral charges defined by their spectral profile.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::{pairing, Repr, ScalarField, SpectralGrid, VectorField};
use crate::{Error, Result};

type ProfileFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ProfileKind {
    /// `scale * k^power * exp(-width k²)`
    GaussianMoment { scale: f64, power: u32, width: f64 },
    Custom {
        f: ProfileFn,
        cutoff: f64,
        label: String,
    },
}

/// Radial spectral profile `rho1(k)`, `k = |k| >= 0`.
#[derive(Clone)]
pub struct RadialProfile {
    kind: ProfileKind,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RadialProfile({})", self.label())
    }
}

const FD_STEP: f64 = 1e-4;

impl RadialProfile {
    /// `k² exp(-k²)`.
    pub fn reference() -> Self {
        Self::gaussian_moment(1.0, 2, 1.0)
    }

    pub fn gaussian_moment(scale: f64, power: u32, width: f64) -> Self {
        Self {
            kind: ProfileKind::GaussianMoment {
                scale,
                power,
                width,
            },
        }
    }

    /// Profile from a closure; derivatives are taken numerically.
    /// `cutoff` is a wavenumber past which the profile is negligible.
    pub fn custom<F>(label: &str, cutoff: f64, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            kind: ProfileKind::Custom {
                f: Arc::new(f),
                cutoff,
                label: label.to_string(),
            },
        }
    }

    pub fn label(&self) -> String {
        match &self.kind {
            ProfileKind::GaussianMoment {
                scale,
                power,
                width,
            } => {
                format!("{scale}*k^{power}*exp(-{width}k^2)")
            }
            ProfileKind::Custom { label, .. } => label.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        match &self.kind {
            ProfileKind::GaussianMoment {
                scale,
                power,
                width,
            } => Self::gaussian_moment(scale * c, *power, *width),
            ProfileKind::Custom { f, cutoff, label } => {
                let f = f.clone();
                Self::custom(&format!("{c}*({label})"), *cutoff, move |k| c * f(k))
            }
        }
    }

    pub fn value(&self, k: f64) -> f64 {
        match &self.kind {
            ProfileKind::GaussianMoment {
                scale,
                power,
                width,
            } => scale * k.powi(*power as i32) * (-width * k * k).exp(),
            ProfileKind::Custom { f, .. } => f(k),
        }
    }

    /// `rho1'(k)`; analytic when known, else Richardson-extrapolated central differences.
    pub fn derivative(&self, k: f64) -> f64 {
        match &self.kind {
            ProfileKind::GaussianMoment {
                scale,
                power,
                width,
            } => {
                let p = *power as i32;
                let e = (-width * k * k).exp();
                let lead = if p == 0 {
                    0.0
                } else {
                    p as f64 * k.powi(p - 1)
                };
                scale * e * (lead - 2.0 * width * k.powi(p + 1))
            }
            ProfileKind::Custom { f, .. } => {
                // profile is even in k as a smooth radial function, so stencils may cross 0
                let g = |x: f64| f(x.abs());
                let d = |h: f64| (g(k + h) - g(k - h)) / (2.0 * h);
                let d1 = d(FD_STEP);
                let d2 = d(0.5 * FD_STEP);
                (4.0 * d2 - d1) / 3.0
            }
        }
    }

    /// `lim_{k→0} (rho1'(k)/k)²`, the value `|varrho^|²/k²` takes at the origin.
    pub fn infrared_weight(&self) -> f64 {
        match &self.kind {
            ProfileKind::GaussianMoment { scale, power, .. } => match power {
                2 => 4.0 * scale * scale,
                _ => 0.0,
            },
            ProfileKind::Custom { f, .. } => {
                // rho1(d) ≈ rho1''(0) d²/2
                let c = |d: f64| 2.0 * f(d) / (d * d);
                let d = 1e-3;
                let second = (4.0 * c(0.5 * d) - c(d)) / 3.0;
                second * second
            }
        }
    }

    /// Wavenumber past which radial integrands are dropped.
    pub fn cutoff(&self) -> f64 {
        match &self.kind {
            ProfileKind::GaussianMoment { power, width, .. } => {
                // exp(-2 w k²) k^{2p} below ~1e-34
                let mut k = (40.0 / width).sqrt();
                while (-2.0 * width * k * k).exp() * k.powi(2 * *power as i32) > 1e-34 {
                    k *= 1.1;
                }
                k
            }
            ProfileKind::Custom { cutoff, .. } => *cutoff,
        }
    }
}

/// A neutral radial charge sampled on a grid.
#[derive(Clone, Debug)]
pub struct ChargeModel {
    profile: RadialProfile,
    grid: SpectralGrid,
    rho_hat: Vec<f64>,
    drho: Vec<f64>,
    varrho_hat: VectorField,
    j_varrho_hat: VectorField,
    rho_x: Vec<f64>,
    varrho_x: [Vec<f64>; 2],
}

impl ChargeModel {
    pub fn new(profile: RadialProfile, grid: &SpectralGrid) -> Result<Self> {
        let at0 = profile.value(0.0);
        let scale = (0..50)
            .map(|i| profile.value(0.1 * i as f64).abs())
            .fold(0.0, f64::max);
        if at0.abs() > 1e-14 * scale.max(1e-300) || !at0.is_finite() {
            return Err(Error::NotNeutral(at0));
        }
        let rho_hat = grid.radial_spectral(|k| profile.value(k));
        let drho = grid.radial_spectral(|k| profile.derivative(k));
        let varrho = |i: usize| -> [Complex64; 2] {
            let k = grid.kvec(i);
            let kn = k[0].hypot(k[1]);
            if kn == 0.0 || drho[i] == 0.0 {
                return [Complex64::default(); 2];
            }
            let s = drho[i] / kn;
            [Complex64::new(0.0, s * k[0]), Complex64::new(0.0, s * k[1])]
        };
        let varrho_hat = VectorField::from_spectral_fn(grid, varrho);
        let j_varrho_hat = VectorField::from_spectral_fn(grid, |i| {
            let v = varrho(i);
            crate::rot_j(v)
        });
        let mut rx: Vec<Complex64> = rho_hat.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        grid.inverse(&mut rx);
        let rho_x = rx.iter().map(|v| v.re).collect();
        let (v0, v1) = grid.inverse_real_pair(varrho_hat.comp(0), varrho_hat.comp(1));
        Ok(Self {
            profile,
            grid: grid.clone(),
            rho_hat,
            drho,
            varrho_hat,
            j_varrho_hat,
            rho_x,
            varrho_x: [v0, v1],
        })
    }

    pub fn reference(grid: &SpectralGrid) -> Result<Self> {
        Self::new(RadialProfile::reference(), grid)
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    /// `rho^(k)` at every mode.
    pub fn rho_hat(&self) -> &[f64] {
        &self.rho_hat
    }

    /// `rho1'(|k|)` at every mode.
    pub fn rho_radial_derivative(&self) -> &[f64] {
        &self.drho
    }

    /// `varrho^ = i k^ rho1'`, spectral.
    pub fn varrho_hat(&self) -> &VectorField {
        &self.varrho_hat
    }

    /// `J varrho^`, spectral.
    pub fn j_varrho_hat(&self) -> &VectorField {
        &self.j_varrho_hat
    }

    pub fn rho_x(&self) -> &[f64] {
        &self.rho_x
    }

    pub fn varrho_x(&self) -> &[Vec<f64>; 2] {
        &self.varrho_x
    }

    pub fn infrared_weight(&self) -> f64 {
        self.profile.infrared_weight()
    }

    /// `∫ rho dx` by grid quadrature.
    pub fn total_charge(&self) -> f64 {
        self.grid.cell_area() * self.rho_x.iter().sum::<f64>()
    }

    /// `∫ varrho dx` by grid quadrature.
    pub fn moment_integral(&self) -> [f64; 2] {
        let w = self.grid.cell_area();
        [
            w * self.varrho_x[0].iter().sum::<f64>(),
            w * self.varrho_x[1].iter().sum::<f64>(),
        ]
    }

    /// `‖varrho‖²` on the grid.
    pub fn varrho_norm_sq(&self) -> f64 {
        pairing(
            &self.grid,
            Repr::Spectral,
            self.varrho_hat.comp(0),
            self.varrho_hat.comp(0),
        ) + pairing(
            &self.grid,
            Repr::Spectral,
            self.varrho_hat.comp(1),
            self.varrho_hat.comp(1),
        )
    }

    /// Smallest radius outside which `|rho| < tol * max|rho|` on the grid.
    pub fn effective_radius(&self, tol: f64) -> f64 {
        let mx = self.rho_x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mut r: f64 = 0.0;
        for (i, v) in self.rho_x.iter().enumerate() {
            if v.abs() >= tol * mx {
                let p = self.grid.position(i);
                r = r.max(p[0].hypot(p[1]));
            }
        }
        r
    }
}

/// `Φ` with `Φ^ = rho^/k²` and zero mean, in position representation.
pub fn coulomb_potential(c: &ChargeModel) -> Result<ScalarField> {
    let g = c.grid();
    let data = (0..g.len())
        .into_par_iter()
        .map(|i| {
            let k = g.kvec(i);
            let k2 = k[0] * k[0] + k[1] * k[1];
            if k2 == 0.0 {
                Complex64::default()
            } else {
                Complex64::new(c.rho_hat[i] / k2, 0.0)
            }
        })
        .collect();
    let mut phi = ScalarField::from_data(g, Repr::Spectral, data)?;
    phi.make_position(g)?;
    Ok(phi)
}

/// `⟨f, J varrho⟩`, evaluated k-side.
pub fn moment_pairing(f: &VectorField, c: &ChargeModel) -> Result<f64> {
    f.check_grid(c.grid())?;
    let owned;
    let fk = if f.repr() == Repr::Spectral {
        f
    } else {
        owned = f.to_spectral(c.grid())?;
        &owned
    };
    let g = c.grid();
    Ok(
        pairing(g, Repr::Spectral, fk.comp(0), c.j_varrho_hat.comp(0))
            + pairing(g, Repr::Spectral, fk.comp(1), c.j_varrho_hat.comp(1)),
    )
}

/// `2 pi ∫ w(k) rho1'(k)² k dk` for a radial weight `w`, by adaptive quadrature.
pub fn radial_moment<W: Fn(f64) -> f64>(profile: &RadialProfile, w: W) -> Result<f64> {
    let kc = profile.cutoff();
    let (v, _) = crate::quadrature::adaptive(
        |k| {
            let d = profile.derivative(k);
            w(k) * d * d * k
        },
        0.0,
        kc,
        crate::quadrature::Tolerance::default(),
    )?;
    Ok(2.0 * PI * v)
}
