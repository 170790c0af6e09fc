//! Experiment configuration: TOML with one table per module.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::charge::{ChargeModel, RadialProfile};
use crate::grid::SpectralGrid;
use crate::laplace::RadialWeight;
use crate::{Error, Result};

/// The desk-scale configuration shipped with the crate.
pub const DESK_SCALE: &str = include_str!("../../configs/default.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub charge: ChargeConfig,
    pub system: SystemConfig,
    pub grid: GridConfig,
    pub run: RunSection,
    pub data: DataConfig,
    pub scattering: ScatteringConfig,
    pub freewave: FreeWaveConfig,
    pub laplace: LaplaceConfig,
    pub resolvent: ResolventConfig,
    pub structural: StructuralConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChargeConfig {
    /// `reference` (`k² e^{−k²}`) or `gaussian_moment` (`scale · k^power · e^{−width k²}`).
    pub profile: String,
    pub scale: f64,
    pub power: u32,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub inertia: f64,
    pub momentum: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub dt: f64,
    pub t_max: f64,
    pub cadence: f64,
    pub beta: f64,
    pub data_radius: f64,
    pub fit_window: (f64, f64),
    /// Half-width of the running-max envelope applied before fitting.
    pub envelope_half: f64,
    /// Length of the unperturbed soliton run.
    pub soliton_t_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// `Λ̂0 = a Jϱ̂ φ_Λ`, `Π̂0 = b Jϱ̂ φ_Π`, `φ(k) = e^{−width k²}`.
    pub a: f64,
    pub b: f64,
    pub phi_lambda_width: f64,
    pub phi_pi_width: f64,
    /// Amplitude of the seeded divergence-free Gaussian bumps; zero disables them.
    pub random_amplitude: f64,
    pub bump_width: f64,
    pub bump_count: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatteringConfig {
    /// Truncation time of `∫₀^∞ W(−s) R(s) ds`.
    pub t_cut: f64,
    pub period_factor: f64,
    pub mu_max: f64,
    pub budget: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeWaveConfig {
    pub beta: f64,
    pub t_max: f64,
    pub cadence: f64,
    /// Radius of the compact bump.
    pub support: f64,
    pub fit_window: (f64, f64),
    pub huygens_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceConfig {
    pub line_mu_max: f64,
    pub line_samples: usize,
    pub cross_window: (f64, f64),
    pub duhamel_time: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResolventConfig {
    pub beta: f64,
    pub zeta_window: (f64, f64),
    pub zeta_samples: usize,
    pub radius: f64,
    pub radial_panels: usize,
    pub mu_window: (f64, f64),
    pub mu_samples: usize,
    pub high_energy_window: (f64, f64),
    pub high_energy_samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralConfig {
    pub n: usize,
    pub length: f64,
    pub dt: f64,
    pub t_max: f64,
}

fn window_ok(w: (f64, f64)) -> bool {
    w.0 > 0.0 && w.1 > w.0 && w.1.is_finite()
}

impl ExperimentConfig {
    pub fn desk_scale() -> Self {
        Self::from_toml(DESK_SCALE).expect("shipped config parses")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// `default` selects the desk-scale configuration; anything else is a path.
    pub fn load(spec: &str) -> Result<Self> {
        if spec == "default" {
            return Ok(Self::desk_scale());
        }
        let p = Path::new(spec);
        let text = std::fs::read_to_string(p)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical serialization.
    pub fn hash(&self) -> String {
        let d = Sha256::digest(self.to_toml().as_bytes());
        d.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Same grid spacing on a smaller box, half the time spans, lighter resolvent quadrature.
    pub fn quick(&self) -> Self {
        let mut c = self.clone();
        let half = |w: (f64, f64)| (0.5 * w.0, 0.5 * w.1);
        c.grid.n = 3 * c.grid.n / 4;
        c.grid.length *= 0.75;
        c.run.t_max *= 0.5;
        c.run.fit_window = half(c.run.fit_window);
        c.laplace.duhamel_time *= 0.5;
        c.laplace.cross_window = half(c.laplace.cross_window);
        c.freewave.t_max *= 0.5;
        c.freewave.fit_window = half(c.freewave.fit_window);
        c.freewave.huygens_time *= 0.5;
        c.resolvent.radial_panels = (c.resolvent.radial_panels / 2).max(8);
        c
    }

    pub fn profile(&self) -> Result<RadialProfile> {
        let c = &self.charge;
        match c.profile.as_str() {
            "reference" => Ok(RadialProfile::reference()),
            "gaussian_moment" => Ok(RadialProfile::gaussian_moment(c.scale, c.power, c.width)),
            other => Err(Error::Config(format!("unknown charge profile `{other}`"))),
        }
    }

    pub fn grid(&self) -> Result<SpectralGrid> {
        SpectralGrid::new(self.grid.n, self.grid.length)
    }

    pub fn phi_lambda(&self) -> RadialWeight {
        weight(self.data.phi_lambda_width)
    }

    pub fn phi_pi(&self) -> RadialWeight {
        weight(self.data.phi_pi_width)
    }

    /// Separable data only: the Laplace pipeline sees exactly the dynamics' data.
    pub fn is_separable(&self) -> bool {
        self.data.random_amplitude == 0.0
    }

    /// Static checks plus the wrap-free conditions, which need the charge radius.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.system.inertia > 0.0) {
            return bad(format!(
                "inertia = {} must be positive",
                self.system.inertia
            ));
        }
        let r = &self.run;
        if !(r.dt > 0.0 && r.t_max > 0.0 && r.cadence >= r.dt && r.soliton_t_max > 0.0) {
            return bad(
                "run: dt, t_max, cadence and soliton_t_max must be positive with cadence >= dt"
                    .into(),
            );
        }
        if !(r.beta > 2.5) {
            return bad(format!("run.beta = {} must exceed 5/2", r.beta));
        }
        if !window_ok(r.fit_window) || r.fit_window.1 > r.t_max {
            return bad(format!(
                "run.fit_window {:?} must lie in (0, t_max]",
                r.fit_window
            ));
        }
        if !(r.envelope_half >= 0.0 && r.data_radius > 0.0) {
            return bad("run: envelope_half >= 0 and data_radius > 0 required".into());
        }
        let d = &self.data;
        if !(d.phi_lambda_width >= 0.0
            && d.phi_pi_width >= 0.0
            && d.random_amplitude >= 0.0
            && d.bump_width > 0.0)
        {
            return bad("data: widths and amplitudes must be non-negative".into());
        }
        let f = &self.freewave;
        if !(f.beta > 2.0) {
            return bad(format!("freewave.beta = {} must exceed 2", f.beta));
        }
        if !window_ok(f.fit_window)
            || f.fit_window.1 > f.t_max
            || !(f.cadence > 0.0 && f.support > 0.0)
        {
            return bad("freewave: window, cadence or support invalid".into());
        }
        let half = 0.5 * self.grid.length;
        if f.t_max + f.support >= half || f.huygens_time + f.support >= half {
            return bad(format!(
                "freewave: t + support must stay below the box half-width {half}"
            ));
        }
        let s = &self.scattering;
        if !(s.t_cut > r.t_max && s.period_factor >= 2.0 && s.budget > 0.0) {
            return bad("scattering: t_cut > run.t_max and period_factor >= 2 required".into());
        }
        if !(s.mu_max * r.dt < std::f64::consts::PI) {
            return bad(format!(
                "scattering.mu_max * dt = {} must stay below pi",
                s.mu_max * r.dt
            ));
        }
        let l = &self.laplace;
        if !window_ok(l.cross_window)
            || l.cross_window.1 > r.t_max
            || l.duhamel_time > r.t_max
            || l.line_samples < 2
        {
            return bad("laplace: cross_window and duhamel_time must lie within the run".into());
        }
        let v = &self.resolvent;
        if !(v.beta > 2.5) {
            return bad(format!("resolvent.beta = {} must exceed 5/2", v.beta));
        }
        if !window_ok(v.zeta_window) || !window_ok(v.mu_window) || !window_ok(v.high_energy_window)
        {
            return bad("resolvent: windows must be positive and ordered".into());
        }
        let st = &self.structural;
        if !(st.dt > 0.0 && st.t_max > 0.0) {
            return bad("structural: dt and t_max must be positive".into());
        }

        let profile = self.profile()?;
        let g = self.grid()?;
        let c = ChargeModel::new(profile.clone(), &g)?;
        let rr = c.effective_radius(1e-12);
        if r.t_max >= half - r.data_radius - rr {
            return bad(format!(
                "run.t_max = {} violates the wrap-free bound {:.2} = L/2 − R_data − R_rho",
                r.t_max,
                half - r.data_radius - rr
            ));
        }
        let gs = SpectralGrid::new(st.n, st.length)?;
        let cs = ChargeModel::new(profile, &gs)?;
        if st.t_max >= 0.5 * st.length - r.data_radius - cs.effective_radius(1e-12) {
            return bad("structural: t_max violates the wrap-free bound of its grid".into());
        }
        Ok(())
    }
}

fn weight(width: f64) -> RadialWeight {
    if width == 0.0 {
        RadialWeight::one()
    } else {
        RadialWeight::gaussian(width)
    }
}
