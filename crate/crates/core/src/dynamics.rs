//! Time evolution of the reduced field–spin system.
//!
//! `Ȧ = Π`, `Π̇ = ΔA − ω J varrho` with `ω = (M + ⟨A, J varrho⟩)/I`.
//! Each step is a Strang composition of two exact sub-flows on spectral samples:
//! the kick `Π̇ = −(ω − ω*) J varrho` and the free rotation of `(A − A_ω*, Π)`,
//! with `ω* = M/(I + κ₀)`. The limit soliton is an exact fixed point.

use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::charge::{coulomb_potential, moment_pairing, ChargeModel};
use crate::free_wave::{UniformSeries, WavePropagator};
use crate::grid::{
    energy_norm, energy_norm_sq, weighted_norm, FieldPair, Repr, ScalarField, VectorField,
    WeightedNormSpec,
};
use crate::soliton::{build_soliton, limit_frequency, SolitonState};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    /// `(A, Π)`, spectral.
    pub y: FieldPair,
    pub momentum: f64,
    pub inertia: f64,
    /// Constant added to the grid pairing `⟨A, J varrho⟩`; nonzero only when
    /// `A` carries a soliton's `1/|k|` profile (see [`SolitonState::infrared_pairing`]).
    pub infrared: f64,
    charge: Arc<ChargeModel>,
    /// `A_ω*` for the current `M`; the wave sub-flow rotates `A − A_ω*`.
    anchor: Arc<SolitonState>,
}

impl SimState {
    pub fn new(
        charge: Arc<ChargeModel>,
        y: FieldPair,
        momentum: f64,
        inertia: f64,
    ) -> Result<Self> {
        if !(inertia > 0.0) {
            return Err(Error::Config(format!(
                "moment of inertia must be positive, got {inertia}"
            )));
        }
        let y = y.to_spectral(charge.grid())?;
        let omega_star = limit_frequency(momentum, inertia, &charge)?;
        let anchor = Arc::new(build_soliton(omega_star, &charge, inertia)?);
        Ok(Self {
            t: 0.0,
            y,
            momentum,
            inertia,
            infrared: 0.0,
            charge,
            anchor,
        })
    }

    /// `(A_ω + Λ0, Π0)` with the soliton's angular momentum.
    pub fn from_soliton(
        charge: Arc<ChargeModel>,
        s: &SolitonState,
        perturbation: Option<&FieldPair>,
    ) -> Result<Self> {
        let g = charge.grid().clone();
        let mut y = FieldPair {
            a: s.a.clone(),
            pi: VectorField::zeros(&g, Repr::Spectral),
        };
        if let Some(z) = perturbation {
            y.axpy(1.0, &z.to_spectral(&g)?)?;
        }
        let mut st = Self::new(charge, y, s.momentum, s.inertia)?;
        st.infrared = s.infrared_pairing;
        Ok(st)
    }

    pub fn charge(&self) -> &ChargeModel {
        &self.charge
    }

    pub fn charge_arc(&self) -> Arc<ChargeModel> {
        self.charge.clone()
    }

    /// `⟨A, J varrho⟩` including the infrared constant.
    pub fn coupling(&self) -> f64 {
        moment_pairing(&self.y.a, &self.charge).expect("state lives on the charge grid")
            + self.infrared
    }

    pub fn omega(&self) -> f64 {
        (self.momentum + self.coupling()) / self.inertia
    }

    /// `I ω − ⟨A, J varrho⟩ − M`; zero up to rounding by construction.
    pub fn momentum_residual(&self) -> f64 {
        let c = self.coupling();
        let omega = (self.momentum + c) / self.inertia;
        self.inertia * omega - c - self.momentum
    }

    /// `½ ∫ (Π² + |∇A|²) + I ω²/2`.
    pub fn hamiltonian(&self) -> f64 {
        let w = self.omega();
        0.5 * energy_norm_sq(self.charge.grid(), &self.y).expect("spectral state")
            + 0.5 * self.inertia * w * w
    }

    pub fn omega_star(&self) -> f64 {
        self.anchor.omega
    }

    fn kick(&mut self, h: f64) {
        let s = -h * (self.omega() - self.anchor.omega);
        let jv = self.charge.j_varrho_hat();
        for c in 0..2 {
            let f = jv.comp(c);
            self.y
                .pi
                .comp_mut(c)
                .par_iter_mut()
                .zip(f.par_iter())
                .for_each(|(p, v)| *p += s * v);
        }
    }

    /// One Strang step of length `prop.time()`.
    pub fn advance(&mut self, prop: &WavePropagator) {
        let dt = prop.time();
        self.kick(0.5 * dt);
        self.y.a.axpy(-1.0, &self.anchor.a).expect("same grid");
        prop.apply(&mut self.y).expect("spectral state");
        self.y.a.axpy(1.0, &self.anchor.a).expect("same grid");
        self.kick(0.5 * dt);
        self.t += dt;
    }
}

/// One step of length `dt`; builds a fresh propagator.
pub fn step(state: &SimState, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let prop = WavePropagator::new(state.charge.grid(), dt);
    let mut next = state.clone();
    next.advance(&prop);
    Ok(next)
}

pub fn omega(state: &SimState) -> f64 {
    state.omega()
}

pub fn hamiltonian(state: &SimState) -> f64 {
    state.hamiltonian()
}

/// `Z = (Λ, Π)` with `Λ = A − A_ω*`.
#[derive(Clone, Debug)]
pub struct SolitonFrameState {
    pub t: f64,
    pub z: FieldPair,
    /// `⟨Λ, J varrho⟩ / I`.
    pub nu: f64,
}

fn check_frame(state: &SimState, s: &SolitonState) -> Result<()> {
    let expected = state.momentum / (s.inertia + s.kappa0);
    let same_m = (s.momentum - state.momentum).abs() <= 1e-12 * state.momentum.abs().max(1.0);
    if !same_m || s.inertia != state.inertia {
        return Err(Error::FrequencyMismatch {
            soliton: s.omega,
            expected,
        });
    }
    Ok(())
}

pub fn to_soliton_frame(state: &SimState, s: &SolitonState) -> Result<SolitonFrameState> {
    check_frame(state, s)?;
    let mut z = state.y.clone();
    z.a.axpy(-1.0, &s.a)?;
    let nu = moment_pairing(&z.a, &state.charge)? / state.inertia;
    Ok(SolitonFrameState { t: state.t, z, nu })
}

pub fn from_soliton_frame(
    frame: &SolitonFrameState,
    s: &SolitonState,
    charge: Arc<ChargeModel>,
) -> Result<SimState> {
    let mut y = frame.z.to_spectral(charge.grid())?;
    y.a.axpy(1.0, &s.a)?;
    let mut st = SimState::new(charge, y, s.momentum, s.inertia)?;
    st.t = frame.t;
    st.infrared = s.infrared_pairing;
    Ok(st)
}

/// Soliton-frame energy `½ ∫ (Π² + |∇Λ|²) + ⟨Λ, J varrho⟩²/(2I)`.
pub fn frame_energy(frame: &SolitonFrameState, charge: &ChargeModel, inertia: f64) -> Result<f64> {
    let p = moment_pairing(&frame.z.a, charge)?;
    Ok(0.5 * energy_norm_sq(charge.grid(), &frame.z)? + 0.5 * p * p / inertia)
}

/// `E = −Π − ∇Φ` and `B = ∂₁A₂ − ∂₂A₁`, both in position representation.
pub fn maxwell_fields(state: &SimState) -> Result<(VectorField, ScalarField)> {
    let g = state.charge.grid();
    let phi = coulomb_potential(&state.charge)?;
    let mut e = phi.gradient(g)?;
    e.axpy(1.0, &state.y.pi.to_spectral(g)?)?;
    e.scale(-1.0);
    e.make_position(g)?;
    let mut b = state.y.a.curl(g)?;
    b.make_position(g)?;
    Ok((e, b))
}

/// Time-stepping and diagnostic schedule.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub dt: f64,
    pub t_max: f64,
    /// Diagnostic sampling interval; a multiple of `dt`.
    pub cadence: f64,
    /// Weight exponent of the local-decay norm `‖Z‖_{E_{−β}}`.
    pub beta: f64,
    /// Radius containing the initial perturbation.
    pub data_radius: f64,
    /// Times at which the soliton-frame state is stored.
    pub snapshots: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSample {
    pub t: f64,
    pub omega: f64,
    pub err_omega: f64,
    pub z_norm_wminus: f64,
    /// Hilbert energy norm of `Z`.
    pub z_energy: f64,
    pub energy: f64,
    pub frame_energy: f64,
    pub nu: f64,
    pub m_residual: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub omega_star: f64,
    pub samples: Vec<RunSample>,
    /// `ν(t) = ω(t) − ω*` at every step.
    pub nu: UniformSeries,
    pub snapshots: Vec<(f64, FieldPair)>,
    pub final_state: SimState,
}

fn steps_for(span: f64, dt: f64, what: &str) -> Result<usize> {
    let n = (span / dt).round();
    if (span / dt - n).abs() > 1e-6 || n < 1.0 {
        return Err(Error::Config(format!(
            "{what} = {span} is not a positive multiple of dt = {dt}"
        )));
    }
    Ok(n as usize)
}

/// Largest `t_max` before periodic images reach the weighted region.
pub fn wrap_free_limit(charge: &ChargeModel, data_radius: f64) -> f64 {
    0.5 * charge.grid().length() - data_radius - charge.effective_radius(1e-12)
}

/// Integrate from `state` to `cfg.t_max`, recording diagnostics relative to `s`.
pub fn run(mut state: SimState, s: &SolitonState, cfg: &RunConfig) -> Result<RunOutput> {
    check_frame(&state, s)?;
    let limit = wrap_free_limit(&state.charge, cfg.data_radius);
    if cfg.t_max >= limit {
        return Err(Error::WrapAround(format!(
            "T = {} but waves re-enter the box after {limit:.2}",
            cfg.t_max
        )));
    }
    let nsteps = steps_for(cfg.t_max, cfg.dt, "t_max")?;
    let every = steps_for(cfg.cadence, cfg.dt, "cadence")?;
    let snap_steps: Vec<usize> = cfg
        .snapshots
        .iter()
        .map(|&t| steps_for(t, cfg.dt, "snapshot"))
        .collect::<Result<_>>()?;
    let omega_star = s.omega;
    let g = state.charge.grid().clone();
    let prop = WavePropagator::new(&g, cfg.dt);
    let spec = WeightedNormSpec::energy(-cfg.beta);

    let mut samples = Vec::new();
    let mut nu = Vec::with_capacity(nsteps + 1);
    let mut snapshots = Vec::new();
    for n in 0..=nsteps {
        if n > 0 {
            state.advance(&prop);
        }
        let w = state.omega();
        nu.push(w - omega_star);
        let want_sample = n % every == 0;
        let want_snap = snap_steps.contains(&n);
        if want_sample || want_snap {
            let frame = to_soliton_frame(&state, s)?;
            if want_snap {
                snapshots.push((state.t, frame.z.clone()));
            }
            if want_sample {
                samples.push(RunSample {
                    t: n as f64 * cfg.dt,
                    omega: w,
                    err_omega: (w - omega_star).abs(),
                    z_norm_wminus: weighted_norm(&g, &frame.z, spec)?,
                    z_energy: energy_norm(&g, &frame.z)?,
                    energy: state.hamiltonian(),
                    frame_energy: frame_energy(&frame, &state.charge, state.inertia)?,
                    nu: frame.nu,
                    m_residual: state.momentum_residual(),
                });
            }
        }
    }
    Ok(RunOutput {
        omega_star,
        samples,
        nu: UniformSeries::new(cfg.dt, nu),
        snapshots,
        final_state: state,
    })
}

pub const RUN_CSV_COLUMNS: &str = "t,omega,err_omega,z_norm_wminus,energy,nu,M_residual";

/// Line-delimited CSV of the run diagnostics.
pub fn write_run_csv<W: Write>(
    out: &mut W,
    header_comment: &str,
    samples: &[RunSample],
) -> std::io::Result<()> {
    writeln!(out, "# {header_comment}")?;
    writeln!(out, "{RUN_CSV_COLUMNS}")?;
    for s in samples {
        writeln!(
            out,
            "{:.6},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            s.t, s.omega, s.err_omega, s.z_norm_wminus, s.energy, s.nu, s.m_residual
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::ChargeModel;
    use crate::grid::{helmholtz_project, SpectralGrid};
    use crate::soliton::build_soliton;

    fn setup(n: usize, l: f64) -> (SpectralGrid, Arc<ChargeModel>) {
        let g = SpectralGrid::new(n, l).unwrap();
        let c = Arc::new(ChargeModel::reference(&g).unwrap());
        (g, c)
    }

    fn bump(g: &SpectralGrid, amp: f64) -> FieldPair {
        let a = VectorField::from_position_fn(g, |x, y| {
            let e = amp * (-((x - 1.0).powi(2) + y * y)).exp();
            [e, 0.5 * e]
        });
        let p = VectorField::from_position_fn(g, |x, y| {
            let e = amp * (-(x * x + (y + 0.5).powi(2)) / 2.0).exp();
            [-0.3 * e, e]
        });
        FieldPair {
            a: helmholtz_project(g, &a).unwrap(),
            pi: helmholtz_project(g, &p).unwrap(),
        }
    }

    #[test]
    fn zero_state_stays_zero() {
        let (g, c) = setup(32, 20.0);
        let mut st = SimState::new(c, FieldPair::zeros(&g, Repr::Spectral), 0.0, 1.0).unwrap();
        let prop = WavePropagator::new(&g, 0.1);
        for _ in 0..10 {
            st.advance(&prop);
        }
        assert!(st
            .y
            .a
            .comp(0)
            .iter()
            .chain(st.y.pi.comp(1))
            .all(|v| v.norm() == 0.0));
        assert_eq!(st.hamiltonian(), 0.0);
    }

    #[test]
    fn omega_identities() {
        let (g, c) = setup(64, 40.0);
        let st = SimState::new(c.clone(), FieldPair::zeros(&g, Repr::Spectral), 2.5, 2.0).unwrap();
        assert_eq!(st.omega(), 1.25);
        let s = build_soliton(0.8, &c, 2.0).unwrap();
        let st = SimState::from_soliton(c.clone(), &s, None).unwrap();
        assert!((st.omega() - 0.8).abs() < 1e-10);
        let st = SimState::new(c, bump(&g, 1.0), 0.7, 3.0).unwrap();
        assert!(st.momentum_residual().abs() < 1e-15);
    }

    #[test]
    fn soliton_is_stationary() {
        let (g, c) = setup(128, 60.0);
        let s = build_soliton(1.0, &c, 1.0).unwrap();
        let st0 = SimState::from_soliton(c.clone(), &s, None).unwrap();
        let h0 = st0.hamiltonian();
        let st1 = step(&st0, 0.05).unwrap();
        let mut d = st1.y.clone();
        d.axpy(-1.0, &st0.y).unwrap();
        assert!(energy_norm(&g, &d).unwrap() < 1e-10 * s.grad_norm_sq(&g).sqrt());
        assert!((st1.hamiltonian() - h0).abs() < 1e-10 * h0);
        let f = to_soliton_frame(&st0, &s).unwrap();
        assert_eq!(energy_norm(&g, &f.z).unwrap(), 0.0);
    }

    #[test]
    fn frame_round_trip_and_nu() {
        let (g, c) = setup(64, 40.0);
        let s = build_soliton(0.5, &c, 1.5).unwrap();
        let eps = 1e-3;
        let pert = FieldPair {
            a: c.j_varrho_hat().scaled(eps),
            pi: VectorField::zeros(&g, Repr::Spectral),
        };
        let st = SimState::from_soliton(c.clone(), &s, Some(&pert)).unwrap();
        let f = to_soliton_frame(&st, &s).unwrap();
        assert!((f.nu - eps * c.varrho_norm_sq() / 1.5).abs() < 1e-15);
        assert!((st.omega() - 0.5 - f.nu).abs() < 1e-10);
        let back = from_soliton_frame(&f, &s, c.clone()).unwrap();
        let mut d = back.y.clone();
        d.axpy(-1.0, &st.y).unwrap();
        assert!(energy_norm(&g, &d).unwrap() <= 1e-14 * energy_norm(&g, &st.y).unwrap());
        let other = build_soliton(0.6, &c, 1.5).unwrap();
        assert!(matches!(
            to_soliton_frame(&st, &other),
            Err(Error::FrequencyMismatch { .. })
        ));
    }

    #[test]
    fn gauss_law_and_static_soliton_fields() {
        let (g, c) = setup(64, 40.0);
        let st = SimState::new(c.clone(), bump(&g, 0.3), 1.0, 1.0).unwrap();
        let (e, _) = maxwell_fields(&st).unwrap();
        let div = e.divergence(&g).unwrap();
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..g.len() {
            num += (div.data()[i].re - c.rho_hat()[i]).powi(2) + div.data()[i].im.powi(2);
            den += c.rho_hat()[i].powi(2);
        }
        assert!((num / den).sqrt() < 1e-10);
        let zero =
            SimState::new(c.clone(), FieldPair::zeros(&g, Repr::Spectral), 0.0, 1.0).unwrap();
        let (_, b) = maxwell_fields(&zero).unwrap();
        assert!(b.data().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn divergence_free_preserved() {
        let (g, c) = setup(64, 40.0);
        let s = build_soliton(1.0, &c, 1.0).unwrap();
        let mut st = SimState::from_soliton(c.clone(), &s, Some(&bump(&g, 0.1))).unwrap();
        let prop = WavePropagator::new(&g, 0.05);
        for _ in 0..200 {
            st.advance(&prop);
        }
        assert!(st.y.a.divergence_ratio(&g).unwrap() < 1e-10);
        assert!(st.y.pi.divergence_ratio(&g).unwrap() < 1e-10);
    }

    #[test]
    fn run_refuses_wrap_around() {
        let (g, c) = setup(64, 40.0);
        let s = build_soliton(1.0, &c, 1.0).unwrap();
        let st = SimState::from_soliton(c, &s, Some(&bump(&g, 0.1))).unwrap();
        let cfg = RunConfig {
            dt: 0.1,
            t_max: 30.0,
            cadence: 1.0,
            beta: 3.0,
            data_radius: 5.0,
            snapshots: vec![],
        };
        assert!(matches!(run(st, &s, &cfg), Err(Error::WrapAround(_))));
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        let s = RunSample {
            t: 0.0,
            omega: 1.0,
            err_omega: 0.0,
            z_norm_wminus: 0.0,
            z_energy: 0.0,
            energy: 2.0,
            frame_energy: 0.0,
            nu: 0.0,
            m_residual: 0.0,
        };
        write_run_csv(&mut buf, "config abc", &[s]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# config abc");
        assert_eq!(lines[1], RUN_CSV_COLUMNS);
        assert_eq!(lines[2].split(',').count(), 7);
    }
}
