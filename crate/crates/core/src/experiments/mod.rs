//! The canonical experiments: configuration, runs, acceptance checks, CSV
//! output and the key-value summary.

mod config;

pub use config::*;

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::charge::ChargeModel;
use crate::dynamics::{
    maxwell_fields, run, to_soliton_frame, write_run_csv, RunConfig, RunOutput, SimState,
};
use crate::fit::{envelope, fit_power_law, logspace, DecayFit};
use crate::free_wave::{
    duhamel_solve, kernel_apply, kernel_g, propagate, scattering_state, ScatterOptions,
    UniformSeries,
};
use crate::grid::{
    energy_norm, helmholtz_project, weighted_norm, FieldPair, Repr, ScalarField, SpectralGrid,
    VectorField, WeightedNormSpec,
};
use crate::laplace::{
    check_nondegeneracy, invert_nu, invert_nu_periodized, write_line_csv, write_nu_csv,
    InversionOptions, NuEvaluator, SeparableData,
};
use crate::resolvent::{
    high_energy_decay, hs_norms, resolvent_minus_log, smoothed_resolvent_asymptotics,
    threshold_exponent_fits, Branch, HsOptions, SmoothedOptions,
};
use crate::soliton::{build_soliton, kappa_zero, limit_frequency, SolitonState};
use crate::{Error, Result};

/// Version tag of every CSV header line.
pub const CSV_SCHEMA: &str = "spinlab-csv-v1";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Bound {
    AtMost(f64),
    AtLeast(f64),
    Band(f64, f64),
}

impl Bound {
    /// NaN never passes.
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(b) => v <= b,
            Bound::AtLeast(b) => v >= b,
            Bound::Band(lo, hi) => lo <= v && v <= hi,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Bound::AtMost(b) => write!(f, "<= {b:e}"),
            Bound::AtLeast(b) => write!(f, ">= {b:e}"),
            Bound::Band(lo, hi) => write!(f, "in [{lo}, {hi}]"),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Criterion {
    pub id: String,
    pub label: String,
    pub value: f64,
    pub bound: Bound,
    pub pass: bool,
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} = {:.6e} ({})",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.label,
            self.value,
            self.bound
        )
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub experiment: String,
    pub criteria: Vec<Criterion>,
    pub metrics: Vec<(String, f64)>,
    pub seconds: f64,
}

impl Report {
    fn new(name: &str) -> Self {
        Self {
            experiment: name.into(),
            ..Self::default()
        }
    }

    pub fn check(&mut self, id: &str, label: &str, value: f64, bound: Bound) -> bool {
        let pass = bound.holds(value);
        self.criteria.push(Criterion {
            id: id.into(),
            label: label.into(),
            value,
            bound,
            pass,
        });
        pass
    }

    pub fn metric(&mut self, key: &str, value: f64) {
        self.metrics.push((key.into(), value));
    }

    fn fit(&mut self, key: &str, f: &DecayFit) {
        self.metric(&format!("{key}.exponent"), f.exponent);
        self.metric(&format!("{key}.amplitude"), f.amplitude);
        self.metric(&format!("{key}.residual"), f.residual);
    }

    pub fn criterion(&self, id: &str) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.id == id)
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.0 == key).map(|m| m.1)
    }

    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Attract,
    Scatter,
    FreeWave,
    Laplace,
    Resolvent,
    Structural,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Attract,
        Experiment::Scatter,
        Experiment::FreeWave,
        Experiment::Laplace,
        Experiment::Resolvent,
        Experiment::Structural,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Attract => "attract",
            Experiment::Scatter => "scatter",
            Experiment::FreeWave => "freewave",
            Experiment::Laplace => "laplace",
            Experiment::Resolvent => "resolvent",
            Experiment::Structural => "structural",
        }
    }
}

/// Soliton, initial perturbation and the perturbed run, shared between experiments.
pub struct PerturbedRun {
    pub soliton: SolitonState,
    /// Soliton-frame initial data `Z0`.
    pub z0: FieldPair,
    pub output: RunOutput,
    pub seconds: f64,
}

/// A validated configuration with its grid, charge and cached runs.
pub struct Session {
    cfg: ExperimentConfig,
    seed: u64,
    hash: String,
    out: Option<PathBuf>,
    grid: SpectralGrid,
    charge: Arc<ChargeModel>,
    perturbed: OnceLock<Arc<PerturbedRun>>,
    running: Mutex<()>,
}

impl Session {
    pub fn new(cfg: ExperimentConfig, seed: u64, out: Option<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.grid()?;
        let charge = Arc::new(ChargeModel::new(cfg.profile()?, &grid)?);
        if let Some(dir) = &out {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self {
            hash: cfg.hash(),
            cfg,
            seed,
            out,
            grid,
            charge,
            perturbed: OnceLock::new(),
            running: Mutex::new(()),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn charge(&self) -> &Arc<ChargeModel> {
        &self.charge
    }

    pub fn header(&self, what: &str) -> String {
        format!(
            "{CSV_SCHEMA} {what} config_sha256={} seed={}",
            self.hash, self.seed
        )
    }

    fn csv<F>(&self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>, &str) -> Result<()>,
    {
        let Some(dir) = &self.out else {
            return Ok(());
        };
        let mut w = BufWriter::new(File::create(dir.join(name))?);
        write(&mut w, &self.header(name))?;
        w.flush()?;
        Ok(())
    }

    /// The soliton selected by `M`: `ω = M / (I + κ(0))`.
    pub fn soliton(&self) -> Result<SolitonState> {
        let s = &self.cfg.system;
        let w = limit_frequency(s.momentum, s.inertia, &self.charge)?;
        build_soliton(w, &self.charge, s.inertia)
    }

    pub fn separable_data(&self) -> SeparableData {
        SeparableData {
            a: self.cfg.data.a,
            b: self.cfg.data.b,
            phi_lambda: self.cfg.phi_lambda(),
            phi_pi: self.cfg.phi_pi(),
        }
    }

    pub fn nu_evaluator(&self) -> Result<NuEvaluator> {
        NuEvaluator::new(&self.charge, self.cfg.system.inertia, self.separable_data())
    }

    /// Separable data plus the seeded divergence-free bumps (ChaCha8, stream 0).
    pub fn initial_perturbation(&self) -> Result<FieldPair> {
        let mut z = self.separable_data().field_pair(&self.charge);
        let d = &self.cfg.data;
        if d.random_amplitude > 0.0 {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let g = &self.grid;
            let spread = self.cfg.run.data_radius / 3.0;
            for field in 0..2 {
                let mut acc = VectorField::zeros(g, Repr::Position);
                for _ in 0..d.bump_count {
                    let r = spread * rng.gen::<f64>().sqrt();
                    let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                    let (cx, cy) = (r * th.cos(), r * th.sin());
                    let amp = d.random_amplitude * (2.0 * rng.gen::<f64>() - 1.0);
                    let w2 = d.bump_width * d.bump_width;
                    // ∇^⊥ of a Gaussian stream function
                    let bump = VectorField::from_position_fn(g, |x, y| {
                        let e = amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / w2).exp();
                        [-2.0 * (y - cy) / w2 * e, 2.0 * (x - cx) / w2 * e]
                    });
                    acc.axpy(1.0, &bump)?;
                }
                let acc = helmholtz_project(g, &acc)?;
                if field == 0 {
                    z.a.axpy(1.0, &acc)?;
                } else {
                    z.pi.axpy(1.0, &acc)?;
                }
            }
        }
        Ok(z)
    }

    fn run_config(&self, t_max: f64, snapshots: Vec<f64>) -> RunConfig {
        let r = &self.cfg.run;
        RunConfig {
            dt: r.dt,
            t_max,
            cadence: r.cadence,
            beta: r.beta,
            data_radius: r.data_radius,
            snapshots,
        }
    }

    /// The perturbed-soliton run over `[0, run.t_max]`, computed once.
    pub fn perturbed_run(&self) -> Result<Arc<PerturbedRun>> {
        let _guard = self.running.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(r) = self.perturbed.get() {
            return Ok(r.clone());
        }
        let t0 = Instant::now();
        let soliton = self.soliton()?;
        let z0 = self.initial_perturbation()?;
        let st = SimState::from_soliton(self.charge.clone(), &soliton, Some(&z0))?;
        let snaps = vec![self.cfg.laplace.duhamel_time];
        let output = run(st, &soliton, &self.run_config(self.cfg.run.t_max, snaps))?;
        let r = Arc::new(PerturbedRun {
            soliton,
            z0,
            output,
            seconds: t0.elapsed().as_secs_f64(),
        });
        Ok(self.perturbed.get_or_init(|| r).clone())
    }

    fn require_separable(&self, what: &str) -> Result<()> {
        if !self.cfg.is_separable() {
            return Err(Error::Config(format!(
                "{what} needs separable data (data.random_amplitude = 0)"
            )));
        }
        Ok(())
    }

    pub fn run_experiment(&self, e: Experiment) -> Result<Report> {
        let t0 = Instant::now();
        let mut rep = match e {
            Experiment::Attract => exp_attraction(self),
            Experiment::Scatter => exp_scattering(self),
            Experiment::FreeWave => exp_freewave(self),
            Experiment::Laplace => exp_laplace(self),
            Experiment::Resolvent => exp_resolvent(self),
            Experiment::Structural => exp_structural(self),
        }?;
        rep.seconds = t0.elapsed().as_secs_f64();
        Ok(rep)
    }
}

fn fit_envelope(ts: &[f64], ys: &[f64], window: (f64, f64), half: f64) -> Result<DecayFit> {
    let env = envelope(ts, ys, half);
    let scale = env.iter().cloned().fold(0.0, f64::max);
    fit_power_law(ts, &env, window, scale)
}

fn data_is_zero(cfg: &ExperimentConfig) -> bool {
    cfg.data.a == 0.0 && cfg.data.b == 0.0 && cfg.data.random_amplitude == 0.0
}

/// Soliton fixed point, limit frequency and attraction rates.
pub fn exp_attraction(s: &Session) -> Result<Report> {
    let cfg = s.config();
    let mut rep = Report::new("attract");
    let g = s.grid();
    let c = s.charge();
    let nd = check_nondegeneracy(
        c,
        cfg.system.inertia,
        &logspace(1e-3, cfg.laplace.line_mu_max, 200),
    )?;
    rep.metric("nondegeneracy.min_abs", nd.min_abs);
    if !nd.holds {
        return Err(Error::Degenerate(nd.min_abs));
    }

    let sol = s.soliton()?;
    rep.metric("omega_star", sol.omega);
    rep.metric("kappa0", sol.kappa0);
    rep.metric("inertia", cfg.system.inertia);
    rep.metric("momentum", cfg.system.momentum);
    let t0 = Instant::now();
    let st = SimState::from_soliton(c.clone(), &sol, None)?;
    let out = run(st, &sol, &s.run_config(cfg.run.soliton_t_max, vec![]))?;
    let scale = sol.grad_norm_sq(g).sqrt();
    let z_max = out.samples.iter().fold(0.0_f64, |m, x| m.max(x.z_energy));
    rep.check(
        "C1",
        "soliton fixed point, max ||Z||_E0 / ||grad A||",
        z_max / scale,
        Bound::AtMost(1e-8),
    );
    rep.check(
        "C1.runtime",
        "soliton run wall time [s]",
        t0.elapsed().as_secs_f64(),
        Bound::AtMost(120.0),
    );
    let w_max = out.samples.iter().fold(0.0_f64, |m, x| m.max(x.err_omega));
    rep.metric("soliton.max_err_omega", w_max);
    s.csv("soliton.csv", |w, h| Ok(write_run_csv(w, h, &out.samples)?))?;

    if cfg.charge.profile == "reference" {
        rep.check(
            "C2.kappa0",
            "|kappa(0) - pi|",
            (kappa_zero(c)? - std::f64::consts::PI).abs(),
            Bound::AtMost(1e-8),
        );
    }
    if data_is_zero(cfg) {
        rep.check(
            "C1.omega",
            "soliton |omega - omega*| / |omega*|",
            w_max / sol.omega.abs(),
            Bound::AtMost(1e-8),
        );
        return Ok(rep);
    }

    let pr = s.perturbed_run()?;
    let out = &pr.output;
    s.csv("attract.csv", |w, h| Ok(write_run_csv(w, h, &out.samples)?))?;
    let last = out.samples.last().expect("non-empty run");
    let wstar = out.omega_star;
    rep.check(
        "C2",
        "|omega(T) - M/(I+kappa(0))| / |omega*|",
        (last.omega - wstar).abs() / wstar.abs(),
        Bound::AtMost(1e-4),
    );
    let ts: Vec<f64> = out.samples.iter().map(|x| x.t).collect();
    let ew: Vec<f64> = out.samples.iter().map(|x| x.err_omega).collect();
    let ez: Vec<f64> = out.samples.iter().map(|x| x.z_norm_wminus).collect();
    let fw = fit_power_law(&ts, &ew, cfg.run.fit_window, wstar.abs())?;
    let fz = fit_power_law(&ts, &ez, cfg.run.fit_window, ez[0])?;
    rep.fit("fit.omega", &fw);
    rep.fit("fit.z", &fz);
    rep.fit(
        "fit.omega.envelope",
        &fit_envelope(&ts, &ew, cfg.run.fit_window, cfg.run.envelope_half)?,
    );
    rep.fit(
        "fit.z.envelope",
        &fit_envelope(&ts, &ez, cfg.run.fit_window, cfg.run.envelope_half)?,
    );
    rep.check(
        "C3.omega",
        "exponent of |omega(t) - omega*|",
        fw.exponent,
        Bound::Band(-2.4, -1.6),
    );
    rep.check(
        "C3.z",
        "exponent of ||Z(t)||_{-beta}",
        fz.exponent,
        Bound::Band(-2.4, -1.6),
    );
    rep.check(
        "C3.runtime",
        "perturbed run wall time [s]",
        pr.seconds,
        Bound::AtMost(600.0),
    );
    Ok(rep)
}

/// `Ψ₊`, the remainder `r(t)` and unitarity of the free group on `Ψ₊`.
pub fn exp_scattering(s: &Session) -> Result<Report> {
    s.require_separable("scatter")?;
    let cfg = s.config();
    let mut rep = Report::new("scatter");
    let g = s.grid();
    let c = s.charge();
    let pr = s.perturbed_run()?;
    let dt = cfg.run.dt;

    // dynamics ν on [0, T], Laplace-inverted ν beyond
    let ev = s.nu_evaluator()?;
    let steps = (cfg.scattering.t_cut / dt).round() as usize;
    let inv = invert_nu_periodized(
        &ev,
        dt,
        steps,
        cfg.scattering.mu_max,
        cfg.scattering.period_factor,
        cfg.scattering.budget,
    )?;
    let dyn_nu = &pr.output.nu;
    let n_run = dyn_nu.values.len();
    let peak = dyn_nu.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    rep.metric(
        "splice.jump",
        (inv.nu.values[n_run - 1] - dyn_nu.values[n_run - 1]).abs() / peak.max(f64::MIN_POSITIVE),
    );
    let mut values = dyn_nu.values.clone();
    values.extend_from_slice(&inv.nu.values[n_run..]);
    let spliced = UniformSeries::new(dt, values);

    let (lo, hi) = cfg.run.fit_window;
    let times: Vec<f64> = pr
        .output
        .samples
        .iter()
        .map(|x| x.t)
        .filter(|&t| t >= lo && t <= hi)
        .collect();
    let sd = scattering_state(g, &pr.z0, &spliced, c, &times, ScatterOptions::default())?;
    rep.metric("psi_plus.energy", sd.psi_norm);
    rep.metric("psi_plus.tail_bound", sd.tail_bound);
    rep.metric("truncation", sd.truncation);
    let fr = fit_power_law(&times, &sd.r_norms, cfg.run.fit_window, sd.psi_norm)?;
    rep.fit("fit.r", &fr);
    rep.check(
        "C4.r",
        "exponent of ||r(t)||_E0",
        fr.exponent,
        Bound::Band(-1.4, -0.6),
    );

    // unitarity of W(t) on Ψ₊
    let mut dev: f64 = 0.0;
    let mut wave = Vec::with_capacity(times.len());
    for &t in &times {
        let n = energy_norm(g, &propagate(g, &sd.psi_plus, t)?)?;
        dev = dev.max((n - sd.psi_norm).abs() / sd.psi_norm);
        wave.push(n);
    }
    rep.check(
        "C4.unitary",
        "max | ||W(t)Psi+||_E0 / ||Psi+||_E0 - 1 |",
        dev,
        Bound::AtMost(1e-10),
    );

    // r(t) against the stored state
    let td = cfg.laplace.duhamel_time;
    if let Some((_, z)) = pr
        .output
        .snapshots
        .iter()
        .find(|(t, _)| (t - td).abs() < 0.5 * dt)
    {
        if let Some(i) = times.iter().position(|&t| (t - td).abs() < 0.5 * dt) {
            let mut r = z.clone();
            r.axpy(-1.0, &propagate(g, &sd.psi_plus, td)?)?;
            let direct = energy_norm(g, &r)?;
            rep.metric(
                "r.direct_vs_quadrature",
                (direct - sd.r_norms[i]).abs() / sd.r_norms[i],
            );
        }
    }
    s.csv("scatter.csv", |w, h| {
        writeln!(w, "# {h}")?;
        writeln!(w, "t,psi_wave_energy,r_norm")?;
        for ((t, e), r) in times.iter().zip(&wave).zip(&sd.r_norms) {
            writeln!(w, "{t:.6},{e:.17e},{r:.17e}")?;
        }
        Ok(())
    })?;
    Ok(rep)
}

/// Centred Gaussian data of unit width: below `1e−15` outside radius 6 and past the grid's Nyquist band.
fn freewave_data(g: &SpectralGrid) -> FieldPair {
    let a = VectorField::from_position_fn(g, |x, y| {
        let e = (-(x * x + y * y)).exp();
        [e, 0.5 * e]
    });
    let p = VectorField::from_position_fn(g, |x, y| {
        let e = (-(x * x + y * y)).exp();
        [-0.3 * e, e]
    });
    FieldPair { a, pi: p }
}

/// Energy conservation, Huygens support and dispersive decay of the free group.
pub fn exp_freewave(s: &Session) -> Result<Report> {
    let cfg = s.config();
    let f = &cfg.freewave;
    let mut rep = Report::new("freewave");
    let g = s.grid();
    let z = freewave_data(g).to_spectral(g)?;
    let e0 = energy_norm(g, &z)?;
    let spec = WeightedNormSpec::energy(-f.beta);
    let n = (f.t_max / f.cadence).round() as usize;
    let mut ts = Vec::with_capacity(n + 1);
    let mut wn = Vec::with_capacity(n + 1);
    let mut en = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let t = i as f64 * f.cadence;
        let w = propagate(g, &z, t)?;
        ts.push(t);
        wn.push(weighted_norm(g, &w, spec)?);
        en.push(energy_norm(g, &w)?);
    }
    let drift = en.iter().fold(0.0_f64, |m, e| m.max((e - e0).abs() / e0));
    rep.check(
        "C5.energy",
        "max relative energy drift",
        drift,
        Bound::AtMost(1e-12),
    );
    let fit = fit_power_law(&ts, &wn, f.fit_window, wn[0])?;
    rep.fit("fit.wave", &fit);
    rep.check(
        "C5.decay",
        "exponent of ||W(t)Z||_{-beta}",
        fit.exponent,
        Bound::Band(-2.3, -1.7),
    );

    // kernel: exactly zero outside the cone
    let th = f.huygens_time;
    let mut outside: f64 = 0.0;
    for i in 0..64 {
        let phi = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
        for &r in &[th * (1.0 + 1e-12), th + 0.1, 2.0 * th] {
            outside = outside.max(kernel_g([r * phi.cos(), r * phi.sin()], th).abs());
        }
    }
    rep.check(
        "C5.huygens_kernel",
        "max |G| outside the light cone",
        outside,
        Bound::AtMost(0.0),
    );

    // convolution path: tails beyond t + support
    let kz = kernel_apply(g, &z, th, f.support)?;
    let rz = propagate(g, &z, th)?;
    let mut diff = kz.clone();
    diff.axpy(-1.0, &rz)?;
    rep.metric(
        "kernel_vs_rotation",
        energy_norm(g, &diff)? / energy_norm(g, &rz)?,
    );
    let mut kp = kz.clone();
    kp.make_position(g)?;
    let mut peak: f64 = 0.0;
    let mut tail: f64 = 0.0;
    for i in 0..g.len() {
        let p = g.position(i);
        let r = p[0].hypot(p[1]);
        let v = [
            kp.a.comp(0)[i],
            kp.a.comp(1)[i],
            kp.pi.comp(0)[i],
            kp.pi.comp(1)[i],
        ]
        .iter()
        .fold(0.0_f64, |m, x| m.max(x.norm()));
        peak = peak.max(v);
        if r > th + f.support {
            tail = tail.max(v);
        }
    }
    rep.check(
        "C5.huygens_tail",
        "max field beyond t + R0 relative to peak",
        tail / peak,
        Bound::AtMost(1e-10),
    );

    s.csv("freewave.csv", |w, h| {
        writeln!(w, "# {h}")?;
        writeln!(w, "t,wave_norm_wminus,energy")?;
        for i in 0..ts.len() {
            writeln!(w, "{:.6},{:.17e},{:.17e}", ts[i], wn[i], en[i])?;
        }
        Ok(())
    })?;
    Ok(rep)
}

/// κ and ν̃ on the line, non-degeneracy, and the Laplace/dynamics cross-checks.
pub fn exp_laplace(s: &Session) -> Result<Report> {
    s.require_separable("laplace")?;
    let cfg = s.config();
    let l = &cfg.laplace;
    let mut rep = Report::new("laplace");
    let g = s.grid();
    let c = s.charge();
    let ev = s.nu_evaluator()?;
    let k0 = kappa_zero(c)?;
    rep.metric(
        "kappa.threshold_gap",
        (ev.kappa_evaluator().kappa(1e-9)? - k0).norm(),
    );
    let nd = check_nondegeneracy(
        c,
        cfg.system.inertia,
        &logspace(1e-3, l.line_mu_max, l.line_samples),
    )?;
    rep.metric("nondegeneracy.argmin", nd.argmin);
    rep.check(
        "nondegeneracy",
        "min |I + kappa(i mu + 0)|",
        nd.min_abs,
        Bound::AtLeast(nd.threshold),
    );
    let coeffs = ev.large_mu_coefficients()?;
    for (i, v) in coeffs.iter().enumerate() {
        rep.metric(&format!("nu_tilde.large_mu.{i}"), *v);
    }
    let line: Vec<f64> = (0..l.line_samples)
        .map(|i| -l.line_mu_max + 2.0 * l.line_mu_max * i as f64 / (l.line_samples - 1) as f64)
        .collect();
    s.csv("laplace_line.csv", |w, h| write_line_csv(w, h, &ev, &line))?;

    let pr = s.perturbed_run()?;
    let dt = cfg.run.dt;
    let (lo, hi) = l.cross_window;
    let steps = (hi / dt).round() as usize;
    let direct = invert_nu(&ev, dt, steps, &InversionOptions::default())?;
    let fft = invert_nu_periodized(
        &ev,
        dt,
        steps,
        cfg.scattering.mu_max,
        cfg.scattering.period_factor,
        cfg.scattering.budget,
    )?;
    let dyn_nu = &pr.output.nu;
    let mut err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    let mut routes: f64 = 0.0;
    for n in 0..=steps {
        let t = n as f64 * dt;
        if t < lo - 1e-9 {
            continue;
        }
        err = err.max((direct.nu.values[n] - dyn_nu.values[n]).abs());
        routes = routes.max((direct.nu.values[n] - fft.nu.values[n]).abs());
        scale = scale.max(dyn_nu.values[n].abs());
    }
    rep.metric("inversion.routes", routes / scale);
    rep.check(
        "C9.nu",
        "sup |nu_laplace - nu_dynamics| / sup |nu_dynamics|",
        err / scale,
        Bound::AtMost(1e-2),
    );
    s.csv("nu.csv", |w, h| write_nu_csv(w, h, &direct.nu, dyn_nu, 10))?;

    let td = l.duhamel_time;
    let (_, z_run) = pr
        .output
        .snapshots
        .iter()
        .find(|(t, _)| (t - td).abs() < 0.5 * dt)
        .ok_or_else(|| Error::Config(format!("no stored state at t = {td}")))?;
    let z_d = duhamel_solve(g, &pr.z0, dyn_nu, c, td)?;
    let mut d = z_d.clone();
    d.axpy(-1.0, z_run)?;
    rep.check(
        "C9.duhamel",
        "||Z_duhamel - Z_run||_E0 / ||Z_run||_E0",
        energy_norm(g, &d)? / energy_norm(g, z_run)?,
        Bound::AtMost(1e-4),
    );
    Ok(rep)
}

/// Threshold exponents, log cancellation and high-energy decay.
pub fn exp_resolvent(s: &Session) -> Result<Report> {
    let cfg = s.config();
    let v = &cfg.resolvent;
    let mut rep = Report::new("resolvent");
    let zetas = logspace(v.zeta_window.0, v.zeta_window.1, v.zeta_samples);
    let opts = HsOptions {
        radius: v.radius,
        radial_panels: v.radial_panels,
        ..HsOptions::default()
    };
    let t0 = Instant::now();
    let fits = threshold_exponent_fits(v.beta, &zetas, &opts)?;
    let hs_seconds = t0.elapsed().as_secs_f64();
    let wide = threshold_exponent_fits(
        v.beta,
        &zetas,
        &HsOptions {
            radius: 2.0 * v.radius,
            ..opts.clone()
        },
    )?;
    let targets = [1.5, 0.5, -0.5];
    for (k, f) in fits.iter().enumerate() {
        rep.fit(&format!("fit.hs.k{k}"), &f.fit);
        rep.metric(&format!("hs.k{k}.refinement"), f.refinement);
        rep.check(
            &format!("C6.k{k}"),
            &format!("HS exponent of d^{k}(R - P)"),
            f.fit.exponent,
            Bound::Band(targets[k] - 0.2, targets[k] + 0.2),
        );
        rep.check(
            &format!("C6.k{k}.radius"),
            "exponent change under doubled truncation radius",
            (f.fit.exponent - wide[k].fit.exponent).abs(),
            Bound::AtMost(0.05),
        );
    }
    rep.check(
        "C6.runtime",
        "HS exponent fits wall time [s]",
        hs_seconds,
        Bound::AtMost(300.0),
    );
    let zm = zetas[zetas.len() / 2];
    let lo = hs_norms(zm, v.beta, &opts)?;
    let hi = hs_norms(zm, v.beta + 1.0, &opts)?;
    let mono = (0..3)
        .map(|k| hi.norms[k] - lo.norms[k])
        .fold(f64::NEG_INFINITY, f64::max);
    rep.metric("hs.beta_monotonicity", mono);
    rep.metric(
        "pointwise.threshold",
        resolvent_minus_log(1.0, [1e-4, 0.0], Branch::Plus)?.norm(),
    );

    let sm = smoothed_resolvent_asymptotics(
        s.charge(),
        &SmoothedOptions {
            beta: v.beta,
            mus: logspace(v.mu_window.0, v.mu_window.1, v.mu_samples),
            ..SmoothedOptions::default()
        },
    )?;
    rep.check(
        "C7.cancel",
        "max_y |P(mu1) rho - P(mu2) rho|",
        sm.cancellation,
        Bound::AtMost(1e-10),
    );
    rep.check(
        "C7.log",
        "max_y |P(mu) rho - g0 rho|",
        sm.log_match,
        Bound::AtMost(1e-8),
    );
    rep.fit("fit.smoothed", &sm.fit);
    rep.check(
        "C7.rate",
        "exponent of the smoothed remainder",
        sm.fit.exponent,
        Bound::Band(1.3, 1.7),
    );

    let ev = s.nu_evaluator()?;
    let he = high_energy_decay(&ev, v.high_energy_window, v.high_energy_samples)?;
    rep.fit("fit.kappa", &he.kappa);
    rep.fit("fit.numerator", &he.numerator);
    rep.fit("fit.nu_tilde", &he.nu_tilde);
    rep.check(
        "C8.kappa",
        "exponent of |kappa(i mu + 0)|",
        he.kappa.exponent,
        Bound::AtMost(-0.7),
    );
    rep.check(
        "C8.nu",
        "exponent of |nu~(i mu + 0)|",
        he.nu_tilde.exponent,
        Bound::AtMost(-1.7),
    );

    s.csv("resolvent_hs.csv", |w, h| {
        writeln!(w, "# {h}")?;
        writeln!(w, "zeta,k,hs_norm")?;
        for f in &fits {
            for (z, n) in f.zetas.iter().zip(&f.norms) {
                writeln!(w, "{z:.10e},{},{n:.17e}", f.k)?;
            }
        }
        Ok(())
    })?;
    s.csv("resolvent_smoothed.csv", |w, h| {
        writeln!(w, "# {h}")?;
        writeln!(w, "mu,remainder_norm")?;
        for (m, n) in sm.mus.iter().zip(&sm.norms) {
            writeln!(w, "{m:.10e},{n:.17e}")?;
        }
        Ok(())
    })?;
    Ok(rep)
}

/// Transform identities, Gauss law, divergence, energy-drift order, linearity
/// and the momentum identity on the small structural grid.
pub fn exp_structural(s: &Session) -> Result<Report> {
    let cfg = s.config();
    let st = &cfg.structural;
    let mut rep = Report::new("structural");
    let g = SpectralGrid::new(st.n, st.length)?;
    let c = Arc::new(ChargeModel::new(cfg.profile()?, &g)?);

    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let f = ScalarField::random(&g, &mut rng);
    let back = f.to_spectral(&g)?.to_position(&g)?;
    let fmax = f.data().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    let rt = f
        .data()
        .iter()
        .zip(back.data())
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).norm()))
        / fmax;
    let xs: f64 = f.data().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_area();
    let ks: f64 = f
        .to_spectral(&g)?
        .data()
        .iter()
        .map(|v| v.norm_sqr())
        .sum::<f64>()
        * g.dual_cell_area();
    rep.check(
        "C10.roundtrip",
        "transform round trip, max relative error",
        rt,
        Bound::AtMost(1e-12),
    );
    rep.check(
        "C10.plancherel",
        "Plancherel relative defect",
        (xs - ks).abs() / xs,
        Bound::AtMost(1e-12),
    );

    let sol = build_soliton(
        limit_frequency(cfg.system.momentum, cfg.system.inertia, &c)?,
        &c,
        cfg.system.inertia,
    )?;
    let pert = SeparableData {
        a: cfg.data.a,
        b: cfg.data.b,
        phi_lambda: cfg.phi_lambda(),
        phi_pi: cfg.phi_pi(),
    }
    .field_pair(&c);
    let rc = |dt: f64| RunConfig {
        dt,
        t_max: st.t_max,
        cadence: st.t_max / 20.0,
        beta: cfg.run.beta,
        data_radius: cfg.run.data_radius,
        snapshots: vec![st.t_max],
    };
    let mk = |scale: f64| SimState::from_soliton(c.clone(), &sol, Some(&pert.scaled(scale)));
    let coarse = run(mk(1.0)?, &sol, &rc(st.dt))?;
    let fine = run(mk(1.0)?, &sol, &rc(0.5 * st.dt))?;
    let drift = |o: &RunOutput| {
        let h0 = o.samples[0].energy;
        o.samples
            .iter()
            .fold(0.0_f64, |m, x| m.max((x.energy - h0).abs()))
    };
    let (dc, df) = (drift(&coarse), drift(&fine));
    rep.metric("energy_drift.coarse", dc);
    rep.metric("energy_drift.fine", df);
    rep.check(
        "C10.drift_order",
        "energy drift ratio under dt halving",
        dc / df,
        Bound::Band(3.5, 4.5),
    );

    let end = &coarse.final_state;
    let (e, _) = maxwell_fields(end)?;
    let div = e.divergence(&g)?;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..g.len() {
        num += (div.data()[i].re - c.rho_hat()[i]).powi(2) + div.data()[i].im.powi(2);
        den += c.rho_hat()[i].powi(2);
    }
    rep.check(
        "C10.gauss",
        "Gauss law residual",
        (num / den).sqrt(),
        Bound::AtMost(1e-10),
    );
    let dv = end
        .y
        .a
        .divergence_ratio(&g)?
        .max(end.y.pi.divergence_ratio(&g)?);
    rep.check(
        "C10.divergence",
        "max divergence ratio of A, Pi",
        dv,
        Bound::AtMost(1e-10),
    );

    let alpha = 0.37;
    let scaled = run(mk(alpha)?, &sol, &rc(st.dt))?;
    let z1 = to_soliton_frame(&coarse.final_state, &sol)?.z;
    let za = to_soliton_frame(&scaled.final_state, &sol)?.z;
    let mut d = za.clone();
    d.axpy(-alpha, &z1)?;
    rep.check(
        "C10.linearity",
        "||Z(alpha Z0) - alpha Z(Z0)||_E0 / ||alpha Z(Z0)||_E0",
        energy_norm(&g, &d)? / (alpha * energy_norm(&g, &z1)?),
        Bound::AtMost(1e-12),
    );
    let m = cfg.system.momentum.abs().max(1.0);
    let mres = coarse
        .samples
        .iter()
        .chain(&fine.samples)
        .fold(0.0_f64, |a, x| a.max(x.m_residual.abs()));
    rep.check(
        "C10.momentum",
        "momentum identity residual in units of eps |M|",
        mres / (f64::EPSILON * m),
        Bound::AtMost(4.0),
    );
    Ok(rep)
}

/// Run experiments in order; summary key-values go to `summary.txt` when an
/// output directory is set.
pub fn run_all(s: &Session, which: &[Experiment]) -> Result<Vec<Report>> {
    let mut out = Vec::with_capacity(which.len());
    for &e in which {
        out.push(s.run_experiment(e)?);
    }
    if let Some(dir) = &s.out {
        write_summary(&dir.join("summary.txt"), s, &out)?;
    }
    Ok(out)
}

/// One `key = value` per line.
pub fn summary_lines(s: &Session, reports: &[Report]) -> Vec<String> {
    let mut v = vec![
        format!("schema = {CSV_SCHEMA}"),
        format!("config_sha256 = {}", s.hash),
        format!("seed = {}", s.seed),
    ];
    for r in reports {
        let e = &r.experiment;
        for c in &r.criteria {
            v.push(format!("{e}.{}.value = {:.17e}", c.id, c.value));
            v.push(format!("{e}.{}.bound = {}", c.id, c.bound));
            v.push(format!("{e}.{}.pass = {}", c.id, c.pass));
        }
        for (k, m) in &r.metrics {
            v.push(format!("{e}.{k} = {m:.17e}"));
        }
        v.push(format!("{e}.pass = {}", r.passed()));
    }
    v.push(format!("all.pass = {}", reports.iter().all(Report::passed)));
    v
}

pub fn write_summary(path: &Path, s: &Session, reports: &[Report]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for l in summary_lines(s, reports) {
        writeln!(w, "{l}")?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::AtMost(1.0).holds(1.0));
        assert!(!Bound::AtMost(1.0).holds(f64::NAN));
        assert!(Bound::AtLeast(0.5).holds(0.7));
        assert!(Bound::Band(-2.4, -1.6).holds(-2.0));
        assert!(!Bound::Band(-2.4, -1.6).holds(-3.0));
    }

    #[test]
    fn report_lines() {
        let mut r = Report::new("x");
        assert!(r.passed());
        r.check("C0", "thing", 2.0, Bound::AtMost(1.0));
        r.metric("m", 3.0);
        assert!(!r.passed());
        assert!(r
            .criterion("C0")
            .unwrap()
            .to_string()
            .starts_with("FAIL C0"));
        assert_eq!(r.value("m"), Some(3.0));
    }

    #[test]
    fn quick_session_perturbation_is_seeded() {
        let mut cfg = ExperimentConfig::desk_scale().quick();
        cfg.data.random_amplitude = 0.01;
        let a = Session::new(cfg.clone(), 3, None)
            .unwrap()
            .initial_perturbation()
            .unwrap();
        let b = Session::new(cfg.clone(), 3, None)
            .unwrap()
            .initial_perturbation()
            .unwrap();
        let c = Session::new(cfg, 4, None)
            .unwrap()
            .initial_perturbation()
            .unwrap();
        let g = SpectralGrid::new(384, 120.0).unwrap();
        assert_eq!(a.a.comp(0), b.a.comp(0));
        assert_ne!(a.a.comp(0), c.a.comp(0));
        assert!(a.a.divergence_ratio(&g).unwrap() < 1e-10);
    }
}
