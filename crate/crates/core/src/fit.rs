//! Power-law fits in log-log coordinates and finite-difference smoothness probes.

use num_complex::Complex64;
use serde::Serialize;

use crate::{Error, Result};

/// Least-squares fit of `y ≈ amplitude · t^exponent` on a window.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// `max |log y − fit|` over the window.
    pub residual: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Minimum sample count inside a fit window.
pub const MIN_SAMPLES: usize = 8;

/// Fit `log y = log a + p log t` on `window`. `scale` sets the noise floor
/// `1e3 · eps · scale`; samples at or below it are an error.
pub fn fit_power_law(ts: &[f64], ys: &[f64], window: (f64, f64), scale: f64) -> Result<DecayFit> {
    if ts.len() != ys.len() {
        return Err(Error::Fit(format!(
            "{} times vs {} values",
            ts.len(),
            ys.len()
        )));
    }
    let floor = 1e3 * f64::EPSILON * scale.abs();
    let mut lx = Vec::new();
    let mut ly = Vec::new();
    for (&t, &y) in ts.iter().zip(ys) {
        if t < window.0 || t > window.1 {
            continue;
        }
        if !(y > floor) || t <= 0.0 {
            return Err(Error::Fit(format!(
                "sample y({t}) = {y:.3e} at or below the floor {floor:.3e}"
            )));
        }
        lx.push(t.ln());
        ly.push(y.ln());
    }
    if lx.len() < MIN_SAMPLES {
        return Err(Error::Fit(format!(
            "{} samples in window [{}, {}], need {MIN_SAMPLES}",
            lx.len(),
            window.0,
            window.1
        )));
    }
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("window spans a single abscissa".into()));
    }
    let p = sxy / sxx;
    let b = my - p * mx;
    let residual = lx
        .iter()
        .zip(&ly)
        .map(|(x, y)| (y - (b + p * x)).abs())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        exponent: p,
        amplitude: b.exp(),
        residual,
        window,
        samples: lx.len(),
    })
}

/// Running maximum of `|y|` over `[t − half, t + half]`; turns oscillating
/// decaying signals into a fit-friendly upper envelope.
pub fn envelope(ts: &[f64], ys: &[f64], half: f64) -> Vec<f64> {
    let n = ts.len();
    let mut out = vec![0.0; n];
    let mut lo = 0;
    let mut hi = 0;
    for i in 0..n {
        while ts[lo] < ts[i] - half {
            lo += 1;
        }
        while hi + 1 < n && ts[hi + 1] <= ts[i] + half {
            hi += 1;
        }
        out[i] = ys[lo..=hi].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    }
    out
}

/// Logarithmically spaced samples in `[a, b]`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Probe {
    pub value: Complex64,
    /// `|D_h − D_{h/2}| / 3`.
    pub error: f64,
}

/// Central-difference derivative of order 1 or 2 at `mu` with step `h`,
/// returned at step `h/2` with a Richardson error estimate.
pub fn smoothness_probe<F>(f: F, mu: f64, order: u8, h: f64, domain: (f64, f64)) -> Result<Probe>
where
    F: Fn(f64) -> Complex64,
{
    if mu - h < domain.0 || mu + h > domain.1 {
        return Err(Error::OutOfRange(format!(
            "stencil [{}, {}] leaves the domain [{}, {}]",
            mu - h,
            mu + h,
            domain.0,
            domain.1
        )));
    }
    let d = |h: f64| -> Result<Complex64> {
        match order {
            1 => Ok((f(mu + h) - f(mu - h)) / (2.0 * h)),
            2 => Ok((f(mu + h) - 2.0 * f(mu) + f(mu - h)) / (h * h)),
            _ => Err(Error::OutOfRange(format!(
                "probe order {order} not in 1..=2"
            ))),
        }
    };
    let dh = d(h)?;
    let dh2 = d(0.5 * h)?;
    Ok(Probe {
        value: dh2,
        error: (dh - dh2).norm() / 3.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples<F: Fn(f64) -> f64>(f: F) -> (Vec<f64>, Vec<f64>) {
        let ts: Vec<f64> = (0..=60).map(|i| 10.0 + 0.5 * i as f64).collect();
        let ys = ts.iter().map(|&t| f(t)).collect();
        (ts, ys)
    }

    #[test]
    fn exact_power_laws() {
        let (ts, ys) = samples(|t| t.powi(-2));
        let f = fit_power_law(&ts, &ys, (10.0, 40.0), 1.0).unwrap();
        assert!((f.exponent + 2.0).abs() < 1e-12);
        assert!(f.residual < 1e-12);
        let (ts, ys) = samples(|t| 5.0 / t);
        let f = fit_power_law(&ts, &ys, (10.0, 40.0), 1.0).unwrap();
        assert!((f.exponent + 1.0).abs() < 1e-12);
        assert!((f.amplitude - 5.0).abs() < 1e-10);
    }

    #[test]
    fn perturbed_power_law() {
        let (ts, ys) = samples(|t| t.powi(-2) * (1.0 + 0.1 * t.sin()));
        let f = fit_power_law(&ts, &ys, (10.0, 40.0), 1.0).unwrap();
        assert!(f.exponent > -2.1 && f.exponent < -1.9, "{}", f.exponent);
    }

    #[test]
    fn fit_errors() {
        let (ts, ys) = samples(|t| t.powi(-2));
        assert!(fit_power_law(&ts, &ys, (100.0, 200.0), 1.0).is_err());
        let zeros = vec![0.0; ts.len()];
        assert!(fit_power_law(&ts, &zeros, (10.0, 40.0), 1.0).is_err());
        assert!(fit_power_law(&ts, &ys[1..], (10.0, 40.0), 1.0).is_err());
    }

    #[test]
    fn envelope_of_oscillation() {
        let ts: Vec<f64> = (0..2000).map(|i| 0.05 * i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| t.sin()).collect();
        let e = envelope(&ts, &ys, 3.2);
        assert!(e[500..1500].iter().all(|v| (v - 1.0).abs() < 1e-2));
    }

    #[test]
    fn probe_quadratic() {
        let p =
            smoothness_probe(|m| Complex64::new(m * m, 0.0), 0.5, 2, 1e-2, (-1.0, 1.0)).unwrap();
        assert!((p.value.re - 2.0).abs() < 1e-10);
        assert!(p.error < 1e-10);
        assert!(smoothness_probe(|m| Complex64::new(m, 0.0), 0.99, 1, 0.1, (-1.0, 1.0)).is_err());
        assert!(smoothness_probe(|m| Complex64::new(m, 0.0), 0.0, 3, 0.1, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn probe_corner_diverges() {
        let f = |m: f64| Complex64::new(m.abs().powf(1.5), 0.0);
        let a = smoothness_probe(f, 0.01, 2, 1e-4, (-1.0, 1.0)).unwrap();
        let b = smoothness_probe(f, 0.001, 2, 1e-5, (-1.0, 1.0)).unwrap();
        assert!((a.value.re - 0.75 * 0.01f64.powf(-0.5)).abs() < 1e-3 * a.value.re);
        assert!(b.value.re > 3.0 * a.value.re);
    }
}
