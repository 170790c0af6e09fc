//! One-dimensional quadrature: Gauss–Legendre rules and adaptive Gauss–Kronrod.

use std::f64::consts::PI;

use crate::{Error, Result};

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize, a: f64, b: f64) -> Self {
        let (x, w) = gauss_legendre(n);
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        Self {
            nodes: x.iter().map(|t| c + r * t).collect(),
            weights: w.iter().map(|t| r * t).collect(),
        }
    }

    /// Composite rule over consecutive panels `[e_i, e_{i+1}]`.
    pub fn composite(edges: &[f64], per_panel: usize) -> Self {
        let (x, w) = gauss_legendre(per_panel);
        let mut nodes = Vec::with_capacity(edges.len() * per_panel);
        let mut weights = Vec::with_capacity(edges.len() * per_panel);
        for e in edges.windows(2) {
            let c = 0.5 * (e[0] + e[1]);
            let r = 0.5 * (e[1] - e[0]);
            for (t, wt) in x.iter().zip(&w) {
                nodes.push(c + r * t);
                weights.push(r * wt);
            }
        }
        Self { nodes, weights }
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = r * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * r, ((kron - gauss) * r).abs())
}

/// Tolerances for [`adaptive`].
#[derive(Clone, Copy, Debug)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-13,
            rel: 1e-11,
            max_intervals: 4000,
        }
    }
}

/// Globally adaptive GK15 on `[a, b]`; returns `(value, error estimate)`.
///
/// Errors when the interval budget is exhausted before reaching tolerance.
pub fn adaptive<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<(f64, f64)> {
    if a == b {
        return Ok((0.0, 0.0));
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![(a, b, v, e)];
    let mut total = v;
    let mut err = e;
    while err > tol.abs.max(tol.rel * total.abs()) {
        if pieces.len() >= tol.max_intervals {
            return Err(Error::Quadrature(format!(
                "interval budget exhausted on [{a}, {b}]: value {total:.6e}, error {err:.3e}"
            )));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (lo, hi, pv, pe) = pieces.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(&mut f, lo, mid);
        let (v2, e2) = gk15(&mut f, mid, hi);
        total += v1 + v2 - pv;
        err += e1 + e2 - pe;
        pieces.push((lo, mid, v1, e1));
        pieces.push((mid, hi, v2, e2));
    }
    // resum to shed accumulated cancellation in the running total
    let value = pieces.iter().map(|p| p.2).sum();
    let err = pieces.iter().map(|p| p.3).sum();
    Ok((value, err))
}

/// Adaptive integral over consecutive breakpoints.
pub fn adaptive_breaks<F: FnMut(f64) -> f64>(
    mut f: F,
    breaks: &[f64],
    tol: Tolerance,
) -> Result<(f64, f64)> {
    let mut v = 0.0;
    let mut e = 0.0;
    for w in breaks.windows(2) {
        let (vi, ei) = adaptive(&mut f, w[0], w[1], tol)?;
        v += vi;
        e += ei;
    }
    Ok((v, e))
}
