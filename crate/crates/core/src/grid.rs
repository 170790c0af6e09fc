//! Periodic 2D spectral discretization.
//!
//! Nodes are `x_j = -L/2 + j L/N` on each axis and the dual nodes are
//! `k_n = 2 pi n / L` with `n` in `[-N/2, N/2)`, stored in FFT order.
//! Spectral samples approximate the continuum unitary transform
//!
//! ```text
//! f^(k) = (2 pi)^-1 ∫ e^{-i k·x} f(x) dx
//! ```
//!
//! so that `Σ_x f g h² = Σ_k f^ conj(g^) dk²` holds to rounding and every
//! k-side formula can be written without stray factors of `2 pi`.
//!
//! Flat storage is row-major with index `iy * N + ix`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

const REDUCE_CHUNK: usize = 4096;

/// Order-fixed parallel sum: chunk partial sums are combined sequentially so
/// results do not depend on the thread schedule.
pub(crate) fn det_sum<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..len.div_ceil(REDUCE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * REDUCE_CHUNK;
            let hi = (lo + REDUCE_CHUNK).min(len);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partials.iter().sum()
}

struct GridInner {
    n: usize,
    length: f64,
    axis_x: Vec<f64>,
    axis_k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Square periodic box with `N x N` nodes. Cheap to clone; plans are shared.
#[derive(Clone)]
pub struct SpectralGrid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for SpectralGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralGrid")
            .field("n", &self.inner.n)
            .field("length", &self.inner.length)
            .finish()
    }
}

impl SpectralGrid {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "N must be even and >= 16, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "L must be positive, got {length}"
            )));
        }
        let h = length / n as f64;
        let dk = 2.0 * PI / length;
        let axis_x = (0..n).map(|j| -0.5 * length + j as f64 * h).collect();
        let axis_k = (0..n)
            .map(|m| {
                let idx = if m < n / 2 {
                    m as f64
                } else {
                    m as f64 - n as f64
                };
                idx * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridInner {
                n,
                length,
                axis_x,
                axis_k,
                fwd,
                inv,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    /// Number of nodes, `N²`.
    pub fn len(&self) -> usize {
        self.inner.n * self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Node spacing `h = L/N`.
    pub fn spacing(&self) -> f64 {
        self.inner.length / self.inner.n as f64
    }

    /// Dual spacing `2 pi / L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.inner.length
    }

    /// x-side quadrature weight `h²`.
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// k-side quadrature weight `dk²`.
    pub fn dual_cell_area(&self) -> f64 {
        let d = self.dk();
        d * d
    }

    pub fn same_as(&self, other: &SpectralGrid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n && self.inner.length == other.inner.length)
    }

    pub fn axis_x(&self) -> &[f64] {
        &self.inner.axis_x
    }

    pub fn axis_k(&self) -> &[f64] {
        &self.inner.axis_k
    }

    /// Box-centred coordinates of node `idx`.
    #[inline]
    pub fn position(&self, idx: usize) -> [f64; 2] {
        let n = self.inner.n;
        [self.inner.axis_x[idx % n], self.inner.axis_x[idx / n]]
    }

    /// Wave vector of mode `idx`.
    #[inline]
    pub fn kvec(&self, idx: usize) -> [f64; 2] {
        let n = self.inner.n;
        [self.inner.axis_k[idx % n], self.inner.axis_k[idx / n]]
    }

    /// Wave vector used for odd derivatives: Nyquist components are zeroed so
    /// that derivatives of real fields stay real.
    #[inline]
    pub fn kvec_deriv(&self, idx: usize) -> [f64; 2] {
        let n = self.inner.n;
        let (ix, iy) = (idx % n, idx / n);
        let kx = if ix == n / 2 {
            0.0
        } else {
            self.inner.axis_k[ix]
        };
        let ky = if iy == n / 2 {
            0.0
        } else {
            self.inner.axis_k[iy]
        };
        [kx, ky]
    }

    #[inline]
    pub fn knorm(&self, idx: usize) -> f64 {
        let k = self.kvec(idx);
        k[0].hypot(k[1])
    }

    #[inline]
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let n = self.inner.n;
        idx % n == n / 2 || idx / n == n / 2
    }

    /// Japanese bracket `<x> = (1 + |x|²)^{1/2}` at node `idx`.
    #[inline]
    pub fn bracket(&self, idx: usize) -> f64 {
        let p = self.position(idx);
        (1.0 + p[0] * p[0] + p[1] * p[1]).sqrt()
    }

    fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.inner.n;
        let plan = if inverse {
            &self.inner.inv
        } else {
            &self.inner.fwd
        };
        let scratch_len = plan.get_inplace_scratch_len();
        let rows = |buf: &mut [Complex64]| {
            buf.par_chunks_mut(n).for_each_init(
                || vec![Complex64::default(); scratch_len],
                |scratch, row| plan.process_with_scratch(row, scratch),
            );
        };
        rows(data);
        let mut t = transpose(data, n);
        rows(&mut t);
        let back = transpose(&t, n);
        data.copy_from_slice(&back);
    }

    #[inline]
    fn checker(&self, idx: usize) -> f64 {
        let n = self.inner.n;
        if (idx % n + idx / n).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// In-place x → k transform of a full data vector.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        self.fft2(data, false);
        let scale = self.cell_area() / (2.0 * PI);
        data.par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v *= scale * self.checker(i));
    }

    /// In-place k → x transform of a full data vector.
    pub fn inverse(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.len());
        data.par_iter_mut()
            .enumerate()
            .for_each(|(i, v)| *v *= self.checker(i));
        self.fft2(data, true);
        let scale = self.dual_cell_area() / (2.0 * PI);
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    /// Inverse transform of two Hermitian spectra with a single complex FFT.
    pub fn inverse_real_pair(&self, a: &[Complex64], b: &[Complex64]) -> (Vec<f64>, Vec<f64>) {
        let mut packed: Vec<Complex64> = a
            .par_iter()
            .zip(b.par_iter())
            .map(|(x, y)| x + Complex64::i() * y)
            .collect();
        self.inverse(&mut packed);
        packed.par_iter().map(|v| (v.re, v.im)).unzip()
    }

    /// Spectral samples `f(|k|)` of a radial function, Nyquist lines zeroed.
    pub fn radial_spectral<F: Fn(f64) -> f64 + Sync>(&self, f: F) -> Vec<f64> {
        (0..self.len())
            .into_par_iter()
            .map(|i| {
                if self.is_nyquist(i) {
                    0.0
                } else {
                    f(self.knorm(i))
                }
            })
            .collect()
    }
}

fn transpose(src: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, v) in row.iter_mut().enumerate() {
            *v = src[j * n + i];
        }
    });
    out
}

/// Which representation a field's samples are in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Repr {
    Position,
    Spectral,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct GridTag {
    n: usize,
    length: f64,
}

impl GridTag {
    fn of(grid: &SpectralGrid) -> Self {
        Self {
            n: grid.n(),
            length: grid.length(),
        }
    }

    fn check(&self, grid: &SpectralGrid) -> Result<()> {
        if self.n == grid.n() && self.length == grid.length() {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Scalar samples on a grid. Position samples are real up to rounding.
#[derive(Clone, Debug)]
pub struct ScalarField {
    tag: GridTag,
    repr: Repr,
    data: Vec<Complex64>,
}

impl ScalarField {
    pub fn zeros(grid: &SpectralGrid, repr: Repr) -> Self {
        Self {
            tag: GridTag::of(grid),
            repr,
            data: vec![Complex64::default(); grid.len()],
        }
    }

    pub fn from_data(grid: &SpectralGrid, repr: Repr, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            tag: GridTag::of(grid),
            repr,
            data,
        })
    }

    pub fn from_real(grid: &SpectralGrid, values: &[f64]) -> Result<Self> {
        Self::from_data(
            grid,
            Repr::Position,
            values.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
        )
    }

    pub fn from_position_fn<F: Fn(f64, f64) -> f64 + Sync>(grid: &SpectralGrid, f: F) -> Self {
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let p = grid.position(i);
                Complex64::new(f(p[0], p[1]), 0.0)
            })
            .collect();
        Self {
            tag: GridTag::of(grid),
            repr: Repr::Position,
            data,
        }
    }

    /// Gaussian white noise in position space, from a caller-owned generator.
    pub fn random<R: Rng>(grid: &SpectralGrid, rng: &mut R) -> Self {
        let values: Vec<f64> = (0..grid.len()).map(|_| standard_normal(rng)).collect();
        Self::from_real(grid, &values).expect("length matches")
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn to_spectral(&self, grid: &SpectralGrid) -> Result<Self> {
        let mut out = self.clone();
        out.make_spectral(grid)?;
        Ok(out)
    }

    pub fn to_position(&self, grid: &SpectralGrid) -> Result<Self> {
        let mut out = self.clone();
        out.make_position(grid)?;
        Ok(out)
    }

    pub fn make_spectral(&mut self, grid: &SpectralGrid) -> Result<()> {
        self.tag.check(grid)?;
        if self.repr == Repr::Position {
            grid.forward(&mut self.data);
            self.repr = Repr::Spectral;
        }
        Ok(())
    }

    pub fn make_position(&mut self, grid: &SpectralGrid) -> Result<()> {
        self.tag.check(grid)?;
        if self.repr == Repr::Spectral {
            grid.inverse(&mut self.data);
            self.repr = Repr::Position;
        }
        Ok(())
    }

    /// Real parts of position samples.
    pub fn real_values(&self) -> Result<Vec<f64>> {
        if self.repr != Repr::Position {
            return Err(Error::Representation("expected position samples"));
        }
        Ok(self.data.iter().map(|v| v.re).collect())
    }

    /// Spectral gradient (odd derivative, Nyquist zeroed).
    pub fn gradient(&self, grid: &SpectralGrid) -> Result<VectorField> {
        let s = self.to_spectral(grid)?;
        let comp = |axis: usize| -> Vec<Complex64> {
            s.data
                .par_iter()
                .enumerate()
                .map(|(i, v)| Complex64::new(0.0, grid.kvec_deriv(i)[axis]) * v)
                .collect()
        };
        Ok(VectorField {
            tag: self.tag,
            repr: Repr::Spectral,
            comps: [comp(0), comp(1)],
        })
    }

    pub fn laplacian(&self, grid: &SpectralGrid) -> Result<ScalarField> {
        let mut s = self.to_spectral(grid)?;
        s.data.par_iter_mut().enumerate().for_each(|(i, v)| {
            let k = grid.kvec(i);
            *v *= -(k[0] * k[0] + k[1] * k[1]);
        });
        Ok(s)
    }
}

/// Two-component vector field.
#[derive(Clone, Debug)]
pub struct VectorField {
    tag: GridTag,
    repr: Repr,
    comps: [Vec<Complex64>; 2],
}

impl VectorField {
    pub fn zeros(grid: &SpectralGrid, repr: Repr) -> Self {
        Self {
            tag: GridTag::of(grid),
            repr,
            comps: [
                vec![Complex64::default(); grid.len()],
                vec![Complex64::default(); grid.len()],
            ],
        }
    }

    pub fn from_components(
        grid: &SpectralGrid,
        repr: Repr,
        c0: Vec<Complex64>,
        c1: Vec<Complex64>,
    ) -> Result<Self> {
        if c0.len() != grid.len() || c1.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            tag: GridTag::of(grid),
            repr,
            comps: [c0, c1],
        })
    }

    pub fn from_position_fn<F: Fn(f64, f64) -> [f64; 2] + Sync>(grid: &SpectralGrid, f: F) -> Self {
        let vals: Vec<[f64; 2]> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let p = grid.position(i);
                f(p[0], p[1])
            })
            .collect();
        let c0 = vals.iter().map(|v| Complex64::new(v[0], 0.0)).collect();
        let c1 = vals.iter().map(|v| Complex64::new(v[1], 0.0)).collect();
        Self {
            tag: GridTag::of(grid),
            repr: Repr::Position,
            comps: [c0, c1],
        }
    }

    pub fn from_spectral_fn<F: Fn(usize) -> [Complex64; 2] + Sync + Send>(
        grid: &SpectralGrid,
        f: F,
    ) -> Self {
        let vals: Vec<[Complex64; 2]> = (0..grid.len()).into_par_iter().map(&f).collect();
        Self {
            tag: GridTag::of(grid),
            repr: Repr::Spectral,
            comps: [
                vals.iter().map(|v| v[0]).collect(),
                vals.iter().map(|v| v[1]).collect(),
            ],
        }
    }

    pub fn random<R: Rng>(grid: &SpectralGrid, rng: &mut R) -> Self {
        let a = ScalarField::random(grid, rng).into_data();
        let b = ScalarField::random(grid, rng).into_data();
        Self {
            tag: GridTag::of(grid),
            repr: Repr::Position,
            comps: [a, b],
        }
    }

    pub fn repr(&self) -> Repr {
        self.repr
    }

    pub fn comp(&self, c: usize) -> &[Complex64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.comps[c]
    }

    pub fn comps_mut(&mut self) -> (&mut [Complex64], &mut [Complex64]) {
        let [a, b] = &mut self.comps;
        (a, b)
    }

    pub fn check_grid(&self, grid: &SpectralGrid) -> Result<()> {
        self.tag.check(grid)
    }

    pub fn same_grid(&self, other: &VectorField) -> bool {
        self.tag == other.tag
    }

    pub fn make_spectral(&mut self, grid: &SpectralGrid) -> Result<()> {
        self.tag.check(grid)?;
        if self.repr == Repr::Position {
            for c in &mut self.comps {
                grid.forward(c);
            }
            self.repr = Repr::Spectral;
        }
        Ok(())
    }

    pub fn make_position(&mut self, grid: &SpectralGrid) -> Result<()> {
        self.tag.check(grid)?;
        if self.repr == Repr::Spectral {
            for c in &mut self.comps {
                grid.inverse(c);
            }
            self.repr = Repr::Position;
        }
        Ok(())
    }

    pub fn to_spectral(&self, grid: &SpectralGrid) -> Result<Self> {
        let mut out = self.clone();
        out.make_spectral(grid)?;
        Ok(out)
    }

    pub fn to_position(&self, grid: &SpectralGrid) -> Result<Self> {
        let mut out = self.clone();
        out.make_position(grid)?;
        Ok(out)
    }

    /// Pointwise `J f`.
    pub fn rotated(&self) -> Self {
        let neg: Vec<Complex64> = self.comps[0].par_iter().map(|v| -v).collect();
        Self {
            tag: self.tag,
            repr: self.repr,
            comps: [self.comps[1].clone(), neg],
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.scale(s);
        out
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.comps {
            c.par_iter_mut().for_each(|v| *v *= s);
        }
    }

    /// `self += s * other`.
    pub fn axpy(&mut self, s: f64, other: &VectorField) -> Result<()> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        if self.repr != other.repr {
            return Err(Error::Representation("axpy needs matching representations"));
        }
        for (a, b) in self.comps.iter_mut().zip(other.comps.iter()) {
            a.par_iter_mut()
                .zip(b.par_iter())
                .for_each(|(x, y)| *x += s * y);
        }
        Ok(())
    }

    /// Spectral divergence (scalar, spectral representation).
    pub fn divergence(&self, grid: &SpectralGrid) -> Result<ScalarField> {
        let s = self.to_spectral(grid)?;
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = grid.kvec_deriv(i);
                Complex64::i() * (k[0] * s.comps[0][i] + k[1] * s.comps[1][i])
            })
            .collect();
        Ok(ScalarField {
            tag: self.tag,
            repr: Repr::Spectral,
            data,
        })
    }

    /// Scalar curl `∂₁f₂ − ∂₂f₁` (spectral representation).
    pub fn curl(&self, grid: &SpectralGrid) -> Result<ScalarField> {
        let s = self.to_spectral(grid)?;
        let data = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                let k = grid.kvec_deriv(i);
                Complex64::i() * (k[0] * s.comps[1][i] - k[1] * s.comps[0][i])
            })
            .collect();
        Ok(ScalarField {
            tag: self.tag,
            repr: Repr::Spectral,
            data,
        })
    }

    /// `max_k |k·f^(k)| / max_k |f^(k)|`; zero for the zero field.
    pub fn divergence_ratio(&self, grid: &SpectralGrid) -> Result<f64> {
        let s = self.to_spectral(grid)?;
        let mut num: f64 = 0.0;
        let mut den: f64 = 0.0;
        for i in 0..grid.len() {
            let k = grid.kvec_deriv(i);
            num = num.max((k[0] * s.comps[0][i] + k[1] * s.comps[1][i]).norm());
            den = den.max(s.comps[0][i].norm().max(s.comps[1][i].norm()));
        }
        Ok(if den == 0.0 { 0.0 } else { num / den })
    }

    /// Largest imaginary residue of position samples relative to the field's max modulus.
    pub fn imaginary_residue(&self) -> Result<f64> {
        if self.repr != Repr::Position {
            return Err(Error::Representation("expected position samples"));
        }
        let mut im: f64 = 0.0;
        let mut mx: f64 = 0.0;
        for c in &self.comps {
            for v in c {
                im = im.max(v.im.abs());
                mx = mx.max(v.norm());
            }
        }
        Ok(if mx == 0.0 { 0.0 } else { im / mx })
    }
}

/// Phase-space point `(A, Π)` (or `(Λ, Π)` in the soliton frame).
#[derive(Clone, Debug)]
pub struct FieldPair {
    pub a: VectorField,
    pub pi: VectorField,
}

impl FieldPair {
    pub fn zeros(grid: &SpectralGrid, repr: Repr) -> Self {
        Self {
            a: VectorField::zeros(grid, repr),
            pi: VectorField::zeros(grid, repr),
        }
    }

    pub fn make_spectral(&mut self, grid: &SpectralGrid) -> Result<()> {
        self.a.make_spectral(grid)?;
        self.pi.make_spectral(grid)
    }

    pub fn make_position(&mut self, grid: &SpectralGrid) -> Result<()> {
        self.a.make_position(grid)?;
        self.pi.make_position(grid)
    }

    pub fn to_spectral(&self, grid: &SpectralGrid) -> Result<Self> {
        Ok(Self {
            a: self.a.to_spectral(grid)?,
            pi: self.pi.to_spectral(grid)?,
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            a: self.a.scaled(s),
            pi: self.pi.scaled(s),
        }
    }

    pub fn axpy(&mut self, s: f64, other: &FieldPair) -> Result<()> {
        self.a.axpy(s, &other.a)?;
        self.pi.axpy(s, &other.pi)
    }
}

/// `⟨f, g⟩` for scalar fields; x-side or k-side by the fields' representation.
pub fn inner_product_scalar(grid: &SpectralGrid, f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.tag.check(grid)?;
    g.tag.check(grid)?;
    if f.repr != g.repr {
        return Err(Error::Representation(
            "inner product needs matching representations",
        ));
    }
    Ok(pairing(grid, f.repr, &f.data, &g.data))
}

/// `⟨f, g⟩ = ∫ f·g dx` for vector fields; evaluated on the fields' side.
pub fn inner_product(grid: &SpectralGrid, f: &VectorField, g: &VectorField) -> Result<f64> {
    f.tag.check(grid)?;
    g.tag.check(grid)?;
    if f.repr != g.repr {
        return Err(Error::Representation(
            "inner product needs matching representations",
        ));
    }
    Ok(pairing(grid, f.repr, &f.comps[0], &g.comps[0])
        + pairing(grid, f.repr, &f.comps[1], &g.comps[1]))
}

pub(crate) fn pairing(grid: &SpectralGrid, repr: Repr, a: &[Complex64], b: &[Complex64]) -> f64 {
    let w = match repr {
        Repr::Position => grid.cell_area(),
        Repr::Spectral => grid.dual_cell_area(),
    };
    w * det_sum(a.len(), |i| (a[i] * b[i].conj()).re)
}

/// Leray projector `(1 − k^k^ᵀ)` applied mode by mode; the k = 0 mode is kept.
pub fn helmholtz_project(grid: &SpectralGrid, f: &VectorField) -> Result<VectorField> {
    let s = f.to_spectral(grid)?;
    let (c0, c1): (Vec<Complex64>, Vec<Complex64>) = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let k = grid.kvec_deriv(i);
            let k2 = k[0] * k[0] + k[1] * k[1];
            let (a, b) = (s.comps[0][i], s.comps[1][i]);
            if k2 == 0.0 {
                (a, b)
            } else {
                let dot = (k[0] * a + k[1] * b) / k2;
                (a - k[0] * dot, b - k[1] * dot)
            }
        })
        .unzip();
    Ok(VectorField {
        tag: f.tag,
        repr: Repr::Spectral,
        comps: [c0, c1],
    })
}

/// Members of the weighted norm family.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormVariant {
    /// `‖<x>^β ∇A‖ + ‖<x>^β Π‖`.
    Energy,
    /// `‖<x>^β A‖ + ‖<x>^β ∇A‖ + ‖<x>^β Π‖`.
    EnergyPlus,
    /// `‖<x>^β <∇>^s A‖` on the first component.
    Sobolev(u8),
    /// `‖<x>^β A‖` on the first component.
    L2,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedNormSpec {
    pub beta: f64,
    pub variant: NormVariant,
}

impl WeightedNormSpec {
    pub fn energy(beta: f64) -> Self {
        Self {
            beta,
            variant: NormVariant::Energy,
        }
    }
}

/// `‖<x>^β f‖_{L²}` over any number of real position-space components.
pub fn weighted_l2(grid: &SpectralGrid, comps: &[&[f64]], beta: f64) -> f64 {
    let w = grid.cell_area();
    let sum = det_sum(grid.len(), |i| {
        let p = grid.position(i);
        let weight = (1.0 + p[0] * p[0] + p[1] * p[1]).powf(beta);
        let s: f64 = comps.iter().map(|c| c[i] * c[i]).sum();
        weight * s
    });
    (w * sum).sqrt()
}

/// Position-space gradient components `∂₁A₁, ∂₂A₁, ∂₁A₂, ∂₂A₂` from spectral `A`.
pub(crate) fn gradient_components(grid: &SpectralGrid, a: &VectorField) -> Result<[Vec<f64>; 4]> {
    let s = a.to_spectral(grid)?;
    let d = |c: usize, axis: usize| -> Vec<Complex64> {
        s.comps[c]
            .par_iter()
            .enumerate()
            .map(|(i, v)| Complex64::new(0.0, grid.kvec_deriv(i)[axis]) * v)
            .collect()
    };
    let (g00, g01) = grid.inverse_real_pair(&d(0, 0), &d(0, 1));
    let (g10, g11) = grid.inverse_real_pair(&d(1, 0), &d(1, 1));
    Ok([g00, g01, g10, g11])
}

fn real_components(grid: &SpectralGrid, f: &VectorField) -> Result<[Vec<f64>; 2]> {
    match f.repr {
        Repr::Position => Ok([
            f.comps[0].iter().map(|v| v.re).collect(),
            f.comps[1].iter().map(|v| v.re).collect(),
        ]),
        Repr::Spectral => {
            let (a, b) = grid.inverse_real_pair(&f.comps[0], &f.comps[1]);
            Ok([a, b])
        }
    }
}

/// Weighted norm of a phase-space pair. Gradients are taken spectrally, then
/// weighted in position space with the box-centred `<x>`.
pub fn weighted_norm(grid: &SpectralGrid, z: &FieldPair, spec: WeightedNormSpec) -> Result<f64> {
    z.a.check_grid(grid)?;
    z.pi.check_grid(grid)?;
    let beta = spec.beta;
    match spec.variant {
        NormVariant::Energy | NormVariant::EnergyPlus => {
            let g = gradient_components(grid, &z.a)?;
            let p = real_components(grid, &z.pi)?;
            let mut total = weighted_l2(grid, &[&g[0], &g[1], &g[2], &g[3]], beta)
                + weighted_l2(grid, &[&p[0], &p[1]], beta);
            if spec.variant == NormVariant::EnergyPlus {
                let a = real_components(grid, &z.a)?;
                total += weighted_l2(grid, &[&a[0], &a[1]], beta);
            }
            Ok(total)
        }
        NormVariant::L2 => {
            let a = real_components(grid, &z.a)?;
            Ok(weighted_l2(grid, &[&a[0], &a[1]], beta))
        }
        NormVariant::Sobolev(s) => {
            let mut a = z.a.to_spectral(grid)?;
            for c in &mut a.comps {
                c.par_iter_mut().enumerate().for_each(|(i, v)| {
                    let k = grid.kvec(i);
                    *v *= (1.0 + k[0] * k[0] + k[1] * k[1]).powf(0.5 * s as f64);
                });
            }
            let r = real_components(grid, &a)?;
            Ok(weighted_l2(grid, &[&r[0], &r[1]], beta))
        }
    }
}

/// Squared Hilbert energy norm `‖∇A‖² + ‖Π‖²`, evaluated k-side.
pub fn energy_norm_sq(grid: &SpectralGrid, z: &FieldPair) -> Result<f64> {
    let a = z.a.to_spectral(grid)?;
    let p = z.pi.to_spectral(grid)?;
    let w = grid.dual_cell_area();
    let s = det_sum(grid.len(), |i| {
        let k = grid.kvec(i);
        let k2 = k[0] * k[0] + k[1] * k[1];
        k2 * (a.comps[0][i].norm_sqr() + a.comps[1][i].norm_sqr())
            + p.comps[0][i].norm_sqr()
            + p.comps[1][i].norm_sqr()
    });
    Ok(w * s)
}

/// Hilbert energy norm `(‖∇A‖² + ‖Π‖²)^{1/2}`; the norm preserved by the free group.
pub fn energy_norm(grid: &SpectralGrid, z: &FieldPair) -> Result<f64> {
    Ok(energy_norm_sq(grid, z)?.sqrt())
}

/// Box–Muller standard normal; keeps the generator stream explicit.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
