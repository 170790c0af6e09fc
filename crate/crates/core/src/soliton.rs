//! Rotating solitons `(A_ω, 0)` and the momentum map `ω ↦ M_ω`.

use num_complex::Complex64;

use crate::charge::{radial_moment, ChargeModel};
use crate::grid::{SpectralGrid, VectorField};
use crate::{Error, Result};

/// `κ(0) = ∫ |varrho^|²/k² dk = 2 pi ∫ rho1'(k)²/k dk`.
pub fn kappa_zero(c: &ChargeModel) -> Result<f64> {
    let v = radial_moment(c.profile(), |k| if k > 0.0 { 1.0 / (k * k) } else { 0.0 })?;
    if !(v.is_finite() && v >= 0.0) {
        return Err(Error::Quadrature(format!("kappa_zero produced {v}")));
    }
    Ok(v)
}

#[derive(Clone, Debug)]
pub struct SolitonState {
    pub omega: f64,
    /// `A_ω`, spectral, k = 0 mode zero.
    pub a: VectorField,
    pub momentum: f64,
    pub kappa0: f64,
    pub inertia: f64,
    /// Continuum correction to the grid pairing `⟨A_ω, Jvarrho⟩`: the k = 0
    /// trapezoid node, where `|varrho^|²/k²` has a finite limit.
    pub infrared_pairing: f64,
}

/// `A^_ω = -ω J varrho^ / k²`, `M_ω = ω (I + κ₀)`.
pub fn build_soliton(omega: f64, c: &ChargeModel, inertia: f64) -> Result<SolitonState> {
    if !(inertia > 0.0) {
        return Err(Error::Config(format!(
            "moment of inertia must be positive, got {inertia}"
        )));
    }
    let kappa0 = kappa_zero(c)?;
    let g = c.grid();
    let jv = c.j_varrho_hat();
    let a = VectorField::from_spectral_fn(g, |i| {
        let k = g.kvec(i);
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 == 0.0 {
            [Complex64::default(); 2]
        } else {
            let s = -omega / k2;
            [s * jv.comp(0)[i], s * jv.comp(1)[i]]
        }
    });
    Ok(SolitonState {
        omega,
        a,
        momentum: omega * (inertia + kappa0),
        kappa0,
        inertia,
        infrared_pairing: -omega * c.infrared_weight() * g.dual_cell_area(),
    })
}

/// `ω* = M / (I + κ₀)`.
pub fn limit_frequency(momentum: f64, inertia: f64, c: &ChargeModel) -> Result<f64> {
    let k0 = kappa_zero(c)?;
    let d = inertia + k0;
    if d == 0.0 {
        return Err(Error::Degenerate(d));
    }
    Ok(momentum / d)
}

impl SolitonState {
    /// `‖ΔA_ω − ω J varrho‖ / ‖ω J varrho‖`, k-side, excluding k = 0.
    pub fn residual(&self, c: &ChargeModel) -> f64 {
        let g: &SpectralGrid = c.grid();
        let jv = c.j_varrho_hat();
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..g.len() {
            let k = g.kvec(i);
            let k2 = k[0] * k[0] + k[1] * k[1];
            if k2 == 0.0 {
                continue;
            }
            for comp in 0..2 {
                let f = self.omega * jv.comp(comp)[i];
                num += (-k2 * self.a.comp(comp)[i] - f).norm_sqr();
                den += f.norm_sqr();
            }
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }

    /// `‖∇A_ω‖²` on the grid.
    pub fn grad_norm_sq(&self, g: &SpectralGrid) -> f64 {
        let w = g.dual_cell_area();
        crate::grid::det_sum(g.len(), |i| {
            let k = g.kvec(i);
            (k[0] * k[0] + k[1] * k[1])
                * (self.a.comp(0)[i].norm_sqr() + self.a.comp(1)[i].norm_sqr())
        }) * w
    }
}

/// `‖∇A_ω‖²` in the continuum: `ω² κ₀`.
pub fn continuum_grad_norm_sq(omega: f64, kappa0: f64) -> f64 {
    omega * omega * kappa0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charge::{moment_pairing, RadialProfile};
    use std::f64::consts::PI;

    fn grid() -> SpectralGrid {
        SpectralGrid::new(128, 60.0).unwrap()
    }

    #[test]
    fn kappa_zero_reference_closed_form() {
        let c = ChargeModel::reference(&grid()).unwrap();
        let k = kappa_zero(&c).unwrap();
        assert!((k - PI).abs() < 1e-10 * PI, "{k}");
    }

    #[test]
    fn kappa_zero_quadratic_in_charge() {
        let g = grid();
        let c1 = ChargeModel::reference(&g).unwrap();
        let c3 = ChargeModel::new(RadialProfile::reference().scaled(3.0), &g).unwrap();
        let r = kappa_zero(&c3).unwrap() / kappa_zero(&c1).unwrap();
        assert!((r - 9.0).abs() < 1e-10);
    }

    #[test]
    fn kappa_zero_quartic_profile_against_trapezoid() {
        let g = grid();
        let c = ChargeModel::new(RadialProfile::gaussian_moment(1.0, 4, 1.0), &g).unwrap();
        let v = kappa_zero(&c).unwrap();
        // dense trapezoid of 2 pi (4k³ - 2k⁵)² e^{-2k²} / k on [0, 12]
        let n = 400_000;
        let h = 12.0 / n as f64;
        let mut s = 0.0;
        for j in 1..n {
            let k = j as f64 * h;
            let d = (4.0 * k.powi(3) - 2.0 * k.powi(5)) * (-k * k).exp();
            s += d * d / k;
        }
        let oracle = 2.0 * PI * s * h;
        assert!((v - oracle).abs() < 1e-9 * oracle);
    }

    #[test]
    fn zero_frequency_soliton() {
        let g = grid();
        let c = ChargeModel::reference(&g).unwrap();
        let s = build_soliton(0.0, &c, 1.0).unwrap();
        assert_eq!(s.momentum, 0.0);
        assert!(s
            .a
            .comp(0)
            .iter()
            .chain(s.a.comp(1))
            .all(|v| v.norm() == 0.0));
    }

    #[test]
    fn momentum_map_and_residual() {
        let g = grid();
        let c = ChargeModel::reference(&g).unwrap();
        let s = build_soliton(2.0, &c, 1.0).unwrap();
        assert!((s.momentum - 8.283185307179586).abs() < 1e-9);
        assert!(s.residual(&c) < 1e-10);
        assert!(s.a.divergence_ratio(&g).unwrap() < 1e-10);
        let w = limit_frequency(s.momentum, 1.0, &c).unwrap();
        assert!((w - 2.0).abs() < 1e-12);
        assert!(limit_frequency(0.0, 1.0, &c).unwrap() == 0.0);
        let w1 = limit_frequency(1.0 + PI, 1.0, &c).unwrap();
        assert!((w1 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn soliton_pairing_with_infrared_node() {
        let g = SpectralGrid::new(256, 160.0).unwrap();
        let c = ChargeModel::reference(&g).unwrap();
        let omega = 0.7;
        let s = build_soliton(omega, &c, 1.0).unwrap();
        let p = moment_pairing(&s.a, &c).unwrap() + s.infrared_pairing;
        assert!((p + omega * PI).abs() < 1e-10, "{}", p + omega * PI);
        let gn = s.grad_norm_sq(&g) + omega * omega * c.infrared_weight() * g.dual_cell_area();
        assert!((gn - continuum_grad_norm_sq(omega, s.kappa0)).abs() < 1e-10);
    }

    #[test]
    fn rejects_nonpositive_inertia() {
        let c = ChargeModel::reference(&grid()).unwrap();
        assert!(build_soliton(1.0, &c, 0.0).is_err());
    }
}
