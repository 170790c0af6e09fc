//! Bessel functions of order 0 and 1 for positive real arguments.
//!
//! Ascending series below [`SERIES_SWITCH`], Hankel asymptotic expansion above.

use std::f64::consts::{FRAC_2_PI, PI};

use num_complex::Complex64;

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Crossover between series and asymptotic evaluation.
pub const SERIES_SWITCH: f64 = 13.0;

const MAX_TERMS: usize = 200;

/// `(J0(s) - 1, S0(s))` where `Y0 = (2/pi)(ln(s/2) + gamma) J0 + (2/pi) S0`.
pub(crate) fn series0(s: f64) -> (f64, f64) {
    let q = 0.25 * s * s;
    let mut term = 1.0;
    let mut harmonic = 0.0;
    let mut jm1 = 0.0;
    let mut s0 = 0.0;
    for m in 1..MAX_TERMS {
        let mf = m as f64;
        term *= -q / (mf * mf);
        harmonic += 1.0 / mf;
        jm1 += term;
        s0 -= harmonic * term;
        if term.abs() * (1.0 + harmonic) < 1e-17 * (1.0 + jm1.abs()) {
            break;
        }
    }
    (jm1, s0)
}

/// `(J1(s), Y1(s) + 2/(pi s))` from the ascending series.
pub(crate) fn series1(s: f64) -> (f64, f64) {
    let half = 0.5 * s;
    let q = half * half;
    let mut term = half;
    let mut h_m = 0.0;
    let mut h_m1 = 1.0;
    let mut j1 = term;
    let mut tail = (h_m + h_m1 - 2.0 * EULER_GAMMA) * term;
    for m in 1..MAX_TERMS {
        let mf = m as f64;
        term *= -q / (mf * (mf + 1.0));
        h_m += 1.0 / mf;
        h_m1 += 1.0 / (mf + 1.0);
        j1 += term;
        tail += (h_m + h_m1 - 2.0 * EULER_GAMMA) * term;
        if term.abs() * (1.0 + h_m1) < 1e-17 * j1.abs().max(1e-300) {
            break;
        }
    }
    let y1reg = FRAC_2_PI * j1 * half.ln() - tail / PI;
    (j1, y1reg)
}

/// Hankel asymptotic `(J_nu, Y_nu)` for order `nu` in {0, 1}.
fn asymptotic(nu: f64, s: f64) -> (f64, f64) {
    let mu = 4.0 * nu * nu;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut a = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        a *= (mu - odd * odd) / (kf * 8.0 * s);
        if a.abs() > last {
            break;
        }
        last = a.abs();
        // a_k / s^k with alternating signs split between P and Q
        match k % 4 {
            1 => q += a,
            2 => p -= a,
            3 => q -= a,
            _ => p += a,
        }
        if a.abs() < 1e-17 {
            break;
        }
    }
    let chi = s - (0.5 * nu + 0.25) * PI;
    let amp = (FRAC_2_PI / s).sqrt();
    let (sn, cs) = chi.sin_cos();
    (amp * (p * cs - q * sn), amp * (p * sn + q * cs))
}

pub fn j0(s: f64) -> f64 {
    let s = s.abs();
    if s < SERIES_SWITCH {
        1.0 + series0(s).0
    } else {
        asymptotic(0.0, s).0
    }
}

/// `Y0(s)` for `s > 0`.
pub fn y0(s: f64) -> f64 {
    if s < SERIES_SWITCH {
        let (jm1, s0) = series0(s);
        FRAC_2_PI * ((0.5 * s).ln() + EULER_GAMMA) * (1.0 + jm1) + FRAC_2_PI * s0
    } else {
        asymptotic(0.0, s).1
    }
}

pub fn j1(s: f64) -> f64 {
    let sign = s.signum();
    let s = s.abs();
    sign * if s < SERIES_SWITCH {
        series1(s).0
    } else {
        asymptotic(1.0, s).0
    }
}

/// `Y1(s)` for `s > 0`.
pub fn y1(s: f64) -> f64 {
    if s < SERIES_SWITCH {
        series1(s).1 - FRAC_2_PI / s
    } else {
        asymptotic(1.0, s).1
    }
}

/// `Y1(s) + 2/(pi s)`, without cancellation at small `s`.
pub fn y1_regular(s: f64) -> f64 {
    if s < SERIES_SWITCH {
        series1(s).1
    } else {
        asymptotic(1.0, s).1 + FRAC_2_PI / s
    }
}

/// `H0^+(s) = J0(s) + i Y0(s)`.
pub fn hankel0_plus(s: f64) -> Complex64 {
    if s < SERIES_SWITCH {
        let (jm1, s0) = series0(s);
        let j = 1.0 + jm1;
        Complex64::new(
            j,
            FRAC_2_PI * ((0.5 * s).ln() + EULER_GAMMA) * j + FRAC_2_PI * s0,
        )
    } else {
        let (j, y) = asymptotic(0.0, s);
        Complex64::new(j, y)
    }
}

/// `H1^+(s) = J1(s) + i Y1(s)`.
pub fn hankel1_plus(s: f64) -> Complex64 {
    Complex64::new(j1(s), y1(s))
}

#[cfg(test)]
mod tests {
    use super::*;

    // reference values from an independent library implementation
    const TABLE: [(f64, f64, f64, f64, f64); 10] = [
        (
            0.001,
            0.9999997500000155,
            -4.471416611375923,
            0.0004999999375000026,
            -636.6221672311395,
        ),
        (
            0.5,
            0.938469807240813,
            -0.4445187335067066,
            0.24226845767487387,
            -1.4714723926702433,
        ),
        (
            1.0,
            0.7651976865579665,
            0.08825696421567697,
            0.44005058574493355,
            -0.7812128213002888,
        ),
        (
            2.404825557695773,
            -9.586882554916807e-17,
            0.5099243834484792,
            0.5191474972894666,
            0.10274668243825957,
        ),
        (
            5.0,
            -0.1775967713143383,
            -0.30851762524903303,
            -0.3275791375914653,
            0.14786314339122691,
        ),
        (
            12.9,
            0.1988424371363311,
            -0.09887037024149824,
            -0.09124825224993953,
            -0.2028169743236646,
        ),
        (
            13.1,
            0.21288819752206045,
            -0.05692525678129365,
            -0.04885247333422397,
            -0.21521150600500222,
        ),
        (
            20.0,
            0.16702466434058322,
            0.06264059680938369,
            0.0668331241758502,
            -0.1655116143625212,
        ),
        (
            100.0,
            0.01998585030422333,
            -0.0772443133650831,
            -0.0771453520141123,
            -0.02037231200275932,
        ),
        (
            1234.5,
            -0.013550379618034219,
            0.018222995047413672,
            0.018217508337392774,
            0.013557761447179966,
        ),
    ];

    #[test]
    fn reference_table() {
        for &(s, rj0, ry0, rj1, ry1) in &TABLE {
            let tol = 1e-10 * (1.0 + ry1.abs());
            assert!((j0(s) - rj0).abs() < 1e-10, "j0({s})");
            assert!((y0(s) - ry0).abs() < 1e-10, "y0({s})");
            assert!((j1(s) - rj1).abs() < 1e-10, "j1({s})");
            assert!((y1(s) - ry1).abs() < tol, "y1({s})");
        }
    }

    #[test]
    fn j0_at_origin_and_first_zero() {
        assert_eq!(j0(0.0), 1.0);
        assert!(j0(2.404825557695773).abs() < 1e-14);
    }

    #[test]
    fn wronskian_across_switch() {
        let mut s = 0.05;
        while s < 40.0 {
            // J0 Y0' - J0' Y0 with Y0' = -Y1, J0' = -J1
            let w = -j0(s) * y1(s) + j1(s) * y0(s);
            let exact = 2.0 / (PI * s);
            assert!(
                (w - exact).abs() < 1e-9 * exact.max(1.0),
                "s={s}: {w} vs {exact}"
            );
            s *= 1.07;
        }
        for s in [SERIES_SWITCH - 1e-9, SERIES_SWITCH] {
            let w = -j0(s) * y1(s) + j1(s) * y0(s);
            assert!((w - 2.0 / (PI * s)).abs() < 1e-10);
        }
    }

    #[test]
    fn small_argument_hankel() {
        let s: f64 = 1e-3;
        let lead = Complex64::new(1.0, FRAC_2_PI * ((0.5 * s).ln() + EULER_GAMMA));
        let d = (hankel0_plus(s) - lead).norm();
        assert!(d < 5.0 * s * s * s.ln().abs());
    }

    #[test]
    fn y1_regular_matches() {
        for s in [0.3, 4.0, 15.0] {
            assert!((y1_regular(s) - y1(s) - 2.0 / (PI * s)).abs() < 1e-12);
        }
    }
}
