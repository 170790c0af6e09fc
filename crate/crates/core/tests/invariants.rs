use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinlab::charge::ChargeModel;
use spinlab::dynamics::{from_soliton_frame, to_soliton_frame, SimState};
use spinlab::fit::fit_power_law;
use spinlab::grid::{
    helmholtz_project, inner_product, FieldPair, ScalarField, SpectralGrid, VectorField,
};
use spinlab::soliton::{build_soliton, limit_frequency};

fn max_diff(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

fn max_abs(a: &[num_complex::Complex64]) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transform_round_trip_and_plancherel(p in 4u32..8, length in 5.0f64..200.0, seed in any::<u64>()) {
        let g = SpectralGrid::new(1 << p, length).unwrap();
        let f = ScalarField::random(&g, &mut ChaCha8Rng::seed_from_u64(seed));
        let k = f.to_spectral(&g).unwrap();
        let back = k.to_position(&g).unwrap();
        prop_assert!(max_diff(f.data(), back.data()) <= 1e-12 * max_abs(f.data()));
        let x2: f64 = f.data().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_area();
        let k2: f64 = k.data().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dual_cell_area();
        prop_assert!((x2 - k2).abs() <= 1e-12 * x2);
    }

    #[test]
    fn projector_is_idempotent_and_orthogonal(p in 4u32..7, length in 5.0f64..100.0, seed in any::<u64>()) {
        let g = SpectralGrid::new(1 << p, length).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = VectorField::random(&g, &mut rng).to_spectral(&g).unwrap();
        let h = VectorField::random(&g, &mut rng).to_spectral(&g).unwrap();
        let pf = helmholtz_project(&g, &f).unwrap();
        let ppf = helmholtz_project(&g, &pf).unwrap();
        let scale = max_abs(f.comp(0)).max(max_abs(f.comp(1)));
        for c in 0..2 {
            prop_assert!(max_diff(pf.comp(c), ppf.comp(c)) <= 1e-13 * scale);
        }
        prop_assert!(pf.divergence_ratio(&g).unwrap() <= 1e-12);
        // self-adjoint: <P f, h> = <f, P h>
        let ph = helmholtz_project(&g, &h).unwrap();
        let l = inner_product(&g, &pf, &h).unwrap();
        let r = inner_product(&g, &f, &ph).unwrap();
        let n = inner_product(&g, &f, &f).unwrap().sqrt() * inner_product(&g, &h, &h).unwrap().sqrt();
        prop_assert!((l - r).abs() <= 1e-12 * n);
    }

    #[test]
    fn fit_scale_and_time_invariance(p in -3.0f64..-0.5, a in 0.1f64..1e3, c in 1e-3f64..1e3, s in 0.2f64..5.0) {
        let ts: Vec<f64> = (1..=40).map(|i| i as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| a * t.powf(p) * (1.0 + 0.1 * (0.7 * t).sin())).collect();
        let base = fit_power_law(&ts, &ys, (5.0, 40.0), a).unwrap();
        let scaled: Vec<f64> = ys.iter().map(|y| c * y).collect();
        let fc = fit_power_law(&ts, &scaled, (5.0, 40.0), c * a).unwrap();
        prop_assert!((fc.exponent - base.exponent).abs() <= 1e-12);
        prop_assert!((fc.amplitude / (c * base.amplitude) - 1.0).abs() <= 1e-10);
        let st: Vec<f64> = ts.iter().map(|t| s * t).collect();
        let fs = fit_power_law(&st, &ys, (5.0 * s, 40.0 * s), a).unwrap();
        prop_assert!((fs.exponent - base.exponent).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn soliton_frame_round_trip(momentum in -20.0f64..20.0, inertia in 1.0f64..50.0, amp in 0.0f64..0.1, seed in any::<u64>()) {
        let g = SpectralGrid::new(64, 40.0).unwrap();
        let c = Arc::new(ChargeModel::reference(&g).unwrap());
        let s = build_soliton(limit_frequency(momentum, inertia, &c).unwrap(), &c, inertia).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = FieldPair {
            a: helmholtz_project(&g, &VectorField::random(&g, &mut rng)).unwrap().scaled(amp),
            pi: helmholtz_project(&g, &VectorField::random(&g, &mut rng)).unwrap().scaled(amp),
        };
        let st = SimState::from_soliton(c.clone(), &s, Some(&z)).unwrap();
        let frame = to_soliton_frame(&st, &s).unwrap();
        let back = from_soliton_frame(&frame, &s, c.clone()).unwrap();
        let za = frame.z.to_spectral(&g).unwrap();
        let zs = z.to_spectral(&g).unwrap();
        let scale = max_abs(s.a.to_spectral(&g).unwrap().comp(0)).max(1e-300);
        for k in 0..2 {
            prop_assert!(max_diff(za.a.comp(k), zs.a.comp(k)) <= 1e-13 * scale);
            prop_assert!(max_diff(back.y.a.comp(k), st.y.a.comp(k)) <= 1e-13 * scale);
            prop_assert!(max_diff(back.y.pi.comp(k), st.y.pi.comp(k)) == 0.0);
        }
        prop_assert!((back.omega() - st.omega()).abs() <= 1e-13 * st.omega().abs().max(1.0));
        prop_assert!(st.momentum_residual().abs() <= 8.0 * f64::EPSILON * momentum.abs().max(1.0));
    }
}
