//! Invariants of the discrete geometry under randomly drawn smooth curves.

use std::f64::consts::{PI, SQRT_2, TAU};

use proptest::prelude::*;
use shrinkflow::diagnostics::{energy, gaussian_area};
use shrinkflow::geometry::{enclosed_area, resample_uniform, snapshot};
use shrinkflow::{ClosedCurve, Vec2};

/// Star-shaped curve `rho = r0 + sum a_k cos(k theta + phase_k)` with small modes.
fn fourier_curve(r0: f64, modes: &[(u32, f64, f64)], n: usize) -> ClosedCurve {
    let rho = |t: f64| r0 + modes.iter().map(|&(k, a, p)| a * (f64::from(k) * t + p).cos()).sum::<f64>();
    let drho = |t: f64| {
        -modes
            .iter()
            .map(|&(k, a, p)| a * f64::from(k) * (f64::from(k) * t + p).sin())
            .sum::<f64>()
    };
    ClosedCurve::radial(n, rho, drho).expect("positive radius")
}

fn modes() -> impl Strategy<Value = Vec<(u32, f64, f64)>> {
    prop::collection::vec((2u32..6, -0.08f64..0.08, 0.0f64..TAU), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn isoperimetric_inequality(r0 in 0.8f64..2.0, m in modes()) {
        let c = fourier_curve(r0, &m, 128);
        let (l, a) = (c.length(), enclosed_area(&c));
        prop_assert!(l * l >= 4.0 * PI * a * (1.0 - 1e-10), "L^2 = {}, 4 pi A = {}", l * l, 4.0 * PI * a);
    }

    #[test]
    fn defect_is_rotation_invariant(r0 in 1.0f64..1.8, m in modes(), angle in 0.0f64..TAU) {
        let c = fourier_curve(r0, &m, 128);
        let a = snapshot(&c).unwrap();
        let b = snapshot(&c.rotated(angle)).unwrap();
        for (x, y) in a.defect.iter().zip(&b.defect) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        prop_assert!((gaussian_area(&a) - gaussian_area(&b)).abs() < 1e-12);
    }

    #[test]
    fn energy_and_gaussian_area_are_positive(r0 in 0.5f64..3.0, m in modes()) {
        let s = snapshot(&fourier_curve(r0, &m, 128)).unwrap();
        prop_assert!(energy(&s) >= 0.0);
        prop_assert!(gaussian_area(&s) > 0.0);
    }

    #[test]
    fn stability_operator_is_self_adjoint(
        m in modes(),
        f in prop::collection::vec(-1.0f64..1.0, 4),
        g in prop::collection::vec(-1.0f64..1.0, 4),
    ) {
        let s = snapshot(&fourier_curve(SQRT_2, &m, 128)).unwrap();
        let field = |c: &[f64]| -> Vec<f64> {
            (0..s.len())
                .map(|i| {
                    let u = TAU * i as f64 / s.len() as f64;
                    c[0] + c[1] * u.cos() + c[2] * (2.0 * u).sin() + c[3] * (3.0 * u).cos()
                })
                .collect()
        };
        let (f, g) = (field(&f), field(&g));
        let lf = s.l(&f);
        let lg = s.l(&g);
        let fg: Vec<f64> = f.iter().zip(&lg).map(|(a, b)| a * b).collect();
        let gf: Vec<f64> = g.iter().zip(&lf).map(|(a, b)| a * b).collect();
        let (x, y) = (s.integral(&fg, true), s.integral(&gf, true));
        prop_assert!((x - y).abs() < 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
    }

    #[test]
    fn resampling_preserves_area(r0 in 1.0f64..2.0, m in modes(), warp in 0.0f64..0.5) {
        // Same curve sampled at unevenly spaced angles, so resampling has work to do.
        let rho = |t: f64| r0 + m.iter().map(|&(k, a, p)| a * (f64::from(k) * t + p).cos()).sum::<f64>();
        let n = 256;
        let warped: Vec<Vec2> = (0..n)
            .map(|i| {
                let u = TAU * i as f64 / n as f64;
                let t = u + warp * u.sin();
                Vec2::polar(rho(t), t)
            })
            .collect();
        let w = ClosedCurve::new(warped).unwrap();
        let r = resample_uniform(&w, n).unwrap();
        let reference = enclosed_area(&fourier_curve(r0, &m, 1024));
        prop_assert!((enclosed_area(&r) - reference).abs() < 1e-5, "{} vs {}", enclosed_area(&r), reference);
        prop_assert!(r.edge_ratio() < 1.01);
    }
}
