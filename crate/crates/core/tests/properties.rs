use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use proptest::prelude::*;

use ilw_core::ensemble::{log_det_Z, quadrupole};
use ilw_core::equilibrium::{
    energy_pairing, functional_p, functional_q, quadrupole_weight, weyl_samples, Minimizer, SampledDensity,
};
use ilw_core::mtp::{psi_on_contour, saddle_points, ContourSpec, Nu};
use ilw_core::pde::{tau, SplitStep};
use ilw_core::quad::{integrate, Tolerance};
use ilw_core::scattering::{kappa_max, modified_data, tail_theta_kappa, weyl_r_kappa, Side};
use ilw_core::specfun::{lambert_w, quadratrix};
use ilw_core::{build_profile, AdmissibleProfile, BurgersState, ProfileSpec};

fn sech2() -> &'static AdmissibleProfile {
    static P: OnceLock<AdmissibleProfile> = OnceLock::new();
    P.get_or_init(|| build_profile(&ProfileSpec::sech2()).unwrap())
}

fn weyl(delta: f64) -> &'static SampledDensity {
    static W: OnceLock<SampledDensity> = OnceLock::new();
    assert_eq!(delta, 0.5);
    W.get_or_init(|| weyl_samples(sech2(), 0.5, 128).unwrap())
}

fn polar(log10_r: f64, theta: f64) -> Complex64 {
    Complex64::from_polar(10f64.powf(log10_r), theta)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn lambert_round_trip(n in -3i32..=3, lr in -6.0..3.0f64, th in -PI..PI) {
        let z = polar(lr, th);
        let w = lambert_w(n, z).unwrap();
        prop_assert!((w * w.exp() - z).norm() <= 1e-12 * (1.0 + z.norm()));
    }

    #[test]
    fn lambert_conjugation_off_axis(n in -3i32..=3, lr in -6.0..3.0f64, th in 0.01..(PI - 0.01)) {
        let z = polar(lr, th);
        let a = lambert_w(n, z).unwrap();
        let b = lambert_w(-n, z.conj()).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn lambert_pairs_on_the_cut(n in -3i32..=3, lr in -6.0..3.0f64) {
        let x = -(10f64.powf(lr));
        prop_assume!(x < -(-1f64).exp() || (n != 0 && n != -1));
        let z = Complex64::new(x, 0.0);
        let a = lambert_w(n, z).unwrap();
        let b = lambert_w(-1 - n, z).unwrap();
        prop_assert!((a.conj() - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn quadratrix_argument(k in 1e-6..3.0f64, delta in 0.1..2.0f64) {
        let a = 2.0 * delta * k;
        prop_assume!(a < PI - 1e-3);
        let z = quadratrix(k, delta).unwrap().zeta;
        prop_assert!(((2.0 * delta * z).arg() - a).abs() <= 1e-12);
    }

    #[test]
    fn tau_is_odd_and_multiplier_unimodular(k in -200.0..200.0f64, dt in 1e-5..1e-2f64) {
        prop_assert_eq!(tau(-k), -tau(k));
        let s = SplitStep::new(12.0, 64, 0.05, 1.0);
        let m = s.linear_multiplier(k, dt);
        prop_assert!((m.norm() - 1.0).abs() <= 1e-14);
        prop_assert!((s.linear_multiplier(-k, dt) - m.conj()).norm() <= 1e-14);
    }

    #[test]
    fn saddle_residual(x in -10.0..10.0f64, n in -5i32..=5) {
        let s = saddle_points(x, &[n]).unwrap();
        prop_assert!(s.residual(n).unwrap() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn burgers_transports_the_maximum(t in 0.0..0.6f64, d1 in 0.0..4.0f64, d2 in 0.0..4.0f64) {
        let p = sech2();
        let b = BurgersState::new(p, t).unwrap();
        let top = p.x_max() + 2.0 * p.u_max() * t;
        prop_assert!((b.eval(top).unwrap() - p.u_max()).abs() <= 1e-10);
        let (a, c) = (top + d1.min(d2), top + d1.max(d2));
        prop_assert!(b.eval(a).unwrap() >= b.eval(c).unwrap());
    }

    #[test]
    fn burgers_mass_is_conserved(t in 0.0..0.6f64) {
        let p = sech2();
        let b = BurgersState::new(p, t).unwrap();
        let m = integrate(|x| b.eval(x).unwrap(), -40.0, 40.0, Tolerance::new(1e-12, 1e-11))
            .require("mass")
            .unwrap();
        prop_assert!((m - p.mass()).abs() <= 1e-8);
    }

    #[test]
    fn weyl_law_and_tails_under_burgers(t in 0.05..0.6f64, s in 0.02..0.98f64) {
        let p = sech2();
        let delta = 0.5;
        let k = s * kappa_max(p, delta).unwrap();
        let b = BurgersState::new(p, t).unwrap();
        let r0 = weyl_r_kappa(p, k, delta).unwrap();
        prop_assert!((weyl_r_kappa(&b, k, delta).unwrap() - r0).abs() <= 1e-8);
        let th0 = tail_theta_kappa(p, k, Side::Plus, delta).unwrap();
        let th = tail_theta_kappa(&b, k, Side::Plus, delta).unwrap();
        prop_assert!((th - (th0 - quadrupole_weight(k, delta) * t)).abs() <= 1e-8);
    }

    #[test]
    fn ensemble_is_conjugate_symmetric(x in -3.0..3.0f64, s in 0.05..0.95f64, t in 0.0..0.5f64) {
        let d = modified_data(sech2(), 6, 0.5).unwrap();
        let z = Complex64::new(x, s * d.delta * d.eps);
        let a = log_det_Z(&d, z, t, 192).unwrap();
        let b = log_det_Z(&d, z.conj(), t, 192).unwrap();
        prop_assert!((a.log_mag_f64() - b.log_mag_f64()).abs() <= 1e-12 * a.log_mag_f64().abs().max(1.0));
        prop_assert!((a.arg_f64() + b.arg_f64()).abs() <= 1e-12 * a.log_mag_f64().abs().max(1.0));
    }

    #[test]
    fn energy_is_positive_definite(
        a1 in 0.0..1.0f64, b1 in 0.0..1.0f64, p1 in 0.0..6.0f64,
        a2 in 0.0..1.0f64, b2 in 0.0..1.0f64, p2 in 0.0..6.0f64,
    ) {
        let w = weyl(0.5);
        let kmax = *w.kappa_nodes.last().unwrap();
        let shape = |a: f64, b: f64, p: f64| -> Vec<f64> {
            w.kappa_nodes
                .iter()
                .zip(&w.values)
                .map(|(&k, &r)| r * (a + (1.0 - a) * b * (p * k / kmax).sin().powi(2)))
                .collect()
        };
        let r1 = w.with_values(shape(a1, b1, p1)).unwrap();
        let r2 = w.with_values(shape(a2, b2, p2)).unwrap();
        let d = r1.difference(&r2).unwrap();
        let e = energy_pairing(&d, &d).unwrap();
        let l1: f64 = d.values.iter().zip(&d.weights).map(|(v, w)| v.abs() * w).sum();
        prop_assert!(e >= -1e-10, "pairing {e} with L1 {l1}");
        if l1 > 1e-3 {
            prop_assert!(e > 0.0);
        }
    }

    #[test]
    fn minimizer_is_admissible(x in -3.0..4.0f64, t in 0.0..0.6f64) {
        let w = weyl(0.5);
        let m = Minimizer::new(sech2(), x, t, 0.5).unwrap();
        for (&k, &r) in w.kappa_nodes.iter().zip(&w.values) {
            let v = m.density(k).unwrap();
            prop_assert!(v >= -1e-12 && v <= r + 1e-12 * (1.0 + r), "κ = {k}: {v} vs {r}");
        }
    }

    #[test]
    fn psi_conjugation(x in -0.3..0.3f64, y in -0.03..0.03f64, h in 0.3..1.5f64) {
        let eps = 0.1;
        let z = Complex64::new(x, y);
        let c = ContourSpec::for_nu(Nu::NegInfinity, h * x).unwrap();
        let a = psi_on_contour(&c, z, eps, h).unwrap();
        let b = psi_on_contour(&c.mirrored(), -z.conj(), eps, -h).unwrap();
        let bv = b.at_scale(a.log_scale);
        prop_assert!((a.mantissa.conj() - bv).norm() <= 1e-10 * a.mantissa.norm());
    }
}

fn moment_errors(f: impl Fn(f64) -> f64, exact: f64) -> Vec<f64> {
    [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let d = modified_data(sech2(), n, 0.5).unwrap();
            let sum: f64 = d.kappas().iter().map(|&k| f(k)).sum();
            (d.eps * PI * sum - exact).abs()
        })
        .collect()
}

fn strictly_decreasing(e: &[f64]) -> bool {
    e.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn discrete_moments_converge_to_weyl_density() {
    let w = weyl(0.5);
    let e1 = moment_errors(|k| k, functional_p(w));
    let e2 = moment_errors(|k| k * k, w.integrate(|k| k * k));
    assert!(strictly_decreasing(&e1), "{e1:?}");
    assert!(strictly_decreasing(&e2), "{e2:?}");
}

#[test]
fn ensemble_quadrupole_converges_to_functional() {
    let q = functional_q(weyl(0.5));
    let e: Vec<f64> = [8, 16, 32, 64]
        .iter()
        .map(|&n| (quadrupole(&modified_data(sech2(), n, 0.5).unwrap()) - q).abs())
        .collect();
    assert!(strictly_decreasing(&e), "{e:?}");
}
