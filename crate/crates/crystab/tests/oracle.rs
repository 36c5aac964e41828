//! Frozen independent-oracle values for the reference cooling scenario.
//!
//! Every constant below was computed from the closed forms of the reference
//! scenario with 40-digit arithmetic, independently of this crate: the steady
//! profile is `nbar(x) = e^{-0.64 x}`, so the third moment, the removal
//! integral, and the feedback kernel all have elementary antiderivatives.
//! The library's trapezoid values must approach these at second order.

mod common;

use common::reference_cooling;
use crystab::control::{check_stability_conditions, cooling_feedback};
use crystab::equilibrium::cooling_steady;
use crystab::linearization::linearize_cooling;
use crystab::lyapunov::cooling_weight;

const ALPHA: f64 = 2.0;
const EPS_BAR: f64 = 0.909_594_995_222_223_3;
const UBAR_F: f64 = 2.510_300_066_934_479_4;
const BETA: f64 = -1.819_189_990_444_446_5;
const B_GAIN: f64 = 0.879_512_315_043_633_1;
const K0: f64 = 0.927_219_704_069_813;
const K1: f64 = 0.659_634_236_282_724_9;
const K2: f64 = 4.362_381_082_616_42;
const THETA_AT_HALF: f64 = -2.145_077_105_387_965_3;
const RHO_AT_ONE: f64 = 1.089_223_555_610_536_4;
const U_FEEDBACK: f64 = -0.427_718_797_194_478_6;
const KAPPA_THRESHOLD: f64 = 0.387_336_355_116_224_4;

fn feedback_probe(n: usize) -> (f64, f64, f64) {
    let s = reference_cooling(n);
    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();
    let w: Vec<f64> = s
        .grid
        .nodes()
        .iter()
        .map(|&x| 0.1 * (std::f64::consts::PI * x).sin() + 0.05 * x * x)
        .collect();
    let u = cooling_feedback(&w, 0.3, &coeffs, &rho, s.gamma, s.kappa, &s.grid).unwrap();
    (u, coeffs.k0, coeffs.theta[n / 2])
}

#[test]
fn boundary_gain_is_exact() {
    let s = reference_cooling(100);
    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    assert!((coeffs.alpha - ALPHA).abs() < 1e-14);
}

#[test]
fn steady_scalars_converge_to_closed_forms() {
    let s = reference_cooling(1000);
    let ss = cooling_steady(&s).unwrap();
    assert!((ss.eps_bar - EPS_BAR).abs() < 5e-7, "eps {}", ss.eps_bar);
    assert!((ss.ubar_f - UBAR_F).abs() < 1e-6, "ubar_f {}", ss.ubar_f);
    assert!((ss.beta - BETA).abs() < 1e-6, "beta {}", ss.beta);
    // nbar(1) = e^{-0.64} exactly (the exponent integral is closed form)
    assert!((ss.nbar[1000] - (-0.64f64).exp()).abs() < 1e-14);
}

#[test]
fn coefficient_bundle_converges_to_closed_forms() {
    let s = reference_cooling(1000);
    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    assert!((coeffs.b - B_GAIN).abs() < 1e-6);
    assert!((coeffs.k0 - K0).abs() < 5e-7, "k0 {}", coeffs.k0);
    assert!((coeffs.k1 - K1).abs() < 5e-7, "k1 {}", coeffs.k1);
    assert!((coeffs.k2 - K2).abs() < 5e-6, "k2 {}", coeffs.k2);
    assert!(
        (coeffs.theta[500] - THETA_AT_HALF).abs() < 1e-6,
        "theta(0.5) {}",
        coeffs.theta[500]
    );
}

#[test]
fn quadrature_error_decays_at_second_order() {
    let (u_a, k0_a, th_a) = feedback_probe(500);
    let (u_b, k0_b, th_b) = feedback_probe(1000);
    for (coarse, fine, exact) in [
        (u_a, u_b, U_FEEDBACK),
        (k0_a, k0_b, K0),
        (th_a, th_b, THETA_AT_HALF),
    ] {
        let e_coarse = (coarse - exact).abs();
        let e_fine = (fine - exact).abs();
        assert!(
            e_fine < 0.3 * e_coarse,
            "halving dx should quarter the error: {e_coarse:.3e} -> {e_fine:.3e}"
        );
    }
}

#[test]
fn weight_value_matches_closed_form() {
    // exponent integrand (2 v psi + h)/g = 0.32 is constant here
    let s = reference_cooling(400);
    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();
    assert!((rho.samples[400] - RHO_AT_ONE).abs() < 1e-12);
    assert!((rho.eval(0.37) - 1.5 * (-0.32 * 0.37f64).exp()).abs() < 1e-13);
}

#[test]
fn feedback_value_converges_to_closed_form() {
    let (u, _, _) = feedback_probe(1000);
    assert!((u - U_FEEDBACK).abs() < 5e-7, "u {u}");
}

#[test]
fn gain_threshold_converges_to_closed_form() {
    let s = reference_cooling(1000);
    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();
    let cert = check_stability_conditions(
        &coeffs,
        s.rho_bar,
        s.gamma,
        s.kappa,
        coeffs.g[1000],
        &rho.h_samples,
    );
    assert!((cert.kappa_threshold - KAPPA_THRESHOLD).abs() < 1e-6);
    assert!(
        cert.passed,
        "the reference gain kappa = 2 clears the threshold"
    );
}
