//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//!
//! Tolerances and thresholds are pinned in the constants below. Run with
//! `cargo test -p crystab --test acceptance -- --nocapture` to see the lines.

mod common;

use common::{random_enantiomer_case, reference_cooling};
use crystab::control::check_stability_conditions;
use crystab::equilibrium::cooling_steady;
use crystab::linearization::linearize_cooling;
use crystab::lyapunov::{cooling_weight, enantiomer_weight, DensityWeight};
use crystab::piecewise::PiecewiseFn;
use crystab::rng::SplitMix64;
use crystab::scenario::EquilibriumGrowth;
use crystab::simulate::{
    simulate_cooling_linear, simulate_cooling_nonlinear, simulate_enantiomer, stable_dt,
    CoolingState, EnantiomerMode, TimeStepSpec,
};
use crystab::verify::{
    assemble_closed_loop, decay_margin, enantiomer_steady_residual, enantiomer_weight_ode_residual,
    fit_decay, steady_residual, trace_rate_identity, weight_ode_residual, RateForm,
};
use crystab::{CoolingScenario, Grid};

/// Envelope slack factor of the decay criterion.
const ENVELOPE_SLACK: f64 = 1.05;
/// Rate-identity tolerance.
const RATE_IDENTITY_TOL: f64 = 0.05;
/// Weight-ODE residual bounds.
const WEIGHT_RESIDUAL_TOL: f64 = 1e-10;
const WEIGHT_RESIDUAL_CONST_TOL: f64 = 1e-14;
/// Steady-state residual bounds.
const STEADY_RESIDUAL_TOL: f64 = 1e-8;
const STEADY_RESIDUAL_EXACT_TOL: f64 = 1e-13;
/// Nonlinear drift constant, fixed by the N in {200, 400, 800} study below
/// (measured drift*N stays near 0.10 across the three grids).
const DRIFT_CONSTANT: f64 = 0.15;
/// Matrix/simulator one-step agreement.
const STEP_MATCH_TOL: f64 = 1e-12;
/// Transport-oracle residual ratio.
const TRANSPORT_RESIDUAL_RATIO: f64 = 1e-2;

fn cooling_pipeline(
    s: &CoolingScenario,
) -> (
    crystab::equilibrium::CoolingSteadyState,
    crystab::linearization::LinearizedCoefficients,
    DensityWeight,
) {
    let ss = cooling_steady(s).unwrap();
    let coeffs = linearize_cooling(s, &ss).unwrap();
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();
    (ss, coeffs, rho)
}

/// Small-generator variant of the reference scenario: with h = 0.1 and
/// gamma = 0.2 the gain threshold is large (about 1.31), which makes the
/// below-threshold margin detectable at N = 400.
fn small_h_cooling(n: usize) -> CoolingScenario {
    let mut s = reference_cooling(n);
    s.h = PiecewiseFn::constant(0.1, 1.0);
    s.gamma = 0.2;
    s
}

// ---------------------------------------------------------------------------
// criterion 1: decay envelope of the two-species closed loop
// criterion 2: dissipation-rate identity on the same runs
// ---------------------------------------------------------------------------

fn theorem_runs() -> Vec<(f64, f64, f64, f64)> {
    // (omega, envelope_max_factor, identity_err, fitted_rate) per seed
    (0..5u64)
        .map(|seed| {
            let (s, ss, x0) = random_enantiomer_case(seed);
            let omega = s.decay_rate();
            let spec = TimeStepSpec::new(3.0 / omega)
                .unwrap()
                .with_cfl(0.4)
                .unwrap()
                .closed()
                .recording_rate();
            let trace =
                simulate_enantiomer(&s, &ss, &x0, &spec, EnantiomerMode::Quasilinear).unwrap();
            let w0 = trace.lyapunov[0];
            assert!(w0 > 0.0, "seed {seed}: initial functional must be positive");
            let envelope_max = trace
                .times
                .iter()
                .zip(&trace.lyapunov)
                .map(|(t, w)| w / (w0 * (-omega * t).exp()))
                .fold(0.0f64, f64::max);
            let identity = trace_rate_identity(&trace, RateForm::Deviation).unwrap();
            let fit = fit_decay(&trace.times, &trace.lyapunov).unwrap();
            (omega, envelope_max, identity, fit.rate)
        })
        .collect()
}

#[test]
fn criterion_1_decay_envelope() {
    let runs = theorem_runs();
    let worst = runs.iter().map(|r| r.1).fold(0.0f64, f64::max);
    for (i, (omega, env, _, rate)) in runs.iter().enumerate() {
        assert!(
            *env <= ENVELOPE_SLACK,
            "seed {i}: envelope factor {env} exceeds {ENVELOPE_SLACK}"
        );
        // the fitted rate must not undershoot the certified rate
        assert!(
            *rate >= 0.95 * omega,
            "seed {i}: fitted rate {rate} below 0.95 * {omega}"
        );
    }
    println!(
        "criterion 1 (decay envelope, 5 seeds, N=400, cfl=0.4): PASS \
         (worst envelope factor {worst:.4} <= {ENVELOPE_SLACK})"
    );
}

#[test]
fn criterion_2_rate_identity() {
    let runs = theorem_runs();
    let worst = runs.iter().map(|r| r.2).fold(0.0f64, f64::max);
    for (i, (_, _, identity, _)) in runs.iter().enumerate() {
        assert!(
            *identity <= RATE_IDENTITY_TOL,
            "seed {i}: identity error {identity} exceeds {RATE_IDENTITY_TOL}"
        );
    }
    println!(
        "criterion 2 (dissipation identity, 5 seeds): PASS \
         (worst relative error {worst:.4} <= {RATE_IDENTITY_TOL})"
    );
}

// ---------------------------------------------------------------------------
// criterion 3: cooling certificate (margin, monotonicity, fitted rate,
//              and failure below the gain threshold)
// ---------------------------------------------------------------------------

#[test]
fn criterion_3_cooling_certificate() {
    // two passing scenarios: the reference and the small-generator variant
    let cases = [
        (reference_cooling(200), "reference"),
        (small_h_cooling(400), "small-h"),
    ];
    for (s, tag) in &cases {
        let (_, coeffs, rho) = cooling_pipeline(s);
        let cert = check_stability_conditions(
            &coeffs,
            s.rho_bar,
            s.gamma,
            s.kappa,
            *coeffs.g.last().unwrap(),
            &rho.h_samples,
        );
        assert!(cert.passed, "{tag}: gain conditions must pass");
        let op = assemble_closed_loop(&coeffs, &rho, s.gamma, s.kappa, &s.grid).unwrap();
        let delta = decay_margin(&op).unwrap();
        assert!(delta > 0.0, "{tag}: margin {delta} must be positive");

        let mut rng = SplitMix64::new(3);
        let n = s.grid.n_nodes();
        let s0 = rng.uniform(-0.3, 0.3);
        let mut w: Vec<f64> = s
            .grid
            .nodes()
            .iter()
            .map(|&x| {
                coeffs.alpha * s0
                    + rng.uniform(-0.2, 0.2) * (std::f64::consts::PI * x).sin()
                    + rng.uniform(-0.05, 0.05) * (2.0 * std::f64::consts::PI * x).sin()
            })
            .collect();
        w[0] = coeffs.alpha * s0;
        assert_eq!(w.len(), n);
        let x0 = CoolingState { w, s: s0, t: 0.0 };
        let horizon = (6.0 / (0.5 * delta)).min(60.0);
        let spec = TimeStepSpec::new(horizon).unwrap().closed();
        let trace =
            simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec).unwrap();
        let monotone = trace.lyapunov.windows(2).all(|p| p[1] <= p[0] + 1e-12);
        assert!(monotone, "{tag}: V must be non-increasing at records");
        let norms: Vec<f64> = trace.lyapunov.iter().map(|v| (2.0 * v).sqrt()).collect();
        let fit = fit_decay(&trace.times, &norms).unwrap();
        assert!(
            fit.rate >= 0.9 * (delta / 2.0),
            "{tag}: fitted rate {} below 0.9 * {}",
            fit.rate,
            delta / 2.0
        );
        println!(
            "criterion 3 [{tag}]: delta = {delta:.4} > 0, V monotone, \
             fitted rate {:.4} >= 0.9*delta/2 = {:.4}",
            fit.rate,
            0.45 * delta
        );
    }

    // below the threshold (strictly, by 10%) the certificate must fail
    let s = small_h_cooling(400);
    let (_, coeffs, rho) = cooling_pipeline(&s);
    let threshold = check_stability_conditions(
        &coeffs,
        s.rho_bar,
        s.gamma,
        0.0,
        *coeffs.g.last().unwrap(),
        &rho.h_samples,
    )
    .kappa_threshold;
    assert!(coeffs.alpha != 0.0 && threshold > 0.0);
    let op = assemble_closed_loop(&coeffs, &rho, s.gamma, 0.9 * threshold, &s.grid).unwrap();
    let delta_below = decay_margin(&op).unwrap();
    assert!(
        delta_below <= 0.0,
        "margin {delta_below} should be nonpositive 10% below the threshold"
    );
    println!(
        "criterion 3 (gain 10% below threshold {threshold:.4}): PASS \
         (delta = {delta_below:.4} <= 0)"
    );
}

// ---------------------------------------------------------------------------
// criterion 4: weight-ODE residuals
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_weight_residuals() {
    // reference cooling weight
    let s = reference_cooling(300);
    let (_, coeffs, rho) = cooling_pipeline(&s);
    let r_cooling = weight_ode_residual(&rho, &coeffs.growth, &s.kinetics.psi, &s.h, s.kinetics.v);
    assert!(
        r_cooling <= WEIGHT_RESIDUAL_TOL,
        "cooling residual {r_cooling}"
    );

    // enantiomer weights of the random family
    let mut r_enant = 0.0f64;
    for seed in 0..3 {
        let (s, _, _) = random_enantiomer_case(seed);
        for sp in &s.species {
            let rho = enantiomer_weight(sp.gbar, &s.psi, &sp.h, sp.rho_bar, &s.grid).unwrap();
            r_enant = r_enant.max(enantiomer_weight_ode_residual(&rho, sp.gbar, &s.psi, &sp.h));
        }
    }
    assert!(
        r_enant <= WEIGHT_RESIDUAL_TOL,
        "enantiomer residual {r_enant}"
    );

    // constant-coefficient closed form: g = 1, psi = 0, h = 0.1
    let grid = Grid::new(1.0, 200).unwrap();
    let growth = EquilibriumGrowth {
        scale: 1.0,
        ag: 0.0,
        kg: 1.0,
    };
    let psi = PiecewiseFn::constant(0.0, 1.0);
    let h = PiecewiseFn::constant(0.1, 1.0);
    let coeffs_const = crystab::linearization::LinearizedCoefficients {
        g: vec![1.0; grid.n_nodes()],
        g_prime: vec![0.0; grid.n_nodes()],
        g_c: vec![0.0; grid.n_nodes()],
        nbar_prime: vec![0.0; grid.n_nodes()],
        theta: vec![0.0; grid.n_nodes()],
        alpha: 0.0,
        k0: 0.0,
        k1: 0.0,
        k2: 0.0,
        beta: 0.0,
        b: 1.0,
        cbar: 1.0,
        eps_bar: 1.0,
        v: 1.0,
        psi: psi.clone(),
        growth,
    };
    let rho_const = cooling_weight(&coeffs_const, 1.0, &h, 1.0, &grid).unwrap();
    let r_const = weight_ode_residual(&rho_const, &growth, &psi, &h, 1.0);
    assert!(
        r_const <= WEIGHT_RESIDUAL_CONST_TOL,
        "constant-case residual {r_const}"
    );

    println!(
        "criterion 4 (weight-ODE residuals): PASS \
         (cooling {r_cooling:.2e}, enantiomer {r_enant:.2e} <= 1e-10; \
         constant case {r_const:.2e} <= 1e-14)"
    );
}

// ---------------------------------------------------------------------------
// criterion 5: steady-state residuals and the nonlinear drift study
// ---------------------------------------------------------------------------

#[test]
fn criterion_5_steady_residuals_and_drift() {
    let s = reference_cooling(300);
    let ss = cooling_steady(&s).unwrap();
    let r = steady_residual(&s, &ss);
    assert!(
        r.max() <= STEADY_RESIDUAL_TOL,
        "cooling steady residual {:?}",
        r
    );

    // k_v = 0, psi = 0: all integrals exact
    let mut s_exact = reference_cooling(200);
    s_exact.kinetics.kv = 0.0;
    s_exact.kinetics.psi = PiecewiseFn::constant(0.0, 1.0);
    let ss_exact = cooling_steady(&s_exact).unwrap();
    let r_exact = steady_residual(&s_exact, &ss_exact);
    assert!(
        r_exact.max() <= STEADY_RESIDUAL_EXACT_TOL,
        "exact-case residual {:?}",
        r_exact
    );

    // enantiomer steady state (closed-form identity)
    let (se, sse, _) = random_enantiomer_case(0);
    let re = enantiomer_steady_residual(&se, &sse);
    assert!(
        re.max() <= STEADY_RESIDUAL_EXACT_TOL,
        "enantiomer residual {:?}",
        re
    );

    // refinement study: starting at the steady state, the nonlinear run
    // drifts no more than DRIFT_CONSTANT * dx over t_end = 1
    let mut report = String::new();
    for n in [200usize, 400, 800] {
        let s = reference_cooling(n);
        let ss = cooling_steady(&s).unwrap();
        let x0 = CoolingState {
            w: ss.nbar.clone(),
            s: ss.cbar,
            t: 0.0,
        };
        let spec = TimeStepSpec::new(1.0).unwrap();
        let trace = simulate_cooling_nonlinear(&s, &ss, &x0, &spec).unwrap();
        let nmax = ss.nbar.iter().cloned().fold(0.0f64, f64::max);
        let drift =
            trace.norms[0].last().unwrap() / nmax + trace.scalar.last().unwrap().abs() / ss.cbar;
        let dx = s.grid.dx();
        assert!(
            drift <= DRIFT_CONSTANT * dx,
            "N={n}: drift {drift:.3e} exceeds {DRIFT_CONSTANT} * {dx:.3e}"
        );
        report.push_str(&format!(" N={n}: {drift:.2e}"));
    }
    println!(
        "criterion 5 (steady residuals {:.2e} <= 1e-8, exact cases {:.2e}/{:.2e} <= 1e-13; \
         drift <= {DRIFT_CONSTANT}*dx:{report}): PASS",
        r.max(),
        r_exact.max(),
        re.max()
    );
}

// ---------------------------------------------------------------------------
// criterion 6: matrix / simulator one-step equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_operator_matches_simulator() {
    let s = reference_cooling(200);
    let (_, coeffs, rho) = cooling_pipeline(&s);
    let op = assemble_closed_loop(&coeffs, &rho, s.gamma, s.kappa, &s.grid).unwrap();
    let n = s.grid.n_nodes();
    let max_g = coeffs.g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dt = stable_dt(max_g, s.grid.dx(), 0.5).unwrap();

    let mut rng = SplitMix64::new(42);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let s_val = rng.uniform(-1.0, 1.0);
        let mut w: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        w[0] = coeffs.alpha * s_val;
        let x0 = CoolingState {
            w: w.clone(),
            s: s_val,
            t: 0.0,
        };
        let spec = TimeStepSpec::new(dt)
            .unwrap()
            .closed()
            .with_snapshots(vec![dt]);
        let trace =
            simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec).unwrap();
        let w_sim = &trace.snapshots[0].profiles[0];
        let s_sim = *trace.scalar.last().unwrap();

        let mut state = vec![0.0; op.dim()];
        for i in 1..n {
            state[i] = w[i] - coeffs.alpha * s_val;
        }
        state[n] = s_val;
        let next = op.rk4_step(&state, dt);
        worst = worst.max((next[n] - s_sim).abs());
        for i in 0..n {
            worst = worst.max((next[i] + coeffs.alpha * next[n] - w_sim[i]).abs());
        }
    }
    assert!(worst <= STEP_MATCH_TOL, "one-step mismatch {worst:.3e}");
    println!(
        "criterion 6 (operator vs simulator, 5 random states): PASS \
         (max mismatch {worst:.3e} <= 1e-12)"
    );
}

// ---------------------------------------------------------------------------
// criterion 7: transport oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_7_transport_oracle() {
    // decoupled pure advection at unit speed: the method of characteristics
    // gives w(x, t) = w0(x - t), so the bump supported in (0, 1/2) has fully
    // left the domain by t = 1.2
    let grid = Grid::new(1.0, 800).unwrap();
    let n = grid.n_nodes();
    let coeffs = crystab::linearization::LinearizedCoefficients {
        g: vec![1.0; n],
        g_prime: vec![0.0; n],
        g_c: vec![0.0; n],
        nbar_prime: vec![0.0; n],
        theta: vec![0.0; n],
        alpha: 0.0,
        k0: 1.0,
        k1: 0.0,
        k2: 1.0,
        beta: 0.0,
        b: 1.0,
        cbar: 1.0,
        eps_bar: 1.0,
        v: 0.0,
        psi: PiecewiseFn::constant(0.0, 1.0),
        growth: EquilibriumGrowth {
            scale: 1.0,
            ag: 0.0,
            kg: 1.0,
        },
    };
    let rho = DensityWeight::uniform(1.0, &grid);
    let w0: Vec<f64> = grid.sample(|x| {
        if x < 0.5 {
            let s = (2.0 * std::f64::consts::PI * x).sin();
            s * s
        } else {
            0.0
        }
    });
    let x0 = CoolingState {
        w: w0,
        s: 0.0,
        t: 0.0,
    };
    let spec = TimeStepSpec::new(1.2).unwrap();
    let trace = simulate_cooling_linear(&x0, &coeffs, &rho, 1.0, 0.0, &grid, &spec).unwrap();
    let ratio = trace.norms[0].last().unwrap() / trace.norms[0][0];
    assert!(
        ratio <= TRANSPORT_RESIDUAL_RATIO,
        "residual ratio {ratio:.3e}"
    );
    println!(
        "criterion 7 (transport oracle, N=800): PASS \
         (residual ratio {ratio:.3e} <= 1e-2 at t = 1.2)"
    );
}

// ---------------------------------------------------------------------------
// criterion 8: adjudication of the two dissipation forms
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_dissipation_form_adjudication() {
    // The closed-loop derivative admits two printed forms: a quadratic in the
    // deviation profile w and one in the shifted profile eta = w - alpha s.
    // They disagree whenever s != 0; only one can match the measured dV/dt.
    let s = reference_cooling(400);
    let (_, coeffs, rho) = cooling_pipeline(&s);
    let s0 = 0.5;
    let w: Vec<f64> = s
        .grid
        .nodes()
        .iter()
        .map(|&x| coeffs.alpha * s0 + 0.3 * (std::f64::consts::PI * x).sin())
        .collect();
    let x0 = CoolingState { w, s: s0, t: 0.0 };
    let spec = TimeStepSpec::new(1.0).unwrap().closed().recording_rate();
    let trace =
        simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec).unwrap();
    let err_w = trace_rate_identity(&trace, RateForm::Deviation).unwrap();
    let err_eta = trace_rate_identity(&trace, RateForm::Shifted).unwrap();
    assert!(
        err_w <= RATE_IDENTITY_TOL,
        "deviation form should match dV/dt, error {err_w}"
    );
    assert!(
        err_eta >= 0.25 && err_eta >= 10.0 * err_w,
        "shifted form should not match while s != 0 (errors: w {err_w}, eta {err_eta})"
    );
    println!(
        "criterion 8 (dissipation-form adjudication): PASS \
         (deviation form error {err_w:.4} matches dV/dt; \
         shifted form error {err_eta:.4} does not for s != 0)"
    );
}
