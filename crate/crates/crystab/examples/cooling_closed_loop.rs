//! Closed-loop run of the linearized cooling system: the functional decays
//! monotonically and the fitted rate clears the certified margin.
//!
//! ```text
//! cargo run -p crystab --example cooling_closed_loop
//! ```

use crystab::control::check_stability_conditions;
use crystab::equilibrium::cooling_steady;
use crystab::linearization::linearize_cooling;
use crystab::lyapunov::cooling_weight;
use crystab::scenario::{parse_scenario, Scenario};
use crystab::simulate::{random_cooling_state, simulate_cooling_linear, TimeStepSpec};
use crystab::verify::{assemble_closed_loop, decay_margin, fit_decay};

fn main() {
    let path = format!("{}/scenarios/cooling.txt", env!("CARGO_MANIFEST_DIR"));
    let doc = std::fs::read_to_string(path).expect("scenario file");
    let Scenario::Cooling(s) = parse_scenario(&doc).unwrap() else {
        unreachable!()
    };

    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();

    let cert = check_stability_conditions(
        &coeffs,
        s.rho_bar,
        s.gamma,
        s.kappa,
        *coeffs.g.last().unwrap(),
        &rho.h_samples,
    );
    println!(
        "gain kappa = {} vs threshold {:.4}: {}",
        s.kappa,
        cert.kappa_threshold,
        if cert.passed {
            "conditions hold"
        } else {
            "conditions violated"
        }
    );

    let op = assemble_closed_loop(&coeffs, &rho, s.gamma, s.kappa, &s.grid).unwrap();
    let delta = decay_margin(&op).unwrap();
    println!(
        "discrete decay margin delta = {delta:.4} (certified norm rate {:.4})",
        delta / 2.0
    );

    let x0 = random_cooling_state(&s.grid, coeffs.alpha, 1, 0.2);
    let spec = TimeStepSpec::new(10.0).unwrap().closed();
    let trace = simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec)
        .expect("closed-loop run");

    println!("\n   t        V             u");
    let stride = trace.len() / 10;
    for j in (0..trace.len()).step_by(stride.max(1)) {
        println!(
            "  {:5.2}  {:12.5e}  {:12.5e}",
            trace.times[j], trace.lyapunov[j], trace.control[j]
        );
    }
    let monotone = trace.lyapunov.windows(2).all(|p| p[1] <= p[0] + 1e-12);
    let norms: Vec<f64> = trace.lyapunov.iter().map(|v| (2.0 * v).sqrt()).collect();
    let fit = fit_decay(&trace.times, &norms).unwrap();
    println!(
        "\nV monotone: {monotone}; fitted norm rate {:.4} >= delta/2 = {:.4}",
        fit.rate,
        delta / 2.0
    );
}
