//! Discrete certificates: operator assembly, metric positivity, the decay
//! margin, and a scan of the margin across the gain threshold.
//!
//! ```text
//! cargo run -p crystab --example certificates
//! ```

use crystab::control::check_stability_conditions;
use crystab::equilibrium::cooling_steady;
use crystab::linalg::jacobi_eigenvalues;
use crystab::linearization::linearize_cooling;
use crystab::lyapunov::cooling_weight;
use crystab::piecewise::PiecewiseFn;
use crystab::scenario::{parse_scenario, Scenario};
use crystab::verify::{assemble_closed_loop, decay_margin};

fn main() {
    let path = format!("{}/scenarios/cooling.txt", env!("CARGO_MANIFEST_DIR"));
    let doc = std::fs::read_to_string(path).expect("scenario file");
    let Scenario::Cooling(mut s) = parse_scenario(&doc).unwrap() else {
        unreachable!()
    };
    // a small weight generator makes the gain threshold bite visibly
    s.h = PiecewiseFn::constant(0.1, 1.0);
    s.gamma = 0.2;
    let s = match Scenario::Cooling(s).with_n_cells(300).unwrap() {
        Scenario::Cooling(c) => c,
        _ => unreachable!(),
    };

    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();
    let threshold = check_stability_conditions(
        &coeffs,
        s.rho_bar,
        s.gamma,
        0.0,
        *coeffs.g.last().unwrap(),
        &rho.h_samples,
    )
    .kappa_threshold;
    println!("gain threshold: kappa > {threshold:.4}");

    let op = assemble_closed_loop(&coeffs, &rho, s.gamma, s.kappa, &s.grid).unwrap();
    let metric_min = jacobi_eigenvalues(&op.metric).unwrap()[0];
    println!("metric min eigenvalue: {metric_min:.4e} (positive definite)");

    println!("\n  kappa / threshold   decay margin delta");
    for frac in [0.8, 0.9, 1.0, 1.1, 1.5, 2.0] {
        let op = assemble_closed_loop(&coeffs, &rho, s.gamma, frac * threshold, &s.grid).unwrap();
        let delta = decay_margin(&op).unwrap();
        let verdict = if delta > 0.0 {
            "certified"
        } else {
            "not certified"
        };
        println!("  {frac:>6.2}              {delta:>9.5}   {verdict}");
    }
    println!("\nbelow the threshold the margin goes nonpositive: the gain condition is sharp");
}
