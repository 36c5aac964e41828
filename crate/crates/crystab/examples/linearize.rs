//! Prints the coefficient bundle of the linearized cooling system and the
//! advisory sign-condition report.
//!
//! ```text
//! cargo run -p crystab --example linearize
//! ```

use crystab::equilibrium::cooling_steady;
use crystab::linearization::linearize_cooling;
use crystab::scenario::{check_sign_conditions, parse_scenario, Scenario};

fn main() {
    let path = format!("{}/scenarios/cooling.txt", env!("CARGO_MANIFEST_DIR"));
    let doc = std::fs::read_to_string(path).expect("scenario file");
    let Scenario::Cooling(s) = parse_scenario(&doc).expect("valid scenario") else {
        unreachable!()
    };
    let ss = cooling_steady(&s).expect("steady state");
    let coeffs = linearize_cooling(&s, &ss).expect("coefficients");

    println!("linearized cooling system around cbar = {}", coeffs.cbar);
    println!("  alpha = {:.6}   (boundary gain)", coeffs.alpha);
    println!("  k0    = {:.6}", coeffs.k0);
    println!("  k1    = {:.6}", coeffs.k1);
    println!(
        "  k2    = {:.6}   (= k0 - alpha k1 - alpha ∫theta)",
        coeffs.k2
    );
    println!("  b     = {:.6}   (control gain v / eps)", coeffs.b);
    println!("  beta  = {:.6}", coeffs.beta);
    let n = s.grid.n_cells();
    println!(
        "  theta at x = 0, 1/2, 1: {:.4}, {:.4}, {:.4}",
        coeffs.theta[0],
        coeffs.theta[n / 2],
        coeffs.theta[n]
    );

    println!("\nadvisory sign conditions (realistic-example inequalities):");
    println!("{}", check_sign_conditions(&coeffs, &s));
}
