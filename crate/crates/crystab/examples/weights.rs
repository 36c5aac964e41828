//! Builds the Lyapunov density weights for both models and checks them
//! against their defining ODEs.
//!
//! ```text
//! cargo run -p crystab --example weights
//! ```

use crystab::equilibrium::cooling_steady;
use crystab::linearization::linearize_cooling;
use crystab::lyapunov::{cooling_weight, enantiomer_weight};
use crystab::scenario::{parse_scenario, Scenario};
use crystab::verify::{enantiomer_weight_ode_residual, weight_ode_residual};

fn read(name: &str) -> String {
    let path = format!("{}/scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("scenario file")
}

fn main() {
    let Scenario::Cooling(s) = parse_scenario(&read("cooling.txt")).unwrap() else {
        unreachable!()
    };
    let ss = cooling_steady(&s).unwrap();
    let coeffs = linearize_cooling(&s, &ss).unwrap();
    let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();
    println!("cooling weight rho(x) = rho_bar exp(-∫ (2 v psi + g' + h)/g):");
    let n = s.grid.n_cells();
    for i in [0, n / 2, n] {
        println!("  rho({:.2}) = {:.6}", s.grid.nodes()[i], rho.samples[i]);
    }
    let r = weight_ode_residual(&rho, &coeffs.growth, &s.kinetics.psi, &s.h, s.kinetics.v);
    println!("  ODE residual max = {r:.3e}");

    let Scenario::Enantiomer(e) = parse_scenario(&read("enantiomer.txt")).unwrap() else {
        unreachable!()
    };
    println!("\nenantiomer weights rho_k = rho_bar_k exp(-(1/Gbar_k) ∫ (2 psi + h_k)):");
    for (k, sp) in e.species.iter().enumerate() {
        let rho_k = enantiomer_weight(sp.gbar, &e.psi, &sp.h, sp.rho_bar, &e.grid).unwrap();
        let r = enantiomer_weight_ode_residual(&rho_k, sp.gbar, &e.psi, &sp.h);
        println!(
            "  species {}: rho(0) = {:.4}, rho(l) = {:.4}, residual = {r:.3e}",
            k + 1,
            rho_k.samples[0],
            rho_k.samples[e.grid.n_cells()]
        );
    }
}
