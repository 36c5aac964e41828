//! Computes the constant-input steady states of both shipped scenarios.
//!
//! ```text
//! cargo run -p crystab --example steady_state
//! ```

use crystab::equilibrium::{cooling_steady, enantiomer_steady};
use crystab::scenario::{parse_scenario, Scenario};

fn scenario(name: &str) -> Scenario {
    let path = format!("{}/scenarios/{name}", env!("CARGO_MANIFEST_DIR"));
    parse_scenario(&std::fs::read_to_string(path).expect("scenario file")).expect("valid scenario")
}

fn main() {
    let Scenario::Cooling(cooling) = scenario("cooling.txt") else {
        unreachable!()
    };
    let ss = cooling_steady(&cooling).expect("steady state");
    println!("cooling crystallizer");
    println!(
        "  cbar    = {:.6}   (equilibrium solute concentration)",
        ss.cbar
    );
    println!("  ubar_f  = {:.6}   (matching constant feed)", ss.ubar_f);
    println!("  eps_bar = {:.6}   (void fraction)", ss.eps_bar);
    println!("  beta    = {:.6}", ss.beta);
    println!("  profile nbar(x) at x = 0, 1/4, 1/2, 3/4, 1:");
    let n = cooling.grid.n_cells();
    for i in [0, n / 4, n / 2, 3 * n / 4, n] {
        println!(
            "    nbar({:.2}) = {:.6}",
            cooling.grid.nodes()[i],
            ss.nbar[i]
        );
    }

    let Scenario::Enantiomer(enant) = scenario("enantiomer.txt") else {
        unreachable!()
    };
    let ss2 = enantiomer_steady(&enant);
    println!("\npreferential crystallization");
    for k in 0..2 {
        println!(
            "  species {}: nbar({:.0}) = {:.6}, nbar(l) = {:.6}",
            k + 1,
            0.0,
            ss2.nbar[k][0],
            ss2.nbar[k][enant.grid.n_cells()]
        );
    }
}
