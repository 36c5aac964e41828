//! Physical (nonlinear) cooling simulation: a perturbed start returns to the
//! steady state under the deviation feedback.
//!
//! ```text
//! cargo run -p crystab --example cooling_nonlinear
//! ```

use crystab::equilibrium::cooling_steady;
use crystab::scenario::{parse_scenario, Scenario};
use crystab::simulate::{simulate_cooling_nonlinear, CoolingState, TimeStepSpec};

fn main() {
    let path = format!("{}/scenarios/cooling.txt", env!("CARGO_MANIFEST_DIR"));
    let doc = std::fs::read_to_string(path).expect("scenario file");
    let Scenario::Cooling(s) = parse_scenario(&doc).unwrap() else {
        unreachable!()
    };
    let ss = cooling_steady(&s).unwrap();

    // start 5% above the steady profile with a slightly elevated concentration
    let x0 = CoolingState {
        w: ss.nbar.iter().map(|n| 1.05 * n).collect(),
        s: ss.cbar + 0.02,
        t: 0.0,
    };

    for (tag, spec) in [
        ("open loop (constant feed)", TimeStepSpec::new(4.0).unwrap()),
        ("closed loop", TimeStepSpec::new(4.0).unwrap().closed()),
    ] {
        let trace = simulate_cooling_nonlinear(&s, &ss, &x0, &spec).expect("run");
        println!("{tag}:");
        println!("   t       V(deviation)    c - cbar");
        let stride = (trace.len() / 8).max(1);
        for j in (0..trace.len()).step_by(stride) {
            println!(
                "  {:5.2}  {:12.5e}  {:12.5e}",
                trace.times[j], trace.lyapunov[j], trace.scalar[j]
            );
        }
        println!(
            "  final: V = {:.4e}, |c - cbar| = {:.4e}\n",
            trace.lyapunov.last().unwrap(),
            trace.scalar.last().unwrap().abs()
        );
    }
}
