//! Closed-loop run of the two-species system: the functional stays under the
//! exponential envelope with rate min{h10, h20, kappa}.
//!
//! ```text
//! cargo run -p crystab --example enantiomer_decay
//! ```

use crystab::equilibrium::enantiomer_steady;
use crystab::linearization::enantiomer_alpha;
use crystab::scenario::{parse_scenario, Scenario};
use crystab::simulate::{
    random_enantiomer_state, simulate_enantiomer, EnantiomerMode, TimeStepSpec,
};
use crystab::verify::{fit_decay, trace_rate_identity, RateForm};

fn main() {
    let path = format!("{}/scenarios/enantiomer.txt", env!("CARGO_MANIFEST_DIR"));
    let doc = std::fs::read_to_string(path).expect("scenario file");
    let Scenario::Enantiomer(s) = parse_scenario(&doc).unwrap() else {
        unreachable!()
    };
    let ss = enantiomer_steady(&s);
    let omega = s.decay_rate();
    println!("decay rate omega = min{{h10, h20, kappa}} = {omega}");

    let a1 = enantiomer_alpha(
        s.species[0].b_slope,
        s.species[0].g_slope,
        s.species[0].bbar,
        s.species[0].gbar,
    );
    let a2 = enantiomer_alpha(
        s.species[1].b_slope,
        s.species[1].g_slope,
        s.species[1].bbar,
        s.species[1].gbar,
    );
    let x0 = random_enantiomer_state(&s.grid, a1, a2, 7, 0.2);

    let spec = TimeStepSpec::new(3.0 / omega)
        .unwrap()
        .with_cfl(0.4)
        .unwrap()
        .closed()
        .recording_rate();
    let trace = simulate_enantiomer(&s, &ss, &x0, &spec, EnantiomerMode::Quasilinear)
        .expect("closed-loop run");

    let w0 = trace.lyapunov[0];
    println!("\n   t        W            envelope W0 e^(-omega t)");
    let stride = (trace.len() / 10).max(1);
    let mut worst = 0.0f64;
    for j in (0..trace.len()).step_by(stride) {
        let envelope = w0 * (-omega * trace.times[j]).exp();
        println!(
            "  {:5.2}  {:12.5e}  {:12.5e}",
            trace.times[j], trace.lyapunov[j], envelope
        );
    }
    for (t, w) in trace.times.iter().zip(&trace.lyapunov) {
        worst = worst.max(w / (w0 * (-omega * t).exp()));
    }
    let fit = fit_decay(&trace.times, &trace.lyapunov).unwrap();
    let identity = trace_rate_identity(&trace, RateForm::Deviation).unwrap();
    println!("\nworst envelope factor: {worst:.4} (must stay <= 1 up to discretization)");
    println!("fitted W rate {:.4} vs certified {omega}", fit.rate);
    println!("dissipation-identity relative error: {identity:.4}");
}
