//! Shared fixtures for the integration suites.

use crystab::equilibrium::{enantiomer_steady, EnantiomerSteadyState};
use crystab::linearization::enantiomer_alpha;
use crystab::piecewise::{PiecewiseFn, Poly};
use crystab::rng::SplitMix64;
use crystab::scenario::{parse_scenario, EnantiomerScenario, EnantiomerSpecies, Scenario};
use crystab::simulate::{random_enantiomer_state, EnantiomerState};
use crystab::{CoolingScenario, Grid};

pub const COOLING_DOC: &str = include_str!("../../scenarios/cooling.txt");
pub const ENANTIOMER_DOC: &str = include_str!("../../scenarios/enantiomer.txt");

#[allow(dead_code)]
pub fn reference_cooling(n_cells: usize) -> CoolingScenario {
    match parse_scenario(COOLING_DOC)
        .unwrap()
        .with_n_cells(n_cells)
        .unwrap()
    {
        Scenario::Cooling(c) => c,
        _ => unreachable!(),
    }
}

#[allow(dead_code)]
pub fn reference_enantiomer(n_cells: usize) -> EnantiomerScenario {
    match parse_scenario(ENANTIOMER_DOC)
        .unwrap()
        .with_n_cells(n_cells)
        .unwrap()
    {
        Scenario::Enantiomer(e) => e,
        _ => unreachable!(),
    }
}

/// Randomized enantiomer scenario family used by the acceptance runs:
/// moderate sensitivities, advection fast enough that initial profile content
/// leaves the domain well inside the simulated window, and weight generators
/// with a comfortably positive floor. Deterministic in the seed.
#[allow(dead_code)]
pub fn random_enantiomer_case(
    seed: u64,
) -> (EnantiomerScenario, EnantiomerSteadyState, EnantiomerState) {
    let mut rng = SplitMix64::new(1000 + seed);
    let grid = Grid::new(1.0, 400).unwrap();
    let mut species = Vec::new();
    for _ in 0..2 {
        let gbar = rng.uniform(0.7, 1.1);
        let bbar = rng.uniform(0.5, 2.0);
        let g_slope = rng.uniform(-0.5, 0.5);
        let b_slope = rng.uniform(-0.5, 0.5);
        let h0 = rng.uniform(1.2, 1.6);
        let h1 = rng.uniform(0.0, 0.3);
        species.push(EnantiomerSpecies {
            gbar,
            bbar,
            g_slope,
            b_slope,
            rho_bar: rng.uniform(0.5, 1.5),
            h: PiecewiseFn::new(vec![0.0, 1.0], vec![Poly::new(&[h0, h1]).unwrap()]).unwrap(),
        });
    }
    // fines dissolution: linear, nonpositive, strongest at small sizes
    let psi0 = rng.uniform(-0.3, 0.0);
    let psi_slope = rng.uniform(0.0, -psi0);
    let s = EnantiomerScenario {
        species: [species[0].clone(), species[1].clone()],
        psi: PiecewiseFn::new(vec![0.0, 1.0], vec![Poly::new(&[psi0, psi_slope]).unwrap()])
            .unwrap(),
        grid,
        gamma: rng.uniform(0.6, 1.8),
        kappa: rng.uniform(0.4, 1.0),
    };
    s.validate().unwrap();
    let ss = enantiomer_steady(&s);
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
    let mut state = random_enantiomer_state(&s.grid, a1, a2, 5000 + seed, 0.25);
    // smooth three-mode profiles on top of the boundary-compatible offset
    let ell = s.grid.length();
    let mut rng2 = SplitMix64::new(9000 + seed);
    let m1 = rng2.uniform(-0.2, 0.2);
    let m2 = rng2.uniform(-0.2, 0.2) / 8.0;
    let m3 = rng2.uniform(-0.2, 0.2) / 27.0;
    let shape = |x: f64, alpha: f64, v: f64| {
        alpha * v
            + m1 * (std::f64::consts::PI * x / ell).sin()
            + m2 * (2.0 * std::f64::consts::PI * x / ell).sin()
            + m3 * (3.0 * std::f64::consts::PI * x / ell).sin()
    };
    state.w1 = s.grid.sample(|x| shape(x, a1, state.v));
    state.w2 = s.grid.sample(|x| shape(x, a2, state.v));
    (s, ss, state)
}
