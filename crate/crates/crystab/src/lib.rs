//! Stabilization and simulation of continuous crystallization models.
//!
//! Two model families are covered. The *cooling* crystallizer couples a
//! size-structured transport equation for the crystal population to a solute
//! mass balance driven by the feed concentration. The *preferential* model
//! tracks two enantiomer populations whose growth and nucleation respond to a
//! shared saturation variable whose rate of change is the control.
//!
//! For both, the crate computes constant-input steady states, linearizes
//! around them, constructs positive density weights that turn a quadratic
//! functional into a strict Lyapunov functional, synthesizes the stabilizing
//! feedback, simulates the closed loop (first-order upwind in space, RK4 in
//! time), and produces numerical certificates: weight-ODE and steady-state
//! residuals, discrete dissipation margins from a symmetric generalized
//! eigenproblem, closed-loop rate identities, and fitted decay rates.
//!
//! # Quick start
//!
//! ```
//! use crystab::equilibrium::cooling_steady;
//! use crystab::linearization::linearize_cooling;
//! use crystab::lyapunov::cooling_weight;
//! use crystab::scenario::{parse_scenario, Scenario};
//! use crystab::simulate::{random_cooling_state, simulate_cooling_linear, TimeStepSpec};
//!
//! let doc = "model = cooling\nn_cells = 100\nk_b = 2.0\np_b = 2.0\nc_sat = 0.5\n\
//!            rho0 = 3.0\nv = 0.8\nk_v = 0.6\ncbar_target = 1.0\n\
//!            gamma = 1.2\nkappa = 2.0\nrhobar = 1.5\n\
//!            psi.coeffs = [[-0.4]]\nphi.coeffs = [[1.0]]\nh.coeffs = [[0.8]]\n";
//! let Scenario::Cooling(s) = parse_scenario(doc).unwrap() else { unreachable!() };
//! let ss = cooling_steady(&s).unwrap();
//! let coeffs = linearize_cooling(&s, &ss).unwrap();
//! let rho = cooling_weight(&coeffs, s.kinetics.v, &s.h, s.rho_bar, &s.grid).unwrap();
//! let x0 = random_cooling_state(&s.grid, coeffs.alpha, 7, 0.1);
//! let spec = TimeStepSpec::new(1.0).unwrap().closed();
//! let trace = simulate_cooling_linear(&x0, &coeffs, &rho, s.gamma, s.kappa, &s.grid, &spec).unwrap();
//! assert!(trace.lyapunov.last().unwrap() < &trace.lyapunov[0]);
//! ```
//!
//! # Runnable examples
//!
//! Each major capability has a runnable example (`cargo run -p crystab
//! --example <name>`):
//!
//! | example              | shows                                                 |
//! |----------------------|-------------------------------------------------------|
//! | `steady_state`       | equilibrium profiles and scalars of both models       |
//! | `linearize`          | coefficient bundle and advisory sign conditions       |
//! | `weights`            | density weights and their ODE residuals               |
//! | `cooling_closed_loop`| linear closed loop, decay margin vs fitted rate       |
//! | `cooling_nonlinear`  | physical simulation near the steady state             |
//! | `enantiomer_decay`   | decay envelope of the two-species closed loop         |
//! | `certificates`       | discrete operator, gain threshold scan, margins       |
//! | `sweep_kappa`        | gain sweep with fitted rates                          |
//!
//! A thin `crystab` binary exposes the same pipelines on scenario files; see
//! the [`cli`] module for the command set and the full document schema.

pub mod cli;
pub mod control;
pub mod equilibrium;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod linearization;
pub mod lyapunov;
pub mod piecewise;
pub mod quad;
pub mod rng;
pub mod scenario;
pub mod simulate;
pub mod verify;

pub use error::{ModelError, SimError};
pub use grid::Grid;
pub use piecewise::{PiecewiseFn, Poly};
pub use scenario::{parse_scenario, CoolingScenario, EnantiomerScenario, Scenario};
