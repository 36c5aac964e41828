//! Constant-input steady states of both models, and the void fraction.
//!
//! The cooling steady state is parametrized by the equilibrium concentration;
//! the matching feed concentration is explicit. The inverse map (prescribed
//! feed) is a bracketed bisection on the residual, which is implicit through
//! the void fraction. Profile exponents are integrated exactly per piece:
//! the integrand `psi / G(·, cbar)` is a polynomial over an affine function.

use crate::error::ModelError;
use crate::grid::Grid;
use crate::piecewise::PiecewiseFn;
use crate::quad::trapezoid;
use crate::scenario::{
    eval_nucleation, CoolingScenario, EnantiomerScenario, EquilibriumGrowth, EquilibriumTarget,
};

/// Cooling steady state `(nbar, cbar, ubar_f)` with derived scalars.
#[derive(Debug, Clone)]
pub struct CoolingSteadyState {
    pub cbar: f64,
    pub ubar_f: f64,
    /// void fraction of `nbar`, in `(0, 1]`
    pub eps_bar: f64,
    /// `ubar_f - rho0 - rho0 k_v ∫ phi nbar`
    pub beta: f64,
    pub nbar: Vec<f64>,
    /// spatial derivative from the closed-form identity `nbar' = nbar v psi / g`
    pub nbar_prime: Vec<f64>,
    profile: CoolingSteadyProfile,
}

/// Closed-form evaluator for `nbar` at arbitrary coordinates.
#[derive(Debug, Clone)]
pub struct CoolingSteadyProfile {
    n0: f64,
    v: f64,
    psi: PiecewiseFn,
    growth: EquilibriumGrowth,
}

impl CoolingSteadyProfile {
    pub fn eval(&self, x: f64) -> f64 {
        let exponent = self.psi.integral_over_linear(
            0.0,
            x,
            self.growth.scale,
            self.growth.scale * self.growth.ag,
        );
        self.n0 * (self.v * exponent).exp()
    }

    pub fn eval_prime(&self, x: f64) -> f64 {
        self.eval(x) * self.v * self.psi.value_at(x) / self.growth.g(x)
    }
}

impl CoolingSteadyState {
    pub fn profile(&self) -> &CoolingSteadyProfile {
        &self.profile
    }

    pub fn growth(&self) -> &EquilibriumGrowth {
        &self.profile.growth
    }
}

/// Void fraction `eps = 1 - k_v ∫ x^3 n(x) dx` (composite trapezoid).
/// Errors when the result is nonpositive, which the mass balance forbids.
pub fn void_fraction(n: &[f64], kv: f64, grid: &Grid) -> Result<f64, ModelError> {
    if n.len() != grid.n_nodes() {
        return Err(ModelError::LengthMismatch {
            got: n.len(),
            expected: grid.n_nodes(),
        });
    }
    let moment: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(n)
        .map(|(&x, &ni)| x * x * x * ni)
        .collect();
    let eps = 1.0 - kv * trapezoid(&moment, grid);
    if eps <= 0.0 {
        return Err(ModelError::VoidFractionExhausted { eps });
    }
    Ok(eps)
}

/// Steady state for a prescribed equilibrium concentration (or prescribed
/// feed, in which case the concentration is solved for first).
pub fn cooling_steady(s: &CoolingScenario) -> Result<CoolingSteadyState, ModelError> {
    let cbar = match s.target {
        EquilibriumTarget::Concentration(c) => c,
        EquilibriumTarget::Feed(uf) => cbar_from_feed(s, uf)?,
    };
    steady_at_concentration(s, cbar)
}

fn steady_at_concentration(
    s: &CoolingScenario,
    cbar: f64,
) -> Result<CoolingSteadyState, ModelError> {
    let k = &s.kinetics;
    let growth = k.growth_at(cbar)?;
    let (b_rate, _) = eval_nucleation(k, cbar);
    let n0 = b_rate / growth.g(0.0);
    let profile = CoolingSteadyProfile {
        n0,
        v: k.v,
        psi: k.psi.clone(),
        growth,
    };
    let nbar: Vec<f64> = s.grid.nodes().iter().map(|&x| profile.eval(x)).collect();
    let nbar_prime: Vec<f64> = s
        .grid
        .nodes()
        .iter()
        .zip(&nbar)
        .map(|(&x, &n)| n * k.v * k.psi.value_at(x) / growth.g(x))
        .collect();
    let eps_bar = void_fraction(&nbar, k.kv, &s.grid)?;
    let phi_nbar: Vec<f64> = s
        .grid
        .nodes()
        .iter()
        .zip(&nbar)
        .map(|(&x, &n)| k.phi.value_at(x) * n)
        .collect();
    let removal = trapezoid(&phi_nbar, &s.grid);
    let ubar_f = k.rho0 + eps_bar * (cbar - k.rho0) + k.rho0 * k.kv * removal;
    let beta = ubar_f - k.rho0 - k.rho0 * k.kv * removal;
    Ok(CoolingSteadyState {
        cbar,
        ubar_f,
        eps_bar,
        beta,
        nbar,
        nbar_prime,
        profile,
    })
}

/// Residual whose root is the equilibrium concentration for a given feed.
/// `None` when the candidate concentration gives an unphysical void fraction.
fn feed_residual(s: &CoolingScenario, uf: f64, c: f64) -> Option<f64> {
    let k = &s.kinetics;
    let growth = k.growth_at(c).ok()?;
    let (b_rate, _) = eval_nucleation(k, c);
    let n0 = b_rate / growth.g(0.0);
    let profile = CoolingSteadyProfile {
        n0,
        v: k.v,
        psi: k.psi.clone(),
        growth,
    };
    let nbar: Vec<f64> = s.grid.nodes().iter().map(|&x| profile.eval(x)).collect();
    let eps = void_fraction(&nbar, k.kv, &s.grid).ok()?;
    let phi_nbar: Vec<f64> = s
        .grid
        .nodes()
        .iter()
        .zip(&nbar)
        .map(|(&x, &n)| k.phi.value_at(x) * n)
        .collect();
    let removal = trapezoid(&phi_nbar, &s.grid);
    Some(c - k.rho0 - (uf - k.rho0 - k.rho0 * k.kv * removal) / eps)
}

/// Recovers the equilibrium concentration from a prescribed feed by scanning
/// `(c_sat, rho0]` for sign changes and bisecting. Reports multiplicity
/// instead of guessing when several sign changes are found.
pub fn cbar_from_feed(s: &CoolingScenario, uf: f64) -> Result<f64, ModelError> {
    let k = &s.kinetics;
    let lo = k.c_sat + 1e-6 * (k.rho0 - k.c_sat).max(1e-6);
    let hi = k.rho0;
    if hi <= lo {
        return Err(ModelError::NoBracket { lo, hi });
    }
    const SCAN: usize = 256;
    let mut brackets = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=SCAN {
        let c = lo + (hi - lo) * i as f64 / SCAN as f64;
        let r = feed_residual(s, uf, c);
        if let Some(r) = r {
            if let Some((pc, pr)) = prev {
                if pr == 0.0 {
                    brackets.push((pc, pc));
                } else if pr * r < 0.0 {
                    brackets.push((pc, c));
                }
            }
            prev = Some((c, r));
        } else {
            prev = None;
        }
    }
    if let Some((pc, pr)) = prev {
        if pr == 0.0 {
            brackets.push((pc, pc));
        }
    }
    match brackets.len() {
        0 => Err(ModelError::NoBracket { lo, hi }),
        1 => {
            let (mut a, mut b) = brackets[0];
            if a == b {
                return Ok(a);
            }
            let mut ra = feed_residual(s, uf, a).ok_or(ModelError::NoBracket { lo, hi })?;
            for _ in 0..200 {
                if b - a <= 1e-10 {
                    break;
                }
                let mid = 0.5 * (a + b);
                let rm = feed_residual(s, uf, mid).ok_or(ModelError::NoBracket { lo, hi })?;
                if rm == 0.0 {
                    return Ok(mid);
                }
                if ra * rm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    ra = rm;
                }
            }
            Ok(0.5 * (a + b))
        }
        n => Err(ModelError::MultipleRoots(n)),
    }
}

/// Enantiomer equilibrium profiles `nbar_k = (Bbar_k/Gbar_k) exp(Psi(x)/Gbar_k)`.
#[derive(Debug, Clone)]
pub struct EnantiomerSteadyState {
    pub nbar: [Vec<f64>; 2],
    profiles: [EnantiomerSteadyProfile; 2],
}

#[derive(Debug, Clone)]
pub struct EnantiomerSteadyProfile {
    n0: f64,
    gbar: f64,
    psi: PiecewiseFn,
}

impl EnantiomerSteadyProfile {
    pub fn eval(&self, x: f64) -> f64 {
        self.n0 * (self.psi.integral(0.0, x) / self.gbar).exp()
    }

    pub fn eval_prime(&self, x: f64) -> f64 {
        self.eval(x) * self.psi.value_at(x) / self.gbar
    }
}

impl EnantiomerSteadyState {
    pub fn profile(&self, k: usize) -> &EnantiomerSteadyProfile {
        &self.profiles[k]
    }
}

pub fn enantiomer_steady(s: &EnantiomerScenario) -> EnantiomerSteadyState {
    let build = |k: usize| -> (Vec<f64>, EnantiomerSteadyProfile) {
        let sp = &s.species[k];
        let profile = EnantiomerSteadyProfile {
            n0: sp.bbar / sp.gbar,
            gbar: sp.gbar,
            psi: s.psi.clone(),
        };
        let samples = s.grid.nodes().iter().map(|&x| profile.eval(x)).collect();
        (samples, profile)
    };
    let (n1, p1) = build(0);
    let (n2, p2) = build(1);
    EnantiomerSteadyState {
        nbar: [n1, n2],
        profiles: [p1, p2],
    }
}
