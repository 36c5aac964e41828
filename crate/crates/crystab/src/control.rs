//! Stabilizing feedback laws and the parameter-condition certificate.
//!
//! The cooling law is linear in the state and cancels the sign-indefinite
//! coupling terms of the Lyapunov derivative. The enantiomer law is nonlinear:
//! it carries a `(1 + g_k v)` factor and quadratic profile terms.

use crate::equilibrium::EnantiomerSteadyState;
use crate::error::ModelError;
use crate::grid::Grid;
use crate::linearization::{enantiomer_alpha, LinearizedCoefficients};
use crate::lyapunov::DensityWeight;
use crate::quad::trapezoid_weights;
use crate::scenario::{EnantiomerScenario, SignCondition};
use std::fmt;

/// Linear-functional form of the cooling feedback: `u = coef_s * s + coef_w . w`.
///
/// Shared by the feedback evaluation, the simulator, and the discrete
/// closed-loop operator so they stay arithmetically identical.
pub fn cooling_feedback_coefficients(
    coeffs: &LinearizedCoefficients,
    rho: &DensityWeight,
    gamma: f64,
    kappa: f64,
    grid: &Grid,
) -> Result<(Vec<f64>, f64), ModelError> {
    if coeffs.b == 0.0 {
        return Err(ModelError::ZeroControlGain);
    }
    let n = grid.n_nodes();
    let q = trapezoid_weights(grid);
    let scale = -1.0 / (gamma * coeffs.b);
    let mut coef_w = Vec::with_capacity(n);
    for i in 0..n {
        let kernel =
            gamma * coeffs.theta[i] - rho.samples[i] * coeffs.g_c[i] * coeffs.nbar_prime[i];
        let mut c = q[i] * kernel;
        if i == n - 1 {
            c += gamma * coeffs.k1;
        }
        coef_w.push(scale * c);
    }
    Ok((coef_w, scale * kappa))
}

/// Cooling feedback `u = -(1/(gamma b)) (kappa s + ∫ (gamma theta - rho g_c nbar') w dx + gamma k1 w(l))`.
pub fn cooling_feedback(
    w: &[f64],
    s: f64,
    coeffs: &LinearizedCoefficients,
    rho: &DensityWeight,
    gamma: f64,
    kappa: f64,
    grid: &Grid,
) -> Result<f64, ModelError> {
    if w.len() != grid.n_nodes() {
        return Err(ModelError::LengthMismatch {
            got: w.len(),
            expected: grid.n_nodes(),
        });
    }
    let (coef_w, coef_s) = cooling_feedback_coefficients(coeffs, rho, gamma, kappa, grid)?;
    Ok(apply_feedback(&coef_w, coef_s, w, s))
}

pub(crate) fn apply_feedback(coef_w: &[f64], coef_s: f64, w: &[f64], s: f64) -> f64 {
    let mut u = coef_s * s;
    for (c, wi) in coef_w.iter().zip(w) {
        u += c * wi;
    }
    u
}

/// Outcome of the parameter-condition check for the cooling closed loop.
#[derive(Debug, Clone)]
pub struct StabilityCertificate {
    pub conditions: Vec<SignCondition>,
    /// the gain must strictly exceed this value
    pub kappa_threshold: f64,
    pub passed: bool,
}

impl fmt::Display for StabilityCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.conditions {
            let mark = if c.satisfied { "pass" } else { "FAIL" };
            writeln!(f, "[{mark}] {} ({})", c.name, c.detail)?;
        }
        write!(
            f,
            "kappa threshold = {:.6e}; conditions {}",
            self.kappa_threshold,
            if self.passed { "hold" } else { "violated" }
        )
    }
}

/// Evaluates the closed-loop parameter conditions
/// `rho_bar > 0`, `gamma > 0`, `kappa > rho_bar g(0) alpha^2 / 2 - gamma k0`,
/// `g(l) > 0`, `min h > 0`. The gain inequality is strict: at the threshold
/// the scalar dissipation coefficient is only nonnegative.
pub fn check_stability_conditions(
    coeffs: &LinearizedCoefficients,
    rho_bar: f64,
    gamma: f64,
    kappa: f64,
    g_ell: f64,
    h: &[f64],
) -> StabilityCertificate {
    let g0 = coeffs.g[0];
    let threshold = rho_bar * g0 * coeffs.alpha * coeffs.alpha / 2.0 - gamma * coeffs.k0;
    let h_min = h.iter().copied().fold(f64::INFINITY, f64::min);
    let conditions = vec![
        SignCondition {
            name: "rho_bar > 0",
            satisfied: rho_bar > 0.0,
            detail: format!("rho_bar = {rho_bar}"),
        },
        SignCondition {
            name: "gamma > 0",
            satisfied: gamma > 0.0,
            detail: format!("gamma = {gamma}"),
        },
        SignCondition {
            name: "kappa > rho_bar g(0) alpha^2 / 2 - gamma k0",
            satisfied: kappa > threshold,
            detail: format!("kappa = {kappa}, threshold = {threshold}"),
        },
        SignCondition {
            name: "g(l) > 0",
            satisfied: g_ell > 0.0,
            detail: format!("g(l) = {g_ell}"),
        },
        SignCondition {
            name: "min h > 0",
            satisfied: h_min > 0.0,
            detail: format!("min h = {h_min}"),
        },
    ];
    let passed = conditions.iter().all(|c| c.satisfied);
    StabilityCertificate {
        conditions,
        kappa_threshold: threshold,
        passed,
    }
}

/// Enantiomer feedback (nonlinear in the state):
///
/// ```text
/// u = -kappa v / 2 + (1/(2 gamma)) Σ_k { g_k ∫ (2 nbar_k + (h_k + 2 psi) w_k) w_k rho_k dx
///     - Gbar_k (1 + g_k v) rho_bar_k alpha_k^2 v + Gbar_k g_k rho_k(l) w_k(l)^2 }
/// ```
///
/// The boundary term is quadratic in `w_k(l)`; this is what the closed-loop
/// dissipation identity requires for the decay estimate to close.
pub fn enantiomer_feedback(
    w1: &[f64],
    w2: &[f64],
    v: f64,
    s: &EnantiomerScenario,
    ss: &EnantiomerSteadyState,
    rho1: &DensityWeight,
    rho2: &DensityWeight,
) -> f64 {
    let grid = &s.grid;
    let q = trapezoid_weights(grid);
    let n = grid.n_nodes();
    debug_assert_eq!(w1.len(), n);
    debug_assert_eq!(w2.len(), n);

    let mut sum = 0.0;
    for (k, (w, rho)) in [(w1, rho1), (w2, rho2)].into_iter().enumerate() {
        let sp = &s.species[k];
        let alpha = enantiomer_alpha(sp.b_slope, sp.g_slope, sp.bbar, sp.gbar);
        let nbar = &ss.nbar[k];
        let mut integral = 0.0;
        for i in 0..n {
            let psi_i = s.psi.value_at(grid.nodes()[i]);
            integral += q[i]
                * rho.samples[i]
                * w[i]
                * (2.0 * nbar[i] + (rho.h_samples[i] + 2.0 * psi_i) * w[i]);
        }
        sum += sp.g_slope * integral;
        sum -= sp.gbar * (1.0 + sp.g_slope * v) * rho.rho_bar * alpha * alpha * v;
        sum += sp.gbar * sp.g_slope * rho.samples[n - 1] * w[n - 1] * w[n - 1];
    }
    -s.kappa * v / 2.0 + sum / (2.0 * s.gamma)
}
