//! Density weights and the Lyapunov functionals they induce.
//!
//! Weights are evaluated from their closed-form exponentials, never by
//! integrating the defining ODE forward; the ODE survives as a residual check
//! in `verify`. State-dependent quadratic forms use the composite trapezoid on
//! grid nodes; the weight exponent uses 5-point Gauss panels split at
//! breakpoints (the integrand is known analytically).

use crate::error::ModelError;
use crate::grid::Grid;
use crate::linearization::LinearizedCoefficients;
use crate::piecewise::PiecewiseFn;
use crate::quad::{gauss5_split, trapezoid_weights};
use crate::scenario::EquilibriumGrowth;

#[derive(Debug, Clone)]
enum ExponentIntegrand {
    /// constant weight (diagnostics and decoupled test cases)
    Uniform,
    /// `(2 v psi + g' + h) / g`
    Cooling {
        v: f64,
        psi: PiecewiseFn,
        growth: EquilibriumGrowth,
        h: PiecewiseFn,
    },
    /// `(2 psi + h) / Gbar`
    Enantiomer {
        gbar: f64,
        psi: PiecewiseFn,
        h: PiecewiseFn,
    },
}

impl ExponentIntegrand {
    fn eval(&self, x: f64) -> f64 {
        match self {
            ExponentIntegrand::Uniform => 0.0,
            ExponentIntegrand::Cooling { v, psi, growth, h } => {
                (2.0 * v * psi.value_at(x) + growth.g_prime(x) + h.value_at(x)) / growth.g(x)
            }
            ExponentIntegrand::Enantiomer { gbar, psi, h } => {
                (2.0 * psi.value_at(x) + h.value_at(x)) / gbar
            }
        }
    }

    fn splits(&self) -> Vec<f64> {
        let mut s = match self {
            ExponentIntegrand::Uniform => Vec::new(),
            ExponentIntegrand::Cooling { psi, h, .. }
            | ExponentIntegrand::Enantiomer { psi, h, .. } => {
                let mut s = psi.breakpoints().to_vec();
                s.extend_from_slice(h.breakpoints());
                s
            }
        };
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s.dedup();
        s
    }
}

/// Positive weight `rho(x) = rho_bar exp(-E(x))` with enough exponent data to
/// evaluate it anywhere, plus its generator `h` sampled on the nodes.
#[derive(Debug, Clone)]
pub struct DensityWeight {
    /// node samples of `rho` (the quadratic forms act on these)
    pub samples: Vec<f64>,
    /// anchor `rho(0)`
    pub rho_bar: f64,
    /// node samples of the generator `h`
    pub h_samples: Vec<f64>,
    grid: Grid,
    /// cumulative exponent `E(x_i)`
    cumulative: Vec<f64>,
    integrand: ExponentIntegrand,
}

impl DensityWeight {
    fn build(
        rho_bar: f64,
        h: Option<&PiecewiseFn>,
        grid: &Grid,
        integrand: ExponentIntegrand,
    ) -> Self {
        let splits = integrand.splits();
        let nodes = grid.nodes();
        let mut cumulative = Vec::with_capacity(nodes.len());
        cumulative.push(0.0);
        let mut acc = 0.0;
        for win in nodes.windows(2) {
            acc += match integrand {
                ExponentIntegrand::Enantiomer {
                    gbar,
                    ref psi,
                    ref h,
                } => (2.0 * psi.integral(win[0], win[1]) + h.integral(win[0], win[1])) / gbar,
                _ => gauss5_split(|y| integrand.eval(y), win[0], win[1], &splits),
            };
            cumulative.push(acc);
        }
        let samples: Vec<f64> = cumulative.iter().map(|e| rho_bar * (-e).exp()).collect();
        let h_samples = match h {
            Some(h) => nodes.iter().map(|&x| h.value_at(x)).collect(),
            None => vec![0.0; nodes.len()],
        };
        Self {
            samples,
            rho_bar,
            h_samples,
            grid: grid.clone(),
            cumulative,
            integrand,
        }
    }

    /// Constant weight `rho ≡ value` (no generator).
    pub fn uniform(value: f64, grid: &Grid) -> Self {
        let n = grid.n_nodes();
        Self {
            samples: vec![value; n],
            rho_bar: value,
            h_samples: vec![0.0; n],
            grid: grid.clone(),
            cumulative: vec![0.0; n],
            integrand: ExponentIntegrand::Uniform,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Closed-form value at an arbitrary coordinate.
    pub fn eval(&self, x: f64) -> f64 {
        let exponent = match &self.integrand {
            ExponentIntegrand::Uniform => 0.0,
            ExponentIntegrand::Enantiomer { gbar, psi, h } => {
                (2.0 * psi.integral(0.0, x) + h.integral(0.0, x)) / gbar
            }
            cooling => {
                let dx = self.grid.dx();
                let cell = ((x / dx) as usize).min(self.grid.n_cells() - 1);
                let x_cell = self.grid.nodes()[cell];
                self.cumulative[cell]
                    + gauss5_split(|y| cooling.eval(y), x_cell, x, &cooling.splits())
            }
        };
        self.rho_bar * (-exponent).exp()
    }

    /// Exponent derivative `E'(x)`, i.e. minus the log-derivative of `rho`.
    pub fn exponent_rate(&self, x: f64) -> f64 {
        self.integrand.eval(x)
    }
}

/// Cooling weight `rho = rho_bar exp{-∫ (2 v psi + g' + h)/g}` (Gauss panels
/// split at breakpoints). `g` comes from the closed-form growth data in the
/// coefficient bundle.
pub fn cooling_weight(
    coeffs: &LinearizedCoefficients,
    v: f64,
    h: &PiecewiseFn,
    rho_bar: f64,
    grid: &Grid,
) -> Result<DensityWeight, ModelError> {
    if !(rho_bar > 0.0) {
        return Err(ModelError::NonpositiveParameter {
            name: "rho_bar",
            value: rho_bar,
        });
    }
    let h_min = h.min_on_domain();
    if !(h_min > 0.0) {
        return Err(ModelError::NonpositiveParameter {
            name: "h",
            value: h_min,
        });
    }
    let growth = coeffs.growth;
    // g is affine, so positivity at both endpoints is positivity everywhere
    for x in [0.0, grid.length()] {
        let gx = growth.g(x);
        if !(gx > 0.0) {
            return Err(ModelError::NonpositiveSpeed { x, value: gx });
        }
    }
    let integrand = ExponentIntegrand::Cooling {
        v,
        psi: coeffs.psi.clone(),
        growth,
        h: h.clone(),
    };
    Ok(DensityWeight::build(rho_bar, Some(h), grid, integrand))
}

/// Enantiomer weight `rho_k = rho_bar_k exp{-(1/Gbar_k) ∫ (2 psi + h_k)}`,
/// exact per polynomial piece.
pub fn enantiomer_weight(
    gbar: f64,
    psi: &PiecewiseFn,
    h: &PiecewiseFn,
    rho_bar: f64,
    grid: &Grid,
) -> Result<DensityWeight, ModelError> {
    if !(gbar > 0.0) {
        return Err(ModelError::NonpositiveParameter {
            name: "gbar",
            value: gbar,
        });
    }
    if !(rho_bar > 0.0) {
        return Err(ModelError::NonpositiveParameter {
            name: "rho_bar",
            value: rho_bar,
        });
    }
    let h_min = h.min_on_domain();
    if !(h_min > 0.0) {
        return Err(ModelError::NonpositiveParameter {
            name: "h",
            value: h_min,
        });
    }
    let integrand = ExponentIntegrand::Enantiomer {
        gbar,
        psi: psi.clone(),
        h: h.clone(),
    };
    Ok(DensityWeight::build(rho_bar, Some(h), grid, integrand))
}

/// `V = 1/2 ∫ rho w^2 dx + (gamma/2) s^2` (trapezoid).
pub fn lyapunov_v(w: &[f64], s: f64, rho: &DensityWeight, gamma: f64) -> f64 {
    assert_eq!(w.len(), rho.samples.len(), "profile/weight length mismatch");
    let q = trapezoid_weights(&rho.grid);
    let mut sum = 0.0;
    for i in 0..w.len() {
        sum += q[i] * rho.samples[i] * w[i] * w[i];
    }
    0.5 * sum + 0.5 * gamma * s * s
}

/// `W = 1/2 Σ_k ∫ rho_k w_k^2 dx + (gamma/2) v^2`.
pub fn lyapunov_w(
    w1: &[f64],
    w2: &[f64],
    v: f64,
    rho1: &DensityWeight,
    rho2: &DensityWeight,
    gamma: f64,
) -> f64 {
    lyapunov_v(w1, 0.0, rho1, gamma) + lyapunov_v(w2, 0.0, rho2, gamma) + 0.5 * gamma * v * v
}

/// Weighted L2 norm of a profile, `sqrt(∫ rho w^2)`.
pub fn weighted_norm(w: &[f64], rho: &DensityWeight) -> f64 {
    (2.0 * lyapunov_v(w, 0.0, rho, 1.0)).sqrt()
}

/// Element of the shifted state space: a profile with zero boundary value and
/// a scalar.
#[derive(Debug, Clone)]
pub struct HState {
    pub eta: Vec<f64>,
    pub s: f64,
}

impl HState {
    /// Requires `eta(0) = 0` exactly.
    pub fn new(eta: Vec<f64>, s: f64) -> Result<Self, ModelError> {
        if eta.first().copied() != Some(0.0) {
            return Err(ModelError::BoundaryMismatch {
                constraint: "eta(0) = 0",
            });
        }
        Ok(Self { eta, s })
    }

    /// Shifts a boundary-coupled profile: `eta = w - alpha s`, forcing the
    /// boundary node to exact zero.
    pub fn from_deviation(w: &[f64], s: f64, alpha: f64) -> Self {
        let mut eta: Vec<f64> = w.iter().map(|&wi| wi - alpha * s).collect();
        eta[0] = 0.0;
        Self { eta, s }
    }

    /// Maps back to the boundary-coupled profile `w = eta + alpha s`.
    pub fn to_deviation(&self, alpha: f64) -> Vec<f64> {
        self.eta.iter().map(|&e| e + alpha * self.s).collect()
    }
}

/// Inner product of the shifted space:
/// `<a, b> = ∫ (eta_a + alpha s_a)(eta_b + alpha s_b) rho dx + gamma s_a s_b`.
pub fn h_inner(
    a: &HState,
    b: &HState,
    rho: &DensityWeight,
    gamma: f64,
    alpha: f64,
) -> Result<f64, ModelError> {
    let n = rho.samples.len();
    if a.eta.len() != n || b.eta.len() != n {
        return Err(ModelError::LengthMismatch {
            got: a.eta.len().max(b.eta.len()),
            expected: n,
        });
    }
    let q = trapezoid_weights(&rho.grid);
    let mut sum = 0.0;
    for i in 0..n {
        sum += q[i] * rho.samples[i] * (a.eta[i] + alpha * a.s) * (b.eta[i] + alpha * b.s);
    }
    Ok(sum + gamma * a.s * b.s)
}
