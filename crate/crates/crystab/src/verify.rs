//! Numerical certificates: weight-ODE residuals, steady-state residuals,
//! closed-loop dissipation identities, the discrete closed-loop operator with
//! its metric, the decay margin, and exponential-rate fitting.
//!
//! Stability is certified through the symmetric generalized eigenproblem
//! `(Q, M)` with `Q = -(A~' M + M A~)`, not through a nonsymmetric
//! eigensolver: the Lyapunov route matches the analytical argument and only
//! needs Cholesky plus a Jacobi sweep.

use crate::control::cooling_feedback_coefficients;
use crate::equilibrium::{CoolingSteadyState, EnantiomerSteadyState};
use crate::error::ModelError;
use crate::grid::Grid;
use crate::linalg::{min_generalized_eigenvalue, LinalgError, SquareMatrix};
use crate::linearization::LinearizedCoefficients;
use crate::lyapunov::DensityWeight;
use crate::piecewise::PiecewiseFn;
use crate::quad::{trapezoid, trapezoid_weights};
use crate::scenario::{eval_nucleation, CoolingScenario, EnantiomerScenario, EquilibriumGrowth};
use crate::simulate::SimTrace;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("trace too short: {0} records (need at least 5)")]
    TraceTooShort(usize),
    #[error("trace does not carry the requested rate column")]
    MissingRateColumn,
    #[error("fewer than 3 usable records in the fit window")]
    TooFewRecords,
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

// ---------------------------------------------------------------------------
// weight-ODE residuals
// ---------------------------------------------------------------------------

/// Max-norm residual of `(rho g)' + 2 v psi rho + h rho = 0` over the nodes.
///
/// The derivative `(rho g)'` is evaluated analytically from the closed-form
/// exponent (`rho' = -E' rho`), while the algebraic terms use the stored node
/// samples, so tampering with a sample is detected.
pub fn weight_ode_residual(
    rho: &DensityWeight,
    growth: &EquilibriumGrowth,
    psi: &PiecewiseFn,
    h: &PiecewiseFn,
    v: f64,
) -> f64 {
    let mut worst = 0.0f64;
    for (i, &x) in rho.grid().nodes().iter().enumerate() {
        let exact = rho.eval(x);
        let rho_g_prime = exact * (growth.g_prime(x) - rho.exponent_rate(x) * growth.g(x));
        let residual = rho_g_prime + (2.0 * v * psi.value_at(x) + h.value_at(x)) * rho.samples[i];
        worst = worst.max(residual.abs());
    }
    worst
}

/// Enantiomer variant: residual of `Gbar rho_k' + (2 psi + h_k) rho_k = 0`.
pub fn enantiomer_weight_ode_residual(
    rho: &DensityWeight,
    gbar: f64,
    psi: &PiecewiseFn,
    h: &PiecewiseFn,
) -> f64 {
    let mut worst = 0.0f64;
    for (i, &x) in rho.grid().nodes().iter().enumerate() {
        let rho_prime = -rho.exponent_rate(x) * rho.eval(x);
        let residual = gbar * rho_prime + (2.0 * psi.value_at(x) + h.value_at(x)) * rho.samples[i];
        worst = worst.max(residual.abs());
    }
    worst
}

// ---------------------------------------------------------------------------
// steady-state residuals
// ---------------------------------------------------------------------------

/// Residuals of the steady state plugged into the model equations.
#[derive(Debug, Clone, Copy)]
pub struct SteadyResidual {
    /// max over nodes of the transport-equation residual
    pub pde_max: f64,
    /// boundary-condition residual at `x = 0`
    pub boundary: f64,
    /// mass-balance (scalar) residual
    pub scalar: f64,
}

impl SteadyResidual {
    pub fn max(&self) -> f64 {
        self.pde_max.max(self.boundary).max(self.scalar.abs())
    }
}

/// Cooling steady-state residual, using the closed-form profile derivative.
pub fn steady_residual(s: &CoolingScenario, ss: &CoolingSteadyState) -> SteadyResidual {
    let k = &s.kinetics;
    let growth = ss.growth();
    let nodes = s.grid.nodes();
    let mut pde_max = 0.0f64;
    for (i, &x) in nodes.iter().enumerate() {
        let r = -growth.g(x) * ss.nbar_prime[i] + k.v * k.psi.value_at(x) * ss.nbar[i];
        pde_max = pde_max.max(r.abs());
    }
    let (b_rate, _) = eval_nucleation(k, ss.cbar);
    let boundary = (ss.nbar[0] - b_rate / growth.g(0.0)).abs();

    let moment: Vec<f64> = nodes
        .iter()
        .zip(&ss.nbar)
        .map(|(&x, &n)| x * x * x * n)
        .collect();
    let eps = 1.0 - k.kv * trapezoid(&moment, &s.grid);
    let removal: Vec<f64> = nodes
        .iter()
        .zip(&ss.nbar)
        .map(|(&x, &n)| k.phi.value_at(x) * n)
        .collect();
    let scalar = (k.rho0 - ss.cbar) * k.v
        + k.v / eps * (ss.ubar_f - k.rho0 - k.rho0 * k.kv * trapezoid(&removal, &s.grid));
    SteadyResidual {
        pde_max,
        boundary,
        scalar,
    }
}

/// Enantiomer steady-state residual (both species).
pub fn enantiomer_steady_residual(
    s: &EnantiomerScenario,
    ss: &EnantiomerSteadyState,
) -> SteadyResidual {
    let nodes = s.grid.nodes();
    let mut pde_max = 0.0f64;
    let mut boundary = 0.0f64;
    for k in 0..2 {
        let sp = &s.species[k];
        for (i, &x) in nodes.iter().enumerate() {
            let prime = ss.profile(k).eval_prime(x);
            let r = -sp.gbar * prime + s.psi.value_at(x) * ss.nbar[k][i];
            pde_max = pde_max.max(r.abs());
        }
        boundary = boundary.max((sp.gbar * ss.nbar[k][0] - sp.bbar).abs());
    }
    SteadyResidual {
        pde_max,
        boundary,
        scalar: 0.0,
    }
}

// ---------------------------------------------------------------------------
// closed-loop rate identity
// ---------------------------------------------------------------------------

/// Which algebraic form of the cooling dissipation identity to test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateForm {
    /// quadratic form in the deviation profile `w`
    Deviation,
    /// quadratic form in the shifted profile `eta = w - alpha s`
    Shifted,
}

/// Max relative error between centered differences of the recorded Lyapunov
/// values and the recorded closed-form rate, over the middle 80% of the
/// window. A zero trajectory reports zero error.
pub fn closed_loop_rate_identity(
    times: &[f64],
    values: &[f64],
    rhs: &[f64],
) -> Result<f64, VerifyError> {
    let n = times.len();
    if n < 5 {
        return Err(VerifyError::TraceTooShort(n));
    }
    assert_eq!(values.len(), n);
    assert_eq!(rhs.len(), n);
    let scale = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let floor = 1e-12 * scale.max(f64::MIN_POSITIVE);
    let margin = (n / 10).max(1);
    let mut worst = 0.0f64;
    for j in margin..n - margin {
        let dv = (values[j + 1] - values[j - 1]) / (times[j + 1] - times[j - 1]);
        let r = rhs[j];
        if dv.abs() <= floor && r.abs() <= floor {
            continue;
        }
        worst = worst.max((dv - r).abs() / r.abs().max(floor));
    }
    Ok(worst)
}

/// Convenience wrapper reading the rate column off a recorded trace.
pub fn trace_rate_identity(trace: &SimTrace, form: RateForm) -> Result<f64, VerifyError> {
    let rhs = match form {
        RateForm::Deviation => trace.rate_rhs.as_ref(),
        RateForm::Shifted => trace.rate_rhs_eta.as_ref(),
    }
    .ok_or(VerifyError::MissingRateColumn)?;
    closed_loop_rate_identity(&trace.times, &trace.lyapunov, rhs)
}

// ---------------------------------------------------------------------------
// discrete closed-loop operator
// ---------------------------------------------------------------------------

/// Discrete realization of the closed-loop generator on stacked
/// `(eta samples, s)`, with the metric matrix of the shifted inner product.
///
/// Row 0 of the generator is zero: it enforces `eta(0) = 0`, which the
/// continuous domain requires and the simulator imposes strongly.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub matrix: SquareMatrix,
    pub metric: SquareMatrix,
    pub n_nodes: usize,
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.n_nodes + 1
    }

    /// One classic RK4 step of `xi' = A~ xi`.
    pub fn rk4_step(&self, state: &[f64], dt: f64) -> Vec<f64> {
        let a = &self.matrix;
        let k1 = a.matvec(state);
        let mut tmp: Vec<f64> = state
            .iter()
            .zip(&k1)
            .map(|(y, k)| y + 0.5 * dt * k)
            .collect();
        let k2 = a.matvec(&tmp);
        for (i, v) in tmp.iter_mut().enumerate() {
            *v = state[i] + 0.5 * dt * k2[i];
        }
        let k3 = a.matvec(&tmp);
        for (i, v) in tmp.iter_mut().enumerate() {
            *v = state[i] + dt * k3[i];
        }
        let k4 = a.matvec(&tmp);
        state
            .iter()
            .enumerate()
            .map(|(i, y)| y + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    }
}

/// Assembles the discrete closed-loop generator `A~ = A + B K` with the same
/// upwind/trapezoid stencils as the simulator, plus the metric `M` realizing
/// the shifted-space norm on the stacked samples.
pub fn assemble_closed_loop(
    coeffs: &LinearizedCoefficients,
    rho: &DensityWeight,
    gamma: f64,
    kappa: f64,
    grid: &Grid,
) -> Result<DiscreteOperator, ModelError> {
    let n = grid.n_nodes();
    let m = n + 1;
    let s_col = n;
    let dx = grid.dx();
    let q = trapezoid_weights(grid);
    let nodes = grid.nodes();

    let (coef_w, coef_s) = cooling_feedback_coefficients(coeffs, rho, gamma, kappa, grid)?;
    let sum_cw: f64 = coef_w.iter().sum();
    // the feedback as a functional of (eta, s)
    let k_s = coef_s + coeffs.alpha * sum_cw;

    let mut a = SquareMatrix::zeros(m);
    let theta_q: Vec<f64> = coeffs.theta.iter().zip(&q).map(|(t, qi)| t * qi).collect();

    for i in 1..n {
        let vpsi = coeffs.v * coeffs.psi.value_at(nodes[i]);
        a.add_to(i, i - 1, coeffs.g[i] / dx);
        a.add_to(i, i, -coeffs.g[i] / dx + vpsi);
        a.add_to(i, n - 1, -coeffs.alpha * coeffs.k1);
        for j in 0..n {
            a.add_to(i, j, -coeffs.alpha * theta_q[j]);
        }
        a.add_to(
            i,
            s_col,
            coeffs.alpha * coeffs.k2 + coeffs.alpha * vpsi - coeffs.g_c[i] * coeffs.nbar_prime[i],
        );
        // B K with B_eta = -alpha b
        let b_eta = -coeffs.alpha * coeffs.b;
        for j in 0..n {
            a.add_to(i, j, b_eta * coef_w[j]);
        }
        a.add_to(i, s_col, b_eta * k_s);
    }
    // scalar row
    a.add_to(s_col, s_col, -coeffs.k2 + coeffs.b * k_s);
    a.add_to(s_col, n - 1, coeffs.k1);
    for j in 0..n {
        a.add_to(s_col, j, theta_q[j] + coeffs.b * coef_w[j]);
    }

    // metric of the shifted inner product, exactly symmetric as assembled
    let mut metric = SquareMatrix::zeros(m);
    let mut trace_qrho = 0.0;
    for i in 0..n {
        let w = q[i] * rho.samples[i];
        metric.set(i, i, w);
        let cross = coeffs.alpha * w;
        metric.set(i, s_col, cross);
        metric.set(s_col, i, cross);
        trace_qrho += w;
    }
    metric.set(
        s_col,
        s_col,
        gamma + coeffs.alpha * coeffs.alpha * trace_qrho,
    );

    Ok(DiscreteOperator {
        matrix: a,
        metric,
        n_nodes: n,
    })
}

/// Decay margin: smallest generalized eigenvalue of `(Q, M)` with
/// `Q = -(A~' M + M A~)`, restricted to the invariant subspace `eta(0) = 0`
/// (node 0 carries no dynamics, so the unconstrained problem would see
/// spurious directions). A positive margin certifies `dV/dt <= -delta V`
/// along discrete trajectories, i.e. a decay rate `delta / 2` in the norm.
pub fn decay_margin(op: &DiscreteOperator) -> Result<f64, VerifyError> {
    let m = op.dim();
    let c = op.metric.matmul(&op.matrix);
    let mut q = SquareMatrix::zeros(m);
    for i in 0..m {
        for j in i..m {
            let val = -(c.get(i, j) + c.get(j, i));
            q.set(i, j, val);
            q.set(j, i, val);
        }
    }
    debug_assert!(q.is_symmetric() && op.metric.is_symmetric());
    let q_r = q.without_index(0);
    let m_r = op.metric.without_index(0);
    Ok(min_generalized_eigenvalue(&q_r, &m_r)?)
}

// ---------------------------------------------------------------------------
// decay fit
// ---------------------------------------------------------------------------

/// Exponential decay rate fitted from a trace.
#[derive(Debug, Clone, Copy)]
pub struct DecayFit {
    /// negated least-squares slope of `log(value)` vs time
    pub rate: f64,
    pub r_squared: f64,
    /// time window actually used
    pub window: (f64, f64),
}

/// Least-squares fit of `log(values)` against time. The window excludes the
/// first and last 10% of records (transients and floating-point floor) and
/// any record below `10 eps` times the initial value.
pub fn fit_decay(times: &[f64], values: &[f64]) -> Result<DecayFit, VerifyError> {
    assert_eq!(times.len(), values.len());
    let n = times.len();
    if n < 3 {
        return Err(VerifyError::TooFewRecords);
    }
    let skip = n / 10;
    let cutoff = 10.0 * f64::EPSILON * values[0].abs();
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .skip(skip)
        .take(n - 2 * skip)
        .filter(|(_, v)| **v > cutoff)
        .map(|(t, v)| (*t, v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(VerifyError::TooFewRecords);
    }
    let m = pts.len() as f64;
    let mean_t = pts.iter().map(|(t, _)| t).sum::<f64>() / m;
    let mean_y = pts.iter().map(|(_, y)| y).sum::<f64>() / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for (t, y) in &pts {
        let dt = t - mean_t;
        let dy = y - mean_y;
        sxx += dt * dt;
        sxy += dt * dy;
        syy += dy * dy;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Ok(DecayFit {
        rate: -slope,
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
    })
}
