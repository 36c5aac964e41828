//! Time-domain simulation of the four systems: linearized cooling, nonlinear
//! cooling, the quasilinear enantiomer deviation system, and its nonlinear
//! variant.
//!
//! Space is discretized by first-order upwind differences (all advection
//! speeds are positive), time by the classic explicit 4-stage Runge–Kutta
//! scheme with a CFL-bounded step. Boundary conditions are imposed strongly at
//! node 0 after every stage. Integral terms reuse the trapezoid rule of the
//! Lyapunov functionals, so the recorded dissipation identities compare
//! like-for-like discretizations.

use crate::control::{apply_feedback, cooling_feedback_coefficients, enantiomer_feedback};
use crate::equilibrium::{CoolingSteadyState, EnantiomerSteadyState};
use crate::error::{ModelError, SimError};
use crate::grid::Grid;
use crate::linearization::{enantiomer_alpha, linearize_cooling, LinearizedCoefficients};
use crate::lyapunov::{
    cooling_weight, enantiomer_weight, lyapunov_v, lyapunov_w, weighted_norm, DensityWeight,
};
use crate::quad::trapezoid_weights;
use crate::rng::SplitMix64;
use crate::scenario::{eval_nucleation, CoolingScenario, EnantiomerScenario};

/// Cooling state: deviation variables `(w, s)` for the linear system, physical
/// variables `(n, c)` for the nonlinear one.
#[derive(Debug, Clone)]
pub struct CoolingState {
    pub w: Vec<f64>,
    pub s: f64,
    pub t: f64,
}

/// Enantiomer deviation state `(w_1, w_2, v)`.
#[derive(Debug, Clone)]
pub struct EnantiomerState {
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub v: f64,
    pub t: f64,
}

/// Open loop applies a constant control source; closed loop applies the
/// model's feedback law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControlMode {
    Open { source: f64 },
    Closed,
}

/// Enantiomer model variant: the quasilinear system keeps the `(1 + g_k v)`
/// advection factor with forcing `-g_k nbar_k v`; the nonlinear variant uses
/// the affine kinetics family exactly, which adds a `psi` factor to the
/// forcing and a `1/(1 + g_k v)` factor to the boundary value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnantiomerMode {
    Quasilinear,
    Nonlinear,
}

/// Time-stepping parameters.
#[derive(Debug, Clone)]
pub struct TimeStepSpec {
    pub t_end: f64,
    /// Courant number in (0, 1]
    pub cfl: f64,
    /// steps between trace records
    pub output_stride: usize,
    pub control: ControlMode,
    /// record the closed-form dissipation rate alongside the trace
    pub record_rate_rhs: bool,
    /// take a profile snapshot at the first record at or after each time
    pub snapshot_times: Vec<f64>,
}

impl TimeStepSpec {
    pub fn new(t_end: f64) -> Result<Self, SimError> {
        if !(t_end > 0.0) || !t_end.is_finite() {
            return Err(SimError::BadSpec(format!(
                "t_end must be positive, got {t_end}"
            )));
        }
        Ok(Self {
            t_end,
            cfl: 0.5,
            output_stride: 1,
            control: ControlMode::Open { source: 0.0 },
            record_rate_rhs: false,
            snapshot_times: Vec::new(),
        })
    }

    pub fn with_cfl(mut self, cfl: f64) -> Result<Self, SimError> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(SimError::BadSpec(format!(
                "cfl must lie in (0, 1], got {cfl}"
            )));
        }
        self.cfl = cfl;
        Ok(self)
    }

    pub fn with_stride(mut self, stride: usize) -> Result<Self, SimError> {
        if stride == 0 {
            return Err(SimError::BadSpec("output stride must be at least 1".into()));
        }
        self.output_stride = stride;
        Ok(self)
    }

    pub fn closed(mut self) -> Self {
        self.control = ControlMode::Closed;
        self
    }

    pub fn open(mut self, source: f64) -> Self {
        self.control = ControlMode::Open { source };
        self
    }

    pub fn recording_rate(mut self) -> Self {
        self.record_rate_rhs = true;
        self
    }

    pub fn with_snapshots(mut self, mut times: Vec<f64>) -> Self {
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        self.snapshot_times = times;
        self
    }
}

/// Profile snapshot taken at a record time.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub scalar: f64,
    pub profiles: Vec<Vec<f64>>,
}

/// Time series produced by a simulation run.
#[derive(Debug, Clone, Default)]
pub struct SimTrace {
    pub times: Vec<f64>,
    /// V (cooling) or W (enantiomer)
    pub lyapunov: Vec<f64>,
    /// s (cooling deviation) or v (saturation deviation)
    pub scalar: Vec<f64>,
    pub control: Vec<f64>,
    /// weighted L2 norm per profile, one series per species
    pub norms: Vec<Vec<f64>>,
    /// closed-form dissipation rate (the `w`-form identity)
    pub rate_rhs: Option<Vec<f64>>,
    /// shifted-variable form of the dissipation rate (cooling only)
    pub rate_rhs_eta: Option<Vec<f64>>,
    pub snapshots: Vec<Snapshot>,
}

impl SimTrace {
    fn new(n_profiles: usize, with_rate: bool, with_eta: bool) -> Self {
        Self {
            norms: vec![Vec::new(); n_profiles],
            rate_rhs: with_rate.then(Vec::new),
            rate_rhs_eta: with_eta.then(Vec::new),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// CFL-bounded step `dt = cfl * dx / max_speed`.
pub fn stable_dt(max_speed: f64, dx: f64, cfl: f64) -> Result<f64, SimError> {
    if !(max_speed > 0.0) {
        return Err(SimError::NonpositiveMaxSpeed(max_speed));
    }
    Ok(cfl * dx / max_speed)
}

fn check_finite(values: &[f64], scalar: f64, t: f64, step: usize) -> Result<(), SimError> {
    if !scalar.is_finite() || values.iter().any(|v| !v.is_finite()) {
        return Err(SimError::NonFiniteState { t, step });
    }
    Ok(())
}

struct SnapshotCursor {
    times: Vec<f64>,
    next: usize,
}

impl SnapshotCursor {
    fn new(spec: &TimeStepSpec) -> Self {
        Self {
            times: spec.snapshot_times.clone(),
            next: 0,
        }
    }

    fn due(&mut self, t: f64) -> bool {
        let mut hit = false;
        while self.next < self.times.len() && t >= self.times[self.next] - 1e-12 {
            self.next += 1;
            hit = true;
        }
        hit
    }
}

// ---------------------------------------------------------------------------
// linearized cooling
// ---------------------------------------------------------------------------

/// Integrates the linearized cooling system in deviation variables.
///
/// The initial profile must satisfy the boundary condition `w(0) = alpha s`;
/// it is re-imposed on entry and after every Runge–Kutta stage.
pub fn simulate_cooling_linear(
    x0: &CoolingState,
    coeffs: &LinearizedCoefficients,
    rho: &DensityWeight,
    gamma: f64,
    kappa: f64,
    grid: &Grid,
    spec: &TimeStepSpec,
) -> Result<SimTrace, SimError> {
    let n = grid.n_nodes();
    if x0.w.len() != n {
        return Err(ModelError::LengthMismatch {
            got: x0.w.len(),
            expected: n,
        }
        .into());
    }
    let dx = grid.dx();
    let q = trapezoid_weights(grid);
    let nodes = grid.nodes();

    let max_speed = coeffs.g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some((i, &bad)) = coeffs.g.iter().enumerate().find(|(_, &g)| g <= 0.0) {
        return Err(ModelError::NonpositiveSpeed {
            x: nodes[i],
            value: bad,
        }
        .into());
    }
    let dt_max = stable_dt(max_speed, dx, spec.cfl)?;
    let n_steps = (spec.t_end / dt_max).ceil().max(1.0) as usize;
    let dt = spec.t_end / n_steps as f64;

    // per-node source data
    let vpsi: Vec<f64> = nodes
        .iter()
        .map(|&x| coeffs.v * coeffs.psi.value_at(x))
        .collect();
    let s_coupling: Vec<f64> = coeffs
        .g_c
        .iter()
        .zip(&coeffs.nbar_prime)
        .map(|(gc, np)| gc * np)
        .collect();
    let theta_q: Vec<f64> = coeffs.theta.iter().zip(&q).map(|(t, qi)| t * qi).collect();

    let feedback = match spec.control {
        ControlMode::Closed => Some(cooling_feedback_coefficients(
            coeffs, rho, gamma, kappa, grid,
        )?),
        ControlMode::Open { .. } => None,
    };
    let control_value = |w: &[f64], s: f64| -> f64 {
        match (&spec.control, &feedback) {
            (ControlMode::Open { source }, _) => *source,
            (ControlMode::Closed, Some((cw, cs))) => apply_feedback(cw, *cs, w, s),
            (ControlMode::Closed, None) => unreachable!(),
        }
    };

    // closed-form dissipation rates of the closed loop (Lyapunov identity)
    let scalar_coeff =
        kappa + gamma * coeffs.k0 - rho.rho_bar * coeffs.g[0] * coeffs.alpha * coeffs.alpha / 2.0;
    let g_end = coeffs.g[n - 1];
    let rate_w_form = |w: &[f64], s: f64| -> f64 {
        let mut interior = 0.0;
        for i in 0..n {
            interior += q[i] * rho.samples[i] * rho.h_samples[i] * w[i] * w[i];
        }
        -0.5 * interior
            - 0.5 * rho.samples[n - 1] * g_end * w[n - 1] * w[n - 1]
            - scalar_coeff * s * s
    };
    let rate_eta_form = |w: &[f64], s: f64| -> f64 {
        let mut interior = 0.0;
        for i in 0..n {
            let eta = w[i] - coeffs.alpha * s;
            interior += q[i] * rho.samples[i] * rho.h_samples[i] * eta * eta;
        }
        let eta_end = w[n - 1] - coeffs.alpha * s;
        -0.5 * interior
            - 0.5 * rho.samples[n - 1] * g_end * eta_end * eta_end
            - scalar_coeff * s * s
    };

    let mut w = x0.w.clone();
    let mut s = x0.s;
    w[0] = coeffs.alpha * s;
    let mut t = x0.t;

    let mut trace = SimTrace::new(1, spec.record_rate_rhs, spec.record_rate_rhs);
    let mut snaps = SnapshotCursor::new(spec);
    let record = |trace: &mut SimTrace, w: &[f64], s: f64, t: f64, snaps: &mut SnapshotCursor| {
        trace.times.push(t);
        trace.lyapunov.push(lyapunov_v(w, s, rho, gamma));
        trace.scalar.push(s);
        trace.control.push(control_value(w, s));
        trace.norms[0].push(weighted_norm(w, rho));
        if let Some(col) = trace.rate_rhs.as_mut() {
            col.push(rate_w_form(w, s));
        }
        if let Some(col) = trace.rate_rhs_eta.as_mut() {
            col.push(rate_eta_form(w, s));
        }
        if snaps.due(t) {
            trace.snapshots.push(Snapshot {
                t,
                scalar: s,
                profiles: vec![w.to_vec()],
            });
        }
    };

    let deriv = |w: &[f64], s: f64, dw: &mut [f64]| -> f64 {
        let u = control_value(w, s);
        let mut ds = -coeffs.k0 * s + coeffs.k1 * w[n - 1] + coeffs.b * u;
        for i in 0..n {
            ds += theta_q[i] * w[i];
        }
        for i in 1..n {
            dw[i] = -coeffs.g[i] * (w[i] - w[i - 1]) / dx + vpsi[i] * w[i] - s_coupling[i] * s;
        }
        dw[0] = coeffs.alpha * ds;
        ds
    };

    let mut k = vec![vec![0.0; n]; 4];
    let mut ks = [0.0; 4];
    let mut stage_w = vec![0.0; n];

    for step in 0..n_steps {
        if step % spec.output_stride == 0 {
            record(&mut trace, &w, s, t, &mut snaps);
        }

        ks[0] = deriv(&w, s, &mut k[0]);
        for (m, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            let c = frac * dt;
            let s_stage = s + c * ks[m - 1];
            for i in 0..n {
                stage_w[i] = w[i] + c * k[m - 1][i];
            }
            stage_w[0] = coeffs.alpha * s_stage;
            ks[m] = deriv(&stage_w, s_stage, &mut k[m]);
        }
        for i in 0..n {
            w[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        s += dt / 6.0 * (ks[0] + 2.0 * ks[1] + 2.0 * ks[2] + ks[3]);
        w[0] = coeffs.alpha * s;
        t = x0.t + (step + 1) as f64 * dt;

        check_finite(&w, s, t, step + 1)?;
    }
    record(&mut trace, &w, s, t, &mut snaps);
    Ok(trace)
}

// ---------------------------------------------------------------------------
// nonlinear cooling
// ---------------------------------------------------------------------------

/// Integrates the physical cooling model `(n, c)`.
///
/// The mass balance is made explicit by substituting the population-balance
/// right-hand side into `d(ln eps)/dt = -(k_v/eps) ∫ x^3 n_t dx`, so no
/// quadrature is differentiated numerically. Closed-loop mode applies the
/// linear feedback to the deviations `(n - nbar, c - cbar)` and feeds
/// `u_f = ubar_f + u`. The trace records the deviation functional.
pub fn simulate_cooling_nonlinear(
    s: &CoolingScenario,
    ss: &CoolingSteadyState,
    x0: &CoolingState,
    spec: &TimeStepSpec,
) -> Result<SimTrace, SimError> {
    let grid = &s.grid;
    let n = grid.n_nodes();
    if x0.w.len() != n {
        return Err(ModelError::LengthMismatch {
            got: x0.w.len(),
            expected: n,
        }
        .into());
    }
    let kin = &s.kinetics;
    let dx = grid.dx();
    let nodes = grid.nodes();
    let q = trapezoid_weights(grid);
    let ell = grid.length();

    let coeffs = linearize_cooling(s, ss)?;
    let rho = cooling_weight(&coeffs, kin.v, &s.h, s.rho_bar, grid)?;
    let feedback = match spec.control {
        ControlMode::Closed => Some(cooling_feedback_coefficients(
            &coeffs, &rho, s.gamma, s.kappa, grid,
        )?),
        ControlMode::Open { .. } => None,
    };

    let psi_n: Vec<f64> = nodes.iter().map(|&x| kin.psi.value_at(x)).collect();
    let phi_n: Vec<f64> = nodes.iter().map(|&x| kin.phi.value_at(x)).collect();
    let x3: Vec<f64> = nodes.iter().map(|&x| x * x * x).collect();

    let mut field = x0.w.clone();
    let mut c = x0.s;
    let mut t = x0.t;

    let mut dev = vec![0.0; n];
    let control_value = |field: &[f64], c: f64, dev: &mut [f64]| -> f64 {
        match (&spec.control, &feedback) {
            (ControlMode::Open { source }, _) => *source,
            (ControlMode::Closed, Some((cw, cs))) => {
                for i in 0..n {
                    dev[i] = field[i] - ss.nbar[i];
                }
                apply_feedback(cw, *cs, dev, c - ss.cbar)
            }
            (ControlMode::Closed, None) => unreachable!(),
        }
    };

    let mut trace = SimTrace::new(1, false, false);
    let mut snaps = SnapshotCursor::new(spec);

    let mut k = vec![vec![0.0; n]; 4];
    let mut kc = [0.0; 4];
    let mut stage_field = vec![0.0; n];
    let mut step = 0usize;

    loop {
        // record on the stride cadence
        if step % spec.output_stride == 0 || t >= spec.t_end {
            for i in 0..n {
                dev[i] = field[i] - ss.nbar[i];
            }
            let s_dev = c - ss.cbar;
            trace.times.push(t);
            trace.lyapunov.push(lyapunov_v(&dev, s_dev, &rho, s.gamma));
            trace.scalar.push(s_dev);
            trace.norms[0].push(weighted_norm(&dev, &rho));
            if snaps.due(t) {
                trace.snapshots.push(Snapshot {
                    t,
                    scalar: s_dev,
                    profiles: vec![dev.clone()],
                });
            }
            // control_value recomputes the same deviations into `dev`
            trace.control.push(control_value(&field, c, &mut dev));
        }
        if t >= spec.t_end {
            break;
        }

        if c <= kin.c_sat {
            return Err(SimError::GrowthCollapse { t, c });
        }
        let max_speed = kin.kg * (c - kin.c_sat) * (1.0 + kin.ag * ell);
        let dt = stable_dt(max_speed, dx, spec.cfl)?.min(spec.t_end - t);

        let deriv =
            |field: &[f64], c: f64, dn: &mut [f64], dev: &mut [f64]| -> Result<f64, SimError> {
                if c <= kin.c_sat {
                    return Err(SimError::GrowthCollapse { t, c });
                }
                let mut third_moment = 0.0;
                let mut removal = 0.0;
                for i in 0..n {
                    third_moment += q[i] * x3[i] * field[i];
                    removal += q[i] * phi_n[i] * field[i];
                }
                let eps = 1.0 - kin.kv * third_moment;
                if eps <= 0.0 {
                    return Err(SimError::VoidFractionExhausted { t, eps });
                }
                let u = control_value(field, c, dev);
                let u_f = ss.ubar_f + u;
                let scale = kin.kg * (c - kin.c_sat);
                dn[0] = 0.0;
                for i in 1..n {
                    let g_i = scale * (1.0 + kin.ag * nodes[i]);
                    dn[i] = -g_i * (field[i] - field[i - 1]) / dx + kin.v * psi_n[i] * field[i];
                }
                let mut moment_rate = 0.0;
                for i in 1..n {
                    moment_rate += q[i] * x3[i] * dn[i];
                }
                let dln_eps = -kin.kv / eps * moment_rate;
                let dc = (kin.rho0 - c) * (kin.v + dln_eps)
                    + kin.v / eps * (u_f - kin.rho0 - kin.rho0 * kin.kv * removal);
                Ok(dc)
            };

        let impose = |field: &mut [f64], c: f64| -> Result<(), SimError> {
            if c <= kin.c_sat {
                return Err(SimError::GrowthCollapse { t, c });
            }
            let (b_rate, _) = eval_nucleation(kin, c);
            field[0] = b_rate / (kin.kg * (c - kin.c_sat));
            Ok(())
        };

        kc[0] = deriv(&field, c, &mut k[0], &mut dev)?;
        for (m, frac) in [(1, 0.5), (2, 0.5), (3, 1.0)] {
            let h = frac * dt;
            let c_stage = c + h * kc[m - 1];
            for i in 0..n {
                stage_field[i] = field[i] + h * k[m - 1][i];
            }
            impose(&mut stage_field, c_stage)?;
            kc[m] = deriv(&stage_field, c_stage, &mut k[m], &mut dev)?;
        }
        for i in 0..n {
            field[i] += dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
        }
        c += dt / 6.0 * (kc[0] + 2.0 * kc[1] + 2.0 * kc[2] + kc[3]);
        impose(&mut field, c)?;
        t += dt;
        step += 1;
        check_finite(&field, c, t, step)?;
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// enantiomer system
// ---------------------------------------------------------------------------

/// Integrates the enantiomer deviation system in closed or open loop.
///
/// The time step is recomputed every step from the instantaneous maximum
/// speed `Gbar_k (1 + g_k v)`; the run aborts if any advection factor loses
/// positivity, since upwinding and the boundary condition are then ill-posed.
pub fn simulate_enantiomer(
    s: &EnantiomerScenario,
    ss: &EnantiomerSteadyState,
    x0: &EnantiomerState,
    spec: &TimeStepSpec,
    mode: EnantiomerMode,
) -> Result<SimTrace, SimError> {
    let grid = &s.grid;
    let n = grid.n_nodes();
    if x0.w1.len() != n || x0.w2.len() != n {
        return Err(ModelError::LengthMismatch {
            got: x0.w1.len().max(x0.w2.len()),
            expected: n,
        }
        .into());
    }
    let dx = grid.dx();
    let nodes = grid.nodes();
    let q = trapezoid_weights(grid);

    let alphas = [
        enantiomer_alpha(
            s.species[0].b_slope,
            s.species[0].g_slope,
            s.species[0].bbar,
            s.species[0].gbar,
        ),
        enantiomer_alpha(
            s.species[1].b_slope,
            s.species[1].g_slope,
            s.species[1].bbar,
            s.species[1].gbar,
        ),
    ];
    let rho1 = enantiomer_weight(
        s.species[0].gbar,
        &s.psi,
        &s.species[0].h,
        s.species[0].rho_bar,
        grid,
    )?;
    let rho2 = enantiomer_weight(
        s.species[1].gbar,
        &s.psi,
        &s.species[1].h,
        s.species[1].rho_bar,
        grid,
    )?;
    let psi_n: Vec<f64> = nodes.iter().map(|&x| s.psi.value_at(x)).collect();

    let boundary = |alpha: f64, g_slope: f64, v: f64| -> f64 {
        match mode {
            EnantiomerMode::Quasilinear => alpha * v,
            EnantiomerMode::Nonlinear => alpha * v / (1.0 + g_slope * v),
        }
    };

    let control_value = |w1: &[f64], w2: &[f64], v: f64| -> f64 {
        match spec.control {
            ControlMode::Open { source } => source,
            ControlMode::Closed => enantiomer_feedback(w1, w2, v, s, ss, &rho1, &rho2),
        }
    };

    let rate_w_form = |w1: &[f64], w2: &[f64], v: f64| -> f64 {
        let mut sum = 0.0;
        for (k, (w, rho)) in [(w1, &rho1), (w2, &rho2)].into_iter().enumerate() {
            let mut interior = 0.0;
            for i in 0..n {
                interior += q[i] * rho.samples[i] * rho.h_samples[i] * w[i] * w[i];
            }
            sum += interior + s.species[k].gbar * rho.samples[n - 1] * w[n - 1] * w[n - 1];
        }
        -0.5 * sum - 0.5 * s.gamma * s.kappa * v * v
    };

    let mut w = [x0.w1.clone(), x0.w2.clone()];
    let mut v = x0.v;
    let mut t = x0.t;
    for k in 0..2 {
        let f = 1.0 + s.species[k].g_slope * v;
        if f <= 0.0 {
            return Err(SimError::SpeedSignLoss { t, factor: f });
        }
        w[k][0] = boundary(alphas[k], s.species[k].g_slope, v);
    }

    let mut trace = SimTrace::new(2, spec.record_rate_rhs, false);
    let mut snaps = SnapshotCursor::new(spec);

    let mut kk: Vec<[Vec<f64>; 2]> = (0..4).map(|_| [vec![0.0; n], vec![0.0; n]]).collect();
    let mut kv = [0.0; 4];
    let mut stage = [vec![0.0; n], vec![0.0; n]];
    let mut step = 0usize;

    loop {
        if step % spec.output_stride == 0 || t >= spec.t_end {
            trace.times.push(t);
            trace
                .lyapunov
                .push(lyapunov_w(&w[0], &w[1], v, &rho1, &rho2, s.gamma));
            trace.scalar.push(v);
            trace.control.push(control_value(&w[0], &w[1], v));
            trace.norms[0].push(weighted_norm(&w[0], &rho1));
            trace.norms[1].push(weighted_norm(&w[1], &rho2));
            if let Some(col) = trace.rate_rhs.as_mut() {
                col.push(rate_w_form(&w[0], &w[1], v));
            }
            if snaps.due(t) {
                trace.snapshots.push(Snapshot {
                    t,
                    scalar: v,
                    profiles: vec![w[0].clone(), w[1].clone()],
                });
            }
        }
        if t >= spec.t_end {
            break;
        }

        let mut max_speed = f64::NEG_INFINITY;
        for k in 0..2 {
            let f = 1.0 + s.species[k].g_slope * v;
            if f <= 0.0 {
                return Err(SimError::SpeedSignLoss { t, factor: f });
            }
            max_speed = max_speed.max(s.species[k].gbar * f);
        }
        let dt = stable_dt(max_speed, dx, spec.cfl)?.min(spec.t_end - t);

        let deriv =
            |w1: &[f64], w2: &[f64], v: f64, out: &mut [Vec<f64>; 2]| -> Result<f64, SimError> {
                let u = control_value(w1, w2, v);
                for (k, wk) in [w1, w2].into_iter().enumerate() {
                    let sp = &s.species[k];
                    let factor = 1.0 + sp.g_slope * v;
                    if factor <= 0.0 {
                        return Err(SimError::SpeedSignLoss { t, factor });
                    }
                    let speed = sp.gbar * factor;
                    let nbar = &ss.nbar[k];
                    for i in 1..n {
                        let forcing = match mode {
                            EnantiomerMode::Quasilinear => sp.g_slope * nbar[i],
                            EnantiomerMode::Nonlinear => sp.g_slope * psi_n[i] * nbar[i],
                        };
                        out[k][i] =
                            -speed * (wk[i] - wk[i - 1]) / dx + psi_n[i] * wk[i] - forcing * v;
                    }
                    out[k][0] = 0.0;
                }
                Ok(u)
            };

        kv[0] = deriv(&w[0], &w[1], v, &mut kk[0])?;
        for (m, frac) in [(1usize, 0.5), (2, 0.5), (3, 1.0)] {
            let h = frac * dt;
            let v_stage = v + h * kv[m - 1];
            for k in 0..2 {
                for i in 0..n {
                    stage[k][i] = w[k][i] + h * kk[m - 1][k][i];
                }
                let f = 1.0 + s.species[k].g_slope * v_stage;
                if f <= 0.0 {
                    return Err(SimError::SpeedSignLoss { t, factor: f });
                }
                stage[k][0] = boundary(alphas[k], s.species[k].g_slope, v_stage);
            }
            kv[m] = deriv(&stage[0], &stage[1], v_stage, &mut kk[m])?;
        }
        for k in 0..2 {
            for i in 0..n {
                w[k][i] +=
                    dt / 6.0 * (kk[0][k][i] + 2.0 * kk[1][k][i] + 2.0 * kk[2][k][i] + kk[3][k][i]);
            }
        }
        v += dt / 6.0 * (kv[0] + 2.0 * kv[1] + 2.0 * kv[2] + kv[3]);
        for k in 0..2 {
            let f = 1.0 + s.species[k].g_slope * v;
            if f <= 0.0 {
                return Err(SimError::SpeedSignLoss { t, factor: f });
            }
            w[k][0] = boundary(alphas[k], s.species[k].g_slope, v);
        }
        t += dt;
        step += 1;
        check_finite(&w[0], v, t, step)?;
        check_finite(&w[1], v, t, step)?;
    }
    Ok(trace)
}

// ---------------------------------------------------------------------------
// seeded initial states
// ---------------------------------------------------------------------------

/// Smooth random deviation profile compatible with the boundary condition
/// `w(0) = alpha s`: a boundary offset plus a few decaying sine modes.
pub fn random_cooling_state(grid: &Grid, alpha: f64, seed: u64, amplitude: f64) -> CoolingState {
    let mut rng = SplitMix64::new(seed);
    let s = amplitude * rng.uniform(-1.0, 1.0);
    let modes: Vec<f64> = (1..=4)
        .map(|j| amplitude * rng.uniform(-1.0, 1.0) / (j as f64 * j as f64))
        .collect();
    let ell = grid.length();
    let w = grid.sample(|x| {
        let mut val = alpha * s;
        for (j, a) in modes.iter().enumerate() {
            val += a * ((j + 1) as f64 * std::f64::consts::PI * x / ell).sin();
        }
        val
    });
    CoolingState { w, s, t: 0.0 }
}

/// Smooth random enantiomer deviation state with `w_k(0) = alpha_k v`.
pub fn random_enantiomer_state(
    grid: &Grid,
    alpha1: f64,
    alpha2: f64,
    seed: u64,
    amplitude: f64,
) -> EnantiomerState {
    let mut rng = SplitMix64::new(seed);
    let v =
        amplitude * (0.2 + 0.8 * rng.next_f64()) * if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
    let ell = grid.length();
    let mut profile = |alpha: f64| -> Vec<f64> {
        let modes: Vec<f64> = (1..=3)
            .map(|j| amplitude * rng.uniform(-1.0, 1.0) / ((j * j) as f64))
            .collect();
        grid.sample(|x| {
            let mut val = alpha * v;
            for (j, a) in modes.iter().enumerate() {
                val += a * ((j + 1) as f64 * std::f64::consts::PI * x / ell).sin();
            }
            val
        })
    };
    let w1 = profile(alpha1);
    let w2 = profile(alpha2);
    EnantiomerState { w1, w2, v, t: 0.0 }
}
