//! Coefficient bundle of the linearized cooling system and the enantiomer
//! boundary gains.
//!
//! In deviation variables `w = n - nbar`, `s = c - cbar`, `u = u_f - ubar_f`
//! the cooling model linearizes to
//!
//! ```text
//! w_t = -g(x) w' + v psi(x) w - g_c(x) nbar'(x) s,     w(0) = alpha s,
//! s'  = -k0 s + k1 w(l) + ∫ theta w dx + b u.
//! ```
//!
//! All kinetics partials are closed forms of the parametric family; the
//! moment integrals use the composite trapezoid on the grid so that the
//! simulator, the feedback law, and the discrete operator share one
//! discretization. `(x^3 g)'` inside `theta` is expanded analytically as
//! `3 x^2 g + x^3 g'` to avoid differentiating sampled products.

use crate::equilibrium::CoolingSteadyState;
use crate::error::ModelError;
use crate::piecewise::PiecewiseFn;
use crate::quad::{trapezoid, trapezoid_jump_aware};
use crate::scenario::{eval_nucleation, CoolingScenario, EquilibriumGrowth};

/// Sampled coefficients of the linearized cooling system.
///
/// The closed-form growth data rides along so that weight constructors can
/// evaluate `g` between grid nodes.
#[derive(Debug, Clone)]
pub struct LinearizedCoefficients {
    /// `g(x_i) = G(x_i, cbar)`
    pub g: Vec<f64>,
    /// `g'(x_i)`
    pub g_prime: Vec<f64>,
    /// `g_c(x_i) = dG/dc at cbar`
    pub g_c: Vec<f64>,
    /// steady-profile derivative at the nodes (closed form)
    pub nbar_prime: Vec<f64>,
    /// integral kernel of the scalar equation
    pub theta: Vec<f64>,
    /// boundary gain `alpha = d/dc (B/G(0,·)) at cbar`
    pub alpha: f64,
    pub k0: f64,
    pub k1: f64,
    /// `k2 = k0 - alpha k1 - alpha ∫ theta` with the shared trapezoid rule
    pub k2: f64,
    pub beta: f64,
    /// control gain `b = v / eps_bar`
    pub b: f64,
    /// equilibrium concentration (context for reports)
    pub cbar: f64,
    pub eps_bar: f64,
    /// flow-rate parameter of the scenario
    pub v: f64,
    /// fines-dissolution function (advection source term `v psi w`)
    pub psi: PiecewiseFn,
    /// closed-form growth law at the equilibrium
    pub growth: EquilibriumGrowth,
}

/// Evaluates every coefficient of the linearized system.
pub fn linearize_cooling(
    s: &CoolingScenario,
    ss: &CoolingSteadyState,
) -> Result<LinearizedCoefficients, ModelError> {
    let k = &s.kinetics;
    let grid = &s.grid;
    if ss.nbar.len() != grid.n_nodes() {
        return Err(ModelError::LengthMismatch {
            got: ss.nbar.len(),
            expected: grid.n_nodes(),
        });
    }
    let growth = *ss.growth();
    let nodes = grid.nodes();

    let g: Vec<f64> = nodes.iter().map(|&x| growth.g(x)).collect();
    if let Some((i, &bad)) = g.iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(ModelError::NonpositiveSpeed {
            x: nodes[i],
            value: bad,
        });
    }
    let g_prime: Vec<f64> = nodes.iter().map(|&x| growth.g_prime(x)).collect();
    let g_c: Vec<f64> = nodes.iter().map(|&x| growth.g_c(x)).collect();

    let (b_rate, b_rate_dc) = eval_nucleation(k, ss.cbar);
    let g0 = growth.g(0.0);
    let alpha = (b_rate_dc * g0 - b_rate * growth.g_c(0.0)) / (g0 * g0);

    let eps = ss.eps_bar;
    // nbar' = nbar v psi / g jumps with psi, so the moment integral splits at
    // the breakpoints to keep its trapezoid order
    let profile = ss.profile();
    let moment_integral = trapezoid_jump_aware(grid, &k.psi, |x| {
        x * x * x * growth.g_c(x) * profile.eval(x) * k.v / growth.g(x)
    });
    let k0 = k.v + (ss.cbar - k.rho0) * k.kv / eps * moment_integral;

    let ell = grid.length();
    let k1 = (k.rho0 - ss.cbar) * k.kv * ell.powi(3) * growth.g(ell) / eps;

    let theta: Vec<f64> = nodes
        .iter()
        .map(|&x| {
            let transport = 3.0 * x * x * growth.g(x) + x.powi(3) * growth.g_prime(x);
            k.kv / eps
                * ((ss.cbar - k.rho0) * (transport + k.v * x.powi(3) * k.psi.value_at(x))
                    - k.v * k.rho0 * k.phi.value_at(x)
                    + k.v * ss.beta * x.powi(3))
        })
        .collect();

    let k2 = k0 - alpha * k1 - alpha * trapezoid(&theta, grid);
    let b = k.v / eps;

    Ok(LinearizedCoefficients {
        g,
        g_prime,
        g_c,
        nbar_prime: ss.nbar_prime.clone(),
        theta,
        alpha,
        k0,
        k1,
        k2,
        beta: ss.beta,
        b,
        cbar: ss.cbar,
        eps_bar: eps,
        v: k.v,
        psi: k.psi.clone(),
        growth,
    })
}

/// Enantiomer boundary gain `alpha_k = (b_k - g_k) Bbar_k / Gbar_k`.
pub fn enantiomer_alpha(b_slope: f64, g_slope: f64, bbar: f64, gbar: f64) -> f64 {
    debug_assert!(gbar > 0.0);
    (b_slope - g_slope) * bbar / gbar
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::cooling_steady;
    use crate::quad::gauss5_split;
    use crate::scenario::{parse_scenario, Scenario};

    fn cooling_from(doc: &str) -> CoolingScenario {
        match parse_scenario(doc).unwrap() {
            Scenario::Cooling(c) => c,
            _ => panic!("expected cooling"),
        }
    }

    fn rich_doc(n_cells: usize) -> String {
        format!(
            "model = cooling\nn_cells = {n_cells}\nk_g = 1.0\na_g = 0.5\nk_b = 2.0\np_b = 2.0\n\
             c_sat = 0.5\nrho0 = 3.0\nv = 0.8\nk_v = 0.6\ncbar_target = 1.0\n\
             gamma = 1.2\nkappa = 2.0\nrhobar = 1.5\n\
             psi.breakpoints = [0, 0.5, 1]\npsi.coeffs = [[-0.4, 0.2], [-0.1]]\n\
             phi.breakpoints = [0, 0.25, 1]\nphi.coeffs = [[0.0], [1.0]]\n\
             h.coeffs = [[0.8]]\n"
        )
    }

    #[test]
    fn b_and_k1_match_their_closed_forms() {
        // tune k_b so that eps_bar = 1/2 exactly (within rounding); then with
        // rho0 = 2, cbar = 1, k_v = 1, g(l) = 1 the closed forms give
        // b = 2 and k1 = 2
        let base = "model = cooling\nn_cells = 128\nk_g = 1.0\nc_sat = 0.0\ncbar_target = 1.0\n\
                    k_b = 1.0\nrho0 = 2.0\nv = 1.0\nk_v = 1.0\npsi.coeffs = [[-0.2]]\n";
        let s0 = cooling_from(base);
        let ss0 = cooling_steady(&s0).unwrap();
        let t = (1.0 - ss0.eps_bar) / s0.kinetics.kv; // ∫ x^3 nbar with k_b = 1
        let mut s = s0.clone();
        s.kinetics.kb = 0.5 / t;
        let ss = cooling_steady(&s).unwrap();
        assert!((ss.eps_bar - 0.5).abs() < 1e-12);
        let c = linearize_cooling(&s, &ss).unwrap();
        assert!((c.b - 2.0).abs() < 1e-11);
        assert!((c.k1 - 2.0).abs() < 1e-11);
    }

    #[test]
    fn constant_nucleation_to_growth_ratio_gives_zero_alpha() {
        // B(c) = 2c and G(0, c) = c make B/G(0,·) constant
        let doc = "model = cooling\nn_cells = 32\nk_g = 1.0\nc_sat = 0.0\nk_b = 2.0\np_b = 1.0\n\
                   cbar_target = 1.0\nk_v = 0.2\n";
        let s = cooling_from(doc);
        let ss = cooling_steady(&s).unwrap();
        let c = linearize_cooling(&s, &ss).unwrap();
        assert!(c.alpha.abs() < 1e-15);
    }

    #[test]
    fn k2_identity_against_independent_quadrature() {
        let s = cooling_from(&rich_doc(100));
        let ss = cooling_steady(&s).unwrap();
        let c = linearize_cooling(&s, &ss).unwrap();

        // independent route: Gauss panels split at the breakpoints of psi and
        // phi, evaluating theta from its closed form
        let k = &s.kinetics;
        let growth = *ss.growth();
        let theta_fn = |x: f64| {
            let transport = 3.0 * x * x * growth.g(x) + x.powi(3) * growth.g_prime(x);
            k.kv / ss.eps_bar
                * ((ss.cbar - k.rho0) * (transport + k.v * x.powi(3) * k.psi.value_at(x))
                    - k.v * k.rho0 * k.phi.value_at(x)
                    + k.v * ss.beta * x.powi(3))
        };
        let mut splits: Vec<f64> = k.psi.breakpoints().to_vec();
        splits.extend_from_slice(k.phi.breakpoints());
        splits.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let integral = gauss5_split(theta_fn, 0.0, s.grid.length(), &splits);
        let k2_independent = c.k0 - c.alpha * c.k1 - c.alpha * integral;
        assert!(
            (c.k2 - k2_independent).abs() < 5e-3 * (1.0 + c.k2.abs()),
            "k2 = {}, independent = {k2_independent}",
            c.k2
        );
    }

    #[test]
    fn refinement_shrinks_quadrature_error_at_second_order() {
        // k0 on N and 2N and 4N: trapezoid differences shrink ~4x
        let k0 = |n: usize| {
            let s = cooling_from(&rich_doc(n));
            let ss = cooling_steady(&s).unwrap();
            linearize_cooling(&s, &ss).unwrap().k0
        };
        let (a, b, c) = (k0(50), k0(100), k0(200));
        let d1 = (a - b).abs();
        let d2 = (b - c).abs();
        assert!(d2 < 0.35 * d1, "d1 = {d1:.3e}, d2 = {d2:.3e}");
    }

    #[test]
    fn decoupled_w_subsystem_has_no_scalar_coupling() {
        // with g_c ≡ 0 and alpha = 0 the w-equation loses its s term
        let s = cooling_from(&rich_doc(40));
        let ss = cooling_steady(&s).unwrap();
        let mut c = linearize_cooling(&s, &ss).unwrap();
        c.g_c.iter_mut().for_each(|v| *v = 0.0);
        c.alpha = 0.0;
        for (gc, np) in c.g_c.iter().zip(&c.nbar_prime) {
            assert_eq!(gc * np, 0.0);
        }
    }

    #[test]
    fn enantiomer_alpha_examples() {
        assert_eq!(enantiomer_alpha(1.0, 1.0, 3.0, 1.5), 0.0);
        assert_eq!(enantiomer_alpha(2.0, 1.0, 3.0, 1.5), 2.0);
        assert!(enantiomer_alpha(0.5, 1.0, 3.0, 1.5) < 0.0);
    }
}
