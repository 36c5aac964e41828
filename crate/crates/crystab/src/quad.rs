//! Quadrature helpers.
//!
//! State-dependent integrals (profiles living on grid nodes) use the composite
//! trapezoid rule so that simulation, feedback, and certificate assembly all
//! share one discretization. Analytically known integrands (weight exponents)
//! use 5-point Gauss–Legendre panels split at breakpoints.

use crate::grid::Grid;

/// Trapezoid weights `[dx/2, dx, …, dx, dx/2]` for the grid nodes.
pub fn trapezoid_weights(grid: &Grid) -> Vec<f64> {
    let dx = grid.dx();
    let n = grid.n_nodes();
    let mut w = vec![dx; n];
    w[0] = 0.5 * dx;
    w[n - 1] = 0.5 * dx;
    w
}

/// Composite trapezoid of node samples.
pub fn trapezoid(values: &[f64], grid: &Grid) -> f64 {
    debug_assert_eq!(values.len(), grid.n_nodes());
    let n = values.len();
    let mut sum = 0.5 * (values[0] + values[n - 1]);
    for v in &values[1..n - 1] {
        sum += v;
    }
    sum * grid.dx()
}

// 5-point Gauss–Legendre rule on [-1, 1].
const GL5_NODES: [f64; 5] = [
    -0.9061798459386640,
    -0.5384693101056831,
    0.0,
    0.5384693101056831,
    0.9061798459386640,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.23692688505618908,
    0.47862867049936647,
    0.5688888888888889,
    0.47862867049936647,
    0.23692688505618908,
];

/// 5-point Gauss–Legendre on a single panel `[a, b]`.
pub fn gauss5(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (node, weight) in GL5_NODES.iter().zip(GL5_WEIGHTS) {
        sum += weight * f(mid + half * node);
    }
    sum * half
}

/// Gauss–Legendre over `[a, b]` with panels split at the given sorted
/// breakpoints (those inside the interval).
pub fn gauss5_split(f: impl Fn(f64) -> f64, a: f64, b: f64, splits: &[f64]) -> f64 {
    debug_assert!(a <= b);
    let mut total = 0.0;
    let mut lo = a;
    for &s in splits {
        if s > lo && s < b {
            total += gauss5(&f, lo, s);
            lo = s;
        }
    }
    total + gauss5(&f, lo, b)
}

/// Composite trapezoid of `smooth(x) * jumpy(x)` over the grid, with cells
/// split at the breakpoints of `jumpy` and one-sided limits taken from the
/// piece active on each subinterval. Keeps second order when the factor
/// jumps, including at a node.
pub fn trapezoid_jump_aware(
    grid: &Grid,
    jumpy: &crate::piecewise::PiecewiseFn,
    smooth: impl Fn(f64) -> f64,
) -> f64 {
    let mut total = 0.0;
    for cell in grid.nodes().windows(2) {
        let (lo, hi) = (cell[0], cell[1]);
        let mut a = lo;
        for &b in jumpy.breakpoints() {
            if b > a && b < hi {
                total += panel(jumpy, &smooth, a, b);
                a = b;
            }
        }
        total += panel(jumpy, &smooth, a, hi);
    }
    total
}

fn panel(
    jumpy: &crate::piecewise::PiecewiseFn,
    smooth: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
) -> f64 {
    let piece = jumpy.piece_on_interval(a, b);
    0.5 * (b - a) * (smooth(a) * piece.eval(a) + smooth(b) * piece.eval(b))
}
