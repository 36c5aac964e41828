//! Piecewise polynomial functions of degree at most 3 on `[0, length]`.
//!
//! These model the classification functions (fines dissolution, product
//! removal) and the Lyapunov weight generators. Pieces are polynomials in the
//! global coordinate; evaluation is right-continuous at breakpoints. Degree is
//! capped at 3 so every integral used downstream has a closed form, including
//! `∫ p(y) / (c + d·y) dy` against the affine growth-rate family.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PiecewiseError {
    #[error("breakpoints must start at 0, end at the domain length, and increase strictly")]
    BadBreakpoints,
    #[error(
        "need exactly one coefficient list per interval ({intervals} intervals, {pieces} lists)"
    )]
    PieceCountMismatch { intervals: usize, pieces: usize },
    #[error("polynomial degree is capped at 3, got {0} coefficients")]
    DegreeTooHigh(usize),
    #[error("coordinate {x} outside the domain [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },
    #[error("non-finite value in piecewise definition")]
    NonFinite,
}

/// Polynomial `c0 + c1 x + c2 x^2 + c3 x^3` in the global coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Poly {
    coeffs: [f64; 4],
}

impl Poly {
    pub fn new(coeffs: &[f64]) -> Result<Self, PiecewiseError> {
        if coeffs.is_empty() || coeffs.len() > 4 {
            return Err(PiecewiseError::DegreeTooHigh(coeffs.len()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(PiecewiseError::NonFinite);
        }
        let mut c = [0.0; 4];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Ok(Self { coeffs: c })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            coeffs: [value, 0.0, 0.0, 0.0],
        }
    }

    pub fn coeffs(&self) -> &[f64; 4] {
        &self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let c = &self.coeffs;
        ((c[3] * x + c[2]) * x + c[1]) * x + c[0]
    }

    pub fn derivative(&self) -> Poly {
        let c = &self.coeffs;
        Poly {
            coeffs: [c[1], 2.0 * c[2], 3.0 * c[3], 0.0],
        }
    }

    /// Exact `∫_a^b p(y) dy`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        let anti = |x: f64| {
            let c = &self.coeffs;
            (((c[3] / 4.0 * x + c[2] / 3.0) * x + c[1] / 2.0) * x + c[0]) * x
        };
        anti(b) - anti(a)
    }

    /// Exact `∫_a^b p(y) / (c + d·y) dy`, requiring `c + d·y > 0` on `[a, b]`.
    ///
    /// Uses polynomial division `p = q·(c + d·y) + r`, so the integral is
    /// `∫ q + (r/d)·ln(c + d·b)/(c + d·a)`.
    pub fn integral_over_linear(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        if d == 0.0 {
            return self.integral(a, b) / c;
        }
        let p = &self.coeffs;
        // synthetic division by (d*y + c), highest degree first
        let q2 = p[3] / d;
        let q1 = (p[2] - q2 * c) / d;
        let q0 = (p[1] - q1 * c) / d;
        let r = p[0] - q0 * c;
        let q = Poly {
            coeffs: [q0, q1, q2, 0.0],
        };
        debug_assert!(c + d * a > 0.0 && c + d * b > 0.0);
        q.integral(a, b) + (r / d) * ((c + d * b) / (c + d * a)).ln()
    }

    /// Real roots of the derivative inside the open interval `(a, b)`.
    fn critical_points(&self, a: f64, b: f64) -> Vec<f64> {
        // derivative is c1 + 2 c2 x + 3 c3 x^2
        let (p1, p2, p3) = (self.coeffs[1], 2.0 * self.coeffs[2], 3.0 * self.coeffs[3]);
        let mut out = Vec::new();
        if p3 == 0.0 {
            if p2 != 0.0 {
                out.push(-p1 / p2);
            }
        } else {
            let disc = p2 * p2 - 4.0 * p3 * p1;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // numerically stable pair
                let q = -0.5 * (p2 + sq.copysign(p2.max(f64::MIN_POSITIVE)));
                if q != 0.0 {
                    out.push(q / p3);
                    out.push(p1 / q);
                } else {
                    out.push(0.0);
                }
            }
        }
        out.retain(|x| *x > a && *x < b);
        out
    }
}

/// Piecewise polynomial over a partition `0 = b_0 < b_1 < … < b_m = length`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseFn {
    breaks: Vec<f64>,
    pieces: Vec<Poly>,
}

impl PiecewiseFn {
    /// `breaks` is the full partition including both endpoints.
    pub fn new(breaks: Vec<f64>, pieces: Vec<Poly>) -> Result<Self, PiecewiseError> {
        if breaks.len() < 2
            || breaks[0] != 0.0
            || breaks.iter().any(|b| !b.is_finite())
            || breaks.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(PiecewiseError::BadBreakpoints);
        }
        if pieces.len() != breaks.len() - 1 {
            return Err(PiecewiseError::PieceCountMismatch {
                intervals: breaks.len() - 1,
                pieces: pieces.len(),
            });
        }
        Ok(Self { breaks, pieces })
    }

    pub fn constant(value: f64, length: f64) -> Self {
        Self {
            breaks: vec![0.0, length],
            pieces: vec![Poly::constant(value)],
        }
    }

    pub fn length(&self) -> f64 {
        *self.breaks.last().unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    pub fn pieces(&self) -> &[Poly] {
        &self.pieces
    }

    /// Returns a copy with every piece scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let c = p.coeffs();
                Poly {
                    coeffs: [c[0] * factor, c[1] * factor, c[2] * factor, c[3] * factor],
                }
            })
            .collect();
        Self {
            breaks: self.breaks.clone(),
            pieces,
        }
    }

    /// Index of the piece whose value applies at `x` (right-continuous).
    fn piece_index(&self, x: f64) -> usize {
        let m = self.pieces.len();
        // first interior breakpoint strictly greater than x
        let idx = self.breaks[1..m].partition_point(|b| *b <= x);
        idx.min(m - 1)
    }

    /// The piece active on the open interval `(a, b)`, which must not cross a
    /// breakpoint. One-sided limits at the endpoints are this piece's values.
    pub fn piece_on_interval(&self, a: f64, b: f64) -> &Poly {
        &self.pieces[self.piece_index(0.5 * (a + b))]
    }

    /// Checked evaluation; right-continuous at interior breakpoints.
    pub fn eval(&self, x: f64) -> Result<f64, PiecewiseError> {
        if !(0.0..=self.length()).contains(&x) {
            return Err(PiecewiseError::OutOfDomain {
                x,
                length: self.length(),
            });
        }
        Ok(self.value_at(x))
    }

    /// Unchecked evaluation for callers that guarantee `0 <= x <= length`.
    pub fn value_at(&self, x: f64) -> f64 {
        debug_assert!((0.0..=self.length()).contains(&x), "x = {x} outside domain");
        self.pieces[self.piece_index(x)].eval(x)
    }

    /// Exact `∫_a^b f(y) dy` with the integral split at breakpoints.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        self.split_integral(a, b, |piece, lo, hi| piece.integral(lo, hi))
    }

    /// Exact `∫_a^b f(y) / (c + d·y) dy`.
    pub fn integral_over_linear(&self, a: f64, b: f64, c: f64, d: f64) -> f64 {
        self.split_integral(a, b, |piece, lo, hi| {
            piece.integral_over_linear(lo, hi, c, d)
        })
    }

    fn split_integral(&self, a: f64, b: f64, piece_int: impl Fn(&Poly, f64, f64) -> f64) -> f64 {
        debug_assert!(a <= b);
        let mut total = 0.0;
        let mut lo = a;
        for (i, piece) in self.pieces.iter().enumerate() {
            let right = self.breaks[i + 1];
            if right <= lo {
                continue;
            }
            let hi = right.min(b);
            if hi > lo {
                total += piece_int(piece, lo, hi);
                lo = hi;
            }
            if lo >= b {
                break;
            }
        }
        total
    }

    /// Exact infimum over the closure of every piece (closed-form critical
    /// points, degree <= 3). A function touching zero only in a left limit at
    /// a breakpoint therefore still reports zero.
    pub fn min_on_domain(&self) -> f64 {
        self.extremum(f64::min)
    }

    pub fn max_on_domain(&self) -> f64 {
        self.extremum(f64::max)
    }

    fn extremum(&self, pick: impl Fn(f64, f64) -> f64) -> f64 {
        let mut best = None::<f64>;
        for (i, piece) in self.pieces.iter().enumerate() {
            let (a, b) = (self.breaks[i], self.breaks[i + 1]);
            let mut candidates = vec![a, b];
            candidates.extend(piece.critical_points(a, b));
            for x in candidates {
                let v = piece.eval(x);
                best = Some(match best {
                    None => v,
                    Some(acc) => pick(acc, v),
                });
            }
        }
        best.unwrap()
    }
}
