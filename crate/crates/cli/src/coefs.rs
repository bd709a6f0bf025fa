//! Classical per-segment linear fits used to prepare piecewise-linear
//! coefficient tables.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegenerateSegment {
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Display for DegenerateSegment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "degenerate segment [{}, {}]: bounds must satisfy lo < hi", self.lo, self.hi)
    }
}

impl std::error::Error for DegenerateSegment {}

/// Uniform partition of `[lo, hi]` into `segments` pieces: n+1 bounds.
pub fn uniform_bounds(lo: f64, hi: f64, segments: u32) -> Vec<f64> {
    (0..=segments).map(|i| lo + (hi - lo) * i as f64 / segments as f64).collect()
}

/// Endpoint interpolation: given samples (x_i, f(x_i)) at consecutive
/// segment endpoints, the line through each pair of neighbors, as
/// `(a, b)` with f_i(x) = a·x + b on [x_i, x_{i+1}].
pub fn linear_coefs(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, DegenerateSegment> {
    samples
        .windows(2)
        .map(|w| {
            let ((lo, flo), (hi, fhi)) = (w[0], w[1]);
            if !(hi > lo) {
                return Err(DegenerateSegment { lo, hi });
            }
            let a = (fhi - flo) / (hi - lo);
            Ok((a, flo - a * lo))
        })
        .collect()
}

/// Two-node Chebyshev fit: the line through f at the two Chebyshev nodes
/// of each segment (equioscillating for the degree-1 truncation).
pub fn chebyshev_coefs(
    f: impl Fn(f64) -> f64,
    bounds: &[f64],
) -> Result<Vec<(f64, f64)>, DegenerateSegment> {
    bounds
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) {
                return Err(DegenerateSegment { lo, hi });
            }
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let t = std::f64::consts::FRAC_1_SQRT_2; // cos(pi/4)
            let (x1, x2) = (mid - half * t, mid + half * t);
            let (f1, f2) = (f(x1), f(x2));
            let a = (f2 - f1) / (x2 - x1);
            Ok((a, f1 - a * x1))
        })
        .collect()
}

/// Endpoint-interpolation coefficients for f over a uniform partition.
pub fn sampled_coefs(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    segments: u32,
) -> Result<Vec<(f64, f64)>, DegenerateSegment> {
    let samples: Vec<(f64, f64)> =
        uniform_bounds(lo, hi, segments).into_iter().map(|x| (x, f(x))).collect();
    linear_coefs(&samples)
}
