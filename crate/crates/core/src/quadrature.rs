//! Globally adaptive Gauss–Kronrod (7/15) quadrature and compensated sums.

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
mod nodes {
    // Kronrod abscissae (positive half, descending) and weights; the odd-indexed
    // nodes are the embedded 7-point Gauss rule.
    pub(super) const XGK: [f64; 8] = [
        0.991455371120812639206854697526329,
        0.949107912342758524526189684047851,
        0.864864423359769072789712788640926,
        0.741531185599394439863864773280788,
        0.586087235467691130294144845693013,
        0.405845151377397166906606412076961,
        0.207784955007898467600689403773245,
        0.0,
    ];
    pub(super) const WGK: [f64; 8] = [
        0.022935322010529224963732008058970,
        0.063092092629978553290700663189204,
        0.104790010322250183839876322541518,
        0.140653259715525918745189590510238,
        0.169004726639267902826583426598550,
        0.190350578064785409913256402421014,
        0.204432940075298892414161999234649,
        0.209482141084727828012999174891714,
    ];
    pub(super) const WG: [f64; 4] = [
        0.129484966168869693270611432679082,
        0.279705391489276667901467771423780,
        0.381830050505118944950369775488975,
        0.417959183673469387755102040816327,
    ];
}
use nodes::{WG, WGK, XGK};

/// Maximum number of subintervals before giving up.
pub const MAX_INTERVALS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of per-interval |Kronrod − Gauss| estimates.
    pub error: f64,
    pub intervals: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Segment {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    }
}

/// Integrates `f` over `[a, b]` to absolute error `abs_tol`.
///
/// The integrand is never evaluated at the endpoints, so integrable
/// endpoint singularities such as `1/√x` are fine.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<Quadrature> {
    if !(abs_tol > 0.0) {
        return Err(Error::Config(format!(
            "quadrature tolerance must be > 0, got {abs_tol}"
        )));
    }
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let mut segments = vec![gk15(&f, a, b)];
    loop {
        let error: f64 = compensated_sum(segments.iter().map(|s| s.error));
        if error <= abs_tol || !error.is_finite() {
            break;
        }
        if segments.len() >= MAX_INTERVALS {
            return Err(Error::Tolerance {
                requested: abs_tol,
                achieved: error,
            });
        }
        let (worst, _) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .expect("non-empty");
        let s = segments.swap_remove(worst);
        let mid = 0.5 * (s.a + s.b);
        if mid <= s.a || mid >= s.b {
            // Interval cannot be split further in floating point.
            segments.push(s);
            let achieved = compensated_sum(segments.iter().map(|s| s.error));
            return Err(Error::Tolerance {
                requested: abs_tol,
                achieved,
            });
        }
        segments.push(gk15(&f, s.a, mid));
        segments.push(gk15(&f, mid, s.b));
    }
    let value = compensated_sum(segments.iter().map(|s| s.value));
    let error = compensated_sum(segments.iter().map(|s| s.error));
    if !value.is_finite() || !error.is_finite() {
        return Err(Error::Tolerance {
            requested: abs_tol,
            achieved: f64::INFINITY,
        });
    }
    Ok(Quadrature {
        value,
        error,
        intervals: segments.len(),
    })
}

/// Neumaier-compensated summation.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for x in terms {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            carry += (sum - t) + x;
        } else {
            carry += (x - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Trapezoidal weights for a (possibly non-uniform) ordered grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 1..n {
        let h = 0.5 * (grid[i] - grid[i - 1]);
        w[i - 1] += h;
        w[i] += h;
    }
    w
}
