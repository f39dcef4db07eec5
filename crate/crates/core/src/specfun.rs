//! Exponential integrals.

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const MAX_TERMS: usize = 500;

/// `Ein(x) = ∫₀ˣ (1 − e^{−t})/t dt = Σ_{k≥1} (−1)^{k+1} xᵏ/(k·k!)`.
///
/// Entire and well conditioned for small `x`; used below `x = 1`.
pub fn ein(x: f64) -> f64 {
    let mut term = 1.0; // x^k / k!
    let mut sum = 0.0;
    for k in 1..MAX_TERMS {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = -term / kf;
        sum += contrib;
        if contrib.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    sum
}

/// Exponential integral `E₁(x) = ∫ₓ^∞ e^{−t}/t dt` for `x > 0`.
///
/// Power series below 1, modified-Lentz continued fraction above.
/// Returns NaN for `x ≤ 0`.
pub fn e1(x: f64) -> f64 {
    if !(x > 0.0) {
        return f64::NAN;
    }
    if x < 1.0 {
        return -EULER_GAMMA - x.ln() + ein(x);
    }
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_TERMS {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h * (-x).exp()
}
