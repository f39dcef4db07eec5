//! The semi-localized axial state: validated parameters, the `w`/`v`
//! spinor pairs, the radial profile and full bispinor evaluation.
//!
//! All lengths are in Compton wavelengths and energies in units of the rest
//! energy. The radial density is normalized for every parameter set, so it
//! carries an extra factor `2/ñ` relative to the bare exponential profile;
//! the two agree exactly on the self-consistent state where `ñ = 2`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::algebra::{Complex, Matrix2C, SpinorPair, I};
use crate::error::{domain, Error, Result};
use crate::observables;

/// Azimuthal exponents of the four components: `(w₁, w₂, v₁, v₂) ∝ e^{i m α}`.
pub const HALF_PHASES: [f64; 4] = [-0.5, 0.5, -0.5, 0.5];

/// Validated state parameters with cached wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateParams {
    epsilon: f64,
    beta: f64,
    theta: f64,
    phi: f64,
    ell_z: f64,
    q_z: f64,
    q_perp: f64,
}

impl StateParams {
    pub fn new(epsilon: f64, beta: f64, theta: f64, phi: f64, ell_z: f64) -> Result<Self> {
        if !(epsilon > 1.0) || !epsilon.is_finite() {
            return Err(domain("epsilon", epsilon, "must be finite and > 1"));
        }
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(domain("beta", beta, "must be finite and > 0"));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(domain("theta", theta, "must lie in [0, pi]"));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(domain("phi", phi, "must lie in [0, 2pi)"));
        }
        if !(ell_z > 0.0) || !ell_z.is_finite() {
            return Err(domain("ell_z", ell_z, "must be finite and > 0"));
        }
        let root = momentum_scale(epsilon);
        let half = 0.5 * beta;
        Ok(Self {
            epsilon,
            beta,
            theta,
            phi,
            ell_z,
            q_z: root * half.cosh(),
            q_perp: root * half.sinh(),
        })
    }

    /// The closed-form self-consistent state for a given energy:
    /// `θ = π/2`, `φ = 3π/2`, `tanh(β/2) = 1/ε`.
    pub fn self_consistent(epsilon: f64, ell_z: f64) -> Result<Self> {
        if !(epsilon > 1.0) {
            return Err(domain("epsilon", epsilon, "must be > 1"));
        }
        Self::new(
            epsilon,
            2.0 * (1.0 / epsilon).atanh(),
            FRAC_PI_2,
            3.0 * FRAC_PI_2,
            ell_z,
        )
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn ell_z(&self) -> f64 {
        self.ell_z
    }
    pub fn q_z(&self) -> f64 {
        self.q_z
    }
    pub fn q_perp(&self) -> f64 {
        self.q_perp
    }

    /// `√((ε−1)/(ε+1))`, the small-to-large component ratio scale.
    pub fn lower_scale(&self) -> f64 {
        ((self.epsilon - 1.0) / (self.epsilon + 1.0)).sqrt()
    }

    /// `q_z² − q⊥² − (ε² − 1)`; zero up to rounding.
    pub fn dispersion_residual(&self) -> f64 {
        (self.q_z - self.q_perp) * (self.q_z + self.q_perp)
            - (self.epsilon - 1.0) * (self.epsilon + 1.0)
    }

    pub fn with_ell_z(&self, ell_z: f64) -> Result<Self> {
        Self::new(self.epsilon, self.beta, self.theta, self.phi, ell_z)
    }
}

/// `√(ε² − 1)` without cancellation near `ε = 1`.
pub(crate) fn momentum_scale(epsilon: f64) -> f64 {
    ((epsilon - 1.0) * (epsilon + 1.0)).sqrt()
}

/// Convenience wrapper matching the parameter order of the state tuple.
pub fn make_state(
    epsilon: f64,
    beta: f64,
    theta: f64,
    phi: f64,
    ell_z: f64,
) -> Result<StateParams> {
    StateParams::new(epsilon, beta, theta, phi, ell_z)
}

/// `(cos(θ/2), sin(θ/2)·e^{iφ})`.
pub fn spinor_w(params: &StateParams) -> SpinorPair {
    let half = 0.5 * params.theta;
    SpinorPair::new(
        Complex::new(half.cos(), 0.0),
        Complex::from_polar(half.sin(), params.phi),
    )
}

/// `v = √((ε−1)/(ε+1)) · [[cosh(β/2), i sinh(β/2)], [i sinh(β/2), −cosh(β/2)]] · w`.
pub fn spinor_v(params: &StateParams, w: &SpinorPair) -> SpinorPair {
    let half = 0.5 * params.beta;
    let ch = Complex::new(half.cosh(), 0.0);
    let ish = I * half.sinh();
    let m = Matrix2C::from_rows([[ch, ish], [ish, -ch]]);
    m.scale(params.lower_scale().into()).apply_pair(w)
}

/// `Q = [[q_z, i q⊥], [i q⊥, −q_z]]`, the transverse-longitudinal momentum
/// matrix that `σ·p̂` reduces to on this ansatz.
pub fn momentum_matrix(params: &StateParams) -> Matrix2C {
    let qz = Complex::new(params.q_z, 0.0);
    let iq = I * params.q_perp;
    Matrix2C::from_rows([[qz, iq], [iq, -qz]])
}

/// The same `v`, written as `Q·w/(ε+1)`.
pub fn spinor_v_from_wavenumbers(params: &StateParams, w: &SpinorPair) -> SpinorPair {
    momentum_matrix(params)
        .scale((1.0 / (params.epsilon + 1.0)).into())
        .apply_pair(w)
}

/// Upper/lower pair of a constructed state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bispinor {
    pub w: SpinorPair,
    pub v: SpinorPair,
}

impl Bispinor {
    pub fn for_state(params: &StateParams) -> Self {
        let w = spinor_w(params);
        let v = spinor_v(params, &w);
        Self { w, v }
    }

    /// `(w₁, w₂, v₁, v₂)`.
    pub fn amplitudes(&self) -> [Complex; 4] {
        [self.w.c1, self.w.c2, self.v.c1, self.v.c2]
    }
}

fn check_rho(rho: f64) -> Result<()> {
    if rho > 0.0 && rho.is_finite() {
        Ok(())
    } else {
        Err(domain("rho", rho, "must be finite and > 0"))
    }
}

/// `|ψ(ρ)|²` in units of `λ_c⁻³`, normalized so that
/// `∫ ñ |ψ|² 2πρ dρ ℓ_z = 1`.
pub fn radial_psi_sq(params: &StateParams, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let n_t = observables::density_factor(params);
    let q = params.q_perp;
    Ok((2.0 / n_t) * (q / (TAU * params.ell_z)) * (-2.0 * rho * q).exp() / rho)
}

/// Positive square root of [`radial_psi_sq`].
pub fn radial_psi(params: &StateParams, rho: f64) -> Result<f64> {
    radial_psi_sq(params, rho).map(f64::sqrt)
}

/// `dψ/dρ = −(q⊥ + 1/(2ρ))·ψ`.
pub fn radial_psi_derivative(params: &StateParams, rho: f64) -> Result<f64> {
    Ok(-(params.q_perp + 0.5 / rho) * radial_psi(params, rho)?)
}

/// A point in Compton-unit cylindrical coordinates, off the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CylPoint {
    pub rho: f64,
    pub alpha: f64,
    pub z: f64,
    pub t: f64,
}

impl CylPoint {
    pub fn new(rho: f64, alpha: f64, z: f64, t: f64) -> Result<Self> {
        check_rho(rho)?;
        Ok(Self { rho, alpha, z, t })
    }
}

/// Phase factor `e^{i m_k α} e^{i(q_z z − ε t)}` of component `k`.
pub(crate) fn component_phase(
    params: &StateParams,
    k: usize,
    alpha: f64,
    z: f64,
    t: f64,
) -> Complex {
    Complex::from_polar(
        1.0,
        HALF_PHASES[k] * alpha + params.q_z * z - params.epsilon * t,
    )
}

/// The four bispinor components at `point`.
pub fn eval_bispinor(params: &StateParams, point: &CylPoint) -> Result<[Complex; 4]> {
    let psi = radial_psi(params, point.rho)?;
    let amps = Bispinor::for_state(params).amplitudes();
    Ok(std::array::from_fn(|k| {
        amps[k] * psi * component_phase(params, k, point.alpha, point.z, point.t)
    }))
}

/// A function of ρ sampled on a strictly increasing positive grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile<T = f64> {
    rho: Vec<f64>,
    values: Vec<T>,
}

impl<T> RadialProfile<T> {
    pub fn new(rho: Vec<f64>, values: Vec<T>) -> Result<Self> {
        validate_grid(&rho)?;
        if rho.len() != values.len() {
            return Err(Error::Grid(format!(
                "{} grid points but {} values",
                rho.len(),
                values.len()
            )));
        }
        Ok(Self { rho, values })
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &T)> {
        self.rho.iter().copied().zip(&self.values)
    }
}

impl RadialProfile<f64> {
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn validate_grid(rho: &[f64]) -> Result<()> {
    if rho.is_empty() {
        return Err(Error::Grid("grid is empty".into()));
    }
    if !rho.iter().all(|r| r.is_finite() && *r > 0.0) {
        return Err(Error::Grid("grid points must be finite and > 0".into()));
    }
    if rho.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::Grid("grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `points` uniformly spaced samples from `rho_min` to `rho_max` inclusive.
pub fn uniform_grid(rho_min: f64, rho_max: f64, points: usize) -> Result<Vec<f64>> {
    if points < 2 {
        return Err(Error::Grid(format!("need at least 2 points, got {points}")));
    }
    if !(rho_min > 0.0) || !(rho_max > rho_min) || !rho_max.is_finite() {
        return Err(Error::Grid(format!(
            "need 0 < rho_min < rho_max, got [{rho_min}, {rho_max}]"
        )));
    }
    let h = (rho_max - rho_min) / (points - 1) as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| rho_min + i as f64 * h).collect();
    grid[points - 1] = rho_max;
    Ok(grid)
}
