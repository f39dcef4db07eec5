//! Particle-density and flux prefactors of the state, evaluated both from
//! their closed forms and from the bispinor bilinears `Ψ̄γ⁰Ψ`, `Ψ̄γΨ`.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::algebra::{gamma, Complex, GammaIndex, Matrix4C};
use crate::error::{domain, Result};
use crate::quadrature;
use crate::state::{eval_bispinor, radial_psi_sq, CylPoint, StateParams};

/// ρ-independent prefactors of the density and the cylindrical flux
/// components, i.e. `n = ñ|ψ|²`, `ν_z = ν̃_z|ψ|²` and so on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TildeFactors {
    pub n_t: f64,
    pub nu_z: f64,
    pub nu_alpha: f64,
    pub nu_r: f64,
}

impl TildeFactors {
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        [
            self.n_t - other.n_t,
            self.nu_z - other.nu_z,
            self.nu_alpha - other.nu_alpha,
            self.nu_r - other.nu_r,
        ]
        .iter()
        .fold(0.0, |m, d| m.max(d.abs()))
    }
}

/// `ñ = 1 + ((ε−1)/(ε+1))·(cosh β − sinh β sinθ sinφ)`.
pub fn density_factor(params: &StateParams) -> f64 {
    let e = params.epsilon();
    let b = params.beta();
    let s = params.theta().sin() * params.phi().sin();
    1.0 + (e - 1.0) / (e + 1.0) * (b.cosh() - b.sinh() * s)
}

pub fn tilde_closed_form(params: &StateParams) -> TildeFactors {
    let k = params.lower_scale();
    let half = 0.5 * params.beta();
    let s = params.theta().sin() * params.phi().sin();
    TildeFactors {
        n_t: density_factor(params),
        nu_z: 2.0 * k * (half.cosh() - half.sinh() * s),
        nu_alpha: 2.0 * k * half.sinh() * params.theta().cos(),
        nu_r: 0.0,
    }
}

/// Azimuth used by [`tilde_from_bilinears`]; any value works, a generic one
/// keeps the cylindrical projection non-trivial.
pub const BILINEAR_AZIMUTH: f64 = 0.628_318_530_717_958_6;

fn bilinear(psi: &[Complex; 4], m: &Matrix4C) -> Complex {
    let mpsi = m.apply(psi);
    psi.iter().zip(&mpsi).map(|(a, b)| a.conj() * b).sum()
}

/// Tilde factors from the bilinears of the full bispinor at azimuth `alpha`.
///
/// The flux is projected on the local cylindrical basis,
/// `ν_α = −ν_x sinα + ν_y cosα`, `ν_r = ν_x cosα + ν_y sinα`, and the radial
/// factor `|ψ|²` is divided out.
pub fn tilde_from_bilinears_at(params: &StateParams, alpha: f64) -> Result<TildeFactors> {
    // Off-axis, off-origin point; the z and t phases must drop out.
    let point = CylPoint::new(1.0, alpha, 0.37, -0.21)?;
    let psi = eval_bispinor(params, &point)?;
    let norm = radial_psi_sq(params, point.rho)?;

    let g0 = gamma(GammaIndex::T);
    // Ψ̄ M Ψ = Ψ† γ⁰ M Ψ
    let n = bilinear(&psi, &(g0 * g0)).re / norm;
    let flux = |i: GammaIndex| bilinear(&psi, &(g0 * gamma(i))).re / norm;
    let (nx, ny, nz) = (
        flux(GammaIndex::X),
        flux(GammaIndex::Y),
        flux(GammaIndex::Z),
    );
    let (sa, ca) = alpha.sin_cos();
    Ok(TildeFactors {
        n_t: n,
        nu_z: nz,
        nu_alpha: -nx * sa + ny * ca,
        nu_r: nx * ca + ny * sa,
    })
}

pub fn tilde_from_bilinears(params: &StateParams) -> Result<TildeFactors> {
    tilde_from_bilinears_at(params, BILINEAR_AZIMUTH)
}

/// Smallest admissible `ρ_max·q⊥` for [`normalization`].
pub const MIN_TAIL_DECAY: f64 = 20.0;

/// `∫₀^{ρmax} ñ |ψ|² 2πρ dρ · ℓ_z`, which should be 1 up to
/// `quadrature_tol + e^{−2q⊥ρmax}`.
pub fn normalization(params: &StateParams, rho_max: f64, quadrature_tol: f64) -> Result<f64> {
    if !(rho_max * params.q_perp() >= MIN_TAIL_DECAY) {
        return Err(domain("rho_max", rho_max, "rho_max * q_perp must be >= 20"));
    }
    let n_t = density_factor(params);
    let ell = params.ell_z();
    let integrand = |rho: f64| n_t * radial_psi_sq(params, rho).unwrap_or(0.0) * TAU * rho * ell;
    Ok(quadrature::integrate(integrand, 0.0, rho_max, quadrature_tol)?.value)
}

/// Truncation bound `e^{−2q⊥ρmax}` for the normalization tail.
pub fn normalization_tail(params: &StateParams, rho_max: f64) -> f64 {
    (-2.0 * params.q_perp() * rho_max).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthDiagnostics {
    pub mean_rho: f64,
    pub rms_rho: f64,
    /// e-folding length of the density, `1/q⊥`.
    pub efold: f64,
}

/// Moments of the radial probability density `p(ρ) = 2q⊥ e^{−2q⊥ρ}`.
pub fn width_diagnostics(params: &StateParams) -> WidthDiagnostics {
    let q = params.q_perp();
    WidthDiagnostics {
        mean_rho: 0.5 / q,
        rms_rho: std::f64::consts::FRAC_1_SQRT_2 / q,
        efold: 1.0 / q,
    }
}
