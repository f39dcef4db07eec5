//! Self-generated potentials of the state.
//!
//! Both the scalar potential `φ` and the axial vector potential `a_z` share
//! the radial factor
//!
//! ```text
//! I(ρ) = ∫₀^ρ (1 − e^{−2q⊥x})/x dx = γ_E + ln(2q⊥ρ) + E₁(2q⊥ρ)
//! ```
//!
//! which is available through adaptive quadrature and through the
//! exponential integral; the two paths check each other. `φ(0) = 0` fixes the
//! gauge, and the logarithmic growth at large ρ (a line source) is kept as is.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::observables::TildeFactors;
use crate::quadrature;
use crate::specfun::{e1, ein, EULER_GAMMA};
use crate::state::{validate_grid, RadialProfile, StateParams};

/// CODATA 2018 fine-structure constant.
pub const FINE_STRUCTURE: f64 = 7.297_352_569_3e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Couplings {
    pub alpha_f: f64,
    pub ell_z: f64,
}

impl Couplings {
    /// `alpha_f = 0` is accepted and switches the fields off.
    pub fn new(alpha_f: f64, ell_z: f64) -> Result<Self> {
        if !(alpha_f >= 0.0) || !alpha_f.is_finite() {
            return Err(domain("alpha_f", alpha_f, "must be finite and >= 0"));
        }
        if !(ell_z > 0.0) || !ell_z.is_finite() {
            return Err(domain("ell_z", ell_z, "must be finite and > 0"));
        }
        Ok(Self { alpha_f, ell_z })
    }

    /// Physical coupling with a configurable quantization length.
    pub fn physics(ell_z: f64) -> Result<Self> {
        Self::new(FINE_STRUCTURE, ell_z)
    }

    /// `alpha_f = ell_z = 1`, which makes field effects O(1).
    pub fn test() -> Self {
        Self {
            alpha_f: 1.0,
            ell_z: 1.0,
        }
    }

    /// `α_f/ℓ_z`, the overall strength of both potentials.
    pub fn strength(&self) -> f64 {
        self.alpha_f / self.ell_z
    }
}

fn check_q_perp(q_perp: f64) -> Result<()> {
    if q_perp > 0.0 && q_perp.is_finite() {
        Ok(())
    } else {
        Err(domain("q_perp", q_perp, "must be finite and > 0"))
    }
}

/// Integrand of `I(ρ)` with its `x → 0` limit `2q⊥`.
pub fn potential_integrand(q_perp: f64, x: f64) -> f64 {
    if x == 0.0 {
        2.0 * q_perp
    } else {
        -(-2.0 * q_perp * x).exp_m1() / x
    }
}

/// `I(ρ)` by adaptive quadrature to absolute error `tol`.
pub fn potential_integral_quadrature(q_perp: f64, rho: f64, tol: f64) -> Result<f64> {
    check_q_perp(q_perp)?;
    if !(rho >= 0.0) || !rho.is_finite() {
        return Err(domain("rho", rho, "must be finite and >= 0"));
    }
    let q = quadrature::integrate(|x| potential_integrand(q_perp, x), 0.0, rho, tol)?;
    Ok(q.value)
}

/// `I(ρ) = γ_E + ln(2q⊥ρ) + E₁(2q⊥ρ)`.
pub fn potential_integral_special(q_perp: f64, rho: f64) -> Result<f64> {
    check_q_perp(q_perp)?;
    if !(rho > 0.0) || !rho.is_finite() {
        return Err(domain("rho", rho, "must be finite and > 0"));
    }
    let x = 2.0 * q_perp * rho;
    if x < 1.0 {
        // Same identity, summed directly: E₁(x) = −γ_E − ln x + Ein(x).
        Ok(ein(x))
    } else {
        Ok(EULER_GAMMA + x.ln() + e1(x))
    }
}

/// The potentials `φ(ρ) = −(α_f/ℓ_z)·ñ·I(ρ)` and `a_z(ρ) = −(α_f/ℓ_z)·ν̃_z·I(ρ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldPotentials {
    q_perp: f64,
    phi_scale: f64,
    az_scale: f64,
}

impl FieldPotentials {
    /// Shared radial factor; `I(0) = 0`.
    pub fn integral(&self, rho: f64) -> f64 {
        if rho == 0.0 {
            0.0
        } else {
            potential_integral_special(self.q_perp, rho).unwrap_or(f64::NAN)
        }
    }

    pub fn phi(&self, rho: f64) -> f64 {
        self.phi_scale * self.integral(rho)
    }

    pub fn a_z(&self, rho: f64) -> f64 {
        self.az_scale * self.integral(rho)
    }

    /// Coefficient multiplying `I(ρ)` in `φ`.
    pub fn phi_scale(&self) -> f64 {
        self.phi_scale
    }

    pub fn az_scale(&self) -> f64 {
        self.az_scale
    }
}

pub fn make_potentials(
    params: &StateParams,
    couplings: &Couplings,
    tilde: &TildeFactors,
) -> FieldPotentials {
    let s = couplings.strength();
    FieldPotentials {
        q_perp: params.q_perp(),
        phi_scale: -s * tilde.n_t,
        az_scale: -s * tilde.nu_z,
    }
}

/// Source terms `S(ρ) = (2α_f c q⊥/ℓ_z)·e^{−2q⊥ρ}/ρ` of the radial equations
/// `f'' + f'/ρ + S = 0`, with `c = ñ` for `φ` and `c = ν̃_z` for `a_z`.
pub fn source(params: &StateParams, couplings: &Couplings, factor: f64, rho: f64) -> f64 {
    let q = params.q_perp();
    2.0 * couplings.strength() * factor * q * (-2.0 * q * rho).exp() / rho
}

/// Minimum number of grid points accepted by the residual routines.
pub const MIN_ODE_POINTS: usize = 5;

/// Validates a uniform grid and returns its spacing.
pub fn uniform_spacing(grid: &[f64], min_points: usize) -> Result<f64> {
    validate_grid(grid)?;
    if grid.len() < min_points {
        return Err(Error::Grid(format!(
            "need at least {min_points} points, got {}",
            grid.len()
        )));
    }
    let h = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    let uniform = grid
        .windows(2)
        .all(|p| ((p[1] - p[0]) - h).abs() <= 1e-9 * h.max(grid[grid.len() - 1]));
    if !uniform {
        return Err(Error::Grid("grid spacing must be uniform".into()));
    }
    Ok(h)
}

/// First and second derivative of `f` at `rho` with step `h`: central
/// differences, or a second-order forward stencil when `rho − h ≤ 0`.
pub(crate) fn fd_derivatives<F: Fn(f64) -> f64>(f: &F, rho: f64, h: f64) -> (f64, f64) {
    if rho - h > 0.0 {
        let (fm, f0, fp) = (f(rho - h), f(rho), f(rho + h));
        ((fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
    } else {
        let (f0, f1, f2, f3) = (f(rho), f(rho + h), f(rho + 2.0 * h), f(rho + 3.0 * h));
        (
            (-3.0 * f0 + 4.0 * f1 - f2) / (2.0 * h),
            (2.0 * f0 - 5.0 * f1 + 4.0 * f2 - f3) / (h * h),
        )
    }
}

/// `f'' + f'/ρ + S(ρ)` by finite differences on a uniform grid.
pub fn radial_laplacian_residual<F, S>(f: F, source: S, rho_grid: &[f64]) -> Result<RadialProfile>
where
    F: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let h = uniform_spacing(rho_grid, MIN_ODE_POINTS)?;
    let values = rho_grid
        .iter()
        .map(|&rho| {
            let (d1, d2) = fd_derivatives(&f, rho, h);
            d2 + d1 / rho + source(rho)
        })
        .collect();
    RadialProfile::new(rho_grid.to_vec(), values)
}

/// Finite-difference residuals of the radial equations for `φ` and `a_z`.
pub fn ode_residual(
    params: &StateParams,
    couplings: &Couplings,
    tilde: &TildeFactors,
    rho_grid: &[f64],
) -> Result<(RadialProfile, RadialProfile)> {
    let pot = make_potentials(params, couplings, tilde);
    let res_phi = radial_laplacian_residual(
        |r| pot.phi(r),
        |r| source(params, couplings, tilde.n_t, r),
        rho_grid,
    )?;
    let res_az = radial_laplacian_residual(
        |r| pot.a_z(r),
        |r| source(params, couplings, tilde.nu_z, r),
        rho_grid,
    )?;
    Ok((res_phi, res_az))
}
