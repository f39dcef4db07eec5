//! Free and interacting Dirac operators applied to the constructed state on a
//! radial grid.
//!
//! Only the radial derivative is taken numerically (or analytically from
//! `ψ' = −(q⊥ + 1/(2ρ))ψ`); the α, z and t dependence is `e^{∓iα/2}` and
//! `e^{i(q_z z − εt)}` exactly, so those derivatives are applied as
//! multipliers.

use serde::{Deserialize, Serialize};

use crate::algebra::{gamma, norm4, Complex, GammaIndex, I};
use crate::error::{Error, Result};
use crate::fields::{fd_derivatives, make_potentials, Couplings, FieldPotentials};
use crate::observables::tilde_closed_form;
use crate::quadrature::{compensated_sum, trapezoid_weights};
use crate::state::{
    component_phase, radial_psi, radial_psi_derivative, uniform_grid, Bispinor, RadialProfile,
    StateParams, HALF_PHASES,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    CentralFd,
}

pub const MIN_GRID_POINTS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rho_min: f64,
    pub rho_max: f64,
    pub points: usize,
    pub derivative_mode: DerivativeMode,
}

impl GridSpec {
    pub fn new(
        rho_min: f64,
        rho_max: f64,
        points: usize,
        derivative_mode: DerivativeMode,
    ) -> Result<Self> {
        if points < MIN_GRID_POINTS {
            return Err(Error::Grid(format!(
                "need at least {MIN_GRID_POINTS} points, got {points}"
            )));
        }
        if !(rho_min > 0.0) || !(rho_max > rho_min) || !rho_max.is_finite() {
            return Err(Error::Grid(format!(
                "need 0 < rho_min < rho_max, got [{rho_min}, {rho_max}]"
            )));
        }
        Ok(Self {
            rho_min,
            rho_max,
            points,
            derivative_mode,
        })
    }

    /// `[1e-3, 20/q⊥]` with 2048 points.
    pub fn default_for(params: &StateParams, derivative_mode: DerivativeMode) -> Self {
        Self {
            rho_min: 1e-3,
            rho_max: 20.0 / params.q_perp(),
            points: 2048,
            derivative_mode,
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.rho_max - self.rho_min) / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> Result<Vec<f64>> {
        uniform_grid(self.rho_min, self.rho_max, self.points)
    }

    /// Same range with the spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            points: 2 * self.points - 1,
            ..*self
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualOutcome {
    /// `‖R‖/‖Ψ‖` in the discrete `ρ dρ`-weighted L² norm.
    pub rel_norm: f64,
    /// `|R(ρ)|` at each node.
    pub profile: RadialProfile,
}

/// `σ·∇` on a two-component field in cylindrical form:
///
/// ```text
/// [ ∂z                      e^{−iα}(∂ρ − i∂α/ρ) ]
/// [ e^{iα}(∂ρ + i∂α/ρ)      −∂z                  ]
/// ```
///
/// Each derivative argument is `[∂ of component 1, ∂ of component 2]`.
pub fn sigma_dot_grad(
    d_rho: [Complex; 2],
    d_alpha: [Complex; 2],
    d_z: [Complex; 2],
    rho: f64,
    alpha: f64,
) -> [Complex; 2] {
    let down = Complex::from_polar(1.0, -alpha);
    let up = Complex::from_polar(1.0, alpha);
    [
        d_z[0] + down * (d_rho[1] - I * d_alpha[1] / rho),
        up * (d_rho[0] + I * d_alpha[0] / rho) - d_z[1],
    ]
}

/// Bispinor and Dirac residual at one point.
fn residual_at(
    params: &StateParams,
    amps: &[Complex; 4],
    potentials: Option<&FieldPotentials>,
    rho: f64,
    alpha: f64,
    dpsi: f64,
) -> Result<([Complex; 4], [Complex; 4])> {
    let psi_r = radial_psi(params, rho)?;
    let (z, t) = (0.0, 0.0);
    let phase: [Complex; 4] = std::array::from_fn(|k| component_phase(params, k, alpha, z, t));
    let psi: [Complex; 4] = std::array::from_fn(|k| amps[k] * psi_r * phase[k]);
    let d_rho: [Complex; 4] = std::array::from_fn(|k| amps[k] * dpsi * phase[k]);
    let d_alpha: [Complex; 4] = std::array::from_fn(|k| I * HALF_PHASES[k] * psi[k]);
    let d_z: [Complex; 4] = std::array::from_fn(|k| I * params.q_z() * psi[k]);
    let d_t: [Complex; 4] = std::array::from_fn(|k| -I * params.epsilon() * psi[k]);

    // γ·∇Ψ = (σ·∇V, −σ·∇W)
    let grad_w = sigma_dot_grad(
        [d_rho[0], d_rho[1]],
        [d_alpha[0], d_alpha[1]],
        [d_z[0], d_z[1]],
        rho,
        alpha,
    );
    let grad_v = sigma_dot_grad(
        [d_rho[2], d_rho[3]],
        [d_alpha[2], d_alpha[3]],
        [d_z[2], d_z[3]],
        rho,
        alpha,
    );
    let gamma_grad = [grad_v[0], grad_v[1], -grad_w[0], -grad_w[1]];

    // (p̂₀γ⁰ − p̂·γ − 1)Ψ with p̂₀ = i∂t, p̂ = −i∇
    let g0_dt = gamma(GammaIndex::T).apply(&d_t);
    let mut r: [Complex; 4] = std::array::from_fn(|k| I * g0_dt[k] + I * gamma_grad[k] - psi[k]);

    if let Some(pot) = potentials {
        // −φγ⁰Ψ + a_z γ^zΨ
        let g0 = gamma(GammaIndex::T).apply(&psi);
        let gz = gamma(GammaIndex::Z).apply(&psi);
        let (phi, az) = (pot.phi(rho), pot.a_z(rho));
        for k in 0..4 {
            r[k] += -phi * g0[k] + az * gz[k];
        }
    }
    Ok((psi, r))
}

/// Dirac residual of an arbitrary `(w, v)` pair carried by the state's
/// radial and plane-wave factors, with optional potentials, at azimuth
/// `alpha`.
pub fn dirac_residual(
    params: &StateParams,
    bispinor: &Bispinor,
    potentials: Option<&FieldPotentials>,
    grid: &GridSpec,
    alpha: f64,
) -> Result<ResidualOutcome> {
    let nodes = grid.nodes()?;
    let h = grid.spacing();
    let amps = bispinor.amplitudes();
    let weights = trapezoid_weights(&nodes);

    let mut res_sq = Vec::with_capacity(nodes.len());
    let mut psi_sq = Vec::with_capacity(nodes.len());
    let mut profile = Vec::with_capacity(nodes.len());
    for (&rho, &w) in nodes.iter().zip(&weights) {
        let dpsi = match grid.derivative_mode {
            DerivativeMode::Analytic => radial_psi_derivative(params, rho)?,
            DerivativeMode::CentralFd => {
                let f = |r: f64| radial_psi(params, r).unwrap_or(f64::NAN);
                fd_derivatives(&f, rho, h).0
            }
        };
        let (psi, r) = residual_at(params, &amps, potentials, rho, alpha, dpsi)?;
        let rn = norm4(&r);
        res_sq.push(w * rho * rn * rn);
        psi_sq.push(w * rho * norm4(&psi).powi(2));
        profile.push(rn);
    }
    let rel_norm = (compensated_sum(res_sq) / compensated_sum(psi_sq)).sqrt();
    Ok(ResidualOutcome {
        rel_norm,
        profile: RadialProfile::new(nodes, profile)?,
    })
}

pub fn free_dirac_residual(params: &StateParams, grid: &GridSpec) -> Result<ResidualOutcome> {
    dirac_residual(params, &Bispinor::for_state(params), None, grid, 0.0)
}

/// Residual with the potentials the state itself generates.
pub fn interacting_dirac_residual(
    params: &StateParams,
    couplings: &Couplings,
    grid: &GridSpec,
) -> Result<ResidualOutcome> {
    let pot = make_potentials(params, couplings, &tilde_closed_form(params));
    dirac_residual(params, &Bispinor::for_state(params), Some(&pot), grid, 0.0)
}

/// `(α_f/ℓ_z)` times the ψ-weighted RMS of `I(ρ)` over the grid; the natural
/// size of the interaction terms in a relative residual.
pub fn potential_scale(
    params: &StateParams,
    couplings: &Couplings,
    grid: &GridSpec,
) -> Result<f64> {
    let nodes = grid.nodes()?;
    let weights = trapezoid_weights(&nodes);
    let pot = make_potentials(params, couplings, &tilde_closed_form(params));
    let mut num = Vec::with_capacity(nodes.len());
    let mut den = Vec::with_capacity(nodes.len());
    for (&rho, &w) in nodes.iter().zip(&weights) {
        let p2 = radial_psi(params, rho)?.powi(2);
        num.push(w * rho * p2 * pot.integral(rho).powi(2));
        den.push(w * rho * p2);
    }
    Ok(couplings.strength() * (compensated_sum(num) / compensated_sum(den)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{pauli, Axis};
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn cylindrical_operator_matches_cartesian() {
        // Cartesian σ·∇ from ∂x = cosα ∂ρ − sinα/ρ ∂α, ∂y = sinα ∂ρ + cosα/ρ ∂α.
        let c = |a: f64, b: f64| Complex::new(a, b);
        let d_rho = [c(0.3, -1.2), c(0.7, 0.4)];
        let d_alpha = [c(-0.5, 0.9), c(1.1, -0.2)];
        let d_z = [c(0.2, 0.1), c(-0.8, 0.6)];
        let (rho, alpha): (f64, f64) = (0.7, 2.3);
        let (sa, ca) = alpha.sin_cos();
        let dx: [Complex; 2] = std::array::from_fn(|k| d_rho[k] * ca - d_alpha[k] * sa / rho);
        let dy: [Complex; 2] = std::array::from_fn(|k| d_rho[k] * sa + d_alpha[k] * ca / rho);
        let sx = pauli(Axis::X).apply(&dx);
        let sy = pauli(Axis::Y).apply(&dy);
        let sz = pauli(Axis::Z).apply(&d_z);
        let got = sigma_dot_grad(d_rho, d_alpha, d_z, rho, alpha);
        for k in 0..2 {
            assert!((got[k] - (sx[k] + sy[k] + sz[k])).norm() < 1e-14);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(0.0, 1.0, 32, DerivativeMode::Analytic).is_err());
        assert!(GridSpec::new(1.0, 0.5, 32, DerivativeMode::Analytic).is_err());
        assert!(GridSpec::new(0.1, 1.0, 15, DerivativeMode::Analytic).is_err());
    }

    #[test]
    fn free_residual_vanishes_analytically() {
        let p = StateParams::new(1.7, 0.9, 1.2, 5.0, 3.0).unwrap();
        let g = GridSpec::default_for(&p, DerivativeMode::Analytic);
        assert!(free_dirac_residual(&p, &g).unwrap().rel_norm < 1e-12);
    }

    #[test]
    fn perturbed_lower_pair_is_detected() {
        let p = StateParams::new(2.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let mut b = Bispinor::for_state(&p);
        b.v = b.v.scale(Complex::new(1.01, 0.0));
        let g = GridSpec::default_for(&p, DerivativeMode::Analytic);
        let r = dirac_residual(&p, &b, None, &g, 0.0).unwrap();
        assert!(r.rel_norm >= 1e-3, "{}", r.rel_norm);
    }

    #[test]
    fn residual_magnitude_independent_of_azimuth() {
        let p = StateParams::new(2.0, 3f64.ln(), FRAC_PI_2, FRAC_PI_2, 1.0).unwrap();
        let pot = make_potentials(&p, &Couplings::test(), &tilde_closed_form(&p));
        let g = GridSpec::new(0.01, 10.0, 64, DerivativeMode::Analytic).unwrap();
        let b = Bispinor::for_state(&p);
        let base = dirac_residual(&p, &b, Some(&pot), &g, 0.0).unwrap();
        for alpha in [PI / 3.0, 2.0, 5.5] {
            let other = dirac_residual(&p, &b, Some(&pot), &g, alpha).unwrap();
            for (a, b) in base.profile.values().iter().zip(other.profile.values()) {
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }
}
