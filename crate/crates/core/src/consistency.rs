//! Self-consistency of the state with its own field.
//!
//! Inserting the potentials back into the interacting equation leaves two
//! 2×2 linear systems for `w`. Because `φ` and `a_z` share the radial factor
//! `I(ρ)`, their solvability reduces to ρ-free conditions on the tilde
//! factors:
//!
//! * the azimuthal flux must vanish: `cos θ = 0`;
//! * `ε ñ = q_z ν̃_z` and `ñ² = q⊥² ν̃_z²`;
//! * `w` must then lie in the common null space,
//!   `ñ w₁ − i q⊥ν̃_z w₂ = 0`, `i q⊥ν̃_z w₁ + ñ w₂ = 0`.
//!
//! [`solve_consistency`] finds the root numerically and compares it with the
//! closed form `θ = π/2`, `φ = 3π/2`, `tanh(β/2) = 1/ε`, for which `q⊥ = 1`.
//!
//! The conditions depend on `φ` only through `sin φ`, which is stationary at
//! the root, so the Jacobian in `(φ, β)` is singular there. With
//! `s = sin φ` and `t = tanh(β/2)` the linear condition is linear in `s`;
//! the solver eliminates `s` with it and runs a one-dimensional Newton
//! iteration in `β` on the quadratic condition, then recovers `φ` from the
//! phase condition on `w`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};

use crate::algebra::{Complex, Matrix2C, I};
use crate::error::{domain, Error, Result};
use crate::observables::tilde_closed_form;
use crate::state::{momentum_scale, spinor_w, StateParams};

/// Default tolerance on the residual norm at the root.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;
/// Tolerance for matching the closed-form parameters.
pub const REPORT_TOL: f64 = 1e-9;

const MAX_NEWTON_STEPS: usize = 200;

/// The reduced matrices `(M₁, M₂)` for pointwise potential values; a
/// solution of the interacting equation needs `M₁w = M₂w = 0`.
pub fn reduced_system_matrices(
    params: &StateParams,
    phi_val: f64,
    az_val: f64,
) -> (Matrix2C, Matrix2C) {
    let e = params.epsilon();
    let diag_plus = Complex::new((e + 1.0) * phi_val - params.q_z() * az_val, 0.0);
    let diag_minus = Complex::new((e - 1.0) * phi_val - params.q_z() * az_val, 0.0);
    let off = I * (params.q_perp() * az_val);
    (
        Matrix2C::from_rows([[diag_plus, -off], [off, diag_plus]]),
        Matrix2C::from_rows([[diag_minus, off], [-off, diag_minus]]),
    )
}

/// Residuals of the consistency conditions with the common potential factor
/// divided out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionResiduals {
    /// `cos θ`
    pub azimuthal_flux: f64,
    /// `ε ñ − q_z ν̃_z`
    pub linear: f64,
    /// `ñ² − q⊥² ν̃_z²`
    pub quadratic: f64,
    /// `|ñ w₁ − i q⊥ ν̃_z w₂|`
    pub spinor_upper: f64,
    /// `|i q⊥ ν̃_z w₁ + ñ w₂|`
    pub spinor_lower: f64,
}

impl ConditionResiduals {
    pub fn norm(&self) -> f64 {
        [
            self.azimuthal_flux,
            self.linear,
            self.quadratic,
            self.spinor_upper,
            self.spinor_lower,
        ]
        .iter()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
    }
}

pub fn condition_residuals(params: &StateParams) -> ConditionResiduals {
    let t = tilde_closed_form(params);
    let w = spinor_w(params);
    let flux = params.q_perp() * t.nu_z;
    ConditionResiduals {
        azimuthal_flux: params.theta().cos(),
        linear: params.epsilon() * t.n_t - params.q_z() * t.nu_z,
        quadratic: t.n_t * t.n_t - flux * flux,
        spinor_upper: (w.c1 * t.n_t - I * flux * w.c2).norm(),
        spinor_lower: (I * flux * w.c1 + w.c2 * t.n_t).norm(),
    }
}

/// `sin φ` that satisfies the linear condition at `θ = π/2` for a given
/// `t = tanh(β/2)`, together with `ds/dt`.
///
/// With `k = (ε−1)/(ε+1)` and the condition multiplied by `1 − t²`, it reads
/// `ε A − 2(ε−1)(1 − t s) = 0` where `A = 1 − t² + k(1 + t² − 2ts)`.
fn linear_phase(epsilon: f64, t: f64) -> (f64, f64) {
    let k = (epsilon - 1.0) / (epsilon + 1.0);
    let num = 2.0 * (epsilon - 1.0) - epsilon * (1.0 - t * t + k * (1.0 + t * t));
    let den = 2.0 * k * t;
    let dnum = 2.0 * epsilon * t * (1.0 - k);
    (num / den, (dnum * den - num * 2.0 * k) / (den * den))
}

/// The quadratic condition on the curve where the linear one holds, as a
/// function of `β`: `G = (A/b)² − 4(ε−1)² t²` with `b = 1 − ts`.
///
/// Dividing by `b²` removes the spurious zero of `A² − 4(ε−1)²t²b²` at
/// `s = t = 1`. Returns `(G, dG/dβ, s, scale)` where `scale` bounds the
/// rounding error of `G`.
fn reduced_condition(epsilon: f64, beta: f64) -> (f64, f64, f64, f64) {
    let k = (epsilon - 1.0) / (epsilon + 1.0);
    let c = 4.0 * (epsilon - 1.0) * (epsilon - 1.0);
    let t = (0.5 * beta).tanh();
    let (s, ds) = linear_phase(epsilon, t);
    let a = 1.0 - t * t + k * (1.0 + t * t - 2.0 * t * s);
    let da = -2.0 * t + k * (2.0 * t - 2.0 * s - 2.0 * t * ds);
    let b = 1.0 - t * s;
    let db = -s - t * ds;
    let r = a / b;
    let g = r * r - c * t * t;
    let dg_dt = 2.0 * r * (da * b - a * db) / (b * b) - 2.0 * c * t;
    (g, dg_dt * 0.5 * (1.0 - t * t), s, r * r + c * t * t)
}

#[derive(Debug, Clone, Copy)]
struct Root {
    s: f64,
    beta: f64,
    iterations: usize,
}

/// Damped Newton on [`reduced_condition`] with `β` kept positive. Stops once
/// `|G|` is at rounding level; on failure returns the last `|G|/scale`.
fn newton(epsilon: f64, beta0: f64) -> std::result::Result<Root, f64> {
    let mut beta = beta0;
    let (mut g, mut dg, mut s, mut scale) = reduced_condition(epsilon, beta);
    for it in 0..MAX_NEWTON_STEPS {
        if !g.is_finite() {
            return Err(f64::INFINITY);
        }
        if g.abs() <= 16.0 * f64::EPSILON * scale {
            return Ok(Root {
                s,
                beta,
                iterations: it,
            });
        }
        if dg == 0.0 || !dg.is_finite() {
            return Err(g.abs() / scale);
        }
        let step = -g / dg;
        let mut lambda = 1.0;
        loop {
            let cand = beta + lambda * step;
            if cand > 0.0 && cand.is_finite() {
                let next = reduced_condition(epsilon, cand);
                if next.0.abs() < (1.0 - 1e-4 * lambda) * g.abs() {
                    beta = cand;
                    (g, dg, s, scale) = next;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-10 {
                return Err(g.abs() / scale);
            }
        }
    }
    Err(g.abs() / scale)
}

/// Phase `φ ∈ [0, 2π)` that puts `w` in the null space of the first spinor
/// condition, `e^{iφ} tan(θ/2) = ñ/(i q⊥ ν̃_z)`.
fn spinor_phase(n_t: f64, flux: f64, theta: f64) -> f64 {
    let ratio = Complex::new(n_t, 0.0) / (I * flux) / (0.5 * theta).tan();
    let phi = ratio.arg().rem_euclid(TAU);
    if phi >= TAU {
        0.0
    } else {
        phi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub epsilon: f64,
    pub theta_star: f64,
    pub phi_star: f64,
    pub beta_star: f64,
    pub q_perp_star: f64,
    /// Euclidean norm of all condition residuals at the root.
    pub residual_norm: f64,
    pub matched_closed_form: bool,
    pub residuals: ConditionResiduals,
    /// Multi-start node `(φ, β)` the root was reached from.
    pub start: (f64, f64),
    pub iterations: usize,
}

/// Deterministic multi-start nodes `(φ, β)`: 8 azimuths times 8 values of β
/// in `(0, 4]`.
pub fn multistart_grid() -> Vec<(f64, f64)> {
    let mut nodes = Vec::with_capacity(64);
    for j in 1..=8 {
        for i in 0..8 {
            nodes.push((TAU * i as f64 / 8.0, 4.0 * j as f64 / 8.0));
        }
    }
    nodes
}

/// Solves the consistency conditions at fixed `ε`.
///
/// `θ = π/2` is the only zero of `cos θ` on `[0, π]`. The remaining pair is
/// solved from each node of [`multistart_grid`] in turn until one start
/// converges with a residual norm below `solver_tol`. Since `sin φ` is
/// eliminated exactly, only the `β` coordinate of a node affects the
/// iteration; `φ` comes from the phase condition on `w`.
pub fn solve_consistency(epsilon: f64, solver_tol: f64) -> Result<ConsistencyReport> {
    if !(epsilon > 1.0) || !epsilon.is_finite() {
        return Err(domain("epsilon", epsilon, "must be finite and > 1"));
    }
    if !(solver_tol > 0.0) {
        return Err(domain("solver_tol", solver_tol, "must be > 0"));
    }
    let theta = FRAC_PI_2;
    let mut best = (f64::INFINITY, (f64::NAN, f64::NAN));

    for (phi0, beta0) in multistart_grid() {
        let root = match newton(epsilon, beta0) {
            Ok(r) => r,
            Err(res) => {
                if res < best.0 {
                    best = (res, (phi0, beta0));
                }
                continue;
            }
        };
        let beta = root.beta;
        let scale = momentum_scale(epsilon);
        let q_perp = scale * (0.5 * beta).sinh();
        let k = (epsilon - 1.0) / (epsilon + 1.0);
        let n_t = 1.0 + k * (beta.cosh() - beta.sinh() * root.s);
        let nu_z = 2.0 * k.sqrt() * ((0.5 * beta).cosh() - (0.5 * beta).sinh() * root.s);
        let phi = spinor_phase(n_t, q_perp * nu_z, theta);

        // The phase fixed by the spinor condition must reproduce sin φ.
        if (phi.sin() - root.s).abs() > REPORT_TOL
            || !(-1.0 - REPORT_TOL..=1.0 + REPORT_TOL).contains(&root.s)
        {
            continue;
        }
        let params = StateParams::new(epsilon, beta, theta, phi, 1.0)?;
        let residuals = condition_residuals(&params);
        let residual_norm = residuals.norm();
        if residual_norm > solver_tol {
            if residual_norm < best.0 {
                best = (residual_norm, (phi0, beta0));
            }
            continue;
        }
        let matched_closed_form = (theta - FRAC_PI_2).abs() <= REPORT_TOL
            && (phi - 1.5 * PI).abs() <= REPORT_TOL
            && ((0.5 * beta).tanh() - 1.0 / epsilon).abs() <= REPORT_TOL;
        return Ok(ConsistencyReport {
            epsilon,
            theta_star: theta,
            phi_star: phi,
            beta_star: beta,
            q_perp_star: params.q_perp(),
            residual_norm,
            matched_closed_form,
            residuals,
            start: (phi0, beta0),
            iterations: root.iterations,
        });
    }
    Err(Error::NoConvergence {
        best_residual: best.0,
        start_phi: best.1 .0,
        start_beta: best.1 .1,
    })
}

/// A distinct root located by [`uniqueness_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Basin {
    pub phi: f64,
    pub beta: f64,
    /// Smallest grid value of `r_lin² + r_quad²` among the merged minima.
    pub grid_value: f64,
    /// Number of grid minima that refined to this root.
    pub members: usize,
    /// `√(r_lin² + r_quad²)` at the refined root.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub n_phi: usize,
    pub n_beta: usize,
    pub beta_max: f64,
    /// Grid minima at or above this value are ignored.
    pub threshold: f64,
}

impl Default for ScanGrid {
    fn default() -> Self {
        Self {
            n_phi: 128,
            n_beta: 128,
            beta_max: 5.0,
            threshold: 0.1,
        }
    }
}

fn phase_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Grid search for every root of the two scalar conditions at `θ = π/2`.
///
/// Local minima of `r_lin² + r_quad²` over `φ ∈ [0, 2π)` (periodic) and
/// `β ∈ (0, β_max]` that lie below the threshold are refined with Newton.
/// Minima that do not refine to a root inside the window are dropped; the
/// rest are merged when they land on the same root modulo 2π.
pub fn uniqueness_scan(epsilon: f64, grid: &ScanGrid) -> Result<Vec<Basin>> {
    if !(epsilon > 1.0) {
        return Err(domain("epsilon", epsilon, "must be > 1"));
    }
    if grid.n_phi < 64 || grid.n_beta < 64 {
        return Err(Error::Grid(format!(
            "scan needs at least 64x64 nodes, got {}x{}",
            grid.n_phi, grid.n_beta
        )));
    }
    if !(grid.beta_max > 0.0) {
        return Err(domain("beta_max", grid.beta_max, "must be > 0"));
    }
    let phis: Vec<f64> = (0..grid.n_phi)
        .map(|i| TAU * i as f64 / grid.n_phi as f64)
        .collect();
    let betas: Vec<f64> = (1..=grid.n_beta)
        .map(|j| grid.beta_max * j as f64 / grid.n_beta as f64)
        .collect();
    let mut values = vec![vec![0.0; grid.n_beta]; grid.n_phi];
    for (i, &phi) in phis.iter().enumerate() {
        for (j, &beta) in betas.iter().enumerate() {
            let p = StateParams::new(epsilon, beta, FRAC_PI_2, phi, 1.0)?;
            let r = condition_residuals(&p);
            values[i][j] = r.linear * r.linear + r.quadratic * r.quadratic;
        }
    }

    let mut basins: Vec<Basin> = Vec::new();
    for i in 0..grid.n_phi {
        for j in 0..grid.n_beta {
            let v = values[i][j];
            if !(v < grid.threshold) {
                continue;
            }
            let is_min = (-1i64..=1).all(|di| {
                (-1i64..=1).all(|dj| {
                    let jj = j as i64 + dj;
                    if (di == 0 && dj == 0) || jj < 0 || jj >= grid.n_beta as i64 {
                        return true;
                    }
                    let ii = (i as i64 + di).rem_euclid(grid.n_phi as i64) as usize;
                    v <= values[ii][jj as usize]
                })
            });
            if !is_min {
                continue;
            }
            let (phi0, beta0) = (phis[i], betas[j]);
            let Ok(root) = newton(epsilon, beta0) else {
                continue;
            };
            if !(-1.0 - REPORT_TOL..=1.0 + REPORT_TOL).contains(&root.s) {
                continue;
            }
            // The two azimuths sharing sin φ; keep the one this minimum sits on.
            let a = root.s.clamp(-1.0, 1.0).asin();
            let phi = [a.rem_euclid(TAU), (PI - a).rem_euclid(TAU)]
                .into_iter()
                .min_by(|x, y| phase_distance(*x, phi0).total_cmp(&phase_distance(*y, phi0)))
                .expect("two candidates");
            let beta = root.beta;
            if !(beta > 0.0 && beta <= grid.beta_max) {
                continue;
            }
            let r = condition_residuals(&StateParams::new(epsilon, beta, FRAC_PI_2, phi, 1.0)?);
            let residual = r.linear.hypot(r.quadratic);
            if !(residual <= REPORT_TOL) {
                continue;
            }
            match basins
                .iter_mut()
                .find(|b| phase_distance(b.phi, phi) <= 1e-6 && (b.beta - beta).abs() <= 1e-6)
            {
                Some(b) => {
                    b.members += 1;
                    b.grid_value = b.grid_value.min(v);
                    b.residual = b.residual.min(residual);
                }
                None => basins.push(Basin {
                    phi,
                    beta,
                    grid_value: v,
                    members: 1,
                    residual,
                }),
            }
        }
    }
    Ok(basins)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::nullspace_test;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn matrices_vanish_without_fields() {
        let p = StateParams::new(1.3, 0.4, 1.0, 1.0, 1.0).unwrap();
        let (m1, m2) = reduced_system_matrices(&p, 0.0, 0.0);
        assert_eq!(m1, Matrix2C::zeros());
        assert_eq!(m2, Matrix2C::zeros());
    }

    #[test]
    fn matrices_at_unit_potentials() {
        let p = StateParams::self_consistent(2.0, 1.0).unwrap();
        let (m1, m2) = reduced_system_matrices(&p, -1.0, -1.0);
        let want1 = Matrix2C::from_rows([[c(-1., 0.), c(0., 1.)], [c(0., -1.), c(-1., 0.)]]);
        let want2 = Matrix2C::from_rows([[c(1., 0.), c(0., -1.)], [c(0., 1.), c(1., 0.)]]);
        assert!((m1 - want1).max_abs() < 1e-14);
        assert!((m2 - want2).max_abs() < 1e-14);

        let w = crate::algebra::SpinorPair::new(c(FRAC_1_SQRT_2, 0.), c(0., -FRAC_1_SQRT_2));
        assert!(nullspace_test(&m1, &w, 1e-14));
        assert!(nullspace_test(&m2, &w, 1e-14));
    }

    #[test]
    fn residuals_vanish_at_closed_form() {
        let p = StateParams::new(2.0, 3f64.ln(), FRAC_PI_2, 1.5 * PI, 1.0).unwrap();
        let r = condition_residuals(&p);
        for v in [
            r.azimuthal_flux,
            r.linear,
            r.quadratic,
            r.spinor_upper,
            r.spinor_lower,
        ] {
            assert!(v.abs() < 1e-13, "{r:?}");
        }
    }

    #[test]
    fn wrong_branch_residual() {
        // sin φ = +1: ñ = 1 + e^{−β}/3 = 10/9, ν̃_z = (2/√3)e^{−β/2} = 2/3.
        let p = StateParams::new(2.0, 3f64.ln(), FRAC_PI_2, FRAC_PI_2, 1.0).unwrap();
        let r = condition_residuals(&p);
        assert!((r.linear - (2.0 * 10.0 / 9.0 - 2.0 * 2.0 / 3.0)).abs() < 1e-14);
        assert!(r.linear > 0.5);
    }

    #[test]
    fn theta_zero_azimuthal_flux() {
        let p = StateParams::new(2.0, 1.0, 0.0, 0.0, 1.0).unwrap();
        assert_eq!(condition_residuals(&p).azimuthal_flux, 1.0);
    }

    #[test]
    fn reduced_derivative_matches_finite_differences() {
        for (e, beta) in [(2.0, 0.4), (1.1, 2.5), (10.0, 0.1), (1.0001, 6.0)] {
            let h = 1e-6 * beta;
            let fd =
                (reduced_condition(e, beta + h).0 - reduced_condition(e, beta - h).0) / (2.0 * h);
            let (_, d, _, scale) = reduced_condition(e, beta);
            assert!(
                (fd - d).abs() < 1e-6 * (scale + d.abs()),
                "{e}: {fd} vs {d}"
            );
        }
    }

    #[test]
    fn linear_phase_at_closed_form() {
        for e in [1.0001, 1.5, 3.0, 50.0] {
            let (s, _) = linear_phase(e, 1.0 / e);
            assert!((s + 1.0).abs() < 1e-11, "{e}: {s}");
            let (g, _, _, scale) = reduced_condition(e, 2.0 * (1.0 / e).atanh());
            assert!(g.abs() <= 16.0 * f64::EPSILON * scale, "{e}: {g}");
        }
    }

    #[test]
    fn solve_eps_two() {
        let r = solve_consistency(2.0, DEFAULT_SOLVER_TOL).unwrap();
        assert!(r.matched_closed_form, "{r:?}");
        assert!((r.q_perp_star - 1.0).abs() < 1e-10);
        assert!(((0.5 * r.beta_star).tanh() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn solve_domain_errors() {
        assert!(matches!(
            solve_consistency(1.0, 1e-12),
            Err(Error::Domain { .. })
        ));
        assert!(solve_consistency(2.0, 0.0).is_err());
    }

    #[test]
    fn impossible_solver_tolerance_is_no_convergence() {
        assert!(matches!(
            solve_consistency(2.0, 1e-300),
            Err(Error::NoConvergence { .. })
        ));
    }

    #[test]
    fn zero_threshold_finds_nothing() {
        let g = ScanGrid {
            threshold: 0.0,
            ..ScanGrid::default()
        };
        assert!(uniqueness_scan(2.0, &g).unwrap().is_empty());
    }

    #[test]
    fn scan_rejects_coarse_grid() {
        let g = ScanGrid {
            n_phi: 32,
            ..ScanGrid::default()
        };
        assert!(uniqueness_scan(2.0, &g).is_err());
    }
}
