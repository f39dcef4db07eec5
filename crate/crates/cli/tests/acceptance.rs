//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the summary is always printed.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semiloc::consistency::{solve_consistency, uniqueness_scan, ScanGrid, DEFAULT_SOLVER_TOL};
use semiloc::fields::{potential_integral_quadrature, potential_integral_special, Couplings};
use semiloc::observables::{normalization, tilde_closed_form, tilde_from_bilinears};
use semiloc::report::{
    free_fd_convergence_ratio, gamma_anticommutator_defect, ode_convergence_ratio,
    pauli_product_defect, potential_crosscheck_defect, POTENTIAL_INTEGRAL_AT_ONE,
};
use semiloc::residual::{
    free_dirac_residual, interacting_dirac_residual, potential_scale, DerivativeMode, GridSpec,
};
use semiloc::state::StateParams;

const SEED: u64 = 0x05e4_110c;

type Criterion = (&'static str, Duration, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn random_state(rng: &mut ChaCha8Rng) -> StateParams {
    StateParams::new(
        rng.gen_range(1.0001..20.0),
        rng.gen_range(0.01..4.0),
        rng.gen_range(0.0..=PI),
        rng.gen_range(0.0..TAU),
        rng.gen_range(0.1..10.0),
    )
    .expect("draw lies in the valid domain")
}

fn q_perp_claim() -> Outcome {
    let mut worst: f64 = 0.0;
    for e in [1.1, 1.5, 2.0, 5.0, 10.0, 100.0] {
        match solve_consistency(e, DEFAULT_SOLVER_TOL) {
            Ok(r) => worst = worst.max((r.q_perp_star - 1.0).abs()),
            Err(err) => return outcome(false, format!("eps {e}: {err}")),
        }
    }
    let near = match solve_consistency(1.0001, DEFAULT_SOLVER_TOL) {
        Ok(r) => (r.q_perp_star - 1.0).abs(),
        Err(err) => return outcome(false, format!("eps 1.0001: {err}")),
    };
    outcome(
        worst <= 1e-9 && near <= 1e-8,
        format!("max |q_perp - 1| = {worst:.2e}, at eps 1.0001: {near:.2e}"),
    )
}

fn closed_form_recovery() -> Outcome {
    let mut worst: f64 = 0.0;
    for e in [1.1, 1.5, 2.0, 5.0, 10.0] {
        match solve_consistency(e, DEFAULT_SOLVER_TOL) {
            Ok(r) => {
                worst = worst
                    .max((r.theta_star - FRAC_PI_2).abs())
                    .max((r.phi_star - 1.5 * PI).abs())
                    .max(((0.5 * r.beta_star).tanh() - 1.0 / e).abs());
            }
            Err(err) => return outcome(false, format!("eps {e}: {err}")),
        }
    }
    let basins = match uniqueness_scan(2.0, &ScanGrid::default()) {
        Ok(b) => b,
        Err(err) => return outcome(false, format!("scan: {err}")),
    };
    let located = basins
        .first()
        .map(|b| (b.phi - 1.5 * PI).abs() <= 1e-6 && (b.beta - 3f64.ln()).abs() <= 1e-9)
        .unwrap_or(false);
    outcome(
        worst <= 1e-9 && basins.len() == 1 && located,
        format!(
            "max parameter deviation {worst:.2e}, basins at eps 2: {}",
            basins.len()
        ),
    )
}

fn bilinear_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut worst, mut radial): (f64, f64) = (0.0, 0.0);
    let draws = 1000;
    for _ in 0..draws {
        let p = random_state(&mut rng);
        match tilde_from_bilinears(&p) {
            Ok(b) => {
                worst = worst.max(b.max_abs_diff(&tilde_closed_form(&p)));
                radial = radial.max(b.nu_r.abs());
            }
            Err(err) => return outcome(false, format!("{p:?}: {err}")),
        }
    }
    outcome(
        worst <= 1e-12 && radial <= 1e-13,
        format!("{draws} draws, max deviation {worst:.2e}, max |nu_r| {radial:.2e}"),
    )
}

fn free_residual() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for i in 0..100 {
        let p = random_state(&mut rng);
        let grid = GridSpec::default_for(&p, DerivativeMode::Analytic);
        match free_dirac_residual(&p, &grid) {
            Ok(r) => worst = worst.max(r.rel_norm),
            Err(err) => return outcome(false, format!("{p:?}: {err}")),
        }
        if i % 20 == 0 {
            match free_fd_convergence_ratio(&p) {
                Ok(r) => ratios.push(r),
                Err(err) => return outcome(false, format!("fd {p:?}: {err}")),
            }
        }
    }
    let (lo, hi) = ratios
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| {
            (a.min(*r), b.max(*r))
        });
    outcome(
        worst <= 1e-12 && lo >= 3.5 && hi <= 4.5,
        format!("100 draws, max residual {worst:.2e}; fd ratios in [{lo:.4}, {hi:.4}]"),
    )
}

fn interacting_residual() -> Outcome {
    let c = Couplings::test();
    let mut worst: f64 = 0.0;
    let mut margin = f64::INFINITY;
    let mut linearity: f64 = 0.0;
    for e in [1.1, 2.0, 5.0, 10.0] {
        let sc = StateParams::self_consistent(e, c.ell_z).unwrap();
        let grid = GridSpec::default_for(&sc, DerivativeMode::Analytic);
        match interacting_dirac_residual(&sc, &c, &grid) {
            Ok(r) => worst = worst.max(r.rel_norm),
            Err(err) => return outcome(false, format!("eps {e}: {err}")),
        }
        let wrong = StateParams::new(e, sc.beta(), FRAC_PI_2, FRAC_PI_2, c.ell_z).unwrap();
        let wgrid = GridSpec::default_for(&wrong, DerivativeMode::Analytic);
        let half = Couplings::new(0.5 * c.alpha_f, c.ell_z).unwrap();
        let values = interacting_dirac_residual(&wrong, &c, &wgrid).and_then(|full| {
            let halved = interacting_dirac_residual(&wrong, &half, &wgrid)?;
            Ok((
                full.rel_norm,
                halved.rel_norm,
                potential_scale(&wrong, &c, &wgrid)?,
            ))
        });
        match values {
            Ok((full, halved, scale)) => {
                margin = margin.min(full / (1e-4 * scale));
                linearity = linearity.max((full / halved / 2.0 - 1.0).abs());
            }
            Err(err) => return outcome(false, format!("wrong branch eps {e}: {err}")),
        }
    }
    outcome(
        worst <= 1e-12 && margin >= 1.0 && linearity <= 0.02,
        format!(
            "solution residual {worst:.2e}; wrong branch / (1e-4 scale) >= {margin:.3e}; coupling linearity {linearity:.2e}"
        ),
    )
}

fn potentials() -> Outcome {
    let cross = match potential_crosscheck_defect() {
        Ok(v) => v,
        Err(err) => return outcome(false, err.to_string()),
    };
    let reference = potential_integral_quadrature(1.0, 1.0, 1e-13)
        .and_then(|q| Ok((q, potential_integral_special(1.0, 1.0)?)));
    let (q, s) = match reference {
        Ok(v) => v,
        Err(err) => return outcome(false, err.to_string()),
    };
    let ref_ok = (q - 1.3192634).abs() < 5e-8
        && (s - 1.3192634).abs() < 5e-8
        && (q - POTENTIAL_INTEGRAL_AT_ONE).abs() <= 1e-10
        && (s - POTENTIAL_INTEGRAL_AT_ONE).abs() <= 1e-10;
    let mut ratios = Vec::new();
    for e in [1.1, 2.0, 5.0, 10.0] {
        let p = StateParams::self_consistent(e, 1.0).unwrap();
        match ode_convergence_ratio(&p, &Couplings::test()) {
            Ok(r) => ratios.push(r),
            Err(err) => return outcome(false, format!("ode eps {e}: {err}")),
        }
    }
    let order_ok = ratios.iter().all(|r| (3.5..=4.5).contains(r));
    outcome(
        cross <= 1e-10 && ref_ok && order_ok,
        format!(
            "quadrature vs special {cross:.2e}; I(1) = {s:.10} / {q:.10}; ode ratios {ratios:.4?}"
        ),
    )
}

fn normalization_check() -> Outcome {
    let states = [
        StateParams::self_consistent(2.0, 1.0).unwrap(),
        StateParams::self_consistent(10.0, 1.0).unwrap(),
        StateParams::new(2.0, 1.0, FRAC_PI_2, 0.0, 1.0).unwrap(),
        StateParams::new(5.0, 0.7, 1.0, 2.0, 1.0).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    let mut spread: f64 = 0.0;
    for p in &states {
        let rho_max = 40.0 / p.q_perp();
        let base = match normalization(p, rho_max, 1e-11) {
            Ok(n) => n,
            Err(err) => return outcome(false, err.to_string()),
        };
        worst = worst.max((base - 1.0).abs());
        for l in [0.1, 3.0, 25.0] {
            match normalization(&p.with_ell_z(l).unwrap(), rho_max, 1e-11) {
                Ok(n) => spread = spread.max((n - base).abs()),
                Err(err) => return outcome(false, err.to_string()),
            }
        }
    }
    outcome(
        worst <= 1e-8 && spread <= 1e-12,
        format!("max |N - 1| = {worst:.2e}, ell_z spread {spread:.2e}"),
    )
}

fn algebra() -> Outcome {
    let p = pauli_product_defect();
    let g = gamma_anticommutator_defect();
    outcome(
        p <= 1e-15 && g <= 1e-15,
        format!("Pauli products {p:.1e}, Clifford relation {g:.1e}"),
    )
}

fn end_to_end() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_semiloc");
    let verify = match Command::new(bin).arg("verify").output() {
        Ok(o) => o,
        Err(err) => return outcome(false, err.to_string()),
    };
    if verify.status.code() != Some(0) {
        return outcome(
            false,
            format!(
                "verify exited {:?}: {}",
                verify.status.code(),
                String::from_utf8_lossy(&verify.stderr)
            ),
        );
    }
    let report: serde_json::Value = match serde_json::from_slice(&verify.stdout) {
        Ok(v) => v,
        Err(err) => return outcome(false, format!("report is not JSON: {err}")),
    };
    let schema: serde_json::Value =
        serde_json::from_str(include_str!("../schema/report.schema.json")).expect("schema is JSON");
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let schema_errors: Vec<String> = match compiled.validate(&report) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| e.to_string()).collect(),
    };
    if !schema_errors.is_empty() {
        return outcome(false, format!("schema violations: {schema_errors:?}"));
    }

    let scan = match Command::new(bin)
        .args([
            "scan",
            "--epsilon-min",
            "1.1",
            "--epsilon-max",
            "10",
            "--steps",
            "10",
        ])
        .output()
    {
        Ok(o) => o,
        Err(err) => return outcome(false, err.to_string()),
    };
    if scan.status.code() != Some(0) {
        return outcome(false, format!("scan exited {:?}", scan.status.code()));
    }
    let text = String::from_utf8_lossy(&scan.stdout);
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let Some(col) = header.iter().position(|h| *h == "q_perp") else {
        return outcome(false, format!("scan header {header:?}"));
    };
    let values: Vec<f64> = lines
        .filter_map(|l| l.split(',').nth(col)?.parse().ok())
        .collect();
    let worst = values.iter().map(|q| (q - 1.0).abs()).fold(0.0, f64::max);
    outcome(
        values.len() == 10 && worst <= 1e-9,
        format!(
            "verify exit 0, report schema-valid; scan rows {}, max |q_perp - 1| = {worst:.2e}",
            values.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "q_perp = 1 from the solver",
            Duration::from_secs(1),
            q_perp_claim,
        ),
        (
            "closed-form solution and uniqueness",
            Duration::from_secs(10),
            closed_form_recovery,
        ),
        (
            "bilinear and closed-form tilde factors",
            Duration::from_secs(5),
            bilinear_equivalence,
        ),
        (
            "free Dirac residual",
            Duration::from_secs(30),
            free_residual,
        ),
        (
            "interacting Dirac residual",
            Duration::from_secs(30),
            interacting_residual,
        ),
        (
            "potentials and radial equation",
            Duration::from_secs(5),
            potentials,
        ),
        ("normalization", Duration::from_secs(2), normalization_check),
        ("Pauli and Dirac algebra", Duration::from_secs(1), algebra),
        (
            "end to end through the binary",
            Duration::from_secs(60),
            end_to_end,
        ),
    ];
    let mut failures = 0;
    for (i, (name, limit, check)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= limit;
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {} {}: {name}: {} ({:.3} s, limit {} s{})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            limit.as_secs(),
            if in_time { "" } else { ", over time" },
        );
    }
    println!("{} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
