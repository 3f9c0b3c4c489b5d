//! Fast invariant checks at small qubit counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use spinsearch_core::composition::{commutator_product, symmetric_sandwich, trotter_product, Side};
use spinsearch_core::linalg::{
    exp_skew, expm_unitary, hermiticity_residual, log_unitary, max_diff, random_hermitian,
    total_op, unitarity_residual, Axis, SpinSystem,
};
use spinsearch_core::mq::{
    decompose_orders, lomso_transform, mq_generator, order_component, phase_cycle_project,
    GeneratorVariant,
};
use spinsearch_core::oracle::{diag_projector, projector_from_d0, AuxMode, MarkedState};
use spinsearch_core::sequences::{
    alpha_three_way_residual, closed_algebra_residual, conversion_coefficient,
    conversion_measured, grover_coefficients, grover_propagator, grover_propagator_factored,
    initial_state, simple_search, spin_echo_closed_form, spin_echo_hamiltonian, SearchOptions,
};
use spinsearch_core::spectroscopy::{
    eigen_expand, inphase_check, inphase_reconversion, resum, run_pipeline, PipelineConfig,
    SpinHamiltonian,
};

use crate::config::SelftestConfig;
use crate::error::CliError;
use crate::report::RunReport;

/// Environment variable that scales every tolerance below.
pub const TOL_SCALE_VAR: &str = "SPINSEARCH_TOL_SCALE";

pub fn tolerance_scale() -> Result<f64, CliError> {
    match std::env::var(TOL_SCALE_VAR) {
        Err(_) => Ok(1.0),
        Ok(s) => match s.trim().parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
            _ => Err(CliError::Config(format!("{TOL_SCALE_VAR} must be a positive number, got {s:?}"))),
        },
    }
}

struct Check {
    name: &'static str,
    residual: f64,
    tol: f64,
}

type Group = (&'static str, f64, fn(u64) -> Result<f64, CliError>);

fn groups() -> Vec<Group> {
    vec![
        ("hermitian_exp_log_roundtrip", 1e-10, exp_log_roundtrip),
        ("initial_state_traceless", 1e-12, initial_state_invariants),
        ("order_decomposition_sums", 1e-12, order_decomposition),
        ("phase_cycle_matches_filter", 1e-10, phase_cycle),
        ("lomso_projector_reconstruction", 1e-10, lomso_projectors),
        ("mq_generator_orders", 1e-10, mq_generator_orders),
        ("projector_from_d0", 1e-10, projector_relabel),
        ("spin_echo_closed_form", 1e-10, spin_echo),
        ("search_recovers_all_states", 0.5, search_exhaustive),
        ("grover_alpha_three_ways", 1e-9, grover_alpha),
        ("grover_closed_algebra", 1e-9, grover_algebra),
        ("grover_factored_propagator", 1e-9, grover_factored),
        ("conversion_closed_form", 1e-9, conversion),
        ("eigen_expansion_resums", 1e-9, eigen_resum),
        ("inphase_reconversion", 1e-9, inphase),
        ("composition_orders", 0.3, composition_orders),
    ]
}

fn exp_log_roundtrip(seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for dim in [2, 4, 8] {
        let h = random_hermitian(dim, &mut rng) * num_complex::Complex64::new(0.3, 0.0);
        let u = expm_unitary(&h, 1.0)?;
        worst = worst.max(unitarity_residual(&u));
        let k = log_unitary(&u)?;
        worst = worst.max(max_diff(&exp_skew(&k)?, &u));
    }
    Ok(worst)
}

fn initial_state_invariants(_: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for n in 1..=3 {
        let eps: Vec<f64> = (0..n).map(|k| 1.0 + 0.1 * k as f64).collect();
        for sys in [SpinSystem::work(n)?, SpinSystem::with_aux(n)?] {
            worst = worst.max(initial_state(&sys, &eps, Axis::X)?.invariant_residual());
        }
    }
    Ok(worst)
}

fn order_decomposition(seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
    let sys = SpinSystem::work(3)?;
    let a = random_hermitian(sys.dim(), &mut rng);
    Ok(max_diff(&decompose_orders(&a, &sys).reconstruct(), &a))
}

fn phase_cycle(seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
    let sys = SpinSystem::work(3)?;
    let a = random_hermitian(sys.dim(), &mut rng);
    let mut worst = 0.0f64;
    for m in -3..=3 {
        let p = phase_cycle_project(&a, &sys, 7, m)?;
        worst = worst.max(max_diff(&p, &order_component(&a, &sys, m)));
    }
    Ok(worst)
}

fn lomso_projectors(_: u64) -> Result<f64, CliError> {
    let basis = lomso_transform(3)?;
    let mut worst = 0.0f64;
    for s in 0..8 {
        let marked = MarkedState::new(s, 3)?;
        worst = worst.max(max_diff(&basis.reconstruct_projector(s), &diag_projector(&marked)));
    }
    Ok(worst)
}

fn mq_generator_orders(_: u64) -> Result<f64, CliError> {
    let sys = SpinSystem::work(3)?;
    let mut worst = 0.0f64;
    for variant in [GeneratorVariant::Comm, GeneratorVariant::Anticomm] {
        let g = mq_generator(&sys, &[1, 2, 3], variant)?;
        worst = worst.max(hermiticity_residual(&g));
        // only the +-3 orders should survive for the full-register operator
        let mut rest = g.clone();
        rest -= order_component(&g, &sys, 3);
        rest -= order_component(&g, &sys, -3);
        worst = worst.max(rest.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

fn projector_relabel(_: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for s in 0..8 {
        let marked = MarkedState::new(s, 3)?;
        worst = worst.max(max_diff(&projector_from_d0(&marked)?, &diag_projector(&marked)));
    }
    Ok(worst)
}

fn spin_echo(_: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for s in 0..8 {
        let marked = MarkedState::new(s, 3)?;
        for k in 0..3 {
            let echo = spin_echo_hamiltonian(&marked, k)?;
            worst = worst.max(max_diff(&echo.hamiltonian, &spin_echo_closed_form(&marked, k)));
        }
    }
    Ok(worst)
}

/// Number of wrong recoveries, so any miss exceeds the 0.5 tolerance.
fn search_exhaustive(_: u64) -> Result<f64, CliError> {
    let mut misses = 0.0;
    for n in 1..=3 {
        for s in 0..(1 << n) {
            let marked = MarkedState::new(s, n)?;
            let eps = vec![1.0; n];
            for mode in [AuxMode::SelectiveCs, AuxMode::ExplicitUf] {
                let opts = SearchOptions { aux_mode: mode, ..SearchOptions::default() };
                if simple_search(&marked, &eps, &opts)?.recovered_s != s {
                    misses += 1.0;
                }
            }
        }
    }
    Ok(misses)
}

fn grover_alpha(_: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for n_states in [4, 8, 16] {
        for m in 0..=12 {
            worst = worst.max(alpha_three_way_residual(m, n_states)?);
        }
    }
    Ok(worst)
}

fn grover_algebra(_: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for n_states in [4, 8, 16] {
        for m in 0..=8 {
            let c = grover_coefficients(m, n_states)?;
            worst = worst.max(c.identity_residual()).max(closed_algebra_residual(&c)?);
        }
    }
    Ok(worst)
}

fn grover_factored(_: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for (n, s) in [(2, 1), (3, 5), (4, 9)] {
        let marked = MarkedState::new(s, n)?;
        for m in 0..=4 {
            let a = grover_propagator(&marked, m)?;
            worst = worst.max(max_diff(&a, &grover_propagator_factored(&marked, m)?));
        }
    }
    Ok(worst)
}

fn conversion(_: u64) -> Result<f64, CliError> {
    let mut worst = 0.0f64;
    for (n, s) in [(2, 2), (3, 6), (4, 11)] {
        let marked = MarkedState::new(s, n)?;
        let eps: Vec<f64> = (0..n).map(|k| 1.0 + 0.25 * k as f64).collect();
        for m in 0..=6 {
            for k in 1..=n {
                let a = conversion_coefficient(m, 1 << n, &eps, k)?;
                let b = conversion_measured(&marked, m, &eps, k)?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn sample_pipeline() -> Result<(SpinSystem, PipelineConfig), CliError> {
    let sys = SpinSystem::work(2)?;
    let h = SpinHamiltonian::weak_coupling(&sys, &[3.0, 5.0], &[(1, 2, 0.7)])?;
    let u = expm_unitary(&total_op(&sys, Axis::Y), std::f64::consts::FRAC_PI_2)?;
    let v = inphase_reconversion(&u, &sys, Axis::Z, Axis::Z)?;
    let cfg = PipelineConfig {
        u_seq: u,
        v_seq: v,
        hamiltonian: h,
        dt: 0.05,
        points: 64,
        detect_axis: Axis::Z,
        phi: 0.0,
        select_order: None,
    };
    Ok((sys, cfg))
}

fn eigen_resum(_: u64) -> Result<f64, CliError> {
    let (sys, cfg) = sample_pipeline()?;
    let rho0 = total_op(&sys, Axis::Z);
    let series = run_pipeline(&rho0, &cfg)?;
    let lines = eigen_expand(&cfg.excited(&rho0)?, &cfg.detector()?, &cfg.hamiltonian);
    Ok(series
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| (v - resum(&lines, i as f64 * cfg.dt)).norm())
        .fold(0.0, f64::max))
}

fn inphase(_: u64) -> Result<f64, CliError> {
    let (sys, cfg) = sample_pipeline()?;
    Ok(inphase_check(&cfg.u_seq, &cfg.effective_v()?, &sys, Axis::Z, Axis::Z, 0.0)?.residual)
}

/// Largest deviation of the fitted orders from 1, 1/2 and 3.
fn composition_orders(seed: u64) -> Result<f64, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
    let s = num_complex::Complex64::new(0.2, 0.0);
    let a = random_hermitian(4, &mut rng) * s;
    let b = random_hermitian(4, &mut rng) * s;
    let trotter = trotter_product(&[a.clone(), b.clone()], 1.0, 8)?.fitted_order;
    let comm = commutator_product(&a, &b, 8)?.fitted_order;
    let sandwich = symmetric_sandwich(&a, &b, 0.4, Side::AOuter)?.fitted_order;
    Ok((trotter - 1.0).abs().max((comm - 0.5).abs()).max((sandwich - 3.0).abs()))
}

pub fn run(cfg: &SelftestConfig) -> Result<RunReport, CliError> {
    let scale = tolerance_scale()?;
    let mut checks = Vec::new();
    for (name, tol, f) in groups() {
        let residual = f(cfg.seed)?;
        checks.push(Check { name, residual, tol: tol * scale });
    }
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| c.residual.is_nan() || c.residual > c.tol)
        .map(|c| format!("{} (residual {:e} > {:e})", c.name, c.residual, c.tol))
        .collect();
    if !failed.is_empty() {
        return Err(CliError::SelftestFailed(failed));
    }
    let max_residual = checks
        .iter()
        .filter(|c| c.tol < 0.1)
        .map(|c| c.residual)
        .fold(0.0, f64::max);
    Ok(RunReport {
        command: "selftest".into(),
        config: serde_json::to_value(cfg).unwrap_or_default(),
        payload: json!({
            "tolerance_scale": scale,
            "groups": checks.iter().map(|c| json!({
                "name": c.name,
                "residual": c.residual,
                "tolerance": c.tol,
                "pass": true,
            })).collect::<Vec<_>>(),
        }),
        oracle_calls: 0,
        max_residual,
        notes: Vec::new(),
    })
}
