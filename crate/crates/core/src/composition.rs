//! Operator splitting and symmetric BCH compositions with measured error
//! orders. Imaginary-time arguments `x = i t` are passed as the real `t`;
//! generators are anti-Hermitian (`log` of a unitary).

use num_complex::Complex64 as C64;

use crate::error::{Result, SpinError};
use crate::linalg::{
    commutator, exp_skew, expm_unitary, hermiticity_residual, identity, log_unitary,
    spectral_norm, unitarity_residual, OperatorMatrix, HERMITIAN_TOL, I,
};
use crate::sequences::linear_fit;

/// Constraint tolerance for fractal weights.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CompositionResult {
    pub propagator: OperatorMatrix,
    /// `log(propagator)`.
    pub generator_estimate: OperatorMatrix,
    pub target_generator: OperatorMatrix,
    /// `|| propagator - exp(target_generator) ||_2`.
    pub error_norm: f64,
    /// Slope of `log error` against `log step` over the sampled steps.
    pub fitted_order: f64,
    /// `(step parameter, error_norm)` used for the fit.
    pub samples: Vec<(f64, f64)>,
    pub oracle_calls: u64,
}

impl CompositionResult {
    /// `|| generator_estimate - target_generator ||_2 / || target_generator ||_2`.
    pub fn relative_generator_error(&self) -> f64 {
        let diff = spectral_norm(&(&self.generator_estimate - &self.target_generator));
        let t = spectral_norm(&self.target_generator);
        if t == 0.0 {
            diff
        } else {
            diff / t
        }
    }
}

/// Which operator sits on the outside of a symmetric sandwich.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    AOuter,
    BOuter,
}

fn check_hermitian(ops: &[&OperatorMatrix]) -> Result<()> {
    let dim = ops.first().map(|a| a.nrows()).unwrap_or(0);
    for a in ops {
        if a.nrows() != dim || a.ncols() != dim {
            return Err(SpinError::Domain("operators must share one square dimension".into()));
        }
        if hermiticity_residual(a) > HERMITIAN_TOL {
            return Err(SpinError::ContractViolation("operator is not Hermitian".into()));
        }
    }
    Ok(())
}

/// `-slope` of `log err` against `log param` for a fit in which the
/// parameter grows as the error falls (step counts), or `+slope` for step
/// sizes.
fn fit_order(samples: &[(f64, f64)], decreasing_param: bool) -> f64 {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(_, e)| *e > 0.0 && e.is_finite())
        .map(|(p, e)| (p.abs().ln(), e.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let (slope, _) = linear_fit(&xs, &ys);
    if decreasing_param {
        -slope
    } else {
        slope
    }
}

fn cexp(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    expm_unitary(h, -t)
}

fn finish(
    propagator: OperatorMatrix,
    target_generator: OperatorMatrix,
    samples: Vec<(f64, f64)>,
    decreasing_param: bool,
    oracle_calls: u64,
) -> Result<CompositionResult> {
    let generator_estimate = log_unitary(&propagator)?;
    let error_norm = samples[0].1;
    Ok(CompositionResult {
        propagator,
        generator_estimate,
        target_generator,
        error_norm,
        fitted_order: fit_order(&samples, decreasing_param),
        samples,
        oracle_calls,
    })
}

/// `(prod_k exp(-i H_k t / m))^m` against `exp(-i t sum_k H_k)`; the order is
/// fitted over `m, 2m, 4m`. The last operator counts as the oracle call.
pub fn trotter_product(h_list: &[OperatorMatrix], t: f64, m: u32) -> Result<CompositionResult> {
    if h_list.is_empty() {
        return Err(SpinError::Domain("empty Hamiltonian list".into()));
    }
    if m == 0 {
        return Err(SpinError::Domain("Trotter step count must be at least 1".into()));
    }
    check_hermitian(&h_list.iter().collect::<Vec<_>>())?;
    let total: OperatorMatrix = h_list.iter().skip(1).fold(h_list[0].clone(), |acc, h| acc + h);
    let exact = expm_unitary(&total, t)?;
    let build = |steps: u32| -> Result<OperatorMatrix> {
        let mut one = identity(total.nrows());
        for h in h_list {
            one = expm_unitary(h, t / f64::from(steps))? * one;
        }
        Ok(crate::linalg::matrix_power(&one, u64::from(steps)))
    };
    let mut samples = Vec::with_capacity(3);
    let mut first = None;
    for k in 0..3 {
        let steps = m * (1 << k);
        let p = build(steps)?;
        samples.push((f64::from(steps), spectral_norm(&(&p - &exact))));
        first.get_or_insert(p);
    }
    let target = &total * (-I * t);
    finish(first.expect("three samples"), target, samples, true, u64::from(m))
}

/// `(e^{iA/sqrt m} e^{iB/sqrt m} e^{-iA/sqrt m} e^{-iB/sqrt m})^m` against
/// `exp(-[A, B])`; the order is fitted over `m, 4m, 16m`.
pub fn commutator_product(a: &OperatorMatrix, b: &OperatorMatrix, m: u32) -> Result<CompositionResult> {
    if m == 0 {
        return Err(SpinError::Domain("step count must be at least 1".into()));
    }
    check_hermitian(&[a, b])?;
    let target = -commutator(a, b);
    let exact = exp_skew(&target)?;
    let build = |steps: u32| -> Result<OperatorMatrix> {
        let s = 1.0 / f64::from(steps).sqrt();
        let cycle = cexp(a, -s)? * cexp(b, -s)? * cexp(a, s)? * cexp(b, s)?;
        Ok(crate::linalg::matrix_power(&cycle, u64::from(steps)))
    };
    let mut samples = Vec::with_capacity(3);
    let mut first = None;
    for k in 0..3 {
        let steps = m * (1 << (2 * k));
        let p = build(steps)?;
        samples.push((f64::from(steps), spectral_norm(&(&p - &exact))));
        first.get_or_insert(p);
    }
    finish(first.expect("three samples"), target, samples, true, 2 * u64::from(m))
}

/// `S_A(x) = e^{xA/2} e^{xB} e^{xA/2}` or `S_B(x) = e^{xB/2} e^{xA} e^{xB/2}`
/// with `x = i t`.
pub fn sandwich_matrix(a: &OperatorMatrix, b: &OperatorMatrix, t: f64, side: Side) -> Result<OperatorMatrix> {
    let (outer, inner) = match side {
        Side::AOuter => (a, b),
        Side::BOuter => (b, a),
    };
    let half = cexp(outer, t / 2.0)?;
    Ok(&half * cexp(inner, t)? * &half)
}

/// Oracle calls of one sandwich when `B` is the oracle-dependent operator.
pub fn sandwich_calls(side: Side) -> u64 {
    match side {
        Side::AOuter => 1,
        Side::BOuter => 2,
    }
}

/// Symmetric sandwich against `exp(x(A + B))`; order fitted over `t, t/2, t/4`.
pub fn symmetric_sandwich(a: &OperatorMatrix, b: &OperatorMatrix, t: f64, side: Side) -> Result<CompositionResult> {
    check_hermitian(&[a, b])?;
    let sum = a + b;
    let mut samples = Vec::with_capacity(3);
    let mut first = None;
    for k in 0..3 {
        let tk = t / f64::from(1u32 << k);
        let p = sandwich_matrix(a, b, tk, side)?;
        let exact = cexp(&sum, tk)?;
        samples.push((tk, spectral_norm(&(&p - &exact))));
        first.get_or_insert(p);
    }
    finish(first.expect("three samples"), &sum * (I * t), samples, false, sandwich_calls(side))
}

/// Even-power content of `log S(x) - x(A + B)`: the norm of its even part
/// `(D(x) + D(-x)) / 2` divided by `t^2`, an estimate of the `x^2` coefficient.
pub fn even_order_content(a: &OperatorMatrix, b: &OperatorMatrix, t: f64, side: Side) -> Result<f64> {
    check_hermitian(&[a, b])?;
    let sum = a + b;
    let dev = |tt: f64| -> Result<OperatorMatrix> {
        Ok(log_unitary(&sandwich_matrix(a, b, tt, side)?)? - &sum * (I * tt))
    };
    let even = (dev(t)? + dev(-t)?) * C64::new(0.5, 0.0);
    Ok(spectral_norm(&even) / (t * t))
}

/// Generators `(K_A, K_B)` of the cross interactions after `steps` rounds of
/// `K_A <- log(e^{K_A/2} e^{-K_B} e^{K_A/2})`, `K_B <- log(e^{K_B/2} e^{-K_A} e^{K_B/2})`
/// (round two uses `+K` in the middle), with oracle calls per round.
fn cross_generators(a: &OperatorMatrix, b: &OperatorMatrix, t: f64, rounds: u32) -> Result<Vec<(OperatorMatrix, OperatorMatrix, u64, u64)>> {
    let ka = log_unitary(&sandwich_matrix(a, b, t, Side::AOuter)?)?;
    let kb = log_unitary(&sandwich_matrix(a, b, t, Side::BOuter)?)?;
    let mut out = vec![(ka, kb, 1u64, 2u64)];
    for round in 0..rounds {
        let (ka, kb, ca, cb) = out.last().expect("seeded").clone();
        let sign = if round == 0 { -1.0 } else { 1.0 };
        let sym = |outer: &OperatorMatrix, mid: &OperatorMatrix| -> Result<OperatorMatrix> {
            let h = exp_skew(&(outer * C64::new(0.5, 0.0)))?;
            log_unitary(&(&h * exp_skew(&(mid * C64::new(sign, 0.0)))? * &h))
        };
        let na = sym(&ka, &kb)?;
        let nb = sym(&kb, &ka)?;
        out.push((na, nb, 2 * ca + cb, 2 * cb + ca));
    }
    Ok(out)
}

/// Cross-interaction propagator `exp(x A_3)` (level 2) or `exp(x A_5)`
/// (level 4). At level 2 the target generator is
/// `(x^3/8)([B,[B,A]] - [A,[A,B]])`; at level 4 it is `x(A_3 + B_3)`, the
/// leading term of the last sandwich. Order fitted over `t, t/2, t/4`.
pub fn cross_interaction(a: &OperatorMatrix, b: &OperatorMatrix, t: f64, level: u32) -> Result<CompositionResult> {
    check_hermitian(&[a, b])?;
    let rounds = match level {
        2 => 1,
        4 => 2,
        other => return Err(SpinError::Domain(format!("cross-interaction level {other} not in {{2, 4}}"))),
    };
    let eval = |tt: f64| -> Result<(OperatorMatrix, OperatorMatrix, u64)> {
        let gens = cross_generators(a, b, tt, rounds)?;
        let (ka, _, calls, _) = gens.last().expect("rounds >= 1").clone();
        let target = if level == 2 {
            let x3 = (I * tt).powu(3) / C64::new(8.0, 0.0);
            (commutator(b, &commutator(b, a)) - commutator(a, &commutator(a, b))) * x3
        } else {
            let (ka3, kb3, _, _) = &gens[1];
            ka3 + kb3
        };
        Ok((exp_skew(&ka)?, target, calls))
    };
    let mut samples = Vec::with_capacity(3);
    let mut first = None;
    for k in 0..3 {
        let tk = t / f64::from(1u32 << k);
        let (p, target, calls) = eval(tk)?;
        samples.push((tk, spectral_norm(&(&p - exp_skew(&target)?))));
        first.get_or_insert((p, target, calls));
    }
    let (p, target, calls) = first.expect("three samples");
    finish(p, target, samples, false, calls)
}

/// `(3^{m+1} -+ 1) / 2` oracle calls for the `2m`-order cross interactions.
pub fn cross_interaction_calls(m: u32) -> (u64, u64) {
    let p = 3u64.pow(m + 1);
    ((p - 1) / 2, p.div_ceil(2))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FractalMode {
    /// `S(p_1 x) ... S(p_r x)` against `exp(x(A + B))`.
    Product,
    /// Sandwich `e^{K_B/2} e^{-K_A} e^{K_B/2}` of the two
    /// fractal products, against `exp(K_B - K_A)`.
    Difference,
}

pub fn validate_weights(p_list: &[f64]) -> Result<()> {
    if p_list.is_empty() {
        return Err(SpinError::Domain("empty weight list".into()));
    }
    if p_list.iter().any(|p| !p.is_finite()) {
        return Err(SpinError::Domain("weights must be finite".into()));
    }
    let sum: f64 = p_list.iter().sum();
    if (sum - 1.0).abs() > WEIGHT_TOL {
        return Err(SpinError::Domain(format!("weights sum to {sum}, not 1")));
    }
    let r = p_list.len();
    for j in 0..r / 2 {
        if (p_list[j] - p_list[r - 1 - j]).abs() > WEIGHT_TOL {
            return Err(SpinError::Domain(format!("weights are not palindromic at position {}", j + 1)));
        }
    }
    Ok(())
}

/// Standard symmetric triplet `(p, 1 - 2p, p)` with `p = 1 / (2 - 2^{1/3})`.
pub fn triplet_weights() -> [f64; 3] {
    let p = 1.0 / (2.0 - 2f64.powf(1.0 / 3.0));
    [p, 1.0 - 2.0 * p, p]
}

fn fractal_matrix(a: &OperatorMatrix, b: &OperatorMatrix, t: f64, p_list: &[f64], side: Side) -> Result<OperatorMatrix> {
    let mut acc = identity(a.nrows());
    for &p in p_list {
        acc *= sandwich_matrix(a, b, p * t, side)?;
    }
    Ok(acc)
}

/// Fractal symmetric composition; order fitted over `t, t/2, t/4` and
/// reported, not asserted.
pub fn fractal_compose(
    a: &OperatorMatrix,
    b: &OperatorMatrix,
    t: f64,
    p_list: &[f64],
    side: Side,
    mode: FractalMode,
) -> Result<CompositionResult> {
    check_hermitian(&[a, b])?;
    validate_weights(p_list)?;
    let r = p_list.len() as u64;
    let sum = a + b;
    let eval = |tt: f64| -> Result<(OperatorMatrix, OperatorMatrix)> {
        match mode {
            FractalMode::Product => Ok((fractal_matrix(a, b, tt, p_list, side)?, &sum * (I * tt))),
            FractalMode::Difference => {
                let ka = log_unitary(&fractal_matrix(a, b, tt, p_list, Side::AOuter)?)?;
                let kb = log_unitary(&fractal_matrix(a, b, tt, p_list, Side::BOuter)?)?;
                let h = exp_skew(&(&kb * C64::new(0.5, 0.0)))?;
                let p = &h * exp_skew(&(-&ka))? * &h;
                Ok((p, kb - ka))
            }
        }
    };
    let calls = match mode {
        FractalMode::Product => r * sandwich_calls(side),
        FractalMode::Difference => r * (2 * sandwich_calls(Side::BOuter) + sandwich_calls(Side::AOuter)),
    };
    let mut samples = Vec::with_capacity(3);
    let mut first = None;
    for k in 0..3 {
        let tk = t / f64::from(1u32 << k);
        let (p, target) = eval(tk)?;
        samples.push((tk, spectral_norm(&(&p - exp_skew(&target)?))));
        first.get_or_insert((p, target));
    }
    let (p, target) = first.expect("three samples");
    finish(p, target, samples, false, calls)
}

/// `max` unitarity residual of a result's propagator.
pub fn propagator_residual(res: &CompositionResult) -> f64 {
    unitarity_residual(&res.propagator)
}
