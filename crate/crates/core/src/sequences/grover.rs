use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;

use crate::error::{Result, SpinError};
use crate::linalg::{
    conjugate, expm_unitary, identity, inner, matrix_power, max_diff, spin_op, total_op,
    zeros, Axis, OperatorMatrix, SpinSystem,
};
use crate::oracle::{basis_projector, diag_projector, u_ox, MarkedState};

const FRAC_PI_2: f64 = std::f64::consts::FRAC_PI_2;
const PI: f64 = std::f64::consts::PI;

/// Coefficients of `G(m) = E + a1 D0 + a2 D0x + a3 D0 D0x + a4 D0x D0` and
/// the derived readout coefficients `gamma_1..gamma_8`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroverCoefficients {
    pub m: u32,
    pub n_states: usize,
    pub alpha: [C64; 4],
    pub gamma: [C64; 8],
}

impl GroverCoefficients {
    /// Largest violation of `a1 = a2` and `a4 = -(2 a1 + a3)`.
    pub fn identity_residual(&self) -> f64 {
        let [a1, a2, a3, a4] = self.alpha;
        (a1 - a2).norm().max((a4 + a1 * 2.0 + a3).norm())
    }
}

fn check_states(n_states: usize) -> Result<usize> {
    if n_states < 2 || !n_states.is_power_of_two() {
        return Err(SpinError::Domain(format!("N = {n_states} is not 2^n with n >= 1")));
    }
    Ok(n_states.trailing_zeros() as usize)
}

/// Rotation angle of the iteration: `cos theta = -1 + 2/N`.
pub fn grover_angle(n_states: usize) -> f64 {
    (-1.0 + 2.0 / n_states as f64).acos()
}

pub fn alpha_closed(m: u32, n_states: usize) -> [f64; 4] {
    let nf = n_states as f64;
    let f = nf / (nf - 1.0);
    let r = (nf - 1.0).sqrt();
    let (s, c) = (f64::from(m) * grover_angle(n_states)).sin_cos();
    let a1 = -f * (1.0 - c);
    let a3 = -f * (-1.0 + c + r * s);
    let a4 = f * (1.0 - c + r * s);
    [a1, a1, a3, a4]
}

/// Iterates the linear recursion from `alpha(0) = 0`.
pub fn alpha_recursion(m: u32, n_states: usize) -> [f64; 4] {
    let inv = 1.0 / n_states as f64;
    let mut a = [0.0; 4];
    for _ in 0..m {
        let [a1, a2, a3, a4] = a;
        a = [
            (-1.0 + 4.0 * inv) * a1 + 2.0 * inv * a3 - 2.0,
            -a2 - 2.0 * inv * a4 - 2.0,
            -2.0 * a1 - a3,
            2.0 * a2 + (-1.0 + 4.0 * inv) * a4 + 4.0,
        ];
    }
    a
}

/// `gamma_1..gamma_8` from `alpha` using the printed expressions.
pub fn gammas(alpha: &[C64; 4], n_states: usize) -> [C64; 8] {
    let inv = 1.0 / n_states as f64;
    let [a1, a2, a3, a4] = *alpha;
    let g1 = (a1.conj() * a3 + a1 * a3.conj() + a3.conj() * a3) * (0.5 * inv);
    let g2 = (a2 + a2.conj() + a2.conj() * a2 + a2.conj() * a4 * inv + a2 * a4.conj() * inv) * 0.5;
    let g3 = (a3 + a1 * a2.conj() + a2.conj() * a3 + a3 * a4.conj() * inv) * 0.5;
    let g4 = (a3.conj() + a1.conj() * a2 + a2 * a3.conj() + a3.conj() * a4 * inv) * 0.5;
    [g1, g2, g3, g4, a1, a1.conj(), a4, a4.conj()]
}

pub fn grover_coefficients(m: u32, n_states: usize) -> Result<GroverCoefficients> {
    check_states(n_states)?;
    let alpha = alpha_closed(m, n_states).map(|a| C64::new(a, 0.0));
    Ok(GroverCoefficients { m, n_states, alpha, gamma: gammas(&alpha, n_states) })
}

/// `D_s^x = exp(-i pi/2 F_y) D_s exp(i pi/2 F_y)`.
pub fn d_s_x(marked: &MarkedState) -> Result<OperatorMatrix> {
    let sys = marked.system();
    let ry = expm_unitary(&total_op(&sys, Axis::Y), FRAC_PI_2)?;
    Ok(conjugate(&ry, &diag_projector(marked)))
}

/// `U(m) = [exp(-i pi D_{N-1}) exp(-i pi D_s^x)]^m`, one factor pair per step.
pub fn grover_propagator(marked: &MarkedState, m: u32) -> Result<OperatorMatrix> {
    let sys = marked.system();
    let dim = sys.dim();
    let last = expm_unitary(&basis_projector(dim, dim - 1), PI)?;
    let flip = expm_unitary(&d_s_x(marked)?, PI)?;
    let step = last * flip;
    let mut u = identity(dim);
    for _ in 0..m {
        u = &step * u;
    }
    Ok(u)
}

/// `G(m) = [exp(-i pi D0x) exp(-i pi D0)]^m` on `n` qubits.
pub fn g_matrix(n: usize, m: u32) -> Result<OperatorMatrix> {
    let d0 = MarkedState::new(0, n)?;
    let step = expm_unitary(&d_s_x(&d0)?, PI)? * expm_unitary(&diag_projector(&d0), PI)?;
    Ok(matrix_power(&step, u64::from(m)))
}

/// The propagator rebuilt from `G(m)`:
/// `R_y R_x U_ox(-pi/2) G(m) U_ox(pi/2) R_x^dagger R_y^dagger`.
pub fn grover_propagator_factored(marked: &MarkedState, m: u32) -> Result<OperatorMatrix> {
    let sys = marked.system();
    let ry = expm_unitary(&total_op(&sys, Axis::Y), FRAC_PI_2)?;
    let rx = expm_unitary(&total_op(&sys, Axis::X), FRAC_PI_2)?;
    let left = &ry * &rx * u_ox(marked, -FRAC_PI_2)?;
    let right = u_ox(marked, FRAC_PI_2)? * rx.adjoint() * ry.adjoint();
    Ok(left * g_matrix(marked.n(), m)? * right)
}

/// `[E, D0, D0x, D0 D0x, D0x D0]` on `n` qubits.
pub fn closed_algebra_basis(n: usize) -> Result<[OperatorMatrix; 5]> {
    let d0m = MarkedState::new(0, n)?;
    let d0 = diag_projector(&d0m);
    let d0x = d_s_x(&d0m)?;
    let ab = &d0 * &d0x;
    let ba = &d0x * &d0;
    Ok([identity(d0.nrows()), d0, d0x, ab, ba])
}

/// Least-squares coordinates of `g` in the closed-algebra basis, solved
/// through the Gram matrix. Returns `[c_E, a1, a2, a3, a4]`.
pub fn extract_coefficients(g: &OperatorMatrix, n: usize) -> Result<[C64; 5]> {
    if n < 2 {
        return Err(SpinError::Domain(
            "closed-algebra basis is linearly dependent for a single qubit".into(),
        ));
    }
    let basis = closed_algebra_basis(n)?;
    let gram = DMatrix::<C64>::from_fn(5, 5, |i, j| inner(&basis[i], &basis[j]));
    let rhs = DVector::<C64>::from_fn(5, |i, _| inner(&basis[i], g));
    let sol = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| SpinError::Domain("singular Gram matrix".into()))?;
    Ok([sol[0], sol[1], sol[2], sol[3], sol[4]])
}

/// `max |G(m) - (E + sum alpha_i B_i)|` for the given coefficients.
pub fn closed_algebra_residual(coeffs: &GroverCoefficients) -> Result<f64> {
    let n = check_states(coeffs.n_states)?;
    let basis = closed_algebra_basis(n)?;
    let mut rebuilt = basis[0].clone();
    for (b, a) in basis[1..].iter().zip(coeffs.alpha.iter()) {
        rebuilt += b * *a;
    }
    Ok(max_diff(&g_matrix(n, coeffs.m)?, &rebuilt))
}

/// Largest pairwise disagreement between the closed form, the recursion and
/// (for `N >= 4`) the matrix extraction.
pub fn alpha_three_way_residual(m: u32, n_states: usize) -> Result<f64> {
    let n = check_states(n_states)?;
    let closed = alpha_closed(m, n_states);
    let rec = alpha_recursion(m, n_states);
    let mut worst = closed.iter().zip(&rec).fold(0.0f64, |w, (a, b)| w.max((a - b).abs()));
    if n >= 2 {
        let ext = extract_coefficients(&g_matrix(n, m)?, n)?;
        worst = worst.max((ext[0] - C64::new(1.0, 0.0)).norm());
        for i in 0..4 {
            worst = worst.max((ext[i + 1] - C64::new(closed[i], 0.0)).norm());
            worst = worst.max((ext[i + 1] - C64::new(rec[i], 0.0)).norm());
        }
    }
    Ok(worst)
}

/// Fraction of `I_kz` magnetization left after `m` iterations, from the
/// closed expression in `gamma_1`, `gamma_5`, `gamma_6`. `k` is 1-based.
pub fn conversion_coefficient(m: u32, n_states: usize, epsilons: &[f64], k: usize) -> Result<f64> {
    let n = check_states(n_states)?;
    check_eps(epsilons, n, k)?;
    let c = grover_coefficients(m, n_states)?;
    let nf = n_states as f64;
    let ratio: f64 = epsilons.iter().sum::<f64>() / epsilons[k - 1];
    let val = C64::new(1.0, 0.0) + (c.gamma[4] + c.gamma[5]) / nf - c.gamma[0] * (2.0 / nf * ratio);
    Ok(val.re)
}

fn check_eps(epsilons: &[f64], n: usize, k: usize) -> Result<()> {
    if epsilons.len() != n {
        return Err(SpinError::Domain(format!("{} polarizations for {n} qubits", epsilons.len())));
    }
    if k == 0 || k > n {
        return Err(SpinError::IndexOutOfRange { index: k, max: n });
    }
    if epsilons[k - 1] == 0.0 {
        return Err(SpinError::Domain("readout qubit polarization must be nonzero".into()));
    }
    Ok(())
}

/// Same quantity measured from `U(m) rho(0) U(m)^dagger` with
/// `rho(0) = sum_l eps_l I_lz`.
pub fn conversion_measured(marked: &MarkedState, m: u32, epsilons: &[f64], k: usize) -> Result<f64> {
    let u = grover_propagator(marked, m)?;
    conversion_from_propagator(&u, &marked.system(), epsilons, k)
}

fn conversion_from_propagator(
    u: &OperatorMatrix,
    sys: &SpinSystem,
    epsilons: &[f64],
    k: usize,
) -> Result<f64> {
    check_eps(epsilons, sys.n_work(), k)?;
    let mut rho0 = zeros(sys.dim());
    for (l, &e) in epsilons.iter().enumerate() {
        rho0 += spin_op(sys, l + 1, Axis::Z)? * C64::new(e, 0.0);
    }
    let rho = conjugate(u, &rho0);
    let iz = spin_op(sys, k, Axis::Z)?;
    let norm = sys.dim() as f64 / 4.0;
    Ok((&rho * iz).trace().re / norm / epsilons[k - 1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConversionPoint {
    pub m: u32,
    pub analytic: f64,
    pub measured: f64,
    pub coefficients: GroverCoefficients,
}

impl ConversionPoint {
    pub fn discrepancy(&self) -> f64 {
        (self.analytic - self.measured).abs()
    }
}

/// Conversion coefficient for `m = 0..=m_max`, formula and brute force side
/// by side.
pub fn conversion_scan(
    marked: &MarkedState,
    epsilons: &[f64],
    k: usize,
    m_max: u32,
) -> Result<Vec<ConversionPoint>> {
    let sys = marked.system();
    let n_states = sys.dim();
    let dim = n_states;
    let step = expm_unitary(&basis_projector(dim, dim - 1), PI)? * expm_unitary(&d_s_x(marked)?, PI)?;
    let mut u = identity(dim);
    let mut out = Vec::with_capacity(m_max as usize + 1);
    for m in 0..=m_max {
        if m > 0 {
            u = &step * u;
        }
        out.push(ConversionPoint {
            m,
            analytic: conversion_coefficient(m, n_states, epsilons, k)?,
            measured: conversion_from_propagator(&u, &sys, epsilons, k)?,
            coefficients: grover_coefficients(m, n_states)?,
        });
    }
    Ok(out)
}

/// Default scan length `ceil(4 sqrt N)`.
pub fn default_scan_length(n_states: usize) -> u32 {
    (4.0 * (n_states as f64).sqrt()).ceil() as u32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaPeak {
    pub n_states: usize,
    /// 1-based gamma index.
    pub index: usize,
    pub arg_max: u32,
    pub max_abs: f64,
    pub window: (f64, f64),
}

impl GammaPeak {
    pub fn in_window(&self) -> bool {
        let m = f64::from(self.arg_max);
        m >= self.window.0 && m <= self.window.1
    }
}

/// Arg-max of `|gamma_index(m)|` over `m in [1, floor(4 sqrt N)]`, with the
/// window `[sqrt(N)/2, 2 sqrt(N)]` for comparison.
pub fn gamma_peak(n_states: usize, index: usize) -> Result<GammaPeak> {
    check_states(n_states)?;
    if !(1..=8).contains(&index) {
        return Err(SpinError::IndexOutOfRange { index, max: 8 });
    }
    let root = (n_states as f64).sqrt();
    let m_hi = (4.0 * root).floor() as u32;
    let mut best = (1, f64::NEG_INFINITY);
    for m in 1..=m_hi {
        let v = grover_coefficients(m, n_states)?.gamma[index - 1].norm();
        if v > best.1 {
            best = (m, v);
        }
    }
    Ok(GammaPeak {
        n_states,
        index,
        arg_max: best.0,
        max_abs: best.1,
        window: (0.5 * root, 2.0 * root),
    })
}

/// Least-squares fits of `log y` against `log N` (power law) and against `n`
/// (exponential in the qubit number).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub power_exponent: f64,
    pub power_rss: f64,
    pub exp_rate: f64,
    pub exp_rss: f64,
}

pub fn fit_decay(ns: &[usize], values: &[f64]) -> Result<DecayFit> {
    if ns.len() != values.len() || ns.len() < 2 {
        return Err(SpinError::Domain("decay fit needs at least two matched points".into()));
    }
    if values.iter().any(|&v| v <= 0.0 || !v.is_finite()) {
        return Err(SpinError::Domain("decay fit needs positive finite values".into()));
    }
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let xs_n: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let xs_log: Vec<f64> = xs_n.iter().map(|n| n * std::f64::consts::LN_2).collect();
    let (p, prss) = linear_fit(&xs_log, &ys);
    let (e, erss) = linear_fit(&xs_n, &ys);
    Ok(DecayFit { power_exponent: p, power_rss: prss, exp_rate: e, exp_rss: erss })
}

/// Slope and residual sum of squares of an ordinary least-squares line.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss = xs.iter().zip(ys).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    (slope, rss)
}
