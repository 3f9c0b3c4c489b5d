//! Ensemble search sequences: initial states, analytic conjugation by
//! selective phase shifts, spin-echo oracle Hamiltonians, the simple
//! one-shot search and the Grover-type iteration.

mod grover;
mod search;

pub use grover::*;
pub use search::*;

use num_complex::Complex64 as C64;

use crate::error::{Result, SpinError};
use crate::linalg::{
    anticommutator, commutator, expm_unitary, hermiticity_residual, identity, kron_all, max_abs,
    spin_op, zeros, Axis, OperatorMatrix, SpinSystem, I,
};
use crate::oracle::{aux_pure_state, diag_projector, MarkedState};
use crate::mq::half_plus_z;

/// Density operator of the spin ensemble, usually its traceless deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub rho: OperatorMatrix,
    pub epsilons: Vec<f64>,
    pub is_deviation: bool,
    pub system: SpinSystem,
}

impl EnsembleState {
    /// Largest violation of the trace/Hermiticity invariants.
    pub fn invariant_residual(&self) -> f64 {
        let herm = hermiticity_residual(&self.rho);
        let trace = self.rho.trace();
        let tr = if self.is_deviation {
            trace.norm()
        } else {
            (trace - C64::new(1.0, 0.0)).norm()
        };
        herm.max(tr)
    }
}

/// Deviation state `sum_k eps_k I_k,axis`, tensored with the auxiliary
/// pure state when the system carries auxiliary qubits.
pub fn initial_state(system: &SpinSystem, epsilons: &[f64], axis: Axis) -> Result<EnsembleState> {
    if !matches!(axis, Axis::X | Axis::Y | Axis::Z) {
        return Err(SpinError::Domain("initial magnetization axis must be x, y or z".into()));
    }
    if epsilons.len() != system.n_work() {
        return Err(SpinError::Domain(format!(
            "{} polarizations for {} work qubits",
            epsilons.len(),
            system.n_work()
        )));
    }
    if epsilons.iter().any(|e| !e.is_finite()) {
        return Err(SpinError::Domain("polarizations must be finite".into()));
    }
    let work = system.work_only();
    let mut rho = zeros(work.dim());
    for (k, &eps) in epsilons.iter().enumerate() {
        rho += spin_op(&work, k + 1, axis)? * C64::new(eps, 0.0);
    }
    if system.n_aux() == 2 {
        rho = rho.kronecker(&aux_pure_state(system)?);
    }
    Ok(EnsembleState {
        rho,
        epsilons: epsilons.to_vec(),
        is_deviation: true,
        system: *system,
    })
}

/// `C_s(theta) rho C_s(theta)^dagger` evaluated from the four-term form
/// `rho - (1 - cos) [rho, D]_+ + i sin [rho, D] + ((1 - cos)^2 + sin^2) D rho D`.
pub fn conjugate_selective(rho: &OperatorMatrix, marked: &MarkedState, theta: f64) -> OperatorMatrix {
    let d = diag_projector(marked);
    let (s, c) = theta.sin_cos();
    let one_minus_c = 1.0 - c;
    rho - anticommutator(rho, &d) * C64::new(one_minus_c, 0.0)
        + commutator(rho, &d) * (I * s)
        + &d * rho * &d * C64::new(one_minus_c * one_minus_c + s * s, 0.0)
}

/// Conjugation by `prod_k C_k(theta_k)` over distinct states, from the
/// closed double-sum form.
pub fn conjugate_multi_selective(
    rho: &OperatorMatrix,
    markeds: &[MarkedState],
    thetas: &[f64],
) -> Result<OperatorMatrix> {
    if markeds.len() != thetas.len() {
        return Err(SpinError::Domain(format!(
            "{} states but {} phases",
            markeds.len(),
            thetas.len()
        )));
    }
    for (i, a) in markeds.iter().enumerate() {
        if markeds[..i].iter().any(|b| b.index() == a.index()) {
            return Err(SpinError::Domain(format!("state {} listed twice", a.index())));
        }
    }
    let ds: Vec<OperatorMatrix> = markeds.iter().map(diag_projector).collect();
    let sc: Vec<(f64, f64)> = thetas.iter().map(|t| t.sin_cos()).collect();
    let dim = rho.nrows();

    let mut cos_sum = zeros(dim);
    let mut sin_sum = zeros(dim);
    for (d, &(s, c)) in ds.iter().zip(&sc) {
        cos_sum += d * C64::new(1.0 - c, 0.0);
        sin_sum += d * C64::new(s, 0.0);
    }
    let mut out = rho - anticommutator(rho, &cos_sum) + commutator(rho, &sin_sum) * I;
    for (k, dk) in ds.iter().enumerate() {
        let (sk, ck) = sc[k];
        for (l, dl) in ds.iter().enumerate() {
            let (sl, cl) = sc[l];
            let w = (1.0 - ck) * (1.0 - cl) + sk * sl;
            out += dk * rho * dl * C64::new(w, 0.0);
            if l > k {
                let v = sk * (1.0 - cl) - sl * (1.0 - ck);
                out += (dk * rho * dl - dl * rho * dk) * (I * v);
            }
        }
    }
    Ok(out)
}

/// Spin-echo oracle Hamiltonian `D_s(n-k)` and its oracle cost.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinEcho {
    pub hamiltonian: OperatorMatrix,
    /// `U_f` applications per `exp(-i theta D_s(n-k))`.
    pub oracle_calls: u64,
}

/// Builds `D_s(n-k)` by `k` refocusing steps
/// `D_s(n-j-1) = D_s(n-j) + exp(-i pi I_(n-j)x) D_s(n-j) exp(i pi I_(n-j)x)`.
pub fn spin_echo_hamiltonian(marked: &MarkedState, k: usize) -> Result<SpinEcho> {
    let n = marked.n();
    if k >= n {
        return Err(SpinError::Domain(format!("spin-echo depth {k} must be below n = {n}")));
    }
    let sys = marked.system();
    let mut h = diag_projector(marked);
    for j in 0..k {
        let qubit = n - j;
        let flip = expm_unitary(&spin_op(&sys, qubit, Axis::X)?, std::f64::consts::PI)?;
        h = &h + &flip * &h * flip.adjoint();
    }
    Ok(SpinEcho { hamiltonian: h, oracle_calls: 1 << k })
}

/// `(E/2 + a_1 I_1z) x .. x (E/2 + a_(n-k) I_(n-k)z) x E x .. x E`.
pub fn spin_echo_closed_form(marked: &MarkedState, k: usize) -> OperatorMatrix {
    let n = marked.n();
    let factors: Vec<OperatorMatrix> = (1..=n)
        .map(|l| if l <= n - k { half_plus_z(marked.sign(l)) } else { identity(2) })
        .collect();
    kron_all(factors.iter())
}

/// Residual of `rho` after removing its best multiple of `target`.
pub(crate) fn fit_multiple(rho: &OperatorMatrix, target: &OperatorMatrix) -> (f64, f64) {
    let num = crate::linalg::inner(target, rho);
    let den = crate::linalg::inner(target, target);
    let c = if den.norm() == 0.0 { 0.0 } else { (num / den).re };
    let resid = max_abs(&(rho - target * C64::new(c, 0.0)));
    (c, resid)
}
