//! Dense complex operators and spin-1/2 operator construction.
//!
//! Conventions: hbar = 1, `I_z = diag(1/2, -1/2)` so that `|0>` is the
//! `M = +1/2` state, and qubit 1 is the most significant tensor factor with
//! auxiliary qubits placed after the work qubits. The computational basis
//! index of a work register therefore equals the integer it encodes.

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64 as C64;

use crate::error::{Result, SpinError};

/// Dense complex square matrix of dimension `2^d`.
pub type OperatorMatrix = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Tolerance used to accept an input as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Default half-width of the forbidden zone around the branch cut at -1.
pub const BRANCH_TOL: f64 = 1e-8;

/// Qubit bookkeeping: `n_work` search qubits followed by 0 or 2 auxiliary
/// qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpinSystem {
    n_work: usize,
    n_aux: usize,
}

impl SpinSystem {
    pub fn new(n_work: usize, n_aux: usize) -> Result<Self> {
        if n_work == 0 {
            return Err(SpinError::Configuration("need at least one work qubit".into()));
        }
        if n_aux != 0 && n_aux != 2 {
            return Err(SpinError::Configuration(format!(
                "auxiliary qubit count must be 0 or 2, got {n_aux}"
            )));
        }
        Ok(Self { n_work, n_aux })
    }

    /// Work qubits only.
    pub fn work(n_work: usize) -> Result<Self> {
        Self::new(n_work, 0)
    }

    /// Work qubits plus the two oracle auxiliary qubits.
    pub fn with_aux(n_work: usize) -> Result<Self> {
        Self::new(n_work, 2)
    }

    pub fn n_work(&self) -> usize {
        self.n_work
    }

    pub fn n_aux(&self) -> usize {
        self.n_aux
    }

    pub fn n_qubits(&self) -> usize {
        self.n_work + self.n_aux
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    /// `N = 2^n` for the work register.
    pub fn work_dim(&self) -> usize {
        1 << self.n_work
    }

    pub fn aux_dim(&self) -> usize {
        1 << self.n_aux
    }

    /// The same work register without auxiliary qubits.
    pub fn work_only(&self) -> Self {
        Self { n_work: self.n_work, n_aux: 0 }
    }

    /// Magnetic quantum number `M` of computational basis state `index`,
    /// counted over the work qubits only.
    pub fn magnetic_number(&self, index: usize) -> f64 {
        let work_bits = index >> self.n_aux;
        (self.n_work as f64 - 2.0 * work_bits.count_ones() as f64) / 2.0
    }

    /// Coherence order `M_j - M_k` of matrix element `(j, k)`.
    pub fn coherence_order(&self, j: usize, k: usize) -> i32 {
        let pj = (j >> self.n_aux).count_ones() as i32;
        let pk = (k >> self.n_aux).count_ones() as i32;
        pk - pj
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
    Plus,
    Minus,
}

impl Axis {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "x" | "X" => Some(Axis::X),
            "y" | "Y" => Some(Axis::Y),
            "z" | "Z" => Some(Axis::Z),
            "+" | "plus" => Some(Axis::Plus),
            "-" | "minus" => Some(Axis::Minus),
            _ => None,
        }
    }
}

/// 2x2 spin-1/2 operator for one axis.
pub fn pauli_half(axis: Axis) -> OperatorMatrix {
    let h = C64::new(0.5, 0.0);
    match axis {
        Axis::X => DMatrix::from_row_slice(2, 2, &[ZERO, h, h, ZERO]),
        Axis::Y => DMatrix::from_row_slice(2, 2, &[ZERO, -I * 0.5, I * 0.5, ZERO]),
        Axis::Z => DMatrix::from_row_slice(2, 2, &[h, ZERO, ZERO, -h]),
        Axis::Plus => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]),
        Axis::Minus => DMatrix::from_row_slice(2, 2, &[ZERO, ZERO, ONE, ZERO]),
    }
}

pub fn identity(dim: usize) -> OperatorMatrix {
    DMatrix::identity(dim, dim)
}

pub fn zeros(dim: usize) -> OperatorMatrix {
    DMatrix::zeros(dim, dim)
}

/// Kronecker product of a list of factors, first factor most significant.
pub fn kron_all<'a, It>(factors: It) -> OperatorMatrix
where
    It: IntoIterator<Item = &'a OperatorMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

/// Embeds a single-qubit operator at 1-based position `k` of a register of
/// `n_qubits` qubits.
pub fn embed_single(n_qubits: usize, k: usize, op: &OperatorMatrix) -> OperatorMatrix {
    let left = identity(1 << (k - 1));
    let right = identity(1 << (n_qubits - k));
    left.kronecker(op).kronecker(&right)
}

/// Single-spin operator `I_k,axis` embedded in the full system.
pub fn spin_op(system: &SpinSystem, k: usize, axis: Axis) -> Result<OperatorMatrix> {
    let max = system.n_qubits();
    if k == 0 || k > max {
        return Err(SpinError::IndexOutOfRange { index: k, max });
    }
    Ok(embed_single(max, k, &pauli_half(axis)))
}

/// `F_axis = sum_k I_k,axis` over the work qubits.
pub fn total_op(system: &SpinSystem, axis: Axis) -> OperatorMatrix {
    let mut acc = zeros(system.dim());
    for k in 1..=system.n_work() {
        acc += embed_single(system.n_qubits(), k, &pauli_half(axis));
    }
    acc
}

pub fn commutator(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    a * b - b * a
}

pub fn anticommutator(a: &OperatorMatrix, b: &OperatorMatrix) -> OperatorMatrix {
    a * b + b * a
}

/// `U A U^dagger`.
pub fn conjugate(u: &OperatorMatrix, a: &OperatorMatrix) -> OperatorMatrix {
    u * a * u.adjoint()
}

/// Largest entry modulus.
pub fn max_abs(a: &OperatorMatrix) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// `max |A - B|` entrywise.
pub fn max_diff(a: &OperatorMatrix, b: &OperatorMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
}

pub fn hermiticity_residual(a: &OperatorMatrix) -> f64 {
    max_diff(a, &a.adjoint())
}

/// `max |U^dagger U - E|`.
pub fn unitarity_residual(u: &OperatorMatrix) -> f64 {
    max_diff(&(u.adjoint() * u), &identity(u.nrows()))
}

pub fn is_diagonal(a: &OperatorMatrix) -> bool {
    for j in 0..a.nrows() {
        for k in 0..a.ncols() {
            if j != k && a[(j, k)] != ZERO {
                return false;
            }
        }
    }
    true
}

/// Symmetrized copy `(A + A^dagger)/2`.
pub fn hermitian_part(a: &OperatorMatrix) -> OperatorMatrix {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Trace inner product `Tr(A^dagger B)`.
pub fn inner(a: &OperatorMatrix, b: &OperatorMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Largest singular value.
pub fn spectral_norm(a: &OperatorMatrix) -> f64 {
    a.clone()
        .singular_values()
        .iter()
        .fold(0.0f64, |m, &s| m.max(s))
}

fn check_square_pow2(a: &OperatorMatrix) -> Result<()> {
    let n = a.nrows();
    if n != a.ncols() || n < 2 || !n.is_power_of_two() {
        return Err(SpinError::ContractViolation(format!(
            "operator must be square with dimension 2^d, d >= 1 (got {}x{})",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix: eigenvalues (ascending) and
/// the unitary whose columns are the eigenvectors.
pub fn hermitian_eigen(h: &OperatorMatrix) -> (Vec<f64>, OperatorMatrix) {
    let eig = hermitian_part(h).symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = OperatorMatrix::from_fn(h.nrows(), h.ncols(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (vals, vecs)
}

/// `exp(-i H t)` for Hermitian `H`.
///
/// Diagonal generators are exponentiated elementwise; everything else goes
/// through the Hermitian eigendecomposition, so the result is unitary to
/// roundoff.
pub fn expm_unitary(h: &OperatorMatrix, t: f64) -> Result<OperatorMatrix> {
    check_square_pow2(h)?;
    let scale = max_abs(h).max(1.0);
    let res = hermiticity_residual(h);
    if res > HERMITIAN_TOL * scale {
        return Err(SpinError::ContractViolation(format!(
            "expm_unitary needs a Hermitian generator (residual {res:e})"
        )));
    }
    let dim = h.nrows();
    if is_diagonal(h) {
        let mut out = zeros(dim);
        for j in 0..dim {
            out[(j, j)] = (-I * h[(j, j)].re * t).exp();
        }
        return Ok(out);
    }
    let (vals, vecs) = hermitian_eigen(h);
    let mut scaled = vecs.clone();
    for (c, &lambda) in vals.iter().enumerate() {
        let phase = (-I * lambda * t).exp();
        for r in 0..dim {
            scaled[(r, c)] *= phase;
        }
    }
    Ok(scaled * vecs.adjoint())
}

/// How `matrix_log_skew` treats eigenphases at the branch cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchPolicy {
    /// Fail when an eigenvalue lies within `tol` of -1.
    Strict { tol: f64 },
    /// Map such eigenvalues to phase `+pi`.
    AssignPlusPi,
}

impl Default for BranchPolicy {
    fn default() -> Self {
        BranchPolicy::Strict { tol: BRANCH_TOL }
    }
}

/// Principal logarithm of a unitary: returns Hermitian `H` with
/// `U = exp(i H)` and eigenphases in `(-pi, pi]`.
pub fn matrix_log_skew(u: &OperatorMatrix) -> Result<OperatorMatrix> {
    matrix_log_skew_with(u, BranchPolicy::default())
}

pub fn matrix_log_skew_with(u: &OperatorMatrix, policy: BranchPolicy) -> Result<OperatorMatrix> {
    check_square_pow2(u)?;
    let res = unitarity_residual(u);
    if res > 1e-8 {
        return Err(SpinError::ContractViolation(format!(
            "matrix_log_skew needs a unitary input (residual {res:e})"
        )));
    }
    let dim = u.nrows();
    // A normal matrix has a diagonal Schur form, so Q holds eigenvectors.
    let (q, t) = Schur::new(u.clone()).unpack();
    let mut phases = Vec::with_capacity(dim);
    for j in 0..dim {
        let lambda = t[(j, j)];
        let mut phase = lambda.arg();
        let dist = (lambda + ONE).norm();
        match policy {
            BranchPolicy::Strict { tol } => {
                if dist <= tol {
                    return Err(SpinError::BranchAmbiguity { phase, tol });
                }
            }
            BranchPolicy::AssignPlusPi => {
                if dist <= BRANCH_TOL {
                    phase = std::f64::consts::PI;
                }
            }
        }
        phases.push(phase);
    }
    let mut scaled = q.clone();
    for (c, &phase) in phases.iter().enumerate() {
        for r in 0..dim {
            scaled[(r, c)] *= phase;
        }
    }
    Ok(hermitian_part(&(scaled * q.adjoint())))
}

/// Anti-Hermitian logarithm `K` with `U = exp(K)`.
pub fn log_unitary(u: &OperatorMatrix) -> Result<OperatorMatrix> {
    Ok(matrix_log_skew(u)? * I)
}

/// `exp(K)` for anti-Hermitian `K`.
pub fn exp_skew(k: &OperatorMatrix) -> Result<OperatorMatrix> {
    // K = i H  =>  exp(K) = exp(-i (-H))
    let h = k * (-I);
    expm_unitary(&h, -1.0)
}

/// Integer power by repeated squaring.
pub fn matrix_power(u: &OperatorMatrix, m: u64) -> OperatorMatrix {
    let mut result = identity(u.nrows());
    let mut base = u.clone();
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Random Hermitian matrix with entries uniform in the unit square.
pub fn random_hermitian<R: rand::Rng + ?Sized>(dim: usize, rng: &mut R) -> OperatorMatrix {
    let mut a = zeros(dim);
    for j in 0..dim {
        for k in 0..dim {
            a[(j, k)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    hermitian_part(&a)
}
