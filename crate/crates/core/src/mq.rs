//! Coherence-order grading and the multiple-quantum operator subspaces.
//!
//! Matrix element `(j, k)` of an operator carries coherence order
//! `m = M_j - M_k`, where `M` is the `F_z` eigenvalue of a computational
//! basis state. Zero-quantum operators have support only on `m = 0`; the
//! LOMSO subspace (longitudinal magnetization and spin order) is the
//! diagonal part of that.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Result, SpinError};
use crate::linalg::{
    anticommutator, commutator, embed_single, expm_unitary, identity, max_abs, pauli_half,
    total_op, zeros, Axis, OperatorMatrix, SpinSystem, I,
};
use crate::oracle::basis_projector;

/// An operator split into its coherence-order components.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceDecomposition {
    pub n: usize,
    pub components: BTreeMap<i32, OperatorMatrix>,
}

impl CoherenceDecomposition {
    pub fn component(&self, m: i32) -> Option<&OperatorMatrix> {
        self.components.get(&m)
    }

    pub fn reconstruct(&self) -> OperatorMatrix {
        let dim = self.components.values().next().map_or(1, |c| c.nrows());
        self.components.values().fold(zeros(dim), |acc, c| acc + c)
    }

    /// Orders whose component has an entry larger than `tol`.
    pub fn support(&self, tol: f64) -> Vec<i32> {
        self.components
            .iter()
            .filter(|(_, c)| max_abs(c) > tol)
            .map(|(&m, _)| m)
            .collect()
    }
}

/// Grades `a` entrywise by `M_j - M_k` over the work qubits of `system`.
pub fn decompose_orders(a: &OperatorMatrix, system: &SpinSystem) -> CoherenceDecomposition {
    let n = system.n_work() as i32;
    let dim = a.nrows();
    let mut components: BTreeMap<i32, OperatorMatrix> = (-n..=n).map(|m| (m, zeros(dim))).collect();
    for j in 0..dim {
        for k in 0..dim {
            let m = system.coherence_order(j, k);
            components.get_mut(&m).expect("order within [-n, n]")[(j, k)] = a[(j, k)];
        }
    }
    CoherenceDecomposition { n: system.n_work(), components }
}

/// Order-`m` component of `a`.
pub fn order_component(a: &OperatorMatrix, system: &SpinSystem, m: i32) -> OperatorMatrix {
    let dim = a.nrows();
    OperatorMatrix::from_fn(dim, dim, |j, k| {
        if system.coherence_order(j, k) == m {
            a[(j, k)]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Orders present in `a` above `tol`.
pub fn order_support(a: &OperatorMatrix, system: &SpinSystem, tol: f64) -> Vec<i32> {
    decompose_orders(a, system).support(tol)
}

fn full_system(dim: usize) -> SpinSystem {
    SpinSystem::work(dim.trailing_zeros() as usize).expect("dimension 2^d with d >= 1")
}

/// Ideal z-gradient: keeps only the zero-quantum part (every qubit in the
/// operator's space is dephased).
pub fn gradient_crush(rho: &OperatorMatrix) -> OperatorMatrix {
    order_component(rho, &full_system(rho.nrows()), 0)
}

/// Ideal zero-quantum dephasing: keeps only the LOMSO (diagonal) part.
pub fn zq_dephase(rho: &OperatorMatrix) -> OperatorMatrix {
    let dim = rho.nrows();
    OperatorMatrix::from_fn(dim, dim, |j, k| if j == k { rho[(j, k)] } else { C64::new(0.0, 0.0) })
}

/// LOMSO product-operator basis `Z_l` and the transform `D_k = sum_l A_kl Z_l`.
///
/// Index `l` is a qubit subset written like a basis index (qubit 1 = MSB);
/// `Z_0 = E` and `Z_l = 2^(w-1) prod_{k in l} I_kz` for `w = |l| >= 1`.
#[derive(Debug, Clone)]
pub struct LomsoBasis {
    pub n: usize,
    /// Diagonals of the `Z_l`; `z_diag[l][j] = (Z_l)_jj`.
    z_diag: Vec<Vec<f64>>,
    pub a: DMatrix<f64>,
    pub a_inv: DMatrix<f64>,
}

/// Diagonal entry `j` of `Z_l`.
fn z_entry(l: usize, j: usize) -> f64 {
    if l == 0 {
        1.0
    } else {
        // 2^(w-1) * prod(+-1/2) = (1/2) (-1)^{|j & l|}
        if (j & l).count_ones().is_multiple_of(2) {
            0.5
        } else {
            -0.5
        }
    }
}

/// Builds the LOMSO basis and solves for `A` numerically.
pub fn lomso_transform(n: usize) -> Result<LomsoBasis> {
    if n == 0 || n > 8 {
        return Err(SpinError::Domain(format!("LOMSO transform supports 1 <= n <= 8, got {n}")));
    }
    let dim = 1usize << n;
    let z_diag: Vec<Vec<f64>> = (0..dim).map(|l| (0..dim).map(|j| z_entry(l, j)).collect()).collect();
    // zmat[(j, l)] = (Z_l)_jj ; e_k = zmat * A_k^T  =>  A^T = zmat^{-1}
    let zmat = DMatrix::<f64>::from_fn(dim, dim, |j, l| z_diag[l][j]);
    let zinv = zmat
        .clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| SpinError::Domain("LOMSO basis matrix is singular".into()))?;
    let a = zinv.transpose();
    let a_inv = zmat.transpose();
    Ok(LomsoBasis { n, z_diag, a, a_inv })
}

impl LomsoBasis {
    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn system(&self) -> SpinSystem {
        SpinSystem::work(self.n).expect("n >= 1")
    }

    /// `Z_l` as a matrix.
    pub fn z_op(&self, l: usize) -> OperatorMatrix {
        let d = &self.z_diag[l];
        OperatorMatrix::from_fn(self.dim(), self.dim(), |r, c| {
            if r == c {
                C64::new(d[r], 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
    }

    /// `Z_l` written as the explicit product of spin operators.
    pub fn z_product(&self, l: usize) -> OperatorMatrix {
        product_operator(self.n, l, Axis::Z)
    }

    /// `sum_l A_kl Z_l`.
    pub fn reconstruct_projector(&self, k: usize) -> OperatorMatrix {
        let mut acc = zeros(self.dim());
        for l in 0..self.dim() {
            acc += self.z_op(l) * C64::new(self.a[(k, l)], 0.0);
        }
        acc
    }

    /// `X_l = exp(-i pi/2 F_y) Z_l exp(i pi/2 F_y)`.
    pub fn x_product(&self, l: usize) -> Result<OperatorMatrix> {
        let ry = y_quarter_turn(&self.system())?;
        Ok(&ry * self.z_op(l) * ry.adjoint())
    }

    /// `X_l` assembled from diagonal projectors through `A^{-1}`.
    pub fn x_product_from_projectors(&self, l: usize) -> Result<OperatorMatrix> {
        let mut diag = zeros(self.dim());
        for j in 0..self.dim() {
            diag[(j, j)] = C64::new(self.a_inv[(l, j)], 0.0);
        }
        let ry = y_quarter_turn(&self.system())?;
        Ok(&ry * diag * ry.adjoint())
    }

    /// Operator function `f = sum_l b_l X_l`.
    pub fn operator_function(&self, coeffs: &[(usize, f64)]) -> Result<OperatorMatrix> {
        let mut acc = zeros(self.dim());
        for &(l, b) in coeffs {
            if l >= self.dim() {
                return Err(SpinError::IndexOutOfRange { index: l, max: self.dim() - 1 });
            }
            acc += self.x_product(l)? * C64::new(b, 0.0);
        }
        Ok(acc)
    }
}

/// LOMSO expansion coefficients of `D_s` in closed form:
/// `D_s = (1/N) sum_l prod_{k in l} (2 a_k I_kz)`.
pub fn projector_expansion(signs: &[i8]) -> Vec<f64> {
    let n = signs.len();
    let dim = 1usize << n;
    (0..dim)
        .map(|l| {
            let mut c = 1.0 / dim as f64;
            for k in 1..=n {
                if (l >> (n - k)) & 1 == 1 {
                    c *= f64::from(signs[k - 1]);
                }
            }
            if l != 0 {
                c *= 2.0;
            }
            c
        })
        .collect()
}

/// `2^(w-1) prod_{k in l} I_k,axis` on `n` work qubits (`E` for `l = 0`).
pub fn product_operator(n: usize, l: usize, axis: Axis) -> OperatorMatrix {
    let dim = 1usize << n;
    if l == 0 {
        return identity(dim);
    }
    let mut acc = identity(dim);
    let mut weight = 0;
    for k in 1..=n {
        if (l >> (n - k)) & 1 == 1 {
            acc *= embed_single(n, k, &pauli_half(axis));
            weight += 1;
        }
    }
    acc * C64::new(f64::from(1u32 << (weight - 1)), 0.0)
}

fn y_quarter_turn(system: &SpinSystem) -> Result<OperatorMatrix> {
    expm_unitary(&total_op(system, Axis::Y), std::f64::consts::FRAC_PI_2)
}

/// Smallest number of phase-cycling steps that separates orders `-n..=n`.
pub fn min_phase_steps(n: usize) -> usize {
    2 * n + 1
}

/// Discrete-Fourier phase-cycling projection onto one coherence order:
/// `(1/N1) sum_k exp(i phi_k m) exp(-i phi_k F_z) f exp(i phi_k F_z)` with
/// `phi_k = 2 pi k / N1`.
pub fn phase_cycle_project(
    f_op: &OperatorMatrix,
    system: &SpinSystem,
    n1: usize,
    target_order: i32,
) -> Result<OperatorMatrix> {
    let n = system.n_work();
    let needed = min_phase_steps(n);
    if n1 < needed {
        return Err(SpinError::Aliasing { steps: n1, n, needed });
    }
    let fz = total_op(system, Axis::Z);
    let dim = f_op.nrows();
    let mut acc = zeros(dim);
    for step in 0..n1 {
        let phi = 2.0 * std::f64::consts::PI * step as f64 / n1 as f64;
        let rot = expm_unitary(&fz, phi)?;
        // diagonal rotation: scale rows and columns instead of full products
        let weight = C64::from_polar(1.0, phi * f64::from(target_order));
        for j in 0..dim {
            for k in 0..dim {
                acc[(j, k)] += weight * rot[(j, j)] * f_op[(j, k)] * rot[(k, k)].conj();
            }
        }
    }
    Ok(acc / C64::new(n1 as f64, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorVariant {
    /// `i [X_l, D_0 - D_{N-1}]`
    Comm,
    /// `[X_l, D_0 + D_{N-1}]_+`
    Anticomm,
}

/// Multiple-quantum generator built from the x product operator on
/// `l_indices` (1-based qubits) and the extreme projectors `D_0`, `D_{N-1}`.
pub fn mq_generator(
    system: &SpinSystem,
    l_indices: &[usize],
    variant: GeneratorVariant,
) -> Result<OperatorMatrix> {
    let n = system.n_work();
    if l_indices.is_empty() {
        return Err(SpinError::Domain("generator needs at least one qubit".into()));
    }
    let mut mask = 0usize;
    for &k in l_indices {
        if k == 0 || k > n {
            return Err(SpinError::IndexOutOfRange { index: k, max: n });
        }
        let bit = 1 << (n - k);
        if mask & bit != 0 {
            return Err(SpinError::Domain(format!("qubit {k} listed twice")));
        }
        mask |= bit;
    }
    let x = product_operator(n, mask, Axis::X);
    let dim = system.work_dim();
    let d0 = basis_projector(dim, 0);
    let dn = basis_projector(dim, dim - 1);
    Ok(match variant {
        GeneratorVariant::Comm => commutator(&x, &(d0 - dn)) * I,
        GeneratorVariant::Anticomm => anticommutator(&x, &(d0 + dn)),
    })
}

/// True when every entry outside order `m = 0` is within `tol`.
pub fn is_zero_quantum(a: &OperatorMatrix, system: &SpinSystem, tol: f64) -> bool {
    order_support(a, system, tol).iter().all(|&m| m == 0)
}

/// True when all support sits on even orders.
pub fn is_even_order(a: &OperatorMatrix, system: &SpinSystem, tol: f64) -> bool {
    order_support(a, system, tol).iter().all(|&m| m % 2 == 0)
}

/// Unit operator helper for the `E/2 +- I_z` factors used in expansions.
pub fn half_plus_z(sign: f64) -> OperatorMatrix {
    identity(2) * C64::new(0.5, 0.0) + pauli_half(Axis::Z) * C64::new(sign, 0.0)
}
