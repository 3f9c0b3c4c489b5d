//! Search oracle unitaries, their selective phase-shift equivalents, and
//! the marked-state sign vector.
//!
//! The oracle `U_f` flips auxiliary qubit `a` when the work register holds
//! the marked index `s`. Sandwiching the conditional phase `V_S(theta)`
//! between two `U_f` calls gives `U_o(theta)`, which on the auxiliary
//! sector `|0>|1>` acts exactly like the aux-free diagonal
//! `C_s(theta) = exp(-i theta D_s)`.

use num_complex::Complex64 as C64;

use crate::error::{Result, SpinError};
use crate::linalg::{
    identity, kron_all, pauli_half, spin_op, total_op, expm_unitary, zeros, Axis, OperatorMatrix,
    SpinSystem, ONE,
};

/// Unique solution `s` of the search problem and its sign vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MarkedState {
    s: usize,
    n: usize,
    signs: Vec<i8>,
}

/// `a_k = +1` if bit `k` of `s` is 0, `-1` if it is 1 (qubit 1 = MSB).
pub fn sign_vector(s: usize, n: usize) -> Result<Vec<i8>> {
    if n == 0 || n >= usize::BITS as usize || s >= (1usize << n) {
        return Err(SpinError::Domain(format!("marked index {s} outside [0, 2^{n})")));
    }
    Ok((1..=n)
        .map(|k| if (s >> (n - k)) & 1 == 0 { 1 } else { -1 })
        .collect())
}

impl MarkedState {
    pub fn new(s: usize, n: usize) -> Result<Self> {
        let signs = sign_vector(s, n)?;
        Ok(Self { s, n, signs })
    }

    /// Recovers `s` from a sign vector.
    pub fn from_signs(signs: &[i8]) -> Result<Self> {
        if signs.is_empty() {
            return Err(SpinError::Domain("empty sign vector".into()));
        }
        let mut s = 0usize;
        for &a in signs {
            s <<= 1;
            match a {
                1 => {}
                -1 => s |= 1,
                other => {
                    return Err(SpinError::Domain(format!("sign entries must be +-1, got {other}")))
                }
            }
        }
        Ok(Self { s, n: signs.len(), signs: signs.to_vec() })
    }

    pub fn index(&self) -> usize {
        self.s
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn signs(&self) -> &[i8] {
        &self.signs
    }

    /// `a_k` for 1-based qubit `k`.
    pub fn sign(&self, k: usize) -> f64 {
        f64::from(self.signs[k - 1])
    }

    pub fn system(&self) -> SpinSystem {
        SpinSystem::work(self.n).expect("n >= 1 by construction")
    }
}

/// Diagonal projector `D_s` built as the product
/// `(E/2 + a_1 I_1z) x ... x (E/2 + a_n I_nz)`.
pub fn diag_projector(marked: &MarkedState) -> OperatorMatrix {
    let half = identity(2) * C64::new(0.5, 0.0);
    let iz = pauli_half(Axis::Z);
    let factors: Vec<OperatorMatrix> = (1..=marked.n())
        .map(|k| &half + &iz * C64::new(marked.sign(k), 0.0))
        .collect();
    kron_all(factors.iter())
}

/// `D_r = diag(0, .., 1, .., 0)` written down directly.
pub fn basis_projector(dim: usize, r: usize) -> OperatorMatrix {
    let mut d = zeros(dim);
    d[(r, r)] = ONE;
    d
}

/// `C_s(theta) = E + (exp(-i theta) - 1) D_s`.
pub fn selective_phase(marked: &MarkedState, theta: f64) -> OperatorMatrix {
    let dim = 1 << marked.n();
    let mut c = identity(dim);
    c[(marked.index(), marked.index())] = C64::from_polar(1.0, -theta);
    c
}

fn require_aux(system: &SpinSystem, marked: &MarkedState) -> Result<()> {
    if system.n_aux() != 2 {
        return Err(SpinError::Configuration(
            "explicit oracle needs the two auxiliary qubits".into(),
        ));
    }
    if system.n_work() != marked.n() {
        return Err(SpinError::Configuration(format!(
            "marked state has {} qubits, system has {} work qubits",
            marked.n(),
            system.n_work()
        )));
    }
    Ok(())
}

/// `U_f |x>|a>|b> = |x>|a xor f(x)>|b>` with `f(x) = [x == s]`.
pub fn oracle_uf(marked: &MarkedState, system: &SpinSystem) -> Result<OperatorMatrix> {
    require_aux(system, marked)?;
    let dim = system.dim();
    let mut u = zeros(dim);
    for col in 0..dim {
        let x = col >> 2;
        let row = if x == marked.index() { col ^ 0b10 } else { col };
        u[(row, col)] = ONE;
    }
    Ok(u)
}

/// Conditional phase `V_S(theta)`: `exp(-i theta)` on auxiliary state
/// `a = 1, b = 1`, identity elsewhere; acts on the full system.
pub fn conditional_phase(system: &SpinSystem, theta: f64) -> Result<OperatorMatrix> {
    if system.n_aux() != 2 {
        return Err(SpinError::Configuration("V_S needs the two auxiliary qubits".into()));
    }
    let mut v = identity(system.dim());
    for j in 0..system.dim() {
        if j & 0b11 == 0b11 {
            v[(j, j)] = C64::from_polar(1.0, -theta);
        }
    }
    Ok(v)
}

/// `U_o(theta) = U_f V_S(theta) U_f`.
pub fn oracle_uo(marked: &MarkedState, system: &SpinSystem, theta: f64) -> Result<OperatorMatrix> {
    let uf = oracle_uf(marked, system)?;
    let vs = conditional_phase(system, theta)?;
    Ok(&uf * vs * &uf)
}

/// Restriction of a full-system operator to the auxiliary basis state
/// `aux` (0..4), as an operator on the work register.
pub fn restrict_to_aux(op: &OperatorMatrix, system: &SpinSystem, aux: usize) -> OperatorMatrix {
    let n = system.work_dim();
    let shift = system.n_aux();
    OperatorMatrix::from_fn(n, n, |r, c| op[((r << shift) | aux, (c << shift) | aux)])
}

/// `|0><0| x |1><1|` on the two auxiliary qubits (4x4).
pub fn aux_pure_state(system: &SpinSystem) -> Result<OperatorMatrix> {
    if system.n_aux() != 2 {
        return Err(SpinError::Configuration("no auxiliary qubits in system".into()));
    }
    Ok(basis_projector(4, 0b01))
}

/// Product-operator form `E/4 + (S_1z - S_2z)/2 - S_1z S_2z` of the
/// auxiliary pure state.
pub fn aux_pure_state_expansion() -> OperatorMatrix {
    let aux = SpinSystem::work(2).expect("two qubits");
    let s1 = spin_op(&aux, 1, Axis::Z).expect("qubit 1");
    let s2 = spin_op(&aux, 2, Axis::Z).expect("qubit 2");
    identity(4) * C64::new(0.25, 0.0) + (&s1 - &s2) * C64::new(0.5, 0.0) - &s1 * &s2
}

/// `U_ox(theta) = prod_k exp(-i theta a_k I_kx)`.
pub fn u_ox(marked: &MarkedState, theta: f64) -> Result<OperatorMatrix> {
    let sys = marked.system();
    let mut gen = zeros(sys.dim());
    for k in 1..=marked.n() {
        gen += spin_op(&sys, k, Axis::X)? * C64::new(marked.sign(k), 0.0);
    }
    // The factors commute, so the product is the exponential of the sum.
    expm_unitary(&gen, theta)
}

/// `D_s` obtained from `D_0` by hard x pulses and `U_ox`:
/// `exp(-i pi/2 F_x) U_ox(-pi/2) D_0 U_ox(pi/2) exp(i pi/2 F_x)`.
pub fn projector_from_d0(marked: &MarkedState) -> Result<OperatorMatrix> {
    let sys = marked.system();
    let fx = total_op(&sys, Axis::X);
    let rx = expm_unitary(&fx, std::f64::consts::FRAC_PI_2)?;
    let d0 = basis_projector(sys.dim(), 0);
    let left = &rx * u_ox(marked, -std::f64::consts::FRAC_PI_2)?;
    let right = u_ox(marked, std::f64::consts::FRAC_PI_2)? * rx.adjoint();
    Ok(left * d0 * right)
}

/// How a sequence realizes the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxMode {
    /// `U_f V_S U_f` on work + two auxiliary qubits.
    ExplicitUf,
    /// `C_s(theta)` on the work qubits alone.
    SelectiveCs,
}

/// Oracle unitary together with the number of `U_f` applications it costs.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleUnitary {
    pub matrix: OperatorMatrix,
    pub oracle_calls: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSpec {
    pub marked: MarkedState,
    pub theta: f64,
    pub aux_mode: AuxMode,
}

impl OracleSpec {
    pub fn new(marked: MarkedState, theta: f64, aux_mode: AuxMode) -> Self {
        Self { marked, theta, aux_mode }
    }

    /// System the oracle acts on.
    pub fn system(&self) -> SpinSystem {
        match self.aux_mode {
            AuxMode::ExplicitUf => SpinSystem::with_aux(self.marked.n()),
            AuxMode::SelectiveCs => SpinSystem::work(self.marked.n()),
        }
        .expect("marked state has n >= 1")
    }

    /// Builds `U_o(theta)` (or its `C_s` stand-in). Either way it costs two
    /// `U_f` calls.
    pub fn unitary(&self) -> Result<OracleUnitary> {
        let matrix = match self.aux_mode {
            AuxMode::ExplicitUf => oracle_uo(&self.marked, &self.system(), self.theta)?,
            AuxMode::SelectiveCs => selective_phase(&self.marked, self.theta),
        };
        Ok(OracleUnitary { matrix, oracle_calls: 2 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{is_diagonal, max_abs, max_diff, unitarity_residual, ZERO};
    use std::f64::consts::PI;

    #[test]
    fn sign_vector_examples() {
        assert_eq!(sign_vector(0, 2).unwrap(), vec![1, 1]);
        assert_eq!(sign_vector(3, 2).unwrap(), vec![-1, -1]);
        assert_eq!(sign_vector(2, 2).unwrap(), vec![-1, 1]);
        assert!(matches!(sign_vector(4, 2), Err(SpinError::Domain(_))));
    }

    #[test]
    fn sign_vector_two_has_projector_at_index_two() {
        let m = MarkedState::from_signs(&[-1, 1]).unwrap();
        let d = diag_projector(&m);
        for j in 0..4 {
            let expect = if j == 2 { 1.0 } else { 0.0 };
            assert!((d[(j, j)].re - expect).abs() < 1e-15);
        }
        assert_eq!(m.index(), 2);
    }

    #[test]
    fn projector_product_matches_basis_form() {
        for n in 1..=4 {
            for s in 0..(1 << n) {
                let m = MarkedState::new(s, n).unwrap();
                let d = diag_projector(&m);
                assert!(max_diff(&d, &basis_projector(1 << n, s)) < 1e-15);
                assert!((d.trace().re - 1.0).abs() < 1e-15);
                assert_eq!(MarkedState::from_signs(m.signs()).unwrap(), m);
            }
        }
        let d = diag_projector(&MarkedState::new(0, 1).unwrap());
        assert_eq!(d[(0, 0)], ONE);
        assert_eq!(d[(1, 1)], ZERO);
    }

    #[test]
    fn selective_phase_examples() {
        let m = MarkedState::new(1, 2).unwrap();
        assert!(max_diff(&selective_phase(&m, 0.0), &identity(4)) < 1e-15);
        let d = diag_projector(&m);
        let expect = identity(4) - d * C64::new(2.0, 0.0);
        assert!(max_diff(&selective_phase(&m, PI), &expect) < 1e-15);
        let c = selective_phase(&m, PI / 2.0);
        assert!((c[(1, 1)] - C64::new(0.0, -1.0)).norm() < 1e-15);
        for j in [0, 2, 3] {
            assert_eq!(c[(j, j)], ONE);
        }
    }

    #[test]
    fn selective_phase_matches_exponential() {
        let m = MarkedState::new(5, 3).unwrap();
        let d = diag_projector(&m);
        for theta in [0.3, 1.1, -2.0] {
            let exact = expm_unitary(&d, theta).unwrap();
            assert!(max_diff(&exact, &selective_phase(&m, theta)) < 1e-14);
        }
    }

    #[test]
    fn selective_phase_differs_from_identity_once() {
        for n in 1..=3 {
            for s in 0..(1 << n) {
                let m = MarkedState::new(s, n).unwrap();
                let c = selective_phase(&m, 0.77);
                assert!(is_diagonal(&c));
                let changed = (0..(1 << n)).filter(|&j| c[(j, j)] != ONE).count();
                assert_eq!(changed, 1);
            }
        }
    }

    #[test]
    fn uf_is_involution_and_flips_aux_a() {
        let sys = SpinSystem::with_aux(2).unwrap();
        let m = MarkedState::new(2, 2).unwrap();
        let uf = oracle_uf(&m, &sys).unwrap();
        assert!(max_diff(&(&uf * &uf), &identity(sys.dim())) < 1e-15);
        for b in 0..2 {
            // |s>|0>|b> -> |s>|1>|b>
            let col = (2 << 2) | b;
            assert_eq!(uf[(col | 0b10, col)], ONE);
        }
    }

    #[test]
    fn uf_kicks_back_phase() {
        let sys = SpinSystem::with_aux(2).unwrap();
        let m = MarkedState::new(1, 2).unwrap();
        let uf = oracle_uf(&m, &sys).unwrap();
        let r = 1.0 / 2f64.sqrt();
        for x in 0..4 {
            // |x>(|0> - |1>)/sqrt2 on aux a, aux b = 0
            let mut psi = nalgebra::DVector::<C64>::zeros(16);
            psi[x << 2] = C64::new(r, 0.0);
            psi[(x << 2) | 0b10] = C64::new(-r, 0.0);
            let out = &uf * &psi;
            let sign = if x == 1 { -1.0 } else { 1.0 };
            assert!((&out - &psi * C64::new(sign, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn uf_requires_aux() {
        let m = MarkedState::new(0, 2).unwrap();
        let sys = SpinSystem::work(2).unwrap();
        assert!(matches!(oracle_uf(&m, &sys), Err(SpinError::Configuration(_))));
        assert!(oracle_uo(&m, &sys, 1.0).is_err());
        assert!(aux_pure_state(&sys).is_err());
    }

    #[test]
    fn uo_matches_selective_phase_on_aux_sector() {
        for n in 1..=3 {
            let sys = SpinSystem::with_aux(n).unwrap();
            for s in 0..(1 << n) {
                let m = MarkedState::new(s, n).unwrap();
                for theta in [0.0, PI / 4.0, PI / 2.0, PI] {
                    let uo = oracle_uo(&m, &sys, theta).unwrap();
                    let block = restrict_to_aux(&uo, &sys, 0b01);
                    assert!(max_diff(&block, &selective_phase(&m, theta)) <= 1e-12);
                }
            }
        }
        let sys = SpinSystem::with_aux(2).unwrap();
        let m = MarkedState::new(3, 2).unwrap();
        assert!(max_diff(&oracle_uo(&m, &sys, 0.0).unwrap(), &identity(16)) < 1e-15);
    }

    #[test]
    fn uo_on_superposition() {
        let sys = SpinSystem::with_aux(2).unwrap();
        let m = MarkedState::new(2, 2).unwrap();
        let theta = 0.9;
        let uo = oracle_uo(&m, &sys, theta).unwrap();
        let amps = [0.1, 0.5, -0.3, 0.7];
        let mut psi = nalgebra::DVector::<C64>::zeros(16);
        for (x, a) in amps.iter().enumerate() {
            psi[(x << 2) | 0b01] = C64::new(*a, 0.0);
        }
        let out = &uo * &psi;
        for (x, a) in amps.iter().enumerate() {
            let phase = if x == 2 { C64::from_polar(1.0, -theta) } else { ONE };
            assert!((out[(x << 2) | 0b01] - phase * *a).norm() < 1e-15);
        }
    }

    #[test]
    fn aux_state_expansion() {
        let sys = SpinSystem::with_aux(1).unwrap();
        let p = aux_pure_state(&sys).unwrap();
        assert!((p.trace().re - 1.0).abs() < 1e-15);
        assert!(max_diff(&p, &aux_pure_state_expansion()) <= 1e-13);
        assert!(max_diff(&(&p * &p), &p) <= 1e-12);
    }

    #[test]
    fn projector_relation_through_d0() {
        for n in 1..=3 {
            for s in 0..(1 << n) {
                let m = MarkedState::new(s, n).unwrap();
                let lhs = diag_projector(&m);
                let rhs = projector_from_d0(&m).unwrap();
                assert!(max_diff(&lhs, &rhs) <= 1e-11, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn oracle_spec_modes() {
        let m = MarkedState::new(1, 2).unwrap();
        let a = OracleSpec::new(m.clone(), 0.4, AuxMode::SelectiveCs).unitary().unwrap();
        let b = OracleSpec::new(m, 0.4, AuxMode::ExplicitUf).unitary().unwrap();
        assert_eq!(a.oracle_calls, 2);
        assert_eq!(b.oracle_calls, 2);
        assert_eq!(a.matrix.nrows(), 4);
        assert_eq!(b.matrix.nrows(), 16);
        assert!(unitarity_residual(&b.matrix) < 1e-15);
        assert!(max_abs(&a.matrix) <= 1.0 + 1e-15);
    }
}
