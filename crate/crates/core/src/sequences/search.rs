use num_complex::Complex64 as C64;

use super::{fit_multiple, initial_state};
use crate::error::{Result, SpinError};
use crate::linalg::{conjugate, expm_unitary, spin_op, total_op, zeros, Axis, OperatorMatrix};
use crate::mq::{gradient_crush, zq_dephase};
use crate::oracle::{aux_pure_state, AuxMode, MarkedState, OracleSpec};

/// Oracle phase that maximizes `|sin theta|` in the readout.
pub const DEFAULT_SEARCH_THETA: f64 = -std::f64::consts::FRAC_PI_2;
/// Readout coefficients below this fraction of `max |eps_k|` are ambiguous.
pub const READOUT_THRESHOLD_REL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub theta: f64,
    pub aux_mode: AuxMode,
    pub threshold_rel: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            theta: DEFAULT_SEARCH_THETA,
            aux_mode: AuxMode::SelectiveCs,
            threshold_rel: READOUT_THRESHOLD_REL,
        }
    }
}

/// Comparison of the measured readout scale with the `2/N` prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct PrefactorReport {
    /// Least-squares `c` in `rho_f = c sum_k eps_k a_k I_kz`.
    pub measured: f64,
    /// `2/N` as stated without any `theta` dependence.
    pub claimed: f64,
    /// `(2/N) sin theta`, the scale carried by the sign-bearing term.
    pub with_sin_theta: f64,
    /// `max |rho_f - c sum_k eps_k a_k I_kz|`.
    pub proportionality_residual: f64,
}

impl PrefactorReport {
    /// `measured / claimed`; equals `sin theta` when the readout is exact.
    pub fn ratio_to_claim(&self) -> f64 {
        self.measured / self.claimed
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub recovered_s: usize,
    pub signs: Vec<i8>,
    /// `I_kz` coefficient of the final state, per work qubit.
    pub per_qubit_signal: Vec<f64>,
    /// `min |coefficient| / threshold`.
    pub confidence: f64,
    pub oracle_calls: u64,
    pub prefactor: PrefactorReport,
    pub final_state: OperatorMatrix,
}

/// One-shot ensemble search: `y` magnetization, one oracle conjugation, a
/// 90 degree `y` pulse on the work qubits, gradient crush and zero-quantum
/// dephasing, then per-qubit `I_kz` readout.
pub fn simple_search(marked: &MarkedState, epsilons: &[f64], opts: &SearchOptions) -> Result<SearchResult> {
    let n = marked.n();
    if epsilons.len() != n {
        return Err(SpinError::Domain(format!("{} polarizations for {n} qubits", epsilons.len())));
    }
    if epsilons.contains(&0.0) {
        return Err(SpinError::Domain("every polarization must be nonzero".into()));
    }
    let spec = OracleSpec::new(marked.clone(), opts.theta, opts.aux_mode);
    let system = spec.system();
    let oracle = spec.unitary()?;

    let rho0 = initial_state(&system, epsilons, Axis::Y)?;
    let mut rho = conjugate(&oracle.matrix, &rho0.rho);
    let pulse = expm_unitary(&total_op(&system, Axis::Y), std::f64::consts::FRAC_PI_2)?;
    rho = conjugate(&pulse, &rho);
    rho = zq_dephase(&gradient_crush(&rho));

    // Tr(I_kz^2) over the work register; the aux pure state has unit trace.
    let norm = system.work_dim() as f64 / 4.0;
    let mut per_qubit_signal = Vec::with_capacity(n);
    for k in 1..=n {
        let iz = spin_op(&system, k, Axis::Z)?;
        per_qubit_signal.push((&rho * iz).trace().re / norm);
    }

    let scale = epsilons.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let threshold = opts.threshold_rel * scale;
    let sin_sign = opts.theta.sin().signum();
    let mut signs = Vec::with_capacity(n);
    for (k, (&c, &eps)) in per_qubit_signal.iter().zip(epsilons).enumerate() {
        if c.abs() < threshold || !c.is_finite() {
            return Err(SpinError::AmbiguousReadout { qubit: k + 1, value: c.abs(), threshold });
        }
        signs.push(if c * sin_sign * eps.signum() > 0.0 { 1 } else { -1 });
    }
    let recovered = MarkedState::from_signs(&signs)?;
    let confidence = per_qubit_signal.iter().fold(f64::INFINITY, |m, c| m.min(c.abs())) / threshold;

    let work = system.work_only();
    let mut target = zeros(work.dim());
    for k in 1..=n {
        target += spin_op(&work, k, Axis::Z)? * C64::new(epsilons[k - 1] * marked.sign(k), 0.0);
    }
    if system.n_aux() == 2 {
        target = target.kronecker(&aux_pure_state(&system)?);
    }
    let (measured, proportionality_residual) = fit_multiple(&rho, &target);
    let big_n = system.work_dim() as f64;
    let prefactor = PrefactorReport {
        measured,
        claimed: 2.0 / big_n,
        with_sin_theta: 2.0 / big_n * opts.theta.sin(),
        proportionality_residual,
    };

    Ok(SearchResult {
        recovered_s: recovered.index(),
        signs,
        per_qubit_signal,
        confidence,
        oracle_calls: oracle.oracle_calls,
        prefactor,
        final_state: rho,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn two_qubit_sign_pattern() {
        let m = MarkedState::new(2, 2).unwrap();
        let r = simple_search(&m, &[1.0, 1.0], &SearchOptions::default()).unwrap();
        assert_eq!(r.signs, vec![-1, 1]);
        assert_eq!(r.recovered_s, 2);
        assert_eq!(r.oracle_calls, 2);
        // theta = -pi/2: the coefficients are -(2/N) a_k
        assert!((r.per_qubit_signal[0] - 0.5).abs() < 1e-12);
        assert!((r.per_qubit_signal[1] + 0.5).abs() < 1e-12);
        assert!((r.prefactor.measured - r.prefactor.with_sin_theta).abs() < 1e-12);
        assert!(r.prefactor.proportionality_residual < 1e-12);
    }

    #[test]
    fn single_qubit() {
        let m = MarkedState::new(0, 1).unwrap();
        let r = simple_search(&m, &[1.0], &SearchOptions::default()).unwrap();
        assert_eq!(r.recovered_s, 0);
    }

    #[test]
    fn exhaustive_three_qubits_both_oracle_modes() {
        for mode in [AuxMode::SelectiveCs, AuxMode::ExplicitUf] {
            let opts = SearchOptions { aux_mode: mode, ..SearchOptions::default() };
            for s in 0..8 {
                let m = MarkedState::new(s, 3).unwrap();
                let r = simple_search(&m, &[1.0; 3], &opts).unwrap();
                assert_eq!(r.recovered_s, s);
                assert!(r.prefactor.proportionality_residual < 1e-12);
            }
        }
    }

    #[test]
    fn prefactor_tracks_sin_theta() {
        let m = MarkedState::new(5, 3).unwrap();
        for theta in [0.3, PI / 2.0, 2.0, -1.0] {
            let opts = SearchOptions { theta, ..SearchOptions::default() };
            let r = simple_search(&m, &[1.0, 0.6, 1.4], &opts).unwrap();
            assert_eq!(r.recovered_s, 5);
            assert!((r.prefactor.ratio_to_claim() - theta.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_phase_is_ambiguous() {
        let m = MarkedState::new(1, 2).unwrap();
        let opts = SearchOptions { theta: 0.0, ..SearchOptions::default() };
        assert!(matches!(
            simple_search(&m, &[1.0, 1.0], &opts),
            Err(SpinError::AmbiguousReadout { .. })
        ));
    }

    #[test]
    fn rejects_zero_polarization() {
        let m = MarkedState::new(1, 2).unwrap();
        assert!(simple_search(&m, &[1.0, 0.0], &SearchOptions::default()).is_err());
    }

    #[test]
    fn negative_polarization_still_recovers() {
        let m = MarkedState::new(6, 3).unwrap();
        let r = simple_search(&m, &[1.0, -0.5, 2.0], &SearchOptions::default()).unwrap();
        assert_eq!(r.recovered_s, 6);
    }
}
