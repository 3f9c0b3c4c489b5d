//! Multiple-quantum spectroscopy: excitation, labeled evolution,
//! reconversion, detection and Fourier analysis of the detected signal.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Result, SpinError};
use crate::linalg::{
    commutator, conjugate, expm_unitary, hermitian_eigen, hermiticity_residual, identity, max_diff,
    spin_op, total_op, zeros, Axis, OperatorMatrix, SpinSystem, HERMITIAN_TOL, I,
};
use crate::mq::{min_phase_steps, phase_cycle_project};
use crate::oracle::{diag_projector, MarkedState};
use crate::sequences::d_s_x;

/// Tolerance of the in-phase condition check.
pub const INPHASE_TOL: f64 = 1e-9;
/// Peaks below this fraction of the largest amplitude are ignored.
pub const PEAK_THRESHOLD_REL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub enum HamiltonianKind {
    WeakCoupling { offsets: Vec<f64>, couplings: Vec<(usize, usize, f64)> },
    UniformFz { omega: f64 },
    Custom,
}

/// Labeling Hamiltonian for the evolution period (rad/s, couplings in Hz).
#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonian {
    pub kind: HamiltonianKind,
    pub system: SpinSystem,
    pub matrix: OperatorMatrix,
}

impl SpinHamiltonian {
    /// `sum_k Omega_k I_kz + sum_{k<l} 2 pi J_kl I_kz I_lz`.
    pub fn weak_coupling(
        system: &SpinSystem,
        offsets: &[f64],
        couplings: &[(usize, usize, f64)],
    ) -> Result<Self> {
        if offsets.len() != system.n_work() {
            return Err(SpinError::Domain(format!(
                "{} offsets for {} qubits",
                offsets.len(),
                system.n_work()
            )));
        }
        let mut h = zeros(system.dim());
        for (k, &w) in offsets.iter().enumerate() {
            h += spin_op(system, k + 1, Axis::Z)? * C64::new(w, 0.0);
        }
        for &(k, l, j) in couplings {
            if k == l {
                return Err(SpinError::Domain(format!("coupling of qubit {k} with itself")));
            }
            let zz = spin_op(system, k, Axis::Z)? * spin_op(system, l, Axis::Z)?;
            h += zz * C64::new(2.0 * std::f64::consts::PI * j, 0.0);
        }
        Ok(Self {
            kind: HamiltonianKind::WeakCoupling { offsets: offsets.to_vec(), couplings: couplings.to_vec() },
            system: *system,
            matrix: h,
        })
    }

    /// `omega F_z`.
    pub fn uniform_fz(system: &SpinSystem, omega: f64) -> Self {
        Self {
            kind: HamiltonianKind::UniformFz { omega },
            system: *system,
            matrix: total_op(system, Axis::Z) * C64::new(omega, 0.0),
        }
    }

    pub fn custom(system: &SpinSystem, matrix: OperatorMatrix) -> Result<Self> {
        if matrix.nrows() != system.dim() || matrix.ncols() != system.dim() {
            return Err(SpinError::Domain("Hamiltonian dimension does not match the system".into()));
        }
        if hermiticity_residual(&matrix) > HERMITIAN_TOL {
            return Err(SpinError::ContractViolation("Hamiltonian is not Hermitian".into()));
        }
        Ok(Self { kind: HamiltonianKind::Custom, system: *system, matrix })
    }

    /// `omega` of a uniform `F_z` Hamiltonian.
    pub fn uniform_omega(&self) -> Option<f64> {
        match self.kind {
            HamiltonianKind::UniformFz { omega } => Some(omega),
            _ => None,
        }
    }

    /// Largest transition frequency `max |E_j - E_k|`.
    pub fn max_transition(&self) -> f64 {
        let (vals, _) = hermitian_eigen(&self.matrix);
        match (vals.first(), vals.last()) {
            (Some(lo), Some(hi)) => hi - lo,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Excitation sequence `U`.
    pub u_seq: OperatorMatrix,
    /// Reconversion sequence `V`, applied before the phase factor `exp(i phi F_z)`.
    pub v_seq: OperatorMatrix,
    pub hamiltonian: SpinHamiltonian,
    pub dt: f64,
    pub points: usize,
    pub detect_axis: Axis,
    pub phi: f64,
    /// Phase-cycled selection of one coherence order right after excitation.
    pub select_order: Option<i32>,
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        let dim = self.hamiltonian.system.dim();
        if self.u_seq.shape() != (dim, dim) || self.v_seq.shape() != (dim, dim) {
            return Err(SpinError::Configuration("sequence dimensions do not match the system".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SpinError::Configuration(format!("dwell time {} must be positive", self.dt)));
        }
        if self.points < 2 || !self.points.is_power_of_two() {
            return Err(SpinError::Configuration(format!("{} points is not a power of two", self.points)));
        }
        if !self.phi.is_finite() {
            return Err(SpinError::Configuration("reconversion phase must be finite".into()));
        }
        if !matches!(self.detect_axis, Axis::X | Axis::Y | Axis::Z) {
            return Err(SpinError::Configuration("detection axis must be x, y or z".into()));
        }
        let nyquist = std::f64::consts::PI / self.dt;
        let max_omega = self.hamiltonian.max_transition();
        if max_omega >= nyquist {
            return Err(SpinError::Sampling { max_omega, nyquist });
        }
        Ok(())
    }

    /// `V exp(i phi F_z)`.
    pub fn effective_v(&self) -> Result<OperatorMatrix> {
        let fz = total_op(&self.hamiltonian.system, Axis::Z);
        Ok(&self.v_seq * expm_unitary(&fz, -self.phi)?)
    }

    /// `P = U rho0 U^dagger`, order-filtered when requested.
    pub fn excited(&self, rho0: &OperatorMatrix) -> Result<OperatorMatrix> {
        let p = conjugate(&self.u_seq, rho0);
        match self.select_order {
            None => Ok(p),
            Some(m) => {
                let sys = &self.hamiltonian.system;
                phase_cycle_project(&p, sys, min_phase_steps(sys.n_work()), m)
            }
        }
    }

    /// `Q = V_eff^dagger F_q V_eff`.
    pub fn detector(&self) -> Result<OperatorMatrix> {
        let v = self.effective_v()?;
        let fq = total_op(&self.hamiltonian.system, self.detect_axis);
        Ok(v.adjoint() * fq * v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub dt: f64,
    pub values: Vec<C64>,
}

impl TimeSeries {
    pub fn times(&self) -> Vec<f64> {
        (0..self.values.len()).map(|i| i as f64 * self.dt).collect()
    }
}

/// `Tr{F_q V e^{-iHt} U rho0 U^dagger e^{iHt} V^dagger}` on the sampling grid,
/// by direct conjugation at every point.
pub fn run_pipeline(rho0: &OperatorMatrix, cfg: &PipelineConfig) -> Result<TimeSeries> {
    cfg.validate()?;
    let p = cfg.excited(rho0)?;
    let v = cfg.effective_v()?;
    let fq = total_op(&cfg.hamiltonian.system, cfg.detect_axis);
    let mut values = Vec::with_capacity(cfg.points);
    for i in 0..cfg.points {
        let t = i as f64 * cfg.dt;
        let w = &v * expm_unitary(&cfg.hamiltonian.matrix, t)?;
        let rho = conjugate(&w, &p);
        values.push((&fq * rho).trace());
    }
    Ok(TimeSeries { dt: cfg.dt, values })
}

/// One transition `j -> k` of the evolution Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub j: usize,
    pub k: usize,
    pub omega: f64,
    pub amplitude: C64,
}

/// Transition lines `(omega_jk, Q*_jk P_jk)` in the eigenbasis of `H`.
pub fn eigen_expand(p: &OperatorMatrix, q: &OperatorMatrix, h: &SpinHamiltonian) -> Vec<Line> {
    let (vals, vecs) = hermitian_eigen(&h.matrix);
    let pe = vecs.adjoint() * p * &vecs;
    let qe = vecs.adjoint() * q * &vecs;
    let dim = vals.len();
    let mut lines = Vec::with_capacity(dim * dim);
    for j in 0..dim {
        for k in 0..dim {
            let amp = qe[(j, k)].conj() * pe[(j, k)];
            if amp != C64::new(0.0, 0.0) {
                lines.push(Line { j, k, omega: vals[j] - vals[k], amplitude: amp });
            }
        }
    }
    lines
}

/// `sum_lines amplitude exp(-i omega t)`.
pub fn resum(lines: &[Line], t: f64) -> C64 {
    lines.iter().map(|l| l.amplitude * C64::from_polar(1.0, -l.omega * t)).sum()
}

/// Lines merged by frequency (within `tol`), smallest frequency first.
pub fn merge_lines(lines: &[Line], tol: f64) -> Vec<(f64, C64)> {
    let mut sorted: Vec<&Line> = lines.iter().collect();
    sorted.sort_by(|a, b| a.omega.total_cmp(&b.omega));
    let mut out: Vec<(f64, C64)> = Vec::new();
    for l in sorted {
        match out.last_mut() {
            Some((w, a)) if (l.omega - *w).abs() <= tol => *a += l.amplitude,
            _ => out.push((l.omega, l.amplitude)),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InphaseReport {
    pub holds: bool,
    pub residual: f64,
}

/// Checks `Q^dagger = exp(-i phi F_z) P exp(i phi F_z)` with
/// `P = U F_p U^dagger` and `Q = V^dagger F_q V`.
pub fn inphase_check(
    u: &OperatorMatrix,
    v: &OperatorMatrix,
    system: &SpinSystem,
    p_axis: Axis,
    q_axis: Axis,
    phi: f64,
) -> Result<InphaseReport> {
    let p = conjugate(u, &total_op(system, p_axis));
    let q = v.adjoint() * total_op(system, q_axis) * v;
    let rot = expm_unitary(&total_op(system, Axis::Z), phi)?;
    let residual = max_diff(&q.adjoint(), &conjugate(&rot, &p));
    Ok(InphaseReport { holds: residual <= INPHASE_TOL, residual })
}

/// Hard rotation `R` with `R F_from R^dagger = F_to`.
pub fn axis_rotation(system: &SpinSystem, from: Axis, to: Axis) -> Result<OperatorMatrix> {
    use std::f64::consts::FRAC_PI_2;
    let (gen, angle) = match (from, to) {
        (a, b) if a == b => return Ok(identity(system.dim())),
        (Axis::Z, Axis::X) => (Axis::Y, FRAC_PI_2),
        (Axis::X, Axis::Z) => (Axis::Y, -FRAC_PI_2),
        (Axis::Z, Axis::Y) => (Axis::X, -FRAC_PI_2),
        (Axis::Y, Axis::Z) => (Axis::X, FRAC_PI_2),
        (Axis::X, Axis::Y) => (Axis::Z, FRAC_PI_2),
        (Axis::Y, Axis::X) => (Axis::Z, -FRAC_PI_2),
        _ => return Err(SpinError::Domain("rotation axes must be x, y or z".into())),
    };
    expm_unitary(&total_op(system, gen), angle)
}

/// Reconversion `V` without the phase factor, so that `V exp(i phi F_z)`
/// satisfies the in-phase condition for excitation `U`: `R U^dagger` with
/// `R^dagger F_q R = F_p`.
pub fn inphase_reconversion(
    u: &OperatorMatrix,
    system: &SpinSystem,
    p_axis: Axis,
    q_axis: Axis,
) -> Result<OperatorMatrix> {
    Ok(axis_rotation(system, q_axis, p_axis)?.adjoint() * u.adjoint())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    /// rad/s
    pub frequency: f64,
    pub amplitude: C64,
    pub order: Option<i32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// rad/s, ascending.
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<C64>,
    pub peaks: Vec<Peak>,
    pub parseval_residual: f64,
}

impl Spectrum {
    /// Bin spacing in rad/s.
    pub fn resolution(&self) -> f64 {
        if self.frequencies.len() < 2 {
            0.0
        } else {
            self.frequencies[1] - self.frequencies[0]
        }
    }
}

/// `X(w_b) = (1/M) sum_t x_t exp(+i w_b t)` on the centered grid
/// `w_b = 2 pi b / (M dt)`, `b = -M/2 .. M/2 - 1`, followed by peak picking.
/// With `omega` set, peaks are labeled with `round(freq / omega)`.
pub fn spectrum(series: &TimeSeries, omega: Option<f64>) -> Result<Spectrum> {
    let m = series.values.len();
    if m < 2 || !m.is_power_of_two() {
        return Err(SpinError::Configuration(format!("{m} samples is not a power of two")));
    }
    let mut buf = series.values.clone();
    FftPlanner::<f64>::new().plan_fft_inverse(m).process(&mut buf);
    let scale = 1.0 / m as f64;
    let half = m / 2;
    let mut amplitudes = Vec::with_capacity(m);
    let mut frequencies = Vec::with_capacity(m);
    let dw = 2.0 * std::f64::consts::PI / (m as f64 * series.dt);
    for i in 0..m {
        let src = (i + half) % m;
        amplitudes.push(buf[src] * scale);
        frequencies.push((i as f64 - half as f64) * dw);
    }

    let e_time: f64 = series.values.iter().map(|v| v.norm_sqr()).sum();
    let e_freq: f64 = amplitudes.iter().map(|v| v.norm_sqr()).sum::<f64>() * m as f64;
    let parseval_residual = if e_time > 0.0 { (e_time - e_freq).abs() / e_time } else { e_freq };

    let mags: Vec<f64> = amplitudes.iter().map(|a| a.norm()).collect();
    let top = mags.iter().cloned().fold(0.0, f64::max);
    let mut peaks = Vec::new();
    if top > 0.0 {
        for i in 0..m {
            let left = mags[(i + m - 1) % m];
            let right = mags[(i + 1) % m];
            if mags[i] >= PEAK_THRESHOLD_REL * top && mags[i] > left && mags[i] >= right {
                let f = frequencies[i];
                peaks.push(Peak {
                    frequency: f,
                    amplitude: amplitudes[i],
                    order: omega.filter(|w| *w != 0.0).map(|w| (f / w).round() as i32),
                });
            }
        }
    }
    Ok(Spectrum { frequencies, amplitudes, peaks, parseval_residual })
}

/// `I(m) = sum_{M_j - M_k = m} Q*_jk P_jk` in the computational basis.
pub fn order_intensities(
    p: &OperatorMatrix,
    q: &OperatorMatrix,
    system: &SpinSystem,
) -> BTreeMap<i32, C64> {
    let mut out = BTreeMap::new();
    let dim = p.nrows();
    for j in 0..dim {
        for k in 0..dim {
            let m = system.coherence_order(j, k);
            *out.entry(m).or_insert(C64::new(0.0, 0.0)) += q[(j, k)].conj() * p[(j, k)];
        }
    }
    out
}

/// Zero-quantum projection of `f_s + f_r` with `n1` phase steps.
pub fn cross_zq_hamiltonian(
    f_s: &OperatorMatrix,
    f_r: &OperatorMatrix,
    system: &SpinSystem,
    n1: usize,
) -> Result<OperatorMatrix> {
    phase_cycle_project(&(f_s + f_r), system, n1, 0)
}

pub const MAX_SERIES_ORDER: usize = 6;

/// `exp(i t H_r) H_s exp(-i t H_r)` exactly and as the nested-commutator
/// series `sum_k (i t)^k / k! ad_{H_r}^k H_s` truncated at `series_order`.
pub fn interaction_frame(
    h_s: &OperatorMatrix,
    h_r: &OperatorMatrix,
    t: f64,
    series_order: usize,
) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if series_order > MAX_SERIES_ORDER {
        return Err(SpinError::Domain(format!(
            "series order {series_order} exceeds {MAX_SERIES_ORDER}"
        )));
    }
    let u = expm_unitary(h_r, -t)?;
    let exact = conjugate(&u, h_s);
    let mut term = h_s.clone();
    let mut series = h_s.clone();
    let mut fact = 1.0;
    for k in 1..=series_order {
        fact *= k as f64;
        term = commutator(h_r, &term);
        series += &term * (I * t).powu(k as u32) / C64::new(fact, 0.0);
    }
    Ok((exact, series))
}

/// Parameters of the two-subsystem zero-quantum demonstration.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossPeakDemo {
    pub n: usize,
    /// Qubits `1..=split` form subsystem A, the rest subsystem B.
    pub split: usize,
    pub s: usize,
    /// Oracle-independent state on subsystem A.
    pub r: usize,
    /// Weight of the oracle-independent term.
    pub lambda: f64,
    /// Duration of the zero-quantum evolution in the excitation.
    pub tau: f64,
    pub omega_a: f64,
    pub omega_b: f64,
    pub points: usize,
    pub dt: f64,
}

impl Default for CrossPeakDemo {
    fn default() -> Self {
        let two_pi = 2.0 * std::f64::consts::PI;
        Self {
            n: 4,
            split: 2,
            s: 5,
            r: 0,
            lambda: 4.0,
            tau: 1.0,
            omega_a: two_pi * 100.0,
            omega_b: two_pi * 60.0,
            points: 512,
            dt: 1.0 / 1280.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossPeakResult {
    pub series: TimeSeries,
    pub spectrum: Spectrum,
    /// Spacing `omega_a - omega_b` the peaks are checked against.
    pub spacing: f64,
    /// Peak frequencies off the `k (omega_a - omega_b)` grid by more than half a bin.
    pub stray_peaks: Vec<f64>,
    /// Largest nonzero-frequency peak over the zero-frequency peak.
    pub cross_to_zero_ratio: f64,
}

impl CrossPeakDemo {
    pub fn system(&self) -> Result<SpinSystem> {
        SpinSystem::work(self.n)
    }

    /// `[D_s^x + lambda (D_r^x (x) E_B)]` projected onto zero quantum.
    pub fn zq_hamiltonian(&self) -> Result<OperatorMatrix> {
        if self.split == 0 || self.split >= self.n {
            return Err(SpinError::Domain("subsystem split must leave both parts nonempty".into()));
        }
        let sys = self.system()?;
        let f_s = d_s_x(&MarkedState::new(self.s, self.n)?)?;
        let r_a = MarkedState::new(self.r, self.split)?;
        let f_r = d_s_x(&r_a)?.kronecker(&identity(1 << (self.n - self.split)))
            * C64::new(self.lambda, 0.0);
        cross_zq_hamiltonian(&f_s, &f_r, &sys, min_phase_steps(self.n))
    }

    /// Pipeline with `U = R_y(pi/2) exp(-i tau H_zq) R_y(pi/2)`, zero-quantum
    /// selection after excitation, in-phase reconversion and `z` detection.
    pub fn config(&self) -> Result<PipelineConfig> {
        let sys = self.system()?;
        let ry = expm_unitary(&total_op(&sys, Axis::Y), std::f64::consts::FRAC_PI_2)?;
        let u = &ry * expm_unitary(&self.zq_hamiltonian()?, self.tau)? * &ry;
        let mut offsets = vec![self.omega_a; self.split];
        offsets.extend(std::iter::repeat_n(self.omega_b, self.n - self.split));
        Ok(PipelineConfig {
            v_seq: inphase_reconversion(&u, &sys, Axis::Z, Axis::Z)?,
            u_seq: u,
            hamiltonian: SpinHamiltonian::weak_coupling(&sys, &offsets, &[])?,
            dt: self.dt,
            points: self.points,
            detect_axis: Axis::Z,
            phi: 0.0,
            select_order: Some(0),
        })
    }

    pub fn run(&self) -> Result<CrossPeakResult> {
        let sys = self.system()?;
        let cfg = self.config()?;
        let series = run_pipeline(&total_op(&sys, Axis::Z), &cfg)?;
        let spacing = self.omega_a - self.omega_b;
        let spec = spectrum(&series, Some(spacing))?;
        let half_bin = 0.5 * spec.resolution();
        let stray_peaks = spec
            .peaks
            .iter()
            .map(|p| p.frequency)
            .filter(|f| {
                let k = (f / spacing).round();
                (f - k * spacing).abs() > half_bin
            })
            .collect();
        let zero = spec
            .peaks
            .iter()
            .filter(|p| p.frequency.abs() <= half_bin)
            .map(|p| p.amplitude.norm())
            .fold(0.0, f64::max);
        let cross = spec
            .peaks
            .iter()
            .filter(|p| p.frequency.abs() > half_bin)
            .map(|p| p.amplitude.norm())
            .fold(0.0, f64::max);
        let cross_to_zero_ratio = if zero > 0.0 { cross / zero } else { f64::INFINITY };
        Ok(CrossPeakResult { series, spectrum: spec, spacing, stray_peaks, cross_to_zero_ratio })
    }
}

/// Oracle-dependent excitation `R_y(pi/2) C_s(theta) R_y(pi/2)` used for
/// generic multiple-quantum spectra.
pub fn oracle_excitation(marked: &MarkedState, theta: f64) -> Result<OperatorMatrix> {
    let sys = marked.system();
    let ry = expm_unitary(&total_op(&sys, Axis::Y), std::f64::consts::FRAC_PI_2)?;
    let cs = expm_unitary(&diag_projector(marked), theta)?;
    Ok(&ry * cs * &ry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs, random_hermitian};
    use crate::mq::{decompose_orders, is_zero_quantum};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_unitary(dim: usize, rng: &mut ChaCha8Rng) -> OperatorMatrix {
        expm_unitary(&random_hermitian(dim, rng), 1.3).unwrap()
    }

    fn on_grid_omega(points: usize, dt: f64, bins: f64) -> f64 {
        2.0 * PI * bins / (points as f64 * dt)
    }

    #[test]
    fn weak_coupling_is_diagonal_sum() {
        let sys = SpinSystem::work(2).unwrap();
        let h = SpinHamiltonian::weak_coupling(&sys, &[1.0, 2.0], &[(1, 2, 3.0)]).unwrap();
        let d: Vec<f64> = (0..4).map(|i| h.matrix[(i, i)].re).collect();
        let j = 2.0 * PI * 3.0 / 4.0;
        let want = [1.5 + j, -0.5 - j, 0.5 - j, -1.5 + j];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let fz = SpinHamiltonian::uniform_fz(&sys, 2.0);
        assert!(max_diff(&fz.matrix, &(total_op(&sys, Axis::Z) * C64::new(2.0, 0.0))) < 1e-15);
        assert!(SpinHamiltonian::weak_coupling(&sys, &[1.0], &[]).is_err());
    }

    #[test]
    fn identity_sequences_give_constant_signal() {
        let sys = SpinSystem::work(2).unwrap();
        let cfg = PipelineConfig {
            u_seq: identity(4),
            v_seq: identity(4),
            hamiltonian: SpinHamiltonian::weak_coupling(&sys, &[3.0, 7.0], &[(1, 2, 0.5)]).unwrap(),
            dt: 0.01,
            points: 16,
            detect_axis: Axis::Z,
            phi: 0.0,
            select_order: None,
        };
        let eps = 0.3;
        let rho0 = total_op(&sys, Axis::Z) * C64::new(eps, 0.0);
        let s = run_pipeline(&rho0, &cfg).unwrap();
        for v in &s.values {
            assert!((v - C64::new(2.0 * eps, 0.0)).norm() < 1e-12);
        }
        let sp = spectrum(&s, None).unwrap();
        assert_eq!(sp.peaks.len(), 1);
        assert_eq!(sp.peaks[0].frequency, 0.0);
    }

    #[test]
    fn pipeline_matches_eigen_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            let sys = SpinSystem::work(n).unwrap();
            let dim = sys.dim();
            let h = SpinHamiltonian::custom(&sys, random_hermitian(dim, &mut rng)).unwrap();
            let cfg = PipelineConfig {
                u_seq: random_unitary(dim, &mut rng),
                v_seq: random_unitary(dim, &mut rng),
                hamiltonian: h,
                dt: 0.05,
                points: 32,
                detect_axis: Axis::X,
                phi: 0.4,
                select_order: None,
            };
            let rho0 = total_op(&sys, Axis::Y);
            let s = run_pipeline(&rho0, &cfg).unwrap();
            let p = cfg.excited(&rho0).unwrap();
            let q = cfg.detector().unwrap();
            assert!((s.values[0] - (&q * &p).trace()).norm() < 1e-12);
            let lines = eigen_expand(&p, &q, &cfg.hamiltonian);
            assert!(lines.len() <= dim * dim);
            for (i, v) in s.values.iter().enumerate() {
                assert!((v - resum(&lines, i as f64 * cfg.dt)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn uniform_lines_are_integer_orders() {
        let sys = SpinSystem::work(3).unwrap();
        let w = 1.7;
        let h = SpinHamiltonian::uniform_fz(&sys, w);
        let m = MarkedState::new(3, 3).unwrap();
        let p = conjugate(&oracle_excitation(&m, 0.9).unwrap(), &total_op(&sys, Axis::Z));
        for l in eigen_expand(&p, &p, &h) {
            let k = l.omega / w;
            assert!((k - k.round()).abs() < 1e-9 && k.round().abs() <= 3.0);
        }
        let fz = total_op(&sys, Axis::Z);
        let single = merge_lines(&eigen_expand(&fz, &fz, &h), 1e-9);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].0, 0.0);
    }

    #[test]
    fn nyquist_violation_is_reported() {
        let sys = SpinSystem::work(2).unwrap();
        let cfg = PipelineConfig {
            u_seq: identity(4),
            v_seq: identity(4),
            hamiltonian: SpinHamiltonian::uniform_fz(&sys, 100.0),
            dt: 0.1,
            points: 16,
            detect_axis: Axis::Z,
            phi: 0.0,
            select_order: None,
        };
        assert!(matches!(
            run_pipeline(&total_op(&sys, Axis::Z), &cfg),
            Err(SpinError::Sampling { .. })
        ));
    }

    #[test]
    fn two_tone_spectrum() {
        let (m, dt) = (64, 0.01);
        let w = on_grid_omega(m, dt, 3.0);
        let values = (0..m)
            .map(|i| {
                let t = i as f64 * dt;
                C64::from_polar(1.0, -w * t) + C64::from_polar(1.0, -2.0 * w * t)
            })
            .collect();
        let sp = spectrum(&TimeSeries { dt, values }, Some(w)).unwrap();
        assert!(sp.parseval_residual < 1e-9);
        assert_eq!(sp.peaks.len(), 2);
        assert!((sp.peaks[0].frequency - w).abs() < 1e-9);
        assert!((sp.peaks[1].frequency - 2.0 * w).abs() < 1e-9);
        assert_eq!(sp.peaks[0].order, Some(1));
        assert_eq!(sp.peaks[1].order, Some(2));
        assert!((sp.peaks[0].amplitude - sp.peaks[1].amplitude).norm() < 1e-12);
        assert!(spectrum(&TimeSeries { dt, values: vec![C64::new(1.0, 0.0); 6] }, None).is_err());
    }

    #[test]
    fn three_qubit_spectrum_has_at_most_seven_peaks() {
        let sys = SpinSystem::work(3).unwrap();
        let (points, dt) = (128, 0.01);
        let w = on_grid_omega(points, dt, 5.0);
        let m = MarkedState::new(5, 3).unwrap();
        let u = oracle_excitation(&m, 1.1).unwrap();
        let cfg = PipelineConfig {
            v_seq: inphase_reconversion(&u, &sys, Axis::Z, Axis::Z).unwrap(),
            u_seq: u,
            hamiltonian: SpinHamiltonian::uniform_fz(&sys, w),
            dt,
            points,
            detect_axis: Axis::Z,
            phi: 0.0,
            select_order: None,
        };
        let rho0 = total_op(&sys, Axis::Z);
        let sp = spectrum(&run_pipeline(&rho0, &cfg).unwrap(), Some(w)).unwrap();
        assert!(!sp.peaks.is_empty() && sp.peaks.len() <= 7);
        for p in &sp.peaks {
            let k = p.frequency / w;
            assert!((k - k.round()).abs() < 1e-9);
        }
        // peak amplitudes equal the order intensities
        let p = cfg.excited(&rho0).unwrap();
        let q = cfg.detector().unwrap();
        let inten = order_intensities(&p, &q, &sys);
        for pk in &sp.peaks {
            let want = inten[&pk.order.unwrap()];
            assert!((pk.amplitude - want).norm() < 1e-9);
        }
        let total: C64 = inten.values().sum();
        assert!((total - (&q * &p).trace()).norm() < 1e-12);
    }

    #[test]
    fn order_intensity_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = SpinSystem::work(2).unwrap();
        let p = random_hermitian(4, &mut rng);
        let q = random_hermitian(4, &mut rng);
        let i = order_intensities(&p, &q, &sys);
        for m in 1..=2 {
            assert!((i[&-m] - i[&m].conj()).norm() < 1e-12);
        }
        let d = OperatorMatrix::from_diagonal(&p.diagonal());
        let only_zero = order_intensities(&d, &d, &sys);
        assert!(only_zero.iter().all(|(m, v)| *m == 0 || v.norm() == 0.0));
    }

    #[test]
    fn inphase_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = SpinSystem::work(2).unwrap();
        let u = random_unitary(4, &mut rng);
        let phi = 0.7;
        for (p_axis, q_axis) in [(Axis::Z, Axis::Z), (Axis::Z, Axis::X), (Axis::Y, Axis::X), (Axis::X, Axis::Y)] {
            let v = inphase_reconversion(&u, &sys, p_axis, q_axis).unwrap()
                * expm_unitary(&total_op(&sys, Axis::Z), -phi).unwrap();
            let r = inphase_check(&u, &v, &sys, p_axis, q_axis, phi).unwrap();
            assert!(r.holds, "{p_axis:?}->{q_axis:?} {}", r.residual);
        }
        let v = random_unitary(4, &mut rng);
        let r = inphase_check(&u, &v, &sys, Axis::Z, Axis::Z, phi).unwrap();
        assert!(!r.holds && r.residual > 1e-3);
    }

    #[test]
    fn inphase_lines_share_order_phase() {
        let sys = SpinSystem::work(3).unwrap();
        let m = MarkedState::new(6, 3).unwrap();
        let u = oracle_excitation(&m, 0.8).unwrap();
        let phi = 0.45;
        let cfg = PipelineConfig {
            v_seq: inphase_reconversion(&u, &sys, Axis::Z, Axis::Z).unwrap(),
            u_seq: u,
            hamiltonian: SpinHamiltonian::uniform_fz(&sys, 1.0),
            dt: 0.1,
            points: 16,
            detect_axis: Axis::Z,
            phi,
            select_order: None,
        };
        let p = cfg.excited(&total_op(&sys, Axis::Z)).unwrap();
        let q = cfg.detector().unwrap();
        for j in 0..8 {
            for k in 0..8 {
                let a = q[(j, k)].conj() * p[(j, k)];
                if a.norm() > 1e-10 {
                    let order = f64::from(sys.coherence_order(j, k));
                    let want = C64::from_polar(1.0, order * phi);
                    let d = (a / a.norm() / want).arg();
                    assert!(d.abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn cross_hamiltonian_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let sys = SpinSystem::work(3).unwrap();
        let a = random_hermitian(8, &mut rng);
        let b = random_hermitian(8, &mut rng);
        let h = cross_zq_hamiltonian(&a, &b, &sys, 7).unwrap();
        assert!(is_zero_quantum(&h, &sys, 1e-11));
        assert!(hermiticity_residual(&h) < 1e-12);
        let ha = cross_zq_hamiltonian(&a, &zeros(8), &sys, 7).unwrap();
        let hb = cross_zq_hamiltonian(&zeros(8), &b, &sys, 7).unwrap();
        assert!(max_diff(&h, &(&ha + &hb)) < 1e-12);
        let grading = decompose_orders(&a, &sys);
        assert!(max_diff(&ha, grading.component(0).unwrap()) < 1e-11);
        assert!(cross_zq_hamiltonian(&a, &b, &sys, 6).is_err());
    }

    #[test]
    fn interaction_frame_truncation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let hs = random_hermitian(4, &mut rng);
        let hr = random_hermitian(4, &mut rng);
        let (e0, s0) = interaction_frame(&hs, &hr, 0.0, 3).unwrap();
        assert!(max_diff(&e0, &hs) < 1e-14 && max_diff(&s0, &hs) < 1e-14);
        let err = |t: f64| {
            let (e, s) = interaction_frame(&hs, &hr, t, 2).unwrap();
            max_abs(&(e - s))
        };
        let ratio = err(0.02) / err(0.01);
        assert!((ratio - 8.0).abs() < 8.0 * 0.3, "ratio {ratio}");
        let d = OperatorMatrix::from_diagonal(&hs.diagonal());
        let d2 = OperatorMatrix::from_diagonal(&hr.diagonal());
        let (e, _) = interaction_frame(&d, &d2, 3.0, 1).unwrap();
        assert!(max_diff(&e, &d) < 1e-12);
        assert!(interaction_frame(&hs, &hr, 0.1, 7).is_err());
    }

    #[test]
    fn cross_peak_demo_peaks_on_grid() {
        let demo = CrossPeakDemo::default();
        let r = demo.run().unwrap();
        assert!(r.stray_peaks.is_empty(), "{:?}", r.stray_peaks);
        assert!(r.spectrum.peaks.iter().any(|p| p.frequency.abs() > 1.0));
        assert!(r.spectrum.parseval_residual < 1e-9);
    }
}
