//! JSON experiment configurations, one schema per command.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const MAX_QUBITS: usize = 8;

fn default_one() -> usize {
    1
}

fn default_axis() -> String {
    "z".into()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub n: usize,
    pub s: usize,
    /// Uniform `1.0` when omitted.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    /// Oracle phase; `-pi/2` when omitted.
    #[serde(default)]
    pub theta: Option<f64>,
    /// `"selective"` (default) or `"explicit"`.
    #[serde(default)]
    pub aux_mode: Option<String>,
    #[serde(default)]
    pub threshold_rel: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GroverScanConfig {
    /// Qubit counts to scan.
    pub n_values: Vec<usize>,
    /// Inclusive `[first, last]` iteration range; `[0, ceil(4 sqrt N)]` per `n`
    /// when omitted.
    #[serde(default)]
    pub m_range: Option<[u32; 2]>,
    #[serde(default)]
    pub s: usize,
    /// Uniform `1.0` when omitted; only valid with a single `n`.
    #[serde(default)]
    pub epsilons: Option<Vec<f64>>,
    /// 1-based readout qubit.
    #[serde(default = "default_one")]
    pub readout_qubit: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum HamiltonianSpec {
    UniformFz { omega: f64 },
    WeakCoupling {
        offsets: Vec<f64>,
        #[serde(default)]
        couplings: Vec<(usize, usize, f64)>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum ExcitationSpec {
    Identity,
    /// `R_y(pi/2) C_s(theta) R_y(pi/2)`.
    Oracle { s: usize, theta: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "mode", rename_all = "kebab-case")]
pub enum SpectrumConfig {
    Pipeline {
        n: usize,
        excitation: ExcitationSpec,
        hamiltonian: HamiltonianSpec,
        dt: f64,
        points: usize,
        #[serde(default = "default_axis")]
        excite_axis: String,
        #[serde(default = "default_axis")]
        detect_axis: String,
        #[serde(default)]
        phi: f64,
        #[serde(default)]
        select_order: Option<i32>,
    },
    CrossPeak {
        #[serde(default)]
        s: Option<usize>,
        #[serde(default)]
        r: Option<usize>,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        tau: Option<f64>,
        #[serde(default)]
        omega_a: Option<f64>,
        #[serde(default)]
        omega_b: Option<f64>,
        #[serde(default)]
        points: Option<usize>,
        #[serde(default)]
        dt: Option<f64>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "kebab-case")]
pub enum OperatorPair {
    /// `A = I_z`, `B = I_x` on one qubit.
    Su2,
    /// Two diagonal operators.
    Commuting,
    /// Seeded random Hermitian pair scaled by `scale`.
    Random { dim: usize, seed: u64, scale: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TrotterBench {
    pub t: f64,
    pub m: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CommutatorBench {
    pub m: Vec<u32>,
    /// Both operators are multiplied by this factor.
    #[serde(default)]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SandwichBench {
    pub t: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CrossBench {
    pub t: Vec<f64>,
    pub levels: Vec<u32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FractalBench {
    pub t: Vec<f64>,
    /// Symmetric triplet when omitted.
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    /// `"product"` (default) or `"difference"`.
    #[serde(default)]
    pub mode: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ComposeBenchConfig {
    pub operators: OperatorPair,
    #[serde(default)]
    pub trotter: Option<TrotterBench>,
    #[serde(default)]
    pub commutator: Option<CommutatorBench>,
    #[serde(default)]
    pub sandwich: Option<SandwichBench>,
    #[serde(default)]
    pub cross: Option<CrossBench>,
    #[serde(default)]
    pub fractal: Option<FractalBench>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SelftestConfig {
    #[serde(default)]
    pub seed: u64,
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn finite(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be finite")))
    }
}

fn qubits(n: usize) -> Result<(), CliError> {
    if n == 0 || n > MAX_QUBITS {
        return Err(CliError::Config(format!("n = {n} outside 1..={MAX_QUBITS}")));
    }
    Ok(())
}

fn index(name: &str, s: usize, n: usize) -> Result<(), CliError> {
    if s >= 1 << n {
        return Err(CliError::Config(format!("{name} = {s} outside [0, 2^{n})")));
    }
    Ok(())
}

fn eps(epsilons: &Option<Vec<f64>>, n: usize) -> Result<(), CliError> {
    if let Some(e) = epsilons {
        if e.len() != n {
            return Err(CliError::Config(format!("{} epsilons for n = {n}", e.len())));
        }
        for &v in e {
            finite("epsilon", v)?;
        }
    }
    Ok(())
}

fn axis(name: &str, a: &str) -> Result<(), CliError> {
    match a {
        "x" | "y" | "z" => Ok(()),
        other => Err(CliError::Config(format!("{name} = {other:?}, expected x, y or z"))),
    }
}

fn nonempty<T>(name: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        Err(CliError::Config(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        qubits(self.n)?;
        index("s", self.s, self.n)?;
        eps(&self.epsilons, self.n)?;
        if let Some(t) = self.theta {
            finite("theta", t)?;
        }
        if let Some(t) = self.threshold_rel {
            finite("threshold_rel", t)?;
            if t <= 0.0 {
                return Err(CliError::Config("threshold_rel must be positive".into()));
            }
        }
        match self.aux_mode.as_deref() {
            None | Some("selective") | Some("explicit") => Ok(()),
            Some(other) => Err(CliError::Config(format!("aux_mode {other:?} not selective|explicit"))),
        }
    }
}

impl GroverScanConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        nonempty("n_values", &self.n_values)?;
        for &n in &self.n_values {
            qubits(n)?;
            index("s", self.s, n)?;
            if self.readout_qubit == 0 || self.readout_qubit > n {
                return Err(CliError::Config(format!("readout_qubit outside 1..={n}")));
            }
        }
        if let Some([a, b]) = self.m_range {
            if a > b {
                return Err(CliError::Config("m_range is empty".into()));
            }
        }
        if self.epsilons.is_some() {
            if self.n_values.len() != 1 {
                return Err(CliError::Config("explicit epsilons need exactly one n".into()));
            }
            eps(&self.epsilons, self.n_values[0])?;
        }
        Ok(())
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        match self {
            SpectrumConfig::Pipeline {
                n,
                excitation,
                hamiltonian,
                dt,
                points,
                excite_axis,
                detect_axis,
                phi,
                select_order,
            } => {
                qubits(*n)?;
                if let ExcitationSpec::Oracle { s, theta } = excitation {
                    index("s", *s, *n)?;
                    finite("theta", *theta)?;
                }
                match hamiltonian {
                    HamiltonianSpec::UniformFz { omega } => finite("omega", *omega)?,
                    HamiltonianSpec::WeakCoupling { offsets, couplings } => {
                        if offsets.len() != *n {
                            return Err(CliError::Config(format!("{} offsets for n = {n}", offsets.len())));
                        }
                        for &o in offsets {
                            finite("offset", o)?;
                        }
                        for &(k, l, j) in couplings {
                            finite("coupling", j)?;
                            if k == 0 || l == 0 || k > *n || l > *n || k == l {
                                return Err(CliError::Config(format!("bad coupling pair ({k}, {l})")));
                            }
                        }
                    }
                }
                finite("dt", *dt)?;
                if *dt <= 0.0 {
                    return Err(CliError::Config("dt must be positive".into()));
                }
                if *points < 2 || !points.is_power_of_two() {
                    return Err(CliError::Config(format!("points = {points} is not a power of two")));
                }
                axis("excite_axis", excite_axis)?;
                axis("detect_axis", detect_axis)?;
                finite("phi", *phi)?;
                if let Some(m) = select_order {
                    if m.unsigned_abs() as usize > *n {
                        return Err(CliError::Config(format!("select_order {m} exceeds n")));
                    }
                }
                Ok(())
            }
            SpectrumConfig::CrossPeak { s, r, lambda, tau, omega_a, omega_b, points, dt } => {
                for (name, v) in [("lambda", lambda), ("tau", tau), ("omega_a", omega_a), ("omega_b", omega_b), ("dt", dt)] {
                    if let Some(v) = v {
                        finite(name, *v)?;
                    }
                }
                if let Some(s) = s {
                    index("s", *s, 4)?;
                }
                if let Some(r) = r {
                    index("r", *r, 2)?;
                }
                if let Some(p) = points {
                    if *p < 2 || !p.is_power_of_two() {
                        return Err(CliError::Config(format!("points = {p} is not a power of two")));
                    }
                }
                if let Some(d) = dt {
                    if *d <= 0.0 {
                        return Err(CliError::Config("dt must be positive".into()));
                    }
                }
                Ok(())
            }
        }
    }
}

impl ComposeBenchConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if let OperatorPair::Random { dim, scale, .. } = &self.operators {
            if *dim < 2 || !dim.is_power_of_two() || *dim > 1 << MAX_QUBITS {
                return Err(CliError::Config(format!("dim = {dim} must be 2^n with 1 <= n <= {MAX_QUBITS}")));
            }
            finite("scale", *scale)?;
        }
        if let Some(tr) = &self.trotter {
            finite("trotter.t", tr.t)?;
            nonempty("trotter.m", &tr.m)?;
            if tr.m.contains(&0) {
                return Err(CliError::Config("trotter.m entries must be >= 1".into()));
            }
        }
        if let Some(c) = &self.commutator {
            nonempty("commutator.m", &c.m)?;
            if c.m.contains(&0) {
                return Err(CliError::Config("commutator.m entries must be >= 1".into()));
            }
            if let Some(s) = c.scale {
                finite("commutator.scale", s)?;
            }
        }
        if let Some(s) = &self.sandwich {
            nonempty("sandwich.t", &s.t)?;
            for &t in &s.t {
                finite("sandwich.t", t)?;
            }
        }
        if let Some(c) = &self.cross {
            nonempty("cross.t", &c.t)?;
            nonempty("cross.levels", &c.levels)?;
            for &t in &c.t {
                finite("cross.t", t)?;
            }
            if c.levels.iter().any(|l| *l != 2 && *l != 4) {
                return Err(CliError::Config("cross.levels entries must be 2 or 4".into()));
            }
        }
        if let Some(f) = &self.fractal {
            nonempty("fractal.t", &f.t)?;
            for &t in &f.t {
                finite("fractal.t", t)?;
            }
            if let Some(p) = &f.p {
                for &v in p {
                    finite("fractal.p", v)?;
                }
            }
            match f.mode.as_deref() {
                None | Some("product") | Some("difference") => {}
                Some(other) => return Err(CliError::Config(format!("fractal.mode {other:?}"))),
            }
        }
        Ok(())
    }
}
