//! Run configuration: a TOML document with one section per module. Command
//! line flags are merged on top before validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use lstf::benchmark::CampaignSpec;
use lstf::closed::Solver;
use lstf::instances::seven_qubit;
use lstf::ode::Tolerances;
use lstf::open::{Axis, BathSpec, CouplingSpec};
use lstf::problem::{build_two_qubit, CouplerSign, IsingProblem};
use lstf::schedule::{SchedulePlan, DEFAULT_S_X};

use crate::Failure;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub problem: ProblemConfig,
    pub plan: PlanConfig,
    pub spectrum: SpectrumConfig,
    pub semiclassical: SemiclassicalConfig,
    pub dynamics: DynamicsConfig,
    pub bath: BathConfig,
    pub benchmark: CampaignSpec,
    pub heuristic: HeuristicConfig,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoQubitConfig {
    pub f: f64,
    #[serde(default = "one")]
    pub r: f64,
    /// Defaults to `r`.
    #[serde(default)]
    pub h_x2: Option<f64>,
    #[serde(default)]
    pub coupler: CouplerSign,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Builtin {
    SevenQubit,
}

/// Exactly one source must be set.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemConfig {
    pub two_qubit: Option<TwoQubitConfig>,
    /// JSON instance file with `n_qubits, edges, h_z, j_zz, h_x, energy_scale`.
    pub instance: Option<PathBuf>,
    pub builtin: Option<Builtin>,
    /// Energy scale for a builtin instance, GHz.
    pub scale: Option<f64>,
}

impl ProblemConfig {
    pub fn load(&self) -> Result<IsingProblem, Failure> {
        let sources = [self.two_qubit.is_some(), self.instance.is_some(), self.builtin.is_some()];
        match sources.iter().filter(|s| **s).count() {
            0 => return Err(Failure::Config("no problem source: set problem.two_qubit, problem.instance or problem.builtin".into())),
            1 => {}
            _ => return Err(Failure::Config("more than one problem source given".into())),
        }
        if let Some(t) = self.two_qubit {
            return Ok(build_two_qubit(t.f, t.r, t.coupler, t.h_x2.unwrap_or(t.r))?);
        }
        if let Some(path) = &self.instance {
            return read_instance(path);
        }
        Ok(seven_qubit(self.scale.unwrap_or(1.0))?)
    }
}

pub fn read_instance(path: &Path) -> Result<IsingProblem, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read instance {}: {e}", path.display())))?;
    let p: IsingProblem = serde_json::from_str(&text)
        .map_err(|e| Failure::Config(format!("bad instance {}: {e}", path.display())))?;
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScheduleKind {
    #[default]
    Aqa,
    Lstf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    pub schedule: ScheduleKind,
    /// 0-based target qubit.
    pub target: Option<usize>,
    pub s_x: f64,
    pub c_x: f64,
    pub c_1: f64,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig { schedule: ScheduleKind::Aqa, target: None, s_x: DEFAULT_S_X, c_x: 0.0, c_1: 0.0 }
    }
}

impl PlanConfig {
    pub fn build(&self) -> Result<SchedulePlan, Failure> {
        match self.schedule {
            ScheduleKind::Aqa => Ok(SchedulePlan::Aqa),
            ScheduleKind::Lstf => {
                let k = self.target.ok_or_else(|| Failure::Config("lstf schedule needs plan.target".into()))?;
                Ok(SchedulePlan::lstf_with(k, self.s_x, self.c_x, self.c_1)?)
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub grid: usize,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig { grid: lstf::spectrum::DEFAULT_GRID }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SemiclassicalConfig {
    /// Points per angle axis.
    pub resolution: usize,
    /// Evenly spaced `s` values for the minima trace.
    pub s_points: usize,
    pub line_samples: usize,
    /// Extra `s` values whose V/D surfaces are written; `s₊` is always written.
    pub surfaces: Vec<f64>,
}

impl Default for SemiclassicalConfig {
    fn default() -> Self {
        SemiclassicalConfig { resolution: 512, s_points: 101, line_samples: 2001, surfaces: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    /// Anneal durations, ns.
    pub t_an: Vec<f64>,
    pub solver: Solver,
    pub tol_rel: f64,
    pub tol_abs: f64,
    /// Solve the adiabatic master equation with the `[bath]` section.
    pub open: bool,
    /// Write eigenstate population traces for every open run.
    pub populations: bool,
    /// Two-qubit frustration sweep (open system, LSTF on qubit 1).
    pub f_sweep: Vec<f64>,
    /// Two-qubit energy-scale sweep at `sweep_f`.
    pub r_sweep: Vec<f64>,
    pub sweep_f: f64,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        let tol = Tolerances::default();
        DynamicsConfig {
            t_an: vec![100.0],
            solver: Solver::Schrodinger,
            tol_rel: tol.rel,
            tol_abs: tol.abs,
            open: false,
            populations: false,
            f_sweep: Vec::new(),
            r_sweep: Vec::new(),
            sweep_f: 0.8,
        }
    }
}

impl DynamicsConfig {
    pub fn tolerances(&self) -> Tolerances {
        Tolerances { rel: self.tol_rel, abs: self.tol_abs }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BathConfig {
    pub eta_g2: f64,
    pub omega_c: f64,
    pub temperature_mk: f64,
    pub axis: Axis,
    /// Coupled qubits; all when absent.
    pub qubits: Option<Vec<usize>>,
}

impl Default for BathConfig {
    fn default() -> Self {
        let b = BathSpec::default();
        BathConfig {
            eta_g2: b.eta_g2,
            omega_c: b.omega_c,
            temperature_mk: b.temperature_mk,
            axis: Axis::X,
            qubits: None,
        }
    }
}

impl BathConfig {
    pub fn spec(&self) -> Result<BathSpec, Failure> {
        let b = BathSpec { eta_g2: self.eta_g2, omega_c: self.omega_c, temperature_mk: self.temperature_mk };
        b.validate()?;
        Ok(b)
    }

    pub fn coupling(&self) -> CouplingSpec {
        match &self.qubits {
            Some(q) => CouplingSpec::only(self.axis, q.clone()),
            None => CouplingSpec::all(self.axis),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeuristicConfig {
    pub t_an: f64,
    pub s_x: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig { t_an: 100.0, s_x: DEFAULT_S_X }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(format!("bad config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
