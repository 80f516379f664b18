//! Closed-system dynamics: Schrödinger and von Neumann evolution, success
//! probability, energy residual and time-to-solution.
//!
//! Time is integrated in the dimensionless `s = t/t_an`, so the equation of
//! motion is `dψ/ds = -i·2π·t_an·H(s)·ψ` with `H` in GHz and `t_an` in ns.

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{self, DensityMatrix};
use crate::error::{domain, Error, Result};
use crate::hamiltonian::{AnnealHamiltonian, DENSE_CAP};
use crate::ode::{integrate, integrate_normalized, StepStats, Tolerances};
use crate::problem::{ground_manifold, IsingProblem};
use crate::schedule::SchedulePlan;
use crate::spectrum::{eigensystem, DEGENERACY_TOL};

/// Target probability used for time-to-solution.
pub const P_TARGET: f64 = 0.99;

/// Tolerance multiplier applied by the von Neumann solver.
pub const VN_TOL_FACTOR: f64 = 1e-2;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnealRun {
    pub problem: IsingProblem,
    pub plan: SchedulePlan,
    /// Anneal duration in ns.
    pub t_an: f64,
    #[serde(default)]
    pub tol: Tolerances,
}

impl AnnealRun {
    pub fn new(problem: IsingProblem, plan: SchedulePlan, t_an: f64) -> Result<Self> {
        let run = AnnealRun { problem, plan, t_an, tol: Tolerances::default() };
        run.validate()?;
        Ok(run)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.plan.validate_for(self.problem.n_qubits)?;
        if !(self.t_an > 0.0 && self.t_an.is_finite()) {
            return domain(format!("t_an must be positive, got {}", self.t_an));
        }
        if !(self.tol.rel > 0.0 && self.tol.abs > 0.0) {
            return domain("integrator tolerances must be positive");
        }
        if self.problem.n_qubits > DENSE_CAP {
            return Err(Error::Size { what: "dynamics", n: self.problem.n_qubits, cap: DENSE_CAP });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum FinalState {
    Pure(Vec<Complex64>),
    Mixed(DensityMatrix),
}

impl FinalState {
    /// Computational-basis populations.
    pub fn populations(&self) -> Vec<f64> {
        match self {
            FinalState::Pure(psi) => psi.iter().map(|a| a.norm_sqr()).collect(),
            FinalState::Mixed(rho) => rho.diagonal().iter().map(|z| z.re).collect(),
        }
    }

    pub fn density(&self) -> DensityMatrix {
        match self {
            FinalState::Pure(psi) => density::outer(psi),
            FinalState::Mixed(rho) => rho.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tts {
    /// Unfloored `t_an·ln(1-p_d)/ln(1-p)`.
    pub raw: f64,
    /// Floored at one repetition.
    pub floored: f64,
}

#[derive(Debug, Clone)]
pub struct AnnealResult {
    pub state: FinalState,
    pub success_probability: f64,
    pub energy_residual: f64,
    pub tts: Tts,
    pub stats: StepStats,
}

/// Ground state of `H(0)`; fails when it is degenerate.
pub fn initial_state(ham: &AnnealHamiltonian) -> Result<Vec<f64>> {
    let es = eigensystem(&ham.dense(0.0))?;
    let gap = es.values[1] - es.values[0];
    if gap < DEGENERACY_TOL * ham.energy_scale() {
        return Err(Error::Degenerate(gap));
    }
    Ok(es.state(0))
}

pub(crate) fn finish(run: &AnnealRun, state: FinalState, stats: StepStats) -> Result<AnnealResult> {
    let success = success_probability(&state, &run.problem)?;
    let residual = energy_residual(&state, &run.problem)?;
    Ok(AnnealResult {
        state,
        success_probability: success,
        energy_residual: residual,
        tts: time_to_solution(success, run.t_an, P_TARGET),
        stats,
    })
}

pub(crate) fn stops_with(plan: &SchedulePlan, extra: &[f64]) -> Vec<f64> {
    let mut stops = plan.breakpoints();
    stops.extend(extra.iter().copied().filter(|s| (0.0..=1.0).contains(s)));
    stops.sort_by(f64::total_cmp);
    stops.dedup();
    stops
}

/// Schrödinger evolution from the ground state of `H(0)`.
pub fn evolve_schrodinger(run: &AnnealRun) -> Result<AnnealResult> {
    evolve_schrodinger_observed(run, &[], |_, _| {})
}

/// As [`evolve_schrodinger`], additionally reporting the state at every
/// schedule breakpoint and at each `report` point.
pub fn evolve_schrodinger_observed(
    run: &AnnealRun,
    report: &[f64],
    observe: impl FnMut(f64, &[Complex64]),
) -> Result<AnnealResult> {
    run.validate()?;
    let ham = AnnealHamiltonian::new(&run.problem, &run.plan)?;
    let mut psi = density::from_real(&initial_state(&ham)?);
    let dim = ham.dim();
    let scale = TAU * run.t_an;
    let mut diag = vec![0.0; dim];
    let mut rhs = |s: f64, y: &[Complex64], dy: &mut [Complex64]| {
        ham.diagonal_into(s, &mut diag);
        // a constant shift only changes the global phase
        let shift = diag.iter().sum::<f64>() / dim as f64;
        diag.iter_mut().for_each(|d| *d -= shift);
        AnnealHamiltonian::apply_with(&diag, &ham.transverse(s), y, dy);
        for v in dy.iter_mut() {
            *v = Complex64::new(v.im, -v.re) * scale;
        }
    };
    let stats = integrate_normalized(&mut rhs, &mut psi, &stops_with(&run.plan, report), run.tol, observe)?;
    finish(run, FinalState::Pure(psi), stats)
}

/// von Neumann evolution from `|E₀(0)⟩⟨E₀(0)|`.
pub fn evolve_von_neumann(run: &AnnealRun) -> Result<AnnealResult> {
    run.validate()?;
    let ham = AnnealHamiltonian::new(&run.problem, &run.plan)?;
    let psi0 = density::from_real(&initial_state(&ham)?);
    let dim = ham.dim();
    let mut rho: Vec<Complex64> = density::outer(&psi0).as_slice().to_vec();
    let scale = TAU * run.t_an;
    let mut diag = vec![0.0; dim];
    let mut hr = vec![Complex64::default(); dim * dim];
    let mut rhs = |s: f64, y: &[Complex64], dy: &mut [Complex64]| {
        ham.diagonal_into(s, &mut diag);
        let tr = ham.transverse(s);
        // column-major: column c of Hρ is H applied to column c of ρ
        for (col, out) in y.chunks_exact(dim).zip(hr.chunks_exact_mut(dim)) {
            AnnealHamiltonian::apply_with(&diag, &tr, col, out);
        }
        // ρH = (Hρ)† for Hermitian ρ
        for c in 0..dim {
            for r in 0..dim {
                let comm = hr[c * dim + r] - hr[r * dim + c].conj();
                dy[c * dim + r] = Complex64::new(comm.im, -comm.re) * scale;
            }
        }
    };
    let tol = Tolerances { rel: run.tol.rel * VN_TOL_FACTOR, abs: run.tol.abs * VN_TOL_FACTOR };
    let stats = integrate(&mut rhs, &mut rho, &run.plan.breakpoints(), tol, |_, _| {})?;
    let rho = DensityMatrix::from_vec(dim, dim, rho);
    finish(run, FinalState::Mixed(rho), stats)
}

/// Population of the classical ground manifold.
pub fn success_probability(state: &FinalState, problem: &IsingProblem) -> Result<f64> {
    let pops = state.populations();
    let p: f64 = ground_manifold(problem)?.iter().map(|&j| pops[j]).sum();
    Ok(p.clamp(0.0, 1.0))
}

/// `⟨H_P⟩ - E₀` in GHz.
pub fn energy_residual(state: &FinalState, problem: &IsingProblem) -> Result<f64> {
    let energies = problem.diagonal_energies()?;
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let pops = state.populations();
    let total: f64 = pops.iter().sum();
    let mean: f64 = pops.iter().zip(&energies).map(|(p, e)| p * e).sum::<f64>() / total;
    Ok(mean - e0)
}

/// Expected time to reach the ground state with confidence `p_d`.
pub fn time_to_solution(p_success: f64, t_an: f64, p_d: f64) -> Tts {
    let p = p_success.clamp(0.0, 1.0);
    let raw = if p <= 0.0 {
        f64::INFINITY
    } else if p >= 1.0 {
        0.0
    } else {
        t_an * (-p_d).ln_1p() / (-p).ln_1p()
    };
    let floored = if p >= p_d { t_an } else { raw };
    Tts { raw, floored }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Solver {
    #[default]
    Schrodinger,
    VonNeumann,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepPoint {
    pub t_an: f64,
    pub success_probability: f64,
    pub energy_residual: f64,
    pub tts: f64,
    pub tts_raw: f64,
}

/// Runs the same problem and plan over a list of anneal durations.
pub fn sweep_t_an(
    problem: &IsingProblem,
    plan: &SchedulePlan,
    t_ans: &[f64],
    tol: Tolerances,
    solver: Solver,
) -> Result<Vec<SweepPoint>> {
    t_ans
        .par_iter()
        .map(|&t_an| {
            let run = AnnealRun::new(problem.clone(), *plan, t_an)?.with_tolerances(tol);
            let res = match solver {
                Solver::Schrodinger => evolve_schrodinger(&run)?,
                Solver::VonNeumann => evolve_von_neumann(&run)?,
            };
            Ok(SweepPoint {
                t_an,
                success_probability: res.success_probability,
                energy_residual: res.energy_residual,
                tts: res.tts.floored,
                tts_raw: res.tts.raw,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t_an", "success_probability", "tts", "tts_raw", "energy_residual"])?;
    for p in points {
        w.write_record(&[
            format!("{:e}", p.t_an),
            format!("{:e}", p.success_probability),
            format!("{:e}", p.tts),
            format!("{:e}", p.tts_raw),
            format!("{:e}", p.energy_residual),
        ])?;
    }
    w.flush()?;
    Ok(())
}
