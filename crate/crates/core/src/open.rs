//! Open-system dynamics under the adiabatic master equation (AME) with an
//! Ohmic bath.
//!
//! The density matrix is stored in the computational basis. Every evaluation
//! of the generator diagonalizes `H(s)`, rotates `ρ` into the instantaneous
//! eigenbasis, applies the coherent term and the dissipator there, and
//! rotates back. The Lamb shift is not included.

use std::f64::consts::TAU;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::closed::{evolve_schrodinger, finish, stops_with, AnnealResult, AnnealRun, FinalState};
use crate::density::{self, DensityMatrix};
use crate::error::{domain, Error, Result};
use crate::hamiltonian::AnnealHamiltonian;
use crate::ode::{integrate, StepStats, Tolerances};
use crate::problem::{build_two_qubit, spin, CouplerSign, IsingProblem};
use crate::schedule::SchedulePlan;
use crate::table::write_rows_csv;
use crate::spectrum::{
    eigensystem, sample_at, trace_spectrum, uniform_grid, Eigensystem, DEFAULT_GRID,
    DEGENERACY_TOL,
};

/// `k_B/ħ` in angular GHz per mK.
pub const KB_OVER_HBAR: f64 = 0.1309;
/// Largest register the AME accepts (128×128 density matrix).
pub const AME_CAP: usize = 7;
/// Negative eigenvalues below this magnitude are treated as round-off.
pub const POSITIVITY_NOISE: f64 = 1e-10;
/// Negative eigenvalues beyond this magnitude abort the run.
pub const POSITIVITY_ABORT: f64 = 1e-6;
pub const DEFAULT_REPORT_POINTS: usize = 101;
pub const LAMB_SHIFT: &str = "omitted";

/// Ohmic bath parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BathSpec {
    /// Dimensionless coupling `ηg²`.
    pub eta_g2: f64,
    /// Cutoff frequency, angular GHz.
    pub omega_c: f64,
    pub temperature_mk: f64,
}

impl Default for BathSpec {
    fn default() -> Self {
        BathSpec { eta_g2: 1e-4, omega_c: 4.0 * TAU, temperature_mk: 16.0 }
    }
}

impl BathSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta_g2 >= 0.0 && self.eta_g2.is_finite()) {
            return domain(format!("eta_g2 must be non-negative, got {}", self.eta_g2));
        }
        if !(self.omega_c > 0.0 && self.omega_c.is_finite()) {
            return domain(format!("omega_c must be positive, got {}", self.omega_c));
        }
        if !(self.temperature_mk > 0.0 && self.temperature_mk.is_finite()) {
            return domain(format!("temperature must be positive, got {} mK", self.temperature_mk));
        }
        Ok(())
    }

    /// Inverse temperature in ns (per radian).
    pub fn beta(&self) -> f64 {
        1.0 / (KB_OVER_HBAR * self.temperature_mk)
    }

    /// Copy with a different coupling strength.
    pub fn with_eta_g2(mut self, eta_g2: f64) -> Self {
        self.eta_g2 = eta_g2;
        self
    }
}

/// Ohmic spectral density `γ(ω)` in 1/ns for an angular frequency `ω`.
pub fn spectral_density(bath: &BathSpec, omega: f64) -> f64 {
    let pref = TAU * bath.eta_g2;
    let beta = bath.beta();
    if omega == 0.0 {
        return pref / beta;
    }
    pref * omega * (-omega.abs() / bath.omega_c).exp() / -(-beta * omega).exp_m1()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

/// Which Pauli operator couples each qubit to its own bath.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSpec {
    pub axis: Axis,
    /// Coupled qubits; `None` means all of them.
    #[serde(default)]
    pub qubits: Option<Vec<usize>>,
}

impl CouplingSpec {
    pub fn all(axis: Axis) -> Self {
        CouplingSpec { axis, qubits: None }
    }

    pub fn only(axis: Axis, qubits: Vec<usize>) -> Self {
        CouplingSpec { axis, qubits: Some(qubits) }
    }

    /// `(axis, qubit)` for every coupling operator.
    pub fn operators(&self, n_qubits: usize) -> Result<Vec<(Axis, usize)>> {
        let qubits: Vec<usize> = match &self.qubits {
            None => (0..n_qubits).collect(),
            Some(q) => q.clone(),
        };
        if let Some(&bad) = qubits.iter().find(|&&q| q >= n_qubits) {
            return domain(format!("coupled qubit {bad} outside [0, {n_qubits})"));
        }
        Ok(qubits.into_iter().map(|q| (self.axis, q)).collect())
    }
}

/// Transitions sharing one Bohr frequency `ω = E_b - E_a` (GHz).
#[derive(Debug, Clone)]
pub struct FrequencyBin {
    pub omega: f64,
    /// Ordered `(a, b)` pairs; the Lindblad operator maps `|E_b⟩` to `|E_a⟩`.
    pub pairs: Vec<(usize, usize)>,
}

/// Lindblad operators of every coupling operator at one instant.
#[derive(Debug, Clone)]
pub struct LindbladSet {
    pub energies: Vec<f64>,
    pub operators: Vec<(Axis, usize)>,
    /// `elements[α][(a, b)] = ⟨E_a|A_α|E_b⟩`.
    pub elements: Vec<DMatrix<f64>>,
    pub bins: Vec<FrequencyBin>,
    /// Pairs `a ≠ b` closer than the binning tolerance.
    pub degenerate_pairs: usize,
}

impl LindbladSet {
    pub fn transition(&self, alpha: usize, a: usize, b: usize) -> f64 {
        self.elements[alpha][(a, b)]
    }

    /// `Σ_(a,b) |⟨E_a|A_α|E_b⟩|²`, which equals `‖A_α‖_F²`.
    pub fn completeness(&self, alpha: usize) -> f64 {
        self.elements[alpha].iter().map(|x| x * x).sum()
    }

    /// Eigenbasis matrix of `L_{α,ω}` for bin `bin`.
    pub fn operator(&self, alpha: usize, bin: usize) -> DMatrix<f64> {
        let d = self.energies.len();
        let mut l = DMatrix::zeros(d, d);
        for &(a, b) in &self.bins[bin].pairs {
            l[(a, b)] = self.elements[alpha][(a, b)];
        }
        l
    }

    /// Index of the bin holding `omega`, if any.
    pub fn bin_of(&self, omega: f64, tol: f64) -> Option<usize> {
        self.bins.iter().position(|b| (b.omega - omega).abs() <= tol)
    }
}

fn operator_in_basis(vectors: &DMatrix<f64>, axis: Axis, qubit: usize) -> DMatrix<f64> {
    let d = vectors.nrows();
    let av = match axis {
        Axis::X => DMatrix::from_fn(d, d, |r, c| vectors[(r ^ (1 << qubit), c)]),
        Axis::Z => DMatrix::from_fn(d, d, |r, c| spin(r, qubit) * vectors[(r, c)]),
    };
    vectors.transpose() * av
}

fn bin_frequencies(energies: &[f64], tol: f64) -> (Vec<FrequencyBin>, usize) {
    let d = energies.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            pairs.push((energies[b] - energies[a], a, b));
        }
    }
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    let degenerate = pairs.iter().filter(|p| p.1 != p.2 && p.0.abs() < tol).count();
    let mut bins: Vec<FrequencyBin> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    let mut sum = 0.0;
    for (w, a, b) in pairs {
        if w - last > tol || bins.is_empty() {
            if let Some(prev) = bins.last_mut() {
                prev.omega = sum / prev.pairs.len() as f64;
            }
            bins.push(FrequencyBin { omega: w, pairs: Vec::new() });
            sum = 0.0;
        }
        let bin = bins.last_mut().expect("bin pushed above");
        bin.pairs.push((a, b));
        sum += w;
        last = w;
    }
    if let Some(prev) = bins.last_mut() {
        prev.omega = sum / prev.pairs.len() as f64;
    }
    // the zero bin's mean can pick up round-off; pin it
    for bin in &mut bins {
        if bin.pairs.iter().any(|&(a, b)| a == b) {
            bin.omega = 0.0;
        }
    }
    (bins, degenerate)
}

/// Builds the Lindblad operators from an eigensystem. Bohr frequencies closer
/// than `1e-9·energy_scale` share a bin.
pub fn build_lindblads(
    es: &Eigensystem,
    coupling: &CouplingSpec,
    n_qubits: usize,
    energy_scale: f64,
) -> Result<LindbladSet> {
    if es.values.len() != 1 << n_qubits {
        return domain(format!("eigensystem of size {} does not match {n_qubits} qubits", es.values.len()));
    }
    let operators = coupling.operators(n_qubits)?;
    let elements = operators.iter().map(|&(ax, q)| operator_in_basis(&es.vectors, ax, q)).collect();
    let (bins, degenerate_pairs) = bin_frequencies(&es.values, DEGENERACY_TOL * energy_scale);
    Ok(LindbladSet { energies: es.values.clone(), operators, elements, bins, degenerate_pairs })
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// AME generator for a fixed Hamiltonian path.
struct Generator<'a> {
    ham: &'a AnnealHamiltonian,
    bath: BathSpec,
    coupling: &'a CouplingSpec,
}

impl Generator<'_> {
    /// `dρ/ds = time_scale·L_s(ρ)` with `ρ` column-major. Returns the number of
    /// degenerate pairs met.
    fn apply(&self, s: f64, time_scale: f64, y: &[Complex64], dy: &mut [Complex64]) -> usize {
        let d = self.ham.dim();
        let es = eigensystem(&self.ham.dense(s)).expect("assembled Hamiltonian is symmetric");
        let set = build_lindblads(&es, self.coupling, self.ham.n_qubits(), self.ham.energy_scale())
            .expect("coupling validated before integration");
        let v = to_complex(&es.vectors);
        let rho = DMatrix::from_column_slice(d, d, y);
        let rt = v.transpose() * rho * &v;

        let mut out = DMatrix::from_fn(d, d, |r, c| {
            rt[(r, c)] * Complex64::new(0.0, -TAU * (set.energies[r] - set.energies[c]))
        });
        if self.bath.eta_g2 > 0.0 {
            let mut m = DMatrix::<f64>::zeros(d, d);
            for bin in &set.bins {
                let g = spectral_density(&self.bath, TAU * bin.omega);
                for el in &set.elements {
                    for &(a, b) in &bin.pairs {
                        let x = g * el[(a, b)];
                        if x == 0.0 {
                            continue;
                        }
                        for &(c, e) in &bin.pairs {
                            let w = x * el[(c, e)];
                            if w == 0.0 {
                                continue;
                            }
                            out[(a, c)] += rt[(b, e)] * w;
                            if a == c {
                                m[(b, e)] += w;
                            }
                        }
                    }
                }
            }
            let m = to_complex(&m);
            out -= (&m * &rt + &rt * &m) * Complex64::new(0.5, 0.0);
        }
        let back = &v * out * v.transpose();
        for (o, z) in dy.iter_mut().zip(back.iter()) {
            *o = z * time_scale;
        }
        set.degenerate_pairs
    }
}

/// Eigenstate populations `⟨E_n(s)|ρ(s)|E_n(s)⟩` at one reporting point.
#[derive(Debug, Clone, Serialize)]
pub struct PopulationRow {
    pub s: f64,
    pub populations: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct AmeResult {
    pub result: AnnealResult,
    pub populations: Vec<PopulationRow>,
    /// Largest `|tr ρ - 1|` seen at a reporting point.
    pub max_trace_drift: f64,
    pub max_hermiticity_error: f64,
    /// `(s, eigenvalue)` for every clipping event.
    pub clipped: Vec<(f64, f64)>,
    /// Generator evaluations that met a degenerate Bohr frequency.
    pub degenerate_evaluations: usize,
}

fn populations_at(ham: &AnnealHamiltonian, s: f64, rho: &DensityMatrix) -> Vec<f64> {
    let es = eigensystem(&ham.dense(s)).expect("assembled Hamiltonian is symmetric");
    (0..ham.dim()).map(|n| density::expectation_real(rho, &es.state(n))).collect()
}

fn check_ame(run: &AnnealRun, bath: &BathSpec, coupling: &CouplingSpec) -> Result<()> {
    run.validate()?;
    bath.validate()?;
    if run.problem.n_qubits > AME_CAP {
        return Err(Error::Size { what: "AME", n: run.problem.n_qubits, cap: AME_CAP });
    }
    coupling.operators(run.problem.n_qubits)?;
    Ok(())
}

/// AME evolution from `|E₀(0)⟩⟨E₀(0)|`, reporting on a uniform grid.
pub fn evolve_ame(run: &AnnealRun, bath: &BathSpec, coupling: &CouplingSpec) -> Result<AmeResult> {
    evolve_ame_reported(run, bath, coupling, &uniform_grid(DEFAULT_REPORT_POINTS))
}

/// As [`evolve_ame`] with an explicit reporting grid. Schedule breakpoints are
/// always added to it.
pub fn evolve_ame_reported(
    run: &AnnealRun,
    bath: &BathSpec,
    coupling: &CouplingSpec,
    report: &[f64],
) -> Result<AmeResult> {
    check_ame(run, bath, coupling)?;
    let ham = AnnealHamiltonian::new(&run.problem, &run.plan)?;
    let psi0 = density::from_real(&crate::closed::initial_state(&ham)?);
    let d = ham.dim();
    let mut rho: Vec<Complex64> = density::outer(&psi0).as_slice().to_vec();
    let gen = Generator { ham: &ham, bath: *bath, coupling };
    let mut degenerate = 0usize;
    let stops = stops_with(&run.plan, report);

    let mut stats = StepStats::default();
    let mut rows = vec![PopulationRow { s: stops[0], populations: populations_at(&ham, stops[0], &density::outer(&psi0)) }];
    let (mut drift, mut herm) = (0.0f64, 0.0f64);
    let mut clipped = Vec::new();
    for w in stops.windows(2) {
        let mut rhs = |s: f64, y: &[Complex64], dy: &mut [Complex64]| {
            if gen.apply(s, run.t_an, y, dy) > 0 {
                degenerate += 1;
            }
        };
        let seg = integrate(&mut rhs, &mut rho, w, run.tol, |_, _| {})?;
        stats.accepted += seg.accepted;
        stats.rejected += seg.rejected;
        stats.evaluations += seg.evaluations;

        let s = w[1];
        let mut m = DensityMatrix::from_column_slice(d, d, &rho);
        drift = drift.max((density::trace(&m) - 1.0).norm());
        herm = herm.max(density::hermiticity_error(&m));
        let worst = density::min_eigenvalue(&m);
        if worst < -POSITIVITY_ABORT {
            return Err(Error::Positivity(worst));
        }
        if worst < -POSITIVITY_NOISE {
            log::warn!("clipping negative eigenvalue {worst:.3e} at s = {s}");
            density::clip_negative(&mut m);
            rho.copy_from_slice(m.as_slice());
            clipped.push((s, worst));
        }
        rows.push(PopulationRow { s, populations: populations_at(&ham, s, &m) });
    }
    let rho = DensityMatrix::from_vec(d, d, rho);
    let result = finish(run, FinalState::Mixed(rho), stats)?;
    Ok(AmeResult {
        result,
        populations: rows,
        max_trace_drift: drift,
        max_hermiticity_error: herm,
        clipped,
        degenerate_evaluations: degenerate,
    })
}

/// Per-s overlaps of `ρ(s)` with the instantaneous eigenstates.
pub fn eigenstate_populations(
    run: &AnnealRun,
    bath: &BathSpec,
    coupling: &CouplingSpec,
    report: &[f64],
) -> Result<Vec<PopulationRow>> {
    Ok(evolve_ame_reported(run, bath, coupling, report)?.populations)
}

/// Relaxes `ρ` for `duration` ns under the generator frozen at `s`.
pub fn relax_frozen(
    problem: &IsingProblem,
    plan: &SchedulePlan,
    s: f64,
    bath: &BathSpec,
    coupling: &CouplingSpec,
    rho: &mut DensityMatrix,
    duration: f64,
    tol: Tolerances,
) -> Result<StepStats> {
    bath.validate()?;
    let ham = AnnealHamiltonian::new(problem, plan)?;
    coupling.operators(ham.n_qubits())?;
    let gen = Generator { ham: &ham, bath: *bath, coupling };
    let d = ham.dim();
    let mut y = rho.as_slice().to_vec();
    let mut rhs = |_t: f64, y: &[Complex64], dy: &mut [Complex64]| {
        gen.apply(s, duration, y, dy);
    };
    let stats = integrate(&mut rhs, &mut y, &[0.0, 1.0], tol, |_, _| {})?;
    *rho = DensityMatrix::from_vec(d, d, y);
    Ok(stats)
}

pub fn write_populations_csv<W: Write>(rows: &[PopulationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let levels = rows.first().map_or(0, |r| r.populations.len());
    let mut header = vec!["s".to_string()];
    header.extend((0..levels).map(|i| format!("pop_{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{:e}", r.s)];
        rec.extend(r.populations.iter().map(|p| format!("{p:e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Ground-state probability under the AME and in the closed system.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurvePoint {
    pub t_an: f64,
    pub p_ground: f64,
    pub p_closed: f64,
}

/// `(t_an, p_ground, p_closed)` for each anneal duration, in parallel.
pub fn ame_curve(
    problem: &IsingProblem,
    plan: &SchedulePlan,
    bath: &BathSpec,
    coupling: &CouplingSpec,
    t_ans: &[f64],
    tol: Tolerances,
) -> Result<Vec<CurvePoint>> {
    t_ans
        .par_iter()
        .map(|&t_an| {
            let run = AnnealRun::new(problem.clone(), *plan, t_an)?.with_tolerances(tol);
            let open = evolve_ame_reported(&run, bath, coupling, &[])?;
            let closed = evolve_schrodinger(&run)?;
            Ok(CurvePoint {
                t_an,
                p_ground: open.result.success_probability,
                p_closed: closed.success_probability,
            })
        })
        .collect()
}

pub fn write_curve_csv<W: Write>(points: &[CurvePoint], out: W) -> Result<()> {
    write_rows_csv(points, out)
}

/// The first target-magnetization flip after `s_x`.
pub fn second_crossing(problem: &IsingProblem, plan: &SchedulePlan) -> Result<f64> {
    let Some(s_x) = plan.s_x() else {
        return domain("second crossing needs an LSTF plan");
    };
    let trace = trace_spectrum(problem, plan, DEFAULT_GRID)?;
    trace
        .s_plus_list
        .iter()
        .copied()
        .find(|&s| s > s_x + 1e-6)
        .ok_or_else(|| Error::Domain("no crossing after s_x".into()))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FrustrationRow {
    pub f: f64,
    pub s_x: f64,
    pub s_plus: f64,
    pub t_an: f64,
    /// `t_an·(s₊ - s_x)`, ns.
    pub interval: f64,
    pub p_ground: f64,
    pub p_closed: f64,
}

/// Two-qubit LSTF (target index 1, `c_x = 0`) over frustrations and durations.
pub fn frustration_sweep(
    f_list: &[f64],
    energy_scale: f64,
    s_x: f64,
    bath: &BathSpec,
    coupling: &CouplingSpec,
    t_ans: &[f64],
    tol: Tolerances,
) -> Result<Vec<FrustrationRow>> {
    let plan = SchedulePlan::lstf(1, s_x)?;
    let mut rows = Vec::new();
    for &f in f_list {
        let problem = build_two_qubit(f, energy_scale, CouplerSign::Positive, 0.0)?;
        let s_plus = second_crossing(&problem, &plan)?;
        for p in ame_curve(&problem, &plan, bath, coupling, t_ans, tol)? {
            rows.push(FrustrationRow {
                f,
                s_x,
                s_plus,
                t_an: p.t_an,
                interval: p.t_an * (s_plus - s_x),
                p_ground: p.p_ground,
                p_closed: p.p_closed,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EnergyScaleRow {
    pub energy_scale: f64,
    pub t_an: f64,
    pub p_ground: f64,
    pub p_closed: f64,
}

/// Two-qubit LSTF curves at several energy scales.
pub fn energy_scale_sweep(
    r_list: &[f64],
    f: f64,
    s_x: f64,
    bath: &BathSpec,
    coupling: &CouplingSpec,
    t_ans: &[f64],
    tol: Tolerances,
) -> Result<Vec<EnergyScaleRow>> {
    let plan = SchedulePlan::lstf(1, s_x)?;
    let mut rows = Vec::new();
    for &r in r_list {
        let problem = build_two_qubit(f, r, CouplerSign::Positive, 0.0)?;
        rows.extend(ame_curve(&problem, &plan, bath, coupling, t_ans, tol)?.into_iter().map(|p| {
            EnergyScaleRow { energy_scale: r, t_an: p.t_an, p_ground: p.p_ground, p_closed: p.p_closed }
        }));
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct MagnetizationRow {
    pub s: f64,
    pub m_x: Vec<f64>,
    pub m_z: Vec<f64>,
    pub degenerate: bool,
}

/// Ground-state `m^x_i(s)` (and `m^z_i(s)`) on a grid.
pub fn x_magnetization_report(
    problem: &IsingProblem,
    plan: &SchedulePlan,
    grid: &[f64],
) -> Result<Vec<MagnetizationRow>> {
    let ham = AnnealHamiltonian::new(problem, plan)?;
    if let Some(&bad) = grid.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return domain(format!("annealing parameter s = {bad} outside [0, 1]"));
    }
    Ok(grid
        .par_iter()
        .map(|&s| {
            let x = sample_at(&ham, s);
            MagnetizationRow { s, m_x: x.m_x, m_z: x.m_z, degenerate: x.degenerate }
        })
        .collect())
}

pub fn write_magnetization_csv<W: Write>(rows: &[MagnetizationRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = rows.first().map_or(0, |r| r.m_x.len());
    let mut header = vec!["s".to_string()];
    header.extend((0..n).map(|i| format!("mx_{i}")));
    header.extend((0..n).map(|i| format!("mz_{i}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![format!("{:e}", r.s)];
        rec.extend(r.m_x.iter().chain(&r.m_z).map(|m| format!("{m:e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Bath and solver settings echoed next to open-system outputs.
pub fn metadata(bath: &BathSpec, coupling: &CouplingSpec) -> serde_json::Value {
    serde_json::json!({
        "bath": bath,
        "beta_ns": bath.beta(),
        "kb_over_hbar_angular_ghz_per_mk": KB_OVER_HBAR,
        "coupling": coupling,
        "lamb_shift": LAMB_SHIFT,
        "frequency_bin_tolerance": DEGENERACY_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::closed::evolve_von_neumann;
    use crate::hamiltonian::{pauli_x, pauli_z};
    use crate::problem::IsingProblem;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_qubit() -> IsingProblem {
        build_two_qubit(0.8, 1.0, CouplerSign::Positive, 1.0).unwrap()
    }

    fn random_density(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        let g = DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        let rho = &g * g.adjoint();
        let tr = density::trace(&rho);
        rho / tr
    }

    // Dissipator assembled directly in the computational basis from dense
    // Lindblad operators.
    fn dense_generator(
        ham: &AnnealHamiltonian,
        bath: &BathSpec,
        coupling: &CouplingSpec,
        s: f64,
        rho: &DensityMatrix,
    ) -> DensityMatrix {
        let n = ham.n_qubits();
        let d = ham.dim();
        let h = ham.dense(s);
        let eig = h.clone().symmetric_eigen();
        let e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let v = &eig.eigenvectors;
        let hc = to_complex(&h);
        let i = Complex64::new(0.0, 1.0);
        let mut out = (&hc * rho - rho * &hc) * (-i * TAU);
        let tol = 1e-9 * ham.energy_scale();
        let mut omegas: Vec<f64> = Vec::new();
        for a in 0..d {
            for b in 0..d {
                let w = e[b] - e[a];
                if !omegas.iter().any(|&x| (x - w).abs() <= tol) {
                    omegas.push(w);
                }
            }
        }
        for (axis, q) in coupling.operators(n).unwrap() {
            let op = match axis {
                Axis::X => pauli_x(n, q),
                Axis::Z => pauli_z(n, q),
            };
            for &w in &omegas {
                let mut l = DMatrix::<f64>::zeros(d, d);
                for a in 0..d {
                    for b in 0..d {
                        if ((e[b] - e[a]) - w).abs() <= tol {
                            let ea = v.column(a);
                            let eb = v.column(b);
                            let amp = (eb.transpose() * &op * ea)[(0, 0)];
                            l += ea * eb.transpose() * amp;
                        }
                    }
                }
                let l = to_complex(&l);
                let ld = l.adjoint();
                let g = Complex64::new(spectral_density(bath, TAU * w), 0.0);
                let ll = &ld * &l;
                out += (&l * rho * &ld - (&ll * rho + rho * &ll) * Complex64::new(0.5, 0.0)) * g;
            }
        }
        out
    }

    #[test]
    fn kms_identity() {
        let bath = BathSpec::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let w = rng.random_range(0.01..3.0 * bath.omega_c);
            let lhs = spectral_density(&bath, -w);
            let rhs = (-bath.beta() * w).exp() * spectral_density(&bath, w);
            assert!(((lhs - rhs) / rhs).abs() < 1e-10, "ω = {w}");
        }
    }

    #[test]
    fn zero_frequency_limit() {
        let bath = BathSpec::default();
        // k_B·16 mK/ħ in angular GHz
        let kt = 1.380649e-23 * 0.016 / 1.054571817e-34 * 1e-9;
        let want = TAU * 1e-4 * kt;
        assert!((spectral_density(&bath, 0.0) - want).abs() / want < 2e-4);
        let near = spectral_density(&bath, 1e-7);
        assert!((near - spectral_density(&bath, 0.0)).abs() / want < 1e-6);
    }

    #[test]
    fn cutoff_suppresses_high_frequencies() {
        let bath = BathSpec::default();
        let ratio = spectral_density(&bath, 10.0 * bath.omega_c) / spectral_density(&bath, bath.omega_c);
        // the Ohmic prefactor contributes exactly 10; the cutoff the rest
        assert!(ratio / 10.0 < (-8.0f64).exp());
        assert!((ratio / 10.0 / (-9.0f64).exp() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn bath_validation() {
        assert!(BathSpec { temperature_mk: 0.0, ..Default::default() }.validate().is_err());
        assert!(BathSpec { omega_c: -1.0, ..Default::default() }.validate().is_err());
        assert!(BathSpec::default().with_eta_g2(-1e-3).validate().is_err());
        assert!(BathSpec::default().with_eta_g2(0.0).validate().is_ok());
        assert!(CouplingSpec::only(Axis::X, vec![2]).operators(2).is_err());
    }

    #[test]
    fn lindblads_complete_and_paired() {
        let ham = AnnealHamiltonian::new(&two_qubit(), &SchedulePlan::Aqa).unwrap();
        let es = eigensystem(&ham.dense(0.43)).unwrap();
        for axis in [Axis::X, Axis::Z] {
            let set = build_lindblads(&es, &CouplingSpec::all(axis), 2, 1.0).unwrap();
            assert_eq!(set.degenerate_pairs, 0);
            for alpha in 0..2 {
                assert!((set.completeness(alpha) - 4.0).abs() < 1e-12);
                for (i, bin) in set.bins.iter().enumerate() {
                    let j = set.bin_of(-bin.omega, 1e-12).unwrap();
                    let diff = set.operator(alpha, i).transpose() - set.operator(alpha, j);
                    assert!(diff.amax() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn degenerate_frequencies_share_a_bin() {
        let es = Eigensystem { values: vec![-1.0, 0.0, 0.0, 1.0], vectors: DMatrix::identity(4, 4) };
        let set = build_lindblads(&es, &CouplingSpec::all(Axis::X), 2, 1.0).unwrap();
        assert_eq!(set.degenerate_pairs, 2);
        let zero = set.bin_of(0.0, 0.0).unwrap();
        assert_eq!(set.bins[zero].pairs.len(), 6);
        // -2, -1, 0, 1, 2
        assert_eq!(set.bins.len(), 5);
    }

    #[test]
    fn generator_matches_dense_construction() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let bath = BathSpec::default().with_eta_g2(1e-2);
        let four = crate::instances::four_qubit_frustrated().unwrap();
        let cases = [
            (two_qubit(), SchedulePlan::Aqa, vec![0.1, 0.5, 0.85]),
            (two_qubit(), SchedulePlan::lstf(1, 0.2).unwrap(), vec![0.1, 0.45, 0.9]),
            (four, SchedulePlan::lstf(0, 0.2).unwrap(), vec![0.3, 0.7]),
        ];
        for (problem, plan, points) in cases {
            let ham = AnnealHamiltonian::new(&problem, &plan).unwrap();
            let d = ham.dim();
            for axis in [Axis::X, Axis::Z] {
                let coupling = CouplingSpec::all(axis);
                let gen = Generator { ham: &ham, bath, coupling: &coupling };
                for &s in &points {
                    let rho = random_density(d, &mut rng);
                    let mut dy = vec![Complex64::default(); d * d];
                    gen.apply(s, 1.0, rho.as_slice(), &mut dy);
                    let want = dense_generator(&ham, &bath, &coupling, s, &rho);
                    let got = DensityMatrix::from_column_slice(d, d, &dy);
                    assert!((got - want).camax() < 1e-10, "{axis:?} s = {s}");
                }
            }
        }
    }

    #[test]
    fn no_coupling_reproduces_von_neumann() {
        let bath = BathSpec::default().with_eta_g2(0.0);
        for plan in [SchedulePlan::Aqa, SchedulePlan::lstf(1, 0.2).unwrap()] {
            let run = AnnealRun::new(two_qubit(), plan, 5.0).unwrap();
            let open = evolve_ame(&run, &bath, &CouplingSpec::all(Axis::X)).unwrap();
            let closed = evolve_von_neumann(&run).unwrap();
            let dist = density::trace_distance(&open.result.state.density(), &closed.state.density());
            assert!(dist < 1e-6, "trace distance {dist:e}");
        }
    }

    #[test]
    fn trace_and_populations_are_conserved() {
        let run = AnnealRun::new(two_qubit(), SchedulePlan::lstf(1, 0.2).unwrap(), 20.0).unwrap();
        let res = evolve_ame(&run, &BathSpec::default().with_eta_g2(1e-3), &CouplingSpec::all(Axis::X)).unwrap();
        assert!(res.max_trace_drift < 1e-7);
        assert!(res.max_hermiticity_error < 1e-7);
        assert!(res.clipped.is_empty());
        assert!(res.populations.len() >= DEFAULT_REPORT_POINTS);
        for row in &res.populations {
            assert!((row.populations.iter().sum::<f64>() - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn frozen_generator_thermalizes() {
        let problem = two_qubit();
        let plan = SchedulePlan::Aqa;
        let bath = BathSpec::default().with_eta_g2(1e-2);
        let s = 0.6;
        let ham = AnnealHamiltonian::new(&problem, &plan).unwrap();
        let es = eigensystem(&ham.dense(s)).unwrap();
        let mut rho = density::outer(&density::from_real(&es.state(0)));
        let tol = Tolerances { rel: 1e-8, abs: 1e-10 };
        relax_frozen(&problem, &plan, s, &bath, &CouplingSpec::all(Axis::X), &mut rho, 20_000.0, tol).unwrap();
        let beta = bath.beta();
        let weights: Vec<f64> = es.values.iter().map(|e| (-beta * TAU * (e - es.values[0])).exp()).collect();
        let z: f64 = weights.iter().sum();
        for n in 0..4 {
            let p = density::expectation_real(&rho, &es.state(n));
            let gibbs = weights[n] / z;
            assert!((p - gibbs).abs() <= 0.05 * gibbs, "level {n}: {p} vs {gibbs}");
        }
    }

    #[test]
    fn weak_bath_stays_close_to_closed_curve() {
        let problem = build_two_qubit(0.8, 1.0, CouplerSign::Positive, 0.0).unwrap();
        let plan = SchedulePlan::lstf(1, 0.2).unwrap();
        let pts = ame_curve(&problem, &plan, &BathSpec::default(), &CouplingSpec::all(Axis::Z), &[5.0, 30.0], Tolerances::default())
            .unwrap();
        for p in pts {
            assert!(p.p_ground <= p.p_closed + 1e-6);
            assert!(p.p_closed - p.p_ground < 0.01);
        }
    }

    #[test]
    fn x_magnetization_of_untouched_target() {
        let problem = build_two_qubit(0.8, 1.0, CouplerSign::Positive, 0.0).unwrap();
        let plan = SchedulePlan::lstf(1, 0.2).unwrap();
        let rows = x_magnetization_report(&problem, &plan, &uniform_grid(51)).unwrap();
        assert!((rows[0].m_x[0].abs() - 1.0).abs() < 1e-12);
        assert!(rows.iter().all(|r| r.m_x[1].abs() < 1e-12));
        let mut buf = Vec::new();
        write_magnetization_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("s,mx_0,mx_1,mz_0,mz_1\n"));
    }

    #[test]
    fn population_csv_layout() {
        let rows = vec![PopulationRow { s: 0.0, populations: vec![1.0, 0.0, 0.0, 0.0] }];
        let mut buf = Vec::new();
        write_populations_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "s,pop_0,pop_1,pop_2,pop_3");
    }
}

/// `⟨E₁(s)|A_α|E₀(s)⟩` for every coupling operator.
pub fn ground_transition_elements(
    problem: &IsingProblem,
    plan: &SchedulePlan,
    s: f64,
    coupling: &CouplingSpec,
) -> Result<Vec<((Axis, usize), f64)>> {
    let ham = AnnealHamiltonian::new(problem, plan)?;
    let es = eigensystem(&ham.dense(s))?;
    let set = build_lindblads(&es, coupling, ham.n_qubits(), ham.energy_scale())?;
    Ok(set.operators.iter().enumerate().map(|(alpha, &op)| (op, set.transition(alpha, 1, 0))).collect())
}
