//! Instantaneous spectra along the anneal.
//!
//! Eigenstates are always ordered by energy. Samples where the two lowest
//! levels are closer than `1e-9·R` are flagged degenerate: their ground-state
//! magnetizations are gauge-arbitrary and are never used to bracket a
//! magnetization zero-crossing.

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::AnnealHamiltonian;
use crate::problem::{spin, IsingProblem};
use crate::schedule::SchedulePlan;

/// Relative gap below which a sample counts as an exact crossing.
pub const DEGENERACY_TOL: f64 = 1e-9;
/// Resolution of every refined location in `s`.
pub const S_TOL: f64 = 1e-6;
pub const DEFAULT_GRID: usize = 1001;
pub const MIN_GRID: usize = 101;

const GOLDEN: f64 = 0.618_033_988_749_894_8;
/// Stop splitting magnetization jumps below this interval width.
const MIN_SPACING: f64 = 1e-7;
const JUMP_THRESHOLD: f64 = 0.05;
const MAX_REFINE_SAMPLES: usize = 4000;

/// Eigen-decomposition with ascending eigenvalues and column eigenvectors.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigensystem {
    pub fn state(&self, n: usize) -> Vec<f64> {
        self.vectors.column(n).iter().copied().collect()
    }
}

/// Diagonalizes a real symmetric (hence Hermitian) matrix.
///
/// Each eigenvector is gauge fixed so that its largest-magnitude component is
/// positive.
pub fn eigensystem(h: &DMatrix<f64>) -> Result<Eigensystem> {
    if !h.is_square() {
        return Err(Error::NonHermitian(f64::INFINITY));
    }
    let scale = h.amax().max(1.0);
    let asym = (h - h.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::NonHermitian(asym));
    }
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(h.nrows(), h.nrows());
    for (c, &i) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(i);
        let lead = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if lead < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(c, &(col * sign));
    }
    Ok(Eigensystem { values, vectors })
}

/// One sample of the spectrum.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumSample {
    pub s: f64,
    pub energies: Vec<f64>,
    pub m_z: Vec<f64>,
    pub m_x: Vec<f64>,
    /// Ground state is (numerically) degenerate; magnetizations indeterminate.
    pub degenerate: bool,
}

impl SpectrumSample {
    pub fn gap(&self, n: usize) -> f64 {
        self.energies[n] - self.energies[0]
    }
}

/// Ground-state `⟨σ^z_i⟩` and `⟨σ^x_i⟩` for a real state vector.
pub fn magnetizations(n_qubits: usize, state: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mz = (0..n_qubits)
        .map(|i| state.iter().enumerate().map(|(j, a)| a * a * spin(j, i)).sum())
        .collect();
    let mx = (0..n_qubits)
        .map(|i| state.iter().enumerate().map(|(j, a)| a * state[j ^ (1 << i)]).sum())
        .collect();
    (mz, mx)
}

pub(crate) fn sample_at(ham: &AnnealHamiltonian, s: f64) -> SpectrumSample {
    let es = eigensystem(&ham.dense(s)).expect("assembled Hamiltonian is symmetric");
    let (m_z, m_x) = magnetizations(ham.n_qubits(), &es.state(0));
    let degenerate = es.values.len() > 1
        && es.values[1] - es.values[0] < DEGENERACY_TOL * ham.energy_scale();
    SpectrumSample { s, energies: es.values, m_z, m_x, degenerate }
}

fn gap_at(ham: &AnnealHamiltonian, s: f64) -> f64 {
    let es = eigensystem(&ham.dense(s)).expect("assembled Hamiltonian is symmetric");
    es.values[1] - es.values[0]
}

/// Spectrum of an anneal on a refined grid.
#[derive(Debug, Clone)]
pub struct SpectrumTrace {
    pub samples: Vec<SpectrumSample>,
    /// Location of the global minimum of `ΔE_1`.
    pub s_star: f64,
    pub gap_at_s_star: f64,
    /// Zero-crossings of the target qubit's `m^z` (LSTF plans only).
    pub s_plus_list: Vec<f64>,
    ham: AnnealHamiltonian,
}

impl SpectrumTrace {
    pub fn n_qubits(&self) -> usize {
        self.ham.n_qubits()
    }

    pub fn hamiltonian(&self) -> &AnnealHamiltonian {
        &self.ham
    }

    pub fn s_grid(&self) -> Vec<f64> {
        self.samples.iter().map(|x| x.s).collect()
    }

    pub fn gaps(&self, n: usize) -> Vec<f64> {
        self.samples.iter().map(|x| x.gap(n)).collect()
    }

    /// Writes `s, E_0.., dE_1..dE_3, mz_1.., mx_1..` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.n_qubits();
        let dim = self.ham.dim();
        let n_gaps = (dim - 1).min(3);
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["s".to_string()];
        header.extend((0..dim).map(|i| format!("E_{i}")));
        header.extend((1..=n_gaps).map(|i| format!("dE_{i}")));
        header.extend((0..n).map(|i| format!("mz_{i}")));
        header.extend((0..n).map(|i| format!("mx_{i}")));
        w.write_record(&header)?;
        for x in &self.samples {
            let mut row = vec![format!("{:e}", x.s)];
            row.extend(x.energies.iter().map(|e| format!("{e:e}")));
            row.extend((1..=n_gaps).map(|i| format!("{:e}", x.gap(i))));
            row.extend(x.m_z.iter().map(|m| format!("{m:e}")));
            row.extend(x.m_x.iter().map(|m| format!("{m:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples evenly spaced in `[0, 1]`.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

/// Golden-section search for the minimum of `f` on `[a, b]`.
pub(crate) fn golden_min(mut a: f64, mut b: f64, tol: f64, mut f: impl FnMut(f64) -> f64) -> (f64, f64) {
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Locates the global minimum of `ΔE_1` starting from a coarse scan.
pub fn locate_min_gap(ham: &AnnealHamiltonian, grid_points: usize) -> (f64, f64) {
    let grid = uniform_grid(grid_points);
    let gaps: Vec<f64> = grid.par_iter().map(|&s| gap_at(ham, s)).collect();
    refine_gap_minima(ham, &grid, &gaps, &mut |_, _| {})
}

/// Golden-section refinement of every local minimum of a sampled gap curve.
/// `visit` sees each extra evaluation.
fn refine_gap_minima(
    ham: &AnnealHamiltonian,
    grid: &[f64],
    gaps: &[f64],
    visit: &mut dyn FnMut(f64, f64),
) -> (f64, f64) {
    let m = grid.len();
    let mut best = (grid[0], gaps[0]);
    for i in 0..m {
        let left = if i > 0 { gaps[i - 1] } else { f64::INFINITY };
        let right = if i + 1 < m { gaps[i + 1] } else { f64::INFINITY };
        if !(gaps[i] <= left && gaps[i] <= right) {
            continue;
        }
        let a = grid[i.saturating_sub(1)];
        let b = grid[(i + 1).min(m - 1)];
        let (s, g) = golden_min(a, b, S_TOL, |s| {
            let g = gap_at(ham, s);
            visit(s, g);
            g
        });
        let cand = if gaps[i] < g { (grid[i], gaps[i]) } else { (s, g) };
        if cand.1 < best.1 {
            best = cand;
        }
    }
    best
}

/// Computes the spectrum on a uniform grid of `grid_resolution` points, then
/// refines near gap minima and magnetization jumps.
pub fn trace_spectrum(
    problem: &IsingProblem,
    plan: &SchedulePlan,
    grid_resolution: usize,
) -> Result<SpectrumTrace> {
    if grid_resolution < MIN_GRID {
        return Err(Error::Domain(format!(
            "grid resolution must be at least {MIN_GRID}, got {grid_resolution}"
        )));
    }
    let ham = AnnealHamiltonian::new(problem, plan)?;
    let grid = uniform_grid(grid_resolution);
    let mut samples: Vec<SpectrumSample> = grid.par_iter().map(|&s| sample_at(&ham, s)).collect();

    let gaps: Vec<f64> = samples.iter().map(|x| x.gap(1)).collect();
    let mut extra_s = Vec::new();
    let (s_star, gap_at_s_star) = refine_gap_minima(&ham, &grid, &gaps, &mut |s, _| extra_s.push(s));
    extra_s.push(s_star);
    // a few evenly spaced samples across the final golden bracket region
    let width = 1e-3;
    extra_s.extend((0..=20).map(|i| (s_star - width + 2.0 * width * i as f64 / 20.0).clamp(0.0, 1.0)));
    samples.extend(extra_s.par_iter().map(|&s| sample_at(&ham, s)).collect::<Vec<_>>());
    sort_dedup(&mut samples);

    refine_jumps(&ham, &mut samples);

    let mut trace = SpectrumTrace { samples, s_star, gap_at_s_star, s_plus_list: Vec::new(), ham };
    if let Some(k) = plan.target() {
        trace.s_plus_list = find_s_plus(&trace, k)?;
    }
    Ok(trace)
}

fn sort_dedup(samples: &mut Vec<SpectrumSample>) {
    samples.sort_by(|a, b| a.s.total_cmp(&b.s));
    samples.dedup_by(|a, b| a.s == b.s);
}

/// Bisects intervals across which any `m^z_i` jumps by more than a threshold.
fn refine_jumps(ham: &AnnealHamiltonian, samples: &mut Vec<SpectrumSample>) {
    let mut added = 0;
    loop {
        let mids: Vec<f64> = samples
            .windows(2)
            .filter(|w| {
                w[1].s - w[0].s > MIN_SPACING
                    && w[0]
                        .m_z
                        .iter()
                        .zip(&w[1].m_z)
                        .any(|(a, b)| (a - b).abs() > JUMP_THRESHOLD)
            })
            .map(|w| 0.5 * (w[0].s + w[1].s))
            .collect();
        if mids.is_empty() || added + mids.len() > MAX_REFINE_SAMPLES {
            break;
        }
        added += mids.len();
        samples.extend(mids.par_iter().map(|&s| sample_at(ham, s)).collect::<Vec<_>>());
        sort_dedup(samples);
    }
}

const ZERO_MAG: f64 = 1e-9;

fn mz_sign(sample: &SpectrumSample, k: usize) -> Option<f64> {
    if sample.degenerate || sample.m_z[k].abs() <= ZERO_MAG {
        None
    } else {
        Some(sample.m_z[k].signum())
    }
}

/// All sign changes of the energy-ordered ground state's `m^z_k`, each
/// refined by bisection to `1e-6`.
pub fn find_s_plus(trace: &SpectrumTrace, k: usize) -> Result<Vec<f64>> {
    if k >= trace.n_qubits() {
        return Err(Error::Domain(format!("qubit {k} outside [0, {})", trace.n_qubits())));
    }
    let signed: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter_map(|x| mz_sign(x, k).map(|sg| (x.s, sg)))
        .collect();
    let mut out = Vec::new();
    for w in signed.windows(2) {
        let ((mut lo, sl), (mut hi, sh)) = (w[0], w[1]);
        if sl == sh {
            continue;
        }
        let crossing = loop {
            if hi - lo <= S_TOL {
                break 0.5 * (lo + hi);
            }
            let mid = 0.5 * (lo + hi);
            let x = sample_at(&trace.ham, mid);
            match mz_sign(&x, k) {
                // exact crossing or exact zero: the midpoint is the location
                None => break mid,
                Some(sg) if sg == sl => lo = mid,
                Some(_) => hi = mid,
            }
        };
        out.push(crossing);
    }
    Ok(out)
}

/// Location of the steepest change of `m^z_k`, by centred differences.
pub fn max_slope_location(trace: &SpectrumTrace, k: usize) -> Result<f64> {
    if k >= trace.n_qubits() {
        return Err(Error::Domain(format!("qubit {k} outside [0, {})", trace.n_qubits())));
    }
    let pts: Vec<(f64, f64)> = trace
        .samples
        .iter()
        .filter(|x| !x.degenerate)
        .map(|x| (x.s, x.m_z[k]))
        .collect();
    let mut best = (f64::NAN, 0.0f64);
    for w in pts.windows(3) {
        let slope = ((w[2].1 - w[0].1) / (w[2].0 - w[0].0)).abs();
        if slope > best.1 {
            best = (w[1].0, slope);
        }
    }
    if best.1 < 1e-9 {
        return Err(Error::Flat(k));
    }
    Ok(best.0)
}
