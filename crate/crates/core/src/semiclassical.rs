//! Semiclassical picture of the two-qubit model.
//!
//! Each qubit is replaced by a spin-coherent state in the XZ plane,
//! `|θ⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`, giving the potential
//! `V(s, θ₁, θ₂) = ⟨θ₁θ₂|H(s)|θ₁θ₂⟩` and the distance
//! `D = sqrt(1 - |⟨θ₁θ₂|E₀(s)⟩|²)` to the true ground state.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, Error, Result};
use crate::hamiltonian::AnnealHamiltonian;
use crate::problem::IsingProblem;
use crate::schedule::SchedulePlan;
use crate::spectrum::{eigensystem, golden_min, DEGENERACY_TOL};

/// Smallest grid accepted by the minima search.
pub const MIN_RESOLUTION: usize = 256;
const POLISH_TOL: f64 = 1e-10;

/// Two-qubit potential evaluator.
#[derive(Debug, Clone)]
pub struct TwoQubitPotential {
    ham: AnnealHamiltonian,
    plan: SchedulePlan,
    h_x: [f64; 2],
    h_z: [f64; 2],
    j: f64,
}

struct Coeffs {
    x: [f64; 2],
    z: [f64; 2],
    zz: f64,
}

impl TwoQubitPotential {
    pub fn new(problem: &IsingProblem, plan: &SchedulePlan) -> Result<Self> {
        if problem.n_qubits != 2 {
            return domain(format!("semiclassical analysis needs a two-qubit problem, got {}", problem.n_qubits));
        }
        let ham = AnnealHamiltonian::new(problem, plan)?;
        let j = problem.j_zz.iter().sum();
        Ok(TwoQubitPotential {
            ham,
            plan: *plan,
            h_x: [problem.h_x[0], problem.h_x[1]],
            h_z: [problem.h_z[0], problem.h_z[1]],
            j,
        })
    }

    fn coeffs(&self, s: f64) -> Coeffs {
        let p = &self.plan;
        Coeffs {
            x: [p.driver_unchecked(0, s) * self.h_x[0], p.driver_unchecked(1, s) * self.h_x[1]],
            z: [p.problem_unchecked(0, s) * self.h_z[0], p.problem_unchecked(1, s) * self.h_z[1]],
            zz: p.coupler_unchecked(s) * self.j,
        }
    }

    pub fn energy_scale(&self) -> f64 {
        self.ham.energy_scale()
    }

    /// `V(s, θ₁, θ₂)` in GHz.
    pub fn potential(&self, s: f64, t1: f64, t2: f64) -> f64 {
        let c = self.coeffs(s);
        c.x[0] * t1.sin() + c.x[1] * t2.sin() + c.z[0] * t1.cos() + c.z[1] * t2.cos() + c.zz * t1.cos() * t2.cos()
    }

    /// Minimum of `V` over `θ₁` at fixed `θ₂`, in closed form.
    fn locus(&self, c: &Coeffs, t2: f64) -> (f64, f64) {
        let a = c.x[0];
        let b = c.z[0] + c.zz * t2.cos();
        let rest = c.x[1] * t2.sin() + c.z[1] * t2.cos();
        let t1 = (-a).atan2(-b).rem_euclid(TAU);
        (t1, rest - a.hypot(b))
    }

    /// Ground state of `H(s)`; fails at exact crossings.
    pub fn ground_state(&self, s: f64) -> Result<Vec<f64>> {
        let es = eigensystem(&self.ham.dense(s))?;
        let gap = es.values[1] - es.values[0];
        if gap < DEGENERACY_TOL * self.energy_scale() {
            return Err(Error::Degenerate(gap));
        }
        Ok(es.state(0))
    }

    /// `D` against a precomputed ground state.
    pub fn distance_to(ground: &[f64], t1: f64, t2: f64) -> f64 {
        let amp = coherent_pair(t1, t2);
        let overlap: f64 = amp.iter().zip(ground).map(|(a, g)| a * g).sum();
        (1.0 - overlap * overlap).max(0.0).sqrt()
    }
}

/// Amplitudes of `|θ₁⟩⊗|θ₂⟩` in the computational basis (qubit 0 = bit 0).
pub fn coherent_pair(t1: f64, t2: f64) -> [f64; 4] {
    let (c1, s1) = ((t1 / 2.0).cos(), (t1 / 2.0).sin());
    let (c2, s2) = ((t2 / 2.0).cos(), (t2 / 2.0).sin());
    [c1 * c2, s1 * c2, c1 * s2, s1 * s2]
}

pub fn potential(problem: &IsingProblem, plan: &SchedulePlan, s: f64, t1: f64, t2: f64) -> Result<f64> {
    check_s(s)?;
    Ok(TwoQubitPotential::new(problem, plan)?.potential(s, t1, t2))
}

pub fn tracenorm_distance(problem: &IsingProblem, plan: &SchedulePlan, s: f64, t1: f64, t2: f64) -> Result<f64> {
    check_s(s)?;
    let model = TwoQubitPotential::new(problem, plan)?;
    Ok(TwoQubitPotential::distance_to(&model.ground_state(s)?, t1, t2))
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        domain(format!("annealing parameter s = {s} outside [0, 1]"))
    }
}

/// `V` and `D` sampled on a uniform periodic grid.
#[derive(Debug, Clone)]
pub struct PotentialGrid {
    pub s: f64,
    /// Shared axis for both angles: `2πj/n`, `j = 0..n`.
    pub theta: Vec<f64>,
    /// Row-major in `θ₂`: entry `[i2 * n + i1]`.
    pub v: Vec<f64>,
    pub d: Vec<f64>,
}

impl PotentialGrid {
    pub fn compute(model: &TwoQubitPotential, s: f64, resolution: usize) -> Result<Self> {
        check_s(s)?;
        if resolution < 4 {
            return domain("grid resolution must be at least 4");
        }
        let theta: Vec<f64> = (0..resolution).map(|j| TAU * j as f64 / resolution as f64).collect();
        let ground = model.ground_state(s)?;
        let rows: Vec<(Vec<f64>, Vec<f64>)> = theta
            .par_iter()
            .map(|&t2| {
                let v = theta.iter().map(|&t1| model.potential(s, t1, t2)).collect();
                let d = theta.iter().map(|&t1| TwoQubitPotential::distance_to(&ground, t1, t2)).collect();
                (v, d)
            })
            .collect();
        let (v, d): (Vec<Vec<f64>>, Vec<Vec<f64>>) = rows.into_iter().unzip();
        Ok(PotentialGrid { s, theta, v: v.concat(), d: d.concat() })
    }

    pub fn resolution(&self) -> usize {
        self.theta.len()
    }

    pub fn v_at(&self, i1: usize, i2: usize) -> f64 {
        self.v[i2 * self.resolution() + i1]
    }

    pub fn d_at(&self, i1: usize, i2: usize) -> f64 {
        self.d[i2 * self.resolution() + i1]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta1", "theta2", "V", "D"])?;
        let n = self.resolution();
        for i2 in 0..n {
            for i1 in 0..n {
                w.write_record(&[
                    format!("{:e}", self.theta[i1]),
                    format!("{:e}", self.theta[i2]),
                    format!("{:e}", self.v_at(i1, i2)),
                    format!("{:e}", self.d_at(i1, i2)),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalMinimum {
    pub theta1: f64,
    pub theta2: f64,
    pub energy: f64,
}

/// Local minima of `V` at the grid's `s`, ordered by `θ₂`.
///
/// Follows the locus `θ₂ ↦ min_θ₁ V`, differentiates it along `θ₂` with a
/// periodic centred stencil and keeps the rising zero-crossings of the
/// derivative, each polished by golden-section search.
pub fn find_local_minima(model: &TwoQubitPotential, grid: &PotentialGrid) -> Result<Vec<LocalMinimum>> {
    let n = grid.resolution();
    if n < MIN_RESOLUTION {
        return domain(format!("minima search needs at least {MIN_RESOLUTION} points per axis, got {n}"));
    }
    Ok(minima_on_axis(model, grid.s, &grid.theta))
}

fn minima_on_axis(model: &TwoQubitPotential, s: f64, theta: &[f64]) -> Vec<LocalMinimum> {
    let n = theta.len();
    let h = TAU / n as f64;
    let c = model.coeffs(s);
    let locus: Vec<f64> = theta.iter().map(|&t2| model.locus(&c, t2).1).collect();
    let deriv: Vec<f64> = (0..n).map(|j| (locus[(j + 1) % n] - locus[(j + n - 1) % n]) / (2.0 * h)).collect();
    let mut out = Vec::new();
    for j in 0..n {
        let (d0, d1) = (deriv[j], deriv[(j + 1) % n]);
        if d0 < 0.0 && d1 >= 0.0 {
            let lo = theta[j] - h;
            let (t2, energy) = golden_min(lo, lo + 3.0 * h, POLISH_TOL, |t| model.locus(&c, t).1);
            let t2 = t2.rem_euclid(TAU);
            out.push(LocalMinimum { theta1: model.locus(&c, t2).0, theta2: t2, energy });
        }
    }
    out.sort_by(|a, b| a.theta2.total_cmp(&b.theta2));
    out
}

/// Distance on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaRow {
    pub s: f64,
    /// Branch index in order of appearance.
    pub branch: usize,
    pub theta1: f64,
    pub theta2: f64,
    pub energy: f64,
}

/// Local-minimum branches of `V` across a list of `s` values.
#[derive(Debug, Clone)]
pub struct MinimaTrace {
    pub rows: Vec<MinimaRow>,
}

impl MinimaTrace {
    pub fn branch(&self, b: usize) -> Vec<MinimaRow> {
        self.rows.iter().filter(|r| r.branch == b).copied().collect()
    }

    /// Number of minima found at each sampled `s`.
    pub fn counts(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some((s, c)) if *s == r.s => *c += 1,
                _ => out.push((r.s, 1)),
            }
        }
        out
    }

    /// First sampled `s` with more than one minimum.
    pub fn onset(&self) -> Option<f64> {
        self.counts().into_iter().find(|&(_, c)| c > 1).map(|(s, _)| s)
    }

    /// Sampled intervals where a coexisting pair of branches exchanges order.
    pub fn crossing_brackets(&self) -> Vec<(f64, f64)> {
        let mut pairs: Vec<(f64, (usize, usize), f64)> = Vec::new();
        for (s, c) in self.counts() {
            if c != 2 {
                continue;
            }
            let mut at: Vec<&MinimaRow> = self.rows.iter().filter(|r| r.s == s).collect();
            at.sort_by_key(|r| r.branch);
            pairs.push((s, (at[0].branch, at[1].branch), at[1].energy - at[0].energy));
        }
        pairs
            .windows(2)
            .filter(|w| w[0].1 == w[1].1 && w[0].2.signum() != w[1].2.signum())
            .map(|w| (w[0].0, w[1].0))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "branch", "theta1", "theta2", "V"])?;
        for r in &self.rows {
            w.write_record(&[
                format!("{:e}", r.s),
                r.branch.to_string(),
                format!("{:e}", r.theta1),
                format!("{:e}", r.theta2),
                format!("{:e}", r.energy),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Follows minima across ascending `s_list`; a minimum continues the branch
/// whose previous position is nearest, otherwise it opens a new branch.
pub fn minima_trace(model: &TwoQubitPotential, s_list: &[f64], resolution: usize) -> Result<MinimaTrace> {
    if resolution < MIN_RESOLUTION {
        return domain(format!("minima search needs at least {MIN_RESOLUTION} points per axis, got {resolution}"));
    }
    for &s in s_list {
        check_s(s)?;
    }
    let theta: Vec<f64> = (0..resolution).map(|j| TAU * j as f64 / resolution as f64).collect();
    let per_s: Vec<Vec<LocalMinimum>> = s_list.par_iter().map(|&s| minima_on_axis(model, s, &theta)).collect();
    let mut last: Vec<(f64, f64)> = Vec::new();
    let mut rows = Vec::new();
    for (&s, minima) in s_list.iter().zip(per_s) {
        let mut taken = vec![false; last.len()];
        for m in minima {
            let near = last
                .iter()
                .enumerate()
                .filter(|(b, _)| !taken[*b])
                .map(|(b, &(t1, t2))| (b, angle_distance(t1, m.theta1).hypot(angle_distance(t2, m.theta2))))
                .min_by(|x, y| x.1.total_cmp(&y.1));
            let branch = match near {
                Some((b, dist)) if dist < 0.5 => b,
                _ => {
                    last.push((m.theta1, m.theta2));
                    taken.push(false);
                    last.len() - 1
                }
            };
            taken[branch] = true;
            last[branch] = (m.theta1, m.theta2);
            rows.push(MinimaRow { s, branch, theta1: m.theta1, theta2: m.theta2, energy: m.energy });
        }
    }
    Ok(MinimaTrace { rows })
}

/// `s` at which the two minima become degenerate, by bisection on their
/// energy difference inside a bracket where both exist.
pub fn minima_crossing(model: &TwoQubitPotential, lo: f64, hi: f64, resolution: usize) -> Result<f64> {
    let theta: Vec<f64> = (0..resolution.max(MIN_RESOLUTION)).map(|j| TAU * j as f64 / resolution as f64).collect();
    let pair = |s: f64| -> Result<(LocalMinimum, LocalMinimum)> {
        let m = minima_on_axis(model, s, &theta);
        if m.len() != 2 {
            return domain(format!("expected two minima at s = {s}, found {}", m.len()));
        }
        Ok((m[0], m[1]))
    };
    // identify minima by position, anchored at the lower end
    let (a0, _) = pair(lo)?;
    let diff = |s: f64| -> Result<f64> {
        let (x, y) = pair(s)?;
        let (first, second) = if angle_distance(x.theta2, a0.theta2) <= angle_distance(y.theta2, a0.theta2) {
            (x, y)
        } else {
            (y, x)
        };
        Ok(second.energy - first.energy)
    };
    let (mut a, mut b) = (lo, hi);
    let fa = diff(a)?;
    if fa.signum() == diff(b)?.signum() {
        return domain(format!("minima do not cross in [{lo}, {hi}]"));
    }
    while b - a > 1e-9 {
        let m = 0.5 * (a + b);
        if diff(m)?.signum() == fa.signum() {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Straight segment through two minima, `θ₂′(θ₁)` in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MinimaLine {
    pub a: (f64, f64),
    /// Periodic image of the second minimum chosen for the lowest barrier.
    pub b: (f64, f64),
}

impl MinimaLine {
    /// Point at fraction `t` of the way from `a` to `b`.
    pub fn at(&self, t: f64) -> (f64, f64) {
        (self.a.0 + t * (self.b.0 - self.a.0), self.a.1 + t * (self.b.1 - self.a.1))
    }

    /// `θ₂′(θ₁)`; undefined for a vertical line.
    pub fn theta2_of(&self, t1: f64) -> Option<f64> {
        let dx = self.b.0 - self.a.0;
        (dx.abs() > 1e-12).then(|| self.a.1 + (self.b.1 - self.a.1) * (t1 - self.a.0) / dx)
    }

    /// Line between two minima with the image of `b` that minimises the
    /// barrier.
    pub fn between(model: &TwoQubitPotential, s: f64, a: &LocalMinimum, b: &LocalMinimum) -> Self {
        let mut best: Option<(f64, MinimaLine)> = None;
        for dm in [-1.0, 0.0, 1.0] {
            for dn in [-1.0, 0.0, 1.0] {
                let line = MinimaLine { a: (a.theta1, a.theta2), b: (b.theta1 + dm * TAU, b.theta2 + dn * TAU) };
                let top = (0..=400)
                    .map(|i| {
                        let (x, y) = line.at(i as f64 / 400.0);
                        model.potential(s, x, y)
                    })
                    .fold(f64::NEG_INFINITY, f64::max);
                if best.as_ref().is_none_or(|(t, _)| top < *t) {
                    best = Some((top, line));
                }
            }
        }
        best.map(|(_, l)| l).expect("nine candidates")
    }
}

#[derive(Debug, Clone)]
pub struct LineProfile {
    pub theta1: Vec<f64>,
    /// Unwrapped along the line.
    pub theta2: Vec<f64>,
    pub v: Vec<f64>,
    pub d: Vec<f64>,
    /// `max V - min(V at endpoints)`.
    pub barrier: f64,
}

impl LineProfile {
    /// Index of the smallest `D`.
    pub fn argmin_d(&self) -> usize {
        (0..self.d.len()).min_by(|&i, &j| self.d[i].total_cmp(&self.d[j])).unwrap_or(0)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["theta1", "theta2", "V", "D"])?;
        for i in 0..self.v.len() {
            w.write_record(&[
                format!("{:e}", self.theta1[i]),
                format!("{:e}", self.theta2[i]),
                format!("{:e}", self.v[i]),
                format!("{:e}", self.d[i]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn line_profile(model: &TwoQubitPotential, s: f64, line: &MinimaLine, n_samples: usize) -> Result<LineProfile> {
    check_s(s)?;
    if n_samples < 2 {
        return domain("a line profile needs at least two samples");
    }
    let ground = model.ground_state(s)?;
    let mut p = LineProfile { theta1: vec![], theta2: vec![], v: vec![], d: vec![], barrier: 0.0 };
    for i in 0..n_samples {
        let (x, y) = line.at(i as f64 / (n_samples - 1) as f64);
        p.theta1.push(x);
        p.theta2.push(y);
        p.v.push(model.potential(s, x, y));
        p.d.push(TwoQubitPotential::distance_to(&ground, x, y));
    }
    let ends = p.v[0].min(p.v[n_samples - 1]);
    p.barrier = p.v.iter().copied().fold(f64::NEG_INFINITY, f64::max) - ends;
    Ok(p)
}

/// Angle of the equal-superposition point between `θ₂ = π` and `2π`.
pub const EQUAL_SUPERPOSITION: f64 = 1.5 * PI;
