//! Assembly of `H(s) = Σ a_i h^x_i σ^x_i + Σ b_i h^z_i σ^z_i + Σ b_ij J_ij σ^z_i σ^z_j`.
//!
//! The Hamiltonian is real symmetric in the computational basis. The diagonal
//! splits into three precomputed vectors (target field, remaining fields,
//! couplers) so that evaluation at any `s` costs `O(2^n)`, and the transverse
//! part acts by bit flips. Dense matrices are built only for spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::problem::{spin, IsingProblem};
use crate::schedule::SchedulePlan;

/// Largest system assembled as a dense matrix.
pub const DENSE_CAP: usize = 12;

#[derive(Debug, Clone)]
pub struct AnnealHamiltonian {
    n: usize,
    plan: SchedulePlan,
    h_x: Vec<f64>,
    target_field: Vec<f64>,
    other_fields: Vec<f64>,
    couplings: Vec<f64>,
    energy_scale: f64,
}

impl AnnealHamiltonian {
    pub fn new(problem: &IsingProblem, plan: &SchedulePlan) -> Result<Self> {
        if problem.n_qubits > DENSE_CAP {
            return Err(Error::Size { what: "Hamiltonian assembly", n: problem.n_qubits, cap: DENSE_CAP });
        }
        plan.validate_for(problem.n_qubits)?;
        let n = problem.n_qubits;
        let dim = 1usize << n;
        let target = plan.target();
        let mut target_field = vec![0.0; dim];
        let mut other_fields = vec![0.0; dim];
        let mut couplings = vec![0.0; dim];
        for j in 0..dim {
            for (i, &h) in problem.h_z.iter().enumerate() {
                if Some(i) == target {
                    target_field[j] += h * spin(j, i);
                } else {
                    other_fields[j] += h * spin(j, i);
                }
            }
            for (&(u, v), &jz) in problem.edges.iter().zip(&problem.j_zz) {
                couplings[j] += jz * spin(j, u) * spin(j, v);
            }
        }
        Ok(AnnealHamiltonian {
            n,
            plan: *plan,
            h_x: problem.h_x.clone(),
            target_field,
            other_fields,
            couplings,
            energy_scale: problem.energy_scale,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn plan(&self) -> &SchedulePlan {
        &self.plan
    }

    pub fn energy_scale(&self) -> f64 {
        self.energy_scale
    }

    /// Transverse amplitudes `a_i(s)·h^x_i`.
    pub fn transverse(&self, s: f64) -> Vec<f64> {
        (0..self.n).map(|i| self.plan.driver_unchecked(i, s) * self.h_x[i]).collect()
    }

    /// Diagonal of `H(s)`.
    pub fn diagonal(&self, s: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.diagonal_into(s, &mut out);
        out
    }

    pub fn diagonal_into(&self, s: f64, out: &mut [f64]) {
        let other = match self.plan {
            SchedulePlan::Aqa => s,
            SchedulePlan::Lstf { .. } => {
                // any non-target index shares the same schedule
                let i = if self.plan.target() == Some(0) { 1 } else { 0 };
                self.plan.problem_unchecked(i, s)
            }
        };
        let tgt = self.plan.target().map_or(0.0, |k| self.plan.problem_unchecked(k, s));
        let cpl = self.plan.coupler_unchecked(s);
        for (j, o) in out.iter_mut().enumerate() {
            *o = tgt * self.target_field[j] + other * self.other_fields[j] + cpl * self.couplings[j];
        }
    }

    /// Final problem Hamiltonian diagonal (all problem schedules at 1).
    pub fn problem_diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|j| self.target_field[j] + self.other_fields[j] + self.couplings[j])
            .collect()
    }

    /// `out = H(s)·psi` given a precomputed diagonal and transverse amplitudes.
    #[inline]
    pub fn apply_with(diag: &[f64], transverse: &[f64], psi: &[Complex64], out: &mut [Complex64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = psi[j] * diag[j];
            for (i, &a) in transverse.iter().enumerate() {
                if a != 0.0 {
                    acc += psi[j ^ (1 << i)] * a;
                }
            }
            *o = acc;
        }
    }

    /// `out = H(s)·psi`.
    pub fn apply(&self, s: f64, psi: &[Complex64], out: &mut [Complex64]) {
        let diag = self.diagonal(s);
        let tr = self.transverse(s);
        Self::apply_with(&diag, &tr, psi, out);
    }

    /// Dense `H(s)`.
    pub fn dense(&self, s: f64) -> DMatrix<f64> {
        let dim = self.dim();
        let mut h = DMatrix::from_diagonal(&DVector::from_vec(self.diagonal(s)));
        for (i, a) in self.transverse(s).into_iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for j in 0..dim {
                h[(j ^ (1 << i), j)] += a;
            }
        }
        h
    }
}

/// Dense `H(s)` for a problem under a plan.
pub fn hamiltonian_at(problem: &IsingProblem, plan: &SchedulePlan, s: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("annealing parameter s = {s} outside [0, 1]")));
    }
    Ok(AnnealHamiltonian::new(problem, plan)?.dense(s))
}

/// `σ^z` on qubit `i` of an `n`-qubit register.
pub fn pauli_z(n: usize, i: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_fn(1 << n, |j, _| spin(j, i)))
}

/// `σ^x` on qubit `i` of an `n`-qubit register.
pub fn pauli_x(n: usize, i: usize) -> DMatrix<f64> {
    let dim = 1 << n;
    DMatrix::from_fn(dim, dim, |r, c| if r == c ^ (1 << i) { 1.0 } else { 0.0 })
}
