//! Ising problem instances and exhaustive classical oracles.
//!
//! Basis convention: qubit `i` is bit `i` of a basis index (qubit 0 is the
//! least significant bit). `|↓⟩ = |0⟩` and `σ^z|↓⟩ = +|↓⟩`, so a cleared bit
//! contributes spin `z = +1` and a set bit contributes `z = -1`.
//!
//! All fields are linear frequencies in GHz.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest instance the exhaustive enumeration will accept.
pub const ENUMERATION_CAP: usize = 24;

/// Spin value of qubit `i` in basis state `index`.
#[inline]
pub fn spin(index: usize, i: usize) -> f64 {
    if index >> i & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A transverse-field Ising problem on a graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingProblem {
    pub n_qubits: usize,
    pub edges: Vec<(usize, usize)>,
    pub h_z: Vec<f64>,
    pub j_zz: Vec<f64>,
    pub h_x: Vec<f64>,
    pub energy_scale: f64,
}

impl IsingProblem {
    pub fn new(
        n_qubits: usize,
        edges: Vec<(usize, usize)>,
        h_z: Vec<f64>,
        j_zz: Vec<f64>,
        h_x: Vec<f64>,
        energy_scale: f64,
    ) -> Result<Self> {
        let p = IsingProblem { n_qubits, edges, h_z, j_zz, h_x, energy_scale };
        p.validate()?;
        Ok(p)
    }

    /// Checks every structural invariant. Deserialized instances should be
    /// passed through this before use.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits;
        if n == 0 {
            return domain("n_qubits must be positive");
        }
        if self.h_z.len() != n || self.h_x.len() != n {
            return domain(format!(
                "field arrays must have length {n} (h_z: {}, h_x: {})",
                self.h_z.len(),
                self.h_x.len()
            ));
        }
        if self.j_zz.len() != self.edges.len() {
            return domain(format!(
                "{} couplers for {} edges",
                self.j_zz.len(),
                self.edges.len()
            ));
        }
        if !(self.energy_scale > 0.0 && self.energy_scale.is_finite()) {
            return domain(format!("energy scale must be positive, got {}", self.energy_scale));
        }
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in &self.edges {
            if u >= n || v >= n {
                return domain(format!("edge ({u}, {v}) references a vertex outside [0, {n})"));
            }
            if u == v {
                return domain(format!("self-loop on vertex {u}"));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return domain(format!("duplicate edge ({u}, {v})"));
            }
        }
        for (i, &h) in self.h_x.iter().enumerate() {
            if !(h >= 0.0 && h.is_finite()) {
                return domain(format!("transverse field h_x[{i}] = {h} must be non-negative"));
            }
        }
        if self.h_z.iter().chain(&self.j_zz).any(|v| !v.is_finite()) {
            return domain("fields and couplers must be finite");
        }
        Ok(())
    }

    /// Soft checks that do not block a run. Currently: the largest
    /// longitudinal field should have magnitude `R`.
    pub fn warnings(&self) -> Vec<String> {
        let max = self.h_z.iter().fold(0.0f64, |m, h| m.max(h.abs()));
        let mut out = Vec::new();
        if max > 0.0 && (max - self.energy_scale).abs() > 1e-9 * self.energy_scale {
            out.push(format!(
                "largest |h_z| is {max}, not the energy scale {}",
                self.energy_scale
            ));
        }
        out
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    /// Classical energy of one basis state.
    pub fn energy_of(&self, index: usize) -> f64 {
        let fields: f64 = self.h_z.iter().enumerate().map(|(i, h)| h * spin(index, i)).sum();
        let couplings: f64 = self
            .edges
            .iter()
            .zip(&self.j_zz)
            .map(|(&(u, v), j)| j * spin(index, u) * spin(index, v))
            .sum();
        fields + couplings
    }

    /// Diagonal of the final problem Hamiltonian in the computational basis.
    pub fn diagonal_energies(&self) -> Result<Vec<f64>> {
        self.check_enumerable()?;
        Ok((0..self.dim()).map(|j| self.energy_of(j)).collect())
    }

    fn check_enumerable(&self) -> Result<()> {
        if self.n_qubits > ENUMERATION_CAP {
            return Err(Error::Size {
                what: "classical enumeration",
                n: self.n_qubits,
                cap: ENUMERATION_CAP,
            });
        }
        Ok(())
    }

    /// Relabels vertex `i` as `perm[i]`, moving fields with their vertices.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return domain("not a permutation of the vertex set");
        }
        let mut h_z = vec![0.0; n];
        let mut h_x = vec![0.0; n];
        for i in 0..n {
            h_z[perm[i]] = self.h_z[i];
            h_x[perm[i]] = self.h_x[i];
        }
        let edges = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        IsingProblem::new(n, edges, h_z, self.j_zz.clone(), h_x, self.energy_scale)
    }

    /// Copy with every field, coupler and the energy scale multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let mul = |v: &[f64]| v.iter().map(|x| x * factor).collect::<Vec<_>>();
        IsingProblem::new(
            self.n_qubits,
            self.edges.clone(),
            mul(&self.h_z),
            mul(&self.j_zz),
            mul(&self.h_x),
            self.energy_scale * factor,
        )
    }
}

/// A computational basis state with its classical energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinConfiguration {
    /// Basis index; bit `i` set means qubit `i` is `↑`.
    pub bits: usize,
    pub n_qubits: usize,
    /// GHz.
    pub energy: f64,
}

impl SpinConfiguration {
    pub fn spins(&self) -> Vec<f64> {
        (0..self.n_qubits).map(|i| spin(self.bits, i)).collect()
    }
}

impl fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.n_qubits {
            f.write_str(if self.bits >> i & 1 == 0 { "↓" } else { "↑" })?;
        }
        Ok(())
    }
}

/// Sign of the coupler in the two-qubit frustrated cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplerSign {
    #[default]
    Positive,
    Negative,
}

impl CouplerSign {
    pub fn value(self) -> f64 {
        match self {
            CouplerSign::Positive => 1.0,
            CouplerSign::Negative => -1.0,
        }
    }
}

/// Parameters of the two-qubit frustrated cluster. Qubit 1 (index 0) carries a
/// field of magnitude `R` whose sign follows the coupler, which leaves qubit 2
/// (index 1) with an unfavourable local field `R·f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoQubitFrustrated {
    pub frustration: f64,
    pub energy_scale: f64,
    pub coupler_sign: CouplerSign,
    pub h_x2: f64,
}

impl TwoQubitFrustrated {
    pub fn new(frustration: f64, energy_scale: f64) -> Self {
        TwoQubitFrustrated {
            frustration,
            energy_scale,
            coupler_sign: CouplerSign::Positive,
            h_x2: energy_scale,
        }
    }

    pub fn with_h_x2(mut self, h_x2: f64) -> Self {
        self.h_x2 = h_x2;
        self
    }

    pub fn build(&self) -> Result<IsingProblem> {
        build_two_qubit(self.frustration, self.energy_scale, self.coupler_sign, self.h_x2)
    }
}

/// Builds the two-qubit frustrated cluster.
pub fn build_two_qubit(f: f64, r: f64, sign: CouplerSign, h_x2: f64) -> Result<IsingProblem> {
    if !(f > 0.0 && f < 1.0) {
        return domain(format!("frustration must lie in (0, 1), got {f}"));
    }
    if !(r > 0.0) {
        return domain(format!("energy scale must be positive, got {r}"));
    }
    if !(h_x2 >= 0.0) {
        return domain(format!("h_x2 must be non-negative, got {h_x2}"));
    }
    let s = sign.value();
    IsingProblem::new(2, vec![(0, 1)], vec![s * r, r * f], vec![s * r], vec![r, h_x2], r)
}

/// All `2^n` configurations sorted by energy, ties broken by bit pattern.
pub fn classical_energies(problem: &IsingProblem) -> Result<Vec<SpinConfiguration>> {
    let energies = problem.diagonal_energies()?;
    let mut configs: Vec<SpinConfiguration> = energies
        .into_iter()
        .enumerate()
        .map(|(bits, energy)| SpinConfiguration { bits, n_qubits: problem.n_qubits, energy })
        .collect();
    configs.sort_by(|a, b| a.energy.total_cmp(&b.energy).then(a.bits.cmp(&b.bits)));
    Ok(configs)
}

/// Lowest classical energy.
pub fn ground_energy(problem: &IsingProblem) -> Result<f64> {
    Ok(problem
        .diagonal_energies()?
        .into_iter()
        .fold(f64::INFINITY, f64::min))
}

/// Basis indices whose classical energy lies within `1e-9·R` of the minimum.
pub fn ground_manifold(problem: &IsingProblem) -> Result<Vec<usize>> {
    let energies = problem.diagonal_energies()?;
    let e0 = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * problem.energy_scale;
    Ok(energies
        .iter()
        .enumerate()
        .filter(|(_, &e)| e - e0 <= tol)
        .map(|(j, _)| j)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn two_qubit_case_split() {
        let p = build_two_qubit(0.8, 1.0, CouplerSign::Positive, 1.0).unwrap();
        assert_eq!(p.h_z, vec![1.0, 0.8]);
        assert_eq!(p.j_zz, vec![1.0]);
        assert_eq!(p.h_x, vec![1.0, 1.0]);

        let p = build_two_qubit(0.8, 1.0, CouplerSign::Negative, 1.0).unwrap();
        assert_eq!(p.h_z, vec![-1.0, 0.8]);
        assert_eq!(p.j_zz, vec![-1.0]);

        let p = build_two_qubit(0.5, 2.0, CouplerSign::Positive, 0.02).unwrap();
        assert_eq!(p.h_z, vec![2.0, 1.0]);
        assert_eq!(p.h_x, vec![2.0, 0.02]);
    }

    #[test]
    fn two_qubit_rejects_bad_parameters() {
        assert!(build_two_qubit(0.0, 1.0, CouplerSign::Positive, 1.0).is_err());
        assert!(build_two_qubit(1.0, 1.0, CouplerSign::Positive, 1.0).is_err());
        assert!(build_two_qubit(0.5, -1.0, CouplerSign::Positive, 1.0).is_err());
        assert!(build_two_qubit(0.5, 1.0, CouplerSign::Positive, -0.1).is_err());
    }

    #[test]
    fn two_qubit_classical_levels() {
        let p = build_two_qubit(0.8, 1.0, CouplerSign::Positive, 1.0).unwrap();
        let levels = classical_energies(&p).unwrap();
        assert_eq!(levels.len(), 4);
        assert_abs_diff_eq!(levels[0].energy, -1.2, epsilon = 1e-12);
        assert_abs_diff_eq!(levels[1].energy, -0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(levels[1].energy - levels[0].energy, 0.4, epsilon = 1e-12);
        // qubit 1 up, qubit 2 down
        assert_eq!(levels[0].bits, 0b01);
        assert_eq!(levels[0].to_string(), "↑↓");
        assert_abs_diff_eq!(ground_energy(&p).unwrap(), -1.2, epsilon = 1e-12);
    }

    #[test]
    fn final_gap_closes_as_frustration_grows() {
        for &f in &[0.1, 0.5, 0.9, 0.999] {
            let p = build_two_qubit(f, 1.0, CouplerSign::Positive, 1.0).unwrap();
            let l = classical_energies(&p).unwrap();
            assert_abs_diff_eq!(l[1].energy - l[0].energy, 2.0 * (1.0 - f), epsilon = 1e-12);
        }
    }

    #[test]
    fn empty_problem_has_zero_ground_energy() {
        let p = IsingProblem::new(3, vec![], vec![0.0; 3], vec![], vec![1.0; 3], 1.0).unwrap();
        assert_eq!(ground_energy(&p).unwrap(), 0.0);
        assert_eq!(ground_manifold(&p).unwrap().len(), 8);
        assert!(p.warnings().is_empty());
    }

    #[test]
    fn validation_errors() {
        let bad_edge = IsingProblem::new(2, vec![(0, 2)], vec![0.0; 2], vec![1.0], vec![1.0; 2], 1.0);
        assert!(bad_edge.is_err());
        let self_loop = IsingProblem::new(2, vec![(1, 1)], vec![0.0; 2], vec![1.0], vec![1.0; 2], 1.0);
        assert!(self_loop.is_err());
        let dup = IsingProblem::new(
            2,
            vec![(0, 1), (1, 0)],
            vec![0.0; 2],
            vec![1.0, 1.0],
            vec![1.0; 2],
            1.0,
        );
        assert!(dup.is_err());
        let neg_x = IsingProblem::new(2, vec![], vec![0.0; 2], vec![], vec![1.0, -1.0], 1.0);
        assert!(neg_x.is_err());
    }

    #[test]
    fn normalization_is_a_warning() {
        let p = IsingProblem::new(2, vec![], vec![0.5, 0.2], vec![], vec![1.0; 2], 1.0).unwrap();
        assert_eq!(p.warnings().len(), 1);
    }

    #[test]
    fn enumeration_cap() {
        let n = ENUMERATION_CAP + 1;
        let p = IsingProblem::new(n, vec![], vec![0.0; n], vec![], vec![0.0; n], 1.0).unwrap();
        assert!(matches!(classical_energies(&p), Err(Error::Size { .. })));
    }
}
