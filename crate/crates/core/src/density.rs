//! Small helpers for state vectors and density matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type DensityMatrix = DMatrix<Complex64>;

pub fn norm(psi: &[Complex64]) -> f64 {
    psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
}

pub fn outer(psi: &[Complex64]) -> DensityMatrix {
    let d = psi.len();
    DMatrix::from_fn(d, d, |r, c| psi[r] * psi[c].conj())
}

pub fn from_real(psi: &[f64]) -> Vec<Complex64> {
    psi.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

pub fn trace(rho: &DensityMatrix) -> Complex64 {
    rho.diagonal().iter().sum()
}

pub fn purity(rho: &DensityMatrix) -> f64 {
    // tr(ρ²) = Σ |ρ_ij|² for Hermitian ρ
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Largest entry of `|ρ - ρ†|`.
pub fn hermiticity_error(rho: &DensityMatrix) -> f64 {
    (rho - rho.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn hermitian_part(rho: &DensityMatrix) -> DensityMatrix {
    (rho + rho.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigenvalues(rho: &DensityMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = hermitian_part(rho).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn min_eigenvalue(rho: &DensityMatrix) -> f64 {
    eigenvalues(rho).first().copied().unwrap_or(0.0)
}

/// `½ ‖ρ - σ‖₁`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
    0.5 * eigenvalues(&(rho - sigma)).iter().map(|x| x.abs()).sum::<f64>()
}

/// Projects onto the positive cone: negative eigenvalues are set to zero and
/// the trace restored. Returns the most negative eigenvalue removed.
pub fn clip_negative(rho: &mut DensityMatrix) -> f64 {
    let eig = hermitian_part(rho).symmetric_eigen();
    let worst = eig.eigenvalues.iter().copied().fold(0.0f64, f64::min);
    if worst >= 0.0 {
        return 0.0;
    }
    let kept: Vec<f64> = eig.eigenvalues.iter().map(|&x| x.max(0.0)).collect();
    let total: f64 = kept.iter().sum();
    let d = rho.nrows();
    let mut out = DMatrix::zeros(d, d);
    for (i, &lam) in kept.iter().enumerate() {
        if lam == 0.0 {
            continue;
        }
        let v = eig.eigenvectors.column(i);
        out += v * v.adjoint() * Complex64::new(lam / total, 0.0);
    }
    *rho = out;
    worst
}

/// `⟨v|ρ|v⟩` for a real vector.
pub fn expectation_real(rho: &DensityMatrix, v: &[f64]) -> f64 {
    let d = v.len();
    let mut acc = Complex64::default();
    for r in 0..d {
        if v[r] == 0.0 {
            continue;
        }
        for c in 0..d {
            acc += rho[(r, c)] * (v[r] * v[c]);
        }
    }
    acc.re
}
