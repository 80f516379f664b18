//! Adaptive Dormand–Prince 5(4) integrator for complex-valued linear systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Integrator tolerances.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rel: 1e-9, abs: 1e-9 }
    }
}

impl Tolerances {
    pub fn halved(self) -> Self {
        Tolerances { rel: self.rel / 2.0, abs: self.abs / 2.0 }
    }
}

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

impl<F: FnMut(f64, &[Complex64], &mut [Complex64])> OdeSystem for F {
    fn rhs(&mut self, t: f64, y: &[Complex64], dy: &mut [Complex64]) {
        self(t, y, dy)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, serde::Serialize)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const MAX_STEPS: usize = 50_000_000;

// Dormand–Prince coefficients
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b_hat
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrates from `stops[0]` through each later stop in turn, never stepping
/// across one. `observe` is called with the state at every stop (including
/// the first).
pub fn integrate<S: OdeSystem>(
    sys: &mut S,
    y: &mut [Complex64],
    stops: &[f64],
    tol: Tolerances,
    observe: impl FnMut(f64, &[Complex64]),
) -> Result<StepStats> {
    run(sys, y, stops, tol, false, observe)
}

/// As [`integrate`] for a linear, norm-conserving system: after every
/// accepted step the state is projected back onto the unit sphere.
pub fn integrate_normalized<S: OdeSystem>(
    sys: &mut S,
    y: &mut [Complex64],
    stops: &[f64],
    tol: Tolerances,
    observe: impl FnMut(f64, &[Complex64]),
) -> Result<StepStats> {
    run(sys, y, stops, tol, true, observe)
}

fn run<S: OdeSystem>(
    sys: &mut S,
    y: &mut [Complex64],
    stops: &[f64],
    tol: Tolerances,
    normalize: bool,
    mut observe: impl FnMut(f64, &[Complex64]),
) -> Result<StepStats> {
    let n = y.len();
    let mut stats = StepStats::default();
    let mut k: Vec<Vec<Complex64>> = vec![vec![Complex64::default(); n]; 7];
    let mut tmp = vec![Complex64::default(); n];
    let mut y_new = vec![Complex64::default(); n];
    let Some(&t_start) = stops.first() else {
        return Ok(stats);
    };
    observe(t_start, y);
    let mut h_guess: Option<f64> = None;

    for w in stops.windows(2) {
        let (mut t, t_end) = (w[0], w[1]);
        if t_end <= t {
            observe(t_end, y);
            continue;
        }
        let span = t_end - t;
        sys.rhs(t, y, &mut k[0]);
        stats.evaluations += 1;
        let mut h = h_guess.unwrap_or_else(|| initial_step(y, &k[0], span, tol)).min(span);
        let h_min = 1e-14 * span.max(t.abs());

        while t < t_end {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(Error::Integrator {
                    t,
                    step: h,
                    steps: stats.accepted,
                    reason: "step budget exhausted".into(),
                });
            }
            let last = t + h >= t_end;
            if last {
                h = t_end - t;
            }
            stage(&mut tmp, y, h, &k, &[A21]);
            sys.rhs(t + C2 * h, &tmp, &mut k[1]);
            stage(&mut tmp, y, h, &k, &[A31, A32]);
            sys.rhs(t + C3 * h, &tmp, &mut k[2]);
            stage(&mut tmp, y, h, &k, &[A41, A42, A43]);
            sys.rhs(t + C4 * h, &tmp, &mut k[3]);
            stage(&mut tmp, y, h, &k, &[A51, A52, A53, A54]);
            sys.rhs(t + C5 * h, &tmp, &mut k[4]);
            stage(&mut tmp, y, h, &k, &[A61, A62, A63, A64, A65]);
            let t_next = if last { t_end } else { t + h };
            sys.rhs(t_next, &tmp, &mut k[5]);
            for i in 0..n {
                y_new[i] = y[i] + (k[0][i] * B1 + k[2][i] * B3 + k[3][i] * B4 + k[4][i] * B5 + k[5][i] * B6) * h;
            }
            sys.rhs(t_next, &y_new, &mut k[6]);
            stats.evaluations += 6;

            let mut err2 = 0.0;
            for i in 0..n {
                let e = (k[0][i] * E1 + k[2][i] * E3 + k[3][i] * E4 + k[4][i] * E5 + k[5][i] * E6 + k[6][i] * E7) * h;
                let sc = tol.abs + tol.rel * y[i].norm().max(y_new[i].norm());
                err2 += (e.norm() / sc).powi(2);
            }
            let err = (err2 / n as f64).sqrt();

            if err <= 1.0 {
                t = t_next;
                y.copy_from_slice(&y_new);
                k.swap(0, 6);
                if normalize {
                    // linear system: rescaling y rescales f(y) too
                    let inv = 1.0 / y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
                    y.iter_mut().chain(k[0].iter_mut()).for_each(|a| *a *= inv);
                }
                stats.accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h *= fac;
                    h_guess = Some(h);
                }
            } else {
                stats.rejected += 1;
                let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                h *= fac;
                if h < h_min {
                    return Err(Error::Integrator {
                        t,
                        step: h,
                        steps: stats.accepted,
                        reason: format!("step size underflow (error ratio {err:.3e})"),
                    });
                }
            }
        }
        observe(t_end, y);
    }
    Ok(stats)
}

#[inline]
fn stage(out: &mut [Complex64], y: &[Complex64], h: f64, k: &[Vec<Complex64>], a: &[f64]) {
    for i in 0..y.len() {
        let mut acc = Complex64::default();
        for (j, &aj) in a.iter().enumerate() {
            acc += k[j][i] * aj;
        }
        out[i] = y[i] + acc * h;
    }
}

fn initial_step(y: &[Complex64], f0: &[Complex64], span: f64, tol: Tolerances) -> f64 {
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(f0) {
        let sc = tol.abs + tol.rel * yi.norm();
        d0 += (yi.norm() / sc).powi(2);
        d1 += (fi.norm() / sc).powi(2);
    }
    let n = y.len() as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h.min(span).max(1e-12 * span)
}
