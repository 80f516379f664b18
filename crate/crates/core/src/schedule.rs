//! Annealing schedules.
//!
//! `Aqa` is plain linear interpolation. `Lstf` delays every interpolation to
//! start at `s_x`, holds the target qubit's transverse field at `c_x` until
//! then (ramping to `c_1` afterwards), and lets the target's longitudinal
//! field ramp over the whole anneal so that it changes sign at `s_x`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Default location of the engineered crossing.
pub const DEFAULT_S_X: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "lowercase")]
pub enum SchedulePlan {
    Aqa,
    Lstf { target_k: usize, s_x: f64, c_x: f64, c_1: f64 },
}

impl SchedulePlan {
    /// LSTF plan with the target transverse field fully suppressed.
    pub fn lstf(target_k: usize, s_x: f64) -> Result<Self> {
        Self::lstf_with(target_k, s_x, 0.0, 0.0)
    }

    pub fn lstf_with(target_k: usize, s_x: f64, c_x: f64, c_1: f64) -> Result<Self> {
        let plan = SchedulePlan::Lstf { target_k, s_x, c_x, c_1 };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if let SchedulePlan::Lstf { s_x, c_x, c_1, .. } = *self {
            if !(s_x > 0.0 && s_x < 1.0) {
                return domain(format!("s_x must lie in (0, 1), got {s_x}"));
            }
            for (name, c) in [("c_x", c_x), ("c_1", c_1)] {
                if !(0.0..=1.0).contains(&c) {
                    return domain(format!("{name} must lie in [0, 1], got {c}"));
                }
            }
        }
        Ok(())
    }

    /// Checks the plan against a problem size.
    pub fn validate_for(&self, n_qubits: usize) -> Result<()> {
        self.validate()?;
        if let Some(k) = self.target() {
            if k >= n_qubits {
                return domain(format!("target qubit {k} outside [0, {n_qubits})"));
            }
        }
        Ok(())
    }

    pub fn target(&self) -> Option<usize> {
        match *self {
            SchedulePlan::Aqa => None,
            SchedulePlan::Lstf { target_k, .. } => Some(target_k),
        }
    }

    pub fn s_x(&self) -> Option<f64> {
        match *self {
            SchedulePlan::Aqa => None,
            SchedulePlan::Lstf { s_x, .. } => Some(s_x),
        }
    }

    /// Driver schedule `a_i(s)`.
    pub fn driver_coeff(&self, i: usize, s: f64) -> Result<f64> {
        check_s(s)?;
        Ok(self.driver_unchecked(i, s))
    }

    /// Problem schedule `b_i(s)` for the longitudinal field of qubit `i`.
    pub fn problem_coeff(&self, i: usize, s: f64) -> Result<f64> {
        check_s(s)?;
        Ok(self.problem_unchecked(i, s))
    }

    /// Problem schedule `b_ij(s)` for couplers.
    pub fn coupler_coeff(&self, s: f64) -> Result<f64> {
        check_s(s)?;
        Ok(self.coupler_unchecked(s))
    }

    /// Points where the schedule has a kink, including the endpoints.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            SchedulePlan::Aqa => vec![0.0, 1.0],
            SchedulePlan::Lstf { s_x, .. } => vec![0.0, s_x, 1.0],
        }
    }

    pub(crate) fn driver_unchecked(&self, i: usize, s: f64) -> f64 {
        match *self {
            SchedulePlan::Aqa => 1.0 - s,
            SchedulePlan::Lstf { target_k, s_x, c_x, c_1 } => {
                let ramp = delayed_ramp(s, s_x);
                if i == target_k {
                    c_x + (c_1 - c_x) * ramp
                } else {
                    1.0 - ramp
                }
            }
        }
    }

    pub(crate) fn problem_unchecked(&self, i: usize, s: f64) -> f64 {
        match *self {
            SchedulePlan::Aqa => s,
            SchedulePlan::Lstf { target_k, s_x, .. } => {
                if i == target_k {
                    (s - s_x) / (1.0 - s_x)
                } else {
                    delayed_ramp(s, s_x)
                }
            }
        }
    }

    pub(crate) fn coupler_unchecked(&self, s: f64) -> f64 {
        match *self {
            SchedulePlan::Aqa => s,
            SchedulePlan::Lstf { s_x, .. } => delayed_ramp(s, s_x),
        }
    }
}

fn delayed_ramp(s: f64, s_x: f64) -> f64 {
    if s < s_x {
        0.0
    } else {
        (s - s_x) / (1.0 - s_x)
    }
}

fn check_s(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        domain(format!("annealing parameter s = {s} outside [0, 1]"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn driver_examples() {
        let plan = SchedulePlan::lstf(0, 0.2).unwrap();
        assert_abs_diff_eq!(plan.driver_coeff(1, 0.5).unwrap(), 0.625, epsilon = 1e-15);
        for s in [0.0, 0.1, 0.2, 0.7, 1.0] {
            assert_eq!(plan.driver_coeff(0, s).unwrap(), 0.0);
        }
        assert_abs_diff_eq!(SchedulePlan::Aqa.driver_coeff(3, 0.25).unwrap(), 0.75);
    }

    #[test]
    fn problem_examples() {
        let plan = SchedulePlan::lstf(0, 0.2).unwrap();
        assert_abs_diff_eq!(plan.problem_coeff(0, 0.0).unwrap(), -0.25, epsilon = 1e-15);
        assert_eq!(plan.problem_coeff(0, 0.2).unwrap(), 0.0);
        assert_eq!(plan.problem_coeff(1, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn coupler_examples() {
        let plan = SchedulePlan::lstf(0, 0.2).unwrap();
        assert_eq!(plan.coupler_coeff(1.0).unwrap(), 1.0);
        assert_eq!(plan.coupler_coeff(0.2).unwrap(), 0.0);
        assert_eq!(SchedulePlan::Aqa.coupler_coeff(0.6).unwrap(), 0.6);
    }

    #[test]
    fn breakpoint_lists() {
        assert_eq!(SchedulePlan::lstf(0, 0.2).unwrap().breakpoints(), vec![0.0, 0.2, 1.0]);
        assert_eq!(SchedulePlan::Aqa.breakpoints(), vec![0.0, 1.0]);
        assert_eq!(SchedulePlan::lstf(2, 0.5).unwrap().breakpoints(), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(SchedulePlan::Aqa.driver_coeff(0, 1.1).is_err());
        assert!(SchedulePlan::Aqa.problem_coeff(0, -0.1).is_err());
        assert!(SchedulePlan::lstf(0, 0.0).is_err());
        assert!(SchedulePlan::lstf(0, 1.0).is_err());
        assert!(SchedulePlan::lstf_with(0, 0.3, 1.5, 0.0).is_err());
        assert!(SchedulePlan::lstf(3, 0.3).unwrap().validate_for(3).is_err());
    }

    #[test]
    fn serde_shape() {
        let plan = SchedulePlan::lstf_with(2, 0.2, 0.1, 0.0).unwrap();
        let json = serde_json::to_string(&plan).unwrap();
        assert_eq!(json, r#"{"variant":"lstf","target_k":2,"s_x":0.2,"c_x":0.1,"c_1":0.0}"#);
        let back: SchedulePlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
    }

    fn any_plan() -> impl Strategy<Value = SchedulePlan> {
        prop_oneof![
            Just(SchedulePlan::Aqa),
            (0usize..4, 0.01f64..0.99, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(|(k, s_x, c_x, c_1)| {
                SchedulePlan::Lstf { target_k: k, s_x, c_x, c_1 }
            }),
        ]
    }

    proptest! {
        #[test]
        fn endpoint_values(plan in any_plan(), i in 0usize..4) {
            let a1 = plan.driver_coeff(i, 1.0).unwrap();
            match plan {
                SchedulePlan::Lstf { target_k, c_1, .. } if target_k == i => {
                    prop_assert!((a1 - c_1).abs() < 1e-12)
                }
                _ => prop_assert!(a1.abs() < 1e-12),
            }
            prop_assert!((plan.problem_coeff(i, 1.0).unwrap() - 1.0).abs() < 1e-12);
            prop_assert!((plan.coupler_coeff(1.0).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn continuous_everywhere(plan in any_plan(), i in 0usize..4, s in 0.0f64..1.0) {
            // Piecewise linear with slope at most 1/(1 - s_x), so a tiny step
            // moves each schedule by a bounded amount.
            let h = 1e-9;
            let s2 = (s + h).min(1.0);
            let bound = 1e-9 * 200.0;
            prop_assert!((plan.driver_coeff(i, s2).unwrap() - plan.driver_coeff(i, s).unwrap()).abs() < bound);
            prop_assert!((plan.problem_coeff(i, s2).unwrap() - plan.problem_coeff(i, s).unwrap()).abs() < bound);
            prop_assert!((plan.coupler_coeff(s2).unwrap() - plan.coupler_coeff(s).unwrap()).abs() < bound);
        }

        #[test]
        fn linear_between_breakpoints(plan in any_plan(), i in 0usize..4, u in 0.0f64..1.0, v in 0.0f64..1.0) {
            let bp = plan.breakpoints();
            for w in bp.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let a = lo + (hi - lo) * u.min(v);
                let b = lo + (hi - lo) * u.max(v);
                let m = 0.5 * (a + b);
                for f in [
                    |p: &SchedulePlan, i, s| p.driver_coeff(i, s).unwrap(),
                    |p: &SchedulePlan, i, s| p.problem_coeff(i, s).unwrap(),
                ] {
                    let mid = f(&plan, i, m);
                    let avg = 0.5 * (f(&plan, i, a) + f(&plan, i, b));
                    prop_assert!((mid - avg).abs() < 1e-9);
                }
            }
        }
    }
}
