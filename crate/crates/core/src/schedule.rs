//! Relative learning-rate schedules and training horizons.
//!
//! A relative schedule is a shape `f: [0, 1] → [0, 1]` evaluated at
//! `t / t_hor`. It multiplies whatever step size the algorithm computes
//! internally. Horizons are fractions of a workload's step budget.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleShape {
    Constant,
    WarmupCosine,
}

impl ScheduleShape {
    pub fn as_str(self) -> &'static str {
        match self {
            ScheduleShape::Constant => "constant",
            ScheduleShape::WarmupCosine => "warmup_cosine",
        }
    }
}

impl fmt::Display for ScheduleShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScheduleShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(ScheduleShape::Constant),
            "warmup_cosine" => Ok(ScheduleShape::WarmupCosine),
            other => Err(Error::InvalidConfig(format!("unknown schedule shape `{other}`"))),
        }
    }
}

/// Schedule as specified in a trial: shape, warmup fraction of the horizon,
/// and the horizon as a fraction `α` of the workload's maximum steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub shape: ScheduleShape,
    pub warmup_fraction: f64,
    pub horizon_fraction: f64,
}

impl ScheduleSpec {
    pub fn constant() -> Self {
        Self { shape: ScheduleShape::Constant, warmup_fraction: 0.0, horizon_fraction: 1.0 }
    }

    pub fn warmup_cosine(warmup_fraction: f64, horizon_fraction: f64) -> Self {
        Self { shape: ScheduleShape::WarmupCosine, warmup_fraction, horizon_fraction }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.horizon_fraction > 0.0 && self.horizon_fraction <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon fraction {} must lie in (0, 1]",
                self.horizon_fraction
            )));
        }
        if self.shape == ScheduleShape::WarmupCosine
            && !(self.warmup_fraction > 0.0 && self.warmup_fraction < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "warmup fraction {} must lie in (0, 1)",
                self.warmup_fraction
            )));
        }
        Ok(())
    }

    /// Binds the spec to a workload budget.
    pub fn resolve(&self, t_max: u64) -> RelativeSchedule {
        let horizon_steps = horizon(HorizonSpec { alpha: self.horizon_fraction, t_max });
        RelativeSchedule { shape: self.shape, warmup_fraction: self.warmup_fraction, horizon_steps }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeSchedule {
    pub shape: ScheduleShape,
    pub warmup_fraction: f64,
    pub horizon_steps: u64,
}

impl RelativeSchedule {
    /// `f(t / t_hor)`, clamped to 0 beyond the horizon.
    pub fn multiplier(&self, t: u64) -> f64 {
        match self.shape {
            ScheduleShape::Constant => 1.0,
            ScheduleShape::WarmupCosine => {
                let u = t as f64 / self.horizon_steps as f64;
                let uw = self.warmup_fraction;
                if u <= uw {
                    u / uw
                } else if u <= 1.0 {
                    0.5 * (1.0 + (PI * (u - uw) / (1.0 - uw)).cos())
                } else {
                    0.0
                }
            }
        }
    }

    pub fn in_warmup(&self, t: u64) -> bool {
        match self.shape {
            ScheduleShape::Constant => false,
            ScheduleShape::WarmupCosine => {
                (t as f64 / self.horizon_steps as f64) < self.warmup_fraction
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HorizonSpec {
    pub alpha: f64,
    pub t_max: u64,
}

/// `round_half_up(α·t_max)`, at least 1.
pub fn horizon(spec: HorizonSpec) -> u64 {
    let raw = spec.alpha * spec.t_max as f64;
    ((raw + 0.5).floor() as u64).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sched(uw: f64, t_hor: u64) -> RelativeSchedule {
        RelativeSchedule { shape: ScheduleShape::WarmupCosine, warmup_fraction: uw, horizon_steps: t_hor }
    }

    #[test]
    fn warmup_cosine_landmarks() {
        let s = sched(0.1, 1000);
        assert_eq!(s.multiplier(100), 1.0);
        assert!((s.multiplier(550) - 0.5).abs() < 1e-15);
        assert!(s.multiplier(1000).abs() < 1e-15);
        assert_eq!(s.multiplier(1200), 0.0);
        assert_eq!(s.multiplier(0), 0.0);
        assert!(s.in_warmup(99));
        assert!(!s.in_warmup(100));
    }

    #[test]
    fn horizons() {
        assert_eq!(horizon(HorizonSpec { alpha: 0.5, t_max: 31998 }), 15999);
        assert_eq!(horizon(HorizonSpec { alpha: 1.0, t_max: 100 }), 100);
        assert_eq!(horizon(HorizonSpec { alpha: 0.66, t_max: 100 }), 66);
        assert_eq!(horizon(HorizonSpec { alpha: 0.001, t_max: 10 }), 1);
    }

    #[test]
    fn validation() {
        assert!(ScheduleSpec::warmup_cosine(0.05, 0.5).validate().is_ok());
        assert!(ScheduleSpec::warmup_cosine(0.0, 0.5).validate().is_err());
        assert!(ScheduleSpec::warmup_cosine(0.05, 1.5).validate().is_err());
        assert!(ScheduleSpec::constant().validate().is_ok());
        assert_eq!("warmup_cosine".parse::<ScheduleShape>().unwrap(), ScheduleShape::WarmupCosine);
        assert!("cyclic".parse::<ScheduleShape>().is_err());
    }

    proptest! {
        #[test]
        fn multiplier_in_unit_interval(uw in 0.01f64..0.5, t_hor in 1u64..5000, t in 0u64..10000) {
            let m = sched(uw, t_hor).multiplier(t);
            prop_assert!((0.0..=1.0).contains(&m));
        }

        #[test]
        fn constant_shape_ignores_horizon(t_hor in 1u64..5000, t in 0u64..10000) {
            let s = RelativeSchedule { shape: ScheduleShape::Constant, warmup_fraction: 0.0, horizon_steps: t_hor };
            prop_assert_eq!(s.multiplier(t), 1.0);
        }

        #[test]
        fn monotone_segments(uw in 0.01f64..0.5, t_hor in 10u64..3000) {
            let s = sched(uw, t_hor);
            let mut prev = s.multiplier(0);
            let mut peaked = false;
            for t in 1..=t_hor {
                let m = s.multiplier(t);
                let u = t as f64 / t_hor as f64;
                if u <= uw {
                    prop_assert!(m >= prev);
                } else {
                    if peaked {
                        prop_assert!(m <= prev + 1e-15);
                    }
                    peaked = true;
                }
                // Continuity: adjacent steps differ by at most the steepest slope.
                let max_slope = (1.0 / uw).max(PI / (2.0 * (1.0 - uw)));
                prop_assert!((m - prev).abs() <= max_slope / t_hor as f64 + 1e-12);
                prev = m;
            }
        }
    }
}
