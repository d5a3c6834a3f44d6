//! Sampling schedules that place the communication instants `t_k`.
//!
//! `t_0 = 0` and `t_k = T_1 + … + T_k`. The Basel and power schedules pack
//! infinitely many instants before the settling time `T_c`; the truncated
//! schedule switches to a fixed period after `k_eps` Basel steps so the
//! instants never accumulate.

use thiserror::Error;

use crate::scalar::{CompensatedSum, Scalar};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("settling time must be positive and finite, got {0}")]
    SettlingTime(f64),
    #[error("truncated schedule needs k_eps >= 1 and eps > 0")]
    Truncation,
    #[error("power schedule ratio must lie in (0, 1), got {0}")]
    Ratio(f64),
    #[error("horizon must be non-negative, got {0}")]
    Horizon(f64),
    #[error("zeno-unbounded: infinitely many sampling instants before horizon {horizon} (settling time {settling_time})")]
    ZenoUnbounded { horizon: f64, settling_time: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingSchedule<T> {
    /// `T_k = 6 T_c / (π k)²`.
    Basel { settling_time: T },
    /// Basel intervals for `k ≤ k_eps`, then the constant period `eps`.
    Truncated {
        settling_time: T,
        k_eps: usize,
        eps: T,
    },
    /// `T_k = T_c (1 - b) b^(k-1)`.
    Power { settling_time: T, ratio: T },
}

fn check_settling<T: Scalar>(tc: T) -> Result<(), ScheduleError> {
    if tc > T::zero() && tc.is_finite() {
        Ok(())
    } else {
        Err(ScheduleError::SettlingTime(tc.to_f64().unwrap_or(f64::NAN)))
    }
}

impl<T: Scalar> SamplingSchedule<T> {
    pub fn basel(settling_time: T) -> Result<Self, ScheduleError> {
        check_settling(settling_time)?;
        Ok(Self::Basel { settling_time })
    }

    pub fn truncated(settling_time: T, k_eps: usize, eps: T) -> Result<Self, ScheduleError> {
        check_settling(settling_time)?;
        if k_eps == 0 || !(eps > T::zero()) || !eps.is_finite() {
            return Err(ScheduleError::Truncation);
        }
        Ok(Self::Truncated {
            settling_time,
            k_eps,
            eps,
        })
    }

    pub fn power(settling_time: T, ratio: T) -> Result<Self, ScheduleError> {
        check_settling(settling_time)?;
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(ScheduleError::Ratio(ratio.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self::Power {
            settling_time,
            ratio,
        })
    }

    pub fn settling_time(&self) -> T {
        match *self {
            Self::Basel { settling_time }
            | Self::Truncated { settling_time, .. }
            | Self::Power { settling_time, .. } => settling_time,
        }
    }

    /// Whether the instants accumulate at `T_c` (Basel and power kinds).
    pub fn is_zeno(&self) -> bool {
        !matches!(self, Self::Truncated { .. })
    }

    fn basel_interval(settling_time: T, k: usize) -> T {
        let kf = T::from_count(k);
        T::lit(6.0) * settling_time / (T::PI() * T::PI() * kf * kf)
    }

    /// `T_k` for `k ≥ 1`. Panics on `k = 0`.
    pub fn interval(&self, k: usize) -> T {
        assert!(k >= 1, "sampling intervals are indexed from 1");
        match *self {
            Self::Basel { settling_time } => Self::basel_interval(settling_time, k),
            Self::Truncated {
                settling_time,
                k_eps,
                eps,
            } => {
                if k <= k_eps {
                    Self::basel_interval(settling_time, k)
                } else {
                    eps
                }
            }
            Self::Power {
                settling_time,
                ratio,
            } => {
                let exp = i32::try_from(k - 1).unwrap_or(i32::MAX);
                settling_time * (T::one() - ratio) * ratio.powi(exp)
            }
        }
    }

    /// `t_k`, accumulated with a compensated sum. `O(k)` for the series kinds;
    /// prefer [`SamplingSchedule::instants`] when walking the sequence.
    pub fn instant(&self, k: usize) -> T {
        match *self {
            Self::Truncated { k_eps, eps, .. } if k > k_eps => {
                self.instant(k_eps) + T::from_count(k - k_eps) * eps
            }
            _ => (1..=k)
                .map(|l| self.interval(l))
                .collect::<CompensatedSum<T>>()
                .value(),
        }
    }

    /// Iterator over `(k, t_k, T_k)` starting at `(0, 0, 0)`.
    pub fn instants(&self) -> Instants<T> {
        Instants {
            schedule: *self,
            k: 0,
            acc: CompensatedSum::new(),
            t_switch: None,
        }
    }

    /// Number of instants `t_k` (including `t_0 = 0`) strictly before `horizon`.
    pub fn steps_before(&self, horizon: T) -> Result<usize, ScheduleError> {
        if !(horizon >= T::zero()) || !horizon.is_finite() {
            return Err(ScheduleError::Horizon(horizon.to_f64().unwrap_or(f64::NAN)));
        }
        if self.is_zeno() && horizon >= self.settling_time() {
            return Err(ScheduleError::ZenoUnbounded {
                horizon: horizon.to_f64().unwrap_or(f64::NAN),
                settling_time: self.settling_time().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(self.instants().take_while(|s| s.time < horizon).count())
    }
}

/// One sampling instant: `time = t_k`, `interval = T_k` (zero for `k = 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleInstant<T> {
    pub k: usize,
    pub time: T,
    pub interval: T,
}

#[derive(Debug, Clone)]
pub struct Instants<T> {
    schedule: SamplingSchedule<T>,
    k: usize,
    acc: CompensatedSum<T>,
    t_switch: Option<T>,
}

impl<T: Scalar> Iterator for Instants<T> {
    type Item = SampleInstant<T>;

    fn next(&mut self) -> Option<Self::Item> {
        let k = self.k;
        self.k += 1;
        if k == 0 {
            return Some(SampleInstant {
                k,
                time: T::zero(),
                interval: T::zero(),
            });
        }
        let interval = self.schedule.interval(k);
        let time = match self.schedule {
            SamplingSchedule::Truncated { k_eps, eps, .. } if k > k_eps => {
                let base = *self.t_switch.get_or_insert_with(|| self.acc.value());
                base + T::from_count(k - k_eps) * eps
            }
            _ => {
                self.acc.add(interval);
                self.acc.value()
            }
        };
        Some(SampleInstant { k, time, interval })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn interval_examples() {
        let basel = SamplingSchedule::basel(2.0).unwrap();
        assert!((basel.interval(1) - 12.0 / (PI * PI)).abs() < 1e-15);
        assert!((basel.interval(1) - 1.21585).abs() < 1e-5);
        let power = SamplingSchedule::power(1.0, 0.5).unwrap();
        assert_eq!(power.interval(3), 0.125);
        let trunc = SamplingSchedule::truncated(2.0, 80, 0.01).unwrap();
        assert_eq!(trunc.interval(81), 0.01);
        assert_eq!(trunc.interval(80), basel.interval(80));
    }

    #[test]
    fn instant_examples() {
        let power = SamplingSchedule::power(1.0, 0.5).unwrap();
        assert_eq!(power.instant(0), 0.0);
        assert_eq!(power.instant(4), 15.0 / 16.0);
        let basel = SamplingSchedule::basel(2.0).unwrap();
        assert_eq!(basel.instant(0), 0.0);
        let t = basel.instant(1_000_000);
        assert!((2.0 - 2e-5 * 2.0..2.0).contains(&t), "t = {t}");
    }

    #[test]
    fn iterator_matches_instant() {
        let s = SamplingSchedule::truncated(2.0_f64, 5, 0.1).unwrap();
        for inst in s.instants().take(12) {
            assert!((inst.time - s.instant(inst.k)).abs() < 1e-15);
            if inst.k > 0 {
                assert_eq!(inst.interval, s.interval(inst.k));
            }
        }
    }

    #[test]
    fn steps_before_examples() {
        let basel = SamplingSchedule::basel(2.0).unwrap();
        let brute = {
            let mut t = 0.0;
            let mut count = 1;
            for k in 1.. {
                t += 12.0 / (PI * PI * (k * k) as f64);
                if t >= 1.0 {
                    break;
                }
                count += 1;
            }
            count
        };
        assert_eq!(basel.steps_before(1.0).unwrap(), brute);
        assert!(matches!(
            basel.steps_before(2.0),
            Err(ScheduleError::ZenoUnbounded { .. })
        ));
        let trunc = SamplingSchedule::truncated(2.0_f64, 80, 0.01).unwrap();
        let t80 = trunc.instant(80);
        let expected = 80 + ((5.0 - t80) / 0.01).ceil() as usize;
        assert_eq!(trunc.steps_before(5.0).unwrap(), expected);
        assert_eq!(expected, 382);
    }

    #[test]
    fn constructor_errors() {
        assert!(SamplingSchedule::basel(0.0).is_err());
        assert!(SamplingSchedule::truncated(1.0, 0, 0.1).is_err());
        assert!(SamplingSchedule::truncated(1.0, 3, 0.0).is_err());
        assert!(SamplingSchedule::power(1.0, 1.0).is_err());
        assert!(SamplingSchedule::power(1.0, 0.0).is_err());
    }
}
