use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum DriveKind {
    Continuous,
    /// `n_pulses` square pulses of width `t_w`, the k-th occupying
    /// `[(k−1) t_p + τ, k t_p]` with `t_p = t_w + τ`.
    SquareTrain { t_w: f64, tau: f64, n_pulses: usize },
}

/// Real pump envelope `|Ω(t)|` as seen in the rotating frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveSchedule {
    pub amp: f64,
    pub kind: DriveKind,
}

impl DriveSchedule {
    pub fn continuous(amp: f64) -> Self {
        Self { amp, kind: DriveKind::Continuous }
    }

    pub fn square_train(amp: f64, t_w: f64, tau: f64, n_pulses: usize) -> Self {
        Self { amp, kind: DriveKind::SquareTrain { t_w, tau, n_pulses } }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amp.is_finite() && self.amp >= 0.0) {
            return Err(Error::InvalidSchedule(format!("amplitude must be non-negative, got {}", self.amp)));
        }
        if let DriveKind::SquareTrain { t_w, tau, n_pulses } = self.kind {
            if !(t_w.is_finite() && t_w > 0.0) {
                return Err(Error::InvalidSchedule(format!("pulse width must be positive, got {t_w}")));
            }
            if !(tau.is_finite() && tau >= 0.0) {
                return Err(Error::InvalidSchedule(format!("pulse interval must be non-negative, got {tau}")));
            }
            if n_pulses == 0 {
                return Err(Error::InvalidSchedule("at least one pulse is required".into()));
            }
        }
        Ok(())
    }

    /// Pulse period `t_p = t_w + τ`; `None` for a continuous drive.
    pub fn period(&self) -> Option<f64> {
        match self.kind {
            DriveKind::Continuous => None,
            DriveKind::SquareTrain { t_w, tau, .. } => Some(t_w + tau),
        }
    }

    /// Closed on-windows of a pulse train, in order.
    pub fn windows(&self) -> Vec<(f64, f64)> {
        match self.kind {
            DriveKind::Continuous => Vec::new(),
            DriveKind::SquareTrain { t_w, tau, n_pulses } => {
                let tp = t_w + tau;
                (1..=n_pulses).map(|k| ((k - 1) as f64 * tp + tau, k as f64 * tp)).collect()
            }
        }
    }

    /// Sorted, de-duplicated times at which the envelope may jump.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.windows().into_iter().flat_map(|(s, e)| [s, e]).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// End of the last pulse (`0` for a continuous drive).
    pub fn last_edge(&self) -> f64 {
        self.windows().last().map_or(0.0, |w| w.1)
    }

    pub fn amplitude(&self, t: f64) -> f64 {
        match self.kind {
            DriveKind::Continuous => self.amp,
            DriveKind::SquareTrain { .. } => {
                if self.windows().iter().any(|&(s, e)| s <= t && t <= e) {
                    self.amp
                } else {
                    0.0
                }
            }
        }
    }

    /// Amplitude held over `[t0, t1]`, a span that never straddles a
    /// boundary. Evaluated at the midpoint so closed window edges are moot.
    pub fn segment_amplitude(&self, t0: f64, t1: f64) -> f64 {
        self.amplitude(0.5 * (t0 + t1))
    }
}

/// `Ω(t)` for schedule `s`.
pub fn drive_amplitude(s: &DriveSchedule, t: f64) -> f64 {
    s.amplitude(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ns;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-18
    }

    #[test]
    fn three_pulse_windows() {
        let s = DriveSchedule::square_train(1.0, ns(50.0), ns(30.0), 3);
        let w = s.windows();
        let want = [(30.0, 80.0), (110.0, 160.0), (190.0, 240.0)];
        assert_eq!(w.len(), 3);
        for ((s0, e0), (s1, e1)) in w.iter().zip(want) {
            assert!(close(*s0, ns(s1)) && close(*e0, ns(e1)));
        }
        assert_eq!(s.amplitude(ns(20.0)), 0.0);
        assert_eq!(s.amplitude(ns(30.0)), 1.0);
        assert_eq!(s.amplitude(ns(80.0)), 1.0);
        assert_eq!(s.amplitude(ns(95.0)), 0.0);
        assert_eq!(s.amplitude(ns(150.0)), 1.0);
        assert_eq!(s.amplitude(ns(240.0)), 1.0);
        assert_eq!(s.amplitude(ns(241.0)), 0.0);
    }

    #[test]
    fn zero_interval_is_continuous_until_last_edge() {
        let s = DriveSchedule::square_train(2.0, ns(50.0), 0.0, 3);
        for k in 0..=150 {
            assert_eq!(drive_amplitude(&s, ns(k as f64)), 2.0);
        }
        assert_eq!(drive_amplitude(&s, ns(150.5)), 0.0);
        assert!(close(s.last_edge(), ns(150.0)));
    }

    #[test]
    fn continuous_is_always_on() {
        let s = DriveSchedule::continuous(3.0);
        assert_eq!(s.amplitude(0.0), 3.0);
        assert_eq!(s.amplitude(1.0), 3.0);
        assert!(s.boundaries().is_empty());
    }

    #[test]
    fn validation() {
        assert!(DriveSchedule::square_train(1.0, 0.0, 0.0, 1).validate().is_err());
        assert!(DriveSchedule::square_train(1.0, 1.0, -1.0, 1).validate().is_err());
        assert!(DriveSchedule::square_train(1.0, 1.0, 0.0, 0).validate().is_err());
        assert!(DriveSchedule::continuous(-1.0).validate().is_err());
    }
}
