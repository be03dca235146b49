//! Cosine-ramp drive envelope.
//!
//! The basic pulse has two symmetric raised-cosine ramps of duration `tau_r`
//! around a flat middle part at amplitude `eps_m`:
//!
//! ```text
//! eps(t) = eps_m (1 - cos(pi t / tau_r)) / 2          0 <= t <= tau_r
//!        = eps_m                                      tau_r <= t <= tau_p - tau_r
//!        = eps_m (1 - cos(pi (tau_p - t)/tau_r)) / 2  tau_p - tau_r <= t <= tau_p
//! ```
//!
//! An echo pulse is two such shapes back to back with the sign of the second
//! half flipped, `eps(t) = -eps(t - tau_p/2)`, each half using ramps of
//! `tau_r/2` so that `tau_r` remains the total front-ramp (and rear-ramp)
//! duration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One contiguous stretch of the envelope carrying its own cosine-ramp
/// shape; `sign` flips the drive for the echo sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    pub sign: f64,
    /// Ramp duration within this segment.
    pub ramp: f64,
}

impl Segment {
    fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Normalized shape in [0, 1] at local time `x` from the segment start.
    fn shape(&self, x: f64) -> f64 {
        let d = self.duration();
        if x <= 0.0 || x >= d {
            0.0
        } else if x < self.ramp {
            0.5 * (1.0 - (std::f64::consts::PI * x / self.ramp).cos())
        } else if x <= d - self.ramp {
            1.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * (d - x) / self.ramp).cos())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    /// Mid-pulse drive amplitude, MHz.
    pub eps_m: f64,
    /// Total duration, ns.
    pub tau_p: f64,
    /// Total front-ramp duration, ns.
    pub tau_r: f64,
    pub segments: Vec<Segment>,
    /// Time steps used per individual cosine ramp during propagation.
    pub steps_per_ramp: usize,
}

impl Pulse {
    /// Single-segment pulse: ramp up, flat, ramp down.
    pub fn basic(eps_m: f64, tau_p: f64, tau_r: f64, steps_per_ramp: usize) -> Result<Self> {
        if !(tau_r > 0.0 && tau_r <= 0.5 * tau_p) {
            return Err(Error::InvalidPulse(format!(
                "need 0 < tau_r <= tau_p/2, got tau_r = {tau_r}, tau_p = {tau_p}"
            )));
        }
        if steps_per_ramp == 0 {
            return Err(Error::InvalidPulse("steps_per_ramp must be positive".into()));
        }
        Ok(Pulse {
            eps_m,
            tau_p,
            tau_r,
            segments: vec![Segment {
                start: 0.0,
                end: tau_p,
                sign: 1.0,
                ramp: tau_r,
            }],
            steps_per_ramp,
        })
    }

    /// Same shape at the same fractions via `tau_r = frac * tau_p`.
    pub fn basic_frac(eps_m: f64, tau_p: f64, tau_r_frac: f64, steps_per_ramp: usize) -> Result<Self> {
        Self::basic(eps_m, tau_p, tau_r_frac * tau_p, steps_per_ramp)
    }

    /// Echo pulse: two half-duration shapes with the second sign-flipped.
    /// Each half uses ramps of `tau_r/2`.
    pub fn echo(eps_m: f64, tau_p: f64, tau_r: f64, steps_per_ramp: usize) -> Result<Self> {
        if !(tau_r > 0.0 && tau_r <= 0.5 * tau_p) {
            return Err(Error::InvalidPulse(format!(
                "need 0 < tau_r <= tau_p/2, got tau_r = {tau_r}, tau_p = {tau_p}"
            )));
        }
        if steps_per_ramp == 0 {
            return Err(Error::InvalidPulse("steps_per_ramp must be positive".into()));
        }
        let half = 0.5 * tau_p;
        Ok(Pulse {
            eps_m,
            tau_p,
            tau_r,
            segments: vec![
                Segment {
                    start: 0.0,
                    end: half,
                    sign: 1.0,
                    ramp: 0.5 * tau_r,
                },
                Segment {
                    start: half,
                    end: tau_p,
                    sign: -1.0,
                    ramp: 0.5 * tau_r,
                },
            ],
            steps_per_ramp,
        })
    }

    pub fn echo_frac(eps_m: f64, tau_p: f64, tau_r_frac: f64, steps_per_ramp: usize) -> Result<Self> {
        Self::echo(eps_m, tau_p, tau_r_frac * tau_p, steps_per_ramp)
    }

    /// Drive amplitude at time `t in [0, tau_p]`, MHz (signed).
    pub fn envelope(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.tau_p).contains(&t) {
            return Err(Error::InvalidPulse(format!(
                "t = {t} outside [0, {}]",
                self.tau_p
            )));
        }
        for seg in &self.segments {
            if t <= seg.end || std::ptr::eq(seg, self.segments.last().unwrap()) {
                return Ok(seg.sign * self.eps_m * seg.shape(t - seg.start));
            }
        }
        Ok(0.0)
    }

    /// Exact integral of the signed envelope over the pulse, MHz*ns.
    ///
    /// Each cosine ramp integrates to `eps_m * ramp / 2`, so one segment of
    /// duration `d` contributes `sign * eps_m * (d - ramp)`.
    pub fn integral(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| s.sign * self.eps_m * (s.duration() - s.ramp))
            .sum()
    }

    /// Exact integral of the squared envelope, MHz^2*ns.
    ///
    /// A raised-cosine ramp squared integrates to `3/8 eps_m^2 ramp`, so a
    /// segment contributes `eps_m^2 (d - 2 ramp + 3/4 ramp)`.
    pub fn sq_integral(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| self.eps_m * self.eps_m * (s.duration() - 1.25 * s.ramp))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn basic_envelope_values() {
        let p = Pulse::basic(40.0, 100.0, 30.0, 600).unwrap();
        assert_eq!(p.envelope(0.0).unwrap(), 0.0);
        assert_eq!(p.envelope(100.0).unwrap(), 0.0);
        assert_eq!(p.envelope(50.0).unwrap(), 40.0);
        // cosine midpoint: half amplitude at tau_r/2
        assert_relative_eq!(p.envelope(15.0).unwrap(), 20.0, max_relative = 1e-14);
        assert!(p.envelope(-1.0).is_err());
        assert!(p.envelope(100.1).is_err());
    }

    #[test]
    fn envelope_is_continuous_and_bounded() {
        let p = Pulse::basic(40.0, 100.0, 30.0, 600).unwrap();
        let mut prev = 0.0;
        for k in 0..=10_000 {
            let t = 100.0 * k as f64 / 10_000.0;
            let v = p.envelope(t).unwrap();
            assert!(v.abs() <= 40.0 + 1e-12);
            assert!((v - prev).abs() < 0.05, "kink at t = {t}");
            prev = v;
        }
    }

    #[test]
    fn shape_factor_0p7_for_30_percent_ramps() {
        let p = Pulse::basic(40.0, 100.0, 30.0, 600).unwrap();
        assert_relative_eq!(p.integral(), 0.7 * 40.0 * 100.0, max_relative = 1e-12);
        // quadrature cross-check
        let n = 200_000;
        let dt = 100.0 / n as f64;
        let quad: f64 = (0..n)
            .map(|k| p.envelope((k as f64 + 0.5) * dt).unwrap() * dt)
            .sum();
        assert_relative_eq!(quad, p.integral(), max_relative = 1e-9);
    }

    #[test]
    fn sq_integral_matches_25_over_40() {
        let p = Pulse::basic(40.0, 100.0, 30.0, 600).unwrap();
        assert_relative_eq!(
            p.sq_integral(),
            (25.0 / 40.0) * 40.0 * 40.0 * 100.0,
            max_relative = 1e-9
        );
    }

    #[test]
    fn echo_second_half_is_sign_flipped() {
        let p = Pulse::echo(40.0, 120.0, 36.0, 600).unwrap();
        for k in 0..=600 {
            let t = 60.0 * k as f64 / 600.0;
            let a = p.envelope(t).unwrap();
            let b = p.envelope(t + 60.0).unwrap();
            assert_relative_eq!(b, -a, epsilon = 1e-12);
        }
        assert_relative_eq!(p.integral(), 0.0, epsilon = 1e-12);
    }
}
