use std::f64::consts::PI;

use rand::Rng;

use super::{expect_len, EnvError, Observation};

pub const MAX_SPEED: f64 = 8.0;
pub const MAX_TORQUE: f64 = 2.0;
pub const DT: f64 = 0.05;
pub const GRAVITY: f64 = 10.0;
pub const MASS: f64 = 1.0;
pub const LENGTH: f64 = 1.0;

/// Torque-driven pendulum; `theta = 0` is upright.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PendulumState {
    pub theta: f64,
    pub theta_dot: f64,
}

impl PendulumState {
    pub(super) fn sample<R: Rng>(rng: &mut R) -> Self {
        PendulumState {
            theta: rng.gen_range(-PI..PI),
            theta_dot: rng.gen_range(-1.0..1.0),
        }
    }

    pub(super) fn from_slice(s: &[f64]) -> Result<Self, EnvError> {
        expect_len(s, 2)?;
        Ok(PendulumState {
            theta: s[0],
            theta_dot: s[1],
        })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.theta, self.theta_dot]
    }

    pub fn observation(&self) -> Observation {
        Observation(vec![self.theta.cos(), self.theta.sin(), self.theta_dot])
    }

    /// Applies a torque for one tick; returns the reward earned by the
    /// pre-step state and the (clamped) torque.
    pub fn advance(&mut self, torque: f64) -> f64 {
        let u = torque.clamp(-MAX_TORQUE, MAX_TORQUE);
        let th = self.theta;
        let thdot = self.theta_dot;
        let norm = angle_normalize(th);
        let cost = norm * norm + 0.1 * thdot * thdot + 0.001 * u * u;

        let new_thdot =
            thdot + (3.0 * GRAVITY / (2.0 * LENGTH) * th.sin() + 3.0 / (MASS * LENGTH * LENGTH) * u) * DT;
        let new_thdot = new_thdot.clamp(-MAX_SPEED, MAX_SPEED);
        self.theta = th + new_thdot * DT;
        self.theta_dot = new_thdot;
        -cost
    }
}

/// Maps an angle into [-pi, pi).
pub fn angle_normalize(x: f64) -> f64 {
    (x + PI).rem_euclid(2.0 * PI) - PI
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reward_never_positive() {
        let mut s = PendulumState {
            theta: 2.0,
            theta_dot: -3.0,
        };
        for i in 0..300 {
            let r = s.advance(if i % 3 == 0 { 2.5 } else { -1.0 });
            assert!(r <= 0.0);
            assert!(s.theta_dot.abs() <= MAX_SPEED);
        }
    }

    #[test]
    fn normalization_range() {
        assert!((angle_normalize(PI) + PI).abs() < 1e-15);
        assert!((angle_normalize(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(angle_normalize(0.0), 0.0);
    }
}
