use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{expect_len, EnvError, Observation};

pub const GRAVITY: f64 = 9.8;
pub const MASS_CART: f64 = 1.0;
pub const MASS_POLE: f64 = 0.1;
pub const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
/// Half the pole length.
pub const LENGTH: f64 = 0.5;
pub const POLE_MASS_LENGTH: f64 = MASS_POLE * LENGTH;
pub const FORCE_MAG: f64 = 10.0;
pub const TAU: f64 = 0.02;

pub const X_THRESHOLD: f64 = 2.4;
pub const THETA_THRESHOLD: f64 = 0.2095;
pub const INVERTED_ANGLE_LIMIT: f64 = 0.2;

/// Position and angle update order within one tick.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Velocities first, then positions from the new velocities.
    #[default]
    SemiImplicitEuler,
    /// Positions from the old velocities, then velocities.
    Euler,
}

/// Cart-pole physical state. Shared by the CartPole family and the
/// continuous-force inverted pendulum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub(super) fn sample<R: Rng>(rng: &mut R, half_width: f64) -> Self {
        let mut draw = || rng.gen_range(-half_width..half_width);
        CartPoleState {
            x: draw(),
            x_dot: draw(),
            theta: draw(),
            theta_dot: draw(),
        }
    }

    pub(super) fn from_slice(s: &[f64]) -> Result<Self, EnvError> {
        expect_len(s, 4)?;
        Ok(CartPoleState {
            x: s[0],
            x_dot: s[1],
            theta: s[2],
            theta_dot: s[3],
        })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.x, self.x_dot, self.theta, self.theta_dot]
    }

    pub fn observation(&self) -> Observation {
        Observation(self.to_vec())
    }

    /// Inverted-pendulum ordering: position, angle, velocity, angular velocity.
    pub fn inverted_pendulum_observation(&self) -> Observation {
        Observation(vec![self.x, self.theta, self.x_dot, self.theta_dot])
    }

    /// One tick under the given horizontal force.
    pub fn advance(&mut self, force: f64, integrator: Integrator) {
        let cos_theta = self.theta.cos();
        let sin_theta = self.theta.sin();
        let temp = (force + POLE_MASS_LENGTH * self.theta_dot * self.theta_dot * sin_theta) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin_theta - cos_theta * temp)
            / (LENGTH * (4.0 / 3.0 - MASS_POLE * cos_theta * cos_theta / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos_theta / TOTAL_MASS;

        match integrator {
            Integrator::SemiImplicitEuler => {
                self.x_dot += TAU * x_acc;
                self.x += TAU * self.x_dot;
                self.theta_dot += TAU * theta_acc;
                self.theta += TAU * self.theta_dot;
            }
            Integrator::Euler => {
                self.x += TAU * self.x_dot;
                self.x_dot += TAU * x_acc;
                self.theta += TAU * self.theta_dot;
                self.theta_dot += TAU * theta_acc;
            }
        }
    }

    pub fn out_of_bounds(&self) -> bool {
        self.x < -X_THRESHOLD
            || self.x > X_THRESHOLD
            || self.theta < -THETA_THRESHOLD
            || self.theta > THETA_THRESHOLD
    }
}
