use rand::Rng;

use super::{expect_len, EnvError, Observation};

pub const MIN_POSITION: f64 = -1.2;
pub const MAX_POSITION: f64 = 0.6;
pub const MAX_SPEED: f64 = 0.07;
pub const DISCRETE_GOAL: f64 = 0.5;
pub const CONTINUOUS_GOAL: f64 = 0.45;
pub const FORCE: f64 = 0.001;
pub const POWER: f64 = 0.0015;
pub const GRAVITY: f64 = 0.0025;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MountainCarState {
    pub position: f64,
    pub velocity: f64,
}

impl MountainCarState {
    pub(super) fn sample<R: Rng>(rng: &mut R) -> Self {
        MountainCarState {
            position: rng.gen_range(-0.6..-0.4),
            velocity: 0.0,
        }
    }

    pub(super) fn from_slice(s: &[f64]) -> Result<Self, EnvError> {
        expect_len(s, 2)?;
        Ok(MountainCarState {
            position: s[0],
            velocity: s[1],
        })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.position, self.velocity]
    }

    pub fn observation(&self) -> Observation {
        Observation(self.to_vec())
    }

    /// Label 0 pushes left, 1 coasts, 2 pushes right.
    pub fn advance_discrete(&mut self, label: i64) {
        let push = (label - 1) as f64 * FORCE;
        self.velocity += push + (3.0 * self.position).cos() * (-GRAVITY);
        self.integrate();
    }

    pub fn advance_continuous(&mut self, force: f64) {
        self.velocity += force * POWER - GRAVITY * (3.0 * self.position).cos();
        self.integrate();
    }

    fn integrate(&mut self) {
        self.velocity = self.velocity.clamp(-MAX_SPEED, MAX_SPEED);
        self.position += self.velocity;
        self.position = self.position.clamp(MIN_POSITION, MAX_POSITION);
        if self.position == MIN_POSITION && self.velocity < 0.0 {
            self.velocity = 0.0;
        }
    }
}
