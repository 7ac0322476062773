use std::f64::consts::PI;

use rand::Rng;

use super::{expect_len, EnvError, Observation};

pub const DT: f64 = 0.2;
pub const LINK_LENGTH_1: f64 = 1.0;
pub const LINK_MASS_1: f64 = 1.0;
pub const LINK_MASS_2: f64 = 1.0;
pub const LINK_COM_POS_1: f64 = 0.5;
pub const LINK_COM_POS_2: f64 = 0.5;
pub const LINK_MOI: f64 = 1.0;
pub const GRAVITY: f64 = 9.8;
pub const MAX_VEL_1: f64 = 4.0 * PI;
pub const MAX_VEL_2: f64 = 9.0 * PI;

/// Two-link underactuated pendulum; torque acts on the second joint.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AcrobotState {
    pub theta1: f64,
    pub theta2: f64,
    pub theta1_dot: f64,
    pub theta2_dot: f64,
}

impl AcrobotState {
    pub(super) fn sample<R: Rng>(rng: &mut R) -> Self {
        let mut draw = || rng.gen_range(-0.1..0.1);
        AcrobotState {
            theta1: draw(),
            theta2: draw(),
            theta1_dot: draw(),
            theta2_dot: draw(),
        }
    }

    pub(super) fn from_slice(s: &[f64]) -> Result<Self, EnvError> {
        expect_len(s, 4)?;
        Ok(AcrobotState {
            theta1: s[0],
            theta2: s[1],
            theta1_dot: s[2],
            theta2_dot: s[3],
        })
    }

    pub fn to_vec(self) -> Vec<f64> {
        vec![self.theta1, self.theta2, self.theta1_dot, self.theta2_dot]
    }

    pub fn observation(&self) -> Observation {
        Observation(vec![
            self.theta1.cos(),
            self.theta1.sin(),
            self.theta2.cos(),
            self.theta2.sin(),
            self.theta1_dot,
            self.theta2_dot,
        ])
    }

    /// Tip height above the pivot exceeds one link length.
    pub fn goal_reached(&self) -> bool {
        -self.theta1.cos() - (self.theta2 + self.theta1).cos() > 1.0
    }

    /// One RK4 step of length `DT` with the torque held constant, then angle
    /// wrapping and velocity clamping.
    pub fn advance(&mut self, torque: f64) {
        let s = [self.theta1, self.theta2, self.theta1_dot, self.theta2_dot];
        let k1 = derivatives(s, torque);
        let k2 = derivatives(offset(s, k1, DT / 2.0), torque);
        let k3 = derivatives(offset(s, k2, DT / 2.0), torque);
        let k4 = derivatives(offset(s, k3, DT), torque);
        let mut next = [0.0; 4];
        for i in 0..4 {
            next[i] = s[i] + DT / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.theta1 = wrap(next[0]);
        self.theta2 = wrap(next[1]);
        self.theta1_dot = next[2].clamp(-MAX_VEL_1, MAX_VEL_1);
        self.theta2_dot = next[3].clamp(-MAX_VEL_2, MAX_VEL_2);
    }
}

fn offset(s: [f64; 4], k: [f64; 4], h: f64) -> [f64; 4] {
    [s[0] + h * k[0], s[1] + h * k[1], s[2] + h * k[2], s[3] + h * k[3]]
}

fn derivatives(s: [f64; 4], torque: f64) -> [f64; 4] {
    let (m1, m2) = (LINK_MASS_1, LINK_MASS_2);
    let l1 = LINK_LENGTH_1;
    let (lc1, lc2) = (LINK_COM_POS_1, LINK_COM_POS_2);
    let (i1, i2) = (LINK_MOI, LINK_MOI);
    let g = GRAVITY;
    let [theta1, theta2, dtheta1, dtheta2] = s;

    let d1 = m1 * lc1 * lc1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * theta2.cos()) + i1 + i2;
    let d2 = m2 * (lc2 * lc2 + l1 * lc2 * theta2.cos()) + i2;
    let phi2 = m2 * lc2 * g * (theta1 + theta2 - PI / 2.0).cos();
    let phi1 = -m2 * l1 * lc2 * dtheta2 * dtheta2 * theta2.sin()
        - 2.0 * m2 * l1 * lc2 * dtheta2 * dtheta1 * theta2.sin()
        + (m1 * lc1 + m2 * l1) * g * (theta1 - PI / 2.0).cos()
        + phi2;
    let ddtheta2 = (torque + d2 / d1 * phi1 - m2 * l1 * lc2 * dtheta1 * dtheta1 * theta2.sin() - phi2)
        / (m2 * lc2 * lc2 + i2 - d2 * d2 / d1);
    let ddtheta1 = -(d2 * ddtheta2 + phi1) / d1;
    [dtheta1, dtheta2, ddtheta1, ddtheta2]
}

/// Wraps an angle into [-pi, pi).
fn wrap(mut x: f64) -> f64 {
    let diff = 2.0 * PI;
    while x > PI {
        x -= diff;
    }
    while x < -PI {
        x += diff;
    }
    x
}
