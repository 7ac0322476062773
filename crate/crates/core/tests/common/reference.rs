//! Reference dynamics written directly from the textbook equations of each
//! task, sharing no code with the crate. States use the crate's native layout
//! so a step can be checked from any state the simulator reaches.

#![allow(clippy::manual_clamp)]

use std::f64::consts::PI;

use policy_refine::env::{Integrator, TaskId};

pub struct RefStep {
    pub state: Vec<f64>,
    pub observation: Vec<f64>,
    pub reward: f64,
    pub terminated: bool,
}

/// `action` is the discrete label as a float, or the continuous value.
pub fn step(task: TaskId, state: &[f64], action: f64, integrator: Integrator) -> RefStep {
    match task {
        TaskId::CartPole | TaskId::CartPoleStar1 | TaskId::CartPoleStar2 => {
            let right = if task == TaskId::CartPole {
                action == 1.0
            } else {
                action == 2.0
            };
            let next = cart(state, if right { 10.0 } else { -10.0 }, integrator);
            let failed = next[0].abs() > 2.4 || next[2].abs() > 0.2095;
            RefStep {
                observation: observe(task, &next),
                state: next,
                reward: 1.0,
                terminated: failed,
            }
        }
        TaskId::InvertedPendulum => {
            let next = cart(state, action.max(-3.0).min(3.0), integrator);
            let upright = next[2].abs() <= 0.2;
            RefStep {
                observation: observe(task, &next),
                state: next,
                reward: if upright { 1.0 } else { 0.0 },
                terminated: !upright,
            }
        }
        TaskId::Acrobot => {
            let next = acrobot(state, action - 1.0);
            let height = -next[0].cos() - (next[0] + next[1]).cos();
            let goal = height > 1.0;
            RefStep {
                observation: observe(task, &next),
                state: next,
                reward: if goal { 0.0 } else { -1.0 },
                terminated: goal,
            }
        }
        TaskId::Pendulum => {
            let u = action.max(-2.0).min(2.0);
            let (th, w) = (state[0], state[1]);
            let mut wrapped = th % (2.0 * PI);
            if wrapped >= PI {
                wrapped -= 2.0 * PI;
            } else if wrapped < -PI {
                wrapped += 2.0 * PI;
            }
            let reward = -(wrapped.powi(2) + 0.1 * w.powi(2) + 0.001 * u.powi(2));
            // m = l = 1, g = 10, dt = 0.05
            let w_next = (w + (15.0 * th.sin() + 3.0 * u) * 0.05).max(-8.0).min(8.0);
            let next = vec![th + 0.05 * w_next, w_next];
            RefStep {
                observation: observe(task, &next),
                state: next,
                reward,
                terminated: false,
            }
        }
        TaskId::MountainCarDiscrete | TaskId::MountainCarContinuous => {
            let (p, v) = (state[0], state[1]);
            let discrete = task == TaskId::MountainCarDiscrete;
            let f = if discrete {
                action
            } else {
                action.max(-1.0).min(1.0)
            };
            let accel = if discrete { (f - 1.0) * 0.001 } else { f * 0.0015 };
            let v = (v + accel - 0.0025 * (3.0 * p).cos()).max(-0.07).min(0.07);
            let p = (p + v).max(-1.2).min(0.6);
            let v = if p <= -1.2 && v < 0.0 { 0.0 } else { v };
            let goal = p >= if discrete { 0.5 } else { 0.45 };
            let reward = if discrete {
                -1.0
            } else {
                -0.1 * f * f + if goal { 100.0 } else { 0.0 }
            };
            let next = vec![p, v];
            RefStep {
                observation: observe(task, &next),
                state: next,
                reward,
                terminated: goal,
            }
        }
    }
}

pub fn observe(task: TaskId, s: &[f64]) -> Vec<f64> {
    match task {
        TaskId::CartPole | TaskId::CartPoleStar1 => s.to_vec(),
        TaskId::CartPoleStar2 => s
            .iter()
            .zip([4.8, 5.0, 0.418, 5.0])
            .map(|(&v, b): (&f64, f64)| (v.max(-b).min(b) / b * 50.0).round() + 0.0)
            .collect(),
        TaskId::InvertedPendulum => vec![s[0], s[2], s[1], s[3]],
        TaskId::Acrobot => vec![s[0].cos(), s[0].sin(), s[1].cos(), s[1].sin(), s[2], s[3]],
        TaskId::Pendulum => vec![s[0].cos(), s[0].sin(), s[1]],
        TaskId::MountainCarDiscrete | TaskId::MountainCarContinuous => s.to_vec(),
    }
}

fn cart(s: &[f64], force: f64, integrator: Integrator) -> Vec<f64> {
    let (x, v, th, w) = (s[0], s[1], s[2], s[3]);
    let (mc, mp, half, g, dt) = (1.0, 0.1, 0.5, 9.8, 0.02);
    let total = mc + mp;
    let (sin, cos) = th.sin_cos();
    let a = (force + mp * half * w * w * sin) / total;
    let alpha = (g * sin - cos * a) / (half * (4.0 / 3.0 - mp * cos * cos / total));
    let acc = a - mp * half * alpha * cos / total;
    match integrator {
        Integrator::SemiImplicitEuler => {
            let (v2, w2) = (v + dt * acc, w + dt * alpha);
            vec![x + dt * v2, v2, th + dt * w2, w2]
        }
        Integrator::Euler => vec![x + dt * v, v + dt * acc, th + dt * w, w + dt * alpha],
    }
}

/// Two-link acrobot, equations of motion in the Sutton and Barto form,
/// integrated with classical RK4 over 0.2 s.
fn acrobot(s: &[f64], torque: f64) -> Vec<f64> {
    let f = |y: [f64; 4]| -> [f64; 4] {
        let (t1, t2, w1, w2) = (y[0], y[1], y[2], y[3]);
        // m1 = m2 = l1 = 1, lc1 = lc2 = 0.5, I1 = I2 = 1, g = 9.8
        let d1 = 0.25 + (1.0 + 0.25 + t2.cos()) + 2.0;
        let d2 = (0.25 + 0.5 * t2.cos()) + 1.0;
        let phi2 = 0.5 * 9.8 * (t1 + t2 - PI / 2.0).cos();
        let phi1 = -0.5 * w2 * w2 * t2.sin() - w2 * w1 * t2.sin() + 1.5 * 9.8 * (t1 - PI / 2.0).cos() + phi2;
        let a2 = (torque + d2 / d1 * phi1 - 0.5 * w1 * w1 * t2.sin() - phi2) / (1.25 - d2 * d2 / d1);
        let a1 = -(d2 * a2 + phi1) / d1;
        [w1, w2, a1, a2]
    };
    let y0 = [s[0], s[1], s[2], s[3]];
    let add = |y: [f64; 4], k: [f64; 4], h: f64| std::array::from_fn::<f64, 4, _>(|i| y[i] + h * k[i]);
    let h = 0.2;
    let k1 = f(y0);
    let k2 = f(add(y0, k1, h / 2.0));
    let k3 = f(add(y0, k2, h / 2.0));
    let k4 = f(add(y0, k3, h));
    let y: [f64; 4] = std::array::from_fn(|i| y0[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    let wrap = |a: f64| (a + PI).rem_euclid(2.0 * PI) - PI;
    vec![
        wrap(y[0]),
        wrap(y[1]),
        y[2].max(-4.0 * PI).min(4.0 * PI),
        y[3].max(-9.0 * PI).min(9.0 * PI),
    ]
}
