//! Native, seedable simulators for the classic control tasks.
//!
//! Every task exposes the same `reset(seed)` / `step(action)` interface. All
//! randomness is drawn from a per-instance ChaCha stream keyed by the reset
//! seed, so a seed plus an action sequence fully determines a trajectory.

mod acrobot;
mod cartpole;
mod describe;
mod mountain_car;
mod pendulum;
mod star2;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use acrobot::AcrobotState;
pub use cartpole::{CartPoleState, Integrator};
pub use describe::{describe, TaskDescription};
pub use mountain_car::MountainCarState;
pub use pendulum::PendulumState;
pub use star2::{denormalize_star2, normalize_star2, STAR2_BOUNDS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("unknown task id `{0}`")]
    UnknownTask(String),
    #[error("action {action} is not valid for task {task}")]
    InvalidAction { task: TaskId, action: String },
    #[error("state vector has {got} components, expected {expected}")]
    StateShape { expected: usize, got: usize },
}

/// The control tasks the harness knows how to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TaskId {
    CartPole,
    CartPoleStar1,
    CartPoleStar2,
    InvertedPendulum,
    Acrobot,
    Pendulum,
    MountainCarDiscrete,
    MountainCarContinuous,
}

impl TaskId {
    pub const ALL: [TaskId; 8] = [
        TaskId::CartPole,
        TaskId::CartPoleStar1,
        TaskId::CartPoleStar2,
        TaskId::InvertedPendulum,
        TaskId::Acrobot,
        TaskId::Pendulum,
        TaskId::MountainCarDiscrete,
        TaskId::MountainCarContinuous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskId::CartPole => "CartPole",
            TaskId::CartPoleStar1 => "CartPoleStar1",
            TaskId::CartPoleStar2 => "CartPoleStar2",
            TaskId::InvertedPendulum => "InvertedPendulum",
            TaskId::Acrobot => "Acrobot",
            TaskId::Pendulum => "Pendulum",
            TaskId::MountainCarDiscrete => "MountainCarDiscrete",
            TaskId::MountainCarContinuous => "MountainCarContinuous",
        }
    }

    pub fn is_cartpole_family(self) -> bool {
        matches!(
            self,
            TaskId::CartPole | TaskId::CartPoleStar1 | TaskId::CartPoleStar2
        )
    }

    pub fn spec(self) -> EnvSpec {
        EnvSpec::for_task(self)
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskId {
    type Err = EnvError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        let task = match key.as_str() {
            "cartpole" | "cartpolev1" => TaskId::CartPole,
            "cartpolestar1" | "cartpole1" => TaskId::CartPoleStar1,
            "cartpolestar2" | "cartpole2" => TaskId::CartPoleStar2,
            "invertedpendulum" => TaskId::InvertedPendulum,
            "acrobot" => TaskId::Acrobot,
            "pendulum" => TaskId::Pendulum,
            "mountaincardiscrete" | "mountaincar" => TaskId::MountainCarDiscrete,
            "mountaincarcontinuous" => TaskId::MountainCarContinuous,
            _ => return Err(EnvError::UnknownTask(s.to_string())),
        };
        Ok(task)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ActionKind {
    Discrete { labels: Vec<i64> },
    Continuous { lo: f64, hi: f64 },
}

/// Static facts about a task: shapes, action encoding, horizon and the
/// variable names a policy function must declare.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub task: TaskId,
    pub obs_dim: usize,
    pub action_kind: ActionKind,
    pub max_steps: usize,
    /// Parameter names a generated policy function must use, in observation order.
    pub obs_names: Vec<&'static str>,
    /// Maximum attainable episode return, where the task defines one.
    pub r_max: Option<f64>,
    /// Whether observations are rendered as integers in prompts.
    pub integer_observations: bool,
}

impl EnvSpec {
    pub fn for_task(task: TaskId) -> Self {
        let cart_names = vec![
            "cart_position",
            "cart_velocity",
            "pole_angle",
            "pole_angular_velocity",
        ];
        match task {
            TaskId::CartPole => EnvSpec {
                task,
                obs_dim: 4,
                action_kind: ActionKind::Discrete { labels: vec![0, 1] },
                max_steps: 500,
                obs_names: cart_names,
                r_max: Some(500.0),
                integer_observations: false,
            },
            TaskId::CartPoleStar1 => EnvSpec {
                task,
                obs_dim: 4,
                action_kind: ActionKind::Discrete { labels: vec![1, 2] },
                max_steps: 500,
                obs_names: cart_names,
                r_max: Some(500.0),
                integer_observations: false,
            },
            TaskId::CartPoleStar2 => EnvSpec {
                task,
                obs_dim: 4,
                action_kind: ActionKind::Discrete { labels: vec![1, 2] },
                max_steps: 500,
                obs_names: cart_names,
                r_max: Some(500.0),
                integer_observations: true,
            },
            TaskId::InvertedPendulum => EnvSpec {
                task,
                obs_dim: 4,
                action_kind: ActionKind::Continuous { lo: -3.0, hi: 3.0 },
                max_steps: 1000,
                obs_names: vec![
                    "cart_position",
                    "pole_angle",
                    "cart_velocity",
                    "pole_angular_velocity",
                ],
                r_max: None,
                integer_observations: false,
            },
            TaskId::Acrobot => EnvSpec {
                task,
                obs_dim: 6,
                action_kind: ActionKind::Discrete {
                    labels: vec![0, 1, 2],
                },
                max_steps: 500,
                obs_names: vec![
                    "cos_theta1",
                    "sin_theta1",
                    "cos_theta2",
                    "sin_theta2",
                    "theta1_angular_velocity",
                    "theta2_angular_velocity",
                ],
                r_max: None,
                integer_observations: false,
            },
            TaskId::Pendulum => EnvSpec {
                task,
                obs_dim: 3,
                action_kind: ActionKind::Continuous { lo: -2.0, hi: 2.0 },
                max_steps: 200,
                obs_names: vec!["x", "y", "angular_velocity"],
                r_max: None,
                integer_observations: false,
            },
            TaskId::MountainCarDiscrete => EnvSpec {
                task,
                obs_dim: 2,
                action_kind: ActionKind::Discrete {
                    labels: vec![0, 1, 2],
                },
                max_steps: 200,
                obs_names: vec!["car_position", "car_velocity"],
                r_max: None,
                integer_observations: false,
            },
            TaskId::MountainCarContinuous => EnvSpec {
                task,
                obs_dim: 2,
                action_kind: ActionKind::Continuous { lo: -1.0, hi: 1.0 },
                max_steps: 1000,
                obs_names: vec!["car_position", "car_velocity"],
                r_max: None,
                integer_observations: false,
            },
        }
    }

    /// Checks an action against the declared action kind. Continuous values
    /// outside the range are accepted (the simulators clamp them).
    pub fn accepts(&self, action: &Action) -> bool {
        match (&self.action_kind, action) {
            (ActionKind::Discrete { labels }, Action::Discrete(label)) => labels.contains(label),
            (ActionKind::Continuous { .. }, Action::Continuous(v)) => v.is_finite(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Action {
    Discrete(i64),
    Continuous(f64),
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Discrete(label) => write!(f, "{label}"),
            Action::Continuous(v) => write!(f, "{v:.4}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationCause {
    None,
    BoundsExceeded,
    GoalReached,
    StepLimit,
    InvalidAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub truncated: bool,
    pub termination_cause: TerminationCause,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Per-instance switches that alter episode-ending rules.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnvOptions {
    /// Acrobot: end the episode once the cumulative reward drops below this
    /// value. Off by default.
    #[serde(default)]
    pub acrobot_reward_floor: Option<f64>,
    /// Cart-pole family and inverted pendulum integration scheme.
    #[serde(default)]
    pub cartpole_integrator: Integrator,
}

#[derive(Debug, Clone, PartialEq)]
enum Dynamics {
    Cart(CartPoleState),
    Acrobot(AcrobotState),
    Pendulum(PendulumState),
    MountainCar(MountainCarState),
}

/// One simulator instance. Single-threaded; create one per concurrent episode.
#[derive(Debug, Clone)]
pub struct Environment {
    spec: EnvSpec,
    options: EnvOptions,
    dynamics: Dynamics,
    steps: usize,
    episode_return: f64,
}

impl Environment {
    pub fn new(task: TaskId) -> Self {
        Self::with_options(task, EnvOptions::default())
    }

    pub fn with_options(task: TaskId, options: EnvOptions) -> Self {
        let dynamics = match task {
            TaskId::CartPole | TaskId::CartPoleStar1 | TaskId::CartPoleStar2 | TaskId::InvertedPendulum => {
                Dynamics::Cart(CartPoleState::default())
            }
            TaskId::Acrobot => Dynamics::Acrobot(AcrobotState::default()),
            TaskId::Pendulum => Dynamics::Pendulum(PendulumState::default()),
            TaskId::MountainCarDiscrete | TaskId::MountainCarContinuous => {
                Dynamics::MountainCar(MountainCarState::default())
            }
        };
        Environment {
            spec: EnvSpec::for_task(task),
            options,
            dynamics,
            steps: 0,
            episode_return: 0.0,
        }
    }

    pub fn task(&self) -> TaskId {
        self.spec.task
    }

    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Draws a fresh initial state from the task's start distribution.
    pub fn reset(&mut self, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.dynamics = match (&self.dynamics, self.spec.task) {
            (Dynamics::Cart(_), TaskId::InvertedPendulum) => {
                Dynamics::Cart(CartPoleState::sample(&mut rng, 0.01))
            }
            (Dynamics::Cart(_), _) => Dynamics::Cart(CartPoleState::sample(&mut rng, 0.05)),
            (Dynamics::Acrobot(_), _) => Dynamics::Acrobot(AcrobotState::sample(&mut rng)),
            (Dynamics::Pendulum(_), _) => Dynamics::Pendulum(PendulumState::sample(&mut rng)),
            (Dynamics::MountainCar(_), _) => Dynamics::MountainCar(MountainCarState::sample(&mut rng)),
        };
        self.steps = 0;
        self.episode_return = 0.0;
        self.observation()
    }

    /// Overwrites the physical state (in the task's native coordinates) and
    /// restarts the step counter.
    pub fn set_state(&mut self, state: &[f64]) -> Result<(), EnvError> {
        self.dynamics = match &self.dynamics {
            Dynamics::Cart(_) => Dynamics::Cart(CartPoleState::from_slice(state)?),
            Dynamics::Acrobot(_) => Dynamics::Acrobot(AcrobotState::from_slice(state)?),
            Dynamics::Pendulum(_) => Dynamics::Pendulum(PendulumState::from_slice(state)?),
            Dynamics::MountainCar(_) => Dynamics::MountainCar(MountainCarState::from_slice(state)?),
        };
        self.steps = 0;
        self.episode_return = 0.0;
        Ok(())
    }

    /// Native physical state (not the encoded observation).
    pub fn state(&self) -> Vec<f64> {
        match &self.dynamics {
            Dynamics::Cart(s) => s.to_vec(),
            Dynamics::Acrobot(s) => s.to_vec(),
            Dynamics::Pendulum(s) => s.to_vec(),
            Dynamics::MountainCar(s) => s.to_vec(),
        }
    }

    /// The observation the agent sees for the current state.
    pub fn observation(&self) -> Observation {
        match (&self.dynamics, self.spec.task) {
            (Dynamics::Cart(s), TaskId::CartPoleStar2) => normalize_star2(&s.observation()),
            (Dynamics::Cart(s), TaskId::InvertedPendulum) => s.inverted_pendulum_observation(),
            (Dynamics::Cart(s), _) => s.observation(),
            (Dynamics::Acrobot(s), _) => s.observation(),
            (Dynamics::Pendulum(s), _) => s.observation(),
            (Dynamics::MountainCar(s), _) => s.observation(),
        }
    }

    pub fn step(&mut self, action: &Action) -> Result<StepResult, EnvError> {
        if !self.spec.accepts(action) {
            return Err(EnvError::InvalidAction {
                task: self.spec.task,
                action: action.to_string(),
            });
        }
        let task = self.spec.task;
        let (reward, terminated, cause) = match &mut self.dynamics {
            Dynamics::Cart(s) => match (task, *action) {
                (TaskId::InvertedPendulum, Action::Continuous(force)) => {
                    let force = force.clamp(-3.0, 3.0);
                    s.advance(force, self.options.cartpole_integrator);
                    let upright = s.theta.abs() <= cartpole::INVERTED_ANGLE_LIMIT;
                    let reward = if upright { 1.0 } else { 0.0 };
                    let cause = if upright {
                        TerminationCause::None
                    } else {
                        TerminationCause::BoundsExceeded
                    };
                    (reward, !upright, cause)
                }
                (_, Action::Discrete(label)) => {
                    let push_right = match task {
                        TaskId::CartPole => label == 1,
                        _ => label == 2,
                    };
                    let force = if push_right {
                        cartpole::FORCE_MAG
                    } else {
                        -cartpole::FORCE_MAG
                    };
                    s.advance(force, self.options.cartpole_integrator);
                    let failed = s.out_of_bounds();
                    let cause = if failed {
                        TerminationCause::BoundsExceeded
                    } else {
                        TerminationCause::None
                    };
                    (1.0, failed, cause)
                }
                _ => unreachable!("action kind checked above"),
            },
            Dynamics::Acrobot(s) => {
                let Action::Discrete(label) = *action else {
                    unreachable!("action kind checked above")
                };
                s.advance((label - 1) as f64);
                if s.goal_reached() {
                    (0.0, true, TerminationCause::GoalReached)
                } else {
                    (-1.0, false, TerminationCause::None)
                }
            }
            Dynamics::Pendulum(s) => {
                let Action::Continuous(torque) = *action else {
                    unreachable!("action kind checked above")
                };
                let reward = s.advance(torque);
                (reward, false, TerminationCause::None)
            }
            Dynamics::MountainCar(s) => match *action {
                Action::Discrete(label) => {
                    s.advance_discrete(label);
                    let goal = s.position >= mountain_car::DISCRETE_GOAL;
                    let cause = if goal {
                        TerminationCause::GoalReached
                    } else {
                        TerminationCause::None
                    };
                    (-1.0, goal, cause)
                }
                Action::Continuous(force) => {
                    let force = force.clamp(-1.0, 1.0);
                    s.advance_continuous(force);
                    let goal = s.position >= mountain_car::CONTINUOUS_GOAL;
                    let mut reward = -0.1 * force * force;
                    if goal {
                        reward += 100.0;
                    }
                    let cause = if goal {
                        TerminationCause::GoalReached
                    } else {
                        TerminationCause::None
                    };
                    (reward, goal, cause)
                }
            },
        };
        self.steps += 1;
        self.episode_return += reward;

        let mut truncated = false;
        let mut cause = cause;
        if !terminated {
            let below_floor = task == TaskId::Acrobot
                && self
                    .options
                    .acrobot_reward_floor
                    .is_some_and(|floor| self.episode_return < floor);
            if self.steps >= self.spec.max_steps || below_floor {
                truncated = true;
                cause = TerminationCause::StepLimit;
            }
        }
        Ok(StepResult {
            observation: self.observation(),
            reward,
            terminated,
            truncated,
            termination_cause: cause,
        })
    }
}

fn expect_len(state: &[f64], expected: usize) -> Result<(), EnvError> {
    if state.len() == expected {
        Ok(())
    } else {
        Err(EnvError::StateShape {
            expected,
            got: state.len(),
        })
    }
}
