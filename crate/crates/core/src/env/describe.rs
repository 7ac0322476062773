//! Natural-language task descriptions used to fill prompt templates.

use super::TaskId;

/// The problem-specific texts substituted into the prompt templates.
///
/// The first five fields fill the description block shared by every prompt.
/// The remaining ones fill task-specific phrases inside the instruction
/// sentences (what a valid action looks like, what "better" means).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskDescription {
    pub agent: String,
    pub goal_and_reward: String,
    pub observation_vector: String,
    pub action_vector: String,
    pub termination_conditions: String,
    /// Completes "The action ... should be ...".
    pub action_choice: String,
    /// Completes "the function returns the action value (...)".
    pub action_return: String,
    /// Completes "it should be ... but it was None".
    pub action_expectation: String,
    /// Completes "update the rules for ...".
    pub improvement_goal: String,
}

impl TaskDescription {
    /// The five description slots, keyed by template marker name.
    pub fn slots(&self) -> [(&'static str, &str); 5] {
        [
            ("Agent", &self.agent),
            ("Goal and Reward", &self.goal_and_reward),
            ("Observation Vector", &self.observation_vector),
            ("Action Vector", &self.action_vector),
            ("Termination Conditions", &self.termination_conditions),
        ]
    }
}

const CART_AGENT: &str = "A cart over a track that has an unactuated pole attached to it. A force can be applied to the cart, left or right, to counteract the passive movement of the pole.";
const CART_GOAL: &str = "Keep the pole balanced upright as long as possible to a maximum of 500 time steps.";
const CART_NATIVE_OBS: &str = "A 4D vector in the following order:\n\nCart position (m), Cart velocity (m/s), Pole angle (rad), Pole angular velocity (rad/s)\n\nCart position ranges from -4.8 to 4.8 and pole angle from -0.418 to 0.418; velocities are unbounded real values;";
const CART_NATIVE_FAIL: &str =
    "- Pole angle exceeds the range [-0.2095,0.2095]\n- Cart position exceeds the range [-2.4,2.4]";
const DIRECTION_NOTE: &str = "Negative values mean left direction, positive values right direction.";

fn s(text: &str) -> String {
    text.to_string()
}

pub fn describe(task: TaskId) -> TaskDescription {
    match task {
        TaskId::CartPole => TaskDescription {
            agent: s(CART_AGENT),
            goal_and_reward: s(CART_GOAL),
            observation_vector: s(CART_NATIVE_OBS),
            action_vector: format!("Discrete:\n0=move left(0)\n1=move right(1)\n\n{DIRECTION_NOTE}"),
            termination_conditions: s(CART_NATIVE_FAIL),
            action_choice: s("either left(0) or right(1)"),
            action_return: s("0 for left; or 1 for right"),
            action_expectation: s("0 (left) or 1 (right)"),
            improvement_goal: s("keeping the pole balanced for longer"),
        },
        TaskId::CartPoleStar1 => TaskDescription {
            agent: s(CART_AGENT),
            goal_and_reward: s(CART_GOAL),
            observation_vector: s(CART_NATIVE_OBS),
            action_vector: format!("Discrete:\n1=move left(1)\n2=move right(2)\n\n{DIRECTION_NOTE}"),
            termination_conditions: s(CART_NATIVE_FAIL),
            action_choice: s("either left(1) or right(2)"),
            action_return: s("1 for left; or 2 for right"),
            action_expectation: s("1 (left) or 2 (right)"),
            improvement_goal: s("keeping the pole balanced for longer"),
        },
        TaskId::CartPoleStar2 => TaskDescription {
            agent: s(CART_AGENT),
            goal_and_reward: s(CART_GOAL),
            observation_vector: s("A 4D vector in the following order:\n\nCart position, Cart velocity, Pole angle, Pole angular velocity\n\nAll observation variables are integer values between -50 and 50;"),
            action_vector: format!("Discrete:\n1=move left(1)\n2=move right(2)\n\n{DIRECTION_NOTE}"),
            termination_conditions: s("- Pole angle exceeds the range [-25,25]\n- Cart position exceeds the range [-25,25]"),
            action_choice: s("either left(1) or right(2)"),
            action_return: s("1 for left; or 2 for right"),
            action_expectation: s("1 (left) or 2 (right)"),
            improvement_goal: s("keeping the pole balanced for longer"),
        },
        TaskId::InvertedPendulum => TaskDescription {
            agent: s("A cart over a track that has an unactuated pole attached to it. A continuous force can be applied to the cart, left or right, to counteract the passive movement of the pole."),
            goal_and_reward: s("Bring the pole upright as fast as possible and keep it there as long as possible, to a maximum of 1000 time steps. A reward of +1 is given for every time step in which the pole angle stays within the range [-0.2,0.2] rad."),
            observation_vector: s("A 4D vector in the following order:\n\nCart position (m), Pole angle (rad), Cart velocity (m/s), Pole angular velocity (rad/s)\n\nAll observation variables are real values;"),
            action_vector: format!("Continuous:\nA single force value in the range [-3.0, 3.0] N applied to the cart.\n\n{DIRECTION_NOTE}"),
            termination_conditions: s("- Pole angle exceeds the range [-0.2,0.2]"),
            action_choice: s("a real value in the range [-3.0, 3.0]"),
            action_return: s("a force between -3.0 and 3.0"),
            action_expectation: s("a value in the range [-3.0, 3.0]"),
            improvement_goal: s("keeping the pole balanced for longer"),
        },
        TaskId::Acrobot => TaskDescription {
            agent: s("Two bars connected in a chain. The first bar is attached to a fixed pivot through an actuated joint and the second bar hangs from the end of the first through an unactuated joint. A fixed-intensity torque can be applied to the actuated joint."),
            goal_and_reward: s("Raise the tip of the second bar above a height equal to the length of one bar above the pivot, as fast as possible. A reward of -1 is given for every time step in which the goal has not been reached, up to a maximum of 500 time steps."),
            observation_vector: s("A 6D vector in the following order:\n\nCosine of theta1, Sine of theta1, Cosine of theta2, Sine of theta2, Angular velocity of theta1, Angular velocity of theta2\n\ntheta1 is the angle of the first bar relative to the downward vertical and theta2 is the angle of the second bar relative to the first. Cosine and sine values lie in [-1, 1]; the angular velocity of theta1 lies in [-12.567, 12.567] rad/s and the angular velocity of theta2 in [-28.274, 28.274] rad/s;"),
            action_vector: s("Discrete:\n0=apply -1 torque(0)\n1=apply 0 torque(1)\n2=apply +1 torque(2)\n\nNegative torque rotates the joint clockwise, positive torque counter-clockwise."),
            termination_conditions: s("- The episode ends when the tip reaches the target height\n- The episode ends after 500 time steps"),
            action_choice: s("one of 0, 1 or 2"),
            action_return: s("0 for -1 torque; 1 for no torque; or 2 for +1 torque"),
            action_expectation: s("0, 1 or 2"),
            improvement_goal: s("raising the tip above the target height faster"),
        },
        TaskId::Pendulum => TaskDescription {
            agent: s("A bar connected to a fixed pivot through an actuated joint. A torque can be applied to the joint to rotate the bar."),
            goal_and_reward: s("Swing the bar up to the upright position and keep it balanced there. The reward at each time step is -(theta^2 + 0.1*theta_dot^2 + 0.001*torque^2), where theta is the angle of the bar normalized to the range [-pi, pi] (0 is the upright position), theta_dot is its angular velocity and torque is the applied action. Episodes last 200 time steps."),
            observation_vector: s("A 3D vector in the following order:\n\nx = cos(theta), y = sin(theta), Angular velocity of the bar\n\nx and y lie in [-1.0, 1.0] and the angular velocity in [-8.0, 8.0];"),
            action_vector: s("Continuous:\nA single torque value in the range [-2.0, 2.0] applied to the joint."),
            termination_conditions: s("- There is no early failure; the episode ends after 200 time steps"),
            action_choice: s("a real value in the range [-2.0, 2.0]"),
            action_return: s("a torque between -2.0 and 2.0"),
            action_expectation: s("a value in the range [-2.0, 2.0]"),
            improvement_goal: s("bringing the bar upright faster and keeping it there"),
        },
        TaskId::MountainCarDiscrete => TaskDescription {
            agent: s("A car placed at the bottom of a valley between two hills. The car engine is too weak to climb the right hill directly, so it has to build momentum."),
            goal_and_reward: s("Drive the car to the top of the right hill (position >= 0.5) as fast as possible. A reward of -1 is given for every time step until the goal is reached, up to a maximum of 200 time steps."),
            observation_vector: s("A 2D vector in the following order:\n\nCar position (m), Car velocity (m/s)\n\nThe position lies in [-1.2, 0.6] and the velocity in [-0.07, 0.07];"),
            action_vector: s("Discrete:\n0=accelerate left(0)\n1=do nothing(1)\n2=accelerate right(2)\n\nNegative velocities mean left direction, positive velocities right direction."),
            termination_conditions: s("- The episode ends when the car position reaches 0.5\n- The episode ends after 200 time steps"),
            action_choice: s("one of left(0), nothing(1) or right(2)"),
            action_return: s("0 for left; 1 for nothing; or 2 for right"),
            action_expectation: s("0, 1 or 2"),
            improvement_goal: s("reaching the top of the hill faster"),
        },
        TaskId::MountainCarContinuous => TaskDescription {
            agent: s("A car placed at the bottom of a valley between two hills. The car engine is too weak to climb the right hill directly, so it has to build momentum."),
            goal_and_reward: s("Drive the car to the top of the right hill (position >= 0.45) as fast as possible. At each time step the reward is -0.1*force^2, and a reward of +100 is given when the goal is reached. Episodes last up to 1000 time steps."),
            observation_vector: s("A 2D vector in the following order:\n\nCar position (m), Car velocity (m/s)\n\nThe position lies in [-1.2, 0.6] and the velocity in [-0.07, 0.07];"),
            action_vector: s("Continuous:\nA single force value in the range [-1.0, 1.0].\n\nNegative values mean left direction, positive values right direction."),
            termination_conditions: s("- The episode ends when the car position reaches 0.45\n- The episode ends after 1000 time steps"),
            action_choice: s("a real value in the range [-1.0, 1.0]"),
            action_return: s("a force between -1.0 and 1.0"),
            action_expectation: s("a value in the range [-1.0, 1.0]"),
            improvement_goal: s("reaching the top of the hill faster while using less force"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_slots_filled() {
        for task in TaskId::ALL {
            let d = describe(task);
            for (name, text) in d.slots() {
                assert!(!text.trim().is_empty(), "{task} {name}");
            }
            assert!(!d.action_choice.is_empty());
            assert!(!d.action_return.is_empty());
            assert!(!d.action_expectation.is_empty());
            assert!(!d.improvement_goal.is_empty());
        }
    }

    #[test]
    fn star2_action_labels() {
        let d = describe(TaskId::CartPoleStar2);
        assert!(d.action_vector.contains("1=move left"));
        assert!(d.action_vector.contains("2=move right"));
        assert!(d.observation_vector.contains("integer values between -50 and 50"));
    }

    #[test]
    fn pendulum_mentions_reward_formula() {
        let d = describe(TaskId::Pendulum);
        assert!(d
            .goal_and_reward
            .contains("-(theta^2 + 0.1*theta_dot^2 + 0.001*torque^2)"));
    }
}
