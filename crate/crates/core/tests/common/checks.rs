//! Whole-suite checks shared by the integration tests and the acceptance
//! harness. Each returns a short summary or a description of the first
//! disagreement.

use policy_refine::dsl::PolicyResult;
use policy_refine::dsl::{evaluate, parse};
use policy_refine::env::{Action, ActionKind, EnvOptions, Environment, Integrator, Observation, TaskId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{fixtures, reference};

pub fn random_action<R: Rng>(task: TaskId, rng: &mut R) -> (Action, f64) {
    match task.spec().action_kind {
        ActionKind::Discrete { labels } => {
            let label = labels[rng.gen_range(0..labels.len())];
            (Action::Discrete(label), label as f64)
        }
        // Draw past the bounds so clamping is exercised too.
        ActionKind::Continuous { lo, hi } => {
            let v = rng.gen_range(1.25 * lo..1.25 * hi);
            (Action::Continuous(v), v)
        }
    }
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9)
}

/// Ten random action sequences per task, each stepped to the end of its
/// episode, compared step by step with the reference dynamics.
pub fn dynamics_against_reference(integrator: Integrator) -> Result<usize, String> {
    let options = EnvOptions {
        cartpole_integrator: integrator,
        ..EnvOptions::default()
    };
    let mut compared = 0;
    for task in TaskId::ALL {
        for seq in 0..10u64 {
            let mut env = Environment::with_options(task, options);
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seq);
            env.reset(seq);
            loop {
                let before = env.state();
                let (action, raw) = random_action(task, &mut rng);
                let got = env.step(&action).map_err(|e| e.to_string())?;
                let want = reference::step(task, &before, raw, integrator);
                let at = format!("{task} sequence {seq} step {}", env.steps());
                if !close(&env.state(), &want.state) {
                    return Err(format!("{at}: state"));
                }
                if !close(got.observation.values(), &want.observation) {
                    return Err(format!("{at}: observation"));
                }
                if (got.reward - want.reward).abs() > 1e-9 {
                    return Err(format!("{at}: reward"));
                }
                if got.terminated != want.terminated {
                    return Err(format!("{at}: termination"));
                }
                compared += 1;
                if got.done() {
                    break;
                }
            }
        }
    }
    Ok(compared)
}

/// Direct transcription of the iteration-0 rule chain. `None` marks the
/// random fallback.
pub fn iter0_oracle(cp: i64, cv: i64, pa: i64, pav: i64) -> Option<i64> {
    if pa > 0 {
        return Some(2);
    }
    if pa < 0 {
        return Some(1);
    }
    if cp >= 20 {
        return Some(1);
    }
    if cp <= -20 {
        return Some(2);
    }
    if pav > 10 {
        return Some(2);
    }
    if pav < -10 {
        return Some(1);
    }
    if cv > 10 {
        return Some(1);
    }
    if cv < -10 {
        return Some(2);
    }
    if (-5..=5).contains(&pa) {
        if cv > 0 {
            return Some(1);
        }
        if cv < 0 {
            return Some(2);
        }
    }
    None
}

/// The iteration-0 program against [`iter0_oracle`] on every point of the
/// stride-10 grid over `[-50, 50]^4`, fallback flags included.
pub fn iter0_grid() -> Result<usize, String> {
    let p = parse(fixtures::ITER0_PROGRAM, &TaskId::CartPoleStar2.spec()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let axis: Vec<i64> = (-50..=50).step_by(10).collect();
    let mut points = 0;
    for &cp in &axis {
        for &cv in &axis {
            for &pa in &axis {
                for &pav in &axis {
                    let obs = Observation(vec![cp as f64, cv as f64, pa as f64, pav as f64]);
                    let out = evaluate(&p, &obs, &mut rng);
                    let expected = iter0_oracle(cp, cv, pa, pav);
                    if out.used_random != expected.is_none() {
                        return Err(format!("{obs:?}: fallback flag {}", out.used_random));
                    }
                    let ok = match (expected, &out.result) {
                        (Some(label), PolicyResult::Action(Action::Discrete(got))) => *got == label,
                        (None, PolicyResult::Action(Action::Discrete(got))) => *got == 1 || *got == 2,
                        _ => false,
                    };
                    if !ok {
                        return Err(format!("{obs:?}: expected {expected:?}, got {:?}", out.result));
                    }
                    points += 1;
                }
            }
        }
    }
    Ok(points)
}
