use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::ast::{BinOp, CmpOp, Expr, RandomFn, Stmt, UnaryOp};
use super::PolicyProgram;
use crate::env::{Action, ActionKind, Observation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason", content = "detail")]
pub enum InvalidReason {
    /// Control fell off the end, or the function returned `None`.
    NoRuleFired,
    /// A discrete result that is not one of the task's labels.
    OutOfRange(f64),
    RuntimeError(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyResult {
    Action(Action),
    Invalid(InvalidReason),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub result: PolicyResult,
    /// Whether a random builtin was evaluated on this call.
    pub used_random: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Value {
    Num(f64),
    Bool(bool),
    None,
}

impl Value {
    fn truthy(self) -> bool {
        match self {
            Value::Num(v) => v != 0.0,
            Value::Bool(b) => b,
            Value::None => false,
        }
    }

    fn number(self, context: &str) -> Result<f64, String> {
        match self {
            Value::Num(v) => Ok(v),
            Value::Bool(b) => Ok(if b { 1.0 } else { 0.0 }),
            Value::None => Err(format!("cannot use None in {context}")),
        }
    }
}

struct Evaluator<'a> {
    obs: &'a [f64],
    rng: &'a mut dyn RngCore,
    used_random: bool,
}

/// Evaluates `program` on one observation. Deterministic given the rng state.
///
/// # Panics
///
/// If `obs` does not have one value per parameter.
pub fn evaluate<R: RngCore>(program: &PolicyProgram, obs: &Observation, rng: &mut R) -> PolicyOutcome {
    assert_eq!(
        obs.len(),
        program.params.len(),
        "observation length must match the parameter count"
    );
    let mut ev = Evaluator {
        obs: obs.values(),
        rng,
        used_random: false,
    };
    let returned = ev.block(&program.body);
    let result = match returned {
        Err(msg) => PolicyResult::Invalid(InvalidReason::RuntimeError(msg)),
        Ok(None) | Ok(Some(Value::None)) => PolicyResult::Invalid(InvalidReason::NoRuleFired),
        Ok(Some(v)) => to_action(v, &program.task.spec().action_kind),
    };
    PolicyOutcome {
        result,
        used_random: ev.used_random,
    }
}

fn to_action(value: Value, kind: &ActionKind) -> PolicyResult {
    let v = match value.number("an action") {
        Ok(v) => v,
        Err(msg) => return PolicyResult::Invalid(InvalidReason::RuntimeError(msg)),
    };
    match kind {
        ActionKind::Discrete { labels } => {
            if v.fract() == 0.0 && labels.iter().any(|&l| l as f64 == v) {
                PolicyResult::Action(Action::Discrete(v as i64))
            } else {
                PolicyResult::Invalid(InvalidReason::OutOfRange(v))
            }
        }
        ActionKind::Continuous { lo, hi } => {
            if v.is_nan() {
                PolicyResult::Invalid(InvalidReason::RuntimeError(
                    "the action is not a number (NaN)".to_string(),
                ))
            } else {
                PolicyResult::Action(Action::Continuous(v.clamp(*lo, *hi)))
            }
        }
    }
}

impl Evaluator<'_> {
    fn block(&mut self, stmts: &[Stmt]) -> Result<Option<Value>, String> {
        for stmt in stmts {
            match stmt {
                Stmt::Return(e) => return self.expr(e).map(Some),
                Stmt::If { branches, orelse } => {
                    let mut taken = None;
                    for (cond, body) in branches {
                        if self.expr(cond)?.truthy() {
                            taken = Some(body.as_slice());
                            break;
                        }
                    }
                    let taken = taken.or(orelse.as_deref());
                    if let Some(body) = taken {
                        if let Some(v) = self.block(body)? {
                            return Ok(Some(v));
                        }
                    }
                }
            }
        }
        Ok(None)
    }

    fn expr(&mut self, e: &Expr) -> Result<Value, String> {
        Ok(match e {
            Expr::Number(v) => Value::Num(*v),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::None => Value::None,
            Expr::Var { index, .. } => Value::Num(self.obs[*index]),
            Expr::Unary(op, inner) => {
                let v = self.expr(inner)?;
                match op {
                    UnaryOp::Not => Value::Bool(!v.truthy()),
                    UnaryOp::Neg => Value::Num(-v.number("arithmetic")?),
                    UnaryOp::Pos => Value::Num(v.number("arithmetic")?),
                }
            }
            Expr::Binary(BinOp::And, a, b) => {
                let l = self.expr(a)?;
                if l.truthy() {
                    self.expr(b)?
                } else {
                    l
                }
            }
            Expr::Binary(BinOp::Or, a, b) => {
                let l = self.expr(a)?;
                if l.truthy() {
                    l
                } else {
                    self.expr(b)?
                }
            }
            Expr::Binary(op, a, b) => {
                let l = self.expr(a)?.number("arithmetic")?;
                let r = self.expr(b)?.number("arithmetic")?;
                Value::Num(match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err("division by zero".to_string());
                        }
                        l / r
                    }
                    BinOp::And | BinOp::Or => unreachable!("handled above"),
                })
            }
            Expr::Compare(first, rest) => {
                let mut left = self.expr(first)?;
                for (op, rhs) in rest {
                    let right = self.expr(rhs)?;
                    if !compare(*op, left, right)? {
                        return Ok(Value::Bool(false));
                    }
                    left = right;
                }
                Value::Bool(true)
            }
            Expr::IfExp {
                cond,
                then,
                otherwise,
            } => {
                if self.expr(cond)?.truthy() {
                    self.expr(then)?
                } else {
                    self.expr(otherwise)?
                }
            }
            Expr::Random(func, a, b) => {
                let name = format!("random.{}", func.name());
                let lo = self.expr(a)?.number(&name)?;
                let hi = self.expr(b)?.number(&name)?;
                self.used_random = true;
                match func {
                    RandomFn::RandInt => {
                        if lo.fract() != 0.0 || hi.fract() != 0.0 {
                            return Err(format!("{name} requires integer bounds, got ({lo}, {hi})"));
                        }
                        if lo > hi {
                            return Err(format!("empty range for {name}({lo}, {hi})"));
                        }
                        Value::Num(self.rng.gen_range(lo as i64..=hi as i64) as f64)
                    }
                    RandomFn::Uniform => {
                        let u: f64 = self.rng.gen();
                        Value::Num(lo + (hi - lo) * u)
                    }
                }
            }
        })
    }
}

fn compare(op: CmpOp, l: Value, r: Value) -> Result<bool, String> {
    match (op, l, r) {
        (CmpOp::Eq, Value::None, _) | (CmpOp::Eq, _, Value::None) => Ok(l == r),
        (CmpOp::Ne, Value::None, _) | (CmpOp::Ne, _, Value::None) => Ok(l != r),
        _ => {
            let a = l.number("a comparison")?;
            let b = r.number("a comparison")?;
            Ok(match op {
                CmpOp::Lt => a < b,
                CmpOp::Le => a <= b,
                CmpOp::Gt => a > b,
                CmpOp::Ge => a >= b,
                CmpOp::Eq => a == b,
                CmpOp::Ne => a != b,
            })
        }
    }
}
