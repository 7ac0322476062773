#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
    Pos,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            _ => return None,
        })
    }
}

/// The two sanctioned random builtins.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomFn {
    /// `random.randint(lo, hi)`, inclusive on both ends.
    RandInt,
    /// `random.uniform(lo, hi)`.
    Uniform,
}

impl RandomFn {
    pub fn name(self) -> &'static str {
        match self {
            RandomFn::RandInt => "randint",
            RandomFn::Uniform => "uniform",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Number(f64),
    Bool(bool),
    None,
    /// A function parameter, resolved to its position.
    Var {
        name: String,
        index: usize,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// A possibly chained comparison: `first op0 rest0 op1 rest1 ...`.
    Compare(Box<Expr>, Vec<(CmpOp, Expr)>),
    /// `then if cond else otherwise`
    IfExp {
        cond: Box<Expr>,
        then: Box<Expr>,
        otherwise: Box<Expr>,
    },
    Random(RandomFn, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Stmt {
    If {
        branches: Vec<(Expr, Vec<Stmt>)>,
        orelse: Option<Vec<Stmt>>,
    },
    Return(Expr),
}

impl Expr {
    pub(crate) fn uses_random(&self) -> bool {
        match self {
            Expr::Random(..) => true,
            Expr::Number(_) | Expr::Bool(_) | Expr::None | Expr::Var { .. } => false,
            Expr::Unary(_, e) => e.uses_random(),
            Expr::Binary(_, a, b) => a.uses_random() || b.uses_random(),
            Expr::Compare(first, rest) => first.uses_random() || rest.iter().any(|(_, e)| e.uses_random()),
            Expr::IfExp {
                cond,
                then,
                otherwise,
            } => cond.uses_random() || then.uses_random() || otherwise.uses_random(),
        }
    }
}

pub(crate) fn block_uses_random(block: &[Stmt]) -> bool {
    block.iter().any(|stmt| match stmt {
        Stmt::Return(e) => e.uses_random(),
        Stmt::If { branches, orelse } => {
            branches
                .iter()
                .any(|(c, b)| c.uses_random() || block_uses_random(b))
                || orelse.as_deref().is_some_and(block_uses_random)
        }
    })
}
