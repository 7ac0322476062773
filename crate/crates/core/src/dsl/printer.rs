//! Canonical pretty-printer. Output re-parses to the same tree.

use std::fmt::Write;

use super::ast::{BinOp, Expr, Stmt, UnaryOp};

const INDENT: &str = "    ";

fn precedence(e: &Expr) -> u8 {
    match e {
        Expr::IfExp { .. } => 0,
        Expr::Binary(BinOp::Or, ..) => 1,
        Expr::Binary(BinOp::And, ..) => 2,
        Expr::Unary(UnaryOp::Not, _) => 3,
        Expr::Compare(..) => 4,
        Expr::Binary(BinOp::Add | BinOp::Sub, ..) => 5,
        Expr::Binary(BinOp::Mul | BinOp::Div, ..) => 6,
        Expr::Unary(..) => 7,
        Expr::Number(_) | Expr::Bool(_) | Expr::None | Expr::Var { .. } | Expr::Random(..) => 8,
    }
}

fn child(out: &mut String, e: &Expr, min: u8) {
    if precedence(e) < min {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Number(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(true) => out.push_str("True"),
        Expr::Bool(false) => out.push_str("False"),
        Expr::None => out.push_str("None"),
        Expr::Var { name, .. } => out.push_str(name),
        Expr::Unary(op, inner) => {
            let p = precedence(e);
            out.push_str(match op {
                UnaryOp::Not => "not ",
                UnaryOp::Neg => "-",
                UnaryOp::Pos => "+",
            });
            child(out, inner, p);
        }
        Expr::Binary(op, a, b) => {
            let p = precedence(e);
            child(out, a, p);
            out.push_str(match op {
                BinOp::Add => " + ",
                BinOp::Sub => " - ",
                BinOp::Mul => " * ",
                BinOp::Div => " / ",
                BinOp::And => " and ",
                BinOp::Or => " or ",
            });
            // Left-associative: an equal-precedence right operand needs parentheses.
            child(out, b, p + 1);
        }
        Expr::Compare(first, rest) => {
            child(out, first, 5);
            for (op, rhs) in rest {
                let _ = write!(out, " {} ", op.symbol());
                child(out, rhs, 5);
            }
        }
        Expr::IfExp {
            cond,
            then,
            otherwise,
        } => {
            child(out, then, 1);
            out.push_str(" if ");
            child(out, cond, 1);
            out.push_str(" else ");
            child(out, otherwise, 0);
        }
        Expr::Random(func, a, b) => {
            let _ = write!(out, "random.{}(", func.name());
            write_expr(out, a);
            out.push_str(", ");
            write_expr(out, b);
            out.push(')');
        }
    }
}

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e);
    out
}

fn write_block(out: &mut String, block: &[Stmt], depth: usize) {
    let pad = INDENT.repeat(depth);
    if block.is_empty() {
        let _ = writeln!(out, "{pad}pass");
        return;
    }
    for stmt in block {
        match stmt {
            Stmt::Return(e) => {
                let _ = writeln!(out, "{pad}return {}", print_expr(e));
            }
            Stmt::If { branches, orelse } => {
                for (i, (cond, body)) in branches.iter().enumerate() {
                    let kw = if i == 0 { "if" } else { "elif" };
                    let _ = writeln!(out, "{pad}{kw} {}:", print_expr(cond));
                    write_block(out, body, depth + 1);
                }
                if let Some(body) = orelse {
                    let _ = writeln!(out, "{pad}else:");
                    write_block(out, body, depth + 1);
                }
            }
        }
    }
}

/// Renders a complete function, with `import random` when it is needed.
pub fn print_function(name: &str, params: &[String], body: &[Stmt]) -> String {
    let mut out = String::new();
    if super::ast::block_uses_random(body) {
        out.push_str("import random\n\n");
    }
    let _ = writeln!(out, "def {name}({}):", params.join(", "));
    write_block(&mut out, body, 1);
    out
}
