//! Recursive-descent parser for the policy language.
//!
//! Accepted input is a single Python-style function definition, optionally
//! preceded by import lines. The body may contain `if`/`elif`/`else`,
//! `return <expr>`, `pass` and docstrings. Expressions cover numeric
//! literals, parameters, `True`/`False`/`None`, arithmetic `+ - * /`,
//! (chained) comparisons, `and`/`or`/`not`, conditional expressions and the
//! builtins `random.randint` / `random.uniform`.

use super::ast::{BinOp, CmpOp, Expr, RandomFn, Stmt, UnaryOp};
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind};

/// A parsed function before it is bound to a task.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
}

const BANNED_STATEMENTS: &[(&str, &str)] = &[
    ("while", "loops are not allowed"),
    ("for", "loops are not allowed"),
    ("def", "nested function definitions are not allowed"),
    ("class", "class definitions are not allowed"),
    ("lambda", "lambda expressions are not allowed"),
    ("import", "imports inside the function are not allowed"),
    ("from", "imports inside the function are not allowed"),
    ("global", "global declarations are not allowed"),
    ("nonlocal", "nonlocal declarations are not allowed"),
    ("try", "exception handling is not allowed"),
    ("with", "with-statements are not allowed"),
    ("raise", "raise statements are not allowed"),
    ("assert", "assert statements are not allowed"),
    ("del", "del statements are not allowed"),
    ("yield", "generators are not allowed"),
    ("break", "loop control statements are not allowed"),
    ("continue", "loop control statements are not allowed"),
    ("async", "async code is not allowed"),
    ("await", "async code is not allowed"),
];

const RESERVED: &[&str] = &[
    "if", "elif", "else", "return", "pass", "and", "or", "not", "in", "is", "def", "True", "False", "None",
];

pub fn parse_function(src: &str) -> Result<FunctionDef, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        params: Vec::new(),
    };
    p.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    params: Vec<String>,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Name(n) => format!("`{n}`"),
        Tok::Number(v) => format!("number `{v}`"),
        Tok::Str => "string literal".to_string(),
        Tok::Op(op) => format!("`{op}`"),
        Tok::Newline => "end of line".to_string(),
        Tok::Indent => "indentation".to_string(),
        Tok::Dedent => "dedent".to_string(),
        Tok::Eof => "end of input".to_string(),
    }
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_tok(&self) -> &Tok {
        &self.peek().tok
    }

    fn peek_nth(&self, n: usize) -> &Tok {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError {
            kind,
            line: t.line,
            column: t.column,
            message: message.into(),
        }
    }

    fn error_at(&self, tok: &Token, kind: ParseErrorKind, message: impl Into<String>) -> ParseError {
        ParseError {
            kind,
            line: tok.line,
            column: tok.column,
            message: message.into(),
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error_here(
            ParseErrorKind::Syntax,
            format!("expected {expected}, found {}", describe(self.peek_tok())),
        )
    }

    fn is_name(&self, name: &str) -> bool {
        matches!(self.peek_tok(), Tok::Name(n) if n == name)
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek_tok(), Tok::Op(o) if *o == op)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> Result<Token, ParseError> {
        if self.is_op(op) {
            Ok(self.advance())
        } else {
            Err(self.unexpected(&format!("`{op}`")))
        }
    }

    fn expect_name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek_tok().clone() {
            Tok::Name(n) if !RESERVED.contains(&n.as_str()) => {
                self.advance();
                Ok(n)
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn expect_newline(&mut self) -> Result<(), ParseError> {
        match self.peek_tok() {
            Tok::Newline => {
                self.advance();
                Ok(())
            }
            Tok::Eof | Tok::Dedent => Ok(()),
            _ => Err(self.unexpected("end of line")),
        }
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek_tok(), Tok::Newline) {
            self.advance();
        }
    }

    fn program(&mut self) -> Result<FunctionDef, ParseError> {
        self.skip_newlines();
        while self.is_name("import") || self.is_name("from") {
            while !matches!(self.peek_tok(), Tok::Newline | Tok::Eof) {
                self.advance();
            }
            self.skip_newlines();
        }
        if !self.is_name("def") {
            return Err(self.unexpected("a function definition (`def`)"));
        }
        self.advance();
        let name = self.expect_name("a function name")?;
        self.expect_op("(")?;
        let mut params = Vec::new();
        while !self.is_op(")") {
            let tok = self.peek().clone();
            let param = self.expect_name("a parameter name")?;
            if params.contains(&param) {
                return Err(self.error_at(
                    &tok,
                    ParseErrorKind::Syntax,
                    format!("duplicate parameter `{param}`"),
                ));
            }
            // Type annotations are accepted and ignored.
            if self.eat_op(":") {
                self.expect_name("a type annotation")?;
            }
            if self.is_op("=") {
                return Err(self.error_here(
                    ParseErrorKind::BannedConstruct,
                    "default parameter values are not allowed",
                ));
            }
            params.push(param);
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        if self.eat_op("->") {
            self.expect_name("a return annotation")?;
        }
        self.expect_op(":")?;
        self.params = params.clone();
        let body = self.suite()?;
        self.skip_newlines();
        if !matches!(self.peek_tok(), Tok::Eof) {
            return Err(self.error_here(
                ParseErrorKind::Syntax,
                format!(
                    "unexpected {} after the function definition",
                    describe(self.peek_tok())
                ),
            ));
        }
        Ok(FunctionDef { name, params, body })
    }

    /// Either an indented block or a single statement on the same line.
    fn suite(&mut self) -> Result<Vec<Stmt>, ParseError> {
        if matches!(self.peek_tok(), Tok::Newline) {
            self.advance();
            if !matches!(self.peek_tok(), Tok::Indent) {
                return Err(self.unexpected("an indented block"));
            }
            self.advance();
            let mut stmts = Vec::new();
            while !matches!(self.peek_tok(), Tok::Dedent | Tok::Eof) {
                if let Some(stmt) = self.statement()? {
                    stmts.push(stmt);
                }
            }
            if matches!(self.peek_tok(), Tok::Dedent) {
                self.advance();
            }
            Ok(stmts)
        } else {
            Ok(self.statement()?.into_iter().collect())
        }
    }

    /// Parses one statement; docstrings and `pass` yield `None`.
    fn statement(&mut self) -> Result<Option<Stmt>, ParseError> {
        let tok = self.peek().clone();
        match &tok.tok {
            Tok::Name(n) if n == "if" => {
                self.advance();
                self.if_statement().map(Some)
            }
            Tok::Name(n) if n == "return" => {
                self.advance();
                if matches!(self.peek_tok(), Tok::Newline | Tok::Eof | Tok::Dedent) {
                    return Err(self.error_at(
                        &tok,
                        ParseErrorKind::Syntax,
                        "return statement without a value; every rule must return an action",
                    ));
                }
                let value = self.expr()?;
                self.expect_newline()?;
                Ok(Some(Stmt::Return(value)))
            }
            Tok::Name(n) if n == "pass" => {
                self.advance();
                self.expect_newline()?;
                Ok(None)
            }
            Tok::Name(n) if n == "elif" || n == "else" => Err(self.error_at(
                &tok,
                ParseErrorKind::Syntax,
                format!("`{n}` without a matching `if`"),
            )),
            Tok::Name(n) => {
                if let Some((_, why)) = BANNED_STATEMENTS.iter().find(|(kw, _)| kw == n) {
                    return Err(self.error_at(&tok, ParseErrorKind::BannedConstruct, *why));
                }
                if let Tok::Op(op) = self.peek_nth(1) {
                    if op.ends_with('=') && !matches!(*op, "==" | "<=" | ">=" | "!=") {
                        return Err(self.error_at(
                            &tok,
                            ParseErrorKind::BannedConstruct,
                            "assignments are not allowed; use the parameters directly",
                        ));
                    }
                }
                self.expression_statement(&tok)
            }
            Tok::Str => {
                self.advance();
                self.expect_newline()?;
                Ok(None)
            }
            Tok::Indent => Err(self.error_at(&tok, ParseErrorKind::Syntax, "unexpected indent")),
            _ => self.expression_statement(&tok),
        }
    }

    fn expression_statement(&mut self, start: &Token) -> Result<Option<Stmt>, ParseError> {
        // Parse first so banned calls are reported as such.
        self.expr()?;
        if self.is_op("=") {
            return Err(self.error_at(
                start,
                ParseErrorKind::BannedConstruct,
                "assignments are not allowed; use the parameters directly",
            ));
        }
        Err(self.error_at(
            start,
            ParseErrorKind::Syntax,
            "only if/elif/else, return and pass statements are allowed",
        ))
    }

    fn if_statement(&mut self) -> Result<Stmt, ParseError> {
        let mut branches = Vec::new();
        let cond = self.expr()?;
        self.expect_op(":")?;
        branches.push((cond, self.suite()?));
        let mut orelse = None;
        loop {
            if self.is_name("elif") {
                self.advance();
                let cond = self.expr()?;
                self.expect_op(":")?;
                branches.push((cond, self.suite()?));
            } else if self.is_name("else") {
                self.advance();
                self.expect_op(":")?;
                orelse = Some(self.suite()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt::If { branches, orelse })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        if self.is_name("lambda") {
            return Err(self.error_here(
                ParseErrorKind::BannedConstruct,
                "lambda expressions are not allowed",
            ));
        }
        let value = self.or_test()?;
        if self.is_name("if") {
            self.advance();
            let cond = self.or_test()?;
            if !self.is_name("else") {
                return Err(self.unexpected("`else` in conditional expression"));
            }
            self.advance();
            let otherwise = self.expr()?;
            return Ok(Expr::IfExp {
                cond: Box::new(cond),
                then: Box::new(value),
                otherwise: Box::new(otherwise),
            });
        }
        Ok(value)
    }

    fn or_test(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_test()?;
        while self.is_name("or") {
            self.advance();
            let rhs = self.and_test()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and_test(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.not_test()?;
        while self.is_name("and") {
            self.advance();
            let rhs = self.not_test()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not_test(&mut self) -> Result<Expr, ParseError> {
        if self.is_name("not") {
            self.advance();
            let inner = self.not_test()?;
            return Ok(Expr::Unary(UnaryOp::Not, Box::new(inner)));
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let first = self.arith()?;
        let mut rest = Vec::new();
        loop {
            let op = match self.peek_tok() {
                Tok::Op(op) => CmpOp::from_symbol(op),
                Tok::Name(n) if n == "in" || n == "is" => {
                    return Err(self.error_here(
                        ParseErrorKind::Syntax,
                        format!("operator `{n}` is not supported; use <, <=, >, >=, == or !="),
                    ))
                }
                _ => None,
            };
            let Some(op) = op else { break };
            self.advance();
            rest.push((op, self.arith()?));
        }
        if rest.is_empty() {
            Ok(first)
        } else {
            Ok(Expr::Compare(Box::new(first), rest))
        }
    }

    fn arith(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.is_op("+") {
                BinOp::Add
            } else if self.is_op("-") {
                BinOp::Sub
            } else {
                break;
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            let op = if self.is_op("*") {
                BinOp::Mul
            } else if self.is_op("/") {
                BinOp::Div
            } else if self.is_op("//") || self.is_op("%") || self.is_op("**") || self.is_op("@") {
                let Tok::Op(op) = self.peek_tok() else {
                    unreachable!()
                };
                return Err(self.error_here(
                    ParseErrorKind::Syntax,
                    format!("operator `{op}` is not supported; use +, -, * or /"),
                ));
            } else {
                break;
            };
            self.advance();
            let rhs = self.factor()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat_op("-") {
            return Ok(Expr::Unary(UnaryOp::Neg, Box::new(self.factor()?)));
        }
        if self.eat_op("+") {
            return Ok(Expr::Unary(UnaryOp::Pos, Box::new(self.factor()?)));
        }
        if self.is_op("**") {
            return Err(self.error_here(
                ParseErrorKind::Syntax,
                "operator `**` is not supported; use +, -, * or /",
            ));
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let tok = self.peek().clone();
        match &tok.tok {
            Tok::Number(v) => {
                self.advance();
                Ok(Expr::Number(*v))
            }
            Tok::Op("(") => {
                self.advance();
                if self.is_op(")") {
                    return Err(self.error_at(&tok, ParseErrorKind::Syntax, "tuples are not supported"));
                }
                let inner = self.expr()?;
                if self.is_op(",") {
                    return Err(self.error_here(ParseErrorKind::Syntax, "tuples are not supported"));
                }
                self.expect_op(")")?;
                Ok(inner)
            }
            Tok::Op("[") | Tok::Op("{") => Err(self.error_at(
                &tok,
                ParseErrorKind::Syntax,
                "lists, dicts and sets are not supported",
            )),
            Tok::Name(n) => {
                let n = n.clone();
                self.advance();
                match n.as_str() {
                    "True" => return Ok(Expr::Bool(true)),
                    "False" => return Ok(Expr::Bool(false)),
                    "None" => return Ok(Expr::None),
                    "lambda" => {
                        return Err(self.error_at(
                            &tok,
                            ParseErrorKind::BannedConstruct,
                            "lambda expressions are not allowed",
                        ))
                    }
                    _ if RESERVED.contains(&n.as_str()) => {
                        return Err(self.error_at(
                            &tok,
                            ParseErrorKind::Syntax,
                            format!("unexpected keyword `{n}` in expression"),
                        ))
                    }
                    _ => {}
                }
                if self.is_op(".") {
                    return self.attribute_call(&tok, n);
                }
                if self.is_op("(") {
                    return Err(self.error_at(
                        &tok,
                        ParseErrorKind::BannedConstruct,
                        format!(
                            "call to `{n}` is not allowed; the only permitted calls are random.randint and random.uniform"
                        ),
                    ));
                }
                if self.is_op("[") {
                    return Err(self.error_at(&tok, ParseErrorKind::Syntax, "indexing is not supported"));
                }
                match self.params.iter().position(|p| *p == n) {
                    Some(index) => Ok(Expr::Var { name: n, index }),
                    None => Err(self.error_at(
                        &tok,
                        ParseErrorKind::UnknownIdentifier,
                        format!("unknown identifier `{n}`; only the function parameters may be referenced"),
                    )),
                }
            }
            Tok::Str => Err(self.error_at(&tok, ParseErrorKind::Syntax, "string values are not supported")),
            _ => Err(self.unexpected("an expression")),
        }
    }

    fn attribute_call(&mut self, start: &Token, base: String) -> Result<Expr, ParseError> {
        self.expect_op(".")?;
        let attr = match self.peek_tok().clone() {
            Tok::Name(a) => {
                self.advance();
                a
            }
            _ => return Err(self.unexpected("an attribute name")),
        };
        let func = match (base.as_str(), attr.as_str()) {
            ("random", "randint") => RandomFn::RandInt,
            ("random", "uniform") => RandomFn::Uniform,
            _ => {
                let what = if self.is_op("(") { "call to" } else { "attribute" };
                return Err(self.error_at(
                    start,
                    ParseErrorKind::BannedConstruct,
                    format!(
                        "{what} `{base}.{attr}` is not allowed; the only permitted calls are random.randint and random.uniform"
                    ),
                ));
            }
        };
        self.expect_op("(")?;
        let lo = self.expr()?;
        self.expect_op(",")?;
        let hi = self.expr()?;
        self.eat_op(",");
        if !self.is_op(")") {
            return Err(self.error_here(
                ParseErrorKind::Syntax,
                format!("random.{attr} takes exactly two arguments"),
            ));
        }
        self.advance();
        Ok(Expr::Random(func, Box::new(lo), Box::new(hi)))
    }
}
