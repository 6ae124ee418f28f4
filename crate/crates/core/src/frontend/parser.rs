//! Recursive-descent parser producing an unresolved [`Program`].
//!
//! Operator precedence, loosest first: quantifiers, `<==>`, `==>` (right
//! associative), `||`, `&&`, relational operators (non-associative), `+ -`,
//! `* / %`, unary `! -`, postfix selection and update.

use super::ast::*;
use super::error::{ParseError, ParseErrorKind};
use super::lexer::{tokenize, Tok};
use super::typeck;

/// Parses, resolves and type-checks a compilation unit.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let program = parse_program_unchecked(src)?;
    typeck::check_program(&program)?;
    Ok(program)
}

/// Parses a compilation unit without resolution or type checking.
pub fn parse_program_unchecked(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    let program = p.program()?;
    Ok(program)
}

/// Parses a standalone expression. Identifiers are left unresolved.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(src)?;
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Parser { toks: tokenize(src)?, pos: 0 })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, expected: &str) -> PResult<T> {
        Err(ParseError::at(
            ParseErrorKind::Syntax,
            format!("expected {expected}, found {}", self.peek().describe()),
            self.span(),
        ))
    }

    fn expect(&mut self, t: &Tok) -> PResult<()> {
        if self.eat(t) {
            Ok(())
        } else {
            self.error(&t.describe())
        }
    }

    fn ident(&mut self) -> PResult<Ident> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => self.error("identifier"),
        }
    }

    // ---- declarations ----

    fn program(&mut self) -> PResult<Program> {
        let mut program = Program::default();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Var => {
                    self.bump();
                    program.globals.extend(self.typed_idents()?);
                    self.expect(&Tok::Semi)?;
                }
                Tok::Function => program.functions.push(self.function()?),
                Tok::Axiom => {
                    let start = self.span();
                    self.bump();
                    let formula = self.expr()?;
                    self.expect(&Tok::Semi)?;
                    program.axioms.push(Axiom { formula, span: start.to(self.prev_span()) });
                }
                Tok::Procedure => program.procedures.push(self.procedure()?),
                _ => return self.error("`var`, `function`, `axiom` or `procedure`"),
            }
        }
        Ok(program)
    }

    fn ty(&mut self) -> PResult<Type> {
        match self.peek() {
            Tok::Int => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Bool => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::Array => {
                self.bump();
                self.expect(&Tok::Int)?;
                Ok(Type::Map)
            }
            Tok::LBracket => {
                self.bump();
                self.expect(&Tok::Int)?;
                self.expect(&Tok::RBracket)?;
                self.expect(&Tok::Int)?;
                Ok(Type::Map)
            }
            _ => self.error("type"),
        }
    }

    /// `a, b: int, c: bool`: each name group shares the following type.
    fn typed_idents(&mut self) -> PResult<Vec<VarDecl>> {
        let mut out = Vec::new();
        let mut pending: Vec<(Ident, Span)> = Vec::new();
        loop {
            let span = self.span();
            pending.push((self.ident()?, span));
            if self.eat(&Tok::Colon) {
                let ty = self.ty()?;
                out.extend(pending.drain(..).map(|(name, span)| VarDecl { name, ty, span }));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            } else if !self.eat(&Tok::Comma) {
                return self.error("`:`");
            }
        }
        Ok(out)
    }

    fn params(&mut self) -> PResult<Vec<VarDecl>> {
        self.expect(&Tok::LParen)?;
        if self.eat(&Tok::RParen) {
            return Ok(Vec::new());
        }
        let ps = self.typed_idents()?;
        self.expect(&Tok::RParen)?;
        Ok(ps)
    }

    fn function(&mut self) -> PResult<FunctionDecl> {
        let start = self.span();
        self.expect(&Tok::Function)?;
        let name = self.ident()?;
        let params = self.params()?;
        let ret = if self.eat(&Tok::Returns) {
            self.expect(&Tok::LParen)?;
            if matches!(self.peek(), Tok::Ident(_)) && self.peek_at(1) == &Tok::Colon {
                self.bump();
                self.bump();
            }
            let t = self.ty()?;
            self.expect(&Tok::RParen)?;
            t
        } else {
            self.expect(&Tok::Colon)?;
            self.ty()?
        };
        let body = if self.eat(&Tok::LBrace) {
            let e = self.expr()?;
            self.expect(&Tok::RBrace)?;
            Some(e)
        } else {
            None
        };
        if body.is_none() {
            self.expect(&Tok::Semi)?;
        } else {
            self.eat(&Tok::Semi);
        }
        Ok(FunctionDecl { name, params, ret, body, span: start.to(self.prev_span()) })
    }

    fn procedure(&mut self) -> PResult<ProcedureDecl> {
        let start = self.span();
        self.expect(&Tok::Procedure)?;
        let name = self.ident()?;
        let ins = self.params()?;
        let outs = if self.eat(&Tok::Returns) { self.params()? } else { Vec::new() };
        self.eat(&Tok::Semi);
        let mut requires = Vec::new();
        let mut ensures = Vec::new();
        let mut modifies = Vec::new();
        loop {
            match self.peek() {
                Tok::Requires => {
                    self.bump();
                    requires.push(self.expr()?);
                    self.expect(&Tok::Semi)?;
                }
                Tok::Ensures => {
                    self.bump();
                    ensures.push(self.expr()?);
                    self.expect(&Tok::Semi)?;
                }
                Tok::Modifies => {
                    self.bump();
                    modifies.push(self.ident()?);
                    while self.eat(&Tok::Comma) {
                        modifies.push(self.ident()?);
                    }
                    self.expect(&Tok::Semi)?;
                }
                _ => break,
            }
        }
        let body = if self.peek() == &Tok::LBrace { Some(self.body()?) } else { None };
        Ok(ProcedureDecl {
            name,
            ins,
            outs,
            requires,
            ensures,
            modifies,
            body,
            span: start.to(self.prev_span()),
        })
    }

    fn body(&mut self) -> PResult<Body> {
        self.expect(&Tok::LBrace)?;
        let mut locals = Vec::new();
        while self.eat(&Tok::Var) {
            locals.extend(self.typed_idents()?);
            self.expect(&Tok::Semi)?;
        }
        let stmts = self.stmts_until_rbrace()?;
        Ok(Body { locals, stmts })
    }

    // ---- statements ----

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect(&Tok::LBrace)?;
        self.stmts_until_rbrace()
    }

    fn stmts_until_rbrace(&mut self) -> PResult<Vec<Stmt>> {
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return self.error("`}`");
            }
            self.stmt(&mut out)?;
        }
        Ok(out)
    }

    fn stmt(&mut self, out: &mut Vec<Stmt>) -> PResult<()> {
        let start = self.span();
        let kind = match self.peek().clone() {
            Tok::Assert | Tok::Assume => {
                let is_assert = self.bump() == Tok::Assert;
                let e = self.expr()?;
                self.expect(&Tok::Semi)?;
                if is_assert {
                    StmtKind::Assert(e)
                } else {
                    StmtKind::Assume(e)
                }
            }
            Tok::Havoc => {
                self.bump();
                let mut names = vec![self.ident()?];
                while self.eat(&Tok::Comma) {
                    names.push(self.ident()?);
                }
                self.expect(&Tok::Semi)?;
                let span = start.to(self.prev_span());
                out.extend(names.into_iter().map(|n| Stmt { kind: StmtKind::Havoc(n), span }));
                return Ok(());
            }
            Tok::Call => {
                self.bump();
                let first = self.ident()?;
                let (outs, callee) = if self.peek() == &Tok::LParen {
                    (Vec::new(), first)
                } else {
                    let mut outs = vec![first];
                    while self.eat(&Tok::Comma) {
                        outs.push(self.ident()?);
                    }
                    self.expect(&Tok::Assign)?;
                    (outs, self.ident()?)
                };
                let args = self.args()?;
                self.expect(&Tok::Semi)?;
                StmtKind::Call { outs, callee, args }
            }
            Tok::If => self.if_stmt()?,
            Tok::While => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let guard = self.expr()?;
                self.expect(&Tok::RParen)?;
                let mut invariants = Vec::new();
                while self.eat(&Tok::Invariant) {
                    invariants.push(self.expr()?);
                    self.expect(&Tok::Semi)?;
                }
                let body = self.block()?;
                StmtKind::While { guard, invariants, body }
            }
            Tok::Ident(name) => {
                let name_span = self.span();
                self.bump();
                let kind = if self.eat(&Tok::LBracket) {
                    let index = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    self.expect(&Tok::Assign)?;
                    let value = self.expr()?;
                    let map = Expr::new(ExprKind::Var(name.clone()), name_span);
                    let span = name_span.to(value.span);
                    let update = Expr::new(
                        ExprKind::Store(Box::new(map), Box::new(index), Box::new(value)),
                        span,
                    );
                    StmtKind::Assign(name, update)
                } else {
                    self.expect(&Tok::Assign)?;
                    StmtKind::Assign(name, self.expr()?)
                };
                self.expect(&Tok::Semi)?;
                kind
            }
            _ => return self.error("statement"),
        };
        out.push(Stmt { kind, span: start.to(self.prev_span()) });
        Ok(())
    }

    fn if_stmt(&mut self) -> PResult<StmtKind> {
        self.expect(&Tok::If)?;
        self.expect(&Tok::LParen)?;
        let cond = self.expr()?;
        self.expect(&Tok::RParen)?;
        let then_block = self.block()?;
        let else_block = if self.eat(&Tok::Else) {
            if self.peek() == &Tok::If {
                let start = self.span();
                let kind = self.if_stmt()?;
                vec![Stmt { kind, span: start.to(self.prev_span()) }]
            } else {
                self.block()?
            }
        } else {
            Vec::new()
        };
        Ok(StmtKind::If { cond, then_block, else_block })
    }

    fn args(&mut self) -> PResult<Vec<Expr>> {
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        if self.eat(&Tok::RParen) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(args)
    }

    // ---- expressions ----

    fn expr(&mut self) -> PResult<Expr> {
        if matches!(self.peek(), Tok::Forall | Tok::Exists) {
            return self.quantifier();
        }
        self.iff()
    }

    fn quantifier(&mut self) -> PResult<Expr> {
        let start = self.span();
        let q = if self.bump() == Tok::Forall { Quantifier::Forall } else { Quantifier::Exists };
        let mut binders = Vec::new();
        let mut pending: Vec<(Ident, Span)> = Vec::new();
        loop {
            let span = self.span();
            pending.push((self.ident()?, span));
            if self.eat(&Tok::Colon) {
                let ty = self.ty()?;
                binders.extend(pending.drain(..).map(|(name, span)| Binder { name, ty, span }));
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        // untyped binders range over integers
        binders.extend(pending.drain(..).map(|(name, span)| Binder { name, ty: Type::Int, span }));
        self.expect(&Tok::ColonColon)?;
        let body = self.expr()?;
        let span = start.to(body.span);
        Ok(Expr::new(ExprKind::Quant(q, binders, Box::new(body)), span))
    }

    fn binop(op: BinOp, l: Expr, r: Expr) -> Expr {
        let span = l.span.to(r.span);
        Expr::new(ExprKind::Binary(op, Box::new(l), Box::new(r)), span)
    }

    /// Right operand of a binary operator; a quantifier there extends to the
    /// end of the enclosing expression.
    fn operand(&mut self, next: fn(&mut Self) -> PResult<Expr>) -> PResult<Expr> {
        if matches!(self.peek(), Tok::Forall | Tok::Exists) {
            self.quantifier()
        } else {
            next(self)
        }
    }

    fn iff(&mut self) -> PResult<Expr> {
        let mut lhs = self.implies()?;
        while self.eat(&Tok::Iff) {
            let rhs = self.operand(Self::implies)?;
            lhs = Self::binop(BinOp::Iff, lhs, rhs);
        }
        Ok(lhs)
    }

    fn implies(&mut self) -> PResult<Expr> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let rhs = self.operand(Self::implies)?;
            return Ok(Self::binop(BinOp::Implies, lhs, rhs));
        }
        Ok(lhs)
    }

    fn or(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.operand(Self::and)?;
            lhs = Self::binop(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.relational()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.operand(Self::relational)?;
            lhs = Self::binop(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn relational(&mut self) -> PResult<Expr> {
        let lhs = self.additive()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::Neq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.additive()?;
        if matches!(self.peek(), Tok::EqEq | Tok::Neq | Tok::Lt | Tok::Le | Tok::Gt | Tok::Ge) {
            return Err(ParseError::at(
                ParseErrorKind::Syntax,
                "relational operators do not associate; add parentheses",
                self.span(),
            ));
        }
        Ok(Self::binop(op, lhs, rhs))
    }

    fn additive(&mut self) -> PResult<Expr> {
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.multiplicative()?;
            lhs = Self::binop(op, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Self::binop(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek() {
            Tok::Bang => {
                self.bump();
                let e = self.unary()?;
                let span = start.to(e.span);
                Ok(Expr::new(ExprKind::Unary(UnOp::Not, Box::new(e)), span))
            }
            Tok::Minus => {
                self.bump();
                if let Tok::Num(n) = *self.peek() {
                    // `-5` is a literal; `-(5)` is a negation
                    self.bump();
                    return Ok(Expr::new(ExprKind::Int(-n), start.to(self.prev_span())));
                }
                let e = self.unary()?;
                let span = start.to(e.span);
                Ok(Expr::new(ExprKind::Unary(UnOp::Neg, Box::new(e)), span))
            }
            _ => self.postfix(),
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.atom()?;
        while self.eat(&Tok::LBracket) {
            let index = self.expr()?;
            if self.eat(&Tok::Assign) {
                let value = self.expr()?;
                self.expect(&Tok::RBracket)?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(
                    ExprKind::Store(Box::new(e), Box::new(index), Box::new(value)),
                    span,
                );
            } else {
                self.expect(&Tok::RBracket)?;
                let span = e.span.to(self.prev_span());
                e = Expr::new(ExprKind::Select(Box::new(e), Box::new(index)), span);
            }
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<Expr> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                Ok(Expr::new(ExprKind::Int(n), start))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(true), start))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::new(ExprKind::Bool(false), start))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.peek() == &Tok::LParen {
                    let args = self.args()?;
                    Ok(Expr::new(ExprKind::Call(name, args), start.to(self.prev_span())))
                } else {
                    Ok(Expr::new(ExprKind::Var(name), start))
                }
            }
            Tok::LParen => {
                self.bump();
                let mut e = self.expr()?;
                self.expect(&Tok::RParen)?;
                e.span = start.to(self.prev_span());
                Ok(e)
            }
            Tok::Forall | Tok::Exists => self.quantifier(),
            _ => self.error("expression"),
        }
    }
}
