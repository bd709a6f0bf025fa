//! Recursive-descent parser. Fails fast with a positioned diagnostic; any
//! input either parses to a [`Program`] or reports one error, never panics.

use super::ast::*;
use super::lexer::tokenize;
use super::token::{Keyword, Token, TokenKind};
use crate::diag::{Diagnostic, Span};

pub fn parse(src: &str) -> Result<Program, Diagnostic> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    p.program()
}

/// Parse a single expression (used by tests and the argument parser).
pub fn parse_expr_str(src: &str) -> Result<Expr, Diagnostic> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0 };
    let e = p.expr()?;
    p.expect_eof()?;
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, Diagnostic>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_kind(&self) -> &TokenKind {
        &self.peek().kind
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek_kind() == kind
    }

    fn at_kw(&self, kw: Keyword) -> bool {
        matches!(self.peek_kind(), TokenKind::Keyword(k) if *k == kw)
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, kind: TokenKind, what: &str) -> PResult<Token> {
        if self.at(&kind) {
            Ok(self.bump())
        } else {
            Err(self.err_here(format!("expected {what}, found {}", self.peek_kind())))
        }
    }

    fn expect_kw(&mut self, kw: Keyword) -> PResult<Token> {
        if self.at_kw(kw) {
            Ok(self.bump())
        } else {
            Err(self.err_here(format!("expected '{}', found {}", kw.as_str(), self.peek_kind())))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<Ident> {
        match self.peek_kind().clone() {
            TokenKind::Ident(name) => {
                let t = self.bump();
                Ok(Ident { name, span: t.span })
            }
            other => Err(self.err_here(format!("expected {what}, found {other}"))),
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if self.at(&TokenKind::Eof) {
            Ok(())
        } else {
            Err(self.err_here(format!("expected end of input, found {}", self.peek_kind())))
        }
    }

    fn err_here(&self, msg: String) -> Diagnostic {
        Diagnostic::error(msg, self.peek().span)
    }

    fn span_here(&self) -> Span {
        self.peek().span
    }

    // ─── declarations ────────────────────────────────────────────────

    fn program(&mut self) -> PResult<Program> {
        let mut records = Vec::new();
        let mut funcs = Vec::new();
        loop {
            if self.at(&TokenKind::Eof) {
                return Ok(Program { records, funcs });
            } else if self.at_kw(Keyword::Qstruct) {
                records.push(self.record_def()?);
            } else if self.at_kw(Keyword::Qfunc) {
                funcs.push(self.func_def()?);
            } else {
                return Err(self.err_here(format!(
                    "expected 'qfunc' or 'qstruct' at top level, found {}",
                    self.peek_kind()
                )));
            }
        }
    }

    fn record_def(&mut self) -> PResult<RecordDef> {
        let start = self.expect_kw(Keyword::Qstruct)?.span;
        let name = self.expect_ident("record name")?;
        self.expect(TokenKind::LBrace, "'{'")?;
        let mut fields = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            let fname = self.expect_ident("field name")?;
            self.expect(TokenKind::Colon, "':'")?;
            let ty = self.qtype()?;
            self.expect(TokenKind::Semi, "';'")?;
            fields.push((fname, ty));
        }
        let end = self.expect(TokenKind::RBrace, "'}'")?.span;
        Ok(RecordDef { name, fields, span: start.to(end) })
    }

    fn func_def(&mut self) -> PResult<FuncDef> {
        let start = self.expect_kw(Keyword::Qfunc)?.span;
        let name = self.expect_ident("function name")?;
        self.expect(TokenKind::LParen, "'('")?;
        let mut params = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                params.push(self.param()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(TokenKind::RParen, "')'")?;
        let body = self.block()?;
        let span = start.to(body.span);
        Ok(FuncDef { name, params, body, span })
    }

    fn param(&mut self) -> PResult<Param> {
        let name = self.expect_ident("parameter name")?;
        self.expect(TokenKind::Colon, "':'")?;
        let output = if self.at_kw(Keyword::Output) {
            self.bump();
            true
        } else {
            false
        };
        let ty = match self.peek_kind() {
            TokenKind::Keyword(Keyword::Int) | TokenKind::Keyword(Keyword::Real)
            | TokenKind::Keyword(Keyword::Array) => ParamType::Classical(self.ctype()?),
            TokenKind::Keyword(Keyword::Qfunc) => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let mut tys = Vec::new();
                if !self.at(&TokenKind::RParen) {
                    loop {
                        tys.push(self.qtype()?);
                        if !self.eat(&TokenKind::Comma) {
                            break;
                        }
                    }
                }
                self.expect(TokenKind::RParen, "')'")?;
                ParamType::Function(tys)
            }
            _ => ParamType::Quantum(self.qtype()?),
        };
        if output && !matches!(ty, ParamType::Quantum(_)) {
            return Err(Diagnostic::error(
                "'output' applies only to quantum parameters",
                name.span,
            ));
        }
        let span = name.span;
        Ok(Param { name, output, ty, span })
    }

    fn qtype(&mut self) -> PResult<QType> {
        match self.peek_kind().clone() {
            TokenKind::Keyword(Keyword::Qbit) => {
                self.bump();
                Ok(QType::Bit)
            }
            TokenKind::Keyword(Keyword::Qnum) => {
                self.bump();
                if !self.eat(&TokenKind::LBracket) {
                    return Ok(QType::Num { size: None, layout: None });
                }
                let size = self.expr()?;
                let layout = if self.eat(&TokenKind::Comma) {
                    let signed = if self.at_kw(Keyword::Signed) {
                        self.bump();
                        true
                    } else if self.at_kw(Keyword::Unsigned) {
                        self.bump();
                        false
                    } else {
                        return Err(self.err_here(format!(
                            "expected 'signed' or 'unsigned', found {}",
                            self.peek_kind()
                        )));
                    };
                    self.expect(TokenKind::Comma, "','")?;
                    let frac = self.expr()?;
                    Some((signed, Box::new(frac)))
                } else {
                    None
                };
                self.expect(TokenKind::RBracket, "']'")?;
                Ok(QType::Num { size: Some(Box::new(size)), layout })
            }
            TokenKind::Keyword(Keyword::Qarray) => {
                self.bump();
                self.expect(TokenKind::LBracket, "'['")?;
                let elem = self.qtype()?;
                let len = if self.eat(&TokenKind::Comma) {
                    Some(Box::new(self.expr()?))
                } else {
                    None
                };
                self.expect(TokenKind::RBracket, "']'")?;
                Ok(QType::Array { elem: Box::new(elem), len })
            }
            TokenKind::Ident(name) => {
                let t = self.bump();
                Ok(QType::Named(Ident { name, span: t.span }))
            }
            other => Err(self.err_here(format!("expected a quantum type, found {other}"))),
        }
    }

    fn ctype(&mut self) -> PResult<CType> {
        match self.peek_kind() {
            TokenKind::Keyword(Keyword::Int) => {
                self.bump();
                Ok(CType::Int)
            }
            TokenKind::Keyword(Keyword::Real) => {
                self.bump();
                Ok(CType::Real)
            }
            TokenKind::Keyword(Keyword::Array) => {
                self.bump();
                self.expect(TokenKind::LBracket, "'['")?;
                let elem = self.ctype()?;
                self.expect(TokenKind::Comma, "','")?;
                let len = self.expr()?;
                self.expect(TokenKind::RBracket, "']'")?;
                Ok(CType::Array { elem: Box::new(elem), len: Box::new(len) })
            }
            other => Err(self.err_here(format!("expected a classical type, found {other}"))),
        }
    }

    // ─── statements ──────────────────────────────────────────────────

    fn block(&mut self) -> PResult<Block> {
        let start = self.expect(TokenKind::LBrace, "'{'")?.span;
        let mut stmts = Vec::new();
        while !self.at(&TokenKind::RBrace) {
            if self.at(&TokenKind::Eof) {
                return Err(self.err_here("unclosed block, expected '}'".into()));
            }
            stmts.push(self.stmt()?);
        }
        let end = self.expect(TokenKind::RBrace, "'}'")?.span;
        Ok(Block { stmts, span: start.to(end) })
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        let start = self.span_here();
        let kind = match self.peek_kind().clone() {
            TokenKind::Keyword(Keyword::Allocate) => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let path = self.path()?;
                self.expect(TokenKind::RParen, "')'")?;
                self.expect(TokenKind::Semi, "';'")?;
                StmtKind::Allocate { path }
            }
            TokenKind::Keyword(Keyword::Phase) => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let expr = self.expr()?;
                self.expect(TokenKind::Comma, "','")?;
                let angle = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                self.expect(TokenKind::Semi, "';'")?;
                StmtKind::Phase { expr, angle }
            }
            TokenKind::Keyword(Keyword::AssignAmplitude) => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let expr = self.expr()?;
                self.expect(TokenKind::Comma, "','")?;
                let indicator = self.path()?;
                self.expect(TokenKind::RParen, "')'")?;
                self.expect(TokenKind::Semi, "';'")?;
                StmtKind::AssignAmplitude { expr, indicator }
            }
            TokenKind::Keyword(Keyword::Control) => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let cond = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                let body = self.block()?;
                StmtKind::Control { cond, body }
            }
            TokenKind::Keyword(Keyword::Repeat) => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let var = self.expect_ident("iteration variable")?;
                self.expect(TokenKind::Comma, "','")?;
                let count = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                let body = self.block()?;
                StmtKind::Repeat { var, count, body }
            }
            TokenKind::Keyword(Keyword::Within) => {
                self.bump();
                let within = self.block()?;
                self.expect_kw(Keyword::Apply)?;
                let apply = self.block()?;
                StmtKind::WithinApply { within, apply }
            }
            TokenKind::Keyword(Keyword::Invert) => {
                self.bump();
                let body = self.block()?;
                StmtKind::Invert { body }
            }
            TokenKind::Keyword(Keyword::Power) => {
                self.bump();
                self.expect(TokenKind::LParen, "'('")?;
                let count = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                let body = self.block()?;
                StmtKind::Power { count, body }
            }
            TokenKind::Ident(name) => {
                // Disambiguate: `x: qtype;` declares, `f(...)` calls,
                // anything else is a path followed by an assignment operator.
                let next = self
                    .tokens
                    .get(self.pos + 1)
                    .map(|t| &t.kind)
                    .unwrap_or(&TokenKind::Eof);
                match next {
                    TokenKind::Colon => {
                        let nm = self.bump();
                        self.bump();
                        let ty = self.qtype()?;
                        self.expect(TokenKind::Semi, "';'")?;
                        StmtKind::VarDecl { name: Ident { name, span: nm.span }, ty }
                    }
                    TokenKind::LParen => {
                        let nm = self.bump();
                        self.bump();
                        let mut args = Vec::new();
                        if !self.at(&TokenKind::RParen) {
                            loop {
                                args.push(self.arg()?);
                                if !self.eat(&TokenKind::Comma) {
                                    break;
                                }
                            }
                        }
                        self.expect(TokenKind::RParen, "')'")?;
                        self.expect(TokenKind::Semi, "';'")?;
                        StmtKind::Call { name: Ident { name, span: nm.span }, args }
                    }
                    _ => {
                        let path = self.path()?;
                        let op = self.bump();
                        let make = |path, expr| match op.kind {
                            TokenKind::PipeEq => Ok(StmtKind::AssignOut { path, expr }),
                            TokenKind::CaretEq => Ok(StmtKind::XorAssign { path, expr }),
                            TokenKind::PlusEq => Ok(StmtKind::AddAssign { path, expr }),
                            ref other => Err(Diagnostic::error(
                                format!("expected '|=', '^=' or '+=' after target, found {other}"),
                                op.span,
                            )),
                        };
                        let expr = self.expr()?;
                        self.expect(TokenKind::Semi, "';'")?;
                        make(path, expr)?
                    }
                }
            }
            other => {
                return Err(self.err_here(format!("expected a statement, found {other}")));
            }
        };
        let span = start.to(self.tokens[self.pos.saturating_sub(1)].span);
        Ok(Stmt { kind, span })
    }

    fn arg(&mut self) -> PResult<Arg> {
        if self.at(&TokenKind::Pipe) {
            let start = self.bump().span;
            let mut params = Vec::new();
            if !self.at(&TokenKind::Pipe) {
                loop {
                    params.push(self.expect_ident("lambda parameter")?);
                    if !self.eat(&TokenKind::Comma) {
                        break;
                    }
                }
            }
            self.expect(TokenKind::Pipe, "'|'")?;
            let body = self.block()?;
            let span = start.to(body.span);
            Ok(Arg::Lambda(Lambda { params, body, span }))
        } else {
            Ok(Arg::Expr(self.expr()?))
        }
    }

    fn path(&mut self) -> PResult<Path> {
        let base = self.expect_ident("variable name")?;
        let start = base.span;
        let mut segs = Vec::new();
        let mut end = start;
        loop {
            if self.eat(&TokenKind::Dot) {
                let f = self.expect_ident("field name")?;
                end = f.span;
                segs.push(PathSeg::Field(f));
            } else if self.eat(&TokenKind::LBracket) {
                let e = self.expr()?;
                end = self.expect(TokenKind::RBracket, "']'")?.span;
                segs.push(PathSeg::Index(e));
            } else {
                break;
            }
        }
        Ok(Path { base, segs, span: start.to(end) })
    }

    // ─── expressions ─────────────────────────────────────────────────

    fn expr(&mut self) -> PResult<Expr> {
        self.expr_prec(0)
    }

    fn expr_prec(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.binop_at() {
                Some(op) if op.precedence() >= min_prec => op,
                _ => break,
            };
            self.bump();
            let next_min = if op.right_assoc() { op.precedence() } else { op.precedence() + 1 };
            let rhs = self.expr_prec(next_min)?;
            let span = lhs.span.to(rhs.span);
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span };
        }
        Ok(lhs)
    }

    fn binop_at(&self) -> Option<BinOp> {
        Some(match self.peek_kind() {
            TokenKind::StarStar => BinOp::Pow,
            TokenKind::Star => BinOp::Mul,
            TokenKind::Slash => BinOp::Div,
            TokenKind::Plus => BinOp::Add,
            TokenKind::Minus => BinOp::Sub,
            TokenKind::Shl => BinOp::Shl,
            TokenKind::Shr => BinOp::Shr,
            TokenKind::Lt => BinOp::Lt,
            TokenKind::Le => BinOp::Le,
            TokenKind::Gt => BinOp::Gt,
            TokenKind::Ge => BinOp::Ge,
            TokenKind::EqEq => BinOp::Eq,
            TokenKind::Ne => BinOp::Ne,
            TokenKind::Amp => BinOp::BitAnd,
            TokenKind::Caret => BinOp::BitXor,
            TokenKind::Pipe => BinOp::BitOr,
            TokenKind::Keyword(Keyword::And) => BinOp::And,
            TokenKind::Keyword(Keyword::Xor) => BinOp::Xor,
            TokenKind::Keyword(Keyword::Or) => BinOp::Or,
            _ => return None,
        })
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = match self.peek_kind() {
            TokenKind::Minus => Some(UnOp::Neg),
            TokenKind::Tilde => Some(UnOp::BitNot),
            TokenKind::Keyword(Keyword::Not) => Some(UnOp::Not),
            _ => None,
        };
        if let Some(op) = op {
            let start = self.bump().span;
            let child = self.unary()?;
            let span = start.to(child.span);
            return Ok(Expr { kind: ExprKind::Unary(op, Box::new(child)), span });
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek_kind().clone() {
            TokenKind::Number { text, value } => {
                let t = self.bump();
                Ok(Expr { kind: ExprKind::Number { text, value }, span: t.span })
            }
            TokenKind::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(TokenKind::RParen, "')'")?;
                Ok(e)
            }
            TokenKind::Ident(name) => {
                let next = self
                    .tokens
                    .get(self.pos + 1)
                    .map(|t| &t.kind)
                    .unwrap_or(&TokenKind::Eof);
                if *next == TokenKind::LParen {
                    let nm = self.bump();
                    self.bump();
                    let mut args = Vec::new();
                    if !self.at(&TokenKind::RParen) {
                        loop {
                            args.push(self.expr()?);
                            if !self.eat(&TokenKind::Comma) {
                                break;
                            }
                        }
                    }
                    let end = self.expect(TokenKind::RParen, "')'")?.span;
                    let span = nm.span.to(end);
                    return Ok(Expr {
                        kind: ExprKind::Call { name: Ident { name, span: nm.span }, args },
                        span,
                    });
                }
                let p = self.path()?;
                let span = p.span;
                Ok(Expr { kind: ExprKind::Path(p), span })
            }
            other => Err(self.err_here(format!("expected an expression, found {other}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expr(src: &str) -> Expr {
        parse_expr_str(src).unwrap()
    }

    fn shape(e: &Expr) -> String {
        match &e.kind {
            ExprKind::Number { text, .. } => text.clone(),
            ExprKind::Path(p) => {
                let mut s = p.base.name.clone();
                for seg in &p.segs {
                    match seg {
                        PathSeg::Field(f) => {
                            s.push('.');
                            s.push_str(&f.name);
                        }
                        PathSeg::Index(i) => {
                            s = format!("{s}[{}]", shape(i));
                        }
                    }
                }
                s
            }
            ExprKind::Unary(op, c) => {
                let sym = match op {
                    UnOp::Neg => "-",
                    UnOp::BitNot => "~",
                    UnOp::Not => "not ",
                };
                format!("({sym}{})", shape(c))
            }
            ExprKind::Binary(op, l, r) => format!("({} {} {})", shape(l), op.symbol(), shape(r)),
            ExprKind::Call { name, args } => {
                let a: Vec<_> = args.iter().map(shape).collect();
                format!("{}({})", name.name, a.join(", "))
            }
        }
    }

    #[test]
    fn precedence_mul_over_add_and_pow_over_mul() {
        assert_eq!(shape(&expr("a + b * c")), "(a + (b * c))");
        assert_eq!(shape(&expr("1/3 * x**3")), "((1 / 3) * (x ** 3))");
        assert_eq!(shape(&expr("x - 1/3 * x**3 + 2/15 * x**5")),
            "((x - ((1 / 3) * (x ** 3))) + ((2 / 15) * (x ** 5)))");
    }

    #[test]
    fn unary_binds_tighter_than_pow() {
        assert_eq!(shape(&expr("-x**2")), "((-x) ** 2)");
    }

    #[test]
    fn relational_binds_tighter_than_bitand_and_logical() {
        assert_eq!(
            shape(&expr("a < b & b < c")),
            "((a < b) & (b < c))"
        );
        assert_eq!(
            shape(&expr("a < b and b < c or d")),
            "(((a < b) and (b < c)) or d)"
        );
    }

    #[test]
    fn bit_ops_order_and_xor_between_and_or() {
        assert_eq!(shape(&expr("a | b ^ c & d")), "(a | (b ^ (c & d)))");
        assert_eq!(shape(&expr("a and b xor c or d")), "(((a and b) xor c) or d)");
    }

    #[test]
    fn shifts_sit_between_additive_and_relational() {
        assert_eq!(shape(&expr("a + b << 2 < c")), "(((a + b) << 2) < c)");
    }

    #[test]
    fn pow_is_right_associative() {
        assert_eq!(shape(&expr("x ** 2 ** 3")), "(x ** (2 ** 3))");
    }

    #[test]
    fn paths_with_fields_and_indices() {
        assert_eq!(shape(&expr("s.data[i + 1]")), "s.data[(i + 1)]");
        assert_eq!(shape(&expr("v[v.len - label.len + i]")), "v[((v.len - label.len) + i)]");
    }

    #[test]
    fn parses_struct_and_functions() {
        let src = r#"
            qstruct MyStruct {
                data: qarray[qnum[2], 3];
                sum: qnum[4];
            }

            qfunc main(s: output MyStruct) {
                allocate(s);
                hadamard_transform(s.data);
                repeat (i, 3) {
                    s.sum += s.data[i];
                }
            }
        "#;
        let prog = parse(src).unwrap();
        assert_eq!(prog.records.len(), 1);
        assert_eq!(prog.records[0].fields.len(), 2);
        assert_eq!(prog.funcs.len(), 1);
        let main = &prog.funcs[0];
        assert!(main.params[0].output);
        assert_eq!(main.body.stmts.len(), 3);
        assert!(matches!(main.body.stmts[2].kind, StmtKind::Repeat { .. }));
    }

    #[test]
    fn parses_lambda_arguments() {
        let src = r#"
            qfunc main(qba: output qarray[qbit, 2]) {
                allocate(qba);
                flip_phase(|target| { CCX(qba[0], qba[1], target); });
            }
        "#;
        let prog = parse(src).unwrap();
        let StmtKind::Call { args, .. } = &prog.funcs[0].body.stmts[1].kind else {
            panic!("expected call");
        };
        assert!(matches!(args[0], Arg::Lambda(_)));
    }

    #[test]
    fn parses_within_apply_control_power_invert() {
        let src = r#"
            qfunc f(x: qnum, res: qbit) {
                aux: qbit;
                within { aux |= x <= 12; } apply { control (aux) { Z(res); } }
                power (3) { X(res); }
                invert { S(res); }
            }
        "#;
        let prog = parse(src).unwrap();
        let kinds: Vec<_> = prog.funcs[0].body.stmts.iter().map(|s| &s.kind).collect();
        assert!(matches!(kinds[1], StmtKind::WithinApply { .. }));
        assert!(matches!(kinds[2], StmtKind::Power { .. }));
        assert!(matches!(kinds[3], StmtKind::Invert { .. }));
    }

    #[test]
    fn error_positions_point_at_offending_token() {
        let err = parse("qfunc f() { x | 3; }").unwrap_err();
        assert_eq!(err.span.line, 1);
        // The '|' cannot start an assignment statement.
        assert!(err.message.contains("expected"), "{}", err.message);

        let err = parse("qfunc f(x: qnum) { allocate(x) }").unwrap_err();
        assert!(err.message.contains("';'"), "{}", err.message);
    }

    #[test]
    fn qnum_type_forms() {
        let p = parse("qfunc f(a: qnum, b: qnum[2], c: qnum[2, signed, 1]) { }").unwrap();
        let tys: Vec<_> = p.funcs[0]
            .params
            .iter()
            .map(|p| match &p.ty {
                ParamType::Quantum(q) => q.clone(),
                _ => panic!(),
            })
            .collect();
        assert!(matches!(tys[0], QType::Num { size: None, layout: None }));
        assert!(matches!(tys[1], QType::Num { size: Some(_), layout: None }));
        assert!(matches!(tys[2], QType::Num { size: Some(_), layout: Some((true, _)) }));
    }
}
