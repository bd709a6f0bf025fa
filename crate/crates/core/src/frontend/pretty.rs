//! Canonical source printer. Printing a parsed program and re-parsing it
//! yields the same tree; parentheses are emitted only where precedence
//! requires them.

use super::ast::*;
use std::fmt::Write;

pub fn print_program(prog: &Program) -> String {
    let mut out = String::new();
    for r in &prog.records {
        print_record(&mut out, r);
        out.push('\n');
    }
    for f in &prog.funcs {
        print_func(&mut out, f);
        out.push('\n');
    }
    out
}

pub fn print_expr(e: &Expr) -> String {
    let mut s = String::new();
    expr(&mut s, e, 0);
    s
}

fn print_record(out: &mut String, r: &RecordDef) {
    let _ = writeln!(out, "qstruct {} {{", r.name.name);
    for (name, ty) in &r.fields {
        let _ = writeln!(out, "    {}: {};", name.name, qtype(ty));
    }
    out.push_str("}\n");
}

fn print_func(out: &mut String, f: &FuncDef) {
    let params: Vec<String> = f.params.iter().map(param).collect();
    let _ = write!(out, "qfunc {}({})", f.name.name, params.join(", "));
    block(out, &f.body, 0);
    out.push('\n');
}

fn param(p: &Param) -> String {
    let out = if p.output { "output " } else { "" };
    format!("{}: {}{}", p.name.name, out, ptype(&p.ty))
}

fn ptype(ty: &ParamType) -> String {
    match ty {
        ParamType::Quantum(q) => qtype(q),
        ParamType::Classical(c) => ctype(c),
        ParamType::Function(tys) => {
            let inner: Vec<String> = tys.iter().map(qtype).collect();
            format!("qfunc ({})", inner.join(", "))
        }
    }
}

fn qtype(ty: &QType) -> String {
    match ty {
        QType::Bit => "qbit".into(),
        QType::Num { size: None, .. } => "qnum".into(),
        QType::Num { size: Some(sz), layout: None } => format!("qnum[{}]", print_expr(sz)),
        QType::Num { size: Some(sz), layout: Some((signed, frac)) } => format!(
            "qnum[{}, {}, {}]",
            print_expr(sz),
            if *signed { "signed" } else { "unsigned" },
            print_expr(frac)
        ),
        QType::Array { elem, len: None } => format!("qarray[{}]", qtype(elem)),
        QType::Array { elem, len: Some(n) } => {
            format!("qarray[{}, {}]", qtype(elem), print_expr(n))
        }
        QType::Named(id) => id.name.clone(),
    }
}

fn ctype(ty: &CType) -> String {
    match ty {
        CType::Int => "int".into(),
        CType::Real => "real".into(),
        CType::Array { elem, len } => format!("array[{}, {}]", ctype(elem), print_expr(len)),
    }
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn block(out: &mut String, b: &Block, level: usize) {
    out.push_str(" {\n");
    for s in &b.stmts {
        stmt(out, s, level + 1);
    }
    indent(out, level);
    out.push('}');
}

fn stmt(out: &mut String, s: &Stmt, level: usize) {
    indent(out, level);
    match &s.kind {
        StmtKind::VarDecl { name, ty } => {
            let _ = writeln!(out, "{}: {};", name.name, qtype(ty));
        }
        StmtKind::Allocate { path } => {
            let _ = writeln!(out, "allocate({});", print_path(path));
        }
        StmtKind::AssignOut { path, expr } => {
            let _ = writeln!(out, "{} |= {};", print_path(path), print_expr(expr));
        }
        StmtKind::XorAssign { path, expr } => {
            let _ = writeln!(out, "{} ^= {};", print_path(path), print_expr(expr));
        }
        StmtKind::AddAssign { path, expr } => {
            let _ = writeln!(out, "{} += {};", print_path(path), print_expr(expr));
        }
        StmtKind::Phase { expr, angle } => {
            let _ = writeln!(out, "phase({}, {});", print_expr(expr), print_expr(angle));
        }
        StmtKind::AssignAmplitude { expr, indicator } => {
            let _ = writeln!(out, "assign_amplitude({}, {});", print_expr(expr), print_path(indicator));
        }
        StmtKind::Control { cond, body } => {
            let _ = write!(out, "control ({})", print_expr(cond));
            block(out, body, level);
            out.push('\n');
        }
        StmtKind::Repeat { var, count, body } => {
            let _ = write!(out, "repeat ({}, {})", var.name, print_expr(count));
            block(out, body, level);
            out.push('\n');
        }
        StmtKind::WithinApply { within, apply } => {
            out.push_str("within");
            block(out, within, level);
            out.push_str(" apply");
            block(out, apply, level);
            out.push('\n');
        }
        StmtKind::Invert { body } => {
            out.push_str("invert");
            block(out, body, level);
            out.push('\n');
        }
        StmtKind::Power { count, body } => {
            let _ = write!(out, "power ({})", print_expr(count));
            block(out, body, level);
            out.push('\n');
        }
        StmtKind::Call { name, args } => {
            let rendered: Vec<String> = args
                .iter()
                .map(|a| match a {
                    Arg::Expr(e) => print_expr(e),
                    Arg::Lambda(l) => {
                        let ps: Vec<&str> = l.params.iter().map(|p| p.name.as_str()).collect();
                        let mut s = format!("|{}|", ps.join(", "));
                        block(&mut s, &l.body, level);
                        s
                    }
                })
                .collect();
            let _ = writeln!(out, "{}({});", name.name, rendered.join(", "));
        }
    }
}

pub fn print_path(p: &Path) -> String {
    let mut s = p.base.name.clone();
    for seg in &p.segs {
        match seg {
            PathSeg::Field(f) => {
                s.push('.');
                s.push_str(&f.name);
            }
            PathSeg::Index(e) => {
                let _ = write!(s, "[{}]", print_expr(e));
            }
        }
    }
    s
}

/// `prec` is the minimum precedence the surrounding context demands; nodes
/// that bind looser get wrapped in parentheses.
fn expr(out: &mut String, e: &Expr, prec: u8) {
    match &e.kind {
        ExprKind::Number { text, .. } => out.push_str(text),
        ExprKind::Path(p) => out.push_str(&print_path(p)),
        ExprKind::Call { name, args } => {
            out.push_str(&name.name);
            out.push('(');
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                expr(out, a, 0);
            }
            out.push(')');
        }
        ExprKind::Unary(op, child) => {
            // Unary binds tighter than every binary operator.
            let need = prec > 12;
            if need {
                out.push('(');
            }
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::BitNot => "~",
                UnOp::Not => "not ",
            });
            expr(out, child, 12);
            if need {
                out.push(')');
            }
        }
        ExprKind::Binary(op, l, r) => {
            let p = op.precedence();
            let need = prec > p;
            if need {
                out.push('(');
            }
            let (lp, rp) = if op.right_assoc() { (p + 1, p) } else { (p, p + 1) };
            expr(out, l, lp);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            expr(out, r, rp);
            if need {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::parser::{parse, parse_expr_str};
    use super::*;

    fn roundtrip(src: &str) {
        let e1 = parse_expr_str(src).unwrap();
        let printed = print_expr(&e1);
        let e2 = parse_expr_str(&printed).unwrap();
        assert_eq!(print_expr(&e2), printed, "print not stable for {src}");
    }

    #[test]
    fn minimal_parens() {
        let e = parse_expr_str("(a + b) * c").unwrap();
        assert_eq!(print_expr(&e), "(a + b) * c");
        let e = parse_expr_str("a + (b * c)").unwrap();
        assert_eq!(print_expr(&e), "a + b * c");
        let e = parse_expr_str("-(x**2)").unwrap();
        assert_eq!(print_expr(&e), "-(x ** 2)");
        let e = parse_expr_str("-x**2").unwrap();
        assert_eq!(print_expr(&e), "-x ** 2");
        let e = parse_expr_str("x ** (2 ** 3)").unwrap();
        assert_eq!(print_expr(&e), "x ** 2 ** 3");
        let e = parse_expr_str("(x ** 2) ** 3").unwrap();
        assert_eq!(print_expr(&e), "(x ** 2) ** 3");
    }

    #[test]
    fn expr_roundtrips() {
        for src in [
            "x - 1/3 * x**3 + 2/15 * x**5",
            "(a[0] < a[1]) & (a[1] < a[2])",
            "2*v.a + 3*v.b <= 12",
            "not (a and b) or c xor d",
            "~(a ^ b) | c & d",
            "a << 2 >> 1",
            "-(-x)",
        ] {
            roundtrip(src);
        }
    }

    #[test]
    fn program_print_is_stable() {
        let src = r#"
            qstruct S { a: qnum[2]; b: qarray[qbit, 3]; }
            qfunc helper(x: qnum, f: qfunc (qbit)) { }
            qfunc main(s: output S, k: int, cs: array[real, 4]) {
                allocate(s);
                within { s.a += 1; } apply { control (s.b[0]) { Z(s.b[1]); } }
                repeat (i, 3) { phase(s.a ** 2, 3.14 / 4); }
                f(|t| { X(t); });
            }
        "#;
        let p1 = parse(src).unwrap();
        let printed = print_program(&p1);
        let p2 = parse(&printed).unwrap();
        assert_eq!(print_program(&p2), printed);
    }
}
