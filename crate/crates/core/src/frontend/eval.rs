//! Compile-time evaluation of classical expressions: type sizes, repeat
//! counts, rotation angles, constant operands. All arithmetic is exact
//! rational; callers convert to f64 only at the last step (angles).

use super::ast::*;
use crate::diag::{Diagnostic, Span};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use std::collections::HashMap;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(BigRational),
    Array(Vec<Value>),
}

impl Value {
    pub fn int(v: i64) -> Value {
        Value::Num(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn as_num(&self, span: Span) -> Result<&BigRational, Diagnostic> {
        match self {
            Value::Num(n) => Ok(n),
            Value::Array(_) => Err(Diagnostic::error(
                "expected a number, found an array value",
                span,
            )),
        }
    }
}

/// Lexical environment for classical names (constants, repeat variables,
/// classical parameters).
#[derive(Debug, Clone, Default)]
pub struct Env {
    vars: HashMap<String, Value>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn bind(&mut self, name: &str, value: Value) {
        self.vars.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Value> {
        self.vars.get(name)
    }
}

pub fn eval(expr: &Expr, env: &Env) -> Result<Value, Diagnostic> {
    match &expr.kind {
        ExprKind::Number { value, .. } => Ok(Value::Num(value.clone())),
        ExprKind::Path(p) => eval_path(p, env),
        ExprKind::Unary(op, child) => {
            let v = eval(child, env)?;
            let n = v.as_num(child.span)?;
            let out = match op {
                UnOp::Neg => -n,
                UnOp::BitNot => {
                    let i = require_int(n, child.span)?;
                    BigRational::from_integer(-i - BigInt::one())
                }
                UnOp::Not => {
                    let b = require_bool(n, child.span)?;
                    BigRational::from_integer(BigInt::from(!b as u8))
                }
            };
            Ok(Value::Num(out))
        }
        ExprKind::Binary(op, l, r) => {
            let lv = eval(l, env)?;
            let rv = eval(r, env)?;
            let a = lv.as_num(l.span)?;
            let b = rv.as_num(r.span)?;
            eval_binop(*op, a, b, l.span, r.span, expr.span).map(Value::Num)
        }
        ExprKind::Call { name, args } => eval_call(name, args, env, expr.span),
    }
}

fn eval_path(p: &Path, env: &Env) -> Result<Value, Diagnostic> {
    if p.segs.is_empty() && p.base.name == "pi" {
        return Ok(Value::Num(
            BigRational::from_float(std::f64::consts::PI).unwrap(),
        ));
    }
    let mut cur = env
        .get(&p.base.name)
        .ok_or_else(|| {
            Diagnostic::error(format!("unknown name '{}'", p.base.name), p.base.span)
        })?
        .clone();
    for seg in &p.segs {
        match seg {
            PathSeg::Field(f) if f.name == "len" => match cur {
                Value::Array(items) => cur = Value::int(items.len() as i64),
                Value::Num(_) => {
                    return Err(Diagnostic::error("'.len' applies to arrays", f.span))
                }
            },
            PathSeg::Field(f) => {
                return Err(Diagnostic::error(
                    format!("classical values have no field '{}'", f.name),
                    f.span,
                ))
            }
            PathSeg::Index(ie) => {
                let idx = eval_usize(ie, env)?;
                match cur {
                    Value::Array(items) => {
                        if idx >= items.len() {
                            return Err(Diagnostic::error(
                                format!("index {idx} out of bounds for array of length {}", items.len()),
                                ie.span,
                            ));
                        }
                        cur = items[idx].clone();
                    }
                    Value::Num(_) => {
                        return Err(Diagnostic::error("cannot index a number", ie.span))
                    }
                }
            }
        }
    }
    Ok(cur)
}

fn eval_binop(
    op: BinOp,
    a: &BigRational,
    b: &BigRational,
    lspan: Span,
    rspan: Span,
    span: Span,
) -> Result<BigRational, Diagnostic> {
    use BinOp::*;
    let bool_rat = |v: bool| BigRational::from_integer(BigInt::from(v as u8));
    Ok(match op {
        Add => a + b,
        Sub => a - b,
        Mul => a * b,
        Div => {
            if b.is_zero() {
                return Err(Diagnostic::error("division by zero", span));
            }
            a / b
        }
        Pow => {
            let e = require_int(b, rspan)?;
            let e32 = e.to_i32().ok_or_else(|| {
                Diagnostic::error("exponent too large", rspan)
            })?;
            if e32 < 0 && a.is_zero() {
                return Err(Diagnostic::error("zero raised to a negative power", span));
            }
            a.pow(e32)
        }
        Shl | Shr => {
            let base = require_int(a, lspan)?;
            let sh = require_int(b, rspan)?;
            let sh = sh.to_u64().ok_or_else(|| {
                Diagnostic::error("shift amount must be a non-negative integer", rspan)
            })?;
            if sh > 1024 {
                return Err(Diagnostic::error("shift amount too large", rspan));
            }
            let out = if op == Shl { base << sh } else { base >> sh };
            BigRational::from_integer(out)
        }
        Lt => bool_rat(a < b),
        Le => bool_rat(a <= b),
        Gt => bool_rat(a > b),
        Ge => bool_rat(a >= b),
        Eq => bool_rat(a == b),
        Ne => bool_rat(a != b),
        BitAnd | BitOr | BitXor => {
            let x = require_int(a, lspan)?;
            let y = require_int(b, rspan)?;
            let out = match op {
                BitAnd => x & y,
                BitOr => x | y,
                _ => x ^ y,
            };
            BigRational::from_integer(out)
        }
        And | Or | Xor => {
            let x = require_bool(a, lspan)?;
            let y = require_bool(b, rspan)?;
            let out = match op {
                And => x && y,
                Or => x || y,
                _ => x ^ y,
            };
            bool_rat(out)
        }
    })
}

fn eval_call(name: &Ident, args: &[Expr], env: &Env, span: Span) -> Result<Value, Diagnostic> {
    match name.name.as_str() {
        "log2" => {
            if args.len() != 1 {
                return Err(Diagnostic::error("log2 takes exactly one argument", span));
            }
            let v = eval(&args[0], env)?;
            let n = v.as_num(args[0].span)?;
            let i = require_int(n, args[0].span)?;
            if i <= BigInt::zero() {
                return Err(Diagnostic::error("log2 requires a positive argument", span));
            }
            let bits = i.bits();
            // Exact only: reject non-powers-of-two rather than silently rounding.
            if i != (BigInt::one() << (bits - 1)) {
                return Err(Diagnostic::error(
                    format!("log2 argument {i} is not a power of two"),
                    span,
                ));
            }
            Ok(Value::int(bits as i64 - 1))
        }
        other => Err(Diagnostic::error(
            format!("unknown classical function '{other}'"),
            name.span,
        )),
    }
}

fn require_int(n: &BigRational, span: Span) -> Result<BigInt, Diagnostic> {
    if n.is_integer() {
        Ok(n.to_integer())
    } else {
        Err(Diagnostic::error(
            format!("expected an integer, found {n}"),
            span,
        ))
    }
}

fn require_bool(n: &BigRational, span: Span) -> Result<bool, Diagnostic> {
    if n.is_zero() {
        Ok(false)
    } else if n.is_one() {
        Ok(true)
    } else {
        Err(Diagnostic::error(
            format!("logical operators require boolean (0/1) operands, found {n}"),
            span,
        ))
    }
}

pub fn eval_num(expr: &Expr, env: &Env) -> Result<BigRational, Diagnostic> {
    Ok(eval(expr, env)?.as_num(expr.span)?.clone())
}

pub fn eval_int(expr: &Expr, env: &Env) -> Result<BigInt, Diagnostic> {
    let n = eval_num(expr, env)?;
    require_int(&n, expr.span)
}

pub fn eval_usize(expr: &Expr, env: &Env) -> Result<usize, Diagnostic> {
    let i = eval_int(expr, env)?;
    if i.is_negative() {
        return Err(Diagnostic::error(
            format!("expected a non-negative integer, found {i}"),
            expr.span,
        ));
    }
    i.to_usize()
        .ok_or_else(|| Diagnostic::error("value too large", expr.span))
}

pub fn eval_f64(expr: &Expr, env: &Env) -> Result<f64, Diagnostic> {
    let n = eval_num(expr, env)?;
    n.to_f64()
        .ok_or_else(|| Diagnostic::error("value not representable as f64", expr.span))
}

#[cfg(test)]
mod tests {
    use super::super::parser::parse_expr_str;
    use super::*;

    fn ev(src: &str, env: &Env) -> Value {
        eval(&parse_expr_str(src).unwrap(), env).unwrap()
    }

    fn ev_err(src: &str, env: &Env) -> Diagnostic {
        eval(&parse_expr_str(src).unwrap(), env).unwrap_err()
    }

    fn rat(n: i64, d: i64) -> Value {
        Value::Num(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    #[test]
    fn exact_rational_arithmetic() {
        let env = Env::new();
        assert_eq!(ev("1/3 + 1/6", &env), rat(1, 2));
        assert_eq!(ev("2 ** 10", &env), Value::int(1024));
        assert_eq!(ev("2 ** -3", &env), rat(1, 8));
        assert_eq!(ev("0.1 + 0.2", &env), rat(3, 10));
        assert_eq!(ev("7 >> 1", &env), Value::int(3));
        assert_eq!(ev("-7 >> 1", &env), Value::int(-4));
        assert_eq!(ev("3 << 2", &env), Value::int(12));
    }

    #[test]
    fn comparisons_and_logic() {
        let env = Env::new();
        assert_eq!(ev("1 < 2 and 3 <= 3", &env), Value::int(1));
        assert_eq!(ev("1 == 2 or 0 != 1", &env), Value::int(1));
        assert_eq!(ev("(1 < 2) xor (2 < 3)", &env), Value::int(0));
        assert_eq!(ev("not (5 > 4)", &env), Value::int(0));
        assert!(ev_err("2 and 1", &env).message.contains("boolean"));
    }

    #[test]
    fn bitwise_on_integers() {
        let env = Env::new();
        assert_eq!(ev("12 & 10", &env), Value::int(8));
        assert_eq!(ev("12 | 10", &env), Value::int(14));
        assert_eq!(ev("12 ^ 10", &env), Value::int(6));
        assert_eq!(ev("~5", &env), Value::int(-6));
        assert!(ev_err("1.5 & 2", &env).message.contains("integer"));
    }

    #[test]
    fn arrays_len_and_indexing() {
        let mut env = Env::new();
        env.bind(
            "cs",
            Value::Array(vec![rat(1, 4), rat(1, 2), rat(3, 4)]),
        );
        env.bind("i", Value::int(2));
        assert_eq!(ev("cs[1]", &env), rat(1, 2));
        assert_eq!(ev("cs[i]", &env), rat(3, 4));
        assert_eq!(ev("cs.len", &env), Value::int(3));
        assert!(ev_err("cs[3]", &env).message.contains("out of bounds"));
    }

    #[test]
    fn builtins() {
        let env = Env::new();
        assert_eq!(ev("log2(4)", &env), Value::int(2));
        assert_eq!(ev("log2(1)", &env), Value::int(0));
        assert!(ev_err("log2(3)", &env).message.contains("power of two"));
        let Value::Num(p) = ev("pi", &env) else { panic!() };
        assert!((p.to_f64().unwrap() - std::f64::consts::PI).abs() < 1e-15);
        assert!(ev_err("sin(1)", &env).message.contains("unknown classical function"));
    }

    #[test]
    fn division_errors() {
        let env = Env::new();
        assert!(ev_err("1 / 0", &env).message.contains("division by zero"));
        assert!(ev_err("0 ** -1", &env).message.contains("negative power"));
    }
}
