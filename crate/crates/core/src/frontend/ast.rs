//! Abstract syntax. Every node keeps its source span.

use crate::diag::Span;
use num::BigRational;

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub records: Vec<RecordDef>,
    pub funcs: Vec<FuncDef>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ident {
    pub name: String,
    pub span: Span,
}

/// `qstruct Name { field: qtype; ... }`
#[derive(Debug, Clone, PartialEq)]
pub struct RecordDef {
    pub name: Ident,
    pub fields: Vec<(Ident, QType)>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuncDef {
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: Block,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub output: bool,
    pub ty: ParamType,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamType {
    Quantum(QType),
    Classical(CType),
    /// `qfunc(qtype, ...)` — an operand parameter bound by a lambda at the
    /// call site. All its parameters are in-parameters.
    Function(Vec<QType>),
}

/// Syntactic quantum types. Size/length expressions stay unevaluated until
/// semantic analysis binds classical values.
#[derive(Debug, Clone, PartialEq)]
pub enum QType {
    Bit,
    /// `qnum` (fully inferred), `qnum[size]` (unsigned integer), or
    /// `qnum[size, signed|unsigned, fraction_digits]`.
    Num { size: Option<Box<Expr>>, layout: Option<(bool, Box<Expr>)> },
    /// `qarray[elem]` (length from context) or `qarray[elem, len]`.
    Array { elem: Box<QType>, len: Option<Box<Expr>> },
    Named(Ident),
}

#[derive(Debug, Clone, PartialEq)]
pub enum CType {
    Int,
    Real,
    /// `array[ctype, len]`
    Array { elem: Box<CType>, len: Box<Expr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    /// `name: qtype;`
    VarDecl { name: Ident, ty: QType },
    /// `allocate(path);`
    Allocate { path: Path },
    /// `path |= expr;` — out-of-place digital assignment.
    AssignOut { path: Path, expr: Expr },
    /// `path ^= expr;`
    XorAssign { path: Path, expr: Expr },
    /// `path += expr;`
    AddAssign { path: Path, expr: Expr },
    /// `phase(expr, angle);`
    Phase { expr: Expr, angle: Expr },
    /// `assign_amplitude(expr, path);`
    AssignAmplitude { expr: Expr, indicator: Path },
    /// `control (cond) { ... }`
    Control { cond: Expr, body: Block },
    /// `repeat (i, count) { ... }`
    Repeat { var: Ident, count: Expr, body: Block },
    /// `within { ... } apply { ... }`
    WithinApply { within: Block, apply: Block },
    /// `invert { ... }`
    Invert { body: Block },
    /// `power (k) { ... }`
    Power { count: Expr, body: Block },
    /// `name(arg, ...);`
    Call { name: Ident, args: Vec<Arg> },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Expr(Expr),
    Lambda(Lambda),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lambda {
    pub params: Vec<Ident>,
    pub body: Block,
    pub span: Span,
}

/// `base(.field | [index])*` — also covers trailing `.size` / `.len`
/// attribute reads, which are resolved during semantic analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub base: Ident,
    pub segs: Vec<PathSeg>,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PathSeg {
    Field(Ident),
    Index(Expr),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number { text: String, value: BigRational },
    Path(Path),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Classical builtin invocation inside a classical expression
    /// (currently just `log2`).
    Call { name: Ident, args: Vec<Expr> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    BitNot,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Shl,
    Shr,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    BitAnd,
    BitXor,
    BitOr,
    And,
    Xor,
    Or,
}

impl BinOp {
    /// Binding strength; higher binds tighter. Unary operators bind tighter
    /// than `**`.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Pow => 11,
            BinOp::Mul | BinOp::Div => 10,
            BinOp::Add | BinOp::Sub => 9,
            BinOp::Shl | BinOp::Shr => 8,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => 7,
            BinOp::BitAnd => 6,
            BinOp::BitXor => 5,
            BinOp::BitOr => 4,
            BinOp::And => 3,
            BinOp::Xor => 2,
            BinOp::Or => 1,
        }
    }

    pub fn right_assoc(self) -> bool {
        matches!(self, BinOp::Pow)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "**",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::BitAnd => "&",
            BinOp::BitXor => "^",
            BinOp::BitOr => "|",
            BinOp::And => "and",
            BinOp::Xor => "xor",
            BinOp::Or => "or",
        }
    }
}

impl Expr {
    /// Bare variable reference (a path with no segments).
    pub fn as_bare_path(&self) -> Option<&Path> {
        match &self.kind {
            ExprKind::Path(p) if p.segs.is_empty() => Some(p),
            _ => None,
        }
    }
}
