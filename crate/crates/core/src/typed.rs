//! Monomorphic typed program representation.
//!
//! [`AnnExpr`] constructors are the single source of truth for result
//! formats, value intervals, and truncation grids. [`fixed_eval`] evaluates
//! an annotated expression exactly the way the synthesized circuit does —
//! per-partial flooring included — so it serves as the reference oracle the
//! simulator output is compared against.

use crate::diag::Span;
use crate::types::{
    const_partial_exponents, dyadic_fraction_digits, floor_to_frac, infer_format,
    mul_partial_weights, partial_value, snap_to_grid, FixedPointFormat, NumInterval,
};
use num::rational::BigRational;
use num::{One, Zero};
use std::collections::BTreeSet;

pub type VarId = usize;

/// Fully concrete quantum storage type (every size resolved).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConcreteQType {
    Bit,
    Num(FixedPointFormat),
    Array { elem: Box<ConcreteQType>, len: usize },
    Record { name: String, fields: Vec<(String, ConcreteQType)> },
}

impl ConcreteQType {
    pub fn total_size(&self) -> u32 {
        match self {
            ConcreteQType::Bit => 1,
            ConcreteQType::Num(f) => f.size,
            ConcreteQType::Array { elem, len } => elem.total_size() * *len as u32,
            ConcreteQType::Record { fields, .. } => {
                fields.iter().map(|(_, t)| t.total_size()).sum()
            }
        }
    }

    /// Format under which this object participates in arithmetic: numbers
    /// as declared, bits and bit arrays as unsigned integers.
    pub fn arith_format(&self) -> Option<FixedPointFormat> {
        match self {
            ConcreteQType::Bit => Some(FixedPointFormat::bit()),
            ConcreteQType::Num(f) => Some(*f),
            ConcreteQType::Array { elem, len } => match **elem {
                ConcreteQType::Bit if *len >= 1 => {
                    Some(FixedPointFormat::new(*len as u32, false, 0))
                }
                _ => None,
            },
            ConcreteQType::Record { .. } => None,
        }
    }
}

impl std::fmt::Display for ConcreteQType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConcreteQType::Bit => write!(f, "qbit"),
            ConcreteQType::Num(fmt) => write!(
                f,
                "qnum[{}, {}, {}]",
                fmt.size,
                if fmt.signed { "signed" } else { "unsigned" },
                fmt.fraction_digits
            ),
            ConcreteQType::Array { elem, len } => write!(f, "qarray[{elem}, {len}]"),
            ConcreteQType::Record { name, .. } => write!(f, "{name}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct VarInfo {
    pub name: String,
    /// Final storage type; `None` only for declared-but-never-bound variables.
    pub ty: Option<ConcreteQType>,
}

/// A resolved view into a variable's qubits: `bit_len` contiguous bits
/// starting at `bit_offset` (LSB-first layout; array element 0 and record
/// field 0 sit at the low end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypedPath {
    pub var: VarId,
    pub bit_offset: u32,
    pub bit_len: u32,
    pub ty: ConcreteQType,
    pub span: Span,
}

impl TypedPath {
    pub fn overlaps(&self, other: &TypedPath) -> bool {
        self.var == other.var
            && self.bit_offset < other.bit_offset + other.bit_len
            && other.bit_offset < self.bit_offset + self.bit_len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BitBinOp {
    And,
    Or,
    Xor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogicBinOp {
    And,
    Or,
    Xor,
}

#[derive(Debug, Clone)]
pub struct AnnExpr {
    pub kind: AnnExprKind,
    pub fmt: FixedPointFormat,
    pub iv: NumInterval,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum AnnExprKind {
    /// Snapped constant, exactly representable in `fmt`.
    Const(BigRational),
    Leaf(TypedPath),
    Add(Box<AnnExpr>, Box<AnnExpr>),
    Sub(Box<AnnExpr>, Box<AnnExpr>),
    Neg(Box<AnnExpr>),
    /// `c * operand` with dyadic `c`: one floored shift-partial per set bit
    /// of `|c|`, all signed by `sgn(c)`.
    MulConst { c: BigRational, operand: Box<AnnExpr> },
    /// `mcand * mult`: the multiplier (right operand) is bit-decomposed; one
    /// floored partial per multiplier bit, sign bit negative.
    Mul { mcand: Box<AnnExpr>, mult: Box<AnnExpr> },
    Shl { operand: Box<AnnExpr>, k: u32 },
    Shr { operand: Box<AnnExpr>, k: u32 },
    /// Comparison via the sign bit of a floored difference (`work` holds the
    /// signed difference format for order ops, the common operand format for
    /// Eq/Ne; `grid` the comparison grid).
    Rel { op: RelOp, l: Box<AnnExpr>, r: Box<AnnExpr>, grid: u32, work: FixedPointFormat },
    BitBin { op: BitBinOp, l: Box<AnnExpr>, r: Box<AnnExpr> },
    BitNot(Box<AnnExpr>),
    Logic { op: LogicBinOp, l: Box<AnnExpr>, r: Box<AnnExpr> },
    LogicNot(Box<AnnExpr>),
}

fn bit_fmt() -> FixedPointFormat {
    FixedPointFormat::bit()
}

fn bool_iv() -> NumInterval {
    NumInterval::new(BigRational::zero(), BigRational::one())
}

impl AnnExpr {
    /// Snap a constant onto the machine-precision grid. The flag reports a
    /// lossy snap (callers emit a warning).
    pub fn constant(c: &BigRational, precision: u32, span: Span) -> (AnnExpr, bool) {
        let (snapped, lossy) = snap_to_grid(c, precision);
        let frac = dyadic_fraction_digits(&snapped).expect("snapped value is dyadic");
        let fmt = infer_format(&NumInterval::point(snapped.clone()), frac);
        (
            AnnExpr {
                kind: AnnExprKind::Const(snapped.clone()),
                fmt,
                iv: NumInterval::point(snapped),
                span,
            },
            lossy,
        )
    }

    /// Constant re-expressed in a specific format (bitwise-operand case).
    /// Fails if the value is not exactly representable.
    pub fn constant_in_format(
        c: &BigRational,
        fmt: FixedPointFormat,
        span: Span,
    ) -> Option<AnnExpr> {
        fmt.encode_exact(c)?;
        Some(AnnExpr {
            kind: AnnExprKind::Const(c.clone()),
            fmt,
            iv: NumInterval::point(c.clone()),
            span,
        })
    }

    pub fn leaf(path: TypedPath, span: Span) -> AnnExpr {
        let fmt = path
            .ty
            .arith_format()
            .expect("leaf paths are checked to have an arithmetic view");
        AnnExpr { kind: AnnExprKind::Leaf(path), fmt, iv: fmt.range(), span }
    }

    pub fn is_const(&self) -> Option<&BigRational> {
        match &self.kind {
            AnnExprKind::Const(c) => Some(c),
            _ => None,
        }
    }

    /// If the inferred interval pins the node to a single value, replace it
    /// with that constant: the subtree can never contribute anything else,
    /// so no circuit needs to be built for it. Keeps the inferred format.
    fn fold_point(kind: AnnExprKind, fmt: FixedPointFormat, iv: NumInterval, span: Span) -> AnnExpr {
        let kind = if iv.is_point() {
            AnnExprKind::Const(iv.lo.clone())
        } else {
            kind
        };
        AnnExpr { kind, fmt, iv, span }
    }

    pub fn add(l: AnnExpr, r: AnnExpr, precision: u32, span: Span) -> AnnExpr {
        let grid = l.fmt.fraction_digits.max(r.fmt.fraction_digits).min(precision);
        let iv = l.iv.floor_to(grid).add(&r.iv.floor_to(grid));
        let fmt = infer_format(&iv, grid);
        Self::fold_point(AnnExprKind::Add(Box::new(l), Box::new(r)), fmt, iv, span)
    }

    pub fn sub(l: AnnExpr, r: AnnExpr, precision: u32, span: Span) -> AnnExpr {
        let grid = l.fmt.fraction_digits.max(r.fmt.fraction_digits).min(precision);
        let iv = l.iv.floor_to(grid).sub(&r.iv.floor_to(grid));
        let fmt = infer_format(&iv, grid);
        Self::fold_point(AnnExprKind::Sub(Box::new(l), Box::new(r)), fmt, iv, span)
    }

    pub fn neg(x: AnnExpr, precision: u32, span: Span) -> AnnExpr {
        let grid = x.fmt.fraction_digits.min(precision);
        let iv = x.iv.floor_to(grid).neg();
        let fmt = infer_format(&iv, grid);
        Self::fold_point(AnnExprKind::Neg(Box::new(x)), fmt, iv, span)
    }

    /// `c` must already be snapped (it comes from a `Const` node).
    pub fn mul_const(c: &BigRational, operand: AnnExpr, precision: u32, span: Span) -> AnnExpr {
        let fc = dyadic_fraction_digits(c).expect("constant factor is dyadic");
        let grid = (fc + operand.fmt.fraction_digits).min(precision);
        let (negative, exps) = const_partial_exponents(c);
        let mut iv = NumInterval::zero();
        for &e in &exps {
            let term = operand.iv.scale_floor(e, grid);
            iv = iv.add(&if negative { term.neg() } else { term });
        }
        let fmt = infer_format(&iv, grid);
        Self::fold_point(
            AnnExprKind::MulConst { c: c.clone(), operand: Box::new(operand) },
            fmt,
            iv,
            span,
        )
    }

    /// A constant on either side turns the node into `MulConst` (the
    /// constant becomes the multiplier regardless of position).
    pub fn mul(mcand: AnnExpr, mult: AnnExpr, precision: u32, span: Span) -> AnnExpr {
        if let Some(c) = mult.is_const().cloned() {
            return Self::mul_const(&c, mcand, precision, span);
        }
        if let Some(c) = mcand.is_const().cloned() {
            return Self::mul_const(&c, mult, precision, span);
        }
        let grid = (mcand.fmt.fraction_digits + mult.fmt.fraction_digits).min(precision);
        let mut iv = NumInterval::zero();
        for w in mul_partial_weights(&mult.fmt) {
            let term = mcand.iv.scale_floor(w.exp, grid);
            let term = if w.negative { term.neg() } else { term };
            iv = iv.add(&term.hull_zero());
        }
        let fmt = infer_format(&iv, grid);
        Self::fold_point(
            AnnExprKind::Mul { mcand: Box::new(mcand), mult: Box::new(mult) },
            fmt,
            iv,
            span,
        )
    }

    /// `base ** k` desugars to a left-nested multiplication chain with the
    /// base as multiplier; `k = 0` folds to the constant 1.
    pub fn pow(base: AnnExpr, k: u32, precision: u32, span: Span) -> AnnExpr {
        if k == 0 {
            return AnnExpr::constant(&BigRational::one(), precision, span).0;
        }
        let mut acc = base.clone();
        for _ in 1..k {
            acc = AnnExpr::mul(acc, base.clone(), precision, span);
        }
        acc
    }

    pub fn shl(operand: AnnExpr, k: u32, precision: u32, span: Span) -> AnnExpr {
        let grid = operand.fmt.fraction_digits.saturating_sub(k).min(precision);
        let iv = operand.iv.scale_floor(k as i64, grid);
        let fmt = infer_format(&iv, grid);
        Self::fold_point(AnnExprKind::Shl { operand: Box::new(operand), k }, fmt, iv, span)
    }

    pub fn shr(operand: AnnExpr, k: u32, precision: u32, span: Span) -> AnnExpr {
        let grid = (operand.fmt.fraction_digits + k).min(precision);
        let iv = operand.iv.scale_floor(-(k as i64), grid);
        let fmt = infer_format(&iv, grid);
        Self::fold_point(AnnExprKind::Shr { operand: Box::new(operand), k }, fmt, iv, span)
    }

    /// Comparison. Folds to a constant when the operand intervals already
    /// decide the outcome.
    pub fn rel(op: RelOp, l: AnnExpr, r: AnnExpr, precision: u32, span: Span) -> AnnExpr {
        let grid = l.fmt.fraction_digits.max(r.fmt.fraction_digits).min(precision);
        let li = l.iv.floor_to(grid);
        let ri = r.iv.floor_to(grid);
        let fold = |b: bool| AnnExpr {
            kind: AnnExprKind::Const(BigRational::from_integer(num::BigInt::from(b as u8))),
            fmt: bit_fmt(),
            iv: NumInterval::point(BigRational::from_integer(num::BigInt::from(b as u8))),
            span,
        };
        let decided = match op {
            RelOp::Lt => {
                if li.hi < ri.lo {
                    Some(true)
                } else if li.lo >= ri.hi {
                    Some(false)
                } else {
                    None
                }
            }
            RelOp::Le => {
                if li.hi <= ri.lo {
                    Some(true)
                } else if li.lo > ri.hi {
                    Some(false)
                } else {
                    None
                }
            }
            RelOp::Gt => {
                if ri.hi < li.lo {
                    Some(true)
                } else if ri.lo >= li.hi {
                    Some(false)
                } else {
                    None
                }
            }
            RelOp::Ge => {
                if ri.hi <= li.lo {
                    Some(true)
                } else if ri.lo > li.hi {
                    Some(false)
                } else {
                    None
                }
            }
            RelOp::Eq | RelOp::Ne => {
                if li.hi < ri.lo || ri.hi < li.lo {
                    Some(op == RelOp::Ne)
                } else if li.is_point() && ri.is_point() && li.lo == ri.lo {
                    Some(op == RelOp::Eq)
                } else {
                    None
                }
            }
        };
        if let Some(b) = decided {
            return fold(b);
        }
        let work = match op {
            // Sign bit of a floored difference decides order; Le/Gt test the
            // swapped difference (Le = NOT r<l, Gt = r<l).
            RelOp::Lt | RelOp::Ge => infer_format(&li.sub(&ri), grid),
            RelOp::Le | RelOp::Gt => infer_format(&ri.sub(&li), grid),
            // Equality compares codes in a format covering both operands.
            RelOp::Eq | RelOp::Ne => infer_format(&li.hull(&ri), grid),
        };
        debug_assert!(
            matches!(op, RelOp::Eq | RelOp::Ne) || work.signed,
            "undecided order comparison must have a signed difference"
        );
        AnnExpr {
            kind: AnnExprKind::Rel { op, l: Box::new(l), r: Box::new(r), grid, work },
            fmt: bit_fmt(),
            iv: bool_iv(),
            span,
        }
    }

    /// Bitwise operators require identical layouts on both sides.
    pub fn bit_bin(op: BitBinOp, l: AnnExpr, r: AnnExpr, span: Span) -> Result<AnnExpr, String> {
        if l.fmt != r.fmt {
            return Err(format!(
                "bitwise operands have different formats {} and {}",
                l.fmt, r.fmt
            ));
        }
        let fmt = l.fmt;
        Ok(AnnExpr {
            kind: AnnExprKind::BitBin { op, l: Box::new(l), r: Box::new(r) },
            fmt,
            iv: fmt.range(),
            span,
        })
    }

    pub fn bit_not(x: AnnExpr, span: Span) -> AnnExpr {
        let fmt = x.fmt;
        AnnExpr { kind: AnnExprKind::BitNot(Box::new(x)), fmt, iv: fmt.range(), span }
    }

    /// Logical operators take 1-bit boolean operands.
    pub fn logic(op: LogicBinOp, l: AnnExpr, r: AnnExpr, span: Span) -> Result<AnnExpr, String> {
        for side in [&l, &r] {
            if side.fmt != bit_fmt() {
                return Err(format!(
                    "logical operand has format {}, not a 1-bit boolean",
                    side.fmt
                ));
            }
        }
        Ok(AnnExpr {
            kind: AnnExprKind::Logic { op, l: Box::new(l), r: Box::new(r) },
            fmt: bit_fmt(),
            iv: bool_iv(),
            span,
        })
    }

    pub fn logic_not(x: AnnExpr, span: Span) -> Result<AnnExpr, String> {
        if x.fmt != bit_fmt() {
            return Err(format!("logical operand has format {}, not a 1-bit boolean", x.fmt));
        }
        Ok(AnnExpr { kind: AnnExprKind::LogicNot(Box::new(x)), fmt: bit_fmt(), iv: bool_iv(), span })
    }

    /// All variables read by this expression.
    pub fn input_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match &self.kind {
            AnnExprKind::Const(_) => {}
            AnnExprKind::Leaf(p) => {
                out.insert(p.var);
            }
            AnnExprKind::Add(l, r)
            | AnnExprKind::Sub(l, r)
            | AnnExprKind::Mul { mcand: l, mult: r }
            | AnnExprKind::Rel { l, r, .. }
            | AnnExprKind::BitBin { l, r, .. }
            | AnnExprKind::Logic { l, r, .. } => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            AnnExprKind::Neg(x)
            | AnnExprKind::MulConst { operand: x, .. }
            | AnnExprKind::Shl { operand: x, .. }
            | AnnExprKind::Shr { operand: x, .. }
            | AnnExprKind::BitNot(x)
            | AnnExprKind::LogicNot(x) => x.collect_vars(out),
        }
    }
}

/// Exact fixed-point evaluation of an annotated expression for one basis
/// assignment (`codes` maps each variable to its full register code). This
/// is the semantic contract the synthesized circuit is tested against.
pub fn fixed_eval(e: &AnnExpr, codes: &dyn Fn(VarId) -> u64) -> BigRational {
    let v = match &e.kind {
        AnnExprKind::Const(c) => c.clone(),
        AnnExprKind::Leaf(p) => {
            let full = codes(p.var);
            let mask = if p.bit_len >= 64 { u64::MAX } else { (1u64 << p.bit_len) - 1 };
            e.fmt.decode(full >> p.bit_offset & mask)
        }
        AnnExprKind::Add(l, r) => {
            let g = e.fmt.fraction_digits;
            floor_to_frac(&fixed_eval(l, codes), g) + floor_to_frac(&fixed_eval(r, codes), g)
        }
        AnnExprKind::Sub(l, r) => {
            let g = e.fmt.fraction_digits;
            floor_to_frac(&fixed_eval(l, codes), g) - floor_to_frac(&fixed_eval(r, codes), g)
        }
        AnnExprKind::Neg(x) => -floor_to_frac(&fixed_eval(x, codes), e.fmt.fraction_digits),
        AnnExprKind::MulConst { c, operand } => {
            let g = e.fmt.fraction_digits;
            let v = fixed_eval(operand, codes);
            let (negative, exps) = const_partial_exponents(c);
            exps.iter()
                .map(|&exp| partial_value(&v, exp, g, negative))
                .fold(BigRational::zero(), |a, b| a + b)
        }
        AnnExprKind::Mul { mcand, mult } => {
            let g = e.fmt.fraction_digits;
            let v = fixed_eval(mcand, codes);
            let mult_code = mult
                .fmt
                .encode_exact(&fixed_eval(mult, codes))
                .expect("subexpression value fits its inferred format");
            mul_partial_weights(&mult.fmt)
                .iter()
                .filter(|w| mult_code >> w.bit & 1 == 1)
                .map(|w| partial_value(&v, w.exp, g, w.negative))
                .fold(BigRational::zero(), |a, b| a + b)
        }
        AnnExprKind::Shl { operand, k } => {
            let v = fixed_eval(operand, codes);
            floor_to_frac(&(v * crate::types::pow2(*k as i64)), e.fmt.fraction_digits)
        }
        AnnExprKind::Shr { operand, k } => {
            let v = fixed_eval(operand, codes);
            floor_to_frac(&(v * crate::types::pow2(-(*k as i64))), e.fmt.fraction_digits)
        }
        AnnExprKind::Rel { op, l, r, grid, .. } => {
            let a = floor_to_frac(&fixed_eval(l, codes), *grid);
            let b = floor_to_frac(&fixed_eval(r, codes), *grid);
            let out = match op {
                RelOp::Lt => a < b,
                RelOp::Le => a <= b,
                RelOp::Gt => a > b,
                RelOp::Ge => a >= b,
                RelOp::Eq => a == b,
                RelOp::Ne => a != b,
            };
            BigRational::from_integer(num::BigInt::from(out as u8))
        }
        AnnExprKind::BitBin { op, l, r } => {
            let fmt = e.fmt;
            let a = fmt.encode_exact(&fixed_eval(l, codes)).expect("operand fits");
            let b = fmt.encode_exact(&fixed_eval(r, codes)).expect("operand fits");
            let c = match op {
                BitBinOp::And => a & b,
                BitBinOp::Or => a | b,
                BitBinOp::Xor => a ^ b,
            };
            fmt.decode(c)
        }
        AnnExprKind::BitNot(x) => {
            let fmt = e.fmt;
            let a = fmt.encode_exact(&fixed_eval(x, codes)).expect("operand fits");
            let mask = if fmt.size >= 64 { u64::MAX } else { (1u64 << fmt.size) - 1 };
            fmt.decode(!a & mask)
        }
        AnnExprKind::Logic { op, l, r } => {
            let a = !fixed_eval(l, codes).is_zero();
            let b = !fixed_eval(r, codes).is_zero();
            let out = match op {
                LogicBinOp::And => a && b,
                LogicBinOp::Or => a || b,
                LogicBinOp::Xor => a ^ b,
            };
            BigRational::from_integer(num::BigInt::from(out as u8))
        }
        AnnExprKind::LogicNot(x) => {
            let a = fixed_eval(x, codes).is_zero();
            BigRational::from_integer(num::BigInt::from(a as u8))
        }
    };
    debug_assert!(
        e.iv.contains(&v),
        "interval violation: value {v} outside {} at a {:?} node",
        e.iv,
        std::mem::discriminant(&e.kind)
    );
    v
}

/// Like [`fixed_eval`] but asserts interval soundness at every node even in
/// release builds (used by the property suites).
pub fn fixed_eval_checked(e: &AnnExpr, codes: &dyn Fn(VarId) -> u64) -> Result<BigRational, String> {
    // Evaluate children first so a failure reports the deepest bad node.
    let check_children: Vec<&AnnExpr> = match &e.kind {
        AnnExprKind::Const(_) | AnnExprKind::Leaf(_) => vec![],
        AnnExprKind::Add(l, r)
        | AnnExprKind::Sub(l, r)
        | AnnExprKind::Mul { mcand: l, mult: r }
        | AnnExprKind::Rel { l, r, .. }
        | AnnExprKind::BitBin { l, r, .. }
        | AnnExprKind::Logic { l, r, .. } => vec![l, r],
        AnnExprKind::Neg(x)
        | AnnExprKind::MulConst { operand: x, .. }
        | AnnExprKind::Shl { operand: x, .. }
        | AnnExprKind::Shr { operand: x, .. }
        | AnnExprKind::BitNot(x)
        | AnnExprKind::LogicNot(x) => vec![x],
    };
    for c in check_children {
        fixed_eval_checked(c, codes)?;
    }
    let v = fixed_eval(e, codes);
    if !e.iv.contains(&v) {
        return Err(format!("value {v} escapes interval {}", e.iv));
    }
    if e.fmt.encode_exact(&v).is_none() && !matches!(e.kind, AnnExprKind::Leaf(_)) {
        return Err(format!("value {v} not representable in {}", e.fmt));
    }
    Ok(v)
}

// ─── statements ──────────────────────────────────────────────────────

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimGate {
    H,
    X,
    Y,
    Z,
    S,
    T,
    RX,
    RY,
    RZ,
    CX,
    CCX,
    SWAP,
}

impl PrimGate {
    pub fn from_name(name: &str) -> Option<PrimGate> {
        Some(match name {
            "H" => PrimGate::H,
            "X" => PrimGate::X,
            "Y" => PrimGate::Y,
            "Z" => PrimGate::Z,
            "S" => PrimGate::S,
            "T" => PrimGate::T,
            "RX" => PrimGate::RX,
            "RY" => PrimGate::RY,
            "RZ" => PrimGate::RZ,
            "CX" => PrimGate::CX,
            "CCX" => PrimGate::CCX,
            "SWAP" => PrimGate::SWAP,
            _ => return None,
        })
    }

    pub fn qubit_arity(&self) -> usize {
        match self {
            PrimGate::CX | PrimGate::SWAP => 2,
            PrimGate::CCX => 3,
            _ => 1,
        }
    }

    pub fn takes_angle(&self) -> bool {
        matches!(self, PrimGate::RX | PrimGate::RY | PrimGate::RZ)
    }
}

/// Fully inlined, monomorphic statement: repeats unrolled, calls expanded,
/// power expanded; only structure with distinct synthesis rules remains.
#[derive(Debug, Clone)]
pub enum TypedStmt {
    Allocate { var: VarId, span: Span },
    /// `path |= expr`. `adopt` means the target had no concrete declared
    /// format and takes the expression's inferred one (register adopted
    /// as-is); otherwise the value is moved into the declared format.
    AssignOut { var: VarId, expr: AnnExpr, adopt: bool, span: Span },
    XorAssign { target: TypedPath, expr: AnnExpr, span: Span },
    AddAssign { target: TypedPath, expr: AnnExpr, span: Span },
    Phase { expr: AnnExpr, theta: f64, span: Span },
    AssignAmplitude { expr: AnnExpr, indicator: TypedPath, span: Span },
    ControlBit { ctrl: TypedPath, body: Vec<TypedStmt>, span: Span },
    ControlExpr { cond: AnnExpr, body: Vec<TypedStmt>, span: Span },
    WithinApply {
        within: Vec<TypedStmt>,
        apply: Vec<TypedStmt>,
        /// Variables first initialized inside the within block; they revert
        /// to uninitialized (registers released) after the statement.
        within_inits: Vec<VarId>,
        span: Span,
    },
    Invert { body: Vec<TypedStmt>, span: Span },
    Gate { gate: PrimGate, theta: Option<f64>, args: Vec<TypedPath>, span: Span },
    /// A local variable going out of scope while still initialized. Its
    /// register is released as-is; the simulator's zero check is what
    /// enforces that the program actually cleaned it up.
    ReleaseLocal { var: VarId, span: Span },
}

#[derive(Debug, Clone)]
pub struct TypedProgram {
    pub vars: Vec<VarInfo>,
    pub stmts: Vec<TypedStmt>,
    /// main's output parameters, in declaration order.
    pub outputs: Vec<(String, VarId)>,
    pub machine_precision: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diag::Span;
    use num::bigint::BigInt;

    fn sp() -> Span {
        Span::new(0, 0, 1, 1)
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn int(n: i64) -> BigRational {
        BigRational::from_integer(BigInt::from(n))
    }

    fn leaf(var: VarId, fmt: FixedPointFormat) -> AnnExpr {
        AnnExpr::leaf(
            TypedPath {
                var,
                bit_offset: 0,
                bit_len: fmt.size,
                ty: ConcreteQType::Num(fmt),
                span: sp(),
            },
            sp(),
        )
    }

    /// 0.25*a*b + 1.5 with a:(2,u,0), b:(2,s,1) — the worked inference
    /// example: result format (4, unsigned, 3), support {0.75,1.125,1.5,1.875}.
    #[test]
    fn quarter_a_b_plus_three_halves() {
        let mp = 8;
        let a = leaf(0, FixedPointFormat::new(2, false, 0));
        let b = leaf(1, FixedPointFormat::new(2, true, 1));
        let t1 = AnnExpr::mul_const(&rat(1, 4), a, mp, sp());
        assert_eq!(t1.fmt, FixedPointFormat::new(2, false, 2));
        let t2 = AnnExpr::mul(t1, b, mp, sp());
        assert_eq!(t2.fmt, FixedPointFormat::new(4, true, 3));
        let (c, lossy) = AnnExpr::constant(&rat(3, 2), mp, sp());
        assert!(!lossy);
        let root = AnnExpr::add(t2, c, mp, sp());
        assert_eq!(root.fmt, FixedPointFormat::new(4, false, 3));
        assert_eq!(root.iv, NumInterval::new(rat(3, 4), rat(15, 8)));

        // a fixed at 3, b over all four codes -> the four documented values.
        let mut support: Vec<BigRational> = (0..4u64)
            .map(|bc| fixed_eval(&root, &|v| if v == 0 { 3 } else { bc }))
            .collect();
        support.sort();
        assert_eq!(support, vec![rat(3, 4), rat(9, 8), rat(3, 2), rat(15, 8)]);
    }

    #[test]
    fn linear_cost_interval() {
        let mp = 8;
        let a = leaf(0, FixedPointFormat::new(3, false, 0));
        let b = leaf(1, FixedPointFormat::new(2, false, 0));
        let t = AnnExpr::add(
            AnnExpr::mul_const(&int(3), a, mp, sp()),
            AnnExpr::mul_const(&int(5), b, mp, sp()),
            mp,
            sp(),
        );
        assert_eq!(t.iv, NumInterval::new(int(0), int(36)));
        assert_eq!(t.fmt, FixedPointFormat::new(6, false, 0));
        // Spot values.
        for (ac, bc) in [(0u64, 0u64), (7, 3), (5, 2)] {
            let v = fixed_eval(&t, &|v| if v == 0 { ac } else { bc });
            assert_eq!(v, int(3 * ac as i64 + 5 * bc as i64));
        }
    }

    #[test]
    fn square_matches_integer_squares() {
        let mp = 8;
        let x = leaf(0, FixedPointFormat::new(2, false, 0));
        let sq = AnnExpr::pow(x, 2, mp, sp());
        assert_eq!(sq.fmt, FixedPointFormat::new(4, false, 0));
        for code in 0..4u64 {
            assert_eq!(fixed_eval(&sq, &|_| code), int((code * code) as i64));
        }
    }

    /// Taylor expression x − 1/3·x³ + 2/15·x⁵ at machine precision 5 with
    /// x = 0.8125: every intermediate of the per-partial flooring chain is
    /// pinned, ending at 22/32. Changing any truncation rule breaks this.
    #[test]
    fn taylor_chain_truncation_walk() {
        let mp = 5;
        let xf = FixedPointFormat::new(5, false, 5);
        let x = || leaf(0, xf);
        let code = 26u64; // 0.8125
        let env = |_: VarId| code;

        let x3 = AnnExpr::pow(x(), 3, mp, sp());
        let x5 = AnnExpr::pow(x(), 5, mp, sp());
        // Inner square: per-partial flooring gives 20/32, one grid step
        // below the floored true square (21.125/32).
        let x2 = AnnExpr::pow(x(), 2, mp, sp());
        assert_eq!(fixed_eval(&x2, &env), rat(20, 32));
        assert_eq!(fixed_eval(&x3, &env), rat(16, 32));
        assert_eq!(fixed_eval(&x5, &env), rat(9, 32));

        let (c1, lossy1) = AnnExpr::constant(&rat(1, 3), mp, sp());
        assert!(lossy1);
        assert_eq!(c1.is_const().unwrap(), &rat(11, 32));
        let (c2, lossy2) = AnnExpr::constant(&rat(2, 15), mp, sp());
        assert!(lossy2);
        assert_eq!(c2.is_const().unwrap(), &rat(4, 32));

        let t1 = AnnExpr::mul_const(c1.is_const().unwrap(), x3, mp, sp());
        assert_eq!(fixed_eval(&t1, &env), rat(5, 32));
        let t2 = AnnExpr::mul_const(c2.is_const().unwrap(), x5, mp, sp());
        assert_eq!(fixed_eval(&t2, &env), rat(1, 32));

        let root = AnnExpr::add(AnnExpr::sub(x(), t1, mp, sp()), t2, mp, sp());
        assert_eq!(root.fmt, FixedPointFormat::new(7, true, 5));
        assert_eq!(fixed_eval(&root, &env), rat(22, 32)); // 0.6875
    }

    #[test]
    fn taylor_tail_folds_to_constant_at_coarse_precision() {
        // At machine precision 4 the quintic term's interval collapses to
        // [0, 0]: every partial lands below the grid step for every input.
        // The whole subtree must fold away rather than synthesize a dead
        // multiplication chain.
        let mp = 4;
        let x = || leaf(0, FixedPointFormat::new(5, false, 5));

        let x3 = AnnExpr::pow(x(), 3, mp, sp());
        let (c3, lossy) = AnnExpr::constant(&rat(1, 3), mp, sp());
        assert!(lossy);
        assert_eq!(c3.is_const().unwrap(), &rat(5, 16));
        let t1 = AnnExpr::mul_const(&rat(5, 16), x3, mp, sp());
        let head = AnnExpr::sub(x(), t1, mp, sp());

        let x5 = AnnExpr::pow(x(), 5, mp, sp());
        assert!(x5.is_const().is_none());
        let (two, _) = AnnExpr::constant(&int(2), mp, sp());
        let doubled = AnnExpr::mul(two, x5, mp, sp());
        assert!(matches!(doubled.kind, AnnExprKind::MulConst { .. }));
        let (c15, lossy) = AnnExpr::constant(&rat(1, 15), mp, sp());
        assert!(lossy);
        assert_eq!(c15.is_const().unwrap(), &rat(1, 16));
        let tail = AnnExpr::mul(doubled, c15, mp, sp());
        assert_eq!(tail.is_const(), Some(&BigRational::zero()));

        let root = AnnExpr::add(head, tail, mp, sp());
        assert_eq!(root.fmt, FixedPointFormat::new(5, true, 4));

        // Frozen walk at x = 0.8125 (code 26).
        let env = |_: VarId| 26u64;
        assert_eq!(fixed_eval(&AnnExpr::pow(x(), 2, mp, sp()), &env), rat(9, 16));
        assert_eq!(fixed_eval(&root, &env), rat(3, 4));

        // Whole-domain check: interval-sound and inside [-1, 1], so the
        // value is a valid amplitude for every input code.
        for code in 0..32u64 {
            let v = fixed_eval_checked(&root, &|_| code).unwrap();
            assert!(v >= rat(-2, 16) && v <= rat(15, 16), "code {code}: {v}");
        }
    }

    #[test]
    fn comparison_semantics_and_fold() {
        let mp = 8;
        let a = leaf(0, FixedPointFormat::new(3, false, 0));
        let b = leaf(1, FixedPointFormat::new(2, false, 0));
        // 2a + 3b <= 12: undecided, signed 5-bit difference.
        let lhs = AnnExpr::add(
            AnnExpr::mul_const(&int(2), a.clone(), mp, sp()),
            AnnExpr::mul_const(&int(3), b.clone(), mp, sp()),
            mp,
            sp(),
        );
        let (twelve, _) = AnnExpr::constant(&int(12), mp, sp());
        let le = AnnExpr::rel(RelOp::Le, lhs, twelve, mp, sp());
        let AnnExprKind::Rel { grid, work, .. } = &le.kind else {
            panic!("expected an undecided comparison");
        };
        assert_eq!(*grid, 0);
        assert_eq!(*work, FixedPointFormat::new(5, true, 0));
        for ac in 0..8u64 {
            for bc in 0..4u64 {
                let got = fixed_eval(&le, &|v| if v == 0 { ac } else { bc });
                let want = (2 * ac + 3 * bc) <= 12;
                assert_eq!(got, int(want as i64), "a={ac} b={bc}");
            }
        }

        // Interval-decided comparisons fold to constants.
        let (eight, _) = AnnExpr::constant(&int(8), mp, sp());
        let folded = AnnExpr::rel(RelOp::Lt, a.clone(), eight, mp, sp());
        assert_eq!(folded.is_const().unwrap(), &int(1));
        let (neg, _) = AnnExpr::constant(&int(-1), mp, sp());
        let folded = AnnExpr::rel(RelOp::Lt, a, neg, mp, sp());
        assert_eq!(folded.is_const().unwrap(), &int(0));
    }

    #[test]
    fn equality_and_strictness_on_shared_grid() {
        let mp = 8;
        let x = leaf(0, FixedPointFormat::new(3, false, 1));
        let y = leaf(1, FixedPointFormat::new(2, false, 0));
        let eq = AnnExpr::rel(RelOp::Eq, x.clone(), y.clone(), mp, sp());
        for xc in 0..8u64 {
            for yc in 0..4u64 {
                let got = fixed_eval(&eq, &|v| if v == 0 { xc } else { yc });
                let want = xc as f64 / 2.0 == yc as f64;
                assert_eq!(got, int(want as i64), "x={xc} y={yc}");
            }
        }
        let lt = AnnExpr::rel(RelOp::Lt, x, y, mp, sp());
        for xc in 0..8u64 {
            for yc in 0..4u64 {
                let got = fixed_eval(&lt, &|v| if v == 0 { xc } else { yc });
                let want = (xc as f64 / 2.0) < yc as f64;
                assert_eq!(got, int(want as i64), "x={xc} y={yc}");
            }
        }
    }

    #[test]
    fn coarse_grid_changes_comparison_outcomes() {
        // With machine precision 0 the operands are floored to integers
        // before comparing: 1.5 < 1.75 becomes 1 < 1, i.e. false.
        let x = leaf(0, FixedPointFormat::new(3, false, 2));
        let y = leaf(1, FixedPointFormat::new(3, false, 2));
        let lt = AnnExpr::rel(RelOp::Lt, x, y, 0, sp());
        let got = fixed_eval(&lt, &|v| if v == 0 { 6 } else { 7 });
        assert_eq!(got, int(0));
    }

    #[test]
    fn bitwise_and_logical_rules() {
        let f = FixedPointFormat::new(3, false, 0);
        let x = leaf(0, f);
        let y = leaf(1, f);
        let anded = AnnExpr::bit_bin(BitBinOp::And, x.clone(), y, sp()).unwrap();
        assert_eq!(
            fixed_eval(&anded, &|v| if v == 0 { 0b110 } else { 0b011 }),
            int(0b010)
        );
        let z = leaf(2, FixedPointFormat::new(2, false, 0));
        assert!(AnnExpr::bit_bin(BitBinOp::Xor, x.clone(), z, sp()).is_err());
        assert!(AnnExpr::logic(LogicBinOp::And, x.clone(), x.clone(), sp()).is_err());

        let nx = AnnExpr::bit_not(x, sp());
        assert_eq!(fixed_eval(&nx, &|_| 0b101), int(0b010));

        let p = leaf(3, FixedPointFormat::bit());
        let q = leaf(4, FixedPointFormat::bit());
        let xor = AnnExpr::logic(LogicBinOp::Xor, p, q, sp()).unwrap();
        assert_eq!(fixed_eval(&xor, &|v| if v == 3 { 1 } else { 1 }), int(0));
        assert_eq!(fixed_eval(&xor, &|v| if v == 3 { 1 } else { 0 }), int(1));
    }

    #[test]
    fn shifts() {
        let mp = 8;
        let x = leaf(0, FixedPointFormat::new(4, false, 2)); // [0, 3.75]
        let shl = AnnExpr::shl(x.clone(), 1, mp, sp());
        assert_eq!(shl.fmt.fraction_digits, 1);
        assert_eq!(fixed_eval(&shl, &|_| 0b0110), int(3)); // 1.5 << 1
        let shr = AnnExpr::shr(x, 1, mp, sp());
        assert_eq!(shr.fmt.fraction_digits, 3);
        assert_eq!(fixed_eval(&shr, &|_| 0b0110), rat(3, 4)); // 1.5 >> 1
        // Capped precision floors on the right shift: 0.5/4 = 0.125 is
        // below the grid step 0.25 and vanishes.
        let y = leaf(0, FixedPointFormat::new(2, false, 1));
        let shr = AnnExpr::shr(y, 2, 2, sp());
        assert_eq!(shr.fmt.fraction_digits, 2);
        assert_eq!(fixed_eval(&shr, &|_| 0b01), int(0));
    }

    #[test]
    fn interval_soundness_exhaustive_small() {
        let mp = 4;
        let a = leaf(0, FixedPointFormat::new(3, true, 1));
        let b = leaf(1, FixedPointFormat::new(2, false, 1));
        let e = AnnExpr::sub(
            AnnExpr::mul(a.clone(), b.clone(), mp, sp()),
            AnnExpr::mul_const(&rat(3, 4), a.clone(), mp, sp()),
            mp,
            sp(),
        );
        for ac in 0..8u64 {
            for bc in 0..4u64 {
                fixed_eval_checked(&e, &|v| if v == 0 { ac } else { bc }).unwrap();
            }
        }
    }

    #[test]
    fn pow_zero_and_one() {
        let mp = 8;
        let x = leaf(0, FixedPointFormat::new(2, false, 0));
        let p0 = AnnExpr::pow(x.clone(), 0, mp, sp());
        assert_eq!(p0.is_const().unwrap(), &int(1));
        let p1 = AnnExpr::pow(x, 1, mp, sp());
        assert!(matches!(p1.kind, AnnExprKind::Leaf(_)));
    }

    #[test]
    fn type_layout_sizes() {
        let rec = ConcreteQType::Record {
            name: "S".into(),
            fields: vec![
                (
                    "data".into(),
                    ConcreteQType::Array {
                        elem: Box::new(ConcreteQType::Num(FixedPointFormat::new(2, false, 0))),
                        len: 3,
                    },
                ),
                ("sum".into(), ConcreteQType::Num(FixedPointFormat::new(4, false, 0))),
            ],
        };
        assert_eq!(rec.total_size(), 10);
        assert!(rec.arith_format().is_none());
        let bits = ConcreteQType::Array { elem: Box::new(ConcreteQType::Bit), len: 6 };
        assert_eq!(bits.arith_format(), Some(FixedPointFormat::new(6, false, 0)));
    }
}
