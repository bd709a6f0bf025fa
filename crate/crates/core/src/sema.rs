//! Semantic analysis: resolves names and classical values, enforces the
//! initialization and single-reference rules, and expands the program into a
//! flat, fully monomorphic [`TypedProgram`] — calls inlined, lambdas applied,
//! `repeat`/`power` unrolled, every expression annotated with its inferred
//! format and interval.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap, HashSet};
use std::ops::Range;
use std::rc::Rc;

use num::{BigRational, ToPrimitive, Zero};

use crate::diag::{Diagnostic, Span};
use crate::frontend::ast::{
    Arg, BinOp, Block, CType, Expr, ExprKind, FuncDef, Ident, Lambda, Param, ParamType, Path,
    PathSeg, Program, QType, Stmt, StmtKind, UnOp,
};
use crate::frontend::eval::{self, Env, Value};
use crate::frontend;
use crate::typed::{
    AnnExpr, AnnExprKind, BitBinOp, ConcreteQType, LogicBinOp, PrimGate, RelOp, TypedPath,
    TypedProgram, TypedStmt, VarId, VarInfo,
};
use crate::types::FixedPointFormat;

/// Functions available in every program without being declared. Gates are
/// intrinsic; this is ordinary source that inlines like user code.
const PRELUDE_SRC: &str = "
qfunc hadamard_transform(target: qarray[qbit]) {
    repeat (i, target.size) {
        H(target[i]);
    }
}
";

/// Statement budget guards against runaway unrolling.
const MAX_REPEAT: i64 = 1 << 16;
const MAX_ERRORS: usize = 25;

pub struct AnalyzeOptions {
    pub machine_precision: u32,
    /// Values for `main`'s classical parameters.
    pub args: HashMap<String, Value>,
    /// Named classical constants visible everywhere.
    pub consts: HashMap<String, Value>,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            machine_precision: crate::types::DEFAULT_MACHINE_PRECISION,
            args: HashMap::new(),
            consts: HashMap::new(),
        }
    }
}

pub struct SemaOutput {
    pub program: TypedProgram,
    pub warnings: Vec<Diagnostic>,
}

pub fn analyze(program: &Program, opts: &AnalyzeOptions) -> Result<SemaOutput, Vec<Diagnostic>> {
    let prelude = frontend::parse(PRELUDE_SRC).expect("prelude parses");
    let mut a = Analyzer {
        mp: opts.machine_precision,
        records: HashMap::new(),
        record_memo: HashMap::new(),
        funcs: HashMap::new(),
        vars: Vec::new(),
        state: Vec::new(),
        errors: Vec::new(),
        warnings: Vec::new(),
        call_stack: Vec::new(),
    };
    let result = a.run(&prelude, program, opts);
    if a.errors.is_empty() {
        let (stmts, outputs) = result.unwrap_or_default();
        Ok(SemaOutput {
            program: TypedProgram {
                vars: a.vars,
                stmts,
                outputs,
                machine_precision: opts.machine_precision,
            },
            warnings: a.warnings,
        })
    } else {
        Err(a.errors)
    }
}

// ─── name binding ────────────────────────────────────────────────────

/// What a declaration said about a variable's shape, kept separate from the
/// resolved type so unsized declarations can adopt a format later.
#[derive(Debug, Clone)]
enum DeclShape {
    Concrete(ConcreteQType),
    /// `qnum` with everything inferred.
    Num,
    /// `qarray[qbit]` with the length from context.
    BitArray,
    /// `qarray[elem]` with the length from context.
    ArrayOf(ConcreteQType),
}

#[derive(Clone)]
enum NameDef<'x> {
    /// A variable owned through this name (local or `output` parameter).
    /// The shape is the one declared at this binding site.
    Var { id: VarId, shape: Rc<DeclShape> },
    /// A parameter bound to (part of) a caller's object.
    View(TypedPath),
    Classical(Value),
    Func(FuncBinding<'x>),
}

#[derive(Clone)]
enum FuncBinding<'x> {
    Named(String),
    Lambda { lambda: &'x Lambda, tys: &'x [QType], env: ScopeRef<'x> },
}

struct ScopeData<'x> {
    names: RefCell<HashMap<String, NameDef<'x>>>,
    /// Variables declared directly in this frame, in order (for release).
    local_decls: RefCell<Vec<VarId>>,
    parent: Option<ScopeRef<'x>>,
}

type ScopeRef<'x> = Rc<ScopeData<'x>>;

fn child_scope<'x>(parent: &ScopeRef<'x>) -> ScopeRef<'x> {
    Rc::new(ScopeData {
        names: RefCell::new(HashMap::new()),
        local_decls: RefCell::new(Vec::new()),
        parent: Some(parent.clone()),
    })
}

fn lookup<'x>(scope: &ScopeRef<'x>, name: &str) -> Option<NameDef<'x>> {
    let mut cur = Some(scope.clone());
    while let Some(s) = cur {
        if let Some(def) = s.names.borrow().get(name) {
            return Some(def.clone());
        }
        cur = s.parent.clone();
    }
    None
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum VState {
    Uninit,
    Init,
}

/// Context threaded through statement expansion.
#[derive(Clone, Default)]
struct Ctx {
    /// While expanding an apply block: variables the within block created.
    within_temps: Option<Rc<HashSet<VarId>>>,
}

/// The outcome of trying to view an expression classically.
enum Rewritten {
    /// Fully classical: the rewritten expression (quantum `.size`/`.len`
    /// reads replaced by literals) plus the bindings it needs.
    Classical(Expr),
    /// Contains a quantum leaf.
    Quantum,
}

struct Analyzer<'x> {
    mp: u32,
    records: HashMap<String, &'x [(Ident, QType)]>,
    record_memo: HashMap<String, Option<ConcreteQType>>,
    funcs: HashMap<String, &'x FuncDef>,
    vars: Vec<VarInfo>,
    state: Vec<VState>,
    errors: Vec<Diagnostic>,
    warnings: Vec<Diagnostic>,
    call_stack: Vec<String>,
}

impl<'x> Analyzer<'x> {
    fn run(
        &mut self,
        prelude: &'x Program,
        program: &'x Program,
        opts: &AnalyzeOptions,
    ) -> Option<(Vec<TypedStmt>, Vec<(String, VarId)>)> {
        for rec in prelude.records.iter().chain(&program.records) {
            if self.records.insert(rec.name.name.clone(), &rec.fields).is_some() {
                self.err(format!("struct '{}' is defined twice", rec.name.name), rec.name.span);
            }
        }
        for f in prelude.funcs.iter().chain(&program.funcs) {
            if PrimGate::from_name(&f.name.name).is_some() {
                self.err(
                    format!("'{}' is a built-in gate and cannot be redefined", f.name.name),
                    f.name.span,
                );
                continue;
            }
            if self.funcs.insert(f.name.name.clone(), f).is_some() {
                self.err(format!("function '{}' is defined twice", f.name.name), f.name.span);
            }
        }

        let global = Rc::new(ScopeData {
            names: RefCell::new(
                opts.consts
                    .iter()
                    .map(|(k, v)| (k.clone(), NameDef::Classical(v.clone())))
                    .collect(),
            ),
            local_decls: RefCell::new(Vec::new()),
            parent: None,
        });

        let Some(main) = self.funcs.get("main").copied() else {
            self.err_nospan("the program has no 'main' function");
            return None;
        };

        // Bind main's parameters: quantum ones must be outputs, classical
        // ones come from the provided argument values.
        let frame = child_scope(&global);
        let mut outputs = Vec::new();
        let mut used_args: HashSet<&str> = HashSet::new();
        for p in &main.params {
            match &p.ty {
                ParamType::Quantum(qt) => {
                    if !p.output {
                        self.err(
                            format!(
                                "main's quantum parameter '{}' must be declared 'output'",
                                p.name.name
                            ),
                            p.span,
                        );
                        continue;
                    }
                    let Ok(shape) = self.resolve_qtype(qt, &frame, p.span).map_err(|d| self.push(d))
                    else {
                        continue;
                    };
                    let id = self.new_var(&p.name.name, &shape);
                    self.bind(&frame, &p.name, NameDef::Var { id, shape: Rc::new(shape) });
                    outputs.push((p.name.name.clone(), id));
                }
                ParamType::Classical(ct) => {
                    used_args.insert(p.name.name.as_str());
                    let Some(v) = opts.args.get(&p.name.name) else {
                        self.err(
                            format!(
                                "missing value for classical parameter '{}' (pass --arg {}=...)",
                                p.name.name, p.name.name
                            ),
                            p.span,
                        );
                        continue;
                    };
                    let v = v.clone();
                    if let Err(d) = self.check_classical_value(ct, &v, &frame, p.span) {
                        self.push(d);
                        continue;
                    }
                    self.bind(&frame, &p.name, NameDef::Classical(v));
                }
                ParamType::Function(_) => {
                    self.err(
                        format!("main cannot take the function parameter '{}'", p.name.name),
                        p.span,
                    );
                }
            }
        }
        for name in opts.args.keys() {
            if !used_args.contains(name.as_str()) {
                self.err_nospan(format!("unknown argument '{name}': main has no such parameter"));
            }
        }

        let mut stmts = Vec::new();
        self.call_stack.push("main".into());
        // main's own frame never exits, so its locals stay live.
        self.expand_stmts(&main.body.stmts, &frame, &Ctx::default(), &mut stmts);
        self.call_stack.pop();

        for (name, id) in &outputs {
            if self.state[*id] != VState::Init {
                self.err(
                    format!("main ended without initializing its output '{name}'"),
                    main.span,
                );
            }
        }
        Some((stmts, outputs))
    }

    // ─── small helpers ───────────────────────────────────────────────

    fn err(&mut self, msg: impl Into<String>, span: Span) {
        self.errors.push(Diagnostic::error(msg, span));
    }

    fn err_nospan(&mut self, msg: impl Into<String>) {
        self.errors.push(Diagnostic::error(msg, Span::new(0, 0, 1, 1)));
    }

    fn push(&mut self, d: Diagnostic) {
        self.errors.push(d);
    }

    fn warn(&mut self, msg: impl Into<String>, span: Span) {
        self.warnings.push(Diagnostic::warning(msg, span));
    }

    fn new_var(&mut self, name: &str, shape: &DeclShape) -> VarId {
        let ty = match shape {
            DeclShape::Concrete(t) => Some(t.clone()),
            _ => None,
        };
        self.vars.push(VarInfo { name: name.to_string(), ty });
        self.state.push(VState::Uninit);
        self.vars.len() - 1
    }

    fn bind(&mut self, scope: &ScopeRef<'x>, ident: &Ident, def: NameDef<'x>) {
        let mut names = scope.names.borrow_mut();
        if names.contains_key(&ident.name) {
            self.errors.push(Diagnostic::error(
                format!("'{}' is already defined in this scope", ident.name),
                ident.span,
            ));
            return;
        }
        if let NameDef::Var { id, .. } = &def {
            scope.local_decls.borrow_mut().push(*id);
        }
        names.insert(ident.name.clone(), def);
    }

    // ─── types ───────────────────────────────────────────────────────

    fn record_layout(&mut self, name: &str, span: Span) -> Result<ConcreteQType, Diagnostic> {
        match self.record_memo.get(name) {
            Some(Some(t)) => return Ok(t.clone()),
            Some(None) => {
                return Err(Diagnostic::error(
                    format!("struct '{name}' contains itself"),
                    span,
                ))
            }
            None => {}
        }
        let Some(fields) = self.records.get(name).copied() else {
            return Err(Diagnostic::error(format!("unknown type '{name}'"), span));
        };
        self.record_memo.insert(name.to_string(), None);
        // Field sizes may only use global constants, so an empty scope
        // chain rooted at nothing would be wrong — but record layouts are
        // resolved lazily from sites that always pass a scope; sizes here
        // use the global constants captured at those sites. Keep it simple:
        // record fields must have literal / const-free sizes resolved with
        // no extra names in scope.
        let empty = Rc::new(ScopeData {
            names: RefCell::new(HashMap::new()),
            local_decls: RefCell::new(Vec::new()),
            parent: None,
        });
        let mut out_fields = Vec::new();
        for (fname, fty) in fields {
            let shape = self.resolve_qtype(fty, &empty, fname.span)?;
            let DeclShape::Concrete(t) = shape else {
                return Err(Diagnostic::error(
                    format!("struct field '{}' must have a fixed size", fname.name),
                    fname.span,
                ));
            };
            out_fields.push((fname.name.clone(), t));
        }
        let t = ConcreteQType::Record { name: name.to_string(), fields: out_fields };
        self.record_memo.insert(name.to_string(), Some(t.clone()));
        Ok(t)
    }

    fn resolve_qtype(
        &mut self,
        ty: &QType,
        scope: &ScopeRef<'x>,
        span: Span,
    ) -> Result<DeclShape, Diagnostic> {
        match ty {
            QType::Bit => Ok(DeclShape::Concrete(ConcreteQType::Bit)),
            QType::Num { size: None, .. } => Ok(DeclShape::Num),
            QType::Num { size: Some(se), layout } => {
                let size = self.eval_classical_usize(se, scope)?;
                let (signed, frac) = match layout {
                    None => (false, 0),
                    Some((signed, fe)) => (*signed, self.eval_classical_usize(fe, scope)? as u32),
                };
                let fmt = FixedPointFormat::try_new(size as u32, signed, frac)
                    .map_err(|e| Diagnostic::error(e, span))?;
                Ok(DeclShape::Concrete(ConcreteQType::Num(fmt)))
            }
            QType::Array { elem, len } => {
                let elem_shape = self.resolve_qtype(elem, scope, span)?;
                let elem_ty = match elem_shape {
                    DeclShape::Concrete(t) => t,
                    _ => {
                        return Err(Diagnostic::error(
                            "array elements must have a fixed size",
                            span,
                        ))
                    }
                };
                match len {
                    Some(le) => {
                        let n = self.eval_classical_usize(le, scope)?;
                        if n == 0 {
                            return Err(Diagnostic::error("arrays cannot be empty", le.span));
                        }
                        Ok(DeclShape::Concrete(ConcreteQType::Array {
                            elem: Box::new(elem_ty),
                            len: n,
                        }))
                    }
                    None if elem_ty == ConcreteQType::Bit => Ok(DeclShape::BitArray),
                    None => Ok(DeclShape::ArrayOf(elem_ty)),
                }
            }
            QType::Named(ident) => {
                Ok(DeclShape::Concrete(self.record_layout(&ident.name, ident.span)?))
            }
        }
    }

    // ─── classical evaluation ────────────────────────────────────────

    /// Rewrite an expression so the classical evaluator can run it: resolve
    /// quantum `.size`/`.len` reads into literals and collect the classical
    /// name bindings it mentions. Reports `Quantum` when the expression
    /// reads qubit state.
    fn classicalize(
        &mut self,
        e: &Expr,
        scope: &ScopeRef<'x>,
        env: &mut Env,
    ) -> Result<Rewritten, Diagnostic> {
        let kind = match &e.kind {
            ExprKind::Number { .. } => e.kind.clone(),
            ExprKind::Path(p) => return self.classicalize_path(p, scope, env, e.span),
            ExprKind::Unary(op, x) => match self.classicalize(x, scope, env)? {
                Rewritten::Classical(cx) => ExprKind::Unary(*op, Box::new(cx)),
                Rewritten::Quantum => return Ok(Rewritten::Quantum),
            },
            ExprKind::Binary(op, l, r) => {
                let cl = self.classicalize(l, scope, env)?;
                let cr = self.classicalize(r, scope, env)?;
                match (cl, cr) {
                    (Rewritten::Classical(a), Rewritten::Classical(b)) => {
                        ExprKind::Binary(*op, Box::new(a), Box::new(b))
                    }
                    _ => return Ok(Rewritten::Quantum),
                }
            }
            ExprKind::Call { name, args } => {
                let mut cargs = Vec::with_capacity(args.len());
                for a in args {
                    match self.classicalize(a, scope, env)? {
                        Rewritten::Classical(ca) => cargs.push(ca),
                        Rewritten::Quantum => return Ok(Rewritten::Quantum),
                    }
                }
                ExprKind::Call { name: name.clone(), args: cargs }
            }
        };
        Ok(Rewritten::Classical(Expr { kind, span: e.span }))
    }

    fn classicalize_path(
        &mut self,
        p: &Path,
        scope: &ScopeRef<'x>,
        env: &mut Env,
        span: Span,
    ) -> Result<Rewritten, Diagnostic> {
        if p.base.name == "pi" && p.segs.is_empty() && lookup(scope, "pi").is_none() {
            return Ok(Rewritten::Classical(Expr { kind: ExprKind::Path(p.clone()), span }));
        }
        match lookup(scope, &p.base.name) {
            Some(NameDef::Classical(v)) => {
                env.bind(&p.base.name, v);
                // Index expressions inside the path may read quantum sizes;
                // rewrite them too.
                let mut segs = Vec::with_capacity(p.segs.len());
                for seg in &p.segs {
                    segs.push(match seg {
                        PathSeg::Field(f) => PathSeg::Field(f.clone()),
                        PathSeg::Index(ie) => match self.classicalize(ie, scope, env)? {
                            Rewritten::Classical(ce) => PathSeg::Index(ce),
                            Rewritten::Quantum => {
                                return Err(Diagnostic::error(
                                    "array indices must be classical",
                                    ie.span,
                                ))
                            }
                        },
                    });
                }
                Ok(Rewritten::Classical(Expr {
                    kind: ExprKind::Path(Path { base: p.base.clone(), segs, span: p.span }),
                    span,
                }))
            }
            Some(NameDef::Var { .. } | NameDef::View(_)) => {
                // A quantum object: only its size attributes are classical.
                let n = self.quantum_attr(p, scope)?;
                match n {
                    Some(value) => Ok(Rewritten::Classical(Expr {
                        kind: ExprKind::Number {
                            text: value.to_string(),
                            value: BigRational::from_integer(value.into()),
                        },
                        span,
                    })),
                    None => Ok(Rewritten::Quantum),
                }
            }
            Some(NameDef::Func(_)) => Err(Diagnostic::error(
                format!("'{}' is a function, not a value", p.base.name),
                p.base.span,
            )),
            None => Err(Diagnostic::error(
                format!("unknown name '{}'", p.base.name),
                p.base.span,
            )),
        }
    }

    /// For a path rooted at a quantum object: `Some(n)` if it ends in a
    /// `.size`/`.len` attribute read (value `n`), `None` if it denotes the
    /// object itself.
    fn quantum_attr(&mut self, p: &Path, scope: &ScopeRef<'x>) -> Result<Option<u64>, Diagnostic> {
        let Some((last, prefix)) = p.segs.split_last() else {
            return Ok(None);
        };
        let attr = match last {
            PathSeg::Field(f) if f.name == "size" || f.name == "len" => &f.name,
            _ => return Ok(None),
        };
        let prefix_path = Path { base: p.base.clone(), segs: prefix.to_vec(), span: p.span };
        let tp = self.resolve_quantum_path(&prefix_path, scope, false)?;
        match attr.as_str() {
            "size" => Ok(Some(tp.ty.total_size() as u64)),
            _ => match &tp.ty {
                ConcreteQType::Array { len, .. } => Ok(Some(*len as u64)),
                other => Err(Diagnostic::error(
                    format!("'.len' needs an array, but this is {other}"),
                    p.span,
                )),
            },
        }
    }

    fn eval_classical(&mut self, e: &Expr, scope: &ScopeRef<'x>) -> Result<Value, Diagnostic> {
        let mut env = Env::new();
        match self.classicalize(e, scope, &mut env)? {
            Rewritten::Classical(ce) => eval::eval(&ce, &env),
            Rewritten::Quantum => Err(Diagnostic::error(
                "expected a classical value, found a quantum expression",
                e.span,
            )),
        }
    }

    fn eval_classical_usize(
        &mut self,
        e: &Expr,
        scope: &ScopeRef<'x>,
    ) -> Result<usize, Diagnostic> {
        let mut env = Env::new();
        match self.classicalize(e, scope, &mut env)? {
            Rewritten::Classical(ce) => eval::eval_usize(&ce, &env),
            Rewritten::Quantum => Err(Diagnostic::error(
                "expected a classical value, found a quantum expression",
                e.span,
            )),
        }
    }

    fn eval_classical_int(&mut self, e: &Expr, scope: &ScopeRef<'x>) -> Result<i64, Diagnostic> {
        let v = self.eval_classical(e, scope)?;
        let n = v.as_num(e.span)?;
        if !n.is_integer() {
            return Err(Diagnostic::error(format!("expected an integer, found {n}"), e.span));
        }
        n.to_integer().to_i64().ok_or_else(|| {
            Diagnostic::error("integer is too large", e.span)
        })
    }

    fn check_classical_value(
        &mut self,
        ct: &CType,
        v: &Value,
        scope: &ScopeRef<'x>,
        span: Span,
    ) -> Result<(), Diagnostic> {
        match (ct, v) {
            (CType::Int, Value::Num(n)) => {
                if n.is_integer() {
                    Ok(())
                } else {
                    Err(Diagnostic::error(format!("expected an integer, found {n}"), span))
                }
            }
            (CType::Real, Value::Num(_)) => Ok(()),
            (CType::Array { elem, len }, Value::Array(items)) => {
                let want = self.eval_classical_usize(len, scope)?;
                if items.len() != want {
                    return Err(Diagnostic::error(
                        format!("expected an array of length {want}, found {}", items.len()),
                        span,
                    ));
                }
                for item in items {
                    self.check_classical_value(elem, item, scope, span)?;
                }
                Ok(())
            }
            (CType::Array { .. }, Value::Num(_)) => {
                Err(Diagnostic::error("expected an array value", span))
            }
            (_, Value::Array(_)) => Err(Diagnostic::error("expected a number, found an array", span)),
        }
    }

    // ─── quantum paths ───────────────────────────────────────────────

    /// Resolve a path to a slice of a variable's register. With
    /// `require_init`, the underlying variable must be initialized.
    fn resolve_quantum_path(
        &mut self,
        p: &Path,
        scope: &ScopeRef<'x>,
        require_init: bool,
    ) -> Result<TypedPath, Diagnostic> {
        let mut tp = match lookup(scope, &p.base.name) {
            Some(NameDef::Var { id, .. }) => {
                let Some(ty) = self.vars[id].ty.clone() else {
                    return Err(Diagnostic::error(
                        format!("'{}' has no value yet; its type is still undetermined", p.base.name),
                        p.span,
                    ));
                };
                TypedPath { var: id, bit_offset: 0, bit_len: ty.total_size(), ty, span: p.span }
            }
            Some(NameDef::View(v)) => TypedPath { span: p.span, ..v },
            Some(NameDef::Classical(_)) => {
                return Err(Diagnostic::error(
                    format!("'{}' is classical; a quantum object is needed here", p.base.name),
                    p.base.span,
                ))
            }
            Some(NameDef::Func(_)) => {
                return Err(Diagnostic::error(
                    format!("'{}' is a function, not a quantum object", p.base.name),
                    p.base.span,
                ))
            }
            None => {
                return Err(Diagnostic::error(
                    format!("unknown name '{}'", p.base.name),
                    p.base.span,
                ))
            }
        };
        for seg in &p.segs {
            match seg {
                PathSeg::Field(f) => {
                    let ConcreteQType::Record { fields, name } = &tp.ty else {
                        let hint = if f.name == "size" || f.name == "len" {
                            format!("'.{}' is a classical attribute, not a quantum object", f.name)
                        } else {
                            format!("{} has no fields", tp.ty)
                        };
                        return Err(Diagnostic::error(hint, f.span));
                    };
                    let mut offset = 0;
                    let mut found = None;
                    for (fname, fty) in fields {
                        if fname == &f.name {
                            found = Some((offset, fty.clone()));
                            break;
                        }
                        offset += fty.total_size();
                    }
                    let Some((off, fty)) = found else {
                        return Err(Diagnostic::error(
                            format!("struct '{name}' has no field '{}'", f.name),
                            f.span,
                        ));
                    };
                    tp.bit_offset += off;
                    tp.bit_len = fty.total_size();
                    tp.ty = fty;
                }
                PathSeg::Index(ie) => {
                    let ConcreteQType::Array { elem, len } = &tp.ty else {
                        return Err(Diagnostic::error(
                            format!("{} cannot be indexed", tp.ty),
                            ie.span,
                        ));
                    };
                    let (elem, len) = (elem.clone(), *len);
                    let i = self.eval_classical_usize(ie, scope)?;
                    if i >= len {
                        return Err(Diagnostic::error(
                            format!("index {i} is out of bounds for an array of length {len}"),
                            ie.span,
                        ));
                    }
                    let esz = elem.total_size();
                    tp.bit_offset += i as u32 * esz;
                    tp.bit_len = esz;
                    tp.ty = *elem;
                }
            }
        }
        if require_init && self.state[tp.var] != VState::Init {
            return Err(Diagnostic::error(
                format!("'{}' is used before it is initialized", p.base.name),
                p.span,
            ));
        }
        Ok(tp)
    }

    // ─── expression annotation ───────────────────────────────────────

    fn finish(&mut self, node: AnnExpr, span: Span) -> Result<AnnExpr, Diagnostic> {
        if node.fmt.size > 63 {
            return Err(Diagnostic::error(
                format!(
                    "this expression would need a {}-bit register (limit 63); \
                     narrow the operand ranges",
                    node.fmt.size
                ),
                span,
            ));
        }
        Ok(node)
    }

    fn fold_constant(&mut self, n: &BigRational, span: Span) -> Result<AnnExpr, Diagnostic> {
        let (node, lossy) = AnnExpr::constant(n, self.mp, span);
        if lossy {
            self.warn(
                format!(
                    "constant {n} is not exactly representable at machine precision {}; \
                     snapped to {}",
                    self.mp,
                    node.is_const().unwrap()
                ),
                span,
            );
        }
        self.finish(node, span)
    }

    fn annotate(&mut self, e: &Expr, scope: &ScopeRef<'x>) -> Result<AnnExpr, Diagnostic> {
        // A fully classical subtree folds to a snapped constant.
        let mut env = Env::new();
        if let Rewritten::Classical(ce) = self.classicalize(e, scope, &mut env)? {
            let v = eval::eval(&ce, &env)?;
            let n = v.as_num(e.span)?;
            return self.fold_constant(n, e.span);
        }

        let mp = self.mp;
        match &e.kind {
            ExprKind::Number { .. } => unreachable!("numbers are classical"),
            ExprKind::Path(p) => {
                let tp = self.resolve_quantum_path(p, scope, true)?;
                if tp.ty.arith_format().is_none() {
                    return Err(Diagnostic::error(
                        format!("{} cannot be read as a number", tp.ty),
                        e.span,
                    ));
                }
                self.finish(AnnExpr::leaf(tp, e.span), e.span)
            }
            ExprKind::Unary(op, x) => match op {
                UnOp::Neg => {
                    let ax = self.annotate(x, scope)?;
                    self.finish(AnnExpr::neg(ax, mp, e.span), e.span)
                }
                UnOp::BitNot => {
                    let ax = self.annotate(x, scope)?;
                    self.finish(AnnExpr::bit_not(ax, e.span), e.span)
                }
                UnOp::Not => {
                    let ax = self.annotate(x, scope)?;
                    let node = AnnExpr::logic_not(ax, e.span).map_err(|m| {
                        Diagnostic::error(m, e.span)
                            .with_hint("'not' needs a 1-bit boolean; use '~' to complement bits")
                    })?;
                    self.finish(node, e.span)
                }
            },
            ExprKind::Binary(op, l, r) => self.annotate_binary(*op, l, r, e.span, scope),
            ExprKind::Call { name, .. } => Err(Diagnostic::error(
                format!("'{}' cannot be applied to quantum values", name.name),
                e.span,
            )),
        }
    }

    fn annotate_binary(
        &mut self,
        op: BinOp,
        l: &Expr,
        r: &Expr,
        span: Span,
        scope: &ScopeRef<'x>,
    ) -> Result<AnnExpr, Diagnostic> {
        let mp = self.mp;
        let node = match op {
            BinOp::Add => {
                AnnExpr::add(self.annotate(l, scope)?, self.annotate(r, scope)?, mp, span)
            }
            BinOp::Sub => {
                AnnExpr::sub(self.annotate(l, scope)?, self.annotate(r, scope)?, mp, span)
            }
            BinOp::Mul => {
                AnnExpr::mul(self.annotate(l, scope)?, self.annotate(r, scope)?, mp, span)
            }
            BinOp::Div => {
                let c = self.eval_classical(r, scope).map_err(|d| {
                    d.with_hint("only division by a classical constant is supported")
                })?;
                let c = c.as_num(r.span)?.clone();
                if c.is_zero() {
                    return Err(Diagnostic::error("division by zero", r.span));
                }
                let al = self.annotate(l, scope)?;
                let recip = c.recip();
                let (cnode, lossy) = AnnExpr::constant(&recip, mp, r.span);
                if lossy {
                    self.warn(
                        format!(
                            "dividing by {c} multiplies by {}, the reciprocal snapped \
                             at machine precision {mp}",
                            cnode.is_const().unwrap()
                        ),
                        r.span,
                    );
                }
                AnnExpr::mul(al, cnode, mp, span)
            }
            BinOp::Pow => {
                let k = self.eval_classical_int(r, scope).map_err(|d| {
                    d.with_hint("exponents must be classical non-negative integers")
                })?;
                if !(0..=64).contains(&k) {
                    return Err(Diagnostic::error(
                        format!("exponent {k} is outside the supported range 0..=64"),
                        r.span,
                    ));
                }
                let base = self.annotate(l, scope)?;
                let node = AnnExpr::pow(base, k as u32, mp, span);
                // The expansion builds intermediate products internally;
                // audit their widths too, not just the root's.
                fn widest(e: &AnnExpr) -> u32 {
                    let inner = match &e.kind {
                        AnnExprKind::Mul { mcand, mult } => widest(mcand).max(widest(mult)),
                        AnnExprKind::MulConst { operand, .. } => widest(operand),
                        _ => 0,
                    };
                    e.fmt.size.max(inner)
                }
                if widest(&node) > 63 {
                    return Err(Diagnostic::error(
                        format!(
                            "raising to the power {k} needs a {}-bit intermediate register \
                             (limit 63)",
                            widest(&node)
                        ),
                        span,
                    ));
                }
                node
            }
            BinOp::Shl | BinOp::Shr => {
                let k = self.eval_classical_int(r, scope).map_err(|d| {
                    d.with_hint("shift amounts must be classical non-negative integers")
                })?;
                if !(0..=63).contains(&k) {
                    return Err(Diagnostic::error(
                        format!("shift amount {k} is outside the supported range 0..=63"),
                        r.span,
                    ));
                }
                let x = self.annotate(l, scope)?;
                if op == BinOp::Shl {
                    AnnExpr::shl(x, k as u32, mp, span)
                } else {
                    AnnExpr::shr(x, k as u32, mp, span)
                }
            }
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne => {
                let rop = match op {
                    BinOp::Lt => RelOp::Lt,
                    BinOp::Le => RelOp::Le,
                    BinOp::Gt => RelOp::Gt,
                    BinOp::Ge => RelOp::Ge,
                    BinOp::Eq => RelOp::Eq,
                    _ => RelOp::Ne,
                };
                let al = self.annotate(l, scope)?;
                let ar = self.annotate(r, scope)?;
                let node = AnnExpr::rel(rop, al, ar, mp, span);
                if let AnnExprKind::Rel { work, .. } = &node.kind {
                    if work.size > 63 {
                        return Err(Diagnostic::error(
                            format!(
                                "comparing these values needs a {}-bit difference register \
                                 (limit 63)",
                                work.size
                            ),
                            span,
                        ));
                    }
                }
                node
            }
            BinOp::BitAnd | BinOp::BitOr | BinOp::BitXor => {
                let bop = match op {
                    BinOp::BitAnd => BitBinOp::And,
                    BinOp::BitOr => BitBinOp::Or,
                    _ => BitBinOp::Xor,
                };
                let mut al = self.annotate(l, scope)?;
                let mut ar = self.annotate(r, scope)?;
                // A constant side is re-expressed in the other side's
                // layout so the bit patterns line up.
                let reformat = |c: BigRational, fmt: FixedPointFormat, sp: Span| {
                    AnnExpr::constant_in_format(&c, fmt, sp).ok_or_else(|| {
                        Diagnostic::error(
                            format!("constant {c} is not representable in {fmt}"),
                            sp,
                        )
                    })
                };
                if let Some(c) = al.is_const().cloned() {
                    al = reformat(c, ar.fmt, al.span)?;
                } else if let Some(c) = ar.is_const().cloned() {
                    ar = reformat(c, al.fmt, ar.span)?;
                }
                AnnExpr::bit_bin(bop, al, ar, span).map_err(|m| {
                    Diagnostic::error(m, span).with_hint(
                        "bitwise operators need operands with identical size, sign, and \
                         fraction layout",
                    )
                })?
            }
            BinOp::And | BinOp::Or | BinOp::Xor => {
                let lop = match op {
                    BinOp::And => LogicBinOp::And,
                    BinOp::Or => LogicBinOp::Or,
                    _ => LogicBinOp::Xor,
                };
                let al = self.annotate(l, scope)?;
                let ar = self.annotate(r, scope)?;
                AnnExpr::logic(lop, al, ar, span).map_err(|m| {
                    Diagnostic::error(m, span).with_hint(
                        "logical operators need 1-bit booleans; compare or mask first",
                    )
                })?
            }
        };
        self.finish(node, span)
    }

    // ─── statements ──────────────────────────────────────────────────

    fn expand_stmts(
        &mut self,
        stmts: &'x [Stmt],
        scope: &ScopeRef<'x>,
        ctx: &Ctx,
        out: &mut Vec<TypedStmt>,
    ) {
        for s in stmts {
            if self.errors.len() >= MAX_ERRORS {
                return;
            }
            if let Err(d) = self.expand_stmt(s, scope, ctx, out) {
                self.push(d);
            }
        }
    }

    /// Expand a block in a fresh frame; locals still initialized when the
    /// frame ends are released (their registers must be clean by then).
    fn expand_block(
        &mut self,
        block: &'x Block,
        parent: &ScopeRef<'x>,
        ctx: &Ctx,
        out: &mut Vec<TypedStmt>,
    ) {
        let frame = child_scope(parent);
        self.expand_stmts(&block.stmts, &frame, ctx, out);
        self.release_frame_locals(&frame, block.span, out);
    }

    fn release_frame_locals(
        &mut self,
        frame: &ScopeRef<'x>,
        span: Span,
        out: &mut Vec<TypedStmt>,
    ) {
        let locals = frame.local_decls.borrow();
        for &id in locals.iter().rev() {
            if self.state[id] == VState::Init {
                self.state[id] = VState::Uninit;
                out.push(TypedStmt::ReleaseLocal { var: id, span });
            }
        }
    }

    fn expand_stmt(
        &mut self,
        s: &'x Stmt,
        scope: &ScopeRef<'x>,
        ctx: &Ctx,
        out: &mut Vec<TypedStmt>,
    ) -> Result<(), Diagnostic> {
        match &s.kind {
            StmtKind::VarDecl { name, ty } => {
                let shape = self.resolve_qtype(ty, scope, s.span)?;
                let id = self.new_var(&name.name, &shape);
                self.bind(scope, name, NameDef::Var { id, shape: Rc::new(shape) });
                Ok(())
            }
            StmtKind::Allocate { path } => {
                let (id, shape) = self.owned_var(path, scope, "allocate")?;
                if self.state[id] == VState::Init {
                    return Err(Diagnostic::error(
                        format!("'{}' is already initialized", path.base.name),
                        s.span,
                    ));
                }
                if self.vars[id].ty.is_none() {
                    let DeclShape::Concrete(t) = &*shape else {
                        return Err(Diagnostic::error(
                            format!(
                                "cannot allocate '{}': its size is not determined; \
                                 give it a sized type",
                                path.base.name
                            ),
                            s.span,
                        ));
                    };
                    self.vars[id].ty = Some(t.clone());
                }
                self.state[id] = VState::Init;
                out.push(TypedStmt::Allocate { var: id, span: s.span });
                Ok(())
            }
            StmtKind::AssignOut { path, expr } => {
                let (id, shape) = self.owned_var(path, scope, "assign into")?;
                if self.state[id] == VState::Init {
                    return Err(Diagnostic::error(
                        format!(
                            "'{}' is already initialized; use ^= or += to update it in place",
                            path.base.name
                        ),
                        s.span,
                    ));
                }
                let expr = self.annotate(expr, scope)?;
                let adopt = match self.vars[id].ty.clone() {
                    Some(t) => match t.arith_format() {
                        Some(f) => f == expr.fmt,
                        None => {
                            return Err(Diagnostic::error(
                                format!("cannot assign a number into {t}"),
                                s.span,
                            ))
                        }
                    },
                    None => match &*shape {
                        DeclShape::Num => {
                            self.vars[id].ty = Some(ConcreteQType::Num(expr.fmt));
                            true
                        }
                        DeclShape::Concrete(_) => unreachable!("typed above"),
                        DeclShape::BitArray | DeclShape::ArrayOf(_) => {
                            return Err(Diagnostic::error(
                                format!(
                                    "'{}' is declared as an array; declare it as qnum to \
                                     receive a number",
                                    path.base.name
                                ),
                                s.span,
                            ))
                        }
                    },
                };
                self.state[id] = VState::Init;
                out.push(TypedStmt::AssignOut { var: id, expr, adopt, span: s.span });
                Ok(())
            }
            StmtKind::XorAssign { path, expr } | StmtKind::AddAssign { path, expr } => {
                let target = self.resolve_quantum_path(path, scope, true)?;
                if target.ty.arith_format().is_none() {
                    return Err(Diagnostic::error(
                        format!("cannot update {} in place as a number", target.ty),
                        s.span,
                    ));
                }
                if let Some(temps) = &ctx.within_temps {
                    if temps.contains(&target.var) {
                        self.warn(
                            format!(
                                "'{}' was created by the within block; writing into it here \
                                 must leave it restorable (checked when it is released)",
                                path.base.name
                            ),
                            s.span,
                        );
                    }
                }
                let expr = self.annotate(expr, scope)?;
                out.push(match s.kind {
                    StmtKind::XorAssign { .. } => {
                        TypedStmt::XorAssign { target, expr, span: s.span }
                    }
                    _ => TypedStmt::AddAssign { target, expr, span: s.span },
                });
                Ok(())
            }
            StmtKind::Phase { expr, angle } => {
                let theta = {
                    let mut env = Env::new();
                    match self.classicalize(angle, scope, &mut env)? {
                        Rewritten::Classical(ce) => eval::eval_f64(&ce, &env)?,
                        Rewritten::Quantum => {
                            return Err(Diagnostic::error(
                                "the phase angle must be classical",
                                angle.span,
                            ))
                        }
                    }
                };
                let expr = self.annotate(expr, scope)?;
                out.push(TypedStmt::Phase { expr, theta, span: s.span });
                Ok(())
            }
            StmtKind::AssignAmplitude { expr, indicator } => {
                let ind = self.resolve_quantum_path(indicator, scope, true)?;
                if ind.ty.total_size() != 1 {
                    return Err(Diagnostic::error(
                        format!(
                            "the amplitude indicator must be a single qubit; '{}' has {}",
                            indicator.base.name,
                            ind.ty.total_size()
                        ),
                        indicator.span,
                    ));
                }
                let expr = self.annotate(expr, scope)?;
                out.push(TypedStmt::AssignAmplitude { expr, indicator: ind, span: s.span });
                Ok(())
            }
            StmtKind::Control { cond, body } => self.expand_control(cond, body, s.span, scope, ctx, out),
            StmtKind::Repeat { var, count, body } => {
                let n = self.eval_classical_int(count, scope)?;
                if n < 0 {
                    return Err(Diagnostic::error(
                        format!("repeat count is negative ({n})"),
                        count.span,
                    ));
                }
                if n > MAX_REPEAT {
                    return Err(Diagnostic::error(
                        format!("repeat count {n} exceeds the supported maximum ({MAX_REPEAT})"),
                        count.span,
                    ));
                }
                for i in 0..n {
                    let frame = child_scope(scope);
                    frame
                        .names
                        .borrow_mut()
                        .insert(var.name.clone(), NameDef::Classical(Value::int(i)));
                    self.expand_stmts(&body.stmts, &frame, ctx, out);
                    self.release_frame_locals(&frame, body.span, out);
                    if self.errors.len() >= MAX_ERRORS {
                        break;
                    }
                }
                Ok(())
            }
            StmtKind::WithinApply { within, apply } => {
                let before = self.state.clone();
                let mut within_t = Vec::new();
                self.expand_block(within, scope, ctx, &mut within_t);
                let within_inits: Vec<VarId> = (0..self.state.len())
                    .filter(|&i| {
                        self.state[i] == VState::Init
                            && before.get(i).copied().unwrap_or(VState::Uninit) == VState::Uninit
                    })
                    .collect();
                let temp_set: HashSet<VarId> = within_inits.iter().copied().collect();
                let apply_ctx = Ctx { within_temps: Some(Rc::new(temp_set)) };
                let mut apply_t = Vec::new();
                self.expand_block(apply, scope, &apply_ctx, &mut apply_t);
                for &id in &within_inits {
                    self.state[id] = VState::Uninit;
                }
                out.push(TypedStmt::WithinApply {
                    within: within_t,
                    apply: apply_t,
                    within_inits,
                    span: s.span,
                });
                Ok(())
            }
            StmtKind::Invert { body } => {
                let before = self.state.clone();
                let mut body_t = Vec::new();
                self.expand_block(body, scope, ctx, &mut body_t);
                if self.state != before {
                    return Err(Diagnostic::error(
                        "an inverted block must leave every variable's initialization \
                         state unchanged",
                        s.span,
                    ));
                }
                out.push(TypedStmt::Invert { body: body_t, span: s.span });
                Ok(())
            }
            StmtKind::Power { count, body } => {
                let k = self.eval_classical_int(count, scope)?;
                if k < 0 {
                    return Err(Diagnostic::error(
                        format!("power exponent is negative ({k})"),
                        count.span,
                    ));
                }
                if k > MAX_REPEAT {
                    return Err(Diagnostic::error(
                        format!("power exponent {k} exceeds the supported maximum ({MAX_REPEAT})"),
                        count.span,
                    ));
                }
                for _ in 0..k {
                    self.expand_block(body, scope, ctx, out);
                    if self.errors.len() >= MAX_ERRORS {
                        break;
                    }
                }
                Ok(())
            }
            StmtKind::Call { name, args } => self.expand_call(name, args, s.span, scope, ctx, out),
        }
    }

    /// The target of `allocate` / `|=` must be a whole variable this scope
    /// owns (a local or an output parameter), not a view or a part.
    fn owned_var(
        &mut self,
        path: &Path,
        scope: &ScopeRef<'x>,
        what: &str,
    ) -> Result<(VarId, Rc<DeclShape>), Diagnostic> {
        if !path.segs.is_empty() {
            return Err(Diagnostic::error(
                format!("can only {what} a whole variable, not a part of one"),
                path.span,
            ));
        }
        match lookup(scope, &path.base.name) {
            Some(NameDef::Var { id, shape }) => Ok((id, shape)),
            Some(NameDef::View(_)) => Err(Diagnostic::error(
                format!(
                    "'{}' is bound to the caller's object and cannot be re-created; \
                     only 'output' parameters can be {what}d",
                    path.base.name
                ),
                path.span,
            )),
            Some(_) => Err(Diagnostic::error(
                format!("'{}' is not a quantum variable", path.base.name),
                path.span,
            )),
            None => Err(Diagnostic::error(
                format!("unknown name '{}'", path.base.name),
                path.base.span,
            )),
        }
    }

    fn expand_control(
        &mut self,
        cond: &'x Expr,
        body: &'x Block,
        span: Span,
        scope: &ScopeRef<'x>,
        ctx: &Ctx,
        out: &mut Vec<TypedStmt>,
    ) -> Result<(), Diagnostic> {
        // A bare one-qubit path controls directly, with no work register.
        if let ExprKind::Path(p) = &cond.kind {
            if let Some(NameDef::Var { .. } | NameDef::View(_)) = lookup(scope, &p.base.name) {
                if self.quantum_attr(p, scope)?.is_none() {
                    let tp = self.resolve_quantum_path(p, scope, true)?;
                    if tp.ty.total_size() == 1 {
                        let mut body_t = Vec::new();
                        self.expand_block(body, scope, ctx, &mut body_t);
                        out.push(TypedStmt::ControlBit { ctrl: tp, body: body_t, span });
                        return Ok(());
                    }
                }
            }
        }
        let cond_t = self.annotate(cond, scope)?;
        if let Some(c) = cond_t.is_const() {
            // Decided at compile time: the body either always or never runs.
            if c.is_zero() {
                return Ok(());
            }
            if c == &BigRational::from_integer(1.into()) {
                self.expand_block(body, scope, ctx, out);
                return Ok(());
            }
            return Err(Diagnostic::error(
                format!("the control condition must be boolean, but it is always {c}"),
                cond.span,
            ));
        }
        if cond_t.fmt != FixedPointFormat::bit() {
            return Err(Diagnostic::error(
                format!(
                    "the control condition must be boolean; this expression has format {} \
                     with values in {}",
                    cond_t.fmt, cond_t.iv
                ),
                cond.span,
            ));
        }
        let mut body_t = Vec::new();
        self.expand_block(body, scope, ctx, &mut body_t);
        out.push(TypedStmt::ControlExpr { cond: cond_t, body: body_t, span });
        Ok(())
    }

    // ─── calls ───────────────────────────────────────────────────────

    fn expand_call(
        &mut self,
        name: &'x Ident,
        args: &'x [Arg],
        span: Span,
        scope: &ScopeRef<'x>,
        ctx: &Ctx,
        out: &mut Vec<TypedStmt>,
    ) -> Result<(), Diagnostic> {
        if let Some(gate) = PrimGate::from_name(&name.name) {
            return self.expand_gate(gate, name, args, span, scope, out);
        }
        if let Some(NameDef::Func(binding)) = lookup(scope, &name.name) {
            return self.invoke(&binding, name, args, span, scope, ctx, out);
        }
        if self.funcs.contains_key(&name.name) {
            let binding = FuncBinding::Named(name.name.clone());
            return self.invoke(&binding, name, args, span, scope, ctx, out);
        }
        match lookup(scope, &name.name) {
            Some(_) => Err(Diagnostic::error(
                format!("'{}' is not a function", name.name),
                name.span,
            )),
            None => Err(Diagnostic::error(
                format!("unknown function '{}'", name.name),
                name.span,
            )),
        }
    }

    fn expand_gate(
        &mut self,
        gate: PrimGate,
        name: &Ident,
        args: &'x [Arg],
        span: Span,
        scope: &ScopeRef<'x>,
        out: &mut Vec<TypedStmt>,
    ) -> Result<(), Diagnostic> {
        let want = gate.qubit_arity() + gate.takes_angle() as usize;
        if args.len() != want {
            return Err(Diagnostic::error(
                format!("{} takes {want} arguments, found {}", name.name, args.len()),
                span,
            ));
        }
        let mut iter = args.iter();
        let theta = if gate.takes_angle() {
            let Some(Arg::Expr(ae)) = iter.next() else {
                return Err(Diagnostic::error(
                    format!("{}'s first argument is a classical angle", name.name),
                    span,
                ));
            };
            let mut env = Env::new();
            match self.classicalize(ae, scope, &mut env)? {
                Rewritten::Classical(ce) => Some(eval::eval_f64(&ce, &env)?),
                Rewritten::Quantum => {
                    return Err(Diagnostic::error(
                        format!("{}'s rotation angle must be classical", name.name),
                        ae.span,
                    ))
                }
            }
        } else {
            None
        };
        let mut qargs = Vec::new();
        for a in iter {
            let Arg::Expr(e) = a else {
                return Err(Diagnostic::error("gates take qubit operands", span));
            };
            let ExprKind::Path(p) = &e.kind else {
                return Err(Diagnostic::error(
                    "gate operands must name qubits, not computed expressions",
                    e.span,
                ));
            };
            let tp = self.resolve_quantum_path(p, scope, true)?;
            if tp.ty.total_size() != 1 {
                return Err(Diagnostic::error(
                    format!(
                        "gate operands must be single qubits; '{}' has {} qubits",
                        p.base.name,
                        tp.ty.total_size()
                    ),
                    e.span,
                ));
            }
            qargs.push(tp);
        }
        for i in 0..qargs.len() {
            for j in i + 1..qargs.len() {
                if qargs[i].overlaps(&qargs[j]) {
                    return Err(Diagnostic::error(
                        format!("{}'s operands must be distinct qubits", name.name),
                        span,
                    ));
                }
            }
        }
        out.push(TypedStmt::Gate { gate, theta, args: qargs, span });
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn invoke(
        &mut self,
        binding: &FuncBinding<'x>,
        name: &Ident,
        args: &'x [Arg],
        span: Span,
        caller: &ScopeRef<'x>,
        ctx: &Ctx,
        out: &mut Vec<TypedStmt>,
    ) -> Result<(), Diagnostic> {
        // Normalize both callable forms into (params, body, base scope).
        enum Callee<'c, 'x> {
            Def(&'x FuncDef),
            Lambda(&'c FuncBinding<'x>),
        }
        let (callee, base_scope): (Callee<'_, 'x>, ScopeRef<'x>) = match binding {
            FuncBinding::Named(n) => {
                let def = self.funcs.get(n.as_str()).copied().ok_or_else(|| {
                    Diagnostic::error(format!("unknown function '{n}'"), name.span)
                })?;
                // Named functions see only globals; walk to the root scope.
                let mut root = caller.clone();
                while let Some(p) = root.parent.clone() {
                    root = p;
                }
                (Callee::Def(def), root)
            }
            FuncBinding::Lambda { env, .. } => (Callee::Lambda(binding), env.clone()),
        };

        let frame = child_scope(&base_scope);
        let mut quantum_uses: Vec<(VarId, Range<u32>, String)> = Vec::new();
        let mut output_checks: Vec<(VarId, String)> = Vec::new();

        enum P<'x> {
            Full(&'x Param),
            LambdaIn(&'x Ident, &'x QType),
        }
        let (params, display_name): (Vec<P<'x>>, String) = match callee {
            Callee::Def(def) => {
                (def.params.iter().map(P::Full).collect(), def.name.name.clone())
            }
            Callee::Lambda(FuncBinding::Lambda { lambda, tys, .. }) => {
                if lambda.params.len() != tys.len() {
                    return Err(Diagnostic::error(
                        format!(
                            "this operand takes {} parameters, but the lambda names {}",
                            tys.len(),
                            lambda.params.len()
                        ),
                        lambda.span,
                    ));
                }
                (
                    lambda.params.iter().zip(tys.iter()).map(|(i, t)| P::LambdaIn(i, t)).collect(),
                    format!("the lambda passed to '{}'", name.name),
                )
            }
            Callee::Lambda(_) => unreachable!(),
        };

        if params.len() != args.len() {
            return Err(Diagnostic::error(
                format!(
                    "'{}' takes {} arguments, found {}",
                    name.name,
                    params.len(),
                    args.len()
                ),
                span,
            ));
        }

        for (p, arg) in params.iter().zip(args) {
            match p {
                P::Full(param) => {
                    self.bind_param(param, arg, caller, &frame, &mut quantum_uses, &mut output_checks)?;
                }
                P::LambdaIn(ident, qt) => {
                    let Arg::Expr(e) = arg else {
                        return Err(Diagnostic::error(
                            "this parameter takes a quantum argument, not a lambda",
                            span,
                        ));
                    };
                    let ExprKind::Path(ap) = &e.kind else {
                        return Err(Diagnostic::error(
                            "quantum arguments must be paths",
                            e.span,
                        ));
                    };
                    let tp = self.resolve_quantum_path(ap, caller, true)?;
                    let shape = self.resolve_qtype(qt, &frame, e.span)?;
                    let view = self.bind_view(tp, &shape, &ap.base.name, e.span)?;
                    quantum_uses.push((
                        view.var,
                        view.bit_offset..view.bit_offset + view.bit_len,
                        ap.base.name.clone(),
                    ));
                    self.bind(&frame, ident, NameDef::View(view));
                }
            }
        }

        // Lambda arguments capture the caller's objects by reference: those
        // count as uses of the whole object for aliasing purposes.
        for (p, arg) in params.iter().zip(args) {
            let P::Full(param) = p else { continue };
            if !matches!(param.ty, ParamType::Function(_)) {
                continue;
            }
            if let Arg::Lambda(lam) = arg {
                for cap in captured_names(&lam.body, &lam.params) {
                    match lookup(caller, &cap) {
                        Some(NameDef::Var { id, .. }) => {
                            let len =
                                self.vars[id].ty.as_ref().map(|t| t.total_size()).unwrap_or(0);
                            quantum_uses.push((id, 0..len.max(1), cap));
                        }
                        Some(NameDef::View(v)) => {
                            quantum_uses.push((
                                v.var,
                                v.bit_offset..v.bit_offset + v.bit_len,
                                cap,
                            ));
                        }
                        _ => {}
                    }
                }
            }
        }

        for i in 0..quantum_uses.len() {
            for j in i + 1..quantum_uses.len() {
                let (a, b) = (&quantum_uses[i], &quantum_uses[j]);
                if a.0 == b.0 && a.1.start < b.1.end && b.1.start < a.1.end {
                    return Err(Diagnostic::error(
                        format!(
                            "arguments alias: '{}' and '{}' refer to overlapping qubits",
                            a.2, b.2
                        ),
                        span,
                    ));
                }
            }
        }

        if self.call_stack.iter().any(|n| n == &display_name) {
            return Err(Diagnostic::error(
                format!("recursive call to '{display_name}' is not supported"),
                span,
            ));
        }
        self.call_stack.push(display_name.clone());
        let body = match callee {
            Callee::Def(def) => &def.body,
            Callee::Lambda(FuncBinding::Lambda { lambda, .. }) => &lambda.body,
            Callee::Lambda(_) => unreachable!(),
        };
        let inner = child_scope(&frame);
        self.expand_stmts(&body.stmts, &inner, ctx, out);
        self.release_frame_locals(&inner, span, out);
        self.call_stack.pop();

        for (id, pname) in output_checks {
            if self.state[id] != VState::Init {
                return Err(Diagnostic::error(
                    format!("'{display_name}' did not initialize its output parameter '{pname}'"),
                    span,
                ));
            }
        }
        Ok(())
    }

    fn bind_param(
        &mut self,
        param: &'x Param,
        arg: &'x Arg,
        caller: &ScopeRef<'x>,
        frame: &ScopeRef<'x>,
        quantum_uses: &mut Vec<(VarId, Range<u32>, String)>,
        output_checks: &mut Vec<(VarId, String)>,
    ) -> Result<(), Diagnostic> {
        match &param.ty {
            ParamType::Classical(ct) => {
                let Arg::Expr(e) = arg else {
                    return Err(Diagnostic::error(
                        format!("parameter '{}' takes a classical value", param.name.name),
                        param.span,
                    ));
                };
                let v = self.eval_classical(e, caller)?;
                self.check_classical_value(ct, &v, frame, e.span)?;
                self.bind(frame, &param.name, NameDef::Classical(v));
                Ok(())
            }
            ParamType::Function(tys) => {
                let binding = match arg {
                    Arg::Lambda(lam) => {
                        FuncBinding::Lambda { lambda: lam, tys, env: caller.clone() }
                    }
                    Arg::Expr(Expr { kind: ExprKind::Path(p), .. }) if p.segs.is_empty() => {
                        match lookup(caller, &p.base.name) {
                            Some(NameDef::Func(b)) => b,
                            None if self.funcs.contains_key(&p.base.name) => {
                                FuncBinding::Named(p.base.name.clone())
                            }
                            _ => {
                                return Err(Diagnostic::error(
                                    format!(
                                        "parameter '{}' takes a function; '{}' is not one",
                                        param.name.name, p.base.name
                                    ),
                                    p.span,
                                ))
                            }
                        }
                    }
                    Arg::Expr(e) => {
                        return Err(Diagnostic::error(
                            format!(
                                "parameter '{}' takes a function (a lambda or a function name)",
                                param.name.name
                            ),
                            e.span,
                        ))
                    }
                };
                self.bind(frame, &param.name, NameDef::Func(binding));
                Ok(())
            }
            ParamType::Quantum(qt) => {
                let Arg::Expr(e) = arg else {
                    return Err(Diagnostic::error(
                        format!("parameter '{}' takes a quantum argument", param.name.name),
                        param.span,
                    ));
                };
                let ExprKind::Path(ap) = &e.kind else {
                    return Err(Diagnostic::error(
                        "quantum arguments must be paths",
                        e.span,
                    ));
                };
                let shape = self.resolve_qtype(qt, frame, param.span)?;
                if param.output {
                    if !ap.segs.is_empty() {
                        return Err(Diagnostic::error(
                            "output arguments must be whole variables",
                            ap.span,
                        ));
                    }
                    let (id, _) = self.owned_var(ap, caller, "pass as output")?;
                    if self.state[id] == VState::Init {
                        return Err(Diagnostic::error(
                            format!(
                                "output argument '{}' is already initialized",
                                ap.base.name
                            ),
                            ap.span,
                        ));
                    }
                    self.reconcile_output_type(id, &shape, ap, param)?;
                    let len = self.vars[id].ty.as_ref().map(|t| t.total_size()).unwrap_or(0);
                    quantum_uses.push((id, 0..len.max(1), ap.base.name.clone()));
                    output_checks.push((id, param.name.name.clone()));
                    self.bind(frame, &param.name, NameDef::Var { id, shape: Rc::new(shape) });
                    Ok(())
                } else {
                    let tp = self.resolve_quantum_path(ap, caller, true)?;
                    let view = self.bind_view(tp, &shape, &ap.base.name, e.span)?;
                    quantum_uses.push((
                        view.var,
                        view.bit_offset..view.bit_offset + view.bit_len,
                        ap.base.name.clone(),
                    ));
                    self.bind(frame, &param.name, NameDef::View(view));
                    Ok(())
                }
            }
        }
    }

    /// An output argument's existing type must be consistent with the
    /// parameter's declaration; an untyped variable adopts a concrete
    /// parameter type up front.
    fn reconcile_output_type(
        &mut self,
        id: VarId,
        shape: &DeclShape,
        ap: &Path,
        param: &Param,
    ) -> Result<(), Diagnostic> {
        match (&self.vars[id].ty, shape) {
            (None, DeclShape::Concrete(t)) => {
                self.vars[id].ty = Some(t.clone());
                Ok(())
            }
            (None, _) => Ok(()),
            (Some(t), DeclShape::Concrete(p)) if t == p => Ok(()),
            (Some(t), DeclShape::Concrete(p)) => Err(Diagnostic::error(
                format!(
                    "output argument '{}' has type {t}, but parameter '{}' wants {p}",
                    ap.base.name, param.name.name
                ),
                ap.span,
            )),
            (Some(t), DeclShape::Num) => {
                if t.arith_format().is_some() {
                    Ok(())
                } else {
                    Err(Diagnostic::error(
                        format!(
                            "output argument '{}' has type {t}, which is not numeric",
                            ap.base.name
                        ),
                        ap.span,
                    ))
                }
            }
            (Some(t), DeclShape::BitArray) => match t {
                ConcreteQType::Array { elem, .. } if **elem == ConcreteQType::Bit => Ok(()),
                _ => Err(Diagnostic::error(
                    format!(
                        "output argument '{}' has type {t}, but parameter '{}' wants a \
                         qubit array",
                        ap.base.name, param.name.name
                    ),
                    ap.span,
                )),
            },
            (Some(t), DeclShape::ArrayOf(e)) => match t {
                ConcreteQType::Array { elem, .. } if **elem == *e => Ok(()),
                _ => Err(Diagnostic::error(
                    format!(
                        "output argument '{}' has type {t}, but parameter '{}' wants an \
                         array of {e}",
                        ap.base.name, param.name.name
                    ),
                    ap.span,
                )),
            },
        }
    }

    /// Packed-view conversion: decide the type under which the callee sees
    /// an initialized argument.
    fn bind_view(
        &mut self,
        tp: TypedPath,
        shape: &DeclShape,
        arg_name: &str,
        span: Span,
    ) -> Result<TypedPath, Diagnostic> {
        let total = tp.ty.total_size();
        let ty = match shape {
            DeclShape::Concrete(ConcreteQType::Bit) => {
                if total != 1 {
                    return Err(Diagnostic::error(
                        format!("'{arg_name}' has {total} qubits; the parameter is one qbit"),
                        span,
                    ));
                }
                ConcreteQType::Bit
            }
            DeclShape::Concrete(ConcreteQType::Num(f)) => {
                if tp.ty.arith_format() != Some(*f) {
                    return Err(Diagnostic::error(
                        format!(
                            "'{arg_name}' is {}, which does not match the parameter's {}",
                            tp.ty,
                            ConcreteQType::Num(*f)
                        ),
                        span,
                    ));
                }
                ConcreteQType::Num(*f)
            }
            // Any object binds to a qubit array of the same total size; this
            // is the packed view that lets structured data flow into generic
            // register functions.
            DeclShape::Concrete(ConcreteQType::Array { elem, len })
                if **elem == ConcreteQType::Bit =>
            {
                if total as usize != *len {
                    return Err(Diagnostic::error(
                        format!(
                            "'{arg_name}' has {total} qubits; the parameter wants {len}"
                        ),
                        span,
                    ));
                }
                ConcreteQType::Array { elem: elem.clone(), len: *len }
            }
            DeclShape::Concrete(t) => {
                if tp.ty != *t {
                    return Err(Diagnostic::error(
                        format!("'{arg_name}' is {}, but the parameter wants {t}", tp.ty),
                        span,
                    ));
                }
                t.clone()
            }
            DeclShape::Num => match tp.ty.arith_format() {
                Some(f) => ConcreteQType::Num(f),
                None => {
                    return Err(Diagnostic::error(
                        format!("'{arg_name}' is {}, which has no numeric view", tp.ty),
                        span,
                    ))
                }
            },
            DeclShape::BitArray => {
                ConcreteQType::Array { elem: Box::new(ConcreteQType::Bit), len: total as usize }
            }
            DeclShape::ArrayOf(e) => match &tp.ty {
                ConcreteQType::Array { elem, len } if **elem == *e => {
                    ConcreteQType::Array { elem: elem.clone(), len: *len }
                }
                other => {
                    return Err(Diagnostic::error(
                        format!("'{arg_name}' is {other}, but the parameter wants an array of {e}"),
                        span,
                    ))
                }
            },
        };
        Ok(TypedPath { ty, ..tp })
    }
}

// ─── capture scanning ────────────────────────────────────────────────

/// Names a lambda body reads from its environment (everything referenced
/// that is not locally bound inside the body).
fn captured_names(body: &Block, params: &[Ident]) -> BTreeSet<String> {
    struct Scan {
        bound: Vec<HashSet<String>>,
        found: BTreeSet<String>,
    }
    impl Scan {
        fn is_bound(&self, name: &str) -> bool {
            self.bound.iter().any(|f| f.contains(name))
        }
        fn use_name(&mut self, name: &str) {
            if !self.is_bound(name) {
                self.found.insert(name.to_string());
            }
        }
        fn path(&mut self, p: &Path) {
            self.use_name(&p.base.name);
            for seg in &p.segs {
                if let PathSeg::Index(e) = seg {
                    self.expr(e);
                }
            }
        }
        fn expr(&mut self, e: &Expr) {
            match &e.kind {
                ExprKind::Number { .. } => {}
                ExprKind::Path(p) => self.path(p),
                ExprKind::Unary(_, x) => self.expr(x),
                ExprKind::Binary(_, l, r) => {
                    self.expr(l);
                    self.expr(r);
                }
                ExprKind::Call { args, .. } => args.iter().for_each(|a| self.expr(a)),
            }
        }
        fn block(&mut self, b: &Block) {
            self.bound.push(HashSet::new());
            for s in &b.stmts {
                self.stmt(s);
            }
            self.bound.pop();
        }
        fn stmt(&mut self, s: &Stmt) {
            match &s.kind {
                StmtKind::VarDecl { name, .. } => {
                    self.bound.last_mut().unwrap().insert(name.name.clone());
                }
                StmtKind::Allocate { path } => self.path(path),
                StmtKind::AssignOut { path, expr }
                | StmtKind::XorAssign { path, expr }
                | StmtKind::AddAssign { path, expr } => {
                    self.path(path);
                    self.expr(expr);
                }
                StmtKind::Phase { expr, angle } => {
                    self.expr(expr);
                    self.expr(angle);
                }
                StmtKind::AssignAmplitude { expr, indicator } => {
                    self.expr(expr);
                    self.path(indicator);
                }
                StmtKind::Control { cond, body } => {
                    self.expr(cond);
                    self.block(body);
                }
                StmtKind::Repeat { var, count, body } => {
                    self.expr(count);
                    self.bound.push(HashSet::new());
                    self.bound.last_mut().unwrap().insert(var.name.clone());
                    for st in &body.stmts {
                        self.stmt(st);
                    }
                    self.bound.pop();
                }
                StmtKind::WithinApply { within, apply } => {
                    self.block(within);
                    self.block(apply);
                }
                StmtKind::Invert { body } => self.block(body),
                StmtKind::Power { count, body } => {
                    self.expr(count);
                    self.block(body);
                }
                StmtKind::Call { args, .. } => {
                    for a in args {
                        match a {
                            Arg::Expr(e) => self.expr(e),
                            Arg::Lambda(lam) => {
                                self.bound.push(
                                    lam.params.iter().map(|i| i.name.clone()).collect(),
                                );
                                for st in &lam.body.stmts {
                                    self.stmt(st);
                                }
                                self.bound.pop();
                            }
                        }
                    }
                }
            }
        }
    }
    let mut scan = Scan {
        bound: vec![params.iter().map(|i| i.name.clone()).collect()],
        found: BTreeSet::new(),
    };
    for s in &body.stmts {
        scan.stmt(s);
    }
    scan.found
}
