//! Brute-force reference evaluators used by the test suite: exhaustive
//! bounded path enumeration over control-flow graphs, a naive per-path
//! interpreter over lowered statements, and path-derived def-use
//! observations.
//!
//! These exist to cross-check the dataflow analyses, so they deliberately
//! share nothing with them beyond the program representation itself: the
//! evaluation, joining and bookkeeping here are all written from scratch
//! against the IR and CFG types.

use crate::ir::cfg::{node_of, Cfg, CfgNode, EdgeLabel, EXIT};
use crate::ir::{
    ArgKind, CallSiteId, CallTarget, ExprId, IrExprKind, IrStmtKind, MethodId, MethodIr,
    ProgramIr, StmtId, VarId,
};
use crate::Value;
use std::collections::{BTreeMap, BTreeSet};

/// Too many distinct paths to enumerate within the requested budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathBudgetExceeded;

/// All entry-to-exit node sequences of a CFG, re-entering each loop header
/// through a back edge at most twice per path (so every loop body runs zero,
/// one or two times, whichever branch ends the iteration). Paths come out in
/// successor order, deterministically.
pub fn enumerate_paths(cfg: &Cfg, max_paths: usize) -> Result<Vec<Vec<CfgNode>>, PathBudgetExceeded> {
    let mut out = Vec::new();
    let mut path = vec![crate::ir::cfg::ENTRY];
    let mut reentries: BTreeMap<CfgNode, u8> = BTreeMap::new();
    walk(cfg, &mut path, &mut reentries, &mut out, max_paths)?;
    Ok(out)
}

fn walk(
    cfg: &Cfg,
    path: &mut Vec<CfgNode>,
    reentries: &mut BTreeMap<CfgNode, u8>,
    out: &mut Vec<Vec<CfgNode>>,
    max_paths: usize,
) -> Result<(), PathBudgetExceeded> {
    let node = *path.last().expect("path never empty");
    if node == EXIT {
        if out.len() == max_paths {
            return Err(PathBudgetExceeded);
        }
        out.push(path.clone());
        return Ok(());
    }
    for &(succ, label) in &cfg.succs[node] {
        let back = label == EdgeLabel::LoopBack;
        if back {
            let count = reentries.entry(succ).or_insert(0);
            if *count >= 2 {
                continue;
            }
            *count += 1;
        }
        path.push(succ);
        let r = walk(cfg, path, reentries, out, max_paths);
        path.pop();
        if back {
            *reentries.get_mut(&succ).expect("just inserted") -= 1;
        }
        r?;
    }
    Ok(())
}

/// Variable environment at one program point. A missing entry means the
/// value was not literal-derivable on this path ("oracle-unknown").
pub type Env = BTreeMap<VarId, Value>;

/// The record of one interpreted path.
pub struct PathTrace {
    pub nodes: Vec<CfgNode>,
    /// Environment observed just before each node (indexed like `nodes`).
    pub before: Vec<Env>,
    /// `Some(v)` when the path executed `return e`; the inner option is
    /// `None` when the returned value was not derivable.
    pub ret: Option<Option<Value>>,
}

pub struct Interpreter<'a> {
    pub ir: &'a ProgramIr,
    /// Static constants visible to `Owner.FIELD` reads: the project's
    /// `Class.FIELD` entries plus any library constants the caller supplies
    /// under fully qualified names.
    pub consts: BTreeMap<String, Value>,
    /// Bound on nested evaluation of calls into project methods.
    pub max_call_depth: usize,
    /// Bound handed to path enumeration per interpreted method.
    pub max_paths: usize,
}

impl<'a> Interpreter<'a> {
    pub fn new(ir: &'a ProgramIr) -> Self {
        Interpreter {
            ir,
            consts: ir.static_consts.clone(),
            max_call_depth: 6,
            max_paths: 4096,
        }
    }

    pub fn with_consts(ir: &'a ProgramIr, extra: &BTreeMap<String, Value>) -> Self {
        let mut me = Self::new(ir);
        for (k, v) in extra {
            me.consts.insert(k.clone(), v.clone());
        }
        me
    }

    /// Replay one CFG path of a method under the given parameter bindings.
    pub fn interpret_path(&self, method: MethodId, path: &[CfgNode], params: &Env) -> PathTrace {
        let m = self.ir.method(method);
        let mut env = params.clone();
        let mut before = Vec::with_capacity(path.len());
        let mut ret = None;
        for &node in path {
            before.push(env.clone());
            let Some(stmt) = crate::ir::cfg::stmt_of(node) else {
                continue;
            };
            match &m.stmts[stmt].kind {
                IrStmtKind::Decl { var, init, external } => {
                    let val = match (init, external) {
                        (Some(e), _) => self.eval(m, &env, *e, self.max_call_depth),
                        (None, _) => None,
                    };
                    match (val, external) {
                        (Some(v), false) => {
                            env.insert(*var, v);
                        }
                        _ => {
                            env.remove(var);
                        }
                    }
                }
                IrStmtKind::Assign { var, value } => {
                    let val = self.eval(m, &env, *value, self.max_call_depth);
                    if let Some(v) = var {
                        match val {
                            Some(x) => {
                                env.insert(*v, x);
                            }
                            None => {
                                env.remove(v);
                            }
                        }
                    }
                }
                IrStmtKind::Expr { .. } | IrStmtKind::Cond { .. } => {}
                IrStmtKind::Return { value } => {
                    ret = Some(value.map(|e| self.eval(m, &env, e, self.max_call_depth)).flatten());
                }
            }
            self.apply_mutation_kills(method, stmt, &mut env);
        }
        PathTrace {
            nodes: path.to_vec(),
            before,
            ret,
        }
    }

    /// Byte and char arrays handed to calls outside the project are treated
    /// as clobbered after the call (the callee may have filled them, as
    /// `SecureRandom.nextBytes` does). Project-internal calls are assumed
    /// non-mutating: the subject subset has no array element assignment.
    fn apply_mutation_kills(&self, method: MethodId, stmt: StmtId, env: &mut Env) {
        let m = self.ir.method(method);
        for sid in self.ir.stmt_sites(method, stmt) {
            let site = self.ir.site(sid);
            if !matches!(site.target, CallTarget::External { .. }) {
                continue;
            }
            for (arg, kind) in site.args.iter().zip(&site.arg_kinds) {
                if !matches!(kind, ArgKind::Bytes | ArgKind::Chars) {
                    continue;
                }
                if let IrExprKind::Var(v) = &m.exprs[*arg].kind {
                    env.remove(v);
                }
            }
        }
    }

    fn eval(&self, m: &MethodIr, env: &Env, expr: ExprId, depth: usize) -> Option<Value> {
        match &m.exprs[expr].kind {
            IrExprKind::Str(s) => Some(Value::Str(s.clone())),
            IrExprKind::Int(i) => Some(Value::Int(*i)),
            IrExprKind::Bool(b) => Some(Value::Bool(*b)),
            IrExprKind::Null => Some(Value::Null),
            IrExprKind::Var(v) => env.get(v).cloned(),
            IrExprKind::StaticField { owner_candidates, field } => {
                let mut hits = BTreeSet::new();
                for owner in owner_candidates {
                    if let Some(v) = self.consts.get(&format!("{owner}.{field}")) {
                        hits.insert(v.clone());
                    }
                }
                if hits.len() == 1 {
                    hits.into_iter().next()
                } else {
                    None
                }
            }
            IrExprKind::InstanceField { .. } => None,
            IrExprKind::Call { site } => self.eval_call(m, env, *site, depth),
            IrExprKind::New { .. } => None,
            IrExprKind::ArrayLit { elem_ty, elems } => {
                if elem_ty != "byte" {
                    return None;
                }
                let mut bytes = Vec::with_capacity(elems.len());
                for e in elems {
                    match self.eval(m, env, *e, depth) {
                        Some(Value::Int(i)) => bytes.push(i as u8),
                        _ => return None,
                    }
                }
                Some(Value::Bytes(bytes))
            }
            IrExprKind::ArrayNew { elem_ty, len } => {
                if elem_ty != "byte" {
                    return None;
                }
                match self.eval(m, env, *len, depth) {
                    Some(Value::Int(n)) if (0..=4096).contains(&n) => {
                        Some(Value::Bytes(vec![0; n as usize]))
                    }
                    _ => None,
                }
            }
            IrExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(m, env, *lhs, depth)?;
                let r = self.eval(m, env, *rhs, depth)?;
                fold_binary(*op, &l, &r)
            }
            IrExprKind::Opaque => None,
        }
    }

    fn eval_call(&self, m: &MethodIr, env: &Env, site_id: CallSiteId, depth: usize) -> Option<Value> {
        let site = self.ir.site(site_id);
        match &site.target {
            CallTarget::Project(callee) => {
                if depth == 0 {
                    return None;
                }
                let callee_m = self.ir.method(*callee);
                let mut penv = Env::new();
                for (param, arg) in callee_m.params.iter().zip(&site.args) {
                    if let Some(v) = self.eval(m, env, *arg, depth) {
                        penv.insert(*param, v);
                    }
                }
                let paths = enumerate_paths(&callee_m.cfg, self.max_paths).ok()?;
                let mut rets: BTreeSet<Option<Value>> = BTreeSet::new();
                for p in &paths {
                    let mut sub = Interpreter {
                        ir: self.ir,
                        consts: self.consts.clone(),
                        max_call_depth: depth - 1,
                        max_paths: self.max_paths,
                    };
                    sub.max_call_depth = depth - 1;
                    let t = sub.interpret_path(*callee, p, &penv);
                    rets.insert(t.ret.flatten());
                }
                match (rets.len(), rets.into_iter().next()) {
                    (1, Some(only)) => only,
                    _ => None,
                }
            }
            CallTarget::ProjectCtor(_) => None,
            // Two string conversions matter to crypto material tracking and
            // are modeled: getBytes() and toCharArray() over constants.
            CallTarget::External { .. } => {
                let recv = site.receiver_expr?;
                let rv = self.eval(m, env, recv, depth)?;
                match (site.name.as_str(), rv) {
                    ("getBytes", Value::Str(s)) => Some(Value::Bytes(s.into_bytes())),
                    ("toCharArray", Value::Str(s)) => Some(Value::Str(s)),
                    _ => None,
                }
            }
        }
    }

    /// Values an expression takes just before `stmt`, one entry per visit of
    /// the statement on each enumerated path, under fixed parameter bindings.
    pub fn values_at(
        &self,
        method: MethodId,
        stmt: StmtId,
        expr: ExprId,
        params: &Env,
    ) -> Result<Vec<Option<Value>>, PathBudgetExceeded> {
        let m = self.ir.method(method);
        let node = node_of(stmt);
        let mut out = Vec::new();
        for path in enumerate_paths(&m.cfg, self.max_paths)? {
            if !path.contains(&node) {
                continue;
            }
            let t = self.interpret_path(method, &path, params);
            for (i, &n) in t.nodes.iter().enumerate() {
                if n == node {
                    out.push(self.eval(m, &t.before[i], expr, self.max_call_depth));
                }
            }
        }
        Ok(out)
    }

    /// Parameter environments a call chain can produce for its final callee:
    /// one per combination of intra-method path and upstream environment.
    /// The chain lists project call sites caller-first and must start in a
    /// method whose own parameters are unbound (an entry point).
    pub fn param_envs(&self, chain: &[CallSiteId]) -> Result<Vec<Env>, PathBudgetExceeded> {
        let mut envs = vec![Env::new()];
        for &sid in chain {
            let site = self.ir.site(sid);
            let CallTarget::Project(callee) = site.target else {
                panic!("call chains must follow project edges");
            };
            let caller = site.method;
            let m = self.ir.method(caller);
            let callee_params = self.ir.method(callee).params.clone();
            let node = node_of(site.stmt);
            let paths = enumerate_paths(&m.cfg, self.max_paths)?;
            let mut next = Vec::new();
            for env0 in &envs {
                for path in &paths {
                    if !path.contains(&node) {
                        continue;
                    }
                    let t = self.interpret_path(caller, path, env0);
                    for (i, &n) in t.nodes.iter().enumerate() {
                        if n != node {
                            continue;
                        }
                        let mut pe = Env::new();
                        for (param, arg) in callee_params.iter().zip(&site.args) {
                            if let Some(v) = self.eval(m, &t.before[i], *arg, self.max_call_depth) {
                                pe.insert(*param, v);
                            }
                        }
                        next.push(pe);
                    }
                }
            }
            if next.len() > self.max_paths {
                return Err(PathBudgetExceeded);
            }
            envs = next;
        }
        Ok(envs)
    }

    /// Ground truth for "what can this expression be under this call chain":
    /// the multiset of per-path values across every parameter environment
    /// the chain can produce. `None` entries mark underivable paths.
    pub fn chain_values(
        &self,
        chain: &[CallSiteId],
        method: MethodId,
        stmt: StmtId,
        expr: ExprId,
    ) -> Result<Vec<Option<Value>>, PathBudgetExceeded> {
        let mut out = Vec::new();
        for pe in self.param_envs(chain)? {
            out.extend(self.values_at(method, stmt, expr, &pe)?);
        }
        Ok(out)
    }
}

/// Shared constant-folding semantics (kept in data so both evaluators can't
/// drift apart silently: the analyses implement the same table and the
/// equivalence tests compare outcomes).
pub fn fold_binary(op: crate::frontend::ast::BinOp, l: &Value, r: &Value) -> Option<Value> {
    use crate::frontend::ast::BinOp::*;
    match (op, l, r) {
        (Add, Value::Str(a), b) => Some(Value::Str(format!("{a}{b}"))),
        (Add, a, Value::Str(b)) => Some(Value::Str(format!("{a}{b}"))),
        (Add, Value::Int(a), Value::Int(b)) => Some(Value::Int(a.wrapping_add(*b))),
        (Sub, Value::Int(a), Value::Int(b)) => Some(Value::Int(a.wrapping_sub(*b))),
        (Mul, Value::Int(a), Value::Int(b)) => Some(Value::Int(a.wrapping_mul(*b))),
        (Div, Value::Int(a), Value::Int(b)) if *b != 0 => Some(Value::Int(a.wrapping_div(*b))),
        (Lt, Value::Int(a), Value::Int(b)) => Some(Value::Bool(a < b)),
        (Le, Value::Int(a), Value::Int(b)) => Some(Value::Bool(a <= b)),
        (Gt, Value::Int(a), Value::Int(b)) => Some(Value::Bool(a > b)),
        (Ge, Value::Int(a), Value::Int(b)) => Some(Value::Bool(a >= b)),
        (Eq, a, b) if same_kind(a, b) => Some(Value::Bool(a == b)),
        (Ne, a, b) if same_kind(a, b) => Some(Value::Bool(a != b)),
        _ => None,
    }
}

fn same_kind(a: &Value, b: &Value) -> bool {
    matches!(
        (a, b),
        (Value::Int(_), Value::Int(_))
            | (Value::Str(_), Value::Str(_))
            | (Value::Bool(_), Value::Bool(_))
    )
}

/// A definition site as observed by walking paths; mirrors the dataflow
/// notion without sharing its types.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PathDef {
    Param,
    Stmt(StmtId),
}

/// Walk every enumerated path of a method and record, for each variable
/// read, which definition last wrote it — the path-derived ground truth for
/// def-use chains. `None` for the definition marks reads of variables no
/// statement or parameter has defined on that path.
pub fn observe_def_use(
    ir: &ProgramIr,
    method: MethodId,
    max_paths: usize,
) -> Result<BTreeSet<(StmtId, VarId, Option<PathDef>)>, PathBudgetExceeded> {
    let m = ir.method(method);
    let mut observed = BTreeSet::new();
    for path in enumerate_paths(&m.cfg, max_paths)? {
        let mut last_def: BTreeMap<VarId, PathDef> = BTreeMap::new();
        for &p in &m.params {
            last_def.insert(p, PathDef::Param);
        }
        for &node in &path {
            let Some(stmt) = crate::ir::cfg::stmt_of(node) else {
                continue;
            };
            let mut reads = Vec::new();
            for root in ir.stmt_roots(method, stmt) {
                ir.expr_vars(method, root, &mut reads);
            }
            for var in reads {
                observed.insert((stmt, var, last_def.get(&var).copied()));
            }
            match &m.stmts[stmt].kind {
                IrStmtKind::Decl { var, init, external } => {
                    if init.is_some() || *external {
                        last_def.insert(*var, PathDef::Stmt(stmt));
                    }
                }
                IrStmtKind::Assign { var: Some(v), .. } => {
                    last_def.insert(*v, PathDef::Stmt(stmt));
                }
                _ => {}
            }
        }
    }
    Ok(observed)
}
