//! Interprocedural, context-sensitive constant value analysis.
//!
//! For every method reachable from a call-graph root the analysis computes,
//! per calling context, the lattice value of each variable at each program
//! point. Contexts are call strings truncated to their `k` most recent call
//! sites, so two callers handing different literals to a shared helper stay
//! separate as long as the suffix distinguishes them; beyond that, values
//! join. Results are stored per CFG node and queried afterwards by the
//! slicer through [`ConstResults::eval_at`].

use crate::ir::cfg::{node_of, CfgNode, ENTRY};
use crate::ir::{
    ArgKind, CallSiteId, CallTarget, ExprId, IrExprKind, IrStmtKind, MethodId, MethodIr,
    ProgramIr, StmtId, VarId,
};
use crate::location::Location;
use crate::Value;
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Largest set a `MultiValue` may hold before collapsing to `Unknown`.
pub const MULTI_CAP: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase", tag = "kind", content = "value")]
pub enum Lattice {
    /// Program point not reached (or variable never written there).
    Bottom,
    Constant(Value),
    /// At least two, at most [`MULTI_CAP`] distinct values.
    MultiValue(BTreeSet<Value>),
    Unknown,
}

/// A lattice value plus where its constituents were introduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConstValue {
    pub lattice: Lattice,
    /// Locations that introduced the value; empty only for `Bottom`.
    pub provenance: BTreeSet<Location>,
}

impl ConstValue {
    pub fn bottom() -> Self {
        ConstValue {
            lattice: Lattice::Bottom,
            provenance: BTreeSet::new(),
        }
    }

    pub fn constant(v: Value, loc: Location) -> Self {
        ConstValue {
            lattice: Lattice::Constant(v),
            provenance: BTreeSet::from([loc]),
        }
    }

    pub fn unknown(loc: Location) -> Self {
        ConstValue {
            lattice: Lattice::Unknown,
            provenance: BTreeSet::from([loc]),
        }
    }

    pub fn as_constant(&self) -> Option<&Value> {
        match &self.lattice {
            Lattice::Constant(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_unknown(&self) -> bool {
        matches!(self.lattice, Lattice::Unknown)
    }

    /// All concrete values this may be, when finitely many are known.
    pub fn possible_values(&self) -> Option<Vec<&Value>> {
        match &self.lattice {
            Lattice::Constant(v) => Some(vec![v]),
            Lattice::MultiValue(s) => Some(s.iter().collect()),
            _ => None,
        }
    }

    /// Least upper bound; provenance accumulates.
    pub fn join(&self, other: &ConstValue) -> ConstValue {
        let lattice = match (&self.lattice, &other.lattice) {
            (Lattice::Bottom, x) | (x, Lattice::Bottom) => x.clone(),
            (Lattice::Unknown, _) | (_, Lattice::Unknown) => Lattice::Unknown,
            (Lattice::Constant(a), Lattice::Constant(b)) if a == b => {
                Lattice::Constant(a.clone())
            }
            (a, b) => {
                let mut set = BTreeSet::new();
                for side in [a, b] {
                    match side {
                        Lattice::Constant(v) => {
                            set.insert(v.clone());
                        }
                        Lattice::MultiValue(s) => set.extend(s.iter().cloned()),
                        _ => unreachable!("bottom/unknown handled above"),
                    }
                }
                if set.len() > MULTI_CAP {
                    Lattice::Unknown
                } else {
                    Lattice::MultiValue(set)
                }
            }
        };
        let mut provenance = self.provenance.clone();
        provenance.extend(other.provenance.iter().cloned());
        ConstValue { lattice, provenance }
    }
}

/// A call string: the `k` most recent call sites on the path to a method,
/// outermost first. The empty context is the entry context.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Context {
    pub call_string: Vec<CallSiteId>,
}

impl Context {
    pub fn entry() -> Self {
        Context::default()
    }

    /// Extend by one site, keeping only the `k` most recent.
    pub fn push(&self, site: CallSiteId, k: usize) -> Context {
        let mut s = self.call_string.clone();
        s.push(site);
        if s.len() > k {
            s.drain(..s.len() - k);
        }
        Context { call_string: s }
    }

    /// Human-readable rendering used in dumps and reports.
    pub fn describe(&self, ir: &ProgramIr) -> String {
        if self.call_string.is_empty() {
            return "entry".to_string();
        }
        self.call_string
            .iter()
            .map(|&s| {
                let site = ir.site(s);
                format!("{}:{}", site.call_loc.file_name, site.call_loc.line)
            })
            .collect::<Vec<_>>()
            .join(" -> ")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ConstOptions {
    /// Call-string depth.
    pub k: usize,
    /// Statement-visit budget for the whole fixpoint.
    pub budget: u64,
}

impl Default for ConstOptions {
    fn default() -> Self {
        ConstOptions {
            k: 3,
            budget: 2_000_000,
        }
    }
}

type VarState = BTreeMap<VarId, ConstValue>;

/// Per-(method, context) analysis artifacts.
struct MethodState {
    /// Join state at the entry of each CFG node.
    ins: Vec<VarState>,
    reached: Vec<bool>,
}

/// Everything the fixpoint computed, queryable per context.
pub struct ConstResults {
    k: usize,
    states: BTreeMap<(MethodId, Context), MethodState>,
    rets: BTreeMap<(MethodId, Context), ConstValue>,
    consts: BTreeMap<String, Value>,
    /// True when the visit budget ran out; remaining values degrade to
    /// Unknown and the scan report records it.
    pub budget_exceeded: bool,
    /// Statement visits performed.
    pub visits: u64,
}

impl ConstResults {
    pub fn k(&self) -> usize {
        self.k
    }

    /// Contexts under which a method was analyzed, in stable order.
    pub fn contexts(&self, method: MethodId) -> Vec<&Context> {
        self.states
            .range((method, Context::entry())..)
            .take_while(|((m, _), _)| *m == method)
            .map(|((_, c), _)| c)
            .collect()
    }

    /// Evaluate an expression in the variable state holding just before a
    /// statement under one context. Unanalyzed points evaluate to Unknown.
    pub fn eval_at(
        &self,
        ir: &ProgramIr,
        method: MethodId,
        ctx: &Context,
        stmt: StmtId,
        expr: ExprId,
    ) -> ConstValue {
        let m = ir.method(method);
        let loc = m.exprs[expr].loc.clone();
        let Some(state) = self.states.get(&(method, ctx.clone())) else {
            return ConstValue::unknown(loc);
        };
        let node = node_of(stmt);
        if !state.reached[node] {
            return ConstValue::bottom();
        }
        let mut eval = Evaluator {
            ir,
            consts: &self.consts,
            rets: EvalRets::Frozen(&self.rets),
            k: self.k,
        };
        eval.eval(m, ctx, &state.ins[node], expr)
    }

    /// The variable state just before a statement, for slicing diagnostics.
    pub fn var_at(
        &self,
        method: MethodId,
        ctx: &Context,
        stmt: StmtId,
        var: VarId,
    ) -> ConstValue {
        match self.states.get(&(method, ctx.clone())) {
            Some(state) if state.reached[node_of(stmt)] => state.ins[node_of(stmt)]
                .get(&var)
                .cloned()
                .unwrap_or_else(ConstValue::bottom),
            _ => ConstValue::bottom(),
        }
    }
}

/// Run the analysis over the whole program. `extern_consts` supplies library
/// constants (fully qualified static finals like opmode flags); project
/// constants come from the IR itself.
pub fn propagate(
    ir: &ProgramIr,
    extern_consts: &BTreeMap<String, Value>,
    opts: &ConstOptions,
) -> ConstResults {
    let mut consts = ir.static_consts.clone();
    for (k, v) in extern_consts {
        consts.insert(k.clone(), v.clone());
    }
    let mut engine = Engine {
        ir,
        consts,
        k: opts.k,
        budget: opts.budget,
        visits: 0,
        budget_exceeded: false,
        params: BTreeMap::new(),
        rets: BTreeMap::new(),
        ret_deps: BTreeMap::new(),
        states: BTreeMap::new(),
        queue: VecDeque::new(),
        queued: BTreeSet::new(),
    };

    // Roots are analyzed under the entry context; everything else acquires
    // contexts through call edges. Methods only reachable through cycles
    // with no root entry get a fallback entry context afterwards so their
    // statements still carry (context-free) values.
    for &root in &ir.call_graph.roots {
        engine.seed(root, Context::entry());
    }
    engine.run();
    let uncovered: Vec<MethodId> = ir
        .methods
        .iter()
        .map(|m| m.id)
        .filter(|&m| engine.contexts_of(m).is_empty())
        .collect();
    for m in uncovered {
        engine.seed(m, Context::entry());
    }
    engine.run();

    ConstResults {
        k: opts.k,
        states: engine.states,
        rets: engine.rets,
        consts: engine.consts,
        budget_exceeded: engine.budget_exceeded,
        visits: engine.visits,
    }
}

/// Where call-expression evaluation finds callee return values: the live
/// engine (recording dependency edges) or the frozen post-analysis tables.
enum EvalRets<'a> {
    Frozen(&'a BTreeMap<(MethodId, Context), ConstValue>),
    Live {
        rets: &'a BTreeMap<(MethodId, Context), ConstValue>,
        deps: &'a mut Vec<(MethodId, Context)>,
    },
}

struct Evaluator<'a> {
    ir: &'a ProgramIr,
    consts: &'a BTreeMap<String, Value>,
    rets: EvalRets<'a>,
    k: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, m: &MethodIr, ctx: &Context, state: &VarState, expr: ExprId) -> ConstValue {
        let loc = m.exprs[expr].loc.clone();
        match &m.exprs[expr].kind {
            IrExprKind::Str(s) => ConstValue::constant(Value::Str(s.clone()), loc),
            IrExprKind::Int(i) => ConstValue::constant(Value::Int(*i), loc),
            IrExprKind::Bool(b) => ConstValue::constant(Value::Bool(*b), loc),
            IrExprKind::Null => ConstValue::constant(Value::Null, loc),
            IrExprKind::Var(v) => state.get(v).cloned().unwrap_or_else(ConstValue::bottom),
            IrExprKind::StaticField { owner_candidates, field } => {
                let mut hits: BTreeSet<&Value> = BTreeSet::new();
                for owner in owner_candidates {
                    if let Some(v) = self.consts.get(&format!("{owner}.{field}")) {
                        hits.insert(v);
                    }
                }
                match hits.len() {
                    1 => ConstValue::constant(hits.into_iter().next().unwrap().clone(), loc),
                    _ => ConstValue::unknown(loc),
                }
            }
            IrExprKind::InstanceField { .. } => ConstValue::unknown(loc),
            IrExprKind::Call { site } => self.eval_call(m, ctx, state, *site, loc),
            IrExprKind::New { .. } => ConstValue::unknown(loc),
            IrExprKind::ArrayLit { elem_ty, elems } => {
                if elem_ty != "byte" {
                    return ConstValue::unknown(loc);
                }
                let mut bytes = Vec::with_capacity(elems.len());
                for e in elems {
                    match self.eval(m, ctx, state, *e).as_constant() {
                        Some(Value::Int(i)) => bytes.push(*i as u8),
                        _ => return ConstValue::unknown(loc),
                    }
                }
                ConstValue::constant(Value::Bytes(bytes), loc)
            }
            IrExprKind::ArrayNew { elem_ty, len } => {
                if elem_ty != "byte" {
                    return ConstValue::unknown(loc);
                }
                match self.eval(m, ctx, state, *len).as_constant() {
                    Some(Value::Int(n)) if (0..=4096).contains(n) => {
                        ConstValue::constant(Value::Bytes(vec![0; *n as usize]), loc)
                    }
                    _ => ConstValue::unknown(loc),
                }
            }
            IrExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(m, ctx, state, *lhs);
                let r = self.eval(m, ctx, state, *rhs);
                match (l.as_constant(), r.as_constant()) {
                    (Some(a), Some(b)) => match crate::oracle::fold_binary(*op, a, b) {
                        Some(v) => {
                            let mut out = ConstValue::constant(v, loc);
                            out.provenance.extend(l.provenance.iter().cloned());
                            out.provenance.extend(r.provenance.iter().cloned());
                            out
                        }
                        None => ConstValue::unknown(loc),
                    },
                    _ => ConstValue::unknown(loc),
                }
            }
            IrExprKind::Opaque => ConstValue::unknown(loc),
        }
    }

    fn eval_call(
        &mut self,
        m: &MethodIr,
        ctx: &Context,
        state: &VarState,
        site_id: CallSiteId,
        loc: Location,
    ) -> ConstValue {
        let site = self.ir.site(site_id);
        match &site.target {
            CallTarget::Project(callee) => {
                let cctx = ctx.push(site_id, self.k);
                let key = (*callee, cctx);
                match &mut self.rets {
                    EvalRets::Frozen(rets) => rets
                        .get(&key)
                        .cloned()
                        .unwrap_or_else(|| ConstValue::unknown(loc)),
                    EvalRets::Live { rets, deps } => {
                        deps.push(key.clone());
                        rets.get(&key).cloned().unwrap_or_else(ConstValue::bottom)
                    }
                }
            }
            CallTarget::ProjectCtor(_) => ConstValue::unknown(loc),
            // The two string conversions that move constants into material
            // form; everything else external is outside the analyzed code.
            CallTarget::External { .. } => {
                let Some(recv) = site.receiver_expr else {
                    return ConstValue::unknown(loc);
                };
                let rv = self.eval(m, ctx, state, recv);
                match (site.name.as_str(), rv.as_constant()) {
                    ("getBytes", Some(Value::Str(s))) => {
                        let mut out =
                            ConstValue::constant(Value::Bytes(s.clone().into_bytes()), loc);
                        out.provenance.extend(rv.provenance.iter().cloned());
                        out
                    }
                    ("toCharArray", Some(Value::Str(s))) => {
                        let mut out = ConstValue::constant(Value::Str(s.clone()), loc);
                        out.provenance.extend(rv.provenance.iter().cloned());
                        out
                    }
                    _ => ConstValue::unknown(loc),
                }
            }
        }
    }
}

struct Engine<'a> {
    ir: &'a ProgramIr,
    consts: BTreeMap<String, Value>,
    k: usize,
    budget: u64,
    visits: u64,
    budget_exceeded: bool,
    /// Join of argument bindings per analyzed (callee, context).
    params: BTreeMap<(MethodId, Context), VarState>,
    /// Join of return values per analyzed (method, context).
    rets: BTreeMap<(MethodId, Context), ConstValue>,
    /// Which analyses read a return value, re-queued when it changes.
    ret_deps: BTreeMap<(MethodId, Context), BTreeSet<(MethodId, Context)>>,
    states: BTreeMap<(MethodId, Context), MethodState>,
    queue: VecDeque<(MethodId, Context)>,
    queued: BTreeSet<(MethodId, Context)>,
}

impl Engine<'_> {
    fn contexts_of(&self, method: MethodId) -> Vec<&Context> {
        self.states
            .range((method, Context::entry())..)
            .take_while(|((m, _), _)| *m == method)
            .map(|((_, c), _)| c)
            .collect()
    }

    fn seed(&mut self, method: MethodId, ctx: Context) {
        let key = (method, ctx);
        self.params.entry(key.clone()).or_default();
        if self.queued.insert(key.clone()) {
            self.queue.push_back(key);
        }
    }

    fn run(&mut self) {
        while let Some(key) = self.queue.pop_front() {
            self.queued.remove(&key);
            if self.budget_exceeded {
                return;
            }
            self.analyze(key);
        }
    }

    /// One intra-method fixpoint for a (method, context) pair: propagate the
    /// parameter bindings through the CFG, record entry states per node, and
    /// push effects across call edges.
    fn analyze(&mut self, key: (MethodId, Context)) {
        let (method, ref ctx) = key;
        let m = self.ir.method(method);
        let cfg = &m.cfg;
        let node_count = cfg.node_count;

        let mut ins: Vec<VarState> = vec![VarState::new(); node_count];
        let mut reached = vec![false; node_count];
        ins[ENTRY] = self.params.get(&key).cloned().unwrap_or_default();
        reached[ENTRY] = true;

        // Effects on other analyses, applied after the intra fixpoint.
        let mut callee_bindings: BTreeMap<(MethodId, Context), VarState> = BTreeMap::new();
        let mut ret_reads: Vec<(MethodId, Context)> = Vec::new();
        let mut ret_out = ConstValue::bottom();

        let mut work: VecDeque<CfgNode> = VecDeque::new();
        let mut in_work = vec![false; node_count];
        work.push_back(ENTRY);
        in_work[ENTRY] = true;

        while let Some(node) = work.pop_front() {
            in_work[node] = false;
            self.visits += 1;
            if self.visits > self.budget {
                self.budget_exceeded = true;
                return;
            }
            let out = self.transfer(m, ctx, node, &ins[node], &mut callee_bindings, &mut ret_reads, &mut ret_out);
            for &(succ, _) in &cfg.succs[node] {
                let joined = join_states(&ins[succ], &out, reached[succ]);
                if !reached[succ] || joined != ins[succ] {
                    ins[succ] = joined;
                    reached[succ] = true;
                    if !in_work[succ] {
                        work.push_back(succ);
                        in_work[succ] = true;
                    }
                }
            }
        }

        self.states.insert(key.clone(), MethodState { ins, reached });

        // Return value: join over executed return statements. A change
        // re-queues every analysis that consumed it.
        let prev = self.rets.get(&key);
        if prev != Some(&ret_out) && ret_out != ConstValue::bottom() {
            let joined = match prev {
                Some(p) => p.join(&ret_out),
                None => ret_out,
            };
            if self.rets.get(&key) != Some(&joined) {
                self.rets.insert(key.clone(), joined);
                if let Some(deps) = self.ret_deps.get(&key) {
                    for d in deps.clone() {
                        self.enqueue(d);
                    }
                }
            }
        }
        for dep in ret_reads {
            self.ret_deps.entry(dep.clone()).or_default().insert(key.clone());
            // First read of a not-yet-analyzed callee: make sure it runs.
            if !self.states.contains_key(&dep) {
                self.params.entry(dep.clone()).or_default();
                self.enqueue(dep);
            }
        }

        // Parameter bindings flowing into callees join with what other
        // callers contributed; a change re-queues the callee context.
        for (ckey, bindings) in callee_bindings {
            let entry = self.params.entry(ckey.clone()).or_default();
            let mut changed = !self.states.contains_key(&ckey);
            for (var, val) in bindings {
                let slot = entry.entry(var).or_insert_with(ConstValue::bottom);
                let joined = slot.join(&val);
                if *slot != joined {
                    *slot = joined;
                    changed = true;
                }
            }
            if changed {
                self.enqueue(ckey);
            }
        }
    }

    fn enqueue(&mut self, key: (MethodId, Context)) {
        if self.queued.insert(key.clone()) {
            self.queue.push_back(key);
        }
    }

    /// Apply one statement to a variable state, collecting interprocedural
    /// effects on the side.
    #[allow(clippy::too_many_arguments)]
    fn transfer(
        &mut self,
        m: &MethodIr,
        ctx: &Context,
        node: CfgNode,
        state: &VarState,
        callee_bindings: &mut BTreeMap<(MethodId, Context), VarState>,
        ret_reads: &mut Vec<(MethodId, Context)>,
        ret_out: &mut ConstValue,
    ) -> VarState {
        let Some(stmt) = crate::ir::cfg::stmt_of(node) else {
            return state.clone();
        };
        let mut out = state.clone();
        let mut deps = Vec::new();
        let mut eval = Evaluator {
            ir: self.ir,
            consts: &self.consts,
            rets: EvalRets::Live {
                rets: &self.rets,
                deps: &mut deps,
            },
            k: self.k,
        };

        match &m.stmts[stmt].kind {
            IrStmtKind::Decl { var, init, external } => {
                let val = match (init, external) {
                    (Some(e), false) => eval.eval(m, ctx, state, *e),
                    (Some(e), true) => {
                        let _ = eval.eval(m, ctx, state, *e);
                        ConstValue::unknown(m.stmts[stmt].loc.clone())
                    }
                    (None, true) => ConstValue::unknown(m.stmts[stmt].loc.clone()),
                    (None, false) => ConstValue::bottom(),
                };
                out.insert(*var, val);
            }
            IrStmtKind::Assign { var, value } => {
                let val = eval.eval(m, ctx, state, *value);
                if let Some(v) = var {
                    out.insert(*v, val);
                }
            }
            IrStmtKind::Expr { expr } | IrStmtKind::Cond { expr, .. } => {
                let _ = eval.eval(m, ctx, state, *expr);
            }
            IrStmtKind::Return { value } => {
                let val = match value {
                    Some(e) => eval.eval(m, ctx, state, *e),
                    None => ConstValue::bottom(),
                };
                *ret_out = ret_out.join(&val);
            }
        }
        drop(eval);
        ret_reads.extend(deps);

        // Push argument bindings across project call edges and apply the
        // clobber rule for mutable arrays handed to external code.
        for sid in self.ir.stmt_sites(m.id, stmt) {
            let site = self.ir.site(sid);
            match &site.target {
                CallTarget::Project(callee) => {
                    let callee_params = &self.ir.method(*callee).params;
                    let cctx = ctx.push(sid, self.k);
                    let slot = callee_bindings.entry((*callee, cctx)).or_default();
                    let mut arg_eval = Evaluator {
                        ir: self.ir,
                        consts: &self.consts,
                        rets: EvalRets::Frozen(&self.rets),
                        k: self.k,
                    };
                    for (param, arg) in callee_params.iter().zip(&site.args) {
                        let val = arg_eval.eval(m, ctx, state, *arg);
                        let entry = slot.entry(*param).or_insert_with(ConstValue::bottom);
                        *entry = entry.join(&val);
                    }
                }
                CallTarget::ProjectCtor(_) => {}
                CallTarget::External { .. } => {
                    for (arg, kind) in site.args.iter().zip(&site.arg_kinds) {
                        if !matches!(kind, ArgKind::Bytes | ArgKind::Chars) {
                            continue;
                        }
                        if let IrExprKind::Var(v) = &m.exprs[*arg].kind {
                            out.insert(*v, ConstValue::unknown(site.call_loc.clone()));
                        }
                    }
                }
            }
        }
        out
    }
}

fn join_states(current: &VarState, incoming: &VarState, current_reached: bool) -> VarState {
    if !current_reached {
        return incoming.clone();
    }
    let mut out = current.clone();
    for (var, val) in incoming {
        let slot = out.entry(*var).or_insert_with(ConstValue::bottom);
        *slot = slot.join(val);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;
    use crate::ir::build_program_ir;
    use crate::oracle;

    fn ir_of_files(files: &[(&str, &str)]) -> ProgramIr {
        let mut sources = Vec::new();
        for (name, src) in files {
            let (unit, issues) = frontend::parse_compilation_unit(src, name);
            assert!(issues.is_empty(), "parse issues in {name}: {issues:?}");
            sources.push(frontend::SourceFile {
                rel_path: (*name).into(),
                line_index: crate::location::LineIndex::new(src),
                source: (*src).into(),
                unit,
            });
        }
        build_program_ir(&frontend::SubjectProject {
            root_dir: ".".into(),
            files: sources,
            parse_errors: vec![],
        })
    }

    fn ir_of(src: &str) -> ProgramIr {
        ir_of_files(&[("T.java", src)])
    }

    fn method(ir: &ProgramIr, name: &str) -> MethodId {
        ir.methods
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.id)
            .expect("method present")
    }

    fn sites_calling(ir: &ProgramIr, name: &str) -> Vec<CallSiteId> {
        ir.call_sites
            .iter()
            .filter(|s| s.name == name)
            .map(|s| s.id)
            .collect()
    }

    fn run(ir: &ProgramIr, k: usize) -> ConstResults {
        propagate(ir, &BTreeMap::new(), &ConstOptions { k, budget: 2_000_000 })
    }

    /// Value of call-site argument `idx` under a context.
    fn arg_value(
        ir: &ProgramIr,
        res: &ConstResults,
        site: CallSiteId,
        idx: usize,
        ctx: &Context,
    ) -> ConstValue {
        let s = ir.site(site);
        res.eval_at(ir, s.method, ctx, s.stmt, s.args[idx])
    }

    #[test]
    fn literal_concat_folds_to_one_constant() {
        let ir = ir_of(
            "class A { void f() { String alg = \"AES/\" + \"GCM\" + \"/NoPadding\"; sink(alg); } void sink(String s) {} }",
        );
        let res = run(&ir, 3);
        let site = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, site, 0, &Context::entry());
        assert_eq!(v.as_constant(), Some(&Value::Str("AES/GCM/NoPadding".into())));
        assert!(!v.provenance.is_empty());
    }

    #[test]
    fn static_final_field_reads_are_constants() {
        let ir = ir_of(
            "class A { static final int BITS = 2048; void f() { sink(BITS); } void sink(int n) {} }",
        );
        let res = run(&ir, 3);
        let site = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, site, 0, &Context::entry());
        assert_eq!(v.as_constant(), Some(&Value::Int(2048)));
    }

    #[test]
    fn parameter_with_no_known_caller_is_not_constant() {
        // f is a root: its parameter has no binding anywhere.
        let ir = ir_of("class A { void f(String alg) { sink(alg); } void sink(String s) {} }");
        let res = run(&ir, 3);
        let site = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, site, 0, &Context::entry());
        assert_eq!(v.as_constant(), None);
    }

    #[test]
    fn two_callers_stay_separate_with_context() {
        let ir = ir_of(
            "class A {\n\
               void main() { run(\"AES/GCM/NoPadding\"); run(\"DES/ECB/PKCS5Padding\"); }\n\
               void run(String alg) { sink(alg); }\n\
               void sink(String s) {}\n\
             }",
        );
        let res = run(&ir, 3);
        let run_m = method(&ir, "run");
        let run_sites = sites_calling(&ir, "run");
        let sink = sites_calling(&ir, "sink")[0];
        let ctxs = res.contexts(run_m);
        assert_eq!(ctxs.len(), 2, "one context per caller");
        let mut seen = BTreeSet::new();
        for &rs in &run_sites {
            let ctx = Context::entry().push(rs, 3);
            let v = arg_value(&ir, &res, sink, 0, &ctx);
            seen.insert(v.as_constant().cloned().expect("constant per context"));
        }
        assert_eq!(
            seen,
            BTreeSet::from([
                Value::Str("AES/GCM/NoPadding".into()),
                Value::Str("DES/ECB/PKCS5Padding".into())
            ])
        );
    }

    #[test]
    fn context_zero_joins_callers_into_multivalue() {
        let ir = ir_of(
            "class A {\n\
               void main() { run(\"AES\"); run(\"DES\"); }\n\
               void run(String alg) { sink(alg); }\n\
               void sink(String s) {}\n\
             }",
        );
        let res = run(&ir, 0);
        let sink = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, sink, 0, &Context::entry());
        assert_eq!(
            v.lattice,
            Lattice::MultiValue(BTreeSet::from([
                Value::Str("AES".into()),
                Value::Str("DES".into())
            ]))
        );
    }

    #[test]
    fn more_than_cap_distinct_values_collapse_to_unknown() {
        let calls: String = (0..10)
            .map(|i| format!("run(\"ALG{i}\"); "))
            .collect();
        let src = format!(
            "class A {{ void main() {{ {calls} }} void run(String alg) {{ sink(alg); }} void sink(String s) {{}} }}"
        );
        let ir = ir_of(&src);
        let res = run(&ir, 0);
        let sink = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, sink, 0, &Context::entry());
        assert!(v.is_unknown(), "10 distinct values exceed the multi cap");
    }

    #[test]
    fn recursion_preserving_a_literal_converges_to_constant() {
        let ir = ir_of(
            "class A {\n\
               void main() { f(\"AES\", 3); }\n\
               void f(String alg, int n) { if (n > 0) { f(alg, n - 1); } sink(alg); }\n\
               void sink(String s) {}\n\
             }",
        );
        let res = run(&ir, 2);
        let f = method(&ir, "f");
        let sink = sites_calling(&ir, "sink")[0];
        for ctx in res.contexts(f) {
            let v = arg_value(&ir, &res, sink, 0, ctx);
            assert_eq!(
                v.as_constant(),
                Some(&Value::Str("AES".into())),
                "context {ctx:?} lost the literal"
            );
        }
    }

    #[test]
    fn branch_join_yields_multivalue() {
        let ir = ir_of(
            "class A { void f(boolean c) { String a = \"AES\"; if (c) { a = \"DES\"; } sink(a); } void sink(String s) {} }",
        );
        let res = run(&ir, 3);
        let sink = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, sink, 0, &Context::entry());
        assert_eq!(
            v.lattice,
            Lattice::MultiValue(BTreeSet::from([
                Value::Str("AES".into()),
                Value::Str("DES".into())
            ]))
        );
    }

    #[test]
    fn project_return_values_flow_to_callers() {
        let ir = ir_of(
            "class A { void f() { sink(pick()); } String pick() { return \"AES\"; } void sink(String s) {} }",
        );
        let res = run(&ir, 3);
        let sink = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, sink, 0, &Context::entry());
        assert_eq!(v.as_constant(), Some(&Value::Str("AES".into())));
    }

    #[test]
    fn external_call_clobbers_byte_array_values() {
        let ir = ir_of(
            "import java.security.SecureRandom;\n\
             class A { void f() { byte[] iv = new byte[16]; SecureRandom r = new SecureRandom(); r.nextBytes(iv); sink(iv); } void sink(byte[] b) {} }",
        );
        let res = run(&ir, 3);
        let sink = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, sink, 0, &Context::entry());
        assert!(v.is_unknown(), "random-filled array must not look constant");
    }

    #[test]
    fn get_bytes_over_constant_string_is_constant_bytes() {
        let ir = ir_of(
            "class A { void f() { byte[] k = \"0123456789abcdef\".getBytes(); sink(k); } void sink(byte[] b) {} }",
        );
        let res = run(&ir, 3);
        let sink = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, sink, 0, &Context::entry());
        assert_eq!(
            v.as_constant(),
            Some(&Value::Bytes(b"0123456789abcdef".to_vec()))
        );
    }

    #[test]
    fn budget_exhaustion_degrades_to_unknown_and_is_reported() {
        let ir = ir_of(
            "class A { void f() { String alg = \"AES\"; sink(alg); } void sink(String s) {} }",
        );
        let res = propagate(&ir, &BTreeMap::new(), &ConstOptions { k: 3, budget: 1 });
        assert!(res.budget_exceeded);
        let sink = sites_calling(&ir, "sink")[0];
        let v = arg_value(&ir, &res, sink, 0, &Context::entry());
        assert!(v.is_unknown() || v.lattice == Lattice::Bottom);
    }

    #[test]
    fn increasing_k_never_loses_distinguishable_constants() {
        let src = "class A {\n\
               void main() { run(\"AES\"); run(\"DES\"); }\n\
               void run(String alg) { deeper(alg); }\n\
               void deeper(String alg) { sink(alg); }\n\
               void sink(String s) {}\n\
             }";
        let ir = ir_of(src);
        let sink = sites_calling(&ir, "sink")[0];
        let deeper = method(&ir, "deeper");
        // k=2 distinguishes the two top-level call sites; k=3 must too.
        for k in [2, 3] {
            let res = run(&ir, k);
            let consts: BTreeSet<_> = res
                .contexts(deeper)
                .into_iter()
                .filter_map(|c| arg_value(&ir, &res, sink, 0, c).as_constant().cloned())
                .collect();
            assert_eq!(
                consts,
                BTreeSet::from([Value::Str("AES".into()), Value::Str("DES".into())]),
                "k={k}"
            );
        }
    }

    /// Every Constant the analysis reports for a context must equal what the
    /// brute-force interpreter computes replaying that exact call chain.
    fn assert_agrees_with_oracle(ir: &ProgramIr, k: usize) {
        let res = run(ir, k);
        let interp = oracle::Interpreter::new(ir);
        let chains = all_chains(ir);
        for site in &ir.call_sites {
            for (idx, &arg) in site.args.iter().enumerate() {
                for ctx in res.contexts(site.method) {
                    let got = arg_value(ir, &res, site.id, idx, ctx);
                    let Some(claimed) = got.as_constant() else { continue };
                    // Oracle truth: join over all full chains with this suffix.
                    let mut vals = Vec::new();
                    for chain in chains.iter().filter(|c| suffix_matches(c, ctx, k)) {
                        if !chain_ends_in(ir, chain, site.method) {
                            continue;
                        }
                        match interp.chain_values(chain, site.method, site.stmt, arg) {
                            Ok(v) => vals.extend(v),
                            Err(_) => return, // fixture too big for the oracle
                        }
                    }
                    let derivable: BTreeSet<_> = vals.iter().flatten().collect();
                    if vals.iter().any(Option::is_none) || derivable.is_empty() {
                        continue; // oracle cannot falsify this one
                    }
                    assert_eq!(
                        derivable,
                        BTreeSet::from([claimed]),
                        "context {ctx:?} at {}:{} arg {idx}",
                        site.call_loc.file_name,
                        site.call_loc.line
                    );
                }
            }
        }
    }

    /// All project call chains from roots, each method at most twice per
    /// chain (mirrors the oracle's loop bound for recursion).
    fn all_chains(ir: &ProgramIr) -> Vec<Vec<CallSiteId>> {
        let mut out = vec![vec![]];
        // Chains rooted at each root method.
        let mut frontier: Vec<(MethodId, Vec<CallSiteId>)> = ir
            .call_graph
            .roots
            .iter()
            .map(|&r| (r, Vec::new()))
            .collect();
        while let Some((m, chain)) = frontier.pop() {
            for &sid in ir.call_graph.sites(m) {
                if let CallTarget::Project(callee) = ir.site(sid).target {
                    let occurrences = chain
                        .iter()
                        .filter(|&&s| matches!(ir.site(s).target, CallTarget::Project(c) if c == callee))
                        .count();
                    if occurrences >= 2 {
                        continue;
                    }
                    let mut next = chain.clone();
                    next.push(sid);
                    out.push(next.clone());
                    frontier.push((callee, next));
                }
            }
        }
        out
    }

    fn suffix_matches(chain: &[CallSiteId], ctx: &Context, k: usize) -> bool {
        let suffix: Vec<CallSiteId> = chain
            .iter()
            .copied()
            .skip(chain.len().saturating_sub(k))
            .collect();
        suffix == ctx.call_string
    }

    fn chain_ends_in(ir: &ProgramIr, chain: &[CallSiteId], method: MethodId) -> bool {
        match chain.last() {
            Some(&s) => matches!(ir.site(s).target, CallTarget::Project(c) if c == method),
            None => ir.call_graph.roots.contains(&method),
        }
    }

    #[test]
    fn oracle_agreement_on_wrapper_fixture() {
        let ir = ir_of(
            "class A {\n\
               void main() { run(\"AES/GCM/NoPadding\"); run(\"DES/ECB/PKCS5Padding\"); }\n\
               void run(String alg) { String prefixed = alg; sink(prefixed); }\n\
               void sink(String s) {}\n\
             }",
        );
        for k in [0, 1, 2, 3] {
            assert_agrees_with_oracle(&ir, k);
        }
    }

    #[test]
    fn oracle_agreement_on_branching_fixture() {
        let ir = ir_of(
            "class A {\n\
               void f(boolean c) { String a = \"MD5\"; if (c) { a = \"SHA-256\"; } int n = 0; while (n < 2) { n = n + 1; } sink(a + \"/x\"); }\n\
               void sink(String s) {}\n\
             }",
        );
        for k in [0, 3] {
            assert_agrees_with_oracle(&ir, k);
        }
    }

    #[test]
    fn def_use_chains_match_path_observation_exactly() {
        let srcs = [
            "class A { void f(boolean c) { int x = 1; if (c) { x = 2; } int y = x; x = 3; int z = x; } }",
            "class A { void f(boolean c) { int x = 0; while (c) { int y = x; x = y + 1; } int z = x; } }",
            "class A { void f() { int x = 1; x = 2; int y = x + x; } }",
        ];
        for src in srcs {
            let ir = ir_of(src);
            let mid = method(&ir, "f");
            let m = &ir.methods[mid];
            let observed = oracle::observe_def_use(&ir, mid, 10_000).unwrap();
            // Project the analysis' chains into the oracle's observation shape.
            let mut computed: BTreeSet<(usize, VarId, Option<oracle::PathDef>)> = BTreeSet::new();
            for u in &m.def_use.uses {
                let defs = m.def_use.defs_reaching(u.id);
                if defs.is_empty() {
                    computed.insert((u.stmt, u.var, None));
                }
                for d in defs {
                    let site = match m.def_use.defs[*d].site {
                        crate::ir::defuse::DefSite::Param(_) => oracle::PathDef::Param,
                        crate::ir::defuse::DefSite::Stmt(s) => oracle::PathDef::Stmt(s),
                    };
                    computed.insert((u.stmt, u.var, Some(site)));
                }
            }
            assert_eq!(computed, observed, "source: {src}");
        }
    }
}
