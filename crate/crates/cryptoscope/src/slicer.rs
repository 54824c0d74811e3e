//! Backward program slicing seeded at knowledge-base criterion calls.
//!
//! For each call site that completes a cryptographic operation (a
//! *criterion*), and for each calling context the constant analysis saw, the
//! slicer gathers everything that configures or feeds that operation:
//!
//! * transitive data dependences of the criterion's receiver and arguments,
//! * the enclosing branch conditions of every included statement,
//! * calls on the same receiver instance made before the criterion
//!   (`getInstance` → `init` → `update` chains),
//! * producer calls whose results flow into arguments of included calls
//!   (generated keys, parameter-spec constructors, keystore reads), and
//! * calls that fill an argument array through an output parameter
//!   (`random.nextBytes(iv)`).
//!
//! Producer and same-instance steps are admitted only when a knowledge-base
//! relation rule connects the two APIs, so every related call in a slice is
//! reachable from the criterion through the relation rules. A producer whose
//! result never reaches the criterion chain is therefore never part of the
//! slice, which is what lets material traces be treated as
//! consumed-by-construction.
//!
//! Slicing ascends from the criterion's method along its calling context
//! (at most the context depth `k` frames) so values handed through wrappers
//! keep their call-site provenance. Alias tracking is deliberately shallow:
//! only plain variable copies (`Cipher d = c;`) extend a receiver's alias
//! set, matching the declared analysis subset.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rayon::prelude::*;

use serde::Serialize;

use crate::constprop::{ConstResults, ConstValue, Context};
use crate::ir::defuse::DefSite;
use crate::ir::{
    CallSiteId, ExprId, IrExprKind, IrStmtKind, MethodId, MethodIr, ProgramIr, StmtId, VarId,
};
use crate::kb::{ApiKind, ApiSpec, KnowledgeBase, ParamRole, RelationKind};
use crate::location::Location;

#[derive(Debug, Clone, Copy)]
pub struct SliceOptions {
    /// Most contexts reported individually per criterion; the rest merge
    /// into one slice flagged `merged`.
    pub max_contexts: usize,
    /// Statement-inclusion budget per slice; exhaustion flags `incomplete`.
    pub budget: usize,
}

impl Default for SliceOptions {
    fn default() -> Self {
        SliceOptions {
            max_contexts: 64,
            budget: 50_000,
        }
    }
}

/// A call site that completes a cryptographic operation.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SliceCriterion {
    pub site: CallSiteId,
    pub method: MethodId,
    pub stmt: StmtId,
    /// Knowledge-base api id, e.g. `jca:Cipher.doFinal/1`.
    pub api: String,
    /// Crypto functions the call may complete; first is the default when no
    /// initialization evidence disambiguates.
    pub completes: Vec<String>,
    pub location: Location,
}

/// One statement in a slice.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SliceStmt {
    pub method: MethodId,
    pub stmt: StmtId,
    pub location: Location,
}

/// A knowledge-base call reachable from the criterion via relation rules.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RelatedCall {
    pub site: CallSiteId,
    pub api: String,
    pub kind: ApiKind,
    pub location: Location,
}

/// Constant-analysis verdict for one argument of a related call.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ArgValue {
    pub site: CallSiteId,
    pub arg_index: usize,
    pub value: ConstValue,
}

/// One result-flows-to-parameter edge the slicer followed: `producer`'s
/// return value reaches parameter `param_index` of `consumer` (`-1` =
/// receiver).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProducerLink {
    pub producer: CallSiteId,
    pub consumer: CallSiteId,
    pub param_index: i32,
}

/// Origin trace for one material-bearing argument (key, IV, salt, seed or
/// password). Every trace is at a consumption point inside the slice, so it
/// is consumed by the criterion chain by construction.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MaterialTrace {
    pub role: ParamRole,
    /// The related call receiving the material.
    pub consumer: CallSiteId,
    pub consumer_api: String,
    pub param_index: usize,
    /// Value of the argument at the consumption point.
    pub value: ConstValue,
    /// Producing call, when one was traced (keysource, material constructor
    /// or output-parameter fill).
    pub producer: Option<CallSiteId>,
    pub producer_api: Option<String>,
    /// No producer and no constant value: the material enters the program
    /// from outside the scanned code.
    pub external_input: bool,
    /// Location of the argument expression.
    pub location: Location,
}

/// Everything gathered for one criterion under one calling context (or a
/// merged group of contexts, when a criterion is reachable from more
/// contexts than the reporting cap).
#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Slice {
    pub criterion: SliceCriterion,
    #[serde(skip)]
    pub context: Context,
    /// Human-readable calling context, for dumps and evidence.
    pub context_label: String,
    /// Calling contexts this slice covers; > 1 only when `merged`.
    pub contexts_covered: usize,
    /// Statements, sorted by (file, line, column).
    pub statements: Vec<SliceStmt>,
    /// Values of every related call argument, sorted by (site, index).
    pub values: Vec<ArgValue>,
    pub related_calls: Vec<RelatedCall>,
    /// Related calls partitioned by receiver instance: calls on one object
    /// (or creating it) share a group. Sorted within and across groups.
    pub instance_groups: Vec<Vec<CallSiteId>>,
    /// Result-to-parameter edges between related calls.
    pub producer_links: Vec<ProducerLink>,
    pub materials: Vec<MaterialTrace>,
    /// The statement budget ran out (or constant propagation's did):
    /// statements or values may be missing.
    pub incomplete: bool,
    /// This slice joins several calling contexts.
    pub merged: bool,
}

impl Slice {
    pub fn value_of(&self, site: CallSiteId, arg_index: usize) -> Option<&ConstValue> {
        self.values
            .iter()
            .find(|v| v.site == site && v.arg_index == arg_index)
            .map(|v| &v.value)
    }

    pub fn related(&self, site: CallSiteId) -> Option<&RelatedCall> {
        self.related_calls.iter().find(|r| r.site == site)
    }
}

/// Match every call site against the knowledge base once.
pub fn match_sites<'kb>(
    ir: &ProgramIr,
    kb: &'kb KnowledgeBase,
) -> BTreeMap<CallSiteId, &'kb ApiSpec> {
    ir.call_sites
        .iter()
        .filter_map(|s| kb.match_call_site(ir, s.id).map(|api| (s.id, api)))
        .collect()
}

/// All criterion call sites, ordered by (file, line, column) so reports are
/// stable across runs.
pub fn find_criteria(ir: &ProgramIr, kb: &KnowledgeBase) -> Vec<SliceCriterion> {
    let mut out: Vec<SliceCriterion> = ir
        .call_sites
        .iter()
        .filter_map(|s| {
            let api = kb.match_call_site(ir, s.id)?;
            // Random draws complete an operation of their own: they are
            // where weak-generator and seeding problems become observable.
            if !matches!(api.kind, ApiKind::Criterion | ApiKind::Randomsource) {
                return None;
            }
            Some(SliceCriterion {
                site: s.id,
                method: s.method,
                stmt: s.stmt,
                api: api.id.clone(),
                completes: api.completes.clone(),
                location: s.call_loc.clone(),
            })
        })
        .collect();
    out.sort_by(|a, b| {
        (loc_key(&a.location), a.site).cmp(&(loc_key(&b.location), b.site))
    });
    out
}

fn loc_key(loc: &Location) -> (&str, u32, u32) {
    (&loc.file_name, loc.line, loc.start_column)
}

/// Slice every criterion in the program.
pub fn slice_program(
    ir: &ProgramIr,
    kb: &KnowledgeBase,
    consts: &ConstResults,
    opts: &SliceOptions,
) -> Vec<Slice> {
    let site_apis = match_sites(ir, kb);
    // Criteria are independent; the indexed collect keeps criterion order,
    // so the thread count never shows in the output.
    find_criteria(ir, kb)
        .par_iter()
        .map(|c| backward_slice_with(ir, kb, consts, &site_apis, c, opts))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Slice one criterion: one slice per calling context of its method, capped
/// at `max_contexts` with the overflow merged into a final flagged slice.
pub fn backward_slice(
    ir: &ProgramIr,
    kb: &KnowledgeBase,
    consts: &ConstResults,
    criterion: &SliceCriterion,
    opts: &SliceOptions,
) -> Vec<Slice> {
    let site_apis = match_sites(ir, kb);
    backward_slice_with(ir, kb, consts, &site_apis, criterion, opts)
}

fn backward_slice_with(
    ir: &ProgramIr,
    kb: &KnowledgeBase,
    consts: &ConstResults,
    site_apis: &BTreeMap<CallSiteId, &ApiSpec>,
    criterion: &SliceCriterion,
    opts: &SliceOptions,
) -> Vec<Slice> {
    let mut ctxs: Vec<Context> = consts
        .contexts(criterion.method)
        .into_iter()
        .cloned()
        .collect();
    if ctxs.is_empty() {
        ctxs.push(Context::entry());
    }

    let cap = opts.max_contexts.max(1);
    let mut slices = Vec::new();
    if ctxs.len() <= cap {
        for ctx in ctxs {
            slices.push(build_slice(
                ir, kb, consts, site_apis, criterion, vec![ctx], false, opts,
            ));
        }
    } else {
        let overflow = ctxs.split_off(cap - 1);
        for ctx in ctxs {
            slices.push(build_slice(
                ir, kb, consts, site_apis, criterion, vec![ctx], false, opts,
            ));
        }
        slices.push(build_slice(
            ir, kb, consts, site_apis, criterion, overflow, true, opts,
        ));
    }
    slices
}

/// One interprocedural level: a method plus the contexts whose analysis
/// results this slice reads it under.
struct Frame {
    method: MethodId,
    ctxs: Vec<Context>,
    /// Call site (in this frame) leading into the next-inner frame.
    entry_site: Option<CallSiteId>,
}

/// Build the frame stack for a context group by ascending the call string.
/// Ascent stops when the group's contexts disagree on the innermost caller,
/// when the caller was never analyzed, or after `k` levels.
fn frames_for(
    ir: &ProgramIr,
    consts: &ConstResults,
    method: MethodId,
    ctxs: Vec<Context>,
) -> Vec<Frame> {
    let k = consts.k();
    let mut frames = vec![Frame {
        method,
        ctxs,
        entry_site: None,
    }];
    while frames.len() <= k {
        let cur = frames.last().expect("frames nonempty");
        let tails: BTreeSet<Option<CallSiteId>> = cur
            .ctxs
            .iter()
            .map(|c| c.call_string.last().copied())
            .collect();
        if tails.len() != 1 {
            break;
        }
        let Some(site) = tails.into_iter().next().expect("one tail") else {
            break; // entry context: nothing above
        };
        let caller = ir.site(site).method;
        let expected = &frames.last().expect("frames nonempty").ctxs;
        let mut caller_ctxs: Vec<Context> = consts
            .contexts(caller)
            .into_iter()
            .filter(|cc| expected.iter().any(|e| &cc.push(site, k) == e))
            .cloned()
            .collect();
        caller_ctxs.dedup();
        if caller_ctxs.is_empty() {
            break;
        }
        frames.push(Frame {
            method: caller,
            ctxs: caller_ctxs,
            entry_site: Some(site),
        });
    }
    frames
}

#[derive(Debug)]
enum Work {
    /// Include a statement and everything it depends on.
    Stmt(usize, StmtId),
    /// Track a receiver variable: aliases, creation, same-instance calls
    /// before the boundary statement. The `CallSiteId` is the related call
    /// whose instance is being tracked; calls joining through it share its
    /// instance group.
    Receiver(usize, VarId, CallSiteId, StmtId),
    /// A call joined the slice: mark it, track its receiver, trace producers
    /// into its arguments.
    Related(usize, CallSiteId),
}

struct Builder<'a> {
    ir: &'a ProgramIr,
    kb: &'a KnowledgeBase,
    consts: &'a ConstResults,
    site_apis: &'a BTreeMap<CallSiteId, &'a ApiSpec>,
    frames: Vec<Frame>,
    budget: usize,
    incomplete: bool,
    marked: BTreeSet<(usize, StmtId)>,
    receiver_seen: BTreeSet<(usize, VarId)>,
    /// Producer-walk visits, to cut copy cycles.
    walk_seen: BTreeSet<(usize, VarId, StmtId)>,
    /// site → frame it was found in.
    related: BTreeMap<CallSiteId, usize>,
    /// (consumer site, param index; -1 = receiver) → producer sites.
    producers: BTreeMap<(CallSiteId, i32), BTreeSet<CallSiteId>>,
    /// Union-find parents partitioning related calls by receiver instance.
    group_parent: BTreeMap<CallSiteId, CallSiteId>,
    work: VecDeque<Work>,
}

impl<'a> Builder<'a> {
    fn method_of(&self, frame: usize) -> &'a MethodIr {
        self.ir.method(self.frames[frame].method)
    }

    /// Join the constant verdict for an expression over the frame's contexts.
    fn value_at(&self, frame: usize, stmt: StmtId, expr: ExprId) -> ConstValue {
        let f = &self.frames[frame];
        let mut acc = ConstValue::bottom();
        for ctx in &f.ctxs {
            acc = acc.join(&self.consts.eval_at(self.ir, f.method, ctx, stmt, expr));
        }
        acc
    }

    fn run(&mut self, criterion: &SliceCriterion) {
        self.work.push_back(Work::Related(0, criterion.site));
        while let Some(w) = self.work.pop_front() {
            match w {
                Work::Stmt(f, s) => self.mark_stmt(f, s),
                Work::Receiver(f, v, seed, boundary) => self.track_receiver(f, v, seed, boundary),
                Work::Related(f, site) => self.add_related(f, site),
            }
        }
    }

    fn group_find(&mut self, site: CallSiteId) -> CallSiteId {
        let mut root = site;
        while let Some(&p) = self.group_parent.get(&root) {
            if p == root {
                break;
            }
            root = p;
        }
        // path compression
        let mut cur = site;
        while let Some(&p) = self.group_parent.get(&cur) {
            if p == root {
                break;
            }
            self.group_parent.insert(cur, root);
            cur = p;
        }
        root
    }

    fn group_union(&mut self, a: CallSiteId, b: CallSiteId) {
        let ra = self.group_find(a);
        let rb = self.group_find(b);
        if ra != rb {
            // smaller id wins as the representative, for determinism
            let (keep, drop) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.group_parent.insert(drop, keep);
        }
    }

    fn mark_stmt(&mut self, f: usize, s: StmtId) {
        if self.marked.contains(&(f, s)) {
            return;
        }
        if self.budget == 0 {
            self.incomplete = true;
            return;
        }
        self.budget -= 1;
        self.marked.insert((f, s));
        let m = self.method_of(f);
        for p in &m.stmts[s].control_parents {
            self.work.push_back(Work::Stmt(f, *p));
        }
        // Data dependences: definitions reaching every variable this
        // statement reads.
        let mut param_deps: Vec<VarId> = Vec::new();
        for u in m.def_use.uses_in_stmt(s) {
            for &d in m.def_use.defs_reaching(u.id) {
                match m.def_use.defs[d].site {
                    DefSite::Stmt(ds) => self.work.push_back(Work::Stmt(f, ds)),
                    DefSite::Param(v) => param_deps.push(v),
                }
            }
        }
        for v in param_deps {
            self.param_dep(f, v, None);
        }
    }

    /// A frame's computation depends on one of its parameters: pull the
    /// corresponding argument of the call in the frame above into the slice.
    fn param_dep(&mut self, f: usize, v: VarId, receiver_seed: Option<(CallSiteId, StmtId)>) {
        if f + 1 >= self.frames.len() {
            return; // outermost frame: the value enters from outside the scan
        }
        let entry = self.frames[f + 1]
            .entry_site
            .expect("inner frames have an entry site");
        let site = self.ir.site(entry);
        let caller_stmt = site.stmt;
        self.work.push_back(Work::Stmt(f + 1, caller_stmt));
        let m = self.method_of(f);
        let Some(idx) = m.params.iter().position(|p| *p == v) else {
            return;
        };
        let Some(&arg) = site.args.get(idx) else {
            return;
        };
        if let Some((seed, _)) = receiver_seed {
            let mut vars = Vec::new();
            self.ir.expr_vars(self.frames[f + 1].method, arg, &mut vars);
            for u in vars {
                self.work
                    .push_back(Work::Receiver(f + 1, u, seed, caller_stmt));
            }
        }
    }

    fn track_receiver(&mut self, f: usize, v: VarId, seed: CallSiteId, boundary: StmtId) {
        if !self.receiver_seen.insert((f, v)) {
            return;
        }
        let group = self.site_apis[&seed].id.clone();
        let m = self.method_of(f);

        // Creation and aliases: definitions of the variable up to the
        // boundary. A definition from a plain copy extends the alias set;
        // one whose initializer is a knowledge-base call related to the
        // group joins the related set (instantiation evidence).
        let mut param_vars = Vec::new();
        let mut def_stmts = Vec::new();
        for d in &m.def_use.defs {
            if d.var != v {
                continue;
            }
            match d.site {
                DefSite::Param(pv) => param_vars.push(pv),
                DefSite::Stmt(ds) if ds <= boundary => def_stmts.push(ds),
                DefSite::Stmt(_) => {}
            }
        }
        for ds in def_stmts {
            self.work.push_back(Work::Stmt(f, ds));
            if let Some(u) = plain_var_rhs(m, ds) {
                self.work.push_back(Work::Receiver(f, u, seed, boundary));
            }
            for root in self.ir.stmt_roots(m.id, ds) {
                if let Some(ps) = call_root(m, root) {
                    if let Some(api) = self.site_apis.get(&ps) {
                        if self.kb.same_instance_related(&group, &api.id) {
                            self.group_union(ps, seed);
                            self.work.push_back(Work::Related(f, ps));
                        } else if self.producer_rule(&api.id, &group, -1) {
                            self.producers.entry((seed, -1)).or_default().insert(ps);
                            self.work.push_back(Work::Related(f, ps));
                        }
                    }
                }
            }
        }
        for pv in param_vars {
            self.param_dep(f, pv, Some((seed, boundary)));
        }

        // Forward copies: variables assigned from this one share the
        // instance (`Cipher d = c; d.init(...)`).
        let copies: Vec<VarId> = m
            .def_use
            .defs
            .iter()
            .filter_map(|d| match d.site {
                DefSite::Stmt(ds) if plain_var_rhs(m, ds) == Some(v) => Some(d.var),
                _ => None,
            })
            .collect();
        for u in copies {
            self.work.push_back(Work::Receiver(f, u, seed, boundary));
        }

        // Same-instance calls on this variable before the boundary, admitted
        // only when a relation rule ties the two apis together.
        let method_id = self.frames[f].method;
        let peers: Vec<CallSiteId> = self
            .ir
            .call_sites
            .iter()
            .filter(|cs| {
                cs.method == method_id
                    && cs.receiver_var == Some(v)
                    && cs.stmt <= boundary
            })
            .filter(|cs| {
                self.site_apis
                    .get(&cs.id)
                    .is_some_and(|api| self.kb.same_instance_related(&group, &api.id))
            })
            .map(|cs| cs.id)
            .collect();
        for p in peers {
            self.group_union(p, seed);
            self.work.push_back(Work::Related(f, p));
        }
    }

    fn add_related(&mut self, f: usize, site_id: CallSiteId) {
        if self.related.contains_key(&site_id) {
            return;
        }
        let Some(api) = self.site_apis.get(&site_id).copied() else {
            return;
        };
        self.related.insert(site_id, f);
        self.group_parent.entry(site_id).or_insert(site_id);
        let site = self.ir.site(site_id);
        self.work.push_back(Work::Stmt(f, site.stmt));

        // Receiver: variable receivers get alias/same-instance tracking;
        // chained-call receivers are checked as producers or same-instance
        // peers directly.
        if let Some(v) = site.receiver_var {
            self.work.push_back(Work::Receiver(f, v, site_id, site.stmt));
        } else if let Some(r) = site.receiver_expr {
            let m = self.method_of(f);
            if let Some(ps) = call_root(m, r) {
                if let Some(papi) = self.site_apis.get(&ps) {
                    if self.kb.same_instance_related(&papi.id, &api.id) {
                        self.group_union(ps, site_id);
                        self.work.push_back(Work::Related(f, ps));
                    } else if self.producer_rule(&papi.id, &api.id, -1) {
                        self.producers.entry((site_id, -1)).or_default().insert(ps);
                        self.work.push_back(Work::Related(f, ps));
                    }
                }
            }
        }

        // Producers feeding each argument.
        for (idx, &arg) in site.args.iter().enumerate() {
            self.trace_producer_expr(f, site.stmt, arg, site_id, &api.id, idx);
        }
    }

    /// Does a relation rule let `producer`'s result flow into parameter
    /// `idx` of `target` (`-1` = receiver)?
    fn producer_rule(&self, producer: &str, target: &str, idx: i32) -> bool {
        self.kb.relations_from(producer).any(|r| {
            r.kind == RelationKind::ResultFlowsToParam
                && KnowledgeBase::id_matches(target, &r.target_api)
                && r.param_index.is_none_or(|pi| pi == idx)
        })
    }

    fn record_producer(&mut self, consumer: CallSiteId, idx: usize, producer: CallSiteId) {
        self.producers
            .entry((consumer, idx as i32))
            .or_default()
            .insert(producer);
    }

    fn trace_producer_expr(
        &mut self,
        f: usize,
        at_stmt: StmtId,
        expr: ExprId,
        consumer: CallSiteId,
        consumer_api: &str,
        idx: usize,
    ) {
        let m = self.method_of(f);
        match &m.exprs[expr].kind {
            IrExprKind::Call { site } | IrExprKind::New { site } => {
                let ps = *site;
                if let Some(papi) = self.site_apis.get(&ps) {
                    if self.producer_rule(&papi.id, consumer_api, idx as i32) {
                        self.record_producer(consumer, idx, ps);
                        self.work.push_back(Work::Related(f, ps));
                    }
                }
            }
            IrExprKind::Var(v) => {
                self.trace_producer_var(f, at_stmt, *v, consumer, consumer_api, idx);
            }
            _ => {}
        }
    }

    /// Walk a variable's reaching definitions looking for producer calls and
    /// output-parameter fills, following plain copies and frame ascent.
    fn trace_producer_var(
        &mut self,
        f: usize,
        at_stmt: StmtId,
        v: VarId,
        consumer: CallSiteId,
        consumer_api: &str,
        idx: usize,
    ) {
        if !self.walk_seen.insert((f, v, at_stmt)) {
            return;
        }

        // Output-parameter fills strictly before the consuming statement:
        // `random.nextBytes(iv)` produces iv's value.
        let method_id = self.frames[f].method;
        let fills: Vec<CallSiteId> = self
            .ir
            .call_sites
            .iter()
            .filter(|cs| cs.method == method_id && cs.stmt < at_stmt)
            .filter(|cs| {
                self.site_apis.get(&cs.id).is_some_and(|api| {
                    api.param_roles.iter().enumerate().any(|(j, p)| {
                        p.output
                            && cs
                                .args
                                .get(j)
                                .is_some_and(|&a| var_root(self.ir.method(method_id), a) == Some(v))
                    })
                })
            })
            .map(|cs| cs.id)
            .collect();
        for ps in fills {
            self.record_producer(consumer, idx, ps);
            self.work.push_back(Work::Related(f, ps));
        }

        // Reaching definitions of the variable at this statement.
        let m = self.method_of(f);
        let mut def_ids: BTreeSet<usize> = BTreeSet::new();
        for u in m.def_use.uses_in_stmt(at_stmt) {
            if u.var == v {
                def_ids.extend(m.def_use.defs_reaching(u.id).iter().copied());
            }
        }
        let sites: Vec<DefSite> = def_ids.iter().map(|&d| m.def_use.defs[d].site).collect();
        for site in sites {
            match site {
                DefSite::Stmt(ds) => {
                    let m = self.method_of(f);
                    for root in self.ir.stmt_roots(m.id, ds) {
                        match &m.exprs[root].kind {
                            IrExprKind::Call { site } | IrExprKind::New { site } => {
                                let ps = *site;
                                if let Some(papi) = self.site_apis.get(&ps) {
                                    if self.producer_rule(&papi.id, consumer_api, idx as i32) {
                                        self.record_producer(consumer, idx, ps);
                                        self.work.push_back(Work::Related(f, ps));
                                    }
                                }
                            }
                            IrExprKind::Var(u) => {
                                self.trace_producer_var(f, ds, *u, consumer, consumer_api, idx);
                            }
                            _ => {}
                        }
                    }
                }
                DefSite::Param(pv) => {
                    // Ascend: the caller's argument may be the producer.
                    if f + 1 < self.frames.len() {
                        let entry = self.frames[f + 1]
                            .entry_site
                            .expect("inner frames have an entry site");
                        let esite = self.ir.site(entry);
                        let m = self.method_of(f);
                        if let Some(pidx) = m.params.iter().position(|p| *p == pv) {
                            if let Some(&arg) = esite.args.get(pidx) {
                                self.trace_producer_expr(
                                    f + 1,
                                    esite.stmt,
                                    arg,
                                    consumer,
                                    consumer_api,
                                    idx,
                                );
                            }
                        }
                    }
                }
            }
        }
    }
}

/// The variable a plain copy reads, when a statement is `x = y;`.
fn plain_var_rhs(m: &MethodIr, stmt: StmtId) -> Option<VarId> {
    let value = match &m.stmts[stmt].kind {
        IrStmtKind::Decl { init: Some(e), .. } => *e,
        IrStmtKind::Assign { value, .. } => *value,
        _ => return None,
    };
    match m.exprs[value].kind {
        IrExprKind::Var(u) => Some(u),
        _ => None,
    }
}

/// The call site an expression evaluates to, when its root is a call.
fn call_root(m: &MethodIr, expr: ExprId) -> Option<CallSiteId> {
    match m.exprs[expr].kind {
        IrExprKind::Call { site } | IrExprKind::New { site } => Some(site),
        _ => None,
    }
}

/// The variable an argument expression denotes, when it is a plain variable.
fn var_root(m: &MethodIr, expr: ExprId) -> Option<VarId> {
    match m.exprs[expr].kind {
        IrExprKind::Var(v) => Some(v),
        _ => None,
    }
}

const MATERIAL_ROLES: [ParamRole; 5] = [
    ParamRole::Key,
    ParamRole::Iv,
    ParamRole::Salt,
    ParamRole::Seed,
    ParamRole::Password,
];

#[allow(clippy::too_many_arguments)]
fn build_slice(
    ir: &ProgramIr,
    kb: &KnowledgeBase,
    consts: &ConstResults,
    site_apis: &BTreeMap<CallSiteId, &ApiSpec>,
    criterion: &SliceCriterion,
    ctx_group: Vec<Context>,
    merged: bool,
    opts: &SliceOptions,
) -> Slice {
    let contexts_covered = ctx_group.len();
    let representative = ctx_group.first().cloned().unwrap_or_default();
    let context_label = if merged {
        format!("merged:{contexts_covered} contexts")
    } else {
        representative.describe(ir)
    };

    let frames = frames_for(ir, consts, criterion.method, ctx_group);
    let mut b = Builder {
        ir,
        kb,
        consts,
        site_apis,
        frames,
        budget: opts.budget,
        incomplete: false,
        marked: BTreeSet::new(),
        receiver_seen: BTreeSet::new(),
        walk_seen: BTreeSet::new(),
        related: BTreeMap::new(),
        producers: BTreeMap::new(),
        group_parent: BTreeMap::new(),
        work: VecDeque::new(),
    };
    b.run(criterion);

    // Statements, deduplicated across frames and ordered by position.
    let mut stmt_set: BTreeSet<SliceStmt> = BTreeSet::new();
    for &(f, s) in &b.marked {
        let m = b.method_of(f);
        stmt_set.insert(SliceStmt {
            method: m.id,
            stmt: s,
            location: m.stmts[s].loc.clone(),
        });
    }
    let mut statements: Vec<SliceStmt> = stmt_set.into_iter().collect();
    statements.sort_by(|a, b| {
        (loc_key(&a.location), a.method, a.stmt).cmp(&(loc_key(&b.location), b.method, b.stmt))
    });

    // Argument values for every related call.
    let mut values = Vec::new();
    for (&site_id, &f) in &b.related {
        let site = ir.site(site_id);
        for (idx, &arg) in site.args.iter().enumerate() {
            values.push(ArgValue {
                site: site_id,
                arg_index: idx,
                value: b.value_at(f, site.stmt, arg),
            });
        }
    }
    values.sort_by_key(|v| (v.site, v.arg_index));

    let mut related_calls: Vec<RelatedCall> = b
        .related
        .keys()
        .map(|&s| {
            let api = site_apis[&s];
            RelatedCall {
                site: s,
                api: api.id.clone(),
                kind: api.kind,
                location: ir.site(s).call_loc.clone(),
            }
        })
        .collect();
    related_calls.sort_by(|a, b| {
        (loc_key(&a.location), a.site).cmp(&(loc_key(&b.location), b.site))
    });

    let materials = forward_trace_materials(ir, site_apis, &b.related, &b.producers, &values);

    // Instance groups: connected components of the receiver union-find.
    let mut components: BTreeMap<CallSiteId, Vec<CallSiteId>> = BTreeMap::new();
    let members: Vec<CallSiteId> = b.related.keys().copied().collect();
    for site in members {
        let root = b.group_find(site);
        components.entry(root).or_default().push(site);
    }
    let mut instance_groups: Vec<Vec<CallSiteId>> = components.into_values().collect();
    for g in &mut instance_groups {
        g.sort();
    }
    instance_groups.sort();

    let mut producer_links: Vec<ProducerLink> = b
        .producers
        .iter()
        .flat_map(|(&(consumer, param_index), prods)| {
            prods.iter().map(move |&producer| ProducerLink {
                producer,
                consumer,
                param_index,
            })
        })
        .collect();
    producer_links.sort();

    Slice {
        criterion: criterion.clone(),
        context: representative,
        context_label,
        contexts_covered,
        statements,
        values,
        related_calls,
        instance_groups,
        producer_links,
        materials,
        incomplete: b.incomplete || consts.budget_exceeded,
        merged,
    }
}

/// Attach origin traces to every material-bearing argument of the slice's
/// related calls. Object-valued parameters whose producer is a material
/// constructor are skipped: the constructor's own parameters carry the
/// actual material (bytes inside a key spec) at finer grain.
fn forward_trace_materials(
    ir: &ProgramIr,
    site_apis: &BTreeMap<CallSiteId, &ApiSpec>,
    related: &BTreeMap<CallSiteId, usize>,
    producers: &BTreeMap<(CallSiteId, i32), BTreeSet<CallSiteId>>,
    values: &[ArgValue],
) -> Vec<MaterialTrace> {
    let mut out = Vec::new();
    for &site_id in related.keys() {
        let api = site_apis[&site_id];
        let site = ir.site(site_id);
        for (idx, pspec) in api.param_roles.iter().enumerate() {
            if !MATERIAL_ROLES.contains(&pspec.role) || idx >= site.args.len() {
                continue;
            }
            let value = values
                .iter()
                .find(|v| v.site == site_id && v.arg_index == idx)
                .map(|v| v.value.clone())
                .unwrap_or_else(ConstValue::bottom);

            // Deterministic producer choice: the latest fill/definition wins
            // (highest statement, then site id).
            let producer = producers
                .get(&(site_id, idx as i32))
                .and_then(|set| {
                    set.iter()
                        .max_by_key(|&&p| (ir.site(p).stmt, p))
                        .copied()
                });
            let producer_api = producer.map(|p| site_apis[&p].id.clone());

            if pspec.value_kind == crate::kb::ValueKind::Object {
                if let Some(p) = producer {
                    if site_apis[&p].kind == ApiKind::MaterialCtor {
                        continue; // the ctor's own params carry the material
                    }
                }
            }

            let m = ir.method(site.method);
            let location = m.exprs[site.args[idx]].loc.clone();
            let external_input = producer.is_none() && value.as_constant().is_none();
            out.push(MaterialTrace {
                role: pspec.role,
                consumer: site_id,
                consumer_api: api.id.clone(),
                param_index: idx,
                value,
                producer,
                producer_api,
                external_input,
                location,
            });
        }
    }
    out.sort_by_key(|t| (t.consumer, t.param_index));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constprop::{propagate, ConstOptions, Lattice};
    use crate::frontend;
    use crate::ir::build_program_ir;
    use crate::kb::load_kb;
    use crate::Value;

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

    struct Scan {
        ir: ProgramIr,
        kb: KnowledgeBase,
        consts: ConstResults,
    }

    fn scan(src: &str) -> Scan {
        scan_opts(src, &ConstOptions::default())
    }

    fn scan_opts(src: &str, copts: &ConstOptions) -> Scan {
        let ir = ir_of_files(&[("T.java", src)]);
        let kb = load_kb(&[]).expect("builtin kb");
        let consts = propagate(&ir, &kb.constants, copts);
        Scan { ir, kb, consts }
    }

    fn slices(s: &Scan) -> Vec<Slice> {
        slice_program(&s.ir, &s.kb, &s.consts, &SliceOptions::default())
    }

    fn criterion_slices<'a>(all: &'a [Slice], api: &str) -> Vec<&'a Slice> {
        all.iter().filter(|s| s.criterion.api == api).collect()
    }

    fn related_apis(s: &Slice) -> BTreeSet<&str> {
        s.related_calls.iter().map(|r| r.api.as_str()).collect()
    }

    fn stmt_lines(s: &Slice) -> BTreeSet<u32> {
        s.statements.iter().map(|st| st.location.line).collect()
    }

    #[test]
    fn sign_chain_slice_covers_configuration() {
        let s = scan(
            "import java.security.*;\n\
             class A {\n\
               byte[] run(PrivateKey priv, byte[] data) throws Exception {\n\
                 Signature sg = Signature.getInstance(\"SHA256withRSA\");\n\
                 sg.initSign(priv);\n\
                 sg.update(data);\n\
                 return sg.sign();\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Signature.sign/0");
        assert_eq!(sl.len(), 1, "one context for the root method");
        let sl = sl[0];

        let apis = related_apis(sl);
        assert!(apis.contains("jca:Signature.getInstance/1"));
        assert!(apis.contains("jca:Signature.initSign/1"));
        assert!(apis.contains("jca:Signature.update/1"));
        assert!(apis.contains("jca:Signature.sign/0"));

        // Statement span: getInstance (line 4) through the return (line 7).
        let lines = stmt_lines(sl);
        assert!(lines.is_superset(&BTreeSet::from([4, 5, 6, 7])), "lines: {lines:?}");

        // The transformation argument folded.
        let gi = sl
            .related_calls
            .iter()
            .find(|r| r.api == "jca:Signature.getInstance/1")
            .unwrap();
        assert_eq!(
            sl.value_of(gi.site, 0).and_then(|v| v.as_constant()),
            Some(&Value::Str("SHA256withRSA".into()))
        );

        // The signing key came in from outside the scanned code.
        let key = sl
            .materials
            .iter()
            .find(|t| t.role == ParamRole::Key)
            .expect("key material traced");
        assert!(key.producer.is_none());
        assert!(key.external_input);
        assert!(!sl.incomplete);
        assert!(!sl.merged);
    }

    #[test]
    fn wrapper_contexts_get_separate_slices_with_distinct_values() {
        let s = scan(
            "import javax.crypto.*;\n\
             class W {\n\
               void both() throws Exception { enc(\"AES\"); enc(\"DES\"); }\n\
               void enc(String alg) throws Exception {\n\
                 Cipher c = Cipher.getInstance(alg);\n\
                 c.doFinal(new byte[16]);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1");
        assert_eq!(sl.len(), 2, "one slice per calling context");

        let mut algs = BTreeSet::new();
        for slice in &sl {
            let gi = slice
                .related_calls
                .iter()
                .find(|r| r.api == "jca:Cipher.getInstance/1")
                .expect("instantiation related");
            let v = slice.value_of(gi.site, 0).expect("transformation value");
            algs.insert(v.as_constant().cloned().expect("constant per context"));
            // Ascent pulled the wrapper's call statement (line 3) in.
            assert!(stmt_lines(slice).contains(&3), "caller statement included");
            assert!(!slice.merged);
        }
        assert_eq!(
            algs,
            BTreeSet::from([Value::Str("AES".into()), Value::Str("DES".into())])
        );
    }

    #[test]
    fn context_overflow_merges_remainder_into_flagged_slice() {
        // Six call sites into one helper, reported under a cap of four:
        // three individual slices plus one merged slice covering the rest.
        let src = "import javax.crypto.*;\n\
             class M {\n\
               void a() throws Exception { enc(\"AES\"); }\n\
               void b() throws Exception { enc(\"DES\"); }\n\
               void c() throws Exception { enc(\"RC4\"); }\n\
               void d() throws Exception { enc(\"RC2\"); }\n\
               void e() throws Exception { enc(\"Blowfish\"); }\n\
               void f() throws Exception { enc(\"DESede\"); }\n\
               void enc(String alg) throws Exception {\n\
                 Cipher c = Cipher.getInstance(alg);\n\
                 c.doFinal(new byte[16]);\n\
               }\n\
             }\n";
        let s = scan(src);
        let crits = find_criteria(&s.ir, &s.kb);
        assert_eq!(crits.len(), 1);
        let opts = SliceOptions {
            max_contexts: 4,
            ..SliceOptions::default()
        };
        let sl = backward_slice(&s.ir, &s.kb, &s.consts, &crits[0], &opts);
        assert_eq!(sl.len(), 4, "cap yields 3 individual + 1 merged");
        assert!(sl[..3].iter().all(|s| !s.merged && s.contexts_covered == 1));
        let merged = &sl[3];
        assert!(merged.merged);
        assert_eq!(merged.contexts_covered, 3);

        // The merged slice joins the remaining transformations.
        let gi = merged
            .related_calls
            .iter()
            .find(|r| r.api == "jca:Cipher.getInstance/1")
            .unwrap();
        let v = merged.value_of(gi.site, 0).unwrap();
        match &v.lattice {
            Lattice::MultiValue(set) => assert_eq!(set.len(), 3, "three joined values"),
            other => panic!("expected a joined value, got {other:?}"),
        }
    }

    #[test]
    fn statement_budget_exhaustion_flags_incomplete() {
        let s = scan(
            "import javax.crypto.*;\n\
             class B {\n\
               void go() throws Exception {\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.doFinal(new byte[16]);\n\
               }\n\
             }\n",
        );
        let crits = find_criteria(&s.ir, &s.kb);
        let opts = SliceOptions {
            budget: 1,
            ..SliceOptions::default()
        };
        let sl = backward_slice(&s.ir, &s.kb, &s.consts, &crits[0], &opts);
        assert_eq!(sl.len(), 1);
        assert!(sl[0].incomplete);
        assert_eq!(sl[0].statements.len(), 1, "budget admitted one statement");
    }

    #[test]
    fn hardcoded_iv_bytes_surface_as_constant_material() {
        let s = scan(
            "import javax.crypto.*;\n\
             import javax.crypto.spec.*;\n\
             class I {\n\
               void go(SecretKey k) throws Exception {\n\
                 byte[] iv = {1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16};\n\
                 Cipher c = Cipher.getInstance(\"AES/CBC/PKCS5Padding\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k, new IvParameterSpec(iv));\n\
                 c.doFinal(new byte[4]);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1");
        assert_eq!(sl.len(), 1);
        let sl = sl[0];

        assert!(related_apis(sl).contains("jca:IvParameterSpec.<init>/1"));

        let iv = sl
            .materials
            .iter()
            .find(|t| t.role == ParamRole::Iv)
            .expect("iv material");
        assert_eq!(iv.consumer_api, "jca:IvParameterSpec.<init>/1");
        match iv.value.as_constant() {
            Some(Value::Bytes(b)) => assert_eq!(b.len(), 16),
            other => panic!("expected constant bytes, got {other:?}"),
        }
        assert!(!iv.external_input);

        // The opmode constant resolved through the knowledge base.
        let init = sl
            .related_calls
            .iter()
            .find(|r| r.api == "jca:Cipher.init/3")
            .expect("init related");
        assert_eq!(
            sl.value_of(init.site, 0).and_then(|v| v.as_constant()),
            Some(&Value::Int(1))
        );
    }

    #[test]
    fn random_fill_traces_to_output_parameter_producer() {
        let s = scan(
            "import javax.crypto.*;\n\
             import javax.crypto.spec.*;\n\
             import java.security.*;\n\
             class R {\n\
               void go(SecretKey k) throws Exception {\n\
                 byte[] iv = new byte[16];\n\
                 SecureRandom r = new SecureRandom();\n\
                 r.nextBytes(iv);\n\
                 Cipher c = Cipher.getInstance(\"AES/CBC/PKCS5Padding\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k, new IvParameterSpec(iv));\n\
                 c.doFinal(new byte[4]);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1");
        assert_eq!(sl.len(), 1);
        let sl = sl[0];

        let iv = sl
            .materials
            .iter()
            .find(|t| t.role == ParamRole::Iv)
            .expect("iv material");
        assert_eq!(
            iv.producer_api.as_deref(),
            Some("jca:SecureRandom.nextBytes/1")
        );
        assert!(!iv.external_input, "a traced producer is not external");

        // The random source's own construction is part of the slice.
        assert!(related_apis(sl).contains("jca:SecureRandom.<init>/0"));
    }

    #[test]
    fn keystore_key_traces_to_keysource_producer() {
        let s = scan(
            "import java.security.*;\n\
             import javax.crypto.*;\n\
             class K {\n\
               byte[] go(KeyStore ks, char[] pw, byte[] d) throws Exception {\n\
                 Key key = ks.getKey(\"alias\", pw);\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, key);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1");
        assert_eq!(sl.len(), 1);
        let sl = sl[0];

        let key = sl
            .materials
            .iter()
            .find(|t| t.role == ParamRole::Key)
            .expect("key material");
        assert_eq!(key.producer_api.as_deref(), Some("jca:KeyStore.getKey/2"));
        assert!(!key.external_input);
        assert!(related_apis(sl).contains("jca:KeyStore.getKey/2"));
    }

    #[test]
    fn generated_key_pulls_generator_configuration_into_slice() {
        let s = scan(
            "import javax.crypto.*;\n\
             class G {\n\
               void go() throws Exception {\n\
                 KeyGenerator kg = KeyGenerator.getInstance(\"AES\");\n\
                 kg.init(128);\n\
                 SecretKey k = kg.generateKey();\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 c.doFinal(new byte[4]);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1");
        assert_eq!(sl.len(), 1);
        let sl = sl[0];

        let apis = related_apis(sl);
        assert!(apis.contains("jca:KeyGenerator.generateKey/0"));
        assert!(apis.contains("jca:KeyGenerator.getInstance/1"));
        assert!(apis.contains("jca:KeyGenerator.init/1"));

        let kginit = sl
            .related_calls
            .iter()
            .find(|r| r.api == "jca:KeyGenerator.init/1")
            .unwrap();
        assert_eq!(
            sl.value_of(kginit.site, 0).and_then(|v| v.as_constant()),
            Some(&Value::Int(128))
        );

        let key = sl
            .materials
            .iter()
            .find(|t| t.role == ParamRole::Key)
            .expect("key material");
        assert_eq!(
            key.producer_api.as_deref(),
            Some("jca:KeyGenerator.generateKey/0")
        );
    }

    #[test]
    fn instance_groups_partition_calls_and_links_cross_groups() {
        let s = scan(
            "import javax.crypto.*;\n\
             class G {\n\
               void go() throws Exception {\n\
                 KeyGenerator kg = KeyGenerator.getInstance(\"AES\");\n\
                 SecretKey k = kg.generateKey();\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 c.doFinal(new byte[4]);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1")[0];

        assert_eq!(sl.instance_groups.len(), 2, "cipher group and generator group");
        let group_apis: Vec<BTreeSet<&str>> = sl
            .instance_groups
            .iter()
            .map(|g| {
                g.iter()
                    .map(|site| sl.related(*site).unwrap().api.as_str())
                    .collect()
            })
            .collect();
        assert!(group_apis.iter().any(|g| g.contains("jca:Cipher.doFinal/1")
            && g.contains("jca:Cipher.getInstance/1")
            && g.contains("jca:Cipher.init/2")));
        assert!(group_apis.iter().any(|g| g.contains("jca:KeyGenerator.getInstance/1")
            && g.contains("jca:KeyGenerator.generateKey/0")));

        // The key's flow is a recorded cross-group link into init's param 1.
        let link = sl
            .producer_links
            .iter()
            .find(|l| sl.related(l.producer).unwrap().api == "jca:KeyGenerator.generateKey/0")
            .expect("generateKey link recorded");
        assert_eq!(sl.related(link.consumer).unwrap().api, "jca:Cipher.init/2");
        assert_eq!(link.param_index, 1);
    }

    #[test]
    fn receiver_alias_copy_shares_instance_calls() {
        let s = scan(
            "import javax.crypto.*;\n\
             class C {\n\
               void go(SecretKey k) throws Exception {\n\
                 Cipher a = Cipher.getInstance(\"AES\");\n\
                 Cipher b = a;\n\
                 b.init(Cipher.ENCRYPT_MODE, k);\n\
                 a.doFinal(new byte[4]);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1");
        assert_eq!(sl.len(), 1);
        let apis = related_apis(sl[0]);
        assert!(apis.contains("jca:Cipher.init/2"), "alias call related: {apis:?}");
        assert!(apis.contains("jca:Cipher.getInstance/1"));
    }

    #[test]
    fn chained_receiver_links_producer_by_relation_rule() {
        let s = scan(
            "import javax.crypto.*;\n\
             import java.security.*;\n\
             class E {\n\
               void go(PublicKey pk) throws Exception {\n\
                 KEM kem = KEM.getInstance(\"ML-KEM\");\n\
                 KEM.Encapsulated enc = kem.newEncapsulator(pk).encapsulate();\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:KEM.Encapsulator.encapsulate/0");
        assert_eq!(sl.len(), 1);
        let apis = related_apis(sl[0]);
        assert!(
            apis.contains("jca:KEM.newEncapsulator/1"),
            "chained receiver producer related: {apis:?}"
        );
        assert!(apis.contains("jca:KEM.getInstance/1"), "{apis:?}");
    }

    #[test]
    fn criteria_ordered_by_file_then_line() {
        let ir = ir_of_files(&[
            (
                "b/Second.java",
                "import java.security.*;\n\
                 class Second { void f(byte[] d) throws Exception {\n\
                   MessageDigest.getInstance(\"MD5\").digest(d);\n\
                 } }\n",
            ),
            (
                "a/First.java",
                "import java.security.*;\n\
                 class First { void f(byte[] d) throws Exception {\n\
                   MessageDigest md = MessageDigest.getInstance(\"SHA-256\");\n\
                   md.update(d);\n\
                   byte[] x = md.digest();\n\
                   byte[] y = md.digest();\n\
                 } }\n",
            ),
        ]);
        let kb = load_kb(&[]).expect("builtin kb");
        let crits = find_criteria(&ir, &kb);
        assert_eq!(crits.len(), 3);
        let order: Vec<(String, u32)> = crits
            .iter()
            .map(|c| (c.location.file_name.clone(), c.location.line))
            .collect();
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(order, sorted, "criteria sorted by (file, line)");
    }

    #[test]
    fn every_related_call_statement_is_in_the_slice() {
        let s = scan(
            "import javax.crypto.*;\n\
             import javax.crypto.spec.*;\n\
             class Inv {\n\
               void go() throws Exception {\n\
                 byte[] kb = {1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16};\n\
                 SecretKeySpec ks = new SecretKeySpec(kb, \"AES\");\n\
                 Cipher c = Cipher.getInstance(\"AES/ECB/PKCS5Padding\");\n\
                 c.init(Cipher.ENCRYPT_MODE, ks);\n\
                 c.doFinal(new byte[4]);\n\
               }\n\
             }\n",
        );
        for sl in slices(&s) {
            let stmts: BTreeSet<(MethodId, StmtId)> =
                sl.statements.iter().map(|st| (st.method, st.stmt)).collect();
            for rc in &sl.related_calls {
                let site = s.ir.site(rc.site);
                assert!(
                    stmts.contains(&(site.method, site.stmt)),
                    "related call {} at an unmarked statement",
                    rc.api
                );
            }
            // Hardcoded key bytes surfaced through the spec constructor.
            if sl.criterion.api == "jca:Cipher.doFinal/1" {
                let key = sl
                    .materials
                    .iter()
                    .find(|t| t.role == ParamRole::Key)
                    .expect("key material");
                assert_eq!(key.consumer_api, "jca:SecretKeySpec.<init>/2");
                assert!(matches!(
                    key.value.as_constant(),
                    Some(Value::Bytes(b)) if b.len() == 16
                ));
            }
        }
    }

    #[test]
    fn branch_conditions_of_included_statements_join_the_slice() {
        let s = scan(
            "import javax.crypto.*;\n\
             class Br {\n\
               void go(boolean strong) throws Exception {\n\
                 String alg = \"DES\";\n\
                 if (strong) { alg = \"AES\"; }\n\
                 Cipher c = Cipher.getInstance(alg);\n\
                 c.doFinal(new byte[4]);\n\
               }\n\
             }\n",
        );
        let all = slices(&s);
        let sl = criterion_slices(&all, "jca:Cipher.doFinal/1");
        assert_eq!(sl.len(), 1);
        // Line 5 holds both the branch condition and the guarded assignment.
        assert!(stmt_lines(sl[0]).contains(&5), "guarded redefinition included");
        let gi = sl[0]
            .related_calls
            .iter()
            .find(|r| r.api == "jca:Cipher.getInstance/1")
            .unwrap();
        let v = sl[0].value_of(gi.site, 0).unwrap();
        assert!(
            matches!(&v.lattice, Lattice::MultiValue(set) if set.len() == 2),
            "both branch values visible: {v:?}"
        );
    }
}
