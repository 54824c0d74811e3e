//! Reaching definitions and def-use chains over one method's control-flow
//! graph.
//!
//! Definitions are assignments, initialized declarations, catch-parameter
//! bindings and one pseudo-definition per method parameter. A bare
//! declaration without initializer defines nothing; the first assignment
//! does. Parameter and catch-parameter definitions are *external*: their
//! values come from outside the method.

use super::cfg::{Cfg, CfgNode, ENTRY};
use super::{CallSite, ExprId, IrExprKind, IrExprNode, IrStmt, IrStmtKind, StmtId, VarId, VarInfo};
use super::Storage;
use serde::Serialize;
use std::collections::VecDeque;

pub type DefId = usize;
pub type UseId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum DefSite {
    /// Assignment, initialized declaration or catch binding at a statement.
    Stmt(StmtId),
    /// Method-parameter pseudo-definition, live on entry.
    Param(VarId),
}

#[derive(Debug, Clone, Serialize)]
pub struct DefInfo {
    pub id: DefId,
    pub var: VarId,
    pub site: DefSite,
    /// Value originates outside the method (parameter or caught exception).
    pub external: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct UseInfo {
    pub id: UseId,
    pub stmt: StmtId,
    pub var: VarId,
    /// The variable-reference expression node.
    pub expr: ExprId,
}

#[derive(Debug, Default, Serialize)]
pub struct DefUse {
    pub defs: Vec<DefInfo>,
    pub uses: Vec<UseInfo>,
    /// Definitions reaching each use, sorted.
    pub use_defs: Vec<Vec<DefId>>,
    /// Uses each definition reaches, sorted.
    pub def_uses: Vec<Vec<UseId>>,
}

impl DefUse {
    pub fn defs_reaching(&self, use_id: UseId) -> &[DefId] {
        &self.use_defs[use_id]
    }

    pub fn uses_reached(&self, def_id: DefId) -> &[UseId] {
        &self.def_uses[def_id]
    }

    pub fn uses_in_stmt(&self, stmt: StmtId) -> impl Iterator<Item = &UseInfo> {
        self.uses.iter().filter(move |u| u.stmt == stmt)
    }

    /// A use is an external input when some reaching definition is external
    /// or no definition reaches it at all (never-assigned name).
    pub fn use_is_external(&self, use_id: UseId) -> bool {
        let defs = &self.use_defs[use_id];
        defs.is_empty() || defs.iter().any(|d| self.defs[*d].external)
    }

    /// The definition a statement makes, if any.
    pub fn def_at_stmt(&self, stmt: StmtId) -> Option<&DefInfo> {
        self.defs.iter().find(|d| d.site == DefSite::Stmt(stmt))
    }

    pub fn param_def(&self, var: VarId) -> Option<&DefInfo> {
        self.defs.iter().find(|d| d.site == DefSite::Param(var))
    }
}

/// Word-packed bit set sized once; methods are small so this stays cheap.
#[derive(Clone, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }
    fn get(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
    fn union_with(&mut self, other: &BitSet) -> bool {
        let mut changed = false;
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            let next = *a | *b;
            changed |= next != *a;
            *a = next;
        }
        changed
    }
    fn iter_ones(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (0..n).filter(move |i| self.get(*i))
    }
}

fn stmt_def(stmt: &IrStmt) -> Option<(VarId, bool)> {
    match &stmt.kind {
        IrStmtKind::Decl {
            var,
            init: Some(_),
            external,
        } => Some((*var, *external)),
        IrStmtKind::Decl {
            var,
            init: None,
            external: true,
        } => Some((*var, true)),
        IrStmtKind::Assign { var: Some(v), .. } => Some((*v, false)),
        _ => None,
    }
}

fn collect_var_uses(
    exprs: &[IrExprNode],
    sites: &[CallSite],
    expr: ExprId,
    out: &mut Vec<(VarId, ExprId)>,
) {
    match &exprs[expr].kind {
        IrExprKind::Var(v) => out.push((*v, expr)),
        IrExprKind::InstanceField {
            receiver: Some(r), ..
        } => collect_var_uses(exprs, sites, *r, out),
        IrExprKind::Call { site } | IrExprKind::New { site } => {
            let s = &sites[*site];
            if let Some(r) = s.receiver_expr {
                collect_var_uses(exprs, sites, r, out);
            }
            for a in &s.args {
                collect_var_uses(exprs, sites, *a, out);
            }
        }
        IrExprKind::ArrayLit { elems, .. } => {
            for e in elems {
                collect_var_uses(exprs, sites, *e, out);
            }
        }
        IrExprKind::ArrayNew { len, .. } => collect_var_uses(exprs, sites, *len, out),
        IrExprKind::Binary { lhs, rhs, .. } => {
            collect_var_uses(exprs, sites, *lhs, out);
            collect_var_uses(exprs, sites, *rhs, out);
        }
        _ => {}
    }
}

fn stmt_use_roots(stmt: &IrStmt) -> Vec<ExprId> {
    match &stmt.kind {
        IrStmtKind::Decl { init, .. } => init.iter().copied().collect(),
        IrStmtKind::Assign { value, .. } => vec![*value],
        IrStmtKind::Expr { expr } | IrStmtKind::Cond { expr, .. } => vec![*expr],
        IrStmtKind::Return { value } => value.iter().copied().collect(),
    }
}

/// Build def-use chains. `order` overrides the initial worklist order; the
/// fixpoint is order-independent, so any permutation yields the same chains.
pub fn build_def_use_parts(
    stmts: &[IrStmt],
    exprs: &[IrExprNode],
    sites: &[CallSite],
    params: &[VarId],
    vars: &[VarInfo],
    cfg: &Cfg,
    order: Option<&[CfgNode]>,
) -> DefUse {
    let mut defs: Vec<DefInfo> = Vec::new();
    for &p in params {
        defs.push(DefInfo {
            id: defs.len(),
            var: p,
            site: DefSite::Param(p),
            external: true,
        });
    }
    for stmt in stmts {
        if let Some((var, mut external)) = stmt_def(stmt) {
            external |= vars[var].storage == Storage::CatchParam;
            defs.push(DefInfo {
                id: defs.len(),
                var,
                site: DefSite::Stmt(stmt.id),
                external,
            });
        }
    }
    let ndefs = defs.len();

    // gen/kill per CFG node
    let mut gen = vec![BitSet::new(ndefs); cfg.node_count];
    let mut kill = vec![BitSet::new(ndefs); cfg.node_count];
    let mut defs_of_var: Vec<Vec<DefId>> = vec![Vec::new(); vars.len()];
    for d in &defs {
        defs_of_var[d.var].push(d.id);
    }
    for d in &defs {
        let node = match d.site {
            DefSite::Param(_) => ENTRY,
            DefSite::Stmt(s) => super::cfg::node_of(s),
        };
        gen[node].set(d.id);
        for &other in &defs_of_var[d.var] {
            if other != d.id {
                kill[node].set(other);
            }
        }
    }

    // forward may-analysis to fixpoint
    let mut out_sets = vec![BitSet::new(ndefs); cfg.node_count];
    let mut in_sets = vec![BitSet::new(ndefs); cfg.node_count];
    let mut work: VecDeque<CfgNode> = match order {
        Some(o) => o.iter().copied().collect(),
        None => (0..cfg.node_count).collect(),
    };
    let mut queued = vec![true; cfg.node_count];
    while let Some(node) = work.pop_front() {
        queued[node] = false;
        let mut input = BitSet::new(ndefs);
        for &(p, _) in &cfg.preds[node] {
            input.union_with(&out_sets[p]);
        }
        let mut output = input.clone();
        for i in kill[node].iter_ones(ndefs) {
            output.clear(i);
        }
        output.union_with(&gen[node]);
        in_sets[node] = input;
        if output != out_sets[node] {
            out_sets[node] = output;
            for &(s, _) in &cfg.succs[node] {
                if !queued[s] {
                    queued[s] = true;
                    work.push_back(s);
                }
            }
        }
    }

    // chains
    let mut uses: Vec<UseInfo> = Vec::new();
    let mut use_defs: Vec<Vec<DefId>> = Vec::new();
    let mut def_uses: Vec<Vec<UseId>> = vec![Vec::new(); ndefs];
    for stmt in stmts {
        let mut pairs = Vec::new();
        for root in stmt_use_roots(stmt) {
            collect_var_uses(exprs, sites, root, &mut pairs);
        }
        let reach = &in_sets[super::cfg::node_of(stmt.id)];
        for (var, expr) in pairs {
            let use_id = uses.len();
            uses.push(UseInfo {
                id: use_id,
                stmt: stmt.id,
                var,
                expr,
            });
            let mut reaching: Vec<DefId> = defs_of_var[var]
                .iter()
                .copied()
                .filter(|d| reach.get(*d))
                .collect();
            reaching.sort_unstable();
            for &d in &reaching {
                def_uses[d].push(use_id);
            }
            use_defs.push(reaching);
        }
    }
    for list in &mut def_uses {
        list.sort_unstable();
        list.dedup();
    }

    DefUse {
        defs,
        uses,
        use_defs,
        def_uses,
    }
}
