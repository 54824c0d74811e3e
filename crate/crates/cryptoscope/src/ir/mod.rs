//! Stage 2: lowered intermediate representation per subject project.
//!
//! Lowering turns each method body into flat statement/expression arenas with
//! resolved names, builds a control-flow graph and def-use chains per method,
//! and links call sites into a project call graph by declared receiver type.
//! Everything is index-based and owned, so later stages never borrow syntax
//! trees.

pub mod callgraph;
pub mod cfg;
pub mod defuse;
pub mod symbols;

pub use callgraph::CallGraph;
pub use cfg::{build_cfg, Cfg, CfgNode, EdgeLabel, ShapeNode, ENTRY, EXIT};
pub use defuse::{DefInfo, DefSite, DefUse, UseInfo};
pub use symbols::{file_symbols, resolve_type_name, FileSymbols, ResolvedType};

use crate::frontend::{ast, SubjectProject};
use crate::location::Location;
use crate::value::Value;
use serde::Serialize;
use std::collections::BTreeMap;

pub type MethodId = usize;
pub type StmtId = usize;
pub type ExprId = usize;
pub type VarId = usize;
pub type CallSiteId = usize;
pub type ClassId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Storage {
    Local,
    Param,
    /// Catch-clause binding: a definition whose value is external.
    CatchParam,
}

#[derive(Debug, Clone, Serialize)]
pub struct VarInfo {
    pub name: String,
    pub ty: Option<ResolvedType>,
    pub storage: Storage,
    pub decl_loc: Location,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CondOrigin {
    If,
    While,
    For,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum IrStmtKind {
    Decl {
        var: VarId,
        init: Option<ExprId>,
        /// True for catch parameters: a definition with an external value.
        external: bool,
    },
    Assign {
        /// `None` when the target is a field or unresolved name; the value is
        /// still evaluated for its call sites.
        var: Option<VarId>,
        value: ExprId,
    },
    Expr {
        expr: ExprId,
    },
    Cond {
        expr: ExprId,
        origin: CondOrigin,
    },
    Return {
        value: Option<ExprId>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct IrStmt {
    pub id: StmtId,
    pub loc: Location,
    pub kind: IrStmtKind,
    /// Enclosing branch conditions, innermost last. The subject language is
    /// fully structured, so this is the complete control-dependence set.
    pub control_parents: Vec<StmtId>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum IrExprKind {
    Str(String),
    Int(i64),
    Bool(bool),
    Null,
    Var(VarId),
    /// `Owner.FIELD` where the owner is a type. Candidates cover wildcard
    /// imports; constant lookup tries each.
    StaticField {
        owner_candidates: Vec<String>,
        field: String,
    },
    /// Instance field read; an external input to the method.
    InstanceField {
        receiver: Option<ExprId>,
        field: String,
    },
    Call {
        site: CallSiteId,
    },
    New {
        site: CallSiteId,
    },
    ArrayLit {
        elem_ty: String,
        elems: Vec<ExprId>,
    },
    ArrayNew {
        elem_ty: String,
        len: ExprId,
    },
    Binary {
        op: ast::BinOp,
        lhs: ExprId,
        rhs: ExprId,
    },
    /// Anything the analysis cannot interpret; evaluates to unknown.
    Opaque,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrExprNode {
    pub kind: IrExprKind,
    pub loc: Location,
}

/// Syntactic kind of a call argument, used to disambiguate knowledge-base
/// overloads that share owner, name and arity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum ArgKind {
    Str,
    Int,
    Bool,
    Null,
    Bytes,
    Chars,
    Object(Option<String>),
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CallKind {
    Method,
    Ctor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum CallTarget {
    /// Resolved to a method declared in the scanned project.
    Project(MethodId),
    /// `new` on a project class (the subset has no declared constructors).
    ProjectCtor(String),
    /// Everything else; `owner` is the best qualified receiver type name
    /// known, which is what knowledge-base matching runs against.
    External { owner: Option<String> },
}

#[derive(Debug, Clone, Serialize)]
pub struct CallSite {
    pub id: CallSiteId,
    pub method: MethodId,
    pub stmt: StmtId,
    pub kind: CallKind,
    pub name: String,
    /// Static receiver (type) for static calls and constructors.
    pub receiver_type: Option<ResolvedType>,
    /// Lowered receiver expression for instance calls.
    pub receiver_expr: Option<ExprId>,
    /// Set when the receiver is a plain variable; drives same-instance
    /// call grouping.
    pub receiver_var: Option<VarId>,
    pub implicit: bool,
    pub args: Vec<ExprId>,
    pub arg_kinds: Vec<ArgKind>,
    /// Method name through closing parenthesis; the span evidence points at.
    pub call_loc: Location,
    pub loc: Location,
    pub target: CallTarget,
}

impl CallSite {
    /// Qualified name for unresolved edges, e.g.
    /// `javax.crypto.Cipher.getInstance`.
    pub fn external_name(&self) -> Option<String> {
        match &self.target {
            CallTarget::External { owner: Some(o) } => Some(format!("{o}.{}", self.name)),
            CallTarget::External { owner: None } => None,
            CallTarget::ProjectCtor(c) => Some(format!("{c}.<init>")),
            CallTarget::Project(_) => None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldInfo {
    pub name: String,
    pub ty: Option<ResolvedType>,
    pub is_static_final: bool,
    /// Literal initializer value for `static final` fields; these
    /// participate in constant propagation.
    pub const_init: Option<Value>,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassInfo {
    pub name: String,
    pub file: String,
    pub fields: Vec<FieldInfo>,
    pub loc: Location,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Resolution {
    Local(VarId),
    Param(VarId),
    InstanceField,
    StaticFinalField,
    TypeName(String),
    Unresolved,
}

/// One identifier occurrence and what it resolved to; the queryable record
/// of symbol resolution.
#[derive(Debug, Clone, Serialize)]
pub struct Occurrence {
    pub method: MethodId,
    pub name: String,
    pub loc: Location,
    pub resolution: Resolution,
}

#[derive(Debug, Serialize)]
pub struct MethodIr {
    pub id: MethodId,
    pub class_name: String,
    pub name: String,
    pub arity: usize,
    /// Display key `Class.name/arity`.
    pub key: String,
    pub file: String,
    pub loc: Location,
    pub return_type: Option<ResolvedType>,
    pub params: Vec<VarId>,
    pub vars: Vec<VarInfo>,
    pub stmts: Vec<IrStmt>,
    pub exprs: Vec<IrExprNode>,
    #[serde(skip)]
    pub shape: Vec<ShapeNode>,
    pub cfg: Cfg,
    #[serde(skip)]
    pub def_use: DefUse,
    pub return_stmts: Vec<StmtId>,
    /// True when the parser replaced this body after a syntax error.
    pub body_recovered: bool,
}

#[derive(Debug, Serialize)]
pub struct ProgramIr {
    pub methods: Vec<MethodIr>,
    pub classes: Vec<ClassInfo>,
    pub call_sites: Vec<CallSite>,
    #[serde(skip)]
    pub call_graph: CallGraph,
    /// `Class.FIELD` → literal for project static-final constants.
    pub static_consts: BTreeMap<String, Value>,
    #[serde(skip)]
    pub method_index: BTreeMap<(String, String, usize), MethodId>,
    #[serde(skip)]
    pub occurrences: Vec<Occurrence>,
}

impl ProgramIr {
    pub fn method(&self, id: MethodId) -> &MethodIr {
        &self.methods[id]
    }

    pub fn site(&self, id: CallSiteId) -> &CallSite {
        &self.call_sites[id]
    }

    /// All variables read by an expression tree, receivers included.
    pub fn expr_vars(&self, method: MethodId, expr: ExprId, out: &mut Vec<VarId>) {
        let m = &self.methods[method];
        match &m.exprs[expr].kind {
            IrExprKind::Var(v) => out.push(*v),
            IrExprKind::InstanceField { receiver: Some(r), .. } => self.expr_vars(method, *r, out),
            IrExprKind::Call { site } | IrExprKind::New { site } => {
                let s = &self.call_sites[*site];
                if let Some(r) = s.receiver_expr {
                    self.expr_vars(method, r, out);
                }
                for a in &s.args {
                    self.expr_vars(method, *a, out);
                }
            }
            IrExprKind::ArrayLit { elems, .. } => {
                for e in elems {
                    self.expr_vars(method, *e, out);
                }
            }
            IrExprKind::ArrayNew { len, .. } => self.expr_vars(method, *len, out),
            IrExprKind::Binary { lhs, rhs, .. } => {
                self.expr_vars(method, *lhs, out);
                self.expr_vars(method, *rhs, out);
            }
            _ => {}
        }
    }

    /// Root expressions evaluated by a statement.
    pub fn stmt_roots(&self, method: MethodId, stmt: StmtId) -> Vec<ExprId> {
        match &self.methods[method].stmts[stmt].kind {
            IrStmtKind::Decl { init, .. } => init.iter().copied().collect(),
            IrStmtKind::Assign { value, .. } => vec![*value],
            IrStmtKind::Expr { expr } | IrStmtKind::Cond { expr, .. } => vec![*expr],
            IrStmtKind::Return { value } => value.iter().copied().collect(),
        }
    }

    /// All call sites syntactically inside a statement, in lowering order.
    pub fn stmt_sites(&self, method: MethodId, stmt: StmtId) -> Vec<CallSiteId> {
        let mut out = Vec::new();
        for root in self.stmt_roots(method, stmt) {
            self.collect_sites(method, root, &mut out);
        }
        out
    }

    fn collect_sites(&self, method: MethodId, expr: ExprId, out: &mut Vec<CallSiteId>) {
        let m = &self.methods[method];
        match &m.exprs[expr].kind {
            IrExprKind::Call { site } | IrExprKind::New { site } => {
                let s = &self.call_sites[*site];
                if let Some(r) = s.receiver_expr {
                    self.collect_sites(method, r, out);
                }
                for a in &s.args {
                    self.collect_sites(method, *a, out);
                }
                out.push(*site);
            }
            IrExprKind::InstanceField { receiver: Some(r), .. } => {
                self.collect_sites(method, *r, out)
            }
            IrExprKind::ArrayLit { elems, .. } => {
                for e in elems {
                    self.collect_sites(method, *e, out);
                }
            }
            IrExprKind::ArrayNew { len, .. } => self.collect_sites(method, *len, out),
            IrExprKind::Binary { lhs, rhs, .. } => {
                self.collect_sites(method, *lhs, out);
                self.collect_sites(method, *rhs, out);
            }
            _ => {}
        }
    }
}

/// Build the full IR for a parsed project. Deterministic: methods are
/// numbered in (file, class, declaration) order and all maps are ordered.
pub fn build_program_ir(project: &SubjectProject) -> ProgramIr {
    // Pass A1: register every class name so cross-file type resolution sees
    // the whole project before any member is examined.
    let mut classes: Vec<ClassInfo> = Vec::new();
    let mut class_index: BTreeMap<String, ClassId> = BTreeMap::new();
    for file in &project.files {
        for class in &file.unit.classes {
            if class_index.contains_key(&class.name) {
                continue; // first declaration wins; duplicates are unusual
            }
            class_index.insert(class.name.clone(), classes.len());
            classes.push(ClassInfo {
                name: class.name.clone(),
                file: file.rel_path.clone(),
                fields: Vec::new(),
                loc: class.loc.clone(),
            });
        }
    }

    // Pass A2: member signatures and static constants.
    let mut static_consts = BTreeMap::new();
    let mut method_index = BTreeMap::new();
    let mut sigs: Vec<(String, &ast::MethodDecl, FileSymbols, String)> = Vec::new();
    for file in &project.files {
        let syms = file_symbols(&file.unit);
        for class in &file.unit.classes {
            let cid = class_index[&class.name];
            if classes[cid].file != file.rel_path || classes[cid].loc != class.loc {
                continue; // shadowed duplicate declaration
            }
            for field in &class.fields {
                let ty = resolve_type_name(&field.ty.name, &syms, &class_index);
                let is_static_final = field.modifiers.is_static && field.modifiers.is_final;
                let const_init = if is_static_final {
                    field.init.as_ref().and_then(literal_value)
                } else {
                    None
                };
                if let Some(v) = &const_init {
                    static_consts.insert(format!("{}.{}", class.name, field.name), v.clone());
                }
                classes[cid].fields.push(FieldInfo {
                    name: field.name.clone(),
                    ty: Some(ty),
                    is_static_final,
                    const_init,
                    loc: field.loc.clone(),
                });
            }
            for method in &class.methods {
                let key = (class.name.clone(), method.name.clone(), method.params.len());
                if method_index.contains_key(&key) {
                    continue; // same-arity redeclaration: first wins
                }
                method_index.insert(key, sigs.len());
                sigs.push((
                    class.name.clone(),
                    method,
                    syms.clone(),
                    file.rel_path.clone(),
                ));
            }
        }
    }

    // Pass B: lower each method.
    let mut call_sites: Vec<CallSite> = Vec::new();
    let mut occurrences: Vec<Occurrence> = Vec::new();
    let mut methods: Vec<MethodIr> = Vec::new();
    for (id, (class_name, decl, syms, file)) in sigs.iter().enumerate() {
        let class_fields: BTreeMap<String, FieldInfo> = classes[class_index[class_name]]
            .fields
            .iter()
            .map(|f| (f.name.clone(), f.clone()))
            .collect();
        let lowerer = Lowerer {
            method_id: id,
            class_name,
            syms,
            class_index: &class_index,
            class_fields: &class_fields,
            method_index: &method_index,
            sig_return_types: &sigs,
            call_sites: &mut call_sites,
            occurrences: &mut occurrences,
            vars: Vec::new(),
            stmts: Vec::new(),
            exprs: Vec::new(),
            scopes: Vec::new(),
            control: Vec::new(),
            return_stmts: Vec::new(),
        };
        let method = lowerer.lower(decl, file);
        methods.push(method);
    }

    let call_graph = callgraph::build_call_graph(&methods, &call_sites);
    ProgramIr {
        methods,
        classes,
        call_sites,
        call_graph,
        static_consts,
        method_index,
        occurrences,
    }
}

fn literal_value(expr: &ast::Expr) -> Option<Value> {
    match expr {
        ast::Expr::StringLit { value, .. } => Some(Value::Str(value.clone())),
        ast::Expr::IntLit { value, .. } => Some(Value::Int(*value)),
        ast::Expr::BoolLit { value, .. } => Some(Value::Bool(*value)),
        ast::Expr::NullLit { .. } => Some(Value::Null),
        ast::Expr::ArrayLit { elem_ty, elems, .. } if elem_ty.name == "byte" => {
            let mut bytes = Vec::with_capacity(elems.len());
            for e in elems {
                match literal_value(e) {
                    Some(Value::Int(i)) => bytes.push(i as u8),
                    _ => return None,
                }
            }
            Some(Value::Bytes(bytes))
        }
        _ => None,
    }
}

struct Lowerer<'a> {
    method_id: MethodId,
    class_name: &'a str,
    syms: &'a FileSymbols,
    class_index: &'a BTreeMap<String, ClassId>,
    class_fields: &'a BTreeMap<String, FieldInfo>,
    method_index: &'a BTreeMap<(String, String, usize), MethodId>,
    sig_return_types: &'a [(String, &'a ast::MethodDecl, FileSymbols, String)],
    call_sites: &'a mut Vec<CallSite>,
    occurrences: &'a mut Vec<Occurrence>,
    vars: Vec<VarInfo>,
    stmts: Vec<IrStmt>,
    exprs: Vec<IrExprNode>,
    scopes: Vec<Vec<(String, VarId)>>,
    control: Vec<StmtId>,
    return_stmts: Vec<StmtId>,
}

impl<'a> Lowerer<'a> {
    fn lower(mut self, decl: &ast::MethodDecl, file: &str) -> MethodIr {
        self.scopes.push(Vec::new());
        let mut params = Vec::new();
        for param in &decl.params {
            let ty = resolve_type_name(&param.ty.name, self.syms, self.class_index);
            let v = self.add_var(param.name.clone(), Some(ty), Storage::Param, param.loc.clone());
            params.push(v);
        }
        let shape = self.lower_block(&decl.body);
        self.scopes.pop();

        let cfg = build_cfg(self.stmts.len(), &shape);
        let def_use = defuse::build_def_use_parts(&self.stmts, &self.exprs, self.call_sites, &params, &self.vars, &cfg, None);
        let return_type = decl
            .return_type
            .as_ref()
            .map(|t| resolve_type_name(&t.name, self.syms, self.class_index));
        MethodIr {
            id: self.method_id,
            class_name: self.class_name.to_string(),
            name: decl.name.clone(),
            arity: decl.params.len(),
            key: format!("{}.{}/{}", self.class_name, decl.name, decl.params.len()),
            file: file.to_string(),
            loc: decl.loc.clone(),
            return_type,
            params,
            vars: self.vars,
            stmts: self.stmts,
            exprs: self.exprs,
            shape,
            cfg,
            def_use,
            return_stmts: self.return_stmts,
            body_recovered: decl.body_recovered,
        }
    }

    fn add_var(
        &mut self,
        name: String,
        ty: Option<ResolvedType>,
        storage: Storage,
        decl_loc: Location,
    ) -> VarId {
        let id = self.vars.len();
        self.vars.push(VarInfo {
            name: name.clone(),
            ty,
            storage,
            decl_loc,
        });
        self.scopes
            .last_mut()
            .expect("a scope is always open")
            .push((name, id));
        id
    }

    fn lookup_var(&self, name: &str) -> Option<VarId> {
        for scope in self.scopes.iter().rev() {
            for (n, v) in scope.iter().rev() {
                if n == name {
                    return Some(*v);
                }
            }
        }
        None
    }

    fn occurrence(&mut self, name: &str, loc: &Location, resolution: Resolution) {
        self.occurrences.push(Occurrence {
            method: self.method_id,
            name: name.to_string(),
            loc: loc.clone(),
            resolution,
        });
    }

    fn push_expr(&mut self, kind: IrExprKind, loc: Location) -> ExprId {
        let id = self.exprs.len();
        self.exprs.push(IrExprNode { kind, loc });
        id
    }

    fn push_stmt(&mut self, expected: StmtId, loc: Location, kind: IrStmtKind) -> StmtId {
        debug_assert_eq!(expected, self.stmts.len(), "statement id reservation");
        let id = self.stmts.len();
        self.stmts.push(IrStmt {
            id,
            loc,
            kind,
            control_parents: self.control.clone(),
        });
        id
    }

    fn begin_stmt(&self) -> StmtId {
        self.stmts.len()
    }

    fn lower_block(&mut self, block: &ast::Block) -> Vec<ShapeNode> {
        self.scopes.push(Vec::new());
        let mut shape = Vec::new();
        for stmt in &block.stmts {
            self.lower_stmt(stmt, &mut shape);
        }
        self.scopes.pop();
        shape
    }

    fn lower_stmt(&mut self, stmt: &ast::Stmt, shape: &mut Vec<ShapeNode>) {
        match stmt {
            ast::Stmt::LocalVar {
                ty,
                name,
                name_loc,
                init,
                loc,
            } => {
                let sid = self.begin_stmt();
                let init_id = init.as_ref().map(|e| self.lower_expr(e, sid));
                let rty = resolve_type_name(&ty.name, self.syms, self.class_index);
                let v = self.add_var(name.clone(), Some(rty), Storage::Local, name_loc.clone());
                self.push_stmt(
                    sid,
                    loc.clone(),
                    IrStmtKind::Decl {
                        var: v,
                        init: init_id,
                        external: false,
                    },
                );
                shape.push(ShapeNode::Stmt(sid));
            }
            ast::Stmt::Assign {
                target,
                target_loc,
                value,
                loc,
            } => {
                let sid = self.begin_stmt();
                let value_id = self.lower_expr(value, sid);
                let var = match self.lookup_var(target) {
                    Some(v) => {
                        let res = if self.vars[v].storage == Storage::Param {
                            Resolution::Param(v)
                        } else {
                            Resolution::Local(v)
                        };
                        self.occurrence(target, target_loc, res);
                        Some(v)
                    }
                    None => {
                        let res = if self.class_fields.contains_key(target) {
                            Resolution::InstanceField
                        } else {
                            Resolution::Unresolved
                        };
                        self.occurrence(target, target_loc, res);
                        None
                    }
                };
                self.push_stmt(sid, loc.clone(), IrStmtKind::Assign { var, value: value_id });
                shape.push(ShapeNode::Stmt(sid));
            }
            ast::Stmt::Expr { expr, loc } => {
                let sid = self.begin_stmt();
                let e = self.lower_expr(expr, sid);
                self.push_stmt(sid, loc.clone(), IrStmtKind::Expr { expr: e });
                shape.push(ShapeNode::Stmt(sid));
            }
            ast::Stmt::Return { value, loc } => {
                let sid = self.begin_stmt();
                let v = value.as_ref().map(|e| self.lower_expr(e, sid));
                self.push_stmt(sid, loc.clone(), IrStmtKind::Return { value: v });
                self.return_stmts.push(sid);
                shape.push(ShapeNode::Return(sid));
            }
            ast::Stmt::If {
                cond,
                then_block,
                else_block,
                ..
            } => {
                let sid = self.begin_stmt();
                let c = self.lower_expr(cond, sid);
                self.push_stmt(
                    sid,
                    cond.loc().clone(),
                    IrStmtKind::Cond {
                        expr: c,
                        origin: CondOrigin::If,
                    },
                );
                self.control.push(sid);
                let then_branch = self.lower_block(then_block);
                let else_branch = match else_block {
                    Some(b) => self.lower_block(b),
                    None => Vec::new(),
                };
                self.control.pop();
                shape.push(ShapeNode::If {
                    cond: sid,
                    then_branch,
                    else_branch,
                });
            }
            ast::Stmt::While { cond, body, .. } => {
                let sid = self.begin_stmt();
                let c = self.lower_expr(cond, sid);
                self.push_stmt(
                    sid,
                    cond.loc().clone(),
                    IrStmtKind::Cond {
                        expr: c,
                        origin: CondOrigin::While,
                    },
                );
                self.control.push(sid);
                let body_shape = self.lower_block(body);
                self.control.pop();
                shape.push(ShapeNode::While {
                    cond: sid,
                    body: body_shape,
                });
            }
            ast::Stmt::For {
                init,
                cond,
                update,
                body,
                loc,
            } => {
                // loop-local declarations need their own scope
                self.scopes.push(Vec::new());
                let init_id = init.as_ref().map(|s| {
                    let mut tmp = Vec::new();
                    self.lower_stmt(s, &mut tmp);
                    match tmp.as_slice() {
                        [ShapeNode::Stmt(id)] => *id,
                        _ => unreachable!("for-init lowers to one atomic statement"),
                    }
                });
                let cond_id = self.begin_stmt();
                let c = match cond {
                    Some(e) => self.lower_expr(e, cond_id),
                    // `for (;;)` runs unconditionally; a literal true keeps
                    // the exit edge in place
                    None => self.push_expr(IrExprKind::Bool(true), loc.clone()),
                };
                let cond_loc = cond.as_ref().map(|e| e.loc().clone()).unwrap_or_else(|| loc.clone());
                self.push_stmt(
                    cond_id,
                    cond_loc,
                    IrStmtKind::Cond {
                        expr: c,
                        origin: CondOrigin::For,
                    },
                );
                self.control.push(cond_id);
                let body_shape = self.lower_block(body);
                let update_id = update.as_ref().map(|s| {
                    let mut tmp = Vec::new();
                    self.lower_stmt(s, &mut tmp);
                    match tmp.as_slice() {
                        [ShapeNode::Stmt(id)] => *id,
                        _ => unreachable!("for-update lowers to one atomic statement"),
                    }
                });
                self.control.pop();
                self.scopes.pop();
                shape.push(ShapeNode::For {
                    init: init_id,
                    cond: cond_id,
                    update: update_id,
                    body: body_shape,
                });
            }
            ast::Stmt::TryCatch {
                body,
                catches,
                finally,
                ..
            } => {
                let body_shape = self.lower_block(body);
                let mut catch_shapes = Vec::new();
                for catch in catches {
                    self.scopes.push(Vec::new());
                    let sid = self.begin_stmt();
                    let ty = resolve_type_name(&catch.param.ty.name, self.syms, self.class_index);
                    let v = self.add_var(
                        catch.param.name.clone(),
                        Some(ty),
                        Storage::CatchParam,
                        catch.param.loc.clone(),
                    );
                    self.push_stmt(
                        sid,
                        catch.param.loc.clone(),
                        IrStmtKind::Decl {
                            var: v,
                            init: None,
                            external: true,
                        },
                    );
                    let cbody = self.lower_block(&catch.body);
                    self.scopes.pop();
                    catch_shapes.push((sid, cbody));
                }
                let finally_shape = match finally {
                    Some(b) => self.lower_block(b),
                    None => Vec::new(),
                };
                shape.push(ShapeNode::Try {
                    body: body_shape,
                    catches: catch_shapes,
                    finally: finally_shape,
                });
            }
            ast::Stmt::Block(b) => {
                let inner = self.lower_block(b);
                shape.extend(inner);
            }
        }
    }

    /// Try to read an expression as a type reference (static-call receiver or
    /// static-field owner). Only names that actually resolve count; unknown
    /// uppercase names stay ordinary (unresolved) expressions.
    fn type_receiver(&self, expr: &ast::Expr) -> Option<ResolvedType> {
        let dotted = expr.dotted_name()?;
        let head = dotted.split('.').next().unwrap_or(&dotted);
        if self.lookup_var(head).is_some() || self.class_fields.contains_key(head) {
            return None;
        }
        let resolved = resolve_type_name(&dotted, self.syms, self.class_index);
        if resolved.qualified.is_some() || !resolved.candidates.is_empty() || resolved.project_class
        {
            Some(resolved)
        } else {
            None
        }
    }

    fn lower_expr(&mut self, expr: &ast::Expr, stmt: StmtId) -> ExprId {
        match expr {
            ast::Expr::StringLit { value, loc } => {
                self.push_expr(IrExprKind::Str(value.clone()), loc.clone())
            }
            ast::Expr::IntLit { value, loc } => {
                self.push_expr(IrExprKind::Int(*value), loc.clone())
            }
            ast::Expr::BoolLit { value, loc } => {
                self.push_expr(IrExprKind::Bool(*value), loc.clone())
            }
            ast::Expr::NullLit { loc } => self.push_expr(IrExprKind::Null, loc.clone()),
            ast::Expr::Ident { name, loc } => {
                if let Some(v) = self.lookup_var(name) {
                    let res = if self.vars[v].storage == Storage::Param {
                        Resolution::Param(v)
                    } else {
                        Resolution::Local(v)
                    };
                    self.occurrence(name, loc, res);
                    return self.push_expr(IrExprKind::Var(v), loc.clone());
                }
                if let Some(field) = self.class_fields.get(name) {
                    if field.is_static_final && field.const_init.is_some() {
                        self.occurrence(name, loc, Resolution::StaticFinalField);
                        return self.push_expr(
                            IrExprKind::StaticField {
                                owner_candidates: vec![self.class_name.to_string()],
                                field: name.clone(),
                            },
                            loc.clone(),
                        );
                    }
                    self.occurrence(name, loc, Resolution::InstanceField);
                    return self.push_expr(
                        IrExprKind::InstanceField {
                            receiver: None,
                            field: name.clone(),
                        },
                        loc.clone(),
                    );
                }
                self.occurrence(name, loc, Resolution::Unresolved);
                self.push_expr(IrExprKind::Opaque, loc.clone())
            }
            ast::Expr::FieldAccess {
                receiver,
                name,
                name_loc,
                loc,
            } => {
                if let Some(rt) = self.type_receiver(receiver) {
                    let owner_candidates = if rt.candidates.is_empty() {
                        vec![rt.written.clone()]
                    } else {
                        rt.candidates.clone()
                    };
                    self.occurrence(
                        &rt.written,
                        receiver.loc(),
                        Resolution::TypeName(rt.qualified.clone().unwrap_or_else(|| rt.written.clone())),
                    );
                    return self.push_expr(
                        IrExprKind::StaticField {
                            owner_candidates,
                            field: name.clone(),
                        },
                        loc.clone(),
                    );
                }
                let recv = self.lower_expr(receiver, stmt);
                self.occurrence(name, name_loc, Resolution::InstanceField);
                self.push_expr(
                    IrExprKind::InstanceField {
                        receiver: Some(recv),
                        field: name.clone(),
                    },
                    loc.clone(),
                )
            }
            ast::Expr::MethodCall {
                receiver,
                name,
                args,
                call_loc,
                loc,
                ..
            } => {
                let mut receiver_type = None;
                let mut receiver_expr = None;
                let mut receiver_var = None;
                let mut implicit = false;
                match receiver {
                    None => implicit = true,
                    Some(r) => {
                        if let Some(rt) = self.type_receiver(r) {
                            self.occurrence(
                                &rt.written,
                                r.loc(),
                                Resolution::TypeName(
                                    rt.qualified.clone().unwrap_or_else(|| rt.written.clone()),
                                ),
                            );
                            receiver_type = Some(rt);
                        } else {
                            let e = self.lower_expr(r, stmt);
                            if let IrExprKind::Var(v) = self.exprs[e].kind {
                                receiver_var = Some(v);
                            }
                            receiver_expr = Some(e);
                        }
                    }
                }
                let arg_ids: Vec<ExprId> = args.iter().map(|a| self.lower_expr(a, stmt)).collect();
                let arg_kinds = arg_ids.iter().map(|a| self.arg_kind(*a)).collect();
                let target = self.resolve_target(
                    &receiver_type,
                    receiver_var,
                    receiver_expr,
                    implicit,
                    name,
                    args.len(),
                );
                let site_id = self.call_sites.len();
                self.call_sites.push(CallSite {
                    id: site_id,
                    method: self.method_id,
                    stmt,
                    kind: CallKind::Method,
                    name: name.clone(),
                    receiver_type,
                    receiver_expr,
                    receiver_var,
                    implicit,
                    args: arg_ids,
                    arg_kinds,
                    call_loc: call_loc.clone(),
                    loc: loc.clone(),
                    target,
                });
                self.push_expr(IrExprKind::Call { site: site_id }, loc.clone())
            }
            ast::Expr::ConstructorCall { ty, args, loc } => {
                let rt = resolve_type_name(&ty.name, self.syms, self.class_index);
                let arg_ids: Vec<ExprId> = args.iter().map(|a| self.lower_expr(a, stmt)).collect();
                let arg_kinds = arg_ids.iter().map(|a| self.arg_kind(*a)).collect();
                let target = if rt.project_class {
                    CallTarget::ProjectCtor(ty.name.clone())
                } else {
                    CallTarget::External {
                        owner: rt.qualified.clone(),
                    }
                };
                let site_id = self.call_sites.len();
                self.call_sites.push(CallSite {
                    id: site_id,
                    method: self.method_id,
                    stmt,
                    kind: CallKind::Ctor,
                    name: "<init>".to_string(),
                    receiver_type: Some(rt),
                    receiver_expr: None,
                    receiver_var: None,
                    implicit: false,
                    args: arg_ids,
                    arg_kinds,
                    call_loc: loc.clone(),
                    loc: loc.clone(),
                    target,
                });
                self.push_expr(IrExprKind::New { site: site_id }, loc.clone())
            }
            ast::Expr::ArrayLit { elem_ty, elems, loc } => {
                let ids = elems.iter().map(|e| self.lower_expr(e, stmt)).collect();
                self.push_expr(
                    IrExprKind::ArrayLit {
                        elem_ty: elem_ty.name.clone(),
                        elems: ids,
                    },
                    loc.clone(),
                )
            }
            ast::Expr::ArrayNew { elem_ty, len, loc } => {
                let l = self.lower_expr(len, stmt);
                self.push_expr(
                    IrExprKind::ArrayNew {
                        elem_ty: elem_ty.name.clone(),
                        len: l,
                    },
                    loc.clone(),
                )
            }
            ast::Expr::Binary { op, lhs, rhs, loc } => {
                let l = self.lower_expr(lhs, stmt);
                let r = self.lower_expr(rhs, stmt);
                self.push_expr(
                    IrExprKind::Binary {
                        op: *op,
                        lhs: l,
                        rhs: r,
                    },
                    loc.clone(),
                )
            }
        }
    }

    fn resolve_target(
        &self,
        receiver_type: &Option<ResolvedType>,
        receiver_var: Option<VarId>,
        receiver_expr: Option<ExprId>,
        implicit: bool,
        name: &str,
        arity: usize,
    ) -> CallTarget {
        if implicit {
            let key = (self.class_name.to_string(), name.to_string(), arity);
            return match self.method_index.get(&key) {
                Some(mid) => CallTarget::Project(*mid),
                None => CallTarget::External {
                    owner: Some(self.class_name.to_string()),
                },
            };
        }
        if let Some(rt) = receiver_type {
            if rt.project_class {
                let key = (rt.written.clone(), name.to_string(), arity);
                return match self.method_index.get(&key) {
                    Some(mid) => CallTarget::Project(*mid),
                    None => CallTarget::External {
                        owner: Some(rt.written.clone()),
                    },
                };
            }
            return CallTarget::External {
                owner: rt.qualified.clone().or_else(|| rt.candidates.first().cloned()),
            };
        }
        if let Some(v) = receiver_var {
            if let Some(ty) = &self.vars[v].ty {
                if ty.project_class {
                    let key = (ty.written.clone(), name.to_string(), arity);
                    return match self.method_index.get(&key) {
                        Some(mid) => CallTarget::Project(*mid),
                        None => CallTarget::External {
                            owner: Some(ty.written.clone()),
                        },
                    };
                }
                return CallTarget::External {
                    owner: ty.qualified.clone(),
                };
            }
        }
        let _ = receiver_expr;
        CallTarget::External { owner: None }
    }

    /// Syntactic value kind of an argument expression.
    fn arg_kind(&self, expr: ExprId) -> ArgKind {
        match &self.exprs[expr].kind {
            IrExprKind::Str(_) => ArgKind::Str,
            IrExprKind::Int(_) => ArgKind::Int,
            IrExprKind::Bool(_) => ArgKind::Bool,
            IrExprKind::Null => ArgKind::Null,
            IrExprKind::ArrayLit { elem_ty, .. } | IrExprKind::ArrayNew { elem_ty, .. } => {
                match elem_ty.as_str() {
                    "byte" => ArgKind::Bytes,
                    "char" => ArgKind::Chars,
                    _ => ArgKind::Object(None),
                }
            }
            IrExprKind::Var(v) => match &self.vars[*v].ty {
                Some(ty) => type_arg_kind(ty),
                None => ArgKind::Unknown,
            },
            IrExprKind::Call { site } => {
                let s = &self.call_sites[*site];
                match &s.target {
                    CallTarget::Project(mid) => {
                        let (_, decl, syms, _) = &self.sig_return_types[*mid];
                        match &decl.return_type {
                            Some(t) => {
                                let rt = resolve_type_name(&t.name, syms, self.class_index);
                                type_arg_kind(&rt)
                            }
                            None => ArgKind::Unknown,
                        }
                    }
                    _ => ArgKind::Unknown,
                }
            }
            IrExprKind::New { site } => {
                let s = &self.call_sites[*site];
                ArgKind::Object(s.receiver_type.as_ref().and_then(|t| t.qualified.clone()))
            }
            IrExprKind::Binary { op, lhs, rhs } => {
                if *op == ast::BinOp::Add {
                    let l = self.arg_kind(*lhs);
                    let r = self.arg_kind(*rhs);
                    if l == ArgKind::Str || r == ArgKind::Str {
                        ArgKind::Str
                    } else {
                        ArgKind::Int
                    }
                } else if op.is_arith() {
                    ArgKind::Int
                } else {
                    ArgKind::Bool
                }
            }
            _ => ArgKind::Unknown,
        }
    }
}

fn type_arg_kind(ty: &ResolvedType) -> ArgKind {
    let name = ty.qualified.as_deref().unwrap_or(&ty.written);
    if symbols::is_string_type(name) {
        ArgKind::Str
    } else if symbols::is_int_type(name) {
        ArgKind::Int
    } else if name == "boolean" || name == "java.lang.Boolean" {
        ArgKind::Bool
    } else if name == "byte[]" {
        ArgKind::Bytes
    } else if name == "char[]" {
        ArgKind::Chars
    } else if ty.qualified.is_some() {
        ArgKind::Object(ty.qualified.clone())
    } else {
        ArgKind::Unknown
    }
}
