//! Positioned syntax trees for the subject language.
//!
//! Every node carries the exact source span it was parsed from, so the
//! original text is always recoverable by slicing the file at the node's
//! location. That property is what downstream evidence records rely on.

use crate::location::Location;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct CompilationUnit {
    pub file_name: String,
    pub imports: Vec<Import>,
    pub classes: Vec<ClassDecl>,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct Import {
    /// Dotted path without the trailing `.*` for wildcard imports.
    pub path: String,
    pub wildcard: bool,
    pub loc: Location,
}

impl Import {
    /// Simple name an explicit import binds, e.g. `Cipher` for
    /// `javax.crypto.Cipher`. Wildcard imports bind no single name.
    pub fn simple_name(&self) -> Option<&str> {
        if self.wildcard {
            None
        } else {
            self.path.rsplit('.').next()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Modifiers {
    pub is_public: bool,
    pub is_private: bool,
    pub is_protected: bool,
    pub is_static: bool,
    pub is_final: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassDecl {
    pub name: String,
    pub name_loc: Location,
    pub fields: Vec<FieldDecl>,
    pub methods: Vec<MethodDecl>,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldDecl {
    pub modifiers: Modifiers,
    pub ty: TypeRef,
    pub name: String,
    pub name_loc: Location,
    pub init: Option<Expr>,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodDecl {
    pub modifiers: Modifiers,
    /// `None` for `void`.
    pub return_type: Option<TypeRef>,
    pub name: String,
    pub name_loc: Location,
    pub params: Vec<Param>,
    pub body: Block,
    /// True when the body failed to parse and was replaced by an empty block.
    pub body_recovered: bool,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct Param {
    pub ty: TypeRef,
    pub name: String,
    pub loc: Location,
}

/// A type name as written: possibly dotted (`KEM.Encapsulator`) and possibly
/// an array (`byte[]`). Resolution to qualified names happens later, against
/// the file's imports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TypeRef {
    pub name: String,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub struct CatchClause {
    pub param: Param,
    pub body: Block,
    pub loc: Location,
}

#[derive(Debug, Clone, Serialize)]
pub enum Stmt {
    LocalVar {
        ty: TypeRef,
        name: String,
        name_loc: Location,
        init: Option<Expr>,
        loc: Location,
    },
    Assign {
        target: String,
        target_loc: Location,
        value: Expr,
        loc: Location,
    },
    Expr {
        expr: Expr,
        loc: Location,
    },
    If {
        cond: Expr,
        then_block: Block,
        else_block: Option<Block>,
        loc: Location,
    },
    While {
        cond: Expr,
        body: Block,
        loc: Location,
    },
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        update: Option<Box<Stmt>>,
        body: Block,
        loc: Location,
    },
    Return {
        value: Option<Expr>,
        loc: Location,
    },
    TryCatch {
        body: Block,
        catches: Vec<CatchClause>,
        finally: Option<Block>,
        loc: Location,
    },
    Block(Block),
}

impl Stmt {
    pub fn loc(&self) -> &Location {
        match self {
            Stmt::LocalVar { loc, .. }
            | Stmt::Assign { loc, .. }
            | Stmt::Expr { loc, .. }
            | Stmt::If { loc, .. }
            | Stmt::While { loc, .. }
            | Stmt::For { loc, .. }
            | Stmt::Return { loc, .. }
            | Stmt::TryCatch { loc, .. } => loc,
            Stmt::Block(b) => &b.loc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl BinOp {
    /// Whether this operator can participate in constant arithmetic/concat
    /// folding (as opposed to only appearing in branch conditions).
    pub fn is_arith(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div)
    }
}

#[derive(Debug, Clone, Serialize)]
pub enum Expr {
    StringLit {
        value: String,
        loc: Location,
    },
    IntLit {
        value: i64,
        loc: Location,
    },
    BoolLit {
        value: bool,
        loc: Location,
    },
    NullLit {
        loc: Location,
    },
    Ident {
        name: String,
        loc: Location,
    },
    FieldAccess {
        receiver: Box<Expr>,
        name: String,
        name_loc: Location,
        loc: Location,
    },
    MethodCall {
        receiver: Option<Box<Expr>>,
        name: String,
        name_loc: Location,
        args: Vec<Expr>,
        /// Span from the method name through the closing parenthesis; this is
        /// the span evidence records point at.
        call_loc: Location,
        loc: Location,
    },
    ConstructorCall {
        ty: TypeRef,
        args: Vec<Expr>,
        loc: Location,
    },
    /// `new byte[]{1, 2, 3}`
    ArrayLit {
        elem_ty: TypeRef,
        elems: Vec<Expr>,
        loc: Location,
    },
    /// `new byte[16]`
    ArrayNew {
        elem_ty: TypeRef,
        len: Box<Expr>,
        loc: Location,
    },
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        loc: Location,
    },
}

impl Expr {
    pub fn loc(&self) -> &Location {
        match self {
            Expr::StringLit { loc, .. }
            | Expr::IntLit { loc, .. }
            | Expr::BoolLit { loc, .. }
            | Expr::NullLit { loc }
            | Expr::Ident { loc, .. }
            | Expr::FieldAccess { loc, .. }
            | Expr::MethodCall { loc, .. }
            | Expr::ConstructorCall { loc, .. }
            | Expr::ArrayLit { loc, .. }
            | Expr::ArrayNew { loc, .. }
            | Expr::Binary { loc, .. } => loc,
        }
    }

    /// Dotted name when the expression is a plain identifier chain
    /// (`javax.crypto.Cipher`), used to spell out unresolved call owners.
    pub fn dotted_name(&self) -> Option<String> {
        match self {
            Expr::Ident { name, .. } => Some(name.clone()),
            Expr::FieldAccess { receiver, name, .. } => {
                Some(format!("{}.{}", receiver.dotted_name()?, name))
            }
            _ => None,
        }
    }
}
