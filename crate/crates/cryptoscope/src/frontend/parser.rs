//! Recursive-descent parser with per-member error recovery.
//!
//! The grammar is a deliberately small Java subset: imports, classes, fields,
//! methods, structured statements and side-effect expressions. Constructs
//! outside the subset (generics, annotations, lambdas, anonymous classes)
//! are rejected with a recorded issue, after which parsing resumes at the
//! next member boundary — one bad method never costs more than its own body.

use super::ast::*;
use super::lexer::{tokenize, ParseIssue};
use super::token::{Token, TokenKind};
use crate::location::Location;

/// Parse one source file. All lexer and parser issues are returned alongside
/// whatever tree could be recovered; this function never fails.
pub fn parse_compilation_unit(source: &str, file_name: &str) -> (CompilationUnit, Vec<ParseIssue>) {
    let (tokens, mut issues) = tokenize(source, file_name);
    let mut parser = Parser::new(&tokens, file_name);
    let unit = parser.unit();
    issues.extend(parser.issues);
    (unit, issues)
}

/// Internal soft failure; recovery decides how far to resynchronize.
struct Fail;
type PResult<T> = Result<T, Fail>;

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    file: String,
    issues: Vec<ParseIssue>,
}

impl<'t> Parser<'t> {
    fn new(tokens: &'t [Token], file: &str) -> Self {
        Parser {
            tokens,
            pos: 0,
            file: file.to_string(),
            issues: Vec::new(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&Token> {
        self.tokens.get(self.pos + ahead)
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek().map(|t| &t.kind == kind).unwrap_or(false)
    }

    fn bump(&mut self) -> &Token {
        let tok = &self.tokens[self.pos];
        self.pos += 1;
        tok
    }

    fn eat(&mut self, kind: &TokenKind) -> bool {
        if self.at(kind) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn here(&self) -> Location {
        match self.peek() {
            Some(t) => t.loc.clone(),
            None => match self.tokens.last() {
                Some(t) => Location::point(&self.file, t.loc.end_line, t.loc.end_column),
                None => Location::point(&self.file, 1, 1),
            },
        }
    }

    fn issue(&mut self, loc: Location, message: impl Into<String>) {
        self.issues.push(ParseIssue {
            loc,
            message: message.into(),
        });
    }

    fn error_here(&mut self, message: impl Into<String>) -> Fail {
        let loc = self.here();
        self.issue(loc, message);
        Fail
    }

    fn expect(&mut self, kind: &TokenKind, what: &str) -> PResult<Location> {
        if self.at(kind) {
            Ok(self.bump().loc.clone())
        } else {
            let found = self
                .peek()
                .map(|t| t.kind.describe())
                .unwrap_or_else(|| "end of file".to_string());
            Err(self.error_here(format!("expected {what}, found {found}")))
        }
    }

    fn expect_ident(&mut self, what: &str) -> PResult<(String, Location)> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(name),
                loc,
            }) => {
                let out = (name.clone(), loc.clone());
                self.pos += 1;
                Ok(out)
            }
            other => {
                let found = other
                    .map(|t| t.kind.describe())
                    .unwrap_or_else(|| "end of file".to_string());
                Err(self.error_here(format!("expected {what}, found {found}")))
            }
        }
    }

    // ---- compilation unit ------------------------------------------------

    fn unit(&mut self) -> CompilationUnit {
        let start = self.here();
        let mut imports = Vec::new();
        let mut classes = Vec::new();
        while self.at(&TokenKind::KwImport) {
            match self.import_decl() {
                Ok(im) => imports.push(im),
                Err(Fail) => self.sync_past_semi(),
            }
        }
        while self.peek().is_some() {
            if self.eat(&TokenKind::Semi) {
                continue;
            }
            match self.class_decl() {
                Ok(c) => classes.push(c),
                Err(Fail) => self.sync_toplevel(),
            }
        }
        let end = match self.tokens.last() {
            Some(t) => t.loc.clone(),
            None => start.clone(),
        };
        CompilationUnit {
            file_name: self.file.clone(),
            imports,
            classes,
            loc: start.to(&end),
        }
    }

    fn import_decl(&mut self) -> PResult<Import> {
        let start = self.expect(&TokenKind::KwImport, "`import`")?;
        let (first, _) = self.expect_ident("package name")?;
        let mut path = first;
        let mut wildcard = false;
        while self.eat(&TokenKind::Dot) {
            if self.eat(&TokenKind::Star) {
                wildcard = true;
                break;
            }
            let (seg, _) = self.expect_ident("name after `.` in import")?;
            path.push('.');
            path.push_str(&seg);
        }
        let end = self.expect(&TokenKind::Semi, "`;` after import")?;
        Ok(Import {
            path,
            wildcard,
            loc: start.to(&end),
        })
    }

    fn modifiers(&mut self) -> Modifiers {
        let mut m = Modifiers::default();
        loop {
            match self.peek().map(|t| &t.kind) {
                Some(TokenKind::KwPublic) => {
                    m.is_public = true;
                    self.pos += 1;
                }
                Some(TokenKind::KwPrivate) => {
                    m.is_private = true;
                    self.pos += 1;
                }
                Some(TokenKind::KwProtected) => {
                    m.is_protected = true;
                    self.pos += 1;
                }
                Some(TokenKind::KwStatic) => {
                    m.is_static = true;
                    self.pos += 1;
                }
                Some(TokenKind::KwFinal) => {
                    m.is_final = true;
                    self.pos += 1;
                }
                Some(TokenKind::At) => {
                    let loc = self.bump().loc.clone();
                    self.issue(loc, "annotations are not supported; ignoring");
                    let _ = self.expect_ident("annotation name");
                    if self.at(&TokenKind::LParen) {
                        self.skip_balanced(&TokenKind::LParen, &TokenKind::RParen);
                    }
                }
                _ => break,
            }
        }
        m
    }

    fn class_decl(&mut self) -> PResult<ClassDecl> {
        let start = self.here();
        let _mods = self.modifiers();
        if !self.at(&TokenKind::KwClass) {
            return Err(self.error_here("expected `import` or a class declaration"));
        }
        self.bump();
        let (name, name_loc) = self.expect_ident("class name")?;
        if self.at(&TokenKind::Lt) {
            let loc = self.here();
            self.issue(loc, "generic type parameters are not supported; ignoring");
            self.skip_balanced(&TokenKind::Lt, &TokenKind::Gt);
        }
        self.expect(&TokenKind::LBrace, "`{` to open class body")?;
        let mut fields = Vec::new();
        let mut methods = Vec::new();
        loop {
            if self.at(&TokenKind::RBrace) || self.peek().is_none() {
                break;
            }
            if self.eat(&TokenKind::Semi) {
                continue;
            }
            match self.member() {
                Ok(Member::Field(f)) => fields.push(f),
                Ok(Member::Method(m)) => methods.push(m),
                Err(Fail) => self.sync_member(),
            }
        }
        let end = if self.at(&TokenKind::RBrace) {
            self.bump().loc.clone()
        } else {
            let loc = self.here();
            self.issue(loc.clone(), "unclosed class body");
            loc
        };
        Ok(ClassDecl {
            name,
            name_loc,
            fields,
            methods,
            loc: start.to(&end),
        })
    }

    fn member(&mut self) -> PResult<Member> {
        let start = self.here();
        let modifiers = self.modifiers();
        if self.at(&TokenKind::KwClass) {
            let loc = self.here();
            self.issue(loc, "nested classes are not supported");
            return Err(Fail);
        }
        let return_type = if self.eat(&TokenKind::KwVoid) {
            None
        } else {
            Some(self.type_ref()?)
        };
        let (name, name_loc) = self.expect_ident("member name")?;
        if self.at(&TokenKind::Lt) {
            return Err(self.error_here("generic methods are not supported"));
        }
        if self.at(&TokenKind::LParen) {
            self.method_rest(modifiers, return_type, name, name_loc, start)
                .map(Member::Method)
        } else {
            let ty = match return_type {
                Some(t) => t,
                None => return Err(self.error_here("fields cannot have type `void`")),
            };
            let init = if self.eat(&TokenKind::Assign) {
                Some(self.array_or_expr(&ty)?)
            } else {
                None
            };
            let end = self.expect(&TokenKind::Semi, "`;` after field declaration")?;
            Ok(Member::Field(FieldDecl {
                modifiers,
                ty,
                name,
                name_loc,
                init,
                loc: start.to(&end),
            }))
        }
    }

    fn method_rest(
        &mut self,
        modifiers: Modifiers,
        return_type: Option<TypeRef>,
        name: String,
        name_loc: Location,
        start: Location,
    ) -> PResult<MethodDecl> {
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut params = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                let pstart = self.here();
                let ty = self.type_ref()?;
                let (pname, _) = self.expect_ident("parameter name")?;
                let pend_loc = self.tokens[self.pos - 1].loc.clone();
                params.push(Param {
                    ty,
                    name: pname,
                    loc: pstart.to(&pend_loc),
                });
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        self.expect(&TokenKind::RParen, "`)` after parameters")?;
        if self.eat(&TokenKind::KwThrows) {
            // declared exceptions carry no analysis information; skip the list
            loop {
                self.expect_ident("exception type")?;
                while self.eat(&TokenKind::Dot) {
                    self.expect_ident("exception type")?;
                }
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        if !self.at(&TokenKind::LBrace) {
            return Err(self.error_here("expected `{` to open method body"));
        }
        // remember where the body starts so a failed body can be skipped
        let body_start = self.pos;
        let body_open = self.here();
        match self.block() {
            Ok(body) => {
                let loc = start.to(&body.loc);
                Ok(MethodDecl {
                    modifiers,
                    return_type,
                    name,
                    name_loc,
                    params,
                    body,
                    body_recovered: false,
                    loc,
                })
            }
            Err(Fail) => {
                // The issue is already recorded. Skip the whole body and keep
                // the method with an empty block so its signature still
                // participates in the call graph.
                self.pos = body_start;
                let close = self.skip_balanced(&TokenKind::LBrace, &TokenKind::RBrace);
                let body_loc = body_open.to(&close);
                Ok(MethodDecl {
                    modifiers,
                    return_type,
                    name,
                    name_loc,
                    params,
                    body: Block {
                        stmts: Vec::new(),
                        loc: body_loc.clone(),
                    },
                    body_recovered: true,
                    loc: start.to(&body_loc),
                })
            }
        }
    }

    fn type_ref(&mut self) -> PResult<TypeRef> {
        let (first, first_loc) = self.expect_ident("type name")?;
        let mut name = first;
        let mut end = first_loc.clone();
        while self.at(&TokenKind::Dot) {
            // only swallow the dot when a nested type name follows (uppercase
            // heuristic is not needed: type positions never contain calls)
            match self.peek_at(1).map(|t| &t.kind) {
                Some(TokenKind::Ident(_)) => {
                    self.bump();
                    let (seg, seg_loc) = self.expect_ident("type name")?;
                    name.push('.');
                    name.push_str(&seg);
                    end = seg_loc;
                }
                _ => break,
            }
        }
        if self.at(&TokenKind::Lt) {
            return Err(self.error_here("generic types are not supported"));
        }
        while self.at(&TokenKind::LBracket) && self.peek_at(1).map(|t| &t.kind) == Some(&TokenKind::RBracket) {
            self.bump();
            let close = self.bump().loc.clone();
            name.push_str("[]");
            end = close;
        }
        Ok(TypeRef {
            name,
            loc: first_loc.to(&end),
        })
    }

    // ---- statements ------------------------------------------------------

    fn block(&mut self) -> PResult<Block> {
        let open = self.expect(&TokenKind::LBrace, "`{`")?;
        let mut stmts = Vec::new();
        loop {
            if self.at(&TokenKind::RBrace) {
                let close = self.bump().loc.clone();
                return Ok(Block {
                    stmts,
                    loc: open.to(&close),
                });
            }
            if self.peek().is_none() {
                return Err(self.error_here("unclosed block"));
            }
            stmts.push(self.stmt()?);
        }
    }

    fn branch_block(&mut self) -> PResult<Block> {
        if self.at(&TokenKind::LBrace) {
            self.block()
        } else {
            let stmt = self.stmt()?;
            let loc = stmt.loc().clone();
            Ok(Block {
                stmts: vec![stmt],
                loc,
            })
        }
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::LBrace) => Ok(Stmt::Block(self.block()?)),
            Some(TokenKind::KwIf) => self.if_stmt(),
            Some(TokenKind::KwWhile) => self.while_stmt(),
            Some(TokenKind::KwFor) => self.for_stmt(),
            Some(TokenKind::KwReturn) => self.return_stmt(),
            Some(TokenKind::KwTry) => self.try_stmt(),
            _ => {
                let stmt = self.simple_stmt()?;
                let end = self.expect(&TokenKind::Semi, "`;` after statement")?;
                Ok(reloc_simple(stmt, end))
            }
        }
    }

    /// A declaration, assignment or expression without its trailing `;`,
    /// shared between ordinary statements and `for` init/update slots.
    fn simple_stmt(&mut self) -> PResult<Stmt> {
        if let Some(stmt) = self.try_local_var()? {
            return Ok(stmt);
        }
        let start = self.here();
        let expr = self.expr()?;
        if self.at(&TokenKind::Assign) {
            let target = match &expr {
                Expr::Ident { name, loc } => (name.clone(), loc.clone()),
                other => {
                    let loc = other.loc().clone();
                    self.issue(loc, "only plain variables can be assigned to");
                    return Err(Fail);
                }
            };
            self.bump();
            let value = self.expr()?;
            let loc = start.to(value.loc());
            return Ok(Stmt::Assign {
                target: target.0,
                target_loc: target.1,
                value,
                loc,
            });
        }
        if self.at(&TokenKind::PlusPlus) || self.at(&TokenKind::MinusMinus) {
            // `i++` desugars to `i = i + 1`; the span keeps the sugar.
            let op = if self.at(&TokenKind::PlusPlus) {
                BinOp::Add
            } else {
                BinOp::Sub
            };
            let op_loc = self.bump().loc.clone();
            let (name, name_loc) = match &expr {
                Expr::Ident { name, loc } => (name.clone(), loc.clone()),
                other => {
                    let loc = other.loc().clone();
                    self.issue(loc, "`++`/`--` are only supported on plain variables");
                    return Err(Fail);
                }
            };
            let loc = start.to(&op_loc);
            return Ok(Stmt::Assign {
                target: name.clone(),
                target_loc: name_loc.clone(),
                value: Expr::Binary {
                    op,
                    lhs: Box::new(Expr::Ident {
                        name,
                        loc: name_loc,
                    }),
                    rhs: Box::new(Expr::IntLit {
                        value: 1,
                        loc: op_loc,
                    }),
                    loc: loc.clone(),
                },
                loc,
            });
        }
        let loc = expr.loc().clone();
        Ok(Stmt::Expr { expr, loc })
    }

    /// Speculative declaration parse: `Type name` followed by `=` or `;` (or
    /// `:` inside a `for`, which is then rejected as an enhanced for loop).
    fn try_local_var(&mut self) -> PResult<Option<Stmt>> {
        let save = self.pos;
        let issues_before = self.issues.len();
        let start = self.here();
        let ty = match self.type_ref() {
            Ok(ty) => ty,
            Err(Fail) => {
                // keep speculative issues out of the log unless the type
                // really was generic (that is a hard reject, not ambiguity)
                if let Some(last) = self.issues.last() {
                    if last.message.contains("generic") {
                        return Err(Fail);
                    }
                }
                self.issues.truncate(issues_before);
                self.pos = save;
                return Ok(None);
            }
        };
        let name = match self.peek() {
            Some(Token {
                kind: TokenKind::Ident(n),
                loc,
            }) => {
                let out = (n.clone(), loc.clone());
                self.pos += 1;
                out
            }
            _ => {
                self.issues.truncate(issues_before);
                self.pos = save;
                return Ok(None);
            }
        };
        match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Assign) => {
                self.bump();
                let init = self.array_or_expr(&ty)?;
                let loc = start.to(init.loc());
                Ok(Some(Stmt::LocalVar {
                    ty,
                    name: name.0,
                    name_loc: name.1,
                    init: Some(init),
                    loc,
                }))
            }
            Some(TokenKind::Semi) | Some(TokenKind::RParen) => Ok(Some(Stmt::LocalVar {
                loc: start.to(&name.1),
                ty,
                name: name.0,
                name_loc: name.1,
                init: None,
            })),
            Some(TokenKind::Colon) => Err(self.error_here("enhanced `for` loops are not supported")),
            _ => {
                self.issues.truncate(issues_before);
                self.pos = save;
                Ok(None)
            }
        }
    }

    fn if_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().loc.clone();
        self.expect(&TokenKind::LParen, "`(` after `if`")?;
        let cond = self.expr()?;
        self.expect(&TokenKind::RParen, "`)` after condition")?;
        let then_block = self.branch_block()?;
        let mut end = then_block.loc.clone();
        let else_block = if self.eat(&TokenKind::KwElse) {
            let b = if self.at(&TokenKind::KwIf) {
                let nested = self.if_stmt()?;
                let loc = nested.loc().clone();
                Block {
                    stmts: vec![nested],
                    loc,
                }
            } else {
                self.branch_block()?
            };
            end = b.loc.clone();
            Some(b)
        } else {
            None
        };
        Ok(Stmt::If {
            cond,
            then_block,
            else_block,
            loc: start.to(&end),
        })
    }

    fn while_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().loc.clone();
        self.expect(&TokenKind::LParen, "`(` after `while`")?;
        let cond = self.expr()?;
        self.expect(&TokenKind::RParen, "`)` after condition")?;
        let body = self.branch_block()?;
        let loc = start.to(&body.loc);
        Ok(Stmt::While { cond, body, loc })
    }

    fn for_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().loc.clone();
        self.expect(&TokenKind::LParen, "`(` after `for`")?;
        let init = if self.at(&TokenKind::Semi) {
            None
        } else {
            Some(Box::new(self.simple_stmt()?))
        };
        self.expect(&TokenKind::Semi, "`;` after for-init")?;
        let cond = if self.at(&TokenKind::Semi) {
            None
        } else {
            Some(self.expr()?)
        };
        self.expect(&TokenKind::Semi, "`;` after for-condition")?;
        let update = if self.at(&TokenKind::RParen) {
            None
        } else {
            Some(Box::new(self.simple_stmt()?))
        };
        self.expect(&TokenKind::RParen, "`)` after for-update")?;
        let body = self.branch_block()?;
        let loc = start.to(&body.loc);
        Ok(Stmt::For {
            init,
            cond,
            update,
            body,
            loc,
        })
    }

    fn return_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().loc.clone();
        let value = if self.at(&TokenKind::Semi) {
            None
        } else {
            Some(self.expr()?)
        };
        let end = self.expect(&TokenKind::Semi, "`;` after return")?;
        Ok(Stmt::Return {
            value,
            loc: start.to(&end),
        })
    }

    fn try_stmt(&mut self) -> PResult<Stmt> {
        let start = self.bump().loc.clone();
        if self.at(&TokenKind::LParen) {
            return Err(self.error_here("try-with-resources is not supported"));
        }
        let body = self.block()?;
        let mut end = body.loc.clone();
        let mut catches = Vec::new();
        while self.at(&TokenKind::KwCatch) {
            let cstart = self.bump().loc.clone();
            self.expect(&TokenKind::LParen, "`(` after `catch`")?;
            let pstart = self.here();
            let ty = self.type_ref()?;
            let (pname, _) = self.expect_ident("exception variable")?;
            let pend = self.tokens[self.pos - 1].loc.clone();
            self.expect(&TokenKind::RParen, "`)` after catch parameter")?;
            let cbody = self.block()?;
            end = cbody.loc.clone();
            let cloc = cstart.to(&end);
            catches.push(CatchClause {
                param: Param {
                    ty,
                    name: pname,
                    loc: pstart.to(&pend),
                },
                body: cbody,
                loc: cloc,
            });
        }
        let finally = if self.eat(&TokenKind::KwFinally) {
            let b = self.block()?;
            end = b.loc.clone();
            Some(b)
        } else {
            None
        };
        if catches.is_empty() && finally.is_none() {
            return Err(self.error_here("`try` requires at least one `catch` or `finally`"));
        }
        Ok(Stmt::TryCatch {
            body,
            catches,
            finally,
            loc: start.to(&end),
        })
    }

    // ---- expressions -----------------------------------------------------

    /// Initializer position for a declared type: a bare `{...}` is an array
    /// literal when the declaration is an array (`byte[] iv = {1, 2};`).
    fn array_or_expr(&mut self, ty: &TypeRef) -> PResult<Expr> {
        if ty.name.ends_with("[]") && self.at(&TokenKind::LBrace) {
            let elem_ty = TypeRef {
                name: ty.name.trim_end_matches("[]").to_string(),
                loc: ty.loc.clone(),
            };
            let (elems, loc) = self.brace_elems()?;
            return Ok(Expr::ArrayLit { elem_ty, elems, loc });
        }
        self.expr()
    }

    /// `{e1, e2, ...}` — the element list of an array literal.
    fn brace_elems(&mut self) -> PResult<(Vec<Expr>, Location)> {
        let open = self.expect(&TokenKind::LBrace, "`{` to open array literal")?;
        let mut elems = Vec::new();
        if !self.at(&TokenKind::RBrace) {
            loop {
                elems.push(self.expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let close = self.expect(&TokenKind::RBrace, "`}` to close array literal")?;
        Ok((elems, open.to(&close)))
    }

    fn expr(&mut self) -> PResult<Expr> {
        if self.at(&TokenKind::Arrow) {
            return Err(self.error_here("lambda expressions are not supported"));
        }
        let mut lhs = self.add_expr()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Lt) => BinOp::Lt,
                Some(TokenKind::Le) => BinOp::Le,
                Some(TokenKind::Gt) => BinOp::Gt,
                Some(TokenKind::Ge) => BinOp::Ge,
                Some(TokenKind::EqEq) => BinOp::Eq,
                Some(TokenKind::Ne) => BinOp::Ne,
                _ => break,
            };
            self.bump();
            let rhs = self.add_expr()?;
            let loc = lhs.loc().to(rhs.loc());
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Plus) => BinOp::Add,
                Some(TokenKind::Minus) => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.mul_expr()?;
            let loc = lhs.loc().to(rhs.loc());
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek().map(|t| &t.kind) {
                Some(TokenKind::Star) => BinOp::Mul,
                Some(TokenKind::Slash) => BinOp::Div,
                Some(TokenKind::Percent) => {
                    return Err(self.error_here("the `%` operator is not supported"))
                }
                _ => break,
            };
            self.bump();
            let rhs = self.unary_expr()?;
            let loc = lhs.loc().to(rhs.loc());
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                loc,
            };
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if self.at(&TokenKind::Minus) {
            let minus = self.bump().loc.clone();
            let inner = self.unary_expr()?;
            return match inner {
                Expr::IntLit { value, loc } => Ok(Expr::IntLit {
                    value: -value,
                    loc: minus.to(&loc),
                }),
                other => {
                    let loc = other.loc().clone();
                    self.issue(loc, "unary minus is only supported on integer literals");
                    Err(Fail)
                }
            };
        }
        if self.at(&TokenKind::Not) {
            return Err(self.error_here("the `!` operator is not supported"));
        }
        self.postfix_expr()
    }

    fn postfix_expr(&mut self) -> PResult<Expr> {
        let mut expr = self.primary_expr()?;
        loop {
            if self.at(&TokenKind::Dot) {
                self.bump();
                let (name, name_loc) = self.expect_ident("member name after `.`")?;
                if self.at(&TokenKind::LParen) {
                    let (args, rparen) = self.arg_list()?;
                    let loc = expr.loc().to(&rparen);
                    let call_loc = name_loc.to(&rparen);
                    expr = Expr::MethodCall {
                        receiver: Some(Box::new(expr)),
                        name,
                        name_loc,
                        args,
                        call_loc,
                        loc,
                    };
                } else {
                    let loc = expr.loc().to(&name_loc);
                    expr = Expr::FieldAccess {
                        receiver: Box::new(expr),
                        name,
                        name_loc,
                        loc,
                    };
                }
            } else if self.at(&TokenKind::LBracket) {
                return Err(self.error_here("array indexing is not supported"));
            } else if self.at(&TokenKind::Arrow) {
                return Err(self.error_here("lambda expressions are not supported"));
            } else {
                return Ok(expr);
            }
        }
    }

    fn primary_expr(&mut self) -> PResult<Expr> {
        match self.peek().cloned() {
            Some(Token {
                kind: TokenKind::Str(value),
                loc,
            }) => {
                self.pos += 1;
                Ok(Expr::StringLit { value, loc })
            }
            Some(Token {
                kind: TokenKind::Int(value),
                loc,
            }) => {
                self.pos += 1;
                Ok(Expr::IntLit { value, loc })
            }
            Some(Token {
                kind: TokenKind::KwTrue,
                loc,
            }) => {
                self.pos += 1;
                Ok(Expr::BoolLit { value: true, loc })
            }
            Some(Token {
                kind: TokenKind::KwFalse,
                loc,
            }) => {
                self.pos += 1;
                Ok(Expr::BoolLit { value: false, loc })
            }
            Some(Token {
                kind: TokenKind::KwNull,
                loc,
            }) => {
                self.pos += 1;
                Ok(Expr::NullLit { loc })
            }
            Some(Token {
                kind: TokenKind::Ident(name),
                loc,
            }) => {
                self.pos += 1;
                if self.at(&TokenKind::LParen) {
                    let (args, rparen) = self.arg_list()?;
                    let call_loc = loc.to(&rparen);
                    Ok(Expr::MethodCall {
                        receiver: None,
                        name,
                        name_loc: loc,
                        args,
                        call_loc: call_loc.clone(),
                        loc: call_loc,
                    })
                } else {
                    Ok(Expr::Ident { name, loc })
                }
            }
            Some(Token {
                kind: TokenKind::LParen,
                ..
            }) => {
                self.bump();
                let inner = self.expr()?;
                self.expect(&TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            Some(Token {
                kind: TokenKind::KwNew,
                loc,
            }) => {
                self.pos += 1;
                let ty = self.type_ref()?;
                if ty.name.ends_with("[]") {
                    // `new byte[]{...}` — type_ref consumed the brackets
                    let elem_ty = TypeRef {
                        name: ty.name.trim_end_matches("[]").to_string(),
                        loc: ty.loc.clone(),
                    };
                    let (elems, body_loc) = self.brace_elems()?;
                    Ok(Expr::ArrayLit {
                        elem_ty,
                        elems,
                        loc: loc.to(&body_loc),
                    })
                } else if self.at(&TokenKind::LBracket) {
                    self.bump();
                    let len = self.expr()?;
                    let close = self.expect(&TokenKind::RBracket, "`]`")?;
                    Ok(Expr::ArrayNew {
                        elem_ty: ty,
                        len: Box::new(len),
                        loc: loc.to(&close),
                    })
                } else {
                    let (args, rparen) = self.arg_list()?;
                    if self.at(&TokenKind::LBrace) {
                        return Err(self.error_here("anonymous classes are not supported"));
                    }
                    Ok(Expr::ConstructorCall {
                        ty,
                        args,
                        loc: loc.to(&rparen),
                    })
                }
            }
            other => {
                let found = other
                    .map(|t| t.kind.describe())
                    .unwrap_or_else(|| "end of file".to_string());
                Err(self.error_here(format!("expected expression, found {found}")))
            }
        }
    }

    fn arg_list(&mut self) -> PResult<(Vec<Expr>, Location)> {
        self.expect(&TokenKind::LParen, "`(`")?;
        let mut args = Vec::new();
        if !self.at(&TokenKind::RParen) {
            loop {
                args.push(self.expr()?);
                if !self.eat(&TokenKind::Comma) {
                    break;
                }
            }
        }
        let rparen = self.expect(&TokenKind::RParen, "`)` after arguments")?;
        Ok((args, rparen))
    }

    // ---- recovery --------------------------------------------------------

    /// Skip past the next `;` (used for malformed imports).
    fn sync_past_semi(&mut self) {
        while let Some(tok) = self.peek() {
            let is_semi = tok.kind == TokenKind::Semi;
            self.pos += 1;
            if is_semi {
                return;
            }
        }
    }

    /// Resynchronize at the top level: stop before the next `import`/`class`
    /// keyword, always making progress.
    fn sync_toplevel(&mut self) {
        let mut advanced = false;
        while let Some(tok) = self.peek() {
            match tok.kind {
                TokenKind::KwImport | TokenKind::KwClass if advanced => return,
                TokenKind::LBrace => {
                    self.skip_balanced(&TokenKind::LBrace, &TokenKind::RBrace);
                    advanced = true;
                    continue;
                }
                _ => {}
            }
            self.pos += 1;
            advanced = true;
        }
    }

    /// Resynchronize at a member boundary inside a class body: consume up to
    /// and including the next `;` or balanced `{...}` at member depth, but
    /// stop short of the class's closing `}`.
    fn sync_member(&mut self) {
        while let Some(tok) = self.peek() {
            match tok.kind {
                TokenKind::Semi => {
                    self.pos += 1;
                    return;
                }
                TokenKind::LBrace => {
                    self.skip_balanced(&TokenKind::LBrace, &TokenKind::RBrace);
                    return;
                }
                TokenKind::RBrace => return,
                _ => self.pos += 1,
            }
        }
    }

    /// Consume an `open` token and everything up to its matching `close`.
    /// Returns the location of the closing token (or the last token seen).
    fn skip_balanced(&mut self, open: &TokenKind, close: &TokenKind) -> Location {
        let mut depth = 0usize;
        let mut last = self.here();
        while let Some(tok) = self.peek() {
            last = tok.loc.clone();
            if tok.kind == *open {
                depth += 1;
            } else if tok.kind == *close {
                depth -= 1;
                self.pos += 1;
                if depth == 0 {
                    return last;
                }
                continue;
            }
            self.pos += 1;
        }
        last
    }
}

enum Member {
    Field(FieldDecl),
    Method(MethodDecl),
}

/// Extend a simple statement's span to cover its terminating semicolon.
fn reloc_simple(stmt: Stmt, semi: Location) -> Stmt {
    match stmt {
        Stmt::LocalVar {
            ty,
            name,
            name_loc,
            init,
            loc,
        } => Stmt::LocalVar {
            ty,
            name,
            name_loc,
            init,
            loc: loc.to(&semi),
        },
        Stmt::Assign {
            target,
            target_loc,
            value,
            loc,
        } => Stmt::Assign {
            target,
            target_loc,
            value,
            loc: loc.to(&semi),
        },
        Stmt::Expr { expr, loc } => Stmt::Expr {
            expr,
            loc: loc.to(&semi),
        },
        other => other,
    }
}
