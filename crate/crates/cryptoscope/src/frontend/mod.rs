//! Stage 1: tolerant lexing and parsing of the subject language.
//!
//! The subject language is a Java subset: imports, classes, fields, methods,
//! structured statements (`if`/`while`/`for`/`try`), local variables,
//! assignments and call/field/literal expressions. Everything a later stage
//! touches carries an exact source span.
//!
//! Parsing is recovery-oriented: a malformed member costs exactly that
//! member, and a file full of syntax errors still yields a usable (possibly
//! empty) tree plus one issue per problem found.

pub mod ast;
pub mod lexer;
pub mod parser;
pub mod project;
pub mod token;

pub use ast::*;
pub use lexer::{tokenize, ParseIssue};
pub use parser::parse_compilation_unit;
pub use project::{list_files, parse_project, parse_project_files, ProjectError, SourceFile, SubjectProject};
