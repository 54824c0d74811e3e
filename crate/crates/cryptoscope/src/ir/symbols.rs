//! Name and type resolution against imports, project classes and a small
//! `java.lang` prelude.

use crate::frontend::CompilationUnit;
use std::collections::BTreeMap;

/// Import surface of one file: explicit simple-name bindings plus wildcard
/// package prefixes. Wildcards cannot be resolved eagerly; consumers try the
/// recorded candidates against whatever namespace they match in (project
/// classes, knowledge-base owner types).
#[derive(Debug, Clone, Default)]
pub struct FileSymbols {
    pub explicit: BTreeMap<String, String>,
    pub wildcards: Vec<String>,
}

pub fn file_symbols(unit: &CompilationUnit) -> FileSymbols {
    let mut syms = FileSymbols::default();
    for import in &unit.imports {
        if import.wildcard {
            syms.wildcards.push(import.path.clone());
        } else if let Some(simple) = import.simple_name() {
            syms.explicit.insert(simple.to_string(), import.path.clone());
        }
    }
    syms
}

/// Outcome of resolving a type name as written in source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResolvedType {
    /// The name as written (`Cipher`, `KEM.Encapsulator`, `byte[]`).
    pub written: String,
    /// Fully qualified name when a single resolution exists.
    pub qualified: Option<String>,
    /// All plausible qualified names, best first. Contains exactly
    /// `qualified` when resolution was unique; wildcard imports contribute
    /// one candidate per package.
    pub candidates: Vec<String>,
    /// True when the name names a class declared in the scanned project.
    pub project_class: bool,
}

impl serde::Serialize for ResolvedType {
    /// Serializes as the best known name; dumps don't need the candidates.
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.qualified {
            Some(q) => s.serialize_str(q),
            None => s.serialize_str(&self.written),
        }
    }
}

const PRELUDE: &[&str] = &[
    "String",
    "Object",
    "Integer",
    "Long",
    "Short",
    "Byte",
    "Character",
    "Boolean",
    "Float",
    "Double",
    "Math",
    "System",
    "StringBuilder",
    "CharSequence",
    "Number",
    "Thread",
    "Exception",
    "RuntimeException",
    "Throwable",
    "Error",
    "IllegalArgumentException",
    "IllegalStateException",
    "NullPointerException",
    "UnsupportedOperationException",
];

/// Resolve a written type name. `project_classes` holds the simple names of
/// all classes in the scanned project.
pub fn resolve_type_name(
    written: &str,
    syms: &FileSymbols,
    project_classes: &BTreeMap<String, usize>,
) -> ResolvedType {
    // Array types resolve element-wise but keep their suffix verbatim.
    if let Some(elem) = written.strip_suffix("[]") {
        let inner = resolve_type_name(elem, syms, project_classes);
        let qualified = inner.qualified.map(|q| format!("{q}[]"));
        return ResolvedType {
            written: written.to_string(),
            candidates: qualified.clone().into_iter().collect(),
            qualified,
            project_class: false,
        };
    }
    let (head, rest) = match written.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (written, None),
    };
    // Lowercase head segments are package names: already qualified.
    if rest.is_some() && head.chars().next().is_some_and(|c| c.is_lowercase()) {
        return ResolvedType {
            written: written.to_string(),
            qualified: Some(written.to_string()),
            candidates: vec![written.to_string()],
            project_class: false,
        };
    }
    let suffix = |base: &str| match rest {
        Some(r) => format!("{base}.{r}"),
        None => base.to_string(),
    };
    if project_classes.contains_key(head) {
        return ResolvedType {
            written: written.to_string(),
            qualified: Some(suffix(head)),
            candidates: vec![suffix(head)],
            project_class: rest.is_none(),
        };
    }
    if let Some(q) = syms.explicit.get(head) {
        let full = suffix(q);
        return ResolvedType {
            written: written.to_string(),
            qualified: Some(full.clone()),
            candidates: vec![full],
            project_class: false,
        };
    }
    if PRELUDE.contains(&head) {
        let full = suffix(&format!("java.lang.{head}"));
        return ResolvedType {
            written: written.to_string(),
            qualified: Some(full.clone()),
            candidates: vec![full],
            project_class: false,
        };
    }
    if !syms.wildcards.is_empty() {
        let candidates: Vec<String> = syms
            .wildcards
            .iter()
            .map(|w| suffix(&format!("{w}.{head}")))
            .collect();
        return ResolvedType {
            written: written.to_string(),
            qualified: None,
            candidates,
            project_class: false,
        };
    }
    ResolvedType {
        written: written.to_string(),
        qualified: None,
        candidates: Vec::new(),
        project_class: false,
    }
}

/// Primitive and known value types that matter for argument-kind matching.
pub fn is_int_type(name: &str) -> bool {
    matches!(
        name,
        "int" | "long" | "short" | "byte" | "java.lang.Integer" | "java.lang.Long"
    )
}

pub fn is_string_type(name: &str) -> bool {
    name == "java.lang.String" || name == "String"
}
