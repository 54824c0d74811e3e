//! Declarative knowledge base: crypto API signatures with parameter roles,
//! value→property semantics, slicing criteria, relation rules and security
//! policy — all expressed in cryptographic terms, independent of the subject
//! language.
//!
//! The KB is data: JSON files validated on load against the shipped
//! `kb.schema.json` contract. Built-in files cover the Java Cryptography
//! Architecture plus a small BouncyCastle-style extension; `--kb` overlays
//! merge on top, later files overriding earlier ones by id.

pub mod semantics;

pub use semantics::{parse_transformation, resolve_semantics};

use crate::ir::{ArgKind, CallSiteId, CallTarget, ExprId, IrExprKind, MethodId, ProgramIr};
use crate::value::Value;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const BUILTIN_JCA: &str = include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../kb/jca.json"));
pub const BUILTIN_BOUNCYCASTLE: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../kb/bouncycastle.json"));
pub const BUILTIN_POLICY: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../kb/policy-default.json"));

pub const CRYPTO_FUNCTIONS: &[&str] = &[
    "encrypt",
    "decrypt",
    "sign",
    "verify",
    "digest",
    "keygen",
    "keyderive",
    "tag",
    "encapsulate",
    "decapsulate",
    "random",
];

pub const PRIMITIVES: &[&str] = &[
    "blockcipher",
    "streamcipher",
    "ae",
    "hash",
    "signature",
    "mac",
    "kem",
    "kdf",
    "drbg",
    "pke",
    "keyagreement",
];

#[derive(Debug, Error)]
pub enum KbError {
    #[error("{file}: cannot read knowledge base: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
    #[error("{file}:{line}:{column}: schema violation: {message}")]
    Schema {
        file: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{file}: {pointer}: {message}")]
    Validation {
        file: String,
        pointer: String,
        message: String,
    },
    #[error("{file}: duplicate api id {id} within one file")]
    DuplicateId { file: String, id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamRole {
    Transformation,
    Keysize,
    Key,
    Iv,
    Salt,
    Seed,
    Password,
    Iterations,
    Opmode,
    Data,
    Taglen,
    Irrelevant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueKind {
    String,
    Int,
    Bool,
    Bytes,
    Chars,
    Object,
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ApiKind {
    Instantiation,
    Initialization,
    Update,
    Criterion,
    Keysource,
    Randomsource,
    MaterialCtor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ParamSpec {
    pub role: ParamRole,
    pub value_kind: ValueKind,
    /// Acceptable qualified types for object parameters; used to pick
    /// between same-arity overloads. Empty = no preference.
    #[serde(default)]
    pub object_types: Vec<String>,
    /// The call writes through this parameter (e.g. `nextBytes(buf)`);
    /// material tracing treats it as a producer of the argument's value.
    #[serde(default)]
    pub output: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ApiSpec {
    pub id: String,
    pub owner_type: String,
    /// `<init>` for constructors.
    pub method_name: String,
    #[serde(default)]
    pub param_roles: Vec<ParamSpec>,
    pub kind: ApiKind,
    #[serde(default)]
    pub produces_instance_of: Option<String>,
    /// Crypto functions a criterion call completes, first = default when
    /// initialization evidence is missing.
    #[serde(default)]
    pub completes: Vec<String>,
    /// How a transformation-role parameter is interpreted: "cipher" splits
    /// algorithm/mode/padding on '/', "name" is a bare algorithm lookup.
    #[serde(default)]
    pub transform_kind: Option<String>,
    /// Properties the call itself implies regardless of arguments.
    #[serde(default)]
    pub properties: BTreeMap<String, String>,
}

impl ApiSpec {
    pub fn arity(&self) -> usize {
        self.param_roles.len()
    }

    pub fn param_index_with_role(&self, role: ParamRole) -> Option<usize> {
        self.param_roles.iter().position(|p| p.role == role)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SemanticsRule {
    /// Restrict to one ApiSpec id; absent = any api.
    #[serde(default)]
    pub api: Option<String>,
    /// Restrict to a parameter role; absent = any role.
    #[serde(default)]
    pub role: Option<ParamRole>,
    /// Exact literal to match (string or integer).
    #[serde(default)]
    pub value: Option<serde_json::Value>,
    /// Named-group regex applied to string values when no exact rule matched.
    #[serde(default)]
    pub pattern: Option<String>,
    /// Property template; `$group` substitutes a capture from `pattern`.
    pub properties: BTreeMap<String, String>,
    #[serde(skip)]
    pub compiled: Option<regex::Regex>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum RelationKind {
    SameInstance,
    ResultFlowsToParam,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RelationRule {
    pub kind: RelationKind,
    /// Api id or `prefix.*` wildcard.
    pub source_api: String,
    pub target_api: String,
    /// Parameter position the source's result flows into; -1 = receiver.
    #[serde(default)]
    pub param_index: Option<i32>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AlgorithmInfo {
    pub primitive: String,
    #[serde(default)]
    pub block_size: Option<i64>,
    #[serde(default)]
    pub default_mode: Option<String>,
    #[serde(default)]
    pub default_padding: Option<String>,
    #[serde(default)]
    pub default_key_size: Option<i64>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ModeInfo {
    /// Authenticated-encryption mode: upgrades a block cipher to primitive
    /// "ae".
    #[serde(default)]
    pub aead: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PolicySet {
    pub weak_variants: BTreeSet<String>,
    pub weak_modes: BTreeSet<String>,
    pub weak_hashes: BTreeSet<String>,
    pub quantum_unsafe: BTreeSet<String>,
    /// Report quantum-unsafe algorithms under cwe327. Off by default: most
    /// inventories want weak-crypto findings without flooding on RSA/EC.
    pub report_quantum_unsafe: bool,
    pub strong_prng_apis: BTreeSet<String>,
    pub min_asym_key_bits: BTreeMap<String, i64>,
    pub min_pbe_iterations: i64,
    pub severity: BTreeMap<String, String>,
}

impl Default for PolicySet {
    fn default() -> Self {
        PolicySet {
            weak_variants: BTreeSet::new(),
            weak_modes: BTreeSet::new(),
            weak_hashes: BTreeSet::new(),
            quantum_unsafe: BTreeSet::new(),
            report_quantum_unsafe: false,
            strong_prng_apis: BTreeSet::new(),
            min_asym_key_bits: BTreeMap::new(),
            min_pbe_iterations: 1000,
            severity: BTreeMap::new(),
        }
    }
}

impl PolicySet {
    pub fn severity_of(&self, cwe: &str) -> &str {
        self.severity.get(cwe).map(String::as_str).unwrap_or("Major")
    }
}

/// Field-wise policy overlay: present fields replace, absent fields keep.
#[derive(Debug, Clone, Deserialize, Default)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct PolicyPatch {
    #[serde(default)]
    pub weak_variants: Option<BTreeSet<String>>,
    #[serde(default)]
    pub weak_modes: Option<BTreeSet<String>>,
    #[serde(default)]
    pub weak_hashes: Option<BTreeSet<String>>,
    #[serde(default)]
    pub quantum_unsafe: Option<BTreeSet<String>>,
    #[serde(default)]
    pub report_quantum_unsafe: Option<bool>,
    #[serde(default)]
    pub strong_prng_apis: Option<BTreeSet<String>>,
    #[serde(default)]
    pub min_asym_key_bits: Option<BTreeMap<String, i64>>,
    #[serde(default)]
    pub min_pbe_iterations: Option<i64>,
    #[serde(default)]
    pub severity: Option<BTreeMap<String, String>>,
}

impl PolicyPatch {
    pub fn apply_to(&self, policy: &mut PolicySet) {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = &self.$field {
                    policy.$field = v.clone();
                }
            };
        }
        take!(weak_variants);
        take!(weak_modes);
        take!(weak_hashes);
        take!(quantum_unsafe);
        take!(report_quantum_unsafe);
        take!(strong_prng_apis);
        take!(min_asym_key_bits);
        take!(min_pbe_iterations);
        take!(severity);
    }
}

/// One KB document as stored on disk.
#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct KbFile {
    pub name: String,
    #[serde(default)]
    pub apis: Vec<ApiSpec>,
    #[serde(default)]
    pub algorithms: BTreeMap<String, AlgorithmInfo>,
    #[serde(default)]
    pub modes: BTreeMap<String, ModeInfo>,
    /// Name canonicalization for variants, digests, modes and paddings.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
    /// Static-final API constants, e.g. `javax.crypto.Cipher.ENCRYPT_MODE`.
    #[serde(default)]
    pub constants: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub semantics: Vec<SemanticsRule>,
    #[serde(default)]
    pub relations: Vec<RelationRule>,
    /// Import prefixes marking a file as crypto-relevant for the prefilter.
    #[serde(default)]
    pub import_prefixes: Vec<String>,
    #[serde(default)]
    pub policy: Option<PolicyPatch>,
}

/// Merged, validated, immutable knowledge base.
#[derive(Debug)]
pub struct KnowledgeBase {
    pub apis: Vec<ApiSpec>,
    pub algorithms: BTreeMap<String, AlgorithmInfo>,
    pub modes: BTreeMap<String, ModeInfo>,
    pub aliases: BTreeMap<String, String>,
    pub constants: BTreeMap<String, Value>,
    pub semantics: Vec<SemanticsRule>,
    pub relations: Vec<RelationRule>,
    pub import_prefixes: Vec<String>,
    pub policy: PolicySet,
    api_index: BTreeMap<String, usize>,
    sig_index: BTreeMap<(String, String, usize), Vec<usize>>,
    owner_simple_names: BTreeSet<String>,
}

impl KnowledgeBase {
    pub fn api_by_id(&self, id: &str) -> Option<&ApiSpec> {
        self.api_index.get(id).map(|i| &self.apis[*i])
    }

    /// Does `id` match an exact id or `prefix.*` wildcard pattern?
    pub fn id_matches(id: &str, pattern: &str) -> bool {
        match pattern.strip_suffix(".*") {
            Some(prefix) => id
                .strip_prefix(prefix)
                .map(|rest| rest.starts_with('.'))
                .unwrap_or(false),
            None => id == pattern,
        }
    }

    pub fn owner_types(&self) -> BTreeSet<&str> {
        self.apis.iter().map(|a| a.owner_type.as_str()).collect()
    }

    pub fn owner_simple_names(&self) -> &BTreeSet<String> {
        &self.owner_simple_names
    }

    /// Canonical spelling of an algorithm/mode/padding name: alias table
    /// first, then case-insensitive alias/algorithm lookup, else verbatim.
    pub fn canon_name(&self, name: &str) -> String {
        if let Some(c) = self.aliases.get(name) {
            return c.clone();
        }
        if self.algorithms.contains_key(name) || self.modes.contains_key(name) {
            return name.to_string();
        }
        let lower = name.to_ascii_lowercase();
        for (k, v) in &self.aliases {
            if k.to_ascii_lowercase() == lower {
                return v.clone();
            }
        }
        for k in self.algorithms.keys() {
            if k.to_ascii_lowercase() == lower {
                return k.clone();
            }
        }
        for k in self.modes.keys() {
            if k.to_ascii_lowercase() == lower {
                return k.clone();
            }
        }
        name.to_string()
    }

    /// Relation rules whose source matches the given api id.
    pub fn relations_from<'a>(
        &'a self,
        api_id: &'a str,
    ) -> impl Iterator<Item = &'a RelationRule> + 'a {
        self.relations
            .iter()
            .filter(move |r| Self::id_matches(api_id, &r.source_api))
    }

    /// Are two apis related same-instance (grouped when called on one
    /// receiver object)?
    pub fn same_instance_related(&self, a: &str, b: &str) -> bool {
        self.relations.iter().any(|r| {
            r.kind == RelationKind::SameInstance
                && ((Self::id_matches(a, &r.source_api) && Self::id_matches(b, &r.target_api))
                    || (Self::id_matches(b, &r.source_api) && Self::id_matches(a, &r.target_api)))
        })
    }

    /// Match a call site against the KB by receiver type, method name and
    /// arity; same-arity overloads are disambiguated by argument value kinds.
    pub fn match_call_site(&self, ir: &ProgramIr, site: CallSiteId) -> Option<&ApiSpec> {
        self.match_call_site_depth(ir, site, 0)
    }

    fn match_call_site_depth(&self, ir: &ProgramIr, site: CallSiteId, depth: usize) -> Option<&ApiSpec> {
        if depth > 8 {
            return None; // pathological receiver chain
        }
        let s = ir.site(site);
        let owners = self.candidate_owners(ir, s.method, site, depth);
        for owner in owners {
            let key = (owner, s.name.clone(), s.args.len());
            if let Some(idxs) = self.sig_index.get(&key) {
                if let Some(best) = self.pick_overload(idxs, &s.arg_kinds) {
                    return Some(&self.apis[best]);
                }
            }
        }
        None
    }

    fn candidate_owners(
        &self,
        ir: &ProgramIr,
        method: MethodId,
        site: CallSiteId,
        depth: usize,
    ) -> Vec<String> {
        let s = ir.site(site);
        if let Some(rt) = &s.receiver_type {
            return match &rt.qualified {
                Some(q) => vec![q.clone()],
                None => rt.candidates.clone(),
            };
        }
        if let Some(v) = s.receiver_var {
            if let Some(ty) = &ir.method(method).vars[v].ty {
                return match &ty.qualified {
                    Some(q) => vec![q.clone()],
                    None => ty.candidates.clone(),
                };
            }
            return Vec::new();
        }
        if let Some(e) = s.receiver_expr {
            return self
                .expr_result_type(ir, method, e, depth)
                .into_iter()
                .collect();
        }
        Vec::new()
    }

    /// Type an expression evaluates to, following call chaining through
    /// `producesInstanceOf` and project return types.
    fn expr_result_type(
        &self,
        ir: &ProgramIr,
        method: MethodId,
        expr: ExprId,
        depth: usize,
    ) -> Option<String> {
        match &ir.method(method).exprs[expr].kind {
            IrExprKind::Var(v) => ir.method(method).vars[*v]
                .ty
                .as_ref()
                .and_then(|t| t.qualified.clone()),
            IrExprKind::New { site } => ir
                .site(*site)
                .receiver_type
                .as_ref()
                .and_then(|t| t.qualified.clone().or_else(|| t.candidates.first().cloned())),
            IrExprKind::Call { site } => {
                if let Some(spec) = self.match_call_site_depth(ir, *site, depth + 1) {
                    if spec.produces_instance_of.is_some() {
                        return spec.produces_instance_of.clone();
                    }
                }
                if let CallTarget::Project(mid) = ir.site(*site).target {
                    return ir
                        .method(mid)
                        .return_type
                        .as_ref()
                        .and_then(|t| t.qualified.clone());
                }
                None
            }
            _ => None,
        }
    }

    fn pick_overload(&self, idxs: &[usize], arg_kinds: &[ArgKind]) -> Option<usize> {
        let mut best: Option<(i32, usize)> = None;
        'spec: for &i in idxs {
            let spec = &self.apis[i];
            let mut score = 0i32;
            for (param, arg) in spec.param_roles.iter().zip(arg_kinds) {
                match compat_score(param, arg) {
                    Some(s) => score += s,
                    None => continue 'spec, // literal kind contradiction
                }
            }
            match best {
                Some((b, _)) if b >= score => {}
                _ => best = Some((score, i)),
            }
        }
        best.map(|(_, i)| i)
    }
}

/// Compatibility of one declared parameter with one argument kind.
/// `None` = contradiction, `Some(n)` = match strength.
fn compat_score(param: &ParamSpec, arg: &ArgKind) -> Option<i32> {
    use ValueKind as V;
    let score = match (param.value_kind, arg) {
        (V::Any, _) => 1,
        (_, ArgKind::Unknown) | (_, ArgKind::Null) => 1,
        (V::String, ArgKind::Str) => 2,
        (V::Int, ArgKind::Int) => 2,
        (V::Bool, ArgKind::Bool) => 2,
        (V::Bytes, ArgKind::Bytes) => 2,
        (V::Chars, ArgKind::Chars) => 2,
        // a char[]/byte[] often arrives via untyped helpers
        (V::Bytes, ArgKind::Chars) | (V::Chars, ArgKind::Bytes) => return None,
        (V::Object, ArgKind::Object(Some(t))) => {
            if param.object_types.iter().any(|o| o == t) {
                3
            } else {
                2
            }
        }
        (V::Object, ArgKind::Object(None)) => 2,
        (V::Object, ArgKind::Bytes | ArgKind::Chars) => 1,
        _ => return None,
    };
    Some(score)
}

pub(crate) fn json_to_value(v: &serde_json::Value) -> Option<Value> {
    match v {
        serde_json::Value::String(s) => Some(Value::Str(s.clone())),
        serde_json::Value::Number(n) => n.as_i64().map(Value::Int),
        serde_json::Value::Bool(b) => Some(Value::Bool(*b)),
        serde_json::Value::Null => Some(Value::Null),
        _ => None,
    }
}

/// Load the built-in KB plus overlay files, merge and validate.
pub fn load_kb(overlays: &[PathBuf]) -> Result<KnowledgeBase, KbError> {
    load_kb_with_builtins(&builtin_sources(), overlays)
}

/// Built-in KB documents in merge order.
pub fn builtin_sources() -> Vec<(String, String)> {
    vec![
        ("builtin:jca.json".to_string(), BUILTIN_JCA.to_string()),
        (
            "builtin:bouncycastle.json".to_string(),
            BUILTIN_BOUNCYCASTLE.to_string(),
        ),
        (
            "builtin:policy-default.json".to_string(),
            BUILTIN_POLICY.to_string(),
        ),
    ]
}

pub fn load_kb_with_builtins(
    builtins: &[(String, String)],
    overlays: &[PathBuf],
) -> Result<KnowledgeBase, KbError> {
    let mut docs: Vec<(String, KbFile)> = Vec::new();
    for (name, text) in builtins {
        docs.push((name.clone(), parse_kb_file(name, text)?));
    }
    for path in overlays {
        let text = std::fs::read_to_string(path).map_err(|e| KbError::Io {
            file: path.display().to_string(),
            source: e,
        })?;
        let name = path.display().to_string();
        docs.push((name.clone(), parse_kb_file(&name, &text)?));
    }
    merge_and_validate(docs)
}

pub fn parse_kb_file(file: &str, text: &str) -> Result<KbFile, KbError> {
    let kb: KbFile = serde_json::from_str(text).map_err(|e| KbError::Schema {
        file: file.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    // intra-file duplicate ids are author errors, not overrides
    let mut seen = BTreeSet::new();
    for api in &kb.apis {
        if !seen.insert(api.id.clone()) {
            return Err(KbError::DuplicateId {
                file: file.to_string(),
                id: api.id.clone(),
            });
        }
    }
    Ok(kb)
}

fn merge_and_validate(docs: Vec<(String, KbFile)>) -> Result<KnowledgeBase, KbError> {
    let mut apis: Vec<ApiSpec> = Vec::new();
    let mut api_pos: BTreeMap<String, usize> = BTreeMap::new();
    let mut algorithms = BTreeMap::new();
    let mut modes = BTreeMap::new();
    let mut aliases = BTreeMap::new();
    let mut constants = BTreeMap::new();
    let mut semantics: Vec<SemanticsRule> = Vec::new();
    let mut relations: Vec<RelationRule> = Vec::new();
    let mut import_prefixes: Vec<String> = Vec::new();
    let mut policy = PolicySet::default();

    for (file, doc) in &docs {
        for (i, api) in doc.apis.iter().enumerate() {
            validate_api(file, i, api)?;
            match api_pos.get(&api.id) {
                Some(&p) => apis[p] = api.clone(), // later file overrides by id
                None => {
                    api_pos.insert(api.id.clone(), apis.len());
                    apis.push(api.clone());
                }
            }
        }
        algorithms.extend(doc.algorithms.clone());
        modes.extend(doc.modes.clone());
        aliases.extend(doc.aliases.clone());
        for (k, v) in &doc.constants {
            let val = json_to_value(v).ok_or_else(|| KbError::Validation {
                file: file.clone(),
                pointer: format!("/constants/{k}"),
                message: "constant must be a scalar".to_string(),
            })?;
            constants.insert(k.clone(), val);
        }
        for (i, rule) in doc.semantics.iter().enumerate() {
            let mut rule = rule.clone();
            validate_semantics_rule(file, i, &mut rule)?;
            // an exact-value rule overrides an earlier one with the same key
            if rule.value.is_some() {
                semantics.retain(|r| {
                    !(r.value == rule.value && r.api == rule.api && r.role == rule.role)
                });
            }
            semantics.push(rule);
        }
        for rule in &doc.relations {
            if !relations.iter().any(|r| {
                r.kind == rule.kind
                    && r.source_api == rule.source_api
                    && r.target_api == rule.target_api
                    && r.param_index == rule.param_index
            }) {
                relations.push(rule.clone());
            }
        }
        for p in &doc.import_prefixes {
            if !import_prefixes.contains(p) {
                import_prefixes.push(p.clone());
            }
        }
        if let Some(patch) = &doc.policy {
            patch.apply_to(&mut policy);
        }
    }

    // closure: relations and policy reference apis that exist
    let id_exists = |pattern: &str| {
        apis.iter()
            .any(|a| KnowledgeBase::id_matches(&a.id, pattern))
    };
    for (i, rel) in relations.iter().enumerate() {
        for (side, pat) in [("sourceApi", &rel.source_api), ("targetApi", &rel.target_api)] {
            if !id_exists(pat) {
                return Err(KbError::Validation {
                    file: "merged".to_string(),
                    pointer: format!("/relations/{i}/{side}"),
                    message: format!("no api matches {pat}"),
                });
            }
        }
        if rel.kind == RelationKind::ResultFlowsToParam && rel.param_index.is_none() {
            return Err(KbError::Validation {
                file: "merged".to_string(),
                pointer: format!("/relations/{i}/paramIndex"),
                message: "resultFlowsToParam requires paramIndex".to_string(),
            });
        }
    }
    for id in &policy.strong_prng_apis {
        if !id_exists(id) {
            return Err(KbError::Validation {
                file: "merged".to_string(),
                pointer: "/policy/strongPrngApis".to_string(),
                message: format!("unknown api id {id}"),
            });
        }
    }
    for (i, rule) in semantics.iter().enumerate() {
        if let Some(api) = &rule.api {
            if !id_exists(api) {
                return Err(KbError::Validation {
                    file: "merged".to_string(),
                    pointer: format!("/semantics/{i}/api"),
                    message: format!("unknown api id {api}"),
                });
            }
        }
    }
    for (k, v) in &policy.severity {
        if !matches!(v.as_str(), "Minor" | "Major" | "Critical") {
            return Err(KbError::Validation {
                file: "merged".to_string(),
                pointer: format!("/policy/severity/{k}"),
                message: format!("severity must be Minor|Major|Critical, got {v}"),
            });
        }
    }

    let mut sig_index: BTreeMap<(String, String, usize), Vec<usize>> = BTreeMap::new();
    for (i, api) in apis.iter().enumerate() {
        sig_index
            .entry((api.owner_type.clone(), api.method_name.clone(), api.arity()))
            .or_default()
            .push(i);
    }
    let owner_simple_names = apis
        .iter()
        .map(|a| {
            a.owner_type
                .rsplit('.')
                .next()
                .unwrap_or(&a.owner_type)
                .to_string()
        })
        .collect();
    let api_index = api_pos;
    Ok(KnowledgeBase {
        apis,
        algorithms,
        modes,
        aliases,
        constants,
        semantics,
        relations,
        import_prefixes,
        policy,
        api_index,
        sig_index,
        owner_simple_names,
    })
}

fn validate_api(file: &str, index: usize, api: &ApiSpec) -> Result<(), KbError> {
    let err = |field: &str, message: String| {
        Err(KbError::Validation {
            file: file.to_string(),
            pointer: format!("/apis/{index}/{field}"),
            message,
        })
    };
    if api.id.is_empty() {
        return err("id", "id must be non-empty".into());
    }
    if !api.owner_type.contains('.') {
        return err("ownerType", format!("{} is not qualified", api.owner_type));
    }
    // Criteria and random draws both finish an operation.
    if matches!(api.kind, ApiKind::Criterion | ApiKind::Randomsource) {
        if api.completes.is_empty() {
            return err("completes", "criterion must name completed functions".into());
        }
        for f in &api.completes {
            if !CRYPTO_FUNCTIONS.contains(&f.as_str()) {
                return err("completes", format!("unknown crypto function {f}"));
            }
        }
    } else if !api.completes.is_empty() {
        return err("completes", "only criterion apis complete functions".into());
    }
    if let Some(tk) = &api.transform_kind {
        if !matches!(tk.as_str(), "cipher" | "name") {
            return err("transformKind", format!("must be cipher|name, got {tk}"));
        }
        if api.param_index_with_role(ParamRole::Transformation).is_none() {
            return err(
                "transformKind",
                "requires a transformation-role parameter".into(),
            );
        }
    }
    if let Some(p) = &api.properties.get("primitive") {
        if !PRIMITIVES.contains(&p.as_str()) {
            return err("properties/primitive", format!("unknown primitive {p}"));
        }
    }
    Ok(())
}

fn validate_semantics_rule(
    file: &str,
    index: usize,
    rule: &mut SemanticsRule,
) -> Result<(), KbError> {
    let err = |field: &str, message: String| {
        Err(KbError::Validation {
            file: file.to_string(),
            pointer: format!("/semantics/{index}/{field}"),
            message,
        })
    };
    match (&rule.value, &rule.pattern) {
        (Some(_), Some(_)) => return err("pattern", "rule cannot have both value and pattern".into()),
        (None, None) => return err("value", "rule needs a value or a pattern".into()),
        (None, Some(p)) => {
            let compiled = regex::Regex::new(p)
                .map_err(|e| KbError::Validation {
                    file: file.to_string(),
                    pointer: format!("/semantics/{index}/pattern"),
                    message: format!("invalid regex: {e}"),
                })?;
            let groups: BTreeSet<&str> = compiled.capture_names().flatten().collect();
            for tpl in rule.properties.values() {
                if let Some(name) = tpl.strip_prefix('$') {
                    if !groups.contains(name) {
                        return err(
                            "properties",
                            format!("template ${name} has no capture group"),
                        );
                    }
                }
            }
            rule.compiled = Some(compiled);
        }
        (Some(v), None) => {
            if json_to_value(v).is_none() {
                return err("value", "exact value must be a scalar".into());
            }
        }
    }
    Ok(())
}

/// Load the policy: built-in defaults, then an optional settings file that
/// may be either a KB document with a `policy` section or a bare patch.
pub fn load_policy(kb: &KnowledgeBase, path: Option<&Path>) -> Result<PolicySet, KbError> {
    let mut policy = kb.policy.clone();
    if let Some(path) = path {
        let text = std::fs::read_to_string(path).map_err(|e| KbError::Io {
            file: path.display().to_string(),
            source: e,
        })?;
        let file = path.display().to_string();
        let as_json: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| KbError::Schema {
                file: file.clone(),
                line: e.line(),
                column: e.column(),
                message: e.to_string(),
            })?;
        let patch_value = match as_json.get("policy") {
            Some(p) => p.clone(),
            None => as_json,
        };
        let patch: PolicyPatch =
            serde_json::from_value(patch_value).map_err(|e| KbError::Schema {
                file,
                line: 0,
                column: 0,
                message: e.to_string(),
            })?;
        patch.apply_to(&mut policy);
    }
    Ok(policy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend;

    fn ir_of(src: &str) -> ProgramIr {
        let (unit, issues) = frontend::parse_compilation_unit(src, "T.java");
        assert!(issues.is_empty(), "{issues:?}");
        let project = frontend::SubjectProject {
            root_dir: ".".into(),
            files: vec![frontend::SourceFile {
                rel_path: "T.java".into(),
                line_index: crate::location::LineIndex::new(src),
                source: src.into(),
                unit,
            }],
            parse_errors: vec![],
        };
        crate::ir::build_program_ir(&project)
    }

    #[test]
    fn builtin_kb_loads_with_expected_coverage() {
        let kb = load_kb(&[]).unwrap();
        assert!(kb.apis.len() >= 40, "expected ≥40 built-in apis, got {}", kb.apis.len());
        for owner in [
            "javax.crypto.Cipher",
            "java.security.Signature",
            "java.security.MessageDigest",
            "javax.crypto.KeyGenerator",
            "java.security.KeyPairGenerator",
            "javax.crypto.Mac",
            "javax.crypto.SecretKeyFactory",
            "java.security.SecureRandom",
            "javax.crypto.KeyAgreement",
        ] {
            assert!(
                kb.apis.iter().any(|a| a.owner_type == owner),
                "missing owner {owner}"
            );
        }
        assert!(!kb.policy.weak_variants.is_empty());
        assert_eq!(kb.policy.min_pbe_iterations, 1000);
    }

    #[test]
    fn empty_overlay_changes_nothing() {
        let kb = load_kb(&[]).unwrap();
        let dir = std::env::temp_dir().join("kb-empty-overlay-test");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("empty.json");
        std::fs::write(&p, r#"{"name": "empty"}"#).unwrap();
        let kb2 = load_kb(&[p]).unwrap();
        assert_eq!(kb.apis.len(), kb2.apis.len());
        assert_eq!(kb.semantics.len(), kb2.semantics.len());
        assert_eq!(kb.policy.min_pbe_iterations, kb2.policy.min_pbe_iterations);
    }

    #[test]
    fn overlay_overrides_policy_and_apis_by_id() {
        let dir = std::env::temp_dir().join("kb-overlay-test");
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("overlay.json");
        std::fs::write(
            &p,
            r#"{
              "name": "overlay",
              "apis": [{
                "id": "jca:Cipher.getInstance/1",
                "ownerType": "javax.crypto.Cipher",
                "methodName": "getInstance",
                "paramRoles": [{"role": "transformation", "valueKind": "string"}],
                "kind": "instantiation",
                "transformKind": "cipher",
                "producesInstanceOf": "javax.crypto.Cipher",
                "properties": {"primitive": "blockcipher"}
              }],
              "policy": {"minPbeIterations": 10000}
            }"#,
        )
        .unwrap();
        let base = load_kb(&[]).unwrap();
        let kb = load_kb(&[p]).unwrap();
        assert_eq!(kb.policy.min_pbe_iterations, 10000);
        assert_eq!(kb.apis.len(), base.apis.len(), "override, not append");
        let spec = kb.api_by_id("jca:Cipher.getInstance/1").unwrap();
        assert_eq!(spec.properties.get("primitive").unwrap(), "blockcipher");
    }

    #[test]
    fn schema_error_carries_location() {
        let err = parse_kb_file("bad.json", "{\n  \"name\": 3\n}").unwrap_err();
        match err {
            KbError::Schema { file, line, .. } => {
                assert_eq!(file, "bad.json");
                assert_eq!(line, 2);
            }
            other => panic!("expected schema error, got {other}"),
        }
    }

    #[test]
    fn duplicate_id_in_one_file_is_rejected() {
        let text = r#"{"name":"d","apis":[
            {"id":"x:A.f/0","ownerType":"p.A","methodName":"f","kind":"update"},
            {"id":"x:A.f/0","ownerType":"p.A","methodName":"f","kind":"update"}
        ]}"#;
        assert!(matches!(
            parse_kb_file("d.json", text),
            Err(KbError::DuplicateId { .. })
        ));
    }

    #[test]
    fn relation_referencing_missing_api_fails_validation() {
        let text = r#"{"name":"r","apis":[
            {"id":"x:A.f/0","ownerType":"p.A","methodName":"f","kind":"update"}
        ],"relations":[
            {"kind":"sameInstance","sourceApi":"x:A.f/0","targetApi":"x:Missing.*"}
        ]}"#;
        let doc = parse_kb_file("r.json", text).unwrap();
        let err = merge_and_validate(vec![("r.json".into(), doc)]).unwrap_err();
        assert!(matches!(err, KbError::Validation { .. }), "{err}");
    }

    #[test]
    fn criterion_without_completes_is_rejected() {
        let text = r#"{"name":"c","apis":[
            {"id":"x:A.f/0","ownerType":"p.A","methodName":"f","kind":"criterion"}
        ]}"#;
        let doc = parse_kb_file("c.json", text).unwrap();
        assert!(merge_and_validate(vec![("c.json".into(), doc)]).is_err());
    }

    #[test]
    fn matches_one_arg_get_instance() {
        let kb = load_kb(&[]).unwrap();
        let ir = ir_of(
            "import javax.crypto.Cipher;\n\
             class A { void f() throws Exception {\n\
               Cipher c = Cipher.getInstance(\"AES/GCM/NoPadding\");\n\
             } }",
        );
        let spec = kb.match_call_site(&ir, 0).expect("should match");
        assert_eq!(spec.id, "jca:Cipher.getInstance/1");
        assert_eq!(spec.param_roles[0].role, ParamRole::Transformation);
    }

    #[test]
    fn provider_overload_matches_two_arg_form() {
        let kb = load_kb(&[]).unwrap();
        let ir = ir_of(
            "import javax.crypto.Cipher;\n\
             class A { void f(String t) throws Exception {\n\
               Cipher c = Cipher.getInstance(t, \"BC\");\n\
             } }",
        );
        let spec = kb.match_call_site(&ir, 0).expect("should match");
        assert_eq!(spec.arity(), 2);
        assert_eq!(spec.param_roles[1].role, ParamRole::Irrelevant);
    }

    #[test]
    fn non_crypto_call_does_not_match() {
        let kb = load_kb(&[]).unwrap();
        let ir = ir_of(
            "class A { void f(MyUtil u, byte[] d) { byte[] h = u.sha256(d); } }",
        );
        assert!(kb.match_call_site(&ir, 0).is_none());
    }

    #[test]
    fn wildcard_import_still_matches_owner() {
        let kb = load_kb(&[]).unwrap();
        let ir = ir_of(
            "import javax.crypto.*;\n\
             class A { void f() throws Exception {\n\
               Cipher c = Cipher.getInstance(\"AES\");\n\
             } }",
        );
        let spec = kb.match_call_site(&ir, 0).expect("wildcard should resolve");
        assert_eq!(spec.owner_type, "javax.crypto.Cipher");
    }

    #[test]
    fn chained_receiver_matches_through_produced_type() {
        let kb = load_kb(&[]).unwrap();
        let ir = ir_of(
            "import javax.crypto.KEM;\n\
             import java.security.PublicKey;\n\
             class A { void f(PublicKey pk) throws Exception {\n\
               KEM kem = KEM.getInstance(\"ML-KEM\");\n\
               Object enc = kem.newEncapsulator(pk).encapsulate();\n\
             } }",
        );
        let enc_site = ir
            .call_sites
            .iter()
            .find(|s| s.name == "encapsulate")
            .unwrap();
        let spec = kb.match_call_site(&ir, enc_site.id).expect("chained match");
        assert_eq!(spec.completes, vec!["encapsulate"]);
    }

    #[test]
    fn overload_disambiguates_by_value_kind() {
        let kb = load_kb(&[]).unwrap();
        // init(int, Key) vs init(int, Key, AlgorithmParameterSpec) by arity,
        // and 3-arg spec vs 3-arg SecureRandom overload by object type
        let ir = ir_of(
            "import javax.crypto.Cipher;\n\
             import javax.crypto.spec.IvParameterSpec;\n\
             import javax.crypto.SecretKey;\n\
             import java.security.SecureRandom;\n\
             class A { void f(SecretKey k, byte[] ivb) throws Exception {\n\
               Cipher c = Cipher.getInstance(\"AES\");\n\
               IvParameterSpec iv = new IvParameterSpec(ivb);\n\
               c.init(1, k, iv);\n\
               SecureRandom r = new SecureRandom();\n\
               c.init(1, k, r);\n\
             } }",
        );
        let inits: Vec<_> = ir
            .call_sites
            .iter()
            .filter(|s| s.name == "init")
            .collect();
        assert_eq!(inits.len(), 2);
        let spec_iv = kb.match_call_site(&ir, inits[0].id).unwrap();
        let spec_rng = kb.match_call_site(&ir, inits[1].id).unwrap();
        assert!(spec_iv.param_roles[2].role == ParamRole::Iv, "{}", spec_iv.id);
        assert!(spec_rng.param_roles[2].role == ParamRole::Seed, "{}", spec_rng.id);
    }

    #[test]
    fn id_pattern_matching() {
        assert!(KnowledgeBase::id_matches("jca:Cipher.init/2", "jca:Cipher.*"));
        assert!(KnowledgeBase::id_matches("jca:Cipher.init/2", "jca:Cipher.init/2"));
        assert!(!KnowledgeBase::id_matches("jca:CipherX.init/2", "jca:Cipher.*"));
        assert!(!KnowledgeBase::id_matches("jca:Mac.init/1", "jca:Cipher.*"));
    }
}
