//! Crypto-asset construction: each slice becomes one inventory entry.
//!
//! An asset describes one cryptographic operation in domain terms —
//! primitive, variant, mode, padding, key size, function — with the related
//! key material and code evidence attached. Properties come from the
//! knowledge base's value semantics applied to the constant-analysis
//! verdicts for the criterion's own call chain; material sizes may come from
//! producer chains (a generated key is as big as its generator was told to
//! make it). Conflicting explicit evidence is never silently resolved: the
//! asset keeps both evidences and is flagged incomplete.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use sha2::{Digest as _, Sha256};

use crate::constprop::Lattice;
use crate::frontend::SubjectProject;
use crate::ir::{CallSiteId, ProgramIr};
use crate::kb::semantics::resolve_semantics;
use crate::kb::{ApiKind, ApiSpec, KnowledgeBase, ParamRole};
use crate::location::Location;
use crate::slicer::{ProducerLink, Slice};
use crate::Value;

/// How a piece of evidence relates to the finding it supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum FindingType {
    /// The API call performing or configuring the operation.
    #[serde(rename = "FUNCTION_CALL")]
    FunctionCall,
    /// An argument carrying material or a parameter value.
    #[serde(rename = "ARGUMENT")]
    Argument,
    /// Where a property's value was introduced (e.g. the literal handed
    /// through a wrapper).
    #[serde(rename = "PROPERTY_SOURCE")]
    PropertySource,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Evidence {
    pub finding_type: FindingType,
    pub location: Location,
    /// Verbatim source text at the location.
    pub snippet: String,
}

/// What a piece of crypto material is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum MaterialKind {
    PrivateKey,
    PublicKey,
    SecretKey,
    Iv,
    Nonce,
    Salt,
    Seed,
    Password,
    Digest,
    Signature,
    Tag,
}

/// Where the material's value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum MaterialState {
    /// A constant in the scanned code.
    Hardcoded,
    /// Produced by an API call in the slice.
    Generated,
    /// Entered the program from outside the scanned code.
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CryptoMaterial {
    pub kind: MaterialKind,
    pub value_state: MaterialState,
    /// Display form of a hardcoded value.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
    /// Producing API for generated material.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub producer_api: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_bits: Option<u32>,
    pub evidence: Evidence,
}

/// Two calls gave explicit, different values for one property. The asset
/// keeps the first value and both evidences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PropertyConflict {
    pub key: String,
    pub kept: String,
    pub other: String,
    /// Indexes into the asset's evidence list.
    pub evidence: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Confidence {
    /// Missing values, exhausted budgets, ambiguity or conflicts: the asset
    /// may be partial.
    pub incomplete: bool,
    /// Several calling contexts merged into this asset.
    pub merged: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CryptoAsset {
    /// Stable hash of (criterion location, context).
    pub asset_id: String,
    /// Only algorithm assets are in scope.
    pub asset_type: String,
    /// encrypt, decrypt, sign, verify, digest, keygen, keyderive, tag,
    /// encapsulate or decapsulate. Always present.
    pub function: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primitive: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub padding: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_size: Option<i64>,
    /// Remaining resolved properties (iterations, tagBits, blockSize, …).
    pub properties: BTreeMap<String, Value>,
    pub materials: Vec<CryptoMaterial>,
    pub evidence: Vec<Evidence>,
    /// Property key → indexes into `evidence` backing that value.
    pub property_evidence: BTreeMap<String, Vec<usize>>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub conflicts: Vec<PropertyConflict>,
    /// Call-path summary the asset was observed under.
    pub context_note: String,
    pub confidence: Confidence,
    pub criterion_api: String,
    pub criterion_location: Location,
}

impl CryptoAsset {
    /// Primary evidence for a property, for rule references.
    pub fn property_ref(&self, key: &str) -> Option<&Evidence> {
        self.property_evidence
            .get(key)?
            .first()
            .map(|&i| &self.evidence[i])
    }

    /// The criterion call's own evidence; every asset has it.
    pub fn criterion_ref(&self) -> &Evidence {
        self.evidence
            .iter()
            .find(|e| {
                e.finding_type == FindingType::FunctionCall
                    && e.location == self.criterion_location
            })
            .or_else(|| self.evidence.first())
            .expect("assets always carry criterion evidence")
    }

    /// The property value as a display string, field or map alike.
    pub fn property(&self, key: &str) -> Option<String> {
        let field = match key {
            "function" => Some(self.function.clone()),
            "primitive" => return self.primitive.clone(),
            "variant" => return self.variant.clone(),
            "mode" => return self.mode.clone(),
            "padding" => return self.padding.clone(),
            "digest" => return self.digest.clone(),
            "keySize" => return self.key_size.map(|k| k.to_string()),
            _ => None,
        };
        field.or_else(|| self.properties.get(key).map(|v| v.to_string()))
    }
}

/// Calls on one receiver instance, ordered by statement position.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CallChain {
    pub calls: Vec<CallSiteId>,
    pub contains_criterion: bool,
}

/// The slice's related calls partitioned into same-instance chains, plus the
/// result-to-parameter links between them.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ChainGraph {
    /// Criterion chain first, then by first-call position.
    pub chains: Vec<CallChain>,
    pub links: Vec<ProducerLink>,
}

impl ChainGraph {
    pub fn criterion_chain(&self) -> &CallChain {
        self.chains
            .iter()
            .find(|c| c.contains_criterion)
            .expect("the criterion is always in a chain")
    }

    /// The chain a call belongs to, if any.
    pub fn chain_of(&self, site: CallSiteId) -> Option<&CallChain> {
        self.chains.iter().find(|c| c.calls.contains(&site))
    }
}

/// Partition a slice's related calls into same-instance chains rooted at the
/// criterion, with cross-chain producer links.
pub fn relate_api_calls(ir: &ProgramIr, slice: &Slice) -> ChainGraph {
    let mut chains: Vec<CallChain> = slice
        .instance_groups
        .iter()
        .map(|group| {
            let mut calls = group.clone();
            calls.sort_by_key(|&s| (ir.site(s).method, ir.site(s).stmt, s));
            CallChain {
                contains_criterion: calls.contains(&slice.criterion.site),
                calls,
            }
        })
        .collect();
    chains.sort_by_key(|c| {
        let first = c.calls.first().copied();
        (
            !c.contains_criterion,
            first.map(|s| {
                let loc = &ir.site(s).call_loc;
                (loc.file_name.clone(), loc.line, loc.start_column)
            }),
        )
    });
    ChainGraph {
        chains,
        links: slice.producer_links.clone(),
    }
}

/// Roles whose constant arguments carry algorithm properties rather than
/// material; their value locations become PROPERTY_SOURCE evidence.
const PROPERTY_ROLES: [ParamRole; 5] = [
    ParamRole::Transformation,
    ParamRole::Keysize,
    ParamRole::Opmode,
    ParamRole::Iterations,
    ParamRole::Taglen,
];

/// Override rank: later pipeline stages may override earlier ones' defaults
/// without a conflict; equal-rank disagreement is a conflict.
fn override_rank(kind: ApiKind) -> u8 {
    match kind {
        ApiKind::Instantiation | ApiKind::MaterialCtor => 0,
        ApiKind::Initialization | ApiKind::Update | ApiKind::Randomsource => 1,
        ApiKind::Keysource | ApiKind::Criterion => 2,
    }
}

struct PropState {
    value: Value,
    rank: u8,
    evidence: Vec<usize>,
}

struct AssetBuilder<'a> {
    ir: &'a ProgramIr,
    project: &'a SubjectProject,
    kb: &'a KnowledgeBase,
    slice: &'a Slice,
    evidence: Vec<Evidence>,
    evidence_of_call: BTreeMap<CallSiteId, usize>,
    props: BTreeMap<String, PropState>,
    conflicts: Vec<PropertyConflict>,
    incomplete: bool,
}

impl<'a> AssetBuilder<'a> {
    fn snippet(&self, loc: &Location) -> String {
        self.project
            .file(&loc.file_name)
            .and_then(|f| f.snippet(loc))
            .unwrap_or_default()
            .chars()
            .take(200)
            .collect()
    }

    fn push_evidence(&mut self, finding_type: FindingType, location: Location) -> usize {
        let snippet = self.snippet(&location);
        let ev = Evidence {
            finding_type,
            location,
            snippet,
        };
        if let Some(i) = self.evidence.iter().position(|e| *e == ev) {
            return i;
        }
        self.evidence.push(ev);
        self.evidence.len() - 1
    }

    fn call_evidence(&mut self, site: CallSiteId) -> usize {
        if let Some(&i) = self.evidence_of_call.get(&site) {
            return i;
        }
        let loc = self.ir.site(site).call_loc.clone();
        let i = self.push_evidence(FindingType::FunctionCall, loc);
        self.evidence_of_call.insert(site, i);
        i
    }

    /// Constant argument values for a call, `None` where unresolved.
    fn arg_constants(&self, site: CallSiteId) -> Vec<Option<Value>> {
        let s = self.ir.site(site);
        (0..s.args.len())
            .map(|i| {
                self.slice
                    .value_of(site, i)
                    .and_then(|cv| cv.as_constant().cloned())
            })
            .collect()
    }

    /// Fold one call's resolved properties into the asset, recording
    /// evidence and conflicts.
    fn apply_call(&mut self, site: CallSiteId, api: &ApiSpec) {
        let args = self.arg_constants(site);
        let call_ev = self.call_evidence(site);
        let rank = override_rank(api.kind);

        // Gather the property map; branchy (multi-valued) transformation
        // arguments resolve once per alternative so disagreements surface as
        // conflicts instead of being silently dropped.
        let resolved = self.resolve_with_alternatives(site, api, &args);
        let (base, alternative_conflicts) = resolved;

        // Evidence for where constant parameter values were introduced.
        let mut source_evs: Vec<usize> = Vec::new();
        let s = self.ir.site(site);
        for (i, p) in api.param_roles.iter().enumerate() {
            if !PROPERTY_ROLES.contains(&p.role) || i >= s.args.len() {
                continue;
            }
            if let Some(cv) = self.slice.value_of(site, i) {
                if cv.as_constant().is_some() {
                    let locs: Vec<Location> = cv.provenance.iter().cloned().collect();
                    for loc in locs {
                        source_evs.push(self.push_evidence(FindingType::PropertySource, loc));
                    }
                } else if !matches!(cv.lattice, Lattice::Bottom) {
                    // a property-bearing argument we could not resolve
                    self.incomplete = true;
                }
            }
        }

        for (key, value) in base {
            let mut evs = vec![call_ev];
            evs.extend(source_evs.iter().copied());
            self.apply_property(&key, value, rank, evs);
        }
        for c in alternative_conflicts {
            self.incomplete = true;
            self.conflicts.push(c);
        }
    }

    /// Resolve semantics; a MultiValue transformation argument yields the
    /// intersection of its alternatives plus conflict records for keys the
    /// alternatives disagree on (keeping the smallest value).
    fn resolve_with_alternatives(
        &mut self,
        site: CallSiteId,
        api: &ApiSpec,
        args: &[Option<Value>],
    ) -> (BTreeMap<String, Value>, Vec<PropertyConflict>) {
        let tf_idx = api.param_index_with_role(ParamRole::Transformation);
        let alternatives: Option<Vec<Value>> = tf_idx.and_then(|i| {
            match self.slice.value_of(site, i).map(|cv| &cv.lattice) {
                Some(Lattice::MultiValue(set)) => Some(set.iter().cloned().collect()),
                _ => None,
            }
        });
        let Some(alts) = alternatives else {
            return (resolve_semantics(self.kb, api, args), Vec::new());
        };
        let i = tf_idx.expect("alternatives imply a transformation param");
        let call_ev = self.call_evidence(site);

        let mut merged: BTreeMap<String, Value> = BTreeMap::new();
        let mut disagreeing: BTreeMap<String, BTreeSet<Value>> = BTreeMap::new();
        for (n, alt) in alts.iter().enumerate() {
            let mut a = args.to_vec();
            a[i] = Some(alt.clone());
            let r = resolve_semantics(self.kb, api, &a);
            if n == 0 {
                merged = r;
                continue;
            }
            for (k, v) in r {
                match merged.get(&k) {
                    Some(old) if *old == v => {}
                    Some(old) => {
                        let e = disagreeing.entry(k.clone()).or_default();
                        e.insert(old.clone());
                        e.insert(v);
                    }
                    None => {
                        disagreeing.entry(k).or_default().insert(v);
                    }
                }
            }
        }
        let mut conflicts = Vec::new();
        for (k, vals) in disagreeing {
            let mut it = vals.into_iter();
            let kept = match merged.get(&k) {
                Some(v) => v.clone(),
                None => it.next().expect("disagreement holds a value"),
            };
            let other = it
                .next()
                .map(|v| v.to_string())
                .unwrap_or_else(|| "absent".to_string());
            conflicts.push(PropertyConflict {
                key: k.clone(),
                kept: kept.to_string(),
                other,
                evidence: vec![call_ev],
            });
            merged.insert(k, kept);
        }
        (merged, conflicts)
    }

    fn apply_property(&mut self, key: &str, value: Value, rank: u8, evs: Vec<usize>) {
        match self.props.get_mut(key) {
            None => {
                self.props.insert(
                    key.to_string(),
                    PropState {
                        value,
                        rank,
                        evidence: evs,
                    },
                );
            }
            Some(state) if state.value == value => {
                for e in evs {
                    if !state.evidence.contains(&e) {
                        state.evidence.push(e);
                    }
                }
            }
            Some(state) if rank > state.rank => {
                // a more specific stage overrides an earlier default
                state.value = value;
                state.rank = rank;
                state.evidence = evs;
            }
            Some(state) => {
                // equal or lower rank with a different value: conflict —
                // keep the standing value, keep both evidences, flag it
                let mut evidence = state.evidence.clone();
                evidence.extend(evs.iter().copied());
                evidence.dedup();
                self.conflicts.push(PropertyConflict {
                    key: key.to_string(),
                    kept: state.value.to_string(),
                    other: value.to_string(),
                    evidence,
                });
                for e in evs {
                    if !state.evidence.contains(&e) {
                        state.evidence.push(e);
                    }
                }
                self.incomplete = true;
            }
        }
    }

    /// Resolved property map of a producer chain (used for generated-key
    /// sizes): later calls override earlier ones, no evidence tracking.
    fn chain_properties(&self, chain: &CallChain) -> BTreeMap<String, Value> {
        let mut out = BTreeMap::new();
        for &site in &chain.calls {
            if let Some(api) = self.kb.match_call_site(self.ir, site) {
                let args = self.arg_constants(site);
                out.extend(resolve_semantics(self.kb, api, &args));
            }
        }
        out
    }
}

/// Material kind for a key-role argument: producer type first (a keypair's
/// private half stays private through an opaque `Key` parameter), then the
/// parameter's declared acceptable types.
fn key_kind(api_param_types: &[String], producer_api: Option<&ApiSpec>) -> MaterialKind {
    if let Some(p) = producer_api {
        if let Some(t) = &p.produces_instance_of {
            if t.contains("PrivateKey") {
                return MaterialKind::PrivateKey;
            }
            if t.contains("PublicKey") {
                return MaterialKind::PublicKey;
            }
        }
    }
    let private = api_param_types.iter().any(|t| t.contains("PrivateKey"));
    let public = api_param_types
        .iter()
        .any(|t| t.contains("PublicKey") || t.contains("Certificate"));
    match (private, public) {
        (true, false) => MaterialKind::PrivateKey,
        (false, true) => MaterialKind::PublicKey,
        _ => MaterialKind::SecretKey,
    }
}

/// Build the asset for one slice.
pub fn build_asset(
    ir: &ProgramIr,
    project: &SubjectProject,
    kb: &KnowledgeBase,
    slice: &Slice,
    chains: &ChainGraph,
) -> CryptoAsset {
    let mut b = AssetBuilder {
        ir,
        project,
        kb,
        slice,
        evidence: Vec::new(),
        evidence_of_call: BTreeMap::new(),
        props: BTreeMap::new(),
        conflicts: Vec::new(),
        incomplete: slice.incomplete,
    };

    // Criterion-chain calls carry the asset's properties, applied in
    // statement order so initialization overrides instantiation defaults.
    let criterion_chain = chains.criterion_chain().clone();
    for &site in &criterion_chain.calls {
        if let Some(api) = kb.match_call_site(ir, site) {
            b.apply_call(site, api);
        }
    }
    // Material constructors feeding the operation carry its parameters too:
    // a PBEKeySpec holds the derivation's iteration count, a
    // GCMParameterSpec its tag length.
    let mut ctor_sites: Vec<CallSiteId> = chains
        .links
        .iter()
        .filter(|l| criterion_chain.calls.contains(&l.consumer))
        .map(|l| l.producer)
        .filter(|&p| {
            kb.match_call_site(ir, p)
                .is_some_and(|a| a.kind == ApiKind::MaterialCtor)
        })
        .collect();
    ctor_sites.sort();
    ctor_sites.dedup();
    for site in ctor_sites {
        if let Some(api) = kb.match_call_site(ir, site) {
            b.apply_call(site, api);
        }
    }
    // Every related call is evidence, whether or not it set a property.
    for chain in &chains.chains {
        for &site in &chain.calls {
            b.call_evidence(site);
        }
    }

    // The operation. Initialization evidence (opmode, initSign/initVerify)
    // wins; otherwise the criterion's single completion; an ambiguous
    // completion takes the default and marks the asset incomplete.
    let function = match b.props.get("function") {
        Some(s) => s.value.to_string(),
        None => {
            if slice.criterion.completes.len() > 1 {
                b.incomplete = true;
            }
            slice
                .criterion
                .completes
                .first()
                .cloned()
                .unwrap_or_else(|| "unknown".to_string())
        }
    };
    if !b.props.contains_key("function") {
        let ev = b.call_evidence(slice.criterion.site);
        b.props.insert(
            "function".into(),
            PropState {
                value: Value::Str(function.clone()),
                rank: override_rank(ApiKind::Criterion),
                evidence: vec![ev],
            },
        );
    }

    // Materials: traced parameter materials plus the criterion's own output.
    let producer_of = |site: CallSiteId| -> Option<&ApiSpec> { kb.match_call_site(ir, site) };
    let mut materials: Vec<CryptoMaterial> = Vec::new();
    let aead = b
        .props
        .get("primitive")
        .map(|p| p.value == Value::Str("ae".into()))
        .unwrap_or(false);
    for t in &slice.materials {
        let consumer_api = kb
            .api_by_id(&t.consumer_api)
            .expect("trace consumer api exists");
        let param_types: &[String] = consumer_api
            .param_roles
            .get(t.param_index)
            .map(|p| p.object_types.as_slice())
            .unwrap_or(&[]);
        let producer_spec = t.producer.and_then(producer_of);
        let kind = match t.role {
            ParamRole::Key => key_kind(param_types, producer_spec),
            ParamRole::Iv => {
                if aead {
                    MaterialKind::Nonce
                } else {
                    MaterialKind::Iv
                }
            }
            ParamRole::Salt => MaterialKind::Salt,
            ParamRole::Seed => MaterialKind::Seed,
            ParamRole::Password => MaterialKind::Password,
            _ => continue,
        };

        let constant = t.value.as_constant().cloned();
        let origin_external = producer_spec
            .map(|p| p.properties.get("origin").map(String::as_str) == Some("external"))
            .unwrap_or(false);
        let (value_state, value, producer_api) = match (&constant, &t.producer) {
            (Some(v), _) => (MaterialState::Hardcoded, Some(v.to_string()), None),
            (None, Some(_)) if origin_external => {
                (MaterialState::External, None, t.producer_api.clone())
            }
            (None, Some(_)) => (MaterialState::Generated, None, t.producer_api.clone()),
            (None, None) => (MaterialState::External, None, None),
        };

        // Hardcoded material points at where the constant was introduced.
        let ev_loc = match (&value_state, t.value.provenance.first()) {
            (MaterialState::Hardcoded, Some(loc)) => loc.clone(),
            _ => t.location.clone(),
        };
        let ev_idx = b.push_evidence(FindingType::Argument, ev_loc);

        // Size: the value itself, or the producer chain's key size.
        let size_bits = match value_state {
            MaterialState::Hardcoded => constant.as_ref().and_then(Value::size_bits),
            MaterialState::Generated => t
                .producer
                .and_then(|p| chains.chain_of(p))
                .and_then(|c| b.chain_properties(c).get("keySize").and_then(Value::as_int))
                .map(|n| n as u32),
            MaterialState::External => None,
        };

        if matches!(value_state, MaterialState::External) && t.external_input {
            // external inputs leave the asset's key facts unknown
            b.incomplete = true;
        }
        materials.push(CryptoMaterial {
            kind,
            value_state,
            value,
            producer_api,
            size_bits,
            evidence: b.evidence[ev_idx].clone(),
        });
    }

    // Key size: explicit keysize parameter in the criterion chain > key
    // material size > transformation default (already present if any).
    let explicit_keysize = criterion_chain.calls.iter().any(|&site| {
        kb.match_call_site(ir, site).is_some_and(|api| {
            api.param_index_with_role(ParamRole::Keysize)
                .and_then(|i| slice.value_of(site, i))
                .and_then(|cv| cv.as_constant())
                .is_some()
        })
    });
    if !explicit_keysize {
        let material_bits = materials
            .iter()
            .find(|m| {
                matches!(
                    m.kind,
                    MaterialKind::SecretKey | MaterialKind::PrivateKey | MaterialKind::PublicKey
                ) && m.size_bits.is_some()
            })
            .and_then(|m| m.size_bits);
        if let Some(bits) = material_bits {
            let ev = materials
                .iter()
                .find(|m| m.size_bits == Some(bits))
                .map(|m| m.evidence.clone());
            let ev_idx = ev.map(|e| b.push_evidence(e.finding_type, e.location));
            b.props.insert(
                "keySize".into(),
                PropState {
                    value: Value::Int(bits as i64),
                    rank: override_rank(ApiKind::Keysource),
                    evidence: ev_idx.into_iter().collect(),
                },
            );
        }
    }

    // The criterion's own output is material too (a digest, signature, tag
    // or generated key).
    let crit_ev_idx = b.call_evidence(slice.criterion.site);
    let crit_ev = b.evidence[crit_ev_idx].clone();
    let key_size_now = b.props.get("keySize").and_then(|p| p.value.as_int());
    let result_kinds: Vec<MaterialKind> = match function.as_str() {
        "digest" => vec![MaterialKind::Digest],
        "sign" => vec![MaterialKind::Signature],
        "tag" => vec![MaterialKind::Tag],
        "keyderive" => vec![MaterialKind::SecretKey],
        "encapsulate" | "decapsulate" => vec![MaterialKind::SecretKey],
        "keygen" => {
            let produces = kb
                .api_by_id(&slice.criterion.api)
                .and_then(|a| a.produces_instance_of.clone())
                .unwrap_or_default();
            if produces.contains("KeyPair") {
                vec![MaterialKind::PrivateKey, MaterialKind::PublicKey]
            } else {
                vec![MaterialKind::SecretKey]
            }
        }
        _ => vec![],
    };
    for kind in result_kinds {
        let size_bits = match kind {
            MaterialKind::SecretKey | MaterialKind::PrivateKey | MaterialKind::PublicKey => {
                key_size_now.map(|n| n as u32)
            }
            _ => None,
        };
        materials.push(CryptoMaterial {
            kind,
            value_state: MaterialState::Generated,
            value: None,
            producer_api: Some(slice.criterion.api.clone()),
            size_bits,
            evidence: crit_ev.clone(),
        });
    }
    materials.sort_by(|a, c| (a.kind, &a.evidence.location).cmp(&(c.kind, &c.evidence.location)));

    // Assemble. Evidence first so lifted fields keep theirs.
    let mut property_evidence: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (key, state) in &b.props {
        if !state.evidence.is_empty() {
            property_evidence.insert(key.clone(), state.evidence.clone());
        }
    }
    let mut take = |key: &str| -> Option<Value> { b.props.remove(key).map(|p| p.value) };
    let primitive = take("primitive").map(|v| v.to_string());
    let variant = take("variant").map(|v| v.to_string());
    let mode = take("mode").map(|v| v.to_string());
    let padding = take("padding").map(|v| v.to_string());
    let digest = take("digest").map(|v| v.to_string());
    let key_size = take("keySize").and_then(|v| v.as_int());
    let _ = take("function");
    let leftover: BTreeMap<String, Value> = std::mem::take(&mut b.props)
        .into_iter()
        .map(|(k, s)| (k, s.value))
        .collect();

    let asset_id = stable_id(&[
        &slice.criterion.location.file_name,
        &slice.criterion.location.line.to_string(),
        &slice.criterion.location.start_column.to_string(),
        &slice.context_label,
    ]);

    CryptoAsset {
        asset_id,
        asset_type: "algorithm".into(),
        function,
        primitive,
        variant,
        mode,
        padding,
        digest,
        key_size,
        properties: leftover,
        materials,
        evidence: b.evidence,
        property_evidence,
        conflicts: b.conflicts,
        context_note: slice.context_label.clone(),
        confidence: Confidence {
            incomplete: b.incomplete,
            merged: slice.merged,
        },
        criterion_api: slice.criterion.api.clone(),
        criterion_location: slice.criterion.location.clone(),
    }
}

fn stable_id(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0]);
    }
    let digest = h.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Build and deduplicate assets for all slices.
pub fn build_assets(
    ir: &ProgramIr,
    project: &SubjectProject,
    kb: &KnowledgeBase,
    slices: &[Slice],
) -> Vec<CryptoAsset> {
    let assets = slices
        .iter()
        .map(|s| {
            let chains = relate_api_calls(ir, s);
            build_asset(ir, project, kb, s, &chains)
        })
        .collect();
    dedupe_assets(assets)
}

/// Merge assets that differ only in calling context: same criterion, same
/// crypto facts. The merge keeps every context (concatenated note), unions
/// evidence, and derives its id from the member ids.
pub fn dedupe_assets(assets: Vec<CryptoAsset>) -> Vec<CryptoAsset> {
    let mut groups: BTreeMap<String, Vec<CryptoAsset>> = BTreeMap::new();
    let mut order: Vec<String> = Vec::new();
    for a in assets {
        let key = serde_json::to_string(&(
            &a.criterion_location,
            &a.function,
            &a.primitive,
            &a.variant,
            &a.mode,
            &a.padding,
            &a.digest,
            &a.key_size,
            &a.properties,
            a.materials
                .iter()
                .map(|m| (m.kind, m.value_state, &m.value, m.size_bits, &m.producer_api))
                .collect::<Vec<_>>(),
        ))
        .expect("asset key serializes");
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(a);
    }

    let mut out = Vec::new();
    for key in order {
        let mut members = groups.remove(&key).expect("group exists");
        if members.len() == 1 {
            out.push(members.pop().expect("one member"));
            continue;
        }
        let ids: Vec<String> = members.iter().map(|m| m.asset_id.clone()).collect();
        let mut merged = members.remove(0);
        merged.asset_id = stable_id(&ids.iter().map(String::as_str).collect::<Vec<_>>());
        merged.confidence.merged = true;
        let notes: Vec<String> = std::iter::once(merged.context_note.clone())
            .chain(members.iter().map(|m| m.context_note.clone()))
            .collect();
        merged.context_note = notes.join("; ");
        for m in members {
            merged.confidence.incomplete |= m.confidence.incomplete;
            for ev in m.evidence {
                if !merged.evidence.contains(&ev) {
                    merged.evidence.push(ev);
                }
            }
        }
        out.push(merged);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constprop::{propagate, ConstOptions, ConstResults};
    use crate::frontend;
    use crate::ir::build_program_ir;
    use crate::kb::load_kb;
    use crate::slicer::{slice_program, SliceOptions};

    struct Scan {
        project: SubjectProject,
        ir: ProgramIr,
        kb: KnowledgeBase,
        consts: ConstResults,
    }

    fn scan(src: &str) -> Scan {
        scan_files(&[("T.java", src)])
    }

    fn scan_files(files: &[(&str, &str)]) -> Scan {
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
        let project = frontend::SubjectProject {
            root_dir: ".".into(),
            files: sources,
            parse_errors: vec![],
        };
        let ir = build_program_ir(&project);
        let kb = load_kb(&[]).expect("builtin kb");
        let consts = propagate(&ir, &kb.constants, &ConstOptions::default());
        Scan {
            project,
            ir,
            kb,
            consts,
        }
    }

    fn assets_of(s: &Scan) -> Vec<CryptoAsset> {
        let slices = slice_program(&s.ir, &s.kb, &s.consts, &SliceOptions::default());
        build_assets(&s.ir, &s.project, &s.kb, &slices)
    }

    #[test]
    fn encrypt_asset_resolves_transformation_and_opmode() {
        let s = scan(
            "import javax.crypto.*;\n\
             class A {\n\
               byte[] go(SecretKey k, byte[] d) throws Exception {\n\
                 Cipher c = Cipher.getInstance(\"AES/GCM/NoPadding\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 return c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        assert_eq!(a.asset_type, "algorithm");
        assert_eq!(a.function, "encrypt");
        assert_eq!(a.primitive.as_deref(), Some("ae"), "GCM is authenticated");
        assert_eq!(a.variant.as_deref(), Some("AES"));
        assert_eq!(a.mode.as_deref(), Some("GCM"));
        assert_eq!(a.padding.as_deref(), Some("NoPadding"));
        assert!(!a.evidence.is_empty());
        assert!(a.property_evidence.contains_key("function"));
        // external key leaves the asset incomplete but still typed
        assert!(a.confidence.incomplete);
        let key = a
            .materials
            .iter()
            .find(|m| m.kind == MaterialKind::SecretKey)
            .expect("key material");
        assert_eq!(key.value_state, MaterialState::External);
    }

    #[test]
    fn signature_asset_splits_digest_and_carries_sign_function() {
        let s = scan(
            "import java.security.*;\n\
             class B {\n\
               byte[] go(PrivateKey p, byte[] d) throws Exception {\n\
                 Signature sg = Signature.getInstance(\"SHA256withECDSA\");\n\
                 sg.initSign(p);\n\
                 sg.update(d);\n\
                 return sg.sign();\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        assert_eq!(a.function, "sign");
        assert_eq!(a.primitive.as_deref(), Some("signature"));
        assert_eq!(a.variant.as_deref(), Some("ECDSA"));
        assert_eq!(a.digest.as_deref(), Some("SHA-256"));
        // key kind from the parameter's declared type
        let key = a
            .materials
            .iter()
            .find(|m| matches!(m.kind, MaterialKind::PrivateKey))
            .expect("private key material");
        assert_eq!(key.value_state, MaterialState::External);
        // the result is signature material
        assert!(a
            .materials
            .iter()
            .any(|m| m.kind == MaterialKind::Signature && m.value_state == MaterialState::Generated));
    }

    #[test]
    fn keygen_asset_gets_explicit_size_and_keypair_materials() {
        let s = scan(
            "import java.security.*;\n\
             class C {\n\
               KeyPair go() throws Exception {\n\
                 KeyPairGenerator g = KeyPairGenerator.getInstance(\"RSA\");\n\
                 g.initialize(2048);\n\
                 return g.generateKeyPair();\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        assert_eq!(a.function, "keygen");
        assert_eq!(a.primitive.as_deref(), Some("pke"));
        assert_eq!(a.variant.as_deref(), Some("RSA"));
        assert_eq!(a.key_size, Some(2048));
        let kinds: Vec<MaterialKind> = a.materials.iter().map(|m| m.kind).collect();
        assert!(kinds.contains(&MaterialKind::PrivateKey));
        assert!(kinds.contains(&MaterialKind::PublicKey));
        assert!(a
            .materials
            .iter()
            .all(|m| m.value_state == MaterialState::Generated));
        assert!(!a.confidence.incomplete);
    }

    #[test]
    fn hardcoded_key_bytes_override_default_key_size() {
        let s = scan(
            "import javax.crypto.*;\n\
             import javax.crypto.spec.*;\n\
             class D {\n\
               void go(byte[] d) throws Exception {\n\
                 byte[] kb = {1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,\n\
                              17,18,19,20,21,22,23,24,25,26,27,28,29,30,31,32};\n\
                 SecretKeySpec ks = new SecretKeySpec(kb, \"AES\");\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, ks);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        // bare "AES" default is 128; 32 hardcoded key bytes override it
        assert_eq!(a.key_size, Some(256));
        let key = a
            .materials
            .iter()
            .find(|m| m.kind == MaterialKind::SecretKey)
            .expect("key material");
        assert_eq!(key.value_state, MaterialState::Hardcoded);
        assert_eq!(key.size_bits, Some(256));
        assert!(key.value.as_deref().unwrap_or("").starts_with("0x0102"));
        // hardcoded material evidence points at the introducing line
        assert_eq!(key.evidence.location.line, 5);
    }

    #[test]
    fn generated_key_size_comes_from_producer_chain() {
        let s = scan(
            "import javax.crypto.*;\n\
             class E {\n\
               void go(byte[] d) throws Exception {\n\
                 KeyGenerator kg = KeyGenerator.getInstance(\"AES\");\n\
                 kg.init(256);\n\
                 SecretKey k = kg.generateKey();\n\
                 Cipher c = Cipher.getInstance(\"AES/GCM/NoPadding\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        // the cipher asset and the keygen asset
        assert_eq!(assets.len(), 2);
        let cipher = assets
            .iter()
            .find(|a| a.criterion_api == "jca:Cipher.doFinal/1")
            .expect("cipher asset");
        assert_eq!(cipher.key_size, Some(256), "size flows from kg.init(256)");
        let key = cipher
            .materials
            .iter()
            .find(|m| m.kind == MaterialKind::SecretKey)
            .unwrap();
        assert_eq!(key.value_state, MaterialState::Generated);
        assert_eq!(
            key.producer_api.as_deref(),
            Some("jca:KeyGenerator.generateKey/0")
        );
        assert_eq!(key.size_bits, Some(256));

        let keygen = assets
            .iter()
            .find(|a| a.criterion_api == "jca:KeyGenerator.generateKey/0")
            .expect("keygen asset");
        assert_eq!(keygen.function, "keygen");
        assert_eq!(keygen.key_size, Some(256));
        assert_eq!(keygen.variant.as_deref(), Some("AES"));
    }

    #[test]
    fn keystore_key_is_external_and_not_a_keygen_asset() {
        let s = scan(
            "import java.security.*;\n\
             import javax.crypto.*;\n\
             class F {\n\
               void go(KeyStore ks, char[] pw, byte[] d) throws Exception {\n\
                 Key key = ks.getKey(\"alias\", pw);\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, key);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1, "key loading is not key generation");
        let a = &assets[0];
        let key = a
            .materials
            .iter()
            .find(|m| m.kind == MaterialKind::SecretKey)
            .expect("key material");
        assert_eq!(key.value_state, MaterialState::External);
        assert_eq!(key.producer_api.as_deref(), Some("jca:KeyStore.getKey/2"));
    }

    #[test]
    fn wrapper_value_contexts_stay_separate_but_identical_contexts_merge() {
        let distinct = scan(
            "import javax.crypto.*;\n\
             class W {\n\
               void both(byte[] d) throws Exception { enc(\"AES\", d); enc(\"DES\", d); }\n\
               void enc(String alg, byte[] d) throws Exception {\n\
                 Cipher c = Cipher.getInstance(alg);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let a1 = assets_of(&distinct);
        assert_eq!(a1.len(), 2, "different values: two assets");
        let variants: BTreeSet<Option<&str>> =
            a1.iter().map(|a| a.variant.as_deref()).collect();
        assert_eq!(variants, BTreeSet::from([Some("AES"), Some("DES")]));

        let same = scan(
            "import javax.crypto.*;\n\
             class S {\n\
               void both(byte[] d) throws Exception { enc(\"AES\", d); enc(\"AES\", d); }\n\
               void enc(String alg, byte[] d) throws Exception {\n\
                 Cipher c = Cipher.getInstance(alg);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let a2 = assets_of(&same);
        assert_eq!(a2.len(), 1, "identical values merge into one asset");
        assert!(a2[0].confidence.merged);
        assert!(a2[0].context_note.contains("; "), "both contexts noted");
    }

    #[test]
    fn no_criterion_no_asset() {
        let s = scan(
            "import javax.crypto.*;\n\
             class N {\n\
               Cipher make(SecretKey k) throws Exception {\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 return c;\n\
               }\n\
             }\n",
        );
        // getInstance/init alone complete nothing
        assert!(assets_of(&s).is_empty());
    }

    #[test]
    fn conflicting_reinitialization_keeps_both_evidences() {
        let s = scan(
            "import javax.crypto.*;\n\
             class X {\n\
               void go(SecretKey k, byte[] d) throws Exception {\n\
                 Cipher c = Cipher.getInstance(\"AES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 c.init(Cipher.DECRYPT_MODE, k);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        assert!(a.confidence.incomplete, "conflicting opmodes flagged");
        let c = a
            .conflicts
            .iter()
            .find(|c| c.key == "function")
            .expect("function conflict recorded");
        assert!(c.evidence.len() >= 2, "both init calls referenced");
        assert_eq!(a.function, "encrypt", "first explicit value kept");
    }

    #[test]
    fn branch_dependent_transformation_conflicts_not_dropped() {
        let s = scan(
            "import javax.crypto.*;\n\
             class Y {\n\
               void go(boolean strong, SecretKey k, byte[] d) throws Exception {\n\
                 String alg = \"DES\";\n\
                 if (strong) { alg = \"AES\"; }\n\
                 Cipher c = Cipher.getInstance(alg);\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        assert!(a.confidence.incomplete);
        assert!(
            a.conflicts.iter().any(|c| c.key == "variant"),
            "variant disagreement recorded: {:?}",
            a.conflicts
        );
        // deterministic keep: the alternatives sort and the smallest wins
        assert_eq!(a.variant.as_deref(), Some("AES"));
    }

    #[test]
    fn snippets_quote_the_source() {
        let s = scan(
            "import java.security.*;\n\
             class Z {\n\
               byte[] go(byte[] d) throws Exception {\n\
                 return MessageDigest.getInstance(\"MD5\").digest(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        assert_eq!(a.function, "digest");
        assert_eq!(a.variant.as_deref(), Some("MD5"));
        assert!(
            a.evidence
                .iter()
                .any(|e| e.snippet.contains("getInstance(\"MD5\")")),
            "evidence quotes source: {:?}",
            a.evidence
        );
        // digest result material present
        assert!(a
            .materials
            .iter()
            .any(|m| m.kind == MaterialKind::Digest));
    }

    #[test]
    fn every_property_has_evidence() {
        let s = scan(
            "import javax.crypto.*;\n\
             import javax.crypto.spec.*;\n\
             class P {\n\
               void go(byte[] d) throws Exception {\n\
                 byte[] kb = {1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16};\n\
                 byte[] iv = {9,9,9,9,9,9,9,9,9,9,9,9,9,9,9,9};\n\
                 SecretKeySpec ks = new SecretKeySpec(kb, \"AES\");\n\
                 Cipher c = Cipher.getInstance(\"AES/CBC/PKCS5Padding\");\n\
                 c.init(Cipher.ENCRYPT_MODE, ks, new IvParameterSpec(iv));\n\
                 c.doFinal(d);\n\
               }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 1);
        let a = &assets[0];
        for (key, evs) in &a.property_evidence {
            assert!(
                !evs.is_empty() && evs.iter().all(|&i| i < a.evidence.len()),
                "property {key} lacks evidence"
            );
        }
        assert!(a.property_evidence.contains_key("function"));
        // materials: hardcoded key and iv with introducing locations
        let key = a.materials.iter().find(|m| m.kind == MaterialKind::SecretKey).unwrap();
        assert_eq!(key.value_state, MaterialState::Hardcoded);
        assert_eq!(key.evidence.location.line, 5);
        let iv = a.materials.iter().find(|m| m.kind == MaterialKind::Iv).unwrap();
        assert_eq!(iv.value_state, MaterialState::Hardcoded);
        assert_eq!(iv.evidence.location.line, 6);
    }

    #[test]
    fn dedupe_is_identity_for_singletons_and_orders_stably() {
        let s = scan(
            "import java.security.*;\n\
             class Q {\n\
               void a(byte[] d) throws Exception { MessageDigest.getInstance(\"SHA-256\").digest(d); }\n\
               void b(byte[] d) throws Exception { MessageDigest.getInstance(\"MD5\").digest(d); }\n\
             }\n",
        );
        let assets = assets_of(&s);
        assert_eq!(assets.len(), 2);
        // order follows criterion position
        assert!(assets[0].criterion_location.line < assets[1].criterion_location.line);
        let again = dedupe_assets(assets.clone());
        assert_eq!(again.len(), 2);
        assert_eq!(again[0].asset_id, assets[0].asset_id);
    }
}
