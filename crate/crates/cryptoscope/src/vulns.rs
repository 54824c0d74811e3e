//! Vulnerability rules over the asset inventory.
//!
//! Every rule reads a [`CryptoAsset`] and a [`PolicySet`] — nothing else.
//! The rules never see syntax, parse trees or data-flow state, so the same
//! rule set gives the same verdict no matter what language or library the
//! asset was extracted from. Reports follow a fixed external schema
//! (`vulnerabilityId`, `classification`, `vulnerabilityScore`,
//! `vulnerabilityDocumentationReference`, `debugMessage`, `references`).

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::assets::{CryptoAsset, Evidence, FindingType, MaterialKind, MaterialState};
use crate::kb::PolicySet;
use crate::location::Location;

/// Evidence location in the report schema: single line, no `endLine`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RefLocation {
    pub file_name: String,
    pub line: u32,
    pub start_column: u32,
    pub end_column: u32,
}

impl From<&Location> for RefLocation {
    fn from(loc: &Location) -> Self {
        RefLocation {
            file_name: loc.file_name.clone(),
            line: loc.line,
            start_column: loc.start_column,
            // A multi-line span projects to its first line.
            end_column: if loc.end_line == loc.line {
                loc.end_column
            } else {
                loc.start_column
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RefContext {
    #[serde(rename = "type")]
    pub context_type: FindingType,
    pub location: RefLocation,
}

/// One piece of evidence backing a finding: which asset field or material
/// was the problem, its value, and where in the code it is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VulnReference {
    #[serde(rename = "type")]
    pub ref_type: String,
    pub value: String,
    pub context: RefContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct VulnerabilityReport {
    pub vulnerability_id: String,
    pub classification: String,
    pub vulnerability_score: String,
    pub vulnerability_documentation_reference: String,
    pub debug_message: String,
    pub references: Vec<VulnReference>,
}

/// A rule match before ids and severities are assigned.
#[derive(Debug, Clone)]
struct Finding {
    cwe: &'static str,
    debug_message: String,
    references: Vec<VulnReference>,
}

fn reference(ref_type: &str, value: impl Into<String>, ev: &Evidence) -> VulnReference {
    VulnReference {
        ref_type: ref_type.to_string(),
        value: value.into(),
        context: RefContext {
            context_type: ev.finding_type,
            location: RefLocation::from(&ev.location),
        },
    }
}

/// Evidence for an asset property, falling back to the criterion call.
fn property_evidence<'a>(asset: &'a CryptoAsset, key: &str) -> &'a Evidence {
    asset.property_ref(key).unwrap_or_else(|| asset.criterion_ref())
}

/// One vulnerability rule: a CWE id plus a predicate producing findings.
struct VulnRule {
    cwe: &'static str,
    check: fn(&CryptoAsset, &PolicySet) -> Vec<Finding>,
}

/// Material kinds that carry key-like secrets for the hardcoded-key rule.
const KEY_LIKE: [MaterialKind; 3] = [
    MaterialKind::SecretKey,
    MaterialKind::PrivateKey,
    MaterialKind::PublicKey,
];

/// Primitives where a block mode is a real choice (`RSA/ECB/...` is a
/// naming artifact of the API, not an actual mode of operation).
const MODED_PRIMITIVES: [&str; 3] = ["blockcipher", "streamcipher", "ae"];

fn rule_cwe259(asset: &CryptoAsset, _policy: &PolicySet) -> Vec<Finding> {
    asset
        .materials
        .iter()
        .filter(|m| m.kind == MaterialKind::Password && m.value_state == MaterialState::Hardcoded)
        .map(|m| Finding {
            cwe: "cwe259",
            debug_message: "Use of hard-coded password".to_string(),
            references: vec![reference(
                "password",
                m.value.clone().unwrap_or_else(|| "password".into()),
                &m.evidence,
            )],
        })
        .collect()
}

fn rule_cwe321(asset: &CryptoAsset, _policy: &PolicySet) -> Vec<Finding> {
    asset
        .materials
        .iter()
        .filter(|m| m.value_state == MaterialState::Hardcoded)
        .filter_map(|m| {
            let (ref_type, what) = if KEY_LIKE.contains(&m.kind) {
                ("key", "cryptographic key")
            } else if matches!(m.kind, MaterialKind::Iv | MaterialKind::Nonce) {
                ("iv", "initialization vector")
            } else if m.kind == MaterialKind::Salt {
                ("salt", "salt")
            } else {
                return None;
            };
            Some(Finding {
                cwe: "cwe321",
                debug_message: format!("Use of hard-coded {what}"),
                references: vec![reference(
                    ref_type,
                    m.value.clone().unwrap_or_else(|| ref_type.into()),
                    &m.evidence,
                )],
            })
        })
        .collect()
}

fn rule_cwe326(asset: &CryptoAsset, policy: &PolicySet) -> Vec<Finding> {
    let (Some(variant), Some(bits)) = (&asset.variant, asset.key_size) else {
        return vec![];
    };
    let Some(&min) = policy.min_asym_key_bits.get(variant) else {
        return vec![];
    };
    if bits >= min {
        return vec![];
    }
    vec![Finding {
        cwe: "cwe326",
        debug_message: format!(
            "Inadequate encryption strength: {variant} key of {bits} bits (minimum {min})"
        ),
        references: vec![
            reference(
                "keySize",
                bits.to_string(),
                property_evidence(asset, "keySize"),
            ),
            reference("variant", variant, property_evidence(asset, "variant")),
        ],
    }]
}

fn rule_cwe327(asset: &CryptoAsset, policy: &PolicySet) -> Vec<Finding> {
    let mut out = Vec::new();
    if let Some(variant) = &asset.variant {
        if policy.weak_variants.contains(variant) {
            out.push(Finding {
                cwe: "cwe327",
                debug_message: format!(
                    "Use of broken or risky cryptographic algorithm: {variant}"
                ),
                references: vec![reference(
                    "variant",
                    variant,
                    property_evidence(asset, "variant"),
                )],
            });
        }
        if policy.report_quantum_unsafe && policy.quantum_unsafe.contains(variant) {
            out.push(Finding {
                cwe: "cwe327",
                debug_message: format!("Quantum-unsafe cryptographic algorithm: {variant}"),
                references: vec![reference(
                    "variant",
                    variant,
                    property_evidence(asset, "variant"),
                )],
            });
        }
    }
    let moded = asset
        .primitive
        .as_deref()
        .is_some_and(|p| MODED_PRIMITIVES.contains(&p));
    if let Some(mode) = &asset.mode {
        if moded && policy.weak_modes.contains(mode) {
            out.push(Finding {
                cwe: "cwe327",
                debug_message: format!(
                    "Use of broken or risky cryptographic algorithm: {mode} mode"
                ),
                references: vec![reference("mode", mode, property_evidence(asset, "mode"))],
            });
        }
    }
    out
}

fn rule_cwe328(asset: &CryptoAsset, policy: &PolicySet) -> Vec<Finding> {
    // The hash in use is the variant of a hash-primitive asset, or the
    // digest a composite scheme (HMAC, SHA1withRSA, PBE) was split into.
    // Following both fields is what lets an HMAC-MD5 or an MD5-based PBE
    // register as a weak-hash use even though the asset's own primitive
    // is mac or kdf.
    let mut out = Vec::new();
    if asset.primitive.as_deref() == Some("hash") {
        if let Some(variant) = &asset.variant {
            if policy.weak_hashes.contains(variant) {
                out.push(Finding {
                    cwe: "cwe328",
                    debug_message: format!("Use of weak hash: {variant}"),
                    references: vec![reference(
                        "variant",
                        variant,
                        property_evidence(asset, "variant"),
                    )],
                });
            }
        }
    }
    if let Some(digest) = &asset.digest {
        if policy.weak_hashes.contains(digest) {
            out.push(Finding {
                cwe: "cwe328",
                debug_message: format!("Use of weak hash: {digest}"),
                references: vec![reference(
                    "digest",
                    digest,
                    property_evidence(asset, "digest"),
                )],
            });
        }
    }
    out
}

fn rule_cwe335(asset: &CryptoAsset, _policy: &PolicySet) -> Vec<Finding> {
    asset
        .materials
        .iter()
        .filter(|m| m.kind == MaterialKind::Seed && m.value_state == MaterialState::Hardcoded)
        .map(|m| Finding {
            cwe: "cwe335",
            debug_message: "Hardcoded seed in pseudo-random number generator".to_string(),
            references: vec![reference(
                "seed",
                m.value.clone().unwrap_or_else(|| "seed".into()),
                &m.evidence,
            )],
        })
        .collect()
}

fn rule_cwe338(asset: &CryptoAsset, policy: &PolicySet) -> Vec<Finding> {
    if asset.function != "random" {
        return vec![];
    }
    if policy.strong_prng_apis.contains(&asset.criterion_api) {
        return vec![];
    }
    vec![Finding {
        cwe: "cwe338",
        debug_message: format!(
            "Use of cryptographically weak pseudo-random number generator: {}",
            asset.criterion_api
        ),
        references: vec![reference(
            "api",
            &asset.criterion_api,
            asset.criterion_ref(),
        )],
    }]
}

fn rule_cwe759(asset: &CryptoAsset, _policy: &PolicySet) -> Vec<Finding> {
    if asset
        .materials
        .iter()
        .any(|m| m.kind == MaterialKind::Salt)
    {
        return vec![];
    }
    // Salting matters where a password is being hashed: key-derivation
    // constructs, or a hash fed password material. Key agreement also
    // derives keys but has no salt by design, so primitive decides.
    let password = asset
        .materials
        .iter()
        .find(|m| m.kind == MaterialKind::Password);
    let in_scope = asset.primitive.as_deref() == Some("kdf")
        || (asset.primitive.as_deref() == Some("hash") && password.is_some());
    if !in_scope {
        return vec![];
    }
    let mut references = Vec::new();
    if let Some(p) = password {
        references.push(reference(
            "password",
            p.value.clone().unwrap_or_else(|| "password".into()),
            &p.evidence,
        ));
    }
    references.push(reference(
        "function",
        &asset.function,
        asset.criterion_ref(),
    ));
    vec![Finding {
        cwe: "cwe759",
        debug_message: "Use of a one-way hash without a salt".to_string(),
        references,
    }]
}

fn rule_cwe780(asset: &CryptoAsset, _policy: &PolicySet) -> Vec<Finding> {
    if asset.variant.as_deref() != Some("RSA") || asset.primitive.as_deref() != Some("pke") {
        return vec![];
    }
    // Only firing on a known non-OAEP padding: an unresolved padding is an
    // incomplete asset, not a finding.
    let Some(padding) = &asset.padding else {
        return vec![];
    };
    if padding.contains("OAEP") {
        return vec![];
    }
    vec![Finding {
        cwe: "cwe780",
        debug_message: format!("Use of RSA algorithm without OAEP: {padding}"),
        references: vec![reference(
            "padding",
            padding,
            property_evidence(asset, "padding"),
        )],
    }]
}

fn rule_cwe916(asset: &CryptoAsset, policy: &PolicySet) -> Vec<Finding> {
    let Some(iterations) = asset.properties.get("iterations").and_then(|v| v.as_int()) else {
        return vec![];
    };
    if iterations > policy.min_pbe_iterations {
        return vec![];
    }
    vec![Finding {
        cwe: "cwe916",
        debug_message: format!(
            "Password hash with insufficient computational effort: {iterations} iterations"
        ),
        references: vec![reference(
            "iterations",
            iterations.to_string(),
            property_evidence(asset, "iterations"),
        )],
    }]
}

const RULES: [VulnRule; 10] = [
    VulnRule { cwe: "cwe259", check: rule_cwe259 },
    VulnRule { cwe: "cwe321", check: rule_cwe321 },
    VulnRule { cwe: "cwe326", check: rule_cwe326 },
    VulnRule { cwe: "cwe327", check: rule_cwe327 },
    VulnRule { cwe: "cwe328", check: rule_cwe328 },
    VulnRule { cwe: "cwe335", check: rule_cwe335 },
    VulnRule { cwe: "cwe338", check: rule_cwe338 },
    VulnRule { cwe: "cwe759", check: rule_cwe759 },
    VulnRule { cwe: "cwe780", check: rule_cwe780 },
    VulnRule { cwe: "cwe916", check: rule_cwe916 },
];

fn documentation_url(cwe: &str) -> String {
    let number = cwe.trim_start_matches("cwe");
    format!("https://cwe.mitre.org/data/definitions/{number}.html")
}

/// Apply all rules to all assets. Reports come out ordered by
/// (file, line, column, cwe, message) and numbered from `"1"`.
pub fn evaluate_rules(assets: &[CryptoAsset], policy: &PolicySet) -> Vec<VulnerabilityReport> {
    let mut found: Vec<(Location, Finding)> = Vec::new();
    for asset in assets {
        for rule in &RULES {
            for finding in (rule.check)(asset, policy) {
                debug_assert_eq!(finding.cwe, rule.cwe);
                debug_assert!(!finding.references.is_empty());
                found.push((asset.criterion_location.clone(), finding));
            }
        }
    }
    found.sort_by(|(la, fa), (lb, fb)| {
        (
            &la.file_name,
            la.line,
            la.start_column,
            fa.cwe,
            &fa.debug_message,
        )
            .cmp(&(&lb.file_name, lb.line, lb.start_column, fb.cwe, &fb.debug_message))
    });
    found.dedup_by(|(la, fa), (lb, fb)| {
        la == lb && fa.cwe == fb.cwe && fa.debug_message == fb.debug_message
            && fa.references == fb.references
    });
    found
        .into_iter()
        .enumerate()
        .map(|(i, (_, f))| VulnerabilityReport {
            vulnerability_id: (i + 1).to_string(),
            classification: f.cwe.to_string(),
            vulnerability_score: policy.severity_of(f.cwe).to_string(),
            vulnerability_documentation_reference: documentation_url(f.cwe),
            debug_message: f.debug_message,
            references: f.references,
        })
        .collect()
}

/// Per-CWE counts for the scan summary.
pub fn count_by_cwe(reports: &[VulnerabilityReport]) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for r in reports {
        *out.entry(r.classification.clone()).or_insert(0) += 1;
    }
    out
}

/// Serialize reports to the output file as a pretty JSON array (`[]` when
/// there is nothing to report).
pub fn emit_vuln_report(
    reports: &[VulnerabilityReport],
    out_path: &Path,
) -> std::io::Result<()> {
    let json = render_vuln_report(reports);
    std::fs::write(out_path, json)
}

/// The exact bytes `emit_vuln_report` writes.
pub fn render_vuln_report(reports: &[VulnerabilityReport]) -> String {
    let mut json =
        serde_json::to_string_pretty(reports).expect("reports always serialize");
    json.push('\n');
    json
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::{Confidence, CryptoMaterial};
    use crate::Value;

    fn loc(line: u32) -> Location {
        Location::new("App.java", line, 9, line, 30)
    }

    fn ev(line: u32, ft: FindingType) -> Evidence {
        Evidence {
            finding_type: ft,
            location: loc(line),
            snippet: "...".into(),
        }
    }

    /// A bare asset with criterion evidence only.
    fn asset(function: &str, line: u32) -> CryptoAsset {
        CryptoAsset {
            asset_id: format!("test{line}"),
            asset_type: "algorithm".into(),
            function: function.into(),
            primitive: None,
            variant: None,
            mode: None,
            padding: None,
            digest: None,
            key_size: None,
            properties: BTreeMap::new(),
            materials: vec![],
            evidence: vec![ev(line, FindingType::FunctionCall)],
            property_evidence: BTreeMap::new(),
            conflicts: vec![],
            context_note: "entry".into(),
            confidence: Confidence::default(),
            criterion_api: "jca:Cipher.doFinal/1".into(),
            criterion_location: loc(line),
        }
    }

    fn material(kind: MaterialKind, state: MaterialState, value: Option<&str>) -> CryptoMaterial {
        CryptoMaterial {
            kind,
            value_state: state,
            value: value.map(String::from),
            producer_api: None,
            size_bits: None,
            evidence: ev(2, FindingType::Argument),
        }
    }

    fn policy() -> PolicySet {
        crate::kb::load_kb(&[]).expect("builtin kb").policy
    }

    fn cwes(reports: &[VulnerabilityReport]) -> Vec<&str> {
        reports.iter().map(|r| r.classification.as_str()).collect()
    }

    #[test]
    fn weak_variant_report_matches_reference_shape() {
        let mut a = asset("encrypt", 53);
        a.primitive = Some("blockcipher".into());
        a.variant = Some("DES".into());
        a.mode = Some("CBC".into());
        a.padding = Some("PKCS5Padding".into());
        a.property_evidence
            .insert("variant".into(), vec![0]);
        let reports = evaluate_rules(&[a], &policy());
        assert_eq!(reports.len(), 1);
        let r = &reports[0];
        assert_eq!(r.vulnerability_id, "1");
        assert_eq!(r.classification, "cwe327");
        assert_eq!(r.vulnerability_score, "Major");
        assert_eq!(
            r.vulnerability_documentation_reference,
            "https://cwe.mitre.org/data/definitions/327.html"
        );
        assert_eq!(
            r.debug_message,
            "Use of broken or risky cryptographic algorithm: DES"
        );
        assert_eq!(r.references.len(), 1);
        let refe = &r.references[0];
        assert_eq!(refe.ref_type, "variant");
        assert_eq!(refe.value, "DES");
        let json = serde_json::to_value(r).unwrap();
        assert_eq!(json["references"][0]["context"]["type"], "FUNCTION_CALL");
        let l = &json["references"][0]["context"]["location"];
        assert_eq!(l["fileName"], "App.java");
        assert_eq!(l["line"], 53);
        assert_eq!(l["startColumn"], 9);
        assert_eq!(l["endColumn"], 30);
        assert!(l.get("endLine").is_none(), "schema has no endLine");
        // top-level field order is fixed
        let text = serde_json::to_string(r).unwrap();
        let order = [
            "vulnerabilityId",
            "classification",
            "vulnerabilityScore",
            "vulnerabilityDocumentationReference",
            "debugMessage",
            "references",
        ];
        let mut at = 0;
        for key in order {
            let pos = text.find(&format!("\"{key}\"")).expect(key);
            assert!(pos >= at, "{key} out of order");
            at = pos;
        }
    }

    #[test]
    fn secure_aes_gcm_asset_yields_no_findings() {
        let mut a = asset("encrypt", 10);
        a.primitive = Some("ae".into());
        a.variant = Some("AES".into());
        a.mode = Some("GCM".into());
        a.padding = Some("NoPadding".into());
        a.key_size = Some(256);
        a.materials.push(CryptoMaterial {
            producer_api: Some("jca:KeyGenerator.generateKey/0".into()),
            size_bits: Some(256),
            ..material(MaterialKind::SecretKey, MaterialState::Generated, None)
        });
        assert!(evaluate_rules(&[a], &policy()).is_empty());
    }

    #[test]
    fn hardcoded_password_key_iv_salt_and_seed_fire_their_rules() {
        let mut a = asset("keyderive", 7);
        a.primitive = Some("kdf".into());
        a.variant = Some("PBKDF2".into());
        a.materials = vec![
            material(MaterialKind::Password, MaterialState::Hardcoded, Some("hunter2")),
            material(MaterialKind::SecretKey, MaterialState::Hardcoded, Some("0x0102")),
            material(MaterialKind::Iv, MaterialState::Hardcoded, Some("0x0909")),
            material(MaterialKind::Salt, MaterialState::Hardcoded, Some("0x0a0b")),
            material(MaterialKind::Seed, MaterialState::Hardcoded, Some("42")),
        ];
        let reports = evaluate_rules(&[a], &policy());
        assert_eq!(
            cwes(&reports),
            vec!["cwe259", "cwe321", "cwe321", "cwe321", "cwe335"],
            "{reports:#?}"
        );
        assert!(reports
            .iter()
            .any(|r| r.debug_message == "Use of hard-coded password"));
        assert!(reports
            .iter()
            .any(|r| r.debug_message == "Use of hard-coded cryptographic key"));
        assert!(reports
            .iter()
            .any(|r| r.debug_message == "Use of hard-coded initialization vector"));
        assert!(reports
            .iter()
            .any(|r| r.debug_message == "Use of hard-coded salt"));
        // severity mapping from policy: cwe335 is Minor
        let seed = reports
            .iter()
            .find(|r| r.classification == "cwe335")
            .unwrap();
        assert_eq!(seed.vulnerability_score, "Minor");
    }

    #[test]
    fn generated_and_external_material_stays_silent() {
        let mut a = asset("encrypt", 3);
        a.primitive = Some("ae".into());
        a.variant = Some("AES".into());
        a.mode = Some("GCM".into());
        a.materials = vec![
            material(MaterialKind::SecretKey, MaterialState::Generated, None),
            material(MaterialKind::Iv, MaterialState::External, None),
        ];
        assert!(evaluate_rules(&[a], &policy()).is_empty());
    }

    #[test]
    fn small_asymmetric_keys_fire_and_large_do_not() {
        let mut small = asset("keygen", 4);
        small.primitive = Some("pke".into());
        small.variant = Some("RSA".into());
        small.key_size = Some(1024);
        let mut big = asset("keygen", 9);
        big.primitive = Some("pke".into());
        big.variant = Some("RSA".into());
        big.key_size = Some(2048);
        let mut ec = asset("keygen", 14);
        ec.primitive = Some("pke".into());
        ec.variant = Some("EC".into());
        ec.key_size = Some(256);
        // symmetric sizes are not judged by this rule
        let mut aes = asset("keygen", 20);
        aes.primitive = Some("blockcipher".into());
        aes.variant = Some("AES".into());
        aes.key_size = Some(128);
        let reports = evaluate_rules(&[small, big, ec, aes], &policy());
        assert_eq!(cwes(&reports), vec!["cwe326"]);
        assert!(reports[0].debug_message.contains("1024"));
        assert!(reports[0].debug_message.contains("2048"));
        assert_eq!(reports[0].references.len(), 2);
    }

    #[test]
    fn ecb_mode_fires_only_for_symmetric_ciphers() {
        let mut sym = asset("encrypt", 5);
        sym.primitive = Some("blockcipher".into());
        sym.variant = Some("AES".into());
        sym.mode = Some("ECB".into());
        sym.padding = Some("PKCS5Padding".into());
        let mut rsa = asset("encrypt", 11);
        rsa.primitive = Some("pke".into());
        rsa.variant = Some("RSA".into());
        rsa.mode = Some("ECB".into());
        rsa.padding = Some("OAEPWithSHA-256AndMGF1Padding".into());
        let reports = evaluate_rules(&[sym, rsa], &policy());
        assert_eq!(cwes(&reports), vec!["cwe327"]);
        assert_eq!(
            reports[0].debug_message,
            "Use of broken or risky cryptographic algorithm: ECB mode"
        );
        assert_eq!(reports[0].references[0].ref_type, "mode");
    }

    #[test]
    fn weak_hash_fires_on_hash_variant_and_on_split_digest() {
        let mut md5 = asset("digest", 6);
        md5.primitive = Some("hash".into());
        md5.variant = Some("MD5".into());
        // MD5 inside an HMAC lands in the digest field after the scheme
        // name is split; the weak-hash rule must follow it there.
        let mut hmac = asset("tag", 12);
        hmac.primitive = Some("mac".into());
        hmac.variant = Some("HMAC".into());
        hmac.digest = Some("MD5".into());
        let mut sig = asset("sign", 20);
        sig.primitive = Some("signature".into());
        sig.variant = Some("RSA".into());
        sig.digest = Some("SHA-1".into());
        let reports = evaluate_rules(&[md5, hmac, sig], &policy());
        assert_eq!(cwes(&reports), vec!["cwe328", "cwe328", "cwe328"]);
        assert_eq!(reports[0].debug_message, "Use of weak hash: MD5");
        assert_eq!(reports[1].references[0].ref_type, "digest");
        assert_eq!(reports[2].debug_message, "Use of weak hash: SHA-1");
    }

    #[test]
    fn strong_digests_and_non_hash_variants_stay_quiet() {
        // a mac variant is never matched against the weak-hash list, and a
        // strong digest on a mac asset raises nothing
        let mut hmac = asset("tag", 12);
        hmac.primitive = Some("mac".into());
        hmac.variant = Some("HMAC".into());
        hmac.digest = Some("SHA-256".into());
        let reports = evaluate_rules(&[hmac], &policy());
        assert!(reports.is_empty(), "{reports:?}");
    }

    #[test]
    fn weak_prng_criterion_fires_and_strong_one_does_not() {
        let mut weak = asset("random", 8);
        weak.criterion_api = "jca:Random.nextInt/0".into();
        weak.primitive = Some("drbg".into());
        let mut strong = asset("random", 15);
        strong.criterion_api = "jca:SecureRandom.nextBytes/1".into();
        strong.primitive = Some("drbg".into());
        let reports = evaluate_rules(&[weak, strong], &policy());
        assert_eq!(cwes(&reports), vec!["cwe338"]);
        assert!(reports[0].debug_message.contains("jca:Random.nextInt/0"));
    }

    #[test]
    fn missing_salt_fires_for_kdf_but_not_key_agreement() {
        let mut pbe = asset("keyderive", 5);
        pbe.primitive = Some("kdf".into());
        pbe.variant = Some("PBKDF2".into());
        pbe.materials = vec![material(
            MaterialKind::Password,
            MaterialState::External,
            None,
        )];
        let mut salted = asset("keyderive", 9);
        salted.primitive = Some("kdf".into());
        salted.variant = Some("PBKDF2".into());
        salted.materials = vec![
            material(MaterialKind::Password, MaterialState::External, None),
            material(MaterialKind::Salt, MaterialState::Generated, None),
        ];
        let mut dh = asset("keyderive", 13);
        dh.primitive = Some("keyagreement".into());
        dh.variant = Some("DH".into());
        let reports = evaluate_rules(&[pbe, salted, dh], &policy());
        assert_eq!(cwes(&reports), vec!["cwe759"]);
        assert_eq!(reports[0].vulnerability_score, "Minor");
        assert!(reports[0]
            .references
            .iter()
            .any(|r| r.ref_type == "password"));
    }

    #[test]
    fn rsa_without_oaep_fires_on_known_padding_only() {
        let mut pkcs1 = asset("encrypt", 4);
        pkcs1.primitive = Some("pke".into());
        pkcs1.variant = Some("RSA".into());
        pkcs1.padding = Some("PKCS1Padding".into());
        let mut oaep = asset("encrypt", 8);
        oaep.primitive = Some("pke".into());
        oaep.variant = Some("RSA".into());
        oaep.padding = Some("OAEPWithSHA-256AndMGF1Padding".into());
        let mut unknown = asset("encrypt", 12);
        unknown.primitive = Some("pke".into());
        unknown.variant = Some("RSA".into());
        let reports = evaluate_rules(&[pkcs1, oaep, unknown], &policy());
        assert_eq!(cwes(&reports), vec!["cwe780"]);
        assert_eq!(
            reports[0].debug_message,
            "Use of RSA algorithm without OAEP: PKCS1Padding"
        );
    }

    #[test]
    fn iteration_threshold_is_inclusive() {
        let mut low = asset("keyderive", 3);
        low.primitive = Some("kdf".into());
        low.properties.insert("iterations".into(), Value::Int(1000));
        low.materials = vec![material(MaterialKind::Salt, MaterialState::Hardcoded, None)];
        let mut high = asset("keyderive", 7);
        high.primitive = Some("kdf".into());
        high.properties
            .insert("iterations".into(), Value::Int(1001));
        high.materials = vec![material(MaterialKind::Salt, MaterialState::Hardcoded, None)];
        let reports = evaluate_rules(&[low, high], &policy());
        // the hardcoded salt itself fires cwe321 on both assets
        assert_eq!(cwes(&reports), vec!["cwe321", "cwe916", "cwe321"]);
        let iter = reports
            .iter()
            .find(|r| r.classification == "cwe916")
            .unwrap();
        assert!(iter.debug_message.contains("1000 iterations"));
        assert_eq!(iter.references[0].ref_type, "iterations");
    }

    #[test]
    fn quantum_unsafe_reporting_is_policy_gated() {
        let mut a = asset("keygen", 5);
        a.primitive = Some("pke".into());
        a.variant = Some("RSA".into());
        a.key_size = Some(4096);
        let off = evaluate_rules(std::slice::from_ref(&a), &policy());
        assert!(off.is_empty());
        let mut p = policy();
        p.report_quantum_unsafe = true;
        let on = evaluate_rules(&[a], &p);
        assert_eq!(cwes(&on), vec!["cwe327"]);
        assert_eq!(
            on[0].debug_message,
            "Quantum-unsafe cryptographic algorithm: RSA"
        );
    }

    fn asset_in(file: &str, function: &str, line: u32) -> CryptoAsset {
        let mut a = asset(function, line);
        a.criterion_location.file_name = file.into();
        for e in &mut a.evidence {
            e.location.file_name = file.into();
        }
        a
    }

    #[test]
    fn reports_are_ordered_and_idempotent() {
        let mut z = asset_in("Z.java", "digest", 20);
        z.primitive = Some("hash".into());
        z.variant = Some("MD5".into());
        let mut a1 = asset_in("A.java", "encrypt", 30);
        a1.primitive = Some("blockcipher".into());
        a1.variant = Some("DES".into());
        let mut a2 = asset_in("A.java", "digest", 10);
        a2.primitive = Some("hash".into());
        a2.variant = Some("SHA-1".into());
        let pol = policy();
        let first = evaluate_rules(&[z.clone(), a1.clone(), a2.clone()], &pol);
        let positions: Vec<(String, u32)> = first
            .iter()
            .map(|r| {
                let l = &r.references[0].context.location;
                (l.file_name.clone(), l.line)
            })
            .collect();
        assert_eq!(
            positions,
            vec![
                ("A.java".to_string(), 10),
                ("A.java".to_string(), 30),
                ("Z.java".to_string(), 20)
            ]
        );
        assert_eq!(
            first.iter().map(|r| r.vulnerability_id.as_str()).collect::<Vec<_>>(),
            vec!["1", "2", "3"]
        );
        let second = evaluate_rules(&[z, a1, a2], &pol);
        assert_eq!(first, second, "evaluation is idempotent, ids included");
    }

    #[test]
    fn empty_input_renders_empty_array() {
        assert_eq!(render_vuln_report(&[]), "[]\n");
    }

    #[test]
    fn rules_never_touch_analysis_internals() {
        // Language independence, enforced: this module must compile against
        // the asset model and policy only. The names are built by
        // concatenation so this test does not trip over its own source.
        let src = include_str!("vulns.rs");
        for tail in ["ir", "frontend", "slicer", "constprop", "kb::ApiSpec", "kb::KnowledgeBase"] {
            let forbidden = format!("crate::{tail}");
            assert!(
                !src.contains(&forbidden),
                "vulns module must not reference {forbidden}"
            );
        }
    }
}
