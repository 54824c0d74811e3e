//! Value→property semantics: turn constant argument values into crypto
//! properties using exact-value rules, pattern rules, the transformation
//! grammar and the algorithm table — in that order.

use super::{ApiSpec, KnowledgeBase, ParamRole, SemanticsRule};
use crate::value::Value;
use std::collections::BTreeMap;

/// Property keys whose values are numeric.
const NUMERIC_KEYS: &[&str] = &["keySize", "blockSize", "iterations", "tagBits"];

/// Keys holding algorithm-ish names that get canonicalized through the alias
/// table.
const NAME_KEYS: &[&str] = &["variant", "digest", "mode", "padding"];

/// Parse a transformation string ("AES", "AES/CBC/PKCS5Padding",
/// "SHA-256"), filling library defaults only for the bare one-part cipher
/// form. Unknown algorithms pass through verbatim with `unrecognized: true`
/// — unknown is a value, not an error.
pub fn parse_transformation(
    kb: &KnowledgeBase,
    value: &str,
    transform_kind: &str,
) -> BTreeMap<String, Value> {
    let mut props = BTreeMap::new();
    let parts: Vec<&str> = value.split('/').collect();
    let alg_name = kb.canon_name(parts[0].trim());
    let alg = kb.algorithms.get(&alg_name);
    match alg {
        Some(info) => {
            props.insert("primitive".into(), Value::Str(info.primitive.clone()));
            props.insert("variant".into(), Value::Str(alg_name.clone()));
            if let Some(bs) = info.block_size {
                props.insert("blockSize".into(), Value::Int(bs));
            }
        }
        None => {
            props.insert("variant".into(), Value::Str(parts[0].trim().to_string()));
            props.insert("unrecognized".into(), Value::Bool(true));
        }
    }
    if transform_kind == "cipher" {
        if parts.len() == 1 {
            // bare algorithm name: the library documents the defaults
            if let Some(info) = alg {
                if let Some(m) = &info.default_mode {
                    props.insert("mode".into(), Value::Str(kb.canon_name(m)));
                }
                if let Some(p) = &info.default_padding {
                    props.insert("padding".into(), Value::Str(kb.canon_name(p)));
                }
                if let Some(k) = info.default_key_size {
                    props.insert("keySize".into(), Value::Int(k));
                }
            }
        } else {
            if parts.len() >= 2 && !parts[1].trim().is_empty() {
                props.insert("mode".into(), Value::Str(kb.canon_name(parts[1].trim())));
            }
            if parts.len() >= 3 && !parts[2].trim().is_empty() {
                props.insert(
                    "padding".into(),
                    Value::Str(kb.canon_name(parts[2].trim())),
                );
            }
        }
        // authenticated modes change the primitive
        if let Some(Value::Str(mode)) = props.get("mode") {
            if kb.modes.get(mode).map(|m| m.aead).unwrap_or(false) {
                props.insert("primitive".into(), Value::Str("ae".into()));
            }
        }
    }
    props
}

/// Resolve the property map for one call given per-parameter constant
/// values (`None` = unknown). Pure function of (api, argValues, KB):
/// unknown arguments yield absent properties, never guesses.
pub fn resolve_semantics(
    kb: &KnowledgeBase,
    api: &ApiSpec,
    args: &[Option<Value>],
) -> BTreeMap<String, Value> {
    let mut props: BTreeMap<String, Value> = api
        .properties
        .iter()
        .map(|(k, v)| (k.clone(), lift_property(kb, k, v)))
        .collect();
    for (i, param) in api.param_roles.iter().enumerate() {
        let Some(Some(value)) = args.get(i) else {
            continue;
        };
        match param.role {
            ParamRole::Transformation => {
                let rule_props = apply_rules(kb, api, param.role, value);
                let had_rule = rule_props.is_some();
                let mut out = rule_props.unwrap_or_default();
                if let Some(kind) = &api.transform_kind {
                    if let Value::Str(s) = value {
                        // pattern rules own the no-slash grammar they matched;
                        // slashed transformations always get the table pass
                        if !had_rule || s.contains('/') {
                            for (k, v) in parse_transformation(kb, s, kind) {
                                out.entry(k).or_insert(v);
                            }
                        }
                    }
                }
                props.extend(out);
            }
            ParamRole::Keysize => {
                if let Value::Int(n) = value {
                    props.insert("keySize".into(), Value::Int(*n));
                }
            }
            ParamRole::Iterations => {
                if let Value::Int(n) = value {
                    props.insert("iterations".into(), Value::Int(*n));
                }
            }
            ParamRole::Taglen => {
                if let Value::Int(n) = value {
                    props.insert("tagBits".into(), Value::Int(*n));
                }
            }
            ParamRole::Opmode => {
                if let Some(out) = apply_rules(kb, api, param.role, value) {
                    props.extend(out);
                }
            }
            // remaining roles carry material, not algorithm properties
            _ => {}
        }
    }
    props
}

/// Best matching semantics rule for (api, role, value): exact-value rules
/// first, pattern rules only when no exact rule matched; within each class
/// the most specific rule (api-bound over role-bound over global) wins,
/// ties broken by KB order.
fn apply_rules(
    kb: &KnowledgeBase,
    api: &ApiSpec,
    role: ParamRole,
    value: &Value,
) -> Option<BTreeMap<String, Value>> {
    let applicable = |rule: &SemanticsRule| {
        rule.api.as_deref().map(|a| a == api.id).unwrap_or(true)
            && rule.role.map(|r| r == role).unwrap_or(true)
    };
    let specificity =
        |rule: &SemanticsRule| (rule.api.is_some() as u8) * 2 + rule.role.is_some() as u8;

    let mut best: Option<(u8, &SemanticsRule)> = None;
    for rule in kb.semantics.iter().filter(|r| applicable(r)) {
        let Some(exact) = &rule.value else { continue };
        if super::json_to_value(exact).as_ref() == Some(value) {
            let s = specificity(rule);
            if best.as_ref().map(|(b, _)| s > *b).unwrap_or(true) {
                best = Some((s, rule));
            }
        }
    }
    if best.is_none() {
        if let Value::Str(s) = value {
            for rule in kb.semantics.iter().filter(|r| applicable(r)) {
                let Some(re) = &rule.compiled else { continue };
                if re.is_match(s) {
                    let sp = specificity(rule);
                    if best.as_ref().map(|(b, _)| sp > *b).unwrap_or(true) {
                        best = Some((sp, rule));
                    }
                }
            }
        }
    }
    let (_, rule) = best?;
    let captures = match (&rule.compiled, value) {
        (Some(re), Value::Str(s)) => re.captures(s),
        _ => None,
    };
    let mut out = BTreeMap::new();
    for (key, template) in &rule.properties {
        let raw = match template.strip_prefix('$') {
            Some(group) => match captures.as_ref().and_then(|c| c.name(group)) {
                Some(m) => m.as_str().to_string(),
                None => continue,
            },
            None => template.clone(),
        };
        out.insert(key.clone(), lift_property(kb, key, &raw));
    }
    Some(out)
}

/// Type and canonicalize one property value by key.
fn lift_property(kb: &KnowledgeBase, key: &str, raw: &str) -> Value {
    if NUMERIC_KEYS.contains(&key) {
        if let Ok(n) = raw.parse::<i64>() {
            return Value::Int(n);
        }
    }
    if NAME_KEYS.contains(&key) {
        return Value::Str(kb.canon_name(raw));
    }
    Value::Str(raw.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::load_kb;

    fn str_prop(props: &BTreeMap<String, Value>, key: &str) -> String {
        match props.get(key) {
            Some(Value::Str(s)) => s.clone(),
            other => panic!("{key}: expected string, got {other:?}"),
        }
    }

    fn int_prop(props: &BTreeMap<String, Value>, key: &str) -> i64 {
        match props.get(key) {
            Some(Value::Int(n)) => *n,
            other => panic!("{key}: expected int, got {other:?}"),
        }
    }

    #[test]
    fn bare_aes_fills_documented_defaults() {
        let kb = load_kb(&[]).unwrap();
        let p = parse_transformation(&kb, "AES", "cipher");
        assert_eq!(str_prop(&p, "primitive"), "blockcipher");
        assert_eq!(str_prop(&p, "variant"), "AES");
        assert_eq!(str_prop(&p, "mode"), "CBC");
        assert_eq!(str_prop(&p, "padding"), "PKCS5");
        assert_eq!(int_prop(&p, "blockSize"), 128);
        assert_eq!(int_prop(&p, "keySize"), 128);
    }

    #[test]
    fn full_transformation_gets_no_defaults() {
        let kb = load_kb(&[]).unwrap();
        let p = parse_transformation(&kb, "AES/GCM/NoPadding", "cipher");
        assert_eq!(str_prop(&p, "variant"), "AES");
        assert_eq!(str_prop(&p, "mode"), "GCM");
        assert_eq!(str_prop(&p, "padding"), "NoPadding");
        assert_eq!(str_prop(&p, "primitive"), "ae", "GCM upgrades to ae");
        assert!(p.get("keySize").is_none(), "no default key size for explicit form");
    }

    #[test]
    fn explicit_padding_name_is_canonicalized() {
        let kb = load_kb(&[]).unwrap();
        let p = parse_transformation(&kb, "DES/CBC/PKCS5Padding", "cipher");
        assert_eq!(str_prop(&p, "variant"), "DES");
        assert_eq!(str_prop(&p, "padding"), "PKCS5");
        assert!(p.get("unrecognized").is_none());
    }

    #[test]
    fn unknown_algorithm_passes_through_flagged() {
        let kb = load_kb(&[]).unwrap();
        let p = parse_transformation(&kb, "FOO/BAR/Baz", "cipher");
        assert_eq!(str_prop(&p, "variant"), "FOO");
        assert_eq!(str_prop(&p, "mode"), "BAR");
        assert_eq!(str_prop(&p, "padding"), "Baz");
        assert_eq!(p.get("unrecognized"), Some(&Value::Bool(true)));
    }

    #[test]
    fn case_insensitive_algorithm_lookup() {
        let kb = load_kb(&[]).unwrap();
        let p = parse_transformation(&kb, "aes", "cipher");
        assert_eq!(str_prop(&p, "variant"), "AES");
    }

    #[test]
    fn signature_transformation_splits_digest_and_scheme() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:Signature.getInstance/1").unwrap();
        let p = resolve_semantics(&kb, api, &[Some(Value::Str("SHA256withECDSA".into()))]);
        assert_eq!(str_prop(&p, "primitive"), "signature");
        assert_eq!(str_prop(&p, "variant"), "ECDSA");
        assert_eq!(str_prop(&p, "digest"), "SHA-256");
    }

    #[test]
    fn hmac_transformation_yields_mac_with_digest() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:Mac.getInstance/1").unwrap();
        let p = resolve_semantics(&kb, api, &[Some(Value::Str("HmacMD5".into()))]);
        assert_eq!(str_prop(&p, "primitive"), "mac");
        assert_eq!(str_prop(&p, "variant"), "HMAC");
        assert_eq!(str_prop(&p, "digest"), "MD5");
    }

    #[test]
    fn opmode_constants_choose_the_operation() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:Cipher.init/2").unwrap();
        let enc = resolve_semantics(&kb, api, &[Some(Value::Int(1)), None]);
        assert_eq!(str_prop(&enc, "function"), "encrypt");
        let dec = resolve_semantics(&kb, api, &[Some(Value::Int(2)), None]);
        assert_eq!(str_prop(&dec, "function"), "decrypt");
    }

    #[test]
    fn keysize_parameter_lifts_to_property() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:KeyPairGenerator.initialize/1").unwrap();
        let p = resolve_semantics(&kb, api, &[Some(Value::Int(2048))]);
        assert_eq!(int_prop(&p, "keySize"), 2048);
    }

    #[test]
    fn unknown_arguments_yield_absent_properties() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:Cipher.getInstance/1").unwrap();
        let p = resolve_semantics(&kb, api, &[None]);
        assert!(p.get("variant").is_none());
        assert!(p.get("mode").is_none());
        // the api's own constant properties still apply
        assert!(p.get("primitive").is_some() || p.is_empty());
    }

    #[test]
    fn digest_name_parses_as_hash() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:MessageDigest.getInstance/1").unwrap();
        let p = resolve_semantics(&kb, api, &[Some(Value::Str("MD5".into()))]);
        assert_eq!(str_prop(&p, "primitive"), "hash");
        assert_eq!(str_prop(&p, "variant"), "MD5");
        let sha = resolve_semantics(&kb, api, &[Some(Value::Str("SHA-256".into()))]);
        assert_eq!(str_prop(&sha, "variant"), "SHA-256");
    }

    #[test]
    fn pbkdf2_names_map_to_kdf() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:SecretKeyFactory.getInstance/1").unwrap();
        let p = resolve_semantics(
            &kb,
            api,
            &[Some(Value::Str("PBKDF2WithHmacSHA256".into()))],
        );
        assert_eq!(str_prop(&p, "primitive"), "kdf");
        assert_eq!(str_prop(&p, "variant"), "PBKDF2");
        assert_eq!(str_prop(&p, "digest"), "SHA-256");
    }

    #[test]
    fn exact_rule_beats_pattern_rule() {
        // construct a tiny KB where both an exact and a pattern rule match
        let text = r#"{
          "name": "t",
          "apis": [{
            "id": "t:X.get/1",
            "ownerType": "p.X",
            "methodName": "get",
            "paramRoles": [{"role": "transformation", "valueKind": "string"}],
            "kind": "instantiation"
          }],
          "semantics": [
            {"role": "transformation", "pattern": "^Special.*$",
             "properties": {"variant": "FromPattern"}},
            {"role": "transformation", "value": "SpecialThing",
             "properties": {"variant": "FromExact"}}
          ]
        }"#;
        let kb = crate::kb::load_kb_with_builtins(
            &[("t.json".to_string(), text.to_string())],
            &[],
        )
        .unwrap();
        let api = kb.api_by_id("t:X.get/1").unwrap();
        let p = resolve_semantics(&kb, api, &[Some(Value::Str("SpecialThing".into()))]);
        assert_eq!(str_prop(&p, "variant"), "FromExact");
        let p2 = resolve_semantics(&kb, api, &[Some(Value::Str("SpecialOther".into()))]);
        assert_eq!(str_prop(&p2, "variant"), "FromPattern");
    }

    #[test]
    fn resolution_is_deterministic() {
        let kb = load_kb(&[]).unwrap();
        let api = kb.api_by_id("jca:Cipher.getInstance/1").unwrap();
        let args = [Some(Value::Str("AES/GCM/NoPadding".into()))];
        let a = resolve_semantics(&kb, api, &args);
        let b = resolve_semantics(&kb, api, &args);
        assert_eq!(a, b);
    }
}
