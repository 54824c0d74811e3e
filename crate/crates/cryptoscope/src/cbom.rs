//! CBOM emission: the asset inventory as a CycloneDX-1.6-shaped document.
//!
//! One component of type `cryptographic-asset` per asset, carrying
//! `cryptoProperties.algorithmProperties` plus `evidence.occurrences` that
//! point back into the scanned source. The exact field mapping (including
//! where this artifact extends occurrence entries with column information)
//! is documented in `docs/cbom-mapping.md`; timestamp and serial number are
//! injectable so outputs can be compared byte for byte.

use std::path::Path;

use serde::Serialize;

use crate::assets::CryptoAsset;

#[derive(Debug, Clone, Default)]
pub struct CbomOptions {
    /// RFC3339 timestamp to stamp into metadata; defaults to now.
    pub timestamp: Option<String>,
    /// Serial number (with or without the `urn:uuid:` prefix); defaults to
    /// a fresh UUID.
    pub serial: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CbomDocument {
    pub bom_format: String,
    pub spec_version: String,
    pub serial_number: String,
    pub version: u32,
    pub metadata: CbomMetadata,
    pub components: Vec<CbomComponent>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CbomMetadata {
    pub timestamp: String,
    pub tools: Vec<CbomTool>,
    pub component: CbomSubject,
}

#[derive(Debug, Clone, Serialize)]
pub struct CbomTool {
    pub name: String,
    pub version: String,
}

/// The scanned project itself.
#[derive(Debug, Clone, Serialize)]
pub struct CbomSubject {
    #[serde(rename = "type")]
    pub component_type: String,
    pub name: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CbomComponent {
    #[serde(rename = "type")]
    pub component_type: String,
    #[serde(rename = "bom-ref")]
    pub bom_ref: String,
    pub name: String,
    #[serde(rename = "cryptoProperties")]
    pub crypto_properties: CryptoProperties,
    pub evidence: CbomEvidence,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub properties: Vec<NameValue>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CryptoProperties {
    pub asset_type: String,
    pub algorithm_properties: AlgorithmProperties,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct AlgorithmProperties {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub primitive: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// CycloneDX's parameter-set slot: the key size as a string.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parameter_set_identifier: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub padding: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    pub crypto_functions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_size: Option<i64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CbomEvidence {
    pub occurrences: Vec<Occurrence>,
}

/// Where the asset shows up in the code. `location` is the file path;
/// columns are 1-based and inclusive.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Occurrence {
    pub location: String,
    pub line: u32,
    pub start_column: u32,
    pub end_column: u32,
    #[serde(skip_serializing_if = "String::is_empty")]
    pub snippet: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct NameValue {
    pub name: String,
    pub value: String,
}

/// Human-readable component name: variant, sized and moded when known
/// (`AES-128-GCM`, `RSA-2048`, `MD5`), otherwise the function.
fn component_name(asset: &CryptoAsset) -> String {
    let Some(variant) = &asset.variant else {
        return asset.function.clone();
    };
    let mut name = variant.clone();
    if let Some(ks) = asset.key_size {
        name.push_str(&format!("-{ks}"));
    }
    if let Some(mode) = &asset.mode {
        name.push_str(&format!("-{mode}"));
    }
    name
}

fn component_of(asset: &CryptoAsset) -> CbomComponent {
    let mut properties: Vec<NameValue> = Vec::new();
    let mut prop = |name: &str, value: String| {
        properties.push(NameValue {
            name: format!("cryptoscope:{name}"),
            value,
        });
    };
    if asset.confidence.incomplete {
        prop("completeness", "incomplete".into());
    }
    if asset.confidence.merged {
        prop("mergedContexts", "true".into());
    }
    prop("context", asset.context_note.clone());
    prop("criterionApi", asset.criterion_api.clone());
    for (key, value) in &asset.properties {
        prop(&format!("property:{key}"), value.to_string());
    }
    for m in &asset.materials {
        let kind = serde_json::to_value(m.kind)
            .expect("kind serializes")
            .as_str()
            .expect("kind is a string")
            .to_string();
        let mut value = serde_json::to_value(m.value_state)
            .expect("state serializes")
            .as_str()
            .expect("state is a string")
            .to_string();
        if let Some(p) = &m.producer_api {
            value.push_str(&format!(";producer={p}"));
        }
        if let Some(bits) = m.size_bits {
            value.push_str(&format!(";sizeBits={bits}"));
        }
        if let Some(v) = &m.value {
            value.push_str(&format!(";value={v}"));
        }
        prop(&format!("material:{kind}"), value);
    }
    for c in &asset.conflicts {
        prop(
            &format!("conflict:{}", c.key),
            format!("kept={};other={}", c.kept, c.other),
        );
    }

    CbomComponent {
        component_type: "cryptographic-asset".into(),
        bom_ref: asset.asset_id.clone(),
        name: component_name(asset),
        crypto_properties: CryptoProperties {
            asset_type: asset.asset_type.clone(),
            algorithm_properties: AlgorithmProperties {
                primitive: asset.primitive.clone(),
                variant: asset.variant.clone(),
                parameter_set_identifier: asset.key_size.map(|k| k.to_string()),
                mode: asset.mode.clone(),
                padding: asset.padding.clone(),
                digest: asset.digest.clone(),
                crypto_functions: vec![asset.function.clone()],
                key_size: asset.key_size,
            },
        },
        evidence: CbomEvidence {
            occurrences: asset
                .evidence
                .iter()
                .map(|e| Occurrence {
                    location: e.location.file_name.clone(),
                    line: e.location.line,
                    start_column: e.location.start_column,
                    end_column: if e.location.end_line == e.location.line {
                        e.location.end_column
                    } else {
                        e.location.start_column
                    },
                    snippet: e.snippet.clone(),
                })
                .collect(),
        },
        properties,
    }
}

/// Assemble the document. Components keep inventory order (the asset list
/// is already position-sorted); identity fields come from `opts` when
/// supplied so goldens stay byte-stable.
pub fn build_cbom(assets: &[CryptoAsset], subject_name: &str, opts: &CbomOptions) -> CbomDocument {
    let serial = match &opts.serial {
        Some(s) if s.starts_with("urn:uuid:") => s.clone(),
        Some(s) => format!("urn:uuid:{s}"),
        None => format!("urn:uuid:{}", uuid::Uuid::new_v4()),
    };
    let timestamp = opts.timestamp.clone().unwrap_or_else(|| {
        chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
    });
    CbomDocument {
        bom_format: "CycloneDX".into(),
        spec_version: "1.6".into(),
        serial_number: serial,
        version: 1,
        metadata: CbomMetadata {
            timestamp,
            tools: vec![CbomTool {
                name: env!("CARGO_PKG_NAME").into(),
                version: env!("CARGO_PKG_VERSION").into(),
            }],
            component: CbomSubject {
                component_type: "application".into(),
                name: subject_name.into(),
            },
        },
        components: assets.iter().map(component_of).collect(),
    }
}

/// The exact bytes `emit_cbom` writes.
pub fn render_cbom(doc: &CbomDocument) -> String {
    let mut json = serde_json::to_string_pretty(doc).expect("cbom always serializes");
    json.push('\n');
    json
}

pub fn emit_cbom(doc: &CbomDocument, out_path: &Path) -> std::io::Result<()> {
    std::fs::write(out_path, render_cbom(doc))
}
