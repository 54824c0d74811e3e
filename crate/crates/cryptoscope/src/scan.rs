//! Scan orchestration: prefilter → parse → IR → constants → slices →
//! assets → rules, with all outputs written under one directory.
//!
//! The prefilter prunes files that cannot influence any crypto finding: a
//! file is kept if it textually references a knowledge-base type or import
//! prefix, or if it is connected to such a file in the project call graph.
//! The closure is taken in both directions and unbounded because constant
//! values flow through calls at any depth — pruning must never change the
//! emitted assets, and a caller far above a crypto wrapper can still decide
//! which algorithm string reaches it.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::assets::{build_assets, CryptoAsset};
use crate::cbom::{build_cbom, emit_cbom, CbomDocument, CbomOptions};
use crate::constprop::{propagate, ConstOptions};
use crate::frontend::{list_files, parse_project_files, ProjectError, SubjectProject};
use crate::ir::{build_program_ir, ProgramIr};
use crate::kb::{load_kb, load_policy, KbError, KnowledgeBase, PolicySet};
use crate::slicer::{slice_program, SliceOptions};
use crate::vulns::{count_by_cwe, emit_vuln_report, evaluate_rules, VulnerabilityReport};

/// Environment variable naming a directory of KB overlay documents, used
/// when no explicit overlay paths are configured.
pub const KB_DIR_ENV: &str = "CRYPTOSCOPE_KB_DIR";

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub root_dir: PathBuf,
    /// KB overlay documents merged over the built-in knowledge base.
    pub kb_paths: Vec<PathBuf>,
    pub policy_path: Option<PathBuf>,
    /// Call-string depth for context-sensitive propagation.
    pub context_depth: usize,
    /// Per-criterion cap on individually reported contexts.
    pub max_contexts: usize,
    /// Statement budget per slice.
    pub slice_budget: usize,
    /// Statement-visit budget for constant propagation.
    pub const_budget: u64,
    pub output_dir: PathBuf,
    pub include_globs: Vec<String>,
    pub exclude_globs: Vec<String>,
    pub dump_ir: bool,
    pub dump_slices: bool,
    pub dump_assets: bool,
    pub no_prefilter: bool,
    /// Injectable CBOM identity for reproducible output.
    pub timestamp: Option<String>,
    pub serial: Option<String>,
}

impl ScanConfig {
    pub fn new(root_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        ScanConfig {
            root_dir: root_dir.into(),
            kb_paths: Vec::new(),
            policy_path: None,
            context_depth: 3,
            max_contexts: 64,
            slice_budget: 50_000,
            const_budget: 2_000_000,
            output_dir: output_dir.into(),
            include_globs: Vec::new(),
            exclude_globs: Vec::new(),
            dump_ir: false,
            dump_slices: false,
            dump_assets: false,
            no_prefilter: false,
            timestamp: None,
            serial: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum ScanError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Project(#[from] ProjectError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Wall-clock milliseconds per stage.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StageTimings {
    pub parse_ms: u128,
    pub prefilter_ms: u128,
    pub ir_ms: u128,
    pub constprop_ms: u128,
    pub slice_ms: u128,
    pub assets_ms: u128,
    pub rules_ms: u128,
    pub emit_ms: u128,
    pub total_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ScanReport {
    pub root_dir: String,
    pub files_scanned: usize,
    pub files_pruned: usize,
    pub parse_errors: usize,
    pub total_lines: usize,
    pub criteria_found: usize,
    pub slices: usize,
    pub merged_slices: usize,
    pub incomplete_slices: usize,
    pub assets: usize,
    pub vulns: usize,
    pub vulns_by_cwe: BTreeMap<String, usize>,
    /// Constant propagation ran out of statement visits; values degraded.
    pub const_budget_exceeded: bool,
    pub const_visits: u64,
    pub elapsed: StageTimings,
    pub lines_per_second: u64,
}

/// Everything a scan produced, for callers that want more than files.
#[derive(Debug)]
pub struct ScanOutcome {
    pub report: ScanReport,
    pub assets: Vec<CryptoAsset>,
    pub vulns: Vec<VulnerabilityReport>,
    pub cbom: CbomDocument,
}

#[derive(Debug, Clone)]
pub struct PrefilterResult {
    pub kept: Vec<String>,
    pub pruned: Vec<String>,
}

/// Partition project files into kept and pruned. Kept = textual crypto
/// references ∪ everything call-graph-connected to them.
pub fn prefilter_files(
    project: &SubjectProject,
    ir: &ProgramIr,
    kb: &KnowledgeBase,
) -> PrefilterResult {
    let needle = crypto_needle(kb);
    let mut kept: BTreeSet<String> = project
        .files
        .iter()
        .filter(|f| needle.is_match(&f.source))
        .map(|f| f.rel_path.clone())
        .collect();

    // Undirected file adjacency from resolved project calls.
    let mut adjacent: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for (&callee, sites) in &ir.call_graph.callers_of {
        let callee_file = ir.method(callee).file.as_str();
        for &site in sites {
            let caller_file = ir.method(ir.site(site).method).file.as_str();
            if caller_file != callee_file {
                adjacent.entry(caller_file).or_default().insert(callee_file);
                adjacent.entry(callee_file).or_default().insert(caller_file);
            }
        }
    }
    let mut queue: VecDeque<String> = kept.iter().cloned().collect();
    while let Some(file) = queue.pop_front() {
        if let Some(next) = adjacent.get(file.as_str()) {
            for &n in next {
                if kept.insert(n.to_string()) {
                    queue.push_back(n.to_string());
                }
            }
        }
    }

    let (kept_list, pruned): (Vec<String>, Vec<String>) = project
        .files
        .iter()
        .map(|f| f.rel_path.clone())
        .partition(|p| kept.contains(p));
    PrefilterResult {
        kept: kept_list,
        pruned,
    }
}

/// One regex matching any KB import prefix, owner type, or owner simple
/// name on a word boundary.
fn crypto_needle(kb: &KnowledgeBase) -> regex::Regex {
    let mut alternatives: BTreeSet<String> = BTreeSet::new();
    for p in &kb.import_prefixes {
        alternatives.insert(regex::escape(p));
    }
    for t in kb.owner_types() {
        alternatives.insert(regex::escape(t));
    }
    for s in kb.owner_simple_names() {
        alternatives.insert(regex::escape(s));
    }
    let pattern = format!(
        r"\b(?:{})\b",
        alternatives.into_iter().collect::<Vec<_>>().join("|")
    );
    regex::Regex::new(&pattern).expect("needle regex is valid")
}

fn validate(config: &ScanConfig) -> Result<(), ScanError> {
    if config.max_contexts == 0 {
        return Err(ScanError::Config("max_contexts must be positive".into()));
    }
    if config.slice_budget == 0 {
        return Err(ScanError::Config("slice_budget must be positive".into()));
    }
    if config.const_budget == 0 {
        return Err(ScanError::Config("const_budget must be positive".into()));
    }
    Ok(())
}

/// Overlay documents: explicit paths win; otherwise a KB directory from the
/// environment contributes its `*.json` files in sorted order.
fn resolve_kb_paths(config: &ScanConfig) -> Result<Vec<PathBuf>, ScanError> {
    if !config.kb_paths.is_empty() {
        return Ok(config.kb_paths.clone());
    }
    let Ok(dir) = std::env::var(KB_DIR_ENV) else {
        return Ok(Vec::new());
    };
    let dir = PathBuf::from(dir);
    let entries = std::fs::read_dir(&dir).map_err(|source| ScanError::Io {
        path: dir.clone(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

fn write_output(path: &Path, contents: &str) -> Result<(), ScanError> {
    std::fs::write(path, contents).map_err(|source| ScanError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn dump_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ScanError> {
    let mut json = serde_json::to_string_pretty(value).expect("dump serializes");
    json.push('\n');
    write_output(path, &json)
}

/// Run the full pipeline and write `cbom.json`, `vulns.json` and
/// `scan-report.json` (plus requested dumps) under the output directory.
pub fn run_scan(config: &ScanConfig) -> Result<ScanOutcome, ScanError> {
    validate(config)?;
    let total_start = Instant::now();
    let mut timings = StageTimings::default();

    let kb = load_kb(&resolve_kb_paths(config)?)?;
    let policy: PolicySet = load_policy(&kb, config.policy_path.as_deref())?;

    // Parse everything; the prefilter needs sources and the coarse graph.
    let stage = Instant::now();
    let files = list_files(&config.root_dir, &include_globs(config), &config.exclude_globs)?;
    let full_project = parse_project_files(&config.root_dir, &files);
    timings.parse_ms = stage.elapsed().as_millis();

    let stage = Instant::now();
    let full_ir = build_program_ir(&full_project);
    timings.ir_ms = stage.elapsed().as_millis();

    let stage = Instant::now();
    let (project, ir, pruned) = if config.no_prefilter {
        (full_project, full_ir, Vec::new())
    } else {
        let partition = prefilter_files(&full_project, &full_ir, &kb);
        if partition.pruned.is_empty() {
            (full_project, full_ir, Vec::new())
        } else {
            let kept: BTreeSet<&String> = partition.kept.iter().collect();
            let mut project = full_project;
            project.files.retain(|f| kept.contains(&f.rel_path));
            project
                .parse_errors
                .retain(|e| kept.contains(&e.loc.file_name));
            let ir = build_program_ir(&project);
            (project, ir, partition.pruned)
        }
    };
    timings.prefilter_ms = stage.elapsed().as_millis();

    let stage = Instant::now();
    let consts = propagate(
        &ir,
        &kb.constants,
        &ConstOptions {
            k: config.context_depth,
            budget: config.const_budget,
        },
    );
    timings.constprop_ms = stage.elapsed().as_millis();

    let stage = Instant::now();
    let slices = slice_program(
        &ir,
        &kb,
        &consts,
        &SliceOptions {
            max_contexts: config.max_contexts,
            budget: config.slice_budget,
        },
    );
    timings.slice_ms = stage.elapsed().as_millis();

    let stage = Instant::now();
    let assets = build_assets(&ir, &project, &kb, &slices);
    timings.assets_ms = stage.elapsed().as_millis();

    let stage = Instant::now();
    let vulns = evaluate_rules(&assets, &policy);
    timings.rules_ms = stage.elapsed().as_millis();

    debug_assert!(assets.len() <= slices.len(), "dedupe only ever merges");

    // Emit.
    let stage = Instant::now();
    std::fs::create_dir_all(&config.output_dir).map_err(|source| ScanError::Io {
        path: config.output_dir.clone(),
        source,
    })?;
    let subject = config
        .root_dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| config.root_dir.display().to_string());
    let cbom = build_cbom(
        &assets,
        &subject,
        &CbomOptions {
            timestamp: config.timestamp.clone(),
            serial: config.serial.clone(),
        },
    );
    emit_cbom(&cbom, &config.output_dir.join("cbom.json")).map_err(|source| ScanError::Io {
        path: config.output_dir.join("cbom.json"),
        source,
    })?;
    emit_vuln_report(&vulns, &config.output_dir.join("vulns.json")).map_err(|source| {
        ScanError::Io {
            path: config.output_dir.join("vulns.json"),
            source,
        }
    })?;
    if config.dump_ir {
        dump_json(&config.output_dir.join("ir.json"), &ir)?;
    }
    if config.dump_slices {
        dump_json(&config.output_dir.join("slices.json"), &slices)?;
    }
    if config.dump_assets {
        dump_json(&config.output_dir.join("assets.json"), &assets)?;
    }
    timings.emit_ms = stage.elapsed().as_millis();
    timings.total_ms = total_start.elapsed().as_millis();

    let total_lines = project.total_lines();
    let elapsed_secs = (timings.total_ms.max(1)) as f64 / 1000.0;
    let criteria_found = crate::slicer::find_criteria(&ir, &kb).len();
    let report = ScanReport {
        root_dir: config.root_dir.display().to_string(),
        files_scanned: project.files.len(),
        files_pruned: pruned.len(),
        parse_errors: project.parse_errors.len(),
        total_lines,
        criteria_found,
        slices: slices.len(),
        merged_slices: slices.iter().filter(|s| s.merged).count(),
        incomplete_slices: slices.iter().filter(|s| s.incomplete).count(),
        assets: assets.len(),
        vulns: vulns.len(),
        vulns_by_cwe: count_by_cwe(&vulns),
        const_budget_exceeded: consts.budget_exceeded,
        const_visits: consts.visits,
        elapsed: timings,
        lines_per_second: (total_lines as f64 / elapsed_secs) as u64,
    };
    dump_json(&config.output_dir.join("scan-report.json"), &report)?;

    Ok(ScanOutcome {
        report,
        assets,
        vulns,
        cbom,
    })
}

fn include_globs(config: &ScanConfig) -> Vec<String> {
    if config.include_globs.is_empty() {
        vec!["**/*.java".to_string()]
    } else {
        config.include_globs.clone()
    }
}
