//! Evaluation harness: scores scanner output against labeled reference
//! inventories and runs labeled corpora end to end.
//!
//! A reference label pins an API call by file and line and lists the
//! crypto properties a human labeler established. An asset matches exactly
//! when every labeled property agrees; a null label field is satisfied by
//! anything the scanner found (the labeler could not determine it, so a
//! resolved value is a success, not a mismatch). An asset on the right line
//! and API with wrong or missing properties is a partial match. Several
//! property-identical assets on one label collapse into a single counted
//! match. One asset never satisfies two labels: candidates are consumed
//! greedily in label order, nearest line first.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assets::CryptoAsset;
use crate::scan::{run_scan, ScanConfig, ScanError};

/// One labeled crypto operation in a reference inventory.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ReferenceLabel {
    pub file_name: String,
    pub line: u32,
    /// Qualified call, `Owner.method` (arity-free).
    pub api: String,
    #[serde(default)]
    pub algorithm: Option<String>,
    #[serde(default)]
    pub function: Option<String>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub key_size: Option<i64>,
    /// A documented scanner gap: the label still counts as a false
    /// negative, but an allowlisted miss does not fail the corpus.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_gap: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MatchResult {
    pub exact: usize,
    pub partial: usize,
    pub false_negative: usize,
    pub false_positive: usize,
    pub precision: f64,
    pub recall: f64,
    pub recall_with_partial: f64,
}

impl MatchResult {
    fn finalize(&mut self, label_count: usize) {
        debug_assert_eq!(
            self.exact + self.partial + self.false_negative,
            label_count,
            "every label lands in exactly one bucket"
        );
        let found_and_matched = self.exact + self.partial;
        let found_total = found_and_matched + self.false_positive;
        self.precision = ratio(found_and_matched, found_total);
        self.recall = ratio(self.exact, label_count);
        self.recall_with_partial = ratio(found_and_matched, label_count);
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// `jca:Cipher.doFinal/1` → `Cipher.doFinal`: drop the KB scheme prefix and
/// the arity suffix so labels stay implementation-neutral.
fn short_api(criterion_api: &str) -> &str {
    let after_scheme = criterion_api
        .split_once(':')
        .map_or(criterion_api, |(_, rest)| rest);
    after_scheme
        .split_once('/')
        .map_or(after_scheme, |(name, _)| name)
}

/// The label-relevant projection of an asset; assets identical under this
/// key collapse to one candidate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct AssetKey {
    file: String,
    line: u32,
    api: String,
    function: String,
    algorithm: Option<String>,
    mode: Option<String>,
    key_size: Option<i64>,
}

impl AssetKey {
    fn of(asset: &CryptoAsset) -> AssetKey {
        AssetKey {
            file: asset.criterion_location.file_name.clone(),
            line: asset.criterion_location.line,
            api: short_api(&asset.criterion_api).to_string(),
            function: asset.function.clone(),
            algorithm: asset.variant.clone(),
            mode: asset.mode.clone(),
            key_size: asset.key_size,
        }
    }

    /// Line and API right: at least a partial match for the label.
    fn sits_on(&self, label: &ReferenceLabel) -> bool {
        self.file == label.file_name && self.line == label.line && self.api == label.api
    }

    /// Every labeled property agrees; null label fields accept anything.
    fn satisfies(&self, label: &ReferenceLabel) -> bool {
        let prop = |want: &Option<String>, have: &Option<String>| match want {
            None => true,
            Some(w) => have.as_deref() == Some(w.as_str()),
        };
        prop(&label.algorithm, &self.algorithm)
            && prop(&label.function, &Some(self.function.clone()))
            && prop(&label.mode, &self.mode)
            && match label.key_size {
                None => true,
                Some(k) => self.key_size == Some(k),
            }
    }
}

/// Score assets against labels. Returns the result plus the labels that
/// went unmatched (for gap reporting).
pub fn match_assets(
    labels: &[ReferenceLabel],
    assets: &[CryptoAsset],
) -> (MatchResult, Vec<ReferenceLabel>) {
    // Collapse property-identical assets into single candidates.
    let mut groups: Vec<AssetKey> = assets.iter().map(AssetKey::of).collect();
    groups.sort();
    groups.dedup();
    let mut consumed = vec![false; groups.len()];

    let mut result = MatchResult::default();
    let mut missed = Vec::new();
    // Label order is the greedy order; within a label, exact candidates
    // win over partial ones and earlier groups break ties.
    for label in labels {
        let mut candidates: Vec<usize> = groups
            .iter()
            .enumerate()
            .filter(|(i, g)| !consumed[*i] && g.sits_on(label))
            .map(|(i, _)| i)
            .collect();
        candidates.sort_by_key(|&i| (!groups[i].satisfies(label), i));
        match candidates.first() {
            Some(&i) if groups[i].satisfies(label) => {
                consumed[i] = true;
                result.exact += 1;
            }
            Some(&i) => {
                consumed[i] = true;
                result.partial += 1;
            }
            None => {
                result.false_negative += 1;
                missed.push(label.clone());
            }
        }
    }
    result.false_positive = consumed.iter().filter(|&&c| !c).count();
    result.finalize(labels.len());
    (result, missed)
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("corpus directory {0} does not exist")]
    CorpusDir(PathBuf),
    #[error("{0} is missing {1}")]
    MissingFile(PathBuf, &'static str),
    #[error("cannot parse {path}: {message}")]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Scan(#[from] ScanError),
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Fire/silence accounting for one CWE in one project.
#[derive(Debug, Clone, Default, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CweTally {
    pub expected: usize,
    pub found: usize,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ProjectScore {
    pub name: String,
    pub labels: usize,
    pub matches: MatchResult,
    /// Unmatched labels that declared a known gap.
    pub allowlisted_misses: usize,
    /// Unmatched labels without a declared gap: real failures.
    pub unexplained_misses: Vec<ReferenceLabel>,
    pub vulns: BTreeMap<String, CweTally>,
    /// Labels matched, no stray findings, expected findings all present.
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EvalReport {
    pub corpus_dir: String,
    pub projects: Vec<ProjectScore>,
    pub totals: MatchResult,
    pub per_cwe: BTreeMap<String, CweTally>,
    pub pass: bool,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, EvalError> {
    let text = std::fs::read_to_string(path).map_err(|_| {
        EvalError::MissingFile(
            path.parent().unwrap_or(Path::new("")).to_path_buf(),
            "a readable label file",
        )
    })?;
    serde_json::from_str(&text).map_err(|e| EvalError::Schema {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Scan one labeled project and score it.
pub fn evaluate_project(project_dir: &Path, base: &ScanConfig) -> Result<ProjectScore, EvalError> {
    let labels_path = project_dir.join("labels.json");
    if !labels_path.is_file() {
        return Err(EvalError::MissingFile(
            project_dir.to_path_buf(),
            "labels.json",
        ));
    }
    let labels: Vec<ReferenceLabel> = read_json(&labels_path)?;
    let expected: Vec<String> = {
        let path = project_dir.join("expected-vulns.json");
        if !path.is_file() {
            return Err(EvalError::MissingFile(
                project_dir.to_path_buf(),
                "expected-vulns.json",
            ));
        }
        read_json(&path)?
    };

    let mut config = base.clone();
    config.root_dir = project_dir.to_path_buf();
    config.output_dir = base.output_dir.join(
        project_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".into()),
    );
    let outcome = run_scan(&config)?;

    let (matches, missed) = match_assets(&labels, &outcome.assets);
    let allowlisted_misses = missed.iter().filter(|l| l.known_gap.is_some()).count();
    let unexplained_misses: Vec<ReferenceLabel> = missed
        .into_iter()
        .filter(|l| l.known_gap.is_none())
        .collect();

    let mut vulns: BTreeMap<String, CweTally> = BTreeMap::new();
    for cwe in &expected {
        vulns.entry(cwe.clone()).or_default().expected += 1;
    }
    for report in &outcome.vulns {
        vulns.entry(report.classification.clone()).or_default().found += 1;
    }
    let vulns_ok = vulns.values().all(|t| t.expected == t.found);

    let pass = unexplained_misses.is_empty() && matches.false_positive == 0 && vulns_ok;
    Ok(ProjectScore {
        name: project_dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        labels: labels.len(),
        matches,
        allowlisted_misses,
        unexplained_misses,
        vulns,
        pass,
    })
}

/// Run every labeled project under the corpus directory, aggregate, and
/// write `eval-report.json` into the output directory.
pub fn run_corpus(corpus_dir: &Path, base: &ScanConfig) -> Result<EvalReport, EvalError> {
    if !corpus_dir.is_dir() {
        return Err(EvalError::CorpusDir(corpus_dir.to_path_buf()));
    }
    let mut project_dirs: Vec<PathBuf> = std::fs::read_dir(corpus_dir)
        .map_err(|_| EvalError::CorpusDir(corpus_dir.to_path_buf()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_dir() && p.join("labels.json").is_file())
        .collect();
    project_dirs.sort();

    let mut projects = Vec::new();
    for dir in &project_dirs {
        projects.push(evaluate_project(dir, base)?);
    }

    let mut totals = MatchResult::default();
    let mut label_count = 0;
    let mut per_cwe: BTreeMap<String, CweTally> = BTreeMap::new();
    for p in &projects {
        totals.exact += p.matches.exact;
        totals.partial += p.matches.partial;
        totals.false_negative += p.matches.false_negative;
        totals.false_positive += p.matches.false_positive;
        label_count += p.labels;
        for (cwe, tally) in &p.vulns {
            let agg = per_cwe.entry(cwe.clone()).or_default();
            agg.expected += tally.expected;
            agg.found += tally.found;
        }
    }
    totals.finalize(label_count);

    let report = EvalReport {
        corpus_dir: corpus_dir.display().to_string(),
        pass: projects.iter().all(|p| p.pass),
        projects,
        totals,
        per_cwe,
    };
    std::fs::create_dir_all(&base.output_dir).map_err(|source| EvalError::Io {
        path: base.output_dir.clone(),
        source,
    })?;
    let path = base.output_dir.join("eval-report.json");
    let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
    json.push('\n');
    std::fs::write(&path, json).map_err(|source| EvalError::Io { path, source })?;
    Ok(report)
}

/// Human-readable scoreboard for terminal output.
pub fn format_report(report: &EvalReport) -> String {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "corpus: {}", report.corpus_dir);
    for p in &report.projects {
        let _ = writeln!(
            out,
            "  {} {:<28} labels {:>2}  exact {:>2}  partial {:>2}  fn {:>2} ({} allowlisted)  fp {:>2}",
            if p.pass { "PASS" } else { "FAIL" },
            p.name,
            p.labels,
            p.matches.exact,
            p.matches.partial,
            p.matches.false_negative,
            p.allowlisted_misses,
            p.matches.false_positive,
        );
        for (cwe, t) in &p.vulns {
            if t.expected != t.found {
                let _ = writeln!(
                    out,
                    "         {cwe}: expected {} found {}",
                    t.expected, t.found
                );
            }
        }
    }
    let _ = writeln!(
        out,
        "totals: exact {} partial {} fn {} fp {}  precision {:.3} recall {:.3} recall+partial {:.3}",
        report.totals.exact,
        report.totals.partial,
        report.totals.false_negative,
        report.totals.false_positive,
        report.totals.precision,
        report.totals.recall,
        report.totals.recall_with_partial,
    );
    let _ = writeln!(out, "per-CWE fire table:");
    for (cwe, t) in &report.per_cwe {
        let _ = writeln!(
            out,
            "  {cwe}: expected {} found {} {}",
            t.expected,
            t.found,
            if t.expected == t.found { "ok" } else { "MISMATCH" }
        );
    }
    let _ = writeln!(out, "overall: {}", if report.pass { "PASS" } else { "FAIL" });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assets::{Confidence, Evidence, FindingType};
    use crate::location::Location;
    use std::collections::BTreeMap as Map;

    fn asset(file: &str, line: u32, api: &str, f: &str) -> CryptoAsset {
        let loc = Location::new(file, line, 5, line, 20);
        CryptoAsset {
            asset_id: format!("{file}:{line}"),
            asset_type: "algorithm".into(),
            function: f.into(),
            primitive: None,
            variant: None,
            mode: None,
            padding: None,
            digest: None,
            key_size: None,
            properties: Map::new(),
            materials: vec![],
            evidence: vec![Evidence {
                finding_type: FindingType::FunctionCall,
                location: loc.clone(),
                snippet: String::new(),
            }],
            property_evidence: Map::new(),
            conflicts: vec![],
            context_note: "entry".into(),
            confidence: Confidence::default(),
            criterion_api: api.into(),
            criterion_location: loc,
        }
    }

    fn label(file: &str, line: u32, api: &str) -> ReferenceLabel {
        ReferenceLabel {
            file_name: file.into(),
            line,
            api: api.into(),
            algorithm: None,
            function: None,
            mode: None,
            key_size: None,
            known_gap: None,
        }
    }

    #[test]
    fn identical_properties_match_exactly() {
        let mut a = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
        a.variant = Some("AES".into());
        a.mode = Some("GCM".into());
        a.key_size = Some(256);
        let mut l = label("A.java", 12, "Cipher.doFinal");
        l.algorithm = Some("AES".into());
        l.function = Some("encrypt".into());
        l.mode = Some("GCM".into());
        l.key_size = Some(256);
        let (r, missed) = match_assets(&[l], &[a]);
        assert_eq!((r.exact, r.partial, r.false_negative, r.false_positive), (1, 0, 0, 0));
        assert!(missed.is_empty());
        assert_eq!(r.recall, 1.0);
        assert_eq!(r.precision, 1.0);
    }

    #[test]
    fn missing_property_downgrades_to_partial() {
        let mut a = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
        a.variant = Some("AES".into());
        let mut l = label("A.java", 12, "Cipher.doFinal");
        l.algorithm = Some("AES".into());
        l.mode = Some("GCM".into()); // asset has no mode
        let (r, _) = match_assets(&[l], &[a]);
        assert_eq!((r.exact, r.partial, r.false_negative), (0, 1, 0));
        assert_eq!(r.recall, 0.0);
        assert_eq!(r.recall_with_partial, 1.0);
    }

    #[test]
    fn null_label_fields_accept_any_resolved_value() {
        let mut a = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
        a.variant = Some("AES".into());
        a.mode = Some("GCM".into()); // labeler could not tell; scanner did
        let mut l = label("A.java", 12, "Cipher.doFinal");
        l.algorithm = Some("AES".into());
        let (r, _) = match_assets(&[l], &[a]);
        assert_eq!(r.exact, 1, "null mode/keySize relaxation");
    }

    #[test]
    fn wrong_line_is_a_miss_plus_false_positive() {
        let a = asset("A.java", 13, "jca:Cipher.doFinal/1", "encrypt");
        let l = label("A.java", 12, "Cipher.doFinal");
        let (r, missed) = match_assets(&[l], &[a]);
        assert_eq!((r.exact, r.partial, r.false_negative, r.false_positive), (0, 0, 1, 1));
        assert_eq!(missed.len(), 1);
    }

    #[test]
    fn value_identical_assets_collapse_to_one_match() {
        let mk = || {
            let mut a = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
            a.variant = Some("AES".into());
            a
        };
        let (r, _) = match_assets(
            &[label("A.java", 12, "Cipher.doFinal")],
            &[mk(), mk(), mk()],
        );
        assert_eq!((r.exact, r.false_positive), (1, 0), "collapse counts once");
    }

    #[test]
    fn one_asset_never_satisfies_two_labels() {
        let mut a = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
        a.variant = Some("AES".into());
        let l1 = label("A.java", 12, "Cipher.doFinal");
        let l2 = label("A.java", 12, "Cipher.doFinal");
        let (r, _) = match_assets(&[l1, l2], &[a]);
        assert_eq!((r.exact, r.false_negative), (1, 1));
    }

    #[test]
    fn exact_candidates_win_over_partial_ones() {
        // two assets on the same line and API: one satisfies, one does not
        let mut good = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
        good.variant = Some("AES".into());
        let mut bad = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
        bad.variant = Some("DES".into());
        let mut l = label("A.java", 12, "Cipher.doFinal");
        l.algorithm = Some("AES".into());
        let (r, _) = match_assets(&[l], &[bad, good]);
        assert_eq!(r.exact, 1, "the satisfying asset is chosen");
        assert_eq!(r.false_positive, 1, "the other one is stray");
    }

    #[test]
    fn scoring_is_order_independent() {
        let mut a1 = asset("A.java", 12, "jca:Cipher.doFinal/1", "encrypt");
        a1.variant = Some("AES".into());
        let mut a2 = asset("A.java", 20, "jca:MessageDigest.digest/1", "digest");
        a2.variant = Some("MD5".into());
        let mut l1 = label("A.java", 12, "Cipher.doFinal");
        l1.algorithm = Some("AES".into());
        let mut l2 = label("A.java", 20, "MessageDigest.digest");
        l2.algorithm = Some("MD5".into());
        let (fwd, _) = match_assets(&[l1.clone(), l2.clone()], &[a1.clone(), a2.clone()]);
        let (rev, _) = match_assets(&[l1, l2], &[a2, a1]);
        assert_eq!(fwd, rev);
    }

    #[test]
    fn empty_corpus_counts_are_consistent() {
        let (r, missed) = match_assets(&[], &[]);
        assert_eq!(r, MatchResult { precision: 1.0, recall: 1.0, recall_with_partial: 1.0, ..MatchResult::default() });
        assert!(missed.is_empty());
    }

    #[test]
    fn corpus_run_scores_projects_and_writes_report() {
        let corpus = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let proj = corpus.path().join("des_cipher");
        std::fs::create_dir_all(proj.join("src")).unwrap();
        std::fs::write(
            proj.join("src/Enc.java"),
            "import javax.crypto.*;\n\
             public class Enc {\n\
               byte[] go(SecretKey k, byte[] d) throws Exception {\n\
                 Cipher c = Cipher.getInstance(\"DES\");\n\
                 c.init(Cipher.ENCRYPT_MODE, k);\n\
                 return c.doFinal(d);\n\
               }\n\
             }\n",
        )
        .unwrap();
        std::fs::write(
            proj.join("labels.json"),
            r#"[{"fileName": "src/Enc.java", "line": 6, "api": "Cipher.doFinal",
                 "algorithm": "DES", "function": "encrypt", "mode": "CBC", "keySize": 56}]"#,
        )
        .unwrap();
        std::fs::write(proj.join("expected-vulns.json"), r#"["cwe327"]"#).unwrap();

        let base = ScanConfig::new("unused", out.path());
        let report = run_corpus(corpus.path(), &base).unwrap();
        assert!(report.pass, "{}", format_report(&report));
        assert_eq!(report.totals.exact, 1);
        assert_eq!(report.totals.false_positive, 0);
        assert_eq!(report.per_cwe["cwe327"].expected, 1);
        assert_eq!(report.per_cwe["cwe327"].found, 1);
        assert!(out.path().join("eval-report.json").is_file());
    }

    #[test]
    fn allowlisted_miss_fails_nothing_but_counts_as_false_negative() {
        let corpus = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let proj = corpus.path().join("gap");
        std::fs::create_dir_all(proj.join("src")).unwrap();
        std::fs::write(proj.join("src/Empty.java"), "class Empty { }\n").unwrap();
        std::fs::write(
            proj.join("labels.json"),
            r#"[{"fileName": "src/Empty.java", "line": 1, "api": "Cipher.doFinal",
                 "knownGap": "exercises a construct the scanner does not model"}]"#,
        )
        .unwrap();
        std::fs::write(proj.join("expected-vulns.json"), "[]").unwrap();
        let base = ScanConfig::new("unused", out.path());
        let report = run_corpus(corpus.path(), &base).unwrap();
        assert!(report.pass, "allowlisted miss must not fail the corpus");
        assert_eq!(report.totals.false_negative, 1, "the miss is still counted");
        assert_eq!(report.projects[0].allowlisted_misses, 1);
    }

    #[test]
    fn unexpected_finding_fails_the_project() {
        let corpus = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let proj = corpus.path().join("strays");
        std::fs::create_dir_all(proj.join("src")).unwrap();
        std::fs::write(
            proj.join("src/Hash.java"),
            "import java.security.*;\n\
             class Hash { byte[] h(byte[] d) throws Exception {\n\
               return MessageDigest.getInstance(\"MD5\").digest(d);\n\
             } }\n",
        )
        .unwrap();
        std::fs::write(
            proj.join("labels.json"),
            r#"[{"fileName": "src/Hash.java", "line": 3, "api": "MessageDigest.digest",
                 "algorithm": "MD5", "function": "digest"}]"#,
        )
        .unwrap();
        // claim no findings; the scanner will (correctly) fire cwe328
        std::fs::write(proj.join("expected-vulns.json"), "[]").unwrap();
        let base = ScanConfig::new("unused", out.path());
        let report = run_corpus(corpus.path(), &base).unwrap();
        assert!(!report.pass, "stray finding must fail");
        assert_eq!(report.per_cwe["cwe328"].expected, 0);
        assert_eq!(report.per_cwe["cwe328"].found, 1);
    }

    #[test]
    fn missing_label_file_is_an_error() {
        let corpus = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        let proj = corpus.path().join("p");
        std::fs::create_dir_all(&proj).unwrap();
        std::fs::write(proj.join("labels.json"), "[]").unwrap();
        // no expected-vulns.json
        let base = ScanConfig::new("unused", out.path());
        match run_corpus(corpus.path(), &base) {
            Err(EvalError::MissingFile(_, what)) => assert_eq!(what, "expected-vulns.json"),
            other => panic!("expected missing-file error, got {other:?}"),
        }
    }
}
