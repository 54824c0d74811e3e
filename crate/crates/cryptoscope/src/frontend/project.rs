//! Whole-project parsing: deterministic file discovery plus per-file parsing.
//!
//! Files are discovered under a root directory, filtered by glob patterns,
//! sorted lexicographically by their root-relative path and parsed
//! independently (in parallel). The result is identical regardless of thread
//! count because the output order is fixed by the sorted path list.

use super::ast::CompilationUnit;
use super::lexer::ParseIssue;
use super::parser::parse_compilation_unit;
use crate::location::{LineIndex, Location};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use walkdir::WalkDir;

/// A parsed source file plus everything needed to slice evidence snippets
/// back out of it.
#[derive(Debug)]
pub struct SourceFile {
    /// Root-relative path with `/` separators; the stable file identity used
    /// in every report.
    pub rel_path: String,
    pub source: String,
    pub line_index: LineIndex,
    pub unit: CompilationUnit,
}

impl SourceFile {
    pub fn snippet(&self, loc: &Location) -> Option<&str> {
        self.line_index.slice(&self.source, loc)
    }

    pub fn line_count(&self) -> usize {
        self.line_index.line_count()
    }
}

#[derive(Debug, Default)]
pub struct SubjectProject {
    pub root_dir: PathBuf,
    /// Sorted by `rel_path`.
    pub files: Vec<SourceFile>,
    pub parse_errors: Vec<ParseIssue>,
}

impl SubjectProject {
    pub fn file(&self, rel_path: &str) -> Option<&SourceFile> {
        self.files
            .binary_search_by(|f| f.rel_path.as_str().cmp(rel_path))
            .ok()
            .map(|i| &self.files[i])
    }

    pub fn total_lines(&self) -> usize {
        self.files.iter().map(|f| f.line_count()).sum()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ProjectError {
    #[error("root directory {0} does not exist or is not readable")]
    RootDir(PathBuf),
}

/// List subject files under `root`, honoring include/exclude globs, sorted by
/// root-relative path. This is the single source of file ordering for the
/// whole pipeline.
pub fn list_files(
    root: &Path,
    include_globs: &[String],
    exclude_globs: &[String],
) -> Result<Vec<String>, ProjectError> {
    if !root.is_dir() {
        return Err(ProjectError::RootDir(root.to_path_buf()));
    }
    let include: Vec<regex::Regex> = include_globs.iter().map(|g| glob_to_regex(g)).collect();
    let exclude: Vec<regex::Regex> = exclude_globs.iter().map(|g| glob_to_regex(g)).collect();
    let mut out = Vec::new();
    for entry in WalkDir::new(root).follow_links(false).sort_by_file_name() {
        let entry = match entry {
            Ok(e) => e,
            Err(_) => continue,
        };
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = match entry.path().strip_prefix(root) {
            Ok(r) => r,
            Err(_) => continue,
        };
        let rel_str = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        if !include.iter().any(|re| re.is_match(&rel_str)) {
            continue;
        }
        if exclude.iter().any(|re| re.is_match(&rel_str)) {
            continue;
        }
        out.push(rel_str);
    }
    out.sort();
    Ok(out)
}

/// Parse every listed file. Unreadable or non-UTF-8 files become parse-error
/// entries rather than hard failures.
pub fn parse_project_files(root: &Path, rel_paths: &[String]) -> SubjectProject {
    let mut parsed: Vec<(Option<SourceFile>, Vec<ParseIssue>)> = rel_paths
        .par_iter()
        .map(|rel| {
            let abs = root.join(rel);
            let bytes = match std::fs::read(&abs) {
                Ok(b) => b,
                Err(err) => {
                    return (
                        None,
                        vec![ParseIssue {
                            loc: Location::point(rel.clone(), 1, 1),
                            message: format!("cannot read file: {err}"),
                        }],
                    );
                }
            };
            let source = match String::from_utf8(bytes) {
                Ok(s) => s,
                Err(_) => {
                    return (
                        None,
                        vec![ParseIssue {
                            loc: Location::point(rel.clone(), 1, 1),
                            message: "file is not valid UTF-8".to_string(),
                        }],
                    );
                }
            };
            let (unit, issues) = parse_compilation_unit(&source, rel);
            let line_index = LineIndex::new(&source);
            (
                Some(SourceFile {
                    rel_path: rel.clone(),
                    line_index,
                    source,
                    unit,
                }),
                issues,
            )
        })
        .collect();

    let mut project = SubjectProject {
        root_dir: root.to_path_buf(),
        files: Vec::new(),
        parse_errors: Vec::new(),
    };
    for (file, issues) in parsed.drain(..) {
        if let Some(f) = file {
            project.files.push(f);
        }
        project.parse_errors.extend(issues);
    }
    project
}

/// Discover and parse a project in one step with the default `**/*.java`
/// include set.
pub fn parse_project(
    root: &Path,
    include_globs: &[String],
    exclude_globs: &[String],
) -> Result<SubjectProject, ProjectError> {
    let includes = if include_globs.is_empty() {
        vec!["**/*.java".to_string()]
    } else {
        include_globs.to_vec()
    };
    let files = list_files(root, &includes, exclude_globs)?;
    Ok(parse_project_files(root, &files))
}

/// Translate a glob (`*`, `**`, `?`) into an anchored regex over `/`-separated
/// relative paths.
fn glob_to_regex(glob: &str) -> regex::Regex {
    let mut pattern = String::from("^");
    let mut chars = glob.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '*' => {
                if chars.peek() == Some(&'*') {
                    chars.next();
                    // `**/` matches zero or more directories
                    if chars.peek() == Some(&'/') {
                        chars.next();
                        pattern.push_str("(?:.*/)?");
                    } else {
                        pattern.push_str(".*");
                    }
                } else {
                    pattern.push_str("[^/]*");
                }
            }
            '?' => pattern.push_str("[^/]"),
            other => pattern.push_str(&regex::escape(&other.to_string())),
        }
    }
    pattern.push('$');
    regex::Regex::new(&pattern).expect("glob translates to valid regex")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(root: &Path, rel: &str, content: &str) {
        let p = root.join(rel);
        fs::create_dir_all(p.parent().unwrap()).unwrap();
        fs::write(p, content).unwrap();
    }

    #[test]
    fn globs_match_relative_paths() {
        let re = glob_to_regex("**/*.java");
        assert!(re.is_match("A.java"));
        assert!(re.is_match("a/b/C.java"));
        assert!(!re.is_match("a/b/C.kt"));
        let re2 = glob_to_regex("src/*.java");
        assert!(re2.is_match("src/A.java"));
        assert!(!re2.is_match("src/sub/A.java"));
    }

    #[test]
    fn files_are_listed_sorted_and_filtered() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "b/Z.java", "class Z { }");
        write(dir.path(), "a/A.java", "class A { }");
        write(dir.path(), "a/notes.txt", "not java");
        let files = list_files(dir.path(), &["**/*.java".into()], &[]).unwrap();
        assert_eq!(files, vec!["a/A.java".to_string(), "b/Z.java".to_string()]);
    }

    #[test]
    fn binary_blob_becomes_single_parse_error() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "ok/Good.java", "class Good { }");
        fs::create_dir_all(dir.path().join("bad")).unwrap();
        fs::write(dir.path().join("bad/Blob.java"), [0xFFu8, 0xFE, 0x00, 0x01]).unwrap();
        let project = parse_project(dir.path(), &[], &[]).unwrap();
        assert_eq!(project.files.len(), 1);
        assert_eq!(project.parse_errors.len(), 1);
        assert!(project.parse_errors[0].message.contains("UTF-8"));
        assert_eq!(project.parse_errors[0].loc.file_name, "bad/Blob.java");
    }

    #[test]
    fn parse_is_deterministic_across_thread_counts() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..12 {
            write(
                dir.path(),
                &format!("f{i}/C{i}.java"),
                &format!("class C{i} {{ void m() {{ int x = {i}; }} }}"),
            );
        }
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| parse_project(dir.path(), &[], &[]).unwrap());
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(8)
            .build()
            .unwrap()
            .install(|| parse_project(dir.path(), &[], &[]).unwrap());
        let paths = |p: &SubjectProject| p.files.iter().map(|f| f.rel_path.clone()).collect::<Vec<_>>();
        assert_eq!(paths(&single), paths(&multi));
        for (a, b) in single.files.iter().zip(multi.files.iter()) {
            assert_eq!(
                serde_json::to_string(&a.unit).unwrap(),
                serde_json::to_string(&b.unit).unwrap()
            );
        }
    }
}
