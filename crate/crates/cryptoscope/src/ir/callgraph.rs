//! Project-level call graph over resolved call sites.

use super::{CallSite, CallSiteId, CallTarget, MethodId, MethodIr};
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Default, Serialize)]
pub struct CallGraph {
    /// Call sites whose target resolved to a project method, keyed by callee.
    pub callers_of: BTreeMap<MethodId, Vec<CallSiteId>>,
    /// Every call site, keyed by the method containing it.
    pub sites_in: BTreeMap<MethodId, Vec<CallSiteId>>,
    /// Methods with no incoming project edge; analysis entry points.
    pub roots: Vec<MethodId>,
}

impl CallGraph {
    pub fn callers(&self, callee: MethodId) -> &[CallSiteId] {
        self.callers_of.get(&callee).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sites(&self, method: MethodId) -> &[CallSiteId] {
        self.sites_in.get(&method).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Project methods this method calls, deduplicated, in site order.
    pub fn callees(&self, method: MethodId, sites: &[CallSite]) -> Vec<MethodId> {
        let mut out = Vec::new();
        for &sid in self.sites(method) {
            if let CallTarget::Project(m) = sites[sid].target {
                if !out.contains(&m) {
                    out.push(m);
                }
            }
        }
        out
    }
}

pub fn build_call_graph(methods: &[MethodIr], sites: &[CallSite]) -> CallGraph {
    let mut callers_of: BTreeMap<MethodId, Vec<CallSiteId>> = BTreeMap::new();
    let mut sites_in: BTreeMap<MethodId, Vec<CallSiteId>> = BTreeMap::new();
    for site in sites {
        sites_in.entry(site.method).or_default().push(site.id);
        if let CallTarget::Project(callee) = site.target {
            callers_of.entry(callee).or_default().push(site.id);
        }
    }
    let roots = methods
        .iter()
        .map(|m| m.id)
        .filter(|id| !callers_of.contains_key(id))
        .collect();
    CallGraph {
        callers_of,
        sites_in,
        roots,
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend;
    use crate::ir::build_program_ir;

    #[test]
    fn roots_exclude_called_methods() {
        let src = "class A {\n\
               void main() { work(); }\n\
               void work() { }\n\
               void unused() { }\n\
             }";
        let (unit, issues) = frontend::parse_compilation_unit(src, "T.java");
        assert!(issues.is_empty());
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
        let ir = build_program_ir(&project);
        let main_id = ir.method_index[&("A".into(), "main".into(), 0)];
        let work_id = ir.method_index[&("A".into(), "work".into(), 0)];
        let unused_id = ir.method_index[&("A".into(), "unused".into(), 0)];
        assert!(ir.call_graph.roots.contains(&main_id));
        assert!(ir.call_graph.roots.contains(&unused_id));
        assert!(!ir.call_graph.roots.contains(&work_id));
        assert_eq!(ir.call_graph.callees(main_id, &ir.call_sites), vec![work_id]);
    }
}
