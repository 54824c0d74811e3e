//! Intra-method control-flow graphs over lowered statements.
//!
//! Nodes are the method entry, the method exit and one node per atomic
//! statement (declarations, assignments, expression statements, returns and
//! branch conditions). Edges carry the label of the control transfer that
//! realizes them.

use serde::Serialize;

pub type StmtId = usize;
pub type CfgNode = usize;

pub const ENTRY: CfgNode = 0;
pub const EXIT: CfgNode = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum EdgeLabel {
    Fallthrough,
    True,
    False,
    LoopBack,
}

#[derive(Debug, Clone, Serialize)]
pub struct CfgEdge {
    pub from: CfgNode,
    pub to: CfgNode,
    pub label: EdgeLabel,
}

/// Structured statement tree driving CFG construction. The lowering pass
/// produces this alongside the flat statement arena.
#[derive(Debug, Clone)]
pub enum ShapeNode {
    Stmt(StmtId),
    Return(StmtId),
    If {
        cond: StmtId,
        then_branch: Vec<ShapeNode>,
        else_branch: Vec<ShapeNode>,
    },
    While {
        cond: StmtId,
        body: Vec<ShapeNode>,
    },
    For {
        init: Option<StmtId>,
        cond: StmtId,
        update: Option<StmtId>,
        body: Vec<ShapeNode>,
    },
    Try {
        body: Vec<ShapeNode>,
        catches: Vec<(StmtId, Vec<ShapeNode>)>,
        finally: Vec<ShapeNode>,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Cfg {
    pub node_count: usize,
    pub edges: Vec<CfgEdge>,
    #[serde(skip)]
    pub succs: Vec<Vec<(CfgNode, EdgeLabel)>>,
    #[serde(skip)]
    pub preds: Vec<Vec<(CfgNode, EdgeLabel)>>,
}

pub fn node_of(stmt: StmtId) -> CfgNode {
    stmt + 2
}

pub fn stmt_of(node: CfgNode) -> Option<StmtId> {
    node.checked_sub(2)
}

pub fn build_cfg(stmt_count: usize, shape: &[ShapeNode]) -> Cfg {
    let mut builder = CfgBuilder {
        node_count: stmt_count + 2,
        edges: Vec::new(),
    };
    let ends = builder.wire(shape, vec![(ENTRY, EdgeLabel::Fallthrough)]);
    for (from, label) in ends {
        builder.edge(from, EXIT, label);
    }
    builder.finish()
}

struct CfgBuilder {
    node_count: usize,
    edges: Vec<CfgEdge>,
}

impl CfgBuilder {
    fn edge(&mut self, from: CfgNode, to: CfgNode, label: EdgeLabel) {
        self.edges.push(CfgEdge { from, to, label });
    }

    fn connect(&mut self, incoming: &[(CfgNode, EdgeLabel)], to: CfgNode) {
        for (from, label) in incoming {
            self.edge(*from, to, *label);
        }
    }

    /// Wire a statement sequence given the dangling edges that should enter
    /// it; returns the dangling edges leaving the sequence.
    fn wire(
        &mut self,
        nodes: &[ShapeNode],
        mut incoming: Vec<(CfgNode, EdgeLabel)>,
    ) -> Vec<(CfgNode, EdgeLabel)> {
        for node in nodes {
            incoming = self.wire_one(node, incoming);
        }
        incoming
    }

    fn wire_one(
        &mut self,
        node: &ShapeNode,
        incoming: Vec<(CfgNode, EdgeLabel)>,
    ) -> Vec<(CfgNode, EdgeLabel)> {
        match node {
            ShapeNode::Stmt(s) => {
                let n = node_of(*s);
                self.connect(&incoming, n);
                vec![(n, EdgeLabel::Fallthrough)]
            }
            ShapeNode::Return(s) => {
                let n = node_of(*s);
                self.connect(&incoming, n);
                self.edge(n, EXIT, EdgeLabel::Fallthrough);
                Vec::new()
            }
            ShapeNode::If {
                cond,
                then_branch,
                else_branch,
            } => {
                let c = node_of(*cond);
                self.connect(&incoming, c);
                let mut ends = self.wire(then_branch, vec![(c, EdgeLabel::True)]);
                ends.extend(self.wire(else_branch, vec![(c, EdgeLabel::False)]));
                ends
            }
            ShapeNode::While { cond, body } => {
                let c = node_of(*cond);
                self.connect(&incoming, c);
                let body_ends = self.wire(body, vec![(c, EdgeLabel::True)]);
                for (from, _) in body_ends {
                    self.edge(from, c, EdgeLabel::LoopBack);
                }
                // the false edge doubles as the loop's synthetic exit
                vec![(c, EdgeLabel::False)]
            }
            ShapeNode::For {
                init,
                cond,
                update,
                body,
            } => {
                let c = node_of(*cond);
                let mut into_cond = incoming;
                if let Some(init) = init {
                    let i = node_of(*init);
                    self.connect(&into_cond, i);
                    into_cond = vec![(i, EdgeLabel::Fallthrough)];
                }
                self.connect(&into_cond, c);
                let body_ends = self.wire(body, vec![(c, EdgeLabel::True)]);
                match update {
                    Some(u) => {
                        let un = node_of(*u);
                        self.connect(&body_ends, un);
                        self.edge(un, c, EdgeLabel::LoopBack);
                    }
                    None => {
                        for (from, _) in body_ends {
                            self.edge(from, c, EdgeLabel::LoopBack);
                        }
                    }
                }
                vec![(c, EdgeLabel::False)]
            }
            ShapeNode::Try {
                body,
                catches,
                finally,
            } => {
                // Exceptions can fire anywhere in the try body, so each catch
                // is entered straight from the try's entry edge frontier: the
                // analysis assumes a catch can run with none of the body's
                // effects applied.
                let body_ends = self.wire(body, incoming.clone());
                let mut all_ends = body_ends;
                for (decl, cbody) in catches {
                    let d = node_of(*decl);
                    self.connect(&incoming, d);
                    let catch_ends = self.wire(cbody, vec![(d, EdgeLabel::Fallthrough)]);
                    all_ends.extend(catch_ends);
                }
                if finally.is_empty() {
                    all_ends
                } else {
                    self.wire(finally, all_ends)
                }
            }
        }
    }

    fn finish(self) -> Cfg {
        let mut succs = vec![Vec::new(); self.node_count];
        let mut preds = vec![Vec::new(); self.node_count];
        for e in &self.edges {
            succs[e.from].push((e.to, e.label));
            preds[e.to].push((e.from, e.label));
        }
        for v in succs.iter_mut().chain(preds.iter_mut()) {
            v.sort();
            v.dedup();
        }
        Cfg {
            node_count: self.node_count,
            edges: self.edges,
            succs,
            preds,
        }
    }
}

impl Cfg {
    /// Nodes reachable from entry, in ascending order.
    pub fn reachable(&self) -> Vec<CfgNode> {
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![ENTRY];
        seen[ENTRY] = true;
        while let Some(n) = stack.pop() {
            for (succ, _) in &self.succs[n] {
                if !seen[*succ] {
                    seen[*succ] = true;
                    stack.push(*succ);
                }
            }
        }
        (0..self.node_count).filter(|n| seen[*n]).collect()
    }

    /// True when `to` is reachable from `from` following forward edges.
    pub fn reaches(&self, from: CfgNode, to: CfgNode) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(n) = stack.pop() {
            for (succ, _) in &self.succs[n] {
                if *succ == to {
                    return true;
                }
                if !seen[*succ] {
                    seen[*succ] = true;
                    stack.push(*succ);
                }
            }
        }
        false
    }
}
