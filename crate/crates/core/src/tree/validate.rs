use std::fmt;

use crate::bp::{combine, summarize_block, NodeSummary};
use crate::node::{NodeId, ARITY, MIN_CHILDREN};
use crate::store::LocalStore;

use super::update::min_leaf;

/// One broken rule, located by the child indices leading from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub path: Vec<usize>,
    pub rule: &'static str,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return write!(f, "ok");
        }
        for v in &self.violations {
            writeln!(f, "{:?}: {}: {}", v.path, v.rule, v.detail)?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    store: &'a LocalStore,
    height: usize,
    report: ValidationReport,
    seen: Vec<bool>,
}

impl Checker<'_> {
    fn flag(&mut self, path: &[usize], rule: &'static str, detail: String) {
        self.report.violations.push(Violation { path: path.to_vec(), rule, detail });
    }

    /// Returns the summary recomputed from the leaves below `id`.
    fn visit(&mut self, id: NodeId, path: &mut Vec<usize>) -> NodeSummary {
        let slots = self.store.slots().len();
        if id == 0 || id as usize >= slots {
            self.flag(path, "dangling-child", format!("node id {id} outside 1..{slots}"));
            return NodeSummary::EMPTY;
        }
        if std::mem::replace(&mut self.seen[id as usize], true) {
            self.flag(path, "shared-node", format!("node {id} reachable twice"));
            return NodeSummary::EMPTY;
        }
        let node = *self.store.get(id);
        let is_root = path.is_empty();
        let depth = path.len() + 1;
        let cap = crate::store::NodeRead::leaf_cap(&self.store);

        let actual = if node.is_leaf() {
            if depth != self.height {
                self.flag(path, "leaf-depth", format!("leaf at depth {depth}, height is {}", self.height));
            }
            if node.len() > cap {
                self.flag(path, "leaf-overflow", format!("{} parentheses, capacity {cap}", node.len()));
            }
            if !is_root && node.len() < min_leaf(cap) {
                self.flag(path, "leaf-underflow", format!("{} parentheses, minimum {}", node.len(), min_leaf(cap)));
            }
            summarize_block(&node.block())
        } else {
            let k = node.child_count();
            let min = if is_root { 2 } else { MIN_CHILDREN };
            if k < min || k > ARITY {
                self.flag(path, "child-count", format!("{k} children, allowed {min}..={ARITY}"));
            }
            if depth >= self.height {
                self.flag(path, "leaf-depth", format!("internal node at depth {depth}, height is {}", self.height));
                return node.summary();
            }
            let mut acc = NodeSummary::EMPTY;
            for (c, child) in node.children().enumerate() {
                path.push(c);
                acc = combine(acc, self.visit(child, path));
                path.pop();
            }
            acc
        };
        if node.summary() != actual {
            self.flag(path, "summary", format!("stored {:?}, recomputed {:?}", node.summary(), actual));
        }
        actual
    }
}

pub(crate) fn validate(store: &LocalStore) -> ValidationReport {
    let h = store.header_direct();
    let mut ck = Checker {
        store,
        height: h.height as usize,
        report: ValidationReport::default(),
        seen: vec![false; store.slots().len()],
    };
    let total = ck.visit(h.root, &mut Vec::new());
    if !total.num_parens.is_multiple_of(2) {
        ck.flag(&[], "odd-length", format!("{} parentheses", total.num_parens));
    }
    if total.total_excess != 0 || (!total.is_empty() && total.min_excess < 0) {
        ck.flag(
            &[],
            "unbalanced",
            format!("total excess {}, minimum excess {}", total.total_excess, total.min_excess),
        );
    }
    ck.report
}
