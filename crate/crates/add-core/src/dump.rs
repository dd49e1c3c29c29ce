//! Textual dump format used by test fixtures.
//!
//! One node per line, children before parents, ids assigned in first-visit
//! depth-first order (high before low), so the output is deterministic for a
//! given construction sequence:
//!
//! ```text
//! 0 t 1
//! 1 t 0
//! 2 v3 0 1        <- id, variable, high id, low id
//! ```

use rustc_hash::FxHashMap;

use crate::manager::{AddManager, AddNode, AddRef, VarId};
use crate::{AddError, Result};

impl AddManager {
    /// Serializes the graph reachable from `f`. The last line is the root.
    pub fn dump(&self, f: AddRef) -> String {
        let mut ids: FxHashMap<AddRef, usize> = FxHashMap::default();
        let mut out = String::new();
        self.dump_rec(f, &mut ids, &mut out);
        out
    }

    fn dump_rec(&self, f: AddRef, ids: &mut FxHashMap<AddRef, usize>, out: &mut String) -> usize {
        if let Some(&id) = ids.get(&f) {
            return id;
        }
        let line = match self.node(f) {
            AddNode::Terminal(v) => format!("t {v}"),
            AddNode::Internal { var, high, low } => {
                let h = self.dump_rec(high, ids, out);
                let l = self.dump_rec(low, ids, out);
                format!("v{} {} {}", var.index(), h, l)
            }
        };
        let id = ids.len();
        ids.insert(f, id);
        out.push_str(&format!("{id} {line}\n"));
        id
    }

    /// Reconstructs a dumped ADD in this manager, returning the root (the
    /// node on the last line).
    pub fn undump(&self, text: &str) -> Result<AddRef> {
        let mut by_id: FxHashMap<usize, AddRef> = FxHashMap::default();
        let mut last = None;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: &str| AddError::BadDump { line: lineno + 1, msg: msg.to_string() };
            let mut parts = line.split_whitespace();
            let id: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("missing node id"))?;
            let kind = parts.next().ok_or_else(|| bad("missing node kind"))?;
            let node = if kind == "t" {
                let v: f64 = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("missing terminal value"))?;
                self.mk_terminal(v)?
            } else if let Some(vs) = kind.strip_prefix('v') {
                let var: usize = vs.parse().map_err(|_| bad("bad variable"))?;
                let h: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("missing high id"))?;
                let l: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| bad("missing low id"))?;
                let high = *by_id.get(&h).ok_or_else(|| bad("unknown high id"))?;
                let low = *by_id.get(&l).ok_or_else(|| bad("unknown low id"))?;
                if var >= self.num_vars() {
                    return Err(AddError::UnregisteredVariable {
                        index: var,
                        count: self.num_vars(),
                    });
                }
                self.mk_node(VarId(var as u32), high, low)
            } else {
                return Err(bad("unknown node kind"));
            };
            by_id.insert(id, node);
            last = Some(node);
        }
        last.ok_or(AddError::BadDump { line: 0, msg: "empty dump".to_string() })
    }
}
