use std::cell::{Cell, RefCell};

use rustc_hash::{FxHashMap, FxHashSet};

use crate::cache::{CacheKey, CacheStats, OpCache};
use crate::error::AddError;
use crate::Result;

/// A variable, identified by its position in the manager's fixed order.
///
/// Position 0 is the topmost (most significant) variable. The order is total
/// and fixed for the lifetime of a manager; new variables may only be
/// appended at the end.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Opaque handle to one canonical node. Valid only within the manager that
/// produced it; equal handles mean equal functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AddRef(pub(crate) u32);

impl AddRef {
    pub(crate) fn raw(self) -> u32 {
        self.0
    }
}

/// Contents of a node: a real terminal or an internal decision node with the
/// `high` child for var = 1 and the `low` child for var = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AddNode {
    Terminal(f64),
    Internal { var: VarId, high: AddRef, low: AddRef },
}

/// Pointwise binary operators supported by [`AddManager::apply`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Min,
    Max,
}

impl BinOp {
    fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Min => a.min(b),
            BinOp::Max => a.max(b),
        }
    }

    fn commutative(self) -> bool {
        !matches!(self, BinOp::Sub)
    }

    fn tag(self) -> u8 {
        match self {
            BinOp::Add => 0,
            BinOp::Sub => 1,
            BinOp::Mul => 2,
            BinOp::Min => 3,
            BinOp::Max => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Min => "min",
            BinOp::Max => "max",
        }
    }
}

/// A partial 0/1 assignment to variables, used by [`AddManager::eval`].
#[derive(Debug, Clone, Default)]
pub struct Assignment {
    bits: Vec<Option<bool>>,
}

impl Assignment {
    pub fn new() -> Self {
        Assignment { bits: Vec::new() }
    }

    /// Total assignment from a dense bit slice (index = variable position).
    pub fn from_bits(bits: &[bool]) -> Self {
        Assignment { bits: bits.iter().map(|&b| Some(b)).collect() }
    }

    pub fn set(&mut self, var: VarId, value: bool) {
        let i = var.index();
        if self.bits.len() <= i {
            self.bits.resize(i + 1, None);
        }
        self.bits[i] = Some(value);
    }

    pub fn get(&self, var: VarId) -> Option<bool> {
        self.bits.get(var.index()).copied().flatten()
    }
}

const INVALID: u32 = u32::MAX;

/// The ADD manager: owns the node store, the unique table and the operation
/// cache. All construction goes through the manager, which enforces
/// reducedness and hash consing, so handle equality is function equality.
pub struct AddManager {
    nodes: RefCell<Vec<AddNode>>,
    /// terminal value bits -> node
    terminals: RefCell<FxHashMap<u64, AddRef>>,
    /// (var, high, low) -> node
    unique: RefCell<FxHashMap<(u32, u32, u32), u32>>,
    cache: RefCell<OpCache>,
    cache_enabled: Cell<bool>,
    num_vars: Cell<u32>,
    zero: Cell<u32>,
    one: Cell<u32>,
}

impl Default for AddManager {
    fn default() -> Self {
        Self::new()
    }
}

impl AddManager {
    pub fn new() -> Self {
        let m = AddManager {
            nodes: RefCell::new(Vec::new()),
            terminals: RefCell::new(FxHashMap::default()),
            unique: RefCell::new(FxHashMap::default()),
            cache: RefCell::new(OpCache::new()),
            cache_enabled: Cell::new(true),
            num_vars: Cell::new(0),
            zero: Cell::new(INVALID),
            one: Cell::new(INVALID),
        };
        let z = m.mk_terminal(0.0).expect("finite");
        let o = m.mk_terminal(1.0).expect("finite");
        m.zero.set(z.raw());
        m.one.set(o.raw());
        m
    }

    /// Manager with `n` variables pre-registered.
    pub fn with_vars(n: usize) -> Self {
        let m = Self::new();
        m.add_vars(n);
        m
    }

    /// Appends `n` fresh variables at the end of the order.
    pub fn add_vars(&self, n: usize) -> Vec<VarId> {
        let start = self.num_vars.get();
        self.num_vars.set(start + n as u32);
        (start..start + n as u32).map(VarId).collect()
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars.get() as usize
    }

    /// Total number of nodes currently stored (live or garbage).
    pub fn num_nodes(&self) -> usize {
        self.nodes.borrow().len()
    }

    /// The canonical 0.0 terminal.
    pub fn zero(&self) -> AddRef {
        AddRef(self.zero.get())
    }

    /// The canonical 1.0 terminal.
    pub fn one(&self) -> AddRef {
        AddRef(self.one.get())
    }

    /// Node contents behind a handle.
    pub fn node(&self, f: AddRef) -> AddNode {
        self.nodes.borrow()[f.raw() as usize]
    }

    fn check(&self, f: AddRef) -> Result<()> {
        if (f.raw() as usize) < self.nodes.borrow().len() {
            Ok(())
        } else {
            Err(AddError::InvalidHandle(f.raw()))
        }
    }

    pub fn is_terminal(&self, f: AddRef) -> bool {
        matches!(self.node(f), AddNode::Terminal(_))
    }

    /// Terminal value if `f` is constant.
    pub fn terminal_value(&self, f: AddRef) -> Option<f64> {
        match self.node(f) {
            AddNode::Terminal(v) => Some(v),
            AddNode::Internal { .. } => None,
        }
    }

    /// Order position of the decision variable, or `u32::MAX` for terminals.
    /// Handy for "which node splits first" comparisons.
    pub(crate) fn level(&self, f: AddRef) -> u32 {
        match self.node(f) {
            AddNode::Terminal(_) => u32::MAX,
            AddNode::Internal { var, .. } => var.0,
        }
    }

    /// The canonical terminal for `v`. Repeated calls with the same value
    /// return the same handle; -0.0 is normalized to +0.0.
    pub fn mk_terminal(&self, v: f64) -> Result<AddRef> {
        if !v.is_finite() {
            return Err(AddError::NonFiniteTerminal(v));
        }
        let v = if v == 0.0 { 0.0 } else { v };
        let key = v.to_bits();
        if let Some(&r) = self.terminals.borrow().get(&key) {
            return Ok(r);
        }
        let r = self.push(AddNode::Terminal(v));
        self.terminals.borrow_mut().insert(key, r);
        Ok(r)
    }

    /// The projection function of `x`: Internal(x, 1, 0).
    pub fn mk_var(&self, x: VarId) -> Result<AddRef> {
        if x.0 >= self.num_vars.get() {
            return Err(AddError::UnregisteredVariable {
                index: x.index(),
                count: self.num_vars(),
            });
        }
        Ok(self.mk_node(x, self.one(), self.zero()))
    }

    /// Reduced, hash-consed internal node. Returns `high` directly when the
    /// children coincide.
    pub fn mk_node(&self, var: VarId, high: AddRef, low: AddRef) -> AddRef {
        if high == low {
            return high;
        }
        debug_assert!(self.level(high) > var.0 && self.level(low) > var.0, "order violation");
        let key = (var.0, high.raw(), low.raw());
        if let Some(&idx) = self.unique.borrow().get(&key) {
            return AddRef(idx);
        }
        let r = self.push(AddNode::Internal { var, high, low });
        self.unique.borrow_mut().insert(key, r.raw());
        r
    }

    fn push(&self, node: AddNode) -> AddRef {
        let mut nodes = self.nodes.borrow_mut();
        let idx = nodes.len() as u32;
        nodes.push(node);
        AddRef(idx)
    }

    /// Pointwise combination of two functions. The result is canonical and
    /// cached under (op, f, g). Overflow to a non-finite value is an error.
    pub fn apply(&self, op: BinOp, f: AddRef, g: AddRef) -> Result<AddRef> {
        self.check(f)?;
        self.check(g)?;
        self.apply_rec(op, f, g)
    }

    fn apply_rec(&self, op: BinOp, f: AddRef, g: AddRef) -> Result<AddRef> {
        // Terminal-terminal base case.
        let fn_ = self.node(f);
        let gn = self.node(g);
        if let (AddNode::Terminal(a), AddNode::Terminal(b)) = (fn_, gn) {
            let v = op.eval(a, b);
            if !v.is_finite() {
                return Err(AddError::NonFiniteResult { op: op.name(), lhs: a, rhs: b });
            }
            return self.mk_terminal(v);
        }
        // Algebraic shortcuts that do not depend on descending.
        match op {
            BinOp::Add => {
                if f == self.zero() {
                    return Ok(g);
                }
                if g == self.zero() {
                    return Ok(f);
                }
            }
            BinOp::Sub => {
                if g == self.zero() {
                    return Ok(f);
                }
                if f == g {
                    return Ok(self.zero());
                }
            }
            BinOp::Mul => {
                if f == self.zero() || g == self.zero() {
                    return Ok(self.zero());
                }
                if f == self.one() {
                    return Ok(g);
                }
                if g == self.one() {
                    return Ok(f);
                }
            }
            BinOp::Min | BinOp::Max => {
                if f == g {
                    return Ok(f);
                }
            }
        }
        let (f, g) = if op.commutative() && f.raw() > g.raw() { (g, f) } else { (f, g) };
        let key = CacheKey::Bin(op.tag(), f.raw(), g.raw());
        if self.cache_enabled.get() {
            if let Some(r) = self.cache.borrow_mut().get(&key) {
                return Ok(r);
            }
        }
        // Split on the topmost variable of the two operands.
        let (var, f1, f0) = self.top_cofactors(f);
        let (gvar, g1, g0) = self.top_cofactors(g);
        let (var, f1, f0, g1, g0) = match (var, gvar) {
            (Some(v), Some(w)) => {
                if v.0 < w.0 {
                    (v, f1, f0, g, g)
                } else if w.0 < v.0 {
                    (w, f, f, g1, g0)
                } else {
                    (v, f1, f0, g1, g0)
                }
            }
            (Some(v), None) => (v, f1, f0, g, g),
            (None, Some(w)) => (w, f, f, g1, g0),
            (None, None) => unreachable!("handled by terminal base case"),
        };
        let high = self.apply_rec(op, f1, g1)?;
        let low = self.apply_rec(op, f0, g0)?;
        let r = self.mk_node(var, high, low);
        if self.cache_enabled.get() {
            self.cache.borrow_mut().insert(key, r);
        }
        Ok(r)
    }

    fn top_cofactors(&self, f: AddRef) -> (Option<VarId>, AddRef, AddRef) {
        match self.node(f) {
            AddNode::Terminal(_) => (None, f, f),
            AddNode::Internal { var, high, low } => (Some(var), high, low),
        }
    }

    /// `f` with variable `x` fixed to `bit`. If `x` does not occur in `f`,
    /// returns `f` unchanged.
    pub fn cofactor(&self, f: AddRef, x: VarId, bit: bool) -> Result<AddRef> {
        self.check(f)?;
        Ok(self.cofactor_rec(f, x, bit))
    }

    fn cofactor_rec(&self, f: AddRef, x: VarId, bit: bool) -> AddRef {
        let node = self.node(f);
        let (var, high, low) = match node {
            AddNode::Terminal(_) => return f,
            AddNode::Internal { var, high, low } => (var, high, low),
        };
        if var.0 > x.0 {
            // Ordered: x cannot occur below this node.
            return f;
        }
        if var == x {
            return if bit { high } else { low };
        }
        let key = CacheKey::Restrict(x.0 * 2 + bit as u32, f.raw());
        if self.cache_enabled.get() {
            if let Some(r) = self.cache.borrow_mut().get(&key) {
                return r;
            }
        }
        let h = self.cofactor_rec(high, x, bit);
        let l = self.cofactor_rec(low, x, bit);
        let r = self.mk_node(var, h, l);
        if self.cache_enabled.get() {
            self.cache.borrow_mut().insert(key, r);
        }
        r
    }

    /// Follows high/low branches to the terminal reached under `assignment`.
    /// Every variable actually occurring on the path must be assigned.
    pub fn eval(&self, f: AddRef, assignment: &Assignment) -> Result<f64> {
        self.check(f)?;
        let mut cur = f;
        loop {
            match self.node(cur) {
                AddNode::Terminal(v) => return Ok(v),
                AddNode::Internal { var, high, low } => match assignment.get(var) {
                    Some(true) => cur = high,
                    Some(false) => cur = low,
                    None => return Err(AddError::IncompleteAssignment { index: var.index() }),
                },
            }
        }
    }

    /// Number of distinct nodes reachable from `f`, terminals included.
    pub fn node_count(&self, f: AddRef) -> usize {
        let mut seen = FxHashSet::default();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let AddNode::Internal { high, low, .. } = self.node(n) {
                stack.push(high);
                stack.push(low);
            }
        }
        seen.len()
    }

    /// Variables occurring in `f`, in order.
    pub fn support(&self, f: AddRef) -> Vec<VarId> {
        let mut seen = FxHashSet::default();
        let mut vars = FxHashSet::default();
        let mut stack = vec![f];
        while let Some(n) = stack.pop() {
            if !seen.insert(n) {
                continue;
            }
            if let AddNode::Internal { var, high, low } = self.node(n) {
                vars.insert(var);
                stack.push(high);
                stack.push(low);
            }
        }
        let mut out: Vec<VarId> = vars.into_iter().collect();
        out.sort_unstable();
        out
    }

    /// Existentially abstracts `vars` from a 0/1 function by taking the
    /// pointwise max of both cofactors for each variable.
    pub fn abstract_max(&self, f: AddRef, vars: &[VarId]) -> Result<AddRef> {
        let mut cur = f;
        for &x in vars {
            let hi = self.cofactor(cur, x, true)?;
            let lo = self.cofactor(cur, x, false)?;
            cur = self.apply(BinOp::Max, hi, lo)?;
        }
        Ok(cur)
    }

    // ---- cache control ---------------------------------------------------

    pub fn clear_cache(&self) {
        self.cache.borrow_mut().clear();
    }

    pub fn set_cache_enabled(&self, enabled: bool) {
        self.cache_enabled.set(enabled);
    }

    /// Bounds the operation cache; `None` makes it unbounded (the default).
    pub fn set_cache_capacity(&self, capacity: Option<usize>) {
        self.cache.borrow_mut().set_capacity(capacity);
    }

    pub fn cache_stats(&self) -> CacheStats {
        self.cache.borrow().stats()
    }

    pub fn cache_len(&self) -> usize {
        self.cache.borrow().len()
    }

    // ---- compaction ------------------------------------------------------

    /// Rebuilds the node store keeping only nodes reachable from `roots`,
    /// clears the operation cache, and rewrites each root handle in place.
    ///
    /// Every handle not passed through `roots` is invalidated.
    pub fn compact(&self, roots: &mut [&mut AddRef]) {
        let old_nodes = std::mem::take(&mut *self.nodes.borrow_mut());
        self.terminals.borrow_mut().clear();
        self.unique.borrow_mut().clear();
        self.cache.borrow_mut().clear();
        self.zero.set(INVALID);
        self.one.set(INVALID);

        let z = self.mk_terminal(0.0).expect("finite");
        let o = self.mk_terminal(1.0).expect("finite");
        self.zero.set(z.raw());
        self.one.set(o.raw());

        let mut remap: FxHashMap<u32, AddRef> = FxHashMap::default();
        for root in roots.iter_mut() {
            let new = self.copy_rec(&old_nodes, root.raw(), &mut remap);
            **root = new;
        }
    }

    fn copy_rec(&self, old: &[AddNode], f: u32, remap: &mut FxHashMap<u32, AddRef>) -> AddRef {
        if let Some(&r) = remap.get(&f) {
            return r;
        }
        let r = match old[f as usize] {
            AddNode::Terminal(v) => self.mk_terminal(v).expect("was finite"),
            AddNode::Internal { var, high, low } => {
                let h = self.copy_rec(old, high.raw(), remap);
                let l = self.copy_rec(old, low.raw(), remap);
                self.mk_node(var, h, l)
            }
        };
        remap.insert(f, r);
        r
    }
}
