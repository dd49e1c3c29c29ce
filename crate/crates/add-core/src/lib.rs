//! Canonical, hash-consed algebraic decision diagrams (ADDs).
//!
//! An ADD represents a function `{0,1}^n -> R` as a reduced ordered decision
//! graph whose terminal nodes carry real values. This crate provides the
//! manager that owns all nodes and guarantees canonicity:
//!
//! - identical node contents are shared (hash consing via a unique table),
//! - no internal node has equal children (reducedness),
//! - parent variables always precede child variables in the fixed order.
//!
//! Consequently two semantically equal functions built in the same manager
//! compare equal by handle. All recursive operations (pointwise `apply`,
//! cofactors) are memoized in an operation cache owned by the manager.
//!
//! A manager and its handles are confined to a single thread at a time; it
//! may be moved between threads but never shared. Parallel workloads use
//! independent managers.

mod cache;
mod dump;
mod error;
mod manager;

pub use cache::CacheStats;
pub use error::AddError;
pub use manager::{AddManager, AddNode, AddRef, Assignment, BinOp, VarId};

pub type Result<T> = std::result::Result<T, AddError>;
