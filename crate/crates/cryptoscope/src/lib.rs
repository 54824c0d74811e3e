//! Static-analysis scanner that discovers cryptographic operations in source
//! code, assembles them into language-independent crypto assets, and checks
//! the resulting inventory against CWE rules.
//!
//! The pipeline has four stages:
//!
//! 1. [`frontend`] — tolerant lexing and parsing of the Java-like subject
//!    language into positioned syntax trees.
//! 2. [`ir`] — symbol resolution, control-flow graphs, def-use chains and a
//!    declared-type call graph per subject project.
//! 3. [`constprop`] + [`slicer`] — context-sensitive constant propagation and
//!    backward slicing seeded at knowledge-base criterion calls.
//! 4. [`assets`] + [`vulns`] — asset construction from slices and a rule
//!    engine that only ever sees the asset model, never syntax.
//!
//! The [`kb`] module loads the declarative API knowledge base that drives
//! stages 3 and 4; [`scan`] orchestrates everything and emits CBOM, finding
//! and scan reports; [`eval`] scores scanner output against labeled corpora.
//! [`oracle`] holds brute-force reference implementations used only by tests.

pub mod assets;
pub mod cbom;
pub mod constprop;
pub mod eval;
pub mod frontend;
pub mod ir;
pub mod kb;
pub mod location;
pub mod oracle;
pub mod scan;
pub mod slicer;
pub mod value;
pub mod vulns;

pub use location::Location;
pub use value::Value;
