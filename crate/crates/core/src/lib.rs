//! ValueLex core: elicit value descriptors from a fleet of LLM respondents,
//! construct a value taxonomy via factor analysis and embedding clustering,
//! and measure per-model value inclinations with a scored projective
//! sentence-completion test.

pub mod elicitation;
pub mod error;
pub mod gateway;
pub mod judge;
pub mod metrics;
pub mod projective;
pub mod taxonomy;

pub use error::{Error, Result};

/// Tool version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
