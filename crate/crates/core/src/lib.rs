//! Compliance-preserving retrieval of certified maintenance tasks.
//!
//! Tasks are keyed by their ATA identifier and retrieved through text built
//! only from hierarchy titles and task titles. Procedural content is kept
//! verbatim for preview and never enters retrieval or re-ranking.

pub mod ata;
pub mod eval;
mod http;
pub mod index;
pub mod ingest;
pub mod rerank;
pub mod synth;
