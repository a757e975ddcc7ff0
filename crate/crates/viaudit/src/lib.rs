//! Batch auditing of image-instruction-response corpora.
//!
//! The pipeline decomposes each response into visual, inferential, and
//! factual components, scores the components along three quality axes
//! through an external judge model, and supports benchmark construction
//! via controlled defect injection plus discrimination analysis and
//! top-k selection.

pub mod analyze;
pub mod assess;
pub mod backend;
pub mod batch;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod decompose;
pub mod inject;
pub mod prompts;
pub mod rng;
pub mod select;
pub mod tagparse;
