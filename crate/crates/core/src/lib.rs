//! Noun-compound representations built three ways (distributional lookup,
//! trained composition functions, paraphrase-trained LSTM encoders) and the
//! machinery to evaluate them: nearest-neighbor analysis, property
//! prediction and relation classification.
//!
//! The crate is organized by stage:
//!
//! - [`embeddings`]: textual embedding files, frequency sidecars, synthetic spaces.
//! - [`compose`]: the Add, FullAdd, Matrix and LSTM composition functions.
//! - [`train`]: compositional and paraphrase margin training, gradient checks.
//! - [`paraphrase`]: backtranslation and co-occurrence paraphrase acquisition.
//! - [`neighbors`]: cosine top-k, neighbor categories, Wu-Palmer similarity.
//! - [`eval`]: linear classifiers, P/R/F1 scoring, property and relation tasks.
//! - [`pipeline`]: representation building and DSM grids with aggregation.
//! - [`cli`]: the `nc-embed` command-line front end.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod cli;
pub mod compose;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod linalg;
pub mod neighbors;
pub mod paraphrase;
pub mod pipeline;
pub mod seeds;
pub mod train;

pub use compose::{init_model, CompositionModel, ModelKind};
pub use embeddings::{EmbeddingSpace, NounCompound};
pub use error::{Error, Result};
