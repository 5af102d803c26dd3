//! Song-mood association mining and mood classification.
//!
//! The crate turns playlist co-occurrence counts into smoothed association
//! scores (Bayesian normalized pointwise mutual information), bins those
//! scores into training targets, fits per-mood classifiers over lyric,
//! acoustic and hybrid features, and scores human annotation agreement.
//!
//! Everything here is pure computation over in-memory data and builds
//! without `std`; the `songmood` crate carries file formats, the CLI and
//! thread-level parallelism.
//!
//! ```text
//! playlists -> ingest::match_moods -> association::count -> fit priors -> bnpmi -> labels
//!                                                                              |
//! songs -> features (tf.idf / acoustic / embeddings) -> models -> evaluation <-+
//! ```

#![no_std]
#![warn(clippy::all)]

extern crate alloc;

#[cfg(any(feature = "std", test))]
extern crate std;

pub mod annotation;
pub mod association;
pub mod error;
pub mod evaluation;
pub mod experiment;
pub mod features;
pub mod ingest;
pub mod lexicon;
pub mod models;
pub mod rng;
pub mod simulate;
pub mod text;

pub use error::{Error, Result};
