//! Drug–target binding-affinity workbench.
//!
//! Compounds arrive as SMILES and are turned into molecular graphs
//! ([`chem`]), folded extended-connectivity fingerprints ([`fingerprint`]),
//! and per-atom feature matrices consumed by a learned graph-convolution
//! encoder ([`nn`]). Targets are amino-acid sequences turned into
//! composition vectors ([`protein`]). The three views are concatenated into
//! a combined input vector and regressed onto affinity by an MLP trained on
//! MSE plus an adversarial term computed from k-nearest-neighbor alignment
//! rows of predictions and labels ([`adversarial`]).
//!
//! Everything numeric runs on a small reverse-mode autodiff engine
//! ([`tensor`]). Data ingestion, filtering and cross-validation splits live
//! in [`data`], evaluation metrics in [`metrics`], and the experiment driver
//! behind the `dti` binary in [`experiment`].
//!
//! Runnable walkthroughs for each capability are in `examples/`:
//!
//! ```bash
//! cargo run --release --example parse_smiles
//! cargo run --release --example end_to_end
//! ```

pub mod adversarial;
pub mod chem;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fingerprint;
pub mod hash;
pub mod metrics;
pub mod nn;
pub mod protein;
pub mod tensor;

pub use error::{Error, Result};
