//! Instruction-following navigation workbench.
//!
//! The crate builds procedurally generated viewpoint-graph environments with
//! synthetic appearance features and object annotations, trains LSTM
//! encoder-decoder follower agents under ablated input modalities, and
//! evaluates single agents and mixture-of-experts ensembles on seen and
//! unseen environments.
//!
//! Major pieces:
//!
//! - [`envgraph`]: the navigation environment model, shortest-path oracle,
//!   and success metrics.
//! - [`worldgen`]: procedural environments, routes, templated instructions,
//!   and dataset splits.
//! - [`autodiff`]: a reverse-mode tape engine with gradient checking and
//!   an Adam optimizer.
//! - [`follower`]: the agent — instruction encoder, two attention-decoder
//!   variants, and modality channels.
//! - [`trainer`]: teacher- and student-forcing loops, snapshot selection,
//!   and shared-encoder joint training.
//! - [`ensemble`]: per-step logit averaging across expert models.
//! - [`formats`] / [`experiments`]: file schemas, run orchestration, and
//!   report emission.

pub mod autodiff;
pub mod envgraph;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod follower;
pub mod formats;
pub mod oracles;
pub mod parallel;
pub mod trainer;
pub mod util;
pub mod worldgen;

pub use error::{Error, Result};
