//! Audio-visual latent watermarking with cryptographic cross-modal binding.
//!
//! The crate builds the full embed / generate / invert / detect loop around a
//! closed-form rectified-flow channel:
//!
//! - [`keyring`]: prompt normalization, session-key derivation, ChaCha20
//!   keystreams and the append-only key registry.
//! - [`grid`]: region layouts, the public time template and the entangled
//!   video/audio bit grids (the audio grid carries a digest of the video grid).
//! - [`latent`]: block diffusion, keystream randomization and
//!   distribution-preserving inverse transform sampling.
//! - [`flow`]: a toy joint rectified flow with Euler generation and inversion.
//! - [`detect`]: synchronization, decoding, bit accuracy, binding score and the
//!   four-step statistical binding decision.
//! - [`attack`]: swap, temporal and signal-level attacks with replayable
//!   transcripts.
//! - [`stats`]: Hoeffding and exact binomial bounds, Monte Carlo swap
//!   simulation, KS / chi-square tests and ROC curves.
//! - [`pipeline`]: session embedding that ties the pieces together.
//! - [`cli`]: configuration and the command implementations behind the
//!   `avbind` binary.

pub mod attack;
pub mod cli;
pub mod detect;
pub mod error;
pub mod flow;
pub mod grid;
pub mod keyring;
pub mod latent;
pub mod normal;
pub mod pipeline;
pub mod stats;

pub use error::{Error, Result};
pub use grid::{BitGrid, Dims4, GridLayout, Modality};
pub use keyring::{PlainIndex, SecretPayload, SessionKeyMaterial};
pub use latent::{LatentTensor, RepetitionFactors};
