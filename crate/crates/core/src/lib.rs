//! Randomized deletion smoothing for text classifiers, with certified
//! robustness against bounded edit-distance perturbations.
//!
//! The crate is organised around the pipeline a certification run follows:
//!
//! * [`tokenization`] turns text into the token sequences the adversary edits.
//! * [`mechanisms`] holds the smoothing noise (token deletion, plus token
//!   masking as an empirical baseline).
//! * [`classifier`] provides base classifiers: a built-in multinomial model
//!   and an adapter for external black-box processes.
//! * [`certify`] estimates smoothed scores, bounds them, and turns the bounds
//!   into certified radii per edit-operation set.
//! * [`edit_metrics`] measures edit distance and the size of edit balls.
//! * [`oracle`] recomputes everything by brute force at desk scale.
//! * [`textcrs`] converts Text-CRS style certificates to edit-distance terms.
//! * [`attacks`] runs the empirical attack protocol.
//! * [`report`] turns certificates into per-instance records, summaries and
//!   certified-accuracy curves.
//!
//! Monte Carlo work is data parallel via rayon when the `parallel` feature is
//! enabled (the default). Every random draw is addressed by a counter, so
//! results do not depend on the thread count.

pub mod attacks;
pub mod certify;
pub mod classifier;
pub mod dataset;
pub mod edit_metrics;
pub mod error;
pub mod mechanisms;
pub mod oracle;
pub mod par;
pub mod report;
pub mod rng;
pub mod textcrs;
pub mod tokenization;

pub use error::{Error, Result};
pub use tokenization::{detokenize, tokenize, Scheme, TokenSeq};
