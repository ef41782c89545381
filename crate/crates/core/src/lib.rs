//! Process-fairness assessment of classifiers through post-hoc explanations,
//! and repair of unfair models with feature-dropout ensembles.
//!
//! The crate is organised bottom-up:
//!
//! * [`dataset`] tabular ingestion, splits, SMOTE, feature dropout, correlation
//! * [`text`] tokenization, Porter stemming, TF-IDF, word dropout
//! * [`models`] self-contained probabilistic classifiers (LR, RF, BAG, ADA)
//! * [`explain`] LIME and KernelSHAP local explainers over weighted least squares
//! * [`global`] local-to-global aggregation with random sampling or submodular pick
//! * [`fairness`] verdicts, automatic cutoff selection, dropout ensembles, rank-diff

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod explain;
pub mod fairness;
pub mod global;
pub mod models;
pub mod rng;
pub mod text;

pub use error::{Error, Result};
