//! ETSBM: embedded-topic stochastic block modelling of directed graphs whose
//! edges carry bag-of-words documents.
//!
//! The crate provides:
//! - [`corpus`]: graph/text data model and file formats;
//! - [`simulator`]: synthetic benchmark scenario generation;
//! - [`nncore`]: a small dense-MLP kernel with analytic backprop and Adam;
//! - [`inference`]: the variational-Bayes EM engine for the joint model;
//! - [`baselines`]: network-only (SBM) and text-only (ETM) reference models;
//! - [`initsel`]: initialization strategies and ELBO-based selection of the
//!   number of clusters;
//! - [`eval`]: clustering metrics, posterior summaries and meta-graph export;
//! - [`registry`]: name-keyed access to the model and initializer variants.

pub mod baselines;
pub mod corpus;
pub mod eval;
pub mod inference;
pub mod initsel;
pub mod nncore;
pub mod registry;
pub mod seeding;
pub mod simulator;
