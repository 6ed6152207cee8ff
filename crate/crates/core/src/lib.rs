//! Seeded SIRVD epidemic simulation on contact networks.
//!
//! The crate covers the whole pipeline: random graph generation and
//! centrality ([`graph`], [`centrality`]), discrete-time SIRVD dynamics and
//! ensembles ([`epidemic`]), vaccination strategies ([`interventions`]), a
//! from-scratch graph convolutional node-state classifier ([`gcn`]),
//! attribution methods ([`xai`]) and reproducible run directories
//! ([`scenario`]).

pub mod centrality;
pub mod epidemic;
pub mod error;
pub mod gcn;
pub mod graph;
pub mod interventions;
pub mod rng;
pub mod scenario;
pub mod xai;

pub use error::{Error, Result};
