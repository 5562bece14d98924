//! Federated constraint-based causal structure learning.
//!
//! The crate is organised around a federated conditional-independence test:
//! clients hold discrete datasets, contingency counts and residual encodings
//! are combined through a simulated secure-aggregation protocol, and the
//! resulting chi-squared decisions drive PC- and FCI-style structure
//! learners. The [`harness`] module reproduces the synthetic benchmark grid
//! (ER graphs, Dirichlet CPDs, heterogeneous client splits) at desk scale.

pub mod data;
pub mod fedci;
pub mod graph;
pub mod harness;
pub mod learner;
pub mod secureagg;

pub(crate) mod seeding;
