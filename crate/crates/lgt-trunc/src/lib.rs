//! Truncation-error estimation for electric-basis truncated lattice gauge
//! Hamiltonians, validated against exact and matrix-product-state evolution.

pub mod basis;
pub mod bounds;
pub mod models;
pub mod operator;
pub mod propagate;
pub mod series;
pub mod tebd;
pub mod expsum;
pub mod logmag;
