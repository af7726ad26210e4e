//! Interacting particle flows on prox-regular domains.

pub mod geometry;
pub mod potentials;
pub mod measures;
pub mod transport;
pub mod dynamics;
pub mod harness;
