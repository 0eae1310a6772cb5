//! Trust-degree based cooperation between two transmitter/receiver pairs.
//!
//! Tu2 may relay Tu1's symbol to Ru1 in exchange for Tu1's help, while
//! still guaranteeing its own receiver Ru2 a QoS rate. The trust degree
//! α is the probability that Tu2 actually relays. The solvers maximize Ru1's
//! expected rate for each antenna configuration.

pub mod channel;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod mimo;
pub mod miso;
pub mod oracle;
pub mod qcqp;
pub mod rate;
pub mod simo;
pub mod siso;
pub mod solve;
pub mod strategy;

pub use error::{Error, Result};
