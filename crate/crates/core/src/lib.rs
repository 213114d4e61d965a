//! Latency-constrained short-packet design: codes, ordered-statistics
//! decoding, finite-blocklength limits and the complexity/power trade-off.

pub mod channel;
pub mod code;
pub mod complexity;
pub mod error;
pub mod fb;
pub mod gf2;
pub mod optimize;
pub mod osd;
pub mod sim;
pub mod tradeoff;

pub use error::{Error, Result};
