//! Positive operator frames, bounded-response reconstruction with checkable
//! Farkas certificates, and finite ontic-model search.

pub mod cli;
pub mod error;
pub mod frames;
pub mod lp;
pub mod model;
pub mod numeric;
pub mod quantum;
pub mod reconstruction;

pub use error::{Error, Result};
