//! Cover times, hitting times and exact covers on countable full shifts.

pub mod error;
pub mod bounds;
pub mod dynamics;
pub mod gibbs;
pub mod metric;
pub mod natcover;
pub mod product;
pub mod report;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
