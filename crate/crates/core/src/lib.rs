//! Sticky random Kakeya sets over the middle-thirds Cantor set of
//! directions.

pub mod budget;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod measure;
pub mod oracle;
pub mod percolation;
pub mod pointwise;
pub mod rational;
pub mod rng;
pub mod sticky;
pub mod tree;

mod sweep;

pub use budget::Budget;
pub use error::{KakeyaError, Result};
pub use rational::Rational;
pub use tree::TernaryString;
