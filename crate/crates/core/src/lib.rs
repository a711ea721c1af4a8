pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod fsutil;
pub mod lexicon;
pub mod models;
pub mod normalize;
pub mod seed;
pub mod synthetic;
pub mod tokens;

pub use error::{Error, Result};
