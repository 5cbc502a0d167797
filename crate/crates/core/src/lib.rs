pub mod corpus;
pub mod embedder;
pub mod error;
pub mod evaluation;
pub mod morphology;
pub mod numerics;
pub mod synthetic;

pub use error::{Error, ErrorClass, Result};
