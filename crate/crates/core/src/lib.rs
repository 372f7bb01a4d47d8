pub mod embedding;
pub mod error;
pub mod exec;
pub mod features;
pub mod graph;
pub mod imaging;
pub mod matching;
mod kmeans;
pub mod pipeline;
pub mod rag;
pub mod segmentation;
pub mod synthetic;

pub use error::{Error, Result};
