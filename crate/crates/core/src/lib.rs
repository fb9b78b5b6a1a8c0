//! Multi-label chest radiograph classification: dataset ingest,
//! preprocessing, three convolutional backbones with partial freezing,
//! BCE and focal objectives, training, evaluation and Grad-CAM.

pub mod cli;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod gradcam;
pub mod loader;
pub mod losses;
pub mod metrics;
pub mod models;
pub mod preprocess;
pub mod profile;
pub mod seeds;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
