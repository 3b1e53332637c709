//! Monophonic pitch estimation from log-magnitude spectrograms with a small
//! convolutional network.

pub mod audio_io;
pub mod baseline;
pub mod cli;
pub mod decode;
pub mod dsp;
pub mod error;
pub mod grid;
pub mod metrics;
pub mod model;
pub mod pipeline;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
