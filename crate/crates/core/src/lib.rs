//! Human detection in thermal video from a fixed or panning camera.
//!
//! The detector slides a HOG window over each frame and scores it with a
//! linear SVM. With a reference background, only windows that are mostly
//! foreground are scored. For a panning camera the background is first
//! re-registered against a static landmark.

pub mod adaptive;
pub mod background;
pub mod classify;
pub mod cli;
pub mod config;
pub mod detect;
pub mod error;
pub mod eval;
pub mod hog;
pub mod imaging;
pub mod io;
pub mod par;
pub mod records;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
