//! Unsupervised segmentation of a foreground object (a tree) in front of a
//! homogeneous, low-texture background panel.
//!
//! The pipeline converts the image to HSV, finds grid superpixels that stay
//! rectangular after boundary refinement, intersects them with an Otsu
//! threshold of the hue plane, fits a hue mixture model to the surviving
//! background superpixels, labels every pixel by its background likelihood
//! and finally masks out everything that is not in front of the panel.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod background;
pub mod error;
pub mod eval;
pub mod imaging;
pub mod pipeline;
pub mod superpixels;
pub mod threshold;

pub use error::{Error, Result};
