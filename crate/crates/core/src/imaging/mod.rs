//! Raster primitives shared by every stage.

mod color;
mod components;
mod contour;
mod draw;
mod fill;
pub mod io;
mod raster;

pub use color::{hsv_pixel, hsv_to_rgb, rgb_to_gray, rgb_to_hsv};
pub use components::{connected_components, label_map, paint_component, ConnectedComponent, Run};
pub use contour::{trace_contour, Contour, Point};
pub use draw::draw_line;
pub use fill::fill_holes;
pub use raster::{BinaryImage, GrayImage, HsvImage, Rect, RgbImage};
