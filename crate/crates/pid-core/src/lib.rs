//! Core algorithms for digitizing raster P&ID engineering diagrams.
//!
//! The pipeline turns a scanned sheet into structured data in three stages:
//! detection (lines, text, basic and complex symbols), comprehension
//! (pipeline graph construction, label assignment, symbol/text association)
//! and reconciliation (domain-rule validation of the output tables).
//! A synthetic sheet generator and an evaluation harness close the loop.

pub mod aggregate;
pub mod config;
pub mod dataset;
pub mod dbscan;
pub mod error;
pub mod eval;
pub mod geometry;
pub mod graph;
pub mod lines;
pub mod morph;
pub mod pipeline;
pub mod raster;
pub mod shapes;
pub mod symbols;
pub mod text;

pub use error::Error;
pub use geometry::{Orientation, Point, Rect};
pub use raster::{BinaryRaster, GrayRaster};
