//! Reconstruction toolkit for marker/pin optical tactile sensors.
//!
//! A frame from the sensor camera is turned into a greyscale depth proxy
//! (circular mask, binarization, white-ratio window convolution, total
//! variation smoothing), a deformation height field (reference subtraction,
//! shape weighting, brightness-equation solve), and a 3D point cloud on the
//! deformed hemisphere. Contact regions are extracted by depth clustering,
//! reconstructions are scored with mean error / Chamfer distance /
//! similarity degree, and multiple contacts stitch into one model via rigid
//! transforms with lateral z smoothing.
//!
//! A built-in simulator renders synthetic frames with ground-truth height
//! fields so the whole chain can be verified without hardware.

pub mod cloud;
pub mod config;
pub mod error;
pub mod field;
pub mod filter;
pub mod io;
pub mod kdtree;
pub mod pipeline;
pub mod sfs;
pub mod sim;

pub use cloud::{EvalReport, Point3, PointCloud, RigidTransform};
pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use field::{BinaryImage, CircularMask, GreyscaleField, RasterImage, ValueRange};
pub use sfs::{HeightField, LambertianModel, ReconstructionConfig, SensorGeometry};
