//! Scene point-map reconstruction from two keyframe depth maps, and
//! scene-grounded optimization of per-frame human body translations.
//!
//! The pipeline: back-project both keyframes ([`geometry`]), align and merge
//! them into one background point map ([`scene`]), then move every frame's
//! body so the keyframe bodies sit on the human points seen by the camera
//! ([`chamfer`]) while the whole clip keeps the shape of its smoothed initial
//! root trajectory ([`trajectory`], [`optimizer`]).

pub mod chamfer;
pub mod error;
pub mod geometry;
pub mod io;
pub mod optimizer;
pub mod pipeline;
pub mod scene;
pub mod synth;
pub mod trajectory;

pub use error::{Error, ErrorKind, Result};
pub use geometry::Vec3;
