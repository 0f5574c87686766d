//! Certified piecewise-linear approximation of biLipschitz planar curves:
//! open curves on an interval, curves pinned at both ends, and closed curves
//! on the unit circle.

pub mod budget;
pub mod circle;
pub mod cli;
pub mod error;
pub mod geom;
pub mod lebesgue;
pub mod pipeline;
pub mod shorten;
pub mod testkit;
pub mod timechange;
pub mod verify;
