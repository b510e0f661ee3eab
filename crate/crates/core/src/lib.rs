//! Continuous glucose monitor traces to images, and a dense-block CNN that
//! classifies whether hypoglycemia follows within the next 24 hours.

pub mod cgm;
pub mod config;
pub mod model;
pub mod nn;
pub mod pipeline;
pub mod stats;
pub mod synthetic;
pub mod training;
pub mod transforms;
pub mod windowing;
