#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x >= lo)` also rejects NaN.

pub mod annealer;
pub mod camera;
pub mod energy;
pub mod error;
pub mod features;
pub mod frame;
pub mod image_io;
pub mod mesh;
pub mod metrics;
pub mod pipeline;
pub mod presets;
pub mod priors;
pub mod render;
pub mod scene;
pub mod seed;
pub mod sensor;
