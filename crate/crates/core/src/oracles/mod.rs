//! Online regression oracles and their batch (online-to-batch) conversions.

mod batch;
mod bounds;
mod online;
mod vector;

pub use batch::{otb_convert, otb_convert_vector, BatchPredictor, VectorBatchPredictor};
pub use bounds::{OracleBoundSpec, RegretRate};
pub use online::{project_design_ball, OnlinePredictor, OracleKind};
pub use vector::VectorPredictor;
