pub mod baseline;
pub mod dual;
pub mod env;
pub mod trace;
pub mod error;
pub mod harness;
pub mod lp;
pub mod oracles;
pub mod policy;
pub mod twostage;

pub use error::{CbwkError, Result};
