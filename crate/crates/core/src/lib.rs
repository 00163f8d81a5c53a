pub mod cli;
pub mod clifford;
pub mod error;
pub mod jet;
pub mod moebius;
pub mod operators;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
