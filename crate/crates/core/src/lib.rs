pub mod cli;
pub mod error;
pub mod fields;
pub mod forms;
pub mod geometry;
pub mod gravitating;
pub mod newton;
pub mod obstructions;
pub mod quiver;
pub mod vortex;

pub use error::{Error, Result};
