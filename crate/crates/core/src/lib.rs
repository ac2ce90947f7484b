pub mod amalgam;
pub mod ambient;
pub mod bset;
pub mod error;
pub mod forest;
pub mod fraisse;
pub mod gen;
pub mod lset;
pub mod morphisms;
pub mod reconstruct;

pub use error::{Error, Result};
