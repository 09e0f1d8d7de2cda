pub mod bell;
pub mod entropy;
pub mod error;
pub mod pef;
pub mod lp;
pub mod polytope;
pub mod protocol;
pub mod io;
pub mod cli;

pub use error::{Error, Result};
