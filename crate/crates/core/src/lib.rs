pub mod attack;
pub mod builder;
pub mod cli;
pub mod error;
pub mod focusgroup;
pub mod io;
pub mod lattice;
pub mod poly;
pub mod rsa;

pub use error::{Error, Result};
