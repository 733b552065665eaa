pub mod bigfloat;
pub mod cli;
pub mod closed;
pub mod ensemble;
pub mod error;
pub mod fuss_catalan;
pub mod grassmann;
pub mod io;
pub mod quadrature;
pub mod rootfinder;
pub mod saddle;
pub mod scalar;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
