pub mod cm;
pub mod error;
pub mod integrate;
pub mod io;
pub mod linalg;
pub mod newton;
pub mod pencil;
pub mod phase;
pub mod poly;
pub mod reduction;
pub mod sample;
pub mod verify;
pub mod word;

pub use error::{Error, Result};
