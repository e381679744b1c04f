pub mod channel;
pub mod codec;
pub mod error;
pub mod fock;
pub mod harness;
pub mod protocol;
pub mod pulse;
pub mod rng;
pub mod transforms;

pub use error::{Error, Result};
