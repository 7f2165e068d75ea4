pub mod calculus;
pub mod elliptic;
pub mod error;
pub mod fock;
pub mod heisenberg;
pub mod modular;
pub mod report;
pub mod sewing;
pub mod verify;
pub mod zhu;

pub use error::{Error, Result};
