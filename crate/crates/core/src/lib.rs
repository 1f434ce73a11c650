//! Exact mod-p computations around the Postnikov tower of the 4-sphere.

pub mod algebra;
pub mod assembly;
pub mod em;
pub mod error;
pub mod flux;
pub mod fp;
pub mod par;
pub mod poly;
pub mod sss;
pub mod stage;
pub mod steenrod;
pub mod table;
pub mod tower;

pub use error::{Error, Result};
pub use fp::PrimeField;
