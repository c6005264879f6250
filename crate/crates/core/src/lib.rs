pub mod catalog;
pub mod comparison;
pub mod error;
pub mod facet;
pub mod number;
pub mod quantity;
pub mod store;
pub mod ucum;

pub use catalog::Catalog;
pub use error::{Error, ErrorClass, ErrorCode, Result};
