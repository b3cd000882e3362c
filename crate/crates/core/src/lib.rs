//! Uniform covers of finite filtered spaces: chain homotopy, universal
//! covering maps, quotients by fibers, inverse limits and group actions.

pub mod action;
pub mod cover;
pub mod error;
pub mod group;
pub mod linalg;
pub mod quotient;
pub mod rips;
pub mod space;
pub mod tower;

pub use error::{Error, Result};
pub use space::{Chain, Entourage, FilteredSpace, Partition, PointId};
