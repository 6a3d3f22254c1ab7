//! Counterexample families bounding the `L^p → L^q` region, their scaling
//! experiments and the exact region geometry.

pub mod families;
pub mod region;

pub use families::*;
pub use region::*;
