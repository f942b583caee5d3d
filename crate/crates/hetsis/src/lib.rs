//! File formats, table reproduction and property suites on top of
//! [`hetsis_core`].

pub mod catalog;
pub mod io;
pub mod properties;
pub mod random;
pub mod tables;

pub use hetsis_core as core;
