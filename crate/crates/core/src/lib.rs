//! Heterogeneous SIS epidemics on finite type spaces.
//!
//! Reproduction numbers are spectral radii of next-generation matrices, the
//! maximal endemic equilibrium is found by monotone iteration from the
//! all-infected state, and vaccination strategies are compared by cost and
//! effective reproduction number. Vaccinating by the endemic profile,
//! `eta = 1 - g`, is critical whenever `g` is non-zero.
#![no_std]

extern crate alloc;

pub mod builders;
pub mod dynamics;
mod eigen;
pub mod equilibrium;
pub mod error;
pub mod model;
pub mod spectral;
pub mod stability;
pub mod strategies;

pub use error::{Error, Result};
pub use model::{validate_model, DiscreteSpace, ModelData, Profile, SisModel, Violation};
pub use spectral::{
    basic_reproduction_number, effective_reproduction_number, NextGenMatrix, RadiusMethod,
};
