use alloc::string::String;
use alloc::vec::Vec;

use crate::model::{Profile, Violation};

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid model: {}", join_violations(.0))]
    InvalidModel(Vec<Violation>),

    #[error("profile value {value} at index {index} lies outside [0, 1]")]
    ProfileOutOfRange { index: usize, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error(
        "power iteration did not converge after {iterations} iterations; use the dense method"
    )]
    PowerIterationNotConverged { iterations: usize },

    #[error("eigenvalue solver failed to converge")]
    EigenSolverFailed,

    #[error("step size underflow at t = {t}: clamping still exceeded {limit:e} after {halvings} halvings (dt = {dt:e})")]
    StepSizeUnderflow {
        t: f64,
        dt: f64,
        halvings: u32,
        limit: f64,
    },

    #[error("equilibrium solver stopped after {iterations} iterations with residual {residual:e}")]
    EquilibriumNotConverged {
        best: Profile,
        residual: f64,
        iterations: usize,
    },

    #[error("already subcritical: R0 = {r0} < 1")]
    AlreadySubcritical { r0: f64 },

    #[error("model is not supercritical: R0 = {r0} <= 1")]
    NotSupercritical { r0: f64 },

    #[error("reproduction number is zero; cannot calibrate")]
    ZeroReproductionNumber,

    #[error("profile is not an equilibrium: residual {residual:e}")]
    NotAnEquilibrium { residual: f64 },

    #[error("blocks are not isolated: k[{row}][{col}] = {value} crosses blocks")]
    BlocksNotIsolated { row: usize, col: usize, value: f64 },

    #[error("too many blocks: {blocks} (at most {max})")]
    TooManyBlocks { blocks: usize, max: usize },
}

fn join_violations(v: &[Violation]) -> String {
    let mut out = String::new();
    for (i, violation) in v.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        out.push_str(&alloc::format!("{violation}"));
    }
    out
}
