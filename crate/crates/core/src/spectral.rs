//! Next-generation matrices, spectral radii and spectral bounds.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::eigen::eigenvalues;
use crate::error::{Error, Result};
use crate::model::{check_len, Profile, SisModel};

/// Relative change of the Rayleigh quotient at which power iteration stops.
pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RadiusMethod {
    /// Largest eigenvalue modulus from a full dense eigensolve.
    #[default]
    Dense,
    /// Power iteration from the all-ones vector. On reducible matrices this
    /// only sees the part of the spectrum reachable from that start.
    Power,
}

/// Matrix of the operator `g -> sum_j k_ij eta_j g_j mu_j / gamma_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct NextGenMatrix(DMatrix<f64>);

impl NextGenMatrix {
    pub fn new(model: &SisModel, eta: &Profile) -> Result<Self> {
        let n = model.n();
        check_len(n, eta.len())?;
        let (k, gamma, mu, eta) = (model.kernel(), model.gamma(), model.weights(), eta.values());
        Ok(Self(DMatrix::from_fn(n, n, |i, j| {
            k[(i, j)] * eta[j] * mu[j] / gamma[j]
        })))
    }

    /// The unvaccinated next-generation matrix.
    pub fn basic(model: &SisModel) -> Self {
        Self::new(model, &Profile::ones(model.n())).expect("dimensions agree")
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn spectral_radius(&self, method: RadiusMethod) -> Result<f64> {
        spectral_radius(&self.0, method)
    }
}

/// `(T g)_i = sum_j kernel_ij g_j mu_j`.
pub fn apply_operator(kernel: &DMatrix<f64>, mu: &[f64], g: &[f64]) -> Result<Vec<f64>> {
    let n = kernel.nrows();
    check_len(n, kernel.ncols())?;
    check_len(n, mu.len())?;
    check_len(n, g.len())?;
    Ok((0..n)
        .map(|i| (0..n).map(|j| kernel[(i, j)] * g[j] * mu[j]).sum())
        .collect())
}

/// Diagonal matrix `M_f` of pointwise multiplication by `f`.
pub fn multiplication_operator(f: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(f))
}

pub fn spectral_radius(a: &DMatrix<f64>, method: RadiusMethod) -> Result<f64> {
    check_len(a.nrows(), a.ncols())?;
    if a.nrows() == 0 {
        return Ok(0.0);
    }
    match method {
        RadiusMethod::Dense => {
            let eig = eigenvalues(a)?;
            Ok(eig
                .iter()
                .fold(0.0, |acc, (re, im)| acc.max(libm::hypot(*re, *im))))
        }
        RadiusMethod::Power => power_iteration(a),
    }
}

/// Largest real part over the spectrum.
pub fn spectral_bound(a: &DMatrix<f64>) -> Result<f64> {
    check_len(a.nrows(), a.ncols())?;
    if a.nrows() == 0 {
        return Err(Error::InvalidParameter(
            "spectral bound of an empty matrix".into(),
        ));
    }
    let eig = eigenvalues(a)?;
    Ok(eig
        .iter()
        .fold(f64::NEG_INFINITY, |acc, (re, _)| acc.max(*re)))
}

/// R0: spectral radius of the next-generation operator.
pub fn basic_reproduction_number(model: &SisModel) -> Result<f64> {
    NextGenMatrix::basic(model).spectral_radius(RadiusMethod::Dense)
}

/// `R_e(eta)`: spectral radius of the next-generation operator with kernel `k eta / gamma`.
pub fn effective_reproduction_number(model: &SisModel, eta: &Profile) -> Result<f64> {
    NextGenMatrix::new(model, eta)?.spectral_radius(RadiusMethod::Dense)
}

fn power_iteration(a: &DMatrix<f64>) -> Result<f64> {
    let n = a.nrows();
    let mut x = alloc::vec![1.0 / libm::sqrt(n as f64); n];
    let mut previous: Option<f64> = None;
    for _ in 0..POWER_MAX_ITERATIONS {
        let y: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)] * x[j]).sum())
            .collect();
        let norm = libm::sqrt(y.iter().map(|v| v * v).sum());
        if norm == 0.0 {
            return Ok(0.0);
        }
        // x has unit length
        let rayleigh: f64 = x.iter().zip(&y).map(|(x, y)| x * y).sum();
        if let Some(prev) = previous {
            if (rayleigh - prev).abs() <= POWER_TOLERANCE * rayleigh.abs() {
                return Ok(rayleigh.max(0.0));
            }
        }
        previous = Some(rayleigh);
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
    }
    Err(Error::PowerIterationNotConverged {
        iterations: POWER_MAX_ITERATIONS,
    })
}
