//! Finite type spaces, SIS model parameters and `[0, 1]`-valued profiles.
//!
//! A type space is a finite set of labelled types with probability weights
//! `mu`. Every integral over the population reduces to `sum_i f_i mu_i`.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Allowed deviation of the weight sum from 1 after loading.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-12;

/// Excursions outside `[0, 1]` up to this size are clamped silently.
pub const PROFILE_TOLERANCE: f64 = 1e-12;

/// Weight sums closer to 1 than this are kept bit-exact instead of being
/// renormalized, so that decimal inputs survive a round trip.
const ROUNDING_LEVEL: f64 = 1e-14;

/// A finite type space with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpace {
    labels: Vec<String>,
    mu: Vec<f64>,
    correction: f64,
}

impl DiscreteSpace {
    /// Builds a space from labels and (possibly unnormalized) positive weights.
    ///
    /// The weights are divided by their sum. The size of that correction,
    /// `|sum - 1|`, is kept so that callers can warn about it.
    pub fn new(labels: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        let mut violations = Vec::new();
        if weights.is_empty() {
            violations.push(Violation::EmptySpace);
        }
        if labels.len() != weights.len() {
            violations.push(Violation::LabelCount {
                expected: weights.len(),
                found: labels.len(),
            });
        }
        for (index, &value) in weights.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                violations.push(Violation::NonPositiveWeight { index, value });
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidModel(violations));
        }
        let sum: f64 = weights.iter().sum();
        let correction = (sum - 1.0).abs();
        let mu = if correction > ROUNDING_LEVEL {
            weights.iter().map(|w| w / sum).collect()
        } else {
            weights
        };
        Ok(Self {
            labels,
            mu,
            correction,
        })
    }

    /// Space with generated labels `0..n` and the given weights.
    pub fn unlabeled(weights: Vec<f64>) -> Result<Self> {
        let labels = (0..weights.len()).map(|i| alloc::format!("{i}")).collect();
        Self::new(labels, weights)
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.mu
    }

    /// `|sum of input weights - 1|` as seen at construction.
    pub fn normalization_correction(&self) -> f64 {
        self.correction
    }

    /// `sum_i f_i mu_i`.
    pub fn integral(&self, f: &[f64]) -> Result<f64> {
        check_len(self.len(), f.len())?;
        Ok(f.iter().zip(&self.mu).map(|(f, m)| f * m).sum())
    }
}

/// Raw, unvalidated model description. This is the shape of a model file.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModelData {
    pub labels: Vec<String>,
    pub mu: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Row-major; `k[i][j]` is the rate at which type `j` infects type `i`.
    pub k: Vec<Vec<f64>>,
}

/// A single broken model invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptySpace,
    LabelCount {
        expected: usize,
        found: usize,
    },
    NonPositiveWeight {
        index: usize,
        value: f64,
    },
    WeightSum {
        sum: f64,
    },
    GammaCount {
        expected: usize,
        found: usize,
    },
    NonPositiveGamma {
        index: usize,
        value: f64,
    },
    KernelRows {
        expected: usize,
        found: usize,
    },
    KernelColumns {
        row: usize,
        expected: usize,
        found: usize,
    },
    NegativeKernel {
        row: usize,
        col: usize,
        value: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptySpace => write!(f, "type space must not be empty"),
            Violation::LabelCount { expected, found } => {
                write!(f, "expected {expected} labels, found {found}")
            }
            Violation::NonPositiveWeight { index, value } => {
                write!(f, "weights must be positive (mu[{index}] = {value})")
            }
            Violation::WeightSum { sum } => {
                write!(
                    f,
                    "weights must sum to 1 (sum = {sum}, off by {:e})",
                    (sum - 1.0).abs()
                )
            }
            Violation::GammaCount { expected, found } => {
                write!(f, "expected {expected} recovery rates, found {found}")
            }
            Violation::NonPositiveGamma { index, value } => {
                write!(f, "gamma must be positive (gamma[{index}] = {value})")
            }
            Violation::KernelRows { expected, found } => {
                write!(f, "kernel must have {expected} rows, found {found}")
            }
            Violation::KernelColumns {
                row,
                expected,
                found,
            } => write!(
                f,
                "kernel row {row} must have {expected} columns, found {found}"
            ),
            Violation::NegativeKernel { row, col, value } => {
                write!(f, "kernel must be non-negative (k[{row}][{col}] = {value})")
            }
        }
    }
}

/// Reports every invariant violation of a raw model. Empty iff the model is valid as given.
pub fn validate_model(data: &ModelData) -> Vec<Violation> {
    let n = data.mu.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation::EmptySpace);
    }
    if data.labels.len() != n {
        out.push(Violation::LabelCount {
            expected: n,
            found: data.labels.len(),
        });
    }
    for (index, &value) in data.mu.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            out.push(Violation::NonPositiveWeight { index, value });
        }
    }
    let sum: f64 = data.mu.iter().sum();
    // written this way round so that a NaN sum is reported
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    let off = !((sum - 1.0).abs() <= WEIGHT_SUM_TOLERANCE);
    if n > 0 && off {
        out.push(Violation::WeightSum { sum });
    }
    if data.gamma.len() != n {
        out.push(Violation::GammaCount {
            expected: n,
            found: data.gamma.len(),
        });
    }
    for (index, &value) in data.gamma.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            out.push(Violation::NonPositiveGamma { index, value });
        }
    }
    if data.k.len() != n {
        out.push(Violation::KernelRows {
            expected: n,
            found: data.k.len(),
        });
    }
    for (row, entries) in data.k.iter().enumerate() {
        if entries.len() != n {
            out.push(Violation::KernelColumns {
                row,
                expected: n,
                found: entries.len(),
            });
        }
        for (col, &value) in entries.iter().enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                out.push(Violation::NegativeKernel { row, col, value });
            }
        }
    }
    out
}

/// SIS model on a finite type space: recovery rates and transmission kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct SisModel {
    space: DiscreteSpace,
    gamma: Vec<f64>,
    k: DMatrix<f64>,
}

impl SisModel {
    pub fn new(space: DiscreteSpace, gamma: Vec<f64>, k: DMatrix<f64>) -> Result<Self> {
        let n = space.len();
        let mut violations = Vec::new();
        if gamma.len() != n {
            violations.push(Violation::GammaCount {
                expected: n,
                found: gamma.len(),
            });
        }
        for (index, &value) in gamma.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                violations.push(Violation::NonPositiveGamma { index, value });
            }
        }
        if k.nrows() != n {
            violations.push(Violation::KernelRows {
                expected: n,
                found: k.nrows(),
            });
        }
        if k.ncols() != n {
            violations.push(Violation::KernelColumns {
                row: 0,
                expected: n,
                found: k.ncols(),
            });
        }
        for col in 0..k.ncols() {
            for row in 0..k.nrows() {
                let value = k[(row, col)];
                if !(value >= 0.0 && value.is_finite()) {
                    violations.push(Violation::NegativeKernel { row, col, value });
                }
            }
        }
        if !violations.is_empty() {
            return Err(Error::InvalidModel(violations));
        }
        Ok(Self { space, gamma, k })
    }

    /// Loads a raw model: weights are normalized, then every other invariant is checked.
    pub fn from_data(data: ModelData) -> Result<Self> {
        let mut structural: Vec<Violation> = validate_model(&data)
            .into_iter()
            .filter(|v| !matches!(v, Violation::WeightSum { .. }))
            .collect();
        if !structural.is_empty() {
            // weight problems are reported once, by validate_model
            structural.dedup();
            return Err(Error::InvalidModel(structural));
        }
        let n = data.mu.len();
        let space = DiscreteSpace::new(data.labels, data.mu)?;
        let k = DMatrix::from_fn(n, n, |i, j| data.k[i][j]);
        Self::new(space, data.gamma, k)
    }

    pub fn to_data(&self) -> ModelData {
        let n = self.n();
        ModelData {
            labels: self.space.labels.clone(),
            mu: self.space.mu.clone(),
            gamma: self.gamma.clone(),
            k: (0..n)
                .map(|i| (0..n).map(|j| self.k[(i, j)]).collect())
                .collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.space.len()
    }

    pub fn space(&self) -> &DiscreteSpace {
        &self.space
    }

    pub fn weights(&self) -> &[f64] {
        &self.space.mu
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// Next-generation kernel `k_ij / gamma_j`.
    pub fn next_generation_kernel(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n(), self.n(), |i, j| self.k[(i, j)] / self.gamma[j])
    }

    /// Same space and recovery rates with a different kernel.
    pub fn with_kernel(&self, k: DMatrix<f64>) -> Result<Self> {
        Self::new(self.space.clone(), self.gamma.clone(), k)
    }
}

/// A function on the type space with values in `[0, 1]`.
///
/// Used for infection states, equilibria and vaccination strategies
/// (the proportion of each type left unvaccinated).
#[derive(Debug, Clone, PartialEq)]
pub struct Profile(Vec<f64>);

impl Profile {
    /// Accepts values in `[0, 1]` up to [`PROFILE_TOLERANCE`]; tiny excursions are clamped.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(-PROFILE_TOLERANCE..=1.0 + PROFILE_TOLERANCE).contains(&value) {
                return Err(Error::ProfileOutOfRange { index, value });
            }
        }
        Ok(Self::clamped(values))
    }

    /// Clamps arbitrary finite values into `[0, 1]`.
    pub fn clamped(mut values: Vec<f64>) -> Self {
        for v in &mut values {
            *v = clamp_unit(*v);
        }
        Self(values)
    }

    pub fn ones(n: usize) -> Self {
        Self(alloc::vec![1.0; n])
    }

    pub fn zeros(n: usize) -> Self {
        Self(alloc::vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Result<Self> {
        Self::new(alloc::vec![value; n])
    }

    /// Indicator of a set of types.
    pub fn indicator(n: usize, members: &[usize]) -> Self {
        let mut values = alloc::vec![0.0; n];
        for &i in members {
            values[i] = 1.0;
        }
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn add(&self, other: &Profile) -> Result<Vec<f64>> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Profile) -> Result<Vec<f64>> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Profile) -> Result<Vec<f64>> {
        self.zip_with(other, |a, b| a * b)
    }

    /// Pointwise product; stays in `[0, 1]`.
    pub fn product(&self, other: &Profile) -> Result<Profile> {
        self.mul(other).map(Profile::clamped)
    }

    /// `1 - f`.
    pub fn complement(&self) -> Profile {
        Profile::clamped(self.0.iter().map(|v| 1.0 - v).collect())
    }

    /// `lambda * f` for `lambda` in `[0, 1]`.
    pub fn scaled(&self, lambda: f64) -> Result<Profile> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidParameter(alloc::format!(
                "scale factor {lambda} outside [0, 1]"
            )));
        }
        Ok(Profile::clamped(
            self.0.iter().map(|v| lambda * v).collect(),
        ))
    }

    pub fn sup_distance(&self, other: &Profile) -> Result<f64> {
        self.zip_with(other, |a, b| (a - b).abs())
            .map(|d| sup_norm(&d))
    }

    /// `integral f dmu`.
    pub fn integral(&self, space: &DiscreteSpace) -> Result<f64> {
        space.integral(&self.0)
    }

    /// `f <= g` pointwise, up to `slack`.
    pub fn is_below(&self, other: &Profile, slack: f64) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(a, b)| *a <= b + slack)
    }

    fn zip_with(&self, other: &Profile, op: impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
        check_len(self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| op(*a, *b))
            .collect())
    }
}

impl AsRef<[f64]> for Profile {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

pub(crate) fn clamp_unit(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn data(mu: Vec<f64>, gamma: Vec<f64>, k: Vec<Vec<f64>>) -> ModelData {
        ModelData {
            labels: (0..mu.len()).map(|i| i.to_string()).collect(),
            mu,
            gamma,
            k,
        }
    }

    #[test]
    fn homogeneous_model_is_valid() {
        assert!(validate_model(&data(vec![1.0], vec![1.0], vec![vec![2.0]])).is_empty());
    }

    #[test]
    fn zero_gamma_is_one_violation() {
        let v = validate_model(&data(vec![1.0], vec![0.0], vec![vec![2.0]]));
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("gamma must be positive"));
    }

    #[test]
    fn weights_not_summing_to_one() {
        let d = data(
            vec![0.4, 0.4],
            vec![1.0, 1.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        );
        let v = validate_model(&d);
        assert_eq!(v.len(), 1);
        assert!(v[0].to_string().starts_with("weights must sum to 1"));

        // loading normalizes and records the correction
        let m = SisModel::from_data(d).unwrap();
        assert_eq!(m.weights(), &[0.5, 0.5]);
        assert!((m.space().normalization_correction() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn negative_kernel_and_shape_are_reported() {
        let v = validate_model(&data(
            vec![0.5, 0.5],
            vec![1.0],
            vec![vec![1.0, -1.0], vec![0.0]],
        ));
        assert!(v.contains(&Violation::GammaCount {
            expected: 2,
            found: 1
        }));
        assert!(v.contains(&Violation::NegativeKernel {
            row: 0,
            col: 1,
            value: -1.0
        }));
        assert!(v.contains(&Violation::KernelColumns {
            row: 1,
            expected: 2,
            found: 1
        }));
        assert!(SisModel::from_data(data(vec![1.0], vec![-1.0], vec![vec![1.0]])).is_err());
    }

    #[test]
    fn integrals() {
        let space = DiscreteSpace::unlabeled(vec![0.25, 0.5, 0.25]).unwrap();
        assert_eq!(Profile::ones(3).integral(&space).unwrap(), 1.0);
        assert_eq!(Profile::zeros(3).integral(&space).unwrap(), 0.0);
        let f = Profile::new(vec![0.2470, 0.3962, 0.5676]).unwrap();
        let value = f.integral(&space).unwrap();
        // 0.25 * 0.2470 + 0.5 * 0.3962 + 0.25 * 0.5676
        assert!((value - 0.40175).abs() < 1e-15);
        assert!((value - 0.4018).abs() < 1e-4);
    }

    #[test]
    fn profile_bounds_and_arithmetic() {
        assert!(Profile::new(vec![1.0 + 1e-13, -1e-13]).is_ok());
        assert_eq!(Profile::new(vec![1.0 + 1e-13]).unwrap().values(), &[1.0]);
        assert!(matches!(
            Profile::new(vec![0.5, 1.1]),
            Err(Error::ProfileOutOfRange { index: 1, .. })
        ));
        let a = Profile::new(vec![0.25, 0.5]).unwrap();
        let b = Profile::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(a.add(&b).unwrap(), vec![0.75, 1.0]);
        assert_eq!(a.sub(&b).unwrap(), vec![-0.25, 0.0]);
        assert_eq!(a.mul(&b).unwrap(), vec![0.125, 0.25]);
        assert_eq!(a.sup_distance(&b).unwrap(), 0.25);
        assert_eq!(a.complement().values(), &[0.75, 0.5]);
        assert!(matches!(
            a.add(&Profile::ones(3)),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 3
            })
        ));
    }

    #[test]
    fn model_round_trips_through_data() {
        let d = data(
            vec![0.3, 0.7],
            vec![1.0, 0.5],
            vec![vec![1.5, 0.25], vec![0.125, 3.0]],
        );
        let m = SisModel::from_data(d.clone()).unwrap();
        assert_eq!(m.to_data(), d);
        let ngk = m.next_generation_kernel();
        assert_eq!(ngk[(0, 1)], 0.5);
    }

    proptest::proptest! {
        #[test]
        fn strategy_and_its_complement_cover_the_population(
            raw in proptest::collection::vec((0.01f64..1.0, 0.0f64..=1.0), 1..12)
        ) {
            let (w, eta): (Vec<f64>, Vec<f64>) = raw.into_iter().unzip();
            let space = DiscreteSpace::unlabeled(w).unwrap();
            let eta = Profile::new(eta).unwrap();
            let total = eta.integral(&space).unwrap() + eta.complement().integral(&space).unwrap();
            proptest::prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
