//! Model constructors: homogeneous mixing, proportionate mixing, age
//! structure from contact data, and age crossed with activity levels.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{DiscreteSpace, SisModel};

pub const AGE_GROUP_LABELS: [&str; 6] = ["0-5", "6-12", "13-19", "20-39", "40-59", "60+"];
pub const CONTACT_FRACTION_TOLERANCE: f64 = 1e-9;
pub const ACTIVITY_FRACTION_TOLERANCE: f64 = 1e-12;
/// Relative reciprocity defect above which a contact matrix counts as non-reciprocal.
pub const RECIPROCITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityLevel {
    pub name: String,
    /// Contact multiplier relative to normal activity.
    pub multiplier: f64,
    /// Share of each age cohort at this level.
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityStructure {
    levels: Vec<ActivityLevel>,
}

impl ActivityStructure {
    pub fn new(levels: Vec<ActivityLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidParameter("no activity levels".into()));
        }
        for level in &levels {
            if !(level.multiplier > 0.0 && level.multiplier.is_finite()) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "activity multiplier must be positive, got {}",
                    level.multiplier
                )));
            }
            if !(level.fraction > 0.0 && level.fraction <= 1.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "activity fraction {} outside (0, 1]",
                    level.fraction
                )));
            }
        }
        let sum: f64 = levels.iter().map(|l| l.fraction).sum();
        if (sum - 1.0).abs() > ACTIVITY_FRACTION_TOLERANCE {
            return Err(Error::InvalidParameter(alloc::format!(
                "activity fractions sum to {sum}, not 1"
            )));
        }
        Ok(Self { levels })
    }

    /// A single level with multiplier 1.
    pub fn single() -> Self {
        Self {
            levels: vec![level("all", 1.0, 1.0)],
        }
    }

    pub fn levels(&self) -> &[ActivityLevel] {
        &self.levels
    }

    pub fn multipliers(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.multiplier).collect()
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.fraction).collect()
    }
}

impl Default for ActivityStructure {
    /// Half contacts for 25%, normal for 50%, double for 25%.
    fn default() -> Self {
        Self {
            levels: vec![
                level("low", 0.5, 0.25),
                level("average", 1.0, 0.5),
                level("high", 2.0, 0.25),
            ],
        }
    }
}

fn level(name: &str, multiplier: f64, fraction: f64) -> ActivityLevel {
    ActivityLevel {
        name: name.to_string(),
        multiplier,
        fraction,
    }
}

/// Age groups, their population shares and a contact matrix.
///
/// Entry `(i, j)` of the matrix is used directly as the transmission kernel
/// `k_ij`, so a member of group `i` meets members of group `j` at rate
/// `k_ij * fraction_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeContactData {
    group_labels: Vec<String>,
    group_fractions: Vec<f64>,
    contact_matrix: DMatrix<f64>,
}

impl AgeContactData {
    pub fn new(
        group_labels: Vec<String>,
        group_fractions: Vec<f64>,
        contact_matrix: DMatrix<f64>,
    ) -> Result<Self> {
        let n = group_labels.len();
        if n == 0 {
            return Err(Error::InvalidParameter("no age groups".into()));
        }
        if group_fractions.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: group_fractions.len(),
            });
        }
        if contact_matrix.nrows() != n || contact_matrix.ncols() != n {
            return Err(Error::InvalidParameter(alloc::format!(
                "contact matrix is {}x{}, expected {n}x{n}",
                contact_matrix.nrows(),
                contact_matrix.ncols()
            )));
        }
        if let Some(f) = group_fractions
            .iter()
            .find(|f| !(**f > 0.0 && f.is_finite()))
        {
            return Err(Error::InvalidParameter(alloc::format!(
                "group fraction must be positive, got {f}"
            )));
        }
        let sum: f64 = group_fractions.iter().sum();
        if (sum - 1.0).abs() > CONTACT_FRACTION_TOLERANCE {
            return Err(Error::InvalidParameter(alloc::format!(
                "group fractions sum to {sum}, not 1"
            )));
        }
        if let Some(v) = contact_matrix
            .iter()
            .find(|v| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(Error::InvalidParameter(alloc::format!(
                "contact rates must be non-negative, got {v}"
            )));
        }
        Ok(Self {
            group_labels,
            group_fractions,
            contact_matrix,
        })
    }

    pub fn group_labels(&self) -> &[String] {
        &self.group_labels
    }

    pub fn group_fractions(&self) -> &[f64] {
        &self.group_fractions
    }

    pub fn contact_matrix(&self) -> &DMatrix<f64> {
        &self.contact_matrix
    }

    pub fn len(&self) -> usize {
        self.group_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.group_labels.is_empty()
    }

    /// Largest `|mu_i c_ij - mu_j c_ji| / max(mu_i c_ij, mu_j c_ji)` over pairs.
    pub fn reciprocity_defect(&self) -> f64 {
        let (mu, c) = (&self.group_fractions, &self.contact_matrix);
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let (x, y) = (mu[i] * c[(i, j)], mu[j] * c[(j, i)]);
                let scale = x.max(y);
                if scale > 0.0 {
                    worst = worst.max((x - y).abs() / scale);
                }
            }
        }
        worst
    }

    pub fn is_reciprocal(&self) -> bool {
        self.reciprocity_defect() <= RECIPROCITY_TOLERANCE
    }

    /// `c_ij <- (mu_i c_ij + mu_j c_ji) / (2 mu_i)`, which makes `mu_i c_ij` symmetric.
    pub fn symmetrized(&self) -> Self {
        let (mu, c) = (&self.group_fractions, &self.contact_matrix);
        let n = self.len();
        let contact_matrix = DMatrix::from_fn(n, n, |i, j| {
            (mu[i] * c[(i, j)] + mu[j] * c[(j, i)]) / (2.0 * mu[i])
        });
        Self {
            group_labels: self.group_labels.clone(),
            group_fractions: self.group_fractions.clone(),
            contact_matrix,
        }
    }
}

/// One type, `k = beta`, `R0 = beta / gamma`.
pub fn homogeneous(beta: f64, gamma: f64) -> Result<SisModel> {
    if !(beta > 0.0 && gamma > 0.0 && beta.is_finite() && gamma.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "beta and gamma must be positive, got beta = {beta}, gamma = {gamma}"
        )));
    }
    let space = DiscreteSpace::new(vec!["all".to_string()], vec![1.0])?;
    SisModel::new(space, vec![gamma], DMatrix::from_element(1, 1, beta))
}

/// Rank-one kernel `k_ij = a_i a_j`.
pub fn proportionate_mixing(
    activities: &[f64],
    weights: &[f64],
    gamma: &[f64],
) -> Result<SisModel> {
    let n = activities.len();
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: weights.len(),
        });
    }
    if let Some(a) = activities.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidParameter(alloc::format!(
            "activity levels must be positive, got {a}"
        )));
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > CONTACT_FRACTION_TOLERANCE {
        return Err(Error::InvalidParameter(alloc::format!(
            "weights sum to {sum}, not 1"
        )));
    }
    let space = DiscreteSpace::unlabeled(weights.to_vec())?;
    let k = DMatrix::from_fn(n, n, |i, j| activities[i] * activities[j]);
    SisModel::new(space, gamma.to_vec(), k)
}

/// Age-structured model with constant recovery rate.
///
/// With `reciprocity_fix`, a non-reciprocal matrix is replaced by
/// [`AgeContactData::symmetrized`] before use.
pub fn age_structured(
    data: &AgeContactData,
    gamma: f64,
    reciprocity_fix: bool,
) -> Result<SisModel> {
    age_activity(data, &ActivityStructure::single(), gamma, reciprocity_fix)
}

/// Types are `(age group, activity level)` pairs, ordered age-major.
///
/// `mu_(i,l) = fraction_i * share_l` and
/// `k_((i,l),(j,m)) = multiplier_l * multiplier_m * c_ij`, so within a single
/// age group the mixing is proportionate in activity.
pub fn age_activity(
    data: &AgeContactData,
    activity: &ActivityStructure,
    gamma: f64,
    reciprocity_fix: bool,
) -> Result<SisModel> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    let fixed;
    let data = if reciprocity_fix && !data.is_reciprocal() {
        fixed = data.symmetrized();
        &fixed
    } else {
        data
    };
    let groups = data.len();
    let levels = activity.levels();
    let single = levels.len() == 1;
    let n = groups * levels.len();
    let mut labels = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for (i, group) in data.group_labels.iter().enumerate() {
        for l in levels {
            labels.push(if single {
                group.clone()
            } else {
                alloc::format!("{group}/{}", l.name)
            });
            mu.push(data.group_fractions[i] * l.fraction);
        }
    }
    let m = activity.multipliers();
    let per_group = levels.len();
    let c = &data.contact_matrix;
    let k = DMatrix::from_fn(n, n, |x, y| {
        m[x % per_group] * m[y % per_group] * c[(x / per_group, y / per_group)]
    });
    let space = DiscreteSpace::new(labels, mu)?;
    SisModel::new(space, vec![gamma; n], k)
}
