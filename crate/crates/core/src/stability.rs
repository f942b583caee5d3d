//! Linearization at equilibria and the five equivalent maximality tests.
//!
//! For an equilibrium `h` the following are equivalent:
//!
//! 1. `h` is the maximal equilibrium,
//! 2. `s(DF[h]) <= 0`,
//! 3. `R_e((1 - h)^2) <= 1`,
//! 4. `s(DF_{1-h}[0]) <= 0`,
//! 5. `R_e(1 - h) <= 1`.
//!
//! The maximal equilibrium itself sits exactly on the thresholds of 4 and 5,
//! so every comparison uses a band of [`THRESHOLD_BAND`] in which the
//! condition is reported as critical.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::equilibrium::{maximal_equilibrium, residual_sup, RESIDUAL_TOLERANCE};
use crate::error::{Error, Result};
use crate::model::{check_len, Profile, SisModel};
use crate::spectral::{effective_reproduction_number, spectral_bound};

pub const THRESHOLD_BAND: f64 = 1e-8;
/// Condition 1 holds when `h` is this close to the maximal equilibrium.
pub const MAXIMAL_DISTANCE: f64 = 1e-8;

const DIRECTION_MAX_ITERATIONS: usize = 100_000;
const DIRECTION_TOLERANCE: f64 = 1e-13;

/// Matrix of `DF_eta[h]`, the derivative of `F_eta` at `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedOperator {
    matrix: DMatrix<f64>,
    base_point: Profile,
    eta: Profile,
}

impl LinearizedOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn base_point(&self) -> &Profile {
        &self.base_point
    }

    pub fn eta(&self) -> &Profile {
        &self.eta
    }

    pub fn spectral_bound(&self) -> Result<f64> {
        spectral_bound(&self.matrix)
    }

    /// Non-negative eigenvector for the spectral bound, scaled to sup-norm 1,
    /// when the spectral bound is positive. `None` otherwise.
    ///
    /// Shifting by the largest diagonal magnitude makes the matrix
    /// non-negative; power iteration from the all-ones vector then picks out
    /// the Perron vector.
    pub fn unstable_direction(&self) -> Result<Option<Vec<f64>>> {
        let s = self.spectral_bound()?;
        if s <= 0.0 {
            return Ok(None);
        }
        let n = self.matrix.nrows();
        let shift = (0..n).fold(0.0f64, |acc, i| acc.max(self.matrix[(i, i)].abs()));
        let mut w = vec![1.0; n];
        for _ in 0..DIRECTION_MAX_ITERATIONS {
            let mut next: Vec<f64> = (0..n)
                .map(|i| shift * w[i] + (0..n).map(|j| self.matrix[(i, j)] * w[j]).sum::<f64>())
                .collect();
            let top = next.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if top == 0.0 {
                return Ok(None);
            }
            for v in &mut next {
                *v = (*v / top).max(0.0);
            }
            let change = next
                .iter()
                .zip(&w)
                .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            w = next;
            if change < DIRECTION_TOLERANCE {
                break;
            }
        }
        Ok(Some(w))
    }
}

/// `DF_eta[h]_ij = (1 - h_i) k_ij eta_j mu_j - delta_ij (gamma_i + sum_l k_il eta_l h_l mu_l)`.
pub fn linearize(model: &SisModel, eta: &Profile, h: &Profile) -> Result<LinearizedOperator> {
    let n = model.n();
    check_len(n, eta.len())?;
    check_len(n, h.len())?;
    let (k, mu, gamma) = (model.kernel(), model.weights(), model.gamma());
    let (e, hv) = (eta.values(), h.values());
    let mut matrix = DMatrix::from_fn(n, n, |i, j| (1.0 - hv[i]) * k[(i, j)] * e[j] * mu[j]);
    for i in 0..n {
        let force: f64 = (0..n).map(|j| k[(i, j)] * e[j] * hv[j] * mu[j]).sum();
        matrix[(i, i)] -= gamma[i] + force;
    }
    Ok(LinearizedOperator {
        matrix,
        base_point: h.clone(),
        eta: eta.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximalityReport {
    /// Verdict of condition 1.
    pub is_maximal: bool,
    /// `||h - g||_inf` for the maximal equilibrium `g`.
    pub distance_to_maximal: f64,
    /// `s(DF[h])`.
    pub s_df_h: f64,
    /// `R_e((1 - h)^2)`.
    pub re_1mh_sq: f64,
    /// `s(DF_{1-h}[0])`.
    pub s_df_vacc_0: f64,
    /// `R_e(1 - h)`.
    pub re_1mh: f64,
    /// Whether each of the five conditions holds, counting values inside the
    /// threshold band as holding.
    pub verdicts: [bool; 5],
    /// Whether each quantity lies inside the threshold band.
    pub critical: [bool; 5],
    /// All non-critical verdicts agree.
    pub consistent: bool,
}

/// Evaluates the five maximality conditions at an equilibrium `h` of the
/// unvaccinated dynamics.
pub fn check_maximality(model: &SisModel, h: &Profile) -> Result<MaximalityReport> {
    let n = model.n();
    check_len(n, h.len())?;
    let ones = Profile::ones(n);
    let residual = residual_sup(model, ones.values(), h.values());
    if residual >= RESIDUAL_TOLERANCE {
        return Err(Error::NotAnEquilibrium { residual });
    }

    let g = maximal_equilibrium(model, &ones)?.g;
    let distance = h.sup_distance(&g)?;
    let complement = h.complement();
    let complement_sq = complement.product(&complement)?;

    let s_df_h = linearize(model, &ones, h)?.spectral_bound()?;
    let re_1mh_sq = effective_reproduction_number(model, &complement_sq)?;
    let s_df_vacc_0 = linearize(model, &complement, &Profile::zeros(n))?.spectral_bound()?;
    let re_1mh = effective_reproduction_number(model, &complement)?;

    let banded = |value: f64, threshold: f64| {
        let critical = (value - threshold).abs() <= THRESHOLD_BAND;
        (critical || value < threshold, critical)
    };
    let checks = [
        (distance < MAXIMAL_DISTANCE, false),
        banded(s_df_h, 0.0),
        banded(re_1mh_sq, 1.0),
        banded(s_df_vacc_0, 0.0),
        banded(re_1mh, 1.0),
    ];
    let verdicts = checks.map(|c| c.0);
    let critical = checks.map(|c| c.1);
    let mut decided = checks.iter().filter(|c| !c.1).map(|c| c.0);
    let consistent = match decided.next() {
        Some(first) => decided.all(|v| v == first),
        None => true,
    };
    Ok(MaximalityReport {
        is_maximal: verdicts[0],
        distance_to_maximal: distance,
        s_df_h,
        re_1mh_sq,
        s_df_vacc_0,
        re_1mh,
        verdicts,
        critical,
        consistent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, vector_field};
    use crate::equilibrium::block_equilibria;
    use crate::model::DiscreteSpace;

    fn homogeneous(beta: f64) -> SisModel {
        SisModel::new(
            DiscreteSpace::unlabeled(vec![1.0]).unwrap(),
            vec![1.0],
            DMatrix::from_element(1, 1, beta),
        )
        .unwrap()
    }

    fn two_blocks() -> SisModel {
        // block {0, 1} and block {2}, both supercritical
        SisModel::new(
            DiscreteSpace::unlabeled(vec![0.3, 0.3, 0.4]).unwrap(),
            vec![1.0, 1.5, 1.0],
            DMatrix::from_row_slice(3, 3, &[3.0, 4.0, 0.0, 2.0, 5.0, 0.0, 0.0, 0.0, 6.0]),
        )
        .unwrap()
    }

    #[test]
    fn linearize_examples() {
        let m = homogeneous(2.0);
        let one = Profile::ones(1);
        assert_eq!(
            linearize(&m, &one, &Profile::zeros(1)).unwrap().matrix()[(0, 0)],
            1.0
        );
        // d/du (u - 2u^2) at u = 1/2
        let half = Profile::new(vec![0.5]).unwrap();
        assert_eq!(linearize(&m, &one, &half).unwrap().matrix()[(0, 0)], -1.0);

        let m = two_blocks();
        let l = linearize(
            &m,
            &Profile::zeros(3),
            &Profile::new(vec![0.2, 0.3, 0.4]).unwrap(),
        )
        .unwrap();
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, -1.5, -1.0]));
        assert_eq!(l.matrix(), &expected);
    }

    #[test]
    fn linearization_matches_finite_differences() {
        let m = two_blocks();
        let eta = Profile::new(vec![0.9, 0.6, 0.8]).unwrap();
        let h = Profile::new(vec![0.3, 0.5, 0.2]).unwrap();
        let l = linearize(&m, &eta, &h).unwrap();
        let eps = 1e-6;
        for j in 0..3 {
            let mut plus = h.values().to_vec();
            let mut minus = h.values().to_vec();
            plus[j] += eps;
            minus[j] -= eps;
            let fp =
                crate::dynamics::vaccinated_vector_field(&m, &eta, &Profile::new(plus).unwrap())
                    .unwrap();
            let fm =
                crate::dynamics::vaccinated_vector_field(&m, &eta, &Profile::new(minus).unwrap())
                    .unwrap();
            for i in 0..3 {
                let fd = (fp[i] - fm[i]) / (2.0 * eps);
                assert!((fd - l.matrix()[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn maximal_equilibrium_passes_all_five() {
        let m = two_blocks();
        let g = maximal_equilibrium(&m, &Profile::ones(3)).unwrap().g;
        let r = check_maximality(&m, &g).unwrap();
        assert_eq!(r.verdicts, [true; 5]);
        assert!(r.consistent && r.is_maximal);
        assert!((r.re_1mh - 1.0).abs() < 1e-8);
        assert!(r.s_df_h <= 0.0);
    }

    #[test]
    fn zero_fails_all_five_when_supercritical() {
        let m = two_blocks();
        let r = check_maximality(&m, &Profile::zeros(3)).unwrap();
        assert_eq!(r.verdicts, [false; 5]);
        assert!(r.consistent);
    }

    #[test]
    fn partial_block_equilibrium_is_unstable() {
        let m = two_blocks();
        let eqs = block_equilibria(&m, &[vec![0, 1], vec![2]]).unwrap();
        for h in &eqs[1..3] {
            let r = check_maximality(&m, h).unwrap();
            assert_eq!(r.verdicts, [false; 5], "{r:?}");
            assert!(r.s_df_h > 1e-6 && r.re_1mh > 1.0 + 1e-6);
            assert!(r.re_1mh >= r.re_1mh_sq);
        }
    }

    #[test]
    fn not_an_equilibrium() {
        let m = homogeneous(2.0);
        assert!(matches!(
            check_maximality(&m, &Profile::new(vec![0.4]).unwrap()),
            Err(Error::NotAnEquilibrium { .. })
        ));
    }

    #[test]
    fn escape_direction_from_partial_equilibrium() {
        let m = two_blocks();
        let eqs = block_equilibria(&m, &[vec![0, 1], vec![2]]).unwrap();
        let h = &eqs[1]; // first block endemic, second disease free
        let l = linearize(&m, &Profile::ones(3), h).unwrap();
        let w = l.unstable_direction().unwrap().unwrap();
        assert!(w[0] < 1e-12 && w[1] < 1e-12 && w[2] == 1.0);
        let eps = 1e-3;
        let start: Vec<f64> = h
            .values()
            .iter()
            .zip(&w)
            .map(|(h, w)| h + eps * w)
            .collect();
        let start = Profile::new(start).unwrap();
        // non-negative up to the residual of the block equilibrium itself
        assert!(vector_field(&m, &start)
            .unwrap()
            .iter()
            .all(|v| *v >= -RESIDUAL_TOLERANCE));
        assert!(vector_field(&m, &start).unwrap()[2] > 0.0);
        let traj = integrate(&m, &Profile::ones(3), &start, 30.0, 0.01).unwrap();
        for pair in traj.states().windows(2) {
            assert!(pair[0].is_below(&pair[1], 1e-12));
        }
        // and the flow escapes to the maximal equilibrium
        let g = maximal_equilibrium(&m, &Profile::ones(3)).unwrap().g;
        assert!(traj.final_state().sup_distance(&g).unwrap() < 1e-6);
        // a stable point has no escape direction
        let lg = linearize(&m, &Profile::ones(3), &g).unwrap();
        assert!(lg.unstable_direction().unwrap().is_none());
    }
}
