//! Vaccination strategies: cost, uniform and equilibrium-based critical
//! strategies, and the closed forms for two-group proportionate mixing.

use alloc::vec;

use crate::equilibrium::maximal_equilibrium;
use crate::error::{Error, Result};
use crate::model::{Profile, SisModel};
use crate::spectral::{basic_reproduction_number, effective_reproduction_number};

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyEvaluation {
    pub eta: Profile,
    /// `R_e(eta)`.
    pub re: f64,
    /// Proportion of the population vaccinated.
    pub cost: f64,
}

/// `1 - integral eta dmu`.
pub fn cost(model: &SisModel, eta: &Profile) -> Result<f64> {
    let kept = eta.integral(model.space())?;
    Ok((1.0 - kept).clamp(0.0, 1.0))
}

pub fn evaluate(model: &SisModel, eta: &Profile) -> Result<StrategyEvaluation> {
    Ok(StrategyEvaluation {
        re: effective_reproduction_number(model, eta)?,
        cost: cost(model, eta)?,
        eta: eta.clone(),
    })
}

/// The constant strategy `1 / R0`.
pub fn uniform_critical(model: &SisModel) -> Result<Profile> {
    let r0 = basic_reproduction_number(model)?;
    if r0 < 1.0 {
        return Err(Error::AlreadySubcritical { r0 });
    }
    Profile::constant(model.n(), 1.0 / r0)
}

/// `1 - g`, vaccinating each type in proportion to its endemic prevalence.
pub fn equilibrium_strategy(model: &SisModel) -> Result<Profile> {
    let g = maximal_equilibrium(model, &Profile::ones(model.n()))?.g;
    Ok(g.complement())
}

/// Two-group proportionate mixing, `K = [[a^2, ab], [ab, b^2]]`, `gamma = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoGroup {
    pub a: f64,
    pub b: f64,
    pub mu1: f64,
}

impl TwoGroup {
    pub fn new(a: f64, b: f64, mu1: f64) -> Result<Self> {
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!(
                "activity levels must be positive, got a = {a}, b = {b}"
            )));
        }
        if a < b {
            return Err(Error::InvalidParameter(alloc::format!(
                "expected a >= b, got a = {a}, b = {b}"
            )));
        }
        if !(mu1 > 0.0 && mu1 <= 1.0) {
            return Err(Error::InvalidParameter(alloc::format!(
                "mu1 = {mu1} outside (0, 1]"
            )));
        }
        Ok(Self { a, b, mu1 })
    }

    pub fn mu2(&self) -> f64 {
        1.0 - self.mu1
    }

    /// `a^2 mu1 + b^2 mu2`.
    pub fn r0(&self) -> f64 {
        self.a * self.a * self.mu1 + self.b * self.b * self.mu2()
    }

    /// `a^2 eta1 mu1 + b^2 eta2 mu2`.
    pub fn re(&self, eta: [f64; 2]) -> f64 {
        self.a * self.a * eta[0] * self.mu1 + self.b * self.b * eta[1] * self.mu2()
    }

    pub fn cost(&self, eta: [f64; 2]) -> f64 {
        1.0 - (eta[0] * self.mu1 + eta[1] * self.mu2())
    }
}

/// The equilibrium strategy `(1 / (1 + ac), 1 / (1 + bc))` together with `c`.
///
/// `c` is the positive root of `a^2 mu1 / (1 + ac) + b^2 mu2 / (1 + bc) = 1`,
/// i.e. of `ab c^2 + (a + b - ab (a mu1 + b mu2)) c + 1 - R0 = 0`. The
/// constant term is negative for `R0 > 1`, so exactly one root is positive.
pub fn two_group_equilibrium_strategy(a: f64, b: f64, mu1: f64) -> Result<(Profile, f64)> {
    let p = TwoGroup::new(a, b, mu1)?;
    let r0 = p.r0();
    if r0 <= 1.0 {
        return Err(Error::NotSupercritical { r0 });
    }
    let qa = a * b;
    let qb = a + b - a * b * (a * mu1 + b * p.mu2());
    let qc = 1.0 - r0;
    let sqrt_disc = libm::sqrt(qb * qb - 4.0 * qa * qc);
    // pick whichever expression avoids cancellation
    let c = if qb >= 0.0 {
        2.0 * (r0 - 1.0) / (qb + sqrt_disc)
    } else {
        (sqrt_disc - qb) / (2.0 * qa)
    };
    let eta = Profile::new(vec![1.0 / (1.0 + a * c), 1.0 / (1.0 + b * c)])?;
    Ok((eta, c))
}

/// The cheapest critical strategy, vaccinating the more active group first:
/// `((1 - min(1, b^2 mu2)) / (a^2 mu1), 1 / max(1, b^2 mu2))`.
pub fn two_group_optimal_strategy(a: f64, b: f64, mu1: f64) -> Result<Profile> {
    let p = TwoGroup::new(a, b, mu1)?;
    let r0 = p.r0();
    if r0 <= 1.0 {
        return Err(Error::NotSupercritical { r0 });
    }
    let second = b * b * p.mu2();
    let eta1 = (1.0 - second.min(1.0)) / (a * a * mu1);
    let eta2 = 1.0 / second.max(1.0);
    // components outside [0, 1] mean the preconditions were violated
    Profile::new(vec![eta1, eta2])
}

/// Scales the kernel so that `R0 = target`.
pub fn calibrate_to_r0(model: &SisModel, target: f64) -> Result<SisModel> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidParameter(alloc::format!(
            "target R0 must be positive, got {target}"
        )));
    }
    let r0 = basic_reproduction_number(model)?;
    if r0 == 0.0 {
        return Err(Error::ZeroReproductionNumber);
    }
    let theta = target / r0;
    model.with_kernel(model.kernel() * theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{homogeneous, proportionate_mixing};
    use approx::assert_relative_eq;

    #[test]
    fn cost_examples() {
        let m = homogeneous(2.0, 1.0).unwrap();
        assert_eq!(cost(&m, &Profile::ones(1)).unwrap(), 0.0);
        assert_eq!(cost(&m, &uniform_critical(&m).unwrap()).unwrap(), 0.5);
        assert_eq!(cost(&m, &Profile::zeros(1)).unwrap(), 1.0);
    }

    #[test]
    fn uniform_critical_examples() {
        let m = homogeneous(2.0, 1.0).unwrap();
        assert_eq!(uniform_critical(&m).unwrap().values(), &[0.5]);
        let m = homogeneous(1.0, 1.0).unwrap();
        assert_eq!(uniform_critical(&m).unwrap().values(), &[1.0]);
        let m = homogeneous(2.5, 1.0).unwrap();
        let eta = uniform_critical(&m).unwrap();
        assert_relative_eq!(eta.values()[0], 0.4, max_relative = 1e-15);
        assert_relative_eq!(cost(&m, &eta).unwrap(), 0.6, max_relative = 1e-15);
        assert!(matches!(
            uniform_critical(&homogeneous(0.5, 1.0).unwrap()),
            Err(Error::AlreadySubcritical { .. })
        ));

        let m = proportionate_mixing(&[2.0, 1.0], &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        let eta = uniform_critical(&m).unwrap();
        assert!((effective_reproduction_number(&m, &eta).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn equilibrium_strategy_examples() {
        let m = homogeneous(2.0, 1.0).unwrap();
        let eta = equilibrium_strategy(&m).unwrap();
        assert!((eta.values()[0] - 0.5).abs() < 1e-12);
        assert!((cost(&m, &eta).unwrap() - 0.5).abs() < 1e-12);

        let m = homogeneous(0.8, 1.0).unwrap();
        assert_eq!(equilibrium_strategy(&m).unwrap(), Profile::ones(1));

        let m = proportionate_mixing(&[2.0, 1.0], &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        let eta = equilibrium_strategy(&m).unwrap();
        assert!((effective_reproduction_number(&m, &eta).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn two_group_equilibrium_examples() {
        // 2 c^2 = 3/2
        let (eta, c) = two_group_equilibrium_strategy(2.0, 1.0, 0.5).unwrap();
        assert_relative_eq!(c, libm::sqrt(0.75), max_relative = 1e-14);
        let p = TwoGroup::new(2.0, 1.0, 0.5).unwrap();
        let e = [eta.values()[0], eta.values()[1]];
        assert!((e[0] - 0.366_025_403_784_438_6).abs() < 1e-12);
        assert!((e[1] - 0.535_898_384_862_245_4).abs() < 1e-12);
        assert!((p.re(e) - 1.0).abs() < 1e-10);
        assert!((p.cost(e) - 0.549_038_105_676_658).abs() < 1e-12);
        assert!(p.cost(e) < 0.6);

        // a = b collapses to the uniform strategy
        let (eta, c) = two_group_equilibrium_strategy(1.5, 1.5, 0.3).unwrap();
        let r0 = 2.25;
        assert_relative_eq!(c, (r0 - 1.0) / 1.5, max_relative = 1e-12);
        for v in eta.values() {
            assert_relative_eq!(*v, 1.0 / r0, max_relative = 1e-12);
        }

        // mu1 = 1 is the homogeneous model with R0 = a^2
        let (eta, _) = two_group_equilibrium_strategy(2.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(eta.values()[0], 0.25, max_relative = 1e-12);

        assert!(matches!(
            two_group_equilibrium_strategy(0.9, 0.5, 0.5),
            Err(Error::NotSupercritical { .. })
        ));
        assert!(two_group_equilibrium_strategy(1.0, 2.0, 0.5).is_err());
    }

    #[test]
    fn two_group_equilibrium_matches_generic_solver() {
        let (eta, _) = two_group_equilibrium_strategy(2.0, 1.0, 0.5).unwrap();
        let m = proportionate_mixing(&[2.0, 1.0], &[0.5, 0.5], &[1.0, 1.0]).unwrap();
        let generic = equilibrium_strategy(&m).unwrap();
        assert!(eta.sup_distance(&generic).unwrap() < 1e-8);
    }

    #[test]
    fn two_group_optimal_examples() {
        let eta = two_group_optimal_strategy(2.0, 1.0, 0.5).unwrap();
        assert_eq!(eta.values(), &[0.25, 1.0]);
        let p = TwoGroup::new(2.0, 1.0, 0.5).unwrap();
        assert_eq!(p.re([0.25, 1.0]), 1.0);
        assert_eq!(p.cost([0.25, 1.0]), 0.375);

        let eta = two_group_optimal_strategy(2.0, 1.5, 0.5).unwrap();
        assert_eq!(eta.values()[0], 0.0);
        assert_relative_eq!(eta.values()[1], 1.0 / 1.125, max_relative = 1e-15);
        let p = TwoGroup::new(2.0, 1.5, 0.5).unwrap();
        assert!((p.re([eta.values()[0], eta.values()[1]]) - 1.0).abs() < 1e-12);

        // b^2 mu2 = 1 on the nose: both branches give (0, 1)
        let eta = two_group_optimal_strategy(3.0, 2.0, 0.75).unwrap();
        assert!(eta.values()[0].abs() < 1e-15);
        assert!((eta.values()[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn calibration() {
        let m = proportionate_mixing(&[1.0, 2.0, 4.0], &[0.25, 0.5, 0.25], &[1.0; 3]).unwrap();
        assert_relative_eq!(
            basic_reproduction_number(&m).unwrap(),
            6.25,
            max_relative = 1e-13
        );
        let c = calibrate_to_r0(&m, 2.0).unwrap();
        assert_relative_eq!(c.kernel()[(0, 0)], 0.32, max_relative = 1e-13);
        assert_relative_eq!(
            basic_reproduction_number(&c).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        let doubled = calibrate_to_r0(&m, 4.0).unwrap();
        for (x, y) in doubled.kernel().iter().zip(c.kernel().iter()) {
            assert_relative_eq!(*x, 2.0 * y, max_relative = 1e-14);
        }
        let same = calibrate_to_r0(&m, basic_reproduction_number(&m).unwrap()).unwrap();
        assert_eq!(same, m);
        let zero = m.with_kernel(m.kernel() * 0.0).unwrap();
        assert!(matches!(
            calibrate_to_r0(&zero, 2.0),
            Err(Error::ZeroReproductionNumber)
        ));
    }

    proptest::proptest! {
        #[test]
        fn re_is_monotone_and_homogeneous(
            lo in proptest::collection::vec(0.0f64..1.0, 3),
            bump in proptest::collection::vec(0.0f64..1.0, 3),
            lambda in 0.0f64..=1.0,
        ) {
            let m = crate::builders::proportionate_mixing(&[0.5, 1.0, 2.0], &[0.25, 0.5, 0.25], &[1.0, 0.7, 1.3]).unwrap();
            let low = Profile::new(lo.clone()).unwrap();
            let high = Profile::clamped(lo.iter().zip(&bump).map(|(a, b)| a + b).collect());
            let r_low = effective_reproduction_number(&m, &low).unwrap();
            let r_high = effective_reproduction_number(&m, &high).unwrap();
            proptest::prop_assert!(r_low <= r_high * (1.0 + 1e-12) + 1e-14);
            let scaled = effective_reproduction_number(&m, &low.scaled(lambda).unwrap()).unwrap();
            proptest::prop_assert!((scaled - lambda * r_low).abs() <= 1e-12 * r_low + 1e-14);
        }
    }
}
