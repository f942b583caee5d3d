//! Cross-module property suites, driven from a seed.

use std::fmt::Write as _;

use hetsis_core::builders::proportionate_mixing;
use hetsis_core::dynamics::{default_horizon, default_step, integrate, vector_field};
use hetsis_core::equilibrium::{
    block_equilibria, maximal_equilibrium, maximal_equilibrium_ode, RESIDUAL_TOLERANCE,
};
use hetsis_core::spectral::{multiplication_operator, spectral_radius};
use hetsis_core::stability::check_maximality;
use hetsis_core::strategies::{
    cost, equilibrium_strategy, two_group_equilibrium_strategy, two_group_optimal_strategy,
    uniform_critical, TwoGroup,
};
use hetsis_core::{effective_reproduction_number, Profile, RadiusMethod, Result, SisModel};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{catalog, random};

pub const DEFAULT_SEED: u64 = 20_240_601;

pub const OPERATOR_TOLERANCE: f64 = 1e-9;
pub const CRITICALITY_TOLERANCE: f64 = 1e-7;
pub const INSTABILITY_MARGIN: f64 = 1e-6;
pub const ROUTE_TOLERANCE: f64 = 1e-6;
pub const TWO_GROUP_TOLERANCE: f64 = 1e-8;
pub const OPTIMAL_CRITICALITY_TOLERANCE: f64 = 1e-10;
pub const COST_GAP: f64 = 1e-10;
pub const LIMIT_SLACK: f64 = 1e-8;
/// Saved states may jitter by a few ulps once the flow has reached its limit.
pub const MONOTONE_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest discrepancy seen, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub first_failure: Option<String>,
}

impl SuiteOutcome {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self {
            name,
            cases: 0,
            failures: 0,
            worst: 0.0,
            tolerance,
            first_failure: None,
        }
    }

    fn record(&mut self, discrepancy: f64, ok: bool, describe: impl FnOnce() -> String) {
        self.cases += 1;
        if discrepancy.is_nan() {
            self.worst = f64::NAN;
        } else if !self.worst.is_nan() {
            self.worst = self.worst.max(discrepancy);
        }
        if !ok {
            self.failures += 1;
            if self.first_failure.is_none() {
                self.first_failure = Some(describe());
            }
        }
    }

    fn check(&mut self, discrepancy: f64, describe: impl FnOnce() -> String) {
        let ok = discrepancy <= self.tolerance;
        self.record(discrepancy, ok, describe);
    }

    fn error(&mut self, err: impl std::fmt::Display) {
        let msg = err.to_string();
        self.record(f64::NAN, false, || msg);
    }

    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }

    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {}: cases={} failures={} worst={:.3e} tol={:.0e}",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.worst,
            self.tolerance
        );
        if let Some(f) = &self.first_failure {
            let _ = write!(s, " first-failure=[{f}]");
        }
        s
    }
}

fn relative(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn rho(a: &DMatrix<f64>) -> Result<f64> {
    spectral_radius(a, RadiusMethod::Dense)
}

/// `A <= B` entrywise implies `rho(A) <= rho(B)`.
///
/// With `perturb`, `B = A - P` instead of `A + P`, which the suite must catch.
pub fn spectral_monotonicity(rng: &mut impl Rng, count: usize, perturb: bool) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("spectral-monotonicity", OPERATOR_TOLERANCE);
    for _ in 0..count {
        let n = rng.gen_range(1..=8);
        let a = random::nonnegative_matrix(rng, n);
        let p = random::nonnegative_matrix(rng, n);
        let b = if perturb { &a - &p } else { &a + &p };
        match (rho(&a), rho(&b)) {
            (Ok(ra), Ok(rb)) => {
                let excess = if ra <= rb { 0.0 } else { relative(ra, rb) };
                out.check(excess, || format!("n={n} rho(A)={ra:e} rho(B)={rb:e}"));
            }
            (Err(e), _) | (_, Err(e)) => out.error(e),
        }
    }
    out
}

/// `rho(TS) = rho(ST)` for non-negative `T`, `S`.
pub fn product_commutation(rng: &mut impl Rng, count: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("product-commutation", OPERATOR_TOLERANCE);
    for _ in 0..count {
        let n = rng.gen_range(1..=8);
        let t = random::nonnegative_matrix(rng, n);
        // alternate between general and diagonal (multiplication) operators
        let s = if rng.gen_bool(0.5) {
            random::nonnegative_matrix(rng, n)
        } else {
            multiplication_operator(random::profile(rng, n).values())
        };
        match (rho(&(&t * &s)), rho(&(&s * &t))) {
            (Ok(x), Ok(y)) => out.check(relative(x, y), || {
                format!("n={n} rho(TS)={x:e} rho(ST)={y:e}")
            }),
            (Err(e), _) | (_, Err(e)) => out.error(e),
        }
    }
    out
}

/// `rho(lambda A) = lambda rho(A)`.
pub fn homogeneity(rng: &mut impl Rng, count: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("homogeneity", OPERATOR_TOLERANCE);
    for _ in 0..count {
        let n = rng.gen_range(1..=8);
        let a = random::nonnegative_matrix(rng, n);
        let lambda = rng.gen_range(0.1..10.0);
        match (rho(&(&a * lambda)), rho(&a)) {
            (Ok(x), Ok(y)) => {
                out.check(relative(x, lambda * y), || format!("n={n} lambda={lambda}"))
            }
            (Err(e), _) | (_, Err(e)) => out.error(e),
        }
    }
    out
}

/// `rho(M_f K M_f) = rho(K M_{f^2})`, which ties `R_e((1 - h)^2)` to the
/// linearization at `h`.
pub fn sandwich(rng: &mut impl Rng, count: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("sandwich", OPERATOR_TOLERANCE);
    for _ in 0..count {
        let n = rng.gen_range(1..=8);
        let k = random::nonnegative_matrix(rng, n);
        let f = random::profile(rng, n);
        let mf = multiplication_operator(f.values());
        let f2: Vec<f64> = f.values().iter().map(|v| v * v).collect();
        match (
            rho(&(&mf * &k * &mf)),
            rho(&(&k * multiplication_operator(&f2))),
        ) {
            (Ok(x), Ok(y)) => out.check(relative(x, y), || format!("n={n} {x:e} vs {y:e}")),
            (Err(e), _) | (_, Err(e)) => out.error(e),
        }
    }
    out
}

/// `R_e(1 - g) = 1` for the maximal equilibrium of supercritical models.
pub fn criticality(rng: &mut impl Rng, count: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("criticality", CRITICALITY_TOLERANCE);
    for _ in 0..count {
        let m = random::supercritical_model(rng, 20, 1.05);
        let re = maximal_equilibrium(&m, &Profile::ones(m.n()))
            .and_then(|eq| effective_reproduction_number(&m, &eq.g.complement()));
        match re {
            Ok(re) => out.check((re - 1.0).abs(), || format!("n={} R_e(1-g)={re}", m.n())),
            Err(e) => out.error(e),
        }
    }
    out
}

/// On two isolated blocks, every block equilibrium gets five agreeing
/// verdicts; non-maximal ones are unstable by a clear margin.
pub fn maximality_equivalence(rng: &mut impl Rng, count: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("maximality-equivalence", INSTABILITY_MARGIN);
    for _ in 0..count {
        let (m, blocks) = random::two_block_model(rng);
        let equilibria = match block_equilibria(&m, &blocks) {
            Ok(e) => e,
            Err(e) => {
                out.error(e);
                continue;
            }
        };
        for h in equilibria {
            let report = match check_maximality(&m, &h) {
                Ok(r) => r,
                Err(e) => {
                    out.error(e);
                    continue;
                }
            };
            let agree =
                report.consistent && report.verdicts.iter().all(|v| *v == report.is_maximal);
            let ordered = report.re_1mh >= report.re_1mh_sq * (1.0 - OPERATOR_TOLERANCE);
            // for non-maximal h, how far the instability margins fall short
            let shortfall = if report.is_maximal {
                0.0
            } else {
                (INSTABILITY_MARGIN - report.s_df_h)
                    .max(INSTABILITY_MARGIN - (report.re_1mh - 1.0))
                    .max(0.0)
            };
            let ok = agree && ordered && shortfall == 0.0;
            out.record(shortfall, ok, || {
                format!(
                    "n={} maximal={} verdicts={:?} s(DF[h])={:e} R_e(1-h)={}",
                    m.n(),
                    report.is_maximal,
                    report.verdicts,
                    report.s_df_h,
                    report.re_1mh
                )
            });
        }
    }
    out
}

/// Fixed point and long-time ODE limit agree on the built-in models.
pub fn route_agreement(models: &[(String, SisModel)]) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("fixed-point-vs-ode", ROUTE_TOLERANCE);
    for (name, m) in models {
        let ones = Profile::ones(m.n());
        let t_end = 200.0 / m.gamma().iter().copied().fold(f64::INFINITY, f64::min);
        let gap = maximal_equilibrium(m, &ones)
            .and_then(|fp| Ok((fp, maximal_equilibrium_ode(m, &ones, t_end)?)))
            .and_then(|(fp, ode)| fp.g.sup_distance(&ode.g));
        match gap {
            Ok(d) => out.check(d, || format!("{name}: sup distance {d:e}")),
            Err(e) => out.error(format!("{name}: {e}")),
        }
    }
    out
}

/// Closed forms for two groups with proportionate mixing against the
/// generic pipeline, and the ordering of the three strategy costs.
pub fn two_group(rng: &mut impl Rng, count: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("two-group", TWO_GROUP_TOLERANCE);
    let mut done = 0;
    while done < count {
        let a = rng.gen_range(0.2..3.0);
        let b = rng.gen_range(0.1..a);
        let mu1 = rng.gen_range(0.05..0.95);
        let tg = TwoGroup::new(a, b, mu1).expect("a > b > 0");
        if tg.r0() <= 1.0 {
            continue;
        }
        done += 1;
        let run = || -> Result<(f64, f64, [f64; 3])> {
            let m = proportionate_mixing(&[a, b], &[mu1, 1.0 - mu1], &[1.0, 1.0])?;
            let (closed, _) = two_group_equilibrium_strategy(a, b, mu1)?;
            let generic = equilibrium_strategy(&m)?;
            let optimal = two_group_optimal_strategy(a, b, mu1)?;
            let re_opt = effective_reproduction_number(&m, &optimal)?;
            let costs = [
                cost(&m, &optimal)?,
                cost(&m, &generic)?,
                cost(&m, &uniform_critical(&m)?)?,
            ];
            Ok((closed.sup_distance(&generic)?, (re_opt - 1.0).abs(), costs))
        };
        match run() {
            Ok((gap, re_err, [c_opt, c_equi, c_uni])) => {
                let ok = gap <= TWO_GROUP_TOLERANCE
                    && re_err <= OPTIMAL_CRITICALITY_TOLERANCE
                    && c_opt <= c_equi + COST_GAP
                    && c_uni - c_equi > COST_GAP;
                out.record(gap, ok, || {
                    format!("a={a} b={b} mu1={mu1} gap={gap:e} |R_e-1|={re_err:e} costs={c_opt},{c_equi},{c_uni}")
                });
            }
            Err(e) => out.error(e),
        }
    }
    out
}

/// From `u0 = lambda g`, where `F(u0) >= 0`, the flow only increases and stays below `g`.
pub fn monotone_dynamics(rng: &mut impl Rng, count: usize) -> SuiteOutcome {
    let mut out = SuiteOutcome::new("monotone-dynamics", LIMIT_SLACK);
    for _ in 0..count {
        let m = random::supercritical_model(rng, 8, 1.05);
        let lambda = rng.gen_range(0.05..0.95);
        let run = || -> Result<(f64, f64, f64)> {
            let n = m.n();
            let ones = Profile::ones(n);
            let g = maximal_equilibrium(&m, &ones)?.g;
            let u0 = g.scaled(lambda)?;
            let push = vector_field(&m, &u0)?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            let traj = integrate(&m, &ones, &u0, default_horizon(&m), default_step(&m))?;
            let mut drop = 0.0f64;
            for w in traj.states().windows(2) {
                for (a, b) in w[0].values().iter().zip(w[1].values()) {
                    drop = drop.max(a - b);
                }
            }
            let overshoot = traj
                .final_state()
                .values()
                .iter()
                .zip(g.values())
                .fold(0.0f64, |acc, (u, g)| acc.max(u - g));
            Ok((push, drop, overshoot))
        };
        match run() {
            Ok((push, drop, overshoot)) => {
                // F(lambda g) >= 0 holds up to the residual of g
                let ok = push >= -RESIDUAL_TOLERANCE
                    && drop <= MONOTONE_SLACK
                    && overshoot <= LIMIT_SLACK;
                out.record(overshoot, ok, || {
                    format!("n={} lambda={lambda} min F(u0)={push:e} drop={drop:e} overshoot={overshoot:e}", m.n())
                });
            }
            Err(e) => out.error(e),
        }
    }
    out
}

/// Case counts for [`run_all`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteSizes {
    pub operator: usize,
    pub criticality: usize,
    pub maximality: usize,
    pub two_group: usize,
    pub dynamics: usize,
}

impl Default for SuiteSizes {
    fn default() -> Self {
        Self {
            operator: 500,
            criticality: 200,
            maximality: 50,
            two_group: 100,
            dynamics: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub seed: u64,
    pub suites: Vec<SuiteOutcome>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteOutcome::passed)
    }

    pub fn render(&self) -> String {
        let mut s = format!("seed {}\n", self.seed);
        for suite in &self.suites {
            s += &suite.line();
            s.push('\n');
        }
        let failed = self.suites.iter().filter(|s| !s.passed()).count();
        let _ = writeln!(
            s,
            "{} of {} suites passed",
            self.suites.len() - failed,
            self.suites.len()
        );
        s
    }
}

/// Each suite gets its own stream derived from `seed`, so suites do not
/// shift each other when their sizes change.
pub fn suite_rng(seed: u64, suite: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(suite);
    rng
}

pub fn run_verify_properties(seed: u64, sizes: SuiteSizes, perturb: bool) -> PropertyReport {
    let suites = vec![
        spectral_monotonicity(&mut suite_rng(seed, 1), sizes.operator, perturb),
        product_commutation(&mut suite_rng(seed, 2), sizes.operator),
        homogeneity(&mut suite_rng(seed, 3), sizes.operator),
        sandwich(&mut suite_rng(seed, 4), sizes.operator),
        criticality(&mut suite_rng(seed, 5), sizes.criticality),
        maximality_equivalence(&mut suite_rng(seed, 6), sizes.maximality),
        route_agreement(&catalog::example_models()),
        two_group(&mut suite_rng(seed, 7), sizes.two_group),
        monotone_dynamics(&mut suite_rng(seed, 8), sizes.dynamics),
    ];
    PropertyReport { seed, suites }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SuiteSizes {
        SuiteSizes {
            operator: 30,
            criticality: 10,
            maximality: 5,
            two_group: 10,
            dynamics: 3,
        }
    }

    #[test]
    fn small_run_passes() {
        let report = run_verify_properties(7, small(), false);
        assert!(report.passed(), "{}", report.render());
    }

    #[test]
    fn equal_seeds_give_identical_reports() {
        let a = run_verify_properties(11, small(), false).render();
        let b = run_verify_properties(11, small(), false).render();
        assert_eq!(a, b);
    }

    #[test]
    fn sign_flip_is_caught() {
        let out = spectral_monotonicity(&mut suite_rng(3, 1), 50, true);
        assert!(!out.passed());
        assert!(out.line().starts_with("FAIL spectral-monotonicity"));
    }
}
