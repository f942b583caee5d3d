//! Seeded random instances for the property suites.

use hetsis_core::{
    basic_reproduction_number, effective_reproduction_number, DiscreteSpace, Profile, SisModel,
};
use nalgebra::DMatrix;
use rand::Rng;

/// Non-negative matrix with entries in `[0, 1)`, about a fifth of them zero.
pub fn nonnegative_matrix<R: Rng>(rng: &mut R, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| {
        if rng.gen_bool(0.2) {
            0.0
        } else {
            rng.gen::<f64>()
        }
    })
}

/// Strictly positive weights normalized to sum to one.
pub fn weights<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|w| w / sum).collect()
}

pub fn profile<R: Rng>(rng: &mut R, n: usize) -> Profile {
    Profile::new((0..n).map(|_| rng.gen::<f64>()).collect()).expect("values in [0, 1)")
}

/// Random weights, `gamma` in `[0.5, 2]` and a kernel scaled by a random factor.
pub fn model<R: Rng>(rng: &mut R, n: usize) -> SisModel {
    let space = DiscreteSpace::unlabeled(weights(rng, n)).expect("positive weights");
    let gamma = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
    let scale = rng.gen_range(0.5..6.0);
    let k = nonnegative_matrix(rng, n) * scale;
    SisModel::new(space, gamma, k).expect("valid random model")
}

/// Draws models of size `1..=max_n` until one has `R0 > min_r0`.
pub fn supercritical_model<R: Rng>(rng: &mut R, max_n: usize, min_r0: f64) -> SisModel {
    loop {
        let n = rng.gen_range(1..=max_n);
        let m = model(rng, n);
        if basic_reproduction_number(&m).expect("finite kernel") > min_r0 {
            return m;
        }
    }
}

/// Two isolated blocks of one to four types, each scaled to its own
/// reproduction number: supercritical (1.2 to 3) or subcritical (0.2 to 0.8),
/// with at least one supercritical block.
pub fn two_block_model<R: Rng>(rng: &mut R) -> (SisModel, Vec<Vec<usize>>) {
    let n1 = rng.gen_range(1..=4);
    let n2 = rng.gen_range(1..=4);
    let n = n1 + n2;
    let blocks = vec![(0..n1).collect::<Vec<_>>(), (n1..n).collect()];
    let space = DiscreteSpace::unlabeled(weights(rng, n)).expect("positive weights");
    let gamma = (0..n).map(|_| rng.gen_range(0.5..=2.0)).collect();
    let mut k = DMatrix::zeros(n, n);
    for block in &blocks {
        for &i in block {
            for &j in block {
                k[(i, j)] = rng.gen_range(0.1..1.0);
            }
        }
    }
    let mut m = SisModel::new(space, gamma, k).expect("valid random model");
    let first_super = rng.gen_bool(0.75);
    let mut targets = [0.0; 2];
    for (b, target) in targets.iter_mut().enumerate() {
        let supercritical = if b == 0 {
            first_super
        } else {
            !first_super || rng.gen_bool(0.75)
        };
        *target = if supercritical {
            rng.gen_range(1.2..3.0)
        } else {
            rng.gen_range(0.2..0.8)
        };
    }
    let mut k = m.kernel().clone();
    for (block, target) in blocks.iter().zip(targets) {
        let re = effective_reproduction_number(&m, &Profile::indicator(n, block))
            .expect("finite kernel");
        let theta = target / re;
        for &i in block {
            for &j in block {
                k[(i, j)] *= theta;
            }
        }
    }
    m = m.with_kernel(k).expect("scaled kernel stays valid");
    (m, blocks)
}
