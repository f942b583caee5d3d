//! Built-in example models that need no external data.

use hetsis_core::builders::{
    age_activity, homogeneous, proportionate_mixing, ActivityStructure, AgeContactData,
};
use hetsis_core::strategies::calibrate_to_r0;
use hetsis_core::{Result, SisModel};
use nalgebra::DMatrix;

/// One group, contact rate 1: combined with an activity structure this is
/// pure proportionate mixing in activity.
pub fn single_group() -> AgeContactData {
    AgeContactData::new(
        vec!["all".into()],
        vec![1.0],
        DMatrix::from_element(1, 1, 1.0),
    )
    .expect("static data is valid")
}

/// Three activity levels (1/2, 1, 2 with shares 1/4, 1/2, 1/4), `gamma = 1`, scaled to `r0`.
pub fn activity_model(r0: f64) -> Result<SisModel> {
    let m = age_activity(&single_group(), &ActivityStructure::default(), 1.0, false)?;
    calibrate_to_r0(&m, r0)
}

pub fn homogeneous_model(r0: f64) -> Result<SisModel> {
    homogeneous(r0, 1.0)
}

/// Every model used by the cross-validation checks, with a short name.
pub fn example_models() -> Vec<(String, SisModel)> {
    let mut out = Vec::new();
    for r0 in [2.0, 2.5, 3.0] {
        out.push((
            format!("homogeneous-r0-{r0}"),
            homogeneous_model(r0).unwrap(),
        ));
        out.push((format!("activity-r0-{r0}"), activity_model(r0).unwrap()));
    }
    // two groups with activities a = 2, b = 1 and half the population each
    out.push((
        "two-group".into(),
        proportionate_mixing(&[2.0, 1.0], &[0.5, 0.5], &[1.0, 1.0]).unwrap(),
    ));
    // an asymmetric kernel with unequal recovery rates
    let k = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 1.0, 3.0, 0.5, 0.2, 0.0, 1.5]);
    let space = hetsis_core::DiscreteSpace::new(
        vec!["x".into(), "y".into(), "z".into()],
        vec![0.2, 0.5, 0.3],
    )
    .unwrap();
    out.push((
        "asymmetric".into(),
        SisModel::new(space, vec![0.8, 1.5, 0.6], k).unwrap(),
    ));
    out
}
