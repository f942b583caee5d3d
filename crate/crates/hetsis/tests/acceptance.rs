//! One line per acceptance criterion: PASS, FAIL or SKIPPED.
//!
//! Criterion 3 needs age contact data. Point `HETSIS_CONTACTS` at a contacts
//! CSV to run it (set `HETSIS_RECIPROCITY_FIX=1` to symmetrize).

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hetsis::catalog;
use hetsis::properties::{self, suite_rng, SuiteOutcome, DEFAULT_SEED};
use hetsis::tables::{dose_reduction, run_table1, run_table2, Table1};

enum Verdict {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn within_budget(ok: bool, detail: String, elapsed: Duration, budget: Duration) -> Verdict {
    let detail = format!(
        "{detail}; {:.3}s (budget {}s)",
        elapsed.as_secs_f64(),
        budget.as_secs()
    );
    if ok && elapsed < budget {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn suites(outcomes: &[SuiteOutcome]) -> (bool, String) {
    let ok = outcomes.iter().all(SuiteOutcome::passed);
    let detail = outcomes
        .iter()
        .map(SuiteOutcome::line)
        .collect::<Vec<_>>()
        .join(" | ");
    (ok, detail)
}

/// Compares a table row against expected percentages at R0 = 2, 2.5, 3.
fn row_errors(
    table: &Table1,
    structure: &str,
    equi: [f64; 3],
    uni: Option<[f64; 3]>,
) -> Result<f64, String> {
    let row = table
        .row(structure)
        .ok_or_else(|| format!("no {structure} row"))?;
    let mut worst = 0.0f64;
    for (i, cell) in row.cells.iter().enumerate() {
        worst = worst.max((cell.equilibrium - equi[i]).abs());
        if let Some(uni) = uni {
            worst = worst.max((cell.uniform - uni[i]).abs());
        }
    }
    Ok(worst)
}

const UNIFORM: [f64; 3] = [50.0, 60.0, 66.7];

fn criterion_1() -> Verdict {
    const TOL: f64 = 0.05;
    let (table, elapsed) = timed(|| run_table1(None, false));
    let table = match table {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    match row_errors(&table, "Homogeneous", UNIFORM, Some(UNIFORM)) {
        Ok(worst) => within_budget(
            worst <= TOL,
            format!("worst deviation {worst:.4} pp (tol {TOL})"),
            elapsed,
            Duration::from_secs(1),
        ),
        Err(e) => Verdict::Fail(e),
    }
}

fn criterion_2() -> Verdict {
    const TOL: f64 = 0.1;
    let (table, elapsed) = timed(|| run_table1(None, false));
    let table = match table {
        Ok(t) => t,
        Err(e) => return Verdict::Fail(e.to_string()),
    };
    match row_errors(&table, "Activity", [40.1, 50.0, 57.0], Some(UNIFORM)) {
        Ok(worst) => within_budget(
            worst <= TOL,
            format!("worst deviation {worst:.4} pp (tol {TOL})"),
            elapsed,
            Duration::from_secs(1),
        ),
        Err(e) => Verdict::Fail(e),
    }
}

const TABLE2: [[f64; 3]; 6] = [
    [12.0, 21.4, 35.3],
    [18.5, 31.2, 47.5],
    [22.9, 37.3, 54.3],
    [29.1, 45.1, 62.1],
    [20.9, 34.6, 51.4],
    [12.4, 22.1, 36.2],
];

fn criterion_3() -> Verdict {
    const TOL: f64 = 0.2;
    let Some(path) = std::env::var_os("HETSIS_CONTACTS") else {
        return Verdict::Skipped("age contact data not available (set HETSIS_CONTACTS)".into());
    };
    let fix = std::env::var("HETSIS_RECIPROCITY_FIX").is_ok_and(|v| v == "1");
    let data = match hetsis::io::read_contacts(std::path::Path::new(&path)) {
        Ok(d) => d,
        Err(e) => return Verdict::Fail(format!("{e:#}")),
    };
    let run = || -> Result<(bool, String), String> {
        let t1 = run_table1(Some(&data), fix).map_err(|e| e.to_string())?;
        let age = row_errors(&t1, "Age", [46.6, 56.7, 63.9], Some(UNIFORM))?;
        let both = row_errors(&t1, "Age+Activity", [35.7, 45.2, 52.2], Some(UNIFORM))?;
        let t2 = run_table2(&data, fix).map_err(|e| e.to_string())?;
        if t2.percent.len() != 6 || t2.percent.iter().any(|r| r.len() != 3) {
            return Err("table 2 is not 6x3".into());
        }
        let mut worst2 = 0.0f64;
        for (row, expected) in t2.percent.iter().zip(TABLE2) {
            for (v, e) in row.iter().zip(expected) {
                worst2 = worst2.max((v - e).abs());
            }
        }
        let reduction = 100.0 * dose_reduction(&t1).ok_or("no Age+Activity row")?;
        let ok = age <= TOL
            && both <= TOL
            && worst2 <= TOL
            && t2.above_half == 3
            && (reduction - 29.0).abs() <= 1.0;
        Ok((
            ok,
            format!(
                "age {age:.3} pp, age+activity {both:.3} pp, table 2 {worst2:.3} pp (tol {TOL}); {} entries above 50%; dose reduction {reduction:.2}%",
                t2.above_half
            ),
        ))
    };
    match run() {
        Ok((true, d)) => Verdict::Pass(d),
        Ok((false, d)) | Err(d) => Verdict::Fail(d),
    }
}

fn criterion_4() -> Verdict {
    let (out, elapsed) = timed(|| properties::criticality(&mut suite_rng(DEFAULT_SEED, 5), 200));
    let (ok, detail) = suites(&[out]);
    within_budget(ok, detail, elapsed, Duration::from_secs(30))
}

fn criterion_5() -> Verdict {
    let (out, elapsed) =
        timed(|| properties::maximality_equivalence(&mut suite_rng(DEFAULT_SEED, 6), 50));
    let (ok, detail) = suites(&[out]);
    within_budget(ok, detail, elapsed, Duration::from_secs(30))
}

fn criterion_6() -> Verdict {
    let (ok, detail) = suites(&[properties::route_agreement(&catalog::example_models())]);
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_7() -> Verdict {
    let (ok, detail) = suites(&[properties::two_group(&mut suite_rng(DEFAULT_SEED, 7), 100)]);
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_8() -> Verdict {
    let (ok, detail) = suites(&[
        properties::spectral_monotonicity(&mut suite_rng(DEFAULT_SEED, 1), 500, false),
        properties::product_commutation(&mut suite_rng(DEFAULT_SEED, 2), 500),
        properties::homogeneity(&mut suite_rng(DEFAULT_SEED, 3), 500),
        properties::sandwich(&mut suite_rng(DEFAULT_SEED, 4), 500),
    ]);
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn criterion_9() -> Verdict {
    let (ok, detail) = suites(&[properties::monotone_dynamics(
        &mut suite_rng(DEFAULT_SEED, 8),
        50,
    )]);
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Verdict);
    let criteria: [Criterion; 9] = [
        ("homogeneous cost rows", criterion_1),
        ("activity cost rows", criterion_2),
        ("age-structured rows and group fractions", criterion_3),
        ("criticality of the endemic strategy", criterion_4),
        ("equivalence of maximality conditions", criterion_5),
        ("fixed point vs ODE limit", criterion_6),
        ("two-group closed forms", criterion_7),
        ("spectral operator properties", criterion_8),
        ("monotone dynamics", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (tag, detail) = match run() {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Skipped(d) => ("SKIPPED", d),
        };
        println!("criterion {} [{tag}] {name}: {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
