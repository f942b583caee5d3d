//! Model JSON, contact-matrix CSV, and per-type / trajectory CSV formats.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context};
use hetsis_core::builders::AgeContactData;
use hetsis_core::dynamics::Trajectory;
use hetsis_core::stability::MaximalityReport;
use hetsis_core::{validate_model, ModelData, Profile, SisModel, Violation};
use nalgebra::DMatrix;
use serde::Serialize;

/// Normalizing the weights by more than this logs a warning.
pub const WEIGHT_CORRECTION_WARNING: f64 = 1e-9;

/// Parses a model document `{"labels", "mu", "gamma", "k"}`.
///
/// Weights are normalized by their sum; every other violation is returned
/// as an error.
pub fn parse_model(json: &str) -> anyhow::Result<SisModel> {
    let data: ModelData = serde_json::from_str(json).context("malformed model JSON")?;
    let problems: Vec<Violation> = validate_model(&data)
        .into_iter()
        .filter(|v| !matches!(v, Violation::WeightSum { .. }))
        .collect();
    if !problems.is_empty() {
        return Err(hetsis_core::Error::InvalidModel(problems).into());
    }
    let model = SisModel::from_data(data)?;
    let correction = model.space().normalization_correction();
    if correction > WEIGHT_CORRECTION_WARNING {
        log::warn!("weights renormalized: sum was off by {correction:e}");
    }
    Ok(model)
}

pub fn read_model(path: &Path) -> anyhow::Result<SisModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_model(&text).with_context(|| format!("loading model {}", path.display()))
}

pub fn model_to_json(model: &SisModel) -> String {
    serde_json::to_string_pretty(&model.to_data()).expect("model data serializes")
}

pub fn write_model(path: &Path, model: &SisModel) -> anyhow::Result<()> {
    fs::write(path, model_to_json(model) + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

/// Contact data: a header of group labels (the first cell is ignored), a
/// `fractions` row, then one matrix row per group, each led by its label.
pub fn parse_contacts<R: Read>(reader: R) -> anyhow::Result<AgeContactData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let rows: Vec<csv::StringRecord> = rdr.records().collect::<Result<_, _>>()?;
    let Some(header) = rows.first() else {
        bail!("contact file is empty");
    };
    let labels: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = labels.len();
    if n == 0 {
        bail!("contact header lists no groups");
    }
    if rows.len() != n + 2 {
        bail!(
            "expected {} rows (header, fractions, {n} matrix rows), found {}",
            n + 2,
            rows.len()
        );
    }
    let numbers = |row: &csv::StringRecord, line: usize| -> anyhow::Result<Vec<f64>> {
        if row.len() != n + 1 {
            bail!(
                "line {line}: expected {} fields, found {}",
                n + 1,
                row.len()
            );
        }
        row.iter()
            .skip(1)
            .map(|s| {
                s.parse::<f64>()
                    .with_context(|| format!("line {line}: bad number {s:?}"))
            })
            .collect()
    };
    if &rows[1][0] != "fractions" {
        bail!(
            "line 2 must start with \"fractions\", found {:?}",
            &rows[1][0]
        );
    }
    let fractions = numbers(&rows[1], 2)?;
    let mut values = Vec::with_capacity(n * n);
    for (i, row) in rows[2..].iter().enumerate() {
        if row[0] != labels[i] {
            bail!(
                "line {}: row label {:?} does not match column {:?}",
                i + 3,
                &row[0],
                labels[i]
            );
        }
        values.extend(numbers(row, i + 3)?);
    }
    let matrix = DMatrix::from_row_slice(n, n, &values);
    Ok(AgeContactData::new(labels, fractions, matrix)?)
}

pub fn read_contacts(path: &Path) -> anyhow::Result<AgeContactData> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_contacts(file).with_context(|| format!("loading contacts {}", path.display()))
}

pub fn write_contacts<W: Write>(out: W, data: &AgeContactData) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["group".to_string()];
    header.extend(data.group_labels().iter().cloned());
    w.write_record(&header)?;
    let mut row = vec!["fractions".to_string()];
    row.extend(data.group_fractions().iter().map(f64::to_string));
    w.write_record(&row)?;
    let c = data.contact_matrix();
    for (i, label) in data.group_labels().iter().enumerate() {
        let mut row = vec![label.clone()];
        row.extend((0..data.len()).map(|j| c[(i, j)].to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Header `t,label1,...,labeln`, one row per saved state.
pub fn write_trajectory<W: Write>(
    out: W,
    model: &SisModel,
    traj: &Trajectory,
) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend(model.space().labels().iter().cloned());
    w.write_record(&header)?;
    for (t, state) in traj.iter() {
        let mut row = vec![t.to_string()];
        row.extend(state.values().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-type rows `label,mu,gamma,g,eta_equi` with `eta_equi = 1 - g`.
pub fn write_equilibrium<W: Write>(out: W, model: &SisModel, g: &Profile) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "mu", "gamma", "g", "eta_equi"])?;
    let eta = g.complement();
    for i in 0..model.n() {
        w.write_record([
            model.space().labels()[i].clone(),
            model.weights()[i].to_string(),
            model.gamma()[i].to_string(),
            g.values()[i].to_string(),
            eta.values()[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads one named column of a per-type file, checking the labels against the model.
pub fn parse_profile_column<R: Read>(
    reader: R,
    model: &SisModel,
    column: &str,
) -> anyhow::Result<Profile> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let Some(col) = headers.iter().position(|h| h == column) else {
        bail!(
            "no {column:?} column in header {:?}",
            headers.iter().collect::<Vec<_>>()
        );
    };
    let label_col = headers.iter().position(|h| h == "label");
    let mut values = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        if let (Some(lc), Some(expected)) = (label_col, model.space().labels().get(i)) {
            if &record[lc] != expected {
                bail!(
                    "row {}: label {:?} does not match model type {expected:?}",
                    i + 1,
                    &record[lc]
                );
            }
        }
        let field = record.get(col).context("short row")?;
        values.push(
            field
                .parse::<f64>()
                .with_context(|| format!("row {}: bad number {field:?}", i + 1))?,
        );
    }
    if values.len() != model.n() {
        bail!(
            "file has {} rows, model has {} types",
            values.len(),
            model.n()
        );
    }
    Ok(Profile::new(values)?)
}

/// A strategy file uses the equilibrium schema; `eta_equi` holds the strategy.
pub fn read_strategy(path: &Path, model: &SisModel) -> anyhow::Result<Profile> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_profile_column(file, model, "eta_equi")
        .with_context(|| format!("loading strategy {}", path.display()))
}

/// Reads the `g` column of an equilibrium file.
pub fn read_equilibrium(path: &Path, model: &SisModel) -> anyhow::Result<Profile> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    parse_profile_column(file, model, "g")
        .with_context(|| format!("loading equilibrium {}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Condition {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
    pub holds: bool,
    pub critical: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalityJson {
    pub is_maximal: bool,
    pub consistent: bool,
    pub conditions: Vec<Condition>,
}

impl From<&MaximalityReport> for MaximalityJson {
    fn from(r: &MaximalityReport) -> Self {
        let rows = [
            (
                "distance_to_maximal",
                r.distance_to_maximal,
                hetsis_core::stability::MAXIMAL_DISTANCE,
            ),
            ("s_df_h", r.s_df_h, 0.0),
            ("re_1mh_sq", r.re_1mh_sq, 1.0),
            ("s_df_vacc_0", r.s_df_vacc_0, 0.0),
            ("re_1mh", r.re_1mh, 1.0),
        ];
        let conditions = rows
            .iter()
            .enumerate()
            .map(|(i, &(name, value, threshold))| Condition {
                name,
                value,
                threshold,
                holds: r.verdicts[i],
                critical: r.critical[i],
            })
            .collect();
        Self {
            is_maximal: r.is_maximal,
            consistent: r.consistent,
            conditions,
        }
    }
}

pub fn maximality_json(report: &MaximalityReport) -> String {
    serde_json::to_string_pretty(&MaximalityJson::from(report)).expect("report serializes")
}
