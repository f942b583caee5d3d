//! Cost of the equilibrium and uniform strategies across population
//! structures, and the per-group vaccination fractions.

use hetsis_core::builders::{age_activity, age_structured, ActivityStructure, AgeContactData};
use hetsis_core::equilibrium::maximal_equilibrium;
use hetsis_core::strategies::{calibrate_to_r0, cost, equilibrium_strategy, uniform_critical};
use hetsis_core::{Profile, Result, SisModel};
use serde::Serialize;

use crate::catalog;

pub const TABLE1_R0: [f64; 3] = [2.0, 2.5, 3.0];
pub const TABLE2_R0: f64 = 2.0;

/// Rounds half-up to one decimal, independently of locale.
pub fn format_percent(value: f64) -> String {
    let tenths = (value * 10.0 + 0.5).floor();
    let s = format!("{:.1}", tenths / 10.0);
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CostCell {
    pub r0: f64,
    /// Percent of the population vaccinated by `eta = 1 - g`.
    pub equilibrium: f64,
    /// Percent vaccinated by the cheapest uniform strategy.
    pub uniform: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1Row {
    pub structure: String,
    pub cells: Vec<CostCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table1 {
    pub rows: Vec<Table1Row>,
    pub notices: Vec<String>,
}

impl Table1 {
    pub fn row(&self, structure: &str) -> Option<&Table1Row> {
        self.rows.iter().find(|r| r.structure == structure)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("structure,r0,c_equi,c_uni\n");
        for row in &self.rows {
            for c in &row.cells {
                out += &format!(
                    "{},{},{},{}\n",
                    row.structure,
                    c.r0,
                    format_percent(c.equilibrium),
                    format_percent(c.uniform)
                );
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<_> = self
            .rows
            .iter()
            .map(|row| {
                let cells: Vec<_> = row
                    .cells
                    .iter()
                    .map(|c| {
                        serde_json::json!({
                            "r0": c.r0,
                            "c_equi": format_percent(c.equilibrium),
                            "c_uni": format_percent(c.uniform),
                            "c_equi_raw": c.equilibrium,
                            "c_uni_raw": c.uniform,
                        })
                    })
                    .collect();
                serde_json::json!({ "structure": row.structure, "cells": cells })
            })
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({ "rows": rows, "notices": self.notices }))
            .expect("table serializes")
    }
}

fn cost_cell(model: &SisModel, r0: f64) -> Result<CostCell> {
    let m = calibrate_to_r0(model, r0)?;
    Ok(CostCell {
        r0,
        equilibrium: 100.0 * cost(&m, &equilibrium_strategy(&m)?)?,
        uniform: 100.0 * cost(&m, &uniform_critical(&m)?)?,
    })
}

fn row(structure: &str, model: &SisModel) -> Result<Table1Row> {
    let cells = TABLE1_R0
        .iter()
        .map(|&r0| cost_cell(model, r0))
        .collect::<Result<_>>()?;
    Ok(Table1Row {
        structure: structure.into(),
        cells,
    })
}

/// Homogeneous, Age, Activity and Age+Activity rows. The age rows need
/// contact data and are left out, with a notice, without it.
pub fn run_table1(contacts: Option<&AgeContactData>, reciprocity_fix: bool) -> Result<Table1> {
    let activity = ActivityStructure::default();
    let mut rows = vec![row("Homogeneous", &catalog::homogeneous_model(1.0)?)?];
    let mut notices = Vec::new();
    let activity_only = age_activity(&catalog::single_group(), &activity, 1.0, false)?;
    match contacts {
        Some(data) => {
            rows.push(row("Age", &age_structured(data, 1.0, reciprocity_fix)?)?);
            rows.push(row("Activity", &activity_only)?);
            rows.push(row(
                "Age+Activity",
                &age_activity(data, &activity, 1.0, reciprocity_fix)?,
            )?);
        }
        None => {
            rows.push(row("Activity", &activity_only)?);
            notices.push("Age and Age+Activity rows skipped: no contact data supplied".into());
        }
    }
    Ok(Table1 { rows, notices })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2 {
    pub groups: Vec<String>,
    pub levels: Vec<String>,
    /// `percent[group][level]` is `100 g` for that type.
    pub percent: Vec<Vec<f64>>,
    pub above_half: usize,
}

impl Table2 {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("group");
        for l in &self.levels {
            out += &format!(",{l}");
        }
        out.push('\n');
        for (g, row) in self.groups.iter().zip(&self.percent) {
            out += g;
            for v in row {
                out += &format!(",{}", format_percent(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rounded: Vec<Vec<String>> = self
            .percent
            .iter()
            .map(|r| r.iter().map(|v| format_percent(*v)).collect())
            .collect();
        serde_json::to_string_pretty(&serde_json::json!({
            "r0": TABLE2_R0,
            "groups": self.groups,
            "levels": self.levels,
            "percent": rounded,
            "percent_raw": self.percent,
            "above_half": self.above_half,
        }))
        .expect("table serializes")
    }
}

/// Vaccinated fraction `g` per (age group, activity level) at `R0 = 2`.
pub fn run_table2(contacts: &AgeContactData, reciprocity_fix: bool) -> Result<Table2> {
    let activity = ActivityStructure::default();
    let m = calibrate_to_r0(
        &age_activity(contacts, &activity, 1.0, reciprocity_fix)?,
        TABLE2_R0,
    )?;
    let g = maximal_equilibrium(&m, &Profile::ones(m.n()))?.g;
    let per_group = activity.levels().len();
    let percent: Vec<Vec<f64>> = g
        .values()
        .chunks(per_group)
        .map(|c| c.iter().map(|v| 100.0 * v).collect())
        .collect();
    let above_half = percent.iter().flatten().filter(|v| **v > 50.0).count();
    Ok(Table2 {
        groups: contacts.group_labels().to_vec(),
        levels: activity.levels().iter().map(|l| l.name.clone()).collect(),
        percent,
        above_half,
    })
}

/// Relative saving `(C_uni - C_equi) / C_uni` of the Age+Activity row at `R0 = 2`.
pub fn dose_reduction(table: &Table1) -> Option<f64> {
    let cell = table.row("Age+Activity")?.cells.first()?;
    Some((cell.uniform - cell.equilibrium) / cell.uniform)
}
