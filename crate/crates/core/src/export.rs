//! Plain-text trajectory tables.
//!
//! Column 1 is the time in fs; the remaining columns are the requested
//! observables. Values are written with 17 significant digits so that a table
//! read back reproduces the `f64` values exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::algebra::Trajectory;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Observable {
    /// Every diagonal element.
    Populations,
    /// Every element as a Re/Im pair, column-major.
    Density,
    /// ρ_ij as a Re/Im pair, selected by basis label.
    Coherence(String, String),
}

impl FromStr for Observable {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "populations" => return Ok(Observable::Populations),
            "density" => return Ok(Observable::Density),
            _ => {}
        }
        if let Some(inner) = s.strip_prefix("coherence(").and_then(|r| r.strip_suffix(')')) {
            if let Some((a, b)) = inner.split_once(',') {
                let (a, b) = (a.trim(), b.trim());
                if !a.is_empty() && !b.is_empty() {
                    return Ok(Observable::Coherence(a.to_string(), b.to_string()));
                }
            }
        }
        Err(invalid(format!(
            "unknown observable {s:?} (expected populations, density or coherence(i,j))"
        )))
    }
}

impl std::fmt::Display for Observable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Observable::Populations => f.write_str("populations"),
            Observable::Density => f.write_str("density"),
            Observable::Coherence(a, b) => write!(f, "coherence({a},{b})"),
        }
    }
}

impl TryFrom<String> for Observable {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Observable> for String {
    fn from(o: Observable) -> String {
        o.to_string()
    }
}

fn label_index(labels: &[String], label: &str) -> Result<usize> {
    labels
        .iter()
        .position(|l| l == label)
        .ok_or_else(|| invalid(format!("no basis state labelled {label:?} (have {})", labels.join(", "))))
}

/// Column names and element selectors for a set of observables.
fn columns(labels: &[String], observables: &[Observable]) -> Result<Vec<(String, usize, usize, bool)>> {
    let d = labels.len();
    let mut out = Vec::new();
    for obs in observables {
        match obs {
            Observable::Populations => {
                for (i, l) in labels.iter().enumerate() {
                    out.push((format!("P_{l}"), i, i, false));
                }
            }
            Observable::Density => {
                for j in 0..d {
                    for i in 0..d {
                        out.push((format!("re_rho_{}_{}", labels[i], labels[j]), i, j, false));
                        out.push((format!("im_rho_{}_{}", labels[i], labels[j]), i, j, true));
                    }
                }
            }
            Observable::Coherence(a, b) => {
                let (i, j) = (label_index(labels, a)?, label_index(labels, b)?);
                out.push((format!("re_rho_{a}_{b}"), i, j, false));
                out.push((format!("im_rho_{a}_{b}"), i, j, true));
            }
        }
    }
    Ok(out)
}

/// Renders a trajectory as a table. `labels` name the basis states.
pub fn export_table(traj: &Trajectory, labels: &[String], observables: &[Observable]) -> Result<String> {
    if labels.len() != traj.dim() {
        return Err(invalid(format!("{} basis labels for a d = {} trajectory", labels.len(), traj.dim())));
    }
    if observables.is_empty() {
        return Err(invalid("at least one observable is required"));
    }
    let cols = columns(labels, observables)?;
    let mut out = String::new();
    writeln!(out, "# trajectory: {}", traj.label).unwrap();
    write!(out, "# time_fs").unwrap();
    for (name, ..) in &cols {
        write!(out, " {name}").unwrap();
    }
    out.push('\n');
    for (t, rho) in traj.times().zip(&traj.states) {
        write!(out, "{t:.16e}").unwrap();
        for &(_, i, j, imag) in &cols {
            let z = rho.matrix()[(i, j)];
            let v = if imag { z.im } else { z.re };
            write!(out, " {v:.16e}").unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_table(path: &Path, traj: &Trajectory, labels: &[String], observables: &[Observable]) -> Result<()> {
    let text = export_table(traj, labels, observables)?;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, text)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Table> {
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let header = header.trim();
                if header.starts_with("time_fs") {
                    columns = header.split_whitespace().map(str::to_string).collect();
                }
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| invalid(format!("line {}: {e}", lineno + 1)))?;
            if !columns.is_empty() && row.len() != columns.len() {
                return Err(invalid(format!("line {}: {} values for {} columns", lineno + 1, row.len(), columns.len())));
            }
            rows.push(row);
        }
        if columns.is_empty() {
            return Err(invalid("table has no '# time_fs ...' header"));
        }
        Ok(Table { columns, rows })
    }

    pub fn read(path: &Path) -> Result<Table> {
        Table::parse(&fs::read_to_string(path)?)
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub max_abs_diff: f64,
    /// Column and row of the largest difference.
    pub worst: Option<(String, usize)>,
}

impl Comparison {
    pub fn within(&self, tol: f64) -> bool {
        self.max_abs_diff <= tol
    }
}

/// Largest absolute difference between two tables of identical shape.
pub fn compare_tables(a: &Table, b: &Table) -> Result<Comparison> {
    if a.columns != b.columns {
        return Err(invalid(format!("column sets differ: [{}] vs [{}]", a.columns.join(" "), b.columns.join(" "))));
    }
    if a.rows.len() != b.rows.len() {
        return Err(invalid(format!("row counts differ: {} vs {}", a.rows.len(), b.rows.len())));
    }
    let mut cmp = Comparison { max_abs_diff: 0.0, worst: None };
    for (r, (ra, rb)) in a.rows.iter().zip(&b.rows).enumerate() {
        for (c, (x, y)) in ra.iter().zip(rb).enumerate() {
            let diff = (x - y).abs();
            if diff > cmp.max_abs_diff || diff.is_nan() {
                cmp.max_abs_diff = if diff.is_nan() { f64::INFINITY } else { diff };
                cmp.worst = Some((a.columns[c].clone(), r));
            }
        }
    }
    Ok(cmp)
}
