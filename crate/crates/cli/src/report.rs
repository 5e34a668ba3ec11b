//! Output formats: the time-series CSV and the summary JSON.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(&'static str),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => (*s).to_string(),
            Cell::Empty => String::new(),
        }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.into_inner().context("flushing csv")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Marginal,
}

impl Status {
    /// `Pass` if the strict check holds, `Marginal` if only the tolerant
    /// one does.
    pub fn grade(strict: bool, tolerant: bool) -> Self {
        if strict {
            Status::Pass
        } else if tolerant {
            Status::Marginal
        } else {
            Status::Fail
        }
    }

    pub fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    /// The relation being checked, in words.
    pub anchor: &'static str,
    pub status: Status,
    pub value: Option<f64>,
    pub limit: Option<f64>,
    pub detail: String,
}

impl Verdict {
    pub fn new(
        name: &'static str,
        anchor: &'static str,
        status: Status,
        value: Option<f64>,
        limit: Option<f64>,
    ) -> Self {
        Self {
            name,
            anchor,
            status,
            value,
            limit,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMeta {
    pub domain: &'static str,
    pub nr: usize,
    pub nz: usize,
    pub r_max: Option<f64>,
    pub hr: f64,
    pub hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionMeta {
    pub cap: f64,
    pub resolved_samples: usize,
    pub total_samples: usize,
    pub resolved_until: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: &'static str,
    pub version: &'static str,
    pub grid: Option<GridMeta>,
    pub parameters: BTreeMap<&'static str, f64>,
    pub metrics: BTreeMap<&'static str, Option<f64>>,
    pub t_star: Option<f64>,
    pub t_detect: Option<f64>,
    pub termination: Option<String>,
    pub steps: usize,
    pub resolution: Option<ResolutionMeta>,
    pub verdicts: Vec<Verdict>,
    pub all_pass: bool,
}

impl Summary {
    pub fn new(scenario: &'static str) -> Self {
        Self {
            scenario,
            version: env!("CARGO_PKG_VERSION"),
            grid: None,
            parameters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            t_star: None,
            t_detect: None,
            termination: None,
            steps: 0,
            resolution: None,
            verdicts: Vec::new(),
            all_pass: true,
        }
    }

    pub fn verdict(&mut self, v: Verdict) {
        self.all_pass &= v.status == Status::Pass;
        self.verdicts.push(v);
    }

    pub fn find(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut out = serde_json::to_vec_pretty(self)?;
        out.push(b'\n');
        Ok(out)
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    let mut f = std::fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(1.0), "1.0000000000000000e0");
        assert_eq!(format_f64(-2.5e-300), "-2.5000000000000000e-300");
        let back: f64 = format_f64(std::f64::consts::PI).parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn csv_uses_lf_and_empty_cells() {
        let mut t = Table::new(vec!["a", "b"]);
        t.push(vec![Cell::Num(1.0), Cell::Empty]);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "a,b\n1.0000000000000000e0,\n");
    }

    #[test]
    fn grading() {
        assert_eq!(Status::grade(true, true), Status::Pass);
        assert_eq!(Status::grade(false, true), Status::Marginal);
        assert_eq!(Status::grade(false, false), Status::Fail);
    }
}
