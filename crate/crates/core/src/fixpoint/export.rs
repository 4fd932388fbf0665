//! CSV views of a run directory written by [`super::write_snapshots`].

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elliptic::PotentialSolution;
use crate::error::{Error, Result};
use crate::transport::{DensitySnapshot, Region};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportKind {
    Interface,
    Density,
    Potential,
    Residuals,
}

impl std::str::FromStr for ExportKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interface" => Ok(Self::Interface),
            "density" => Ok(Self::Density),
            "potential" => Ok(Self::Potential),
            "residuals" => Ok(Self::Residuals),
            _ => Err(Error::Config(format!(
                "unknown export '{s}', expected interface, density, potential or residuals"
            ))),
        }
    }
}

pub const DENSITY_HEADER: [&str; 5] = ["t", "x1", "x2", "n", "region"];
pub const POTENTIAL_HEADER: [&str; 6] = ["t", "x1", "x2", "phi", "dphi_dx1", "dphi_dx2"];
pub const RESIDUALS_HEADER: [&str; 5] = ["iteration", "sup_distance", "c1_distance", "holder_distance", "ratio"];

fn require(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    if p.is_file() {
        Ok(p)
    } else {
        Err(Error::Config(format!("{} is not a run directory: missing {name}", dir.display())))
    }
}

/// Snapshot files `prefix_t{k}.json` in level order.
fn levels(dir: &Path, prefix: &str) -> Result<Vec<PathBuf>> {
    require(dir, &format!("{prefix}_t0.json"))?;
    let mut out = Vec::new();
    while let Ok(p) = require(dir, &format!("{prefix}_t{}.json", out.len())) {
        out.push(p);
    }
    Ok(out)
}

fn region_tag(r: Region) -> &'static str {
    match r {
        Region::Initial => "initial",
        Region::Interface => "interface",
        Region::Exterior => "exterior",
    }
}

pub fn export_csv<W: Write>(run_dir: &Path, what: ExportKind, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match what {
        ExportKind::Interface => {
            let mut r = csv::Reader::from_path(require(run_dir, "interface.csv")?)?;
            w.write_record(r.headers()?)?;
            for rec in r.records() {
                w.write_record(&rec?)?;
            }
        }
        ExportKind::Density => {
            w.write_record(DENSITY_HEADER)?;
            for p in levels(run_dir, "density")? {
                let s: DensitySnapshot = serde_json::from_slice(&fs::read(p)?)?;
                for ((x, v), r) in s.nodes.iter().zip(&s.values).zip(&s.region_tags) {
                    w.write_record([
                        s.time.to_string(),
                        x[0].to_string(),
                        x[1].to_string(),
                        v.to_string(),
                        region_tag(*r).to_string(),
                    ])?;
                }
            }
        }
        ExportKind::Potential => {
            w.write_record(POTENTIAL_HEADER)?;
            for p in levels(run_dir, "phi")? {
                let s: PotentialSolution = serde_json::from_slice(&fs::read(p)?)?;
                let coords = s.field.grid.node_coords();
                for ((c, v), g) in coords.iter().zip(&s.field.values).zip(&s.gradient.values) {
                    w.write_record([s.time, c[0], c[1], *v, g[0], g[1]].map(|x| x.to_string()))?;
                }
            }
        }
        ExportKind::Residuals => {
            let report: serde_json::Value = serde_json::from_slice(&fs::read(require(run_dir, "report.json")?)?)?;
            let its = report["iterations"]
                .as_array()
                .ok_or_else(|| Error::Config("report.json has no iterations".into()))?;
            w.write_record(RESIDUALS_HEADER)?;
            for it in its {
                let rec: Vec<String> = RESIDUALS_HEADER
                    .iter()
                    .map(|k| match &it[*k] {
                        serde_json::Value::Null => String::new(),
                        v => v.to_string(),
                    })
                    .collect();
                w.write_record(rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
