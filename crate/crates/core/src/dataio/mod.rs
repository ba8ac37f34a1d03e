//! Parts, porosity and setup files, plus the synthetic data generator.

pub mod dataset;
pub mod synth;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{LaserSpec, LayerSampling, Point2};
use crate::physics::{default_spot_area_mm2, DEFAULT_POWER_W, DEFAULT_WAVELENGTH_M};
use crate::{BuildSetup, PartInstance};

pub const PARTS_COLUMNS: [&str; 6] = ["part_id", "x_mm", "y_mm", "pose_id", "diameter_mm", "height_mm"];
pub const POROSITY_COLUMNS: [&str; 5] = ["part_id", "max_d_um", "mean_d_um", "median_d_um", "median_spacing_um"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PorosityTarget {
    MaxD,
    MeanD,
    MedianD,
    MedianSpacing,
}

impl PorosityTarget {
    pub const ALL: [PorosityTarget; 4] = [
        PorosityTarget::MaxD,
        PorosityTarget::MeanD,
        PorosityTarget::MedianD,
        PorosityTarget::MedianSpacing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PorosityTarget::MaxD => "max_d",
            PorosityTarget::MeanD => "mean_d",
            PorosityTarget::MedianD => "median_d",
            PorosityTarget::MedianSpacing => "median_spacing",
        }
    }
}

impl fmt::Display for PorosityTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PorosityTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        PorosityTarget::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown porosity target '{s}'")))
    }
}

/// Part-level porosity statistics, all in µm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityRecord {
    pub part_id: String,
    pub max_d: f64,
    pub mean_d: f64,
    pub median_d: f64,
    pub median_spacing: f64,
}

impl PorosityRecord {
    pub fn get(&self, target: PorosityTarget) -> f64 {
        match target {
            PorosityTarget::MaxD => self.max_d,
            PorosityTarget::MeanD => self.mean_d,
            PorosityTarget::MedianD => self.median_d,
            PorosityTarget::MedianSpacing => self.median_spacing,
        }
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        for t in PorosityTarget::ALL {
            let v = self.get(t);
            if !(v >= 0.0) || !v.is_finite() {
                return Err(format!("{} must be finite and nonnegative, got {v}", t.name()));
            }
        }
        if self.max_d < self.mean_d {
            return Err(format!("max_d {} is below mean_d {}", self.max_d, self.mean_d));
        }
        Ok(())
    }
}

struct Table {
    path: PathBuf,
    columns: Vec<usize>,
    rows: Vec<(usize, csv::StringRecord)>,
}

impl Table {
    fn read(path: &Path, required: &[&str]) -> Result<Self> {
        let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(csv_err)?;
        let headers = reader.headers().map_err(csv_err)?.clone();
        let columns = required
            .iter()
            .map(|&name| {
                headers.iter().position(|h| h == name).ok_or_else(|| Error::MissingColumn {
                    path: path.to_path_buf(),
                    column: name.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(csv_err)?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            rows.push((line, record));
        }
        Ok(Self { path: path.to_path_buf(), columns, rows })
    }

    fn text<'a>(&self, record: &'a csv::StringRecord, col: usize) -> &'a str {
        record.get(self.columns[col]).unwrap_or("")
    }

    fn number<T: FromStr>(&self, row: usize, record: &csv::StringRecord, col: usize, name: &str) -> Result<T> {
        let raw = self.text(record, col);
        raw.parse::<T>().map_err(|_| Error::NonNumeric {
            path: self.path.clone(),
            row,
            column: name.to_string(),
            value: raw.to_string(),
        })
    }

    fn check_unique(&self, ids: &[(usize, String)]) -> Result<()> {
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (row, id) in ids {
            if let Some(&first) = seen.get(id.as_str()) {
                return Err(Error::DuplicatePart {
                    path: self.path.clone(),
                    id: id.clone(),
                    first,
                    second: *row,
                });
            }
            seen.insert(id, *row);
        }
        Ok(())
    }

    fn part_id(&self, row: usize, record: &csv::StringRecord) -> Result<String> {
        let id = self.text(record, 0);
        if id.is_empty() {
            return Err(Error::InvalidRow { path: self.path.clone(), row, message: "empty part_id".into() });
        }
        Ok(id.to_string())
    }
}

/// Reads `part_id,x_mm,y_mm,pose_id,diameter_mm,height_mm`. Row numbers in
/// errors are file line numbers (the header is line 1).
pub fn load_parts(path: impl AsRef<Path>) -> Result<Vec<PartInstance>> {
    let table = Table::read(path.as_ref(), &PARTS_COLUMNS)?;
    let mut parts = Vec::with_capacity(table.rows.len());
    let mut ids = Vec::with_capacity(table.rows.len());
    for (row, rec) in &table.rows {
        let row = *row;
        let id = table.part_id(row, rec)?;
        let part = PartInstance::new(
            id.clone(),
            table.number(row, rec, 1, PARTS_COLUMNS[1])?,
            table.number(row, rec, 2, PARTS_COLUMNS[2])?,
            table.number(row, rec, 3, PARTS_COLUMNS[3])?,
            table.number(row, rec, 4, PARTS_COLUMNS[4])?,
            table.number(row, rec, 5, PARTS_COLUMNS[5])?,
        );
        part.validate().map_err(|e| Error::InvalidRow { path: table.path.clone(), row, message: e.to_string() })?;
        ids.push((row, id));
        parts.push(part);
    }
    table.check_unique(&ids)?;
    Ok(parts)
}

pub fn load_porosity(path: impl AsRef<Path>) -> Result<Vec<PorosityRecord>> {
    let table = Table::read(path.as_ref(), &POROSITY_COLUMNS)?;
    let mut out = Vec::with_capacity(table.rows.len());
    let mut ids = Vec::with_capacity(table.rows.len());
    for (row, rec) in &table.rows {
        let row = *row;
        let id = table.part_id(row, rec)?;
        let record = PorosityRecord {
            part_id: id.clone(),
            max_d: table.number(row, rec, 1, POROSITY_COLUMNS[1])?,
            mean_d: table.number(row, rec, 2, POROSITY_COLUMNS[2])?,
            median_d: table.number(row, rec, 3, POROSITY_COLUMNS[3])?,
            median_spacing: table.number(row, rec, 4, POROSITY_COLUMNS[4])?,
        };
        record
            .validate()
            .map_err(|message| Error::InvalidRow { path: table.path.clone(), row, message })?;
        ids.push((row, id));
        out.push(record);
    }
    table.check_unique(&ids)?;
    Ok(out)
}

fn write_table(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let csv_err = |source| Error::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Floats are written with the shortest representation that parses back
/// to the same value.
pub fn write_parts(path: impl AsRef<Path>, parts: &[PartInstance]) -> Result<()> {
    write_table(
        path.as_ref(),
        &PARTS_COLUMNS,
        parts.iter().map(|p| {
            vec![
                p.part_id.clone(),
                p.center.x.to_string(),
                p.center.y.to_string(),
                p.pose_id.to_string(),
                p.diameter.to_string(),
                p.height.to_string(),
            ]
        }),
    )
}

pub fn write_porosity(path: impl AsRef<Path>, records: &[PorosityRecord]) -> Result<()> {
    write_table(
        path.as_ref(),
        &POROSITY_COLUMNS,
        records.iter().map(|r| {
            vec![
                r.part_id.clone(),
                r.max_d.to_string(),
                r.mean_d.to_string(),
                r.median_d.to_string(),
                r.median_spacing.to_string(),
            ]
        }),
    )
}

/// Pairs every part with its porosity record, in part order.
pub fn match_records(parts: &[PartInstance], porosity: &[PorosityRecord]) -> Result<Vec<PorosityRecord>> {
    let by_id: HashMap<&str, &PorosityRecord> = porosity.iter().map(|r| (r.part_id.as_str(), r)).collect();
    let part_ids: std::collections::HashSet<&str> = parts.iter().map(|p| p.part_id.as_str()).collect();
    if let Some(extra) = porosity.iter().find(|r| !part_ids.contains(r.part_id.as_str())) {
        return Err(Error::UnmatchedPart(extra.part_id.clone()));
    }
    parts
        .iter()
        .map(|p| {
            by_id
                .get(p.part_id.as_str())
                .map(|r| (*r).clone())
                .ok_or_else(|| Error::UnmatchedPart(p.part_id.clone()))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateConfig {
    pub width_mm: f64,
    pub depth_mm: f64,
}

fn default_power() -> f64 {
    DEFAULT_POWER_W
}

fn default_wavelength() -> f64 {
    DEFAULT_WAVELENGTH_M
}

fn default_spot() -> f64 {
    default_spot_area_mm2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserConfig {
    /// Gimbal projection; defaults to the middle of `half` at mid-depth.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_mm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_mm: Option<f64>,
    #[serde(default = "default_power")]
    pub power_w: f64,
    #[serde(default = "default_spot")]
    pub spot_area_mm2: f64,
    #[serde(default = "default_wavelength")]
    pub wavelength_m: f64,
    pub half: [f64; 2],
}

/// JSON build setup. `parts_csv` is resolved relative to the setup file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetupConfig {
    pub plate: PlateConfig,
    pub gimbal_height_mm: f64,
    pub lasers: Vec<LaserConfig>,
    pub layers_per_part: usize,
    pub parts_csv: String,
    #[serde(default)]
    pub sampling: LayerSampling,
}

impl SetupConfig {
    /// 247 x 482.6 mm plate, two 160 W lasers 450 mm above it, 40 layers.
    pub fn reference() -> Self {
        let laser = |half: [f64; 2]| LaserConfig {
            x_mm: None,
            y_mm: None,
            power_w: DEFAULT_POWER_W,
            spot_area_mm2: default_spot_area_mm2(),
            wavelength_m: DEFAULT_WAVELENGTH_M,
            half,
        };
        Self {
            plate: PlateConfig { width_mm: 247.0, depth_mm: 482.6 },
            gimbal_height_mm: 450.0,
            lasers: vec![laser([0.0, 123.5]), laser([123.5, 247.0])],
            layers_per_part: 40,
            parts_csv: "parts.csv".into(),
            sampling: LayerSampling::Center,
        }
    }

    pub fn lasers(&self) -> Vec<LaserSpec<f64>> {
        self.lasers
            .iter()
            .map(|l| LaserSpec {
                projection: Point2::new(
                    l.x_mm.unwrap_or(0.5 * (l.half[0] + l.half[1])),
                    l.y_mm.unwrap_or(0.5 * self.plate.depth_mm),
                ),
                power_w: l.power_w,
                spot_area_mm2: l.spot_area_mm2,
                wavelength_m: l.wavelength_m,
                half: (l.half[0], l.half[1]),
            })
            .collect()
    }

    pub fn build(&self, parts: Vec<PartInstance>) -> Result<BuildSetup> {
        BuildSetup::new(
            self.plate.width_mm,
            self.plate.depth_mm,
            self.gimbal_height_mm,
            self.lasers(),
            parts,
            self.layers_per_part,
        )?
        .with_sampling(self.sampling)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        read_json(path.as_ref())
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|source| Error::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a setup file together with the parts CSV it names.
pub fn load_setup(path: impl AsRef<Path>) -> Result<(SetupConfig, BuildSetup)> {
    let path = path.as_ref();
    let config = SetupConfig::read(path)?;
    let parts_path = path.parent().unwrap_or(Path::new(".")).join(&config.parts_csv);
    let parts = load_parts(&parts_path)?;
    let setup = config.build(parts)?;
    Ok((config, setup))
}
