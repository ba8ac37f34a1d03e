//! Seeded synthetic plates with porosity driven by the physics features.
//!
//! Each target is an affine function of the plate-normalized physics
//! features, stretched onto a configured band, then perturbed by
//! multiplicative Gaussian noise.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataio::{write_json, write_parts, write_porosity, PorosityRecord, PorosityTarget, SetupConfig};
use crate::error::{Error, Result};
use crate::evaluate::{Category, QualityGate};
use crate::features::{physics_feature_names, physics_features, Normalizer};
use crate::geometry::POSE_COUNT;
use crate::{BuildSetup, PartInstance, PhysicalConstants};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlateLayout {
    /// Row-major grid, poses cycling part by part.
    #[default]
    Grid,
    /// Grid whose rows are grouped into nine bands, one pose per band.
    PoseBands,
}

/// Linear map from normalized physics features to one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetTruth {
    pub weights: Vec<(String, f64)>,
    /// Output range `(lo, hi)` in µm that the plate is stretched onto.
    pub band: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub max_d: TargetTruth,
    pub mean_d: TargetTruth,
    pub median_d: TargetTruth,
    pub median_spacing: TargetTruth,
}

fn truth(weights: &[(&str, f64)], band: (f64, f64)) -> TargetTruth {
    TargetTruth { weights: weights.iter().map(|&(n, w)| (n.to_string(), w)).collect(), band }
}

impl Default for GroundTruth {
    fn default() -> Self {
        Self {
            max_d: truth(&[("energy_density_ave", -1.0), ("energy_density_sdev", 0.8)], (35.44, 341.71)),
            mean_d: truth(&[("energy_density_ave", -0.6), ("horizontal_pressure_ave", 0.4)], (16.17, 20.60)),
            median_d: truth(&[("energy_density_ave", -0.5), ("energy_density_sdev", 0.5)], (15.13, 19.90)),
            median_spacing: truth(&[("energy_density_ave", 0.7), ("horizontal_pressure_max", -0.3)], (54.87, 63.78)),
        }
    }
}

impl GroundTruth {
    pub fn get(&self, target: PorosityTarget) -> &TargetTruth {
        match target {
            PorosityTarget::MaxD => &self.max_d,
            PorosityTarget::MeanD => &self.mean_d,
            PorosityTarget::MedianD => &self.median_d,
            PorosityTarget::MedianSpacing => &self.median_spacing,
        }
    }
}

/// Relative noise per quality category of the noiseless maximum diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryNoise {
    pub pass: f64,
    pub flag: f64,
    pub fail: f64,
}

impl CategoryNoise {
    fn get(&self, c: Category) -> f64 {
        match c {
            Category::Pass => self.pass,
            Category::Flag => self.flag,
            _ => self.fail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_parts: usize,
    #[serde(default)]
    pub layout: PlateLayout,
    pub noise_sigma: f64,
    #[serde(default)]
    pub ground_truth: GroundTruth,
    pub seed: u64,
    pub part_diameter_mm: f64,
    pub part_height_mm: f64,
    pub min_gap_mm: f64,
    /// Gate applied to the noiseless maximum diameter for the category
    /// options below.
    #[serde(default)]
    pub gate: QualityGate,
    /// Overrides `noise_sigma` category by category.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_noise: Option<CategoryNoise>,
    /// Multiplies the mean, median and spacing targets of pass, flag and
    /// fail parts before noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category_scale: Option<[f64; 3]>,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_parts: 549,
            layout: PlateLayout::Grid,
            noise_sigma: 0.0,
            ground_truth: GroundTruth::default(),
            seed: 0,
            part_diameter_mm: 8.0,
            part_height_mm: 10.0,
            min_gap_mm: 1.0,
            gate: QualityGate::default(),
            category_noise: None,
            category_scale: None,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_parts == 0 {
            return Err(Error::ZeroCount("n_parts"));
        }
        let sigmas = [self.noise_sigma]
            .into_iter()
            .chain(self.category_noise.iter().flat_map(|c| [c.pass, c.flag, c.fail]));
        for s in sigmas {
            if !(s >= 0.0) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("noise sigma must be finite and >= 0, got {s}")));
            }
        }
        if let Some(bad) = self.category_scale.iter().flatten().find(|s| !(**s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(format!("category scale must be positive, got {bad}")));
        }
        if !(self.part_diameter_mm > 0.0) || !(self.part_height_mm > 0.0) || !(self.min_gap_mm >= 0.0) {
            return Err(Error::InvalidParameter("part size must be positive and gap nonnegative".into()));
        }
        let names = physics_feature_names();
        for t in PorosityTarget::ALL {
            let truth = self.ground_truth.get(t);
            if let Some((bad, _)) = truth.weights.iter().find(|(n, _)| !names.contains(n)) {
                return Err(Error::InvalidParameter(format!("{}: unknown physics feature '{bad}'", t.name())));
            }
            if !(truth.band.0 >= 0.0 && truth.band.0 <= truth.band.1) {
                return Err(Error::InvalidParameter(format!("{}: band must satisfy 0 <= lo <= hi", t.name())));
            }
        }
        Ok(())
    }
}

/// Places `spec.n_parts` parts in grid cells sized to the plate aspect.
pub fn layout_parts(spec: &SynthSpec, width: f64, depth: f64) -> Result<Vec<PartInstance>> {
    let n = spec.n_parts;
    let cols = ((n as f64 * width / depth).sqrt().ceil() as usize).clamp(1, n);
    let rows = n.div_ceil(cols);
    let pitch_x = width / cols as f64;
    let pitch_y = depth / rows as f64;
    let need = spec.part_diameter_mm + spec.min_gap_mm;
    if pitch_x < need || pitch_y < need {
        return Err(Error::LayoutOverflow(format!(
            "{n} parts as {cols}x{rows} cells of {pitch_x:.3}x{pitch_y:.3} mm need {need} mm pitch"
        )));
    }
    Ok((0..n)
        .map(|i| {
            let (r, c) = (i / cols, i % cols);
            let pose = match spec.layout {
                PlateLayout::Grid => i % POSE_COUNT,
                PlateLayout::PoseBands => (r * POSE_COUNT / rows).min(POSE_COUNT - 1),
            };
            PartInstance::new(
                format!("P{:04}", i + 1),
                pitch_x * (c as f64 + 0.5),
                pitch_y * (r as f64 + 0.5),
                pose,
                spec.part_diameter_mm,
                spec.part_height_mm,
            )
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub setup: BuildSetup,
    pub porosity: Vec<PorosityRecord>,
    /// Targets before noise.
    pub noiseless: Vec<PorosityRecord>,
}

/// Lays out parts on `base` (its existing parts are replaced) and draws
/// porosity for each.
pub fn generate_synthetic(spec: &SynthSpec, base: &BuildSetup) -> Result<SynthOutput> {
    spec.validate()?;
    let mut setup = base.clone();
    setup.set_parts(layout_parts(spec, base.plate_width, base.plate_depth)?)?;
    let constants = PhysicalConstants::default();
    let names = physics_feature_names();
    let rows: Vec<Vec<f64>> = setup
        .parts
        .iter()
        .map(|p| physics_features(&setup, p, &constants).map(|f| f.values))
        .collect::<Result<_>>()?;
    let norm = Normalizer::fit(&rows, &vec![0.0; rows.len()])?;
    let scaled: Vec<Vec<f64>> = rows.iter().map(|r| norm.apply_row(r)).collect::<Result<_>>()?;

    let mut clean: Vec<[f64; 4]> = vec![[0.0; 4]; scaled.len()];
    for (ti, target) in PorosityTarget::ALL.into_iter().enumerate() {
        let truth = spec.ground_truth.get(target);
        let idx: Vec<(usize, f64)> = truth
            .weights
            .iter()
            .map(|(n, w)| (names.iter().position(|m| m == n).expect("validated name"), *w))
            .collect();
        let z: Vec<f64> = scaled.iter().map(|r| idx.iter().map(|&(j, w)| w * r[j]).sum()).collect();
        let (zlo, zhi) = z.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let (lo, hi) = truth.band;
        for (dst, &v) in clean.iter_mut().zip(&z) {
            dst[ti] = if zhi > zlo { lo + (hi - lo) * (v - zlo) / (zhi - zlo) } else { 0.5 * (lo + hi) };
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut porosity = Vec::with_capacity(clean.len());
    let mut noiseless = Vec::with_capacity(clean.len());
    for (part, vals) in setup.parts.iter().zip(&clean) {
        let category = spec.gate.classify(vals[0])?;
        let sigma = spec.category_noise.map_or(spec.noise_sigma, |c| c.get(category));
        let mut vals = *vals;
        if let Some(scale) = spec.category_scale {
            let k = match category {
                Category::Pass => scale[0],
                Category::Flag => scale[1],
                _ => scale[2],
            };
            vals[1..].iter_mut().for_each(|v| *v *= k);
        }
        let mut noisy = [0.0; 4];
        for (dst, &v) in noisy.iter_mut().zip(&vals) {
            let eps: f64 = StandardNormal.sample(&mut rng);
            *dst = (v * (1.0 + sigma * eps)).max(0.0);
        }
        let record = |v: &[f64; 4]| PorosityRecord {
            part_id: part.part_id.clone(),
            max_d: v[0].max(v[1]),
            mean_d: v[1],
            median_d: v[2],
            median_spacing: v[3],
        };
        noiseless.push(record(&vals));
        porosity.push(record(&noisy));
    }
    Ok(SynthOutput { setup, porosity, noiseless })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: SynthSpec,
    pub seed: u64,
    pub files: Vec<FileDigest>,
}

pub fn sha256_file(path: &Path) -> Result<FileDigest> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        name: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

/// Writes `parts.csv`, `porosity.csv`, `setup.json` and `manifest.json`
/// into `dir`.
pub fn write_synthetic(dir: &Path, spec: &SynthSpec, config: &SetupConfig) -> Result<(SynthOutput, Manifest)> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let base = config.build(Vec::new())?;
    let out = generate_synthetic(spec, &base)?;
    let mut setup_cfg = config.clone();
    setup_cfg.parts_csv = "parts.csv".into();
    write_parts(dir.join("parts.csv"), &out.setup.parts)?;
    write_porosity(dir.join("porosity.csv"), &out.porosity)?;
    write_json(&dir.join("setup.json"), &setup_cfg)?;
    let files = ["parts.csv", "porosity.csv", "setup.json"]
        .iter()
        .map(|n| sha256_file(&dir.join(n)))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { spec: spec.clone(), seed: spec.seed, files };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok((out, manifest))
}
