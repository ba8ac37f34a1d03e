//! Part-level feature construction: layer aggregation, the three feature
//! families and Max-Min scaling.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{slice_part, BuildSetup, PartInstance, POSE_COUNT};
use crate::physics::{PhysicalConstants, PointEffects};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Effect {
    EnergyDensity,
    AbsPressure,
    VerticalPressure,
    HorizontalPressure,
}

impl Effect {
    pub const ALL: [Effect; 4] = [
        Effect::EnergyDensity,
        Effect::AbsPressure,
        Effect::VerticalPressure,
        Effect::HorizontalPressure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Effect::EnergyDensity => "energy_density",
            Effect::AbsPressure => "abs_pressure",
            Effect::VerticalPressure => "vertical_pressure",
            Effect::HorizontalPressure => "horizontal_pressure",
        }
    }

    fn pick<T: Real>(self, pe: &PointEffects<T>) -> T {
        match self {
            Effect::EnergyDensity => pe.power_intensity_w_mm2,
            Effect::AbsPressure => pe.radiation_pressure_pa,
            Effect::VerticalPressure => pe.vertical_pressure_pa,
            Effect::HorizontalPressure => pe.horizontal_pressure_pa,
        }
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Effect {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Effect::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown effect '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregator {
    Ave,
    Sdev,
    Min,
    Max,
}

impl Aggregator {
    pub const ALL: [Aggregator; 4] = [Aggregator::Ave, Aggregator::Sdev, Aggregator::Min, Aggregator::Max];

    pub fn name(self) -> &'static str {
        match self {
            Aggregator::Ave => "ave",
            Aggregator::Sdev => "sdev",
            Aggregator::Min => "min",
            Aggregator::Max => "max",
        }
    }

    /// Upper-case label used in region brackets, e.g. `AVE`.
    pub fn label(self) -> &'static str {
        match self {
            Aggregator::Ave => "AVE",
            Aggregator::Sdev => "SDEV",
            Aggregator::Min => "MIN",
            Aggregator::Max => "MAX",
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Aggregator::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidParameter(format!("unknown aggregator '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary<T> {
    pub ave: T,
    pub sdev: T,
    pub min10: T,
    pub max10: T,
}

impl<T: Real> LayerSummary<T> {
    pub fn get(&self, agg: Aggregator) -> T {
        match agg {
            Aggregator::Ave => self.ave,
            Aggregator::Sdev => self.sdev,
            Aggregator::Min => self.min10,
            Aggregator::Max => self.max10,
        }
    }
}

/// Mean, population standard deviation, and the means of the lowest and
/// highest `ceil(n/10)` values.
///
/// Statistics are taken over the sorted values, so the result does not
/// depend on input order.
pub fn aggregate_layers<T: Real>(layer_values: &[T]) -> Result<LayerSummary<T>> {
    if layer_values.is_empty() {
        return Err(Error::EmptyInput("layer values"));
    }
    if layer_values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidParameter("non-finite layer value".into()));
    }
    let mut sorted = layer_values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = sorted.len();
    if sorted[0] == sorted[n - 1] {
        let v = sorted[0];
        return Ok(LayerSummary { ave: v, sdev: T::zero(), min10: v, max10: v });
    }
    let nf = T::from_usize_lossy(n);
    let mean = sorted.iter().copied().sum::<T>() / nf;
    let var = sorted.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / nf;
    let k = n.div_ceil(10);
    let kf = T::from_usize_lossy(k);
    let min10 = sorted[..k].iter().copied().sum::<T>() / kf;
    let max10 = sorted[n - k..].iter().copied().sum::<T>() / kf;
    Ok(LayerSummary {
        ave: mean.max(min10).min(max10),
        sdev: var.sqrt(),
        min10,
        max10,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsProfile<T> {
    pub part_id: String,
    pub effect: Effect,
    pub layer_values: Vec<T>,
    pub summary: LayerSummary<T>,
}

/// Per-layer effects of one part, one profile per [`Effect`] in
/// [`Effect::ALL`] order.
pub fn part_profiles<T: Real>(
    setup: &BuildSetup<T>,
    part: &PartInstance<T>,
    constants: &PhysicalConstants<T>,
) -> Result<Vec<PhysicsProfile<T>>> {
    let laser = setup.laser_for(part);
    let layers = slice_part(part, setup.layers_per_part)?;
    let mut per_effect: Vec<Vec<T>> = vec![Vec::with_capacity(layers.len()); Effect::ALL.len()];
    for layer in &layers {
        let samples = setup.sample_layer(part, layer);
        let mut acc = [T::zero(); 4];
        for point in &samples {
            let theta = setup.incident_angle(laser, point)?;
            let pe = PointEffects::for_laser(laser, theta, constants)?;
            for (slot, effect) in acc.iter_mut().zip(Effect::ALL) {
                *slot += effect.pick(&pe);
            }
        }
        let m = T::from_usize_lossy(samples.len());
        for (values, total) in per_effect.iter_mut().zip(acc) {
            values.push(total / m);
        }
    }
    Effect::ALL
        .into_iter()
        .zip(per_effect)
        .map(|(effect, layer_values)| {
            Ok(PhysicsProfile {
                part_id: part.part_id.clone(),
                effect,
                summary: aggregate_layers(&layer_values)?,
                layer_values,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Setting,
    Physics,
    Combined,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Setting, ModelKind::Physics, ModelKind::Combined];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Setting => "setting",
            ModelKind::Physics => "physics",
            ModelKind::Combined => "combined",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown model kind '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector<T> {
    pub part_id: String,
    pub kind: ModelKind,
    pub values: Vec<T>,
    pub names: Vec<String>,
}

pub fn physics_feature_names() -> Vec<String> {
    Effect::ALL
        .iter()
        .flat_map(|e| Aggregator::ALL.iter().map(move |a| format!("{}_{}", e.name(), a.name())))
        .collect()
}

pub fn setting_feature_names() -> Vec<String> {
    let mut names = vec!["x_mm".to_string(), "y_mm".to_string()];
    names.extend((0..POSE_COUNT).map(|p| format!("pose_{p}")));
    names.extend(
        ["laser_id", "laser_distance_mm", "height_mm", "layers_per_part"]
            .iter()
            .map(|s| s.to_string()),
    );
    names
}

pub fn feature_names(kind: ModelKind) -> Vec<String> {
    match kind {
        ModelKind::Setting => setting_feature_names(),
        ModelKind::Physics => physics_feature_names(),
        ModelKind::Combined => {
            let mut n = setting_feature_names();
            n.extend(physics_feature_names());
            n
        }
    }
}

/// Builds the 16 physics features from already computed profiles.
pub fn physics_features_from_profiles<T: Real>(part_id: &str, profiles: &[PhysicsProfile<T>]) -> FeatureVector<T> {
    let values = Effect::ALL
        .iter()
        .flat_map(|&e| {
            let p = profiles.iter().find(|p| p.effect == e).expect("profile for every effect");
            Aggregator::ALL.iter().map(move |&a| p.summary.get(a))
        })
        .collect();
    FeatureVector {
        part_id: part_id.to_string(),
        kind: ModelKind::Physics,
        values,
        names: physics_feature_names(),
    }
}

pub fn physics_features<T: Real>(
    setup: &BuildSetup<T>,
    part: &PartInstance<T>,
    constants: &PhysicalConstants<T>,
) -> Result<FeatureVector<T>> {
    let profiles = part_profiles(setup, part, constants)?;
    Ok(physics_features_from_profiles(&part.part_id, &profiles))
}

pub fn setting_features<T: Real>(setup: &BuildSetup<T>, part: &PartInstance<T>) -> FeatureVector<T> {
    let laser = setup.laser_for(part);
    let mut values = vec![part.center.x, part.center.y];
    values.extend((0..POSE_COUNT).map(|p| if p == part.pose_id { T::one() } else { T::zero() }));
    values.push(T::from_usize_lossy(part.laser_id));
    values.push(laser.projection.distance(&part.center));
    values.push(part.height);
    values.push(T::from_usize_lossy(setup.layers_per_part));
    FeatureVector {
        part_id: part.part_id.clone(),
        kind: ModelKind::Setting,
        values,
        names: setting_feature_names(),
    }
}

/// Setting features followed by physics features.
pub fn combined_features<T: Real>(setting: &FeatureVector<T>, physics: &FeatureVector<T>) -> Result<FeatureVector<T>> {
    if setting.part_id != physics.part_id {
        return Err(Error::PartMismatch {
            left: setting.part_id.clone(),
            right: physics.part_id.clone(),
        });
    }
    let mut values = setting.values.clone();
    values.extend_from_slice(&physics.values);
    let mut names = setting.names.clone();
    names.extend(physics.names.iter().cloned());
    Ok(FeatureVector {
        part_id: setting.part_id.clone(),
        kind: ModelKind::Combined,
        values,
        names,
    })
}

/// Max-Min scaling state for the feature columns and the target.
///
/// Constant columns map to 0. Values outside the fitted range are not
/// clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer<T> {
    pub features: Vec<(T, T)>,
    pub target: (T, T),
}

fn min_max<T: Real>(values: impl Iterator<Item = T>) -> (T, T) {
    values.fold((T::infinity(), T::neg_infinity()), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn scale<T: Real>(v: T, (lo, hi): (T, T)) -> T {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        T::zero()
    }
}

fn unscale<T: Real>(z: T, (lo, hi): (T, T)) -> T {
    if hi > lo {
        lo + z * (hi - lo)
    } else {
        lo
    }
}

impl<T: Real> Normalizer<T> {
    pub fn fit(rows: &[Vec<T>], targets: &[T]) -> Result<Self> {
        if rows.is_empty() || targets.is_empty() {
            return Err(Error::EmptyInput("normalizer training rows"));
        }
        if rows.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: rows.len(), got: targets.len() });
        }
        let d = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, got: bad.len() });
        }
        let features = (0..d).map(|j| min_max(rows.iter().map(|r| r[j]))).collect();
        Ok(Self {
            features,
            target: min_max(targets.iter().copied()),
        })
    }

    pub fn fit_vectors(rows: &[FeatureVector<T>], targets: &[T]) -> Result<Self> {
        let raw: Vec<Vec<T>> = rows.iter().map(|r| r.values.clone()).collect();
        Self::fit(&raw, targets)
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    pub fn apply_row(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        Ok(row.iter().zip(&self.features).map(|(&v, &r)| scale(v, r)).collect())
    }

    pub fn invert_row(&self, row: &[T]) -> Result<Vec<T>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: row.len() });
        }
        Ok(row.iter().zip(&self.features).map(|(&z, &r)| unscale(z, r)).collect())
    }

    pub fn apply_target(&self, y: T) -> T {
        scale(y, self.target)
    }

    pub fn invert_target(&self, z: T) -> T {
        unscale(z, self.target)
    }
}

/// Max-Min scaling of a single column.
pub fn min_max_scale<T: Real>(values: &[T]) -> Result<(Vec<T>, (T, T))> {
    if values.is_empty() {
        return Err(Error::EmptyInput("values to scale"));
    }
    let range = min_max(values.iter().copied());
    Ok((values.iter().map(|&v| scale(v, range)).collect(), range))
}
