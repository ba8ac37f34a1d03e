//! Physics-porosity maps and the effect ranges that suppress or encourage
//! large pores.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataio::{PorosityRecord, PorosityTarget};
use crate::error::{Error, Result};
use crate::features::{Aggregator, Effect};
use crate::PhysicsProfile;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub part_id: String,
    pub effect_norm: f64,
    pub effect_raw: f64,
    pub porosity_norm: f64,
    pub porosity_raw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectPorosityMap {
    pub effect: Effect,
    pub aggregator: Aggregator,
    pub target: PorosityTarget,
    pub points: Vec<MapPoint>,
    /// Raw `(min, max)` of the effect axis.
    pub real_range: (f64, f64),
    pub porosity_range: (f64, f64),
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
}

fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
    if hi > lo {
        (v - lo) / (hi - lo)
    } else {
        0.0
    }
}

impl EffectPorosityMap {
    /// Max-Min scales both axes of `(part_id, effect, porosity)` triples.
    pub fn from_values(
        effect: Effect,
        aggregator: Aggregator,
        target: PorosityTarget,
        values: &[(String, f64, f64)],
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("physics-porosity map"));
        }
        let real_range = range(values.iter().map(|v| v.1));
        if !(real_range.1 > real_range.0) {
            return Err(Error::DegenerateAxis(format!("{}/{}", effect.name(), aggregator.label())));
        }
        let porosity_range = range(values.iter().map(|v| v.2));
        let points = values
            .iter()
            .map(|(id, e, p)| MapPoint {
                part_id: id.clone(),
                effect_norm: scale(*e, real_range),
                effect_raw: *e,
                porosity_norm: scale(*p, porosity_range),
                porosity_raw: *p,
            })
            .collect();
        Ok(Self { effect, aggregator, target, points, real_range, porosity_range })
    }

    pub fn to_raw_effect(&self, norm: f64) -> f64 {
        self.real_range.0 + norm * (self.real_range.1 - self.real_range.0)
    }

    pub fn file_name(&self) -> String {
        format!("{}_{}_{}.csv", self.effect.name(), self.aggregator.name(), self.target.name())
    }
}

/// One map per call; `profiles[i]` and `porosity[i]` describe the same part.
pub fn build_map(
    profiles: &[Vec<PhysicsProfile>],
    porosity: &[PorosityRecord],
    effect: Effect,
    aggregator: Aggregator,
    target: PorosityTarget,
) -> Result<EffectPorosityMap> {
    if profiles.len() != porosity.len() {
        return Err(Error::DimensionMismatch { expected: profiles.len(), got: porosity.len() });
    }
    let values = profiles
        .iter()
        .zip(porosity)
        .map(|(ps, rec)| {
            let p = ps
                .iter()
                .find(|p| p.effect == effect)
                .ok_or_else(|| Error::InvalidParameter(format!("part {} lacks a {} profile", rec.part_id, effect)))?;
            if p.part_id != rec.part_id {
                return Err(Error::PartMismatch { left: p.part_id.clone(), right: rec.part_id.clone() });
            }
            Ok((rec.part_id.clone(), p.summary.get(aggregator), rec.get(target)))
        })
        .collect::<Result<Vec<_>>>()?;
    EffectPorosityMap::from_values(effect, aggregator, target, &values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub bins: usize,
    /// Fraction of a bin's non-outlier samples that must lie below `low_porosity`.
    pub suppress_fraction: f64,
    /// Fraction of a bin's samples that must lie above `high_porosity`.
    pub encourage_fraction: f64,
    pub min_support: usize,
    pub low_porosity: f64,
    pub high_porosity: f64,
    /// Normalized max-pore level above which a sample counts as an outlier.
    pub outlier_cut: f64,
}

impl Default for RegionParams {
    fn default() -> Self {
        Self {
            bins: 20,
            suppress_fraction: 0.8,
            encourage_fraction: 0.5,
            min_support: 5,
            low_porosity: 0.3,
            high_porosity: 0.3,
            outlier_cut: 0.3,
        }
    }
}

impl RegionParams {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidParameter(format!("need at least 2 bins, got {}", self.bins)));
        }
        for (name, v) in [("suppress_fraction", self.suppress_fraction), ("encourage_fraction", self.encourage_fraction)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    pub fn is_outlier(&self, target: PorosityTarget, porosity_norm: f64) -> bool {
        target == PorosityTarget::MaxD && porosity_norm > self.outlier_cut
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InfluenceKind {
    Suppressing,
    Encouraging,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceRegion {
    pub kind: InfluenceKind,
    pub lo: f64,
    pub hi: f64,
    pub support: usize,
    pub real_lo: f64,
    pub real_hi: f64,
}

impl InfluenceRegion {
    /// `AVE[0.58E5, 1.00E5]` style bracket of the raw interval.
    pub fn bracket(&self, aggregator: Aggregator) -> String {
        format!("{}{}", aggregator.label(), format_bracket(self.real_lo, self.real_hi))
    }
}

/// Formats `[lo, hi]` with a shared power-of-ten exponent and two-decimal
/// mantissas no larger than one.
pub fn format_bracket(lo: f64, hi: f64) -> String {
    let m = lo.abs().max(hi.abs());
    let exp = if m > 0.0 && m.is_finite() { m.log10().ceil() as i32 } else { 0 };
    let s = 10f64.powi(exp);
    format!("[{:.2}E{}, {:.2}E{}]", lo / s, exp, hi / s, exp)
}

#[derive(Default, Clone, Copy)]
struct Bin {
    count: usize,
    high: usize,
    inliers: usize,
    inlier_low: usize,
}

/// Bins the normalized effect axis and marks each bin suppressing or
/// encouraging; a bin meeting both tests is encouraging. Runs of adjacent
/// same-kind bins merge into one region.
pub fn detect_regions(map: &EffectPorosityMap, params: &RegionParams) -> Result<Vec<InfluenceRegion>> {
    params.validate()?;
    if map.points.is_empty() {
        return Err(Error::EmptyInput("physics-porosity map"));
    }
    let b = params.bins;
    let mut bins = vec![Bin::default(); b];
    for p in &map.points {
        let idx = ((p.effect_norm * b as f64).floor().max(0.0) as usize).min(b - 1);
        let bin = &mut bins[idx];
        bin.count += 1;
        if p.porosity_norm > params.high_porosity {
            bin.high += 1;
        }
        if !params.is_outlier(map.target, p.porosity_norm) {
            bin.inliers += 1;
            if p.porosity_norm < params.low_porosity {
                bin.inlier_low += 1;
            }
        }
    }
    let kinds: Vec<Option<(InfluenceKind, usize)>> = bins
        .iter()
        .map(|bin| {
            if bin.count < params.min_support {
                return None;
            }
            if bin.high as f64 >= params.encourage_fraction * bin.count as f64 {
                Some((InfluenceKind::Encouraging, bin.count))
            } else if bin.inliers >= params.min_support
                && bin.inlier_low as f64 >= params.suppress_fraction * bin.inliers as f64
            {
                Some((InfluenceKind::Suppressing, bin.inliers))
            } else {
                None
            }
        })
        .collect();

    let mut regions = Vec::new();
    let mut i = 0;
    while i < b {
        let Some((kind, _)) = kinds[i] else {
            i += 1;
            continue;
        };
        let start = i;
        let mut support = 0;
        while i < b && matches!(kinds[i], Some((k, _)) if k == kind) {
            support += kinds[i].map_or(0, |(_, s)| s);
            i += 1;
        }
        let lo = start as f64 / b as f64;
        let hi = i as f64 / b as f64;
        regions.push(InfluenceRegion {
            kind,
            lo,
            hi,
            support,
            real_lo: map.to_raw_effect(lo),
            real_hi: map.to_raw_effect(hi),
        });
    }
    Ok(regions)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub effect: Effect,
    pub aggregator: Aggregator,
    pub target: PorosityTarget,
    pub kind: InfluenceKind,
    pub lo_norm: f64,
    pub hi_norm: f64,
    pub lo_raw: f64,
    pub hi_raw: f64,
    pub support: usize,
    pub bracket: String,
}

/// Writes one CSV per map and `regions.json`. `regions[i]` belongs to
/// `maps[i]`.
pub fn export_maps(
    maps: &[EffectPorosityMap],
    regions: &[Vec<InfluenceRegion>],
    params: &RegionParams,
    dir: &Path,
) -> Result<Vec<PathBuf>> {
    if maps.len() != regions.len() {
        return Err(Error::DimensionMismatch { expected: maps.len(), got: regions.len() });
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(maps.len() + 1);
    for map in maps {
        let path = dir.join(map.file_name());
        let csv_err = |source| Error::Csv { path: path.clone(), source };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(["part_id", "effect_norm", "effect_raw", "porosity_norm", "porosity_raw", "outlier_flag"])
            .map_err(csv_err)?;
        for p in &map.points {
            let outlier = u8::from(params.is_outlier(map.target, p.porosity_norm));
            w.write_record([
                p.part_id.clone(),
                p.effect_norm.to_string(),
                p.effect_raw.to_string(),
                p.porosity_norm.to_string(),
                p.porosity_raw.to_string(),
                outlier.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    let records: Vec<RegionRecord> = maps
        .iter()
        .zip(regions)
        .flat_map(|(m, rs)| {
            rs.iter().map(move |r| RegionRecord {
                effect: m.effect,
                aggregator: m.aggregator,
                target: m.target,
                kind: r.kind,
                lo_norm: r.lo,
                hi_norm: r.hi,
                lo_raw: r.real_lo,
                hi_raw: r.real_hi,
                support: r.support,
                bracket: r.bracket(m.aggregator),
            })
        })
        .collect();
    let path = dir.join("regions.json");
    crate::dataio::write_json(&path, &records)?;
    written.push(path);
    Ok(written)
}

impl fmt::Display for InfluenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InfluenceKind::Suppressing => "suppressing",
            InfluenceKind::Encouraging => "encouraging",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn planted(n: usize) -> EffectPorosityMap {
        let mut pts = Vec::new();
        for i in 0..n {
            let e = 0.6 + 0.4 * (i as f64 + 0.5) / n as f64;
            pts.push(MapPoint { part_id: format!("s{i}"), effect_norm: e, effect_raw: e, porosity_norm: 0.1, porosity_raw: 0.1 });
            let e = 0.6 * (i as f64 + 0.5) / n as f64;
            pts.push(MapPoint { part_id: format!("e{i}"), effect_norm: e, effect_raw: e, porosity_norm: 0.6, porosity_raw: 0.6 });
        }
        EffectPorosityMap {
            effect: Effect::EnergyDensity,
            aggregator: Aggregator::Ave,
            target: PorosityTarget::MeanD,
            points: pts,
            real_range: (0.0, 1.0),
            porosity_range: (0.0, 1.0),
        }
    }

    #[test]
    fn planted_regions_recovered() {
        let r = detect_regions(&planted(200), &RegionParams::default()).unwrap();
        assert_eq!(r.len(), 2);
        assert_eq!((r[0].kind, r[0].lo, r[0].hi), (InfluenceKind::Encouraging, 0.0, 0.6));
        assert_eq!((r[1].kind, r[1].lo, r[1].hi), (InfluenceKind::Suppressing, 0.6, 1.0));
        assert_eq!(r[0].support + r[1].support, 400);
    }

    #[test]
    fn uniform_half_is_encouraging_only() {
        let mut m = planted(100);
        for p in &mut m.points {
            p.porosity_norm = 0.5;
        }
        let params = RegionParams { encourage_fraction: 0.9, ..RegionParams::default() };
        let r = detect_regions(&m, &params).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!((r[0].kind, r[0].lo, r[0].hi), (InfluenceKind::Encouraging, 0.0, 1.0));
    }

    #[test]
    fn outliers_only_matter_for_max_pores() {
        let mut m = planted(100);
        // a few very large pores in the otherwise low upper range
        for p in m.points.iter_mut().filter(|p| p.part_id.starts_with('s')).step_by(3) {
            p.porosity_norm = 0.9;
        }
        m.target = PorosityTarget::MeanD;
        let mean = detect_regions(&m, &RegionParams::default()).unwrap();
        assert!(mean.iter().all(|r| r.kind == InfluenceKind::Encouraging));
        m.target = PorosityTarget::MaxD;
        let max = detect_regions(&m, &RegionParams::default()).unwrap();
        assert!(max.iter().any(|r| r.kind == InfluenceKind::Suppressing && r.lo == 0.6 && r.hi == 1.0));
    }

    #[test]
    fn bracket_format() {
        assert_eq!(format_bracket(0.58e5, 1.00e5), "[0.58E5, 1.00E5]");
        assert_eq!(format_bracket(0.0, 0.0), "[0.00E0, 0.00E0]");
        let r = InfluenceRegion { kind: InfluenceKind::Suppressing, lo: 0.5, hi: 1.0, support: 9, real_lo: 58_000.0, real_hi: 100_000.0 };
        assert_eq!(r.bracket(Aggregator::Ave), "AVE[0.58E5, 1.00E5]");
    }

    #[test]
    fn map_endpoints_and_degenerate_axis() {
        let vals = vec![("a".to_string(), 3.0, 10.0), ("b".to_string(), 7.0, 20.0)];
        let m = EffectPorosityMap::from_values(Effect::AbsPressure, Aggregator::Max, PorosityTarget::MaxD, &vals).unwrap();
        assert_eq!(m.points.len(), 2);
        assert_eq!((m.points[0].effect_norm, m.points[1].effect_norm), (0.0, 1.0));
        assert_eq!(m.to_raw_effect(0.25), 4.0);
        let flat = vec![("a".to_string(), 3.0, 10.0), ("b".to_string(), 3.0, 20.0)];
        assert!(matches!(
            EffectPorosityMap::from_values(Effect::AbsPressure, Aggregator::Max, PorosityTarget::MaxD, &flat),
            Err(Error::DegenerateAxis(_))
        ));
        let bad = RegionParams { bins: 1, ..RegionParams::default() };
        assert!(detect_regions(&m, &bad).is_err());
    }

    proptest! {
        #[test]
        fn affine_rescaling_leaves_regions(
            raw in proptest::collection::vec((0.0f64..1.0, 0.0f64..1.0), 20..200),
            a in 0.01f64..1e4,
            b in -1e4f64..1e4,
        ) {
            let vals: Vec<(String, f64, f64)> = raw.iter().enumerate().map(|(i, &(e, p))| (format!("{i}"), e, p)).collect();
            prop_assume!(range(vals.iter().map(|v| v.1)).1 > range(vals.iter().map(|v| v.1)).0);
            // doubling is exact, so the normalized coordinates match bit for bit
            let shifted: Vec<(String, f64, f64)> = vals.iter().map(|(i, e, p)| (i.clone(), e * 2.0, *p)).collect();
            let m1 = EffectPorosityMap::from_values(Effect::EnergyDensity, Aggregator::Ave, PorosityTarget::MeanD, &vals).unwrap();
            let m2 = EffectPorosityMap::from_values(Effect::EnergyDensity, Aggregator::Ave, PorosityTarget::MeanD, &shifted).unwrap();
            let r1 = detect_regions(&m1, &RegionParams::default()).unwrap();
            let r2 = detect_regions(&m2, &RegionParams::default()).unwrap();
            let norm = |r: &[InfluenceRegion]| r.iter().map(|x| (x.kind, x.lo, x.hi, x.support)).collect::<Vec<_>>();
            prop_assert_eq!(norm(&r1), norm(&r2));

            let general: Vec<(String, f64, f64)> = vals.iter().map(|(i, e, p)| (i.clone(), a * e + b, *p)).collect();
            let m3 = EffectPorosityMap::from_values(Effect::EnergyDensity, Aggregator::Ave, PorosityTarget::MeanD, &general).unwrap();
            for (p1, p3) in m1.points.iter().zip(&m3.points) {
                prop_assert!((p1.effect_norm - p3.effect_norm).abs() < 1e-9);
            }
        }

        #[test]
        fn regions_disjoint_and_supported(
            raw in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..300),
            bins in 2usize..40,
        ) {
            let m = EffectPorosityMap {
                effect: Effect::EnergyDensity,
                aggregator: Aggregator::Sdev,
                target: PorosityTarget::MaxD,
                points: raw.iter().enumerate().map(|(i, &(e, p))| MapPoint {
                    part_id: i.to_string(), effect_norm: e, effect_raw: e, porosity_norm: p, porosity_raw: p,
                }).collect(),
                real_range: (0.0, 1.0),
                porosity_range: (0.0, 1.0),
            };
            let params = RegionParams { bins, ..RegionParams::default() };
            let r = detect_regions(&m, &params).unwrap();
            for w in r.windows(2) {
                prop_assert!(w[0].hi <= w[1].lo);
                if w[0].hi == w[1].lo {
                    prop_assert!(w[0].kind != w[1].kind);
                }
            }
            for x in &r {
                prop_assert!(0.0 <= x.lo && x.lo < x.hi && x.hi <= 1.0);
                prop_assert!(x.support >= params.min_support);
            }
        }
    }
}
