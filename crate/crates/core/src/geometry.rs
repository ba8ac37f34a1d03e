//! Build plate, dual-laser layout, part placement and layer slicing.
//!
//! All lengths are millimetres. Heights are measured above the plate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of distinct part orientations on the plate.
pub const POSE_COUNT: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaserSpec<T> {
    /// Vertical projection of the laser gimbal onto the plate (mm).
    pub projection: Point2<T>,
    pub power_w: T,
    pub spot_area_mm2: T,
    pub wavelength_m: T,
    /// Closed x-interval (mm) of the plate this laser exposes.
    pub half: (T, T),
}

impl<T: Real> LaserSpec<T> {
    fn validate(&self, idx: usize) -> Result<()> {
        if !(self.power_w > T::zero()) || !(self.spot_area_mm2 > T::zero()) || !(self.wavelength_m > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "laser {idx}: power, spot area and wavelength must be positive"
            )));
        }
        if !(self.half.0 < self.half.1) {
            return Err(Error::InvalidConfig(format!("laser {idx}: empty half interval")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartInstance<T> {
    pub part_id: String,
    pub center: Point2<T>,
    pub pose_id: usize,
    pub diameter: T,
    pub height: T,
    /// Index into [`BuildSetup::lasers`]; filled in by [`BuildSetup::new`].
    pub laser_id: usize,
}

impl<T: Real> PartInstance<T> {
    pub fn new(part_id: impl Into<String>, x: T, y: T, pose_id: usize, diameter: T, height: T) -> Self {
        Self {
            part_id: part_id.into(),
            center: Point2::new(x, y),
            pose_id,
            diameter,
            height,
            laser_id: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.diameter > T::zero()) || !(self.height > T::zero()) {
            return Err(Error::InvalidConfig(format!(
                "part {}: diameter and height must be positive",
                self.part_id
            )));
        }
        if self.pose_id >= POSE_COUNT {
            return Err(Error::InvalidConfig(format!(
                "part {}: pose_id {} not in 0..{}",
                self.part_id, self.pose_id, POSE_COUNT
            )));
        }
        Ok(())
    }
}

/// A point on a part's layer; `h` is the height above the plate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerPoint<T> {
    pub part_id: String,
    pub layer_index: usize,
    pub x: T,
    pub y: T,
    pub h: T,
}

/// Where the physical effects of a layer are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LayerSampling {
    /// Layer center only.
    #[default]
    Center,
    /// Cell centers of a k x k grid over the footprint's bounding square,
    /// keeping those inside the circular footprint.
    Grid { k: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildSetup<T> {
    pub plate_width: T,
    pub plate_depth: T,
    pub gimbal_height: T,
    pub lasers: Vec<LaserSpec<T>>,
    pub parts: Vec<PartInstance<T>>,
    pub layers_per_part: usize,
    #[serde(default)]
    pub sampling: LayerSampling,
}

impl<T: Real> BuildSetup<T> {
    /// Validates the plate and laser layout, then registers `parts`
    /// (assigning each to a laser).
    pub fn new(
        plate_width: T,
        plate_depth: T,
        gimbal_height: T,
        lasers: Vec<LaserSpec<T>>,
        parts: Vec<PartInstance<T>>,
        layers_per_part: usize,
    ) -> Result<Self> {
        let mut setup = Self {
            plate_width,
            plate_depth,
            gimbal_height,
            lasers,
            parts: Vec::new(),
            layers_per_part,
            sampling: LayerSampling::Center,
        };
        setup.validate_layout()?;
        setup.set_parts(parts)?;
        Ok(setup)
    }

    /// Two lasers at the centers of the left and right plate halves.
    pub fn dual_laser(
        plate_width: T,
        plate_depth: T,
        gimbal_height: T,
        power_w: T,
        spot_area_mm2: T,
        wavelength_m: T,
        layers_per_part: usize,
    ) -> Result<Self> {
        let lasers = default_dual_lasers(plate_width, plate_depth, power_w, spot_area_mm2, wavelength_m);
        Self::new(plate_width, plate_depth, gimbal_height, lasers, Vec::new(), layers_per_part)
    }

    pub fn with_sampling(mut self, sampling: LayerSampling) -> Result<Self> {
        if let LayerSampling::Grid { k: 0 } = sampling {
            return Err(Error::ZeroCount("grid sampling k"));
        }
        self.sampling = sampling;
        Ok(self)
    }

    fn validate_layout(&self) -> Result<()> {
        if !(self.plate_width > T::zero()) || !(self.plate_depth > T::zero()) {
            return Err(Error::InvalidConfig("plate dimensions must be positive".into()));
        }
        if !(self.gimbal_height > T::zero()) {
            return Err(Error::InvalidConfig("gimbal height must be positive".into()));
        }
        if self.layers_per_part == 0 {
            return Err(Error::ZeroCount("layers_per_part"));
        }
        if self.lasers.is_empty() {
            return Err(Error::InvalidConfig("at least one laser required".into()));
        }
        for (i, laser) in self.lasers.iter().enumerate() {
            laser.validate(i)?;
        }
        // halves must tile [0, width] without gaps or overlaps
        let mut halves: Vec<(T, T)> = self.lasers.iter().map(|l| l.half).collect();
        halves.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite half bounds"));
        let tol = T::lit(1e-9) * self.plate_width;
        let mut cursor = T::zero();
        for (lo, hi) in halves {
            if (lo - cursor).abs() > tol {
                return Err(Error::InvalidConfig("laser halves do not partition the plate width".into()));
            }
            cursor = hi;
        }
        if (cursor - self.plate_width).abs() > tol {
            return Err(Error::InvalidConfig("laser halves do not partition the plate width".into()));
        }
        Ok(())
    }

    /// Replaces the part list, validating footprints and assigning lasers.
    pub fn set_parts(&mut self, parts: Vec<PartInstance<T>>) -> Result<()> {
        let two = T::lit(2.0);
        let mut registered = Vec::with_capacity(parts.len());
        for mut part in parts {
            part.validate()?;
            let r = part.diameter / two;
            let c = part.center;
            if c.x - r < T::zero() || c.x + r > self.plate_width || c.y - r < T::zero() || c.y + r > self.plate_depth {
                return Err(Error::InvalidConfig(format!(
                    "part {}: footprint leaves the plate",
                    part.part_id
                )));
            }
            part.laser_id = self.assign_laser(&part);
            registered.push(part);
        }
        self.parts = registered;
        Ok(())
    }

    /// Laser whose half contains the part center; a center exactly on a
    /// split belongs to the lower interval.
    pub fn assign_laser(&self, part: &PartInstance<T>) -> usize {
        let x = part.center.x;
        let mut order: Vec<usize> = (0..self.lasers.len()).collect();
        order.sort_by(|&a, &b| {
            self.lasers[a]
                .half
                .0
                .partial_cmp(&self.lasers[b].half.0)
                .expect("finite half bounds")
        });
        order
            .iter()
            .copied()
            .find(|&i| {
                let (lo, hi) = self.lasers[i].half;
                x >= lo && x <= hi
            })
            // out-of-plate centers are rejected before this; clamp to the ends
            .unwrap_or_else(|| if x < T::zero() { order[0] } else { order[order.len() - 1] })
    }

    pub fn laser_for(&self, part: &PartInstance<T>) -> &LaserSpec<T> {
        &self.lasers[part.laser_id]
    }

    /// Angle between the ray from the gimbal to `point` and the vertical.
    pub fn incident_angle(&self, laser: &LaserSpec<T>, point: &LayerPoint<T>) -> Result<T> {
        let vertical = self.gimbal_height - point.h;
        if !(vertical > T::zero()) {
            return Err(Error::LaserBelowBuild {
                gimbal_mm: self.gimbal_height.to_f64_lossy(),
                height_mm: point.h.to_f64_lossy(),
            });
        }
        let horizontal = laser.projection.distance(&Point2::new(point.x, point.y));
        Ok((horizontal / vertical).atan())
    }

    /// Points at which the effects of one layer are evaluated.
    pub fn sample_layer(&self, part: &PartInstance<T>, layer: &LayerPoint<T>) -> Vec<LayerPoint<T>> {
        match self.sampling {
            LayerSampling::Center => vec![layer.clone()],
            LayerSampling::Grid { k } => {
                let r = part.diameter / T::lit(2.0);
                let cell = part.diameter / T::from_usize_lossy(k);
                let mut pts = Vec::with_capacity(k * k);
                for iy in 0..k {
                    for ix in 0..k {
                        let dx = -r + cell * (T::from_usize_lossy(ix) + T::lit(0.5));
                        let dy = -r + cell * (T::from_usize_lossy(iy) + T::lit(0.5));
                        if dx.hypot(dy) <= r {
                            pts.push(LayerPoint {
                                part_id: layer.part_id.clone(),
                                layer_index: layer.layer_index,
                                x: layer.x + dx,
                                y: layer.y + dy,
                                h: layer.h,
                            });
                        }
                    }
                }
                if pts.is_empty() {
                    pts.push(layer.clone());
                }
                pts
            }
        }
    }
}

/// Lasers projected at `(width/4, depth/2)` and `(3 width/4, depth/2)`,
/// each exposing one half of the plate.
pub fn default_dual_lasers<T: Real>(
    plate_width: T,
    plate_depth: T,
    power_w: T,
    spot_area_mm2: T,
    wavelength_m: T,
) -> Vec<LaserSpec<T>> {
    let half = plate_width / T::lit(2.0);
    let y = plate_depth / T::lit(2.0);
    vec![
        LaserSpec {
            projection: Point2::new(plate_width / T::lit(4.0), y),
            power_w,
            spot_area_mm2,
            wavelength_m,
            half: (T::zero(), half),
        },
        LaserSpec {
            projection: Point2::new(plate_width * T::lit(0.75), y),
            power_w,
            spot_area_mm2,
            wavelength_m,
            half: (half, plate_width),
        },
    ]
}

/// Layer centers of a part sliced into `layers_per_part` equal horizontal slabs.
pub fn slice_part<T: Real>(part: &PartInstance<T>, layers_per_part: usize) -> Result<Vec<LayerPoint<T>>> {
    if layers_per_part == 0 {
        return Err(Error::ZeroCount("layers_per_part"));
    }
    let n = T::from_usize_lossy(layers_per_part);
    Ok((0..layers_per_part)
        .map(|j| LayerPoint {
            part_id: part.part_id.clone(),
            layer_index: j,
            x: part.center.x,
            y: part.center.y,
            h: (T::from_usize_lossy(j) + T::lit(0.5)) * part.height / n,
        })
        .collect())
}
