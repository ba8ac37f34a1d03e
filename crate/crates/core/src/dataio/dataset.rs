//! Per-part feature rows joined with measured porosity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::{match_records, PorosityRecord};
use crate::error::Result;
use crate::features::{
    combined_features, feature_names, part_profiles, physics_features_from_profiles, setting_features, ModelKind,
};
use crate::{BuildSetup, PhysicalConstants, PhysicsProfile};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub part_id: String,
    pub setting: Vec<f64>,
    pub physics: Vec<f64>,
    pub combined: Vec<f64>,
    pub profiles: Vec<PhysicsProfile>,
    pub porosity: PorosityRecord,
}

impl Sample {
    pub fn features(&self, kind: ModelKind) -> &[f64] {
        match kind {
            ModelKind::Setting => &self.setting,
            ModelKind::Physics => &self.physics,
            ModelKind::Combined => &self.combined,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<Sample>,
}

impl Dataset {
    /// Computes all three feature families for every part of `setup`.
    /// Every part needs exactly one porosity record and vice versa.
    pub fn build(setup: &BuildSetup, porosity: &[PorosityRecord], constants: &PhysicalConstants) -> Result<Self> {
        let matched = match_records(&setup.parts, porosity)?;
        let samples = setup
            .parts
            .par_iter()
            .zip(matched)
            .map(|(part, porosity)| {
                let profiles = part_profiles(setup, part, constants)?;
                let physics = physics_features_from_profiles(&part.part_id, &profiles);
                let setting = setting_features(setup, part);
                let combined = combined_features(&setting, &physics)?;
                Ok(Sample {
                    part_id: part.part_id.clone(),
                    setting: setting.values,
                    physics: physics.values,
                    combined: combined.values,
                    profiles,
                    porosity,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { samples })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_names(kind: ModelKind) -> Vec<String> {
        feature_names(kind)
    }

    pub fn rows(&self, kind: ModelKind) -> Vec<Vec<f64>> {
        self.samples.iter().map(|s| s.features(kind).to_vec()).collect()
    }

    pub fn targets(&self, target: crate::dataio::PorosityTarget) -> Vec<f64> {
        self.samples.iter().map(|s| s.porosity.get(target)).collect()
    }

    pub fn porosity(&self) -> Vec<PorosityRecord> {
        self.samples.iter().map(|s| s.porosity.clone()).collect()
    }

    pub fn profiles(&self) -> Vec<Vec<PhysicsProfile>> {
        self.samples.iter().map(|s| s.profiles.clone()).collect()
    }
}
