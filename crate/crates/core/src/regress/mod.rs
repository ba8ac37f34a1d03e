//! The six porosity regressors and their persisted form.

pub mod gpr;
pub mod kernel;
pub mod linalg;
pub mod linear;
pub mod svr;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Normalizer;
use crate::scalar::Real;
use gpr::{GprModel, GprSelection};
use kernel::KernelSpec;
use linear::LinearModel;
use svr::{SvrHyper, SvrModel};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    Linear,
    #[serde(rename = "GPR")]
    Gpr,
    #[serde(rename = "svrL")]
    SvrLinear,
    #[serde(rename = "svrG")]
    SvrGaussian,
    #[serde(rename = "svrRBF")]
    SvrRbf,
    #[serde(rename = "svrP")]
    SvrPoly,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Linear,
        Algorithm::Gpr,
        Algorithm::SvrLinear,
        Algorithm::SvrGaussian,
        Algorithm::SvrRbf,
        Algorithm::SvrPoly,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Linear => "Linear",
            Algorithm::Gpr => "GPR",
            Algorithm::SvrLinear => "svrL",
            Algorithm::SvrGaussian => "svrG",
            Algorithm::SvrRbf => "svrRBF",
            Algorithm::SvrPoly => "svrP",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm '{s}'")))
    }
}

/// Settings shared by the SVR variants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrSettings<T> {
    pub c: T,
    pub epsilon: T,
    pub rbf_sigma: T,
    pub poly_degree: u32,
    pub tolerance: T,
    pub max_iter: usize,
}

impl<T: Real> Default for SvrSettings<T> {
    fn default() -> Self {
        Self {
            c: T::lit(10.0),
            epsilon: T::lit(0.05),
            rbf_sigma: T::one(),
            poly_degree: 2,
            tolerance: T::lit(1e-3),
            max_iter: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters<T> {
    pub svr: SvrSettings<T>,
    pub gpr: GprSelection<T>,
}

impl<T: Real> Default for Hyperparameters<T> {
    fn default() -> Self {
        Self { svr: SvrSettings::default(), gpr: GprSelection::default() }
    }
}

impl<T: Real> Hyperparameters<T> {
    pub fn svr_hyper(&self, algorithm: Algorithm) -> Result<SvrHyper<T>> {
        let kernel = match algorithm {
            Algorithm::SvrLinear => KernelSpec::linear(),
            Algorithm::SvrGaussian => KernelSpec::gaussian(),
            Algorithm::SvrRbf => KernelSpec::rbf(self.svr.rbf_sigma)?,
            Algorithm::SvrPoly => KernelSpec::polynomial(self.svr.poly_degree)?,
            other => return Err(Error::InvalidParameter(format!("{other} is not an SVR variant"))),
        };
        Ok(SvrHyper::new(self.svr.c, self.svr.epsilon, kernel)?
            .with_tolerance(self.svr.tolerance)
            .with_max_iter(self.svr.max_iter))
    }
}

#[derive(Debug, Clone)]
pub enum Fitted<T> {
    Linear(LinearModel<T>),
    Gpr(GprModel<T>),
    Svr(SvrModel<T>),
}

/// A regressor fitted on Max-Min normalized features and targets.
#[derive(Debug, Clone)]
pub struct TrainedModel<T> {
    pub algorithm: Algorithm,
    pub hyperparameters: Hyperparameters<T>,
    pub normalization: Normalizer<T>,
    pub feature_names: Vec<String>,
    pub fitted: Fitted<T>,
}

impl<T: Real> TrainedModel<T> {
    /// Fits the normalizer on `x`/`y`, then the regressor on the scaled data.
    pub fn fit(algorithm: Algorithm, hyper: &Hyperparameters<T>, x: &[Vec<T>], y: &[T]) -> Result<Self> {
        let normalization = Normalizer::fit(x, y)?;
        let xs: Vec<Vec<T>> = x.iter().map(|r| normalization.apply_row(r)).collect::<Result<_>>()?;
        let ys: Vec<T> = y.iter().map(|&v| normalization.apply_target(v)).collect();
        let fitted = match algorithm {
            Algorithm::Linear => Fitted::Linear(LinearModel::fit(&xs, &ys)?),
            Algorithm::Gpr => Fitted::Gpr(GprModel::fit_selected(&xs, &ys, &hyper.gpr)?),
            svr => Fitted::Svr(SvrModel::fit(&xs, &ys, hyper.svr_hyper(svr)?)?),
        };
        Ok(Self {
            algorithm,
            hyperparameters: hyper.clone(),
            normalization,
            feature_names: Vec::new(),
            fitted,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Self {
        self.feature_names = names;
        self
    }

    /// Regressor output on the normalized scale.
    pub fn predict_normalized(&self, x: &[T]) -> Result<T> {
        let z = self.normalization.apply_row(x)?;
        match &self.fitted {
            Fitted::Linear(m) => m.predict(&z),
            Fitted::Gpr(m) => m.predict_mean(&z),
            Fitted::Svr(m) => m.predict(&z),
        }
    }

    /// Prediction in raw target units.
    pub fn predict(&self, x: &[T]) -> Result<T> {
        Ok(self.normalization.invert_target(self.predict_normalized(x)?))
    }

    pub fn to_document(&self) -> ModelDocument<T> {
        let parameters = match &self.fitted {
            Fitted::Linear(m) => ModelParameters::Linear(m.clone()),
            Fitted::Gpr(m) => ModelParameters::Gpr {
                hyper: m.hyper,
                train_x: m.train_x().to_vec(),
                train_y: m.train_y().to_vec(),
                recompute_factor: true,
            },
            Fitted::Svr(m) => ModelParameters::Svr(m.clone()),
        };
        ModelDocument {
            schema_version: SCHEMA_VERSION,
            algorithm: self.algorithm,
            hyperparameters: self.hyperparameters.clone(),
            normalization: self.normalization.clone(),
            feature_names: self.feature_names.clone(),
            parameters,
        }
    }

    pub fn from_document(doc: ModelDocument<T>) -> Result<Self> {
        if doc.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion(doc.schema_version));
        }
        let fitted = match doc.parameters {
            ModelParameters::Linear(m) => Fitted::Linear(m),
            // the factor is rebuilt from the same inputs, so predictions match bit for bit
            ModelParameters::Gpr { hyper, train_x, train_y, .. } => Fitted::Gpr(GprModel::fit(&train_x, &train_y, hyper)?),
            ModelParameters::Svr(m) => Fitted::Svr(m),
        };
        Ok(Self {
            algorithm: doc.algorithm,
            hyperparameters: doc.hyperparameters,
            normalization: doc.normalization,
            feature_names: doc.feature_names,
            fitted,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_document()).map_err(|source| Error::Json {
            path: "<model>".into(),
            source,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument<T> = serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<model>".into(),
            source,
        })?;
        Self::from_document(doc)
    }
}

/// On-disk model representation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument<T> {
    pub schema_version: u32,
    pub algorithm: Algorithm,
    pub hyperparameters: Hyperparameters<T>,
    pub normalization: Normalizer<T>,
    pub feature_names: Vec<String>,
    pub parameters: ModelParameters<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParameters<T> {
    Linear(LinearModel<T>),
    Gpr {
        hyper: gpr::GprHyper<T>,
        train_x: Vec<Vec<T>>,
        train_y: Vec<T>,
        recompute_factor: bool,
    },
    Svr(SvrModel<T>),
}
