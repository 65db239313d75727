//! Multiplicative power-law models `S/y = a * prod(feature_i ^ k_i)`, the
//! built-in L1..L6 / F1..F6 feature sets, the RMSE fitting objective and the
//! model file format.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{DimensionlessRecord, Scale};
use crate::swarm::{self, OptimizationResult, SearchBounds, SwarmConfig, SwarmError};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model spec `{id}`: {reason}")]
    Spec { id: String, reason: String },
    #[error("unknown spec id `{id}`; valid ids: {valid}")]
    UnknownSpec { id: String, valid: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("record lacks feature {feature} required by model `{model}`")]
    MissingFeature { model: String, feature: FeatureId },
    #[error("feature {feature} must be positive, got {value}")]
    NonPositiveFeature { feature: FeatureId, value: f64 },
    #[error("training set is empty")]
    EmptyTraining,
    #[error("training feature {feature} is constant; its exponent cannot be identified")]
    ConstantFeature { feature: FeatureId },
    #[error("model file parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureId {
    #[serde(rename = "sigma")]
    Sigma,
    #[serde(rename = "Fr")]
    Froude,
    #[serde(rename = "D_over_y")]
    DOverY,
    #[serde(rename = "d50_over_y")]
    D50OverY,
    #[serde(rename = "V_over_Vc")]
    VOverVc,
    #[serde(rename = "L_over_y")]
    LOverY,
}

impl FeatureId {
    pub const ALL: [FeatureId; 6] = [
        FeatureId::Sigma,
        FeatureId::Froude,
        FeatureId::DOverY,
        FeatureId::D50OverY,
        FeatureId::VOverVc,
        FeatureId::LOverY,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureId::Sigma => "sigma",
            FeatureId::Froude => "Fr",
            FeatureId::DOverY => "D_over_y",
            FeatureId::D50OverY => "d50_over_y",
            FeatureId::VOverVc => "V_over_Vc",
            FeatureId::LOverY => "L_over_y",
        }
    }

    pub fn supports(self, scale: Scale) -> bool {
        match self {
            FeatureId::VOverVc => scale == Scale::Laboratory,
            FeatureId::LOverY => scale == Scale::Field,
            _ => true,
        }
    }

    /// The five features of the general form for `scale`, in coefficient order.
    pub fn full_set(scale: Scale) -> [FeatureId; 5] {
        let fifth = match scale {
            Scale::Laboratory => FeatureId::VOverVc,
            Scale::Field => FeatureId::LOverY,
        };
        [
            FeatureId::Sigma,
            FeatureId::Froude,
            FeatureId::DOverY,
            FeatureId::D50OverY,
            fifth,
        ]
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl DimensionlessRecord {
    /// Value of `id` for this record, `None` if the record's scale does not carry it.
    pub fn feature(&self, id: FeatureId) -> Option<f64> {
        match id {
            FeatureId::Sigma => Some(self.sigma),
            FeatureId::Froude => Some(self.froude),
            FeatureId::DOverY => Some(self.d_over_y),
            FeatureId::D50OverY => Some(self.d50_over_y),
            FeatureId::VOverVc => (self.scale == Scale::Laboratory).then_some(self.fifth_feature),
            FeatureId::LOverY => (self.scale == Scale::Field).then_some(self.fifth_feature),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub id: String,
    pub scale: Scale,
    pub features: Vec<FeatureId>,
}

use FeatureId::*;

const BUILTIN: [(&str, Scale, &[FeatureId]); 12] = [
    (
        "L1",
        Scale::Laboratory,
        &[Sigma, Froude, DOverY, D50OverY, VOverVc],
    ),
    (
        "L2",
        Scale::Laboratory,
        &[Froude, DOverY, D50OverY, VOverVc],
    ),
    ("L3", Scale::Laboratory, &[Sigma, DOverY, D50OverY, VOverVc]),
    ("L4", Scale::Laboratory, &[Sigma, Froude, D50OverY, VOverVc]),
    ("L5", Scale::Laboratory, &[Sigma, Froude, DOverY, VOverVc]),
    ("L6", Scale::Laboratory, &[Sigma, Froude, DOverY, D50OverY]),
    (
        "F1",
        Scale::Field,
        &[Sigma, Froude, DOverY, D50OverY, LOverY],
    ),
    ("F2", Scale::Field, &[Froude, DOverY, D50OverY, LOverY]),
    ("F3", Scale::Field, &[Sigma, Froude, DOverY, D50OverY]),
    ("F4", Scale::Field, &[Sigma, Froude, D50OverY, LOverY]),
    ("F5", Scale::Field, &[Sigma, Froude, DOverY, LOverY]),
    ("F6", Scale::Field, &[Sigma, DOverY, D50OverY, LOverY]),
];

impl ModelSpec {
    pub fn new(
        id: impl Into<String>,
        scale: Scale,
        features: Vec<FeatureId>,
    ) -> Result<Self, ModelError> {
        let spec = Self {
            id: id.into(),
            scale,
            features,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |reason: String| {
            Err(ModelError::Spec {
                id: self.id.clone(),
                reason,
            })
        };
        if self.features.is_empty() {
            return err("no active features".into());
        }
        for (i, f) in self.features.iter().enumerate() {
            if self.features[..i].contains(f) {
                return err(format!("feature {f} listed twice"));
            }
            if !f.supports(self.scale) {
                return err(format!(
                    "feature {f} is not available for {} data",
                    self.scale
                ));
            }
        }
        if let Some((_, scale, feats)) = BUILTIN.iter().find(|(id, ..)| *id == self.id) {
            if *scale != self.scale || *feats != self.features.as_slice() {
                return err("does not match the built-in definition of this id".into());
            }
        }
        Ok(())
    }

    pub fn builtin(id: &str) -> Result<Self, ModelError> {
        BUILTIN
            .iter()
            .find(|(name, ..)| *name == id)
            .map(|(name, scale, feats)| Self {
                id: name.to_string(),
                scale: *scale,
                features: feats.to_vec(),
            })
            .ok_or_else(|| ModelError::UnknownSpec {
                id: id.to_string(),
                valid: Self::builtin_ids().join(", "),
            })
    }

    pub fn builtin_ids() -> Vec<&'static str> {
        BUILTIN.iter().map(|(id, ..)| *id).collect()
    }

    /// L1..L6 or F1..F6.
    pub fn builtin_for(scale: Scale) -> Vec<Self> {
        BUILTIN
            .iter()
            .filter(|(_, s, _)| *s == scale)
            .map(|(id, ..)| Self::builtin(id).expect("listed id"))
            .collect()
    }

    /// The single feature of the general form this spec leaves out, if it
    /// leaves out exactly one.
    pub fn excluded_feature(&self) -> Option<FeatureId> {
        let missing: Vec<FeatureId> = FeatureId::full_set(self.scale)
            .into_iter()
            .filter(|f| !self.features.contains(f))
            .collect();
        (missing.len() == 1 && self.features.len() == 4).then(|| missing[0])
    }

    pub fn coefficient_count(&self) -> usize {
        self.features.len() + 1
    }
}

/// Search box for `[a, k_1, .., k_n]`. `a` stays strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    pub constant_lower: f64,
    pub constant_upper: f64,
    pub exponent_lower: f64,
    pub exponent_upper: f64,
}

impl Default for CoefficientBounds {
    fn default() -> Self {
        Self {
            constant_lower: 1e-6,
            constant_upper: 10.0,
            exponent_lower: -3.0,
            exponent_upper: 3.0,
        }
    }
}

impl CoefficientBounds {
    pub fn search_bounds(&self, spec: &ModelSpec) -> Result<SearchBounds, ModelError> {
        if self.constant_lower.is_nan() || self.constant_lower <= 0.0 {
            return Err(ModelError::Invalid(
                "lower bound of a must be positive".into(),
            ));
        }
        let n = spec.features.len();
        let mut lower = vec![self.exponent_lower; n + 1];
        let mut upper = vec![self.exponent_upper; n + 1];
        lower[0] = self.constant_lower;
        upper[0] = self.constant_upper;
        Ok(SearchBounds::new(lower, upper)?)
    }
}

/// Seed and objective value of the fit that produced a model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitProvenance {
    pub seed: u64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawModel {
    spec: ModelSpec,
    constant: f64,
    exponents: Vec<f64>,
    provenance: Option<FitProvenance>,
}

impl PowerLawModel {
    pub fn new(spec: ModelSpec, constant: f64, exponents: Vec<f64>) -> Result<Self, ModelError> {
        spec.validate()?;
        if !(constant.is_finite() && constant > 0.0) {
            return Err(ModelError::Invalid(format!(
                "constant a must be positive, got {constant}"
            )));
        }
        if exponents.len() != spec.features.len() {
            return Err(ModelError::Invalid(format!(
                "{} exponents for {} features",
                exponents.len(),
                spec.features.len()
            )));
        }
        if let Some(k) = exponents.iter().find(|k| !k.is_finite()) {
            return Err(ModelError::Invalid(format!("exponent {k} is not finite")));
        }
        Ok(Self {
            spec,
            constant,
            exponents,
            provenance: None,
        })
    }

    /// Builds a model from `[a, k_1, .., k_n]`.
    pub fn from_coefficients(spec: ModelSpec, coefficients: &[f64]) -> Result<Self, ModelError> {
        let (a, ks) = coefficients
            .split_first()
            .ok_or_else(|| ModelError::Invalid("empty coefficient vector".into()))?;
        Self::new(spec, *a, ks.to_vec())
    }

    pub fn with_provenance(mut self, provenance: FitProvenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn exponents(&self) -> &[f64] {
        &self.exponents
    }

    pub fn provenance(&self) -> Option<FitProvenance> {
        self.provenance
    }

    pub fn coefficients(&self) -> Vec<f64> {
        std::iter::once(self.constant)
            .chain(self.exponents.iter().copied())
            .collect()
    }

    /// Whether every active feature exists in records of `scale`.
    pub fn applicable_to(&self, scale: Scale) -> Result<(), ModelError> {
        match self.spec.features.iter().find(|f| !f.supports(scale)) {
            Some(f) => Err(ModelError::MissingFeature {
                model: self.spec.id.clone(),
                feature: *f,
            }),
            None => Ok(()),
        }
    }

    /// Predicted S/y. Evaluated as `a * exp(sum k_i ln x_i)`.
    pub fn predict(&self, record: &DimensionlessRecord) -> Result<f64, ModelError> {
        let mut log_sum = 0.0;
        for (f, k) in self.spec.features.iter().zip(&self.exponents) {
            let x = record
                .feature(*f)
                .ok_or_else(|| ModelError::MissingFeature {
                    model: self.spec.id.clone(),
                    feature: *f,
                })?;
            if x.is_nan() || x <= 0.0 {
                return Err(ModelError::NonPositiveFeature {
                    feature: *f,
                    value: x,
                });
            }
            log_sum += k * x.ln();
        }
        Ok(self.constant * log_sum.exp())
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            spec_id: self.spec.id.clone(),
            scale: self.spec.scale,
            features: self.spec.features.clone(),
            a: self.constant,
            exponents: self.exponents.clone(),
            fit_seed: self.provenance.map(|p| p.seed),
            fit_rmse: self.provenance.map(|p| p.rmse),
        }
    }

    pub fn from_file(file: ModelFile) -> Result<Self, ModelError> {
        let spec = ModelSpec::new(file.spec_id, file.scale, file.features)?;
        let model = Self::new(spec, file.a, file.exponents)?;
        match (file.fit_seed, file.fit_rmse) {
            (Some(seed), Some(rmse)) => Ok(model.with_provenance(FitProvenance { seed, rmse })),
            (None, None) => Ok(model),
            _ => Err(ModelError::Invalid(
                "fit_seed and fit_rmse must appear together".into(),
            )),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_file()).expect("model file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let file: ModelFile = serde_json::from_str(text).map_err(|e| ModelError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelError> {
        Ok(std::fs::write(path, self.to_json())?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// On-disk form of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub spec_id: String,
    pub scale: Scale,
    pub features: Vec<FeatureId>,
    pub a: f64,
    pub exponents: Vec<f64>,
    pub fit_seed: Option<u64>,
    pub fit_rmse: Option<f64>,
}

/// RMSE of predicted against measured S/y over a fixed training set, as a
/// function of `[a, k_1, .., k_n]`. Feature logarithms are cached once.
#[derive(Debug, Clone)]
pub struct RmseObjective {
    width: usize,
    log_features: Vec<f64>,
    targets: Vec<f64>,
    weights: Vec<f64>,
}

impl RmseObjective {
    pub fn evaluate(&self, coefficients: &[f64]) -> f64 {
        let (a, ks) = match coefficients.split_first() {
            Some(parts) if parts.1.len() == self.width => parts,
            _ => return f64::INFINITY,
        };
        let mut sse = 0.0;
        for ((row, t), w) in self
            .log_features
            .chunks_exact(self.width)
            .zip(&self.targets)
            .zip(&self.weights)
        {
            let log_sum: f64 = row.iter().zip(ks).map(|(lx, k)| k * lx).sum();
            let pred = a * log_sum.exp();
            if !pred.is_finite() {
                return f64::INFINITY;
            }
            let e = (pred - t) * w;
            sse += e * e;
        }
        let rmse = (sse / self.targets.len() as f64).sqrt();
        if rmse.is_finite() {
            rmse
        } else {
            f64::INFINITY
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// Objective on dimensionless S/y.
pub fn rmse_objective(
    spec: &ModelSpec,
    training: &[DimensionlessRecord],
) -> Result<RmseObjective, ModelError> {
    rmse_objective_weighted(spec, training, None)
}

/// Objective whose residuals are multiplied per record by `weights`; passing
/// each record's flow depth gives the RMSE of S in meters.
pub fn rmse_objective_weighted(
    spec: &ModelSpec,
    training: &[DimensionlessRecord],
    weights: Option<&[f64]>,
) -> Result<RmseObjective, ModelError> {
    spec.validate()?;
    if training.is_empty() {
        return Err(ModelError::EmptyTraining);
    }
    if let Some(w) = weights {
        if w.len() != training.len() {
            return Err(ModelError::Invalid(format!(
                "{} weights for {} records",
                w.len(),
                training.len()
            )));
        }
    }
    let width = spec.features.len();
    let mut log_features = Vec::with_capacity(width * training.len());
    for rec in training {
        for f in &spec.features {
            let x = rec.feature(*f).ok_or_else(|| ModelError::MissingFeature {
                model: spec.id.clone(),
                feature: *f,
            })?;
            if x.is_nan() || x <= 0.0 {
                return Err(ModelError::NonPositiveFeature {
                    feature: *f,
                    value: x,
                });
            }
            log_features.push(x.ln());
        }
    }
    Ok(RmseObjective {
        width,
        log_features,
        targets: training.iter().map(|r| r.s_over_y).collect(),
        weights: weights.map_or_else(|| vec![1.0; training.len()], <[f64]>::to_vec),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    pub model: PowerLawModel,
    pub optimization: OptimizationResult,
}

fn check_identifiable(
    spec: &ModelSpec,
    training: &[DimensionlessRecord],
) -> Result<(), ModelError> {
    for f in &spec.features {
        let mut values = training.iter().filter_map(|r| r.feature(*f));
        if let Some(first) = values.next() {
            if values.all(|v| v == first) {
                return Err(ModelError::ConstantFeature { feature: *f });
            }
        }
    }
    Ok(())
}

/// Fits `[a, exponents]` by swarm minimization of the dimensionless RMSE.
pub fn fit(
    spec: &ModelSpec,
    training: &[DimensionlessRecord],
    config: &SwarmConfig,
    bounds: &CoefficientBounds,
) -> Result<FitOutcome, ModelError> {
    fit_weighted(spec, training, None, config, bounds)
}

pub fn fit_weighted(
    spec: &ModelSpec,
    training: &[DimensionlessRecord],
    weights: Option<&[f64]>,
    config: &SwarmConfig,
    bounds: &CoefficientBounds,
) -> Result<FitOutcome, ModelError> {
    let objective = rmse_objective_weighted(spec, training, weights)?;
    check_identifiable(spec, training)?;
    let search = bounds.search_bounds(spec)?;
    let optimization = swarm::optimize(&|c: &[f64]| objective.evaluate(c), &search, config)?;
    let model = PowerLawModel::from_coefficients(spec.clone(), &optimization.best_position)?
        .with_provenance(FitProvenance {
            seed: config.seed,
            rmse: optimization.best_value,
        });
    Ok(FitOutcome {
        model,
        optimization,
    })
}
