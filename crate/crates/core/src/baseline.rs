//! Published regression equations for pier scour, evaluated exactly as
//! printed so they can be compared against fitted models.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{derive_features, DataError, RawScourRecord, Scale, GRAVITY};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("{formula} needs {input}, which the record does not provide")]
    MissingInput {
        formula: BaselineId,
        input: &'static str,
    },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaselineId {
    LaursenToch1956,
    Shen1969,
    Hancu1971,
    Johnson1992,
    RichardsonDavis2001,
    HEC18,
    Azamathulla2009,
    Sharafi2016,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Input {
    Sigma,
    Froude,
    DOverY,
    D50OverY,
    LOverY,
    /// V, Vc and D in physical units.
    CriticalVelocity,
}

impl Input {
    fn name(self) -> &'static str {
        match self {
            Input::Sigma => "sigma",
            Input::Froude => "Fr",
            Input::DOverY => "D/y",
            Input::D50OverY => "d50/y",
            Input::LOverY => "L/y",
            Input::CriticalVelocity => "Vc",
        }
    }
}

impl BaselineId {
    pub const ALL: [BaselineId; 8] = [
        BaselineId::LaursenToch1956,
        BaselineId::Shen1969,
        BaselineId::Hancu1971,
        BaselineId::Johnson1992,
        BaselineId::RichardsonDavis2001,
        BaselineId::HEC18,
        BaselineId::Azamathulla2009,
        BaselineId::Sharafi2016,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineId::LaursenToch1956 => "LaursenToch1956",
            BaselineId::Shen1969 => "Shen1969",
            BaselineId::Hancu1971 => "Hancu1971",
            BaselineId::Johnson1992 => "Johnson1992",
            BaselineId::RichardsonDavis2001 => "RichardsonDavis2001",
            BaselineId::HEC18 => "HEC18",
            BaselineId::Azamathulla2009 => "Azamathulla2009",
            BaselineId::Sharafi2016 => "Sharafi2016",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|b| b.name().eq_ignore_ascii_case(s))
    }

    /// Kind of data each equation was originally calibrated on.
    pub fn calibration_scales(self) -> &'static [Scale] {
        match self {
            BaselineId::LaursenToch1956
            | BaselineId::Shen1969
            | BaselineId::Hancu1971
            | BaselineId::Johnson1992 => &[Scale::Laboratory],
            BaselineId::RichardsonDavis2001
            | BaselineId::Azamathulla2009
            | BaselineId::Sharafi2016 => &[Scale::Field],
            BaselineId::HEC18 => &[Scale::Laboratory, Scale::Field],
        }
    }

    pub fn lab_derived(self) -> bool {
        self.calibration_scales().contains(&Scale::Laboratory)
    }

    fn inputs(self) -> &'static [Input] {
        use Input::*;
        match self {
            BaselineId::LaursenToch1956 => &[DOverY],
            BaselineId::Shen1969 | BaselineId::RichardsonDavis2001 | BaselineId::HEC18 => {
                &[Froude, DOverY]
            }
            BaselineId::Hancu1971 => &[CriticalVelocity],
            BaselineId::Johnson1992 => &[Sigma, Froude, DOverY],
            BaselineId::Azamathulla2009 | BaselineId::Sharafi2016 => {
                &[Sigma, Froude, D50OverY, DOverY, LOverY]
            }
        }
    }

    /// First input the given scale cannot supply, if any.
    pub fn missing_input(self, scale: Scale) -> Option<&'static str> {
        self.inputs()
            .iter()
            .find(|i| {
                matches!(
                    (i, scale),
                    (Input::LOverY, Scale::Laboratory) | (Input::CriticalVelocity, Scale::Field)
                )
            })
            .map(|i| i.name())
    }

    pub fn applicable(self, scale: Scale) -> bool {
        self.missing_input(scale).is_none()
    }
}

impl fmt::Display for BaselineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct BaselineOptions {
    /// Use Vc²/(gD) inside Hancu's cube root instead of the printed Vc/(gD).
    pub hancu_squared: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselinePrediction {
    pub s_over_y: f64,
    /// Set when Hancu's `2V/Vc - 1` was not positive and the result was clamped to 0.
    pub clamped: bool,
}

/// Predicted S/y for one record. Hancu's S/D is converted with `(S/D)*(D/y)`.
pub fn evaluate_baseline(
    id: BaselineId,
    record: &RawScourRecord,
    options: BaselineOptions,
) -> Result<BaselinePrediction, BaselineError> {
    let f = derive_features(record)?;
    let l_over_y = || {
        record
            .pier_length()
            .map(|l| l / record.flow_depth)
            .ok_or(BaselineError::MissingInput {
                formula: id,
                input: "L/y",
            })
    };
    let plain = |s_over_y: f64| {
        Ok(BaselinePrediction {
            s_over_y,
            clamped: false,
        })
    };
    let (sg, fr, dy, dd) = (f.sigma, f.froude, f.d_over_y, f.d50_over_y);

    match id {
        BaselineId::LaursenToch1956 => plain(1.35 * dy.powf(0.7)),
        BaselineId::Shen1969 => plain(3.4 * fr.powf(0.67) * dy.powf(0.67)),
        BaselineId::Johnson1992 => plain(2.02 * sg.powf(-0.98) * fr.powf(0.21) * dy.powf(0.98)),
        BaselineId::RichardsonDavis2001 => plain(2.6 * fr.powf(0.65) * dy.powf(0.43)),
        BaselineId::HEC18 => plain(2.1 * fr.powf(0.43) * dy.powf(0.65)),
        BaselineId::Azamathulla2009 => plain(
            1.82 * sg.powf(-0.03159)
                * fr.powf(0.42)
                * dd.powf(0.042)
                * dy.powf(-0.28)
                * l_over_y()?.powf(-0.37),
        ),
        BaselineId::Sharafi2016 => plain(
            0.28 * sg.powf(0.13)
                * fr.powf(0.47)
                * dd.powf(-0.1)
                * dy.powf(0.44)
                * l_over_y()?.powf(0.23),
        ),
        BaselineId::Hancu1971 => {
            let vc = record
                .critical_velocity()
                .ok_or(BaselineError::MissingInput {
                    formula: id,
                    input: "Vc",
                })?;
            let d = record.pier_width;
            let intensity = 2.0 * record.mean_velocity / vc - 1.0;
            if intensity <= 0.0 {
                return Ok(BaselinePrediction {
                    s_over_y: 0.0,
                    clamped: true,
                });
            }
            let numerator = if options.hancu_squared { vc * vc } else { vc };
            let s_over_d = 2.42 * intensity * (numerator / (GRAVITY * d)).cbrt();
            plain(s_over_d * dy)
        }
    }
}

/// Predictions of every requested baseline for every record; `None` where
/// the record lacks an input the equation needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineSuite {
    pub ids: Vec<BaselineId>,
    /// `predictions[b][r]` for baseline `ids[b]` and record `r`.
    pub predictions: Vec<Vec<Option<BaselinePrediction>>>,
    pub skipped: Vec<usize>,
}

impl BaselineSuite {
    pub fn column(&self, id: BaselineId) -> Option<&[Option<BaselinePrediction>]> {
        self.ids
            .iter()
            .position(|b| *b == id)
            .map(|i| self.predictions[i].as_slice())
    }
}

pub fn run_baseline_suite(
    ids: &[BaselineId],
    records: &[RawScourRecord],
    options: BaselineOptions,
) -> Result<BaselineSuite, BaselineError> {
    if records.is_empty() {
        return Err(BaselineError::Data(DataError::Empty(
            "no records for baseline suite".into(),
        )));
    }
    let mut predictions = Vec::with_capacity(ids.len());
    let mut skipped = Vec::with_capacity(ids.len());
    for &id in ids {
        let mut column = Vec::with_capacity(records.len());
        let mut skips = 0;
        for r in records {
            match evaluate_baseline(id, r, options) {
                Ok(p) => column.push(Some(p)),
                Err(BaselineError::MissingInput { .. }) => {
                    skips += 1;
                    column.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        predictions.push(column);
        skipped.push(skips);
    }
    Ok(BaselineSuite {
        ids: ids.to_vec(),
        predictions,
        skipped,
    })
}
