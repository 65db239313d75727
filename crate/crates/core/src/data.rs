//! Scour observations: raw measurements, CSV ingestion, dimensionless
//! features, the train/test split and per-variable summaries.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Gravitational acceleration used in the Froude number, m/s².
pub const GRAVITY: f64 = 9.81;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("missing required column `{column}` for {scale} data")]
    MissingColumn { column: &'static str, scale: Scale },
    #[error("row {line}: {reason}")]
    Row { line: u64, reason: String },
    #[error("{0}")]
    Empty(String),
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    Ratio(f64),
    #[error("cannot detect scale: header has neither `Vc_mps` nor `L_m`")]
    UnknownScale,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Laboratory,
    Field,
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Laboratory => "laboratory",
            Scale::Field => "field",
        })
    }
}

impl std::str::FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lab" | "laboratory" => Ok(Scale::Laboratory),
            "field" => Ok(Scale::Field),
            other => Err(format!("unknown scale `{other}` (expected lab or field)")),
        }
    }
}

/// The one measurement that differs between laboratory and field records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleInput {
    /// Sediment critical velocity Vc, m/s.
    Laboratory { critical_velocity: f64 },
    /// Pier length L, m.
    Field { pier_length: f64 },
}

/// One observation in physical units (m, m/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawScourRecord {
    pub pier_width: f64,
    pub mean_velocity: f64,
    pub flow_depth: f64,
    pub median_grain_size: f64,
    pub sediment_gradation: f64,
    pub scour_depth: f64,
    pub scale_input: ScaleInput,
}

fn invalid(field: &'static str, reason: &str) -> DataError {
    DataError::Invalid {
        field,
        reason: format!("{field} {reason}"),
    }
}

fn check_positive(field: &'static str, v: f64) -> Result<(), DataError> {
    if !v.is_finite() {
        Err(invalid(field, "not finite"))
    } else if v <= 0.0 {
        Err(invalid(field, "must be positive"))
    } else {
        Ok(())
    }
}

impl RawScourRecord {
    pub fn scale(&self) -> Scale {
        match self.scale_input {
            ScaleInput::Laboratory { .. } => Scale::Laboratory,
            ScaleInput::Field { .. } => Scale::Field,
        }
    }

    pub fn critical_velocity(&self) -> Option<f64> {
        match self.scale_input {
            ScaleInput::Laboratory { critical_velocity } => Some(critical_velocity),
            ScaleInput::Field { .. } => None,
        }
    }

    pub fn pier_length(&self) -> Option<f64> {
        match self.scale_input {
            ScaleInput::Field { pier_length } => Some(pier_length),
            ScaleInput::Laboratory { .. } => None,
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        check_positive("pier_width", self.pier_width)?;
        check_positive("mean_velocity", self.mean_velocity)?;
        check_positive("flow_depth", self.flow_depth)?;
        check_positive("median_grain_size", self.median_grain_size)?;
        let sigma = self.sediment_gradation;
        if !sigma.is_finite() {
            return Err(invalid("sediment_gradation", "not finite"));
        }
        if sigma < 1.0 {
            return Err(invalid("sediment_gradation", "below 1"));
        }
        if !self.scour_depth.is_finite() {
            return Err(invalid("scour_depth", "not finite"));
        }
        if self.scour_depth < 0.0 {
            return Err(invalid("scour_depth", "negative"));
        }
        match self.scale_input {
            ScaleInput::Laboratory { critical_velocity } => {
                check_positive("critical_velocity", critical_velocity)
            }
            ScaleInput::Field { pier_length } => check_positive("pier_length", pier_length),
        }
    }

    pub fn froude(&self) -> f64 {
        self.mean_velocity / (GRAVITY * self.flow_depth).sqrt()
    }
}

/// Dimensionless form of an observation. `fifth_feature` is V/Vc for
/// laboratory records and L/y for field records.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimensionlessRecord {
    pub sigma: f64,
    pub froude: f64,
    pub d_over_y: f64,
    pub d50_over_y: f64,
    pub fifth_feature: f64,
    pub s_over_y: f64,
    pub scale: Scale,
}

pub fn derive_features(raw: &RawScourRecord) -> Result<DimensionlessRecord, DataError> {
    raw.validate()?;
    let y = raw.flow_depth;
    let fifth_feature = match raw.scale_input {
        ScaleInput::Laboratory { critical_velocity } => raw.mean_velocity / critical_velocity,
        ScaleInput::Field { pier_length } => pier_length / y,
    };
    Ok(DimensionlessRecord {
        sigma: raw.sediment_gradation,
        froude: raw.froude(),
        d_over_y: raw.pier_width / y,
        d50_over_y: raw.median_grain_size / y,
        fifth_feature,
        s_over_y: raw.scour_depth / y,
        scale: raw.scale(),
    })
}

/// A validated record with its position in the source file and its features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub id: usize,
    pub raw: RawScourRecord,
    pub features: DimensionlessRecord,
}

impl Observation {
    pub fn new(id: usize, raw: RawScourRecord) -> Result<Self, DataError> {
        Ok(Self {
            id,
            features: derive_features(&raw)?,
            raw,
        })
    }
}

pub fn observations(records: &[RawScourRecord]) -> Result<Vec<Observation>, DataError> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| Observation::new(i, *r))
        .collect()
}

pub const LAB_COLUMNS: [&str; 7] = ["D_m", "V_mps", "Vc_mps", "y_m", "d50_m", "sigma", "S_m"];
pub const FIELD_COLUMNS: [&str; 7] = ["D_m", "V_mps", "L_m", "y_m", "d50_m", "sigma", "S_m"];

fn columns(scale: Scale) -> &'static [&'static str; 7] {
    match scale {
        Scale::Laboratory => &LAB_COLUMNS,
        Scale::Field => &FIELD_COLUMNS,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowRejection {
    /// 1-based line number in the source file.
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadOutcome {
    pub records: Vec<RawScourRecord>,
    pub rejections: Vec<RowRejection>,
}

impl LoadOutcome {
    pub fn accepted(&self) -> usize {
        self.records.len()
    }

    pub fn rejected(&self) -> usize {
        self.rejections.len()
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

/// Reads the header and reports which scale's schema it matches.
pub fn detect_scale<R: Read>(input: R) -> Result<Scale, DataError> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers()?;
    if headers.iter().any(|h| h == "Vc_mps") {
        Ok(Scale::Laboratory)
    } else if headers.iter().any(|h| h == "L_m") {
        Ok(Scale::Field)
    } else {
        Err(DataError::UnknownScale)
    }
}

/// Parses CSV rows. Rows with unparsable cells or physically invalid values
/// are rejected with their line number; `strict` turns the first rejection
/// into an error instead.
pub fn read_csv<R: Read>(input: R, scale: Scale, strict: bool) -> Result<LoadOutcome, DataError> {
    let mut rdr = csv_reader(input);
    let headers = rdr.headers()?.clone();
    let mut index = [0usize; 7];
    for (slot, &col) in index.iter_mut().zip(columns(scale)) {
        *slot = headers
            .iter()
            .position(|h| h == col)
            .ok_or(DataError::MissingColumn { column: col, scale })?;
    }

    let mut outcome = LoadOutcome {
        records: Vec::new(),
        rejections: Vec::new(),
    };
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        match parse_row(&row, &index, scale) {
            Ok(rec) => outcome.records.push(rec),
            Err(reason) if strict => return Err(DataError::Row { line, reason }),
            Err(reason) => outcome.rejections.push(RowRejection { line, reason }),
        }
    }
    Ok(outcome)
}

fn parse_row(
    row: &csv::StringRecord,
    index: &[usize; 7],
    scale: Scale,
) -> Result<RawScourRecord, String> {
    let names = columns(scale);
    let mut v = [0.0f64; 7];
    for (k, slot) in v.iter_mut().enumerate() {
        let cell = row
            .get(index[k])
            .ok_or_else(|| format!("missing value for {}", names[k]))?;
        *slot = cell
            .parse::<f64>()
            .map_err(|_| format!("non-numeric value `{cell}` in {}", names[k]))?;
    }
    let scale_input = match scale {
        Scale::Laboratory => ScaleInput::Laboratory {
            critical_velocity: v[2],
        },
        Scale::Field => ScaleInput::Field { pier_length: v[2] },
    };
    let rec = RawScourRecord {
        pier_width: v[0],
        mean_velocity: v[1],
        flow_depth: v[3],
        median_grain_size: v[4],
        sediment_gradation: v[5],
        scour_depth: v[6],
        scale_input,
    };
    match rec.validate() {
        Ok(()) => Ok(rec),
        Err(DataError::Invalid { reason, .. }) => Err(reason),
        Err(e) => Err(e.to_string()),
    }
}

pub fn load_csv(
    path: impl AsRef<Path>,
    scale: Scale,
    strict: bool,
) -> Result<LoadOutcome, DataError> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), scale, strict)
}

/// Writes records in the schema of `scale`. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(
    out: W,
    scale: Scale,
    records: &[RawScourRecord],
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(columns(scale))?;
    for r in records {
        let fifth = match (scale, r.scale_input) {
            (Scale::Laboratory, ScaleInput::Laboratory { critical_velocity }) => critical_velocity,
            (Scale::Field, ScaleInput::Field { pier_length }) => pier_length,
            _ => {
                return Err(DataError::Invalid {
                    field: "scale",
                    reason: format!("record of scale {} in a {scale} file", r.scale()),
                })
            }
        };
        w.write_record(
            [
                r.pier_width,
                r.mean_velocity,
                fifth,
                r.flow_depth,
                r.median_grain_size,
                r.sediment_gradation,
                r.scour_depth,
            ]
            .iter()
            .map(|v| v.to_string()),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit<T> {
    pub training: Vec<T>,
    pub testing: Vec<T>,
    pub seed: u64,
    pub ratio: f64,
}

/// Number of training items for `n` items at `ratio` (round half away from zero).
pub fn training_size(n: usize, ratio: f64) -> usize {
    (ratio * n as f64).round() as usize
}

/// Shuffles with a ChaCha8 stream seeded by `seed` and puts the first
/// `round(ratio * n)` items into training.
pub fn split<T: Clone>(items: &[T], ratio: f64, seed: u64) -> Result<DatasetSplit<T>, DataError> {
    if items.len() < 2 {
        return Err(DataError::Empty(format!(
            "need at least 2 records to split, got {}",
            items.len()
        )));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Ratio(ratio));
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = training_size(items.len(), ratio);
    Ok(DatasetSplit {
        training: order[..k].iter().map(|&i| items[i].clone()).collect(),
        testing: order[k..].iter().map(|&i| items[i].clone()).collect(),
        seed,
        ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub variable: String,
    pub n: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation; 0 when `n == 1`.
    pub std: f64,
    pub std_defined: bool,
}

fn summarize_values(variable: &str, values: &[f64]) -> VariableSummary {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    VariableSummary {
        variable: variable.to_string(),
        n,
        min: values.iter().copied().fold(f64::INFINITY, f64::min),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean,
        std,
        std_defined: n > 1,
    }
}

/// Min, max, mean and sample standard deviation of every raw and
/// dimensionless variable. Records must share one scale.
pub fn summarize(records: &[RawScourRecord]) -> Result<Vec<VariableSummary>, DataError> {
    let first = records
        .first()
        .ok_or_else(|| DataError::Empty("cannot summarize an empty record set".into()))?;
    let scale = first.scale();
    if records.iter().any(|r| r.scale() != scale) {
        return Err(DataError::Invalid {
            field: "scale",
            reason: "records mix laboratory and field scales".into(),
        });
    }
    let feats: Vec<DimensionlessRecord> = records
        .iter()
        .map(derive_features)
        .collect::<Result<_, _>>()?;
    let col = |f: &dyn Fn(&RawScourRecord) -> f64| records.iter().map(f).collect::<Vec<_>>();
    let fcol = |f: &dyn Fn(&DimensionlessRecord) -> f64| feats.iter().map(f).collect::<Vec<_>>();
    let (fifth_raw, fifth_ratio) = match scale {
        Scale::Laboratory => ("Vc_mps", "V_over_Vc"),
        Scale::Field => ("L_m", "L_over_y"),
    };
    Ok(vec![
        summarize_values("D_m", &col(&|r| r.pier_width)),
        summarize_values("V_mps", &col(&|r| r.mean_velocity)),
        summarize_values(
            fifth_raw,
            &col(&|r| {
                r.critical_velocity()
                    .or(r.pier_length())
                    .unwrap_or(f64::NAN)
            }),
        ),
        summarize_values("y_m", &col(&|r| r.flow_depth)),
        summarize_values("d50_m", &col(&|r| r.median_grain_size)),
        summarize_values("S_m", &col(&|r| r.scour_depth)),
        summarize_values("sigma", &col(&|r| r.sediment_gradation)),
        summarize_values(fifth_ratio, &fcol(&|f| f.fifth_feature)),
        summarize_values("D_over_y", &fcol(&|f| f.d_over_y)),
        summarize_values("d50_over_y", &fcol(&|f| f.d50_over_y)),
        summarize_values("Fr", &fcol(&|f| f.froude)),
        summarize_values("S_over_y", &fcol(&|f| f.s_over_y)),
    ])
}
