#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scour_core::data::{self, RawScourRecord, ScaleInput};
use scour_core::{derive_features, DimensionlessRecord, Scale};

pub fn scour() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_scour"));
    cmd.env_remove("SCOUR_SEED");
    cmd
}

pub fn run(args: &[&str], dir: &Path) -> Output {
    scour()
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

/// Random physical records whose scour depth is `truth(features) * y`.
pub fn records(
    scale: Scale,
    n: usize,
    seed: u64,
    truth: impl Fn(&DimensionlessRecord) -> f64,
) -> Vec<RawScourRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut raw = match scale {
                Scale::Laboratory => RawScourRecord {
                    pier_width: log_uniform(&mut rng, 0.02, 0.5),
                    mean_velocity: log_uniform(&mut rng, 0.15, 1.5),
                    flow_depth: log_uniform(&mut rng, 0.05, 1.0),
                    median_grain_size: log_uniform(&mut rng, 0.0002, 0.007),
                    sediment_gradation: rng.gen_range(1.1..5.5),
                    scour_depth: 0.0,
                    scale_input: ScaleInput::Laboratory {
                        critical_velocity: rng.gen_range(0.22..1.27),
                    },
                },
                Scale::Field => RawScourRecord {
                    pier_width: log_uniform(&mut rng, 0.3, 10.0),
                    mean_velocity: log_uniform(&mut rng, 0.1, 3.0),
                    flow_depth: log_uniform(&mut rng, 0.3, 15.0),
                    median_grain_size: log_uniform(&mut rng, 1e-5, 0.1),
                    sediment_gradation: rng.gen_range(1.2..10.0),
                    scour_depth: 0.0,
                    scale_input: ScaleInput::Field {
                        pier_length: log_uniform(&mut rng, 1.0, 38.0),
                    },
                },
            };
            let f = derive_features(&raw).expect("generated record is valid");
            raw.scour_depth = truth(&f) * raw.flow_depth;
            raw
        })
        .collect()
}

/// Power law over the full five-feature set of `scale`.
pub fn power_law(a: f64, k: [f64; 5]) -> impl Fn(&DimensionlessRecord) -> f64 {
    move |f| {
        a * f.sigma.powf(k[0])
            * f.froude.powf(k[1])
            * f.d_over_y.powf(k[2])
            * f.d50_over_y.powf(k[3])
            * f.fifth_feature.powf(k[4])
    }
}

pub fn write_dataset(path: &Path, scale: Scale, records: &[RawScourRecord]) {
    let file = std::fs::File::create(path).unwrap();
    data::write_csv(file, scale, records).unwrap();
}
