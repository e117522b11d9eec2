//! Output records and number formatting shared by all subcommands.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn full_precision<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if !x.is_finite() {
        return s.serialize_none();
    }
    let raw = RawValue::from_string(fmt_f64(*x)).map_err(serde::ser::Error::custom)?;
    raw.serialize(s)
}

pub fn full_precision_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => full_precision(v, s),
        None => s.serialize_none(),
    }
}

/// One rounding run.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub algorithm: String,
    pub target_rank: Option<usize>,
    #[serde(serialize_with = "full_precision_opt")]
    pub tolerance: Option<f64>,
    #[serde(serialize_with = "full_precision")]
    pub relative_error: f64,
    pub ranks: Vec<usize>,
    #[serde(serialize_with = "full_precision")]
    pub seconds: f64,
    pub flops: u64,
    pub seed: u64,
}

impl BenchRecord {
    pub const CSV_HEADER: [&'static str; 8] = [
        "algorithm",
        "target_rank",
        "tolerance",
        "relative_error",
        "ranks",
        "seconds",
        "flops",
        "seed",
    ];

    /// CSV fields; ranks are joined with `;`.
    pub fn csv_fields(&self) -> Vec<String> {
        vec![
            self.algorithm.clone(),
            self.target_rank.map(|r| r.to_string()).unwrap_or_default(),
            self.tolerance.map(fmt_f64).unwrap_or_default(),
            fmt_f64(self.relative_error),
            self.ranks
                .iter()
                .map(|r| r.to_string())
                .collect::<Vec<_>>()
                .join(";"),
            fmt_f64(self.seconds),
            self.flops.to_string(),
            self.seed.to_string(),
        ]
    }
}
