//! Locale-independent number formatting and small CSV helpers shared by
//! the report writers.

use std::io::Write;
use std::path::Path;

use crate::error::Result;

/// 17 significant digits, `.` decimal separator, exponent notation.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Write a CSV file with a header row. Cells are written verbatim.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Serde adapter for floats that may be non-finite: finite values stay JSON
/// numbers, the rest become the strings `"inf"`, `"-inf"`, `"nan"`.
pub mod lenient_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_str(&super::fmt17(*v))
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Str(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Str(s) => match s.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(serde::Serialize, serde::Deserialize, PartialEq, Debug)]
    struct Wrapped(#[serde(with = "lenient_f64")] f64);

    #[test]
    fn non_finite_values_survive_json() {
        for v in [1.5, f64::INFINITY, f64::NEG_INFINITY] {
            let json = serde_json::to_string(&Wrapped(v)).unwrap();
            assert_eq!(serde_json::from_str::<Wrapped>(&json).unwrap(), Wrapped(v));
        }
        assert_eq!(serde_json::to_string(&Wrapped(f64::INFINITY)).unwrap(), "\"inf\"");
        assert!(serde_json::from_str::<Wrapped>("\"nan\"").unwrap().0.is_nan());
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0] {
            let s = fmt17(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
            assert!(!s.contains(','));
        }
        assert_eq!(fmt17(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt17(f64::INFINITY), "inf");
    }
}
