//! dB conversions and parsing of unit-suffixed quantities such as
//! `"46 dBm"`, `"1.8 GHz"` or `"[1, 0, 0] km"`.
//!
//! Everything is converted to SI linear units at parse time; nothing
//! downstream sees a decibel value.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UnitError {
    #[error("cannot parse {kind} quantity {input:?}: {reason}")]
    Parse {
        kind: &'static str,
        input: String,
        reason: String,
    },
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    linear_to_db(watts) + 30.0
}

/// Physical dimension of a parsed quantity, selecting the accepted suffixes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Power,
    Frequency,
    Length,
    Angle,
    Gain,
    Time,
}

impl Dimension {
    fn name(self) -> &'static str {
        match self {
            Dimension::Power => "power",
            Dimension::Frequency => "frequency",
            Dimension::Length => "length",
            Dimension::Angle => "angle",
            Dimension::Gain => "gain",
            Dimension::Time => "time",
        }
    }

    /// Suffix used when writing SI values back out.
    pub fn si_suffix(self) -> &'static str {
        match self {
            Dimension::Power => "W",
            Dimension::Frequency => "Hz",
            Dimension::Length => "m",
            Dimension::Angle => "rad",
            Dimension::Gain => "",
            Dimension::Time => "s",
        }
    }

    fn convert(self, value: f64, unit: &str) -> Option<f64> {
        let v = match (self, unit) {
            (Dimension::Power, "W") => value,
            (Dimension::Power, "mW") => value * 1e-3,
            (Dimension::Power, "dBm") => dbm_to_watts(value),
            (Dimension::Power, "dBW") => db_to_linear(value),
            (Dimension::Frequency, "Hz") => value,
            (Dimension::Frequency, "kHz") => value * 1e3,
            (Dimension::Frequency, "MHz") => value * 1e6,
            (Dimension::Frequency, "GHz") => value * 1e9,
            (Dimension::Length, "m") => value,
            (Dimension::Length, "km") => value * 1e3,
            (Dimension::Angle, "rad") => value,
            (Dimension::Angle, "deg") => value.to_radians(),
            (Dimension::Gain, "" | "lin") => value,
            (Dimension::Gain, "dB" | "dBi") => db_to_linear(value),
            (Dimension::Time, "s") => value,
            (Dimension::Time, "ms") => value * 1e-3,
            _ => return None,
        };
        Some(v)
    }
}

fn parse_error(dim: Dimension, input: &str, reason: impl Into<String>) -> UnitError {
    UnitError::Parse {
        kind: dim.name(),
        input: input.to_string(),
        reason: reason.into(),
    }
}

/// Splits `"12.5 GHz"` into number and suffix. The suffix may be empty
/// only for gains, which default to linear.
fn split_number(input: &str) -> (&str, &str) {
    let s = input.trim();
    match s.find(|c: char| c.is_whitespace()) {
        Some(i) => (s[..i].trim(), s[i..].trim()),
        None => {
            // allow "46dBm"
            let end = s
                .char_indices()
                .find(|&(i, c)| c.is_ascii_alphabetic() && !is_exponent(s, i))
                .map_or(s.len(), |(i, _)| i);
            (&s[..end], &s[end..])
        }
    }
}

fn is_exponent(s: &str, i: usize) -> bool {
    let b = s.as_bytes();
    matches!(b[i], b'e' | b'E') && i > 0 && b[i - 1].is_ascii_digit() && i + 1 < b.len() && {
        let n = b[i + 1];
        n.is_ascii_digit() || n == b'-' || n == b'+'
    }
}

/// Parses a scalar quantity into SI linear units.
pub fn parse_quantity(input: &str, dim: Dimension) -> Result<f64, UnitError> {
    let (number, unit) = split_number(input);
    let value: f64 = number
        .parse()
        .map_err(|_| parse_error(dim, input, format!("bad number {number:?}")))?;
    if !value.is_finite() {
        return Err(parse_error(dim, input, "value is not finite"));
    }
    dim.convert(value, unit)
        .ok_or_else(|| parse_error(dim, input, format!("unknown unit {unit:?}")))
}

/// Parses a bracketed vector with one trailing unit, e.g. `"[1, 0, 0] km"`.
pub fn parse_vector(input: &str, dim: Dimension) -> Result<Vec<f64>, UnitError> {
    let s = input.trim();
    let open = s.find('[').ok_or_else(|| parse_error(dim, input, "missing '['"))?;
    let close = s.rfind(']').ok_or_else(|| parse_error(dim, input, "missing ']'"))?;
    if open != 0 || close < open {
        return Err(parse_error(dim, input, "expected \"[a, b, ...] unit\""));
    }
    let unit = s[close + 1..].trim();
    s[open + 1..close]
        .split(',')
        .map(|part| {
            let part = part.trim();
            let value: f64 = part
                .parse()
                .map_err(|_| parse_error(dim, input, format!("bad component {part:?}")))?;
            if !value.is_finite() {
                return Err(parse_error(dim, input, "component is not finite"));
            }
            dim.convert(value, unit)
                .ok_or_else(|| parse_error(dim, input, format!("unknown unit {unit:?}")))
        })
        .collect()
}

/// Formats an SI value so that [`parse_quantity`] reads back the identical `f64`.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    match dim.si_suffix() {
        "" => format!("{value:?}"),
        suffix => format!("{value:?} {suffix}"),
    }
}

pub fn format_vector(values: &[f64], dim: Dimension) -> String {
    let inner: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
    format!("[{}] {}", inner.join(", "), dim.si_suffix())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn decibel_anchors() {
        assert_relative_eq!(dbm_to_watts(46.0), 39.810_717_055_349_73, max_relative = 1e-14);
        assert_relative_eq!(dbm_to_watts(30.0), 1.0, max_relative = 1e-15);
        assert_relative_eq!(db_to_linear(18.0), 63.095_734_448_019_32, max_relative = 1e-14);
        assert_relative_eq!(db_to_linear(-2.0), 0.630_957_344_480_193_2, max_relative = 1e-14);
    }

    #[test]
    fn parses_scalars() {
        assert_relative_eq!(parse_quantity("46 dBm", Dimension::Power).unwrap(), 39.810_717_055_349_73, max_relative = 1e-14);
        assert_eq!(parse_quantity("1.8 GHz", Dimension::Frequency).unwrap(), 1.8e9);
        assert_eq!(parse_quantity("20MHz", Dimension::Frequency).unwrap(), 20e6);
        assert_eq!(parse_quantity("250 m", Dimension::Length).unwrap(), 250.0);
        assert_eq!(parse_quantity("0.081", Dimension::Gain).unwrap(), 0.081);
        assert_eq!(parse_quantity("1e-3 s", Dimension::Time).unwrap(), 1e-3);
        assert_eq!(parse_quantity("1e-3", Dimension::Gain).unwrap(), 1e-3);
        assert_relative_eq!(parse_quantity("45 deg", Dimension::Angle).unwrap(), std::f64::consts::FRAC_PI_4);
    }

    #[test]
    fn rejects_wrong_units() {
        assert!(parse_quantity("46 dBm", Dimension::Frequency).is_err());
        assert!(parse_quantity("46", Dimension::Power).is_err());
        assert!(parse_quantity("abc W", Dimension::Power).is_err());
        assert!(parse_quantity("inf W", Dimension::Power).is_err());
    }

    #[test]
    fn parses_vectors() {
        assert_eq!(parse_vector("[1, 0, 0] km", Dimension::Length).unwrap(), vec![1000.0, 0.0, 0.0]);
        assert_eq!(parse_vector("[0, 0.1, 0.02] km", Dimension::Length).unwrap(), vec![0.0, 100.0, 20.0]);
        assert!(parse_vector("1, 0, 0 km", Dimension::Length).is_err());
        assert!(parse_vector("[1, x] m", Dimension::Length).is_err());
    }

    proptest! {
        #[test]
        fn db_round_trip(db in -200.0f64..200.0) {
            prop_assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-9);
        }

        #[test]
        fn format_round_trip(v in -1e12f64..1e12) {
            for dim in [Dimension::Power, Dimension::Length, Dimension::Gain, Dimension::Time] {
                prop_assert_eq!(parse_quantity(&format_quantity(v, dim), dim).unwrap(), v);
            }
            let vector = vec![v, v * 0.5, -v];
            prop_assert_eq!(parse_vector(&format_vector(&vector, Dimension::Length), Dimension::Length).unwrap(), vector);
        }
    }
}
