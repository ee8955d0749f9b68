//! Fairness and throughput-ratio metrics.

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("throughput vector is empty")]
    Empty,
    #[error("throughput vector is all zero")]
    AllZero,
    #[error("throughput must be finite and non-negative, got {0}")]
    Negative(f64),
}

/// Per-flow throughputs in packets per second.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputVector(Vec<f64>);

impl ThroughputVector {
    pub fn new(values: Vec<f64>) -> Result<Self, MetricsError> {
        if values.is_empty() {
            return Err(MetricsError::Empty);
        }
        if let Some(&bad) = values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(MetricsError::Negative(bad));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `(sum x)^2 / (n * sum x^2)`.
pub fn jain_index(v: &ThroughputVector) -> Result<f64, MetricsError> {
    let n = v.0.len() as f64;
    // Normalise by the maximum so tiny or huge rates neither underflow nor
    // overflow when squared.
    let max = v.0.iter().fold(0.0_f64, |m, &x| m.max(x));
    if max == 0.0 {
        return Err(MetricsError::AllZero);
    }
    let (sum, sum_sq) = v.0.iter().fold((0.0, 0.0), |(s, q), &x| {
        let y = x / max;
        (s + y, q + y * y)
    });
    Ok((sum * sum / (n * sum_sq)).min(1.0))
}

/// Uplink-over-downlink throughput ratio with explicit markers for a zero
/// denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Ratio {
    Finite(f64),
    /// Downlink is zero while uplink is not.
    Infinite,
    /// Both directions are zero.
    Undefined,
}

impl Ratio {
    pub fn finite(self) -> Option<f64> {
        match self {
            Ratio::Finite(x) => Some(x),
            _ => None,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            Ratio::Undefined
        } else if x.is_infinite() {
            Ratio::Infinite
        } else {
            Ratio::Finite(x)
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Ratio::Finite(x) => x,
            Ratio::Infinite => f64::INFINITY,
            Ratio::Undefined => f64::NAN,
        }
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Ratio::Finite(x) => write!(f, "{x}"),
            Ratio::Infinite => f.write_str("inf"),
            Ratio::Undefined => f.write_str("nan"),
        }
    }
}

impl FromStr for Ratio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "inf" => Ok(Ratio::Infinite),
            "nan" => Ok(Ratio::Undefined),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Ratio::Finite)
                .ok_or_else(|| format!("invalid ratio `{other}`")),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Ratio::Finite(x) => serializer.serialize_f64(*x),
            Ratio::Infinite => serializer.serialize_str("inf"),
            Ratio::Undefined => serializer.serialize_str("nan"),
        }
    }
}

impl<'de> serde::Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct RatioVisitor;

        impl Visitor<'_> for RatioVisitor {
            type Value = Ratio;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a number, \"inf\" or \"nan\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Ratio, E> {
                Ok(Ratio::from_f64(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Ratio, E> {
                Ok(Ratio::Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Ratio, E> {
                Ok(Ratio::Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Ratio, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_str(RatioVisitor)
    }
}

pub fn throughput_ratio(up_total: f64, down_total: f64) -> Result<Ratio, MetricsError> {
    for x in [up_total, down_total] {
        if !(x >= 0.0) || !x.is_finite() {
            return Err(MetricsError::Negative(x));
        }
    }
    Ok(match (up_total == 0.0, down_total == 0.0) {
        (true, true) => Ratio::Undefined,
        (false, true) => Ratio::Infinite,
        _ => Ratio::Finite(up_total / down_total),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tv(v: &[f64]) -> ThroughputVector {
        ThroughputVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn jain_examples() {
        assert_eq!(jain_index(&tv(&[2.0, 2.0, 2.0, 2.0])).unwrap(), 1.0);
        assert_eq!(jain_index(&tv(&[1.0, 0.0, 0.0, 0.0])).unwrap(), 0.25);
        assert!((jain_index(&tv(&[4.0, 1.0])).unwrap() - 25.0 / 34.0).abs() < 1e-15);
        assert!((jain_index(&tv(&[3.0, 3.0, 0.0, 0.0, 0.0])).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn jain_errors() {
        assert_eq!(ThroughputVector::new(vec![]), Err(MetricsError::Empty));
        assert!(ThroughputVector::new(vec![1.0, -1.0]).is_err());
        assert_eq!(jain_index(&tv(&[0.0, 0.0])), Err(MetricsError::AllZero));
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(throughput_ratio(10.0, 10.0).unwrap(), Ratio::Finite(1.0));
        assert_eq!(throughput_ratio(5.0, 0.0).unwrap(), Ratio::Infinite);
        assert_eq!(throughput_ratio(0.0, 0.0).unwrap(), Ratio::Undefined);
        assert_eq!(throughput_ratio(0.0, 3.0).unwrap(), Ratio::Finite(0.0));
        assert!(throughput_ratio(-1.0, 3.0).is_err());
    }

    #[test]
    fn ratio_text_round_trip() {
        for r in [
            Ratio::Finite(0.125),
            Ratio::Finite(15.375),
            Ratio::Infinite,
            Ratio::Undefined,
        ] {
            let parsed: Ratio = r.to_string().parse().unwrap();
            assert_eq!(parsed.to_string(), r.to_string());
        }
    }

    proptest! {
        #[test]
        fn jain_bounds_and_invariance(
            v in prop::collection::vec(0.0f64..1e6, 1..12),
            scale in 1e-3f64..1e3,
            rot in 0usize..12,
        ) {
            prop_assume!(v.iter().any(|&x| x > 0.0));
            let n = v.len() as f64;
            let j = jain_index(&tv(&v)).unwrap();
            prop_assert!(j >= 1.0 / n - 1e-12 && j <= 1.0);

            let scaled: Vec<f64> = v.iter().map(|x| x * scale).collect();
            prop_assert!((jain_index(&tv(&scaled)).unwrap() - j).abs() < 1e-12);

            let mut rotated = v.clone();
            rotated.rotate_left(rot % v.len());
            prop_assert!((jain_index(&tv(&rotated)).unwrap() - j).abs() < 1e-12);
        }
    }
}
