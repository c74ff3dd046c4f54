use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::Error;

/// Uncertainty-sampling measures, normalized so that every variant is 0 at
/// `P = 0.5` and tends to 1 as `P` approaches 0 or 1.
///
/// In the binary case all four are strictly increasing functions of the
/// logit magnitude `|y|`, so they induce the same ordering of instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfidenceMeasure {
    LeastConfidence,
    #[default]
    Margin,
    Ratio,
    Entropy,
}

impl ConfidenceMeasure {
    pub const ALL: [ConfidenceMeasure; 4] = [
        ConfidenceMeasure::LeastConfidence,
        ConfidenceMeasure::Margin,
        ConfidenceMeasure::Ratio,
        ConfidenceMeasure::Entropy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConfidenceMeasure::LeastConfidence => "least_confidence",
            ConfidenceMeasure::Margin => "margin",
            ConfidenceMeasure::Ratio => "ratio",
            ConfidenceMeasure::Entropy => "entropy",
        }
    }

    /// Confidence from the positive-class probability.
    pub fn score(self, p: f64) -> f64 {
        let top = p.max(1.0 - p);
        match self {
            ConfidenceMeasure::Margin => (2.0 * p - 1.0).abs(),
            ConfidenceMeasure::LeastConfidence => (top - 0.5) / 0.5,
            ConfidenceMeasure::Ratio => 1.0 - (1.0 - top) / top,
            ConfidenceMeasure::Entropy => (1.0 - binary_entropy(p)).clamp(0.0, 1.0),
        }
    }

    /// Smallest logit magnitude `|y|` whose confidence reaches `u`.
    /// `None` when `u >= 1` (only reached in the limit).
    pub fn logit_magnitude(self, u: f64) -> Option<f64> {
        if u <= 0.0 {
            return Some(0.0);
        }
        if u >= 1.0 {
            return None;
        }
        Some(match self {
            ConfidenceMeasure::Margin | ConfidenceMeasure::LeastConfidence => 2.0 * u.atanh(),
            ConfidenceMeasure::Ratio => -(1.0 - u).ln(),
            ConfidenceMeasure::Entropy => {
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                while self.score(super::sigmoid(hi)) < u {
                    hi *= 2.0;
                    if hi > 1e3 {
                        return None;
                    }
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if self.score(super::sigmoid(mid)) < u {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            }
        })
    }
}

/// Shannon entropy in bits of a Bernoulli(p).
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

impl fmt::Display for ConfidenceMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConfidenceMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "least_confidence" | "least" => Ok(ConfidenceMeasure::LeastConfidence),
            "margin" => Ok(ConfidenceMeasure::Margin),
            "ratio" => Ok(ConfidenceMeasure::Ratio),
            "entropy" => Ok(ConfidenceMeasure::Entropy),
            other => Err(Error::query("measure", format!("unknown confidence measure `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sigmoid;
    use proptest::prelude::*;

    #[test]
    fn all_zero_at_half() {
        for m in ConfidenceMeasure::ALL {
            assert_eq!(m.score(0.5), 0.0, "{m}");
            assert!((m.score(1.0) - 1.0).abs() < 1e-12, "{m}");
            assert!((m.score(0.0) - 1.0).abs() < 1e-12, "{m}");
        }
    }

    #[test]
    fn margin_matches_table_value() {
        let u = ConfidenceMeasure::Margin.score(0.789);
        assert!((u - 0.578).abs() < 1e-12);
    }

    #[test]
    fn entropy_at_point_nine() {
        // H(0.9) = -0.9 log2 0.9 - 0.1 log2 0.1
        let h = -0.9 * 0.9f64.log2() - 0.1 * 0.1f64.log2();
        assert!((h - 0.468_995_593_589_281_2).abs() < 1e-15);
        let u = ConfidenceMeasure::Entropy.score(0.9);
        assert!((u - (1.0 - h)).abs() < 1e-15);
        assert!((u - 0.531).abs() < 1e-3);
    }

    #[test]
    fn parse_names() {
        for m in ConfidenceMeasure::ALL {
            assert_eq!(m.as_str().parse::<ConfidenceMeasure>().unwrap(), m);
        }
        assert!("loss".parse::<ConfidenceMeasure>().is_err());
    }

    proptest! {
        #[test]
        fn logit_magnitude_inverts_score(u in 0.001f64..0.999) {
            for m in ConfidenceMeasure::ALL {
                let y = m.logit_magnitude(u).unwrap();
                let back = m.score(sigmoid(y));
                prop_assert!((back - u).abs() < 1e-9, "{} {} {}", m, u, back);
            }
        }

        #[test]
        fn measures_share_ordering(y1 in -12.0f64..12.0, y2 in -12.0f64..12.0) {
            prop_assume!((y1.abs() - y2.abs()).abs() > 1e-6);
            let (p1, p2) = (sigmoid(y1), sigmoid(y2));
            let reference = (y1.abs() - y2.abs()).signum();
            for m in ConfidenceMeasure::ALL {
                let d = m.score(p1) - m.score(p2);
                prop_assert_eq!(d.signum(), reference, "{}", m);
            }
        }
    }
}
