//! Inspection technology: maps an inspector mass to inspection intensity.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonitoringTechnology {
    /// `phi(l) = k * l`.
    Linear { k: f64 },
    /// `phi(l) = l^gamma`, strictly concave for `gamma < 1`.
    Power { gamma: f64 },
    /// Piecewise-linear curve through `(mass, intensity)` points, extended
    /// linearly past the last point.
    Sampled { points: Vec<(f64, f64)> },
}

impl MonitoringTechnology {
    pub fn identity() -> Self {
        MonitoringTechnology::Linear { k: 1.0 }
    }

    pub fn linear(k: f64) -> Result<Self> {
        let t = MonitoringTechnology::Linear { k };
        t.validate()?;
        Ok(t)
    }

    pub fn power(gamma: f64) -> Result<Self> {
        let t = MonitoringTechnology::Power { gamma };
        t.validate()?;
        Ok(t)
    }

    pub fn sampled(points: Vec<(f64, f64)>) -> Result<Self> {
        let t = MonitoringTechnology::Sampled { points };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MonitoringTechnology::Linear { k } => {
                if !(k.is_finite() && *k > 0.0) {
                    return Err(Error::InvalidInput(format!("linear slope must be positive, got {k}")));
                }
            }
            MonitoringTechnology::Power { gamma } => {
                if !(*gamma > 0.0 && *gamma <= 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "power exponent must lie in (0, 1], got {gamma}"
                    )));
                }
            }
            MonitoringTechnology::Sampled { points } => {
                if points.len() < 2 {
                    return Err(Error::InvalidInput("sampled technology needs at least two points".into()));
                }
                if points[0].0 != 0.0 || points[0].1 < 0.0 {
                    return Err(Error::InvalidInput(
                        "sampled technology must start at mass 0 with non-negative intensity".into(),
                    ));
                }
                for w in points.windows(2) {
                    if !(w[1].0 > w[0].0) || !(w[1].1 > w[0].1) {
                        return Err(Error::InvalidInput(
                            "sampled technology must be strictly increasing".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, MonitoringTechnology::Linear { k } if *k == 1.0)
    }

    pub fn is_linear(&self) -> bool {
        matches!(self, MonitoringTechnology::Linear { .. })
    }

    pub fn value(&self, mass: f64) -> f64 {
        match self {
            MonitoringTechnology::Linear { k } => k * mass,
            MonitoringTechnology::Power { gamma } => mass.max(0.0).powf(*gamma),
            MonitoringTechnology::Sampled { points } => {
                let (i, j) = segment(points, mass);
                let (x0, y0) = points[i];
                let (x1, y1) = points[j];
                y0 + (y1 - y0) * (mass - x0) / (x1 - x0)
            }
        }
    }

    pub fn derivative(&self, mass: f64) -> f64 {
        match self {
            MonitoringTechnology::Linear { k } => *k,
            MonitoringTechnology::Power { gamma } => {
                if *gamma == 1.0 {
                    1.0
                } else {
                    gamma * mass.max(0.0).powf(gamma - 1.0)
                }
            }
            MonitoringTechnology::Sampled { points } => {
                let (i, j) = segment(points, mass);
                (points[j].1 - points[i].1) / (points[j].0 - points[i].0)
            }
        }
    }
}

fn segment(points: &[(f64, f64)], mass: f64) -> (usize, usize) {
    let k = points
        .iter()
        .position(|(x, _)| *x > mass)
        .unwrap_or(points.len() - 1)
        .max(1);
    (k - 1, k)
}

impl fmt::Display for MonitoringTechnology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MonitoringTechnology::Linear { k } if *k == 1.0 => write!(f, "identity"),
            MonitoringTechnology::Linear { k } => write!(f, "linear:{k}"),
            MonitoringTechnology::Power { gamma } => write!(f, "power:{gamma}"),
            MonitoringTechnology::Sampled { points } => write!(f, "sampled[{} points]", points.len()),
        }
    }
}

impl std::str::FromStr for MonitoringTechnology {
    type Err = Error;

    /// Parses `identity`, `linear:<k>` or `power:<gamma>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("unrecognised technology `{s}`"));
        if s == "identity" {
            return Ok(MonitoringTechnology::identity());
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let v: f64 = arg.parse().map_err(|_| bad())?;
        match kind {
            "linear" => MonitoringTechnology::linear(v),
            "power" => MonitoringTechnology::power(v),
            _ => Err(bad()),
        }
    }
}
