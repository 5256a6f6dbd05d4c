use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest grid accepted for grid-interpolated demand.
pub const MIN_DEMAND_GRID: usize = 8;

/// Travel demand density `d(x, y)` on the unit line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LineDemandDensity {
    Constant { value: f64 },
    /// `d(x, y) = origin(x) * destination(y)`, coefficients in ascending order.
    Separable { origin: Vec<f64>, destination: Vec<f64> },
    /// Bilinear interpolation of node values on a uniform `size x size` grid,
    /// row-major in the origin coordinate.
    Grid { size: usize, values: Vec<f64> },
}

impl LineDemandDensity {
    pub fn constant(value: f64) -> Result<Self> {
        let d = LineDemandDensity::Constant { value };
        d.validate()?;
        Ok(d)
    }

    pub fn separable(origin: Vec<f64>, destination: Vec<f64>) -> Result<Self> {
        let d = LineDemandDensity::Separable { origin, destination };
        d.validate()?;
        Ok(d)
    }

    pub fn grid(size: usize, values: Vec<f64>) -> Result<Self> {
        let d = LineDemandDensity::Grid { size, values };
        d.validate()?;
        Ok(d)
    }

    /// Full support off the diagonal, checked on a 65 x 65 sample.
    pub fn validate(&self) -> Result<()> {
        if let LineDemandDensity::Grid { size, values } = self {
            if *size < MIN_DEMAND_GRID {
                return Err(Error::InvalidInput(format!(
                    "demand grid must be at least {MIN_DEMAND_GRID}x{MIN_DEMAND_GRID}, got {size}x{size}"
                )));
            }
            if values.len() != size * size {
                return Err(Error::InvalidInput(format!(
                    "demand grid expects {} values, got {}",
                    size * size,
                    values.len()
                )));
            }
            for i in 0..*size {
                for j in 0..*size {
                    let v = values[i * size + j];
                    if !v.is_finite() || v < 0.0 || (i != j && v <= 0.0) {
                        return Err(Error::InvalidInput(format!(
                            "demand grid value at ({i}, {j}) must be positive, got {v}"
                        )));
                    }
                }
            }
        }
        const SAMPLES: usize = 64;
        for i in 0..=SAMPLES {
            for j in 0..=SAMPLES {
                let (x, y) = (i as f64 / SAMPLES as f64, j as f64 / SAMPLES as f64);
                let v = self.eval(x, y);
                if !v.is_finite() || v < 0.0 || (i != j && v <= 0.0) {
                    return Err(Error::InvalidInput(format!(
                        "demand density must be positive off the diagonal; d({x}, {y}) = {v}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            LineDemandDensity::Constant { value } => *value,
            LineDemandDensity::Separable { origin, destination } => {
                polynomial(origin, x) * polynomial(destination, y)
            }
            LineDemandDensity::Grid { size, values } => {
                let m = (*size - 1) as f64;
                let (fx, fy) = (x.clamp(0.0, 1.0) * m, y.clamp(0.0, 1.0) * m);
                let i = (fx.floor() as usize).min(size - 2);
                let j = (fy.floor() as usize).min(size - 2);
                let (tx, ty) = (fx - i as f64, fy - j as f64);
                let v = |a: usize, b: usize| values[a * size + b];
                (1.0 - tx) * (1.0 - ty) * v(i, j)
                    + tx * (1.0 - ty) * v(i + 1, j)
                    + (1.0 - tx) * ty * v(i, j + 1)
                    + tx * ty * v(i + 1, j + 1)
            }
        }
    }
}

fn polynomial(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Pair of equal-shape smooth bumps: mass added around `add_at` and removed
/// around `remove_at`, so the total is unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpPair {
    pub add_at: f64,
    pub remove_at: f64,
    pub half_width: f64,
    pub scale: f64,
}

impl BumpPair {
    pub fn eval(&self, a: f64) -> f64 {
        self.scale * (bump((a - self.add_at) / self.half_width) - bump((a - self.remove_at) / self.half_width))
    }

    fn inside_unit(&self) -> bool {
        let w = self.half_width;
        w > 0.0
            && self.add_at - w >= 0.0
            && self.add_at + w <= 1.0
            && self.remove_at - w >= 0.0
            && self.remove_at + w <= 1.0
    }
}

/// C-infinity bump supported on (-1, 1) with peak 1 at 0.
fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Inspector density `lambda(a)` on the unit line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InspectorDensity {
    Uniform { total: f64 },
    /// `lambda(a) = intercept + slope * a`.
    Linear { intercept: f64, slope: f64 },
    /// Piecewise-linear through equally spaced samples on [0, 1].
    Samples { values: Vec<f64> },
    Perturbed { base: Box<InspectorDensity>, bumps: Vec<BumpPair> },
}

impl InspectorDensity {
    pub fn uniform(total: f64) -> Result<Self> {
        let l = InspectorDensity::Uniform { total };
        l.validate()?;
        Ok(l)
    }

    pub fn linear(intercept: f64, slope: f64) -> Result<Self> {
        let l = InspectorDensity::Linear { intercept, slope };
        l.validate()?;
        Ok(l)
    }

    /// Piecewise-linear density through `shape`, rescaled to mass `total`.
    pub fn from_samples(shape: &[f64], total: f64) -> Result<Self> {
        if shape.len() < 2 {
            return Err(Error::InvalidInput("need at least two inspector samples".into()));
        }
        let mass = trapezoid_mass(shape);
        if !(mass > 0.0) {
            return Err(Error::InvalidInput("inspector samples have no mass".into()));
        }
        let l = InspectorDensity::Samples {
            values: shape.iter().map(|v| v * total / mass).collect(),
        };
        l.validate()?;
        Ok(l)
    }

    /// Adds a mass-preserving bump pair; fails if the result would go negative.
    pub fn perturbed(&self, bump: BumpPair) -> Result<Self> {
        let l = match self {
            InspectorDensity::Perturbed { base, bumps } => {
                let mut bumps = bumps.clone();
                bumps.push(bump);
                InspectorDensity::Perturbed { base: base.clone(), bumps }
            }
            other => InspectorDensity::Perturbed {
                base: Box::new(other.clone()),
                bumps: vec![bump],
            },
        };
        l.validate()?;
        Ok(l)
    }

    /// Declared total mass.
    pub fn total(&self) -> f64 {
        match self {
            InspectorDensity::Uniform { total } => *total,
            InspectorDensity::Linear { intercept, slope } => intercept + slope / 2.0,
            InspectorDensity::Samples { values } => trapezoid_mass(values),
            InspectorDensity::Perturbed { base, .. } => base.total(),
        }
    }

    pub fn eval(&self, a: f64) -> f64 {
        match self {
            InspectorDensity::Uniform { total } => *total,
            InspectorDensity::Linear { intercept, slope } => intercept + slope * a,
            InspectorDensity::Samples { values } => {
                let m = (values.len() - 1) as f64;
                let f = a.clamp(0.0, 1.0) * m;
                let i = (f.floor() as usize).min(values.len() - 2);
                let t = f - i as f64;
                values[i] * (1.0 - t) + values[i + 1] * t
            }
            InspectorDensity::Perturbed { base, bumps } => {
                base.eval(a) + bumps.iter().map(|b| b.eval(a)).sum::<f64>()
            }
        }
    }

    /// Minimum over a fine sample, including the end points.
    pub fn sampled_min(&self) -> f64 {
        (0..=4096)
            .map(|i| self.eval(i as f64 / 4096.0))
            .fold(f64::INFINITY, f64::min)
    }

    fn validate(&self) -> Result<()> {
        match self {
            InspectorDensity::Uniform { total } if !(total.is_finite() && *total > 0.0) => {
                return Err(Error::InvalidInput(format!("inspector mass must be positive, got {total}")));
            }
            InspectorDensity::Perturbed { bumps, .. } => {
                if let Some(b) = bumps.iter().find(|b| !b.inside_unit()) {
                    return Err(Error::InvalidInput(format!(
                        "bump pair {b:?} must lie inside [0, 1]"
                    )));
                }
            }
            _ => {}
        }
        if !(self.total().is_finite() && self.total() > 0.0) {
            return Err(Error::InvalidInput("inspector density must have positive mass".into()));
        }
        let min = self.sampled_min();
        if !(min >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "inspector density must be non-negative, minimum sample {min}"
            )));
        }
        Ok(())
    }
}

fn trapezoid_mass(values: &[f64]) -> f64 {
    let h = 1.0 / (values.len() - 1) as f64;
    values
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]) * h)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_below_minimum_is_rejected() {
        assert!(LineDemandDensity::grid(4, vec![1.0; 16]).is_err());
        assert!(LineDemandDensity::grid(8, vec![1.0; 64]).is_ok());
    }

    #[test]
    fn grid_interpolates_bilinearly() {
        let size = 8;
        let values: Vec<f64> = (0..size * size)
            .map(|k| 1.0 + (k / size) as f64 + 2.0 * (k % size) as f64)
            .collect();
        let d = LineDemandDensity::grid(size, values).unwrap();
        // Bilinear reproduces affine functions exactly: 1 + 7x + 14y.
        let (x, y) = (0.3, 0.8);
        assert!((d.eval(x, y) - (1.0 + 7.0 * x + 14.0 * y)).abs() < 1e-12);
    }

    #[test]
    fn separable_requires_full_support() {
        // origin(x) = x vanishes at x = 0.
        assert!(LineDemandDensity::separable(vec![0.0, 1.0], vec![1.0]).is_err());
        let d = LineDemandDensity::separable(vec![1.0, 1.0], vec![2.0, 0.0, 1.0]).unwrap();
        assert_eq!(d.eval(1.0, 1.0), 2.0 * 3.0);
    }

    #[test]
    fn perturbation_keeps_mass_and_sign() {
        let base = InspectorDensity::uniform(1.0).unwrap();
        let bump = BumpPair {
            add_at: 0.3,
            remove_at: 0.7,
            half_width: 0.1,
            scale: 0.5,
        };
        let p = base.perturbed(bump).unwrap();
        assert_eq!(p.total(), 1.0);
        assert!((p.eval(0.3) - 1.5).abs() < 1e-12);
        assert!((p.eval(0.7) - 0.5).abs() < 1e-12);
        let too_big = BumpPair { scale: 1.5, ..bump };
        assert!(base.perturbed(too_big).is_err());
        let outside = BumpPair { add_at: 0.05, ..bump };
        assert!(base.perturbed(outside).is_err());
    }

    #[test]
    fn samples_are_rescaled_to_total() {
        let l = InspectorDensity::from_samples(&[1.0, 3.0], 2.0).unwrap();
        assert!((l.total() - 2.0).abs() < 1e-15);
        assert!((l.eval(0.5) - 2.0).abs() < 1e-15);
    }
}
