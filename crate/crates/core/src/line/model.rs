//! Continuous line model: pass-through density, inspection probabilities,
//! incentive-compatible trip prices and authority revenue.
//!
//! All quantities come from one composite midpoint discretisation of the unit
//! line with `n` cells of width `h`. Trip end points sit on the grid nodes
//! `z_i = i h` (trapezoid weights), and the inspection integrand
//! `phi(lambda(a)) / d_pass(a)` is sampled at the cell midpoints. The
//! cumulative integral `G` of that integrand is one function, so
//! `q(x, z) = q(x, y) + q(y, z)` holds to rounding, and the discrete pass
//! density at each midpoint is exactly the mass of grid trips crossing it,
//! so the revenue double sum collapses to `alpha * sum_k phi(lambda(c_k)) h`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::density::{BumpPair, InspectorDensity, LineDemandDensity};
use crate::error::{Error, Result};
use crate::technology::MonitoringTechnology;

pub const MIN_QUADRATURE_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Cells per unit interval.
    pub nodes: usize,
    pub tolerance: f64,
    /// Trip end points must lie in `[margin, 1 - margin]`.
    pub endpoint_margin: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes: 2048,
            tolerance: 1e-6,
            endpoint_margin: 1e-3,
        }
    }
}

impl QuadratureConfig {
    pub fn new(nodes: usize, tolerance: f64) -> Result<Self> {
        let q = QuadratureConfig {
            nodes,
            tolerance,
            ..Default::default()
        };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes < MIN_QUADRATURE_NODES {
            return Err(Error::InvalidInput(format!(
                "quadrature needs at least {MIN_QUADRATURE_NODES} nodes, got {}",
                self.nodes
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
        }
        if !(0.0..0.5).contains(&self.endpoint_margin) {
            return Err(Error::InvalidInput("endpoint margin must lie in [0, 0.5)".into()));
        }
        Ok(())
    }

    pub fn doubled(&self) -> Self {
        QuadratureConfig {
            nodes: self.nodes * 2,
            ..*self
        }
    }
}

/// Pass-through density `d_pass(a)` by nested midpoint quadrature.
pub fn pass_density(d: &LineDemandDensity, a: f64, quad: &QuadratureConfig) -> Result<f64> {
    quad.validate()?;
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::OutOfDomain(a, 0.0, 1.0));
    }
    let n = quad.nodes as f64;
    let nl = (a * n).ceil() as usize;
    let nr = ((1.0 - a) * n).ceil() as usize;
    if nl == 0 || nr == 0 {
        return Ok(0.0);
    }
    let (hl, hr) = (a / nl as f64, (1.0 - a) / nr as f64);
    let mut total = 0.0;
    for i in 0..nl {
        let x = (i as f64 + 0.5) * hl;
        let mut row = 0.0;
        for j in 0..nr {
            let y = a + (j as f64 + 0.5) * hr;
            row += d.eval(x, y) + d.eval(y, x);
        }
        total += row;
    }
    Ok(total * hl * hr)
}

/// Discrete pass-through density at the cell midpoints of the quadrature grid.
///
/// Depends only on the demand density, so it can be shared across inspector
/// allocations.
#[derive(Debug, Clone)]
pub struct PassProfile {
    quad: QuadratureConfig,
    /// `D_k` for the midpoint of cell `k`.
    pass: Vec<f64>,
    demand: LineDemandDensity,
}

impl PassProfile {
    pub fn new(d: &LineDemandDensity, quad: &QuadratureConfig) -> Result<Self> {
        quad.validate()?;
        let n = quad.nodes;
        let h = 1.0 / n as f64;
        let weight = |i: usize| if i == 0 || i == n { 0.5 * h } else { h };
        let node = |i: usize| i as f64 * h;
        // D_k = sum over node pairs i <= k < j of (d_ij + d_ji) w_i w_j, built
        // by moving node k from the right-hand side to the left-hand side.
        let mut pass = Vec::with_capacity(n);
        let mut current = 0.0;
        for k in 0..n {
            let xk = node(k);
            let (mut left, mut right) = (0.0, 0.0);
            for i in 0..=n {
                if i == k {
                    continue;
                }
                let xi = node(i);
                let s = (d.eval(xi, xk) + d.eval(xk, xi)) * weight(i);
                if i < k {
                    left += s;
                } else {
                    right += s;
                }
            }
            current += weight(k) * (right - left);
            pass.push(current);
        }
        Ok(PassProfile {
            quad: *quad,
            pass,
            demand: d.clone(),
        })
    }

    pub fn quadrature(&self) -> &QuadratureConfig {
        &self.quad
    }

    pub fn demand(&self) -> &LineDemandDensity {
        &self.demand
    }

    pub fn cell_count(&self) -> usize {
        self.pass.len()
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.pass.len() as f64
    }

    pub fn midpoint(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.cell_width()
    }

    /// Discrete pass density at the midpoint of cell `k`.
    pub fn at_cell(&self, k: usize) -> f64 {
        self.pass[k]
    }
}

/// Line model with a fixed demand, inspector allocation and technology.
#[derive(Debug, Clone)]
pub struct LineModel {
    profile: PassProfile,
    inspectors: InspectorDensity,
    technology: MonitoringTechnology,
    /// Integrand `phi(lambda(c_k)) / D_k`; infinite where `D_k` vanishes.
    integrand: Vec<f64>,
    /// Cumulative integral at the grid nodes, `cumulative[0] = 0`.
    cumulative: Vec<f64>,
    /// Last cell with a vanishing pass density, if any.
    degenerate: Vec<usize>,
}

impl LineModel {
    pub fn new(
        d: &LineDemandDensity,
        inspectors: &InspectorDensity,
        technology: &MonitoringTechnology,
        quad: &QuadratureConfig,
    ) -> Result<Self> {
        let profile = PassProfile::new(d, quad)?;
        LineModel::with_profile(profile, inspectors, technology)
    }

    pub fn with_profile(
        profile: PassProfile,
        inspectors: &InspectorDensity,
        technology: &MonitoringTechnology,
    ) -> Result<Self> {
        technology.validate()?;
        let h = profile.cell_width();
        let mut integrand = Vec::with_capacity(profile.cell_count());
        let mut cumulative = Vec::with_capacity(profile.cell_count() + 1);
        let mut degenerate = Vec::new();
        cumulative.push(0.0);
        for k in 0..profile.cell_count() {
            let pass = profile.at_cell(k);
            let g = if pass > 0.0 {
                technology.value(inspectors.eval(profile.midpoint(k))) / pass
            } else {
                degenerate.push(k);
                f64::INFINITY
            };
            integrand.push(g);
            let last = *cumulative.last().unwrap();
            cumulative.push(last + g * h);
        }
        Ok(LineModel {
            profile,
            inspectors: inspectors.clone(),
            technology: technology.clone(),
            integrand,
            cumulative,
            degenerate,
        })
    }

    /// Same demand, different inspectors; reuses the pass profile.
    pub fn reallocated(&self, inspectors: &InspectorDensity) -> Result<Self> {
        LineModel::with_profile(self.profile.clone(), inspectors, &self.technology)
    }

    pub fn profile(&self) -> &PassProfile {
        &self.profile
    }

    pub fn inspectors(&self) -> &InspectorDensity {
        &self.inspectors
    }

    pub fn technology(&self) -> &MonitoringTechnology {
        &self.technology
    }

    fn cumulative_at(&self, x: f64) -> f64 {
        let n = self.integrand.len();
        let h = self.profile.cell_width();
        let k = ((x / h).floor() as usize).min(n - 1);
        let offset = x - k as f64 * h;
        if offset == 0.0 {
            self.cumulative[k]
        } else {
            self.cumulative[k] + self.integrand[k] * offset
        }
    }

    fn check_endpoint(&self, x: f64) -> Result<()> {
        let m = self.profile.quadrature().endpoint_margin;
        if !(m..=1.0 - m).contains(&x) {
            return Err(Error::OutOfDomain(x, m, 1.0 - m));
        }
        Ok(())
    }

    /// Expected number of inspections on a trip between `x` and `y`.
    pub fn inspection_probability(&self, x: f64, y: f64) -> Result<f64> {
        for p in [x, y] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::OutOfDomain(p, 0.0, 1.0));
            }
        }
        if x == y {
            return Ok(0.0);
        }
        self.check_endpoint(x)?;
        self.check_endpoint(y)?;
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        let h = self.profile.cell_width();
        if self
            .degenerate
            .iter()
            .any(|&k| (k as f64 + 1.0) * h > lo && (k as f64) * h < hi)
        {
            return Err(Error::ZeroPassDensity(lo, hi));
        }
        let q = self.cumulative_at(hi) - self.cumulative_at(lo);
        if q > 1.0 {
            log::warn!("expected inspection count {q:.4} exceeds 1 on trip ({lo}, {hi})");
        }
        Ok(q)
    }

    /// Incentive-compatible trip price `alpha * q(x, y)`.
    pub fn ic_price(&self, x: f64, y: f64, alpha: f64) -> Result<f64> {
        Ok(alpha * self.inspection_probability(x, y)?)
    }

    /// Expected cost of a ticket strategy: fines on uncovered stretches plus
    /// the price of every ticket.
    pub fn strategy_cost(
        &self,
        strategy: &LineStrategy,
        alpha: f64,
        prices: &dyn Fn(f64, f64) -> f64,
    ) -> Result<f64> {
        let mut cost = 0.0;
        for (a, b) in strategy.uncovered() {
            cost += alpha * self.inspection_probability(a, b)?;
        }
        for &(a, b) in strategy.segments() {
            cost += prices(a, b);
        }
        Ok(cost)
    }

    /// Revenue when every passenger buys the incentive-compatible ticket:
    /// double sum of `d(x, y) * alpha * q(x, y)` over the grid.
    pub fn revenue(&self, alpha: f64) -> Result<f64> {
        if let Some(&k) = self.degenerate.first() {
            let h = self.profile.cell_width();
            return Err(Error::ZeroPassDensity(k as f64 * h, (k + 1) as f64 * h));
        }
        let n = self.integrand.len();
        let h = self.profile.cell_width();
        let weight = |i: usize| if i == 0 || i == n { 0.5 * h } else { h };
        let d = self.profile.demand();
        let mut total = 0.0;
        for i in 0..=n {
            let xi = i as f64 * h;
            let mut row = 0.0;
            for j in (i + 1)..=n {
                let yj = j as f64 * h;
                let q = self.cumulative[j] - self.cumulative[i];
                row += (d.eval(xi, yj) + d.eval(yj, xi)) * weight(j) * q;
            }
            total += row * weight(i);
        }
        Ok(alpha * total)
    }

    /// Revenue after swapping the order of integration: `alpha * int phi(lambda)`.
    pub fn revenue_reordered(&self, alpha: f64) -> f64 {
        let h = self.profile.cell_width();
        let sum: f64 = (0..self.integrand.len())
            .map(|k| self.technology.value(self.inspectors.eval(self.profile.midpoint(k))))
            .sum();
        alpha * sum * h
    }
}

/// A passenger's trip on the line with the tickets bought for it.
#[derive(Debug, Clone, PartialEq)]
pub struct LineStrategy {
    origin: f64,
    destination: f64,
    segments: Vec<(f64, f64)>,
}

impl LineStrategy {
    /// Segments are `(start, end)` with `start < end`, ordered and disjoint
    /// (touching end points allowed) inside the trip interval.
    pub fn new(origin: f64, destination: f64, segments: Vec<(f64, f64)>) -> Result<Self> {
        let (lo, hi) = (origin.min(destination), origin.max(destination));
        let mut prev = lo;
        for &(a, b) in &segments {
            if !(a < b) {
                return Err(Error::InvalidSegments(format!("segment ({a}, {b}) is empty or reversed")));
            }
            if a < lo || b > hi {
                return Err(Error::InvalidSegments(format!(
                    "segment ({a}, {b}) leaves the trip ({lo}, {hi})"
                )));
            }
            if a < prev {
                return Err(Error::InvalidSegments(format!("segment ({a}, {b}) overlaps its predecessor")));
            }
            prev = b;
        }
        Ok(LineStrategy {
            origin,
            destination,
            segments,
        })
    }

    pub fn full_ticket(origin: f64, destination: f64) -> Self {
        let (lo, hi) = (origin.min(destination), origin.max(destination));
        let segments = if lo < hi { vec![(lo, hi)] } else { Vec::new() };
        LineStrategy {
            origin,
            destination,
            segments,
        }
    }

    pub fn no_ticket(origin: f64, destination: f64) -> Self {
        LineStrategy {
            origin,
            destination,
            segments: Vec::new(),
        }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn destination(&self) -> f64 {
        self.destination
    }

    pub fn segments(&self) -> &[(f64, f64)] {
        &self.segments
    }

    /// Stretches of the trip not covered by any ticket.
    pub fn uncovered(&self) -> Vec<(f64, f64)> {
        let (lo, hi) = (self.origin.min(self.destination), self.origin.max(self.destination));
        let mut gaps = Vec::new();
        let mut cursor = lo;
        for &(a, b) in &self.segments {
            if a > cursor {
                gaps.push((cursor, a));
            }
            cursor = b;
        }
        if hi > cursor {
            gaps.push((cursor, hi));
        }
        gaps
    }
}

pub fn inspection_probability(
    x: f64,
    y: f64,
    inspectors: &InspectorDensity,
    technology: &MonitoringTechnology,
    d: &LineDemandDensity,
    quad: &QuadratureConfig,
) -> Result<f64> {
    LineModel::new(d, inspectors, technology, quad)?.inspection_probability(x, y)
}

pub fn ic_price_line(
    x: f64,
    y: f64,
    alpha: f64,
    inspectors: &InspectorDensity,
    technology: &MonitoringTechnology,
    d: &LineDemandDensity,
    quad: &QuadratureConfig,
) -> Result<f64> {
    LineModel::new(d, inspectors, technology, quad)?.ic_price(x, y, alpha)
}

pub fn strategy_cost_line(
    strategy: &LineStrategy,
    alpha: f64,
    model: &LineModel,
    prices: &dyn Fn(f64, f64) -> f64,
) -> Result<f64> {
    model.strategy_cost(strategy, alpha, prices)
}

pub fn line_revenue(
    inspectors: &InspectorDensity,
    technology: &MonitoringTechnology,
    d: &LineDemandDensity,
    alpha: f64,
    quad: &QuadratureConfig,
) -> Result<f64> {
    LineModel::new(d, inspectors, technology, quad)?.revenue(alpha)
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimalityReport {
    /// Spread of `phi'(lambda(a))` over the grid midpoints.
    pub stationarity_residual: f64,
    pub base_revenue: f64,
    pub perturbations: Vec<BumpPair>,
    /// Revenue change caused by each perturbation.
    pub revenue_deltas: Vec<f64>,
}

impl OptimalityReport {
    pub fn max_delta(&self) -> f64 {
        self.revenue_deltas
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs_delta(&self) -> f64 {
        self.revenue_deltas.iter().map(|d| d.abs()).fold(0.0, f64::max)
    }

    pub fn is_local_maximum(&self, tolerance: f64) -> bool {
        self.revenue_deltas.iter().all(|d| *d <= tolerance)
    }
}

/// Random mass-preserving bump pair that keeps `base` non-negative.
pub fn random_bump_pair<R: Rng>(rng: &mut R, base: &InspectorDensity) -> BumpPair {
    let half_width = rng.random_range(0.03..0.15);
    let lo = half_width + 1e-3;
    let hi = 1.0 - half_width - 1e-3;
    BumpPair {
        add_at: rng.random_range(lo..hi),
        remove_at: rng.random_range(lo..hi),
        half_width,
        scale: rng.random_range(0.1..0.9) * base.sampled_min(),
    }
}

/// Stationarity of `phi'(lambda)` plus revenue changes under random
/// mass-preserving reallocations of the inspectors.
pub fn check_inspector_optimality(
    inspectors: &InspectorDensity,
    technology: &MonitoringTechnology,
    d: &LineDemandDensity,
    alpha: f64,
    quad: &QuadratureConfig,
    perturbation_count: usize,
    seed: u64,
) -> Result<OptimalityReport> {
    let model = LineModel::new(d, inspectors, technology, quad)?;
    let profile = model.profile();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..profile.cell_count() {
        let slope = technology.derivative(inspectors.eval(profile.midpoint(k)));
        lo = lo.min(slope);
        hi = hi.max(slope);
    }
    let base_revenue = model.revenue(alpha)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perturbations = Vec::with_capacity(perturbation_count);
    let mut revenue_deltas = Vec::with_capacity(perturbation_count);
    for _ in 0..perturbation_count {
        let bump = random_bump_pair(&mut rng, inspectors);
        let moved = model.reallocated(&inspectors.perturbed(bump)?)?;
        revenue_deltas.push(moved.revenue(alpha)? - base_revenue);
        perturbations.push(bump);
    }
    Ok(OptimalityReport {
        stationarity_residual: hi - lo,
        base_revenue,
        perturbations,
        revenue_deltas,
    })
}
