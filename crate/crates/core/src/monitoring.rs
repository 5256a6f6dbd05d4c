//! Inspector allocation over edges, per-edge inspection probabilities and
//! the incentive-compatible edge prices they imply.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{EdgeFlows, TransitNetwork};
use crate::technology::MonitoringTechnology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanKind {
    Uniform,
    Proportional,
    Explicit,
}

impl fmt::Display for PlanKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            PlanKind::Uniform => "uniform",
            PlanKind::Proportional => "proportional",
            PlanKind::Explicit => "explicit",
        })
    }
}

/// Inspector mass on every edge plus the inspection technology.
#[derive(Debug, Clone, PartialEq)]
pub struct MonitoringPlan {
    masses: Vec<f64>,
    technology: MonitoringTechnology,
    kind: PlanKind,
}

impl MonitoringPlan {
    /// Explicit plan; `masses` is aligned with `net.edges()`.
    pub fn new(net: &TransitNetwork, masses: Vec<f64>, technology: MonitoringTechnology) -> Result<Self> {
        MonitoringPlan::with_kind(net, masses, technology, PlanKind::Explicit)
    }

    fn with_kind(
        net: &TransitNetwork,
        masses: Vec<f64>,
        technology: MonitoringTechnology,
        kind: PlanKind,
    ) -> Result<Self> {
        technology.validate()?;
        if masses.len() != net.edge_count() {
            return Err(Error::InvalidInput(format!(
                "monitoring plan covers {} edges, network has {}",
                masses.len(),
                net.edge_count()
            )));
        }
        if let Some(e) = masses.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            let (a, b) = net.edge_label(e);
            return Err(Error::InvalidInput(format!(
                "inspector mass on `{a}`-`{b}` must be positive, got {}",
                masses[e]
            )));
        }
        Ok(MonitoringPlan {
            masses,
            technology,
            kind,
        })
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn mass(&self, edge: usize) -> f64 {
        self.masses[edge]
    }

    pub fn total(&self) -> f64 {
        self.masses.iter().sum()
    }

    pub fn technology(&self) -> &MonitoringTechnology {
        &self.technology
    }

    pub fn kind(&self) -> PlanKind {
        self.kind
    }
}

fn check_total(lambda_total: f64) -> Result<()> {
    if !(lambda_total.is_finite() && lambda_total > 0.0) {
        return Err(Error::InvalidInput(format!(
            "total inspector mass must be positive, got {lambda_total}"
        )));
    }
    Ok(())
}

/// Spreads `lambda_total` evenly over the edges.
pub fn uniform_plan(
    net: &TransitNetwork,
    lambda_total: f64,
    technology: MonitoringTechnology,
) -> Result<MonitoringPlan> {
    check_total(lambda_total)?;
    if net.edge_count() == 0 {
        return Err(Error::InvalidInput("network has no edges to monitor".into()));
    }
    let per_edge = lambda_total / net.edge_count() as f64;
    MonitoringPlan::with_kind(net, vec![per_edge; net.edge_count()], technology, PlanKind::Uniform)
}

/// Allocates `lambda_total` in proportion to edge flows.
pub fn proportional_plan(
    net: &TransitNetwork,
    flows: &EdgeFlows,
    lambda_total: f64,
    technology: MonitoringTechnology,
) -> Result<MonitoringPlan> {
    check_total(lambda_total)?;
    check_flows(net, flows)?;
    let total = flows.total();
    let masses = flows.values().iter().map(|f| lambda_total * f / total).collect();
    MonitoringPlan::with_kind(net, masses, technology, PlanKind::Proportional)
}

fn check_flows(net: &TransitNetwork, flows: &EdgeFlows) -> Result<()> {
    if flows.values().len() != net.edge_count() {
        return Err(Error::InvalidInput(format!(
            "expected {} edge flows, got {}",
            net.edge_count(),
            flows.values().len()
        )));
    }
    if let Some(e) = flows.values().iter().position(|f| !(*f > 0.0)) {
        let (a, b) = net.edge_label(e);
        return Err(Error::ZeroFlow(a, b));
    }
    Ok(())
}

/// Expected inspections for one passenger crossing `edge`: `phi(lambda) / flow`.
pub fn edge_inspection_prob(
    net: &TransitNetwork,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    edge: usize,
) -> Result<f64> {
    let flow = flows.get(edge);
    if !(flow > 0.0) {
        let (a, b) = net.edge_label(edge);
        return Err(Error::ZeroFlow(a, b));
    }
    let q = plan.technology().value(plan.mass(edge)) / flow;
    if q > 1.0 {
        let (a, b) = net.edge_label(edge);
        log::debug!("expected inspection count {q:.4} on `{a}`-`{b}` exceeds 1");
    }
    Ok(q)
}

/// Inspection probability on every edge, aligned with `net.edges()`.
pub fn inspection_probabilities(
    net: &TransitNetwork,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
) -> Result<Vec<f64>> {
    if plan.masses().len() != net.edge_count() {
        return Err(Error::InvalidInput("monitoring plan does not match the network".into()));
    }
    check_flows(net, flows)?;
    (0..net.edge_count())
        .map(|e| edge_inspection_prob(net, plan, flows, e))
        .collect()
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::InvalidInput(format!("fine must be finite and non-negative, got {alpha}")));
    }
    Ok(())
}

/// Per-edge prices, aligned with `net.edges()`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgePriceTable {
    prices: Vec<f64>,
    source: PlanKind,
}

impl EdgePriceTable {
    pub fn new(net: &TransitNetwork, prices: Vec<f64>, source: PlanKind) -> Result<Self> {
        if prices.len() != net.edge_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} edge prices, got {}",
                net.edge_count(),
                prices.len()
            )));
        }
        if prices.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidInput("edge prices must be finite and non-negative".into()));
        }
        Ok(EdgePriceTable { prices, source })
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn get(&self, edge: usize) -> f64 {
        self.prices[edge]
    }

    /// Monitoring plan the prices were derived from.
    pub fn source(&self) -> PlanKind {
        self.source
    }
}

/// Edge prices `alpha * phi(lambda_e) / flow_e`.
pub fn ic_edge_prices(
    net: &TransitNetwork,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    alpha: f64,
) -> Result<EdgePriceTable> {
    check_alpha(alpha)?;
    let q = inspection_probabilities(net, plan, flows)?;
    EdgePriceTable::new(net, q.iter().map(|q| alpha * q).collect(), plan.kind())
}

/// Fine that makes total compliant revenue equal `target_revenue` when
/// revenue is `alpha * lambda_total` (identity technology only).
pub fn calibrate_alpha(target_revenue: f64, plan: &MonitoringPlan) -> Result<f64> {
    if !plan.technology().is_identity() {
        return Err(Error::NonLinearTechnology(plan.technology().to_string()));
    }
    alpha_from_totals(target_revenue, plan.total())
}

/// `target_revenue / lambda_total`.
pub fn alpha_from_totals(target_revenue: f64, lambda_total: f64) -> Result<f64> {
    if !(target_revenue.is_finite() && target_revenue >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "target revenue must be finite and non-negative, got {target_revenue}"
        )));
    }
    if !(lambda_total > 0.0) {
        return Err(Error::InvalidInput("total inspector mass is zero".into()));
    }
    Ok(target_revenue / lambda_total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line3() -> TransitNetwork {
        TransitNetwork::from_edges(&[("a", "b"), ("b", "c")]).unwrap()
    }

    #[test]
    fn inspection_probability_formula() {
        let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
        let plan = MonitoringPlan::new(&net, vec![2.0], MonitoringTechnology::identity()).unwrap();
        let flows = EdgeFlows::from_values(&net, vec![100.0]).unwrap();
        assert_eq!(edge_inspection_prob(&net, &plan, &flows, 0).unwrap(), 0.02);
        let plan = MonitoringPlan::new(&net, vec![45.60], MonitoringTechnology::identity()).unwrap();
        let flows = EdgeFlows::from_values(&net, vec![45.60]).unwrap();
        assert_eq!(edge_inspection_prob(&net, &plan, &flows, 0).unwrap(), 1.0);
    }

    #[test]
    fn zero_mass_and_zero_flow_are_rejected() {
        let net = line3();
        assert!(MonitoringPlan::new(&net, vec![1.0, 0.0], MonitoringTechnology::identity()).is_err());
        let plan = uniform_plan(&net, 2.0, MonitoringTechnology::identity()).unwrap();
        let flows = EdgeFlows::from_values(&net, vec![1.0, 0.0]).unwrap();
        assert!(matches!(ic_edge_prices(&net, &plan, &flows, 1.0), Err(Error::ZeroFlow(..))));
        assert!(proportional_plan(&net, &flows, 1.0, MonitoringTechnology::identity()).is_err());
    }

    #[test]
    fn proportional_split() {
        let net = line3();
        let flows = EdgeFlows::from_values(&net, vec![75.0, 25.0]).unwrap();
        let plan = proportional_plan(&net, &flows, 4.0, MonitoringTechnology::identity()).unwrap();
        assert_eq!(plan.masses(), &[3.0, 1.0]);
        assert_eq!(plan.total(), 4.0);
        let prices = ic_edge_prices(&net, &plan, &flows, 10.0).unwrap();
        assert_eq!(prices.prices(), &[0.4, 0.4]);
    }

    #[test]
    fn uniform_mass_per_edge() {
        let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
        let plan = uniform_plan(&net, 7.5, MonitoringTechnology::identity()).unwrap();
        assert_eq!(plan.masses(), &[7.5]);
        assert!(uniform_plan(&net, 0.0, MonitoringTechnology::identity()).is_err());
    }

    #[test]
    fn zero_fine_gives_zero_prices() {
        let net = line3();
        let plan = uniform_plan(&net, 2.0, MonitoringTechnology::identity()).unwrap();
        let flows = EdgeFlows::from_values(&net, vec![3.0, 5.0]).unwrap();
        let prices = ic_edge_prices(&net, &plan, &flows, 0.0).unwrap();
        assert!(prices.prices().iter().all(|p| *p == 0.0));
    }

    #[test]
    fn calibration_needs_identity() {
        let net = line3();
        let plan = uniform_plan(&net, 2.0, MonitoringTechnology::power(0.5).unwrap()).unwrap();
        assert!(matches!(calibrate_alpha(10.0, &plan), Err(Error::NonLinearTechnology(_))));
        let plan = uniform_plan(&net, 4013.0, MonitoringTechnology::identity()).unwrap();
        assert_eq!(calibrate_alpha(0.0, &plan).unwrap(), 0.0);
    }
}
