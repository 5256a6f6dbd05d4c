//! Origin-destination price schemes: legacy tariffs, incentive-compatible
//! trip prices and legacy-capped adjustments.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitoring::{check_alpha, inspection_probabilities, EdgePriceTable, MonitoringPlan, PlanKind};
use crate::network::{distances_to, DemandMatrix, EdgeFlows, Node, StationId, TransitNetwork};
use crate::strategy::{DeviationModel, StrategyEngine};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeKind {
    #[serde(rename = "legacy")]
    Legacy,
    #[serde(rename = "ic-uniform")]
    IcUniform,
    #[serde(rename = "ic-proportional")]
    IcProportional,
    #[serde(rename = "ic-explicit")]
    IcExplicit,
    #[serde(rename = "capped-ic")]
    CappedIc,
}

impl SchemeKind {
    pub fn is_ic(self) -> bool {
        matches!(
            self,
            SchemeKind::IcUniform | SchemeKind::IcProportional | SchemeKind::IcExplicit
        )
    }

    pub(crate) fn from_plan(kind: PlanKind) -> Self {
        match kind {
            PlanKind::Uniform => SchemeKind::IcUniform,
            PlanKind::Proportional => SchemeKind::IcProportional,
            PlanKind::Explicit => SchemeKind::IcExplicit,
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            SchemeKind::Legacy => "legacy",
            SchemeKind::IcUniform => "ic-uniform",
            SchemeKind::IcProportional => "ic-proportional",
            SchemeKind::IcExplicit => "ic-explicit",
            SchemeKind::CappedIc => "capped-ic",
        })
    }
}

fn canonical(a: &StationId, b: &StationId) -> (StationId, StationId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Ticket prices for unordered station pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PricingScheme {
    kind: SchemeKind,
    prices: BTreeMap<(StationId, StationId), f64>,
}

impl PricingScheme {
    pub fn new(kind: SchemeKind) -> Self {
        PricingScheme {
            kind,
            prices: BTreeMap::new(),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: SchemeKind) -> Self {
        self.kind = kind;
        self
    }

    /// Sets the price for both directions of `a`-`b`.
    pub fn insert(&mut self, a: &StationId, b: &StationId, price: f64) -> Result<()> {
        if a == b {
            return Err(Error::SameOriginDestination(a.to_string()));
        }
        if !(price.is_finite() && price >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "price for `{a}`-`{b}` must be finite and non-negative, got {price}"
            )));
        }
        self.prices.insert(canonical(a, b), price);
        Ok(())
    }

    pub fn with(mut self, a: &str, b: &str, price: f64) -> Result<Self> {
        self.insert(&a.into(), &b.into(), price)?;
        Ok(self)
    }

    pub fn get(&self, a: &StationId, b: &StationId) -> Option<f64> {
        self.prices.get(&canonical(a, b)).copied()
    }

    pub fn price(&self, a: &str, b: &str) -> Option<f64> {
        self.get(&a.into(), &b.into())
    }

    /// Pairs in canonical order, smaller station id first.
    pub fn iter(&self) -> impl Iterator<Item = (&StationId, &StationId, f64)> {
        self.prices.iter().map(|((a, b), p)| (a, b, *p))
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn max_abs_diff(&self, other: &PricingScheme) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, p) in &self.prices {
            match other.prices.get(k) {
                Some(q) => worst = worst.max((p - q).abs()),
                None => return f64::INFINITY,
            }
        }
        if other.prices.len() != self.prices.len() {
            return f64::INFINITY;
        }
        worst
    }

    pub(crate) fn to_matrix(&self, net: &TransitNetwork) -> Result<PriceMatrix> {
        let mut m = PriceMatrix::missing(net.station_count());
        for (a, b, p) in self.iter() {
            m.set(net.node(a)?, net.node(b)?, p);
        }
        Ok(m)
    }

    pub(crate) fn from_matrix(net: &TransitNetwork, m: &PriceMatrix, kind: SchemeKind) -> Self {
        let mut prices = BTreeMap::new();
        for b in net.nodes() {
            for a in net.nodes().take_while(|a| *a < b) {
                let p = m.get(a, b);
                if p.is_finite() {
                    prices.insert((net.station(a).clone(), net.station(b).clone()), p);
                }
            }
        }
        PricingScheme { kind, prices }
    }
}

/// Dense symmetric price lookup; missing prices are `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct PriceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl PriceMatrix {
    pub(crate) fn missing(n: usize) -> Self {
        PriceMatrix {
            n,
            values: vec![f64::INFINITY; n * n],
        }
    }

    pub(crate) fn get(&self, a: Node, b: Node) -> f64 {
        self.values[a.index() * self.n + b.index()]
    }

    pub(crate) fn set(&mut self, a: Node, b: Node, p: f64) {
        self.values[a.index() * self.n + b.index()] = p;
        self.values[b.index() * self.n + a.index()] = p;
    }

    pub(crate) fn row(&self, a: Node) -> &[f64] {
        &self.values[a.index() * self.n..(a.index() + 1) * self.n]
    }
}

/// Cheapest path sum of edge prices for every station pair.
pub fn od_ic_prices(net: &TransitNetwork, edge_prices: &EdgePriceTable) -> Result<PricingScheme> {
    let m = ic_matrix(net, edge_prices.prices())?;
    Ok(PricingScheme::from_matrix(net, &m, SchemeKind::from_plan(edge_prices.source())))
}

pub(crate) fn ic_matrix(net: &TransitNetwork, edge_prices: &[f64]) -> Result<PriceMatrix> {
    if edge_prices.len() != net.edge_count() {
        return Err(Error::InvalidInput("edge prices do not match the network".into()));
    }
    let mut m = PriceMatrix::missing(net.station_count());
    for b in net.nodes() {
        let dist = distances_to(net, b, edge_prices);
        for a in net.nodes().take_while(|a| *a < b) {
            m.set(a, b, dist[a.index()]);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapConfig {
    pub max_iterations: usize,
    pub tolerance: f64,
    pub model: DeviationModel,
}

impl Default for CapConfig {
    fn default() -> Self {
        CapConfig {
            max_iterations: 100,
            tolerance: 1e-9,
            model: DeviationModel::MultiTicket,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CapOutcome {
    /// Fixed point, tagged capped-ic.
    pub scheme: PricingScheme,
    /// Pairwise minimum of legacy and incentive-compatible prices.
    pub initial: PricingScheme,
    /// Number of pairs lowered in each adjustment round that changed something.
    pub rounds: Vec<usize>,
}

/// Caps incentive-compatible trip prices at the legacy tariff, then lowers
/// every price that some cheaper strategy undercuts, all pairs at once, until
/// nothing moves.
pub fn cap_and_adjust(
    net: &TransitNetwork,
    legacy: &PricingScheme,
    edge_prices: &EdgePriceTable,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    alpha: f64,
    cfg: &CapConfig,
) -> Result<CapOutcome> {
    check_alpha(alpha)?;
    let q = inspection_probabilities(net, plan, flows)?;
    let evade: Vec<f64> = q.iter().map(|q| alpha * q).collect();
    let ic = ic_matrix(net, edge_prices.prices())?;
    let legacy_m = legacy.to_matrix(net)?;
    let mut current = PriceMatrix::missing(net.station_count());
    let pairs: Vec<(Node, Node)> = net
        .nodes()
        .flat_map(|b| net.nodes().take_while(move |a| *a < b).map(move |a| (a, b)))
        .collect();
    for &(a, b) in &pairs {
        current.set(a, b, legacy_m.get(a, b).min(ic.get(a, b)));
    }
    let initial = PricingScheme::from_matrix(net, &current, SchemeKind::CappedIc);
    let mut rounds = Vec::new();
    let mut residual = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        let engine = StrategyEngine::from_parts(net, evade.clone(), current.clone(), cfg.model);
        let targets: Vec<Node> = net.nodes().collect();
        let best: Vec<Vec<f64>> = targets
            .par_iter()
            .map(|&b| engine.best_costs_to(b))
            .collect::<Result<_>>()?;
        let mut lowered = 0;
        residual = 0.0;
        let mut next = current.clone();
        for &(a, b) in &pairs {
            let p = current.get(a, b);
            let c = best[b.index()][a.index()];
            if c < p - cfg.tolerance {
                next.set(a, b, c);
                residual = f64::max(residual, p - c);
                lowered += 1;
            }
        }
        if lowered == 0 {
            return Ok(CapOutcome {
                scheme: PricingScheme::from_matrix(net, &current, SchemeKind::CappedIc),
                initial,
                rounds,
            });
        }
        log::debug!("capped adjustment round {}: {lowered} pair(s) lowered", rounds.len() + 1);
        rounds.push(lowered);
        current = next;
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        residual,
        oscillating: false,
    })
}

/// Total revenue when every passenger buys the full ticket.
pub fn revenue_full_compliance(demand: &DemandMatrix, prices: &PricingScheme) -> Result<f64> {
    let mut total = 0.0;
    for (o, d, m) in demand.iter() {
        if m == 0.0 {
            continue;
        }
        let p = prices
            .get(o, d)
            .ok_or_else(|| Error::MissingPrice(o.to_string(), d.to_string()))?;
        total += m * p;
    }
    Ok(total)
}

/// Fine at which compliant revenue under incentive-compatible trip prices
/// reaches `target_revenue`, found by bisection. Works for any technology.
pub fn calibrate_alpha_by_revenue(
    target_revenue: f64,
    net: &TransitNetwork,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    demand: &DemandMatrix,
    tolerance: f64,
) -> Result<f64> {
    if !(target_revenue.is_finite() && target_revenue >= 0.0) {
        return Err(Error::InvalidInput("target revenue must be finite and non-negative".into()));
    }
    let q = inspection_probabilities(net, plan, flows)?;
    let revenue = |alpha: f64| -> Result<f64> {
        let prices: Vec<f64> = q.iter().map(|q| alpha * q).collect();
        let table = EdgePriceTable::new(net, prices, plan.kind())?;
        revenue_full_compliance(demand, &od_ic_prices(net, &table)?)
    };
    if target_revenue == 0.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while revenue(hi)? < target_revenue {
        hi *= 2.0;
        doublings += 1;
        if doublings > 1100 {
            return Err(Error::InvalidInput("demand generates no revenue at any fine".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if revenue(mid)? < target_revenue {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= tolerance * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitoring::ic_edge_prices;
    use crate::technology::MonitoringTechnology;

    fn scheme_net() -> (TransitNetwork, EdgeFlows, MonitoringPlan) {
        let net = TransitNetwork::from_edges(&[("x", "y"), ("y", "z")]).unwrap();
        let flows = EdgeFlows::from_values(&net, vec![10.0, 10.0]).unwrap();
        let plan = MonitoringPlan::new(&net, vec![7.0, 7.0], MonitoringTechnology::identity()).unwrap();
        (net, flows, plan)
    }

    #[test]
    fn scheme_is_symmetric() {
        let s = PricingScheme::new(SchemeKind::Legacy).with("b", "a", 2.25).unwrap();
        assert_eq!(s.price("a", "b"), Some(2.25));
        assert_eq!(s.price("b", "a"), Some(2.25));
        assert!(PricingScheme::new(SchemeKind::Legacy).with("a", "b", -1.0).is_err());
    }

    #[test]
    fn ic_trip_prices_sum_along_cheapest_path() {
        let (net, flows, plan) = scheme_net();
        let edges = ic_edge_prices(&net, &plan, &flows, 1.0).unwrap();
        let s = od_ic_prices(&net, &edges).unwrap();
        assert_eq!(s.price("x", "z"), Some(1.4));
        assert_eq!(s.kind(), SchemeKind::IcExplicit);

        let tri = TransitNetwork::from_edges(&[("a", "b"), ("a", "c"), ("b", "c")]).unwrap();
        let e = EdgePriceTable::new(&tri, vec![1.0, 3.0, 1.0], PlanKind::Uniform).unwrap();
        let s = od_ic_prices(&tri, &e).unwrap();
        assert_eq!(s.price("a", "c"), Some(2.0));
    }

    #[test]
    fn cap_on_cheap_legacy_keeps_ic() {
        let (net, flows, plan) = scheme_net();
        let edges = ic_edge_prices(&net, &plan, &flows, 1.0).unwrap();
        let legacy = PricingScheme::new(SchemeKind::Legacy)
            .with("x", "y", 5.0)
            .unwrap()
            .with("y", "z", 5.0)
            .unwrap()
            .with("x", "z", 5.0)
            .unwrap();
        let out = cap_and_adjust(&net, &legacy, &edges, &plan, &flows, 1.0, &CapConfig::default()).unwrap();
        assert!(out.rounds.is_empty());
        let ic = od_ic_prices(&net, &edges).unwrap();
        assert!(out.scheme.max_abs_diff(&ic) < 1e-15);
    }

    #[test]
    fn full_compliance_revenue() {
        let s = PricingScheme::new(SchemeKind::Legacy).with("a", "b", 2.0).unwrap();
        let d = DemandMatrix::new("AM").with("a", "b", 3.0).unwrap().with("b", "a", 4.0).unwrap();
        assert_eq!(revenue_full_compliance(&d, &s).unwrap(), 14.0);
        assert_eq!(revenue_full_compliance(&d, &s.clone().with("a", "b", 4.0).unwrap()).unwrap(), 28.0);
        let missing = DemandMatrix::new("AM").with("a", "c", 1.0).unwrap();
        assert!(matches!(revenue_full_compliance(&missing, &s), Err(Error::MissingPrice(..))));
    }
}
