use serde::Serialize;

use crate::error::{Error, Result};
use crate::monitoring::{check_alpha, EdgePriceTable, MonitoringPlan, PlanKind};
use crate::network::{assign_flows, assign_flows_with_cost, distances_to, DemandMatrix, EdgeFlows, TransitNetwork, PairRoutes};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct EquilibriumConfig {
    pub max_iterations: usize,
    /// Largest edge-flow change accepted as converged.
    pub tolerance: f64,
    /// Weight on the new assignment once oscillation is detected.
    pub damping: f64,
}

impl Default for EquilibriumConfig {
    fn default() -> Self {
        EquilibriumConfig {
            max_iterations: 200,
            tolerance: 1e-9,
            damping: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EquilibriumOutcome {
    pub flows: EdgeFlows,
    /// Per-edge prices; `+inf` on edges nobody rides.
    pub prices: Vec<f64>,
    /// Edges left without flow, priced out of every route.
    pub unused_edges: Vec<usize>,
    pub source: PlanKind,
    pub iterations: usize,
    pub residual: f64,
    pub damped: bool,
    /// Largest amount by which a demanded pair's routed price exceeds its
    /// cheapest path price under the final edge prices.
    pub path_price_gap: f64,
}

impl EquilibriumOutcome {
    /// Prices as a table; fails if some edge carries no flow.
    pub fn price_table(&self, net: &TransitNetwork) -> Result<EdgePriceTable> {
        if let Some(&e) = self.unused_edges.first() {
            let (a, b) = net.edge_label(e);
            return Err(Error::ZeroFlow(a, b));
        }
        EdgePriceTable::new(net, self.prices.clone(), self.source)
    }
}

/// Edge prices from flows; an unused edge is priced out (`+inf`).
fn edge_prices(plan: &MonitoringPlan, flows: &EdgeFlows, alpha: f64) -> Vec<f64> {
    flows
        .values()
        .iter()
        .zip(plan.masses())
        .map(|(f, m)| {
            if *f > 0.0 {
                alpha * plan.technology().value(*m) / f
            } else {
                f64::INFINITY
            }
        })
        .collect()
}

/// Alternates between pricing edges from flows and routing every pair on its
/// cheapest path, starting from fewest-hop routing.
pub fn compute_ic_equilibrium(
    net: &TransitNetwork,
    demand: &DemandMatrix,
    plan: &MonitoringPlan,
    alpha: f64,
    cfg: &EquilibriumConfig,
) -> Result<EquilibriumOutcome> {
    check_alpha(alpha)?;
    if plan.masses().len() != net.edge_count() {
        return Err(Error::InvalidInput("monitoring plan does not match the network".into()));
    }
    if !(cfg.damping > 0.0 && cfg.damping <= 1.0) {
        return Err(Error::InvalidInput("damping must lie in (0, 1]".into()));
    }
    let mut flows = assign_flows(net, demand)?;
    let mut older: Option<EdgeFlows> = None;
    let mut damped = false;
    let mut residual = f64::INFINITY;
    for it in 1..=cfg.max_iterations {
        let prices = edge_prices(plan, &flows, alpha);
        let routed = assign_flows_with_cost(net, demand, &prices)?;
        let next = if damped {
            let w = cfg.damping;
            let mixed = flows
                .values()
                .iter()
                .zip(routed.values())
                .map(|(a, b)| (1.0 - w) * a + w * b)
                .collect();
            EdgeFlows::from_values(net, mixed)?
        } else {
            routed
        };
        residual = next.max_abs_diff(&flows);
        if residual <= cfg.tolerance {
            return finish(net, demand, plan, alpha, next, it, residual, damped);
        }
        if !damped && older.as_ref().is_some_and(|o| o.max_abs_diff(&next) <= cfg.tolerance) {
            log::info!("flow oscillation detected at iteration {it}; damping");
            damped = true;
        }
        older = Some(std::mem::replace(&mut flows, next));
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iterations,
        residual,
        oscillating: damped,
    })
}

#[allow(clippy::too_many_arguments)]
fn finish(
    net: &TransitNetwork,
    demand: &DemandMatrix,
    plan: &MonitoringPlan,
    alpha: f64,
    flows: EdgeFlows,
    iterations: usize,
    residual: f64,
    damped: bool,
) -> Result<EquilibriumOutcome> {
    let raw = edge_prices(plan, &flows, alpha);
    let unused_edges: Vec<usize> = (0..raw.len()).filter(|&e| !raw[e].is_finite()).collect();
    // Routed price: the canonical cheapest route under the final prices
    // against the exact cheapest price.
    let n = net.station_count();
    let dense = demand.dense(net)?;
    let wanted = |a: crate::network::Node, b: crate::network::Node| {
        dense[a.index() * n + b.index()] > 0.0 || dense[b.index() * n + a.index()] > 0.0
    };
    let routes = PairRoutes::compute(net, &raw, wanted);
    let mut gap: f64 = 0.0;
    for b in net.nodes() {
        let dist = distances_to(net, b, &raw);
        for a in net.nodes().take_while(|a| *a < b) {
            if !wanted(a, b) {
                continue;
            }
            if let Some(p) = routes.canonical(a, b) {
                let routed: f64 = p.edges(net).map(|e| raw[e]).sum();
                gap = gap.max(routed - dist[a.index()]);
            }
        }
    }
    Ok(EquilibriumOutcome {
        flows,
        prices: raw,
        unused_edges,
        source: plan.kind(),
        iterations,
        residual,
        damped,
        path_price_gap: gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitoring::uniform_plan;
    use crate::technology::MonitoringTechnology;

    #[test]
    fn single_edge_price() {
        let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
        let demand = DemandMatrix::new("AM").with("a", "b", 10.0).unwrap();
        let plan = uniform_plan(&net, 1.0, MonitoringTechnology::identity()).unwrap();
        let out = compute_ic_equilibrium(&net, &demand, &plan, 50.0, &EquilibriumConfig::default()).unwrap();
        assert_eq!(out.prices, vec![5.0]);
        assert!(out.unused_edges.is_empty());
        assert_eq!(out.price_table(&net).unwrap().prices(), &[5.0]);
        assert_eq!(out.iterations, 1);
    }

    #[test]
    fn tree_converges_immediately() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("b", "d")]).unwrap();
        let demand = DemandMatrix::new("AM")
            .with("a", "c", 4.0)
            .unwrap()
            .with("d", "a", 2.0)
            .unwrap()
            .with("c", "d", 1.0)
            .unwrap();
        let plan = uniform_plan(&net, 3.0, MonitoringTechnology::identity()).unwrap();
        let out = compute_ic_equilibrium(&net, &demand, &plan, 1.0, &EquilibriumConfig::default()).unwrap();
        assert_eq!(out.iterations, 1);
        assert_eq!(out.flows, assign_flows(&net, &demand).unwrap());
    }

    #[test]
    fn unused_edge_is_priced_out() {
        // Hop routing never uses the long way round the triangle's third side
        // when no pair needs it.
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("a", "c")]).unwrap();
        let demand = DemandMatrix::new("AM").with("a", "b", 3.0).unwrap().with("b", "c", 1.0).unwrap();
        let plan = uniform_plan(&net, 3.0, MonitoringTechnology::identity()).unwrap();
        let out = compute_ic_equilibrium(&net, &demand, &plan, 1.0, &EquilibriumConfig::default()).unwrap();
        let ac = net.edge_between(net.node(&"a".into()).unwrap(), net.node(&"c".into()).unwrap()).unwrap();
        assert_eq!(out.unused_edges, vec![ac]);
        assert!(out.prices[ac].is_infinite());
        assert!(matches!(out.price_table(&net), Err(Error::ZeroFlow(..))));
    }
}
