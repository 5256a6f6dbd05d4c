use rayon::prelude::*;
use serde::Serialize;

use super::{CostBreakdown, DeviationModel, PassengerStrategy, StrategyEngine};
use crate::error::{Error, Result};
use crate::monitoring::MonitoringPlan;
use crate::network::{DemandMatrix, EdgeFlows, Node, StationId, TransitNetwork};
use crate::pricing::PricingScheme;

/// A pair whose full ticket is strictly undercut by another strategy.
#[derive(Debug, Clone)]
pub struct IcViolation {
    pub origin: StationId,
    pub destination: StationId,
    pub price: f64,
    pub best_cost: f64,
    pub witness: PassengerStrategy,
    pub witness_cost: CostBreakdown,
}

impl IcViolation {
    pub fn gap(&self) -> f64 {
        self.price - self.best_cost
    }
}

/// Flat form of a violation for tables and JSON.
#[derive(Debug, Clone, Serialize)]
pub struct ViolationRow {
    pub origin: String,
    pub destination: String,
    pub price: f64,
    pub best_cost: f64,
    pub witness: String,
}

impl IcViolation {
    pub fn row(&self, net: &TransitNetwork) -> ViolationRow {
        ViolationRow {
            origin: self.origin.to_string(),
            destination: self.destination.to_string(),
            price: self.price,
            best_cost: self.best_cost,
            witness: self.witness.describe(net),
        }
    }
}

/// Audits every unordered pair (or, with `demand`, every pair demanded in
/// either direction) against the best response towards the larger station id.
///
/// Prices and fines are direction-symmetric, so one direction per pair
/// suffices. A pair with no price at all is reported as missing.
#[allow(clippy::too_many_arguments)]
pub fn check_incentive_compatibility(
    net: &TransitNetwork,
    prices: &PricingScheme,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    alpha: f64,
    model: DeviationModel,
    demand: Option<&DemandMatrix>,
    tolerance: f64,
) -> Result<Vec<IcViolation>> {
    let engine = StrategyEngine::new(net, prices, plan, flows, alpha, model)?;
    let n = net.station_count();
    let wanted = match demand {
        Some(d) => {
            let dense = d.dense(net)?;
            Some(dense)
        }
        None => None,
    };
    let is_wanted = |a: Node, b: Node| match &wanted {
        Some(w) => w[a.index() * n + b.index()] > 0.0 || w[b.index() * n + a.index()] > 0.0,
        None => true,
    };
    let mut groups: Vec<(Node, Vec<Node>)> = Vec::new();
    for b in net.nodes() {
        let origins: Vec<Node> = net.nodes().take_while(|a| *a < b).filter(|a| is_wanted(*a, b)).collect();
        if !origins.is_empty() {
            groups.push((b, origins));
        }
    }
    for (b, origins) in &groups {
        for a in origins {
            if engine.price(*a, *b).is_none() {
                return Err(Error::MissingPrice(net.station(*a).to_string(), net.station(*b).to_string()));
            }
        }
    }
    let found: Vec<Vec<IcViolation>> = groups
        .par_iter()
        .map(|(b, origins)| {
            let responses = engine.best_responses_to(*b, origins)?;
            let mut out = Vec::new();
            for (a, (s, c)) in origins.iter().zip(responses) {
                let price = engine.price(*a, *b).expect("checked above");
                if c.total < price - tolerance {
                    out.push(IcViolation {
                        origin: net.station(*a).clone(),
                        destination: net.station(*b).clone(),
                        price,
                        best_cost: c.total,
                        witness: s,
                        witness_cost: c,
                    });
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(found.into_iter().flatten().collect())
}
