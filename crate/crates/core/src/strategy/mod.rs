//! Strategic passengers: strategy costs, best responses, incentive audits and
//! the endogenous-price equilibrium.

mod audit;
mod brute;
mod equilibrium;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitoring::{check_alpha, inspection_probabilities, MonitoringPlan};
use crate::network::{distances_to, lex_min_path, shortest_path, EdgeFlows, Node, Path, StationId, TransitNetwork};
use crate::pricing::{PriceMatrix, PricingScheme};

pub use audit::{check_incentive_compatibility, IcViolation, ViolationRow};
pub use brute::{brute_force_best_response, BRUTE_FORCE_MAX_PATHS, BRUTE_FORCE_MAX_STATIONS};
pub use equilibrium::{compute_ic_equilibrium, EquilibriumConfig, EquilibriumOutcome};

use search::{expand_walk, CostToGo, ExactSearch, Found};

/// Costs within this margin of the full ticket count as ties, and ties go to
/// the full ticket.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DeviationModel {
    /// At most one ticket, bought for any sub-trip.
    SingleTicket,
    /// Any number of tickets on disjoint sub-trips.
    #[default]
    MultiTicket,
}

impl fmt::Display for DeviationModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            DeviationModel::SingleTicket => "single-ticket",
            DeviationModel::MultiTicket => "multi-ticket",
        })
    }
}

impl std::str::FromStr for DeviationModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single-ticket" | "single" => Ok(DeviationModel::SingleTicket),
            "multi-ticket" | "multi" => Ok(DeviationModel::MultiTicket),
            _ => Err(Error::InvalidInput(format!("unknown deviation model `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Full,
    Partial,
    None,
}

/// A route plus the tickets bought along it.
///
/// Tickets are stored as `(start, end)` positions on the path, `start < end`,
/// sorted and non-overlapping (they may touch).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PassengerStrategy {
    path: Path,
    segments: Vec<(usize, usize)>,
}

impl PassengerStrategy {
    /// Builds a strategy from ticket station pairs, in either orientation.
    pub fn new(net: &TransitNetwork, path: Path, tickets: &[(StationId, StationId)]) -> Result<Self> {
        let position = |s: &StationId| -> Result<usize> {
            let n = net.node(s)?;
            path.nodes()
                .iter()
                .position(|m| *m == n)
                .ok_or_else(|| Error::InvalidStrategy(format!("ticket end point `{s}` is not on the path")))
        };
        let mut segments = Vec::with_capacity(tickets.len());
        for (a, b) in tickets {
            let (i, j) = (position(a)?, position(b)?);
            if i == j {
                return Err(Error::InvalidStrategy(format!("empty ticket `{a}`-`{b}`")));
            }
            segments.push((i.min(j), i.max(j)));
        }
        PassengerStrategy::from_segments(path, segments)
    }

    pub fn from_segments(path: Path, mut segments: Vec<(usize, usize)>) -> Result<Self> {
        segments.sort_unstable();
        let mut last = 0;
        for &(i, j) in &segments {
            if i >= j || j > path.hops() {
                return Err(Error::InvalidStrategy(format!("bad ticket segment ({i}, {j})")));
            }
            if i < last {
                return Err(Error::InvalidStrategy("ticket segments overlap".into()));
            }
            last = j;
        }
        Ok(PassengerStrategy { path, segments })
    }

    pub fn full_ticket(path: Path) -> Self {
        let segments = if path.hops() > 0 { vec![(0, path.hops())] } else { Vec::new() };
        PassengerStrategy { path, segments }
    }

    pub fn no_ticket(path: Path) -> Self {
        PassengerStrategy {
            path,
            segments: Vec::new(),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn segments(&self) -> &[(usize, usize)] {
        &self.segments
    }

    pub fn tickets(&self) -> Vec<(Node, Node)> {
        let nodes = self.path.nodes();
        self.segments.iter().map(|&(i, j)| (nodes[i], nodes[j])).collect()
    }

    pub fn ticket_ids(&self, net: &TransitNetwork) -> Vec<(StationId, StationId)> {
        self.tickets()
            .into_iter()
            .map(|(a, b)| (net.station(a).clone(), net.station(b).clone()))
            .collect()
    }

    pub fn covered_hops(&self) -> usize {
        self.segments.iter().map(|(i, j)| j - i).sum()
    }

    pub fn coverage(&self) -> Coverage {
        match self.covered_hops() {
            0 => Coverage::None,
            c if c == self.path.hops() => Coverage::Full,
            _ => Coverage::Partial,
        }
    }

    /// Whether the edge from position `k` to `k + 1` is covered.
    fn covers(&self, k: usize) -> bool {
        self.segments.iter().any(|&(i, j)| i <= k && k < j)
    }

    pub fn describe(&self, net: &TransitNetwork) -> String {
        let tickets: Vec<String> = self
            .ticket_ids(net)
            .iter()
            .map(|(a, b)| format!("{a}-{b}"))
            .collect();
        format!(
            "path {} tickets [{}]",
            self.path.display(net),
            tickets.join(", ")
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostBreakdown {
    pub outlay: f64,
    pub exposure: f64,
    pub total: f64,
}

impl CostBreakdown {
    pub fn new(outlay: f64, exposure: f64) -> Self {
        CostBreakdown {
            outlay,
            exposure,
            total: outlay + exposure,
        }
    }
}

/// Prices and per-edge expected fines for one network, ready for repeated
/// best-response queries.
pub struct StrategyEngine<'a> {
    pub(crate) net: &'a TransitNetwork,
    pub(crate) evade: Vec<f64>,
    pub(crate) prices: PriceMatrix,
    pub(crate) model: DeviationModel,
}

impl<'a> StrategyEngine<'a> {
    pub fn new(
        net: &'a TransitNetwork,
        prices: &PricingScheme,
        plan: &MonitoringPlan,
        flows: &EdgeFlows,
        alpha: f64,
        model: DeviationModel,
    ) -> Result<Self> {
        check_alpha(alpha)?;
        let q = inspection_probabilities(net, plan, flows)?;
        Ok(StrategyEngine {
            net,
            evade: q.iter().map(|q| alpha * q).collect(),
            prices: prices.to_matrix(net)?,
            model,
        })
    }

    pub(crate) fn from_parts(
        net: &'a TransitNetwork,
        evade: Vec<f64>,
        prices: PriceMatrix,
        model: DeviationModel,
    ) -> Self {
        StrategyEngine {
            net,
            evade,
            prices,
            model,
        }
    }

    pub fn network(&self) -> &TransitNetwork {
        self.net
    }

    pub fn model(&self) -> DeviationModel {
        self.model
    }

    /// Expected fine for riding each edge without a ticket.
    pub fn evasion_costs(&self) -> &[f64] {
        &self.evade
    }

    pub fn price(&self, a: Node, b: Node) -> Option<f64> {
        let p = self.prices.get(a, b);
        p.is_finite().then_some(p)
    }

    pub fn cost(&self, s: &PassengerStrategy) -> Result<CostBreakdown> {
        let mut outlay = 0.0;
        for (a, b) in s.tickets() {
            outlay += self.price(a, b).ok_or_else(|| {
                Error::MissingPrice(self.net.station(a).to_string(), self.net.station(b).to_string())
            })?;
        }
        let mut exposure = 0.0;
        for (k, e) in s.path().edges(self.net).enumerate() {
            if !s.covers(k) {
                exposure += self.evade[e];
            }
        }
        Ok(CostBreakdown::new(outlay, exposure))
    }

    fn check_pair(&self, o: Node, d: Node) -> Result<()> {
        if o == d {
            return Err(Error::SameOriginDestination(self.net.station(o).to_string()));
        }
        Ok(())
    }

    pub fn best_response(&self, o: Node, d: Node) -> Result<(PassengerStrategy, CostBreakdown)> {
        self.check_pair(o, d)?;
        let ctg = CostToGo::compute(self, d);
        self.respond(&ctg, o)
    }

    /// Best responses of several origins towards one destination, sharing the
    /// search setup.
    pub fn best_responses_to(&self, d: Node, origins: &[Node]) -> Result<Vec<(PassengerStrategy, CostBreakdown)>> {
        let ctg = CostToGo::compute(self, d);
        origins
            .iter()
            .map(|&o| {
                self.check_pair(o, d)?;
                self.respond(&ctg, o)
            })
            .collect()
    }

    /// Best-response cost from every origin to `d` (0 at `d` itself).
    pub fn best_costs_to(&self, d: Node) -> Result<Vec<f64>> {
        let ctg = CostToGo::compute(self, d);
        self.net
            .nodes()
            .map(|o| {
                if o == d {
                    return Ok(0.0);
                }
                let full = self.prices.get(o, d);
                if full <= ctg.at(0, o) + TIE_TOLERANCE {
                    return Ok(full);
                }
                let (_, cost) = self.optimum(&ctg, o)?;
                Ok(if full <= cost + TIE_TOLERANCE { full } else { cost })
            })
            .collect()
    }

    fn respond(&self, ctg: &CostToGo, o: Node) -> Result<(PassengerStrategy, CostBreakdown)> {
        let d = ctg.dest;
        let full = self.prices.get(o, d);
        if full <= ctg.at(0, o) + TIE_TOLERANCE {
            return self.full_ticket(o, d);
        }
        let (found, cost) = self.optimum(ctg, o)?;
        if full <= cost + TIE_TOLERANCE {
            return self.full_ticket(o, d);
        }
        let s = PassengerStrategy {
            path: Path::from_trusted(found.nodes),
            segments: found.segments,
        };
        let breakdown = self.cost(&s)?;
        Ok((s, breakdown))
    }

    fn full_ticket(&self, o: Node, d: Node) -> Result<(PassengerStrategy, CostBreakdown)> {
        let path = shortest_path(self.net, self.net.station(o), self.net.station(d), None)?;
        let s = PassengerStrategy::full_ticket(path);
        let breakdown = self.cost(&s)?;
        Ok((s, breakdown))
    }

    /// Cheapest strategy other than the tie rule, with its cost.
    fn optimum(&self, ctg: &CostToGo, o: Node) -> Result<(Found, f64)> {
        let d = ctg.dest;
        if let Some(found) = expand_walk(self, ctg, o) {
            let cost = self.found_cost(&found);
            return Ok((found, cost));
        }
        // Incumbent: ride the cheapest evasion route without tickets.
        let dist = distances_to(self.net, d, &self.evade);
        let incumbent = lex_min_path(self.net, o, d, &self.evade, &dist).map(|p| {
            let found = Found {
                nodes: p.nodes().to_vec(),
                segments: Vec::new(),
            };
            (self.found_cost(&found), found)
        });
        let (cost, found) = ExactSearch::new(self, ctg, incumbent)
            .run(o)
            .ok_or_else(|| Error::Unreachable(self.net.station(o).to_string(), self.net.station(d).to_string()))?;
        Ok((found, cost))
    }

    fn found_cost(&self, f: &Found) -> f64 {
        let s = PassengerStrategy {
            path: Path::from_trusted(f.nodes.clone()),
            segments: f.segments.clone(),
        };
        self.cost(&s).map(|c| c.total).unwrap_or(f64::INFINITY)
    }
}

pub fn strategy_cost(
    net: &TransitNetwork,
    s: &PassengerStrategy,
    prices: &PricingScheme,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    alpha: f64,
) -> Result<CostBreakdown> {
    StrategyEngine::new(net, prices, plan, flows, alpha, DeviationModel::MultiTicket)?.cost(s)
}

#[allow(clippy::too_many_arguments)]
pub fn best_response(
    net: &TransitNetwork,
    origin: &StationId,
    dest: &StationId,
    prices: &PricingScheme,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    alpha: f64,
    model: DeviationModel,
) -> Result<(PassengerStrategy, CostBreakdown)> {
    let (o, d) = (net.node(origin)?, net.node(dest)?);
    StrategyEngine::new(net, prices, plan, flows, alpha, model)?.best_response(o, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::SchemeKind;

    fn path(net: &TransitNetwork, ids: &[&str]) -> Path {
        Path::new(net, ids.iter().map(|s| net.node_of(s).unwrap()).collect()).unwrap()
    }

    fn engine<'a>(net: &'a TransitNetwork, evade: &[f64], prices: &PricingScheme, model: DeviationModel) -> StrategyEngine<'a> {
        StrategyEngine::from_parts(net, evade.to_vec(), prices.to_matrix(net).unwrap(), model)
    }

    #[test]
    fn strategy_validation() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("c", "d")]).unwrap();
        let p = path(&net, &["a", "b", "c", "d"]);
        assert!(PassengerStrategy::new(&net, p.clone(), &[("a".into(), "c".into()), ("b".into(), "d".into())]).is_err());
        assert!(PassengerStrategy::new(&net, p.clone(), &[("a".into(), "x".into())]).is_err());
        let s = PassengerStrategy::new(&net, p, &[("c".into(), "a".into()), ("c".into(), "d".into())]).unwrap();
        assert_eq!(s.segments(), &[(0, 2), (2, 3)]);
        assert_eq!(s.coverage(), Coverage::Full);
    }

    #[test]
    fn cost_breakdown_terms() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c")]).unwrap();
        let prices = PricingScheme::new(SchemeKind::Legacy).with("a", "c", 3.0).unwrap();
        let e = engine(&net, &[1.0, 1.0], &prices, DeviationModel::MultiTicket);
        let p = path(&net, &["a", "b", "c"]);
        let none = e.cost(&PassengerStrategy::no_ticket(p.clone())).unwrap();
        assert_eq!((none.outlay, none.exposure, none.total), (0.0, 2.0, 2.0));
        let full = e.cost(&PassengerStrategy::full_ticket(p)).unwrap();
        assert_eq!((full.outlay, full.exposure), (3.0, 0.0));
    }

    #[test]
    fn partial_ticket_undercuts_pre_adjustment_price() {
        let net = TransitNetwork::from_edges(&[("x", "y"), ("y", "z")]).unwrap();
        let prices = PricingScheme::new(SchemeKind::CappedIc)
            .with("x", "y", 0.5)
            .unwrap()
            .with("y", "z", 0.7)
            .unwrap()
            .with("x", "z", 1.4)
            .unwrap();
        let e = engine(&net, &[0.7, 0.7], &prices, DeviationModel::MultiTicket);
        let (s, c) = e.best_response(net.node_of("x").unwrap(), net.node_of("z").unwrap()).unwrap();
        assert!((c.total - 1.2).abs() < 1e-12);
        assert_eq!(s.ticket_ids(&net), vec![("x".into(), "y".into())]);
        assert_eq!(s.coverage(), Coverage::Partial);
    }

    #[test]
    fn diamond_buys_middle_ticket() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "z"), ("a", "c"), ("c", "d"), ("d", "z")]).unwrap();
        let label = |a: &str, b: &str| net.edge_between(net.node_of(a).unwrap(), net.node_of(b).unwrap()).unwrap();
        let mut evade = vec![0.0; net.edge_count()];
        evade[label("a", "b")] = 1.0;
        evade[label("b", "z")] = 1.0;
        evade[label("a", "c")] = 0.3;
        evade[label("c", "d")] = 0.2;
        evade[label("d", "z")] = 0.3;
        let prices = PricingScheme::new(SchemeKind::Legacy).with("c", "d", 0.1).unwrap();
        let e = engine(&net, &evade, &prices, DeviationModel::MultiTicket);
        let (s, c) = e.best_response(net.node_of("a").unwrap(), net.node_of("z").unwrap()).unwrap();
        assert!((c.total - 0.7).abs() < 1e-12);
        assert_eq!(s.path().display(&net), "a-c-d-z");
        assert_eq!(s.ticket_ids(&net), vec![("c".into(), "d".into())]);
    }

    #[test]
    fn single_edge_tie_prefers_ticket() {
        let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
        let prices = PricingScheme::new(SchemeKind::Legacy).with("a", "b", 1.0).unwrap();
        let (a, b) = (net.node_of("a").unwrap(), net.node_of("b").unwrap());
        let (s, _) = engine(&net, &[1.0], &prices, DeviationModel::MultiTicket).best_response(a, b).unwrap();
        assert_eq!(s.coverage(), Coverage::Full);
        let (s, c) = engine(&net, &[0.5], &prices, DeviationModel::SingleTicket).best_response(a, b).unwrap();
        assert_eq!(s.coverage(), Coverage::None);
        assert_eq!(c.total, 0.5);
        let (s, _) = engine(&net, &[0.0], &prices, DeviationModel::MultiTicket).best_response(a, b).unwrap();
        assert_eq!(s.coverage(), Coverage::None);
    }

    #[test]
    fn single_ticket_is_weaker_than_multi() {
        // Two cheap tickets on a-b and c-d, expensive fines everywhere.
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("c", "d")]).unwrap();
        let prices = PricingScheme::new(SchemeKind::Legacy)
            .with("a", "b", 0.1)
            .unwrap()
            .with("c", "d", 0.1)
            .unwrap()
            .with("b", "c", 0.1)
            .unwrap()
            .with("a", "d", 10.0)
            .unwrap();
        let (a, d) = (net.node_of("a").unwrap(), net.node_of("d").unwrap());
        let (_, multi) = engine(&net, &[5.0; 3], &prices, DeviationModel::MultiTicket).best_response(a, d).unwrap();
        let (_, single) = engine(&net, &[5.0; 3], &prices, DeviationModel::SingleTicket).best_response(a, d).unwrap();
        assert!((multi.total - 0.3).abs() < 1e-12);
        assert!((single.total - 10.0).abs() < 1e-12);
    }

    #[test]
    fn relaxed_walk_that_revisits_falls_back_to_exact_search() {
        // Ticket a-c is cheap, but from c the only way to z without fines
        // runs back through b. The relaxation would ride a=>c then c-b-z.
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("b", "z")]).unwrap();
        let label = |a: &str, b: &str| net.edge_between(net.node_of(a).unwrap(), net.node_of(b).unwrap()).unwrap();
        let mut evade = vec![0.0; net.edge_count()];
        evade[label("a", "b")] = 5.0;
        evade[label("b", "c")] = 0.0;
        evade[label("b", "z")] = 1.0;
        let prices = PricingScheme::new(SchemeKind::Legacy)
            .with("a", "c", 0.1)
            .unwrap()
            .with("a", "z", 9.0)
            .unwrap()
            .with("a", "b", 3.0)
            .unwrap();
        let e = engine(&net, &evade, &prices, DeviationModel::MultiTicket);
        let (s, c) = e.best_response(net.node_of("a").unwrap(), net.node_of("z").unwrap()).unwrap();
        assert_eq!(s.path().display(&net), "a-b-z");
        assert!((c.total - 4.0).abs() < 1e-12);
    }
}
