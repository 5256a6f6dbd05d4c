//! Exhaustive best response over every simple path and every set of ticket
//! segments. Slow by design; used to check the fast search.

use super::{CostBreakdown, DeviationModel, PassengerStrategy, StrategyEngine, TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::monitoring::MonitoringPlan;
use crate::network::{shortest_path, EdgeFlows, Node, Path, StationId, TransitNetwork};
use crate::pricing::PricingScheme;

pub const BRUTE_FORCE_MAX_STATIONS: usize = 12;
pub const BRUTE_FORCE_MAX_PATHS: usize = 20;

pub fn brute_force_best_response(
    net: &TransitNetwork,
    origin: &StationId,
    dest: &StationId,
    prices: &PricingScheme,
    plan: &MonitoringPlan,
    flows: &EdgeFlows,
    alpha: f64,
) -> Result<(PassengerStrategy, CostBreakdown)> {
    let engine = StrategyEngine::new(net, prices, plan, flows, alpha, DeviationModel::MultiTicket)?;
    brute_force_with(&engine, net.node(origin)?, net.node(dest)?)
}

pub(crate) fn simple_paths(net: &TransitNetwork, o: Node, d: Node, limit: Option<usize>) -> Vec<Vec<Node>> {
    fn dfs(
        net: &TransitNetwork,
        u: Node,
        d: Node,
        seen: &mut Vec<bool>,
        stack: &mut Vec<Node>,
        out: &mut Vec<Vec<Node>>,
        limit: Option<usize>,
    ) {
        if limit.is_some_and(|l| out.len() > l) {
            return;
        }
        if u == d {
            out.push(stack.clone());
            return;
        }
        for &(v, _) in net.neighbors(u) {
            if !seen[v.index()] {
                seen[v.index()] = true;
                stack.push(v);
                dfs(net, v, d, seen, stack, out, limit);
                stack.pop();
                seen[v.index()] = false;
            }
        }
    }
    let mut seen = vec![false; net.station_count()];
    seen[o.index()] = true;
    let mut out = Vec::new();
    dfs(net, o, d, &mut seen, &mut vec![o], &mut out, limit);
    out
}

/// All ways to place non-overlapping tickets on a path with `hops` edges.
fn segmentations(hops: usize) -> Vec<Vec<(usize, usize)>> {
    fn rec(pos: usize, hops: usize, cur: &mut Vec<(usize, usize)>, out: &mut Vec<Vec<(usize, usize)>>) {
        if pos == hops {
            out.push(cur.clone());
            return;
        }
        // Ride the next edge uncovered.
        rec(pos + 1, hops, cur, out);
        for end in pos + 1..=hops {
            cur.push((pos, end));
            rec(end, hops, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, hops, &mut Vec::new(), &mut out);
    out
}

pub(crate) fn brute_force_with(
    engine: &StrategyEngine<'_>,
    o: Node,
    d: Node,
) -> Result<(PassengerStrategy, CostBreakdown)> {
    let net = engine.network();
    if o == d {
        return Err(Error::SameOriginDestination(net.station(o).to_string()));
    }
    let paths = if net.station_count() <= BRUTE_FORCE_MAX_STATIONS {
        simple_paths(net, o, d, None)
    } else {
        let p = simple_paths(net, o, d, Some(BRUTE_FORCE_MAX_PATHS));
        if p.len() > BRUTE_FORCE_MAX_PATHS {
            return Err(Error::TooLarge(format!(
                "{} stations and more than {BRUTE_FORCE_MAX_PATHS} simple paths",
                net.station_count()
            )));
        }
        p
    };
    let mut best: Option<(PassengerStrategy, CostBreakdown)> = None;
    for nodes in paths {
        let path = Path::from_trusted(nodes);
        for segs in segmentations(path.hops()) {
            let s = PassengerStrategy::from_segments(path.clone(), segs)?;
            let Ok(c) = engine.cost(&s) else { continue };
            if best.as_ref().is_none_or(|(_, b)| c.total < b.total) {
                best = Some((s, c));
            }
        }
    }
    let (s, c) = best.ok_or_else(|| Error::Unreachable(net.station(o).to_string(), net.station(d).to_string()))?;
    if let Some(full) = engine.price(o, d) {
        if full <= c.total + TIE_TOLERANCE {
            let path = shortest_path(net, net.station(o), net.station(d), None)?;
            let s = PassengerStrategy::full_ticket(path);
            let c = engine.cost(&s)?;
            return Ok((s, c));
        }
    }
    Ok((s, c))
}
