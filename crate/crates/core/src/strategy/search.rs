//! Best-response search.
//!
//! Relaxation first: a shortest path over "evade one edge" arcs and "buy one
//! ticket" arcs, computed backwards from the destination. Ticket arcs jump
//! between their end points, so the relaxed walk may not expand into a
//! simple path. When it does, it is optimal. When it does not, a depth-first
//! search over simple paths, bounded by the relaxed cost-to-go, finds the
//! exact optimum.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, VecDeque};

use super::{DeviationModel, StrategyEngine};
use crate::network::Node;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Step {
    Done,
    Evade { to: Node, edge: usize },
    Ticket { to: Node },
}

/// Relaxed cost-to-go from every (layer, node) state to one destination.
///
/// Multi-ticket search uses one layer. Single-ticket search uses two: layer 0
/// may still buy its ticket, layer 1 already has.
pub(crate) struct CostToGo {
    n: usize,
    layers: usize,
    pub(crate) dest: Node,
    h: Vec<f64>,
    next: Vec<Step>,
}

#[derive(PartialEq)]
struct Item {
    cost: f64,
    state: usize,
}

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) fn ticket_layer(model: DeviationModel, layer: usize) -> Option<usize> {
    match model {
        DeviationModel::MultiTicket => Some(0),
        DeviationModel::SingleTicket => (layer == 0).then_some(1),
    }
}

impl CostToGo {
    pub(crate) fn compute(engine: &StrategyEngine<'_>, dest: Node) -> Self {
        let net = engine.net;
        let n = net.station_count();
        let layers = match engine.model {
            DeviationModel::MultiTicket => 1,
            DeviationModel::SingleTicket => 2,
        };
        let mut h = vec![f64::INFINITY; layers * n];
        let mut next = vec![Step::Done; layers * n];
        let mut done = vec![false; layers * n];
        let mut heap = BinaryHeap::new();
        for l in 0..layers {
            h[l * n + dest.index()] = 0.0;
            heap.push(Item {
                cost: 0.0,
                state: l * n + dest.index(),
            });
        }
        while let Some(Item { cost, state }) = heap.pop() {
            if done[state] {
                continue;
            }
            done[state] = true;
            let (l, v) = (state / n, Node::from_index(state % n));
            for &(u, e) in net.neighbors(v) {
                let s = l * n + u.index();
                let c = cost + engine.evade[e];
                if c < h[s] {
                    h[s] = c;
                    next[s] = Step::Evade { to: v, edge: e };
                    heap.push(Item { cost: c, state: s });
                }
            }
            // Ticket arcs (l', u) -> (l, v) with ticket_layer(l') == l.
            for lp in 0..layers {
                if ticket_layer(engine.model, lp) != Some(l) {
                    continue;
                }
                for (ui, p) in engine.prices.row(v).iter().enumerate() {
                    if ui == v.index() || !p.is_finite() {
                        continue;
                    }
                    let s = lp * n + ui;
                    let c = cost + p;
                    if c < h[s] {
                        h[s] = c;
                        next[s] = Step::Ticket { to: v };
                        heap.push(Item { cost: c, state: s });
                    }
                }
            }
        }
        CostToGo {
            n,
            layers,
            dest,
            h,
            next,
        }
    }

    pub(crate) fn at(&self, layer: usize, u: Node) -> f64 {
        self.h[layer * self.n + u.index()]
    }

    /// Relaxed walk from `origin` in layer 0 as (from, step) pairs.
    fn walk(&self, engine: &StrategyEngine<'_>, origin: Node) -> Vec<(Node, Step)> {
        let mut out = Vec::new();
        let (mut l, mut u) = (0, origin);
        while u != self.dest {
            let step = self.next[l * self.n + u.index()];
            out.push((u, step));
            match step {
                Step::Done => break,
                Step::Evade { to, .. } => u = to,
                Step::Ticket { to } => {
                    l = ticket_layer(engine.model, l).expect("ticket arcs respect layers");
                    u = to;
                }
            }
            debug_assert!(out.len() <= self.layers * self.n);
        }
        out
    }
}

/// Simple path plus ticket segments given as path positions.
#[derive(Debug, Clone)]
pub(crate) struct Found {
    pub(crate) nodes: Vec<Node>,
    pub(crate) segments: Vec<(usize, usize)>,
}

/// Turns the relaxed walk into a simple path, routing each ticket leg around
/// the stations already claimed. `None` if the greedy routing gets stuck.
pub(crate) fn expand_walk(engine: &StrategyEngine<'_>, ctg: &CostToGo, origin: Node) -> Option<Found> {
    let net = engine.net;
    let walk = ctg.walk(engine, origin);
    if walk.iter().any(|(_, s)| *s == Step::Done) {
        return None;
    }
    let mut reserved = vec![false; net.station_count()];
    reserved[origin.index()] = true;
    for (_, step) in &walk {
        let to = match step {
            Step::Evade { to, .. } | Step::Ticket { to } => *to,
            Step::Done => unreachable!(),
        };
        if reserved[to.index()] {
            return None;
        }
        reserved[to.index()] = true;
    }
    let mut nodes = vec![origin];
    let mut segments = Vec::new();
    for (from, step) in walk {
        match step {
            Step::Evade { to, .. } => nodes.push(to),
            Step::Ticket { to } => {
                let route = route_avoiding(engine, from, to, &reserved)?;
                let start = nodes.len() - 1;
                for &v in &route[1..] {
                    reserved[v.index()] = true;
                    nodes.push(v);
                }
                segments.push((start, nodes.len() - 1));
            }
            Step::Done => unreachable!(),
        }
    }
    Some(Found { nodes, segments })
}

/// Fewest-hop route from `a` to `b` whose interior avoids `blocked`.
fn route_avoiding(engine: &StrategyEngine<'_>, a: Node, b: Node, blocked: &[bool]) -> Option<Vec<Node>> {
    let net = engine.net;
    let mut prev = vec![None; net.station_count()];
    let mut seen = vec![false; net.station_count()];
    seen[a.index()] = true;
    let mut queue = VecDeque::from([a]);
    while let Some(u) = queue.pop_front() {
        for &(v, _) in net.neighbors(u) {
            if seen[v.index()] || (v != b && blocked[v.index()]) {
                continue;
            }
            seen[v.index()] = true;
            prev[v.index()] = Some(u);
            if v == b {
                let mut route = vec![b];
                let mut cur = b;
                while let Some(p) = prev[cur.index()] {
                    route.push(p);
                    cur = p;
                }
                route.reverse();
                return Some(route);
            }
            queue.push_back(v);
        }
    }
    None
}

/// Exact branch-and-bound search over simple paths and ticket segments.
pub(crate) struct ExactSearch<'e, 'n> {
    engine: &'e StrategyEngine<'n>,
    ctg: &'e CostToGo,
    /// Cached lower bound for "ticket opened at c in layer l".
    open_bound: Vec<Option<f64>>,
    visited: Vec<bool>,
    path: Vec<Node>,
    segments: Vec<(usize, usize)>,
    best_cost: f64,
    best: Option<Found>,
}

impl<'e, 'n> ExactSearch<'e, 'n> {
    pub(crate) fn new(engine: &'e StrategyEngine<'n>, ctg: &'e CostToGo, incumbent: Option<(f64, Found)>) -> Self {
        let n = engine.net.station_count();
        let (best_cost, best) = match incumbent {
            Some((c, f)) => (c, Some(f)),
            None => (f64::INFINITY, None),
        };
        ExactSearch {
            engine,
            ctg,
            open_bound: vec![None; ctg.layers * n],
            visited: vec![false; n],
            path: Vec::new(),
            segments: Vec::new(),
            best_cost,
            best,
        }
    }

    pub(crate) fn run(mut self, origin: Node) -> Option<(f64, Found)> {
        self.visited[origin.index()] = true;
        self.path.push(origin);
        self.go(origin, 0, None, 0.0);
        let cost = self.best_cost;
        self.best.map(|f| (cost, f))
    }

    fn bound_open(&mut self, layer: usize, start: Node) -> f64 {
        let n = self.engine.net.station_count();
        let key = layer * n + start.index();
        if let Some(b) = self.open_bound[key] {
            return b;
        }
        let b = match ticket_layer(self.engine.model, layer) {
            None => f64::INFINITY,
            Some(l2) => self
                .engine
                .prices
                .row(start)
                .iter()
                .enumerate()
                .filter(|(v, _)| *v != start.index())
                .map(|(v, p)| p + self.ctg.at(l2, Node::from_index(v)))
                .fold(f64::INFINITY, f64::min),
        };
        self.open_bound[key] = Some(b);
        b
    }

    fn record(&mut self, cost: f64) {
        if cost < self.best_cost {
            self.best_cost = cost;
            self.best = Some(Found {
                nodes: self.path.clone(),
                segments: self.segments.clone(),
            });
        }
    }

    fn go(&mut self, u: Node, layer: usize, open: Option<(Node, usize)>, cost: f64) {
        let engine = self.engine;
        let dest = self.ctg.dest;
        let here = self.path.len() - 1;
        if let Some((start, pos)) = open {
            if u != start {
                let p = engine.prices.get(start, u);
                if let (true, Some(l2)) = (p.is_finite(), ticket_layer(engine.model, layer)) {
                    self.segments.push((pos, here));
                    if u == dest {
                        self.record(cost + p);
                    } else {
                        self.go(u, l2, None, cost + p);
                    }
                    self.segments.pop();
                }
            }
            if u == dest {
                return;
            }
            if cost + self.bound_open(layer, start) >= self.best_cost {
                return;
            }
            for &(v, _) in engine.net.neighbors(u) {
                if self.visited[v.index()] {
                    continue;
                }
                self.enter(v);
                self.go(v, layer, open, cost);
                self.leave(v);
            }
            return;
        }
        if u == dest {
            self.record(cost);
            return;
        }
        if cost + self.ctg.at(layer, u) >= self.best_cost {
            return;
        }
        let can_buy = ticket_layer(engine.model, layer).is_some();
        for &(v, e) in engine.net.neighbors(u) {
            if self.visited[v.index()] {
                continue;
            }
            self.enter(v);
            self.go(v, layer, None, cost + engine.evade[e]);
            if can_buy {
                self.go(v, layer, Some((u, here)), cost);
            }
            self.leave(v);
        }
    }

    fn enter(&mut self, v: Node) {
        self.visited[v.index()] = true;
        self.path.push(v);
    }

    fn leave(&mut self, v: Node) {
        self.visited[v.index()] = false;
        self.path.pop();
    }
}
