//! Station graph, origin-destination demand and shortest-path flow loading.
//!
//! Stations are stored sorted by id, so comparing node indices is the same as
//! comparing station ids. All per-edge quantities (flows, inspector masses,
//! prices) are dense vectors aligned with [`TransitNetwork::edges`].

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};

/// Relative slack used when deciding whether an edge lies on a shortest path.
pub(crate) const TIGHT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct StationId(String);

impl StationId {
    pub fn new(id: impl Into<String>) -> Self {
        StationId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for StationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for StationId {
    fn from(s: &str) -> Self {
        StationId(s.to_string())
    }
}

impl From<String> for StationId {
    fn from(s: String) -> Self {
        StationId(s)
    }
}

/// Index of a station inside one [`TransitNetwork`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Node(u32);

impl Node {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn from_index(i: usize) -> Self {
        Node(i as u32)
    }
}

/// Undirected edge with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub a: Node,
    pub b: Node,
}

impl Edge {
    pub fn new(x: Node, y: Node) -> Self {
        if x <= y {
            Edge { a: x, b: y }
        } else {
            Edge { a: y, b: x }
        }
    }

    pub fn other(&self, n: Node) -> Node {
        if n == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransitNetwork {
    stations: Vec<StationId>,
    index: HashMap<StationId, Node>,
    edges: Vec<Edge>,
    edge_index: HashMap<Edge, usize>,
    /// Neighbours sorted by node index, paired with the connecting edge index.
    adjacency: Vec<Vec<(Node, usize)>>,
}

/// Checks every [`TransitNetwork`] invariant and returns all violations found.
pub fn validate_network(
    stations: &[StationId],
    edges: &[(StationId, StationId)],
) -> std::result::Result<(), Vec<Violation>> {
    let mut violations = Vec::new();
    if stations.is_empty() {
        violations.push(Violation::NoStations);
    }
    let mut seen = BTreeSet::new();
    for s in stations {
        if s.as_str().is_empty() {
            violations.push(Violation::EmptyStationId);
        } else if !seen.insert(s) {
            violations.push(Violation::DuplicateStation(s.to_string()));
        }
    }

    let mut pairs = BTreeSet::new();
    let mut adjacency: BTreeMap<&StationId, Vec<&StationId>> = BTreeMap::new();
    for (x, y) in edges {
        let mut ok = true;
        for s in [x, y] {
            if !seen.contains(s) {
                violations.push(Violation::UnknownEdgeEndpoint {
                    edge: (x.to_string(), y.to_string()),
                    station: s.to_string(),
                });
                ok = false;
            }
        }
        if x == y {
            violations.push(Violation::SelfLoop(x.to_string()));
            continue;
        }
        let key = if x < y { (x, y) } else { (y, x) };
        if !pairs.insert(key) {
            violations.push(Violation::DuplicateEdge(key.0.to_string(), key.1.to_string()));
            continue;
        }
        if ok {
            adjacency.entry(x).or_default().push(y);
            adjacency.entry(y).or_default().push(x);
        }
    }

    if let Some(&start) = seen.iter().next() {
        let mut reached = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(s) = queue.pop_front() {
            for &t in adjacency.get(s).map(Vec::as_slice).unwrap_or(&[]) {
                if reached.insert(t) {
                    queue.push_back(t);
                }
            }
        }
        let missing: Vec<String> = seen
            .iter()
            .filter(|s| !reached.contains(*s))
            .map(|s| s.to_string())
            .collect();
        if !missing.is_empty() {
            violations.push(Violation::Disconnected(missing));
        }
    }

    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}

impl TransitNetwork {
    pub fn new(stations: Vec<StationId>, edges: Vec<(StationId, StationId)>) -> Result<Self> {
        validate_network(&stations, &edges).map_err(Error::InvalidNetwork)?;
        let mut stations = stations;
        stations.sort();
        let index: HashMap<StationId, Node> = stations
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), Node::from_index(i)))
            .collect();
        let mut edges: Vec<Edge> = edges
            .iter()
            .map(|(x, y)| Edge::new(index[x], index[y]))
            .collect();
        edges.sort();
        let edge_index = edges.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let mut adjacency = vec![Vec::new(); stations.len()];
        for (i, e) in edges.iter().enumerate() {
            adjacency[e.a.index()].push((e.b, i));
            adjacency[e.b.index()].push((e.a, i));
        }
        for list in &mut adjacency {
            list.sort();
        }
        Ok(TransitNetwork {
            stations,
            index,
            edges,
            edge_index,
            adjacency,
        })
    }

    /// Builds a network from string pairs; stations are the edge endpoints.
    pub fn from_edges<S: AsRef<str>>(edges: &[(S, S)]) -> Result<Self> {
        let mut stations = BTreeSet::new();
        let pairs: Vec<(StationId, StationId)> = edges
            .iter()
            .map(|(a, b)| {
                let a = StationId::new(a.as_ref());
                let b = StationId::new(b.as_ref());
                stations.insert(a.clone());
                stations.insert(b.clone());
                (a, b)
            })
            .collect();
        TransitNetwork::new(stations.into_iter().collect(), pairs)
    }

    pub fn station_count(&self) -> usize {
        self.stations.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn stations(&self) -> &[StationId] {
        &self.stations
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> {
        (0..self.stations.len()).map(Node::from_index)
    }

    pub fn station(&self, n: Node) -> &StationId {
        &self.stations[n.index()]
    }

    pub fn node(&self, id: &StationId) -> Result<Node> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownStation(id.to_string()))
    }

    pub fn node_of(&self, id: &str) -> Result<Node> {
        self.node(&StationId::new(id))
    }

    pub fn edge_between(&self, x: Node, y: Node) -> Option<usize> {
        self.edge_index.get(&Edge::new(x, y)).copied()
    }

    pub fn neighbors(&self, n: Node) -> &[(Node, usize)] {
        &self.adjacency[n.index()]
    }

    pub fn edge_label(&self, e: usize) -> (String, String) {
        let edge = self.edges[e];
        (self.station(edge.a).to_string(), self.station(edge.b).to_string())
    }
}

/// Simple path, stored as node indices of one network.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Path {
    nodes: Vec<Node>,
}

impl Path {
    pub fn new(net: &TransitNetwork, nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidStrategy("empty path".into()));
        }
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if n.index() >= net.station_count() {
                return Err(Error::InvalidStrategy(format!("node {} out of range", n.index())));
            }
            if !seen.insert(*n) {
                return Err(Error::InvalidStrategy(format!(
                    "path repeats station `{}`",
                    net.station(*n)
                )));
            }
        }
        for w in nodes.windows(2) {
            if net.edge_between(w[0], w[1]).is_none() {
                return Err(Error::InvalidStrategy(format!(
                    "no edge between `{}` and `{}`",
                    net.station(w[0]),
                    net.station(w[1])
                )));
            }
        }
        Ok(Path { nodes })
    }

    pub(crate) fn from_trusted(nodes: Vec<Node>) -> Self {
        Path { nodes }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn origin(&self) -> Node {
        self.nodes[0]
    }

    pub fn destination(&self) -> Node {
        *self.nodes.last().expect("paths are non-empty")
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Edge indices in travel order.
    pub fn edges<'a>(&'a self, net: &'a TransitNetwork) -> impl Iterator<Item = usize> + 'a {
        self.nodes
            .windows(2)
            .map(move |w| net.edge_between(w[0], w[1]).expect("path edges exist"))
    }

    pub fn reversed(&self) -> Path {
        let mut nodes = self.nodes.clone();
        nodes.reverse();
        Path { nodes }
    }

    pub fn ids(&self, net: &TransitNetwork) -> Vec<StationId> {
        self.nodes.iter().map(|n| net.station(*n).clone()).collect()
    }

    pub fn display(&self, net: &TransitNetwork) -> String {
        self.nodes
            .iter()
            .map(|n| net.station(*n).as_str())
            .collect::<Vec<_>>()
            .join("-")
    }
}

/// Per-period passenger counts for ordered origin-destination pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandMatrix {
    period: String,
    entries: BTreeMap<(StationId, StationId), f64>,
}

impl DemandMatrix {
    pub fn new(period: impl Into<String>) -> Self {
        DemandMatrix {
            period: period.into(),
            entries: BTreeMap::new(),
        }
    }

    pub fn period(&self) -> &str {
        &self.period
    }

    /// Adds `mass` to the `(origin, destination)` entry.
    pub fn add(&mut self, origin: StationId, destination: StationId, mass: f64) -> Result<()> {
        if !mass.is_finite() || mass < 0.0 {
            return Err(Error::InvalidInput(format!(
                "demand {origin}->{destination} must be finite and non-negative, got {mass}"
            )));
        }
        if origin == destination {
            if mass > 0.0 {
                return Err(Error::InvalidInput(format!(
                    "positive diagonal demand at `{origin}`"
                )));
            }
            return Ok(());
        }
        *self.entries.entry((origin, destination)).or_insert(0.0) += mass;
        Ok(())
    }

    pub fn with(mut self, origin: &str, destination: &str, mass: f64) -> Result<Self> {
        self.add(origin.into(), destination.into(), mass)?;
        Ok(self)
    }

    pub fn get(&self, origin: &StationId, destination: &StationId) -> f64 {
        self.entries
            .get(&(origin.clone(), destination.clone()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StationId, &StationId, f64)> {
        self.entries.iter().map(|((o, d), m)| (o, d, *m))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Resolves station ids against `net`, keeping zero entries.
    pub fn resolve(&self, net: &TransitNetwork) -> Result<Vec<(Node, Node, f64)>> {
        self.iter()
            .map(|(o, d, m)| Ok((net.node(o)?, net.node(d)?, m)))
            .collect()
    }

    /// Dense `n x n` matrix indexed by `origin * n + destination`.
    pub fn dense(&self, net: &TransitNetwork) -> Result<Vec<f64>> {
        let n = net.station_count();
        let mut out = vec![0.0; n * n];
        for (o, d, m) in self.resolve(net)? {
            out[o.index() * n + d.index()] += m;
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> DemandMatrix {
        DemandMatrix {
            period: self.period.clone(),
            entries: self.entries.iter().map(|(k, v)| (k.clone(), v * factor)).collect(),
        }
    }

    /// Same matrix with every origin and destination swapped.
    pub fn transposed(&self) -> DemandMatrix {
        DemandMatrix {
            period: self.period.clone(),
            entries: self
                .entries
                .iter()
                .map(|((o, d), v)| ((d.clone(), o.clone()), *v))
                .collect(),
        }
    }
}

/// Sum of all origin-destination demand.
pub fn total_traffic(demand: &DemandMatrix) -> f64 {
    demand.iter().map(|(_, _, m)| m).sum()
}

/// Passenger mass per edge, both travel directions aggregated.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlows {
    values: Vec<f64>,
}

impl EdgeFlows {
    pub fn zeros(net: &TransitNetwork) -> Self {
        EdgeFlows {
            values: vec![0.0; net.edge_count()],
        }
    }

    pub fn from_values(net: &TransitNetwork, values: Vec<f64>) -> Result<Self> {
        if values.len() != net.edge_count() {
            return Err(Error::InvalidInput(format!(
                "expected {} edge flows, got {}",
                net.edge_count(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("edge flows must be finite and non-negative".into()));
        }
        Ok(EdgeFlows { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, edge: usize) -> f64 {
        self.values[edge]
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }

    pub(crate) fn add_path(&mut self, net: &TransitNetwork, path: &Path, mass: f64) {
        for e in path.edges(net) {
            self.values[e] += mass;
        }
    }

    pub fn max_abs_diff(&self, other: &EdgeFlows) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem {
    cost: f64,
    node: Node,
}

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra distances from every node to `target` under per-edge costs.
pub(crate) fn distances_to(net: &TransitNetwork, target: Node, cost: &[f64]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; net.station_count()];
    let mut heap = BinaryHeap::new();
    dist[target.index()] = 0.0;
    heap.push(HeapItem { cost: 0.0, node: target });
    while let Some(HeapItem { cost: d, node }) = heap.pop() {
        if d > dist[node.index()] {
            continue;
        }
        for &(next, e) in net.neighbors(node) {
            let nd = d + cost[e];
            if nd < dist[next.index()] {
                dist[next.index()] = nd;
                heap.push(HeapItem { cost: nd, node: next });
            }
        }
    }
    dist
}

fn is_tight(dist_u: f64, cost: f64, dist_v: f64) -> bool {
    (dist_u - (cost + dist_v)).abs() <= TIGHT_EPS * (1.0 + dist_u.abs())
}

/// Lexicographically smallest shortest path from `origin` to the target whose
/// distances are `dist`.
pub(crate) fn lex_min_path(
    net: &TransitNetwork,
    origin: Node,
    target: Node,
    cost: &[f64],
    dist: &[f64],
) -> Option<Path> {
    if !dist[origin.index()].is_finite() {
        return None;
    }
    let mut visited = vec![false; net.station_count()];
    let mut nodes = vec![origin];
    visited[origin.index()] = true;
    let mut u = origin;
    while u != target {
        let du = dist[u.index()];
        let mut chosen = None;
        for &(v, e) in net.neighbors(u) {
            if visited[v.index()] || !is_tight(du, cost[e], dist[v.index()]) {
                continue;
            }
            // Along a zero-cost tight edge the distance does not drop, so the
            // continuation could be forced back through visited stations.
            let flat = cost[e] <= TIGHT_EPS * (1.0 + du.abs());
            if flat && !reaches_through_tight(net, v, target, cost, dist, &visited) {
                continue;
            }
            chosen = Some(v);
            break;
        }
        let v = chosen?;
        visited[v.index()] = true;
        nodes.push(v);
        u = v;
    }
    Some(Path::from_trusted(nodes))
}

fn reaches_through_tight(
    net: &TransitNetwork,
    from: Node,
    target: Node,
    cost: &[f64],
    dist: &[f64],
    visited: &[bool],
) -> bool {
    let mut seen = visited.to_vec();
    seen[from.index()] = true;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == target {
            return true;
        }
        for &(v, e) in net.neighbors(u) {
            if !seen[v.index()] && is_tight(dist[u.index()], cost[e], dist[v.index()]) {
                seen[v.index()] = true;
                queue.push_back(v);
            }
        }
    }
    false
}

pub(crate) fn check_costs(net: &TransitNetwork, cost: &[f64]) -> Result<()> {
    if cost.len() != net.edge_count() {
        return Err(Error::InvalidInput(format!(
            "expected {} edge costs, got {}",
            net.edge_count(),
            cost.len()
        )));
    }
    if cost.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(Error::InvalidInput("edge costs must be finite and non-negative".into()));
    }
    Ok(())
}

/// Minimum-cost simple path; hop count when `edge_cost` is `None`. Ties go to
/// the lexicographically smallest station-id sequence.
pub fn shortest_path(
    net: &TransitNetwork,
    origin: &StationId,
    dest: &StationId,
    edge_cost: Option<&[f64]>,
) -> Result<Path> {
    let o = net.node(origin)?;
    let d = net.node(dest)?;
    if o == d {
        return Err(Error::SameOriginDestination(origin.to_string()));
    }
    let hops;
    let cost = match edge_cost {
        Some(c) => {
            check_costs(net, c)?;
            c
        }
        None => {
            hops = vec![1.0; net.edge_count()];
            &hops
        }
    };
    let dist = distances_to(net, d, cost);
    lex_min_path(net, o, d, cost, &dist)
        .ok_or_else(|| Error::Unreachable(origin.to_string(), dest.to_string()))
}

/// Routes for every unordered station pair under `cost`.
///
/// Each pair is routed from its smaller to its larger station id, and the
/// reverse direction rides the same stations backwards, so loading is
/// independent of travel direction.
pub(crate) struct PairRoutes {
    n: usize,
    routes: Vec<Option<Path>>,
}

impl PairRoutes {
    pub(crate) fn compute(net: &TransitNetwork, cost: &[f64], wanted: impl Fn(Node, Node) -> bool) -> Self {
        let n = net.station_count();
        let mut routes = vec![None; n * n];
        for b in net.nodes() {
            let mut dist = None;
            for a in net.nodes().take_while(|a| *a < b) {
                if !wanted(a, b) {
                    continue;
                }
                let dist = dist.get_or_insert_with(|| distances_to(net, b, cost));
                routes[a.index() * n + b.index()] = lex_min_path(net, a, b, cost, dist);
            }
        }
        PairRoutes { n, routes }
    }

    pub(crate) fn canonical(&self, a: Node, b: Node) -> Option<&Path> {
        self.routes[a.index() * self.n + b.index()].as_ref()
    }
}

/// Loads each OD demand onto the edges of its hop-count shortest path.
pub fn assign_flows(net: &TransitNetwork, demand: &DemandMatrix) -> Result<EdgeFlows> {
    let hops = vec![1.0; net.edge_count()];
    assign_flows_with_cost(net, demand, &hops)
}

pub(crate) fn assign_flows_with_cost(
    net: &TransitNetwork,
    demand: &DemandMatrix,
    cost: &[f64],
) -> Result<EdgeFlows> {
    let n = net.station_count();
    let mut pair_mass = vec![0.0; n * n];
    for (o, d, m) in demand.resolve(net)? {
        let (a, b) = if o < d { (o, d) } else { (d, o) };
        pair_mass[a.index() * n + b.index()] += m;
    }
    let routes = PairRoutes::compute(net, cost, |a, b| pair_mass[a.index() * n + b.index()] > 0.0);
    let mut flows = EdgeFlows::zeros(net);
    // Fixed (a, b) order keeps the floating-point sums reproducible.
    for a in net.nodes() {
        for b in net.nodes().skip(a.index() + 1) {
            let m = pair_mass[a.index() * n + b.index()];
            if m > 0.0 {
                let path = routes.canonical(a, b).ok_or_else(|| {
                    Error::Unreachable(net.station(a).to_string(), net.station(b).to_string())
                })?;
                flows.add_path(net, path, m);
            }
        }
    }
    Ok(flows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(path: &Path, net: &TransitNetwork) -> Vec<String> {
        path.ids(net).iter().map(|s| s.to_string()).collect()
    }

    fn flow(net: &TransitNetwork, flows: &EdgeFlows, a: &str, b: &str) -> f64 {
        let e = net
            .edge_between(net.node_of(a).unwrap(), net.node_of(b).unwrap())
            .unwrap();
        flows.get(e)
    }

    #[test]
    fn minimal_network_is_valid() {
        let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
        assert_eq!(net.station_count(), 2);
        assert_eq!(net.edge_count(), 1);
    }

    #[test]
    fn disconnected_station_is_reported() {
        let stations = vec!["a".into(), "b".into(), "c".into()];
        let err = validate_network(&stations, &[("a".into(), "b".into())]).unwrap_err();
        assert_eq!(err, vec![Violation::Disconnected(vec!["c".into()])]);
    }

    #[test]
    fn self_loop_is_reported() {
        let stations = vec!["a".into()];
        let err = validate_network(&stations, &[("a".into(), "a".into())]).unwrap_err();
        assert!(err.contains(&Violation::SelfLoop("a".into())));
    }

    #[test]
    fn duplicate_station_and_edge_are_reported() {
        let stations = vec!["a".into(), "b".into(), "a".into()];
        let edges = vec![("a".into(), "b".into()), ("b".into(), "a".into())];
        let err = validate_network(&stations, &edges).unwrap_err();
        assert!(err.contains(&Violation::DuplicateStation("a".into())));
        assert!(err.contains(&Violation::DuplicateEdge("a".into(), "b".into())));
    }

    #[test]
    fn line_path_is_unique() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c")]).unwrap();
        let p = shortest_path(&net, &"a".into(), &"c".into(), None).unwrap();
        assert_eq!(ids(&p, &net), ["a", "b", "c"]);
    }

    #[test]
    fn one_hop_beats_two_on_a_cycle() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("c", "a")]).unwrap();
        let p = shortest_path(&net, &"a".into(), &"c".into(), None).unwrap();
        assert_eq!(ids(&p, &net), ["a", "c"]);
    }

    #[test]
    fn square_tie_goes_to_smallest_sequence() {
        // Both a-b-c and a-d-c have two hops; [a,b,c] < [a,d,c].
        let net =
            TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("a", "d"), ("d", "c")]).unwrap();
        let p = shortest_path(&net, &"a".into(), &"c".into(), None).unwrap();
        assert_eq!(ids(&p, &net), ["a", "b", "c"]);
    }

    #[test]
    fn zero_costs_still_yield_a_simple_path() {
        let net =
            TransitNetwork::from_edges(&[("a", "b"), ("b", "c"), ("c", "d"), ("a", "d")]).unwrap();
        let zero = vec![0.0; net.edge_count()];
        let p = shortest_path(&net, &"a".into(), &"d".into(), Some(&zero)).unwrap();
        // Every path is free; [a,b,c,d] is the smallest sequence.
        assert_eq!(ids(&p, &net), ["a", "b", "c", "d"]);
        let p = shortest_path(&net, &"b".into(), &"a".into(), Some(&zero)).unwrap();
        assert_eq!(ids(&p, &net), ["b", "a"]);
    }

    #[test]
    fn zero_cost_dead_end_is_skipped() {
        // b is a free dead end hanging off a; the walk must not enter it.
        let net = TransitNetwork::from_edges(&[("a", "b"), ("a", "c")]).unwrap();
        let zero = vec![0.0; net.edge_count()];
        let p = shortest_path(&net, &"a".into(), &"c".into(), Some(&zero)).unwrap();
        assert_eq!(ids(&p, &net), ["a", "c"]);
    }

    #[test]
    fn shortest_path_errors() {
        let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
        assert!(matches!(
            shortest_path(&net, &"a".into(), &"a".into(), None),
            Err(Error::SameOriginDestination(_))
        ));
        assert!(matches!(
            shortest_path(&net, &"a".into(), &"z".into(), None),
            Err(Error::UnknownStation(_))
        ));
    }

    #[test]
    fn single_path_flow() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c")]).unwrap();
        let demand = DemandMatrix::new("am").with("a", "c", 10.0).unwrap();
        let flows = assign_flows(&net, &demand).unwrap();
        assert_eq!(flow(&net, &flows, "a", "b"), 10.0);
        assert_eq!(flow(&net, &flows, "b", "c"), 10.0);
    }

    #[test]
    fn both_directions_accumulate() {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c")]).unwrap();
        let demand = DemandMatrix::new("am")
            .with("a", "c", 10.0)
            .unwrap()
            .with("c", "a", 5.0)
            .unwrap();
        let flows = assign_flows(&net, &demand).unwrap();
        assert_eq!(flow(&net, &flows, "a", "b"), 15.0);
        assert_eq!(flow(&net, &flows, "b", "c"), 15.0);
    }

    #[test]
    fn diamond_uses_shorter_branch() {
        let net = TransitNetwork::from_edges(&[
            ("a", "b"),
            ("b", "z"),
            ("a", "c"),
            ("c", "d"),
            ("d", "z"),
        ])
        .unwrap();
        let demand = DemandMatrix::new("am").with("a", "z", 7.0).unwrap();
        let flows = assign_flows(&net, &demand).unwrap();
        assert_eq!(flow(&net, &flows, "a", "b"), 7.0);
        assert_eq!(flow(&net, &flows, "b", "z"), 7.0);
        assert_eq!(flow(&net, &flows, "a", "c"), 0.0);
        assert_eq!(flow(&net, &flows, "c", "d"), 0.0);
        assert_eq!(flow(&net, &flows, "d", "z"), 0.0);
    }

    #[test]
    fn unknown_station_in_demand() {
        let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
        let demand = DemandMatrix::new("am").with("a", "q", 1.0).unwrap();
        assert!(matches!(assign_flows(&net, &demand), Err(Error::UnknownStation(s)) if s == "q"));
    }

    #[test]
    fn traffic_totals() {
        assert_eq!(total_traffic(&DemandMatrix::new("am")), 0.0);
        let d = DemandMatrix::new("am")
            .with("a", "b", 3.0)
            .unwrap()
            .with("b", "a", 4.0)
            .unwrap();
        assert_eq!(total_traffic(&d), 7.0);
    }

    #[test]
    fn demand_rejects_bad_entries() {
        let mut d = DemandMatrix::new("am");
        assert!(d.add("a".into(), "b".into(), -1.0).is_err());
        assert!(d.add("a".into(), "b".into(), f64::NAN).is_err());
        assert!(d.add("a".into(), "a".into(), 2.0).is_err());
        assert!(d.add("a".into(), "a".into(), 0.0).is_ok());
        assert!(d.is_empty());
    }
}
