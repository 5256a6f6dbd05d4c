use popfare::{assign_flows, shortest_path, DemandMatrix, Error, StationId, TransitNetwork};
use proptest::prelude::*;

/// Connected graph on `n` stations: a random spanning tree plus extra edges.
fn graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=7)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
            (Just(n), parents, proptest::collection::vec((0..n, 0..n), 0..6))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            for (a, b) in extra {
                let key = (a.min(b), a.max(b));
                if a != b && !edges.iter().any(|&(x, y)| (x.min(y), x.max(y)) == key) {
                    edges.push(key);
                }
            }
            (n, edges)
        })
}

fn name(i: usize) -> String {
    format!("t{i}")
}

fn build(edges: &[(usize, usize)]) -> TransitNetwork {
    let named: Vec<(String, String)> = edges.iter().map(|&(a, b)| (name(a), name(b))).collect();
    TransitNetwork::from_edges(&named).unwrap()
}

fn edge_cost(net: &TransitNetwork, costs: &[f64], a: usize, b: usize) -> Option<f64> {
    let e = net.edge_between(net.node(&name(a).into()).ok()?, net.node(&name(b).into()).ok()?)?;
    Some(costs[e])
}

/// Every simple path from `o` to `d` with its cost, by depth-first search.
fn all_paths(net: &TransitNetwork, n: usize, costs: &[f64], o: usize, d: usize) -> Vec<(f64, Vec<String>)> {
    fn go(
        net: &TransitNetwork,
        n: usize,
        costs: &[f64],
        d: usize,
        path: &mut Vec<usize>,
        cost: f64,
        out: &mut Vec<(f64, Vec<String>)>,
    ) {
        let last = *path.last().unwrap();
        if last == d {
            out.push((cost, path.iter().map(|&i| name(i)).collect()));
            return;
        }
        for next in 0..n {
            if path.contains(&next) {
                continue;
            }
            if let Some(c) = edge_cost(net, costs, last, next) {
                path.push(next);
                go(net, n, costs, d, path, cost + c, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    go(net, n, costs, d, &mut vec![o], 0.0, &mut out);
    out
}

proptest! {
    #[test]
    fn shortest_path_is_the_cheapest_then_smallest_sequence(
        (n, edges) in graph(),
        raw in proptest::collection::vec(1u32..5, 30),
    ) {
        let net = build(&edges);
        // Integer costs keep ties exact.
        let costs: Vec<f64> = (0..net.edge_count()).map(|e| raw[e % raw.len()] as f64).collect();
        for o in 0..n {
            for d in 0..n {
                if o == d {
                    continue;
                }
                let mut paths = all_paths(&net, n, &costs, o, d);
                paths.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(&b.1)));
                let got = shortest_path(&net, &name(o).into(), &name(d).into(), Some(&costs)).unwrap();
                let ids: Vec<String> = got.ids(&net).iter().map(|s| s.to_string()).collect();
                prop_assert_eq!(&ids, &paths[0].1);
            }
        }
    }

    #[test]
    fn flows_conserve_passenger_hops(
        (n, edges) in graph(),
        masses in proptest::collection::vec(0u32..50, 49),
    ) {
        let net = build(&edges);
        let mut demand = DemandMatrix::new("p");
        let mut expected = 0.0;
        for o in 0..n {
            for d in 0..n {
                let m = masses[(o * 7 + d) % masses.len()] as f64;
                if o == d || m == 0.0 {
                    continue;
                }
                demand.add(name(o).into(), name(d).into(), m).unwrap();
                let hops = shortest_path(&net, &name(o).into(), &name(d).into(), None).unwrap().hops();
                expected += m * hops as f64;
            }
        }
        let flows = assign_flows(&net, &demand).unwrap();
        prop_assert!((flows.total() - expected).abs() < 1e-9);
        let reversed = assign_flows(&net, &demand.transposed()).unwrap();
        prop_assert!(flows.max_abs_diff(&reversed) < 1e-9);
        let doubled = assign_flows(&net, &demand.scaled(2.0)).unwrap();
        for (a, b) in flows.values().iter().zip(doubled.values()) {
            prop_assert!((2.0 * a - b).abs() < 1e-9);
        }
    }
}

#[test]
fn broken_networks_are_rejected_with_every_problem() {
    let stations: Vec<StationId> = ["a", "b", "c", "d", "b"].iter().map(|s| (*s).into()).collect();
    let edges: Vec<(StationId, StationId)> = [("a", "b"), ("b", "a"), ("c", "c"), ("a", "q")]
        .iter()
        .map(|(x, y)| ((*x).into(), (*y).into()))
        .collect();
    match TransitNetwork::new(stations, edges) {
        Err(Error::InvalidNetwork(v)) => {
            let text: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            assert!(text.iter().any(|t| t.contains("duplicate station")), "{text:?}");
            assert!(text.iter().any(|t| t.contains("duplicate edge")), "{text:?}");
            assert!(text.iter().any(|t| t.contains("self-loop")), "{text:?}");
            assert!(text.iter().any(|t| t.contains("unknown station")), "{text:?}");
        }
        other => panic!("expected an invalid network, got {other:?}"),
    }
    let split = TransitNetwork::from_edges(&[("a", "b"), ("c", "d")]);
    assert!(matches!(split, Err(Error::InvalidNetwork(_))));
}

#[test]
fn unknown_stations_and_trivial_trips_fail() {
    let net = TransitNetwork::from_edges(&[("a", "b")]).unwrap();
    assert!(matches!(
        shortest_path(&net, &"a".into(), &"zz".into(), None),
        Err(Error::UnknownStation(_))
    ));
    assert!(matches!(
        shortest_path(&net, &"a".into(), &"a".into(), None),
        Err(Error::SameOriginDestination(_))
    ));
    let mut demand = DemandMatrix::new("p");
    assert!(demand.add("a".into(), "b".into(), -1.0).is_err());
    assert!(demand.add("a".into(), "b".into(), f64::NAN).is_err());
}
