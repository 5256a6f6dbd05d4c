use popfare::{
    best_response, brute_force_best_response, cap_and_adjust, check_incentive_compatibility, ic_edge_prices,
    od_ic_prices, CapConfig, DeviationModel, EdgeFlows, MonitoringPlan, MonitoringTechnology, PricingScheme,
    SchemeKind, TransitNetwork,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Instance {
    net: TransitNetwork,
    plan: MonitoringPlan,
    flows: EdgeFlows,
    alpha: f64,
    legacy: PricingScheme,
}

fn random_instance(rng: &mut ChaCha8Rng) -> Instance {
    let n = rng.random_range(2..=6);
    let names: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let mut edges = Vec::new();
    for i in 1..n {
        edges.push((names[rng.random_range(0..i)].clone(), names[i].clone()));
    }
    for i in 0..n {
        for j in i + 1..n {
            let exists = edges.iter().any(|(a, b)| (a == &names[i] && b == &names[j]) || (a == &names[j] && b == &names[i]));
            if !exists && rng.random_bool(0.3) {
                edges.push((names[i].clone(), names[j].clone()));
            }
        }
    }
    let net = TransitNetwork::from_edges(&edges).unwrap();
    let masses = (0..net.edge_count()).map(|_| rng.random_range(0.5..5.0)).collect();
    let plan = MonitoringPlan::new(&net, masses, MonitoringTechnology::identity()).unwrap();
    let flows = EdgeFlows::from_values(&net, (0..net.edge_count()).map(|_| rng.random_range(1.0..20.0)).collect()).unwrap();
    let alpha = rng.random_range(0.0..10.0);
    let mut legacy = PricingScheme::new(SchemeKind::Legacy);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(0.85) {
                legacy.insert(&names[i].as_str().into(), &names[j].as_str().into(), rng.random_range(0.0..4.0)).unwrap();
            }
        }
    }
    Instance { net, plan, flows, alpha, legacy }
}

#[test]
fn fast_best_response_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let inst = random_instance(&mut rng);
        let stations = inst.net.stations().to_vec();
        for o in &stations {
            for d in &stations {
                if o == d {
                    continue;
                }
                let (_, fast) = best_response(&inst.net, o, d, &inst.legacy, &inst.plan, &inst.flows, inst.alpha, DeviationModel::MultiTicket).unwrap();
                let (_, slow) = brute_force_best_response(&inst.net, o, d, &inst.legacy, &inst.plan, &inst.flows, inst.alpha).unwrap();
                assert!((fast.total - slow.total).abs() <= 1e-9, "{o}->{d}: {} vs {}", fast.total, slow.total);
                let (_, single) = best_response(&inst.net, o, d, &inst.legacy, &inst.plan, &inst.flows, inst.alpha, DeviationModel::SingleTicket).unwrap();
                assert!(fast.total <= single.total + 1e-12);
            }
        }
    }
}

#[test]
fn ic_and_capped_schemes_pass_the_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let inst = random_instance(&mut rng);
        let edges = ic_edge_prices(&inst.net, &inst.plan, &inst.flows, inst.alpha).unwrap();
        let ic = od_ic_prices(&inst.net, &edges).unwrap();
        let v = check_incentive_compatibility(&inst.net, &ic, &inst.plan, &inst.flows, inst.alpha, DeviationModel::MultiTicket, None, 1e-9).unwrap();
        assert!(v.is_empty());
        let capped = cap_and_adjust(&inst.net, &inst.legacy, &edges, &inst.plan, &inst.flows, inst.alpha, &CapConfig::default()).unwrap();
        let v = check_incentive_compatibility(&inst.net, &capped.scheme, &inst.plan, &inst.flows, inst.alpha, DeviationModel::MultiTicket, None, 1e-9).unwrap();
        assert!(v.is_empty(), "{v:?}");
    }
}
