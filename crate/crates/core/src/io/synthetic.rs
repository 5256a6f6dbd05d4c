//! Seeded generator for metro-like networks with gravity demand and a
//! distance-banded tariff.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{default_periods, LegacyTariff, Period};
use crate::error::{Error, Result};
use crate::network::{distances_to, DemandMatrix, StationId, TransitNetwork};
use crate::pricing::{PricingScheme, SchemeKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub stations: usize,
    pub lines: usize,
    /// Daily trips summed over all periods.
    pub daily_trips: f64,
    pub min_price: f64,
    pub max_price: f64,
    pub periods: Vec<Period>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 2019,
            stations: 91,
            lines: 6,
            daily_trips: 729_110.0,
            min_price: 2.0,
            max_price: 6.0,
            periods: default_periods(),
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lines == 0 {
            return Err(Error::InvalidInput("need at least one line".into()));
        }
        if self.stations < 2 * self.lines + 1 {
            return Err(Error::InvalidInput(format!(
                "{} stations cannot host {} lines (need at least {})",
                self.stations,
                self.lines,
                2 * self.lines + 1
            )));
        }
        if !(self.daily_trips.is_finite() && self.daily_trips > 0.0) {
            return Err(Error::InvalidInput("daily trips must be positive".into()));
        }
        if !(self.min_price > 0.0 && self.max_price >= self.min_price + 0.25) {
            return Err(Error::InvalidInput(format!(
                "price band [{}, {}] must satisfy 0 < min and min + 0.25 <= max",
                self.min_price, self.max_price
            )));
        }
        if self.periods.is_empty() || self.periods.iter().any(|p| !(p.traffic_share > 0.0)) {
            return Err(Error::InvalidInput("periods need positive traffic shares".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub network: TransitNetwork,
    pub demand: Vec<DemandMatrix>,
    pub tariff: LegacyTariff,
}

struct Station {
    /// Residential pull (trip origins in the morning).
    homes: f64,
    /// Employment pull (trip destinations in the morning).
    jobs: f64,
}

fn station_id(i: usize, width: usize) -> StationId {
    StationId::new(format!("S{:0width$}", i + 1))
}

pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let width = cfg.stations.to_string().len();

    // Line 0 is laid first; each later line crosses an existing core station
    // and may close a loop by ending on another existing station.
    let base = cfg.stations / cfg.lines;
    let mut counts = vec![base; cfg.lines];
    counts[0] += cfg.stations - base * cfg.lines;
    let mut lines: Vec<Vec<usize>> = Vec::new();
    let mut edges: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut lengths: Vec<((usize, usize), f64)> = Vec::new();
    let mut next_id = 0;
    let mut link = |a: usize, b: usize, rng: &mut ChaCha8Rng, edges: &mut BTreeSet<(usize, usize)>| {
        let key = (a.min(b), a.max(b));
        if a != b && edges.insert(key) {
            lengths.push((key, rng.random_range(0.5..2.0)));
        }
    };
    for (li, &count) in counts.iter().enumerate() {
        if li == 0 {
            let stops: Vec<usize> = (next_id..next_id + count).collect();
            next_id += count;
            for w in stops.windows(2) {
                link(w[0], w[1], &mut rng, &mut edges);
            }
            lines.push(stops);
            continue;
        }
        // Transfer at a station in the middle half of some existing line.
        let host = lines.choose(&mut rng).expect("line 0 exists").clone();
        let lo = host.len() / 4;
        let hi = (3 * host.len() / 4).max(lo + 1);
        let transfer = host[rng.random_range(lo..hi)];
        let before = rng.random_range(count / 3..=count - count / 3);
        let mut stops: Vec<usize> = (next_id..next_id + before).collect();
        stops.push(transfer);
        stops.extend(next_id + before..next_id + count);
        next_id += count;
        for w in stops.windows(2) {
            link(w[0], w[1], &mut rng, &mut edges);
        }
        if li >= 2 && rng.random_bool(0.5) {
            let end = *stops.last().expect("non-empty line");
            let other = lines.choose(&mut rng).expect("lines exist");
            let target = other[rng.random_range(0..other.len())];
            if !stops.contains(&target) {
                link(end, target, &mut rng, &mut edges);
                stops.push(target);
            }
        }
        lines.push(stops);
    }

    let ids: Vec<StationId> = (0..cfg.stations).map(|i| station_id(i, width)).collect();
    let pairs: Vec<(StationId, StationId)> = edges.iter().map(|&(a, b)| (ids[a].clone(), ids[b].clone())).collect();
    let network = TransitNetwork::new(ids.clone(), pairs)?;

    // Transfer stations are downtown: more jobs, fewer homes.
    let mut degree = vec![0usize; cfg.stations];
    for &(a, b) in &edges {
        degree[a] += 1;
        degree[b] += 1;
    }
    let stations: Vec<Station> = (0..cfg.stations)
        .map(|i| {
            let core: f64 = if degree[i] > 2 { 3.0 } else { 1.0 };
            Station {
                homes: rng.random_range(0.5..2.0) / core.sqrt(),
                jobs: rng.random_range(0.3..1.5) * core,
            }
        })
        .collect();

    // Network indices follow sorted ids, which match generation order
    // thanks to zero padding.
    let n = cfg.stations;
    let mut hops = vec![0.0; n * n];
    let mut miles = vec![0.0; n * n];
    let unit = vec![1.0; network.edge_count()];
    let mut edge_len = vec![0.0; network.edge_count()];
    for &((a, b), len) in &lengths {
        let e = network
            .edge_between(network.node(&ids[a])?, network.node(&ids[b])?)
            .expect("edge was added");
        edge_len[e] = len;
    }
    for d in network.nodes() {
        let h = distances_to(&network, d, &unit);
        let m = distances_to(&network, d, &edge_len);
        for o in 0..n {
            hops[o * n + d.index()] = h[o];
            miles[o * n + d.index()] = m[o];
        }
    }

    let share_total: f64 = cfg.periods.iter().map(|p| p.traffic_share).sum();
    let mut demand = Vec::with_capacity(cfg.periods.len());
    for p in &cfg.periods {
        let attraction = |o: usize, d: usize| -> f64 {
            let (so, sd) = (&stations[o], &stations[d]);
            let am = so.homes * sd.jobs;
            let pm = so.jobs * sd.homes;
            let flat = 0.5 * (so.homes + so.jobs) * 0.5 * (sd.homes + sd.jobs);
            let gravity = match p.flow {
                PeriodFlow::Inbound => am,
                PeriodFlow::Outbound => pm,
                PeriodFlow::Balanced => flat,
            };
            gravity / (1.0 + hops[o * n + d]).powf(1.2)
        };
        let mut weight_sum = 0.0;
        for o in 0..n {
            for d in 0..n {
                if o != d {
                    weight_sum += attraction(o, d);
                }
            }
        }
        let target = cfg.daily_trips * p.traffic_share / share_total;
        let mut m = DemandMatrix::new(p.label.clone());
        for o in 0..n {
            for d in 0..n {
                if o != d {
                    let trips = (target * attraction(o, d) / weight_sum).round().max(1.0);
                    m.add(ids[o].clone(), ids[d].clone(), trips)?;
                }
            }
        }
        demand.push(m);
    }

    // Banded tariff in 5-cent steps: peak spans [min + 0.25, max], off-peak
    // tops out a little under the midpoint of the band.
    let peak_floor = cfg.min_price + 0.25;
    let off_cap = cfg.min_price + 0.4625 * (cfg.max_price - cfg.min_price);
    let to_nickel = |x: f64| (x * 20.0).round() / 20.0;
    let mut peak = PricingScheme::new(SchemeKind::Legacy);
    let mut off_peak = PricingScheme::new(SchemeKind::Legacy);
    for b in 0..n {
        for a in 0..b {
            let extra = (miles[a * n + b] - 3.0).max(0.0);
            let pk = to_nickel((peak_floor + 0.3275 * extra).min(cfg.max_price));
            let op = to_nickel((cfg.min_price + 0.22 * extra).min(off_cap));
            peak.insert(&ids[a], &ids[b], pk)?;
            off_peak.insert(&ids[a], &ids[b], op)?;
        }
    }
    Ok(SyntheticData {
        network,
        demand,
        tariff: LegacyTariff { peak, off_peak },
    })
}

/// Dominant travel direction of a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodFlow {
    /// Homes to jobs.
    Inbound,
    /// Jobs to homes.
    Outbound,
    Balanced,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_network_shape() {
        let data = generate_synthetic(&SyntheticConfig::default()).unwrap();
        assert_eq!(data.network.station_count(), 91);
        assert!(data.network.edge_count() >= 90);
        for d in &data.demand {
            assert_eq!(d.len(), 91 * 90);
            assert!(d.iter().all(|(_, _, m)| m >= 1.0));
        }
        for s in [&data.tariff.peak, &data.tariff.off_peak] {
            assert_eq!(s.len(), 91 * 90 / 2);
            assert!(s.iter().all(|(_, _, p)| (2.0..=6.0).contains(&p)));
        }
    }

    #[test]
    fn infeasible_parameters() {
        let cfg = SyntheticConfig {
            stations: 5,
            lines: 3,
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
        let cfg = SyntheticConfig {
            min_price: 0.0,
            ..Default::default()
        };
        assert!(generate_synthetic(&cfg).is_err());
    }
}
