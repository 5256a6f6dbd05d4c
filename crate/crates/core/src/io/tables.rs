//! Headered CSV files for networks, demand and price tables.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so a
//! file written here loads back to identical values.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::Path as FsPath;

use csv::{ReaderBuilder, StringRecord, WriterBuilder};

use crate::error::{Error, Result};
use crate::network::{DemandMatrix, StationId, TransitNetwork};
use crate::pricing::{PricingScheme, SchemeKind};

/// Largest tolerated gap between the two directions of one price.
pub const PRICE_ASYMMETRY_TOLERANCE: f64 = 0.005;

struct Table {
    path: std::path::PathBuf,
    headers: StringRecord,
    rows: Vec<(u64, StringRecord)>,
}

impl Table {
    fn read(path: &FsPath) -> Result<Self> {
        let file = File::open(path).map_err(Error::file(path))?;
        let mut reader = ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let headers = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .clone();
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parse_err(line, e.to_string())
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            rows.push((line, rec));
        }
        Ok(Table {
            path: path.to_path_buf(),
            headers,
            rows,
        })
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h.eq_ignore_ascii_case(name))
    }

    fn require(&self, name: &str) -> Result<usize> {
        self.column(name).ok_or_else(|| self.error(1, format!("missing column `{name}`")))
    }

    fn error(&self, line: u64, message: String) -> Error {
        Error::Parse {
            path: self.path.clone(),
            line,
            message,
        }
    }

    fn field<'r>(&self, line: u64, rec: &'r StringRecord, col: usize, name: &str) -> Result<&'r str> {
        match rec.get(col) {
            Some(v) if !v.is_empty() => Ok(v),
            _ => Err(self.error(line, format!("empty `{name}`"))),
        }
    }

    fn number(&self, line: u64, rec: &StringRecord, col: usize, name: &str) -> Result<f64> {
        let raw = self.field(line, rec, col, name)?;
        let v: f64 = raw
            .parse()
            .map_err(|_| self.error(line, format!("`{name}` is not a number: `{raw}`")))?;
        if !v.is_finite() {
            return Err(self.error(line, format!("`{name}` must be finite")));
        }
        if v < 0.0 {
            return Err(self.error(line, format!("`{name}` must be non-negative, got {v}")));
        }
        Ok(v)
    }
}

/// Loads edges `(station_a, station_b)`, plus an optional station list
/// `(station_id)` for stations that should exist even without edges.
pub fn load_network(edges_path: &FsPath, stations_path: Option<&FsPath>) -> Result<TransitNetwork> {
    let edges = Table::read(edges_path)?;
    let (ca, cb) = (edges.require("station_a")?, edges.require("station_b")?);
    let mut declared: Option<Vec<StationId>> = None;
    if let Some(p) = stations_path {
        let st = Table::read(p)?;
        let c = st.require("station_id")?;
        let mut ids = Vec::with_capacity(st.rows.len());
        for (line, rec) in &st.rows {
            ids.push(StationId::new(st.field(*line, rec, c, "station_id")?));
        }
        declared = Some(ids);
    }
    let mut pairs = Vec::with_capacity(edges.rows.len());
    for (line, rec) in &edges.rows {
        let a = StationId::new(edges.field(*line, rec, ca, "station_a")?);
        let b = StationId::new(edges.field(*line, rec, cb, "station_b")?);
        if let Some(ids) = &declared {
            for s in [&a, &b] {
                if !ids.contains(s) {
                    return Err(edges.error(*line, format!("edge references unknown station `{s}`")));
                }
            }
        }
        pairs.push((a, b));
    }
    let stations = match declared {
        Some(ids) => ids,
        None => {
            let mut ids: Vec<StationId> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
            ids.sort();
            ids.dedup();
            ids
        }
    };
    TransitNetwork::new(stations, pairs)
}

pub fn write_network(net: &TransitNetwork, edges_path: &FsPath, stations_path: Option<&FsPath>) -> Result<()> {
    let mut w = WriterBuilder::new().from_path(edges_path)?;
    w.write_record(["station_a", "station_b"])?;
    for (e, _) in net.edges().iter().enumerate() {
        let (a, b) = net.edge_label(e);
        w.write_record([a, b])?;
    }
    w.flush()?;
    if let Some(p) = stations_path {
        let mut w = WriterBuilder::new().from_path(p)?;
        w.write_record(["station_id"])?;
        for s in net.stations() {
            w.write_record([s.as_str()])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Demand matrices by period, in order of first appearance. Rows without a
/// `period` column go to `default_period`. Duplicate rows are summed.
pub fn load_demand_periods(path: &FsPath, default_period: &str) -> Result<Vec<DemandMatrix>> {
    let t = Table::read(path)?;
    let (co, cd) = (t.require("origin")?, t.require("destination")?);
    let cp = t.column("period");
    let cm = t.require("passengers")?;
    let mut order: Vec<String> = Vec::new();
    let mut out: BTreeMap<String, DemandMatrix> = BTreeMap::new();
    for (line, rec) in &t.rows {
        let period = match cp {
            Some(c) => t.field(*line, rec, c, "period")?.to_string(),
            None => default_period.to_string(),
        };
        let o = StationId::new(t.field(*line, rec, co, "origin")?);
        let d = StationId::new(t.field(*line, rec, cd, "destination")?);
        let m = t.number(*line, rec, cm, "passengers")?;
        if !out.contains_key(&period) {
            order.push(period.clone());
        }
        out.entry(period.clone())
            .or_insert_with(|| DemandMatrix::new(period))
            .add(o, d, m)
            .map_err(|e| t.error(*line, e.to_string()))?;
    }
    Ok(order.into_iter().map(|p| out.remove(&p).expect("period recorded")).collect())
}

/// Demand for one period; an absent period yields an empty matrix.
pub fn load_demand(path: &FsPath, period: &str) -> Result<DemandMatrix> {
    Ok(load_demand_periods(path, period)?
        .into_iter()
        .find(|d| d.period() == period)
        .unwrap_or_else(|| DemandMatrix::new(period)))
}

pub fn write_demand(periods: &[&DemandMatrix], path: &FsPath) -> Result<()> {
    let mut w = WriterBuilder::new().from_path(path)?;
    w.write_record(["origin", "destination", "period", "passengers"])?;
    for d in periods {
        for (o, dd, m) in d.iter() {
            w.write_record([o.as_str(), dd.as_str(), d.period(), &m.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Peak and off-peak legacy tariffs. A price file without a `peak_flag`
/// column applies to both.
#[derive(Debug, Clone, PartialEq)]
pub struct LegacyTariff {
    pub peak: PricingScheme,
    pub off_peak: PricingScheme,
}

impl LegacyTariff {
    pub fn flat(scheme: PricingScheme) -> Self {
        LegacyTariff {
            peak: scheme.clone(),
            off_peak: scheme,
        }
    }

    pub fn for_period(&self, peak: bool) -> &PricingScheme {
        if peak {
            &self.peak
        } else {
            &self.off_peak
        }
    }
}

fn parse_flag(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "peak" | "1" | "true" | "yes" => Some(true),
        "off-peak" | "offpeak" | "off_peak" | "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

/// Loads `(origin, destination[, peak_flag], price)` rows. Both directions
/// of a pair may be listed if they agree within half a cent.
pub fn load_prices(path: &FsPath) -> Result<LegacyTariff> {
    load_prices_as(path, SchemeKind::Legacy)
}

pub fn load_prices_as(path: &FsPath, kind: SchemeKind) -> Result<LegacyTariff> {
    let t = Table::read(path)?;
    let (co, cd, cp) = (t.require("origin")?, t.require("destination")?, t.require("price")?);
    let cf = t.column("peak_flag");
    // (flag, ordered pair) -> (price, line)
    let mut seen: BTreeMap<(bool, StationId, StationId), (f64, u64)> = BTreeMap::new();
    let mut schemes = [PricingScheme::new(kind), PricingScheme::new(kind)];
    for (line, rec) in &t.rows {
        let flags: Vec<bool> = match cf {
            Some(c) => {
                let raw = t.field(*line, rec, c, "peak_flag")?;
                vec![parse_flag(raw).ok_or_else(|| t.error(*line, format!("unrecognised peak_flag `{raw}`")))?]
            }
            None => vec![true, false],
        };
        let o = StationId::new(t.field(*line, rec, co, "origin")?);
        let d = StationId::new(t.field(*line, rec, cd, "destination")?);
        let p = t.number(*line, rec, cp, "price")?;
        if o == d {
            return Err(t.error(*line, format!("price row with identical stations `{o}`")));
        }
        for flag in flags {
            if let Some((_, first)) = seen.get(&(flag, o.clone(), d.clone())) {
                return Err(t.error(*line, format!("duplicate price row for `{o}`-`{d}` (first on line {first})")));
            }
            if let Some((q, first)) = seen.get(&(flag, d.clone(), o.clone())) {
                if (p - q).abs() > PRICE_ASYMMETRY_TOLERANCE {
                    return Err(t.error(
                        *line,
                        format!("price `{o}`-`{d}` = {p} differs from {q} on line {first} for the reverse direction"),
                    ));
                }
            } else {
                schemes[usize::from(!flag)]
                    .insert(&o, &d, p)
                    .map_err(|e| t.error(*line, e.to_string()))?;
            }
            seen.insert((flag, o.clone(), d.clone()), (p, *line));
        }
    }
    let [peak, off_peak] = schemes;
    Ok(LegacyTariff { peak, off_peak })
}

/// Writes a tariff with a `peak_flag` column, one row per unordered pair.
pub fn write_tariff(tariff: &LegacyTariff, path: &FsPath) -> Result<()> {
    let mut w = WriterBuilder::new().from_path(path)?;
    w.write_record(["origin", "destination", "peak_flag", "price"])?;
    for (flag, scheme) in [("peak", &tariff.peak), ("off-peak", &tariff.off_peak)] {
        for (a, b, p) in scheme.iter() {
            w.write_record([a.as_str(), b.as_str(), flag, &p.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes one scheme without a `peak_flag` column.
pub fn write_scheme(scheme: &PricingScheme, path: &FsPath) -> Result<()> {
    let mut w = WriterBuilder::new().from_path(path)?;
    w.write_record(["origin", "destination", "price"])?;
    for (a, b, p) in scheme.iter() {
        w.write_record([a.as_str(), b.as_str(), &p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
