//! File formats, datasets, synthetic data and report output.

mod manifest;
mod report;
mod synthetic;
mod tables;

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::network::{DemandMatrix, TransitNetwork};

pub use manifest::{InputFile, RunManifest, SimulateConfig, SimulationOutput, MANIFEST_FILE, TOOL_VERSION};
pub use report::{
    compliance_table_view, format_currency, format_percent, price_summary_view, scenario_view, write_table, Cell,
    ReportTable,
};
pub use synthetic::{generate_synthetic, PeriodFlow, SyntheticConfig, SyntheticData};
pub use tables::{
    load_demand, load_demand_periods, load_network, load_prices, load_prices_as, write_demand, write_network,
    write_scheme, write_tariff, LegacyTariff, PRICE_ASYMMETRY_TOLERANCE,
};

/// A slice of the operating day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Period {
    pub label: String,
    /// Whether the peak tariff applies.
    pub peak: bool,
    pub minutes: f64,
    /// Relative weight of the period in daily traffic.
    pub traffic_share: f64,
    pub flow: PeriodFlow,
}

/// Four six-hour periods; traffic weights follow a typical weekday split.
pub fn default_periods() -> Vec<Period> {
    let p = |label: &str, peak, share, flow| Period {
        label: label.into(),
        peak,
        minutes: 360.0,
        traffic_share: share,
        flow,
    };
    vec![
        p("AM-peak", true, 236_177.0, PeriodFlow::Inbound),
        p("Midday", false, 142_851.0, PeriodFlow::Balanced),
        p("PM-peak", true, 259_165.0, PeriodFlow::Outbound),
        p("Evening", false, 90_916.0, PeriodFlow::Balanced),
    ]
}

/// Inspector-mass estimate: a crew count spread over the stations a rider
/// passes in one period, rounded at each step the way a planner would.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaTotalConfig {
    pub inspectors: f64,
    pub period_minutes: f64,
    pub minutes_per_station: f64,
    pub edges: f64,
}

impl Default for LambdaTotalConfig {
    fn default() -> Self {
        LambdaTotalConfig {
            inspectors: 30.0,
            period_minutes: 360.0,
            minutes_per_station: 2.69,
            edges: 88.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaTotalSteps {
    /// Stations one inspector covers in a period, whole stations.
    pub stations_per_inspector: f64,
    /// Coverage per edge, two decimals.
    pub coverage_per_edge: f64,
    /// Inspector mass per edge, two decimals.
    pub mass_per_edge: f64,
    /// Total mass, whole units.
    pub total: f64,
}

impl LambdaTotalConfig {
    pub fn steps(&self) -> Result<LambdaTotalSteps> {
        for (name, v) in [
            ("inspectors", self.inspectors),
            ("period minutes", self.period_minutes),
            ("minutes per station", self.minutes_per_station),
            ("edges", self.edges),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let cents = |x: f64| (x * 100.0).round() / 100.0;
        let stations_per_inspector = (self.period_minutes / self.minutes_per_station).round();
        let coverage_per_edge = cents(stations_per_inspector / self.edges);
        let mass_per_edge = cents(coverage_per_edge * self.inspectors);
        let total = (mass_per_edge * self.edges).round();
        Ok(LambdaTotalSteps {
            stations_per_inspector,
            coverage_per_edge,
            mass_per_edge,
            total,
        })
    }

    pub fn total(&self) -> Result<f64> {
        Ok(self.steps()?.total)
    }
}

pub fn sha256_file(path: &FsPath) -> Result<String> {
    let bytes = fs::read(path).map_err(Error::file(path))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRef {
    /// Relative to the bundle file.
    pub path: PathBuf,
    pub sha256: String,
}

/// Dataset description with per-file checksums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetBundle {
    pub stations: FileRef,
    pub edges: FileRef,
    pub demand: FileRef,
    pub prices: Option<FileRef>,
    pub periods: Vec<Period>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<SyntheticConfig>,
}

#[derive(Debug, Clone)]
pub struct LoadedBundle {
    pub bundle: DatasetBundle,
    pub network: TransitNetwork,
    pub demand: Vec<DemandMatrix>,
    pub tariff: Option<LegacyTariff>,
}

impl LoadedBundle {
    pub fn period(&self, label: &str) -> Result<(&Period, &DemandMatrix)> {
        let p = self
            .bundle
            .periods
            .iter()
            .find(|p| p.label == label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown period `{label}`")))?;
        let d = self
            .demand
            .iter()
            .find(|d| d.period() == label)
            .ok_or_else(|| Error::InvalidInput(format!("no demand for period `{label}`")))?;
        Ok((p, d))
    }
}

pub const BUNDLE_FILE: &str = "bundle.json";

/// Writes the dataset files and `bundle.json` into `dir`.
pub fn write_bundle(data: &SyntheticData, cfg: Option<&SyntheticConfig>, periods: &[Period], dir: &FsPath) -> Result<DatasetBundle> {
    fs::create_dir_all(dir).map_err(Error::file(dir))?;
    let names = ["stations.csv", "edges.csv", "demand.csv", "prices.csv"];
    write_network(&data.network, &dir.join(names[1]), Some(&dir.join(names[0])))?;
    let refs: Vec<&DemandMatrix> = data.demand.iter().collect();
    write_demand(&refs, &dir.join(names[2]))?;
    write_tariff(&data.tariff, &dir.join(names[3]))?;
    let file = |name: &str| -> Result<FileRef> {
        Ok(FileRef {
            path: PathBuf::from(name),
            sha256: sha256_file(&dir.join(name))?,
        })
    };
    let bundle = DatasetBundle {
        stations: file(names[0])?,
        edges: file(names[1])?,
        demand: file(names[2])?,
        prices: Some(file(names[3])?),
        periods: periods.to_vec(),
        generator: cfg.cloned(),
    };
    let path = dir.join(BUNDLE_FILE);
    fs::write(&path, serde_json::to_string_pretty(&bundle)? + "\n").map_err(Error::file(&path))?;
    Ok(bundle)
}

fn checked(base: &FsPath, r: &FileRef) -> Result<PathBuf> {
    let p = base.join(&r.path);
    if sha256_file(&p)? != r.sha256 {
        return Err(Error::ChecksumMismatch(p));
    }
    Ok(p)
}

/// Loads a bundle, verifying every checksum and cross-referencing stations.
pub fn load_bundle(path: &FsPath) -> Result<LoadedBundle> {
    let text = fs::read_to_string(path).map_err(Error::file(path))?;
    let bundle: DatasetBundle = serde_json::from_str(&text)?;
    let base = path.parent().unwrap_or(FsPath::new("."));
    let network = load_network(&checked(base, &bundle.edges)?, Some(&checked(base, &bundle.stations)?))?;
    let default = bundle.periods.first().map(|p| p.label.clone()).unwrap_or_default();
    let demand = load_demand_periods(&checked(base, &bundle.demand)?, &default)?;
    for d in &demand {
        d.resolve(&network)?;
        if !bundle.periods.iter().any(|p| p.label == d.period()) {
            return Err(Error::InvalidInput(format!("demand period `{}` is not declared", d.period())));
        }
    }
    let tariff = match &bundle.prices {
        Some(r) => {
            let t = load_prices(&checked(base, r)?)?;
            for s in [&t.peak, &t.off_peak] {
                for (a, b, _) in s.iter() {
                    network.node(a)?;
                    network.node(b)?;
                }
            }
            Some(t)
        }
        None => None,
    };
    Ok(LoadedBundle {
        bundle,
        network,
        demand,
        tariff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inspector_mass_estimate() {
        let s = LambdaTotalConfig::default().steps().unwrap();
        assert_eq!(s.stations_per_inspector, 134.0);
        assert_eq!(s.coverage_per_edge, 1.52);
        assert_eq!(s.mass_per_edge, 45.6);
        assert_eq!(s.total, 4013.0);
    }
}
