//! Simulation runs described by a manifest that is enough to repeat them.

use std::fs;
use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};

use super::report::{compliance_table_view, price_summary_view, scenario_view, write_table};
use super::{sha256_file, LoadedBundle};
use crate::counterfactual::{
    compliance_table, prepare_scenario, simulate_setup, summarize_prices, AlphaSource, ComplianceRow,
    MonitoringKind, PriceSummary, PricingKind, ScenarioConfig, SimulationReport,
};
use crate::error::{Error, Result};
use crate::pricing::CapConfig;
use crate::strategy::DeviationModel;
use crate::technology::MonitoringTechnology;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateConfig {
    /// Period labels to run; empty means every period in the bundle.
    pub periods: Vec<String>,
    pub pricing: Vec<PricingKind>,
    pub monitoring: Vec<MonitoringKind>,
    pub model: DeviationModel,
    pub alpha: AlphaSource,
    pub lambda_total: f64,
    pub technology: MonitoringTechnology,
    pub cap: CapConfig,
    pub tolerance: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            periods: Vec::new(),
            pricing: vec![PricingKind::Legacy, PricingKind::Ic, PricingKind::CappedIc],
            monitoring: vec![MonitoringKind::Uniform, MonitoringKind::Proportional],
            model: DeviationModel::MultiTicket,
            alpha: AlphaSource::Calibrated,
            lambda_total: 4013.0,
            technology: MonitoringTechnology::identity(),
            cap: CapConfig::default(),
            tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub compliance: Vec<ComplianceRow>,
    pub summaries: Vec<(String, String, PriceSummary)>,
    pub reports: Vec<SimulationReport>,
}

impl SimulateConfig {
    pub fn scenario(&self, period: &str, monitoring: &MonitoringKind, pricing: PricingKind) -> ScenarioConfig {
        ScenarioConfig {
            period: period.to_string(),
            monitoring: monitoring.clone(),
            pricing,
            model: self.model,
            alpha: self.alpha,
            lambda_total: self.lambda_total,
            technology: self.technology.clone(),
            cap: self.cap,
            tolerance: self.tolerance,
        }
    }

    pub fn run(&self, data: &LoadedBundle) -> Result<SimulationOutput> {
        let tariff = data
            .tariff
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("simulation needs a legacy price file".into()))?;
        let labels: Vec<String> = if self.periods.is_empty() {
            data.bundle.periods.iter().map(|p| p.label.clone()).collect()
        } else {
            self.periods.clone()
        };
        let mut compliance_inputs = Vec::new();
        let mut summaries = Vec::new();
        let mut reports = Vec::new();
        for label in &labels {
            let (period, demand) = data.period(label)?;
            let legacy = tariff.for_period(period.peak);
            compliance_inputs.push((demand, legacy));
            for monitoring in &self.monitoring {
                for &pricing in &self.pricing {
                    let cfg = self.scenario(label, monitoring, pricing);
                    log::info!("simulating {label} {pricing} under {monitoring:?} monitoring");
                    let setup = prepare_scenario(&cfg, &data.network, demand, legacy)?;
                    if pricing != PricingKind::Legacy {
                        summaries.push((
                            label.clone(),
                            format!("{pricing}-{}", setup.plan.kind()),
                            summarize_prices(&setup.scheme, legacy, demand),
                        ));
                    }
                    reports.push(simulate_setup(&cfg, &data.network, demand, &setup)?);
                }
            }
        }
        Ok(SimulationOutput {
            compliance: compliance_table(&compliance_inputs)?,
            summaries,
            reports,
        })
    }
}

impl SimulationOutput {
    pub fn write(&self, dir: &FsPath) -> Result<Vec<PathBuf>> {
        let mut paths = write_table(&compliance_table_view(&self.compliance), dir, "compliance")?;
        paths.extend(write_table(&price_summary_view(&self.summaries), dir, "price_summary")?);
        paths.extend(write_table(&scenario_view(&self.reports), dir, "scenarios")?);
        let pairs = dir.join("pairs_full.csv");
        let mut w = csv::WriterBuilder::new().from_path(&pairs)?;
        w.write_record([
            "period",
            "pricing",
            "monitoring",
            "origin",
            "destination",
            "passengers",
            "price",
            "outlay",
            "exposure",
            "coverage",
        ])?;
        for r in &self.reports {
            for p in &r.pairs {
                let coverage = match p.coverage {
                    crate::strategy::Coverage::Full => "full",
                    crate::strategy::Coverage::Partial => "partial",
                    crate::strategy::Coverage::None => "none",
                };
                w.write_record([
                    r.period.as_str(),
                    &r.pricing.to_string(),
                    &r.monitoring.to_string(),
                    p.origin.as_str(),
                    p.destination.as_str(),
                    &p.passengers.to_string(),
                    &p.price.to_string(),
                    &p.outlay.to_string(),
                    &p.exposure.to_string(),
                    coverage,
                ])?;
            }
        }
        w.flush()?;
        paths.push(pairs);
        Ok(paths)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

impl InputFile {
    pub fn new(role: &str, path: &FsPath) -> Result<Self> {
        Ok(InputFile {
            role: role.into(),
            path: path.to_path_buf(),
            sha256: sha256_file(path)?,
        })
    }

    pub fn verify(&self) -> Result<()> {
        if sha256_file(&self.path)? != self.sha256 {
            return Err(Error::ChecksumMismatch(self.path.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub inputs: Vec<InputFile>,
    pub config: SimulateConfig,
    pub timestamp: String,
    pub seed: u64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl RunManifest {
    pub fn new(inputs: Vec<InputFile>, config: SimulateConfig, seed: u64) -> Self {
        RunManifest {
            tool_version: TOOL_VERSION.into(),
            command: "simulate".into(),
            inputs,
            config,
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            seed,
        }
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path).map_err(Error::file(path))?)?)
    }

    pub fn input(&self, role: &str) -> Result<&InputFile> {
        self.inputs
            .iter()
            .find(|i| i.role == role)
            .ok_or_else(|| Error::InvalidInput(format!("manifest has no `{role}` input")))
    }

    pub fn write(&self, dir: &FsPath) -> Result<PathBuf> {
        fs::create_dir_all(dir).map_err(Error::file(dir))?;
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, serde_json::to_string_pretty(self)? + "\n").map_err(Error::file(&path))?;
        Ok(path)
    }
}
