//! Scenario runs: compliant revenue, price summaries and evasion
//! counterfactuals against a chosen price scheme.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitoring::{
    alpha_from_totals, ic_edge_prices, inspection_probabilities, proportional_plan, uniform_plan, MonitoringPlan,
    PlanKind,
};
use crate::network::{assign_flows, total_traffic, DemandMatrix, EdgeFlows, Node, StationId, TransitNetwork};
use crate::pricing::{
    calibrate_alpha_by_revenue, cap_and_adjust, od_ic_prices, revenue_full_compliance, CapConfig, PricingScheme,
};
use crate::strategy::{Coverage, DeviationModel, StrategyEngine};
use crate::technology::MonitoringTechnology;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MonitoringKind {
    Uniform,
    Proportional,
    /// Inspector mass per edge, keyed by station pair.
    Explicit { masses: Vec<(StationId, StationId, f64)> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PricingKind {
    Legacy,
    Ic,
    CappedIc,
}

impl fmt::Display for PricingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            PricingKind::Legacy => "legacy",
            PricingKind::Ic => "ic",
            PricingKind::CappedIc => "capped-ic",
        })
    }
}

impl std::str::FromStr for PricingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "legacy" => Ok(PricingKind::Legacy),
            "ic" => Ok(PricingKind::Ic),
            "capped-ic" => Ok(PricingKind::CappedIc),
            _ => Err(Error::InvalidInput(format!("unknown pricing kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum AlphaSource {
    /// Fine that makes compliant legacy revenue equal inspector mass times fine.
    Calibrated,
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub period: String,
    pub monitoring: MonitoringKind,
    pub pricing: PricingKind,
    pub model: DeviationModel,
    pub alpha: AlphaSource,
    pub lambda_total: f64,
    pub technology: MonitoringTechnology,
    pub cap: CapConfig,
    /// Slack used by the consistency check on incentive-compatible runs.
    pub tolerance: f64,
}

impl ScenarioConfig {
    pub fn new(period: impl Into<String>, pricing: PricingKind, lambda_total: f64) -> Self {
        ScenarioConfig {
            period: period.into(),
            monitoring: MonitoringKind::Uniform,
            pricing,
            model: DeviationModel::MultiTicket,
            alpha: AlphaSource::Calibrated,
            lambda_total,
            technology: MonitoringTechnology::identity(),
            cap: CapConfig::default(),
            tolerance: 1e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_total.is_finite() && self.lambda_total > 0.0) {
            return Err(Error::InvalidInput(format!(
                "total inspector mass must be positive, got {}",
                self.lambda_total
            )));
        }
        if let AlphaSource::Explicit(a) = self.alpha {
            if !(a.is_finite() && a >= 0.0) {
                return Err(Error::InvalidInput(format!("fine must be non-negative, got {a}")));
            }
        }
        self.technology.validate()
    }
}

/// Outcome for one ordered origin-destination pair.
#[derive(Debug, Clone, Serialize)]
pub struct OdOutcome {
    pub origin: StationId,
    pub destination: StationId,
    pub passengers: f64,
    pub price: f64,
    pub outlay: f64,
    pub exposure: f64,
    pub coverage: Coverage,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub period: String,
    pub pricing: PricingKind,
    pub monitoring: PlanKind,
    pub model: DeviationModel,
    pub alpha: f64,
    pub lambda_total: f64,
    pub trips: f64,
    pub trips_fully_paid: f64,
    pub trips_partially_paid: f64,
    pub trips_unpaid: f64,
    /// Revenue if every passenger bought the full ticket under the run's prices.
    pub full_compliance_revenue: f64,
    /// Compliant revenue under the legacy tariff, the reference for loss shares.
    pub legacy_revenue: f64,
    pub revenue: f64,
    pub partial_loss: f64,
    pub no_ticket_loss: f64,
    pub pairs: Vec<OdOutcome>,
}

fn share(part: f64, whole: f64) -> f64 {
    if whole > 0.0 {
        part / whole
    } else {
        0.0
    }
}

impl SimulationReport {
    pub fn share_fully_paid(&self) -> f64 {
        share(self.trips_fully_paid, self.trips)
    }

    pub fn share_partially_paid(&self) -> f64 {
        share(self.trips_partially_paid, self.trips)
    }

    pub fn share_unpaid(&self) -> f64 {
        share(self.trips_unpaid, self.trips)
    }

    pub fn total_loss(&self) -> f64 {
        self.partial_loss + self.no_ticket_loss
    }

    /// Loss relative to compliant revenue under the run's own prices.
    pub fn loss_share(&self) -> f64 {
        share(self.total_loss(), self.full_compliance_revenue)
    }

    /// `1 - revenue / legacy compliant revenue`.
    pub fn loss_vs_legacy(&self) -> f64 {
        if self.legacy_revenue > 0.0 {
            1.0 - self.revenue / self.legacy_revenue
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossDecomposition {
    pub partial_loss: f64,
    pub no_ticket_loss: f64,
    pub percentage: f64,
}

pub fn loss_decomposition(report: &SimulationReport) -> LossDecomposition {
    LossDecomposition {
        partial_loss: report.partial_loss,
        no_ticket_loss: report.no_ticket_loss,
        percentage: report.loss_share(),
    }
}

/// Everything a scenario derives before passengers respond.
#[derive(Debug, Clone)]
pub struct ScenarioSetup {
    pub flows: EdgeFlows,
    pub plan: MonitoringPlan,
    pub alpha: f64,
    pub scheme: PricingScheme,
    pub legacy_revenue: f64,
}

pub fn build_monitoring_plan(
    net: &TransitNetwork,
    flows: &EdgeFlows,
    kind: &MonitoringKind,
    lambda_total: f64,
    technology: &MonitoringTechnology,
) -> Result<MonitoringPlan> {
    match kind {
        MonitoringKind::Uniform => uniform_plan(net, lambda_total, technology.clone()),
        MonitoringKind::Proportional => proportional_plan(net, flows, lambda_total, technology.clone()),
        MonitoringKind::Explicit { masses } => {
            let mut dense = vec![f64::NAN; net.edge_count()];
            for (a, b, m) in masses {
                let e = net
                    .edge_between(net.node(a)?, net.node(b)?)
                    .ok_or_else(|| Error::InvalidInput(format!("no edge `{a}`-`{b}` to monitor")))?;
                dense[e] = *m;
            }
            MonitoringPlan::new(net, dense, technology.clone())
        }
    }
}

pub fn prepare_scenario(
    cfg: &ScenarioConfig,
    net: &TransitNetwork,
    demand: &DemandMatrix,
    legacy: &PricingScheme,
) -> Result<ScenarioSetup> {
    cfg.validate()?;
    let flows = assign_flows(net, demand)?;
    let plan = build_monitoring_plan(net, &flows, &cfg.monitoring, cfg.lambda_total, &cfg.technology)?;
    let legacy_revenue = revenue_full_compliance(demand, legacy)?;
    let alpha = match cfg.alpha {
        AlphaSource::Explicit(a) => a,
        AlphaSource::Calibrated if cfg.technology.is_identity() => alpha_from_totals(legacy_revenue, plan.total())?,
        AlphaSource::Calibrated => calibrate_alpha_by_revenue(legacy_revenue, net, &plan, &flows, demand, 1e-12)?,
    };
    let scheme = match cfg.pricing {
        PricingKind::Legacy => legacy.clone(),
        PricingKind::Ic => od_ic_prices(net, &ic_edge_prices(net, &plan, &flows, alpha)?)?,
        PricingKind::CappedIc => {
            let edges = ic_edge_prices(net, &plan, &flows, alpha)?;
            cap_and_adjust(net, legacy, &edges, &plan, &flows, alpha, &cfg.cap)?.scheme
        }
    };
    Ok(ScenarioSetup {
        flows,
        plan,
        alpha,
        scheme,
        legacy_revenue,
    })
}

/// Runs one period: every OD pair's whole demand follows its best response.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    net: &TransitNetwork,
    demand: &DemandMatrix,
    legacy: &PricingScheme,
) -> Result<SimulationReport> {
    let setup = prepare_scenario(cfg, net, demand, legacy)?;
    simulate_setup(cfg, net, demand, &setup)
}

pub fn simulate_setup(
    cfg: &ScenarioConfig,
    net: &TransitNetwork,
    demand: &DemandMatrix,
    setup: &ScenarioSetup,
) -> Result<SimulationReport> {
    let q = inspection_probabilities(net, &setup.plan, &setup.flows)?;
    let engine = StrategyEngine::from_parts(
        net,
        q.iter().map(|q| setup.alpha * q).collect(),
        setup.scheme.to_matrix(net)?,
        cfg.model,
    );
    // Group demanded pairs by destination so each search setup is shared.
    let mut by_dest: Vec<(Node, Vec<(Node, f64)>)> = Vec::new();
    for (o, d, m) in demand.resolve(net)? {
        if m <= 0.0 {
            continue;
        }
        if engine.price(o, d).is_none() {
            return Err(Error::MissingPrice(net.station(o).to_string(), net.station(d).to_string()));
        }
        match by_dest.iter_mut().find(|(dd, _)| *dd == d) {
            Some((_, v)) => v.push((o, m)),
            None => by_dest.push((d, vec![(o, m)])),
        }
    }
    by_dest.sort_by_key(|(d, _)| *d);
    let grouped: Vec<Vec<OdOutcome>> = by_dest
        .par_iter()
        .map(|(d, origins)| {
            let nodes: Vec<Node> = origins.iter().map(|(o, _)| *o).collect();
            let responses = engine.best_responses_to(*d, &nodes)?;
            Ok(origins
                .iter()
                .zip(responses)
                .map(|((o, m), (s, c))| OdOutcome {
                    origin: net.station(*o).clone(),
                    destination: net.station(*d).clone(),
                    passengers: *m,
                    price: engine.price(*o, *d).expect("checked above"),
                    outlay: c.outlay,
                    exposure: c.exposure,
                    coverage: s.coverage(),
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut pairs: Vec<OdOutcome> = grouped.into_iter().flatten().collect();
    pairs.sort_by(|a, b| (&a.origin, &a.destination).cmp(&(&b.origin, &b.destination)));

    let mut report = SimulationReport {
        period: cfg.period.clone(),
        pricing: cfg.pricing,
        monitoring: setup.plan.kind(),
        model: cfg.model,
        alpha: setup.alpha,
        lambda_total: setup.plan.total(),
        trips: total_traffic(demand),
        trips_fully_paid: 0.0,
        trips_partially_paid: 0.0,
        trips_unpaid: 0.0,
        full_compliance_revenue: 0.0,
        legacy_revenue: setup.legacy_revenue,
        revenue: 0.0,
        partial_loss: 0.0,
        no_ticket_loss: 0.0,
        pairs: Vec::new(),
    };
    let mut short_changed = 0;
    for p in &pairs {
        report.full_compliance_revenue += p.passengers * p.price;
        report.revenue += p.passengers * p.outlay;
        match p.coverage {
            Coverage::Full => report.trips_fully_paid += p.passengers,
            Coverage::Partial => report.trips_partially_paid += p.passengers,
            Coverage::None => report.trips_unpaid += p.passengers,
        }
        match p.coverage {
            Coverage::None => report.no_ticket_loss += p.passengers * p.price,
            _ if p.outlay != p.price => report.partial_loss += p.passengers * (p.price - p.outlay),
            _ => {}
        }
        if p.coverage != Coverage::Full || p.outlay < p.price - cfg.tolerance {
            short_changed += 1;
        }
    }
    if cfg.pricing == PricingKind::Ic && short_changed > 0 {
        return Err(Error::NotIncentiveCompatible(short_changed));
    }
    report.pairs = pairs;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PriceSummary {
    pub pairs: usize,
    pub min: f64,
    /// Lower of the two middle values for an even count.
    pub median: f64,
    pub max: f64,
    /// Share of pairs priced strictly below the legacy tariff.
    pub share_below_legacy: f64,
    /// Same share weighted by demand in both directions.
    pub share_below_legacy_weighted: f64,
}

pub fn summarize_prices(scheme: &PricingScheme, legacy: &PricingScheme, demand: &DemandMatrix) -> PriceSummary {
    let mut values: Vec<f64> = scheme.iter().map(|(_, _, p)| p).collect();
    values.sort_by(f64::total_cmp);
    let (mut below, mut compared, mut w_below, mut w_total) = (0usize, 0usize, 0.0, 0.0);
    for (a, b, p) in scheme.iter() {
        let Some(l) = legacy.get(a, b) else { continue };
        let w = demand.get(a, b) + demand.get(b, a);
        compared += 1;
        w_total += w;
        if p < l {
            below += 1;
            w_below += w;
        }
    }
    let pick = |i: usize| values.get(i).copied().unwrap_or(0.0);
    PriceSummary {
        pairs: values.len(),
        min: pick(0),
        median: if values.is_empty() { 0.0 } else { pick((values.len() - 1) / 2) },
        max: values.last().copied().unwrap_or(0.0),
        share_below_legacy: share(below as f64, compared as f64),
        share_below_legacy_weighted: share(w_below, w_total),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComplianceRow {
    pub period: String,
    pub traffic: f64,
    pub revenue: f64,
}

/// Traffic and compliant legacy revenue per period, plus a total row.
pub fn compliance_table(periods: &[(&DemandMatrix, &PricingScheme)]) -> Result<Vec<ComplianceRow>> {
    let mut rows = Vec::with_capacity(periods.len() + 1);
    let (mut traffic, mut revenue) = (0.0, 0.0);
    for (demand, prices) in periods {
        let row = ComplianceRow {
            period: demand.period().to_string(),
            traffic: total_traffic(demand),
            revenue: revenue_full_compliance(demand, prices)?,
        };
        traffic += row.traffic;
        revenue += row.revenue;
        rows.push(row);
    }
    rows.push(ComplianceRow {
        period: "Total".into(),
        traffic,
        revenue,
    });
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pricing::SchemeKind;

    fn line() -> (TransitNetwork, DemandMatrix, PricingScheme) {
        let net = TransitNetwork::from_edges(&[("a", "b"), ("b", "c")]).unwrap();
        let demand = DemandMatrix::new("AM")
            .with("a", "b", 10.0)
            .unwrap()
            .with("b", "c", 5.0)
            .unwrap()
            .with("c", "a", 20.0)
            .unwrap();
        let legacy = PricingScheme::new(SchemeKind::Legacy)
            .with("a", "b", 2.0)
            .unwrap()
            .with("b", "c", 2.0)
            .unwrap()
            .with("a", "c", 3.0)
            .unwrap();
        (net, demand, legacy)
    }

    #[test]
    fn accounting_identity_holds() {
        let (net, demand, legacy) = line();
        let cfg = ScenarioConfig::new("AM", PricingKind::Legacy, 3.0);
        let r = run_scenario(&cfg, &net, &demand, &legacy).unwrap();
        let sum = r.revenue + r.partial_loss + r.no_ticket_loss;
        assert!((sum - r.full_compliance_revenue).abs() <= 1e-9 * r.full_compliance_revenue);
        let shares = r.share_fully_paid() + r.share_partially_paid() + r.share_unpaid();
        assert!((shares - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ic_run_is_fully_compliant() {
        let (net, demand, legacy) = line();
        let r = run_scenario(&ScenarioConfig::new("AM", PricingKind::Ic, 3.0), &net, &demand, &legacy).unwrap();
        assert_eq!(r.share_fully_paid(), 1.0);
        assert_eq!(r.total_loss(), 0.0);
        assert_eq!(r.revenue, r.full_compliance_revenue);
    }

    #[test]
    fn free_evasion_means_nobody_pays() {
        let (net, demand, legacy) = line();
        let mut cfg = ScenarioConfig::new("AM", PricingKind::Legacy, 3.0);
        cfg.alpha = AlphaSource::Explicit(0.0);
        let r = run_scenario(&cfg, &net, &demand, &legacy).unwrap();
        assert_eq!(r.share_unpaid(), 1.0);
        assert_eq!(r.revenue, 0.0);
    }

    #[test]
    fn summary_statistics() {
        let (_, demand, legacy) = line();
        let s = summarize_prices(&legacy, &legacy, &demand);
        assert_eq!((s.min, s.median, s.max), (2.0, 2.0, 3.0));
        assert_eq!(s.share_below_legacy, 0.0);
        let cheaper = legacy.clone().with("a", "c", 1.0).unwrap();
        let s = summarize_prices(&cheaper, &legacy, &demand);
        assert!((s.share_below_legacy - 1.0 / 3.0).abs() < 1e-15);
        assert!((s.share_below_legacy_weighted - 20.0 / 35.0).abs() < 1e-15);
    }
}
