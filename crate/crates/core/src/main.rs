use std::fs;
use std::path::{Path as FsPath, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use popfare::counterfactual::{build_monitoring_plan, prepare_scenario, summarize_prices};
use popfare::io::{
    self, format_currency, generate_synthetic, load_bundle, load_demand_periods, load_network, load_prices,
    load_prices_as, write_bundle, write_scheme, InputFile, LambdaTotalConfig, LoadedBundle, RunManifest,
    SimulateConfig, SyntheticConfig, BUNDLE_FILE, MANIFEST_FILE,
};
use popfare::line::{
    check_inspector_optimality, InspectorDensity, LineDemandDensity, LineModel, QuadratureConfig,
};
use popfare::{
    alpha_from_totals, assign_flows, check_incentive_compatibility, compute_ic_equilibrium,
    revenue_full_compliance, total_traffic, AlphaSource, DeviationModel, EquilibriumConfig, Error,
    ErrorCategory, MonitoringKind, MonitoringTechnology, PricingKind, Result, SchemeKind, TransitNetwork,
};

#[derive(Parser)]
#[command(name = "popfare", version, about = "Fare pricing and evasion analysis for proof-of-payment transit")]
struct Cli {
    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a dataset bundle or a set of network/demand/price files.
    Validate(ValidateArgs),
    /// Write a seeded synthetic dataset bundle.
    Generate(GenerateArgs),
    /// Compute IC or capped-IC ticket prices for one period.
    Prices(PricesArgs),
    /// Inspector mass and fine calibration.
    Calibrate(CalibrateArgs),
    /// Run counterfactual scenarios and write report tables.
    Simulate(SimulateArgs),
    /// Audit a price file for incentive compatibility.
    CheckIc(CheckIcArgs),
    /// Solve for flows that are consistent with their own IC prices.
    Equilibrium(EquilibriumArgs),
    /// Continuous single-line model.
    LineModel(LineModelArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MonitoringArg {
    Uniform,
    Proportional,
}

impl From<MonitoringArg> for MonitoringKind {
    fn from(m: MonitoringArg) -> Self {
        match m {
            MonitoringArg::Uniform => MonitoringKind::Uniform,
            MonitoringArg::Proportional => MonitoringKind::Proportional,
        }
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, conflicts_with = "edges")]
    bundle: Option<PathBuf>,
    #[arg(long, required_unless_present = "bundle")]
    edges: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    stations: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    demand: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    prices: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2019)]
    seed: u64,
    #[arg(long, default_value_t = 91)]
    stations: usize,
    #[arg(long, default_value_t = 6)]
    lines: usize,
    #[arg(long, default_value_t = 729_110.0)]
    daily_trips: f64,
}

/// Scenario inputs shared by several verbs.
#[derive(Args)]
struct ScenarioArgs {
    #[arg(long)]
    bundle: PathBuf,
    #[arg(long)]
    period: String,
    #[arg(long, value_enum, default_value = "uniform")]
    monitoring: MonitoringArg,
    /// Fine; calibrated from compliant legacy revenue when absent.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 4013.0)]
    lambda_total: f64,
    /// identity, linear:<k> or power:<gamma>.
    #[arg(long, default_value = "identity")]
    technology: MonitoringTechnology,
    /// single-ticket or multi-ticket.
    #[arg(long, default_value = "multi-ticket")]
    model: DeviationModel,
}

impl ScenarioArgs {
    fn alpha_source(&self) -> AlphaSource {
        match self.alpha {
            Some(a) => AlphaSource::Explicit(a),
            None => AlphaSource::Calibrated,
        }
    }

    fn config(&self, pricing: PricingKind) -> SimulateConfig {
        SimulateConfig {
            periods: vec![self.period.clone()],
            pricing: vec![pricing],
            monitoring: vec![self.monitoring.into()],
            model: self.model,
            alpha: self.alpha_source(),
            lambda_total: self.lambda_total,
            technology: self.technology.clone(),
            ..SimulateConfig::default()
        }
    }
}

#[derive(Args)]
struct PricesArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// ic or capped-ic.
    #[arg(long, default_value = "capped-ic")]
    pricing: PricingKind,
    /// Where to write the price table.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// Compliant revenue to match.
    #[arg(long, conflicts_with = "bundle")]
    revenue: Option<f64>,
    /// Take the revenue from a bundle's legacy tariff instead.
    #[arg(long, requires = "period")]
    bundle: Option<PathBuf>,
    #[arg(long)]
    period: Option<String>,
    /// Total inspector mass; estimated from the crew figures when absent.
    #[arg(long)]
    lambda_total: Option<f64>,
    #[arg(long, default_value_t = 30.0)]
    inspectors: f64,
    #[arg(long, default_value_t = 360.0)]
    period_minutes: f64,
    #[arg(long, default_value_t = 2.69)]
    minutes_per_station: f64,
    #[arg(long, default_value_t = 88.0)]
    edges: f64,
}

#[derive(Args)]
struct SimulateArgs {
    /// Re-run a previous run exactly.
    #[arg(long, conflicts_with = "bundle")]
    manifest: Option<PathBuf>,
    #[arg(long, required_unless_present = "manifest")]
    bundle: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Periods to run; all periods when empty.
    #[arg(long, value_delimiter = ',')]
    periods: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "legacy,ic,capped-ic")]
    pricing: Vec<PricingKind>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "uniform,proportional")]
    monitoring: Vec<MonitoringArg>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 4013.0)]
    lambda_total: f64,
    #[arg(long, default_value = "identity")]
    technology: MonitoringTechnology,
    #[arg(long, default_value = "multi-ticket")]
    model: DeviationModel,
}

#[derive(Args)]
struct CheckIcArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Price table to audit; the bundle's legacy tariff when absent.
    #[arg(long)]
    prices: Option<PathBuf>,
    /// Only audit pairs with demand.
    #[arg(long)]
    demanded_only: bool,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Print at most this many violations.
    #[arg(long, default_value_t = 20)]
    limit: usize,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct EquilibriumArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, default_value_t = 200)]
    max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    /// Where to write per-edge flows and prices.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LineModelArgs {
    /// Constant trip density between any two points.
    #[arg(long, default_value_t = 1.0)]
    demand: f64,
    /// uniform:<total> or linear:<intercept>:<slope>.
    #[arg(long, default_value = "uniform:1")]
    inspectors: String,
    #[arg(long, default_value = "identity")]
    technology: MonitoringTechnology,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 2048)]
    nodes: usize,
    /// Trip end points, e.g. `--trip 0.25 0.75`; repeatable.
    #[arg(long, num_args = 2, value_names = ["FROM", "TO"], action = clap::ArgAction::Append)]
    trip: Vec<f64>,
    /// Number of random inspector reallocations to test.
    #[arg(long, default_value_t = 0)]
    perturbations: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn exit_code(category: ErrorCategory) -> u8 {
    match category {
        ErrorCategory::Parse => 2,
        ErrorCategory::Validation => 3,
        ErrorCategory::Convergence => 4,
        ErrorCategory::Io => 5,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Validate(a) => validate(a),
        Command::Generate(a) => generate(a),
        Command::Prices(a) => prices(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Simulate(a) => simulate(a),
        Command::CheckIc(a) => check_ic(a),
        Command::Equilibrium(a) => equilibrium(a),
        Command::LineModel(a) => line_model(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.category()))
        }
    }
}

fn describe_network(net: &TransitNetwork) {
    println!("stations: {}", net.station_count());
    println!("edges: {}", net.edge_count());
}

fn validate(a: ValidateArgs) -> Result<()> {
    if let Some(b) = a.bundle {
        let data = load_bundle(&b)?;
        describe_network(&data.network);
        for d in &data.demand {
            println!("demand {}: {} pairs, {} trips", d.period(), d.len(), total_traffic(d));
        }
        if let Some(t) = &data.tariff {
            println!("prices: {} peak, {} off-peak pairs", t.peak.len(), t.off_peak.len());
        }
        println!("ok");
        return Ok(());
    }
    let edges = a.edges.expect("clap requires edges without a bundle");
    let net = load_network(&edges, a.stations.as_deref())?;
    describe_network(&net);
    if let Some(p) = &a.demand {
        for d in load_demand_periods(p, "all")? {
            d.resolve(&net)?;
            println!("demand {}: {} pairs, {} trips", d.period(), d.len(), total_traffic(&d));
        }
    }
    if let Some(p) = &a.prices {
        let t = load_prices(p)?;
        for s in [&t.peak, &t.off_peak] {
            for (x, y, _) in s.iter() {
                net.node(x)?;
                net.node(y)?;
            }
        }
        println!("prices: {} peak, {} off-peak pairs", t.peak.len(), t.off_peak.len());
    }
    println!("ok");
    Ok(())
}

fn generate(a: GenerateArgs) -> Result<()> {
    let cfg = SyntheticConfig {
        seed: a.seed,
        stations: a.stations,
        lines: a.lines,
        daily_trips: a.daily_trips,
        ..SyntheticConfig::default()
    };
    let data = generate_synthetic(&cfg)?;
    write_bundle(&data, Some(&cfg), &cfg.periods, &a.out)?;
    describe_network(&data.network);
    println!("wrote {}", a.out.join(BUNDLE_FILE).display());
    Ok(())
}

fn legacy_for<'a>(data: &'a LoadedBundle, period: &str) -> Result<&'a popfare::PricingScheme> {
    let (p, _) = data.period(period)?;
    let tariff = data
        .tariff
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("bundle has no legacy price file".into()))?;
    Ok(tariff.for_period(p.peak))
}

fn prices(a: PricesArgs) -> Result<()> {
    if a.pricing == PricingKind::Legacy {
        return Err(Error::InvalidInput("use ic or capped-ic; legacy prices come from the bundle".into()));
    }
    let data = load_bundle(&a.scenario.bundle)?;
    let (_, demand) = data.period(&a.scenario.period)?;
    let legacy = legacy_for(&data, &a.scenario.period)?;
    let sim = a.scenario.config(a.pricing);
    let cfg = sim.scenario(&a.scenario.period, &sim.monitoring[0], a.pricing);
    let setup = prepare_scenario(&cfg, &data.network, demand, legacy)?;
    let s = summarize_prices(&setup.scheme, legacy, demand);
    println!("scheme: {}", setup.scheme.kind());
    println!("fine: {}", format_currency(setup.alpha));
    println!("pairs: {}", s.pairs);
    println!("min: {}", format_currency(s.min));
    println!("median: {}", format_currency(s.median));
    println!("max: {}", format_currency(s.max));
    println!("below legacy: {}", io::format_percent(s.share_below_legacy));
    println!("below legacy, trip-weighted: {}", io::format_percent(s.share_below_legacy_weighted));
    if let Some(out) = a.out {
        write_scheme(&setup.scheme, &out)?;
        println!("wrote {}", out.display());
    }
    Ok(())
}

fn calibrate(a: CalibrateArgs) -> Result<()> {
    let lambda_total = match a.lambda_total {
        Some(l) => l,
        None => {
            let steps = LambdaTotalConfig {
                inspectors: a.inspectors,
                period_minutes: a.period_minutes,
                minutes_per_station: a.minutes_per_station,
                edges: a.edges,
            }
            .steps()?;
            println!("stations per inspector: {}", steps.stations_per_inspector);
            println!("coverage per edge: {:.2}", steps.coverage_per_edge);
            println!("mass per edge: {:.2}", steps.mass_per_edge);
            println!("lambda total: {}", steps.total);
            steps.total
        }
    };
    let revenue = match (a.revenue, &a.bundle) {
        (Some(r), _) => Some(r),
        (None, Some(b)) => {
            let data = load_bundle(b)?;
            let period = a.period.as_deref().expect("clap requires a period");
            let (_, demand) = data.period(period)?;
            let r = revenue_full_compliance(demand, legacy_for(&data, period)?)?;
            println!("compliant legacy revenue: {}", format_currency(r));
            Some(r)
        }
        (None, None) => None,
    };
    if let Some(r) = revenue {
        let alpha = alpha_from_totals(r, lambda_total)?;
        println!("fine: {}", format_currency(alpha));
        println!("fine (full precision): {alpha}");
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let (manifest, raw) = match &a.manifest {
        Some(path) => {
            let raw = fs::read_to_string(path).map_err(Error::file(path))?;
            let m: RunManifest = serde_json::from_str(&raw)?;
            m.input("bundle")?.verify()?;
            (m, Some(raw))
        }
        None => {
            let bundle = a.bundle.as_ref().expect("clap requires a bundle without a manifest");
            let bundle = fs::canonicalize(bundle).map_err(Error::file(bundle))?;
            let config = SimulateConfig {
                periods: a.periods.clone(),
                pricing: a.pricing.clone(),
                monitoring: a.monitoring.iter().map(|m| (*m).into()).collect(),
                model: a.model,
                alpha: match a.alpha {
                    Some(x) => AlphaSource::Explicit(x),
                    None => AlphaSource::Calibrated,
                },
                lambda_total: a.lambda_total,
                technology: a.technology.clone(),
                ..SimulateConfig::default()
            };
            let data = load_bundle(&bundle)?;
            let seed = data.bundle.generator.as_ref().map_or(0, |g| g.seed);
            (RunManifest::new(vec![InputFile::new("bundle", &bundle)?], config, seed), None)
        }
    };
    let data = load_bundle(&manifest.input("bundle")?.path)?;
    let output = manifest.config.run(&data)?;
    fs::create_dir_all(&a.out).map_err(Error::file(&a.out))?;
    let mut written = output.write(&a.out)?;
    match raw {
        Some(text) => {
            let p = a.out.join(MANIFEST_FILE);
            fs::write(&p, text).map_err(Error::file(&p))?;
            written.push(p);
        }
        None => written.push(manifest.write(&a.out)?),
    }
    for r in &output.reports {
        println!(
            "{:<8} {:<10} {:<12} fully paid {:>7}  unpaid {:>7}  revenue {:>14}  loss {:>7}",
            r.period,
            r.pricing,
            r.monitoring,
            io::format_percent(r.share_fully_paid()),
            io::format_percent(r.share_unpaid()),
            format_currency(r.revenue),
            io::format_percent(r.loss_share()),
        );
    }
    println!("wrote {} files to {}", written.len(), a.out.display());
    Ok(())
}

fn check_ic(a: CheckIcArgs) -> Result<()> {
    let data = load_bundle(&a.scenario.bundle)?;
    let net = &data.network;
    let (period, demand) = data.period(&a.scenario.period)?;
    let scheme = match &a.prices {
        Some(p) => load_prices_as(p, SchemeKind::Legacy)?.for_period(period.peak).clone(),
        None => legacy_for(&data, &a.scenario.period)?.clone(),
    };
    let flows = assign_flows(net, demand)?;
    let plan = build_monitoring_plan(
        net,
        &flows,
        &a.scenario.monitoring.into(),
        a.scenario.lambda_total,
        &a.scenario.technology,
    )?;
    let alpha = match a.scenario.alpha {
        Some(x) => x,
        None => alpha_from_totals(revenue_full_compliance(demand, legacy_for(&data, &a.scenario.period)?)?, plan.total())?,
    };
    let violations = check_incentive_compatibility(
        net,
        &scheme,
        &plan,
        &flows,
        alpha,
        a.scenario.model,
        a.demanded_only.then_some(demand),
        a.tolerance,
    )?;
    if a.json {
        let rows: Vec<_> = violations.iter().take(a.limit).map(|v| v.row(net)).collect();
        println!("{}", serde_json::to_string_pretty(&rows)?);
    } else {
        println!("fine: {}", format_currency(alpha));
        println!("violations: {}", violations.len());
        for v in violations.iter().take(a.limit) {
            println!(
                "{}-{}: price {} undercut by {} ({})",
                v.origin,
                v.destination,
                format_currency(v.price),
                format_currency(v.best_cost),
                v.witness.describe(net)
            );
        }
    }
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::NotIncentiveCompatible(violations.len()))
    }
}

fn equilibrium(a: EquilibriumArgs) -> Result<()> {
    let data = load_bundle(&a.scenario.bundle)?;
    let net = &data.network;
    let (_, demand) = data.period(&a.scenario.period)?;
    let flows = assign_flows(net, demand)?;
    let plan = build_monitoring_plan(
        net,
        &flows,
        &a.scenario.monitoring.into(),
        a.scenario.lambda_total,
        &a.scenario.technology,
    )?;
    let alpha = match a.scenario.alpha {
        Some(x) => x,
        None => alpha_from_totals(revenue_full_compliance(demand, legacy_for(&data, &a.scenario.period)?)?, plan.total())?,
    };
    let cfg = EquilibriumConfig {
        max_iterations: a.max_iterations,
        tolerance: a.tolerance,
        ..EquilibriumConfig::default()
    };
    let out = compute_ic_equilibrium(net, demand, &plan, alpha, &cfg)?;
    println!("iterations: {}", out.iterations);
    println!("residual: {:e}", out.residual);
    println!("damped: {}", out.damped);
    println!("path price gap: {:e}", out.path_price_gap);
    println!("unused edges: {}", out.unused_edges.len());
    for &e in &out.unused_edges {
        let (x, y) = net.edge_label(e);
        println!("  {x}-{y}");
    }
    if let Some(path) = a.out {
        write_edge_table(net, out.flows.values(), &out.prices, &path)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_edge_table(net: &TransitNetwork, flows: &[f64], prices: &[f64], path: &FsPath) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["station_a", "station_b", "flow", "price"])?;
    for e in 0..net.edge_count() {
        let (x, y) = net.edge_label(e);
        w.write_record([x.as_str(), y.as_str(), &flows[e].to_string(), &prices[e].to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_inspectors(text: &str) -> Result<InspectorDensity> {
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("bad number `{s}` in inspector density `{text}`")))
    };
    match parts.as_slice() {
        ["uniform", total] => InspectorDensity::uniform(num(total)?),
        ["linear", a, b] => InspectorDensity::linear(num(a)?, num(b)?),
        _ => Err(Error::InvalidInput(format!(
            "inspector density must be uniform:<total> or linear:<intercept>:<slope>, got `{text}`"
        ))),
    }
}

fn line_model(a: LineModelArgs) -> Result<()> {
    let d = LineDemandDensity::constant(a.demand)?;
    let lam = parse_inspectors(&a.inspectors)?;
    let quad = QuadratureConfig::new(a.nodes, QuadratureConfig::default().tolerance)?;
    let model = LineModel::new(&d, &lam, &a.technology, &quad)?;
    println!("revenue: {}", model.revenue(a.alpha)?);
    for t in a.trip.chunks(2) {
        let (x, y) = (t[0], t[1]);
        println!(
            "trip {x}-{y}: inspection probability {}, IC price {}",
            model.inspection_probability(x, y)?,
            model.ic_price(x, y, a.alpha)?
        );
    }
    if a.perturbations > 0 {
        let r = check_inspector_optimality(&lam, &a.technology, &d, a.alpha, &quad, a.perturbations, a.seed)?;
        println!("stationarity residual: {:e}", r.stationarity_residual);
        println!("largest revenue change: {:e}", r.max_delta());
        println!("local maximum: {}", r.is_local_maximum(1e-6));
    }
    Ok(())
}
