//! Incentive-compatible fare pricing and fare-evasion analysis for
//! proof-of-payment transit networks.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod counterfactual;
pub mod error;
pub mod io;
pub mod line;
pub mod monitoring;
pub mod network;
pub mod pricing;
pub mod strategy;
pub mod technology;

pub use error::{Error, ErrorCategory, Result, Violation};
pub use monitoring::{
    alpha_from_totals, calibrate_alpha, edge_inspection_prob, ic_edge_prices, inspection_probabilities,
    proportional_plan, uniform_plan, EdgePriceTable, MonitoringPlan, PlanKind,
};
pub use network::{
    assign_flows, shortest_path, total_traffic, validate_network, DemandMatrix, Edge, EdgeFlows, Node, Path,
    StationId, TransitNetwork,
};
pub use pricing::{
    calibrate_alpha_by_revenue, cap_and_adjust, od_ic_prices, revenue_full_compliance, CapConfig, CapOutcome,
    PricingScheme, SchemeKind,
};
pub use strategy::{
    best_response, brute_force_best_response, check_incentive_compatibility, compute_ic_equilibrium,
    strategy_cost, CostBreakdown, Coverage, DeviationModel, EquilibriumConfig, EquilibriumOutcome, IcViolation,
    PassengerStrategy, StrategyEngine,
};
pub use technology::MonitoringTechnology;
pub use counterfactual::{
    compliance_table, loss_decomposition, run_scenario, summarize_prices, AlphaSource, MonitoringKind,
    PriceSummary, PricingKind, ScenarioConfig, SimulationReport,
};
