//! Continuous single-line model.

mod density;
mod model;

pub use density::{BumpPair, InspectorDensity, LineDemandDensity, MIN_DEMAND_GRID};
pub use model::{
    check_inspector_optimality, ic_price_line, inspection_probability, line_revenue, pass_density,
    random_bump_pair, strategy_cost_line, LineModel, LineStrategy, OptimalityReport, PassProfile,
    QuadratureConfig, MIN_QUADRATURE_NODES,
};
