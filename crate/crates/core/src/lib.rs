//! Seamless UAV transitions inside a multi-hop aerial multicast.
//!
//! The crate models every UAV's coverage as a sphere (its referred
//! transmission range, RTR), builds an LCRT multicast tree over the fleet,
//! plans trajectories that keep a mobile receiver inside forwarder coverage,
//! and simulates multicast delivery to measure delay, throughput, energy and
//! control overhead against a no-handover baseline.

pub mod geometry;
pub mod planner;
pub mod scenario;
pub mod simulator;
pub mod topology;

pub use geometry::{distance, Point3, Segment, Sphere};
pub use planner::{
    oracle_is_seamless, CheckTrace, PlanError, PlanKind, Planner, PlannerConfig, TransitionPlan,
    TransitionRequest, TurningCenter, Verdict,
};
pub use scenario::{load_scenario, ScenarioError, ScenarioFile};
pub use simulator::{run, MetricsReport, Policy, Scenario};
pub use topology::{build_lcrt_tree, Fleet, MulticastTree, Role, Uav, UavId};
