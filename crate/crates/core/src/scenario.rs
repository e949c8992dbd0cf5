//! JSON scenario files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "fleet": {"source_id": 0, "uavs": [{"id": 0, "position": [0, 0, 60], "radius": 100, "role": "source"}]},
//!   "transitions": [{"mobile_id": 6, "origin": [..], "destination": [..], "speed": 10, "start_time": 5}],
//!   "policy": "etf",
//!   "traffic": {"rate_bps": 512000, "packet_size_bits": 8192, "channel_rate_bps": 54000000}
//! }
//! ```
//!
//! Everything except `schema_version` and `fleet` has a default.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::planner::PlannerConfig;
use crate::simulator::{self, Policy, Scenario, SimError, TransitionSpec};
use crate::topology::{Fleet, TopologyError, Uav, UavId};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed scenario at `{field}`: {message}")]
    Parse { field: String, message: String },
    #[error("unsupported schema_version {0} (expected {SCHEMA_VERSION})")]
    UnsupportedVersion(u32),
    #[error("invalid `{field}`: {message}")]
    Validation { field: String, message: String },
}

impl ScenarioError {
    /// Name of the offending field, when there is one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ScenarioError::Parse { field, .. } | ScenarioError::Validation { field, .. } => Some(field),
            ScenarioError::UnsupportedVersion(_) => Some("schema_version"),
            ScenarioError::Io { .. } => None,
        }
    }
}

impl From<SimError> for ScenarioError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidScenario { field, message } => ScenarioError::Validation { field, message },
            other => ScenarioError::Validation { field: "fleet".into(), message: other.to_string() },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleetFile {
    pub source_id: UavId,
    pub uavs: Vec<Uav>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrafficFile {
    #[serde(default = "default_rate")]
    pub rate_bps: f64,
    #[serde(default = "default_packet_size")]
    pub packet_size_bits: f64,
    #[serde(default = "default_channel_rate")]
    pub channel_rate_bps: f64,
}

impl Default for TrafficFile {
    fn default() -> Self {
        Self {
            rate_bps: default_rate(),
            packet_size_bits: default_packet_size(),
            channel_rate_bps: default_channel_rate(),
        }
    }
}

fn default_rate() -> f64 {
    simulator::DEFAULT_TRAFFIC_RATE
}
fn default_packet_size() -> f64 {
    simulator::DEFAULT_PACKET_SIZE
}
fn default_channel_rate() -> f64 {
    simulator::DEFAULT_CHANNEL_RATE
}
fn default_duration() -> f64 {
    simulator::DEFAULT_SIM_DURATION
}
fn default_flight_power() -> f64 {
    simulator::DEFAULT_FLIGHT_POWER
}
fn default_tx_power() -> f64 {
    simulator::DEFAULT_TX_POWER
}
fn default_record_bytes() -> u32 {
    simulator::DEFAULT_COORDINATE_RECORD_BYTES
}

/// On-disk form of a [`Scenario`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub fleet: FleetFile,
    #[serde(default)]
    pub transitions: Vec<TransitionSpec>,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default)]
    pub traffic: TrafficFile,
    #[serde(default = "default_duration")]
    pub sim_duration_s: f64,
    #[serde(default = "default_flight_power")]
    pub flight_power_w: f64,
    #[serde(default = "default_tx_power")]
    pub tx_power_w: f64,
    #[serde(default = "default_record_bytes")]
    pub coordinate_record_bytes: u32,
    #[serde(default)]
    pub planner: PlannerConfig,
    #[serde(default)]
    pub rng_seed: u64,
}

impl ScenarioFile {
    pub fn from_scenario(s: &Scenario) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            id: Some(s.id.clone()),
            fleet: FleetFile { source_id: s.fleet.source_id(), uavs: s.fleet.uavs().to_vec() },
            transitions: s.transitions.clone(),
            policy: s.policy,
            traffic: TrafficFile {
                rate_bps: s.traffic_rate,
                packet_size_bits: s.packet_size,
                channel_rate_bps: s.channel_rate,
            },
            sim_duration_s: s.sim_duration,
            flight_power_w: s.flight_power,
            tx_power_w: s.tx_power,
            coordinate_record_bytes: s.coordinate_record_bytes,
            planner: s.planner,
            rng_seed: s.rng_seed,
        }
    }

    /// Validates and converts. `default_id` names the scenario when the file
    /// carries no `id`.
    pub fn into_scenario(self, default_id: &str) -> Result<Scenario, ScenarioError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ScenarioError::UnsupportedVersion(self.schema_version));
        }
        let fleet = Fleet::new(self.fleet.uavs, self.fleet.source_id).map_err(fleet_error)?;
        let scenario = Scenario {
            id: self.id.unwrap_or_else(|| default_id.to_string()),
            fleet,
            traffic_rate: self.traffic.rate_bps,
            packet_size: self.traffic.packet_size_bits,
            channel_rate: self.traffic.channel_rate_bps,
            transitions: self.transitions,
            policy: self.policy,
            sim_duration: self.sim_duration_s,
            flight_power: self.flight_power_w,
            tx_power: self.tx_power_w,
            coordinate_record_bytes: self.coordinate_record_bytes,
            planner: self.planner,
            rng_seed: self.rng_seed,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

fn fleet_error(e: TopologyError) -> ScenarioError {
    let field = match &e {
        TopologyError::SourceCount(_) | TopologyError::UnknownUav(_) => "fleet.source_id",
        _ => "fleet.uavs",
    };
    ScenarioError::Validation { field: field.into(), message: e.to_string() }
}

/// Parses and validates scenario JSON.
pub fn parse_scenario(json: &str, default_id: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(json);
    let file: ScenarioFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        // Missing fields are reported against their parent; name them directly.
        let message = inner.to_string();
        let field = match message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
            Some(name) if field == "." => name.to_string(),
            Some(name) => format!("{field}.{name}"),
            None => field,
        };
        ScenarioError::Parse { field, message }
    })?;
    file.into_scenario(default_id)
}

/// Loads a scenario; its id defaults to the file stem.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    parse_scenario(&text, stem)
}

pub fn to_json(scenario: &Scenario) -> String {
    serde_json::to_string_pretty(&ScenarioFile::from_scenario(scenario)).expect("scenario serializes")
}

pub fn save_scenario(path: impl AsRef<Path>, scenario: &Scenario) -> Result<(), ScenarioError> {
    let path = path.as_ref();
    fs::write(path, to_json(scenario) + "\n")
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })
}
