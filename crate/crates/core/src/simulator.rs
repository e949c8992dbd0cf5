//! Discrete-event multicast simulation over the LCRT tree.
//!
//! Links are contention-free: a hop costs exactly one packet serialization
//! time (`packet_size / channel_rate`). Static receivers always hear their
//! parent. A mobile receiver hears a forwarder transmission only if it sits
//! inside that forwarder's RTR when the packet arrives; packets arriving
//! while it is uncovered are dropped (forwarders do not buffer).
//!
//! Under [`Policy::Lcrt`] the mobile flies its straight line and is served by
//! `F_A` until it first leaves `RTR(F_A)`, then by nobody until it enters
//! `RTR(F_B)`. Under [`Policy::Etf`] it flies the planned trajectory and is
//! served by any of the plan's forwarders that covers it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, segment_sphere_intersections, Point3, Segment};
use crate::planner::{PlanError, PlanKind, Planner, PlannerConfig, TransitionPlan, TransitionRequest};
use crate::topology::{build_lcrt_tree, Fleet, MulticastTree, Role, TopologyError, UavId};

/// Channel data rate, bits/s.
pub const DEFAULT_CHANNEL_RATE: f64 = 54e6;
/// Flight power of the airframe, W.
pub const DEFAULT_FLIGHT_POWER: f64 = 174.21;
/// 15 dBm transmit power, W.
pub const DEFAULT_TX_POWER: f64 = 0.031_622_776_601_683_79;
pub const DEFAULT_PACKET_SIZE: f64 = 8192.0;
pub const DEFAULT_TRAFFIC_RATE: f64 = 512_000.0;
pub const DEFAULT_SIM_DURATION: f64 = 200.0;
/// x, y, z and radius as 32-bit floats.
pub const DEFAULT_COORDINATE_RECORD_BYTES: u32 = 16;

/// Origin and fleet position of a mobile must agree within this distance.
const ORIGIN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {field}: {message}")]
    InvalidScenario { field: String, message: String },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Plan(#[from] PlanError),
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::InvalidScenario { field: field.into(), message: message.into() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Plain LCRT tree without handover support.
    Lcrt,
    #[default]
    Etf,
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Policy::Lcrt => "lcrt",
            Policy::Etf => "etf",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionSpec {
    pub mobile_id: UavId,
    pub origin: Point3,
    pub destination: Point3,
    /// m/s
    pub speed: f64,
    /// s
    pub start_time: f64,
    /// Forwarder covering the origin; resolved automatically when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fa: Option<UavId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fb: Option<UavId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub fleet: Fleet,
    /// bits/s emitted by the source
    pub traffic_rate: f64,
    /// bits
    pub packet_size: f64,
    /// bits/s
    pub channel_rate: f64,
    pub transitions: Vec<TransitionSpec>,
    pub policy: Policy,
    /// s
    pub sim_duration: f64,
    /// W
    pub flight_power: f64,
    /// W, used to price control traffic
    pub tx_power: f64,
    pub coordinate_record_bytes: u32,
    pub planner: PlannerConfig,
    pub rng_seed: u64,
}

impl Scenario {
    /// A scenario with the default traffic and energy parameters.
    pub fn new(id: impl Into<String>, fleet: Fleet) -> Self {
        Self {
            id: id.into(),
            fleet,
            traffic_rate: DEFAULT_TRAFFIC_RATE,
            packet_size: DEFAULT_PACKET_SIZE,
            channel_rate: DEFAULT_CHANNEL_RATE,
            transitions: Vec::new(),
            policy: Policy::Etf,
            sim_duration: DEFAULT_SIM_DURATION,
            flight_power: DEFAULT_FLIGHT_POWER,
            tx_power: DEFAULT_TX_POWER,
            coordinate_record_bytes: DEFAULT_COORDINATE_RECORD_BYTES,
            planner: PlannerConfig::default(),
            rng_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let positive = |field: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(invalid(field, format!("must be positive and finite, got {v}")))
            }
        };
        positive("traffic.rate_bps", self.traffic_rate)?;
        positive("traffic.packet_size_bits", self.packet_size)?;
        positive("traffic.channel_rate_bps", self.channel_rate)?;
        positive("sim_duration_s", self.sim_duration)?;
        positive("planner.oracle_step", self.planner.oracle_step)?;
        if !(self.flight_power.is_finite() && self.flight_power >= 0.0) {
            return Err(invalid("flight_power_w", "must be non-negative"));
        }
        if !(self.tx_power.is_finite() && self.tx_power >= 0.0) {
            return Err(invalid("tx_power_w", "must be non-negative"));
        }
        if self.traffic_rate > self.channel_rate {
            return Err(invalid(
                "traffic.rate_bps",
                format!("{} exceeds the channel rate {}", self.traffic_rate, self.channel_rate),
            ));
        }
        let mut seen = BTreeSet::new();
        for (k, t) in self.transitions.iter().enumerate() {
            let field = |name: &str| format!("transitions[{k}].{name}");
            let mobile = self
                .fleet
                .get(t.mobile_id)
                .map_err(|_| invalid(field("mobile_id"), format!("unknown uav {}", t.mobile_id)))?;
            if mobile.role != Role::Receiver {
                return Err(invalid(field("mobile_id"), format!("uav {} is not a receiver", t.mobile_id)));
            }
            if !seen.insert(t.mobile_id) {
                return Err(invalid(field("mobile_id"), format!("uav {} already has a transition", t.mobile_id)));
            }
            if !t.origin.is_finite() {
                return Err(invalid(field("origin"), "coordinates must be finite"));
            }
            if !t.destination.is_finite() {
                return Err(invalid(field("destination"), "coordinates must be finite"));
            }
            if distance(t.origin, mobile.position) > ORIGIN_TOLERANCE {
                return Err(invalid(
                    field("origin"),
                    format!("{} differs from the fleet position {} of uav {}", t.origin, mobile.position, t.mobile_id),
                ));
            }
            positive(&field("speed"), t.speed)?;
            if !(t.start_time.is_finite() && t.start_time >= 0.0) {
                return Err(invalid(field("start_time"), "must be non-negative"));
            }
            for (name, id) in [("fa", t.fa), ("fb", t.fb)] {
                if let Some(id) = id {
                    self.fleet.get(id).map_err(|_| invalid(field(name), format!("unknown uav {id}")))?;
                }
            }
        }
        Ok(())
    }

    /// Builds the planner request for transition `k`. `F_A` defaults to the
    /// mobile's tree parent when it covers the origin, otherwise to the
    /// nearest forwarder covering it; `F_B` to the nearest forwarder covering
    /// the destination. Distance ties go to the smaller id.
    pub fn transition_request(&self, tree: &MulticastTree, k: usize) -> Result<TransitionRequest, SimError> {
        let t = self
            .transitions
            .get(k)
            .ok_or_else(|| invalid("transitions", format!("index {k} out of range ({} defined)", self.transitions.len())))?;
        if tree.is_forwarder(t.mobile_id) {
            return Err(invalid(
                format!("transitions[{k}].mobile_id"),
                format!("uav {} relays multicast traffic and cannot move", t.mobile_id),
            ));
        }
        let nearest_cover = |p: Point3, what: &str| -> Result<UavId, SimError> {
            tree.forwarders
                .iter()
                .filter_map(|&id| self.fleet.get(id).ok())
                .filter(|f| f.covers(p))
                .min_by(|a, b| distance(a.position, p).total_cmp(&distance(b.position, p)).then(a.id.cmp(&b.id)))
                .map(|f| f.id)
                .ok_or_else(|| invalid(format!("transitions[{k}].{what}"), format!("{p} is not covered by any forwarder")))
        };
        let fa = match t.fa {
            Some(id) => id,
            None => match tree.parent.get(&t.mobile_id) {
                Some(&p) if self.fleet.get(p)?.covers(t.origin) => p,
                _ => nearest_cover(t.origin, "origin")?,
            },
        };
        let fb = match t.fb {
            Some(id) => id,
            None => nearest_cover(t.destination, "destination")?,
        };
        Ok(TransitionRequest { mobile_id: t.mobile_id, origin: t.origin, destination: t.destination, fa, fb })
    }

    /// Number of packets the source emits during the run.
    pub fn packet_count(&self) -> u64 {
        (self.sim_duration * self.traffic_rate / self.packet_size).floor() as u64
    }

    pub fn packet_interval(&self) -> f64 {
        self.packet_size / self.traffic_rate
    }

    pub fn hop_delay(&self) -> f64 {
        self.packet_size / self.channel_rate
    }
}

/// Position along a polyline flown at constant speed from `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    waypoints: Vec<Point3>,
    cumulative: Vec<f64>,
    speed: f64,
    start: f64,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Point3>, speed: f64, start: f64) -> Self {
        assert!(!waypoints.is_empty(), "trajectory needs at least one waypoint");
        assert!(speed > 0.0, "speed must be positive");
        let mut cumulative = Vec::with_capacity(waypoints.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in waypoints.windows(2) {
            acc += distance(w[0], w[1]);
            cumulative.push(acc);
        }
        Self { waypoints, cumulative, speed, start }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn arrival_time(&self) -> f64 {
        self.start + self.length() / self.speed
    }

    /// Arc length flown by time `t`.
    pub fn travelled(&self, t: f64) -> f64 {
        ((t - self.start) * self.speed).clamp(0.0, self.length())
    }

    pub fn position(&self, t: f64) -> Point3 {
        self.point_at(self.travelled(t))
    }

    pub fn point_at(&self, s: f64) -> Point3 {
        if s >= self.length() {
            return *self.waypoints.last().unwrap();
        }
        let i = self.cumulative.partition_point(|&c| c <= s).saturating_sub(1);
        let leg = self.cumulative[i + 1] - self.cumulative[i];
        if leg == 0.0 {
            return self.waypoints[i];
        }
        self.waypoints[i].lerp(self.waypoints[i + 1], (s - self.cumulative[i]) / leg)
    }
}

/// Arc-length parametrised position along a plan: the origin before
/// `start`, the destination after arrival.
pub fn mobile_position(plan: &TransitionPlan, speed: f64, start: f64, t: f64) -> Point3 {
    Trajectory::new(plan.waypoints.clone(), speed, start).position(t)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketRecord {
    pub seq: u64,
    pub sent_at: f64,
    pub delivered_at: BTreeMap<UavId, f64>,
}

/// Who may serve a mobile receiver.
#[derive(Debug, Clone, PartialEq)]
enum Service {
    /// Any of these forwarders, when the mobile is inside its RTR.
    Covering(BTreeSet<UavId>),
    /// `fa` up to arc length `leave`, nobody until `join`, then `fb`.
    Handoff { fa: UavId, fb: UavId, leave: f64, join: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MobileRun {
    pub spec: TransitionSpec,
    pub request: TransitionRequest,
    /// `None` when the planner could not produce a trajectory.
    pub plan: Option<TransitionPlan>,
    pub trajectory: Trajectory,
    service: Service,
}

impl MobileRun {
    fn prepare(scenario: &Scenario, tree: &MulticastTree, k: usize) -> Result<Self, SimError> {
        let spec = scenario.transitions[k];
        let request = scenario.transition_request(tree, k)?;
        let fleet = &scenario.fleet;
        match scenario.policy {
            Policy::Etf => {
                let planner = Planner::new(fleet, tree, scenario.planner);
                let plan = match planner.plan_transition(&request) {
                    Ok(plan) => Some(plan),
                    Err(PlanError::NoChain { .. } | PlanError::NoCrossing) => None,
                    Err(e) => return Err(e.into()),
                };
                let (waypoints, serving) = match &plan {
                    Some(p) => (p.waypoints.clone(), p.serving_forwarders().into_iter().collect()),
                    // Failed transition: the mobile holds its position.
                    None => (vec![request.origin], BTreeSet::from([request.fa])),
                };
                Ok(Self {
                    spec,
                    request,
                    plan,
                    trajectory: Trajectory::new(waypoints, spec.speed, spec.start_time),
                    service: Service::Covering(serving),
                })
            }
            Policy::Lcrt => {
                let waypoints = if request.origin == request.destination {
                    vec![request.origin]
                } else {
                    vec![request.origin, request.destination]
                };
                let trajectory = Trajectory::new(waypoints, spec.speed, spec.start_time);
                let (leave, join) = lcrt_handoff(fleet, &request)?;
                Ok(Self {
                    spec,
                    request,
                    plan: None,
                    trajectory,
                    service: Service::Handoff { fa: request.fa, fb: request.fb, leave, join },
                })
            }
        }
    }

    fn serves(&self, fleet: &Fleet, forwarder: UavId, t: f64) -> bool {
        match &self.service {
            Service::Covering(ids) => {
                ids.contains(&forwarder)
                    && fleet.get(forwarder).map(|f| f.covers(self.trajectory.position(t))).unwrap_or(false)
            }
            Service::Handoff { fa, fb, leave, join } => {
                let s = self.trajectory.travelled(t);
                (forwarder == *fa && s <= *leave) || (forwarder == *fb && s >= *join)
            }
        }
    }

    pub fn plan_kind(&self) -> Option<PlanKind> {
        self.plan.as_ref().map(|p| p.kind)
    }
}

/// Arc lengths along the straight line where the mobile leaves `RTR(F_A)`
/// and first re-enters coverage through `RTR(F_B)`.
fn lcrt_handoff(fleet: &Fleet, req: &TransitionRequest) -> Result<(f64, f64), SimError> {
    if req.origin == req.destination {
        return Ok((f64::INFINITY, f64::INFINITY));
    }
    let fa = fleet.get(req.fa)?;
    let fb = fleet.get(req.fb)?;
    let slt = Segment::new(req.origin, req.destination);
    let len = slt.length();
    let leave = if fa.covers(slt.b) {
        f64::INFINITY
    } else {
        segment_sphere_intersections(&slt, &fa.rtr())
            .map_err(PlanError::from)?
            .last()
            .map_or(0.0, |c| c.t * len)
    };
    let entry = if fb.covers(slt.a) {
        0.0
    } else {
        segment_sphere_intersections(&slt, &fb.rtr())
            .map_err(PlanError::from)?
            .first()
            .map_or(len, |c| c.t * len)
    };
    Ok((leave, entry.max(leave.min(len))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Emit(u64),
    Transmit { seq: u64, node: UavId },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    order: u64,
    kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    // Reversed: BinaryHeap pops the earliest event first.
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then(other.order.cmp(&self.order))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
struct EventQueue {
    heap: BinaryHeap<Event>,
    next_order: u64,
}

impl EventQueue {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.heap.push(Event { time, order: self.next_order, kind });
        self.next_order += 1;
    }

    fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReceiverStats {
    pub id: UavId,
    pub mobile: bool,
    pub packets_received: u64,
    pub bits_received: f64,
    /// s; `None` when nothing was received
    pub avg_delay: Option<f64>,
    /// bits/s
    pub throughput: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobileStats {
    pub id: UavId,
    pub plan_kind: Option<PlanKind>,
    pub planned: bool,
    pub trajectory_length: f64,
    pub arrival_time: f64,
    pub flight_energy: f64,
    pub control_energy: f64,
    pub bits_received: f64,
    /// J/bit; infinite when nothing was received
    pub aeb: f64,
    pub aeb_undefined: bool,
    pub delivery_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scenario_id: String,
    pub policy: Policy,
    pub traffic_rate: f64,
    pub amd: f64,
    pub amt: f64,
    pub amod: f64,
    pub amot: f64,
    pub aaeb: f64,
    pub aco: f64,
    pub packets_emitted: u64,
    /// J per control bit: `tx_power / channel_rate`.
    pub control_energy_per_bit: f64,
    pub receivers: Vec<ReceiverStats>,
    pub mobiles: Vec<MobileStats>,
}

pub const CSV_HEADER: [&str; 9] =
    ["scenario_id", "policy", "traffic_rate", "amd_s", "amt_bps", "amod_s", "amot_bps", "aaeb_j_per_bit", "aco_bits"];

impl MetricsReport {
    pub fn csv_row(&self) -> [String; 9] {
        [
            self.scenario_id.clone(),
            self.policy.to_string(),
            self.traffic_rate.to_string(),
            self.amd.to_string(),
            self.amt.to_string(),
            self.amod.to_string(),
            self.amot.to_string(),
            self.aaeb.to_string(),
            self.aco.to_string(),
        ]
    }
}

/// Writes the header plus one row per report.
pub fn write_csv<W: Write>(out: W, reports: &[MetricsReport]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

/// Per-packet delivery trace: one line per (packet, receiver).
pub fn write_packet_trace<W: Write>(out: W, records: &[PacketRecord], receivers: &[UavId]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["seq", "sent_at", "receiver", "delivered_at"])?;
    for r in records {
        for id in receivers {
            let delivered = r.delivered_at.get(id).map(f64::to_string).unwrap_or_default();
            w.write_record([r.seq.to_string(), r.sent_at.to_string(), id.to_string(), delivered])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub report: MetricsReport,
    pub records: Vec<PacketRecord>,
    pub tree: MulticastTree,
    pub mobiles: Vec<MobileRun>,
}

pub fn run(scenario: &Scenario) -> Result<MetricsReport, SimError> {
    run_detailed(scenario).map(|o| o.report)
}

/// Runs the simulation and keeps the per-packet records.
pub fn run_detailed(scenario: &Scenario) -> Result<RunOutput, SimError> {
    scenario.validate()?;
    let fleet = &scenario.fleet;
    let tree = build_lcrt_tree(fleet)?;
    let mobiles: Vec<MobileRun> = (0..scenario.transitions.len())
        .map(|k| MobileRun::prepare(scenario, &tree, k))
        .collect::<Result<_, _>>()?;
    let mobile_ids: BTreeSet<UavId> = mobiles.iter().map(|m| m.spec.mobile_id).collect();

    // Static tree edges, mobiles excluded.
    let mut children: BTreeMap<UavId, Vec<UavId>> = BTreeMap::new();
    for (&child, &parent) in &tree.parent {
        if !mobile_ids.contains(&child) {
            children.entry(parent).or_default().push(child);
        }
    }
    let is_receiver = |id: UavId| fleet.get(id).map(|u| u.role == Role::Receiver).unwrap_or(false);

    let hop = scenario.hop_delay();
    let interval = scenario.packet_interval();
    let total = scenario.packet_count();
    let mut records: Vec<PacketRecord> = Vec::with_capacity(total as usize);
    let mut queue = EventQueue::default();
    if total > 0 {
        queue.push(0.0, EventKind::Emit(0));
    }

    while let Some(ev) = queue.pop() {
        match ev.kind {
            EventKind::Emit(seq) => {
                records.push(PacketRecord { seq, sent_at: ev.time, delivered_at: BTreeMap::new() });
                queue.push(ev.time, EventKind::Transmit { seq, node: fleet.source_id() });
                if seq + 1 < total {
                    queue.push((seq + 1) as f64 * interval, EventKind::Emit(seq + 1));
                }
            }
            EventKind::Transmit { seq, node } => {
                let arrival = ev.time + hop;
                let record = &mut records[seq as usize];
                for &child in children.get(&node).map(Vec::as_slice).unwrap_or(&[]) {
                    if is_receiver(child) {
                        record.delivered_at.entry(child).or_insert(arrival);
                    }
                    if tree.is_forwarder(child) {
                        queue.push(arrival, EventKind::Transmit { seq, node: child });
                    }
                }
                for m in &mobiles {
                    let id = m.spec.mobile_id;
                    if !record.delivered_at.contains_key(&id) && m.serves(fleet, node, arrival) {
                        record.delivered_at.insert(id, arrival);
                    }
                }
            }
        }
    }

    let report = compute_metrics(&records, scenario, &tree, &mobiles);
    Ok(RunOutput { report, records, tree, mobiles })
}

fn mean(values: impl IntoIterator<Item = f64>) -> f64 {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Additional control bits spent on transition support: the coordinate and
/// radius records every forwarder piggybacks while the tree is built.
pub fn additional_control_bits(scenario: &Scenario, tree: &MulticastTree) -> f64 {
    match scenario.policy {
        Policy::Lcrt => 0.0,
        Policy::Etf => f64::from(scenario.coordinate_record_bytes) * 8.0 * tree.forwarders.len() as f64,
    }
}

/// Delay, throughput, energy and overhead metrics of a finished run. Group
/// averages are arithmetic means over receivers; delays only count delivered
/// packets.
pub fn compute_metrics(
    records: &[PacketRecord],
    scenario: &Scenario,
    tree: &MulticastTree,
    mobiles: &[MobileRun],
) -> MetricsReport {
    let mobile_ids: BTreeSet<UavId> = mobiles.iter().map(|m| m.spec.mobile_id).collect();
    let receivers: Vec<ReceiverStats> = scenario
        .fleet
        .receivers()
        .map(|r| {
            let delays: Vec<f64> = records
                .iter()
                .filter_map(|p| p.delivered_at.get(&r.id).map(|d| d - p.sent_at))
                .collect();
            let packets = delays.len() as u64;
            let bits = packets as f64 * scenario.packet_size;
            ReceiverStats {
                id: r.id,
                mobile: mobile_ids.contains(&r.id),
                packets_received: packets,
                bits_received: bits,
                avg_delay: (!delays.is_empty()).then(|| mean(delays.iter().copied())),
                throughput: bits / scenario.sim_duration,
            }
        })
        .collect();

    let aco = additional_control_bits(scenario, tree);
    let control_energy_per_bit = scenario.tx_power / scenario.channel_rate;
    let control_share = if mobiles.is_empty() { 0.0 } else { aco / mobiles.len() as f64 };
    let emitted = records.len() as u64;

    let mobile_stats: Vec<MobileStats> = mobiles
        .iter()
        .map(|m| {
            let id = m.spec.mobile_id;
            let got = receivers.iter().find(|r| r.id == id).expect("mobiles are receivers");
            let length = m.trajectory.length();
            let flight_energy = scenario.flight_power * length / m.spec.speed;
            let control_energy = control_share * control_energy_per_bit;
            let energy = flight_energy + control_energy;
            let (aeb, undefined) = if got.bits_received > 0.0 {
                (energy / got.bits_received, false)
            } else {
                (f64::INFINITY, true)
            };
            MobileStats {
                id,
                plan_kind: m.plan_kind(),
                planned: m.plan.is_some() || scenario.policy == Policy::Lcrt,
                trajectory_length: length,
                arrival_time: m.trajectory.arrival_time(),
                flight_energy,
                control_energy,
                bits_received: got.bits_received,
                aeb,
                aeb_undefined: undefined,
                delivery_ratio: if emitted == 0 { 0.0 } else { got.packets_received as f64 / emitted as f64 },
            }
        })
        .collect();

    let delays = |only_mobile: bool| {
        mean(receivers.iter().filter(|r| !only_mobile || r.mobile).filter_map(|r| r.avg_delay))
    };
    let throughput = |only_mobile: bool| mean(receivers.iter().filter(|r| !only_mobile || r.mobile).map(|r| r.throughput));

    MetricsReport {
        scenario_id: scenario.id.clone(),
        policy: scenario.policy,
        traffic_rate: scenario.traffic_rate,
        amd: delays(false),
        amt: throughput(false),
        amod: delays(true),
        amot: throughput(true),
        aaeb: mean(mobile_stats.iter().map(|m| m.aeb)),
        aco,
        packets_emitted: emitted,
        control_energy_per_bit,
        receivers,
        mobiles: mobile_stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::Uav;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    fn plan_of(waypoints: Vec<Point3>) -> TransitionPlan {
        TransitionPlan {
            kind: PlanKind::ChainLong,
            seamless: true,
            waypoints,
            trace: Default::default(),
            fa: 0,
            fb: 1,
        }
    }

    #[test]
    fn position_before_start_and_after_arrival() {
        let plan = plan_of(vec![Point3::ORIGIN, p(10.0, 0.0, 0.0)]);
        assert_eq!(mobile_position(&plan, 2.0, 5.0, 0.0), Point3::ORIGIN);
        assert_eq!(mobile_position(&plan, 2.0, 5.0, 10.0), p(10.0, 0.0, 0.0));
        assert_eq!(mobile_position(&plan, 2.0, 5.0, 100.0), p(10.0, 0.0, 0.0));
        assert_eq!(mobile_position(&plan, 2.0, 5.0, 7.5), p(5.0, 0.0, 0.0));
    }

    #[test]
    fn position_by_arc_length() {
        // Legs of 3 and 4 m: half of 7 m is 0.5 m into the second leg.
        let plan = plan_of(vec![Point3::ORIGIN, p(3.0, 0.0, 0.0), p(3.0, 4.0, 0.0)]);
        let mid = mobile_position(&plan, 1.0, 0.0, 3.5);
        assert!(distance(mid, p(3.0, 0.5, 0.0)) < 1e-12);
        let t = Trajectory::new(plan.waypoints.clone(), 1.0, 0.0);
        assert_eq!(t.arrival_time(), 7.0);
    }

    fn static_scenario() -> Scenario {
        let fleet = Fleet::new(
            vec![
                Uav::new(0, Point3::ORIGIN, 100.0, Role::Source),
                Uav::new(1, p(80.0, 0.0, 0.0), 100.0, Role::Receiver),
                Uav::new(2, p(160.0, 0.0, 0.0), 100.0, Role::Receiver),
            ],
            0,
        )
        .unwrap();
        let mut s = Scenario::new("static", fleet);
        s.sim_duration = 2.0;
        s
    }

    #[test]
    fn static_pipeline_is_lossless() {
        let s = static_scenario();
        let report = run(&s).unwrap();
        let hop = s.packet_size / s.channel_rate;
        assert_eq!(report.packets_emitted, 125);
        for r in &report.receivers {
            assert_eq!(r.throughput, s.traffic_rate);
        }
        // Receiver 1 is one hop away, receiver 2 two hops.
        assert!((report.amd - 1.5 * hop).abs() < 1e-12);
        assert_eq!(report.amt, s.traffic_rate);
        assert_eq!(report.amod, 0.0);
        assert_eq!(report.aaeb, 0.0);
    }

    #[test]
    fn lcrt_has_no_control_overhead() {
        let mut s = static_scenario();
        s.policy = Policy::Lcrt;
        assert_eq!(run(&s).unwrap().aco, 0.0);
        s.policy = Policy::Etf;
        // Forwarders: source and receiver 1.
        assert_eq!(run(&s).unwrap().aco, 2.0 * 16.0 * 8.0);
    }

    #[test]
    fn validation_catches_bad_parameters() {
        let mut s = static_scenario();
        s.traffic_rate = s.channel_rate * 2.0;
        assert!(matches!(s.validate(), Err(SimError::InvalidScenario { ref field, .. }) if field == "traffic.rate_bps"));

        let mut s = static_scenario();
        s.transitions.push(TransitionSpec {
            mobile_id: 7,
            origin: Point3::ORIGIN,
            destination: Point3::ORIGIN,
            speed: 1.0,
            start_time: 0.0,
            fa: None,
            fb: None,
        });
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("mobile_id"), "{err}");
    }
}
