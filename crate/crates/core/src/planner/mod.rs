//! Transition planning for a mobile UAV inside the multicast.
//!
//! A transition between two overlapping forwarders is a short-distance
//! transition; between non-overlapping forwarders it is long-distance.
//! For each class the planner first checks whether the straight-line
//! trajectory (SLT) stays inside forwarder coverage and otherwise builds a
//! replacement polyline whose turning locations sit on forwarder RTR
//! surfaces:
//!
//! | class | SLT check                         | replacement                    |
//! |-------|-----------------------------------|--------------------------------|
//! | short | exit points `C`/`D` + common cover | one turning location `T`       |
//! | long  | checking-point walk               | forwarder chain, `T_1..T_k`    |

mod long;
mod oracle;
mod short;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, eps_geo, segment_sphere_intersections, GeometryError, Point3, Segment, Sphere};
use crate::topology::{are_overlapping, Fleet, MulticastTree, TopologyError, Uav, UavId};

pub use oracle::{oracle_is_seamless, DEFAULT_ORACLE_STEP};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("segment does not cross the sphere surface")]
    NoIntersection,
    #[error("forwarders {fa} and {fb} do not overlap: not a short-distance transition")]
    NotShortDistance { fa: UavId, fb: UavId },
    #[error("forwarders {fa} and {fb} overlap: not a long-distance transition")]
    ShortDistanceRequest { fa: UavId, fb: UavId },
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("segment towards the turning centre never reaches the next RTR surface")]
    NoCrossing,
    #[error("no chain of overlapping forwarders joins {fa} and {fb}")]
    NoChain { fa: UavId, fb: UavId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TurningCenter {
    /// Centre of the intersection circle of the two RTR spheres.
    #[default]
    Lens,
    /// Midpoint of origin and destination.
    AbMidpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    #[serde(default)]
    pub turning_center: TurningCenter,
    /// Run the checking-point walk when the short-distance conditions fail.
    #[serde(default)]
    pub thorough_check: bool,
    #[serde(default = "default_oracle_step")]
    pub oracle_step: f64,
}

fn default_oracle_step() -> f64 {
    DEFAULT_ORACLE_STEP
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            turning_center: TurningCenter::Lens,
            thorough_check: false,
            oracle_step: DEFAULT_ORACLE_STEP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitionRequest {
    pub mobile_id: UavId,
    pub origin: Point3,
    pub destination: Point3,
    pub fa: UavId,
    pub fb: UavId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanKind {
    SltShort,
    SltLong,
    TurnShort,
    ChainLong,
    /// Origin equals destination; nothing to fly.
    Stay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckingPoint {
    pub point: Point3,
    pub owner: UavId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShortCondition {
    /// Both endpoints lie in one of the two RTRs.
    SingleRange,
    /// `|AB| <= |AC| + |DB|`.
    ExitDistances,
    /// A third forwarder covers both `C` and `D`.
    CommonCover,
    /// Decided by the checking-point walk.
    Walk,
    Interrupted,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortEvidence {
    pub c: Option<Point3>,
    pub d: Option<Point3>,
    pub condition: ShortCondition,
    pub witness: Option<UavId>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CheckTrace {
    pub covering: Vec<UavId>,
    pub checking_points: Vec<CheckingPoint>,
    pub checked_list: Vec<UavId>,
    pub turning_locations: Vec<Point3>,
    pub chain: Vec<UavId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub short: Option<ShortEvidence>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub seamless: bool,
    pub trace: CheckTrace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionPlan {
    pub kind: PlanKind,
    pub seamless: bool,
    pub waypoints: Vec<Point3>,
    pub trace: CheckTrace,
    pub fa: UavId,
    pub fb: UavId,
}

impl TransitionPlan {
    pub fn origin(&self) -> Point3 {
        self.waypoints[0]
    }

    pub fn destination(&self) -> Point3 {
        *self.waypoints.last().expect("plans have at least one waypoint")
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.waypoints)
    }

    /// Forwarders whose RTRs jointly cover the planned trajectory.
    pub fn serving_forwarders(&self) -> Vec<UavId> {
        let mut ids = vec![self.fa, self.fb];
        ids.extend(self.trace.checking_points.iter().map(|c| c.owner));
        ids.extend(self.trace.checked_list.iter().copied());
        ids.extend(self.trace.chain.iter().copied());
        if let Some(w) = self.trace.short.and_then(|s| s.witness) {
            ids.push(w);
        }
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

pub fn polyline_length(points: &[Point3]) -> f64 {
    points.windows(2).map(|w| distance(w[0], w[1])).sum()
}

/// Drops consecutive waypoints closer than a nanometre-scale tolerance.
pub(crate) fn collapse_duplicates(points: Vec<Point3>) -> Vec<Point3> {
    let mut out: Vec<Point3> = Vec::with_capacity(points.len());
    for p in points {
        match out.last() {
            Some(&q) if distance(p, q) <= 1e-9 => {}
            _ => out.push(p),
        }
    }
    out
}

/// Of the points where `slt` crosses the surface of `f`, the one nearest to
/// `toward`. Equidistant candidates resolve to the larger `t`.
pub fn boundary_exit_point(f: &Sphere, slt: &Segment, toward: Point3) -> Result<Point3, PlanError> {
    let crossings = segment_sphere_intersections(slt, f)?;
    let eps = eps_geo(f.radius);
    crossings
        .into_iter()
        .reduce(|best, c| {
            let (db, dc) = (distance(best.point, toward), distance(c.point, toward));
            if dc < db - eps || ((dc - db).abs() <= eps && c.t > best.t) {
                c
            } else {
                best
            }
        })
        .map(|c| c.point)
        .ok_or(PlanError::NoIntersection)
}

/// Plans transitions against a fixed fleet and multicast tree.
#[derive(Debug, Clone, Copy)]
pub struct Planner<'a> {
    fleet: &'a Fleet,
    tree: &'a MulticastTree,
    config: PlannerConfig,
}

impl<'a> Planner<'a> {
    pub fn new(fleet: &'a Fleet, tree: &'a MulticastTree, config: PlannerConfig) -> Self {
        Self { fleet, tree, config }
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    pub fn fleet(&self) -> &'a Fleet {
        self.fleet
    }

    pub fn tree(&self) -> &'a MulticastTree {
        self.tree
    }

    fn forwarder(&self, id: UavId) -> Result<&'a Uav, PlanError> {
        if !self.tree.is_forwarder(id) {
            return Err(TopologyError::NotAForwarder(id).into());
        }
        Ok(self.fleet.get(id)?)
    }

    fn forwarders(&self) -> impl Iterator<Item = &'a Uav> + '_ {
        self.tree.forwarders.iter().filter_map(|&id| self.fleet.get(id).ok())
    }

    /// Resolves `F_A`/`F_B` and checks that they cover origin and destination.
    fn endpoints(&self, req: &TransitionRequest) -> Result<(&'a Uav, &'a Uav), PlanError> {
        if !req.origin.is_finite() || !req.destination.is_finite() {
            return Err(GeometryError::NonFinite.into());
        }
        let fa = self.forwarder(req.fa)?;
        let fb = self.forwarder(req.fb)?;
        if !fa.covers(req.origin) {
            return Err(PlanError::PreconditionViolated(format!(
                "origin {} lies outside the RTR of F_A ({})",
                req.origin, fa.id
            )));
        }
        if !fb.covers(req.destination) {
            return Err(PlanError::PreconditionViolated(format!(
                "destination {} lies outside the RTR of F_B ({})",
                req.destination, fb.id
            )));
        }
        Ok((fa, fb))
    }

    /// Seamlessness of the straight line `A -> B`, using the short- or
    /// long-distance check depending on whether `F_A` and `F_B` overlap.
    pub fn check_seamless(&self, req: &TransitionRequest) -> Result<Verdict, PlanError> {
        let (fa, fb) = self.endpoints(req)?;
        if are_overlapping(fa, fb) {
            self.check_short_seamless(req)
        } else {
            self.check_long_seamless(req)
        }
    }

    /// Chooses a trajectory for the transition: the SLT when it is seamless,
    /// otherwise a turning-location or forwarder-chain polyline.
    pub fn plan_transition(&self, req: &TransitionRequest) -> Result<TransitionPlan, PlanError> {
        let (fa, fb) = self.endpoints(req)?;
        if req.origin == req.destination {
            return Ok(TransitionPlan {
                kind: PlanKind::Stay,
                seamless: true,
                waypoints: vec![req.origin],
                trace: CheckTrace::default(),
                fa: fa.id,
                fb: fb.id,
            });
        }

        if are_overlapping(fa, fb) {
            let verdict = self.check_short_seamless(req)?;
            if verdict.seamless {
                return Ok(TransitionPlan {
                    kind: PlanKind::SltShort,
                    seamless: true,
                    waypoints: vec![req.origin, req.destination],
                    trace: verdict.trace,
                    fa: fa.id,
                    fb: fb.id,
                });
            }
            let turn = self.short_turning_location(req)?;
            let mut trace = verdict.trace;
            trace.turning_locations.push(turn);
            let seamless = match self.config.turning_center {
                TurningCenter::Lens => true,
                TurningCenter::AbMidpoint => fa.covers(turn),
            };
            Ok(TransitionPlan {
                kind: PlanKind::TurnShort,
                seamless,
                waypoints: collapse_duplicates(vec![req.origin, turn, req.destination]),
                trace,
                fa: fa.id,
                fb: fb.id,
            })
        } else {
            let verdict = self.check_long_seamless(req)?;
            if verdict.seamless {
                return Ok(TransitionPlan {
                    kind: PlanKind::SltLong,
                    seamless: true,
                    waypoints: vec![req.origin, req.destination],
                    trace: verdict.trace,
                    fa: fa.id,
                    fb: fb.id,
                });
            }
            let mut plan = self.form_long_trajectory(req)?;
            let chain_trace = std::mem::take(&mut plan.trace);
            plan.trace = CheckTrace {
                turning_locations: chain_trace.turning_locations,
                chain: chain_trace.chain,
                ..verdict.trace
            };
            Ok(plan)
        }
    }
}
