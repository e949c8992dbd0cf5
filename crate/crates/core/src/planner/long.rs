//! Long-distance transitions: `F_A` and `F_B` do not overlap.

use crate::geometry::{distance, eps_geo, lens_center, segment_sphere_intersections, Point3, Segment, Sphere};
use crate::topology::{are_overlapping, covering_forwarders, overlap_graph, same_path_chain, Uav, UavId};

use super::{
    boundary_exit_point, collapse_duplicates, CheckTrace, CheckingPoint, PlanError, PlanKind, Planner,
    TransitionPlan, TransitionRequest, Verdict,
};

/// Where `slt` last leaves `s` on its way to `slt.b`; `slt.b` itself when the
/// sphere contains the destination.
fn exit_toward_destination(s: &Sphere, slt: &Segment) -> Option<Point3> {
    if s.contains(slt.b) {
        return Some(slt.b);
    }
    boundary_exit_point(s, slt, slt.b).ok()
}

impl Planner<'_> {
    /// Checking-point walk over the covering forwarders of the SLT.
    ///
    /// Starting from the point where the SLT leaves `RTR(F_A)`, each round
    /// marks the current owner as checked, collects the unchecked covering
    /// forwarders whose RTRs contain the checking point, and advances to the
    /// exit point (among theirs) nearest to `B`. The SLT is seamless as soon
    /// as a checking point falls inside `RTR(F_B)`, and interrupted when no
    /// unchecked forwarder covers the checking point or none of them reaches
    /// further towards `B`.
    pub(crate) fn walk_checking_points(&self, slt: &Segment, fa: &Uav, fb: &Uav, covering: &[UavId]) -> Verdict {
        let mut trace = CheckTrace { covering: covering.to_vec(), ..Default::default() };
        let candidates: Vec<&Uav> = covering.iter().filter_map(|&id| self.fleet.get(id).ok()).collect();

        let Some(mut current) = exit_toward_destination(&fa.rtr(), slt) else {
            return Verdict { seamless: false, trace };
        };
        let mut owner = fa.id;
        trace.checking_points.push(CheckingPoint { point: current, owner });

        loop {
            if fb.covers(current) {
                return Verdict { seamless: true, trace };
            }
            trace.checked_list.push(owner);

            let remaining = distance(current, slt.b);
            let mut next: Option<(Point3, UavId, f64)> = None;
            for u in candidates
                .iter()
                .filter(|u| !trace.checked_list.contains(&u.id) && u.covers(current))
            {
                let Some(exit) = exit_toward_destination(&u.rtr(), slt) else { continue };
                let d = distance(exit, slt.b);
                let better = match next {
                    None => true,
                    Some((_, best_id, best_d)) => {
                        let eps = eps_geo(u.rtr_radius);
                        d < best_d - eps || ((d - best_d).abs() <= eps && u.id < best_id)
                    }
                };
                if better {
                    next = Some((exit, u.id, d));
                }
            }

            match next {
                Some((point, id, d)) if d < remaining - eps_geo(remaining) => {
                    current = point;
                    owner = id;
                    trace.checking_points.push(CheckingPoint { point, owner });
                }
                _ => return Verdict { seamless: false, trace },
            }
        }
    }

    /// Seamlessness of a long-distance SLT via the checking-point walk. When
    /// `F_A` and `F_B` are the only covering forwarders the SLT cannot be
    /// seamless and no walk is made.
    pub fn check_long_seamless(&self, req: &TransitionRequest) -> Result<Verdict, PlanError> {
        let (fa, fb) = self.endpoints(req)?;
        if are_overlapping(fa, fb) {
            return Err(PlanError::ShortDistanceRequest { fa: fa.id, fb: fb.id });
        }
        if req.origin == req.destination {
            return Err(PlanError::PreconditionViolated("origin equals destination".into()));
        }
        let slt = Segment::new(req.origin, req.destination);
        let covering = covering_forwarders(self.tree, self.fleet, &slt)?;
        if covering.iter().all(|&id| id == fa.id || id == fb.id) {
            return Ok(Verdict {
                seamless: false,
                trace: CheckTrace { covering, ..Default::default() },
            });
        }
        Ok(self.walk_checking_points(&slt, fa, fb, &covering))
    }

    /// Forwarder chain from `F_A` to `F_B`: the tree path when one is an
    /// ancestor of the other, otherwise the minimum-distance path over the
    /// overlap graph.
    pub fn forwarder_chain(&self, fa: UavId, fb: UavId) -> Result<Vec<UavId>, PlanError> {
        if let Some(chain) = same_path_chain(self.tree, fa, fb)? {
            return Ok(chain);
        }
        overlap_graph(self.tree, self.fleet)?
            .shortest_chain(fa, fb)
            .map(|(chain, _)| chain)
            .ok_or(PlanError::NoChain { fa, fb })
    }

    /// Replacement trajectory through the forwarder chain `F_0 .. F_k`.
    /// `T_0 = A`; `T_{j+1}` is where the segment from `T_j` to the overlap
    /// centre of `F_j` and `F_{j+1}` enters `RTR(F_{j+1})`, or `T_j` again if
    /// it is already inside. The trajectory is `A, T_1, .., T_k, B`.
    pub fn form_long_trajectory(&self, req: &TransitionRequest) -> Result<TransitionPlan, PlanError> {
        let (fa, fb) = self.endpoints(req)?;
        if are_overlapping(fa, fb) {
            return Err(PlanError::ShortDistanceRequest { fa: fa.id, fb: fb.id });
        }
        let chain = self.forwarder_chain(fa.id, fb.id)?;
        let hops: Vec<&Uav> = chain.iter().map(|&id| self.fleet.get(id)).collect::<Result<_, _>>()?;

        let mut turning = Vec::with_capacity(hops.len().saturating_sub(1));
        let mut current = req.origin;
        for pair in hops.windows(2) {
            let (here, next) = (pair[0], pair[1]);
            if !next.covers(current) {
                let center = lens_center(&here.rtr(), &next.rtr())?;
                let crossings = segment_sphere_intersections(&Segment::new(current, center), &next.rtr())?;
                current = crossings.first().ok_or(PlanError::NoCrossing)?.point;
            }
            turning.push(current);
        }

        let mut waypoints = vec![req.origin];
        waypoints.extend(turning.iter().copied());
        waypoints.push(req.destination);
        Ok(TransitionPlan {
            kind: PlanKind::ChainLong,
            seamless: true,
            waypoints: collapse_duplicates(waypoints),
            trace: CheckTrace { turning_locations: turning, chain, ..Default::default() },
            fa: fa.id,
            fb: fb.id,
        })
    }
}
