//! Short-distance transitions: `F_A` and `F_B` overlap.

use crate::geometry::{distance, eps_geo, lens_center, segment_sphere_intersections, GeometryError, Point3, Segment};
use crate::topology::are_overlapping;

use super::{
    boundary_exit_point, CheckTrace, PlanError, Planner, ShortCondition, ShortEvidence, TransitionRequest,
    TurningCenter, Verdict,
};

impl Planner<'_> {
    /// Seamlessness of a short-distance SLT. With `C` the point where the SLT
    /// leaves `RTR(F_A)` towards `B` and `D` the point where it enters
    /// `RTR(F_B)` from `A`, the SLT is seamless when `|AB| <= |AC| + |DB|`,
    /// or when some forwarder overlapping both `F_A` and `F_B` covers both
    /// `C` and `D`.
    pub fn check_short_seamless(&self, req: &TransitionRequest) -> Result<Verdict, PlanError> {
        let (fa, fb) = self.endpoints(req)?;
        if !are_overlapping(fa, fb) {
            return Err(PlanError::NotShortDistance { fa: fa.id, fb: fb.id });
        }
        let (a, b) = (req.origin, req.destination);
        if a == b {
            return Err(PlanError::PreconditionViolated("origin equals destination".into()));
        }
        let verdict = |seamless, evidence: ShortEvidence| Verdict {
            seamless,
            trace: CheckTrace { short: Some(evidence), ..Default::default() },
        };

        if fa.covers(b) || fb.covers(a) {
            return Ok(verdict(
                true,
                ShortEvidence { c: None, d: None, condition: ShortCondition::SingleRange, witness: None },
            ));
        }

        let slt = Segment::new(a, b);
        let c = boundary_exit_point(&fa.rtr(), &slt, b)?;
        let d = boundary_exit_point(&fb.rtr(), &slt, a)?;
        let mut evidence = ShortEvidence { c: Some(c), d: Some(d), condition: ShortCondition::ExitDistances, witness: None };

        let slack = eps_geo(fa.rtr_radius.max(fb.rtr_radius));
        if distance(a, b) <= distance(a, c) + distance(d, b) + slack {
            return Ok(verdict(true, evidence));
        }

        let witness = self
            .forwarders()
            .filter(|u| u.id != fa.id && u.id != fb.id)
            .filter(|u| are_overlapping(u, fa) && are_overlapping(u, fb))
            .find(|u| u.covers(c) && u.covers(d));
        if let Some(u) = witness {
            evidence.condition = ShortCondition::CommonCover;
            evidence.witness = Some(u.id);
            return Ok(verdict(true, evidence));
        }

        if self.config.thorough_check {
            let covering = crate::topology::covering_forwarders(self.tree, self.fleet, &slt)?;
            let mut walked = self.walk_checking_points(&slt, fa, fb, &covering);
            evidence.condition = if walked.seamless { ShortCondition::Walk } else { ShortCondition::Interrupted };
            walked.trace.covering = covering;
            walked.trace.short = Some(evidence);
            return Ok(walked);
        }

        evidence.condition = ShortCondition::Interrupted;
        Ok(verdict(false, evidence))
    }

    /// Turning location `T` for an interrupted short-distance SLT: where the
    /// segment from `A` towards the turning centre `O` enters `RTR(F_B)`.
    /// Returns `A` itself when `A` already lies inside `RTR(F_B)`.
    pub fn short_turning_location(&self, req: &TransitionRequest) -> Result<Point3, PlanError> {
        let (fa, fb) = self.endpoints(req)?;
        if !are_overlapping(fa, fb) {
            return Err(GeometryError::NotOverlapping.into());
        }
        let a = req.origin;
        let center = match self.config.turning_center {
            TurningCenter::Lens => lens_center(&fa.rtr(), &fb.rtr())?,
            TurningCenter::AbMidpoint => a.midpoint(req.destination),
        };
        if fb.covers(a) {
            return Ok(a);
        }
        if !fb.covers(center) {
            debug_assert!(
                self.config.turning_center != TurningCenter::Lens,
                "the lens centre lies inside both spheres"
            );
            return Err(PlanError::NoCrossing);
        }
        let crossings = segment_sphere_intersections(&Segment::new(a, center), &fb.rtr())?;
        crossings
            .first()
            .map(|c| c.point)
            .ok_or(PlanError::NoCrossing)
    }
}
