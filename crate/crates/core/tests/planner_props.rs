mod common;

use common::*;
use etf_core::geometry::lens_center;
use etf_core::planner::{boundary_exit_point, PlanError};
use etf_core::topology::same_path_chain;
use etf_core::{distance, oracle_is_seamless, PlanKind, Planner, PlannerConfig, TurningCenter};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn plans_connect_origin_to_destination(seed in any::<u64>(), short in any::<bool>()) {
        let inst = random_instance(&mut rng(seed), short);
        let planner = Planner::new(&inst.fleet, &inst.tree, PlannerConfig::default());
        let plan = planner.plan_transition(&inst.req).unwrap();
        prop_assert_eq!(plan.origin(), inst.req.origin);
        prop_assert_eq!(plan.destination(), inst.req.destination);
        prop_assert!(plan.seamless);
        prop_assert!(plan.length() + 1e-9 >= distance(inst.req.origin, inst.req.destination));
        prop_assert!(plan.waypoints.windows(2).all(|w| w[0] != w[1]));
        let expected_kinds: &[PlanKind] = if short {
            &[PlanKind::SltShort, PlanKind::TurnShort]
        } else {
            &[PlanKind::SltLong, PlanKind::ChainLong]
        };
        prop_assert!(expected_kinds.contains(&plan.kind));
        prop_assert!(oracle_is_seamless(&plan.waypoints, &inst.spheres(), ORACLE_STEP));
    }

    #[test]
    fn serving_forwarders_cover_the_plan(seed in any::<u64>(), short in any::<bool>()) {
        let inst = random_instance(&mut rng(seed), short);
        let planner = Planner::new(&inst.fleet, &inst.tree, PlannerConfig::default());
        let plan = planner.plan_transition(&inst.req).unwrap();
        let serving: Vec<_> = plan
            .serving_forwarders()
            .into_iter()
            .map(|id| inst.fleet.get(id).unwrap().rtr())
            .collect();
        prop_assert!(oracle_is_seamless(&plan.waypoints, &serving, ORACLE_STEP));
    }

    #[test]
    fn lens_turning_location_is_in_both_ranges(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed), true);
        let planner = Planner::new(&inst.fleet, &inst.tree, PlannerConfig::default());
        let fa = inst.fleet.get(inst.req.fa).unwrap();
        let fb = inst.fleet.get(inst.req.fb).unwrap();
        let t = planner.short_turning_location(&inst.req).unwrap();
        prop_assert!(fa.covers(t));
        prop_assert!(fb.covers(t));
        if !fb.covers(inst.req.origin) {
            let surface = (distance(t, fb.position) - fb.rtr_radius).abs();
            prop_assert!(surface <= 1e-9 * fb.rtr_radius.max(1.0));
            let o = lens_center(&fa.rtr(), &fb.rtr()).unwrap();
            let a = inst.req.origin;
            let b = inst.req.destination;
            prop_assert!(distance(a, t) + distance(t, b) < distance(a, o) + distance(o, b) + 1e-9);
        } else {
            prop_assert_eq!(t, inst.req.origin);
        }
    }

    #[test]
    fn midpoint_mode_never_claims_an_uncovered_turn(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed), true);
        let config = PlannerConfig { turning_center: TurningCenter::AbMidpoint, ..PlannerConfig::default() };
        let planner = Planner::new(&inst.fleet, &inst.tree, config);
        match planner.plan_transition(&inst.req) {
            Ok(plan) if plan.seamless => {
                prop_assert!(oracle_is_seamless(&plan.waypoints, &inst.spheres(), ORACLE_STEP));
            }
            Ok(_) | Err(PlanError::NoCrossing) => {}
            Err(e) => prop_assert!(false, "unexpected error {}", e),
        }
    }

    #[test]
    fn thorough_check_agrees_with_oracle(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed), true);
        let config = PlannerConfig { thorough_check: true, ..PlannerConfig::default() };
        let verdict = Planner::new(&inst.fleet, &inst.tree, config).check_short_seamless(&inst.req).unwrap();
        let oracle = oracle_is_seamless(&[inst.req.origin, inst.req.destination], &inst.spheres(), ORACLE_STEP);
        prop_assert_eq!(verdict.seamless, oracle);
    }

    #[test]
    fn exit_point_is_nearest_crossing(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed), false);
        let fa = inst.fleet.get(inst.req.fa).unwrap();
        let slt = etf_core::Segment::new(inst.req.origin, inst.req.destination);
        let c = boundary_exit_point(&fa.rtr(), &slt, inst.req.destination).unwrap();
        // Beyond the exit point the segment is outside F_A.
        for k in 1..=50 {
            let q = c.lerp(inst.req.destination, k as f64 / 50.0);
            prop_assert!(distance(q, fa.position) >= fa.rtr_radius - 1e-9 * fa.rtr_radius);
        }
    }

    #[test]
    fn chain_follows_tree_path_when_available(seed in any::<u64>()) {
        let inst = random_instance(&mut rng(seed), false);
        let planner = Planner::new(&inst.fleet, &inst.tree, PlannerConfig::default());
        let chain = planner.forwarder_chain(inst.req.fa, inst.req.fb).unwrap();
        prop_assert_eq!(chain.first(), Some(&inst.req.fa));
        prop_assert_eq!(chain.last(), Some(&inst.req.fb));
        for w in chain.windows(2) {
            let (a, b) = (inst.fleet.get(w[0]).unwrap(), inst.fleet.get(w[1]).unwrap());
            prop_assert!(etf_core::topology::are_overlapping(a, b));
        }
        if let Some(path) = same_path_chain(&inst.tree, inst.req.fa, inst.req.fb).unwrap() {
            prop_assert_eq!(chain, path);
        }
    }
}
