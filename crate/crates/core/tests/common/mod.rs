//! Random instance generation shared by the integration suites.
#![allow(dead_code)]

use std::path::PathBuf;

use etf_core::topology::are_overlapping;
use etf_core::{build_lcrt_tree, distance, Fleet, MulticastTree, Point3, Role, Sphere, TransitionRequest, Uav};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub use rand::SeedableRng;
pub type TestRng = ChaCha8Rng;

pub const ORACLE_STEP: f64 = 0.01;
/// Margin sampling interval of the clearance filter.
const CLEARANCE_SPACING: f64 = 0.5;

pub fn scenarios_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub fn rng(seed: u64) -> TestRng {
    TestRng::seed_from_u64(seed)
}

/// Uniform point in the ball of radius `r` around `c`.
pub fn point_in_ball(rng: &mut TestRng, c: Point3, r: f64) -> Point3 {
    loop {
        let v = Point3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm_squared() <= 1.0 {
            return c + v * r;
        }
    }
}

/// A fleet grown node by node, each new UAV placed inside the RTR of an
/// earlier one, so every receiver is reachable from the source. Mostly
/// extends the newest UAV, which yields winding relay chains.
pub fn grown_fleet(rng: &mut TestRng, n: usize) -> (Fleet, MulticastTree) {
    let mut uavs = vec![Uav::new(0, Point3::new(0.0, 0.0, 100.0), rng.gen_range(20.0..100.0), Role::Source)];
    for id in 1..n as u32 {
        let anchor = if rng.gen_bool(0.6) { uavs.last().unwrap() } else { &uavs[rng.gen_range(0..uavs.len())] };
        let (c, r) = (anchor.position, anchor.rtr_radius);
        let offset = loop {
            let p = point_in_ball(rng, Point3::ORIGIN, r * 0.95);
            if p.norm() > 0.5 * r {
                break p;
            }
        };
        uavs.push(Uav::new(id, c + offset, rng.gen_range(20.0..100.0), Role::Receiver));
    }
    let fleet = Fleet::new(uavs, 0).expect("generated fleet is valid");
    let tree = build_lcrt_tree(&fleet).expect("grown fleet is connected");
    (fleet, tree)
}

pub fn forwarder_spheres(fleet: &Fleet, tree: &MulticastTree) -> Vec<Sphere> {
    tree.forwarders.iter().map(|&id| fleet.get(id).unwrap().rtr()).collect()
}

/// `max_i (r_i - |p - c_i|)`: positive inside the union of the spheres.
pub fn margin(spheres: &[Sphere], p: Point3) -> f64 {
    spheres
        .iter()
        .map(|s| s.radius - distance(s.center, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Whether the segment's coverage status is unambiguous at oracle
/// resolution: either every point clears the union boundary comfortably, or
/// some point is clearly outside it. The margin is 1-Lipschitz, so sampled
/// values bound it between samples.
pub fn clear_of_boundary(spheres: &[Sphere], a: Point3, b: Point3) -> bool {
    let n = (distance(a, b) / CLEARANCE_SPACING).ceil().max(1.0) as usize;
    let mut min = f64::INFINITY;
    for k in 0..=n {
        let m = margin(spheres, a.lerp(b, k as f64 / n as f64));
        if m <= -2.0 * ORACLE_STEP {
            return true;
        }
        min = min.min(m);
    }
    min >= CLEARANCE_SPACING / 2.0 + 2.0 * ORACLE_STEP
}

pub struct Instance {
    pub fleet: Fleet,
    pub tree: MulticastTree,
    pub req: TransitionRequest,
}

impl Instance {
    pub fn spheres(&self) -> Vec<Sphere> {
        forwarder_spheres(&self.fleet, &self.tree)
    }
}

/// Half of the endpoints are drawn near the RTR surface, where straight
/// lines are most likely to leave coverage.
fn endpoint(rng: &mut TestRng, f: &Uav) -> Point3 {
    if rng.gen_bool(0.5) {
        return point_in_ball(rng, f.position, f.rtr_radius);
    }
    let dir = loop {
        let v = point_in_ball(rng, Point3::ORIGIN, 1.0);
        if v.norm() > 0.1 {
            break v * (1.0 / v.norm());
        }
    };
    f.position + dir * (f.rtr_radius * rng.gen_range(0.8..1.0))
}

/// A clearance-filtered instance whose `F_A`/`F_B` overlap (`short`) or not.
pub fn random_instance(rng: &mut TestRng, short: bool) -> Instance {
    loop {
        let n = rng.gen_range(4..=30);
        let (fleet, tree) = grown_fleet(rng, n);
        let fwd: Vec<&Uav> = tree.forwarders.iter().map(|&id| fleet.get(id).unwrap()).collect();
        let pairs: Vec<(&Uav, &Uav)> = fwd
            .iter()
            .flat_map(|&a| fwd.iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a.id != b.id && are_overlapping(a, b) == short)
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let (fa, fb) = pairs[rng.gen_range(0..pairs.len())];
        let origin = endpoint(rng, fa);
        let destination = endpoint(rng, fb);
        if distance(origin, destination) < 1.0 {
            continue;
        }
        let spheres = forwarder_spheres(&fleet, &tree);
        if !clear_of_boundary(&spheres, origin, destination) {
            continue;
        }
        let req = TransitionRequest { mobile_id: u32::MAX, origin, destination, fa: fa.id, fb: fb.id };
        return Instance { fleet, tree, req };
    }
}

/// Tree with forwarder set given directly, for planner-only fixtures.
pub fn tree_with_forwarders(ids: impl IntoIterator<Item = u32>) -> MulticastTree {
    MulticastTree { forwarders: ids.into_iter().collect(), ..Default::default() }
}
