//! Fleet description, LCRT multicast tree construction and the forwarder
//! queries the planner relies on.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{distance, point_line_distance, GeometryError, Point3, Segment, Sphere};

pub type UavId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TopologyError {
    #[error("fleet needs at least two UAVs, got {0}")]
    TooFewUavs(usize),
    #[error("duplicate uav id {0}")]
    DuplicateId(UavId),
    #[error("unknown uav id {0}")]
    UnknownUav(UavId),
    #[error("fleet must contain exactly one source, found {0}")]
    SourceCount(usize),
    #[error("uav {id}: {reason}")]
    InvalidUav { id: UavId, reason: String },
    #[error("receivers unreachable from the source: {0:?}")]
    UnreachableReceiver(Vec<UavId>),
    #[error("uav {0} is not a multicast forwarder")]
    NotAForwarder(UavId),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Source,
    Forwarder,
    Receiver,
    Idle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Uav {
    pub id: UavId,
    pub position: Point3,
    /// Referred coverage radius in metres.
    #[serde(rename = "radius")]
    pub rtr_radius: f64,
    pub role: Role,
}

impl Uav {
    pub fn new(id: UavId, position: Point3, rtr_radius: f64, role: Role) -> Self {
        Self { id, position, rtr_radius, role }
    }

    pub fn rtr(&self) -> Sphere {
        Sphere { center: self.position, radius: self.rtr_radius }
    }

    /// Whether `p` lies inside this UAV's referred transmission range.
    pub fn covers(&self, p: Point3) -> bool {
        self.rtr().contains(p)
    }
}

/// Two UAVs overlap when their centre distance is strictly below the sum of
/// their radii.
pub fn are_overlapping(a: &Uav, b: &Uav) -> bool {
    distance(a.position, b.position) < a.rtr_radius + b.rtr_radius
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fleet {
    uavs: Vec<Uav>,
    index: BTreeMap<UavId, usize>,
    source_id: UavId,
}

impl Fleet {
    pub fn new(uavs: Vec<Uav>, source_id: UavId) -> Result<Self, TopologyError> {
        if uavs.len() < 2 {
            return Err(TopologyError::TooFewUavs(uavs.len()));
        }
        let mut index = BTreeMap::new();
        for (i, u) in uavs.iter().enumerate() {
            if index.insert(u.id, i).is_some() {
                return Err(TopologyError::DuplicateId(u.id));
            }
            if !u.position.is_finite() {
                return Err(TopologyError::InvalidUav {
                    id: u.id,
                    reason: "position is not finite".into(),
                });
            }
            if !(u.rtr_radius.is_finite() && u.rtr_radius > 0.0) {
                return Err(TopologyError::InvalidUav {
                    id: u.id,
                    reason: format!("radius must be positive, got {}", u.rtr_radius),
                });
            }
        }
        let sources = uavs.iter().filter(|u| u.role == Role::Source).count();
        if sources != 1 {
            return Err(TopologyError::SourceCount(sources));
        }
        match index.get(&source_id) {
            Some(&i) if uavs[i].role == Role::Source => {}
            Some(_) => {
                return Err(TopologyError::InvalidUav {
                    id: source_id,
                    reason: "source_id does not have the source role".into(),
                })
            }
            None => return Err(TopologyError::UnknownUav(source_id)),
        }
        Ok(Self { uavs, index, source_id })
    }

    pub fn uavs(&self) -> &[Uav] {
        &self.uavs
    }

    pub fn source_id(&self) -> UavId {
        self.source_id
    }

    pub fn get(&self, id: UavId) -> Result<&Uav, TopologyError> {
        self.index
            .get(&id)
            .map(|&i| &self.uavs[i])
            .ok_or(TopologyError::UnknownUav(id))
    }

    pub fn len(&self) -> usize {
        self.uavs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.uavs.is_empty()
    }

    pub fn receivers(&self) -> impl Iterator<Item = &Uav> {
        self.uavs.iter().filter(|u| u.role == Role::Receiver)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MulticastTree {
    pub levels: BTreeMap<UavId, u32>,
    pub parent: BTreeMap<UavId, UavId>,
    pub forwarders: BTreeSet<UavId>,
}

impl MulticastTree {
    pub fn level(&self, id: UavId) -> Option<u32> {
        self.levels.get(&id).copied()
    }

    pub fn is_forwarder(&self, id: UavId) -> bool {
        self.forwarders.contains(&id)
    }

    /// Role of `id` after tree construction: relays are promoted to
    /// `Forwarder`, everything else keeps its fleet role.
    pub fn role_of(&self, fleet: &Fleet, id: UavId) -> Result<Role, TopologyError> {
        let u = fleet.get(id)?;
        Ok(match u.role {
            Role::Source => Role::Source,
            _ if self.is_forwarder(id) => Role::Forwarder,
            r => r,
        })
    }

    pub fn children(&self, id: UavId) -> impl Iterator<Item = UavId> + '_ {
        self.parent
            .iter()
            .filter(move |(_, &p)| p == id)
            .map(|(&c, _)| c)
    }

    /// Path from `id` up to the source, `id` first.
    fn ancestry(&self, id: UavId) -> Vec<UavId> {
        let mut path = vec![id];
        let mut cur = id;
        while let Some(&p) = self.parent.get(&cur) {
            path.push(p);
            cur = p;
        }
        path
    }
}

/// Builds the LCRT tree: BFS levels by hop count over RTR adjacency
/// (`v` is adjacent to `u` iff `v` lies in `u`'s RTR), then from the deepest
/// level upwards a greedy cover that repeatedly promotes the level-k node
/// covering the most parentless level-(k+1) tree nodes. Ties go to the
/// smaller id.
pub fn build_lcrt_tree(fleet: &Fleet) -> Result<MulticastTree, TopologyError> {
    let uavs = fleet.uavs();
    let mut level: BTreeMap<UavId, u32> = BTreeMap::new();
    level.insert(fleet.source_id(), 0);
    let mut queue = VecDeque::from([fleet.source_id()]);
    while let Some(id) = queue.pop_front() {
        let u = fleet.get(id)?;
        let next = level[&id] + 1;
        for v in uavs {
            if !level.contains_key(&v.id) && u.covers(v.position) {
                level.insert(v.id, next);
                queue.push_back(v.id);
            }
        }
    }

    let unreachable: Vec<UavId> = fleet
        .receivers()
        .filter(|r| !level.contains_key(&r.id))
        .map(|r| r.id)
        .collect();
    if !unreachable.is_empty() {
        return Err(TopologyError::UnreachableReceiver(unreachable));
    }

    let max_level = fleet
        .receivers()
        .map(|r| level[&r.id])
        .max()
        .unwrap_or(0);

    let mut tree = MulticastTree::default();
    tree.levels.insert(fleet.source_id(), 0);
    let mut needed: BTreeSet<UavId> = BTreeSet::new();
    for k in (1..=max_level).rev() {
        let mut uncovered: BTreeSet<UavId> = fleet
            .receivers()
            .filter(|r| level[&r.id] == k)
            .map(|r| r.id)
            .chain(needed.iter().copied())
            .collect();
        for &id in &uncovered {
            tree.levels.insert(id, k);
        }
        let candidates: Vec<&Uav> = uavs.iter().filter(|u| level.get(&u.id) == Some(&(k - 1))).collect();
        needed.clear();
        while !uncovered.is_empty() {
            let (best, covered) = candidates
                .iter()
                .map(|c| {
                    let covered: Vec<UavId> = uncovered
                        .iter()
                        .copied()
                        .filter(|&id| c.covers(fleet.get(id).map(|u| u.position).unwrap_or_default()))
                        .collect();
                    (c.id, covered)
                })
                .max_by(|(ia, ca), (ib, cb)| ca.len().cmp(&cb.len()).then(ib.cmp(ia)))
                .expect("every level above 0 has a level below it");
            debug_assert!(!covered.is_empty(), "BFS guarantees a covering parent");
            if covered.is_empty() {
                break;
            }
            for id in covered {
                uncovered.remove(&id);
                tree.parent.insert(id, best);
            }
            tree.forwarders.insert(best);
            needed.insert(best);
        }
    }
    Ok(tree)
}

/// Forwarders whose Heron distance to the SLT's line is within their radius,
/// ordered by id.
pub fn covering_forwarders(
    tree: &MulticastTree,
    fleet: &Fleet,
    slt: &Segment,
) -> Result<Vec<UavId>, TopologyError> {
    let mut out = Vec::new();
    for &id in &tree.forwarders {
        let f = fleet.get(id)?;
        if point_line_distance(slt, f.position)? <= f.rtr_radius {
            out.push(id);
        }
    }
    Ok(out)
}

/// Inclusive tree path from `fa` to `fb` when one is an ancestor of the other.
pub fn same_path_chain(
    tree: &MulticastTree,
    fa: UavId,
    fb: UavId,
) -> Result<Option<Vec<UavId>>, TopologyError> {
    for id in [fa, fb] {
        if !tree.is_forwarder(id) {
            return Err(TopologyError::NotAForwarder(id));
        }
    }
    let up_from_b = tree.ancestry(fb);
    if let Some(pos) = up_from_b.iter().position(|&x| x == fa) {
        let mut chain = up_from_b[..=pos].to_vec();
        chain.reverse();
        return Ok(Some(chain));
    }
    let up_from_a = tree.ancestry(fa);
    if let Some(pos) = up_from_a.iter().position(|&x| x == fb) {
        return Ok(Some(up_from_a[..=pos].to_vec()));
    }
    Ok(None)
}

/// Undirected graph over forwarders; an edge joins every overlapping pair
/// and is weighted by the centre distance.
#[derive(Debug, Clone, PartialEq)]
pub struct OverlapGraph {
    pub vertices: Vec<UavId>,
    adjacency: BTreeMap<UavId, Vec<(UavId, f64)>>,
}

impl OverlapGraph {
    pub fn edges(&self) -> impl Iterator<Item = (UavId, UavId, f64)> + '_ {
        self.adjacency.iter().flat_map(|(&i, nbrs)| {
            nbrs.iter().filter(move |(j, _)| i < *j).map(move |&(j, w)| (i, j, w))
        })
    }

    pub fn neighbors(&self, id: UavId) -> &[(UavId, f64)] {
        self.adjacency.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn weight(&self, i: UavId, j: UavId) -> Option<f64> {
        self.neighbors(i).iter().find(|(k, _)| *k == j).map(|(_, w)| *w)
    }

    /// Dijkstra from `from` to `to`. Equal-weight alternatives resolve to the
    /// lexicographically smallest id sequence.
    pub fn shortest_chain(&self, from: UavId, to: UavId) -> Option<(Vec<UavId>, f64)> {
        if !self.adjacency.contains_key(&from) || !self.adjacency.contains_key(&to) {
            return None;
        }
        let mut best: BTreeMap<UavId, Label> = BTreeMap::new();
        let mut done: BTreeSet<UavId> = BTreeSet::new();
        let mut heap = BinaryHeap::new();
        let start = Label { cost: 0.0, path: vec![from] };
        best.insert(from, start.clone());
        heap.push(Reverse(start));

        while let Some(Reverse(label)) = heap.pop() {
            let node = *label.path.last().expect("paths are never empty");
            if done.contains(&node) || best.get(&node) != Some(&label) {
                continue;
            }
            if node == to {
                return Some((label.path, label.cost));
            }
            done.insert(node);
            for &(next, w) in self.neighbors(node) {
                if done.contains(&next) {
                    continue;
                }
                let mut path = label.path.clone();
                path.push(next);
                let cand = Label { cost: label.cost + w, path };
                if best.get(&next).is_none_or(|cur| cand < *cur) {
                    best.insert(next, cand.clone());
                    heap.push(Reverse(cand));
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Label {
    cost: f64,
    path: Vec<UavId>,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        let tol = 1e-9 * self.cost.abs().max(other.cost.abs()).max(1.0);
        if (self.cost - other.cost).abs() <= tol {
            self.path.cmp(&other.path)
        } else {
            self.cost.total_cmp(&other.cost)
        }
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub fn overlap_graph(tree: &MulticastTree, fleet: &Fleet) -> Result<OverlapGraph, TopologyError> {
    let fwd: Vec<&Uav> = tree
        .forwarders
        .iter()
        .map(|&id| fleet.get(id))
        .collect::<Result<_, _>>()?;
    let mut adjacency: BTreeMap<UavId, Vec<(UavId, f64)>> =
        fwd.iter().map(|u| (u.id, Vec::new())).collect();
    for (i, a) in fwd.iter().enumerate() {
        for b in &fwd[i + 1..] {
            if are_overlapping(a, b) {
                let w = distance(a.position, b.position);
                adjacency.get_mut(&a.id).unwrap().push((b.id, w));
                adjacency.get_mut(&b.id).unwrap().push((a.id, w));
            }
        }
    }
    Ok(OverlapGraph { vertices: fwd.iter().map(|u| u.id).collect(), adjacency })
}
