//! Python bindings for the `etf_core` planner and simulator.

use etf_core::geometry::{self, Segment, Sphere};
use etf_core::scenario::{self, ScenarioError};
use etf_core::simulator::{self, SimError};
use etf_core::{MulticastTree, PlanError, Planner, Point3, Policy};
use pyo3::exceptions::{PyIOError, PyIndexError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type Xyz = (f64, f64, f64);

fn pt((x, y, z): Xyz) -> Point3 {
    Point3::new(x, y, z)
}

fn xyz(p: Point3) -> Xyz {
    (p.x, p.y, p.z)
}

fn sphere(center: Xyz, radius: f64) -> PyResult<Sphere> {
    Sphere::new(pt(center), radius).map_err(value_err)
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scenario_err(e: ScenarioError) -> PyErr {
    match e {
        ScenarioError::Io { .. } => PyIOError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn sim_err(e: SimError) -> PyErr {
    match e {
        SimError::Plan(_) => PyRuntimeError::new_err(e.to_string()),
        other => value_err(other),
    }
}

fn plan_err(e: PlanError) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn json<T: serde::Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

/// Euclidean distance between two points.
#[pyfunction]
fn distance(p: Xyz, q: Xyz) -> f64 {
    geometry::distance(pt(p), pt(q))
}

/// Crossings of segment `a`-`b` with a sphere surface as `(t, point)` pairs.
#[pyfunction]
fn segment_sphere_intersections(a: Xyz, b: Xyz, center: Xyz, radius: f64) -> PyResult<Vec<(f64, Xyz)>> {
    let hits = geometry::segment_sphere_intersections(&Segment::new(pt(a), pt(b)), &sphere(center, radius)?)
        .map_err(value_err)?;
    Ok(hits.into_iter().map(|c| (c.t, xyz(c.point))).collect())
}

/// Distance from `p` to the line through `a` and `b`.
#[pyfunction]
fn point_line_distance(a: Xyz, b: Xyz, p: Xyz) -> PyResult<f64> {
    geometry::point_line_distance(&Segment::new(pt(a), pt(b)), pt(p)).map_err(value_err)
}

#[pyfunction]
fn lens_center(c1: Xyz, r1: f64, c2: Xyz, r2: f64) -> PyResult<Xyz> {
    geometry::lens_center(&sphere(c1, r1)?, &sphere(c2, r2)?)
        .map(xyz)
        .map_err(value_err)
}

/// Samples the polyline every `step` metres and reports whether each sample
/// lies inside at least one `(center, radius)` sphere.
#[pyfunction]
#[pyo3(signature = (waypoints, spheres, step = 0.01))]
fn oracle_is_seamless(waypoints: Vec<Xyz>, spheres: Vec<(Xyz, f64)>, step: f64) -> PyResult<bool> {
    if step.is_nan() || step <= 0.0 {
        return Err(PyValueError::new_err("step must be positive"));
    }
    let points: Vec<Point3> = waypoints.into_iter().map(pt).collect();
    let spheres = spheres
        .into_iter()
        .map(|(c, r)| sphere(c, r))
        .collect::<PyResult<Vec<_>>>()?;
    Ok(etf_core::oracle_is_seamless(&points, &spheres, step))
}

#[pyclass(name = "TransitionPlan", frozen)]
struct PyPlan(etf_core::TransitionPlan);

#[pymethods]
impl PyPlan {
    #[getter]
    fn kind(&self) -> String {
        format!("{:?}", self.0.kind)
    }

    #[getter]
    fn seamless(&self) -> bool {
        self.0.seamless
    }

    #[getter]
    fn waypoints(&self) -> Vec<Xyz> {
        self.0.waypoints.iter().copied().map(xyz).collect()
    }

    #[getter]
    fn fa(&self) -> u32 {
        self.0.fa
    }

    #[getter]
    fn fb(&self) -> u32 {
        self.0.fb
    }

    #[getter]
    fn length(&self) -> f64 {
        self.0.length()
    }

    #[getter]
    fn chain(&self) -> Vec<u32> {
        self.0.trace.chain.clone()
    }

    fn serving_forwarders(&self) -> Vec<u32> {
        self.0.serving_forwarders()
    }

    fn to_json(&self) -> String {
        json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!(
            "TransitionPlan(kind={:?}, seamless={}, waypoints={}, length={:.3})",
            self.0.kind,
            self.0.seamless,
            self.0.waypoints.len(),
            self.0.length()
        )
    }
}

#[pyclass(name = "Verdict", frozen)]
struct PyVerdict(etf_core::Verdict);

#[pymethods]
impl PyVerdict {
    #[getter]
    fn seamless(&self) -> bool {
        self.0.seamless
    }

    #[getter]
    fn checking_point_owners(&self) -> Vec<u32> {
        self.0.trace.checking_points.iter().map(|c| c.owner).collect()
    }

    fn to_json(&self) -> String {
        json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("Verdict(seamless={})", self.0.seamless)
    }
}

#[pyclass(name = "MetricsReport", frozen)]
struct PyReport(etf_core::MetricsReport);

#[pymethods]
impl PyReport {
    #[getter]
    fn scenario_id(&self) -> &str {
        &self.0.scenario_id
    }

    #[getter]
    fn policy(&self) -> String {
        self.0.policy.to_string()
    }

    #[getter]
    fn amd(&self) -> f64 {
        self.0.amd
    }

    #[getter]
    fn amt(&self) -> f64 {
        self.0.amt
    }

    #[getter]
    fn amod(&self) -> f64 {
        self.0.amod
    }

    #[getter]
    fn amot(&self) -> f64 {
        self.0.amot
    }

    #[getter]
    fn aaeb(&self) -> f64 {
        self.0.aaeb
    }

    #[getter]
    fn aco(&self) -> f64 {
        self.0.aco
    }

    #[getter]
    fn packets_emitted(&self) -> u64 {
        self.0.packets_emitted
    }

    fn csv_row(&self) -> Vec<String> {
        self.0.csv_row().to_vec()
    }

    fn to_json(&self) -> String {
        json(&self.0)
    }

    fn __repr__(&self) -> String {
        format!("MetricsReport(scenario_id={:?}, policy={})", self.0.scenario_id, self.0.policy)
    }
}

/// A loaded scenario: fleet, transitions, traffic and planner settings.
#[pyclass(name = "Scenario")]
struct PyScenario(simulator::Scenario);

impl PyScenario {
    fn tree(&self) -> PyResult<MulticastTree> {
        etf_core::build_lcrt_tree(&self.0.fleet).map_err(value_err)
    }

    fn request(&self, tree: &MulticastTree, k: usize) -> PyResult<etf_core::TransitionRequest> {
        if k >= self.0.transitions.len() {
            return Err(PyIndexError::new_err(format!(
                "transition {k} out of range ({} defined)",
                self.0.transitions.len()
            )));
        }
        self.0.transition_request(tree, k).map_err(sim_err)
    }
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        scenario::load_scenario(path).map(Self).map_err(scenario_err)
    }

    #[staticmethod]
    #[pyo3(signature = (text, id = "scenario"))]
    fn from_json(text: &str, id: &str) -> PyResult<Self> {
        scenario::parse_scenario(text, id).map(Self).map_err(scenario_err)
    }

    fn to_json(&self) -> String {
        scenario::to_json(&self.0)
    }

    #[getter]
    fn id(&self) -> &str {
        &self.0.id
    }

    #[getter]
    fn policy(&self) -> String {
        self.0.policy.to_string()
    }

    #[setter]
    fn set_policy(&mut self, name: &str) -> PyResult<()> {
        self.0.policy = match name {
            "etf" => Policy::Etf,
            "lcrt" => Policy::Lcrt,
            other => return Err(PyValueError::new_err(format!("unknown policy {other:?}"))),
        };
        Ok(())
    }

    #[getter]
    fn traffic_rate(&self) -> f64 {
        self.0.traffic_rate
    }

    #[setter]
    fn set_traffic_rate(&mut self, rate: f64) {
        self.0.traffic_rate = rate;
    }

    #[getter]
    fn transition_count(&self) -> usize {
        self.0.transitions.len()
    }

    /// Forwarder ids of the multicast tree built over the fleet.
    fn forwarders(&self) -> PyResult<Vec<u32>> {
        Ok(self.tree()?.forwarders.into_iter().collect())
    }

    #[pyo3(signature = (transition = 0))]
    fn plan(&self, transition: usize) -> PyResult<PyPlan> {
        let tree = self.tree()?;
        let req = self.request(&tree, transition)?;
        Planner::new(&self.0.fleet, &tree, self.0.planner)
            .plan_transition(&req)
            .map(PyPlan)
            .map_err(plan_err)
    }

    #[pyo3(signature = (transition = 0))]
    fn check(&self, transition: usize) -> PyResult<PyVerdict> {
        let tree = self.tree()?;
        let req = self.request(&tree, transition)?;
        Planner::new(&self.0.fleet, &tree, self.0.planner)
            .check_seamless(&req)
            .map(PyVerdict)
            .map_err(plan_err)
    }

    /// Replans every transition and replays it through the sampling oracle.
    fn verify(&self) -> PyResult<Vec<bool>> {
        let tree = self.tree()?;
        let planner = Planner::new(&self.0.fleet, &tree, self.0.planner);
        let spheres = tree
            .forwarders
            .iter()
            .map(|&id| self.0.fleet.get(id).map(|u| u.rtr()))
            .collect::<Result<Vec<_>, _>>()
            .map_err(value_err)?;
        (0..self.0.transitions.len())
            .map(|k| {
                let req = self.request(&tree, k)?;
                Ok(match planner.plan_transition(&req) {
                    Ok(plan) => {
                        plan.seamless
                            && etf_core::oracle_is_seamless(&plan.waypoints, &spheres, self.0.planner.oracle_step)
                    }
                    Err(_) => false,
                })
            })
            .collect()
    }

    /// Runs the packet-level simulation. The GIL is released meanwhile.
    fn simulate(&self, py: Python<'_>) -> PyResult<PyReport> {
        let s = self.0.clone();
        py.detach(move || simulator::run(&s)).map(PyReport).map_err(sim_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(id={:?}, uavs={}, transitions={}, policy={})",
            self.0.id,
            self.0.fleet.len(),
            self.0.transitions.len(),
            self.0.policy
        )
    }
}

#[pymodule]
fn uav_etf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(segment_sphere_intersections, m)?)?;
    m.add_function(wrap_pyfunction!(point_line_distance, m)?)?;
    m.add_function(wrap_pyfunction!(lens_center, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_is_seamless, m)?)?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyPlan>()?;
    m.add_class::<PyVerdict>()?;
    m.add_class::<PyReport>()?;
    Ok(())
}
