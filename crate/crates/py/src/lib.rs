//! Python bindings: scenarios, travel times, 2SFCA scores, coverage and the
//! facility-placement planner.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use catchment::accessibility::{self, Bin, BinSpec, DecayParams};
use catchment::geodata::{self, SiteStatus, SynthSpec, DEFAULT_CAPACITY};
use catchment::optimizer::{self, Layout, ObjectiveParams};
use catchment::routing::{self, RoutingOptions};
use catchment::Error;

create_exception!(catchment, PoolTooLargeError, PyValueError);

/// `(demand_id, group, accessibility)`.
type ShortfallRow = (String, String, f64);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        Error::PoolTooLarge { .. } => PoolTooLargeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for catchment::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(module = "catchment", name = "PopulationGroup", frozen, from_py_object)]
#[derive(Clone)]
struct PyGroup(geodata::PopulationGroup);

#[pymethods]
impl PyGroup {
    #[new]
    fn new(name: &str, walk_speed_m_per_min: f64, max_walk_m: f64) -> PyResult<Self> {
        Ok(PyGroup(
            geodata::PopulationGroup::new(name, walk_speed_m_per_min, max_walk_m).py_err()?,
        ))
    }

    #[staticmethod]
    fn general() -> Self {
        PyGroup(geodata::PopulationGroup::general())
    }

    #[staticmethod]
    fn elderly() -> Self {
        PyGroup(geodata::PopulationGroup::elderly())
    }

    #[getter]
    fn name(&self) -> &str {
        self.0.name()
    }

    #[getter]
    fn walk_speed_m_per_min(&self) -> f64 {
        self.0.walk_speed_m_per_min()
    }

    #[getter]
    fn max_walk_m(&self) -> f64 {
        self.0.max_walk_m()
    }

    /// Catchment threshold in minutes.
    #[getter]
    fn t_sigma_min(&self) -> f64 {
        self.0.t_sigma_min()
    }

    fn __repr__(&self) -> String {
        format!(
            "PopulationGroup({:?}, {}, {})",
            self.0.name(),
            self.0.walk_speed_m_per_min(),
            self.0.max_walk_m()
        )
    }
}

#[pyclass(module = "catchment", name = "TravelTimeMatrix", frozen)]
struct PyMatrix(routing::TravelTimeMatrix);

#[pymethods]
impl PyMatrix {
    #[getter]
    fn group(&self) -> PyGroup {
        PyGroup(self.0.group().clone())
    }

    #[getter]
    fn demand_ids(&self) -> Vec<String> {
        self.0.demand_ids().to_vec()
    }

    #[getter]
    fn site_ids(&self) -> Vec<String> {
        self.0.site_ids().to_vec()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_demands(), self.0.n_sites())
    }

    /// Minutes from demand `i` to site `j`; `inf` when out of reach.
    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        if i >= self.0.n_demands() || j >= self.0.n_sites() {
            return Err(PyValueError::new_err("index out of range"));
        }
        Ok(self.0.get(i, j))
    }

    fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.0.n_demands())
            .map(|i| (0..self.0.n_sites()).map(|j| self.0.get(i, j)).collect())
            .collect()
    }
}

#[pyclass(module = "catchment", name = "Scenario", frozen)]
struct PyScenario {
    inner: Arc<geodata::Scenario>,
}

impl PyScenario {
    fn wrap(s: geodata::Scenario) -> Self {
        PyScenario { inner: Arc::new(s) }
    }

    fn ids_with(&self, status: SiteStatus) -> Vec<String> {
        self.inner
            .sites()
            .iter()
            .filter(|s| s.status == status)
            .map(|s| s.id.clone())
            .collect()
    }

    fn matrices(&self, include_snap_distance: bool) -> PyResult<Vec<routing::TravelTimeMatrix>> {
        let opts = RoutingOptions {
            include_snap_distance,
            ..RoutingOptions::default()
        };
        routing::build_all_matrices(&self.inner, &opts).py_err()
    }
}

#[pymethods]
impl PyScenario {
    /// Reads nodes.csv, edges.csv, demand.csv and sites.csv from `path`.
    #[staticmethod]
    #[pyo3(signature = (path, groups=None, default_capacity=DEFAULT_CAPACITY))]
    fn load_bundle(path: PathBuf, groups: Option<Vec<PyGroup>>, default_capacity: f64) -> PyResult<Self> {
        let groups = match groups {
            Some(g) => g.into_iter().map(|g| g.0).collect(),
            None => geodata::PopulationGroup::defaults(),
        };
        Ok(Self::wrap(
            geodata::Scenario::load_bundle(&path, groups, default_capacity).py_err()?,
        ))
    }

    #[staticmethod]
    #[pyo3(signature = (
        seed,
        rows=20,
        cols=20,
        spacing_m=100.0,
        n_existing=16,
        n_candidate=30,
        population_scale=250.0,
        existing_extent=1.0,
        capacity=DEFAULT_CAPACITY,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn synthetic(
        seed: u64,
        rows: usize,
        cols: usize,
        spacing_m: f64,
        n_existing: usize,
        n_candidate: usize,
        population_scale: f64,
        existing_extent: f64,
        capacity: f64,
    ) -> PyResult<Self> {
        let spec = SynthSpec {
            rows,
            cols,
            spacing_m,
            n_existing,
            n_candidate,
            population_scale,
            existing_extent,
            capacity,
        };
        Ok(Self::wrap(geodata::generate_synthetic_scenario(seed, &spec).py_err()?))
    }

    fn write_bundle(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_bundle(&path).py_err()
    }

    #[getter]
    fn groups(&self) -> Vec<PyGroup> {
        self.inner.groups().iter().cloned().map(PyGroup).collect()
    }

    #[getter]
    fn demand_ids(&self) -> Vec<String> {
        self.inner.demands().iter().map(|d| d.id.clone()).collect()
    }

    #[getter]
    fn site_ids(&self) -> Vec<String> {
        self.inner.sites().iter().map(|s| s.id.clone()).collect()
    }

    #[getter]
    fn existing_ids(&self) -> Vec<String> {
        self.ids_with(SiteStatus::Existing)
    }

    #[getter]
    fn candidate_ids(&self) -> Vec<String> {
        self.ids_with(SiteStatus::Candidate)
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.network().nodes().len()
    }

    fn population(&self, group: &str) -> Vec<u64> {
        self.inner.demands().iter().map(|d| d.population_of(group)).collect()
    }

    fn total_population(&self, group: &str) -> u64 {
        self.inner.total_population(group)
    }

    /// Travel-time matrices keyed by group name.
    #[pyo3(signature = (include_snap_distance=false))]
    fn travel_times(&self, include_snap_distance: bool) -> PyResult<BTreeMap<String, Py<PyMatrix>>> {
        Python::attach(|py| {
            self.matrices(include_snap_distance)?
                .into_iter()
                .map(|m| Ok((m.group().name().to_string(), Py::new(py, PyMatrix(m))?)))
                .collect()
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(nodes={}, demands={}, sites={})",
            self.inner.network().nodes().len(),
            self.inner.demands().len(),
            self.inner.sites().len()
        )
    }
}

/// Truncated Gaussian decay weight for travel time `t` (minutes).
#[pyfunction]
fn gaussian_decay(t: f64, t_sigma: f64) -> PyResult<f64> {
    accessibility::gaussian_decay(t, DecayParams::new(t_sigma).py_err()?).py_err()
}

fn open_set(scenario: &PyScenario, open_sites: Option<Vec<String>>) -> BTreeSet<String> {
    match open_sites {
        Some(ids) => ids.into_iter().collect(),
        None => scenario.existing_ids().into_iter().collect(),
    }
}

fn matrix_for<'a>(matrices: &'a [routing::TravelTimeMatrix], group: &str) -> PyResult<&'a routing::TravelTimeMatrix> {
    matrices
        .iter()
        .find(|m| m.group().name() == group)
        .ok_or_else(|| PyValueError::new_err(format!("scenario has no group `{group}`")))
}

/// 2SFCA score per demand point (scenario order). `open_sites` defaults to
/// the existing facilities.
#[pyfunction]
#[pyo3(signature = (scenario, group, open_sites=None, gamma=1.0))]
fn accessibility_scores(
    scenario: &PyScenario,
    group: &str,
    open_sites: Option<Vec<String>>,
    gamma: f64,
) -> PyResult<Vec<f64>> {
    let matrices = scenario.matrices(false)?;
    let m = matrix_for(&matrices, group)?;
    let field =
        accessibility::accessibility_scores(&scenario.inner, m, &open_set(scenario, open_sites), gamma).py_err()?;
    Ok(field.scores)
}

fn bin_spec(a_sigma: f64, bins: Option<Vec<(String, f64)>>) -> PyResult<BinSpec> {
    match bins {
        Some(b) => BinSpec::new(
            b.into_iter()
                .map(|(label, lower_bound)| Bin { label, lower_bound })
                .collect(),
        ),
        None => BinSpec::default_for_target(a_sigma),
    }
    .py_err()
}

/// Population per coverage level as a list of dicts with `label`,
/// `lower_bound`, `population` and `share`.
#[pyfunction]
#[pyo3(signature = (scenario, group, scores, a_sigma=0.135, bins=None))]
fn coverage<'py>(
    py: Python<'py>,
    scenario: &PyScenario,
    group: &str,
    scores: Vec<f64>,
    a_sigma: f64,
    bins: Option<Vec<(String, f64)>>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let field = accessibility::AccessibilityField {
        group: group.to_string(),
        gamma: 1.0,
        demand_ids: scenario.demand_ids(),
        scores,
    };
    let report =
        accessibility::coverage_report(&field, scenario.inner.demands(), &bin_spec(a_sigma, bins)?).py_err()?;
    report
        .bins
        .into_iter()
        .map(|b| {
            let d = PyDict::new(py);
            d.set_item("label", b.label)?;
            d.set_item("lower_bound", b.lower_bound)?;
            d.set_item("population", b.population)?;
            d.set_item("share", b.share)?;
            Ok(d)
        })
        .collect()
}

#[pyclass(module = "catchment", name = "OptimizationResult", frozen)]
struct PyResultRecord(optimizer::OptimizationResult);

#[pymethods]
impl PyResultRecord {
    #[getter]
    fn method(&self) -> &str {
        &self.0.method
    }

    /// Opened candidate site ids, ascending.
    #[getter]
    fn layout(&self) -> Vec<String> {
        self.0.layout.open_candidates.iter().cloned().collect()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k
    }

    #[getter]
    fn objective(&self) -> f64 {
        self.0.objective
    }

    #[getter]
    fn feasible(&self) -> bool {
        self.0.feasible
    }

    /// `(demand_id, group, accessibility)` for every demand below target.
    #[getter]
    fn shortfalls(&self) -> Vec<ShortfallRow> {
        self.0
            .shortfalls
            .iter()
            .map(|s| (s.demand_id.clone(), s.group.clone(), s.accessibility))
            .collect()
    }

    /// Final scores per group, in scenario demand order.
    #[getter]
    fn scores(&self) -> BTreeMap<String, Vec<f64>> {
        self.0
            .fields
            .iter()
            .map(|(g, f)| (g.clone(), f.scores.clone()))
            .collect()
    }

    /// The same record `catchment solve` writes to result.json.
    fn to_json(&self) -> PyResult<String> {
        catchment::export::to_json_string(&self.0).py_err()
    }

    fn __repr__(&self) -> String {
        format!(
            "OptimizationResult(method={:?}, k={}, objective={}, feasible={})",
            self.0.method, self.0.k, self.0.objective, self.0.feasible
        )
    }
}

/// Evaluates and optimizes candidate layouts for one scenario.
#[pyclass(module = "catchment", name = "Planner", frozen)]
struct PyPlanner {
    scenario: Arc<geodata::Scenario>,
    matrices: Vec<routing::TravelTimeMatrix>,
    params: ObjectiveParams,
    bins: BinSpec,
}

impl PyPlanner {
    fn with<T>(&self, f: impl FnOnce(&optimizer::Planner) -> catchment::Result<T>) -> PyResult<T> {
        let planner = optimizer::Planner::new(&self.scenario, &self.matrices, self.params.clone()).py_err()?;
        f(&planner).py_err()
    }
}

#[pymethods]
impl PyPlanner {
    #[new]
    #[pyo3(signature = (
        scenario,
        alpha=1.0,
        beta=1.0,
        gamma=1.0,
        a_sigma=0.135,
        primary_group="general".to_string(),
        constraint_groups=None,
        bins=None,
        include_snap_distance=false,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        scenario: &PyScenario,
        alpha: f64,
        beta: f64,
        gamma: f64,
        a_sigma: f64,
        primary_group: String,
        constraint_groups: Option<Vec<String>>,
        bins: Option<Vec<(String, f64)>>,
        include_snap_distance: bool,
    ) -> PyResult<Self> {
        let constraint_groups = constraint_groups.unwrap_or_else(|| vec![primary_group.clone()]);
        let params = ObjectiveParams {
            alpha,
            beta,
            gamma,
            a_sigma,
            primary_group,
            constraint_groups,
        };
        params.validate().py_err()?;
        let planner = PyPlanner {
            scenario: Arc::clone(&scenario.inner),
            matrices: scenario.matrices(include_snap_distance)?,
            params,
            bins: bin_spec(a_sigma, bins)?,
        };
        planner.with(|_| Ok(()))?;
        Ok(planner)
    }

    #[getter]
    fn candidate_count(&self) -> PyResult<usize> {
        self.with(|p| Ok(p.candidate_count()))
    }

    fn objective(&self, layout: Vec<String>) -> PyResult<f64> {
        self.with(|p| p.objective_value(&Layout::new(layout)))
    }

    /// `(feasible, shortfalls)` where each shortfall is
    /// `(demand_id, group, accessibility)`.
    fn is_feasible(&self, layout: Vec<String>) -> PyResult<(bool, Vec<ShortfallRow>)> {
        let (ok, short) = self.with(|p| p.is_feasible(&Layout::new(layout)))?;
        Ok((
            ok,
            short
                .into_iter()
                .map(|s| (s.demand_id, s.group, s.accessibility))
                .collect(),
        ))
    }

    fn greedy(&self) -> PyResult<Vec<String>> {
        self.with(|p| Ok(p.greedy_construct().0.open_candidates.into_iter().collect()))
    }

    #[pyo3(signature = (start, budget=optimizer::DEFAULT_BUDGET))]
    fn local_search(&self, start: Vec<String>, budget: usize) -> PyResult<Vec<String>> {
        let out = self.with(|p| p.local_search(&Layout::new(start), budget))?;
        Ok(out.layout.open_candidates.into_iter().collect())
    }

    #[pyo3(signature = (budget=optimizer::DEFAULT_BUDGET))]
    fn optimize(&self, py: Python<'_>, budget: usize) -> PyResult<PyResultRecord> {
        py.detach(|| self.with(|p| p.optimize(budget, &self.bins)))
            .map(PyResultRecord)
    }

    #[pyo3(signature = (max_pool=optimizer::DEFAULT_MAX_POOL))]
    fn oracle(&self, py: Python<'_>, max_pool: usize) -> PyResult<PyResultRecord> {
        py.detach(|| self.with(|p| p.exhaustive_oracle(max_pool, &self.bins)))
            .map(PyResultRecord)
    }
}

#[pymodule]
#[pyo3(name = "catchment")]
fn catchment_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGroup>()?;
    m.add_class::<PyScenario>()?;
    m.add_class::<PyMatrix>()?;
    m.add_class::<PyPlanner>()?;
    m.add_class::<PyResultRecord>()?;
    m.add_function(wrap_pyfunction!(gaussian_decay, m)?)?;
    m.add_function(wrap_pyfunction!(accessibility_scores, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add("PoolTooLargeError", m.py().get_type::<PoolTooLargeError>())?;
    m.add("DEFAULT_CAPACITY", DEFAULT_CAPACITY)?;
    Ok(())
}
