//! Input datasets: road network, demand points, facility sites and the
//! population groups whose walking parameters define travel-time catchments.
//!
//! Every constructor validates its invariants, so a [`Scenario`] that leaves
//! this module can be used downstream without re-checking.

mod io;
mod synth;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use io::write_file;
pub use io::{
    parse_demand, parse_network, parse_sites, read_demand, read_edges, read_nodes, read_sites, write_demand,
    write_edges, write_nodes, write_sites, DEFAULT_CAPACITY,
};
pub use synth::{generate_synthetic_scenario, SynthSpec};

const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// A WGS84 position in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub lon: f64,
    pub lat: f64,
}

impl Coordinate {
    pub fn new(lon: f64, lat: f64) -> Result<Self> {
        if !(-180.0..=180.0).contains(&lon) || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::Validation(format!(
                "coordinate ({lon}, {lat}) is outside WGS84 bounds"
            )));
        }
        Ok(Coordinate { lon, lat })
    }

    /// Great-circle distance in meters.
    pub fn haversine_m(&self, other: &Coordinate) -> f64 {
        let (phi1, phi2) = (self.lat.to_radians(), other.lat.to_radians());
        let dphi = phi2 - phi1;
        let dlambda = (other.lon - self.lon).to_radians();
        let a = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
        2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: String,
    pub coord: Coordinate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub from: String,
    pub to: String,
    pub length_m: f64,
    pub bidirectional: bool,
}

/// Road graph with authoritative edge lengths in meters.
#[derive(Debug, Clone)]
pub struct RoadNetwork {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    index: HashMap<String, usize>,
}

impl PartialEq for RoadNetwork {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl RoadNetwork {
    /// Validates node-id uniqueness, edge endpoints, positive lengths and
    /// rejects duplicate arcs (including a bidirectional edge repeated in
    /// reverse). Isolated nodes are kept.
    pub fn new(nodes: Vec<Node>, edges: Vec<Edge>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            if index.insert(node.id.clone(), i).is_some() {
                return Err(Error::Validation(format!("duplicate node id `{}`", node.id)));
            }
        }

        let mut arcs: HashSet<(usize, usize)> = HashSet::with_capacity(edges.len() * 2);
        for edge in &edges {
            let from = *index
                .get(&edge.from)
                .ok_or_else(|| Error::UnknownNode(edge.from.clone()))?;
            let to = *index.get(&edge.to).ok_or_else(|| Error::UnknownNode(edge.to.clone()))?;
            if !(edge.length_m > 0.0) || !edge.length_m.is_finite() {
                return Err(Error::Validation(format!(
                    "edge {} -> {} has non-positive length {}",
                    edge.from, edge.to, edge.length_m
                )));
            }
            let mut directed = vec![(from, to)];
            if edge.bidirectional && from != to {
                directed.push((to, from));
            }
            for arc in directed {
                if !arcs.insert(arc) {
                    return Err(Error::Validation(format!(
                        "duplicate edge between `{}` and `{}`",
                        edge.from, edge.to
                    )));
                }
            }
        }

        Ok(RoadNetwork { nodes, edges, index })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Copy of the network without the edge at `edge_index`.
    pub fn without_edge(&self, edge_index: usize) -> RoadNetwork {
        let mut edges = self.edges.clone();
        edges.remove(edge_index);
        RoadNetwork {
            nodes: self.nodes.clone(),
            edges,
            index: self.index.clone(),
        }
    }
}

/// Walking parameters of one population group. The catchment threshold in
/// minutes is always derived from distance and speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationGroup {
    name: String,
    walk_speed_m_per_min: f64,
    max_walk_m: f64,
}

impl PopulationGroup {
    pub fn new(name: impl Into<String>, walk_speed_m_per_min: f64, max_walk_m: f64) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(Error::Validation(format!("invalid group name `{name}`")));
        }
        if !(walk_speed_m_per_min > 0.0 && walk_speed_m_per_min.is_finite()) {
            return Err(Error::Validation(format!(
                "group `{name}`: walking speed must be positive"
            )));
        }
        if !(max_walk_m > 0.0 && max_walk_m.is_finite()) {
            return Err(Error::Validation(format!(
                "group `{name}`: maximum walking distance must be positive"
            )));
        }
        Ok(PopulationGroup {
            name,
            walk_speed_m_per_min,
            max_walk_m,
        })
    }

    /// General public: 80 m/min, 700 m.
    pub fn general() -> Self {
        PopulationGroup::new("general", 80.0, 700.0).expect("valid defaults")
    }

    /// Elderly residents: 70 m/min, 700 m.
    pub fn elderly() -> Self {
        PopulationGroup::new("elderly", 70.0, 700.0).expect("valid defaults")
    }

    pub fn defaults() -> Vec<Self> {
        vec![Self::general(), Self::elderly()]
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn walk_speed_m_per_min(&self) -> f64 {
        self.walk_speed_m_per_min
    }

    pub fn max_walk_m(&self) -> f64 {
        self.max_walk_m
    }

    /// Travel-time threshold in minutes.
    pub fn t_sigma_min(&self) -> f64 {
        self.max_walk_m / self.walk_speed_m_per_min
    }

    pub fn population_column(&self) -> String {
        format!("pop_{}", self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemandPoint {
    pub id: String,
    pub location: Coordinate,
    /// Persons per group name.
    pub population: BTreeMap<String, u64>,
}

impl DemandPoint {
    pub fn population_of(&self, group: &str) -> u64 {
        self.population.get(group).copied().unwrap_or(0)
    }

    /// A point with no population in any group. It still receives an
    /// accessibility score but never binds the placement constraint.
    pub fn is_inert(&self) -> bool {
        self.population.values().all(|&p| p == 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteStatus {
    Existing,
    Candidate,
}

impl fmt::Display for SiteStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SiteStatus::Existing => "existing",
            SiteStatus::Candidate => "candidate",
        })
    }
}

impl FromStr for SiteStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "existing" => Ok(SiteStatus::Existing),
            "candidate" => Ok(SiteStatus::Candidate),
            other => Err(Error::Validation(format!(
                "unknown site status `{other}` (expected existing or candidate)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FacilitySite {
    pub id: String,
    pub location: Coordinate,
    pub status: SiteStatus,
    /// Persons served per day.
    pub capacity: f64,
}

/// A validated bundle of network, demand, sites and groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    network: RoadNetwork,
    demands: Vec<DemandPoint>,
    sites: Vec<FacilitySite>,
    groups: Vec<PopulationGroup>,
}

impl Scenario {
    pub fn new(
        network: RoadNetwork,
        demands: Vec<DemandPoint>,
        sites: Vec<FacilitySite>,
        groups: Vec<PopulationGroup>,
    ) -> Result<Self> {
        if network.is_empty() {
            return Err(Error::EmptyNetwork);
        }
        if demands.is_empty() {
            return Err(Error::Validation("scenario has no demand points".into()));
        }
        if sites.is_empty() {
            return Err(Error::Validation("scenario has no facility sites".into()));
        }
        if groups.is_empty() {
            return Err(Error::Validation("scenario has no population groups".into()));
        }

        let mut names = HashSet::new();
        for g in &groups {
            if !names.insert(g.name()) {
                return Err(Error::Validation(format!("duplicate group `{}`", g.name())));
            }
        }
        let mut ids = HashSet::new();
        for d in &demands {
            if !ids.insert(d.id.as_str()) {
                return Err(Error::Validation(format!("duplicate demand id `{}`", d.id)));
            }
            if let Some(extra) = d.population.keys().find(|k| !names.contains(k.as_str())) {
                return Err(Error::Validation(format!(
                    "demand `{}` has population for undeclared group `{extra}`",
                    d.id
                )));
            }
        }
        let mut ids = HashSet::new();
        for s in &sites {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::Validation(format!("duplicate site id `{}`", s.id)));
            }
            if !(s.capacity > 0.0 && s.capacity.is_finite()) {
                return Err(Error::Validation(format!("site `{}` has non-positive capacity", s.id)));
            }
        }

        Ok(Scenario {
            network,
            demands,
            sites,
            groups,
        })
    }

    /// Reads `nodes.csv`, `edges.csv`, `demand.csv` and `sites.csv` from `dir`.
    pub fn load_bundle(dir: &Path, groups: Vec<PopulationGroup>, default_capacity: f64) -> Result<Self> {
        let network = parse_network(&dir.join("nodes.csv"), &dir.join("edges.csv"))?;
        let demands = parse_demand(&dir.join("demand.csv"), &groups)?;
        let sites = parse_sites(&dir.join("sites.csv"), default_capacity)?;
        Scenario::new(network, demands, sites, groups)
    }

    pub fn write_bundle(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        io::write_file(&dir.join("nodes.csv"), |w| write_nodes(w, &self.network))?;
        io::write_file(&dir.join("edges.csv"), |w| write_edges(w, &self.network))?;
        io::write_file(&dir.join("demand.csv"), |w| {
            write_demand(w, &self.demands, &self.groups)
        })?;
        io::write_file(&dir.join("sites.csv"), |w| write_sites(w, &self.sites))?;
        Ok(())
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.network
    }

    pub fn demands(&self) -> &[DemandPoint] {
        &self.demands
    }

    pub fn sites(&self) -> &[FacilitySite] {
        &self.sites
    }

    pub fn groups(&self) -> &[PopulationGroup] {
        &self.groups
    }

    pub fn group(&self, name: &str) -> Option<&PopulationGroup> {
        self.groups.iter().find(|g| g.name() == name)
    }

    pub fn site_index(&self, id: &str) -> Option<usize> {
        self.sites.iter().position(|s| s.id == id)
    }

    /// Same scenario with a different site list (re-validated).
    pub fn with_sites(&self, sites: Vec<FacilitySite>) -> Result<Self> {
        Scenario::new(self.network.clone(), self.demands.clone(), sites, self.groups.clone())
    }

    /// Same scenario with a different network (re-validated).
    pub fn with_network(&self, network: RoadNetwork) -> Result<Self> {
        Scenario::new(network, self.demands.clone(), self.sites.clone(), self.groups.clone())
    }

    pub fn total_population(&self, group: &str) -> u64 {
        self.demands.iter().map(|d| d.population_of(group)).sum()
    }
}
