//! Run configuration.
//!
//! The config file is flat `key = value` text. `#` starts a comment, list
//! values are comma separated, and relative paths resolve against the
//! file's directory. Command-line flags use the same keys (with dashes) and
//! win over the file.
//!
//! ```text
//! bundle = scenario            # directory with nodes/edges/demand/sites CSVs
//! groups = general:80:700, elderly:70:700
//! a_sigma = 0.135
//! constraint_groups = general, elderly
//! bins = very-low:0, low:0.0675, medium:0.135
//! ```

use std::path::{Path, PathBuf};

use crate::accessibility::{Bin, BinSpec};
use crate::error::{Error, Result};
use crate::geodata::{PopulationGroup, SynthSpec, DEFAULT_CAPACITY};
use crate::optimizer::{ObjectiveParams, DEFAULT_BUDGET, DEFAULT_MAX_POOL};
use crate::routing::RoutingOptions;

/// Every recognised key.
pub const KEYS: &[&str] = &[
    "bundle",
    "nodes",
    "edges",
    "demand",
    "sites",
    "out",
    "groups",
    "alpha",
    "beta",
    "gamma",
    "a_sigma",
    "primary_group",
    "constraint_groups",
    "bins",
    "budget",
    "max_pool",
    "seed",
    "default_capacity",
    "include_snap_distance",
    "snap_warn_m",
    "dump_matrix",
    "geojson",
    "rows",
    "cols",
    "spacing_m",
    "n_existing",
    "n_candidate",
    "population_scale",
    "existing_extent",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub nodes: Option<PathBuf>,
    pub edges: Option<PathBuf>,
    pub demand: Option<PathBuf>,
    pub sites: Option<PathBuf>,
    pub out: PathBuf,
    pub groups: Vec<PopulationGroup>,
    pub params: ObjectiveParams,
    pub bins: BinSpec,
    pub budget: usize,
    pub max_pool: usize,
    pub seed: u64,
    pub default_capacity: f64,
    pub routing: RoutingOptions,
    pub dump_matrix: bool,
    pub geojson: bool,
    pub synth: SynthSpec,
}

/// Reads `key = value` pairs from config text. Later keys override earlier
/// ones when applied in order.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
        let key = key.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!("line {}: unknown key `{key}`", n + 1)));
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn number<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{value}`")))
}

fn boolean(key: &str, value: &str) -> Result<bool> {
    match value {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("`{key}`: expected true or false, got `{value}`"))),
    }
}

fn list(value: &str) -> Vec<String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_groups(value: &str) -> Result<Vec<PopulationGroup>> {
    list(value)
        .iter()
        .map(|item| {
            let parts: Vec<&str> = item.split(':').map(str::trim).collect();
            let [name, speed, dist] = parts[..] else {
                return Err(Error::Config(format!(
                    "group `{item}` must be name:speed_m_per_min:max_walk_m"
                )));
            };
            PopulationGroup::new(name, number("groups", speed)?, number("groups", dist)?)
        })
        .collect()
}

fn parse_bins(value: &str) -> Result<Vec<Bin>> {
    list(value)
        .iter()
        .map(|item| {
            let (label, bound) = item
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("bin `{item}` must be label:lower_bound")))?;
            Ok(Bin {
                label: label.trim().to_string(),
                lower_bound: number("bins", bound.trim())?,
            })
        })
        .collect()
}

impl RunConfig {
    /// Builds a config from ordered `(key, path_base, value)` entries.
    /// `path_base` is the directory relative paths in that entry resolve
    /// against.
    pub fn from_entries(entries: &[(String, PathBuf, String)]) -> Result<Self> {
        let mut nodes = None;
        let mut edges = None;
        let mut demand = None;
        let mut sites = None;
        let mut out = PathBuf::from("catchment-out");
        let mut groups = PopulationGroup::defaults();
        let mut params = ObjectiveParams::default();
        let mut primary: Option<String> = None;
        let mut constraint: Option<Vec<String>> = None;
        let mut bins: Option<Vec<Bin>> = None;
        let mut budget = DEFAULT_BUDGET;
        let mut max_pool = DEFAULT_MAX_POOL;
        let mut seed = 7;
        let mut default_capacity = DEFAULT_CAPACITY;
        let mut routing = RoutingOptions::default();
        let mut dump_matrix = false;
        let mut geojson = true;
        let mut synth = SynthSpec::default();

        for (key, base, value) in entries {
            let path = || base.join(value);
            let v = value.as_str();
            match key.as_str() {
                "bundle" => {
                    let dir = path();
                    nodes = Some(dir.join("nodes.csv"));
                    edges = Some(dir.join("edges.csv"));
                    demand = Some(dir.join("demand.csv"));
                    sites = Some(dir.join("sites.csv"));
                }
                "nodes" => nodes = Some(path()),
                "edges" => edges = Some(path()),
                "demand" => demand = Some(path()),
                "sites" => sites = Some(path()),
                "out" => out = path(),
                "groups" => groups = parse_groups(v)?,
                "alpha" => params.alpha = number(key, v)?,
                "beta" => params.beta = number(key, v)?,
                "gamma" => params.gamma = number(key, v)?,
                "a_sigma" => params.a_sigma = number(key, v)?,
                "primary_group" => primary = Some(v.to_string()),
                "constraint_groups" => constraint = Some(list(v)),
                "bins" => bins = Some(parse_bins(v)?),
                "budget" => budget = number(key, v)?,
                "max_pool" => max_pool = number(key, v)?,
                "seed" => seed = number(key, v)?,
                "default_capacity" => default_capacity = number(key, v)?,
                "include_snap_distance" => routing.include_snap_distance = boolean(key, v)?,
                "snap_warn_m" => routing.snap_warn_m = number(key, v)?,
                "dump_matrix" => dump_matrix = boolean(key, v)?,
                "geojson" => geojson = boolean(key, v)?,
                "rows" => synth.rows = number(key, v)?,
                "cols" => synth.cols = number(key, v)?,
                "spacing_m" => synth.spacing_m = number(key, v)?,
                "n_existing" => synth.n_existing = number(key, v)?,
                "n_candidate" => synth.n_candidate = number(key, v)?,
                "population_scale" => synth.population_scale = number(key, v)?,
                "existing_extent" => synth.existing_extent = number(key, v)?,
                other => return Err(Error::Config(format!("unknown key `{other}`"))),
            }
        }

        if groups.is_empty() {
            return Err(Error::Config("at least one group is required".into()));
        }
        let primary = primary.unwrap_or_else(|| {
            groups
                .iter()
                .find(|g| g.name() == "general")
                .unwrap_or(&groups[0])
                .name()
                .to_string()
        });
        let constraint = constraint.unwrap_or_else(|| vec![primary.clone()]);
        for name in std::iter::once(&primary).chain(&constraint) {
            if !groups.iter().any(|g| g.name() == name) {
                return Err(Error::Config(format!("group `{name}` is not defined in `groups`")));
            }
        }
        params.primary_group = primary;
        params.constraint_groups = constraint;
        params.validate().map_err(|e| Error::Config(e.to_string()))?;
        if !(default_capacity > 0.0) {
            return Err(Error::Config("default_capacity must be positive".into()));
        }
        let bins = match bins {
            Some(b) => BinSpec::new(b),
            None if params.a_sigma == 0.0 => BinSpec::new(vec![Bin {
                label: "at-target".into(),
                lower_bound: 0.0,
            }]),
            None => BinSpec::default_for_target(params.a_sigma),
        }
        .map_err(|e| Error::Config(e.to_string()))?;
        synth.capacity = default_capacity;

        Ok(RunConfig {
            nodes,
            edges,
            demand,
            sites,
            out,
            groups,
            params,
            bins,
            budget,
            max_pool,
            seed,
            default_capacity,
            routing,
            dump_matrix,
            geojson,
            synth,
        })
    }

    /// Loads `path` (if any) and applies `overrides`, which resolve paths
    /// against the working directory.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut entries = Vec::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
            entries.extend(parse_pairs(&text)?.into_iter().map(|(k, v)| (k, base.clone(), v)));
        }
        entries.extend(overrides.iter().map(|(k, v)| (k.clone(), PathBuf::new(), v.clone())));
        RunConfig::from_entries(&entries)
    }

    /// The four input paths, each required to exist.
    pub fn input_paths(&self) -> Result<[&Path; 4]> {
        fn get<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
            let p = p
                .as_deref()
                .ok_or_else(|| Error::Config(format!("`{key}` (or `bundle`) is required")))?;
            if !p.exists() {
                return Err(Error::io(p, std::io::ErrorKind::NotFound.into()));
            }
            Ok(p)
        }
        Ok([
            get(&self.nodes, "nodes")?,
            get(&self.edges, "edges")?,
            get(&self.demand, "demand")?,
            get(&self.sites, "sites")?,
        ])
    }
}
