//! Network travel times between demand points and facility sites.
//!
//! Distances are computed once per site in meters and converted to minutes
//! per population group afterwards, so several groups share one set of
//! shortest-path runs.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geodata::{Coordinate, PopulationGroup, RoadNetwork, Scenario};

/// Marker for pairs that cannot be reached within the group's walking limit.
pub const UNREACHABLE: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutingOptions {
    /// Log a warning when a point snaps to a node farther than this.
    pub snap_warn_m: f64,
    /// Add point-to-node snap distances to the network distance.
    pub include_snap_distance: bool,
}

impl Default for RoutingOptions {
    fn default() -> Self {
        RoutingOptions {
            snap_warn_m: 500.0,
            include_snap_distance: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snap {
    pub node_id: String,
    pub node_index: usize,
    pub distance_m: f64,
}

/// Nearest node by great-circle distance; ties go to the smallest node id.
pub fn snap_to_network(point: &Coordinate, network: &RoadNetwork) -> Result<Snap> {
    network
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, n)| (i, point.haversine_m(&n.coord)))
        .min_by(|a, b| {
            a.1.total_cmp(&b.1)
                .then_with(|| network.nodes()[a.0].id.cmp(&network.nodes()[b.0].id))
        })
        .map(|(i, d)| Snap {
            node_id: network.nodes()[i].id.clone(),
            node_index: i,
            distance_m: d,
        })
        .ok_or(Error::EmptyNetwork)
}

fn snap_logged(point: &Coordinate, network: &RoadNetwork, what: &str, opts: &RoutingOptions) -> Result<Snap> {
    let snap = snap_to_network(point, network)?;
    if snap.distance_m > opts.snap_warn_m {
        log::warn!(
            "{what} snapped to node {} at {:.0} m (threshold {:.0} m)",
            snap.node_id,
            snap.distance_m,
            opts.snap_warn_m
        );
    }
    Ok(snap)
}

/// Forward adjacency in compressed form.
#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl Graph {
    pub fn from_network(network: &RoadNetwork) -> Self {
        let n = network.nodes().len();
        let mut arcs: Vec<(usize, usize, f64)> = Vec::with_capacity(network.edges().len() * 2);
        for e in network.edges() {
            let from = network.node_index(&e.from).expect("validated network");
            let to = network.node_index(&e.to).expect("validated network");
            arcs.push((from, to, e.length_m));
            if e.bidirectional {
                arcs.push((to, from, e.length_m));
            }
        }
        arcs.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut offsets = vec![0usize; n + 1];
        for &(from, _, _) in &arcs {
            offsets[from + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Graph {
            offsets,
            targets: arcs.iter().map(|a| a.1).collect(),
            weights: arcs.iter().map(|a| a.2).collect(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    fn arcs(&self, node: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[node]..self.offsets[node + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    /// Single-source distances; unreachable nodes are `UNREACHABLE`.
    /// Stops expanding past `limit`.
    pub fn dijkstra(&self, source: usize, limit: f64) -> Vec<f64> {
        #[derive(PartialEq)]
        struct Entry(f64, usize);
        impl Eq for Entry {}
        impl Ord for Entry {
            fn cmp(&self, other: &Self) -> Ordering {
                other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
            }
        }
        impl PartialOrd for Entry {
            fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
                Some(self.cmp(other))
            }
        }

        let mut dist = vec![UNREACHABLE; self.node_count()];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry(0.0, source));
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for (v, w) in self.arcs(u) {
                let nd = d + w;
                if nd < dist[v] && nd <= limit {
                    dist[v] = nd;
                    heap.push(Entry(nd, v));
                }
            }
        }
        dist
    }
}

/// Exact shortest-path distances in meters from `source` to every reachable
/// node.
pub fn shortest_path_distances(network: &RoadNetwork, source: &str) -> Result<BTreeMap<String, f64>> {
    let src = network
        .node_index(source)
        .ok_or_else(|| Error::UnknownNode(source.to_string()))?;
    let dist = Graph::from_network(network).dijkstra(src, f64::INFINITY);
    Ok(network
        .nodes()
        .iter()
        .zip(dist)
        .filter(|(_, d)| d.is_finite())
        .map(|(n, d)| (n.id.clone(), d))
        .collect())
}

/// Walking distances in meters, demand rows by site columns. Only distances
/// up to the cutoff used at construction are finite.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    demand_ids: Vec<String>,
    site_ids: Vec<String>,
    meters: Vec<f64>,
}

impl DistanceMatrix {
    /// One shortest-path search per site, truncated at the largest group
    /// walking limit in the scenario.
    pub fn compute(scenario: &Scenario, opts: &RoutingOptions) -> Result<Self> {
        let order: Vec<usize> = (0..scenario.sites().len()).collect();
        Self::compute_in_order(scenario, opts, &order)
    }

    /// Like [`compute`](Self::compute) but runs the per-site searches in the
    /// given order. The result does not depend on the order.
    pub fn compute_in_order(scenario: &Scenario, opts: &RoutingOptions, site_order: &[usize]) -> Result<Self> {
        let network = scenario.network();
        let n_sites = scenario.sites().len();
        let mut seen = vec![false; n_sites];
        for &j in site_order {
            if j >= n_sites || std::mem::replace(&mut seen[j], true) {
                return Err(Error::InvalidArgument("site order must be a permutation".into()));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidArgument("site order must be a permutation".into()));
        }

        let demand_snaps = scenario
            .demands()
            .iter()
            .map(|d| snap_logged(&d.location, network, &format!("demand {}", d.id), opts))
            .collect::<Result<Vec<_>>>()?;
        let site_snaps = scenario
            .sites()
            .iter()
            .map(|s| snap_logged(&s.location, network, &format!("site {}", s.id), opts))
            .collect::<Result<Vec<_>>>()?;

        let limit = scenario
            .groups()
            .iter()
            .map(PopulationGroup::max_walk_m)
            .fold(0.0, f64::max);
        let graph = Graph::from_network(network);

        let columns: Vec<(usize, Vec<f64>)> = site_order
            .par_iter()
            .map(|&j| {
                let site_snap = &site_snaps[j];
                let dist = graph.dijkstra(site_snap.node_index, limit);
                let column = demand_snaps
                    .iter()
                    .map(|ds| {
                        let mut d = dist[ds.node_index];
                        if opts.include_snap_distance {
                            d += ds.distance_m + site_snap.distance_m;
                        }
                        if d <= limit {
                            d
                        } else {
                            UNREACHABLE
                        }
                    })
                    .collect();
                (j, column)
            })
            .collect();

        let n_demands = demand_snaps.len();
        let mut meters = vec![UNREACHABLE; n_demands * n_sites];
        for (j, column) in columns {
            for (i, d) in column.into_iter().enumerate() {
                meters[i * n_sites + j] = d;
            }
        }
        Ok(DistanceMatrix {
            demand_ids: scenario.demands().iter().map(|d| d.id.clone()).collect(),
            site_ids: scenario.sites().iter().map(|s| s.id.clone()).collect(),
            meters,
        })
    }

    pub fn meters(&self, demand: usize, site: usize) -> f64 {
        self.meters[demand * self.site_ids.len() + site]
    }

    /// Minutes for `group`; pairs farther than the group's walking limit
    /// become `UNREACHABLE`.
    pub fn travel_times(&self, group: &PopulationGroup) -> TravelTimeMatrix {
        let minutes = self
            .meters
            .iter()
            .map(|&d| {
                if d <= group.max_walk_m() {
                    d / group.walk_speed_m_per_min()
                } else {
                    UNREACHABLE
                }
            })
            .collect();
        TravelTimeMatrix {
            group: group.clone(),
            demand_ids: self.demand_ids.clone(),
            site_ids: self.site_ids.clone(),
            minutes,
        }
    }
}

/// Travel times in minutes for one group, demand rows by site columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TravelTimeMatrix {
    group: PopulationGroup,
    demand_ids: Vec<String>,
    site_ids: Vec<String>,
    minutes: Vec<f64>,
}

impl TravelTimeMatrix {
    /// Builds a matrix from raw row-major minutes. Entries must be
    /// non-negative or `UNREACHABLE`.
    pub fn from_minutes(
        group: PopulationGroup,
        demand_ids: Vec<String>,
        site_ids: Vec<String>,
        minutes: Vec<f64>,
    ) -> Result<Self> {
        if minutes.len() != demand_ids.len() * site_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "matrix has {} entries, expected {} x {}",
                minutes.len(),
                demand_ids.len(),
                site_ids.len()
            )));
        }
        if let Some(bad) = minutes.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::InvalidArgument(format!("invalid travel time {bad}")));
        }
        Ok(TravelTimeMatrix {
            group,
            demand_ids,
            site_ids,
            minutes,
        })
    }

    pub fn group(&self) -> &PopulationGroup {
        &self.group
    }

    pub fn demand_ids(&self) -> &[String] {
        &self.demand_ids
    }

    pub fn site_ids(&self) -> &[String] {
        &self.site_ids
    }

    pub fn n_demands(&self) -> usize {
        self.demand_ids.len()
    }

    pub fn n_sites(&self) -> usize {
        self.site_ids.len()
    }

    pub fn get(&self, demand: usize, site: usize) -> f64 {
        self.minutes[demand * self.site_ids.len() + site]
    }

    /// CSV `demand_id,site_id,minutes` with `inf` for unreachable pairs.
    pub fn write_csv(&self, w: &mut dyn Write) -> std::io::Result<()> {
        writeln!(w, "demand_id,site_id,minutes")?;
        for (i, d) in self.demand_ids.iter().enumerate() {
            for (j, s) in self.site_ids.iter().enumerate() {
                let t = self.get(i, j);
                if t.is_finite() {
                    writeln!(w, "{d},{s},{t}")?;
                } else {
                    writeln!(w, "{d},{s},inf")?;
                }
            }
        }
        Ok(())
    }
}

/// Convenience wrapper: distances for the whole scenario converted for one
/// group.
pub fn build_travel_time_matrix(
    scenario: &Scenario,
    group: &PopulationGroup,
    opts: &RoutingOptions,
) -> Result<TravelTimeMatrix> {
    Ok(DistanceMatrix::compute(scenario, opts)?.travel_times(group))
}

/// Matrices for every group in the scenario, sharing one distance pass.
pub fn build_all_matrices(scenario: &Scenario, opts: &RoutingOptions) -> Result<Vec<TravelTimeMatrix>> {
    let distances = DistanceMatrix::compute(scenario, opts)?;
    Ok(scenario.groups().iter().map(|g| distances.travel_times(g)).collect())
}
