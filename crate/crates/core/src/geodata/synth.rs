//! Seeded synthetic scenarios: a jittered street grid with a population
//! hotspot, a cluster of existing facilities and a scattered candidate pool.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    Coordinate, DemandPoint, Edge, FacilitySite, Node, PopulationGroup, RoadNetwork, Scenario, SiteStatus,
    DEFAULT_CAPACITY,
};
use crate::error::{Error, Result};

const ORIGIN_LON: f64 = 118.76;
const ORIGIN_LAT: f64 = 32.05;
const METERS_PER_DEG_LAT: f64 = 111_320.0;
const CANDIDATE_TRIES: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    /// Street-block spacing in meters.
    pub spacing_m: f64,
    pub n_existing: usize,
    pub n_candidate: usize,
    /// Mean general-group persons per demand point.
    pub population_scale: f64,
    /// Share of the grid (0, 1] nearest a random centre from which existing
    /// sites are drawn. 1.0 spreads them over the whole grid.
    pub existing_extent: f64,
    pub capacity: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            rows: 20,
            cols: 20,
            spacing_m: 100.0,
            n_existing: 16,
            n_candidate: 30,
            population_scale: 250.0,
            existing_extent: 1.0,
            capacity: DEFAULT_CAPACITY,
        }
    }
}

fn pad(prefix: char, i: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(3);
    format!("{prefix}{i:0width$}")
}

fn round_to(x: f64, scale: f64) -> f64 {
    (x * scale).round() / scale
}

/// Builds a scenario that is a pure function of `(seed, spec)`. Both groups
/// default to the general/elderly walking parameters.
pub fn generate_synthetic_scenario(seed: u64, spec: &SynthSpec) -> Result<Scenario> {
    if spec.rows < 2 || spec.cols < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid must be at least 2x2, got {}x{}",
            spec.rows, spec.cols
        )));
    }
    if !(spec.spacing_m > 0.0) || !(spec.population_scale >= 0.0) || !(spec.capacity > 0.0) {
        return Err(Error::InvalidArgument(
            "spacing, capacity must be positive and population scale non-negative".into(),
        ));
    }
    if !(spec.existing_extent > 0.0 && spec.existing_extent <= 1.0) {
        return Err(Error::InvalidArgument("existing_extent must lie in (0, 1]".into()));
    }
    let n_nodes = spec.rows * spec.cols;
    let n_sites = spec.n_existing + spec.n_candidate;
    if n_sites > n_nodes {
        return Err(Error::InvalidArgument(format!(
            "{n_sites} sites requested but the grid only has {n_nodes} nodes"
        )));
    }
    if n_sites == 0 {
        return Err(Error::InvalidArgument("at least one site is required".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let deg_per_m_lon = 1.0 / (METERS_PER_DEG_LAT * ORIGIN_LAT.to_radians().cos());
    let deg_per_m_lat = 1.0 / METERS_PER_DEG_LAT;
    let jitter = 0.15 * spec.spacing_m;

    let grid = |r: usize, c: usize| r * spec.cols + c;
    let mut nodes = Vec::with_capacity(n_nodes);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let x = c as f64 * spec.spacing_m + rng.random_range(-jitter..=jitter);
            let y = r as f64 * spec.spacing_m + rng.random_range(-jitter..=jitter);
            let coord = Coordinate::new(
                round_to(ORIGIN_LON + x * deg_per_m_lon, 1e7),
                round_to(ORIGIN_LAT + y * deg_per_m_lat, 1e7),
            )?;
            nodes.push(Node {
                id: pad('n', grid(r, c), n_nodes),
                coord,
            });
        }
    }

    let mut edges = Vec::new();
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let here = grid(r, c);
            let neighbours = [
                (c + 1 < spec.cols).then(|| grid(r, c + 1)),
                (r + 1 < spec.rows).then(|| grid(r + 1, c)),
            ];
            for there in neighbours.into_iter().flatten() {
                let straight = nodes[here].coord.haversine_m(&nodes[there].coord);
                let detour = rng.random_range(1.0..1.15);
                edges.push(Edge {
                    from: nodes[here].id.clone(),
                    to: nodes[there].id.clone(),
                    length_m: round_to(straight * detour, 10.0).max(0.1),
                    bidirectional: true,
                });
            }
        }
    }

    // Population hotspot in grid units.
    let hot_r = rng.random_range(0.0..spec.rows as f64);
    let hot_c = rng.random_range(0.0..spec.cols as f64);
    let spread = 0.3 * spec.rows.max(spec.cols) as f64;
    let mut demands = Vec::with_capacity(n_nodes);
    for r in 0..spec.rows {
        for c in 0..spec.cols {
            let i = grid(r, c);
            let d2 = (r as f64 - hot_r).powi(2) + (c as f64 - hot_c).powi(2);
            let density = 0.5 + 1.0 * (-d2 / (2.0 * spread * spread)).exp();
            let general = (spec.population_scale * density * rng.random_range(0.6..1.4)).round();
            let elderly = (general * rng.random_range(0.10..0.25)).round();
            demands.push(DemandPoint {
                id: pad('d', i, n_nodes),
                location: nodes[i].coord,
                population: BTreeMap::from([
                    ("elderly".to_string(), elderly as u64),
                    ("general".to_string(), general as u64),
                ]),
            });
        }
    }

    // Existing sites come from the nodes nearest a random centre.
    let centre_r = rng.random_range(0.0..spec.rows as f64);
    let centre_c = rng.random_range(0.0..spec.cols as f64);
    let mut by_distance: Vec<usize> = (0..n_nodes).collect();
    by_distance.sort_by(|&a, &b| {
        let da = (a / spec.cols) as f64 - centre_r;
        let da = da * da + ((a % spec.cols) as f64 - centre_c).powi(2);
        let db = (b / spec.cols) as f64 - centre_r;
        let db = db * db + ((b % spec.cols) as f64 - centre_c).powi(2);
        da.total_cmp(&db).then(a.cmp(&b))
    });
    let window = ((n_nodes as f64 * spec.existing_extent).ceil() as usize).clamp(spec.n_existing, n_nodes);
    let mut existing: Vec<usize> = sample(&mut rng, window, spec.n_existing)
        .into_iter()
        .map(|k| by_distance[k])
        .collect();
    existing.sort_unstable();

    // Candidates by best-candidate sampling: of a few random free nodes,
    // keep the one farthest from every site placed so far.
    let grid_dist2 = |a: usize, b: usize| {
        let dr = (a / spec.cols) as f64 - (b / spec.cols) as f64;
        let dc = (a % spec.cols) as f64 - (b % spec.cols) as f64;
        dr * dr + dc * dc
    };
    let mut taken = vec![false; n_nodes];
    let mut placed = existing.clone();
    for &i in &existing {
        taken[i] = true;
    }
    let mut candidates = Vec::with_capacity(spec.n_candidate);
    for _ in 0..spec.n_candidate {
        let free: Vec<usize> = (0..n_nodes).filter(|&i| !taken[i]).collect();
        let mut best = (f64::NEG_INFINITY, usize::MAX);
        for _ in 0..CANDIDATE_TRIES {
            let node = free[rng.random_range(0..free.len())];
            let nearest = placed
                .iter()
                .map(|&p| grid_dist2(node, p))
                .fold(f64::INFINITY, f64::min);
            if nearest > best.0 || (nearest == best.0 && node < best.1) {
                best = (nearest, node);
            }
        }
        taken[best.1] = true;
        placed.push(best.1);
        candidates.push(best.1);
    }
    candidates.sort_unstable();

    let sites = existing
        .iter()
        .map(|&i| (i, SiteStatus::Existing))
        .chain(candidates.iter().map(|&i| (i, SiteStatus::Candidate)))
        .enumerate()
        .map(|(k, (node, status))| FacilitySite {
            id: pad('s', k, n_sites),
            location: nodes[node].coord,
            status,
            capacity: spec.capacity,
        })
        .collect();

    let network = RoadNetwork::new(nodes, edges)?;
    Scenario::new(network, demands, sites, PopulationGroup::defaults())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_scenario() {
        let spec = SynthSpec::default();
        let a = generate_synthetic_scenario(7, &spec).unwrap();
        let b = generate_synthetic_scenario(7, &spec).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_scenario(8, &spec).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn site_counts() {
        let spec = SynthSpec {
            n_existing: 16,
            n_candidate: 30,
            ..SynthSpec::default()
        };
        let s = generate_synthetic_scenario(7, &spec).unwrap();
        assert_eq!(s.sites().len(), 46);
        assert_eq!(
            s.sites().iter().filter(|x| x.status == SiteStatus::Existing).count(),
            16
        );
        assert_eq!(s.demands().len(), 400);
        let mut ids: Vec<_> = s.sites().iter().map(|x| x.location).collect();
        ids.dedup();
        assert_eq!(ids.len(), 46);
    }

    #[test]
    fn zero_candidates_allowed() {
        let spec = SynthSpec {
            n_candidate: 0,
            ..SynthSpec::default()
        };
        let s = generate_synthetic_scenario(1, &spec).unwrap();
        assert!(s.sites().iter().all(|x| x.status == SiteStatus::Existing));
    }

    #[test]
    fn rejects_bad_specs() {
        let tiny = SynthSpec {
            rows: 1,
            cols: 1,
            ..SynthSpec::default()
        };
        assert!(generate_synthetic_scenario(1, &tiny).is_err());
        let crowded = SynthSpec {
            rows: 2,
            cols: 2,
            n_existing: 3,
            n_candidate: 2,
            ..SynthSpec::default()
        };
        assert!(generate_synthetic_scenario(1, &crowded).is_err());
    }

    #[test]
    fn ids_sort_in_creation_order() {
        let s = generate_synthetic_scenario(3, &SynthSpec::default()).unwrap();
        let ids: Vec<_> = s.sites().iter().map(|x| x.id.clone()).collect();
        let mut sorted = ids.clone();
        sorted.sort();
        assert_eq!(ids, sorted);
    }
}
