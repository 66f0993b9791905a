#![allow(dead_code)]

use catchment::geodata::{
    generate_synthetic_scenario, Coordinate, DemandPoint, Edge, FacilitySite, Node, PopulationGroup, RoadNetwork,
    Scenario, SiteStatus, SynthSpec,
};
use catchment::routing::TravelTimeMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random demand x site instance for `group`: roughly a third of the
/// pairs are out of reach, the rest fall anywhere in `[0, 1.2 t_sigma)`.
pub struct MatrixInstance {
    pub matrix: TravelTimeMatrix,
    pub population: Vec<f64>,
    pub capacity: Vec<f64>,
}

pub fn random_matrix_instance(r: &mut ChaCha8Rng, max_demands: usize, max_sites: usize) -> MatrixInstance {
    let group = PopulationGroup::elderly();
    let nd = r.random_range(1..=max_demands);
    let ns = r.random_range(1..=max_sites);
    let ts = group.t_sigma_min();
    let minutes = (0..nd * ns)
        .map(|_| {
            if r.random_bool(0.3) {
                f64::INFINITY
            } else {
                r.random_range(0.0..1.2 * ts)
            }
        })
        .collect();
    let population = (0..nd)
        .map(|_| {
            if r.random_bool(0.1) {
                0.0
            } else {
                r.random_range(1..5000) as f64
            }
        })
        .collect();
    let capacity = (0..ns).map(|_| r.random_range(100..3000) as f64).collect();
    let matrix = TravelTimeMatrix::from_minutes(
        group,
        (0..nd).map(|i| format!("d{i}")).collect(),
        (0..ns).map(|j| format!("s{j}")).collect(),
        minutes,
    )
    .unwrap();
    MatrixInstance {
        matrix,
        population,
        capacity,
    }
}

/// Direct evaluation of the 2SFCA sums, term by term, with the kernel
/// written out independently of the library.
pub fn brute_force_scores(inst: &MatrixInstance, open: &[bool], gamma: f64) -> Vec<f64> {
    let m = &inst.matrix;
    let ts = m.group().t_sigma_min();
    let g = |t: f64| {
        if t < ts {
            ((-0.5 * (t / ts).powi(2)).exp() - (-0.5f64).exp()) / (1.0 - (-0.5f64).exp())
        } else {
            0.0
        }
    };
    let ratio: Vec<f64> = (0..m.n_sites())
        .map(|j| {
            let denom: f64 = (0..m.n_demands()).map(|n| g(m.get(n, j)) * inst.population[n]).sum();
            if denom > 0.0 {
                inst.capacity[j] / denom
            } else {
                0.0
            }
        })
        .collect();
    (0..m.n_demands())
        .map(|i| {
            (0..m.n_sites())
                .filter(|&j| open[j])
                .map(|j| gamma * g(m.get(i, j)) * ratio[j])
                .sum()
        })
        .collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-300)
}

/// Random connected-ish graph with integer edge lengths; some edges one-way.
pub fn random_network(r: &mut ChaCha8Rng, max_nodes: usize) -> RoadNetwork {
    let n = r.random_range(1..=max_nodes);
    let nodes: Vec<Node> = (0..n)
        .map(|i| Node {
            id: format!("n{i:02}"),
            coord: Coordinate::new(118.76 + 0.001 * i as f64, 32.05).unwrap(),
        })
        .collect();
    let mut seen = std::collections::HashSet::new();
    let mut edges = Vec::new();
    let n_edges = if n > 1 { r.random_range(0..=3 * n) } else { 0 };
    for _ in 0..n_edges {
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        if a == b {
            continue;
        }
        let bidirectional = r.random_bool(0.7);
        if seen.contains(&(a, b)) || (bidirectional && seen.contains(&(b, a))) {
            continue;
        }
        seen.insert((a, b));
        if bidirectional {
            seen.insert((b, a));
        }
        edges.push(Edge {
            from: nodes[a].id.clone(),
            to: nodes[b].id.clone(),
            length_m: r.random_range(1..500) as f64,
            bidirectional,
        });
    }
    RoadNetwork::new(nodes, edges).unwrap()
}

/// All-pairs shortest paths by Floyd–Warshall.
pub fn floyd_warshall(net: &RoadNetwork) -> Vec<Vec<f64>> {
    let n = net.nodes().len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in net.edges() {
        let a = net.node_index(&e.from).unwrap();
        let b = net.node_index(&e.to).unwrap();
        d[a][b] = d[a][b].min(e.length_m);
        if e.bidirectional {
            d[b][a] = d[b][a].min(e.length_m);
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// The small optimizer instances: an 8x8 grid, 2 existing sites and 12
/// candidates anywhere on it.
pub fn small_optimizer_spec() -> SynthSpec {
    SynthSpec {
        rows: 8,
        cols: 8,
        spacing_m: 100.0,
        n_existing: 2,
        n_candidate: 12,
        population_scale: 300.0,
        existing_extent: 1.0,
        capacity: 1500.0,
    }
}

pub fn small_optimizer_instance(seed: u64) -> Scenario {
    generate_synthetic_scenario(seed, &small_optimizer_spec()).unwrap()
}

/// A path network n0-n1-n2... with the given segment lengths, one demand point
/// and one site per node.
pub fn line_scenario(lengths: &[f64], pops: &[u64], sites: &[(SiteStatus, f64)]) -> Scenario {
    let n = lengths.len() + 1;
    let coord = |i: usize| Coordinate::new(118.76 + 0.001 * i as f64, 32.05).unwrap();
    let nodes = (0..n)
        .map(|i| Node {
            id: format!("n{i}"),
            coord: coord(i),
        })
        .collect();
    let edges = lengths
        .iter()
        .enumerate()
        .map(|(i, &l)| Edge {
            from: format!("n{i}"),
            to: format!("n{}", i + 1),
            length_m: l,
            bidirectional: true,
        })
        .collect();
    let demands = pops
        .iter()
        .enumerate()
        .map(|(i, &p)| DemandPoint {
            id: format!("d{i}"),
            location: coord(i),
            population: BTreeMap::from([("general".to_string(), p), ("elderly".to_string(), p / 5)]),
        })
        .collect();
    let sites = sites
        .iter()
        .enumerate()
        .map(|(i, &(status, capacity))| FacilitySite {
            id: format!("s{i}"),
            location: coord(i),
            status,
            capacity,
        })
        .collect();
    Scenario::new(
        RoadNetwork::new(nodes, edges).unwrap(),
        demands,
        sites,
        PopulationGroup::defaults(),
    )
    .unwrap()
}
