mod common;

use std::collections::BTreeSet;

use catchment::accessibility::{accessibility_scores, BinSpec};
use catchment::geodata::{Scenario, SiteStatus};
use catchment::optimizer::{
    exhaustive_oracle, greedy_construct, is_feasible, local_search, objective_from_scores, objective_value, optimize,
    Layout, ObjectiveParams,
};
use catchment::routing::{build_all_matrices, RoutingOptions, TravelTimeMatrix};
use catchment::Error;
use common::{line_scenario, small_optimizer_instance};
use proptest::prelude::*;
use SiteStatus::{Candidate, Existing};

fn matrices(s: &Scenario) -> Vec<TravelTimeMatrix> {
    build_all_matrices(s, &RoutingOptions::default()).unwrap()
}

fn bins() -> BinSpec {
    BinSpec::default_for_target(0.135).unwrap()
}

fn candidate_ids(s: &Scenario) -> Vec<String> {
    s.sites()
        .iter()
        .filter(|x| x.status == Candidate)
        .map(|x| x.id.clone())
        .collect()
}

/// Objective and feasibility of a layout computed from accessibility fields
/// directly, without the planner.
fn evaluate_directly(
    s: &Scenario,
    m: &[TravelTimeMatrix],
    p: &ObjectiveParams,
    open_candidates: &[String],
) -> (f64, bool) {
    let mut open: BTreeSet<String> = s
        .sites()
        .iter()
        .filter(|x| x.status == Existing)
        .map(|x| x.id.clone())
        .collect();
    open.extend(open_candidates.iter().cloned());
    let mut objective = p.alpha * open_candidates.len() as f64;
    let mut feasible = true;
    for matrix in m {
        let group = matrix.group().name();
        let field = accessibility_scores(s, matrix, &open, p.gamma).unwrap();
        if group == p.primary_group {
            objective += p.beta * field.scores.iter().map(|a| (a - p.a_sigma).powi(2)).sum::<f64>();
        }
        if p.constraint_groups.iter().any(|g| g == group) {
            for (d, a) in s.demands().iter().zip(&field.scores) {
                if d.population_of(group) > 0 && *a < p.a_sigma - 1e-9 {
                    feasible = false;
                }
            }
        }
    }
    (objective, feasible)
}

/// Best feasible objective over every candidate subset, if any is feasible.
fn brute_force_optimum(s: &Scenario, m: &[TravelTimeMatrix], p: &ObjectiveParams) -> Option<f64> {
    let ids = candidate_ids(s);
    let mut best: Option<f64> = None;
    for bits in 0u32..(1 << ids.len()) {
        let chosen: Vec<String> = (0..ids.len())
            .filter(|b| bits >> b & 1 == 1)
            .map(|b| ids[b].clone())
            .collect();
        let (obj, ok) = evaluate_directly(s, m, p, &chosen);
        if ok && best.is_none_or(|b| obj < b) {
            best = Some(obj);
        }
    }
    best
}

fn shrink(spec_seed: u64, n_candidate: usize) -> Scenario {
    let spec = catchment::geodata::SynthSpec {
        n_candidate,
        ..common::small_optimizer_spec()
    };
    catchment::geodata::generate_synthetic_scenario(spec_seed, &spec).unwrap()
}

#[test]
fn objective_spot_values() {
    let p = ObjectiveParams::default();
    let v = objective_from_scores(2, &[0.135, 0.235], &p);
    assert!((v - 2.01).abs() < 1e-12);
    assert_eq!(objective_from_scores(15, &[0.135; 40], &p), 15.0);
    let beta = ObjectiveParams { beta: 3.0, ..p.clone() };
    let a = [0.0, 0.2, 0.135];
    let expect = 3.0 * (0.135f64.powi(2) + (0.2f64 - 0.135).powi(2));
    assert!((objective_from_scores(0, &a, &beta) - expect).abs() < 1e-15);
}

#[test]
fn no_open_sites_is_infeasible_everywhere() {
    let s = line_scenario(&[100.0, 100.0], &[100, 200, 300], &[(Candidate, 1500.0)]);
    let m = matrices(&s);
    let (ok, short) = is_feasible(&Layout::default(), &s, &m, &ObjectiveParams::default()).unwrap();
    assert!(!ok);
    assert_eq!(short.len(), 3);
    let zero = ObjectiveParams {
        a_sigma: 0.0,
        ..ObjectiveParams::default()
    };
    assert!(is_feasible(&Layout::default(), &s, &m, &zero).unwrap().0);
}

#[test]
fn feasibility_tolerance() {
    let near = line_scenario(&[], &[1000], &[(Existing, 134.999_999_9)]);
    let (ok, _) = is_feasible(&Layout::default(), &near, &matrices(&near), &ObjectiveParams::default()).unwrap();
    assert!(ok);
    let under = line_scenario(&[], &[1000], &[(Existing, 134.999_99)]);
    let (ok, short) = is_feasible(
        &Layout::default(),
        &under,
        &matrices(&under),
        &ObjectiveParams::default(),
    )
    .unwrap();
    assert!(!ok);
    assert_eq!(short[0].demand_id, "d0");
}

#[test]
fn unknown_or_existing_site_in_layout_rejected() {
    let s = line_scenario(&[100.0], &[1000, 1000], &[(Existing, 1500.0), (Candidate, 1500.0)]);
    let m = matrices(&s);
    let p = ObjectiveParams::default();
    assert!(objective_value(&Layout::new(["nope"]), &s, &m, &p).is_err());
    assert!(objective_value(&Layout::new(["s0"]), &s, &m, &p).is_err());
}

#[test]
fn greedy_small_cases() {
    let p = ObjectiveParams::default();
    let done = line_scenario(&[100.0], &[1000, 10], &[(Existing, 1500.0), (Candidate, 1500.0)]);
    assert_eq!(
        greedy_construct(&done, &matrices(&done), &p).unwrap(),
        Layout::default()
    );

    let needs_one = line_scenario(&[], &[1000], &[(Candidate, 1500.0)]);
    assert_eq!(
        greedy_construct(&needs_one, &matrices(&needs_one), &p).unwrap(),
        Layout::new(["s0"])
    );
}

#[test]
fn greedy_seed7_golden() {
    let s = catchment::geodata::generate_synthetic_scenario(7, &Default::default()).unwrap();
    let m = matrices(&s);
    let p = ObjectiveParams::default();
    let layout = greedy_construct(&s, &m, &p).unwrap();
    let text = catchment::export::to_json_string(&layout).unwrap();
    let golden = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/data/greedy_seed7.json")).unwrap();
    assert_eq!(text, golden);
    assert!(is_feasible(&layout, &s, &m, &p).unwrap().0);
}

#[test]
fn local_search_drops_redundant_site() {
    let s = line_scenario(&[100.0], &[1000, 10], &[(Existing, 1500.0), (Candidate, 1500.0)]);
    let m = matrices(&s);
    let p = ObjectiveParams::default();
    let out = local_search(&Layout::new(["s1"]), &s, &m, &p, 100).unwrap();
    assert_eq!(out.layout, Layout::default());
    let again = local_search(&out.layout, &s, &m, &p, 100).unwrap();
    assert_eq!(again.layout, out.layout);
    assert!(again.trace.is_empty());
}

#[test]
fn local_search_leaves_infeasible_start() {
    let s = line_scenario(&[], &[1000], &[(Candidate, 1500.0)]);
    let out = local_search(&Layout::default(), &s, &matrices(&s), &ObjectiveParams::default(), 100).unwrap();
    assert_eq!(out.layout, Layout::default());
    assert!(out.diagnostic.is_some());
}

#[test]
fn optimize_edge_cases() {
    let p = ObjectiveParams::default();
    let done = line_scenario(&[100.0], &[1000, 10], &[(Existing, 1500.0), (Candidate, 1500.0)]);
    let r = optimize(&done, &matrices(&done), &p, 100, &bins()).unwrap();
    assert_eq!(r.k, 0);
    assert!(r.feasible);

    let hopeless = line_scenario(&[], &[1_000_000], &[(Candidate, 1500.0)]);
    let r = optimize(&hopeless, &matrices(&hopeless), &p, 100, &bins()).unwrap();
    assert!(!r.feasible);
    assert!(!r.shortfalls.is_empty());
}

#[test]
fn oracle_small_cases() {
    let p = ObjectiveParams::default();
    let none = line_scenario(&[100.0], &[1000, 10], &[(Existing, 1500.0)]);
    let r = exhaustive_oracle(&none, &matrices(&none), &p, 15, &bins()).unwrap();
    assert_eq!(r.k, 0);
    assert_eq!(r.method, "oracle");

    let needs_one = line_scenario(&[], &[1000], &[(Candidate, 1500.0)]);
    let r = exhaustive_oracle(&needs_one, &matrices(&needs_one), &p, 15, &bins()).unwrap();
    assert_eq!(r.layout, Layout::new(["s0"]));
}

#[test]
fn oracle_pool_limit() {
    let s = shrink(3, 20);
    let err = exhaustive_oracle(&s, &matrices(&s), &ObjectiveParams::default(), 15, &bins()).unwrap_err();
    assert!(matches!(err, Error::PoolTooLarge { pool: 20, max_pool: 15 }));
}

#[test]
fn ten_candidate_oracle_matches_enumeration() {
    for seed in 0..5 {
        let s = shrink(seed, 10);
        let m = matrices(&s);
        let p = ObjectiveParams::default();
        let r = exhaustive_oracle(&s, &m, &p, 15, &bins()).unwrap();
        match brute_force_optimum(&s, &m, &p) {
            Some(best) => {
                assert!(r.feasible);
                assert!(
                    common::close(r.objective, best, 1e-9),
                    "seed {seed}: {} vs {best}",
                    r.objective
                );
            }
            None => assert!(!r.feasible),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn heuristic_never_beats_oracle(seed in 0u64..10_000, n in 0usize..=10) {
        let s = shrink(seed, n);
        let m = matrices(&s);
        let p = ObjectiveParams::default();
        let oracle = exhaustive_oracle(&s, &m, &p, 15, &bins()).unwrap();
        let heuristic = optimize(&s, &m, &p, 1000, &bins()).unwrap();
        if oracle.feasible {
            prop_assert!(heuristic.feasible);
            prop_assert!(heuristic.objective >= oracle.objective - 1e-12 * oracle.objective.abs());
        }
    }

    #[test]
    fn reported_feasibility_is_honest(seed in 0u64..10_000) {
        let s = small_optimizer_instance(seed);
        let m = matrices(&s);
        let p = ObjectiveParams::default();
        let r = optimize(&s, &m, &p, 1000, &bins()).unwrap();
        let (ok, short) = is_feasible(&r.layout, &s, &m, &p).unwrap();
        prop_assert_eq!(ok, r.feasible);
        prop_assert_eq!(short, r.shortfalls);
        let a = objective_value(&r.layout, &s, &m, &p).unwrap();
        let b = objective_value(&r.layout, &s, &m, &p).unwrap();
        prop_assert_eq!(a.to_bits(), b.to_bits());
        prop_assert_eq!(a.to_bits(), r.objective.to_bits());
    }

    #[test]
    fn local_search_never_worsens(seed in 0u64..10_000, bits in any::<u16>()) {
        let s = small_optimizer_instance(seed);
        let m = matrices(&s);
        let p = ObjectiveParams::default();
        let ids = candidate_ids(&s);
        let start = Layout::new((0..ids.len()).filter(|b| bits >> b & 1 == 1).map(|b| ids[b].clone()));
        let (ok, _) = is_feasible(&start, &s, &m, &p).unwrap();
        let out = local_search(&start, &s, &m, &p, 1000).unwrap();
        if ok {
            let before = objective_value(&start, &s, &m, &p).unwrap();
            let after = objective_value(&out.layout, &s, &m, &p).unwrap();
            prop_assert!(after <= before);
            prop_assert!(is_feasible(&out.layout, &s, &m, &p).unwrap().0);
        } else {
            prop_assert_eq!(out.layout, start);
        }
    }

    #[test]
    fn oracle_optimum_is_minimal(seed in 0u64..10_000) {
        let s = shrink(seed, 8);
        let m = matrices(&s);
        let p = ObjectiveParams { beta: 0.0, ..ObjectiveParams::default() };
        let r = exhaustive_oracle(&s, &m, &p, 15, &bins()).unwrap();
        prop_assume!(r.feasible);
        for id in &r.layout.open_candidates {
            let mut fewer = r.layout.clone();
            fewer.open_candidates.remove(id);
            let (ok, _) = is_feasible(&fewer, &s, &m, &p).unwrap();
            let obj = objective_value(&fewer, &s, &m, &p).unwrap();
            prop_assert!(!ok || obj >= r.objective);
        }
    }

    #[test]
    fn lower_target_never_needs_more_sites(seed in 0u64..10_000) {
        let s = shrink(seed, 8);
        let m = matrices(&s);
        let mut last_k = usize::MAX;
        for a_sigma in [0.2, 0.135, 0.1, 0.05, 0.0] {
            let p = ObjectiveParams { beta: 0.0, a_sigma, ..ObjectiveParams::default() };
            let r = exhaustive_oracle(&s, &m, &p, 15, &BinSpec::default_for_target(0.135).unwrap()).unwrap();
            if r.feasible {
                prop_assert!(r.k <= last_k);
                last_k = r.k;
            }
        }
    }
}
