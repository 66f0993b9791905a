//! Facility placement: choose which candidate sites to open so every
//! constrained demand point reaches the target accessibility, minimising
//! `alpha * k + beta * sum_i (A_i - A_target)^2`, where `k` counts newly
//! opened candidates and `A_i` comes from the primary group.
//!
//! The heuristic is a greedy shortfall-reduction construction followed by a
//! best-improvement drop/swap local search. [`Planner::exhaustive_oracle`]
//! enumerates every candidate subset and serves as ground truth on small
//! pools.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accessibility::{coverage_report, AccessModel, AccessibilityField, BinSpec, CoverageReport};
use crate::error::{Error, Result};
use crate::geodata::{Scenario, SiteStatus};
use crate::routing::TravelTimeMatrix;

/// Slack allowed when checking `A_i >= A_target`.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;
/// Minimum objective decrease for a local-search move.
pub const IMPROVEMENT_EPSILON: f64 = 1e-12;
pub const DEFAULT_MAX_POOL: usize = 15;
pub const DEFAULT_BUDGET: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    pub alpha: f64,
    pub beta: f64,
    pub a_sigma: f64,
    pub gamma: f64,
    /// Group whose scores enter the deviation term.
    pub primary_group: String,
    /// Groups that must meet the target everywhere.
    pub constraint_groups: Vec<String>,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        ObjectiveParams {
            alpha: 1.0,
            beta: 1.0,
            a_sigma: 0.135,
            gamma: 1.0,
            primary_group: "general".into(),
            constraint_groups: vec!["general".into()],
        }
    }
}

impl ObjectiveParams {
    pub fn validate(&self) -> Result<()> {
        let finite_non_negative = |x: f64| x >= 0.0 && x.is_finite();
        if !finite_non_negative(self.alpha) || !finite_non_negative(self.beta) || !finite_non_negative(self.a_sigma) {
            return Err(Error::InvalidArgument(
                "alpha, beta and a_sigma must be non-negative".into(),
            ));
        }
        if !finite_non_negative(self.gamma) {
            return Err(Error::InvalidArgument("gamma must be non-negative".into()));
        }
        Ok(())
    }
}

/// Candidate sites chosen to open; existing sites are always open.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Layout {
    pub open_candidates: BTreeSet<String>,
}

impl Layout {
    pub fn new<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Layout {
            open_candidates: ids.into_iter().map(Into::into).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.open_candidates.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Shortfall {
    pub demand_id: String,
    pub group: String,
    pub accessibility: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "lowercase")]
pub enum Move {
    Open {
        site: String,
    },
    Drop {
        site: String,
    },
    Swap {
        close: String,
        open: String,
    },
    /// Replace two open candidates by one closed candidate.
    Merge {
        close: [String; 2],
        open: String,
    },
}

/// Objective and constraint status of one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub objective: f64,
    pub feasible: bool,
    /// `sum max(0, A_target - A_i)^2` over constrained, populated demand.
    pub shortfall: f64,
    pub shortfalls: Vec<Shortfall>,
}

#[derive(Debug, Clone, Copy)]
struct Score {
    objective: f64,
    shortfall: f64,
    feasible: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome {
    pub layout: Layout,
    pub trace: Vec<Move>,
    pub iterations: usize,
    /// Set when the start layout was infeasible and returned unchanged.
    pub diagnostic: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub method: String,
    pub layout: Layout,
    pub k: usize,
    pub total_open_sites: usize,
    pub objective: f64,
    pub feasible: bool,
    pub shortfalls: Vec<Shortfall>,
    pub baseline_coverage: BTreeMap<String, CoverageReport>,
    pub coverage: BTreeMap<String, CoverageReport>,
    pub trace: Vec<Move>,
    #[serde(skip)]
    pub baseline_fields: BTreeMap<String, AccessibilityField>,
    #[serde(skip)]
    pub fields: BTreeMap<String, AccessibilityField>,
}

/// Precomputed catchments and candidate ordering for repeated layout
/// evaluation.
pub struct Planner<'a> {
    scenario: &'a Scenario,
    params: ObjectiveParams,
    models: Vec<AccessModel>,
    primary: usize,
    constrained: Vec<usize>,
    existing: Vec<bool>,
    /// Candidate site indices sorted by site id.
    candidates: Vec<usize>,
    /// Groups that take part in the objective or constraint, indexed like
    /// `models`.
    active: Vec<bool>,
}

/// Sparse per-demand accumulator reused across move evaluations.
struct Scratch {
    delta: Vec<f64>,
    stamp: Vec<u32>,
    epoch: u32,
    touched: Vec<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            delta: vec![0.0; n],
            stamp: vec![0; n],
            epoch: 0,
            touched: Vec::new(),
        }
    }

    fn begin(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.fill(0);
            self.epoch = 1;
        }
        self.touched.clear();
    }

    fn add(&mut self, i: usize, value: f64) {
        if self.stamp[i] != self.epoch {
            self.stamp[i] = self.epoch;
            self.delta[i] = 0.0;
            self.touched.push(i);
        }
        self.delta[i] += value;
    }
}

/// Scores of the current local-search layout, used to price moves by
/// recomputing only the demand points they touch.
struct SearchState {
    open: Vec<bool>,
    k: usize,
    scores: Vec<Vec<f64>>,
    deviation: f64,
    violations: usize,
}

impl<'a> Planner<'a> {
    /// `matrices` must include the primary and every constraint group;
    /// other groups are carried along for reporting.
    pub fn new(scenario: &'a Scenario, matrices: &[TravelTimeMatrix], params: ObjectiveParams) -> Result<Self> {
        params.validate()?;
        let models = matrices
            .iter()
            .map(|m| AccessModel::for_scenario(scenario, m))
            .collect::<Result<Vec<_>>>()?;
        let find = |name: &str| {
            models
                .iter()
                .position(|m| m.group() == name)
                .ok_or_else(|| Error::InvalidArgument(format!("no travel-time matrix for group `{name}`")))
        };
        let primary = find(&params.primary_group)?;
        let constrained = params
            .constraint_groups
            .iter()
            .map(|g| find(g))
            .collect::<Result<Vec<_>>>()?;

        let existing = scenario
            .sites()
            .iter()
            .map(|s| s.status == SiteStatus::Existing)
            .collect();
        let mut candidates: Vec<usize> = scenario
            .sites()
            .iter()
            .enumerate()
            .filter(|(_, s)| s.status == SiteStatus::Candidate)
            .map(|(j, _)| j)
            .collect();
        candidates.sort_by(|&a, &b| scenario.sites()[a].id.cmp(&scenario.sites()[b].id));

        let active = (0..models.len())
            .map(|g| g == primary || constrained.contains(&g))
            .collect();

        Ok(Planner {
            scenario,
            params,
            models,
            primary,
            constrained,
            existing,
            candidates,
            active,
        })
    }

    pub fn params(&self) -> &ObjectiveParams {
        &self.params
    }

    pub fn candidate_count(&self) -> usize {
        self.candidates.len()
    }

    fn site_id(&self, candidate: usize) -> &str {
        &self.scenario.sites()[self.candidates[candidate]].id
    }

    fn mask_of(&self, layout: &Layout) -> Result<Vec<bool>> {
        let mut mask = vec![false; self.candidates.len()];
        for id in &layout.open_candidates {
            let j = self
                .scenario
                .site_index(id)
                .ok_or_else(|| Error::UnknownSite(id.clone()))?;
            let c = self
                .candidates
                .iter()
                .position(|&x| x == j)
                .ok_or_else(|| Error::InvalidArgument(format!("site `{id}` is not a candidate")))?;
            mask[c] = true;
        }
        Ok(mask)
    }

    fn layout_of(&self, mask: &[bool]) -> Layout {
        Layout::new(
            mask.iter()
                .enumerate()
                .filter(|(_, o)| **o)
                .map(|(c, _)| self.site_id(c)),
        )
    }

    fn open_sites(&self, mask: &[bool]) -> Vec<bool> {
        let mut open = self.existing.clone();
        for (c, _) in mask.iter().enumerate().filter(|(_, o)| **o) {
            open[self.candidates[c]] = true;
        }
        open
    }

    fn group_scores(&self, open: &[bool]) -> Vec<Vec<f64>> {
        self.models.iter().map(|m| m.scores(open, self.params.gamma)).collect()
    }

    fn score(&self, mask: &[bool]) -> Score {
        let open = self.open_sites(mask);
        let k = mask.iter().filter(|o| **o).count();
        let target = self.params.a_sigma;
        let primary = self.models[self.primary].scores(&open, self.params.gamma);
        let objective = objective_from_scores(k, &primary, &self.params);

        let mut shortfall = 0.0;
        let mut feasible = true;
        for &g in &self.constrained {
            let model = &self.models[g];
            let owned;
            let scores = if g == self.primary {
                &primary
            } else {
                owned = model.scores(&open, self.params.gamma);
                &owned
            };
            for (a, p) in scores.iter().zip(model.population()) {
                if *p > 0.0 {
                    let gap = (target - a).max(0.0);
                    shortfall += gap * gap;
                    if *a < target - FEASIBILITY_TOLERANCE {
                        feasible = false;
                    }
                }
            }
        }
        Score {
            objective,
            shortfall,
            feasible,
        }
    }

    fn evaluate_mask(&self, mask: &[bool]) -> Evaluation {
        let score = self.score(mask);
        let open = self.open_sites(mask);
        let target = self.params.a_sigma;
        let mut shortfalls = Vec::new();
        for &g in &self.constrained {
            let model = &self.models[g];
            let scores = model.scores(&open, self.params.gamma);
            for (i, (a, p)) in scores.iter().zip(model.population()).enumerate() {
                if *p > 0.0 && *a < target - FEASIBILITY_TOLERANCE {
                    shortfalls.push(Shortfall {
                        demand_id: self.scenario.demands()[i].id.clone(),
                        group: model.group().to_string(),
                        accessibility: *a,
                    });
                }
            }
        }
        Evaluation {
            objective: score.objective,
            feasible: score.feasible,
            shortfall: score.shortfall,
            shortfalls,
        }
    }

    pub fn evaluate(&self, layout: &Layout) -> Result<Evaluation> {
        Ok(self.evaluate_mask(&self.mask_of(layout)?))
    }

    pub fn objective_value(&self, layout: &Layout) -> Result<f64> {
        Ok(self.score(&self.mask_of(layout)?).objective)
    }

    /// Feasibility flag plus the demand points below target.
    pub fn is_feasible(&self, layout: &Layout) -> Result<(bool, Vec<Shortfall>)> {
        let e = self.evaluate(layout)?;
        Ok((e.feasible, e.shortfalls))
    }

    /// Opens candidates one at a time, each time taking the one with the
    /// smallest remaining shortfall (then objective, then site id), until the
    /// layout is feasible or every candidate is open.
    pub fn greedy_construct(&self) -> (Layout, Vec<Move>) {
        let mut mask = vec![false; self.candidates.len()];
        let mut trace = Vec::new();
        let mut current = self.score(&mask);
        while !current.feasible {
            let best = (0..self.candidates.len())
                .into_par_iter()
                .filter(|&c| !mask[c])
                .map(|c| {
                    let mut trial = mask.clone();
                    trial[c] = true;
                    (c, self.score(&trial))
                })
                .min_by(|a, b| {
                    a.1.shortfall
                        .total_cmp(&b.1.shortfall)
                        .then(a.1.objective.total_cmp(&b.1.objective))
                        .then(a.0.cmp(&b.0))
                });
            let Some((c, score)) = best else { break };
            mask[c] = true;
            current = score;
            trace.push(Move::Open {
                site: self.site_id(c).to_string(),
            });
        }
        (self.layout_of(&mask), trace)
    }

    /// Best-improvement drop/swap search. Only feasibility-preserving moves
    /// that lower the objective by more than [`IMPROVEMENT_EPSILON`] are
    /// taken; ties go to the first move in canonical order (drops, then
    /// swaps, by ascending site id).
    pub fn local_search(&self, start: &Layout, budget: usize) -> Result<LocalSearchOutcome> {
        let mut mask = self.mask_of(start)?;
        let mut current = self.score(&mask);
        if !current.feasible {
            let diagnostic = "start layout is infeasible; local search skipped".to_string();
            log::warn!("{diagnostic}");
            return Ok(LocalSearchOutcome {
                layout: start.clone(),
                trace: Vec::new(),
                iterations: 0,
                diagnostic: Some(diagnostic),
            });
        }

        let mut trace = Vec::new();
        let mut iterations = 0;
        while iterations < budget {
            let open: Vec<usize> = (0..mask.len()).filter(|&c| mask[c]).collect();
            let closed: Vec<usize> = (0..mask.len()).filter(|&c| !mask[c]).collect();
            let mut moves: Vec<(usize, Option<usize>, Option<usize>)> = open
                .iter()
                .map(|&o| (o, None, None))
                .chain(
                    open.iter()
                        .flat_map(|&o| closed.iter().map(move |&c| (o, None, Some(c)))),
                )
                .collect();
            let mut best = self.best_move(&mask, &moves, current.objective);
            if best.is_none() {
                moves = open
                    .iter()
                    .enumerate()
                    .flat_map(|(a, &o1)| open[a + 1..].iter().map(move |&o2| (o1, o2)))
                    .flat_map(|(o1, o2)| closed.iter().map(move |&c| (o1, Some(o2), Some(c))))
                    .collect();
                best = self.best_move(&mask, &moves, current.objective);
            }

            let Some((rank, _)) = best else { break };
            let (out, out2, inn) = moves[rank];
            let mut trial = mask.clone();
            trial[out] = false;
            if let Some(o2) = out2 {
                trial[o2] = false;
            }
            if let Some(c) = inn {
                trial[c] = true;
            }
            let exact = self.score(&trial);
            if !exact.feasible || exact.objective >= current.objective - IMPROVEMENT_EPSILON {
                log::debug!("priced move did not survive exact re-scoring; stopping");
                break;
            }
            trace.push(match (out2, inn) {
                (None, None) => Move::Drop {
                    site: self.site_id(out).to_string(),
                },
                (None, Some(c)) => Move::Swap {
                    close: self.site_id(out).to_string(),
                    open: self.site_id(c).to_string(),
                },
                (Some(o2), Some(c)) => Move::Merge {
                    close: [self.site_id(out).to_string(), self.site_id(o2).to_string()],
                    open: self.site_id(c).to_string(),
                },
                (Some(_), None) => unreachable!("double drops are not generated"),
            });
            mask = trial;
            current = exact;
            iterations += 1;
        }

        Ok(LocalSearchOutcome {
            layout: self.layout_of(&mask),
            trace,
            iterations,
            diagnostic: None,
        })
    }

    fn search_state(&self, mask: &[bool]) -> SearchState {
        let open = self.open_sites(mask);
        let scores = self.group_scores(&open);
        let target = self.params.a_sigma;
        let deviation: f64 = scores[self.primary].iter().map(|a| (a - target) * (a - target)).sum();
        let violations = self
            .constrained
            .iter()
            .map(|&g| {
                scores[g]
                    .iter()
                    .zip(self.models[g].population())
                    .filter(|(a, p)| **p > 0.0 && **a < target - FEASIBILITY_TOLERANCE)
                    .count()
            })
            .sum();
        let k = mask.iter().filter(|o| **o).count();
        SearchState {
            open,
            k,
            scores,
            deviation,
            violations,
        }
    }

    /// Objective after toggling `changed` candidate positions, or `None` if
    /// the result is infeasible. Scores are shifted by the toggled sites'
    /// contributions instead of being recomputed, so the value can differ
    /// from [`score`](Self::score) in the last bits; accepted moves are
    /// re-scored exactly.
    fn price_move(&self, state: &SearchState, changed: &[usize], scratch: &mut Scratch) -> Option<f64> {
        let target = self.params.a_sigma;
        let gamma = self.params.gamma;
        let mut k = state.k as isize;
        let mut deviation = state.deviation;
        let mut violations = state.violations as isize;
        for &c in changed {
            k += if state.open[self.candidates[c]] { -1 } else { 1 };
        }

        for (g, _) in self.active.iter().enumerate().filter(|(_, a)| **a) {
            let model = &self.models[g];
            scratch.begin();
            for &c in changed {
                let j = self.candidates[c];
                let r = model.ratio(j);
                if r.idle {
                    continue;
                }
                let sign = if state.open[j] { -1.0 } else { 1.0 };
                for &(i, w) in model.catchment(j) {
                    scratch.add(i, sign * (gamma * w * r.ratio));
                }
            }
            let constrained = self.constrained.contains(&g);
            for &i in &scratch.touched {
                let old = state.scores[g][i];
                let new = old + scratch.delta[i];
                if g == self.primary {
                    deviation += (new - target) * (new - target) - (old - target) * (old - target);
                }
                if constrained && model.population()[i] > 0.0 {
                    let was = old < target - FEASIBILITY_TOLERANCE;
                    let now = new < target - FEASIBILITY_TOLERANCE;
                    violations += now as isize - was as isize;
                }
            }
        }
        (violations == 0).then_some(self.params.alpha * k as f64 + self.params.beta * deviation)
    }

    fn best_move(
        &self,
        mask: &[bool],
        moves: &[(usize, Option<usize>, Option<usize>)],
        current: f64,
    ) -> Option<(usize, f64)> {
        let state = self.search_state(mask);
        let n = self.scenario.demands().len();
        moves
            .par_iter()
            .enumerate()
            .map_init(
                || Scratch::new(n),
                |scratch, (rank, &(out, out2, inn))| {
                    let changed: Vec<usize> = [Some(out), out2, inn].into_iter().flatten().collect();
                    let objective = self.price_move(&state, &changed, scratch)?;
                    (objective < current - IMPROVEMENT_EPSILON).then_some((rank, objective))
                },
            )
            .flatten()
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
    }

    /// Reverse greedy: starting from every candidate open, repeatedly closes
    /// the candidate whose removal keeps the layout feasible and gives the
    /// lowest objective, while that objective improves.
    pub fn drop_construct(&self) -> (Layout, Vec<Move>) {
        let mut mask = vec![true; self.candidates.len()];
        let mut trace = Vec::new();
        let mut current = self.score(&mask);
        if !current.feasible {
            return (self.layout_of(&mask), trace);
        }
        loop {
            let best = (0..mask.len())
                .into_par_iter()
                .filter(|&c| mask[c])
                .filter_map(|c| {
                    let mut trial = mask.clone();
                    trial[c] = false;
                    let s = self.score(&trial);
                    (s.feasible && s.objective < current.objective - IMPROVEMENT_EPSILON).then_some((c, s))
                })
                .min_by(|a, b| a.1.objective.total_cmp(&b.1.objective).then(a.0.cmp(&b.0)));
            let Some((c, score)) = best else { break };
            mask[c] = false;
            current = score;
            trace.push(Move::Drop {
                site: self.site_id(c).to_string(),
            });
        }
        (self.layout_of(&mask), trace)
    }

    /// Runs local search from both the greedy and the reverse-greedy layout
    /// and keeps the better outcome (feasible first, then objective, then
    /// fewer sites; the greedy start wins exact ties).
    pub fn optimize(&self, budget: usize, bins: &BinSpec) -> Result<OptimizationResult> {
        let mut best: Option<(Layout, Vec<Move>, Score)> = None;
        for (start, mut trace) in [self.greedy_construct(), self.drop_construct()] {
            let improved = self.local_search(&start, budget)?;
            trace.extend(improved.trace);
            let score = self.score(&self.mask_of(&improved.layout)?);
            let better = match &best {
                None => true,
                Some((layout, _, s)) => match (score.feasible, s.feasible) {
                    (true, false) => true,
                    (false, true) => false,
                    _ => score
                        .objective
                        .total_cmp(&s.objective)
                        .then(improved.layout.k().cmp(&layout.k()))
                        .is_lt(),
                },
            };
            if better {
                best = Some((improved.layout, trace, score));
            }
        }
        let (layout, trace, _) = best.expect("two starts evaluated");
        self.assemble("heuristic", &layout, trace, bins)
    }

    /// Minimum-objective feasible subset by full enumeration. Ties go to
    /// fewer sites, then the lexicographically smallest id set. When nothing
    /// is feasible the subset with the least shortfall is returned, marked
    /// infeasible.
    pub fn exhaustive_oracle(&self, max_pool: usize, bins: &BinSpec) -> Result<OptimizationResult> {
        let n = self.candidates.len();
        if n > max_pool || n >= usize::BITS as usize - 1 {
            return Err(Error::PoolTooLarge { pool: n, max_pool });
        }
        let to_mask = |bits: u64| (0..n).map(|c| bits >> c & 1 == 1).collect::<Vec<_>>();
        let (best_bits, _) = (0..1u64 << n)
            .into_par_iter()
            .map(|bits| (bits, self.score(&to_mask(bits))))
            .min_by(oracle_order)
            .expect("at least the empty subset");
        self.assemble("oracle", &self.layout_of(&to_mask(best_bits)), Vec::new(), bins)
    }

    fn fields_for(&self, open: &[bool]) -> BTreeMap<String, AccessibilityField> {
        let ids: Vec<String> = self.scenario.demands().iter().map(|d| d.id.clone()).collect();
        self.models
            .iter()
            .zip(self.group_scores(open))
            .map(|(m, scores)| {
                (
                    m.group().to_string(),
                    AccessibilityField {
                        group: m.group().to_string(),
                        gamma: self.params.gamma,
                        demand_ids: ids.clone(),
                        scores,
                    },
                )
            })
            .collect()
    }

    fn coverage_for(
        &self,
        fields: &BTreeMap<String, AccessibilityField>,
        bins: &BinSpec,
    ) -> Result<BTreeMap<String, CoverageReport>> {
        fields
            .iter()
            .map(|(g, f)| Ok((g.clone(), coverage_report(f, self.scenario.demands(), bins)?)))
            .collect()
    }

    /// Full result record for `layout`, including baseline (existing sites
    /// only) and final per-group fields and coverage.
    pub fn assemble(
        &self,
        method: &str,
        layout: &Layout,
        trace: Vec<Move>,
        bins: &BinSpec,
    ) -> Result<OptimizationResult> {
        let mask = self.mask_of(layout)?;
        let eval = self.evaluate_mask(&mask);
        let open = self.open_sites(&mask);
        let fields = self.fields_for(&open);
        let baseline_fields = self.fields_for(&self.existing);
        Ok(OptimizationResult {
            method: method.to_string(),
            layout: layout.clone(),
            k: layout.k(),
            total_open_sites: open.iter().filter(|o| **o).count(),
            objective: eval.objective,
            feasible: eval.feasible,
            shortfalls: eval.shortfalls,
            baseline_coverage: self.coverage_for(&baseline_fields, bins)?,
            coverage: self.coverage_for(&fields, bins)?,
            trace,
            baseline_fields,
            fields,
        })
    }
}

fn lex_bits(a: u64, b: u64) -> Ordering {
    // Smallest id set first: compare ascending member lists.
    let (mut x, mut y) = (a, b);
    loop {
        match (x == 0, y == 0) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let (lx, ly) = (x.trailing_zeros(), y.trailing_zeros());
        if lx != ly {
            return lx.cmp(&ly);
        }
        x &= x - 1;
        y &= y - 1;
    }
}

fn oracle_order(a: &(u64, Score), b: &(u64, Score)) -> Ordering {
    let ka = a.0.count_ones();
    let kb = b.0.count_ones();
    match (a.1.feasible, b.1.feasible) {
        (true, false) => Ordering::Less,
        (false, true) => Ordering::Greater,
        (true, true) => a.1.objective.total_cmp(&b.1.objective),
        (false, false) => {
            a.1.shortfall
                .total_cmp(&b.1.shortfall)
                .then(a.1.objective.total_cmp(&b.1.objective))
        }
    }
    .then(ka.cmp(&kb))
    .then_with(|| lex_bits(a.0, b.0))
}

/// `alpha * k + beta * sum (A_i - a_sigma)^2`.
pub fn objective_from_scores(k: usize, scores: &[f64], params: &ObjectiveParams) -> f64 {
    let deviation: f64 = scores.iter().map(|a| (a - params.a_sigma) * (a - params.a_sigma)).sum();
    params.alpha * k as f64 + params.beta * deviation
}

pub fn objective_value(
    layout: &Layout,
    scenario: &Scenario,
    matrices: &[TravelTimeMatrix],
    params: &ObjectiveParams,
) -> Result<f64> {
    Planner::new(scenario, matrices, params.clone())?.objective_value(layout)
}

pub fn is_feasible(
    layout: &Layout,
    scenario: &Scenario,
    matrices: &[TravelTimeMatrix],
    params: &ObjectiveParams,
) -> Result<(bool, Vec<Shortfall>)> {
    Planner::new(scenario, matrices, params.clone())?.is_feasible(layout)
}

pub fn greedy_construct(
    scenario: &Scenario,
    matrices: &[TravelTimeMatrix],
    params: &ObjectiveParams,
) -> Result<Layout> {
    Ok(Planner::new(scenario, matrices, params.clone())?.greedy_construct().0)
}

pub fn local_search(
    start: &Layout,
    scenario: &Scenario,
    matrices: &[TravelTimeMatrix],
    params: &ObjectiveParams,
    budget: usize,
) -> Result<LocalSearchOutcome> {
    Planner::new(scenario, matrices, params.clone())?.local_search(start, budget)
}

pub fn exhaustive_oracle(
    scenario: &Scenario,
    matrices: &[TravelTimeMatrix],
    params: &ObjectiveParams,
    max_pool: usize,
    bins: &BinSpec,
) -> Result<OptimizationResult> {
    Planner::new(scenario, matrices, params.clone())?.exhaustive_oracle(max_pool, bins)
}

pub fn optimize(
    scenario: &Scenario,
    matrices: &[TravelTimeMatrix],
    params: &ObjectiveParams,
    budget: usize,
    bins: &BinSpec,
) -> Result<OptimizationResult> {
    Planner::new(scenario, matrices, params.clone())?.optimize(budget, bins)
}
