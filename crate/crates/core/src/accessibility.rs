//! Two-step floating catchment area scores with a truncated Gaussian
//! time decay, plus population coverage reporting.
//!
//! Step one gives every open site a supply-to-demand ratio
//! `R_j = S_j / sum_n G(t_nj) D_n` over the demand inside its catchment.
//! Step two sums `gamma * G(t_ij) * R_j` over the open sites reachable from
//! each demand point. All reductions run in ascending index order so scores
//! are bit-identical between runs.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geodata::{DemandPoint, Scenario};
use crate::routing::TravelTimeMatrix;

/// Absolute offset of the truncated kernel, `exp(-1/2)`.
fn kernel_floor() -> f64 {
    (-0.5f64).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayParams {
    t_sigma_min: f64,
}

impl DecayParams {
    pub fn new(t_sigma_min: f64) -> Result<Self> {
        if !(t_sigma_min > 0.0 && t_sigma_min.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "decay threshold must be positive, got {t_sigma_min}"
            )));
        }
        Ok(DecayParams { t_sigma_min })
    }

    pub fn t_sigma_min(&self) -> f64 {
        self.t_sigma_min
    }
}

/// Truncated Gaussian decay: 1 at `t = 0`, 0 at and beyond the threshold.
/// `UNREACHABLE` (infinity) yields 0.
pub fn gaussian_decay(t: f64, params: DecayParams) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "travel time must be non-negative, got {t}"
        )));
    }
    let ts = params.t_sigma_min;
    if t >= ts {
        return Ok(0.0);
    }
    let floor = kernel_floor();
    let x = t / ts;
    Ok(((-0.5 * x * x).exp() - floor) / (1.0 - floor))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteRatio {
    /// Supply per decay-weighted person; 0 for idle sites.
    pub ratio: f64,
    /// No positive demand weight inside the catchment.
    pub idle: bool,
}

/// Precomputed catchments for one population group. Sites and demands are
/// addressed by their position in the travel-time matrix.
#[derive(Debug, Clone)]
pub struct AccessModel {
    group: String,
    population: Vec<f64>,
    capacity: Vec<f64>,
    /// Per site: `(demand index, G(t_ij))` for every demand with `t_ij` below
    /// the threshold, ascending by demand index.
    catchments: Vec<Vec<(usize, f64)>>,
    ratios: Vec<SiteRatio>,
}

impl AccessModel {
    pub fn new(matrix: &TravelTimeMatrix, population: Vec<f64>, capacity: Vec<f64>) -> Result<Self> {
        if population.len() != matrix.n_demands() || capacity.len() != matrix.n_sites() {
            return Err(Error::InvalidArgument(
                "population/capacity lengths do not match the travel-time matrix".into(),
            ));
        }
        if population.iter().any(|p| !(*p >= 0.0)) || capacity.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::InvalidArgument(
                "populations must be non-negative and capacities positive".into(),
            ));
        }
        let params = DecayParams::new(matrix.group().t_sigma_min())?;
        let catchments = (0..matrix.n_sites())
            .map(|j| {
                (0..matrix.n_demands())
                    .filter_map(|i| {
                        let w = gaussian_decay(matrix.get(i, j), params).expect("validated matrix");
                        (w > 0.0).then_some((i, w))
                    })
                    .collect::<Vec<_>>()
            })
            .collect::<Vec<_>>();
        let ratios = catchments
            .iter()
            .zip(&capacity)
            .map(|(catchment, &supply)| {
                let weighted: f64 = catchment.iter().map(|&(i, w)| w * population[i]).sum();
                if weighted > 0.0 {
                    SiteRatio {
                        ratio: supply / weighted,
                        idle: false,
                    }
                } else {
                    SiteRatio { ratio: 0.0, idle: true }
                }
            })
            .collect();
        Ok(AccessModel {
            group: matrix.group().name().to_string(),
            population,
            capacity,
            catchments,
            ratios,
        })
    }

    /// Model for `matrix.group()` using the scenario's populations and
    /// capacities. The matrix must be laid out in scenario order.
    pub fn for_scenario(scenario: &Scenario, matrix: &TravelTimeMatrix) -> Result<Self> {
        let group = matrix.group().name();
        if scenario.group(group).is_none() {
            return Err(Error::InvalidArgument(format!("scenario has no group `{group}`")));
        }
        let same_layout = matrix.demand_ids().iter().eq(scenario.demands().iter().map(|d| &d.id))
            && matrix.site_ids().iter().eq(scenario.sites().iter().map(|s| &s.id));
        if !same_layout {
            return Err(Error::InvalidArgument(
                "travel-time matrix does not match the scenario's demand/site order".into(),
            ));
        }
        let population = scenario
            .demands()
            .iter()
            .map(|d| d.population_of(group) as f64)
            .collect();
        let capacity = scenario.sites().iter().map(|s| s.capacity).collect();
        AccessModel::new(matrix, population, capacity)
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn n_demands(&self) -> usize {
        self.population.len()
    }

    pub fn n_sites(&self) -> usize {
        self.capacity.len()
    }

    pub fn population(&self) -> &[f64] {
        &self.population
    }

    pub fn capacity(&self) -> &[f64] {
        &self.capacity
    }

    /// Supply-to-demand ratio of site `j`. It depends only on the site's
    /// own catchment, not on which other sites are open.
    pub fn ratio(&self, site: usize) -> SiteRatio {
        self.ratios[site]
    }

    /// Demand points with positive decay weight from `site`, ascending.
    pub fn catchment(&self, site: usize) -> &[(usize, f64)] {
        &self.catchments[site]
    }

    /// Per demand point, the `(site, gamma * G * R)` terms of every non-idle
    /// site that reaches it, ascending by site. Summing the open entries in
    /// order reproduces [`scores`](Self::scores) bit for bit.
    pub fn reach_lists(&self, gamma: f64) -> Vec<Vec<(usize, f64)>> {
        let mut reach = vec![Vec::new(); self.n_demands()];
        for (j, catchment) in self.catchments.iter().enumerate() {
            let r = self.ratios[j];
            if r.idle {
                continue;
            }
            for &(i, w) in catchment {
                reach[i].push((j, gamma * w * r.ratio));
            }
        }
        reach
    }

    /// Scores for the sites flagged in `open`.
    pub fn scores(&self, open: &[bool], gamma: f64) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_demands()];
        for (j, _) in open.iter().enumerate().filter(|(_, o)| **o) {
            let r = self.ratios[j];
            if r.idle {
                continue;
            }
            for &(i, w) in &self.catchments[j] {
                scores[i] += gamma * w * r.ratio;
            }
        }
        scores
    }

    /// Scores with a caller-supplied ratio per site, used to check the
    /// fixed-ratio monotonicity property.
    pub fn scores_with_ratios(&self, open: &[bool], ratios: &[f64], gamma: f64) -> Vec<f64> {
        let mut scores = vec![0.0; self.n_demands()];
        for (j, _) in open.iter().enumerate().filter(|(_, o)| **o) {
            for &(i, w) in &self.catchments[j] {
                scores[i] += gamma * w * ratios[j];
            }
        }
        scores
    }

    /// `|sum_i D_i A_i - sum_{open, non-idle} S_j| / sum_{open} S_j`, which is
    /// zero up to rounding when `gamma = 1`. Defined as 0 with nothing open.
    pub fn conservation_residual(&self, open: &[bool], scores: &[f64]) -> f64 {
        let delivered: f64 = scores.iter().zip(&self.population).map(|(a, d)| a * d).sum();
        let (mut active, mut total) = (0.0, 0.0);
        for (j, _) in open.iter().enumerate().filter(|(_, o)| **o) {
            total += self.capacity[j];
            if !self.ratios[j].idle {
                active += self.capacity[j];
            }
        }
        if total == 0.0 {
            return 0.0;
        }
        (delivered - active).abs() / total
    }
}

/// Supply-to-demand ratio of one site for the matrix's group.
pub fn supply_demand_ratio(
    site: usize,
    matrix: &TravelTimeMatrix,
    population: &[f64],
    capacity: f64,
) -> Result<SiteRatio> {
    if site >= matrix.n_sites() || population.len() != matrix.n_demands() {
        return Err(Error::InvalidArgument("site or population outside the matrix".into()));
    }
    let params = DecayParams::new(matrix.group().t_sigma_min())?;
    let mut weighted = 0.0;
    for (i, p) in population.iter().enumerate() {
        weighted += gaussian_decay(matrix.get(i, site), params)? * p;
    }
    Ok(if weighted > 0.0 {
        SiteRatio {
            ratio: capacity / weighted,
            idle: false,
        }
    } else {
        SiteRatio { ratio: 0.0, idle: true }
    })
}

/// Accessibility of every demand point for one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessibilityField {
    pub group: String,
    pub gamma: f64,
    pub demand_ids: Vec<String>,
    pub scores: Vec<f64>,
}

impl AccessibilityField {
    pub fn get(&self, demand_id: &str) -> Option<f64> {
        self.demand_ids
            .iter()
            .position(|d| d == demand_id)
            .map(|i| self.scores[i])
    }

    /// CSV `demand_id,group,A`.
    pub fn write_csv(&self, w: &mut dyn std::io::Write) -> std::io::Result<()> {
        writeln!(w, "demand_id,group,A")?;
        for (id, a) in self.demand_ids.iter().zip(&self.scores) {
            writeln!(w, "{id},{},{a}", self.group)?;
        }
        Ok(())
    }
}

/// Open-site mask in scenario order from a set of site ids.
pub fn open_mask(scenario: &Scenario, open_sites: &BTreeSet<String>) -> Result<Vec<bool>> {
    let mut mask = vec![false; scenario.sites().len()];
    for id in open_sites {
        let j = scenario.site_index(id).ok_or_else(|| Error::UnknownSite(id.clone()))?;
        mask[j] = true;
    }
    Ok(mask)
}

/// Scores for the given open sites.
pub fn accessibility_scores(
    scenario: &Scenario,
    matrix: &TravelTimeMatrix,
    open_sites: &BTreeSet<String>,
    gamma: f64,
) -> Result<AccessibilityField> {
    if !(gamma >= 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be non-negative, got {gamma}"
        )));
    }
    let mask = open_mask(scenario, open_sites)?;
    let model = AccessModel::for_scenario(scenario, matrix)?;
    Ok(AccessibilityField {
        group: model.group().to_string(),
        gamma,
        demand_ids: matrix.demand_ids().to_vec(),
        scores: model.scores(&mask, gamma),
    })
}

/// Relative gap between delivered and supplied capacity; see
/// [`AccessModel::conservation_residual`].
pub fn conservation_check(
    scenario: &Scenario,
    matrix: &TravelTimeMatrix,
    field: &AccessibilityField,
    open_sites: &BTreeSet<String>,
) -> Result<f64> {
    let mask = open_mask(scenario, open_sites)?;
    let model = AccessModel::for_scenario(scenario, matrix)?;
    Ok(model.conservation_residual(&mask, &field.scores))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    pub lower_bound: f64,
}

/// Ordered coverage levels, lowest first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSpec {
    bins: Vec<Bin>,
}

impl BinSpec {
    pub fn new(bins: Vec<Bin>) -> Result<Self> {
        if bins.is_empty() {
            return Err(Error::InvalidArgument("bin spec is empty".into()));
        }
        if bins.windows(2).any(|w| !(w[0].lower_bound < w[1].lower_bound)) {
            return Err(Error::InvalidArgument(
                "bin lower bounds must be strictly increasing".into(),
            ));
        }
        Ok(BinSpec { bins })
    }

    /// Five levels anchored on the target: 0, ½, 1, 1½ and 2 times `a_sigma`.
    pub fn default_for_target(a_sigma: f64) -> Result<Self> {
        let labels = ["very-low", "low", "medium", "high", "very-high"];
        let factors = [0.0, 0.5, 1.0, 1.5, 2.0];
        BinSpec::new(
            labels
                .iter()
                .zip(factors)
                .map(|(l, f)| Bin {
                    label: l.to_string(),
                    lower_bound: f * a_sigma,
                })
                .collect(),
        )
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    /// Highest bin whose lower bound is at or below `score`; scores below
    /// every bound fall into the first bin.
    pub fn classify(&self, score: f64) -> usize {
        self.bins.iter().rposition(|b| b.lower_bound <= score).unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageBin {
    pub label: String,
    pub lower_bound: f64,
    pub population: u64,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub group: String,
    pub bins: Vec<CoverageBin>,
}

impl CoverageReport {
    pub fn total_population(&self) -> u64 {
        self.bins.iter().map(|b| b.population).sum()
    }

    /// Population in bins whose lower bound is at least `threshold`.
    pub fn population_at_or_above(&self, threshold: f64) -> u64 {
        self.bins
            .iter()
            .filter(|b| b.lower_bound >= threshold)
            .map(|b| b.population)
            .sum()
    }
}

/// Population of the field's group per coverage level.
pub fn coverage_report(field: &AccessibilityField, demands: &[DemandPoint], bins: &BinSpec) -> Result<CoverageReport> {
    if field.scores.len() != demands.len() {
        return Err(Error::InvalidArgument("field and demand list differ in length".into()));
    }
    let mut counts = vec![0u64; bins.bins().len()];
    for (d, &a) in demands.iter().zip(&field.scores) {
        counts[bins.classify(a)] += d.population_of(&field.group);
    }
    let total: u64 = counts.iter().sum();
    Ok(CoverageReport {
        group: field.group.clone(),
        bins: bins
            .bins()
            .iter()
            .zip(counts)
            .map(|(b, population)| CoverageBin {
                label: b.label.clone(),
                lower_bound: b.lower_bound,
                population,
                share: if total == 0 {
                    0.0
                } else {
                    population as f64 / total as f64
                },
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geodata::PopulationGroup;
    use crate::routing::UNREACHABLE;

    fn decay(t: f64, ts: f64) -> f64 {
        gaussian_decay(t, DecayParams::new(ts).unwrap()).unwrap()
    }

    /// Group whose threshold is exactly `ts` minutes.
    fn group(ts: f64) -> PopulationGroup {
        PopulationGroup::new("general", 1.0, ts).unwrap()
    }

    fn matrix(ts: f64, rows: usize, cols: usize, minutes: Vec<f64>) -> TravelTimeMatrix {
        TravelTimeMatrix::from_minutes(
            group(ts),
            (0..rows).map(|i| format!("d{i}")).collect(),
            (0..cols).map(|j| format!("s{j}")).collect(),
            minutes,
        )
        .unwrap()
    }

    #[test]
    fn kernel_endpoints() {
        assert_eq!(decay(0.0, 10.0), 1.0);
        assert_eq!(decay(10.0, 10.0), 0.0);
        assert_eq!(decay(12.0, 10.0), 0.0);
        assert_eq!(decay(UNREACHABLE, 10.0), 0.0);
        assert!(gaussian_decay(-1.0, DecayParams::new(10.0).unwrap()).is_err());
        assert!(DecayParams::new(0.0).is_err());
    }

    #[test]
    fn kernel_midpoint() {
        // (e^-0.125 - e^-0.5) / (1 - e^-0.5)
        let expected = 0.701_366_573_239_004_3;
        assert!((decay(5.0, 10.0) - expected).abs() < 1e-12);
    }

    #[test]
    fn lone_pair_ratio_is_supply_over_demand() {
        let m = matrix(10.0, 1, 1, vec![0.0]);
        let r = supply_demand_ratio(0, &m, &[1000.0], 1500.0).unwrap();
        assert_eq!(
            r,
            SiteRatio {
                ratio: 1.5,
                idle: false
            }
        );
        let model = AccessModel::new(&m, vec![1000.0], vec![1500.0]).unwrap();
        assert_eq!(model.scores(&[true], 1.0), vec![1.5]);
        assert_eq!(model.scores(&[false], 1.0), vec![0.0]);
    }

    #[test]
    fn idle_site() {
        let m = matrix(10.0, 1, 1, vec![UNREACHABLE]);
        let r = supply_demand_ratio(0, &m, &[1000.0], 1500.0).unwrap();
        assert!(r.idle);
        assert_eq!(r.ratio, 0.0);
        let model = AccessModel::new(&m, vec![1000.0], vec![1500.0]).unwrap();
        let scores = model.scores(&[true], 1.0);
        assert_eq!(scores, vec![0.0]);
        assert_eq!(model.conservation_residual(&[true], &scores), 0.0);
    }

    #[test]
    fn two_demand_worked_example() {
        let m = matrix(10.0, 2, 1, vec![0.0, 5.0]);
        let g = 0.701_366_573_239_004_3;
        let expected_r = 1500.0 / (100.0 + g * 300.0);
        let r = supply_demand_ratio(0, &m, &[100.0, 300.0], 1500.0).unwrap();
        assert!((r.ratio - expected_r).abs() / expected_r < 1e-12);
        assert!((r.ratio - 4.8323).abs() < 1e-4);

        let model = AccessModel::new(&m, vec![100.0, 300.0], vec![1500.0]).unwrap();
        let a = model.scores(&[true], 1.0);
        assert!((a[0] - expected_r).abs() < 1e-12);
        assert!((a[1] - g * expected_r).abs() < 1e-12);
        assert!((a[1] - 3.3892).abs() < 1e-4);
        assert!(model.conservation_residual(&[true], &a) < 1e-9);
        assert_eq!(model.conservation_residual(&[false], &[0.0, 0.0]), 0.0);
    }

    #[test]
    fn residual_ignores_idle_sites() {
        let m = matrix(10.0, 2, 2, vec![0.0, UNREACHABLE, 5.0, UNREACHABLE]);
        let model = AccessModel::new(&m, vec![100.0, 300.0], vec![1500.0, 900.0]).unwrap();
        assert!(model.ratio(1).idle);
        let a = model.scores(&[true, true], 1.0);
        assert!(model.conservation_residual(&[true, true], &a) < 1e-9);
    }

    #[test]
    fn bins() {
        assert!(BinSpec::new(vec![]).is_err());
        let dup = vec![
            Bin {
                label: "a".into(),
                lower_bound: 0.0,
            },
            Bin {
                label: "b".into(),
                lower_bound: 0.0,
            },
        ];
        assert!(BinSpec::new(dup).is_err());
        let spec = BinSpec::default_for_target(0.135).unwrap();
        assert_eq!(spec.bins().len(), 5);
        assert_eq!(spec.classify(0.0), 0);
        assert_eq!(spec.classify(0.135), 2);
        assert_eq!(spec.classify(0.134), 1);
        assert_eq!(spec.classify(10.0), 4);
    }
}
