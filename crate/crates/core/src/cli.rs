//! `catchment` command line: `synth`, `score`, `solve` and `oracle`.
//!
//! Exit codes: 0 success, 1 output error, 2 input error, 3 infeasible,
//! 4 oracle pool too large.

use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::accessibility::{accessibility_scores, coverage_report, AccessibilityField};
use crate::config::RunConfig;
use crate::error::Error;
use crate::export::{layout_geojson, write_accessibility, write_coverage, write_json};
use crate::geodata::{generate_synthetic_scenario, parse_demand, parse_network, parse_sites, Scenario, SiteStatus};
use crate::optimizer::{OptimizationResult, Planner};
use crate::routing::{build_all_matrices, TravelTimeMatrix};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OUTPUT: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_POOL: i32 = 4;

#[derive(Parser, Debug)]
#[command(
    name = "catchment",
    version,
    about = "2SFCA accessibility scoring and facility placement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Write a seeded synthetic scenario bundle into the output directory.
    Synth,
    /// Score the existing facilities only.
    Score,
    /// Choose candidate sites to open.
    Solve,
    /// Enumerate every candidate subset and report the optimum.
    Oracle,
}

macro_rules! overrides {
    ($($field:ident : $help:literal),* $(,)?) => {
        #[derive(Args, Debug, Default)]
        struct Overrides {
            /// Config file (`key = value` lines).
            #[arg(long, global = true, value_name = "PATH")]
            config: Option<PathBuf>,
            $(
                #[arg(long, global = true, help = $help)]
                $field: Option<String>,
            )*
            /// Also write travel_times_<group>.csv.
            #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
            dump_matrix: Option<String>,
            /// Write layout.geojson (default true).
            #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
            geojson: Option<String>,
            /// Add snap distance to travel time.
            #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
            include_snap_distance: Option<String>,
        }

        impl Overrides {
            fn pairs(&self) -> Vec<(String, String)> {
                let mut out = Vec::new();
                $(
                    if let Some(v) = &self.$field {
                        out.push((stringify!($field).to_string(), v.clone()));
                    }
                )*
                for (k, v) in [
                    ("dump_matrix", &self.dump_matrix),
                    ("geojson", &self.geojson),
                    ("include_snap_distance", &self.include_snap_distance),
                ] {
                    if let Some(v) = v {
                        out.push((k.to_string(), v.clone()));
                    }
                }
                out
            }
        }
    };
}

overrides! {
    out: "Output directory",
    seed: "Random seed for synth",
    bundle: "Directory holding nodes/edges/demand/sites CSVs",
    nodes: "nodes.csv path",
    edges: "edges.csv path",
    demand: "demand.csv path",
    sites: "sites.csv path",
    groups: "Groups as name:speed_m_per_min:max_walk_m, comma separated",
    alpha: "Weight on the number of new sites",
    beta: "Weight on squared deviation from the target",
    gamma: "Accessibility scale factor",
    a_sigma: "Target accessibility",
    primary_group: "Group whose deviation enters the objective",
    constraint_groups: "Groups that must reach the target",
    bins: "Coverage bins as label:lower_bound, comma separated",
    budget: "Local-search move budget",
    max_pool: "Largest candidate pool the oracle accepts",
    default_capacity: "Capacity for sites without one",
    snap_warn_m: "Warn when a point snaps farther than this (m)",
    rows: "Synthetic grid rows",
    cols: "Synthetic grid columns",
    spacing_m: "Synthetic block spacing (m)",
    n_existing: "Synthetic existing sites",
    n_candidate: "Synthetic candidate sites",
    population_scale: "Synthetic mean population per point",
    existing_extent: "Share of the grid holding existing sites",
}

struct Failure {
    code: i32,
    error: Error,
}

fn input(error: Error) -> Failure {
    Failure {
        code: EXIT_INPUT,
        error,
    }
}

fn output(error: Error) -> Failure {
    Failure {
        code: EXIT_OUTPUT,
        error,
    }
}

fn compute(error: Error) -> Failure {
    let code = match error {
        Error::PoolTooLarge { .. } => EXIT_POOL,
        ref e if e.is_input_error() => EXIT_INPUT,
        _ => EXIT_OUTPUT,
    };
    Failure { code, error }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let config = match RunConfig::load(cli.overrides.config.as_deref(), &cli.overrides.pairs()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    let outcome = match cli.command {
        Command::Synth => cmd_synth(&config),
        Command::Score => cmd_score(&config),
        Command::Solve => cmd_solve(&config),
        Command::Oracle => cmd_oracle(&config),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

fn load_scenario(config: &RunConfig) -> Result<Scenario, Failure> {
    let [nodes, edges, demand, sites] = config.input_paths().map_err(input)?;
    let network = parse_network(nodes, edges).map_err(input)?;
    let demands = parse_demand(demand, &config.groups).map_err(input)?;
    let sites = parse_sites(sites, config.default_capacity).map_err(input)?;
    let scenario = Scenario::new(network, demands, sites, config.groups.clone()).map_err(input)?;
    log::info!(
        "loaded {} nodes, {} demand points, {} sites",
        scenario.network().nodes().len(),
        scenario.demands().len(),
        scenario.sites().len()
    );
    Ok(scenario)
}

fn prepare_out(dir: &Path) -> Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| output(Error::io(dir, e)))
}

fn write_fields(
    config: &RunConfig,
    scenario: &Scenario,
    prefix: &str,
    fields: &BTreeMap<String, AccessibilityField>,
) -> Result<(), Failure> {
    for (group, field) in fields {
        let report = coverage_report(field, scenario.demands(), &config.bins).map_err(compute)?;
        write_coverage(&config.out.join(format!("{prefix}coverage_{group}.json")), &report).map_err(output)?;
    }
    Ok(())
}

fn write_maps(
    config: &RunConfig,
    scenario: &Scenario,
    open: &BTreeSet<String>,
    fields: &BTreeMap<String, AccessibilityField>,
) -> Result<(), Failure> {
    for (group, field) in fields {
        write_accessibility(&config.out.join(format!("accessibility_{group}.csv")), field).map_err(output)?;
    }
    if config.geojson {
        let doc = layout_geojson(scenario, open, fields, &config.bins);
        write_json(&config.out.join("layout.geojson"), &doc).map_err(output)?;
    }
    Ok(())
}

fn existing_ids(scenario: &Scenario) -> BTreeSet<String> {
    scenario
        .sites()
        .iter()
        .filter(|s| s.status == SiteStatus::Existing)
        .map(|s| s.id.clone())
        .collect()
}

fn opened_ids(scenario: &Scenario, result: &OptimizationResult) -> BTreeSet<String> {
    let mut ids = existing_ids(scenario);
    ids.extend(result.layout.open_candidates.iter().cloned());
    ids
}

fn matrices(config: &RunConfig, scenario: &Scenario) -> Result<Vec<TravelTimeMatrix>, Failure> {
    let matrices = build_all_matrices(scenario, &config.routing).map_err(compute)?;
    log::info!("travel times ready for {} groups", matrices.len());
    Ok(matrices)
}

fn cmd_synth(config: &RunConfig) -> Result<i32, Failure> {
    let mut scenario = generate_synthetic_scenario(config.seed, &config.synth).map_err(input)?;
    if scenario.groups() != config.groups.as_slice() {
        // Regroup so demand.csv carries the configured population columns.
        let demands = scenario.demands().to_vec();
        scenario = Scenario::new(
            scenario.network().clone(),
            demands,
            scenario.sites().to_vec(),
            config.groups.clone(),
        )
        .map_err(input)?;
    }
    scenario.write_bundle(&config.out).map_err(output)?;
    println!(
        "wrote {} nodes, {} demand points, {} sites to {}",
        scenario.network().nodes().len(),
        scenario.demands().len(),
        scenario.sites().len(),
        config.out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_score(config: &RunConfig) -> Result<i32, Failure> {
    let scenario = load_scenario(config)?;
    let matrices = matrices(config, &scenario)?;
    prepare_out(&config.out)?;
    let open = existing_ids(&scenario);
    let mut fields = BTreeMap::new();
    for m in &matrices {
        let field = accessibility_scores(&scenario, m, &open, config.params.gamma).map_err(compute)?;
        fields.insert(m.group().name().to_string(), field);
        if config.dump_matrix {
            let path = config.out.join(format!("travel_times_{}.csv", m.group().name()));
            crate::geodata::write_file(&path, |w| m.write_csv(w).map_err(|e| Error::io(&path, e))).map_err(output)?;
        }
    }
    write_fields(config, &scenario, "", &fields)?;
    write_maps(config, &scenario, &open, &fields)?;
    for (group, field) in &fields {
        let report = coverage_report(field, scenario.demands(), &config.bins).map_err(compute)?;
        let total = report.total_population().max(1) as f64;
        println!(
            "{group}: {:.2}% of population at or above target",
            100.0 * report.population_at_or_above(config.params.a_sigma) as f64 / total
        );
    }
    Ok(EXIT_OK)
}

fn report_result(result: &OptimizationResult) -> i32 {
    println!(
        "{}: k = {}, objective = {}, feasible = {}",
        result.method, result.k, result.objective, result.feasible
    );
    if result.feasible {
        return EXIT_OK;
    }
    eprintln!("infeasible: {} demand points below target", result.shortfalls.len());
    for s in result.shortfalls.iter().take(10) {
        eprintln!("  {} ({}): A = {}", s.demand_id, s.group, s.accessibility);
    }
    EXIT_INFEASIBLE
}

fn cmd_solve(config: &RunConfig) -> Result<i32, Failure> {
    let scenario = load_scenario(config)?;
    let matrices = matrices(config, &scenario)?;
    let planner = Planner::new(&scenario, &matrices, config.params.clone()).map_err(compute)?;
    let result = planner.optimize(config.budget, &config.bins).map_err(compute)?;
    prepare_out(&config.out)?;
    write_json(&config.out.join("result.json"), &result).map_err(output)?;
    write_fields(config, &scenario, "baseline_", &result.baseline_fields)?;
    write_fields(config, &scenario, "", &result.fields)?;
    write_maps(config, &scenario, &opened_ids(&scenario, &result), &result.fields)?;
    Ok(report_result(&result))
}

fn cmd_oracle(config: &RunConfig) -> Result<i32, Failure> {
    let scenario = load_scenario(config)?;
    let matrices = matrices(config, &scenario)?;
    let planner = Planner::new(&scenario, &matrices, config.params.clone()).map_err(compute)?;
    let result = planner
        .exhaustive_oracle(config.max_pool, &config.bins)
        .map_err(compute)?;
    prepare_out(&config.out)?;
    write_json(&config.out.join("oracle_result.json"), &result).map_err(output)?;
    let code = report_result(&result);

    let heuristic = config.out.join("result.json");
    if let Ok(text) = std::fs::read_to_string(&heuristic) {
        let previous: Result<serde_json::Value, _> = serde_json::from_str(&text);
        match previous.ok().and_then(|v| v["objective"].as_f64()) {
            Some(h) if result.objective > 0.0 => {
                println!("heuristic / oracle objective ratio = {}", h / result.objective)
            }
            Some(h) => println!("heuristic objective {h}, oracle objective {}", result.objective),
            None => log::warn!("{} has no objective; skipping comparison", heuristic.display()),
        }
    }
    Ok(code)
}
