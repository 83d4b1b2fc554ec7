//! Command-line surface: solvers and single simulations for quick
//! inspection, plus the replicated experiment suites.
//!
//! Exit codes: 0 when everything ran and all verdicts passed, 1 when the run
//! worked but a verdict failed (or an output could not be written), 2 for
//! configuration and usage errors. All timing goes to stderr so stdout and
//! the output files are byte-stable for a given seed, whatever the worker
//! count.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use gnplab::bp::{simulate_bp, solve_survival, BpCaps, BpParams, DEFAULT_RHO_TOL};
use gnplab::config::{ExperimentKind, KvConfig};
use gnplab::coupling::{coupled_explore, coupled_explore_lower, truncated_explore};
use gnplab::experiments::run_from_config;
use gnplab::gnp::{component_census, lazy_component_census, EdgeSampler, GnpParams};
use gnplab::oracle;
use gnplab::pool::UnvisitedPool;
use gnplab::rng::Substream;
use gnplab::{Error, Result};

#[derive(Parser)]
#[command(
    name = "gnplab",
    version,
    about = "Simulation lab for the giant-component transition in sparse random graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the survival equation for the Bi(n, p) branching process.
    SolveRho {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        /// Bisection tolerance on the survival probability.
        #[arg(long, default_value_t = DEFAULT_RHO_TOL)]
        tol: f64,
    },
    /// Simulate one Bi(n, p) branching process under censoring caps.
    SimulateBp {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        /// Halt once total progeny reaches this size.
        #[arg(long, default_value_t = 1_000_000)]
        size_cap: u64,
        /// Halt once one generation reaches this width (default: no cap).
        #[arg(long)]
        width_cap: Option<u64>,
    },
    /// Sample G(n, p) and print its component sizes, largest first.
    Census {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        /// `lazy` explores against an unvisited pool; `edges` walks pair
        /// ranks and union-finds.
        #[arg(long, default_value = "lazy")]
        pipeline: String,
    },
    /// Run one coupled exploration: component tree against its dominating
    /// branching process (or, with --k, against the process it dominates).
    Couple {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        /// Threshold for the lower coupling; omits the caps.
        #[arg(long)]
        k: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        size_cap: u64,
        #[arg(long, default_value_t = 10_000)]
        width_cap: u64,
        #[arg(long, default_value_t = 0)]
        root: u32,
    },
    /// Explore one component, stopping at a size cap or once the boundary
    /// holds ceil(eps * L) vertices.
    ExploreTrunc {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        size_cap: u64,
        #[arg(long, default_value_t = 0)]
        root: u32,
    },
    /// Largest-component scaling sweep over an n schedule.
    ExpL1(ExpArgs),
    /// Reach-probability check: Pr(|C_v| >= L) against its lower bound.
    ExpLower(ExpArgs),
    /// Extinction duality: conditioned supercritical totals against the
    /// subcritical dual.
    ExpDuality(ExpArgs),
    /// Two-round sprinkle: do the large blocks merge into one giant?
    ExpSprinkle(ExpArgs),
    /// Total-size tail and wide-generation bounds.
    ExpTail(ExpArgs),
    /// Exact distributions by exhaustive enumeration (small instances).
    OracleEnum {
        /// Vertex count for the largest-component law (at most 5).
        #[arg(long)]
        n: Option<usize>,
        /// Offspring trials for the tree-size law (at most 3).
        #[arg(long)]
        fanout: Option<u64>,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 12)]
        max_size: u64,
    },
}

#[derive(Args)]
struct ExpArgs {
    /// Key-value config file; `experiment` must match the subcommand.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for records.jsonl, summary.json, summary.csv
    /// (default: $GNPLAB_OUT_DIR, else the working directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config file's master_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config file's worker count; never changes results.
    #[arg(long)]
    parallelism: Option<u64>,
    /// What to echo on stdout: `json` or `csv`.
    #[arg(long, default_value = "json")]
    format: String,
}

fn main() {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(match err {
                Error::Io(_) => 1,
                _ => 2,
            });
        }
    }
}

/// Ok(false) means the command ran but a verdict failed.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::SolveRho { n, p, tol } => {
            let solution = solve_survival(&BpParams::new(n, p)?, tol)?;
            println!("rho={}", solution.rho);
            println!("pi={}", solution.pi);
            println!("dual_mean={}", solution.dual_mean);
            println!("dual_expected_size={}", solution.dual_expected_size);
            println!("residual={}", solution.residual);
            Ok(true)
        }
        Command::SimulateBp {
            n,
            p,
            seed,
            size_cap,
            width_cap,
        } => {
            let params = BpParams::new(n, p)?;
            let caps = BpCaps::new(size_cap, width_cap.unwrap_or(u64::MAX))?;
            let mut rng = Substream::new(seed, 0, "simulate-bp");
            let outcome = simulate_bp(&params, caps, &mut rng)?;
            println!("status={:?}", outcome.status);
            println!("total_size={}", outcome.total_size);
            println!("width={}", outcome.width);
            println!("generations={}", outcome.generations);
            println!("pending={}", outcome.pending);
            Ok(true)
        }
        Command::Census {
            n,
            p,
            seed,
            pipeline,
        } => {
            let params = GnpParams::new(n, p)?;
            let mut rng = Substream::new(seed, 0, "census");
            let census = match pipeline.as_str() {
                "lazy" => {
                    let mut pool = UnvisitedPool::new(n);
                    lazy_component_census(&params, &mut pool, &mut rng)?
                }
                "edges" => {
                    let edges = EdgeSampler::new(&params, &mut rng);
                    component_census(n, edges)?
                }
                other => {
                    return Err(Error::Config(format!(
                        "unknown pipeline `{other}`; expected `lazy` or `edges`"
                    )))
                }
            };
            let sizes: Vec<String> = census.sizes.iter().map(u32::to_string).collect();
            println!("{}", sizes.join(","));
            Ok(true)
        }
        Command::Couple {
            n,
            p,
            seed,
            k,
            size_cap,
            width_cap,
            root,
        } => {
            let params = GnpParams::new(n, p)?;
            let mut pool = UnvisitedPool::new(n);
            let mut rng = Substream::new(seed, 0, "couple");
            let joint = match k {
                Some(k) => coupled_explore_lower(&params, root, k, &mut pool, &mut rng)?,
                None => {
                    let caps = BpCaps::new(size_cap, width_cap)?;
                    coupled_explore(&params, root, caps, &mut pool, &mut rng)?
                }
            };
            println!("relation={:?}", joint.relation);
            println!("tree_size={}", joint.graph_tree.size());
            println!("tree_width={}", joint.graph_tree.width());
            println!("bp_status={:?}", joint.bp_outcome.status);
            println!("bp_total={}", joint.bp_outcome.total_size);
            println!("bp_width={}", joint.bp_outcome.width);
            Ok(true)
        }
        Command::ExploreTrunc {
            n,
            p,
            seed,
            size_cap,
            root,
        } => {
            let params = GnpParams::new(n, p)?;
            let mut pool = UnvisitedPool::new(n);
            let mut rng = Substream::new(seed, 0, "explore-trunc");
            let run = truncated_explore(&params, root, size_cap, &mut pool, &mut rng)?;
            println!("reached={}", run.reached());
            println!("stopped_by={:?}", run.stopped_by);
            println!("boundary_size={}", run.boundary.len());
            println!("boundary_cap={}", run.boundary_cap);
            Ok(true)
        }
        Command::ExpL1(args) => run_experiment(ExperimentKind::LargestComponent, &args),
        Command::ExpLower(args) => run_experiment(ExperimentKind::LowerBound, &args),
        Command::ExpDuality(args) => run_experiment(ExperimentKind::Duality, &args),
        Command::ExpSprinkle(args) => run_experiment(ExperimentKind::Sprinkle, &args),
        Command::ExpTail(args) => run_experiment(ExperimentKind::TailWidth, &args),
        Command::OracleEnum {
            n,
            fanout,
            p,
            max_size,
        } => {
            match (n, fanout) {
                (Some(n), None) => {
                    let probs = oracle::gnp_l1_distribution(n, p)?;
                    for (k, prob) in probs.iter().enumerate().skip(1) {
                        println!("P(L1={k})={prob}");
                    }
                }
                (None, Some(fanout)) => {
                    let dist = oracle::bp_size_distribution(fanout, p, max_size)?;
                    for (k, prob) in dist.probs.iter().enumerate().skip(1) {
                        println!("P(size={k})={prob}");
                    }
                    println!("P(size>{max_size})={}", dist.tail);
                }
                _ => {
                    return Err(Error::Config(
                        "give exactly one of --n (graph law) and --fanout (tree law)".into(),
                    ))
                }
            }
            Ok(true)
        }
    }
}

fn run_experiment(expected: ExperimentKind, args: &ExpArgs) -> Result<bool> {
    let kv = KvConfig::from_file(&args.config)?;
    let named = ExperimentKind::parse(kv.req_str("experiment")?)?;
    if named != expected {
        return Err(Error::Config(format!(
            "config file names experiment `{}`, but this subcommand runs `{}`",
            named.name(),
            expected.name()
        )));
    }
    let started = Instant::now();
    let report = run_from_config(&kv, args.seed, args.parallelism)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| std::env::var_os("GNPLAB_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let written = report.write_all(&out_dir)?;
    eprintln!("elapsed_ms={}", started.elapsed().as_millis());
    for path in &written {
        eprintln!("wrote {}", path.display());
    }
    match args.format.as_str() {
        "json" => println!("{}", report.summary_json()),
        "csv" => print!("{}", report.summary_csv()),
        other => return Err(Error::Config(format!("unknown format `{other}`; expected `json` or `csv`"))),
    }
    Ok(report.all_pass())
}
