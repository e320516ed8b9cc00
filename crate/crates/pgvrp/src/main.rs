use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pgvrp::bench::{self, Algo, SuiteSpec};
use pgvrp::core::oracle::{self, EnumerationBudget};
use pgvrp::core::{bounds, eval};
use pgvrp::format;

#[derive(Parser)]
#[command(name = "pgvrp", version, about = "Probabilistic generalized vehicle routing toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance suite.
    Gen(GenArgs),
    /// Evaluate a solution on an instance.
    Eval {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Solve one instance and write the solution file.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        algo: Algo,
        /// Clusters per vehicle for mmI and MmI.
        #[arg(long)]
        capacity: Option<usize>,
        /// Seconds allowed for the exact solver.
        #[arg(long)]
        time_limit: Option<f64>,
        /// Solution path; defaults to the instance path with extension `sol`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run algorithms over every instance in a directory.
    Bench {
        #[arg(long)]
        dir: PathBuf,
        /// Comma-separated list, e.g. `MmI,mmI,exact`.
        #[arg(long)]
        algos: String,
        #[arg(long)]
        time_limit: f64,
        #[arg(long, default_value = "results.csv")]
        out: PathBuf,
    },
    /// Print bounds on the optimum and on the recourse.
    Bounds {
        #[arg(long)]
        instance: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    /// Built-in suite; only `default` exists.
    #[arg(long, conflicts_with = "rows", required_unless_present = "rows")]
    suite: Option<String>,
    /// File with one `n_nodes m_clusters k_vehicles` row per line.
    #[arg(long)]
    rows: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100.0)]
    box_size: f64,
    #[arg(long, default_value_t = 0.1)]
    p_min: f64,
    #[arg(long, default_value_t = 0.9)]
    p_max: f64,
}

fn read_instance(path: &Path) -> Result<pgvrp::core::Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    format::parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn seconds(s: f64) -> Result<Duration> {
    Duration::try_from_secs_f64(s).map_err(|_| anyhow::anyhow!("invalid time limit {s}"))
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Gen(args) => {
            let rows = match (&args.suite, &args.rows) {
                (Some(name), None) if name == "default" => SuiteSpec::default_suite(args.seed).rows,
                (Some(name), None) => bail!("unknown suite `{name}`"),
                (None, Some(path)) => SuiteSpec::parse_rows(&fs::read_to_string(path)?)?,
                _ => unreachable!("clap enforces exactly one of --suite and --rows"),
            };
            let spec = SuiteSpec { rows, seed: args.seed, box_size: args.box_size, probability_range: (args.p_min, args.p_max) };
            fs::create_dir_all(&args.out)?;
            for g in bench::generate(&spec)? {
                let path = args.out.join(format!("{}.pgvrp", g.id));
                fs::write(&path, format::write_instance(&g.instance))?;
                println!("{}", path.display());
            }
        }
        Command::Eval { instance, solution } => {
            let inst = read_instance(&instance)?;
            let sol = format::parse_solution(&fs::read_to_string(&solution)?)?;
            let report = sol.check(&inst);
            if !report.is_feasible() {
                bail!("infeasible solution: {report}");
            }
            println!("deterministic_length {}", sol.deterministic_length(&inst));
            println!("expected_length {}", eval::expected_length(&sol, &inst)?);
            println!("expected_recourse {}", eval::expected_recourse(&sol, &inst)?);
        }
        Command::Solve { instance, algo, capacity, time_limit, out } => {
            let inst = read_instance(&instance)?;
            let limit = time_limit.map(seconds).transpose()?;
            let o = bench::run_algo(&inst, algo, capacity, limit);
            let objective = o.objective.map_or(String::from("-"), |v| v.to_string());
            if let Some(sol) = &o.solution {
                let path = out.unwrap_or_else(|| instance.with_extension("sol"));
                fs::write(&path, format::write_solution(sol))?;
                println!("{algo} objective={objective} seconds={:.3} status={} solution={}", o.seconds, o.status, path.display());
            } else {
                bail!("{algo} failed: {}", o.status);
            }
        }
        Command::Bench { dir, algos, time_limit, out } => {
            let algos = bench::parse_algos(&algos).map_err(anyhow::Error::msg)?;
            let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "pgvrp"))
                .collect();
            paths.sort();
            let mut instances = Vec::new();
            for p in &paths {
                let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                instances.push(bench::GeneratedInstance { id, instance: read_instance(p)? });
            }
            let rows = bench::run_suite(&instances, &algos, seconds(time_limit)?);
            bench::write_csv(&rows, fs::File::create(&out)?)?;
            println!("{} rows written to {}", rows.len(), out.display());
        }
        Command::Bounds { instance } => {
            let inst = read_instance(&instance)?;
            match oracle::gvrp_optimal(&inst, &EnumerationBudget::default()) {
                Ok((_, l)) => println!("lower_bound_scaled {}", bounds::lower_bound_scaled(&inst, l)),
                Err(e) => println!("lower_bound_scaled unavailable ({e})"),
            }
            println!("ub_simple {}", bounds::ub_simple(&inst));
            println!("ub_clustered {}", bounds::ub_clustered(&inst));
        }
    }
    Ok(())
}
