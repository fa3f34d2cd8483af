use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use netenergy::centrality::{compute_centralities, rank_nodes, select_drivers, RankCriterion};
use netenergy::control::{best_drivers_for_target, lambda_min_upper_bound, metrics, target_min_energy};
use netenergy::expharness::{emit_csv, run_experiment, ExperimentConfig};
use netenergy::gramian::{ctrb_gramian, GramianSpec, Horizon};
use netenergy::io::{format_matrix, read_network};
use netenergy::netgraph::{generate, GeneratorKind, GeneratorParams, Network};
use netenergy::{Error, Result, Strategy};

#[derive(Parser)]
#[command(name = "netenergy", version, about = "Control-energy centralities and driver node rankings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct SpecArgs {
    /// `inf` or a positive number of steps. Defaults to `inf` for stable networks.
    #[arg(long)]
    horizon: Option<Horizon>,
    /// Relative tolerance of the infinite-horizon solver.
    #[arg(long)]
    tol: Option<f64>,
}

impl SpecArgs {
    fn resolve(&self, net: &Network) -> Result<GramianSpec> {
        let mut spec = match self.horizon {
            Some(h) => GramianSpec {
                horizon: h,
                ..GramianSpec::infinite()
            },
            None => GramianSpec::default_for(net)?,
        };
        if let Some(tol) = self.tol {
            spec.lyap_tol = tol;
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Print p, q, q_tilde, r_diff, r_quot as CSV followed by the rankings.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Select drivers and print the resulting Gramian metrics.
    Drivers {
        file: PathBuf,
        #[arg(long)]
        strategy: Strategy,
        #[arg(long)]
        m: usize,
        /// Seed for the random strategy.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Upper bound on lambda_min(W) over all placements of m drivers.
    Bound {
        file: PathBuf,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Best m drivers for steering a single node, and the energy they need.
    Target {
        file: PathBuf,
        /// One-based target node.
        #[arg(long)]
        node: usize,
        #[arg(long)]
        m: usize,
        #[command(flatten)]
        spec: SpecArgs,
    },
    /// Run an experiment from a JSON config (or a built-in preset) and write CSVs.
    Experiment {
        /// Config file; omit when using --preset.
        config: Option<PathBuf>,
        /// desk-er, desk-sf, full-er or full-sf.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Overrides base_seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        horizon: Option<Horizon>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Sample a random network and print it in matrix format.
    Generate {
        /// erdos_renyi or directed_scale_free.
        #[arg(long, default_value = "erdos_renyi")]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        edge_prob: Option<f64>,
        #[arg(long, default_value_t = 0.9)]
        rho: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn one_based(nodes: &[usize]) -> String {
    nodes.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(" ")
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Analyze { file, spec } => {
            let net = read_network(&file)?;
            let spec = spec.resolve(&net)?;
            let table = compute_centralities(&net, spec)?;
            print!("{}", table.to_csv());
            for (label, crit) in [
                ("rank_diff", RankCriterion::RankDiff),
                ("rank_quot", RankCriterion::RankQuot),
                ("p_only", RankCriterion::POnly),
            ] {
                println!("# {label}: {}", one_based(&rank_nodes(&table, crit)));
            }
        }
        Command::Drivers {
            file,
            strategy,
            m,
            seed,
            spec,
        } => {
            let net = read_network(&file)?;
            let spec = spec.resolve(&net)?;
            let drivers = select_drivers(&net, strategy, m, spec, Some(seed))?;
            let met = metrics(&ctrb_gramian(&net, &drivers.members, spec)?)?;
            println!("strategy: {strategy}");
            println!("drivers: {}", one_based(&drivers.members));
            println!("{}", met.to_json());
        }
        Command::Bound { file, m, spec } => {
            let net = read_network(&file)?;
            let spec = spec.resolve(&net)?;
            let table = compute_centralities(&net, spec)?;
            println!("{}", netenergy::io::fmt_f64(lambda_min_upper_bound(&table, m)?));
        }
        Command::Target { file, node, m, spec } => {
            let net = read_network(&file)?;
            let spec = spec.resolve(&net)?;
            if node == 0 || node > net.n() {
                return Err(Error::Validation(format!("node {node} outside 1..={}", net.n())));
            }
            let drivers = best_drivers_for_target(&net, node - 1, m, spec)?;
            let (energy, state) = target_min_energy(&net, &drivers.members, spec, node - 1)?;
            println!("drivers: {}", one_based(&drivers.members));
            println!("energy: {}", netenergy::io::fmt_f64(energy));
            let state: Vec<String> = state.iter().map(|x| netenergy::io::fmt_f64(*x)).collect();
            println!("final_state: {}", state.join(" "));
        }
        Command::Experiment {
            config,
            preset,
            out,
            seed,
            horizon,
            tol,
        } => {
            let mut cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(path)?,
                (None, Some(name)) => ExperimentConfig::preset(&name)
                    .ok_or_else(|| Error::Validation(format!("unknown preset `{name}`")))?,
                (None, None) => return Err(Error::Validation("experiment needs a config file or --preset".into())),
            };
            if let Some(seed) = seed {
                cfg.base_seed = seed;
            }
            if let Some(h) = horizon {
                cfg.spec.horizon = h;
            }
            if let Some(tol) = tol {
                cfg.spec.lyap_tol = tol;
            }
            let result = run_experiment(&cfg)?;
            for path in emit_csv(&result, &out)? {
                println!("{}", path.display());
            }
        }
        Command::Generate {
            kind,
            n,
            edge_prob,
            rho,
            seed,
        } => {
            let kind: GeneratorKind = serde_json::from_value(serde_json::Value::String(kind.clone()))
                .map_err(|_| Error::Validation(format!("unknown generator `{kind}`")))?;
            let mut params = match kind {
                GeneratorKind::ErdosRenyi => GeneratorParams::erdos_renyi(
                    n,
                    edge_prob.unwrap_or_else(|| GeneratorParams::er_constant_degree_prob(n)),
                    seed,
                ),
                GeneratorKind::DirectedScaleFree => GeneratorParams::scale_free(n, seed),
            };
            params.target_rho = rho;
            let generated = generate(&params)?;
            if !generated.rescaled {
                eprintln!("warning: sampled network has spectral radius 0; not rescaled");
            }
            print!("{}", format_matrix(generated.network.adj()));
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numeric() { 2 } else { 1 })
        }
    }
}
