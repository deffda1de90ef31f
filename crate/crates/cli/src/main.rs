use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};
use serde::Serialize;

use coalescent::experiments::{self, ChainSource, LoadedChain};
use coalescent::graph::Family;
use coalescent::Error;

/// Coalescing random walks: exact chain analytics and seeded Monte Carlo experiments.
#[derive(Debug, Parser)]
#[command(name = "coalescent", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Hitting, meeting and mixing times of a chain.
    Analyze {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Monte Carlo coalescence times C_k from every state occupied.
    Coalesce {
        #[command(flatten)]
        chain: ChainArgs,
        /// Comma-separated cluster counts k.
        #[arg(long, value_delimiter = ',', default_value = "1")]
        k: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Kolmogorov-Smirnov comparison of C/n on K_n with the series limit law.
    Eq1Compare {
        /// Size of the complete graph.
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Mean C_k against t_hit/k + t_mix.
    Thm2Scaling {
        #[command(flatten)]
        chain: ChainArgs,
        /// Comma-separated cluster counts k.
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8,16")]
        k: Vec<usize>,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Randomized audit of the meeting-time survival bound.
    Lemma1Audit {
        #[command(flatten)]
        chain: OptionalChainArgs,
        /// Number of random (chain, path, time) trials.
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Voter-model consensus time against coalescence time.
    VoterDuality {
        #[command(flatten)]
        chain: ChainArgs,
        #[command(flatten)]
        run: RunArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("source").required(true).args(["family", "edges", "chain_json"])))]
struct ChainArgs {
    /// Graph family: complete, cycle, path, star, hypercube, torus(d,L), erdos_renyi(n,p,seed).
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    /// Edge-list file, one "u v" pair per line.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Generator JSON file.
    #[arg(long)]
    chain_json: Option<PathBuf>,
    /// Family size (vertex count; dimension for hypercube).
    #[arg(long, requires = "family")]
    n: Option<usize>,
}

#[derive(Debug, Args)]
#[group(skip)]
#[command(group(ArgGroup::new("source").args(["family", "edges", "chain_json"])))]
struct OptionalChainArgs {
    /// Audit this graph family instead of random reversible chains.
    #[arg(long, value_parser = parse_family)]
    family: Option<Family>,
    /// Audit the random walk on this edge list.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Audit this generator JSON file.
    #[arg(long)]
    chain_json: Option<PathBuf>,
    /// Family size (vertex count; dimension for hypercube).
    #[arg(long, requires = "family")]
    n: Option<usize>,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Number of independent replicas.
    #[arg(long, default_value_t = 1000)]
    replicas: usize,
    /// Master seed; equal seeds give byte-identical output.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// CSV file for per-replica rows.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File for the JSON summary; printed to stdout when absent.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn source(family: Option<Family>, edges: Option<PathBuf>, chain_json: Option<PathBuf>, n: Option<usize>) -> Option<ChainSource> {
    match (family, edges, chain_json) {
        (Some(family), _, _) => Some(ChainSource::Family { family, size: n }),
        (_, Some(path), _) => Some(ChainSource::EdgeList(path)),
        (_, _, Some(path)) => Some(ChainSource::GeneratorJson(path)),
        _ => None,
    }
}

impl ChainArgs {
    fn load(self) -> Result<LoadedChain, Error> {
        source(self.family, self.edges, self.chain_json, self.n).expect("clap requires a source").load()
    }
}

enum Failure {
    Invalid(Error),
    Audit(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Invalid(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.into())
    }
}

fn emit(output: &OutputArgs, summary: &impl Serialize, csv: Option<String>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(summary).map_err(Error::from)?;
    match &output.json {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    if let (Some(path), Some(csv)) = (&output.out, csv) {
        std::fs::write(path, csv)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Described<'a, T: Serialize> {
    chain: &'a str,
    #[serde(flatten)]
    report: &'a T,
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze { chain, output } => {
            let loaded = chain.load()?;
            let report = experiments::analyze(&loaded.generator)?;
            emit(&output, &Described { chain: &loaded.description, report: &report }, None)
        }
        Command::Coalesce { chain, k, run, output } => {
            let loaded = chain.load()?;
            let report = experiments::coalesce(&loaded.generator, &k, run.replicas, run.seed)?;
            let csv = report.csv();
            emit(&output, &Described { chain: &loaded.description, report: &report }, Some(csv))
        }
        Command::Eq1Compare { n, run, output } => {
            let report = experiments::eq1_compare(n, run.replicas, run.seed)?;
            let mut csv = String::from("replica_id,c_over_n\n");
            for (i, x) in report.simulated_samples.iter().enumerate() {
                let _ = writeln!(csv, "{i},{x}");
            }
            emit(&output, &report, Some(csv))?;
            if report.ks.p_value > 0.001 && report.means_agree {
                Ok(())
            } else {
                Err(Failure::Audit(format!(
                    "limit-law comparison rejected: KS p-value {:.3e}, means agree: {}",
                    report.ks.p_value, report.means_agree
                )))
            }
        }
        Command::Thm2Scaling { chain, k, run, output } => {
            let complete = matches!(chain.family, Some(Family::Complete));
            let loaded = chain.load()?;
            let report = experiments::thm2_scaling(&loaded.generator, complete, &k, run.replicas, run.seed)?;
            let csv = experiments::estimate_csv(&report.estimate);
            emit(&output, &Described { chain: &loaded.description, report: &report }, Some(csv))
        }
        Command::Lemma1Audit { chain, trials, seed, output } => {
            let loaded = source(chain.family, chain.edges, chain.chain_json, chain.n).map(|s| s.load()).transpose()?;
            let report = experiments::lemma1_audit(loaded.as_ref().map(|l| &l.generator), trials, seed)?;
            emit(&output, &report, Some(report.csv()))?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Audit(format!(
                    "{} of {} trials violate the bound (max excess {:e}); constant-path error {:e}",
                    report.violations, report.trials, report.max_excess, report.constant_path_max_error
                )))
            }
        }
        Command::VoterDuality { chain, run, output } => {
            let loaded = chain.load()?;
            let graph = loaded
                .graph
                .ok_or_else(|| Error::Invalid("the voter model needs a graph, not a generator".into()))?;
            let report = experiments::voter_duality(&graph, run.replicas, run.seed)?;
            let mut csv = String::from("replica_id,consensus_time\n");
            for (i, x) in report.consensus_samples.iter().enumerate() {
                let _ = writeln!(csv, "{i},{x}");
            }
            emit(&output, &Described { chain: &loaded.description, report: &report }, Some(csv))?;
            if report.passed {
                Ok(())
            } else {
                Err(Failure::Audit(format!(
                    "mean consensus {} exceeds mean coalescence {} + 3 x {}",
                    report.consensus.mean, report.coalescence.mean, report.combined_std_err
                )))
            }
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Audit(msg)) => {
            eprintln!("audit failed: {msg}");
            ExitCode::from(3)
        }
    }
}
