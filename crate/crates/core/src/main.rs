use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use iemix::cli::{self, EnsembleConfig, ExperimentConfig, TableId};
use iemix::spectra::Bins;

#[derive(Parser)]
#[command(name = "iemix", version, about = "Spin-chain spectra as a classical/isotropic mixture")]
struct Args {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum EnsembleArg {
    Wishart,
    Goe,
    Pm1,
    Pm1Balanced,
    Fixed,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the analytic mixture weight as JSON.
    Slider {
        #[arg(long)]
        n_sites: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
    },
    /// Run one experiment and write densities.csv, moments.csv and summary.json.
    Run {
        /// JSON config; overrides every other flag.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "wishart")]
        ensemble: EnsembleArg,
        #[arg(long, default_value_t = 4)]
        rank: usize,
        /// Eigenvalue file for `--ensemble fixed`.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        n_sites: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long, default_value_t = 2)]
        range: usize,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        /// Number of equal-width bins; Freedman-Diaconis when omitted.
        #[arg(long, conflicts_with = "edges")]
        bins: Option<usize>,
        /// Explicit comma-separated bin edges.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        edges: Option<Vec<f64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Theory vs Monte Carlo for a table preset (d = 2, Wishart rank 4, beta = 1).
    Reproduce {
        /// N3, N5, N7, N9 or N11.
        table: TableId,
        /// Trial count; 0 prints the theory column only.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn usage(e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match args.cmd {
        Cmd::Slider { n_sites, d, beta } => match cli::cmd_slider(n_sites, d, beta) {
            Ok(out) => {
                println!("{}", serde_json::to_string(&out).expect("finite slider output"));
                ExitCode::SUCCESS
            }
            Err(e) => usage(e),
        },
        Cmd::Run { config, ensemble, rank, spectrum, n_sites, d, range, beta, trials, bins, edges, seed, out } => {
            let cfg = match config {
                Some(path) => match ExperimentConfig::from_json_file(&path) {
                    Ok(c) => c,
                    Err(e) => return usage(e),
                },
                None => {
                    let ensemble = match ensemble {
                        EnsembleArg::Wishart => EnsembleConfig::Wishart { rank },
                        EnsembleArg::Goe => EnsembleConfig::Goe,
                        EnsembleArg::Pm1 => EnsembleConfig::Pm1,
                        EnsembleArg::Pm1Balanced => EnsembleConfig::Pm1Balanced,
                        EnsembleArg::Fixed => match spectrum {
                            Some(path) => EnsembleConfig::Fixed { path },
                            None => return usage("--ensemble fixed needs --spectrum"),
                        },
                    };
                    let bins = match (bins, edges) {
                        (_, Some(e)) => Bins::Edges(e),
                        (Some(b), None) => Bins::Count(b),
                        (None, None) => Bins::Auto,
                    };
                    ExperimentConfig { ensemble, n_sites, d, range, beta, trials, bins, seed, out }
                }
            };
            if let Err(e) = cfg.chain_spec() {
                return usage(e);
            }
            match cli::cmd_run(&cfg) {
                Ok(r) => {
                    println!("{}", serde_json::to_string_pretty(&r.summary).expect("serializable summary"));
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Cmd::Reproduce { table, trials, seed } => {
            let trials = trials.unwrap_or_else(|| table.default_trials());
            match cli::cmd_reproduce(table, trials, seed) {
                Ok(r) => {
                    print!("{}", r.render());
                    if r.pass() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => usage(e),
            }
        }
    }
}
