use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mead::cli::{
    cmd_agreement, cmd_cluster, cmd_evaluate, cmd_idf, cmd_summarize, exit_code, parse_positions,
    AgreementMode, RunConfig, SystemSource,
};
use mead::lexstats::IdfModel;
use mead::Result;

#[derive(Parser)]
#[command(name = "mead", version, about = "Centroid-based multi-document summarization and utility-based evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Run parameters; each flag overrides the matching key of `--config`.
#[derive(Args, Default)]
struct ConfigArgs {
    /// key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// score weights as wc,wp,wf
    #[arg(long)]
    weights: Option<String>,
    /// pure-centroid | lead-centroid
    #[arg(long)]
    preset: Option<String>,
    /// compression rate in (0, 1]
    #[arg(long)]
    r: Option<String>,
    /// compression-rate grid start:end:step
    #[arg(long = "r-grid")]
    r_grid: Option<String>,
    /// credit factor for subsumed sentences, in [0, 1]
    #[arg(long = "E")]
    e: Option<String>,
    /// on | off
    #[arg(long)]
    redundancy: Option<String>,
    #[arg(long = "centroid-threshold")]
    centroid_threshold: Option<String>,
    #[arg(long = "sim-threshold")]
    sim_threshold: Option<String>,
    #[arg(long = "agreement-threshold")]
    agreement_threshold: Option<String>,
    #[arg(long = "enumeration-cap")]
    enumeration_cap: Option<String>,
    /// table (3-decimal staged rounding) | exact
    #[arg(long)]
    precision: Option<String>,
    /// on | off: also discount the judges' maxima for subsumption
    #[arg(long = "discount-judge-max")]
    discount_judge_max: Option<String>,
    #[arg(long)]
    seed: Option<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::read(path)?,
            None => RunConfig::default(),
        };
        let overrides = [
            ("preset", &self.preset),
            ("weights", &self.weights),
            ("r", &self.r),
            ("r_grid", &self.r_grid),
            ("E", &self.e),
            ("redundancy", &self.redundancy),
            ("centroid_threshold", &self.centroid_threshold),
            ("sim_threshold", &self.sim_threshold),
            ("agreement_threshold", &self.agreement_threshold),
            ("enumeration_cap", &self.enumeration_cap),
            ("precision", &self.precision),
            ("discount_judge_max", &self.discount_judge_max),
            ("seed", &self.seed),
        ];
        for (key, value) in overrides {
            if let Some(value) = value {
                config.set(key, value)?;
            }
        }
        Ok(config)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Cbsu,
    Csis,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    Lead,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Build a background IDF model from a directory of cluster files
    Idf {
        corpus_dir: PathBuf,
        #[arg(long, default_value = "idf.json")]
        out: PathBuf,
    },
    /// Group documents into event clusters
    Cluster {
        /// cluster files or directories of them
        inputs: Vec<PathBuf>,
        #[arg(long)]
        idf: PathBuf,
        #[arg(long, default_value = "clusters")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Extract summaries of a cluster
    Summarize {
        cluster: PathBuf,
        #[arg(long)]
        idf: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score extracts against judge annotations
    Evaluate {
        /// utility annotation files, one per judge
        #[arg(long = "annotations", required = true, num_args = 1..)]
        annotations: Vec<PathBuf>,
        /// subsumption annotation files, one per judge
        #[arg(long = "subsumptions", num_args = 1..)]
        subsumptions: Vec<PathBuf>,
        /// extract files written by `summarize`
        #[arg(long = "extract")]
        extracts: Vec<PathBuf>,
        /// explicit positions, e.g. `1,4` or `label=1,4`
        #[arg(long = "positions")]
        positions: Vec<String>,
        #[arg(long = "baseline")]
        baselines: Vec<Baseline>,
        /// cluster file, required by the lead baseline
        #[arg(long)]
        cluster: Option<PathBuf>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Inter-judge agreement tables
    Agreement {
        files: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "cbsu")]
        mode: Mode,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Idf { corpus_dir, out } => {
            let model = cmd_idf(&corpus_dir, &out)?;
            println!("idf model over {} documents written to {}", model.n_docs(), out.display());
        }
        Command::Cluster { inputs, idf, out, config } => {
            let config = config.resolve()?;
            let idf = IdfModel::read(&idf)?;
            let clusters = cmd_cluster(&inputs, &idf, &config, &out)?;
            for c in &clusters {
                println!("{}\t{} documents\t{} sentences", c.cluster_id(), c.d(), c.n());
            }
        }
        Command::Summarize { cluster, idf, out, config } => {
            let config = config.resolve()?;
            let idf = IdfModel::read(&idf)?;
            for ex in cmd_summarize(&cluster, &idf, &config, &out)? {
                let list: Vec<String> = ex.selected.iter().map(|p| p.to_string()).collect();
                println!("r={:.2}\tk={}\t{}", ex.r, ex.k, list.join(" "));
            }
        }
        Command::Evaluate {
            annotations,
            subsumptions,
            extracts,
            positions,
            baselines,
            cluster,
            out,
            config,
        } => {
            let config = config.resolve()?;
            let mut systems: Vec<SystemSource> =
                extracts.into_iter().map(SystemSource::ExtractFile).collect();
            for spec in &positions {
                let (label, positions) = parse_positions(spec)?;
                systems.push(SystemSource::Positions { label, positions });
            }
            for baseline in baselines {
                match baseline {
                    Baseline::Lead => {
                        let cluster = cluster.clone().ok_or_else(|| {
                            mead::MeadError::InvalidParameter(
                                "the lead baseline needs --cluster".into(),
                            )
                        })?;
                        systems.push(SystemSource::Lead(cluster));
                    }
                    Baseline::Random => systems.push(SystemSource::Random),
                }
            }
            let report = cmd_evaluate(&systems, &annotations, &subsumptions, &config, &out)?;
            print!("{}", report.to_csv());
        }
        Command::Agreement { files, mode, out, config } => {
            let config = config.resolve()?;
            let mode = match mode {
                Mode::Cbsu => AgreementMode::Cbsu,
                Mode::Csis => AgreementMode::Csis,
            };
            print!("{}", cmd_agreement(&files, mode, &config, &out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = run(Cli::parse());
    if let Err(err) = &result {
        eprintln!("error: {err}");
    }
    ExitCode::from(exit_code(&result) as u8)
}
