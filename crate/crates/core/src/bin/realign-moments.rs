use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use realign_moments::cli::{
    analyze, audit, load_state, sweep, threshold, write_sweep_csv, AuditConfig, Bracket, CliError, CriterionSelection,
    Grid, StateSource,
};
use realign_moments::{CriterionId, Family, RealignSpec};

#[derive(Parser)]
#[command(
    name = "realign-moments",
    version,
    about = "Entanglement detection from realignment moments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply one criterion to one state
    Analyze(AnalyzeArgs),
    /// Evaluate criteria along a family parameter grid and write CSV
    Sweep(SweepArgs),
    /// Bisect the family parameter where the statistic crosses 1
    Threshold(ThresholdArgs),
    /// Count false detections on sampled separable states
    Audit(AuditArgs),
}

#[derive(Args)]
struct CriterionArgs {
    /// v1, v2, v3, realign or ppt
    #[arg(long)]
    criterion: CriterionId,
    /// V1 parameter(s)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    a: Vec<f64>,
    /// V2 parameter(s)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    u: Vec<f64>,
    /// V3 parameter(s)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    v: Vec<f64>,
    /// Realignment split such as "1|2" or "12|3"
    #[arg(long)]
    split: Option<RealignSpec>,
    /// 1-based party for the partial transpose (default 2)
    #[arg(long)]
    party: Option<usize>,
}

impl CriterionArgs {
    fn selection(&self) -> CriterionSelection {
        CriterionSelection {
            id: self.criterion,
            a: self.a.clone(),
            u: self.u.clone(),
            v: self.v.clone(),
            split: self.split.clone(),
            party: self.party,
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, requires = "param", conflicts_with = "state")]
    family: Option<Family>,
    #[arg(long, allow_negative_numbers = true)]
    param: Option<f64>,
    /// JSON density matrix
    #[arg(long)]
    state: Option<PathBuf>,
    #[command(flatten)]
    criterion: CriterionArgs,
    /// Print the verdict as JSON instead of text
    #[arg(long)]
    json: bool,
    /// Also write the verdict JSON to this path
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    family: Family,
    /// lo:hi:step, both ends included
    #[arg(long)]
    range: Grid,
    #[command(flatten)]
    criterion: CriterionArgs,
    /// CSV destination (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long)]
    family: Family,
    #[command(flatten)]
    criterion: CriterionArgs,
    /// lo:hi bracket on the family parameter
    #[arg(long, default_value = "0:1")]
    bracket: Bracket,
}

#[derive(Args)]
struct AuditArgs {
    /// Subsystem dimensions, e.g. 2,2 or 2,2,2
    #[arg(long, value_delimiter = ',', default_value = "2,2")]
    dims: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    num_states: usize,
    /// Product terms per sampled state
    #[arg(long, default_value_t = 3)]
    num_terms: usize,
    /// First seed; state i uses seed + i
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "v1,v2,v3,realign,ppt")]
    criteria: Vec<CriterionId>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,1,2,5,10")]
    a: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.5,1,2,5,10")]
    u: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.5,1,5")]
    v: Vec<f64>,
    /// Restrict to these splits (default: every split)
    #[arg(long, value_delimiter = ',')]
    split: Vec<RealignSpec>,
    #[arg(long)]
    json: bool,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let criterion = args.criterion.selection().single()?;
            let (dm, source) = match (&args.state, args.family, args.param) {
                (Some(path), _, _) => {
                    let dm = load_state(path)?;
                    let source = StateSource {
                        family: None,
                        param: None,
                        path: Some(path.display().to_string()),
                        dims: dm.dims().to_vec(),
                    };
                    (dm, source)
                }
                (None, Some(family), Some(param)) => {
                    let dm = family.build(param)?;
                    let source = StateSource {
                        family: Some(family.name().to_string()),
                        param: Some(param),
                        path: None,
                        dims: dm.dims().to_vec(),
                    };
                    (dm, source)
                }
                _ => return Err(CliError::Usage("give either --state or --family with --param".into())),
            };
            let report = analyze(&dm, source, &criterion)?;
            let json = serde_json::to_string_pretty(&report).expect("report serializes");
            if args.json {
                writeln!(io::stdout(), "{json}")?;
            } else {
                writeln!(io::stdout(), "{report}")?;
            }
            if let Some(path) = args.out {
                std::fs::write(path, json + "\n")?;
            }
        }
        Command::Sweep(args) => {
            let criteria = args.criterion.selection().expand()?;
            let rows = sweep(args.family, &args.range, &criteria)?;
            match args.out {
                Some(path) => write_sweep_csv(&rows, BufWriter::new(File::create(path)?))?,
                None => write_sweep_csv(&rows, io::stdout().lock())?,
            }
        }
        Command::Threshold(args) => {
            let criterion = args.criterion.selection().single()?;
            let x = threshold(args.family, &criterion, args.bracket)?;
            writeln!(io::stdout(), "{x:.9}")?;
        }
        Command::Audit(args) => {
            let config = AuditConfig {
                dims: args.dims,
                num_states: args.num_states,
                num_terms: args.num_terms,
                seed: args.seed,
                criteria: args.criteria,
                a: args.a,
                u: args.u,
                v: args.v,
                splits: (!args.split.is_empty()).then_some(args.split),
            };
            let report = audit(&config)?;
            if args.json {
                writeln!(io::stdout(), "{}", serde_json::to_string_pretty(&report).expect("report serializes"))?;
            } else {
                write!(io::stdout(), "{report}")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // downstream closed the pipe (e.g. `| head`)
        Err(CliError::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
