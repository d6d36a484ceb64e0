use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rothe_cli::config::{self, Overrides};
use rothe_cli::{run, CliError};
use rothe_core::{compare, compute_metrics, io};

#[derive(Parser)]
#[command(name = "rothe", version, about = "Rothe time stepping on weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write CSV artifacts plus manifest.json
    Run {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Compare two trajectory CSVs on the configured graph and domain
    Compare {
        config: PathBuf,
        a: PathBuf,
        b: PathBuf,
        /// Comma-separated times (default: grid of the first trajectory)
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
    /// Load and check a configuration and every file it references
    ValidateConfig {
        config: PathBuf,
        #[command(flatten)]
        overrides: OverrideArgs,
    },
    /// Print size and metrics of a graph file
    GraphInfo { graph: PathBuf },
}

#[derive(Args, Default)]
struct OverrideArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Step counts, comma separated for a refinement study
    #[arg(long, value_delimiter = ',')]
    steps: Option<Vec<usize>>,
    /// Exhaustion levels, comma separated
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Initial field file
    #[arg(long)]
    initial: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Compare against the spectral (p = 1) or RK4 oracle
    #[arg(long)]
    compare_oracle: bool,
}

impl From<OverrideArgs> for Overrides {
    fn from(a: OverrideArgs) -> Self {
        Overrides {
            p: a.p,
            horizon: a.horizon,
            steps: a.steps,
            levels: a.levels,
            initial: a.initial.map(absolute),
            output: a.output.map(absolute),
            compare_oracle: a.compare_oracle,
        }
    }
}

fn absolute(p: PathBuf) -> PathBuf {
    std::path::absolute(&p).unwrap_or(p)
}

fn load(path: &Path, overrides: OverrideArgs) -> Result<config::Plan, CliError> {
    let (mut cfg, base) = config::load(path)?;
    if let Some(o) = cfg.output.take() {
        cfg.output = Some(if o.is_absolute() { o } else { base.join(o) });
    }
    cfg.apply(&overrides.into())?;
    config::validate(cfg, &base)
}

fn run_cmd(path: &Path, overrides: OverrideArgs) -> Result<(), CliError> {
    let plan = load(path, overrides)?;
    let Some(out) = plan.config.output.clone() else {
        return Err(CliError::Config("no output directory (set `output` or pass --output)".into()));
    };
    let mut art = run::execute(&plan)?;
    let manifest = run::manifest(&plan, &art);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    art.files.insert("manifest.json".into(), text.into_bytes());
    run::write_atomically(&out, &art.files)?;
    println!("wrote {} files to {}", art.files.len(), out.display());
    Ok(())
}

fn compare_cmd(path: &Path, a: &Path, b: &Path, times: Option<Vec<f64>>) -> Result<(), CliError> {
    let plan = load(path, OverrideArgs::default())?;
    let read = |p: &Path| {
        let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        io::parse_trajectory_csv(&text, &plan.domain).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))
    };
    let (ta, tb) = (read(a)?, read(b)?);
    let times = times.unwrap_or_else(|| ta.partition().grid());
    let table = compare(&ta, &tb, &times).map_err(|e| CliError::Solve(e.to_string()))?;
    print!("{}", io::error_table_csv(&table));
    eprintln!("max l2 {} max sup {}", table.max_l2(), table.max_sup());
    Ok(())
}

fn graph_info(path: &Path) -> Result<(), CliError> {
    let g = io::read_graph(path).map_err(|e| match e {
        rothe_core::Error::Io(m) => CliError::Io(m),
        e => CliError::Config(format!("{}: {e}", path.display())),
    })?;
    let all: Vec<usize> = (0..g.num_vertices()).collect();
    let m = compute_metrics(&g, &all).map_err(|e| CliError::Config(e.to_string()))?;
    println!("vertices {}", g.num_vertices());
    println!("edges {}", g.num_edges());
    println!("mu0 {}", m.mu0);
    println!("max_degree {}", m.max_degree);
    println!("d_mu {}", m.d_mu);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => run_cmd(&config, overrides),
        Command::Compare { config, a, b, times } => compare_cmd(&config, &a, &b, times),
        Command::ValidateConfig { config, overrides } => load(&config, overrides).map(|plan| {
            println!(
                "ok: {} on {} vertices ({} interior), config hash {}",
                plan.config.problem.name(),
                plan.graph.num_vertices(),
                plan.domain.num_interior(),
                plan.config.hash()
            );
        }),
        Command::GraphInfo { graph } => graph_info(&graph),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.tag(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
