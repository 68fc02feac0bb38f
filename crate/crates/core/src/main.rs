use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use aoi_arq::sim::{self, SimConfig, DEFAULT_WARMUP};
use aoi_arq::xp::{self, Pairing, PlotAxis, RunInfo, SweepSpec};
use aoi_arq::{analytic, Error, LinkParams, Scheme};

const EXIT_INVALID: u8 = 1;
const EXIT_DISAGREE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser)]
#[command(
    name = "aoi-arq",
    version,
    about = "Average Age of Information of one- and two-hop links with and without ARQ"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form and chain-solver average AoI with its renewal moments.
    Analytic {
        #[command(flatten)]
        link: LinkArgs,
    },
    /// Simulate one configuration and report renewal statistics.
    Simulate {
        #[command(flatten)]
        link: LinkArgs,
        #[arg(long)]
        horizon: u64,
        /// RNG seed of this run.
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_WARMUP)]
        warmup: usize,
    },
    /// Compare closed form, chain solver and simulation at one point; exits 2 beyond 3σ.
    Verify {
        #[command(flatten)]
        link: LinkArgs,
        #[arg(long)]
        horizon: u64,
        /// Base seed; the run uses the same derived seed a sweep would.
        #[arg(long)]
        seed: u64,
    },
    /// Evaluate a grid of points and write CSV / SVG.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct LinkArgs {
    #[arg(long)]
    scheme: Scheme,
    #[arg(long)]
    p1: Option<f64>,
    #[arg(long)]
    p2: Option<f64>,
    /// Single-hop success probability (alias of --p1 for single-hop schemes).
    #[arg(long)]
    q: Option<f64>,
}

impl LinkArgs {
    fn params(&self) -> Result<LinkParams, Error> {
        if self.scheme.is_two_hop() {
            match (self.p1, self.p2) {
                (Some(p1), Some(p2)) => LinkParams::new(p1, p2),
                _ => Err(Error::Config(format!(
                    "{} needs --p1 and --p2",
                    self.scheme
                ))),
            }
        } else {
            match self.q.or(self.p1) {
                Some(q) => LinkParams::single(q),
                None => Err(Error::Config(format!("{} needs --q", self.scheme))),
            }
        }
    }
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file with the sweep fields; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    #[arg(long, value_delimiter = ',')]
    p1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    p2: Option<Vec<f64>>,
    #[arg(long)]
    pairing: Option<Pairing>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replications: Option<u32>,
    #[arg(long)]
    warmup: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Plot axis; inferred from the grid when omitted.
    #[arg(long)]
    axis: Option<PlotAxis>,
}

impl SweepArgs {
    fn spec(&self) -> Result<SweepSpec, Error> {
        let mut spec = match &self.config {
            Some(path) => SweepSpec::from_toml(&std::fs::read_to_string(path)?)?,
            None => SweepSpec {
                schemes: vec![Scheme::TwoNonArq, Scheme::TwoArq],
                p1_values: xp::default_grid(),
                p2_values: xp::default_grid(),
                pairing: Pairing::Cartesian,
                horizon: 1_000_000,
                seed: 1,
                replications: 1,
                warmup: DEFAULT_WARMUP,
            },
        };
        if let Some(v) = &self.schemes {
            spec.schemes = v.clone();
        }
        if let Some(v) = &self.p1 {
            spec.p1_values = v.clone();
        }
        if let Some(v) = &self.p2 {
            spec.p2_values = v.clone();
        }
        if let Some(v) = self.pairing {
            spec.pairing = v;
        }
        if let Some(v) = self.horizon {
            spec.horizon = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.replications {
            spec.replications = v;
        }
        if let Some(v) = self.warmup {
            spec.warmup = v;
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn print(value: serde_json::Value) {
    println!(
        "{}",
        serde_json::to_string_pretty(&value).expect("JSON output")
    );
}

fn meta_path(csv: &Path) -> PathBuf {
    let mut name = csv.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Analytic { link } => {
            let params = link.params()?;
            let closed = analytic::aoi(link.scheme, params)?;
            let solver = xp::solver_aoi(link.scheme, params)?;
            let mut out = json!({
                "tool_version": format!("aoi-arq {}", aoi_arq::VERSION),
                "scheme": link.scheme,
                "params": params,
                "analytic": closed,
                "solver": solver,
            });
            if link.scheme.is_two_hop() {
                out["arq_gap"] = json!(analytic::aoi_gap(params)?);
            }
            print(out);
            Ok(ExitCode::SUCCESS)
        }
        Command::Simulate {
            link,
            horizon,
            seed,
            warmup,
        } => {
            let config = SimConfig::new(link.scheme, link.params()?, horizon, seed)?;
            let stats = sim::run(&config, warmup)?;
            let info = RunInfo::new(seed, horizon);
            print(json!({
                "run": info,
                "config": config,
                "warmup": warmup,
                "stats": stats,
            }));
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify {
            link,
            horizon,
            seed,
        } => {
            let params = link.params()?;
            let row = xp::verify(params, link.scheme, horizon, seed)?;
            let disagrees = row.disagrees();
            print(json!({
                "run": RunInfo::new(seed, horizon),
                "point_seed": xp::derive_seed(seed, link.scheme, params, 0),
                "row": row,
                "disagreement": disagrees,
            }));
            Ok(if disagrees {
                ExitCode::from(EXIT_DISAGREE)
            } else {
                ExitCode::SUCCESS
            })
        }
        Command::Sweep(args) => {
            let spec = args.spec()?;
            let info = spec.run_info();
            let rows = xp::run_sweep(&spec)?;

            if let Some(path) = &args.csv {
                xp::emit_csv(&rows, path)?;
                let meta = json!({ "run": info, "spec": spec });
                std::fs::write(
                    meta_path(path),
                    serde_json::to_string_pretty(&meta).expect("JSON") + "\n",
                )?;
            }
            if let Some(path) = &args.svg {
                let axis = match args.axis {
                    Some(axis) => axis,
                    None => {
                        PlotAxis::detect(&rows).ok_or(Error::MixedFixedParameter { axis: "any" })?
                    }
                };
                xp::emit_plot(&rows, axis, &info, path)?;
            }

            let failed: Vec<_> = rows.iter().filter(|r| r.error.is_some()).collect();
            for row in &failed {
                eprintln!(
                    "warning: {} at p1={} p2={}: {}",
                    row.scheme,
                    row.p1,
                    row.p2,
                    row.error.as_deref().unwrap_or_default()
                );
            }
            let disagreements = rows.iter().filter(|r| r.disagrees()).count();
            print(json!({
                "run": info,
                "points": rows.len(),
                "failed": failed.len(),
                "disagreements_beyond_3se": disagreements,
                "max_solver_deviation": rows
                    .iter()
                    .map(|r| (r.analytic_aoi - r.solver_aoi).abs())
                    .filter(|d| d.is_finite())
                    .fold(0.0, f64::max),
                "csv": args.csv,
                "svg": args.svg,
            }));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INVALID)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { EXIT_IO } else { EXIT_INVALID })
        }
    }
}
