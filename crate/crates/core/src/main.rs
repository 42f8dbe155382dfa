use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use flowsketch::bench::{aggregate, read_rows, run_experiment, run_grid, write_rows, write_series, Figure, GridSpec};
use flowsketch::model::{model, model_vs_simulation};
use flowsketch::traffic::{create_output, generate_trace, write_records, write_trace, Interleaving, Preset, SyntheticSpec};
use flowsketch::{Error, Layout, Result};

#[derive(Parser)]
#[command(name = "flowsketch", version, about = "Flow-record sketches and their benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a seeded synthetic trace as CSV.
    Generate {
        #[arg(long)]
        flows: usize,
        /// Traffic mix; --zipf and --cap override its parameters.
        #[arg(long, default_value = "backbone")]
        preset: Preset,
        #[arg(long)]
        zipf: Option<f64>,
        #[arg(long)]
        cap: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Order::Shuffled)]
        order: Order,
        /// Trace file, `-` for stdout.
        #[arg(long, default_value = "-")]
        out: PathBuf,
        /// Also write the per-flow ground truth here.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Tabulate the main-table utilization model, optionally against simulation.
    Model {
        #[arg(long, value_enum, default_value_t = LayoutArg::Pipelined)]
        layout: LayoutArg,
        /// Flows offered (comma list).
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        /// Main-table buckets.
        #[arg(long)]
        n: usize,
        /// Probe depths (comma list).
        #[arg(long, value_delimiter = ',', default_value = "3")]
        d: Vec<usize>,
        /// Pipeline weights (comma list), pipelined layout only.
        #[arg(long, value_delimiter = ',', default_value = "0.7")]
        alpha: Vec<f64>,
        /// Simulation runs per point; 0 skips simulation.
        #[arg(long, default_value_t = 0)]
        simulate: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
    /// Run the single experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every experiment in a config file's grid.
    Grid {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads; overrides the config, 0 means one per core.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Aggregate a results CSV into mean/std series for one figure.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        fig: Figure,
        #[arg(long, default_value = "-")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Order {
    Shuffled,
    Sorted,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum LayoutArg {
    Multihash,
    Pipelined,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // The reader went away (e.g. `| head`); nothing left to report.
        Err(e) if is_broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(e: &Error) -> bool {
    let io = match e {
        Error::Io(io) => io,
        Error::Csv(c) => match c.kind() {
            csv::ErrorKind::Io(io) => io,
            _ => return false,
        },
        _ => return false,
    };
    io.kind() == std::io::ErrorKind::BrokenPipe
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            flows,
            preset,
            zipf,
            cap,
            seed,
            order,
            out,
            truth,
        } => {
            let mut spec = SyntheticSpec::preset(preset, flows, seed);
            spec.zipf_exponent = zipf.unwrap_or(spec.zipf_exponent);
            spec.max_flow_size = cap.unwrap_or(spec.max_flow_size);
            spec.interleaving = match order {
                Order::Shuffled => Interleaving::Shuffled,
                Order::Sorted => Interleaving::Sorted,
            };
            let (events, gt) = generate_trace(&spec)?;
            write_trace(create_output(&out)?, &events)?;
            if let Some(path) = truth {
                write_records(create_output(&path)?, &gt.records())?;
            }
            Ok(())
        }
        Command::Model {
            layout,
            m,
            n,
            d,
            alpha,
            simulate,
            seed,
            out,
        } => model_table(layout, &m, n, &d, &alpha, simulate, seed, &out),
        Command::Run { config, out } => {
            let spec = load_grid(&config)?;
            let configs = spec.expand();
            if configs.len() != 1 {
                return Err(Error::Config(format!(
                    "{} describes {} experiments; use `grid` for sweeps",
                    config.display(),
                    configs.len()
                )));
            }
            let report = run_experiment(&configs[0])?;
            eprintln!(
                "{}: {} flows, {} packets, {} records, fsc {:.4}, are {:.4}",
                configs[0].algorithm, report.n_flows, report.packets, report.records_reported, report.fsc, report.are
            );
            write_rows(create_output(&out_path(out, &spec))?, &report.rows())
        }
        Command::Grid { config, out, jobs } => {
            let spec = load_grid(&config)?;
            let configs = spec.expand();
            let outcome = run_grid(&configs, jobs.unwrap_or(spec.parallelism))?;
            write_rows(create_output(&out_path(out, &spec))?, &outcome.rows)?;
            for (c, r) in &outcome.runs {
                if let Err(e) = r {
                    eprintln!("warning: {} seed {} failed: {e}", c.algorithm, c.seed);
                }
            }
            eprintln!("{} experiments, {} failed", outcome.runs.len(), outcome.failures());
            Ok(())
        }
        Command::Report { input, fig, out } => {
            let file = fs::File::open(&input).map_err(|source| Error::Open {
                path: input.clone(),
                source,
            })?;
            let rows = read_rows(file)?;
            write_series(create_output(&out)?, &aggregate(&rows, fig))
        }
    }
}

fn load_grid(path: &Path) -> Result<GridSpec> {
    let text = fs::read_to_string(path).map_err(|source| Error::Open {
        path: path.to_path_buf(),
        source,
    })?;
    let mut spec = GridSpec::parse(&text, &path.display().to_string())?;
    spec.apply_seed_override()?;
    Ok(spec)
}

fn out_path(flag: Option<PathBuf>, spec: &GridSpec) -> PathBuf {
    flag.or_else(|| spec.output.clone()).unwrap_or_else(|| PathBuf::from("-"))
}

#[allow(clippy::too_many_arguments)]
fn model_table(
    layout: LayoutArg,
    ms: &[usize],
    n: usize,
    ds: &[usize],
    alphas: &[f64],
    simulate: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let layouts: Vec<Layout> = match layout {
        LayoutArg::Multihash => vec![Layout::MultiHash],
        LayoutArg::Pipelined => alphas.iter().map(|&alpha| Layout::Pipelined { alpha }).collect(),
    };
    let mut w = csv::Writer::from_writer(create_output(out)?);
    w.write_record([
        "layout",
        "m",
        "n",
        "d",
        "alpha",
        "k",
        "p_k",
        "utilization",
        "simulated_mean",
        "simulated_std",
    ])?;
    for &layout in &layouts {
        for &m in ms {
            for &d in ds {
                let (predicted, sim) = if simulate > 0 {
                    let cmp = model_vs_simulation(layout, m, n, d, simulate, seed)?;
                    (cmp.model.clone(), Some((cmp.mean, cmp.std_dev)))
                } else {
                    (model(layout, m as f64, n as f64, d)?, None)
                };
                let alpha = layout.alpha().map(|a| a.to_string()).unwrap_or_default();
                let (mean, std) = sim.map_or((String::new(), String::new()), |(a, b)| (a.to_string(), b.to_string()));
                for (k, p) in predicted.empty_probs.iter().enumerate() {
                    w.write_record([
                        layout.name().to_string(),
                        m.to_string(),
                        n.to_string(),
                        d.to_string(),
                        alpha.clone(),
                        (k + 1).to_string(),
                        p.to_string(),
                        predicted.utilization.to_string(),
                        mean.clone(),
                        std.clone(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
