//! Command-line front end for the simulator: run experiments, reproduce the
//! performance table, evaluate the optical throughput formula, and validate
//! netlist files.

use clap::{Args, Parser, Subcommand};
use ofwl_core::harness::{
    emit_report, emit_suite_table, run_experiment, run_suite, run_trials, ExperimentConfig,
    NetworkKind, ReportFormat, TaskSelector,
};
use ofwl_core::network::Netlist;
use ofwl_core::optics;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "ofwl",
    about = "Opto-electronic fixed-weight learning network simulator",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment configuration (optionally several trials).
    Run(RunArgs),
    /// Reproduce the performance-table suite across all networks.
    Suite(SuiteArgs),
    /// Evaluate the theoretical optical throughput formula.
    Throughput(ThroughputArgs),
    /// Validate a netlist JSON file and print diagnostics.
    Validate(ValidateArgs),
    /// Build a network and write its netlist JSON.
    Build(BuildArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config as a JSON file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Network to run: umult | plantran | boolean | sigma-and.
    #[arg(long)]
    network: Option<String>,
    /// Pulse-train length.
    #[arg(long)]
    np: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Signal-path quantization bits (0 = ideal, 8..=12 hardware).
    #[arg(long)]
    bits: Option<u8>,
    /// Detector noise standard deviation.
    #[arg(long)]
    sigma: Option<f64>,
    /// Embedded learning rate in W-units.
    #[arg(long)]
    eta: Option<f64>,
    /// Presentations per run.
    #[arg(long)]
    steps: Option<usize>,
    /// Task for Boolean runs: always-true, and, or, nand, nor, or ttXXXX.
    #[arg(long)]
    task: Option<String>,
    /// Independent tasks to run.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Report format: csv | json.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Report directory.
    #[arg(long, default_value = "ofwl-out")]
    out: PathBuf,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "ofwl-out")]
    out: PathBuf,
}

#[derive(Args)]
struct ThroughputArgs {
    /// Source count (lasers).
    #[arg(long, default_value_t = 256)]
    inputs: u64,
    /// Detector-pair count.
    #[arg(long, default_value_t = 256)]
    outputs: u64,
    /// Light path length through the mask, meters.
    #[arg(long, default_value_t = 1e-4)]
    delta_x: f64,
}

#[derive(Args)]
struct ValidateArgs {
    /// Netlist JSON file.
    file: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    /// Network to build: umult | plantran | boolean | sigma-and.
    #[arg(long)]
    network: String,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    train_seed: Option<u64>,
    /// Output netlist JSON path.
    #[arg(long)]
    out: PathBuf,
}

fn parse_network(name: &str) -> Result<NetworkKind, String> {
    match name {
        "umult" => Ok(NetworkKind::Umult),
        "plantran" => Ok(NetworkKind::Plantran),
        "boolean" => Ok(NetworkKind::Boolean),
        "sigma-and" => Ok(NetworkKind::SigmaAnd),
        other => Err(format!(
            "unknown network '{other}' (expected umult | plantran | boolean | sigma-and)"
        )),
    }
}

fn run_cmd(args: RunArgs) -> Result<(), String> {
    let mut cfg: ExperimentConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{path:?}: {e}"))?;
            serde_json::from_str(&text).map_err(|e| format!("{path:?}: {e}"))?
        }
        None => {
            let kind = parse_network(args.network.as_deref().unwrap_or("plantran"))?;
            ExperimentConfig::for_network(kind)
        }
    };
    if let (Some(name), Some(_)) = (&args.network, &args.config) {
        cfg.network = parse_network(name)?;
    }
    if let Some(np) = args.np {
        cfg.np = np;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(bits) = args.bits {
        cfg.quantization_bits = bits;
    }
    if let Some(sigma) = args.sigma {
        cfg.noise_sigma = sigma;
    }
    if let Some(eta) = args.eta {
        cfg.eta = eta;
    }
    if let Some(steps) = args.steps {
        cfg.max_steps = steps;
    }
    if let Some(task) = &args.task {
        cfg.task = TaskSelector::Function(task.clone());
    }

    let format = match args.format.as_str() {
        "csv" => ReportFormat::Csv,
        "json" => ReportFormat::Json,
        other => return Err(format!("unknown format '{other}'")),
    };

    let records = if args.trials > 1 {
        run_trials(&cfg, args.trials).map_err(|e| e.to_string())?
    } else {
        vec![run_experiment(&cfg).map_err(|e| e.to_string())?]
    };
    for r in &records {
        println!(
            "{} np={} task={} nc={} post_mse={}",
            r.config.network.as_str(),
            r.config.np,
            r.task_name,
            r.nc.map_or("n/a".into(), |n| n.to_string()),
            r.post_mse.map_or("n/a".into(), |p| format!("{p:.6}")),
        );
    }
    let written = emit_report(&records, format, &args.out).map_err(|e| e.to_string())?;
    println!("wrote {} files under {:?}", written.len(), args.out);
    Ok(())
}

fn suite_cmd(args: SuiteArgs) -> Result<(), String> {
    let report = run_suite(args.seed).map_err(|e| e.to_string())?;
    println!("label | network | np | trials | converged | nc~ | post_mse~");
    for row in &report.rows {
        println!(
            "{} | {} | {} | {} | {} | {} | {}",
            row.label,
            row.network,
            row.np,
            row.trials,
            row.converged,
            row.nc_median.map_or("n/a".into(), |v| format!("{v:.1}")),
            row.post_mse_median
                .map_or("n/a".into(), |v| format!("{v:.4}")),
        );
    }
    let table = emit_suite_table(&report, &args.out).map_err(|e| e.to_string())?;
    emit_report(&report.records, ReportFormat::Csv, &args.out).map_err(|e| e.to_string())?;
    println!("wrote {table:?} and per-run series under {:?}", args.out);
    let failed: Vec<&str> = report
        .rows
        .iter()
        .filter(|r| r.converged < r.trials && r.network != "umult" && r.network != "sigma-and")
        .map(|r| r.label.as_str())
        .collect();
    if !failed.is_empty() {
        return Err(format!("rows with unconverged runs: {failed:?}"));
    }
    Ok(())
}

fn throughput_cmd(args: ThroughputArgs) -> Result<(), String> {
    let rate = optics::throughput(args.inputs, args.outputs, args.delta_x)
        .map_err(|e| e.to_string())?;
    let dt = args.delta_x / optics::SPEED_OF_LIGHT;
    println!(
        "delta_t = {dt:.3e} s, throughput = {rate:.3e} operations/second ({} x {} weights)",
        args.inputs, args.outputs
    );
    Ok(())
}

fn validate_cmd(args: ValidateArgs) -> Result<(), String> {
    let text = std::fs::read_to_string(&args.file).map_err(|e| format!("{:?}: {e}", args.file))?;
    let net = Netlist::from_json(&text).map_err(|e| e.to_string())?;
    let diags = net.validate();
    println!(
        "{:?}: {} layers, {} neurons, {} synapses",
        args.file,
        net.layer_count(),
        net.neuron_count(),
        net.synapse_count(),
    );
    if diags.is_empty() {
        println!("valid");
        Ok(())
    } else {
        for d in &diags {
            println!("  - {d}");
        }
        Err(format!("{} diagnostics", diags.len()))
    }
}

fn build_cmd(args: BuildArgs) -> Result<(), String> {
    let kind = parse_network(&args.network)?;
    let mut cfg = ExperimentConfig::for_network(kind);
    if let Some(eta) = args.eta {
        cfg.eta = eta;
    }
    if let Some(seed) = args.train_seed {
        cfg.train_seed = seed;
    }
    let net = ofwl_core::harness::build_network(&cfg).map_err(|e| e.to_string())?;
    std::fs::write(&args.out, net.to_json().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    println!(
        "wrote {:?}: {} layers, {} neurons, {} synapses",
        args.out,
        net.layer_count(),
        net.neuron_count(),
        net.synapse_count()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_cmd(args),
        Command::Suite(args) => suite_cmd(args),
        Command::Throughput(args) => throughput_cmd(args),
        Command::Validate(args) => validate_cmd(args),
        Command::Build(args) => build_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
