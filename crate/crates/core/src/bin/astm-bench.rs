use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use astm::bench::{emit_outputs, read_records_csv, run_experiment, summarize, ExperimentManifest, InstanceFamily, OutputFormat};
use astm::bench::report::RECORDS_FILE;
use astm::oracles::io::{write_instance, Normalization};
use astm::Result;

const MANIFEST_COPY: &str = "manifest.json";

#[derive(Parser)]
#[command(name = "astm-bench", about = "Run transport-solver experiments and render their reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base seed; overrides the manifest's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv, svg or all.
    #[arg(long, global = true, default_value = "all")]
    format: OutputFormat,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a JSON manifest.
    Run { manifest: PathBuf },
    /// Write one instance (cost, marginals, JSON manifest) to files.
    Gen {
        #[arg(long, default_value = "euclidean")]
        family: String,
        #[arg(long, default_value_t = 16)]
        p: usize,
        #[arg(long, default_value_t = 0.1)]
        gamma: f64,
    },
    /// Re-render summary and charts from a directory holding records.csv.
    Report { dir: PathBuf },
}

fn parse_family(s: &str) -> Result<InstanceFamily> {
    Ok(serde_json::from_value(serde_json::Value::String(s.to_owned()))?)
}

fn print_summary(records: &[astm::bench::RunRecord]) {
    println!("{:<13} {:>10} {:>9} {:>6} {:>12} {:>12}", "solver", "gamma", "accuracy", "ok", "iterations", "seconds");
    for s in summarize(records) {
        println!(
            "{:<13} {:>10.4e} {:>9} {:>3}/{:<2} {:>12.1} {:>12.4e}",
            s.solver.name(),
            s.gamma,
            s.accuracy,
            s.ok_runs,
            s.runs,
            s.mean_iterations,
            s.mean_wall_seconds
        );
    }
}

fn run(cli: &Cli, manifest_path: &Path) -> Result<()> {
    let mut manifest = ExperimentManifest::from_json(&std::fs::read_to_string(manifest_path)?)?;
    if let Some(seed) = cli.seed {
        manifest.seed = seed;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| manifest.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&manifest.id));
    std::fs::create_dir_all(&out)?;
    let records = run_experiment(&manifest)?;
    std::fs::write(out.join(MANIFEST_COPY), serde_json::to_string_pretty(&manifest)?)?;
    for path in emit_outputs(&records, manifest.p, &out, cli.format)? {
        eprintln!("wrote {}", path.display());
    }
    print_summary(&records);
    Ok(())
}

fn gen(cli: &Cli, family: &str, p: usize, gamma: f64) -> Result<()> {
    let family = parse_family(family)?;
    let mut manifest = ExperimentManifest::new("gen", family, p, vec![gamma], vec![0.1], vec![astm::bench::SolverKind::Pdastm]);
    manifest.seed = cli.seed.unwrap_or(0);
    manifest.smoothing = if family == InstanceFamily::RandomImages { 1e-6 } else { 0.0 };
    manifest.validate()?;
    let inst = manifest.instance(0, gamma)?;
    let out = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out)?;
    let stem = format!("{}_p{p}_seed{}", serde_json::to_value(family)?.as_str().unwrap_or("instance"), manifest.seed);
    // Costs are written already normalized, so the file manifest records no further scaling.
    let path = write_instance(&out, &stem, &inst, Normalization::None)?;
    println!("{}", path.display());
    Ok(())
}

fn report(cli: &Cli, dir: &Path) -> Result<()> {
    let records = read_records_csv(&dir.join(RECORDS_FILE))?;
    let manifest = ExperimentManifest::from_json(&std::fs::read_to_string(dir.join(MANIFEST_COPY))?)?;
    let out = cli.out.clone().unwrap_or_else(|| dir.to_path_buf());
    for path in emit_outputs(&records, manifest.p, &out, cli.format)? {
        eprintln!("wrote {}", path.display());
    }
    print_summary(&records);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { manifest } => run(&cli, manifest),
        Command::Gen { family, p, gamma } => gen(&cli, family, *p, *gamma),
        Command::Report { dir } => report(&cli, dir),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
