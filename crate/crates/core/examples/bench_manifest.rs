//! Runs a small experiment grid from an in-memory manifest and writes the CSV
//! records, summary and wall-time chart to a temporary directory.

use astm::bench::{emit_outputs, run_experiment, summarize, ExperimentManifest, OutputFormat};
use astm::Result;

fn main() -> Result<()> {
    let manifest = ExperimentManifest::from_json(
        r#"{
            "id": "demo",
            "family": "euclidean",
            "p": 25,
            "gammas": [0.2, 0.05],
            "accuracies": [0.01],
            "solvers": ["pdastm", "pdastm-warm", "sinkhorn", "sinkhorn-log"],
            "repetitions": 2,
            "seed": 3
        }"#,
    )?;
    let records = run_experiment(&manifest)?;
    for s in summarize(&records) {
        println!("{:<13} gamma {:<5} ok {}/{} mean iterations {:.1}", s.solver.name(), s.gamma, s.ok_runs, s.runs, s.mean_iterations);
    }
    let dir = std::env::temp_dir().join("astm-bench-demo");
    for path in emit_outputs(&records, manifest.p, &dir, OutputFormat::All)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
