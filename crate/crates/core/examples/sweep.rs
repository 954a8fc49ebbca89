//! Runs the bundled sweep config and writes its CSV and charts to a
//! temporary directory.

use std::path::Path;

use mgx::expcli::{emit_plots, run_sweep, ExperimentConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs/tabular_sweep.toml");
    let cfg = ExperimentConfig::load(&config)?;
    let out = std::env::temp_dir().join("mgx-sweep-example");
    std::fs::create_dir_all(&out)?;
    let outcome = run_sweep(&cfg, Some(&out.join(cfg.output.csv_name())))?;
    println!("{} rows ({} resumed, {} failed)", outcome.rows.len(), outcome.resumed, outcome.failures);
    for path in emit_plots(&outcome.rows, &out.join(cfg.output.figures_name()))? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
