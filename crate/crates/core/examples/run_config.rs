//! Drives the command-line pipeline from code: loads the default profile and
//! runs every stage into a temporary directory.

use std::path::Path;

use jamming_game::cli;
use jamming_game::config::ExperimentConfig;

fn main() -> jamming_game::Result<()> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let mut cfg = ExperimentConfig::from_file(&path)?;
    let dir = std::env::temp_dir().join("jamming-game-run-config");
    cfg.output_dir = dir.display().to_string();
    cfg.learn.episodes = 5_000;

    let mut out = std::io::stdout().lock();
    cli::cmd_steady(&cfg, &mut out)?;
    cli::cmd_solve(&cfg, &mut out)?;
    let learn = cli::cmd_learn(&cfg, true, &mut out)?;
    cli::cmd_bayes(&cfg, &mut out)?;
    cfg.simulate.policies = Some(dir.join("oracle_policies.json").display().to_string());
    cli::cmd_simulate(&cfg, &mut out)?;

    println!("\nartifacts in {}", dir.display());
    let mut names: Vec<String> = std::fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect();
    names.sort();
    for n in names {
        println!("  {n}");
    }
    println!("gap to oracle after {} episodes: {:?}", learn.episodes, learn.oracle_gap);
    Ok(())
}
