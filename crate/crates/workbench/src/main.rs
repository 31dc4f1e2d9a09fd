use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eqprop_workbench::config::Scheme;
use eqprop_workbench::sweep::{grid, run_cell};
use eqprop_workbench::{characterize, emit_heatmap, run_sweep, ExperimentConfig, SweepResult};
use memristor_eqprop::device::DeviceKind;
use memristor_eqprop::solver::solve_free;

#[derive(Parser)]
#[command(name = "eqprop", about = "Memristive equilibrium propagation experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Overrides the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Base directory for run outputs.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Hysteresis loops of the configured device models.
    Characterize(Common),
    /// Trains a single grid cell and keeps its loss curve and final weights.
    Train {
        #[command(flatten)]
        common: Common,
        /// Defaults to the first model of the config.
        #[arg(long)]
        model: Option<DeviceKind>,
        /// R_OFF in ohms; defaults to the first value of the config.
        #[arg(long)]
        r_off: Option<f64>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long, value_parser = parse_scheme)]
        modulation: Option<Scheme>,
    },
    /// Trains the full grid and renders heatmaps.
    Sweep(Common),
    /// Re-renders heatmaps from a finished sweep.
    Heatmap(Common),
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "pwm" => Ok(Scheme::Pwm),
        "pam" => Ok(Scheme::Pam),
        _ => Err(format!("unknown modulation {s:?}, expected pwm or pam")),
    }
}

fn setup(common: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let mut config = ExperimentConfig::load(&common.config).with_context(|| format!("loading {}", common.config.display()))?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let dir = config.run_dir(&common.out);
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    fs::write(dir.join("config.toml"), toml::to_string(&config)?)?;
    Ok((config, dir))
}

fn render_heatmaps(result: &SweepResult, dir: &Path) -> Result<()> {
    for scheme in result.schemes() {
        for hidden in result.hidden_sizes() {
            let path = dir.join("heatmaps").join(format!("{scheme}_h{hidden}.csv"));
            emit_heatmap(result, hidden, scheme, &path)?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Characterize(common) => {
            let (config, dir) = setup(&common)?;
            let c = &config.characterize;
            let out = dir.join("characterize");
            for &model in &c.models {
                let m = characterize(model, c.amplitude.value(), c.frequencies(model), c.r_off.value(), c.steps_per_period, &out)
                    .with_context(|| format!("characterizing {model}"))?;
                println!(
                    "{model}: area {:.4e} W at {} Hz, {:.4e} W at {} Hz, pinch {:.2e}/{:.2e}, direction {:?}",
                    m.low.loop_area, m.low.frequency, m.high.loop_area, m.high.frequency, m.low.pinch_ratio, m.high.pinch_ratio, m.direction
                );
            }
        }
        Command::Train { common, model, r_off, hidden, modulation } => {
            let (config, dir) = setup(&common)?;
            let model = model.unwrap_or(config.models[0]);
            if !config.eta.contains_key(&model) {
                bail!("config has no learning rate for {model}");
            }
            let r_off = r_off.unwrap_or(config.r_off[0].value());
            let hidden = hidden.unwrap_or(config.hidden[0]);
            let modulation = modulation.unwrap_or(config.modulations[0]);
            let mut cell = grid(&config)[0];
            cell.model = model;
            cell.r_off = r_off;
            cell.hidden = hidden;
            cell.modulation = modulation;
            let dataset = config.load_dataset()?;
            let (result, network) = run_cell(&config, &dataset, &cell)?;
            let out = dir.join("train").join(cell.slug());
            fs::create_dir_all(&out)?;
            let history = memristor_eqprop::trainer::LossHistory { losses: result.losses.clone() };
            history.write_csv(BufWriter::new(File::create(out.join("loss.csv"))?))?;
            network.write_checkpoint(BufWriter::new(File::create(out.join("checkpoint.csv"))?))?;
            let state = solve_free(&network, &dataset.features[0])?;
            state.write_dump(BufWriter::new(File::create(out.join("equilibrium_sample0.csv"))?))?;
            println!("{cell}: min loss {:.4} ({} epochs) -> {}", result.min_loss, result.losses.len(), out.display());
        }
        Command::Sweep(common) => {
            let (config, dir) = setup(&common)?;
            let result = run_sweep(&config)?;
            let losses = dir.join("losses");
            fs::create_dir_all(&losses)?;
            for c in &result.cells {
                let history = memristor_eqprop::trainer::LossHistory { losses: c.losses.clone() };
                history.write_csv(BufWriter::new(File::create(losses.join(format!("{}.csv", c.cell.slug())))?))?;
            }
            serde_json::to_writer(BufWriter::new(File::create(dir.join("sweep.json"))?), &result)?;
            render_heatmaps(&result, &dir)?;
        }
        Command::Heatmap(common) => {
            let (config, dir) = setup(&common)?;
            let path = dir.join("sweep.json");
            let file = File::open(&path).with_context(|| format!("no finished sweep at {} (run `sweep` first)", path.display()))?;
            let result: SweepResult = serde_json::from_reader(std::io::BufReader::new(file))?;
            if result.seed != config.seed {
                bail!("{} was produced with seed {}", path.display(), result.seed);
            }
            render_heatmaps(&result, &dir)?;
        }
    }
    Ok(())
}
