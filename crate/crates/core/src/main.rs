use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use signal_lab::controller::ControllerKind;
use signal_lab::harness::{
    emit_results, recover_dump, run_experiment, run_sweep, throughput_rate_analysis, write_json, CellResult,
    EpisodeMetrics, Experiment, LoadedScenario, NoiseSpec, Scenario,
};
use signal_lab::nn::Checkpoint;
use signal_lab::sensing::NoiseKind;
use signal_lab::{Error, Result};

#[derive(Parser)]
#[command(name = "signal-lab", version, about = "Fuzzy traffic signal control experiments on a grid simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "gaussian")]
    noise: NoiseKind,
    /// Training rounds for learned controllers (default: scenario setting)
    #[arg(long)]
    rounds: Option<usize>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate controllers over seeds and noise scales
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "fuzzylight")]
        controller: Vec<ControllerKind>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long = "noise-scale", value_delimiter = ',', default_value = "0")]
        noise_scale: Vec<f64>,
    },
    /// Train one learned controller and save its weights
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "fuzzylight")]
        controller: ControllerKind,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long = "noise-scale", default_value_t = 0.0)]
        noise_scale: f64,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Evaluate a saved model on another scenario
    Transfer {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "fuzzylight")]
        controller: ControllerKind,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long = "noise-scale", default_value_t = 0.0)]
        noise_scale: f64,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Native travel time on the target; trained natively when absent
        #[arg(long)]
        native_att: Option<f64>,
    },
    /// Train once per seed, then evaluate frozen across noise scales
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "fuzzylight")]
        controller: ControllerKind,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        #[arg(long = "noise-scale", value_delimiter = ',', default_value = "0,0.5,1,3,5")]
        noise_scale: Vec<f64>,
        #[arg(long = "train-noise-scale", default_value_t = 0.0)]
        train_noise_scale: f64,
        /// Also vary the reference duration (seconds)
        #[arg(long, value_delimiter = ',')]
        refer: Vec<f64>,
        /// Also vary the effective sensing range (metres)
        #[arg(long = "effective-range", value_delimiter = ',')]
        effective_range: Vec<f64>,
    },
    /// Dump occupancy, measurements and recoveries for plotting
    RecoverDump {
        #[command(flatten)]
        common: Common,
        #[arg(long = "noise-scale", default_value_t = 1.0)]
        noise_scale: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        intersection: usize,
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Enumerate the phase-pair throughput rate bound
    ThroughputRate {
        #[arg(long, default_value_t = 1)]
        low: u32,
        #[arg(long, default_value_t = 50)]
        high: u32,
    },
}

fn load(common: &Common, rounds_override: &mut usize) -> Result<LoadedScenario> {
    let sc = LoadedScenario::from_path(&common.scenario)?;
    *rounds_override = common.rounds.unwrap_or(sc.scenario.training.rounds);
    Ok(sc)
}

fn print_cells(cells: &[CellResult]) {
    println!("controller\tnoise\tseed\tATT\tstd\tthroughput\tstops");
    for c in cells {
        println!(
            "{}\t{}:{}\t{}\t{:.2}\t{:.2}\t{:.1}\t{:.1}",
            c.controller, c.noise_kind, c.noise_scale, c.seed, c.att_mean, c.att_std, c.throughput_mean, c.stops_mean
        );
    }
}

fn finish(out: &Path, cells: &[CellResult], rows: &[EpisodeMetrics]) -> Result<()> {
    print_cells(cells);
    let summary = emit_results(out, cells, rows)?;
    for g in &summary.groups {
        println!(
            "summary {} {}:{} ATT {:.2} ± {:.2} over {} seeds",
            g.controller, g.noise_kind, g.noise_scale, g.att_mean, g.att_std, g.seeds
        );
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let mut rounds = 0;
    match cli.command {
        Command::Run {
            common,
            controller,
            seeds,
            noise_scale,
        } => {
            let sc = load(&common, &mut rounds)?;
            let noises: Vec<NoiseSpec> = noise_scale
                .iter()
                .map(|&scale| NoiseSpec {
                    kind: common.noise,
                    scale,
                })
                .collect();
            let (cells, rows) = run_experiment(&sc, &controller, &seeds, &noises, rounds)?;
            finish(&common.out, &cells, &rows)
        }
        Command::Train {
            common,
            controller,
            seed,
            noise_scale,
            checkpoint,
        } => {
            if !controller.is_learned() {
                return Err(Error::InvalidInput(format!("{controller} has nothing to train")));
            }
            let sc = load(&common, &mut rounds)?;
            let exp = Experiment::new(&sc);
            let noise = NoiseSpec {
                kind: common.noise,
                scale: noise_scale,
            };
            let (cell, rows, model) = exp.run_cell(controller, seed, noise, rounds)?;
            let agent = model.as_ref().and_then(|m| m.agent()).expect("learned controllers carry an agent");
            agent.checkpoint().save(&checkpoint)?;
            println!("saved {}", checkpoint.display());
            finish(&common.out, &[cell], &rows)
        }
        Command::Transfer {
            common,
            controller,
            seeds,
            noise_scale,
            checkpoint,
            native_att,
        } => {
            let sc = load(&common, &mut rounds)?;
            let exp = Experiment::new(&sc);
            let noise = NoiseSpec {
                kind: common.noise,
                scale: noise_scale,
            };
            let ck = Checkpoint::load(&checkpoint)?;
            let (t_train, mut cells, mut rows) = match native_att {
                Some(t) => (t, Vec::new(), Vec::new()),
                None => {
                    let (cells, rows) = run_experiment(&sc, &[controller], &seeds, &[noise], rounds)?;
                    let t = cells.iter().map(|c| c.att_mean).sum::<f64>() / cells.len() as f64;
                    (t, cells, rows)
                }
            };
            let (report, transferred) = exp.transfer(controller, &ck, &seeds, noise, t_train)?;
            for c in &transferred {
                let mut c = c.clone();
                c.controller = format!("{}+transfer", c.controller);
                cells.push(c);
            }
            rows.clear();
            println!(
                "t_train {:.2}  t_transfer {:.2}  v_transfer {:+.4}",
                report.t_train, report.t_transfer, report.v_transfer
            );
            write_json(&common.out.join("transfer.json"), &report)?;
            finish(&common.out, &cells, &rows)
        }
        Command::Sweep {
            common,
            controller,
            seeds,
            noise_scale,
            train_noise_scale,
            refer,
            effective_range,
        } => {
            let base = Scenario::load(&common.scenario)?;
            rounds = common.rounds.unwrap_or(base.training.rounds);
            let mut variants = vec![base.clone()];
            for r in &refer {
                let mut v = base.clone();
                v.name = format!("{}@refer={r}", base.name);
                v.training.refer_duration = Some(*r);
                variants.push(v);
            }
            for er in &effective_range {
                let mut v = base.clone();
                v.name = format!("{}@er={er}", base.name);
                v.sensing.effective_range = *er;
                variants.push(v);
            }
            if !refer.is_empty() || !effective_range.is_empty() {
                variants.remove(0);
            }
            let sweep: Vec<NoiseSpec> = noise_scale
                .iter()
                .map(|&scale| NoiseSpec {
                    kind: common.noise,
                    scale,
                })
                .collect();
            let train = NoiseSpec {
                kind: common.noise,
                scale: train_noise_scale,
            };
            let mut all_cells = Vec::new();
            let mut all_rows = Vec::new();
            for v in variants {
                let sc = v.build()?;
                let (cells, rows) = run_sweep(&sc, controller, &seeds, train, &sweep, rounds)?;
                all_cells.extend(cells);
                all_rows.extend(rows);
            }
            finish(&common.out, &all_cells, &all_rows)
        }
        Command::RecoverDump {
            common,
            noise_scale,
            seed,
            intersection,
            count,
        } => {
            let sc = load(&common, &mut rounds)?;
            let exp = Experiment::new(&sc);
            let noise = NoiseSpec {
                kind: common.noise,
                scale: noise_scale,
            };
            let dump = recover_dump(&exp, intersection, noise, seed, count)?;
            if !common.out.is_dir() {
                return Err(Error::InvalidInput(format!("{} is not a directory", common.out.display())));
            }
            let path = common.out.join("recovery.json");
            write_json(&path, &dump)?;
            let exact = dump.samples.iter().filter(|s| s.exact).count();
            println!("{} samples, {exact} exact, written to {}", dump.samples.len(), path.display());
            Ok(())
        }
        Command::ThroughputRate { low, high } => {
            let r = throughput_rate_analysis(low, high)?;
            println!(
                "{} pairs in {}..={}: rate in [{}, {}], {} outside [1, 2]",
                r.pairs,
                r.low,
                r.high,
                r.min_rate,
                r.max_rate,
                r.violations.len()
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
