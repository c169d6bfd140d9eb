use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use inae_core::model::save_model;
use inae_core::trainer::{stack_with_traces, train_with_observer, TrainTrace};
use inae_core::{LossKind, Method, ModelParams, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::config::LoadedConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Ae,
    Dae,
    Inae,
    /// Greedy layer-wise stack of incremental auto-encoders.
    Stack,
}

impl MethodArg {
    fn as_str(self) -> &'static str {
        match self {
            MethodArg::Ae => "ae",
            MethodArg::Dae => "dae",
            MethodArg::Inae => "inae",
            MethodArg::Stack => "stack",
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(short, long)]
    pub config: PathBuf,
    /// Output directory; overrides `output_dir`.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Overrides the training seed of every layer.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = MethodArg::Inae)]
    pub method: MethodArg,
}

/// Written next to the models so `eval` knows how to read the directory.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub method: MethodArg,
    pub iterations: usize,
    pub layers: usize,
}

pub const MANIFEST: &str = "run.json";

pub fn checkpoint_name(t: usize) -> String {
    format!("checkpoint_t{t}.json")
}

pub fn layer_name(l: usize) -> String {
    format!("layer_{l}.json")
}

pub fn run(args: &TrainArgs) -> CliResult<()> {
    let cfg = LoadedConfig::load(&args.config)?;
    let out = cfg.output_dir(args.output.as_deref())?;
    if args.method != MethodArg::Inae && args.method != MethodArg::Stack {
        let in_layers = cfg.raw.get("layers").and_then(|l| l.as_array()).is_some_and(|ls| {
            ls.iter().any(|l| l.get("alpha").is_some())
        });
        if cfg.train_sets_key("alpha") || in_layers {
            eprintln!(
                "warning: alpha is ignored for --method {}",
                args.method.as_str()
            );
        }
    }

    let mut layer_cfgs: Vec<TrainConfig> = std::iter::once(cfg.run.train.clone())
        .chain(cfg.run.layers.iter().cloned())
        .collect();
    if let Some(seed) = args.seed {
        for c in &mut layer_cfgs {
            c.seed = seed;
        }
    }
    for c in &layer_cfgs {
        c.validate().map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
    }

    let (train_set, _) = cfg.load_data()?;
    fs::create_dir_all(&out)?;

    let manifest = match args.method {
        MethodArg::Stack => {
            if layer_cfgs.len() < 2 {
                return Err(CliError::Usage("--method stack needs at least one entry in `layers`".into()));
            }
            let layers = stack_with_traces(&train_set, &layer_cfgs, Method::Inae)?;
            for (l, ((params, trace), c)) in layers.iter().zip(&layer_cfgs).enumerate() {
                save_model(params, c.loss, out.join(layer_name(l + 1)))?;
                fs::write(out.join(format!("trace_layer_{}.csv", l + 1)), trace.to_csv())?;
                report(&format!("layer {}", l + 1), trace);
            }
            RunManifest {
                method: args.method,
                iterations: layer_cfgs[0].iterations,
                layers: layers.len(),
            }
        }
        m => {
            let method = match m {
                MethodArg::Ae => Method::Ae,
                MethodArg::Dae => Method::Dae,
                _ => Method::Inae,
            };
            let c = &layer_cfgs[0];
            let (params, trace) = train_with_observer(&train_set, c, method, &mut |cp| {
                save_model(cp.params, c.loss, out.join(checkpoint_name(cp.t)))?;
                fs::write(out.join(format!("trace_t{}.csv", cp.t)), cp.trace.to_csv())?;
                Ok(())
            })?;
            write_final(&out, &params, c.loss, &trace)?;
            report(m.as_str(), &trace);
            RunManifest {
                method: m,
                iterations: c.iterations,
                layers: 1,
            }
        }
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(out.join(MANIFEST), text + "\n")?;
    Ok(())
}

fn write_final(out: &Path, params: &ModelParams, loss: LossKind, trace: &TrainTrace) -> CliResult<()> {
    save_model(params, loss, out.join("model.json"))?;
    fs::write(out.join("trace.csv"), trace.to_csv())?;
    let mut s = String::from("t,objective_start,objective_end,phi_end,recon_end\n");
    for r in &trace.iterations {
        writeln!(
            s,
            "{},{},{},{},{}",
            r.t, r.objective_start, r.objective_end, r.phi_end, r.recon_end
        )
        .unwrap();
    }
    fs::write(out.join("iterations.csv"), s)?;
    Ok(())
}

fn report(name: &str, trace: &TrainTrace) {
    for r in &trace.iterations {
        log::info!("{name}: t={} took {:.2?}", r.t, r.wall_clock);
    }
    if let Some(last) = trace.epochs.last() {
        println!(
            "{name}: {} epochs, recon {:.6}, phi {:.6}, objective {:.6}",
            last.epoch, last.recon_loss, last.phi, last.total
        );
    }
}
