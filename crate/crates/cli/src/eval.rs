use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use inae_core::metrics::linear_svm;
use inae_core::model::load_model;
use inae_core::trainer::encode_stack;
use inae_core::{build_graph, c_ratio, fisher_eig, n_ratio, Dataset, GraphConfig, MetricsReport, ModelParams};
use ndarray::Array2;
use rayon::prelude::*;

use crate::config::{EvalConfig, LoadedConfig};
use crate::error::{CliError, CliResult};
use crate::svg;
use crate::train::{checkpoint_name, layer_name, MethodArg, RunManifest, MANIFEST};

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(short, long)]
    pub config: PathBuf,
    /// Run directory written by `train`; metrics and plots go here too.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Evaluate these model files instead of the run directory's checkpoints.
    #[arg(long)]
    pub model: Vec<PathBuf>,
    /// Also write an SVG scatter of the first two hidden dims per model.
    #[arg(long)]
    pub plot: bool,
}

/// A model to evaluate: one or more layers applied in order.
struct Candidate {
    id: String,
    t: usize,
    layers: Vec<ModelParams>,
    plot_name: String,
}

fn load(path: &Path) -> CliResult<ModelParams> {
    load_model(path)
        .map(|(p, _)| p)
        .map_err(|e| CliError::Usage(format!("cannot load model {}: {e}", path.display())))
}

fn discover(dir: &Path, explicit: &[PathBuf]) -> CliResult<Vec<Candidate>> {
    if !explicit.is_empty() {
        return explicit
            .iter()
            .map(|p| {
                let id = p.file_stem().map_or("model".into(), |s| s.to_string_lossy().into_owned());
                Ok(Candidate {
                    plot_name: format!("scatter_{id}.svg"),
                    id,
                    t: 0,
                    layers: vec![load(p)?],
                })
            })
            .collect();
    }
    let text = fs::read_to_string(dir.join(MANIFEST)).map_err(|e| {
        CliError::Usage(format!("no {MANIFEST} in {}: {e}; run `inae train` first", dir.display()))
    })?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("invalid {MANIFEST}: {e}")))?;
    if manifest.method == MethodArg::Stack {
        let mut layers = Vec::new();
        let mut out = Vec::new();
        for l in 1..=manifest.layers {
            layers.push(load(&dir.join(layer_name(l)))?);
            out.push(Candidate {
                id: format!("stack_l{l}"),
                t: manifest.iterations,
                layers: layers.clone(),
                plot_name: format!("scatter_l{l}.svg"),
            });
        }
        Ok(out)
    } else {
        let id = serde_json::to_value(manifest.method)
            .ok()
            .and_then(|v| v.as_str().map(str::to_owned))
            .unwrap_or_default();
        (0..=manifest.iterations)
            .map(|t| {
                Ok(Candidate {
                    id: id.clone(),
                    t,
                    layers: vec![load(&dir.join(checkpoint_name(t)))?],
                    plot_name: format!("scatter_t{t}.svg"),
                })
            })
            .collect()
    }
}

fn check_dims(c: &Candidate, d: usize) -> CliResult<()> {
    let mut expected = d;
    for (l, p) in c.layers.iter().enumerate() {
        if p.input_dim() != expected {
            return Err(CliError::Usage(format!(
                "model {} (layer {}) expects {} inputs but the data has {expected} features",
                c.id,
                l + 1,
                p.input_dim()
            )));
        }
        expected = p.hidden_dim();
    }
    Ok(())
}

/// Metrics for one feature representation of the training and test sets.
pub fn evaluate_features(
    id: &str,
    t: usize,
    h_train: Array2<f64>,
    train_labels: &[usize],
    h_test: &Array2<f64>,
    test_labels: &[usize],
    graph: &GraphConfig,
    eval: &EvalConfig,
) -> CliResult<MetricsReport> {
    let fisher = fisher_eig(h_train.view(), train_labels, eval.fisher_ridge)?;
    let class_error = linear_svm(h_train.view(), train_labels, h_test.view(), test_labels, eval.svm_reg)?;
    let ds = Dataset::new(h_train, Some(train_labels.to_vec()))?;
    let g = build_graph(&ds, graph)?;
    Ok(MetricsReport {
        model_id: id.to_string(),
        t,
        n_ratio: n_ratio(&g, train_labels, graph.k)?,
        c_ratio: c_ratio(&g, train_labels)?,
        class_error,
        fisher_eig: fisher,
    })
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let cfg = LoadedConfig::load(&args.config)?;
    let dir = cfg.output_dir(args.output.as_deref())?;
    let candidates = discover(&dir, &args.model)?;
    if args.plot {
        if let Some(c) = candidates.iter().find(|c| c.layers.last().is_some_and(|p| p.hidden_dim() < 2)) {
            return Err(CliError::Usage(format!(
                "need ≥ 2 hidden dims to scatter (model {} has 1)",
                c.id
            )));
        }
    }

    let (train_set, test_set) = cfg.load_data()?;
    for c in &candidates {
        check_dims(c, train_set.feature_dim())?;
    }
    let test_set = test_set.unwrap_or_else(|| {
        log::warn!("no test set configured; class_error is measured on the training set");
        train_set.clone()
    });
    let missing = || CliError::Usage("evaluation needs labelled data".into());
    let train_labels = train_set.labels.as_deref().ok_or_else(missing)?;
    let test_labels = test_set.labels.as_deref().ok_or_else(missing)?;
    let graph = cfg.run.eval.graph.unwrap_or(cfg.run.train.graph);
    let eval = &cfg.run.eval;

    let mut rows = Vec::new();
    if eval.baseline {
        rows.push(evaluate_features(
            "raw",
            0,
            train_set.samples.clone(),
            train_labels,
            &test_set.samples,
            test_labels,
            &graph,
            eval,
        )?);
    }
    let evaluated: Vec<(MetricsReport, Option<String>)> = candidates
        .par_iter()
        .map(|c| {
            let h_train = encode_stack(&c.layers, train_set.samples.view())?;
            let h_test = encode_stack(&c.layers, test_set.samples.view())?;
            let title = format!("{} t = {}", c.id, c.t);
            let plot = args
                .plot
                .then(|| svg::scatter(h_train.view(), Some(train_labels), &title))
                .flatten();
            let row = evaluate_features(&c.id, c.t, h_train, train_labels, &h_test, test_labels, &graph, eval)?;
            Ok((row, plot))
        })
        .collect::<CliResult<_>>()?;

    fs::create_dir_all(&dir)?;
    for (c, (row, plot)) in candidates.iter().zip(evaluated) {
        if let Some(svg) = plot {
            fs::write(dir.join(&c.plot_name), svg)?;
        }
        rows.push(row);
    }

    let mut csv = String::from(MetricsReport::CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    fs::write(dir.join("metrics.csv"), csv)?;

    let mut table = format!(
        "{:<10} {:>3} {:>8} {:>8} {:>9} {:>12}\n",
        "model", "t", "N_ratio", "C_ratio", "error %", "eig (x1e-2)"
    );
    for r in &rows {
        writeln!(
            table,
            "{:<10} {:>3} {:>8.4} {:>8.4} {:>9.2} {:>12.4}",
            r.model_id,
            r.t,
            r.n_ratio,
            r.c_ratio,
            100.0 * r.class_error,
            r.fisher_eig / 100.0
        )
        .unwrap();
    }
    print!("{table}");
    Ok(())
}
