//! Training loops: plain and denoising auto-encoders, the incremental
//! auto-encoder, and greedy layer-wise stacking.
//!
//! The incremental loop alternates parameter fits and feature snapshots,
//! `H⁰ → θ₁ → H¹ → … → θ_T`. Iteration `t` minimizes
//!
//! ```text
//! J_t(θ) = mean reconstruction loss + α · Φ(encode(θ, X̃), Hᵗ⁻¹) / N
//! ```
//!
//! by mini-batch SGD, where `N = n·m` is the number of corrupted columns
//! and `Φ(H, P) = ‖H − P‖²_F + dt·tr(H L Hᵀ)`.
//!
//! Mini-batch gradients of the trace term need `(H L)_m` for the batch
//! columns, which couples each column to its graph neighbors. Neighbor
//! features come from a cache of the most recent encoding of every column:
//! it starts at `Hᵗ⁻¹` (which equals the encoding under the current
//! parameters) and batch columns are refreshed as they are visited. With a
//! full batch the estimate is the exact gradient.

use std::time::{Duration, Instant};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{corrupt, CorruptionSpec, Dataset};
use crate::error::{InaeError, Result};
use crate::graph::{build_graph, expand_to_copies, GraphConfig, SimilarityMatrix};
use crate::model::{backward, encode, forward_with_targets, Gradients, LossKind, ModelParams};

/// Halvings of the learning rate allowed after non-finite losses.
pub const MAX_DIVERGENCE_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ae,
    Dae,
    Inae,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Ae => "ae",
            Method::Dae => "dae",
            Method::Inae => "inae",
        }
    }
}

fn default_iterations() -> usize {
    5
}
fn default_epochs_per_iteration() -> usize {
    20
}
fn default_warm_epochs() -> usize {
    5
}
fn default_alpha() -> f64 {
    0.1
}
fn default_dt() -> f64 {
    1.0
}
fn default_learning_rate() -> f64 {
    0.1
}
fn default_batch_size() -> usize {
    20
}
fn default_copies() -> usize {
    1
}
fn default_corruption() -> CorruptionSpec {
    CorruptionSpec::none()
}
fn default_loss() -> LossKind {
    LossKind::Squared
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    /// Expected input dimension; checked against the data when present.
    #[serde(default)]
    pub input_dim: Option<usize>,
    /// Number of outer updates `T`.
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_epochs_per_iteration")]
    pub epochs_per_iteration: usize,
    /// Plain DAE epochs producing `θ₀` and `H⁰`.
    #[serde(default = "default_warm_epochs")]
    pub warm_epochs: usize,
    /// Weight of the per-column mean of `Φ`.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_corruption")]
    pub corruption: CorruptionSpec,
    /// Corrupted copies per clean sample (`m`).
    #[serde(default = "default_copies")]
    pub copies: usize,
    #[serde(default)]
    pub graph: GraphConfig,
    #[serde(default = "default_loss")]
    pub loss: LossKind,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(hidden_dim: usize) -> Self {
        TrainConfig {
            hidden_dim,
            input_dim: None,
            iterations: default_iterations(),
            epochs_per_iteration: default_epochs_per_iteration(),
            warm_epochs: default_warm_epochs(),
            alpha: default_alpha(),
            dt: default_dt(),
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            corruption: default_corruption(),
            copies: default_copies(),
            graph: GraphConfig::default(),
            loss: default_loss(),
            seed: 0,
        }
    }

    /// Total epochs run by every method: warm-up plus `T` blocks.
    pub fn total_epochs(&self) -> usize {
        self.warm_epochs + self.iterations * self.epochs_per_iteration
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim < 1 {
            return Err(InaeError::invalid("hidden_dim must be at least 1"));
        }
        if self.iterations < 1 {
            return Err(InaeError::invalid("iterations must be at least 1"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(InaeError::invalid("learning_rate must be positive"));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(InaeError::invalid("alpha must be non-negative"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(InaeError::invalid("dt must be positive"));
        }
        if self.batch_size < 1 {
            return Err(InaeError::invalid("batch_size must be at least 1"));
        }
        if self.copies < 1 {
            return Err(InaeError::invalid("copies must be at least 1"));
        }
        self.corruption.validate()?;
        self.graph.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    /// 1-based epoch counter over the whole run.
    pub epoch: usize,
    /// Outer iteration the epoch belongs to; 0 for warm-up.
    pub iteration: usize,
    pub recon_loss: f64,
    /// Full `Φ` against the current anchor (0 when no anchor is active).
    pub phi: f64,
    pub total: f64,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub t: usize,
    /// `J_t(θ_{t−1})`.
    pub objective_start: f64,
    /// `J_t(θ_t)`.
    pub objective_end: f64,
    pub phi_end: f64,
    pub recon_end: f64,
    pub wall_clock: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainTrace {
    pub epochs: Vec<EpochRecord>,
    pub iterations: Vec<IterationRecord>,
}

impl TrainTrace {
    /// CSV with header `epoch,iteration,recon_loss,phi,total`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,iteration,recon_loss,phi,total\n");
        for e in &self.epochs {
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                e.epoch, e.iteration, e.recon_loss, e.phi, e.total
            ));
        }
        s
    }
}

/// Snapshot handed to observers at every iteration boundary.
#[derive(Debug)]
pub struct Checkpoint<'a> {
    pub t: usize,
    pub params: &'a ModelParams,
    /// `K × N` encoding of the training inputs under `params`.
    pub features: &'a Array2<f64>,
    pub trace: &'a TrainTrace,
}

/// Inputs and reconstruction targets, stored one sample per row.
#[derive(Debug, Clone)]
pub struct TrainingProblem {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
    pub loss: LossKind,
}

impl TrainingProblem {
    /// Pairs every (possibly corrupted) column of `x_in` with the clean
    /// column it reconstructs.
    pub fn new(
        x_in: ArrayView2<'_, f64>,
        x_clean: ArrayView2<'_, f64>,
        origin_index: &[usize],
        loss: LossKind,
    ) -> Result<Self> {
        if origin_index.len() != x_in.ncols() || x_in.nrows() != x_clean.nrows() {
            return Err(InaeError::shape("inputs, targets and origin index disagree"));
        }
        if origin_index.iter().any(|&o| o >= x_clean.ncols()) {
            return Err(InaeError::shape("origin index out of range"));
        }
        Ok(TrainingProblem {
            inputs: x_in.t().to_owned(),
            targets: x_clean.select(Axis(1), origin_index).reversed_axes().as_standard_layout().to_owned(),
            loss,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    /// `D × N` view of the inputs.
    pub fn input_columns(&self) -> ArrayView2<'_, f64> {
        self.inputs.t()
    }
}

/// The reverse-diffusion regularizer of one outer iteration.
#[derive(Debug, Clone)]
pub struct PhiRegularizer<'a> {
    pub similarity: &'a SimilarityMatrix,
    /// Anchor `Hᵗ⁻¹`, one sample per row (`N × K`).
    pub anchor: Array2<f64>,
    /// Most recent feature of every column, one sample per row.
    pub cache: Array2<f64>,
    pub alpha: f64,
    pub dt: f64,
}

impl<'a> PhiRegularizer<'a> {
    /// Starts an iteration from features `h` (`K × N`).
    pub fn new(similarity: &'a SimilarityMatrix, h: &Array2<f64>, alpha: f64, dt: f64) -> Self {
        let anchor = h.t().as_standard_layout().to_owned();
        PhiRegularizer {
            similarity,
            cache: anchor.clone(),
            anchor,
            alpha,
            dt,
        }
    }

    /// `∂J/∂H` for the batch columns (`K × |B|`), after writing the
    /// batch's current features into the cache.
    fn batch_feature_gradient(&mut self, batch: &[usize], h: &Array2<f64>) -> Array2<f64> {
        for (c, &m) in batch.iter().enumerate() {
            self.cache.row_mut(m).assign(&h.column(c));
        }
        let k = h.nrows();
        let scale = 2.0 * self.alpha / batch.len() as f64;
        let mut out = Array2::zeros((k, batch.len()));
        let mut lap = Array1::<f64>::zeros(k);
        for (c, &m) in batch.iter().enumerate() {
            lap.fill(0.0);
            let hm = self.cache.row(m);
            for (j, w) in self.similarity.row(m) {
                let hj = self.cache.row(j);
                ndarray::Zip::from(&mut lap)
                    .and(&hm)
                    .and(&hj)
                    .for_each(|l, &a, &b| *l += w * (a - b));
            }
            let prev = self.anchor.row(m);
            let mut col = out.column_mut(c);
            for r in 0..k {
                col[r] = scale * ((hm[r] - prev[r]) + self.dt * lap[r]);
            }
        }
        out
    }
}

/// Gradient of the mini-batch objective on the given columns. With a
/// regularizer the batch features are also written into its cache.
pub fn batch_gradient(
    p: &ModelParams,
    problem: &TrainingProblem,
    batch: &[usize],
    reg: Option<&mut PhiRegularizer<'_>>,
) -> Result<(f64, Gradients)> {
    let x_b = problem.inputs.select(Axis(0), batch);
    let t_b = problem.targets.select(Axis(0), batch);
    let fwd = forward_with_targets(p, problem.loss, x_b.t(), t_b.t())?;
    let extra = reg.map(|r| r.batch_feature_gradient(batch, &fwd.h));
    let g = backward(p, x_b.t(), &fwd, extra.as_ref());
    Ok((fwd.loss, g))
}

/// Objective values for a parameter setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub recon: f64,
    pub phi: f64,
    pub total: f64,
}

/// Evaluates `recon + α·Φ/N` on the full problem, returning the features
/// used (`K × N`).
pub fn evaluate_objective(
    p: &ModelParams,
    problem: &TrainingProblem,
    phi_terms: Option<(&SimilarityMatrix, ArrayView2<'_, f64>, f64, f64)>,
) -> Result<(ObjectiveValue, Array2<f64>)> {
    let fwd = forward_with_targets(p, problem.loss, problem.inputs.t(), problem.targets.t())?;
    let (phi, total) = match phi_terms {
        Some((s, anchor, alpha, dt)) => {
            let phi = crate::diffusion::phi_sparse(fwd.h.view(), anchor, s, dt)?;
            (phi, fwd.loss + alpha * phi / problem.len() as f64)
        }
        None => (0.0, fwd.loss),
    };
    Ok((
        ObjectiveValue {
            recon: fwd.loss,
            phi,
            total,
        },
        fwd.h,
    ))
}

struct Run<'a> {
    problem: &'a TrainingProblem,
    cfg: &'a TrainConfig,
    rng: ChaCha8Rng,
    params: ModelParams,
    learning_rate: f64,
    retries: usize,
    epoch: usize,
    trace: TrainTrace,
}

impl Run<'_> {
    fn run_epochs(
        &mut self,
        count: usize,
        iteration: usize,
        mut reg: Option<&mut PhiRegularizer<'_>>,
    ) -> Result<()> {
        let n = self.problem.len();
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..count {
            self.epoch += 1;
            order.shuffle(&mut self.rng);
            loop {
                let saved_params = self.params.clone();
                let saved_cache = reg.as_ref().map(|r| r.cache.clone());
                let mut finite = true;
                for batch in order.chunks(self.cfg.batch_size) {
                    let (loss, g) = batch_gradient(&self.params, self.problem, batch, reg.as_deref_mut())?;
                    if !loss.is_finite() || !g.is_finite() {
                        finite = false;
                        break;
                    }
                    self.params.apply_step(&g, self.learning_rate);
                }
                let value = if finite {
                    let terms = reg
                        .as_ref()
                        .map(|r| (r.similarity, r.anchor.t(), r.alpha, r.dt));
                    let (v, _) = evaluate_objective(&self.params, self.problem, terms)?;
                    v
                } else {
                    ObjectiveValue {
                        recon: f64::NAN,
                        phi: f64::NAN,
                        total: f64::NAN,
                    }
                };
                if finite && value.total.is_finite() {
                    self.trace.epochs.push(EpochRecord {
                        epoch: self.epoch,
                        iteration,
                        recon_loss: value.recon,
                        phi: value.phi,
                        total: value.total,
                        learning_rate: self.learning_rate,
                    });
                    break;
                }
                if self.retries >= MAX_DIVERGENCE_RETRIES {
                    return Err(InaeError::Divergence {
                        epoch: self.epoch,
                        learning_rate: self.learning_rate,
                    });
                }
                self.retries += 1;
                self.learning_rate *= 0.5;
                log::warn!(
                    "non-finite loss in epoch {}; restarting with learning rate {}",
                    self.epoch,
                    self.learning_rate
                );
                self.params = saved_params;
                if let (Some(r), Some(c)) = (reg.as_deref_mut(), saved_cache) {
                    r.cache = c;
                }
            }
        }
        Ok(())
    }
}

fn check_inputs(ds: &Dataset, cfg: &TrainConfig) -> Result<()> {
    cfg.validate()?;
    if ds.len() < 2 {
        return Err(InaeError::invalid("training needs at least 2 samples"));
    }
    if let Some(d) = cfg.input_dim {
        if d != ds.feature_dim() {
            return Err(InaeError::invalid(format!(
                "configured input_dim {d} does not match data dimension {}",
                ds.feature_dim()
            )));
        }
    }
    Ok(())
}

/// Training data for a method: clean inputs for the plain auto-encoder,
/// `m` corrupted copies otherwise.
pub fn build_problem(ds: &Dataset, cfg: &TrainConfig, method: Method) -> Result<TrainingProblem> {
    match method {
        Method::Ae => {
            let origin: Vec<usize> = (0..ds.len()).collect();
            TrainingProblem::new(ds.samples.view(), ds.samples.view(), &origin, cfg.loss)
        }
        Method::Dae | Method::Inae => {
            let noisy = corrupt(ds, &cfg.corruption, cfg.copies)?;
            let origin = noisy.origin_index.as_ref().expect("corrupt sets origin");
            TrainingProblem::new(noisy.samples.view(), ds.samples.view(), origin, cfg.loss)
        }
    }
}

/// Observer invoked at every iteration boundary `t = 0..=T`.
pub type Observer<'a> = dyn FnMut(&Checkpoint<'_>) -> Result<()> + 'a;

/// Trains with the given method, reporting checkpoints to `observer`.
///
/// Every method runs the same schedule (warm-up, then `T` blocks of
/// `epochs_per_iteration`) from the same random stream, so with `α = 0`
/// the incremental trainer reproduces the denoising trainer bit for bit.
pub fn train_with_observer(
    ds: &Dataset,
    cfg: &TrainConfig,
    method: Method,
    observer: &mut Observer<'_>,
) -> Result<(ModelParams, TrainTrace)> {
    check_inputs(ds, cfg)?;
    let problem = build_problem(ds, cfg, method)?;
    let graph = if method == Method::Inae {
        let clean = build_graph(ds, &cfg.graph)?;
        Some(expand_to_copies(&clean, cfg.copies, cfg.graph.expansion)?)
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let params = ModelParams::init(ds.feature_dim(), cfg.hidden_dim, &mut rng);
    let mut run = Run {
        problem: &problem,
        cfg,
        rng,
        params,
        learning_rate: cfg.learning_rate,
        retries: 0,
        epoch: 0,
        trace: TrainTrace::default(),
    };

    run.run_epochs(cfg.warm_epochs, 0, None)?;
    let mut features = encode(&run.params, problem.input_columns())?;
    observer(&Checkpoint {
        t: 0,
        params: &run.params,
        features: &features,
        trace: &run.trace,
    })?;

    for t in 1..=cfg.iterations {
        let started = Instant::now();
        let similarity = graph.as_ref().map(|g| &g.similarity);
        let phi_terms = similarity.map(|s| (s, features.view(), cfg.alpha, cfg.dt));
        let (start, _) = evaluate_objective(&run.params, &problem, phi_terms)?;

        match similarity {
            Some(s) if cfg.alpha > 0.0 => {
                let mut reg = PhiRegularizer::new(s, &features, cfg.alpha, cfg.dt);
                run.run_epochs(cfg.epochs_per_iteration, t, Some(&mut reg))?;
            }
            _ => run.run_epochs(cfg.epochs_per_iteration, t, None)?,
        }

        let (end, next_features) = evaluate_objective(&run.params, &problem, phi_terms)?;
        features = next_features;
        run.trace.iterations.push(IterationRecord {
            t,
            objective_start: start.total,
            objective_end: end.total,
            phi_end: end.phi,
            recon_end: end.recon,
            wall_clock: started.elapsed(),
        });
        observer(&Checkpoint {
            t,
            params: &run.params,
            features: &features,
            trace: &run.trace,
        })?;
    }
    Ok((run.params, run.trace))
}

pub fn train(ds: &Dataset, cfg: &TrainConfig, method: Method) -> Result<(ModelParams, TrainTrace)> {
    train_with_observer(ds, cfg, method, &mut |_| Ok(()))
}

/// Plain auto-encoder on clean inputs; the corruption settings are ignored.
pub fn train_ae(ds: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainTrace)> {
    train(ds, cfg, Method::Ae)
}

pub fn train_dae(ds: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainTrace)> {
    train(ds, cfg, Method::Dae)
}

pub fn train_inae(ds: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainTrace)> {
    train(ds, cfg, Method::Inae)
}

/// Greedy layer-wise stacking: layer `l + 1` is trained on the codes that
/// layer `l` produces for the clean inputs of layer `l`. Corruption is
/// applied afresh inside each layer's own training.
pub fn stack(ds: &Dataset, layer_cfgs: &[TrainConfig], method: Method) -> Result<Vec<ModelParams>> {
    Ok(stack_with_traces(ds, layer_cfgs, method)?
        .into_iter()
        .map(|(p, _)| p)
        .collect())
}

/// [`stack`], also returning each layer's training trace.
pub fn stack_with_traces(
    ds: &Dataset,
    layer_cfgs: &[TrainConfig],
    method: Method,
) -> Result<Vec<(ModelParams, TrainTrace)>> {
    if layer_cfgs.is_empty() {
        return Err(InaeError::invalid("stack needs at least one layer"));
    }
    let mut input = ds.clone();
    let mut layers = Vec::with_capacity(layer_cfgs.len());
    for (l, cfg) in layer_cfgs.iter().enumerate() {
        if let Some(d) = cfg.input_dim {
            if d != input.feature_dim() {
                return Err(InaeError::invalid(format!(
                    "layer {} expects input_dim {d} but receives {} features",
                    l + 1,
                    input.feature_dim()
                )));
            }
        }
        let (params, trace) = train(&input, cfg, method)?;
        if l + 1 < layer_cfgs.len() {
            let codes = encode(&params, input.samples.view())?;
            input = input.with_samples(codes)?;
        }
        layers.push((params, trace));
    }
    Ok(layers)
}

/// Codes of `x` (`D × n`) after passing through every layer in order.
pub fn encode_stack(layers: &[ModelParams], x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    let mut cur = x.to_owned();
    for p in layers {
        cur = encode(p, cur.view())?;
    }
    Ok(cur)
}
