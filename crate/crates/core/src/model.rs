//! Sigmoid auto-encoder: encoder `h = s(W1 x + b1)`, decoder
//! `x̂ = s(W2 h + b2)` with untied weights, reconstruction losses, and the
//! analytic backward pass.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{InaeError, Result};

/// Logistic sigmoid, evaluated without overflow for either sign.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Squared,
    CrossEntropy,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::CrossEntropy => "cross_entropy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Encoder weights, `K × D`.
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// Decoder weights, `D × K`.
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Gradient with the same layout as [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Gradients {
    pub fn zeros_like(p: &ModelParams) -> Self {
        Gradients {
            w1: Array2::zeros(p.w1.raw_dim()),
            b1: Array1::zeros(p.b1.raw_dim()),
            w2: Array2::zeros(p.w2.raw_dim()),
            b2: Array1::zeros(p.b2.raw_dim()),
        }
    }

    /// Flattened view in the order `W1, b1, W2, b2`.
    pub fn to_vec(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.to_vec().iter().all(|v| v.is_finite())
    }
}

impl ModelParams {
    /// All-zero parameters for input dimension `d` and hidden dimension `k`.
    pub fn zeros(d: usize, k: usize) -> Self {
        ModelParams {
            w1: Array2::zeros((k, d)),
            b1: Array1::zeros(k),
            w2: Array2::zeros((d, k)),
            b2: Array1::zeros(d),
        }
    }

    /// Weights uniform in `±√(6/(D+K))`, zero biases. `W1` is drawn first,
    /// row-major, then `W2`.
    pub fn init<R: Rng + ?Sized>(d: usize, k: usize, rng: &mut R) -> Self {
        let r = (6.0 / (d + k) as f64).sqrt();
        let mut p = ModelParams::zeros(d, k);
        p.w1.iter_mut().for_each(|w| *w = rng.random_range(-r..r));
        p.w2.iter_mut().for_each(|w| *w = rng.random_range(-r..r));
        p
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let (k, d) = self.w1.dim();
        if self.b1.len() != k || self.w2.dim() != (d, k) || self.b2.len() != d {
            return Err(InaeError::shape(format!(
                "inconsistent parameter shapes: W1 {:?}, b1 {}, W2 {:?}, b2 {}",
                self.w1.dim(),
                self.b1.len(),
                self.w2.dim(),
                self.b2.len()
            )));
        }
        if !self.to_vec().iter().all(|v| v.is_finite()) {
            return Err(InaeError::invalid("parameters contain non-finite values"));
        }
        Ok(())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.w1
            .iter()
            .chain(self.b1.iter())
            .chain(self.w2.iter())
            .chain(self.b2.iter())
            .copied()
            .collect()
    }

    /// Inverse of [`ModelParams::to_vec`] for the same shapes as `self`.
    pub fn with_values(&self, values: &[f64]) -> Self {
        let mut out = self.clone();
        let mut it = values.iter().copied();
        for v in out
            .w1
            .iter_mut()
            .chain(out.b1.iter_mut())
            .chain(out.w2.iter_mut())
            .chain(out.b2.iter_mut())
        {
            *v = it.next().expect("value vector too short");
        }
        out
    }

    /// Plain gradient-descent step `θ ← θ − lr·g`.
    pub fn apply_step(&mut self, g: &Gradients, lr: f64) {
        self.w1.scaled_add(-lr, &g.w1);
        self.b1.scaled_add(-lr, &g.b1);
        self.w2.scaled_add(-lr, &g.w2);
        self.b2.scaled_add(-lr, &g.b2);
    }

    pub fn bit_identical(&self, other: &ModelParams) -> bool {
        let (a, b) = (self.to_vec(), other.to_vec());
        self.w1.dim() == other.w1.dim()
            && a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits())
    }
}

/// Encoder pre-activation `W1 X + b1 1ᵀ`.
pub fn encode_linear(p: &ModelParams, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if x.nrows() != p.input_dim() {
        return Err(InaeError::shape(format!(
            "input has {} rows, model expects D = {}",
            x.nrows(),
            p.input_dim()
        )));
    }
    let mut z = p.w1.dot(&x);
    z += &p.b1.view().insert_axis(Axis(1));
    Ok(z)
}

/// Hidden representation `H = s(W1 X + b1 1ᵀ)` (`K × N`).
pub fn encode(p: &ModelParams, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(encode_linear(p, x)?.mapv_into(sigmoid))
}

fn decode_linear(p: &ModelParams, h: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if h.nrows() != p.hidden_dim() {
        return Err(InaeError::shape(format!(
            "code has {} rows, model expects K = {}",
            h.nrows(),
            p.hidden_dim()
        )));
    }
    let mut z = p.w2.dot(&h);
    z += &p.b2.view().insert_axis(Axis(1));
    Ok(z)
}

/// Reconstruction `X̂ = s(W2 H + b2 1ᵀ)` (`D × N`).
pub fn decode(p: &ModelParams, h: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    Ok(decode_linear(p, h)?.mapv_into(sigmoid))
}

/// Mean over columns of the per-column reconstruction loss (summed over
/// features).
pub fn recon_loss(kind: LossKind, x_clean: ArrayView2<'_, f64>, x_hat: ArrayView2<'_, f64>) -> Result<f64> {
    if x_clean.dim() != x_hat.dim() {
        return Err(InaeError::shape(format!(
            "target {:?} vs reconstruction {:?}",
            x_clean.dim(),
            x_hat.dim()
        )));
    }
    let n = x_clean.ncols().max(1) as f64;
    let total = match kind {
        LossKind::Squared => x_clean
            .iter()
            .zip(x_hat.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>(),
        LossKind::CrossEntropy => {
            let mut s = 0.0;
            for (&x, &y) in x_clean.iter().zip(x_hat.iter()) {
                if !(0.0..=1.0).contains(&x) {
                    return Err(InaeError::invalid(format!(
                        "cross-entropy target {x} outside [0, 1]"
                    )));
                }
                if !(y > 0.0 && y < 1.0) {
                    return Err(InaeError::invalid(format!(
                        "cross-entropy reconstruction {y} outside (0, 1)"
                    )));
                }
                s -= x * y.ln() + (1.0 - x) * (1.0 - y).ln();
            }
            s
        }
    };
    Ok(total / n)
}

/// Cross-entropy summed over entries, computed from decoder logits so that
/// saturated outputs stay finite: `softplus(z) − x z`.
fn cross_entropy_from_logits(x: ArrayView2<'_, f64>, z: ArrayView2<'_, f64>) -> f64 {
    x.iter().zip(z.iter()).map(|(&x, &z)| softplus(z) - x * z).sum()
}

/// Activations of one forward pass over a batch.
#[derive(Debug, Clone)]
pub struct Forward {
    pub h: Array2<f64>,
    pub x_hat: Array2<f64>,
    /// Mean reconstruction loss against the targets passed to
    /// [`forward_with_targets`].
    pub loss: f64,
    /// `∂loss/∂Z2` (decoder pre-activation).
    pub d_z2: Array2<f64>,
}

/// Forward pass on inputs `x_in` with reconstruction targets `targets`
/// (same column count), returning activations, the mean loss and the
/// decoder-side error signal.
pub fn forward_with_targets(
    p: &ModelParams,
    kind: LossKind,
    x_in: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
) -> Result<Forward> {
    if x_in.ncols() != targets.ncols() || targets.nrows() != p.input_dim() {
        return Err(InaeError::shape(format!(
            "inputs {:?} vs targets {:?}",
            x_in.dim(),
            targets.dim()
        )));
    }
    let h = encode(p, x_in)?;
    let z2 = decode_linear(p, h.view())?;
    let n = x_in.ncols().max(1) as f64;
    let x_hat = z2.mapv(sigmoid);
    let (loss, d_z2) = match kind {
        LossKind::Squared => {
            let diff = &x_hat - &targets;
            let loss = diff.iter().map(|v| v * v).sum::<f64>() / n;
            let mut d = diff;
            ndarray::Zip::from(&mut d)
                .and(&x_hat)
                .for_each(|d, &y| *d *= 2.0 * y * (1.0 - y) / n);
            (loss, d)
        }
        LossKind::CrossEntropy => {
            let loss = cross_entropy_from_logits(targets, z2.view()) / n;
            let d = (&x_hat - &targets) / n;
            (loss, d)
        }
    };
    Ok(Forward { h, x_hat, loss, d_z2 })
}

/// Back-propagates the decoder error signal and an optional extra
/// `∂J/∂H` term (e.g. from a feature-space regularizer) to all parameters.
pub fn backward(
    p: &ModelParams,
    x_in: ArrayView2<'_, f64>,
    fwd: &Forward,
    extra_d_h: Option<&Array2<f64>>,
) -> Gradients {
    let w2 = fwd.d_z2.dot(&fwd.h.t());
    let b2 = fwd.d_z2.sum_axis(Axis(1));
    let mut d_h = p.w2.t().dot(&fwd.d_z2);
    if let Some(extra) = extra_d_h {
        d_h += extra;
    }
    ndarray::Zip::from(&mut d_h)
        .and(&fwd.h)
        .for_each(|d, &h| *d *= h * (1.0 - h));
    let w1 = d_h.dot(&x_in.t());
    let b1 = d_h.sum_axis(Axis(1));
    Gradients { w1, b1, w2, b2 }
}

/// Gradient of the mean reconstruction loss of `decode(encode(x̃))` against
/// the clean originals, where column `c` of `x_corrupt` reconstructs column
/// `origin_index[c]` of `x_clean`. Returns `(loss, gradient)`.
pub fn grad_recon(
    p: &ModelParams,
    kind: LossKind,
    x_corrupt: ArrayView2<'_, f64>,
    x_clean: ArrayView2<'_, f64>,
    origin_index: &[usize],
) -> Result<(f64, Gradients)> {
    if origin_index.len() != x_corrupt.ncols() {
        return Err(InaeError::shape(format!(
            "{} origin indices for {} corrupted columns",
            origin_index.len(),
            x_corrupt.ncols()
        )));
    }
    if let Some(&bad) = origin_index.iter().find(|&&o| o >= x_clean.ncols()) {
        return Err(InaeError::shape(format!("origin index {bad} out of range")));
    }
    let targets = x_clean.select(Axis(1), origin_index);
    let fwd = forward_with_targets(p, kind, x_corrupt, targets.view())?;
    let g = backward(p, x_corrupt, &fwd, None);
    Ok((fwd.loss, g))
}

// ---------------------------------------------------------------------------
// JSON persistence
// ---------------------------------------------------------------------------

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format_version: u32,
    #[serde(rename = "D")]
    d: usize,
    #[serde(rename = "K")]
    k: usize,
    loss: LossKind,
    #[serde(rename = "W1")]
    w1: Vec<f64>,
    #[serde(rename = "W2")]
    w2: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
}

fn write_array(out: &mut String, name: &str, values: impl Iterator<Item = f64>) -> Result<()> {
    write!(out, "  \"{name}\": [").unwrap();
    for (i, v) in values.enumerate() {
        if !v.is_finite() {
            return Err(InaeError::invalid(format!("cannot serialize non-finite {name} entry")));
        }
        if i > 0 {
            out.push_str(", ");
        }
        // 17 significant digits.
        write!(out, "{v:.16e}").unwrap();
    }
    out.push(']');
    Ok(())
}

/// Serializes parameters as a JSON document with row-major arrays.
pub fn model_to_json(p: &ModelParams, loss: LossKind) -> Result<String> {
    p.validate()?;
    let mut s = String::new();
    writeln!(s, "{{").unwrap();
    writeln!(s, "  \"format_version\": {MODEL_FORMAT_VERSION},").unwrap();
    writeln!(s, "  \"D\": {},", p.input_dim()).unwrap();
    writeln!(s, "  \"K\": {},", p.hidden_dim()).unwrap();
    writeln!(s, "  \"loss\": \"{}\",", loss.as_str()).unwrap();
    write_array(&mut s, "W1", p.w1.iter().copied())?;
    s.push_str(",\n");
    write_array(&mut s, "W2", p.w2.iter().copied())?;
    s.push_str(",\n");
    write_array(&mut s, "b1", p.b1.iter().copied())?;
    s.push_str(",\n");
    write_array(&mut s, "b2", p.b2.iter().copied())?;
    s.push_str("\n}\n");
    Ok(s)
}

pub fn model_from_json(text: &str) -> Result<(ModelParams, LossKind)> {
    let f: ModelFile = serde_json::from_str(text)?;
    if f.format_version != MODEL_FORMAT_VERSION {
        return Err(InaeError::invalid(format!(
            "unsupported model format version {}",
            f.format_version
        )));
    }
    let shape_err = |name: &str, got: usize, want: usize| {
        InaeError::shape(format!("{name} has {got} values, expected {want}"))
    };
    let (d, k) = (f.d, f.k);
    if f.w1.len() != k * d {
        return Err(shape_err("W1", f.w1.len(), k * d));
    }
    if f.w2.len() != d * k {
        return Err(shape_err("W2", f.w2.len(), d * k));
    }
    if f.b1.len() != k {
        return Err(shape_err("b1", f.b1.len(), k));
    }
    if f.b2.len() != d {
        return Err(shape_err("b2", f.b2.len(), d));
    }
    let p = ModelParams {
        w1: Array2::from_shape_vec((k, d), f.w1).expect("checked"),
        b1: Array1::from(f.b1),
        w2: Array2::from_shape_vec((d, k), f.w2).expect("checked"),
        b2: Array1::from(f.b2),
    };
    p.validate()?;
    Ok((p, f.loss))
}

pub fn save_model(p: &ModelParams, loss: LossKind, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_json(p, loss)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(ModelParams, LossKind)> {
    model_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_params(d: usize, k: usize, seed: u64) -> ModelParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ModelParams::init(d, k, &mut rng);
        p.b1.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        p.b2.iter_mut().for_each(|b| *b = rng.random_range(-0.5..0.5));
        p
    }

    fn random_matrix(r: usize, c: usize, seed: u64) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((r, c), |_| rng.random_range(0.0..1.0))
    }

    #[test]
    fn zero_params_encode_to_half() {
        let p = ModelParams::zeros(3, 4);
        let h = encode(&p, random_matrix(3, 5, 1).view()).unwrap();
        assert!(h.iter().all(|&v| v == 0.5));
        let x = decode(&p, h.view()).unwrap();
        assert!(x.iter().all(|&v| v == 0.5));
    }

    #[test]
    fn encode_is_monotone_in_bias() {
        let mut p = random_params(3, 2, 4);
        let x = random_matrix(3, 1, 5);
        let mut prev = encode(&p, x.view()).unwrap();
        for _ in 0..40 {
            p.b1 += 2.0;
            let h = encode(&p, x.view()).unwrap();
            assert!(h.iter().zip(prev.iter()).all(|(a, b)| a >= b));
            prev = h;
        }
        assert!(prev.iter().all(|&v| v > 1.0 - 1e-12));
        // decoder bias behaves the same way
        let h = array![[0.3], [0.9]];
        let lo = decode(&p, h.view()).unwrap();
        p.b2 += 1.0;
        let hi = decode(&p, h.view()).unwrap();
        assert!(hi.iter().zip(lo.iter()).all(|(a, b)| a > b));
    }

    #[test]
    fn encode_decode_match_scalar_loops() {
        let p = random_params(5, 3, 7);
        let x = random_matrix(5, 1, 8);
        let h = encode(&p, x.view()).unwrap();
        for k in 0..3 {
            let mut z = p.b1[k];
            for d in 0..5 {
                z += p.w1[[k, d]] * x[[d, 0]];
            }
            assert!((h[[k, 0]] - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        }
        let y = decode(&p, h.view()).unwrap();
        for d in 0..5 {
            let mut z = p.b2[d];
            for k in 0..3 {
                z += p.w2[[d, k]] * h[[k, 0]];
            }
            assert!((y[[d, 0]] - 1.0 / (1.0 + (-z).exp())).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let p = ModelParams::zeros(3, 2);
        assert!(matches!(encode(&p, Array2::zeros((4, 1)).view()), Err(InaeError::ShapeMismatch(_))));
        assert!(matches!(decode(&p, Array2::zeros((3, 1)).view()), Err(InaeError::ShapeMismatch(_))));
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(-1000.0), 0.0);
        assert_eq!(sigmoid(1000.0), 1.0);
        assert!(sigmoid(-700.0) > 0.0);
        assert!(!sigmoid(f64::MAX).is_nan() && !sigmoid(f64::MIN).is_nan());
    }

    #[test]
    fn recon_loss_values() {
        let x = random_matrix(5, 4, 9);
        assert_eq!(recon_loss(LossKind::Squared, x.view(), x.view()).unwrap(), 0.0);
        let l = recon_loss(LossKind::CrossEntropy, array![[1.0]].view(), array![[0.5]].view()).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(recon_loss(LossKind::CrossEntropy, array![[1.5]].view(), array![[0.5]].view()).is_err());
        assert!(recon_loss(LossKind::CrossEntropy, array![[1.0]].view(), array![[1.0]].view()).is_err());
        assert!(recon_loss(LossKind::Squared, x.view(), Array2::zeros((5, 3)).view()).is_err());
    }

    #[test]
    fn recon_loss_matches_scalar_loop() {
        let x = random_matrix(5, 4, 10);
        let y = random_matrix(5, 4, 11).mapv(|v| 0.05 + 0.9 * v);
        let (mut sq, mut ce) = (0.0, 0.0);
        for c in 0..4 {
            for r in 0..5 {
                sq += (x[[r, c]] - y[[r, c]]).powi(2);
                ce += -(x[[r, c]] * y[[r, c]].ln() + (1.0 - x[[r, c]]) * (1.0 - y[[r, c]]).ln());
            }
        }
        let got_sq = recon_loss(LossKind::Squared, x.view(), y.view()).unwrap();
        let got_ce = recon_loss(LossKind::CrossEntropy, x.view(), y.view()).unwrap();
        assert!((got_sq - sq / 4.0).abs() < 1e-12);
        assert!((got_ce - ce / 4.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_minimized_at_target() {
        let x = random_matrix(4, 3, 12).mapv(|v| 0.1 + 0.8 * v);
        let base = recon_loss(LossKind::CrossEntropy, x.view(), x.view()).unwrap();
        for (i, eps) in [1e-3, -1e-3, 0.05, -0.05].into_iter().enumerate() {
            let mut y = x.clone();
            y[[i % 4, i % 3]] += eps;
            assert!(recon_loss(LossKind::CrossEntropy, x.view(), y.view()).unwrap() > base);
        }
    }

    #[test]
    fn logit_loss_agrees_with_probability_loss() {
        let p = random_params(4, 3, 13);
        let x = random_matrix(4, 6, 14);
        let fwd = forward_with_targets(&p, LossKind::CrossEntropy, x.view(), x.view()).unwrap();
        let direct = recon_loss(LossKind::CrossEntropy, x.view(), fwd.x_hat.view()).unwrap();
        assert!((fwd.loss - direct).abs() < 1e-12);
    }

    #[test]
    fn decoder_gradient_vanishes_at_exact_reconstruction() {
        let mut p = random_params(3, 2, 15);
        let x = random_matrix(3, 4, 16);
        // Choose targets equal to the model's own reconstruction.
        let target = decode(&p, encode(&p, x.view()).unwrap().view()).unwrap();
        let origin: Vec<usize> = (0..4).collect();
        let (loss, g) = grad_recon(&p, LossKind::Squared, x.view(), target.view(), &origin).unwrap();
        assert!(loss < 1e-30);
        assert!(g.w2.iter().chain(g.b2.iter()).all(|v| v.abs() < 1e-10));
        p.apply_step(&g, 1.0);
    }

    #[test]
    fn duplicated_batch_keeps_mean_gradient() {
        let p = random_params(4, 3, 17);
        let clean = random_matrix(4, 2, 18);
        let noisy = random_matrix(4, 2, 19);
        let (_, g1) = grad_recon(&p, LossKind::CrossEntropy, noisy.view(), clean.view(), &[0, 1]).unwrap();
        let doubled = ndarray::concatenate(Axis(1), &[noisy.view(), noisy.view()]).unwrap();
        let (_, g2) =
            grad_recon(&p, LossKind::CrossEntropy, doubled.view(), clean.view(), &[0, 1, 0, 1]).unwrap();
        for (a, b) in g1.to_vec().iter().zip(g2.to_vec()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn grad_recon_checks_origin_index() {
        let p = random_params(2, 2, 1);
        let x = random_matrix(2, 2, 2);
        assert!(grad_recon(&p, LossKind::Squared, x.view(), x.view(), &[0]).is_err());
        assert!(grad_recon(&p, LossKind::Squared, x.view(), x.view(), &[0, 2]).is_err());
    }

    #[test]
    fn json_round_trip_and_rejections() {
        let p = random_params(3, 2, 21);
        let text = model_to_json(&p, LossKind::CrossEntropy).unwrap();
        let (q, loss) = model_from_json(&text).unwrap();
        assert!(p.bit_identical(&q));
        assert_eq!(loss, LossKind::CrossEntropy);
        assert!(text.contains("\"D\": 3"));

        let bad = text.replace("\"K\": 2", "\"K\": 3");
        assert!(model_from_json(&bad).is_err());
        let bad = text.replace("\"format_version\": 1", "\"format_version\": 9");
        assert!(model_from_json(&bad).is_err());
        let bad = text.replacen('{', "{\"extra\": 1,", 1);
        assert!(model_from_json(&bad).is_err());
    }

    proptest! {
        #[test]
        fn json_preserves_bits(values in proptest::collection::vec(-1e6f64..1e6, 2 * 3 + 2 + 3 * 2 + 3)) {
            let p = ModelParams::zeros(3, 2).with_values(&values);
            let (q, _) = model_from_json(&model_to_json(&p, LossKind::Squared).unwrap()).unwrap();
            prop_assert!(p.bit_identical(&q));
        }

        #[test]
        fn codes_stay_in_open_unit_interval(seed in 0u64..1000, scale in 0.1f64..3.0) {
            let mut p = random_params(4, 3, seed);
            p.w1.mapv_inplace(|w| w * scale);
            let x = random_matrix(4, 5, seed + 1).mapv(|v| (v - 0.5) * scale);
            let h = encode(&p, x.view()).unwrap();
            prop_assert!(h.iter().all(|&v| v > 0.0 && v < 1.0));
            let y = decode(&p, h.view()).unwrap();
            prop_assert!(y.iter().all(|&v| v > 0.0 && v < 1.0));
        }
    }
}
