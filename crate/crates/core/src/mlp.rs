//! A small deterministic multilayer perceptron and the per-layer information
//! chain measured on it.
//!
//! Layer `k` of a network with `m` hidden layers maps `X_{k-1}` to `X_k`;
//! `X_0` is the input and `X_{m+1}` the sigmoid output. The encoder `f_k`
//! composes layers `1..=k`, so every hidden representation can be analysed
//! as a transformation of the input with its own information matrix.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info_matrix::{analyze_joint, Analysis, Mode, IDENTITY_TOLERANCE};
use crate::linalg::Matrix;
use crate::prob::{encode_categorical, joint_from_samples, Axis, Discretizer, Symbol, DEFAULT_BINS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sigmoid,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(z),
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `a`.
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Range used when binning this activation's outputs. `None` means
    /// "observed maximum" for the upper end.
    fn native_range(self) -> (f64, Option<f64>) {
        match self {
            Activation::Sigmoid => (0.0, Some(1.0)),
            Activation::Tanh => (-1.0, Some(1.0)),
            Activation::Relu => (0.0, None),
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(format!("unknown activation {other:?}")),
        }
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of a sigmoid unit, in nats, from its logit.
fn bce_from_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - y * z + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    /// Input width, hidden widths, output width.
    pub layer_widths: Vec<usize>,
    /// One per hidden layer. The output layer is always sigmoid.
    pub hidden_activations: Vec<Activation>,
    pub seed: u64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Epoch counts after which the model is captured; 0 is the initial model.
    pub snapshot_epochs: Vec<usize>,
}

impl MlpConfig {
    /// Config with the same activation on every hidden layer and a single
    /// final snapshot.
    pub fn new(layer_widths: Vec<usize>, activation: Activation) -> Self {
        let hidden = layer_widths.len().saturating_sub(2);
        MlpConfig {
            layer_widths,
            hidden_activations: vec![activation; hidden],
            seed: 0,
            learning_rate: 0.5,
            epochs: 100,
            batch_size: 32,
            snapshot_epochs: Vec::new(),
        }
    }

    pub fn hidden_layers(&self) -> usize {
        self.layer_widths.len().saturating_sub(2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 3 {
            return Err(Error::InvalidConfig("at least one hidden layer is required".into()));
        }
        if self.layer_widths.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        if self.hidden_activations.len() != self.hidden_layers() {
            return Err(Error::InvalidConfig(format!(
                "{} activations given for {} hidden layers",
                self.hidden_activations.len(),
                self.hidden_layers()
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and non-negative, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::InvalidConfig("epochs and batch size must be positive".into()));
        }
        if let Some(&e) = self.snapshot_epochs.iter().find(|&&e| e > self.epochs) {
            return Err(Error::InvalidConfig(format!(
                "snapshot epoch {e} is past the last epoch {}",
                self.epochs
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// Shape `(width_k, width_{k-1})`.
    pub weights: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    fn pre_activation(&self, input: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let w = self.weights.row(j);
            let mut s = self.bias[j];
            for (wi, xi) in w.iter().zip(input) {
                s += wi * xi;
            }
            *o = s;
        }
    }

    pub fn forward(&self, input: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(input.rows(), self.outputs());
        for i in 0..input.rows() {
            let row = out.row_mut(i);
            self.pre_activation(input.row(i), row);
            for v in row.iter_mut() {
                *v = self.activation.apply(*v);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<Layer>,
    pub config: MlpConfig,
}

/// Weights uniform in `±1/sqrt(fan_in)`, zero biases.
pub fn init(config: &MlpConfig) -> Result<MlpModel> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let widths = &config.layer_widths;
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for k in 1..widths.len() {
        let (fan_in, fan_out) = (widths[k - 1], widths[k]);
        let r = (fan_in as f64).powf(-0.5);
        let data = (0..fan_in * fan_out).map(|_| rng.gen_range(-r..=r)).collect();
        let activation = if k == widths.len() - 1 {
            Activation::Sigmoid
        } else {
            config.hidden_activations[k - 1]
        };
        layers.push(Layer {
            weights: Matrix::from_vec(fan_out, fan_in, data)?,
            bias: vec![0.0; fan_out],
            activation,
        });
    }
    Ok(MlpModel {
        layers,
        config: config.clone(),
    })
}

impl MlpModel {
    pub fn input_width(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, Layer::outputs)
    }

    pub fn hidden_layers(&self) -> usize {
        self.layers.len() - 1
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.as_slice().len() + l.bias.len())
            .sum()
    }

    fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend_from_slice(l.weights.as_slice());
            p.extend_from_slice(&l.bias);
        }
        p
    }

    fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for l in &mut self.layers {
            let nw = l.weights.as_slice().len();
            if index < nw {
                return &mut l.weights.as_mut_slice()[index];
            }
            index -= nw;
            if index < l.bias.len() {
                return &mut l.bias[index];
            }
            index -= l.bias.len();
        }
        panic!("parameter index out of range");
    }
}

/// Outputs of every layer, `X_0` (the input) through `X_{m+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationTrace {
    pub layers: Vec<Matrix>,
}

pub fn forward(model: &MlpModel, inputs: &Matrix) -> Result<(Matrix, ActivationTrace)> {
    check_width(model, inputs)?;
    let mut layers = Vec::with_capacity(model.layers.len() + 1);
    layers.push(inputs.clone());
    for layer in &model.layers {
        let next = layer.forward(layers.last().expect("input pushed"));
        layers.push(next);
    }
    let output = layers.last().expect("at least one layer").clone();
    Ok((output, ActivationTrace { layers }))
}

fn check_width(model: &MlpModel, inputs: &Matrix) -> Result<()> {
    if inputs.cols() != model.input_width() {
        return Err(Error::WidthMismatch {
            expected: model.input_width(),
            found: inputs.cols(),
        });
    }
    Ok(())
}

/// Inputs with binary targets, one target row per input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl Dataset {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::LengthMismatch(vec![inputs.rows(), targets.rows()]));
        }
        if inputs.rows() == 0 {
            return Err(Error::InvalidDataset("dataset is empty".into()));
        }
        if let Some(v) = targets.as_slice().iter().find(|&&v| v != 0.0 && v != 1.0) {
            return Err(Error::InvalidDataset(format!("target {v} is not 0 or 1")));
        }
        for (row, values) in inputs.iter_rows().enumerate() {
            if let Some(dim) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    row,
                    dim,
                    value: values[dim],
                });
            }
        }
        Ok(Dataset { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.rows() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        Dataset::new(self.inputs.select_rows(rows), self.targets.select_rows(rows))
    }

    /// Seeded shuffle into `(train, held_out)`, with `fraction` of the rows
    /// held out.
    pub fn holdout_split(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        let held = (self.len() as f64 * fraction).round() as usize;
        if !(fraction > 0.0 && fraction < 1.0) || held == 0 || held == self.len() {
            return Err(Error::InvalidParameter(format!(
                "hold-out fraction {fraction} leaves an empty side of {} samples",
                self.len()
            )));
        }
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (test, train) = order.split_at(held);
        Ok((self.select(train)?, self.select(test)?))
    }

    /// Target rows as discrete labels.
    pub fn labels(&self) -> Vec<Symbol> {
        let rows: Vec<Vec<u8>> = self
            .targets
            .iter_rows()
            .map(|r| r.iter().map(|&v| v as u8).collect())
            .collect();
        encode_categorical(&rows)
    }

    /// `n_bits`-bit inputs cycling through all patterns; the target is the
    /// XOR of bits `a` and `b` (bit 0 is the first column).
    pub fn bit_xor(n_bits: usize, a: usize, b: usize, samples: usize) -> Result<Self> {
        if n_bits == 0 || n_bits > 16 || a >= n_bits || b >= n_bits || a == b {
            return Err(Error::InvalidDataset(format!(
                "bits {a} and {b} must be distinct positions in a {n_bits}-bit input"
            )));
        }
        let patterns = 1usize << n_bits;
        let mut inputs = Matrix::zeros(samples, n_bits);
        let mut targets = Matrix::zeros(samples, 1);
        for i in 0..samples {
            let p = i % patterns;
            for bit in 0..n_bits {
                inputs.set(i, bit, ((p >> bit) & 1) as f64);
            }
            targets.set(i, 0, (((p >> a) ^ (p >> b)) & 1) as f64);
        }
        Dataset::new(inputs, targets)
    }

    /// Inputs uniform in `[-1, 1)`, fair-coin targets.
    pub fn random_binary(samples: usize, width: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inputs = (0..samples * width).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let targets = (0..samples).map(|_| f64::from(u8::from(rng.gen_bool(0.5)))).collect();
        Dataset::new(
            Matrix::from_vec(samples, width, inputs)?,
            Matrix::from_vec(samples, 1, targets)?,
        )
    }

    /// One-hot encoding of a uniform 2-bit symbol, target its high bit.
    pub fn one_hot_high_bit(repeats: usize) -> Result<Self> {
        let n = 4 * repeats;
        let mut inputs = Matrix::zeros(n, 4);
        let mut targets = Matrix::zeros(n, 1);
        for i in 0..n {
            let x = i % 4;
            inputs.set(i, x, 1.0);
            targets.set(i, 0, (x >> 1) as f64);
        }
        Dataset::new(inputs, targets)
    }
}

/// Per-layer gradients, same layout as the model.
struct Gradients {
    weights: Vec<Vec<f64>>,
    bias: Vec<Vec<f64>>,
}

impl Gradients {
    fn zeros(model: &MlpModel) -> Self {
        Gradients {
            weights: model
                .layers
                .iter()
                .map(|l| vec![0.0; l.weights.as_slice().len()])
                .collect(),
            bias: model.layers.iter().map(|l| vec![0.0; l.bias.len()]).collect(),
        }
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|g| g.fill(0.0));
        self.bias.iter_mut().for_each(|g| g.fill(0.0));
    }

    fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.bias) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Reusable per-sample buffers for backpropagation.
struct Workspace {
    pre: Vec<Vec<f64>>,
    act: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
}

impl Workspace {
    fn new(model: &MlpModel) -> Self {
        let widths: Vec<usize> = model.layers.iter().map(Layer::outputs).collect();
        Workspace {
            pre: widths.iter().map(|&w| vec![0.0; w]).collect(),
            act: widths.iter().map(|&w| vec![0.0; w]).collect(),
            delta: widths.iter().map(|&w| vec![0.0; w]).collect(),
        }
    }
}

/// Accumulates the summed loss and gradients of `rows` into `grads`.
fn accumulate(model: &MlpModel, data: &Dataset, rows: &[usize], ws: &mut Workspace, grads: &mut Gradients) -> f64 {
    let last = model.layers.len() - 1;
    let mut loss = 0.0;
    for &r in rows {
        let x = data.inputs.row(r);
        for (k, layer) in model.layers.iter().enumerate() {
            let (before, after) = ws.act.split_at_mut(k);
            let input = if k == 0 { x } else { &before[k - 1] };
            layer.pre_activation(input, &mut ws.pre[k]);
            for (a, &z) in after[0].iter_mut().zip(&ws.pre[k]) {
                *a = layer.activation.apply(z);
            }
        }
        let y = data.targets.row(r);
        for (j, &yj) in y.iter().enumerate() {
            loss += bce_from_logit(ws.pre[last][j], yj);
            ws.delta[last][j] = ws.act[last][j] - yj;
        }
        for k in (0..=last).rev() {
            if k < last {
                let next = &model.layers[k + 1];
                let act_k = model.layers[k].activation;
                let (lo, hi) = ws.delta.split_at_mut(k + 1);
                for i in 0..lo[k].len() {
                    let mut s = 0.0;
                    for (j, d) in hi[0].iter().enumerate() {
                        s += next.weights.get(j, i) * d;
                    }
                    lo[k][i] = s * act_k.derivative(ws.pre[k][i], ws.act[k][i]);
                }
            }
            let input = if k == 0 { x } else { &ws.act[k - 1] };
            let n_in = input.len();
            let gw = &mut grads.weights[k];
            for (j, d) in ws.delta[k].iter().enumerate() {
                grads.bias[k][j] += d;
                let row = &mut gw[j * n_in..(j + 1) * n_in];
                for (g, xi) in row.iter_mut().zip(input) {
                    *g += d * xi;
                }
            }
        }
    }
    loss
}

/// Mean loss over the whole dataset, in nats.
pub fn mean_loss(model: &MlpModel, data: &Dataset) -> Result<f64> {
    check_width(model, &data.inputs)?;
    Ok(sample_losses(model, data).iter().sum::<f64>() / data.len() as f64)
}

fn sample_losses(model: &MlpModel, data: &Dataset) -> Vec<f64> {
    let last = model.layers.len() - 1;
    let mut buffers: Vec<Vec<f64>> = model.layers.iter().map(|l| vec![0.0; l.outputs()]).collect();
    (0..data.len())
        .map(|r| {
            for (k, layer) in model.layers.iter().enumerate() {
                let (before, after) = buffers.split_at_mut(k);
                let input = if k == 0 { data.inputs.row(r) } else { &before[k - 1] };
                layer.pre_activation(input, &mut after[0]);
                if k < last {
                    for v in after[0].iter_mut() {
                        *v = layer.activation.apply(*v);
                    }
                }
            }
            buffers[last]
                .iter()
                .zip(data.targets.row(r))
                .map(|(z, y)| bce_from_logit(*z, *y))
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean mini-batch loss per epoch, in nats.
    pub loss_history: Vec<f64>,
    /// `(epoch, model)` pairs in the order of `snapshot_epochs`.
    pub snapshots: Vec<(usize, MlpModel)>,
}

/// Mini-batch SGD on binary cross-entropy. Batches are drawn from a
/// per-epoch shuffle seeded by `config.seed`.
pub fn train(model: &MlpModel, data: &Dataset, config: &MlpConfig) -> Result<TrainOutcome> {
    config.validate()?;
    check_width(model, &data.inputs)?;
    if data.targets.cols() != model.output_width() {
        return Err(Error::WidthMismatch {
            expected: model.output_width(),
            found: data.targets.cols(),
        });
    }
    let mut model = model.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut ws = Workspace::new(&model);
    let mut grads = Gradients::zeros(&model);
    let mut loss_history = Vec::with_capacity(config.epochs);
    let mut snapshots = Vec::new();
    let take_snapshots = |epoch: usize, model: &MlpModel, out: &mut Vec<(usize, MlpModel)>| {
        for &e in config.snapshot_epochs.iter().filter(|&&e| e == epoch) {
            out.push((e, model.clone()));
        }
    };
    take_snapshots(0, &model, &mut snapshots);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.clear();
            epoch_loss += accumulate(&model, data, batch, &mut ws, &mut grads);
            let step = config.learning_rate / batch.len() as f64;
            for (k, layer) in model.layers.iter_mut().enumerate() {
                for (w, g) in layer.weights.as_mut_slice().iter_mut().zip(&grads.weights[k]) {
                    *w -= step * g;
                }
                for (b, g) in layer.bias.iter_mut().zip(&grads.bias[k]) {
                    *b -= step * g;
                }
            }
        }
        loss_history.push(epoch_loss / data.len() as f64);
        take_snapshots(epoch, &model, &mut snapshots);
    }
    snapshots.sort_by_key(|(e, _)| config.snapshot_epochs.iter().position(|s| s == e));
    Ok(TrainOutcome {
        model,
        loss_history,
        snapshots,
    })
}

/// Fraction of samples whose thresholded outputs (at 0.5) equal the targets.
pub fn accuracy(model: &MlpModel, data: &Dataset) -> Result<f64> {
    let (out, _) = forward(model, &data.inputs)?;
    let correct = out
        .iter_rows()
        .zip(data.targets.iter_rows())
        .filter(|(o, t)| o.iter().zip(t.iter()).all(|(&p, &y)| (p >= 0.5) == (y == 1.0)))
        .count();
    Ok(correct as f64 / data.len() as f64)
}

/// Gradient magnitudes below this are compared as zero.
pub const GRAD_MAGNITUDE_GUARD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub eps: f64,
    pub max_relative_error: f64,
    pub parameters_checked: usize,
    pub parameters_skipped: usize,
    /// Input entries moved off exactly zero to avoid ReLU kinks.
    pub inputs_perturbed: usize,
}

/// Compares backpropagated gradients of the mean loss with central finite
/// differences on every parameter.
pub fn grad_check(model: &MlpModel, data: &Dataset, eps: f64) -> Result<GradCheckReport> {
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in [1e-7, 1e-3], got {eps}"
        )));
    }
    check_width(model, &data.inputs)?;
    let mut data = data.clone();
    let mut inputs_perturbed = 0;
    if model.layers.iter().any(|l| l.activation == Activation::Relu) {
        for v in data.inputs.as_mut_slice() {
            if *v == 0.0 {
                *v = 1e-3;
                inputs_perturbed += 1;
            }
        }
    }

    let rows: Vec<usize> = (0..data.len()).collect();
    let mut grads = Gradients::zeros(model);
    accumulate(model, &data, &rows, &mut Workspace::new(model), &mut grads);
    let n = data.len() as f64;
    let analytic: Vec<f64> = grads.flatten().into_iter().map(|g| g / n).collect();

    let mut probe = model.clone();
    let base = model.parameters();
    let mut max_rel: f64 = 0.0;
    let mut checked = 0;
    let mut skipped = 0;
    for (i, (&p, &a)) in base.iter().zip(&analytic).enumerate() {
        *probe.parameter_mut(i) = p + eps;
        let up = sample_losses(&probe, &data);
        *probe.parameter_mut(i) = p - eps;
        let down = sample_losses(&probe, &data);
        *probe.parameter_mut(i) = p;
        // Differencing per sample before summing keeps the large common
        // part of the loss out of the cancellation.
        let diff: f64 = up.iter().zip(&down).map(|(u, d)| u - d).sum();
        let numeric = diff / (2.0 * eps * n);
        let scale = a.abs().max(numeric.abs());
        if scale < GRAD_MAGNITUDE_GUARD {
            skipped += 1;
            continue;
        }
        checked += 1;
        max_rel = max_rel.max((a - numeric).abs() / scale);
    }
    Ok(GradCheckReport {
        eps,
        max_relative_error: max_rel,
        parameters_checked: checked,
        parameters_skipped: skipped,
        inputs_perturbed,
    })
}

/// The network cut after hidden layer `cut`: encoder layers `1..=cut`,
/// decoder layers `cut+1..=m+1`.
#[derive(Debug, Clone, Copy)]
pub struct EncoderDecoderSplit<'a> {
    pub cut: usize,
    pub encoder: &'a [Layer],
    pub decoder: &'a [Layer],
}

impl EncoderDecoderSplit<'_> {
    pub fn encode(&self, inputs: &Matrix) -> Matrix {
        run_layers(self.encoder, inputs)
    }

    pub fn decode(&self, hidden: &Matrix) -> Matrix {
        run_layers(self.decoder, hidden)
    }
}

fn run_layers(layers: &[Layer], inputs: &Matrix) -> Matrix {
    layers.iter().fold(inputs.clone(), |acc, l| l.forward(&acc))
}

pub fn split_encoder_decoder(model: &MlpModel, cut: usize) -> Result<EncoderDecoderSplit<'_>> {
    let m = model.hidden_layers();
    if cut < 1 || cut > m {
        return Err(Error::InvalidParameter(format!("cut must lie in 1..={m}, got {cut}")));
    }
    let (encoder, decoder) = model.layers.split_at(cut);
    Ok(EncoderDecoderSplit { cut, encoder, decoder })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub bins: usize,
    /// Layers wider than this are measured on their first `max_units` units.
    pub max_units: usize,
    pub mode: Mode,
    /// Range-check tolerance for per-layer constraint reports, in bits.
    pub tol: f64,
    pub tau: f64,
    /// Allowed violation of chain monotonicity, in bits.
    pub chain_epsilon: f64,
    pub input_discretizer: Discretizer,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            bins: DEFAULT_BINS,
            max_units: 8,
            mode: Mode::Deterministic,
            tol: IDENTITY_TOLERANCE,
            tau: 0.05,
            chain_epsilon: 0.05,
            input_discretizer: Discretizer::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEntry {
    /// 0 for the input matrix IM[X], `k` for `f_k`.
    pub layer: usize,
    pub label: String,
    pub width: usize,
    pub units_measured: usize,
    #[serde(flatten)]
    pub analysis: Analysis,
    /// `i_xyf - i_xxf`; positive would contradict the data processing inequality.
    pub dpi_slack_bits: f64,
}

/// Monotonicity between layers `from` and `to = from + 1`. Each slack is
/// the amount by which the expected direction is violated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub from: usize,
    pub to: usize,
    /// `i_xxf(to) - i_xxf(from)`
    pub i_xxf_slack_bits: f64,
    /// `i_xyf(to) - i_xyf(from)`
    pub i_xyf_slack_bits: f64,
    /// `n_xyf(to) - n_xyf(from)`
    pub noise_slack_bits: f64,
    /// `l_xyf(from) - l_xyf(to)`
    pub loss_slack_bits: f64,
    pub i_xxf_ok: bool,
    pub i_xyf_ok: bool,
    pub noise_ok: bool,
    pub loss_ok: bool,
    /// IM[from] >= IM[to]: noise non-increasing and loss non-decreasing.
    pub im_order: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMetadata {
    pub estimator: String,
    pub bins: usize,
    pub sample_count: usize,
    pub chain_epsilon: f64,
    pub tau: f64,
    pub mode: Mode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerChainReport {
    pub metadata: ChainMetadata,
    pub layers: Vec<LayerEntry>,
    pub steps: Vec<ChainStep>,
}

impl LayerChainReport {
    pub fn dpi_holds(&self, tol: f64) -> bool {
        self.layers.iter().all(|l| l.dpi_slack_bits <= tol)
    }

    pub fn chains_monotone(&self) -> bool {
        self.steps
            .iter()
            .all(|s| s.i_xxf_ok && s.i_xyf_ok && s.noise_ok && s.loss_ok)
    }

    pub fn last(&self) -> &LayerEntry {
        self.layers.last().expect("chain has at least the input entry")
    }
}

pub const ESTIMATOR: &str = "plug-in (maximum likelihood), base 2, no bias correction";

/// Measures IM[X] and IM[f_k] for every layer of `model` on `data`.
pub fn layer_chain(model: &MlpModel, data: &Dataset, cfg: &ChainConfig) -> Result<LayerChainReport> {
    if data.is_empty() {
        return Err(Error::InvalidDataset("dataset is empty".into()));
    }
    if cfg.bins < 2 || cfg.max_units == 0 {
        return Err(Error::InvalidConfig("chain needs bins >= 2 and max_units >= 1".into()));
    }
    let (_, trace) = forward(model, &data.inputs)?;
    let x = cfg.input_discretizer.discretize(&data.inputs)?;
    let y = data.labels();

    let mut layers = Vec::with_capacity(trace.layers.len());
    let input = measure(0, &x, &x, &y, data.inputs.cols(), data.inputs.cols(), cfg)?;
    layers.push(input);
    for (k, layer) in model.layers.iter().enumerate() {
        let acts = &trace.layers[k + 1];
        let units = acts.cols().min(cfg.max_units);
        let measured = if units < acts.cols() {
            acts.select_columns(&(0..units).collect::<Vec<_>>())
        } else {
            acts.clone()
        };
        let t = bin_activations(&measured, layer.activation, cfg.bins)?;
        layers.push(measure(k + 1, &x, &t, &y, acts.cols(), units, cfg)?);
    }

    let steps = layers
        .windows(2)
        .map(|w| chain_step(&w[0], &w[1], cfg.chain_epsilon))
        .collect();
    Ok(LayerChainReport {
        metadata: ChainMetadata {
            estimator: ESTIMATOR.to_string(),
            bins: cfg.bins,
            sample_count: data.len(),
            chain_epsilon: cfg.chain_epsilon,
            tau: cfg.tau,
            mode: cfg.mode,
        },
        layers,
        steps,
    })
}

fn bin_activations(acts: &Matrix, activation: Activation, bins: usize) -> Result<Vec<Symbol>> {
    let (lo, hi) = activation.native_range();
    let ranges = (0..acts.cols())
        .map(|j| {
            let upper = hi.unwrap_or_else(|| (0..acts.rows()).map(|i| acts.get(i, j)).fold(lo, f64::max));
            (lo, upper)
        })
        .collect();
    Discretizer::uniform(bins)?.with_ranges(ranges)?.discretize(acts)
}

fn measure(
    layer: usize,
    x: &[Symbol],
    t: &[Symbol],
    y: &[Symbol],
    width: usize,
    units: usize,
    cfg: &ChainConfig,
) -> Result<LayerEntry> {
    let joint = joint_from_samples(&[(Axis::X, x), (Axis::T, t), (Axis::Y, y)])?;
    let analysis = analyze_joint(&joint, cfg.mode, cfg.tol, cfg.tau)?;
    let q = analysis.quantities;
    Ok(LayerEntry {
        layer,
        label: if layer == 0 {
            "input".to_string()
        } else {
            layer.to_string()
        },
        width,
        units_measured: units,
        dpi_slack_bits: q.i_xyf - q.i_xxf,
        analysis,
    })
}

fn chain_step(from: &LayerEntry, to: &LayerEntry, eps: f64) -> ChainStep {
    let (a, b) = (&from.analysis.quantities, &to.analysis.quantities);
    let i_xxf = b.i_xxf - a.i_xxf;
    let i_xyf = b.i_xyf - a.i_xyf;
    let noise = b.n_xyf - a.n_xyf;
    let loss = a.l_xyf - b.l_xyf;
    ChainStep {
        from: from.layer,
        to: to.layer,
        i_xxf_slack_bits: i_xxf,
        i_xyf_slack_bits: i_xyf,
        noise_slack_bits: noise,
        loss_slack_bits: loss,
        i_xxf_ok: i_xxf <= eps,
        i_xyf_ok: i_xyf <= eps,
        noise_ok: noise <= eps,
        loss_ok: loss <= eps,
        im_order: noise <= eps && loss <= eps,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotChain {
    pub epoch: usize,
    pub chain: LayerChainReport,
}

pub fn chain_trajectory(
    snapshots: &[(usize, MlpModel)],
    data: &Dataset,
    cfg: &ChainConfig,
) -> Result<Vec<SnapshotChain>> {
    snapshots
        .iter()
        .map(|(epoch, model)| {
            Ok(SnapshotChain {
                epoch: *epoch,
                chain: layer_chain(model, data, cfg)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info_matrix::PatternKind;
    use approx::assert_abs_diff_eq;

    fn zeroed(mut model: MlpModel) -> MlpModel {
        for l in &mut model.layers {
            l.weights.as_mut_slice().fill(0.0);
            l.bias.fill(0.0);
        }
        model
    }

    #[test]
    fn init_is_seeded_and_shaped() {
        let cfg = MlpConfig::new(vec![4, 3, 1], Activation::Sigmoid);
        let a = init(&cfg).unwrap();
        let b = init(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.layers[0].weights.rows(), a.layers[0].weights.cols()), (3, 4));
        assert_eq!((a.layers[1].weights.rows(), a.layers[1].weights.cols()), (1, 3));
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&b| b == 0.0)));
        let bound = 0.5; // 4^-1/2
        assert!(a.layers[0].weights.as_slice().iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn config_validation() {
        assert!(MlpConfig::new(vec![4, 1], Activation::Sigmoid).validate().is_err());
        assert!(MlpConfig::new(vec![4, 0, 1], Activation::Sigmoid).validate().is_err());
        let mut cfg = MlpConfig::new(vec![4, 3, 1], Activation::Sigmoid);
        cfg.snapshot_epochs = vec![cfg.epochs + 1];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_model_outputs_half() {
        let cfg = MlpConfig::new(vec![3, 4, 2, 1], Activation::Tanh);
        let model = zeroed(init(&cfg).unwrap());
        let inputs = Matrix::from_rows(&[[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]]).unwrap();
        let (out, trace) = forward(&model, &inputs).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.5));
        assert_eq!(trace.layers.len(), 4);
        assert_eq!(trace.layers[0], inputs);
        assert_eq!(trace.layers[3], out);
    }

    #[test]
    fn relu_clips_negative_preactivations() {
        let cfg = MlpConfig::new(vec![2, 2, 1], Activation::Relu);
        let mut model = init(&cfg).unwrap();
        model.layers[0].weights = Matrix::from_rows(&[[-1.0, -1.0], [-2.0, 0.0]]).unwrap();
        let (_, trace) = forward(&model, &Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
        assert_eq!(trace.layers[1].row(0), &[0.0, 0.0]);
    }

    #[test]
    fn hand_computed_forward() {
        let cfg = MlpConfig::new(vec![2, 2, 1], Activation::Sigmoid);
        let mut model = init(&cfg).unwrap();
        model.layers[0].weights = Matrix::from_rows(&[[0.5, -1.0], [2.0, 0.25]]).unwrap();
        model.layers[0].bias = vec![0.1, -0.3];
        model.layers[1].weights = Matrix::from_rows(&[[1.5, -0.75]]).unwrap();
        model.layers[1].bias = vec![0.2];
        let (out, _) = forward(&model, &Matrix::from_rows(&[[1.0, 2.0]]).unwrap()).unwrap();
        // h1 = s(0.5 - 2 + 0.1) = s(-1.4), h2 = s(2 + 0.5 - 0.3) = s(2.2)
        let s = |z: f64| 1.0 / (1.0 + (-z).exp());
        let expected = s(1.5 * s(-1.4) - 0.75 * s(2.2) + 0.2);
        assert_abs_diff_eq!(out.get(0, 0), expected, epsilon = 1e-12);
    }

    #[test]
    fn width_mismatch_rejected() {
        let model = init(&MlpConfig::new(vec![3, 2, 1], Activation::Sigmoid)).unwrap();
        let err = forward(&model, &Matrix::zeros(1, 2)).unwrap_err();
        assert_eq!(err, Error::WidthMismatch { expected: 3, found: 2 });
    }

    #[test]
    fn zero_learning_rate_keeps_weights() {
        let mut cfg = MlpConfig::new(vec![4, 3, 1], Activation::Sigmoid);
        cfg.learning_rate = 0.0;
        cfg.epochs = 5;
        let model = init(&cfg).unwrap();
        let data = Dataset::one_hot_high_bit(8).unwrap();
        let out = train(&model, &data, &cfg).unwrap();
        assert_eq!(out.model.layers, model.layers);
        assert_eq!(out.loss_history.len(), 5);
    }

    #[test]
    fn toy_task_is_learned() {
        let mut cfg = MlpConfig::new(vec![4, 3, 1], Activation::Sigmoid);
        cfg.epochs = 500;
        cfg.batch_size = 8;
        cfg.learning_rate = 1.0;
        cfg.seed = 11;
        let data = Dataset::one_hot_high_bit(16).unwrap();
        let out = train(&init(&cfg).unwrap(), &data, &cfg).unwrap();
        assert_eq!(accuracy(&out.model, &data).unwrap(), 1.0);
        assert!(out.loss_history.last() < out.loss_history.first());
    }

    #[test]
    fn training_is_reproducible() {
        let mut cfg = MlpConfig::new(vec![4, 3, 1], Activation::Tanh);
        cfg.epochs = 20;
        cfg.snapshot_epochs = vec![0, 10, 20];
        let data = Dataset::one_hot_high_bit(8).unwrap();
        let a = train(&init(&cfg).unwrap(), &data, &cfg).unwrap();
        let b = train(&init(&cfg).unwrap(), &data, &cfg).unwrap();
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.loss_history), bits(&b.loss_history));
        assert_eq!(a.snapshots.len(), 3);
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.snapshots[0].1.layers, init(&cfg).unwrap().layers);
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (seed, act) in [(1, Activation::Sigmoid), (2, Activation::Tanh), (3, Activation::Relu)] {
            let mut cfg = MlpConfig::new(vec![4, 5, 3, 1], act);
            cfg.seed = seed;
            let model = init(&cfg).unwrap();
            let data = Dataset::bit_xor(4, 0, 1, 16).unwrap();
            let r = grad_check(&model, &data, 1e-5).unwrap();
            assert!(r.max_relative_error < 1e-4, "{act:?}: {}", r.max_relative_error);
            assert!(r.parameters_checked > 0);
        }
    }

    #[test]
    fn flat_point_is_skipped() {
        let cfg = MlpConfig::new(vec![2, 2, 1], Activation::Sigmoid);
        let model = zeroed(init(&cfg).unwrap());
        // Balanced targets at output 0.5: every gradient vanishes.
        let data = Dataset::new(
            Matrix::from_rows(&[[0.0, 0.0], [0.0, 0.0]]).unwrap(),
            Matrix::from_rows(&[[0.0], [1.0]]).unwrap(),
        )
        .unwrap();
        let r = grad_check(&model, &data, 1e-5).unwrap();
        assert_eq!(r.parameters_checked, 0);
        assert_eq!(r.parameters_skipped, model.parameter_count());
        assert!(grad_check(&model, &data, 1e-2).is_err());
    }

    #[test]
    fn relu_zero_inputs_are_perturbed() {
        let cfg = MlpConfig::new(vec![4, 3, 1], Activation::Relu);
        let data = Dataset::bit_xor(4, 0, 1, 16).unwrap();
        let r = grad_check(&init(&cfg).unwrap(), &data, 1e-5).unwrap();
        assert_eq!(r.inputs_perturbed, 32);
    }

    #[test]
    fn encoder_decoder_composition() {
        let mut cfg = MlpConfig::new(vec![3, 5, 4, 2, 1], Activation::Tanh);
        cfg.seed = 9;
        let model = init(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let inputs = Matrix::from_rows(&rows).unwrap();
        let (full, _) = forward(&model, &inputs).unwrap();
        for cut in 1..=3 {
            let split = split_encoder_decoder(&model, cut).unwrap();
            assert_eq!(split.encoder.len(), cut);
            assert_eq!(split.decode(&split.encode(&inputs)), full);
        }
        let last = split_encoder_decoder(&model, 3).unwrap();
        assert_eq!(last.decoder.len(), 1);
        assert!(split_encoder_decoder(&model, 0).is_err());
        assert!(split_encoder_decoder(&model, 4).is_err());
    }

    #[test]
    fn zero_model_chain_is_dummy() {
        let cfg = MlpConfig::new(vec![4, 6, 3, 1], Activation::Sigmoid);
        let model = zeroed(init(&cfg).unwrap());
        let data = Dataset::bit_xor(4, 0, 1, 64).unwrap();
        let report = layer_chain(&model, &data, &ChainConfig::default()).unwrap();
        assert_eq!(report.layers.len(), 4);
        for entry in &report.layers[1..] {
            assert_eq!(entry.analysis.quantities.i_xyf, 0.0);
            assert_eq!(entry.analysis.pattern.kind, PatternKind::Dummy);
        }
        let input = &report.layers[0].analysis;
        assert_eq!(input.matrix.a, 0.0);
        assert_eq!(input.matrix.c, 0.0);
        assert_abs_diff_eq!(input.matrix.b, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(input.matrix.d, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn converged_toy_last_layer_is_max_discriminative() {
        let mut cfg = MlpConfig::new(vec![4, 3, 1], Activation::Sigmoid);
        cfg.epochs = 500;
        cfg.batch_size = 8;
        cfg.learning_rate = 1.0;
        cfg.seed = 11;
        let data = Dataset::one_hot_high_bit(16).unwrap();
        let out = train(&init(&cfg).unwrap(), &data, &cfg).unwrap();
        let chain_cfg = ChainConfig {
            tau: 0.1,
            ..ChainConfig::default()
        };
        let report = layer_chain(&out.model, &data, &chain_cfg).unwrap();
        assert_eq!(report.last().analysis.pattern.kind, PatternKind::MaxDiscriminative);
        assert!(report.dpi_holds(1e-9));
    }

    #[test]
    fn holdout_split_partitions_rows() {
        let data = Dataset::bit_xor(4, 0, 1, 100).unwrap();
        let (train, test) = data.holdout_split(0.25, 3).unwrap();
        assert_eq!((train.len(), test.len()), (75, 25));
        assert_eq!(data.holdout_split(0.25, 3).unwrap(), (train, test));
        assert!(data.holdout_split(0.0, 3).is_err());
        assert!(data.holdout_split(1.0, 3).is_err());
    }

    #[test]
    fn labels_encode_targets() {
        let data = Dataset::bit_xor(2, 0, 1, 4).unwrap();
        // patterns 00, 10, 01, 11 -> xor 0, 1, 1, 0
        assert_eq!(data.labels(), vec![Symbol(0), Symbol(1), Symbol(1), Symbol(0)]);
        assert!(Dataset::bit_xor(2, 0, 0, 4).is_err());
        let bad = Dataset::new(Matrix::zeros(1, 1), Matrix::from_rows(&[[0.5]]).unwrap());
        assert!(matches!(bad, Err(Error::InvalidDataset(_))));
    }
}
