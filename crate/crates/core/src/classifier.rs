//! Feed-forward network with sigmoid units trained by plain gradient-descent
//! backpropagation on squared error.
//!
//! # Model file layout (version 1)
//!
//! All integers are little-endian `u32`, all reals little-endian IEEE `f64`.
//!
//! ```text
//! magic        8 bytes  "UPCALLNN"
//! version      u32      1
//! meta_len     u32      byte length of the metadata block
//! metadata     UTF-8    `key=value` lines, '\n'-terminated
//! n_in         u32
//! input_mean   n_in × f64
//! input_scale  n_in × f64
//! n_layers     u32
//! per layer:
//!   rows       u32      output units
//!   cols       u32      input units
//!   activation u8       0 = sigmoid, 1 = tanh
//!   weights    rows × cols × f64, row-major
//!   biases     rows × f64
//! ```

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 8] = b"UPCALLNN";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-z).exp()),
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative expressed through the activation value.
    fn slope(self, a: f64) -> f64 {
        match self {
            Activation::Sigmoid => a * (1.0 - a),
            Activation::Tanh => 1.0 - a * a,
        }
    }

    fn code(self) -> u8 {
        match self {
            Activation::Sigmoid => 0,
            Activation::Tanh => 1,
        }
    }

    fn from_code(code: u8) -> Result<Self> {
        match code {
            0 => Ok(Activation::Sigmoid),
            1 => Ok(Activation::Tanh),
            other => Err(Error::ModelFormat(format!("unknown activation code {other}"))),
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Sigmoid => "sigmoid",
            Activation::Tanh => "tanh",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sigmoid" => Ok(Activation::Sigmoid),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!(
                "unknown activation `{other}` (expected sigmoid or tanh)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// `[outputs × inputs]`
    pub weights: Array2<f64>,
    pub biases: Array1<f64>,
    pub activation: Activation,
}

/// Per-dimension affine map applied to raw features: `(x - mean) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn identity(n: usize) -> Self {
        Standardizer {
            mean: vec![0.0; n],
            scale: vec![1.0; n],
        }
    }

    /// Mean and population standard deviation per dimension; a constant
    /// dimension gets scale 1.
    pub fn fit(rows: &[&[f64]]) -> Self {
        let n_in = rows[0].len();
        let n = rows.len() as f64;
        let mut mean = vec![0.0; n_in];
        for row in rows {
            for (m, &v) in mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; n_in];
        for row in rows {
            for ((s, &v), &m) in var.iter_mut().zip(row.iter()).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn apply(&self, x: &[f64]) -> Array1<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((&v, &m), &s)| (v - m) / s)
            .collect()
    }
}

/// Trained or freshly initialized network plus the pipeline settings it was
/// trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub layers: Vec<Layer>,
    pub input: Standardizer,
    /// Ordered `key=value` pairs describing the pipeline configuration.
    pub metadata: Vec<(String, String)>,
}

/// Parameter-shaped gradient of the squared error.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    fn zeros_like(net: &Network) -> Self {
        Gradients {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.biases.len())).collect(),
        }
    }

    fn add_assign(&mut self, other: &Gradients) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            *a += b;
        }
    }
}

/// Default hidden layer widths.
pub const HIDDEN_LAYERS: [usize; 2] = [32, 16];

/// Builds a network with layer sizes `[n_in, hidden.., 1]`.
///
/// Weights are drawn uniformly from `[-1/√fan_in, 1/√fan_in]`, layer by layer
/// in row-major order, from a ChaCha8 stream seeded with `seed`
/// (`ChaCha8Rng::seed_from_u64`). Biases start at zero. The output unit is
/// always a sigmoid.
pub fn init_network(n_in: usize, hidden: &[usize], hidden_activation: Activation, seed: u64) -> Result<Network> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_with_rng(n_in, hidden, hidden_activation, &mut rng)
}

fn init_with_rng(n_in: usize, hidden: &[usize], hidden_activation: Activation, rng: &mut ChaCha8Rng) -> Result<Network> {
    if n_in == 0 || hidden.contains(&0) {
        return Err(Error::Config("layer sizes must be ≥ 1".into()));
    }
    let mut sizes = vec![n_in];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    let layers = sizes
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let weights = Array2::from_shape_simple_fn((fan_out, fan_in), || rng.random_range(-bound..=bound));
            let activation = if i == sizes.len() - 2 {
                Activation::Sigmoid
            } else {
                hidden_activation
            };
            Layer {
                weights,
                biases: Array1::zeros(fan_out),
                activation,
            }
        })
        .collect();
    Ok(Network {
        layers,
        input: Standardizer::identity(n_in),
        metadata: Vec::new(),
    })
}

impl Network {
    pub fn n_inputs(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![self.n_inputs()];
        sizes.extend(self.layers.iter().map(|l| l.weights.nrows()));
        sizes
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn check_len(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_inputs() {
            return Err(Error::ShapeMismatch {
                expected: self.n_inputs(),
                found: x.len(),
            });
        }
        Ok(())
    }

    /// Activations of every layer, input (standardized) first.
    fn activations(&self, x: &[f64]) -> Vec<Array1<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(self.input.apply(x));
        for layer in &self.layers {
            let z = layer.weights.dot(acts.last().unwrap()) + &layer.biases;
            acts.push(z.mapv(|v| layer.activation.apply(v)));
        }
        acts
    }

    /// Up-call score in (0, 1).
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        self.check_len(x)?;
        Ok(self.activations(x).last().unwrap()[0])
    }

    /// Exact gradient of `(score - target)²` with respect to every parameter.
    pub fn gradient(&self, x: &[f64], target: f64) -> Result<Gradients> {
        self.check_len(x)?;
        Ok(self.backprop(x, target).0)
    }

    fn backprop(&self, x: &[f64], target: f64) -> (Gradients, f64) {
        let acts = self.activations(x);
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);

        let out = acts[n][0];
        let err = out - target;
        let last = &self.layers[n - 1];
        let mut delta = acts[n].mapv(|a| 2.0 * err * last.activation.slope(a));
        for l in (0..n).rev() {
            let prev = &acts[l];
            let gw = delta
                .view()
                .insert_axis(ndarray::Axis(1))
                .dot(&prev.view().insert_axis(ndarray::Axis(0)));
            let next_delta = if l > 0 {
                let back = self.layers[l].weights.t().dot(&delta);
                let act = self.layers[l - 1].activation;
                Some(back * &prev.mapv(|a| act.slope(a)))
            } else {
                None
            };
            weights.push(gw);
            biases.push(delta);
            match next_delta {
                Some(d) => delta = d,
                None => break,
            }
        }
        weights.reverse();
        biases.reverse();
        (Gradients { weights, biases }, err * err)
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        for ((layer, gw), gb) in self.layers.iter_mut().zip(&g.weights).zip(&g.biases) {
            layer.weights.scaled_add(-lr, gw);
            layer.biases.scaled_add(-lr, gb);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.biases.iter().all(|v| v.is_finite())
        }) && self.input.mean.iter().chain(&self.input.scale).all(|v| v.is_finite())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        let meta: String = self
            .metadata
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect();
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        out.extend_from_slice(&(self.n_inputs() as u32).to_le_bytes());
        for v in self.input.mean.iter().chain(&self.input.scale) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.layers.len() as u32).to_le_bytes());
        for layer in &self.layers {
            let (rows, cols) = layer.weights.dim();
            out.extend_from_slice(&(rows as u32).to_le_bytes());
            out.extend_from_slice(&(cols as u32).to_le_bytes());
            out.push(layer.activation.code());
            for v in layer.weights.iter().chain(layer.biases.iter()) {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Network> {
        let mut r = ByteReader { bytes, pos: 0 };
        if r.take(MODEL_MAGIC.len())? != MODEL_MAGIC {
            return Err(Error::ModelFormat(format!(
                "bad magic bytes; not a version {MODEL_VERSION} model file"
            )));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::ModelVersion {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let meta_len = r.u32()? as usize;
        let meta = std::str::from_utf8(r.take(meta_len)?)
            .map_err(|_| Error::ModelFormat("metadata is not UTF-8".into()))?;
        let metadata = meta
            .lines()
            .map(|line| {
                line.split_once('=')
                    .map(|(k, v)| (k.to_string(), v.to_string()))
                    .ok_or_else(|| Error::ModelFormat(format!("bad metadata line `{line}`")))
            })
            .collect::<Result<Vec<_>>>()?;

        let n_in = r.u32()? as usize;
        let mean = r.f64s(n_in)?;
        let scale = r.f64s(n_in)?;
        let n_layers = r.u32()? as usize;
        if n_layers == 0 {
            return Err(Error::ModelFormat("model has no layers".into()));
        }
        let mut layers = Vec::with_capacity(n_layers);
        let mut fan_in = n_in;
        for _ in 0..n_layers {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            if cols != fan_in || rows == 0 {
                return Err(Error::ModelFormat(format!(
                    "layer shape {rows}×{cols} does not chain from {fan_in} inputs"
                )));
            }
            let activation = Activation::from_code(r.take(1)?[0])?;
            let weights = Array2::from_shape_vec((rows, cols), r.f64s(rows * cols)?)
                .map_err(|e| Error::ModelFormat(e.to_string()))?;
            let biases = Array1::from(r.f64s(rows)?);
            layers.push(Layer {
                weights,
                biases,
                activation,
            });
            fan_in = rows;
        }
        if fan_in != 1 {
            return Err(Error::ModelFormat(format!("output layer has {fan_in} units")));
        }
        if r.pos != bytes.len() {
            return Err(Error::ModelFormat("trailing bytes after parameters".into()));
        }
        let net = Network {
            layers,
            input: Standardizer { mean, scale },
            metadata,
        };
        if !net.is_finite() {
            return Err(Error::NonFinite("model parameters"));
        }
        Ok(net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Network> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Network::from_bytes(&bytes)
    }
}

struct ByteReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::ModelFormat("truncated model file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::ModelFormat("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BatchMode {
    /// One update per sample, order reshuffled every epoch.
    #[default]
    PerSample,
    /// One update per epoch with the mean gradient.
    FullBatch,
}

impl fmt::Display for BatchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BatchMode::PerSample => "per_sample",
            BatchMode::FullBatch => "full_batch",
        })
    }
}

impl FromStr for BatchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_sample" => Ok(BatchMode::PerSample),
            "full_batch" => Ok(BatchMode::FullBatch),
            other => Err(Error::Config(format!(
                "unknown batch mode `{other}` (expected per_sample or full_batch)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub batch: BatchMode,
    pub hidden: Vec<usize>,
    pub hidden_activation: Activation,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.05,
            seed: 1,
            batch: BatchMode::PerSample,
            hidden: HIDDEN_LAYERS.to_vec(),
            hidden_activation: Activation::Sigmoid,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be ≥ 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be ≥ 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub network: Network,
    /// Mean squared error seen during each epoch.
    pub loss_trace: Vec<f64>,
}

/// Trains on `(features, target)` pairs with targets in {0, 1}.
///
/// Inputs are standardized with statistics of this data, stored in the
/// returned network. The same ChaCha8 stream initializes the weights and then
/// drives the per-epoch shuffles, so `(data, cfg)` fixes the result exactly.
pub fn train(data: &[(Vec<f64>, f64)], cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let Some((first, _)) = data.first() else {
        return Err(Error::Empty("training set"));
    };
    let n_in = first.len();
    for (x, t) in data {
        if x.len() != n_in {
            return Err(Error::ShapeMismatch {
                expected: n_in,
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features"));
        }
        if *t != 0.0 && *t != 1.0 {
            return Err(Error::Config(format!("training target {t} is not 0 or 1")));
        }
    }
    let positives = data.iter().filter(|(_, t)| *t == 1.0).count();
    if positives == 0 || positives == data.len() {
        return Err(Error::SingleClass);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut net = init_with_rng(n_in, &cfg.hidden, cfg.hidden_activation, &mut rng)?;
    let rows: Vec<&[f64]> = data.iter().map(|(x, _)| x.as_slice()).collect();
    net.input = Standardizer::fit(&rows);

    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut total = 0.0;
        match cfg.batch {
            BatchMode::PerSample => {
                order.shuffle(&mut rng);
                for &i in &order {
                    let (x, t) = &data[i];
                    let (g, loss) = net.backprop(x, *t);
                    net.step(&g, cfg.learning_rate);
                    total += loss;
                }
            }
            BatchMode::FullBatch => {
                let mut sum = Gradients::zeros_like(&net);
                for (x, t) in data {
                    let (g, loss) = net.backprop(x, *t);
                    sum.add_assign(&g);
                    total += loss;
                }
                net.step(&sum, cfg.learning_rate / data.len() as f64);
            }
        }
        loss_trace.push(total / data.len() as f64);
    }
    if !net.is_finite() {
        return Err(Error::NonFinite("trained parameters"));
    }
    Ok(TrainOutcome {
        network: net,
        loss_trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn sigmoid(z: f64) -> f64 {
        1.0 / (1.0 + (-z).exp())
    }

    #[test]
    fn init_is_deterministic_and_bounded() {
        let a = init_network(20, &HIDDEN_LAYERS, Activation::Sigmoid, 42).unwrap();
        let b = init_network(20, &HIDDEN_LAYERS, Activation::Sigmoid, 42).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
        let c = init_network(20, &HIDDEN_LAYERS, Activation::Sigmoid, 43).unwrap();
        assert_ne!(a, c);

        let shapes: Vec<_> = a.layers.iter().map(|l| l.weights.dim()).collect();
        assert_eq!(shapes, vec![(32, 20), (16, 32), (1, 16)]);
        assert!(a.layers[2].weights.iter().all(|w| w.abs() <= 0.25));
        assert!(a.layers.iter().all(|l| l.biases.iter().all(|&b| b == 0.0)));
        assert_eq!(a.layer_sizes(), vec![20, 32, 16, 1]);
    }

    #[test]
    fn zero_network_scores_half() {
        let mut net = init_network(5, &HIDDEN_LAYERS, Activation::Sigmoid, 0).unwrap();
        for l in &mut net.layers {
            l.weights.fill(0.0);
        }
        assert_eq!(net.forward(&[3.0, -1.0, 0.0, 9.0, 1.0]).unwrap(), 0.5);
    }

    #[test]
    fn tiny_network_hand_forward() {
        let net = Network {
            layers: vec![
                Layer {
                    weights: array![[0.5], [-1.5]],
                    biases: array![0.1, 0.2],
                    activation: Activation::Sigmoid,
                },
                Layer {
                    weights: array![[2.0, -0.75]],
                    biases: array![-0.3],
                    activation: Activation::Sigmoid,
                },
            ],
            input: Standardizer::identity(1),
            metadata: vec![],
        };
        let x = 0.8;
        let h1 = sigmoid(0.5 * x + 0.1);
        let h2 = sigmoid(-1.5 * x + 0.2);
        let expected = sigmoid(2.0 * h1 - 0.75 * h2 - 0.3);
        assert!((net.forward(&[x]).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn scores_in_open_unit_interval() {
        let net = init_network(15, &HIDDEN_LAYERS, Activation::Sigmoid, 3).unwrap();
        for k in 0..50 {
            let x: Vec<f64> = (0..15).map(|i| ((i * 31 + k * 17) % 23) as f64 - 11.0).collect();
            let s = net.forward(&x).unwrap();
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn length_mismatch_names_both() {
        let net = init_network(15, &HIDDEN_LAYERS, Activation::Sigmoid, 3).unwrap();
        let err = net.forward(&[0.0; 20]).unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { expected: 15, found: 20 }));
        let msg = err.to_string();
        assert!(msg.contains("15") && msg.contains("20"), "{msg}");
        assert!(net.gradient(&[0.0; 4], 1.0).is_err());
    }

    #[test]
    fn output_gradient_vanishes_at_target() {
        let net = init_network(3, &[4], Activation::Sigmoid, 9).unwrap();
        let x = [0.3, -0.2, 0.9];
        let s = net.forward(&x).unwrap();
        let g = net.gradient(&x, s).unwrap();
        assert!(g.weights.iter().flatten().all(|&v| v == 0.0));
        assert!(g.biases.iter().flatten().all(|&v| v == 0.0));

        let g = net.gradient(&x, 1.0).unwrap();
        let expected = 2.0 * (s - 1.0) * s * (1.0 - s);
        assert!((g.biases[1][0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zeroed_downstream_weights_block_gradient() {
        let mut net = init_network(4, &[6, 5], Activation::Sigmoid, 2).unwrap();
        net.layers[1].weights.fill(0.0);
        let g = net.gradient(&[1.0, -1.0, 0.5, 2.0], 1.0).unwrap();
        assert!(g.weights[0].iter().all(|&v| v == 0.0));
        assert!(g.biases[0].iter().all(|&v| v == 0.0));
        assert!(g.weights[2].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn xor_trains() {
        let data = vec![
            (vec![0.0, 0.0], 0.0),
            (vec![0.0, 1.0], 1.0),
            (vec![1.0, 0.0], 1.0),
            (vec![1.0, 1.0], 0.0),
        ];
        // four samples per epoch: a sigmoid net needs thousands of epochs here
        let cfg = TrainConfig {
            epochs: 5000,
            learning_rate: 0.5,
            seed: 11,
            ..TrainConfig::default()
        };
        let out = train(&data, &cfg).unwrap();
        assert_eq!(out.loss_trace.len(), 5000);
        assert!(*out.loss_trace.last().unwrap() < 0.05, "{:?}", out.loss_trace.last());
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(vec![1.0], 1.0), (vec![2.0], 1.0)];
        assert!(matches!(train(&data, &TrainConfig::default()), Err(Error::SingleClass)));
        let bad = vec![(vec![f64::NAN], 1.0), (vec![2.0], 0.0)];
        assert!(matches!(train(&bad, &TrainConfig::default()), Err(Error::NonFinite(_))));
    }

    #[test]
    fn roundtrip_and_format_errors() {
        let mut net = init_network(5, &HIDDEN_LAYERS, Activation::Tanh, 8).unwrap();
        net.metadata = vec![("features".into(), "diagonal5".into())];
        net.input = Standardizer {
            mean: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            scale: vec![1.5; 5],
        };
        let bytes = net.to_bytes();
        assert_eq!(Network::from_bytes(&bytes).unwrap(), net);

        let mut bad = bytes.clone();
        bad[0] = b'X';
        let err = Network::from_bytes(&bad).unwrap_err();
        assert!(err.to_string().contains("magic"));

        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(
            Network::from_bytes(&v2),
            Err(Error::ModelVersion { found: 2, expected: 1 })
        ));
        assert!(Network::from_bytes(&bytes[..bytes.len() - 3]).is_err());
    }
}
