//! Fully connected ReLU network with a softmax output, trained with Adam on
//! cross-entropy loss.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{AttributeKind, Dataset, Record, Value};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            hidden: vec![64, 64, 64],
            epochs: 50,
            batch_size: 64,
            learning_rate: 0.005,
            seed: 0,
        }
    }
}

/// How one attribute becomes network inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Column {
    OneHot { attribute: usize, size: usize, mode: u32 },
    Scaled { attribute: usize, mean: f64, std: f64, median: f64 },
}

/// Record-to-vector encoding fitted on training data. Missing categorical
/// cells are imputed with the training mode, missing continuous cells with
/// the training median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub columns: Vec<Column>,
}

impl Encoder {
    pub fn fit(ds: &Dataset, rows: &[usize], features: &[usize]) -> Result<Encoder> {
        let mut columns = Vec::with_capacity(features.len());
        for &f in features {
            match &ds.schema.attributes[f].kind {
                AttributeKind::Categorical { domain } => {
                    let mut counts = vec![0usize; domain.len()];
                    for &r in rows {
                        if let Value::Cat(c) = ds.records[r].get(f) {
                            counts[c as usize] += 1;
                        }
                    }
                    let mode = counts
                        .iter()
                        .enumerate()
                        .fold(0, |best, (i, &c)| if c > counts[best] { i } else { best });
                    columns.push(Column::OneHot {
                        attribute: f,
                        size: domain.len(),
                        mode: mode as u32,
                    });
                }
                AttributeKind::Continuous { .. } => {
                    let mut xs: Vec<f64> = rows
                        .iter()
                        .filter_map(|&r| match ds.records[r].get(f) {
                            Value::Num(x) => Some(x),
                            _ => None,
                        })
                        .collect();
                    if xs.is_empty() {
                        return Err(Error::InvalidArgument(format!(
                            "attribute `{}` has no observed values",
                            ds.schema.attributes[f].name
                        )));
                    }
                    xs.sort_by(f64::total_cmp);
                    let n = xs.len() as f64;
                    let mean = xs.iter().sum::<f64>() / n;
                    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
                    let std = if var > 0.0 { var.sqrt() } else { 1.0 };
                    let median = xs[(xs.len() - 1) / 2];
                    columns.push(Column::Scaled {
                        attribute: f,
                        mean,
                        std,
                        median,
                    });
                }
            }
        }
        Ok(Encoder { columns })
    }

    pub fn width(&self) -> usize {
        self.columns
            .iter()
            .map(|c| match c {
                Column::OneHot { size, .. } => *size,
                Column::Scaled { .. } => 1,
            })
            .sum()
    }

    pub fn encode(&self, record: &Record) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width());
        for column in &self.columns {
            match *column {
                Column::OneHot { attribute, size, mode } => {
                    let c = match record.get(attribute) {
                        Value::Cat(c) if (c as usize) < size => c,
                        _ => mode,
                    };
                    out.extend((0..size as u32).map(|i| if i == c { 1.0 } else { 0.0 }));
                }
                Column::Scaled {
                    attribute,
                    mean,
                    std,
                    median,
                } => {
                    let x = match record.get(attribute) {
                        Value::Num(x) => x,
                        _ => median,
                    };
                    out.push((x - mean) / std);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub inputs: usize,
    pub outputs: usize,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Dense network. The flat parameter order is each layer's weights followed
/// by its bias, layer by layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

fn softmax(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for v in z.iter_mut() {
        *v = (*v - m).exp();
        s += *v;
    }
    for v in z.iter_mut() {
        *v /= s;
    }
}

impl Network {
    /// He-initialised network with the given layer widths.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Network {
        let layers = sizes
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let bound = (6.0 / inputs.max(1) as f64).sqrt();
                let weights = (0..inputs * outputs)
                    .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound)
                    .collect();
                Layer {
                    inputs,
                    outputs,
                    weights,
                    bias: vec![0.0; outputs],
                }
            })
            .collect();
        Network { layers }
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_parameters(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.parameter_count(), "parameter vector length");
        let mut at = 0;
        for l in &mut self.layers {
            let w = l.weights.len();
            l.weights.copy_from_slice(&params[at..at + w]);
            at += w;
            let b = l.bias.len();
            l.bias.copy_from_slice(&params[at..at + b]);
            at += b;
        }
    }

    /// Activations of every layer, input first; the last entry is the softmax output.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for (li, l) in self.layers.iter().enumerate() {
            let input = acts.last().expect("input layer");
            let mut z = l.bias.clone();
            for (o, zo) in z.iter_mut().enumerate() {
                let row = &l.weights[o * l.inputs..(o + 1) * l.inputs];
                *zo += row.iter().zip(input).map(|(w, a)| w * a).sum::<f64>();
            }
            if li + 1 == self.layers.len() {
                softmax(&mut z);
            } else {
                for v in &mut z {
                    *v = v.max(0.0);
                }
            }
            acts.push(z);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).pop().expect("output layer")
    }

    /// Mean cross-entropy over the batch and its gradient with respect to the
    /// flat parameter vector.
    pub fn loss_and_gradient(&self, xs: &[Vec<f64>], ys: &[usize]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.parameter_count()];
        let offsets: Vec<usize> = self
            .layers
            .iter()
            .scan(0, |at, l| {
                let start = *at;
                *at += l.weights.len() + l.bias.len();
                Some(start)
            })
            .collect();
        let n = xs.len() as f64;
        let mut loss = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.forward_all(x);
            let out = acts.last().expect("output layer");
            loss -= out[y].max(f64::MIN_POSITIVE).ln();
            // dL/dz for softmax + cross-entropy
            let mut delta: Vec<f64> = out.clone();
            delta[y] -= 1.0;
            for li in (0..self.layers.len()).rev() {
                let l = &self.layers[li];
                let input = &acts[li];
                let base = offsets[li];
                for o in 0..l.outputs {
                    let d = delta[o] / n;
                    if d == 0.0 {
                        continue;
                    }
                    let g = &mut grad[base + o * l.inputs..base + (o + 1) * l.inputs];
                    for (gi, a) in g.iter_mut().zip(input) {
                        *gi += d * a;
                    }
                    grad[base + l.weights.len() + o] += d;
                }
                if li > 0 {
                    let mut prev = vec![0.0; l.inputs];
                    for (&d, row) in delta.iter().zip(l.weights.chunks(l.inputs)) {
                        if d == 0.0 {
                            continue;
                        }
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                    for (p, a) in prev.iter_mut().zip(input) {
                        if *a <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        (loss / n, grad)
    }
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
    lr: f64,
}

impl Adam {
    fn new(n: usize, lr: f64) -> Adam {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
            lr,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let c1 = 1.0 - B1.powi(self.t);
        let c2 = 1.0 - B2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + EPS);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub encoder: Encoder,
    pub network: Network,
}

impl Mlp {
    pub fn fit(ds: &Dataset, rows: &[usize], features: &[usize], target: usize, config: &MlpConfig) -> Result<Mlp> {
        let n_classes = ds.schema.attributes[target]
            .domain()
            .ok_or_else(|| Error::InvalidArgument("network target must be categorical".into()))?
            .len();
        if config.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        let rows: Vec<usize> = rows
            .iter()
            .copied()
            .filter(|&r| !ds.records[r].get(target).is_missing())
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidArgument("no labelled training rows".into()));
        }
        let encoder = Encoder::fit(ds, &rows, features)?;
        let xs: Vec<Vec<f64>> = rows.iter().map(|&r| encoder.encode(&ds.records[r])).collect();
        let ys: Vec<usize> = rows
            .iter()
            .map(|&r| ds.records[r].get(target).as_cat().expect("labelled") as usize)
            .collect();
        let mut sizes = vec![encoder.width()];
        sizes.extend_from_slice(&config.hidden);
        sizes.push(n_classes);
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut network = Network::new(&sizes, &mut rng);
        let mut params = network.parameters();
        let mut adam = Adam::new(params.len(), config.learning_rate);
        let mut order: Vec<usize> = (0..xs.len()).collect();
        for epoch in 0..config.epochs {
            order.shuffle(&mut rng);
            for batch in order.chunks(config.batch_size) {
                let bx: Vec<Vec<f64>> = batch.iter().map(|&i| xs[i].clone()).collect();
                let by: Vec<usize> = batch.iter().map(|&i| ys[i]).collect();
                network.set_parameters(&params);
                let (loss, grad) = network.loss_and_gradient(&bx, &by);
                if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                    return Err(Error::Training {
                        epoch,
                        message: format!("non-finite loss {loss}"),
                    });
                }
                adam.step(&mut params, &grad);
            }
        }
        network.set_parameters(&params);
        Ok(Mlp { encoder, network })
    }

    pub fn predict(&self, record: &Record) -> Vec<f64> {
        self.network.forward(&self.encoder.encode(record))
    }
}
