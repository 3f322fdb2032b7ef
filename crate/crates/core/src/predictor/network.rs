use super::PredictorError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    pub const ALL: [Activation; 4] = [Self::Relu, Self::Tanh, Self::Sigmoid, Self::Identity];

    fn apply(self, x: f64) -> f64 {
        match self {
            Self::Relu => x.max(0.0),
            Self::Tanh => x.tanh(),
            Self::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Self::Identity => x,
        }
    }

    /// Derivative from the pre-activation `x` and the output `y`.
    fn slope(self, x: f64, y: f64) -> f64 {
        match self {
            Self::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Tanh => 1.0 - y * y,
            Self::Sigmoid => y * (1.0 - y),
            Self::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerKind {
    Dense,
    /// A dense projection whose outputs are re-weighted by a learned softmax
    /// over the layer's own positions: `y = width * softmax(V x + c) * act(W x + b)`.
    /// Uniform weights make it an ordinary dense layer.
    Attention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub width: usize,
    pub activation: Activation,
    pub dropout: f64,
}

impl LayerSpec {
    pub fn dense(width: usize, activation: Activation) -> Self {
        Self { kind: LayerKind::Dense, width, activation, dropout: 0.0 }
    }

    pub fn attention(width: usize, activation: Activation) -> Self {
        Self { kind: LayerKind::Attention, width, activation, dropout: 0.0 }
    }
}

/// Layer stack from `input_len` features to `2 * trajectory_len` outputs, the
/// thigh trajectory followed by the knee trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_len: usize,
    pub trajectory_len: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn output_len(&self) -> usize {
        2 * self.trajectory_len
    }

    pub fn validate(&self) -> Result<(), PredictorError> {
        let bad = |m: String| Err(PredictorError::InvalidSpec(m));
        if self.input_len == 0 || self.trajectory_len == 0 {
            return bad("input_len and trajectory_len must be positive".into());
        }
        let Some(last) = self.layers.last() else {
            return bad("network needs at least one layer".into());
        };
        if last.width != self.output_len() {
            return bad(format!(
                "last layer width {} must equal 2 * trajectory_len = {}",
                last.width,
                self.output_len()
            ));
        }
        for (k, l) in self.layers.iter().enumerate() {
            if l.width == 0 {
                return bad(format!("layer {k} has zero width"));
            }
            if !(0.0..=0.8).contains(&l.dropout) {
                return bad(format!("layer {k} dropout {} outside [0, 0.8]", l.dropout));
            }
        }
        Ok(())
    }

    /// Number of trainable parameters.
    pub fn param_count(&self) -> usize {
        layouts(self).last().map_or(0, |l| l.end)
    }
}

/// Offsets of one layer's parameters in the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Layout {
    inputs: usize,
    outputs: usize,
    w: usize,
    b: usize,
    /// Gate weights and biases, attention layers only.
    v: usize,
    c: usize,
    end: usize,
}

fn layouts(spec: &NetworkSpec) -> Vec<Layout> {
    let mut at = 0;
    let mut inputs = spec.input_len;
    spec.layers
        .iter()
        .map(|l| {
            let outputs = l.width;
            let w = at;
            let b = w + outputs * inputs;
            let mut end = b + outputs;
            let (v, c) = if l.kind == LayerKind::Attention {
                let v = end;
                let c = v + outputs * inputs;
                end = c + outputs;
                (v, c)
            } else {
                (end, end)
            };
            let lay = Layout { inputs, outputs, w, b, v, c, end };
            at = end;
            inputs = outputs;
            lay
        })
        .collect()
}

/// Intermediate values of one forward pass, kept for backpropagation.
#[derive(Debug, Clone)]
pub struct Tape {
    /// Input of each layer; the final entry is the network output.
    acts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    gates: Vec<Vec<f64>>,
    masks: Vec<Option<Vec<f64>>>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        self.acts.last().expect("tape holds the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layout: Vec<Layout>,
    params: Vec<f64>,
}

impl Network {
    pub fn zeros(spec: NetworkSpec) -> Result<Self, PredictorError> {
        spec.validate()?;
        let layout = layouts(&spec);
        let params = vec![0.0; layout.last().map_or(0, |l| l.end)];
        Ok(Self { spec, layout, params })
    }

    /// Glorot-normal weights, zero biases, small random gate weights.
    pub fn random(spec: NetworkSpec, seed: u64) -> Result<Self, PredictorError> {
        let mut net = Self::zeros(spec)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for lay in net.layout.clone() {
            let sd = (2.0 / (lay.inputs + lay.outputs) as f64).sqrt();
            let normal = Normal::new(0.0, sd).expect("positive std");
            for p in &mut net.params[lay.w..lay.b] {
                *p = normal.sample(&mut rng);
            }
            for p in &mut net.params[lay.v..lay.c] {
                *p = 0.1 * normal.sample(&mut rng);
            }
        }
        Ok(net)
    }

    pub fn from_params(spec: NetworkSpec, params: Vec<f64>) -> Result<Self, PredictorError> {
        let mut net = Self::zeros(spec)?;
        if params.len() != net.params.len() {
            return Err(PredictorError::ShapeMismatch {
                what: "parameter vector",
                expected: net.params.len(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(PredictorError::InvalidSpec("non-finite parameter".into()));
        }
        net.params = params;
        Ok(net)
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Weight matrix (row-major, `width x inputs`) and biases of layer `k`.
    pub fn dense_params_mut(&mut self, k: usize) -> (&mut [f64], &mut [f64]) {
        let lay = self.layout[k];
        let (w, rest) = self.params[lay.w..lay.c].split_at_mut(lay.b - lay.w);
        (w, &mut rest[..lay.outputs])
    }

    /// Inference pass; dropout is off.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, PredictorError> {
        self.check_input(x)?;
        Ok(self.run(x, None).acts.pop().expect("output"))
    }

    fn check_input(&self, x: &[f64]) -> Result<(), PredictorError> {
        if x.len() != self.spec.input_len {
            return Err(PredictorError::ShapeMismatch {
                what: "network input",
                expected: self.spec.input_len,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Forward pass that records the tape. With `rng`, inverted dropout masks
    /// are drawn for every layer with a positive rate.
    pub fn forward_tape(&self, x: &[f64], rng: Option<&mut ChaCha8Rng>) -> Result<Tape, PredictorError> {
        self.check_input(x)?;
        Ok(self.run(x, rng))
    }

    fn run(&self, x: &[f64], mut rng: Option<&mut ChaCha8Rng>) -> Tape {
        let n = self.layout.len();
        let mut tape = Tape {
            acts: Vec::with_capacity(n + 1),
            pre: Vec::with_capacity(n),
            post: Vec::with_capacity(n),
            gates: Vec::with_capacity(n),
            masks: Vec::with_capacity(n),
        };
        tape.acts.push(x.to_vec());
        for (spec, lay) in self.spec.layers.iter().zip(&self.layout) {
            let input = tape.acts.last().expect("input");
            let pre = affine(&self.params[lay.w..lay.b], &self.params[lay.b..lay.b + lay.outputs], input);
            let post: Vec<f64> = pre.iter().map(|&z| spec.activation.apply(z)).collect();
            let mut out = post.clone();
            let gate = if spec.kind == LayerKind::Attention {
                let z = affine(&self.params[lay.v..lay.c], &self.params[lay.c..lay.end], input);
                let g = softmax(&z);
                let scale = lay.outputs as f64;
                for (o, &gk) in out.iter_mut().zip(&g) {
                    *o *= scale * gk;
                }
                g
            } else {
                Vec::new()
            };
            let mask = match rng.as_deref_mut() {
                Some(r) if spec.dropout > 0.0 => {
                    let keep = 1.0 - spec.dropout;
                    let m: Vec<f64> = (0..lay.outputs)
                        .map(|_| if r.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
                        .collect();
                    for (o, &mk) in out.iter_mut().zip(&m) {
                        *o *= mk;
                    }
                    Some(m)
                }
                _ => None,
            };
            tape.pre.push(pre);
            tape.post.push(post);
            tape.gates.push(gate);
            tape.masks.push(mask);
            tape.acts.push(out);
        }
        tape
    }

    /// Accumulates into `grad` the gradient of a loss whose derivative with
    /// respect to the network output is `d_out`.
    pub fn backward(&self, tape: &Tape, d_out: &[f64], grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.params.len());
        let mut delta = d_out.to_vec();
        for k in (0..self.layout.len()).rev() {
            let lay = self.layout[k];
            let spec = &self.spec.layers[k];
            let input = &tape.acts[k];
            if let Some(m) = &tape.masks[k] {
                for (d, &mk) in delta.iter_mut().zip(m) {
                    *d *= mk;
                }
            }
            let mut d_pre = delta.clone();
            if spec.kind == LayerKind::Attention {
                let g = &tape.gates[k];
                let post = &tape.post[k];
                let scale = lay.outputs as f64;
                let d_gate: Vec<f64> = delta.iter().zip(post).map(|(d, h)| d * scale * h).collect();
                let dot: f64 = d_gate.iter().zip(g).map(|(a, b)| a * b).sum();
                let d_z: Vec<f64> = g.iter().zip(&d_gate).map(|(gk, dg)| gk * (dg - dot)).collect();
                for (dp, gk) in d_pre.iter_mut().zip(g) {
                    *dp *= scale * gk;
                }
                outer_acc(&mut grad[lay.v..lay.c], &d_z, input);
                for (gc, dz) in grad[lay.c..lay.end].iter_mut().zip(&d_z) {
                    *gc += dz;
                }
                delta = transpose_mul(&self.params[lay.v..lay.c], &d_z, lay.inputs);
            } else {
                delta = vec![0.0; lay.inputs];
            }
            for ((dp, &z), &y) in d_pre.iter_mut().zip(&tape.pre[k]).zip(&tape.post[k]) {
                *dp *= spec.activation.slope(z, y);
            }
            outer_acc(&mut grad[lay.w..lay.b], &d_pre, input);
            for (gb, dp) in grad[lay.b..lay.b + lay.outputs].iter_mut().zip(&d_pre) {
                *gb += dp;
            }
            if k > 0 {
                let back = transpose_mul(&self.params[lay.w..lay.b], &d_pre, lay.inputs);
                for (d, b) in delta.iter_mut().zip(back) {
                    *d += b;
                }
            }
        }
    }

    /// Mean squared error over a batch and its parameter gradient.
    pub fn mse_and_grad(
        &self,
        inputs: &[&[f64]],
        targets: &[&[f64]],
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Vec<f64>), PredictorError> {
        let mut grad = vec![0.0; self.params.len()];
        let mut total = 0.0;
        let count = (inputs.len() * self.spec.output_len()) as f64;
        for (x, y) in inputs.iter().zip(targets) {
            let tape = self.forward_tape(x, rng.as_deref_mut())?;
            let out = tape.output();
            if y.len() != out.len() {
                return Err(PredictorError::ShapeMismatch {
                    what: "target",
                    expected: out.len(),
                    got: y.len(),
                });
            }
            let d: Vec<f64> = out.iter().zip(y.iter()).map(|(o, t)| 2.0 * (o - t) / count).collect();
            total += out.iter().zip(y.iter()).map(|(o, t)| (o - t).powi(2)).sum::<f64>();
            self.backward(&tape, &d, &mut grad);
        }
        Ok((total / count, grad))
    }
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &bias)| bias + w[r * n..(r + 1) * n].iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let top = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - top).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

fn outer_acc(g: &mut [f64], d: &[f64], x: &[f64]) {
    let n = x.len();
    for (r, &dr) in d.iter().enumerate() {
        if dr != 0.0 {
            for (gv, xv) in g[r * n..(r + 1) * n].iter_mut().zip(x) {
                *gv += dr * xv;
            }
        }
    }
}

fn transpose_mul(w: &[f64], d: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for (r, &dr) in d.iter().enumerate() {
        if dr != 0.0 {
            for (o, wv) in out.iter_mut().zip(&w[r * n..(r + 1) * n]) {
                *o += dr * wv;
            }
        }
    }
    out
}
