//! The parameter map `f(x; W)`: a linear model or small MLP followed by a
//! head that turns raw outputs into distribution parameters.
//!
//! Weights live in one flat vector. Each layer stores its `out x in` matrix
//! row-major, followed by its `out` biases.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use crate::aggregate::AggregateExample;
use crate::error::{ensure_len, Error, Result};
use crate::likelihood::{aggregate_nll, AggregateLoss, TargetFamily, TargetParams};
use crate::rng;

/// Floor applied to softmax probabilities.
pub const SOFTMAX_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Relu => {
                if out > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - out * out,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::Config(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Architecture {
    Linear {
        input: usize,
        output: usize,
    },
    Mlp {
        input: usize,
        hidden: Vec<usize>,
        output: usize,
        activation: Activation,
    },
}

impl Architecture {
    /// One hidden layer of 64 ReLU units.
    pub fn default_mlp(input: usize, output: usize) -> Self {
        Architecture::Mlp {
            input,
            hidden: vec![64],
            output,
            activation: Activation::Relu,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Architecture::Linear { input, .. } | Architecture::Mlp { input, .. } => *input,
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Architecture::Linear { output, .. } | Architecture::Mlp { output, .. } => *output,
        }
    }

    /// Widths from input to output.
    pub fn layer_sizes(&self) -> Vec<usize> {
        match self {
            Architecture::Linear { input, output } => vec![*input, *output],
            Architecture::Mlp {
                input,
                hidden,
                output,
                ..
            } => std::iter::once(*input)
                .chain(hidden.iter().copied())
                .chain(std::iter::once(*output))
                .collect(),
        }
    }

    fn activation(&self) -> Option<Activation> {
        match self {
            Architecture::Linear { .. } => None,
            Architecture::Mlp { activation, .. } => Some(*activation),
        }
    }

    pub fn param_count(&self) -> usize {
        self.layer_sizes()
            .windows(2)
            .map(|w| w[0] * w[1] + w[1])
            .sum()
    }

    fn validate(&self) -> Result<()> {
        if self.layer_sizes().contains(&0) {
            return Err(Error::Config(format!("zero-width layer in `{self}`")));
        }
        Ok(())
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Architecture::Linear { input, output } => write!(f, "linear {input} {output}"),
            Architecture::Mlp {
                input,
                hidden,
                output,
                activation,
            } => {
                let hidden: Vec<String> = hidden.iter().map(|h| h.to_string()).collect();
                write!(
                    f,
                    "mlp {input} {} {output} {}",
                    hidden.join(","),
                    activation.name()
                )
            }
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    /// `linear <in> <out>` or `mlp <in> <h1,h2,..> <out> <activation>`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("bad architecture descriptor `{s}`"));
        let num = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = s.split_whitespace().collect();
        let arch = match parts.as_slice() {
            ["linear", input, output] => Architecture::Linear {
                input: num(input)?,
                output: num(output)?,
            },
            ["mlp", input, hidden, output, activation] => Architecture::Mlp {
                input: num(input)?,
                hidden: hidden.split(',').map(num).collect::<Result<_>>()?,
                output: num(output)?,
                activation: activation.parse()?,
            },
            _ => return Err(bad()),
        };
        arch.validate()?;
        Ok(arch)
    }
}

/// Output transform from raw network outputs to distribution parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    Softmax,
    Identity,
    ExpPositive,
}

impl Head {
    pub fn for_family(family: TargetFamily) -> Head {
        match family {
            TargetFamily::Categorical => Head::Softmax,
            TargetFamily::Gaussian { .. } | TargetFamily::Cauchy { .. } | TargetFamily::Gumbel => {
                Head::Identity
            }
            TargetFamily::Poisson | TargetFamily::Exponential => Head::ExpPositive,
        }
    }
}

/// Gradient of a scalar with respect to the flat weight vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub values: Vec<f64>,
}

impl Gradient {
    pub fn zeros(len: usize) -> Self {
        Gradient {
            values: vec![0.0; len],
        }
    }
}

/// Glorot-uniform weights with zero biases, deterministic in `seed`.
pub fn init_weights(architecture: &Architecture, seed: u64) -> Vec<f64> {
    let mut rng = rng::seeded(seed);
    let mut weights = Vec::with_capacity(architecture.param_count());
    for w in architecture.layer_sizes().windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for _ in 0..fan_in * fan_out {
            weights.push(rng::uniform(&mut rng, -limit, limit));
        }
        weights.extend(std::iter::repeat_n(0.0, fan_out));
    }
    weights
}

/// Intermediate activations of one forward pass.
#[derive(Clone, Debug)]
pub struct Trace {
    /// `layers[0]` is the input; the last entry is the raw output.
    layers: Vec<Vec<f64>>,
}

impl Trace {
    pub fn raw_output(&self) -> &[f64] {
        self.layers.last().expect("trace has an output layer")
    }
}

/// A trainable map from features to the parameters of one target family.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamMap {
    architecture: Architecture,
    family: TargetFamily,
    weights: Vec<f64>,
}

impl ParamMap {
    pub fn new(
        architecture: Architecture,
        family: TargetFamily,
        weights: Vec<f64>,
    ) -> Result<Self> {
        architecture.validate()?;
        family.validate()?;
        ensure_len("weights", architecture.param_count(), weights.len())?;
        let out = architecture.output_dim();
        match Head::for_family(family) {
            Head::Softmax if out < 2 => {
                return Err(Error::Config(
                    "softmax head needs at least two outputs".into(),
                ))
            }
            Head::Identity | Head::ExpPositive if out != 1 => {
                return Err(Error::Config(format!(
                    "{family} parameters need a single output, got {out}"
                )))
            }
            _ => {}
        }
        Ok(ParamMap {
            architecture,
            family,
            weights,
        })
    }

    pub fn initialized(
        architecture: Architecture,
        family: TargetFamily,
        seed: u64,
    ) -> Result<Self> {
        let weights = init_weights(&architecture, seed);
        ParamMap::new(architecture, family, weights)
    }

    pub fn architecture(&self) -> &Architecture {
        &self.architecture
    }

    pub fn family(&self) -> TargetFamily {
        self.family
    }

    pub fn head(&self) -> Head {
        Head::for_family(self.family)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<()> {
        ensure_len("weights", self.weights.len(), weights.len())?;
        self.weights = weights;
        Ok(())
    }

    pub fn trace(&self, x: &[f64]) -> Result<Trace> {
        ensure_len("feature vector", self.architecture.input_dim(), x.len())?;
        let sizes = self.architecture.layer_sizes();
        let activation = self.architecture.activation();
        let last = sizes.len() - 2;
        let mut layers = Vec::with_capacity(sizes.len());
        layers.push(x.to_vec());
        let mut offset = 0;
        for (l, w) in sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let matrix = &self.weights[offset..offset + n_in * n_out];
            let bias = &self.weights[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let input = &layers[l];
            let out: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &matrix[o * n_in..(o + 1) * n_in];
                    let z = bias[o] + row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
                    match activation {
                        Some(act) if l < last => act.apply(z),
                        _ => z,
                    }
                })
                .collect();
            layers.push(out);
        }
        Ok(Trace { layers })
    }

    /// Raw network output before the head.
    pub fn forward_raw(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(x)?.layers.pop().expect("output layer"))
    }

    pub fn forward(&self, x: &[f64]) -> Result<TargetParams> {
        Ok(self.params_from_raw(&self.forward_raw(x)?))
    }

    pub fn params_from_raw(&self, raw: &[f64]) -> TargetParams {
        match self.family {
            TargetFamily::Categorical => TargetParams::ClassProbs(
                softmax(raw)
                    .into_iter()
                    .map(|p| p.max(SOFTMAX_FLOOR))
                    .collect(),
            ),
            TargetFamily::Gaussian { sigma } => TargetParams::GaussLoc { mu: raw[0], sigma },
            TargetFamily::Cauchy { scale } => TargetParams::CauchyLoc {
                a: raw[0],
                b: scale,
            },
            TargetFamily::Gumbel => TargetParams::GumbelScore(raw[0]),
            TargetFamily::Poisson => TargetParams::PoissonRate(raw[0].exp()),
            TargetFamily::Exponential => TargetParams::ExpRate(raw[0].exp()),
        }
    }

    /// Maps a parameter-space gradient (layout of [`TargetParams::grad_len`])
    /// to a gradient with respect to the raw outputs. Fixed scales drop out.
    fn raw_gradient(&self, raw: &[f64], dtheta: &[f64]) -> Result<Vec<f64>> {
        match self.head() {
            Head::Softmax => {
                ensure_len("class gradient", raw.len(), dtheta.len())?;
                let q = softmax(raw);
                let inner: f64 = q.iter().zip(dtheta).map(|(a, b)| a * b).sum();
                Ok(q.iter()
                    .zip(dtheta)
                    .map(|(qi, gi)| qi * (gi - inner))
                    .collect())
            }
            Head::Identity => {
                if dtheta.is_empty() {
                    return Err(Error::Empty("parameter gradient"));
                }
                Ok(vec![dtheta[0]])
            }
            Head::ExpPositive => {
                ensure_len("rate gradient", 1, dtheta.len())?;
                Ok(vec![dtheta[0] * raw[0].exp()])
            }
        }
    }

    /// Accumulates `d loss / d W` into `grad` given `d loss / d theta`.
    pub fn backward_trace(&self, trace: &Trace, dtheta: &[f64], grad: &mut [f64]) -> Result<()> {
        ensure_len("gradient buffer", self.weights.len(), grad.len())?;
        let sizes = self.architecture.layer_sizes();
        let activation = self.architecture.activation();
        let mut delta = self.raw_gradient(trace.raw_output(), dtheta)?;
        let mut offsets = Vec::with_capacity(sizes.len() - 1);
        let mut offset = 0;
        for w in sizes.windows(2) {
            offsets.push(offset);
            offset += w[0] * w[1] + w[1];
        }
        for l in (0..sizes.len() - 1).rev() {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            let base = offsets[l];
            let input = &trace.layers[l];
            for o in 0..n_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grad[base + o * n_in..base + (o + 1) * n_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grad[base + n_in * n_out + o] += d;
            }
            if l > 0 {
                let act = activation.expect("hidden layers imply an activation");
                let matrix = &self.weights[base..base + n_in * n_out];
                delta = (0..n_in)
                    .map(|i| {
                        let back: f64 = (0..n_out).map(|o| matrix[o * n_in + i] * delta[o]).sum();
                        back * act.derivative_from_output(input[i])
                    })
                    .collect();
            }
        }
        Ok(())
    }

    pub fn backward(&self, x: &[f64], dtheta: &[f64]) -> Result<Gradient> {
        let trace = self.trace(x)?;
        let mut grad = Gradient::zeros(self.weights.len());
        self.backward_trace(&trace, dtheta, &mut grad.values)?;
        Ok(grad)
    }

    /// Writes the architecture, family and weights as text. Floats use the
    /// shortest representation that parses back to the same bits.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "aggobs-checkpoint 1")?;
        writeln!(out, "architecture {}", self.architecture)?;
        match self.family {
            TargetFamily::Gaussian { sigma: s } | TargetFamily::Cauchy { scale: s } => {
                writeln!(out, "family {} {s}", self.family)?
            }
            _ => writeln!(out, "family {}", self.family)?,
        }
        writeln!(out, "weights {}", self.weights.len())?;
        for w in &self.weights {
            writeln!(out, "{w}")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = |what: &str| -> Result<String> {
            lines
                .next()
                .transpose()?
                .ok_or_else(|| Error::Data(format!("checkpoint truncated before {what}")))
        };
        if next("header")?.trim() != "aggobs-checkpoint 1" {
            return Err(Error::Data("not an aggobs checkpoint".into()));
        }
        let field = |line: String, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .and_then(|rest| rest.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| Error::Data(format!("expected `{key}` line")))
        };
        let architecture: Architecture = field(next("architecture")?, "architecture")?.parse()?;
        let family_line = field(next("family")?, "family")?;
        let mut parts = family_line.split_whitespace();
        let name = parts.next().unwrap_or_default();
        let scale = match parts.next() {
            Some(s) => s
                .parse()
                .map_err(|_| Error::Data(format!("bad family scale `{s}`")))?,
            None => 1.0,
        };
        let family = TargetFamily::parse(name, scale)?;
        let count: usize = field(next("weights")?, "weights")?
            .parse()
            .map_err(|_| Error::Data("bad weight count".into()))?;
        let weights = (0..count)
            .map(|_| {
                let line = next("weight value")?;
                line.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad weight `{line}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        ParamMap::new(architecture, family, weights)
    }
}

fn softmax(raw: &[f64]) -> Vec<f64> {
    let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = raw.iter().map(|r| (r - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Mean negative log-likelihood over `batch` and its gradient in weight space.
pub fn batch_loss_and_grad(
    map: &ParamMap,
    loss: &AggregateLoss,
    batch: &[AggregateExample],
) -> Result<(f64, Gradient)> {
    if batch.is_empty() {
        return Err(Error::Empty("batch"));
    }
    if loss.family() != map.family() {
        return Err(Error::Mismatch(format!(
            "model produces {} parameters but the loss expects {}",
            map.family(),
            loss.family()
        )));
    }
    let mut grad = Gradient::zeros(map.weights.len());
    let mut total = 0.0;
    for example in batch {
        let traces = example
            .features
            .iter()
            .map(|x| map.trace(x))
            .collect::<Result<Vec<_>>>()?;
        let thetas: Vec<TargetParams> = traces
            .iter()
            .map(|t| map.params_from_raw(t.raw_output()))
            .collect();
        let result = aggregate_nll(loss, example, &thetas)?;
        total += result.nll;
        for (trace, dtheta) in traces.iter().zip(&result.grad_theta) {
            map.backward_trace(trace, dtheta, &mut grad.values)?;
        }
    }
    let n = batch.len() as f64;
    grad.values.iter_mut().for_each(|g| *g /= n);
    Ok((total / n, grad))
}
