//! The sub-network method.
//!
//! Fixed-weight learners are assembled from small feed-forward fragments:
//! each fragment is trained in plain float arithmetic (no pulse noise) to
//! approximate one sub-task of the learning algorithm, then the fragments
//! are wired together with explicit signal delays. The wiring plan is a
//! first-class, validated artifact; integrating by hand on the bench was
//! how delays got misaligned.

use crate::error::{Error, Result};
use crate::network::{
    run, Encoding, ExecConfig, Netlist, NetlistBuilder, NeuronId, NeuronKind, SignalSource,
    Synapse,
};
use crate::rng::Rng64;
use std::fmt;
use std::sync::Arc;

/// Peak of |(y - yhat) * yhat * (1 - yhat)| over the unit square: the error
/// term of the embedded learning rule never exceeds this, which fixes the
/// affine encoding of signed gradient signals onto [0, 1].
pub const ERROR_TERM_MAX: f64 = 4.0 / 27.0;

/// Boxed user-supplied target mapping.
pub type TargetClosure = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A target mapping from [0,1)^k to [0,1).
#[derive(Clone)]
pub enum TargetFn {
    /// Constant output, no inputs.
    Constant(f64),
    /// (u, v) -> u * v.
    Product,
    /// (s, x) -> logsig(8 (s - 1/2) x): the forward map of a single-synapse
    /// plant whose weight estimate rides on s.
    ScaledForward,
    /// (y, yhat, x) -> 1/2 + (x (y - yhat) yhat (1 - yhat)) / (2 e_max):
    /// the affine-encoded online gradient, learning rate factored out.
    GradientSignal,
    /// Arbitrary test mapping.
    Custom(TargetClosure),
}

impl TargetFn {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TargetFn::Constant(c) => *c,
            TargetFn::Product => x[0] * x[1],
            TargetFn::ScaledForward => 1.0 / (1.0 + (-(8.0 * (x[0] - 0.5) * x[1])).exp()),
            TargetFn::GradientSignal => {
                let (y, yhat, xin) = (x[0], x[1], x[2]);
                0.5 + xin * (y - yhat) * yhat * (1.0 - yhat) / (2.0 * ERROR_TERM_MAX)
            }
            TargetFn::Custom(f) => f(x),
        }
    }
}

impl fmt::Debug for TargetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFn::Constant(c) => write!(f, "Constant({c})"),
            TargetFn::Product => write!(f, "Product"),
            TargetFn::ScaledForward => write!(f, "ScaledForward"),
            TargetFn::GradientSignal => write!(f, "GradientSignal"),
            TargetFn::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Size budget for one trained fragment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_neurons: usize,
    pub max_synapses: usize,
    pub layers: usize,
}

/// A target sub-function plus the size budget it must fit in.
#[derive(Clone, Debug)]
pub struct SubTaskSpec {
    pub name: String,
    pub target: TargetFn,
    pub input_dim: usize,
    /// Sampling box inside [0,1)^k; one (lo, hi) per input.
    pub domain: Vec<(f64, f64)>,
    pub budget: Budget,
    pub target_mse: f64,
}

impl SubTaskSpec {
    pub fn new(
        name: &str,
        target: TargetFn,
        input_dim: usize,
        budget: Budget,
        target_mse: f64,
    ) -> Self {
        SubTaskSpec {
            name: name.to_string(),
            target,
            input_dim,
            domain: vec![(0.0, 1.0); input_dim],
            budget,
            target_mse,
        }
    }

    fn sample_point(&self, rng: &mut Rng64) -> Vec<f64> {
        self.domain
            .iter()
            .map(|&(lo, hi)| rng.range(lo, hi))
            .collect()
    }
}

/// Training hyper-parameters for one fragment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.8,
            epochs: 4000,
            batch: 1,
            seed: 0x0f77,
            init_scale: 0.5,
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<()> {
        if !(self.learning_rate > 0.0)
            || self.epochs == 0
            || self.batch == 0
            || !(self.init_scale > 0.0)
        {
            return Err(Error::invalid("train config fields must be positive"));
        }
        Ok(())
    }
}

/// Output unit of a trained fragment.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputKind {
    Linear,
    Squash,
}

/// Architecture of one trainable fragment: a feed-forward net of logsig
/// hidden units with optional bias source and shortcut connections.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpShape {
    pub inputs: usize,
    /// Zero, one, or two hidden layers.
    pub hidden: Vec<usize>,
    /// Include a constant source (squash neuron with no inbound, emitting
    /// 0.5) wired to every hidden and output unit.
    pub bias: bool,
    /// Input indices with shortcut synapses into the second hidden layer.
    pub in_h2_skips: Vec<usize>,
    /// Input indices with shortcut synapses into the output.
    pub in_out_skips: Vec<usize>,
    pub output: OutputKind,
}

impl MlpShape {
    pub fn plain(inputs: usize, hidden: Vec<usize>, bias: bool, output: OutputKind) -> Self {
        MlpShape {
            inputs,
            hidden,
            bias,
            in_h2_skips: Vec::new(),
            in_out_skips: Vec::new(),
            output,
        }
    }

    pub fn neuron_count(&self) -> usize {
        self.inputs + usize::from(self.bias) + self.hidden.iter().sum::<usize>() + 1
    }

    pub fn synapse_count(&self) -> usize {
        let h1 = self.hidden.first().copied().unwrap_or(0);
        let h2 = self.hidden.get(1).copied().unwrap_or(0);
        let mut s = 0;
        if self.hidden.is_empty() {
            s += self.inputs; // direct input -> output
        } else {
            s += self.inputs * h1;
            if h2 > 0 {
                s += h1 * h2 + self.in_h2_skips.len() * h2;
            }
            s += self.hidden.last().unwrap();
        }
        s += self.in_out_skips.len();
        if self.bias {
            s += self.hidden.iter().sum::<usize>() + 1;
        }
        s
    }

    pub fn layer_count(&self) -> usize {
        self.hidden.len() + 2
    }
}

/// Trained parameters of a fragment, kept in float form for emission.
#[derive(Clone, Debug)]
struct MlpParams {
    w1: Vec<Vec<f64>>, // h1 x inputs
    b1: Vec<f64>,      // h1
    w2: Vec<Vec<f64>>, // h2 x h1
    s2: Vec<Vec<f64>>, // h2 x |in_h2_skips|
    b2: Vec<f64>,      // h2
    wo: Vec<f64>,      // last hidden (or inputs if no hidden)
    so: Vec<f64>,      // |in_out_skips|
    bo: f64,
}

impl MlpParams {
    fn init(shape: &MlpShape, rng: &mut Rng64, scale: f64) -> Self {
        let h1 = shape.hidden.first().copied().unwrap_or(0);
        let h2 = shape.hidden.get(1).copied().unwrap_or(0);
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.range(-scale, scale)).collect() };
        let w1 = (0..h1).map(|_| draw(shape.inputs)).collect();
        let b1 = draw(h1);
        let w2 = (0..h2).map(|_| draw(h1)).collect();
        let s2 = (0..h2).map(|_| draw(shape.in_h2_skips.len())).collect();
        let b2 = draw(h2);
        let wo = draw(if shape.hidden.is_empty() {
            shape.inputs
        } else {
            *shape.hidden.last().unwrap()
        });
        let so = draw(shape.in_out_skips.len());
        let bo = rng.range(-scale, scale);
        MlpParams {
            w1,
            b1,
            w2,
            s2,
            b2,
            wo,
            so,
            bo,
        }
    }
}

fn logsig(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct ForwardPass {
    h1: Vec<f64>,
    h2: Vec<f64>,
    out: f64,
}

fn forward(shape: &MlpShape, p: &MlpParams, x: &[f64]) -> ForwardPass {
    let bias = if shape.bias { 1.0 } else { 0.0 };
    let h1: Vec<f64> = p
        .w1
        .iter()
        .zip(&p.b1)
        .map(|(w, b)| logsig(dot(w, x) + b * bias))
        .collect();
    let h2: Vec<f64> = p
        .w2
        .iter()
        .zip(p.s2.iter().zip(&p.b2))
        .map(|(w, (s, b))| {
            let skip: f64 = s
                .iter()
                .zip(&shape.in_h2_skips)
                .map(|(sv, &i)| sv * x[i])
                .sum();
            logsig(dot(w, &h1) + skip + b * bias)
        })
        .collect();
    let last: &[f64] = if !h2.is_empty() {
        &h2
    } else if !h1.is_empty() {
        &h1
    } else {
        x
    };
    let skip: f64 = p
        .so
        .iter()
        .zip(&shape.in_out_skips)
        .map(|(sv, &i)| sv * x[i])
        .sum();
    let z_out = dot(&p.wo, last) + skip + p.bo * bias;
    let out = match shape.output {
        OutputKind::Linear => z_out,
        OutputKind::Squash => logsig(z_out),
    };
    ForwardPass { h1, h2, out }
}

/// One SGD step on one sample; returns the squared error before the update.
fn backprop(shape: &MlpShape, p: &mut MlpParams, x: &[f64], target: f64, lr: f64) -> f64 {
    let bias = if shape.bias { 1.0 } else { 0.0 };
    let f = forward(shape, p, x);
    let err = f.out - target;
    let dout = match shape.output {
        OutputKind::Linear => err,
        OutputKind::Squash => err * f.out * (1.0 - f.out),
    };

    let two_hidden = !f.h2.is_empty();
    let last: &[f64] = if two_hidden {
        &f.h2
    } else if !f.h1.is_empty() {
        &f.h1
    } else {
        x
    };

    // Upstream gradient into the last hidden layer before the weights move.
    let dlast: Vec<f64> = p.wo.iter().map(|w| dout * w).collect();

    for (w, &v) in p.wo.iter_mut().zip(last) {
        *w -= lr * dout * v;
    }
    for (s, &i) in p.so.iter_mut().zip(&shape.in_out_skips) {
        *s -= lr * dout * x[i];
    }
    p.bo -= lr * dout * bias;

    if two_hidden {
        let dh2: Vec<f64> = dlast
            .iter()
            .zip(&f.h2)
            .map(|(d, h)| d * h * (1.0 - h))
            .collect();
        let mut dh1 = vec![0.0; f.h1.len()];
        for (j, dz) in dh2.iter().enumerate() {
            for (k, acc) in dh1.iter_mut().enumerate() {
                *acc += dz * p.w2[j][k];
            }
            for (k, &h) in f.h1.iter().enumerate() {
                p.w2[j][k] -= lr * dz * h;
            }
            for (m, &i) in shape.in_h2_skips.iter().enumerate() {
                p.s2[j][m] -= lr * dz * x[i];
            }
            p.b2[j] -= lr * dz * bias;
        }
        apply_h1(p, &f, &dh1, x, lr, bias);
    } else if !f.h1.is_empty() {
        apply_h1(p, &f, &dlast, x, lr, bias);
    }
    err * err
}

fn apply_h1(p: &mut MlpParams, f: &ForwardPass, upstream: &[f64], x: &[f64], lr: f64, bias: f64) {
    for (j, up) in upstream.iter().enumerate() {
        let dz = up * f.h1[j] * (1.0 - f.h1[j]);
        for (w, &xi) in p.w1[j].iter_mut().zip(x) {
            *w -= lr * dz * xi;
        }
        p.b1[j] -= lr * dz * bias;
    }
}

const SAMPLES_PER_EPOCH: usize = 256;

/// Train a fragment of an explicit architecture against a sub-task target.
/// Plain online stochastic-gradient backpropagation in exact arithmetic;
/// fully determined by (spec, shape, cfg).
pub fn train_mlp(spec: &SubTaskSpec, shape: &MlpShape, cfg: &TrainConfig) -> Result<Netlist> {
    cfg.check()?;
    if shape.inputs != spec.input_dim {
        return Err(Error::invalid(format!(
            "shape expects {} inputs, spec has {}",
            shape.inputs, spec.input_dim
        )));
    }
    let mut rng = Rng64::new(cfg.seed);
    let mut params = MlpParams::init(shape, &mut rng, cfg.init_scale);
    let mut best: Option<(f64, MlpParams)> = None;

    // Held-out points for epoch-level monitoring.
    let val: Vec<(Vec<f64>, f64)> = {
        let mut vrng = Rng64::new(cfg.seed ^ 0x5a5a_5a5a);
        (0..2048)
            .map(|_| {
                let x = spec.sample_point(&mut vrng);
                let y = spec.target.eval(&x);
                (x, y)
            })
            .collect()
    };

    for epoch in 0..cfg.epochs {
        // Stepped decay keeps late epochs from orbiting the minimum; the
        // sweep itself stays plain online SGD.
        let lr = cfg.learning_rate / (1.0 + 3.0 * epoch as f64 / cfg.epochs as f64);
        for _ in 0..SAMPLES_PER_EPOCH {
            let x = spec.sample_point(&mut rng);
            let y = spec.target.eval(&x);
            backprop(shape, &mut params, &x, y, lr);
        }
        if epoch % 8 == 7 || epoch + 1 == cfg.epochs {
            let mse = val
                .iter()
                .map(|(x, y)| {
                    let d = forward(shape, &params, x).out - y;
                    d * d
                })
                .sum::<f64>()
                / val.len() as f64;
            if best.as_ref().is_none_or(|(b, _)| mse < *b) {
                best = Some((mse, params.clone()));
            }
            if mse <= spec.target_mse * 0.6 {
                break;
            }
        }
    }

    let (best_mse, best_params) = best.expect("at least one evaluation");
    let fragment = emit_fragment(shape, &best_params);
    debug_assert!(fragment.validate().is_empty());

    // Fresh-sample acceptance check, independent of the monitoring set.
    let report = verify_subnet(&fragment, spec, 10_000)?;
    if report.mse > spec.target_mse {
        return Err(Error::TrainingFailure {
            best_mse: report.mse.min(best_mse),
            target_mse: spec.target_mse,
        });
    }
    assert!(
        fragment.neuron_count() <= spec.budget.max_neurons
            && fragment.synapse_count() <= spec.budget.max_synapses
            && fragment.layer_count() <= spec.budget.layers,
        "fragment exceeds its budget"
    );
    Ok(fragment)
}

/// Train a fragment, deriving the architecture from the budget.
pub fn train_subnet(spec: &SubTaskSpec, cfg: &TrainConfig) -> Result<Netlist> {
    let shape = shape_for_budget(spec)?;
    train_mlp(spec, &shape, cfg)
}

/// Largest plain architecture that fits the budget.
fn shape_for_budget(spec: &SubTaskSpec) -> Result<MlpShape> {
    let b = &spec.budget;
    let k = spec.input_dim;
    if k == 0 {
        // Constant fragment: one squash neuron, no inputs, no synapses.
        return Ok(MlpShape::plain(0, Vec::new(), false, OutputKind::Squash));
    }
    if b.layers < 2 {
        return Err(Error::invalid("budget allows no computing layer"));
    }
    let out = OutputKind::Squash;
    if b.layers == 2 {
        return Ok(MlpShape::plain(k, Vec::new(), true, out));
    }
    if b.layers == 3 {
        // neurons: k + 1 + h + 1; synapses: h(k+2) + 1.
        let h_n = b.max_neurons.saturating_sub(k + 2);
        let h_s = b.max_synapses.saturating_sub(1) / (k + 2);
        let h = h_n.min(h_s).max(1);
        return Ok(MlpShape::plain(k, vec![h], true, out));
    }
    // Two hidden layers: pick the admissible split with the most capacity.
    let mut bestpair = (1usize, 1usize);
    let mut bestcap = 0usize;
    for h1 in 1..=b.max_neurons {
        for h2 in 1..=b.max_neurons {
            let shape = MlpShape::plain(k, vec![h1, h2], true, out);
            if shape.neuron_count() <= b.max_neurons && shape.synapse_count() <= b.max_synapses {
                let cap = shape.synapse_count();
                if cap > bestcap {
                    bestcap = cap;
                    bestpair = (h1, h2);
                }
            }
        }
    }
    Ok(MlpShape::plain(k, vec![bestpair.0, bestpair.1], true, out))
}

/// Lower a trained fragment to a netlist. Bias weights ride on synapses from
/// a constant squash source (logsig(0) = 0.5), so a trained bias b becomes a
/// synapse of weight 2b.
fn emit_fragment(shape: &MlpShape, p: &MlpParams) -> Netlist {
    let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
    let inputs: Vec<NeuronId> = (0..shape.inputs).map(|_| b.input_neuron(0)).collect();
    let konst = if shape.bias {
        Some(b.neuron(NeuronKind::SumSquash, 0))
    } else {
        None
    };
    let out_layer = (shape.hidden.len() + 1) as u32;

    let mut prev: Vec<NeuronId> = inputs.clone();
    if !shape.hidden.is_empty() {
        let h1_ids: Vec<NeuronId> = (0..shape.hidden[0])
            .map(|_| b.neuron(NeuronKind::SumSquash, 1))
            .collect();
        for (j, &h) in h1_ids.iter().enumerate() {
            for (i, &inp) in inputs.iter().enumerate() {
                b.wire(inp, h, p.w1[j][i], 0);
            }
            if let Some(c) = konst {
                b.wire(c, h, 2.0 * p.b1[j], 0);
            }
        }
        prev = h1_ids.clone();
        if shape.hidden.len() == 2 {
            let h2_ids: Vec<NeuronId> = (0..shape.hidden[1])
                .map(|_| b.neuron(NeuronKind::SumSquash, 2))
                .collect();
            for (j, &h) in h2_ids.iter().enumerate() {
                for (k, &hp) in prev.iter().enumerate() {
                    b.wire(hp, h, p.w2[j][k], 0);
                }
                for (m, &i) in shape.in_h2_skips.iter().enumerate() {
                    b.wire(inputs[i], h, p.s2[j][m], 0);
                }
                if let Some(c) = konst {
                    b.wire(c, h, 2.0 * p.b2[j], 0);
                }
            }
            prev = h2_ids;
        }
    }

    let out_kind = match shape.output {
        OutputKind::Linear => NeuronKind::SumLinear,
        OutputKind::Squash => NeuronKind::SumSquash,
    };
    let out = b.neuron(out_kind, out_layer);
    for (k, &hp) in prev.iter().enumerate() {
        b.wire(hp, out, p.wo[k], 0);
    }
    for (m, &i) in shape.in_out_skips.iter().enumerate() {
        b.wire(inputs[i], out, p.so[m], 0);
    }
    if let Some(c) = konst {
        b.wire(c, out, 2.0 * p.bo, 0);
    }
    b.output(out);
    b.finish()
}

/// MSE of a fragment against its spec over fresh uniform points, evaluated
/// on the exact execution route.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MseReport {
    pub mse: f64,
    pub max_abs_err: f64,
    pub samples: usize,
}

pub fn verify_subnet(
    fragment: &Netlist,
    spec: &SubTaskSpec,
    n_samples: usize,
) -> Result<MseReport> {
    let mut rng = Rng64::new(0x7e57_ba5e ^ n_samples as u64);
    let mut points = Vec::with_capacity(n_samples);
    let mut targets = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let x = spec.sample_point(&mut rng);
        targets.push(spec.target.eval(&x));
        points.push(x);
    }
    let trace = run(fragment, &points, &ExecConfig::exact())?;
    let mut sse = 0.0;
    let mut max_abs = 0.0f64;
    for (step, &t) in trace.steps.iter().zip(&targets) {
        let e = (step.outputs[0] - t).abs();
        sse += e * e;
        max_abs = max_abs.max(e);
    }
    Ok(MseReport {
        mse: sse / n_samples.max(1) as f64,
        max_abs_err: max_abs,
        samples: n_samples,
    })
}

// ---------------------------------------------------------------------------
// Composition
// ---------------------------------------------------------------------------

/// A port on one fragment: `port` indexes the fragment's `inputs` when used
/// as a destination and its `outputs` when used as a source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PortRef {
    pub fragment: usize,
    pub port: usize,
}

impl PortRef {
    pub fn new(fragment: usize, port: usize) -> Self {
        PortRef { fragment, port }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct Wire {
    pub from: PortRef,
    pub to: PortRef,
    pub delay: u32,
}

/// How fragments connect into one netlist. Serializes as a plan document:
/// cross-fragment edges plus the external input/output bindings.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WiringPlan {
    /// Cross-fragment signal edges with explicit delays.
    #[serde(rename = "edges")]
    pub wires: Vec<Wire>,
    /// (external channel, destination input port).
    #[serde(rename = "input-bindings")]
    pub external_in: Vec<(usize, PortRef)>,
    /// Fragment output ports exposed as composed outputs, in order.
    #[serde(rename = "output-bindings")]
    pub external_out: Vec<PortRef>,
}

impl WiringPlan {
    pub fn wire(&mut self, from: PortRef, to: PortRef, delay: u32) -> &mut Self {
        self.wires.push(Wire { from, to, delay });
        self
    }

    pub fn bind_input(&mut self, channel: usize, to: PortRef) -> &mut Self {
        self.external_in.push((channel, to));
        self
    }

    pub fn expose_output(&mut self, from: PortRef) -> &mut Self {
        self.external_out.push(from);
        self
    }
}

/// Namespaced ids of one fragment inside a composed net.
#[derive(Clone, Debug)]
pub struct FragmentMap {
    pub inputs: Vec<NeuronId>,
    pub outputs: Vec<NeuronId>,
}

/// Compose fragments per a wiring plan into a single netlist.
///
/// Fragment ids are namespaced; every wired fragment input turns from an
/// input-kind port into a pass-through summing receiver fed by a weight-1
/// synapse with the wire's delay. The result must satisfy every netlist
/// invariant; a zero-delay recurrent loop is reported as a composition
/// error naming the loop.
pub fn compose(
    fragments: &[Netlist],
    plan: &WiringPlan,
    encoding: Encoding,
) -> Result<(Netlist, Vec<FragmentMap>)> {
    if fragments.is_empty() {
        return Err(Error::Composition("no fragments to compose".into()));
    }
    let mut bases = Vec::with_capacity(fragments.len());
    let mut next_base: NeuronId = 0;
    for f in fragments {
        bases.push(next_base);
        let max_id = f.neurons.iter().map(|n| n.id).max().unwrap_or(0);
        next_base += max_id + 1;
    }

    let mut neurons = Vec::new();
    let mut synapses = Vec::new();
    let mut maps = Vec::with_capacity(fragments.len());
    for (fi, f) in fragments.iter().enumerate() {
        let base = bases[fi];
        for n in &f.neurons {
            neurons.push(crate::network::Neuron {
                id: base + n.id,
                kind: n.kind,
                layer: n.layer,
            });
        }
        for s in &f.synapses {
            let from = match s.from {
                SignalSource::Neuron { neuron } => SignalSource::neuron(base + neuron),
                SignalSource::External { .. } => {
                    return Err(Error::Composition(format!(
                        "fragment {fi} taps an external channel directly; bind it through the plan"
                    )))
                }
            };
            synapses.push(Synapse {
                from,
                to: base + s.to,
                weight: s.weight,
                delay: s.delay,
            });
        }
        maps.push(FragmentMap {
            inputs: f.inputs.iter().map(|id| base + id).collect(),
            outputs: f.outputs.iter().map(|id| base + id).collect(),
        });
    }

    let resolve_in = |p: PortRef| -> Result<NeuronId> {
        maps.get(p.fragment)
            .and_then(|m| m.inputs.get(p.port))
            .copied()
            .ok_or_else(|| {
                Error::Composition(format!(
                    "input port {}/{} does not exist",
                    p.fragment, p.port
                ))
            })
    };
    let resolve_out = |p: PortRef| -> Result<NeuronId> {
        maps.get(p.fragment)
            .and_then(|m| m.outputs.get(p.port))
            .copied()
            .ok_or_else(|| {
                Error::Composition(format!(
                    "output port {}/{} does not exist",
                    p.fragment, p.port
                ))
            })
    };

    let mut wired: Vec<NeuronId> = Vec::new();
    let mut n_channels = 0usize;
    for &(ch, to) in &plan.external_in {
        let dst = resolve_in(to)?;
        synapses.push(Synapse {
            from: SignalSource::ext(ch),
            to: dst,
            weight: 1.0,
            delay: 0,
        });
        wired.push(dst);
        n_channels = n_channels.max(ch + 1);
    }
    for w in &plan.wires {
        let src = resolve_out(w.from)?;
        let dst = resolve_in(w.to)?;
        synapses.push(Synapse {
            from: SignalSource::neuron(src),
            to: dst,
            weight: 1.0,
            delay: w.delay,
        });
        wired.push(dst);
    }

    // Wired ports become pass-through receivers.
    for id in &wired {
        let n = neurons
            .iter_mut()
            .find(|n| n.id == *id)
            .expect("resolved port exists");
        n.kind = NeuronKind::SumLinear;
    }
    // Every fragment input must be driven.
    for (fi, m) in maps.iter().enumerate() {
        for (pi, id) in m.inputs.iter().enumerate() {
            if !wired.contains(id) {
                return Err(Error::Composition(format!(
                    "fragment {fi} input port {pi} left unwired"
                )));
            }
        }
    }

    let mut outputs = Vec::with_capacity(plan.external_out.len());
    for &p in &plan.external_out {
        outputs.push(resolve_out(p)?);
    }

    let net = Netlist {
        neurons,
        synapses,
        external_inputs: n_channels,
        inputs: Vec::new(),
        outputs,
        encoding,
        taps: Vec::new(),
    };

    let diags = net.validate();
    if !diags.is_empty() {
        let msg = diags
            .iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Composition(msg));
    }
    Ok((net, maps))
}

/// Exact affine accumulator fragment: s' = clamp(s + g * (delta - 1/2)),
/// precharged to mid-range on the first step.
///
/// Two receiver ports (s, delta), one constant source, a boot cell, and one
/// sum-linear integrator. The boot cell subtracts the constant's one-step
/// delayed copy from its live copy; the zero initial state makes that a
/// single 0.5 pulse at step 0, which seats the integrator at the code for
/// zero. Designed by hand; training would only blur an identity.
pub fn accumulator_fragment(delta_gain: f64, stage: u32) -> Netlist {
    let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
    let s_in = b.input_neuron(0);
    let delta_in = b.input_neuron(0);
    let konst = b.neuron(NeuronKind::SumSquash, 0);
    let boot = b.neuron(NeuronKind::SumLinear, 0);
    let sum = b.neuron(NeuronKind::SumLinear, stage);
    b.wire(konst, boot, 1.0, 0);
    b.wire(konst, boot, -1.0, 1);
    b.wire(s_in, sum, 1.0, 0);
    b.wire(delta_in, sum, delta_gain, 0);
    b.wire(konst, sum, -delta_gain, 0); // const emits 0.5: cancels g/2
    b.wire(boot, sum, 1.0, 0);
    b.output(sum);
    b.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{run, ExecConfig};

    fn budget(n: usize, s: usize, l: usize) -> Budget {
        Budget {
            max_neurons: n,
            max_synapses: s,
            layers: l,
        }
    }

    #[test]
    fn constant_half_fragment_is_one_neuron() {
        let spec = SubTaskSpec::new(
            "const-half",
            TargetFn::Constant(0.5),
            0,
            budget(1, 0, 1),
            1e-9,
        );
        let frag = train_subnet(&spec, &TrainConfig::default()).unwrap();
        assert_eq!(frag.neuron_count(), 1);
        assert_eq!(frag.synapse_count(), 0);
        let rep = verify_subnet(&frag, &spec, 100).unwrap();
        assert_eq!(rep.mse, 0.0);
    }

    #[test]
    fn training_failure_reports_best_mse() {
        // One bare hidden unit cannot represent a product to 1e-7.
        let spec = SubTaskSpec::new("impossible", TargetFn::Product, 2, budget(5, 9, 3), 1e-7);
        let cfg = TrainConfig {
            epochs: 40,
            ..TrainConfig::default()
        };
        match train_subnet(&spec, &cfg) {
            Err(Error::TrainingFailure { best_mse, .. }) => assert!(best_mse > 1e-7),
            other => panic!("expected training failure, got {other:?}"),
        }
    }

    #[test]
    fn retrain_is_reproducible() {
        let spec = SubTaskSpec::new("fwd", TargetFn::ScaledForward, 2, budget(12, 40, 3), 0.01);
        let cfg = TrainConfig {
            epochs: 300,
            ..TrainConfig::default()
        };
        let a = train_mlp(&spec, &shape_for_budget(&spec).unwrap(), &cfg).unwrap();
        let b = train_mlp(&spec, &shape_for_budget(&spec).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scaled_forward_trains_below_spec_example_bound() {
        let spec = SubTaskSpec::new("fwd", TargetFn::ScaledForward, 2, budget(12, 40, 3), 0.01);
        let frag = train_subnet(&spec, &TrainConfig::default()).unwrap();
        let rep = verify_subnet(&frag, &spec, 10_000).unwrap();
        assert!(rep.mse <= 0.01, "mse {}", rep.mse);
    }

    #[test]
    fn budget_chooser_fits_a_multiplier_in_the_published_envelope() {
        // Signal-times-signal inside the 13-neuron/30-synapse/3-layer
        // envelope, architecture derived from the budget alone.
        let spec = SubTaskSpec::new(
            "product",
            TargetFn::Product,
            2,
            budget(13, 30, 3),
            0.0013,
        );
        let frag = train_subnet(&spec, &TrainConfig::default()).unwrap();
        assert!(frag.neuron_count() <= 13);
        assert!(frag.synapse_count() <= 30);
        assert_eq!(frag.layer_count(), 3);
        let rep = verify_subnet(&frag, &spec, 10_000).unwrap();
        assert!(rep.mse <= 0.0013, "mse {}", rep.mse);
    }

    #[test]
    fn deliberately_wrong_fragment_scores_badly() {
        // Identity in u against the product target: MSE is the integral of
        // (u - uv)^2 over the unit square, about 1/9.
        let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
        let u = b.input_neuron(0);
        let _v = b.input_neuron(0);
        let o = b.neuron(NeuronKind::SumLinear, 1);
        b.wire(u, o, 1.0, 0);
        b.output(o);
        let frag = b.finish();
        let spec = SubTaskSpec::new("prod", TargetFn::Product, 2, budget(4, 2, 2), 0.0013);
        let rep = verify_subnet(&frag, &spec, 10_000).unwrap();
        assert!(rep.mse >= 0.01, "mse {}", rep.mse);
        assert!((rep.mse - 1.0 / 9.0).abs() < 0.02);
    }

    #[test]
    fn compose_single_fragment_renamespaces() {
        let frag = {
            let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
            let x = b.input_neuron(0);
            let o = b.neuron(NeuronKind::SumLinear, 1);
            b.wire(x, o, 0.5, 0);
            b.output(o);
            b.finish()
        };
        let mut plan = WiringPlan::default();
        plan.bind_input(0, PortRef::new(0, 0));
        plan.expose_output(PortRef::new(0, 0));
        let (net, _) = compose(&[frag], &plan, Encoding::GenericIntensity).unwrap();
        assert!(net.validate().is_empty());
        let out = run(&net, &[vec![0.8]], &ExecConfig::exact()).unwrap();
        assert!((out.steps[0].outputs[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn compose_chains_feed_forward() {
        // f(x) = 0.5x, then g(x) = x + 0.25: g(f(x)) = 0.5x + 0.25.
        let f = {
            let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
            let x = b.input_neuron(0);
            let o = b.neuron(NeuronKind::SumLinear, 1);
            b.wire(x, o, 0.5, 0);
            b.output(o);
            b.finish()
        };
        let g = {
            let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
            let x = b.input_neuron(0);
            let c = b.neuron(NeuronKind::SumSquash, 0);
            let o = b.neuron(NeuronKind::SumLinear, 1);
            b.wire(x, o, 1.0, 0);
            b.wire(c, o, 0.5, 0);
            b.output(o);
            b.finish()
        };
        let mut plan = WiringPlan::default();
        plan.bind_input(0, PortRef::new(0, 0));
        plan.wire(PortRef::new(0, 0), PortRef::new(1, 0), 0);
        plan.expose_output(PortRef::new(1, 0));
        let (net, _) = compose(&[f, g], &plan, Encoding::GenericIntensity).unwrap();

        let mut rng = Rng64::new(42);
        let points: Vec<Vec<f64>> = (0..100).map(|_| vec![rng.next_f64()]).collect();
        let trace = run(&net, &points, &ExecConfig::exact()).unwrap();
        for (p, step) in points.iter().zip(&trace.steps) {
            let expect = 0.5 * p[0] + 0.25;
            assert!((step.outputs[0] - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn compose_rejects_zero_delay_loop() {
        let f = {
            let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
            let x = b.input_neuron(0);
            let o = b.neuron(NeuronKind::SumLinear, 1);
            b.wire(x, o, 1.0, 0);
            b.output(o);
            b.finish()
        };
        let mut plan = WiringPlan::default();
        plan.wire(PortRef::new(0, 0), PortRef::new(0, 0), 0);
        let err = compose(std::slice::from_ref(&f), &plan, Encoding::GenericIntensity).unwrap_err();
        assert!(matches!(err, Error::Composition(_)), "{err}");

        // The same loop with delay 1 is a legal recurrent estimate-holder.
        let mut plan = WiringPlan::default();
        plan.wire(PortRef::new(0, 0), PortRef::new(0, 0), 1);
        plan.expose_output(PortRef::new(0, 0));
        assert!(compose(&[f], &plan, Encoding::GenericIntensity).is_ok());
    }

    #[test]
    fn compose_rejects_bad_port_and_unwired_input() {
        let f = {
            let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
            let x = b.input_neuron(0);
            let o = b.neuron(NeuronKind::SumLinear, 1);
            b.wire(x, o, 1.0, 0);
            b.output(o);
            b.finish()
        };
        let mut plan = WiringPlan::default();
        plan.bind_input(0, PortRef::new(0, 5));
        assert!(compose(std::slice::from_ref(&f), &plan, Encoding::GenericIntensity).is_err());

        let plan = WiringPlan::default();
        assert!(compose(&[f], &plan, Encoding::GenericIntensity).is_err());
    }

    #[test]
    fn wiring_plan_serializes_as_a_plan_document() {
        let mut plan = WiringPlan::default();
        plan.bind_input(0, PortRef::new(0, 1));
        plan.wire(PortRef::new(0, 0), PortRef::new(1, 0), 1);
        plan.expose_output(PortRef::new(1, 0));
        let json = serde_json::to_string(&plan).unwrap();
        assert!(json.contains("\"edges\""), "{json}");
        assert!(json.contains("\"input-bindings\""));
        let back: WiringPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
    }

    #[test]
    fn accumulator_precharges_then_integrates() {
        let acc = accumulator_fragment(0.4, 3);
        let mut plan = WiringPlan::default();
        plan.bind_input(0, PortRef::new(0, 1)); // delta on channel 0
        plan.wire(PortRef::new(0, 0), PortRef::new(0, 0), 1); // s self-loop
        plan.expose_output(PortRef::new(0, 0));
        let (net, _) = compose(&[acc], &plan, Encoding::GenericIntensity).unwrap();

        // delta = 0.5 is the zero-increment code: the boot pulse seats s at
        // mid-range on step 0 and it holds there.
        let hold = run(&net, &vec![vec![0.5]; 4], &ExecConfig::exact()).unwrap();
        for s in &hold.steps {
            assert!((s.outputs[0] - 0.5).abs() < 1e-12, "{:?}", hold.steps);
        }
        // delta = 0.9 integrates up by 0.4 * 0.4 = 0.16 per step from 0.5.
        let up = run(&net, &vec![vec![0.9]; 3], &ExecConfig::exact()).unwrap();
        let expect = [0.66, 0.82, 0.98];
        for (s, e) in up.steps.iter().zip(expect) {
            assert!((s.outputs[0] - e).abs() < 1e-9, "{:?}", up.steps);
        }
    }
}
