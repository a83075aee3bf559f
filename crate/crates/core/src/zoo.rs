//! Builders for the reproduced networks, their task generators, and the
//! changing-weight baseline learner.
//!
//! Four networks:
//!
//! - `sigma_and`: the two-neuron Sigma-And block multiplying a signal by a
//!   signal through one AND gate.
//! - `umult`: a trained generic-encoding multiplier (fully connected 2-10-1,
//!   no biases), the feed-forward comparison point for Sigma-And.
//! - `plantran`: a fixed-weight learner for the single-synapse plant
//!   y = logsig(W x), W in [-4, 4]: trained forward and gradient fragments
//!   plus an exact recurrent accumulator holding the weight estimate.
//! - `boolean`: a fixed-weight learner for two-input linearly separable
//!   Boolean functions: three coupled single-parameter learners sharing one
//!   forward/error path, built from Sigma-And product nodes and a fully
//!   pipelined register chain.

use crate::error::{Error, Result};
use crate::harness::{detect_convergence, ConvergenceRule};
use crate::network::{Encoding, Netlist, NetlistBuilder, NeuronKind};
use crate::optics::squash;
use crate::rng;
use crate::subnet::{
    accumulator_fragment, compose, train_mlp, Budget, MlpShape, OutputKind, PortRef, SubTaskSpec,
    TargetFn, TrainConfig, WiringPlan, ERROR_TERM_MAX,
};

/// Boolean TRUE as an activation; 1.0 itself is outside the signal range.
pub const BOOL_HIGH: f64 = 0.9375;
/// Boolean FALSE as an activation.
pub const BOOL_LOW: f64 = 0.0;

/// PlanTran weight-estimate convention: W = 8s - 4 for s in [0, 1).
pub const PLANTRAN_W_SPAN: f64 = 8.0;
/// BooLean input-weight convention: w = 10s - 5.
pub const BOOLEAN_W_SPAN: f64 = 10.0;
/// BooLean bias convention: b = 14s - 7.
pub const BOOLEAN_B_SPAN: f64 = 14.0;

/// Default embedded learning rates, in W-units, tuned so simulated
/// convergence lands inside the reported cycle ranges.
pub const PLANTRAN_ETA: f64 = 2.0;
/// The Boolean learner runs hotter; its corners only arrive a quarter of
/// the time each.
pub const BOOLEAN_ETA: f64 = 6.0;
/// Relative integration rate of the bias learner.
pub const BOOLEAN_BIAS_BOOST: f64 = 0.75;
/// Power-on bias estimate, in W-units. Seating the bias below zero lengthens
/// the easy all-true approach and shortens the long dive that AND-family
/// targets need, which keeps every separable function inside one step
/// budget.
pub const BOOLEAN_BIAS_PRESET: f64 = -2.0;

const LANE_TASK_X: u64 = 0x7461736b;
const LANE_TASK_W: u64 = 0x77616e64;
const LANE_CORNER: u64 = 0x636f726e;

// ---------------------------------------------------------------------------
// Tasks and data
// ---------------------------------------------------------------------------

/// One single-synapse plant-transfer task: learn y = logsig(w x).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlanTranTask {
    pub w: f64,
    pub seed: u64,
}

impl PlanTranTask {
    pub fn new(w: f64, seed: u64) -> Result<Self> {
        if !(-4.0..=4.0).contains(&w) {
            return Err(Error::invalid(format!("task weight {w} outside [-4,4]")));
        }
        Ok(PlanTranTask { w, seed })
    }

    /// Draw a task with w uniform in [-4, 4].
    pub fn random(seed: u64) -> Self {
        let w = 8.0 * rng::uniform(seed, LANE_TASK_W, 0) - 4.0;
        PlanTranTask { w, seed }
    }

    /// The t-th presentation: x uniform in [0,1), y = logsig(w x).
    pub fn pair(&self, t: u64) -> DataPair {
        let x = rng::uniform(self.seed, LANE_TASK_X, t);
        DataPair {
            x: vec![x],
            y: squash(self.w * x).expect("finite"),
        }
    }
}

/// One presented sample: inputs plus target, all inside [0, 1).
#[derive(Clone, Debug, PartialEq)]
pub struct DataPair {
    pub x: Vec<f64>,
    pub y: f64,
}

/// Deterministic task data stream for a plant-transfer task.
pub fn gen_plantran_data(task: &PlanTranTask, n: usize) -> Vec<DataPair> {
    (0..n as u64).map(|t| task.pair(t)).collect()
}

/// A two-input Boolean function by truth table, indexed by 2*x1 + x2.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BooleanFunction {
    pub truth_table: [bool; 4],
    pub separable: bool,
}

impl BooleanFunction {
    pub fn from_table(truth_table: [bool; 4]) -> Self {
        BooleanFunction {
            truth_table,
            separable: threshold_realizable(&truth_table),
        }
    }

    pub fn eval(&self, x1: bool, x2: bool) -> bool {
        self.truth_table[((x1 as usize) << 1) | x2 as usize]
    }

    /// The t-th presentation: a uniformly random corner of the square.
    pub fn pair(&self, seed: u64, t: u64) -> DataPair {
        let corner = (rng::key3(seed, LANE_CORNER, t) % 4) as usize;
        let x1 = corner >> 1 == 1;
        let x2 = corner & 1 == 1;
        let level = |b: bool| if b { BOOL_HIGH } else { BOOL_LOW };
        DataPair {
            x: vec![level(x1), level(x2)],
            y: level(self.eval(x1, x2)),
        }
    }

    /// The constantly-true function, the worked example of the MSE plot.
    pub fn always_true() -> Self {
        BooleanFunction::from_table([true; 4])
    }

    pub fn and() -> Self {
        BooleanFunction::from_table([false, false, false, true])
    }

    pub fn xor() -> Self {
        BooleanFunction::from_table([false, true, true, false])
    }

    pub fn name(&self) -> String {
        let bits: String = self
            .truth_table
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect();
        format!("tt{bits}")
    }
}

/// Exhaustive threshold search: is the table realized by
/// sign(w1 x1 + w2 x2 + b) over the four corners? The candidate grid covers
/// every dichotomy of the 2-cube that any threshold realizes.
fn threshold_realizable(table: &[bool; 4]) -> bool {
    let wgrid = [-2.0, -1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0];
    let bgrid = [
        -3.0, -2.5, -2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0,
    ];
    for &w1 in &wgrid {
        for &w2 in &wgrid {
            for &b in &bgrid {
                let ok = (0..4).all(|i| {
                    let x1 = (i >> 1) as f64;
                    let x2 = (i & 1) as f64;
                    (w1 * x1 + w2 * x2 + b > 0.0) == table[i]
                });
                if ok {
                    return true;
                }
            }
        }
    }
    false
}

/// All 16 two-input Boolean functions minus XOR and XNOR, each verified
/// separable by the exhaustive threshold search.
pub fn enumerate_separable() -> Vec<BooleanFunction> {
    (0u8..16)
        .map(|bits| {
            BooleanFunction::from_table([
                bits & 1 != 0,
                bits & 2 != 0,
                bits & 4 != 0,
                bits & 8 != 0,
            ])
        })
        .filter(|f| f.separable)
        .collect()
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

/// The Sigma-And block: one AND node and one summing node compute a
/// signal-times-a-signal. The summing node also taps both input lines
/// directly; for the exact product those taps sit at zero attenuation.
pub fn build_sigma_and() -> Netlist {
    let mut b = NetlistBuilder::new(Encoding::SigmaAnd);
    let u = b.external(0);
    let v = b.external(1);
    let and = b.neuron(NeuronKind::Product, 0);
    let sum = b.neuron(NeuronKind::SumLinear, 1);
    b.connect(u, and, 1.0, 0);
    b.connect(v, and, 1.0, 0);
    b.wire(and, sum, 1.0, 0);
    b.connect(u, sum, 0.0, 0);
    b.connect(v, sum, 0.0, 0);
    b.output(sum);
    let net = b.finish();
    assert_eq!(net.neuron_count(), 2);
    assert_eq!(net.synapse_count(), 5);
    debug_assert!(net.validate().is_empty());
    net
}

/// The trained generic-encoding multiplier: fully connected 2-10-1 with no
/// bias units, squashing hidden layer, affine output.
pub fn build_umult(cfg: &TrainConfig) -> Result<Netlist> {
    let spec = SubTaskSpec::new(
        "umult",
        TargetFn::Product,
        2,
        Budget {
            max_neurons: 13,
            max_synapses: 30,
            layers: 3,
        },
        0.0015,
    );
    let shape = MlpShape::plain(2, vec![10], false, OutputKind::Linear);
    let mut net = train_mlp(&spec, &shape, cfg)?;
    net.encoding = Encoding::GenericSp;
    assert_eq!(
        (net.layer_count(), net.neuron_count(), net.synapse_count()),
        (3, 13, 30)
    );
    Ok(net)
}

/// Fragment shapes of the plant-transfer learner. The budget arithmetic is
/// rigid: 12 + 12 + 5 neurons and 45 + 42 + 6 + 7 synapses land exactly on
/// the published totals.
fn plantran_fwd_shape() -> MlpShape {
    MlpShape {
        inputs: 2,
        hidden: vec![5, 3],
        bias: true,
        in_h2_skips: vec![0, 1],
        in_out_skips: vec![0, 1],
        output: OutputKind::Squash,
    }
}

fn plantran_grad_shape() -> MlpShape {
    MlpShape {
        inputs: 3,
        hidden: vec![4, 3],
        bias: true,
        in_h2_skips: vec![0, 1],
        in_out_skips: vec![1],
        output: OutputKind::Squash,
    }
}

/// The plant-transfer fixed-weight learner.
///
/// Three fragments: a trained forward map yhat = logsig(8(s - 1/2) x), a
/// trained gradient former producing the affine-encoded increment, and an
/// exact accumulator integrating it on a delay-1 loop. The embedded learning
/// rate rides entirely on the accumulator's fixed synapses, so eta is a
/// build parameter rather than a retraining job.
pub fn build_plantran(cfg: &TrainConfig, eta: f64) -> Result<Netlist> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta must be positive"));
    }
    let fwd_spec = SubTaskSpec::new(
        "plantran-forward",
        TargetFn::ScaledForward,
        2,
        Budget {
            max_neurons: 12,
            max_synapses: 45,
            layers: 4,
        },
        0.002,
    );
    let grad_spec = SubTaskSpec::new(
        "plantran-gradient",
        TargetFn::GradientSignal,
        3,
        Budget {
            max_neurons: 12,
            max_synapses: 42,
            layers: 4,
        },
        0.0005,
    );
    let fwd = train_mlp(&fwd_spec, &plantran_fwd_shape(), cfg)?;
    let grad = train_mlp(
        &grad_spec,
        &plantran_grad_shape(),
        &TrainConfig {
            seed: cfg.seed ^ 0x9d,
            ..*cfg
        },
    )?;
    // ds = (eta/8) e x = (eta e_max / 4) (delta - 1/2).
    let acc = accumulator_fragment(eta * ERROR_TERM_MAX / 4.0, 3);

    // Ports: fwd = [s, x] -> yhat; grad = [y, yhat, x] -> delta; acc =
    // [s, delta] -> s'. Channels: 0 = x, 1 = y.
    let mut plan = WiringPlan::default();
    plan.bind_input(0, PortRef::new(0, 1)); // x -> fwd.x
    plan.bind_input(0, PortRef::new(1, 2)); // x -> grad.x
    plan.bind_input(1, PortRef::new(1, 0)); // y -> grad.y
    plan.wire(PortRef::new(0, 0), PortRef::new(1, 1), 0); // yhat -> grad.yhat
    plan.wire(PortRef::new(1, 0), PortRef::new(2, 1), 0); // delta -> acc.delta
    plan.wire(PortRef::new(2, 0), PortRef::new(2, 0), 1); // weight-estimate loop
    plan.wire(PortRef::new(2, 0), PortRef::new(0, 0), 1); // estimate -> fwd.s
    plan.expose_output(PortRef::new(0, 0));

    let (mut net, maps) = compose(&[fwd, grad, acc], &plan, Encoding::GenericSp)?;
    net.taps
        .push(("weight-estimate".into(), maps[2].outputs[0]));
    assert_eq!(
        (net.layer_count(), net.neuron_count(), net.synapse_count()),
        (4, 29, 100)
    );
    Ok(net)
}

/// Decode a PlanTran weight-estimate tap back to W-units.
pub fn plantran_estimate_to_w(s: f64) -> f64 {
    PLANTRAN_W_SPAN * s - PLANTRAN_W_SPAN / 2.0
}

/// The Boolean fixed-weight learner.
///
/// Model: yhat = logsig(w1 x1 + w2 x2 + b) with w in [-5, 5] and b in
/// [-7, 7], each parameter held by one recurrent accumulator. Everything is
/// hand-designed Sigma-And machinery: two AND nodes form the forward
/// products, two register ranks carry y, yhat, x1, x2 into the error stage
/// with matched delays, gate nodes form e = (y - yhat) yhat (1 - yhat) as
/// the difference of two AND chains, and per-learner AND nodes gate the
/// increment by the input line. A boot cell (a one-step power-on pulse
/// synthesized from the zero initial state) precharges all three
/// accumulators to mid-range so the learner starts from zero effective
/// parameters, matching the changing-weight baseline. Estimate and gate
/// signals are brought out through isolation buffers rather than tapped on
/// the feedback nodes directly.
pub fn build_boolean(eta: f64) -> Result<Netlist> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta must be positive"));
    }
    let k = eta / BOOLEAN_W_SPAN; // x-learner increment scale
    let k3 = eta * BOOLEAN_BIAS_BOOST / BOOLEAN_B_SPAN; // bias-learner scale

    let mut bl = NetlistBuilder::new(Encoding::SigmaAnd);
    let x1 = bl.external(0);
    let x2 = bl.external(1);
    let y = bl.external(2);

    // Stage 0: references, boot, input latches.
    let const_a = bl.neuron(NeuronKind::SumSquash, 0);
    let const_b = bl.neuron(NeuronKind::SumSquash, 0);
    let boot = bl.neuron(NeuronKind::SumLinear, 0);
    let rx10 = bl.neuron(NeuronKind::SumLinear, 0);
    let rx20 = bl.neuron(NeuronKind::SumLinear, 0);
    let ry0 = bl.neuron(NeuronKind::SumLinear, 0);
    bl.wire(const_b, boot, 1.0, 0);
    bl.wire(const_b, boot, -1.0, 1); // zero state makes this a step-0 pulse
    bl.connect(x1, rx10, 1.0, 0);
    bl.connect(x2, rx20, 1.0, 0);
    bl.connect(y, ry0, 1.0, 0);

    // Stage 1: forward pass over the latched inputs, plus the prediction
    // latch feeding the learning pipeline.
    let and1 = bl.neuron(NeuronKind::Product, 1);
    let and2 = bl.neuron(NeuronKind::Product, 1);
    let fwd = bl.neuron(NeuronKind::SumSquash, 1);
    let fl = bl.neuron(NeuronKind::SumLinear, 1);

    // Stage 2: complement and first delay rank.
    let inv = bl.neuron(NeuronKind::SumLinear, 2);
    let rh1 = bl.neuron(NeuronKind::SumLinear, 2);
    let ry1 = bl.neuron(NeuronKind::SumLinear, 2);
    let rx11 = bl.neuron(NeuronKind::SumLinear, 2);
    let rx21 = bl.neuron(NeuronKind::SumLinear, 2);

    // Stage 3: second delay rank and the gradient gate chain. The gates
    // cascade within the rank, so every factor carries the same sample
    // index: d = yhat(1-yhat), then y*d and yhat*d, then the per-input
    // increments.
    let d = bl.neuron(NeuronKind::Product, 3);
    let rh2 = bl.neuron(NeuronKind::SumLinear, 3);
    let ry2 = bl.neuron(NeuronKind::SumLinear, 3);
    let rx12 = bl.neuron(NeuronKind::SumLinear, 3);
    let rx22 = bl.neuron(NeuronKind::SumLinear, 3);
    let ga = bl.neuron(NeuronKind::Product, 3); // y * d
    let gb = bl.neuron(NeuronKind::Product, 3); // yhat * d
    let pa1 = bl.neuron(NeuronKind::Product, 3);
    let pb1 = bl.neuron(NeuronKind::Product, 3);
    let pa2 = bl.neuron(NeuronKind::Product, 3);
    let pb2 = bl.neuron(NeuronKind::Product, 3);

    // Stage 4: integrators and readout buffers.
    let acc1 = bl.neuron(NeuronKind::SumLinear, 4);
    let acc2 = bl.neuron(NeuronKind::SumLinear, 4);
    let acc3 = bl.neuron(NeuronKind::SumLinear, 4);
    let mon_w1 = bl.neuron(NeuronKind::SumLinear, 4);
    let mon_w2 = bl.neuron(NeuronKind::SumLinear, 4);
    let mon_b = bl.neuron(NeuronKind::SumLinear, 4);
    let mon_d = bl.neuron(NeuronKind::SumLinear, 4);

    // Forward: net = 10(s1 x1) - 5 x1 + 10(s2 x2) - 5 x2 + 14 s3 - 7.
    bl.wire(acc1, and1, 1.0, 1);
    bl.wire(rx10, and1, 1.0, 0);
    bl.wire(acc2, and2, 1.0, 1);
    bl.wire(rx20, and2, 1.0, 0);
    bl.wire(and1, fwd, BOOLEAN_W_SPAN, 0);
    bl.wire(and2, fwd, BOOLEAN_W_SPAN, 0);
    bl.wire(rx10, fwd, -BOOLEAN_W_SPAN / 2.0, 0);
    bl.wire(rx20, fwd, -BOOLEAN_W_SPAN / 2.0, 0);
    bl.wire(acc3, fwd, BOOLEAN_B_SPAN, 1);
    bl.wire(const_a, fwd, -BOOLEAN_B_SPAN, 0); // const emits 0.5
    bl.wire(fwd, fl, 1.0, 0);

    // Rank 1.
    bl.wire(fl, inv, -1.0, 1);
    bl.wire(const_b, inv, 2.0, 0);
    bl.wire(fl, rh1, 1.0, 1);
    bl.wire(ry0, ry1, 1.0, 1);
    bl.wire(rx10, rx11, 1.0, 1);
    bl.wire(rx20, rx21, 1.0, 1);

    // Rank 2 registers.
    bl.wire(rh1, rh2, 1.0, 1);
    bl.wire(ry1, ry2, 1.0, 1);
    bl.wire(rx11, rx12, 1.0, 1);
    bl.wire(rx21, rx22, 1.0, 1);

    // Gate chain, combinational within rank 2.
    bl.wire(rh1, d, 1.0, 1);
    bl.wire(inv, d, 1.0, 1);
    bl.wire(ry2, ga, 1.0, 0);
    bl.wire(d, ga, 1.0, 0);
    bl.wire(rh2, gb, 1.0, 0);
    bl.wire(d, gb, 1.0, 0);
    bl.wire(ga, pa1, 1.0, 0);
    bl.wire(rx12, pa1, 1.0, 0);
    bl.wire(gb, pb1, 1.0, 0);
    bl.wire(rx12, pb1, 1.0, 0);
    bl.wire(ga, pa2, 1.0, 0);
    bl.wire(rx22, pa2, 1.0, 0);
    bl.wire(gb, pb2, 1.0, 0);
    bl.wire(rx22, pb2, 1.0, 0);

    // Integrators: one update per presentation on a delay-1 self loop,
    // precharged to mid-range by the boot pulse.
    bl.wire(acc1, acc1, 1.0, 1);
    bl.wire(pa1, acc1, k, 1);
    bl.wire(pb1, acc1, -k, 1);
    bl.wire(boot, acc1, 1.0, 0);

    bl.wire(acc2, acc2, 1.0, 1);
    bl.wire(pa2, acc2, k, 1);
    bl.wire(pb2, acc2, -k, 1);
    bl.wire(boot, acc2, 1.0, 0);

    bl.wire(acc3, acc3, 1.0, 1);
    bl.wire(ga, acc3, k3, 1);
    bl.wire(gb, acc3, -k3, 1);
    let preset3 = (BOOLEAN_BIAS_PRESET / BOOLEAN_B_SPAN + 0.5) * 2.0;
    bl.wire(boot, acc3, preset3, 0);

    // Readout isolation buffers.
    bl.wire(acc1, mon_w1, 1.0, 1);
    bl.wire(acc2, mon_w2, 1.0, 1);
    bl.wire(acc3, mon_b, 1.0, 1);
    bl.wire(d, mon_d, 1.0, 1);

    bl.output(fwd);
    bl.tap("w1-estimate", mon_w1);
    bl.tap("w2-estimate", mon_w2);
    bl.tap("bias-estimate", mon_b);
    bl.tap("gradient-gate", mon_d);

    let net = bl.finish();
    net.ensure_valid()?;
    assert_eq!(
        (net.layer_count(), net.neuron_count(), net.synapse_count()),
        (5, 33, 56)
    );
    Ok(net)
}

// ---------------------------------------------------------------------------
// Changing-weight baseline
// ---------------------------------------------------------------------------

/// What the baseline learner runs against.
#[derive(Clone, Debug)]
pub enum BaselineTask {
    PlanTran(PlanTranTask),
    Boolean { f: BooleanFunction, seed: u64 },
}

/// Per-step MSE trace plus the detected convergence step of a baseline run.
#[derive(Clone, Debug)]
pub struct BaselineRecord {
    pub mse_series: Vec<f64>,
    pub nc: Option<usize>,
}

/// The float-domain delta-rule learner: the exact algorithm the fixed-weight
/// networks embed, run on the same data stream with the same convergence
/// rule. This is the learning-speed oracle.
pub fn baseline_online_backprop(
    task: &BaselineTask,
    eta: f64,
    steps: usize,
    rule: &ConvergenceRule,
) -> BaselineRecord {
    let mut series = Vec::with_capacity(steps);
    match task {
        BaselineTask::PlanTran(t) => {
            let mut w_hat = 0.0f64;
            for step in 0..steps {
                let pair = t.pair(step as u64);
                let x = pair.x[0];
                let yhat = squash(w_hat * x).expect("finite");
                let err = pair.y - yhat;
                series.push(err * err);
                w_hat += eta * err * yhat * (1.0 - yhat) * x;
                w_hat = w_hat.clamp(-4.0, 4.0);
            }
        }
        BaselineTask::Boolean { f, seed } => {
            let mut w = [0.0, 0.0, BOOLEAN_BIAS_PRESET]; // w1, w2, bias
            for step in 0..steps {
                let pair = f.pair(*seed, step as u64);
                let (x1, x2) = (pair.x[0], pair.x[1]);
                let net = w[0] * x1 + w[1] * x2 + w[2];
                let yhat = squash(net).expect("finite");
                let err = pair.y - yhat;
                series.push(err * err);
                let e = err * yhat * (1.0 - yhat);
                w[0] = (w[0] + eta * e * x1).clamp(-5.0, 5.0);
                w[1] = (w[1] + eta * e * x2).clamp(-5.0, 5.0);
                w[2] = (w[2] + eta * BOOLEAN_BIAS_BOOST * e).clamp(-7.0, 7.0);
            }
        }
    }
    let nc = detect_convergence(&series, rule);
    BaselineRecord {
        mse_series: series,
        nc,
    }
}
