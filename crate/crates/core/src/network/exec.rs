//! Macro-step execution of netlists.
//!
//! One macro-step is one data presentation: external inputs are encoded per
//! the netlist's signal encoding, every synaptic multiplication runs, neuron
//! nonlinearities apply, and the delay lines advance. Delayed signals are
//! read from state buffers at (step - delay); zero-initialized state supplies
//! zeros before the run starts.
//!
//! Signal fidelity is a knob:
//!
//! - [`SignalModel::Exact`] evaluates the weighted graph in plain floating
//!   point, edge by edge. This is the reference route used by training and
//!   verification.
//! - [`SignalModel::Hardware`] models the signal path. Generic-encoding nets
//!   batch same-destination-layer edges into a dual-rail mask and run them
//!   through the optical stage ([`crate::optics::matvec`]); the intensity
//!   variant carries quantized levels, the stochastic-pulse variant samples
//!   each external channel as a pulse train once per step. Sigma-And nets
//!   run per-edge pulse arithmetic: external taps and product factors are
//!   sampled as Bernoulli trains on independent lanes derived from
//!   (seed, step, edge), products are slice-wise ANDs, and electronic spans
//!   (sums, registers, the recurrent integration) carry exact values, which
//!   is how the test bench divided the labor.

use super::{Encoding, Netlist, NeuronId, NeuronKind, SignalSource};
use crate::error::{Error, Result};
use crate::optics::{matvec, squash, NoiseSpec, QuantizationSpec, WeightMask};
use crate::pulse::{self, Activation, PulseTrain, StreamId, MAX_ACTIVATION};
use crate::rng;
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};

/// Lane-derivation tags keeping the independent stochastic streams apart.
const LANE_CHANNEL: u64 = 0x6368616e; // per-channel transport draws
const LANE_EDGE: u64 = 0x65646765; // per-edge sampling draws

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignalModel {
    /// Reference float evaluation; ignores np, quantization, and noise.
    Exact,
    /// Full signal-path model per the netlist encoding.
    Hardware,
}

/// Everything one macro-step needs beyond the netlist itself.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExecConfig {
    /// Pulse-train length for stochastic encodings.
    pub np: usize,
    /// Master seed; all lanes derive from it.
    pub seed: u64,
    pub quantization: QuantizationSpec,
    pub noise: NoiseSpec,
    pub model: SignalModel,
    /// Also snap the attenuation masks to the quantization grid. Off by
    /// default: conversion precision limits sit on the signal path, not the
    /// synaptic medium.
    #[serde(default)]
    pub quantize_mask: bool,
}

impl ExecConfig {
    pub fn exact() -> Self {
        ExecConfig {
            np: pulse::DEFAULT_NP,
            seed: 0,
            quantization: QuantizationSpec::IDEAL,
            noise: NoiseSpec::NONE,
            model: SignalModel::Exact,
            quantize_mask: false,
        }
    }

    pub fn hardware(np: usize, seed: u64) -> Self {
        ExecConfig {
            np,
            seed,
            quantization: QuantizationSpec::IDEAL,
            noise: NoiseSpec::NONE,
            model: SignalModel::Hardware,
            quantize_mask: false,
        }
    }

    fn check(&self) -> Result<()> {
        if self.np == 0 {
            return Err(Error::invalid("np must be at least 1"));
        }
        Ok(())
    }
}

/// Delay-line buffers plus the step counter. Buffer depth per signal source
/// equals the maximum delay of its outbound synapses.
#[derive(Clone, Debug)]
pub struct NetState {
    /// Per source (external channels first, then neurons): values at steps
    /// t-1, t-2, ... front to back.
    bufs: Vec<VecDeque<f64>>,
    pub step: u64,
    matvec_calls: u64,
}

impl NetState {
    /// Zero-initialized state for a netlist.
    pub fn zero(net: &Netlist) -> Self {
        let depths = source_depths(net);
        NetState {
            bufs: depths
                .iter()
                .map(|&d| {
                    let mut q = VecDeque::with_capacity(d as usize);
                    q.extend(std::iter::repeat_n(0.0, d as usize));
                    q
                })
                .collect(),
            step: 0,
            matvec_calls: 0,
        }
    }

    fn delayed(&self, src: usize, delay: u32) -> f64 {
        debug_assert!(delay >= 1);
        self.bufs[src]
            .get(delay as usize - 1)
            .copied()
            .unwrap_or(0.0)
    }

    fn advance(&mut self, current: &[f64]) {
        // Buffers are created at their final depth; a push is always paired
        // with a pop so depth-k sources keep exactly k past values.
        for (buf, &v) in self.bufs.iter_mut().zip(current) {
            if !buf.is_empty() {
                buf.pop_back();
                buf.push_front(v);
            }
        }
        self.step += 1;
    }
}

/// Maximum outbound delay per signal source (channels, then neurons).
fn source_depths(net: &Netlist) -> Vec<u32> {
    let idx: HashMap<NeuronId, usize> = net
        .neurons
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id, i))
        .collect();
    let mut depths = vec![0u32; net.external_inputs + net.neurons.len()];
    for s in &net.synapses {
        let src = match s.from {
            SignalSource::External { ext } => ext,
            SignalSource::Neuron { neuron } => net.external_inputs + idx[&neuron],
        };
        depths[src] = depths[src].max(s.delay);
    }
    depths
}

/// Per-step record: decoded output activations plus the named probe taps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub outputs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taps: Vec<(String, f64)>,
}

/// One record per executed macro-step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub steps: Vec<StepRecord>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Series of one output across all steps.
    pub fn output_series(&self, output_index: usize) -> Vec<f64> {
        self.steps
            .iter()
            .map(|s| s.outputs[output_index])
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Compiled execution plan
// ---------------------------------------------------------------------------

/// One schedulable piece of a step, in zero-delay topological order.
enum Unit {
    /// Input-kind neuron bound to an external channel.
    Input { neuron: usize, channel: usize },
    /// Sum neuron with no inbound synapses (constant source).
    Isolated { neuron: usize },
    /// Product neuron with its two inbound synapse indices.
    Product { neuron: usize, syn: [usize; 2] },
    /// Same-destination-layer sum neurons batched into one optical pass.
    Batch {
        mask: WeightMask,
        /// Mask columns: (source index, delay).
        channels: Vec<(usize, u32)>,
        dests: Vec<usize>,
    },
}

struct Plan {
    topo: Vec<usize>,
    inbound: Vec<Vec<usize>>,
    units: Vec<Unit>,
    /// Source index of each synapse's origin.
    syn_src: Vec<usize>,
    n_channels: usize,
    /// Channel bound to each input-kind neuron.
    input_channel: Vec<Option<usize>>,
}

impl Plan {
    fn build(net: &Netlist) -> Result<Plan> {
        let n = net.neurons.len();
        let n_channels = net.external_inputs;
        let idx: HashMap<NeuronId, usize> = net
            .neurons
            .iter()
            .enumerate()
            .map(|(i, nn)| (nn.id, i))
            .collect();

        let mut inbound: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut syn_src = Vec::with_capacity(net.synapses.len());
        for (si, s) in net.synapses.iter().enumerate() {
            inbound[idx[&s.to]].push(si);
            syn_src.push(match s.from {
                SignalSource::External { ext } => ext,
                SignalSource::Neuron { neuron } => n_channels + idx[&neuron],
            });
        }

        let mut input_channel = vec![None; n];
        for (ch, id) in net.inputs.iter().enumerate() {
            input_channel[idx[id]] = Some(ch);
        }

        // Zero-delay topological order (Kahn, deterministic tie-break by
        // neuron index).
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for s in net.synapses.iter().filter(|s| s.delay == 0) {
            if let SignalSource::Neuron { neuron } = s.from {
                adj[idx[&neuron]].push(idx[&s.to]);
                indeg[idx[&s.to]] += 1;
            }
        }
        let mut ready: Vec<usize> = (0..n).rev().filter(|&i| indeg[i] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(u) = ready.pop() {
            topo.push(u);
            for &v in &adj[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    // Keep ascending-index preference.
                    let pos = ready.iter().rposition(|&r| r > v).map(|p| p + 1).unwrap_or(0);
                    ready.insert(pos, v);
                }
            }
        }
        if topo.len() != n {
            return Err(Error::invalid(
                "netlist contains a zero-delay cycle; run validate()",
            ));
        }

        // Batch consecutive same-layer sum neurons whose zero-delay inputs
        // all precede the batch.
        let mut units: Vec<Unit> = Vec::new();
        let mut open: Option<(u32, Vec<usize>)> = None;

        let flush = |open: &mut Option<(u32, Vec<usize>)>, units: &mut Vec<Unit>| {
            if let Some((_, dests)) = open.take() {
                units.push(build_batch(net, &inbound, &syn_src, n_channels, dests, &idx));
            }
        };

        for &ni in &topo {
            let neuron = &net.neurons[ni];
            match neuron.kind {
                NeuronKind::Input => {
                    flush(&mut open, &mut units);
                    units.push(Unit::Input {
                        neuron: ni,
                        channel: input_channel[ni].ok_or_else(|| {
                            Error::invalid(format!("input neuron {} unbound", neuron.id))
                        })?,
                    });
                }
                NeuronKind::Product => {
                    flush(&mut open, &mut units);
                    let syn = &inbound[ni];
                    if syn.len() != 2 {
                        return Err(Error::invalid(format!(
                            "product neuron {} arity {}",
                            neuron.id,
                            syn.len()
                        )));
                    }
                    units.push(Unit::Product {
                        neuron: ni,
                        syn: [syn[0], syn[1]],
                    });
                }
                NeuronKind::SumSquash | NeuronKind::SumLinear => {
                    if inbound[ni].is_empty() {
                        flush(&mut open, &mut units);
                        units.push(Unit::Isolated { neuron: ni });
                        continue;
                    }
                    let depends_on_open = |dests: &[usize]| {
                        inbound[ni].iter().any(|&si| {
                            let s = &net.synapses[si];
                            s.delay == 0
                                && matches!(s.from, SignalSource::Neuron { neuron }
                                    if dests.contains(&idx[&neuron]))
                        })
                    };
                    match &mut open {
                        Some((layer, dests))
                            if *layer == neuron.layer && !depends_on_open(dests) =>
                        {
                            dests.push(ni);
                        }
                        _ => {
                            flush(&mut open, &mut units);
                            open = Some((neuron.layer, vec![ni]));
                        }
                    }
                }
            }
        }
        flush(&mut open, &mut units);

        Ok(Plan {
            topo,
            inbound,
            units,
            syn_src,
            n_channels,
            input_channel,
        })
    }

    fn apply_mask_quantization(&mut self, cfg: &ExecConfig) -> Result<()> {
        if !cfg.quantize_mask || cfg.quantization.is_ideal() {
            return Ok(());
        }
        for unit in &mut self.units {
            if let Unit::Batch { mask, .. } = unit {
                *mask = mask.quantized(cfg.quantization)?;
            }
        }
        Ok(())
    }
}

fn build_batch(
    net: &Netlist,
    inbound: &[Vec<usize>],
    syn_src: &[usize],
    _n_channels: usize,
    dests: Vec<usize>,
    _idx: &HashMap<NeuronId, usize>,
) -> Unit {
    // Columns: distinct (source, delay) pairs across the batch, sorted for
    // determinism.
    let mut channels: Vec<(usize, u32)> = Vec::new();
    for &d in &dests {
        for &si in &inbound[d] {
            let col = (syn_src[si], net.synapses[si].delay);
            if !channels.contains(&col) {
                channels.push(col);
            }
        }
    }
    channels.sort_unstable();
    let col_of: HashMap<(usize, u32), usize> = channels
        .iter()
        .enumerate()
        .map(|(c, &k)| (k, c))
        .collect();
    let mut rows = vec![vec![0.0; channels.len()]; dests.len()];
    for (r, &d) in dests.iter().enumerate() {
        for &si in &inbound[d] {
            let s = &net.synapses[si];
            rows[r][col_of[&(syn_src[si], s.delay)]] += s.weight;
        }
    }
    let mask = WeightMask::from_signed(&rows).expect("batch rows are rectangular and finite");
    Unit::Batch {
        mask,
        channels,
        dests,
    }
}

// ---------------------------------------------------------------------------
// Executor
// ---------------------------------------------------------------------------

/// Reusable execution context: validated netlist, compiled plan, owned state.
pub struct Executor<'n> {
    net: &'n Netlist,
    plan: Plan,
    cfg: ExecConfig,
    state: NetState,
}

impl<'n> Executor<'n> {
    pub fn new(net: &'n Netlist, cfg: ExecConfig) -> Result<Self> {
        cfg.check()?;
        net.ensure_valid()?;
        let mut plan = Plan::build(net)?;
        plan.apply_mask_quantization(&cfg)?;
        Ok(Executor {
            net,
            plan,
            cfg,
            state: NetState::zero(net),
        })
    }

    pub fn state(&self) -> &NetState {
        &self.state
    }

    pub fn reset(&mut self) {
        self.state = NetState::zero(self.net);
    }

    /// Execute one macro-step and return the output activations.
    pub fn step(&mut self, external: &[f64]) -> Result<Vec<f64>> {
        Ok(self.step_record(external)?.outputs)
    }

    /// Execute one macro-step and return outputs plus probe taps.
    pub fn step_record(&mut self, external: &[f64]) -> Result<StepRecord> {
        let current = step_current(self.net, &self.plan, &mut self.state, external, &self.cfg)?;
        let idx: HashMap<NeuronId, usize> = self
            .net
            .neurons
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();
        let outputs = self
            .net
            .outputs
            .iter()
            .map(|id| current[self.plan.n_channels + idx[id]])
            .collect();
        let taps = self
            .net
            .taps
            .iter()
            .map(|(name, id)| (name.clone(), current[self.plan.n_channels + idx[id]]))
            .collect();
        self.state.advance(&current);
        Ok(StepRecord { outputs, taps })
    }

    /// Fold `step` over an input sequence from the current state.
    pub fn run(&mut self, inputs: &[Vec<f64>]) -> Result<Trace> {
        let mut trace = Trace::default();
        for x in inputs {
            trace.steps.push(self.step_record(x)?);
        }
        Ok(trace)
    }
}

/// One macro-step as a value-level function: consumes and returns the state.
pub fn step(
    net: &Netlist,
    state: NetState,
    external: &[f64],
    cfg: &ExecConfig,
) -> Result<(NetState, Vec<f64>)> {
    cfg.check()?;
    net.ensure_valid()?;
    let mut plan = Plan::build(net)?;
    plan.apply_mask_quantization(cfg)?;
    let mut state = state;
    let current = step_current(net, &plan, &mut state, external, cfg)?;
    let idx: HashMap<NeuronId, usize> = net
        .neurons
        .iter()
        .enumerate()
        .map(|(i, n)| (n.id, i))
        .collect();
    let outputs = net
        .outputs
        .iter()
        .map(|id| current[plan.n_channels + idx[id]])
        .collect();
    state.advance(&current);
    Ok((state, outputs))
}

/// Run a whole input sequence from zero-initialized state.
pub fn run(net: &Netlist, inputs: &[Vec<f64>], cfg: &ExecConfig) -> Result<Trace> {
    let mut exec = Executor::new(net, cfg.clone())?;
    exec.run(inputs)
}

// ---------------------------------------------------------------------------
// Step internals
// ---------------------------------------------------------------------------

/// Compute this step's value for every source (channels then neurons).
fn step_current(
    net: &Netlist,
    plan: &Plan,
    state: &mut NetState,
    external: &[f64],
    cfg: &ExecConfig,
) -> Result<Vec<f64>> {
    if external.len() != net.external_inputs {
        return Err(Error::invalid(format!(
            "expected {} external inputs, got {}",
            net.external_inputs,
            external.len()
        )));
    }
    for &x in external {
        if !(0.0..1.0).contains(&x) {
            return Err(Error::invalid(format!(
                "external input {x} outside [0,1)"
            )));
        }
    }

    match (cfg.model, net.encoding) {
        (SignalModel::Exact, _) => step_exact(net, plan, state, external),
        (SignalModel::Hardware, Encoding::SigmaAnd) => {
            step_sigma_and(net, plan, state, external, cfg)
        }
        (SignalModel::Hardware, _) => step_generic(net, plan, state, external, cfg),
    }
}

fn src_value(current: &[f64], state: &NetState, src: usize, delay: u32) -> f64 {
    if delay == 0 {
        current[src]
    } else {
        state.delayed(src, delay)
    }
}

fn store(kind: NeuronKind, raw: f64) -> Result<f64> {
    let v = match kind {
        NeuronKind::SumSquash => squash(raw)?,
        _ => raw,
    };
    Ok(v.clamp(0.0, MAX_ACTIVATION))
}

/// Reference route: per-edge scalar arithmetic, no encoding, no rails.
fn step_exact(
    net: &Netlist,
    plan: &Plan,
    state: &NetState,
    external: &[f64],
) -> Result<Vec<f64>> {
    let nc = plan.n_channels;
    let mut current = vec![0.0; nc + net.neurons.len()];
    current[..nc].copy_from_slice(external);

    for &ni in &plan.topo {
        let neuron = &net.neurons[ni];
        let value = match neuron.kind {
            NeuronKind::Input => external[plan.input_channel[ni].unwrap()],
            NeuronKind::Product => {
                let mut acc = 1.0;
                for &si in &plan.inbound[ni] {
                    let s = &net.synapses[si];
                    acc *= s.weight * src_value(&current, state, plan.syn_src[si], s.delay);
                }
                acc
            }
            NeuronKind::SumSquash | NeuronKind::SumLinear => {
                let mut sum = 0.0;
                for &si in &plan.inbound[ni] {
                    let s = &net.synapses[si];
                    sum += s.weight * src_value(&current, state, plan.syn_src[si], s.delay);
                }
                sum
            }
        };
        current[nc + ni] = store(neuron.kind, value)?;
    }
    Ok(current)
}

/// Generic-encoding hardware route: channel transport once per step, then
/// batched dual-rail passes through the optical stage.
fn step_generic(
    net: &Netlist,
    plan: &Plan,
    state: &mut NetState,
    external: &[f64],
    cfg: &ExecConfig,
) -> Result<Vec<f64>> {
    let nc = plan.n_channels;
    let mut current = vec![0.0; nc + net.neurons.len()];
    for (ch, &x) in external.iter().enumerate() {
        current[ch] = match net.encoding {
            Encoding::GenericIntensity => crate::optics::quantize(x, cfg.quantization)?,
            Encoding::GenericSp => {
                let lane = rng::key3(LANE_CHANNEL, state.step, ch as u64);
                let train = pulse::encode(
                    Activation::saturating(x),
                    cfg.np,
                    StreamId::new(cfg.seed, lane),
                )?;
                pulse::decode(&train)
            }
            Encoding::SigmaAnd => unreachable!("sigma-and handled separately"),
        };
    }

    for unit in &plan.units {
        match unit {
            Unit::Input { neuron, channel } => {
                current[nc + neuron] = current[*channel].clamp(0.0, MAX_ACTIVATION);
            }
            Unit::Isolated { neuron } => {
                current[nc + neuron] = store(net.neurons[*neuron].kind, 0.0)?;
            }
            Unit::Product { neuron, syn } => {
                let mut acc = 1.0;
                for &si in syn {
                    let s = &net.synapses[si];
                    acc *= s.weight * src_value(&current, state, plan.syn_src[si], s.delay);
                }
                current[nc + neuron] = store(NeuronKind::Product, acc)?;
            }
            Unit::Batch {
                mask,
                channels,
                dests,
            } => {
                let x: Vec<f64> = channels
                    .iter()
                    .map(|&(src, d)| src_value(&current, state, src, d))
                    .collect();
                let ordinal = state.matvec_calls;
                state.matvec_calls += 1;
                let sums = matvec(mask, &x, cfg.quantization, &cfg.noise, ordinal)?;
                for (&ni, &raw) in dests.iter().zip(&sums) {
                    current[nc + ni] = store(net.neurons[ni].kind, raw)?;
                }
            }
        }
    }
    Ok(current)
}

/// Sigma-And hardware route: per-edge pulse arithmetic.
///
/// Sampling happens where light happens: external taps are emitted as fresh
/// Bernoulli trains per edge, product nodes AND their two attenuated inbound
/// trains and integrate once, and everything else (electronic summation,
/// registers, recurrent integration) carries exact values.
fn step_sigma_and(
    net: &Netlist,
    plan: &Plan,
    state: &mut NetState,
    external: &[f64],
    cfg: &ExecConfig,
) -> Result<Vec<f64>> {
    let nc = plan.n_channels;
    let mut current = vec![0.0; nc + net.neurons.len()];
    current[..nc].copy_from_slice(external);

    let is_external_source = |src: usize| -> bool {
        src < nc || net.neurons[src - nc].kind == NeuronKind::Input
    };

    let sample_edge = |value: f64, si: usize, step: u64| -> Result<f64> {
        let lane = rng::key3(LANE_EDGE, step, si as u64);
        let train = pulse::encode(
            Activation::saturating(value),
            cfg.np,
            StreamId::new(cfg.seed, lane),
        )?;
        Ok(pulse::decode(&train))
    };

    for &ni in &plan.topo {
        let neuron = &net.neurons[ni];
        let value = match neuron.kind {
            NeuronKind::Input => external[plan.input_channel[ni].unwrap()],
            NeuronKind::Product => {
                // Both factors arrive optically: encode each source on its
                // own lane, attenuate by the synaptic weight, AND slice-wise,
                // integrate once.
                let mut trains: Vec<PulseTrain> = Vec::with_capacity(2);
                for &si in &plan.inbound[ni] {
                    let s = &net.synapses[si];
                    let v = src_value(&current, state, plan.syn_src[si], s.delay);
                    let lane = rng::key3(LANE_EDGE, state.step, si as u64);
                    let t = pulse::encode(
                        Activation::saturating(v),
                        cfg.np,
                        StreamId::new(cfg.seed, lane),
                    )?;
                    trains.push(pulse::attenuate(&t, s.weight)?);
                }
                let anded = pulse::and_product(&trains[0], &trains[1])?;
                pulse::decode(&anded)
            }
            NeuronKind::SumSquash | NeuronKind::SumLinear => {
                let mut sum = 0.0;
                for &si in &plan.inbound[ni] {
                    let s = &net.synapses[si];
                    let v = src_value(&current, state, plan.syn_src[si], s.delay);
                    let v = if is_external_source(plan.syn_src[si]) {
                        sample_edge(v, si, state.step)?
                    } else {
                        v
                    };
                    sum += s.weight * v;
                }
                sum
            }
        };
        current[nc + ni] = store(neuron.kind, value)?;
    }
    Ok(current)
}
