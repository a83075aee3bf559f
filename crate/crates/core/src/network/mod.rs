//! Recurrent netlists: neurons, signed synapses, per-edge integer delays.
//!
//! A netlist is the universal network representation of this simulator. All
//! of the reproduced networks (uMULT, Sigma-And, PlanTran, BooLean) compile
//! down to one of these graphs, and the executor in [`exec`] runs them one
//! macro-step at a time.
//!
//! External inputs can reach a netlist two ways, matching how the hardware
//! counts its parts: dedicated input-kind neurons (trained feed-forward
//! fragments treat inputs as layer-0 units, which is how a 2-10-1 multiplier
//! comes out at 13 neurons), or direct external taps referenced by synapses
//! (signal lines feeding a gate, which is how a Sigma-And block stays at 2
//! neurons).

pub mod exec;

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet};
use std::fmt;

pub use exec::{run, step, ExecConfig, Executor, NetState, SignalModel, StepRecord, Trace};

pub type NeuronId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NeuronKind {
    /// Emits the external channel value bound to it.
    Input,
    /// Weighted sum of inbound signals through the logistic squash.
    SumSquash,
    /// Weighted sum of inbound signals, clamped to the signal range.
    SumLinear,
    /// Signal-times-signal node; exactly two inbound synapses.
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neuron {
    pub id: NeuronId,
    pub kind: NeuronKind,
    /// Structural stage label; queryable against the size budgets.
    pub layer: u32,
}

/// Source end of a synapse: either an external input channel or a neuron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SignalSource {
    External { ext: usize },
    Neuron { neuron: NeuronId },
}

impl SignalSource {
    pub fn ext(channel: usize) -> Self {
        SignalSource::External { ext: channel }
    }
    pub fn neuron(id: NeuronId) -> Self {
        SignalSource::Neuron { neuron: id }
    }
}

impl fmt::Display for SignalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSource::External { ext } => write!(f, "ext({ext})"),
            SignalSource::Neuron { neuron } => write!(f, "n{neuron}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synapse {
    pub from: SignalSource,
    pub to: NeuronId,
    /// Signed synaptic weight. Serialized in hexadecimal bit form so weight
    /// files round-trip bit-exactly.
    #[serde(with = "hex_f64")]
    pub weight: f64,
    /// Signal delay in whole macro-steps.
    pub delay: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoding {
    /// Signals are single quantized intensity levels.
    GenericIntensity,
    /// Signals are stochastic pulse trains; synaptic products run through the
    /// batched optical stage.
    GenericSp,
    /// Modified stochastic pulse with per-edge AND products and attenuated
    /// pulses.
    SigmaAnd,
}

/// Recurrent neuron/synapse graph with per-edge integer delays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Netlist {
    pub neurons: Vec<Neuron>,
    pub synapses: Vec<Synapse>,
    /// Number of external input channels.
    pub external_inputs: usize,
    /// Input-kind neurons bound positionally to channels 0.., when present.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub inputs: Vec<NeuronId>,
    pub outputs: Vec<NeuronId>,
    pub encoding: Encoding,
    /// Named probe points recorded into traces.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub taps: Vec<(String, NeuronId)>,
}

/// One validation finding. Diagnostics, not exceptions: `validate` reports
/// everything wrong at once.
#[derive(Clone, Debug, PartialEq)]
pub enum Diagnostic {
    DuplicateNeuronId(NeuronId),
    DanglingSource { synapse: usize, id: NeuronId },
    DanglingDestination { synapse: usize, id: NeuronId },
    ExternalOutOfRange { synapse: usize, channel: usize },
    NonFiniteWeight { synapse: usize },
    ZeroDelayCycle { cycle: Vec<NeuronId> },
    ProductArity { id: NeuronId, inbound: usize },
    ProductWeightOutOfRange { synapse: usize, weight: f64 },
    InputBinding(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::DuplicateNeuronId(id) => write!(f, "duplicate neuron id {id}"),
            Diagnostic::DanglingSource { synapse, id } => {
                write!(f, "synapse {synapse} references missing source neuron {id}")
            }
            Diagnostic::DanglingDestination { synapse, id } => {
                write!(f, "synapse {synapse} references missing destination neuron {id}")
            }
            Diagnostic::ExternalOutOfRange { synapse, channel } => {
                write!(f, "synapse {synapse} taps external channel {channel} beyond declared arity")
            }
            Diagnostic::NonFiniteWeight { synapse } => {
                write!(f, "synapse {synapse} has a non-finite weight")
            }
            Diagnostic::ZeroDelayCycle { cycle } => {
                write!(f, "zero-delay cycle through neurons {cycle:?}")
            }
            Diagnostic::ProductArity { id, inbound } => {
                write!(f, "product neuron {id} has {inbound} inbound synapses, needs exactly 2")
            }
            Diagnostic::ProductWeightOutOfRange { synapse, weight } => {
                write!(f, "synapse {synapse} into a product node has weight {weight} outside [0,1]")
            }
            Diagnostic::InputBinding(msg) => write!(f, "input binding: {msg}"),
        }
    }
}

impl Netlist {
    pub fn neuron_count(&self) -> usize {
        self.neurons.len()
    }

    pub fn synapse_count(&self) -> usize {
        self.synapses.len()
    }

    /// Number of distinct structural layers.
    pub fn layer_count(&self) -> usize {
        let mut layers: Vec<u32> = self.neurons.iter().map(|n| n.layer).collect();
        layers.sort_unstable();
        layers.dedup();
        layers.len()
    }

    /// External input arity expected by `step`.
    pub fn input_arity(&self) -> usize {
        self.external_inputs
    }

    pub fn neuron(&self, id: NeuronId) -> Option<&Neuron> {
        self.neurons.iter().find(|n| n.id == id)
    }

    /// Check every structural invariant; empty means the netlist is
    /// executable.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();

        let mut ids = HashSet::new();
        for n in &self.neurons {
            if !ids.insert(n.id) {
                diags.push(Diagnostic::DuplicateNeuronId(n.id));
            }
        }

        let mut inbound: HashMap<NeuronId, usize> = HashMap::new();
        for (si, s) in self.synapses.iter().enumerate() {
            match s.from {
                SignalSource::Neuron { neuron } => {
                    if !ids.contains(&neuron) {
                        diags.push(Diagnostic::DanglingSource { synapse: si, id: neuron });
                    }
                }
                SignalSource::External { ext } => {
                    if ext >= self.external_inputs {
                        diags.push(Diagnostic::ExternalOutOfRange { synapse: si, channel: ext });
                    }
                }
            }
            if !ids.contains(&s.to) {
                diags.push(Diagnostic::DanglingDestination { synapse: si, id: s.to });
            } else {
                *inbound.entry(s.to).or_insert(0) += 1;
            }
            if !s.weight.is_finite() {
                diags.push(Diagnostic::NonFiniteWeight { synapse: si });
            }
        }

        for n in &self.neurons {
            if n.kind == NeuronKind::Product {
                let count = inbound.get(&n.id).copied().unwrap_or(0);
                if count != 2 {
                    diags.push(Diagnostic::ProductArity { id: n.id, inbound: count });
                }
            }
        }
        for (si, s) in self.synapses.iter().enumerate() {
            if let Some(n) = self.neuron(s.to) {
                if n.kind == NeuronKind::Product && !(0.0..=1.0).contains(&s.weight) {
                    diags.push(Diagnostic::ProductWeightOutOfRange { synapse: si, weight: s.weight });
                }
            }
        }

        // Input bindings: the `inputs` list holds exactly the input-kind
        // neurons, in channel order, and channels cover them.
        if self.inputs.len() > self.external_inputs {
            diags.push(Diagnostic::InputBinding(format!(
                "{} bound input neurons exceed {} declared channels",
                self.inputs.len(),
                self.external_inputs
            )));
        }
        let bound: HashSet<NeuronId> = self.inputs.iter().copied().collect();
        if bound.len() != self.inputs.len() {
            diags.push(Diagnostic::InputBinding("a neuron is bound to two channels".into()));
        }
        for id in &self.inputs {
            match self.neuron(*id) {
                None => diags.push(Diagnostic::InputBinding(format!(
                    "bound neuron {id} does not exist"
                ))),
                Some(n) if n.kind != NeuronKind::Input => diags.push(Diagnostic::InputBinding(
                    format!("bound neuron {id} is not input-kind"),
                )),
                _ => {}
            }
        }
        for n in &self.neurons {
            if n.kind == NeuronKind::Input {
                if !bound.contains(&n.id) {
                    diags.push(Diagnostic::InputBinding(format!(
                        "input neuron {} is not bound to a channel",
                        n.id
                    )));
                }
                if inbound.get(&n.id).copied().unwrap_or(0) > 0 {
                    diags.push(Diagnostic::InputBinding(format!(
                        "input neuron {} has inbound synapses",
                        n.id
                    )));
                }
            }
        }
        for id in &self.outputs {
            if !ids.contains(id) {
                diags.push(Diagnostic::InputBinding(format!(
                    "output {id} does not exist"
                )));
            }
        }
        for (name, id) in &self.taps {
            if !ids.contains(id) {
                diags.push(Diagnostic::InputBinding(format!(
                    "tap '{name}' references missing neuron {id}"
                )));
            }
        }

        if let Some(cycle) = self.find_zero_delay_cycle() {
            diags.push(Diagnostic::ZeroDelayCycle { cycle });
        }

        diags
    }

    /// Kahn's algorithm over the delay-0 subgraph; returns a witness cycle if
    /// one exists.
    fn find_zero_delay_cycle(&self) -> Option<Vec<NeuronId>> {
        let idx: HashMap<NeuronId, usize> = self
            .neurons
            .iter()
            .enumerate()
            .map(|(i, n)| (n.id, i))
            .collect();
        let n = self.neurons.len();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        let mut indeg = vec![0usize; n];
        for s in &self.synapses {
            if s.delay != 0 {
                continue;
            }
            if let (SignalSource::Neuron { neuron }, Some(&to)) = (s.from, idx.get(&s.to)) {
                if let Some(&from) = idx.get(&neuron) {
                    adj[from].push(to);
                    indeg[to] += 1;
                }
            }
        }
        let mut queue: Vec<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop() {
            seen += 1;
            for &v in &adj[u] {
                indeg[v] -= 1;
                if indeg[v] == 0 {
                    queue.push(v);
                }
            }
        }
        if seen == n {
            return None;
        }
        // Walk the residual graph to extract one concrete cycle.
        let start = (0..n).find(|&i| indeg[i] > 0)?;
        let mut path = vec![start];
        let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
        let mut cur = start;
        loop {
            let next = *adj[cur].iter().find(|&&v| indeg[v] > 0)?;
            if let Some(&at) = pos.get(&next) {
                return Some(path[at..].iter().map(|&i| self.neurons[i].id).collect());
            }
            pos.insert(next, path.len());
            path.push(next);
            cur = next;
        }
    }

    /// Validate and convert the diagnostics into an error.
    pub fn ensure_valid(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            let msg = diags
                .iter()
                .map(|d| format!("  - {d}"))
                .collect::<Vec<_>>()
                .join("\n");
            Err(Error::InvalidNetlist(msg))
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Serialize f64 as its IEEE-754 bit pattern in hexadecimal text, so weight
/// files round-trip bit-exactly. Plain JSON numbers are still accepted on
/// input.
mod hex_f64 {
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("0x{:016x}", v.to_bits()))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) => {
                let hex = t
                    .strip_prefix("0x")
                    .ok_or_else(|| D::Error::custom(format!("weight '{t}' lacks 0x prefix")))?;
                let bits = u64::from_str_radix(hex, 16)
                    .map_err(|e| D::Error::custom(format!("weight '{t}': {e}")))?;
                Ok(f64::from_bits(bits))
            }
        }
    }
}

/// Small builder so hand-assembled netlists stay readable.
#[derive(Clone, Debug, Default)]
pub struct NetlistBuilder {
    neurons: Vec<Neuron>,
    synapses: Vec<Synapse>,
    external_inputs: usize,
    inputs: Vec<NeuronId>,
    outputs: Vec<NeuronId>,
    encoding: Option<Encoding>,
    taps: Vec<(String, NeuronId)>,
    next_id: NeuronId,
}

impl NetlistBuilder {
    pub fn new(encoding: Encoding) -> Self {
        NetlistBuilder {
            encoding: Some(encoding),
            ..Default::default()
        }
    }

    pub fn neuron(&mut self, kind: NeuronKind, layer: u32) -> NeuronId {
        let id = self.next_id;
        self.next_id += 1;
        self.neurons.push(Neuron { id, kind, layer });
        id
    }

    /// Add an input-kind neuron bound to the next external channel.
    pub fn input_neuron(&mut self, layer: u32) -> NeuronId {
        let id = self.neuron(NeuronKind::Input, layer);
        self.inputs.push(id);
        self.external_inputs = self.external_inputs.max(self.inputs.len());
        id
    }

    /// Declare a direct external tap channel and return its source handle.
    pub fn external(&mut self, channel: usize) -> SignalSource {
        self.external_inputs = self.external_inputs.max(channel + 1);
        SignalSource::ext(channel)
    }

    pub fn connect(&mut self, from: SignalSource, to: NeuronId, weight: f64, delay: u32) {
        self.synapses.push(Synapse { from, to, weight, delay });
    }

    pub fn wire(&mut self, from: NeuronId, to: NeuronId, weight: f64, delay: u32) {
        self.connect(SignalSource::neuron(from), to, weight, delay);
    }

    pub fn output(&mut self, id: NeuronId) {
        self.outputs.push(id);
    }

    pub fn tap(&mut self, name: &str, id: NeuronId) {
        self.taps.push((name.to_string(), id));
    }

    pub fn finish(self) -> Netlist {
        Netlist {
            neurons: self.neurons,
            synapses: self.synapses,
            external_inputs: self.external_inputs,
            inputs: self.inputs,
            outputs: self.outputs,
            encoding: self.encoding.expect("encoding set in new()"),
            taps: self.taps,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_feedforward() -> Netlist {
        let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
        let x = b.input_neuron(0);
        let o = b.neuron(NeuronKind::SumLinear, 1);
        b.wire(x, o, 1.0, 0);
        b.output(o);
        b.finish()
    }

    #[test]
    fn valid_feedforward_has_no_diagnostics() {
        assert!(single_feedforward().validate().is_empty());
    }

    #[test]
    fn zero_delay_self_loop_is_flagged() {
        let mut net = single_feedforward();
        let o = net.outputs[0];
        net.synapses.push(Synapse {
            from: SignalSource::neuron(o),
            to: o,
            weight: 0.5,
            delay: 0,
        });
        let diags = net.validate();
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::ZeroDelayCycle { .. })), "{diags:?}");
        // Delay 1 on the loop clears it.
        net.synapses.last_mut().unwrap().delay = 1;
        assert!(net.validate().is_empty());
    }

    #[test]
    fn dangling_and_arity_diagnostics() {
        let mut b = NetlistBuilder::new(Encoding::SigmaAnd);
        let u = b.external(0);
        let p = b.neuron(NeuronKind::Product, 0);
        b.connect(u, p, 1.0, 0);
        b.output(p);
        let mut net = b.finish();
        net.synapses.push(Synapse {
            from: SignalSource::neuron(99),
            to: p,
            weight: 1.0,
            delay: 0,
        });
        let diags = net.validate();
        assert!(diags.iter().any(|d| matches!(d, Diagnostic::DanglingSource { .. })));
        // One real + one dangling inbound still counts 2 arrivals at p, so
        // drop the dangling one and check arity reporting.
        net.synapses.pop();
        let diags = net.validate();
        assert!(diags
            .iter()
            .any(|d| matches!(d, Diagnostic::ProductArity { inbound: 1, .. })), "{diags:?}");
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let mut net = single_feedforward();
        net.synapses[0].weight = 0.1 + 0.2; // deliberately non-representable sum
        let json = net.to_json().unwrap();
        let back = Netlist::from_json(&json).unwrap();
        assert_eq!(back, net);
        assert_eq!(
            back.synapses[0].weight.to_bits(),
            net.synapses[0].weight.to_bits()
        );
    }

    #[test]
    fn counts_are_queryable() {
        let net = single_feedforward();
        assert_eq!(net.neuron_count(), 2);
        assert_eq!(net.synapse_count(), 1);
        assert_eq!(net.layer_count(), 2);
        assert_eq!(net.input_arity(), 1);
    }
}
