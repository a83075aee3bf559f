//! Property tests for the module-level invariants.

use ofwl_core::network::{
    run, Encoding, ExecConfig, Netlist, NetlistBuilder, NeuronKind, SignalModel,
};
use ofwl_core::optics::{quantize, squash, QuantizationSpec};
use ofwl_core::pulse::{attenuate, decode, encode, Activation, PulseTrain, StreamId};
use proptest::prelude::*;

proptest! {
    /// Quantization snaps onto a fixed grid: idempotent, monotone, and never
    /// further than half a level from the input.
    #[test]
    fn quantize_idempotent_monotone(x in 0.0f64..=1.0, y in 0.0f64..=1.0, bits in 8u8..=12) {
        let q = QuantizationSpec::new(bits).unwrap();
        let qx = quantize(x, q).unwrap();
        prop_assert_eq!(quantize(qx, q).unwrap(), qx);
        let levels = ((1u32 << bits) - 1) as f64;
        prop_assert!((qx - x).abs() <= 0.5 / levels + 1e-12);
        let qy = quantize(y, q).unwrap();
        if x <= y {
            prop_assert!(qx <= qy);
        }
    }

    /// Squash stays inside (0, 1) and mirrors around zero.
    #[test]
    fn squash_bounds_and_symmetry(s in -50.0f64..50.0) {
        let v = squash(s).unwrap();
        prop_assert!(v > 0.0 && v < 1.0);
        prop_assert!((v + squash(-s).unwrap() - 1.0).abs() < 1e-12);
    }

    /// decode(attenuate(t, w)) == w * decode(t) exactly: attenuation is pure
    /// slice arithmetic, no sampling.
    #[test]
    fn attenuate_is_exactly_linear(a in 0.0f64..1.0, w in 0.0f64..=1.0, np in 1usize..512, seed in any::<u64>()) {
        let t = encode(Activation::new(a).unwrap(), np, StreamId::new(seed, 0)).unwrap();
        let scaled = attenuate(&t, w).unwrap();
        // Slice-wise: w * slice sums in the same order on both routes.
        let direct: f64 = t.slices.iter().map(|s| s * w).sum::<f64>() / np as f64;
        prop_assert_eq!(decode(&scaled), direct);
        prop_assert!((decode(&scaled) - w * decode(&t)).abs() < 1e-12);
    }

    /// Encoding is a pure function of (value, np, stream).
    #[test]
    fn encode_deterministic(a in 0.0f64..1.0, np in 1usize..256, seed in any::<u64>(), lane in any::<u64>()) {
        let s = StreamId::new(seed, lane);
        let x = encode(Activation::new(a).unwrap(), np, s).unwrap();
        let y = encode(Activation::new(a).unwrap(), np, s).unwrap();
        prop_assert_eq!(x, y);
    }

    /// Pulse trains survive serialization with their exact slice values.
    #[test]
    fn pulse_train_json_round_trip(a in 0.0f64..1.0, np in 1usize..128, seed in any::<u64>()) {
        let t = encode(Activation::new(a).unwrap(), np, StreamId::new(seed, 3)).unwrap();
        let t = attenuate(&t, 0.7).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: PulseTrain = serde_json::from_str(&json).unwrap();
        back.check().unwrap();
        prop_assert_eq!(back, t);
    }

    /// Netlists round-trip through JSON bit-exactly, including weights that
    /// have no short decimal form.
    #[test]
    fn netlist_json_round_trip(weights in proptest::collection::vec(-8.0f64..8.0, 1..12), delays in proptest::collection::vec(0u32..4, 1..12)) {
        let n = weights.len().min(delays.len());
        let mut b = NetlistBuilder::new(Encoding::GenericSp);
        let x = b.input_neuron(0);
        let mut prev = x;
        for i in 0..n {
            let h = b.neuron(NeuronKind::SumSquash, 1 + i as u32);
            b.wire(prev, h, weights[i], delays[i]);
            prev = h;
        }
        b.output(prev);
        let net = b.finish();
        let back = Netlist::from_json(&net.to_json().unwrap()).unwrap();
        prop_assert_eq!(&back, &net);
        for (a, c) in net.synapses.iter().zip(&back.synapses) {
            prop_assert_eq!(a.weight.to_bits(), c.weight.to_bits());
        }
    }

    /// Every activation a netlist stores stays inside [0, 1), whatever the
    /// weights; the executor's outputs are stored activations.
    #[test]
    fn weight_clamp_safety(
        w1 in -20.0f64..20.0,
        w2 in -20.0f64..20.0,
        w3 in -20.0f64..20.0,
        x in 0.0f64..1.0,
        np in 16usize..128,
    ) {
        let mut b = NetlistBuilder::new(Encoding::GenericSp);
        let inp = b.input_neuron(0);
        let h = b.neuron(NeuronKind::SumSquash, 1);
        let l = b.neuron(NeuronKind::SumLinear, 1);
        let o = b.neuron(NeuronKind::SumLinear, 2);
        b.wire(inp, h, w1, 0);
        b.wire(inp, l, w2, 0);
        b.wire(h, o, w3, 0);
        b.wire(l, o, 1.0, 1);
        b.wire(o, l, 0.5, 1); // recurrent, delay 1
        b.output(h);
        b.output(l);
        b.output(o);
        let net = b.finish();
        prop_assert!(net.validate().is_empty());
        let seq = vec![vec![x]; 5];
        for cfg in [ExecConfig::exact(), ExecConfig::hardware(np, 7)] {
            let trace = run(&net, &seq, &cfg).unwrap();
            for step in &trace.steps {
                for &v in &step.outputs {
                    prop_assert!((0.0..1.0).contains(&v), "activation {} escaped [0,1)", v);
                }
            }
        }
    }
}

/// Encoding equivalence: on a feed-forward net, ideal intensity execution
/// equals the exact route to round-off, and stochastic-pulse execution
/// approaches it as np grows, shrinking like 1/sqrt(np).
#[test]
fn encoding_equivalence_and_np_scaling() {
    // Mixed-sign two-layer net.
    let mut b = NetlistBuilder::new(Encoding::GenericIntensity);
    let u = b.input_neuron(0);
    let v = b.input_neuron(0);
    let h1 = b.neuron(NeuronKind::SumSquash, 1);
    let h2 = b.neuron(NeuronKind::SumSquash, 1);
    let o = b.neuron(NeuronKind::SumLinear, 2);
    b.wire(u, h1, 2.1, 0);
    b.wire(v, h1, -1.3, 0);
    b.wire(u, h2, -0.7, 0);
    b.wire(v, h2, 1.9, 0);
    b.wire(h1, o, 0.8, 0);
    b.wire(h2, o, 0.2, 0);
    b.output(o);
    let mut net = b.finish();

    let points: Vec<Vec<f64>> = {
        let mut rng = ofwl_core::rng::Rng64::new(17);
        (0..200).map(|_| vec![rng.next_f64(), rng.next_f64()]).collect()
    };
    let exact = run(&net, &points, &ExecConfig::exact()).unwrap();

    // Intensity with ideal quantization matches exact within round-off.
    let intensity = run(&net, &points, &ExecConfig::hardware(1, 0)).unwrap();
    for (e, i) in exact.steps.iter().zip(&intensity.steps) {
        assert!((e.outputs[0] - i.outputs[0]).abs() < 1e-9);
    }

    // Stochastic pulse approaches exact as np grows.
    net.encoding = Encoding::GenericSp;
    let mut rms = Vec::new();
    for np in [256usize, 4096, 65536] {
        let cfg = ExecConfig {
            model: SignalModel::Hardware,
            ..ExecConfig::hardware(np, 5)
        };
        let sp = run(&net, &points, &cfg).unwrap();
        let mse: f64 = exact
            .steps
            .iter()
            .zip(&sp.steps)
            .map(|(e, s)| {
                let d = e.outputs[0] - s.outputs[0];
                d * d
            })
            .sum::<f64>()
            / points.len() as f64;
        rms.push(mse.sqrt());
    }
    for w in rms.windows(2) {
        let ratio = w[0] / w[1];
        assert!(
            (2.0..=8.0).contains(&ratio),
            "np scaling ratio {ratio} outside [2, 8]; rms {rms:?}"
        );
    }
}

/// Constant-input runs of a feed-forward net stay statistically stationary:
/// output jitter across steps matches the sampling scale, with no trend.
#[test]
fn constant_input_sp_run_is_stationary() {
    let net = ofwl_core::zoo::build_sigma_and();
    let seq = vec![vec![0.6, 0.7]; 64];
    let trace = run(&net, &seq, &ExecConfig::hardware(256, 9)).unwrap();
    let outs: Vec<f64> = trace.steps.iter().map(|s| s.outputs[0]).collect();
    let first: f64 = outs[..32].iter().sum::<f64>() / 32.0;
    let second: f64 = outs[32..].iter().sum::<f64>() / 32.0;
    let sigma = ofwl_core::pulse::estimator_stddev(0.42, 256);
    assert!((first - second).abs() <= 4.0 * sigma / (16.0f64).sqrt());
    for &o in &outs {
        assert!((o - 0.42).abs() <= 5.0 * sigma, "outlier {o}");
    }
}
