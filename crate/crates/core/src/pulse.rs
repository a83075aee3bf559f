//! Stochastic-pulse signal encoding.
//!
//! A unit-interval activation is carried as a train of time slices. In the
//! standard form every slice is 0 or 1 and the probability of a 1 equals the
//! activation; decoding is averaging. The modified form additionally allows
//! attenuated (non-unit) pulse heights, which keeps per-slice products exact
//! when a train is scaled by a synaptic weight.

use crate::error::{Error, Result};
use crate::rng;
use serde::{Deserialize, Serialize};

/// Default train length. 128 and 1024 are also exercised by the experiments.
pub const DEFAULT_NP: usize = 256;

/// A neural signal level in [0, 1).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Activation(f64);

impl Activation {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&value) {
            return Err(Error::invalid(format!(
                "activation {value} outside [0,1)"
            )));
        }
        Ok(Activation(value))
    }

    /// Clamp an arbitrary real into the representable range. Used where a
    /// physical signal saturates rather than errors.
    pub fn saturating(value: f64) -> Self {
        Activation(value.clamp(0.0, MAX_ACTIVATION))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Largest storable activation; the optical range is half-open.
pub const MAX_ACTIVATION: f64 = 1.0 - 1.0 / (1u64 << 32) as f64;

/// Identifies one independent stochastic stream. Two trains that will be
/// multiplied together must come from distinct lanes; the encoder draws each
/// slice from the counter (seed, lane, slice-index), so distinct lanes share
/// no randomness at all.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StreamId {
    pub seed: u64,
    pub lane: u64,
}

impl StreamId {
    pub fn new(seed: u64, lane: u64) -> Self {
        StreamId { seed, lane }
    }
}

/// A finite train of per-slice pulse values representing one activation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseTrain {
    /// Per-slice pulse values, each in [0, 1].
    pub slices: Vec<f64>,
    /// Train length; always equals `slices.len()`.
    pub np: usize,
    /// True when every slice is exactly 0 or 1.
    pub binary: bool,
}

impl PulseTrain {
    fn from_slices(slices: Vec<f64>, binary: bool) -> Self {
        let np = slices.len();
        PulseTrain { slices, np, binary }
    }

    /// Degenerate single-slice train carrying an intensity-encoded value.
    pub fn intensity(a: Activation) -> Self {
        PulseTrain::from_slices(vec![a.value()], false)
    }

    /// Validate the type invariants after deserialization.
    pub fn check(&self) -> Result<()> {
        if self.slices.len() != self.np {
            return Err(Error::invalid(format!(
                "np {} disagrees with slice count {}",
                self.np,
                self.slices.len()
            )));
        }
        for &s in &self.slices {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::invalid(format!("slice value {s} outside [0,1]")));
            }
            if self.binary && s != 0.0 && s != 1.0 {
                return Err(Error::invalid(format!(
                    "binary train holds non-binary slice {s}"
                )));
            }
        }
        Ok(())
    }
}

/// Encode an activation as a binary stochastic pulse train: each slice is an
/// independent Bernoulli draw with success probability `a`, determined
/// entirely by (a, np, stream).
pub fn encode(a: Activation, np: usize, stream: StreamId) -> Result<PulseTrain> {
    if np == 0 {
        return Err(Error::invalid("pulse train length must be at least 1"));
    }
    let p = a.value();
    let slices = (0..np)
        .map(|i| {
            if rng::uniform(stream.seed, stream.lane, i as u64) < p {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(PulseTrain::from_slices(slices, true))
}

/// Decode a train back to an activation estimate: the arithmetic mean of its
/// slices.
pub fn decode(t: &PulseTrain) -> f64 {
    if t.slices.is_empty() {
        return 0.0;
    }
    t.slices.iter().sum::<f64>() / t.slices.len() as f64
}

/// Slice-wise product of two trains. For binary inputs this is the AND gate;
/// when the inputs come from independent lanes the decoded expectation is the
/// product of the input signal levels.
pub fn and_product(a: &PulseTrain, b: &PulseTrain) -> Result<PulseTrain> {
    if a.np != b.np {
        return Err(Error::invalid(format!(
            "train length mismatch: {} vs {}",
            a.np, b.np
        )));
    }
    let slices: Vec<f64> = a
        .slices
        .iter()
        .zip(&b.slices)
        .map(|(x, y)| x * y)
        .collect();
    Ok(PulseTrain::from_slices(slices, a.binary && b.binary))
}

/// Scale every pulse by an attenuation w in [0, 1] (the modified-SP form).
/// Decoding scales by exactly w since no sampling is involved.
pub fn attenuate(t: &PulseTrain, w: f64) -> Result<PulseTrain> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::invalid(format!("attenuation {w} outside [0,1]")));
    }
    let slices = t.slices.iter().map(|s| s * w).collect();
    let binary = t.binary && (w == 0.0 || w == 1.0);
    Ok(PulseTrain::from_slices(slices, binary))
}

/// Standard deviation of the decoded estimate of a Bernoulli train:
/// sqrt(p(1-p)/np). This is the tolerance oracle for every stochastic test.
pub fn estimator_stddev(p: f64, np: usize) -> f64 {
    assert!(np >= 1, "np must be at least 1");
    (p * (1.0 - p) / np as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(v: f64) -> Activation {
        Activation::new(v).unwrap()
    }

    #[test]
    fn activation_rejects_out_of_range() {
        assert!(Activation::new(1.0).is_err());
        assert!(Activation::new(-0.1).is_err());
        assert!(Activation::new(0.0).is_ok());
        assert!(Activation::new(0.999).is_ok());
    }

    #[test]
    fn encode_zero_is_all_zero() {
        let t = encode(act(0.0), 256, StreamId::new(1, 0)).unwrap();
        assert!(t.slices.iter().all(|&s| s == 0.0));
        assert_eq!(decode(&t), 0.0);
    }

    #[test]
    fn encode_rejects_empty_train() {
        assert!(encode(act(0.5), 0, StreamId::new(1, 0)).is_err());
    }

    #[test]
    fn encode_half_lands_within_four_sigma() {
        // sigma = sqrt(0.25/256) = 0.03125 exactly.
        let sigma = estimator_stddev(0.5, 256);
        assert_eq!(sigma, 0.03125);
        let t = encode(act(0.5), 256, StreamId::new(99, 5)).unwrap();
        assert!((decode(&t) - 0.5).abs() <= 4.0 * sigma);
    }

    #[test]
    fn encode_is_deterministic() {
        let s = StreamId::new(123, 7);
        let a = encode(act(0.37), 512, s).unwrap();
        let b = encode(act(0.37), 512, s).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn decode_counts_pulses() {
        let mut slices = vec![0.0; 256];
        for s in slices.iter_mut().take(64) {
            *s = 1.0;
        }
        let t = PulseTrain {
            np: 256,
            slices,
            binary: true,
        };
        assert_eq!(decode(&t), 0.25);

        let ones = PulseTrain {
            np: 128,
            slices: vec![1.0; 128],
            binary: true,
        };
        assert_eq!(decode(&ones), 1.0);
    }

    #[test]
    fn and_product_identity_and_annihilator() {
        let t = encode(act(0.6), 128, StreamId::new(5, 1)).unwrap();
        let ones = PulseTrain {
            np: 128,
            slices: vec![1.0; 128],
            binary: true,
        };
        let zeros = PulseTrain {
            np: 128,
            slices: vec![0.0; 128],
            binary: true,
        };
        assert_eq!(and_product(&ones, &t).unwrap(), t);
        assert!(and_product(&zeros, &t)
            .unwrap()
            .slices
            .iter()
            .all(|&s| s == 0.0));
    }

    #[test]
    fn and_product_rejects_length_mismatch() {
        let a = encode(act(0.5), 128, StreamId::new(5, 1)).unwrap();
        let b = encode(act(0.5), 256, StreamId::new(5, 2)).unwrap();
        assert!(and_product(&a, &b).is_err());
    }

    #[test]
    fn product_law_monte_carlo() {
        // decode(and(encode(0.5), encode(0.5))) ~ 0.25 within the binomial
        // bound, averaged over 1000 independent trials.
        let np = 4096;
        let trials = 1000;
        let mut mean = 0.0;
        for k in 0..trials {
            let a = encode(act(0.5), np, StreamId::new(777, 2 * k)).unwrap();
            let b = encode(act(0.5), np, StreamId::new(777, 2 * k + 1)).unwrap();
            mean += decode(&and_product(&a, &b).unwrap());
        }
        mean /= trials as f64;
        let sigma = estimator_stddev(0.25, np) / (trials as f64).sqrt();
        assert!(
            (mean - 0.25).abs() <= 5.0 * sigma,
            "mean {mean}, tol {}",
            5.0 * sigma
        );
    }

    #[test]
    fn correlation_hazard_self_product() {
        // AND of a binary train with itself decodes to ~p, not p^2: the
        // independence contract is load-bearing.
        let t = encode(act(0.5), 4096, StreamId::new(321, 0)).unwrap();
        let d = decode(&and_product(&t, &t).unwrap());
        assert_eq!(d, decode(&t));
        assert!((d - 0.5).abs() < 0.05);
        assert!((d - 0.25).abs() > 0.1);
    }

    #[test]
    fn attenuate_examples() {
        let t = encode(act(0.8), 256, StreamId::new(8, 0)).unwrap();
        let d = decode(&t);
        let same = attenuate(&t, 1.0).unwrap();
        assert_eq!(same, t);
        let zero = attenuate(&t, 0.0).unwrap();
        assert!(zero.slices.iter().all(|&s| s == 0.0));
        let half = attenuate(&t, 0.5).unwrap();
        assert_eq!(decode(&half), 0.5 * d);
        assert!(!half.binary);
    }

    #[test]
    fn estimator_stddev_values() {
        assert_eq!(estimator_stddev(0.5, 256), 0.03125);
        assert_eq!(estimator_stddev(0.0, 256), 0.0);
        // Closed-form evaluation: sqrt(0.25 * 0.75 / 1024).
        let v = estimator_stddev(0.25, 1024);
        assert!((v - 0.013531646934131851).abs() < 1e-15, "{v}");
    }

    #[test]
    fn intensity_train_is_single_slice() {
        let t = PulseTrain::intensity(act(0.62));
        assert_eq!(t.np, 1);
        assert!(!t.binary);
        assert_eq!(decode(&t), 0.62);
    }

    #[test]
    fn serde_round_trip() {
        let t = encode(act(0.3), 64, StreamId::new(2, 3)).unwrap();
        let json = serde_json::to_string(&t).unwrap();
        let back: PulseTrain = serde_json::from_str(&json).unwrap();
        back.check().unwrap();
        assert_eq!(back, t);
    }
}
