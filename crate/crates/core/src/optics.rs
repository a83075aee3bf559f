//! Optical matrix-vector stage.
//!
//! Models the Stanford multiplier signal path: quantized inputs fan out over
//! a dual-rail attenuation mask, separate detectors sum the positive and
//! negative rails, the difference is scaled electronically, and amplifier
//! saturation provides the logistic squashing nonlinearity.

use crate::error::{Error, Result};
use crate::rng;
use serde::{Deserialize, Serialize};

/// Speed of light used by the throughput formula, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Conversion precision of the signal path. 0 means ideal (no quantization);
/// hardware converters run 8 to 12 bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantizationSpec {
    pub bits: u8,
}

impl QuantizationSpec {
    pub const IDEAL: QuantizationSpec = QuantizationSpec { bits: 0 };

    pub fn new(bits: u8) -> Result<Self> {
        if bits != 0 && !(8..=12).contains(&bits) {
            return Err(Error::invalid(format!(
                "quantization bits {bits} outside 8..=12 (or 0 for ideal)"
            )));
        }
        Ok(QuantizationSpec { bits })
    }

    pub fn is_ideal(self) -> bool {
        self.bits == 0
    }
}

impl Default for QuantizationSpec {
    fn default() -> Self {
        QuantizationSpec::IDEAL
    }
}

/// Additive Gaussian noise on each detector sum. The hardware noise floor
/// is not a published quantity, so the default is zero and experiments
/// sweep sigma explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub const NONE: NoiseSpec = NoiseSpec { sigma: 0.0, seed: 0 };

    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::invalid(format!("noise sigma {sigma} negative")));
        }
        Ok(NoiseSpec { sigma, seed })
    }

    pub fn is_silent(&self) -> bool {
        self.sigma == 0.0
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::NONE
    }
}

/// Snap a signal in [0, 1] to the nearest level of the uniform 2^bits-level
/// grid spanning [0, 1]. Identity when bits == 0.
pub fn quantize(x: f64, q: QuantizationSpec) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::invalid(format!("signal {x} outside [0,1]")));
    }
    if q.bits == 0 {
        return Ok(x);
    }
    let levels = ((1u32 << q.bits) - 1) as f64;
    Ok((x * levels).round() / levels)
}

/// Dual-rail attenuation matrix: the synaptic medium of one optical stage.
///
/// Signed weights are stored as two non-negative rails summed on separate
/// detectors; the effective weight of entry (j, i) is
/// `gain * (pos[j][i] - neg[j][i])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightMask {
    /// Output (detector-pair) count.
    pub m: usize,
    /// Input (source) count.
    pub n: usize,
    /// Electronic scale factor applied after the detector subtraction.
    pub gain: f64,
    /// Positive-rail attenuations, row-major m x n, each in [0, 1].
    pub pos: Vec<f64>,
    /// Negative-rail attenuations, row-major m x n, each in [0, 1].
    pub neg: Vec<f64>,
}

impl WeightMask {
    pub fn new(m: usize, n: usize, gain: f64, pos: Vec<f64>, neg: Vec<f64>) -> Result<Self> {
        if pos.len() != m * n || neg.len() != m * n {
            return Err(Error::invalid(format!(
                "rail size mismatch: expected {} entries, got {} / {}",
                m * n,
                pos.len(),
                neg.len()
            )));
        }
        if !(gain > 0.0) {
            return Err(Error::invalid(format!("gain {gain} must be positive")));
        }
        for v in pos.iter().chain(neg.iter()) {
            if !(0.0..=1.0).contains(v) {
                return Err(Error::invalid(format!(
                    "attenuation {v} outside [0,1]; rails cannot amplify"
                )));
            }
        }
        Ok(WeightMask { m, n, gain, pos, neg })
    }

    /// Canonical decomposition of a signed weight matrix: per entry one rail
    /// holds |w|/gain and the other is zero, with gain = max(1, max|w|), so
    /// both rails stay inside the physical [0, 1] attenuation range.
    pub fn from_signed(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if m == 0 {
            return Err(Error::invalid("weight matrix has no rows"));
        }
        let n = rows[0].len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("ragged weight matrix"));
        }
        let max_abs = rows
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0f64, |a, &w| a.max(w.abs()));
        let gain = max_abs.max(1.0);
        let mut pos = Vec::with_capacity(m * n);
        let mut neg = Vec::with_capacity(m * n);
        for row in rows {
            for &w in row {
                pos.push(w.max(0.0) / gain);
                neg.push((-w).max(0.0) / gain);
            }
        }
        WeightMask::new(m, n, gain, pos, neg)
    }

    /// Effective signed weight of entry (j, i).
    pub fn signed_weight(&self, j: usize, i: usize) -> f64 {
        self.gain * (self.pos[j * self.n + i] - self.neg[j * self.n + i])
    }

    /// Copy of the mask with both rails snapped to the quantization grid.
    /// Gray levels are stored as unquantized reals by default; this models
    /// writing them through a converter of the same depth as the signal
    /// path.
    pub fn quantized(&self, q: QuantizationSpec) -> Result<WeightMask> {
        let snap = |rail: &[f64]| -> Result<Vec<f64>> {
            rail.iter().map(|&v| quantize(v, q)).collect()
        };
        WeightMask::new(self.m, self.n, self.gain, snap(&self.pos)?, snap(&self.neg)?)
    }
}

/// One pass through the optical stage.
///
/// Each input is quantized, every detector pair accumulates its two rail
/// sums, and the output is `gain * (s_pos - s_neg)` plus one Gaussian noise
/// draw per detector. The draw is keyed by (noise.seed, ordinal, detector),
/// where the caller supplies the call ordinal, so repeated evaluation of the
/// same sequence is bit-identical and there is no hidden generator state.
pub fn matvec(
    mask: &WeightMask,
    x: &[f64],
    q: QuantizationSpec,
    noise: &NoiseSpec,
    ordinal: u64,
) -> Result<Vec<f64>> {
    if x.len() != mask.n {
        return Err(Error::invalid(format!(
            "input length {} does not match mask width {}",
            x.len(),
            mask.n
        )));
    }
    let mut xq = Vec::with_capacity(x.len());
    for &v in x {
        xq.push(quantize(v, q)?);
    }
    let mut out = Vec::with_capacity(mask.m);
    for j in 0..mask.m {
        let row = j * mask.n;
        let mut s_pos = 0.0;
        let mut s_neg = 0.0;
        for (i, &xv) in xq.iter().enumerate() {
            s_pos += mask.pos[row + i] * xv;
            s_neg += mask.neg[row + i] * xv;
        }
        let mut y = mask.gain * (s_pos - s_neg);
        if !noise.is_silent() {
            y += noise.sigma * rng::normal(noise.seed, ordinal, j as u64);
        }
        out.push(y);
    }
    Ok(out)
}

/// Amplifier-saturation squashing: logsig(s) = 1 / (1 + e^-s).
///
/// The output is kept strictly inside (0, 1): past |s| of about 37 the f64
/// quotient would saturate to exactly 0 or 1, so it is pinned to the nearest
/// representable interior value instead.
pub fn squash(s: f64) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::invalid(format!("squash input {s} not finite")));
    }
    let v = 1.0 / (1.0 + (-s).exp());
    Ok(v.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0))
}

/// Theoretical computational throughput of one optical pass:
/// R = n_inputs * n_outputs / (delta_x / c), in operations per second.
pub fn throughput(n_inputs: u64, n_outputs: u64, delta_x_m: f64) -> Result<f64> {
    if n_inputs == 0 || n_outputs == 0 || !(delta_x_m > 0.0) {
        return Err(Error::invalid(
            "throughput arguments must all be positive".to_string(),
        ));
    }
    let dt = delta_x_m / SPEED_OF_LIGHT;
    Ok(n_inputs as f64 * n_outputs as f64 / dt)
}
