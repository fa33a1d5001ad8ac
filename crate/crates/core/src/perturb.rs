//! Trace perturbations for robustness experiments: random packet loss,
//! bounded per-packet delay, and length padding for the mitigation study.
//!
//! Every perturbation draws exactly one random number per packet, so sweeps
//! that reuse a seed across levels are coupled: the packets lost at 10% are
//! a subset of those lost at 25%.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::PacketRecord;

/// Default delay applied to selected packets, in seconds.
pub const DEFAULT_DELAY_SECS: f64 = 0.5;

/// How payload lengths are inflated in the padding mitigation study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PadStrategy {
    #[default]
    None,
    /// Add a uniform number of extra bytes in `[0, max_extra]`.
    UniformRandom { max_extra: u32 },
    /// Round lengths up to the next multiple of `bucket`.
    FixedBucket { bucket: u32 },
}

/// Order in which loss and delay compose when both are requested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ComposeOrder {
    #[default]
    LossThenDelay,
    DelayThenLoss,
}

/// A full perturbation request. Loss and delay are usually studied in
/// separate sweeps; combining them is supported but not the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PerturbationSpec {
    pub loss_fraction: f64,
    pub delay_fraction: f64,
    pub delay_delta: f64,
    pub pad_strategy: PadStrategy,
    pub order: ComposeOrder,
    pub seed: u64,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            loss_fraction: 0.0,
            delay_fraction: 0.0,
            delay_delta: DEFAULT_DELAY_SECS,
            pad_strategy: PadStrategy::None,
            order: ComposeOrder::LossThenDelay,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum PerturbError {
    #[error("invalid perturbation: {0}")]
    Invalid(String),
}

impl PerturbationSpec {
    pub fn validate(&self) -> Result<(), PerturbError> {
        for (name, p) in [
            ("loss_fraction", self.loss_fraction),
            ("delay_fraction", self.delay_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(PerturbError::Invalid(format!("{name} {p} not in [0, 1]")));
            }
        }
        if self.delay_delta < 0.0 || !self.delay_delta.is_finite() {
            return Err(PerturbError::Invalid(format!(
                "delay_delta {} must be non-negative",
                self.delay_delta
            )));
        }
        if let PadStrategy::FixedBucket { bucket } = self.pad_strategy {
            if bucket == 0 {
                return Err(PerturbError::Invalid("bucket size must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Removes each packet independently with probability `p`. Survivors keep
/// their order and are not otherwise touched.
pub fn inject_loss(records: &[PacketRecord], p: f64, seed: u64) -> Vec<PacketRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    records
        .iter()
        .filter(|_| rng.random::<f64>() >= p)
        .cloned()
        .collect()
}

/// Delays each packet independently by `delta` seconds with probability `q`,
/// then re-sorts by the new timestamps. The packet count and the multiset of
/// payload lengths are unchanged.
pub fn inject_delay(records: &[PacketRecord], q: f64, delta: f64, seed: u64) -> Vec<PacketRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<PacketRecord> = records
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if rng.random::<f64>() < q {
                r.timestamp += delta;
            }
            r
        })
        .collect();
    out.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    out
}

/// Inflates payload lengths per strategy; lengths never decrease. Raw
/// payload bytes are dropped under any inflating strategy since they no
/// longer describe the padded packet.
pub fn pad_lengths(records: &[PacketRecord], strategy: &PadStrategy, seed: u64) -> Vec<PacketRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match strategy {
        PadStrategy::None => records.to_vec(),
        PadStrategy::UniformRandom { max_extra } => records
            .iter()
            .map(|r| {
                let mut r = r.clone();
                r.payload_len += rng.random_range(0..=*max_extra);
                r.payload = None;
                r
            })
            .collect(),
        PadStrategy::FixedBucket { bucket } => records
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if *bucket > 0 {
                    r.payload_len = r.payload_len.div_ceil(*bucket) * bucket;
                }
                r.payload = None;
                r
            })
            .collect(),
    }
}

/// Applies loss, delay, and padding per the spec's composition order.
pub fn apply(records: &[PacketRecord], spec: &PerturbationSpec) -> Result<Vec<PacketRecord>, PerturbError> {
    spec.validate()?;
    let staged = match spec.order {
        ComposeOrder::LossThenDelay => {
            let lost = inject_loss(records, spec.loss_fraction, spec.seed);
            inject_delay(&lost, spec.delay_fraction, spec.delay_delta, spec.seed)
        }
        ComposeOrder::DelayThenLoss => {
            let delayed = inject_delay(records, spec.delay_fraction, spec.delay_delta, spec.seed);
            inject_loss(&delayed, spec.loss_fraction, spec.seed)
        }
    };
    Ok(pad_lengths(&staged, &spec.pad_strategy, spec.seed))
}
