//! matterlens-core: traffic-metadata analysis for Matter smart-home
//! networks.
//!
//! The pipeline stages, in the order they usually compose:
//!
//! - [`ingest`]: PCAP/PCAPNG captures and portable JSONL traces to
//!   [`model::PacketRecord`] streams, with retransmission dedup.
//! - [`sequence`]: request/response pairing, controller-issued length
//!   sequences, per-day partitioning.
//! - [`label`]: rule-based interaction labeling over packet length and
//!   direction.
//! - [`fingerprint`]: per-day device-type classification from labeled
//!   invoke traffic.
//! - [`synth`]: seeded synthetic scenarios with per-packet ground truth.
//! - [`perturb`]: loss, delay, and padding perturbations.
//! - [`eval`]: confusion matrices, the four headline metrics, and the
//!   robustness sweeps.
//!
//! Everything is deterministic for a given seed, and every stage talks to
//! the next through plain files, so runs are reproducible end to end.

pub mod eval;
pub mod fingerprint;
pub mod ingest;
pub mod label;
pub mod model;
pub mod perturb;
pub mod sequence;
pub mod synth;

pub use model::{
    classify_direction, Direction, DeviceType, InteractionLabel, PacketRecord, RoleMap,
};
pub use sequence::DEFAULT_WINDOW_SECS;
