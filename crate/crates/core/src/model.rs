//! Shared domain types: packet metadata records, endpoint roles, traffic
//! direction, and the closed set of interaction labels.
//!
//! Everything here is an immutable value object and safe to share across
//! workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One captured packet's metadata row.
///
/// `src_id`/`dst_id` are opaque endpoint identifiers formed from the
/// (network address, link address) pair, rendered as a canonical lowercase
/// string (`<ipv6>|<mac>`, or just `<ipv6>` when no link address exists).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRecord {
    /// Seconds since epoch, fractional, UTC.
    pub timestamp: f64,
    #[serde(rename = "src_id_pair")]
    pub src_id: String,
    #[serde(rename = "dst_id_pair")]
    pub dst_id: String,
    pub src_port: u16,
    pub dst_port: u16,
    /// Byte length of the transport (UDP) payload carrying the message,
    /// header included.
    pub payload_len: u32,
    pub message_flags: u8,
    pub security_flags: u8,
    pub session_id: u16,
    pub message_counter: u32,
    /// Raw transport payload, when retained. Serialized as a hex string.
    #[serde(
        default,
        skip_serializing_if = "Option::is_none",
        with = "hex_payload"
    )]
    pub payload: Option<Vec<u8>>,
}

impl PacketRecord {
    /// Checks the structural invariants a record must satisfy before it can
    /// enter any pipeline stage.
    pub fn validate(&self) -> Result<(), ModelError> {
        if !self.timestamp.is_finite() || self.timestamp < 0.0 {
            return Err(ModelError::InvalidRecord(format!(
                "timestamp must be finite and non-negative, got {}",
                self.timestamp
            )));
        }
        if let Some(payload) = &self.payload {
            if payload.len() as u32 != self.payload_len {
                return Err(ModelError::InvalidRecord(format!(
                    "payload_len {} does not match payload octet count {}",
                    self.payload_len,
                    payload.len()
                )));
            }
        }
        Ok(())
    }
}

mod hex_payload {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        value: &Option<Vec<u8>>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(bytes) => serializer.serialize_str(&hex::encode(bytes)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Option<Vec<u8>>, D::Error> {
        let raw: Option<String> = Option::deserialize(deserializer)?;
        match raw {
            Some(text) => hex::decode(&text)
                .map(Some)
                .map_err(serde::de::Error::custom),
            None => Ok(None),
        }
    }
}

/// Which endpoints act as controllers and which as end devices.
///
/// Roles come from an explicit configuration file; nothing in the toolkit
/// infers them silently. [`suggest_controller`] offers a heuristic the
/// operator can choose to apply.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RoleMap {
    pub controllers: BTreeSet<String>,
    /// Endpoint identifier to human-readable device name.
    pub devices: BTreeMap<String, String>,
}

impl RoleMap {
    pub fn new(
        controllers: BTreeSet<String>,
        devices: BTreeMap<String, String>,
    ) -> Result<Self, ModelError> {
        let map = RoleMap {
            controllers,
            devices,
        };
        map.validate()?;
        Ok(map)
    }

    /// Controller and device identifier sets must be disjoint.
    pub fn validate(&self) -> Result<(), ModelError> {
        for id in &self.controllers {
            if self.devices.contains_key(id) {
                return Err(ModelError::OverlappingRoles(id.clone()));
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(path.display().to_string(), e.to_string()))?;
        let map: RoleMap = serde_json::from_str(&text)
            .map_err(|e| ModelError::Parse(path.display().to_string(), e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn to_file(&self, path: &Path) -> Result<(), ModelError> {
        let text = serde_json::to_string_pretty(self).expect("role map serializes");
        std::fs::write(path, text)
            .map_err(|e| ModelError::Io(path.display().to_string(), e.to_string()))
    }

    pub fn is_controller(&self, id: &str) -> bool {
        self.controllers.contains(id)
    }

    pub fn is_device(&self, id: &str) -> bool {
        self.devices.contains_key(id)
    }
}

/// Traffic direction relative to the configured roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    ControllerToDevice,
    DeviceToController,
    /// Neither rule applies (unmapped endpoints, or controller-to-controller
    /// traffic in multi-controller fabrics).
    Other,
}

/// Total function: `ControllerToDevice` iff src is a controller and dst a
/// device, `DeviceToController` for the reverse, `Other` otherwise.
pub fn classify_direction(record: &PacketRecord, roles: &RoleMap) -> Direction {
    direction_of(&record.src_id, &record.dst_id, roles)
}

pub fn direction_of(src_id: &str, dst_id: &str, roles: &RoleMap) -> Direction {
    if roles.is_controller(src_id) && roles.is_device(dst_id) {
        Direction::ControllerToDevice
    } else if roles.is_device(src_id) && roles.is_controller(dst_id) {
        Direction::DeviceToController
    } else {
        Direction::Other
    }
}

/// Heuristic controller guess: the endpoint talking to the most distinct
/// peers. Never applied automatically; callers must surface the suggestion
/// to the operator.
pub fn suggest_controller(records: &[PacketRecord]) -> Option<(String, usize)> {
    let mut peers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for r in records {
        peers.entry(&r.src_id).or_default().insert(&r.dst_id);
        peers.entry(&r.dst_id).or_default().insert(&r.src_id);
    }
    peers
        .into_iter()
        .max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(a.0)))
        .map(|(id, set)| (id.to_string(), set.len()))
}

/// Closed enumeration of packet-level interaction labels.
///
/// Exactly one label is assigned per packet after labeling; `Unknown` is the
/// fallback and is only ever produced by the labeler, never by ground truth.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum InteractionLabel {
    MultiAttrRRA,
    MultiAttrRDA,
    SingleAttrRRA,
    EmptyRDA,
    NonEmptyRDA,
    #[serde(rename = "END")]
    End,
    #[serde(rename = "WRA1")]
    Wra1,
    #[serde(rename = "WRA2")]
    Wra2,
    #[serde(rename = "IRA1")]
    Ira1,
    #[serde(rename = "IRA2")]
    Ira2,
    #[serde(rename = "SRA2")]
    Sra2,
    #[serde(rename = "TRA")]
    Tra,
    Unknown,
}

impl InteractionLabel {
    /// Every label, in declaration order. `Unknown` is last.
    pub const ALL: [InteractionLabel; 13] = [
        InteractionLabel::MultiAttrRRA,
        InteractionLabel::MultiAttrRDA,
        InteractionLabel::SingleAttrRRA,
        InteractionLabel::EmptyRDA,
        InteractionLabel::NonEmptyRDA,
        InteractionLabel::End,
        InteractionLabel::Wra1,
        InteractionLabel::Wra2,
        InteractionLabel::Ira1,
        InteractionLabel::Ira2,
        InteractionLabel::Sra2,
        InteractionLabel::Tra,
        InteractionLabel::Unknown,
    ];

    /// The infrequent, higher-complexity request classes reported separately
    /// in evaluation (invoke, read, and write requests).
    pub const UNUSUAL: [InteractionLabel; 4] = [
        InteractionLabel::Ira1,
        InteractionLabel::MultiAttrRRA,
        InteractionLabel::SingleAttrRRA,
        InteractionLabel::Wra1,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            InteractionLabel::MultiAttrRRA => "MultiAttrRRA",
            InteractionLabel::MultiAttrRDA => "MultiAttrRDA",
            InteractionLabel::SingleAttrRRA => "SingleAttrRRA",
            InteractionLabel::EmptyRDA => "EmptyRDA",
            InteractionLabel::NonEmptyRDA => "NonEmptyRDA",
            InteractionLabel::End => "END",
            InteractionLabel::Wra1 => "WRA1",
            InteractionLabel::Wra2 => "WRA2",
            InteractionLabel::Ira1 => "IRA1",
            InteractionLabel::Ira2 => "IRA2",
            InteractionLabel::Sra2 => "SRA2",
            InteractionLabel::Tra => "TRA",
            InteractionLabel::Unknown => "Unknown",
        }
    }
}

impl fmt::Display for InteractionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InteractionLabel {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InteractionLabel::ALL
            .iter()
            .find(|l| l.as_str() == s)
            .copied()
            .ok_or_else(|| ModelError::UnknownLabel(s.to_string()))
    }
}

/// End-device categories the fingerprint database distinguishes.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum DeviceType {
    Lighting,
    Lock,
    Plug,
    Sensor,
}

impl DeviceType {
    pub const ALL: [DeviceType; 4] = [
        DeviceType::Lighting,
        DeviceType::Lock,
        DeviceType::Plug,
        DeviceType::Sensor,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DeviceType::Lighting => "Lighting",
            DeviceType::Lock => "Lock",
            DeviceType::Plug => "Plug",
            DeviceType::Sensor => "Sensor",
        }
    }
}

impl fmt::Display for DeviceType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeviceType {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DeviceType::ALL
            .iter()
            .find(|t| t.as_str() == s)
            .copied()
            .ok_or_else(|| ModelError::UnknownLabel(s.to_string()))
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid record: {0}")]
    InvalidRecord(String),
    #[error("endpoint {0} is listed as both controller and device")]
    OverlappingRoles(String),
    #[error("unknown label or device type: {0}")]
    UnknownLabel(String),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}: {1}")]
    Parse(String, String),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(src: &str, dst: &str) -> PacketRecord {
        PacketRecord {
            timestamp: 1.0,
            src_id: src.to_string(),
            dst_id: dst.to_string(),
            src_port: 5540,
            dst_port: 5540,
            payload_len: 10,
            message_flags: 0,
            security_flags: 0,
            session_id: 0,
            message_counter: 0,
            payload: None,
        }
    }

    fn roles() -> RoleMap {
        RoleMap::new(
            ["ctrl".to_string()].into(),
            [("bulb".to_string(), "bulb".to_string())].into(),
        )
        .unwrap()
    }

    #[test]
    fn direction_controller_to_device() {
        assert_eq!(
            classify_direction(&record("ctrl", "bulb"), &roles()),
            Direction::ControllerToDevice
        );
    }

    #[test]
    fn direction_device_to_controller() {
        assert_eq!(
            classify_direction(&record("bulb", "ctrl"), &roles()),
            Direction::DeviceToController
        );
    }

    #[test]
    fn direction_other_for_unmapped_endpoints() {
        assert_eq!(
            classify_direction(&record("laptop", "printer"), &roles()),
            Direction::Other
        );
    }

    #[test]
    fn overlapping_roles_rejected() {
        let err = RoleMap::new(
            ["x".to_string()].into(),
            [("x".to_string(), "x".to_string())].into(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn label_round_trips_through_strings() {
        for label in InteractionLabel::ALL {
            let parsed: InteractionLabel = label.as_str().parse().unwrap();
            assert_eq!(parsed, label);
            let json = serde_json::to_string(&label).unwrap();
            let back: InteractionLabel = serde_json::from_str(&json).unwrap();
            assert_eq!(back, label);
        }
    }

    #[test]
    fn record_validation_checks_payload_len() {
        let mut r = record("a", "b");
        r.payload = Some(vec![0; 4]);
        assert!(r.validate().is_err());
        r.payload_len = 4;
        assert!(r.validate().is_ok());
    }

    #[test]
    fn suggest_controller_picks_busiest_endpoint() {
        let records = vec![
            record("hub", "a"),
            record("hub", "b"),
            record("c", "hub"),
            record("a", "b"),
        ];
        let (id, peers) = suggest_controller(&records).unwrap();
        assert_eq!(id, "hub");
        assert_eq!(peers, 3);
    }
}
