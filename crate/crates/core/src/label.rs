//! Rule-based interaction labeling over packet length and direction.
//!
//! Rules fire in three tiers:
//!
//! 1. Exact-length control packets. A packet whose length equals the END or
//!    SRA-2 length is that packet type regardless of direction, and a
//!    controller-issued packet with a TRA length is a TRA. These never take
//!    part in exchange pairing: a transaction-terminating ack that "pairs"
//!    with the next transaction's response would corrupt both labels.
//! 2. Paired exchanges. The response length decides the pair: invoke range,
//!    write range, or the multi-attribute read ratio. The region where the
//!    invoke and write response ranges overlap is settled by policy.
//! 3. Singleton rules for whatever remains, then the `Unknown` fallback.
//!
//! A paired exchange where no response rule fires leaves both packets to
//! tier 3, as if unpaired.

use std::collections::BTreeSet;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{classify_direction, Direction, InteractionLabel, PacketRecord, RoleMap};
use crate::sequence::{pair_roles_with, PairRole};

/// Inclusive byte range, serialized as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ByteRange {
    pub lo: u32,
    pub hi: u32,
}

impl ByteRange {
    pub fn new(lo: u32, hi: u32) -> Self {
        ByteRange { lo, hi }
    }

    pub fn contains(&self, len: u32) -> bool {
        self.lo <= len && len <= self.hi
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn intersect(&self, other: &ByteRange) -> ByteRange {
        ByteRange {
            lo: self.lo.max(other.lo),
            hi: self.hi.min(other.hi),
        }
    }
}

impl Serialize for ByteRange {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ByteRange {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[u32; 2]>::deserialize(deserializer)?;
        Ok(ByteRange { lo, hi })
    }
}

/// How to label exchanges whose response length falls where the invoke and
/// write response ranges overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    /// Default: write responses above 66 bytes are highly uncommon, so the
    /// invoke reading wins.
    PreferIra,
    PreferWra,
    MarkAmbiguous,
}

/// The tunable rule thresholds. Loadable from a JSON file so deployments can
/// recalibrate without code changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RuleSet {
    pub single_attr_rra_range: ByteRange,
    pub empty_rda_len: u32,
    pub end_len: u32,
    pub sra2_len: u32,
    pub tra_lens: BTreeSet<u32>,
    pub wra_resp_range: ByteRange,
    pub ira_resp_range: ByteRange,
    pub multiattr_ratio: f64,
    pub nonempty_rda_excluded: BTreeSet<u32>,
    pub overlap_policy: OverlapPolicy,
}

impl Default for RuleSet {
    fn default() -> Self {
        RuleSet {
            single_attr_rra_range: ByteRange::new(51, 58),
            empty_rda_len: 41,
            end_len: 34,
            sra2_len: 42,
            tra_lens: [38, 39].into(),
            wra_resp_range: ByteRange::new(62, 69),
            ira_resp_range: ByteRange::new(67, 74),
            multiattr_ratio: 1.2,
            nonempty_rda_excluded: [34, 41, 42].into(),
            overlap_policy: OverlapPolicy::PreferIra,
        }
    }
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("invalid rule set: {0}")]
    Invalid(String),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}: {1}")]
    Parse(String, String),
}

impl RuleSet {
    pub fn validate(&self) -> Result<(), RuleError> {
        if self.single_attr_rra_range.is_empty() {
            return Err(RuleError::Invalid("empty single-attribute range".into()));
        }
        if self.wra_resp_range.is_empty() || self.ira_resp_range.is_empty() {
            return Err(RuleError::Invalid("empty response range".into()));
        }
        let overlap = self.overlap_range();
        if !overlap.is_empty() && (overlap.lo < 67 || overlap.hi > 69) {
            return Err(RuleError::Invalid(format!(
                "write/invoke response ranges may overlap only within [67, 69], got [{}, {}]",
                overlap.lo, overlap.hi
            )));
        }
        if self.multiattr_ratio <= 0.0 || !self.multiattr_ratio.is_finite() {
            return Err(RuleError::Invalid("ratio must be positive".into()));
        }
        Ok(())
    }

    /// Intersection of the write and invoke response ranges (may be empty).
    pub fn overlap_range(&self) -> ByteRange {
        self.wra_resp_range.intersect(&self.ira_resp_range)
    }

    pub fn from_file(path: &Path) -> Result<Self, RuleError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RuleError::Io(path.display().to_string(), e.to_string()))?;
        let rules: RuleSet = serde_json::from_str(&text)
            .map_err(|e| RuleError::Parse(path.display().to_string(), e.to_string()))?;
        rules.validate()?;
        Ok(rules)
    }

    pub fn to_file(&self, path: &Path) -> Result<(), RuleError> {
        let text = serde_json::to_string_pretty(self).expect("rule set serializes");
        std::fs::write(path, text)
            .map_err(|e| RuleError::Io(path.display().to_string(), e.to_string()))
    }

    /// True when the packet is one of the fixed-length control packets that
    /// tier 1 claims outright.
    fn exact_label(&self, len: u32, direction: Direction) -> Option<InteractionLabel> {
        if len == self.end_len {
            Some(InteractionLabel::End)
        } else if len == self.sra2_len {
            Some(InteractionLabel::Sra2)
        } else if direction == Direction::ControllerToDevice && self.tra_lens.contains(&len) {
            Some(InteractionLabel::Tra)
        } else {
            None
        }
    }
}

/// Label pair for an exchange whose response length lies in the overlap
/// between the write and invoke response ranges.
pub fn resolve_overlap(
    _response_len: u32,
    policy: OverlapPolicy,
) -> (InteractionLabel, InteractionLabel) {
    match policy {
        OverlapPolicy::PreferIra => (InteractionLabel::Ira1, InteractionLabel::Ira2),
        OverlapPolicy::PreferWra => (InteractionLabel::Wra1, InteractionLabel::Wra2),
        OverlapPolicy::MarkAmbiguous => (InteractionLabel::Unknown, InteractionLabel::Unknown),
    }
}

/// Assigns exactly one label to every record. Total and deterministic for a
/// given (trace, rules, roles, window).
pub fn label_records(
    records: &[PacketRecord],
    roles: &RoleMap,
    rules: &RuleSet,
    window: f64,
) -> Vec<InteractionLabel> {
    let directions: Vec<Direction> = records
        .iter()
        .map(|r| classify_direction(r, roles))
        .collect();

    // Tier 1: exact-length control packets.
    let mut labels: Vec<Option<InteractionLabel>> = records
        .iter()
        .zip(&directions)
        .map(|(r, &d)| rules.exact_label(r.payload_len, d))
        .collect();

    // Tier 2: pair the remaining packets and apply response-length rules.
    let overlap = rules.overlap_range();
    let assignments = pair_roles_with(
        records,
        roles,
        window,
        |i, _| labels[i].is_none(),
        |j, _| labels[j].is_none(),
    );
    for (i, role) in assignments.iter().enumerate() {
        if let PairRole::Request { response } = role {
            let req_len = records[i].payload_len;
            let resp_len = records[*response].payload_len;
            let pair = if !overlap.is_empty() && overlap.contains(resp_len) {
                Some(resolve_overlap(resp_len, rules.overlap_policy))
            } else if rules.ira_resp_range.contains(resp_len) {
                Some((InteractionLabel::Ira1, InteractionLabel::Ira2))
            } else if rules.wra_resp_range.contains(resp_len) {
                Some((InteractionLabel::Wra1, InteractionLabel::Wra2))
            } else if f64::from(resp_len) >= rules.multiattr_ratio * f64::from(req_len) {
                Some((
                    InteractionLabel::MultiAttrRRA,
                    InteractionLabel::MultiAttrRDA,
                ))
            } else {
                // No pair rule fires; both fall through to tier 3.
                None
            };
            if let Some((req_label, resp_label)) = pair {
                labels[i] = Some(req_label);
                labels[*response] = Some(resp_label);
            }
        }
    }

    // Tier 3: singleton rules and the fallback.
    labels
        .into_iter()
        .enumerate()
        .map(|(i, assigned)| {
            if let Some(label) = assigned {
                return label;
            }
            let len = records[i].payload_len;
            match directions[i] {
                Direction::ControllerToDevice
                    if rules.single_attr_rra_range.contains(len) =>
                {
                    InteractionLabel::SingleAttrRRA
                }
                Direction::DeviceToController if len == rules.empty_rda_len => {
                    InteractionLabel::EmptyRDA
                }
                Direction::DeviceToController
                    if !rules.nonempty_rda_excluded.contains(&len) =>
                {
                    InteractionLabel::NonEmptyRDA
                }
                _ => InteractionLabel::Unknown,
            }
        })
        .collect()
}

/// [`label_records`], paired with the input records.
pub fn label_trace(
    records: &[PacketRecord],
    roles: &RoleMap,
    rules: &RuleSet,
    window: f64,
) -> Vec<(PacketRecord, InteractionLabel)> {
    label_records(records, roles, rules, window)
        .into_iter()
        .zip(records)
        .map(|(label, record)| (record.clone(), label))
        .collect()
}

/// A record with its assigned label, as stored in labeled traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    #[serde(flatten)]
    pub record: PacketRecord,
    pub label: InteractionLabel,
}

#[derive(Debug, Error)]
pub enum LabelIoError {
    #[error("labeled trace schema violation at line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Writes a labeled trace: the plain trace format plus a `label` field.
pub fn write_labeled_trace(
    items: &[(PacketRecord, InteractionLabel)],
    path: &Path,
) -> Result<(), LabelIoError> {
    let file = std::fs::File::create(path).map_err(|e| LabelIoError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut writer = BufWriter::new(file);
    for (record, label) in items {
        let line = serde_json::to_string(&LabeledRecord {
            record: record.clone(),
            label: *label,
        })
        .expect("labeled record serializes");
        writeln!(writer, "{line}").map_err(|e| LabelIoError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    writer.flush().map_err(|e| LabelIoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn read_labeled_trace(
    path: &Path,
) -> Result<Vec<(PacketRecord, InteractionLabel)>, LabelIoError> {
    let file = std::fs::File::open(path).map_err(|e| LabelIoError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut items = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| LabelIoError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item: LabeledRecord =
            serde_json::from_str(&line).map_err(|e| LabelIoError::SchemaViolation {
                line: i + 1,
                message: e.to_string(),
            })?;
        items.push((item.record, item.label));
    }
    Ok(items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionLabel as L;

    fn roles() -> RoleMap {
        RoleMap::new(
            ["ctrl".to_string()].into(),
            [("dev".to_string(), "dev".to_string())].into(),
        )
        .unwrap()
    }

    fn pkt(src: &str, dst: &str, ts: f64, len: u32) -> PacketRecord {
        PacketRecord {
            timestamp: ts,
            src_id: src.into(),
            dst_id: dst.into(),
            src_port: 5540,
            dst_port: 5540,
            payload_len: len,
            message_flags: 0,
            security_flags: 0,
            session_id: 1,
            message_counter: (ts * 1000.0) as u32,
            payload: None,
        }
    }

    fn label_all(records: &[PacketRecord]) -> Vec<L> {
        label_records(records, &roles(), &RuleSet::default(), 0.5)
    }

    #[test]
    fn single_attr_read_request_by_range() {
        assert_eq!(label_all(&[pkt("ctrl", "dev", 0.0, 55)]), vec![L::SingleAttrRRA]);
    }

    #[test]
    fn end_matches_on_length_alone() {
        assert_eq!(label_all(&[pkt("ctrl", "dev", 0.0, 34)]), vec![L::End]);
        assert_eq!(label_all(&[pkt("dev", "ctrl", 0.0, 34)]), vec![L::End]);
        assert_eq!(label_all(&[pkt("x", "y", 0.0, 34)]), vec![L::End]);
    }

    #[test]
    fn invoke_pair_by_response_range() {
        let records = vec![pkt("ctrl", "dev", 0.0, 59), pkt("dev", "ctrl", 0.2, 70)];
        assert_eq!(label_all(&records), vec![L::Ira1, L::Ira2]);
    }

    #[test]
    fn write_pair_by_response_range() {
        let records = vec![pkt("ctrl", "dev", 0.0, 63), pkt("dev", "ctrl", 0.2, 65)];
        assert_eq!(label_all(&records), vec![L::Wra1, L::Wra2]);
    }

    #[test]
    fn multi_attr_read_by_ratio_boundary() {
        let records = vec![pkt("ctrl", "dev", 0.0, 50), pkt("dev", "ctrl", 0.2, 60)];
        assert_eq!(label_all(&records), vec![L::MultiAttrRRA, L::MultiAttrRDA]);
        let records = vec![pkt("ctrl", "dev", 0.0, 50), pkt("dev", "ctrl", 0.2, 59)];
        // 59 < 1.2 * 50: no pair rule, falls through.
        assert_eq!(label_all(&records), vec![L::Unknown, L::NonEmptyRDA]);
    }

    #[test]
    fn empty_rda_for_unpaired_device_packet() {
        assert_eq!(label_all(&[pkt("dev", "ctrl", 0.0, 41)]), vec![L::EmptyRDA]);
    }

    #[test]
    fn nonempty_rda_excluded_lengths_fall_back() {
        assert_eq!(label_all(&[pkt("dev", "ctrl", 0.0, 77)]), vec![L::NonEmptyRDA]);
        // 34 and 42 are claimed by END/SRA-2 first; 41 by the empty rule.
        assert_eq!(label_all(&[pkt("dev", "ctrl", 0.0, 42)]), vec![L::Sra2]);
    }

    #[test]
    fn tra_requires_controller_direction() {
        assert_eq!(label_all(&[pkt("ctrl", "dev", 0.0, 39)]), vec![L::Tra]);
        assert_eq!(label_all(&[pkt("dev", "ctrl", 0.0, 39)]), vec![L::NonEmptyRDA]);
    }

    #[test]
    fn overlap_region_follows_policy() {
        let records = vec![pkt("ctrl", "dev", 0.0, 63), pkt("dev", "ctrl", 0.2, 68)];
        let mut rules = RuleSet::default();
        assert_eq!(
            label_records(&records, &roles(), &rules, 0.5),
            vec![L::Ira1, L::Ira2]
        );
        rules.overlap_policy = OverlapPolicy::PreferWra;
        assert_eq!(
            label_records(&records, &roles(), &rules, 0.5),
            vec![L::Wra1, L::Wra2]
        );
        rules.overlap_policy = OverlapPolicy::MarkAmbiguous;
        assert_eq!(
            label_records(&records, &roles(), &rules, 0.5),
            vec![L::Unknown, L::Unknown]
        );
    }

    #[test]
    fn overlap_boundary_is_exclusive_of_66() {
        let records = vec![pkt("ctrl", "dev", 0.0, 63), pkt("dev", "ctrl", 0.2, 66)];
        for policy in [
            OverlapPolicy::PreferIra,
            OverlapPolicy::PreferWra,
            OverlapPolicy::MarkAmbiguous,
        ] {
            let rules = RuleSet {
                overlap_policy: policy,
                ..RuleSet::default()
            };
            assert_eq!(
                label_records(&records, &roles(), &rules, 0.5),
                vec![L::Wra1, L::Wra2],
                "policy {policy:?}"
            );
        }
    }

    #[test]
    fn control_packets_do_not_join_exchanges() {
        // END from one transaction must not swallow the next response.
        let records = vec![
            pkt("ctrl", "dev", 0.0, 34),
            pkt("ctrl", "dev", 0.1, 59),
            pkt("dev", "ctrl", 0.2, 70),
        ];
        assert_eq!(label_all(&records), vec![L::End, L::Ira1, L::Ira2]);
    }

    #[test]
    fn timed_invoke_sequence_labels_cleanly() {
        let records = vec![
            pkt("ctrl", "dev", 0.00, 39),
            pkt("dev", "ctrl", 0.10, 42),
            pkt("ctrl", "dev", 0.20, 64),
            pkt("dev", "ctrl", 0.30, 70),
            pkt("ctrl", "dev", 0.40, 34),
        ];
        assert_eq!(
            label_all(&records),
            vec![L::Tra, L::Sra2, L::Ira1, L::Ira2, L::End]
        );
    }

    #[test]
    fn unknown_fallback_for_unmatched_controller_packet() {
        assert_eq!(label_all(&[pkt("ctrl", "dev", 0.0, 59)]), vec![L::Unknown]);
        assert_eq!(label_all(&[pkt("x", "y", 0.0, 100)]), vec![L::Unknown]);
    }

    #[test]
    fn labeling_is_total_and_deterministic() {
        let records: Vec<PacketRecord> = (0..50)
            .map(|i| {
                let len = 30 + (i * 7) % 60;
                if i % 3 == 0 {
                    pkt("ctrl", "dev", i as f64 * 0.17, len)
                } else {
                    pkt("dev", "ctrl", i as f64 * 0.17, len)
                }
            })
            .collect();
        let a = label_all(&records);
        let b = label_all(&records);
        assert_eq!(a.len(), records.len());
        assert_eq!(a, b);
    }

    #[test]
    fn rule_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.json");
        let mut rules = RuleSet::default();
        rules.overlap_policy = OverlapPolicy::MarkAmbiguous;
        rules.to_file(&path).unwrap();
        let back = RuleSet::from_file(&path).unwrap();
        assert_eq!(back, rules);
    }

    #[test]
    fn invalid_overlap_rejected() {
        let mut rules = RuleSet::default();
        rules.wra_resp_range = ByteRange::new(62, 74);
        assert!(rules.validate().is_err());
    }
}
