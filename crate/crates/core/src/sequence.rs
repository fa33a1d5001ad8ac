//! Exchange reconstruction, controller-issued length sequences, and per-day
//! partitioning.
//!
//! A request and its response belong together only when the response follows
//! on the same (device, controller) pair within the pairing window. The
//! window default of 0.5 s also bounds the inter-arrival of two
//! controller-issued packets forming a length sequence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{classify_direction, Direction, PacketRecord, RoleMap};

/// Default pairing and sequence window, in seconds.
pub const DEFAULT_WINDOW_SECS: f64 = 0.5;

/// Seconds per calendar day.
pub const DAY_SECS: f64 = 86_400.0;

/// A matched request/response exchange. `gap` is the response delay in
/// seconds and is zero when no response is present.
#[derive(Debug, Clone, PartialEq)]
pub struct Exchange {
    pub request: PacketRecord,
    pub response: Option<PacketRecord>,
    pub gap: f64,
}

/// Two controller-issued packet lengths observed back-to-back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LengthSequence {
    pub first_len: u32,
    pub second_len: u32,
}

impl LengthSequence {
    pub fn new(first_len: u32, second_len: u32) -> Self {
        LengthSequence {
            first_len,
            second_len,
        }
    }
}

// On the wire a sequence is the two-element array `[first, second]`.
impl Serialize for LengthSequence {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [self.first_len, self.second_len].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LengthSequence {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [first_len, second_len] = <[u32; 2]>::deserialize(deserializer)?;
        Ok(LengthSequence {
            first_len,
            second_len,
        })
    }
}

/// Where a packet ended up after pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairRole {
    Request { response: usize },
    Response { request: usize },
    Unpaired,
}

/// Greedy earliest-response matching with caller-supplied eligibility.
///
/// Each eligible controller-to-device packet, in input order, is matched to
/// the earliest later eligible device-to-controller packet on the reversed
/// endpoint pair within `window` seconds that is not already matched.
/// Records are expected in timestamp order.
pub fn pair_roles_with<RQ, RS>(
    records: &[PacketRecord],
    roles: &RoleMap,
    window: f64,
    mut request_ok: RQ,
    mut response_ok: RS,
) -> Vec<PairRole>
where
    RQ: FnMut(usize, &PacketRecord) -> bool,
    RS: FnMut(usize, &PacketRecord) -> bool,
{
    let directions: Vec<Direction> = records
        .iter()
        .map(|r| classify_direction(r, roles))
        .collect();
    let mut out = vec![PairRole::Unpaired; records.len()];

    for i in 0..records.len() {
        if directions[i] != Direction::ControllerToDevice || !request_ok(i, &records[i]) {
            continue;
        }
        let request = &records[i];
        for j in i + 1..records.len() {
            let gap = records[j].timestamp - request.timestamp;
            if gap > window {
                break;
            }
            if gap < 0.0
                || out[j] != PairRole::Unpaired
                || directions[j] != Direction::DeviceToController
                || records[j].src_id != request.dst_id
                || records[j].dst_id != request.src_id
                || !response_ok(j, &records[j])
            {
                continue;
            }
            out[i] = PairRole::Request { response: j };
            out[j] = PairRole::Response { request: i };
            break;
        }
    }
    out
}

/// [`pair_roles_with`] with every packet eligible.
pub fn pair_roles(records: &[PacketRecord], roles: &RoleMap, window: f64) -> Vec<PairRole> {
    pair_roles_with(records, roles, window, |_, _| true, |_, _| true)
}

/// Splits a trace into matched exchanges and the leftover packets. Every
/// packet lands in exactly one of the two.
pub fn pair_exchanges(
    records: &[PacketRecord],
    roles: &RoleMap,
    window: f64,
) -> (Vec<Exchange>, Vec<PacketRecord>) {
    let assignments = pair_roles(records, roles, window);
    let mut exchanges = Vec::new();
    let mut unpaired = Vec::new();
    for (i, role) in assignments.iter().enumerate() {
        match role {
            PairRole::Request { response } => exchanges.push(Exchange {
                request: records[i].clone(),
                response: Some(records[*response].clone()),
                gap: records[*response].timestamp - records[i].timestamp,
            }),
            PairRole::Response { .. } => {}
            PairRole::Unpaired => unpaired.push(records[i].clone()),
        }
    }
    (exchanges, unpaired)
}

/// Emits `(len(x), len(y))` for each pair of consecutive controller-issued
/// packets to the same device with inter-arrival at most `window`, grouped
/// by device. Overlapping chains produce overlapping pairs.
pub fn extract_sequences(
    records: &[PacketRecord],
    roles: &RoleMap,
    window: f64,
) -> BTreeMap<String, Vec<LengthSequence>> {
    let mut last_seen: BTreeMap<&str, (f64, u32)> = BTreeMap::new();
    let mut out: BTreeMap<String, Vec<LengthSequence>> = BTreeMap::new();
    for r in records {
        if classify_direction(r, roles) != Direction::ControllerToDevice {
            continue;
        }
        if let Some(&(prev_ts, prev_len)) = last_seen.get(r.dst_id.as_str()) {
            if r.timestamp - prev_ts <= window {
                out.entry(r.dst_id.clone())
                    .or_default()
                    .push(LengthSequence::new(prev_len, r.payload_len));
            }
        }
        last_seen.insert(&r.dst_id, (r.timestamp, r.payload_len));
    }
    out
}

/// [`extract_sequences`] per (device, day): records are day-partitioned
/// first, so pairs never straddle a day boundary.
pub fn extract_sequences_by_day(
    records: &[PacketRecord],
    roles: &RoleMap,
    window: f64,
    tz_offset_secs: i64,
) -> BTreeMap<(String, i64), Vec<LengthSequence>> {
    let mut out = BTreeMap::new();
    for (day, bucket) in partition_days(records, tz_offset_secs) {
        for (device, seqs) in extract_sequences(&bucket, roles, window) {
            out.insert((device, day), seqs);
        }
    }
    out
}

/// Calendar-day index of a timestamp under the given offset.
pub fn day_of(timestamp: f64, tz_offset_secs: i64) -> i64 {
    ((timestamp + tz_offset_secs as f64) / DAY_SECS).floor() as i64
}

/// Buckets records by calendar day of `timestamp + offset`. The union of the
/// buckets is the input.
pub fn partition_days(
    records: &[PacketRecord],
    tz_offset_secs: i64,
) -> BTreeMap<i64, Vec<PacketRecord>> {
    let mut out: BTreeMap<i64, Vec<PacketRecord>> = BTreeMap::new();
    for r in records {
        out.entry(day_of(r.timestamp, tz_offset_secs))
            .or_default()
            .push(r.clone());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RoleMap;

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

    #[test]
    fn request_and_response_pair_within_window() {
        let records = vec![pkt("ctrl", "dev", 0.0, 60), pkt("dev", "ctrl", 0.2, 70)];
        let (exchanges, unpaired) = pair_exchanges(&records, &roles(), 0.5);
        assert_eq!(exchanges.len(), 1);
        assert!((exchanges[0].gap - 0.2).abs() < 1e-12);
        assert!(unpaired.is_empty());
    }

    #[test]
    fn response_outside_window_leaves_both_unpaired() {
        let records = vec![pkt("ctrl", "dev", 0.0, 60), pkt("dev", "ctrl", 0.9, 70)];
        let (exchanges, unpaired) = pair_exchanges(&records, &roles(), 0.5);
        assert!(exchanges.is_empty());
        assert_eq!(unpaired.len(), 2);
    }

    #[test]
    fn greedy_earliest_assignment() {
        let records = vec![
            pkt("ctrl", "dev", 0.0, 60),
            pkt("ctrl", "dev", 0.1, 61),
            pkt("dev", "ctrl", 0.2, 70),
        ];
        let assignments = pair_roles(&records, &roles(), 0.5);
        assert_eq!(assignments[0], PairRole::Request { response: 2 });
        assert_eq!(assignments[1], PairRole::Unpaired);
        // Brute-force check: of all feasible single matchings, greedy picks
        // the one pairing the earliest request with the earliest response.
        for req in 0..2 {
            let feasible = records[2].timestamp - records[req].timestamp <= 0.5;
            assert!(feasible);
        }
    }

    #[test]
    fn pairing_respects_endpoint_reversal() {
        let mut other = pkt("dev", "ctrl", 0.1, 70);
        other.src_id = "other".into();
        let records = vec![pkt("ctrl", "dev", 0.0, 60), other];
        let (exchanges, _) = pair_exchanges(&records, &roles(), 0.5);
        assert!(exchanges.is_empty());
    }

    #[test]
    fn sequence_from_two_close_controller_packets() {
        let records = vec![pkt("ctrl", "dev", 0.0, 75), pkt("ctrl", "dev", 0.1, 59)];
        let seqs = extract_sequences(&records, &roles(), 0.5);
        assert_eq!(seqs["dev"], vec![LengthSequence::new(75, 59)]);
    }

    #[test]
    fn sequence_window_exceeded() {
        let records = vec![pkt("ctrl", "dev", 0.0, 75), pkt("ctrl", "dev", 0.6, 59)];
        assert!(extract_sequences(&records, &roles(), 0.5).is_empty());
    }

    #[test]
    fn sliding_pairs_over_three_packets() {
        let records = vec![
            pkt("ctrl", "dev", 0.0, 10),
            pkt("ctrl", "dev", 0.2, 20),
            pkt("ctrl", "dev", 0.4, 30),
        ];
        let seqs = extract_sequences(&records, &roles(), 0.5);
        assert_eq!(
            seqs["dev"],
            vec![LengthSequence::new(10, 20), LengthSequence::new(20, 30)]
        );
    }

    #[test]
    fn day_boundary_splits_buckets() {
        let records = vec![pkt("ctrl", "dev", 86_399.0, 10), pkt("ctrl", "dev", 86_401.0, 10)];
        let buckets = partition_days(&records, 0);
        assert_eq!(buckets.len(), 2);
        assert!(buckets.contains_key(&0));
        assert!(buckets.contains_key(&1));
    }

    #[test]
    fn empty_input_gives_empty_map() {
        assert!(partition_days(&[], 0).is_empty());
    }

    #[test]
    fn timezone_offset_shifts_the_boundary() {
        let records = vec![pkt("ctrl", "dev", 86_399.0, 10)];
        let buckets = partition_days(&records, 3600);
        assert!(buckets.contains_key(&1));
    }

    #[test]
    fn shrinking_window_never_adds_exchanges() {
        let records = vec![
            pkt("ctrl", "dev", 0.0, 60),
            pkt("dev", "ctrl", 0.3, 70),
            pkt("ctrl", "dev", 1.0, 61),
            pkt("dev", "ctrl", 1.45, 71),
        ];
        let wide = pair_exchanges(&records, &roles(), 0.5).0.len();
        let narrow = pair_exchanges(&records, &roles(), 0.2).0.len();
        assert!(narrow <= wide);
    }
}
