//! Device-type classification from per-day invoke-traffic observations.
//!
//! A fingerprint lists the invoke-request lengths a device type produces,
//! grouped into length classes (values inside one class encode the same
//! command issued by different controllers and count once), plus the
//! controller-issued length sequences typical for the type. An observation
//! is what one device actually showed on one day. The match score is
//!
//! ```text
//! S = m + m / n
//! ```
//!
//! where `n` is the number of length classes in the fingerprint and `m` how
//! many of them the observation hits. Ties fall back to the number of
//! matched sequences, then to database order.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DeviceType, Direction, InteractionLabel, PacketRecord, RoleMap};
use crate::sequence::{day_of, LengthSequence};

/// One device type's traffic signature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fingerprint {
    pub device_type: DeviceType,
    /// Length classes; each inner set is one class.
    #[serde(rename = "lengths")]
    pub ira1_lengths: Vec<BTreeSet<u32>>,
    pub sequences: BTreeSet<LengthSequence>,
}

impl Fingerprint {
    pub fn is_empty(&self) -> bool {
        self.ira1_lengths.is_empty() && self.sequences.is_empty()
    }
}

/// Ordered fingerprint collection; order breaks residual ties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintDb {
    pub fingerprints: Vec<Fingerprint>,
}

#[derive(Debug, Error)]
pub enum FingerprintError {
    #[error("invalid fingerprint database: {0}")]
    Invalid(String),
    #[error("{0}: {1}")]
    Io(String, String),
    #[error("{0}: {1}")]
    Parse(String, String),
}

impl FingerprintDb {
    /// The shipped signature database.
    pub fn builtin() -> Self {
        fn class(values: &[u32]) -> BTreeSet<u32> {
            values.iter().copied().collect()
        }
        FingerprintDb {
            fingerprints: vec![
                Fingerprint {
                    device_type: DeviceType::Lighting,
                    ira1_lengths: vec![
                        class(&[59]),
                        class(&[70, 71]),
                        class(&[72]),
                        class(&[73]),
                        class(&[75]),
                    ],
                    sequences: [
                        LengthSequence::new(75, 59),
                        LengthSequence::new(73, 59),
                        LengthSequence::new(72, 59),
                    ]
                    .into(),
                },
                Fingerprint {
                    device_type: DeviceType::Lock,
                    ira1_lengths: vec![class(&[64])],
                    sequences: [LengthSequence::new(39, 64), LengthSequence::new(38, 64)]
                        .into(),
                },
                Fingerprint {
                    device_type: DeviceType::Plug,
                    ira1_lengths: vec![class(&[59])],
                    sequences: BTreeSet::new(),
                },
                Fingerprint {
                    device_type: DeviceType::Sensor,
                    ira1_lengths: vec![],
                    sequences: BTreeSet::new(),
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<(), FingerprintError> {
        if self.fingerprints.is_empty() {
            return Err(FingerprintError::Invalid("database is empty".into()));
        }
        for fp in &self.fingerprints {
            for class in &fp.ira1_lengths {
                if class.is_empty() {
                    return Err(FingerprintError::Invalid(format!(
                        "{} has an empty length class",
                        fp.device_type
                    )));
                }
                if class.contains(&0) {
                    return Err(FingerprintError::Invalid(format!(
                        "{} has a zero length",
                        fp.device_type
                    )));
                }
            }
            for seq in &fp.sequences {
                if seq.first_len == 0 || seq.second_len == 0 {
                    return Err(FingerprintError::Invalid(format!(
                        "{} has a zero-length sequence element",
                        fp.device_type
                    )));
                }
            }
            if fp.device_type == DeviceType::Sensor && !fp.is_empty() {
                return Err(FingerprintError::Invalid(
                    "the sensor fingerprint must be empty".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, FingerprintError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| FingerprintError::Io(path.display().to_string(), e.to_string()))?;
        let db: FingerprintDb = serde_json::from_str(&text)
            .map_err(|e| FingerprintError::Parse(path.display().to_string(), e.to_string()))?;
        db.validate()?;
        Ok(db)
    }

    pub fn to_file(&self, path: &Path) -> Result<(), FingerprintError> {
        let text = serde_json::to_string_pretty(self).expect("database serializes");
        std::fs::write(path, text)
            .map_err(|e| FingerprintError::Io(path.display().to_string(), e.to_string()))
    }
}

/// What one device showed on one day: distinct invoke-request lengths and
/// the controller-issued sequences built from invoke/timed-request packets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub device_id: String,
    pub day: i64,
    pub ira1_lengths: BTreeSet<u32>,
    pub sequences: Vec<LengthSequence>,
}

/// Match strength of an observation against one fingerprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub matched_sequences: usize,
}

/// Builds the observation for one device from already-labeled records
/// (normally one day's partition). Only controller-issued packets labeled
/// as invoke requests contribute lengths; sequences come from consecutive
/// invoke/timed-request packets within `window` seconds.
pub fn build_observation(
    labeled: &[(PacketRecord, InteractionLabel)],
    roles: &RoleMap,
    device_id: &str,
    day: i64,
    window: f64,
) -> Observation {
    let mut ira1_lengths = BTreeSet::new();
    let mut sequences = Vec::new();
    let mut prev: Option<(f64, u32)> = None;

    for (record, label) in labeled {
        if record.dst_id != device_id
            || crate::model::classify_direction(record, roles) != Direction::ControllerToDevice
        {
            continue;
        }
        match label {
            InteractionLabel::Ira1 => {
                ira1_lengths.insert(record.payload_len);
            }
            InteractionLabel::Tra => {}
            _ => continue,
        }
        if let Some((prev_ts, prev_len)) = prev {
            if record.timestamp - prev_ts <= window {
                sequences.push(LengthSequence::new(prev_len, record.payload_len));
            }
        }
        prev = Some((record.timestamp, record.payload_len));
    }

    Observation {
        device_id: device_id.to_string(),
        day,
        ira1_lengths,
        sequences,
    }
}

/// Evaluates the match score. An empty fingerprint scores zero; otherwise
/// `m + m/n` over length classes, with the matched-sequence count carried
/// alongside for tie-breaking.
pub fn score(obs: &Observation, fp: &Fingerprint) -> Score {
    let n = fp.ira1_lengths.len();
    let m = fp
        .ira1_lengths
        .iter()
        .filter(|class| class.iter().any(|len| obs.ira1_lengths.contains(len)))
        .count();
    let value = if n == 0 {
        0.0
    } else {
        m as f64 + m as f64 / n as f64
    };
    let matched_sequences = obs
        .sequences
        .iter()
        .filter(|s| fp.sequences.contains(s))
        .count();
    Score {
        value,
        matched_sequences,
    }
}

/// Scores the observation against every fingerprint, in database order.
pub fn score_all(obs: &Observation, db: &FingerprintDb) -> Vec<(DeviceType, Score)> {
    db.fingerprints
        .iter()
        .map(|fp| (fp.device_type, score(obs, fp)))
        .collect()
}

/// Picks the best-matching device type: maximum score value, ties broken by
/// matched sequences, remaining ties by database order. A device that shows
/// no signal anywhere classifies as the empty ("silent") fingerprint type.
pub fn classify_device(obs: &Observation, db: &FingerprintDb) -> DeviceType {
    let scored = score_all(obs, db);
    let mut best = 0;
    for (i, (_, s)) in scored.iter().enumerate().skip(1) {
        let (_, b) = &scored[best];
        if s.value > b.value
            || (s.value == b.value && s.matched_sequences > b.matched_sequences)
        {
            best = i;
        }
    }
    let (winner, best_score) = scored[best];
    if best_score.value == 0.0 && best_score.matched_sequences == 0 {
        if let Some(fp) = db.fingerprints.iter().find(|fp| fp.is_empty()) {
            return fp.device_type;
        }
    }
    winner
}

/// One classified device-day, with the winning score attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DevicePrediction {
    pub device_id: String,
    pub day: i64,
    pub predicted: DeviceType,
    pub score: f64,
    pub matched_sequences: usize,
}

/// Classifies every (device, day) that carries at least one packet in the
/// labeled trace. Each day is one independent sample.
pub fn classify_trace(
    labeled: &[(PacketRecord, InteractionLabel)],
    roles: &RoleMap,
    db: &FingerprintDb,
    window: f64,
    tz_offset_secs: i64,
) -> Vec<DevicePrediction> {
    let mut day_buckets: BTreeMap<i64, Vec<(PacketRecord, InteractionLabel)>> = BTreeMap::new();
    let mut device_days: BTreeSet<(String, i64)> = BTreeSet::new();
    for (record, label) in labeled {
        let day = day_of(record.timestamp, tz_offset_secs);
        day_buckets
            .entry(day)
            .or_default()
            .push((record.clone(), *label));
        for id in [&record.src_id, &record.dst_id] {
            if roles.is_device(id) {
                device_days.insert((id.clone(), day));
            }
        }
    }

    device_days
        .into_iter()
        .map(|(device_id, day)| {
            let bucket = &day_buckets[&day];
            let obs = build_observation(bucket, roles, &device_id, day, window);
            let predicted = classify_device(&obs, db);
            let best = score_all(&obs, db)
                .into_iter()
                .find(|(t, _)| *t == predicted)
                .map(|(_, s)| s)
                .unwrap_or(Score {
                    value: 0.0,
                    matched_sequences: 0,
                });
            DevicePrediction {
                device_id,
                day,
                predicted,
                score: best.value,
                matched_sequences: best.matched_sequences,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionLabel as L;

    fn obs(lengths: &[u32], sequences: &[(u32, u32)]) -> Observation {
        Observation {
            device_id: "dev".into(),
            day: 0,
            ira1_lengths: lengths.iter().copied().collect(),
            sequences: sequences
                .iter()
                .map(|&(a, b)| LengthSequence::new(a, b))
                .collect(),
        }
    }

    fn db() -> FingerprintDb {
        FingerprintDb::builtin()
    }

    fn fp(db: &FingerprintDb, t: DeviceType) -> &Fingerprint {
        db.fingerprints
            .iter()
            .find(|f| f.device_type == t)
            .unwrap()
    }

    #[test]
    fn lighting_two_classes_scores_two_point_four() {
        let s = score(&obs(&[59, 75], &[]), fp(&db(), DeviceType::Lighting));
        assert_eq!(s.value, 2.0 + 2.0 / 5.0);
    }

    #[test]
    fn plug_single_class_scores_two() {
        let s = score(&obs(&[59], &[]), fp(&db(), DeviceType::Plug));
        assert_eq!(s.value, 2.0);
    }

    #[test]
    fn sensor_always_scores_zero() {
        let s = score(&obs(&[59, 64, 75], &[(75, 59)]), fp(&db(), DeviceType::Sensor));
        assert_eq!(s.value, 0.0);
    }

    #[test]
    fn length_class_counts_once() {
        let lighting = db();
        let lighting = fp(&lighting, DeviceType::Lighting);
        assert_eq!(score(&obs(&[70], &[]), lighting).value, 1.2);
        assert_eq!(score(&obs(&[71], &[]), lighting).value, 1.2);
        assert_eq!(score(&obs(&[70, 71], &[]), lighting).value, 1.2);
    }

    #[test]
    fn classify_prefers_richer_lighting_evidence() {
        assert_eq!(classify_device(&obs(&[59, 75], &[]), &db()), DeviceType::Lighting);
    }

    #[test]
    fn lone_on_off_length_confuses_toward_plug() {
        assert_eq!(classify_device(&obs(&[59], &[]), &db()), DeviceType::Plug);
    }

    #[test]
    fn empty_observation_is_a_sensor() {
        assert_eq!(classify_device(&obs(&[], &[]), &db()), DeviceType::Sensor);
    }

    #[test]
    fn sequences_break_value_ties() {
        // {59, 64} scores 2.0 for both lock and plug; the lock sequence decides.
        let tied = obs(&[59, 64], &[(39, 64)]);
        assert_eq!(classify_device(&tied, &db()), DeviceType::Lock);
        // Without sequences the tie falls to database order (lock first).
        assert_eq!(classify_device(&obs(&[59, 64], &[]), &db()), DeviceType::Lock);
    }

    #[test]
    fn irrelevant_lengths_change_nothing() {
        let base = obs(&[59, 75], &[]);
        let noisy = obs(&[59, 75, 200, 201], &[]);
        for f in &db().fingerprints {
            assert_eq!(score(&base, f).value, score(&noisy, f).value);
        }
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

    fn roles() -> RoleMap {
        RoleMap::new(
            ["ctrl".to_string()].into(),
            [("dev".to_string(), "dev".to_string())].into(),
        )
        .unwrap()
    }

    #[test]
    fn observation_from_labeled_day() {
        let labeled = vec![
            (pkt("ctrl", "dev", 0.0, 75), L::Ira1),
            (pkt("dev", "ctrl", 0.1, 70), L::Ira2),
            (pkt("ctrl", "dev", 0.2, 34), L::End),
            (pkt("ctrl", "dev", 0.3, 59), L::Ira1),
        ];
        let o = build_observation(&labeled, &roles(), "dev", 0, 0.5);
        assert_eq!(o.ira1_lengths, [59, 75].into());
        assert_eq!(o.sequences, vec![LengthSequence::new(75, 59)]);
    }

    #[test]
    fn lock_timed_invoke_observation() {
        let labeled = vec![
            (pkt("ctrl", "dev", 0.0, 39), L::Tra),
            (pkt("dev", "ctrl", 0.1, 42), L::Sra2),
            (pkt("ctrl", "dev", 0.2, 64), L::Ira1),
        ];
        let o = build_observation(&labeled, &roles(), "dev", 0, 0.5);
        assert_eq!(o.ira1_lengths, [64].into());
        assert_eq!(o.sequences, vec![LengthSequence::new(39, 64)]);
    }

    #[test]
    fn invoke_silent_day_yields_empty_observation() {
        let labeled = vec![(pkt("dev", "ctrl", 0.0, 47), L::NonEmptyRDA)];
        let o = build_observation(&labeled, &roles(), "dev", 0, 0.5);
        assert!(o.ira1_lengths.is_empty());
        assert!(o.sequences.is_empty());
    }

    #[test]
    fn database_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fp.json");
        let original = FingerprintDb::builtin();
        original.to_file(&path).unwrap();
        let back = FingerprintDb::from_file(&path).unwrap();
        assert_eq!(back, original);

        let mut bad = FingerprintDb::builtin();
        bad.fingerprints[3].ira1_lengths.push([1].into());
        assert!(bad.validate().is_err());
    }

    #[test]
    fn permuting_database_changes_nothing_without_ties() {
        let mut reversed = db();
        reversed.fingerprints.reverse();
        let o = obs(&[59, 75], &[]);
        assert_eq!(classify_device(&o, &db()), classify_device(&o, &reversed));
    }
}
