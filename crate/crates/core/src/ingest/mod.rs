//! Capture-file and trace-file ingestion.
//!
//! Turns PCAP/PCAPNG captures into [`PacketRecord`] streams, deduplicates
//! retransmissions, and round-trips records through the line-delimited JSON
//! trace format used between pipeline stages.

mod matter;
mod net;
mod pcap;

use std::collections::HashMap;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use thiserror::Error;

use crate::model::PacketRecord;

pub use matter::{
    parse_matter_header, DestinationId, HeaderError, HeaderParse, HeaderWarning,
    MatterHeader, MIN_HEADER_LEN,
};
pub use net::{decapsulate, endpoint_id, LinkType, UdpDatagram};
pub use pcap::{read_frames, CaptureError, RawFrame};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("unreadable capture {path}: {reason}")]
    UnreadableFile { path: String, reason: String },
    #[error("trace schema violation at line {line}: {message}")]
    SchemaViolation { line: usize, message: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Records recovered from a capture, plus how many frames were skipped
/// because they did not carry a parseable message.
#[derive(Debug, Clone, Default)]
pub struct ParsedCapture {
    pub records: Vec<PacketRecord>,
    pub skipped: u64,
}

/// Reports the link type the capture file itself declares, when it is one
/// we support. PCAPNG files may declare several; the first interface wins.
pub fn detect_link_type(path: &Path) -> Result<Option<LinkType>, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::UnreadableFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let frames = read_frames(&bytes).map_err(|e| IngestError::UnreadableFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    Ok(frames.first().and_then(|f| LinkType::from_dlt(f.dlt)))
}

/// Parses a capture into one record per UDP-over-IPv6 datagram whose payload
/// decodes as a message header. Everything else is skipped and counted.
/// Output is ordered by capture timestamp.
pub fn parse_capture(path: &Path, link: LinkType) -> Result<ParsedCapture, IngestError> {
    let bytes = std::fs::read(path).map_err(|e| IngestError::UnreadableFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let frames = read_frames(&bytes).map_err(|e| IngestError::UnreadableFile {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;

    let mut out = ParsedCapture::default();
    for frame in &frames {
        let Some(datagram) = decapsulate(&frame.data, link) else {
            out.skipped += 1;
            continue;
        };
        let Ok(parsed) = parse_matter_header(datagram.payload) else {
            out.skipped += 1;
            continue;
        };
        out.records.push(PacketRecord {
            timestamp: frame.timestamp,
            src_id: datagram.src_endpoint_id(),
            dst_id: datagram.dst_endpoint_id(),
            src_port: datagram.src_port,
            dst_port: datagram.dst_port,
            payload_len: datagram.payload.len() as u32,
            message_flags: parsed.header.message_flags,
            security_flags: parsed.header.security_flags,
            session_id: parsed.header.session_id,
            message_counter: parsed.header.message_counter,
            payload: Some(datagram.payload.to_vec()),
        });
    }
    out.records
        .sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(out)
}

/// Drops retransmitted packets: within each (src, dst, message counter)
/// group only the copy with the greatest timestamp survives. Survivor order
/// follows timestamps.
pub fn dedup_retransmissions(records: Vec<PacketRecord>) -> Vec<PacketRecord> {
    let mut best: HashMap<(String, String, u32), usize> = HashMap::new();
    for (idx, r) in records.iter().enumerate() {
        let key = (r.src_id.clone(), r.dst_id.clone(), r.message_counter);
        match best.get(&key) {
            // Later index wins on equal timestamps, so ties keep the newest copy.
            Some(&prev) if records[prev].timestamp > r.timestamp => {}
            _ => {
                best.insert(key, idx);
            }
        }
    }
    let mut keep: Vec<bool> = vec![false; records.len()];
    for &idx in best.values() {
        keep[idx] = true;
    }
    let mut survivors: Vec<PacketRecord> = records
        .into_iter()
        .enumerate()
        .filter_map(|(idx, r)| keep[idx].then_some(r))
        .collect();
    survivors.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    survivors
}

/// Recalibration knob for captures whose transport length bookkeeping
/// differs: shifts every `payload_len` by `offset`, clamping at zero. Stored
/// payload bytes are dropped whenever the length no longer matches them.
pub fn apply_len_offset(records: &mut [PacketRecord], offset: i64) {
    if offset == 0 {
        return;
    }
    for r in records.iter_mut() {
        r.payload_len = (i64::from(r.payload_len) + offset).max(0) as u32;
        if r.payload.as_ref().is_some_and(|p| p.len() as u32 != r.payload_len) {
            r.payload = None;
        }
    }
}

/// Reads a line-delimited JSON trace. Every non-blank line must be a valid
/// record; violations report the 1-based line number.
pub fn read_trace(path: &Path) -> Result<Vec<PacketRecord>, IngestError> {
    let file = std::fs::File::open(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PacketRecord =
            serde_json::from_str(&line).map_err(|e| IngestError::SchemaViolation {
                line: i + 1,
                message: e.to_string(),
            })?;
        record
            .validate()
            .map_err(|e| IngestError::SchemaViolation {
                line: i + 1,
                message: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

/// Writes records as line-delimited JSON, one record per line.
pub fn write_trace(records: &[PacketRecord], path: &Path) -> Result<(), IngestError> {
    let file = std::fs::File::create(path).map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut writer = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(writer, "{line}").map_err(|e| IngestError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    writer.flush().map_err(|e| IngestError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(src: &str, dst: &str, counter: u32, ts: f64) -> PacketRecord {
        PacketRecord {
            timestamp: ts,
            src_id: src.into(),
            dst_id: dst.into(),
            src_port: 5540,
            dst_port: 5540,
            payload_len: 16,
            message_flags: 0,
            security_flags: 0,
            session_id: 1,
            message_counter: counter,
            payload: None,
        }
    }

    #[test]
    fn dedup_keeps_latest_copy() {
        let records = vec![rec("a", "b", 7, 1.0), rec("a", "b", 7, 1.3)];
        let out = dedup_retransmissions(records);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].timestamp, 1.3);
    }

    #[test]
    fn dedup_is_identity_without_duplicates() {
        let records = vec![rec("a", "b", 1, 1.0), rec("a", "b", 2, 2.0)];
        let out = dedup_retransmissions(records.clone());
        assert_eq!(out, records);
    }

    #[test]
    fn dedup_interleaved_groups() {
        let records = vec![
            rec("a", "b", 5, 1.0),
            rec("a", "b", 9, 1.1),
            rec("a", "b", 5, 1.2),
            rec("a", "b", 10, 1.3),
            rec("a", "b", 5, 1.4),
        ];
        let out = dedup_retransmissions(records);
        assert_eq!(out.len(), 3);
        let counters: Vec<u32> = out.iter().map(|r| r.message_counter).collect();
        assert_eq!(counters, vec![9, 10, 5]);
        assert_eq!(out[2].timestamp, 1.4);
    }

    #[test]
    fn dedup_distinguishes_directions() {
        let records = vec![rec("a", "b", 7, 1.0), rec("b", "a", 7, 1.1)];
        assert_eq!(dedup_retransmissions(records).len(), 2);
    }

    #[test]
    fn trace_round_trip_with_and_without_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        let mut with_payload = rec("a", "b", 1, 0.5);
        with_payload.payload = Some(vec![0xde, 0xad]);
        with_payload.payload_len = 2;
        let records = vec![with_payload, rec("b", "a", 2, 0.7)];
        write_trace(&records, &path).unwrap();
        let back = read_trace(&path).unwrap();
        assert_eq!(back, records);
    }

    #[test]
    fn missing_field_is_schema_violation_with_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        let ok = serde_json::to_string(&rec("a", "b", 1, 0.1)).unwrap();
        let mut bad: serde_json::Value = serde_json::from_str(&ok).unwrap();
        bad.as_object_mut().unwrap().remove("payload_len");
        std::fs::write(&path, format!("{ok}\n{bad}\n")).unwrap();
        match read_trace(&path) {
            Err(IngestError::SchemaViolation { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected schema violation, got {other:?}"),
        }
    }

    #[test]
    fn len_offset_clamps_and_drops_stale_payload() {
        let mut records = vec![rec("a", "b", 1, 0.0)];
        records[0].payload = Some(vec![0; 16]);
        apply_len_offset(&mut records, -20);
        assert_eq!(records[0].payload_len, 0);
        assert!(records[0].payload.is_none());
    }
}
