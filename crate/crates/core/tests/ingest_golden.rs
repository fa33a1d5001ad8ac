//! Golden-file tests for capture ingestion: hand-encoded containers must
//! parse to exactly the expected records, octet for octet.

mod common;

use common::*;
use matterlens_core::ingest::{parse_capture, LinkType};
use matterlens_core::model::PacketRecord;

fn write_temp(bytes: &[u8]) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("capture.pcap");
    std::fs::write(&path, bytes).unwrap();
    (dir, path)
}

#[test]
fn golden_classic_pcap_three_matter_two_tcp() {
    let header_a = matter_header_with_source(0x1234, 0x1234_5678, 0x0807_0605_0403_0201);
    let header_b = matter_header_plain(0x00, 0xaaaa, 0x01, 5);
    let mut payload_c = matter_header_plain(0x01, 0x0001, 0x00, 7);
    payload_c.extend_from_slice(&0x1111_2222_3333_4444u64.to_le_bytes());
    payload_c.extend_from_slice(&[0xee; 10]);

    let frames = vec![
        (
            1,
            0,
            eth_frame(MAC1, MAC2, &udp_ipv6(ipv6(1), ipv6(2), 5540, 5540, &header_a)),
        ),
        (1, 500_000, eth_frame(MAC2, MAC1, &tcp_ipv6(ipv6(2), ipv6(1)))),
        (
            2,
            0,
            eth_frame(MAC2, MAC1, &udp_ipv6(ipv6(2), ipv6(1), 5541, 5540, &header_b)),
        ),
        (2, 250_000, eth_frame(MAC1, MAC2, &tcp_ipv6(ipv6(1), ipv6(2)))),
        (
            3,
            125_000,
            eth_frame(MAC1, MAC3, &udp_ipv6(ipv6(1), ipv6(3), 5540, 11000, &payload_c)),
        ),
    ];
    let (_dir, path) = write_temp(&classic_pcap(1, &frames));

    let parsed = parse_capture(&path, LinkType::Ethernet).unwrap();
    assert_eq!(parsed.skipped, 2);

    let expected = vec![
        PacketRecord {
            timestamp: 1.0,
            src_id: "fe80::1|02:00:00:00:00:01".into(),
            dst_id: "fe80::2|02:00:00:00:00:02".into(),
            src_port: 5540,
            dst_port: 5540,
            payload_len: 16,
            message_flags: 0x04,
            security_flags: 0x00,
            session_id: 0x1234,
            message_counter: 0x1234_5678,
            payload: Some(header_a),
        },
        PacketRecord {
            timestamp: 2.0,
            src_id: "fe80::2|02:00:00:00:00:02".into(),
            dst_id: "fe80::1|02:00:00:00:00:01".into(),
            src_port: 5541,
            dst_port: 5540,
            payload_len: 8,
            message_flags: 0x00,
            security_flags: 0x01,
            session_id: 0xaaaa,
            message_counter: 5,
            payload: Some(header_b),
        },
        PacketRecord {
            timestamp: 3.125,
            src_id: "fe80::1|02:00:00:00:00:01".into(),
            dst_id: "fe80::3|02:00:00:00:00:03".into(),
            src_port: 5540,
            dst_port: 11000,
            payload_len: 26,
            message_flags: 0x01,
            security_flags: 0x00,
            session_id: 0x0001,
            message_counter: 7,
            payload: Some(payload_c),
        },
    ];
    assert_eq!(parsed.records, expected);
}

#[test]
fn golden_pcapng_raw_ipv6() {
    let header = matter_header_plain(0x00, 0x0042, 0x00, 99);
    let frames = vec![
        (
            1_000_000u64,
            udp_ipv6(ipv6(0x10), ipv6(0x20), 5540, 5540, &header),
        ),
        (1_750_000, tcp_ipv6(ipv6(0x20), ipv6(0x10))),
    ];
    let (_dir, path) = write_temp(&pcapng(101, &frames));

    let parsed = parse_capture(&path, LinkType::RawIpv6).unwrap();
    assert_eq!(parsed.skipped, 1);
    assert_eq!(parsed.records.len(), 1);
    let record = &parsed.records[0];
    assert_eq!(record.timestamp, 1.0);
    assert_eq!(record.src_id, "fe80::10");
    assert_eq!(record.dst_id, "fe80::20");
    assert_eq!(record.message_counter, 99);
    assert_eq!(record.payload, Some(header));
}

#[test]
fn empty_capture_gives_empty_list() {
    let (_dir, path) = write_temp(&classic_pcap(1, &[]));
    let parsed = parse_capture(&path, LinkType::Ethernet).unwrap();
    assert!(parsed.records.is_empty());
    assert_eq!(parsed.skipped, 0);
}

#[test]
fn short_datagram_is_skipped() {
    let frames = vec![
        (
            1,
            0,
            eth_frame(MAC1, MAC2, &udp_ipv6(ipv6(1), ipv6(2), 5540, 5540, &[0u8; 7])),
        ),
        (
            2,
            0,
            eth_frame(
                MAC1,
                MAC2,
                &udp_ipv6(ipv6(1), ipv6(2), 5540, 5540, &matter_header_plain(0, 1, 0, 1)),
            ),
        ),
    ];
    let (_dir, path) = write_temp(&classic_pcap(1, &frames));
    let parsed = parse_capture(&path, LinkType::Ethernet).unwrap();
    assert_eq!(parsed.records.len(), 1);
    assert_eq!(parsed.skipped, 1);
}

#[test]
fn unreadable_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.pcap");
    assert!(parse_capture(&missing, LinkType::Ethernet).is_err());
    let garbage = dir.path().join("garbage.pcap");
    std::fs::write(&garbage, b"not a capture at all").unwrap();
    assert!(parse_capture(&garbage, LinkType::Ethernet).is_err());
}

#[test]
fn timestamps_are_non_decreasing_even_for_unordered_frames() {
    let header = matter_header_plain(0, 1, 0, 1);
    let frames = vec![
        (
            5,
            0,
            eth_frame(MAC1, MAC2, &udp_ipv6(ipv6(1), ipv6(2), 1, 2, &header)),
        ),
        (
            1,
            0,
            eth_frame(MAC1, MAC2, &udp_ipv6(ipv6(1), ipv6(2), 1, 2, &matter_header_plain(0, 1, 0, 2))),
        ),
    ];
    let (_dir, path) = write_temp(&classic_pcap(1, &frames));
    let parsed = parse_capture(&path, LinkType::Ethernet).unwrap();
    assert!(parsed
        .records
        .windows(2)
        .all(|w| w[0].timestamp <= w[1].timestamp));
}
