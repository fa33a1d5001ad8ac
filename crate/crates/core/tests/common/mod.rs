//! Hand-encoded capture fixtures shared by the integration tests. Every
//! container and frame is built octet by octet so the expected parse results
//! can be frozen exactly.

use std::net::Ipv6Addr;

pub const MAC1: [u8; 6] = [0x02, 0, 0, 0, 0, 0x01];
pub const MAC2: [u8; 6] = [0x02, 0, 0, 0, 0, 0x02];
pub const MAC3: [u8; 6] = [0x02, 0, 0, 0, 0, 0x03];

pub fn ipv6(last: u16) -> Ipv6Addr {
    Ipv6Addr::new(0xfe80, 0, 0, 0, 0, 0, 0, last)
}

/// IPv6 packet carrying a UDP datagram.
pub fn udp_ipv6(
    src: Ipv6Addr,
    dst: Ipv6Addr,
    src_port: u16,
    dst_port: u16,
    payload: &[u8],
) -> Vec<u8> {
    let udp_len = (payload.len() + 8) as u16;
    let mut out = Vec::with_capacity(40 + udp_len as usize);
    out.push(0x60);
    out.extend_from_slice(&[0, 0, 0]);
    out.extend_from_slice(&udp_len.to_be_bytes());
    out.push(17); // UDP
    out.push(64);
    out.extend_from_slice(&src.octets());
    out.extend_from_slice(&dst.octets());
    out.extend_from_slice(&src_port.to_be_bytes());
    out.extend_from_slice(&dst_port.to_be_bytes());
    out.extend_from_slice(&udp_len.to_be_bytes());
    out.extend_from_slice(&[0, 0]); // checksum unused
    out.extend_from_slice(payload);
    out
}

/// IPv6 packet carrying a minimal TCP segment (skipped by ingest).
pub fn tcp_ipv6(src: Ipv6Addr, dst: Ipv6Addr) -> Vec<u8> {
    let segment = [0u8; 20];
    let mut out = Vec::new();
    out.push(0x60);
    out.extend_from_slice(&[0, 0, 0]);
    out.extend_from_slice(&(segment.len() as u16).to_be_bytes());
    out.push(6); // TCP
    out.push(64);
    out.extend_from_slice(&src.octets());
    out.extend_from_slice(&dst.octets());
    out.extend_from_slice(&segment);
    out
}

pub fn eth_frame(src_mac: [u8; 6], dst_mac: [u8; 6], packet: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(14 + packet.len());
    out.extend_from_slice(&dst_mac);
    out.extend_from_slice(&src_mac);
    out.extend_from_slice(&0x86ddu16.to_be_bytes());
    out.extend_from_slice(packet);
    out
}

/// Classic little-endian microsecond PCAP container.
pub fn classic_pcap(dlt: u32, frames: &[(u32, u32, Vec<u8>)]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&[0xd4, 0xc3, 0xb2, 0xa1]);
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&4u16.to_le_bytes());
    out.extend_from_slice(&0u32.to_le_bytes()); // thiszone
    out.extend_from_slice(&0u32.to_le_bytes()); // sigfigs
    out.extend_from_slice(&65535u32.to_le_bytes());
    out.extend_from_slice(&dlt.to_le_bytes());
    for (sec, usec, data) in frames {
        out.extend_from_slice(&sec.to_le_bytes());
        out.extend_from_slice(&usec.to_le_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        out.extend_from_slice(data);
    }
    out
}

fn pcapng_block(block_type: u32, body: &[u8]) -> Vec<u8> {
    let padded = body.len().div_ceil(4) * 4;
    let total = (padded + 12) as u32;
    let mut out = Vec::new();
    out.extend_from_slice(&block_type.to_le_bytes());
    out.extend_from_slice(&total.to_le_bytes());
    out.extend_from_slice(body);
    out.resize(out.len() + (padded - body.len()), 0);
    out.extend_from_slice(&total.to_le_bytes());
    out
}

/// PCAPNG container: section header, one interface (microsecond timestamps),
/// one enhanced packet block per frame.
pub fn pcapng(dlt: u16, frames: &[(u64, Vec<u8>)]) -> Vec<u8> {
    let mut out = Vec::new();
    let mut shb = Vec::new();
    shb.extend_from_slice(&0x1a2b3c4du32.to_le_bytes());
    shb.extend_from_slice(&1u16.to_le_bytes());
    shb.extend_from_slice(&0u16.to_le_bytes());
    shb.extend_from_slice(&u64::MAX.to_le_bytes()); // section length unknown
    out.extend_from_slice(&pcapng_block(0x0a0d0d0a, &shb));

    let mut idb = Vec::new();
    idb.extend_from_slice(&dlt.to_le_bytes());
    idb.extend_from_slice(&0u16.to_le_bytes());
    idb.extend_from_slice(&0u32.to_le_bytes()); // snaplen unlimited
    out.extend_from_slice(&pcapng_block(1, &idb));

    for (ts_usec, data) in frames {
        let mut epb = Vec::new();
        epb.extend_from_slice(&0u32.to_le_bytes());
        epb.extend_from_slice(&((ts_usec >> 32) as u32).to_le_bytes());
        epb.extend_from_slice(&((ts_usec & 0xffff_ffff) as u32).to_le_bytes());
        epb.extend_from_slice(&(data.len() as u32).to_le_bytes());
        epb.extend_from_slice(&(data.len() as u32).to_le_bytes());
        epb.extend_from_slice(data);
        out.extend_from_slice(&pcapng_block(6, &epb));
    }
    out
}

/// Matter header with the source-node-id flag set: 16 octets.
pub fn matter_header_with_source(session: u16, counter: u32, node: u64) -> Vec<u8> {
    let mut out = vec![0x04];
    out.extend_from_slice(&session.to_le_bytes());
    out.push(0x00);
    out.extend_from_slice(&counter.to_le_bytes());
    out.extend_from_slice(&node.to_le_bytes());
    out
}

/// Minimal 8-octet Matter header.
pub fn matter_header_plain(flags: u8, session: u16, security: u8, counter: u32) -> Vec<u8> {
    let mut out = vec![flags];
    out.extend_from_slice(&session.to_le_bytes());
    out.push(security);
    out.extend_from_slice(&counter.to_le_bytes());
    out
}
