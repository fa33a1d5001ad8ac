//! Frame decapsulation down to UDP-over-IPv6 datagrams.
//!
//! Deliberately narrow: Ethernet (with optional VLAN tags) or raw IPv6
//! frames, the common IPv6 extension headers, and UDP. Anything else is
//! reported as "not a datagram" and counted as skipped upstream.

use std::net::Ipv6Addr;

use serde::{Deserialize, Serialize};

const ETHERTYPE_IPV6: u16 = 0x86dd;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88a8;
const NEXT_HEADER_UDP: u8 = 17;

/// How raw frames in a capture are framed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkType {
    Ethernet,
    RawIpv6,
}

impl LinkType {
    /// Maps a capture-file link-layer code to a supported link type.
    pub fn from_dlt(dlt: u32) -> Option<LinkType> {
        match dlt {
            1 => Some(LinkType::Ethernet),
            // DLT_RAW and DLT_IPV6 both carry bare IP packets.
            101 | 229 => Some(LinkType::RawIpv6),
            _ => None,
        }
    }
}

/// A UDP datagram extracted from one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct UdpDatagram<'a> {
    pub src_ip: Ipv6Addr,
    pub dst_ip: Ipv6Addr,
    pub src_mac: Option<[u8; 6]>,
    pub dst_mac: Option<[u8; 6]>,
    pub src_port: u16,
    pub dst_port: u16,
    pub payload: &'a [u8],
}

impl UdpDatagram<'_> {
    pub fn src_endpoint_id(&self) -> String {
        endpoint_id(self.src_ip, self.src_mac)
    }

    pub fn dst_endpoint_id(&self) -> String {
        endpoint_id(self.dst_ip, self.dst_mac)
    }
}

/// Canonical lowercase endpoint identifier for a (network, link) address
/// pair: `<ipv6>|<mac>`, or `<ipv6>` alone when no link address exists.
pub fn endpoint_id(ip: Ipv6Addr, mac: Option<[u8; 6]>) -> String {
    match mac {
        Some(m) => format!(
            "{}|{:02x}:{:02x}:{:02x}:{:02x}:{:02x}:{:02x}",
            ip, m[0], m[1], m[2], m[3], m[4], m[5]
        ),
        None => ip.to_string(),
    }
}

/// Extracts a UDP-over-IPv6 datagram from a raw frame, or `None` when the
/// frame carries anything else (IPv4, TCP, fragments, truncations, ...).
pub fn decapsulate(frame: &[u8], link: LinkType) -> Option<UdpDatagram<'_>> {
    match link {
        LinkType::Ethernet => {
            let mut offset = 14;
            if frame.len() < offset {
                return None;
            }
            let dst_mac: [u8; 6] = frame[0..6].try_into().unwrap();
            let src_mac: [u8; 6] = frame[6..12].try_into().unwrap();
            let mut ethertype = u16::from_be_bytes([frame[12], frame[13]]);
            // Peel at most two VLAN tags.
            for _ in 0..2 {
                if ethertype != ETHERTYPE_VLAN && ethertype != ETHERTYPE_QINQ {
                    break;
                }
                if frame.len() < offset + 4 {
                    return None;
                }
                ethertype = u16::from_be_bytes([frame[offset + 2], frame[offset + 3]]);
                offset += 4;
            }
            if ethertype != ETHERTYPE_IPV6 {
                return None;
            }
            parse_ipv6(&frame[offset..], Some(src_mac), Some(dst_mac))
        }
        LinkType::RawIpv6 => parse_ipv6(frame, None, None),
    }
}

fn parse_ipv6<'a>(
    packet: &'a [u8],
    src_mac: Option<[u8; 6]>,
    dst_mac: Option<[u8; 6]>,
) -> Option<UdpDatagram<'a>> {
    if packet.len() < 40 || packet[0] >> 4 != 6 {
        return None;
    }
    let payload_len = u16::from_be_bytes([packet[4], packet[5]]) as usize;
    let mut next_header = packet[6];
    let src_ip = Ipv6Addr::from(<[u8; 16]>::try_from(&packet[8..24]).unwrap());
    let dst_ip = Ipv6Addr::from(<[u8; 16]>::try_from(&packet[24..40]).unwrap());

    // Trim Ethernet padding: the IPv6 payload ends where the header says.
    let body = packet.get(40..40 + payload_len)?;

    let mut offset = 0;
    loop {
        match next_header {
            NEXT_HEADER_UDP => break,
            // Hop-by-hop, routing, destination options: (next, len-in-8s) prefix.
            0 | 43 | 60 => {
                let ext = body.get(offset..offset + 2)?;
                next_header = ext[0];
                offset += (ext[1] as usize + 1) * 8;
                if offset > body.len() {
                    return None;
                }
            }
            // Fragments (and everything else) are not reassembled.
            _ => return None,
        }
    }

    let udp = body.get(offset..)?;
    if udp.len() < 8 {
        return None;
    }
    let src_port = u16::from_be_bytes([udp[0], udp[1]]);
    let dst_port = u16::from_be_bytes([udp[2], udp[3]]);
    let udp_len = u16::from_be_bytes([udp[4], udp[5]]) as usize;
    if udp_len < 8 || udp_len > udp.len() {
        return None;
    }
    Some(UdpDatagram {
        src_ip,
        dst_ip,
        src_mac,
        dst_mac,
        src_port,
        dst_port,
        payload: &udp[8..udp_len],
    })
}
