//! Minimal readers for classic PCAP and PCAPNG capture containers.
//!
//! Scope is intentionally small: both byte orders, microsecond and
//! nanosecond classic timestamps, and the PCAPNG block types needed to
//! recover timestamped frames (section, interface description, enhanced and
//! simple packet blocks). Unknown block types are skipped.

use thiserror::Error;

const PCAP_MAGIC_USEC: [u8; 4] = [0xa1, 0xb2, 0xc3, 0xd4];
const PCAP_MAGIC_USEC_SWAPPED: [u8; 4] = [0xd4, 0xc3, 0xb2, 0xa1];
const PCAP_MAGIC_NSEC: [u8; 4] = [0xa1, 0xb2, 0x3c, 0x4d];
const PCAP_MAGIC_NSEC_SWAPPED: [u8; 4] = [0x4d, 0x3c, 0xb2, 0xa1];

const PCAPNG_SHB: u32 = 0x0a0d_0d0a;
const PCAPNG_BYTE_ORDER: u32 = 0x1a2b_3c4d;
const PCAPNG_IDB: u32 = 1;
const PCAPNG_SPB: u32 = 3;
const PCAPNG_EPB: u32 = 6;
const OPT_END: u16 = 0;
const OPT_IF_TSRESOL: u16 = 9;

#[derive(Debug, Error)]
pub enum CaptureError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed capture: {0}")]
    Malformed(String),
}

/// One captured frame, plus the link-layer type the file declared for it.
#[derive(Debug, Clone)]
pub struct RawFrame {
    pub timestamp: f64,
    pub data: Vec<u8>,
    pub dlt: u32,
}

/// Reads every frame of a classic PCAP or PCAPNG file.
pub fn read_frames(bytes: &[u8]) -> Result<Vec<RawFrame>, CaptureError> {
    if bytes.len() < 4 {
        return Err(CaptureError::Malformed("file shorter than any magic".into()));
    }
    let magic: [u8; 4] = bytes[0..4].try_into().unwrap();
    match magic {
        PCAP_MAGIC_USEC => read_classic(bytes, false, 1e-6),
        PCAP_MAGIC_USEC_SWAPPED => read_classic(bytes, true, 1e-6),
        PCAP_MAGIC_NSEC => read_classic(bytes, false, 1e-9),
        PCAP_MAGIC_NSEC_SWAPPED => read_classic(bytes, true, 1e-9),
        _ if u32::from_be_bytes(magic) == PCAPNG_SHB
            || u32::from_le_bytes(magic) == PCAPNG_SHB =>
        {
            read_pcapng(bytes)
        }
        _ => Err(CaptureError::Malformed(format!(
            "unrecognized magic {magic:02x?}"
        ))),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    little_endian: bool,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CaptureError> {
        let end = self.pos.checked_add(n).ok_or_else(|| {
            CaptureError::Malformed("length overflows file".into())
        })?;
        if end > self.bytes.len() {
            return Err(CaptureError::Malformed(format!(
                "truncated: wanted {n} octets at offset {}",
                self.pos
            )));
        }
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u16(&mut self) -> Result<u16, CaptureError> {
        let b: [u8; 2] = self.take(2)?.try_into().unwrap();
        Ok(if self.little_endian {
            u16::from_le_bytes(b)
        } else {
            u16::from_be_bytes(b)
        })
    }

    fn u32(&mut self) -> Result<u32, CaptureError> {
        let b: [u8; 4] = self.take(4)?.try_into().unwrap();
        Ok(if self.little_endian {
            u32::from_le_bytes(b)
        } else {
            u32::from_be_bytes(b)
        })
    }

    fn done(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn read_classic(
    bytes: &[u8],
    little_endian: bool,
    tick: f64,
) -> Result<Vec<RawFrame>, CaptureError> {
    let mut cur = Cursor {
        bytes,
        pos: 4,
        little_endian,
    };
    let _version_major = cur.u16()?;
    let _version_minor = cur.u16()?;
    let _thiszone = cur.u32()?;
    let _sigfigs = cur.u32()?;
    let _snaplen = cur.u32()?;
    let dlt = cur.u32()?;

    let mut frames = Vec::new();
    while !cur.done() {
        if cur.remaining() < 16 {
            return Err(CaptureError::Malformed("truncated packet header".into()));
        }
        let ts_sec = cur.u32()? as f64;
        let ts_frac = cur.u32()? as f64;
        let incl_len = cur.u32()? as usize;
        let _orig_len = cur.u32()?;
        let data = cur.take(incl_len)?.to_vec();
        frames.push(RawFrame {
            timestamp: ts_sec + ts_frac * tick,
            data,
            dlt,
        });
    }
    Ok(frames)
}

#[derive(Clone, Copy)]
struct Interface {
    dlt: u32,
    /// Seconds per timestamp tick.
    tick: f64,
}

fn read_pcapng(bytes: &[u8]) -> Result<Vec<RawFrame>, CaptureError> {
    let mut pos = 0usize;
    let mut little_endian = true;
    let mut interfaces: Vec<Interface> = Vec::new();
    let mut frames = Vec::new();

    while pos < bytes.len() {
        if bytes.len() - pos < 12 {
            return Err(CaptureError::Malformed("truncated block header".into()));
        }
        let raw_type: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();

        // A section header resets endianness; sniff it from the byte-order
        // magic before reading the block length.
        if u32::from_le_bytes(raw_type) == PCAPNG_SHB {
            let bom: [u8; 4] = bytes
                .get(pos + 8..pos + 12)
                .ok_or_else(|| CaptureError::Malformed("truncated section header".into()))?
                .try_into()
                .unwrap();
            little_endian = match (u32::from_le_bytes(bom), u32::from_be_bytes(bom)) {
                (PCAPNG_BYTE_ORDER, _) => true,
                (_, PCAPNG_BYTE_ORDER) => false,
                _ => {
                    return Err(CaptureError::Malformed(
                        "bad byte-order magic in section header".into(),
                    ))
                }
            };
            interfaces.clear();
        }

        let read_u32 = |b: &[u8]| -> u32 {
            let arr: [u8; 4] = b.try_into().unwrap();
            if little_endian {
                u32::from_le_bytes(arr)
            } else {
                u32::from_be_bytes(arr)
            }
        };

        let block_type = read_u32(&bytes[pos..pos + 4]);
        let total_len = read_u32(&bytes[pos + 4..pos + 8]) as usize;
        if total_len < 12 || total_len % 4 != 0 || pos + total_len > bytes.len() {
            return Err(CaptureError::Malformed(format!(
                "bad block length {total_len} at offset {pos}"
            )));
        }
        let body = &bytes[pos + 8..pos + total_len - 4];
        let trailer = read_u32(&bytes[pos + total_len - 4..pos + total_len]);
        if trailer as usize != total_len {
            return Err(CaptureError::Malformed(format!(
                "block length trailer mismatch at offset {pos}"
            )));
        }

        match block_type {
            PCAPNG_SHB => {}
            PCAPNG_IDB => {
                if body.len() < 8 {
                    return Err(CaptureError::Malformed("short interface block".into()));
                }
                let dlt = u32::from(if little_endian {
                    u16::from_le_bytes([body[0], body[1]])
                } else {
                    u16::from_be_bytes([body[0], body[1]])
                });
                let tick = tsresol_tick(&body[8..], little_endian)?;
                interfaces.push(Interface { dlt, tick });
            }
            PCAPNG_EPB => {
                if body.len() < 20 {
                    return Err(CaptureError::Malformed("short packet block".into()));
                }
                let iface_id = read_u32(&body[0..4]) as usize;
                let ts_high = read_u32(&body[4..8]) as u64;
                let ts_low = read_u32(&body[8..12]) as u64;
                let cap_len = read_u32(&body[12..16]) as usize;
                let iface = interfaces.get(iface_id).ok_or_else(|| {
                    CaptureError::Malformed(format!("unknown interface {iface_id}"))
                })?;
                let data = body.get(20..20 + cap_len).ok_or_else(|| {
                    CaptureError::Malformed("packet data exceeds block".into())
                })?;
                let ticks = (ts_high << 32) | ts_low;
                frames.push(RawFrame {
                    timestamp: ticks as f64 * iface.tick,
                    data: data.to_vec(),
                    dlt: iface.dlt,
                });
            }
            PCAPNG_SPB => {
                if body.len() < 4 {
                    return Err(CaptureError::Malformed("short simple packet block".into()));
                }
                let orig_len = read_u32(&body[0..4]) as usize;
                let iface = interfaces.first().ok_or_else(|| {
                    CaptureError::Malformed("packet before any interface block".into())
                })?;
                let data = body.get(4..4 + orig_len.min(body.len() - 4)).unwrap();
                // Simple packet blocks carry no timestamp.
                frames.push(RawFrame {
                    timestamp: 0.0,
                    data: data.to_vec(),
                    dlt: iface.dlt,
                });
            }
            _ => {}
        }
        pos += total_len;
    }
    Ok(frames)
}

/// Parses interface options looking for a timestamp-resolution override.
/// Default resolution is microseconds.
fn tsresol_tick(options: &[u8], little_endian: bool) -> Result<f64, CaptureError> {
    let mut pos = 0;
    while pos + 4 <= options.len() {
        let (code, len) = if little_endian {
            (
                u16::from_le_bytes([options[pos], options[pos + 1]]),
                u16::from_le_bytes([options[pos + 2], options[pos + 3]]) as usize,
            )
        } else {
            (
                u16::from_be_bytes([options[pos], options[pos + 1]]),
                u16::from_be_bytes([options[pos + 2], options[pos + 3]]) as usize,
            )
        };
        pos += 4;
        if code == OPT_END {
            break;
        }
        let value = options.get(pos..pos + len).ok_or_else(|| {
            CaptureError::Malformed("interface option exceeds block".into())
        })?;
        if code == OPT_IF_TSRESOL && len >= 1 {
            let v = value[0];
            return Ok(if v & 0x80 == 0 {
                10f64.powi(-i32::from(v))
            } else {
                2f64.powi(-i32::from(v & 0x7f))
            });
        }
        pos += len.div_ceil(4) * 4;
    }
    Ok(1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unknown_magic() {
        assert!(read_frames(&[0xde, 0xad, 0xbe, 0xef, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn classic_empty_capture_yields_no_frames() {
        let mut file = Vec::new();
        file.extend_from_slice(&PCAP_MAGIC_USEC_SWAPPED);
        file.extend_from_slice(&2u16.to_le_bytes());
        file.extend_from_slice(&4u16.to_le_bytes());
        file.extend_from_slice(&[0; 8]);
        file.extend_from_slice(&65535u32.to_le_bytes());
        file.extend_from_slice(&1u32.to_le_bytes());
        let frames = read_frames(&file).unwrap();
        assert!(frames.is_empty());
    }

    #[test]
    fn classic_truncated_packet_is_malformed() {
        let mut file = Vec::new();
        file.extend_from_slice(&PCAP_MAGIC_USEC_SWAPPED);
        file.extend_from_slice(&2u16.to_le_bytes());
        file.extend_from_slice(&4u16.to_le_bytes());
        file.extend_from_slice(&[0; 8]);
        file.extend_from_slice(&65535u32.to_le_bytes());
        file.extend_from_slice(&1u32.to_le_bytes());
        file.extend_from_slice(&[1, 0, 0, 0]);
        assert!(read_frames(&file).is_err());
    }
}
