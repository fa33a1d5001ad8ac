//! Decoder for the unencrypted Matter message header.
//!
//! Only the plain (authenticated-but-not-encrypted) header mode is handled;
//! captures using the optional fully-encrypted header mode are out of scope.

use thiserror::Error;

/// Source node id is present when this bit of the message flags is set.
const FLAG_SOURCE_PRESENT: u8 = 0x04;
/// Destination field size selector (low two bits of the message flags).
const FLAG_DSIZ_MASK: u8 = 0x03;
const DSIZ_NONE: u8 = 0;
const DSIZ_NODE_ID: u8 = 1;
const DSIZ_GROUP_ID: u8 = 2;

/// Fixed prefix: flags(1) + session(2) + security(1) + counter(4).
pub const MIN_HEADER_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DestinationId {
    Node(u64),
    Group(u16),
}

/// Plaintext message header fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MatterHeader {
    pub message_flags: u8,
    pub session_id: u16,
    pub security_flags: u8,
    pub message_counter: u32,
    pub source_node_id: Option<u64>,
    pub dest_node_id: Option<DestinationId>,
}

/// Non-fatal oddities noticed while decoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeaderWarning {
    /// Reserved version bits (high nibble of the message flags) are nonzero.
    ReservedVersionBits,
    /// The destination-size bits hold the reserved value 3; no destination
    /// field is decoded.
    ReservedDsiz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeaderParse {
    pub header: MatterHeader,
    pub warnings: Vec<HeaderWarning>,
    /// Octets consumed by the header, including optional node id fields.
    pub header_len: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeaderError {
    #[error("payload too short for message header: have {have} octets, need {need}")]
    TooShort { have: usize, need: usize },
}

/// Decodes the message header at the start of `payload`.
///
/// Layout: octet 0 = message flags, octets 1-2 = session id (LE), octet 3 =
/// security flags, octets 4-7 = message counter (LE), then optional source
/// and destination node ids as dictated by the flag bits.
pub fn parse_matter_header(payload: &[u8]) -> Result<HeaderParse, HeaderError> {
    if payload.len() < MIN_HEADER_LEN {
        return Err(HeaderError::TooShort {
            have: payload.len(),
            need: MIN_HEADER_LEN,
        });
    }

    let message_flags = payload[0];
    let session_id = u16::from_le_bytes([payload[1], payload[2]]);
    let security_flags = payload[3];
    let message_counter =
        u32::from_le_bytes([payload[4], payload[5], payload[6], payload[7]]);

    let mut warnings = Vec::new();
    if message_flags >> 4 != 0 {
        warnings.push(HeaderWarning::ReservedVersionBits);
    }

    let mut offset = MIN_HEADER_LEN;
    let source_node_id = if message_flags & FLAG_SOURCE_PRESENT != 0 {
        let need = offset + 8;
        if payload.len() < need {
            return Err(HeaderError::TooShort {
                have: payload.len(),
                need,
            });
        }
        let id = u64::from_le_bytes(payload[offset..offset + 8].try_into().unwrap());
        offset += 8;
        Some(id)
    } else {
        None
    };

    let dest_node_id = match message_flags & FLAG_DSIZ_MASK {
        DSIZ_NONE => None,
        DSIZ_NODE_ID => {
            let need = offset + 8;
            if payload.len() < need {
                return Err(HeaderError::TooShort {
                    have: payload.len(),
                    need,
                });
            }
            let id = u64::from_le_bytes(payload[offset..offset + 8].try_into().unwrap());
            offset += 8;
            Some(DestinationId::Node(id))
        }
        DSIZ_GROUP_ID => {
            let need = offset + 2;
            if payload.len() < need {
                return Err(HeaderError::TooShort {
                    have: payload.len(),
                    need,
                });
            }
            let id = u16::from_le_bytes([payload[offset], payload[offset + 1]]);
            offset += 2;
            Some(DestinationId::Group(id))
        }
        _ => {
            warnings.push(HeaderWarning::ReservedDsiz);
            None
        }
    };

    Ok(HeaderParse {
        header: MatterHeader {
            message_flags,
            session_id,
            security_flags,
            message_counter,
            source_node_id,
            dest_node_id,
        },
        warnings,
        header_len: offset,
    })
}
