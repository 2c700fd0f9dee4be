//! Wire codecs for the vendor-specific Information Element and P2P attributes.
//!
//! ```text
//! Vendor IE:      [element_id:1][length:1][oui:3][oui_type:1][payload:N]   N <= 251
//! P2P attribute:  [attr_id:1][attr_length:2 LE][data:N]
//! ```
//!
//! The IE length byte counts everything after itself, i.e. `4 + N`. Decoders
//! surface unknown element IDs, OUIs and attribute IDs instead of rejecting
//! them; it is up to the caller to ignore what it does not understand.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{IntentValue, TieBreakerBit};
use crate::commitment::{Commitment, Nonce, Opening, DIGEST_LEN, NONCE_LEN, PREIMAGE_LEN};

pub const VENDOR_SPECIFIC_ELEMENT_ID: u8 = 0xDD;
pub const DEFAULT_OUI: [u8; 3] = [0x50, 0x6F, 0x9A];
pub const DEFAULT_OUI_TYPE: u8 = 0xFF;
pub const MAX_IE_PAYLOAD: usize = 251;
/// element_id + length + OUI + OUI type.
pub const IE_HEADER_LEN: usize = 6;
/// attr_id + 16-bit length.
pub const ATTRIBUTE_HEADER_LEN: usize = 3;

pub const DEFAULT_TBBC_ATTR_ID: u8 = 0xF0;
pub const DEFAULT_OPENING_ATTR_ID: u8 = 0xF1;
pub const DEFAULT_TBB_PRIME_ATTR_ID: u8 = 0xF2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds the {MAX_IE_PAYLOAD}-byte limit")]
    PayloadTooLong(usize),
    #[error("truncated frame: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("length field {declared} inconsistent with {actual} available bytes")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("unexpected identifier {found:#04x}, wanted {expected:#04x}")]
    UnexpectedId { expected: u8, found: u8 },
    #[error("invalid field value: {0}")]
    InvalidValue(&'static str),
}

/// Identifiers used for the commitment extension. None of these are assigned
/// by a standards body, so they are configurable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub element_id: u8,
    pub oui: [u8; 3],
    pub oui_type: u8,
    pub tbbc_attr_id: u8,
    pub opening_attr_id: u8,
    pub tbb_prime_attr_id: u8,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            element_id: VENDOR_SPECIFIC_ELEMENT_ID,
            oui: DEFAULT_OUI,
            oui_type: DEFAULT_OUI_TYPE,
            tbbc_attr_id: DEFAULT_TBBC_ATTR_ID,
            opening_attr_id: DEFAULT_OPENING_ATTR_ID,
            tbb_prime_attr_id: DEFAULT_TBB_PRIME_ATTR_ID,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VendorIe {
    pub element_id: u8,
    pub oui: [u8; 3],
    pub oui_type: u8,
    pub payload: Vec<u8>,
}

impl VendorIe {
    pub fn new(oui: [u8; 3], oui_type: u8, payload: Vec<u8>) -> Result<Self, FrameError> {
        if payload.len() > MAX_IE_PAYLOAD {
            return Err(FrameError::PayloadTooLong(payload.len()));
        }
        Ok(VendorIe { element_id: VENDOR_SPECIFIC_ELEMENT_ID, oui, oui_type, payload })
    }

    /// Value carried in the length byte.
    pub fn length_field(&self) -> usize {
        4 + self.payload.len()
    }

    pub fn encoded_len(&self) -> usize {
        IE_HEADER_LEN + self.payload.len()
    }
}

pub fn encode_vendor_ie(ie: &VendorIe) -> Result<Vec<u8>, FrameError> {
    if ie.payload.len() > MAX_IE_PAYLOAD {
        return Err(FrameError::PayloadTooLong(ie.payload.len()));
    }
    let mut out = Vec::with_capacity(ie.encoded_len());
    out.push(ie.element_id);
    out.push(ie.length_field() as u8);
    out.extend_from_slice(&ie.oui);
    out.push(ie.oui_type);
    out.extend_from_slice(&ie.payload);
    Ok(out)
}

/// Decodes exactly one IE occupying the whole buffer.
pub fn decode_vendor_ie(bytes: &[u8]) -> Result<VendorIe, FrameError> {
    let (ie, used) = decode_vendor_ie_prefix(bytes)?;
    if used != bytes.len() {
        return Err(FrameError::LengthMismatch { declared: used - 2, actual: bytes.len() - 2 });
    }
    Ok(ie)
}

/// Decodes one IE from the front of `bytes`, returning it with the number of
/// bytes consumed. Useful when several elements are packed back to back.
pub fn decode_vendor_ie_prefix(bytes: &[u8]) -> Result<(VendorIe, usize), FrameError> {
    if bytes.len() < 2 {
        return Err(FrameError::Truncated { needed: 2, available: bytes.len() });
    }
    let element_id = bytes[0];
    let declared = bytes[1] as usize;
    if declared < 4 {
        return Err(FrameError::LengthMismatch { declared, actual: bytes.len() - 2 });
    }
    let total = 2 + declared;
    if bytes.len() < total {
        return Err(FrameError::Truncated { needed: total, available: bytes.len() });
    }
    let oui = [bytes[2], bytes[3], bytes[4]];
    let oui_type = bytes[5];
    let payload = bytes[IE_HEADER_LEN..total].to_vec();
    Ok((VendorIe { element_id, oui, oui_type, payload }, total))
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct P2pAttribute {
    pub attr_id: u8,
    pub data: Vec<u8>,
}

impl P2pAttribute {
    pub fn new(attr_id: u8, data: Vec<u8>) -> Result<Self, FrameError> {
        if data.len() > u16::MAX as usize {
            return Err(FrameError::PayloadTooLong(data.len()));
        }
        Ok(P2pAttribute { attr_id, data })
    }

    pub fn attr_length(&self) -> u16 {
        self.data.len() as u16
    }

    pub fn encoded_len(&self) -> usize {
        ATTRIBUTE_HEADER_LEN + self.data.len()
    }

    pub fn encode_into(&self, out: &mut Vec<u8>) -> Result<(), FrameError> {
        if self.data.len() > u16::MAX as usize {
            return Err(FrameError::PayloadTooLong(self.data.len()));
        }
        out.push(self.attr_id);
        out.extend_from_slice(&self.attr_length().to_le_bytes());
        out.extend_from_slice(&self.data);
        Ok(())
    }
}

pub fn encode_p2p_attribute(attr: &P2pAttribute) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(attr.encoded_len());
    attr.encode_into(&mut out)?;
    Ok(out)
}

pub fn decode_p2p_attribute(bytes: &[u8]) -> Result<P2pAttribute, FrameError> {
    let (attr, used) = decode_p2p_attribute_prefix(bytes)?;
    if used != bytes.len() {
        return Err(FrameError::LengthMismatch {
            declared: used - ATTRIBUTE_HEADER_LEN,
            actual: bytes.len() - ATTRIBUTE_HEADER_LEN,
        });
    }
    Ok(attr)
}

pub fn decode_p2p_attribute_prefix(bytes: &[u8]) -> Result<(P2pAttribute, usize), FrameError> {
    if bytes.len() < ATTRIBUTE_HEADER_LEN {
        return Err(FrameError::Truncated { needed: ATTRIBUTE_HEADER_LEN, available: bytes.len() });
    }
    let attr_id = bytes[0];
    let len = u16::from_le_bytes([bytes[1], bytes[2]]) as usize;
    let total = ATTRIBUTE_HEADER_LEN + len;
    if bytes.len() < total {
        return Err(FrameError::Truncated { needed: total, available: bytes.len() });
    }
    Ok((P2pAttribute { attr_id, data: bytes[ATTRIBUTE_HEADER_LEN..total].to_vec() }, total))
}

/// Encodes a sequence of attributes back to back, as carried in one P2P IE.
pub fn encode_attributes(attrs: &[P2pAttribute]) -> Result<Vec<u8>, FrameError> {
    let mut out = Vec::with_capacity(attrs.iter().map(P2pAttribute::encoded_len).sum());
    for a in attrs {
        a.encode_into(&mut out)?;
    }
    Ok(out)
}

pub fn decode_attributes(mut bytes: &[u8]) -> Result<Vec<P2pAttribute>, FrameError> {
    let mut attrs = Vec::new();
    while !bytes.is_empty() {
        let (attr, used) = decode_p2p_attribute_prefix(bytes)?;
        attrs.push(attr);
        bytes = &bytes[used..];
    }
    Ok(attrs)
}

// Commitment extension payloads.

/// TBBC carried as a vendor IE: 6 header bytes plus the 32-byte digest.
pub fn tbbc_vendor_ie(cfg: &FrameConfig, commitment: &Commitment) -> VendorIe {
    VendorIe {
        element_id: cfg.element_id,
        oui: cfg.oui,
        oui_type: cfg.oui_type,
        payload: commitment.0.to_vec(),
    }
}

pub fn parse_tbbc_vendor_ie(cfg: &FrameConfig, ie: &VendorIe) -> Result<Commitment, FrameError> {
    if ie.element_id != cfg.element_id {
        return Err(FrameError::UnexpectedId { expected: cfg.element_id, found: ie.element_id });
    }
    if ie.oui != cfg.oui || ie.oui_type != cfg.oui_type {
        return Err(FrameError::InvalidValue("OUI does not identify a TBBC element"));
    }
    digest_from(&ie.payload)
}

/// TBBC carried in a reserved P2P attribute: 3 header bytes plus the digest.
pub fn tbbc_attribute(cfg: &FrameConfig, commitment: &Commitment) -> P2pAttribute {
    P2pAttribute { attr_id: cfg.tbbc_attr_id, data: commitment.0.to_vec() }
}

pub fn parse_tbbc_attribute(cfg: &FrameConfig, attr: &P2pAttribute) -> Result<Commitment, FrameError> {
    expect_attr(attr, cfg.tbbc_attr_id)?;
    digest_from(&attr.data)
}

/// Opening attribute, data laid out as the commitment preimage.
pub fn opening_attribute(cfg: &FrameConfig, opening: &Opening) -> P2pAttribute {
    P2pAttribute { attr_id: cfg.opening_attr_id, data: opening.preimage().to_vec() }
}

pub fn parse_opening_attribute(cfg: &FrameConfig, attr: &P2pAttribute) -> Result<Opening, FrameError> {
    expect_attr(attr, cfg.opening_attr_id)?;
    if attr.data.len() != PREIMAGE_LEN {
        return Err(FrameError::LengthMismatch { declared: attr.data.len(), actual: PREIMAGE_LEN });
    }
    let mut nonce = [0u8; NONCE_LEN];
    nonce.copy_from_slice(&attr.data[..NONCE_LEN]);
    let iv = IntentValue::new(attr.data[NONCE_LEN])
        .map_err(|_| FrameError::InvalidValue("intent value above 15"))?;
    let tbb = bit_from(attr.data[NONCE_LEN + 1])?;
    Ok(Opening::new(Nonce(nonce), iv, tbb))
}

/// Uncommitted compatibility tie bit for legacy peers.
pub fn tbb_prime_attribute(cfg: &FrameConfig, bit: TieBreakerBit) -> P2pAttribute {
    P2pAttribute { attr_id: cfg.tbb_prime_attr_id, data: vec![bit.as_byte()] }
}

pub fn parse_tbb_prime_attribute(
    cfg: &FrameConfig,
    attr: &P2pAttribute,
) -> Result<TieBreakerBit, FrameError> {
    expect_attr(attr, cfg.tbb_prime_attr_id)?;
    match attr.data.as_slice() {
        [b] => bit_from(*b),
        other => Err(FrameError::LengthMismatch { declared: other.len(), actual: 1 }),
    }
}

fn expect_attr(attr: &P2pAttribute, id: u8) -> Result<(), FrameError> {
    if attr.attr_id != id {
        return Err(FrameError::UnexpectedId { expected: id, found: attr.attr_id });
    }
    Ok(())
}

fn digest_from(data: &[u8]) -> Result<Commitment, FrameError> {
    let digest: [u8; DIGEST_LEN] = data
        .try_into()
        .map_err(|_| FrameError::LengthMismatch { declared: data.len(), actual: DIGEST_LEN })?;
    Ok(Commitment(digest))
}

fn bit_from(byte: u8) -> Result<TieBreakerBit, FrameError> {
    match byte {
        0 => Ok(TieBreakerBit::ZERO),
        1 => Ok(TieBreakerBit::ONE),
        _ => Err(FrameError::InvalidValue("tie-breaker bit must be 0 or 1")),
    }
}
