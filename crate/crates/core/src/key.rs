//! Flow identifiers and flow records.

use std::fmt;
use std::net::Ipv4Addr;

/// Width of a serialized [`FlowKey`] in bytes (104 bits).
pub const FLOW_KEY_BYTES: usize = 13;

/// The IPv4 five-tuple that identifies a flow.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    pub src_addr: u32,
    pub dst_addr: u32,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: u8,
}

impl FlowKey {
    pub const fn new(src_addr: u32, dst_addr: u32, src_port: u16, dst_port: u16, protocol: u8) -> Self {
        FlowKey {
            src_addr,
            dst_addr,
            src_port,
            dst_port,
            protocol,
        }
    }

    /// Big-endian concatenation of src, dst, sport, dport, proto.
    pub fn to_bytes(&self) -> [u8; FLOW_KEY_BYTES] {
        let mut out = [0u8; FLOW_KEY_BYTES];
        out[0..4].copy_from_slice(&self.src_addr.to_be_bytes());
        out[4..8].copy_from_slice(&self.dst_addr.to_be_bytes());
        out[8..10].copy_from_slice(&self.src_port.to_be_bytes());
        out[10..12].copy_from_slice(&self.dst_port.to_be_bytes());
        out[12] = self.protocol;
        out
    }

    pub fn from_bytes(bytes: &[u8; FLOW_KEY_BYTES]) -> Self {
        FlowKey {
            src_addr: u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]),
            dst_addr: u32::from_be_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]),
            src_port: u16::from_be_bytes([bytes[8], bytes[9]]),
            dst_port: u16::from_be_bytes([bytes[10], bytes[11]]),
            protocol: bytes[12],
        }
    }

    /// Packs the key into the low 104 bits of a `u128`.
    ///
    /// FlowRadar's flow-set field stores XORs of these values.
    pub fn to_u128(&self) -> u128 {
        ((self.src_addr as u128) << 72)
            | ((self.dst_addr as u128) << 40)
            | ((self.src_port as u128) << 24)
            | ((self.dst_port as u128) << 8)
            | self.protocol as u128
    }

    /// Inverse of [`FlowKey::to_u128`]; bits above 104 are ignored.
    pub fn from_u128(v: u128) -> Self {
        FlowKey {
            src_addr: (v >> 72) as u32,
            dst_addr: (v >> 40) as u32,
            src_port: (v >> 24) as u16,
            dst_port: (v >> 8) as u16,
            protocol: v as u8,
        }
    }

    pub fn src_ip(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.src_addr)
    }

    pub fn dst_ip(&self) -> Ipv4Addr {
        Ipv4Addr::from(self.dst_addr)
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} -> {}:{} proto {}",
            self.src_ip(),
            self.src_port,
            self.dst_ip(),
            self.dst_port,
            self.protocol
        )
    }
}

/// A `(key, packet count)` pair. A count of zero marks an empty bucket.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct FlowRecord {
    pub key: FlowKey,
    pub count: u32,
}

impl FlowRecord {
    pub const EMPTY: FlowRecord = FlowRecord {
        key: FlowKey::new(0, 0, 0, 0, 0),
        count: 0,
    };

    pub fn new(key: FlowKey, count: u32) -> Self {
        FlowRecord { key, count }
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}
