//! Ethernet / IPv4 / IPv6 / TCP / UDP header decoding.
//!
//! Decoding never fails: structurally broken packets come back with
//! `malformed = true` and whatever fields could still be extracted. A
//! five-tuple is present exactly when the packet carries IPv4 or IPv6;
//! non-TCP/UDP transports and unreadable transport headers use port 0.

use std::fmt;
use std::net::IpAddr;

use super::{CaptureMeta, RawRecord, TsResolution};

pub const ETHERTYPE_IPV4: u16 = 0x0800;
pub const ETHERTYPE_IPV6: u16 = 0x86DD;
pub const ETHERTYPE_ARP: u16 = 0x0806;
const ETHERTYPE_VLAN: u16 = 0x8100;
const ETHERTYPE_QINQ: u16 = 0x88A8;
/// Values below this in the ethertype slot are 802.3 lengths, not types.
const ETHERTYPE_MIN: u16 = 0x0600;

pub const PROTO_ICMPV4: u8 = 1;
pub const PROTO_IGMP: u8 = 2;
pub const PROTO_TCP: u8 = 6;
pub const PROTO_UDP: u8 = 17;
pub const PROTO_ICMPV6: u8 = 58;

const ETH_HEADER_LEN: usize = 14;
const VLAN_TAG_LEN: usize = 4;
const IPV4_MIN_HEADER: usize = 20;
const IPV6_HEADER_LEN: usize = 40;
const TCP_MIN_HEADER: usize = 20;
const UDP_HEADER_LEN: usize = 8;

/// Record timestamp in the capture's native resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Timestamp {
    pub sec: u32,
    pub frac: u32,
    pub resolution: TsResolution,
}

impl Timestamp {
    pub fn seconds(self) -> f64 {
        self.sec as f64 + self.frac as f64 * self.resolution.fraction_unit()
    }
}

/// TCP flag byte; bit 0 is FIN, bit 7 is CWR.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TcpFlags(pub u8);

impl TcpFlags {
    pub const FIN: u8 = 0x01;
    pub const SYN: u8 = 0x02;
    pub const RST: u8 = 0x04;
    pub const PSH: u8 = 0x08;
    pub const ACK: u8 = 0x10;
    pub const URG: u8 = 0x20;
    pub const ECE: u8 = 0x40;
    pub const CWR: u8 = 0x80;

    pub fn contains(self, mask: u8) -> bool {
        self.0 & mask != 0
    }
}

impl fmt::Display for TcpFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const NAMES: [(u8, &str); 8] = [
            (TcpFlags::FIN, "FIN"),
            (TcpFlags::SYN, "SYN"),
            (TcpFlags::RST, "RST"),
            (TcpFlags::PSH, "PSH"),
            (TcpFlags::ACK, "ACK"),
            (TcpFlags::URG, "URG"),
            (TcpFlags::ECE, "ECE"),
            (TcpFlags::CWR, "CWR"),
        ];
        let mut first = true;
        for (mask, name) in NAMES {
            if self.contains(mask) {
                if !first {
                    f.write_str("|")?;
                }
                f.write_str(name)?;
                first = false;
            }
        }
        if first {
            f.write_str("-")?;
        }
        Ok(())
    }
}

/// Directed endpoint pair plus IP protocol number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FiveTuple {
    pub src_ip: IpAddr,
    pub dst_ip: IpAddr,
    pub src_port: u16,
    pub dst_port: u16,
    pub protocol: u8,
}

impl FiveTuple {
    /// The same tuple with source and destination swapped.
    pub fn reversed(self) -> FiveTuple {
        FiveTuple {
            src_ip: self.dst_ip,
            dst_ip: self.src_ip,
            src_port: self.dst_port,
            dst_port: self.src_port,
            protocol: self.protocol,
        }
    }
}

impl fmt::Display for FiveTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}:{} -> {}:{} proto {}",
            self.src_ip, self.src_port, self.dst_ip, self.dst_port, self.protocol
        )
    }
}

/// A decoded record: raw bytes plus the header fields the pipeline needs.
#[derive(Debug, Clone)]
pub struct ParsedPacket {
    /// Zero-based position within the source capture.
    pub index: usize,
    pub timestamp: Timestamp,
    /// Captured bytes, starting at the Ethernet header.
    pub data: Vec<u8>,
    /// Original on-wire length from the record header.
    pub orig_len: u32,
    /// Raw value of the last ethertype slot (after VLAN tags); values below
    /// 0x0600 are 802.3 lengths. `None` when the link header is incomplete.
    pub ethertype: Option<u16>,
    pub five_tuple: Option<FiveTuple>,
    pub tcp_flags: Option<TcpFlags>,
    /// Offset of the IP header, when one was recognised.
    pub l3_offset: Option<usize>,
    /// Offset of the transport header, when the IP header parsed cleanly.
    pub l4_offset: Option<usize>,
    /// Offset of the transport payload; present only for fully parsed
    /// TCP/UDP headers.
    pub l7_offset: Option<usize>,
    /// Total bytes of link + network + transport headers that parsed
    /// cleanly; equals `l7_offset` whenever that is present.
    pub header_total_len: usize,
    /// Set when a declared or minimum header length exceeds the captured
    /// bytes or a header field is self-contradictory.
    pub malformed: bool,
}

impl ParsedPacket {
    /// Payload above the transport layer, empty when there is none.
    pub fn l7_payload(&self) -> &[u8] {
        match self.l7_offset {
            Some(off) => &self.data[off..],
            None => &[],
        }
    }

    pub fn is_ip(&self) -> bool {
        self.five_tuple.is_some()
    }
}

/// Decodes one record. Infallible by design; see the module docs.
pub fn decode_packet(record: RawRecord, meta: &CaptureMeta, index: usize) -> ParsedPacket {
    let timestamp = Timestamp {
        sec: record.ts_sec,
        frac: record.ts_frac,
        resolution: meta.ts_resolution,
    };
    let mut packet = ParsedPacket {
        index,
        timestamp,
        data: record.data,
        orig_len: record.orig_len,
        ethertype: None,
        five_tuple: None,
        tcp_flags: None,
        l3_offset: None,
        l4_offset: None,
        l7_offset: None,
        header_total_len: 0,
        malformed: false,
    };
    decode_layers(&mut packet);
    packet
}

fn decode_layers(packet: &mut ParsedPacket) {
    let data = &packet.data;
    if data.len() < ETH_HEADER_LEN {
        packet.malformed = true;
        return;
    }

    let mut ethertype = be16(data, 12);
    let mut offset = ETH_HEADER_LEN;
    while ethertype == ETHERTYPE_VLAN || ethertype == ETHERTYPE_QINQ {
        if data.len() < offset + VLAN_TAG_LEN {
            packet.ethertype = Some(ethertype);
            packet.header_total_len = offset;
            packet.malformed = true;
            return;
        }
        ethertype = be16(data, offset + 2);
        offset += VLAN_TAG_LEN;
    }
    packet.ethertype = Some(ethertype);
    packet.header_total_len = offset;
    if ethertype < ETHERTYPE_MIN {
        return; // 802.3 length field: no network layer we understand
    }

    match ethertype {
        ETHERTYPE_IPV4 => decode_ipv4(packet, offset),
        ETHERTYPE_IPV6 => decode_ipv6(packet, offset),
        _ => {}
    }
}

fn decode_ipv4(packet: &mut ParsedPacket, l3: usize) {
    let data = &packet.data;
    if data.len() < l3 + IPV4_MIN_HEADER {
        packet.malformed = true;
        return;
    }
    let version = data[l3] >> 4;
    let header_len = usize::from(data[l3] & 0x0F) * 4;
    if version != 4 || header_len < IPV4_MIN_HEADER || data.len() < l3 + header_len {
        packet.malformed = true;
        return;
    }
    packet.l3_offset = Some(l3);
    let protocol = data[l3 + 9];
    let src_ip = IpAddr::from(<[u8; 4]>::try_from(&data[l3 + 12..l3 + 16]).unwrap());
    let dst_ip = IpAddr::from(<[u8; 4]>::try_from(&data[l3 + 16..l3 + 20]).unwrap());
    decode_transport(packet, l3 + header_len, src_ip, dst_ip, protocol);
}

fn decode_ipv6(packet: &mut ParsedPacket, l3: usize) {
    let data = &packet.data;
    if data.len() < l3 + IPV6_HEADER_LEN {
        packet.malformed = true;
        return;
    }
    if data[l3] >> 4 != 6 {
        packet.malformed = true;
        return;
    }
    packet.l3_offset = Some(l3);
    // The next-header value stands in for the protocol; extension headers
    // are not walked, so packets that carry them group by extension type.
    let protocol = data[l3 + 6];
    let src_ip = IpAddr::from(<[u8; 16]>::try_from(&data[l3 + 8..l3 + 24]).unwrap());
    let dst_ip = IpAddr::from(<[u8; 16]>::try_from(&data[l3 + 24..l3 + 40]).unwrap());
    decode_transport(packet, l3 + IPV6_HEADER_LEN, src_ip, dst_ip, protocol);
}

fn decode_transport(
    packet: &mut ParsedPacket,
    l4: usize,
    src_ip: IpAddr,
    dst_ip: IpAddr,
    protocol: u8,
) {
    packet.l4_offset = Some(l4);
    packet.header_total_len = l4;
    let ports_zero = FiveTuple {
        src_ip,
        dst_ip,
        src_port: 0,
        dst_port: 0,
        protocol,
    };
    let data = &packet.data;
    match protocol {
        PROTO_TCP => {
            if data.len() < l4 + TCP_MIN_HEADER {
                packet.five_tuple = Some(ports_zero);
                packet.malformed = true;
                return;
            }
            packet.five_tuple = Some(FiveTuple {
                src_port: be16(data, l4),
                dst_port: be16(data, l4 + 2),
                ..ports_zero
            });
            packet.tcp_flags = Some(TcpFlags(data[l4 + 13]));
            let header_len = usize::from(data[l4 + 12] >> 4) * 4;
            if header_len < TCP_MIN_HEADER || data.len() < l4 + header_len {
                packet.malformed = true;
                return;
            }
            packet.l7_offset = Some(l4 + header_len);
            packet.header_total_len = l4 + header_len;
        }
        PROTO_UDP => {
            if data.len() < l4 + UDP_HEADER_LEN {
                packet.five_tuple = Some(ports_zero);
                packet.malformed = true;
                return;
            }
            packet.five_tuple = Some(FiveTuple {
                src_port: be16(data, l4),
                dst_port: be16(data, l4 + 2),
                ..ports_zero
            });
            packet.l7_offset = Some(l4 + UDP_HEADER_LEN);
            packet.header_total_len = l4 + UDP_HEADER_LEN;
        }
        _ => {
            // ICMP, IGMP and friends have no ports; the tuple still
            // identifies the endpoint pair.
            packet.five_tuple = Some(ports_zero);
        }
    }
}

fn be16(data: &[u8], offset: usize) -> u16 {
    u16::from_be_bytes([data[offset], data[offset + 1]])
}
