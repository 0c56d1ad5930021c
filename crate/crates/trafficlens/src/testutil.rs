//! Synthetic frame and capture builders shared by the unit tests.

use std::net::IpAddr;

use crate::pcap::{ByteOrder, CaptureMeta, RawRecord, TsResolution, LINKTYPE_ETHERNET};

pub const TEST_META: CaptureMeta = CaptureMeta {
    byte_order: ByteOrder::Native,
    ts_resolution: TsResolution::Micro,
    snaplen: 65535,
    linktype: LINKTYPE_ETHERNET,
};

pub fn eth_frame(ethertype: u16, payload: &[u8]) -> Vec<u8> {
    let mut frame = vec![
        0x00, 0x11, 0x22, 0x33, 0x44, 0x55, // dst mac
        0x66, 0x77, 0x88, 0x99, 0xAA, 0xBB, // src mac
    ];
    frame.extend_from_slice(&ethertype.to_be_bytes());
    frame.extend_from_slice(payload);
    frame
}

/// Ethernet frame with a single 802.1Q tag in front of `ethertype`.
pub fn vlan_frame(vlan_id: u16, ethertype: u16, payload: &[u8]) -> Vec<u8> {
    let mut inner = Vec::new();
    inner.extend_from_slice(&(vlan_id & 0x0FFF).to_be_bytes());
    inner.extend_from_slice(&ethertype.to_be_bytes());
    inner.extend_from_slice(payload);
    eth_frame(0x8100, &inner)
}

pub fn ipv4_header(src: [u8; 4], dst: [u8; 4], protocol: u8, payload_len: usize) -> Vec<u8> {
    let total_len = (20 + payload_len) as u16;
    let mut header = vec![0x45, 0x00];
    header.extend_from_slice(&total_len.to_be_bytes());
    header.extend_from_slice(&[0x00, 0x01, 0x00, 0x00, 0x40, protocol, 0x00, 0x00]);
    header.extend_from_slice(&src);
    header.extend_from_slice(&dst);
    header
}

pub fn ipv6_header(src: [u8; 16], dst: [u8; 16], next_header: u8, payload_len: usize) -> Vec<u8> {
    let mut header = vec![0x60, 0x00, 0x00, 0x00];
    header.extend_from_slice(&(payload_len as u16).to_be_bytes());
    header.push(next_header);
    header.push(0x40); // hop limit
    header.extend_from_slice(&src);
    header.extend_from_slice(&dst);
    header
}

pub fn tcp_header(src_port: u16, dst_port: u16, seq: u32, flags: u8) -> Vec<u8> {
    let mut header = Vec::with_capacity(20);
    header.extend_from_slice(&src_port.to_be_bytes());
    header.extend_from_slice(&dst_port.to_be_bytes());
    header.extend_from_slice(&seq.to_be_bytes());
    header.extend_from_slice(&0u32.to_be_bytes()); // ack
    header.push(0x50); // data offset 5 words
    header.push(flags);
    header.extend_from_slice(&1024u16.to_be_bytes()); // window
    header.extend_from_slice(&[0x00, 0x00, 0x00, 0x00]); // checksum, urgent
    header
}

pub fn udp_header(src_port: u16, dst_port: u16, payload_len: usize) -> Vec<u8> {
    let mut header = Vec::with_capacity(8);
    header.extend_from_slice(&src_port.to_be_bytes());
    header.extend_from_slice(&dst_port.to_be_bytes());
    header.extend_from_slice(&((8 + payload_len) as u16).to_be_bytes());
    header.extend_from_slice(&[0x00, 0x00]);
    header
}

/// Full Ethernet/IPv4/TCP frame.
pub fn tcp_packet(
    src: [u8; 4],
    dst: [u8; 4],
    src_port: u16,
    dst_port: u16,
    seq: u32,
    flags: u8,
    payload: &[u8],
) -> Vec<u8> {
    let mut l3 = ipv4_header(src, dst, 6, 20 + payload.len());
    l3.extend_from_slice(&tcp_header(src_port, dst_port, seq, flags));
    l3.extend_from_slice(payload);
    eth_frame(0x0800, &l3)
}

/// Full Ethernet/IPv4/UDP frame.
pub fn udp_packet(
    src: [u8; 4],
    dst: [u8; 4],
    src_port: u16,
    dst_port: u16,
    payload: &[u8],
) -> Vec<u8> {
    let mut l3 = ipv4_header(src, dst, 17, 8 + payload.len());
    l3.extend_from_slice(&udp_header(src_port, dst_port, payload.len()));
    l3.extend_from_slice(payload);
    eth_frame(0x0800, &l3)
}

pub fn record(ts_sec: u32, ts_frac: u32, data: Vec<u8>) -> RawRecord {
    let orig_len = data.len() as u32;
    RawRecord {
        ts_sec,
        ts_frac,
        orig_len,
        data,
    }
}

/// Decodes a frame with the default test metadata.
pub fn parse(index: usize, ts_sec: u32, ts_frac: u32, data: Vec<u8>) -> crate::pcap::ParsedPacket {
    crate::pcap::decode_packet(record(ts_sec, ts_frac, data), &TEST_META, index)
}

pub fn ip(bytes: [u8; 4]) -> IpAddr {
    IpAddr::from(bytes)
}
