//! Shared builders for the integration tests: synthetic frames, captures on
//! disk, image datasets with known structure, and an independent grouping
//! oracle implemented by direct pairwise tuple comparison.
#![allow(dead_code)]

use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use trafficlens::image::{bytes_to_image, ImageDataset, IMAGE_PIXELS};
use trafficlens::pcap::{
    write_capture, ByteOrder, FiveTuple, ParsedPacket, RawRecord, TsResolution, LINKTYPE_ETHERNET,
};

// ---------------------------------------------------------------- frames

pub fn eth_frame(ethertype: u16, payload: &[u8]) -> Vec<u8> {
    let mut frame = vec![
        0x00, 0x11, 0x22, 0x33, 0x44, 0x55, // dst mac
        0x66, 0x77, 0x88, 0x99, 0xAA, 0xBB, // src mac
    ];
    frame.extend_from_slice(&ethertype.to_be_bytes());
    frame.extend_from_slice(payload);
    frame
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
    header.push(0x40);
    header.extend_from_slice(&src);
    header.extend_from_slice(&dst);
    header
}

pub fn tcp_header(src_port: u16, dst_port: u16, seq: u32, flags: u8) -> Vec<u8> {
    let mut header = Vec::with_capacity(20);
    header.extend_from_slice(&src_port.to_be_bytes());
    header.extend_from_slice(&dst_port.to_be_bytes());
    header.extend_from_slice(&seq.to_be_bytes());
    header.extend_from_slice(&0u32.to_be_bytes());
    header.push(0x50);
    header.push(flags);
    header.extend_from_slice(&1024u16.to_be_bytes());
    header.extend_from_slice(&[0x00, 0x00, 0x00, 0x00]);
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

/// Full Ethernet/IPv6/TCP frame.
pub fn tcp6_packet(
    src: [u8; 16],
    dst: [u8; 16],
    src_port: u16,
    dst_port: u16,
    payload: &[u8],
) -> Vec<u8> {
    let mut l3 = ipv6_header(src, dst, 6, 20 + payload.len());
    l3.extend_from_slice(&tcp_header(src_port, dst_port, 1, 0x10));
    l3.extend_from_slice(payload);
    eth_frame(0x86DD, &l3)
}

pub fn record(ts_sec: u32, ts_frac: u32, data: Vec<u8>) -> RawRecord {
    let orig_len = data.len() as u32;
    RawRecord { ts_sec, ts_frac, orig_len, data }
}

// -------------------------------------------------------------- captures

/// TCP conversations with alternating directions and distinct payloads.
///
/// Session `s` runs between 10.0.`salt`.(s+1):40000+s and
/// 10.99.0.1:443; packet `k` goes client→server when `k` is even. Every
/// payload byte mixes `salt`, `s` and `k`, so no two sessions collide
/// after dedup.
pub fn session_records(
    salt: u8,
    n_sessions: usize,
    pkts_per_session: usize,
    payload_len: usize,
) -> Vec<RawRecord> {
    let server = [10, 99, 0, 1];
    let mut out = Vec::new();
    for s in 0..n_sessions {
        let client = [10, 0, salt, (s + 1) as u8];
        let sport = 40_000 + s as u16;
        for k in 0..pkts_per_session {
            let payload: Vec<u8> = (0..payload_len)
                .map(|j| salt ^ (s as u8) ^ ((k as u8) << 4) ^ (j as u8))
                .collect();
            let frame = if k % 2 == 0 {
                tcp_packet(client, server, sport, 443, k as u32, 0x10, &payload)
            } else {
                tcp_packet(server, client, 443, sport, k as u32, 0x10, &payload)
            };
            let t = (s * pkts_per_session + k) as u32;
            out.push(record(t / 10, (t % 10) * 100, frame));
        }
    }
    out
}

/// Writes `session_records` output as a plain microsecond big-endian capture.
pub fn write_session_capture(
    path: &Path,
    salt: u8,
    n_sessions: usize,
    pkts_per_session: usize,
    payload_len: usize,
) {
    let records = session_records(salt, n_sessions, pkts_per_session, payload_len);
    write_capture(
        path,
        ByteOrder::Native,
        TsResolution::Micro,
        65_535,
        LINKTYPE_ETHERNET,
        &records,
    )
    .expect("write synthetic capture");
}

/// A randomized capture: TCP/UDP over IPv4/IPv6 drawn from a small endpoint
/// pool (so directions and repeats occur), plus ARP and runt frames that
/// carry no 5-tuple. Always starts with one guaranteed TCP packet.
pub fn random_records(rng: &mut ChaCha8Rng, n: usize) -> Vec<RawRecord> {
    let v4_pool: [[u8; 4]; 4] = [[10, 0, 0, 1], [10, 0, 0, 2], [192, 168, 1, 9], [172, 16, 3, 7]];
    let v6_pool: [[u8; 16]; 2] = [
        [0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1],
        [0x20, 0x01, 0x0d, 0xb8, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 2],
    ];
    let ports: [u16; 4] = [80, 443, 5353, 40_000];

    let mut out = vec![record(0, 0, tcp_packet(v4_pool[0], v4_pool[1], 40_000, 80, 0, 0x10, b"x"))];
    for i in 1..n {
        let payload: Vec<u8> = (0..rng.random_range(0..40usize)).map(|_| rng.random()).collect();
        let frame = match rng.random_range(0..10u8) {
            // ARP carries no 5-tuple; flow/session grouping must skip it.
            0 => eth_frame(0x0806, &[0u8; 28]),
            // A runt frame: too short for any header to parse.
            1 => vec![0xAA; rng.random_range(1..13usize)],
            2 | 3 => {
                let s = rng.random_range(0..2usize);
                tcp6_packet(v6_pool[s], v6_pool[1 - s], ports[rng.random_range(0..4usize)], ports[rng.random_range(0..4usize)], &payload)
            }
            4 | 5 | 6 => udp_packet(
                v4_pool[rng.random_range(0..4usize)],
                v4_pool[rng.random_range(0..4usize)],
                ports[rng.random_range(0..4usize)],
                ports[rng.random_range(0..4usize)],
                &payload,
            ),
            _ => tcp_packet(
                v4_pool[rng.random_range(0..4usize)],
                v4_pool[rng.random_range(0..4usize)],
                ports[rng.random_range(0..4usize)],
                ports[rng.random_range(0..4usize)],
                rng.random(),
                0x18,
                &payload,
            ),
        };
        out.push(record(i as u32 / 5, (i as u32 % 5) * 1000, frame));
    }
    out
}

// ---------------------------------------------------------------- oracle

fn same_flow(a: &FiveTuple, b: &FiveTuple) -> bool {
    a.protocol == b.protocol
        && a.src_ip == b.src_ip
        && a.dst_ip == b.dst_ip
        && a.src_port == b.src_port
        && a.dst_port == b.dst_port
}

fn same_session(a: &FiveTuple, b: &FiveTuple) -> bool {
    same_flow(a, b)
        || (a.protocol == b.protocol
            && a.src_ip == b.dst_ip
            && a.dst_ip == b.src_ip
            && a.src_port == b.dst_port
            && a.dst_port == b.src_port)
}

/// Brute-force grouping by pairwise tuple comparison: scan packets in order,
/// append to the first group whose representative matches, else open a new
/// group. Packets without a 5-tuple are skipped, mirroring the contract for
/// flow/session granularity.
pub fn oracle_groups(packets: &[ParsedPacket], bidirectional: bool) -> Vec<Vec<usize>> {
    let mut groups: Vec<(FiveTuple, Vec<usize>)> = Vec::new();
    for p in packets {
        let Some(t) = p.five_tuple else { continue };
        let hit = groups.iter_mut().find(|(rep, _)| {
            if bidirectional {
                same_session(rep, &t)
            } else {
                same_flow(rep, &t)
            }
        });
        match hit {
            Some((_, members)) => members.push(p.index),
            None => groups.push((t, vec![p.index])),
        }
    }
    groups.into_iter().map(|(_, members)| members).collect()
}

// --------------------------------------------------------------- dataset

/// Two-class 28×28 dataset: class 0 lights the top half, class 1 the bottom
/// half, and every byte is jittered by a uniform offset in [−8, 8].
pub fn banded_dataset(counts: &[usize], seed: u64) -> ImageDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::new();
    for (class, &count) in counts.iter().enumerate() {
        for _ in 0..count {
            let mut block = [0u8; IMAGE_PIXELS];
            let lit = if class == 0 {
                0..IMAGE_PIXELS / 2
            } else {
                IMAGE_PIXELS / 2..IMAGE_PIXELS
            };
            for p in lit {
                block[p] = 0xFF;
            }
            for b in block.iter_mut() {
                let jitter: i16 = rng.random_range(-8..=8);
                *b = (*b as i16 + jitter).clamp(0, 255) as u8;
            }
            samples.push(bytes_to_image(&block, class as u32).expect("784-byte block"));
        }
    }
    // Interleave classes so contiguous index splits stay mixed.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5EED);
    for i in (1..samples.len()).rev() {
        samples.swap(i, rng.random_range(0..=i));
    }
    ImageDataset {
        samples,
        class_names: (0..counts.len()).map(|c| format!("class{c}")).collect(),
    }
}

// ------------------------------------------------------------ forest data

/// Linearly separable two-feature, two-class point cloud (class 1 sits
/// strictly above the line x+y = 0 with a wide margin).
pub fn separable_points(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 2;
        let center = if class == 0 { -2.0 } else { 2.0 };
        rows.push(vec![
            center + rng.random_range(-0.5..0.5),
            center + rng.random_range(-0.5..0.5),
        ]);
        labels.push(class);
    }
    (rows, labels)
}

/// Three overlapping uniform blobs around (0,0), (4,0) and (0,4).
pub fn noisy_blobs(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let centers = [(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = i % 3;
        let (cx, cy) = centers[class];
        rows.push(vec![
            cx + rng.random_range(-2.2..2.2),
            cy + rng.random_range(-2.2..2.2),
        ]);
        labels.push(class);
    }
    (rows, labels)
}
