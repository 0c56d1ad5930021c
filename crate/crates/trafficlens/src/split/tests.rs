use std::path::Path;

use proptest::prelude::*;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::pcap::TcpFlags;
use crate::testutil::{self, parse};

const SESSION_ALL: UnitMode = UnitMode::new(Granularity::Session, LayerScope::All);
const FLOW_ALL: UnitMode = UnitMode::new(Granularity::Flow, LayerScope::All);
const SESSION_L7: UnitMode = UnitMode::new(Granularity::Session, LayerScope::L7);

fn tuple(src: [u8; 4], sport: u16, dst: [u8; 4], dport: u16) -> FiveTuple {
    FiveTuple {
        src_ip: testutil::ip(src),
        dst_ip: testutil::ip(dst),
        src_port: sport,
        dst_port: dport,
        protocol: 6,
    }
}

#[test]
fn session_key_collapses_directions() {
    let forward = tuple([10, 0, 0, 1], 5000, [10, 0, 0, 2], 80);
    assert_eq!(
        canonical_key(forward, Granularity::Session),
        canonical_key(forward.reversed(), Granularity::Session)
    );
}

#[test]
fn flow_key_preserves_direction() {
    let forward = tuple([10, 0, 0, 1], 5000, [10, 0, 0, 2], 80);
    assert_ne!(
        canonical_key(forward, Granularity::Flow),
        canonical_key(forward.reversed(), Granularity::Flow)
    );
}

#[test]
fn session_key_breaks_ip_tie_on_port() {
    let t = tuple([10, 0, 0, 9], 5000, [10, 0, 0, 9], 80);
    let UnitKey::Session(canonical) = canonical_key(t, Granularity::Session) else {
        panic!("expected session key");
    };
    assert_eq!(canonical.src_port, 80);
    assert_eq!(canonical.dst_port, 5000);
}

#[test]
#[should_panic(expected = "packet granularity")]
fn packet_granularity_has_no_tuple_key() {
    canonical_key(tuple([1, 1, 1, 1], 1, [2, 2, 2, 2], 2), Granularity::Packet);
}

/// Three packets of one TCP conversation: two forward, one reverse.
fn three_packet_capture() -> Vec<crate::pcap::ParsedPacket> {
    let frames = [
        testutil::tcp_packet([10, 0, 0, 1], [10, 0, 0, 2], 5000, 80, 1, TcpFlags::SYN, b"aa"),
        testutil::tcp_packet([10, 0, 0, 1], [10, 0, 0, 2], 5000, 80, 2, TcpFlags::ACK, b"bb"),
        testutil::tcp_packet([10, 0, 0, 2], [10, 0, 0, 1], 80, 5000, 9, TcpFlags::ACK, b"cc"),
    ];
    frames
        .into_iter()
        .enumerate()
        .map(|(i, frame)| parse(i, i as u32, 0, frame))
        .collect()
}

#[test]
fn session_groups_both_directions_into_one_unit() {
    let packets = three_packet_capture();
    let units = split_units(&packets, SESSION_ALL, "web", Path::new("x.pcap"), false).unwrap();
    assert_eq!(units.len(), 1);
    let unit = &units[0];
    assert_eq!(unit.packet_count, 3);
    assert_eq!(unit.packet_indices, vec![0, 1, 2]);
    let expected: Vec<u8> = packets.iter().flat_map(|p| p.data.clone()).collect();
    assert_eq!(unit.bytes, expected);
    assert_eq!(unit.label, "web");
}

#[test]
fn flow_splits_directions_into_two_units() {
    let packets = three_packet_capture();
    let units = split_units(&packets, FLOW_ALL, "web", Path::new("x.pcap"), false).unwrap();
    assert_eq!(units.len(), 2);
    assert_eq!(units[0].packet_count, 2);
    assert_eq!(units[1].packet_count, 1);
    assert_eq!(units[0].packet_indices, vec![0, 1]);
    assert_eq!(units[1].packet_indices, vec![2]);
}

#[test]
fn l7_scope_takes_payload_only() {
    let packets = three_packet_capture();
    let units = split_units(&packets, SESSION_L7, "web", Path::new("x.pcap"), false).unwrap();
    assert_eq!(units[0].bytes, b"aabbcc");
}

#[test]
fn empty_payload_l7_unit_is_cleaned_away() {
    let frame =
        testutil::tcp_packet([10, 0, 0, 1], [10, 0, 0, 2], 5000, 80, 1, TcpFlags::SYN, &[]);
    let packets = vec![parse(0, 0, 0, frame)];
    let units = split_units(&packets, SESSION_L7, "web", Path::new("x.pcap"), false).unwrap();
    assert_eq!(units.len(), 1);
    assert!(units[0].bytes.is_empty());
    let cleaned = clean_units(units, &TrimConfig::default(), true);
    assert!(cleaned.is_empty());
}

#[test]
fn packet_mode_keeps_non_ip_packets() {
    let packets = vec![
        parse(0, 0, 0, testutil::eth_frame(crate::pcap::ETHERTYPE_ARP, &[0u8; 28])),
        parse(1, 0, 0, testutil::udp_packet([1, 1, 1, 1], [2, 2, 2, 2], 53, 53, b"q")),
    ];
    let mode = UnitMode::new(Granularity::Packet, LayerScope::All);
    let units = split_units(&packets, mode, "mixed", Path::new("x.pcap"), false).unwrap();
    assert_eq!(units.len(), 2);
    assert_eq!(units[0].key, UnitKey::Packet(0));
    assert_eq!(units[0].packet_count, 1);
}

#[test]
fn flow_mode_drops_non_ip_packets() {
    let packets = vec![
        parse(0, 0, 0, testutil::eth_frame(crate::pcap::ETHERTYPE_ARP, &[0u8; 28])),
        parse(1, 0, 0, testutil::udp_packet([1, 1, 1, 1], [2, 2, 2, 2], 53, 53, b"q")),
    ];
    let units = split_units(&packets, FLOW_ALL, "mixed", Path::new("x.pcap"), false).unwrap();
    assert_eq!(units.len(), 1);
    assert_eq!(units[0].packet_indices, vec![1]);
}

#[test]
fn empty_groupings_are_no_units() {
    let err = split_units(&[], SESSION_ALL, "x", Path::new("x.pcap"), false).unwrap_err();
    assert!(matches!(err, SplitError::NoUnits));

    let arp_only = vec![parse(0, 0, 0, testutil::eth_frame(crate::pcap::ETHERTYPE_ARP, &[0u8; 28]))];
    let err = split_units(&arp_only, FLOW_ALL, "x", Path::new("x.pcap"), false).unwrap_err();
    assert!(matches!(err, SplitError::NoUnits));
}

#[test]
fn units_come_out_in_first_seen_order() {
    let frames = [
        testutil::tcp_packet([10, 0, 0, 2], [10, 0, 0, 3], 1111, 80, 1, TcpFlags::SYN, b"b"),
        testutil::tcp_packet([10, 0, 0, 1], [10, 0, 0, 3], 2222, 80, 1, TcpFlags::SYN, b"a"),
        testutil::tcp_packet([10, 0, 0, 2], [10, 0, 0, 3], 1111, 80, 2, TcpFlags::ACK, b"b2"),
    ];
    let packets: Vec<_> = frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| parse(i, 0, 0, f))
        .collect();
    let units = split_units(&packets, SESSION_ALL, "x", Path::new("x.pcap"), false).unwrap();
    assert_eq!(units.len(), 2);
    assert_eq!(units[0].packet_indices, vec![0, 2]);
    assert_eq!(units[1].packet_indices, vec![1]);
}

#[test]
fn anonymize_zeroes_macs_and_ips_but_not_ports() {
    let frame = testutil::tcp_packet([10, 0, 0, 1], [10, 0, 0, 2], 8080, 443, 1, 0, b"x");
    let packets = vec![parse(0, 0, 0, frame.clone())];
    let mode = UnitMode::new(Granularity::Packet, LayerScope::All);
    let units = split_units(&packets, mode, "x", Path::new("x.pcap"), true).unwrap();
    let bytes = &units[0].bytes;
    assert_eq!(&bytes[0..12], &[0u8; 12]); // MACs
    assert_eq!(&bytes[12..14], &frame[12..14]); // ethertype untouched
    assert_eq!(&bytes[26..34], &[0u8; 8]); // IPv4 src+dst
    assert_eq!(&bytes[34..38], &frame[34..38]); // ports untouched
    assert_eq!(&bytes[38..], &frame[38..]);
}

#[test]
fn trim_pad_matches_contract() {
    let cfg = TrimConfig::default();
    assert_eq!(cfg.n, 784);
    assert_eq!(cfg.pad_byte, 0x00);

    let short = trim_pad(&[7u8; 10], &cfg);
    assert_eq!(short.len(), 784);
    assert_eq!(&short[..10], &[7u8; 10]);
    assert!(short[10..].iter().all(|&b| b == 0));

    let long_input: Vec<u8> = (0..1000).map(|i| (i % 251) as u8).collect();
    let long = trim_pad(&long_input, &cfg);
    assert_eq!(long, &long_input[..784]);

    let exact = vec![3u8; 784];
    assert_eq!(trim_pad(&exact, &cfg), exact);
}

#[test]
fn clean_removes_empty_units() {
    let unit = |bytes: Vec<u8>| TrafficUnit {
        key: UnitKey::Packet(0),
        bytes,
        packet_count: 1,
        packet_indices: vec![0],
        label: "x".into(),
        source: "x.pcap".into(),
    };
    let cleaned = clean_units(
        vec![unit(vec![]), unit(vec![1, 2, 3])],
        &TrimConfig::default(),
        true,
    );
    assert_eq!(cleaned.len(), 1);
    assert_eq!(cleaned[0].bytes, vec![1, 2, 3]);
}

#[test]
fn clean_keeps_first_of_identical_units() {
    let unit = |label: &str, bytes: Vec<u8>| TrafficUnit {
        key: UnitKey::Packet(0),
        bytes,
        packet_count: 1,
        packet_indices: vec![0],
        label: label.into(),
        source: "x.pcap".into(),
    };
    let cleaned = clean_units(
        vec![
            unit("first", vec![1, 2]),
            unit("copy", vec![1, 2]),
            unit("other", vec![3]),
        ],
        &TrimConfig::default(),
        true,
    );
    assert_eq!(cleaned.len(), 2);
    assert_eq!(cleaned[0].label, "first");
    assert_eq!(cleaned[1].label, "other");
}

#[test]
fn dedup_ignores_bytes_beyond_trim_length() {
    let mut a = vec![7u8; 800];
    let mut b = a.clone();
    a[789] = 1;
    b[789] = 2; // differ only at byte 790, past n=784
    let unit = |bytes: Vec<u8>| TrafficUnit {
        key: UnitKey::Packet(0),
        bytes,
        packet_count: 1,
        packet_indices: vec![0],
        label: "x".into(),
        source: "x.pcap".into(),
    };
    let cleaned = clean_units(vec![unit(a.clone()), unit(b)], &TrimConfig::default(), true);
    assert_eq!(cleaned.len(), 1);
    assert_eq!(cleaned[0].bytes, a);
}

#[test]
fn no_dedup_keeps_duplicates_but_not_empties() {
    let unit = |bytes: Vec<u8>| TrafficUnit {
        key: UnitKey::Packet(0),
        bytes,
        packet_count: 1,
        packet_indices: vec![0],
        label: "x".into(),
        source: "x.pcap".into(),
    };
    let cleaned = clean_units(
        vec![unit(vec![1]), unit(vec![1]), unit(vec![])],
        &TrimConfig::default(),
        false,
    );
    assert_eq!(cleaned.len(), 2);
}

#[test]
fn default_mode_is_session_all() {
    assert_eq!(UnitMode::default(), SESSION_ALL);
}

/// Brute-force grouping: assign each IP packet to the first group whose
/// representative tuple matches exactly (flow) or up to reversal (session).
fn oracle_groups(packets: &[crate::pcap::ParsedPacket], session: bool) -> Vec<Vec<usize>> {
    let mut groups: Vec<(FiveTuple, Vec<usize>)> = Vec::new();
    for packet in packets {
        let Some(t) = packet.five_tuple else { continue };
        let found = groups.iter_mut().find(|(rep, _)| {
            *rep == t || (session && rep.reversed() == t)
        });
        match found {
            Some((_, members)) => members.push(packet.index),
            None => groups.push((t, vec![packet.index])),
        }
    }
    groups.into_iter().map(|(_, members)| members).collect()
}

/// Random small capture drawn from a pool of tuples, some reversed, plus
/// occasional ARP noise.
fn random_capture(seed: u64, max_packets: usize) -> Vec<crate::pcap::ParsedPacket> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool: Vec<([u8; 4], u16, [u8; 4], u16)> = (0..6)
        .map(|_| {
            (
                [10, 0, rng.random_range(0..2), rng.random_range(1..5)],
                rng.random_range(1024..1040),
                [10, 0, rng.random_range(0..2), rng.random_range(1..5)],
                rng.random_range(1024..1040),
            )
        })
        .collect();
    let count = rng.random_range(1..=max_packets);
    (0..count)
        .map(|i| {
            let frame = if rng.random_range(0..10) == 0 {
                testutil::eth_frame(crate::pcap::ETHERTYPE_ARP, &[0u8; 28])
            } else {
                let (src, sport, dst, dport) = pool[rng.random_range(0..pool.len())];
                if rng.random::<bool>() {
                    testutil::tcp_packet(src, dst, sport, dport, i as u32, TcpFlags::ACK, b"p")
                } else {
                    testutil::tcp_packet(dst, src, dport, sport, i as u32, TcpFlags::ACK, b"p")
                }
            };
            parse(i, i as u32, 0, frame)
        })
        .collect()
}

#[test]
fn grouping_matches_brute_force_oracle() {
    for seed in 0..20 {
        let packets = random_capture(seed, 60);
        for session in [true, false] {
            let mode = if session { SESSION_ALL } else { FLOW_ALL };
            let grouped: Vec<Vec<usize>> =
                match split_units(&packets, mode, "x", Path::new("x.pcap"), false) {
                    Ok(units) => units.into_iter().map(|u| u.packet_indices).collect(),
                    Err(SplitError::NoUnits) => Vec::new(),
                    Err(e) => panic!("unexpected error: {e}"),
                };
            assert_eq!(grouped, oracle_groups(&packets, session), "seed {seed}");
        }
    }
}

#[test]
fn grouping_partitions_ip_packets() {
    let packets = random_capture(99, 120);
    let ip_count = packets.iter().filter(|p| p.five_tuple.is_some()).count();
    let units = split_units(&packets, SESSION_ALL, "x", Path::new("x.pcap"), false).unwrap();
    let total: usize = units.iter().map(|u| u.packet_count).sum();
    assert_eq!(total, ip_count);
    let mut all_indices: Vec<usize> = units.iter().flat_map(|u| u.packet_indices.clone()).collect();
    all_indices.sort_unstable();
    all_indices.dedup();
    assert_eq!(all_indices.len(), ip_count);
}

#[test]
fn manifest_parses_and_matches() {
    let text = "benign/*.pcap\tbenign\n# comment line\n\nattack-*.pcap\tddos\n";
    let manifest = LabelManifest::parse(text, "test").unwrap();
    assert_eq!(manifest.label_for(Path::new("benign/day1.pcap")), Some("benign"));
    assert_eq!(manifest.label_for(Path::new("attack-syn.pcap")), Some("ddos"));
    // file-name fallback for absolute paths
    assert_eq!(manifest.label_for(Path::new("/data/attack-syn.pcap")), Some("ddos"));
    assert_eq!(manifest.label_for(Path::new("unrelated.bin")), None);
}

#[test]
fn manifest_rejects_malformed_lines() {
    let err = LabelManifest::parse("no-separator-here", "m.tsv").unwrap_err();
    assert!(matches!(err, SplitError::ManifestLine { line: 1, .. }));
    let err = LabelManifest::parse("glob\t", "m.tsv").unwrap_err();
    assert!(matches!(err, SplitError::ManifestLine { line: 1, .. }));
}

#[test]
fn manifest_expands_globs_first_entry_wins() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir(dir.path().join("benign")).unwrap();
    for name in ["benign/a.pcap", "benign/b.pcap", "attack-x.pcap"] {
        std::fs::write(dir.path().join(name), b"").unwrap();
    }
    let manifest =
        LabelManifest::parse("benign/*.pcap\tbenign\n**/*.pcap\tother\n", "m.tsv").unwrap();
    let labeled = manifest.expand(dir.path()).unwrap();
    let rel: Vec<(String, String)> = labeled
        .iter()
        .map(|(p, l)| {
            (
                p.strip_prefix(dir.path()).unwrap().to_string_lossy().replace('\\', "/"),
                l.clone(),
            )
        })
        .collect();
    assert_eq!(
        rel,
        vec![
            ("benign/a.pcap".to_string(), "benign".to_string()),
            ("benign/b.pcap".to_string(), "benign".to_string()),
            ("attack-x.pcap".to_string(), "other".to_string()),
        ]
    );
}

proptest! {
    /// Both orientations of any tuple share one session key.
    #[test]
    fn session_key_is_direction_invariant(
        a in any::<[u8; 4]>(), b in any::<[u8; 4]>(),
        pa in any::<u16>(), pb in any::<u16>(),
        proto in prop_oneof![Just(6u8), Just(17u8), Just(1u8)],
    ) {
        let t = FiveTuple {
            src_ip: testutil::ip(a),
            dst_ip: testutil::ip(b),
            src_port: pa,
            dst_port: pb,
            protocol: proto,
        };
        prop_assert_eq!(
            canonical_key(t, Granularity::Session),
            canonical_key(t.reversed(), Granularity::Session)
        );
    }

    /// trim_pad always yields exactly n bytes and is idempotent.
    #[test]
    fn trim_pad_is_idempotent(
        bytes in proptest::collection::vec(any::<u8>(), 0..2000),
        n in 1usize..1200,
    ) {
        let cfg = TrimConfig::with_len(n);
        let once = trim_pad(&bytes, &cfg);
        prop_assert_eq!(once.len(), n);
        let twice = trim_pad(&once, &cfg);
        prop_assert_eq!(once, twice);
    }
}
