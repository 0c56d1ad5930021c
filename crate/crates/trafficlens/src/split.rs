//! Grouping decoded packets into classification units.
//!
//! A capture can be viewed at three granularities — one unit per packet, one
//! per directed flow, or one per bidirectional session — and at two layer
//! scopes: all captured bytes from the link layer, or only the transport
//! payload (L7). Units are then cleaned (empty removal + optional
//! content dedup) and trimmed or zero-padded to a fixed byte length.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::pcap::{FiveTuple, ParsedPacket};

#[derive(Debug, Error)]
pub enum SplitError {
    #[error("capture produced no units")]
    NoUnits,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: manifest line must be <glob><TAB><label>")]
    ManifestLine { path: String, line: usize },
    #[error("{path}:{line}: bad glob pattern: {source}")]
    BadPattern {
        path: String,
        line: usize,
        source: glob::PatternError,
    },
    #[error("glob iteration failed: {0}")]
    Glob(#[from] glob::GlobError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Granularity {
    Packet,
    Flow,
    Session,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerScope {
    /// Every captured byte, starting at the link header.
    All,
    /// Transport payload only; packets without one contribute no bytes.
    L7,
}

/// How a capture is cut into units: granularity × layer scope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct UnitMode {
    pub granularity: Granularity,
    pub layers: LayerScope,
}

impl UnitMode {
    pub const fn new(granularity: Granularity, layers: LayerScope) -> Self {
        UnitMode { granularity, layers }
    }
}

impl Default for UnitMode {
    /// Session + All, the representation the experiments default to.
    fn default() -> Self {
        UnitMode::new(Granularity::Session, LayerScope::All)
    }
}

/// Canonical identity of one traffic unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnitKey {
    /// Packet granularity: position within the source capture.
    Packet(usize),
    /// Flow granularity: the 5-tuple as observed, direction preserved.
    Flow(FiveTuple),
    /// Session granularity: direction-normalized 5-tuple.
    Session(FiveTuple),
}

/// Unit key for flow or session granularity.
///
/// Flow keys keep the tuple as-is; session keys order the two endpoints
/// lexicographically by (ip bytes, port) so both directions collapse onto
/// one key. `std::net::IpAddr` ordering is octet-lexicographic within an
/// address family, which is exactly the byte order wanted here.
///
/// Packet granularity keys units by capture index, not by tuple; calling
/// this with it is a programming error.
pub fn canonical_key(tuple: FiveTuple, granularity: Granularity) -> UnitKey {
    match granularity {
        Granularity::Flow => UnitKey::Flow(tuple),
        Granularity::Session => {
            if (tuple.src_ip, tuple.src_port) <= (tuple.dst_ip, tuple.dst_port) {
                UnitKey::Session(tuple)
            } else {
                UnitKey::Session(tuple.reversed())
            }
        }
        Granularity::Packet => panic!("packet granularity keys units by index, not by tuple"),
    }
}

/// Fixed-length trimming parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrimConfig {
    /// Target unit length in bytes; must be positive.
    pub n: usize,
    pub pad_byte: u8,
}

impl Default for TrimConfig {
    fn default() -> Self {
        TrimConfig { n: 784, pad_byte: 0x00 }
    }
}

impl TrimConfig {
    pub fn with_len(n: usize) -> Self {
        assert!(n > 0, "trim length must be positive");
        TrimConfig { n, pad_byte: 0x00 }
    }
}

/// One classification unit: an ordered byte stream plus its identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficUnit {
    pub key: UnitKey,
    /// Selected bytes of the member packets, concatenated in capture order.
    pub bytes: Vec<u8>,
    pub packet_count: usize,
    /// Capture indices of the member packets, in capture order.
    pub packet_indices: Vec<usize>,
    pub label: String,
    pub source: PathBuf,
}

impl TrafficUnit {
    /// The unit's bytes trimmed/padded per `cfg`; always `cfg.n` long.
    pub fn trimmed(&self, cfg: &TrimConfig) -> Vec<u8> {
        trim_pad(&self.bytes, cfg)
    }
}

/// First `cfg.n` bytes, padded with `cfg.pad_byte` when shorter.
pub fn trim_pad(bytes: &[u8], cfg: &TrimConfig) -> Vec<u8> {
    let mut out = bytes[..bytes.len().min(cfg.n)].to_vec();
    out.resize(cfg.n, cfg.pad_byte);
    out
}

/// Splits a decoded capture into units under `mode`.
///
/// Packet granularity yields one unit per record, non-IP packets included.
/// Flow/session granularity groups packets that carry a 5-tuple by
/// [`canonical_key`], in first-seen order, and drops non-IP packets.
/// `anonymize` zeroes MAC addresses and IP addresses in the copied bytes
/// (relevant to `LayerScope::All` only, since L7 payloads carry neither).
pub fn split_units(
    packets: &[ParsedPacket],
    mode: UnitMode,
    label: &str,
    source: &Path,
    anonymize: bool,
) -> Result<Vec<TrafficUnit>, SplitError> {
    let mut units: Vec<TrafficUnit> = Vec::new();
    let mut by_key: HashMap<UnitKey, usize> = HashMap::new();

    for packet in packets {
        let key = match mode.granularity {
            Granularity::Packet => UnitKey::Packet(packet.index),
            granularity => match packet.five_tuple {
                Some(tuple) => canonical_key(tuple, granularity),
                None => continue,
            },
        };
        let slot = *by_key.entry(key).or_insert_with(|| {
            units.push(TrafficUnit {
                key,
                bytes: Vec::new(),
                packet_count: 0,
                packet_indices: Vec::new(),
                label: label.to_string(),
                source: source.to_path_buf(),
            });
            units.len() - 1
        });
        let unit = &mut units[slot];
        unit.packet_count += 1;
        unit.packet_indices.push(packet.index);
        match mode.layers {
            LayerScope::All => {
                if anonymize {
                    unit.bytes.extend_from_slice(&anonymized_frame(packet));
                } else {
                    unit.bytes.extend_from_slice(&packet.data);
                }
            }
            LayerScope::L7 => unit.bytes.extend_from_slice(packet.l7_payload()),
        }
    }

    if units.is_empty() {
        return Err(SplitError::NoUnits);
    }
    Ok(units)
}

/// Copy of the frame with MAC and IP addresses zeroed.
fn anonymized_frame(packet: &ParsedPacket) -> Vec<u8> {
    let mut data = packet.data.clone();
    zero_range(&mut data, 0, 12); // both MAC addresses
    if let Some(l3) = packet.l3_offset {
        match packet.ethertype {
            Some(crate::pcap::ETHERTYPE_IPV4) => zero_range(&mut data, l3 + 12, l3 + 20),
            Some(crate::pcap::ETHERTYPE_IPV6) => zero_range(&mut data, l3 + 8, l3 + 40),
            _ => {}
        }
    }
    data
}

fn zero_range(data: &mut [u8], start: usize, end: usize) {
    let len = data.len();
    if start >= len {
        return;
    }
    data[start..end.min(len)].fill(0);
}

/// Removes empty units and (optionally) deduplicates by trimmed content.
///
/// Dedup compares the post-trim bytes — two units identical within the
/// first `cfg.n` bytes count as duplicates even if they differ beyond —
/// and keeps the first occurrence. Scope is the whole input list.
pub fn clean_units(units: Vec<TrafficUnit>, cfg: &TrimConfig, dedup: bool) -> Vec<TrafficUnit> {
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    let mut out = Vec::with_capacity(units.len());
    for unit in units {
        if unit.bytes.is_empty() {
            continue;
        }
        if dedup && !seen.insert(unit.trimmed(cfg)) {
            continue;
        }
        out.push(unit);
    }
    out
}

/// Mapping from capture-file globs to class labels.
///
/// One mapping per line, `<glob><TAB><label>`; blank lines and lines
/// starting with `#` are skipped. Earlier entries win when several match.
#[derive(Debug, Clone)]
pub struct LabelManifest {
    entries: Vec<(glob::Pattern, String)>,
}

impl LabelManifest {
    pub fn parse(text: &str, origin: &str) -> Result<Self, SplitError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (pattern, label) = line.split_once('\t').ok_or(SplitError::ManifestLine {
                path: origin.to_string(),
                line: i + 1,
            })?;
            let (pattern, label) = (pattern.trim(), label.trim());
            if pattern.is_empty() || label.is_empty() {
                return Err(SplitError::ManifestLine {
                    path: origin.to_string(),
                    line: i + 1,
                });
            }
            let compiled = glob::Pattern::new(pattern).map_err(|source| SplitError::BadPattern {
                path: origin.to_string(),
                line: i + 1,
                source,
            })?;
            entries.push((compiled, label.to_string()));
        }
        Ok(LabelManifest { entries })
    }

    pub fn load(path: &Path) -> Result<Self, SplitError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Label of the first entry matching `path` (full path, then file name).
    pub fn label_for(&self, path: &Path) -> Option<&str> {
        self.entries
            .iter()
            .find(|(pattern, _)| {
                pattern.matches_path(path)
                    || path.file_name().is_some_and(|name| pattern.matches_path(name.as_ref()))
            })
            .map(|(_, label)| label.as_str())
    }

    /// Resolves every glob relative to `base` into concrete labeled files.
    ///
    /// Files are listed in (entry order, path order); a file matched by
    /// several entries keeps the first label.
    pub fn expand(&self, base: &Path) -> Result<Vec<(PathBuf, String)>, SplitError> {
        let mut labeled: Vec<(PathBuf, String)> = Vec::new();
        let mut taken: HashSet<PathBuf> = HashSet::new();
        for (pattern, label) in &self.entries {
            let full = base.join(pattern.as_str());
            let matches = glob::glob(&full.to_string_lossy())
                .expect("pattern already validated at parse time");
            for path in matches {
                let path = path?;
                if path.is_file() && taken.insert(path.clone()) {
                    labeled.push((path, label.clone()));
                }
            }
        }
        Ok(labeled)
    }
}

#[cfg(test)]
mod tests;
