//! Streaming per-flow statistical features for the baseline classifier.
//!
//! A [`FlowAccumulator`] folds packets of one session in O(1) per packet
//! (the two per-direction size lists grow by one element each packet) and
//! [`FlowAccumulator::finalize`] emits the fixed 74-value vector whose names
//! and order are pinned in [`FEATURE_NAMES`]. `docs/features.md` states the
//! closed formula behind every column.

use std::collections::HashMap;
use std::path::Path;

use thiserror::Error;

use crate::pcap::{ParsedPacket, TcpFlags, PROTO_ICMPV4, PROTO_ICMPV6, PROTO_IGMP, PROTO_TCP, PROTO_UDP};
use crate::split::{canonical_key, Granularity, UnitKey};
use crate::timing::{measure_ms, TimingStats};

/// Column names, in emission order. `Magnitue` and `Tot-sum` are spelled
/// exactly as the upstream feature table spells them.
pub const FEATURE_NAMES: [&str; 74] = [
    "Variance",
    "AVG",
    "Flow_active_time",
    "Drate",
    "TCP",
    "Flow_idle_time",
    "Min",
    "Sequence_number",
    "Header_Length",
    "Wifi_src",
    "Rate",
    "LLC",
    "Max",
    "MAC",
    "Ack_count",
    "Tot_size",
    "SSH",
    "Source_port",
    "TNP_per_proto_tcp",
    "Syn_flag_number",
    "Urg_count",
    "Number",
    "Urg_flag_number",
    "ICMP",
    "HTTP",
    "Covariance",
    "RARP",
    "SMTP",
    "Std",
    "Wifi_Type",
    "MQTT",
    "Sbytes",
    "DS_status",
    "HTTPS",
    "Srate",
    "Ack_flag_number",
    "IRC",
    "Dst_ip_bytes",
    "Protocol_version",
    "UDP",
    "Correlation",
    "Rst_flag_number",
    "DHCP",
    "IAT",
    "Dpkts",
    "Rst_count",
    "IGMP",
    "Src_ip_bytes",
    "Ts",
    "DNS",
    "CoAP",
    "Telnet",
    "Src_pkts",
    "ARP",
    "Protocol_type",
    "IPv",
    "Magnitue",
    "Std_flow_duration",
    "Destination_port",
    "Weight",
    "Average_flow_duration",
    "Fin_count",
    "Spkts",
    "Dst_pkts",
    "Fin_flag_number",
    "Fragments",
    "Sum_flow_duration",
    "Min_flow_duration",
    "Cwr_flag_number",
    "Tot-sum",
    "Syn_count",
    "Ece_flag_number",
    "Psh_flag_number",
    "Max_flow_duration",
];

pub const FEATURE_DIM: usize = FEATURE_NAMES.len();

/// Gap above which consecutive packets belong to different activity spans.
pub const IDLE_THRESHOLD_SECS: f64 = 1.0;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot finalize a flow with no packets")]
    EmptyFlow,
    #[error("expected {FEATURE_DIM} finite values, got {0}")]
    BadVector(String),
    #[error("{vectors} vectors but {labels} labels")]
    LengthMismatch { vectors: usize, labels: usize },
    #[error("csv header does not match the feature schema: {0}")]
    SchemaMismatch(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {problem}")]
    BadRow { row: usize, problem: String },
    #[error("no traffic units to benchmark")]
    NoUnits,
    #[error("need at least 3 repetitions, got {0}")]
    TooFewReps(usize),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Packet orientation relative to the flow's first endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Fixed-order, finite feature values for one flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    /// Validates dimension and finiteness.
    pub fn new(values: Vec<f64>) -> Result<FeatureVector, FeatureError> {
        if values.len() != FEATURE_DIM {
            return Err(FeatureError::BadVector(format!("{} values", values.len())));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(FeatureError::BadVector(format!(
                "non-finite value in column {}",
                FEATURE_NAMES[bad]
            )));
        }
        Ok(FeatureVector { values })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Value by column name; `None` for names outside the schema.
    pub fn get(&self, name: &str) -> Option<f64> {
        FEATURE_NAMES.iter().position(|&n| n == name).map(|i| self.values[i])
    }
}

/// Endpoint data frozen from the first IP packet of the flow.
#[derive(Debug, Clone, Copy)]
struct FlowIdentity {
    src_port: u16,
    dst_port: u16,
    protocol: u8,
    ip_version: u8,
}

/// Streaming statistics over one flow's packets.
#[derive(Debug, Clone, Default)]
pub struct FlowAccumulator {
    n: u64,
    first_ts: f64,
    last_ts: f64,
    // Size moments over every packet (on-wire lengths).
    size_sum: f64,
    size_sumsq: f64,
    size_min: f64,
    size_max: f64,
    last_size: f64,
    header_len_sum: u64,
    // Direction-split counters.
    fwd_pkts: u64,
    bwd_pkts: u64,
    fwd_bytes: f64,
    src_ip_bytes: f64,
    dst_ip_bytes: f64,
    fwd_sizes: Vec<f64>,
    bwd_sizes: Vec<f64>,
    // TCP bookkeeping.
    syn_count: u64,
    ack_count: u64,
    fin_count: u64,
    rst_count: u64,
    urg_count: u64,
    flags_seen: u8,
    tcp_pkts: u64,
    last_tcp_seq: u32,
    fragments: u64,
    // Activity spans: closed spans' durations plus the open span's start.
    span_durations: Vec<f64>,
    span_start: f64,
    idle_total: f64,
    identity: Option<FlowIdentity>,
    llc_seen: bool,
    arp_seen: bool,
    ip_seen: bool,
}

impl FlowAccumulator {
    pub fn new() -> FlowAccumulator {
        FlowAccumulator::default()
    }

    pub fn packet_count(&self) -> u64 {
        self.n
    }

    /// Folds one packet into the running statistics.
    ///
    /// `direction` is relative to the flow's first packet; negative
    /// timestamp gaps (capture jitter) are treated as zero-length gaps.
    pub fn accumulate(&mut self, pkt: &ParsedPacket, direction: Direction) {
        let ts = pkt.timestamp.seconds();
        let size = f64::from(pkt.orig_len);

        if self.n == 0 {
            self.first_ts = ts;
            self.span_start = ts;
            self.size_min = size;
            self.size_max = size;
        } else {
            let gap = ts - self.last_ts;
            if gap > IDLE_THRESHOLD_SECS {
                self.span_durations.push(self.last_ts - self.span_start);
                self.idle_total += gap;
                self.span_start = ts;
            }
            self.size_min = self.size_min.min(size);
            self.size_max = self.size_max.max(size);
        }
        self.n += 1;
        self.last_ts = ts;
        self.size_sum += size;
        self.size_sumsq += size * size;
        self.last_size = size;
        self.header_len_sum += pkt.header_total_len as u64;

        match direction {
            Direction::Forward => {
                self.fwd_pkts += 1;
                self.fwd_bytes += size;
                self.fwd_sizes.push(size);
            }
            Direction::Backward => {
                self.bwd_pkts += 1;
                self.bwd_sizes.push(size);
            }
        }

        if let Some(off) = pkt.l3_offset {
            let ip_bytes = f64::from(pkt.orig_len.saturating_sub(off as u32));
            match direction {
                Direction::Forward => self.src_ip_bytes += ip_bytes,
                Direction::Backward => self.dst_ip_bytes += ip_bytes,
            }
        }

        if let Some(flags) = pkt.tcp_flags {
            self.flags_seen |= flags.0;
            self.syn_count += u64::from(flags.contains(TcpFlags::SYN));
            self.ack_count += u64::from(flags.contains(TcpFlags::ACK));
            self.fin_count += u64::from(flags.contains(TcpFlags::FIN));
            self.rst_count += u64::from(flags.contains(TcpFlags::RST));
            self.urg_count += u64::from(flags.contains(TcpFlags::URG));
        }

        match pkt.ethertype {
            Some(et) if et == 0x0806 => self.arp_seen = true,
            Some(et) if et < 0x0600 => self.llc_seen = true,
            _ => {}
        }

        if let Some(tuple) = pkt.five_tuple {
            self.ip_seen = true;
            if tuple.protocol == PROTO_TCP {
                self.tcp_pkts += 1;
                if let Some(l4) = pkt.l4_offset {
                    if pkt.data.len() >= l4 + 8 {
                        let raw: [u8; 4] = pkt.data[l4 + 4..l4 + 8].try_into().unwrap();
                        self.last_tcp_seq = u32::from_be_bytes(raw);
                    }
                }
            }
            if tuple.src_ip.is_ipv4() {
                if let Some(l3) = pkt.l3_offset {
                    // IPv4 flags+fragment-offset word: MF set or offset > 0.
                    if pkt.data.len() >= l3 + 8 {
                        let word = u16::from_be_bytes([pkt.data[l3 + 6], pkt.data[l3 + 7]]);
                        if word & 0x2000 != 0 || word & 0x1FFF != 0 {
                            self.fragments += 1;
                        }
                    }
                }
            }
            if self.identity.is_none() {
                let oriented = match direction {
                    Direction::Forward => tuple,
                    Direction::Backward => tuple.reversed(),
                };
                self.identity = Some(FlowIdentity {
                    src_port: oriented.src_port,
                    dst_port: oriented.dst_port,
                    protocol: oriented.protocol,
                    ip_version: if oriented.src_ip.is_ipv4() { 4 } else { 6 },
                });
            }
        }
    }

    /// Emits the feature vector; the accumulator stays usable afterwards.
    pub fn finalize(&self) -> Result<FeatureVector, FeatureError> {
        if self.n == 0 {
            return Err(FeatureError::EmptyFlow);
        }
        let n = self.n as f64;
        let duration = (self.last_ts - self.first_ts).max(0.0);

        let mean = self.size_sum / n;
        let variance = (self.size_sumsq / n - mean * mean).max(0.0);
        let std = variance.sqrt();

        let rate = safe_div(n, duration);
        let srate = safe_div(self.fwd_pkts as f64, duration);
        let drate = safe_div(self.bwd_pkts as f64, duration);
        let iat = if self.n >= 2 { duration / (n - 1.0) } else { 0.0 };

        // Close the open span without mutating self.
        let mut spans = self.span_durations.clone();
        spans.push((self.last_ts - self.span_start).max(0.0));
        let span_sum: f64 = spans.iter().sum();
        let span_mean = span_sum / spans.len() as f64;
        let span_var =
            spans.iter().map(|d| (d - span_mean) * (d - span_mean)).sum::<f64>() / spans.len() as f64;
        let span_min = spans.iter().cloned().fold(f64::INFINITY, f64::min);
        let span_max = spans.iter().cloned().fold(f64::NEG_INFINITY, f64::max);

        let fwd_mean = mean_of(&self.fwd_sizes);
        let bwd_mean = mean_of(&self.bwd_sizes);
        let magnitude = (fwd_mean + bwd_mean).sqrt();
        let weight = (self.fwd_pkts * self.bwd_pkts) as f64;
        let (covariance, correlation) = paired_cov_corr(&self.fwd_sizes, &self.bwd_sizes);

        let id = self.identity;
        let proto = id.map_or(0, |i| i.protocol);
        let src_port = id.map_or(0, |i| i.src_port);
        let dst_port = id.map_or(0, |i| i.dst_port);
        let has_port = |p: u16| f64::from(src_port == p || dst_port == p);
        let flag_bit = |mask: u8| f64::from(self.flags_seen & mask != 0);

        let values = vec![
            variance,
            mean,
            span_sum,                                                   // Flow_active_time
            drate,
            f64::from(proto == PROTO_TCP),
            self.idle_total,                                            // Flow_idle_time
            self.size_min,
            f64::from(self.last_tcp_seq),
            self.header_len_sum as f64,
            0.0,                                                        // Wifi_src
            rate,
            f64::from(self.llc_seen),
            self.size_max,
            0.0,                                                        // MAC
            self.ack_count as f64,
            self.last_size,                                             // Tot_size
            has_port(22),                                               // SSH
            f64::from(src_port),
            self.tcp_pkts as f64,                                       // TNP_per_proto_tcp
            flag_bit(TcpFlags::SYN),
            self.urg_count as f64,
            n,                                                          // Number
            flag_bit(TcpFlags::URG),
            f64::from(proto == PROTO_ICMPV4 || proto == PROTO_ICMPV6),
            has_port(80),                                               // HTTP
            covariance,
            0.0,                                                        // RARP
            has_port(25),                                               // SMTP
            std,
            0.0,                                                        // Wifi_Type
            has_port(1883),                                             // MQTT
            self.fwd_bytes,                                             // Sbytes
            0.0,                                                        // DS_status
            has_port(443),                                              // HTTPS
            srate,
            flag_bit(TcpFlags::ACK),
            has_port(6667),                                             // IRC
            self.dst_ip_bytes,
            id.map_or(0.0, |i| f64::from(i.ip_version)),                // Protocol_version
            f64::from(proto == PROTO_UDP),
            correlation,
            flag_bit(TcpFlags::RST),
            f64::from(src_port == 67 || dst_port == 67 || src_port == 68 || dst_port == 68),
            iat,
            self.bwd_pkts as f64,                                       // Dpkts
            self.rst_count as f64,
            f64::from(proto == PROTO_IGMP),
            self.src_ip_bytes,
            self.first_ts,                                              // Ts
            has_port(53),                                               // DNS
            has_port(5683),                                             // CoAP
            has_port(23),                                               // Telnet
            self.fwd_pkts as f64,                                       // Src_pkts
            f64::from(self.arp_seen),
            f64::from(proto),                                           // Protocol_type
            f64::from(self.ip_seen),                                    // IPv
            magnitude,                                                  // Magnitue
            span_var.sqrt(),                                            // Std_flow_duration
            f64::from(dst_port),
            weight,
            span_mean,                                                  // Average_flow_duration
            self.fin_count as f64,
            self.fwd_pkts as f64,                                       // Spkts
            self.bwd_pkts as f64,                                       // Dst_pkts
            flag_bit(TcpFlags::FIN),
            self.fragments as f64,
            span_sum,                                                   // Sum_flow_duration
            span_min,
            flag_bit(TcpFlags::CWR),
            self.size_sum,                                              // Tot-sum
            self.syn_count as f64,
            flag_bit(TcpFlags::ECE),
            flag_bit(TcpFlags::PSH),
            span_max,
        ];
        FeatureVector::new(values)
    }
}

fn safe_div(num: f64, den: f64) -> f64 {
    if den > 0.0 { num / den } else { 0.0 }
}

fn mean_of(xs: &[f64]) -> f64 {
    if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 }
}

/// Population covariance and Pearson correlation over the first
/// `min(|xs|, |ys|)` pairs; both 0 when there are no pairs, correlation 0
/// when either truncated series is constant.
fn paired_cov_corr(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let k = xs.len().min(ys.len());
    if k == 0 {
        return (0.0, 0.0);
    }
    let xs = &xs[..k];
    let ys = &ys[..k];
    let mx = mean_of(xs);
    let my = mean_of(ys);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for i in 0..k {
        cov += (xs[i] - mx) * (ys[i] - my);
        vx += (xs[i] - mx) * (xs[i] - mx);
        vy += (ys[i] - my) * (ys[i] - my);
    }
    cov /= k as f64;
    vx /= k as f64;
    vy /= k as f64;
    let corr = if vx > 0.0 && vy > 0.0 { cov / (vx.sqrt() * vy.sqrt()) } else { 0.0 };
    (cov, corr)
}

/// Writes the feature matrix: header of [`FEATURE_NAMES`] plus `label`,
/// one row per flow. Values print in Rust's shortest round-trip form, so a
/// read-back is bit-exact.
pub fn write_features_csv(
    vectors: &[FeatureVector],
    labels: &[String],
    path: &Path,
) -> Result<(), FeatureError> {
    if vectors.len() != labels.len() {
        return Err(FeatureError::LengthMismatch { vectors: vectors.len(), labels: labels.len() });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FEATURE_NAMES.iter().copied().chain(["label"]))?;
    for (vec, label) in vectors.iter().zip(labels) {
        let mut record: Vec<String> = vec.values.iter().map(|v| v.to_string()).collect();
        record.push(label.clone());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file produced by [`write_features_csv`].
pub fn read_features_csv(path: &Path) -> Result<(Vec<FeatureVector>, Vec<String>), FeatureError> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let expected: Vec<&str> = FEATURE_NAMES.iter().copied().chain(["label"]).collect();
    if header.iter().ne(expected.iter().copied()) {
        return Err(FeatureError::SchemaMismatch(format!(
            "got {} columns",
            header.len()
        )));
    }
    let mut vectors = Vec::new();
    let mut labels = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != FEATURE_DIM + 1 {
            return Err(FeatureError::BadRow {
                row: i + 1,
                problem: format!("{} fields", record.len()),
            });
        }
        let mut values = Vec::with_capacity(FEATURE_DIM);
        for field in record.iter().take(FEATURE_DIM) {
            values.push(field.parse::<f64>().map_err(|e| FeatureError::BadRow {
                row: i + 1,
                problem: e.to_string(),
            })?);
        }
        vectors.push(FeatureVector::new(values)?);
        labels.push(record[FEATURE_DIM].to_string());
    }
    Ok((vectors, labels))
}

/// Session-grouped packet indices plus each group's forward-facing tuple.
///
/// Shared by feature extraction and its benchmark so both see identical
/// flows; groups appear in first-seen order and non-IP packets are skipped.
pub fn session_groups(packets: &[ParsedPacket]) -> Vec<(Vec<usize>, crate::pcap::FiveTuple)> {
    let mut order: Vec<(Vec<usize>, crate::pcap::FiveTuple)> = Vec::new();
    let mut by_key: HashMap<UnitKey, usize> = HashMap::new();
    for (i, pkt) in packets.iter().enumerate() {
        let Some(tuple) = pkt.five_tuple else { continue };
        let key = canonical_key(tuple, Granularity::Session);
        let slot = *by_key.entry(key).or_insert_with(|| {
            order.push((Vec::new(), tuple));
            order.len() - 1
        });
        order[slot].0.push(i);
    }
    order
}

/// Extracts one feature vector per session found in `packets`.
pub fn extract_session_features(
    packets: &[ParsedPacket],
) -> Result<Vec<FeatureVector>, FeatureError> {
    session_groups(packets)
        .iter()
        .map(|(indices, forward)| {
            let mut acc = FlowAccumulator::new();
            for &i in indices {
                let dir = direction_of(&packets[i], forward);
                acc.accumulate(&packets[i], dir);
            }
            acc.finalize()
        })
        .collect()
}

/// Orientation of `pkt` relative to the flow's first packet's tuple.
pub fn direction_of(pkt: &ParsedPacket, forward: &crate::pcap::FiveTuple) -> Direction {
    match pkt.five_tuple {
        Some(t) if t == *forward => Direction::Forward,
        _ => Direction::Backward,
    }
}

/// Times `accumulate`+`finalize` over every session, reporting milliseconds
/// per packet. One full warm-up pass runs first and is discarded; `reps`
/// measured passes follow (mean/p50/p95 over the per-pass figures).
pub fn bench_extraction(
    packets: &[ParsedPacket],
    reps: usize,
) -> Result<TimingStats, FeatureError> {
    if reps < 3 {
        return Err(FeatureError::TooFewReps(reps));
    }
    let groups = session_groups(packets);
    let grouped_packets: usize = groups.iter().map(|(g, _)| g.len()).sum();
    if grouped_packets == 0 {
        return Err(FeatureError::NoUnits);
    }

    let samples = measure_ms(1, reps, || {
        for (indices, forward) in &groups {
            let mut acc = FlowAccumulator::new();
            for &i in indices {
                acc.accumulate(&packets[i], direction_of(&packets[i], forward));
            }
            std::hint::black_box(acc.finalize().expect("group is non-empty"));
        }
    });
    let per_packet: Vec<f64> = samples.iter().map(|ms| ms / grouped_packets as f64).collect();
    Ok(TimingStats::from_samples_ms(&per_packet).expect("reps >= 3"))
}
