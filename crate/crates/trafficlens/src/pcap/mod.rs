//! Classic libpcap capture files: reading, writing and packet decoding.
//!
//! The on-disk layout is a 24-byte global header (magic, version 2.4,
//! thiszone, sigfigs, snaplen, linktype) followed by 16-byte record headers
//! (ts_sec, ts_frac, incl_len, orig_len) and `incl_len` raw bytes each.
//! Both byte orders and both timestamp resolutions are accepted; only
//! linktype 1 (Ethernet) is supported for decoding.

mod decode;

pub use decode::{
    decode_packet, FiveTuple, ParsedPacket, TcpFlags, Timestamp, ETHERTYPE_ARP, ETHERTYPE_IPV4,
    ETHERTYPE_IPV6, PROTO_ICMPV4, PROTO_ICMPV6, PROTO_IGMP, PROTO_TCP, PROTO_UDP,
};

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// Magic for microsecond timestamps, as read in big-endian order.
pub const MAGIC_MICRO: u32 = 0xA1B2_C3D4;
/// Magic for nanosecond timestamps, as read in big-endian order.
pub const MAGIC_NANO: u32 = 0xA1B2_3C4D;
/// First block type of a pcapng file; rejected with a dedicated error.
const PCAPNG_MAGIC: u32 = 0x0A0D_0D0A;

pub const LINKTYPE_ETHERNET: u32 = 1;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a pcap file (magic 0x{0:08X})")]
    BadMagic(u32),
    #[error("pcapng format is not supported; convert to classic pcap first")]
    PcapNg,
    #[error("truncated capture: {0}")]
    Truncated(&'static str),
    #[error("unsupported linktype {0} (only 1 = Ethernet is handled)")]
    UnsupportedLinktype(u32),
    #[error("invalid snaplen 0")]
    InvalidSnaplen,
}

/// Field byte order of a capture file, relative to big-endian.
///
/// `Native` means header fields read correctly as big-endian (magic bytes
/// `A1 B2 C3 D4` on disk); `Swapped` means every field is byte-swapped
/// (little-endian files, magic bytes `D4 C3 B2 A1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ByteOrder {
    Native,
    Swapped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsResolution {
    Micro,
    Nano,
}

impl TsResolution {
    /// Fractional-part unit in seconds.
    pub fn fraction_unit(self) -> f64 {
        match self {
            TsResolution::Micro => 1e-6,
            TsResolution::Nano => 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CaptureMeta {
    pub byte_order: ByteOrder,
    pub ts_resolution: TsResolution,
    pub snaplen: u32,
    pub linktype: u32,
}

/// One undecoded capture record.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRecord {
    pub ts_sec: u32,
    pub ts_frac: u32,
    /// Original on-wire length; may exceed `data.len()` when the capture
    /// truncated the packet at snaplen.
    pub orig_len: u32,
    pub data: Vec<u8>,
}

/// Streaming reader over the records of one capture.
#[derive(Debug)]
pub struct CaptureReader<R: Read> {
    meta: CaptureMeta,
    input: R,
    index: usize,
    done: bool,
}

impl CaptureReader<BufReader<File>> {
    pub fn open(path: &Path) -> Result<Self, PcapError> {
        Self::from_reader(BufReader::new(File::open(path)?))
    }
}

impl<R: Read> CaptureReader<R> {
    /// Parses the global header and positions the stream at the first record.
    pub fn from_reader(mut input: R) -> Result<Self, PcapError> {
        let mut header = [0u8; 24];
        read_exact_or(&mut input, &mut header, "global header shorter than 24 bytes")?;

        let magic = u32::from_be_bytes([header[0], header[1], header[2], header[3]]);
        let (byte_order, ts_resolution) = match magic {
            MAGIC_MICRO => (ByteOrder::Native, TsResolution::Micro),
            MAGIC_NANO => (ByteOrder::Native, TsResolution::Nano),
            m if m == MAGIC_MICRO.swap_bytes() => (ByteOrder::Swapped, TsResolution::Micro),
            m if m == MAGIC_NANO.swap_bytes() => (ByteOrder::Swapped, TsResolution::Nano),
            PCAPNG_MAGIC => return Err(PcapError::PcapNg),
            other => return Err(PcapError::BadMagic(other)),
        };

        let field = |off: usize| read_u32(&header[off..off + 4], byte_order);
        let snaplen = field(16);
        let linktype = field(20);
        if snaplen == 0 {
            return Err(PcapError::InvalidSnaplen);
        }
        if linktype != LINKTYPE_ETHERNET {
            return Err(PcapError::UnsupportedLinktype(linktype));
        }

        Ok(CaptureReader {
            meta: CaptureMeta {
                byte_order,
                ts_resolution,
                snaplen,
                linktype,
            },
            input,
            index: 0,
            done: false,
        })
    }

    pub fn meta(&self) -> &CaptureMeta {
        &self.meta
    }

    /// Index the next yielded record will get.
    pub fn next_index(&self) -> usize {
        self.index
    }

    /// Reads the next record, or `None` at a clean end of file.
    pub fn next_record(&mut self) -> Result<Option<RawRecord>, PcapError> {
        if self.done {
            return Ok(None);
        }
        let mut header = [0u8; 16];
        let got = read_up_to(&mut self.input, &mut header)?;
        if got == 0 {
            self.done = true;
            return Ok(None);
        }
        if got < 16 {
            self.done = true;
            return Err(PcapError::Truncated("record header cut short"));
        }

        let field = |off: usize| read_u32(&header[off..off + 4], self.meta.byte_order);
        let incl_len = field(8) as usize;

        // take() bounds the allocation, so a nonsense incl_len in a short
        // file degrades to Truncated instead of a huge buffer.
        let mut data = Vec::new();
        (&mut self.input)
            .take(incl_len as u64)
            .read_to_end(&mut data)?;
        if data.len() < incl_len {
            self.done = true;
            return Err(PcapError::Truncated("record data cut short"));
        }

        self.index += 1;
        Ok(Some(RawRecord {
            ts_sec: field(0),
            ts_frac: field(4),
            orig_len: field(12),
            data,
        }))
    }
}

impl<R: Read> Iterator for CaptureReader<R> {
    type Item = Result<RawRecord, PcapError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record().transpose()
    }
}

/// Opens a capture and returns its metadata together with the record stream.
pub fn open_capture(path: &Path) -> Result<(CaptureMeta, CaptureReader<BufReader<File>>), PcapError> {
    let reader = CaptureReader::open(path)?;
    Ok((*reader.meta(), reader))
}

/// Reads and decodes a whole capture file.
pub fn read_packets(path: &Path) -> Result<(CaptureMeta, Vec<ParsedPacket>), PcapError> {
    let (meta, reader) = open_capture(path)?;
    let mut packets = Vec::new();
    for (index, record) in reader.enumerate() {
        packets.push(decode_packet(record?, &meta, index));
    }
    Ok((meta, packets))
}

/// Writes a capture file in the requested byte order and resolution.
pub fn write_capture(
    path: &Path,
    byte_order: ByteOrder,
    ts_resolution: TsResolution,
    snaplen: u32,
    linktype: u32,
    records: &[RawRecord],
) -> Result<(), PcapError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_capture_to(&mut out, byte_order, ts_resolution, snaplen, linktype, records)?;
    out.flush()?;
    Ok(())
}

pub fn write_capture_to<W: Write>(
    out: &mut W,
    byte_order: ByteOrder,
    ts_resolution: TsResolution,
    snaplen: u32,
    linktype: u32,
    records: &[RawRecord],
) -> Result<(), PcapError> {
    if snaplen == 0 {
        return Err(PcapError::InvalidSnaplen);
    }
    let magic = match ts_resolution {
        TsResolution::Micro => MAGIC_MICRO,
        TsResolution::Nano => MAGIC_NANO,
    };
    // The magic is stored in the same order as every other field, so a
    // swapped file simply stores the byte-swapped magic.
    let put = |out: &mut W, v: u32| -> std::io::Result<()> {
        match byte_order {
            ByteOrder::Native => out.write_all(&v.to_be_bytes()),
            ByteOrder::Swapped => out.write_all(&v.to_le_bytes()),
        }
    };
    put(out, magic)?;
    match byte_order {
        ByteOrder::Native => {
            out.write_all(&2u16.to_be_bytes())?;
            out.write_all(&4u16.to_be_bytes())?;
        }
        ByteOrder::Swapped => {
            out.write_all(&2u16.to_le_bytes())?;
            out.write_all(&4u16.to_le_bytes())?;
        }
    }
    put(out, 0)?; // thiszone
    put(out, 0)?; // sigfigs
    put(out, snaplen)?;
    put(out, linktype)?;
    for record in records {
        put(out, record.ts_sec)?;
        put(out, record.ts_frac)?;
        put(out, record.data.len() as u32)?;
        put(out, record.orig_len)?;
        out.write_all(&record.data)?;
    }
    Ok(())
}

fn read_u32(bytes: &[u8], order: ByteOrder) -> u32 {
    let raw = [bytes[0], bytes[1], bytes[2], bytes[3]];
    match order {
        ByteOrder::Native => u32::from_be_bytes(raw),
        ByteOrder::Swapped => u32::from_le_bytes(raw),
    }
}

fn read_exact_or<R: Read>(
    input: &mut R,
    buf: &mut [u8],
    what: &'static str,
) -> Result<(), PcapError> {
    let got = read_up_to(input, buf)?;
    if got < buf.len() {
        Err(PcapError::Truncated(what))
    } else {
        Ok(())
    }
}

/// Reads until `buf` is full or EOF; returns the number of bytes read.
fn read_up_to<R: Read>(input: &mut R, buf: &mut [u8]) -> Result<usize, PcapError> {
    let mut filled = 0;
    while filled < buf.len() {
        match input.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e.into()),
        }
    }
    Ok(filled)
}
