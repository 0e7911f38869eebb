//! Packet layout and codec.
//!
//! ```text
//! 0xAA | cmd | len (u16 BE) | payload (len bytes) | xor(cmd, len, payload)
//! ```

use serde::{Deserialize, Serialize};

use crate::render::{Cell, TactileFrame, HEIGHT, LINE_CELLS, WIDTH};

pub const HEADER: u8 = 0xAA;
pub const FRAME_BYTES: usize = WIDTH * HEIGHT / 8;
/// Largest payload the decoder will wait for.
pub const MAX_PAYLOAD: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Command {
    FullFrame = 0x01,
    Partial = 0x02,
    BrailleLine = 0x03,
    Clear = 0x04,
    Pulse = 0x05,
}

impl Command {
    pub fn from_byte(b: u8) -> Option<Self> {
        Some(match b {
            0x01 => Self::FullFrame,
            0x02 => Self::Partial,
            0x03 => Self::BrailleLine,
            0x04 => Self::Clear,
            0x05 => Self::Pulse,
            _ => return None,
        })
    }
}

/// Horizontal run of pins set to explicit states.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Run {
    pub col: u8,
    pub row: u8,
    pub bits: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Packet {
    /// 60×40 pins, row-major, MSB of each byte is the leftmost pin.
    FullFrame(Vec<u8>),
    Partial(Vec<Run>),
    BrailleLine([u8; LINE_CELLS]),
    Clear,
    Pulse {
        /// Toggle rate in tenths of a hertz.
        rate_dhz: u8,
        duty_pct: u8,
        duration_ms: u16,
        cells: Vec<Cell>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EncodeError {
    #[error("payload of {0} bytes exceeds the protocol limit")]
    OversizeFrame(usize),
    #[error("invalid packet contents: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum DecodeError {
    #[error("skipped {0} bytes before a header")]
    Skipped(usize),
    #[error("checksum mismatch: computed {computed:#04x}, received {received:#04x}")]
    ChecksumMismatch { computed: u8, received: u8 },
    #[error("framing error: {0}")]
    Framing(String),
    #[error("stream ended inside a packet ({0} bytes buffered)")]
    Truncated(usize),
}

pub fn pack_pins(pins: &[bool]) -> Vec<u8> {
    pins.chunks(8)
        .map(|c| c.iter().enumerate().fold(0u8, |b, (i, &p)| b | ((p as u8) << (7 - i))))
        .collect()
}

pub fn unpack_pins(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0).collect()
}

pub fn checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |a, b| a ^ b)
}

impl Packet {
    pub fn command(&self) -> Command {
        match self {
            Packet::FullFrame(_) => Command::FullFrame,
            Packet::Partial(_) => Command::Partial,
            Packet::BrailleLine(_) => Command::BrailleLine,
            Packet::Clear => Command::Clear,
            Packet::Pulse { .. } => Command::Pulse,
        }
    }

    pub fn full_frame(frame: &TactileFrame) -> Self {
        Packet::FullFrame(pack_pins(frame.pins()))
    }

    /// Runs covering every pin that differs between `old` and `new`.
    pub fn partial_diff(old: &[bool], new: &[bool]) -> Self {
        let mut runs = Vec::new();
        for row in 0..HEIGHT {
            let mut col = 0;
            while col < WIDTH {
                let i = row * WIDTH + col;
                if old[i] == new[i] {
                    col += 1;
                    continue;
                }
                let start = col;
                while col < WIDTH && old[row * WIDTH + col] != new[row * WIDTH + col] {
                    col += 1;
                }
                runs.push(Run {
                    col: start as u8,
                    row: row as u8,
                    bits: new[row * WIDTH + start..row * WIDTH + col].to_vec(),
                });
            }
        }
        Packet::Partial(runs)
    }

    fn payload(&self) -> Result<Vec<u8>, EncodeError> {
        Ok(match self {
            Packet::FullFrame(bytes) => {
                if bytes.len() != FRAME_BYTES {
                    return Err(EncodeError::Invalid("full frame must be 300 bytes"));
                }
                bytes.clone()
            }
            Packet::Partial(runs) => {
                let mut p = Vec::new();
                for r in runs {
                    let len = r.bits.len();
                    if len == 0 || r.col as usize + len > WIDTH || r.row as usize >= HEIGHT {
                        return Err(EncodeError::Invalid("run outside the frame"));
                    }
                    p.extend([r.col, r.row, len as u8]);
                    p.extend(pack_pins(&r.bits));
                }
                p
            }
            Packet::BrailleLine(cells) => {
                if cells.iter().any(|c| *c > 0x3F) {
                    return Err(EncodeError::Invalid("braille cells use six dots"));
                }
                cells.to_vec()
            }
            Packet::Clear => Vec::new(),
            Packet::Pulse {
                rate_dhz,
                duty_pct,
                duration_ms,
                cells,
            } => {
                if *rate_dhz == 0 || *duty_pct == 0 || *duty_pct >= 100 {
                    return Err(EncodeError::Invalid("pulse needs a rate and a duty in 1..=99"));
                }
                if cells
                    .iter()
                    .any(|c| c.col as usize >= WIDTH || c.row as usize >= HEIGHT)
                {
                    return Err(EncodeError::Invalid("pulse cell outside the frame"));
                }
                let mut p = vec![*rate_dhz, *duty_pct];
                p.extend(duration_ms.to_be_bytes());
                for c in cells {
                    p.extend([c.col, c.row]);
                }
                p
            }
        })
    }

    pub fn encode(&self) -> Result<Vec<u8>, EncodeError> {
        let payload = self.payload()?;
        if payload.len() > MAX_PAYLOAD {
            return Err(EncodeError::OversizeFrame(payload.len()));
        }
        let len = (payload.len() as u16).to_be_bytes();
        let mut out = Vec::with_capacity(payload.len() + 5);
        out.extend([HEADER, self.command() as u8, len[0], len[1]]);
        out.extend(&payload);
        out.push(checksum(&out[1..]));
        Ok(out)
    }

    fn from_payload(cmd: Command, p: &[u8]) -> Result<Self, String> {
        match cmd {
            Command::FullFrame => Ok(Packet::FullFrame(p.to_vec())),
            Command::BrailleLine => {
                if p.iter().any(|c| *c > 0x3F) {
                    return Err("braille cell uses dots 7-8".into());
                }
                let mut cells = [0u8; LINE_CELLS];
                cells.copy_from_slice(p);
                Ok(Packet::BrailleLine(cells))
            }
            Command::Clear => Ok(Packet::Clear),
            Command::Partial => {
                let mut runs = Vec::new();
                let mut i = 0;
                while i < p.len() {
                    let [col, row, len] = p
                        .get(i..i + 3)
                        .ok_or("partial run header cut short")?
                        .try_into()
                        .unwrap();
                    let (col, row, len) = (col as usize, row as usize, len as usize);
                    if len == 0 || col + len > WIDTH || row >= HEIGHT {
                        return Err(format!("run ({col},{row},{len}) outside the frame"));
                    }
                    let nbytes = len.div_ceil(8);
                    let bits = p.get(i + 3..i + 3 + nbytes).ok_or("partial run bits cut short")?;
                    runs.push(Run {
                        col: col as u8,
                        row: row as u8,
                        bits: unpack_pins(bits, len),
                    });
                    i += 3 + nbytes;
                }
                Ok(Packet::Partial(runs))
            }
            Command::Pulse => {
                if p.len() < 4 || !(p.len() - 4).is_multiple_of(2) {
                    return Err("pulse payload size".into());
                }
                let (rate_dhz, duty_pct) = (p[0], p[1]);
                if rate_dhz == 0 || duty_pct == 0 || duty_pct >= 100 {
                    return Err("pulse rate or duty out of range".into());
                }
                let cells = p[4..]
                    .chunks(2)
                    .map(|c| {
                        Cell::in_frame(c[0] as i64, c[1] as i64)
                            .ok_or_else(|| format!("pulse cell ({},{})", c[0], c[1]))
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Packet::Pulse {
                    rate_dhz,
                    duty_pct,
                    duration_ms: u16::from_be_bytes([p[2], p[3]]),
                    cells,
                })
            }
        }
    }
}

fn length_ok(cmd: Command, len: usize) -> bool {
    match cmd {
        Command::FullFrame => len == FRAME_BYTES,
        Command::BrailleLine => len == LINE_CELLS,
        Command::Clear => len == 0,
        Command::Partial => len <= MAX_PAYLOAD,
        Command::Pulse => (4..=MAX_PAYLOAD).contains(&len),
    }
}

/// Incremental decoder. Feed bytes as they arrive and drain results.
#[derive(Debug, Clone, Default)]
pub struct Decoder {
    buf: Vec<u8>,
}

impl Decoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn feed(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next packet or error, or `None` when more bytes are needed.
    pub fn next_item(&mut self) -> Option<Result<Packet, DecodeError>> {
        if self.buf.is_empty() {
            return None;
        }
        if self.buf[0] != HEADER {
            let skip = self.buf.iter().position(|&b| b == HEADER).unwrap_or(self.buf.len());
            self.buf.drain(..skip);
            return Some(Err(DecodeError::Skipped(skip)));
        }
        if self.buf.len() < 4 {
            return None;
        }
        let Some(cmd) = Command::from_byte(self.buf[1]) else {
            let b = self.buf[1];
            self.buf.drain(..1);
            return Some(Err(DecodeError::Framing(format!("unknown command {b:#04x}"))));
        };
        let len = u16::from_be_bytes([self.buf[2], self.buf[3]]) as usize;
        if !length_ok(cmd, len) {
            self.buf.drain(..1);
            return Some(Err(DecodeError::Framing(format!("length {len} invalid for {cmd:?}"))));
        }
        let total = 4 + len + 1;
        if self.buf.len() < total {
            return None;
        }
        let computed = checksum(&self.buf[1..4 + len]);
        let received = self.buf[4 + len];
        if computed != received {
            // Resync one byte on: the real header may sit inside this span.
            self.buf.drain(..1);
            return Some(Err(DecodeError::ChecksumMismatch { computed, received }));
        }
        let result = Packet::from_payload(cmd, &self.buf[4..4 + len]);
        match result {
            Ok(p) => {
                self.buf.drain(..total);
                Some(Ok(p))
            }
            Err(msg) => {
                self.buf.drain(..1);
                Some(Err(DecodeError::Framing(msg)))
            }
        }
    }

    /// Report leftover bytes at end of stream; nothing partial is applied.
    pub fn finish(&mut self) -> Option<DecodeError> {
        let n = self.buf.len();
        self.buf.clear();
        (n > 0).then_some(DecodeError::Truncated(n))
    }
}

impl Iterator for Decoder {
    type Item = Result<Packet, DecodeError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_item()
    }
}

/// Decode a complete byte stream.
pub fn decode_all(bytes: &[u8]) -> (Vec<Packet>, Vec<DecodeError>) {
    let mut d = Decoder::new();
    d.feed(bytes);
    let mut packets = Vec::new();
    let mut errors = Vec::new();
    for item in d.by_ref() {
        match item {
            Ok(p) => packets.push(p),
            Err(e) => errors.push(e),
        }
    }
    errors.extend(d.finish());
    (packets, errors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_down_frame_checksum() {
        let bytes = Packet::FullFrame(vec![0; FRAME_BYTES]).encode().unwrap();
        assert_eq!(bytes.len(), 305);
        assert_eq!(&bytes[..4], &[0xAA, 0x01, 0x01, 0x2C]);
        assert_eq!(*bytes.last().unwrap(), 0x2C);
        assert_eq!(*bytes.last().unwrap(), 0x2C);
    }

    #[test]
    fn leftmost_pin_is_msb() {
        let mut pins = vec![false; WIDTH * HEIGHT];
        pins[0] = true;
        pins[WIDTH + 9] = true;
        let bytes = pack_pins(&pins);
        assert_eq!(bytes[0], 0x80);
        // Row 1, column 9 is bit 69: byte 8, bit 5 from the left.
        assert_eq!(bytes[8], 0x04);
    }

    #[test]
    fn empty_braille_line() {
        let bytes = Packet::BrailleLine([0; LINE_CELLS]).encode().unwrap();
        assert_eq!(&bytes[..4], &[0xAA, 0x03, 0x00, 0x14]);
        assert!(bytes[4..24].iter().all(|b| *b == 0));
    }

    #[test]
    fn single_bit_flip_is_a_checksum_mismatch() {
        let mut bytes = Packet::BrailleLine([1; LINE_CELLS]).encode().unwrap();
        bytes[10] ^= 0x04;
        let (packets, errors) = decode_all(&bytes);
        assert!(packets.is_empty());
        assert!(matches!(errors[0], DecodeError::ChecksumMismatch { .. }));
    }

    #[test]
    fn garbage_then_packet() {
        let mut bytes = vec![0x00, 0x13, 0x37];
        bytes.extend(Packet::Clear.encode().unwrap());
        let (packets, errors) = decode_all(&bytes);
        assert_eq!(packets, vec![Packet::Clear]);
        assert_eq!(errors, vec![DecodeError::Skipped(3)]);
    }

    #[test]
    fn truncated_tail_is_reported() {
        let bytes = Packet::FullFrame(vec![0xFF; FRAME_BYTES]).encode().unwrap();
        let (packets, errors) = decode_all(&bytes[..100]);
        assert!(packets.is_empty());
        assert_eq!(errors, vec![DecodeError::Truncated(100)]);
    }

    #[test]
    fn pulse_round_trip() {
        let p = Packet::Pulse {
            rate_dhz: 20,
            duty_pct: 50,
            duration_ms: 1000,
            cells: vec![Cell::new(3, 4), Cell::new(59, 39)],
        };
        let (packets, errors) = decode_all(&p.encode().unwrap());
        assert!(errors.is_empty());
        assert_eq!(packets, vec![p]);
    }

    #[test]
    fn partial_diff_round_trip() {
        let old = vec![false; WIDTH * HEIGHT];
        let mut new = old.clone();
        for i in [5, 6, 7, 61, 2399] {
            new[i] = true;
        }
        let p = Packet::partial_diff(&old, &new);
        let Packet::Partial(runs) = &p else { unreachable!() };
        assert_eq!(runs.len(), 3);
        assert_eq!(decode_all(&p.encode().unwrap()).0, vec![p]);
    }
}
