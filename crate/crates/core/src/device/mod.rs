//! Pin display protocol, a simulated device, and a serial link.

pub mod packet;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use packet::{decode_all, Command, DecodeError, Decoder, EncodeError, Packet, Run, FRAME_BYTES, HEADER};

use crate::render::{Cell, HEIGHT, LINE_CELLS, WIDTH};

pub const BAUD: u32 = 115_200;
/// Bits on the wire per byte at 8-N-1.
pub const BITS_PER_BYTE: u32 = 10;

/// Transmission time of `bytes` at the serial rate, in milliseconds.
pub fn transmit_ms(bytes: usize) -> f64 {
    bytes as f64 * BITS_PER_BYTE as f64 * 1000.0 / BAUD as f64
}

#[derive(Debug, thiserror::Error)]
pub enum DeviceError {
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error("serial write failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Anything that accepts packets: the simulator or real hardware.
pub trait Device {
    fn send(&mut self, t: u64, packet: &Packet) -> Result<(), DeviceError>;
}

/// One pin toggle scheduled by a pulse command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggle {
    pub t: u64,
    pub cell: Cell,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub t: u64,
    pub packet: Packet,
    pub bytes: usize,
    /// When the last byte has crossed the link.
    pub done_at: f64,
}

/// Bit-faithful display model. Pin state is always the cumulative effect of
/// the write log; pulses only add toggles to the timeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulatedDevice {
    pins: Vec<bool>,
    braille: [u8; LINE_CELLS],
    pub log: Vec<LogEntry>,
    pub timeline: Vec<Toggle>,
    /// Per-packet latency override in ms; `None` uses the serial rate.
    pub fixed_latency_ms: Option<f64>,
}

impl Default for SimulatedDevice {
    fn default() -> Self {
        Self {
            pins: vec![false; WIDTH * HEIGHT],
            braille: [0; LINE_CELLS],
            log: Vec::new(),
            timeline: Vec::new(),
            fixed_latency_ms: None,
        }
    }
}

impl SimulatedDevice {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pins(&self) -> &[bool] {
        &self.pins
    }

    pub fn pin(&self, cell: Cell) -> bool {
        self.pins[cell.row as usize * WIDTH + cell.col as usize]
    }

    pub fn braille(&self) -> &[u8; LINE_CELLS] {
        &self.braille
    }

    /// Pins as seen at time `t`, with pulse toggles up to `t` applied on top.
    pub fn pins_at(&self, t: u64) -> Vec<bool> {
        let mut pins = self.pins.clone();
        for tog in self.timeline.iter().filter(|tog| tog.t <= t) {
            let i = tog.cell.row as usize * WIDTH + tog.cell.col as usize;
            pins[i] = !pins[i];
        }
        pins
    }

    /// Apply a decoded packet at time `t`.
    pub fn apply(&mut self, t: u64, packet: &Packet) {
        match packet {
            Packet::FullFrame(bytes) => self.pins = packet::unpack_pins(bytes, WIDTH * HEIGHT),
            Packet::Partial(runs) => {
                for r in runs {
                    let base = r.row as usize * WIDTH + r.col as usize;
                    self.pins[base..base + r.bits.len()].copy_from_slice(&r.bits);
                }
            }
            Packet::BrailleLine(cells) => self.braille = *cells,
            Packet::Clear => {
                self.pins.iter_mut().for_each(|p| *p = false);
                self.braille = [0; LINE_CELLS];
                self.timeline.retain(|tog| tog.t < t);
                // A pulse cut short leaves cells dropped; restore them now.
                let mut odd: std::collections::BTreeSet<Cell> = std::collections::BTreeSet::new();
                for tog in &self.timeline {
                    if !odd.remove(&tog.cell) {
                        odd.insert(tog.cell);
                    }
                }
                self.timeline.extend(odd.into_iter().map(|cell| Toggle { t, cell }));
            }
            Packet::Pulse {
                rate_dhz,
                duty_pct,
                duration_ms,
                cells,
            } => self
                .timeline
                .extend(pulse_toggles(t, *rate_dhz, *duty_pct, *duration_ms, cells)),
        }
        let bytes = packet.encode().map_or(0, |b| b.len());
        let latency = self.fixed_latency_ms.unwrap_or_else(|| transmit_ms(bytes));
        let start = self.log.last().map_or(t as f64, |e| e.done_at.max(t as f64));
        self.log.push(LogEntry {
            t,
            packet: packet.clone(),
            bytes,
            done_at: start + latency,
        });
    }

    /// Decode a byte stream and apply every valid packet at `t`.
    pub fn receive(&mut self, t: u64, bytes: &[u8]) -> Vec<DecodeError> {
        let (packets, errors) = decode_all(bytes);
        for p in &packets {
            self.apply(t, p);
        }
        errors
    }

    /// Short hash of pins and Braille line, for replay logs.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(packet::pack_pins(&self.pins));
        h.update(self.braille);
        hex::encode(&h.finalize()[..8])
    }

    /// Grid dump of the current pin state, `#` raised.
    pub fn grid_text(&self) -> String {
        let mut s = String::new();
        for row in self.pins.chunks(WIDTH) {
            s.extend(row.iter().map(|&p| if p { '#' } else { '.' }));
            s.push('\n');
        }
        s
    }
}

impl Device for SimulatedDevice {
    fn send(&mut self, t: u64, packet: &Packet) -> Result<(), DeviceError> {
        packet.encode()?;
        self.apply(t, packet);
        Ok(())
    }
}

/// Pin toggles for a pulse starting at `t0`. Each period a cell drops at the
/// period start and comes back after the off share, so a 2 Hz, 50% pulse
/// over 1 s toggles each cell 4 times and leaves it as it was.
pub fn pulse_toggles(t0: u64, rate_dhz: u8, duty_pct: u8, duration_ms: u16, cells: &[Cell]) -> Vec<Toggle> {
    if rate_dhz == 0 {
        return Vec::new();
    }
    let period = 10_000.0 / rate_dhz as f64;
    let off = period * (100 - duty_pct.min(100)) as f64 / 100.0;
    let mut times = Vec::new();
    let mut k = 0u64;
    loop {
        let start = k as f64 * period;
        if start >= duration_ms as f64 {
            break;
        }
        times.push(start);
        // The pin comes back even when the pulse ends mid-period.
        times.push((start + off).min(duration_ms as f64));
        k += 1;
    }
    let mut out = Vec::new();
    for t in times {
        for &cell in cells {
            out.push(Toggle {
                t: t0 + t.round() as u64,
                cell,
            });
        }
    }
    out
}

/// Pulse packet for a highlight command.
pub fn pulse_packet(cells: &[Cell], rate_hz: f64, duration_ms: u64) -> Packet {
    Packet::Pulse {
        rate_dhz: (rate_hz * 10.0).round().clamp(1.0, 255.0) as u8,
        duty_pct: 50,
        duration_ms: duration_ms.min(u16::MAX as u64) as u16,
        cells: cells.to_vec(),
    }
}

/// Serial settings for hardware: 115200 baud, 8 data bits, no parity, 1 stop bit.
pub const SERIAL_SETTINGS: &str = "115200-8-N-1";

/// Writes encoded packets to any byte sink, e.g. an opened serial port.
#[derive(Debug)]
pub struct SerialLink<W: Write> {
    port: W,
    pub bytes_written: usize,
}

impl<W: Write> SerialLink<W> {
    pub fn new(port: W) -> Self {
        Self { port, bytes_written: 0 }
    }

    pub fn into_inner(self) -> W {
        self.port
    }
}

impl<W: Write> Device for SerialLink<W> {
    fn send(&mut self, _t: u64, packet: &Packet) -> Result<(), DeviceError> {
        let bytes = packet.encode()?;
        self.port.write_all(&bytes)?;
        self.port.flush()?;
        self.bytes_written += bytes.len();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_frame_takes_about_27ms() {
        let ms = transmit_ms(307);
        assert!((ms - 26.65).abs() < 0.01, "{ms}");
    }

    #[test]
    fn full_frame_then_clear() {
        let mut d = SimulatedDevice::new();
        d.apply(0, &Packet::FullFrame(vec![0xFF; FRAME_BYTES]));
        assert!(d.pins().iter().all(|p| *p));
        d.apply(1, &Packet::Clear);
        assert!(d.pins().iter().all(|p| !*p));
    }

    #[test]
    fn partial_changes_only_its_runs() {
        let mut d = SimulatedDevice::new();
        d.apply(0, &Packet::FullFrame(vec![0xAA; FRAME_BYTES]));
        let before = d.pins().to_vec();
        d.apply(
            1,
            &Packet::Partial(vec![Run {
                col: 10,
                row: 3,
                bits: vec![true; 4],
            }]),
        );
        for (i, (a, b)) in before.iter().zip(d.pins()).enumerate() {
            let in_run = i / WIDTH == 3 && (10..14).contains(&(i % WIDTH));
            if in_run {
                assert!(*b);
            } else {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn two_hz_for_one_second_is_four_toggles() {
        let t = pulse_toggles(1000, 20, 50, 1000, &[Cell::new(1, 1)]);
        let times: Vec<u64> = t.iter().map(|x| x.t).collect();
        assert_eq!(times, [1000, 1250, 1500, 1750]);
        let mut d = SimulatedDevice::new();
        d.apply(1000, &pulse_packet(&[Cell::new(1, 1)], 2.0, 1000));
        assert_eq!(d.timeline.len(), 4);
        assert!(d.pins_at(1100)[WIDTH + 1]);
        assert!(!d.pins_at(1300)[WIDTH + 1]);
        assert!(!d.pins_at(2000)[WIDTH + 1]);
    }

    #[test]
    fn serial_link_writes_encoded_bytes() {
        let mut link = SerialLink::new(Vec::new());
        link.send(0, &Packet::Clear).unwrap();
        assert_eq!(link.into_inner(), vec![0xAA, 0x04, 0x00, 0x00, 0x04]);
    }
}
