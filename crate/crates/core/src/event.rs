//! Event stream types and the CSV / binary event file formats.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sign of a brightness change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Polarity {
    Negative = 0,
    Positive = 1,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Negative, Polarity::Positive];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        self as u8
    }
}

/// One DVS event: pixel, microsecond timestamp and polarity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Event { t, x, y, polarity }
    }
}

/// Sensor dimensions in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SensorSize {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EventFormat {
    #[default]
    Csv,
    Binary,
}

impl FromStr for EventFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(EventFormat::Csv),
            "binary" | "bin" => Ok(EventFormat::Binary),
            other => Err(Error::Config(format!("unknown event format {other:?}"))),
        }
    }
}

/// Size of one binary event record: u64 t, u16 x, u16 y, u8 p.
pub const BINARY_RECORD_LEN: usize = 13;

pub fn load_events(path: impl AsRef<Path>, format: EventFormat, sensor: Option<SensorSize>) -> Result<Vec<Event>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        EventFormat::Csv => {
            let text = std::str::from_utf8(&bytes).map_err(|_| Error::parse(0, "event file is not UTF-8"))?;
            parse_events_csv(text, sensor)
        }
        EventFormat::Binary => decode_events_binary(&bytes, sensor),
    }
}

pub fn write_events(path: impl AsRef<Path>, format: EventFormat, events: &[Event]) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        EventFormat::Csv => events_to_csv(events).into_bytes(),
        EventFormat::Binary => encode_events_binary(events),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn parse_events_csv(text: &str, sensor: Option<SensorSize>) -> Result<Vec<Event>> {
    let mut events = Vec::new();
    let mut checker = StreamChecker::new(sensor);
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let n = i + 1;
        let mut fields = line.split(',').map(str::trim);
        let mut next = |name: &str| {
            fields
                .next()
                .ok_or_else(|| Error::parse(n, format!("missing field {name}")))
        };
        let t: u64 = next("t_us")?.parse().map_err(|_| Error::parse(n, "invalid t_us"))?;
        let x: u32 = next("x")?.parse().map_err(|_| Error::parse(n, "invalid x"))?;
        let y: u32 = next("y")?.parse().map_err(|_| Error::parse(n, "invalid y"))?;
        let p: u8 = next("p")?.parse().map_err(|_| Error::parse(n, "invalid p"))?;
        if fields.next().is_some() {
            return Err(Error::parse(n, "too many fields"));
        }
        let polarity = Polarity::from_bit(p).ok_or_else(|| Error::parse(n, "polarity must be 0 or 1"))?;
        let record = events.len() + 1;
        checker.check(record, t, x, y)?;
        events.push(Event::new(t, x as u16, y as u16, polarity));
    }
    Ok(events)
}

pub fn events_to_csv(events: &[Event]) -> String {
    use std::fmt::Write;
    let mut s = String::with_capacity(events.len() * 16);
    for e in events {
        let _ = writeln!(s, "{},{},{},{}", e.t, e.x, e.y, e.polarity.bit());
    }
    s
}

pub fn decode_events_binary(bytes: &[u8], sensor: Option<SensorSize>) -> Result<Vec<Event>> {
    if !bytes.len().is_multiple_of(BINARY_RECORD_LEN) {
        return Err(Error::parse(
            bytes.len() / BINARY_RECORD_LEN + 1,
            format!("truncated record: {} trailing bytes", bytes.len() % BINARY_RECORD_LEN),
        ));
    }
    let mut checker = StreamChecker::new(sensor);
    let mut events = Vec::with_capacity(bytes.len() / BINARY_RECORD_LEN);
    for (i, rec) in bytes.chunks_exact(BINARY_RECORD_LEN).enumerate() {
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let polarity = Polarity::from_bit(rec[12]).ok_or_else(|| Error::parse(i + 1, "polarity must be 0 or 1"))?;
        checker.check(i + 1, t, x as u32, y as u32)?;
        events.push(Event::new(t, x, y, polarity));
    }
    Ok(events)
}

pub fn encode_events_binary(events: &[Event]) -> Vec<u8> {
    let mut out = Vec::with_capacity(events.len() * BINARY_RECORD_LEN);
    for e in events {
        out.extend_from_slice(&e.t.to_le_bytes());
        out.extend_from_slice(&e.x.to_le_bytes());
        out.extend_from_slice(&e.y.to_le_bytes());
        out.push(e.polarity.bit());
    }
    out
}

struct StreamChecker {
    sensor: Option<SensorSize>,
    previous: Option<u64>,
}

impl StreamChecker {
    fn new(sensor: Option<SensorSize>) -> Self {
        StreamChecker { sensor, previous: None }
    }

    fn check(&mut self, record: usize, t: u64, x: u32, y: u32) -> Result<()> {
        if let Some(prev) = self.previous {
            if t < prev {
                return Err(Error::Order {
                    record,
                    t,
                    previous: prev,
                });
            }
        }
        match self.sensor {
            Some(s) if x >= s.width || y >= s.height => return Err(Error::Bounds { record, x, y }),
            None if x > u16::MAX as u32 || y > u16::MAX as u32 => return Err(Error::Bounds { record, x, y }),
            _ => {}
        }
        self.previous = Some(t);
        Ok(())
    }
}
