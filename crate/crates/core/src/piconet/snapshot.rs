//! Plain-text piconet state for fixtures.
//!
//! ```text
//! simbt-snapshot 1
//! slot 1600
//! clock 0x0000c80
//! device master addr=00:00:fb:fd:7f:d1 clock=0x0000c80 offset=0 discoverable=1 connectable=1 drift_ppm=0 map=uuu...
//! device slave addr=...
//! ```
//!
//! Maps are 79 characters, channel 0 first: `u` unknown, `g` good, `b` bad.

use std::fmt::Write as _;

use thiserror::Error;

use super::device::Device;
use super::link::Piconet;
use crate::baseband::{AfhMap, BdAddr, ChannelClass, ClockState, NUM_CHANNELS};

#[derive(Clone, Debug, PartialEq)]
pub struct DeviceSnapshot {
    pub addr: BdAddr,
    pub clock: ClockState,
    pub offset: i64,
    pub discoverable: bool,
    pub connectable: bool,
    pub drift_ppm: f64,
    pub map: AfhMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub slot: u64,
    pub clock: ClockState,
    pub master: DeviceSnapshot,
    pub slave: DeviceSnapshot,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("snapshot line {line}: {msg}")]
pub struct SnapshotError {
    pub line: usize,
    pub msg: String,
}

impl DeviceSnapshot {
    pub fn of(d: &Device) -> Self {
        Self {
            addr: d.addr,
            clock: d.clock,
            offset: d.clock_offset_to_master,
            discoverable: d.discoverable,
            connectable: d.connectable,
            drift_ppm: d.drift_ppm,
            map: d.afh_map,
        }
    }
}

pub fn map_to_letters(map: &AfhMap) -> String {
    map.entries()
        .iter()
        .map(|c| match c {
            ChannelClass::Unknown => 'u',
            ChannelClass::Good => 'g',
            ChannelClass::Bad => 'b',
        })
        .collect()
}

pub fn map_from_letters(s: &str) -> Option<AfhMap> {
    if s.len() != NUM_CHANNELS {
        return None;
    }
    let mut e = [ChannelClass::Unknown; NUM_CHANNELS];
    for (slot, c) in e.iter_mut().zip(s.chars()) {
        *slot = match c {
            'u' => ChannelClass::Unknown,
            'g' => ChannelClass::Good,
            'b' => ChannelClass::Bad,
            _ => return None,
        };
    }
    AfhMap::from_entries(e).ok()
}

impl Snapshot {
    pub fn of(net: &Piconet) -> Self {
        Self {
            slot: net.slot(),
            clock: net.clock(),
            master: DeviceSnapshot::of(&net.master),
            slave: DeviceSnapshot::of(&net.slave),
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        writeln!(s, "simbt-snapshot 1").unwrap();
        writeln!(s, "slot {}", self.slot).unwrap();
        writeln!(s, "clock 0x{:07x}", self.clock.raw()).unwrap();
        for (name, d) in [("master", &self.master), ("slave", &self.slave)] {
            writeln!(
                s,
                "device {name} addr={} clock=0x{:07x} offset={} discoverable={} connectable={} drift_ppm={} map={}",
                d.addr,
                d.clock.raw(),
                d.offset,
                d.discoverable as u8,
                d.connectable as u8,
                d.drift_ppm,
                map_to_letters(&d.map)
            )
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self, SnapshotError> {
        let mut slot = None;
        let mut clock = None;
        let mut master = None;
        let mut slave = None;
        for (i, line) in text.lines().enumerate() {
            let err = |msg: &str| SnapshotError {
                line: i + 1,
                msg: msg.to_string(),
            };
            let mut words = line.split_whitespace();
            match words.next() {
                None => continue,
                Some("simbt-snapshot") => {
                    if words.next() != Some("1") {
                        return Err(err("unsupported version"));
                    }
                }
                Some("slot") => slot = words.next().and_then(|w| w.parse().ok()).or(None),
                Some("clock") => clock = words.next().and_then(parse_clock),
                Some("device") => {
                    let role = words.next().ok_or_else(|| err("missing role"))?;
                    let d = parse_device(words).ok_or_else(|| err("bad device record"))?;
                    match role {
                        "master" => master = Some(d),
                        "slave" => slave = Some(d),
                        _ => return Err(err("unknown role")),
                    }
                }
                Some(_) => return Err(err("unknown record")),
            }
        }
        let missing = |what: &str| SnapshotError {
            line: 0,
            msg: format!("missing {what}"),
        };
        Ok(Self {
            slot: slot.ok_or_else(|| missing("slot"))?,
            clock: clock.ok_or_else(|| missing("clock"))?,
            master: master.ok_or_else(|| missing("master"))?,
            slave: slave.ok_or_else(|| missing("slave"))?,
        })
    }
}

fn parse_clock(s: &str) -> Option<ClockState> {
    let v = u32::from_str_radix(s.strip_prefix("0x")?, 16).ok()?;
    Some(ClockState::new(v))
}

fn parse_device<'a>(words: impl Iterator<Item = &'a str>) -> Option<DeviceSnapshot> {
    let mut d = DeviceSnapshot {
        addr: BdAddr::new(0, 0, 0),
        clock: ClockState::new(0),
        offset: 0,
        discoverable: true,
        connectable: true,
        drift_ppm: 0.0,
        map: AfhMap::all_unknown(),
    };
    for w in words {
        let (k, v) = w.split_once('=')?;
        match k {
            "addr" => d.addr = v.parse().ok()?,
            "clock" => d.clock = parse_clock(v)?,
            "offset" => d.offset = v.parse().ok()?,
            "discoverable" => d.discoverable = v == "1",
            "connectable" => d.connectable = v == "1",
            "drift_ppm" => d.drift_ppm = v.parse().ok()?,
            "map" => d.map = map_from_letters(v)?,
            _ => return None,
        }
    }
    Some(d)
}
