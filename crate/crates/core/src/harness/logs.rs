//! Reading capture logs back, and the channel map line format.

use thiserror::Error;

use crate::baseband::{AfhMap, NUM_CHANNELS};
use crate::sniffer::{afh_map_bits, RunMetrics};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParsedConsole {
    pub metrics: RunMetrics,
    /// `line N: ...` for every line that could not be read.
    pub errors: Vec<String>,
}

fn systime(line: &str) -> Option<(u64, &str)> {
    let rest = line.strip_prefix("systime=")?;
    let (t, body) = rest.split_once(' ').unwrap_or((rest, ""));
    let secs = t.split('.').next()?.parse().ok()?;
    Some((secs, body))
}

fn field<'a>(body: &'a str, key: &str) -> Option<&'a str> {
    body.split_whitespace().find_map(|w| w.strip_prefix(key))
}

/// Tallies a capture log. Lines that do not parse are skipped and noted.
pub fn parse_console(log: &str) -> ParsedConsole {
    let mut out = ParsedConsole::default();
    let mut m = RunMetrics::default();
    let mut started = false;
    for (i, line) in log.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((t, body)) = systime(line) else {
            out.errors.push(format!("line {}: no systime", i + 1));
            continue;
        };
        if body.contains("capture start") {
            if !started {
                m.start_time = t;
                started = true;
            }
        } else if body.ends_with("initial CLK1-27 candidates") {
            m.clk27_guesses += 1;
        } else if body.starts_with("Acquired CLK1-27") {
            m.clk27_acquired.get_or_insert(t);
        } else if body.contains(" decoded ") {
            let ty = field(body, "type=");
            let len = field(body, "len=").and_then(|v| v.parse::<u64>().ok());
            let (Some(ty), Some(len)) = (ty, len) else {
                out.errors
                    .push(format!("line {}: decoded line without type/len", i + 1));
                continue;
            };
            m.packets_decoded += 1;
            m.first_decode.get_or_insert(t);
            match ty {
                "NULL" => m.null_packets += 1,
                "POLL" => m.poll_packets += 1,
                "DM1" | "DH1" | "DH3" | "DH5" => {
                    m.good_data_packets += 1;
                    m.good_data_bytes += len;
                }
                _ => {}
            }
        } else if body.ends_with(" failed") || body.ends_with(" failed (EDR)") {
            m.failed_decodes += 1;
        }
    }
    if !started {
        out.errors.push("no capture start line".to_string());
    }
    out.metrics = m.normalized();
    out
}

/// `<timestamp> <79 chars>`, `1` for Bad, channel 0 first.
pub fn export_afh_map(map: &AfhMap, timestamp: &str) -> String {
    format!("{timestamp} {}", afh_map_bits(map))
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum AfhLineError {
    #[error("expected `<timestamp> <79 bits>`")]
    Shape,
    #[error("map must hold 79 characters of 0/1, got {0}")]
    Bits(usize),
    #[error("fewer than 20 usable channels")]
    TooFewUsable,
}

/// Inverse of [`export_afh_map`]. Non-Bad entries come back Unknown.
pub fn parse_afh_line(line: &str) -> Result<(String, AfhMap), AfhLineError> {
    let mut it = line.split_whitespace();
    let (Some(ts), Some(bits), None) = (it.next(), it.next(), it.next()) else {
        return Err(AfhLineError::Shape);
    };
    if bits.len() != NUM_CHANNELS || !bits.chars().all(|c| c == '0' || c == '1') {
        return Err(AfhLineError::Bits(bits.len()));
    }
    let bad = bits
        .chars()
        .enumerate()
        .filter(|(_, c)| *c == '1')
        .map(|(i, _)| i as u8);
    let map = AfhMap::with_bad(bad).map_err(|_| AfhLineError::TooFewUsable)?;
    Ok((ts.to_string(), map))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_line() {
        let m = AfhMap::with_bad(24..=45).unwrap();
        let l = export_afh_map(&m, "1508069381");
        assert_eq!(l.len(), 10 + 1 + 79);
        assert_eq!(&l[11 + 24..11 + 46], "1".repeat(22));
        let (ts, back) = parse_afh_line(&l).unwrap();
        assert_eq!(ts, "1508069381");
        assert_eq!(back.bad_channels(), m.bad_channels());
        assert_eq!(parse_afh_line("1 0101"), Err(AfhLineError::Bits(4)));
    }

    #[test]
    fn fail_log() {
        let log = "systime=10 ubertooth-rx capture start LAP=fd7fd1 UAP=fb ch=39\n\
                   systime=11 26408 initial CLK1-27 candidates\n\
                   systime=190 capture end\n";
        let p = parse_console(log);
        assert!(p.errors.is_empty());
        assert_eq!(p.metrics.clk27_guesses, 1);
        assert!(p.metrics.is_fail());
    }

    #[test]
    fn garbage_is_annotated() {
        let p = parse_console("hello\nsystime=5 ch=1 decoded type=DH1\n");
        assert_eq!(p.errors.len(), 3);
    }
}
