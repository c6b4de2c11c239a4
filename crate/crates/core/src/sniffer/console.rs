use std::fmt::Write;

/// Line-oriented capture log. Times are the sniffer's own clock.
#[derive(Clone, Debug, Default)]
pub struct Console {
    start_epoch: u64,
    hires: bool,
    text: String,
}

impl Console {
    pub fn new(start_epoch: u64, hires: bool) -> Self {
        Self {
            start_epoch,
            hires,
            text: String::new(),
        }
    }

    /// Whole seconds since the Unix epoch at local time `local_us`.
    pub fn seconds(&self, local_us: f64) -> u64 {
        self.start_epoch + (local_us.max(0.0) / 1e6).floor() as u64
    }

    pub fn systime(&self, local_us: f64) -> String {
        let s = self.seconds(local_us);
        if self.hires {
            let frac = (local_us.max(0.0) as u64) % 1_000_000;
            format!("{s}.{frac:06}")
        } else {
            s.to_string()
        }
    }

    pub fn line(&mut self, local_us: f64, body: &str) {
        let t = self.systime(local_us);
        let _ = writeln!(self.text, "systime={t} {body}");
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn into_text(self) -> String {
        self.text
    }
}

/// 79 characters, `1` for Bad, channel 0 first.
pub fn afh_map_bits(map: &crate::baseband::AfhMap) -> String {
    map.entries()
        .iter()
        .map(|c| {
            if *c == crate::baseband::ChannelClass::Bad {
                '1'
            } else {
                '0'
            }
        })
        .collect()
}

pub fn hex_prefix(data: &[u8], max: usize) -> String {
    data.iter().take(max).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}
