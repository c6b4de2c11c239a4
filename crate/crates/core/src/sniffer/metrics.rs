/// Per-run capture figures, one row of the results table.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunMetrics {
    pub start_time: u64,
    pub clk27_guesses: u32,
    /// Systime of the first "Acquired" line.
    pub clk27_acquired: Option<u64>,
    pub first_decode: Option<u64>,
    /// Every decoded packet, NULL and POLL included.
    pub packets_decoded: u64,
    /// Recognised as the piconet's but not decoded, EDR included.
    pub failed_decodes: u64,
    pub null_packets: u64,
    pub poll_packets: u64,
    pub good_data_packets: u64,
    pub good_data_bytes: u64,
}

impl RunMetrics {
    pub fn is_fail(&self) -> bool {
        self.clk27_acquired.is_none()
    }

    pub fn time_to_clock(&self) -> Option<u64> {
        self.clk27_acquired.map(|t| t.saturating_sub(self.start_time))
    }

    /// NULL and POLL share of decoded packets.
    pub fn null_poll_fraction(&self) -> Option<f64> {
        (self.packets_decoded > 0).then(|| (self.null_packets + self.poll_packets) as f64 / self.packets_decoded as f64)
    }

    /// Zeroes the decode columns of a run that never acquired.
    pub fn normalized(mut self) -> Self {
        if self.is_fail() {
            self.first_decode = None;
            self.packets_decoded = 0;
            self.failed_decodes = 0;
            self.null_packets = 0;
            self.poll_packets = 0;
            self.good_data_packets = 0;
            self.good_data_bytes = 0;
        }
        self
    }
}
