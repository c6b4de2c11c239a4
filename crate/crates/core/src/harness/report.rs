//! Results table and summary.

use std::fmt::Write;

use crate::sniffer::RunMetrics;

pub const CSV_HEADER: &str = "scenario,run,start_time,clk27_guesses,clk27_acquired,time_to_clk27_mmss,\
time_to_clk27_s,first_decode,time_to_decode_mmss,packets_decoded,failed_decodes,null_packets,poll_packets,\
good_data_packets,good_data_bytes";

fn mmss(s: u64) -> String {
    format!("{:02}:{:02}", s / 60, s % 60)
}

/// One table row. Runs that never acquired read `fail` with zero counts.
pub fn csv_row(scenario: &str, run: u32, m: &RunMetrics) -> String {
    let m = m.clone().normalized();
    let mut s = format!("{scenario},{run},{},{},", m.start_time, m.clk27_guesses);
    match m.clk27_acquired {
        Some(t) => {
            let d = t.saturating_sub(m.start_time);
            let _ = write!(s, "{t},{},{d},", mmss(d));
        }
        None => s.push_str("fail,,,"),
    }
    match m.first_decode {
        Some(t) => {
            let _ = write!(s, "{t},{},", mmss(t.saturating_sub(m.start_time)));
        }
        None => s.push_str("fail,,"),
    }
    let _ = write!(
        s,
        "{},{},{},{},{},{}",
        m.packets_decoded, m.failed_decodes, m.null_packets, m.poll_packets, m.good_data_packets, m.good_data_bytes
    );
    s
}

pub fn render_csv(rows: &[(String, u32, RunMetrics)]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for (name, run, m) in rows {
        out.push_str(&csv_row(name, *run, m));
        out.push('\n');
    }
    out
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub runs: usize,
    pub acquisitions: usize,
    pub success_rate: f64,
    pub median_time_to_clock: Option<f64>,
    /// (NULL + POLL) / decoded, over all runs.
    pub null_poll_fraction: Option<f64>,
    /// Good data packets / decoded.
    pub good_data_fraction: Option<f64>,
    pub total_decoded: u64,
    pub total_failed: u64,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

pub fn summarize(metrics: &[RunMetrics]) -> Summary {
    let runs = metrics.len();
    let acquisitions = metrics.iter().filter(|m| !m.is_fail()).count();
    let decoded: u64 = metrics.iter().map(|m| m.packets_decoded).sum();
    let np: u64 = metrics.iter().map(|m| m.null_packets + m.poll_packets).sum();
    let good: u64 = metrics.iter().map(|m| m.good_data_packets).sum();
    Summary {
        runs,
        acquisitions,
        success_rate: if runs == 0 {
            0.0
        } else {
            acquisitions as f64 / runs as f64
        },
        median_time_to_clock: median(
            metrics
                .iter()
                .filter_map(|m| m.time_to_clock())
                .map(|t| t as f64)
                .collect(),
        ),
        null_poll_fraction: (decoded > 0).then(|| np as f64 / decoded as f64),
        good_data_fraction: (decoded > 0).then(|| good as f64 / decoded as f64),
        total_decoded: decoded,
        total_failed: metrics.iter().map(|m| m.failed_decodes).sum(),
    }
}

fn pct(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |f| format!("{:.2}%", 100.0 * f))
}

impl Summary {
    pub fn render(&self) -> String {
        let med = self
            .median_time_to_clock
            .map_or("n/a".to_string(), |m| format!("{m:.1} s"));
        format!(
            "runs: {}\nacquired: {}\nsuccess rate: {:.2}\nmedian time to CLK27: {}\ndecoded: {}\nfailed: {}\nNULL/POLL share: {}\ngood data share: {}\n",
            self.runs,
            self.acquisitions,
            self.success_rate,
            med,
            self.total_decoded,
            self.total_failed,
            pct(self.null_poll_fraction),
            pct(self.good_data_fraction),
        )
    }
}
