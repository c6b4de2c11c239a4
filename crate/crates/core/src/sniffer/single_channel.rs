//! How much of a pairing one fixed receiver sees.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::attacks::Pin;
use crate::baseband::{AfhMap, BdAddr, ClockState};
use crate::piconet::{run_legacy_pairing, Device, Piconet, PiconetConfig, TrafficProfile};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleChannelReport {
    pub runs: u64,
    /// Runs where at least one of the 7 messages went out on the channel.
    pub runs_with_any: u64,
    pub runs_with_all: u64,
    pub packets_seen: u64,
    /// Pairings that did not complete; excluded from the counts above.
    pub failed_runs: u64,
}

impl SingleChannelReport {
    pub fn any_fraction(&self) -> f64 {
        self.runs_with_any as f64 / self.runs.max(1) as f64
    }
}

/// 1 - (1 - 1/n)^7, the chance that at least one of 7 independent uniform
/// hops over `n` channels lands on a given one.
pub fn analytic_any(n: u32) -> f64 {
    1.0 - (1.0 - 1.0 / n as f64).powi(7)
}

/// 7/n, the union bound of the same event.
pub fn union_bound(n: u32) -> f64 {
    7.0 / n as f64
}

fn run_seed(seed: u64, i: u64) -> u64 {
    seed ^ i.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs `runs` pairings with the master using `map` (basic hopping when
/// `None`) and counts first transmissions on `channel`.
pub fn single_channel_probability_check(runs: u64, channel: u8, map: Option<AfhMap>, seed: u64) -> SingleChannelReport {
    let per_run: Vec<Option<u32>> = (0..runs)
        .into_par_iter()
        .map(|i| {
            let s = run_seed(seed, i);
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let a = BdAddr::from_u64(rng.gen::<u64>() & 0xffff_ffff_ffff);
            let b = BdAddr::from_u64(rng.gen::<u64>() & 0xffff_ffff_ffff);
            let mut master = Device::new(a, ClockState::new(rng.gen()));
            if let Some(m) = map {
                master.afh_map = m;
            }
            let slave = Device::new(b, ClockState::new(rng.gen()));
            let cfg = PiconetConfig {
                traffic: TrafficProfile::pairing_only(),
                lmp_gap: (2, 24),
                seed: s,
                ..PiconetConfig::default()
            };
            let mut net = Piconet::connected(master, slave, cfg);
            let pin = Pin::from_value(rng.gen_range(0..10_000), 4).expect("4 digits");
            let session = run_legacy_pairing(&mut net, pin, pin, 20_000).ok()?;
            Some(session.air.iter().filter(|p| p.channel == channel).count() as u32)
        })
        .collect();
    let mut r = SingleChannelReport {
        runs: 0,
        runs_with_any: 0,
        runs_with_all: 0,
        packets_seen: 0,
        failed_runs: 0,
    };
    for seen in per_run {
        match seen {
            None => r.failed_runs += 1,
            Some(k) => {
                r.runs += 1;
                r.runs_with_any += (k > 0) as u64;
                r.runs_with_all += (k >= 7) as u64;
                r.packets_seen += k as u64;
            }
        }
    }
    r
}
