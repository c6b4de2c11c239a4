use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use super::logs::{parse_console, ParsedConsole};
use super::report::{render_csv, summarize, Summary};
use super::scenario::{RfCondition, ScenarioConfig, ScenarioError};
use crate::baseband::ClockState;
use crate::medium::{SpectrumRecorder, WifiConfig, WifiInterferer, WifiMode};
use crate::piconet::{Device, LinkCounters, Piconet, PiconetConfig};
use crate::sim::World;
use crate::sniffer::{RunMetrics, Sniffer, SnifferConfig, SnifferMode};
use crate::SLOTS_PER_SECOND;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ScenarioError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Input(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// 1-based.
    pub index: u32,
    pub seed: u64,
    pub console: String,
    pub afhmap: String,
    pub spectrum: String,
    /// Read back from `console`.
    pub parsed: ParsedConsole,
    /// Kept by the sniffer while running.
    pub live_metrics: RunMetrics,
    pub counters: LinkCounters,
    pub master_bad: Vec<u8>,
    /// Wi-Fi throughput per second of simulation, empty without Wi-Fi.
    pub wifi_throughput: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ScenarioOutput {
    pub name: String,
    pub runs: Vec<RunOutput>,
    pub csv: String,
    pub summary: Summary,
}

/// Seed of run `index` (1-based) of a scenario.
pub fn run_seed(seed: u64, index: u32) -> u64 {
    let mut x = seed ^ (index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Builds everything from scratch and runs one bounded capture.
pub fn run_once(cfg: &ScenarioConfig, index: u32) -> RunOutput {
    let seed = run_seed(cfg.seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let master = Device::new(cfg.master_addr, ClockState::new(rng.gen()));
    let slave = Device::new(cfg.slave_addr, ClockState::new(rng.gen()));
    let link = PiconetConfig {
        kernel: cfg.kernel,
        traffic: cfg.traffic_profile(),
        afh: cfg.afh_policy(),
        seed: rng.gen(),
        ..PiconetConfig::default()
    };
    let net = Piconet::connected(master, slave, link);
    let wifi_cfg = |mode| WifiConfig {
        channel: cfg.wifi_channel,
        power_dbm: cfg.wifi_power_dbm,
        mode,
        ..WifiConfig::default()
    };
    let wifi_seed: u64 = rng.gen();
    let (bt_start, wifi) = match cfg.rf {
        RfCondition::Quiet => (0, None),
        RfCondition::BusyRf => (
            SLOTS_PER_SECOND,
            Some(WifiInterferer::new(wifi_cfg(WifiMode::Saturating), wifi_seed, 0)),
        ),
        RfCondition::BusyAfterStart { ramp_delay_s } => (
            0,
            Some(WifiInterferer::new(
                wifi_cfg(WifiMode::Ramping),
                wifi_seed,
                ramp_delay_s * SLOTS_PER_SECOND,
            )),
        ),
    };
    let mut world = World::new(net, bt_start).with_spectrum(SpectrumRecorder::new(0, cfg.spectrum_sweeps));
    if let Some(w) = wifi {
        world = world.with_wifi(w);
    }
    let drift = if cfg.sniffer_drift_ppm == 0.0 {
        0.0
    } else {
        rng.gen_range(-cfg.sniffer_drift_ppm..=cfg.sniffer_drift_ppm)
    };
    let sc = SnifferConfig {
        mode: SnifferMode::Follow,
        known_lap: Some(cfg.master_addr.lap),
        known_uap: cfg.uap_known.then_some(cfg.master_addr.uap),
        time_bound_s: cfg.time_bound_s,
        kernel: cfg.kernel,
        acquisition_channel: cfg.acquisition_channel,
        drift_ppm: drift,
        phase_us: rng.gen_range(0.0..crate::SLOT_US as f64),
        start_epoch: cfg.start_epoch + (index as u64 - 1) * cfg.run_spacing_s,
        hires: cfg.hires,
        ..SnifferConfig::default()
    };
    let sniff_start = bt_start + cfg.warmup_s * SLOTS_PER_SECOND;
    world.attach_sniffer(Sniffer::new(sc, sniff_start).expect("harness builds a valid sniffer config"));
    let limit = sniff_start + (cfg.time_bound_s + 2) * SLOTS_PER_SECOND * 2;
    while world.slot() < limit && !world.sniffer.as_ref().is_some_and(|s| s.is_done()) {
        world.step();
    }
    let out = world.take_sniffer().expect("attached above").finish(world.slot());
    let seconds = world.slot() / SLOTS_PER_SECOND;
    RunOutput {
        index,
        seed,
        parsed: parse_console(&out.console),
        console: out.console,
        afhmap: out.afhmap,
        spectrum: world.spectrum.as_ref().map(|s| s.render()).unwrap_or_default(),
        live_metrics: out.metrics,
        counters: world.piconet.counters(),
        master_bad: world.piconet.master_map().bad_channels(),
        wifi_throughput: world
            .wifi
            .as_ref()
            .map(|w| w.throughput_series(0, seconds))
            .unwrap_or_default(),
    }
}

/// Runs every repetition (in parallel; results are ordered by run index)
/// and writes the artifacts under `out_dir` when given.
pub fn run_scenario(cfg: &ScenarioConfig, out_dir: Option<&Path>) -> Result<ScenarioOutput, HarnessError> {
    cfg.validate()?;
    let runs: Vec<RunOutput> = (1..=cfg.runs).into_par_iter().map(|i| run_once(cfg, i)).collect();
    let name = cfg.name();
    let rows: Vec<(String, u32, RunMetrics)> = runs
        .iter()
        .map(|r| (name.clone(), r.index, r.parsed.metrics.clone()))
        .collect();
    let csv = render_csv(&rows);
    let metrics: Vec<RunMetrics> = rows.into_iter().map(|r| r.2).collect();
    let summary = summarize(&metrics);
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(io(dir))?;
        let write = |file: String, body: &str| {
            let p = dir.join(file);
            fs::write(&p, body).map_err(io(&p))
        };
        write("scenario.txt".into(), &cfg.to_text())?;
        for r in &runs {
            write(format!("run{}.console", r.index), &r.console)?;
            write(format!("run{}.afhmap", r.index), &r.afhmap)?;
            write(format!("run{}.spectrum", r.index), &r.spectrum)?;
        }
        write("metrics.csv".into(), &csv)?;
        write("summary.txt".into(), &summary.render())?;
    }
    Ok(ScenarioOutput {
        name,
        runs,
        csv,
        summary,
    })
}

/// Rebuilds the table and summary from the `runN.console` files in `dir`.
pub fn report_dir(dir: &Path) -> Result<(String, Summary), HarnessError> {
    let name = match fs::read_to_string(dir.join("scenario.txt")) {
        Ok(t) => t.parse::<ScenarioConfig>()?.name(),
        Err(_) => dir
            .file_name()
            .map_or("scenario".to_string(), |n| n.to_string_lossy().into_owned()),
    };
    let mut runs: Vec<(u32, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir).map_err(io(dir))? {
        let p = entry.map_err(io(dir))?.path();
        let Some(file) = p.file_name().and_then(|f| f.to_str()) else {
            continue;
        };
        if let Some(n) = file.strip_prefix("run").and_then(|f| f.strip_suffix(".console")) {
            if let Ok(n) = n.parse() {
                runs.push((n, p.clone()));
            }
        }
    }
    if runs.is_empty() {
        return Err(HarnessError::Input(format!("{}: no runN.console files", dir.display())));
    }
    runs.sort();
    let mut rows = Vec::new();
    for (n, p) in runs {
        let text = fs::read_to_string(&p).map_err(io(&p))?;
        rows.push((name.clone(), n, parse_console(&text).metrics));
    }
    let csv = render_csv(&rows);
    let metrics: Vec<RunMetrics> = rows.into_iter().map(|r| r.2).collect();
    Ok((csv, summarize(&metrics)))
}
