//! Scenario files: one `key = value` per line, `#` starts a comment.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::baseband::BdAddr;
use crate::hopping::HopKernel;
use crate::piconet::{AfhPolicy, TrafficProfile};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RfCondition {
    Quiet,
    /// Wi-Fi saturating from before the piconet starts.
    BusyRf,
    /// Wi-Fi ramps up this many seconds after the piconet starts.
    BusyAfterStart {
        ramp_delay_s: u64,
    },
}

impl RfCondition {
    pub fn label(&self) -> &'static str {
        match self {
            RfCondition::Quiet => "Quiet",
            RfCondition::BusyRf => "BusyRF",
            RfCondition::BusyAfterStart { .. } => "BusyAfterStart",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrafficChoice {
    Idle,
    Pairing,
    AudioBasicRate,
    AudioMixedEdr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AfhChoice {
    Off,
    Aggressive,
    Cooperative,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub master: String,
    pub target: String,
    pub master_addr: BdAddr,
    pub slave_addr: BdAddr,
    pub rf: RfCondition,
    pub traffic: TrafficChoice,
    pub edr_fraction: f64,
    pub afh: AfhChoice,
    pub kernel: HopKernel,
    pub runs: u32,
    pub time_bound_s: u64,
    /// Piconet running time before the sniffer starts.
    pub warmup_s: u64,
    pub seed: u64,
    pub start_epoch: u64,
    /// Seconds between the start times of consecutive runs.
    pub run_spacing_s: u64,
    pub uap_known: bool,
    pub sniffer_drift_ppm: f64,
    pub acquisition_channel: u8,
    pub wifi_channel: u8,
    pub wifi_power_dbm: i32,
    pub spectrum_sweeps: u64,
    pub hires: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            master: "master".into(),
            target: "target".into(),
            master_addr: BdAddr::new(0x0000, 0xfb, 0xfd7fd1),
            slave_addr: BdAddr::new(0x0000, 0x5a, 0x3c4d2e),
            rf: RfCondition::Quiet,
            traffic: TrafficChoice::AudioBasicRate,
            edr_fraction: 0.65,
            afh: AfhChoice::Aggressive,
            kernel: HopKernel::BasicSpec,
            runs: 10,
            time_bound_s: 180,
            warmup_s: 10,
            seed: 1,
            start_epoch: 1_508_069_380,
            run_spacing_s: 200,
            uap_known: true,
            sniffer_drift_ppm: 20.0,
            acquisition_channel: 39,
            wifi_channel: 6,
            wifi_power_dbm: -62,
            spectrum_sweeps: 4,
            hires: false,
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("line {line}: expected key = value, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key {key:?}")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value {value:?} for {key}")]
    BadValue { line: usize, key: String, value: String },
    #[error("line {line}: {key} given twice")]
    Duplicate { line: usize, key: String },
    #[error("{0}")]
    Invalid(String),
}

impl ScenarioConfig {
    /// `<master>-<target>-<rf>`.
    pub fn name(&self) -> String {
        format!("{}-{}-{}", self.master, self.target, self.rf.label())
    }

    pub fn traffic_profile(&self) -> TrafficProfile {
        match self.traffic {
            TrafficChoice::Idle => TrafficProfile::idle(),
            TrafficChoice::Pairing => TrafficProfile::pairing_only(),
            TrafficChoice::AudioBasicRate => TrafficProfile::audio_basic_rate(),
            TrafficChoice::AudioMixedEdr => TrafficProfile::audio_mixed_edr(self.edr_fraction),
        }
    }

    pub fn afh_policy(&self) -> Option<AfhPolicy> {
        match self.afh {
            AfhChoice::Off => None,
            AfhChoice::Aggressive => Some(AfhPolicy::aggressive()),
            AfhChoice::Cooperative => Some(AfhPolicy::cooperative()),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::Invalid(m.to_string()));
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if self.time_bound_s == 0 {
            return bad("time_bound_s must be at least 1");
        }
        if !(0.0..=1.0).contains(&self.edr_fraction) {
            return bad("edr_fraction must be within 0..1");
        }
        if !(1..=13).contains(&self.wifi_channel) {
            return bad("wifi_channel must be 1..13");
        }
        if self.acquisition_channel > 78 {
            return bad("acquisition_channel must be 0..78");
        }
        if self.sniffer_drift_ppm.abs() > 250.0 {
            return bad("sniffer_drift_ppm must be within 250");
        }
        if self.master_addr.lap == self.slave_addr.lap {
            return bad("master and slave need different LAPs");
        }
        for (k, v) in [("master", &self.master), ("target", &self.target)] {
            if v.is_empty() || v.contains(char::is_whitespace) || v.contains(',') {
                return Err(ScenarioError::Invalid(format!(
                    "{k} must be a single word without commas"
                )));
            }
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let rf = match self.rf {
            RfCondition::Quiet => "quiet".to_string(),
            RfCondition::BusyRf => "busy".to_string(),
            RfCondition::BusyAfterStart { .. } => "busy_after_start".to_string(),
        };
        let ramp = match self.rf {
            RfCondition::BusyAfterStart { ramp_delay_s } => ramp_delay_s,
            _ => 10,
        };
        let traffic = match self.traffic {
            TrafficChoice::Idle => "idle",
            TrafficChoice::Pairing => "pairing",
            TrafficChoice::AudioBasicRate => "audio_br",
            TrafficChoice::AudioMixedEdr => "audio_edr",
        };
        let afh = match self.afh {
            AfhChoice::Off => "off",
            AfhChoice::Aggressive => "aggressive",
            AfhChoice::Cooperative => "cooperative",
        };
        let kernel = match self.kernel {
            HopKernel::BasicSpec => "spec",
            HopKernel::ReferenceHash => "hash",
        };
        let pairs: Vec<(&str, String)> = vec![
            ("master", self.master.clone()),
            ("target", self.target.clone()),
            ("master_addr", self.master_addr.to_string()),
            ("slave_addr", self.slave_addr.to_string()),
            ("rf", rf),
            ("ramp_delay_s", ramp.to_string()),
            ("traffic", traffic.into()),
            ("edr_fraction", self.edr_fraction.to_string()),
            ("afh", afh.into()),
            ("kernel", kernel.into()),
            ("runs", self.runs.to_string()),
            ("time_bound_s", self.time_bound_s.to_string()),
            ("warmup_s", self.warmup_s.to_string()),
            ("seed", self.seed.to_string()),
            ("start_epoch", self.start_epoch.to_string()),
            ("run_spacing_s", self.run_spacing_s.to_string()),
            ("uap_known", self.uap_known.to_string()),
            ("sniffer_drift_ppm", self.sniffer_drift_ppm.to_string()),
            ("acquisition_channel", self.acquisition_channel.to_string()),
            ("wifi_channel", self.wifi_channel.to_string()),
            ("wifi_power_dbm", self.wifi_power_dbm.to_string()),
            ("spectrum_sweeps", self.spectrum_sweeps.to_string()),
            ("hires", self.hires.to_string()),
        ];
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "yes" | "1" | "on" => Some(true),
        "false" | "no" | "0" | "off" => Some(false),
        _ => None,
    }
}

impl FromStr for ScenarioConfig {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut c = ScenarioConfig::default();
        let mut rf_kind = "quiet".to_string();
        let mut ramp: u64 = 10;
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(ScenarioError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if seen.iter().any(|s| s == k) {
                return Err(ScenarioError::Duplicate { line, key: k.into() });
            }
            seen.push(k.to_string());
            let bad = || ScenarioError::BadValue {
                line,
                key: k.to_string(),
                value: v.to_string(),
            };
            macro_rules! num {
                () => {
                    v.parse().map_err(|_| bad())?
                };
            }
            match k {
                "master" => c.master = v.to_string(),
                "target" => c.target = v.to_string(),
                "master_addr" => c.master_addr = v.parse().map_err(|_| bad())?,
                "slave_addr" => c.slave_addr = v.parse().map_err(|_| bad())?,
                "rf" => {
                    if !["quiet", "busy", "busy_after_start"].contains(&v) {
                        return Err(bad());
                    }
                    rf_kind = v.to_string();
                }
                "ramp_delay_s" => ramp = num!(),
                "traffic" => {
                    c.traffic = match v {
                        "idle" => TrafficChoice::Idle,
                        "pairing" => TrafficChoice::Pairing,
                        "audio_br" => TrafficChoice::AudioBasicRate,
                        "audio_edr" => TrafficChoice::AudioMixedEdr,
                        _ => return Err(bad()),
                    }
                }
                "edr_fraction" => c.edr_fraction = num!(),
                "afh" => {
                    c.afh = match v {
                        "off" => AfhChoice::Off,
                        "aggressive" => AfhChoice::Aggressive,
                        "cooperative" => AfhChoice::Cooperative,
                        _ => return Err(bad()),
                    }
                }
                "kernel" => {
                    c.kernel = match v {
                        "spec" => HopKernel::BasicSpec,
                        "hash" => HopKernel::ReferenceHash,
                        _ => return Err(bad()),
                    }
                }
                "runs" => c.runs = num!(),
                "time_bound_s" => c.time_bound_s = num!(),
                "warmup_s" => c.warmup_s = num!(),
                "seed" => c.seed = num!(),
                "start_epoch" => c.start_epoch = num!(),
                "run_spacing_s" => c.run_spacing_s = num!(),
                "uap_known" => c.uap_known = parse_bool(v).ok_or_else(bad)?,
                "sniffer_drift_ppm" => c.sniffer_drift_ppm = num!(),
                "acquisition_channel" => c.acquisition_channel = num!(),
                "wifi_channel" => c.wifi_channel = num!(),
                "wifi_power_dbm" => c.wifi_power_dbm = num!(),
                "spectrum_sweeps" => c.spectrum_sweeps = num!(),
                "hires" => c.hires = parse_bool(v).ok_or_else(bad)?,
                _ => {
                    return Err(ScenarioError::UnknownKey {
                        line,
                        key: k.to_string(),
                    })
                }
            }
        }
        c.rf = match rf_kind.as_str() {
            "busy" => RfCondition::BusyRf,
            "busy_after_start" => RfCondition::BusyAfterStart { ramp_delay_s: ramp },
            _ => RfCondition::Quiet,
        };
        c.validate()?;
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = ScenarioConfig::default();
        assert_eq!(c.to_text().parse::<ScenarioConfig>().unwrap(), c);
    }

    #[test]
    fn parses_and_names() {
        let c: ScenarioConfig = "master = OPO\ntarget = i30 # headphones\nrf = busy\n\nruns = 3\n"
            .parse()
            .unwrap();
        assert_eq!(c.name(), "OPO-i30-BusyRF");
        assert_eq!(c.runs, 3);
    }

    #[test]
    fn errors_carry_line() {
        assert_eq!(
            "runs = 2\nbogus = 1".parse::<ScenarioConfig>(),
            Err(ScenarioError::UnknownKey {
                line: 2,
                key: "bogus".into()
            })
        );
        assert!(matches!(
            "runs = x".parse::<ScenarioConfig>(),
            Err(ScenarioError::BadValue { line: 1, .. })
        ));
        assert!(matches!(
            "runs".parse::<ScenarioConfig>(),
            Err(ScenarioError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            "runs = 0".parse::<ScenarioConfig>(),
            Err(ScenarioError::Invalid(_))
        ));
        assert!(matches!(
            "runs = 1\nruns = 2".parse::<ScenarioConfig>(),
            Err(ScenarioError::Duplicate { line: 2, .. })
        ));
    }
}
