//! Run configuration: built-in defaults, then a `key = value` file, then
//! command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aeta::keystream::SeedKey;
use aeta::photonics::{CoherentAmplitude, EomConfig};
use serde::Serialize;

use crate::CliError;

/// Every user-settable knob, after merging. Option fields stay `None` when
/// the command should fall back to its own default.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Settings {
    pub m: Option<u32>,
    pub alpha2: Option<f64>,
    pub t: Option<f64>,
    pub dark: Option<f64>,
    pub key: Option<String>,
    pub taps: Option<String>,
    pub vpi: Option<f64>,
    pub phi0: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub bits: Option<u64>,
    pub m_list: Option<String>,
    pub n_list: Option<String>,
    pub out: Option<PathBuf>,
    pub svg: bool,
}

pub const CONFIG_KEYS: [&str; 15] = [
    "m", "alpha2", "t", "dark", "key", "taps", "vpi", "phi0", "seed", "trials", "bits", "m-list",
    "n-list", "out", "svg",
];

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.parse()
        .map_err(|_| CliError::Parameter(format!("config: cannot parse {key} = {raw:?}")))
}

impl Settings {
    /// Reads a flat `key = value` file. Blank lines and `#` comments are
    /// skipped; keys are the long flag names without dashes.
    pub fn from_file(path: &Path) -> Result<Settings, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parameter(format!("config {}: {e}", path.display())))?;
        Settings::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        let mut seen = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Parameter(format!("config line {}: expected key = value", lineno + 1))
            })?;
            let key = key.trim().replace('_', "-");
            let value = value.trim();
            if seen.insert(key.clone(), lineno).is_some() {
                return Err(CliError::Parameter(format!("config: duplicate key {key}")));
            }
            match key.as_str() {
                "m" => s.m = Some(parse_value(&key, value)?),
                "alpha2" => s.alpha2 = Some(parse_value(&key, value)?),
                "t" => s.t = Some(parse_value(&key, value)?),
                "dark" => s.dark = Some(parse_value(&key, value)?),
                "key" => s.key = Some(value.to_string()),
                "taps" => s.taps = Some(value.to_string()),
                "vpi" => s.vpi = Some(parse_value(&key, value)?),
                "phi0" => s.phi0 = Some(parse_value(&key, value)?),
                "seed" => s.seed = Some(parse_value(&key, value)?),
                "trials" => s.trials = Some(parse_value(&key, value)?),
                "bits" => s.bits = Some(parse_value(&key, value)?),
                "m-list" => s.m_list = Some(value.to_string()),
                "n-list" => s.n_list = Some(value.to_string()),
                "out" => s.out = Some(PathBuf::from(value)),
                "svg" => s.svg = parse_value(&key, value)?,
                other => {
                    return Err(CliError::Parameter(format!(
                        "config: unknown key {other:?} (known: {})",
                        CONFIG_KEYS.join(", ")
                    )))
                }
            }
        }
        Ok(s)
    }

    /// Values set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            m: over.m.or(self.m),
            alpha2: over.alpha2.or(self.alpha2),
            t: over.t.or(self.t),
            dark: over.dark.or(self.dark),
            key: over.key.or(self.key),
            taps: over.taps.or(self.taps),
            vpi: over.vpi.or(self.vpi),
            phi0: over.phi0.or(self.phi0),
            seed: over.seed.or(self.seed),
            trials: over.trials.or(self.trials),
            bits: over.bits.or(self.bits),
            m_list: over.m_list.or(self.m_list),
            n_list: over.n_list.or(self.n_list),
            out: over.out.or(self.out),
            svg: over.svg || self.svg,
        }
    }
}

/// Fully resolved and validated parameters for one command.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub m: u32,
    pub alpha2: f64,
    pub transmissivity: f64,
    pub dark_rate: f64,
    pub key_hex: String,
    pub lfsr_taps: Vec<u32>,
    pub v_pi: f64,
    pub phi0: f64,
    pub master_seed: u64,
    pub trials: u64,
    pub bits: u64,
    pub output_dir: PathBuf,
    pub svg: bool,
}

/// Per-command fallbacks for the experiment-shaped parameters.
#[derive(Clone, Copy, Debug)]
pub struct Defaults {
    pub m: u32,
    pub alpha2: f64,
    pub trials: u64,
    pub bits: u64,
}

pub const DEFAULT_KEY_HEX: &str = "ace1";

impl RunConfig {
    pub fn resolve(s: &Settings, d: Defaults) -> Result<RunConfig, CliError> {
        let taps = s.taps.as_deref().map(parse_taps).transpose()?;
        let key_hex = s.key.clone().unwrap_or_else(|| DEFAULT_KEY_HEX.to_string());
        let key = SeedKey::from_hex(&key_hex, taps)?;
        let cfg = RunConfig {
            m: s.m.unwrap_or(d.m),
            alpha2: s.alpha2.unwrap_or(d.alpha2),
            transmissivity: s.t.unwrap_or(1.0),
            dark_rate: s.dark.unwrap_or(0.0),
            key_hex: key.to_hex(),
            lfsr_taps: key.taps().to_vec(),
            v_pi: s.vpi.unwrap_or(100.0),
            phi0: s.phi0.unwrap_or(0.0),
            master_seed: s.seed.unwrap_or(1),
            trials: s.trials.unwrap_or(d.trials),
            bits: s.bits.unwrap_or(d.bits),
            output_dir: s.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            svg: s.svg,
        };
        cfg.amplitude()?;
        cfg.eom()?;
        Ok(cfg)
    }

    pub fn key(&self) -> Result<SeedKey, CliError> {
        Ok(SeedKey::from_hex(&self.key_hex, Some(self.lfsr_taps.clone()))?)
    }

    pub fn amplitude(&self) -> Result<CoherentAmplitude, CliError> {
        if !(self.alpha2.is_finite() && self.alpha2 >= 0.0) {
            return Err(CliError::Parameter(format!("alpha2 = {} must be >= 0", self.alpha2)));
        }
        Ok(CoherentAmplitude::new(self.alpha2.sqrt(), self.transmissivity, self.dark_rate)?)
    }

    pub fn eom(&self) -> Result<EomConfig, CliError> {
        Ok(EomConfig::new(self.v_pi, self.phi0)?)
    }
}

/// Comma-separated tap positions, e.g. `16,14,13,11`.
pub fn parse_taps(raw: &str) -> Result<Vec<u32>, CliError> {
    raw.split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Parameter(format!("bad tap {t:?} in --taps")))
        })
        .collect()
}

/// A list of values: `start:stop:step` (stop included when on the grid),
/// a comma list, or a single value.
pub fn parse_range(raw: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Parameter(format!("bad range {raw:?}: expected start:stop:step or a comma list"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = raw.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 || stop < start || !start.is_finite() || !stop.is_finite() {
                return Err(bad());
            }
            let count = ((stop - start) / step + 1e-9).floor() as u64 + 1;
            if count > 1_000_000 {
                return Err(CliError::Parameter(format!("range {raw:?} has too many points")));
            }
            Ok((0..count).map(|i| start + i as f64 * step).collect())
        }
        [_] => raw.split(',').map(num).collect(),
        _ => Err(bad()),
    }
}

pub fn parse_m_list(raw: &str) -> Result<Vec<u32>, CliError> {
    parse_range(raw)?
        .into_iter()
        .map(|v| {
            if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
                Ok(v as u32)
            } else {
                Err(CliError::Parameter(format!("--m-list entry {v} is not a whole number")))
            }
        })
        .collect()
}
