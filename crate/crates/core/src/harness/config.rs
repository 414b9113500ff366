//! `key = value` run configuration.
//!
//! Layers, later wins: built-in defaults, config file, `BSPRE_*`
//! environment variables, command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::codegen::FamilyWeights;
use crate::env::{
    EnvKind, Environment, LetterStream, LetterStreamConfig, PixelMode, PixelStream,
    PixelStreamConfig, GLYPH_COUNT,
};
use crate::network::EngineParams;

pub const ENV_PREFIX: &str = "BSPRE_";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("config line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {message}")]
    BadValue {
        key: String,
        value: String,
        message: String,
    },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub env: EnvKind,
    /// Glyph weights; uniform when `None`.
    pub letter_weights: Option<Vec<f64>>,
    pub pixel_mode: PixelMode,
    pub engine: EngineParams,
    /// Immediate range for generated codelets; per-environment default
    /// when `None`.
    pub imm_range: Option<(i16, i16)>,
    pub ticks: u64,
    pub seed: u64,
    /// Ticks between metrics samples.
    pub cadence: u64,
    pub metrics_out: Option<PathBuf>,
    pub snapshot_out: Option<PathBuf>,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            env: EnvKind::Letters,
            letter_weights: None,
            pixel_mode: PixelMode::Uniform,
            engine: EngineParams::default(),
            imm_range: None,
            ticks: 1000,
            seed: 0,
            cadence: 100,
            metrics_out: None,
            snapshot_out: None,
            workers: 1,
        }
    }
}

/// Every recognised key, in the order they are echoed.
pub const KEYS: &[&str] = &[
    "env",
    "seed",
    "ticks",
    "cadence",
    "letter_weights",
    "pixel_mode",
    "alpha",
    "gamma",
    "q_const",
    "q_init",
    "max_actions_per_tail",
    "fuel",
    "prune_threshold",
    "prune_patience",
    "td_rule",
    "exploration",
    "window_capacity",
    "timing_decay",
    "multi_input_prob",
    "gen_min_len",
    "gen_max_len",
    "gen_weights",
    "imm_min",
    "imm_max",
    "metrics_out",
    "snapshot_out",
    "workers",
];

/// Keys that do not influence results and are left out of the metrics
/// header.
const OUTPUT_ONLY: &[&str] = &["metrics_out", "snapshot_out", "workers"];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        message: e.to_string(),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue {
            key: key.into(),
            value: value.into(),
            message: "expected true or false".into(),
        }),
    }
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    value.split(',').map(|v| parse(key, v.trim())).collect()
}

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

/// `uniform`, or `scripted:Y/U/V,Y/U/V,...`.
fn parse_pixel_mode(key: &str, value: &str) -> Result<PixelMode, ConfigError> {
    let bad = |message: &str| ConfigError::BadValue {
        key: key.into(),
        value: value.into(),
        message: message.into(),
    };
    if value == "uniform" {
        return Ok(PixelMode::Uniform);
    }
    let Some(script) = value.strip_prefix("scripted:") else {
        return Err(bad("expected uniform or scripted:Y/U/V,..."));
    };
    let mut seq = Vec::new();
    for px in script.split(',').filter(|s| !s.trim().is_empty()) {
        let parts: Vec<u8> = px
            .trim()
            .split('/')
            .map(|c| {
                c.trim()
                    .parse::<u8>()
                    .map_err(|_| bad("channels must be 0..=255"))
            })
            .collect::<Result<_, _>>()?;
        let [y, u, v] = parts[..] else {
            return Err(bad("pixels need three channels"));
        };
        seq.push([y, u, v]);
    }
    if seq.is_empty() {
        return Err(bad("scripted sequence is empty"));
    }
    Ok(PixelMode::Scripted(seq))
}

fn pixel_mode_text(mode: &PixelMode) -> String {
    match mode {
        PixelMode::Uniform => "uniform".into(),
        PixelMode::Scripted(seq) => {
            format!(
                "scripted:{}",
                join(seq.iter().map(|[y, u, v]| format!("{y}/{u}/{v}")), ",")
            )
        }
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let e = &mut self.engine;
        match key {
            "env" => self.env = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "ticks" => self.ticks = parse(key, value)?,
            "cadence" => self.cadence = parse(key, value)?,
            "letter_weights" => {
                self.letter_weights = match value {
                    "uniform" => None,
                    _ => Some(parse_list(key, value)?),
                }
            }
            "pixel_mode" => self.pixel_mode = parse_pixel_mode(key, value)?,
            "alpha" => e.alpha = parse(key, value)?,
            "gamma" => e.gamma = parse(key, value)?,
            "q_const" => e.q_const = parse(key, value)?,
            "q_init" => e.q_init = parse(key, value)?,
            "max_actions_per_tail" => e.max_actions_per_tail = parse(key, value)?,
            "fuel" => e.fuel = parse(key, value)?,
            "prune_threshold" => e.prune_threshold = parse(key, value)?,
            "prune_patience" => e.prune_patience = parse(key, value)?,
            "td_rule" => e.td_rule = parse(key, value)?,
            "exploration" => e.exploration = parse_bool(key, value)?,
            "window_capacity" => e.window_capacity = parse(key, value)?,
            "timing_decay" => e.timing_decay = parse(key, value)?,
            "multi_input_prob" => e.multi_input_prob = parse(key, value)?,
            "gen_min_len" => e.gen_min_len = parse(key, value)?,
            "gen_max_len" => e.gen_max_len = parse(key, value)?,
            "gen_weights" => {
                let w: [f64; 6] =
                    parse_list(key, value)?
                        .try_into()
                        .map_err(|_| ConfigError::BadValue {
                            key: key.into(),
                            value: value.into(),
                            message: "expected 6 weights: load,immediate,move,alu,append,nop"
                                .into(),
                        })?;
                e.gen_weights = FamilyWeights::from_array(w);
            }
            "imm_min" => {
                let lo: i16 = parse(key, value)?;
                self.imm_range = Some((
                    lo,
                    self.imm_range.map_or(lo.max(self.default_imm().1), |r| r.1),
                ));
            }
            "imm_max" => {
                let hi: i16 = parse(key, value)?;
                self.imm_range = Some((
                    self.imm_range.map_or(hi.min(self.default_imm().0), |r| r.0),
                    hi,
                ));
            }
            "metrics_out" => self.metrics_out = Some(PathBuf::from(value)),
            "snapshot_out" => self.snapshot_out = Some(PathBuf::from(value)),
            "workers" => self.workers = parse(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let e = &self.engine;
        let (lo, hi) = self.resolved_imm_range();
        Some(match key {
            "env" => self.env.name().into(),
            "seed" => self.seed.to_string(),
            "ticks" => self.ticks.to_string(),
            "cadence" => self.cadence.to_string(),
            "letter_weights" => match &self.letter_weights {
                None => "uniform".into(),
                Some(w) => join(w, ","),
            },
            "pixel_mode" => pixel_mode_text(&self.pixel_mode),
            "alpha" => e.alpha.to_string(),
            "gamma" => e.gamma.to_string(),
            "q_const" => e.q_const.to_string(),
            "q_init" => e.q_init.to_string(),
            "max_actions_per_tail" => e.max_actions_per_tail.to_string(),
            "fuel" => e.fuel.to_string(),
            "prune_threshold" => e.prune_threshold.to_string(),
            "prune_patience" => e.prune_patience.to_string(),
            "td_rule" => e.td_rule.name().into(),
            "exploration" => e.exploration.to_string(),
            "window_capacity" => e.window_capacity.to_string(),
            "timing_decay" => e.timing_decay.to_string(),
            "multi_input_prob" => e.multi_input_prob.to_string(),
            "gen_min_len" => e.gen_min_len.to_string(),
            "gen_max_len" => e.gen_max_len.to_string(),
            "gen_weights" => join(e.gen_weights.as_array(), ","),
            "imm_min" => lo.to_string(),
            "imm_max" => hi.to_string(),
            "metrics_out" => self
                .metrics_out
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
            "snapshot_out" => self
                .snapshot_out
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
            "workers" => self.workers.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines. Blank lines and `#` comments are
    /// skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    message: "expected key = value".into(),
                });
            };
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        self.apply_text(&text)
    }

    /// Applies `BSPRE_<KEY>` variables, e.g. `BSPRE_TICKS=500`.
    pub fn apply_env_vars<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut found: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                let key = k.as_ref().strip_prefix(ENV_PREFIX)?.to_ascii_lowercase();
                Some((key, v.as_ref().to_string()))
            })
            .collect();
        found.sort();
        for (k, v) in found {
            self.set(&k, &v)?;
        }
        Ok(())
    }

    fn default_imm(&self) -> (i16, i16) {
        match self.env {
            EnvKind::Letters => (-4, 4),
            EnvKind::Pixels => (-255, 255),
        }
    }

    pub fn resolved_imm_range(&self) -> (i16, i16) {
        self.imm_range.unwrap_or_else(|| self.default_imm())
    }

    /// Engine parameters with the immediate range filled in.
    pub fn engine_params(&self) -> EngineParams {
        let (imm_min, imm_max) = self.resolved_imm_range();
        EngineParams {
            imm_min,
            imm_max,
            ..self.engine.clone()
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.ticks == 0 {
            return invalid("ticks must be at least 1".into());
        }
        if self.cadence == 0 {
            return invalid("cadence must be at least 1".into());
        }
        if self.workers == 0 {
            return invalid("workers must be at least 1".into());
        }
        if let Some(w) = &self.letter_weights {
            if w.len() != GLYPH_COUNT {
                return invalid(format!(
                    "letter_weights needs {GLYPH_COUNT} values, got {}",
                    w.len()
                ));
            }
        }
        if let Err(e) = self.engine_params().check() {
            return invalid(e.to_string());
        }
        if let Err(e) = self.environment() {
            return invalid(e.to_string());
        }
        Ok(())
    }

    pub fn environment(&self) -> Result<Environment, crate::env::EnvError> {
        Ok(match self.env {
            EnvKind::Letters => {
                let cfg = match &self.letter_weights {
                    Some(w) => LetterStreamConfig {
                        weights: w.clone(),
                        seed: self.seed,
                    },
                    None => LetterStreamConfig::uniform(self.seed),
                };
                Environment::Letters(LetterStream::new(cfg)?)
            }
            EnvKind::Pixels => Environment::Pixels(PixelStream::new(PixelStreamConfig {
                mode: self.pixel_mode.clone(),
                seed: self.seed,
            })?),
        })
    }

    /// `key = value` lines for every setting that affects results.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for key in KEYS.iter().filter(|k| !OUTPUT_ONLY.contains(k)) {
            let _ = writeln!(out, "{key} = {}", self.get(key).unwrap_or_default());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layering() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("ticks = 50\n# comment\nseed=3\nenv = pixels\n")
            .unwrap();
        cfg.apply_env_vars([
            ("BSPRE_TICKS", "70"),
            ("HOME", "/root"),
            ("BSPRE_ALPHA", "0.2"),
        ])
        .unwrap();
        assert_eq!((cfg.ticks, cfg.seed, cfg.env), (70, 3, EnvKind::Pixels));
        assert_eq!(cfg.engine.alpha, 0.2);
        assert_eq!(cfg.resolved_imm_range(), (-255, 255));
    }

    #[test]
    fn errors() {
        let mut cfg = RunConfig::default();
        assert!(matches!(
            cfg.apply_text("nonsense"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            cfg.set("colour", "red"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            cfg.set("ticks", "-1"),
            Err(ConfigError::BadValue { .. })
        ));
        assert!(matches!(
            cfg.set("pixel_mode", "scripted:"),
            Err(ConfigError::BadValue { .. })
        ));
        cfg.set("ticks", "0").unwrap();
        assert!(matches!(cfg.check(), Err(ConfigError::Invalid(_))));
        let missing = RunConfig::default().apply_file(Path::new("/nonexistent/x.conf"));
        assert!(matches!(missing, Err(ConfigError::Io { .. })));
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = RunConfig::default();
        cfg.apply_text(
            "env=pixels\npixel_mode=scripted:16/128/128,1/2/3\ntd_rule=mean\nimm_max=9\n",
        )
        .unwrap();
        let mut again = RunConfig::default();
        again.apply_text(&cfg.echo()).unwrap();
        assert_eq!(
            again,
            RunConfig {
                imm_range: Some(cfg.resolved_imm_range()),
                ..cfg.clone()
            }
        );
        assert_eq!(cfg.resolved_imm_range(), (-255, 9));
        assert_eq!(again.echo(), cfg.echo());
    }
}
