//! Decoding weights: built-in defaults, named presets, a TOML file and
//! command-line overrides, applied in that order.

use std::path::Path;

use jointbpe_core::decoder::DecoderConfig;
use jointbpe_core::multilevel::MultiLevelConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::files::read_text;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Settings {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub oov_penalty: f64,
    pub beamsize: usize,
    /// `None` uses twice the utterance's length bound when one is known,
    /// else 200.
    pub max_steps: Option<usize>,
    pub end_window: usize,
    pub end_margin: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            alpha: 0.6,
            beta: 1.0,
            gamma: 0.2,
            oov_penalty: -10.0,
            beamsize: 20,
            max_steps: None,
            end_window: 3,
            end_margin: 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Default,
    /// No subword LM, lighter LM weight, heavier second system.
    Alt,
}

impl std::str::FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Preset::Default),
            "alt" => Ok(Preset::Alt),
            other => Err(Error::Usage(format!(
                "unknown preset {other:?} (expected default or alt)"
            ))),
        }
    }
}

/// Every field optional; present fields override.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub preset: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub oov_penalty: Option<f64>,
    pub beamsize: Option<usize>,
    pub max_steps: Option<usize>,
    pub end_window: Option<usize>,
    pub end_margin: Option<f64>,
}

impl Overrides {
    pub fn from_toml_file(path: &Path) -> Result<Self> {
        toml::from_str(&read_text(path)?).map_err(|e| Error::Config {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }
}

impl Settings {
    pub fn preset(p: Preset) -> Self {
        match p {
            Preset::Default => Settings::default(),
            Preset::Alt => Settings {
                alpha: 0.0,
                beta: 0.4,
                gamma: 0.4,
                ..Settings::default()
            },
        }
    }

    /// Applies `layers` in order; a preset named in a layer resets the
    /// weights before that layer's own fields apply.
    pub fn resolve<'a>(layers: impl IntoIterator<Item = &'a Overrides>) -> Result<Self> {
        let mut s = Settings::default();
        for o in layers {
            if let Some(p) = &o.preset {
                s = Settings::preset(p.parse()?);
            }
            s.alpha = o.alpha.unwrap_or(s.alpha);
            s.beta = o.beta.unwrap_or(s.beta);
            s.gamma = o.gamma.unwrap_or(s.gamma);
            s.oov_penalty = o.oov_penalty.unwrap_or(s.oov_penalty);
            s.beamsize = o.beamsize.unwrap_or(s.beamsize);
            s.max_steps = o.max_steps.or(s.max_steps);
            s.end_window = o.end_window.unwrap_or(s.end_window);
            s.end_margin = o.end_margin.unwrap_or(s.end_margin);
        }
        s.multilevel()
            .validate()
            .map_err(|e| Error::Usage(e.to_string()))?;
        s.decoder(None)
            .validate()
            .map_err(|e| Error::Usage(e.to_string()))?;
        Ok(s)
    }

    pub fn multilevel(&self) -> MultiLevelConfig {
        MultiLevelConfig {
            alpha: self.alpha,
            oov_penalty: self.oov_penalty,
            premask: false,
        }
    }

    pub fn decoder(&self, length_bound: Option<usize>) -> DecoderConfig {
        let max_steps = self
            .max_steps
            .or(length_bound.map(|n| (2 * n).max(1)))
            .unwrap_or(200);
        DecoderConfig {
            beamsize: self.beamsize,
            beta: self.beta,
            gamma: self.gamma,
            max_steps,
            end_window: self.end_window,
            end_margin: self.end_margin,
        }
    }
}
