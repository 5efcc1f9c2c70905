//! Training configuration, its flat key-value file format, and the config
//! echo that makes every run replayable.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Baseline,
    Multitask,
    Adversarial,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Multitask => "multitask",
            Mode::Adversarial => "adversarial",
        }
    }

    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "baseline" => Ok(Mode::Baseline),
            "multitask" => Ok(Mode::Multitask),
            "adversarial" => Ok(Mode::Adversarial),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

/// All hyperparameters of a training run.
///
/// Defaults: batch size 128, weight decay 1e-7, at least 80 epochs with a
/// patience of 5, twice the main task's batch count per epoch, and three
/// seeds. The learning rate (0.1), hidden size (100) and reversal strength
/// (1.0) are tunable defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub mode: Mode,
    /// Probability of drawing the main task each iteration.
    pub main_weight: f64,
    pub batch_size: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub hidden: usize,
    pub embed_dim: usize,
    pub layers: usize,
    pub min_epochs: usize,
    pub patience: usize,
    /// Iterations per epoch = this factor times the main task's batch count.
    pub iters_factor: usize,
    pub seeds: Vec<u64>,
    pub lambda_rev: f64,
    /// Hard safety cap on the epoch count.
    pub max_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            mode: Mode::Baseline,
            main_weight: 0.5,
            batch_size: 128,
            lr: 0.1,
            weight_decay: 1e-7,
            hidden: 100,
            embed_dim: 100,
            layers: 2,
            min_epochs: 80,
            patience: 5,
            iters_factor: 2,
            seeds: vec![1, 2, 3],
            lambda_rev: 1.0,
            max_epochs: 1000,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.main_weight > 0.0 && self.main_weight <= 1.0) {
            return Err(Error::Config(format!(
                "main_weight must lie in (0, 1], got {}",
                self.main_weight
            )));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be at least 1".into()));
        }
        if self.iters_factor < 1 {
            return Err(Error::Config("iters_factor must be at least 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be nonempty".into()));
        }
        // lr = 0 is allowed: it freezes the run, which is how the stopping
        // protocol is traced deterministically.
        if self.lr < 0.0 || !self.lr.is_finite() {
            return Err(Error::Config(format!(
                "lr must be non-negative, got {}",
                self.lr
            )));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight_decay must be non-negative".into()));
        }
        if self.min_epochs < 1 || self.max_epochs < self.min_epochs {
            return Err(Error::Config(
                "need 1 <= min_epochs <= max_epochs".into(),
            ));
        }
        if self.hidden == 0 || self.embed_dim == 0 || self.layers == 0 {
            return Err(Error::Config("model dimensions must be positive".into()));
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |k: &str, v: &str| Error::Config(format!("bad value `{v}` for key `{k}`"));
        match key {
            "mode" => self.mode = Mode::parse(value)?,
            "main_weight" => self.main_weight = value.parse().map_err(|_| bad(key, value))?,
            "batch_size" => self.batch_size = value.parse().map_err(|_| bad(key, value))?,
            "lr" => self.lr = value.parse().map_err(|_| bad(key, value))?,
            "weight_decay" => self.weight_decay = value.parse().map_err(|_| bad(key, value))?,
            "hidden" => self.hidden = value.parse().map_err(|_| bad(key, value))?,
            "embed_dim" => self.embed_dim = value.parse().map_err(|_| bad(key, value))?,
            "layers" => self.layers = value.parse().map_err(|_| bad(key, value))?,
            "min_epochs" => self.min_epochs = value.parse().map_err(|_| bad(key, value))?,
            "patience" => self.patience = value.parse().map_err(|_| bad(key, value))?,
            "iters_factor" => self.iters_factor = value.parse().map_err(|_| bad(key, value))?,
            "lambda_rev" => self.lambda_rev = value.parse().map_err(|_| bad(key, value))?,
            "max_epochs" => self.max_epochs = value.parse().map_err(|_| bad(key, value))?,
            "seeds" => {
                self.seeds = value
                    .split(',')
                    .map(|s| s.trim().parse::<u64>().map_err(|_| bad(key, value)))
                    .collect::<Result<_>>()?;
            }
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Load from flat `key = value` text (`#` starts a comment line).
    pub fn from_file(path: impl AsRef<Path>) -> Result<TrainConfig> {
        let path = path.as_ref();
        let text =
            fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut config = TrainConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: format!("expected `key = value`, got `{line}`"),
            })?;
            config.set(key.trim(), value.trim()).map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: idx + 1,
                msg: e.to_string(),
            })?;
        }
        config.validate()?;
        Ok(config)
    }

    /// The config echo: a flat key-value rendering that `from_file` parses
    /// back into an identical config.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        let seeds = self
            .seeds
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",");
        let _ = writeln!(out, "mode = {}", self.mode.as_str());
        let _ = writeln!(out, "main_weight = {}", self.main_weight);
        let _ = writeln!(out, "batch_size = {}", self.batch_size);
        let _ = writeln!(out, "lr = {}", self.lr);
        let _ = writeln!(out, "weight_decay = {}", self.weight_decay);
        let _ = writeln!(out, "hidden = {}", self.hidden);
        let _ = writeln!(out, "embed_dim = {}", self.embed_dim);
        let _ = writeln!(out, "layers = {}", self.layers);
        let _ = writeln!(out, "min_epochs = {}", self.min_epochs);
        let _ = writeln!(out, "patience = {}", self.patience);
        let _ = writeln!(out, "iters_factor = {}", self.iters_factor);
        let _ = writeln!(out, "seeds = {seeds}");
        let _ = writeln!(out, "lambda_rev = {}", self.lambda_rev);
        let _ = writeln!(out, "max_epochs = {}", self.max_epochs);
        out
    }
}
