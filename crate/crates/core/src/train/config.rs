//! Training hyperparameters and their flat `key = value` file format.

use std::path::PathBuf;

use super::AugmentConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub seed: u64,
    pub lr: f64,
    pub batch: usize,
    pub epochs: usize,
    pub gain_db: (f64, f64),
    pub snr_db: (f64, f64),
    pub noise_dir: Option<PathBuf>,
    pub lambda: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
    pub augment: bool,
    /// Share of segments passed through without gain or noise.
    pub clean_fraction: f64,
    pub segment_seconds: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let aug = AugmentConfig::default();
        Self {
            seed: 0,
            lr: 1e-3,
            batch: 32,
            epochs: 30,
            gain_db: aug.gain_db,
            snr_db: aug.snr_db,
            noise_dir: None,
            lambda: 1.0,
            patience: 0,
            augment: true,
            clean_fraction: 0.0,
            segment_seconds: 0.5,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Argument(format!("{key}: cannot parse `{v}`")))
}

fn parse_range(key: &str, v: &str) -> Result<(f64, f64)> {
    let (a, b) = v
        .split_once(',')
        .ok_or_else(|| Error::Argument(format!("{key}: expected `low,high`, got `{v}`")))?;
    Ok((parse_num(key, a.trim())?, parse_num(key, b.trim())?))
}

impl TrainConfig {
    pub fn augment_config(&self) -> AugmentConfig {
        AugmentConfig {
            gain_db: self.gain_db,
            snr_db: self.snr_db,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Argument(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if self.batch == 0 || self.epochs == 0 {
            return Err(Error::Argument(
                "batch and epochs must be at least 1".into(),
            ));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Argument(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(0.0..=1.0).contains(&self.clean_fraction) {
            return Err(Error::Argument(format!(
                "clean_fraction must be in [0, 1], got {}",
                self.clean_fraction
            )));
        }
        if !(self.segment_seconds > 0.0) {
            return Err(Error::Argument("segment_seconds must be positive".into()));
        }
        self.augment_config().validate()
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "batch" => self.batch = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "gain_db" => self.gain_db = parse_range(key, v)?,
            "snr_db" => self.snr_db = parse_range(key, v)?,
            "noise_dir" => self.noise_dir = (!v.is_empty()).then(|| PathBuf::from(v)),
            "lambda" => self.lambda = parse_num(key, v)?,
            "patience" => self.patience = parse_num(key, v)?,
            "augment" => self.augment = parse_num(key, v)?,
            "clean_fraction" => self.clean_fraction = parse_num(key, v)?,
            "segment_seconds" => self.segment_seconds = parse_num(key, v)?,
            other => return Err(Error::Argument(format!("unknown training key `{other}`"))),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text` on top of `self`. Blank
    /// lines and `#` comments are ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::Argument(format!("line {}: expected `key = value`", n + 1))
            })?;
            self.set(k, v)
                .map_err(|e| Error::Argument(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let noise = self
            .noise_dir
            .as_ref()
            .map(|p| p.display().to_string())
            .unwrap_or_default();
        format!(
            "seed = {}\nlr = {}\nbatch = {}\nepochs = {}\ngain_db = {},{}\nsnr_db = {},{}\nnoise_dir = {noise}\nlambda = {}\npatience = {}\naugment = {}\nclean_fraction = {}\nsegment_seconds = {}\n",
            self.seed,
            self.lr,
            self.batch,
            self.epochs,
            self.gain_db.0,
            self.gain_db.1,
            self.snr_db.0,
            self.snr_db.1,
            self.lambda,
            self.patience,
            self.augment,
            self.clean_fraction,
            self.segment_seconds
        )
    }
}
