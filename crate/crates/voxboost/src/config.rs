//! Flat `section.key = value` configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key has a
//! default (see `voxboost print-config`); unknown or repeated keys and
//! unparsable values are collected and reported together.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use voxboost_core::encoder::{EncoderConfig, FeatureScale, SgdMomentumConfig};
use voxboost_core::gbm::GbmHyperparams;
use voxboost_core::pipeline::GridSpec;
use voxboost_core::synth::CohortConfig;

use crate::error::{CliError, CliResult};

pub const DEFAULT_SEED: u64 = 17;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub workdir: PathBuf,
    /// Drives the cohort, encoder and boosting streams.
    pub seed: u64,
    /// `input_size` always equals `cohort.volume_size`.
    pub cohort: CohortConfig,
    pub encoder: EncoderConfig,
    pub sgd: SgdMomentumConfig,
    pub feature_scale: usize,
    /// Used by `train-gbm --from-config` instead of the grid winner.
    pub gbm: GbmHyperparams,
    pub grid: GridSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut c = Self {
            workdir: PathBuf::from("voxboost-run"),
            seed: DEFAULT_SEED,
            cohort: CohortConfig::default(),
            encoder: EncoderConfig::default(),
            sgd: SgdMomentumConfig::default(),
            feature_scale: FeatureScale::SIX.0,
            gbm: GbmHyperparams::default(),
            grid: GridSpec::default(),
        };
        c.sync();
        c
    }
}

fn list<T: Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

fn one<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn many<T: FromStr>(v: &str) -> Result<Vec<T>, String> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|t| one(t.trim())).collect()
}

impl RunConfig {
    /// Copies the shared settings (seed, volume size) into each section.
    fn sync(&mut self) {
        self.cohort.seed = self.seed;
        self.sgd.seed = self.seed;
        self.gbm.seed = self.seed;
        self.grid.seed = self.seed;
        self.encoder.input_size = self.cohort.volume_size;
    }

    /// Every key with its current value, in print order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let c = &self.cohort;
        let g = &self.grid;
        vec![
            ("paths.workdir", self.workdir.display().to_string()),
            ("global.seed", self.seed.to_string()),
            ("cohort.n_train", c.n_train.to_string()),
            ("cohort.n_val", c.n_val.to_string()),
            ("cohort.n_test", c.n_test.to_string()),
            ("cohort.volume_size", c.volume_size.to_string()),
            ("cohort.noise", c.noise.to_string()),
            ("cohort.signal", c.signal.to_string()),
            ("cohort.missing_rate", c.missing_rate.to_string()),
            ("cohort.site_levels", list(&c.vocab.site)),
            ("cohort.sex_levels", list(&c.vocab.sex)),
            ("cohort.ethnicity_levels", list(&c.vocab.ethnicity)),
            ("cohort.marital_status_levels", list(&c.vocab.marital_status)),
            ("encoder.channels", list(&self.encoder.channel_schedule)),
            ("encoder.kernel", self.encoder.kernel.to_string()),
            ("encoder.learning_rate", self.sgd.learning_rate.to_string()),
            ("encoder.momentum", self.sgd.momentum.to_string()),
            ("encoder.batch_size", self.sgd.batch_size.to_string()),
            ("encoder.epochs", self.sgd.epochs.to_string()),
            ("encoder.feature_scale", self.feature_scale.to_string()),
            ("gbm.learning_rate", self.gbm.learning_rate.to_string()),
            ("gbm.n_trees", self.gbm.n_trees.to_string()),
            ("gbm.max_depth", self.gbm.max_depth.to_string()),
            ("gbm.lambda", self.gbm.lambda.to_string()),
            ("gbm.alpha", self.gbm.alpha.to_string()),
            ("gbm.subsample", self.gbm.subsample.to_string()),
            ("grid.learning_rate", list(&g.coarse.learning_rate)),
            ("grid.n_trees", list(&g.coarse.n_trees)),
            ("grid.max_depth", list(&g.coarse.max_depth)),
            ("grid.lambda", list(&g.coarse.lambda)),
            ("grid.alpha", list(&g.coarse.alpha)),
            ("grid.fine_lr_factors", list(&g.fine.lr_factors)),
            ("grid.fine_depth_offsets", list(&g.fine.depth_offsets)),
            ("grid.subsample", g.subsample.to_string()),
        ]
    }

    fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let c = &mut self.cohort;
        let g = &mut self.grid;
        match key {
            "paths.workdir" => self.workdir = PathBuf::from(v),
            "global.seed" => self.seed = one(v)?,
            "cohort.n_train" => c.n_train = one(v)?,
            "cohort.n_val" => c.n_val = one(v)?,
            "cohort.n_test" => c.n_test = one(v)?,
            "cohort.volume_size" => c.volume_size = one(v)?,
            "cohort.noise" => c.noise = one(v)?,
            "cohort.signal" => c.signal = one(v)?,
            "cohort.missing_rate" => c.missing_rate = one(v)?,
            "cohort.site_levels" => c.vocab.site = many(v)?,
            "cohort.sex_levels" => c.vocab.sex = many(v)?,
            "cohort.ethnicity_levels" => c.vocab.ethnicity = many(v)?,
            "cohort.marital_status_levels" => c.vocab.marital_status = many(v)?,
            "encoder.channels" => self.encoder.channel_schedule = many(v)?,
            "encoder.kernel" => self.encoder.kernel = one(v)?,
            "encoder.learning_rate" => self.sgd.learning_rate = one(v)?,
            "encoder.momentum" => self.sgd.momentum = one(v)?,
            "encoder.batch_size" => self.sgd.batch_size = one(v)?,
            "encoder.epochs" => self.sgd.epochs = one(v)?,
            "encoder.feature_scale" => self.feature_scale = one(v)?,
            "gbm.learning_rate" => self.gbm.learning_rate = one(v)?,
            "gbm.n_trees" => self.gbm.n_trees = one(v)?,
            "gbm.max_depth" => self.gbm.max_depth = one(v)?,
            "gbm.lambda" => self.gbm.lambda = one(v)?,
            "gbm.alpha" => self.gbm.alpha = one(v)?,
            "gbm.subsample" => self.gbm.subsample = one(v)?,
            "grid.learning_rate" => g.coarse.learning_rate = many(v)?,
            "grid.n_trees" => g.coarse.n_trees = many(v)?,
            "grid.max_depth" => g.coarse.max_depth = many(v)?,
            "grid.lambda" => g.coarse.lambda = many(v)?,
            "grid.alpha" => g.coarse.alpha = many(v)?,
            "grid.fine_lr_factors" => g.fine.lr_factors = many(v)?,
            "grid.fine_depth_offsets" => g.fine.depth_offsets = many(v)?,
            "grid.subsample" => g.subsample = one(v)?,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Parses config text on top of the defaults and validates the result.
    pub fn parse(text: &str) -> CliResult<Self> {
        let mut cfg = Self::default();
        let mut problems = Vec::new();
        let mut seen = BTreeSet::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                problems.push(format!("line {}: expected `section.key = value`", no + 1));
                continue;
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                problems.push(format!("{key}: set more than once (line {})", no + 1));
                continue;
            }
            if let Err(e) = cfg.set(key, value) {
                problems.push(format!("{key}: {e} (line {})", no + 1));
            }
        }
        if !problems.is_empty() {
            return Err(CliError::Config(problems));
        }
        cfg.sync();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks every section; all failures are reported together.
    pub fn validate(&self) -> CliResult<()> {
        let mut problems = Vec::new();
        let mut check = |section: &str, r: voxboost_core::Result<()>| {
            if let Err(e) = r {
                problems.push(format!("{section}: {e}"));
            }
        };
        check("cohort", self.cohort.validate());
        check("encoder", self.encoder.validate());
        check("encoder", self.sgd.validate());
        if self.encoder.validate().is_ok() {
            check("encoder.feature_scale", self.encoder.feature_len(FeatureScale(self.feature_scale)).map(|_| ()));
        }
        check("gbm", self.gbm.validate());
        check("grid", self.grid.validate());
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Config(problems))
        }
    }

    /// The full config in parseable form.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for (key, value) in self.entries() {
            let s = key.split('.').next().unwrap_or("");
            if s != section {
                if !section.is_empty() {
                    out.push('\n');
                }
                section = s;
            }
            out += &format!("{key} = {value}\n");
        }
        out
    }
}

/// Hyperparameters as `gbm.*` lines, readable by [`read_hyperparams`].
pub fn render_hyperparams(h: &GbmHyperparams) -> String {
    format!(
        "gbm.learning_rate = {}\ngbm.n_trees = {}\ngbm.max_depth = {}\ngbm.lambda = {}\ngbm.alpha = {}\ngbm.subsample = {}\nglobal.seed = {}\n",
        h.learning_rate, h.n_trees, h.max_depth, h.lambda, h.alpha, h.subsample, h.seed
    )
}

pub fn read_hyperparams(path: &Path) -> CliResult<GbmHyperparams> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut cfg = RunConfig::default();
    let mut problems = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        match line.split_once('=') {
            Some((k, v)) if k.trim().starts_with("gbm.") || k.trim() == "global.seed" => {
                if let Err(e) = cfg.set(k.trim(), v.trim()) {
                    problems.push(format!("{}: {e}", k.trim()));
                }
            }
            _ => problems.push(format!("unexpected line {line:?}")),
        }
    }
    if !problems.is_empty() {
        return Err(CliError::format(path, problems.join("; ")));
    }
    let h = GbmHyperparams { seed: cfg.seed, ..cfg.gbm };
    h.validate()?;
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let d = RunConfig::default();
        assert_eq!(RunConfig::parse(&d.render()).unwrap(), d);
        assert_eq!(RunConfig::parse("").unwrap(), d);
    }

    #[test]
    fn every_offending_key_is_listed() {
        let err = RunConfig::parse("cohort.n_trian = 3\ngrid.max_depth = 2, x\nglobal.seed = 1\nglobal.seed = 2\n")
            .unwrap_err();
        let msg = err.to_string();
        for k in ["cohort.n_trian", "grid.max_depth", "global.seed"] {
            assert!(msg.contains(k), "{msg}");
        }
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn validation_reports_sections() {
        let msg = RunConfig::parse("cohort.volume_size = 10\ngrid.alpha =\n").unwrap_err().to_string();
        assert!(msg.contains("cohort") && msg.contains("grid"), "{msg}");
    }

    #[test]
    fn seed_reaches_every_section() {
        let c = RunConfig::parse("global.seed = 5").unwrap();
        assert_eq!((c.cohort.seed, c.sgd.seed, c.gbm.seed, c.grid.seed), (5, 5, 5, 5));
    }
}
