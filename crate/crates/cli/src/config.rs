use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use metron::encoding::Mode;
use metron::features::FeatureSet;
use metron::system::{Family, SystemConfig};

/// Model selection and hyperparameters shared by `train` and `cv`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Model family: perceptron, hmm, crf or bilstm-crf.
    #[arg(long = "model")]
    pub family: Family,
    /// Tagging task: s2s (syllable to stress) or w2sp (word to stress pattern).
    #[arg(long, default_value = "s2s")]
    pub mode: Mode,
    /// Insert word-boundary tokens (s2s only).
    #[arg(long)]
    pub word_boundaries: bool,
    /// Feature templates for perceptron and crf: basic10 or full64.
    #[arg(long)]
    pub features: Option<FeatureSet>,
    /// Random seed; falls back to METRON_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Training epochs for the selected family.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// CRF Gaussian prior variance.
    #[arg(long)]
    pub sigma2: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// BiLSTM-CRF dropout rate.
    #[arg(long)]
    pub dropout: Option<f64>,
    /// BiLSTM-CRF global gradient-norm limit.
    #[arg(long)]
    pub clip: Option<f64>,
    #[arg(long)]
    pub char_embedding_dim: Option<usize>,
    #[arg(long)]
    pub char_hidden_dim: Option<usize>,
    #[arg(long)]
    pub token_embedding_dim: Option<usize>,
    #[arg(long)]
    pub word_hidden_dim: Option<usize>,
    /// Pretrained token embeddings (`token v1 ... vd` per line).
    #[arg(long)]
    pub pretrained: Option<PathBuf>,
    /// Share of training lines held out for BiLSTM-CRF model selection.
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    /// Train on every gold reference instead of the first.
    #[arg(long)]
    pub all_references: bool,
}

pub fn resolve_seed(seed: Option<u64>) -> Result<u64> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var("METRON_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .with_context(|| format!("METRON_SEED is not an unsigned integer: {v:?}")),
        Err(_) => Ok(0),
    }
}

impl ModelArgs {
    pub fn to_config(&self) -> Result<SystemConfig> {
        let mut config = SystemConfig::new(self.family);
        if self.mode == Mode::S2sWb {
            bail!("use --mode s2s with --word-boundaries instead of {}", self.mode);
        }
        config.mode = self.mode;
        config.word_boundaries = self.word_boundaries;
        if let Some(f) = self.features {
            if self.family.uses_features() {
                config.feature_set = f;
            } else {
                eprintln!("WARNING: --features is ignored for the {} model", self.family);
            }
        }
        let pairs = [
            ("epochs", self.epochs.map(|v| v.to_string())),
            ("sigma2", self.sigma2.map(|v| v.to_string())),
            ("learning-rate", self.learning_rate.map(|v| v.to_string())),
            ("batch-size", self.batch_size.map(|v| v.to_string())),
            ("dropout", self.dropout.map(|v| v.to_string())),
            ("clip", self.clip.map(|v| v.to_string())),
            (
                "char-embedding-dim",
                self.char_embedding_dim.map(|v| v.to_string()),
            ),
            ("char-hidden-dim", self.char_hidden_dim.map(|v| v.to_string())),
            (
                "token-embedding-dim",
                self.token_embedding_dim.map(|v| v.to_string()),
            ),
            ("word-hidden-dim", self.word_hidden_dim.map(|v| v.to_string())),
            ("dev-fraction", self.dev_fraction.map(|v| v.to_string())),
            (
                "pretrained",
                self.pretrained.as_ref().map(|p| p.display().to_string()),
            ),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                apply_override(&mut config, key, &v)?;
            }
        }
        config.all_references = self.all_references;
        config.validate()?;
        Ok(config)
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("invalid value {value:?} for {key}: {e}"))
}

/// Sets one named option. Keys use the command-line spelling without dashes.
pub fn apply_override(config: &mut SystemConfig, key: &str, value: &str) -> Result<()> {
    match key.replace('_', "-").as_str() {
        "model" => {
            let family: Family = parse(key, value)?;
            let mut fresh = SystemConfig::new(family);
            fresh.mode = config.mode;
            fresh.word_boundaries = config.word_boundaries;
            fresh.feature_set = config.feature_set;
            fresh.all_references = config.all_references;
            *config = fresh;
        }
        "mode" => config.mode = parse(key, value)?,
        "word-boundaries" => config.word_boundaries = parse(key, value)?,
        "features" => config.feature_set = parse(key, value)?,
        "all-references" => config.all_references = parse(key, value)?,
        "epochs" => {
            let epochs: usize = parse(key, value)?;
            match config.family {
                Family::Perceptron => config.perceptron_epochs = epochs,
                Family::Crf => config.crf.epochs = epochs,
                Family::BilstmCrf => config.neural.epochs = epochs,
                Family::Hmm => eprintln!("WARNING: epochs is ignored for the hmm model"),
            }
        }
        "sigma2" => config.crf.sigma2 = parse(key, value)?,
        "learning-rate" => {
            let lr = parse(key, value)?;
            config.crf.learning_rate = lr;
            config.neural.learning_rate = lr;
        }
        "batch-size" => {
            let b = parse(key, value)?;
            config.crf.batch_size = b;
            config.neural.batch_size = b;
        }
        "dropout" => config.neural.dropout = parse(key, value)?,
        "clip" => config.neural.clip = parse(key, value)?,
        "char-embedding-dim" => config.neural.dims.char_embedding = parse(key, value)?,
        "char-hidden-dim" => config.neural.dims.char_hidden = parse(key, value)?,
        "token-embedding-dim" => config.neural.dims.token_embedding = parse(key, value)?,
        "word-hidden-dim" => config.neural.dims.word_hidden = parse(key, value)?,
        "dev-fraction" => config.dev_fraction = parse(key, value)?,
        "pretrained" => config.neural.pretrained = Some(PathBuf::from(value)),
        other => bail!("unknown option `{other}`"),
    }
    Ok(())
}

/// Applies a `key=value,key=value` list on top of `base`.
pub fn apply_overrides(base: &SystemConfig, spec: &str) -> Result<SystemConfig> {
    let mut config = base.clone();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = item
            .split_once('=')
            .with_context(|| format!("expected key=value, got {item:?}"))?;
        apply_override(&mut config, key.trim(), value.trim())?;
    }
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_switch_family_and_keep_task() {
        let mut base = SystemConfig::new(Family::Hmm);
        base.word_boundaries = true;
        let other = apply_overrides(&base, "model=crf, features=basic10, epochs=7").unwrap();
        assert_eq!(other.family, Family::Crf);
        assert!(other.word_boundaries);
        assert_eq!(other.feature_set, FeatureSet::Basic10);
        assert_eq!(other.crf.epochs, 7);
        assert!(apply_overrides(&base, "colour=blue").is_err());
        assert!(apply_overrides(&base, "mode=w2sp").is_err());
    }
}
