//! Model families behind one interface, plus the on-disk model container.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{Language, Line, StressLabel};
use crate::crf::{crf_viterbi, train_crf, CrfConfig, CrfModel};
use crate::encoding::{decode_to_stress, encode, EncodedSequence, LabelSet, Mode};
use crate::error::{Error, Result};
use crate::eval::{Tagger, Trainer};
use crate::features::FeatureSet;
use crate::hmm::{train_hmm, viterbi, HmmModel};
use crate::neural::{neural_predict, train_neural, BilstmCrfModel, NeuralConfig};
use crate::perceptron::{predict_perceptron, train_perceptron, PerceptronModel, DEFAULT_EPOCHS};
use crate::summary::TrainSummary;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Perceptron,
    Hmm,
    Crf,
    BilstmCrf,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Perceptron => "perceptron",
            Family::Hmm => "hmm",
            Family::Crf => "crf",
            Family::BilstmCrf => "bilstm-crf",
        }
    }

    pub fn uses_features(self) -> bool {
        matches!(self, Family::Perceptron | Family::Crf)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perceptron" => Ok(Family::Perceptron),
            "hmm" => Ok(Family::Hmm),
            "crf" => Ok(Family::Crf),
            "bilstm-crf" | "bilstm" | "lstm" => Ok(Family::BilstmCrf),
            other => Err(Error::Config(format!("unknown model family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub family: Family,
    /// `S2s` or `W2sp`; word boundaries are requested separately.
    pub mode: Mode,
    pub word_boundaries: bool,
    pub feature_set: FeatureSet,
    pub perceptron_epochs: usize,
    pub crf: CrfConfig,
    pub neural: NeuralConfig,
    /// Train on every gold reference of a line instead of the first only.
    pub all_references: bool,
    /// Share of the training lines held out for neural early stopping.
    pub dev_fraction: f64,
}

impl SystemConfig {
    pub fn new(family: Family) -> Self {
        SystemConfig {
            family,
            mode: Mode::S2s,
            word_boundaries: false,
            feature_set: FeatureSet::Full64,
            perceptron_epochs: DEFAULT_EPOCHS,
            crf: CrfConfig::default(),
            neural: NeuralConfig::default(),
            all_references: false,
            dev_fraction: 0.1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.word_boundaries && self.mode != Mode::S2s {
            return Err(Error::Config(format!(
                "word boundaries require mode s2s, got {}",
                self.mode
            )));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::Config(format!(
                "dev fraction must be in [0, 1), got {}",
                self.dev_fraction
            )));
        }
        if self.family == Family::BilstmCrf
            && self.neural.pretrained.is_some()
            && self.encoding() != Mode::W2sp
        {
            return Err(Error::Config(format!(
                "pretrained embeddings are word vectors and need mode w2sp, got {}",
                self.encoding()
            )));
        }
        Ok(())
    }

    /// Encoding actually used for the data.
    pub fn encoding(&self) -> Mode {
        if self.word_boundaries {
            Mode::S2sWb
        } else {
            self.mode
        }
    }

    pub fn describe(&self) -> String {
        let mut name = self.family.name().to_string();
        if self.family.uses_features() {
            name.push('/');
            name.push_str(&self.feature_set.to_string());
        }
        format!("{name} ({})", self.encoding())
    }
}

pub enum TrainedModel {
    Perceptron(PerceptronModel),
    Hmm(HmmModel),
    Crf(CrfModel),
    BilstmCrf(BilstmCrfModel),
}

impl TrainedModel {
    pub fn family(&self) -> Family {
        match self {
            TrainedModel::Perceptron(_) => Family::Perceptron,
            TrainedModel::Hmm(_) => Family::Hmm,
            TrainedModel::Crf(_) => Family::Crf,
            TrainedModel::BilstmCrf(_) => Family::BilstmCrf,
        }
    }

    pub fn labels(&self) -> &LabelSet {
        match self {
            TrainedModel::Perceptron(m) => &m.labels,
            TrainedModel::Hmm(m) => &m.labels,
            TrainedModel::Crf(m) => &m.labels,
            TrainedModel::BilstmCrf(m) => &m.labels,
        }
    }

    pub fn predict_labels(&self, seq: &EncodedSequence) -> Vec<String> {
        match self {
            TrainedModel::Perceptron(m) => predict_perceptron(m, seq),
            TrainedModel::Hmm(m) => viterbi(m, &seq.observations),
            TrainedModel::Crf(m) => crf_viterbi(m, seq),
            TrainedModel::BilstmCrf(m) => neural_predict(m, seq),
        }
    }

    fn payload(&self) -> Result<serde_json::Value> {
        Ok(match self {
            TrainedModel::Perceptron(m) => serde_json::to_value(m)?,
            TrainedModel::Hmm(m) => serde_json::to_value(m)?,
            TrainedModel::Crf(m) => serde_json::to_value(m)?,
            TrainedModel::BilstmCrf(m) => serde_json::to_value(m)?,
        })
    }

    fn from_payload(family: Family, payload: serde_json::Value) -> Result<Self> {
        Ok(match family {
            Family::Perceptron => {
                let mut m: PerceptronModel = serde_json::from_value(payload)?;
                m.features.reindex();
                TrainedModel::Perceptron(m)
            }
            Family::Hmm => TrainedModel::Hmm(serde_json::from_value(payload)?),
            Family::Crf => {
                let mut m: CrfModel = serde_json::from_value(payload)?;
                m.features.reindex();
                TrainedModel::Crf(m)
            }
            Family::BilstmCrf => TrainedModel::BilstmCrf(serde_json::from_value(payload)?),
        })
    }
}

/// A trained model with the encoding and language it was trained for.
pub struct SystemModel {
    pub mode: Mode,
    pub language: Language,
    pub model: TrainedModel,
}

impl SystemModel {
    pub fn family(&self) -> Family {
        self.model.family()
    }

    /// Predicted stress sequence for a line (boundary labels removed).
    pub fn predict(&self, line: &Line) -> Result<Vec<StressLabel>> {
        let seq = encode(line, self.mode, 0)?;
        let labels = self.model.predict_labels(&seq);
        decode_to_stress(&labels, self.mode, line)
    }
}

impl Tagger for SystemModel {
    fn predict(&self, line: &Line) -> Result<Vec<StressLabel>> {
        SystemModel::predict(self, line)
    }
}

/// Encodes lines for training, with one sequence per line or per reference.
pub fn encode_lines(lines: &[Line], mode: Mode, all_references: bool) -> Result<Vec<EncodedSequence>> {
    let mut out = Vec::with_capacity(lines.len());
    for line in lines {
        let refs = if all_references { line.gold.len() } else { 1 };
        for r in 0..refs {
            out.push(encode(line, mode, r)?);
        }
    }
    Ok(out)
}

pub fn train_system(config: &SystemConfig, lines: &[Line], seed: u64) -> Result<(SystemModel, TrainSummary)> {
    config.validate()?;
    if lines.is_empty() {
        return Err(Error::Precondition("no training lines".into()));
    }
    let mode = config.encoding();
    let (model, summary) = match config.family {
        Family::Perceptron => {
            let data = encode_lines(lines, mode, config.all_references)?;
            let (m, s) = train_perceptron(&data, config.feature_set, config.perceptron_epochs, seed)?;
            (TrainedModel::Perceptron(m), s)
        }
        Family::Hmm => {
            let data = encode_lines(lines, mode, config.all_references)?;
            let (m, s) = train_hmm(&data)?;
            (TrainedModel::Hmm(m), s)
        }
        Family::Crf => {
            let data = encode_lines(lines, mode, config.all_references)?;
            let crf = CrfConfig { seed, ..config.crf };
            let (m, s) = train_crf(&data, config.feature_set, &crf)?;
            (TrainedModel::Crf(m), s)
        }
        Family::BilstmCrf => {
            let held = if lines.len() >= 10 {
                ((lines.len() as f64 * config.dev_fraction).round() as usize).min(lines.len() - 1)
            } else {
                0
            };
            let (train, dev) = lines.split_at(lines.len() - held);
            let train = encode_lines(train, mode, config.all_references)?;
            let dev = encode_lines(dev, mode, false)?;
            let neural = NeuralConfig {
                seed,
                ..config.neural.clone()
            };
            let (m, s) = train_neural(&train, &dev, &neural)?;
            (TrainedModel::BilstmCrf(m), s)
        }
    };
    Ok((
        SystemModel {
            mode,
            language: lines[0].language,
            model,
        },
        summary,
    ))
}

impl Trainer for SystemConfig {
    fn train(&self, lines: &[Line], seed: u64) -> Result<Box<dyn Tagger>> {
        Ok(Box::new(train_system(self, lines, seed)?.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEnvelope {
    pub format_version: u32,
    pub family: Family,
    pub language: Language,
    pub mode: Mode,
    pub label_alphabet: Vec<String>,
    pub payload: serde_json::Value,
}

pub fn model_to_json(model: &SystemModel) -> Result<String> {
    let envelope = ModelEnvelope {
        format_version: FORMAT_VERSION,
        family: model.family(),
        language: model.language,
        mode: model.mode,
        label_alphabet: model.model.labels().names().to_vec(),
        payload: model.model.payload()?,
    };
    Ok(serde_json::to_string(&envelope)?)
}

pub fn model_from_json(text: &str, expected: Option<Family>) -> Result<SystemModel> {
    let envelope: ModelEnvelope =
        serde_json::from_str(text).map_err(|e| Error::ModelFile(format!("not a model file: {e}")))?;
    if envelope.format_version != FORMAT_VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            envelope.format_version
        )));
    }
    if let Some(family) = expected {
        if family != envelope.family {
            return Err(Error::ModelFile(format!(
                "model file holds a {} model, expected {family}",
                envelope.family
            )));
        }
    }
    let model = TrainedModel::from_payload(envelope.family, envelope.payload)
        .map_err(|e| Error::ModelFile(format!("corrupt {} payload: {e}", envelope.family)))?;
    if model.labels().names() != envelope.label_alphabet.as_slice() {
        return Err(Error::ModelFile("label alphabet does not match payload".into()));
    }
    Ok(SystemModel {
        mode: envelope.mode,
        language: envelope.language,
        model,
    })
}

pub fn save_model(model: &SystemModel, path: &Path) -> Result<()> {
    std::fs::write(path, model_to_json(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path, expected: Option<Family>) -> Result<SystemModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_json(&text, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic, MeterSpec};
    use crate::neural::Dims;

    fn quick(family: Family) -> SystemConfig {
        let mut c = SystemConfig::new(family);
        c.crf.epochs = 5;
        c.perceptron_epochs = 3;
        c.neural.epochs = 2;
        c.neural.dims = Dims {
            char_embedding: 3,
            char_hidden: 3,
            token_embedding: 4,
            word_hidden: 5,
        };
        c
    }

    #[test]
    fn round_trip_every_family() {
        let corpus = generate_synthetic(MeterSpec::iambic_pentameter(), 20, 0.1, 1).unwrap();
        for family in [Family::Perceptron, Family::Hmm, Family::Crf, Family::BilstmCrf] {
            for wb in [false, true] {
                let mut config = quick(family);
                config.word_boundaries = wb;
                let (model, summary) = train_system(&config, &corpus.lines, 3).unwrap();
                assert_eq!(summary.family, family.name());
                let text = model_to_json(&model).unwrap();
                let loaded = model_from_json(&text, Some(family)).unwrap();
                assert_eq!(model_to_json(&loaded).unwrap(), text);
                for line in &corpus.lines {
                    let pred = model.predict(line).unwrap();
                    // a boundary label predicted on a syllable is dropped
                    assert!(pred.len() <= line.segment_count());
                    assert_eq!(loaded.predict(line).unwrap(), pred);
                }
                let other = if family == Family::Hmm {
                    Family::Crf
                } else {
                    Family::Hmm
                };
                assert!(matches!(
                    model_from_json(&text, Some(other)),
                    Err(Error::ModelFile(_))
                ));
            }
        }
    }

    #[test]
    fn config_rules() {
        let mut c = SystemConfig::new(Family::Crf);
        c.mode = Mode::W2sp;
        c.word_boundaries = true;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut n = SystemConfig::new(Family::BilstmCrf);
        n.neural.pretrained = Some("vectors.txt".into());
        assert!(matches!(n.validate(), Err(Error::Config(_))));
        n.mode = Mode::W2sp;
        assert!(n.validate().is_ok());
        assert!("bilstm-crf".parse::<Family>().is_ok());
        assert!("svm".parse::<Family>().is_err());
        assert!(model_from_json("{}", None).is_err());
    }
}
