//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [model]
//! n = 6
//! n_ancilla = 2
//! t_steps = 4
//! l0 = 6
//! family = "circuit1"
//! scrambler_layers = 2
//!
//! [schedule]
//! kind = "cosine"
//! lambda_s = 0.1
//!
//! [loss]
//! lambda_kl = 0.5
//! lambda_l1 = 5.0
//!
//! [optim]
//! lr = 0.0005
//! epochs_per_block = 50
//! batch_size = 32
//! lr_step = 10
//! lr_gamma = 0.05
//!
//! [data]
//! images = "train-images-idx3-ubyte.gz"
//! labels = "train-labels-idx1-ubyte.gz"
//! class = 0
//! resize = 8
//! samples = 1000
//! ```
//!
//! Unknown keys are rejected. Relative data paths resolve against the
//! directory of the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::Family;
use crate::data::qubits_for_side;
use crate::reverse::ModelSpec;
use crate::schedule::ScheduleKind;
use crate::train::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub n_ancilla: usize,
    pub t_steps: usize,
    pub l0: usize,
    pub family: String,
    pub scrambler_layers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: String,
    pub lambda_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    pub lambda_kl: f64,
    pub lambda_l1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimSection {
    pub lr: f64,
    pub epochs_per_block: usize,
    pub batch_size: usize,
    pub lr_step: usize,
    pub lr_gamma: f64,
}

fn default_samples() -> usize {
    1000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub images: PathBuf,
    pub labels: PathBuf,
    pub class: u8,
    pub resize: usize,
    /// Images per class, first ones in file order.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub model: ModelSection,
    pub schedule: ScheduleSection,
    pub loss: LossSection,
    pub optim: OptimSection,
    pub data: DataSection,
    /// Directory relative data paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn toml_error(e: toml::de::Error) -> Error {
    Error::config("config", e.to_string().trim_end())
}

impl RunConfig {
    /// Parses and validates; relative paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(toml_error)?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, dir)
    }

    pub fn family(&self) -> Result<Family> {
        let f: Family = self.model.family.parse().map_err(|_| {
            Error::config(
                "model.family",
                format!("unknown circuit family '{}'", self.model.family),
            )
        })?;
        if f == Family::Scrambler {
            return Err(Error::config(
                "model.family",
                "the scrambler is not a denoiser family",
            ));
        }
        Ok(f)
    }

    pub fn schedule_kind(&self) -> Result<ScheduleKind> {
        self.schedule.kind.parse().map_err(|_| {
            Error::config(
                "schedule.kind",
                format!("unknown schedule '{}'", self.schedule.kind),
            )
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.family()?;
        self.schedule_kind()?;
        let m = &self.model;
        if m.n == 0 {
            return Err(Error::config("model.n", "must be at least 1"));
        }
        if m.t_steps == 0 {
            return Err(Error::config("model.t_steps", "must be at least 1"));
        }
        if m.n + m.n_ancilla < 2 {
            return Err(Error::config(
                "model.n_ancilla",
                "circuits need at least 2 qubits in total",
            ));
        }
        if m.n < 2 {
            return Err(Error::config(
                "model.n",
                "the scrambler needs at least 2 data qubits",
            ));
        }
        if m.scrambler_layers == 0 {
            return Err(Error::config(
                "model.scrambler_layers",
                "must be at least 1",
            ));
        }
        if m.n + m.n_ancilla > 24 {
            return Err(Error::config(
                "model.n",
                "more than 24 qubits in total is not supported",
            ));
        }
        if !(0.0..=1.0).contains(&self.schedule.lambda_s) {
            return Err(Error::config("schedule.lambda_s", "must lie in [0, 1]"));
        }
        self.train_config().validate()?;
        let d = &self.data;
        if d.resize == 0 {
            return Err(Error::config("data.resize", "must be at least 1"));
        }
        if qubits_for_side(d.resize) != m.n {
            return Err(Error::config(
                "data.resize",
                format!(
                    "a {0}x{0} image needs n = {1} qubits, model.n is {2}",
                    d.resize,
                    qubits_for_side(d.resize),
                    m.n
                ),
            ));
        }
        if d.samples == 0 {
            return Err(Error::config("data.samples", "must be at least 1"));
        }
        Ok(())
    }

    pub fn model_spec(&self) -> Result<ModelSpec> {
        Ok(ModelSpec {
            num_data: self.model.n,
            num_ancilla: self.model.n_ancilla,
            t_steps: self.model.t_steps,
            l0: self.model.l0,
            family: self.family()?,
            scrambler_layers: self.model.scrambler_layers,
            schedule: self.schedule_kind()?,
            lambda_s: self.schedule.lambda_s,
            seed: self.seed,
        })
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lambda_kl: self.loss.lambda_kl,
            lambda_l1: self.loss.lambda_l1,
            lr: self.optim.lr,
            epochs_per_block: self.optim.epochs_per_block,
            batch_size: self.optim.batch_size,
            lr_step: self.optim.lr_step,
            lr_gamma: self.optim.lr_gamma,
        }
    }

    pub fn images_path(&self) -> PathBuf {
        self.base_dir.join(&self.data.images)
    }

    pub fn labels_path(&self) -> PathBuf {
        self.base_dir.join(&self.data.labels)
    }

    /// Canonical TOML text (key order fixed by the struct layout).
    pub fn to_canonical(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    /// Hex SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        sha256_hex(self.to_canonical().as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
seed = 7
[model]
n = 6
n_ancilla = 2
t_steps = 4
l0 = 6
family = "circuit1"
scrambler_layers = 2
[schedule]
kind = "cosine"
lambda_s = 0.1
[loss]
lambda_kl = 0.5
lambda_l1 = 5.0
[optim]
lr = 0.0005
epochs_per_block = 10
batch_size = 8
lr_step = 10
lr_gamma = 0.05
[data]
images = "img.gz"
labels = "lab.gz"
class = 3
resize = 8
samples = 64
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = RunConfig::parse(TOY, Path::new("/data")).unwrap();
        assert_eq!(cfg.model.n, 6);
        assert_eq!(cfg.images_path(), PathBuf::from("/data/img.gz"));
        let again = RunConfig::parse(&cfg.to_canonical(), Path::new("/data")).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
    }

    #[test]
    fn samples_default() {
        let text = TOY.replace("samples = 64\n", "");
        assert_eq!(
            RunConfig::parse(&text, Path::new("."))
                .unwrap()
                .data
                .samples,
            1000
        );
    }

    #[test]
    fn unknown_key_rejected() {
        let text = TOY.replace("l0 = 6", "l0 = 6\ndepth = 3");
        let err = RunConfig::parse(&text, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(err.contains("depth"), "{err}");
    }

    #[test]
    fn bad_family_names_key() {
        let text = TOY.replace("circuit1", "circuit9");
        let err = RunConfig::parse(&text, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(err.contains("model.family"), "{err}");
    }

    #[test]
    fn resize_must_match_qubits() {
        let text = TOY.replace("resize = 8", "resize = 16");
        let err = RunConfig::parse(&text, Path::new("."))
            .unwrap_err()
            .to_string();
        assert!(err.contains("data.resize"), "{err}");
    }

    #[test]
    fn invalid_numbers() {
        for (from, to, key) in [
            ("batch_size = 8", "batch_size = 0", "optim.batch_size"),
            ("lambda_kl = 0.5", "lambda_kl = -1.0", "loss.lambda_kl"),
            ("lambda_s = 0.1", "lambda_s = 2.0", "schedule.lambda_s"),
            ("kind = \"cosine\"", "kind = \"quad\"", "schedule.kind"),
        ] {
            let err = RunConfig::parse(&TOY.replace(from, to), Path::new("."))
                .unwrap_err()
                .to_string();
            assert!(err.contains(key), "{err}");
        }
    }
}
