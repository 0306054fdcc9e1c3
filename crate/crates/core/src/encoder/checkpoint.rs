use std::collections::BTreeMap;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, Params};
use crate::autodiff::Matrix;
use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    vocabulary: String,
    patterns: Vec<String>,
    config: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    params: BTreeMap<String, Matrix>,
}

impl Model {
    pub fn to_json(&self, config_hash: Option<&str>) -> Result<String> {
        let mut params = BTreeMap::new();
        self.params.visit(&mut |name, m| {
            params.insert(name, m.clone());
        });
        let ck = Checkpoint {
            version: CHECKPOINT_VERSION,
            vocabulary: self.vocabulary.clone(),
            patterns: self.patterns.clone(),
            config: self.config.clone(),
            config_hash: config_hash.map(str::to_owned),
            params,
        };
        Ok(serde_json::to_string(&ck)?)
    }

    /// Parses a checkpoint; returns the model and the embedded config hash.
    pub fn from_json(text: &str) -> Result<(Model, Option<String>)> {
        let ck: Checkpoint = serde_json::from_str(text)?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                ck.version
            )));
        }
        ck.config.validate()?;
        let dims = ck.config.dims(ck.patterns.len());
        let mut params = Params::init(dims, &mut ChaCha8Rng::seed_from_u64(0));
        let mut stored = ck.params;
        let mut problem: Option<String> = None;
        params.visit_mut(&mut |name, slot| {
            if problem.is_some() {
                return;
            }
            match stored.remove(&name) {
                Some(m) if m.shape() == slot.shape() && m.data().len() == m.rows() * m.cols() => *slot = m,
                Some(m) => {
                    problem = Some(format!(
                        "tensor `{name}` is {}x{}, expected {}x{}",
                        m.rows(),
                        m.cols(),
                        slot.rows(),
                        slot.cols()
                    ))
                }
                None => problem = Some(format!("missing tensor `{name}`")),
            }
        });
        if let Some(p) = problem {
            return Err(Error::Checkpoint(p));
        }
        if let Some(extra) = stored.keys().next() {
            return Err(Error::Checkpoint(format!("unexpected tensor `{extra}`")));
        }
        let model = Model {
            config: ck.config,
            vocabulary: ck.vocabulary,
            patterns: ck.patterns,
            params,
        };
        Ok((model, ck.config_hash))
    }

    pub fn save(&self, path: impl AsRef<Path>, config_hash: Option<&str>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json(config_hash)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<(Model, Option<String>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Model::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vocabulary::builtin_vocabulary;

    fn model() -> Model {
        let cfg = ModelConfig {
            dim: 4,
            relation_layers: 1,
            entity_layers: 2,
            ..ModelConfig::default()
        };
        Model::new(cfg, &builtin_vocabulary("V2").unwrap()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let (back, hash) = Model::from_json(&m.to_json(Some("feed")).unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(hash.as_deref(), Some("feed"));
    }

    #[test]
    fn missing_tensor_rejected() {
        let text = model().to_json(None).unwrap().replace("\"head.b0\"", "\"head.zz\"");
        assert!(matches!(Model::from_json(&text), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn wrong_version_rejected() {
        let text = model()
            .to_json(None)
            .unwrap()
            .replacen("\"version\":1", "\"version\":9", 1);
        assert!(matches!(Model::from_json(&text), Err(Error::Checkpoint(_))));
    }
}
