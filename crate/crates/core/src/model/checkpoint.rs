//! JSON checkpoint: config header plus every parameter as role, name, shape
//! and row-major values.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig};
use crate::autodiff::Array2;
use crate::error::{Error, Result};
use crate::params::{ParamStore, Role};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredParam {
    pub role: Role,
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub config: ModelConfig,
    pub params: Vec<StoredParam>,
}

impl Checkpoint {
    pub fn from_model(model: &Model) -> Self {
        let params = model
            .store
            .iter()
            .map(|(_, p)| StoredParam {
                role: p.role,
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                values: p.value.data().to_vec(),
            })
            .collect();
        Self {
            format_version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            params,
        }
    }

    pub fn into_model(self) -> Result<Model> {
        if self.format_version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format_version {}",
                self.format_version
            )));
        }
        let mut store = ParamStore::new();
        for p in self.params {
            if store.find(&p.name).is_some() {
                return Err(Error::Checkpoint(format!("duplicate parameter {}", p.name)));
            }
            let value = Array2::from_vec(p.rows, p.cols, p.values)
                .map_err(|e| Error::Checkpoint(format!("{}: {e}", p.name)))?;
            if !value.is_finite() {
                return Err(Error::Checkpoint(format!("{}: non-finite value", p.name)));
            }
            store.add(p.role, p.name, value);
        }
        Model::from_store(self.config, store)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))
    }
}

pub fn write_checkpoint(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, Checkpoint::from_model(model).to_json()).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_json(&text)?.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config() -> ModelConfig {
        ModelConfig {
            image_dim: 6,
            latent_dim: 5,
            vocab_size: 9,
            embed_dim: 4,
            lstm_hidden: 3,
            transformer_layers: 4,
            disc_hidden: 7,
            max_seq_len: 8,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let model = Model::new(config(), 11).unwrap();
        let text = Checkpoint::from_model(&model).to_json();
        let back = Checkpoint::from_json(&text).unwrap().into_model().unwrap();
        assert_eq!(back.config, model.config);
        for ((_, a), (_, b)) in model.store.iter().zip(back.store.iter()) {
            assert_eq!(a.name, b.name);
            let bits_a: Vec<u64> = a.value.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.value.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b, "{}", a.name);
        }
    }

    #[test]
    fn rejects_wrong_version_and_shapes() {
        let model = Model::new(config(), 1).unwrap();
        let mut ck = Checkpoint::from_model(&model);
        ck.format_version = 2;
        assert!(ck.clone().into_model().is_err());
        ck.format_version = 1;
        ck.params[0].rows += 1;
        assert!(ck.into_model().is_err());
    }

    #[test]
    fn rejects_missing_parameter() {
        let model = Model::new(config(), 1).unwrap();
        let mut ck = Checkpoint::from_model(&model);
        ck.params.pop();
        assert!(ck.into_model().is_err());
    }

    #[test]
    fn garbage_is_an_error_not_a_panic() {
        assert!(Checkpoint::from_json("{").is_err());
        assert!(Checkpoint::from_json("[]").is_err());
    }
}
