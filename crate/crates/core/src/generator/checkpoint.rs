//! Model checkpoint file: a JSON document with a format tag and version,
//! the model shape, the vocabulary and every parameter tensor.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{NgmConfig, NgmModel, NgmParams, NoiseGenerator, Vocab};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "asr-noise-ngm";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize)]
struct CheckpointRef<'a> {
    format: &'a str,
    version: u32,
    config: &'a NgmConfig,
    vocab: &'a Vocab,
    params: &'a NgmParams,
}

#[derive(Deserialize)]
struct CheckpointOwned {
    format: String,
    version: u32,
    config: NgmConfig,
    vocab: Vocab,
    params: NgmParams,
}

impl NoiseGenerator {
    pub fn write_checkpoint<W: Write>(&self, out: W) -> Result<()> {
        let doc = CheckpointRef {
            format: CHECKPOINT_FORMAT,
            version: CHECKPOINT_VERSION,
            config: &self.model.config,
            vocab: &self.vocab,
            params: &self.model.params,
        };
        serde_json::to_writer(out, &doc)?;
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(input: R) -> Result<Self> {
        let doc: CheckpointOwned = serde_json::from_reader(input)?;
        if doc.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", doc.format)));
        }
        if doc.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "version {} is not supported (expected {CHECKPOINT_VERSION})",
                doc.version
            )));
        }
        let expected = NgmParams::zeros(&doc.config);
        let shapes_match = expected
            .named_slices()
            .iter()
            .zip(doc.params.named_slices())
            .all(|((_, a), (_, b))| a.len() == b.len())
            && expected.named_slices().len() == doc.params.named_slices().len()
            && doc.params.token_embedding.dim() == expected.token_embedding.dim()
            && doc.params.position_embedding.dim() == expected.position_embedding.dim();
        if !shapes_match {
            return Err(Error::Checkpoint(
                "parameter shapes do not match the stored config".into(),
            ));
        }
        let model = NgmModel::new(doc.config, doc.params)?;
        NoiseGenerator::new(doc.vocab, model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io_at(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_checkpoint(&mut w)?;
        w.flush().map_err(|e| Error::io_at(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io_at(path, e))?;
        Self::read_checkpoint(std::io::BufReader::new(file))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn small() -> NoiseGenerator {
        let vocab = Vocab::from_surface(["a".to_string(), "b".to_string()]);
        let cfg = NgmConfig {
            n_layers: 1,
            d_model: 4,
            n_heads: 2,
            d_ff: 8,
            context_window: 6,
            vocab_size: vocab.len(),
        };
        NoiseGenerator::new(vocab, NgmModel::init(cfg, 0.5, &mut seeded(2)).unwrap()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let g = small();
        let mut buf = Vec::new();
        g.write_checkpoint(&mut buf).unwrap();
        let back = NoiseGenerator::read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn rejects_other_versions() {
        let g = small();
        let mut buf = Vec::new();
        g.write_checkpoint(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("\"version\":1", "\"version\":9");
        assert!(matches!(
            NoiseGenerator::read_checkpoint(text.as_bytes()),
            Err(Error::Checkpoint(_))
        ));
    }
}
