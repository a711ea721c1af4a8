//! Trainable classifiers with hand-written forward and backward passes.
//!
//! Two kinds share one parameter layout convention:
//!
//! * `LOGREG`: multinomial logistic regression over normalized bag-of-words
//!   features, optionally fused with the lexicon block.
//! * `TEXTCNN`: embeddings, one 1-D convolution per filter width, ReLU,
//!   max-over-time pooling, optional lexicon fusion, dropout, then a
//!   linear output layer with softmax.
//!
//! All arithmetic is `f64`.

mod checkpoint;
mod gradcheck;
mod network;
mod optim;
mod train;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::features::{EmbeddingMatrix, Scaling};
use crate::seed;

pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
pub use gradcheck::{gradient_check, TensorCheck};
pub use network::{
    backward, cross_entropy, forward, predict, predict_batch, ForwardCache, Grad, Gradients,
};
pub use optim::Optimizer;
pub use train::{train, Dataset, EpochRecord, TrainHistory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    #[serde(alias = "logreg")]
    Logreg,
    #[serde(alias = "textcnn")]
    Textcnn,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Logreg => "LOGREG",
            ModelKind::Textcnn => "TEXTCNN",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace(['-', '_'], "").as_str() {
            "LOGREG" => Ok(ModelKind::Logreg),
            "TEXTCNN" => Ok(ModelKind::Textcnn),
            _ => Err(Error::config(format!("unknown model kind `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OptimizerKind {
    #[serde(alias = "sgd")]
    Sgd,
    #[serde(alias = "adam")]
    Adam,
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SGD" => Ok(OptimizerKind::Sgd),
            "ADAM" => Ok(OptimizerKind::Adam),
            _ => Err(Error::config(format!("unknown optimizer `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub kind: ModelKind,
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    pub dropout: f64,
    pub max_len: usize,
    pub batch_size: usize,
    /// Width of the fused lexicon block; 0 disables fusion.
    pub lexicon_dim: usize,
    pub lexicon_scaling: Scaling,
    pub class_count: usize,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Epochs without dev macro-F1 improvement before stopping.
    pub patience: usize,
    pub vocab_size: usize,
    pub embedding_dim: usize,
    pub trainable_embeddings: bool,
    /// Per-class loss weights; `None` weighs every class 1.
    pub class_weights: Option<Vec<f64>>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Textcnn,
            filter_widths: vec![1, 2, 3, 5],
            filters_per_width: 32,
            dropout: 0.2,
            max_len: 100,
            batch_size: 32,
            lexicon_dim: 0,
            lexicon_scaling: Scaling::Log1p,
            class_count: 2,
            seed: 42,
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-3,
            epochs: 20,
            patience: 5,
            vocab_size: 2,
            embedding_dim: 300,
            trainable_embeddings: true,
            class_weights: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::config(m));
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} is outside [0, 1)", self.dropout));
        }
        if self.class_count < 2 {
            return fail(format!(
                "class_count {} must be at least 2",
                self.class_count
            ));
        }
        if self.max_len == 0 || self.batch_size == 0 || self.epochs == 0 {
            return fail("max_len, batch_size and epochs must be positive".into());
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return fail(format!(
                "learning rate {} must be positive",
                self.learning_rate
            ));
        }
        if self.vocab_size < 2 {
            return fail("vocabulary must contain at least PAD and UNK".into());
        }
        if let Some(w) = &self.class_weights {
            if w.len() != self.class_count || w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                return fail("class_weights needs one positive weight per class".into());
            }
        }
        if self.kind == ModelKind::Textcnn {
            if self.filter_widths.is_empty() || self.filters_per_width == 0 {
                return fail("TEXTCNN needs at least one filter width and filter".into());
            }
            if let Some(&w) = self
                .filter_widths
                .iter()
                .find(|&&w| w == 0 || w > self.max_len)
            {
                return fail(format!(
                    "filter width {w} must be between 1 and max_len {}",
                    self.max_len
                ));
            }
            if self.embedding_dim == 0 {
                return fail("embedding_dim must be positive".into());
            }
        }
        Ok(())
    }

    /// Width of the model's own feature vector before fusion.
    pub fn feature_dim(&self) -> usize {
        match self.kind {
            ModelKind::Logreg => self.vocab_size,
            ModelKind::Textcnn => self.filters_per_width * self.filter_widths.len(),
        }
    }

    pub fn fused_dim(&self) -> usize {
        self.feature_dim() + self.lexicon_dim
    }

    pub fn class_weight(&self, class: usize) -> f64 {
        self.class_weights.as_ref().map_or(1.0, |w| w[class])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    pub trainable: bool,
}

impl Tensor {
    fn zeros(name: impl Into<String>, shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            name: name.into(),
            shape,
            data: vec![0.0; n],
            trainable: true,
        }
    }
}

/// Parameter tensors in a fixed order. TEXTCNN: `embeddings`, then
/// `conv{w}.kernel` (`w × d × F`, index `(k·d + j)·F + f`) and `conv{w}.bias`
/// per width, then `output.weight` (`(p+m) × C`) and `output.bias`.
/// LOGREG: only the two output tensors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub tensors: Vec<Tensor>,
    #[serde(skip, default = "next_version")]
    version: u64,
}

static VERSIONS: AtomicU64 = AtomicU64::new(1);

/// Process-wide unique stamp, so a cache from a clone or an earlier state
/// never validates against different parameters.
fn next_version() -> u64 {
    VERSIONS.fetch_add(1, Ordering::Relaxed)
}

impl PartialEq for ModelParams {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config && self.tensors == other.tensors
    }
}

impl ModelParams {
    /// Bumped on every mutable access; forward caches record it.
    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        self.version = next_version();
        &mut self.tensors
    }

    pub(crate) fn output_index(&self) -> usize {
        self.tensors.len() - 2
    }

    pub(crate) fn conv_index(&self, width_pos: usize) -> usize {
        1 + 2 * width_pos
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors.iter().map(|t| t.data.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors
            .iter()
            .all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// SHA-256 over tensor names, shapes and little-endian values.
    pub fn checksum(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tensors {
            h.update(t.name.as_bytes());
            for &s in &t.shape {
                h.update((s as u64).to_le_bytes());
            }
            for &x in &t.data {
                h.update(x.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }

    /// Overwrites every tensor with seeded uniform noise in `±scale`,
    /// keeping the PAD embedding row at zero. Used to probe gradients away
    /// from the zero-initialized output layer.
    pub fn randomize(&mut self, seed_value: u64, scale: f64) {
        let mut rng = seed::rng(seed_value, "randomize");
        let dim = self.config.embedding_dim;
        let is_cnn = self.config.kind == ModelKind::Textcnn;
        for (ti, t) in self.tensors_mut().iter_mut().enumerate() {
            for (i, x) in t.data.iter_mut().enumerate() {
                *x = if is_cnn && ti == 0 && i < dim {
                    0.0
                } else {
                    rng.random_range(-scale..scale)
                };
            }
        }
    }
}

/// Seeded Glorot-uniform kernels, zero biases and a zero output layer.
pub fn init_model(
    config: &ModelConfig,
    embeddings: Option<&EmbeddingMatrix>,
) -> Result<ModelParams> {
    config.validate()?;
    let c = config.class_count;
    let mut tensors = Vec::new();
    if config.kind == ModelKind::Textcnn {
        let d = config.embedding_dim;
        let mut emb = Tensor::zeros("embeddings", vec![config.vocab_size, d]);
        match embeddings {
            Some(m) => {
                if m.dim != d || m.rows() != config.vocab_size {
                    return Err(Error::Shape(format!(
                        "embeddings are {}×{}, model expects {}×{}",
                        m.rows(),
                        m.dim,
                        config.vocab_size,
                        d
                    )));
                }
                emb.data.copy_from_slice(&m.data);
                emb.data[..d].fill(0.0);
            }
            None => {
                let m = EmbeddingMatrix::random(config.vocab_size, d, config.seed);
                emb.data.copy_from_slice(&m.data);
            }
        }
        emb.trainable = config.trainable_embeddings;
        tensors.push(emb);

        let mut rng = seed::rng(config.seed, seed::INIT);
        let f = config.filters_per_width;
        for &w in &config.filter_widths {
            let mut k = Tensor::zeros(format!("conv{w}.kernel"), vec![w, d, f]);
            let limit = (6.0 / ((w * d + f) as f64)).sqrt();
            for x in &mut k.data {
                *x = rng.random_range(-limit..limit);
            }
            tensors.push(k);
            tensors.push(Tensor::zeros(format!("conv{w}.bias"), vec![f]));
        }
    }
    tensors.push(Tensor::zeros("output.weight", vec![config.fused_dim(), c]));
    tensors.push(Tensor::zeros("output.bias", vec![c]));
    Ok(ModelParams {
        config: config.clone(),
        tensors,
        version: next_version(),
    })
}

/// One encoded document: `max_len` token indices and, when fusion is on,
/// the raw mapped lexicon counts (scaled inside the model).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub tokens: Vec<u32>,
    pub lexicon: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ModelKind) -> ModelConfig {
        ModelConfig {
            kind,
            vocab_size: 10,
            embedding_dim: 4,
            filters_per_width: 3,
            max_len: 8,
            class_count: 3,
            ..ModelConfig::default()
        }
    }

    #[test]
    fn init_is_deterministic() {
        let c = ModelConfig {
            seed: 7,
            vocab_size: 50,
            embedding_dim: 8,
            ..ModelConfig::default()
        };
        let a = init_model(&c, None).unwrap();
        let b = init_model(&c, None).unwrap();
        assert_eq!(a.checksum(), b.checksum());
        let other = init_model(&ModelConfig { seed: 8, ..c }, None).unwrap();
        assert_ne!(a.checksum(), other.checksum());
    }

    #[test]
    fn wide_filters_are_rejected() {
        let c = ModelConfig {
            filter_widths: vec![200],
            ..ModelConfig::default()
        };
        assert!(matches!(init_model(&c, None), Err(Error::Config(_))));
    }

    #[test]
    fn logreg_allocates_output_only() {
        let c = ModelConfig {
            lexicon_dim: 6,
            ..small(ModelKind::Logreg)
        };
        let p = init_model(&c, None).unwrap();
        assert_eq!(p.tensors.len(), 2);
        assert_eq!(p.tensors[0].shape, vec![16, 3]);
    }

    #[test]
    fn textcnn_layout() {
        let p = init_model(&small(ModelKind::Textcnn), None).unwrap();
        let names: Vec<&str> = p.tensors.iter().map(|t| t.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "embeddings",
                "conv1.kernel",
                "conv1.bias",
                "conv2.kernel",
                "conv2.bias",
                "conv3.kernel",
                "conv3.bias",
                "conv5.kernel",
                "conv5.bias",
                "output.weight",
                "output.bias"
            ]
        );
        assert!(p.tensors[0].data[..4].iter().all(|&x| x == 0.0));
        assert!(p.tensors[9].data.iter().all(|&x| x == 0.0));
        assert_eq!(p.tensors[9].shape, vec![12, 3]);
    }

    #[test]
    fn embedding_shape_is_checked() {
        let m = EmbeddingMatrix::random(10, 5, 1);
        assert!(matches!(
            init_model(&small(ModelKind::Textcnn), Some(&m)),
            Err(Error::Shape(_))
        ));
    }
}
