use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Example, ModelKind, ModelParams};
use crate::error::{Error, Result};
use crate::features::{fuse_features, scale_lexicon, PAD};

/// Max-over-time winner for one pooled feature. `start` is `None` when the
/// winner is a window lying entirely in the right padding, whose value is
/// just the bias.
#[derive(Debug, Clone, Copy)]
struct Pooled {
    start: Option<usize>,
    z: f64,
}

#[derive(Debug, Clone)]
struct ItemCache {
    tokens: Vec<u32>,
    pooled: Vec<Pooled>,
    /// Non-zero entries of the (post-dropout) output-layer input.
    fused: Vec<(usize, f64)>,
    mask: Option<Vec<f64>>,
    probs: Vec<f64>,
}

/// Intermediate values of one forward call, consumed by [`backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    items: Vec<ItemCache>,
}

impl ForwardCache {
    pub fn probabilities(&self) -> Vec<Vec<f64>> {
        self.items.iter().map(|i| i.probs.clone()).collect()
    }
}

/// Gradient for one parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub enum Grad {
    Dense(Vec<f64>),
    /// Sparse rows of a `rows × dim` tensor (embeddings).
    Rows {
        dim: usize,
        rows: BTreeMap<usize, Vec<f64>>,
    },
    Frozen,
}

impl Grad {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            Grad::Dense(v) => v[i],
            Grad::Rows { dim, rows } => rows.get(&(i / dim)).map_or(0.0, |r| r[i % dim]),
            Grad::Frozen => 0.0,
        }
    }
}

/// Gradients of the batch-summed loss, one entry per parameter tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Grad>,
}

fn check_example(params: &ModelParams, ex: &Example) -> Result<()> {
    let c = &params.config;
    if ex.tokens.len() != c.max_len {
        return Err(Error::Shape(format!(
            "sequence length {} does not match max_len {}",
            ex.tokens.len(),
            c.max_len
        )));
    }
    if let Some(&t) = ex.tokens.iter().find(|&&t| t as usize >= c.vocab_size) {
        return Err(Error::Shape(format!(
            "token index {t} exceeds vocabulary size {}",
            c.vocab_size
        )));
    }
    if ex.lexicon.len() != c.lexicon_dim {
        return Err(Error::Shape(format!(
            "lexicon vector has {} entries, model declares {}",
            ex.lexicon.len(),
            c.lexicon_dim
        )));
    }
    Ok(())
}

fn conv_pool(params: &ModelParams, tokens: &[u32]) -> Result<(Vec<f64>, Vec<Pooled>)> {
    let c = &params.config;
    let d = c.embedding_dim;
    let nf = c.filters_per_width;
    let len = tokens.len();
    let used = tokens.iter().rposition(|&t| t != PAD).map_or(0, |p| p + 1);
    let emb = &params.tensors[0].data;
    let mut pooled = Vec::with_capacity(nf * c.filter_widths.len());
    let mut z = vec![0.0; nf];
    for (wp, &w) in c.filter_widths.iter().enumerate() {
        let ki = params.conv_index(wp);
        let kernel = &params.tensors[ki].data;
        let bias = &params.tensors[ki + 1].data;
        let last_start = len - w;
        let mut best: Vec<Pooled> = vec![
            Pooled {
                start: None,
                z: f64::NEG_INFINITY
            };
            nf
        ];
        let real_starts = if used == 0 {
            0
        } else {
            last_start.min(used - 1) + 1
        };
        for s in 0..real_starts {
            z.copy_from_slice(bias);
            for k in 0..w {
                let t = tokens[s + k] as usize;
                if t == PAD as usize {
                    continue;
                }
                let e = &emb[t * d..(t + 1) * d];
                for (j, &ej) in e.iter().enumerate() {
                    let row = &kernel[(k * d + j) * nf..(k * d + j + 1) * nf];
                    for (zf, &kf) in z.iter_mut().zip(row) {
                        *zf += ej * kf;
                    }
                }
            }
            for (b, &zf) in best.iter_mut().zip(&z) {
                if zf > b.z {
                    *b = Pooled {
                        start: Some(s),
                        z: zf,
                    };
                }
            }
        }
        if used <= last_start {
            for (b, &bf) in best.iter_mut().zip(bias) {
                if bf > b.z {
                    *b = Pooled { start: None, z: bf };
                }
            }
        }
        pooled.extend(best);
    }
    let h: Vec<f64> = pooled.iter().map(|p| p.z.max(0.0)).collect();
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("convolution".into()));
    }
    Ok((h, pooled))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

fn forward_item(
    params: &ModelParams,
    ex: &Example,
    mask: Option<Vec<f64>>,
) -> Result<(Vec<f64>, ItemCache)> {
    check_example(params, ex)?;
    let c = &params.config;
    let (mut fused, pooled): (Vec<(usize, f64)>, Vec<Pooled>) = match c.kind {
        ModelKind::Textcnn => {
            let (h, pooled) = conv_pool(params, &ex.tokens)?;
            let dense =
                fuse_features(&h, &ex.lexicon, c.lexicon_scaling, (h.len(), c.lexicon_dim))?;
            (
                dense
                    .into_iter()
                    .enumerate()
                    .filter(|(_, x)| *x != 0.0)
                    .collect(),
                pooled,
            )
        }
        ModelKind::Logreg => {
            let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
            for &t in ex.tokens.iter().filter(|&&t| t != PAD) {
                *counts.entry(t as usize).or_default() += 1;
            }
            let n: usize = counts.values().sum();
            let mut v: Vec<(usize, f64)> = counts
                .into_iter()
                .map(|(t, k)| (t, k as f64 / n as f64))
                .collect();
            let base = c.vocab_size;
            v.extend(
                scale_lexicon(&ex.lexicon, c.lexicon_scaling)
                    .into_iter()
                    .enumerate()
                    .filter(|(_, x)| *x != 0.0)
                    .map(|(i, x)| (base + i, x)),
            );
            (v, Vec::new())
        }
    };
    if let Some(m) = &mask {
        for (j, x) in fused.iter_mut() {
            *x *= m[*j];
        }
        fused.retain(|(_, x)| *x != 0.0);
    }
    let nc = c.class_count;
    let oi = params.output_index();
    let w = &params.tensors[oi].data;
    let mut logits = params.tensors[oi + 1].data.clone();
    for &(j, x) in &fused {
        for (l, &wjc) in logits.iter_mut().zip(&w[j * nc..(j + 1) * nc]) {
            *l += x * wjc;
        }
    }
    if logits.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("output".into()));
    }
    let probs = softmax(&logits);
    let tokens = if c.kind == ModelKind::Textcnn {
        ex.tokens.clone()
    } else {
        Vec::new()
    };
    Ok((
        logits,
        ItemCache {
            tokens,
            pooled,
            fused,
            mask,
            probs,
        },
    ))
}

/// Runs a batch. Dropout is active only when `train_mode` is set, the model
/// is a TEXTCNN and its dropout rate is positive; masks are then drawn from
/// `dropout_rng` in batch order.
pub fn forward(
    params: &ModelParams,
    batch: &[Example],
    train_mode: bool,
    mut dropout_rng: Option<&mut ChaCha8Rng>,
) -> Result<(Vec<Vec<f64>>, ForwardCache)> {
    let c = &params.config;
    let use_dropout = train_mode && c.kind == ModelKind::Textcnn && c.dropout > 0.0;
    if use_dropout && dropout_rng.is_none() {
        return Err(Error::config("dropout in train mode needs a random stream"));
    }
    let keep = 1.0 / (1.0 - c.dropout);
    let mut logits = Vec::with_capacity(batch.len());
    let mut items = Vec::with_capacity(batch.len());
    for ex in batch {
        let mask = if use_dropout {
            let rng = dropout_rng.as_deref_mut().expect("checked above");
            Some(
                (0..c.fused_dim())
                    .map(|_| {
                        if rng.random::<f64>() < c.dropout {
                            0.0
                        } else {
                            keep
                        }
                    })
                    .collect(),
            )
        } else {
            None
        };
        let (l, item) = forward_item(params, ex, mask)?;
        logits.push(l);
        items.push(item);
    }
    Ok((
        logits,
        ForwardCache {
            version: params.version(),
            items,
        },
    ))
}

/// Summed (class-weighted) cross-entropy of a batch.
pub fn cross_entropy(params: &ModelParams, logits: &[Vec<f64>], golds: &[usize]) -> f64 {
    logits
        .iter()
        .zip(golds)
        .map(|(l, &y)| {
            let m = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + l.iter().map(|&x| (x - m).exp()).sum::<f64>().ln();
            params.config.class_weight(y) * (lse - l[y])
        })
        .sum()
}

/// Gradients of [`cross_entropy`] for the batch seen by `cache`. Each
/// example's contribution is added in batch order, so the result is a
/// plain sum: a batch with every row duplicated yields exactly twice the
/// gradient.
pub fn backward(params: &ModelParams, cache: &ForwardCache, golds: &[usize]) -> Result<Gradients> {
    if cache.version != params.version() {
        return Err(Error::Shape(
            "forward cache was computed for an older parameter version".into(),
        ));
    }
    if golds.len() != cache.items.len() {
        return Err(Error::Shape(format!(
            "{} gold labels for a batch of {}",
            golds.len(),
            cache.items.len()
        )));
    }
    let c = &params.config;
    let nc = c.class_count;
    if let Some(&y) = golds.iter().find(|&&y| y >= nc) {
        return Err(Error::Shape(format!("gold label {y} outside {nc} classes")));
    }
    let mut grads: Vec<Grad> = params
        .tensors
        .iter()
        .enumerate()
        .map(|(i, t)| {
            if !t.trainable {
                Grad::Frozen
            } else if c.kind == ModelKind::Textcnn && i == 0 {
                Grad::Rows {
                    dim: c.embedding_dim,
                    rows: BTreeMap::new(),
                }
            } else {
                Grad::Dense(vec![0.0; t.data.len()])
            }
        })
        .collect();

    let oi = params.output_index();
    let w_out = &params.tensors[oi].data;
    let p = c.feature_dim();
    let d = c.embedding_dim;
    let nf = c.filters_per_width;

    for (item, &y) in cache.items.iter().zip(golds) {
        let cw = c.class_weight(y);
        let dl: Vec<f64> = item
            .probs
            .iter()
            .enumerate()
            .map(|(k, &pk)| cw * (pk - if k == y { 1.0 } else { 0.0 }))
            .collect();
        if let Grad::Dense(g) = &mut grads[oi] {
            for &(j, x) in &item.fused {
                for (gk, &dk) in g[j * nc..(j + 1) * nc].iter_mut().zip(&dl) {
                    *gk += x * dk;
                }
            }
        }
        if let Grad::Dense(g) = &mut grads[oi + 1] {
            for (gk, &dk) in g.iter_mut().zip(&dl) {
                *gk += dk;
            }
        }
        if c.kind != ModelKind::Textcnn {
            continue;
        }
        // Embedding rows collect several terms per example; summing them
        // locally first keeps the batch total a sum of per-example
        // gradients.
        let mut local: BTreeMap<usize, Vec<f64>> = BTreeMap::new();

        for (j, pool) in item.pooled.iter().enumerate().take(p) {
            if pool.z <= 0.0 {
                continue;
            }
            let mut dh: f64 = w_out[j * nc..(j + 1) * nc]
                .iter()
                .zip(&dl)
                .map(|(a, b)| a * b)
                .sum();
            if let Some(m) = &item.mask {
                dh *= m[j];
            }
            if dh == 0.0 {
                continue;
            }
            let wp = j / nf;
            let f = j % nf;
            let width = c.filter_widths[wp];
            let ki = params.conv_index(wp);
            if let Grad::Dense(g) = &mut grads[ki + 1] {
                g[f] += dh;
            }
            let Some(s) = pool.start else { continue };
            let kernel = &params.tensors[ki].data;
            let emb = &params.tensors[0].data;
            for k in 0..width {
                let t = item.tokens[s + k] as usize;
                if t == PAD as usize {
                    continue;
                }
                if let Grad::Dense(g) = &mut grads[ki] {
                    let e = &emb[t * d..(t + 1) * d];
                    for (jj, &ej) in e.iter().enumerate() {
                        g[(k * d + jj) * nf + f] += dh * ej;
                    }
                }
                if matches!(grads[0], Grad::Rows { .. }) {
                    let row = local.entry(t).or_insert_with(|| vec![0.0; d]);
                    for (jj, r) in row.iter_mut().enumerate() {
                        *r += dh * kernel[(k * d + jj) * nf + f];
                    }
                }
            }
        }
        if let Grad::Rows { rows, .. } = &mut grads[0] {
            for (t, g) in local {
                match rows.get_mut(&t) {
                    Some(row) => row.iter_mut().zip(&g).for_each(|(r, x)| *r += x),
                    None => {
                        rows.insert(t, g);
                    }
                }
            }
        }
    }
    Ok(Gradients { tensors: grads })
}

fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Most probable class (lowest index on ties) and the probability vector.
pub fn predict(params: &ModelParams, ex: &Example) -> Result<(usize, Vec<f64>)> {
    let (_, item) = forward_item(params, ex, None)?;
    Ok((argmax(&item.probs), item.probs))
}

pub fn predict_batch(params: &ModelParams, batch: &[Example]) -> Result<Vec<(usize, Vec<f64>)>> {
    batch.iter().map(|ex| predict(params, ex)).collect()
}
