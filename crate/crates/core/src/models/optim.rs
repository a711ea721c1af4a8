use super::network::{Grad, Gradients};
use super::{ModelParams, OptimizerKind};
use crate::error::{Error, Result};

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const EPS: f64 = 1e-8;

/// SGD or Adam over every trainable tensor. Adam updates are dense: rows
/// without gradient in a step still move with their decayed moments.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(params: &ModelParams) -> Self {
        let kind = params.config.optimizer;
        let zeros = || -> Vec<Vec<f64>> {
            params
                .tensors
                .iter()
                .map(|t| match kind {
                    OptimizerKind::Adam if t.trainable => vec![0.0; t.data.len()],
                    _ => Vec::new(),
                })
                .collect()
        };
        Optimizer {
            kind,
            lr: params.config.learning_rate,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    /// Applies `grads` multiplied by `scale` (1/batch for a mean loss).
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients, scale: f64) -> Result<()> {
        if grads.tensors.len() != params.tensors.len() {
            return Err(Error::Shape("gradient and parameter lists differ".into()));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        let lr = self.lr;
        let kind = self.kind;
        for (ti, (tensor, grad)) in params
            .tensors_mut()
            .iter_mut()
            .zip(&grads.tensors)
            .enumerate()
        {
            if !tensor.trainable || matches!(grad, Grad::Frozen) {
                continue;
            }
            match kind {
                OptimizerKind::Sgd => match grad {
                    Grad::Dense(g) => {
                        for (x, gi) in tensor.data.iter_mut().zip(g) {
                            *x -= lr * scale * gi;
                        }
                    }
                    Grad::Rows { dim, rows } => {
                        for (&r, g) in rows {
                            for (x, gi) in tensor.data[r * dim..(r + 1) * dim].iter_mut().zip(g) {
                                *x -= lr * scale * gi;
                            }
                        }
                    }
                    Grad::Frozen => {}
                },
                OptimizerKind::Adam => {
                    let m = &mut self.m[ti];
                    let v = &mut self.v[ti];
                    let mut update = |i: usize, x: &mut f64, g: f64| {
                        let gi = scale * g;
                        m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                        v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
                        if m[i] != 0.0 {
                            *x -= lr * (m[i] / bc1) / ((v[i] / bc2).sqrt() + EPS);
                        }
                    };
                    match grad {
                        Grad::Dense(g) => {
                            for (i, (x, &gi)) in tensor.data.iter_mut().zip(g).enumerate() {
                                update(i, x, gi);
                            }
                        }
                        Grad::Rows { dim, rows } => {
                            for (r, chunk) in tensor.data.chunks_mut(*dim).enumerate() {
                                let row = rows.get(&r);
                                for (j, x) in chunk.iter_mut().enumerate() {
                                    update(r * dim + j, x, row.map_or(0.0, |g| g[j]));
                                }
                            }
                        }
                        Grad::Frozen => {}
                    }
                }
            }
        }
        Ok(())
    }
}
