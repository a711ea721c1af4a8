use super::network::{backward, cross_entropy, forward};
use super::{Example, ModelKind, ModelParams};
use crate::error::Result;

/// Largest relative error found in one tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub checked: usize,
    pub max_rel_error: f64,
}

/// Magnitudes below this are treated as this value when forming relative
/// errors, so rounding noise on near-zero gradients does not dominate.
const REL_FLOOR: f64 = 1e-6;

fn loss(params: &ModelParams, batch: &[Example], golds: &[usize]) -> Result<f64> {
    let (logits, _) = forward(params, batch, false, None)?;
    Ok(cross_entropy(params, &logits, golds))
}

/// Compares the analytic gradient of the summed batch loss against central
/// differences with the given step, for every element of every trainable
/// tensor (the PAD embedding row is fixed at zero and skipped).
pub fn gradient_check(
    params: &ModelParams,
    batch: &[Example],
    golds: &[usize],
    step: f64,
) -> Result<Vec<TensorCheck>> {
    let (_, cache) = forward(params, batch, false, None)?;
    let grads = backward(params, &cache, golds)?;
    let mut probe = params.clone();
    let mut out = Vec::new();
    let skip_pad = params.config.kind == ModelKind::Textcnn;
    for (ti, grad) in grads.tensors.iter().enumerate() {
        if !params.tensors[ti].trainable {
            continue;
        }
        let first = if skip_pad && ti == 0 {
            params.config.embedding_dim
        } else {
            0
        };
        let mut worst: f64 = 0.0;
        let n = params.tensors[ti].data.len();
        for i in first..n {
            let orig = params.tensors[ti].data[i];
            probe.tensors_mut()[ti].data[i] = orig + step;
            let up = loss(&probe, batch, golds)?;
            probe.tensors_mut()[ti].data[i] = orig - step;
            let down = loss(&probe, batch, golds)?;
            probe.tensors_mut()[ti].data[i] = orig;
            let numeric = (up - down) / (2.0 * step);
            let analytic = grad.get(i);
            let denom = analytic.abs().max(numeric.abs()).max(REL_FLOOR);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
        out.push(TensorCheck {
            name: params.tensors[ti].name.clone(),
            checked: n - first,
            max_rel_error: worst,
        });
    }
    Ok(out)
}
