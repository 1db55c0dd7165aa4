use crate::error::{Error, Result};
use crate::numerics::Tensor;

pub const LOG_FLOOR: f64 = 1e-12;

/// Mean cross-entropy of softmax posteriors `[B, K]` against class labels,
/// with the gradient with respect to the logits, `(p − onehot) / B`.
pub fn cross_entropy(posteriors: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let (b, k) = match *posteriors.shape() {
        [b, k] if b == labels.len() => (b, k),
        _ => {
            return Err(Error::shape(
                "cross_entropy",
                posteriors.shape(),
                &[labels.len(), 0],
            ))
        }
    };
    let mut grad = posteriors.scale(1.0 / b as f64);
    let mut loss = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= k {
            return Err(Error::LabelOutOfRange { label, classes: k });
        }
        loss -= posteriors.data()[i * k + label].max(LOG_FLOOR).ln();
        grad.data_mut()[i * k + label] -= 1.0 / b as f64;
    }
    Ok((loss / b as f64, grad))
}
