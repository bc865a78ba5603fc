use half::f16;

use crate::error::{Error, Result};
use crate::io::Precision;
use crate::matrix::Matrix;

/// Rounds every value to `precision`. Magnitudes beyond the f16 range
/// saturate to the largest finite f16.
pub fn quantize_features(feats: &Matrix, precision: Precision) -> Result<Matrix> {
    if !feats.is_finite() {
        return Err(Error::state("cannot quantize non-finite features"));
    }
    let mut out = feats.clone();
    let limit = match precision {
        Precision::F32 => f32::MAX as f64,
        Precision::F16 => f16::MAX.to_f64(),
    };
    for v in out.as_mut_slice() {
        *v = precision.round(v.clamp(-limit, limit));
    }
    Ok(out)
}
