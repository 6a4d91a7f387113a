use std::f64::consts::PI;

use crate::error::{Error, Result};

fn check_len(len: usize) -> Result<()> {
    if len < 2 {
        Err(Error::invalid(format!(
            "transform length must be >= 2, got {len}"
        )))
    } else {
        Ok(())
    }
}

fn scale(k: usize, n: usize) -> f64 {
    if k == 0 {
        (1.0 / n as f64).sqrt()
    } else {
        (2.0 / n as f64).sqrt()
    }
}

/// Orthonormal DCT-II, `X_k = α_k Σ_n x_n cos(πk(2n+1)/2N)`.
///
/// Direct `O(N²)` evaluation.
pub fn dct_forward(x: &[f64]) -> Result<Vec<f64>> {
    let n = x.len();
    check_len(n)?;
    Ok((0..n)
        .map(|k| {
            let acc: f64 = x
                .iter()
                .enumerate()
                .map(|(i, &v)| v * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos())
                .sum();
            scale(k, n) * acc
        })
        .collect())
}

/// Orthonormal DCT-III, the inverse of [`dct_forward`].
pub fn dct_inverse(coeffs: &[f64]) -> Result<Vec<f64>> {
    let n = coeffs.len();
    check_len(n)?;
    Ok((0..n)
        .map(|i| {
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| {
                    scale(k, n) * c * (PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()
                })
                .sum()
        })
        .collect())
}
