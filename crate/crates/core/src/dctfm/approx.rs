use std::f64::consts::PI;

use super::transform::{dct_forward, dct_inverse};
use super::Measurement;
use crate::error::{Error, Result};

/// A function table `f(m)` together with its orthonormal DCT spectrum and
/// the retained index set `𝒦`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionSpec {
    table: Vec<f64>,
    spectrum: Vec<f64>,
    retained: Vec<usize>,
}

impl FunctionSpec {
    /// Builds a spec from a table and an explicit retained set.
    pub fn from_table(table: Vec<f64>, retained: &[usize]) -> Result<Self> {
        let spectrum = dct_forward(&table)?;
        let retained = normalize_indices(retained, table.len())?;
        Ok(Self {
            table,
            spectrum,
            retained,
        })
    }

    /// Builds a spec whose spectrum is exactly the given `(k, F_k)` pairs; the
    /// table is their inverse transform.
    pub fn from_coefficients(n_levels: usize, coefficients: &[(usize, f64)]) -> Result<Self> {
        let mut spectrum = vec![0.0; n_levels];
        for &(k, f) in coefficients {
            if k >= n_levels {
                return Err(Error::invalid(format!(
                    "coefficient index {k} out of range [0, {n_levels})"
                )));
            }
            spectrum[k] = f;
        }
        let table = dct_inverse(&spectrum)?;
        let keys: Vec<usize> = coefficients.iter().map(|&(k, _)| k).collect();
        Ok(Self {
            table,
            spectrum,
            retained: normalize_indices(&keys, n_levels)?,
        })
    }

    pub fn n_levels(&self) -> usize {
        self.table.len()
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    /// Full DCT of the table, including discarded coefficients.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Sorted retained indices `𝒦`.
    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn retained_coefficients(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.retained.iter().map(|&k| (k, self.spectrum[k]))
    }

    /// `(1/N)·Σ_{k∉𝒦} F_k²`, the sum-power of the discarded coefficients.
    pub fn approximation_error(&self) -> f64 {
        let kept: f64 = self.retained_coefficients().map(|(_, f)| f * f).sum();
        let total: f64 = self.spectrum.iter().map(|f| f * f).sum();
        ((total - kept).max(0.0)) / self.n_levels() as f64
    }
}

fn normalize_indices(indices: &[usize], n: usize) -> Result<Vec<usize>> {
    if let Some(&bad) = indices.iter().find(|&&k| k >= n) {
        return Err(Error::invalid(format!(
            "retained index {bad} out of range [0, {n})"
        )));
    }
    let mut out = indices.to_vec();
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Keeps the `num_kept` largest-magnitude DCT coefficients of `f`.
/// Ties go to the lower index.
pub fn approximate_function(f: &[f64], num_kept: usize) -> Result<FunctionSpec> {
    let n = f.len();
    if num_kept == 0 || num_kept > n {
        return Err(Error::invalid(format!(
            "num_kept must be in [1, {n}], got {num_kept}"
        )));
    }
    let spectrum = dct_forward(f)?;
    // Magnitudes equal to ~12 significant digits count as ties, so that
    // round-off from the transform cannot reorder them.
    let peak = spectrum.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let key = |k: usize| {
        if peak == 0.0 {
            0
        } else {
            (spectrum[k].abs() / peak * 1e12).round() as i64
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps ascending index order among ties.
    order.sort_by_key(|&k| std::cmp::Reverse(key(k)));
    order.truncate(num_kept);
    order.sort_unstable();
    Ok(FunctionSpec {
        table: f.to_vec(),
        spectrum,
        retained: order,
    })
}

/// Partial inverse-DCT sum over `𝒦` evaluated at `m`.
pub fn reconstruct(spec: &FunctionSpec, m: Measurement) -> Result<f64> {
    let n = spec.n_levels();
    if m.index() >= n {
        return Err(Error::invalid(format!(
            "measurement {} out of range [0, {n})",
            m.index()
        )));
    }
    let (a0, ak) = ((1.0 / n as f64).sqrt(), (2.0 / n as f64).sqrt());
    Ok(spec
        .retained_coefficients()
        .map(|(k, f)| {
            let alpha = if k == 0 { a0 } else { ak };
            alpha * f * (PI * k as f64 * (2 * m.index() + 1) as f64 / (2 * n) as f64).cos()
        })
        .sum())
}

/// Predicted MSE: approximation error plus `p_e` times the mean squared
/// distortion of a symbol error.
///
/// A wrong decision is taken to be uniform over the `N-1` other symbols, so
/// the distortion term is `p_e·(1/N)·Σ_m (1/(N-1))·Σ_{m̂≠m} |f(m)-f(m̂)|²`.
pub fn theoretical_mse(spec: &FunctionSpec, p_e: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_e) {
        return Err(Error::invalid(format!("p_e must be in [0, 1], got {p_e}")));
    }
    let n = spec.n_levels() as f64;
    let sum: f64 = spec.table.iter().sum();
    let sum_sq: f64 = spec.table.iter().map(|v| v * v).sum();
    // Σ_{m,m'} (f_m - f_m')² = 2N·Σf² - 2(Σf)²; diagonal terms vanish.
    let pair_total = (2.0 * n * sum_sq - 2.0 * sum * sum).max(0.0);
    let distortion = pair_total / (n * (n - 1.0));
    Ok(spec.approximation_error() + p_e * distortion)
}
