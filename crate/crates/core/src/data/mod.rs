//! Test-tensor generators, sparse-tensor transforms, `.tns` file I/O and
//! the on-disk Tucker archive format.

mod archive;
mod tns;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::{validate_shape, DenseTensor, SparseTensor};

pub use archive::{load_tucker, save_tucker};
pub use tns::{read_tns, read_tns_with_shape, write_tns};

/// Hilbert-type tensor: entry at (1-based) index `(i_1, …, i_d)` is
/// `1 / (i_1 + … + i_d)`. Smooth and rapidly compressible, which makes it
/// the standard dense test case.
pub fn gen_hilbert(shape: &[usize]) -> Result<DenseTensor> {
    validate_shape(shape)?;
    let d = shape.len();
    let total: usize = shape.iter().product();
    // All index sums lie in d ..= sum(I_k - 1) + d; precompute reciprocals
    // and walk the entries with a rolling sum instead of re-adding indices.
    let max_sum: usize = shape.iter().map(|&n| n - 1).sum::<usize>() + d;
    let recip: Vec<f64> = (0..=max_sum)
        .map(|s| if s == 0 { 0.0 } else { 1.0 / s as f64 })
        .collect();
    let mut values = vec![0.0f64; total];
    let mut idx = vec![0usize; d];
    let mut sum = d; // 1-based sum at the all-zeros index
    for v in values.iter_mut() {
        *v = recip[sum];
        for k in 0..d {
            idx[k] += 1;
            sum += 1;
            if idx[k] < shape[k] {
                break;
            }
            sum -= shape[k];
            idx[k] = 0;
        }
    }
    DenseTensor::from_values(shape, values)
}

/// Synthetic sparse test tensor
/// `X = sum_{i<=10} (gamma/i^2) x_i∘y_i∘z_i + sum_{i=11}^{n} (1/i^2) x_i∘y_i∘z_i`
/// where each direction vector has `ceil(0.05 n)` nonzeros at uniformly
/// sampled distinct positions with values uniform in (0, 1). `gamma`
/// controls the strength of the gap after the tenth term.
pub fn gen_synthetic_sparse(n: usize, gamma: f64, seed: u64) -> Result<SparseTensor> {
    if n == 0 {
        return Err(Error::invalid("sparse generator needs n >= 1"));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid("gamma must be positive"));
    }
    let k = (0.05 * n as f64).ceil() as usize;
    let k = k.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sparse_vec = |rng: &mut ChaCha8Rng| -> Vec<(usize, f64)> {
        rand::seq::index::sample(rng, n, k)
            .into_iter()
            .map(|pos| (pos, rng.gen::<f64>()))
            .collect()
    };
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for i in 1..=n {
        let x = sparse_vec(&mut rng);
        let y = sparse_vec(&mut rng);
        let z = sparse_vec(&mut rng);
        let weight = if i <= 10 { gamma } else { 1.0 } / (i * i) as f64;
        for &(xi, xv) in &x {
            for &(yi, yv) in &y {
                for &(zi, zv) in &z {
                    entries.push((vec![xi, yi, zi], weight * xv * yv * zv));
                }
            }
        }
    }
    SparseTensor::new(&[n, n, n], entries)
}

/// Keeps every `strides[k]`-th index along each mode, anchored at the first
/// index: an entry survives iff `i_k % strides[k] == 0` (0-based) for all
/// modes, and is relabeled to `i_k / strides[k]`. The new dimension is
/// `ceil(I_k / strides[k])`.
pub fn subsample(x: &SparseTensor, strides: &[usize]) -> Result<SparseTensor> {
    let d = x.order();
    if strides.len() != d {
        return Err(Error::invalid(format!(
            "{} strides for {d} modes",
            strides.len()
        )));
    }
    if strides.iter().any(|&s| s == 0) {
        return Err(Error::invalid("strides must be at least 1"));
    }
    let shape: Vec<usize> = x
        .shape()
        .iter()
        .zip(strides)
        .map(|(&dim, &s)| dim.div_ceil(s))
        .collect();
    let mut entries = Vec::new();
    for (idx, v) in x.iter() {
        if idx.iter().zip(strides).all(|(&i, &s)| i % s == 0) {
            let new_idx: Vec<usize> = idx.iter().zip(strides).map(|(&i, &s)| i / s).collect();
            entries.push((new_idx, v));
        }
    }
    SparseTensor::new(&shape, entries)
}

/// Removes `mode` by summing all entries that share the remaining
/// coordinates (marginalization over that mode).
pub fn condense_mode(x: &SparseTensor, mode: usize) -> Result<SparseTensor> {
    let d = x.order();
    if d < 2 {
        return Err(Error::invalid(
            "condensing needs at least two modes to keep one",
        ));
    }
    if mode >= d {
        return Err(Error::invalid(format!(
            "mode {mode} out of range for a {d}-mode tensor"
        )));
    }
    let shape: Vec<usize> = x
        .shape()
        .iter()
        .enumerate()
        .filter(|&(k, _)| k != mode)
        .map(|(_, &v)| v)
        .collect();
    let entries = x
        .iter()
        .map(|(idx, v)| {
            let kept: Vec<usize> = idx
                .iter()
                .enumerate()
                .filter(|&(k, _)| k != mode)
                .map(|(_, &i)| i)
                .collect();
            (kept, v)
        })
        .collect();
    SparseTensor::new(&shape, entries)
}
