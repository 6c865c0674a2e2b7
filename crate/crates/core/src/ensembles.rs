//! Seeded generation of measurement matrices, sparsity bases, sparse
//! signals, and synthetic push-broom images.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, sample_support, standard_normal, SeededRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Gaussian,
    Bernoulli01,
    Custom,
}

/// An M x N measurement matrix together with its generation metadata.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurementMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Array2<f64>,
    pub kind: MatrixKind,
    pub seed: u64,
    pub column_normalized: bool,
}

impl MeasurementMatrix {
    pub fn from_entries(entries: Array2<f64>) -> Self {
        let (rows, cols) = entries.dim();
        MeasurementMatrix {
            rows,
            cols,
            entries,
            kind: MatrixKind::Custom,
            seed: 0,
            column_normalized: false,
        }
    }
}

/// Entries i.i.d. N(0, 1/M), so columns have unit expected squared norm.
pub fn gen_gaussian_matrix(m: usize, n: usize, seed: u64) -> Result<MeasurementMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let entries = gaussian_entries(&mut rng, m, n, scale);
    Ok(MeasurementMatrix {
        rows: m,
        cols: n,
        entries,
        kind: MatrixKind::Gaussian,
        seed,
        column_normalized: false,
    })
}

pub(crate) fn gaussian_entries(rng: &mut SeededRng, m: usize, n: usize, scale: f64) -> Array2<f64> {
    // Row-major fill order is part of the determinism contract.
    Array2::from_shape_fn((m, n), |_| scale * standard_normal(rng))
}

/// Entries in {0,1}, each 1 with probability 1/2. With `normalize`, all-zero
/// columns are redrawn until nonzero and every column is scaled to unit norm.
pub fn gen_bernoulli01_matrix(
    m: usize,
    n: usize,
    seed: u64,
    normalize: bool,
) -> Result<MeasurementMatrix> {
    if m == 0 || n == 0 {
        return Err(Error::invalid("matrix dimensions must be positive"));
    }
    let mut rng = rng_from_seed(seed);
    let mut entries = Array2::from_shape_fn((m, n), |_| {
        if rand::Rng::random::<bool>(&mut rng) {
            1.0
        } else {
            0.0
        }
    });
    if normalize {
        for j in 0..n {
            loop {
                let norm_sq: f64 = entries.column(j).iter().map(|v| v * v).sum();
                if norm_sq > 0.0 {
                    let inv = 1.0 / norm_sq.sqrt();
                    entries.column_mut(j).mapv_inplace(|v| v * inv);
                    break;
                }
                for i in 0..m {
                    entries[[i, j]] = if rand::Rng::random::<bool>(&mut rng) {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
        }
    }
    Ok(MeasurementMatrix {
        rows: m,
        cols: n,
        entries,
        kind: MatrixKind::Bernoulli01,
        seed,
        column_normalized: normalize,
    })
}

/// Length-N vector with an explicit support set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseSignal {
    pub len: usize,
    pub values: Array1<f64>,
    /// Sorted ascending, no duplicates.
    pub support: Vec<usize>,
}

impl SparseSignal {
    pub fn sparsity(&self) -> usize {
        self.support.len()
    }

    /// Builds from a dense vector, taking the support from its nonzeros.
    pub fn from_dense(values: Array1<f64>) -> Self {
        let support = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, _)| i)
            .collect();
        SparseSignal {
            len: values.len(),
            values,
            support,
        }
    }
}

/// Support uniform among size-K subsets; nonzeros i.i.d. standard normal.
pub fn gen_sparse_signal(n: usize, k: usize, seed: u64) -> Result<SparseSignal> {
    if n == 0 {
        return Err(Error::invalid("signal length must be positive"));
    }
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "sparsity K={k} must satisfy 1 <= K <= N={n}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    gen_sparse_signal_with(&mut rng, n, k)
}

pub fn gen_sparse_signal_with(rng: &mut SeededRng, n: usize, k: usize) -> Result<SparseSignal> {
    if k == 0 || k > n {
        return Err(Error::invalid(format!(
            "sparsity K={k} must satisfy 1 <= K <= N={n}"
        )));
    }
    let support = sample_support(rng, n, k);
    let mut values = Array1::zeros(n);
    for &j in &support {
        let mut v = standard_normal(rng);
        while v == 0.0 {
            v = standard_normal(rng);
        }
        values[j] = v;
    }
    Ok(SparseSignal {
        len: n,
        values,
        support,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    Dct,
    Identity,
    CustomOrthonormal,
}

/// An orthonormal N x N sparsity basis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparsityBasis {
    pub size: usize,
    pub entries: Array2<f64>,
    pub kind: BasisKind,
}

/// Orthonormal type-II DCT matrix: row k is
/// `c_k * cos(pi * (2j + 1) * k / (2N))` with `c_0 = sqrt(1/N)`,
/// `c_k = sqrt(2/N)` otherwise.
pub fn dct_basis(n: usize) -> Result<SparsityBasis> {
    if n == 0 {
        return Err(Error::invalid("basis size must be positive"));
    }
    let nf = n as f64;
    let entries = Array2::from_shape_fn((n, n), |(k, j)| {
        let c = if k == 0 {
            (1.0 / nf).sqrt()
        } else {
            (2.0 / nf).sqrt()
        };
        c * (std::f64::consts::PI * (2.0 * j as f64 + 1.0) * k as f64 / (2.0 * nf)).cos()
    });
    Ok(SparsityBasis {
        size: n,
        entries,
        kind: BasisKind::Dct,
    })
}

pub fn identity_basis(n: usize) -> Result<SparsityBasis> {
    if n == 0 {
        return Err(Error::invalid("basis size must be positive"));
    }
    Ok(SparsityBasis {
        size: n,
        entries: Array2::eye(n),
        kind: BasisKind::Identity,
    })
}

/// Synthetic push-broom image with slowly varying columns.
///
/// Columns follow a stationary AR(1) chain in j: column j equals
/// `rho_j * col_{j-1} + sqrt(1 - rho_j^2) * fresh`, with fresh entries i.i.d.
/// standard normal and per-step correlation `rho_j = smoothness^e_j`,
/// `e_j ~ Exp(1)`. smoothness=1 gives identical columns, smoothness=0 gives
/// independent zero-mean columns (expected adjacent cosine 0), and the
/// expected adjacent correlation increases monotonically with smoothness.
pub fn gen_synthetic_image(n: usize, l: usize, smoothness: f64, seed: u64) -> Result<Array2<f64>> {
    gen_synthetic_image_masked(n, l, smoothness, false, seed)
}

/// Variant with an optional zero band: rows in `[N/4, 5N/12)` forced to zero,
/// mimicking zero-grey-value zones of difference images.
pub fn gen_synthetic_image_masked(
    n: usize,
    l: usize,
    smoothness: f64,
    zero_band: bool,
    seed: u64,
) -> Result<Array2<f64>> {
    if n < 2 || l < 2 {
        return Err(Error::invalid("image dimensions must be at least 2x2"));
    }
    if !(0.0..=1.0).contains(&smoothness) {
        return Err(Error::invalid("smoothness must lie in [0, 1]"));
    }
    let mut rng = rng_from_seed(seed);
    let mut img = Array2::zeros((n, l));
    for i in 0..n {
        img[[i, 0]] = standard_normal(&mut rng);
    }
    for j in 1..l {
        let rho = if smoothness >= 1.0 {
            1.0
        } else if smoothness <= 0.0 {
            0.0
        } else {
            let e = -(rng.random::<f64>().max(f64::MIN_POSITIVE)).ln();
            smoothness.powf(e)
        };
        let fresh_scale = (1.0 - rho * rho).max(0.0).sqrt();
        for i in 0..n {
            img[[i, j]] = rho * img[[i, j - 1]] + fresh_scale * standard_normal(&mut rng);
        }
    }
    if zero_band {
        let lo = n / 4;
        let hi = (5 * n) / 12;
        for i in lo..hi {
            for j in 0..l {
                img[[i, j]] = 0.0;
            }
        }
    }
    Ok(img)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_matrix_is_deterministic() {
        let a = gen_gaussian_matrix(4, 8, 1).unwrap();
        let b = gen_gaussian_matrix(4, 8, 1).unwrap();
        assert_eq!(a.entries, b.entries);
        assert_eq!(a.kind, MatrixKind::Gaussian);
    }

    #[test]
    fn gaussian_entries_near_zero_mean() {
        let a = gen_gaussian_matrix(200, 500, 1).unwrap();
        let mean: f64 = a.entries.iter().sum::<f64>() / (200.0 * 500.0);
        assert!(mean.abs() < 1e-3, "mean {mean}");
    }

    #[test]
    fn gaussian_gram_diagonal_mean_near_one() {
        let a = gen_gaussian_matrix(128, 256, 7).unwrap();
        let mut acc = 0.0;
        for j in 0..256 {
            acc += a.entries.column(j).iter().map(|v| v * v).sum::<f64>();
        }
        let mean = acc / 256.0;
        assert!((mean - 1.0).abs() < 0.05, "G_ii mean {mean}");
    }

    #[test]
    fn gaussian_entry_variance_matches_one_over_m() {
        let m = 16;
        let a = gen_gaussian_matrix(m, 62_500, 3).unwrap(); // 10^6 entries
        let n = a.entries.len() as f64;
        let mean: f64 = a.entries.iter().sum::<f64>() / n;
        let var: f64 = a.entries.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let target = 1.0 / m as f64;
        assert!(var >= 0.95 * target && var <= 1.05 * target, "var {var}");
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(gen_gaussian_matrix(0, 8, 1).is_err());
        assert!(gen_bernoulli01_matrix(4, 0, 1, false).is_err());
    }

    #[test]
    fn bernoulli_codomain_and_normalization() {
        let a = gen_bernoulli01_matrix(2, 2, 11, false).unwrap();
        assert!(a.entries.iter().all(|v| *v == 0.0 || *v == 1.0));

        let b = gen_bernoulli01_matrix(64, 128, 5, true).unwrap();
        for j in 0..128 {
            let norm: f64 = b.entries.column(j).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12, "col {j} norm {norm}");
        }
    }

    #[test]
    fn bernoulli_fraction_of_ones_near_half() {
        let a = gen_bernoulli01_matrix(64, 128, 9, false).unwrap();
        let ones = a.entries.iter().filter(|v| **v == 1.0).count() as f64;
        let frac = ones / (64.0 * 128.0);
        // 8192 draws: binomial sd of the fraction is ~0.0055, so 0.02 is ~3.6 sd.
        assert!((frac - 0.5).abs() <= 0.02, "fraction {frac}");
    }

    #[test]
    fn sparse_signal_support_counts() {
        let s = gen_sparse_signal(256, 4, 1).unwrap();
        assert_eq!(s.values.iter().filter(|v| **v != 0.0).count(), 4);
        assert_eq!(s.sparsity(), 4);

        let dense = gen_sparse_signal(10, 10, 2).unwrap();
        assert!(dense.values.iter().all(|v| *v != 0.0));

        let big = gen_sparse_signal(256, 119, 3).unwrap();
        assert_eq!(big.values.iter().filter(|v| **v != 0.0).count(), 119);
        for w in big.support.windows(2) {
            assert!(w[0] < w[1]);
        }
    }

    #[test]
    fn sparse_signal_rejects_bad_k() {
        assert!(gen_sparse_signal(10, 11, 1).is_err());
        assert!(gen_sparse_signal(10, 0, 1).is_err());
    }

    #[test]
    fn dct_small_cases() {
        let one = dct_basis(1).unwrap();
        assert!((one.entries[[0, 0]] - 1.0).abs() < 1e-15);

        let two = dct_basis(2).unwrap();
        let s = 0.5_f64.sqrt();
        assert!((two.entries[[0, 0]] - s).abs() < 1e-15);
        assert!((two.entries[[0, 1]] - s).abs() < 1e-15);
        let c = 2.0_f64.sqrt() * (std::f64::consts::PI / 4.0).cos() / 2.0_f64.sqrt();
        // row 1: sqrt(2/2) * (cos(pi/4), cos(3pi/4))
        assert!((two.entries[[1, 0]] - c).abs() < 1e-12);
        assert!((two.entries[[1, 1]] + c).abs() < 1e-12);
    }

    #[test]
    fn dct_orthonormal_up_to_64() {
        for n in 1..=64 {
            let psi = dct_basis(n).unwrap();
            let p = psi.entries.dot(&psi.entries.t());
            for i in 0..n {
                for j in 0..n {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (p[[i, j]] - want).abs() <= 1e-10,
                        "N={n} ({i},{j}) -> {}",
                        p[[i, j]]
                    );
                }
            }
        }
    }

    fn adjacent_cos(img: &Array2<f64>) -> Vec<f64> {
        let l = img.ncols();
        (0..l - 1)
            .map(|j| {
                let a = img.column(j);
                let b = img.column(j + 1);
                let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
                let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
                a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>() / (na * nb)
            })
            .collect()
    }

    #[test]
    fn synthetic_image_extremes() {
        let flat = gen_synthetic_image(16, 8, 1.0, 4).unwrap();
        for c in adjacent_cos(&flat) {
            assert!((c - 1.0).abs() < 1e-12);
        }
        let rough = gen_synthetic_image(512, 96, 0.0, 4).unwrap();
        let mean: f64 =
            adjacent_cos(&rough).iter().sum::<f64>() / (rough.ncols() as f64 - 1.0);
        assert!(mean.abs() < 0.1, "mean adjacent cos {mean}");
    }

    #[test]
    fn synthetic_image_smooth_calibration() {
        let img = gen_synthetic_image(128, 64, 0.95, 7).unwrap();
        let cos = adjacent_cos(&img);
        let mean: f64 = cos.iter().sum::<f64>() / cos.len() as f64;
        assert!(mean >= 0.9, "mean adjacent cos {mean}");
    }

    #[test]
    fn synthetic_image_rejects_bad_smoothness() {
        assert!(gen_synthetic_image(8, 8, 1.5, 0).is_err());
        assert!(gen_synthetic_image(8, 8, -0.1, 0).is_err());
        assert!(gen_synthetic_image(1, 8, 0.5, 0).is_err());
    }
}
