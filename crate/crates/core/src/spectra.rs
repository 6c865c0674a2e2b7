//! Support restriction, Gram matrices, symmetric eigendecomposition, and
//! Gershgorin radius — the spectral substrate used by every bound.
//!
//! The eigensolver is cyclic Jacobi: a sequence of plane rotations that
//! annihilate off-diagonal entries until the off-diagonal Frobenius mass
//! drops below `1e-12 * ||G||_F`. Matrices here are small (|I| up to a few
//! hundred), where Jacobi is robustly accurate.

use ndarray::Array2;
use serde::Serialize;

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-10;
const OFFDIAG_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100;
const EIGEN_CLAMP: f64 = -1e-12;

/// Eigendecomposition of a Gram matrix, eigenvalues sorted descending.
#[derive(Debug, Clone, Serialize)]
pub struct GramSpectrum {
    pub size: usize,
    /// Sorted descending; values in (-1e-12, 0) are clamped to 0.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, ordered consistently with `eigenvalues`.
    pub eigenvectors: Array2<f64>,
    /// Smallest eigenvalue before clamping, kept for diagnostics.
    pub raw_min_eigenvalue: f64,
}

impl GramSpectrum {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

/// Columns of `phi` at the given indices, ascending index order.
pub fn restrict(phi: &MeasurementMatrix, support: &[usize]) -> Result<Array2<f64>> {
    restrict_entries(&phi.entries, support)
}

pub fn restrict_entries(entries: &Array2<f64>, support: &[usize]) -> Result<Array2<f64>> {
    let n = entries.ncols();
    if support.is_empty() {
        return Err(Error::invalid("support must be nonempty"));
    }
    let mut idx = support.to_vec();
    idx.sort_unstable();
    if idx.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::invalid("support contains duplicate indices"));
    }
    if *idx.last().unwrap() >= n {
        return Err(Error::invalid(format!(
            "support index {} out of range for {} columns",
            idx.last().unwrap(),
            n
        )));
    }
    let m = entries.nrows();
    let mut out = Array2::zeros((m, idx.len()));
    for (c, &j) in idx.iter().enumerate() {
        out.column_mut(c).assign(&entries.column(j));
    }
    Ok(out)
}

/// Gram matrix of the columns: `G[i][j] = <col_i, col_j>`, exactly symmetric.
pub fn gram(phi_i: &Array2<f64>) -> Array2<f64> {
    let k = phi_i.ncols();
    let mut g = Array2::zeros((k, k));
    for i in 0..k {
        for j in i..k {
            let v = phi_i.column(i).dot(&phi_i.column(j));
            g[[i, j]] = v;
            g[[j, i]] = v;
        }
    }
    g
}

fn frobenius(a: &Array2<f64>) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn offdiag_frobenius(a: &Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                acc += a[[i, j]] * a[[i, j]];
            }
        }
    }
    acc.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
pub fn eig_sym(g: &Array2<f64>) -> Result<GramSpectrum> {
    let n = g.nrows();
    if n == 0 || g.ncols() != n {
        return Err(Error::invalid("matrix must be square and nonempty"));
    }
    let scale = frobenius(g).max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (g[[i, j]] - g[[j, i]]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid("matrix is not symmetric"));
            }
        }
    }

    let mut a = g.clone();
    let mut v = Array2::eye(n);
    let target = OFFDIAG_TOL * frobenius(g);

    let mut converged = n == 1 || offdiag_frobenius(&a) <= target;
    for _sweep in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq == 0.0 {
                    continue;
                }
                // Rutishauser rotation (Numerical Recipes form).
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    -1.0 / (-theta + (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);

                let app = a[[p, p]];
                let aqq = a[[q, q]];
                a[[p, p]] = app - t * apq;
                a[[q, q]] = aqq + t * apq;
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for r in 0..n {
                    if r != p && r != q {
                        let arp = a[[r, p]];
                        let arq = a[[r, q]];
                        a[[r, p]] = arp - s * (arq + tau * arp);
                        a[[r, q]] = arq + s * (arp - tau * arq);
                        a[[p, r]] = a[[r, p]];
                        a[[q, r]] = a[[r, q]];
                    }
                }
                for r in 0..n {
                    let vrp = v[[r, p]];
                    let vrq = v[[r, q]];
                    v[[r, p]] = vrp - s * (vrq + tau * vrp);
                    v[[r, q]] = vrq + s * (vrp - tau * vrq);
                }
            }
        }
        converged = offdiag_frobenius(&a) <= target;
    }
    if !converged {
        return Err(Error::NumericFailure(format!(
            "Jacobi iteration did not converge within {MAX_SWEEPS} sweeps"
        )));
    }

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps Jacobi output order among ties.
    order.sort_by(|&i, &j| a[[j, j]].partial_cmp(&a[[i, i]]).unwrap());

    let raw_min = order.iter().map(|&i| a[[i, i]]).fold(f64::INFINITY, f64::min);
    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| {
            let lam = a[[i, i]];
            if lam < 0.0 && lam > EIGEN_CLAMP {
                0.0
            } else {
                lam
            }
        })
        .collect();
    let mut vec_sorted = Array2::zeros((n, n));
    for (c, &i) in order.iter().enumerate() {
        vec_sorted.column_mut(c).assign(&v.column(i));
    }

    Ok(GramSpectrum {
        size: n,
        eigenvalues,
        eigenvectors: vec_sorted,
        raw_min_eigenvalue: raw_min,
    })
}

/// Largest Gershgorin disc radius: `max_i sum_{j != i} |G[i][j]|`.
pub fn gershgorin_radius(g: &Array2<f64>) -> f64 {
    let n = g.nrows();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| g[[i, j]].abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
    }
