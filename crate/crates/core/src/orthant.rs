//! Eigenbasis rotation and sign diagnostics: rotation into the Gram
//! eigenbasis, the weighted inner-product expansion, the identical-orthant
//! ratio, and the minus-term conditions.

use ndarray::Array1;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectra::GramSpectrum;

/// A signal pair rotated into the eigenbasis of the joint-support Gram
/// matrix, with its index partition by product sign.
#[derive(Debug, Clone, Serialize)]
pub struct RotatedPair {
    pub z_u: Array1<f64>,
    pub z_v: Array1<f64>,
    /// Indices with `z_ui * z_vi > 0` (k1 in size).
    pub same_sign_idx: Vec<usize>,
    /// Indices with `z_ui * z_vi < 0` (k2 in size).
    pub opposite_sign_idx: Vec<usize>,
    /// Indices with a zero product; contribute nothing to any sum.
    pub zero_idx: Vec<usize>,
}

impl RotatedPair {
    pub fn k1(&self) -> usize {
        self.same_sign_idx.len()
    }

    pub fn k2(&self) -> usize {
        self.opposite_sign_idx.len()
    }

    /// `<z_u, z_v>` restricted to the same-sign set (always >= 0).
    pub fn same_sign_inner(&self) -> f64 {
        self.same_sign_idx.iter().map(|&i| self.z_u[i] * self.z_v[i]).sum()
    }

    /// `<z_u, z_v>` restricted to the opposite-sign set (always <= 0).
    pub fn opposite_sign_inner(&self) -> f64 {
        self.opposite_sign_idx.iter().map(|&i| self.z_u[i] * self.z_v[i]).sum()
    }

    pub fn inner(&self) -> f64 {
        self.z_u.dot(&self.z_v)
    }

    /// Included-angle cosine of the rotated pair; equals cos alpha of the
    /// original signals by orthogonal invariance.
    pub fn cos_alpha(&self) -> Result<f64> {
        let nu = self.z_u.dot(&self.z_u).sqrt();
        let nv = self.z_v.dot(&self.z_v).sqrt();
        if nu == 0.0 || nv == 0.0 {
            return Err(Error::invalid("zero vector has no angle"));
        }
        Ok(self.inner() / (nu * nv))
    }
}

/// Rotates the support-restricted signals into the Gram eigenbasis:
/// `z = V^T x_I`. The support must cover every nonzero of both signals and
/// be sorted ascending, matching the column order used for the spectrum.
pub fn rotate_pair(
    spectrum: &GramSpectrum,
    x_u: &Array1<f64>,
    x_v: &Array1<f64>,
    support: &[usize],
) -> Result<RotatedPair> {
    if support.len() != spectrum.size {
        return Err(Error::invalid("support size must match spectrum size"));
    }
    for (&a, &b) in support.iter().zip(support.iter().skip(1)) {
        if a >= b {
            return Err(Error::invalid("support must be sorted and duplicate-free"));
        }
    }
    for (label, x) in [("x_u", x_u), ("x_v", x_v)] {
        for (j, &v) in x.iter().enumerate() {
            if v != 0.0 && !support.contains(&j) {
                return Err(Error::invalid(format!(
                    "{label} has a nonzero at index {j} outside the support"
                )));
            }
        }
    }
    let restrict_to = |x: &Array1<f64>| -> Array1<f64> {
        Array1::from_iter(support.iter().map(|&j| x[j]))
    };
    let z_u = spectrum.eigenvectors.t().dot(&restrict_to(x_u));
    let z_v = spectrum.eigenvectors.t().dot(&restrict_to(x_v));
    let mut same_sign_idx = Vec::new();
    let mut opposite_sign_idx = Vec::new();
    let mut zero_idx = Vec::new();
    for i in 0..z_u.len() {
        let p = z_u[i] * z_v[i];
        if p > 0.0 {
            same_sign_idx.push(i);
        } else if p < 0.0 {
            opposite_sign_idx.push(i);
        } else {
            zero_idx.push(i);
        }
    }
    Ok(RotatedPair { z_u, z_v, same_sign_idx, opposite_sign_idx, zero_idx })
}

/// The eigenvalue-weighted expansion `sum_i lambda_i z_ui z_vi`, which
/// equals `<Phi x_u, Phi x_v>` exactly.
pub fn expand_inner(spectrum: &GramSpectrum, pair: &RotatedPair) -> Result<f64> {
    if pair.z_u.len() != spectrum.size || pair.z_v.len() != spectrum.size {
        return Err(Error::invalid("pair dimension must match spectrum size"));
    }
    Ok((0..spectrum.size)
        .map(|i| spectrum.eigenvalues[i] * pair.z_u[i] * pair.z_v[i])
        .sum())
}

#[derive(Debug, Clone, Serialize)]
pub struct OrthantRatio {
    /// `|<z_u^o, z_v^o>| / <z_u, z_v>`
    pub ratio: f64,
    /// `1 / cos_alpha - 1`
    pub bound: f64,
    pub within: bool,
    pub cos_alpha: f64,
}

/// Identical-orthant diagnostic: the opposite-sign mass relative to the
/// whole inner product, against its theoretical ceiling.
pub fn orthant_ratio(pair: &RotatedPair) -> Result<OrthantRatio> {
    let cos_alpha = pair.cos_alpha()?;
    if cos_alpha <= 0.0 {
        return Err(Error::Domain(
            "orthant ratio requires cos_alpha > 0".into(),
        ));
    }
    let inner = pair.inner();
    let ratio = pair.opposite_sign_inner().abs() / inner;
    let bound = 1.0 / cos_alpha - 1.0;
    let tol = 1e-12 * ratio.abs().max(bound.abs()).max(1.0);
    Ok(OrthantRatio { ratio, bound, within: ratio <= bound + tol, cos_alpha })
}

/// Minus-term sums, conditions, and the sandwich conclusions they imply.
#[derive(Debug, Clone, Serialize)]
pub struct MinusTermReport {
    /// `sum over S of (lambda_max cos_alpha - lambda_i) z_ui z_vi`
    pub sum_a: f64,
    /// `sum over S of ((lmax - lmin)(1 - cos_a)/cos_a^2 - (lambda_i - lmin)) z_ui z_vi`
    pub sum_b: f64,
    pub neg_count_a: usize,
    pub neg_count_b: usize,
    pub condition_a: bool,
    pub condition_b: bool,
    /// Sandwich over the full index set (what the proof actually delivers).
    pub conclusion_holds: bool,
    /// Sandwich restricted to the same-sign set (the statement as printed).
    pub conclusion_holds_same_sign: bool,
}

/// Evaluates the minus-term conditions and checks the sandwich they imply.
/// The stated conditions bound the full-support sandwich gap from the
/// same-sign side, so `condition_a && condition_b` guarantees
/// `conclusion_holds`; this implication is asserted on every call.
pub fn minus_term_diag(
    spectrum: &GramSpectrum,
    pair: &RotatedPair,
    cos_alpha: f64,
) -> Result<MinusTermReport> {
    if cos_alpha <= 0.0 {
        return Err(Error::Domain("minus-term conditions require cos_alpha > 0".into()));
    }
    if pair.same_sign_idx.is_empty() {
        return Err(Error::Domain("same-sign set is empty".into()));
    }
    if pair.z_u.len() != spectrum.size {
        return Err(Error::invalid("pair dimension must match spectrum size"));
    }
    let lmax = spectrum.lambda_max();
    let lmin = spectrum.lambda_min();
    let b_coeff = (lmax - lmin) * (1.0 - cos_alpha) / (cos_alpha * cos_alpha);
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    let mut neg_count_a = 0;
    let mut neg_count_b = 0;
    for &i in &pair.same_sign_idx {
        let p = pair.z_u[i] * pair.z_v[i];
        let term_a = (lmax * cos_alpha - spectrum.eigenvalues[i]) * p;
        let term_b = (b_coeff - (spectrum.eigenvalues[i] - lmin)) * p;
        sum_a += term_a;
        sum_b += term_b;
        if term_a < 0.0 {
            neg_count_a += 1;
        }
        if term_b < 0.0 {
            neg_count_b += 1;
        }
    }
    let condition_a = sum_a >= 0.0;
    let condition_b = sum_b <= 0.0;

    let weighted = expand_inner(spectrum, pair)?;
    let inner = pair.inner();
    let scale = weighted.abs().max(inner.abs()).max(1.0);
    let tol = 1e-12 * scale;
    let conclusion_holds =
        lmin * inner - tol <= weighted && weighted <= lmax * inner + tol;

    let s_inner = pair.same_sign_inner();
    let s_weighted: f64 = pair
        .same_sign_idx
        .iter()
        .map(|&i| spectrum.eigenvalues[i] * pair.z_u[i] * pair.z_v[i])
        .sum();
    let conclusion_holds_same_sign =
        lmin * s_inner - tol <= s_weighted && s_weighted <= lmax * s_inner + tol;

    if condition_a && condition_b && !conclusion_holds {
        return Err(Error::NumericFailure(
            "minus-term conditions held but the sandwich failed".into(),
        ));
    }
    Ok(MinusTermReport {
        sum_a,
        sum_b,
        neg_count_a,
        neg_count_b,
        condition_a,
        condition_b,
        conclusion_holds,
        conclusion_holds_same_sign,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{gen_gaussian_matrix, gen_sparse_signal_with};
    use crate::rng::rng_from_seed;
    use crate::spectra::{eig_sym, gram, restrict};
    use ndarray::{array, Array2};

    fn joint_setup(
        seed: u64,
        m: usize,
        n: usize,
        k: usize,
        rng: &mut crate::rng::SeededRng,
    ) -> (GramSpectrum, Array1<f64>, Array1<f64>, Vec<usize>) {
        let phi = gen_gaussian_matrix(m, n, seed).unwrap();
        let xu = gen_sparse_signal_with(rng, n, k).unwrap();
        let xv = gen_sparse_signal_with(rng, n, k).unwrap();
        let joint: Vec<usize> = (0..n)
            .filter(|&j| xu.values[j] != 0.0 || xv.values[j] != 0.0)
            .collect();
        let spec = eig_sym(&gram(&restrict(&phi, &joint).unwrap())).unwrap();
        (spec, xu.values, xv.values, joint)
    }

    #[test]
    fn identity_rotation_is_restriction() {
        let spec = eig_sym(&Array2::eye(3)).unwrap();
        let x: Array1<f64> = array![0.0, 1.0, 0.0, -2.0, 0.0, 3.0];
        let y: Array1<f64> = array![0.0, 4.0, 0.0, 0.0, 0.0, -1.0];
        let pair = rotate_pair(&spec, &x, &y, &[1, 3, 5]).unwrap();
        // eigenvectors of I are signed permutations; products preserved
        assert!((pair.inner() - x.dot(&y)).abs() < 1e-14);
        assert!((pair.z_u.dot(&pair.z_u) - 14.0).abs() < 1e-14);
    }

    #[test]
    fn rotation_preserves_norms_and_inner_products() {
        let mut rng = rng_from_seed(7);
        for t in 0..300u64 {
            let (spec, xu, xv, joint) = joint_setup(100 + t, 24, 48, 4, &mut rng);
            let pair = rotate_pair(&spec, &xu, &xv, &joint).unwrap();
            let nu = xu.dot(&xu);
            let nv = xv.dot(&xv);
            assert!((pair.z_u.dot(&pair.z_u) - nu).abs() <= 1e-10 * nu.max(1.0));
            assert!((pair.z_v.dot(&pair.z_v) - nv).abs() <= 1e-10 * nv.max(1.0));
            let ip = xu.dot(&xv);
            assert!((pair.inner() - ip).abs() <= 1e-10 * ip.abs().max(1.0));
        }
    }

    #[test]
    fn rotate_pair_rejects_bad_support() {
        let spec = eig_sym(&Array2::eye(2)).unwrap();
        let x: Array1<f64> = array![1.0, 0.0, 1.0];
        assert!(rotate_pair(&spec, &x, &x, &[0, 1]).is_err()); // nonzero outside
        assert!(rotate_pair(&spec, &x, &x, &[2, 0]).is_err()); // unsorted
        assert!(rotate_pair(&spec, &x, &x, &[0]).is_err()); // size mismatch
    }

    #[test]
    fn expand_inner_hand_case() {
        // Gram diag(4, 1): eigenvalues 4, 1 with axis eigenvectors
        let spec = eig_sym(&array![[4.0, 0.0], [0.0, 1.0]]).unwrap();
        let pair = RotatedPair {
            z_u: array![1.0, 1.0],
            z_v: array![1.0, 1.0],
            same_sign_idx: vec![0, 1],
            opposite_sign_idx: vec![],
            zero_idx: vec![],
        };
        assert!((expand_inner(&spec, &pair).unwrap() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn expansion_matches_measured_inner_product() {
        let mut rng = rng_from_seed(11);
        for t in 0..300u64 {
            let phi = gen_gaussian_matrix(24, 48, 400 + t).unwrap();
            let xu = gen_sparse_signal_with(&mut rng, 48, 4).unwrap();
            let xv = gen_sparse_signal_with(&mut rng, 48, 4).unwrap();
            let joint: Vec<usize> = (0..48)
                .filter(|&j| xu.values[j] != 0.0 || xv.values[j] != 0.0)
                .collect();
            let spec = eig_sym(&gram(&restrict(&phi, &joint).unwrap())).unwrap();
            let pair = rotate_pair(&spec, &xu.values, &xv.values, &joint).unwrap();
            let expanded = expand_inner(&spec, &pair).unwrap();
            let direct = phi.entries.dot(&xu.values).dot(&phi.entries.dot(&xv.values));
            assert!(
                (expanded - direct).abs() <= 1e-9 * direct.abs().max(1.0),
                "trial {t}: {expanded} vs {direct}"
            );
        }
    }

    #[test]
    fn flat_unit_spectrum_reduces_to_plain_inner() {
        let spec = eig_sym(&Array2::eye(4)).unwrap();
        let pair = RotatedPair {
            z_u: array![1.0, -2.0, 0.5, 0.0],
            z_v: array![2.0, 1.0, 0.5, 3.0],
            same_sign_idx: vec![0, 2],
            opposite_sign_idx: vec![1],
            zero_idx: vec![3],
        };
        let e = expand_inner(&spec, &pair).unwrap();
        assert!((e - pair.inner()).abs() < 1e-14);
    }

    #[test]
    fn orthant_ratio_equal_vectors() {
        let spec = eig_sym(&Array2::eye(3)).unwrap();
        let x: Array1<f64> = array![1.0, 2.0, 3.0];
        let pair = rotate_pair(&spec, &x, &x, &[0, 1, 2]).unwrap();
        let r = orthant_ratio(&pair).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(r.bound.abs() < 1e-12);
        assert!(r.within);
    }

    #[test]
    fn orthant_ratio_rejects_nonpositive_angle() {
        let pair = RotatedPair {
            z_u: array![1.0, 0.0],
            z_v: array![-1.0, 0.0],
            same_sign_idx: vec![],
            opposite_sign_idx: vec![0],
            zero_idx: vec![1],
        };
        assert!(matches!(orthant_ratio(&pair), Err(Error::Domain(_))));
    }

    #[test]
    fn orthant_ratio_bound_holds_on_random_pairs() {
        let mut rng = rng_from_seed(23);
        let mut checked = 0;
        for t in 0..2000u64 {
            let (spec, xu, xv, joint) = joint_setup(700 + t, 24, 48, 4, &mut rng);
            let pair = rotate_pair(&spec, &xu, &xv, &joint).unwrap();
            let cos_alpha = pair.cos_alpha().unwrap();
            if cos_alpha <= 0.0 {
                continue;
            }
            let r = orthant_ratio(&pair).unwrap();
            assert!(r.within, "trial {t}: ratio {} > bound {}", r.ratio, r.bound);
            checked += 1;
        }
        assert!(checked > 500, "only {checked} positive-angle instances");
    }

    #[test]
    fn angle_chain_theta_alpha_gamma() {
        let mut rng = rng_from_seed(29);
        for t in 0..1000u64 {
            let (spec, xu, xv, joint) = joint_setup(2000 + t, 24, 48, 4, &mut rng);
            let pair = rotate_pair(&spec, &xu, &xv, &joint).unwrap();
            let cos_alpha = pair.cos_alpha().unwrap();
            if cos_alpha <= 0.0 || pair.same_sign_idx.is_empty() {
                continue;
            }
            let sub_norm = |idx: &[usize], z: &Array1<f64>| -> f64 {
                idx.iter().map(|&i| z[i] * z[i]).sum::<f64>().sqrt()
            };
            let ns_u = sub_norm(&pair.same_sign_idx, &pair.z_u);
            let ns_v = sub_norm(&pair.same_sign_idx, &pair.z_v);
            let cos_theta = pair.same_sign_inner() / (ns_u * ns_v);
            assert!(cos_theta >= cos_alpha - 1e-12, "trial {t}");
            if !pair.opposite_sign_idx.is_empty() {
                let no_u = sub_norm(&pair.opposite_sign_idx, &pair.z_u);
                let no_v = sub_norm(&pair.opposite_sign_idx, &pair.z_v);
                let cos_gamma = pair.opposite_sign_inner() / (no_u * no_v);
                assert!(cos_gamma <= cos_alpha + 1e-12, "trial {t}");
            }
        }
    }

    #[test]
    fn same_orthant_pairs_satisfy_sandwich_exactly() {
        // k2 = 0: every product nonnegative, so the weighted sum is pinched
        // between lambda_min and lambda_max times the plain sum
        let mut rng = rng_from_seed(31);
        let mut found = 0;
        for t in 0..4000u64 {
            let (spec, xu, xv, joint) = joint_setup(3000 + t, 24, 48, 3, &mut rng);
            let pair = rotate_pair(&spec, &xu, &xv, &joint).unwrap();
            if pair.k2() != 0 {
                continue;
            }
            let w = expand_inner(&spec, &pair).unwrap();
            let ip = pair.inner();
            let tol = 1e-10 * w.abs().max(ip.abs()).max(1.0);
            assert!(spec.lambda_min() * ip <= w + tol && w <= spec.lambda_max() * ip + tol);
            found += 1;
        }
        assert!(found > 0, "no k2 = 0 instances encountered");
    }

    #[test]
    fn minus_term_flat_spectrum_equality() {
        let spec = eig_sym(&(Array2::eye(3) * 2.0)).unwrap();
        let x: Array1<f64> = array![1.0, 1.0, 1.0];
        let pair = rotate_pair(&spec, &x, &x, &[0, 1, 2]).unwrap();
        let r = minus_term_diag(&spec, &pair, 1.0).unwrap();
        assert!(r.sum_a.abs() < 1e-12 * 6.0);
        assert!(r.sum_b.abs() < 1e-12 * 6.0);
        assert!(r.conclusion_holds);
        assert!(r.conclusion_holds_same_sign);
    }

    #[test]
    fn minus_term_rejects_bad_domain() {
        let spec = eig_sym(&Array2::eye(2)).unwrap();
        let pair = RotatedPair {
            z_u: array![1.0, 0.0],
            z_v: array![1.0, 0.0],
            same_sign_idx: vec![0],
            opposite_sign_idx: vec![],
            zero_idx: vec![1],
        };
        assert!(matches!(minus_term_diag(&spec, &pair, 0.0), Err(Error::Domain(_))));
        assert!(matches!(minus_term_diag(&spec, &pair, -0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn minus_term_implication_on_random_instances() {
        let mut rng = rng_from_seed(37);
        let mut satisfied = 0;
        for t in 0..3000u64 {
            let (spec, xu, xv, joint) = joint_setup(5000 + t, 24, 48, 4, &mut rng);
            let pair = rotate_pair(&spec, &xu, &xv, &joint).unwrap();
            let cos_alpha = match pair.cos_alpha() {
                Ok(c) if c > 0.0 => c,
                _ => continue,
            };
            if pair.same_sign_idx.is_empty() {
                continue;
            }
            // minus_term_diag errors out if the implication ever fails
            let r = minus_term_diag(&spec, &pair, cos_alpha).unwrap();
            if r.condition_a && r.condition_b {
                assert!(r.conclusion_holds);
                satisfied += 1;
            }
        }
        assert!(satisfied > 0, "conditions never jointly satisfied");
    }
}
