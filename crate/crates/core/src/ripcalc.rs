//! Restricted isometry and restricted orthogonality constants: exact
//! enumeration on small instances, Monte-Carlo lower bounds elsewhere.

use rayon::prelude::*;
use serde::Serialize;

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, sample_support};
use crate::spectra::{eig_sym, gram, restrict, GramSpectrum};

/// Default ceiling on the number of supports an exact search may visit.
pub const ENUMERATION_CAP: u128 = 2_000_000;

/// Candidate counts below this are sampled without replacement.
const DISTINCT_SAMPLING_LIMIT: u128 = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RicMode {
    Exact,
    MonteCarlo,
}

/// Restricted isometry constant for one sparsity level.
#[derive(Debug, Clone, Serialize)]
pub struct RicResult {
    pub k: usize,
    /// Reported unclamped: values >= 1 are possible for real matrices.
    pub delta: f64,
    pub mode: RicMode,
    pub witness_support: Vec<usize>,
    pub lambda_min: f64,
    pub lambda_max: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
}

/// Restricted orthogonality constant for a pair of sparsity levels.
#[derive(Debug, Clone, Serialize)]
pub struct RocResult {
    pub k: usize,
    pub k_prime: usize,
    pub theta: f64,
    pub witness: (Vec<usize>, Vec<usize>),
}

/// Per-support isometry constant: `max(lambda_max - 1, 1 - lambda_min)` of
/// the support's Gram matrix.
pub fn ric_support(phi: &MeasurementMatrix, support: &[usize]) -> Result<(f64, GramSpectrum)> {
    let sub = restrict(phi, support)?;
    let spectrum = eig_sym(&gram(&sub))?;
    let delta = (spectrum.lambda_max() - 1.0).max(1.0 - spectrum.lambda_min());
    Ok((delta, spectrum))
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in (i + 1)..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn all_supports(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        if !next_combination(&mut idx, n) {
            break;
        }
    }
    out
}

/// Unranks `rank` into the lexicographically ordered size-`k` subsets of
/// `{0..n-1}` (combinatorial number system).
fn unrank_combination(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0usize;
    for slot in 0..k {
        let remaining = k - slot - 1;
        for cand in next..n {
            let count = binomial(n - cand - 1, remaining);
            if rank < count {
                out.push(cand);
                next = cand + 1;
                break;
            }
            rank -= count;
        }
    }
    out
}

fn max_over_supports(
    phi: &MeasurementMatrix,
    supports: Vec<Vec<usize>>,
) -> Result<(f64, Vec<usize>, f64, f64)> {
    // Parallel max with lexicographically smallest witness on ties.
    let best = supports
        .into_par_iter()
        .map(|s| {
            let (delta, spec) = ric_support(phi, &s)?;
            Ok::<_, Error>((delta, s, spec.lambda_min(), spec.lambda_max()))
        })
        .try_reduce(
            || (f64::NEG_INFINITY, Vec::new(), 0.0, 0.0),
            |a, b| {
                Ok(if b.0 > a.0 || (b.0 == a.0 && !a.1.is_empty() && b.1 < a.1) {
                    b
                } else {
                    a
                })
            },
        )?;
    Ok(best)
}

/// Exact RIC: maximizes the per-support constant over all C(N,K) supports.
pub fn ric_exact(phi: &MeasurementMatrix, k: usize) -> Result<RicResult> {
    if k == 0 || k > phi.cols {
        return Err(Error::invalid("K must satisfy 1 <= K <= N"));
    }
    let count = binomial(phi.cols, k);
    if count > ENUMERATION_CAP {
        return Err(Error::Capacity(format!(
            "C({}, {k}) = {count} supports exceeds the cap {ENUMERATION_CAP}; use ric_monte_carlo",
            phi.cols
        )));
    }
    let (delta, witness, lmin, lmax) = max_over_supports(phi, all_supports(phi.cols, k))?;
    Ok(RicResult {
        k,
        delta,
        mode: RicMode::Exact,
        witness_support: witness,
        lambda_min: lmin,
        lambda_max: lmax,
        trials: None,
    })
}

/// Monte-Carlo RIC lower bound: max of the per-support constant over sampled
/// supports. Samples without replacement when the candidate count is small
/// enough to unrank, with replacement otherwise.
pub fn ric_monte_carlo(
    phi: &MeasurementMatrix,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<RicResult> {
    if k == 0 || k > phi.cols {
        return Err(Error::invalid("K must satisfy 1 <= K <= N"));
    }
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let count = binomial(phi.cols, k);
    let mut rng = rng_from_seed(seed);
    let supports: Vec<Vec<usize>> = if count <= DISTINCT_SAMPLING_LIMIT {
        let total = count as usize;
        if trials >= total {
            all_supports(phi.cols, k)
        } else {
            let ranks = sample_support(&mut rng, total, trials);
            ranks
                .into_iter()
                .map(|r| unrank_combination(r as u128, phi.cols, k))
                .collect()
        }
    } else {
        (0..trials)
            .map(|_| sample_support(&mut rng, phi.cols, k))
            .collect()
    };
    let sampled = supports.len();
    let (delta, witness, lmin, lmax) = max_over_supports(phi, supports)?;
    Ok(RicResult {
        k,
        delta,
        mode: RicMode::MonteCarlo,
        witness_support: witness,
        lambda_min: lmin,
        lambda_max: lmax,
        trials: Some(sampled),
    })
}

/// Tight restricted-orthogonality constant for one disjoint support pair:
/// the spectral norm of the cross-Gram `Phi_I^T Phi_I'`.
pub fn roc(phi: &MeasurementMatrix, i: &[usize], i_prime: &[usize]) -> Result<f64> {
    if i.iter().any(|a| i_prime.contains(a)) {
        return Err(Error::invalid("supports must be disjoint"));
    }
    let a = restrict(phi, i)?;
    let b = restrict(phi, i_prime)?;
    let cross = a.t().dot(&b);
    // sigma_max(C) = sqrt(lambda_max(C^T C)); C^T C is symmetric PSD.
    let ctc = cross.t().dot(&cross);
    let sym = 0.5 * (&ctc + &ctc.t());
    let spec = eig_sym(&sym)?;
    Ok(spec.lambda_max().max(0.0).sqrt())
}

/// Exact ROC: maximizes `roc` over all disjoint support pairs of sizes
/// (K, K') under the enumeration cap.
pub fn roc_exact(phi: &MeasurementMatrix, k: usize, k_prime: usize) -> Result<RocResult> {
    let n = phi.cols;
    if k == 0 || k_prime == 0 || k + k_prime > n {
        return Err(Error::invalid("need 1 <= K, K' and K + K' <= N"));
    }
    let pair_count = binomial(n, k).saturating_mul(binomial(n - k, k_prime));
    if pair_count > ENUMERATION_CAP {
        return Err(Error::Capacity(format!(
            "{pair_count} disjoint pairs exceeds the cap {ENUMERATION_CAP}"
        )));
    }
    let firsts = all_supports(n, k);
    let best = firsts
        .into_par_iter()
        .map(|i| {
            let complement: Vec<usize> = (0..n).filter(|j| !i.contains(j)).collect();
            let mut best = (f64::NEG_INFINITY, Vec::new(), Vec::new());
            let mut pick: Vec<usize> = (0..k_prime).collect();
            loop {
                let i_prime: Vec<usize> = pick.iter().map(|&p| complement[p]).collect();
                let theta = roc(phi, &i, &i_prime)?;
                if theta > best.0 {
                    best = (theta, i.clone(), i_prime);
                }
                if !next_combination(&mut pick, complement.len()) {
                    break;
                }
            }
            Ok::<_, Error>(best)
        })
        .try_reduce(
            || (f64::NEG_INFINITY, Vec::new(), Vec::new()),
            |a, b| Ok(if b.0 > a.0 { b } else { a }),
        )?;
    Ok(RocResult {
        k,
        k_prime,
        theta: best.0,
        witness: (best.1, best.2),
    })
}
