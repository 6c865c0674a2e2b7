//! Angle geometry of signal pairs and the conformal-property bounds:
//! the JL-based interval, the inner-product interval, the orthogonal-pair
//! interval, the sandwich-assumption check, and empirical JL constants.

use ndarray::Array1;
use serde::Serialize;

use crate::ensembles::MeasurementMatrix;
use crate::error::{Error, Result};
use crate::ripcalc::ric_support;
use crate::spectra::{eig_sym, gram, restrict};

const COS_CLAMP_TOL: f64 = 1e-12;

/// Everything needed to evaluate the angle bounds for one signal pair.
#[derive(Debug, Clone, Serialize)]
pub struct PairGeometry {
    /// Energy-imbalance ratio, always >= 1.
    pub xi: f64,
    pub cos_alpha: f64,
    pub cos_beta: f64,
    pub delta_u: f64,
    pub delta_v: f64,
    pub delta_max: f64,
    pub inner_x: f64,
    pub inner_y: f64,
    pub norm_u: f64,
    pub norm_v: f64,
    pub support_u: Vec<usize>,
    pub support_v: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    RcpJl,
    RcpIp,
    RcpOrthogonal,
}

/// Constants that went into a bound, for reporting.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BoundConstants {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_k: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cos_alpha: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub kind: BoundKind,
    pub constants: BoundConstants,
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn clamp_cos(raw: f64) -> Result<f64> {
    if raw.abs() <= 1.0 {
        Ok(raw)
    } else if raw.abs() <= 1.0 + COS_CLAMP_TOL {
        Ok(raw.signum())
    } else {
        Err(Error::NumericFailure(format!(
            "angle cosine {raw} outside [-1, 1] beyond rounding tolerance"
        )))
    }
}

/// Computes xi, both angle cosines, and the per-support isometry constants
/// for a signal pair under `phi`.
pub fn pair_geometry(
    phi: &MeasurementMatrix,
    x_u: &Array1<f64>,
    x_v: &Array1<f64>,
) -> Result<PairGeometry> {
    let mut cache = std::collections::HashMap::new();
    pair_geometry_cached(phi, x_u, x_v, &mut cache)
}

/// As [`pair_geometry`], but memoizes the per-support delta computation —
/// worthwhile when many pairs share supports (e.g. dense image columns,
/// where every column has the full support).
pub fn pair_geometry_cached(
    phi: &MeasurementMatrix,
    x_u: &Array1<f64>,
    x_v: &Array1<f64>,
    delta_cache: &mut std::collections::HashMap<Vec<usize>, f64>,
) -> Result<PairGeometry> {
    if x_u.len() != phi.cols || x_v.len() != phi.cols {
        return Err(Error::invalid("signal length must equal matrix columns"));
    }
    let norm_u = norm(x_u);
    let norm_v = norm(x_v);
    if norm_u == 0.0 || norm_v == 0.0 {
        return Err(Error::invalid("zero vector has no angle"));
    }
    let y_u = phi.entries.dot(x_u);
    let y_v = phi.entries.dot(x_v);
    let norm_yu = norm(&y_u);
    let norm_yv = norm(&y_v);
    if norm_yu == 0.0 || norm_yv == 0.0 {
        return Err(Error::DegenerateSample(
            "measurement vector is zero; cos beta undefined".into(),
        ));
    }
    let support_u: Vec<usize> = x_u.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
    let support_v: Vec<usize> = x_v.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, _)| i).collect();
    let delta_u = match delta_cache.get(&support_u) {
        Some(&d) => d,
        None => {
            let (d, _) = ric_support(phi, &support_u)?;
            delta_cache.insert(support_u.clone(), d);
            d
        }
    };
    let delta_v = match delta_cache.get(&support_v) {
        Some(&d) => d,
        None => {
            let (d, _) = ric_support(phi, &support_v)?;
            delta_cache.insert(support_v.clone(), d);
            d
        }
    };

    let inner_x = x_u.dot(x_v);
    let inner_y = y_u.dot(&y_v);
    Ok(PairGeometry {
        xi: (norm_u * norm_u + norm_v * norm_v) / (2.0 * norm_u * norm_v),
        cos_alpha: clamp_cos(inner_x / (norm_u * norm_v))?,
        cos_beta: clamp_cos(inner_y / (norm_yu * norm_yv))?,
        delta_u,
        delta_v,
        delta_max: delta_u.max(delta_v),
        inner_x,
        inner_y,
        norm_u,
        norm_v,
        support_u,
        support_v,
    })
}

fn check_jl_args(xi: f64, cos_alpha: f64, delta_max: f64, epsilon: f64) -> Result<()> {
    if !(0.0..1.0).contains(&delta_max) {
        return Err(Error::invalid("delta_max must lie in [0, 1)"));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::invalid("epsilon must lie in [0, 1)"));
    }
    if xi < 1.0 - COS_CLAMP_TOL {
        return Err(Error::invalid("xi must be at least 1"));
    }
    if cos_alpha.abs() > 1.0 + COS_CLAMP_TOL {
        return Err(Error::invalid("cos_alpha must lie in [-1, 1]"));
    }
    Ok(())
}

/// JL-based angle interval in its published form:
/// `upper = (d - e)/(1 - d) * xi + (1 - e)/(1 - d) * cos_alpha`,
/// `lower = (e - d)/(1 + d) * xi + (1 + e)/(1 + d) * cos_alpha`.
///
/// See [`rcp_jl_envelope`] for a variant whose containment guarantee is
/// sound for every constant combination; the published interval can exclude
/// the measured angle when `epsilon` is not small relative to `delta_max`.
pub fn rcp_jl_bounds(
    xi: f64,
    cos_alpha: f64,
    delta_max: f64,
    epsilon: f64,
) -> Result<BoundInterval> {
    check_jl_args(xi, cos_alpha, delta_max, epsilon)?;
    let upper = (delta_max - epsilon) / (1.0 - delta_max) * xi
        + (1.0 - epsilon) / (1.0 - delta_max) * cos_alpha;
    let lower = (epsilon - delta_max) / (1.0 + delta_max) * xi
        + (1.0 + epsilon) / (1.0 + delta_max) * cos_alpha;
    Ok(BoundInterval {
        lower,
        upper,
        kind: BoundKind::RcpJl,
        constants: BoundConstants {
            epsilon: Some(epsilon),
            delta_max: Some(delta_max),
            xi: Some(xi),
            cos_alpha: Some(cos_alpha),
            ..Default::default()
        },
    })
}

/// Sign-robust JL angle envelope.
///
/// Derived directly from the law of cosines with
/// `||y_u - y_v||^2 in (1 +- e) ||x_u - x_v||^2` and the per-support energy
/// sandwich: with `q_up = (d + e) xi + (1 - e) cos_alpha` and
/// `q_lo = -(d + e) xi + (1 + e) cos_alpha`,
///
/// ```text
/// upper = q_up / (1 - d)  if q_up >= 0, else q_up / (1 + d)
/// lower = q_lo / (1 + d)  if q_lo >= 0, else q_lo / (1 - d)
/// ```
///
/// The denominator switches with the numerator's sign because the unknown
/// `||y_u|| ||y_v||` divisor must be bounded from the side that keeps the
/// inequality valid. The measured angle always lies inside this envelope.
pub fn rcp_jl_envelope(
    xi: f64,
    cos_alpha: f64,
    delta_max: f64,
    epsilon: f64,
) -> Result<BoundInterval> {
    check_jl_args(xi, cos_alpha, delta_max, epsilon)?;
    let q_up = (delta_max + epsilon) * xi + (1.0 - epsilon) * cos_alpha;
    let upper = if q_up >= 0.0 {
        q_up / (1.0 - delta_max)
    } else {
        q_up / (1.0 + delta_max)
    };
    let q_lo = -(delta_max + epsilon) * xi + (1.0 + epsilon) * cos_alpha;
    let lower = if q_lo >= 0.0 {
        q_lo / (1.0 + delta_max)
    } else {
        q_lo / (1.0 - delta_max)
    };
    Ok(BoundInterval {
        lower,
        upper,
        kind: BoundKind::RcpJl,
        constants: BoundConstants {
            epsilon: Some(epsilon),
            delta_max: Some(delta_max),
            xi: Some(xi),
            cos_alpha: Some(cos_alpha),
            ..Default::default()
        },
    })
}

/// Inner-product angle interval: the two products
/// `(1 - d)/(1 + d) * cos_alpha` and `(1 + d)/(1 - d) * cos_alpha`,
/// returned ordered. A negative `cos_alpha` flips which product is the
/// lower end; the returned interval is always `[min, max]`.
pub fn rcp_ip_bounds(cos_alpha: f64, delta_k: f64) -> Result<BoundInterval> {
    if !(0.0..1.0).contains(&delta_k) {
        return Err(Error::invalid("delta_K must lie in [0, 1)"));
    }
    if cos_alpha.abs() > 1.0 + COS_CLAMP_TOL {
        return Err(Error::invalid("cos_alpha must lie in [-1, 1]"));
    }
    let p1 = (1.0 - delta_k) / (1.0 + delta_k) * cos_alpha;
    let p2 = (1.0 + delta_k) / (1.0 - delta_k) * cos_alpha;
    Ok(BoundInterval {
        lower: p1.min(p2),
        upper: p1.max(p2),
        kind: BoundKind::RcpIp,
        constants: BoundConstants {
            delta_k: Some(delta_k),
            cos_alpha: Some(cos_alpha),
            ..Default::default()
        },
    })
}

/// Tighter inner-product interval using the joint-support spectrum directly:
/// `[lambda_min / sqrt((1+d_u)(1+d_v)), lambda_max / sqrt((1-d_u)(1-d_v))] * cos_alpha`,
/// returned ordered.
pub fn rcp_ip_bounds_spectral(
    lambda_min: f64,
    lambda_max: f64,
    delta_u: f64,
    delta_v: f64,
    cos_alpha: f64,
) -> Result<BoundInterval> {
    if !(0.0..1.0).contains(&delta_u) || !(0.0..1.0).contains(&delta_v) {
        return Err(Error::invalid("per-support deltas must lie in [0, 1)"));
    }
    let p1 = lambda_min / ((1.0 + delta_u) * (1.0 + delta_v)).sqrt() * cos_alpha;
    let p2 = lambda_max / ((1.0 - delta_u) * (1.0 - delta_v)).sqrt() * cos_alpha;
    Ok(BoundInterval {
        lower: p1.min(p2),
        upper: p1.max(p2),
        kind: BoundKind::RcpIp,
        constants: BoundConstants {
            cos_alpha: Some(cos_alpha),
            delta_max: Some(delta_u.max(delta_v)),
            ..Default::default()
        },
    })
}

/// Angle interval for orthogonal sparse pairs in its published form:
/// `[-d_K / (1 + d_max), d_K / (1 - d_max)]`.
///
/// The lower end is not a sound bound: the derivation divides the negative
/// numerator by the denominator's upper bound and silently replaces the
/// energy mean `(||x_u||^2 + ||x_v||^2) / 2` by the geometric mean on that
/// side. Violations appear empirically once per-support constants are
/// large (a few per 10^4 pairs at delta near 0.5). Use
/// [`rcp_orthogonal_envelope`] when a containment guarantee is needed.
pub fn rcp_orthogonal_bounds(delta_k: f64, delta_max: f64) -> Result<BoundInterval> {
    if !(0.0..1.0).contains(&delta_k) || !(0.0..1.0).contains(&delta_max) {
        return Err(Error::invalid("deltas must lie in [0, 1)"));
    }
    if delta_max > delta_k + COS_CLAMP_TOL {
        return Err(Error::invalid("delta_max must not exceed delta_K"));
    }
    Ok(BoundInterval {
        lower: -delta_k / (1.0 + delta_max),
        upper: delta_k / (1.0 - delta_max),
        kind: BoundKind::RcpOrthogonal,
        constants: BoundConstants {
            delta_k: Some(delta_k),
            delta_max: Some(delta_max),
            ..Default::default()
        },
    })
}

/// Looser symmetric variant with `delta_K` in both denominators:
/// `[-d_K / (1 + d_K), d_K / (1 - d_K)]`.
pub fn rcp_orthogonal_bounds_symmetric(delta_k: f64) -> Result<BoundInterval> {
    rcp_orthogonal_bounds(delta_k, delta_k)
}

/// Sign-robust orthogonal-pair envelope
/// `[-d_K xi / (1 - d_max), d_K xi / (1 - d_max)]`.
///
/// From the parallelogram identity, `|<Phi x_u, Phi x_v>|` is at most
/// `d_K (||x_u||^2 + ||x_v||^2) / 2 = d_K xi ||x_u|| ||x_v||` for disjoint
/// supports, and `||Phi x_u|| ||Phi x_v|| >= (1 - d_max) ||x_u|| ||x_v||`.
/// The measured angle always lies inside this interval.
pub fn rcp_orthogonal_envelope(delta_k: f64, delta_max: f64, xi: f64) -> Result<BoundInterval> {
    if !(0.0..1.0).contains(&delta_k) || !(0.0..1.0).contains(&delta_max) {
        return Err(Error::invalid("deltas must lie in [0, 1)"));
    }
    if xi < 1.0 - COS_CLAMP_TOL {
        return Err(Error::invalid("xi must be at least 1"));
    }
    let half = delta_k * xi / (1.0 - delta_max);
    Ok(BoundInterval {
        lower: -half,
        upper: half,
        kind: BoundKind::RcpOrthogonal,
        constants: BoundConstants {
            delta_k: Some(delta_k),
            delta_max: Some(delta_max),
            xi: Some(xi),
            ..Default::default()
        },
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichCheck {
    pub holds: bool,
    /// `lambda_min * <x_u, x_v>`
    pub lhs: f64,
    /// `<Phi x_u, Phi x_v>`
    pub mid: f64,
    /// `lambda_max * <x_u, x_v>`
    pub rhs: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

/// Tests `lambda_min <x_u,x_v> <= <Phi x_u, Phi x_v> <= lambda_max <x_u,x_v>`
/// with the extreme eigenvalues of the joint-support Gram matrix.
pub fn sandwich_check(
    phi: &MeasurementMatrix,
    x_u: &Array1<f64>,
    x_v: &Array1<f64>,
) -> Result<SandwichCheck> {
    if x_u.len() != phi.cols || x_v.len() != phi.cols {
        return Err(Error::invalid("signal length must equal matrix columns"));
    }
    let mut joint: Vec<usize> = (0..phi.cols)
        .filter(|&j| x_u[j] != 0.0 || x_v[j] != 0.0)
        .collect();
    if joint.is_empty() {
        return Err(Error::invalid("joint support is empty"));
    }
    joint.sort_unstable();
    let sub = restrict(phi, &joint)?;
    let spec = eig_sym(&gram(&sub))?;
    let inner_x = x_u.dot(x_v);
    let mid = phi.entries.dot(x_u).dot(&phi.entries.dot(x_v));
    let lhs = spec.lambda_min() * inner_x;
    let rhs = spec.lambda_max() * inner_x;
    let scale = mid.abs().max(lhs.abs()).max(rhs.abs()).max(1.0);
    let tol = 1e-12 * scale;
    Ok(SandwichCheck {
        holds: lhs - tol <= mid && mid <= rhs + tol,
        lhs,
        mid,
        rhs,
        lambda_min: spec.lambda_min(),
        lambda_max: spec.lambda_max(),
    })
}

/// Smallest empirical distance-distortion constant of `phi` on a point set:
/// `max over pairs |  ||Phi(u - v)||^2 / ||u - v||^2 - 1 |`.
pub fn jl_epsilon(phi: &MeasurementMatrix, points: &[Array1<f64>]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least two points"));
    }
    let mut eps = 0.0f64;
    for (a, u) in points.iter().enumerate() {
        if u.len() != phi.cols {
            return Err(Error::invalid("point length must equal matrix columns"));
        }
        for v in points.iter().skip(a + 1) {
            let d = u - v;
            let dn = d.dot(&d);
            if dn == 0.0 {
                return Err(Error::invalid("duplicate points in JL set"));
            }
            let md = phi.entries.dot(&d);
            eps = eps.max((md.dot(&md) / dn - 1.0).abs());
        }
    }
    Ok(eps)
}

/// Distortion of the single pair `(u, v)`.
pub fn jl_epsilon_pair(
    phi: &MeasurementMatrix,
    u: &Array1<f64>,
    v: &Array1<f64>,
) -> Result<f64> {
    jl_epsilon(phi, &[u.clone(), v.clone()])
}
