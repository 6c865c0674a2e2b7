//! Push-broom column-measurement experiments: column-wise acquisition,
//! energy and adjacent-correlation curves, the transform-coefficient path,
//! and the sparse-ensemble comparison run.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::ensembles::{
    gen_gaussian_matrix, gen_sparse_signal_with, MeasurementMatrix, SparsityBasis,
};
use crate::error::{Error, Result};
use crate::rcpcalc::{
    jl_epsilon_pair, pair_geometry_cached, rcp_jl_bounds, rcp_jl_envelope, BoundInterval,
};
use crate::rng::rng_from_seed;

use rand::Rng;

const ORTHONORMAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CurveLabel {
    EnergyX,
    EnergyY,
    EnergyA,
    MuX,
    MuY,
    MuA,
}

impl CurveLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveLabel::EnergyX => "energy_X",
            CurveLabel::EnergyY => "energy_Y",
            CurveLabel::EnergyA => "energy_A",
            CurveLabel::MuX => "mu_X",
            CurveLabel::MuY => "mu_Y",
            CurveLabel::MuA => "mu_A",
        }
    }
}

/// One plotted series. Energy curves have one entry per column; adjacent
/// correlation (mu) curves have one entry per column pair. An entry is
/// `None` when a zero column makes the correlation undefined.
#[derive(Debug, Clone, Serialize)]
pub struct CurveSeries {
    pub label: CurveLabel,
    pub values: Vec<Option<f64>>,
}

/// Geometry and bound intervals for one adjacent column pair.
#[derive(Debug, Clone, Serialize)]
pub struct RcpTableRow {
    /// Index j of the pair (col_j, col_{j+1}).
    pub pair_index: usize,
    pub xi: f64,
    pub cos_alpha: f64,
    pub cos_beta: f64,
    pub delta_u: f64,
    pub delta_v: f64,
    pub delta_max: f64,
    pub epsilon: f64,
    /// Whether the per-column "support" was the full index set (dense
    /// columns) rather than a genuinely sparse one.
    pub support_is_full: bool,
    /// Published JL interval; absent when the measured constants leave
    /// its precondition (delta, epsilon < 1).
    pub jl_bounds: Option<BoundInterval>,
    pub jl_envelope: Option<BoundInterval>,
    pub cos_beta_in_envelope: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PushbroomRun {
    pub x: Array2<f64>,
    pub phi: MeasurementMatrix,
    pub psi: Option<SparsityBasis>,
    pub y: Array2<f64>,
    pub a: Option<Array2<f64>>,
    pub curves: Vec<CurveSeries>,
    pub rcp_table: Vec<RcpTableRow>,
}

/// Column-wise measurement `y_j = Phi x_j` for every column of X.
pub fn measure_columns(phi: &MeasurementMatrix, x: &Array2<f64>) -> Result<Array2<f64>> {
    if phi.cols != x.nrows() {
        return Err(Error::invalid("matrix columns must equal image rows"));
    }
    Ok(phi.entries.dot(x))
}

/// Energy and adjacent-correlation curves of a column matrix.
pub fn curves(
    matrix: &Array2<f64>,
    energy_label: CurveLabel,
    mu_label: CurveLabel,
) -> Result<(CurveSeries, CurveSeries)> {
    let l = matrix.ncols();
    if l < 2 {
        return Err(Error::invalid("need at least 2 columns for mu"));
    }
    let energies: Vec<f64> = (0..l)
        .map(|j| {
            let c = matrix.column(j);
            c.dot(&c)
        })
        .collect();
    let norms: Vec<f64> = energies.iter().map(|&e| e.sqrt()).collect();
    let energy = CurveSeries {
        label: energy_label,
        values: energies.iter().map(|&e| Some(e)).collect(),
    };
    let mut mu = Vec::with_capacity(l - 1);
    for j in 0..l - 1 {
        if norms[j] == 0.0 || norms[j + 1] == 0.0 {
            mu.push(None);
        } else {
            let ip = matrix.column(j).dot(&matrix.column(j + 1));
            mu.push(Some((ip / (norms[j] * norms[j + 1])).clamp(-1.0, 1.0)));
        }
    }
    Ok((energy, CurveSeries { label: mu_label, values: mu }))
}

fn check_orthonormal(psi: &SparsityBasis) -> Result<()> {
    let n = psi.entries.nrows();
    let gram = psi.entries.dot(&psi.entries.t());
    for i in 0..n {
        for j in 0..n {
            let want = if i == j { 1.0 } else { 0.0 };
            if (gram[(i, j)] - want).abs() > ORTHONORMAL_TOL {
                return Err(Error::invalid("sparsity basis is not orthonormal"));
            }
        }
    }
    Ok(())
}

/// Transform-coefficient path `A = Psi X` with its energy and mu curves.
pub fn dct_path(
    psi: &SparsityBasis,
    x: &Array2<f64>,
) -> Result<(Array2<f64>, CurveSeries, CurveSeries)> {
    if psi.entries.ncols() != x.nrows() {
        return Err(Error::invalid("basis size must equal image rows"));
    }
    check_orthonormal(psi)?;
    let a = psi.entries.dot(x);
    let (energy, mu) = curves(&a, CurveLabel::EnergyA, CurveLabel::MuA)?;
    Ok((a, energy, mu))
}

/// Pearson correlation between two mu curves, skipping entries missing in
/// either series.
pub fn curve_correlation(a: &CurveSeries, b: &CurveSeries) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::invalid("curves must have equal length"));
    }
    let pairs: Vec<(f64, f64)> = a
        .values
        .iter()
        .zip(&b.values)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < 3 {
        return Err(Error::DegenerateSample("too few defined points".into()));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (x, y) in &pairs {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::DegenerateSample("constant curve has no correlation".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Per-adjacent-pair geometry and bound intervals for the columns of
/// `cols` measured by `phi`. Pairs touching a zero column are skipped.
pub fn build_rcp_table(phi: &MeasurementMatrix, cols: &Array2<f64>) -> Result<Vec<RcpTableRow>> {
    let n = cols.nrows();
    let l = cols.ncols();
    let mut rows = Vec::new();
    // adjacent dense columns share the full support, so cache the deltas
    let mut delta_cache = std::collections::HashMap::new();
    for j in 0..l.saturating_sub(1) {
        let xu: Array1<f64> = cols.column(j).to_owned();
        let xv: Array1<f64> = cols.column(j + 1).to_owned();
        if xu.iter().all(|&v| v == 0.0) || xv.iter().all(|&v| v == 0.0) {
            continue;
        }
        let g = pair_geometry_cached(phi, &xu, &xv, &mut delta_cache)?;
        let epsilon = jl_epsilon_pair(phi, &xu, &xv)?;
        let constants_ok = g.delta_max < 1.0 && epsilon < 1.0;
        let jl_bounds = if constants_ok {
            Some(rcp_jl_bounds(g.xi, g.cos_alpha, g.delta_max, epsilon)?)
        } else {
            None
        };
        let jl_envelope = if constants_ok {
            Some(rcp_jl_envelope(g.xi, g.cos_alpha, g.delta_max, epsilon)?)
        } else {
            None
        };
        let cos_beta_in_envelope = jl_envelope
            .as_ref()
            .map(|b| b.lower - 1e-9 <= g.cos_beta && g.cos_beta <= b.upper + 1e-9);
        rows.push(RcpTableRow {
            pair_index: j,
            xi: g.xi,
            cos_alpha: g.cos_alpha,
            cos_beta: g.cos_beta,
            delta_u: g.delta_u,
            delta_v: g.delta_v,
            delta_max: g.delta_max,
            epsilon,
            support_is_full: g.support_u.len() == n && g.support_v.len() == n,
            jl_bounds,
            jl_envelope,
            cos_beta_in_envelope,
        });
    }
    Ok(rows)
}

/// Full pipeline: measure X column by column, build all curves, and when a
/// basis is given run the coefficient path and compute the pair table
/// against the reconstruction matrix `Phi Psi^T`.
pub fn run_pushbroom(
    phi: &MeasurementMatrix,
    psi: Option<&SparsityBasis>,
    x: &Array2<f64>,
) -> Result<PushbroomRun> {
    let y = measure_columns(phi, x)?;
    let (ex, mx) = curves(x, CurveLabel::EnergyX, CurveLabel::MuX)?;
    let (ey, my) = curves(&y, CurveLabel::EnergyY, CurveLabel::MuY)?;
    let mut series = vec![ex, mx, ey, my];
    let (a, rcp_table) = match psi {
        Some(basis) => {
            let (a, ea, ma) = dct_path(basis, x)?;
            series.push(ea);
            series.push(ma);
            // reconstruction matrix acts on coefficient columns; note
            // (Phi Psi^T) a_j = Phi x_j = y_j exactly
            let recon = MeasurementMatrix::from_entries(phi.entries.dot(&basis.entries.t()));
            let table = build_rcp_table(&recon, &a)?;
            (Some(a), table)
        }
        None => (None, build_rcp_table(phi, x)?),
    };
    Ok(PushbroomRun {
        x: x.clone(),
        phi: phi.clone(),
        psi: psi.cloned(),
        y,
        a,
        curves: series,
        rcp_table,
    })
}

/// Sparse-signal ensemble: `count` Gaussian sparse signals with sparsities
/// uniform in `sparsity_range`, measured by a fresh Gaussian matrix.
pub fn ensemble_experiment(
    count: usize,
    n: usize,
    m: usize,
    sparsity_range: (usize, usize),
    seed: u64,
) -> Result<PushbroomRun> {
    let (lo, hi) = sparsity_range;
    if count < 2 {
        return Err(Error::invalid("need at least 2 signals"));
    }
    if lo == 0 || hi < lo || hi > n {
        return Err(Error::invalid("sparsity range must satisfy 1 <= lo <= hi <= N"));
    }
    let phi = gen_gaussian_matrix(m, n, seed)?;
    let mut rng = rng_from_seed(seed.wrapping_add(1));
    let mut x = Array2::zeros((n, count));
    for j in 0..count {
        let k = lo + rng.random_range(0..=(hi - lo));
        let sig = gen_sparse_signal_with(&mut rng, n, k)?;
        x.column_mut(j).assign(&sig.values);
    }
    run_pushbroom(&phi, None, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{
        dct_basis, gen_synthetic_image, identity_basis, MeasurementMatrix,
    };
    use crate::ripcalc::ric_support;
    use ndarray::array;

    #[test]
    fn identity_measurement_is_copy() {
        let phi = MeasurementMatrix::from_entries(Array2::eye(4));
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]];
        let y = measure_columns(&phi, &x).unwrap();
        assert_eq!(y, x);

        let one = x.slice(ndarray::s![.., 0..1]).to_owned();
        assert_eq!(measure_columns(&phi, &one).unwrap().dim(), (4, 1));

        let bad = Array2::<f64>::zeros((3, 2));
        assert!(measure_columns(&phi, &bad).is_err());
    }

    #[test]
    fn column_energy_sandwich() {
        let phi = gen_gaussian_matrix(32, 64, 3).unwrap();
        let mut rng = rng_from_seed(5);
        for _ in 0..100 {
            let sig = gen_sparse_signal_with(&mut rng, 64, 5).unwrap();
            let (delta, _) = ric_support(&phi, &sig.support).unwrap();
            let y = phi.entries.dot(&sig.values);
            let ex = sig.values.dot(&sig.values);
            let ey = y.dot(&y);
            assert!((1.0 - delta) * ex - 1e-9 <= ey && ey <= (1.0 + delta) * ex + 1e-9);
        }
    }

    #[test]
    fn measure_columns_matches_whole_product() {
        let phi = gen_gaussian_matrix(16, 32, 9).unwrap();
        let x = gen_synthetic_image(32, 10, 0.5, 4).unwrap();
        let y = measure_columns(&phi, &x).unwrap();
        let direct = phi.entries.dot(&x);
        for (a, b) in y.iter().zip(direct.iter()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn curve_hand_cases() {
        // identical columns -> mu all 1
        let m = array![[1.0, 1.0, 1.0], [2.0, 2.0, 2.0]];
        let (e, mu) = curves(&m, CurveLabel::EnergyX, CurveLabel::MuX).unwrap();
        assert_eq!(e.values, vec![Some(5.0); 3]);
        for v in &mu.values {
            assert!((v.unwrap() - 1.0).abs() < 1e-12);
        }

        // alternating orthogonal columns -> mu all 0
        let m = array![[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let (_, mu) = curves(&m, CurveLabel::EnergyX, CurveLabel::MuX).unwrap();
        for v in &mu.values {
            assert_eq!(v.unwrap(), 0.0);
        }

        // zero column -> missing mu on both sides
        let m = array![[1.0, 0.0, 1.0], [1.0, 0.0, 1.0]];
        let (_, mu) = curves(&m, CurveLabel::EnergyX, CurveLabel::MuX).unwrap();
        assert_eq!(mu.values, vec![None, None]);
    }

    #[test]
    fn dct_path_preserves_curves() {
        let n = 32;
        let x = gen_synthetic_image(n, 12, 0.9, 11).unwrap();
        let psi = dct_basis(n).unwrap();
        let (a, ea, ma) = dct_path(&psi, &x).unwrap();
        assert_eq!(a.dim(), x.dim());
        let (ex, mx) = curves(&x, CurveLabel::EnergyX, CurveLabel::MuX).unwrap();
        for (u, v) in ea.values.iter().zip(&ex.values) {
            assert!((u.unwrap() - v.unwrap()).abs() <= 1e-10 * v.unwrap().max(1.0));
        }
        for (u, v) in ma.values.iter().zip(&mx.values) {
            assert!((u.unwrap() - v.unwrap()).abs() <= 1e-10);
        }
    }

    #[test]
    fn identity_basis_path_is_noop() {
        let x = gen_synthetic_image(16, 8, 0.5, 13).unwrap();
        let psi = identity_basis(16).unwrap();
        let (a, _, _) = dct_path(&psi, &x).unwrap();
        assert_eq!(a, x);
    }

    #[test]
    fn dct_path_rejects_non_orthonormal() {
        let mut psi = identity_basis(8).unwrap();
        psi.entries[(0, 0)] = 2.0;
        let x = Array2::zeros((8, 4));
        assert!(dct_path(&psi, &x).is_err());
    }

    #[test]
    fn reconstruction_matrix_keeps_full_gram_spectrum() {
        // Phi Psi^T with orthonormal Psi is a similarity transform of the
        // full-support Gram, so the delta values agree
        let n = 16;
        let phi = gen_gaussian_matrix(24, n, 17).unwrap();
        let psi = dct_basis(n).unwrap();
        let recon = MeasurementMatrix::from_entries(phi.entries.dot(&psi.entries.t()));
        let full: Vec<usize> = (0..n).collect();
        let (d1, _) = ric_support(&phi, &full).unwrap();
        let (d2, _) = ric_support(&recon, &full).unwrap();
        assert!((d1 - d2).abs() <= 1e-10);
    }

    #[test]
    fn smooth_image_run_tracks_and_is_contained() {
        let n = 64;
        let l = 32;
        let x = gen_synthetic_image(n, l, 0.95, 19).unwrap();
        let phi = gen_gaussian_matrix(48, n, 20).unwrap();
        let run = run_pushbroom(&phi, None, &x).unwrap();
        assert_eq!(run.curves.len(), 4);
        let mx = run.curves.iter().find(|c| c.label == CurveLabel::MuX).unwrap();
        let mean: f64 = mx.values.iter().map(|v| v.unwrap()).sum::<f64>() / (l - 1) as f64;
        assert!(mean >= 0.9, "mean mu_X {mean}");
        for row in &run.rcp_table {
            if let Some(flag) = row.cos_beta_in_envelope {
                assert!(flag, "pair {} escaped its envelope", row.pair_index);
            }
            assert!(row.support_is_full);
        }
    }

    #[test]
    fn ensemble_run_is_less_correlated_than_smooth() {
        let smooth_x = gen_synthetic_image(64, 32, 0.95, 23).unwrap();
        let phi = gen_gaussian_matrix(48, 64, 24).unwrap();
        let smooth = run_pushbroom(&phi, None, &smooth_x).unwrap();
        let ens = ensemble_experiment(23, 64, 48, (4, 32), 25).unwrap();
        let mu = |run: &PushbroomRun, l: CurveLabel| {
            run.curves.iter().find(|c| c.label == l).unwrap().clone()
        };
        let smooth_corr = curve_correlation(
            &mu(&smooth, CurveLabel::MuX),
            &mu(&smooth, CurveLabel::MuY),
        )
        .unwrap();
        let ens_corr =
            curve_correlation(&mu(&ens, CurveLabel::MuX), &mu(&ens, CurveLabel::MuY)).unwrap();
        assert!(
            ens_corr < smooth_corr,
            "ensemble corr {ens_corr} not below smooth corr {smooth_corr}"
        );
        // sparse-path pairs have measured constants; containment in the
        // envelope is a theorem
        for row in &ens.rcp_table {
            if let Some(flag) = row.cos_beta_in_envelope {
                assert!(flag);
            }
            assert!(!row.support_is_full);
        }
    }

    #[test]
    fn ensemble_rejects_bad_ranges() {
        assert!(ensemble_experiment(1, 64, 32, (4, 10), 1).is_err());
        assert!(ensemble_experiment(5, 64, 32, (0, 10), 1).is_err());
        assert!(ensemble_experiment(5, 64, 32, (10, 4), 1).is_err());
        assert!(ensemble_experiment(5, 64, 32, (4, 100), 1).is_err());
    }
}
