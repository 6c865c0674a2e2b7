//! `rcp` — compressive sensing isometry and angle-preservation diagnostics.
//!
//! Exit codes: 0 success, 1 invalid arguments, 2 numeric failure,
//! 3 selftest failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ndarray::{Array1, Array2};
use serde::Serialize;

use rcp_core::ensembles::{
    dct_basis, gen_bernoulli01_matrix, gen_gaussian_matrix, gen_sparse_signal_with,
    gen_synthetic_image, gen_synthetic_image_masked, identity_basis, MeasurementMatrix,
};
use rcp_core::error::Error;
use rcp_core::io::{
    fmt_float, read_matrix_csv, read_pgm, write_curves_csv, write_matrix_csv, write_pass_rate_csv,
    write_rcp_table_csv,
};
use rcp_core::manifest::RunManifest;
use rcp_core::orthant::{minus_term_diag, orthant_ratio, rotate_pair};
use rcp_core::pushbroom::{
    build_rcp_table, curve_correlation, ensemble_experiment, run_pushbroom, CurveLabel,
};
use rcp_core::rcpcalc::{
    jl_epsilon_pair, pair_geometry, rcp_ip_bounds, rcp_jl_bounds, rcp_jl_envelope,
    rcp_orthogonal_envelope, sandwich_check,
};
use rcp_core::ripcalc::{ric_exact, ric_monte_carlo, ric_support, RicResult};
use rcp_core::rng::rng_from_seed;
use rcp_core::spectra::{eig_sym, gram, restrict};
use rcp_core::wishstat::{
    chi_sq_moment_check, jb_test, ks_test, pass_rate_scan, run_campaign, transform_eigenvalue,
    DEFAULT_SIGNIFICANCE,
};

#[derive(Parser)]
#[command(name = "rcp", version, about = "RIP/RCP diagnostics for measurement matrices")]
struct Cli {
    /// Cap the rayon worker count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Output directory (default: $RCP_OUT_DIR, else the current directory).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatrixArg {
    Gaussian,
    Bernoulli01,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    None,
    Dct,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GenWhat {
    Matrix,
    Signal,
    Image,
    Basis,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RipMode {
    Exact,
    Mc,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a matrix, sparse signal, synthetic image, or basis as CSV.
    Gen(GenArgs),
    /// Restricted isometry constant of a generated matrix.
    Rip(RipArgs),
    /// Angle-preservation table over random sparse pairs.
    Rcp(RcpArgs),
    /// Eigenbasis rotation and sign diagnostics over random instances.
    Orthant(OrthantArgs),
    /// Wishart eigenvalue campaign or KS pass-rate scan.
    Wishart(WishartArgs),
    /// Column-measurement pipeline on an image or signal ensemble.
    Pushbroom(PushbroomArgs),
    /// Run the condensed invariant suite.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    what: GenWhat,
    #[arg(long, value_enum, default_value = "gaussian")]
    matrix: MatrixArg,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 8)]
    k: usize,
    #[arg(long, default_value_t = 64)]
    l: usize,
    #[arg(long, default_value_t = 0.95)]
    smoothness: f64,
    /// Zero out a horizontal band of the synthetic image, mimicking the
    /// flat zones of difference images.
    #[arg(long)]
    zero_band: bool,
    /// Column-normalize generated 0-1 matrices.
    #[arg(long)]
    normalize: bool,
    #[arg(long, value_enum, default_value = "dct")]
    basis: BasisKindArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisKindArg {
    Dct,
    Identity,
}

#[derive(Args)]
struct RipArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    matrix: MatrixArg,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, default_value_t = 32)]
    n: usize,
    #[arg(long)]
    k: usize,
    #[arg(long, value_enum, default_value = "exact")]
    mode: RipMode,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RcpArgs {
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    pairs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct OrthantArgs {
    #[arg(long, default_value_t = 32)]
    m: usize,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, default_value_t = 100)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct WishartArgs {
    #[arg(long, default_value_t = 128)]
    m: usize,
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    supp: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run a pass-rate grid scan instead of a single campaign.
    #[arg(long)]
    scan: bool,
    /// Comma-separated M grid for --scan.
    #[arg(long, value_delimiter = ',', default_value = "32,64,128")]
    m_grid: Vec<usize>,
    /// Comma-separated support-size grid for --scan.
    #[arg(long, value_delimiter = ',', default_value = "1,4,8,16")]
    supp_grid: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    campaigns: usize,
}

#[derive(Args)]
struct PushbroomArgs {
    /// Path to a PGM or headerless CSV image, or the word "synthetic",
    /// or "ensemble" for the sparse-signal comparison run.
    #[arg(long, default_value = "synthetic")]
    image: String,
    #[arg(long, value_enum, default_value = "gaussian")]
    matrix: MatrixArg,
    #[arg(long, value_enum, default_value = "none")]
    basis: BasisArg,
    #[arg(long, default_value_t = 64)]
    m: usize,
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 64)]
    l: usize,
    #[arg(long, default_value_t = 0.95)]
    smoothness: f64,
    #[arg(long)]
    zero_band: bool,
    #[arg(long, default_value_t = 23)]
    count: usize,
    #[arg(long, default_value_t = 4)]
    sparsity_min: usize,
    #[arg(long, default_value_t = 119)]
    sparsity_max: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // clap defaults to exit code 2 for usage errors; the contract
            // here is 1 for invalid arguments
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Some(t) = cli.threads {
        if t == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(1);
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let out_dir = cli
        .out_dir
        .or_else(|| std::env::var_os("RCP_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        eprintln!("error: cannot create output directory: {e}");
        return ExitCode::from(1);
    }

    let result = match &cli.command {
        Command::Gen(a) => cmd_gen(a, &out_dir),
        Command::Rip(a) => cmd_rip(a, &out_dir),
        Command::Rcp(a) => cmd_rcp(a, &out_dir),
        Command::Orthant(a) => cmd_orthant(a, &out_dir),
        Command::Wishart(a) => cmd_wishart(a, &out_dir),
        Command::Pushbroom(a) => cmd_pushbroom(a, &out_dir),
        Command::Selftest(a) => return cmd_selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Parse(_) | Error::Io(_) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

type CmdResult = Result<(), Error>;

fn gen_matrix(kind: MatrixArg, m: usize, n: usize, seed: u64, normalize: bool) -> Result<MeasurementMatrix, Error> {
    match kind {
        MatrixArg::Gaussian => gen_gaussian_matrix(m, n, seed),
        MatrixArg::Bernoulli01 => gen_bernoulli01_matrix(m, n, seed, normalize),
    }
}

fn finish(manifest: &mut RunManifest, out_dir: &Path, written: &[PathBuf]) -> CmdResult {
    for p in written {
        manifest.record(p)?;
    }
    let mpath = manifest.write(out_dir)?;
    println!("wrote {}", mpath.display());
    Ok(())
}

fn args_of(which: &str, rest: Vec<(String, String)>) -> Vec<String> {
    let mut v = vec![which.to_string()];
    for (k, val) in rest {
        v.push(format!("--{k}={val}"));
    }
    v
}

fn cmd_gen(a: &GenArgs, out_dir: &Path) -> CmdResult {
    let mut written = Vec::new();
    match a.what {
        GenWhat::Matrix => {
            let phi = gen_matrix(a.matrix, a.m, a.n, a.seed, a.normalize)?;
            let p = out_dir.join("matrix.csv");
            write_matrix_csv(&p, &phi.entries)?;
            written.push(p);
        }
        GenWhat::Signal => {
            let mut rng = rng_from_seed(a.seed);
            let sig = gen_sparse_signal_with(&mut rng, a.n, a.k)?;
            let p = out_dir.join("signal.csv");
            let col = sig.values.clone().insert_axis(ndarray::Axis(1));
            write_matrix_csv(&p, &col)?;
            written.push(p);
        }
        GenWhat::Image => {
            let img = if a.zero_band {
                gen_synthetic_image_masked(a.n, a.l, a.smoothness, true, a.seed)?
            } else {
                gen_synthetic_image(a.n, a.l, a.smoothness, a.seed)?
            };
            let p = out_dir.join("image.csv");
            write_matrix_csv(&p, &img)?;
            written.push(p);
        }
        GenWhat::Basis => {
            let basis = match a.basis {
                BasisKindArg::Dct => dct_basis(a.n)?,
                BasisKindArg::Identity => identity_basis(a.n)?,
            };
            let p = out_dir.join("basis.csv");
            write_matrix_csv(&p, &basis.entries)?;
            written.push(p);
        }
    }
    let mut manifest = RunManifest::new(
        "gen",
        &args_of(
            "gen",
            vec![
                ("m".into(), a.m.to_string()),
                ("n".into(), a.n.to_string()),
                ("k".into(), a.k.to_string()),
                ("l".into(), a.l.to_string()),
                ("seed".into(), a.seed.to_string()),
            ],
        ),
        a.seed,
    );
    finish(&mut manifest, out_dir, &written)
}

fn cmd_rip(a: &RipArgs, out_dir: &Path) -> CmdResult {
    let phi = gen_matrix(a.matrix, a.m, a.n, a.seed, true)?;
    let result: RicResult = match a.mode {
        RipMode::Exact => ric_exact(&phi, a.k)?,
        RipMode::Mc => ric_monte_carlo(&phi, a.k, a.trials, a.seed.wrapping_add(1))?,
    };
    let p = out_dir.join("rip.json");
    std::fs::write(&p, serde_json::to_string_pretty(&result)? + "\n")?;
    let mut manifest = RunManifest::new(
        "rip",
        &args_of(
            "rip",
            vec![
                ("m".into(), a.m.to_string()),
                ("n".into(), a.n.to_string()),
                ("k".into(), a.k.to_string()),
                ("trials".into(), a.trials.to_string()),
                ("seed".into(), a.seed.to_string()),
            ],
        ),
        a.seed,
    );
    finish(&mut manifest, out_dir, &[p])
}

fn cmd_rcp(a: &RcpArgs, out_dir: &Path) -> CmdResult {
    if a.pairs == 0 {
        return Err(Error::invalid("--pairs must be positive"));
    }
    let phi = gen_gaussian_matrix(a.m, a.n, a.seed)?;
    let mut rng = rng_from_seed(a.seed.wrapping_add(1));
    let mut out = String::from(
        "index,xi,cos_alpha,cos_beta,jl_lower,jl_upper,ip_lower,ip_upper,sandwich_holds\n",
    );
    for i in 0..a.pairs {
        let xu = gen_sparse_signal_with(&mut rng, a.n, a.k)?;
        let xv = gen_sparse_signal_with(&mut rng, a.n, a.k)?;
        let g = pair_geometry(&phi, &xu.values, &xv.values)?;
        let eps = jl_epsilon_pair(&phi, &xu.values, &xv.values)?;
        let jl = if g.delta_max < 1.0 && eps < 1.0 {
            Some(rcp_jl_bounds(g.xi, g.cos_alpha, g.delta_max, eps)?)
        } else {
            None
        };
        let joint: Vec<usize> = (0..a.n)
            .filter(|&j| xu.values[j] != 0.0 || xv.values[j] != 0.0)
            .collect();
        let (delta_joint, _) = ric_support(&phi, &joint)?;
        let ip = if delta_joint < 1.0 {
            Some(rcp_ip_bounds(g.cos_alpha, delta_joint)?)
        } else {
            None
        };
        let sw = sandwich_check(&phi, &xu.values, &xv.values)?;
        let opt = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            i,
            fmt_float(g.xi),
            fmt_float(g.cos_alpha),
            fmt_float(g.cos_beta),
            opt(jl.as_ref().map(|b| b.lower)),
            opt(jl.as_ref().map(|b| b.upper)),
            opt(ip.as_ref().map(|b| b.lower)),
            opt(ip.as_ref().map(|b| b.upper)),
            sw.holds,
        ));
    }
    let p = out_dir.join("rcp_pairs.csv");
    std::fs::write(&p, out)?;
    let mut manifest = RunManifest::new(
        "rcp",
        &args_of(
            "rcp",
            vec![
                ("m".into(), a.m.to_string()),
                ("n".into(), a.n.to_string()),
                ("k".into(), a.k.to_string()),
                ("pairs".into(), a.pairs.to_string()),
                ("seed".into(), a.seed.to_string()),
            ],
        ),
        a.seed,
    );
    finish(&mut manifest, out_dir, &[p])
}

#[derive(Serialize)]
struct OrthantInstance {
    index: usize,
    k1: usize,
    k2: usize,
    ratio: Option<f64>,
    bound: Option<f64>,
    within: Option<bool>,
    sum_a: Option<f64>,
    sum_b: Option<f64>,
    neg_count_a: Option<usize>,
    neg_count_b: Option<usize>,
    condition_a: Option<bool>,
    condition_b: Option<bool>,
    conclusion_holds: Option<bool>,
    conclusion_holds_same_sign: Option<bool>,
}

fn cmd_orthant(a: &OrthantArgs, out_dir: &Path) -> CmdResult {
    if a.instances == 0 {
        return Err(Error::invalid("--instances must be positive"));
    }
    let mut rng = rng_from_seed(a.seed.wrapping_add(1));
    let mut reports = Vec::with_capacity(a.instances);
    for index in 0..a.instances {
        let phi = gen_gaussian_matrix(a.m, a.n, a.seed.wrapping_add(2 + index as u64))?;
        let xu = gen_sparse_signal_with(&mut rng, a.n, a.k)?;
        let xv = gen_sparse_signal_with(&mut rng, a.n, a.k)?;
        let joint: Vec<usize> = (0..a.n)
            .filter(|&j| xu.values[j] != 0.0 || xv.values[j] != 0.0)
            .collect();
        let spec = eig_sym(&gram(&restrict(&phi, &joint)?))?;
        let pair = rotate_pair(&spec, &xu.values, &xv.values, &joint)?;
        let cos_alpha = pair.cos_alpha()?;
        // theorem diagnostics only apply at positive angles
        let (ratio_part, minus_part) = if cos_alpha > 0.0 {
            let r = orthant_ratio(&pair)?;
            let mt = if pair.same_sign_idx.is_empty() {
                None
            } else {
                Some(minus_term_diag(&spec, &pair, cos_alpha)?)
            };
            (Some(r), mt)
        } else {
            (None, None)
        };
        reports.push(OrthantInstance {
            index,
            k1: pair.k1(),
            k2: pair.k2(),
            ratio: ratio_part.as_ref().map(|r| r.ratio),
            bound: ratio_part.as_ref().map(|r| r.bound),
            within: ratio_part.as_ref().map(|r| r.within),
            sum_a: minus_part.as_ref().map(|m| m.sum_a),
            sum_b: minus_part.as_ref().map(|m| m.sum_b),
            neg_count_a: minus_part.as_ref().map(|m| m.neg_count_a),
            neg_count_b: minus_part.as_ref().map(|m| m.neg_count_b),
            condition_a: minus_part.as_ref().map(|m| m.condition_a),
            condition_b: minus_part.as_ref().map(|m| m.condition_b),
            conclusion_holds: minus_part.as_ref().map(|m| m.conclusion_holds),
            conclusion_holds_same_sign: minus_part
                .as_ref()
                .map(|m| m.conclusion_holds_same_sign),
        });
    }
    let p = out_dir.join("orthant.json");
    std::fs::write(&p, serde_json::to_string_pretty(&reports)? + "\n")?;
    let mut manifest = RunManifest::new(
        "orthant",
        &args_of(
            "orthant",
            vec![
                ("m".into(), a.m.to_string()),
                ("n".into(), a.n.to_string()),
                ("k".into(), a.k.to_string()),
                ("instances".into(), a.instances.to_string()),
                ("seed".into(), a.seed.to_string()),
            ],
        ),
        a.seed,
    );
    finish(&mut manifest, out_dir, &[p])
}

#[derive(Serialize)]
struct WishartReport {
    m: usize,
    n: usize,
    supp_size: usize,
    trials: usize,
    seed: u64,
    sample_count: usize,
    ks: rcp_core::wishstat::TestOutcome,
    jb: rcp_core::wishstat::TestOutcome,
    moment_check: Option<rcp_core::wishstat::MomentCheck>,
    transformed_mean: f64,
    transformed_var: f64,
}

fn cmd_wishart(a: &WishartArgs, out_dir: &Path) -> CmdResult {
    if a.scan {
        let cells = pass_rate_scan(
            &[a.n],
            &a.m_grid,
            &a.supp_grid,
            a.campaigns,
            a.trials,
            a.seed,
        )?;
        let p = out_dir.join("pass_rates.csv");
        write_pass_rate_csv(&p, &cells)?;
        let mut manifest = RunManifest::new(
            "wishart",
            &args_of(
                "wishart",
                vec![
                    ("n".into(), a.n.to_string()),
                    ("campaigns".into(), a.campaigns.to_string()),
                    ("trials".into(), a.trials.to_string()),
                    ("seed".into(), a.seed.to_string()),
                    ("scan".into(), "true".into()),
                ],
            ),
            a.seed,
        );
        return finish(&mut manifest, out_dir, &[p]);
    }
    let camp = run_campaign(a.m, a.n, a.supp, a.trials, a.seed)?;
    let mut sorted = camp.transformed.clone();
    sorted.sort_by(|x, y| x.total_cmp(y));
    let ks = ks_test(&sorted, DEFAULT_SIGNIFICANCE)?;
    let jb = jb_test(&camp.transformed, DEFAULT_SIGNIFICANCE)?;
    // with supp_size 1, the samples are squared column norms G_ii and the
    // chi-squared moment check applies to M * G_ii
    let moment_check = if a.supp == 1 && camp.samples.len() >= 1000 {
        let scaled: Vec<f64> = camp.samples.iter().map(|&s| s * a.m as f64).collect();
        Some(chi_sq_moment_check(a.m, &scaled)?)
    } else {
        None
    };
    let nf = camp.transformed.len() as f64;
    let mean = camp.transformed.iter().sum::<f64>() / nf;
    let var = camp.transformed.iter().map(|&t| (t - mean) * (t - mean)).sum::<f64>() / (nf - 1.0);
    let report = WishartReport {
        m: a.m,
        n: a.n,
        supp_size: a.supp,
        trials: a.trials,
        seed: a.seed,
        sample_count: camp.samples.len(),
        ks,
        jb,
        moment_check,
        transformed_mean: mean,
        transformed_var: var,
    };
    let p = out_dir.join("wishart.json");
    std::fs::write(&p, serde_json::to_string_pretty(&report)? + "\n")?;
    let mut manifest = RunManifest::new(
        "wishart",
        &args_of(
            "wishart",
            vec![
                ("m".into(), a.m.to_string()),
                ("n".into(), a.n.to_string()),
                ("supp".into(), a.supp.to_string()),
                ("trials".into(), a.trials.to_string()),
                ("seed".into(), a.seed.to_string()),
            ],
        ),
        a.seed,
    );
    finish(&mut manifest, out_dir, &[p])
}

#[derive(Serialize)]
struct PushbroomProvenance {
    image: String,
    matrix: String,
    basis: String,
    m: usize,
    n: usize,
    l: usize,
    smoothness: Option<f64>,
    zero_band: bool,
    seed: u64,
    mu_xy_correlation: Option<f64>,
}

fn cmd_pushbroom(a: &PushbroomArgs, out_dir: &Path) -> CmdResult {
    let run = if a.image == "ensemble" {
        ensemble_experiment(a.count, a.n, a.m, (a.sparsity_min, a.sparsity_max), a.seed)?
    } else {
        let x: Array2<f64> = match a.image.as_str() {
            "synthetic" => {
                if a.zero_band {
                    gen_synthetic_image_masked(a.n, a.l, a.smoothness, true, a.seed)?
                } else {
                    gen_synthetic_image(a.n, a.l, a.smoothness, a.seed)?
                }
            }
            path => {
                let p = Path::new(path);
                if p.extension().map(|e| e == "pgm").unwrap_or(false) {
                    read_pgm(p)?
                } else {
                    read_matrix_csv(p)?
                }
            }
        };
        let phi = gen_matrix(a.matrix, a.m, x.nrows(), a.seed.wrapping_add(1), true)?;
        let psi = match a.basis {
            BasisArg::None => None,
            BasisArg::Dct => Some(dct_basis(x.nrows())?),
        };
        run_pushbroom(&phi, psi.as_ref(), &x)?
    };
    let mu = |label: CurveLabel| run.curves.iter().find(|c| c.label == label);
    let corr = match (mu(CurveLabel::MuX), mu(CurveLabel::MuY)) {
        (Some(x), Some(y)) => curve_correlation(x, y).ok(),
        _ => None,
    };
    let curves_path = out_dir.join("curves.csv");
    write_curves_csv(&curves_path, &run.curves)?;
    let table_path = out_dir.join("rcp_table.csv");
    write_rcp_table_csv(&table_path, &run.rcp_table)?;
    let prov = PushbroomProvenance {
        image: a.image.clone(),
        matrix: match a.matrix {
            MatrixArg::Gaussian => "gaussian".into(),
            MatrixArg::Bernoulli01 => "bernoulli01".into(),
        },
        basis: match a.basis {
            BasisArg::None => "none".into(),
            BasisArg::Dct => "dct".into(),
        },
        m: run.phi.rows,
        n: run.x.nrows(),
        l: run.x.ncols(),
        smoothness: (a.image == "synthetic").then_some(a.smoothness),
        zero_band: a.zero_band,
        seed: a.seed,
        mu_xy_correlation: corr,
    };
    let prov_path = out_dir.join("provenance.json");
    std::fs::write(&prov_path, serde_json::to_string_pretty(&prov)? + "\n")?;
    let mut manifest = RunManifest::new(
        "pushbroom",
        &args_of(
            "pushbroom",
            vec![
                ("image".into(), a.image.clone()),
                ("m".into(), a.m.to_string()),
                ("n".into(), a.n.to_string()),
                ("l".into(), a.l.to_string()),
                ("seed".into(), a.seed.to_string()),
            ],
        ),
        a.seed,
    );
    finish(&mut manifest, out_dir, &[curves_path, table_path, prov_path])
}

struct Check {
    name: &'static str,
    checked: usize,
    failed: usize,
}

fn cmd_selftest(a: &SelftestArgs) -> ExitCode {
    let seed = a.seed;
    let mut checks: Vec<Check> = Vec::new();
    let mut run = |name: &'static str, f: &mut dyn FnMut() -> Result<(usize, usize), Error>| {
        match f() {
            Ok((checked, failed)) => checks.push(Check { name, checked, failed }),
            Err(e) => {
                eprintln!("{name}: error: {e}");
                checks.push(Check { name, checked: 0, failed: 1 });
            }
        }
    };

    run("jl_envelope_containment", &mut || {
        let mut rng = rng_from_seed(seed.wrapping_add(1));
        let mut checked = 0;
        let mut failed = 0;
        for t in 0..400u64 {
            let phi = gen_gaussian_matrix(32, 64, seed.wrapping_add(100 + t))?;
            let xu = gen_sparse_signal_with(&mut rng, 64, 4)?;
            let xv = gen_sparse_signal_with(&mut rng, 64, 4)?;
            let g = pair_geometry(&phi, &xu.values, &xv.values)?;
            let eps = jl_epsilon_pair(&phi, &xu.values, &xv.values)?;
            if g.delta_max >= 1.0 || eps >= 1.0 {
                continue;
            }
            let b = rcp_jl_envelope(g.xi, g.cos_alpha, g.delta_max, eps)?;
            checked += 1;
            if !(b.lower - 1e-9 <= g.cos_beta && g.cos_beta <= b.upper + 1e-9) {
                failed += 1;
            }
        }
        Ok((checked, failed))
    });

    run("ip_interval_under_sandwich", &mut || {
        let mut rng = rng_from_seed(seed.wrapping_add(2));
        let mut checked = 0;
        let mut failed = 0;
        for t in 0..400u64 {
            let phi = gen_gaussian_matrix(32, 64, seed.wrapping_add(500 + t))?;
            let xu = gen_sparse_signal_with(&mut rng, 64, 4)?;
            let xv = gen_sparse_signal_with(&mut rng, 64, 4)?;
            let g = pair_geometry(&phi, &xu.values, &xv.values)?;
            if g.cos_alpha <= 0.0 {
                continue;
            }
            let sw = sandwich_check(&phi, &xu.values, &xv.values)?;
            if !sw.holds {
                continue;
            }
            // spectral inner-product interval from the joint-support spectrum
            let lo = sw.lambda_min / ((1.0 + g.delta_u) * (1.0 + g.delta_v)).sqrt() * g.cos_alpha;
            let hi = sw.lambda_max / ((1.0 - g.delta_u) * (1.0 - g.delta_v)).sqrt() * g.cos_alpha;
            if g.delta_max >= 1.0 {
                continue;
            }
            checked += 1;
            if !(lo.min(hi) - 1e-9 <= g.cos_beta && g.cos_beta <= lo.max(hi) + 1e-9) {
                failed += 1;
            }
        }
        Ok((checked, failed))
    });

    run("orthogonal_envelope_containment", &mut || {
        let mut rng = rng_from_seed(seed.wrapping_add(3));
        let mut checked = 0;
        let mut failed = 0;
        for t in 0..300u64 {
            let phi = gen_gaussian_matrix(32, 64, seed.wrapping_add(900 + t))?;
            let xu = gen_sparse_signal_with(&mut rng, 32, 3)?;
            let xv = gen_sparse_signal_with(&mut rng, 32, 3)?;
            let mut u = Array1::zeros(64);
            let mut v = Array1::zeros(64);
            for &j in &xu.support {
                u[j] = xu.values[j];
            }
            for &j in &xv.support {
                v[j + 32] = xv.values[j];
            }
            let g = pair_geometry(&phi, &u, &v)?;
            let joint: Vec<usize> = (0..64).filter(|&j| u[j] != 0.0 || v[j] != 0.0).collect();
            let (dk, _) = ric_support(&phi, &joint)?;
            if dk >= 1.0 || g.delta_max >= 1.0 {
                continue;
            }
            let b = rcp_orthogonal_envelope(dk, g.delta_max.min(dk), g.xi)?;
            checked += 1;
            if !(b.lower - 1e-9 <= g.cos_beta && g.cos_beta <= b.upper + 1e-9) {
                failed += 1;
            }
        }
        Ok((checked, failed))
    });

    run("rotation_preservation", &mut || {
        let mut rng = rng_from_seed(seed.wrapping_add(4));
        let mut checked = 0;
        let mut failed = 0;
        for t in 0..200u64 {
            let phi = gen_gaussian_matrix(24, 48, seed.wrapping_add(1300 + t))?;
            let xu = gen_sparse_signal_with(&mut rng, 48, 4)?;
            let xv = gen_sparse_signal_with(&mut rng, 48, 4)?;
            let joint: Vec<usize> = (0..48)
                .filter(|&j| xu.values[j] != 0.0 || xv.values[j] != 0.0)
                .collect();
            let spec = eig_sym(&gram(&restrict(&phi, &joint)?))?;
            let pair = rotate_pair(&spec, &xu.values, &xv.values, &joint)?;
            checked += 1;
            let nu = xu.values.dot(&xu.values);
            let ip = xu.values.dot(&xv.values);
            if (pair.z_u.dot(&pair.z_u) - nu).abs() > 1e-10 * nu.max(1.0)
                || (pair.inner() - ip).abs() > 1e-10 * ip.abs().max(1.0)
            {
                failed += 1;
            }
            // Definition 2.1 identity
            let expanded = rcp_core::orthant::expand_inner(&spec, &pair)?;
            let direct = phi.entries.dot(&xu.values).dot(&phi.entries.dot(&xv.values));
            if (expanded - direct).abs() > 1e-9 * direct.abs().max(1.0) {
                failed += 1;
            }
        }
        Ok((checked, failed))
    });

    run("orthant_ratio_and_minus_term", &mut || {
        let mut rng = rng_from_seed(seed.wrapping_add(5));
        let mut checked = 0;
        let mut failed = 0;
        for t in 0..600u64 {
            let phi = gen_gaussian_matrix(24, 48, seed.wrapping_add(1700 + t))?;
            let xu = gen_sparse_signal_with(&mut rng, 48, 4)?;
            let xv = gen_sparse_signal_with(&mut rng, 48, 4)?;
            let joint: Vec<usize> = (0..48)
                .filter(|&j| xu.values[j] != 0.0 || xv.values[j] != 0.0)
                .collect();
            let spec = eig_sym(&gram(&restrict(&phi, &joint)?))?;
            let pair = rotate_pair(&spec, &xu.values, &xv.values, &joint)?;
            let cos_alpha = pair.cos_alpha()?;
            if cos_alpha <= 0.0 || pair.same_sign_idx.is_empty() {
                continue;
            }
            checked += 1;
            if !orthant_ratio(&pair)?.within {
                failed += 1;
            }
            // errors out if conditions hold but the sandwich fails
            let mt = minus_term_diag(&spec, &pair, cos_alpha)?;
            if mt.condition_a && mt.condition_b && !mt.conclusion_holds {
                failed += 1;
            }
        }
        Ok((checked, failed))
    });

    run("ric_exact_vs_monte_carlo", &mut || {
        let mut checked = 0;
        let mut failed = 0;
        for t in 0..5u64 {
            let phi = gen_gaussian_matrix(8, 16, seed.wrapping_add(2500 + t))?;
            let exact = ric_exact(&phi, 3)?;
            let mc = ric_monte_carlo(&phi, 3, 560, seed.wrapping_add(2600 + t))?;
            checked += 1;
            if (exact.delta - mc.delta).abs() > 1e-9 {
                failed += 1;
            }
        }
        Ok((checked, failed))
    });

    run("wishart_moments_and_ks", &mut || {
        let mut failed = 0;
        let camp = run_campaign(128, 64, 1, 4000, seed.wrapping_add(3000))?;
        let scaled: Vec<f64> = camp.samples.iter().map(|&s| s * 128.0).collect();
        let mc = chi_sq_moment_check(128, &scaled)?;
        if !mc.mean_ok || !mc.var_ok {
            failed += 1;
        }
        let camp = run_campaign(128, 256, 16, 10, seed.wrapping_add(3100))?;
        let mut t = camp.transformed;
        t.sort_by(|x, y| x.total_cmp(y));
        if !ks_test(&t, DEFAULT_SIGNIFICANCE)?.pass {
            failed += 1;
        }
        if (transform_eigenvalue(1.0, 128, 16)).abs() > 1e-12 {
            failed += 1;
        }
        Ok((2, failed))
    });

    run("pushbroom_dct_and_contrast", &mut || {
        let mut failed = 0;
        let x = gen_synthetic_image(64, 32, 0.95, seed.wrapping_add(4000))?;
        let phi = gen_gaussian_matrix(48, 64, seed.wrapping_add(4001))?;
        let psi = dct_basis(64)?;
        let run = run_pushbroom(&phi, Some(&psi), &x)?;
        let get = |l: CurveLabel| run.curves.iter().find(|c| c.label == l).unwrap();
        let mu_x = get(CurveLabel::MuX);
        let mu_a = get(CurveLabel::MuA);
        for (u, v) in mu_x.values.iter().zip(&mu_a.values) {
            if (u.unwrap() - v.unwrap()).abs() > 1e-10 {
                failed += 1;
            }
        }
        let smooth_corr = curve_correlation(mu_x, get(CurveLabel::MuY))?;
        let ens = ensemble_experiment(23, 64, 48, (4, 32), seed.wrapping_add(4100))?;
        let eget = |l: CurveLabel| ens.curves.iter().find(|c| c.label == l).unwrap();
        let ens_corr = curve_correlation(eget(CurveLabel::MuX), eget(CurveLabel::MuY))?;
        if ens_corr >= smooth_corr {
            failed += 1;
        }
        // table built against the reconstruction matrix is nonempty
        if build_rcp_table(&phi, &x)?.is_empty() {
            failed += 1;
        }
        Ok((mu_x.values.len() + 2, failed))
    });

    let mut any_failed = false;
    for c in &checks {
        let status = if c.failed == 0 { "pass" } else { "FAIL" };
        println!("{}: {} ({} checks, {} failures)", c.name, status, c.checked, c.failed);
        if c.failed > 0 || c.checked == 0 {
            any_failed = true;
        }
    }
    if any_failed {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    }
}
