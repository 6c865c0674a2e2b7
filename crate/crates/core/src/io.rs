//! File formats: PGM images (P2 ascii and P5 binary, 8-bit) and the CSV
//! emitters for curves, pair tables, and pass-rate grids.
//!
//! Floats are printed with 17 significant digits (`{:.16e}`) so a re-read
//! recovers the exact bit pattern; missing values are empty fields.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::pushbroom::{CurveSeries, RcpTableRow};
use crate::wishstat::PassRateCell;

/// Round-trip-exact float formatting for CSV fields.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

/// Reads an 8-bit PGM image (P2 or P5) into a matrix of grey values.
pub fn read_pgm(path: &Path) -> Result<Array2<f64>> {
    let raw = fs::read(path)?;
    // header tokens are ascii even in the binary variant
    let mut pos = 0usize;
    let mut tokens: Vec<String> = Vec::new();
    while tokens.len() < 4 && pos < raw.len() {
        while pos < raw.len() && raw[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < raw.len() && raw[pos] == b'#' {
            while pos < raw.len() && raw[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < raw.len() && !raw[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos > start {
            tokens.push(String::from_utf8_lossy(&raw[start..pos]).into_owned());
        }
    }
    if tokens.len() < 4 {
        return Err(Error::Parse("truncated PGM header".into()));
    }
    let magic = tokens[0].as_str();
    let width: usize = tokens[1].parse().map_err(|_| Error::Parse("bad PGM width".into()))?;
    let height: usize = tokens[2].parse().map_err(|_| Error::Parse("bad PGM height".into()))?;
    let maxval: usize = tokens[3].parse().map_err(|_| Error::Parse("bad PGM maxval".into()))?;
    if width == 0 || height == 0 {
        return Err(Error::Parse("empty PGM image".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse("only 8-bit PGM supported".into()));
    }
    let mut img = Array2::zeros((height, width));
    match magic {
        "P2" => {
            let rest = String::from_utf8_lossy(&raw[pos..]);
            let mut vals = rest.split_ascii_whitespace();
            for r in 0..height {
                for c in 0..width {
                    let tok = vals
                        .next()
                        .ok_or_else(|| Error::Parse("truncated P2 pixel data".into()))?;
                    let v: f64 = tok.parse().map_err(|_| Error::Parse("bad P2 pixel".into()))?;
                    img[(r, c)] = v;
                }
            }
        }
        "P5" => {
            pos += 1; // single whitespace after maxval
            if raw.len() < pos + width * height {
                return Err(Error::Parse("truncated P5 pixel data".into()));
            }
            for r in 0..height {
                for c in 0..width {
                    img[(r, c)] = raw[pos + r * width + c] as f64;
                }
            }
        }
        other => return Err(Error::Parse(format!("unsupported PGM magic {other}"))),
    }
    Ok(img)
}

/// Writes a matrix as binary (P5) 8-bit PGM, clamping values to [0, 255].
pub fn write_pgm(path: &Path, img: &Array2<f64>) -> Result<()> {
    let (h, w) = img.dim();
    if h == 0 || w == 0 {
        return Err(Error::invalid("cannot write an empty image"));
    }
    let mut out = Vec::with_capacity(h * w + 32);
    write!(out, "P5\n{w} {h}\n255\n")?;
    for r in 0..h {
        for c in 0..w {
            out.push(img[(r, c)].round().clamp(0.0, 255.0) as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes curve series as CSV. Column order is fixed: `index` first, then
/// the series in their given order. Mu curves are one entry shorter than
/// energy curves; their final field is left empty.
pub fn write_curves_csv(path: &Path, series: &[CurveSeries]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::invalid("no curves to write"));
    }
    let rows = series.iter().map(|s| s.values.len()).max().unwrap();
    let mut out = String::from("index");
    for s in series {
        out.push(',');
        out.push_str(s.label.as_str());
    }
    out.push('\n');
    for i in 0..rows {
        out.push_str(&i.to_string());
        for s in series {
            out.push(',');
            out.push_str(&fmt_opt(s.values.get(i).copied().flatten()));
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes the adjacent-pair geometry table as CSV.
pub fn write_rcp_table_csv(path: &Path, rows: &[RcpTableRow]) -> Result<()> {
    let mut out = String::from(
        "pair_index,xi,cos_alpha,cos_beta,delta_u,delta_v,delta_max,epsilon,\
         support_is_full,jl_lower,jl_upper,env_lower,env_upper,in_envelope\n",
    );
    for r in rows {
        let (jl_lo, jl_up) = match &r.jl_bounds {
            Some(b) => (Some(b.lower), Some(b.upper)),
            None => (None, None),
        };
        let (en_lo, en_up) = match &r.jl_envelope {
            Some(b) => (Some(b.lower), Some(b.upper)),
            None => (None, None),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.pair_index,
            fmt_float(r.xi),
            fmt_float(r.cos_alpha),
            fmt_float(r.cos_beta),
            fmt_float(r.delta_u),
            fmt_float(r.delta_v),
            fmt_float(r.delta_max),
            fmt_float(r.epsilon),
            r.support_is_full,
            fmt_opt(jl_lo),
            fmt_opt(jl_up),
            fmt_opt(en_lo),
            fmt_opt(en_up),
            r.cos_beta_in_envelope.map(|b| b.to_string()).unwrap_or_default(),
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes a KS pass-rate grid as CSV with header `M,supp_size,pass_rate`.
/// The (single) N of the scan is recorded in the run manifest.
pub fn write_pass_rate_csv(path: &Path, cells: &[PassRateCell]) -> Result<()> {
    let mut out = String::from("M,supp_size,pass_rate\n");
    for c in cells {
        out.push_str(&format!("{},{},{}\n", c.m, c.supp_size, fmt_float(c.pass_rate)));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Headerless CSV of matrix rows, round-trip-exact floats.
pub fn write_matrix_csv(path: &Path, m: &Array2<f64>) -> Result<()> {
    let mut out = String::new();
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| fmt_float(m[(r, c)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

/// Reads a headerless CSV of rows into a matrix.
pub fn read_matrix_csv(path: &Path) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let row = row.map_err(|_| Error::Parse(format!("bad float on line {}", i + 1)))?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(Error::Parse(format!("ragged row on line {}", i + 1)));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty CSV matrix".into()));
    }
    let (h, w) = (rows.len(), rows[0].len());
    Array2::from_shape_vec((h, w), rows.into_iter().flatten().collect())
        .map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pushbroom::CurveLabel;
    use ndarray::array;
    use tempfile::tempdir;

    #[test]
    fn pgm_binary_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("img.pgm");
        let img = array![[0.0, 128.0, 255.0], [1.0, 2.0, 3.0]];
        write_pgm(&p, &img).unwrap();
        let back = read_pgm(&p).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn pgm_ascii_with_comments() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        std::fs::write(&p, "P2\n# a comment\n3 2\n255\n0 10 20\n30 40 50\n").unwrap();
        let img = read_pgm(&p).unwrap();
        assert_eq!(img, array![[0.0, 10.0, 20.0], [30.0, 40.0, 50.0]]);
    }

    #[test]
    fn pgm_rejects_garbage() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.pgm");
        std::fs::write(&p, "P7\n2 2\n255\n....").unwrap();
        assert!(read_pgm(&p).is_err());
        std::fs::write(&p, "P2\n2 2\n255\n1 2 3").unwrap();
        assert!(read_pgm(&p).is_err());
        std::fs::write(&p, "P5\n2 2\n65535\n").unwrap();
        assert!(read_pgm(&p).is_err());
    }

    #[test]
    fn float_formatting_round_trips() {
        for &v in &[0.1, -3.5e-17, 1.0 / 3.0, 2.5e300, f64::MIN_POSITIVE] {
            let s = fmt_float(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("m.csv");
        let m = array![[0.1, -2.0 / 3.0], [1e-300, 42.0]];
        write_matrix_csv(&p, &m).unwrap();
        assert_eq!(read_matrix_csv(&p).unwrap(), m);
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_matrix_csv(&p).is_err());
    }

    #[test]
    fn curves_csv_layout() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("curves.csv");
        let series = vec![
            CurveSeries {
                label: CurveLabel::EnergyX,
                values: vec![Some(1.0), Some(2.0), Some(3.0)],
            },
            CurveSeries {
                label: CurveLabel::MuX,
                values: vec![Some(0.5), None],
            },
        ];
        write_curves_csv(&p, &series).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index,energy_X,mu_X");
        assert_eq!(lines.len(), 4);
        assert!(lines[2].ends_with(','), "missing value must be empty: {}", lines[2]);
        assert!(!text.contains("NaN"));
    }
}
