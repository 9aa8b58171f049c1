//! Matrix Market file I/O and on-disk problem bundles.
//!
//! Matrices travel in coordinate format (`%%MatrixMarket matrix coordinate
//! real general`), vectors in array format. A problem bundle is a directory
//! holding `M.mtx`, `q.mtx`, optional `xstar.mtx`/`ystar.mtx`, and a
//! `meta.toml` of plain `key = value` lines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::linalg::DenseMatrix;
use crate::problem::LcpProblem;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),
    #[error("invalid data: {0}")]
    Invalid(String),
}

fn parse_err(line: usize, msg: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MmLayout {
    General,
    Symmetric,
    SkewSymmetric,
}

/// Parsed `%%MatrixMarket` header. Only real/integer values are supported.
fn parse_header(first: &str) -> Result<(bool, MmLayout), IoError> {
    let fields: Vec<&str> = first.split_whitespace().collect();
    if fields.len() < 5 || !fields[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(parse_err(1, "expected %%MatrixMarket header"));
    }
    if !fields[1].eq_ignore_ascii_case("matrix") {
        return Err(IoError::UnsupportedFormat(format!(
            "object '{}' (only 'matrix')",
            fields[1]
        )));
    }
    let coordinate = match fields[2].to_ascii_lowercase().as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(IoError::UnsupportedFormat(format!("format '{other}'"))),
    };
    match fields[3].to_ascii_lowercase().as_str() {
        "real" | "integer" => {}
        other => {
            return Err(IoError::UnsupportedFormat(format!(
                "field '{other}' (only real/integer)"
            )))
        }
    }
    let layout = match fields[4].to_ascii_lowercase().as_str() {
        "general" => MmLayout::General,
        "symmetric" => MmLayout::Symmetric,
        "skew-symmetric" => MmLayout::SkewSymmetric,
        other => return Err(IoError::UnsupportedFormat(format!("symmetry '{other}'"))),
    };
    Ok((coordinate, layout))
}

/// Load a matrix from a Matrix Market file, materialized densely.
/// Coordinate entries not listed are zero; array files are read column-major
/// per the format definition.
pub fn load_matrix_market(path: impl AsRef<Path>) -> Result<DenseMatrix, IoError> {
    let text = fs::read_to_string(path)?;
    parse_matrix_market(&text)
}

pub fn parse_matrix_market(text: &str) -> Result<DenseMatrix, IoError> {
    let mut lines = text.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let (coordinate, layout) = parse_header(first)?;

    let mut size_line = None;
    for (idx, line) in &mut lines {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, t.to_string()));
        break;
    }
    let (size_no, size) = size_line.ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();

    if coordinate {
        if dims.len() != 3 {
            return Err(parse_err(size_no, "coordinate size line needs rows cols nnz"));
        }
        let rows: usize = dims[0]
            .parse()
            .map_err(|_| parse_err(size_no, "bad row count"))?;
        let cols: usize = dims[1]
            .parse()
            .map_err(|_| parse_err(size_no, "bad column count"))?;
        let nnz: usize = dims[2]
            .parse()
            .map_err(|_| parse_err(size_no, "bad entry count"))?;
        if rows == 0 || cols == 0 {
            return Err(parse_err(size_no, "matrix dimensions must be positive"));
        }
        let mut data = vec![0.0; rows * cols];
        let mut seen = 0usize;
        for (idx, line) in lines {
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let no = idx + 1;
            let f: Vec<&str> = t.split_whitespace().collect();
            if f.len() != 3 {
                return Err(parse_err(no, "coordinate entry needs 'i j value'"));
            }
            let i: usize = f[0].parse().map_err(|_| parse_err(no, "bad row index"))?;
            let j: usize = f[1].parse().map_err(|_| parse_err(no, "bad column index"))?;
            let v: f64 = f[2].parse().map_err(|_| parse_err(no, "bad value"))?;
            if i == 0 || i > rows || j == 0 || j > cols {
                return Err(parse_err(no, format!("index ({i},{j}) out of range")));
            }
            if !v.is_finite() {
                return Err(parse_err(no, "non-finite value"));
            }
            data[(i - 1) * cols + (j - 1)] = v;
            match layout {
                MmLayout::General => {}
                MmLayout::Symmetric => data[(j - 1) * cols + (i - 1)] = v,
                MmLayout::SkewSymmetric => data[(j - 1) * cols + (i - 1)] = -v,
            }
            seen += 1;
        }
        if seen != nnz {
            return Err(IoError::Invalid(format!(
                "header declares {nnz} entries, file has {seen}"
            )));
        }
        DenseMatrix::from_row_major(rows, cols, data).map_err(|e| IoError::Invalid(e.to_string()))
    } else {
        if dims.len() != 2 {
            return Err(parse_err(size_no, "array size line needs rows cols"));
        }
        let rows: usize = dims[0]
            .parse()
            .map_err(|_| parse_err(size_no, "bad row count"))?;
        let cols: usize = dims[1]
            .parse()
            .map_err(|_| parse_err(size_no, "bad column count"))?;
        if rows == 0 || cols == 0 {
            return Err(parse_err(size_no, "matrix dimensions must be positive"));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for (idx, line) in lines {
            let t = line.trim();
            if t.is_empty() || t.starts_with('%') {
                continue;
            }
            let no = idx + 1;
            let v: f64 = t.parse().map_err(|_| parse_err(no, "bad value"))?;
            if !v.is_finite() {
                return Err(parse_err(no, "non-finite value"));
            }
            values.push(v);
        }
        if values.len() != rows * cols {
            return Err(IoError::Invalid(format!(
                "array file declares {}x{} but has {} values",
                rows,
                cols,
                values.len()
            )));
        }
        // array format is column-major
        let mut data = vec![0.0; rows * cols];
        for j in 0..cols {
            for i in 0..rows {
                data[i * cols + j] = values[j * rows + i];
            }
        }
        DenseMatrix::from_row_major(rows, cols, data).map_err(|e| IoError::Invalid(e.to_string()))
    }
}

/// Load a vector (an `n x 1` Matrix Market file, array or coordinate).
pub fn load_vector(path: impl AsRef<Path>) -> Result<Vec<f64>, IoError> {
    let m = load_matrix_market(path)?;
    if m.cols() != 1 {
        return Err(IoError::Invalid(format!(
            "expected a column vector, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(m.data().to_vec())
}

/// Serialize a matrix in coordinate format (nonzero entries only).
pub fn matrix_to_coordinate(m: &DenseMatrix) -> String {
    let nnz = m.data().iter().filter(|v| **v != 0.0).count();
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    let _ = writeln!(out, "{} {} {}", m.rows(), m.cols(), nnz);
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m.get(i, j);
            if v != 0.0 {
                let _ = writeln!(out, "{} {} {}", i + 1, j + 1, v);
            }
        }
    }
    out
}

/// Serialize a vector in array format.
pub fn vector_to_array(v: &[f64]) -> String {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix array real general\n");
    let _ = writeln!(out, "{} 1", v.len());
    for x in v {
        let _ = writeln!(out, "{x}");
    }
    out
}

/// Write a problem bundle directory.
pub fn save_bundle(p: &LcpProblem, dir: impl AsRef<Path>) -> Result<(), IoError> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("M.mtx"), matrix_to_coordinate(&p.m))?;
    fs::write(dir.join("q.mtx"), vector_to_array(&p.q))?;
    if let Some((x, y)) = &p.designed_solution {
        fs::write(dir.join("xstar.mtx"), vector_to_array(x))?;
        fs::write(dir.join("ystar.mtx"), vector_to_array(y))?;
    }
    let mut meta = String::new();
    let _ = writeln!(meta, "name = \"{}\"", p.name);
    let _ = writeln!(meta, "n = {}", p.n());
    if let Some(seed) = p.seed {
        let _ = writeln!(meta, "seed = {seed}");
    }
    fs::write(dir.join("meta.toml"), meta)?;
    Ok(())
}

/// Read a problem bundle directory back.
pub fn load_bundle(dir: impl AsRef<Path>) -> Result<LcpProblem, IoError> {
    let dir = dir.as_ref();
    let m = load_matrix_market(dir.join("M.mtx"))?;
    let q = load_vector(dir.join("q.mtx"))?;

    let meta_path = dir.join("meta.toml");
    let mut name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "problem".to_string());
    let mut seed = None;
    if meta_path.exists() {
        let text = fs::read_to_string(&meta_path)?;
        for line in text.lines() {
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = t.split_once('=') {
                let key = key.trim();
                let value = value.trim().trim_matches('"');
                match key {
                    "name" => name = value.to_string(),
                    "seed" => {
                        seed = value.parse::<u64>().ok();
                    }
                    _ => {}
                }
            }
        }
    }

    let mut p = LcpProblem::new(name, m, q).map_err(|e| IoError::Invalid(e.to_string()))?;
    p.seed = seed;

    let xs = dir.join("xstar.mtx");
    let ys = dir.join("ystar.mtx");
    if xs.exists() && ys.exists() {
        let x = load_vector(xs)?;
        let y = load_vector(ys)?;
        if x.len() != p.n() || y.len() != p.n() {
            return Err(IoError::Invalid(
                "designed solution length does not match problem size".into(),
            ));
        }
        p.designed_solution = Some((x, y));
    }
    Ok(p)
}
