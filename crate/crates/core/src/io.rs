//! File formats: Matrix Market and CSV for instances, JSON for paths.
//!
//! Matrices are read from Matrix Market (`array` or `coordinate`, `real` or
//! `integer`, `general`) or from comma-separated rows; the format is chosen
//! by looking for the `%%MatrixMarket` banner. Vectors are read from Matrix
//! Market or from numbers separated by commas, whitespace or newlines. Lines
//! starting with `#` or `%` are comments.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, DenseVector};
use crate::problem::{interpolate, Evaluation, ProblemInstance, SolutionPath, Termination, Tolerances};

const BANNER: &str = "%%matrixmarket";

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

/// Whitespace-separated tokens with 1-based column numbers.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (false, None) => start = Some(i),
            (true, Some(s)) => {
                out.push((s + 1, &line[s..i]));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn number(tok: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, column, format!("expected a number, found {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, column, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

fn index(tok: &str, bound: usize, line: usize, column: usize) -> Result<usize> {
    let i: usize = tok
        .parse()
        .map_err(|_| parse_err(line, column, format!("expected a positive integer, found {tok:?}")))?;
    if i == 0 || i > bound {
        return Err(parse_err(line, column, format!("index {i} outside 1..={bound}")));
    }
    Ok(i - 1)
}

fn is_comment(line: &str) -> bool {
    let l = line.trim_start();
    l.starts_with('#') || l.starts_with('%')
}

fn is_matrix_market(text: &str) -> bool {
    text.lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().to_ascii_lowercase().starts_with(BANNER))
}

/// Parses a Matrix Market document.
pub fn parse_matrix_market(text: &str) -> Result<DMatrix<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| parse_err(1, 1, "empty input"))?;
    let fields: Vec<String> = tokens(header).iter().map(|(_, t)| t.to_ascii_lowercase()).collect();
    if fields.len() != 5 || fields[0] != BANNER || fields[1] != "matrix" {
        return Err(parse_err(hline, 1, "expected '%%MatrixMarket matrix <format> <field> <symmetry>'"));
    }
    let coordinate = match fields[2].as_str() {
        "array" => false,
        "coordinate" => true,
        other => return Err(parse_err(hline, 1, format!("unsupported format {other:?}"))),
    };
    if !matches!(fields[3].as_str(), "real" | "integer" | "double") {
        return Err(parse_err(hline, 1, format!("unsupported field {:?}", fields[3])));
    }
    if fields[4] != "general" {
        return Err(parse_err(hline, 1, format!("unsupported symmetry {:?}", fields[4])));
    }

    let mut data = lines.filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('%'));
    let (sline, size) = data.next().ok_or_else(|| parse_err(hline + 1, 1, "missing size line"))?;
    let size_toks = tokens(size);
    let want = if coordinate { 3 } else { 2 };
    if size_toks.len() != want {
        return Err(parse_err(sline, 1, format!("size line needs {want} integers")));
    }
    let dims: Vec<usize> = size_toks
        .iter()
        .map(|&(c, t)| t.parse().map_err(|_| parse_err(sline, c, format!("bad size {t:?}"))))
        .collect::<Result<_>>()?;
    let (m, n) = (dims[0], dims[1]);
    let mut a = DMatrix::zeros(m, n);
    let mut last_line = sline;

    if coordinate {
        let nnz = dims[2];
        let mut seen = 0;
        for (ln, l) in data {
            last_line = ln;
            let toks = tokens(l);
            if toks.len() != 3 {
                return Err(parse_err(ln, 1, "coordinate entries need 'row col value'"));
            }
            if seen == nnz {
                return Err(parse_err(ln, toks[0].0, format!("more than {nnz} entries")));
            }
            let i = index(toks[0].1, m, ln, toks[0].0)?;
            let j = index(toks[1].1, n, ln, toks[1].0)?;
            a[(i, j)] += number(toks[2].1, ln, toks[2].0)?;
            seen += 1;
        }
        if seen != nnz {
            return Err(parse_err(last_line + 1, 1, format!("expected {nnz} entries, found {seen}")));
        }
    } else {
        // Column-major order, any number of values per line.
        let mut k = 0;
        for (ln, l) in data {
            last_line = ln;
            for (c, t) in tokens(l) {
                if k == m * n {
                    return Err(parse_err(ln, c, format!("more than {} values", m * n)));
                }
                a[(k % m.max(1), k / m.max(1))] = number(t, ln, c)?;
                k += 1;
            }
        }
        if k != m * n {
            return Err(parse_err(last_line + 1, 1, format!("expected {} values, found {k}", m * n)));
        }
    }
    Ok(a)
}

/// Parses comma-separated rows.
pub fn parse_csv_matrix(text: &str) -> Result<DMatrix<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let ln = i + 1;
        if l.trim().is_empty() || is_comment(l) {
            continue;
        }
        let mut row = Vec::new();
        let mut col = 1;
        for field in l.split(',') {
            let lead = field.len() - field.trim_start().len();
            row.push(number(field.trim(), ln, col + lead)?);
            col += field.len() + 1;
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(ln, 1, format!("row has {} fields, expected {}", row.len(), first.len())));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, 1, "no rows"));
    }
    let (m, n) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(m, n, |i, j| rows[i][j]))
}

pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let a = if is_matrix_market(text) { parse_matrix_market(text)? } else { parse_csv_matrix(text)? };
    DenseMatrix::new(a)
}

/// Parses a vector from Matrix Market (a single row or column) or from
/// numbers separated by commas and whitespace.
pub fn parse_vector(text: &str) -> Result<DenseVector> {
    if is_matrix_market(text) {
        let a = parse_matrix_market(text)?;
        if a.ncols() != 1 && a.nrows() != 1 {
            return Err(parse_err(1, 1, format!("expected a vector, found a {}x{} matrix", a.nrows(), a.ncols())));
        }
        return DenseVector::new(DVector::from_iterator(a.len(), a.iter().copied()));
    }
    let mut values = Vec::new();
    for (i, l) in text.lines().enumerate() {
        if is_comment(l) {
            continue;
        }
        let cleaned = l.replace(',', " ");
        for (c, t) in tokens(&cleaned) {
            values.push(number(t, i + 1, c)?);
        }
    }
    if values.is_empty() {
        return Err(parse_err(1, 1, "no values"));
    }
    DenseVector::from_slice(&values)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<DenseMatrix> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn read_vector(path: impl AsRef<Path>) -> Result<DenseVector> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn read_instance(matrix: impl AsRef<Path>, rhs: impl AsRef<Path>) -> Result<ProblemInstance> {
    ProblemInstance::new(read_matrix(matrix)?, read_vector(rhs)?)
}

/// Matrix Market array format, full precision, with `%` comment lines.
pub fn format_matrix_market(a: &DMatrix<f64>, comments: &[String]) -> String {
    let mut out = String::from("%%MatrixMarket matrix array real general\n");
    for c in comments {
        let _ = writeln!(out, "% {c}");
    }
    let _ = writeln!(out, "{} {}", a.nrows(), a.ncols());
    for v in a.iter() {
        let _ = writeln!(out, "{v:?}");
    }
    out
}

/// One value per line, full precision, with `#` comment lines.
pub fn format_vector(v: &DVector<f64>, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        let _ = writeln!(out, "# {c}");
    }
    for x in v.iter() {
        let _ = writeln!(out, "{x:?}");
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KinkRecord {
    pub t: f64,
    pub u: Vec<f64>,
}

/// Serialized solution path. Floats are written in shortest round-trip form,
/// so reading a file back reproduces every kink exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathFile {
    pub m: usize,
    pub n: usize,
    pub t0: f64,
    pub termination: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub kinks: Vec<KinkRecord>,
}

impl PathFile {
    pub fn from_path(path: &SolutionPath) -> Self {
        Self {
            m: path.instance().m(),
            n: path.instance().n(),
            t0: path.t0(),
            termination: path.termination().to_string(),
            algorithm: None,
            seed: None,
            kinks: path.kinks().iter().map(|k| KinkRecord { t: k.t, u: k.u.iter().copied().collect() }).collect(),
        }
    }

    /// Structural checks that do not need the instance.
    pub fn validate(&self) -> Result<()> {
        let first = self.kinks.first().ok_or_else(|| Error::InvalidPath("no kinks".into()))?;
        if first.t != self.t0 {
            return Err(Error::InvalidPath(format!("first kink at t = {} but t0 = {}", first.t, self.t0)));
        }
        if let Some(k) = self.kinks.iter().position(|k| k.u.len() != self.n) {
            return Err(Error::InvalidPath(format!("kink {k} has {} coefficients, expected {}", self.kinks[k].u.len(), self.n)));
        }
        if let Some(k) = self.kinks.iter().position(|k| !k.t.is_finite() || k.u.iter().any(|v| !v.is_finite())) {
            return Err(Error::InvalidPath(format!("kink {k} has a non-finite value")));
        }
        if let Some(w) = self.kinks.windows(2).position(|w| !(w[1].t < w[0].t)) {
            return Err(Error::InvalidPath(format!("kink parameters not strictly decreasing at kink {}", w + 1)));
        }
        self.termination.parse::<Termination>()?;
        Ok(())
    }

    /// Rebuilds the path against `inst`.
    pub fn to_solution_path(&self, inst: &ProblemInstance, tol: &Tolerances) -> Result<SolutionPath> {
        self.validate()?;
        if inst.m() != self.m || inst.n() != self.n {
            return Err(Error::Dimension(format!(
                "path is for a {}x{} instance, got {}x{}",
                self.m,
                self.n,
                inst.m(),
                inst.n()
            )));
        }
        let kinks = self.kinks.iter().map(|k| (k.t, DVector::from_column_slice(&k.u))).collect();
        SolutionPath::from_kinks(inst.clone(), kinks, self.termination.parse()?, tol)
    }

    pub fn eval(&self, t: f64) -> Evaluation {
        let ts: Vec<f64> = self.kinks.iter().map(|k| k.t).collect();
        let us: Vec<DVector<f64>> = self.kinks.iter().map(|k| DVector::from_column_slice(&k.u)).collect();
        let refs: Vec<&DVector<f64>> = us.iter().collect();
        interpolate(&ts, &refs, t)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let file: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        file.validate()?;
        Ok(file)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}
