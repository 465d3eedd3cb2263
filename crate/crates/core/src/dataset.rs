//! The population bundle and its plain-text on-disk format.
//!
//! A dataset directory holds a manifest of `key = value` lines naming the
//! component files (paths relative to the manifest):
//!
//! ```text
//! features = features.tsv
//! labels = labels.tsv
//! properties = properties.tsv
//! pi = pi.tsv
//! prefeatures = prefeatures.tsv   # optional
//! truelabels = truelabels.tsv     # optional
//! ```
//!
//! Matrix files start with `n_rows<TAB>n_cols` followed by one
//! `row<TAB>col<TAB>value` triplet per line. Vector files start with the
//! length followed by `index<TAB>value` lines; omitted indices are zero.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub const MANIFEST_FILE: &str = "manifest.txt";

/// Features, labels, one-hot properties and the per-property statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortDataset {
    x: SparseMatrix,
    z: Option<SparseMatrix>,
    y: Vec<bool>,
    p: SparseMatrix,
    pi: Vec<f64>,
    y_true: Option<Vec<bool>>,
    property_of: Vec<usize>,
}

impl CohortDataset {
    /// Validates and assembles a dataset.
    pub fn new(
        x: SparseMatrix,
        z: Option<SparseMatrix>,
        y: Vec<bool>,
        p: SparseMatrix,
        pi: Vec<f64>,
        y_true: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = x.n_rows();
        if p.n_rows() != n || y.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "features have {n} rows, properties {}, labels {}",
                p.n_rows(),
                y.len()
            )));
        }
        if let Some(z) = &z {
            if z.n_rows() != n {
                return Err(Error::DimensionMismatch(format!(
                    "features have {n} rows, prefeatures {}",
                    z.n_rows()
                )));
            }
        }
        if pi.len() != p.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "pi has length {}, properties have {} columns",
                pi.len(),
                p.n_cols()
            )));
        }
        if let Some(k) = pi.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidDataset(format!("pi[{k}] = {} is not a non-negative real", pi[k])));
        }
        let property_of = one_hot_columns(&p)?;
        if let Some(truth) = &y_true {
            if truth.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "true labels have length {}, expected {n}",
                    truth.len()
                )));
            }
            if let Some(i) = (0..n).find(|&i| y[i] && !truth[i]) {
                return Err(Error::InvalidDataset(format!(
                    "row {i} is a disclosed positive but not a true positive"
                )));
            }
        }
        Ok(CohortDataset {
            x,
            z,
            y,
            p,
            pi,
            y_true,
            property_of,
        })
    }

    pub fn n(&self) -> usize {
        self.x.n_rows()
    }

    pub fn x(&self) -> &SparseMatrix {
        &self.x
    }

    pub fn z(&self) -> Option<&SparseMatrix> {
        self.z.as_ref()
    }

    pub fn y(&self) -> &[bool] {
        &self.y
    }

    pub fn p(&self) -> &SparseMatrix {
        &self.p
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn y_true(&self) -> Option<&[bool]> {
        self.y_true.as_deref()
    }

    /// Number of properties (columns of `P`).
    pub fn n_properties(&self) -> usize {
        self.pi.len()
    }

    /// The property index of every row.
    pub fn property_of(&self) -> &[usize] {
        &self.property_of
    }

    /// Number of individuals holding each property.
    pub fn property_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_properties()];
        for &k in &self.property_of {
            sizes[k] += 1;
        }
        sizes
    }

    pub fn n_disclosed(&self) -> usize {
        self.y.iter().filter(|&&v| v).count()
    }

    /// Same population with a different disclosed-label vector.
    pub fn with_labels(&self, y: Vec<bool>) -> Result<Self> {
        Self::new(
            self.x.clone(),
            self.z.clone(),
            y,
            self.p.clone(),
            self.pi.clone(),
            self.y_true.clone(),
        )
    }

    /// Same population with `X` replaced (e.g. by `[X | Z]`).
    pub fn with_features(&self, x: SparseMatrix) -> Result<Self> {
        Self::new(
            x,
            self.z.clone(),
            self.y.clone(),
            self.p.clone(),
            self.pi.clone(),
            self.y_true.clone(),
        )
    }

    /// `[X | Z]`, or an error when `Z` is absent.
    pub fn combined_features(&self) -> Result<SparseMatrix> {
        let z = self.z.as_ref().ok_or(Error::MissingComponent("prefeatures (Z)"))?;
        self.x.hstack(z)
    }

    /// The sub-population at `rows`; `pi` is kept as is.
    pub fn subset(&self, rows: &[usize]) -> Self {
        let pick = |v: &[bool]| rows.iter().map(|&i| v[i]).collect::<Vec<_>>();
        CohortDataset {
            x: self.x.select_rows(rows),
            z: self.z.as_ref().map(|z| z.select_rows(rows)),
            y: pick(&self.y),
            p: self.p.select_rows(rows),
            pi: self.pi.clone(),
            y_true: self.y_true.as_deref().map(pick),
            property_of: rows.iter().map(|&i| self.property_of[i]).collect(),
        }
    }
}

fn one_hot_columns(p: &SparseMatrix) -> Result<Vec<usize>> {
    (0..p.n_rows())
        .map(|r| {
            let mut nonzero = p.row(r).iter().filter(|(_, v)| *v != 0.0);
            match (nonzero.next(), nonzero.next()) {
                (Some((c, 1.0)), None) => Ok(c),
                _ => Err(Error::NonOneHotProperty { row: r }),
            }
        })
        .collect()
}

/// Loads a dataset from its manifest.
pub fn load_dataset(manifest_path: impl AsRef<Path>) -> Result<CohortDataset> {
    let manifest_path = manifest_path.as_ref();
    let text = read_file(manifest_path)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));

    let mut entries: Vec<(String, PathBuf)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let malformed = |message: String| Error::Malformed {
            path: manifest_path.to_path_buf(),
            line: no + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| malformed(format!("expected `key = value`, got `{line}`")))?;
        let key = key.trim();
        if !["features", "labels", "properties", "pi", "prefeatures", "truelabels"].contains(&key) {
            return Err(malformed(format!("unknown key `{key}`")));
        }
        if entries.iter().any(|(k, _)| k == key) {
            return Err(malformed(format!("key `{key}` given twice")));
        }
        entries.push((key.to_string(), base.join(value.trim())));
    }
    let lookup = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, p)| p.as_path());
    let require = |key: &'static str| {
        lookup(key).ok_or_else(|| Error::Malformed {
            path: manifest_path.to_path_buf(),
            line: 0,
            message: format!("missing required key `{key}`"),
        })
    };

    let x = read_matrix(require("features")?)?;
    let p = read_matrix(require("properties")?)?;
    let y = read_labels(require("labels")?)?;
    let pi = read_vector(require("pi")?)?;
    let z = lookup("prefeatures").map(read_matrix).transpose()?;
    let y_true = lookup("truelabels").map(read_labels).transpose()?;
    CohortDataset::new(x, z, y, p, pi, y_true)
}

/// Writes `ds` into `dir` and returns the manifest path.
pub fn save_dataset(ds: &CohortDataset, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut manifest = String::new();
    let mut put = |key: &str, file: &str, body: String| -> Result<()> {
        fs::write(dir.join(file), body)?;
        writeln!(manifest, "{key} = {file}").unwrap();
        Ok(())
    };
    put("features", "features.tsv", format_matrix(&ds.x))?;
    put("labels", "labels.tsv", format_labels(&ds.y))?;
    put("properties", "properties.tsv", format_matrix(&ds.p))?;
    put("pi", "pi.tsv", format_vector(&ds.pi))?;
    if let Some(z) = &ds.z {
        put("prefeatures", "prefeatures.tsv", format_matrix(z))?;
    }
    if let Some(t) = &ds.y_true {
        put("truelabels", "truelabels.tsv", format_labels(t))?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest)?;
    Ok(path)
}

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile {
            path: path.to_path_buf(),
        },
        _ => Error::Io(e),
    })
}

/// Non-empty lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: Option<&str>, what: &str) -> Result<T> {
    let malformed = |message: String| Error::Malformed {
        path: path.to_path_buf(),
        line,
        message,
    };
    let raw = field.ok_or_else(|| malformed(format!("missing {what}")))?;
    raw.trim()
        .parse()
        .map_err(|_| malformed(format!("cannot parse {what} from `{raw}`")))
}

fn expect_end<'a>(path: &Path, line: usize, mut fields: impl Iterator<Item = &'a str>) -> Result<()> {
    match fields.next() {
        None => Ok(()),
        Some(extra) => Err(Error::Malformed {
            path: path.to_path_buf(),
            line,
            message: format!("unexpected trailing field `{extra}`"),
        }),
    }
}

pub(crate) fn read_matrix(path: &Path) -> Result<SparseMatrix> {
    let text = read_file(path)?;
    let mut lines = data_lines(&text);
    let (hline, header) = lines.next().ok_or_else(|| Error::Malformed {
        path: path.to_path_buf(),
        line: 1,
        message: "missing `n_rows<TAB>n_cols` header".into(),
    })?;
    let mut fields = header.split('\t');
    let n_rows: usize = parse_field(path, hline, fields.next(), "n_rows")?;
    let n_cols: usize = parse_field(path, hline, fields.next(), "n_cols")?;
    expect_end(path, hline, fields)?;

    let mut triplets = Vec::new();
    let mut seen = HashSet::new();
    for (no, line) in lines {
        let mut fields = line.split('\t');
        let r: usize = parse_field(path, no, fields.next(), "row")?;
        let c: usize = parse_field(path, no, fields.next(), "col")?;
        let v: f64 = parse_field(path, no, fields.next(), "value")?;
        expect_end(path, no, fields)?;
        let malformed = |message: String| Error::Malformed {
            path: path.to_path_buf(),
            line: no,
            message,
        };
        if r >= n_rows || c >= n_cols {
            return Err(malformed(format!("({r}, {c}) outside {n_rows}x{n_cols}")));
        }
        if !v.is_finite() {
            return Err(malformed(format!("non-finite value {v}")));
        }
        if !seen.insert((r, c)) {
            return Err(Error::DuplicateCoordinate {
                path: path.to_path_buf(),
                line: no,
                row: r,
                col: c,
            });
        }
        triplets.push((r, c, v));
    }
    SparseMatrix::from_triplets(n_rows, n_cols, triplets)
}

pub(crate) fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let text = read_file(path)?;
    let mut lines = data_lines(&text);
    let (hline, header) = lines.next().ok_or_else(|| Error::Malformed {
        path: path.to_path_buf(),
        line: 1,
        message: "missing length header".into(),
    })?;
    let mut fields = header.split('\t');
    let len: usize = parse_field(path, hline, fields.next(), "length")?;
    expect_end(path, hline, fields)?;

    let mut out = vec![0.0; len];
    let mut seen = vec![false; len];
    for (no, line) in lines {
        let mut fields = line.split('\t');
        let i: usize = parse_field(path, no, fields.next(), "index")?;
        let v: f64 = parse_field(path, no, fields.next(), "value")?;
        expect_end(path, no, fields)?;
        let malformed = |message: String| Error::Malformed {
            path: path.to_path_buf(),
            line: no,
            message,
        };
        if i >= len {
            return Err(malformed(format!("index {i} outside length {len}")));
        }
        if !v.is_finite() {
            return Err(malformed(format!("non-finite value {v}")));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(malformed(format!("index {i} given twice")));
        }
        out[i] = v;
    }
    Ok(out)
}

fn read_labels(path: &Path) -> Result<Vec<bool>> {
    let values = read_vector(path)?;
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v == 0.0 {
                Ok(false)
            } else if v == 1.0 {
                Ok(true)
            } else {
                Err(Error::Malformed {
                    path: path.to_path_buf(),
                    line: 0,
                    message: format!("label at index {i} is {v}, expected 0 or 1"),
                })
            }
        })
        .collect()
}

pub(crate) fn format_matrix(m: &SparseMatrix) -> String {
    let mut s = format!("{}\t{}\n", m.n_rows(), m.n_cols());
    for (r, c, v) in m.entries() {
        writeln!(s, "{r}\t{c}\t{v}").unwrap();
    }
    s
}

pub(crate) fn format_vector(v: &[f64]) -> String {
    let mut s = format!("{}\n", v.len());
    for (i, x) in v.iter().enumerate() {
        // -0.0 is written so that reloading is bit-exact
        if *x != 0.0 || x.is_sign_negative() {
            writeln!(s, "{i}\t{x}").unwrap();
        }
    }
    s
}

fn format_labels(y: &[bool]) -> String {
    let mut s = format!("{}\n", y.len());
    for (i, _) in y.iter().enumerate().filter(|(_, v)| **v) {
        writeln!(s, "{i}\t1").unwrap();
    }
    s
}
