//! Datasets: libsvm and CSV loaders, seeded synthetic generators, holdout splits.
//!
//! Synthetic generators draw from `ChaCha8Rng`, whose stream is fixed by the seed on
//! every platform, so fixtures reproduce exactly.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{CscMatrix, DenseMatrix, Design};
use crate::model::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Libsvm,
    Csv,
}

impl Format {
    /// Guesses the format from the file extension; anything but `.csv` is libsvm.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Libsvm,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub x: Design,
    pub y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Design, y: Vec<f64>) -> Result<Self> {
        if x.n_rows() != y.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} rows but {} labels",
                x.n_rows(),
                y.len()
            )));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("non-finite label {v}")));
        }
        Ok(Self { x, y })
    }

    pub fn n_samples(&self) -> usize {
        self.y.len()
    }

    pub fn n_features(&self) -> usize {
        self.x.n_cols()
    }

    /// Labels as `{0, 1}`, accepting `{0, 1}` or `{−1, +1}` input.
    pub fn binary_labels(&self) -> Result<Vec<f64>> {
        let signed = self.y.iter().any(|&v| v == -1.0);
        self.y
            .iter()
            .map(|&v| match v {
                v if v == 1.0 => Ok(1.0),
                v if v == 0.0 && !signed => Ok(0.0),
                v if v == -1.0 => Ok(0.0),
                v => Err(Error::LabelDomain(v)),
            })
            .collect()
    }

    /// Shuffled holdout split; the second part holds `round(n·val_frac)` rows.
    pub fn split(&self, val_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if !(val_frac > 0.0 && val_frac < 1.0) {
            return Err(Error::InvalidConfig(format!("validation fraction must be in (0, 1), got {val_frac}")));
        }
        let n = self.n_samples();
        let n_val = ((n as f64) * val_frac).round() as usize;
        if n_val == 0 || n_val >= n {
            return Err(Error::InvalidConfig(format!(
                "a {val_frac} split of {n} rows leaves an empty side"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let (val_idx, train_idx) = order.split_at(n_val);
        let mut train_idx = train_idx.to_vec();
        let mut val_idx = val_idx.to_vec();
        train_idx.sort_unstable();
        val_idx.sort_unstable();
        let pick = |idx: &[usize]| Dataset {
            x: self.x.select_rows(idx),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        };
        Ok((pick(&train_idx), pick(&val_idx)))
    }
}

pub fn load_dataset(path: &Path, format: Format) -> Result<Dataset> {
    let file = File::open(path)?;
    match format {
        Format::Libsvm => parse_libsvm(BufReader::new(file)),
        Format::Csv => parse_csv(file),
    }
}

fn parse_error(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn finite(value: &str, line: usize) -> Result<f64> {
    let v: f64 = value
        .trim()
        .parse()
        .map_err(|_| parse_error(line, format!("invalid number {value:?}")))?;
    if !v.is_finite() {
        return Err(parse_error(line, format!("non-finite value {value:?}")));
    }
    Ok(v)
}

/// `label index:value …` per line with 1-based indices; `#` starts a comment.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut triplets = Vec::new();
    let mut y = Vec::new();
    let mut n_cols = 0;
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = finite(tokens.next().expect("non-empty line"), line_no)?;
        let row = y.len();
        y.push(label);
        for token in tokens {
            let (index, value) = token
                .split_once(':')
                .ok_or_else(|| parse_error(line_no, format!("expected index:value, got {token:?}")))?;
            if index == "qid" {
                continue;
            }
            let index: usize = index
                .parse()
                .map_err(|_| parse_error(line_no, format!("invalid feature index {index:?}")))?;
            if index == 0 {
                return Err(parse_error(line_no, "feature indices are 1-based"));
            }
            let value = finite(value, line_no)?;
            n_cols = n_cols.max(index);
            if value != 0.0 {
                triplets.push((row, index - 1, value));
            }
        }
    }
    if y.is_empty() {
        return Err(parse_error(0, "no samples"));
    }
    let x = CscMatrix::from_triplets(y.len(), n_cols, &triplets)?;
    Dataset::new(x.into(), y)
}

/// CSV with a header row; the last column is the label.
pub fn parse_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let n_fields = rdr
        .headers()
        .map_err(|e| parse_error(1, e.to_string()))?
        .len();
    if n_fields < 2 {
        return Err(parse_error(1, "need at least one feature column and a label column"));
    }
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (k, record) in rdr.records().enumerate() {
        let line_no = k + 2;
        let record = record.map_err(|e| parse_error(line_no, e.to_string()))?;
        if record.len() != n_fields {
            return Err(Error::DimensionMismatch(format!(
                "line {line_no} has {} fields, header has {n_fields}",
                record.len()
            )));
        }
        let values = record
            .iter()
            .map(|v| finite(v, line_no))
            .collect::<Result<Vec<f64>>>()?;
        let (features, label) = values.split_at(n_fields - 1);
        rows.push(features.to_vec());
        y.push(label[0]);
    }
    if y.is_empty() {
        return Err(parse_error(1, "no samples"));
    }
    Dataset::new(DenseMatrix::from_rows(&rows)?.into(), y)
}

fn gaussian_design(rng: &mut ChaCha8Rng, n: usize, p: usize) -> DenseMatrix {
    let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(rng)).collect();
    DenseMatrix::from_col_major(n, p, data).expect("sizes match")
}

fn sparse_coefficients(rng: &mut ChaCha8Rng, p: usize, informative: usize, scale: f64) -> Vec<f64> {
    let mut beta = vec![0.0; p];
    let mut idx: Vec<usize> = (0..p).collect();
    idx.shuffle(rng);
    for &j in idx.iter().take(informative.min(p)) {
        beta[j] = scale * rng.random::<f64>();
    }
    beta
}

/// Gaussian design, `informative` coefficients uniform on `[0, 100)`, `y = Xβ* + noise·N(0, 1)`.
pub fn synthetic_regression(n: usize, p: usize, informative: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian_design(&mut rng, n, p);
    let beta = sparse_coefficients(&mut rng, p, informative, 100.0);
    let design: Design = x.into();
    let mut y = design.matvec(&beta);
    for v in &mut y {
        let e: f64 = StandardNormal.sample(&mut rng);
        *v += noise * e;
    }
    Dataset { x: design, y }
}

/// Gaussian design, sparse `β*` with signed entries, labels `y ~ Bernoulli(σ(Xβ*))` in `{0, 1}`.
pub fn synthetic_classification(n: usize, p: usize, informative: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = gaussian_design(&mut rng, n, p);
    let mut beta = sparse_coefficients(&mut rng, p, informative, 2.0);
    for b in &mut beta {
        if *b != 0.0 && rng.random::<bool>() {
            *b = -*b;
        }
    }
    let design: Design = x.into();
    let z = design.matvec(&beta);
    let y = z
        .iter()
        .map(|&zi| if rng.random::<f64>() < sigmoid(zi) { 1.0 } else { 0.0 })
        .collect();
    Dataset { x: design, y }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn libsvm_line() {
        let d = parse_libsvm(Cursor::new("1 3:0.5 7:-2\n")).unwrap();
        assert_eq!((d.n_samples(), d.n_features()), (1, 7));
        assert_eq!(d.y, vec![1.0]);
        let row = d.x.row(0);
        assert_eq!(row[2], 0.5);
        assert_eq!(row[6], -2.0);
        assert_eq!(row.iter().filter(|&&v| v != 0.0).count(), 2);
    }

    #[test]
    fn libsvm_comments_and_errors() {
        let d = parse_libsvm(Cursor::new("# header\n-1 1:1 # trailing\n\n+1 2:3\n")).unwrap();
        assert_eq!(d.y, vec![-1.0, 1.0]);
        assert!(matches!(parse_libsvm(Cursor::new("")), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_libsvm(Cursor::new("1 1:2\n1 0:1\n")),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(parse_libsvm(Cursor::new("1 2:nan\n")), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse_libsvm(Cursor::new("x 2:1\n")), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_shape() {
        let d = parse_csv(Cursor::new("a,b,c,label\n1,2,3,0\n4,5,6,1\n")).unwrap();
        assert_eq!((d.n_samples(), d.n_features()), (2, 3));
        assert_eq!(d.y, vec![0.0, 1.0]);
        assert_eq!(d.x.row(1), vec![4.0, 5.0, 6.0]);
        assert!(matches!(parse_csv(Cursor::new("")), Err(Error::Parse { .. })));
        assert!(matches!(parse_csv(Cursor::new("a,label\n")), Err(Error::Parse { .. })));
        assert!(parse_csv(Cursor::new("a,b,label\n1,2\n")).is_err());
        assert!(matches!(parse_csv(Cursor::new("a,label\n1,inf\n")), Err(Error::Parse { line: 2, .. })));
    }

    #[test]
    fn split_is_seeded_and_disjoint() {
        let d = synthetic_regression(20, 3, 2, 0.0, 1);
        let (a, b) = d.split(0.3, 7).unwrap();
        let (c, _) = d.split(0.3, 7).unwrap();
        assert_eq!((a.n_samples(), b.n_samples()), (14, 6));
        assert_eq!(a.y, c.y);
        let mut all: Vec<f64> = a.y.iter().chain(&b.y).copied().collect();
        let mut orig = d.y.clone();
        all.sort_by(f64::total_cmp);
        orig.sort_by(f64::total_cmp);
        assert_eq!(all, orig);
        assert!(d.split(0.0, 1).is_err());
    }

    #[test]
    fn generators_are_deterministic() {
        let a = synthetic_classification(30, 10, 3, 5);
        let b = synthetic_classification(30, 10, 3, 5);
        assert_eq!(a.y, b.y);
        assert!(a.y.iter().all(|&v| v == 0.0 || v == 1.0));
        let r = synthetic_regression(30, 150, 10, 0.0, 0);
        assert_eq!((r.n_samples(), r.n_features()), (30, 150));
    }

    #[test]
    fn binary_labels_accept_both_encodings() {
        let x: Design = DenseMatrix::zeros(3, 1).into();
        let d = Dataset::new(x.clone(), vec![-1.0, 1.0, -1.0]).unwrap();
        assert_eq!(d.binary_labels().unwrap(), vec![0.0, 1.0, 0.0]);
        let d = Dataset::new(x, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(d.binary_labels(), Err(Error::LabelDomain(_))));
    }
}
