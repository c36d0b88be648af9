//! Loading, encoding, scaling and splitting of the credit tables.
//!
//! The flow is `load_csv` → `drop_missing` → `encode_dummy` / `encode_integer`
//! → `train_test_split` → `standardize_fit_apply`. Every step is a pure
//! function of its inputs (plus an explicit seed for the split).

use std::collections::BTreeSet;
use std::path::Path;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MISSING_TOKEN: &str = "?";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Delimiter {
    Comma,
    Whitespace,
}

/// Role of a field in the input file.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Numeric,
    Categorical,
    Label,
}

/// Kind of a feature column once the label has been separated out.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub kind: FieldKind,
}

/// Column declarations for one input file, in file order. Exactly one field
/// must have kind `label`; a sample is positive (label 1) when its label cell
/// equals `positive_label`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub delimiter: Delimiter,
    pub positive_label: String,
    pub fields: Vec<FieldDecl>,
}

impl Schema {
    fn label_index(&self) -> Result<usize> {
        let mut labels = self
            .fields
            .iter()
            .enumerate()
            .filter(|(_, f)| f.kind == FieldKind::Label);
        match (labels.next(), labels.next()) {
            (Some((i, _)), None) => Ok(i),
            (None, _) => Err(Error::Schema("no label field declared".into())),
            (Some(_), Some(_)) => Err(Error::Schema("more than one label field".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub kind: ColumnKind,
}

/// Parsed but not yet encoded table. Cells are kept as text; numeric columns
/// are validated at load time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawTable {
    columns: Vec<Column>,
    rows: Vec<Vec<String>>,
    labels: Vec<String>,
    missing_token: String,
    positive_label: String,
}

impl RawTable {
    pub fn new(
        columns: Vec<Column>,
        rows: Vec<Vec<String>>,
        labels: Vec<String>,
        missing_token: impl Into<String>,
        positive_label: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: rows.len(),
                found: labels.len(),
            });
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != columns.len() {
                return Err(Error::ColumnCount {
                    row: i + 1,
                    expected: columns.len(),
                    found: row.len(),
                });
            }
        }
        Ok(Self {
            columns,
            rows,
            labels,
            missing_token: missing_token.into(),
            positive_label: positive_label.into(),
        })
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn missing_token(&self) -> &str {
        &self.missing_token
    }

    pub fn positive_label(&self) -> &str {
        &self.positive_label
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    fn row_has_missing(&self, i: usize) -> bool {
        self.labels[i] == self.missing_token || self.rows[i].contains(&self.missing_token)
    }

    /// Number of rows with label equal to the positive label.
    pub fn positive_count(&self) -> usize {
        self.labels.iter().filter(|l| **l == self.positive_label).count()
    }
}

fn split_line(line: &str, delimiter: Delimiter) -> Vec<String> {
    match delimiter {
        Delimiter::Whitespace => line.split_whitespace().map(str::to_owned).collect(),
        Delimiter::Comma => unreachable!("comma input goes through the csv reader"),
    }
}

fn read_records(text: &str, delimiter: Delimiter) -> Result<Vec<Vec<String>>> {
    match delimiter {
        Delimiter::Whitespace => Ok(text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| split_line(l, delimiter))
            .collect()),
        Delimiter::Comma => {
            let mut reader = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .trim(csv::Trim::All)
                .from_reader(text.as_bytes());
            let mut out = Vec::new();
            for record in reader.records() {
                let record = record?;
                if record.len() == 1 && record[0].is_empty() {
                    continue;
                }
                out.push(record.iter().map(str::to_owned).collect());
            }
            Ok(out)
        }
    }
}

/// Reads a delimiter-separated file according to `schema`. Rows holding the
/// missing token are kept; see [`drop_missing`]. Row numbers in errors are
/// 1-based over non-blank rows.
pub fn load_csv(path: &Path, schema: &Schema, missing_token: &str) -> Result<RawTable> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_table(&text, schema, missing_token)
}

/// [`load_csv`] on in-memory text.
pub fn parse_table(text: &str, schema: &Schema, missing_token: &str) -> Result<RawTable> {
    let label_idx = schema.label_index()?;
    let records = read_records(text, schema.delimiter)?;
    if records.is_empty() {
        return Err(Error::NoRows);
    }
    let columns: Vec<Column> = schema
        .fields
        .iter()
        .filter_map(|f| match f.kind {
            FieldKind::Numeric => Some(ColumnKind::Numeric),
            FieldKind::Categorical => Some(ColumnKind::Categorical),
            FieldKind::Label => None,
        }
        .map(|kind| Column {
            name: f.name.clone(),
            kind,
        }))
        .collect();

    let mut rows = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    for (i, mut record) in records.into_iter().enumerate() {
        if record.len() != schema.fields.len() {
            return Err(Error::ColumnCount {
                row: i + 1,
                expected: schema.fields.len(),
                found: record.len(),
            });
        }
        labels.push(record.remove(label_idx));
        for (cell, col) in record.iter().zip(&columns) {
            if col.kind == ColumnKind::Numeric && cell != missing_token && cell.parse::<f64>().is_err() {
                return Err(Error::ParseNumeric {
                    row: i + 1,
                    column: col.name.clone(),
                    value: cell.clone(),
                });
            }
        }
        rows.push(record);
    }
    RawTable::new(columns, rows, labels, missing_token, schema.positive_label.clone())
}

/// Keeps exactly the rows without a missing cell, in their original order.
pub fn drop_missing(table: &RawTable) -> Result<RawTable> {
    let keep: Vec<usize> = (0..table.n_rows()).filter(|&i| !table.row_has_missing(i)).collect();
    if keep.is_empty() {
        return Err(Error::NoRows);
    }
    Ok(RawTable {
        columns: table.columns.clone(),
        rows: keep.iter().map(|&i| table.rows[i].clone()).collect(),
        labels: keep.iter().map(|&i| table.labels[i].clone()).collect(),
        missing_token: table.missing_token.clone(),
        positive_label: table.positive_label.clone(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    /// One 0/1 indicator column per categorical level.
    Dummy,
    /// Categorical levels replaced by their rank 0, 1, 2, ...
    Integer,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnEncoding {
    Numeric { name: String },
    Categorical { name: String, levels: Vec<String> },
}

/// Level dictionaries learned from a table. Levels are sorted
/// lexicographically so codes do not depend on row order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Encoder {
    pub mode: Encoding,
    pub columns: Vec<ColumnEncoding>,
}

impl Encoder {
    pub fn fit(table: &RawTable, mode: Encoding) -> Result<Self> {
        if table.n_rows() == 0 {
            return Err(Error::NoRows);
        }
        let columns = table
            .columns
            .iter()
            .enumerate()
            .map(|(j, col)| match col.kind {
                ColumnKind::Numeric => ColumnEncoding::Numeric {
                    name: col.name.clone(),
                },
                ColumnKind::Categorical => {
                    let levels: BTreeSet<&str> = table.rows.iter().map(|r| r[j].as_str()).collect();
                    ColumnEncoding::Categorical {
                        name: col.name.clone(),
                        levels: levels.into_iter().map(str::to_owned).collect(),
                    }
                }
            })
            .collect();
        Ok(Self { mode, columns })
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for col in &self.columns {
            match (col, self.mode) {
                (ColumnEncoding::Numeric { name }, _) | (ColumnEncoding::Categorical { name, .. }, Encoding::Integer) => {
                    names.push(name.clone())
                }
                (ColumnEncoding::Categorical { name, levels }, Encoding::Dummy) => {
                    names.extend(levels.iter().map(|l| format!("{name}={l}")))
                }
            }
        }
        names
    }

    pub fn transform(&self, table: &RawTable) -> Result<EncodedDataset> {
        if table.n_rows() == 0 {
            return Err(Error::NoRows);
        }
        if table.columns.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: table.columns.len(),
            });
        }
        let names = self.feature_names();
        let d = names.len();
        let mut features = Array2::<f64>::zeros((table.n_rows(), d));
        for (i, row) in table.rows.iter().enumerate() {
            if table.row_has_missing(i) {
                return Err(Error::InvalidInput(format!(
                    "row {} contains the missing token `{}`",
                    i + 1,
                    table.missing_token
                )));
            }
            let mut out = 0;
            for (cell, col) in row.iter().zip(&self.columns) {
                match col {
                    ColumnEncoding::Numeric { name } => {
                        features[[i, out]] = cell.parse::<f64>().map_err(|_| Error::ParseNumeric {
                            row: i + 1,
                            column: name.clone(),
                            value: cell.clone(),
                        })?;
                        out += 1;
                    }
                    ColumnEncoding::Categorical { name, levels } => {
                        let code = levels.binary_search(cell).map_err(|_| {
                            Error::InvalidInput(format!("row {}: unknown level `{cell}` in column `{name}`", i + 1))
                        })?;
                        match self.mode {
                            Encoding::Integer => {
                                features[[i, out]] = code as f64;
                                out += 1;
                            }
                            Encoding::Dummy => {
                                features[[i, out + code]] = 1.0;
                                out += levels.len();
                            }
                        }
                    }
                }
            }
        }
        let labels = table
            .labels
            .iter()
            .map(|l| u8::from(*l == table.positive_label))
            .collect();
        EncodedDataset::new(features, labels, names)
    }

    /// Maps encoded rows back to a text table (labels become "1"/"0").
    pub fn decode(&self, data: &EncodedDataset) -> Result<RawTable> {
        let mut rows = Vec::with_capacity(data.n_samples());
        for (i, x) in data.features.axis_iter(Axis(0)).enumerate() {
            let mut row = Vec::with_capacity(self.columns.len());
            let mut at = 0;
            for col in &self.columns {
                match col {
                    ColumnEncoding::Numeric { .. } => {
                        row.push(format!("{}", x[at]));
                        at += 1;
                    }
                    ColumnEncoding::Categorical { levels, .. } => {
                        let code = match self.mode {
                            Encoding::Integer => {
                                at += 1;
                                x[at - 1] as usize
                            }
                            Encoding::Dummy => {
                                let group = x.slice(ndarray::s![at..at + levels.len()]);
                                at += levels.len();
                                group.iter().position(|v| *v == 1.0).unwrap_or(usize::MAX)
                            }
                        };
                        let level = levels.get(code).ok_or_else(|| {
                            Error::InvalidInput(format!("row {}: code {code} out of range", i + 1))
                        })?;
                        row.push(level.clone());
                    }
                }
            }
            rows.push(row);
        }
        let columns = self
            .columns
            .iter()
            .map(|c| match c {
                ColumnEncoding::Numeric { name } => Column {
                    name: name.clone(),
                    kind: ColumnKind::Numeric,
                },
                ColumnEncoding::Categorical { name, .. } => Column {
                    name: name.clone(),
                    kind: ColumnKind::Categorical,
                },
            })
            .collect();
        let labels = data.labels.iter().map(|l| l.to_string()).collect();
        RawTable::new(columns, rows, labels, DEFAULT_MISSING_TOKEN, "1")
    }
}

/// Categorical columns become one indicator per level.
pub fn encode_dummy(table: &RawTable) -> Result<EncodedDataset> {
    Encoder::fit(table, Encoding::Dummy)?.transform(table)
}

/// Categorical columns become integer level codes; the column count is unchanged.
pub fn encode_integer(table: &RawTable) -> Result<EncodedDataset> {
    Encoder::fit(table, Encoding::Integer)?.transform(table)
}

/// Per-column affine map `(x - mean) / std_dev` fitted on a training set.
/// Columns that were constant in training carry mean 0 and std_dev 1, i.e.
/// they pass through unchanged, and are flagged in `constant`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Vec<f64>,
    pub std_dev: Vec<f64>,
    pub constant: Vec<bool>,
}

impl Standardization {
    pub fn fit(features: &Array2<f64>) -> Self {
        let n = features.nrows() as f64;
        let d = features.ncols();
        let mut mean = Vec::with_capacity(d);
        let mut std_dev = Vec::with_capacity(d);
        let mut constant = Vec::with_capacity(d);
        for col in features.axis_iter(Axis(1)) {
            let m = col.sum() / n;
            let var = col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
            let s = var.sqrt();
            if s <= 1e-12 * m.abs().max(1.0) {
                mean.push(0.0);
                std_dev.push(1.0);
                constant.push(true);
            } else {
                mean.push(m);
                std_dev.push(s);
                constant.push(false);
            }
        }
        Self {
            mean,
            std_dev,
            constant,
        }
    }

    pub fn apply(&self, features: &Array2<f64>) -> Result<Array2<f64>> {
        if features.ncols() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: features.ncols(),
            });
        }
        let mut out = features.clone();
        for (j, mut col) in out.axis_iter_mut(Axis(1)).enumerate() {
            let (m, s) = (self.mean[j], self.std_dev[j]);
            col.mapv_inplace(|x| (x - m) / s);
        }
        Ok(out)
    }

    pub fn apply_row(&self, x: &mut [f64]) -> Result<()> {
        if x.len() != self.mean.len() {
            return Err(Error::DimensionMismatch {
                expected: self.mean.len(),
                found: x.len(),
            });
        }
        for (j, v) in x.iter_mut().enumerate() {
            *v = (*v - self.mean[j]) / self.std_dev[j];
        }
        Ok(())
    }
}

/// Numeric design matrix with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDataset {
    features: Array2<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
    standardization: Option<Standardization>,
}

impl EncodedDataset {
    pub fn new(features: Array2<f64>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        let (n, d) = features.dim();
        if n == 0 {
            return Err(Error::NoRows);
        }
        if d == 0 {
            return Err(Error::InvalidInput("dataset has no feature columns".into()));
        }
        if labels.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        if feature_names.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: feature_names.len(),
            });
        }
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite feature value {v}")));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidInput("labels must be 0 or 1".into()));
        }
        Ok(Self {
            features,
            labels,
            feature_names,
            standardization: None,
        })
    }

    pub fn with_standardization(mut self, s: Standardization) -> Result<Self> {
        if s.mean.len() != self.n_features() || s.std_dev.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("standardization does not match the feature columns".into()));
        }
        self.standardization = Some(s);
        Ok(self)
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn standardization(&self) -> Option<&Standardization> {
        self.standardization.as_ref()
    }

    pub fn n_samples(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// `[count of label 0, count of label 1]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            standardization: self.standardization.clone(),
        }
    }

    /// Appends rows; the caller guarantees finiteness and binary labels.
    pub(crate) fn append_rows(&mut self, rows: Array2<f64>, labels: &[u8]) -> Result<()> {
        self.features
            .append(Axis(0), rows.view())
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        self.labels.extend_from_slice(labels);
        Ok(())
    }

    /// CSV with a header of feature names followed by `label`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.push("label");
        w.write_record(&header)?;
        for (row, label) in self.features.axis_iter(Axis(0)).zip(&self.labels) {
            let mut rec: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            rec.push(label.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    /// Reads the format written by [`EncodedDataset::write_csv`].
    pub fn read_csv<R: std::io::Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.len() < 2 || &header[header.len() - 1] != "label" {
            return Err(Error::Schema("expected a header ending in `label`".into()));
        }
        let d = header.len() - 1;
        let names: Vec<String> = header.iter().take(d).map(str::to_owned).collect();
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            for (j, cell) in rec.iter().enumerate() {
                let v: f64 = cell.parse().map_err(|_| Error::ParseNumeric {
                    row: i + 1,
                    column: header[j].to_owned(),
                    value: cell.to_owned(),
                })?;
                if j == d {
                    labels.push(if v == 1.0 { 1 } else if v == 0.0 { 0 } else { 2 });
                } else {
                    values.push(v);
                }
            }
        }
        let n = labels.len();
        let features = Array2::from_shape_vec((n, d), values).map_err(|e| Error::InvalidInput(e.to_string()))?;
        Self::new(features, labels, names)
    }
}

/// Train fraction and seed of the random split.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "train fraction {train_fraction} is not in (0, 1)"
            )));
        }
        Ok(Self { train_fraction, seed })
    }

    pub fn train_size(&self, n: usize) -> usize {
        (self.train_fraction * n as f64).floor() as usize
    }
}

/// Seeded uniform permutation; the first `⌊fraction·N⌋` permuted rows form the
/// training set.
pub fn train_test_split(data: &EncodedDataset, spec: SplitSpec) -> Result<(EncodedDataset, EncodedDataset)> {
    let n = data.n_samples();
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 rows to split, got {n}")));
    }
    let spec = SplitSpec::new(spec.train_fraction, spec.seed)?;
    let n_train = spec.train_size(n);
    if n_train == 0 || n_train == n {
        return Err(Error::EmptyPartition {
            train: n_train,
            test: n - n_train,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    Ok((data.select_rows(&order[..n_train]), data.select_rows(&order[n_train..])))
}

/// Fits column means and population standard deviations on `train` and
/// applies them to both sets.
pub fn standardize_fit_apply(
    train: &EncodedDataset,
    test: &EncodedDataset,
) -> Result<(EncodedDataset, EncodedDataset)> {
    if train.n_features() != test.n_features() {
        return Err(Error::DimensionMismatch {
            expected: train.n_features(),
            found: test.n_features(),
        });
    }
    if train.feature_names != test.feature_names {
        return Err(Error::Schema("train and test feature names differ".into()));
    }
    let s = Standardization::fit(&train.features);
    let transform = |data: &EncodedDataset| -> Result<EncodedDataset> {
        EncodedDataset::new(s.apply(&data.features)?, data.labels.clone(), data.feature_names.clone())?
            .with_standardization(s.clone())
    };
    Ok((transform(train)?, transform(test)?))
}
