//! Dataset construction and replayable preprocessing.
//!
//! Categorical columns are dummy coded with the lexicographically first level as the
//! reference, columns constant over the labeled rows are dropped, and the remaining
//! columns are centered (and optionally scaled) by labeled-data statistics. The same
//! affine map is applied to the unlabeled rows and can be replayed on new tables.

use std::collections::{BTreeSet, HashSet};
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use crate::loss::LossFamily as ResponseKind;

pub const DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<f64>),
    Categorical(Vec<String>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn kind(&self) -> &'static str {
        match self {
            ColumnData::Numeric(_) => "numeric",
            ColumnData::Categorical(_) => "categorical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn categorical<S: Into<String>>(
        name: impl Into<String>,
        values: impl IntoIterator<Item = S>,
    ) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(values.into_iter().map(Into::into).collect()),
        }
    }
}

/// Named columns of equal length with no missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    columns: Vec<Column>,
    nrows: usize,
}

fn is_missing_token(s: &str) -> bool {
    matches!(s.trim(), "" | "NA" | "NaN" | "nan" | "?")
}

impl RawTable {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let nrows = columns.first().map_or(0, |c| c.data.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate column `{}`",
                    c.name
                )));
            }
            if c.data.len() != nrows {
                return Err(Error::Dimension(format!(
                    "column `{}` has {} rows, expected {nrows}",
                    c.name,
                    c.data.len()
                )));
            }
            match &c.data {
                ColumnData::Numeric(v) => {
                    if let Some(row) = v.iter().position(|x| !x.is_finite()) {
                        return Err(Error::MissingValue {
                            row,
                            column: c.name.clone(),
                        });
                    }
                }
                ColumnData::Categorical(v) => {
                    if let Some(row) = v.iter().position(|s| is_missing_token(s)) {
                        return Err(Error::MissingValue {
                            row,
                            column: c.name.clone(),
                        });
                    }
                }
            }
        }
        Ok(Self { columns, nrows })
    }

    /// Numeric table with columns named `{prefix}1 .. {prefix}p`.
    pub fn from_matrix(x: &DMatrix<f64>, prefix: &str) -> Result<Self> {
        let columns = x
            .column_iter()
            .enumerate()
            .map(|(j, c)| {
                Column::numeric(format!("{prefix}{}", j + 1), c.iter().copied().collect())
            })
            .collect();
        Self::new(columns)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    /// Removes a numeric column and returns it alongside the remaining table.
    pub fn split_numeric(mut self, name: &str) -> Result<(Self, Vec<f64>)> {
        let idx = self
            .columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))?;
        let col = self.columns.remove(idx);
        match col.data {
            ColumnData::Numeric(v) => Ok((self, v)),
            ColumnData::Categorical(_) => Err(Error::ColumnKind {
                column: name.to_string(),
                expected: "numeric",
            }),
        }
    }

    pub fn without(mut self, name: &str) -> Self {
        self.columns.retain(|c| c.name != name);
        self
    }
}

/// Columns forced to be read as categorical even when every value parses as a number.
#[derive(Debug, Clone, Default)]
pub struct SchemaHints {
    pub categorical: BTreeSet<String>,
}

pub fn read_csv(path: impl AsRef<Path>, hints: &SchemaHints) -> Result<RawTable> {
    let file = std::fs::File::open(path.as_ref())?;
    read_csv_from(file, hints)
}

pub fn read_csv_from<R: Read>(reader: R, hints: &SchemaHints) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::Empty("csv has no header row".into()));
    }
    let mut cells: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                row: row + 1,
                column: rec.len(),
                message: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (j, field) in rec.iter().enumerate() {
            if is_missing_token(field) {
                return Err(Error::MissingValue {
                    row: row + 1,
                    column: headers[j].clone(),
                });
            }
            cells[j].push(field.to_string());
        }
    }

    let columns = headers
        .into_iter()
        .zip(cells)
        .map(|(name, raw)| {
            let parsed: Option<Vec<f64>> = if hints.categorical.contains(&name) {
                None
            } else {
                raw.iter().map(|s| s.parse::<f64>().ok()).collect()
            };
            match parsed {
                Some(v) => Column::numeric(name, v),
                None => Column {
                    name,
                    data: ColumnData::Categorical(raw),
                },
            }
        })
        .collect();
    RawTable::new(columns)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnseenLevelPolicy {
    #[default]
    Error,
    /// Encode unseen levels like the reference level (all dummies zero).
    Reference,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ColumnEncoding {
    Numeric {
        name: String,
        kept: bool,
    },
    Categorical {
        name: String,
        /// Sorted; the first entry is the reference level when `drop_first` is set.
        levels: Vec<String>,
        drop_first: bool,
        kept: bool,
    },
}

impl ColumnEncoding {
    pub fn name(&self) -> &str {
        match self {
            ColumnEncoding::Numeric { name, .. } | ColumnEncoding::Categorical { name, .. } => name,
        }
    }

    pub fn kept(&self) -> bool {
        match self {
            ColumnEncoding::Numeric { kept, .. } | ColumnEncoding::Categorical { kept, .. } => {
                *kept
            }
        }
    }

    fn dummy_levels(&self) -> &[String] {
        match self {
            ColumnEncoding::Categorical {
                levels, drop_first, ..
            } => {
                if *drop_first {
                    &levels[1..]
                } else {
                    levels
                }
            }
            ColumnEncoding::Numeric { .. } => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocess {
    pub columns: Vec<ColumnEncoding>,
    /// Indices into `columns` that survive constant-column removal.
    pub kept_columns: Vec<usize>,
    /// Names of the encoded output columns, in matrix order.
    pub feature_names: Vec<String>,
    pub center: Vec<f64>,
    pub scale: Option<Vec<f64>>,
    pub labels_center: f64,
    pub response: ResponseKind,
    #[serde(default)]
    pub unseen_level: UnseenLevelPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub scale: bool,
    pub unseen_level: UnseenLevelPolicy,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            scale: true,
            unseen_level: UnseenLevelPolicy::Error,
        }
    }
}

fn is_constant(values: &[f64]) -> bool {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    values.is_empty() || hi - lo <= 1e-12 * (1.0 + hi.abs())
}

impl Preprocess {
    pub fn ncols(&self) -> usize {
        self.center.len()
    }

    /// Names of categorical source columns, used as read hints when loading new data.
    pub fn categorical_columns(&self) -> SchemaHints {
        SchemaHints {
            categorical: self
                .columns
                .iter()
                .filter_map(|c| match c {
                    ColumnEncoding::Categorical { name, .. } => Some(name.clone()),
                    ColumnEncoding::Numeric { .. } => None,
                })
                .collect(),
        }
    }

    /// Encoded but not yet centered matrix.
    fn encode(&self, table: &RawTable) -> Result<DMatrix<f64>> {
        let n = table.nrows();
        let mut out = DMatrix::zeros(n, self.feature_names.len());
        let mut j = 0;
        for &idx in &self.kept_columns {
            let enc = &self.columns[idx];
            let col = table
                .column(enc.name())
                .ok_or_else(|| Error::MissingColumn(enc.name().to_string()))?;
            match (enc, &col.data) {
                (ColumnEncoding::Numeric { .. }, ColumnData::Numeric(v)) => {
                    for (i, &x) in v.iter().enumerate() {
                        out[(i, j)] = x;
                    }
                    j += 1;
                }
                (ColumnEncoding::Categorical { levels, .. }, ColumnData::Categorical(v)) => {
                    let dummies = enc.dummy_levels();
                    for (i, s) in v.iter().enumerate() {
                        if let Some(k) = dummies.iter().position(|l| l == s) {
                            out[(i, j + k)] = 1.0;
                        } else if !levels.contains(s)
                            && self.unseen_level == UnseenLevelPolicy::Error
                        {
                            return Err(Error::UnseenLevel {
                                column: enc.name().to_string(),
                                level: s.clone(),
                            });
                        }
                    }
                    j += dummies.len();
                }
                (ColumnEncoding::Numeric { name, .. }, _) => {
                    return Err(Error::ColumnKind {
                        column: name.clone(),
                        expected: "numeric",
                    })
                }
                (ColumnEncoding::Categorical { name, .. }, _) => {
                    return Err(Error::ColumnKind {
                        column: name.clone(),
                        expected: "categorical",
                    })
                }
            }
        }
        Ok(out)
    }

    /// Applies the stored column selection, encoding, centering and scaling to `table`.
    pub fn replay(&self, table: &RawTable) -> Result<DMatrix<f64>> {
        let mut x = self.encode(table)?;
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let c = self.center[j];
            match &self.scale {
                Some(s) => col.apply(|v| *v = (*v - c) / s[j]),
                None => col.apply(|v| *v -= c),
            }
        }
        Ok(x)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&PreprocessDocument {
            format: "s2net-preprocess".into(),
            version: DOCUMENT_VERSION,
            preprocess: self.clone(),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: PreprocessDocument = serde_json::from_str(s)?;
        check_version(doc.version)?;
        Ok(doc.preprocess)
    }
}

pub(crate) fn check_version(found: u32) -> Result<()> {
    if found == DOCUMENT_VERSION {
        Ok(())
    } else {
        Err(Error::Version {
            found,
            expected: DOCUMENT_VERSION,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct PreprocessDocument {
    format: String,
    version: u32,
    preprocess: Preprocess,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub xl: DMatrix<f64>,
    pub yl: DVector<f64>,
    /// `n_U x p`; zero rows when no unlabeled data was supplied.
    pub xu: DMatrix<f64>,
    pub response: ResponseKind,
    pub preprocess: Preprocess,
}

/// Checks a response vector and returns it transformed for fitting along with its mean.
pub fn prepare_labels(y: &[f64], response: ResponseKind) -> Result<(DVector<f64>, f64)> {
    if y.is_empty() {
        return Err(Error::Empty("no labeled rows".into()));
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::MissingValue {
            row,
            column: "<label>".into(),
        });
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    match response {
        ResponseKind::Linear => Ok((
            DVector::from_iterator(y.len(), y.iter().map(|v| v - mean)),
            mean,
        )),
        ResponseKind::Logistic => {
            if let Some((row, &value)) = y.iter().enumerate().find(|(_, &v)| v != 0.0 && v != 1.0) {
                return Err(Error::InvalidLabel { row, value });
            }
            Ok((DVector::from_column_slice(y), mean))
        }
    }
}

pub fn build_dataset(
    xl: &RawTable,
    yl: &[f64],
    xu: Option<&RawTable>,
    response: ResponseKind,
    opts: BuildOptions,
) -> Result<Dataset> {
    let n = xl.nrows();
    if n == 0 {
        return Err(Error::Empty("no labeled rows".into()));
    }
    if yl.len() != n {
        return Err(Error::Dimension(format!(
            "{n} labeled rows but {} labels",
            yl.len()
        )));
    }
    if let Some(u) = xu {
        for c in xl.columns() {
            let other = u
                .column(&c.name)
                .ok_or_else(|| Error::MissingColumn(c.name.clone()))?;
            if c.data.kind() != other.data.kind() {
                return Err(Error::ColumnKind {
                    column: c.name.clone(),
                    expected: c.data.kind(),
                });
            }
        }
        if u.ncols() != xl.ncols() {
            return Err(Error::Dimension(format!(
                "unlabeled table has {} columns, labeled has {}",
                u.ncols(),
                xl.ncols()
            )));
        }
    }
    let (yl_fit, labels_center) = prepare_labels(yl, response)?;

    let mut columns = Vec::with_capacity(xl.ncols());
    let mut kept_columns = Vec::new();
    let mut feature_names = Vec::new();
    for (idx, c) in xl.columns().iter().enumerate() {
        let enc = match &c.data {
            ColumnData::Numeric(v) => {
                let kept = !is_constant(v);
                if kept {
                    feature_names.push(c.name.clone());
                }
                ColumnEncoding::Numeric {
                    name: c.name.clone(),
                    kept,
                }
            }
            ColumnData::Categorical(v) => {
                let levels: Vec<String> = v
                    .iter()
                    .cloned()
                    .collect::<BTreeSet<_>>()
                    .into_iter()
                    .collect();
                let kept = levels.len() > 1;
                if kept {
                    feature_names.extend(levels[1..].iter().map(|l| format!("{}{l}", c.name)));
                }
                ColumnEncoding::Categorical {
                    name: c.name.clone(),
                    levels,
                    drop_first: true,
                    kept,
                }
            }
        };
        if enc.kept() {
            kept_columns.push(idx);
        }
        columns.push(enc);
    }
    if feature_names.is_empty() {
        return Err(Error::Empty("every labeled column is constant".into()));
    }

    let mut pre = Preprocess {
        columns,
        kept_columns,
        feature_names,
        center: Vec::new(),
        scale: None,
        labels_center,
        response,
        unseen_level: opts.unseen_level,
    };
    let raw = pre.encode(xl)?;
    pre.center = raw.column_iter().map(|c| c.sum() / n as f64).collect();
    if opts.scale {
        let sd = raw
            .column_iter()
            .zip(&pre.center)
            .map(|(c, &m)| {
                let ss: f64 = c.iter().map(|v| (v - m) * (v - m)).sum();
                (ss / (n as f64 - 1.0)).sqrt()
            })
            .collect();
        pre.scale = Some(sd);
    }

    let xl_out = pre.replay(xl)?;
    let xu_out = match xu {
        Some(u) => pre.replay(u)?,
        None => DMatrix::zeros(0, pre.ncols()),
    };
    Ok(Dataset {
        xl: xl_out,
        yl: yl_fit,
        xu: xu_out,
        response,
        preprocess: pre,
    })
}

#[derive(Serialize, Deserialize)]
struct DatasetDocument {
    format: String,
    version: u32,
    response: ResponseKind,
    preprocess: Preprocess,
    xl: Vec<Vec<f64>>,
    yl: Vec<f64>,
    xu: Vec<Vec<f64>>,
}

fn rows(x: &DMatrix<f64>) -> Vec<Vec<f64>> {
    x.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &[Vec<f64>], p: usize) -> Result<DMatrix<f64>> {
    if let Some(r) = rows.iter().find(|r| r.len() != p) {
        return Err(Error::Dimension(format!(
            "row of length {}, expected {p}",
            r.len()
        )));
    }
    Ok(DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]))
}

impl Dataset {
    pub fn n_labeled(&self) -> usize {
        self.xl.nrows()
    }

    pub fn n_unlabeled(&self) -> usize {
        self.xu.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.xl.ncols()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&DatasetDocument {
            format: "s2net-dataset".into(),
            version: DOCUMENT_VERSION,
            response: self.response,
            preprocess: self.preprocess.clone(),
            xl: rows(&self.xl),
            yl: self.yl.iter().copied().collect(),
            xu: rows(&self.xu),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: DatasetDocument = serde_json::from_str(s)?;
        check_version(doc.version)?;
        let p = doc.preprocess.ncols();
        let xl = from_rows(&doc.xl, p)?;
        if xl.nrows() != doc.yl.len() {
            return Err(Error::Dimension("labeled rows and labels differ".into()));
        }
        Ok(Self {
            xl,
            yl: DVector::from_vec(doc.yl),
            xu: from_rows(&doc.xu, p)?,
            response: doc.response,
            preprocess: doc.preprocess,
        })
    }
}
