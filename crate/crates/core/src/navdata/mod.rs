//! Column-major labeled container shared by every parser and algorithm.
//!
//! Rows are named quantities (`gps_millis`, `raw_pr_m`, ...) and columns are
//! measurement instances. Numeric rows are one dense `Vec<f64>` each, so
//! whole-row arithmetic stays a contiguous slice operation.

pub mod names;

mod csv_io;

use indexmap::IndexMap;
use std::fmt;
use thiserror::Error;

pub use names::is_standard_name;

#[derive(Debug, Error)]
pub enum NavDataError {
    #[error("row '{name}' has length {len}, expected {expected}")]
    LengthMismatch {
        name: String,
        len: usize,
        expected: usize,
    },
    #[error("invalid row name '{0}': must be non-empty and match [a-z0-9_]+")]
    InvalidName(String),
    #[error("duplicate row name '{0}'")]
    DuplicateName(String),
    #[error("unknown row '{name}'{}", fmt_candidates(.candidates))]
    UnknownRow {
        name: String,
        candidates: Vec<String>,
    },
    #[error("row '{0}' is categorical, expected numeric")]
    NotNumeric(String),
    #[error("row '{0}' is numeric, expected categorical")]
    NotCategorical(String),
    #[error("gps_millis must be numeric and finite")]
    InvalidGpsMillis,
    #[error("predicate {0:?} is not defined for categorical row '{1}'")]
    OrderingOnCategorical(Predicate, String),
    #[error("value type does not match row '{0}'")]
    ValueTypeMismatch(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("column index {index} out of range for N={len}")]
    ColumnOutOfRange { index: usize, len: usize },
    #[error("delta_t must be positive and finite, got {0}")]
    InvalidDelta(f64),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

fn fmt_candidates(candidates: &[String]) -> String {
    if candidates.is_empty() {
        String::new()
    } else {
        format!(" (did you mean: {}?)", candidates.join(", "))
    }
}

/// Payload of one row.
#[derive(Debug, Clone, PartialEq)]
pub enum Row {
    /// Dense float64 values; NaN means missing.
    Numeric(Vec<f64>),
    /// String values; "" means missing.
    Categorical(Vec<String>),
}

impl Row {
    pub fn len(&self) -> usize {
        match self {
            Row::Numeric(v) => v.len(),
            Row::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Row::Numeric(_))
    }

    fn take(&self, indices: &[usize]) -> Row {
        match self {
            Row::Numeric(v) => Row::Numeric(indices.iter().map(|&i| v[i]).collect()),
            Row::Categorical(v) => Row::Categorical(indices.iter().map(|&i| v[i].clone()).collect()),
        }
    }

    fn bit_eq(&self, other: &Row) -> bool {
        match (self, other) {
            (Row::Numeric(a), Row::Numeric(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|(x, y)| x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()))
            }
            (Row::Categorical(a), Row::Categorical(b)) => a == b,
            _ => false,
        }
    }
}

/// Scalar used by [`NavData::filter`].
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Text(String),
}

impl From<f64> for Value {
    fn from(v: f64) -> Self {
        Value::Number(v)
    }
}

impl From<&str> for Value {
    fn from(v: &str) -> Self {
        Value::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predicate {
    Eq,
    Neq,
    Lt,
    Gt,
    Geq,
    Leq,
}

impl Predicate {
    fn is_ordering(self) -> bool {
        !matches!(self, Predicate::Eq | Predicate::Neq)
    }

    fn holds_f64(self, lhs: f64, rhs: f64) -> bool {
        if lhs.is_nan() || rhs.is_nan() {
            return false;
        }
        match self {
            Predicate::Eq => lhs == rhs,
            Predicate::Neq => lhs != rhs,
            Predicate::Lt => lhs < rhs,
            Predicate::Gt => lhs > rhs,
            Predicate::Geq => lhs >= rhs,
            Predicate::Leq => lhs <= rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Append columns; both tables carry the same row names.
    Columns,
    /// Append rows; both tables have the same N.
    Rows,
}

/// Labeled column-major table.
#[derive(Debug, Clone, Default)]
pub struct NavData {
    rows: IndexMap<String, Row>,
    len: usize,
}

pub(crate) fn valid_row_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

impl NavData {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a table from `(name, row)` pairs, checking every invariant.
    pub fn from_rows<I, S>(rows: I) -> Result<Self, NavDataError>
    where
        I: IntoIterator<Item = (S, Row)>,
        S: Into<String>,
    {
        let mut out = NavData::new();
        for (name, row) in rows {
            out.insert(name, row)?;
        }
        Ok(out)
    }

    /// Number of columns (measurement instances).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row_names(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.rows.contains_key(name)
    }

    pub fn row(&self, name: &str) -> Result<&Row, NavDataError> {
        self.rows.get(name).ok_or_else(|| self.unknown(name))
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64], NavDataError> {
        match self.row(name)? {
            Row::Numeric(v) => Ok(v),
            Row::Categorical(_) => Err(NavDataError::NotNumeric(name.to_string())),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<&[String], NavDataError> {
        match self.row(name)? {
            Row::Categorical(v) => Ok(v),
            Row::Numeric(_) => Err(NavDataError::NotCategorical(name.to_string())),
        }
    }

    /// Inserts or replaces a row. The first row fixes N for an empty table.
    pub fn insert(&mut self, name: impl Into<String>, row: Row) -> Result<(), NavDataError> {
        let name = name.into();
        if !valid_row_name(&name) {
            return Err(NavDataError::InvalidName(name));
        }
        let replacing = self.rows.contains_key(&name);
        let expected = if self.rows.is_empty() || (replacing && self.rows.len() == 1) {
            row.len()
        } else {
            self.len
        };
        if row.len() != expected {
            return Err(NavDataError::LengthMismatch {
                name,
                len: row.len(),
                expected,
            });
        }
        if name == names::GPS_MILLIS {
            match &row {
                Row::Numeric(v) if v.iter().all(|t| t.is_finite()) => {}
                _ => return Err(NavDataError::InvalidGpsMillis),
            }
        }
        if !is_standard_name(&name) {
            log::debug!("row '{name}' is not a standard name");
        }
        self.len = expected;
        self.rows.insert(name, row);
        Ok(())
    }

    pub fn insert_numeric(
        &mut self,
        name: impl Into<String>,
        values: Vec<f64>,
    ) -> Result<(), NavDataError> {
        self.insert(name, Row::Numeric(values))
    }

    pub fn insert_categorical(
        &mut self,
        name: impl Into<String>,
        values: Vec<String>,
    ) -> Result<(), NavDataError> {
        self.insert(name, Row::Categorical(values))
    }

    pub fn remove(&mut self, name: &str) -> Option<Row> {
        let removed = self.rows.shift_remove(name);
        if self.rows.is_empty() {
            self.len = 0;
        }
        removed
    }

    /// Applies `f` in place to every element of a numeric row.
    pub fn map_numeric<F>(&mut self, name: &str, mut f: F) -> Result<(), NavDataError>
    where
        F: FnMut(f64) -> f64,
    {
        let unknown = self.unknown(name);
        match self.rows.get_mut(name) {
            Some(Row::Numeric(v)) if name == names::GPS_MILLIS => {
                let mapped: Vec<f64> = v.iter().map(|&x| f(x)).collect();
                if mapped.iter().any(|t| !t.is_finite()) {
                    return Err(NavDataError::InvalidGpsMillis);
                }
                *v = mapped;
                Ok(())
            }
            Some(Row::Numeric(v)) => {
                for x in v.iter_mut() {
                    *x = f(*x);
                }
                Ok(())
            }
            Some(Row::Categorical(_)) => Err(NavDataError::NotNumeric(name.to_string())),
            None => Err(unknown),
        }
    }

    /// Sub-table holding only the listed columns, in the given order.
    pub fn columns(&self, indices: &[usize]) -> Result<NavData, NavDataError> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= self.len) {
            return Err(NavDataError::ColumnOutOfRange {
                index: bad,
                len: self.len,
            });
        }
        Ok(self.take_unchecked(indices))
    }

    fn take_unchecked(&self, indices: &[usize]) -> NavData {
        NavData {
            rows: self
                .rows
                .iter()
                .map(|(k, r)| (k.clone(), r.take(indices)))
                .collect(),
            len: if self.rows.is_empty() { 0 } else { indices.len() },
        }
    }

    /// Returns the named rows in the requested order; N is unchanged.
    pub fn select_rows<S: AsRef<str>>(&self, names: &[S]) -> Result<NavData, NavDataError> {
        let mut rows = IndexMap::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            if rows.contains_key(name) {
                return Err(NavDataError::DuplicateName(name.to_string()));
            }
            rows.insert(name.to_string(), self.row(name)?.clone());
        }
        let len = if rows.is_empty() { 0 } else { self.len };
        Ok(NavData { rows, len })
    }

    /// Copy holding the columns where `row <predicate> value` holds.
    /// Missing values (NaN / "") never satisfy a predicate.
    pub fn filter(
        &self,
        row: &str,
        predicate: Predicate,
        value: impl Into<Value>,
    ) -> Result<NavData, NavDataError> {
        let value = value.into();
        let keep: Vec<usize> = match (self.row(row)?, &value) {
            (Row::Numeric(v), Value::Number(rhs)) => (0..v.len())
                .filter(|&i| predicate.holds_f64(v[i], *rhs))
                .collect(),
            (Row::Categorical(_), _) if predicate.is_ordering() => {
                return Err(NavDataError::OrderingOnCategorical(
                    predicate,
                    row.to_string(),
                ))
            }
            (Row::Categorical(v), Value::Text(rhs)) => (0..v.len())
                .filter(|&i| {
                    !v[i].is_empty()
                        && match predicate {
                            Predicate::Eq => v[i] == *rhs,
                            _ => v[i] != *rhs,
                        }
                })
                .collect(),
            _ => return Err(NavDataError::ValueTypeMismatch(row.to_string())),
        };
        Ok(self.take_unchecked(&keep))
    }

    /// Joins two tables along `axis`.
    pub fn concat(&self, other: &NavData, axis: Axis) -> Result<NavData, NavDataError> {
        match axis {
            Axis::Columns => {
                if self.rows.is_empty() {
                    return Ok(other.clone());
                }
                if other.rows.is_empty() {
                    return Ok(self.clone());
                }
                if self.rows.len() != other.rows.len()
                    || self.rows.keys().any(|k| !other.rows.contains_key(k))
                {
                    return Err(NavDataError::SchemaMismatch(
                        "column concat requires identical row names".into(),
                    ));
                }
                let mut rows = IndexMap::with_capacity(self.rows.len());
                for (name, a) in &self.rows {
                    let merged = match (a, &other.rows[name]) {
                        (Row::Numeric(a), Row::Numeric(b)) => {
                            Row::Numeric(a.iter().chain(b).copied().collect())
                        }
                        (Row::Categorical(a), Row::Categorical(b)) => {
                            Row::Categorical(a.iter().chain(b).cloned().collect())
                        }
                        // A numeric row with no values has no evidence of its type.
                        (Row::Numeric(a), Row::Categorical(b)) if a.is_empty() => {
                            Row::Categorical(b.clone())
                        }
                        (Row::Categorical(a), Row::Numeric(b)) if b.is_empty() => {
                            Row::Categorical(a.clone())
                        }
                        _ => {
                            return Err(NavDataError::SchemaMismatch(format!(
                                "row '{name}' differs in type"
                            )))
                        }
                    };
                    rows.insert(name.clone(), merged);
                }
                Ok(NavData {
                    rows,
                    len: self.len + other.len,
                })
            }
            Axis::Rows => {
                if !self.rows.is_empty() && !other.rows.is_empty() && self.len != other.len {
                    return Err(NavDataError::SchemaMismatch(format!(
                        "row concat requires equal N ({} vs {})",
                        self.len, other.len
                    )));
                }
                if let Some(dup) = other.rows.keys().find(|k| self.rows.contains_key(*k)) {
                    return Err(NavDataError::SchemaMismatch(format!(
                        "row '{dup}' present in both tables"
                    )));
                }
                let mut out = self.clone();
                for (k, r) in &other.rows {
                    out.rows.insert(k.clone(), r.clone());
                }
                out.len = self.len.max(other.len);
                Ok(out)
            }
        }
    }

    /// Greedy time binning: a bin opens at the earliest unassigned time and
    /// collects every column within `delta_t_ms` of it. Bins come out in
    /// ascending time and keep the original column order inside each bin.
    pub fn loop_time(&self, delta_t_ms: f64) -> Result<Vec<(f64, NavData)>, NavDataError> {
        if !(delta_t_ms > 0.0 && delta_t_ms.is_finite()) {
            return Err(NavDataError::InvalidDelta(delta_t_ms));
        }
        let times = self.numeric(names::GPS_MILLIS)?;
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));

        let mut bins = Vec::new();
        let mut start = 0;
        while start < order.len() {
            let t0 = times[order[start]];
            let mut end = start;
            while end < order.len() && times[order[end]] - t0 < delta_t_ms {
                end += 1;
            }
            let mut members = order[start..end].to_vec();
            members.sort_unstable();
            bins.push((t0, self.take_unchecked(&members)));
            start = end;
        }
        Ok(bins)
    }

    /// Value equality treating NaN as equal to NaN.
    pub fn value_eq(&self, other: &NavData) -> bool {
        self.len == other.len
            && self.rows.len() == other.rows.len()
            && self
                .rows
                .iter()
                .zip(&other.rows)
                .all(|((ka, a), (kb, b))| ka == kb && a.bit_eq(b))
    }

    fn unknown(&self, name: &str) -> NavDataError {
        let mut candidates: Vec<(usize, &String)> = self
            .rows
            .keys()
            .map(|k| (edit_distance(name, k), k))
            .filter(|(d, _)| *d <= 2)
            .collect();
        candidates.sort();
        NavDataError::UnknownRow {
            name: name.to_string(),
            candidates: candidates.into_iter().map(|(_, k)| k.clone()).collect(),
        }
    }
}

impl PartialEq for NavData {
    fn eq(&self, other: &Self) -> bool {
        self.value_eq(other)
    }
}

impl fmt::Display for NavData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "NavData with {} rows, N={}", self.rows.len(), self.len)?;
        for (name, row) in &self.rows {
            let kind = if row.is_numeric() { "f64" } else { "str" };
            writeln!(f, "  {name} [{kind}]")?;
        }
        Ok(())
    }
}

/// Levenshtein distance over bytes; row names are ASCII.
fn edit_distance(a: &str, b: &str) -> usize {
    let (a, b) = (a.as_bytes(), b.as_bytes());
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}
