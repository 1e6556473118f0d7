//! Immutable column-oriented datasets with frozen factor vocabularies.

use indexmap::IndexMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("dataset has no rows")]
    Empty,
    #[error("column {0:?} declared twice")]
    DuplicateColumn(String),
    #[error("column {0:?} not found")]
    MissingColumn(String),
    #[error("column {column:?} has {got} values, expected {expected}")]
    LengthMismatch {
        column: String,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value in column {column:?} at row {row}")]
    NonFinite { column: String, row: usize },
    #[error("level {level:?} of factor {factor:?} at row {row} is not in the supplied vocabulary")]
    UnknownLevel {
        factor: String,
        level: String,
        row: usize,
    },
    #[error("row index {index} out of range for {n_rows} rows")]
    RowOutOfRange { index: usize, n_rows: usize },
}

/// A categorical column: a frozen level vocabulary plus per-row level codes.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorColumn {
    levels: Vec<String>,
    codes: Vec<u32>,
}

impl FactorColumn {
    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    /// 0-based vocabulary index per row.
    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn level_name(&self, code: u32) -> &str {
        &self.levels[code as usize]
    }

    pub fn level_index(&self, name: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == name)
    }
}

/// An immutable dataset: numeric columns and factor columns, all of equal
/// length. Values are validated once at construction; the dataset can then be
/// shared freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_rows: usize,
    numeric: IndexMap<String, Vec<f64>>,
    factors: IndexMap<String, FactorColumn>,
}

impl Dataset {
    pub fn builder() -> DatasetBuilder {
        DatasetBuilder::default()
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn numeric(&self, name: &str) -> Result<&[f64], DataError> {
        self.numeric
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }

    pub fn factor(&self, name: &str) -> Result<&FactorColumn, DataError> {
        self.factors
            .get(name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    }

    pub fn numeric_names(&self) -> impl Iterator<Item = &str> {
        self.numeric.keys().map(String::as_str)
    }

    pub fn factor_names(&self) -> impl Iterator<Item = &str> {
        self.factors.keys().map(String::as_str)
    }

    /// New dataset holding the given rows (in the given order). Factor
    /// vocabularies are preserved even for levels that drop out of the data.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset, DataError> {
        if rows.is_empty() {
            return Err(DataError::Empty);
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(DataError::RowOutOfRange {
                index: bad,
                n_rows: self.n_rows,
            });
        }
        let numeric = self
            .numeric
            .iter()
            .map(|(k, v)| (k.clone(), rows.iter().map(|&r| v[r]).collect()))
            .collect();
        let factors = self
            .factors
            .iter()
            .map(|(k, col)| {
                (
                    k.clone(),
                    FactorColumn {
                        levels: col.levels.clone(),
                        codes: rows.iter().map(|&r| col.codes[r]).collect(),
                    },
                )
            })
            .collect();
        Ok(Dataset {
            n_rows: rows.len(),
            numeric,
            factors,
        })
    }
}

#[derive(Default)]
pub struct DatasetBuilder {
    numeric: IndexMap<String, Vec<f64>>,
    factors: IndexMap<String, (Vec<String>, Option<Vec<String>>)>,
    order: Vec<String>,
}

impl DatasetBuilder {
    pub fn numeric(mut self, name: &str, values: Vec<f64>) -> Self {
        self.order.push(name.to_string());
        self.numeric.insert(name.to_string(), values);
        self
    }

    /// Factor column with the vocabulary frozen in first-appearance order.
    pub fn factor(mut self, name: &str, values: Vec<String>) -> Self {
        self.order.push(name.to_string());
        self.factors.insert(name.to_string(), (values, None));
        self
    }

    /// Factor column with an explicit vocabulary; values outside it are an
    /// error at build time.
    pub fn factor_with_vocab(mut self, name: &str, values: Vec<String>, vocab: Vec<String>) -> Self {
        self.order.push(name.to_string());
        self.factors.insert(name.to_string(), (values, Some(vocab)));
        self
    }

    pub fn build(self) -> Result<Dataset, DataError> {
        let mut seen = std::collections::HashSet::new();
        for name in &self.order {
            if !seen.insert(name.clone()) {
                return Err(DataError::DuplicateColumn(name.clone()));
            }
        }
        let n_rows = self
            .numeric
            .values()
            .map(Vec::len)
            .chain(self.factors.values().map(|(v, _)| v.len()))
            .next()
            .unwrap_or(0);
        if n_rows == 0 {
            return Err(DataError::Empty);
        }
        for (name, vals) in &self.numeric {
            if vals.len() != n_rows {
                return Err(DataError::LengthMismatch {
                    column: name.clone(),
                    expected: n_rows,
                    got: vals.len(),
                });
            }
            if let Some(row) = vals.iter().position(|v| !v.is_finite()) {
                return Err(DataError::NonFinite {
                    column: name.clone(),
                    row,
                });
            }
        }
        let mut factors = IndexMap::new();
        for (name, (values, vocab)) in self.factors {
            if values.len() != n_rows {
                return Err(DataError::LengthMismatch {
                    column: name.clone(),
                    expected: n_rows,
                    got: values.len(),
                });
            }
            let mut levels: Vec<String> = vocab.unwrap_or_default();
            let fixed_vocab = !levels.is_empty();
            let mut codes = Vec::with_capacity(n_rows);
            for (row, v) in values.iter().enumerate() {
                let idx = match levels.iter().position(|l| l == v) {
                    Some(i) => i,
                    None if fixed_vocab => {
                        return Err(DataError::UnknownLevel {
                            factor: name.clone(),
                            level: v.clone(),
                            row,
                        });
                    }
                    None => {
                        levels.push(v.clone());
                        levels.len() - 1
                    }
                };
                codes.push(idx as u32);
            }
            factors.insert(name, FactorColumn { levels, codes });
        }
        Ok(Dataset {
            n_rows,
            numeric: self.numeric,
            factors,
        })
    }
}
