//! The categorical database: `n` rows (users) by `d` columns (features).

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A cell is an index into its column's alphabet, or `None` for the
/// redaction symbol ⊥. ⊥ counts as an ordinary value everywhere.
pub type Cell = Option<u32>;

/// Rendering of ⊥ in labels and logs.
pub const REDACTED: &str = "⊥";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub alphabet: Vec<String>,
}

impl Column {
    pub fn new(name: impl Into<String>, alphabet: Vec<String>) -> Self {
        Column {
            name: name.into(),
            alphabet,
        }
    }

    pub fn code_of(&self, value: &str) -> Option<u32> {
        self.alphabet
            .iter()
            .position(|a| a == value)
            .map(|i| i as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CategoricalTable {
    n_rows: usize,
    columns: Vec<Column>,
    cells: Vec<Cell>,
}

impl CategoricalTable {
    /// Builds a table from coded rows. Zero columns are allowed (a table
    /// released with every feature suppressed); zero rows are not.
    pub fn new(columns: Vec<Column>, rows: Vec<Vec<Cell>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyTable);
        }
        let mut names = HashSet::new();
        for c in &columns {
            if !names.insert(c.name.as_str()) {
                return Err(Error::DuplicateName(c.name.clone()));
            }
            let mut seen = HashSet::new();
            for a in &c.alphabet {
                if a.is_empty() {
                    return Err(Error::Schema(format!(
                        "column {:?} has an empty alphabet entry",
                        c.name
                    )));
                }
                if !seen.insert(a.as_str()) {
                    return Err(Error::DuplicateName(a.clone()));
                }
            }
        }
        let d = columns.len();
        let n_rows = rows.len();
        let mut cells = Vec::with_capacity(n_rows * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: d,
                });
            }
            for (j, cell) in row.into_iter().enumerate() {
                if let Some(code) = cell {
                    if code as usize >= columns[j].alphabet.len() {
                        return Err(Error::InvalidCell {
                            row: i,
                            col: j,
                            code,
                        });
                    }
                }
                cells.push(cell);
            }
        }
        Ok(CategoricalTable {
            n_rows,
            columns,
            cells,
        })
    }

    /// Builds a table from string cells (`None` is ⊥), inferring each
    /// column's alphabet as the sorted set of observed values.
    pub fn from_strings<S: AsRef<str>>(names: &[&str], rows: &[Vec<Option<S>>]) -> Result<Self> {
        let d = names.len();
        let mut alphabets: Vec<BTreeSet<String>> = vec![BTreeSet::new(); d];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::RaggedRow {
                    row: i,
                    found: row.len(),
                    expected: d,
                });
            }
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    alphabets[j].insert(v.as_ref().to_string());
                }
            }
        }
        let columns: Vec<Column> = names
            .iter()
            .zip(alphabets)
            .map(|(n, a)| Column::new(*n, a.into_iter().collect()))
            .collect();
        let coded = rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(j, v)| v.as_ref().and_then(|v| columns[j].code_of(v.as_ref())))
                    .collect()
            })
            .collect();
        Self::new(columns, coded)
    }

    /// A table with `n_rows` rows and no columns.
    pub fn without_columns(n_rows: usize) -> Result<Self> {
        Self::new(Vec::new(), vec![Vec::new(); n_rows])
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        let d = self.columns.len();
        &self.cells[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Cell]> + '_ {
        (0..self.n_rows).map(move |i| self.row(i))
    }

    pub fn cell(&self, i: usize, j: usize) -> Cell {
        self.cells[i * self.columns.len() + j]
    }

    pub fn cell_str(&self, i: usize, j: usize) -> Option<&str> {
        self.cell(i, j)
            .map(|c| self.columns[j].alphabet[c as usize].as_str())
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn column_indices<S: AsRef<str>>(&self, names: &[S]) -> Result<Vec<usize>> {
        names.iter().map(|n| self.column_index(n.as_ref())).collect()
    }

    pub(crate) fn check_columns(&self, cols: &[usize]) -> Result<()> {
        if cols.is_empty() {
            return Err(Error::EmptyColumnSet);
        }
        for &j in cols {
            if j >= self.columns.len() {
                return Err(Error::UnknownColumn(format!("#{j}")));
            }
        }
        Ok(())
    }

    /// Restriction to the given columns, in the given order.
    pub fn select(&self, cols: &[usize]) -> Result<Self> {
        for &j in cols {
            if j >= self.columns.len() {
                return Err(Error::UnknownColumn(format!("#{j}")));
            }
        }
        let columns = cols.iter().map(|&j| self.columns[j].clone()).collect();
        let rows = self
            .rows()
            .map(|r| cols.iter().map(|&j| r[j]).collect())
            .collect();
        Self::new(columns, rows)
    }

    /// Row values rendered as strings (`None` for ⊥).
    pub fn row_strings(&self, i: usize) -> Vec<Option<String>> {
        (0..self.n_cols())
            .map(|j| self.cell_str(i, j).map(str::to_string))
            .collect()
    }
}
