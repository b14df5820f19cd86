//! Design-matrix construction with reference-level dummy coding.

use std::collections::BTreeSet;

use nalgebra::DMatrix;

use crate::error::{Result, StatsError};

/// A dense design matrix with one named column per coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub names: Vec<String>,
    pub matrix: DMatrix<f64>,
}

impl Design {
    pub fn nrows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.matrix.ncols()
    }
}

/// Column-wise builder. Factor columns are named `factor[level]`.
#[derive(Debug, Clone)]
pub struct DesignBuilder {
    n: usize,
    columns: Vec<(String, Vec<f64>)>,
}

impl DesignBuilder {
    pub fn new(n: usize) -> Self {
        Self { n, columns: Vec::new() }
    }

    pub fn intercept(mut self) -> Self {
        self.columns.push(("(Intercept)".to_string(), vec![1.0; self.n]));
        self
    }

    pub fn numeric(mut self, name: &str, values: &[f64]) -> Result<Self> {
        self.check_len(name, values.len())?;
        self.columns.push((name.to_string(), values.to_vec()));
        Ok(self)
    }

    /// Treatment-codes a categorical column. Levels are sorted; the reference
    /// defaults to the first sorted level. Matching of `reference` is
    /// case-insensitive.
    pub fn factor<S: AsRef<str>>(mut self, name: &str, values: &[S], reference: Option<&str>) -> Result<Self> {
        self.check_len(name, values.len())?;
        let levels: BTreeSet<&str> = values.iter().map(AsRef::as_ref).collect();
        let reference = match reference {
            Some(r) => *levels.iter().find(|l| l.eq_ignore_ascii_case(r)).ok_or_else(|| {
                StatsError::InvalidInput(format!("reference level `{r}` not present in factor `{name}`"))
            })?,
            None => {
                *levels.iter().next().ok_or_else(|| StatsError::InvalidInput(format!("factor `{name}` is empty")))?
            }
        };
        for level in levels.iter().filter(|l| **l != reference) {
            let col = values.iter().map(|v| if v.as_ref() == *level { 1.0 } else { 0.0 }).collect();
            self.columns.push((format!("{name}[{level}]"), col));
        }
        Ok(self)
    }

    pub fn build(self) -> Design {
        let p = self.columns.len();
        let mut matrix = DMatrix::zeros(self.n, p);
        for (j, (_, col)) in self.columns.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                matrix[(i, j)] = *v;
            }
        }
        Design { names: self.columns.into_iter().map(|(n, _)| n).collect(), matrix }
    }

    fn check_len(&self, name: &str, len: usize) -> Result<()> {
        if len != self.n {
            return Err(StatsError::InvalidInput(format!("column `{name}` has {len} rows, expected {}", self.n)));
        }
        Ok(())
    }
}

/// Splits a `factor[level]` column name into its parts.
pub fn split_factor_name(name: &str) -> Option<(&str, &str)> {
    let open = name.find('[')?;
    name.strip_suffix(']').map(|s| (&s[..open], &s[open + 1..]))
}
