use std::collections::HashSet;
use std::ops::Range;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// P named series observed at T common time steps, stored time-major (T × P).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesPanel<T> {
    names: Vec<String>,
    values: Array2<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interval: Option<f64>,
}

impl<T: Scalar> TimeSeriesPanel<T> {
    pub fn new(names: Vec<String>, values: Array2<T>) -> Result<Self> {
        if names.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} series names for {} columns",
                names.len(),
                values.ncols()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Domain(format!("duplicate series name {name:?}")));
            }
        }
        if let Some(((t, i), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::Domain(format!("missing or non-finite value {v} at t={t}, series {i}")));
        }
        Ok(Self {
            names,
            values,
            t0: None,
            interval: None,
        })
    }

    /// Panel with generated names `x1..xP`.
    pub fn from_values(values: Array2<T>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|i| format!("x{i}")).collect();
        Self::new(names, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> ArrayView2<'_, T> {
        self.values.view()
    }

    /// Number of time steps.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn n_series(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, t: usize) -> ArrayView1<'_, T> {
        self.values.row(t)
    }

    pub fn series(&self, i: usize) -> ArrayView1<'_, T> {
        self.values.column(i)
    }

    /// Sub-panel over a range of time steps.
    pub fn slice_time(&self, range: Range<usize>) -> Result<Self> {
        if range.end > self.len() || range.start >= range.end {
            return Err(Error::Dimension(format!(
                "time range {range:?} outside panel of length {}",
                self.len()
            )));
        }
        Ok(Self {
            names: self.names.clone(),
            values: self.values.slice(ndarray::s![range, ..]).to_owned(),
            t0: self.t0,
            interval: self.interval,
        })
    }

    /// Reorders series; `order[k]` is the old index placed at position `k`.
    pub fn permute_series(&self, order: &[usize]) -> Result<Self> {
        if order.len() != self.n_series() {
            return Err(Error::Dimension("permutation length".into()));
        }
        let names = order.iter().map(|&i| self.names[i].clone()).collect();
        let values = self.values.select(Axis(1), order);
        Self::new(names, values)
    }

    pub(crate) fn require_longer_than(&self, lag: usize) -> Result<()> {
        if self.len() <= lag {
            return Err(Error::Dimension(format!(
                "panel has {} time steps, need more than lag {lag}",
                self.len()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_gaps_and_duplicates() {
        let v = array![[1.0, f64::NAN], [2.0, 3.0]];
        assert!(TimeSeriesPanel::from_values(v).is_err());
        let v = array![[1.0, 2.0]];
        assert!(TimeSeriesPanel::new(vec!["a".into(), "a".into()], v).is_err());
    }

    #[test]
    fn slices_and_permutes() {
        let p = TimeSeriesPanel::from_values(array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]]).unwrap();
        let s = p.slice_time(1..3).unwrap();
        assert_eq!(s.values(), array![[3.0, 4.0], [5.0, 6.0]]);
        let q = p.permute_series(&[1, 0]).unwrap();
        assert_eq!(q.names(), &["x2".to_string(), "x1".to_string()]);
        assert_eq!(q.series(0), p.series(1));
    }
}
