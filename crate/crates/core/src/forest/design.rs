use alloc::vec::Vec;

use super::tree::{Axis, Tree};
use crate::records::PersonPeriodTable;

/// Column-major feature matrix plus the time axis, as seen by the sampler.
/// Missing values are stored as NaN.
#[derive(Debug, Clone)]
pub struct Design {
    n_rows: usize,
    n_features: usize,
    columns: Vec<f64>,
    times: Vec<f64>,
    /// Per axis: sorted distinct observed values.
    distinct: Vec<Vec<f64>>,
    /// Per axis, column-major: rank of each row's value in `distinct`
    /// (`u32::MAX` when missing).
    ranks: Vec<u32>,
}

impl Design {
    /// `rows[i][j]` is feature `j` of row `i`; `times[i]` is its time.
    pub fn new(rows: &[Vec<Option<f64>>], times: Vec<f64>) -> Self {
        assert_eq!(rows.len(), times.len());
        let n_rows = rows.len();
        let n_features = rows.first().map_or(0, Vec::len);
        let mut columns = alloc::vec![f64::NAN; n_rows * n_features];
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n_features, "ragged design rows");
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = v {
                    columns[j * n_rows + i] = *v;
                }
            }
        }
        let mut d = Self {
            n_rows,
            n_features,
            columns,
            times,
            distinct: Vec::new(),
            ranks: Vec::new(),
        };
        d.index_values();
        d
    }

    fn index_values(&mut self) {
        let n_axes = self.n_axes();
        self.distinct = Vec::with_capacity(n_axes);
        self.ranks = alloc::vec![u32::MAX; n_axes * self.n_rows];
        for a in 0..n_axes {
            let axis = self.axis(a);
            let mut values: Vec<f64> = (0..self.n_rows).filter_map(|i| self.value(axis, i)).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            for i in 0..self.n_rows {
                if let Some(v) = self.value(axis, i) {
                    let r = values.partition_point(|&x| x < v);
                    self.ranks[a * self.n_rows + i] = r as u32;
                }
            }
            self.distinct.push(values);
        }
    }

    pub fn from_table(table: &PersonPeriodTable) -> Self {
        let rows: Vec<_> = table.rows.iter().map(|r| r.covariates.clone()).collect();
        let times = table.rows.iter().map(|r| r.interval_end).collect();
        let mut d = Self::new(&rows, times);
        if d.n_features != table.n_features() {
            // Keep the declared width even when the table has no rows.
            d.n_features = table.n_features();
            d.index_values();
        }
        d
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Number of split axes: every feature plus time.
    pub fn n_axes(&self) -> usize {
        self.n_features + 1
    }

    pub fn axis(&self, index: usize) -> Axis {
        if index == self.n_features {
            Axis::Time
        } else {
            Axis::Feature(index)
        }
    }

    #[inline]
    pub fn value(&self, axis: Axis, row: usize) -> Option<f64> {
        match axis {
            Axis::Time => Some(self.times[row]),
            Axis::Feature(j) => {
                let v = self.columns[j * self.n_rows + row];
                (!v.is_nan()).then_some(v)
            }
        }
    }

    fn axis_index(&self, axis: Axis) -> usize {
        match axis {
            Axis::Feature(j) => j,
            Axis::Time => self.n_features,
        }
    }

    /// Rank of the row's value among the axis's distinct values.
    #[inline]
    pub fn rank(&self, axis: Axis, row: usize) -> Option<u32> {
        let r = self.ranks[self.axis_index(axis) * self.n_rows + row];
        (r != u32::MAX).then_some(r)
    }

    /// Distinct observed values of the axis at the given ranks.
    pub fn value_at_rank(&self, axis: Axis, rank: u32) -> f64 {
        self.distinct[self.axis_index(axis)][rank as usize]
    }

    pub fn n_distinct(&self, axis: Axis) -> usize {
        self.distinct[self.axis_index(axis)].len()
    }

    #[inline]
    pub fn route(&self, tree: &Tree, row: usize) -> usize {
        tree.route_with(|axis| self.value(axis, row))
    }
}
