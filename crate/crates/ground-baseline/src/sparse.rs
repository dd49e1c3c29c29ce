//! Compressed sparse row matrices with coordinate-format text exchange.

use crate::GroundError;

/// Sorted, deduplicated triplets with a compressed-row index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    /// row start offsets, length rows + 1
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from (row, col, value) triplets; duplicates are summed,
    /// explicit zeros dropped.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self, GroundError> {
        for &(r, c, _) in &triplets {
            if r >= rows || c >= cols {
                return Err(GroundError::BadTriplet { row: r, col: c, rows, cols });
            }
        }
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut dedup: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match dedup.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => dedup.push((r, c, v)),
            }
        }
        dedup.retain(|&(_, _, v)| v != 0.0);

        let mut row_ptr = vec![0usize; rows + 1];
        for &(r, _, _) in &dedup {
            row_ptr[r + 1] += 1;
        }
        for i in 0..rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        let col_idx = dedup.iter().map(|&(_, c, _)| c).collect();
        let values = dedup.iter().map(|&(_, _, v)| v).collect();
        Ok(SparseMatrix { rows, cols, row_ptr, col_idx, values })
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Result<Self, GroundError> {
        let rows = dense.len();
        let cols = dense.first().map_or(0, |r| r.len());
        let mut triplets = Vec::new();
        for (r, row) in dense.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    triplets.push((r, c, v));
                }
            }
        }
        Self::from_triplets(rows, cols, triplets)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn matvec(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, slot) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *slot = acc;
        }
    }

    pub fn matvec_t(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        out.fill(0.0);
        for r in 0..self.rows {
            let yr = y[r];
            if yr == 0.0 {
                continue;
            }
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[self.col_idx[k]] += self.values[k] * yr;
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.cols]; self.rows];
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out[r][self.col_idx[k]] = self.values[k];
            }
        }
        out
    }

    /// Coordinate text format: `rows cols nnz` header, then one
    /// `row col value` triplet per line.
    pub fn write_coord(&self) -> String {
        let mut out = format!("{} {} {}\n", self.rows, self.cols, self.nnz());
        for r in 0..self.rows {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                out.push_str(&format!("{} {} {}\n", r, self.col_idx[k], self.values[k]));
            }
        }
        out
    }

    pub fn read_coord(text: &str) -> Result<Self, GroundError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or(GroundError::BadCoordText { line: 1 })?;
        let dims: Vec<usize> =
            header.split_whitespace().filter_map(|t| t.parse().ok()).collect();
        let [rows, cols, nnz] = dims[..] else {
            return Err(GroundError::BadCoordText { line: 1 });
        };
        let mut triplets = Vec::with_capacity(nnz);
        for (i, line) in lines.enumerate() {
            let mut it = line.split_whitespace();
            let parse = || GroundError::BadCoordText { line: i + 2 };
            let r: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse)?;
            let c: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse)?;
            let v: f64 = it.next().and_then(|t| t.parse().ok()).ok_or_else(parse)?;
            triplets.push((r, c, v));
        }
        if triplets.len() != nnz {
            return Err(GroundError::BadCoordText { line: 1 });
        }
        Self::from_triplets(rows, cols, triplets)
    }
}
