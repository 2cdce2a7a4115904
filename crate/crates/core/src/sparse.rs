//! Compressed sparse row matrices built from coordinate triplets.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Coordinate-format accumulator. Duplicate entries are summed on compression.
#[derive(Debug, Clone, Default)]
pub struct TripletBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        TripletBuilder {
            nrows,
            ncols,
            entries: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(i < self.nrows && j < self.ncols, "({i}, {j}) out of bounds");
        self.entries.push((i, j, v));
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adds every entry of `m` scaled by `s`, shifted by the given offsets.
    pub fn add_block(&mut self, m: &CsrMatrix, row_off: usize, col_off: usize, s: f64) {
        for (i, j, v) in m.iter() {
            self.add(i + row_off, j + col_off, s * v);
        }
    }

    /// Adds the transpose of `m` scaled by `s` at the given offsets.
    pub fn add_block_transposed(&mut self, m: &CsrMatrix, row_off: usize, col_off: usize, s: f64) {
        for (i, j, v) in m.iter() {
            self.add(j + row_off, i + col_off, s * v);
        }
    }

    pub fn to_csr(mut self) -> CsrMatrix {
        // stable sort keeps insertion order within an (i, j) group
        self.entries.sort_by_key(|&(i, j, _)| (i, j));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut data: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for &(i, j, v) in &self.entries {
            if last == Some((i, j)) {
                *data.last_mut().unwrap() += v;
            } else {
                indices.push(j);
                data.push(v);
                indptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..self.nrows {
            indptr[i + 1] += indptr[i];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        TripletBuilder::new(nrows, ncols).to_csr()
    }

    pub fn identity(n: usize) -> Self {
        let mut t = TripletBuilder::with_capacity(n, n, n);
        for i in 0..n {
            t.add(i, i, 1.0);
        }
        t.to_csr()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        let mut t = TripletBuilder::new(nrows, ncols);
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if v != 0.0 {
                    t.add(i, j, v);
                }
            }
        }
        t.to_csr()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.indptr[i]..self.indptr[i + 1];
        self.indices[r.clone()]
            .iter()
            .copied()
            .zip(self.data[r].iter().copied())
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.indptr[i]..self.indptr[i + 1];
        match self.indices[r.clone()].binary_search(&j) {
            Ok(k) => self.data[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols, "matvec dimension mismatch");
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `x^T A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = TripletBuilder::with_capacity(self.ncols, self.nrows, self.nnz());
        for (i, j, v) in self.iter() {
            t.add(j, i, v);
        }
        t.to_csr()
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.data.iter_mut().for_each(|v| *v *= s);
        m
    }

    /// Largest |A_ij - A_ji|.
    pub fn max_asymmetry(&self) -> f64 {
        if self.nrows != self.ncols {
            return f64::INFINITY;
        }
        self.iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.max_asymmetry() <= tol
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (i, j, v) in self.iter() {
            d[i][j] += v;
        }
        d
    }

    /// Coordinate text dump, one `i j value` line per stored entry (zero-based).
    pub fn to_coordinate_text(&self) -> String {
        let mut s = String::with_capacity(32 * self.nnz());
        let _ = writeln!(s, "# {} {} {}", self.nrows, self.ncols, self.nnz());
        for (i, j, v) in self.iter() {
            let _ = writeln!(s, "{i} {j} {v:.16e}");
        }
        s
    }

    pub fn write_coordinate(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_coordinate_text()).map_err(|e| Error::io(path, e))
    }

    /// Parses the output of [`CsrMatrix::to_coordinate_text`].
    pub fn parse_coordinate_text(text: &str) -> Result<CsrMatrix> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty matrix file".into(),
        })?;
        let dims: Vec<usize> = header
            .trim_start_matches('#')
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Parse {
                line: 1,
                msg: "bad header".into(),
            })?;
        if dims.len() != 3 {
            return Err(Error::Parse {
                line: 1,
                msg: "header must be `# nrows ncols nnz`".into(),
            });
        }
        let mut t = TripletBuilder::with_capacity(dims[0], dims[1], dims[2]);
        for (k, line) in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let bad = || Error::Parse {
                line: k + 1,
                msg: format!("bad entry `{line}`"),
            };
            if toks.len() != 3 {
                return Err(bad());
            }
            let i: usize = toks[0].parse().map_err(|_| bad())?;
            let j: usize = toks[1].parse().map_err(|_| bad())?;
            let v: f64 = toks[2].parse().map_err(|_| bad())?;
            if i >= dims[0] || j >= dims[1] {
                return Err(bad());
            }
            t.add(i, j, v);
        }
        Ok(t.to_csr())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = TripletBuilder::new(2, 3);
        t.add(1, 2, 1.0);
        t.add(0, 0, 2.0);
        t.add(1, 2, 0.5);
        let m = t.to_csr();
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(1, 2), 1.5);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.matvec(&[1.0, 1.0, 2.0]), vec![2.0, 3.0]);
    }

    #[test]
    fn transpose_and_symmetry() {
        let m = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 3.0]]);
        assert!(m.is_symmetric(0.0));
        let n = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![0.0, 3.0]]);
        assert_eq!(n.max_asymmetry(), 2.0);
        assert_eq!(
            n.transpose().to_dense(),
            vec![vec![1.0, 0.0], vec![2.0, 3.0]]
        );
    }

    #[test]
    fn coordinate_dump_round_trip() {
        let m = CsrMatrix::from_dense(&[vec![1.0 / 3.0, 0.0], vec![-2e-17, 4.0]]);
        let back = CsrMatrix::parse_coordinate_text(&m.to_coordinate_text()).unwrap();
        assert_eq!(back, m);
        assert!(CsrMatrix::parse_coordinate_text("# 1 1 1\n0 3 1.0\n").is_err());
    }
}
