//! Small dense matrices backing the encodings and the proposition checks.
//!
//! Graphs here are a few hundred nodes at most, so everything is row-major
//! `Vec` storage; no BLAS, no sparse formats beyond the CSR held by
//! [`crate::graph::Graph`] itself. `Mat` is `f64`, `RatMat` is exact
//! big-integer rationals for the checks that demand equality rather than
//! tolerance.

use num::{BigRational, One, Zero};
use std::fmt::Write as _;

/// Dense row-major `f64` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn matmul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV dump, one header row `c0,c1,...` then one line per matrix row.
    /// Floats carry 17 significant digits so reloads are bit-exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for j in 0..self.cols {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "c{j}");
        }
        out.push('\n');
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", fmt_f64(self[(i, j)]));
            }
            out.push('\n');
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// 17-significant-digit float formatting shared by every CSV/JSON dump.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // normalize -0.0 so reruns are byte-identical
        return "0".to_string();
    }
    format!("{x:.16e}")
}

/// Dense row-major matrix of exact rationals.
#[derive(Debug, Clone, PartialEq)]
pub struct RatMat {
    rows: usize,
    cols: usize,
    data: Vec<BigRational>,
}

impl RatMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![BigRational::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = BigRational::one();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[BigRational] {
        &self.data
    }

    pub fn matmul(&self, other: &RatMat) -> RatMat {
        assert_eq!(self.cols, other.rows, "matmul shape mismatch");
        let mut out = RatMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let prod = a * &other[(k, j)];
                    let cur = &out[(i, j)] + prod;
                    out[(i, j)] = cur;
                }
            }
        }
        out
    }

    /// Nearest-f64 view; rationals produced by random walks are dyadic-ish
    /// and small, so this is the usual float rounding only.
    pub fn to_f64(&self) -> Mat {
        let mut out = Mat::zeros(self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = rat_to_f64(&self[(i, j)]);
            }
        }
        out
    }
}

impl std::ops::Index<(usize, usize)> for RatMat {
    type Output = BigRational;
    fn index(&self, (i, j): (usize, usize)) -> &BigRational {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RatMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigRational {
        &mut self.data[i * self.cols + j]
    }
}

pub fn rat_to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().expect("rational out of f64 range")
}
