//! Row-major dense matrices and the handful of GEMM kernels the trainers use.
//!
//! Parallel variants split work by output rows across two OS threads; every
//! output cell is still reduced in a fixed order, so results are bitwise
//! identical for any thread count.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                context: "Matrix::from_vec",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            if row.len() != c {
                return Err(Error::Shape {
                    context: "Matrix::from_rows",
                    expected: c,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Matrix { rows: r, cols: c, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut out = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        let mut y = vec![0.0; self.rows];
        for i in 0..self.rows {
            let row = self.row(i);
            let mut acc = 0.0;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            y[i] = acc;
        }
        y
    }

    /// `y = Aᵀ x`.
    pub fn matvec_t(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "matvec_t dimension mismatch");
        let mut y = vec![0.0; self.cols];
        for i in 0..self.rows {
            let row = self.row(i);
            let xi = x[i];
            for (yj, a) in y.iter_mut().zip(row) {
                *yj += a * xi;
            }
        }
        y
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Copy of a contiguous row range.
    pub fn rows_slice(&self, range: std::ops::Range<usize>) -> Matrix {
        Matrix {
            rows: range.len(),
            cols: self.cols,
            data: self.data[range.start * self.cols..range.end * self.cols].to_vec(),
        }
    }
}

/// `C = A·B`, accumulating nothing from `C`'s prior contents.
///
/// The k-loop is unrolled 4-wide so each pass over a `C` row fuses four
/// rank-1 updates, quartering the row traffic.
pub fn gemm(a: &Matrix, b: &Matrix, c: &mut Matrix, threads: usize) {
    assert_eq!(a.cols, b.rows, "gemm inner dimension mismatch");
    assert_eq!(c.rows, a.rows, "gemm output rows mismatch");
    assert_eq!(c.cols, b.cols, "gemm output cols mismatch");
    let kdim = a.cols;
    let ndim = b.cols;
    let body = |rows: std::ops::Range<usize>, cdata: &mut [f64]| {
        // cdata covers rows `rows` of C
        for (local_i, i) in rows.enumerate() {
            let crow = &mut cdata[local_i * ndim..(local_i + 1) * ndim];
            crow.iter_mut().for_each(|v| *v = 0.0);
            let arow = &a.data[i * kdim..(i + 1) * kdim];
            let mut p = 0;
            while p + 4 <= kdim {
                let (a0, a1, a2, a3) = (arow[p], arow[p + 1], arow[p + 2], arow[p + 3]);
                let b0 = &b.data[p * ndim..(p + 1) * ndim];
                let b1 = &b.data[(p + 1) * ndim..(p + 2) * ndim];
                let b2 = &b.data[(p + 2) * ndim..(p + 3) * ndim];
                let b3 = &b.data[(p + 3) * ndim..(p + 4) * ndim];
                for j in 0..ndim {
                    crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
                }
                p += 4;
            }
            while p < kdim {
                let av = arow[p];
                let brow = &b.data[p * ndim..(p + 1) * ndim];
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += av * bv;
                }
                p += 1;
            }
        }
    };
    run_row_split(a.rows, ndim, &mut c.data, threads, body);
}

/// `C = A·Bᵀ`. Both operands are traversed along contiguous rows.
pub fn gemm_nt(a: &Matrix, b: &Matrix, c: &mut Matrix, threads: usize) {
    assert_eq!(a.cols, b.cols, "gemm_nt inner dimension mismatch");
    assert_eq!(c.rows, a.rows, "gemm_nt output rows mismatch");
    assert_eq!(c.cols, b.rows, "gemm_nt output cols mismatch");
    let kdim = a.cols;
    let ndim = b.rows;
    let body = |rows: std::ops::Range<usize>, cdata: &mut [f64]| {
        for (local_i, i) in rows.enumerate() {
            let arow = &a.data[i * kdim..(i + 1) * kdim];
            let crow = &mut cdata[local_i * ndim..(local_i + 1) * ndim];
            // four dot products share each pass over the A row
            let mut j = 0;
            while j + 4 <= ndim {
                let b0 = &b.data[j * kdim..(j + 1) * kdim];
                let b1 = &b.data[(j + 1) * kdim..(j + 2) * kdim];
                let b2 = &b.data[(j + 2) * kdim..(j + 3) * kdim];
                let b3 = &b.data[(j + 3) * kdim..(j + 4) * kdim];
                let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
                for (k, &x) in arow.iter().enumerate() {
                    s0 += x * b0[k];
                    s1 += x * b1[k];
                    s2 += x * b2[k];
                    s3 += x * b3[k];
                }
                crow[j] = s0;
                crow[j + 1] = s1;
                crow[j + 2] = s2;
                crow[j + 3] = s3;
                j += 4;
            }
            while j < ndim {
                let brow = &b.data[j * kdim..(j + 1) * kdim];
                let mut acc = 0.0;
                for (x, y) in arow.iter().zip(brow) {
                    acc += x * y;
                }
                crow[j] = acc;
                j += 1;
            }
        }
    };
    run_row_split(a.rows, ndim, &mut c.data, threads, body);
}

/// `C = Aᵀ·B` where `A` is `m×r` and `B` is `m×n`; `C` is `r×n`.
///
/// This is the weight-gradient kernel: each output cell sums over the batch
/// dimension in index order regardless of the row split.
pub fn gemm_tn(a: &Matrix, b: &Matrix, c: &mut Matrix, threads: usize) {
    assert_eq!(a.rows, b.rows, "gemm_tn batch dimension mismatch");
    assert_eq!(c.rows, a.cols, "gemm_tn output rows mismatch");
    assert_eq!(c.cols, b.cols, "gemm_tn output cols mismatch");
    let m = a.rows;
    let r = a.cols;
    let n = b.cols;
    let body = |rows: std::ops::Range<usize>, cdata: &mut [f64]| {
        for (local_p, p) in rows.enumerate() {
            let crow = &mut cdata[local_p * n..(local_p + 1) * n];
            crow.iter_mut().for_each(|v| *v = 0.0);
            let mut i = 0;
            while i + 4 <= m {
                let a0 = a.data[i * r + p];
                let a1 = a.data[(i + 1) * r + p];
                let a2 = a.data[(i + 2) * r + p];
                let a3 = a.data[(i + 3) * r + p];
                let b0 = &b.data[i * n..(i + 1) * n];
                let b1 = &b.data[(i + 1) * n..(i + 2) * n];
                let b2 = &b.data[(i + 2) * n..(i + 3) * n];
                let b3 = &b.data[(i + 3) * n..(i + 4) * n];
                for j in 0..n {
                    crow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
                }
                i += 4;
            }
            while i < m {
                let av = a.data[i * r + p];
                let brow = &b.data[i * n..(i + 1) * n];
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += av * bv;
                }
                i += 1;
            }
        }
    };
    run_row_split(r, n, &mut c.data, threads, body);
}

fn run_row_split<F>(nrows: usize, ncols: usize, cdata: &mut [f64], threads: usize, body: F)
where
    F: Fn(std::ops::Range<usize>, &mut [f64]) + Sync,
{
    if threads <= 1 || nrows < 32 {
        body(0..nrows, cdata);
        return;
    }
    let mid = nrows / 2;
    let (lo, hi) = cdata.split_at_mut(mid * ncols);
    std::thread::scope(|scope| {
        let body_ref = &body;
        scope.spawn(move || body_ref(0..mid, lo));
        body(mid..nrows, hi);
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
        Matrix::from_vec(rows, cols, rng.normal_vec(rows * cols)).unwrap()
    }

    fn gemm_naive(a: &Matrix, b: &Matrix) -> Matrix {
        let mut c = Matrix::zeros(a.rows(), b.cols());
        for i in 0..a.rows() {
            for j in 0..b.cols() {
                let mut acc = 0.0;
                for p in 0..a.cols() {
                    acc += a.get(i, p) * b.get(p, j);
                }
                c.set(i, j, acc);
            }
        }
        c
    }

    #[test]
    fn gemm_matches_naive() {
        let mut rng = Rng::seed_from(11);
        let a = random(17, 23, &mut rng);
        let b = random(23, 9, &mut rng);
        let mut c = Matrix::zeros(17, 9);
        gemm(&a, &b, &mut c, 1);
        let expect = gemm_naive(&a, &b);
        for (x, y) in c.data().iter().zip(expect.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn gemm_variants_agree_with_transposed_gemm() {
        let mut rng = Rng::seed_from(12);
        let a = random(40, 13, &mut rng);
        let b = random(21, 13, &mut rng);
        let mut c = Matrix::zeros(40, 21);
        gemm_nt(&a, &b, &mut c, 1);
        let expect = gemm_naive(&a, &b.transpose());
        assert_eq!(c, expect);

        let a2 = random(33, 7, &mut rng);
        let b2 = random(33, 11, &mut rng);
        let mut c2 = Matrix::zeros(7, 11);
        gemm_tn(&a2, &b2, &mut c2, 1);
        let expect2 = gemm_naive(&a2.transpose(), &b2);
        for (x, y) in c2.data().iter().zip(expect2.data()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn threaded_kernels_are_bitwise_identical() {
        let mut rng = Rng::seed_from(13);
        let a = random(64, 50, &mut rng);
        let b = random(50, 31, &mut rng);
        let mut c1 = Matrix::zeros(64, 31);
        let mut c2 = Matrix::zeros(64, 31);
        gemm(&a, &b, &mut c1, 1);
        gemm(&a, &b, &mut c2, 2);
        assert_eq!(c1, c2);

        let d = random(64, 31, &mut rng);
        let mut g1 = Matrix::zeros(50, 31);
        let mut g2 = Matrix::zeros(50, 31);
        gemm_tn(&a, &d, &mut g1, 1);
        gemm_tn(&a, &d, &mut g2, 2);
        assert_eq!(g1, g2);
    }

    #[test]
    fn matvec_roundtrip() {
        let m = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]]).unwrap();
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![3.0, 7.0, 11.0]);
        assert_eq!(m.matvec_t(&[1.0, 0.0, 0.0]), vec![1.0, 2.0]);
    }
}
