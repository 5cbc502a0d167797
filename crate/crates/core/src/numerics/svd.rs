//! Randomized truncated SVD for large sparse operators.
//!
//! Range finding uses a Gaussian sketch with subspace (power) iteration; the
//! small projected problem is solved with a cyclic Jacobi eigensolver on
//! `B·Bᵀ`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot, Matrix};

/// Anything that can multiply a dense block from the left, `A·X` and `Aᵀ·X`.
pub trait LinearOperator {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    /// `A · x` for an `ncols × k` block.
    fn apply(&self, x: &Matrix) -> Matrix;
    /// `Aᵀ · x` for an `nrows × k` block.
    fn apply_t(&self, x: &Matrix) -> Matrix;
}

impl LinearOperator for Matrix {
    fn nrows(&self) -> usize {
        self.rows()
    }

    fn ncols(&self) -> usize {
        self.cols()
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        self.matmul(x).expect("operator shape")
    }

    fn apply_t(&self, x: &Matrix) -> Matrix {
        self.transpose().matmul(x).expect("operator shape")
    }
}

/// Compressed sparse row matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; columns within a row must
    /// be strictly increasing.
    pub fn from_rows(ncols: usize, rows: Vec<Vec<(u32, f64)>>) -> Self {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        let nrows = rows.len();
        for row in rows {
            debug_assert!(row.windows(2).all(|w| w[0].0 < w[1].0));
            for (c, v) in row {
                indices.push(c);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (u32, f64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let span = self.indptr[r]..self.indptr[r + 1];
        match self.indices[span.clone()].binary_search(&(c as u32)) {
            Ok(i) => self.values[span.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m.set(r, c as usize, v);
            }
        }
        m
    }
}

impl LinearOperator for CsrMatrix {
    fn nrows(&self) -> usize {
        self.nrows
    }

    fn ncols(&self) -> usize {
        self.ncols
    }

    fn apply(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.nrows, x.cols());
        for r in 0..self.nrows {
            let dst = out.row_mut(r);
            for (c, v) in self.row(r) {
                axpy(v, x.row(c as usize), dst);
            }
        }
        out
    }

    fn apply_t(&self, x: &Matrix) -> Matrix {
        let mut out = Matrix::zeros(self.ncols, x.cols());
        for r in 0..self.nrows {
            let src = x.row(r);
            for (c, v) in self.row(r) {
                axpy(v, src, out.row_mut(c as usize));
            }
        }
        out
    }
}

/// Rank-`k` factorization `A ≈ U · diag(s) · Vᵀ`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    /// `nrows × k`
    pub u: Matrix,
    /// descending, length `k`
    pub s: Vec<f64>,
    /// `ncols × k`
    pub v: Matrix,
}

#[derive(Debug, Clone, Copy)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
}

impl Default for SvdOptions {
    fn default() -> Self {
        SvdOptions {
            oversample: 16,
            power_iters: 10,
        }
    }
}

/// Orthonormalizes the columns of `m` in place (modified Gram–Schmidt, two
/// passes). Columns that collapse numerically are replaced by zeros.
pub fn orthonormalize_columns(m: &mut Matrix) {
    let mut cols: Vec<Vec<f64>> = (0..m.cols())
        .map(|c| (0..m.rows()).map(|r| m.get(r, c)).collect())
        .collect();
    for j in 0..cols.len() {
        let (done, rest) = cols.split_at_mut(j);
        let col = &mut rest[0];
        let orig = dot(col, col).sqrt();
        for _ in 0..2 {
            for q in done.iter() {
                let proj = dot(q, col);
                axpy(-proj, q, col);
            }
        }
        let n = dot(col, col).sqrt();
        if n > 1e-12 * orig.max(1e-300) && n > 1e-300 {
            col.iter_mut().for_each(|x| *x /= n);
        } else {
            col.fill(0.0);
        }
    }
    for (c, col) in cols.iter().enumerate() {
        for (r, &x) in col.iter().enumerate() {
            m.set(r, c, x);
        }
    }
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order and the matching eigenvectors as
/// columns.
pub fn symmetric_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.rows();
    if a.cols() != n {
        return Err(Error::shape(
            "symmetric_eigen",
            "square",
            format!("{:?}", a.shape()),
        ));
    }
    let mut a = a.clone();
    let mut v = Matrix::identity(n);
    let scale: f64 = a.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| (0..n).filter(move |&q| q != p).map(move |q| (p, q)))
            .map(|(p, q)| a.get(p, q).powi(2))
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (a.get(q, q) - a.get(p, p)) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a.get(k, p);
                    let akq = a.get(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for k in 0..n {
                    let apk = a.get(p, k);
                    let aqk = a.get(q, k);
                    a.set(p, k, c * apk - s * aqk);
                    a.set(q, k, s * apk + c * aqk);
                }
                for k in 0..n {
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, c * vkp - s * vkq);
                    v.set(k, q, s * vkp + c * vkq);
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a.get(j, j).total_cmp(&a.get(i, i)));
    let values = order.iter().map(|&i| a.get(i, i)).collect();
    let vectors = Matrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    Ok((values, vectors))
}

/// Randomized rank-`k` SVD.
pub fn randomized_svd<A, R>(a: &A, k: usize, opts: SvdOptions, rng: &mut R) -> Result<TruncatedSvd>
where
    A: LinearOperator + ?Sized,
    R: Rng + ?Sized,
{
    let (m, n) = (a.nrows(), a.ncols());
    if k == 0 || k > m.min(n) {
        return Err(Error::Config(format!(
            "requested rank {k} exceeds attainable rank {} of a {m}x{n} matrix",
            m.min(n)
        )));
    }
    let l = (k + opts.oversample).min(m.min(n));
    let omega = Matrix::from_fn(n, l, |_, _| rng.sample(StandardNormal));
    let mut q = a.apply(&omega);
    orthonormalize_columns(&mut q);
    for _ in 0..opts.power_iters {
        let mut z = a.apply_t(&q);
        orthonormalize_columns(&mut z);
        q = a.apply(&z);
        orthonormalize_columns(&mut q);
    }
    // B = Qᵀ A is l × n; we hold Bᵀ = Aᵀ Q (n × l).
    let bt = a.apply_t(&q);
    let bbt = bt.transpose().matmul(&bt)?;
    let (evals, evecs) = symmetric_eigen(&bbt)?;

    let s: Vec<f64> = evals.iter().take(k).map(|&e| e.max(0.0).sqrt()).collect();
    let ub = Matrix::from_fn(l, k, |r, c| evecs.get(r, c));
    let u = q.matmul(&ub)?;
    let mut v = bt.matmul(&ub)?;
    for (c, &sc) in s.iter().enumerate() {
        for r in 0..v.rows() {
            let x = if sc > 1e-300 { v.get(r, c) / sc } else { 0.0 };
            v.set(r, c, x);
        }
    }
    Ok(TruncatedSvd { u, s, v })
}
