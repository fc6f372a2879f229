use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FockError;

/// Real square matrix in compressed sparse row form.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub dim: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

impl SparseMatrix {
    /// Duplicate entries are summed; exact zeros are dropped.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; dim + 1];
        let mut col = Vec::with_capacity(triplets.len());
        let mut val: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside {dim}×{dim}");
            if last == Some((r, c)) {
                *val.last_mut().expect("previous entry") += v;
                continue;
            }
            last = Some((r, c));
            row_ptr[r + 1] += 1;
            col.push(c);
            val.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let mut m = Self { dim, row_ptr, col, val };
        m.prune();
        m
    }

    fn prune(&mut self) {
        let (mut row_ptr, mut col, mut val) = (vec![0; self.dim + 1], Vec::new(), Vec::new());
        for r in 0..self.dim {
            for (c, v) in self.row(r) {
                if v != 0.0 {
                    col.push(c);
                    val.push(v);
                }
            }
            row_ptr[r + 1] = col.len();
        }
        (self.row_ptr, self.col, self.val) = (row_ptr, col, val);
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, (0..dim).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col[span.clone()].iter().copied().zip(self.val[span].iter().copied())
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.dim).flat_map(|r| self.row(r).map(move |(c, v)| (r, c, v))).collect()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map_or(0.0, |(_, v)| v)
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(self.dim, self.triplets().into_iter().map(|(r, c, v)| (c, r, v)).collect())
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t = Vec::new();
        for r in 0..self.dim {
            for (k, v) in self.row(r) {
                for (c, w) in other.row(k) {
                    t.push((r, c, v * w));
                }
            }
        }
        Self::from_triplets(self.dim, t)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_triplets(self.dim, self.triplets().into_iter().map(|(r, c, v)| (r, c, s * v)).collect())
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let mut t = self.triplets();
        t.extend(other.triplets());
        Self::from_triplets(self.dim, t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    /// Rows and columns `idx` only.
    pub fn restrict(&self, idx: &[usize]) -> Self {
        let mut pos = vec![usize::MAX; self.dim];
        for (i, &j) in idx.iter().enumerate() {
            pos[j] = i;
        }
        let mut t = Vec::new();
        for (i, &r) in idx.iter().enumerate() {
            for (c, v) in self.row(r) {
                if pos[c] != usize::MAX {
                    t.push((i, pos[c], v));
                }
            }
        }
        Self::from_triplets(idx.len(), t)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.triplets().iter().all(|&(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }
}

/// Eigenpairs sorted by eigenvalue.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

pub const DENSE_LIMIT: usize = 2000;
pub const LANCZOS_TOLERANCE: f64 = 1e-10;

/// `k` lowest eigenpairs of a symmetric matrix: dense below
/// [`DENSE_LIMIT`], Lanczos above.
pub fn lowest_eigenpairs(h: &SparseMatrix, k: usize) -> Result<Eigen, FockError> {
    let k = k.min(h.dim);
    if h.dim <= DENSE_LIMIT {
        Ok(dense_lowest(h, k))
    } else {
        lanczos_lowest(h, k, LANCZOS_TOLERANCE)
    }
}

pub fn dense_lowest(h: &SparseMatrix, k: usize) -> Eigen {
    let eig = h.to_dense().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order.truncate(k);
    Eigen {
        values: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        vectors: order.iter().map(|&i| eig.eigenvectors.column(i).iter().copied().collect()).collect(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual(h: &SparseMatrix, value: f64, v: &[f64]) -> f64 {
    h.mul_vec(v).iter().zip(v).map(|(hv, x)| (hv - value * x).powi(2)).sum::<f64>().sqrt()
}

/// Lanczos with full reorthogonalization; the `k` lowest Ritz pairs must
/// reach residual `tol·max(1, |θ|)`. Exactly degenerate eigenvalues are
/// seen once.
pub fn lanczos_lowest(h: &SparseMatrix, k: usize, tol: f64) -> Result<Eigen, FockError> {
    let n = h.dim;
    let max_steps = n.min(600.max(40 * k));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let nv = dot(&v, &v).sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    let mut basis: Vec<Vec<f64>> = vec![v];
    let (mut alpha, mut beta): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
    for step in 0..max_steps {
        let mut w = h.mul_vec(&basis[step]);
        let a = dot(&w, &basis[step]);
        alpha.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let b = dot(&w, &w).sqrt();
        let m = alpha.len();
        let done = m == max_steps || b < 1e-14 || (m >= k && m % 10 == 0);
        if done {
            let t = DMatrix::from_fn(m, m, |i, j| {
                if i == j {
                    alpha[i]
                } else if i + 1 == j || j + 1 == i {
                    beta[i.min(j)]
                } else {
                    0.0
                }
            });
            let eig = t.symmetric_eigen();
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
            let kk = k.min(m);
            let converged = order[..kk].iter().all(|&i| {
                let theta = eig.eigenvalues[i];
                (b * eig.eigenvectors[(m - 1, i)]).abs() <= tol * theta.abs().max(1.0)
            });
            if converged || b < 1e-14 || m == max_steps {
                let mut out = Eigen {
                    values: Vec::new(),
                    vectors: Vec::new(),
                };
                for &i in &order[..kk] {
                    let mut x = vec![0.0; n];
                    for (j, q) in basis.iter().enumerate() {
                        let s = eig.eigenvectors[(j, i)];
                        x.iter_mut().zip(q).for_each(|(xi, qi)| *xi += s * qi);
                    }
                    let nx = dot(&x, &x).sqrt();
                    x.iter_mut().for_each(|xi| *xi /= nx);
                    let theta = eig.eigenvalues[i];
                    let r = residual(h, theta, &x);
                    if r > tol * theta.abs().max(1.0) {
                        return Err(FockError::NoConvergence { residual: r, steps: m });
                    }
                    out.values.push(theta);
                    out.vectors.push(x);
                }
                return Ok(out);
            }
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    unreachable!("the loop returns at max_steps")
}

/// `(H − E)x` norm for reporting.
pub fn eigen_residual(h: &SparseMatrix, value: f64, v: &[f64]) -> f64 {
    residual(h, value, v)
}

