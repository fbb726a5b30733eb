//! Small dense symmetric linear algebra: enough for the quadratic
//! fixtures used here (d up to a few hundred), no external solver.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: |A - A^T| = {defect:e} exceeds tolerance")]
    NotSymmetric { defect: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("eigenvalue iteration failed to meet residual tolerance {tol:e}")]
    EigenNotConverged { tol: f64 },
}

/// Dense symmetric matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds from row-major entries, checking shape and symmetry
    /// (`|a_ij - a_ji| <= 1e-12 * max|a|`).
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != n * n {
            return Err(LinalgError::NotSquare {
                rows: n,
                cols: if n == 0 { 0 } else { data.len() / n },
            });
        }
        let scale = data.iter().fold(0.0f64, |a, &v| a.max(v.abs())).max(1.0);
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                defect = defect.max((data[i * n + j] - data[j * n + i]).abs());
            }
        }
        if defect > 1e-12 * scale {
            return Err(LinalgError::NotSymmetric { defect });
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Self { n, data }
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = diag[i];
        }
        Self { n, data }
    }

    /// A = Q diag(lambda) Q^T for an orthogonal Q given as rows of `q`.
    pub fn from_eigen(q: &[Vec<f64>], lambda: &[f64]) -> Self {
        let n = lambda.len();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for (k, &lk) in lambda.iter().enumerate() {
                    s += q[k][i] * lk * q[k][j];
                }
                data[i * n + j] = s;
            }
        }
        // symmetrize away rounding
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row_major(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.n);
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut s = 0.0;
            for (a, b) in row.iter().zip(x) {
                s += a * b;
            }
            out[i] = s;
        }
        out
    }

    /// Scales every entry. Used to rescale fixture spectra.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }
}

/// Cholesky factorization A = L L^T. Returns the lower factor (row-major,
/// full storage) or `NotPositiveDefinite`.
pub fn cholesky(a: &SymMatrix) -> Result<Vec<f64>, LinalgError> {
    let n = a.n;
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a.get(i, j);
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(LinalgError::NotPositiveDefinite);
                }
                l[i * n + j] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves A x = b given the Cholesky factor of A.
pub fn cholesky_solve(l: &[f64], b: &[f64]) -> Vec<f64> {
    let n = b.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// All eigenvalues (ascending) of a symmetric tridiagonal matrix with
/// diagonal `d` and subdiagonal `e`, by Sturm-sequence bisection.
pub fn tridiag_eigenvalues(d: &[f64], e: &[f64]) -> Vec<f64> {
    let n = d.len();
    assert_eq!(e.len() + 1, n.max(1));
    if n == 0 {
        return vec![];
    }
    if n == 1 {
        return vec![d[0]];
    }
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i == 0 {
            e[0].abs()
        } else if i == n - 1 {
            e[n - 2].abs()
        } else {
            e[i - 1].abs() + e[i].abs()
        };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let e2: Vec<f64> = e.iter().map(|v| v * v).collect();
    // count of eigenvalues < x
    let count_below = |x: f64| -> usize {
        let mut cnt = 0usize;
        let mut q = d[0] - x;
        if q < 0.0 {
            cnt += 1;
        }
        for i in 1..n {
            let denom = if q == 0.0 { 1e-300 } else { q };
            q = d[i] - x - e2[i - 1] / denom;
            if q < 0.0 {
                cnt += 1;
            }
        }
        cnt
    };
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let (mut a, mut b) = (lo - 1e-12 * scale, hi + 1e-12 * scale);
        // bisect until interval is at relative machine width
        for _ in 0..120 {
            let mid = 0.5 * (a + b);
            if count_below(mid) > k {
                b = mid;
            } else {
                a = mid;
            }
            if b - a <= 1e-15 * scale {
                break;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

/// Full eigendecomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations. Returns eigenvalues (ascending) and the matching
/// orthonormal eigenvectors (one `Vec` per eigenvalue).
pub fn jacobi_eigen(a: &SymMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.n;
    let mut m = a.data.clone();
    let mut v = SymMatrix::identity(n).data;
    let idx = |i: usize, j: usize| i * n + j;
    let off = |m: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += m[idx(i, j)] * m[idx(i, j)];
            }
        }
        s.sqrt()
    };
    let scale = m.iter().fold(0.0f64, |acc, &x| acc.max(x.abs())).max(1.0);
    for _sweep in 0..100 {
        if off(&m) <= 1e-14 * scale * n as f64 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[idx(p, q)];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                let theta = (m[idx(q, q)] - m[idx(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[idx(k, p)];
                    let mkq = m[idx(k, q)];
                    m[idx(k, p)] = c * mkp - s * mkq;
                    m[idx(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[idx(p, k)];
                    let mqk = m[idx(q, k)];
                    m[idx(p, k)] = c * mpk - s * mqk;
                    m[idx(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[idx(k, p)];
                    let vkq = v[idx(k, q)];
                    v[idx(k, p)] = c * vkp - s * vkq;
                    v[idx(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| (m[idx(j, j)], (0..n).map(|i| v[idx(i, j)]).collect()))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let vals = pairs.iter().map(|p| p.0).collect();
    let vecs = pairs.into_iter().map(|p| p.1).collect();
    (vals, vecs)
}

/// Extreme eigenvalues of a symmetric matrix, with the residual of each
/// extreme eigenpair checked against `tol * max(1, |lambda|)`.
pub fn extreme_eigenvalues(a: &SymMatrix, tol: f64) -> Result<(f64, f64), LinalgError> {
    let (vals, vecs) = jacobi_eigen(a);
    let n = a.n;
    if n == 0 {
        return Err(LinalgError::NotSquare { rows: 0, cols: 0 });
    }
    for &k in &[0usize, n - 1] {
        let lam = vals[k];
        let av = a.matvec(&vecs[k]);
        let mut res = 0.0f64;
        for i in 0..n {
            res += (av[i] - lam * vecs[k][i]).powi(2);
        }
        if res.sqrt() > tol * lam.abs().max(1.0) {
            return Err(LinalgError::EigenNotConverged { tol });
        }
    }
    Ok((vals[0], vals[n - 1]))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Random orthogonal matrix (rows orthonormal) via Gram-Schmidt of a
/// seeded Gaussian sample.
pub fn random_orthogonal<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<Vec<f64>> {
    use rand_distr::StandardNormal;
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(n);
    while rows.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for r in &rows {
            let c = dot(&v, r);
            for i in 0..n {
                v[i] -= c * r[i];
            }
        }
        let nv = norm2(&v);
        if nv > 1e-8 {
            for x in &mut v {
                *x /= nv;
            }
            rows.push(v);
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn cholesky_solves_diag() {
        let a = SymMatrix::from_diag(&[1.0, 4.0]);
        let l = cholesky(&a).unwrap();
        let x = cholesky_solve(&l, &[2.0, 8.0]);
        assert!((x[0] - 2.0).abs() < 1e-14);
        assert!((x[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.0, 1.0]).unwrap();
        assert!(matches!(
            cholesky(&a),
            Err(LinalgError::NotPositiveDefinite)
        ));
    }

    #[test]
    fn symmetry_check() {
        let r = SymMatrix::from_row_major(2, vec![1.0, 2.0, 2.1, 1.0]);
        assert!(matches!(r, Err(LinalgError::NotSymmetric { .. })));
    }

    #[test]
    fn tridiag_matches_dense_jacobi() {
        let d = vec![2.0, 3.0, 1.5, 4.0, 2.5];
        let e = vec![0.5, -0.7, 0.2, 0.9];
        let n = d.len();
        let mut full = vec![0.0; n * n];
        for i in 0..n {
            full[i * n + i] = d[i];
            if i + 1 < n {
                full[i * n + i + 1] = e[i];
                full[(i + 1) * n + i] = e[i];
            }
        }
        let a = SymMatrix::from_row_major(n, full).unwrap();
        let (dense, _) = jacobi_eigen(&a);
        let trid = tridiag_eigenvalues(&d, &e);
        for (x, y) in dense.iter().zip(&trid) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn jacobi_recovers_constructed_spectrum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let q = random_orthogonal(6, &mut rng);
        let lams = vec![0.1, 0.5, 1.0, 2.0, 5.0, 9.0];
        let a = SymMatrix::from_eigen(&q, &lams);
        let (vals, vecs) = jacobi_eigen(&a);
        for (v, l) in vals.iter().zip(&lams) {
            assert!((v - l).abs() < 1e-9, "{v} vs {l}");
        }
        // residual of each pair
        for (k, vec) in vecs.iter().enumerate() {
            let av = a.matvec(vec);
            let mut res = 0.0f64;
            for i in 0..6 {
                res += (av[i] - vals[k] * vec[i]).powi(2);
            }
            assert!(res.sqrt() < 1e-9);
        }
        let (lo, hi) = extreme_eigenvalues(&a, 1e-10).unwrap();
        assert!((lo - 0.1).abs() < 1e-9 && (hi - 9.0).abs() < 1e-9);
    }
}
