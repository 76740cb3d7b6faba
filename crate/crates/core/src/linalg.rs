//! Small symmetric eigensolvers: Lanczos for the leading eigenpairs of a
//! sparse operator, implicit QL for tridiagonal matrices and cyclic Jacobi
//! for dense covariance matrices.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("eigensolver did not converge (residual norm {residual:e})")]
    NotConverged { residual: f64 },
    #[error("requested {k} eigenpairs of a {n}-dimensional operator")]
    TooMany { k: usize, n: usize },
}

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `vectors[j]` belongs to `values[j]`.
    pub vectors: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Eigen-decomposition of a symmetric tridiagonal matrix by the implicit QL
/// method. `d` holds the diagonal, `e[i]` couples rows `i` and `i + 1`.
/// Returns eigenvalues and column eigenvectors `z[row][col]`, unsorted.
pub fn tridiagonal_eigen(d: &[f64], e: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), LinalgError> {
    let n = d.len();
    let mut d = d.to_vec();
    let mut e: Vec<f64> = (0..n).map(|i| if i + 1 < n { e[i] } else { 0.0 }).collect();
    let mut z = vec![vec![0.0; n]; n];
    for (i, row) in z.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for l in 0..n {
        let mut iterations = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iterations += 1;
            if iterations > 60 {
                return Err(LinalgError::NotConverged { residual: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in z.iter_mut() {
                    let f = row[i + 1];
                    row[i + 1] = s * row[i] + c * f;
                    row[i] = c * row[i] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok((d, z))
}

/// Leading `k` eigenpairs (largest algebraic) of the symmetric operator
/// `apply(x, y): y = A x` on `R^n`.
///
/// Runs Lanczos with full reorthogonalization. A breakdown continues from a
/// fresh random vector orthogonal to the basis, and the Krylov space grows
/// (up to `n`) until every returned Ritz pair has residual at most `tol`.
pub fn lanczos_top<F>(n: usize, k: usize, apply: F, seed: u64, tol: f64) -> Result<EigenPairs, LinalgError>
where
    F: Fn(&[f64], &mut [f64]),
{
    if k > n {
        return Err(LinalgError::TooMany { k, n });
    }
    if k == 0 {
        return Ok(EigenPairs {
            values: Vec::new(),
            vectors: Vec::new(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut size = n.min((2 * k + 20).max(40));
    let mut w = vec![0.0; n];
    loop {
        while basis.len() < size {
            let q = if basis.is_empty() || beta.last().is_some_and(|&b| b == 0.0) {
                match fresh_direction(&basis, n, &mut rng) {
                    Some(q) => q,
                    None => break,
                }
            } else {
                let last = basis.len() - 1;
                let b = beta[last];
                w.iter().map(|x| x / b).collect()
            };
            apply(&q, &mut w);
            let a = dot(&q, &w);
            basis.push(q);
            alpha.push(a);
            // two rounds of classical Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let h = dot(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= h * vi;
                    }
                }
            }
            let b = norm(&w);
            let scale = a.abs().max(1.0);
            beta.push(if b <= 1e-10 * scale { 0.0 } else { b });
        }
        let m = basis.len();
        let (values, z) = tridiagonal_eigen(&alpha, &beta[..m.saturating_sub(1)])?;
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
        let mut pairs = EigenPairs {
            values: Vec::with_capacity(k),
            vectors: Vec::with_capacity(k),
        };
        let mut worst = 0.0f64;
        let mut y = vec![0.0; n];
        for &j in order.iter().take(k) {
            let mut vec = vec![0.0; n];
            for (i, q) in basis.iter().enumerate() {
                let c = z[i][j];
                for (x, qi) in vec.iter_mut().zip(q) {
                    *x += c * qi;
                }
            }
            let len = norm(&vec);
            vec.iter_mut().for_each(|x| *x /= len);
            apply(&vec, &mut y);
            let theta = values[j];
            let r = y.iter().zip(&vec).map(|(a, b)| (a - theta * b).powi(2)).sum::<f64>().sqrt();
            worst = worst.max(r);
            pairs.values.push(theta);
            pairs.vectors.push(vec);
        }
        if pairs.values.len() == k && worst <= tol {
            return Ok(pairs);
        }
        if m >= n || m < size {
            return Err(LinalgError::NotConverged { residual: worst });
        }
        size = n.min(2 * size);
    }
}

fn fresh_direction<R: Rng + ?Sized>(basis: &[Vec<f64>], n: usize, rng: &mut R) -> Option<Vec<f64>> {
    for _ in 0..8 {
        let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        for _ in 0..2 {
            for v in basis {
                let h = dot(v, &q);
                for (qi, vi) in q.iter_mut().zip(v) {
                    *qi -= h * vi;
                }
            }
        }
        let len = norm(&q);
        if len > 1e-8 {
            q.iter_mut().for_each(|x| *x /= len);
            return Some(q);
        }
    }
    None
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky
/// factorization. `None` when `a` is not numerically positive definite.
pub fn cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if s <= 0.0 || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - ((i + 1)..n).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// Full eigen-decomposition of a dense symmetric matrix by cyclic Jacobi
/// rotations, sorted by descending eigenvalue.
pub fn jacobi_eigen(matrix: &[Vec<f64>]) -> Result<EigenPairs, LinalgError> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let total: f64 = a.iter().flatten().map(|x| x * x).sum();
    let mut converged = false;
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        if off <= 1e-30 * total.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    if !converged {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p][q] * a[p][q])
            .sum();
        return Err(LinalgError::NotConverged { residual: off.sqrt() });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y][y].total_cmp(&a[x][x]).then(x.cmp(&y)));
    Ok(EigenPairs {
        values: order.iter().map(|&j| a[j][j]).collect(),
        vectors: order.iter().map(|&j| v.iter().map(|row| row[j]).collect()).collect(),
    })
}
