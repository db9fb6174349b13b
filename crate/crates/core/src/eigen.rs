//! Dense eigensolvers for the small matrices in this crate.
//!
//! Real symmetric tridiagonal problems are solved with the implicit-shift QL
//! iteration. Dense real symmetric matrices are first reduced to tridiagonal
//! form with Householder reflections. Complex Hermitian matrices go through the
//! real symmetric embedding `[[X, −Y], [Y, X]]` of `M = X + iY`, whose spectrum
//! is that of `M` with every eigenvalue doubled.

use ndarray::{s, Array1, Array2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;
const PAIR_TOL: f64 = 1e-9;
const SIGN_TOL: f64 = 1e-12;

/// Spectrum of one excitation block: ascending eigenvalues and the orthonormal
/// eigenvectors (column `j` holds the expansion coefficients of eigenvector `j`).
#[derive(Debug, Clone)]
pub struct BlockSpectrum {
    pub n: usize,
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
}

impl BlockSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Diagonalizes the symmetric tridiagonal matrix with the given diagonal and
/// first off-diagonal.
pub fn eigh_tridiagonal(diag: &[f64], offdiag: &[f64]) -> Result<BlockSpectrum> {
    check_tridiagonal(diag, offdiag)?;
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = sub_diagonal(offdiag, n);
    let mut z = Array2::eye(n);
    tql(&mut d, &mut e, Some(&mut z), n.saturating_sub(1))?;
    let (values, vectors) = sort_pairs(d, z);
    let mut vectors = vectors;
    fix_real_signs(&mut vectors);
    Ok(BlockSpectrum {
        n: n.saturating_sub(1),
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh_tridiagonal(diag: &[f64], offdiag: &[f64]) -> Result<Vec<f64>> {
    check_tridiagonal(diag, offdiag)?;
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = sub_diagonal(offdiag, n);
    tql(&mut d, &mut e, None, n.saturating_sub(1))?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Full eigendecomposition of a dense real symmetric matrix.
pub fn eigh_symmetric(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = square_dim(a.dim())?;
    let (d, off, q) = householder_tridiagonal(a, true);
    let mut q = q.expect("accumulated reflectors requested");
    let mut d = d;
    let mut e = sub_diagonal(&off, n);
    tql(&mut d, &mut e, Some(&mut q), 0)?;
    let (values, mut vectors) = sort_pairs(d, q);
    fix_real_signs(&mut vectors);
    Ok((values, vectors))
}

/// Eigenvalues of a dense real symmetric matrix, ascending.
pub fn eigvalsh_symmetric(a: &Array2<f64>) -> Result<Vec<f64>> {
    let n = square_dim(a.dim())?;
    let (mut d, off, _) = householder_tridiagonal(a, false);
    let mut e = sub_diagonal(&off, n);
    tql(&mut d, &mut e, None, 0)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Eigendecomposition of a complex Hermitian matrix: ascending real eigenvalues
/// and a unitary matrix whose columns are the eigenvectors.
///
/// Each eigenvector is phased so that its first nonzero component is real and
/// positive.
pub fn eigh_hermitian(m: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let n = square_dim(m.dim())?;
    let embedded = real_embedding(&hermitize(m)?);
    let (values, vectors) = eigh_symmetric(&embedded)?;
    let paired = pair_values(values.as_slice().expect("contiguous"))?;

    let mut out = Array2::<Complex64>::zeros((n, n));
    let mut col = 0;
    let mut start = 0;
    while start < paired.len() {
        // group of (numerically) equal complex eigenvalues
        let mut end = start + 1;
        while end < paired.len() && close(paired[end - 1], paired[end]) {
            end += 1;
        }
        let want = end - start;
        let mut basis: Vec<Array1<Complex64>> = Vec::with_capacity(want);
        for k in 2 * start..2 * end {
            let real = vectors.column(k);
            let mut v: Array1<Complex64> = (0..n)
                .map(|i| Complex64::new(real[i], real[i + n]))
                .collect();
            for b in &basis {
                let overlap: Complex64 = b.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum();
                v.zip_mut_with(b, |vi, bi| *vi -= overlap * bi);
            }
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                v.mapv_inplace(|c| c / norm);
                basis.push(v);
                if basis.len() == want {
                    break;
                }
            }
        }
        if basis.len() != want {
            return Err(Error::Pairing {
                index: 2 * start,
                lo: paired[start],
                hi: paired[end - 1],
            });
        }
        for mut v in basis {
            fix_complex_phase(&mut v);
            out.column_mut(col).assign(&v);
            col += 1;
        }
        start = end;
    }
    Ok((Array1::from(paired), out))
}

/// Eigenvalues of a complex Hermitian matrix, ascending.
pub fn eigvalsh_hermitian(m: &Array2<Complex64>) -> Result<Vec<f64>> {
    square_dim(m.dim())?;
    let embedded = real_embedding(&hermitize(m)?);
    pair_values(&eigvalsh_symmetric(&embedded)?)
}

fn check_tridiagonal(diag: &[f64], offdiag: &[f64]) -> Result<()> {
    if diag.is_empty() {
        return Err(Error::Dimension("empty tridiagonal matrix".into()));
    }
    if offdiag.len() + 1 != diag.len() {
        return Err(Error::Dimension(format!(
            "diagonal has {} entries but off-diagonal has {}",
            diag.len(),
            offdiag.len()
        )));
    }
    if diag.iter().chain(offdiag).any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("non-finite matrix entry".into()));
    }
    Ok(())
}

fn square_dim((rows, cols): (usize, usize)) -> Result<usize> {
    if rows != cols || rows == 0 {
        return Err(Error::Dimension(format!(
            "expected a nonempty square matrix, got {rows}×{cols}"
        )));
    }
    Ok(rows)
}

/// `e[i]` couples rows `i` and `i+1`; the trailing slot is workspace.
fn sub_diagonal(offdiag: &[f64], n: usize) -> Vec<f64> {
    let mut e = offdiag.to_vec();
    e.resize(n, 0.0);
    e
}

/// Implicit-shift QL on a symmetric tridiagonal matrix, in place.
///
/// On return `d` holds the (unsorted) eigenvalues and, when given, the columns
/// of `z` have been rotated into the eigenvectors.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Array2<f64>>, block: usize) -> Result<()> {
    let n = d.len();
    let max_iterations = 50 * n;
    let mut iterations = 0;
    for l in 0..n {
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
            if iterations > max_iterations {
                return Err(Error::EigenNotConverged {
                    block,
                    iterations: max_iterations,
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
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
                if let Some(z) = z.as_deref_mut() {
                    for k in 0..z.nrows() {
                        let zi1 = z[[k, i + 1]];
                        let zi = z[[k, i]];
                        z[[k, i + 1]] = s * zi + c * zi1;
                        z[[k, i]] = c * zi - s * zi1;
                    }
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
    Ok(())
}

/// Householder reduction `A = Q T Qᵀ`; returns diag(T), offdiag(T) and
/// optionally Q.
fn householder_tridiagonal(
    a: &Array2<f64>,
    want_q: bool,
) -> (Vec<f64>, Vec<f64>, Option<Array2<f64>>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut q = want_q.then(|| Array2::<f64>::eye(n));
    for k in 0..n.saturating_sub(2) {
        let x = a.slice(s![k + 1.., k]).to_owned();
        let sigma = x.dot(&x).sqrt();
        if sigma == 0.0 {
            continue;
        }
        let alpha = -sigma.copysign(x[0]);
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.dot(&v).sqrt();
        if vnorm == 0.0 {
            continue;
        }
        v /= vnorm;

        let mut sub = a.slice_mut(s![k + 1.., k + 1..]);
        let u = sub.dot(&v);
        let kappa = v.dot(&u);
        let w = &u - &(kappa * &v);
        let m = v.len();
        for i in 0..m {
            for j in 0..m {
                sub[[i, j]] -= 2.0 * (v[i] * w[j] + w[i] * v[j]);
            }
        }
        a[[k + 1, k]] = alpha;
        a[[k, k + 1]] = alpha;
        for i in k + 2..n {
            a[[i, k]] = 0.0;
            a[[k, i]] = 0.0;
        }

        if let Some(q) = q.as_mut() {
            let mut qs = q.slice_mut(s![.., k + 1..]);
            let qv = qs.dot(&v);
            for i in 0..n {
                for j in 0..m {
                    qs[[i, j]] -= 2.0 * qv[i] * v[j];
                }
            }
        }
    }
    let diag = a.diag().to_vec();
    let off = (0..n.saturating_sub(1)).map(|i| a[[i + 1, i]]).collect();
    (diag, off, q)
}

fn sort_pairs(d: Vec<f64>, z: Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let vectors = z.select(Axis(1), &order);
    (values, vectors)
}

fn fix_real_signs(v: &mut Array2<f64>) {
    for mut col in v.columns_mut() {
        if let Some(&first) = col.iter().find(|x| x.abs() > SIGN_TOL) {
            if first < 0.0 {
                col.mapv_inplace(|x| -x);
            }
        }
    }
}

fn fix_complex_phase(v: &mut Array1<Complex64>) {
    if let Some(&first) = v.iter().find(|c| c.norm() > SIGN_TOL) {
        let phase = first.conj() / first.norm();
        v.mapv_inplace(|c| c * phase);
    }
}

/// Checks Hermiticity and returns `(M + M†)/2`.
fn hermitize(m: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let scale = m.iter().map(|c| c.norm()).fold(1.0_f64, f64::max);
    let n = m.nrows();
    let mut worst = 0.0_f64;
    let mut out = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
            out[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]].conj());
        }
    }
    if !worst.is_finite() || worst > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian(worst));
    }
    Ok(out)
}

fn real_embedding(m: &Array2<Complex64>) -> Array2<f64> {
    let n = m.nrows();
    let mut out = Array2::<f64>::zeros((2 * n, 2 * n));
    for i in 0..n {
        for j in 0..n {
            let c = m[[i, j]];
            out[[i, j]] = c.re;
            out[[i + n, j + n]] = c.re;
            out[[i, j + n]] = -c.im;
            out[[i + n, j]] = c.im;
        }
    }
    out
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < PAIR_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Collapses the doubled spectrum of the real embedding.
fn pair_values(doubled: &[f64]) -> Result<Vec<f64>> {
    doubled
        .chunks_exact(2)
        .enumerate()
        .map(|(k, pair)| {
            if close(pair[0], pair[1]) {
                Ok(0.5 * (pair[0] + pair[1]))
            } else {
                Err(Error::Pairing {
                    index: 2 * k,
                    lo: pair[0],
                    hi: pair[1],
                })
            }
        })
        .collect()
}
