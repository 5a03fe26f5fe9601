//! Singular value kernels used by the operator type.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

pub(crate) const POWER_MAX_ITER: usize = 10_000;
const LANCZOS_MAX_DIM: usize = 400;

/// Complex product through four real products, which run on the blocked
/// real kernel.
pub(crate) fn complex_gemm(a: &DMatrix<C>, b: &DMatrix<C>) -> DMatrix<C> {
    let ar = a.map(|z| z.re);
    let ai = a.map(|z| z.im);
    let br = b.map(|z| z.re);
    let bi = b.map(|z| z.im);
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    DMatrix::from_fn(a.nrows(), b.ncols(), |i, j| C::new(re[(i, j)], im[(i, j)]))
}

/// Largest singular value with its right singular vector.
pub(crate) fn svd_largest(m: &DMatrix<C>) -> Result<(f64, DVector<C>)> {
    svd_extreme(m, true)
}

/// Smallest singular value of a square matrix with its right singular vector.
pub(crate) fn svd_smallest(m: &DMatrix<C>) -> Result<(f64, DVector<C>)> {
    svd_extreme(m, false)
}

/// Smallest singular value of a square matrix, without vectors.
pub(crate) fn svd_smallest_value(m: &DMatrix<C>) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("SVD did not converge", f64::NAN))?;
    Ok(svd.singular_values.min())
}

fn svd_extreme(m: &DMatrix<C>, largest: bool) -> Result<(f64, DVector<C>)> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Ok((0.0, DVector::zeros(c)));
    }
    if !largest && r < c {
        // a wide matrix has a kernel
        return Err(Error::Invalid("smallest singular value of a wide matrix".into()));
    }
    let svd = m
        .clone()
        .try_svd(false, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::numerical("SVD did not converge", f64::NAN))?;
    let s = &svd.singular_values;
    let pick = (0..s.len())
        .reduce(|a, b| {
            let better = if largest { s[b] > s[a] } else { s[b] < s[a] };
            if better {
                b
            } else {
                a
            }
        })
        .unwrap();
    let vt = svd.v_t.as_ref().unwrap();
    let v = DVector::from_iterator(c, vt.row(pick).iter().map(|z| z.conj()));
    Ok((s[pick], v))
}

fn normalize(v: &mut [C]) -> f64 {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if n > 0.0 {
        for z in v.iter_mut() {
            *z /= n;
        }
    }
    n
}

/// Deterministic start vector supported on `support`.
pub(crate) fn start_vector(n: usize, support: &[usize]) -> Vec<C> {
    let mut v = vec![C::new(0.0, 0.0); n];
    for (t, &i) in support.iter().enumerate() {
        let x = t as f64 + 1.0;
        v[i] = C::new(1.0 + 0.3 * (1.7 * x).sin(), 0.2 * (0.9 * x).cos());
    }
    normalize(&mut v);
    v
}

/// Largest singular value by Lanczos on `A^H A` with full
/// reorthogonalization. Ritz values converge quickly even when the top of
/// the spectrum is clustered, where plain power iteration stalls.
pub(crate) fn lanczos_largest(
    start: Vec<C>,
    tol: f64,
    apply: impl Fn(&[C]) -> Vec<C>,
    apply_adjoint: impl Fn(&[C]) -> Vec<C>,
) -> Result<(f64, Vec<C>)> {
    let n = start.len();
    let max_k = n.min(LANCZOS_MAX_DIM);
    let mut q = start;
    if normalize(&mut q) == 0.0 {
        return Ok((0.0, q));
    }
    let mut basis: Vec<Vec<C>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut best = (0.0f64, DVector::<f64>::zeros(1));
    for j in 0..max_k {
        let mut w = apply_adjoint(&apply(&q));
        let a: f64 = q.iter().zip(&w).map(|(x, y)| (x.conj() * y).re).sum();
        basis.push(q.clone());
        alphas.push(a);
        for _ in 0..2 {
            for v in &basis {
                let c: C = v.iter().zip(&w).map(|(x, y)| x.conj() * y).sum();
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
        }
        let b = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let k = j + 1;
        let t = DMatrix::from_fn(k, k, |r, c| {
            if r == c {
                alphas[r]
            } else if r == c + 1 {
                betas[c]
            } else if c == r + 1 {
                betas[r]
            } else {
                0.0
            }
        });
        let eig = t.symmetric_eigen();
        let (imax, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        let s = eig.eigenvectors.column(imax).into_owned();
        let residual = b * s[k - 1].abs();
        best = (theta, s);
        if theta <= 0.0 || residual <= tol * theta || b <= f64::EPSILON * theta.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if k == max_k {
            return Err(Error::numerical(
                format!("Lanczos did not reach tolerance {tol:e} in {max_k} steps"),
                theta.max(0.0).sqrt(),
            ));
        }
        betas.push(b);
        q = w.iter().map(|z| z / b).collect();
    }
    let (theta, s) = best;
    let mut v = vec![C::new(0.0, 0.0); n];
    for (coef, bv) in s.iter().zip(&basis) {
        for (vi, x) in v.iter_mut().zip(bv) {
            *vi += x * *coef;
        }
    }
    normalize(&mut v);
    let w = apply(&v);
    let s_fin = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok((s_fin.max(theta.max(0.0).sqrt()), v))
}

/// Smallest singular value of a square matrix by inverse iteration on
/// `(M^H M)^{-1}`.
pub(crate) fn inverse_iteration_smallest(m: &DMatrix<C>, tol: f64) -> Result<(f64, DVector<C>)> {
    let n = m.nrows();
    let lu = m.clone().lu();
    let lu_h = m.adjoint().lu();
    let support: Vec<usize> = (0..n).collect();
    let mut v = DVector::from_vec(start_vector(n, &support));
    let mut est = 0.0f64;
    for _ in 0..POWER_MAX_ITER {
        let y = match lu.solve(&v) {
            Some(y) => y,
            None => return Ok((0.0, v)),
        };
        let mut z = match lu_h.solve(&y) {
            Some(z) => z,
            None => return Ok((0.0, v)),
        };
        let gain = y.norm();
        if !gain.is_finite() {
            return Ok((0.0, v));
        }
        let zn = z.norm();
        z /= C::new(zn, 0.0);
        let done = (gain - est).abs() <= tol * gain;
        est = gain;
        v = z;
        if done {
            let sigma = (m * &v).norm();
            return Ok((sigma.min(1.0 / est), v));
        }
    }
    Err(Error::numerical(
        "inverse iteration for the smallest singular value did not converge",
        1.0 / est,
    ))
}
