//! Complex Schur decomposition (Hessenberg reduction + single-shift QR) and
//! eigenvectors by triangular back substitution.

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ComplexVector};
use crate::scalar::Real;

pub(crate) struct Eigenpairs<T> {
    pub values: Vec<Complex<T>>,
    pub vectors: Vec<ComplexVector<T>>,
}

/// Eigenvalues and (unnormalized) right eigenvectors of a general complex matrix.
pub(crate) fn eigenpairs<T: Real>(a: &ComplexMatrix<T>) -> Result<Eigenpairs<T>> {
    let n = a.dim();
    let (t, q) = schur(a)?;
    let scale = t.max_abs().max(T::min_positive_value());
    let tiny = T::epsilon() * scale;
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = vec![Complex::<T>::zero(); n];
        y[k] = Complex::one();
        for j in (0..k).rev() {
            let mut s = Complex::<T>::zero();
            for l in j + 1..=k {
                s = s + t[(j, l)] * y[l];
            }
            let mut d = t[(j, j)] - lambda;
            if d.norm() < tiny {
                d = Complex::new(tiny, T::zero());
            }
            y[j] = -s / d;
        }
        values.push(lambda);
        vectors.push(q.mul_vec(&y));
    }
    Ok(Eigenpairs { values, vectors })
}

/// Returns `(T, Q)` with `A = Q T Q†`, `T` upper triangular and `Q` unitary.
fn schur<T: Real>(a: &ComplexMatrix<T>) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    let n = a.dim();
    let mut h = a.clone();
    let mut q = ComplexMatrix::identity(n);
    hessenberg(&mut h, &mut q);
    if n == 1 {
        return Ok((h, q));
    }

    let eps = T::epsilon();
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n;
    let mut total = 0usize;
    while hi > 0 {
        let mut lo = hi;
        while lo > 0 {
            let sub = h[(lo, lo - 1)].norm();
            let diag = h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm();
            let floor = if diag.is_zero() { h.max_abs() } else { diag };
            if sub <= eps * floor {
                h[(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { dim: n });
        }

        let shift = if iter % 11 == 10 {
            // exceptional shift to break cycles
            h[(hi, hi)] + Complex::new(h[(hi, hi - 1)].norm(), T::zero())
        } else {
            wilkinson_shift(
                h[(hi - 1, hi - 1)],
                h[(hi - 1, hi)],
                h[(hi, hi - 1)],
                h[(hi, hi)],
            )
        };

        for k in lo..=hi {
            h[(k, k)] = h[(k, k)] - shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (cs, sn) = givens(h[(k, k)], h[(k + 1, k)]);
            for col in k..n {
                let (x, y) = (h[(k, col)], h[(k + 1, col)]);
                h[(k, col)] = cs.conj() * x + sn.conj() * y;
                h[(k + 1, col)] = -sn * x + cs * y;
            }
            h[(k + 1, k)] = Complex::zero();
            rotations.push((cs, sn));
        }
        for (idx, &(cs, sn)) in rotations.iter().enumerate() {
            let k = lo + idx;
            let last_row = (k + 2).min(hi);
            for row in 0..=last_row {
                let (x, y) = (h[(row, k)], h[(row, k + 1)]);
                h[(row, k)] = x * cs + y * sn;
                h[(row, k + 1)] = -x * sn.conj() + y * cs.conj();
            }
            for row in 0..n {
                let (x, y) = (q[(row, k)], q[(row, k + 1)]);
                q[(row, k)] = x * cs + y * sn;
                q[(row, k + 1)] = -x * sn.conj() + y * cs.conj();
            }
        }
        for k in lo..=hi {
            h[(k, k)] = h[(k, k)] + shift;
        }
    }
    for r in 1..n {
        for c in 0..r {
            h[(r, c)] = Complex::zero();
        }
    }
    Ok((h, q))
}

/// Rotation `G = [[conj(c), conj(s)], [-s, c]]` with `G [a; b] = [r; 0]`.
fn givens<T: Real>(a: Complex<T>, b: Complex<T>) -> (Complex<T>, Complex<T>) {
    let r = a.norm().hypot(b.norm());
    if r.is_zero() {
        return (Complex::one(), Complex::zero());
    }
    (a / r, b / r)
}

/// Eigenvalue of the trailing 2×2 block closest to its last diagonal entry.
fn wilkinson_shift<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
    d: Complex<T>,
) -> Complex<T> {
    let half = T::lit(0.5);
    let mean = (a + d) * half;
    let diff = (a - d) * half;
    let disc = (diff * diff + b * c).sqrt();
    let l1 = mean + disc;
    let l2 = mean - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

fn hessenberg<T: Real>(h: &mut ComplexMatrix<T>, q: &mut ComplexMatrix<T>) {
    let n = h.dim();
    if n < 3 {
        return;
    }
    for k in 0..n - 2 {
        let x: Vec<Complex<T>> = (k + 1..n).map(|r| h[(r, k)]).collect();
        let xnorm = crate::matrix::norm(&x);
        if xnorm.is_zero() {
            continue;
        }
        let phase = if x[0].norm().is_zero() {
            Complex::one()
        } else {
            x[0] / x[0].norm()
        };
        let alpha = -phase * xnorm;
        let mut v = x.clone();
        v[0] = v[0] - alpha;
        let vnorm = crate::matrix::norm(&v);
        if vnorm.is_zero() {
            continue;
        }
        for z in v.iter_mut() {
            *z = *z / vnorm;
        }
        let two = T::lit(2.0);
        // H <- P H with P = I - 2 v v†, acting on rows k+1..n
        for col in 0..n {
            let mut s = Complex::zero();
            for (i, vi) in v.iter().enumerate() {
                s = s + vi.conj() * h[(k + 1 + i, col)];
            }
            for (i, vi) in v.iter().enumerate() {
                h[(k + 1 + i, col)] = h[(k + 1 + i, col)] - vi * s * two;
            }
        }
        // H <- H P, Q <- Q P, acting on columns k+1..n
        for m in [&mut *h, &mut *q] {
            for row in 0..n {
                let mut s = Complex::<T>::zero();
                for (i, vi) in v.iter().enumerate() {
                    s = s + m[(row, k + 1 + i)] * vi;
                }
                for (i, vi) in v.iter().enumerate() {
                    m[(row, k + 1 + i)] = m[(row, k + 1 + i)] - s * vi.conj() * two;
                }
            }
        }
    }
}
