//! Chebyshev-filtered subspace iteration for the smallest eigenpairs of a
//! sparse symmetric matrix.
//!
//! Each sweep applies a scaled Chebyshev polynomial that damps the spectrum
//! above the current largest Ritz value, reorthonormalizes the block and
//! performs a Rayleigh–Ritz step. The block is wider than the number of
//! wanted pairs, which also handles repeated eigenvalues.

use rand::Rng;
use rayon::prelude::*;

use super::dense::symmetric_eigen;
use crate::error::{Error, Result};
use crate::graph::CsrMatrix;
use crate::rng;
use crate::scalar::{dot, norm, Scalar};

pub(crate) struct SubspaceOutcome<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

const MAX_SWEEPS: usize = 500;
const MIN_DEGREE: usize = 10;
const MAX_DEGREE: usize = 160;

fn matvec_block<T: Scalar>(a: &CsrMatrix<T>, xs: &[Vec<T>]) -> Vec<Vec<T>> {
    xs.par_iter()
        .map(|x| {
            let mut y = vec![T::zero(); x.len()];
            a.matvec(x, &mut y);
            y
        })
        .collect()
}

/// Largest absolute row sum, an upper bound on the spectrum.
fn gershgorin_upper<T: Scalar>(a: &CsrMatrix<T>) -> T {
    (0..a.n())
        .map(|i| a.row(i).map(|(_, v)| v.abs()).sum::<T>())
        .fold(T::zero(), |m, x| m.max(x))
}

/// Scaled Chebyshev filter damping `[lo, hi]`, normalized at `anchor`.
fn filter<T: Scalar>(
    a: &CsrMatrix<T>,
    xs: Vec<Vec<T>>,
    degree: usize,
    lo: T,
    hi: T,
    anchor: T,
) -> Vec<Vec<T>> {
    let two = T::lit(2.0);
    let e = (hi - lo) / two;
    let c = (hi + lo) / two;
    let sigma1 = e / (anchor - c);
    let tau = two / sigma1;
    xs.into_par_iter()
        .map(|x| {
            let n = x.len();
            let mut ax = vec![T::zero(); n];
            a.matvec(&x, &mut ax);
            let mut prev = x;
            let mut cur: Vec<T> = ax
                .iter()
                .zip(&prev)
                .map(|(&u, &v)| (u - c * v) * sigma1 / e)
                .collect();
            let mut sigma = sigma1;
            let mut buf = vec![T::zero(); n];
            for _ in 1..degree {
                let s_new = (tau - sigma).recip();
                a.matvec(&cur, &mut buf);
                let next: Vec<T> = buf
                    .iter()
                    .zip(&cur)
                    .zip(&prev)
                    .map(|((&ay, &y), &x)| (ay - c * y) * (two * s_new / e) - sigma * s_new * x)
                    .collect();
                prev = std::mem::replace(&mut cur, next);
                sigma = s_new;
            }
            cur
        })
        .collect()
}

/// Orthonormal basis of the span, replacing dependent vectors with fresh
/// random ones.
fn orthonormalize<T: Scalar>(xs: Vec<Vec<T>>, mut fresh: impl FnMut() -> Vec<T>) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::with_capacity(xs.len());
    for x in xs {
        let mut v = x;
        for _attempt in 0..4 {
            let before = norm(&v);
            for _ in 0..2 {
                let coeffs: Vec<T> = out.par_iter().map(|q| dot(q, &v)).collect();
                for (q, c) in out.iter().zip(coeffs) {
                    for (vi, &qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let after = norm(&v);
            if before > T::zero() && after > T::lit(1e-10) * before {
                v.iter_mut().for_each(|c| *c /= after);
                out.push(v);
                break;
            }
            v = fresh();
        }
    }
    out
}

fn combine<T: Scalar>(vs: &[Vec<T>], coeffs: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); vs[0].len()];
    for (v, &c) in vs.iter().zip(coeffs) {
        for (o, &x) in out.iter_mut().zip(v) {
            *o += c * x;
        }
    }
    out
}

pub(crate) fn smallest_eigenpairs<T: Scalar>(
    a: &CsrMatrix<T>,
    k: usize,
    tol: T,
    seed: u64,
) -> Result<SubspaceOutcome<T>> {
    let n = a.n();
    let p = (2 * k).max(k + 8).min(n);
    let hi = gershgorin_upper(a);
    let mut stream = rng::stream(seed, "subspace", 0);
    let mut fresh =
        move || -> Vec<T> { (0..n).map(|_| T::lit(stream.gen::<f64>() - 0.5)).collect() };

    let init: Vec<Vec<T>> = (0..p).map(|_| fresh()).collect();
    let mut x = orthonormalize(init, &mut fresh);
    let mut bounds: Option<(T, T)> = None;

    for _sweep in 0..MAX_SWEEPS {
        if let Some((anchor, lo)) = bounds {
            // enough degree for a fixed amplification across the damped gap
            let rel = ((lo - anchor) / (hi - lo)).max(T::lit(1e-12)).as_f64();
            let degree = ((3.0 / rel.sqrt()).ceil() as usize).clamp(MIN_DEGREE, MAX_DEGREE);
            x = orthonormalize(filter(a, x, degree, lo, hi, anchor), &mut fresh);
        }
        let ax = matvec_block(a, &x);
        let m = x.len();
        let mut h = vec![T::zero(); m * m];
        let rows: Vec<Vec<T>> = (0..m)
            .into_par_iter()
            .map(|i| (0..=i).map(|j| dot(&x[i], &ax[j])).collect())
            .collect();
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                h[i * m + j] = v;
                h[j * m + i] = v;
            }
        }
        let (theta, s) = symmetric_eigen(m, &h)?;
        let pairs: Vec<(Vec<T>, T)> = (0..m)
            .into_par_iter()
            .map(|r| {
                let y = combine(&x, &s[r]);
                let ay = combine(&ax, &s[r]);
                let res = ay
                    .iter()
                    .zip(&y)
                    .map(|(&u, &v)| (u - theta[r] * v) * (u - theta[r] * v))
                    .sum::<T>()
                    .sqrt();
                (y, res)
            })
            .collect();
        if m >= k && pairs[..k].iter().all(|p| p.1 <= tol) {
            let values = theta[..k].to_vec();
            let vectors = pairs
                .into_iter()
                .take(k)
                .map(|(mut y, _)| {
                    let ny = norm(&y);
                    y.iter_mut().for_each(|c| *c /= ny);
                    y
                })
                .collect();
            return Ok(SubspaceOutcome { values, vectors });
        }
        let top = theta[m - 1];
        bounds = Some((
            theta[0],
            if top < hi {
                top
            } else {
                (theta[0] + hi) / T::lit(2.0)
            },
        ));
        x = pairs.into_iter().map(|p| p.0).collect();
    }
    Err(Error::NoConvergence(format!(
        "subspace iteration did not reach residual {tol} for {k} eigenpairs"
    )))
}
