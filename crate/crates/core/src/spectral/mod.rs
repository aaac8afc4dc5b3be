//! Eigendecomposition of the normalized Laplacian and everything derived
//! from the spectrum: heat-kernel weights, effective dimensionality, gap
//! candidates and spectral clustering.

mod chebyshev;
mod dense;
pub mod kmeans;

pub use dense::symmetric_eigen;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frechet::WeightVector;
use crate::graph::{CsrMatrix, Partition};
use crate::scalar::Scalar;

/// Largest matrix handled by the dense solver.
pub const DENSE_LIMIT: usize = 512;

/// Default number of retained modes.
pub const DEFAULT_EIGS: usize = 50;

/// Eigenvalues below this are treated as zero when scanning for gaps.
pub const ZERO_FLOOR: f64 = 1e-10;

/// Leading eigenpairs, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    eigenvalues: Vec<T>,
    eigenvectors: Vec<Vec<T>>,
    n: usize,
}

impl<T: Scalar> SpectralDecomposition<T> {
    /// Checks shapes and ordering; `eigenvectors[k]` belongs to `eigenvalues[k]`.
    pub fn from_parts(eigenvalues: Vec<T>, eigenvectors: Vec<Vec<T>>) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::Empty("spectrum"));
        }
        if eigenvalues.len() != eigenvectors.len() {
            return Err(Error::LengthMismatch {
                left: eigenvalues.len(),
                right: eigenvectors.len(),
            });
        }
        let n = eigenvectors[0].len();
        if let Some(v) = eigenvectors.iter().find(|v| v.len() != n) {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: n,
            });
        }
        if eigenvalues.windows(2).any(|w| w[1] < w[0]) || eigenvalues.iter().any(|l| !l.is_finite())
        {
            return Err(Error::InvalidParameter(
                "eigenvalues must be finite and ascending".into(),
            ));
        }
        if eigenvalues.len() > n {
            return Err(Error::InvalidParameter("more modes than nodes".into()));
        }
        Ok(Self {
            eigenvalues,
            eigenvectors,
            n,
        })
    }

    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &[Vec<T>] {
        &self.eigenvectors
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_retained(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_full(&self) -> bool {
        self.k_retained() == self.n
    }

    /// Largest retained eigenvalue.
    pub fn lambda_max(&self) -> T {
        *self.eigenvalues.last().unwrap()
    }

    /// Smallest eigenvalue above the zero floor, if any.
    pub fn smallest_nonzero(&self) -> Option<T> {
        let floor = T::lit(ZERO_FLOOR);
        self.eigenvalues.iter().copied().find(|&l| l > floor)
    }

    /// Keeps only the first `k` modes.
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k_retained() {
            return Err(Error::InvalidParameter(format!(
                "cannot keep {k} of {} modes",
                self.k_retained()
            )));
        }
        Ok(Self {
            eigenvalues: self.eigenvalues[..k].to_vec(),
            eigenvectors: self.eigenvectors[..k].to_vec(),
            n: self.n,
        })
    }
}

fn residual_tolerance<T: Scalar>() -> T {
    T::lit(1e-7).max(T::lit(1e3) * T::epsilon())
}

fn symmetry_tolerance<T: Scalar>() -> T {
    T::lit(1e-10).max(T::lit(1e2) * T::epsilon())
}

/// Flips each vector so its largest-magnitude entry is positive.
fn fix_signs<T: Scalar>(vectors: &mut [Vec<T>]) {
    for v in vectors {
        let big = v.iter().copied().fold(
            T::zero(),
            |acc, x| if x.abs() > acc.abs() { x } else { acc },
        );
        if big < T::zero() {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// The `k` smallest eigenpairs of a symmetric matrix.
///
/// Matrices up to [`DENSE_LIMIT`] rows are solved densely; larger ones use
/// Chebyshev-filtered subspace iteration with residual `‖Aφ − λφ‖ ≤ 1e-7`
/// per pair.
pub fn partial_eigendecomposition<T: Scalar>(
    l: &CsrMatrix<T>,
    k: usize,
) -> Result<SpectralDecomposition<T>> {
    let n = l.n();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "k must be in 1..={n}, got {k}"
        )));
    }
    l.check_symmetric(symmetry_tolerance())?;
    let (mut values, mut vectors) = if n <= DENSE_LIMIT {
        let (mut vals, mut vecs) = symmetric_eigen(n, &l.to_dense())?;
        vals.truncate(k);
        vecs.truncate(k);
        (vals, vecs)
    } else {
        let out = chebyshev::smallest_eigenpairs(l, k, residual_tolerance(), 0)?;
        (out.values, out.vectors)
    };
    for v in &mut values {
        if *v < T::zero() && *v > -T::lit(1e-9) {
            *v = T::zero();
        }
    }
    fix_signs(&mut vectors);
    SpectralDecomposition::from_parts(values, vectors)
}

/// All eigenpairs, always via the dense solver.
pub fn full_eigendecomposition<T: Scalar>(l: &CsrMatrix<T>) -> Result<SpectralDecomposition<T>> {
    l.check_symmetric(symmetry_tolerance())?;
    let (mut values, mut vectors) = symmetric_eigen(l.n(), &l.to_dense())?;
    for v in &mut values {
        if *v < T::zero() && *v > -T::lit(1e-9) {
            *v = T::zero();
        }
    }
    fix_signs(&mut vectors);
    SpectralDecomposition::from_parts(values, vectors)
}

/// Row `focus` of the truncated heat kernel `Σ e^{−σλ_k} φ_k(focus) φ_k(·)`.
pub fn heat_kernel_row<T: Scalar>(
    dec: &SpectralDecomposition<T>,
    focus: usize,
    sigma: T,
) -> Result<Vec<T>> {
    if focus >= dec.n() {
        return Err(Error::IndexOutOfRange {
            index: focus,
            size: dec.n(),
        });
    }
    if !(sigma >= T::zero() && sigma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "scale must be nonnegative, got {sigma}"
        )));
    }
    let mut row = vec![T::zero(); dec.n()];
    for (lam, phi) in dec.eigenvalues().iter().zip(dec.eigenvectors()) {
        let c = (-sigma * *lam).exp() * phi[focus];
        if c == T::zero() {
            continue;
        }
        for (r, &p) in row.iter_mut().zip(phi) {
            *r += c * p;
        }
    }
    Ok(row)
}

/// Applies the truncated operator `exp(−σL)` to `signal`.
pub fn diffuse<T: Scalar>(
    dec: &SpectralDecomposition<T>,
    signal: &[T],
    sigma: T,
) -> Result<Vec<T>> {
    if signal.len() != dec.n() {
        return Err(Error::LengthMismatch {
            left: signal.len(),
            right: dec.n(),
        });
    }
    let mut out = vec![T::zero(); dec.n()];
    for (lam, phi) in dec.eigenvalues().iter().zip(dec.eigenvectors()) {
        let c = (-sigma * *lam).exp() * crate::scalar::dot(phi, signal);
        for (o, &p) in out.iter_mut().zip(phi) {
            *o += c * p;
        }
    }
    Ok(out)
}

/// Heat-kernel row clamped at zero and normalized to a distribution.
/// Falls back to the indicator at `focus` if nothing positive survives.
pub fn heat_kernel_weights<T: Scalar>(
    dec: &SpectralDecomposition<T>,
    focus: usize,
    sigma: T,
) -> Result<WeightVector<T>> {
    let row: Vec<T> = heat_kernel_row(dec, focus, sigma)?
        .into_iter()
        .map(|x| x.max(T::zero()))
        .collect();
    if row.iter().all(|&x| x == T::zero()) {
        let mut delta = vec![T::zero(); dec.n()];
        delta[focus] = T::one();
        return WeightVector::new(delta);
    }
    WeightVector::from_masses(row)
}

/// Number of modes with `e^{−σλ} > ε`, at least one. Factors within a
/// few ulps of `ε` count as equal, so exact crossings are not counted.
pub fn effective_dimensionality<T: Scalar>(
    dec: &SpectralDecomposition<T>,
    sigma: T,
    eps: T,
) -> usize {
    let cut = eps * (T::one() + T::lit(64.0) * T::epsilon());
    dec.eigenvalues()
        .iter()
        .filter(|&&l| (-sigma * l).exp() > cut)
        .count()
        .max(1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanThresholds<T> {
    /// Mode survival threshold ε in K*(σ).
    pub mode_threshold: T,
    /// Minimum ratio λ_{k+1}/λ_k for a gap candidate.
    pub gap_ratio: T,
}

impl<T: Scalar> Default for ScanThresholds<T> {
    fn default() -> Self {
        Self {
            mode_threshold: T::lit((-1.0f64).exp()),
            gap_ratio: T::lit(2.0),
        }
    }
}

impl<T: Scalar> ScanThresholds<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.mode_threshold > T::zero() && self.mode_threshold < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "mode threshold must lie in (0, 1), got {}",
                self.mode_threshold
            )));
        }
        if !(self.gap_ratio > T::one() && self.gap_ratio.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gap ratio must exceed 1, got {}",
                self.gap_ratio
            )));
        }
        Ok(())
    }
}

/// A scale suggested by a large eigenvalue ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapCandidate<T> {
    /// 1-based mode index.
    pub k: usize,
    /// `1 / λ_k`.
    pub sigma: T,
    /// `λ_{k+1} / λ_k`.
    pub ratio: T,
}

/// Modes with `λ_{k+1}/λ_k > R`, skipping near-zero `λ_k`, in decreasing
/// σ order.
pub fn spectral_gap_candidates<T: Scalar>(
    dec: &SpectralDecomposition<T>,
    ratio: T,
) -> Vec<GapCandidate<T>> {
    let floor = T::lit(ZERO_FLOOR);
    let lam = dec.eigenvalues();
    (0..lam.len().saturating_sub(1))
        .filter(|&i| lam[i] > floor && lam[i + 1] / lam[i] > ratio)
        .map(|i| GapCandidate {
            k: i + 1,
            sigma: lam[i].recip(),
            ratio: lam[i + 1] / lam[i],
        })
        .collect()
}

/// k-means on the row-normalized leading `k` eigenvectors.
pub fn spectral_clustering<T: Scalar>(
    dec: &SpectralDecomposition<T>,
    k: usize,
    seed: u64,
) -> Result<Partition> {
    if k == 0 || k > dec.k_retained() {
        return Err(Error::InvalidParameter(format!(
            "cluster count must be in 1..={}, got {k}",
            dec.k_retained()
        )));
    }
    if k == 1 {
        return Partition::new(vec![0; dec.n()]);
    }
    let rows: Vec<Vec<T>> = (0..dec.n())
        .into_par_iter()
        .map(|i| {
            let mut r: Vec<T> = dec.eigenvectors()[..k].iter().map(|v| v[i]).collect();
            let nr = crate::scalar::norm(&r);
            if nr > T::zero() {
                r.iter_mut().for_each(|x| *x /= nr);
            }
            r
        })
        .collect();
    let res = kmeans::kmeans(&rows, k, 10, seed);
    Ok(Partition::from_raw(&res.labels))
}
