//! Poincaré ball primitives (curvature −1).
//!
//! Points live strictly inside the open unit ball. Distances use the
//! `2·asinh(‖x − y‖ / √((1 − ‖x‖²)(1 − ‖y‖²)))` form, which is algebraically
//! identical to the `arcosh` expression but does not lose precision for
//! nearly coincident points.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{dot, norm, norm_sq, Scalar};

/// Default radial margin used when clamping iterates back into the ball.
pub const DEFAULT_PROJECTION_MARGIN: f64 = 1e-5;

/// Smallest admissible distance to the boundary for computed results.
#[inline]
pub(crate) fn boundary_eps<T: Scalar>() -> T {
    T::lit(1e-15).max(T::epsilon() * T::lit(4.0))
}

/// A point strictly inside the unit ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PoincarePoint<T> {
    coords: Vec<T>,
}

impl<T: Scalar> PoincarePoint<T> {
    /// Validates finiteness, dimension (≥ 2) and ‖x‖ < 1.
    pub fn new(coords: Vec<T>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionTooSmall(coords.len()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        let n = norm(&coords);
        if n >= T::one() {
            return Err(Error::OutsideBall { norm: n.as_f64() });
        }
        Ok(Self { coords })
    }

    pub fn origin(dim: usize) -> Self {
        Self {
            coords: vec![T::zero(); dim],
        }
    }

    /// Caller guarantees the invariants.
    pub(crate) fn from_raw(coords: Vec<T>) -> Self {
        debug_assert!(norm(&coords) < T::one());
        Self { coords }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn norm(&self) -> T {
        norm(&self.coords)
    }

    /// Euclidean negation, the Möbius inverse.
    pub fn neg(&self) -> Self {
        Self {
            coords: self.coords.iter().map(|&c| -c).collect(),
        }
    }
}

/// A tangent vector attached to a base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector<T> {
    base: PoincarePoint<T>,
    vec: Vec<T>,
}

impl<T: Scalar> TangentVector<T> {
    pub fn new(base: PoincarePoint<T>, vec: Vec<T>) -> Result<Self> {
        if vec.len() != base.dim() {
            return Err(Error::DimensionMismatch {
                expected: base.dim(),
                got: vec.len(),
            });
        }
        if vec.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { base, vec })
    }

    pub fn zero(base: PoincarePoint<T>) -> Self {
        let vec = vec![T::zero(); base.dim()];
        Self { base, vec }
    }

    pub fn base(&self) -> &PoincarePoint<T> {
        &self.base
    }

    pub fn vec(&self) -> &[T] {
        &self.vec
    }

    /// Euclidean norm of the coordinate vector.
    pub fn norm(&self) -> T {
        norm(&self.vec)
    }
}

fn check_dims<T: Scalar>(x: &PoincarePoint<T>, y: &PoincarePoint<T>) -> Result<()> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(())
}

/// Pulls a computed vector back strictly inside the ball.
pub(crate) fn clamp_inside<T: Scalar>(v: &mut [T]) {
    let limit = T::one() - boundary_eps::<T>();
    let n = norm(v);
    if n > limit {
        let s = limit / n;
        v.iter_mut().for_each(|c| *c *= s);
    }
}

pub(crate) fn mobius_add_raw<T: Scalar>(x: &[T], y: &[T], out: &mut [T]) {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let two = T::lit(2.0);
    let a = T::one() + two * xy + y2;
    let b = T::one() - x2;
    let den = T::one() + two * xy + x2 * y2;
    for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
        *o = (a * xi + b * yi) / den;
    }
    clamp_inside(out);
}

/// Möbius addition `x ⊕ y`.
pub fn mobius_add<T: Scalar>(
    x: &PoincarePoint<T>,
    y: &PoincarePoint<T>,
) -> Result<PoincarePoint<T>> {
    check_dims(x, y)?;
    let mut out = vec![T::zero(); x.dim()];
    mobius_add_raw(&x.coords, &y.coords, &mut out);
    Ok(PoincarePoint::from_raw(out))
}

/// `λ_x = 2 / (1 − ‖x‖²)`.
pub fn conformal_factor<T: Scalar>(x: &PoincarePoint<T>) -> T {
    conformal_factor_raw(&x.coords)
}

#[inline]
pub(crate) fn conformal_factor_raw<T: Scalar>(x: &[T]) -> T {
    T::lit(2.0) / (T::one() - norm_sq(x))
}

pub(crate) fn distance_raw<T: Scalar>(x: &[T], y: &[T]) -> T {
    let diff2 = x
        .iter()
        .zip(y)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
    let den = (T::one() - norm_sq(x)) * (T::one() - norm_sq(y));
    let s = (diff2 / den).sqrt();
    T::lit(2.0) * s.asinh()
}

/// Geodesic distance on the ball.
pub fn distance<T: Scalar>(x: &PoincarePoint<T>, y: &PoincarePoint<T>) -> Result<T> {
    check_dims(x, y)?;
    Ok(distance_raw(&x.coords, &y.coords))
}

pub(crate) fn exp_map_raw<T: Scalar>(x: &[T], v: &[T], out: &mut [T]) {
    let vn = norm(v);
    if vn == T::zero() {
        out.copy_from_slice(x);
        return;
    }
    let lambda = conformal_factor_raw(x);
    let t = (lambda * vn / T::lit(2.0)).tanh() / vn;
    let step: Vec<T> = v.iter().map(|&c| c * t).collect();
    mobius_add_raw(x, &step, out);
}

/// Exponential map `Exp_x(v)`; the zero vector maps to `x` exactly.
pub fn exp_map<T: Scalar>(v: &TangentVector<T>) -> PoincarePoint<T> {
    let x = v.base.coords();
    let mut out = vec![T::zero(); x.len()];
    exp_map_raw(x, &v.vec, &mut out);
    PoincarePoint::from_raw(out)
}

/// `(−x) ⊕ y`.
pub(crate) fn mobius_sub_raw<T: Scalar>(x: &[T], y: &[T], out: &mut [T]) {
    let xy = dot(x, y);
    let x2 = norm_sq(x);
    let y2 = norm_sq(y);
    let two = T::lit(2.0);
    let a = T::one() - two * xy + y2;
    let b = T::one() - x2;
    let den = T::one() - two * xy + x2 * y2;
    for ((o, &xi), &yi) in out.iter_mut().zip(x).zip(y) {
        *o = (-(a * xi) + b * yi) / den;
    }
    clamp_inside(out);
}

pub(crate) fn log_map_raw<T: Scalar>(x: &[T], y: &[T], out: &mut [T]) {
    mobius_sub_raw(x, y, out);
    let n = norm(out);
    if n == T::zero() {
        out.iter_mut().for_each(|c| *c = T::zero());
        return;
    }
    let lambda = conformal_factor_raw(x);
    let capped = n.min(T::one() - boundary_eps::<T>());
    let s = T::lit(2.0) / lambda * capped.atanh() / n;
    out.iter_mut().for_each(|c| *c *= s);
}

/// Logarithmic map `Log_x(y)`; returns the zero vector when `x == y`.
pub fn log_map<T: Scalar>(x: &PoincarePoint<T>, y: &PoincarePoint<T>) -> Result<TangentVector<T>> {
    check_dims(x, y)?;
    let mut out = vec![T::zero(); x.dim()];
    log_map_raw(&x.coords, &y.coords, &mut out);
    Ok(TangentVector {
        base: x.clone(),
        vec: out,
    })
}

/// Radially clamps `v` to norm at most `1 − margin`.
pub fn project_to_ball<T: Scalar>(v: &[T], margin: T) -> Result<PoincarePoint<T>> {
    if !(margin > T::zero() && margin < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "projection margin must lie in (0, 1), got {margin}"
        )));
    }
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite);
    }
    if v.len() < 2 {
        return Err(Error::DimensionTooSmall(v.len()));
    }
    let mut out = v.to_vec();
    project_raw(&mut out, margin);
    Ok(PoincarePoint::from_raw(out))
}

pub(crate) fn project_raw<T: Scalar>(v: &mut [T], margin: T) {
    let limit = T::one() - margin;
    let n = norm(v);
    if n > limit {
        let s = limit / n;
        v.iter_mut().for_each(|c| *c *= s);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(c: &[f64]) -> PoincarePoint<f64> {
        PoincarePoint::new(c.to_vec()).unwrap()
    }

    #[test]
    fn construction_guards() {
        assert!(matches!(
            PoincarePoint::new(vec![1.0, 0.0]),
            Err(Error::OutsideBall { .. })
        ));
        assert!(matches!(
            PoincarePoint::new(vec![0.5]),
            Err(Error::DimensionTooSmall(1))
        ));
        assert!(matches!(
            PoincarePoint::new(vec![f64::NAN, 0.0]),
            Err(Error::NonFinite)
        ));
    }

    #[test]
    fn mobius_examples() {
        let r = mobius_add(&p(&[0.3, 0.1]), &p(&[0.0, 0.0])).unwrap();
        assert_eq!(r.coords(), &[0.3, 0.1]);
        let r = mobius_add(&p(&[-0.5, 0.0]), &p(&[0.5, 0.0])).unwrap();
        assert_abs_diff_eq!(r.norm(), 0.0, epsilon = 1e-15);
        let r = mobius_add(&p(&[0.5, 0.0]), &p(&[0.5, 0.0])).unwrap();
        assert_abs_diff_eq!(r.coords()[0], 0.8, epsilon = 1e-15);
        // collinear points add their rapidities
        let expect = (0.5f64.atanh() * 2.0).tanh();
        assert_abs_diff_eq!(r.coords()[0], expect, epsilon = 1e-15);
        assert!(mobius_add(&p(&[0.1, 0.0]), &p(&[0.1, 0.0, 0.0])).is_err());
    }

    #[test]
    fn conformal_factor_examples() {
        assert_eq!(conformal_factor(&p(&[0.0, 0.0])), 2.0);
        assert_abs_diff_eq!(
            conformal_factor(&p(&[0.5, 0.0])),
            8.0 / 3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            conformal_factor(&p(&[0.0, 0.8])),
            2.0 / 0.36,
            epsilon = 1e-12
        );
    }

    #[test]
    fn distance_examples() {
        let o = p(&[0.0, 0.0]);
        assert_eq!(distance(&o, &o).unwrap(), 0.0);
        assert_abs_diff_eq!(
            distance(&o, &p(&[0.5, 0.0])).unwrap(),
            3f64.ln(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            distance(&p(&[-0.5, 0.0]), &p(&[0.5, 0.0])).unwrap(),
            2.0 * 3f64.ln(),
            epsilon = 1e-12
        );
        // arcosh form as an independent route
        let (x, y) = (p(&[0.1, 0.7]), p(&[-0.3, 0.2]));
        let d2: f64 = (0.4f64).powi(2) + 0.5f64.powi(2);
        let arg = 1.0 + 2.0 * d2 / ((1.0 - 0.5) * (1.0 - 0.13));
        assert_abs_diff_eq!(distance(&x, &y).unwrap(), arg.acosh(), epsilon = 1e-12);
    }

    #[test]
    fn exp_log_examples() {
        let o = p(&[0.0, 0.0]);
        let z = exp_map(&TangentVector::zero(o.clone()));
        assert_eq!(z.coords(), o.coords());
        let v = TangentVector::new(o.clone(), vec![0.5f64.atanh(), 0.0]).unwrap();
        assert_abs_diff_eq!(exp_map(&v).coords()[0], 0.5, epsilon = 1e-12);
        let l = log_map(&o, &p(&[0.5, 0.0])).unwrap();
        assert_abs_diff_eq!(l.vec()[0], 0.5f64.atanh(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            l.norm(),
            distance(&o, &p(&[0.5, 0.0])).unwrap() / 2.0,
            epsilon = 1e-12
        );
        let x = p(&[0.2, -0.4]);
        assert_eq!(log_map(&x, &x).unwrap().norm(), 0.0);
        assert!(TangentVector::new(o, vec![0.0; 3]).is_err());
    }

    #[test]
    fn projection_examples() {
        assert_eq!(
            project_to_ball(&[0.3, 0.0], 1e-5).unwrap().coords(),
            &[0.3, 0.0]
        );
        assert_abs_diff_eq!(
            project_to_ball(&[2.0, 0.0], 1e-5).unwrap().coords()[0],
            0.99999,
            epsilon = 1e-15
        );
        let q = project_to_ball(&[0.0, -1.5], 0.01).unwrap();
        assert_abs_diff_eq!(q.coords()[1], -0.99, epsilon = 1e-15);
        assert_eq!(q.coords()[0], 0.0);
        assert!(matches!(
            project_to_ball(&[f64::INFINITY, 0.0], 1e-5),
            Err(Error::NonFinite)
        ));
        assert!(project_to_ball(&[0.1, 0.0], 0.0).is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let x = PoincarePoint::new(vec![0.5f32, 0.0]).unwrap();
        let d = distance(&PoincarePoint::origin(2), &x).unwrap();
        assert!((d - 3f32.ln()).abs() < 1e-6);
        let l = log_map(&PoincarePoint::origin(2), &x).unwrap();
        assert!((exp_map(&l).coords()[0] - 0.5).abs() < 1e-6);
    }
}
