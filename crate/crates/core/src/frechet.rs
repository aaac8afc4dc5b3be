//! Weighted Fréchet means on the Poincaré ball via tangent-space (Karcher)
//! iteration.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    boundary_eps, conformal_factor_raw, distance_raw, exp_map_raw, mobius_sub_raw, project_raw,
    PoincarePoint, DEFAULT_PROJECTION_MARGIN,
};
use crate::scalar::{dot, norm, norm_sq, Scalar};

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeightVector<T> {
    weights: Vec<T>,
}

impl<T: Scalar> WeightVector<T> {
    fn sum_tolerance(n: usize) -> T {
        T::lit(1e-9).max(T::epsilon() * T::from_usize_lossy(n.max(1)) * T::lit(16.0))
    }

    /// Accepts an already normalized vector.
    pub fn new(weights: Vec<T>) -> Result<Self> {
        check_entries(&weights)?;
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > Self::sum_tolerance(weights.len()) {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {total}, expected 1"
            )));
        }
        Ok(Self { weights })
    }

    /// Normalizes nonnegative masses; zero total mass is rejected.
    pub fn from_masses(masses: Vec<T>) -> Result<Self> {
        check_entries(&masses)?;
        let total: T = masses.iter().copied().sum();
        if total <= T::zero() {
            return Err(Error::InvalidWeights("total mass is zero".into()));
        }
        Ok(Self {
            weights: masses.into_iter().map(|m| m / total).collect(),
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty("weight vector"));
        }
        let w = T::one() / T::from_usize_lossy(n);
        Ok(Self {
            weights: vec![w; n],
        })
    }

    pub fn as_slice(&self) -> &[T] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Index of the largest weight (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }
}

fn check_entries<T: Scalar>(w: &[T]) -> Result<()> {
    if w.is_empty() {
        return Err(Error::Empty("weight vector"));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    if let Some(x) = w.iter().find(|&&x| x < T::zero()) {
        return Err(Error::InvalidWeights(format!("negative weight {x}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrechetConfig<T> {
    pub max_iterations: usize,
    pub step_size: T,
    pub gradient_tolerance: T,
    pub projection_margin: T,
}

impl<T: Scalar> Default for FrechetConfig<T> {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            step_size: T::one(),
            gradient_tolerance: T::lit(1e-8),
            projection_margin: T::lit(DEFAULT_PROJECTION_MARGIN),
        }
    }
}

impl<T: Scalar> FrechetConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be positive".into(),
            ));
        }
        if !(self.step_size > T::zero() && self.step_size <= T::one()) {
            return Err(Error::InvalidParameter(format!(
                "step size must lie in (0, 1], got {}",
                self.step_size
            )));
        }
        if !(self.gradient_tolerance > T::zero()) {
            return Err(Error::InvalidParameter(
                "gradient tolerance must be positive".into(),
            ));
        }
        if !(self.projection_margin > T::zero() && self.projection_margin < T::one()) {
            return Err(Error::InvalidParameter(
                "projection margin must lie in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Which criterion ended the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Gradient norm fell below the tolerance.
    Converged,
    /// The iteration budget ran out.
    MaxIterations,
    /// No step size (after repeated halving) decreased the objective.
    Stalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrechetOutcome<T> {
    pub mean: PoincarePoint<T>,
    pub iterations: usize,
    /// `2·‖ū‖`, where `ū` is the weighted tangent average at `mean`.
    pub gradient_norm: T,
    pub objective: T,
    pub stop: StopReason,
}

const MAX_HALVINGS: usize = 20;

/// Checks that a point set is nonempty with a single dimension; returns it.
pub fn point_set_dim<T: Scalar>(points: &[PoincarePoint<T>]) -> Result<usize> {
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let d = first.dim();
    if let Some(p) = points.iter().find(|p| p.dim() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: p.dim(),
        });
    }
    Ok(d)
}

pub(crate) fn objective_raw<T: Scalar>(z: &[T], points: &[PoincarePoint<T>], w: &[T]) -> T {
    points
        .iter()
        .zip(w)
        .filter(|(_, &wi)| wi > T::zero())
        .map(|(p, &wi)| {
            let d = distance_raw(z, p.coords());
            wi * d * d
        })
        .sum()
}

/// `F(z) = Σ w_i d(z, v_i)²`.
pub fn frechet_objective<T: Scalar>(
    z: &PoincarePoint<T>,
    points: &[PoincarePoint<T>],
    w: &WeightVector<T>,
) -> Result<T> {
    if points.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: w.len(),
        });
    }
    let d = point_set_dim(points)?;
    if d != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: z.dim(),
        });
    }
    Ok(objective_raw(z.coords(), points, w.as_slice()))
}

/// Positive-weight points packed contiguously with their squared norms.
struct Active<T> {
    dim: usize,
    coords: Vec<T>,
    w: Vec<T>,
    sq: Vec<T>,
}

impl<T: Scalar> Active<T> {
    fn new(points: &[PoincarePoint<T>], w: &[T], dim: usize) -> Self {
        let mut a = Active {
            dim,
            coords: Vec::new(),
            w: Vec::new(),
            sq: Vec::new(),
        };
        for (p, &wi) in points.iter().zip(w) {
            if wi > T::zero() {
                a.coords.extend_from_slice(p.coords());
                a.w.push(wi);
                a.sq.push(norm_sq(p.coords()));
            }
        }
        a
    }

    fn rows(&self) -> impl Iterator<Item = (&[T], T, T)> {
        self.coords
            .chunks_exact(self.dim)
            .zip(self.w.iter().zip(&self.sq))
            .map(|(y, (&w, &y2))| (y, w, y2))
    }

    /// [`objective_raw`] over the packed points.
    fn objective(&self, z: &[T]) -> T {
        let z2 = T::one() - norm_sq(z);
        self.rows()
            .map(|(y, wi, y2)| {
                let diff2 = z
                    .iter()
                    .zip(y)
                    .fold(T::zero(), |acc, (&a, &b)| acc + (a - b) * (a - b));
                let d = T::lit(2.0) * (diff2 / (z2 * (T::one() - y2))).sqrt().asinh();
                wi * d * d
            })
            .sum()
    }

    /// `Σ w_i Log_μ(v_i)`.
    fn tangent(&self, mu: &[T], out: &mut [T], tmp: &mut [T]) {
        let two = T::lit(2.0);
        let x2 = norm_sq(mu);
        let b = T::one() - x2;
        let scale = two / conformal_factor_raw(mu);
        let cap = T::one() - boundary_eps::<T>();
        out.iter_mut().for_each(|c| *c = T::zero());
        for (y, wi, y2) in self.rows() {
            let xy = dot(mu, y);
            let a = T::one() - two * xy + y2;
            let den = T::one() - two * xy + x2 * y2;
            for ((t, &xi), &yi) in tmp.iter_mut().zip(mu).zip(y) {
                *t = (-(a * xi) + b * yi) / den;
            }
            let n = norm(tmp);
            if n == T::zero() {
                continue;
            }
            // clamping inside the ball is folded into the atanh cap
            let s = wi * scale * n.min(cap).atanh() / n;
            for (o, &t) in out.iter_mut().zip(tmp.iter()) {
                *o += s * t;
            }
        }
    }

    /// Whether the objective is non-increasing along the geodesic from `mu`
    /// to `cand`. By convexity this holds when the slope at `cand` is still
    /// non-positive, which is decidable far below the rounding of the
    /// objective values themselves.
    fn descends_to(
        &self,
        mu: &[T],
        cand: &[T],
        grad: &mut [T],
        back: &mut [T],
        tmp: &mut [T],
    ) -> bool {
        self.tangent(cand, grad, tmp);
        mobius_sub_raw(cand, mu, back);
        dot(grad, back) <= T::zero()
    }
}

/// Weighted Fréchet mean started from `init`.
///
/// Each iteration maps the data to the tangent space at the current iterate,
/// averages with the weights and maps back along `η·ū`. If the objective
/// would increase, the step is halved (at most 20 times), so the objective
/// never increases between iterates. Increases at the rounding level of the
/// objective are decided by the slope along the step instead.
pub fn frechet_mean<T: Scalar>(
    points: &[PoincarePoint<T>],
    w: &WeightVector<T>,
    cfg: &FrechetConfig<T>,
    init: &PoincarePoint<T>,
) -> Result<FrechetOutcome<T>> {
    cfg.validate()?;
    let d = point_set_dim(points)?;
    if points.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: w.len(),
        });
    }
    if init.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: init.dim(),
        });
    }
    let wts = w.as_slice();
    let two = T::lit(2.0);

    let mut mu = init.coords().to_vec();
    project_raw(&mut mu, cfg.projection_margin);
    let active = Active::new(points, wts, d);
    let mut tmp = vec![T::zero(); d];
    let mut obj = active.objective(&mu);
    let mut ubar = vec![T::zero(); d];
    let mut cand = vec![T::zero(); d];
    let mut step = vec![T::zero(); d];
    let mut probe = vec![T::zero(); d];
    let mut back = vec![T::zero(); d];
    let mut stop = StopReason::MaxIterations;
    let mut iterations = 0;

    active.tangent(&mu, &mut ubar, &mut tmp);
    let mut grad = two * norm(&ubar);

    while iterations < cfg.max_iterations {
        if grad < cfg.gradient_tolerance {
            stop = StopReason::Converged;
            break;
        }
        let mut eta = cfg.step_size;
        let mut accepted = false;
        let mut by_slope = false;
        let rounding = obj.abs() * T::epsilon() * T::lit(64.0);
        for _ in 0..=MAX_HALVINGS {
            for (s, &u) in step.iter_mut().zip(&ubar) {
                *s = eta * u;
            }
            exp_map_raw(&mu, &step, &mut cand);
            project_raw(&mut cand, cfg.projection_margin);
            if cand == mu {
                // the step no longer moves the iterate; smaller ones cannot either
                break;
            }
            let cand_obj = active.objective(&cand);
            if cand_obj <= obj {
                mu.copy_from_slice(&cand);
                obj = cand_obj;
                accepted = true;
                break;
            }
            // larger increases are real; only rounding-level ones need the slope
            let ambiguous = cand_obj - obj <= rounding;
            if ambiguous && active.descends_to(&mu, &cand, &mut probe, &mut back, &mut tmp) {
                // `probe` now holds the tangent average at `cand`
                let cand_grad = two * norm(&probe);
                if cand_grad < grad {
                    mu.copy_from_slice(&cand);
                    obj = cand_obj;
                    ubar.copy_from_slice(&probe);
                    grad = cand_grad;
                    by_slope = true;
                }
                // otherwise the objective is flat to rounding and the gradient
                // is at its own rounding floor: nothing measurable is left
                accepted = by_slope;
                break;
            }
            eta /= two;
        }
        iterations += 1;
        if !by_slope {
            active.tangent(&mu, &mut ubar, &mut tmp);
            grad = two * norm(&ubar);
        }
        if !accepted {
            stop = StopReason::Stalled;
            break;
        }
    }
    if stop == StopReason::MaxIterations && grad < cfg.gradient_tolerance {
        stop = StopReason::Converged;
    }

    Ok(FrechetOutcome {
        mean: PoincarePoint::from_raw(mu),
        iterations,
        gradient_norm: grad,
        objective: obj,
        stop,
    })
}

/// Fréchet mean initialized at the point carrying the largest weight.
pub fn frechet_mean_default_init<T: Scalar>(
    points: &[PoincarePoint<T>],
    w: &WeightVector<T>,
    cfg: &FrechetConfig<T>,
) -> Result<FrechetOutcome<T>> {
    if points.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: w.len(),
        });
    }
    let init = points
        .get(w.argmax())
        .ok_or(Error::Empty("point set"))?
        .clone();
    frechet_mean(points, w, cfg, &init)
}
