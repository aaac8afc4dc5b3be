//! Scale-dependent summaries, boundary indicators and the boundary scan.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frechet::{frechet_mean, point_set_dim, FrechetConfig, WeightVector};
use crate::geometry::{distance, PoincarePoint};
use crate::metrics::jsd;
use crate::rng;
use crate::scalar::{mad, median, Scalar};
use crate::spectral::kmeans::sample_proportional;
use crate::spectral::{
    effective_dimensionality, heat_kernel_weights, spectral_gap_candidates, ScanThresholds,
    SpectralDecomposition,
};

pub const DEFAULT_GRID_POINTS: usize = 60;
pub const DEFAULT_PEAK_ALPHA: f64 = 1.5;
pub const DEFAULT_CHURN_K: usize = 10;
pub const DEFAULT_TOP_M: usize = 512;
pub const DEFAULT_MC_ITERATIONS: usize = 50;

/// Strictly increasing positive scales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScaleGrid<T> {
    values: Vec<T>,
}

impl<T: Scalar> ScaleGrid<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidParameter(
                "a scale grid needs at least two points".into(),
            ));
        }
        if values.iter().any(|&v| !(v > T::zero() && v.is_finite())) {
            return Err(Error::InvalidParameter(
                "scales must be positive and finite".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "scales must be strictly increasing".into(),
            ));
        }
        Ok(Self { values })
    }

    /// `count` points evenly spaced in `log σ` over `[min, max]`.
    pub fn log_spaced(min: T, max: T, count: usize) -> Result<Self> {
        if !(min > T::zero() && max > min && max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy 0 < min < max, got [{min}, {max}]"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least two points, got {count}"
            )));
        }
        let (a, b) = (min.ln(), max.ln());
        let last = T::from_usize_lossy(count - 1);
        let mut values: Vec<T> = (0..count)
            .map(|i| (a + (b - a) * T::from_usize_lossy(i) / last).exp())
            .collect();
        values[0] = min;
        values[count - 1] = max;
        Self::new(values)
    }

    /// `[0.1/λ_max, 10/λ₂⁺]`, with `λ₂⁺` the smallest nonzero eigenvalue.
    pub fn for_spectrum(dec: &SpectralDecomposition<T>, count: usize) -> Result<Self> {
        let small = dec
            .smallest_nonzero()
            .ok_or_else(|| Error::InvalidParameter("spectrum has no nonzero eigenvalue".into()))?;
        Self::log_spaced(T::lit(0.1) / dec.lambda_max(), T::lit(10.0) / small, count)
    }

    /// Inserts the geometric midpoint between every consecutive pair.
    pub fn refined(&self) -> Self {
        let mut values = Vec::with_capacity(2 * self.values.len() - 1);
        for w in self.values.windows(2) {
            values.push(w[0]);
            values.push((w[0] * w[1]).sqrt());
        }
        values.push(*self.values.last().expect("nonempty grid"));
        Self { values }
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `√(σ_t σ_{t+1})`.
    pub fn midpoint(&self, t: usize) -> T {
        (self.values[t] * self.values[t + 1]).sqrt()
    }
}

/// Indicators on consecutive grid pairs, each of length `T − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSeries<T> {
    pub velocity: Vec<T>,
    pub weight_divergence: Vec<T>,
    pub churn: Vec<T>,
}

impl<T: Scalar> IndicatorSeries<T> {
    pub fn new(velocity: Vec<T>, weight_divergence: Vec<T>, churn: Vec<T>) -> Result<Self> {
        if velocity.len() != weight_divergence.len() || velocity.len() != churn.len() {
            return Err(Error::LengthMismatch {
                left: velocity.len(),
                right: weight_divergence.len().min(churn.len()),
            });
        }
        Ok(Self {
            velocity,
            weight_divergence,
            churn,
        })
    }

    pub fn len(&self) -> usize {
        self.velocity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocity.is_empty()
    }
}

/// Mixing coefficients for velocity, divergence and churn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mix<T> {
    pub velocity: T,
    pub divergence: T,
    pub churn: T,
}

impl<T: Scalar> Default for Mix<T> {
    fn default() -> Self {
        let third = T::one() / T::lit(3.0);
        Self {
            velocity: third,
            divergence: third,
            churn: third,
        }
    }
}

impl<T: Scalar> Mix<T> {
    pub fn new(velocity: T, divergence: T, churn: T) -> Result<Self> {
        let m = Self {
            velocity,
            divergence,
            churn,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.velocity, self.divergence, self.churn];
        if parts.iter().any(|&a| !(a >= T::zero() && a.is_finite())) {
            return Err(Error::InvalidParameter(
                "mix coefficients must be nonnegative".into(),
            ));
        }
        if parts.iter().all(|&a| a == T::zero()) {
            return Err(Error::InvalidParameter(
                "mix coefficients are all zero".into(),
            ));
        }
        Ok(())
    }
}

fn check_aligned<T: Scalar>(
    points: &[PoincarePoint<T>],
    dec: &SpectralDecomposition<T>,
    focus: usize,
) -> Result<()> {
    point_set_dim(points)?;
    if points.len() != dec.n() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: dec.n(),
        });
    }
    if focus >= points.len() {
        return Err(Error::IndexOutOfRange {
            index: focus,
            size: points.len(),
        });
    }
    Ok(())
}

/// Weighted Fréchet mean of `points` under the heat-kernel weights of
/// `focus` at scale `sigma`, started from `points[focus]`.
pub fn slod_at_scale<T: Scalar>(
    points: &[PoincarePoint<T>],
    dec: &SpectralDecomposition<T>,
    focus: usize,
    sigma: T,
    cfg: &FrechetConfig<T>,
) -> Result<PoincarePoint<T>> {
    Ok(summarize(points, dec, focus, sigma, cfg)?.1)
}

fn summarize<T: Scalar>(
    points: &[PoincarePoint<T>],
    dec: &SpectralDecomposition<T>,
    focus: usize,
    sigma: T,
    cfg: &FrechetConfig<T>,
) -> Result<(WeightVector<T>, PoincarePoint<T>)> {
    check_aligned(points, dec, focus)?;
    let w = heat_kernel_weights(dec, focus, sigma)?;
    let mean = frechet_mean(points, &w, cfg, &points[focus])?.mean;
    Ok((w, mean))
}

/// `d_H(m_b, m_a) / (σ_b − σ_a)`.
pub fn representation_velocity<T: Scalar>(
    m_a: &PoincarePoint<T>,
    m_b: &PoincarePoint<T>,
    sigma_a: T,
    sigma_b: T,
) -> Result<T> {
    if !(sigma_b > sigma_a) {
        return Err(Error::InvalidParameter(format!(
            "scales must increase, got {sigma_a} then {sigma_b}"
        )));
    }
    Ok(distance(m_a, m_b)? / (sigma_b - sigma_a))
}

/// Indices of the `k` points nearest to `m`. Distances within a relative
/// `1e-6` of the `k`-th are treated as ties and resolved by index, so
/// symmetric points do not flicker in and out with rounding.
pub fn nearest_points<T: Scalar>(
    m: &PoincarePoint<T>,
    points: &[PoincarePoint<T>],
    k: usize,
) -> Result<Vec<usize>> {
    if k == 0 || k > points.len() {
        return Err(Error::InvalidParameter(format!(
            "neighbourhood size must be in 1..={}, got {k}",
            points.len()
        )));
    }
    let d: Vec<T> = points
        .iter()
        .map(|p| distance(m, p))
        .collect::<Result<_>>()?;
    let mut sorted = d.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let kth = sorted[k - 1];
    let slack = T::lit(1e-6) * (kth + T::one());
    let mut idx: Vec<usize> = (0..d.len()).filter(|&i| d[i] < kth - slack).collect();
    idx.extend(
        (0..d.len())
            .filter(|&i| (d[i] - kth).abs() <= slack)
            .take(k - idx.len()),
    );
    idx.sort_unstable();
    Ok(idx)
}

fn jaccard_distance(a: &[usize], b: &[usize]) -> f64 {
    // both sorted
    let (mut i, mut j, mut inter) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                inter += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        1.0 - inter as f64 / union as f64
    }
}

/// Jaccard distance between the `k`-nearest-neighbour sets of two means.
pub fn neighborhood_churn<T: Scalar>(
    m_a: &PoincarePoint<T>,
    m_b: &PoincarePoint<T>,
    points: &[PoincarePoint<T>],
    k: usize,
) -> Result<T> {
    let a = nearest_points(m_a, points, k)?;
    let b = nearest_points(m_b, points, k)?;
    Ok(T::lit(jaccard_distance(&a, &b)))
}

/// `(x − median) / spread`, where the spread is the MAD, or half the
/// largest absolute deviation when the MAD vanishes, floored at `1e−12`.
pub fn robust_normalize<T: Scalar>(x: &[T]) -> Vec<T> {
    let med = median(x);
    let spread = robust_spread(x, med).max(T::lit(1e-12));
    x.iter().map(|&v| (v - med) / spread).collect()
}

fn robust_spread<T: Scalar>(x: &[T], med: T) -> T {
    let spread = mad(x);
    if spread > T::zero() {
        return spread;
    }
    T::lit(0.5)
        * x.iter()
            .map(|&v| (v - med).abs())
            .fold(T::zero(), |a, b| a.max(b))
}

/// Mixture of the robustly normalized indicators.
pub fn composite_score<T: Scalar>(ind: &IndicatorSeries<T>, mix: &Mix<T>) -> Result<Vec<T>> {
    mix.validate()?;
    let v = robust_normalize(&ind.velocity);
    let d = robust_normalize(&ind.weight_divergence);
    let c = robust_normalize(&ind.churn);
    Ok((0..ind.len())
        .map(|t| mix.velocity * v[t] + mix.divergence * d[t] + mix.churn * c[t])
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak<T> {
    /// Index into the score, i.e. the grid pair `(t, t + 1)`.
    pub index: usize,
    pub sigma: T,
}

/// Interior strict local maxima of `s` above `median + α·MAD`. A zero MAD
/// is replaced by half the largest absolute deviation from the median.
pub fn peak_pick<T: Scalar>(s: &[T], grid: &ScaleGrid<T>, alpha: T) -> Result<Vec<Peak<T>>> {
    if s.len() + 1 != grid.len() {
        return Err(Error::LengthMismatch {
            left: s.len() + 1,
            right: grid.len(),
        });
    }
    if !(alpha > T::zero() && alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "peak multiplier must be positive, got {alpha}"
        )));
    }
    let med = median(s);
    let threshold = med + alpha * robust_spread(s, med);
    Ok((1..s.len().saturating_sub(1))
        .filter(|&t| s[t] > s[t - 1] && s[t] > s[t + 1] && s[t] > threshold)
        .map(|t| Peak {
            index: t,
            sigma: grid.midpoint(t),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Boundary<T> {
    pub sigma: T,
    pub k_star: usize,
    /// Grid pair index the boundary straddles.
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport<T> {
    pub focus: usize,
    pub grid: Vec<T>,
    pub velocity: Vec<T>,
    pub weight_divergence: Vec<T>,
    pub churn: Vec<T>,
    pub composite: Vec<T>,
    pub boundaries: Vec<Boundary<T>>,
    pub spectral_candidates: Vec<T>,
}

impl<T: Scalar> BoundaryReport<T> {
    pub fn indicators(&self) -> IndicatorSeries<T> {
        IndicatorSeries {
            velocity: self.velocity.clone(),
            weight_divergence: self.weight_divergence.clone(),
            churn: self.churn.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanConfig<T> {
    pub thresholds: ScanThresholds<T>,
    pub mix: Mix<T>,
    /// Peak threshold multiplier.
    pub alpha: T,
    /// Neighbourhood size for churn, capped at half the number of points.
    pub knn: usize,
    pub frechet: FrechetConfig<T>,
}

impl<T: Scalar> Default for ScanConfig<T> {
    fn default() -> Self {
        Self {
            thresholds: ScanThresholds::default(),
            mix: Mix::default(),
            alpha: T::lit(DEFAULT_PEAK_ALPHA),
            knn: DEFAULT_CHURN_K,
            frechet: FrechetConfig::default(),
        }
    }
}

impl<T: Scalar> ScanConfig<T> {
    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        self.mix.validate()?;
        self.frechet.validate()?;
        if !(self.alpha > T::zero() && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "peak multiplier must be positive, got {}",
                self.alpha
            )));
        }
        if self.knn == 0 {
            return Err(Error::InvalidParameter(
                "churn neighbourhood size must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Weights and Fréchet means at every grid scale.
pub fn scale_trajectory<T: Scalar>(
    points: &[PoincarePoint<T>],
    dec: &SpectralDecomposition<T>,
    focus: usize,
    grid: &ScaleGrid<T>,
    cfg: &FrechetConfig<T>,
) -> Result<Vec<(WeightVector<T>, PoincarePoint<T>)>> {
    check_aligned(points, dec, focus)?;
    grid.values()
        .par_iter()
        .map(|&s| summarize(points, dec, focus, s, cfg))
        .collect()
}

/// Indicators, composite score, peaks and K* over a scale grid.
pub fn boundary_scan<T: Scalar>(
    points: &[PoincarePoint<T>],
    dec: &SpectralDecomposition<T>,
    focus: usize,
    grid: &ScaleGrid<T>,
    cfg: &ScanConfig<T>,
) -> Result<BoundaryReport<T>> {
    cfg.validate()?;
    let traj = scale_trajectory(points, dec, focus, grid, &cfg.frechet)?;
    let sigma = grid.values();
    let k = cfg.knn.min(points.len() / 2).max(1);
    let neighbours: Vec<Vec<usize>> = traj
        .par_iter()
        .map(|(_, m)| nearest_points(m, points, k))
        .collect::<Result<_>>()?;
    let steps: Vec<(T, T, T)> = (0..grid.len() - 1)
        .into_par_iter()
        .map(|t| {
            let v = representation_velocity(&traj[t].1, &traj[t + 1].1, sigma[t], sigma[t + 1])?;
            let d = jsd(traj[t].0.as_slice(), traj[t + 1].0.as_slice())?;
            let c = T::lit(jaccard_distance(&neighbours[t], &neighbours[t + 1]));
            Ok((v, d, c))
        })
        .collect::<Result<_>>()?;
    let ind = IndicatorSeries {
        velocity: steps.iter().map(|x| x.0).collect(),
        weight_divergence: steps.iter().map(|x| x.1).collect(),
        churn: steps.iter().map(|x| x.2).collect(),
    };
    // the composite measures movement per unit log σ, so that each mode's
    // contribution peaks at 1/λ_k instead of decaying across the grid
    let per_log = IndicatorSeries {
        velocity: (0..ind.len())
            .map(|t| ind.velocity[t] * (sigma[t + 1] - sigma[t]) / (sigma[t + 1] / sigma[t]).ln())
            .collect(),
        ..ind.clone()
    };
    let composite = composite_score(&per_log, &cfg.mix)?;
    let boundaries = peak_pick(&composite, grid, cfg.alpha)?
        .into_iter()
        .map(|p| Boundary {
            sigma: p.sigma,
            k_star: effective_dimensionality(dec, p.sigma, cfg.thresholds.mode_threshold),
            index: p.index,
        })
        .collect();
    let spectral_candidates = spectral_gap_candidates(dec, cfg.thresholds.gap_ratio)
        .into_iter()
        .map(|c| c.sigma)
        .collect();
    Ok(BoundaryReport {
        focus,
        grid: sigma.to_vec(),
        velocity: ind.velocity,
        weight_divergence: ind.weight_divergence,
        churn: ind.churn,
        composite,
        boundaries,
        spectral_candidates,
    })
}

/// Default dimension of [`spectral_embedding`].
pub const DEFAULT_EMBED_DIM: usize = 10;

/// Commute-time eigenmap: coordinate `k` of node `i` is `φ_{k+1}(i)/√λ_{k+1}`
/// for the `dim` modes after the first, uniformly rescaled so the largest
/// norm is `max_norm`.
pub fn spectral_embedding<T: Scalar>(
    dec: &SpectralDecomposition<T>,
    dim: usize,
    max_norm: T,
) -> Result<Vec<PoincarePoint<T>>> {
    if dim < 2 || dim + 1 > dec.k_retained() {
        return Err(Error::InvalidParameter(format!(
            "embedding dimension must be in 2..={}, got {dim}",
            dec.k_retained().saturating_sub(1)
        )));
    }
    if !(max_norm > T::zero() && max_norm < T::one()) {
        return Err(Error::InvalidParameter(format!(
            "max norm must lie in (0, 1), got {max_norm}"
        )));
    }
    let floor = T::lit(crate::spectral::ZERO_FLOOR);
    let lam = &dec.eigenvalues()[1..=dim];
    let vecs = &dec.eigenvectors()[1..=dim];
    let rows: Vec<Vec<T>> = (0..dec.n())
        .map(|i| {
            vecs.iter()
                .zip(lam)
                .map(|(v, &l)| v[i] / l.max(floor).sqrt())
                .collect()
        })
        .collect();
    let largest = rows
        .iter()
        .map(|r| crate::scalar::norm(r))
        .fold(T::zero(), |a, b| a.max(b));
    let scale = if largest > T::zero() {
        max_norm / largest
    } else {
        T::zero()
    };
    rows.into_iter()
        .map(|r| PoincarePoint::new(r.into_iter().map(|x| x * scale).collect()))
        .collect()
}

/// Embedding used when only a graph is available.
pub fn default_graph_embedding<T: Scalar>(
    dec: &SpectralDecomposition<T>,
) -> Result<Vec<PoincarePoint<T>>> {
    let dim = DEFAULT_EMBED_DIM.min(dec.k_retained().saturating_sub(1));
    spectral_embedding(dec, dim, T::lit(0.9))
}

/// Weighted hyperbolic k-means result. `costs[i]` is the weighted
/// within-cluster sum of squared distances after iteration `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture<T> {
    pub centers: Vec<PoincarePoint<T>>,
    pub weights: Vec<T>,
    /// Indices of the retained points.
    pub members: Vec<usize>,
    /// Cluster of each retained point.
    pub assignment: Vec<usize>,
    pub costs: Vec<T>,
}

fn assign<T: Scalar>(
    pts: &[&PoincarePoint<T>],
    centers: &[PoincarePoint<T>],
) -> Result<(Vec<usize>, Vec<T>)> {
    pts.par_iter()
        .map(|p| {
            let mut best = (T::infinity(), 0);
            for (j, c) in centers.iter().enumerate() {
                let d = distance(p, c)?;
                if d < best.0 {
                    best = (d, j);
                }
            }
            Ok((best.1, best.0 * best.0))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().unzip())
}

/// Weighted Riemannian k-means on the `top_m` heaviest points, seeded by
/// weighted k-means++ under hyperbolic distance.
pub fn multi_center<T: Scalar>(
    points: &[PoincarePoint<T>],
    w: &WeightVector<T>,
    k: usize,
    top_m: usize,
    iters: usize,
    seed: u64,
) -> Result<Mixture<T>> {
    point_set_dim(points)?;
    if points.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: w.len(),
        });
    }
    if k == 0 || top_m < k || top_m > points.len() {
        return Err(Error::InvalidParameter(format!(
            "need 1 <= K <= top_m <= N, got K={k}, top_m={top_m}, N={}",
            points.len()
        )));
    }
    let ws = w.as_slice();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        ws[b]
            .partial_cmp(&ws[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(top_m);
    order.sort_unstable();
    let pts: Vec<&PoincarePoint<T>> = order.iter().map(|&i| &points[i]).collect();
    let mass: Vec<T> = order.iter().map(|&i| ws[i]).collect();

    let mut distinct: Vec<&[T]> = pts.iter().map(|p| p.coords()).collect();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    distinct.dedup();
    if distinct.len() < k {
        return Err(Error::InvalidParameter(format!(
            "{k} centers requested but only {} distinct points",
            distinct.len()
        )));
    }

    // k-means++ seeding
    let mut rng = rng::stream(seed, "multi-center", 0);
    let total: T = mass.iter().copied().sum();
    let first = if total > T::zero() {
        sample_proportional(&mut rng, &mass)
    } else {
        sample_proportional(&mut rng, &vec![T::one(); pts.len()])
    };
    let mut centers = vec![pts[first].clone()];
    let mut nearest: Vec<T> = pts
        .iter()
        .map(|p| distance(p, &centers[0]).map(|d| d * d))
        .collect::<Result<_>>()?;
    while centers.len() < k {
        let score: Vec<T> = nearest.iter().zip(&mass).map(|(&d, &m)| d * m).collect();
        let pick = if score.iter().any(|&s| s > T::zero()) {
            sample_proportional(&mut rng, &score)
        } else {
            sample_proportional(&mut rng, &nearest)
        };
        centers.push(pts[pick].clone());
        let c = centers.last().expect("just pushed");
        for (n, p) in nearest.iter_mut().zip(&pts) {
            *n = n.min(distance(p, c)?.powi(2));
        }
    }

    let cfg = FrechetConfig::default();
    let (mut labels, mut d2) = assign(&pts, &centers)?;
    let cost = |d2: &[T]| d2.iter().zip(&mass).map(|(&d, &m)| d * m).sum::<T>();
    let mut costs = vec![cost(&d2)];
    for _ in 0..iters {
        for (j, c) in centers.iter_mut().enumerate() {
            let idx: Vec<usize> = (0..pts.len()).filter(|&i| labels[i] == j).collect();
            if idx.is_empty() {
                continue;
            }
            let sub: Vec<PoincarePoint<T>> = idx.iter().map(|&i| pts[i].clone()).collect();
            let m: Vec<T> = idx.iter().map(|&i| mass[i]).collect();
            let wv = if m.iter().any(|&x| x > T::zero()) {
                WeightVector::from_masses(m)?
            } else {
                WeightVector::uniform(idx.len())?
            };
            *c = frechet_mean(&sub, &wv, &cfg, c)?.mean;
        }
        let (new_labels, new_d2) = assign(&pts, &centers)?;
        let changed = new_labels != labels;
        labels = new_labels;
        d2 = new_d2;
        costs.push(cost(&d2));
        if !changed {
            break;
        }
    }
    let mut weights = vec![T::zero(); k];
    for (&l, &m) in labels.iter().zip(&mass) {
        weights[l] += m;
    }
    let wt: T = weights.iter().copied().sum();
    if wt > T::zero() {
        weights.iter_mut().for_each(|x| *x /= wt);
    } else {
        let sizes: Vec<T> = (0..k)
            .map(|j| T::from_usize_lossy(labels.iter().filter(|&&l| l == j).count()))
            .collect();
        let n = T::from_usize_lossy(labels.len());
        weights = sizes.into_iter().map(|s| s / n).collect();
    }
    Ok(Mixture {
        centers,
        weights,
        members: order,
        assignment: labels,
        costs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frechet::frechet_objective;
    use crate::graph::{normalized_laplacian, SparseGraph};
    use crate::spectral::full_eigendecomposition;
    use approx::assert_abs_diff_eq;

    fn p(x: f64, y: f64) -> PoincarePoint<f64> {
        PoincarePoint::new(vec![x, y]).unwrap()
    }

    fn path3() -> SpectralDecomposition<f64> {
        let g = SparseGraph::unweighted(3, &[(0, 1), (1, 2)]).unwrap();
        full_eigendecomposition(&normalized_laplacian(&g).unwrap()).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = ScaleGrid::log_spaced(0.1, 100.0, 4).unwrap();
        for (a, b) in g.values().iter().zip([0.1, 1.0, 10.0, 100.0]) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_abs_diff_eq!(g.midpoint(0), 0.1f64.sqrt(), epsilon = 1e-12);
        assert_eq!(g.refined().len(), 7);
        assert!(ScaleGrid::new(vec![1.0, 1.0]).is_err());
        assert!(ScaleGrid::log_spaced(0.0, 1.0, 5).is_err());
        assert!(ScaleGrid::log_spaced(1.0, 2.0, 1).is_err());
    }

    #[test]
    fn slod_trivial_cases() {
        let dec = path3();
        let pts = vec![p(-0.5, 0.0), p(0.0, 0.0), p(0.5, 0.0)];
        let cfg = FrechetConfig::default();
        let m = slod_at_scale(&pts, &dec, 0, 0.0, &cfg).unwrap();
        assert_abs_diff_eq!(distance(&m, &pts[0]).unwrap(), 0.0, epsilon = 1e-9);
        let one = SpectralDecomposition::from_parts(vec![0.0], vec![vec![1.0]]).unwrap();
        let m = slod_at_scale(&[p(0.3, 0.1)], &one, 0, 5.0, &cfg).unwrap();
        assert_abs_diff_eq!(distance(&m, &p(0.3, 0.1)).unwrap(), 0.0, epsilon = 1e-9);
        assert!(slod_at_scale(&pts[..2], &dec, 0, 1.0, &cfg).is_err());
    }

    #[test]
    fn slod_matches_grid_search() {
        let dec = path3();
        let pts = vec![p(-0.5, 0.0), p(0.0, 0.0), p(0.5, 0.0)];
        let w = heat_kernel_weights(&dec, 0, 1.0).unwrap();
        for (a, b) in w.as_slice().iter().zip([0.536, 0.350, 0.114]) {
            assert!((a - b).abs() < 5e-3, "{a} vs {b}");
        }
        let m = slod_at_scale(&pts, &dec, 0, 1.0, &FrechetConfig::default()).unwrap();
        // brute-force minimization over a refined 2-D grid
        let mut best = (f64::INFINITY, 0.0, 0.0);
        let (mut cx, mut cy, mut h) = (0.0, 0.0, 0.05);
        for _ in 0..6 {
            for i in -20..=20 {
                for j in -20..=20 {
                    let (x, y) = (cx + i as f64 * h, cy + j as f64 * h);
                    if x * x + y * y >= 0.99 {
                        continue;
                    }
                    let f = frechet_objective(&p(x, y), &pts, &w).unwrap();
                    if f < best.0 {
                        best = (f, x, y);
                    }
                }
            }
            cx = best.1;
            cy = best.2;
            h /= 10.0;
        }
        assert_abs_diff_eq!(m.coords()[0], best.1, epsilon = 1e-6);
        assert_abs_diff_eq!(m.coords()[1], best.2, epsilon = 1e-6);
    }

    #[test]
    fn velocity_examples() {
        let (a, b) = (p(0.0, 0.0), p(0.5, 0.0));
        assert_eq!(representation_velocity(&a, &a, 1.0, 2.0).unwrap(), 0.0);
        assert_abs_diff_eq!(
            representation_velocity(&a, &b, 1.0, 1.5).unwrap(),
            3f64.ln() / 0.5,
            epsilon = 1e-12
        );
        let half = representation_velocity(&a, &b, 1.0, 1.25).unwrap();
        assert_abs_diff_eq!(half, 2.0 * 3f64.ln() / 0.5, epsilon = 1e-12);
        assert!(representation_velocity(&a, &b, 1.0, 1.0).is_err());
    }

    #[test]
    fn churn_examples() {
        let pts: Vec<_> = (0..8).map(|i| p(-0.7 + 0.2 * i as f64, 0.0)).collect();
        let (a, b) = (p(-0.7, 0.0), p(0.7, 0.0));
        assert_eq!(neighborhood_churn(&a, &a, &pts, 3).unwrap(), 0.0);
        assert_eq!(neighborhood_churn(&a, &b, &pts, 3).unwrap(), 1.0);
        // neighbour sets {0,1,2,3} and {2,3,4,5}
        let (c, d) = (p(-0.4, 0.0), p(0.0, 0.0));
        assert_eq!(nearest_points(&c, &pts, 4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(nearest_points(&d, &pts, 4).unwrap(), vec![2, 3, 4, 5]);
        assert_abs_diff_eq!(
            neighborhood_churn(&c, &d, &pts, 4).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-12
        );
        assert!(neighborhood_churn(&a, &b, &pts, 9).is_err());
    }

    #[test]
    fn composite_examples() {
        let flat = IndicatorSeries::new(vec![2.0; 5], vec![0.1; 5], vec![0.0; 5]).unwrap();
        assert!(composite_score(&flat, &Mix::default())
            .unwrap()
            .iter()
            .all(|&x| x == 0.0));
        let ind = IndicatorSeries::new(
            vec![1.0, 1.2, 0.9, 7.0, 1.1, 1.0],
            vec![0.01, 0.02, 0.01, 0.4, 0.02, 0.01],
            vec![0.0, 0.1, 0.0, 0.9, 0.1, 0.0],
        )
        .unwrap();
        let v_only = composite_score(&ind, &Mix::new(1.0, 0.0, 0.0).unwrap()).unwrap();
        assert_eq!(v_only, robust_normalize(&ind.velocity));
        let s = composite_score(&ind, &Mix::new(1.0, 1.0, 1.0).unwrap()).unwrap();
        let argmax = (0..s.len())
            .max_by(|&a, &b| s[a].partial_cmp(&s[b]).unwrap())
            .unwrap();
        assert_eq!(argmax, 3);
        assert!(Mix::new(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn peak_examples() {
        let grid = ScaleGrid::log_spaced(1.0, 32.0, 6).unwrap();
        let peaks = peak_pick(&[0.0, 1.0, 0.0, 3.0, 0.0], &grid, 1.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].index, 3);
        assert_abs_diff_eq!(peaks[0].sigma, (8.0f64 * 16.0).sqrt(), epsilon = 1e-9);
        assert!(peak_pick(&[2.0; 5], &grid, 1.5).unwrap().is_empty());
        let spike = peak_pick(&[0.1, 0.2, 9.0, 0.1, 0.2], &grid, 1.5).unwrap();
        assert_eq!(spike.iter().map(|p| p.index).collect::<Vec<_>>(), vec![2]);
        assert!(peak_pick(&[0.0; 4], &grid, 1.0).is_err());
    }

    fn clique_graph(n: usize) -> SparseGraph<f64> {
        let e: Vec<_> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        SparseGraph::unweighted(n, &e).unwrap()
    }

    fn barbell() -> SparseGraph<f64> {
        let mut e = Vec::new();
        for base in [0, 5] {
            for i in 0..5 {
                for j in (i + 1)..5 {
                    e.push((base + i, base + j));
                }
            }
        }
        e.push((4, 5));
        SparseGraph::unweighted(10, &e).unwrap()
    }

    #[test]
    fn barbell_scan_marks_node_and_bridge_scales() {
        let dec = full_eigendecomposition(&normalized_laplacian(&barbell()).unwrap()).unwrap();
        let pts = default_graph_embedding(&dec).unwrap();
        let grid = ScaleGrid::for_spectrum(&dec, 60).unwrap();
        let rep = boundary_scan(&pts, &dec, 0, &grid, &ScanConfig::default()).unwrap();
        let target = 1.0 / dec.eigenvalues()[1];
        let ks: Vec<usize> = rep.boundaries.iter().map(|b| b.k_star).collect();
        assert_eq!(ks, vec![10, 1], "{:?}", rep.boundaries);
        assert!((rep.boundaries[1].sigma / target).ln().abs() <= 1.1f64.ln());
        assert_eq!(rep.spectral_candidates.len(), 1);
        assert_abs_diff_eq!(rep.spectral_candidates[0], target, epsilon = 1e-9);
    }

    #[test]
    fn clique_scan_has_only_the_node_level_transition() {
        let dec =
            full_eigendecomposition(&normalized_laplacian(&clique_graph(8)).unwrap()).unwrap();
        let pts = default_graph_embedding(&dec).unwrap();
        let grid = ScaleGrid::log_spaced(0.1, 100.0, 40).unwrap();
        let rep = boundary_scan(&pts, &dec, 0, &grid, &ScanConfig::default()).unwrap();
        assert!(rep.boundaries.len() <= 1);
        assert!(rep
            .boundaries
            .iter()
            .all(|b| b.k_star == 8 && b.sigma < 1.0));
        assert!(rep.spectral_candidates.is_empty());
    }

    #[test]
    fn divergence_bounds_and_json_fields() {
        let dec = full_eigendecomposition(&normalized_laplacian(&barbell()).unwrap()).unwrap();
        let pts = default_graph_embedding(&dec).unwrap();
        let grid = ScaleGrid::for_spectrum(&dec, 30).unwrap();
        let rep = boundary_scan(&pts, &dec, 3, &grid, &ScanConfig::default()).unwrap();
        assert!(rep
            .weight_divergence
            .iter()
            .all(|&d| (0.0..=2f64.ln()).contains(&d)));
        assert!(rep.churn.iter().all(|&c| (0.0..=1.0).contains(&c)));
        assert!(rep.velocity.iter().all(|&v| v >= 0.0));
        let v = serde_json::to_value(&rep).unwrap();
        for key in [
            "grid",
            "velocity",
            "weight_divergence",
            "churn",
            "composite",
            "boundaries",
            "spectral_candidates",
        ] {
            assert!(v.get(key).is_some(), "{key}");
        }
    }

    fn two_clusters() -> Vec<PoincarePoint<f64>> {
        let mut pts = Vec::new();
        for (cx, cy) in [(-0.5, 0.1), (0.4, -0.3)] {
            for i in 0..6 {
                let a = i as f64;
                pts.push(p(cx + 0.01 * a.cos(), cy + 0.01 * a.sin()));
            }
        }
        pts
    }

    #[test]
    fn multi_center_examples() {
        let pts = two_clusters();
        let w = WeightVector::uniform(12).unwrap();
        let single = multi_center(&pts, &w, 1, 12, 50, 0).unwrap();
        let mean = crate::frechet::frechet_mean_default_init(&pts, &w, &FrechetConfig::default())
            .unwrap()
            .mean;
        assert!(distance(&single.centers[0], &mean).unwrap() < 1e-6);

        let two = multi_center(&pts, &w, 2, 12, 50, 0).unwrap();
        for half in [&pts[..6], &pts[6..]] {
            let oracle = crate::frechet::frechet_mean_default_init(
                half,
                &WeightVector::uniform(6).unwrap(),
                &FrechetConfig::default(),
            )
            .unwrap()
            .mean;
            let best = two
                .centers
                .iter()
                .map(|c| distance(c, &oracle).unwrap())
                .fold(f64::INFINITY, f64::min);
            assert!(best < 0.05);
        }
        assert_abs_diff_eq!(two.weights.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert!(two.costs.windows(2).all(|c| c[1] <= c[0] + 1e-12));

        let all = multi_center(&pts, &w, 12, 12, 50, 3).unwrap();
        for (i, &l) in all.assignment.iter().enumerate() {
            assert!(distance(&all.centers[l], &pts[all.members[i]]).unwrap() < 1e-9);
        }
        let dup = vec![p(0.1, 0.1); 3];
        assert!(multi_center(&dup, &WeightVector::uniform(3).unwrap(), 2, 3, 10, 0).is_err());
    }
}
