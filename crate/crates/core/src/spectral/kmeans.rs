//! Euclidean k-means with k-means++ seeding and restarts.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::rng;
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct KMeansResult<T> {
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<T>>,
    pub inertia: T,
}

fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// Index drawn with probability proportional to `weights`; uniform if all zero.
pub(crate) fn sample_proportional<T: Scalar>(rng: &mut ChaCha8Rng, weights: &[T]) -> usize {
    let total: f64 = weights.iter().map(|w| w.as_f64()).sum();
    if !(total > 0.0) {
        return rng.gen_range(0..weights.len());
    }
    let mut target = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        target -= w.as_f64();
        if target < 0.0 {
            return i;
        }
    }
    weights.iter().rposition(|w| w.as_f64() > 0.0).unwrap()
}

fn plus_plus<T: Scalar>(data: &[Vec<T>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<T>> {
    let mut centers = vec![data[rng.gen_range(0..data.len())].clone()];
    let mut d2: Vec<T> = data.iter().map(|x| sq_dist(x, &centers[0])).collect();
    while centers.len() < k {
        let c = data[sample_proportional(rng, &d2)].clone();
        for (di, x) in d2.iter_mut().zip(data) {
            *di = di.min(sq_dist(x, &c));
        }
        centers.push(c);
    }
    centers
}

fn lloyd<T: Scalar>(data: &[Vec<T>], mut centers: Vec<Vec<T>>, max_iter: usize) -> KMeansResult<T> {
    let k = centers.len();
    let dim = data[0].len();
    let mut labels = vec![usize::MAX; data.len()];
    for _ in 0..max_iter {
        let mut changed = false;
        for (i, x) in data.iter().enumerate() {
            let best = (0..k)
                .min_by(|&a, &b| {
                    sq_dist(x, &centers[a])
                        .partial_cmp(&sq_dist(x, &centers[b]))
                        .unwrap()
                })
                .unwrap();
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = vec![vec![T::zero(); dim]; k];
        let mut counts = vec![0usize; k];
        for (x, &l) in data.iter().zip(&labels) {
            counts[l] += 1;
            for (s, &v) in sums[l].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                // reseed an empty cluster at the point farthest from its center
                let far = (0..data.len())
                    .max_by(|&a, &b| {
                        let da = sq_dist(&data[a], &centers[labels[a]]);
                        let db = sq_dist(&data[b], &centers[labels[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centers[c] = data[far].clone();
                labels[far] = c;
                changed = true;
            } else {
                let cnt = T::from_usize_lossy(counts[c]);
                centers[c] = sums[c].iter().map(|&s| s / cnt).collect();
            }
        }
        if !changed {
            break;
        }
    }
    let inertia = data
        .iter()
        .zip(&labels)
        .map(|(x, &l)| sq_dist(x, &centers[l]))
        .sum();
    KMeansResult {
        labels,
        centers,
        inertia,
    }
}

/// Best of `restarts` runs by inertia. `data` must be nonempty with
/// `k <= data.len()`.
pub fn kmeans<T: Scalar>(data: &[Vec<T>], k: usize, restarts: usize, seed: u64) -> KMeansResult<T> {
    (0..restarts.max(1))
        .map(|r| {
            let mut rng = rng::stream(seed, "kmeans", r as u64);
            let centers = plus_plus(data, k, &mut rng);
            lloyd(data, centers, 300)
        })
        .min_by(|a, b| a.inertia.partial_cmp(&b.inertia).unwrap())
        .unwrap()
}
