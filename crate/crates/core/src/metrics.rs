//! Divergences, partition agreement scores, rank correlation and boundary
//! matching. Entropies use the natural logarithm.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Partition;
use crate::scalar::Scalar;

/// Default log₁₀-σ tolerance for boundary matching.
pub const DEFAULT_BOUNDARY_TOLERANCE: f64 = 0.15;

fn check_distribution<T: Scalar>(p: &[T]) -> Result<()> {
    if p.iter().any(|&x| !x.is_finite() || x < T::zero()) {
        return Err(Error::InvalidWeights(
            "entries must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = p.iter().map(|x| x.as_f64()).sum();
    // normalization error of a long f32 vector exceeds 1e-6
    let tol = 1e-6f64.max(16.0 * (p.len() as f64).sqrt() * T::epsilon().as_f64());
    if (total - 1.0).abs() > tol {
        return Err(Error::InvalidWeights(format!(
            "distribution sums to {total}"
        )));
    }
    Ok(())
}

/// Jensen–Shannon divergence, in `[0, ln 2]`.
pub fn jsd<T: Scalar>(p: &[T], q: &[T]) -> Result<T> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    check_distribution(p)?;
    check_distribution(q)?;
    let half = T::lit(0.5);
    let term = |a: T, m: T| {
        if a > T::zero() {
            a * (a / m).ln()
        } else {
            T::zero()
        }
    };
    let d = p
        .iter()
        .zip(q)
        .map(|(&a, &b)| {
            let m = half * (a + b);
            half * (term(a, m) + term(b, m))
        })
        .sum::<T>();
    Ok(d.max(T::zero()).min(T::LN_2()))
}

fn check_lengths(a: &Partition, b: &Partition) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(())
}

struct Contingency {
    cells: HashMap<(usize, usize), usize>,
    rows: Vec<usize>,
    cols: Vec<usize>,
    n: usize,
}

fn contingency(a: &Partition, b: &Partition) -> Contingency {
    let mut cells = HashMap::new();
    for (&x, &y) in a.labels().iter().zip(b.labels()) {
        *cells.entry((x, y)).or_insert(0) += 1;
    }
    Contingency {
        cells,
        rows: a.cluster_sizes(),
        cols: b.cluster_sizes(),
        n: a.len(),
    }
}

fn pairs(x: usize) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Adjusted Rand index. When the chance-corrected denominator vanishes the
/// score is 1 for identical partitions and 0 otherwise.
pub fn ari(a: &Partition, b: &Partition) -> Result<f64> {
    check_lengths(a, b)?;
    let c = contingency(a, b);
    let index: f64 = c.cells.values().map(|&v| pairs(v)).sum();
    let sa: f64 = c.rows.iter().map(|&v| pairs(v)).sum();
    let sb: f64 = c.cols.iter().map(|&v| pairs(v)).sum();
    let total = pairs(c.n);
    let expected = if total > 0.0 { sa * sb / total } else { 0.0 };
    let max = 0.5 * (sa + sb);
    let den = max - expected;
    if den.abs() < 1e-12 {
        let same = c.cells.len() == c.rows.len() && c.cells.len() == c.cols.len();
        return Ok(if same { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / den)
}

/// Variation of information `H(A) + H(B) − 2 I(A; B)`.
pub fn vi(a: &Partition, b: &Partition) -> Result<f64> {
    check_lengths(a, b)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    let c = contingency(a, b);
    let n = c.n as f64;
    let h = |sizes: &[usize]| -> f64 {
        sizes
            .iter()
            .filter(|&&s| s > 0)
            .map(|&s| {
                let p = s as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let mi: f64 = c
        .cells
        .iter()
        .map(|(&(i, j), &v)| {
            let pij = v as f64 / n;
            pij * (pij * n * n / (c.rows[i] as f64 * c.cols[j] as f64)).ln()
        })
        .sum();
    Ok((h(&c.rows) + h(&c.cols) - 2.0 * mi).max(0.0))
}

/// Kendall's τ-b. Returns 0 when either sequence is entirely tied.
pub fn kendall_tau<T: Scalar>(x: &[T], y: &[T]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter(
            "need at least two observations".into(),
        ));
    }
    let (mut conc, mut disc, mut tie_x, mut tie_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let dx = (x[j] - x[i]).as_f64();
            let dy = (y[j] - y[i]).as_f64();
            match (dx == 0.0, dy == 0.0) {
                (true, true) => {
                    tie_x += 1;
                    tie_y += 1;
                }
                (true, false) => tie_x += 1,
                (false, true) => tie_y += 1,
                _ if (dx > 0.0) == (dy > 0.0) => conc += 1,
                _ => disc += 1,
            }
        }
    }
    let n0 = (x.len() * (x.len() - 1) / 2) as f64;
    let den = ((n0 - tie_x as f64) * (n0 - tie_y as f64)).sqrt();
    if den == 0.0 {
        return Ok(0.0);
    }
    Ok((conc - disc) as f64 / den)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMatchResult {
    pub precision: f64,
    pub recall: f64,
    /// `(detected σ, planted σ)` pairs.
    pub matched: Vec<(f64, f64)>,
}

/// Greedy nearest-first one-to-one matching with `|log₁₀ σ_d − log₁₀ σ_p| ≤ tol`.
pub fn boundary_prf(detected: &[f64], planted: &[f64], tol: f64) -> Result<BoundaryMatchResult> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if detected
        .iter()
        .chain(planted)
        .any(|&s| !(s > 0.0 && s.is_finite()))
    {
        return Err(Error::InvalidParameter(
            "scales must be positive and finite".into(),
        ));
    }
    let mut candidates = Vec::new();
    for (i, &d) in detected.iter().enumerate() {
        for (j, &p) in planted.iter().enumerate() {
            let gap = (d.log10() - p.log10()).abs();
            if gap <= tol {
                candidates.push((gap, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then((a.1, a.2).cmp(&(b.1, b.2)))
    });
    let mut used_d = vec![false; detected.len()];
    let mut used_p = vec![false; planted.len()];
    let mut matched = Vec::new();
    for (_, i, j) in candidates {
        if !used_d[i] && !used_p[j] {
            used_d[i] = true;
            used_p[j] = true;
            matched.push((detected[i], planted[j]));
        }
    }
    let m = matched.len() as f64;
    let precision = if detected.is_empty() {
        1.0
    } else {
        m / detected.len() as f64
    };
    let recall = if planted.is_empty() {
        1.0
    } else {
        m / planted.len() as f64
    };
    Ok(BoundaryMatchResult {
        precision,
        recall,
        matched,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn part(l: &[usize]) -> Partition {
        Partition::from_raw(l)
    }

    #[test]
    fn jsd_examples() {
        let p = [0.5, 0.5];
        assert_eq!(jsd(&p, &p).unwrap(), 0.0);
        assert_abs_diff_eq!(
            jsd(&[1.0, 0.0], &[0.0, 1.0]).unwrap(),
            2f64.ln(),
            epsilon = 1e-15
        );
        // 0.5·KL(p‖m) + 0.5·KL(q‖m) with m = (0.75, 0.25)
        let m = [0.75f64, 0.25];
        let kl_p = 0.5 * (0.5 / m[0]).ln() + 0.5 * (0.5 / m[1]).ln();
        let kl_q = (1.0 / m[0]).ln();
        let oracle = 0.5 * kl_p + 0.5 * kl_q;
        assert_abs_diff_eq!(jsd(&p, &[1.0, 0.0]).unwrap(), oracle, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle, 0.215761, epsilon = 1e-6);
        assert!(jsd(&p, &[1.0]).is_err());
        assert!(jsd(&[1.5, -0.5], &p).is_err());
    }

    #[test]
    fn ari_examples() {
        let a = part(&[0, 0, 1, 1, 2]);
        assert_eq!(ari(&a, &a).unwrap(), 1.0);
        assert_eq!(ari(&a, &part(&[5, 5, 3, 3, 9])).unwrap(), 1.0);
        assert_abs_diff_eq!(
            ari(&part(&[0, 0, 1, 1]), &part(&[0, 0, 0, 1])).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        let singletons = part(&[0, 1, 2, 3, 4, 5]);
        let block = part(&[0; 6]);
        assert_eq!(ari(&singletons, &block).unwrap(), 0.0);
        assert_eq!(ari(&block, &block).unwrap(), 1.0);
        assert!(ari(&a, &block).is_err());
    }

    #[test]
    fn vi_examples() {
        let a = part(&[0, 0, 1, 1]);
        let b = part(&[0, 1, 0, 1]);
        assert_eq!(vi(&a, &a).unwrap(), 0.0);
        assert_abs_diff_eq!(vi(&a, &b).unwrap(), 2.0 * 2f64.ln(), epsilon = 1e-12);
        assert_eq!(vi(&a, &b).unwrap(), vi(&b, &a).unwrap());
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(
            kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(),
            1.0
        );
        assert_eq!(
            kendall_tau(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
        assert_abs_diff_eq!(
            kendall_tau(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(kendall_tau(&[1.0], &[1.0]).is_err());
        assert_eq!(
            kendall_tau(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(),
            0.0
        );
    }

    #[test]
    fn kendall_tau_b_with_ties() {
        // brute-force τ-b from its definition on a tied sample
        let x: [f64; 6] = [1.0, 2.0, 2.0, 3.0, 4.0, 4.0];
        let y = [1.0, 1.0, 2.0, 3.0, 3.0, 5.0];
        let (mut c, mut d, mut tx, mut ty) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for i in 0..6 {
            for j in (i + 1)..6 {
                let sign = |v: f64| {
                    if v > 0.0 {
                        1.0
                    } else if v < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                };
                let s = sign(x[i] - x[j]) * sign(y[i] - y[j]);
                if x[i] == x[j] {
                    tx += 1.0;
                }
                if y[i] == y[j] {
                    ty += 1.0;
                }
                if s > 0.0 {
                    c += 1.0;
                } else if s < 0.0 {
                    d += 1.0;
                }
            }
        }
        let expected = (c - d) / ((15.0 - tx) * (15.0 - ty)).sqrt();
        assert_abs_diff_eq!(kendall_tau(&x, &y).unwrap(), expected, epsilon = 1e-12);
    }

    #[test]
    fn boundary_matching() {
        let r = boundary_prf(&[1.0, 10.0], &[1.05], 0.1).unwrap();
        assert_eq!((r.precision, r.recall), (0.5, 1.0));
        assert_eq!(r.matched, vec![(1.0, 1.05)]);
        let r = boundary_prf(&[2.0, 30.0], &[2.0, 30.0], 0.15).unwrap();
        assert_eq!((r.precision, r.recall), (1.0, 1.0));
        let r = boundary_prf(&[], &[3.0], 0.15).unwrap();
        assert_eq!((r.precision, r.recall), (1.0, 0.0));
    }
}
