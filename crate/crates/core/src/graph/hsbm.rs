//! Hierarchical stochastic block model with three planted levels.
//!
//! Nodes are assigned to contiguous blocks: `n / micro_blocks` nodes per
//! micro block, nested inside meso and macro blocks. Each unordered pair is
//! sampled once, with the probability of the finest level the two endpoints
//! share.
//!
//! Rates are given in units of `1/n`. The signal ratio `r` scales the three
//! within-hierarchy rates by `r / 80` while the background rate stays fixed,
//! so `r` equals `p_within / p_between` for the default ladder. Every rate is
//! additionally multiplied by `degree_scale`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Partition, SparseGraph};
use crate::error::{Error, Result};
use crate::rng;
use crate::scalar::Scalar;

/// Signal ratio at which the ladder equals the base rates (times `degree_scale`).
pub const REFERENCE_RATIO: f64 = 80.0;

/// Default density multiplier applied to every rate.
pub const DEFAULT_DEGREE_SCALE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsbmLevels {
    pub macro_blocks: usize,
    pub meso_blocks: usize,
    pub micro_blocks: usize,
}

impl Default for HsbmLevels {
    fn default() -> Self {
        Self {
            macro_blocks: 2,
            meso_blocks: 8,
            micro_blocks: 64,
        }
    }
}

/// Base rates in units of `1/n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsbmRates {
    pub within: f64,
    pub meso: f64,
    pub macro_level: f64,
    pub between: f64,
}

impl Default for HsbmRates {
    fn default() -> Self {
        Self {
            within: 40.0,
            meso: 8.0,
            macro_level: 2.0,
            between: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsbmSpec {
    pub n: usize,
    pub levels: HsbmLevels,
    pub rates: HsbmRates,
    pub r: f64,
    pub degree_scale: f64,
}

impl Default for HsbmSpec {
    fn default() -> Self {
        Self {
            n: 1024,
            levels: HsbmLevels::default(),
            rates: HsbmRates::default(),
            r: REFERENCE_RATIO,
            degree_scale: DEFAULT_DEGREE_SCALE,
        }
    }
}

/// Expected degree of a node split into in-block and out-of-block parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelDegrees {
    pub d_in: f64,
    pub d_out: f64,
}

impl LevelDegrees {
    pub fn snr(&self) -> Result<f64> {
        ks_snr(self.d_in, self.d_out)
    }
}

impl HsbmSpec {
    pub fn with_ratio(n: usize, r: f64) -> Self {
        Self {
            n,
            r,
            ..Self::default()
        }
    }

    pub fn micro_size(&self) -> usize {
        self.n / self.levels.micro_blocks
    }

    pub fn meso_size(&self) -> usize {
        self.n / self.levels.meso_blocks
    }

    pub fn macro_size(&self) -> usize {
        self.n / self.levels.macro_blocks
    }

    /// Scaled per-level rates in units of `1/n`: within, meso, macro, between.
    pub fn scaled_rates(&self) -> [f64; 4] {
        let s = self.r / REFERENCE_RATIO;
        let ds = self.degree_scale;
        [
            ds * s * self.rates.within,
            ds * s * self.rates.meso,
            ds * s * self.rates.macro_level,
            ds * self.rates.between,
        ]
    }

    /// Pair probabilities: within micro, within meso, within macro, between.
    pub fn probabilities(&self) -> [f64; 4] {
        let n = self.n as f64;
        self.scaled_rates().map(|c| c / n)
    }

    pub fn validate(&self) -> Result<()> {
        let HsbmLevels {
            macro_blocks,
            meso_blocks,
            micro_blocks,
        } = self.levels;
        if self.n == 0 || macro_blocks == 0 || meso_blocks == 0 || micro_blocks == 0 {
            return Err(Error::InvalidParameter(
                "node and block counts must be positive".into(),
            ));
        }
        if meso_blocks % macro_blocks != 0 || micro_blocks % meso_blocks != 0 {
            return Err(Error::InvalidParameter(format!(
                "block counts must nest: {macro_blocks} | {meso_blocks} | {micro_blocks}"
            )));
        }
        if !self.n.is_multiple_of(micro_blocks) {
            return Err(Error::InvalidParameter(format!(
                "{micro_blocks} micro blocks do not divide n = {}",
                self.n
            )));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "signal ratio must be positive, got {}",
                self.r
            )));
        }
        if !(self.degree_scale.is_finite() && self.degree_scale > 0.0) {
            return Err(Error::InvalidParameter(
                "degree scale must be positive".into(),
            ));
        }
        let rates = self.scaled_rates();
        if rates.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidParameter(
                "rates must be finite and nonnegative".into(),
            ));
        }
        if !(rates[0] >= rates[1] && rates[1] >= rates[2] && rates[2] >= rates[3]) {
            return Err(Error::InvalidParameter(format!(
                "rates must satisfy within >= meso >= macro >= between, got {rates:?}"
            )));
        }
        if let Some(p) = self.probabilities().into_iter().find(|&p| p > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "pair probability {p} exceeds 1"
            )));
        }
        Ok(())
    }

    /// Finest shared level of nodes `i` and `j`: 0 micro … 3 none.
    pub fn level_of(&self, i: usize, j: usize) -> usize {
        if i / self.micro_size() == j / self.micro_size() {
            0
        } else if i / self.meso_size() == j / self.meso_size() {
            1
        } else if i / self.macro_size() == j / self.macro_size() {
            2
        } else {
            3
        }
    }

    /// Number of unordered pairs per level.
    pub fn pair_counts(&self) -> [f64; 4] {
        let n = self.n as f64;
        let (mi, me, ma) = (
            self.micro_size() as f64,
            self.meso_size() as f64,
            self.macro_size() as f64,
        );
        let half = |sz: f64, inner: f64| n * (sz - inner) / 2.0;
        [half(mi, 1.0), half(me, mi), half(ma, me), half(n, ma)]
    }

    pub fn expected_edges(&self) -> f64 {
        self.pair_counts()
            .iter()
            .zip(self.probabilities())
            .map(|(c, p)| c * p)
            .sum()
    }

    /// Variance of the edge count (sum of independent Bernoulli variances).
    pub fn edge_count_variance(&self) -> f64 {
        self.pair_counts()
            .iter()
            .zip(self.probabilities())
            .map(|(c, p)| c * p * (1.0 - p))
            .sum()
    }

    /// Expected degrees relative to a node's own macro block.
    pub fn macro_degrees(&self) -> LevelDegrees {
        let [pw, pme, pma, pb] = self.probabilities();
        let (mi, me, ma) = (
            self.micro_size() as f64,
            self.meso_size() as f64,
            self.macro_size() as f64,
        );
        LevelDegrees {
            d_in: pw * (mi - 1.0) + pme * (me - mi) + pma * (ma - me),
            d_out: pb * (self.n as f64 - ma),
        }
    }

    /// Expected degrees relative to a node's own meso block.
    pub fn meso_degrees(&self) -> LevelDegrees {
        let [pw, pme, pma, pb] = self.probabilities();
        let (mi, me, ma) = (
            self.micro_size() as f64,
            self.meso_size() as f64,
            self.macro_size() as f64,
        );
        LevelDegrees {
            d_in: pw * (mi - 1.0) + pme * (me - mi),
            d_out: pma * (ma - me) + pb * (self.n as f64 - ma),
        }
    }

    /// Planted partitions `[macro, meso, micro]`.
    pub fn planted(&self) -> HsbmPartitions {
        let labels =
            |size: usize| Partition::from_raw(&(0..self.n).map(|i| i / size).collect::<Vec<_>>());
        HsbmPartitions {
            macro_level: labels(self.macro_size()),
            meso: labels(self.meso_size()),
            micro: labels(self.micro_size()),
        }
    }
}

/// Planted partitions at each level.
#[derive(Debug, Clone, PartialEq)]
pub struct HsbmPartitions {
    pub macro_level: Partition,
    pub meso: Partition,
    pub micro: Partition,
}

/// Samples a graph; same `(spec, seed)` always yields the same edge list.
pub fn generate_hsbm<T: Scalar>(
    spec: &HsbmSpec,
    seed: u64,
) -> Result<(SparseGraph<T>, HsbmPartitions)> {
    spec.validate()?;
    let probs = spec.probabilities();
    let mut rng = rng::stream(seed, "hsbm", 0);
    let n = spec.n;
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = probs[spec.level_of(i, j)];
            if p > 0.0 && rng.gen::<f64>() < p {
                edges.push((i, j, T::one()));
            }
        }
    }
    Ok((SparseGraph::from_trusted(n, edges), spec.planted()))
}

/// Signal-to-noise ratio `(d_in − d_out)² / (2 (d_in + d_out))`; detection
/// is possible iff the value is at least one.
pub fn ks_snr(d_in: f64, d_out: f64) -> Result<f64> {
    if !(d_in.is_finite() && d_out.is_finite()) || d_in < 0.0 || d_out < 0.0 {
        return Err(Error::InvalidParameter(
            "degrees must be finite and nonnegative".into(),
        ));
    }
    if d_in + d_out <= 0.0 {
        return Err(Error::InvalidParameter(
            "d_in + d_out must be positive".into(),
        ));
    }
    Ok((d_in - d_out).powi(2) / (2.0 * (d_in + d_out)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_block_sizes() {
        let spec = HsbmSpec::default();
        spec.validate().unwrap();
        assert_eq!(spec.macro_size(), 512);
        assert_eq!(spec.meso_size(), 128);
        assert_eq!(spec.micro_size(), 16);
        let planted = spec.planted();
        assert_eq!(planted.macro_level.cluster_sizes(), vec![512; 2]);
        assert_eq!(planted.meso.cluster_sizes(), vec![128; 8]);
        assert_eq!(planted.micro.cluster_sizes(), vec![16; 64]);
    }

    #[test]
    fn ratio_mapping() {
        let spec = HsbmSpec {
            degree_scale: 1.0,
            ..HsbmSpec::default()
        };
        assert_eq!(spec.scaled_rates(), [40.0, 8.0, 2.0, 0.5]);
        let s200 = HsbmSpec { r: 200.0, ..spec };
        let rates = s200.scaled_rates();
        assert_eq!(rates[0] / rates[3], 200.0);
    }

    #[test]
    fn rejects_indivisible_sizes() {
        assert!(HsbmSpec::with_ratio(100, 80.0).validate().is_err());
        assert!(generate_hsbm::<f64>(&HsbmSpec::with_ratio(100, 80.0), 1).is_err());
        // r below 20 puts the macro rate under the background rate
        assert!(HsbmSpec::with_ratio(1024, 10.0).validate().is_err());
    }

    #[test]
    fn zero_rates_give_empty_graph() {
        let spec = HsbmSpec {
            n: 128,
            rates: HsbmRates {
                within: 0.0,
                meso: 0.0,
                macro_level: 0.0,
                between: 0.0,
            },
            ..HsbmSpec::default()
        };
        let (g, _) = generate_hsbm::<f64>(&spec, 3).unwrap();
        assert_eq!(g.num_edges(), 0);
        assert_eq!(g.n(), 128);
    }

    #[test]
    fn deterministic_per_seed() {
        let spec = HsbmSpec::with_ratio(256, 100.0);
        let (a, _) = generate_hsbm::<f64>(&spec, 11).unwrap();
        let (b, _) = generate_hsbm::<f64>(&spec, 11).unwrap();
        let (c, _) = generate_hsbm::<f64>(&spec, 12).unwrap();
        assert_eq!(a.edges(), b.edges());
        assert_ne!(a.edges(), c.edges());
    }

    #[test]
    fn edge_count_matches_expectation() {
        // Expectation from direct enumeration of pair levels.
        let spec = HsbmSpec::with_ratio(512, 120.0);
        let probs = spec.probabilities();
        let mut brute = 0.0;
        let mut var = 0.0;
        for i in 0..spec.n {
            for j in (i + 1)..spec.n {
                let p = probs[spec.level_of(i, j)];
                brute += p;
                var += p * (1.0 - p);
            }
        }
        assert!((brute - spec.expected_edges()).abs() < 1e-6 * brute);
        assert!((var - spec.edge_count_variance()).abs() < 1e-6 * var);
        let sd = var.sqrt();
        for seed in 0..10 {
            let (g, _) = generate_hsbm::<f64>(&spec, seed).unwrap();
            let dev = (g.num_edges() as f64 - brute).abs();
            assert!(
                dev <= 3.0 * sd,
                "seed {seed}: {} edges vs {brute:.1} ± {sd:.1}",
                g.num_edges()
            );
        }
    }

    #[test]
    fn snr_examples() {
        assert_eq!(ks_snr(5.0, 5.0).unwrap(), 0.0);
        assert!((ks_snr(4.0, 1.0).unwrap() - 0.9).abs() < 1e-12);
        assert!((ks_snr(20.0, 2.0).unwrap() - 324.0 / 44.0).abs() < 1e-12);
        assert!(ks_snr(0.0, 0.0).is_err());
    }

    #[test]
    fn macro_snr_crosses_one_between_20_and_40() {
        let snr = |r| HsbmSpec::with_ratio(1024, r).macro_degrees().snr().unwrap();
        assert!(snr(20.0) < 1.0);
        assert!(snr(40.0) >= 1.0);
    }
}
