//! Experiment drivers shared by the binary and the acceptance harness.

use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;
use slod::boundary::{
    boundary_scan, default_graph_embedding, slod_at_scale, BoundaryReport, ScaleGrid, ScanConfig,
};
use slod::geometry::{distance, PoincarePoint};
use slod::graph::{
    generate_hsbm, largest_connected_component, normalized_laplacian, HsbmPartitions, HsbmSpec,
    SparseGraph,
};
use slod::metrics::{ari, kendall_tau};
use slod::rng;
use slod::spectral::{partial_eigendecomposition, spectral_clustering, SpectralDecomposition};
use slod::{Error, Result};

/// Leading `k` eigenpairs of the normalized Laplacian of `g`, capped at `n`.
pub fn decompose(g: &SparseGraph<f64>, k: usize) -> Result<SpectralDecomposition<f64>> {
    partial_eigendecomposition(&normalized_laplacian(g)?, k.min(g.n()))
}

/// Node with the largest degree; ties go to the smallest id.
pub fn highest_degree_node(g: &SparseGraph<f64>) -> usize {
    let deg = g.degrees();
    let mut best = 0;
    for (i, &d) in deg.iter().enumerate() {
        if d > deg[best] {
            best = i;
        }
    }
    best
}

/// HSBM sample restricted to its largest connected component.
#[derive(Debug, Clone)]
pub struct HsbmInstance {
    pub spec: HsbmSpec,
    pub graph: SparseGraph<f64>,
    /// Planted partitions restricted to the component.
    pub planted: HsbmPartitions,
    pub dec: SpectralDecomposition<f64>,
}

pub fn hsbm_instance(n: usize, r: f64, seed: u64, k_eigs: usize) -> Result<HsbmInstance> {
    let spec = HsbmSpec::with_ratio(n, r);
    let (g, planted) = generate_hsbm::<f64>(&spec, seed)?;
    let lcc = largest_connected_component(&g)?;
    let keep = &lcc.new_to_old;
    let planted = HsbmPartitions {
        macro_level: planted.macro_level.restrict(keep),
        meso: planted.meso.restrict(keep),
        micro: planted.micro.restrict(keep),
    };
    let dec = decompose(&lcc.graph, k_eigs.max(spec.levels.meso_blocks))?;
    Ok(HsbmInstance {
        spec,
        graph: lcc.graph,
        planted,
        dec,
    })
}

/// ARI of spectral clustering at the macro and meso block counts.
pub fn hsbm_ari(inst: &HsbmInstance, seed: u64) -> Result<(f64, f64)> {
    let levels = &inst.spec.levels;
    let macro_p = spectral_clustering(
        &inst.dec,
        levels.macro_blocks,
        rng::derive_seed(seed, "cluster-macro", 0),
    )?;
    let meso_p = spectral_clustering(
        &inst.dec,
        levels.meso_blocks,
        rng::derive_seed(seed, "cluster-meso", 0),
    )?;
    Ok((
        ari(&macro_p, &inst.planted.macro_level)?,
        ari(&meso_p, &inst.planted.meso)?,
    ))
}

/// Seed of graph `index` in a sweep at ratio `r`.
pub fn sweep_seed(base: u64, r: f64, index: u64) -> u64 {
    rng::derive_seed(base, &format!("sweep-r{r}"), index)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub macro_mean: f64,
    pub macro_std: f64,
    pub meso_mean: f64,
    pub meso_std: f64,
    pub snr_macro: f64,
    pub snr_meso: f64,
    /// Mean wall time per graph.
    pub seconds: f64,
    pub macro_ari: Vec<f64>,
    pub meso_ari: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub n: usize,
    pub seeds: Vec<u64>,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str =
        "r,macro_mean,macro_std,meso_mean,meso_std,snr_macro,snr_meso,seconds";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.4}\n",
                row.r,
                row.macro_mean,
                row.macro_std,
                row.meso_mean,
                row.meso_std,
                row.snr_macro,
                row.snr_meso,
                row.seconds
            ));
        }
        out
    }
}

/// Mean and population standard deviation.
pub fn mean_std(x: &[f64]) -> (f64, f64) {
    if x.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Spectral clustering ARI over `seeds` graphs for every ratio in `rs`.
pub fn sweep(
    n: usize,
    rs: &[f64],
    seeds: usize,
    base_seed: u64,
    k_eigs: usize,
) -> Result<SweepReport> {
    if rs.is_empty() {
        return Err(Error::Empty("ratio list"));
    }
    if seeds == 0 {
        return Err(Error::InvalidParameter(
            "seed count must be positive".into(),
        ));
    }
    for &r in rs {
        HsbmSpec::with_ratio(n, r).validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..rs.len())
        .flat_map(|i| (0..seeds as u64).map(move |s| (i, s)))
        .collect();
    let results: Vec<(f64, f64, f64)> = jobs
        .par_iter()
        .map(|&(i, s)| {
            let start = Instant::now();
            let seed = sweep_seed(base_seed, rs[i], s);
            let inst = hsbm_instance(n, rs[i], seed, k_eigs)?;
            let (a, b) = hsbm_ari(&inst, seed)?;
            Ok((a, b, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let rows = rs
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let chunk = &results[i * seeds..(i + 1) * seeds];
            let macro_ari: Vec<f64> = chunk.iter().map(|x| x.0).collect();
            let meso_ari: Vec<f64> = chunk.iter().map(|x| x.1).collect();
            let (macro_mean, macro_std) = mean_std(&macro_ari);
            let (meso_mean, meso_std) = mean_std(&meso_ari);
            let spec = HsbmSpec::with_ratio(n, r);
            Ok(SweepRow {
                r,
                macro_mean,
                macro_std,
                meso_mean,
                meso_std,
                snr_macro: spec.macro_degrees().snr()?,
                snr_meso: spec.meso_degrees().snr()?,
                seconds: chunk.iter().map(|x| x.2).sum::<f64>() / seeds as f64,
                macro_ari,
                meso_ari,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepReport {
        n,
        seeds: (0..seeds as u64).collect(),
        rows,
    })
}

/// Boundary scan of an HSBM instance on its commute-time embedding.
pub fn hsbm_scan(
    inst: &HsbmInstance,
    focus: usize,
    grid: &ScaleGrid<f64>,
    cfg: &ScanConfig<f64>,
) -> Result<BoundaryReport<f64>> {
    let points = default_graph_embedding(&inst.dec)?;
    boundary_scan(&points, &inst.dec, focus, grid, cfg)
}

/// Parent of every node in a rooted hierarchy given by an undirected edge
/// list and node depths: the smallest-id neighbour one level up.
pub fn parents_from_depths(g: &SparseGraph<f64>, depths: &[usize]) -> Result<Vec<Option<usize>>> {
    if depths.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: depths.len(),
            right: g.n(),
        });
    }
    let adj = g.adjacency();
    (0..g.n())
        .map(|v| {
            if depths[v] == 0 {
                return Ok(None);
            }
            adj[v]
                .iter()
                .map(|e| e.0)
                .filter(|&u| depths[u] + 1 == depths[v])
                .min()
                .map(Some)
                .ok_or_else(|| {
                    Error::InvalidGraph(format!("node {v} at depth {} has no parent", depths[v]))
                })
        })
        .collect()
}

/// Detected boundary paired with the ancestor it resolves to.
#[derive(Debug, Clone, Serialize)]
pub struct BoundaryMatch {
    pub focus: usize,
    pub sigma: f64,
    pub k_star: usize,
    pub ancestor: usize,
    /// Levels between the focus and the ancestor.
    pub levels_up: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct IngestReport {
    pub reports: Vec<BoundaryReport<f64>>,
    pub matches: Vec<BoundaryMatch>,
    /// Kendall τ between boundary scale and levels up, pooled over foci.
    pub kendall_tau: Option<f64>,
}

/// Matches each boundary of `rep` to the ancestor of its focus closest to
/// the Fréchet mean at the boundary scale.
pub fn match_boundaries(
    points: &[PoincarePoint<f64>],
    dec: &SpectralDecomposition<f64>,
    parents: &[Option<usize>],
    rep: &BoundaryReport<f64>,
    cfg: &ScanConfig<f64>,
) -> Result<Vec<BoundaryMatch>> {
    let mut chain = vec![rep.focus];
    while let Some(p) = parents[*chain.last().unwrap()] {
        chain.push(p);
    }
    rep.boundaries
        .iter()
        .map(|b| {
            let mean = slod_at_scale(points, dec, rep.focus, b.sigma, &cfg.frechet)?;
            let mut best = (f64::INFINITY, 0);
            for (up, &a) in chain.iter().enumerate() {
                let d = distance(&mean, &points[a])?;
                if d < best.0 {
                    best = (d, up);
                }
            }
            Ok(BoundaryMatch {
                focus: rep.focus,
                sigma: b.sigma,
                k_star: b.k_star,
                ancestor: chain[best.1],
                levels_up: best.1,
            })
        })
        .collect()
}

/// Scans every focus; with depths, matches boundaries to ancestors and
/// correlates scale with hierarchy level.
pub fn ingest(
    points: &[PoincarePoint<f64>],
    g: &SparseGraph<f64>,
    dec: &SpectralDecomposition<f64>,
    foci: &[usize],
    depths: Option<&[usize]>,
    grid: &ScaleGrid<f64>,
    cfg: &ScanConfig<f64>,
) -> Result<IngestReport> {
    if points.len() != g.n() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: g.n(),
        });
    }
    let reports = foci
        .iter()
        .map(|&f| boundary_scan(points, dec, f, grid, cfg))
        .collect::<Result<Vec<_>>>()?;
    let Some(depths) = depths else {
        return Ok(IngestReport {
            reports,
            matches: Vec::new(),
            kendall_tau: None,
        });
    };
    let parents = parents_from_depths(g, depths)?;
    let mut matches = Vec::new();
    for rep in &reports {
        matches.extend(match_boundaries(points, dec, &parents, rep, cfg)?);
    }
    let kendall_tau = if matches.len() >= 2 {
        let s: Vec<f64> = matches.iter().map(|m| m.sigma).collect();
        let l: Vec<f64> = matches.iter().map(|m| m.levels_up as f64).collect();
        Some(kendall_tau(&s, &l)?)
    } else {
        None
    };
    Ok(IngestReport {
        reports,
        matches,
        kendall_tau,
    })
}

/// `count` distinct nodes sampled from `pool` on a named stream.
pub fn sample_nodes(pool: &[usize], count: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng::stream(seed, "foci", 0);
    let mut out: Vec<usize> = pool
        .choose_multiple(&mut rng, count.min(pool.len()))
        .copied()
        .collect();
    out.sort_unstable();
    out
}
