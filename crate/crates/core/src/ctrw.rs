//! Kinetic Monte Carlo continuous-time random walk of a polarization quantum
//! over a rate network, with the finite-size analysis used to extract
//! diffusion coefficients.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::PhysicalConstants;
use crate::curve::{log_grid, Curve};
use crate::ensemble::{generate_realization, EnsembleSpec};
use crate::rates::{build_rate_matrix, RateMatrix, RateParams};
use crate::rng;
use crate::stats::{linear_fit, linear_fit_origin, Accumulator};
use crate::{Error, Result};

/// Walk ensemble configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    /// Maximum simulated time, us.
    pub t_max: f64,
    /// Sample times, strictly increasing, us.
    pub time_grid: Vec<f64>,
    /// Trajectories per disorder realization.
    pub n_walks: usize,
    /// Disorder realizations per system size.
    pub n_realizations: usize,
    /// Spin counts for the finite-size scan.
    pub sizes: Vec<usize>,
    /// Upper ends T_max of the msd fit windows (0, T_max], us.
    pub fit_windows: Vec<f64>,
    /// Times at which radial profiles are histogrammed, us.
    pub profile_times: Vec<f64>,
    /// Radial bins per profile histogram.
    pub profile_bins: usize,
}

impl Default for WalkConfig {
    fn default() -> Self {
        let t_max = 1000.0;
        WalkConfig {
            t_max,
            time_grid: default_grid(t_max),
            n_walks: 1000,
            n_realizations: 8,
            sizes: vec![1000, 3375, 8000, 15_625, 27_000],
            fit_windows: vec![30.0, 100.0, 300.0],
            profile_times: Vec::new(),
            profile_bins: 60,
        }
    }
}

/// t = 0 followed by 200 log-spaced points up to `t_max`.
pub fn default_grid(t_max: f64) -> Vec<f64> {
    let mut g = vec![0.0];
    g.extend(log_grid(1e-2, t_max, 200));
    g
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.t_max <= 0.0 {
            return Err(Error::invalid("t_max must be positive"));
        }
        if self.time_grid.len() < 2 || self.time_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time_grid must be strictly increasing"));
        }
        if !self.sizes.is_empty() && self.sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sizes must be strictly increasing"));
        }
        if self.n_walks == 0 || self.n_realizations == 0 {
            return Err(Error::invalid("n_walks and n_realizations must be positive"));
        }
        Ok(())
    }
}

/// Mean-square displacement curve for one system size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MsdCurve {
    pub t: Vec<f64>,
    pub r2_mean: Vec<f64>,
    pub r2_stderr: Vec<f64>,
    pub n_samples: Vec<u64>,
    /// Spin count, or `None` for the extrapolated infinite-size curve.
    pub size_label: Option<usize>,
}

/// Radial polarization-density histogram at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialHistogram {
    pub t: f64,
    /// Bin edges, nm; `density` has one entry per bin.
    pub r_edges: Vec<f64>,
    /// Walker probability density per shell, nm^-3.
    pub density: Vec<f64>,
    pub density_err: Vec<f64>,
    /// Occupation probability per spin in the outermost shell.
    pub edge_per_spin: f64,
}

impl RadialHistogram {
    pub fn bin_centers(&self) -> Vec<f64> {
        self.r_edges
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .collect()
    }
}

/// Everything one walk ensemble produces.
#[derive(Debug, Clone)]
pub struct EnsembleObservables {
    pub msd: MsdCurve,
    /// Probability of occupying the start spin at each grid time.
    pub survival: Curve,
    pub profiles: Vec<RadialHistogram>,
}

/// Run one walk and record the occupied spin at every grid time.
///
/// Holding times are exponential with mean 1/Gamma_tot; the hop target is
/// drawn from the row branching distribution. A spin with zero total rate
/// freezes the walk. The occupied site is carried forward onto grid times
/// between hops.
pub fn run_walk(
    rm: &RateMatrix,
    start: usize,
    time_grid: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<u32> {
    let mut out = vec![0u32; time_grid.len()];
    let mut site = start;
    let mut t = 0.0;
    let mut gi = 0;
    loop {
        let total = rm.row_total(site);
        if total <= 0.0 {
            for slot in &mut out[gi..] {
                *slot = site as u32;
            }
            return out;
        }
        let u: f64 = rng.random();
        let t_next = t + -(1.0 - u).ln() / total;
        while gi < time_grid.len() && time_grid[gi] < t_next {
            out[gi] = site as u32;
            gi += 1;
        }
        if gi == time_grid.len() {
            return out;
        }
        let v: f64 = rng.random();
        site = rm.sample_target(site, v);
        t = t_next;
    }
}

struct ChunkAccum {
    r2: Vec<Accumulator>,
    survival_hits: Vec<u64>,
    profile_counts: Vec<Vec<u64>>,
}

impl ChunkAccum {
    fn new(n_grid: usize, n_profiles: usize, n_bins: usize) -> Self {
        ChunkAccum {
            r2: vec![Accumulator::default(); n_grid],
            survival_hits: vec![0; n_grid],
            profile_counts: vec![vec![0; n_bins]; n_profiles],
        }
    }

    fn merge(&mut self, other: &ChunkAccum) {
        for (a, b) in self.r2.iter_mut().zip(&other.r2) {
            a.merge(b);
        }
        for (a, b) in self.survival_hits.iter_mut().zip(&other.survival_hits) {
            *a += b;
        }
        for (pa, pb) in self.profile_counts.iter_mut().zip(&other.profile_counts) {
            for (a, b) in pa.iter_mut().zip(pb) {
                *a += b;
            }
        }
    }
}

/// Walk ensemble for a single system size (`spec.n_spins`).
///
/// Walks start on the probe spin (index 0). Averages over
/// `cfg.n_realizations` disorder realizations times `cfg.n_walks` walks;
/// reductions are chunked deterministically so thread scheduling never
/// affects the result.
pub fn walk_ensemble(
    spec: &EnsembleSpec,
    params: &RateParams,
    cfg: &WalkConfig,
    constants: &PhysicalConstants,
    realization_base: u32,
) -> Result<EnsembleObservables> {
    cfg.validate()?;
    let grid = &cfg.time_grid;
    let profile_idx: Vec<usize> = cfg
        .profile_times
        .iter()
        .map(|&pt| nearest_index(grid, pt))
        .collect();

    let mut total = ChunkAccum::new(grid.len(), profile_idx.len(), cfg.profile_bins);
    let mut box_radius = 0.0;
    let mut edge_spins = 0.0;

    for real in 0..cfg.n_realizations {
        let realization = realization_base + real as u32;
        let ens = generate_realization(spec, constants, realization)?;
        box_radius = ens.box_radius;
        let rm = build_rate_matrix(&ens, params, false, constants.j0)?;
        let start = 0usize;
        let p0 = ens.positions[start];
        let dist: Vec<f64> = ens
            .positions
            .iter()
            .map(|p| {
                ((p[0] - p0[0]).powi(2) + (p[1] - p0[1]).powi(2) + (p[2] - p0[2]).powi(2)).sqrt()
            })
            .collect();
        let dr = ens.box_radius / cfg.profile_bins as f64;
        // Spins in the outermost shell, for the per-spin edge occupancy.
        edge_spins += dist
            .iter()
            .filter(|&&r| r >= ens.box_radius - dr)
            .count() as f64;

        const CHUNK: usize = 64;
        let n_chunks = cfg.n_walks.div_ceil(CHUNK);
        let partials: Vec<ChunkAccum> = (0..n_chunks)
            .into_par_iter()
            .map(|chunk| {
                let mut acc = ChunkAccum::new(grid.len(), profile_idx.len(), cfg.profile_bins);
                let lo = chunk * CHUNK;
                let hi = ((chunk + 1) * CHUNK).min(cfg.n_walks);
                for walk in lo..hi {
                    let mut stream = rng::stream(spec.seed, realization, walk as u32);
                    let sites = run_walk(&rm, start, grid, &mut stream);
                    for (gi, &s) in sites.iter().enumerate() {
                        let r = dist[s as usize];
                        acc.r2[gi].push(r * r);
                        if s as usize == start {
                            acc.survival_hits[gi] += 1;
                        }
                    }
                    for (pi, &gi) in profile_idx.iter().enumerate() {
                        let r = dist[sites[gi] as usize];
                        let bin = ((r / dr) as usize).min(cfg.profile_bins - 1);
                        acc.profile_counts[pi][bin] += 1;
                    }
                }
                acc
            })
            .collect();
        for p in &partials {
            total.merge(p);
        }
    }

    let n_total = (cfg.n_realizations * cfg.n_walks) as f64;
    let msd = MsdCurve {
        t: grid.clone(),
        r2_mean: total.r2.iter().map(|a| a.mean()).collect(),
        r2_stderr: total.r2.iter().map(|a| a.stderr()).collect(),
        n_samples: total.r2.iter().map(|a| a.count()).collect(),
        size_label: Some(spec.n_spins),
    };
    let surv_p: Vec<f64> = total
        .survival_hits
        .iter()
        .map(|&h| h as f64 / n_total)
        .collect();
    let surv_err: Vec<f64> = surv_p
        .iter()
        .map(|&p| (p * (1.0 - p) / n_total).sqrt())
        .collect();
    let survival = Curve::with_err(grid.clone(), surv_p, surv_err)?;

    let dr = box_radius / cfg.profile_bins as f64;
    let edge_spins_avg = edge_spins / cfg.n_realizations as f64;
    let profiles = profile_idx
        .iter()
        .enumerate()
        .map(|(pi, &gi)| {
            let counts = &total.profile_counts[pi];
            let mut density = Vec::with_capacity(cfg.profile_bins);
            let mut density_err = Vec::with_capacity(cfg.profile_bins);
            for (b, &c) in counts.iter().enumerate() {
                let r0 = b as f64 * dr;
                let r1 = r0 + dr;
                let vol = 4.0 / 3.0 * std::f64::consts::PI * (r1.powi(3) - r0.powi(3));
                density.push(c as f64 / (n_total * vol));
                density_err.push((c as f64).sqrt() / (n_total * vol));
            }
            let edge_prob = *counts.last().unwrap() as f64 / n_total;
            let edge_per_spin = if edge_spins_avg > 0.0 {
                edge_prob / edge_spins_avg
            } else {
                0.0
            };
            RadialHistogram {
                t: grid[gi],
                r_edges: (0..=cfg.profile_bins).map(|b| b as f64 * dr).collect(),
                density,
                density_err,
                edge_per_spin,
            }
        })
        .collect();

    Ok(EnsembleObservables {
        msd,
        survival,
        profiles,
    })
}

fn nearest_index(grid: &[f64], t: f64) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, &g) in grid.iter().enumerate() {
        let d = (g - t).abs();
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// Mean-square displacement for every size in `cfg.sizes`.
pub fn msd_ensemble(
    spec: &EnsembleSpec,
    params: &RateParams,
    cfg: &WalkConfig,
    constants: &PhysicalConstants,
) -> Result<Vec<MsdCurve>> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(cfg.sizes.len());
    for (si, &n) in cfg.sizes.iter().enumerate() {
        let sized = EnsembleSpec {
            n_spins: n,
            ..spec.clone()
        };
        let base = (si * cfg.n_realizations) as u32;
        let obs = walk_ensemble(&sized, params, cfg, constants, base)?;
        out.push(obs.msd);
    }
    Ok(out)
}

/// Extrapolate msd curves to infinite system size.
///
/// Finite-size effects scale linearly with N^(-1/3); per grid time a weighted
/// line fit in that variable yields the intercept and its standard error.
pub fn finite_size_extrapolate(curves: &[MsdCurve]) -> Result<MsdCurve> {
    if curves.len() < 3 {
        return Err(Error::invalid(
            "finite-size extrapolation needs at least 3 sizes",
        ));
    }
    let t = curves[0].t.clone();
    for c in curves {
        if c.t != t {
            return Err(Error::invalid("msd curves must share a time grid"));
        }
    }
    let xs: Vec<f64> = curves
        .iter()
        .map(|c| (c.size_label.expect("finite curve") as f64).powf(-1.0 / 3.0))
        .collect();
    let mut r2_mean = Vec::with_capacity(t.len());
    let mut r2_stderr = Vec::with_capacity(t.len());
    let mut n_samples = Vec::with_capacity(t.len());
    for i in 0..t.len() {
        let ys: Vec<f64> = curves.iter().map(|c| c.r2_mean[i]).collect();
        let errs: Vec<f64> = curves.iter().map(|c| c.r2_stderr[i]).collect();
        n_samples.push(curves.iter().map(|c| c.n_samples[i]).sum());
        if errs.iter().all(|&e| e > 0.0) {
            let w: Vec<f64> = errs.iter().map(|&e| 1.0 / (e * e)).collect();
            let fit = linear_fit(&xs, &ys, &w);
            r2_mean.push(fit.intercept);
            r2_stderr.push(fit.intercept_err);
        } else {
            // Degenerate (typically t = 0 where every sample is exactly 0).
            let m = ys.iter().sum::<f64>() / ys.len() as f64;
            r2_mean.push(m);
            r2_stderr.push(0.0);
        }
    }
    Ok(MsdCurve {
        t,
        r2_mean,
        r2_stderr,
        n_samples,
        size_label: None,
    })
}

/// Diffusion coefficient from the early-time growth of the msd.
///
/// For each window (0, T_max] a weighted least-squares line through the
/// origin gives D = slope / 6; the reported value is the mean over windows
/// and the uncertainty half the spread.
pub fn extract_diffusion(curve: &MsdCurve, fit_windows: &[f64]) -> Result<(f64, f64)> {
    extract_diffusion_opts(curve, fit_windows, false)
}

/// As [`extract_diffusion`], optionally allowing a constant offset.
pub fn extract_diffusion_opts(
    curve: &MsdCurve,
    fit_windows: &[f64],
    with_offset: bool,
) -> Result<(f64, f64)> {
    if fit_windows.is_empty() {
        return Err(Error::NoValidWindow("empty fit window list".into()));
    }
    let mut ds = Vec::with_capacity(fit_windows.len());
    for &tmax in fit_windows {
        let mut x = Vec::new();
        let mut y = Vec::new();
        let mut w = Vec::new();
        for i in 0..curve.t.len() {
            let t = curve.t[i];
            if t > 0.0 && t <= tmax && curve.r2_stderr[i] > 0.0 {
                x.push(t);
                y.push(curve.r2_mean[i]);
                w.push(1.0 / (curve.r2_stderr[i] * curve.r2_stderr[i]));
            }
        }
        if x.len() < 3 {
            return Err(Error::NoValidWindow(format!(
                "window (0, {tmax}] covers {} points",
                x.len()
            )));
        }
        let fit = if with_offset {
            linear_fit(&x, &y, &w)
        } else {
            linear_fit_origin(&x, &y, &w)
        };
        ds.push(fit.slope / 6.0);
    }
    let mean = ds.iter().sum::<f64>() / ds.len() as f64;
    let (lo, hi) = ds
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &d| {
            (l.min(d), h.max(d))
        });
    Ok((mean, 0.5 * (hi - lo)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::Species;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn two_site_matrix(gamma: f64) -> RateMatrix {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 1)] = gamma;
        m[(1, 0)] = gamma;
        RateMatrix::from_dense(&m)
    }

    #[test]
    fn frozen_walker_stays_put() {
        let m = DMatrix::zeros(2, 2);
        let rm = RateMatrix::from_dense(&m);
        let grid = vec![0.0, 1.0, 10.0];
        let mut rng = rng::stream(0, 0, 0);
        let sites = run_walk(&rm, 0, &grid, &mut rng);
        assert_eq!(sites, vec![0, 0, 0]);
    }

    #[test]
    fn two_spin_msd_matches_master_equation() {
        // p_away(t) = (1 - exp(-2 Gamma t)) / 2 for a symmetric pair.
        let gamma = 0.8;
        let d = 2.5;
        let rm = two_site_matrix(gamma);
        let grid = vec![0.1, 0.5, 1.0, 3.0];
        let n = 40_000;
        let mut acc = vec![Accumulator::default(); grid.len()];
        for walk in 0..n {
            let mut rng = rng::stream(123, 0, walk);
            let sites = run_walk(&rm, 0, &grid, &mut rng);
            for (gi, &s) in sites.iter().enumerate() {
                acc[gi].push(if s == 1 { d * d } else { 0.0 });
            }
        }
        for (gi, &t) in grid.iter().enumerate() {
            let expect = d * d * (1.0 - (-2.0 * gamma * t).exp()) / 2.0;
            let diff = (acc[gi].mean() - expect).abs();
            assert!(
                diff < 3.0 * acc[gi].stderr().max(1e-6),
                "t={t}: got {} expect {expect}",
                acc[gi].mean()
            );
        }
    }

    #[test]
    fn identical_streams_identical_hops() {
        let rm = two_site_matrix(1.3);
        let grid: Vec<f64> = (1..40).map(|i| i as f64 * 0.1).collect();
        let mut r1 = rng::stream(9, 2, 7);
        let mut r2 = rng::stream(9, 2, 7);
        assert_eq!(run_walk(&rm, 0, &grid, &mut r1), run_walk(&rm, 0, &grid, &mut r2));
        let mut r3 = rng::stream(9, 2, 8);
        assert_ne!(run_walk(&rm, 0, &grid, &mut r1), run_walk(&rm, 0, &grid, &mut r3));
    }

    #[test]
    fn doubling_rates_halves_time_exactly() {
        // Same stream, rates x2, grid /2: identical site sequences.
        let spec = EnsembleSpec {
            n_spins: 60,
            seed: 21,
            ..Default::default()
        };
        let consts = PhysicalConstants::default();
        let ens = generate_realization(&spec, &consts, 0).unwrap();
        let params = RateParams::default();
        let rm = build_rate_matrix(&ens, &params, false, consts.j0).unwrap();
        let doubled = {
            let mut m = rm.to_dense();
            m *= 2.0;
            RateMatrix::from_dense(&m)
        };
        let grid: Vec<f64> = (1..100).map(|i| i as f64 * 0.5).collect();
        let half: Vec<f64> = grid.iter().map(|t| t / 2.0).collect();
        let a = run_walk(&rm, 0, &grid, &mut rng::stream(4, 0, 0));
        let b = run_walk(&doubled, 0, &half, &mut rng::stream(4, 0, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn walk_ensemble_basic_properties() {
        let spec = EnsembleSpec {
            n_spins: 120,
            seed: 77,
            ..Default::default()
        };
        let cfg = WalkConfig {
            t_max: 50.0,
            time_grid: default_grid(50.0),
            n_walks: 200,
            n_realizations: 2,
            sizes: vec![120],
            profile_times: vec![10.0],
            ..Default::default()
        };
        let obs = walk_ensemble(&spec, &RateParams::default(), &cfg, &PhysicalConstants::default(), 0)
            .unwrap();
        // r2(0) = 0 and msd nondecreasing within noise.
        assert_eq!(obs.msd.r2_mean[0], 0.0);
        assert!(obs.msd.r2_mean.iter().all(|&v| v >= 0.0));
        // Survival starts at 1 and probability is conserved (walker alive).
        assert_eq!(obs.survival.y[0], 1.0);
        assert_eq!(obs.msd.n_samples[0], 400);
        // Profile integrates to ~1 while everything is inside the box.
        let p = &obs.profiles[0];
        let mass: f64 = p
            .r_edges
            .windows(2)
            .zip(&p.density)
            .map(|(w, &d)| d * 4.0 / 3.0 * std::f64::consts::PI * (w[1].powi(3) - w[0].powi(3)))
            .sum();
        assert_relative_eq!(mass, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn ensemble_determinism_with_species() {
        let spec = EnsembleSpec {
            n_spins: 50,
            seed: 5,
            ..Default::default()
        };
        let consts = PhysicalConstants::default();
        let ens = generate_realization(&spec, &consts, 0).unwrap();
        assert!(ens.species.iter().all(|&s| s == Species::P1));
        let cfg = WalkConfig {
            t_max: 20.0,
            time_grid: default_grid(20.0),
            n_walks: 64,
            n_realizations: 1,
            ..Default::default()
        };
        let a = walk_ensemble(&spec, &RateParams::default(), &cfg, &consts, 0).unwrap();
        let b = walk_ensemble(&spec, &RateParams::default(), &cfg, &consts, 0).unwrap();
        assert_eq!(a.msd.r2_mean, b.msd.r2_mean);
        assert_eq!(a.survival.y, b.survival.y);
    }

    #[test]
    fn extrapolation_identity_and_synthetic() {
        let t: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let make = |n: usize, c: f64| {
            let x = (n as f64).powf(-1.0 / 3.0);
            MsdCurve {
                t: t.clone(),
                r2_mean: t.iter().map(|&ti| 2.0 * ti - c * ti * x).collect(),
                r2_stderr: vec![0.01; t.len()],
                n_samples: vec![100; t.len()],
                size_label: Some(n),
            }
        };
        // Identical curves extrapolate to themselves.
        let same = vec![make(1000, 0.0), make(3375, 0.0), make(8000, 0.0)];
        let ext = finite_size_extrapolate(&same).unwrap();
        for i in 0..t.len() {
            assert_relative_eq!(ext.r2_mean[i], 2.0 * t[i], epsilon = 1e-9);
        }
        // Linear-in-N^(-1/3) synthetic curves recover the intercept a*t.
        let fam = vec![make(1000, 0.7), make(3375, 0.7), make(8000, 0.7)];
        let ext = finite_size_extrapolate(&fam).unwrap();
        for i in 1..t.len() {
            assert_relative_eq!(ext.r2_mean[i], 2.0 * t[i], max_relative = 1e-6);
        }
        assert!(finite_size_extrapolate(&fam[..2]).is_err());
    }

    #[test]
    fn diffusion_from_exact_line() {
        let t: Vec<f64> = (0..400).map(|i| i as f64 * 0.5).collect();
        let curve = MsdCurve {
            r2_mean: t.iter().map(|&ti| 6.0 * 0.5 * ti).collect(),
            r2_stderr: vec![0.01; t.len()],
            n_samples: vec![1; t.len()],
            t,
            size_label: Some(1000),
        };
        let (d, sigma) = extract_diffusion(&curve, &[30.0, 100.0, 190.0]).unwrap();
        assert_relative_eq!(d, 0.5, epsilon = 1e-12);
        assert!(sigma < 1e-12);
        assert!(extract_diffusion(&curve, &[]).is_err());
        assert!(extract_diffusion(&curve, &[1e-9]).is_err());
    }
}
