//! Estimators turning trajectory ensembles into densities, pair
//! correlations, Laplace functionals and two-time covariances.
//!
//! Standard errors always come from variation across independent
//! trajectories, never from within-trajectory time averages (those are
//! autocorrelated and would bias the 3-SE acceptance gates downward).

use crate::error::{Error, Result};
use crate::quad;
use crate::stats;
use crate::testfn::TestFn;
use crate::torus::Configuration;

/// A scalar estimate with its standard error and sample count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl EstimateWithError {
    pub fn from_samples(xs: &[f64]) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::Degenerate(format!("need >= 2 samples, got {}", xs.len())));
        }
        let (value, se) = stats::mean_se(xs);
        Ok(EstimateWithError { value, se, n: xs.len() })
    }

    /// Exact value (zero standard error).
    pub fn exact(value: f64) -> Self {
        EstimateWithError { value, se: 0.0, n: 1 }
    }

    /// z-score against another estimate (independent errors).
    pub fn z_against(&self, other: &EstimateWithError) -> f64 {
        stats::z_score(self.value, self.se, other.value, other.se)
    }
}

/// Linear statistic `⟨f, γ⟩ = Σ_{x∈γ} f(x)`.
pub fn linear_statistic(gamma: &Configuration, f: &TestFn) -> f64 {
    gamma.iter().map(|(_, p)| f.eval(p.as_slice())).sum()
}

/// Intensity (mean count per unit volume) across snapshots taken at a common
/// time in independent trajectories.
pub fn density(snapshots: &[Configuration]) -> Result<EstimateWithError> {
    if snapshots.is_empty() {
        return Err(Error::Degenerate("empty ensemble".into()));
    }
    let vol = snapshots[0].torus().volume();
    let xs: Vec<f64> = snapshots.iter().map(|c| c.len() as f64 / vol).collect();
    EstimateWithError::from_samples(&xs)
}

/// Radial pair-correlation histogram: per-shell second correlation function
/// `k²(r)`, the normalized `g(r) = k²/k¹²`, and the connected part
/// `u²(r) = k²(r) − k¹²`, with errors across trajectories.
#[derive(Clone, Debug)]
pub struct RadialHistogram {
    pub edges: Vec<f64>,
    pub k1: EstimateWithError,
    pub k2: Vec<EstimateWithError>,
    pub g: Vec<f64>,
    pub u2: Vec<EstimateWithError>,
    /// Bins with zero accumulated pairs (flagged, not silently averaged).
    pub empty_bins: Vec<usize>,
}

/// Unbiased shell pair-count estimator. `r_max` must satisfy `r_max ≤ L/2`
/// so torus shell volumes are exact.
pub fn pair_correlation(
    snapshots: &[Configuration],
    n_bins: usize,
    r_max: f64,
) -> Result<RadialHistogram> {
    if snapshots.len() < 2 {
        return Err(Error::Degenerate("need >= 2 snapshots".into()));
    }
    if n_bins == 0 {
        return Err(Error::Parameter("need >= 1 bin".into()));
    }
    let torus = *snapshots[0].torus();
    if r_max > 0.5 * torus.side() {
        return Err(Error::RangeTooLarge { range: r_max, half: 0.5 * torus.side() });
    }
    let dim = torus.dim();
    let vol = torus.volume();
    let width = r_max / n_bins as f64;
    let edges: Vec<f64> = (0..=n_bins).map(|i| i as f64 * width).collect();
    // exact shell measures: V_d(r_{i+1}) − V_d(r_i)
    let shell: Vec<f64> = (0..n_bins)
        .map(|i| {
            let v = quad::unit_ball_volume(dim);
            v * edges[i + 1].powi(dim as i32) - v * edges[i].powi(dim as i32)
        })
        .collect();

    let n_traj = snapshots.len();
    let mut per_traj_k2 = vec![vec![0.0f64; n_bins]; n_traj];
    let mut per_traj_k1 = vec![0.0f64; n_traj];
    for (t, cfg) in snapshots.iter().enumerate() {
        per_traj_k1[t] = cfg.len() as f64 / vol;
        let mut counts = vec![0u64; n_bins];
        for (i, p) in cfg.iter() {
            cfg.for_each_neighbor(p, r_max, |j, d| {
                if j != i && d < r_max {
                    let b = ((d / width) as usize).min(n_bins - 1);
                    counts[b] += 1;
                }
            });
        }
        // ordered pairs; estimator of k² over shell: count / (V · shell_vol)
        for b in 0..n_bins {
            per_traj_k2[t][b] = counts[b] as f64 / (vol * shell[b]);
        }
    }

    let k1 = EstimateWithError::from_samples(&per_traj_k1)?;
    let mut k2 = Vec::with_capacity(n_bins);
    let mut u2 = Vec::with_capacity(n_bins);
    let mut g = Vec::with_capacity(n_bins);
    let mut empty_bins = Vec::new();
    for b in 0..n_bins {
        let vals: Vec<f64> = per_traj_k2.iter().map(|v| v[b]).collect();
        if vals.iter().all(|&v| v == 0.0) {
            empty_bins.push(b);
        }
        let est = EstimateWithError::from_samples(&vals)?;
        // u² via jackknife over trajectories of k²(bin) − k̄¹²
        let full_u2 = est.value - k1.value * k1.value;
        let nf = n_traj as f64;
        let sum_k2: f64 = vals.iter().sum();
        let sum_k1: f64 = per_traj_k1.iter().sum();
        let loo: Vec<f64> = (0..n_traj)
            .map(|t| {
                let m = nf - 1.0;
                let k2_loo = (sum_k2 - vals[t]) / m;
                let k1_loo = (sum_k1 - per_traj_k1[t]) / m;
                k2_loo - k1_loo * k1_loo
            })
            .collect();
        let se_u2 = stats::jackknife_se(&loo);
        g.push(if k1.value > 0.0 { est.value / (k1.value * k1.value) } else { f64::NAN });
        u2.push(EstimateWithError { value: full_u2, se: se_u2, n: n_traj });
        k2.push(est);
    }
    Ok(RadialHistogram { edges, k1, k2, g, u2, empty_bins })
}

/// Laplace functional `E[e^{⟨f,γ⟩}]` for nonpositive `f`.
pub fn laplace_functional(snapshots: &[Configuration], f: &TestFn) -> Result<EstimateWithError> {
    if !f.is_nonpositive() {
        return Err(Error::Parameter("laplace functional requires f <= 0".into()));
    }
    let xs: Vec<f64> =
        snapshots.iter().map(|c| linear_statistic(c, f).exp()).collect();
    EstimateWithError::from_samples(&xs)
}

/// Two-time covariance `Cov(⟨f,γ_0⟩, ⟨g,γ_t⟩)` across trajectories, each
/// supplying its pair of snapshots. Jackknife SE; refuses < 30 trajectories.
pub fn two_time_covariance(
    ensemble: &[(Configuration, Configuration)],
    f: &TestFn,
    g: &TestFn,
) -> Result<EstimateWithError> {
    let pairs: Vec<(f64, f64)> = ensemble
        .iter()
        .map(|(a, b)| (linear_statistic(a, f), linear_statistic(b, g)))
        .collect();
    covariance_of_pairs(&pairs)
}

/// Covariance of precomputed per-trajectory pairs.
pub fn covariance_of_pairs(pairs: &[(f64, f64)]) -> Result<EstimateWithError> {
    let (value, se) = stats::covariance_jackknife(pairs)?;
    Ok(EstimateWithError { value, se, n: pairs.len() })
}
