//! Experiment pipelines: parallel trajectory ensembles with deterministic
//! per-trajectory RNG streams, the ε-sweep drivers for the three scaling
//! experiments, Gibbs sample banks, and constants estimation.
//!
//! Parallelism is trajectory-level only; results are collected in trajectory
//! order and reduced sequentially, so floating-point sums are deterministic
//! for a fixed (config, seed) regardless of the worker count.

use contiflow_core::error::{Error, Result};
use contiflow_core::estimation::{self, EstimateWithError};
use contiflow_core::gibbs::{self, GibbsParams};
use contiflow_core::glauber::{self, BirthDeathMode, GlauberParams};
use contiflow_core::harmonic::{self, CorrelationSpec, FiniteConfig};
use contiflow_core::kawasaki::{self, KawasakiState};
use contiflow_core::potential::{HopParams, HopRateMode, JumpKernel, PairPotential};
use contiflow_core::quad;
use contiflow_core::stats;
use contiflow_core::stream::{seed_stream, Stream};
use contiflow_core::testfn::TestFn;
use contiflow_core::torus::{Configuration, Torus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pipeline stages carve disjoint stream-index ranges out of one master
/// seed, so every trajectory of every stage is an independent stream and
/// replay is exact.
pub fn stream_for(seed: u64, stage: u64, index: u64) -> Stream {
    seed_stream(seed, (stage << 40) | index)
}

/// Run `n` independent trajectories in parallel, each on its own stream.
pub fn par_trajectories<T, F>(n: usize, seed: u64, stage: u64, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, &mut Stream) -> Result<T> + Sync,
{
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_for(seed, stage, i as u64);
            job(i, &mut rng)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// free-dynamics two-time pipeline
// ---------------------------------------------------------------------------

/// Per-trajectory outputs of one free-dynamics run.
pub struct TwoTimeSample {
    pub f_at_0: f64,
    pub g_at_t: f64,
    pub count_f_window_at_t: u64,
}

/// Simulate the free hopping dynamics at scaling `eps` from Poisson(ρ)
/// initial data; return per-trajectory linear statistics at times 0 and t
/// and the window count at t.
pub fn free_hop_two_time(
    torus: Torus,
    rho: f64,
    kernel: &JumpKernel,
    eps: f64,
    t: f64,
    f: &TestFn,
    g: &TestFn,
    n_traj: usize,
    seed: u64,
    stage: u64,
) -> Result<Vec<TwoTimeSample>> {
    par_trajectories(n_traj, seed, stage, |_i, rng| {
        let gamma0 = Configuration::sample_poisson(torus, rho, 0.0, rng)?;
        let f_at_0 = estimation::linear_statistic(&gamma0, f);
        let params = HopParams::free(kernel.clone(), eps);
        let mut state = KawasakiState::new(gamma0, params)?;
        let snaps = state.run(t, &[t], rng)?;
        let g_at_t = estimation::linear_statistic(&snaps[0], g);
        let (lo, hi) = f.support();
        let count = snaps[0]
            .iter()
            .filter(|(_, p)| {
                p.as_slice().iter().zip(lo.iter().zip(&hi)).all(|(&c, (&a, &b))| c >= a && c < b)
            })
            .count() as u64;
        Ok(TwoTimeSample { f_at_0, g_at_t, count_f_window_at_t: count })
    })
}

/// Simulate the limiting birth-and-death process (free mode, intensity k1)
/// from Poisson(k1) initial data; same statistics.
pub fn free_limit_two_time(
    torus: Torus,
    k1: f64,
    t: f64,
    f: &TestFn,
    g: &TestFn,
    n_traj: usize,
    seed: u64,
    stage: u64,
) -> Result<Vec<(f64, f64)>> {
    let params = GlauberParams { mode: BirthDeathMode::Free { intensity: k1 }, torus };
    par_trajectories(n_traj, seed, stage, |_i, rng| {
        let gamma0 = Configuration::sample_poisson(torus, k1, 0.0, rng)?;
        let f_at_0 = estimation::linear_statistic(&gamma0, f);
        let run = glauber::run_birth_death(gamma0, &params, t, &[t], rng)?;
        Ok((f_at_0, estimation::linear_statistic(&run.snapshots[0], g)))
    })
}

/// Same statistics through the direct free-dynamics construction
/// (exponential lifetimes plus a space-time Poisson birth field).
pub fn free_exact_two_time(
    torus: Torus,
    k1: f64,
    t: f64,
    f: &TestFn,
    g: &TestFn,
    n_traj: usize,
    seed: u64,
    stage: u64,
) -> Result<Vec<(f64, f64)>> {
    par_trajectories(n_traj, seed, stage, |_i, rng| {
        let gamma0 = Configuration::sample_poisson(torus, k1, 0.0, rng)?;
        let f_at_0 = estimation::linear_statistic(&gamma0, f);
        let snaps = glauber::free_exact_sampler(&gamma0, k1, t, &[t], rng)?;
        Ok((f_at_0, estimation::linear_statistic(&snaps[0], g)))
    })
}

/// Deterministic oracle for the free-dynamics two-time covariance on the
/// torus: `Cov = ρ Σ_n P(N_t = n) ∫∫ f(x) g(y) q̃^{*n}(y−x) dx dy`, where
/// `q̃^{*n}` is the n-fold wrapped jump displacement density (gaussian
/// kernels only: the convolution stays gaussian). The jump-count marginal
/// is Poisson(t).
pub fn free_cov_quadrature_oracle(
    torus: Torus,
    rho: f64,
    sigma: f64,
    eps: f64,
    t: f64,
    f: &TestFn,
    g: &TestFn,
) -> Result<f64> {
    if torus.dim() != 1 {
        return Err(Error::Parameter("covariance oracle implemented for d = 1".into()));
    }
    let overlap_no_jump = f.integral_product(g).ok_or_else(|| {
        Error::Parameter("covariance oracle needs box-indicator test functions".into())
    })?;
    let (flo, fhi) = f.support();
    let (glo, ghi) = g.support();
    let f_height = f.eval(&[0.5 * (flo[0] + fhi[0])]);
    let g_height = g.eval(&[0.5 * (glo[0] + ghi[0])]);
    let mut total = (-t).exp() * overlap_no_jump;
    let mut p_n = (-t).exp();
    let mut cumulative = p_n;
    for n in 1..=64usize {
        p_n *= t / n as f64;
        cumulative += p_n;
        if p_n < 1e-14 && n as f64 > t {
            break;
        }
        let n_fold = JumpKernel::Gaussian { sigma: sigma * (n as f64).sqrt() };
        // I_n = ∫∫ f(x) g(y) q̃_n(y − x) dx dy; reduce to the displacement
        // integral against the box cross-correlation of f and g.
        let i_n = quad::integrate(
            |u| {
                // cross-correlation length of the two intervals at displacement u
                let lo = flo[0].max(glo[0] - u);
                let hi = fhi[0].min(ghi[0] - u);
                let cross = (hi - lo).max(0.0) * f_height * g_height;
                if cross == 0.0 {
                    0.0
                } else {
                    cross * n_fold.wrapped_density_scaled(eps, &[u], &torus)
                }
            },
            glo[0] - fhi[0] - torus.side(),
            ghi[0] - flo[0] + torus.side(),
            1e-12,
        )?;
        total += p_n * i_n;
    }
    // Poisson tail: displacements are essentially uniform there
    let tail = (1.0 - cumulative).max(0.0);
    total += tail * f.integral() * g.integral() / torus.side();
    Ok(rho * total)
}

/// Finite-volume correction to the limiting two-time covariance: on the
/// torus, mass that "escapes to infinity" wraps around and mixes into the
/// spatial average, adding `(1 − e^{−t}) ρ ∫f ∫g / L^d` to the
/// infinite-volume value `e^{−t} ρ ∫ f g`.
pub fn relocation_wrap_term(torus: Torus, rho: f64, t: f64, f: &TestFn, g: &TestFn) -> f64 {
    (1.0 - (-t).exp()) * rho * f.integral() * g.integral() / torus.volume()
}

// ---------------------------------------------------------------------------
// dual-generator ratio pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct DualRatioRow {
    pub eps: f64,
    /// loss (departure) part if true, gain (arrival) part otherwise
    pub loss_part: bool,
    pub scaled: EstimateWithError,
    pub limit: f64,
    pub ratio: f64,
    pub ratio_se: f64,
    pub target: f64,
    pub gap: f64,
}

/// Evaluate the ratio (scaled dual) / (limit dual) at a single point η={0}
/// for each ε, for both generator parts, against the targets c∓.
pub fn dual_ratio_sweep(
    z: f64,
    phi: &PairPotential,
    kernel: &JumpKernel,
    eps_list: &[f64],
    mc_n: usize,
    seed: u64,
    stage: u64,
) -> Result<Vec<DualRatioRow>> {
    let spec = CorrelationSpec::Poisson { z };
    let eta = FiniteConfig::new(vec![vec![0.0]], 1)?;
    let c_m = harmonic::c_minus(&spec, phi, 1, 1e-11)?;
    let c_p = harmonic::c_plus(&spec, phi, 1, 1e-11)?;
    let mut rows = Vec::new();
    for (k, &eps) in eps_list.iter().enumerate() {
        let params = HopParams {
            mode: HopRateMode::Plain { phi_minus: phi.clone(), phi_plus: phi.clone() },
            kernel: kernel.clone(),
            eps,
        };
        for loss_part in [true, false] {
            let mut rng = stream_for(seed, stage, (k as u64) << 8 | loss_part as u64);
            let (scaled, limit, target) = if loss_part {
                let s = harmonic::dual_loss_scaled(&spec, &eta, &params, mc_n, 1e-10, &mut rng)?;
                let l = harmonic::dual_loss_limit(&spec, &eta, &params, 1e-11)?;
                (s, l, c_m)
            } else {
                let s = harmonic::dual_gain_scaled(&spec, &eta, &params, mc_n, 1e-10, &mut rng)?;
                let l = harmonic::dual_gain_limit(&spec, &eta, &params, 1e-11)?;
                (s, l, c_p)
            };
            let ratio = scaled.value / limit;
            let ratio_se = (scaled.se / limit).abs();
            rows.push(DualRatioRow {
                eps,
                loss_part,
                scaled,
                limit,
                ratio,
                ratio_se,
                target,
                gap: (ratio - target).abs(),
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Gibbs banks and constants
// ---------------------------------------------------------------------------

/// Draw `n_samples` Gibbs configurations using `n_chains` independent
/// parallel chains (trajectory-level independence keeps the standard
/// errors honest).
pub fn gibbs_bank(
    params: &GibbsParams,
    n_samples: usize,
    n_chains: usize,
    seed: u64,
    stage: u64,
) -> Result<Vec<Configuration>> {
    let per_chain = n_samples.div_ceil(n_chains.max(1));
    let banks = par_trajectories(n_chains.max(1), seed, stage, |_i, rng| {
        gibbs::sample_gibbs(params, per_chain, rng)
    })?;
    let mut out: Vec<Configuration> = banks.into_iter().flatten().collect();
    out.truncate(n_samples);
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub se: f64,
    pub n: usize,
}

impl From<EstimateWithError> for ConstantEstimate {
    fn from(e: EstimateWithError) -> Self {
        ConstantEstimate { value: e.value, se: e.se, n: e.n }
    }
}

/// The constants file consumed by the interacting birth-death dynamics.
/// `c_minus`/`c_plus` are the scaling constants of the first rate addend
/// (φ⁻ = uφ, φ⁺ = (1−v)φ): `c⁻ = C_v` and `c⁺ = z·C_u`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsFile {
    pub schema_version: u64,
    pub u: f64,
    pub v: f64,
    pub activity: f64,
    pub c_u: ConstantEstimate,
    pub c_v: ConstantEstimate,
    pub c_minus: ConstantEstimate,
    pub c_plus: ConstantEstimate,
    pub k1: ConstantEstimate,
}

/// Estimate `C_u`, `C_v`, the addend scaling constants and the intensity
/// from a Gibbs sample bank.
pub fn estimate_constants(
    samples: &[Configuration],
    phi: &PairPotential,
    z: f64,
    u: f64,
    v: f64,
) -> Result<ConstantsFile> {
    let c_u = harmonic::estimate_c_u(samples, phi, u)?;
    let c_v = harmonic::estimate_c_u(samples, phi, v)?;
    let k1 = estimation::density(samples)?;
    let c_plus = EstimateWithError { value: z * c_u.value, se: z * c_u.se, n: c_u.n };
    Ok(ConstantsFile {
        schema_version: crate::config::SCHEMA_VERSION,
        u,
        v,
        activity: z,
        c_u: c_u.into(),
        c_v: c_v.into(),
        c_minus: c_v.into(),
        c_plus: c_plus.into(),
        k1: k1.into(),
    })
}

// ---------------------------------------------------------------------------
// generator L² comparison pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct GeneratorL2Row {
    pub eps: f64,
    /// E_μ |L_ε F − L_0 F|²
    pub mean_sq_diff: EstimateWithError,
}

#[derive(Clone, Debug)]
pub struct GeneratorL2Sweep {
    pub rows: Vec<GeneratorL2Row>,
    /// E_μ |L_0 F|²
    pub l0_sq: EstimateWithError,
    pub c0: EstimateWithError,
}

/// For Gibbs samples γ and `F = e^{⟨f,·⟩}`, estimate `E_μ|L_ε F − L_0 F|²`
/// across the ε list (common random numbers: one kernel-draw bank per
/// sample, reused for every ε) and `E_μ|L_0 F|²`. The limiting generator
/// uses the symmetric-form constants `C_u = C_v = C_0` estimated from the
/// same bank.
#[allow(clippy::too_many_arguments)]
pub fn generator_l2_sweep(
    samples: &[Configuration],
    phi: &PairPotential,
    z: f64,
    u: f64,
    v: f64,
    kernel: &JumpKernel,
    eps_list: &[f64],
    f: &TestFn,
    mc_n: usize,
    seed: u64,
    stage: u64,
) -> Result<GeneratorL2Sweep> {
    if samples.is_empty() {
        return Err(Error::Degenerate("empty sample bank".into()));
    }
    let torus = *samples[0].torus();
    let c_u = harmonic::estimate_c_u(samples, phi, u)?;
    let c_v = harmonic::estimate_c_u(samples, phi, v)?;
    let bd = GlauberParams {
        mode: BirthDeathMode::Interacting {
            potential: phi.clone(),
            activity: z,
            u,
            v,
            c_u: c_u.value,
            c_v: c_v.value,
        },
        torus,
    };
    let dim = torus.dim();
    // per-sample: (L0F, [LεF per eps]) with shared kernel draws
    let per_sample: Vec<(f64, Vec<f64>)> =
        par_trajectories(samples.len(), seed, stage, |i, rng| {
            let gamma = &samples[i];
            let l0 = glauber::apply_bd_generator_to_exp(f, gamma, &bd, 1e-10)?;
            let bank: Vec<Vec<f64>> = (0..mc_n).map(|_| kernel.sample(dim, rng)).collect();
            let mut l_eps = Vec::with_capacity(eps_list.len());
            for &eps in eps_list {
                let params = HopParams {
                    mode: HopRateMode::Symmetric { u, v, phi: phi.clone(), activity: z },
                    kernel: kernel.clone(),
                    eps,
                };
                let est = kawasaki::apply_hop_generator_to_exp(f, gamma, &params, &bank)?;
                l_eps.push(est.value);
            }
            Ok((l0, l_eps))
        })?;
    let l0_sq_vals: Vec<f64> = per_sample.iter().map(|(l0, _)| l0 * l0).collect();
    let l0_sq = EstimateWithError::from_samples(&l0_sq_vals)?;
    let mut rows = Vec::new();
    for (k, &eps) in eps_list.iter().enumerate() {
        let diffs: Vec<f64> = per_sample
            .iter()
            .map(|(l0, l_eps)| {
                let d = l_eps[k] - l0;
                d * d
            })
            .collect();
        rows.push(GeneratorL2Row { eps, mean_sq_diff: EstimateWithError::from_samples(&diffs)? });
    }
    Ok(GeneratorL2Sweep { rows, l0_sq, c0: c_u })
}

// ---------------------------------------------------------------------------
// interacting birth-death stationarity pipeline
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct StationarityReport {
    /// paired early-vs-late density difference z-score
    pub density_z: f64,
    /// per-bin paired u² difference z-scores
    pub u2_z: Vec<f64>,
    pub density: EstimateWithError,
    /// birth minus death flux inside the probe window, paired z-score
    pub flux_z: f64,
}

/// Run the interacting birth-death dynamics from Gibbs initial data and
/// test stationarity: per-trajectory early-half vs late-half differences of
/// the density and of the connected pair function per bin (paired
/// statistics), plus the window birth/death flux balance.
#[allow(clippy::too_many_arguments)]
pub fn bd_stationarity(
    initials: &[Configuration],
    phi: &PairPotential,
    z: f64,
    u: f64,
    v: f64,
    c_u: f64,
    c_v: f64,
    t_final: f64,
    n_snaps: usize,
    n_bins: usize,
    r_max: f64,
    seed: u64,
    stage: u64,
) -> Result<StationarityReport> {
    if initials.is_empty() {
        return Err(Error::Degenerate("no initial configurations".into()));
    }
    let torus = *initials[0].torus();
    if torus.dim() != 1 {
        return Err(Error::Parameter(
            "stationarity pipeline uses d = 1 shell measures".into(),
        ));
    }
    let params = GlauberParams {
        mode: BirthDeathMode::Interacting {
            potential: phi.clone(),
            activity: z,
            u,
            v,
            c_u,
            c_v,
        },
        torus,
    };
    let snap_times: Vec<f64> =
        (1..=n_snaps).map(|k| t_final * k as f64 / n_snaps as f64).collect();
    let half = n_snaps / 2;
    struct Halves {
        density_early: f64,
        density_late: f64,
        k2_early: Vec<f64>,
        k2_late: Vec<f64>,
        flux_diff: f64,
    }
    let vol = torus.volume();
    let width = r_max / n_bins as f64;
    let per_traj: Vec<Halves> = par_trajectories(initials.len(), seed, stage, |i, rng| {
        let run = glauber::run_birth_death(initials[i].clone(), &params, t_final, &snap_times, rng)?;
        let mut density = [0.0f64; 2];
        let mut k2 = [vec![0.0f64; n_bins], vec![0.0f64; n_bins]];
        for (s, cfg) in run.snapshots.iter().enumerate() {
            let part = if s < half { 0 } else { 1 };
            density[part] += cfg.len() as f64 / vol;
            for (pi, p) in cfg.iter() {
                cfg.for_each_neighbor(p, r_max, |pj, d| {
                    if pj != pi && d < r_max {
                        let b = ((d / width) as usize).min(n_bins - 1);
                        let shell = 2.0 * width; // d = 1 shell measure
                        k2[part][b] += 1.0 / (vol * shell);
                    }
                });
            }
        }
        let n_early = half as f64;
        let n_late = (n_snaps - half) as f64;
        density[0] /= n_early;
        density[1] /= n_late;
        for b in 0..n_bins {
            k2[0][b] /= n_early;
            k2[1][b] /= n_late;
        }
        let (births, deaths) =
            glauber::window_fluxes(&run.events, (&[0.0], &[torus.side() / 2.0]));
        Ok(Halves {
            density_early: density[0],
            density_late: density[1],
            k2_early: k2[0].clone(),
            k2_late: k2[1].clone(),
            flux_diff: births as f64 - deaths as f64,
        })
    })?;
    let density_diffs: Vec<f64> =
        per_traj.iter().map(|h| h.density_early - h.density_late).collect();
    let (dm, dse) = stats::mean_se(&density_diffs);
    let density_all: Vec<f64> = per_traj
        .iter()
        .flat_map(|h| [h.density_early, h.density_late])
        .collect();
    let density = EstimateWithError::from_samples(&density_all)?;
    let mut u2_z = Vec::with_capacity(n_bins);
    for b in 0..n_bins {
        // paired u² difference: Δk² − (k¹_early² − k¹_late²) per trajectory
        let diffs: Vec<f64> = per_traj
            .iter()
            .map(|h| {
                (h.k2_early[b] - h.k2_late[b])
                    - (h.density_early * h.density_early - h.density_late * h.density_late)
            })
            .collect();
        let (m, se) = stats::mean_se(&diffs);
        u2_z.push(if se > 0.0 { m / se } else { 0.0 });
    }
    let flux: Vec<f64> = per_traj.iter().map(|h| h.flux_diff).collect();
    let (fm, fse) = stats::mean_se(&flux);
    Ok(StationarityReport {
        density_z: if dse > 0.0 { dm / dse } else { 0.0 },
        u2_z,
        density,
        flux_z: if fse > 0.0 { fm / fse } else { 0.0 },
    })
}

// ---------------------------------------------------------------------------
// helpers shared by the CLI and the acceptance suite
// ---------------------------------------------------------------------------

/// Covariance estimate from per-trajectory pairs.
pub fn cov_estimate(pairs: &[(f64, f64)]) -> Result<EstimateWithError> {
    estimation::covariance_of_pairs(pairs)
}

/// χ² goodness-of-fit of window counts against Poisson(λ), 1% level.
pub fn window_counts_poisson_ok(counts: &[u64], lambda: f64) -> Result<(bool, f64)> {
    let rep = stats::chi2_gof_poisson(counts, lambda, 5.0)?;
    Ok((rep.p_value > 0.01, rep.p_value))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_stage_disjoint() {
        use rand::Rng;
        let mut a = stream_for(1, 0, 5);
        let mut b = stream_for(1, 1, 5);
        assert_ne!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn par_trajectories_is_deterministic() {
        use rand::Rng;
        let run = || {
            par_trajectories(64, 9, 3, |i, rng| Ok(i as f64 + rng.gen::<f64>())).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn quadrature_oracle_limits() {
        // eps → 0: oracle → e^{−t} ρ ∫fg + (1 − e^{−t}) ρ ∫f ∫g / L
        let torus = Torus::new(1, 20.0).unwrap();
        let f = TestFn::box_indicator(&[0.0], &[2.0], 1.0);
        let oracle =
            free_cov_quadrature_oracle(torus, 1.0, 1.0, 1e-3, 1.0, &f, &f).unwrap();
        let wrap = relocation_wrap_term(torus, 1.0, 1.0, &f, &f);
        let expect = (-1.0f64).exp() * 2.0 + wrap;
        assert!((oracle - expect).abs() < 1e-6, "{oracle} vs {expect}");
        // t → 0: oracle → ρ ∫fg
        let oracle = free_cov_quadrature_oracle(torus, 1.0, 1.0, 1.0, 1e-9, &f, &f).unwrap();
        assert!((oracle - 2.0).abs() < 1e-6, "{oracle}");
    }

    #[test]
    fn constants_free_case() {
        // φ = 0: C_u = C_v = 1 exactly, c⁻ = 1, c⁺ = z, k1 = density
        let torus = Torus::new(1, 20.0).unwrap();
        let params = GibbsParams::with_defaults(PairPotential::zero(), 0.2, torus);
        let bank = gibbs_bank(&params, 400, 8, 5, 0).unwrap();
        let c = estimate_constants(&bank, &PairPotential::zero(), 0.2, 0.0, 0.5).unwrap();
        assert_eq!(c.c_u.value, 1.0);
        assert_eq!(c.c_v.value, 1.0);
        assert_eq!(c.c_minus.value, 1.0);
        assert!((c.c_plus.value - 0.2).abs() < 1e-15);
        assert!((c.k1.value - 0.2).abs() < 4.0 * c.k1.se);
    }
}
