//! Grand-canonical Gibbs sampling on the torus and its statistical
//! certificate, the Georgii–Nguyen–Zessin (GNZ) identity.
//!
//! The sampler is a continuous-time heat-bath birth-death chain: birth
//! proposals arrive as a space-time Poisson stream at rate `z·L^d` (times a
//! dominating factor when the potential has a negative part) and are accepted
//! with probability `e^{−E(x,γ)}` over the dominating factor; every particle
//! dies at rate 1. Detailed balance of this chain with respect to the Gibbs
//! measure is exactly the GNZ identity, so the sampler and its test share one
//! identity.

use crate::error::{Error, Result};
use crate::estimation::EstimateWithError;
use crate::potential::{relative_energy, LowActivityReport, PairPotential};
use crate::stats;
use crate::torus::{Configuration, Torus};
use rand::Rng;
use rand_distr::{Distribution, Exp1};

#[derive(Clone, Debug)]
pub struct GibbsParams {
    pub potential: PairPotential,
    pub activity: f64,
    pub torus: Torus,
    /// Events discarded before the first retained snapshot.
    pub burn_in: u64,
    /// Events between retained snapshots.
    pub thinning: u64,
}

impl GibbsParams {
    /// Default burn-in `50·⌈z·L^d⌉` and thinning `10·⌈z·L^d⌉` events; these
    /// are heuristics — correctness is certified by the stationarity and GNZ
    /// tests, not by these constants.
    pub fn with_defaults(potential: PairPotential, activity: f64, torus: Torus) -> Self {
        let unit = (activity * torus.volume()).ceil().max(1.0) as u64;
        GibbsParams { potential, activity, torus, burn_in: 50 * unit, thinning: 10 * unit }
    }

    /// Load-time validation: geometry, declared stability (spot check), and
    /// the low-activity report (warn-only: sampling may still mix when it
    /// fails, but the scaling-limit preconditions do not hold).
    pub fn validate<R: Rng>(&self, rng: &mut R) -> Result<LowActivityReport> {
        if !(self.activity > 0.0) {
            return Err(Error::Parameter(format!("activity must be > 0, got {}", self.activity)));
        }
        if self.potential.range() >= 0.5 * self.torus.side() {
            return Err(Error::Geometry(format!(
                "interaction range {} must be < L/2 = {}",
                self.potential.range(),
                0.5 * self.torus.side()
            )));
        }
        let stab = self.potential.check_stability(
            self.potential.stability_b(),
            200,
            self.torus.side(),
            self.torus.dim(),
            rng,
        );
        if !stab.holds {
            return Err(Error::Parameter(format!(
                "declared stability constant B = {} violated (worst margin {})",
                self.potential.stability_b(),
                stab.worst_margin
            )));
        }
        self.potential.check_low_activity(self.activity, self.torus.dim())
    }
}

struct BirthDeathChain<'a> {
    params: &'a GibbsParams,
    config: Configuration,
    live: Vec<usize>,
    time: f64,
}

impl<'a> BirthDeathChain<'a> {
    fn new(params: &'a GibbsParams) -> Result<Self> {
        let config = Configuration::new(params.torus, params.potential.range())?;
        Ok(BirthDeathChain { params, config, live: Vec::new(), time: 0.0 })
    }

    /// Dominating factor M ≥ sup e^{−E}: 1 for nonnegative potentials, else
    /// e^{2B·N} with N the current particle count (the stability bound gives
    /// E ≥ −2B·N). Errors when the exponent would overflow.
    fn dominating_factor(&self) -> Result<f64> {
        if self.params.potential.is_nonnegative() {
            return Ok(1.0);
        }
        let exponent = 2.0 * self.params.potential.stability_b() * self.live.len() as f64;
        if exponent > 500.0 {
            return Err(Error::Parameter(format!(
                "birth acceptance bound e^{exponent:.1} overflows; declared B too large for this box"
            )));
        }
        Ok(exponent.exp())
    }

    /// Advance the chain to the deterministic time `t_target`. Pending
    /// exponential clocks may be discarded at the target (memoryless).
    fn run_until<R: Rng>(&mut self, t_target: f64, rng: &mut R) -> Result<()> {
        let z = self.params.activity;
        let vol = self.params.torus.volume();
        while self.time < t_target {
            let m = self.dominating_factor()?;
            let birth_rate = z * vol * m;
            let death_rate = self.live.len() as f64;
            let total = birth_rate + death_rate;
            let dt: f64 = <Exp1 as Distribution<f64>>::sample(&Exp1, rng) / total;
            if self.time + dt > t_target {
                self.time = t_target;
                return Ok(());
            }
            self.time += dt;
            if rng.gen::<f64>() * total < birth_rate {
                let x = self.params.torus.sample_uniform(rng);
                let energy = relative_energy(&self.params.potential, &x, &self.config, None);
                let accept = if energy == f64::INFINITY { 0.0 } else { (-energy).exp() / m };
                if accept > 1.0 + 1e-12 {
                    return Err(Error::Internal(format!(
                        "birth acceptance {accept} > 1: declared stability constant understated"
                    )));
                }
                if rng.gen::<f64>() < accept {
                    match self.config.insert(x) {
                        Ok(id) => self.live.push(id),
                        // exact duplicate position: measure-zero, treat as rejection
                        Err(Error::DuplicatePoint(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            } else if !self.live.is_empty() {
                let k = rng.gen_range(0..self.live.len());
                let id = self.live.swap_remove(k);
                self.config.remove(id)?;
            }
        }
        Ok(())
    }
}

/// Draw `n_samples` configurations from the Gibbs measure for `(φ, z)` on
/// the torus, starting from the empty configuration.
///
/// The `burn_in`/`thinning` event budgets are converted to simulated time
/// via the nominal total event rate `2·z·L^d` (birth proposals plus the
/// stationary death rate) and snapshots are taken at those deterministic
/// times. Snapshots indexed by event count would sample the embedded jump
/// chain instead, whose stationary law is size-biased.
pub fn sample_gibbs<R: Rng>(
    params: &GibbsParams,
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<Configuration>> {
    let mut chain = BirthDeathChain::new(params)?;
    let mut out = Vec::with_capacity(n_samples);
    let nominal_rate = 2.0 * params.activity * params.torus.volume();
    if !(nominal_rate > 0.0) {
        return Err(Error::Parameter("activity·volume must be positive".into()));
    }
    let t_burn = params.burn_in as f64 / nominal_rate;
    let dt_thin = params.thinning.max(1) as f64 / nominal_rate;
    chain.run_until(t_burn, rng)?;
    for k in 0..n_samples {
        chain.run_until(t_burn + (k + 1) as f64 * dt_thin, rng)?;
        out.push(chain.config.clone());
    }
    Ok(out)
}

/// Report of a GNZ residual test.
#[derive(Clone, Debug)]
pub struct GnzReport {
    pub lhs: EstimateWithError,
    pub rhs: EstimateWithError,
    /// z-score of the paired per-sample difference (the honest test
    /// statistic: both sides are evaluated on the same samples).
    pub z_score: f64,
}

/// GNZ residual for a test function `h(x, rest)`:
///
/// `E_μ[Σ_{x∈γ} h(x, γ∖x)]  vs  z ∫ dx E_μ[e^{−E(x,γ)} h(x, γ)]`.
///
/// `h` receives the point, the stored configuration and (on the left side)
/// the id of `x` to exclude; it must vanish for `x` outside `window`. The
/// space integral on the right runs over `window` by per-sample Monte Carlo
/// with `m_draws` uniform points, so the two sides pair up sample by sample.
pub fn gnz_residual<R, H>(
    samples: &[Configuration],
    phi: &PairPotential,
    z: f64,
    h: H,
    window: (&[f64], &[f64]),
    m_draws: usize,
    rng: &mut R,
) -> Result<GnzReport>
where
    R: Rng,
    H: Fn(&[f64], &Configuration, Option<usize>) -> f64,
{
    if samples.len() < 2 {
        return Err(Error::Degenerate("need >= 2 samples".into()));
    }
    let (lo, hi) = window;
    let w_vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
    if !(w_vol > 0.0) {
        return Err(Error::Parameter("window must have positive volume".into()));
    }
    let mut lhs_vals = Vec::with_capacity(samples.len());
    let mut rhs_vals = Vec::with_capacity(samples.len());
    let mut diff_vals = Vec::with_capacity(samples.len());
    let torus = samples[0].torus();
    for gamma in samples {
        let mut lhs = 0.0;
        for (id, p) in gamma.iter() {
            lhs += h(p.as_slice(), gamma, Some(id));
        }
        let mut rhs_acc = 0.0;
        for _ in 0..m_draws.max(1) {
            let raw: Vec<f64> =
                lo.iter().zip(hi).map(|(a, b)| a + rng.gen::<f64>() * (b - a)).collect();
            let x = torus.wrap(&raw);
            let energy = relative_energy(phi, &x, gamma, None);
            let boltzmann = if energy == f64::INFINITY { 0.0 } else { (-energy).exp() };
            rhs_acc += boltzmann * h(x.as_slice(), gamma, None);
        }
        let rhs = z * w_vol * rhs_acc / m_draws.max(1) as f64;
        lhs_vals.push(lhs);
        rhs_vals.push(rhs);
        diff_vals.push(lhs - rhs);
    }
    let lhs = EstimateWithError::from_samples(&lhs_vals)?;
    let rhs = EstimateWithError::from_samples(&rhs_vals)?;
    let (dm, dse) = stats::mean_se(&diff_vals);
    if !(dse > 0.0) {
        return Err(Error::Degenerate("degenerate variance in GNZ residual".into()));
    }
    Ok(GnzReport { lhs, rhs, z_score: dm / dse })
}
