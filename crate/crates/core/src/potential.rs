//! Pair potentials, relative interaction energies, jump kernels with their
//! ε-scalings, and the admissibility checks (stability, low activity, the
//! (u,v) integrability condition) that gate the dynamics.
//!
//! Potentials are parametric radial families rather than arbitrary closures,
//! so ranges, stability constants and closed-form integrals are trustworthy.
//! The value `+∞` is a legal potential value (hard core), not an error.

use crate::error::{Error, Result};
use crate::quad;
use crate::torus::{Configuration, Point, Torus};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Parametric radial pair potential family.
#[derive(Clone, Debug, PartialEq)]
pub enum PotentialFamily {
    /// φ ≡ 0.
    Zero,
    /// φ(x) = depth on |x| ≤ range, 0 beyond. depth may be negative.
    SquareWell { depth: f64 },
    /// φ(x) = amplitude · exp(−|x|²/(2σ²)) on |x| ≤ range, 0 beyond.
    GaussianBump { amplitude: f64, sigma: f64 },
    /// +∞ on |x| < core, depth on core ≤ |x| ≤ range, 0 beyond.
    HardCoreSquareWell { core: f64, depth: f64 },
    /// Radial step table: value `values[i]` on `[radii[i], radii[i+1])`,
    /// 0 at and beyond the last radius. User-declared stability constant.
    TabulatedRadial { radii: Vec<f64>, values: Vec<f64> },
}

/// An even pair potential `ℝ^d → ℝ ∪ {+∞}` with compact support of radius
/// `range` and a declared stability constant `stability_b`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairPotential {
    pub family: PotentialFamily,
    range: f64,
    stability_b: f64,
}

impl PairPotential {
    pub fn zero() -> Self {
        PairPotential { family: PotentialFamily::Zero, range: 0.0, stability_b: 0.0 }
    }

    /// Square well of the given depth (sign free) and range. A nonnegative
    /// depth is stable with B = 0; a negative depth requires a declared B
    /// via [`Self::with_declared_stability`] (and may admit none).
    pub fn square_well(depth: f64, range: f64) -> Result<Self> {
        if !(range > 0.0) {
            return Err(Error::Parameter(format!("square well range must be > 0, got {range}")));
        }
        Ok(PairPotential {
            family: PotentialFamily::SquareWell { depth },
            range,
            stability_b: 0.0,
        })
    }

    pub fn gaussian_bump(amplitude: f64, sigma: f64, range: f64) -> Result<Self> {
        if !(amplitude >= 0.0) || !(sigma > 0.0) || !(range > 0.0) {
            return Err(Error::Parameter(
                "gaussian bump needs amplitude >= 0, sigma > 0, range > 0".into(),
            ));
        }
        Ok(PairPotential {
            family: PotentialFamily::GaussianBump { amplitude, sigma },
            range,
            stability_b: 0.0,
        })
    }

    pub fn hard_core_square_well(core: f64, depth: f64, range: f64) -> Result<Self> {
        if !(core > 0.0) || range < core {
            return Err(Error::Parameter(format!(
                "hard core needs 0 < core <= range, got core={core}, range={range}"
            )));
        }
        // With a hard core, packing bounds the number of interacting
        // neighbors, so a negative tail is stable; B is declared separately.
        Ok(PairPotential {
            family: PotentialFamily::HardCoreSquareWell { core, depth },
            range,
            stability_b: 0.0,
        })
    }

    pub fn tabulated_radial(radii: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if radii.is_empty() || radii.len() != values.len() + 1 {
            return Err(Error::Parameter("table needs radii.len() == values.len() + 1".into()));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] != 0.0 {
            return Err(Error::Parameter("table radii must start at 0 and increase".into()));
        }
        let range = *radii.last().unwrap();
        Ok(PairPotential {
            family: PotentialFamily::TabulatedRadial { radii, values },
            range,
            stability_b: 0.0,
        })
    }

    /// Declare the stability constant B ≥ 0; validate with
    /// [`Self::check_stability`].
    pub fn with_declared_stability(mut self, b: f64) -> Result<Self> {
        if !(b >= 0.0) {
            return Err(Error::Parameter(format!("stability constant must be >= 0, got {b}")));
        }
        self.stability_b = b;
        Ok(self)
    }

    /// Interaction range R: φ(x) = 0 for |x| > R.
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn stability_b(&self) -> f64 {
        self.stability_b
    }

    /// Pointwise value at radius r ≥ 0. `+∞` inside a hard core.
    pub fn eval_radial(&self, r: f64) -> f64 {
        if r > self.range {
            return 0.0;
        }
        match &self.family {
            PotentialFamily::Zero => 0.0,
            PotentialFamily::SquareWell { depth } => *depth,
            PotentialFamily::GaussianBump { amplitude, sigma } => {
                amplitude * (-0.5 * r * r / (sigma * sigma)).exp()
            }
            PotentialFamily::HardCoreSquareWell { core, depth } => {
                if r < *core {
                    f64::INFINITY
                } else {
                    *depth
                }
            }
            PotentialFamily::TabulatedRadial { radii, values } => {
                // r <= range here; the last step is closed at its right edge
                let i = radii.iter().rposition(|&edge| edge <= r).unwrap_or(0);
                values[i.min(values.len() - 1)]
            }
        }
    }

    /// Value at displacement `disp` (even by radial construction).
    pub fn eval(&self, disp: &[f64]) -> f64 {
        self.eval_radial(disp.iter().map(|d| d * d).sum::<f64>().sqrt())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.family, PotentialFamily::Zero)
    }

    /// True if the family is ≥ 0 everywhere (then B = 0 is valid).
    pub fn is_nonnegative(&self) -> bool {
        match &self.family {
            PotentialFamily::Zero => true,
            PotentialFamily::SquareWell { depth } => *depth >= 0.0,
            PotentialFamily::GaussianBump { .. } => true,
            PotentialFamily::HardCoreSquareWell { depth, .. } => *depth >= 0.0,
            PotentialFamily::TabulatedRadial { values, .. } => values.iter().all(|&v| v >= 0.0),
        }
    }

    pub fn has_hard_core(&self) -> bool {
        matches!(self.family, PotentialFamily::HardCoreSquareWell { .. })
    }

    /// Radius of the +∞ region (0 when none).
    pub fn hard_core_radius(&self) -> f64 {
        match &self.family {
            PotentialFamily::HardCoreSquareWell { core, .. } => *core,
            _ => 0.0,
        }
    }

    /// Most negative finite value of the potential (0 for nonnegative ones).
    pub fn min_finite_value(&self) -> f64 {
        match &self.family {
            PotentialFamily::Zero | PotentialFamily::GaussianBump { .. } => 0.0,
            PotentialFamily::SquareWell { depth } => depth.min(0.0),
            PotentialFamily::HardCoreSquareWell { depth, .. } => depth.min(0.0),
            PotentialFamily::TabulatedRadial { values, .. } => {
                values.iter().fold(0.0f64, |m, &v| m.min(v))
            }
        }
    }

    /// The potential scaled by `factor ∈ [0, 1]`. `factor = 0` is the zero
    /// potential (the convention `0 · (+∞) = 0` used by the symmetric-rate
    /// generator); for `factor > 0` a hard core stays a hard core.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&factor) {
            return Err(Error::Parameter(format!("scale factor must be in [0,1], got {factor}")));
        }
        if factor == 0.0 {
            return Ok(PairPotential::zero());
        }
        let family = match &self.family {
            PotentialFamily::Zero => PotentialFamily::Zero,
            PotentialFamily::SquareWell { depth } => {
                PotentialFamily::SquareWell { depth: depth * factor }
            }
            PotentialFamily::GaussianBump { amplitude, sigma } => PotentialFamily::GaussianBump {
                amplitude: amplitude * factor,
                sigma: *sigma,
            },
            PotentialFamily::HardCoreSquareWell { core, depth } => {
                PotentialFamily::HardCoreSquareWell { core: *core, depth: depth * factor }
            }
            PotentialFamily::TabulatedRadial { radii, values } => PotentialFamily::TabulatedRadial {
                radii: radii.clone(),
                values: values.iter().map(|v| v * factor).collect(),
            },
        };
        Ok(PairPotential { family, range: self.range, stability_b: self.stability_b * factor })
    }

    /// Integrate an isotropic transform `g(φ(r))` of the potential over its
    /// support ball in `dim` dimensions, handling the hard-core region
    /// analytically (the transform is evaluated at `+∞` once and multiplied
    /// by the core volume). Errors if the transform is infinite on a
    /// positive-volume region.
    pub fn integrate_transform<F: Fn(f64) -> f64>(
        &self,
        g: F,
        dim: usize,
        abs_tol: f64,
    ) -> Result<f64> {
        let core = self.hard_core_radius();
        let mut total = 0.0;
        if core > 0.0 {
            let g_inf = g(f64::INFINITY);
            if !g_inf.is_finite() {
                return Err(Error::Divergent(
                    "transform is infinite on the hard-core region".into(),
                ));
            }
            total += g_inf * quad::unit_ball_volume(dim) * core.powi(dim as i32);
        }
        if self.range > core {
            total += quad::integrate(
                |r| g(self.eval_radial(r)) * quad::sphere_surface(dim, r),
                core,
                self.range,
                abs_tol,
            )?;
        }
        Ok(total)
    }

    /// Randomized check of the stability bound
    /// `Σ_{{x,y}⊂η} φ(x−y) ≥ −B|η|` on finite configurations, plus the
    /// pointwise consequence `φ(x) ≥ −2B` on a radial grid.
    ///
    /// Half of the trial configurations are drawn uniformly in the box; the
    /// other half are clustered inside one interaction ball, which is where
    /// unstable potentials actually violate the bound.
    pub fn check_stability<R: Rng>(
        &self,
        b: f64,
        trials: usize,
        box_side: f64,
        dim: usize,
        rng: &mut R,
    ) -> StabilityReport {
        // Pointwise: φ(r) ≥ −2B on a grid over the support.
        let grid_n = 2048;
        for i in 0..=grid_n {
            let r = self.range * i as f64 / grid_n as f64;
            let v = self.eval_radial(r);
            if v < -2.0 * b {
                return StabilityReport {
                    holds: false,
                    worst_margin: v + 2.0 * b,
                    witness: Some(vec![vec![0.0; dim], {
                        let mut w = vec![0.0; dim];
                        w[0] = r;
                        w
                    }]),
                };
            }
        }
        let mut worst = f64::INFINITY;
        let mut witness = None;
        for trial in 0..trials.max(1) {
            let n = rng.gen_range(2..=12usize);
            let clustered = trial % 2 == 1;
            let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n);
            let center: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() * box_side).collect();
            for _ in 0..n {
                let p: Vec<f64> = if clustered {
                    (0..dim)
                        .map(|a| center[a] + (rng.gen::<f64>() - 0.5) * 2.0 * self.range.max(1e-9))
                        .collect()
                } else {
                    (0..dim).map(|_| rng.gen::<f64>() * box_side).collect()
                };
                pts.push(p);
            }
            let mut energy = 0.0;
            'pairs: for i in 0..n {
                for j in (i + 1)..n {
                    let d2: f64 =
                        (0..dim).map(|a| (pts[i][a] - pts[j][a]).powi(2)).sum();
                    let v = self.eval_radial(d2.sqrt());
                    if v == f64::INFINITY {
                        energy = f64::INFINITY;
                        break 'pairs;
                    }
                    energy += v;
                }
            }
            if energy == f64::INFINITY {
                continue; // hard-core overlap: bound holds vacuously
            }
            let margin = energy + b * n as f64;
            if margin < worst {
                worst = margin;
                if margin < 0.0 {
                    witness = Some(pts.clone());
                }
            }
        }
        StabilityReport { holds: worst >= 0.0, worst_margin: worst, witness }
    }

    /// Low-activity condition: `z ∫ |e^{−φ(x)} − 1| dx < (2 e^{1+2B})^{−1}`,
    /// with B the declared stability constant.
    pub fn check_low_activity(&self, z: f64, dim: usize) -> Result<LowActivityReport> {
        if !(z > 0.0) {
            return Err(Error::Parameter(format!("activity must be > 0, got {z}")));
        }
        let integral = self.integrate_transform(
            |v| if v == f64::INFINITY { 1.0 } else { ((-v).exp() - 1.0).abs() },
            dim,
            1e-11,
        )?;
        let lhs = z * integral;
        let threshold = 0.5 * (-(1.0 + 2.0 * self.stability_b)).exp();
        Ok(LowActivityReport { holds: lhs < threshold, lhs, threshold })
    }

    /// Integrability condition for the symmetric-rate dynamics:
    /// `∫ |exp[(2(u∨v)−1) φ(x)] − 1| dx < ∞`, with the computed value.
    ///
    /// Divergent exactly when the exponent coefficient is positive and the
    /// potential has a positive-volume +∞ region (a hard core); a negative
    /// coefficient sends the hard-core integrand to |0 − 1| = 1, which is
    /// finite.
    pub fn check_uv_integrability(&self, u: f64, v: f64, dim: usize) -> Result<UvReport> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(Error::Parameter(format!("u, v must lie in [0,1], got {u}, {v}")));
        }
        let c = 2.0 * u.max(v) - 1.0;
        if c == 0.0 {
            return Ok(UvReport { holds: true, value: 0.0 });
        }
        if c > 0.0 && self.has_hard_core() {
            return Ok(UvReport { holds: false, value: f64::INFINITY });
        }
        let value = self.integrate_transform(
            |p| {
                if p == f64::INFINITY {
                    // reachable only with c < 0: exp(-inf) = 0
                    1.0
                } else {
                    ((c * p).exp() - 1.0).abs()
                }
            },
            dim,
            1e-11,
        )?;
        Ok(UvReport { holds: value.is_finite(), value })
    }
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub holds: bool,
    /// Worst observed `Σφ + B|η|` (negative = violation).
    pub worst_margin: f64,
    /// A violating configuration, if one was found.
    pub witness: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug)]
pub struct LowActivityReport {
    pub holds: bool,
    pub lhs: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug)]
pub struct UvReport {
    pub holds: bool,
    pub value: f64,
}

/// Relative energy `E(x, γ) = Σ_{y∈γ} φ(x−y)` with torus minimum image,
/// excluding the stored point `exclude` if given. Exact sum over the cell
/// index in ascending id order (bit-identical to a brute-force scan).
pub fn relative_energy(
    phi: &PairPotential,
    x: &Point,
    gamma: &Configuration,
    exclude: Option<usize>,
) -> f64 {
    if phi.is_zero() || gamma.is_empty() {
        return 0.0;
    }
    let ids = gamma
        .neighbors_within(x, phi.range())
        .expect("potential range must satisfy R < L/2");
    let mut total = 0.0;
    for id in ids {
        if Some(id) == exclude {
            continue;
        }
        let y = gamma.point(id).expect("neighbor ids are live");
        let v = phi.eval_radial(gamma.torus().min_image_dist(x, y));
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        total += v;
    }
    total
}

/// Brute-force variant of [`relative_energy`]; oracle for tests.
pub fn relative_energy_bruteforce(
    phi: &PairPotential,
    x: &Point,
    gamma: &Configuration,
    exclude: Option<usize>,
) -> f64 {
    let mut total = 0.0;
    for (id, y) in gamma.iter() {
        if Some(id) == exclude {
            continue;
        }
        let r = gamma.torus().min_image_dist(x, y);
        if r > phi.range() {
            continue;
        }
        let v = phi.eval_radial(r);
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        total += v;
    }
    total
}

/// Relative energy against an explicit finite point set in flat space (no
/// torus), used by the exact small-configuration machinery.
pub fn relative_energy_flat(phi: &PairPotential, x: &[f64], others: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for y in others {
        let r = x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let v = phi.eval_radial(r);
        if v == f64::INFINITY {
            return f64::INFINITY;
        }
        total += v;
    }
    total
}

/// Even probability density on ℝ^d used for jump displacements, with the
/// scaled family `a_ε(x) = ε^d a(εx)` (a draw from `a_ε` is `δ/ε` with
/// `δ ~ a`).
#[derive(Clone, Debug, PartialEq)]
pub enum JumpKernel {
    /// Product of d independent N(0, σ²) components.
    Gaussian { sigma: f64 },
    /// Uniform on the ball of the given radius.
    UniformBall { radius: f64 },
}

impl JumpKernel {
    pub fn validate(&self) -> Result<()> {
        match self {
            JumpKernel::Gaussian { sigma } if !(sigma > &0.0) => {
                Err(Error::Parameter("gaussian kernel needs sigma > 0".into()))
            }
            JumpKernel::UniformBall { radius } if !(radius > &0.0) => {
                Err(Error::Parameter("uniform ball kernel needs radius > 0".into()))
            }
            _ => Ok(()),
        }
    }

    /// Density a(x) (normalized to total mass 1 analytically).
    pub fn density(&self, disp: &[f64]) -> f64 {
        let r2: f64 = disp.iter().map(|d| d * d).sum();
        match self {
            JumpKernel::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                let norm = (2.0 * std::f64::consts::PI * s2).powf(disp.len() as f64 / 2.0);
                (-0.5 * r2 / s2).exp() / norm
            }
            JumpKernel::UniformBall { radius } => {
                if r2.sqrt() <= *radius {
                    1.0 / (quad::unit_ball_volume(disp.len()) * radius.powi(disp.len() as i32))
                } else {
                    0.0
                }
            }
        }
    }

    /// Scaled density `a_ε(x) = ε^d a(εx)`.
    pub fn density_scaled(&self, eps: f64, disp: &[f64]) -> f64 {
        let scaled: Vec<f64> = disp.iter().map(|d| d * eps).collect();
        eps.powi(disp.len() as i32) * self.density(&scaled)
    }

    /// Draw a displacement `δ ~ a` in `dim` dimensions.
    pub fn sample<R: Rng>(&self, dim: usize, rng: &mut R) -> Vec<f64> {
        match self {
            JumpKernel::Gaussian { sigma } => (0..dim)
                .map(|_| sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect(),
            JumpKernel::UniformBall { radius } => {
                // isotropic direction via normals, radius via U^{1/d}
                loop {
                    let dir: Vec<f64> = (0..dim)
                        .map(|_| {
                            <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng)
                        })
                        .collect();
                    let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                    if norm > 1e-12 {
                        let r = radius * rng.gen::<f64>().powf(1.0 / dim as f64);
                        return dir.into_iter().map(|d| d / norm * r).collect();
                    }
                }
            }
        }
    }

    /// Draw from the scaled kernel `a_ε` (displacement `δ/ε`).
    pub fn sample_scaled<R: Rng>(&self, eps: f64, dim: usize, rng: &mut R) -> Vec<f64> {
        self.sample(dim, rng).into_iter().map(|d| d / eps).collect()
    }

    /// Image-summed density of the scaled kernel on the torus:
    /// `ã_ε(w) = Σ_k a_ε(w + kL)` over the shift lattice. This is the
    /// density of a wrapped jump displacement.
    pub fn wrapped_density_scaled(&self, eps: f64, disp: &[f64], torus: &Torus) -> f64 {
        let side = torus.side();
        match self {
            JumpKernel::Gaussian { sigma } => {
                // product structure: wrap each axis independently
                let s = sigma / eps;
                disp.iter()
                    .map(|&w| {
                        let mut total = 0.0;
                        let reach = ((8.0 * s) / side).ceil() as i64 + 1;
                        for k in -reach..=reach {
                            let u = w + k as f64 * side;
                            total += (-0.5 * u * u / (s * s)).exp()
                                / (s * (2.0 * std::f64::consts::PI).sqrt());
                        }
                        total
                    })
                    .product()
            }
            JumpKernel::UniformBall { radius } => {
                let r = radius / eps;
                let reach = (r / side).ceil() as i64 + 1;
                let dim = disp.len();
                let mut total = 0.0;
                let mut shift = vec![-reach; dim];
                'outer: loop {
                    let mut r2 = 0.0;
                    for a in 0..dim {
                        let u = disp[a] + shift[a] as f64 * side;
                        r2 += u * u;
                    }
                    if r2.sqrt() <= r {
                        total += 1.0 / (quad::unit_ball_volume(dim) * r.powi(dim as i32));
                    }
                    let mut a = 0;
                    loop {
                        if a == dim {
                            break 'outer;
                        }
                        shift[a] += 1;
                        if shift[a] <= reach {
                            break;
                        }
                        shift[a] = -reach;
                        a += 1;
                    }
                }
                total
            }
        }
    }
}

/// One scaled jump from `x`: `wrap(x + δ/ε)` with `δ ~ a`, so the
/// displacement before wrapping has density `a_ε`.
pub fn sample_jump<R: Rng>(
    kernel: &JumpKernel,
    eps: f64,
    x: &Point,
    torus: &Torus,
    rng: &mut R,
) -> Point {
    let delta = kernel.sample_scaled(eps, torus.dim(), rng);
    let raw: Vec<f64> = x.as_slice().iter().zip(&delta).map(|(a, d)| a + d).collect();
    torus.wrap(&raw)
}

/// Hopping-rate specification: either an explicit pair of departure/landing
/// potentials, or the symmetric `(u, v)` form over one potential, whose rate
/// is the half-sum of two plain addends.
#[derive(Clone, Debug)]
pub enum HopRateMode {
    Plain { phi_minus: PairPotential, phi_plus: PairPotential },
    Symmetric { u: f64, v: f64, phi: PairPotential, activity: f64 },
}

impl HopRateMode {
    /// Decompose into weighted plain addends `(weight, φ⁻, φ⁺)`.
    pub fn addends(&self) -> Result<Vec<(f64, PairPotential, PairPotential)>> {
        match self {
            HopRateMode::Plain { phi_minus, phi_plus } => {
                Ok(vec![(1.0, phi_minus.clone(), phi_plus.clone())])
            }
            HopRateMode::Symmetric { u, v, phi, .. } => {
                if u == v {
                    // the two addends coincide: single-exponential form
                    Ok(vec![(1.0, phi.scaled(*u)?, phi.scaled(1.0 - *v)?)])
                } else {
                    Ok(vec![
                        (0.5, phi.scaled(*u)?, phi.scaled(1.0 - *v)?),
                        (0.5, phi.scaled(*v)?, phi.scaled(1.0 - *u)?),
                    ])
                }
            }
        }
    }

    /// Largest potential range among the addends.
    pub fn max_range(&self) -> f64 {
        match self {
            HopRateMode::Plain { phi_minus, phi_plus } => phi_minus.range().max(phi_plus.range()),
            HopRateMode::Symmetric { phi, .. } => phi.range(),
        }
    }
}

/// Full hop parameters: rate mode, jump kernel and scaling ε.
#[derive(Clone, Debug)]
pub struct HopParams {
    pub mode: HopRateMode,
    pub kernel: JumpKernel,
    pub eps: f64,
}

impl HopParams {
    pub fn free(kernel: JumpKernel, eps: f64) -> Self {
        HopParams {
            mode: HopRateMode::Plain {
                phi_minus: PairPotential::zero(),
                phi_plus: PairPotential::zero(),
            },
            kernel,
            eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.eps > 0.0) {
            return Err(Error::Parameter(format!("eps must be > 0, got {}", self.eps)));
        }
        if let HopRateMode::Symmetric { u, v, activity, .. } = &self.mode {
            if !(0.0..=1.0).contains(u) || !(0.0..=1.0).contains(v) {
                return Err(Error::Parameter(format!("u, v must lie in [0,1], got {u}, {v}")));
            }
            if !(activity > &0.0) {
                return Err(Error::Parameter("activity must be > 0".into()));
            }
        }
        Ok(())
    }

    /// The exponential rate factor `r(x, y, γ∖x)` (without the kernel):
    /// plain mode `exp[E^{φ⁻}(x,·) − E^{φ⁺}(y,·)]`, symmetric mode the
    /// half-sum of its two addends. `x` must not be a live id of
    /// `gamma_minus_x`; landing on `+∞` energy gives factor 0.
    pub fn rate_factor(&self, x: &Point, y: &Point, gamma_minus_x: &Configuration) -> Result<f64> {
        let mut total = 0.0;
        for (w, phi_m, phi_p) in self.mode.addends()? {
            let e_dep = relative_energy(&phi_m, x, gamma_minus_x, None);
            if e_dep == f64::INFINITY {
                return Err(Error::Internal(
                    "departure energy is +inf: overlapping hard cores in a live configuration"
                        .into(),
                ));
            }
            let e_land = relative_energy(&phi_p, y, gamma_minus_x, None);
            total += w * if e_land == f64::INFINITY { 0.0 } else { (e_dep - e_land).exp() };
        }
        Ok(total)
    }

    /// The full hop rate `c(x, y, γ∖x)` with the image-summed scaled kernel
    /// evaluated on the torus minimum-image displacement.
    pub fn rate(&self, x: &Point, y: &Point, gamma_minus_x: &Configuration) -> Result<f64> {
        let torus = *gamma_minus_x.torus();
        let disp = torus.min_image_disp(x, y);
        Ok(self.kernel.wrapped_density_scaled(self.eps, &disp, &torus) * self.rate_factor(x, y, gamma_minus_x)?)
    }
}
