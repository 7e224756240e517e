//! Adaptive 1-d quadrature (Gauss–Kronrod 7–15 with bisection) and radial
//! shell integration for isotropic integrands in d dimensions.

use crate::error::{Error, Result};

// K15 nodes/weights on [-1, 1] (positive half; symmetric) and the embedded
// G7 weights. Standard QUADPACK constants.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let fsum = f(c - x) + f(c + x);
        kronrod += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kronrod *= h;
    gauss *= h;
    (kronrod, (kronrod - gauss).abs())
}

/// Integrate `f` on `[a, b]` to absolute tolerance `abs_tol`.
///
/// The integrand must be finite at evaluation points; discontinuities are
/// fine (they cost subdivisions). Fails if the subdivision budget is
/// exhausted before the error estimate drops below tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let mut stack = vec![(a, b, abs_tol.max(1e-300))];
    let mut splits = 0usize;
    while let Some((lo, hi, tol)) = stack.pop() {
        let (val, err) = gk15(&f, lo, hi);
        if !val.is_finite() {
            return Err(Error::Divergent(format!("integrand not finite on [{lo}, {hi}]")));
        }
        if err <= tol || (hi - lo) < 1e-14 * (b - a).abs() {
            total += val;
        } else {
            splits += 1;
            if splits > 100_000 {
                return Err(Error::Quadrature(format!(
                    "subdivision budget exhausted on [{a}, {b}], last error {err:.3e}"
                )));
            }
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, 0.5 * tol));
            stack.push((mid, hi, 0.5 * tol));
        }
    }
    Ok(total)
}

/// Integrate over a union of disjoint segments.
pub fn integrate_segments<F: Fn(f64) -> f64>(
    f: F,
    segments: &[(f64, f64)],
    abs_tol: f64,
) -> Result<f64> {
    let n = segments.len().max(1) as f64;
    let mut total = 0.0;
    for &(a, b) in segments {
        total += integrate(&f, a, b, abs_tol / n)?;
    }
    Ok(total)
}

/// Volume of the unit ball in `dim` dimensions (exact for integer `dim`).
pub fn unit_ball_volume(dim: usize) -> f64 {
    // V_d = pi^{d/2} / Gamma(d/2 + 1), split by parity to stay exact.
    let d = dim as f64;
    if dim % 2 == 0 {
        let k = dim / 2;
        let mut v = std::f64::consts::PI.powi(k as i32);
        for j in 1..=k {
            v /= j as f64;
        }
        v
    } else {
        // Gamma(d/2 + 1) = sqrt(pi) (d!!) / 2^{(d+1)/2}
        let mut double_fact = 1.0;
        let mut j = dim;
        while j > 1 {
            double_fact *= j as f64;
            j -= 2;
        }
        std::f64::consts::PI.powf(0.5 * (d - 1.0)) * 2f64.powi(((dim + 1) / 2) as i32)
            / double_fact
    }
}

/// Surface measure of the radius-`r` sphere in `dim` dimensions.
pub fn sphere_surface(dim: usize, r: f64) -> f64 {
    dim as f64 * unit_ball_volume(dim) * r.powi(dim as i32 - 1)
}

/// Integrate an isotropic function `g(|x|)` over the ball `|x| <= r_max` in
/// `dim` dimensions: `∫_0^{r_max} g(r) S_d(r) dr` with the exact shell factor.
pub fn integrate_radial<F: Fn(f64) -> f64>(
    g: F,
    r_max: f64,
    dim: usize,
    abs_tol: f64,
) -> Result<f64> {
    if r_max <= 0.0 {
        return Ok(0.0);
    }
    integrate(|r| g(r) * sphere_surface(dim, r), 0.0, r_max, abs_tol)
}
