//! Free additive convolution through subordination.
//!
//! For `μ = μ₁ ⊞ μ₂` the subordination functions satisfy
//! `G_μ(z) = G₁(ω₁(z)) = G₂(ω₂(z))` and `ω₁ + ω₂ = z + F_μ`. Writing
//! `H_i = F_i - id`, `ω₂` is the attracting fixed point of
//! `w ↦ z + H₁(z + H₂(w))` on the upper half-plane.
//!
//! Near the origin the local inverses `h₁(z) = z + R₂(G₁(z))` and
//! `h₂(z) = z + R₁(G₂(z))` give an explicit certificate that `0` lies in a
//! gap of `supp(μ₁ ⊞ μ₂)`; see [`support_gap`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{DiscreteMeasure, FiniteMeasure, C64};

const FIXED_POINT_MAX_STEPS: usize = 10_000;
const FIXED_POINT_STEP_TOL: f64 = 1e-13;
const NEWTON_MAX_STEPS: usize = 60;
/// Enforced bound on `|G₁(ω₁) - G₂(ω₂)|`.
pub const RESIDUAL_TOL: f64 = 1e-10;
/// Enforced bound on `|ω₁ + ω₂ - z - F_μ(z)|`, relative to
/// `max(1, |ω₁|, |ω₂|)` since `ω₂` blows up like `1/Im z` inside gaps.
pub const SUM_RULE_TOL: f64 = 1e-9;

const MONOTONE_GRID: usize = 1000;
const NU_BISECTION_TOL: f64 = 1e-10;
const NU_Y_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinationSolution {
    pub z: C64,
    pub omega1: C64,
    pub omega2: C64,
    /// `G_{μ₁⊞μ₂}(z)`.
    pub g_value: C64,
    pub iterations: usize,
    /// `|G₁(ω₁) - G₂(ω₂)|`.
    pub residual: f64,
}

impl SubordinationSolution {
    /// `|ω₁ + ω₂ - z - 1/G|`.
    pub fn sum_rule_error(&self) -> f64 {
        (self.omega1 + self.omega2 - self.z - 1.0 / self.g_value).norm()
    }

    /// [`Self::sum_rule_error`] divided by `max(1, |ω₁|, |ω₂|)`.
    pub fn relative_sum_rule_error(&self) -> f64 {
        self.sum_rule_error() / 1f64.max(self.omega1.norm()).max(self.omega2.norm())
    }
}

/// Which local inverse: `h₁ = id + R₂∘G₁` or `h₂ = id + R₁∘G₂`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    H1,
    H2,
}

impl Side {
    /// (own, other) measures for this side.
    fn split<'a>(
        self,
        mu1: &'a DiscreteMeasure,
        mu2: &'a DiscreteMeasure,
    ) -> (&'a DiscreteMeasure, &'a DiscreteMeasure) {
        match self {
            Side::H1 => (mu1, mu2),
            Side::H2 => (mu2, mu1),
        }
    }
}

fn h_part(mu: &DiscreteMeasure, w: C64) -> C64 {
    mu.f_minus_id_unchecked(w)
}

/// `H'(w) = -G'(w)/G(w)² - 1`.
fn h_part_derivative(mu: &DiscreteMeasure, w: C64) -> C64 {
    let g = mu.cauchy_unchecked(w);
    -mu.cauchy_derivative_unchecked(w) / (g * g) - 1.0
}

fn finish(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    z: C64,
    omega1: C64,
    omega2: C64,
    iterations: usize,
) -> Result<SubordinationSolution> {
    let g1 = mu1.cauchy(omega1)?;
    let g2 = mu2.cauchy(omega2)?;
    let sol = SubordinationSolution {
        z,
        omega1,
        omega2,
        g_value: g1,
        iterations,
        residual: (g1 - g2).norm(),
    };
    let sum_err = sol.relative_sum_rule_error();
    if !(sol.residual < RESIDUAL_TOL && sum_err < SUM_RULE_TOL) {
        return Err(Error::NonConvergence {
            what: "subordination fixed point",
            iterations,
            residual: sol.residual.max(sum_err),
        });
    }
    Ok(sol)
}

/// Solve the subordination system for `μ₁ ⊞ μ₂` at `z ∈ ℂ⁺`.
pub fn solve(mu1: &DiscreteMeasure, mu2: &DiscreteMeasure, z: C64) -> Result<SubordinationSolution> {
    if !(z.im > 0.0) || !z.is_finite() {
        return Err(Error::invalid(format!("subordination needs Im z > 0, got {z}")));
    }
    // Convolution with a point mass is a translation.
    if let Some(c) = mu2.point_mass_location() {
        let omega1 = z - c;
        let g = mu1.cauchy(omega1)?;
        return finish(mu1, mu2, z, omega1, c + 1.0 / g, 0);
    }
    if let Some(c) = mu1.point_mass_location() {
        let omega2 = z - c;
        let g = mu2.cauchy(omega2)?;
        return finish(mu1, mu2, z, c + 1.0 / g, omega2, 0);
    }

    let step = |w: C64| z + h_part(mu1, z + h_part(mu2, w));
    let mut w = z;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < FIXED_POINT_MAX_STEPS {
        iterations += 1;
        let next = step(w);
        let delta = (next - w).norm();
        w = next;
        if delta < FIXED_POINT_STEP_TOL * w.norm().max(1.0) {
            converged = true;
            break;
        }
    }

    // Slow contraction close to the real axis: polish with Newton on
    // Φ(w) = step(w) - w, staying in the half-plane {Im w ≥ Im z}.
    let polish = !converged || {
        let o1 = z + h_part(mu2, w);
        (mu1.cauchy_unchecked(o1) - mu2.cauchy_unchecked(w)).norm() >= 0.1 * RESIDUAL_TOL
    };
    if polish {
        for _ in 0..NEWTON_MAX_STEPS {
            iterations += 1;
            let o1 = z + h_part(mu2, w);
            let phi = z + h_part(mu1, o1) - w;
            let dphi = h_part_derivative(mu1, o1) * h_part_derivative(mu2, w) - 1.0;
            let delta = phi / dphi;
            if !delta.is_finite() {
                break;
            }
            let mut next = w - delta;
            if next.im < z.im {
                next.im = 0.5 * (w.im + z.im);
            }
            let moved = (next - w).norm();
            w = next;
            if moved < 4.0 * f64::EPSILON * w.norm().max(1.0) {
                break;
            }
        }
    }

    let omega2 = w;
    let omega1 = z + h_part(mu2, omega2);
    finish(mu1, mu2, z, omega1, omega2, iterations)
}

/// `G_{μ₁⊞μ₂}(z)` for `z ∈ ℂ⁺`.
pub fn free_convolution_cauchy(mu1: &DiscreteMeasure, mu2: &DiscreteMeasure, z: C64) -> Result<C64> {
    Ok(solve(mu1, mu2, z)?.g_value)
}

/// Local inverse of the subordination function:
/// `h₁(z) = z + R₂(G₁(z))` or `h₂(z) = z + R₁(G₂(z))`.
pub fn h_map(side: Side, mu1: &DiscreteMeasure, mu2: &DiscreteMeasure, z: C64) -> Result<C64> {
    let (own, other) = side.split(mu1, mu2);
    let g = own.cauchy(z)?;
    let radius = other.r_transform_radius();
    if other.point_mass_location().is_none() && !(g.norm() < radius) {
        return Err(Error::Domain(format!(
            "|G(z)| = {} is outside the R-transform disk of radius {radius}",
            g.norm()
        )));
    }
    Ok(z + other.r_transform(g)?)
}

/// Certified symmetric gap `[-ε, ε]` around 0 in `supp(μ₁ ⊞ μ₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportGapCertificate {
    pub side: Side,
    /// Radius of the region where `h` is shown to be increasing is `gamma/2`.
    pub gamma: f64,
    /// Cubic remainder constant in `|h(z) - (1 - m₂m₋₂)z| ≤ K|z|³`.
    #[serde(rename = "K")]
    pub k: f64,
    /// Certified half-gap, `h(gamma/4)`.
    pub epsilon: f64,
    /// Half-width of the gap of the "own" measure around 0.
    pub eta: f64,
    pub eta0: f64,
    pub delta: f64,
    /// `m₂(other) · m₋₂(own)`, strictly below 1.
    pub moment_product: f64,
}

/// Radius on which `|R(w) - κ₂w| ≤ (|κ₄| + 1)|w|³` holds for a symmetric measure.
///
/// Free cumulants are bounded by Cauchy estimates on the circle
/// `|w| = ρ = 1/(12s)`, half the guaranteed analyticity radius of `R`:
/// `|κ_n| ≤ M ρ^{1-n}` with `M = max_{|w|=ρ} |R(w)|`. The even tail
/// `|w|² Σ_{n≥3} |κ_{2n}| |w|^{2n-6}` is then at most
/// `M ρ⁻⁵ |w|² / (1 - |w|²/ρ²)`, which is `≤ 1` once
/// `|w|² ≤ 1 / (M ρ⁻⁵ + ρ⁻²)`.
pub fn remainder_radius(mu: &DiscreteMeasure) -> Result<f64> {
    const CIRCLE_SAMPLES: usize = 512;
    const SAFETY: f64 = 1.25;
    let s = mu.support_radius();
    if s == 0.0 {
        return Ok(f64::INFINITY);
    }
    let rho = 1.0 / (12.0 * s);
    let mut max_r: f64 = 0.0;
    for k in 0..CIRCLE_SAMPLES {
        let theta = std::f64::consts::TAU * k as f64 / CIRCLE_SAMPLES as f64;
        max_r = max_r.max(mu.r_transform(C64::from_polar(rho, theta))?.norm());
    }
    let m = SAFETY * max_r;
    let tail = (1.0 / (m * rho.powi(-5) + rho.powi(-2))).sqrt();
    Ok(rho.min(tail))
}

/// Build the support-gap certificate for `μ₁ ⊞ μ₂` from `h₁` (or `h₂`).
pub fn support_gap(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    side: Side,
) -> Result<SupportGapCertificate> {
    if !mu1.is_symmetric() || !mu2.is_symmetric() {
        return Err(Error::invalid("support-gap certificate needs symmetric measures"));
    }
    let (own, other) = side.split(mu1, mu2);
    if own.charges_zero() {
        return Err(Error::NoGap {
            product: f64::INFINITY,
        });
    }
    let m2_other = other.moment(2.0)?;
    let product = m2_other * own.moment(-2.0)?;
    if !(product < 1.0) {
        return Err(Error::NoGap { product });
    }

    let eta = own.min_abs_atom();
    let (s_own, s_other) = (own.support_radius(), other.support_radius());
    let eta0 = eta
        .min(2f64.powf(-0.25))
        .min(1.0 / (12.0 * (s_own + s_other)));
    let k = 2.0 * m2_other * eta.powi(-4) + 8.0 * (other.kappa4().abs() + 1.0) * eta.powi(-6);
    let delta = remainder_radius(other)?;
    let gamma = eta0
        .powi(3)
        .min(delta * eta * eta / 2.0)
        .min((1.0 - product) / (4.0 * k));

    let h = |x: f64| -> Result<f64> { Ok(h_map(side, mu1, mu2, C64::new(x, 0.0))?.re) };
    let mut prev = f64::NEG_INFINITY;
    for i in 0..MONOTONE_GRID {
        let x = -gamma / 2.0 + gamma * (i as f64 + 0.5) / MONOTONE_GRID as f64;
        let hx = h(x)?;
        if !(hx.is_finite() && hx > prev) {
            return Err(Error::InternalConsistency(format!(
                "h not strictly increasing at x = {x:e} (h = {hx:e}, previous {prev:e})"
            )));
        }
        prev = hx;
    }
    let epsilon = h(gamma / 4.0)?;
    if !(epsilon > 0.0) {
        return Err(Error::InternalConsistency(format!(
            "h(gamma/4) = {epsilon:e} is not positive"
        )));
    }
    Ok(SupportGapCertificate {
        side,
        gamma,
        k,
        epsilon,
        eta,
        eta0,
        delta,
        moment_product: product,
    })
}

/// `-Im G_{μ₁⊞μ₂}(x + iη)/π` on `points` equispaced nodes of `interval`.
pub fn density_on_grid(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    interval: (f64, f64),
    points: usize,
    eta: f64,
) -> Result<Vec<(f64, f64)>> {
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    if points == 0 {
        return Ok(Vec::new());
    }
    let (a, b) = interval;
    (0..points)
        .map(|k| {
            let x = if points == 1 {
                a
            } else {
                a + (b - a) * k as f64 / (points - 1) as f64
            };
            let g = free_convolution_cauchy(mu1, mu2, C64::new(x, eta))?;
            Ok((x, -g.im / std::f64::consts::PI))
        })
        .collect()
}

/// Halve `eta` until two successive density grids differ by less than `tol`
/// in sup norm. Returns the final `eta` and grid.
pub fn density_refined(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    interval: (f64, f64),
    points: usize,
    eta: f64,
    tol: f64,
    max_halvings: usize,
) -> Result<(f64, Vec<(f64, f64)>)> {
    let mut eta = eta;
    let mut grid = density_on_grid(mu1, mu2, interval, points, eta)?;
    for _ in 0..max_halvings {
        let next_eta = eta / 2.0;
        let next = density_on_grid(mu1, mu2, interval, points, next_eta)?;
        let diff = grid
            .iter()
            .zip(&next)
            .map(|(a, b)| (a.1 - b.1).abs())
            .fold(0.0, f64::max);
        eta = next_eta;
        grid = next;
        if diff < tol {
            return Ok((eta, grid));
        }
    }
    Err(Error::NonConvergence {
        what: "density refinement",
        iterations: max_halvings,
        residual: f64::NAN,
    })
}

/// `φ(z) = z + ∫ dσ(ξ)/(F₁(z) - ξ)`: inverse of `ω₁` when `μ₂` is
/// ⊞-infinitely divisible with Lévy measure `σ`.
pub fn infdiv_phi_at(mu1: &DiscreteMeasure, sigma: &FiniteMeasure, z: C64) -> Result<C64> {
    let f1 = mu1.f_transform(z)?;
    let mut acc = z;
    for &(xi, w) in sigma.atoms() {
        let d = f1 - xi;
        if d == C64::new(0.0, 0.0) {
            return Err(Error::Pole(format!("F₁(z) = {xi} at z = {z}")));
        }
        acc += w / d;
    }
    Ok(acc)
}

/// Real-axis `φ(x)` for `x` in a gap of `supp(μ₁)` with `|F₁(x)|` beyond the support of `σ`.
pub fn infdiv_phi(mu1: &DiscreteMeasure, sigma: &FiniteMeasure, x: f64) -> Result<f64> {
    let z = C64::new(x, 0.0);
    let f1 = mu1.f_transform(z)?;
    let r = sigma.support_radius();
    if sigma.total_mass() > 0.0 && !(f1.re.abs() > r) {
        return Err(Error::Domain(format!(
            "|F₁({x})| = {} does not exceed the support radius {r} of sigma",
            f1.re.abs()
        )));
    }
    Ok(infdiv_phi_at(mu1, sigma, z)?.re)
}

/// Subordination for `μ₁ ⊞ μ₂` with `μ₂` ⊞-infinitely divisible with Lévy
/// measure `σ`: `ω₁ = z - ∫ dσ(ξ)/(F₁(ω₁) - ξ)`. Returns `(ω₁, G_μ(z))`.
pub fn infdiv_solve(mu1: &DiscreteMeasure, sigma: &FiniteMeasure, z: C64) -> Result<(C64, C64)> {
    if !(z.im > 0.0) {
        return Err(Error::invalid(format!("need Im z > 0, got {z}")));
    }
    let correction = |w: C64| -> C64 {
        let f1 = 1.0 / mu1.cauchy_unchecked(w);
        sigma.atoms().iter().map(|&(xi, s)| s / (f1 - xi)).sum()
    };
    let mut w = z;
    let mut steps = 0;
    let mut converged = false;
    while steps < FIXED_POINT_MAX_STEPS {
        steps += 1;
        let next = z - correction(w);
        let delta = (next - w).norm();
        w = next;
        if delta < FIXED_POINT_STEP_TOL * w.norm().max(1.0) {
            converged = true;
            break;
        }
    }
    if !converged {
        // Newton on Ψ(w) = w + correction(w) - z with a numerical derivative.
        for _ in 0..NEWTON_MAX_STEPS {
            steps += 1;
            let psi = w + correction(w) - z;
            let h = 1e-7 * w.norm().max(1e-3);
            let dpsi = 1.0 + (correction(w + h) - correction(w - h)) / (2.0 * h);
            let mut next = w - psi / dpsi;
            if next.im < z.im {
                next.im = 0.5 * (w.im + z.im);
            }
            let moved = (next - w).norm();
            w = next;
            if moved < 4.0 * f64::EPSILON * w.norm().max(1.0) {
                break;
            }
        }
    }
    let residual = (w + correction(w) - z).norm();
    if !(residual < RESIDUAL_TOL) {
        return Err(Error::NonConvergence {
            what: "infinitely divisible subordination",
            iterations: steps,
            residual,
        });
    }
    Ok((w, mu1.cauchy(w)?))
}

/// `∫∫ dλ_ξ(t)/((x-t)² + y²) dσ(ξ)` for `y > 0`, where `F_{λ_ξ} = F₁ - ξ`,
/// i.e. `G_{λ_ξ} = G₁/(1 - ξG₁)`.
fn nu_integrand(mu1: &DiscreteMeasure, sigma: &FiniteMeasure, x: f64, y: f64) -> f64 {
    let z = C64::new(x, y);
    let g1 = mu1.cauchy_unchecked(z);
    let f1 = 1.0 / g1;
    sigma
        .atoms()
        .iter()
        .map(|&(xi, s)| {
            let g_lambda = 1.0 / (f1 - xi);
            s * (-g_lambda.im) / y
        })
        .sum()
}

/// Boundary function `ν(x) = inf{y > 0 : ∫∫ dλ_ξ(t)/((x-t)²+y²) dσ(ξ) < 1}`
/// of the range of `ω₁`, found by bisection (tolerance 1e-10 in `y`).
pub fn infdiv_boundary_nu(mu1: &DiscreteMeasure, sigma: &FiniteMeasure, x: f64) -> Result<f64> {
    if sigma.total_mass() == 0.0 {
        return Ok(0.0);
    }
    if !sigma.is_symmetric() {
        return Err(Error::invalid("sigma must be symmetric"));
    }
    let integral = |y: f64| nu_integrand(mu1, sigma, x, y);
    let at_floor = integral(NU_Y_FLOOR);
    if !at_floor.is_finite() {
        return Err(Error::NonConvergence {
            what: "boundary integral",
            iterations: 0,
            residual: at_floor,
        });
    }
    if at_floor < 1.0 {
        return Ok(0.0);
    }
    let mut hi = 1.0;
    let mut doublings = 0;
    while integral(hi) >= 1.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 80 {
            return Err(Error::NonConvergence {
                what: "boundary bracket",
                iterations: doublings,
                residual: integral(hi),
            });
        }
    }
    let mut lo = NU_Y_FLOOR;
    while hi - lo > NU_BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if integral(mid) < 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
