//! Closed-form limits and numerical checks for the asymptotic formulas.
//!
//! Formulas are normalized to `r = 1` except where a radius is an explicit
//! argument.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::Body;
use crate::error::{Error, Result};
use crate::geom::{abs_det, determinant, kappa, radius_r_centers, simplex_volume, unit_ball_constants, Point};
use crate::quad;
use crate::stats::{Estimate, Estimator};

/// Principal radii of curvature of a boundary patch, taken constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    d: usize,
    principal_radii: Vec<f64>,
}

impl CurvatureProfile {
    pub fn new(d: usize, principal_radii: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("curvature profile needs d >= 2, got {d}")));
        }
        if principal_radii.len() != d - 1 {
            return Err(Error::domain(format!(
                "d = {d} needs {} principal radii, got {}",
                d - 1,
                principal_radii.len()
            )));
        }
        if principal_radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::domain("principal radii must be positive and finite"));
        }
        Ok(CurvatureProfile { d, principal_radii })
    }

    /// The profile of a ball of radius `rho`.
    pub fn ball(d: usize, rho: f64) -> Result<Self> {
        Self::new(d, vec![rho; d.saturating_sub(1)])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn principal_radii(&self) -> &[f64] {
        &self.principal_radii
    }

    /// Normal curvature `Q(w) = Σ w_i² / r_i` in the unit tangent direction `w`.
    pub fn sectional_curvature(&self, w: &[f64]) -> f64 {
        w.iter().zip(&self.principal_radii).map(|(wi, ri)| wi * wi / ri).sum()
    }

    /// `s_j = e_j(r_1, …, r_{d-1}) / C(d-1, j)`.
    pub fn normalized_symmetric(&self, j: usize) -> f64 {
        let m = self.principal_radii.len();
        if j > m {
            return 0.0;
        }
        // e[k] accumulates the k-th elementary symmetric polynomial.
        let mut e = vec![0.0; m + 1];
        e[0] = 1.0;
        for (i, &r) in self.principal_radii.iter().enumerate() {
            for k in (1..=i + 1).rev() {
                e[k] += r * e[k - 1];
            }
        }
        e[j] / binomial(m, j)
    }

    fn require_strictly_curved(&self) -> Result<()> {
        if let Some(r) = self.principal_radii.iter().find(|r| **r >= 1.0) {
            return Err(Error::Hypothesis(format!(
                "principal radius {r} is not below the cutting radius 1"
            )));
        }
        Ok(())
    }
}

/// A cap of the unit ball: vertex normal `u` and height `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapGeometry {
    pub d: usize,
    pub t: f64,
    pub vertex_normal: Vec<f64>,
}

impl CapGeometry {
    pub fn new(t: f64, vertex_normal: Vec<f64>) -> Result<Self> {
        let d = vertex_normal.len();
        if d < 2 {
            return Err(Error::domain("cap needs d >= 2"));
        }
        if !(0.0..=2.0).contains(&t) {
            return Err(Error::domain(format!("cap height {t} outside [0, 2]")));
        }
        let norm = vertex_normal.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::domain("vertex normal must be a unit vector"));
        }
        Ok(CapGeometry { d, t, vertex_normal })
    }

    pub fn volume(&self) -> Result<f64> {
        unit_ball_cap_volume(self.t, self.d, 1.0)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn check_dim(d: usize, lo: usize, hi: usize, what: &str) -> Result<()> {
    if (lo..=hi).contains(&d) {
        Ok(())
    } else {
        Err(Error::domain(format!("{what}: d = {d} outside {lo}..={hi}")))
    }
}

/// Limit of the expected facet count of the ball-polytope of the unit ball:
/// `η π^{d-1} κ_d / κ_{d-1}`.
pub fn facet_count_limit(d: usize, eta: f64) -> Result<f64> {
    check_dim(d, 2, 10, "facet limit")?;
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(Error::domain(format!("eta = {eta} outside (0, 1]")));
    }
    Ok(eta * PI.powi(d as i32 - 1) * kappa(d) / kappa(d - 1))
}

/// `V(B(0, radius) \ int B(c, cutter_radius))` with `|c| = dist`, by
/// integrating `(d-1)`-ball slices perpendicular to the line of centers.
pub fn ball_difference_volume(d: usize, radius: f64, cutter_radius: f64, dist: f64) -> Result<f64> {
    check_dim(d, 2, 10, "ball difference volume")?;
    for (name, v) in [("radius", radius), ("cutter radius", cutter_radius)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::domain(format!("{name} must be positive, got {v}")));
        }
    }
    if !(dist.is_finite() && dist >= 0.0) {
        return Err(Error::domain(format!(
            "center distance must be nonnegative, got {dist}"
        )));
    }
    let full = kappa(d) * radius.powi(d as i32);
    if dist >= radius + cutter_radius {
        return Ok(full);
    }
    if dist + radius <= cutter_radius {
        return Ok(0.0);
    }
    if dist == 0.0 {
        return Ok(full - kappa(d) * radius.min(cutter_radius).powi(d as i32));
    }
    let m = d as i32 - 1;
    let (r2, c2) = (radius * radius, cutter_radius * cutter_radius);
    let slice = |x: f64| -> f64 {
        let a2 = (r2 - x * x).max(0.0);
        let b2 = c2 - (x - dist) * (x - dist);
        if b2 <= 0.0 {
            return a2.sqrt().powi(m);
        }
        let diff = (r2 - c2) + dist * (dist - 2.0 * x);
        if diff <= 0.0 {
            return 0.0;
        }
        let (a, b) = (a2.sqrt(), b2.sqrt());
        // a^m - b^m = (a - b) Σ a^{m-1-k} b^k without cancellation.
        let gap = diff / (a + b);
        let sum: f64 = (0..m).map(|k| a.powi(m - 1 - k) * b.powi(k)).sum();
        gap * sum
    };
    let mut breaks = vec![-radius, radius];
    for x in [
        (r2 - c2 + dist * dist) / (2.0 * dist),
        dist - cutter_radius,
        dist + cutter_radius,
    ] {
        if x > -radius && x < radius {
            breaks.push(x);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let abs_tol = 1e-16 * full / breaks.len() as f64;
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (v, _) = quad::integrate_smooth_ends(slice, w[0], w[1], abs_tol, 1e-13)?;
        total += v;
    }
    Ok(kappa(d - 1) * total)
}

/// Volume of `B^d \ int B(c, cutter_radius)` where the cutting sphere passes
/// at depth `t` below the boundary point `u`, with `c` on the ray through `u`.
/// With the default cutter radius 1 the cutter center is `-t u`.
pub fn unit_ball_cap_volume(t: f64, d: usize, cutter_radius: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&t) {
        return Err(Error::domain(format!("cap height {t} outside [0, 2]")));
    }
    ball_difference_volume(d, 1.0, cutter_radius, (1.0 - t - cutter_radius).abs())
}

/// Cap of the ball `rho B^d` cut by a unit ball whose sphere passes at depth
/// `t` below the vertex.
pub fn ball_cap_volume(d: usize, rho: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t <= 2.0 * rho) {
        return Err(Error::domain(format!("cap height {t} outside [0, {}]", 2.0 * rho)));
    }
    ball_difference_volume(d, rho, 1.0, 1.0 + t - rho)
}

/// Polynomial extrapolation of `(xs, ys)` to `x = 0` (Neville).
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p = ys.to_vec();
    for k in 1..xs.len() {
        for i in 0..xs.len() - k {
            p[i] = (xs[i] * p[i + 1] - xs[i + k] * p[i]) / (xs[i] - xs[i + k]);
        }
    }
    p[0]
}

/// `lim_{t→0} V(u,t)/t` for the unit ball, extrapolated from
/// `t ∈ {1e-2, 1e-3, 1e-4}`. The exact limit is `κ_{d-1}`.
pub fn cap_volume_slope_check(d: usize) -> Result<f64> {
    check_dim(d, 2, 5, "cap slope")?;
    let ts = [1e-2, 1e-3, 1e-4];
    let mut ys = [0.0; 3];
    for (y, &t) in ys.iter_mut().zip(&ts) {
        *y = unit_ball_cap_volume(t, d, 1.0)? / t;
    }
    Ok(extrapolate_to_zero(&ts, &ys))
}

/// `∫_{S^{d-2}} (Q(w) - 1)^{-(d-1)/2} dw` against the unnormalized surface
/// measure (two atoms on `S^0`).
pub fn cap_sphere_integral(profile: &CurvatureProfile) -> Result<f64> {
    profile.require_strictly_curved()?;
    let d = profile.d();
    check_dim(d, 2, 4, "cap constant")?;
    let excess: Vec<f64> = profile.principal_radii().iter().map(|r| 1.0 / r - 1.0).collect();
    let power = -((d - 1) as f64) / 2.0;
    match d {
        2 => Ok(2.0 * excess[0].powf(power)),
        3 => Ok(periodic_trapezoid(4096, |phi| {
            let (s, c) = phi.sin_cos();
            1.0 / (excess[0] * c * c + excess[1] * s * s)
        })),
        _ => {
            let inner = |theta: f64| {
                let (st, ct) = theta.sin_cos();
                let ring = periodic_trapezoid(512, |phi| {
                    let (s, c) = phi.sin_cos();
                    let q = st * st * (excess[0] * c * c + excess[1] * s * s) + ct * ct * excess[2];
                    q.powf(power)
                });
                ring * st
            };
            Ok(quad::integrate(inner, 0.0, PI, 0.0, 1e-12)?.0)
        }
    }
}

/// `∫_0^{2π} f` by the trapezoid rule on `n` equispaced nodes.
fn periodic_trapezoid<F: Fn(f64) -> f64>(n: usize, f: F) -> f64 {
    let h = 2.0 * PI / n as f64;
    (0..n).map(|k| f(k as f64 * h)).sum::<f64>() * h
}

/// `lim_{t→0} V(u,t) t^{-(d+1)/2}` for a boundary point with the given
/// principal radii, all strictly below the cutting radius 1.
///
/// The sphere integral is taken against the normalized measure on `S^{d-2}`;
/// this is the value the exact cap volumes converge to.
pub fn cap_asymptotic_constant(profile: &CurvatureProfile) -> Result<f64> {
    let d = profile.d();
    let integral = cap_sphere_integral(profile)?;
    let omega = if d == 2 { 2.0 } else { unit_ball_constants(d - 1)?.omega };
    Ok(2f64.powf((d + 1) as f64 / 2.0) * kappa(d - 1) / (d + 1) as f64 * integral / omega)
}

/// Leading-order radial extent `√(2t / (k_w - 1))` of a cap of height `t`
/// in a tangent direction of normal curvature `k_w`. First order only.
pub fn tau_star(k_w: f64, t: f64) -> Result<f64> {
    if !(k_w > 1.0) {
        return Err(Error::Hypothesis(format!("normal curvature {k_w} must exceed 1")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("cap height must be positive, got {t}")));
    }
    Ok((2.0 * t / (k_w - 1.0)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaIntegral {
    pub asymptotic: f64,
    pub quadrature: f64,
}

impl BetaIntegral {
    pub fn ratio(&self) -> f64 {
        self.quadrature / self.asymptotic
    }
}

fn beta_quadrature(alpha: f64, beta: f64, omega: f64, n: u64, g: f64) -> Result<f64> {
    for (name, v, ok) in [
        ("alpha", alpha, alpha > 0.0),
        ("beta", beta, beta >= 0.0),
        ("omega", omega, omega > 0.0),
        ("g", g, g > 0.0),
    ] {
        if !(ok && v.is_finite()) {
            return Err(Error::domain(format!("beta integral: bad {name} = {v}")));
        }
    }
    if n == 0 {
        return Err(Error::domain("beta integral needs n >= 1"));
    }
    if omega * g.powf(alpha) >= 1.0 {
        return Err(Error::domain(format!(
            "beta integral: g = {g} must be below omega^(-1/alpha) = {}",
            omega.powf(-1.0 / alpha)
        )));
    }
    let nf = n as f64;
    let f = |t: f64| {
        if t <= 0.0 {
            return if beta == 0.0 { 1.0 } else { 0.0 };
        }
        (beta * t.ln() + nf * (-omega * t.powf(alpha)).ln_1p()).exp()
    };
    // The mass sits at t ~ (nω)^{-1/α}; split geometrically around it.
    let scale = (nf * omega).powf(-1.0 / alpha);
    let mut breaks = vec![0.0];
    let mut x = scale / 64.0;
    while x < g {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.push(g);
    Ok(quad::integrate_breaks(f, &breaks, 0.0, 1e-12)?.0)
}

/// `∫_0^g t^β (1 - ω t^α)^n dt` by quadrature, next to its large-`n`
/// asymptotic `(1/α) ω^{-(β+1)/α} Γ((β+1)/α) n^{-(β+1)/α}`.
pub fn beta_integral(alpha: f64, beta: f64, omega: f64, n: u64, g: f64) -> Result<BetaIntegral> {
    let quadrature = beta_quadrature(alpha, beta, omega, n, g)?;
    let e = (beta + 1.0) / alpha;
    let asymptotic = statrs::function::gamma::gamma(e) / alpha * omega.powf(-e) * (n as f64).powf(-e);
    Ok(BetaIntegral { asymptotic, quadrature })
}

/// As [`beta_integral`] but with the factor `ω^{-(d+1)/α}`, the exponent
/// that only matches when `β = d`. Kept as a regression reference.
pub fn beta_integral_printed(alpha: f64, beta: f64, omega: f64, n: u64, g: f64, d: usize) -> Result<BetaIntegral> {
    let quadrature = beta_quadrature(alpha, beta, omega, n, g)?;
    let e = (beta + 1.0) / alpha;
    let asymptotic =
        statrs::function::gamma::gamma(e) / alpha * omega.powf(-((d + 1) as f64) / alpha) * (n as f64).powf(-e);
    Ok(BetaIntegral { asymptotic, quadrature })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HalfSphereMode {
    Constant,
    MonteCarlo,
}

/// `∫_{(S^{d-1}_+)^d} ∇_d(u_1, …, u_d) du_1 … du_d` over the closed upper
/// half-sphere. `Constant` gives `(ω_{d+1}/2)^{d-1}`; `MonteCarlo` averages
/// `|det(u_1, …, u_d)|` over `m` draws.
pub fn half_sphere_integral<R: Rng + ?Sized>(
    d: usize,
    mode: HalfSphereMode,
    rng: &mut R,
    m: usize,
) -> Result<Estimate> {
    check_dim(d, 2, 5, "half-sphere integral")?;
    match mode {
        HalfSphereMode::Constant => {
            let omega = unit_ball_constants(d + 1)?.omega;
            Ok(Estimate::exact((omega / 2.0).powi(d as i32 - 1)))
        }
        HalfSphereMode::MonteCarlo => match d {
            2 => half_sphere_mc::<2, R>(rng, m),
            3 => half_sphere_mc::<3, R>(rng, m),
            4 => half_sphere_mc::<4, R>(rng, m),
            _ => half_sphere_mc::<5, R>(rng, m),
        },
    }
}

fn half_sphere_mc<const D: usize, R: Rng + ?Sized>(rng: &mut R, m: usize) -> Result<Estimate> {
    let stats = mc_mean(rng, m, |rng| {
        let mut us = [Point::<D>::origin(); D];
        for u in us.iter_mut() {
            *u = random_direction(rng);
            u[D - 1] = u[D - 1].abs();
        }
        abs_det(&us)
    })?;
    let half = unit_ball_constants(D)?.omega / 2.0;
    Ok(stats.scaled(half.powi(D as i32)))
}

/// `|dΦ(u,t)|` for `Φ(u,t) = σ^{-1}(u) - (1+t)u`, evaluated as the factored
/// form `Π |t + (1 - r_i)|` of [`phi_jacobian_sum`]. Exact for `r_i = 1`.
pub fn phi_jacobian(profile: &CurvatureProfile, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    Ok(profile
        .principal_radii()
        .iter()
        .map(|r| (t + (1.0 - r)).abs())
        .product())
}

/// The alternating sum `|Σ (-1)^i C(d-1,i) s_{d-1-i} (1+t)^i|` with `s_j` the
/// normalized elementary symmetric functions of the radii. Loses relative
/// accuracy as `t + 1 - r_i → 0`.
pub fn phi_jacobian_sum(profile: &CurvatureProfile, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    let m = profile.d() - 1;
    let x = 1.0 + t;
    let sum: f64 = (0..=m)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(m, i) * profile.normalized_symmetric(m - i) * x.powi(i as i32)
        })
        .sum();
    Ok(sum.abs())
}

/// Central-difference Jacobian of `Φ` at the pole of the ellipsoid with
/// semi-axes `(√r_1, …, √r_{d-1}, 1)`, whose principal radii there are the
/// profile's radii.
pub fn phi_jacobian_fd(profile: &CurvatureProfile, t: f64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::domain(format!("t must be nonnegative, got {t}")));
    }
    match profile.d() {
        2 => Ok(phi_fd::<2>(profile.principal_radii(), t)),
        3 => Ok(phi_fd::<3>(profile.principal_radii(), t)),
        4 => Ok(phi_fd::<4>(profile.principal_radii(), t)),
        5 => Ok(phi_fd::<5>(profile.principal_radii(), t)),
        d => Err(Error::domain(format!(
            "finite-difference Jacobian: d = {d} outside 2..=5"
        ))),
    }
}

fn phi_fd<const D: usize>(radii: &[f64], t: f64) -> f64 {
    const H: f64 = 1e-5;
    let mut axes2 = [1.0; D];
    axes2[..D - 1].copy_from_slice(radii);
    let direction = |theta: &[f64; D]| {
        let mut u = Point::<D>::unit(D - 1);
        for i in 0..D - 1 {
            u[i] = theta[i];
        }
        u.normalized().expect("nonzero chart vector")
    };
    let phi = |theta: &[f64; D], t: f64| {
        let u = direction(theta);
        let mut x = Point::<D>::origin();
        let mut q = 0.0;
        for i in 0..D {
            x[i] = axes2[i] * u[i];
            q += axes2[i] * u[i] * u[i];
        }
        x * (1.0 / q.sqrt()) - u * (1.0 + t)
    };
    let mut jac = [[0.0; D]; D];
    for (i, col) in jac.iter_mut().enumerate().take(D - 1) {
        let (mut plus, mut minus) = ([0.0; D], [0.0; D]);
        plus[i] = H;
        minus[i] = -H;
        let diff = (phi(&plus, t) - phi(&minus, t)) * (0.5 / H);
        *col = diff.0;
    }
    let zero = [0.0; D];
    // Φ is affine in t, so the backward node may sit below t = 0.
    let dt = (phi(&zero, t + H) - phi(&zero, t - H)) * (0.5 / H);
    jac[D - 1] = dt.0;
    determinant(jac).abs()
}

/// Monte Carlo estimate of `∫_{(rB^d)^{d+1}} Δ_d(x_0, …, x_d)`, the integrated
/// simplex volume. Scales as `r^{d(d+2)}`.
pub fn busemann_i<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R, m: usize) -> Result<Estimate> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    match d {
        1 => busemann_mc::<1, R>(r, rng, m),
        2 => busemann_mc::<2, R>(r, rng, m),
        3 => busemann_mc::<3, R>(r, rng, m),
        4 => busemann_mc::<4, R>(r, rng, m),
        _ => Err(Error::domain(format!("simplex integral: d = {d} outside 1..=4"))),
    }
}

fn busemann_mc<const D: usize, R: Rng + ?Sized>(r: f64, rng: &mut R, m: usize) -> Result<Estimate> {
    let body = Body::<D>::ball(Point::origin(), r)?;
    let stats = mc_mean(rng, m, |rng| {
        let pts: Vec<Point<D>> = body.sample_uniform(rng, D + 1);
        simplex_volume(&pts).expect("D + 1 vertices")
    })?;
    Ok(stats.scaled(body.volume().powi(D as i32 + 1)))
}

/// Integrands available to [`bp_identity_check`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BpTestFunction {
    /// `f ≡ 1`.
    ConstantOne,
    /// All points in `B(0, 1/2)`.
    BallIndicator,
    /// `Π x_{i,1}²`, clipped to `[-1, 1]^d`.
    CoordinateSquares,
}

impl BpTestFunction {
    pub const ALL: [BpTestFunction; 3] = [
        BpTestFunction::ConstantOne,
        BpTestFunction::BallIndicator,
        BpTestFunction::CoordinateSquares,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BpTestFunction::ConstantOne => "constant-one",
            BpTestFunction::BallIndicator => "ball-indicator",
            BpTestFunction::CoordinateSquares => "coordinate-squares",
        }
    }

    fn eval<const D: usize>(self, xs: &[Point<D>]) -> f64 {
        match self {
            BpTestFunction::ConstantOne => 1.0,
            BpTestFunction::BallIndicator => {
                if xs.iter().all(|x| x.norm_sq() <= 0.25) {
                    1.0
                } else {
                    0.0
                }
            }
            BpTestFunction::CoordinateSquares => {
                if xs.iter().all(|x| x.0.iter().all(|c| c.abs() <= 1.0)) {
                    xs.iter().map(|x| x[0] * x[0]).product()
                } else {
                    0.0
                }
            }
        }
    }
}

/// Both sides of the change of variables `x_i = z + r u_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BpCheck {
    pub lhs: Estimate,
    pub rhs: Estimate,
}

impl BpCheck {
    /// Whether the sides agree within three combined standard errors.
    pub fn passes(&self) -> bool {
        self.lhs.agrees_with(&self.rhs, 3.0)
    }
}

/// Compares `∫_{T(D)} f dx` with `r^{d(d-1)} ∫∫ 1(D) f(z + r u) ∇_d(u) du dz`.
///
/// `D` holds the pairs `(z, u)` with `z ∈ [-1/2, 1/2]^d` where `z` is the
/// `p_plus` center of `x = z + r u`. That picks one of the two radius-`r`
/// spheres through the points, so `T` is injective on `D`.
pub fn bp_identity_check<R: Rng + ?Sized>(
    d: usize,
    r: f64,
    f: BpTestFunction,
    rng: &mut R,
    m: usize,
) -> Result<BpCheck> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::domain(format!("radius must be positive, got {r}")));
    }
    match d {
        2 => bp_check::<2, R>(r, f, rng, m),
        3 => bp_check::<3, R>(r, f, rng, m),
        4 => bp_check::<4, R>(r, f, rng, m),
        _ => Err(Error::domain(format!("identity check: d = {d} outside 2..=4"))),
    }
}

fn in_center_box<const D: usize>(z: &Point<D>) -> bool {
    z.0.iter().all(|c| c.abs() <= 0.5)
}

fn bp_check<const D: usize, R: Rng + ?Sized>(r: f64, f: BpTestFunction, rng: &mut R, m: usize) -> Result<BpCheck> {
    // Sampling region for the direct side: it must contain every x_i with
    // f(x) 1(p_plus ∈ box) > 0.
    let half_width = match f {
        BpTestFunction::ConstantOne => 0.5 + r,
        BpTestFunction::BallIndicator => 0.5,
        BpTestFunction::CoordinateSquares => 1.0,
    };
    let region_volume = match f {
        BpTestFunction::BallIndicator => kappa(D) * 0.5f64.powi(D as i32),
        _ => (2.0 * half_width).powi(D as i32),
    };
    let ball = Body::<D>::ball(Point::origin(), 0.5)?;
    let lhs = mc_mean(rng, m, |rng| {
        let mut xs = [Point::<D>::origin(); D];
        for x in xs.iter_mut() {
            *x = match f {
                BpTestFunction::BallIndicator => ball.sample_one(rng),
                _ => {
                    let mut p = Point::origin();
                    for i in 0..D {
                        p[i] = rng.gen_range(-half_width..=half_width);
                    }
                    p
                }
            };
        }
        match radius_r_centers(&xs, r) {
            Ok(Some((_, plus))) if in_center_box(&plus) => f.eval(&xs),
            _ => 0.0,
        }
    })?
    .scaled(region_volume.powi(D as i32));

    let rhs = mc_mean(rng, m, |rng| {
        let mut z = Point::<D>::origin();
        for i in 0..D {
            z[i] = rng.gen_range(-0.5..=0.5);
        }
        let mut us = [Point::<D>::origin(); D];
        let mut xs = [Point::<D>::origin(); D];
        for (u, x) in us.iter_mut().zip(xs.iter_mut()) {
            *u = random_direction(rng);
            *x = z + *u * r;
        }
        let value = f.eval(&xs);
        if value == 0.0 {
            return 0.0;
        }
        match radius_r_centers(&xs, r) {
            Ok(Some((minus, plus))) if plus.dist_sq(&z) < minus.dist_sq(&z) => value * abs_det(&us),
            _ => 0.0,
        }
    })?;
    let omega = unit_ball_constants(D)?.omega;
    let rhs = rhs.scaled(r.powi((D * (D - 1)) as i32) * omega.powi(D as i32));
    Ok(BpCheck { lhs, rhs })
}

/// Uniform direction on `S^{D-1}` from normalized Gaussians.
pub(crate) fn random_direction<const D: usize, R: Rng + ?Sized>(rng: &mut R) -> Point<D> {
    loop {
        let mut p = Point::<D>::origin();
        for i in 0..D {
            p[i] = rng.sample(StandardNormal);
        }
        if let Some(u) = p.normalized() {
            return u;
        }
    }
}

const MC_CHUNKS: usize = 64;

/// Mean of `m` draws of `sample`, split into fixed chunks with seeds taken
/// from `rng`, so the result does not depend on the thread count.
fn mc_mean<R, F>(rng: &mut R, m: usize, sample: F) -> Result<Estimator>
where
    R: Rng + ?Sized,
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    if m == 0 {
        return Err(Error::domain("Monte Carlo needs m >= 1"));
    }
    let chunks = MC_CHUNKS.min(m);
    let seeds: Vec<u64> = (0..chunks).map(|_| rng.gen()).collect();
    let parts: Vec<Estimator> = seeds
        .par_iter()
        .enumerate()
        .map(|(c, &seed)| {
            let len = m / chunks + usize::from(c < m % chunks);
            let mut local = ChaCha8Rng::seed_from_u64(seed);
            (0..len).map(|_| sample(&mut local)).collect()
        })
        .collect();
    let mut total = Estimator::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(total)
}
