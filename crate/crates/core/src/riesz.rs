//! Riesz-type boundary potentials and dual quermassintegrals.
//!
//! The central object is the weighted potential
//!
//! ```text
//! N_a(z) = ∫_Ω ω((y-z)/|y-z|) · φ(y) / |y-z|^{n-a} dy ,   a > 0,
//! ```
//!
//! evaluated at boundary points `z` of a convex body `Ω ⊂ ℝⁿ`. Two
//! independent evaluation routes are provided and cross-checked:
//!
//! * **volume form** — spherical coordinates centred at `z`: the domain
//!   integral becomes an angular integral of `ω(u) ρ_z(u)^a` times a line
//!   integral of `φ` against the weight `t^{a-1}` on the chord from `z`.
//! * **boundary form** — integration by parts moves everything to `∂Ω`:
//!   a surface quadrature of `ω·⟨y-z, ν_y⟩·|y-z|^{a-n}·φ_a(y,z)` where
//!   `φ_a` is the same line integral of `φ` along the segment `[z, y]`.
//!
//! The dual quermassintegral `Ṽ_q(Ω, z) = (1/n) ∫ ρ_z(u)^q du` shares the
//! angular machinery with the volume form, which makes the reduction
//! identity `N_a = (n/a)·Ṽ_a` (unit weights) exact to roundoff.
//!
//! **Angular quadrature.** For `z` strictly inside the body the integrand
//! is smooth on the whole sphere and the grid rule is spectrally accurate.
//! For `z` on the boundary the radial function vanishes on the dark
//! hemisphere and meets it with contact order one, so `ρ_z^p` has an
//! endpoint zero of order `p` at the terminator. The angular rule then
//! switches to a Gauss-Jacobi rule on the lit hemisphere with the contact
//! weight absorbed: `sin^p ψ` on the half-circle (dim 2), `cos^p ψ sin ψ`
//! from the inward normal (dim 3). The smooth remainder is analytic for
//! analytic bodies, so these rules converge geometrically where the plain
//! grid sum would be stuck at an algebraic rate set by the terminator
//! kink.
//!
//! Derivatives of `Ṽ_q(Ω, ·)` along the boundary and under support
//! perturbations are evaluated from their closed-form kernel
//! representations (first and second tangential derivatives, and the time
//! derivative along a flow of support functions), with the radial parts
//! integrated exactly.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::quad;
use crate::sphere::{self, Field, TrigSeries, Vec3};

/// Order of the line rule for `∫₀¹ φ(...) t^{a-1} dt`; exact for
/// polynomial integrands well past degree 8.
pub const RADIAL_INNER_ORDER: usize = 8;

/// Order of the lit-half-circle rule at boundary points (dim 2).
pub const BOUNDARY_RULE_2D: usize = 48;

/// Polar / azimuthal orders of the lit-hemisphere rule (dim 3).
pub const BOUNDARY_RULE_3D: (usize, usize) = (24, 48);

/// Order of the radial rule used when the integrand varies along the ray.
pub const RADIAL_OUTER_ORDER: usize = 16;

/// Relative width of the band around the boundary in which a point is
/// treated as a boundary point by the angular dispatch.
pub const BOUNDARY_BAND: f64 = 1e-7;

/// Exponent gap below which tangential gradients of `Ṽ_q` switch to the
/// finite-difference fallback (the kernel prefactor vanishes at `q = n`).
pub const GRADIENT_FD_BAND: f64 = 1e-6;

/// Scalar kernel on directions or points.
pub type KernelFn = Arc<dyn Fn(Vec3) -> f64 + Send + Sync>;

/// Specification of a weighted Riesz-type potential: exponent `a > 0`,
/// direction weight `ω` on the sphere, density `φ` on the body.
#[derive(Clone)]
pub struct PotentialSpec {
    pub a: f64,
    pub omega: KernelFn,
    pub phi: KernelFn,
}

impl PotentialSpec {
    /// Pure Riesz potential: `ω ≡ 1`, `φ ≡ 1`.
    pub fn riesz(a: f64) -> Result<PotentialSpec> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::Parameter(format!(
                "potential exponent must be positive (got {a})"
            )));
        }
        Ok(PotentialSpec {
            a,
            omega: Arc::new(|_| 1.0),
            phi: Arc::new(|_| 1.0),
        })
    }

    pub fn with_omega(mut self, omega: impl Fn(Vec3) -> f64 + Send + Sync + 'static) -> Self {
        self.omega = Arc::new(omega);
        self
    }

    pub fn with_phi(mut self, phi: impl Fn(Vec3) -> f64 + Send + Sync + 'static) -> Self {
        self.phi = Arc::new(phi);
        self
    }
}

impl std::fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PotentialSpec").field("a", &self.a).finish()
    }
}

// ---------------------------------------------------------------------
// Angular rules at boundary points
// ---------------------------------------------------------------------

/// A lit-hemisphere angular rule: direction offsets from the boundary
/// frame plus effective weights with the contact-order factor divided out.
/// For node `j` the angular integral contribution is
/// `w_j · g(u_j) · ρ(u_j)^p`.
struct LitRule {
    /// dim 2: `(ψ_j, w_j)` with `u = cos ψ · t̂ - sin ψ · ν`.
    /// dim 3: `(ψ_j, w_j)` polar factor; combined with uniform azimuths.
    psi: Vec<(f64, f64)>,
}

fn lit_rule_cache() -> &'static Mutex<HashMap<(usize, u64, usize), Arc<LitRule>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, u64, usize), Arc<LitRule>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Builds (or fetches) the lit rule for contact exponent `p` in dimension
/// `dim`. See the module docs for the weight decomposition.
fn lit_rule(dim: usize, m: usize, p: f64) -> Result<Arc<LitRule>> {
    let key = (m, p.to_bits(), dim);
    if let Some(rule) = lit_rule_cache().lock().unwrap().get(&key) {
        return Ok(rule.clone());
    }
    let psi = if dim == 2 {
        // ∫₀^π F(ψ) dψ with F carrying a sin^p ψ contact factor. Under
        // ψ = π(x+1)/2 the factor is (1-x²)^p times an analytic part, so
        // Jacobi(p, p) applies and the effective node weight against the
        // *full* integrand F (contact factor included) is
        // (π/2) · W_j / (1 - x_j²)^p.
        let base = quad::jacobi(m, p, p)?;
        base.iter()
            .map(|&(x, w)| {
                let psi = 0.5 * std::f64::consts::PI * (x + 1.0);
                (psi, 0.5 * std::f64::consts::PI * w / (1.0 - x * x).powf(p))
            })
            .collect()
    } else {
        // ∫₀^{π/2} F(ψ) sin ψ dψ with F carrying a cos^p ψ contact factor
        // at the terminator. Under ψ = (π/4)(x+1) that factor is (1-x)^p
        // times an analytic part and sin ψ supplies a (1+x) zero, so
        // Jacobi(p, 1) applies; the effective weight against F (contact
        // factor included, sin ψ area factor not) is
        // (π/4) · W_j · [sin ψ_j / (1+x_j)] / (1-x_j)^p.
        let base = quad::jacobi(m, p, 1.0)?;
        base.iter()
            .map(|&(x, w)| {
                let psi = 0.25 * std::f64::consts::PI * (x + 1.0);
                let sin_ratio = psi.sin() / (1.0 + x);
                (
                    psi,
                    0.25 * std::f64::consts::PI * w * sin_ratio / (1.0 - x).powf(p),
                )
            })
            .collect()
    };
    let rule = Arc::new(LitRule { psi });
    lit_rule_cache()
        .lock()
        .unwrap()
        .entry(key)
        .or_insert_with(|| rule.clone());
    Ok(rule)
}

/// Where an evaluation point sits relative to the body.
enum Placement {
    Interior,
    /// Boundary point with its outward unit normal.
    Boundary(Vec3),
}

fn classify(body: &ConvexBody, z: Vec3) -> Result<Placement> {
    let scale = body.max_h();
    let margin = body.interior_margin(z);
    if margin < -crate::body::EPS_INTERIOR {
        return Err(Error::Domain(format!(
            "evaluation point lies outside the body (margin = {margin:e})"
        )));
    }
    if margin > BOUNDARY_BAND * scale {
        Ok(Placement::Interior)
    } else {
        Ok(Placement::Boundary(body.outward_normal_at(z)?))
    }
}

/// Core angular quadrature: approximates
/// `∫_{ρ_z > 0} g(u, ρ_z(u)) · ρ_z(u)^p du`
/// with the grid rule for interior `z` and the lit-hemisphere Jacobi rule
/// for boundary `z`. `g` must extend smoothly to the closed lit set.
fn angular_power_integral(
    body: &ConvexBody,
    z: Vec3,
    p: f64,
    g: &dyn Fn(Vec3, f64) -> f64,
) -> Result<f64> {
    match classify(body, z)? {
        Placement::Interior => {
            let grid = body.grid();
            let mut terms = Vec::with_capacity(grid.len());
            for i in 0..grid.len() {
                let u = grid.node(i);
                let rho = body.ray_cast(z, u)?;
                terms.push(grid.weight(i) * g(u, rho) * rho.powf(p));
            }
            Ok(sphere::pairwise_sum(&terms))
        }
        Placement::Boundary(nu) => lit_power_integral(body, z, nu, p, g),
    }
}

/// The boundary branch of [`angular_power_integral`]: lit-hemisphere
/// Gauss-Jacobi quadrature at the boundary point `z` with outward normal
/// `nu`.
fn lit_power_integral(
    body: &ConvexBody,
    z: Vec3,
    nu: Vec3,
    p: f64,
    g: &dyn Fn(Vec3, f64) -> f64,
) -> Result<f64> {
    if body.dim() == 2 {
        let rule = lit_rule(2, BOUNDARY_RULE_2D, p)?;
        let tangent = [-nu[1], nu[0], 0.0];
        let mut terms = Vec::with_capacity(rule.psi.len());
        for &(psi, w) in &rule.psi {
            let (s, c) = psi.sin_cos();
            let u = [
                c * tangent[0] - s * nu[0],
                c * tangent[1] - s * nu[1],
                0.0,
            ];
            let rho = body.ray_cast(z, u)?;
            terms.push(w * g(u, rho) * rho.powf(p));
        }
        Ok(sphere::pairwise_sum(&terms))
    } else {
        let (m_psi, m_phi) = BOUNDARY_RULE_3D;
        let rule = lit_rule(3, m_psi, p)?;
        // Orthonormal tangent frame at the contact point.
        let seed = if nu[0].abs() < 0.9 {
            [1.0, 0.0, 0.0]
        } else {
            [0.0, 1.0, 0.0]
        };
        let t1 = sphere::normalize(sphere::sub(
            seed,
            sphere::scale(nu, sphere::dot(seed, nu)),
        ));
        let t2 = [
            nu[1] * t1[2] - nu[2] * t1[1],
            nu[2] * t1[0] - nu[0] * t1[2],
            nu[0] * t1[1] - nu[1] * t1[0],
        ];
        let dphi = 2.0 * std::f64::consts::PI / m_phi as f64;
        let mut terms = Vec::with_capacity(rule.psi.len() * m_phi);
        for &(psi, w_psi) in &rule.psi {
            let (sp, cp) = psi.sin_cos();
            for k in 0..m_phi {
                let phi = dphi * k as f64;
                let (sf, cf) = phi.sin_cos();
                let mut u = sphere::scale(nu, -cp);
                u = sphere::add(u, sphere::scale(t1, sp * cf));
                u = sphere::add(u, sphere::scale(t2, sp * sf));
                let rho = body.ray_cast(z, u)?;
                terms.push(w_psi * dphi * g(u, rho) * rho.powf(p));
            }
        }
        Ok(sphere::pairwise_sum(&terms))
    }
}

// ---------------------------------------------------------------------
// Dual quermassintegrals and potentials
// ---------------------------------------------------------------------

/// `Ṽ_q(Ω, z) = (1/n) ∫ ρ_z(u)^q du`, `q > 0`, `z` in the closure of `Ω`.
pub fn dual_quermassintegral(body: &ConvexBody, q: f64, z: Vec3) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Parameter(format!(
            "dual quermassintegral exponent must be positive (got q = {q})"
        )));
    }
    let n = body.dim() as f64;
    Ok(angular_power_integral(body, z, q, &|_, _| 1.0)? / n)
}

/// `Ṽ_q` at the boundary point of grid node `i`, using the node direction
/// as the outward normal directly (no normal search). This is the hot
/// path of the boundary-measure sweeps.
pub(crate) fn querm_at_boundary_node(body: &ConvexBody, q: f64, i: usize) -> Result<f64> {
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Parameter(format!(
            "dual quermassintegral exponent must be positive (got q = {q})"
        )));
    }
    let z = body.boundary_point(i)?;
    let nu = body.grid().node(i);
    let n = body.dim() as f64;
    Ok(lit_power_integral(body, z, nu, q, &|_, _| 1.0)? / n)
}

/// Volume-form evaluation of the potential `N_a(z)` in spherical
/// coordinates centred at `z`: angular integral of `ω(u) ρ_z(u)^a` times
/// the line integral of `φ` along the chord, with the `t^{a-1}` weight
/// absorbed into a fixed 8-point rule.
pub fn potential_volume_form(body: &ConvexBody, spec: &PotentialSpec, z: Vec3) -> Result<f64> {
    check_exponent(spec.a)?;
    let line_rule = quad::radial_power(RADIAL_INNER_ORDER, spec.a)?;
    let omega = &spec.omega;
    let phi = &spec.phi;
    angular_power_integral(body, z, spec.a, &|u, rho| {
        let mut line = 0.0;
        for &(t, w) in line_rule.iter() {
            line += w * phi(sphere::add(z, sphere::scale(u, t * rho)));
        }
        omega(u) * line
    })
}

/// Boundary-form evaluation of `N_a(z)`: surface quadrature of
/// `ω(ς)·⟨y-z, ν_y⟩·|y-z|^{a-n}·φ_a(y, z)` over the stored boundary
/// nodes, `ς = (y-z)/|y-z|`, with the node at `y = z` excluded. In dim 2
/// the cells around `z` are re-integrated by one-sided Gauss-Jacobi
/// panels that absorb the `|s|^a` contact behaviour of the integrand.
pub fn potential_boundary_form(body: &ConvexBody, spec: &PotentialSpec, z: Vec3) -> Result<f64> {
    check_exponent(spec.a)?;
    let Placement::Boundary(nu) = classify(body, z)? else {
        return Err(Error::Domain(
            "the boundary form is defined for boundary points only".into(),
        ));
    };
    let grid = body.grid();
    let n = body.dim() as f64;
    let a = spec.a;
    let scale = body.max_h();
    let line_rule = quad::radial_power(RADIAL_INNER_ORDER, a)?;
    let boundary = body.boundary_points()?;

    let integrand = |y: Vec3, normal: Vec3| -> f64 {
        let d = sphere::sub(y, z);
        let dist = sphere::norm(d);
        if dist <= 1e-12 * scale {
            return 0.0;
        }
        let sigma = sphere::scale(d, 1.0 / dist);
        let mut line = 0.0;
        for &(t, w) in line_rule.iter() {
            // φ_a(y, z) = ∫₀¹ φ(t y + (1-t) z) t^{a-1} dt.
            let pt = sphere::add(sphere::scale(y, t), sphere::scale(z, 1.0 - t));
            line += w * (spec.phi)(pt);
        }
        (spec.omega)(sigma) * sphere::dot(d, normal) * dist.powf(a - n) * line
    };

    if body.dim() == 3 {
        // Product-rule sum; the excluded node's integrand limit is zero.
        let mut terms = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let y = boundary[i];
            let det = body.det_b(i)?;
            terms.push(grid.weight(i) * det * integrand(y, grid.node(i)));
        }
        return Ok(sphere::pairwise_sum(&terms));
    }

    // dim 2: punched trapezoid plus contact panels. The trapezoid weight
    // structure is midpoint cells of width Δ; nodes within 1.5Δ of the
    // contact angle are removed and their cell span is re-integrated with
    // the |θ - θ_z|^a weight absorbed.
    let theta_z = nu[1].atan2(nu[0]);
    let nn = grid.len();
    let delta = 2.0 * std::f64::consts::PI / nn as f64;
    let wrap = |x: f64| {
        let two_pi = 2.0 * std::f64::consts::PI;
        let mut y = (x + std::f64::consts::PI).rem_euclid(two_pi);
        if y < 0.0 {
            y += two_pi;
        }
        y - std::f64::consts::PI
    };
    let mut terms = Vec::with_capacity(nn);
    let mut cut_lo = f64::INFINITY; // leftmost excluded offset
    let mut cut_hi = f64::NEG_INFINITY;
    for i in 0..nn {
        let offset = wrap(grid.theta(i) - theta_z);
        if offset.abs() <= 1.5 * delta {
            cut_lo = cut_lo.min(offset - 0.5 * delta);
            cut_hi = cut_hi.max(offset + 0.5 * delta);
            continue;
        }
        let det = body.det_b(i)?;
        terms.push(grid.weight(i) * det * integrand(boundary[i], grid.node(i)));
    }
    let mut total = sphere::pairwise_sum(&terms);

    // One-sided panels on [cut_lo, 0] and [0, cut_hi] (offsets from θ_z):
    // ∫₀^L f(τ) τ^a dτ with f analytic, scaled from the unit rule.
    let panel_rule = quad::radial_power(RADIAL_INNER_ORDER, a + 1.0)?;
    let mut panel = |len: f64, side: f64| -> Result<()> {
        if len <= 0.0 {
            return Ok(());
        }
        for &(t, w) in panel_rule.iter() {
            let tau = len * t;
            let theta = theta_z + side * tau;
            let y = body.boundary_point_at(theta);
            let det = body.det_b_at(theta)?;
            let x = [theta.cos(), theta.sin(), 0.0];
            let value = det * integrand(y, x);
            // value carries the full τ^a factor; the rule weights expect
            // the smooth part, so divide the absorbed power back out.
            total += len.powf(a + 1.0) * w * value / tau.powf(a);
        }
        Ok(())
    };
    panel(-cut_lo, -1.0)?;
    panel(cut_hi, 1.0)?;
    Ok(total)
}

fn check_exponent(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Parameter(format!(
            "potential exponent must be positive (got a = {a})"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------
// Tangential derivatives of Ṽ_q along the boundary (dim 2)
// ---------------------------------------------------------------------

/// Kernel moments at a boundary node: `A_g(p) = ∫_lit g(u) ρ_z(u)^p du`.
fn kernel_moment(
    body: &ConvexBody,
    z: Vec3,
    nu: Vec3,
    p: f64,
    g: impl Fn(Vec3) -> f64,
) -> Result<f64> {
    let rule = lit_rule(2, BOUNDARY_RULE_2D, p)?;
    let tangent = [-nu[1], nu[0], 0.0];
    let mut terms = Vec::with_capacity(rule.psi.len());
    for &(psi, w) in &rule.psi {
        let (s, c) = psi.sin_cos();
        let u = [
            c * tangent[0] - s * nu[0],
            c * tangent[1] - s * nu[1],
            0.0,
        ];
        let rho = body.ray_cast(z, u)?;
        terms.push(w * g(u) * rho.powf(p));
    }
    Ok(sphere::pairwise_sum(&terms))
}

fn require_dim2(body: &ConvexBody, what: &str) -> Result<()> {
    if body.dim() != 2 {
        return Err(Error::Unsupported(format!(
            "{what} needs tangential derivatives of the support function, \
             which only circle grids carry"
        )));
    }
    Ok(())
}

/// First tangential derivative of `z ↦ Ṽ_q(Ω, z)` along `∂Ω`, with
/// respect to arclength, at the boundary point of node `i`.
///
/// Uses the kernel identity
/// `(n/(q(n-q))) ∂_s Ṽ_q = ∫_Ω ⟨T, ς⟩ |y-z|^{q-1-n} dy` (`T` the unit
/// tangent, `ς` the unit direction from `z`). Near `q = n` the kernel
/// prefactor degenerates and the value switches to a five-point
/// finite-difference stencil along the boundary.
pub fn dual_querm_gradient(body: &ConvexBody, q: f64, i: usize) -> Result<f64> {
    require_dim2(body, "the boundary gradient")?;
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::Parameter(format!(
            "boundary gradient needs q > 1 (got {q})"
        )));
    }
    let n = body.dim() as f64;
    let b = body.det_b(i)?;
    if (q - n).abs() < GRADIENT_FD_BAND {
        // dṼ/ds = (dṼ/dθ) / b with a spectral-grade step in θ.
        return Ok(sphere_gradient_fd(body, q, i)? / b);
    }
    let z = body.boundary_point(i)?;
    let nu = body.grid().node(i);
    let tangent = body.grid().frame(i)[0];
    let a1 = kernel_moment(body, z, nu, q - 1.0, |u| sphere::dot(tangent, u))? / (q - 1.0);
    Ok(q * (n - q) / n * a1)
}

/// Second covariant derivative of `z ↦ Ṽ_q(Ω, z)` along `∂Ω` (arclength
/// parametrisation) at the boundary point of node `i`; `q > 2`.
pub fn dual_querm_hessian(body: &ConvexBody, q: f64, i: usize) -> Result<f64> {
    require_dim2(body, "the boundary hessian")?;
    if !(q.is_finite() && q > 2.0) {
        return Err(Error::Parameter(format!(
            "boundary hessian needs q > 2 (got {q})"
        )));
    }
    let n = body.dim() as f64;
    let z = body.boundary_point(i)?;
    let nu = body.grid().node(i);
    let tangent = body.grid().frame(i)[0];
    let b = body.det_b(i)?;
    let a0 = kernel_moment(body, z, nu, q - 1.0, |u| sphere::dot(nu, u))? / (q - 1.0);
    let a2 = kernel_moment(body, z, nu, q - 2.0, |u| {
        let t = sphere::dot(tangent, u);
        t * t
    })? / (q - 2.0);
    let ad = kernel_moment(body, z, nu, q - 2.0, |_| 1.0)? / (q - 2.0);
    Ok(q * (n - q) / n * (-a0 / b + (n + 2.0 - q) * a2 - ad))
}

/// Derivatives of `θ ↦ Ṽ_q(Ω, F(θ))` in the sphere parameter at node `i`:
/// `(d/dθ, d²/dθ²)`. Related to the boundary derivatives by the chain
/// rule through the curvature factor: `d/dθ = b ∂_s` and
/// `d²/dθ² = b' ∂_s + b² ∂²_ss`.
pub fn dual_querm_sphere_derivs(body: &ConvexBody, q: f64, i: usize) -> Result<(f64, f64)> {
    require_dim2(body, "sphere-parameter derivatives")?;
    if !(q.is_finite() && q > 2.0) {
        return Err(Error::Parameter(format!(
            "sphere-parameter derivatives need q > 2 (got {q})"
        )));
    }
    let b = body.det_b(i)?;
    let db = body.det_b_deriv(i)?;
    let grad_s = dual_querm_gradient(body, q, i)?;
    let hess_ss = dual_querm_hessian(body, q, i)?;
    Ok((b * grad_s, db * grad_s + b * b * hess_ss))
}

/// Five-point finite difference of `θ ↦ Ṽ_q(Ω, F(θ))` used near `q = n`.
fn sphere_gradient_fd(body: &ConvexBody, q: f64, i: usize) -> Result<f64> {
    let theta = body.grid().theta(i);
    let step = 1e-3;
    let eval = |t: f64| -> Result<f64> {
        let z = body.boundary_point_at(t);
        dual_quermassintegral(body, q, z)
    };
    let f1 = eval(theta + step)?;
    let f2 = eval(theta + 2.0 * step)?;
    let f_1 = eval(theta - step)?;
    let f_2 = eval(theta - 2.0 * step)?;
    Ok((-f2 + 8.0 * f1 - 8.0 * f_1 + f_2) / (12.0 * step))
}

// ---------------------------------------------------------------------
// Time derivative of Ṽ_q along a support flow (dim 2)
// ---------------------------------------------------------------------

/// Derivative of `t ↦ Ṽ_q(Ω_t, F_t(x_i))` at `t = 0` for the support
/// perturbation `h_t = h + t·δh`, evaluated from the kernel identity
///
/// ```text
/// d/dt Ṽ_q = q ∫_Ω (δh/h)(x̃) |y-z|^{q-n} dy
///          + (q(q-n)/n) ∫_Ω ⟨(δh/h)(x̃)·y - δz, ς⟩ |y-z|^{q-1-n} dy
/// ```
///
/// where `z = F(x_i)`, `δz = ∇̄δh(x_i)`, `ς = (y-z)/|y-z|`, and `x̃(y)` is
/// the outward normal of the boundary point radially above `y` — found by
/// inverting the monotone map `θ ↦ arg F(θ)`.
pub fn dual_querm_time_derivative(
    body: &ConvexBody,
    q: f64,
    delta_h: &Field,
    i: usize,
) -> Result<f64> {
    require_dim2(body, "the support-flow derivative")?;
    if !(q.is_finite() && q > 1.0) {
        return Err(Error::Parameter(format!(
            "the support-flow derivative needs q > 1 (got {q})"
        )));
    }
    let grid = body.grid();
    if !delta_h.grid().same_layout(grid) {
        return Err(Error::Grid(
            "perturbation field lives on a different grid".into(),
        ));
    }
    let n = body.dim() as f64;
    let z = body.boundary_point(i)?;
    let nu = grid.node(i);
    let tangent = grid.frame(i)[0];

    // δz = ∇̄δh(x_i) = δh'(x_i)·e₁ + δh(x_i)·x_i.
    let ddelta = grid.differentiate_periodic(delta_h.values(), 1)?;
    let dz = sphere::add(
        sphere::scale(tangent, ddelta[i]),
        sphere::scale(nu, delta_h.values()[i]),
    );
    let delta_series = TrigSeries::from_samples(grid, delta_h.values())?;

    // (δh/h) at the normal direction radially above y.
    let ratio_at = |y: Vec3| -> Result<f64> {
        let r = sphere::norm(y);
        let dir = if r > 1e-13 * body.max_h() {
            sphere::scale(y, 1.0 / r)
        } else {
            nu
        };
        let theta = body.normal_angle_of_direction(dir)?;
        Ok(delta_series.eval(theta) / body.h_theta(theta))
    };

    let outer = quad::radial_power(RADIAL_OUTER_ORDER, q)?;
    let outer_shift = quad::radial_power(RADIAL_OUTER_ORDER, q - 1.0)?;

    // First term: radial weight r^{q-1} on [0, ρ] ⇒ ρ^q ∫ t^{q-1}.
    let rule_q = lit_rule(2, BOUNDARY_RULE_2D, q)?;
    let mut t1_terms = Vec::with_capacity(rule_q.psi.len());
    for &(psi, w) in &rule_q.psi {
        let (s, c) = psi.sin_cos();
        let u = [
            c * tangent[0] - s * nu[0],
            c * tangent[1] - s * nu[1],
            0.0,
        ];
        let rho = body.ray_cast(z, u)?;
        let mut line = 0.0;
        for &(t, wt) in outer.iter() {
            let y = sphere::add(z, sphere::scale(u, t * rho));
            line += wt * ratio_at(y)?;
        }
        t1_terms.push(w * rho.powf(q) * line);
    }
    let t1 = q * sphere::pairwise_sum(&t1_terms);

    // Second term: radial weight r^{q-2} ⇒ ρ^{q-1} ∫ t^{q-2}.
    let rule_q1 = lit_rule(2, BOUNDARY_RULE_2D, q - 1.0)?;
    let mut t2_terms = Vec::with_capacity(rule_q1.psi.len());
    for &(psi, w) in &rule_q1.psi {
        let (s, c) = psi.sin_cos();
        let u = [
            c * tangent[0] - s * nu[0],
            c * tangent[1] - s * nu[1],
            0.0,
        ];
        let rho = body.ray_cast(z, u)?;
        let mut line = 0.0;
        for &(t, wt) in outer_shift.iter() {
            let y = sphere::add(z, sphere::scale(u, t * rho));
            let moving = sphere::sub(sphere::scale(y, ratio_at(y)?), dz);
            line += wt * sphere::dot(moving, u);
        }
        t2_terms.push(w * rho.powf(q - 1.0) * line);
    }
    let t2 = q * (q - n) / n * sphere::pairwise_sum(&t2_terms);

    Ok(t1 + t2)
}

// ---------------------------------------------------------------------
// Hölder exponent probe
// ---------------------------------------------------------------------

/// How a Hölder estimate was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HolderFlag {
    /// Ordinary log-log fit.
    Estimated,
    /// The raw slope exceeded 1 and was capped (C¹-or-smoother data).
    Capped,
    /// The samples are constant to roundoff; exponent reported as 1.
    SmoothOrConstant,
}

/// Result of [`holder_exponent_estimate`].
#[derive(Debug, Clone, Copy)]
pub struct HolderEstimate {
    /// Estimated exponent, clamped to `[0, 1]`.
    pub exponent: f64,
    /// Uncapped least-squares slope.
    pub raw_slope: f64,
    /// Number of dyadic bins that entered the fit.
    pub octaves: usize,
    pub flag: HolderFlag,
}

/// Estimates the Hölder regularity of scattered boundary samples: bins all
/// pairwise chordal lags dyadically, takes the largest `|Δg|` per bin, and
/// fits `log(max |Δg|)` against `log(lag)` by least squares. The exponent
/// is capped at 1 (differences of a `C¹` function scale at least
/// linearly, so slopes above 1 carry no extra information).
pub fn holder_exponent_estimate(positions: &[Vec3], values: &[f64]) -> Result<HolderEstimate> {
    if positions.len() != values.len() {
        return Err(Error::Parameter(
            "positions and values must have equal length".into(),
        ));
    }
    if positions.len() < 64 {
        return Err(Error::Parameter(format!(
            "the regularity probe needs at least 64 samples (got {})",
            positions.len()
        )));
    }
    let value_scale = values
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
        .max(1e-300);

    let mut d_max = 0.0f64;
    let mut d_min = f64::INFINITY;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = sphere::norm(sphere::sub(positions[i], positions[j]));
            if d > 0.0 {
                d_max = d_max.max(d);
                d_min = d_min.min(d);
            }
        }
    }
    if !(d_max > 0.0) {
        return Err(Error::Parameter(
            "all probe positions coincide; no lags to fit".into(),
        ));
    }
    // The top two octaves are excluded from the fit: near the diameter the
    // chordal metric saturates (antipodal pairs), so the largest lags
    // measure global geometry rather than local regularity.
    const SKIP_OCTAVES: usize = 2;
    let octave_span = (d_max / d_min).log2().floor() as usize;
    let bins = octave_span.saturating_sub(SKIP_OCTAVES).clamp(0, 8);
    if bins < 2 {
        return Err(Error::Numerical(
            "lag range spans fewer than two usable dyadic octaves".into(),
        ));
    }

    let mut bin_max = vec![0.0f64; bins];
    let mut spread = 0.0f64;
    for i in 0..positions.len() {
        for j in (i + 1)..positions.len() {
            let d = sphere::norm(sphere::sub(positions[i], positions[j]));
            if d <= 0.0 {
                continue;
            }
            let dg = (values[i] - values[j]).abs();
            spread = spread.max(dg);
            // Bin k collects lags in (d_max 2^{-k-1}, d_max 2^{-k}].
            let k = (d_max / d).log2().floor() as isize - SKIP_OCTAVES as isize;
            if (0..bins as isize).contains(&k) {
                let k = k as usize;
                bin_max[k] = bin_max[k].max(dg);
            }
        }
    }

    if spread <= 1e-14 * value_scale {
        return Ok(HolderEstimate {
            exponent: 1.0,
            raw_slope: f64::INFINITY,
            octaves: bins,
            flag: HolderFlag::SmoothOrConstant,
        });
    }

    // Least-squares slope of log(max |Δg|) vs log(lag scale) over the
    // populated bins.
    let pts: Vec<(f64, f64)> = bin_max
        .iter()
        .enumerate()
        .filter(|(_, m)| **m > 0.0)
        .map(|(k, m)| {
            // bin midpoint lag
            let lag = d_max * 0.5f64.powi((k + SKIP_OCTAVES) as i32) * 0.75;
            (lag.ln(), m.ln())
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::Numerical(
            "fewer than two populated dyadic bins".into(),
        ));
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);

    let (exponent, flag) = if slope > 1.0 {
        (1.0, HolderFlag::Capped)
    } else if slope < 0.0 {
        (0.0, HolderFlag::Estimated)
    } else {
        (slope, HolderFlag::Estimated)
    };
    Ok(HolderEstimate {
        exponent,
        raw_slope: slope,
        octaves: pts.len(),
        flag,
    })
}
