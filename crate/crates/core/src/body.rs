//! Convex bodies represented by support-function samples.
//!
//! A [`SupportField`] is a per-node sample of the support function `h` on a
//! [`SphereGrid`]. On circle grids the field carries spectral derivatives
//! (`h'`, `h''`) and a trigonometric interpolant, so the boundary map, the
//! curvature factor `h'' + h` and evaluation between nodes all come from
//! the same Fourier representation. On `S²` the grid carries quadrature
//! only: 3-D bodies are either canonical closed forms (ball, ellipsoid),
//! which evaluate exactly everywhere, or bare samples loaded from a file,
//! which support radial operations through bilinear interpolation but have
//! no boundary map or curvature.
//!
//! A [`ConvexBody`] is a validated support field plus the derived per-node
//! data: boundary points `F(x) = ∇h(x) + h(x)x`, the curvature determinant
//! `det(∇²h + hI)`, and (lazily) radial samples through the origin.
//!
//! Ray casting uses the support-plane envelope: for `z` in the body and a
//! unit direction `u`, the distance to the boundary is
//! `min { (h(x) - ⟨z,x⟩) / ⟨u,x⟩ : ⟨u,x⟩ > 0 }`. The grid scan brackets
//! the minimiser and a golden-section pass on the interpolated support
//! function refines it to relative tolerance `1e-10`.

use std::path::Path;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::sphere::{self, SphereGrid, TrigSeries, Vec3};

/// Relative floor for the curvature factor: a body is degenerate when
/// `h'' + h <= EPS_CONVEXITY * max h` at some node.
pub const EPS_CONVEXITY: f64 = 1e-8;

/// Absolute tolerance of the point-in-body test.
pub const EPS_INTERIOR: f64 = 1e-9;

/// Relative tolerance of ray-cast refinement.
pub const RAY_TOL: f64 = 1e-10;

/// Origin-symmetry is declared below this relative defect.
pub const EPS_SYMMETRY: f64 = 1e-12;

const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_9;

/// Support-function samples bound to a grid, with spectral caches in dim 2.
pub struct SupportField {
    grid: Arc<SphereGrid>,
    h: Vec<f64>,
    /// `h'` at the nodes (dim 2).
    dh: Option<Vec<f64>>,
    /// `h''` at the nodes (dim 2).
    d2h: Option<Vec<f64>>,
    /// Trigonometric interpolant of `h` (dim 2).
    series: Option<TrigSeries>,
}

/// Margins reported by [`SupportField::validate`].
#[derive(Debug, Clone)]
pub struct ValidationReport {
    /// Smallest support sample; the field is positive iff this is `> 0`.
    pub min_h: f64,
    /// Largest support sample (sets the scale for the floors).
    pub max_h: f64,
    /// Smallest curvature factor `h'' + h`; `None` when the grid carries no
    /// tangential derivatives (dim 3).
    pub min_convexity: Option<f64>,
    /// `max_i |h(x_i) - h(-x_i)|`; `None` when the grid is not closed under
    /// the antipodal map.
    pub symmetry_defect: Option<f64>,
}

impl ValidationReport {
    pub fn is_positive(&self) -> bool {
        self.min_h > 0.0
    }

    pub fn is_convex(&self) -> bool {
        match self.min_convexity {
            Some(b) => b > EPS_CONVEXITY * self.max_h,
            None => self.is_positive(),
        }
    }

    pub fn is_origin_symmetric(&self) -> bool {
        match self.symmetry_defect {
            Some(d) => d <= EPS_SYMMETRY * self.max_h.abs().max(1e-300),
            None => false,
        }
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "min h = {:e}, max h = {:e}", self.min_h, self.max_h)?;
        match self.min_convexity {
            Some(b) => write!(f, ", min h''+h = {b:e}")?,
            None => write!(f, ", convexity margin unavailable")?,
        }
        match self.symmetry_defect {
            Some(d) => write!(f, ", symmetry defect = {d:e}"),
            None => write!(f, ", symmetry defect unavailable"),
        }
    }
}

impl SupportField {
    /// Binds samples to a grid and, on circle grids, computes the spectral
    /// caches. Positivity and convexity are *not* enforced here — call
    /// [`SupportField::validate`] for the margins; constructing a
    /// [`ConvexBody`] enforces them.
    pub fn new(grid: Arc<SphereGrid>, h: Vec<f64>) -> Result<SupportField> {
        if h.len() != grid.len() {
            return Err(Error::Grid(format!(
                "support field has {} samples for a grid of {} nodes",
                h.len(),
                grid.len()
            )));
        }
        if let Some(bad) = h.iter().find(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!(
                "support samples must be finite (found {bad})"
            )));
        }
        let (dh, d2h, series) = if grid.dim() == 2 {
            let dh = grid.differentiate_periodic(&h, 1)?;
            let d2h = grid.differentiate_periodic(&h, 2)?;
            let series = TrigSeries::from_samples(&grid, &h)?;
            (Some(dh), Some(d2h), Some(series))
        } else {
            (None, None, None)
        };
        Ok(SupportField {
            grid,
            h,
            dh,
            d2h,
            series,
        })
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.h
    }

    pub fn h(&self, i: usize) -> f64 {
        self.h[i]
    }

    /// `h'` at node `i` (dim 2).
    pub fn dh(&self, i: usize) -> f64 {
        self.dh.as_ref().expect("dim 2 field")[i]
    }

    /// Curvature factor `h'' + h` at node `i` (dim 2).
    pub fn convexity_factor(&self, i: usize) -> f64 {
        self.d2h.as_ref().expect("dim 2 field")[i] + self.h[i]
    }

    pub fn max_h(&self) -> f64 {
        self.h.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_h(&self) -> f64 {
        self.h.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn series(&self) -> &TrigSeries {
        self.series.as_ref().expect("dim 2 field")
    }

    /// Positivity, convexity and symmetry margins.
    pub fn validate(&self) -> ValidationReport {
        let min_h = self.min_h();
        let max_h = self.max_h();
        let min_convexity = self.d2h.as_ref().map(|d2| {
            d2.iter()
                .zip(&self.h)
                .map(|(a, b)| a + b)
                .fold(f64::INFINITY, f64::min)
        });
        let closed = self.grid.dim() == 2 || self.grid.n_phi() % 2 == 0;
        let symmetry_defect = closed.then(|| {
            (0..self.grid.len())
                .map(|i| (self.h[i] - self.h[self.grid.antipodal_index(i)]).abs())
                .fold(0.0, f64::max)
        });
        ValidationReport {
            min_h,
            max_h,
            min_convexity,
            symmetry_defect,
        }
    }
}

/// How a body was built; canonical kinds keep their closed form so that
/// support evaluation between nodes stays exact in dim 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BodyKind {
    /// Ball of radius `r` about the origin (either dimension).
    Ball { r: f64 },
    /// Origin-centred ellipse with semi-axes `a`, `b` (dim 2).
    Ellipse { a: f64, b: f64 },
    /// Origin-centred ellipsoid with semi-axes `a`, `b`, `c` (dim 3).
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// General dim-2 samples; everything is derived spectrally.
    Free,
    /// Dim-3 samples with no closed form: radial operations only.
    Sampled,
}

impl BodyKind {
    /// Closed-form support value, if this kind has one.
    fn analytic_h(&self, x: Vec3) -> Option<f64> {
        match *self {
            BodyKind::Ball { r } => Some(r),
            BodyKind::Ellipse { a, b } => {
                Some((a * a * x[0] * x[0] + b * b * x[1] * x[1]).sqrt())
            }
            BodyKind::Ellipsoid { a, b, c } => {
                Some((a * a * x[0] * x[0] + b * b * x[1] * x[1] + c * c * x[2] * x[2]).sqrt())
            }
            BodyKind::Free | BodyKind::Sampled => None,
        }
    }

    fn rescaled(&self, lambda: f64) -> BodyKind {
        match *self {
            BodyKind::Ball { r } => BodyKind::Ball { r: lambda * r },
            BodyKind::Ellipse { a, b } => BodyKind::Ellipse {
                a: lambda * a,
                b: lambda * b,
            },
            BodyKind::Ellipsoid { a, b, c } => BodyKind::Ellipsoid {
                a: lambda * a,
                b: lambda * b,
                c: lambda * c,
            },
            other => other,
        }
    }
}

/// A validated convex body: support field plus derived boundary data.
pub struct ConvexBody {
    support: SupportField,
    kind: BodyKind,
    /// Boundary map `F(x_i)` per node; absent for sampled 3-D bodies.
    boundary: Option<Vec<Vec3>>,
    /// `det(∇²h + hI)` per node (the reciprocal Gauss curvature in the
    /// normal parametrisation); absent for sampled 3-D bodies.
    det_b: Option<Vec<f64>>,
    /// Radial samples `ρ(u_i)` through the origin, filled on first use.
    radial: OnceLock<Vec<f64>>,
    /// Interpolant of the curvature determinant (dim 2), on first use.
    det_b_series: OnceLock<TrigSeries>,
}

impl ConvexBody {
    /// Builds a body from support samples, enforcing positivity and (in
    /// dim 2) strict convexity. 3-D samples yield a radial-only body: the
    /// grid carries no tangential derivatives, so the boundary map and
    /// curvature are unavailable unless the body is canonical.
    pub fn from_support(support: SupportField) -> Result<ConvexBody> {
        Self::assemble(support, None)
    }

    fn assemble(support: SupportField, kind_hint: Option<BodyKind>) -> Result<ConvexBody> {
        let report = support.validate();
        if !report.is_positive() {
            return Err(Error::Domain(format!(
                "support function must be positive everywhere (min h = {:e})",
                report.min_h
            )));
        }
        let grid = support.grid().clone();
        let (kind, boundary, det_b) = if grid.dim() == 2 {
            if let Some(node) = (0..grid.len())
                .find(|&i| support.convexity_factor(i) <= EPS_CONVEXITY * report.max_h)
            {
                return Err(Error::DegenerateConvexity {
                    node,
                    min_b: support.convexity_factor(node),
                });
            }
            let boundary: Vec<Vec3> = (0..grid.len())
                .map(|i| {
                    let x = grid.node(i);
                    let e1 = grid.frame(i)[0];
                    sphere::add(sphere::scale(e1, support.dh(i)), sphere::scale(x, support.h(i)))
                })
                .collect();
            let det_b: Vec<f64> = (0..grid.len())
                .map(|i| support.convexity_factor(i))
                .collect();
            (
                kind_hint.unwrap_or(BodyKind::Free),
                Some(boundary),
                Some(det_b),
            )
        } else {
            match kind_hint {
                Some(kind @ (BodyKind::Ball { .. } | BodyKind::Ellipsoid { .. })) => {
                    let (boundary, det_b) = canonical_boundary_data(&grid, kind);
                    (kind, Some(boundary), Some(det_b))
                }
                _ => (BodyKind::Sampled, None, None),
            }
        };
        Ok(ConvexBody {
            support,
            kind,
            boundary,
            det_b,
            radial: OnceLock::new(),
            det_b_series: OnceLock::new(),
        })
    }

    /// Canonical generator: ball (dim 2 or 3), ellipse (dim 2), ellipsoid
    /// (dim 3), sampled on `grid`.
    pub fn canonical(grid: Arc<SphereGrid>, kind: BodyKind) -> Result<ConvexBody> {
        let dim = grid.dim();
        let params_ok = match kind {
            BodyKind::Ball { r } => r > 0.0,
            BodyKind::Ellipse { a, b } => {
                if dim != 2 {
                    return Err(Error::Parameter("ellipse is a dim-2 body".into()));
                }
                a > 0.0 && b > 0.0
            }
            BodyKind::Ellipsoid { a, b, c } => {
                if dim != 3 {
                    return Err(Error::Parameter("ellipsoid is a dim-3 body".into()));
                }
                a > 0.0 && b > 0.0 && c > 0.0
            }
            BodyKind::Free | BodyKind::Sampled => {
                return Err(Error::Parameter(
                    "canonical() builds closed-form bodies; use from_support for samples".into(),
                ))
            }
        };
        if !params_ok {
            return Err(Error::Parameter(format!(
                "canonical body parameters must be positive (got {kind:?})"
            )));
        }
        let h: Vec<f64> = grid
            .nodes()
            .iter()
            .map(|&x| kind.analytic_h(x).expect("canonical kind"))
            .collect();
        let support = SupportField::new(grid, h)?;
        Self::assemble(support, Some(kind))
    }

    pub fn support(&self) -> &SupportField {
        &self.support
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.support.grid
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn kind(&self) -> BodyKind {
        self.kind
    }

    pub fn h(&self, i: usize) -> f64 {
        self.support.h(i)
    }

    pub fn max_h(&self) -> f64 {
        self.support.max_h()
    }

    /// Whether the boundary map / curvature data exist.
    pub fn has_boundary_data(&self) -> bool {
        self.boundary.is_some()
    }

    /// Boundary point `F(x_i) = ∇h(x_i) + h(x_i) x_i`.
    pub fn boundary_point(&self, i: usize) -> Result<Vec3> {
        self.boundary
            .as_ref()
            .map(|b| b[i])
            .ok_or_else(|| sampled_unsupported("boundary map"))
    }

    /// All boundary points.
    pub fn boundary_points(&self) -> Result<&[Vec3]> {
        self.boundary
            .as_deref()
            .ok_or_else(|| sampled_unsupported("boundary map"))
    }

    /// Curvature determinant `det(∇²h + hI)` at node `i`.
    pub fn det_b(&self, i: usize) -> Result<f64> {
        let det = self
            .det_b
            .as_ref()
            .map(|d| d[i])
            .ok_or_else(|| sampled_unsupported("curvature"))?;
        if det <= EPS_CONVEXITY * self.support.max_h() {
            return Err(Error::DegenerateConvexity {
                node: i,
                min_b: det,
            });
        }
        Ok(det)
    }

    /// Gauss curvature at the boundary point with outward normal `x_i`.
    pub fn gauss_curvature(&self, i: usize) -> Result<f64> {
        Ok(1.0 / self.det_b(i)?)
    }

    /// Continuous support evaluation: spectral interpolant in dim 2,
    /// closed form for canonical 3-D bodies, bilinear on the grid for
    /// sampled 3-D bodies.
    pub fn h_dir(&self, x: Vec3) -> f64 {
        if self.dim() == 2 {
            self.support.series().eval(x[1].atan2(x[0]))
        } else if let Some(v) = self.kind.analytic_h(x) {
            v
        } else {
            self.bilinear_h(x)
        }
    }

    fn bilinear_h(&self, x: Vec3) -> f64 {
        let grid = self.grid();
        let nt = grid.n_theta();
        let np = grid.n_phi();
        let theta = x[2].clamp(-1.0, 1.0).acos();
        let two_pi = 2.0 * std::f64::consts::PI;
        let phi = x[1].atan2(x[0]).rem_euclid(two_pi);
        // Ring bracket in the (sorted, non-uniform) polar angles, clamped
        // to the outermost rings near the poles.
        let mut lo = 0usize;
        while lo + 1 < nt && grid.ring_theta(lo + 1) <= theta {
            lo += 1;
        }
        let hi = (lo + 1).min(nt - 1);
        let t = if hi == lo {
            0.0
        } else {
            ((theta - grid.ring_theta(lo)) / (grid.ring_theta(hi) - grid.ring_theta(lo)))
                .clamp(0.0, 1.0)
        };
        let dphi = two_pi / np as f64;
        let k = ((phi / dphi) as usize).min(np - 1);
        let k1 = (k + 1) % np;
        let s = (phi / dphi - k as f64).clamp(0.0, 1.0);
        let at = |ring: usize, az: usize| self.support.h[ring * np + az];
        let lo_val = (1.0 - s) * at(lo, k) + s * at(lo, k1);
        let hi_val = (1.0 - s) * at(hi, k) + s * at(hi, k1);
        (1.0 - t) * lo_val + t * hi_val
    }

    /// Support evaluation at angle `theta` (dim 2).
    pub fn h_theta(&self, theta: f64) -> f64 {
        self.support.series().eval(theta)
    }

    /// Boundary point at angle `theta` through the interpolant (dim 2).
    pub fn boundary_point_at(&self, theta: f64) -> Vec3 {
        let s = self.support.series();
        let (sin_t, cos_t) = theta.sin_cos();
        let h = s.eval(theta);
        let dh = s.eval_deriv(theta);
        [
            h * cos_t - dh * sin_t,
            h * sin_t + dh * cos_t,
            0.0,
        ]
    }

    /// Curvature determinant at angle `theta` through the interpolant (dim 2).
    pub fn det_b_at(&self, theta: f64) -> Result<f64> {
        if self.dim() != 2 {
            return Err(sampled_unsupported("interpolated curvature"));
        }
        let series = self.det_b_series.get_or_init(|| {
            let vals: Vec<f64> = (0..self.grid().len())
                .map(|i| self.support.convexity_factor(i))
                .collect();
            TrigSeries::from_samples(self.grid(), &vals).expect("dim 2 grid")
        });
        Ok(series.eval(theta))
    }

    /// Angular derivative of the curvature determinant at node `i` (dim 2).
    pub fn det_b_deriv(&self, i: usize) -> Result<f64> {
        if self.dim() != 2 {
            return Err(sampled_unsupported("curvature derivative"));
        }
        self.det_b(i)?; // degeneracy check
        let series = self.det_b_series.get_or_init(|| {
            let vals: Vec<f64> = (0..self.grid().len())
                .map(|j| self.support.convexity_factor(j))
                .collect();
            TrigSeries::from_samples(self.grid(), &vals).expect("dim 2 grid")
        });
        Ok(series.eval_deriv(self.grid().theta(i)))
    }

    /// `min_i (h(x_i) - ⟨z, x_i⟩)`: positive inside, ~0 on the boundary,
    /// negative outside (up to grid resolution).
    pub fn interior_margin(&self, z: Vec3) -> f64 {
        let grid = self.grid();
        let mut margin = f64::INFINITY;
        for i in 0..grid.len() {
            margin = margin.min(self.support.h[i] - sphere::dot(z, grid.node(i)));
        }
        margin
    }

    /// Point-in-closure test at the documented absolute tolerance.
    pub fn contains(&self, z: Vec3) -> bool {
        self.interior_margin(z) >= -EPS_INTERIOR
    }

    /// Membership test with no grid discretization: closed-form for the
    /// quadric families, support inequality over the grid otherwise.
    pub fn contains_exact(&self, z: Vec3) -> bool {
        let inv_sq = match self.kind {
            BodyKind::Ball { r } => [1.0 / (r * r); 3],
            BodyKind::Ellipse { a, b } => [1.0 / (a * a), 1.0 / (b * b), 1.0],
            BodyKind::Ellipsoid { a, b, c } => [1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c)],
            BodyKind::Free | BodyKind::Sampled => return self.contains(z),
        };
        z[0] * z[0] * inv_sq[0] + z[1] * z[1] * inv_sq[1] + z[2] * z[2] * inv_sq[2] <= 1.0
    }

    /// Radial distance from `z` in the closure of the body to the boundary
    /// along unit direction `u`.
    pub fn ray_cast(&self, z: Vec3, u: Vec3) -> Result<f64> {
        let un = sphere::norm(u);
        if !(un.is_finite() && un > 0.0) {
            return Err(Error::Parameter("ray direction must be nonzero".into()));
        }
        let u = sphere::scale(u, 1.0 / un);
        if !self.contains(z) {
            return Err(Error::Domain(format!(
                "ray origin lies outside the body (margin = {:e})",
                self.interior_margin(z)
            )));
        }
        if let Some((_, exit)) = self.quadratic_extent(z, u) {
            return Ok(exit.max(0.0));
        }
        Ok(self.directed_extent(z, u).max(0.0))
    }

    /// Length of the intersection of the line `p + ℝu` with the body;
    /// zero when the line misses. `p` need not be inside.
    pub fn chord_length(&self, p: Vec3, u: Vec3) -> Result<f64> {
        let un = sphere::norm(u);
        if !(un.is_finite() && un > 0.0) {
            return Err(Error::Parameter("chord direction must be nonzero".into()));
        }
        let u = sphere::scale(u, 1.0 / un);
        if matches!(
            self.kind,
            BodyKind::Ball { .. } | BodyKind::Ellipse { .. } | BodyKind::Ellipsoid { .. }
        ) {
            return Ok(match self.quadratic_extent(p, u) {
                Some((entry, exit)) => (exit - entry).max(0.0),
                None => 0.0,
            });
        }
        let forward = self.directed_extent(p, u);
        let backward = self.directed_extent(p, sphere::scale(u, -1.0));
        Ok((forward + backward).max(0.0))
    }

    /// Exact line-body intersection parameters `(t_entry, t_exit)` for the
    /// quadric families; `None` for free-form bodies or missing lines.
    /// `u` must be a unit vector.
    fn quadratic_extent(&self, p: Vec3, u: Vec3) -> Option<(f64, f64)> {
        let inv_sq = match self.kind {
            BodyKind::Ball { r } => [1.0 / (r * r); 3],
            BodyKind::Ellipse { a, b } => [1.0 / (a * a), 1.0 / (b * b), 1.0],
            BodyKind::Ellipsoid { a, b, c } => [1.0 / (a * a), 1.0 / (b * b), 1.0 / (c * c)],
            BodyKind::Free | BodyKind::Sampled => return None,
        };
        let mut qa = 0.0;
        let mut qb = 0.0;
        let mut qc = -1.0;
        for k in 0..3 {
            qa += u[k] * u[k] * inv_sq[k];
            qb += p[k] * u[k] * inv_sq[k];
            qc += p[k] * p[k] * inv_sq[k];
        }
        let disc = qb * qb - qa * qc;
        if disc < 0.0 {
            return None;
        }
        let root = disc.sqrt();
        Some(((-qb - root) / qa, (-qb + root) / qa))
    }

    /// Signed support-envelope extent: `min_{⟨u,x⟩ > 0} (h(x) - ⟨p,x⟩) / ⟨u,x⟩`,
    /// grid scan plus golden-section refinement on the interpolant.
    fn directed_extent(&self, p: Vec3, u: Vec3) -> f64 {
        let grid = self.grid();
        let mut best = f64::INFINITY;
        let mut best_i = usize::MAX;
        for i in 0..grid.len() {
            let x = grid.node(i);
            let den = sphere::dot(u, x);
            if den > 0.0 {
                let m = (self.support.h[i] - sphere::dot(p, x)) / den;
                if m < best {
                    best = m;
                    best_i = i;
                }
            }
        }
        if best_i == usize::MAX {
            return f64::INFINITY;
        }
        if self.dim() == 2 {
            self.refine_extent_2d(p, u, best_i, best)
        } else {
            self.refine_extent_3d(p, u, best_i, best)
        }
    }

    fn refine_extent_2d(&self, p: Vec3, u: Vec3, best_i: usize, best: f64) -> f64 {
        let grid = self.grid();
        let step = 2.0 * std::f64::consts::PI / grid.len() as f64;
        let center = grid.theta(best_i);
        let series = self.support.series();
        // The extent is g(θ) = (S(θ) - P(θ))/D(θ) with S the support
        // series, P = ⟨p, x(θ)⟩, D = ⟨u, x(θ)⟩. Its interior minimum is the
        // root of φ = (S'-P')D - (S-P)D', and φ' = D·(S''+S) is positive
        // wherever D is (the curvature factor), so Newton with a bisection
        // safeguard converges on the bracketed cell.
        let eval_all = |theta: f64| -> (f64, f64, f64) {
            let (s, c) = theta.sin_cos();
            let (sv, sd, sdd) = series.eval_jet(theta);
            let pv = p[0] * c + p[1] * s;
            let pd = -p[0] * s + p[1] * c;
            let dv = u[0] * c + u[1] * s;
            let dd = -u[0] * s + u[1] * c;
            let num = sv - pv;
            let phi = (sd - pd) * dv - num * dd;
            let phi_d = dv * (sdd + sv);
            let g = if dv > 0.0 { num / dv } else { f64::INFINITY };
            (phi, phi_d, g)
        };
        let mut lo = center - step;
        let mut hi = center + step;
        let (phi_lo, _, g_lo) = eval_all(lo);
        let (phi_hi, _, g_hi) = eval_all(hi);
        let mut result = best.min(g_lo).min(g_hi);
        if !(phi_lo <= 0.0 && phi_hi >= 0.0) {
            // The denominator changes sign inside the bracket (rays near
            // the tangent direction), so φ is not monotone there; fall
            // back to a plain golden search.
            return golden_min(|t| eval_all(t).2, lo, hi, 1e-12).1.min(result);
        }
        let mut theta = center;
        for _ in 0..60 {
            let (phi, phi_d, g) = eval_all(theta);
            result = result.min(g);
            if phi > 0.0 {
                hi = theta;
            } else {
                lo = theta;
            }
            if hi - lo < 1e-10 {
                break;
            }
            let newton = theta - phi / phi_d;
            theta = if phi_d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        let (_, _, g) = eval_all(0.5 * (lo + hi));
        result.min(g)
    }

    fn refine_extent_3d(&self, p: Vec3, u: Vec3, best_i: usize, best: f64) -> f64 {
        let grid = self.grid();
        let nt = grid.n_theta();
        let np = grid.n_phi();
        let ring = best_i / np;
        let az = best_i % np;
        let dphi = 2.0 * std::f64::consts::PI / np as f64;
        let theta0 = grid.ring_theta(ring);
        let dth_lo = if ring == 0 {
            theta0
        } else {
            theta0 - grid.ring_theta(ring - 1)
        };
        let dth_hi = if ring + 1 == nt {
            std::f64::consts::PI - theta0
        } else {
            grid.ring_theta(ring + 1) - theta0
        };
        let phi0 = dphi * az as f64;
        let minimand = |theta: f64, phi: f64| -> f64 {
            let (st, ct) = theta.sin_cos();
            let (sp, cp) = phi.sin_cos();
            let x = [st * cp, st * sp, ct];
            let den = sphere::dot(u, x);
            if den <= 0.0 {
                return f64::INFINITY;
            }
            (self.h_dir(x) - sphere::dot(p, x)) / den
        };
        // Coordinate-descent golden section over one cell neighbourhood.
        let mut theta = theta0;
        let mut phi = phi0;
        let mut value = best;
        for _ in 0..3 {
            let (t, v) = golden_min(
                |t| minimand(t, phi),
                (theta - dth_lo).max(0.0),
                (theta + dth_hi).min(std::f64::consts::PI),
                1e-10,
            );
            if v < value {
                value = v;
                theta = t;
            }
            let (f, v) = golden_min(|f| minimand(theta, f), phi - dphi, phi + dphi, 1e-10);
            if v < value {
                value = v;
                phi = f;
            }
        }
        value
    }

    /// Radial samples `ρ(u_i)` of the boundary seen from the origin.
    pub fn radial(&self) -> &[f64] {
        self.radial.get_or_init(|| {
            let grid = self.grid();
            match self.kind {
                // Origin-centred closed forms have exact radial functions.
                BodyKind::Ball { r } => vec![r; grid.len()],
                BodyKind::Ellipse { a, b } => grid
                    .nodes()
                    .iter()
                    .map(|u| {
                        1.0 / (u[0] * u[0] / (a * a) + u[1] * u[1] / (b * b)).sqrt()
                    })
                    .collect(),
                BodyKind::Ellipsoid { a, b, c } => grid
                    .nodes()
                    .iter()
                    .map(|u| {
                        1.0 / (u[0] * u[0] / (a * a)
                            + u[1] * u[1] / (b * b)
                            + u[2] * u[2] / (c * c))
                            .sqrt()
                    })
                    .collect(),
                BodyKind::Free | BodyKind::Sampled => grid
                    .nodes()
                    .iter()
                    .map(|&u| self.directed_extent([0.0; 3], u).max(0.0))
                    .collect(),
            }
        })
    }

    /// Enclosed volume `(1/n) ∫ ρ(u)^n du`.
    pub fn volume(&self) -> f64 {
        let n = self.dim() as f64;
        let grid = self.grid();
        let radial = self.radial();
        grid.integrate_map(|i| radial[i].powi(self.dim() as i32)) / n
    }

    /// The dilate `λ·Ω`, with every cached quantity scaled in place.
    pub fn rescale(&self, lambda: f64) -> Result<ConvexBody> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Parameter(format!(
                "rescale factor must be positive (got {lambda})"
            )));
        }
        let h: Vec<f64> = self.support.h.iter().map(|v| v * lambda).collect();
        let support = SupportField::new(self.support.grid.clone(), h)?;
        let body = Self::assemble(support, Some(self.kind.rescaled(lambda)))?;
        Ok(body)
    }

    /// Outward unit normal at a boundary point `z`.
    ///
    /// Canonical bodies invert the closed form; free dim-2 bodies minimise
    /// `h(x(θ)) - ⟨z, x(θ)⟩` over the interpolant (its minimiser is the
    /// normal angle). Fast path: if `z` coincides with a stored boundary
    /// node, that node's direction is returned directly.
    pub fn outward_normal_at(&self, z: Vec3) -> Result<Vec3> {
        let scale = self.support.max_h();
        let grid = self.grid();
        // Grid scan for the touching direction.
        let mut best = f64::INFINITY;
        let mut best_i = 0;
        for i in 0..grid.len() {
            let m = self.support.h[i] - sphere::dot(z, grid.node(i));
            if m < best {
                best = m;
                best_i = i;
            }
        }
        if let Some(boundary) = &self.boundary {
            if sphere::norm(sphere::sub(boundary[best_i], z)) <= 1e-9 * scale {
                return Ok(grid.node(best_i));
            }
        }
        match self.kind {
            BodyKind::Ball { .. } => Ok(sphere::normalize(z)),
            BodyKind::Ellipse { a, b } => {
                Ok(sphere::normalize([z[0] / (a * a), z[1] / (b * b), 0.0]))
            }
            BodyKind::Ellipsoid { a, b, c } => Ok(sphere::normalize([
                z[0] / (a * a),
                z[1] / (b * b),
                z[2] / (c * c),
            ])),
            BodyKind::Free => {
                let series = self.support.series();
                let step = 2.0 * std::f64::consts::PI / grid.len() as f64;
                let center = grid.theta(best_i);
                let objective = |theta: f64| -> f64 {
                    let (s, c) = theta.sin_cos();
                    series.eval(theta) - (z[0] * c + z[1] * s)
                };
                let (theta, gap) = golden_min(objective, center - step, center + step, 1e-13);
                if gap.abs() > 1e-6 * scale {
                    return Err(Error::Domain(format!(
                        "point is not on the boundary (support gap = {gap:e})"
                    )));
                }
                let (s, c) = theta.sin_cos();
                Ok([c, s, 0.0])
            }
            BodyKind::Sampled => Err(sampled_unsupported("boundary normals")),
        }
    }

    /// Angle `θ*` whose boundary point `F(θ*)` lies in direction `dir`
    /// from the origin (dim 2). The map `θ ↦ arg F(θ)` is strictly
    /// monotone for strictly convex bodies with the origin inside, so the
    /// inversion is a guarded bisection.
    pub fn normal_angle_of_direction(&self, dir: Vec3) -> Result<f64> {
        if self.dim() != 2 {
            return Err(Error::Unsupported(
                "direction inversion is a dim-2 operation".into(),
            ));
        }
        let target = dir[1].atan2(dir[0]);
        let wrap = |x: f64| {
            let two_pi = 2.0 * std::f64::consts::PI;
            let mut y = (x + std::f64::consts::PI).rem_euclid(two_pi);
            if y < 0.0 {
                y += two_pi;
            }
            y - std::f64::consts::PI
        };
        let angle_gap = |theta: f64| -> f64 {
            let p = self.boundary_point_at(theta);
            wrap(p[1].atan2(p[0]) - target)
        };
        // Bracket around the radial node closest to the target direction.
        let n = self.grid().len();
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let mut lo = target;
        let mut hi = target;
        let mut glo = angle_gap(lo);
        let mut ghi = ghi_init(glo);
        fn ghi_init(g: f64) -> f64 {
            g
        }
        let mut expand = step;
        for _ in 0..(n + 2) {
            if glo <= 0.0 && ghi >= 0.0 && (hi > lo) {
                break;
            }
            lo -= expand;
            hi += expand;
            glo = angle_gap(lo);
            ghi = angle_gap(hi);
            expand *= 1.5;
        }
        if !(glo <= 0.0 && ghi >= 0.0) {
            return Err(Error::Numerical(
                "failed to bracket the boundary direction".into(),
            ));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let g = angle_gap(mid);
            if g.abs() < 1e-14 || hi - lo < 1e-14 {
                return Ok(mid);
            }
            if g < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    // ------------------------------------------------------------------
    // Serialization
    // ------------------------------------------------------------------

    /// Plain-text form: header `dim N`, then one line per node —
    /// `θ h` in dim 2, `x y z h` in dim 3 — in grid order. Floats use the
    /// shortest decimal that round-trips, so reading the text back
    /// reproduces the support samples bit for bit.
    pub fn to_text(&self) -> String {
        use std::fmt::Write;
        let grid = self.grid();
        let mut out = String::new();
        writeln!(out, "dim {}", self.dim()).unwrap();
        for i in 0..grid.len() {
            if self.dim() == 2 {
                writeln!(out, "{} {}", grid.theta(i), self.support.h[i]).unwrap();
            } else {
                let x = grid.node(i);
                writeln!(out, "{} {} {} {}", x[0], x[1], x[2], self.support.h[i]).unwrap();
            }
        }
        out
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Parses the plain-text form produced by [`ConvexBody::to_text`],
    /// rebuilding the grid and checking that the listed directions match
    /// it to `1e-9`.
    pub fn from_text(text: &str) -> Result<ConvexBody> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::Format("empty body file".into()))?;
        let dim: usize = header
            .trim()
            .strip_prefix("dim ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::Format(format!("expected `dim N` header, got `{header}`")))?;
        if dim != 2 && dim != 3 {
            return Err(Error::Format(format!("dimension must be 2 or 3, got {dim}")));
        }
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in lines {
            let fields: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| {
                        Error::Format(format!("line {}: bad float `{tok}`", lineno + 1))
                    })
                })
                .collect::<Result<_>>()?;
            let expect = if dim == 2 { 2 } else { 4 };
            if fields.len() != expect {
                return Err(Error::Format(format!(
                    "line {}: expected {} fields, got {}",
                    lineno + 1,
                    expect,
                    fields.len()
                )));
            }
            rows.push(fields);
        }
        if dim == 2 {
            let n = rows.len();
            let grid = SphereGrid::circle(n)?;
            for (i, row) in rows.iter().enumerate() {
                if (row[0] - grid.theta(i)).abs() > 1e-9 {
                    return Err(Error::Format(format!(
                        "node {i}: angle {} does not match the uniform grid",
                        row[0]
                    )));
                }
            }
            let h = rows.iter().map(|r| r[1]).collect();
            ConvexBody::from_support(SupportField::new(grid, h)?)
        } else {
            // Recover the ring structure: nodes were written ring-major,
            // so the azimuth count is the length of the first run of equal
            // polar heights.
            let n = rows.len();
            let z0 = rows[0][2];
            let n_phi = rows
                .iter()
                .take_while(|r| (r[2] - z0).abs() <= 1e-9)
                .count();
            if n_phi == 0 || n % n_phi != 0 {
                return Err(Error::Format(
                    "node list does not form a ring-major product grid".into(),
                ));
            }
            let n_theta = n / n_phi;
            let grid = SphereGrid::s2(n_theta, n_phi)?;
            for (i, row) in rows.iter().enumerate() {
                let x = grid.node(i);
                let listed = [row[0], row[1], row[2]];
                if sphere::norm(sphere::sub(listed, x)) > 1e-9 {
                    return Err(Error::Format(format!(
                        "node {i}: direction does not match the product grid"
                    )));
                }
            }
            let h = rows.iter().map(|r| r[3]).collect();
            ConvexBody::from_support(SupportField::new(grid, h)?)
        }
    }

    pub fn read_from(path: &Path) -> Result<ConvexBody> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

impl std::fmt::Debug for ConvexBody {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConvexBody")
            .field("kind", &self.kind)
            .field("grid", self.grid())
            .finish()
    }
}

fn sampled_unsupported(what: &str) -> Error {
    Error::Unsupported(format!(
        "{what} requires tangential derivatives, which sampled 3-D bodies do not carry; \
         use a canonical body or a dim-2 grid"
    ))
}

fn canonical_boundary_data(grid: &SphereGrid, kind: BodyKind) -> (Vec<Vec3>, Vec<f64>) {
    let dim = grid.dim() as i32;
    let mut boundary = Vec::with_capacity(grid.len());
    let mut det_b = Vec::with_capacity(grid.len());
    for &x in grid.nodes() {
        match kind {
            BodyKind::Ball { r } => {
                boundary.push(sphere::scale(x, r));
                det_b.push(r.powi(dim - 1));
            }
            BodyKind::Ellipsoid { a, b, c } => {
                // h(x) = |Ax| with A = diag(a,b,c): ∇h = A²x/|Ax| and
                // det(∇²h + hI) = (abc)² / h⁴.
                let h = (a * a * x[0] * x[0] + b * b * x[1] * x[1] + c * c * x[2] * x[2]).sqrt();
                boundary.push([
                    a * a * x[0] / h,
                    b * b * x[1] / h,
                    c * c * x[2] / h,
                ]);
                det_b.push((a * b * c).powi(2) / h.powi(4));
            }
            _ => unreachable!("canonical 3-D kinds only"),
        }
    }
    (boundary, det_b)
}

/// Golden-section minimisation of a unimodal function on `[a, b]`,
/// returning `(argmin, min)`. The interval tolerance is absolute.
pub(crate) fn golden_min(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> (f64, f64) {
    let mut lo = a;
    let mut hi = b;
    let mut c = hi - GOLDEN_RATIO * (hi - lo);
    let mut d = lo + GOLDEN_RATIO * (hi - lo);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - GOLDEN_RATIO * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + GOLDEN_RATIO * (hi - lo);
            fd = f(d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = f(mid);
    if fm <= fc && fm <= fd {
        (mid, fm)
    } else if fc <= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn ellipse(n: usize) -> ConvexBody {
        let grid = SphereGrid::circle(n).unwrap();
        ConvexBody::canonical(grid, BodyKind::Ellipse { a: 2.0, b: 1.0 }).unwrap()
    }

    #[test]
    fn ellipse_boundary_point_at_pole() {
        let body = ellipse(128);
        let f0 = body.boundary_point(0).unwrap();
        assert!((f0[0] - 2.0).abs() < 1e-10, "{f0:?}");
        assert!(f0[1].abs() < 1e-10);
    }

    #[test]
    fn boundary_points_satisfy_support_identity() {
        let body = ellipse(128);
        let grid = body.grid().clone();
        for i in 0..grid.len() {
            let f = body.boundary_point(i).unwrap();
            let x = grid.node(i);
            assert!((sphere::dot(f, x) - body.h(i)).abs() < 1e-10);
            assert!(body.contains(f), "boundary point {i} fails interior test");
        }
    }

    #[test]
    fn ellipse_curvature_at_flat_end() {
        let body = ellipse(128);
        // Curvature of x²/4 + y² = 1 at (2, 0) is a/b² = 2.
        let kappa = body.gauss_curvature(0).unwrap();
        assert!((kappa - 2.0).abs() < 1e-9, "kappa = {kappa}");
    }

    #[test]
    fn disk_curvature_is_grid_independent() {
        for n in [64, 256] {
            let grid = SphereGrid::circle(n).unwrap();
            let body = ConvexBody::canonical(grid, BodyKind::Ball { r: 2.0 }).unwrap();
            for i in 0..n {
                assert!((body.gauss_curvature(i).unwrap() - 0.5).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn ellipse_ray_cast_from_vertex() {
        let body = ellipse(256);
        let u = [-1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt(), 0.0];
        let rho = body.ray_cast([2.0, 0.0, 0.0], u).unwrap();
        let exact = 4.0 * 2f64.sqrt() / 5.0;
        assert!(
            (rho - exact).abs() <= 1e-10 * exact,
            "rho = {rho}, exact = {exact}"
        );
    }

    #[test]
    fn disk_ray_cast_matches_closed_form() {
        let grid = SphereGrid::circle(64).unwrap();
        let body = ConvexBody::canonical(grid, BodyKind::Ball { r: 1.0 }).unwrap();
        let z = [0.3, 0.0, 0.0];
        for k in 0..24 {
            let alpha = 2.0 * PI * k as f64 / 24.0 + 0.05;
            let u = [alpha.cos(), alpha.sin(), 0.0];
            let rho = body.ray_cast(z, u).unwrap();
            // |z + ρu| = 1 with |z| = r: ρ = √(1 - r² sin²α) - r cos α.
            let r = 0.3;
            let exact = (1.0 - r * r * alpha.sin().powi(2)).sqrt() - r * alpha.cos();
            assert!((rho - exact).abs() < 1e-10, "alpha = {alpha}");
        }
    }

    #[test]
    fn ray_cast_rejects_outside_origin() {
        let body = ellipse(64);
        let err = body.ray_cast([3.0, 0.0, 0.0], [1.0, 0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn volumes_of_canonical_bodies() {
        let body = ellipse(256);
        assert!((body.volume() - 2.0 * PI).abs() <= 1e-8 * 2.0 * PI);

        let grid = SphereGrid::circle(64).unwrap();
        let disk = ConvexBody::canonical(grid, BodyKind::Ball { r: 1.5 }).unwrap();
        assert!((disk.volume() - PI * 2.25).abs() < 1e-10);

        let grid3 = SphereGrid::s2(16, 32).unwrap();
        let ball = ConvexBody::canonical(grid3, BodyKind::Ball { r: 2.0 }).unwrap();
        assert!((ball.volume() - 32.0 * PI / 3.0).abs() < 1e-9);

        let grid3 = SphereGrid::s2(24, 48).unwrap();
        let ellipsoid =
            ConvexBody::canonical(grid3, BodyKind::Ellipsoid { a: 2.0, b: 1.0, c: 1.0 }).unwrap();
        let exact = 4.0 * PI * 2.0 / 3.0;
        assert!((ellipsoid.volume() - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn translated_disk_volume_and_symmetry() {
        // h(θ) = 1 + 0.2 cos θ is the unit disk translated by (0.2, 0).
        let grid = SphereGrid::circle(128).unwrap();
        let h: Vec<f64> = (0..128).map(|j| 1.0 + 0.2 * grid.theta(j).cos()).collect();
        let body = ConvexBody::from_support(SupportField::new(grid, h).unwrap()).unwrap();
        assert!((body.volume() - PI).abs() < 1e-9);
        let report = body.support().validate();
        assert!(!report.is_origin_symmetric());
        let ell = ellipse(128);
        assert!(ell.support().validate().is_origin_symmetric());
    }

    #[test]
    fn validate_reports_convexity_margin() {
        let grid = SphereGrid::circle(64).unwrap();
        let h: Vec<f64> = (0..64)
            .map(|j| 1.0 + 0.9 * (2.0 * grid.theta(j)).cos())
            .collect();
        let field = SupportField::new(grid, h).unwrap();
        let report = field.validate();
        // h'' + h = 1 - 2.7 cos 2θ dips to -1.7.
        let margin = report.min_convexity.unwrap();
        assert!((margin + 1.7).abs() < 1e-10, "margin = {margin}");
        assert!(!report.is_convex());
        assert!(matches!(
            ConvexBody::from_support(field).unwrap_err(),
            Error::DegenerateConvexity { .. }
        ));
    }

    #[test]
    fn rescale_scales_cached_quantities() {
        let body = ellipse(128);
        let doubled = body.rescale(2.0).unwrap();
        assert!((doubled.volume() - 8.0 * PI).abs() < 1e-7);
        assert!((doubled.h(0) - 4.0).abs() < 1e-12);
        // Curvature scales like 1/λ.
        let k0 = body.gauss_curvature(0).unwrap();
        let k1 = doubled.gauss_curvature(0).unwrap();
        assert!((k1 - 0.5 * k0).abs() < 1e-9);
        assert_eq!(doubled.kind(), BodyKind::Ellipse { a: 4.0, b: 2.0 });
    }

    #[test]
    fn chord_lengths_through_and_past_the_disk() {
        let grid = SphereGrid::circle(64).unwrap();
        let body = ConvexBody::canonical(grid, BodyKind::Ball { r: 1.0 }).unwrap();
        let through = body.chord_length([0.0, 0.3, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert!((through - 2.0 * (1.0f64 - 0.09).sqrt()).abs() < 1e-10);
        let miss = body.chord_length([0.0, 1.5, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert_eq!(miss, 0.0);
    }

    #[test]
    fn ball3_ray_cast_matches_closed_form() {
        let grid = SphereGrid::s2(16, 32).unwrap();
        let body = ConvexBody::canonical(grid, BodyKind::Ball { r: 1.0 }).unwrap();
        let z = [0.5, 0.0, 0.0];
        let u = sphere::normalize([0.3, 0.7, 0.2]);
        let rho = body.ray_cast(z, u).unwrap();
        let zu = sphere::dot(z, u);
        let exact = (1.0 - sphere::dot(z, z) + zu * zu).sqrt() - zu;
        assert!((rho - exact).abs() < 1e-10, "rho = {rho}, exact = {exact}");
    }

    #[test]
    fn normal_inversion_round_trips() {
        let body = ellipse(128);
        for &theta in &[0.0, 0.4, 1.1, 2.8, 4.0] {
            let p = body.boundary_point_at(theta);
            let dir = sphere::normalize(p);
            let back = body.normal_angle_of_direction(dir).unwrap();
            let pb = body.boundary_point_at(back);
            assert!(
                sphere::norm(sphere::sub(p, pb)) < 1e-9,
                "theta = {theta}, recovered {back}"
            );
        }
    }

    #[test]
    fn outward_normals_of_canonical_bodies() {
        let body = ellipse(128);
        let z = body.boundary_point(5).unwrap();
        let nrm = body.outward_normal_at(z).unwrap();
        let expect = body.grid().node(5);
        assert!(sphere::norm(sphere::sub(nrm, expect)) < 1e-9);
    }

    #[test]
    fn text_round_trip_dim2() {
        let body = ellipse(64);
        let text = body.to_text();
        let back = ConvexBody::from_text(&text).unwrap();
        assert_eq!(back.dim(), 2);
        for i in 0..64 {
            assert_eq!(back.h(i).to_bits(), body.h(i).to_bits(), "node {i}");
        }
    }

    #[test]
    fn text_round_trip_dim3() {
        let grid = SphereGrid::s2(8, 16).unwrap();
        let body =
            ConvexBody::canonical(grid, BodyKind::Ellipsoid { a: 1.5, b: 1.0, c: 0.8 }).unwrap();
        let text = body.to_text();
        let back = ConvexBody::from_text(&text).unwrap();
        assert_eq!(back.dim(), 3);
        assert_eq!(back.kind(), BodyKind::Sampled);
        for i in 0..back.grid().len() {
            assert_eq!(back.h(i).to_bits(), body.h(i).to_bits(), "node {i}");
        }
        // Radial-only bodies refuse curvature but still ray-cast.
        assert!(back.det_b(0).is_err());
        assert!(back.ray_cast([0.0; 3], [1.0, 0.0, 0.0]).is_ok());
    }

    #[test]
    fn from_text_rejects_malformed_input() {
        assert!(ConvexBody::from_text("").is_err());
        assert!(ConvexBody::from_text("dim 4\n0 1\n").is_err());
        assert!(ConvexBody::from_text("dim 2\n0 1 2\n").is_err());
        assert!(ConvexBody::from_text("dim 2\n0 x\n").is_err());
    }
}
