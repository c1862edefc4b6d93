//! Quadrature grids on the unit circle and the unit 2-sphere.
//!
//! A [`SphereGrid`] fixes the node directions, quadrature weights and
//! tangent frames once; every field in the crate is a plain vector of
//! per-node samples bound to such a grid. Two layouts exist:
//!
//! * **dim 2** — `n` equispaced angles `θ_j = 2πj/n` with uniform weights
//!   `2π/n` (the trapezoid rule, spectrally accurate for smooth periodic
//!   integrands). Circle grids also carry FFT plans so that fields can be
//!   differentiated spectrally and evaluated between nodes by trigonometric
//!   interpolation.
//! * **dim 3** — a product of an `n_θ`-point Gauss-Legendre rule in
//!   `cos θ` with `n_φ` uniform azimuths, ring-major node order. The `S²`
//!   grid carries quadrature only; no tangential differentiation is done
//!   on it.
//!
//! All reductions go through [`pairwise_sum`], a fixed summation tree that
//! makes integrals independent of thread count and evaluation order.

use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::quad;

/// Points and directions; 2-D data lives in the `z = 0` plane.
pub type Vec3 = [f64; 3];

#[inline]
pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Sums a slice with a fixed balanced tree (halving splits, runs of at most
/// eight summed left to right). The result depends only on the contents of
/// the slice, never on chunking or thread scheduling, so integrals are
/// reproducible bit for bit.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        s
    } else {
        let mid = xs.len() / 2;
        pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
    }
}

struct SpectralPlans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Fixed quadrature grid on `S^{n-1}`, `n ∈ {2, 3}`.
pub struct SphereGrid {
    dim: usize,
    nodes: Vec<Vec3>,
    weights: Vec<f64>,
    frames: Vec<[Vec3; 2]>,
    /// dim 2: angle of each node. dim 3: polar angle of each ring.
    thetas: Vec<f64>,
    n_theta: usize,
    n_phi: usize,
    plans: OnceLock<SpectralPlans>,
}

impl SphereGrid {
    /// Equispaced circle grid with `n` nodes, `n` even and at least 8.
    pub fn circle(n: usize) -> Result<Arc<SphereGrid>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Grid(format!(
                "circle grid needs an even node count >= 8 (got {n})"
            )));
        }
        let step = 2.0 * std::f64::consts::PI / n as f64;
        let mut nodes = Vec::with_capacity(n);
        let mut frames = Vec::with_capacity(n);
        let mut thetas = Vec::with_capacity(n);
        for j in 0..n {
            let theta = step * j as f64;
            let (s, c) = theta.sin_cos();
            nodes.push([c, s, 0.0]);
            frames.push([[-s, c, 0.0], [0.0, 0.0, 0.0]]);
            thetas.push(theta);
        }
        Ok(Arc::new(SphereGrid {
            dim: 2,
            nodes,
            weights: vec![step; n],
            frames,
            thetas,
            n_theta: n,
            n_phi: 1,
            plans: OnceLock::new(),
        }))
    }

    /// Product grid on `S²`: `n_theta >= 4` Gauss-Legendre rings in `cos θ`
    /// by `n_phi >= 8` uniform azimuths. Ring-major order, rings sorted by
    /// increasing polar angle; weights sum to `4π`.
    pub fn s2(n_theta: usize, n_phi: usize) -> Result<Arc<SphereGrid>> {
        if n_theta < 4 {
            return Err(Error::Grid(format!(
                "s2 grid needs at least 4 polar rings (got {n_theta})"
            )));
        }
        if n_phi < 8 {
            return Err(Error::Grid(format!(
                "s2 grid needs at least 8 azimuths (got {n_phi})"
            )));
        }
        let rule = quad::legendre(n_theta)?;
        // Sort Gauss nodes by descending cos θ so rings run north to south.
        let mut rings: Vec<(f64, f64)> = rule.to_vec();
        rings.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

        let dphi = 2.0 * std::f64::consts::PI / n_phi as f64;
        let mut nodes = Vec::with_capacity(n_theta * n_phi);
        let mut weights = Vec::with_capacity(n_theta * n_phi);
        let mut frames = Vec::with_capacity(n_theta * n_phi);
        let mut thetas = Vec::with_capacity(n_theta);
        for &(mu, w_mu) in &rings {
            let theta = mu.acos();
            let sin_t = (1.0 - mu * mu).sqrt();
            thetas.push(theta);
            let w = w_mu * dphi;
            for k in 0..n_phi {
                let phi = dphi * k as f64;
                let (sp, cp) = phi.sin_cos();
                nodes.push([sin_t * cp, sin_t * sp, mu]);
                // e_θ points toward increasing polar angle, e_φ east.
                frames.push([[mu * cp, mu * sp, -sin_t], [-sp, cp, 0.0]]);
                weights.push(w);
            }
        }
        Ok(Arc::new(SphereGrid {
            dim: 3,
            nodes,
            weights,
            frames,
            thetas,
            n_theta,
            n_phi,
            plans: OnceLock::new(),
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, i: usize) -> Vec3 {
        self.nodes[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Tangent frame at node `i`; the second leg is zero in dim 2.
    pub fn frame(&self, i: usize) -> [Vec3; 2] {
        self.frames[i]
    }

    /// Node angle (dim 2 only).
    pub fn theta(&self, i: usize) -> f64 {
        debug_assert_eq!(self.dim, 2);
        self.thetas[i]
    }

    /// Ring count (dim 3) or node count (dim 2).
    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    /// Azimuth count (dim 3); 1 in dim 2.
    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Polar angle of ring `r` (dim 3).
    pub fn ring_theta(&self, r: usize) -> f64 {
        debug_assert_eq!(self.dim, 3);
        self.thetas[r]
    }

    /// Index of the node antipodal to `i`. Exact for circle grids; on `S²`
    /// the Gauss rings are symmetric about the equator and the azimuth
    /// count is even whenever antipodal closure is requested.
    pub fn antipodal_index(&self, i: usize) -> usize {
        if self.dim == 2 {
            (i + self.n_theta / 2) % self.n_theta
        } else {
            let ring = i / self.n_phi;
            let az = i % self.n_phi;
            let op_ring = self.n_theta - 1 - ring;
            let op_az = (az + self.n_phi / 2) % self.n_phi;
            op_ring * self.n_phi + op_az
        }
    }

    /// Two grids are interchangeable when they have the same layout; node
    /// construction is deterministic, so sizes pin the geometry.
    pub fn same_layout(&self, other: &SphereGrid) -> bool {
        self.dim == other.dim && self.n_theta == other.n_theta && self.n_phi == other.n_phi
    }

    fn check_len(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::Grid(format!(
                "field has {} samples but the grid has {} nodes",
                values.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// `Σ wᵢ vᵢ` through the fixed pairwise tree.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_len(values)?;
        let products: Vec<f64> = values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .collect();
        Ok(pairwise_sum(&products))
    }

    /// Integrates `f(node index)` over the grid.
    pub fn integrate_map(&self, f: impl Fn(usize) -> f64) -> f64 {
        let products: Vec<f64> = (0..self.len()).map(|i| f(i) * self.weights[i]).collect();
        pairwise_sum(&products)
    }

    fn plans(&self) -> &SpectralPlans {
        self.plans.get_or_init(|| {
            let mut planner = FftPlanner::new();
            SpectralPlans {
                forward: planner.plan_fft_forward(self.len()),
                inverse: planner.plan_fft_inverse(self.len()),
            }
        })
    }

    /// Complex spectrum of a periodic field (dim 2), unnormalised:
    /// `Ĥ_k = Σ_j v_j e^{-2πi jk/n}`.
    pub(crate) fn fft(&self, values: &[f64]) -> Result<Vec<Complex<f64>>> {
        if self.dim != 2 {
            return Err(Error::Unsupported(
                "spectral analysis is defined on circle grids only".into(),
            ));
        }
        self.check_len(values)?;
        let mut buf: Vec<Complex<f64>> = values.iter().map(|&v| Complex::new(v, 0.0)).collect();
        self.plans().forward.process(&mut buf);
        Ok(buf)
    }

    /// Spectral derivative of a periodic field on a circle grid.
    ///
    /// Exact (to roundoff) for inputs band-limited below the Nyquist mode.
    /// For the first derivative the Nyquist coefficient is dropped, which
    /// is the standard symmetric choice for real data; for the second it is
    /// kept with multiplier `-(n/2)²`.
    pub fn differentiate_periodic(&self, values: &[f64], order: usize) -> Result<Vec<f64>> {
        if order != 1 && order != 2 {
            return Err(Error::Parameter(format!(
                "derivative order must be 1 or 2 (got {order})"
            )));
        }
        let n = self.len();
        let mut buf = self.fft(values)?;
        let half = n / 2;
        for (k, c) in buf.iter_mut().enumerate() {
            let freq = if k <= half {
                k as f64
            } else {
                k as f64 - n as f64
            };
            *c = match order {
                1 => {
                    let f = if k == half { 0.0 } else { freq };
                    Complex::new(0.0, f) * *c
                }
                _ => *c * (-freq * freq),
            };
        }
        self.plans().inverse.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        Ok(buf.iter().map(|c| c.re * inv_n).collect())
    }
}

impl std::fmt::Debug for SphereGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SphereGrid")
            .field("dim", &self.dim)
            .field("n_theta", &self.n_theta)
            .field("n_phi", &self.n_phi)
            .finish()
    }
}

/// Per-node scalar samples bound to a grid.
#[derive(Clone)]
pub struct Field {
    grid: Arc<SphereGrid>,
    values: Vec<f64>,
}

impl Field {
    pub fn new(grid: Arc<SphereGrid>, values: Vec<f64>) -> Result<Field> {
        grid.check_len(&values)?;
        Ok(Field { grid, values })
    }

    /// Constant field.
    pub fn constant(grid: Arc<SphereGrid>, value: f64) -> Field {
        let values = vec![value; grid.len()];
        Field { grid, values }
    }

    /// Samples `f(direction)` at every node.
    pub fn from_fn(grid: Arc<SphereGrid>, f: impl Fn(Vec3) -> f64) -> Field {
        let values = grid.nodes.iter().map(|&x| f(x)).collect();
        Field { grid, values }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integrate(&self) -> f64 {
        self.grid.integrate(&self.values).expect("field bound to grid")
    }

    pub fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("grid", &self.grid)
            .field("min", &self.min())
            .field("max", &self.max())
            .finish()
    }
}

/// Truncated Fourier interpolant of periodic samples on a circle grid.
///
/// Modes below the roundoff floor are dropped, so evaluation cost scales
/// with the effective bandwidth of the field rather than the grid size.
/// Values and derivatives agree with [`SphereGrid::differentiate_periodic`]
/// at the nodes.
pub struct TrigSeries {
    /// (frequency, complex amplitude): the series is `Σ Re(c e^{ikθ})`.
    modes: Vec<(f64, Complex<f64>)>,
}

impl TrigSeries {
    pub fn from_samples(grid: &SphereGrid, values: &[f64]) -> Result<TrigSeries> {
        let spectrum = grid.fft(values)?;
        let n = grid.len();
        let half = n / 2;
        let max_mag = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let floor = 1e-15 * max_mag;
        let inv_n = 1.0 / n as f64;
        let mut modes = Vec::new();
        for (k, &c) in spectrum.iter().enumerate().take(half + 1) {
            if c.norm() <= floor && k > 0 {
                continue;
            }
            // Real samples: modes k and n-k are conjugate, fold them into
            // one term with doubled amplitude (halved at k = 0 and Nyquist).
            let amp = if k == 0 || k == half {
                c * inv_n
            } else {
                c * (2.0 * inv_n)
            };
            modes.push((k as f64, amp));
        }
        Ok(TrigSeries { modes })
    }

    /// Interpolated value at angle `theta`.
    pub fn eval(&self, theta: f64) -> f64 {
        let mut s = 0.0;
        for &(k, c) in &self.modes {
            let (sin_kt, cos_kt) = (k * theta).sin_cos();
            s += c.re * cos_kt - c.im * sin_kt;
        }
        s
    }

    /// Derivative of the interpolant at `theta`.
    pub fn eval_deriv(&self, theta: f64) -> f64 {
        let mut s = 0.0;
        for &(k, c) in &self.modes {
            let (sin_kt, cos_kt) = (k * theta).sin_cos();
            // d/dθ Re(c e^{ikθ}) = Re(ik c e^{ikθ})
            s += -k * (c.re * sin_kt + c.im * cos_kt);
        }
        s
    }

    /// Second derivative of the interpolant at `theta`.
    pub fn eval_deriv2(&self, theta: f64) -> f64 {
        let mut s = 0.0;
        for &(k, c) in &self.modes {
            let (sin_kt, cos_kt) = (k * theta).sin_cos();
            s -= k * k * (c.re * cos_kt - c.im * sin_kt);
        }
        s
    }

    /// Value and first two derivatives in one pass.
    pub fn eval_jet(&self, theta: f64) -> (f64, f64, f64) {
        let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
        for &(k, c) in &self.modes {
            let (sin_kt, cos_kt) = (k * theta).sin_cos();
            let re = c.re * cos_kt - c.im * sin_kt;
            let im = c.re * sin_kt + c.im * cos_kt;
            v += re;
            d1 -= k * im;
            d2 -= k * k * re;
        }
        (v, d1, d2)
    }

    /// Number of retained modes.
    pub fn bandwidth(&self) -> usize {
        self.modes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_weights_sum_to_full_angle() {
        let g = SphereGrid::circle(64).unwrap();
        let total: f64 = pairwise_sum(g.weights());
        assert!((total - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn s2_weights_sum_to_sphere_area() {
        let g = SphereGrid::s2(16, 32).unwrap();
        let total: f64 = pairwise_sum(g.weights());
        assert!((total - 4.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn circle_grid_closed_under_antipodes() {
        let g = SphereGrid::circle(32).unwrap();
        for i in 0..g.len() {
            let j = g.antipodal_index(i);
            let diff = add(g.node(i), g.node(j));
            assert!(norm(diff) < 1e-12, "node {i} vs {j}");
        }
    }

    #[test]
    fn s2_grid_closed_under_antipodes_for_even_azimuths() {
        let g = SphereGrid::s2(8, 16).unwrap();
        for i in 0..g.len() {
            let j = g.antipodal_index(i);
            let diff = add(g.node(i), g.node(j));
            assert!(norm(diff) < 1e-12, "node {i} vs {j}");
        }
    }

    #[test]
    fn rejects_undersized_grids() {
        assert!(SphereGrid::circle(6).is_err());
        assert!(SphereGrid::circle(9).is_err());
        assert!(SphereGrid::s2(3, 32).is_err());
        assert!(SphereGrid::s2(8, 4).is_err());
    }

    #[test]
    fn integrates_cos_squared_on_circle() {
        let g = SphereGrid::circle(16).unwrap();
        let f = Field::from_fn(g, |x| x[0] * x[0]);
        assert!((f.integrate() - PI).abs() < 1e-12);
    }

    #[test]
    fn integrates_z_squared_on_sphere() {
        let g = SphereGrid::s2(4, 8).unwrap();
        let f = Field::from_fn(g, |x| x[2] * x[2]);
        assert!((f.integrate() - 4.0 * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_derivative_is_exact_below_nyquist() {
        let g = SphereGrid::circle(32).unwrap();
        let v: Vec<f64> = (0..32).map(|j| (3.0 * g.theta(j)).sin()).collect();
        let d1 = g.differentiate_periodic(&v, 1).unwrap();
        let d2 = g.differentiate_periodic(&v, 2).unwrap();
        for j in 0..32 {
            let t = g.theta(j);
            assert!((d1[j] - 3.0 * (3.0 * t).cos()).abs() < 1e-12);
            assert!((d2[j] + 9.0 * (3.0 * t).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_integrates_to_zero() {
        let g = SphereGrid::circle(64).unwrap();
        let v: Vec<f64> = (0..64)
            .map(|j| {
                let t = g.theta(j);
                (t.cos() * 2.0).exp() + 0.3 * (5.0 * t).sin()
            })
            .collect();
        for order in [1, 2] {
            let d = g.differentiate_periodic(&v, order).unwrap();
            let total = g.integrate(&d).unwrap();
            assert!(total.abs() < 1e-10, "order {order}: {total}");
        }
    }

    #[test]
    fn trig_series_matches_samples_and_derivatives() {
        let g = SphereGrid::circle(32).unwrap();
        let v: Vec<f64> = (0..32)
            .map(|j| {
                let t = g.theta(j);
                1.5 + 0.4 * (2.0 * t).cos() - 0.1 * (5.0 * t).sin()
            })
            .collect();
        let s = TrigSeries::from_samples(&g, &v).unwrap();
        let d1 = g.differentiate_periodic(&v, 1).unwrap();
        let d2 = g.differentiate_periodic(&v, 2).unwrap();
        for j in 0..32 {
            let t = g.theta(j);
            assert!((s.eval(t) - v[j]).abs() < 1e-12);
            assert!((s.eval_deriv(t) - d1[j]).abs() < 1e-12);
            assert!((s.eval_deriv2(t) - d2[j]).abs() < 1e-12);
        }
        // Between nodes the interpolant reproduces the band-limited truth.
        let t = 0.7713_f64;
        let exact = 1.5 + 0.4 * (2.0 * t).cos() - 0.1 * (5.0 * t).sin();
        assert!((s.eval(t) - exact).abs() < 1e-12);
        assert!(s.bandwidth() <= 4);
    }

    #[test]
    fn pairwise_sum_is_chunk_independent() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 2654435761_usize) as f64).sin()).collect();
        let a = pairwise_sum(&xs);
        let b = pairwise_sum(&xs.to_vec());
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
