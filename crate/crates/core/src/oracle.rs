//! Independent cross-checks: Monte Carlo estimators and finite
//! differences.
//!
//! Everything here is deliberately dumb: rejection-free sampling, direct
//! estimators, no shared machinery with the deterministic quadrature
//! paths, so that agreement between the two actually means something.
//!
//! Randomness is counter-based. Every sample owns a private stream keyed
//! by `(seed, sample index)`, so an estimate depends only on the seed and
//! the sample count — not on chunking, thread count, or evaluation order.
//! Chunk partial sums are reduced with the same fixed pairwise tree used
//! by the quadrature code, which makes estimates bit-reproducible.

use rayon::prelude::*;

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::riesz::PotentialSpec;
use crate::sphere::{self, Vec3};

/// Samples per work unit in parallel sweeps. Fixed so that the reduction
/// tree (and therefore the float result) is independent of thread count.
const CHUNK: u64 = 16_384;

/// Counter-based random stream: the `k`-th word is a pure function of
/// `(seed, shard, k)`. Streams for different shards are independent, and
/// any shard can be regenerated in isolation.
#[derive(Debug, Clone)]
pub struct CounterRng {
    base: u64,
    index: u64,
}

/// SplitMix64 finalizer; full-period bijective mixer on 64 bits.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl CounterRng {
    pub fn new(seed: u64, shard: u64) -> CounterRng {
        CounterRng {
            base: mix(mix(seed) ^ shard.wrapping_mul(0xd134_2543_de82_ef95)),
            index: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let word = mix(self.base ^ self.index.wrapping_mul(0x2545_f491_4f6c_dd1d));
        self.index += 1;
        word
    }

    /// Uniform double in `[0, 1)` with 53 random bits.
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform unit vector; exact inverse-CDF sampling, no rejection.
    pub fn unit_vector(&mut self, dim: usize) -> Vec3 {
        if dim == 2 {
            let alpha = self.uniform(0.0, 2.0 * std::f64::consts::PI);
            [alpha.cos(), alpha.sin(), 0.0]
        } else {
            let z = self.uniform(-1.0, 1.0);
            let phi = self.uniform(0.0, 2.0 * std::f64::consts::PI);
            let s = (1.0 - z * z).max(0.0).sqrt();
            [s * phi.cos(), s * phi.sin(), z]
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples: u64,
}

/// Reduces per-chunk `(Σx, Σx², accepted)` triples into an estimate.
fn reduce_chunks(chunks: &[(f64, f64, u64)], samples: u64, scale: f64) -> McEstimate {
    let sums: Vec<f64> = chunks.iter().map(|c| c.0).collect();
    let sq_sums: Vec<f64> = chunks.iter().map(|c| c.1).collect();
    let total = sphere::pairwise_sum(&sums);
    let total_sq = sphere::pairwise_sum(&sq_sums);
    let m = samples as f64;
    let mean = total / m;
    let var = ((total_sq - m * mean * mean) / (m - 1.0)).max(0.0);
    McEstimate {
        value: scale * mean,
        std_error: scale * (var / m).sqrt(),
        samples,
    }
}

fn check_samples(samples: u64) -> Result<()> {
    if samples < 2 {
        return Err(Error::Parameter(format!(
            "a Monte Carlo estimate needs at least 2 samples (got {samples})"
        )));
    }
    Ok(())
}

/// Brute-force estimate of the weighted potential `N_a(z)` by uniform
/// rejection sampling of the bounding box: mean of
/// `ω(ς)·φ(y)·|y-z|^{a-n}` over box points that land in the body, scaled
/// by the box volume. Errors out if almost nothing is accepted (the box
/// inflation must be wrong in that case).
pub fn mc_volume_potential(
    body: &ConvexBody,
    spec: &PotentialSpec,
    z: Vec3,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(samples)?;
    let dim = body.dim();
    let half = 1.000_000_1 * body.max_h();
    let box_volume = (2.0 * half).powi(dim as i32);
    let scale_floor = 1e-12 * body.max_h();
    let a = spec.a;
    let n = dim as f64;

    let n_chunks = samples.div_ceil(CHUNK);
    let chunks: Vec<(f64, f64, u64)> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            let mut accepted = 0u64;
            for k in lo..hi {
                let mut rng = CounterRng::new(seed, k);
                let mut y = [0.0; 3];
                for coord in y.iter_mut().take(dim) {
                    *coord = rng.uniform(-half, half);
                }
                if !body.contains_exact(y) {
                    continue;
                }
                accepted += 1;
                let d = sphere::sub(y, z);
                let dist = sphere::norm(d).max(scale_floor);
                let sigma = sphere::scale(d, 1.0 / dist);
                let x = (spec.omega)(sigma) * (spec.phi)(y) * dist.powf(a - n);
                sum += x;
                sum_sq += x * x;
            }
            (sum, sum_sq, accepted)
        })
        .collect();

    let accepted: u64 = chunks.iter().map(|c| c.2).sum();
    if accepted < samples / 100 {
        return Err(Error::Numerical(format!(
            "acceptance rate {:.2}% is too low for a meaningful estimate",
            100.0 * accepted as f64 / samples as f64
        )));
    }
    Ok(reduce_chunks(&chunks, samples, box_volume))
}

/// Brute-force estimate of the chord integral
/// `I_q(Ω) = (1/(n ω_n)) ∫_{S^{n-1}} ∫_{u^⊥} X(u, b)^q db du`
/// (`X` the chord length of the line through `b` with direction `u`):
/// directions uniform on the sphere, base points uniform on a disk in
/// `u^⊥` slightly larger than the body; lines that miss contribute zero.
pub fn mc_chord_integral(
    body: &ConvexBody,
    q: f64,
    samples: u64,
    seed: u64,
) -> Result<McEstimate> {
    check_samples(samples)?;
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::Parameter(format!(
            "chord exponent must be positive (got q = {q})"
        )));
    }
    let dim = body.dim();
    let n = dim as f64;
    let r_base = 1.01 * body.max_h();
    // |S^{n-1}| and the base-disk measure in u^⊥.
    let (sphere_area, base_area) = if dim == 2 {
        (2.0 * std::f64::consts::PI, 2.0 * r_base)
    } else {
        (
            4.0 * std::f64::consts::PI,
            std::f64::consts::PI * r_base * r_base,
        )
    };
    let omega_n = if dim == 2 {
        std::f64::consts::PI
    } else {
        4.0 * std::f64::consts::PI / 3.0
    };
    let scale = sphere_area * base_area / (n * omega_n);

    let n_chunks = samples.div_ceil(CHUNK);
    let chunks: Vec<Result<(f64, f64, u64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(samples);
            let mut sum = 0.0;
            let mut sum_sq = 0.0;
            for k in lo..hi {
                let mut rng = CounterRng::new(seed, k);
                let u = rng.unit_vector(dim);
                // Orthonormal frame of u^⊥ and a uniform base point.
                let b = if dim == 2 {
                    let t = [-u[1], u[0], 0.0];
                    sphere::scale(t, rng.uniform(-r_base, r_base))
                } else {
                    let seed_axis = if u[0].abs() < 0.9 {
                        [1.0, 0.0, 0.0]
                    } else {
                        [0.0, 1.0, 0.0]
                    };
                    let t1 = sphere::normalize(sphere::sub(
                        seed_axis,
                        sphere::scale(u, sphere::dot(seed_axis, u)),
                    ));
                    let t2 = [
                        u[1] * t1[2] - u[2] * t1[1],
                        u[2] * t1[0] - u[0] * t1[2],
                        u[0] * t1[1] - u[1] * t1[0],
                    ];
                    let r = r_base * rng.uniform01().sqrt();
                    let ang = rng.uniform(0.0, 2.0 * std::f64::consts::PI);
                    sphere::add(
                        sphere::scale(t1, r * ang.cos()),
                        sphere::scale(t2, r * ang.sin()),
                    )
                };
                let x = body.chord_length(b, u)?.powf(q);
                sum += x;
                sum_sq += x * x;
            }
            Ok((sum, sum_sq, hi - lo))
        })
        .collect();
    let chunks = chunks.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(reduce_chunks(&chunks, samples, scale))
}

/// Five-point central finite difference of a scalar function:
/// first (`order = 1`) or second (`order = 2`) derivative at `x`,
/// fourth-order accurate in `step`.
pub fn fd_derivative(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    x: f64,
    step: f64,
    order: usize,
) -> Result<f64> {
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::Parameter(format!(
            "finite-difference step must be positive (got {step})"
        )));
    }
    let f2 = f(x + 2.0 * step)?;
    let f1 = f(x + step)?;
    let f_1 = f(x - step)?;
    let f_2 = f(x - 2.0 * step)?;
    match order {
        1 => Ok((-f2 + 8.0 * f1 - 8.0 * f_1 + f_2) / (12.0 * step)),
        2 => {
            let f0 = f(x)?;
            Ok((-f2 + 16.0 * f1 - 30.0 * f0 + 16.0 * f_1 - f_2) / (12.0 * step * step))
        }
        _ => Err(Error::Parameter(format!(
            "finite differences support orders 1 and 2 (got {order})"
        ))),
    }
}
