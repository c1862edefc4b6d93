//! Explicit time integration of the nonlocal Gauss curvature flow
//!
//! ```text
//! ∂_t h = − f(x) κ / Ṽ_{q-1}(Ω_t, ∇̄h)  +  h ,      κ = 1 / det(∇²h + hI),
//! ```
//!
//! whose stationary points solve `h · det(∇²h + hI) · Ṽ_{q-1}(Ω, F) = f`.
//! The stepper is two-dimensional (the evaluators it calls support dim 3,
//! but the update needs the spectral curvature factor of the circle grid).
//!
//! Each step performs exactly one sweep: per node the curvature factor
//! `b = h'' + h` (spectral), the dual quermassintegral at the boundary
//! point (lit-hemisphere Jacobi rule), the velocity and the stationarity
//! residual; the chord integral `I_q` comes free from the same sweep
//! through its boundary-measure representation. When renormalization is
//! on, the body is first rescaled to the target `I_q` analytically —
//! `b → λb`, `Ṽ → λ^{q-1}Ṽ` — so no second sweep is needed, and the
//! discrete monotonicity of `J = ∫ f log h` holds in the same inner
//! product that defines the renormalization.
//!
//! Step size: explicit Euler with
//! `Δt = c · min( min_x [bṼ/(f(1+|v|))], 4·min_x [b²Ṽ/f] / k_max² )`.
//! The first entry is the documented curvature-scale bound; the second is
//! the linear stability limit of the highest spectral mode `k_max = N/2`
//! under the curvature term (amplification `1 - Δt·f k²/(b²Ṽ)`), without
//! which the update self-excites grid noise long before the convexity
//! guard can see it. A step whose result would lose positivity or strict
//! convexity is rejected and retried with half the step; below `1e-12`
//! the solver reports a stall.

use std::io::Write as IoWrite;

use rayon::prelude::*;

use crate::body::{ConvexBody, SupportField};
use crate::chord;
use crate::error::{Error, Result};
use crate::riesz;
use crate::sphere::Field;

/// Smallest admissible time step before a run is declared stalled.
pub const DT_UNDERFLOW: f64 = 1e-12;

/// Step-size selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtPolicy {
    /// Constant step (still subject to rejection halving within a step).
    Fixed(f64),
    /// Curvature-scale bound intersected with the spectral stability
    /// limit, scaled by the safety factor.
    Adaptive { safety: f64 },
}

/// Configuration of a flow run.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    /// Chord exponent; the convergence theory needs `q > 3`, smaller
    /// values down to `q > 1` run with a warning.
    pub q: f64,
    /// Positive data `f` on the grid.
    pub f: Field,
    pub dt: DtPolicy,
    pub max_steps: usize,
    /// Convergence tolerance on `max|∂_t h| / max h`.
    pub tolerance: f64,
    /// Rescale to the target chord integral at every step.
    pub renormalize: bool,
    /// Steps between trace rows / convergence checks.
    pub monitor_stride: usize,
}

impl FlowConfig {
    pub fn new(q: f64, f: Field) -> FlowConfig {
        FlowConfig {
            q,
            f,
            dt: DtPolicy::Adaptive { safety: 0.4 },
            max_steps: 100_000,
            tolerance: 1e-6,
            renormalize: true,
            monitor_stride: 10,
        }
    }

    /// Checks invariants and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        if !(self.q.is_finite() && self.q > 1.0) {
            return Err(Error::Parameter(format!(
                "the flow needs q > 1 so that Ṽ_{{q-1}} is defined (got q = {})",
                self.q
            )));
        }
        if self.q <= 3.0 {
            warnings.push(format!(
                "q = {} is outside the range q > 3 covered by the convergence \
                 theory; the run may not settle",
                self.q
            ));
        }
        let f = self.f.values();
        if f.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Parameter(
                "flow data f must be strictly positive at every node".into(),
            ));
        }
        let grid = self.f.grid();
        if grid.dim() != 2 {
            return Err(Error::Unsupported(
                "the flow stepper updates circle grids only".into(),
            ));
        }
        let mut defect = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..grid.len() {
            let j = grid.antipodal_index(i);
            defect = defect.max((f[i] - f[j]).abs());
            scale = scale.max(f[i].abs());
        }
        if defect > 1e-10 * scale {
            warnings.push(format!(
                "f is not even (defect {defect:e}); symmetry monitoring is \
                 disabled and the C0 bounds of the theory may not hold"
            ));
        }
        match self.dt {
            DtPolicy::Fixed(dt) => {
                if !(dt.is_finite() && dt >= 0.0) {
                    return Err(Error::Parameter(format!(
                        "fixed time step must be nonnegative (got {dt})"
                    )));
                }
            }
            DtPolicy::Adaptive { safety } => {
                if !(safety > 0.0 && safety <= 1.0) {
                    return Err(Error::Parameter(format!(
                        "safety factor must lie in (0, 1] (got {safety})"
                    )));
                }
            }
        }
        if self.monitor_stride == 0 {
            return Err(Error::Parameter("monitor stride must be positive".into()));
        }
        Ok(warnings)
    }
}

/// Evolving state of a flow run.
#[derive(Debug)]
pub struct FlowState {
    pub body: ConvexBody,
    pub time: f64,
    pub step: usize,
    /// Carried-over step bound; rejection halvings persist across steps.
    dt_carry: f64,
}

impl FlowState {
    pub fn new(body: ConvexBody) -> FlowState {
        FlowState {
            body,
            time: 0.0,
            step: 0,
            dt_carry: f64::INFINITY,
        }
    }
}

/// Per-step monitors, sampled after renormalization and before the
/// update.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub dt: f64,
    /// `max|∂_t h| / max h` of the sweep.
    pub speed: f64,
    /// Chord integral of the state the velocity was computed on.
    pub iq: f64,
    /// Chord integral before renormalization (equal to `iq` when off).
    pub iq_raw: f64,
    pub j: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    /// `max |h·b·Ṽ_{q-1} - f|` over the grid.
    pub residual: f64,
}

/// One row of the run trace.
#[derive(Debug, Clone, Copy)]
pub struct TraceRow {
    pub t: f64,
    pub iq: f64,
    pub j: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub residual: f64,
}

/// Sampled time series of the monitored quantities.
#[derive(Debug, Clone, Default)]
pub struct FlowTrace {
    pub rows: Vec<TraceRow>,
}

impl FlowTrace {
    /// Writes the trace as CSV with the standard header.
    pub fn write_csv(&self, out: &mut dyn IoWrite) -> std::io::Result<()> {
        writeln!(out, "t,Iq,J,hmin,hmax,bmin,bmax,residual")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t, r.iq, r.j, r.h_min, r.h_max, r.b_min, r.b_max, r.residual
            )?;
        }
        Ok(())
    }
}

/// Terminal condition of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowStatus {
    Converged,
    MaxSteps,
    Stalled,
    ConvexityLost,
}

impl std::fmt::Display for FlowStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FlowStatus::Converged => "converged",
            FlowStatus::MaxSteps => "max-steps",
            FlowStatus::Stalled => "stalled",
            FlowStatus::ConvexityLost => "convexity-lost",
        })
    }
}

/// Result of a completed run.
#[derive(Debug)]
pub struct FlowOutcome {
    pub status: FlowStatus,
    pub steps: usize,
    pub time: f64,
    pub body: ConvexBody,
    pub trace: FlowTrace,
    /// `max |h·b·Ṽ_{q-1} - f|` of the last sweep.
    pub final_residual: f64,
    /// Largest relative deviation of the raw chord integral from its
    /// reference (the target when renormalizing, else the initial value).
    pub iq_drift: f64,
    /// Total decrease of `J` between the first and last trace rows.
    pub j_drop: f64,
    pub warnings: Vec<String>,
}

/// Target chord integral fixed by the data:
/// `I_target = 2q ∫f / ((q+n-1) ω_n)`.
pub fn chord_target(dim: usize, q: f64, f: &Field) -> f64 {
    2.0 * q * f.integrate() / (chord::homogeneity_order(dim, q) * chord::unit_ball_volume(dim))
}

/// `J(Ω) = ∫ f log h`: the descending functional of the flow.
pub fn functional_j(body: &ConvexBody, f: &Field) -> Result<f64> {
    if !f.grid().same_layout(body.grid()) {
        return Err(Error::Grid("data field lives on a different grid".into()));
    }
    let h = body.support().values();
    if h.iter().any(|v| *v <= 0.0) {
        return Err(Error::Domain(
            "J needs a strictly positive support function".into(),
        ));
    }
    let fv = f.values();
    Ok(body
        .grid()
        .integrate_map(|i| fv[i] * h[i].ln()))
}

/// Rescales a body so its chord integral matches the target for `(q, f)`.
pub fn normalize_initial(body: &ConvexBody, q: f64, f: &Field) -> Result<ConvexBody> {
    if !f.grid().same_layout(body.grid()) {
        return Err(Error::Grid("data field lives on a different grid".into()));
    }
    let target = chord_target(body.dim(), q, f);
    let params = chord::ChordParams::new(q);
    let iq = chord::chord_integral(body, &params, chord::ChordRoute::Measure)?.value;
    let lambda = (target / iq).powf(1.0 / chord::homogeneity_order(body.dim(), q));
    body.rescale(lambda)
}

/// Flow velocity `-f κ / Ṽ_{q-1} + h` per node (no renormalization).
pub fn velocity(body: &ConvexBody, q: f64, f: &Field) -> Result<Vec<f64>> {
    let sweep = sweep(body, q, f.values())?;
    Ok(sweep.velocity)
}

/// One velocity sweep: everything the step needs from the current state.
struct Sweep {
    b: Vec<f64>,
    querm: Vec<f64>,
    velocity: Vec<f64>,
    /// Measure-route chord integral of the swept state.
    iq: f64,
    residual: f64,
    b_min: f64,
    b_max: f64,
}

fn sweep(body: &ConvexBody, q: f64, f: &[f64]) -> Result<Sweep> {
    let grid = body.grid();
    let n = grid.len();
    if f.len() != n {
        return Err(Error::Grid(format!(
            "data field has {} entries for a grid of {n}",
            f.len()
        )));
    }
    let h = body.support().values();
    let querm: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| riesz::querm_at_boundary_node(body, q - 1.0, i))
        .collect::<Result<Vec<_>>>()?;
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        b.push(body.det_b(i)?);
    }
    let mut velocity = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    for i in 0..n {
        velocity.push(-f[i] / (b[i] * querm[i]) + h[i]);
        residual = residual.max((h[i] * b[i] * querm[i] - f[i]).abs());
    }
    // I_q through the boundary chord measure, from the same sweep.
    let order = chord::homogeneity_order(body.dim(), q);
    let scale = 2.0 * q / chord::unit_ball_volume(body.dim());
    let iq = grid.integrate_map(|i| scale * h[i] * querm[i] * b[i] / order);
    let (mut b_min, mut b_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for &bi in &b {
        b_min = b_min.min(bi);
        b_max = b_max.max(bi);
    }
    Ok(Sweep {
        b,
        querm,
        velocity,
        iq,
        residual,
        b_min,
        b_max,
    })
}

/// Advances the state by one accepted step and reports the monitors of
/// the swept (pre-update) state. Errors on time-step underflow or a
/// degenerate current state; the caller maps those to run statuses.
pub fn step(state: &mut FlowState, config: &FlowConfig) -> Result<StepInfo> {
    let q = config.q;
    let f = config.f.values();
    let grid = state.body.grid().clone();
    if !config.f.grid().same_layout(&grid) {
        return Err(Error::Grid("data field lives on a different grid".into()));
    }

    let mut sw = sweep(&state.body, q, f)?;
    let iq_raw = sw.iq;

    // Renormalize analytically: the sweep of the rescaled body follows
    // from homogeneity (b → λb, Ṽ → λ^{q-1}Ṽ), so one sweep suffices.
    if config.renormalize {
        let target = chord_target(2, q, &config.f);
        let order = chord::homogeneity_order(2, q);
        let lambda = (target / sw.iq).powf(1.0 / order);
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::Numerical(format!(
                "renormalization factor degenerated (I_q = {}, target = {target})",
                sw.iq
            )));
        }
        if (lambda - 1.0).abs() > 1e-15 {
            state.body = state.body.rescale(lambda)?;
            let pow_qm1 = lambda.powf(q - 1.0);
            let h = state.body.support().values();
            for i in 0..grid.len() {
                sw.b[i] *= lambda;
                sw.querm[i] *= pow_qm1;
                sw.velocity[i] = -f[i] / (sw.b[i] * sw.querm[i]) + h[i];
            }
            sw.b_min *= lambda;
            sw.b_max *= lambda;
            sw.iq = target;
            let mut residual = 0.0f64;
            for i in 0..grid.len() {
                residual = residual.max((h[i] * sw.b[i] * sw.querm[i] - f[i]).abs());
            }
            sw.residual = residual;
        }
    }

    let h = state.body.support().values().to_vec();
    let h_max = h.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let h_min = h.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let speed_abs = sw
        .velocity
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));

    // Step bound: documented curvature-scale bound intersected with the
    // explicit-Euler stability limit of the top spectral mode.
    let mut dt = match config.dt {
        DtPolicy::Fixed(dt) => dt,
        DtPolicy::Adaptive { safety } => {
            let mut scale_bound = f64::INFINITY;
            let mut mode_bound = f64::INFINITY;
            for i in 0..grid.len() {
                let bv = sw.b[i] * sw.querm[i];
                scale_bound = scale_bound.min(bv / (f[i] * (1.0 + sw.velocity[i].abs())));
                mode_bound = mode_bound.min(sw.b[i] * bv / f[i]);
            }
            let k_max = grid.len() as f64 / 2.0;
            let dt = safety * scale_bound.min(4.0 * mode_bound / (k_max * k_max));
            dt.min(state.dt_carry)
        }
    };

    let info = |dt: f64| StepInfo {
        dt,
        speed: speed_abs / h_max,
        iq: sw.iq,
        iq_raw,
        j: grid.integrate_map(|i| f[i] * h[i].ln()),
        h_min,
        h_max,
        b_min: sw.b_min,
        b_max: sw.b_max,
        residual: sw.residual,
    };

    if dt == 0.0 {
        state.step += 1;
        return Ok(info(0.0));
    }

    // Commit the first step size whose result stays positive and strictly
    // convex; halve on rejection.
    loop {
        let trial: Vec<f64> = (0..grid.len())
            .map(|i| h[i] + dt * sw.velocity[i])
            .collect();
        match SupportField::new(grid.clone(), trial).and_then(ConvexBody::from_support) {
            Ok(next) => {
                state.body = next;
                state.time += dt;
                state.step += 1;
                if let DtPolicy::Adaptive { .. } = config.dt {
                    // Rejection halvings persist; accepted steps may regrow
                    // slowly, still capped by the per-step bounds.
                    state.dt_carry = dt * 1.25;
                }
                return Ok(info(dt));
            }
            Err(Error::Domain(_)) | Err(Error::DegenerateConvexity { .. }) => {
                dt *= 0.5;
                if dt < DT_UNDERFLOW {
                    return Err(Error::Numerical(format!(
                        "time step underflow at t = {} (step {}): every trial \
                         loses positivity or convexity",
                        state.time, state.step
                    )));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Runs the flow to a terminal status. Convergence requires
/// `max|∂_t h|/max h ≤ tolerance` at three consecutive monitor checks.
pub fn run(config: &FlowConfig, initial: ConvexBody) -> Result<FlowOutcome> {
    let warnings = config.validate()?;
    if let DtPolicy::Fixed(dt) = config.dt {
        if dt <= 0.0 {
            return Err(Error::Parameter(
                "a run needs a positive fixed time step".into(),
            ));
        }
    }
    if !initial.grid().same_layout(config.f.grid()) {
        return Err(Error::Grid(
            "initial body and data field live on different grids".into(),
        ));
    }

    let target = chord_target(2, config.q, &config.f);
    let iq_ref = if config.renormalize {
        target
    } else {
        let params = chord::ChordParams::new(config.q);
        chord::chord_integral(&initial, &params, chord::ChordRoute::Measure)?.value
    };

    let mut warnings = warnings;
    let mut state = FlowState::new(initial);
    let mut trace = FlowTrace::default();
    let mut consecutive = 0usize;
    let mut iq_drift = 0.0f64;
    let mut status = FlowStatus::MaxSteps;
    let mut final_residual = f64::NAN;

    while state.step < config.max_steps {
        let at_monitor = state.step % config.monitor_stride == 0;
        let info = match step(&mut state, config) {
            Ok(info) => info,
            Err(Error::Numerical(msg)) => {
                warnings.push(msg);
                status = FlowStatus::Stalled;
                break;
            }
            Err(Error::DegenerateConvexity { .. }) | Err(Error::Domain(_)) => {
                status = FlowStatus::ConvexityLost;
                break;
            }
            Err(e) => return Err(e),
        };
        final_residual = info.residual;
        iq_drift = iq_drift.max((info.iq_raw - iq_ref).abs() / iq_ref.abs());
        if at_monitor {
            trace.rows.push(TraceRow {
                t: state.time - info.dt,
                iq: info.iq,
                j: info.j,
                h_min: info.h_min,
                h_max: info.h_max,
                b_min: info.b_min,
                b_max: info.b_max,
                residual: info.residual,
            });
            if info.speed <= config.tolerance {
                consecutive += 1;
                if consecutive >= 3 {
                    status = FlowStatus::Converged;
                    break;
                }
            } else {
                consecutive = 0;
            }
        }
    }

    let j_drop = match (trace.rows.first(), trace.rows.last()) {
        (Some(a), Some(b)) => a.j - b.j,
        _ => 0.0,
    };
    Ok(FlowOutcome {
        status,
        steps: state.step,
        time: state.time,
        body: state.body,
        trace,
        final_residual,
        iq_drift,
        j_drop,
        warnings,
    })
}

/// Fits the growth exponent of the chord-integral gap from a fixed-step
/// trace produced with renormalization off: least-squares slope of
/// `log|I_q(t) - target|` over the first decade of gap growth. The
/// expected exponent for the pair `(q, dim)` is `q + dim - 1`.
pub fn chord_law_check(trace: &FlowTrace, q: f64, dim: usize, target: f64) -> Result<f64> {
    let expected = chord::homogeneity_order(dim, q);
    let rows = &trace.rows;
    if rows.len() < 3 {
        return Err(Error::Parameter(
            "the law check needs at least three trace rows".into(),
        ));
    }
    let g0 = rows[0].iq - target;
    if g0.abs() <= 1e-12 * target.abs() {
        return Err(Error::Numerical(
            "initial chord-integral gap underflows; nothing to fit".into(),
        ));
    }
    let sign = g0.signum();
    let mut pts = Vec::new();
    for r in rows {
        let gap = r.iq - target;
        if gap.signum() != sign {
            return Err(Error::Numerical(
                "chord-integral gap changed sign along the trace".into(),
            ));
        }
        if gap.abs() > 10.0 * g0.abs() && pts.len() >= 3 {
            break;
        }
        pts.push((r.t, gap.abs().ln()));
    }
    if pts.len() < 3 {
        return Err(Error::Numerical(format!(
            "fewer than three usable rows in the first decade of gap growth \
             (expected exponent ≈ {expected})"
        )));
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = m * sxx - sx * sx;
    if denom <= 0.0 {
        return Err(Error::Numerical(
            "degenerate time axis in the law-check fit".into(),
        ));
    }
    Ok((m * sxy - sx * sy) / denom)
}
