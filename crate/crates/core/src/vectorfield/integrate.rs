//! Dormand–Prince 5(4) with adaptive steps and cubic Hermite dense output.
//!
//! The state lives in ℂⁿ but every coefficient is real, so stepping the complex
//! vector is the same as stepping its 2n real coordinates; the error norm is
//! taken over real and imaginary parts separately.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::VectorField;
use crate::error::{Error, Result};
use crate::point::PointCn;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    /// Relative local error tolerance per step.
    pub tol: f64,
    /// Absolute floor of the error scale, as a fraction of `tol`.
    pub atol_ratio: f64,
    pub escape_radius: f64,
    pub max_steps: usize,
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            atol_ratio: 1e-3,
            escape_radius: 1e6,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowStatus {
    Completed,
    Diverged,
    Singular,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct IntegratorStats {
    pub steps: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted scaled error estimate (≤ 1 means within tolerance).
    pub max_error_estimate: f64,
}

/// Samples `(t_k, X(t_k, z₀))` of one trajectory. Times are strictly
/// monotone in the direction of integration (decreasing for reverse flow);
/// the first sample is `(0, z₀)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    pub points: Vec<PointCn>,
    #[serde(skip)]
    derivs: Vec<PointCn>,
    pub stats: IntegratorStats,
    pub status: FlowStatus,
}

impl FlowTrajectory {
    pub fn end(&self) -> &PointCn {
        self.points.last().expect("trajectory always holds z0")
    }

    pub fn end_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds t=0")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Cubic Hermite interpolation between accepted steps.
    pub fn at(&self, t: f64) -> Option<PointCn> {
        let n = self.times.len();
        if n == 1 {
            return (t == self.times[0]).then(|| self.points[0].clone());
        }
        let forward = self.times[n - 1] > self.times[0];
        let inside = if forward {
            t >= self.times[0] && t <= self.times[n - 1]
        } else {
            t <= self.times[0] && t >= self.times[n - 1]
        };
        if !inside {
            return None;
        }
        let k = match self
            .times
            .binary_search_by(|s| if forward { s.total_cmp(&t) } else { t.total_cmp(s) })
        {
            Ok(k) => return Some(self.points[k].clone()),
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.times[k], self.times[k + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let (y0, y1, f0, f1) = (
            &self.points[k],
            &self.points[k + 1],
            &self.derivs[k],
            &self.derivs[k + 1],
        );
        Some(PointCn(
            (0..y0.dim())
                .map(|i| h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i])
                .collect(),
        ))
    }
}

fn axpy(y: &[Complex64], terms: &[(f64, &[Complex64])], h: f64) -> Vec<Complex64> {
    let mut out = y.to_vec();
    for (c, k) in terms {
        if *c == 0.0 {
            continue;
        }
        for (o, ki) in out.iter_mut().zip(k.iter()) {
            *o += h * c * ki;
        }
    }
    out
}

struct Outcome {
    traj: FlowTrajectory,
    /// States at the requested stop times, in order.
    stops: Vec<PointCn>,
}

/// Core driver. Lands exactly on every time in `stops` (which must be sorted
/// in the direction of `t_end` and lie between 0 and `t_end`).
fn run(
    field: &VectorField,
    z0: &PointCn,
    t_end: f64,
    cfg: &IntegratorConfig,
    stops: &[f64],
    record: bool,
) -> Result<Outcome> {
    z0.check_dim(field.dim())?;
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidInput("integrator tolerance must be positive".into()));
    }
    if !t_end.is_finite() {
        return Err(Error::InvalidInput("non-finite end time".into()));
    }
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    let rhs = |y: &[Complex64]| -> Result<Vec<Complex64>> {
        Ok(field.eval(&PointCn(y.to_vec()))?.0)
    };

    let mut stats = IntegratorStats::default();
    let mut t = 0.0f64;
    let mut y = z0.0.clone();
    let mut f = rhs(&y)?;
    stats.evaluations += 1;

    let mut traj = FlowTrajectory {
        times: vec![0.0],
        points: vec![z0.clone()],
        derivs: vec![PointCn(f.clone())],
        stats: IntegratorStats::default(),
        status: FlowStatus::Completed,
    };
    let mut stop_out = Vec::with_capacity(stops.len());
    let mut next_stop = 0;
    while next_stop < stops.len() && stops[next_stop] == 0.0 {
        stop_out.push(z0.clone());
        next_stop += 1;
    }
    if t_end == 0.0 {
        traj.stats = stats;
        return Ok(Outcome {
            traj,
            stops: stop_out,
        });
    }

    let scale = |a: &[Complex64], b: &[Complex64]| -> Vec<f64> {
        a.iter()
            .zip(b)
            .flat_map(|(p, q)| {
                [
                    cfg.tol * (cfg.atol_ratio + p.re.abs().max(q.re.abs())),
                    cfg.tol * (cfg.atol_ratio + p.im.abs().max(q.im.abs())),
                ]
            })
            .collect()
    };

    // starting step (Hairer–Wanner heuristic, first half only)
    let d0 = y.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let d1 = f.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-3
    } else {
        0.01 * d0 / d1
    };
    h = h.min(t_end.abs()).max(1e-10) * dir;

    loop {
        let target = if next_stop < stops.len() {
            stops[next_stop]
        } else {
            t_end
        };
        let remaining = target - t;
        let mut hit = false;
        if (h - remaining) * dir >= 0.0 {
            h = remaining;
            hit = true;
        } else if (2.0 * h - remaining) * dir > 0.0 {
            // avoid a sliver step before the target
            h = remaining / 2.0;
        }

        if h.abs() < 1e-14 * t.abs().max(1.0) {
            if remaining.abs() < 1e-14 * t.abs().max(1.0) {
                // already at the target up to rounding
                t = target;
                h = dir * 1e-3;
                if next_stop < stops.len() {
                    stop_out.push(PointCn(y.clone()));
                    next_stop += 1;
                    continue;
                }
                break;
            }
            return Err(Error::StepUnderflow { t, h });
        }
        if stats.steps + stats.rejected >= cfg.max_steps {
            return Err(Error::StepUnderflow { t, h });
        }

        let k1 = &f;
        let k2 = rhs(&axpy(&y, &[(A21, k1)], h))?;
        let k3 = rhs(&axpy(&y, &[(A31, k1), (A32, &k2)], h))?;
        let k4 = rhs(&axpy(&y, &[(A41, k1), (A42, &k2), (A43, &k3)], h))?;
        let k5 = rhs(&axpy(&y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h))?;
        let k6 = rhs(&axpy(
            &y,
            &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        ))?;
        let y_new = axpy(&y, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = rhs(&y_new)?;
        stats.evaluations += 6;
        let _ = (C2, C3, C4, C5);

        let err_vec = axpy(
            &vec![Complex64::new(0.0, 0.0); y.len()],
            &[(E1, k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)],
            h,
        );
        let sc = scale(&y, &y_new);
        let err = err_vec
            .iter()
            .flat_map(|c| [c.re.abs(), c.im.abs()])
            .zip(&sc)
            .map(|(e, s)| e / s)
            .fold(0.0, f64::max);
        if !err.is_finite() {
            if y_new.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
                h *= 0.2;
                stats.rejected += 1;
                continue;
            }
            traj.status = FlowStatus::Singular;
            break;
        }

        if err <= 1.0 {
            t = if hit { target } else { t + h };
            y = y_new;
            f = k7;
            stats.steps += 1;
            stats.max_error_estimate = stats.max_error_estimate.max(err);
            if record {
                traj.times.push(t);
                traj.points.push(PointCn(y.clone()));
                traj.derivs.push(PointCn(f.clone()));
            }
            let norm = y.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if norm > cfg.escape_radius {
                traj.status = FlowStatus::Diverged;
                if !record {
                    traj.times.push(t);
                    traj.points.push(PointCn(y.clone()));
                    traj.derivs.push(PointCn(f.clone()));
                }
                break;
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            let h_prev = h;
            h *= fac;
            if hit {
                if next_stop < stops.len() {
                    stop_out.push(PointCn(y.clone()));
                    next_stop += 1;
                    // keep the step size from before the shortened step
                    h = h.abs().max(h_prev.abs()) * dir;
                    continue;
                }
                break;
            }
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }

    if !record && traj.status == FlowStatus::Completed {
        traj.times.push(t);
        traj.points.push(PointCn(y.clone()));
        traj.derivs.push(PointCn(f.clone()));
    }
    traj.stats = stats;
    Ok(Outcome {
        traj,
        stops: stop_out,
    })
}

/// Integrates `dX/dt = V(X)` from `z0` to `t_end` (negative for the reverse flow).
pub fn integrate(
    field: &VectorField,
    z0: &PointCn,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowTrajectory> {
    Ok(run(field, z0, t_end, cfg, &[], true)?.traj)
}

/// States at the given times (all of one sign, sorted by |t|). Fails with
/// `DivergedBeforeT` if the trajectory escapes first.
pub fn flow_at(
    field: &VectorField,
    z0: &PointCn,
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<PointCn>> {
    if times.is_empty() {
        return Ok(Vec::new());
    }
    let t_end = *times.last().unwrap();
    let dir = if t_end < 0.0 { -1.0 } else { 1.0 };
    if times.windows(2).any(|w| (w[1] - w[0]) * dir < 0.0) || times[0] * dir < 0.0 {
        return Err(Error::InvalidInput(
            "flow times must share a sign and be sorted by magnitude".into(),
        ));
    }
    let out = run(field, z0, t_end, cfg, times, false)?;
    if out.stops.len() < times.len() {
        return Err(Error::DivergedBeforeT(times[out.stops.len()]));
    }
    Ok(out.stops)
}

/// `X(t, z0)` or `DivergedBeforeT`.
pub fn flow_point(
    field: &VectorField,
    z0: &PointCn,
    t: f64,
    cfg: &IntegratorConfig,
) -> Result<PointCn> {
    Ok(flow_at(field, z0, &[t], cfg)?.pop().unwrap())
}
