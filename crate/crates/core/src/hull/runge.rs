//! The two geometric inclusions behind `{X₋ₜ(D)}` being a neighbourhood
//! basis of `D̄`: forward images of `D̄` fall into `D`, and short backward
//! images stay inside a given neighbourhood `U`.

use serde::{Deserialize, Serialize};

use crate::domains::{membership, DomainSpec};
use crate::error::{Error, Result};
use crate::point::PointCn;
use crate::vectorfield::{flow_at, jacobian_sup_bound, IntegratorConfig, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RungeConfig {
    pub tol: f64,
    /// Resolution of the scan for the end of clause (b).
    pub scan_step: f64,
    /// Scan horizon; `None` uses `max(2·max tgrid, 1)`.
    pub scan_max: Option<f64>,
}

impl Default for RungeConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            scan_step: 1e-3,
            scan_max: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungeRow {
    pub t: f64,
    /// `X_t(D̄-cloud) ⊂ D`.
    pub a_holds: bool,
    pub a_min_margin: f64,
    /// `X₋ₜ(D̄-cloud) ⊂ U`.
    pub b_holds: bool,
    pub b_min_margin: f64,
    pub within_window: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RungeReport {
    pub rows: Vec<RungeRow>,
    /// `B = sup ‖DV‖` over the closure sample.
    pub jacobian_bound: f64,
    /// `(1/B)·ln(3/2)`.
    pub log_window: f64,
    /// First scanned time at which clause (b) fails, if any.
    pub b_limit: Option<f64>,
    /// Last scanned time at which clause (b) still held.
    pub b_last_pass: f64,
    /// Admissible window, strictly below `min{(1/B)ln(3/2), b_last_pass}`.
    pub t_prime: f64,
    pub scan_step: f64,
    pub scan_max: f64,
}

impl RungeReport {
    pub fn clause_a(&self) -> bool {
        self.rows.iter().all(|r| r.a_holds)
    }

    /// Clause (b) on every grid time inside the computed window.
    pub fn clause_b_in_window(&self) -> bool {
        self.rows.iter().filter(|r| r.within_window).all(|r| r.b_holds)
    }
}

/// Radial layers of a boundary cloud of a domain star-shaped about 0; used as
/// a sample of the closure.
pub fn closure_layers(cloud: &[PointCn]) -> Vec<PointCn> {
    let mut out = Vec::with_capacity(cloud.len() * 4 + 1);
    out.push(PointCn::origin(cloud[0].dim()));
    for s in [0.25, 0.5, 0.75, 1.0] {
        out.extend(cloud.iter().map(|p| p * s));
    }
    out
}

pub fn runge_basis_check(
    v: &VectorField,
    d: &DomainSpec,
    tgrid: &[f64],
    cloud: &[PointCn],
    u: &DomainSpec,
    cfg: &RungeConfig,
) -> Result<RungeReport> {
    if cloud.is_empty() {
        return Err(Error::InvalidInput("empty cloud".into()));
    }
    if tgrid.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidInput("grid times must be positive".into()));
    }
    if !(cfg.scan_step > 0.0) {
        return Err(Error::InvalidInput("scan step must be positive".into()));
    }
    let icfg = IntegratorConfig::with_tol(cfg.tol);
    let mut grid = tgrid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let bound = jacobian_sup_bound(v, &closure_layers(cloud))?;
    let log_window = if bound > 0.0 {
        1.5f64.ln() / bound
    } else {
        f64::INFINITY
    };

    // clause (b) scan on a uniform grid
    let scan_max = cfg
        .scan_max
        .unwrap_or_else(|| (2.0 * grid.last().copied().unwrap_or(0.0)).max(1.0));
    let steps = (scan_max / cfg.scan_step).round() as usize;
    let scan: Vec<f64> = (1..=steps).map(|k| -(k as f64) * cfg.scan_step).collect();
    let mut first_fail: Option<usize> = None;
    for z in cloud {
        let limit = first_fail.unwrap_or(steps);
        if limit == 0 {
            break;
        }
        let times = &scan[..limit];
        let fail = match flow_at(v, z, times, &icfg) {
            Ok(pts) => {
                let mut f = None;
                for (k, p) in pts.iter().enumerate() {
                    if !membership(u, p)?.is_interior() {
                        f = Some(k);
                        break;
                    }
                }
                f
            }
            Err(Error::DivergedBeforeT(t)) => times.iter().position(|s| *s == t),
            Err(e) => return Err(e),
        };
        if let Some(k) = fail {
            first_fail = Some(first_fail.map_or(k, |f| f.min(k)));
        }
    }
    let b_limit = first_fail.map(|k| (k + 1) as f64 * cfg.scan_step);
    let b_last_pass = first_fail.map_or(scan_max, |k| k as f64 * cfg.scan_step);
    let t_prime = (1.0 - 1e-3) * log_window.min(b_last_pass);

    let mut rows = Vec::with_capacity(grid.len());
    for &t in &grid {
        let mut a_min = f64::INFINITY;
        let mut b_min = f64::INFINITY;
        for z in cloud {
            a_min = a_min.min(match v.flow(z, t, cfg.tol) {
                Ok(p) => membership(d, &p)?.signed_margin(),
                Err(Error::DivergedBeforeT(_)) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            });
            b_min = b_min.min(match v.flow(z, -t, cfg.tol) {
                Ok(p) => membership(u, &p)?.signed_margin(),
                Err(Error::DivergedBeforeT(_)) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            });
        }
        rows.push(RungeRow {
            t,
            a_holds: a_min > 0.0,
            a_min_margin: a_min,
            b_holds: b_min > 0.0,
            b_min_margin: b_min,
            within_window: t < t_prime,
        });
    }

    Ok(RungeReport {
        rows,
        jacobian_bound: bound,
        log_window,
        b_limit,
        b_last_pass,
        t_prime,
        scan_step: cfg.scan_step,
        scan_max,
    })
}
