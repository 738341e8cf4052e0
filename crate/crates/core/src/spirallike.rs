//! Trajectory tests of (strict) spirallikeness and the differential criterion
//! `Re Ṽ(r) < 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::{membership, BoundaryCloud, DomainSpec, Membership};
use crate::error::{Error, Result};
use crate::expr::{GradientForm, MapExpr, ScalarExpr};
use crate::linalg;
use crate::point::PointCn;
use crate::vectorfield::{flow_at, linearize, ClosedFormFlow, IntegratorConfig, VectorField};

/// `max Re Ṽ(r)` must stay below this for the criterion to hold.
pub const CRITERION_THRESHOLD: f64 = -1e-9;
/// Relative interior margin demanded at every grid time.
pub const STRICT_MARGIN: f64 = 1e-6;

/// `Re Σ_j V_j(z)·∂r/∂z_j`.
pub fn re_vtilde(v: &VectorField, r: &ScalarExpr, z: &PointCn) -> Result<f64> {
    CriterionForm::new(v, r)?.eval(z)
}

/// Precompiled `Re Ṽ(r)` for repeated evaluation.
pub struct CriterionForm<'a> {
    field: &'a VectorField,
    grad: GradientForm,
}

impl<'a> CriterionForm<'a> {
    pub fn new(field: &'a VectorField, r: &ScalarExpr) -> Result<Self> {
        if r.dim() != field.dim() {
            return Err(Error::DimensionMismatch {
                expected: field.dim(),
                got: r.dim(),
            });
        }
        Ok(Self {
            field,
            grad: GradientForm::new(r),
        })
    }

    pub fn eval(&self, z: &PointCn) -> Result<f64> {
        let vz = self.field.eval(z)?;
        let dr = self.grad.eval_dz(z)?;
        Ok(vz.coords().iter().zip(&dr).map(|(a, b)| (a * b).re).sum())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionVerdict {
    CriterionHolds,
    CriterionFails,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub max_value: f64,
    pub argmax: PointCn,
    pub points: usize,
    pub verdict: CriterionVerdict,
}

/// Maximum of `Re Ṽ(r)` over a cloud of region points.
pub fn criterion_sweep(v: &VectorField, r: &ScalarExpr, cloud: &[PointCn]) -> Result<CriterionReport> {
    if cloud.is_empty() {
        return Err(Error::InvalidInput("empty region cloud".into()));
    }
    let form = CriterionForm::new(v, r)?;
    let vals = cloud
        .par_iter()
        .map(|z| form.eval(z))
        .collect::<Result<Vec<f64>>>()?;
    let (k, max_value) = vals
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (k, x)| if x > acc.1 { (k, x) } else { acc });
    Ok(CriterionReport {
        max_value,
        argmax: cloud[k].clone(),
        points: cloud.len(),
        verdict: if max_value < CRITERION_THRESHOLD {
            CriterionVerdict::CriterionHolds
        } else {
            CriterionVerdict::CriterionFails
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpirallikeVerdict {
    EvidenceStrict,
    /// Every trajectory stayed inside, but some margin fell below the
    /// strictness threshold.
    EvidenceNonStrict { point: PointCn, time: f64, margin: f64 },
    /// `r(X(t, z)) ≥ −τ_b`; `index` is the position of `z` in the cloud.
    CounterexampleFound { point: PointCn, index: usize, time: f64, value: f64 },
    /// Integration failed or the decay clause was not met.
    Inconclusive { point: PointCn, time: f64, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpirallikeConfig {
    pub tol: f64,
    /// Time of the decay test; `None` picks `25/|max Re λ(DV(0))|`.
    pub t_max: Option<f64>,
    pub eps_origin: f64,
}

impl Default for SpirallikeConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            t_max: None,
            eps_origin: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub t_max: f64,
    pub eps_origin: f64,
    pub worst_norm: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpirallikeReport {
    pub verdict: SpirallikeVerdict,
    pub tgrid: Vec<f64>,
    pub cloud_seed: u64,
    pub cloud_size: usize,
    /// `min −r(X(t, z))` over all samples and grid times.
    pub worst_margin: f64,
    /// The same minimum for each grid time separately.
    pub min_margin_by_time: Vec<f64>,
    pub decay: Option<DecayCheck>,
}

impl SpirallikeReport {
    pub fn is_strict(&self) -> bool {
        self.verdict == SpirallikeVerdict::EvidenceStrict
    }
}

enum PointResult {
    /// `−r(X(t_k, z))` per grid time, then `‖X(T_max, z)‖`.
    Ok { margins: Vec<f64>, members: Vec<Membership>, final_norm: Option<f64> },
    Failed { time: f64, reason: String },
}

fn default_t_max(v: &VectorField) -> Result<Option<f64>> {
    let eig = linalg::eigenvalues(&linearize(v)?)?;
    let max_re = eig.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    Ok((max_re < 0.0).then(|| 25.0 / max_re.abs()))
}

/// Integrates every cloud point to every grid time and classifies the images.
pub fn check_strict_spirallike(
    v: &VectorField,
    d: &DomainSpec,
    cloud: &BoundaryCloud,
    tgrid: &[f64],
    cfg: &SpirallikeConfig,
) -> Result<SpirallikeReport> {
    if tgrid.is_empty() || tgrid.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::InvalidInput("time grid must be nonempty and positive".into()));
    }
    if cloud.points.is_empty() {
        return Err(Error::InvalidInput("empty boundary cloud".into()));
    }
    if v.dim() != d.dim() {
        return Err(Error::DimensionMismatch {
            expected: d.dim(),
            got: v.dim(),
        });
    }
    let mut grid = tgrid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let t_max = match cfg.t_max {
        Some(t) => Some(t),
        None => default_t_max(v)?,
    };
    let mut times = grid.clone();
    if let Some(t) = t_max {
        if t > *grid.last().unwrap() {
            times.push(t);
        }
    }
    let icfg = IntegratorConfig::with_tol(cfg.tol);

    let results: Vec<PointResult> = cloud
        .points
        .par_iter()
        .map(|z| -> Result<PointResult> {
            let pts = match flow_at(v, z, &times, &icfg) {
                Ok(p) => p,
                Err(Error::DivergedBeforeT(t)) => {
                    return Ok(PointResult::Failed {
                        time: t,
                        reason: "trajectory escaped before the grid time".into(),
                    })
                }
                Err(e @ (Error::StepUnderflow { .. } | Error::DomainError(_))) => {
                    return Ok(PointResult::Failed {
                        time: f64::NAN,
                        reason: e.to_string(),
                    })
                }
                Err(e) => return Err(e),
            };
            let mut margins = Vec::with_capacity(grid.len());
            let mut members = Vec::with_capacity(grid.len());
            for p in &pts[..grid.len()] {
                margins.push(-d.eval(p)?);
                members.push(membership(d, p)?);
            }
            let final_norm = t_max.map(|t| {
                let k = times.iter().position(|s| *s == t).unwrap_or(grid.len() - 1);
                pts[k].norm()
            });
            Ok(PointResult::Ok {
                margins,
                members,
                final_norm,
            })
        })
        .collect::<Result<_>>()?;

    let mut worst_margin = f64::INFINITY;
    let mut by_time = vec![f64::INFINITY; grid.len()];
    let mut counter: Option<(usize, usize, f64)> = None; // (time idx, point idx, r)
    let mut failed: Option<(usize, f64, String)> = None;
    let mut thin: Option<(usize, usize, f64)> = None;
    let mut worst_norm = 0.0f64;
    for (i, res) in results.iter().enumerate() {
        match res {
            PointResult::Failed { time, reason } => {
                if failed.is_none() {
                    failed = Some((i, *time, reason.clone()));
                }
            }
            PointResult::Ok {
                margins,
                members,
                final_norm,
            } => {
                let r0 = d.eval(&cloud.points[i])?.abs();
                for (k, (m, mem)) in margins.iter().zip(members).enumerate() {
                    worst_margin = worst_margin.min(*m);
                    by_time[k] = by_time[k].min(*m);
                    if !mem.is_interior() {
                        if counter.is_none_or(|(ck, ci, _)| (k, i) < (ck, ci)) {
                            counter = Some((k, i, -m));
                        }
                    } else if *m < STRICT_MARGIN * (1.0 + r0)
                        && thin.is_none_or(|(_, _, tm)| *m < tm)
                    {
                        thin = Some((k, i, *m));
                    }
                }
                if let Some(n) = final_norm {
                    worst_norm = worst_norm.max(*n);
                }
            }
        }
    }

    let decay = t_max.map(|t| DecayCheck {
        t_max: t,
        eps_origin: cfg.eps_origin,
        worst_norm,
        passed: worst_norm < cfg.eps_origin,
    });
    let verdict = if let Some((k, i, value)) = counter {
        SpirallikeVerdict::CounterexampleFound {
            point: cloud.points[i].clone(),
            index: i,
            time: grid[k],
            value,
        }
    } else if let Some((i, time, reason)) = failed {
        SpirallikeVerdict::Inconclusive {
            point: cloud.points[i].clone(),
            time,
            reason,
        }
    } else if t_max.is_none() {
        SpirallikeVerdict::Inconclusive {
            point: cloud.points[0].clone(),
            time: f64::NAN,
            reason: "DV(0) has an eigenvalue with Re ≥ 0; decay time undefined".into(),
        }
    } else if !decay.as_ref().unwrap().passed {
        SpirallikeVerdict::Inconclusive {
            point: cloud.points[0].clone(),
            time: t_max.unwrap_or(f64::NAN),
            reason: format!(
                "largest |X(T_max, z)| = {:e} is not below {:e}",
                worst_norm, cfg.eps_origin
            ),
        }
    } else if let Some((k, i, margin)) = thin {
        SpirallikeVerdict::EvidenceNonStrict {
            point: cloud.points[i].clone(),
            time: grid[k],
            margin,
        }
    } else {
        SpirallikeVerdict::EvidenceStrict
    };

    Ok(SpirallikeReport {
        verdict,
        tgrid: grid,
        cloud_seed: cloud.seed,
        cloud_size: cloud.points.len(),
        worst_margin,
        min_margin_by_time: by_time,
        decay,
    })
}

/// `(−z₀, V(z₁, …, zₙ))` on ℂ^{n+1}, with the product flow
/// `(e^{−t}z₀, X(t, ·))` attached when `V` has a closed form.
pub fn product_field(v: &VectorField) -> Result<VectorField> {
    let n = v.dim() + 1;
    let mut comps = vec![ScalarExpr::var(0, n).neg()];
    comps.extend(v.components().iter().map(|c| c.shift_vars(1)));
    let out = VectorField::new(MapExpr::new(comps)?)?;
    Ok(match v.closed_form() {
        Some(inner) => out.with_closed_form(ClosedFormFlow::Prepend {
            inner: Box::new(inner.clone()),
        }),
        None => out,
    })
}
