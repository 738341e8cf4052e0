//! Holomorphic vector fields on ℂⁿ vanishing at the origin: evaluation,
//! linearization, stability classification and flow integration.

mod closed;
mod integrate;

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{GradientForm, MapExpr, ScalarExpr};
use crate::linalg::{self, CMatrix};
use crate::point::PointCn;
use crate::sampling;

pub use closed::ClosedFormFlow;
pub use integrate::{
    flow_at, flow_point, integrate, FlowStatus, FlowTrajectory, IntegratorConfig, IntegratorStats,
};

/// Tolerance on `|V(0)|` for a field to count as vanishing at the origin.
pub const ORIGIN_TOL: f64 = 1e-12;
/// Eigenvalues must have real part below this for a stable verdict.
pub const STABLE_THRESHOLD: f64 = -1e-9;

#[derive(Debug, Clone)]
pub struct VectorField {
    map: MapExpr,
    jac: OnceLock<Arc<Vec<GradientForm>>>,
    closed_form: Option<ClosedFormFlow>,
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        self.map == other.map && self.closed_form == other.closed_form
    }
}

impl VectorField {
    pub fn new(map: MapExpr) -> Result<Self> {
        let n = map.domain_dim();
        if map.target_dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: map.target_dim(),
            });
        }
        if let Some(k) = map.components.iter().position(|c| !c.is_holomorphic()) {
            return Err(Error::NotHolomorphic(format!(
                "component {} `{}` depends on conjugates",
                k + 1,
                map.components[k]
            )));
        }
        let v0 = map.eval(&PointCn::origin(n))?;
        if v0.norm() > ORIGIN_TOL {
            return Err(Error::NonZeroAtOrigin(v0.norm()));
        }
        Ok(Self {
            map,
            jac: OnceLock::new(),
            closed_form: None,
        })
    }

    /// One expression per component; the dimension is the number of components.
    pub fn parse(texts: &[impl AsRef<str>]) -> Result<Self> {
        Self::new(MapExpr::parse(texts, texts.len())?)
    }

    pub(crate) fn with_closed_form(mut self, flow: ClosedFormFlow) -> Self {
        self.closed_form = Some(flow);
        self
    }

    pub fn dim(&self) -> usize {
        self.map.domain_dim()
    }

    pub fn map(&self) -> &MapExpr {
        &self.map
    }

    pub fn components(&self) -> &[ScalarExpr] {
        &self.map.components
    }

    pub fn texts(&self) -> Vec<String> {
        self.map.texts()
    }

    pub fn closed_form(&self) -> Option<&ClosedFormFlow> {
        self.closed_form.as_ref()
    }

    /// Closed-form `X(t, z)` when the field carries one.
    pub fn exact_flow(&self, t: f64, z: &PointCn) -> Option<Result<PointCn>> {
        self.closed_form.as_ref().map(|f| f.eval(t, z))
    }

    pub fn eval(&self, p: &PointCn) -> Result<PointCn> {
        p.check_dim(self.dim())?;
        self.map.eval(p)
    }

    fn forms(&self) -> &[GradientForm] {
        self.jac
            .get_or_init(|| Arc::new(self.map.components.iter().map(GradientForm::new).collect()))
    }

    /// Complex Jacobian `∂V_j/∂z_k` at `p`.
    pub fn jacobian(&self, p: &PointCn) -> Result<CMatrix> {
        p.check_dim(self.dim())?;
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for (j, form) in self.forms().iter().enumerate() {
            for (k, v) in form.eval_dz(p)?.into_iter().enumerate() {
                m[(j, k)] = v;
            }
        }
        Ok(m)
    }

    /// Componentwise sum of two fields on the same space.
    pub fn sum(&self, other: &VectorField) -> Result<VectorField> {
        if other.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        VectorField::new(MapExpr::new(
            self.components()
                .iter()
                .zip(other.components())
                .map(|(a, b)| a.add(b))
                .collect(),
        )?)
    }

    /// Relabels coordinates: component `j` of the result is `V_{π(j)}` with
    /// `z_{π(k)}` renamed to `z_k`.
    pub fn permuted(&self, perm: &[usize]) -> Result<VectorField> {
        let n = self.dim();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if check != (0..n).collect::<Vec<_>>() {
            return Err(Error::InvalidInput("not a permutation".into()));
        }
        let mut images = vec![ScalarExpr::var(0, n); n];
        for (k, &pk) in perm.iter().enumerate() {
            images[pk] = ScalarExpr::var(k, n);
        }
        VectorField::new(MapExpr::new(
            perm.iter()
                .map(|&pj| self.components()[pj].substitute(&images))
                .collect::<Result<_>>()?,
        )?)
    }

    pub fn integrate(&self, z0: &PointCn, t_end: f64, tol: f64) -> Result<FlowTrajectory> {
        integrate(self, z0, t_end, &IntegratorConfig::with_tol(tol))
    }

    /// `X(t, z)` by numerical integration.
    pub fn flow(&self, z: &PointCn, t: f64, tol: f64) -> Result<PointCn> {
        flow_point(self, z, t, &IntegratorConfig::with_tol(tol))
    }
}

/// `DV(0)`.
pub fn linearize(v: &VectorField) -> Result<CMatrix> {
    v.jacobian(&PointCn::origin(v.dim()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StabilityVerdict {
    HyperbolicStable,
    Inconclusive { reason: String },
}

/// Random starts in a ball, each integrated to `t_final`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayProbe {
    pub starts: usize,
    pub radius: f64,
    pub t_final: f64,
    pub eps: f64,
    pub seed: u64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub probe: DecayProbe,
    pub reached: usize,
    pub worst_final_norm: f64,
    /// Starts that did not reach the `eps`-ball (or failed to integrate).
    pub failures: Vec<PointCn>,
}

impl DecayReport {
    pub fn all_reached(&self) -> bool {
        self.reached == self.probe.starts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub verdict: StabilityVerdict,
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    pub sampled: Option<DecayReport>,
    pub scope: String,
}

impl StabilityReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == StabilityVerdict::HyperbolicStable
    }
}

const STABILITY_SCOPE: &str = "local spectral test of DV(0) only; global asymptotic stability \
is not decidable here and sampled trajectories are evidence, not proof";

pub fn classify_stability(v: &VectorField, probe: Option<&DecayProbe>) -> Result<StabilityReport> {
    let eigenvalues = linalg::eigenvalues(&linearize(v)?)?;
    let max_real_part = eigenvalues.iter().map(|e| e.re).fold(f64::NEG_INFINITY, f64::max);
    let verdict = if max_real_part < STABLE_THRESHOLD {
        StabilityVerdict::HyperbolicStable
    } else if max_real_part >= 0.0 {
        StabilityVerdict::Inconclusive {
            reason: "eigenvalue real part ≥ 0".into(),
        }
    } else {
        StabilityVerdict::Inconclusive {
            reason: format!("eigenvalue real part within {:e} of 0", -STABLE_THRESHOLD),
        }
    };
    let sampled = probe.map(|p| sample_decay(v, p));
    Ok(StabilityReport {
        verdict,
        eigenvalues,
        max_real_part,
        sampled,
        scope: STABILITY_SCOPE.into(),
    })
}

fn sample_decay(v: &VectorField, probe: &DecayProbe) -> DecayReport {
    let cfg = IntegratorConfig::with_tol(probe.tol);
    let outcomes: Vec<(PointCn, Option<f64>)> = (0..probe.starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(probe.seed, i as u64);
            let z = sampling::in_ball(&mut rng, v.dim(), probe.radius);
            let end = flow_point(v, &z, probe.t_final, &cfg).ok().map(|p| p.norm());
            (z, end)
        })
        .collect();
    let mut reached = 0;
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for (z, end) in outcomes {
        match end {
            Some(n) if n < probe.eps => {
                reached += 1;
                worst = worst.max(n);
            }
            Some(n) => {
                worst = worst.max(n);
                failures.push(z);
            }
            None => {
                worst = f64::INFINITY;
                failures.push(z);
            }
        }
    }
    DecayReport {
        probe: *probe,
        reached,
        worst_final_norm: worst,
        failures,
    }
}

/// `max_{z ∈ cloud} ‖DV(z)‖₂`.
pub fn jacobian_sup_bound(v: &VectorField, cloud: &[PointCn]) -> Result<f64> {
    if cloud.is_empty() {
        return Err(Error::InvalidInput("empty cloud".into()));
    }
    let norms = cloud
        .par_iter()
        .map(|p| v.jacobian(p).map(|j| linalg::spectral_norm(&j)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(norms.into_iter().fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `‖X₋ₜ(w) − z‖` with `e^{Bt}‖w − X_t(z)‖`.
pub fn lipschitz_estimate_check(
    v: &VectorField,
    w: &PointCn,
    z: &PointCn,
    t: f64,
    bound: f64,
    tol: f64,
) -> Result<LipschitzReport> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput("t must be positive".into()));
    }
    let xt_z = v.flow(z, t, tol)?;
    let back = v.flow(w, -t, tol)?;
    let lhs = back.distance(z);
    let rhs = (bound * t).exp() * w.distance(&xt_z);
    // both sides carry integration error of order tol; without the absolute
    // slack the equality case w = X_t(z) would fail on round-off
    Ok(LipschitzReport {
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-6) + 10.0 * tol * (1.0 + z.norm()),
    })
}
