//! Loewner chains `f_t = Ψ⁻¹ ∘ X₋ₜ ∘ Ψ ∘ f` built from a base map, a
//! conjugating map and a stable field, with numerical checks of inclusion,
//! filtering, normalization and range exhaustion.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domains::{membership, sample_boundary, DomainSpec};
use crate::error::{Error, Result};
use crate::expr::MapExpr;
use crate::hull::closure_layers;
use crate::linalg::{self, CMatrix};
use crate::point::PointCn;
use crate::sampling;
use crate::vectorfield::{flow_at, linearize, IntegratorConfig, VectorField};

const NEWTON_ITERS: usize = 60;
const RANDOM_RAYS: usize = 32;

#[derive(Debug, Clone)]
pub struct LoewnerChainSpec {
    pub f: MapExpr,
    /// Explicit inverse of `f`, when known; otherwise Newton's method is used.
    pub f_inv: Option<MapExpr>,
    pub psi: MapExpr,
    pub psi_inv: MapExpr,
    pub field: VectorField,
    pub domain: DomainSpec,
    pub tol: f64,
}

impl LoewnerChainSpec {
    pub fn new(
        f: MapExpr,
        f_inv: Option<MapExpr>,
        psi: MapExpr,
        psi_inv: MapExpr,
        field: VectorField,
        domain: DomainSpec,
    ) -> Result<Self> {
        let n = field.dim();
        for (name, m) in [("f", &f), ("psi", &psi), ("psi_inv", &psi_inv)]
            .into_iter()
            .chain(f_inv.as_ref().map(|m| ("f_inv", m)))
        {
            if m.domain_dim() != n || m.target_dim() != n {
                return Err(Error::InvalidInput(format!("map `{name}` is not ℂ^{n} → ℂ^{n}")));
            }
        }
        if domain.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: domain.dim(),
            });
        }
        let o = PointCn::origin(n);
        for (name, m) in [("f", &f), ("psi", &psi)] {
            let v = m.eval(&o)?.norm();
            if v > 1e-12 {
                return Err(Error::InvalidInput(format!("{name}(0) = {v:e}, expected 0")));
            }
        }
        let spec = Self {
            f,
            f_inv,
            psi,
            psi_inv,
            field,
            domain,
            tol: 1e-9,
        };
        for p in spec.test_points() {
            let y = spec.psi.eval(&p)?;
            let back = spec.psi_inv.eval(&y)?;
            let e = back.distance(&p);
            if !(e <= 1e-8) {
                return Err(Error::InverseMismatch(e));
            }
            if let Some(fi) = &spec.f_inv {
                let e = fi.eval(&spec.f.eval(&p)?)?.distance(&p);
                if !(e <= 1e-8) {
                    return Err(Error::InverseMismatch(e));
                }
            }
        }
        Ok(spec)
    }

    /// `f = Ψ = id` on the given domain.
    pub fn identity(field: VectorField, domain: DomainSpec) -> Result<Self> {
        let n = field.dim();
        let id = MapExpr::identity(n);
        Self::new(id.clone(), Some(id.clone()), id.clone(), id, field, domain)
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    fn test_points(&self) -> Vec<PointCn> {
        let mut pts = vec![PointCn::origin(self.field.dim())];
        if let Ok(c) = sample_boundary(&self.domain, 8, 0) {
            pts.extend(c.points.iter().map(|p| p * 0.5));
        }
        pts
    }

    fn icfg(&self) -> IntegratorConfig {
        IntegratorConfig::with_tol(self.tol)
    }

    /// `Ψ(f(z))`.
    pub fn lift(&self, z: &PointCn) -> Result<PointCn> {
        self.psi.eval(&self.f.eval(z)?)
    }

    /// Solves `f(z) = y`, starting from `guess`.
    pub fn f_preimage(&self, y: &PointCn, guess: &PointCn) -> Result<PointCn> {
        if let Some(fi) = &self.f_inv {
            return fi.eval(y);
        }
        if self.f.is_identity() {
            return Ok(y.clone());
        }
        let n = y.dim();
        let mut z = guess.clone();
        for _ in 0..NEWTON_ITERS {
            let r = &self.f.eval(&z)? - y;
            if r.norm() <= 1e-13 * (1.0 + y.norm()) {
                return Ok(z);
            }
            let j = self.f.jacobian(&z)?;
            let rhs = nalgebra::DVector::from_vec(r.0.clone());
            let Some(step) = j.lu().solve(&rhs) else {
                return Err(Error::BaseMapInversionFailure("singular Jacobian of f".into()));
            };
            z = PointCn((0..n).map(|k| z[k] - step[k]).collect());
            if !z.is_finite() {
                break;
            }
        }
        Err(Error::BaseMapInversionFailure(format!(
            "Newton did not converge for target {:?}",
            y.coords()
        )))
    }
}

/// `f_t(z) = Ψ⁻¹(X₋ₜ(Ψ(f(z))))`.
pub fn chain_map(spec: &LoewnerChainSpec, t: f64, z: &PointCn) -> Result<PointCn> {
    if !(t >= 0.0) {
        return Err(Error::InvalidInput("chain time must be nonnegative".into()));
    }
    let y = spec.lift(z)?;
    let yt = if t == 0.0 {
        y
    } else {
        crate::vectorfield::flow_point(&spec.field, &y, -t, &spec.icfg())?
    };
    spec.psi_inv.eval(&yt)
}

/// `f_t` at several times (sorted ascending, all ≥ 0) for one point.
pub fn chain_map_at(spec: &LoewnerChainSpec, times: &[f64], z: &PointCn) -> Result<Vec<PointCn>> {
    let y = spec.lift(z)?;
    let neg: Vec<f64> = times.iter().map(|t| -t).collect();
    flow_at(&spec.field, &y, &neg, &spec.icfg())?
        .iter()
        .map(|p| spec.psi_inv.eval(p))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InclusionStatus {
    Checked,
    /// `s = t`; the inclusion is only asserted for `t > s`.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionReport {
    pub s: f64,
    pub t: f64,
    pub status: InclusionStatus,
    pub min_margin: f64,
    pub worst_point: Option<PointCn>,
    /// Largest `‖f_t(z′) − f_s(z)‖` over the cloud.
    pub max_residual: f64,
    pub all_interior: bool,
}

/// For each `z`, finds `z′ = f⁻¹Ψ⁻¹X_{t−s}Ψf(z)` with `f_t(z′) = f_s(z)` and
/// checks that `z′` lies inside `D` with positive margin.
pub fn check_inclusion(
    spec: &LoewnerChainSpec,
    s: f64,
    t: f64,
    cloud: &[PointCn],
) -> Result<InclusionReport> {
    if !(s >= 0.0) || !(t >= s) {
        return Err(Error::InvalidInput("need 0 ≤ s ≤ t".into()));
    }
    if t == s {
        return Ok(InclusionReport {
            s,
            t,
            status: InclusionStatus::NotApplicable,
            min_margin: 0.0,
            worst_point: None,
            max_residual: 0.0,
            all_interior: false,
        });
    }
    let mut min_margin = f64::INFINITY;
    let mut worst = None;
    let mut max_residual = 0.0f64;
    for z in cloud {
        let y = spec.lift(z)?;
        let moved = crate::vectorfield::flow_point(&spec.field, &y, t - s, &spec.icfg())?;
        let zp = spec.f_preimage(&spec.psi_inv.eval(&moved)?, z)?;
        let m = membership(&spec.domain, &zp)?.signed_margin();
        if m < min_margin {
            min_margin = m;
            worst = Some(z.clone());
        }
        let lhs = chain_map(spec, t, &zp)?;
        let rhs = chain_map(spec, s, z)?;
        max_residual = max_residual.max(lhs.distance(&rhs));
    }
    Ok(InclusionReport {
        s,
        t,
        status: InclusionStatus::Checked,
        min_margin,
        worst_point: worst,
        max_residual,
        all_interior: min_margin > 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteringReport {
    pub s: f64,
    /// Distance from `X₋ₛ(Ψ(f(D̄)))` to the boundary of `Ψ(U)`.
    pub r_s: f64,
    /// `max ‖V‖` over `X₋ₛ(Ψ(f(D̄)))`.
    pub big_r: f64,
    pub t0: f64,
    pub verified_ts: Vec<f64>,
    pub all_verified: bool,
}

fn inside_psi_u(spec: &LoewnerChainSpec, u: &DomainSpec, w: &PointCn) -> Result<bool> {
    match spec.psi_inv.eval(w) {
        Ok(p) => Ok(membership(u, &p)?.is_interior()),
        Err(Error::DomainError(_)) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Distance from `y` to the exit of `Ψ(U)` along direction `dir`.
fn exit_distance(
    spec: &LoewnerChainSpec,
    u: &DomainSpec,
    y: &PointCn,
    dir: &PointCn,
    reach: f64,
) -> Result<f64> {
    if !inside_psi_u(spec, u, y)? {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 1e-3 * reach;
    while inside_psi_u(spec, u, &(y + &(dir * hi)))? {
        lo = hi;
        hi *= 2.0;
        if hi > 4.0 * reach {
            return Ok(f64::INFINITY);
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if inside_psi_u(spec, u, &(y + &(dir * mid)))? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Computes `r_s`, `R` and `t₀ = r_s/(2R)·(1 − 10⁻³)`, then confirms
/// `f_t(D̄-cloud) ⊂ U` on a grid in `(s, s + t₀]`.
///
/// `r_s` is the smallest exit distance from the moved cloud along the
/// outward normal of `U` and along random rays; the cloud samples `D̄`
/// by radial layers of a boundary cloud.
pub fn filtering_window(
    spec: &LoewnerChainSpec,
    s: f64,
    u: &DomainSpec,
    boundary: &[PointCn],
    seed: u64,
) -> Result<FilteringReport> {
    if boundary.is_empty() {
        return Err(Error::InvalidInput("empty cloud".into()));
    }
    let cloud = closure_layers(boundary);
    let n = spec.field.dim();
    let reach = u.bound();
    let mut r_s = f64::INFINITY;
    let mut big_r = 0.0f64;
    let mut moved = Vec::with_capacity(cloud.len());
    for (i, z) in cloud.iter().enumerate() {
        let y = if s == 0.0 {
            spec.lift(z)?
        } else {
            crate::vectorfield::flow_point(&spec.field, &spec.lift(z)?, -s, &spec.icfg())?
        };
        big_r = big_r.max(spec.field.eval(&y)?.norm());
        let mut dirs = Vec::with_capacity(RANDOM_RAYS + 1);
        if let Ok(p) = spec.psi_inv.eval(&y) {
            if let Ok(g) = u.gradient(&p) {
                let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                if gn > 0.0 {
                    // normal of U pushed through DΨ(p)
                    let normal = PointCn::from_real_coords(&g.iter().map(|x| x / gn).collect::<Vec<_>>());
                    let jp = spec.psi.jacobian(&p)?;
                    let v = &jp * nalgebra::DVector::from_vec(normal.0);
                    let w = PointCn(v.iter().copied().collect());
                    let wn = w.norm();
                    if wn > 0.0 {
                        dirs.push(&w * (1.0 / wn));
                    }
                }
            }
        }
        let mut rng = sampling::rng_for(seed, i as u64);
        for _ in 0..RANDOM_RAYS {
            dirs.push(sampling::unit_direction(&mut rng, n));
        }
        for d in &dirs {
            r_s = r_s.min(exit_distance(spec, u, &y, d, reach)?);
            if r_s == 0.0 {
                return Err(Error::EmptyWindow(0.0));
            }
        }
        moved.push(y);
    }
    if !(r_s > 0.0) || !r_s.is_finite() {
        return Err(Error::EmptyWindow(r_s));
    }
    let t0 = if big_r > 0.0 {
        r_s / (2.0 * big_r) * (1.0 - 1e-3)
    } else {
        f64::INFINITY
    };
    let span = if t0.is_finite() { t0 } else { 1.0 };
    let steps: Vec<f64> = (1..=8).map(|k| span * k as f64 / 8.0).collect();
    let mut verified_ts = Vec::new();
    let mut all_verified = true;
    for &dt in &steps {
        let mut ok = true;
        for y in &moved {
            let p = crate::vectorfield::flow_point(&spec.field, y, -dt, &spec.icfg())
                .and_then(|w| spec.psi_inv.eval(&w));
            match p {
                Ok(p) if membership(u, &p)?.is_interior() => {}
                Ok(_) | Err(Error::DivergedBeforeT(_)) => {
                    ok = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if ok {
            verified_ts.push(s + dt);
        } else {
            all_verified = false;
        }
    }
    Ok(FilteringReport {
        s,
        r_s,
        big_r,
        t0,
        verified_ts,
        all_verified,
    })
}

/// Central-difference complex Jacobian of `z ↦ f_t(z)` at `p`.
pub fn chain_jacobian_fd(spec: &LoewnerChainSpec, t: f64, p: &PointCn, h: f64) -> Result<CMatrix> {
    let n = p.dim();
    let mut j = CMatrix::zeros(n, n);
    for k in 0..n {
        let mut plus = p.clone();
        let mut minus = p.clone();
        plus[k] += h;
        minus[k] -= h;
        let fp = chain_map(spec, t, &plus)?;
        let fm = chain_map(spec, t, &minus)?;
        for r in 0..n {
            j[(r, k)] = (fp[r] - fm[r]) / (2.0 * h);
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub t: f64,
    pub j_num: Vec<Vec<Complex64>>,
    pub j_ref: Vec<Vec<Complex64>>,
    pub err: f64,
    pub ref_norm: f64,
    pub passes: bool,
}

fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows())
        .map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect())
        .collect()
}

/// Compares the finite-difference `Df_t(0)` with
/// `DΨ⁻¹(0)·e^{−t·DV(0)}·DΨ(0)·Df(0)`, which is `e^{−t·DV(0)}` for normalized
/// `f` and `Ψ`.
pub fn check_normalization(spec: &LoewnerChainSpec, t: f64) -> Result<NormalizationReport> {
    let n = spec.field.dim();
    let o = PointCn::origin(n);
    let fine = LoewnerChainSpec {
        tol: spec.tol.min(1e-12),
        ..spec.clone()
    };
    let j_num = chain_jacobian_fd(&fine, t, &o, 1e-3)?;
    let a = linearize(&spec.field)?;
    let e = linalg::expm(&(a * Complex64::new(-t, 0.0)));
    let j_ref = spec.psi_inv.jacobian(&o)? * e * spec.psi.jacobian(&o)? * spec.f.jacobian(&o)?;
    let err = linalg::spectral_norm(&(&j_num - &j_ref));
    let ref_norm = linalg::spectral_norm(&j_ref);
    Ok(NormalizationReport {
        t,
        j_num: rows(&j_num),
        j_ref: rows(&j_ref),
        err,
        ref_norm,
        passes: err <= 1e-5 * ref_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Exhaustion {
    Hit { t: f64 },
    NotReached { t_cap: f64 },
}

/// Smallest grid time `t` (step `step`) with `Ψ⁻¹(X_t(Ψ(w))) ∈ f(D)`.
pub fn range_exhaustion_time(
    spec: &LoewnerChainSpec,
    w: &PointCn,
    t_cap: f64,
    step: f64,
) -> Result<Exhaustion> {
    if !(t_cap > 0.0) || !(step > 0.0) {
        return Err(Error::InvalidInput("t_cap and step must be positive".into()));
    }
    let inside = |y: &PointCn| -> Result<bool> {
        let p = spec.psi_inv.eval(y)?;
        match spec.f_preimage(&p, &p) {
            Ok(z) => Ok(membership(&spec.domain, &z)?.is_interior()),
            Err(Error::BaseMapInversionFailure(_)) => Ok(false),
            Err(e) => Err(e),
        }
    };
    let y0 = spec.psi.eval(w)?;
    if inside(&y0)? {
        return Ok(Exhaustion::Hit { t: 0.0 });
    }
    let count = (t_cap / step).floor() as usize;
    let times: Vec<f64> = (1..=count).map(|k| k as f64 * step).collect();
    // integrate in chunks so that far-off caps do not store every stop
    for chunk in times.chunks(1000) {
        let start = chunk[0] - step;
        let y_start = if start == 0.0 {
            y0.clone()
        } else {
            match crate::vectorfield::flow_point(&spec.field, &y0, start, &spec.icfg()) {
                Ok(p) => p,
                Err(Error::DivergedBeforeT(_)) => return Ok(Exhaustion::NotReached { t_cap }),
                Err(e) => return Err(e),
            }
        };
        let rel: Vec<f64> = chunk.iter().map(|t| t - start).collect();
        let pts = match flow_at(&spec.field, &y_start, &rel, &spec.icfg()) {
            Ok(p) => p,
            Err(Error::DivergedBeforeT(_)) => return Ok(Exhaustion::NotReached { t_cap }),
            Err(e) => return Err(e),
        };
        for (t, p) in chunk.iter().zip(&pts) {
            if inside(p)? {
                return Ok(Exhaustion::Hit { t: *t });
            }
        }
    }
    Ok(Exhaustion::NotReached { t_cap })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdBoundReport {
    pub kappa: f64,
    pub sup_jacobian: f64,
    pub sup_time_derivative: f64,
    pub grid: Vec<f64>,
    pub triples_checked: usize,
    pub violations: usize,
}

/// `κ = 1.1·max(sup‖Df_t(ξ)‖, sup‖∂_t f_t(ξ)‖)` over a time grid of `[0, T]`
/// and the cloud, then checked on random `(s, t, z)` triples.
///
/// The time derivative is exact: `∂_t f_t = −DΨ⁻¹(y_t)·V(y_t)` with
/// `y_t = X₋ₜ(Ψ(f(ξ)))`.
pub fn ld_bound_constant(
    spec: &LoewnerChainSpec,
    k: &[PointCn],
    t_big: f64,
    triples: usize,
    seed: u64,
) -> Result<LdBoundReport> {
    if k.is_empty() {
        return Err(Error::InvalidInput("empty cloud".into()));
    }
    if !(t_big >= 0.0) {
        return Err(Error::InvalidInput("T must be nonnegative".into()));
    }
    let grid: Vec<f64> = if t_big == 0.0 {
        vec![0.0]
    } else {
        (0..=16).map(|i| t_big * i as f64 / 16.0).collect()
    };
    let mut sup_j = 0.0f64;
    let mut sup_dt = 0.0f64;
    for xi in k {
        let y = spec.lift(xi)?;
        let neg: Vec<f64> = grid.iter().map(|t| -t).collect();
        let ys = flow_at(&spec.field, &y, &neg, &spec.icfg())?;
        for (t, yt) in grid.iter().zip(&ys) {
            let j = chain_jacobian_fd(spec, *t, xi, 1e-5)?;
            sup_j = sup_j.max(linalg::spectral_norm(&j));
            let jp = spec.psi_inv.jacobian(yt)?;
            let v = spec.field.eval(yt)?;
            let d = jp * nalgebra::DVector::from_vec(v.0);
            sup_dt = sup_dt.max(d.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
        }
    }
    let kappa = 1.1 * sup_j.max(sup_dt);
    let mut violations = 0;
    let mut rng = sampling::rng_for(seed, 0);
    for _ in 0..triples {
        let z = &k[rng.random_range(0..k.len())];
        let s = t_big * rng.random::<f64>();
        let t = t_big * rng.random::<f64>();
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        let pts = chain_map_at(spec, &[lo, hi], z)?;
        if pts[0].distance(&pts[1]) > kappa * (hi - lo) + 10.0 * spec.tol {
            violations += 1;
        }
    }
    Ok(LdBoundReport {
        kappa,
        sup_jacobian: sup_j,
        sup_time_derivative: sup_dt,
        grid,
        triples_checked: triples,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainSample {
    pub t: f64,
    pub image: Vec<PointCn>,
    pub jacobian_at_0: Vec<Vec<Complex64>>,
}

/// Image clouds `f_t(cloud)` and `Df_t(0)` for each requested time.
pub fn chain_samples(spec: &LoewnerChainSpec, times: &[f64], cloud: &[PointCn]) -> Result<Vec<ChainSample>> {
    let mut sorted = times.to_vec();
    sorted.sort_by(f64::total_cmp);
    let per_point = cloud
        .iter()
        .map(|z| chain_map_at(spec, &sorted, z))
        .collect::<Result<Vec<_>>>()?;
    let o = PointCn::origin(spec.field.dim());
    sorted
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            Ok(ChainSample {
                t,
                image: per_point.iter().map(|v| v[i].clone()).collect(),
                jacobian_at_0: rows(&chain_jacobian_fd(spec, t, &o, 1e-3)?),
            })
        })
        .collect()
}
