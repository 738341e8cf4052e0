//! Domains `{r < 0} ∩ {‖z‖ ≤ ρ}` given by one or more defining expressions,
//! boundary sampling and the curvature tests run on their boundaries.

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{GradientForm, HessianForm, MapExpr, ScalarExpr};
use crate::linalg::{self, CMatrix};
use crate::point::PointCn;
use crate::sampling;
use crate::vectorfield::VectorField;

/// Gradient norm below which a boundary point is not regular.
pub const MIN_GRADIENT: f64 = 1e-6;
/// Required gap between the active sheet and the runner-up.
pub const SHEET_MARGIN: f64 = 1e-6;
const RAY_ATTEMPTS_PER_POINT: usize = 64;

/// `expr < threshold` (or `<=`), evaluated on the real part of `expr`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPredicate {
    expr: ScalarExpr,
    threshold: f64,
    inclusive: bool,
    text: String,
}

impl SingularPredicate {
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let (lhs, rhs, inclusive) = if let Some((l, r)) = text.split_once("<=") {
            (l, r, true)
        } else if let Some((l, r)) = text.split_once('<') {
            (l, r, false)
        } else {
            return Err(Error::Parse {
                offset: 0,
                message: "singular predicate must read `<expr> < <number>`".into(),
            });
        };
        let threshold: f64 = rhs.trim().parse().map_err(|_| Error::Parse {
            offset: text.len() - rhs.len(),
            message: "threshold must be a real number".into(),
        })?;
        Ok(Self {
            expr: ScalarExpr::parse(lhs.trim(), dim)?,
            threshold,
            inclusive,
            text: text.trim().to_string(),
        })
    }

    pub fn contains(&self, z: &PointCn) -> Result<bool> {
        let v = self.expr.eval_real(z)?;
        Ok(if self.inclusive {
            v <= self.threshold
        } else {
            v < self.threshold
        })
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

#[derive(Clone)]
struct Forms {
    grads: Vec<GradientForm>,
    hessians: OnceLock<Vec<HessianForm>>,
}

#[derive(Clone)]
pub struct DomainSpec {
    dim: usize,
    sheets: Vec<ScalarExpr>,
    bound: f64,
    singular: Option<SingularPredicate>,
    tau_b: f64,
    forms: OnceLock<Arc<Forms>>,
}

impl fmt::Debug for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DomainSpec")
            .field("dim", &self.dim)
            .field("defining", &self.texts())
            .field("bound", &self.bound)
            .field("singular", &self.singular.as_ref().map(|s| s.text()))
            .field("tau_b", &self.tau_b)
            .finish()
    }
}

/// JSON shape of a domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainJson {
    pub dim: usize,
    pub defining: Vec<String>,
    pub bound: f64,
    #[serde(default)]
    pub singular: Option<String>,
}

impl DomainSpec {
    pub fn new(
        dim: usize,
        sheets: Vec<ScalarExpr>,
        bound: f64,
        singular: Option<SingularPredicate>,
    ) -> Result<Self> {
        if sheets.is_empty() {
            return Err(Error::InvalidInput("domain needs a defining expression".into()));
        }
        if let Some(s) = sheets.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: s.dim(),
            });
        }
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(Error::InvalidInput("bounding radius must be positive".into()));
        }
        Ok(Self {
            dim,
            sheets,
            bound,
            singular,
            tau_b: 1e-9 * (1.0 + bound),
            forms: OnceLock::new(),
        })
    }

    pub fn parse(dim: usize, defining: &[impl AsRef<str>], bound: f64, singular: Option<&str>) -> Result<Self> {
        let sheets = defining
            .iter()
            .map(|t| ScalarExpr::parse(t.as_ref(), dim))
            .collect::<Result<Vec<_>>>()?;
        let singular = singular.map(|s| SingularPredicate::parse(s, dim)).transpose()?;
        Self::new(dim, sheets, bound, singular)
    }

    pub fn from_json(j: &DomainJson) -> Result<Self> {
        Self::parse(j.dim, &j.defining, j.bound, j.singular.as_deref())
    }

    pub fn to_json(&self) -> DomainJson {
        DomainJson {
            dim: self.dim,
            defining: self.texts(),
            bound: self.bound,
            singular: self.singular.as_ref().map(|s| s.text().to_string()),
        }
    }

    pub fn with_tau_b(mut self, tau_b: f64) -> Self {
        self.tau_b = tau_b;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn tau_b(&self) -> f64 {
        self.tau_b
    }

    pub fn sheets(&self) -> &[ScalarExpr] {
        &self.sheets
    }

    pub fn singular(&self) -> Option<&SingularPredicate> {
        self.singular.as_ref()
    }

    pub fn texts(&self) -> Vec<String> {
        self.sheets.iter().map(|s| s.to_string()).collect()
    }

    /// `{r < margin}`: the sublevel set pushed outward by `margin` in r.
    pub fn inflated(&self, margin: f64, bound: f64) -> Result<Self> {
        let shift = ScalarExpr::constant(Complex64::new(margin, 0.0), self.dim);
        let sheets = self.sheets.iter().map(|s| s.sub(&shift)).collect();
        Self::new(self.dim, sheets, bound, self.singular.clone())
    }

    /// `λ·D = {z : r(z/λ) < 0}` for real `λ > 0`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(Error::InvalidInput("scale must be positive".into()));
        }
        let inv = ScalarExpr::constant(Complex64::new(1.0 / lambda, 0.0), self.dim);
        let images: Vec<ScalarExpr> = (0..self.dim)
            .map(|k| inv.mul(&ScalarExpr::var(k, self.dim)))
            .collect();
        let sheets = self
            .sheets
            .iter()
            .map(|s| s.substitute(&images))
            .collect::<Result<Vec<_>>>()?;
        let singular = match &self.singular {
            Some(p) => Some(SingularPredicate {
                expr: p.expr.substitute(&images)?,
                ..p.clone()
            }),
            None => None,
        };
        Self::new(self.dim, sheets, self.bound * lambda, singular)
    }

    /// `{r∘g < 0}` for a map `g` (the preimage of the domain under `g`).
    pub fn pullback(&self, g: &MapExpr, bound: f64) -> Result<Self> {
        if g.target_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: g.target_dim(),
            });
        }
        let sheets = self
            .sheets
            .iter()
            .map(|s| s.substitute(&g.components))
            .collect::<Result<Vec<_>>>()?;
        Self::new(g.domain_dim(), sheets, bound, None)
    }

    fn forms(&self) -> &Forms {
        self.forms.get_or_init(|| {
            Arc::new(Forms {
                grads: self.sheets.iter().map(GradientForm::new).collect(),
                hessians: OnceLock::new(),
            })
        })
    }

    fn hessian_forms(&self) -> &[HessianForm] {
        self.forms()
            .hessians
            .get_or_init(|| self.sheets.iter().map(HessianForm::new).collect())
    }

    fn sheet_value(&self, k: usize, z: &PointCn) -> Result<f64> {
        let v = self.sheets[k].eval(z)?;
        if v.im.abs() > 1e-9 * (1.0 + v.re.abs()) {
            return Err(Error::DomainError(format!(
                "defining expression `{}` is not real-valued at {:?}",
                self.sheets[k], z
            )));
        }
        Ok(v.re)
    }

    /// Values of every sheet at `z`.
    pub fn sheet_values(&self, z: &PointCn) -> Result<Vec<f64>> {
        z.check_dim(self.dim)?;
        (0..self.sheets.len()).map(|k| self.sheet_value(k, z)).collect()
    }

    /// `r(z) = max_k r_k(z)`.
    pub fn eval(&self, z: &PointCn) -> Result<f64> {
        Ok(self
            .sheet_values(z)?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max))
    }

    /// Index of the unique maximizing sheet, or `None` on a corner (two
    /// sheets within `SHEET_MARGIN`).
    pub fn active_sheet(&self, z: &PointCn) -> Result<Option<usize>> {
        let vals = self.sheet_values(z)?;
        let (k, best) = vals
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
        let corner = vals
            .iter()
            .enumerate()
            .any(|(j, v)| j != k && best - v < SHEET_MARGIN);
        Ok((!corner).then_some(k))
    }

    fn smooth_sheet(&self, z: &PointCn) -> Result<usize> {
        if let Some(p) = &self.singular {
            if p.contains(z)? {
                return Err(Error::SingularPoint(format!(
                    "{:?} lies in the excluded set `{}`",
                    z.coords(),
                    p.text()
                )));
            }
        }
        self.active_sheet(z)?.ok_or_else(|| {
            Error::SingularPoint(format!("{:?} is on a corner between sheets", z.coords()))
        })
    }

    /// Real gradient `(∂x₁, ∂y₁, …)` of the active sheet.
    pub fn gradient(&self, z: &PointCn) -> Result<Vec<f64>> {
        let k = self.smooth_sheet(z)?;
        self.forms().grads[k].real_gradient(z)
    }

    /// `∂r/∂z_j` of the active sheet.
    pub fn dz(&self, z: &PointCn) -> Result<Vec<Complex64>> {
        let k = self.smooth_sheet(z)?;
        self.forms().grads[k].eval_dz(z)
    }

    /// Real Hessian of the active sheet.
    pub fn hessian(&self, z: &PointCn) -> Result<DMatrix<f64>> {
        let k = self.smooth_sheet(z)?;
        Ok(self.hessian_forms()[k].eval(z)?.matrix)
    }

    /// Complex Hessian `∂²r/∂z_j∂z̄_k` of the active sheet.
    pub fn complex_hessian(&self, z: &PointCn) -> Result<CMatrix> {
        Ok(complex_hessian_from_real(&self.hessian(z)?))
    }
}

/// `L_jk = ¼[H_{x_j x_k} + H_{y_j y_k} + i(H_{x_j y_k} − H_{y_j x_k})]`.
pub fn complex_hessian_from_real(h: &DMatrix<f64>) -> CMatrix {
    let n = h.nrows() / 2;
    CMatrix::from_fn(n, n, |j, k| {
        let (xj, yj, xk, yk) = (2 * j, 2 * j + 1, 2 * k, 2 * k + 1);
        Complex64::new(
            0.25 * (h[(xj, xk)] + h[(yj, yk)]),
            0.25 * (h[(xj, yk)] - h[(yj, xk)]),
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Membership {
    Interior { margin: f64 },
    Boundary,
    Exterior { margin: f64 },
}

impl Membership {
    pub fn is_interior(&self) -> bool {
        matches!(self, Membership::Interior { .. })
    }

    pub fn is_exterior(&self) -> bool {
        matches!(self, Membership::Exterior { .. })
    }

    /// `−r` clipped to the classification: positive inside.
    pub fn signed_margin(&self) -> f64 {
        match self {
            Membership::Interior { margin } => *margin,
            Membership::Boundary => 0.0,
            Membership::Exterior { margin } => -margin,
        }
    }
}

pub fn membership(d: &DomainSpec, z: &PointCn) -> Result<Membership> {
    z.check_dim(d.dim)?;
    let r = d.eval(z)?;
    let excess = z.norm() - d.bound;
    if excess > 0.0 {
        return Ok(Membership::Exterior {
            margin: excess.max(r),
        });
    }
    Ok(if r.abs() <= d.tau_b {
        Membership::Boundary
    } else if r < 0.0 {
        Membership::Interior { margin: -r }
    } else {
        Membership::Exterior { margin: r }
    })
}

/// Rays that did not produce a regular boundary point, by reason.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExclusionCounts {
    pub no_crossing: usize,
    pub singular: usize,
    pub corner: usize,
    pub degenerate_gradient: usize,
}

impl ExclusionCounts {
    fn merge(&mut self, o: &ExclusionCounts) {
        self.no_crossing += o.no_crossing;
        self.singular += o.singular;
        self.corner += o.corner;
        self.degenerate_gradient += o.degenerate_gradient;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCloud {
    pub points: Vec<PointCn>,
    pub seed: u64,
    pub count: usize,
    pub excluded: ExclusionCounts,
}

enum RayOutcome {
    Point(PointCn),
    NoCrossing,
    Singular,
    Corner,
    Degenerate,
}

fn boundary_on_ray(d: &DomainSpec, u: &PointCn) -> Result<RayOutcome> {
    let at = |t: f64| d.eval(&(u * t));
    let (mut lo, mut hi) = (0.0, d.bound);
    let (r_lo, r_hi) = (at(lo)?, at(hi)?);
    if !(r_lo < 0.0) || !(r_hi > 0.0) {
        return Ok(RayOutcome::NoCrossing);
    }
    let mut found = None;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let r = at(mid)?;
        if r.abs() <= d.tau_b {
            found = Some(mid);
            break;
        }
        if r < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    let Some(t) = found else {
        return Ok(RayOutcome::NoCrossing);
    };
    let p = u * t;
    if let Some(pred) = &d.singular {
        if pred.contains(&p)? {
            return Ok(RayOutcome::Singular);
        }
    }
    let Some(k) = d.active_sheet(&p)? else {
        return Ok(RayOutcome::Corner);
    };
    match d.forms().grads[k].real_gradient(&p) {
        Ok(g) if g.iter().map(|x| x * x).sum::<f64>().sqrt() >= MIN_GRADIENT => {
            Ok(RayOutcome::Point(p))
        }
        Ok(_) | Err(Error::SingularPoint(_)) => Ok(RayOutcome::Degenerate),
        Err(e) => Err(e),
    }
}

/// Regular boundary points found by bisecting `r` along random rays from the
/// origin. Point `i` uses its own random stream, so the cloud does not depend
/// on thread scheduling.
pub fn sample_boundary(d: &DomainSpec, count: usize, seed: u64) -> Result<BoundaryCloud> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    let results = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::rng_for(seed, i as u64);
            let mut ex = ExclusionCounts::default();
            for _ in 0..RAY_ATTEMPTS_PER_POINT {
                let u = sampling::unit_direction(&mut rng, d.dim);
                match boundary_on_ray(d, &u)? {
                    RayOutcome::Point(p) => return Ok((Some(p), ex)),
                    RayOutcome::NoCrossing => ex.no_crossing += 1,
                    RayOutcome::Singular => ex.singular += 1,
                    RayOutcome::Corner => ex.corner += 1,
                    RayOutcome::Degenerate => ex.degenerate_gradient += 1,
                }
            }
            Ok((None, ex))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut points = Vec::with_capacity(count);
    let mut excluded = ExclusionCounts::default();
    for (p, ex) in results {
        excluded.merge(&ex);
        points.extend(p);
    }
    if points.len() < count {
        return Err(Error::SamplingExhausted {
            attempts: count * RAY_ATTEMPTS_PER_POINT,
            found: points.len(),
        });
    }
    Ok(BoundaryCloud {
        points,
        seed,
        count,
        excluded,
    })
}

fn check_gradient(d: &DomainSpec, p: &PointCn) -> Result<Vec<f64>> {
    let g = d.gradient(p)?;
    let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < MIN_GRADIENT {
        return Err(Error::DegenerateGradient(n));
    }
    Ok(g)
}

/// Orthonormal basis (columns) of the complement of `u` in ℂⁿ.
fn orthonormal_complement(u: &[Complex64]) -> CMatrix {
    let n = u.len();
    let norm = u.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<Complex64>> = vec![u.iter().map(|c| c / norm).collect()];
    for k in 0..n {
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[k] = Complex64::new(1.0, 0.0);
        for b in &basis {
            let proj: Complex64 = b.iter().zip(&v).map(|(bi, vi)| bi.conj() * vi).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= proj * bi;
            }
        }
        let vn = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vn > 1e-8 {
            basis.push(v.iter().map(|c| c / vn).collect());
        }
        if basis.len() == n {
            break;
        }
    }
    CMatrix::from_fn(n, n - 1, |i, j| basis[j + 1][i])
}

/// Smallest value of the Levi form on unit complex tangent vectors. In ℂ¹ the
/// tangent space is trivial, so the full complex Hessian is used instead.
pub fn levi_form_min(d: &DomainSpec, p: &PointCn) -> Result<f64> {
    check_gradient(d, p)?;
    let l = d.complex_hessian(p)?;
    if d.dim == 1 {
        return Ok(l[(0, 0)].re);
    }
    // tangent w satisfies Σ r_j w_j = 0; with v = w̄ the form is v^H L v and
    // the constraint reads v ⊥ (∂r/∂z)
    let q = orthonormal_complement(&d.dz(p)?);
    let restricted = q.adjoint() * l * q;
    Ok(linalg::hermitian_min_eigenvalue(&restricted))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvexityVerdict {
    StronglyConvexEvidence,
    NotStronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    pub c_min: f64,
    pub witness: PointCn,
    pub verdict: ConvexityVerdict,
    pub points_checked: usize,
}

/// Minimum over the cloud of the smallest real-Hessian eigenvalue.
pub fn strong_convexity_check(d: &DomainSpec, cloud: &BoundaryCloud) -> Result<ConvexityReport> {
    if cloud.points.is_empty() {
        return Err(Error::InvalidInput("empty boundary cloud".into()));
    }
    let mins = cloud
        .points
        .par_iter()
        .map(|p| d.hessian(p).map(|h| linalg::symmetric_min_eigenvalue(&h)))
        .collect::<Result<Vec<f64>>>()?;
    let (k, c_min) = mins
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    Ok(ConvexityReport {
        c_min,
        witness: cloud.points[k].clone(),
        verdict: if c_min > 0.0 {
            ConvexityVerdict::StronglyConvexEvidence
        } else {
            ConvexityVerdict::NotStronglyConvex
        },
        points_checked: mins.len(),
    })
}

/// Real 2n×2n Jacobian and per-output real Hessians of a map, in
/// coordinates `(x₁, y₁, …)` on both sides.
fn real_jet(g: &MapExpr, x: &PointCn) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let n = g.domain_dim();
    let m = g.target_dim();
    let mut jac = DMatrix::zeros(2 * m, 2 * n);
    let mut hess = Vec::with_capacity(2 * m);
    let i = Complex64::new(0.0, 1.0);
    for (j, comp) in g.components.iter().enumerate() {
        let w = GradientForm::new(comp).eval(x)?;
        for k in 0..n {
            let dx = w.dz[k] + w.dzbar[k];
            let dy = i * (w.dz[k] - w.dzbar[k]);
            jac[(2 * j, 2 * k)] = dx.re;
            jac[(2 * j, 2 * k + 1)] = dy.re;
            jac[(2 * j + 1, 2 * k)] = dx.im;
            jac[(2 * j + 1, 2 * k + 1)] = dy.im;
        }
        let h = HessianForm::new(comp).eval_complex(x)?;
        hess.push(h.map(|c| c.re));
        hess.push(h.map(|c| c.im));
    }
    Ok((jac, hess))
}

/// Hessian of `r∘inv` at `x` by the chain rule
/// `Dgᵀ·Hr(g(x))·Dg + Σ_a ∂r/∂u_a(g(x))·H(g^a)(x)` with `g = inv`.
pub fn pushforward_hessian(
    d: &DomainSpec,
    fwd: &MapExpr,
    inv: &MapExpr,
    x: &PointCn,
) -> Result<DMatrix<f64>> {
    let y = inv.eval(x)?;
    let back = fwd.eval(&y)?;
    let mismatch = back.distance(x);
    if !(mismatch <= 1e-8) {
        return Err(Error::InverseMismatch(mismatch));
    }
    let (dg, hg) = real_jet(inv, x)?;
    let hr = d.hessian(&y)?;
    let gr = d.gradient(&y)?;
    let mut out = dg.transpose() * hr * &dg;
    for (a, h) in hg.iter().enumerate() {
        out += h * gr[a];
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransversalityReport {
    pub normal_component: f64,
    pub threshold: f64,
    pub transversal: bool,
}

/// Whether `V(p)` has a nonzero component along the real normal `∇r(p)`.
pub fn transversality_check(v: &VectorField, d: &DomainSpec, p: &PointCn) -> Result<bool> {
    Ok(transversality_report(v, d, p)?.transversal)
}

pub fn transversality_report(
    v: &VectorField,
    d: &DomainSpec,
    p: &PointCn,
) -> Result<TransversalityReport> {
    let g = check_gradient(d, p)?;
    let vp = v.eval(p)?.to_real_coords();
    let dot: f64 = g.iter().zip(&vp).map(|(a, b)| a * b).sum();
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let vn = vp.iter().map(|x| x * x).sum::<f64>().sqrt();
    let threshold = 1e-8 * gn * vn;
    Ok(TransversalityReport {
        normal_component: dot,
        threshold,
        transversal: dot.abs() > threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ball(n: usize) -> DomainSpec {
        let text: Vec<String> = (1..=n).map(|k| format!("abs(z{k})^2")).collect();
        DomainSpec::parse(n, &[format!("{}-1", text.join("+"))], 2.0, None).unwrap()
    }

    fn ovoid() -> DomainSpec {
        DomainSpec::parse(
            2,
            &["abs(z1)^2+abs(z2)^2+abs(z1)^2*abs(z2)^2-1"],
            2.0,
            None,
        )
        .unwrap()
    }

    fn hartogs() -> DomainSpec {
        DomainSpec::parse(
            2,
            &["abs(z1)-5", "abs(z2)-exp(-abs(z1))"],
            7.0,
            Some("abs(z1) < 0.001"),
        )
        .unwrap()
    }

    #[test]
    fn membership_examples() {
        assert_eq!(
            membership(&ball(2), &PointCn::origin(2)).unwrap(),
            Membership::Interior { margin: 1.0 }
        );
        assert_eq!(
            membership(&ovoid(), &PointCn::from_reals(&[1.0, 0.0])).unwrap(),
            Membership::Boundary
        );
        assert!(membership(&hartogs(), &PointCn::from_reals(&[0.0, 0.5]))
            .unwrap()
            .is_interior());
        assert!(membership(&ball(1), &PointCn::from_reals(&[3.0]))
            .unwrap()
            .is_exterior());
    }

    #[test]
    fn json_round_trip() {
        let d = hartogs();
        let j = d.to_json();
        let back = DomainSpec::from_json(&j).unwrap();
        let z = PointCn(vec![c(0.4, 0.2), c(0.1, -0.3)]);
        assert_eq!(d.eval(&z).unwrap(), back.eval(&z).unwrap());
        assert_eq!(j.singular.as_deref(), Some("abs(z1) < 0.001"));
    }

    #[test]
    fn ball_boundary_samples() {
        let cloud = sample_boundary(&ball(2), 4, 9).unwrap();
        assert_eq!(cloud.points.len(), 4);
        for p in &cloud.points {
            assert!((p.norm() - 1.0).abs() <= ball(2).tau_b());
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let a = sample_boundary(&hartogs(), 50, 3).unwrap();
        let b = sample_boundary(&hartogs(), 50, 3).unwrap();
        assert_eq!(a, b);
        let d = hartogs();
        for p in &a.points {
            assert!(d.eval(p).unwrap().abs() <= d.tau_b());
        }
    }

    #[test]
    fn empty_domain_exhausts() {
        let d = DomainSpec::parse(1, &["1"], 1.0, None).unwrap();
        assert!(matches!(
            sample_boundary(&d, 3, 0),
            Err(Error::SamplingExhausted { found: 0, .. })
        ));
    }

    #[test]
    fn gradient_points_outward() {
        for d in [ball(2), ovoid(), hartogs()] {
            let cloud = sample_boundary(&d, 100, 5).unwrap();
            let eps = 10.0 * d.tau_b();
            for p in &cloud.points {
                let g = d.gradient(p).unwrap();
                let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
                let step: Vec<f64> = g.iter().map(|x| x / gn * eps).collect();
                let xs = p.to_real_coords();
                let out: Vec<f64> = xs.iter().zip(&step).map(|(a, b)| a + b).collect();
                let inn: Vec<f64> = xs.iter().zip(&step).map(|(a, b)| a - b).collect();
                assert!(membership(&d, &PointCn::from_real_coords(&out)).unwrap().is_exterior());
                assert!(membership(&d, &PointCn::from_real_coords(&inn)).unwrap().is_interior());
            }
        }
    }

    #[test]
    fn levi_form_examples() {
        let p = PointCn(vec![c(0.6, 0.0), c(0.0, 0.8)]);
        assert!((levi_form_min(&ball(2), &p).unwrap() - 1.0).abs() < 1e-12);
        let d = DomainSpec::parse(1, &["abs(z1)"], 2.0, None).unwrap();
        let z = PointCn(vec![c(0.3, 0.4)]);
        assert!((levi_form_min(&d, &z).unwrap() - 1.0 / (4.0 * 0.5)).abs() < 1e-12);
        let cloud = sample_boundary(&ovoid(), 1000, 1).unwrap();
        let worst = cloud
            .points
            .iter()
            .map(|p| levi_form_min(&ovoid(), p).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(worst > 0.0);
    }

    #[test]
    fn levi_form_degenerate_gradient() {
        let d = DomainSpec::parse(1, &["z1*conj(z1)-1"], 2.0, None).unwrap();
        assert!(matches!(
            levi_form_min(&d, &PointCn::origin(1)),
            Err(Error::DegenerateGradient(_))
        ));
    }

    #[test]
    fn convexity_examples() {
        let b = ball(2);
        let rep = strong_convexity_check(&b, &sample_boundary(&b, 50, 2).unwrap()).unwrap();
        assert!((rep.c_min - 2.0).abs() < 1e-12);
        let o = ovoid();
        let rep = strong_convexity_check(&o, &sample_boundary(&o, 1000, 2).unwrap()).unwrap();
        assert_eq!(rep.verdict, ConvexityVerdict::StronglyConvexEvidence);
        let h = hartogs();
        let rep = strong_convexity_check(&h, &sample_boundary(&h, 300, 2).unwrap()).unwrap();
        assert!(rep.c_min < 0.0);
    }

    #[test]
    fn singular_and_corner_points_are_refused() {
        let h = hartogs();
        let on_axis = PointCn(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(h.hessian(&on_axis), Err(Error::SingularPoint(_))));
        let corner = PointCn(vec![c(5.0, 0.0), c((-5.0f64).exp(), 0.0)]);
        assert!(h.active_sheet(&corner).unwrap().is_none());
    }

    #[test]
    fn pushforward_examples() {
        let d = ball(1);
        let x = PointCn(vec![c(0.3, -0.2)]);
        let id = MapExpr::identity(1);
        let direct = d.hessian(&x).unwrap();
        assert_eq!(pushforward_hessian(&d, &id, &id, &x).unwrap(), direct);
        let half = MapExpr::parse(&["z1/2"], 1).unwrap();
        let double = MapExpr::parse(&["2z1"], 1).unwrap();
        let h = pushforward_hessian(&d, &double, &half, &x).unwrap();
        let expected = DMatrix::<f64>::identity(2, 2) * 0.5;
        assert!((h - expected).abs().max() < 1e-12);
        assert!(matches!(
            pushforward_hessian(&d, &id, &half, &x),
            Err(Error::InverseMismatch(_))
        ));
    }

    #[test]
    fn transversality_examples() {
        let b = ball(1);
        let p = PointCn(vec![c(0.6, 0.8)]);
        let radial = VectorField::parse(&["-z1"]).unwrap();
        let rot = VectorField::parse(&["iz1"]).unwrap();
        assert!(transversality_check(&radial, &b, &p).unwrap());
        assert!(!transversality_check(&rot, &b, &p).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn convexity_is_unitary_invariant(theta in 0.0f64..std::f64::consts::TAU, phi in 0.0f64..std::f64::consts::TAU, seed in 0u64..100) {
            // rotate the ovoid by a unitary U; its Hessian eigenvalues at U p match those at p
            let o = ovoid();
            let (ct, st) = (theta.cos(), theta.sin());
            let e = Complex64::from_polar(1.0, phi);
            // U is unitary, so pulling back by U^H moves the ovoid onto U·ovoid
            let u = CMatrix::from_row_slice(2, 2, &[c(ct, 0.0), -e * st, e.conj() * st, c(ct, 0.0)]);
            let adj = u.adjoint();
            let comp = |row: usize| {
                let a = adj[(row, 0)];
                let b = adj[(row, 1)];
                format!("({}{:+}i)*z1+({}{:+}i)*z2", a.re, a.im, b.re, b.im)
            };
            let pull = MapExpr::parse(&[comp(0), comp(1)], 2).unwrap();
            let rotated = o.pullback(&pull, 2.0).unwrap();
            let cloud = sample_boundary(&o, 20, seed).unwrap();
            let moved = BoundaryCloud {
                points: cloud.points.iter().map(|p| {
                    let v = &u * nalgebra::DVector::from_vec(p.0.clone());
                    PointCn(v.iter().copied().collect())
                }).collect(),
                ..cloud.clone()
            };
            let a = strong_convexity_check(&o, &cloud).unwrap().c_min;
            let b = strong_convexity_check(&rotated, &moved).unwrap().c_min;
            prop_assert!((a - b).abs() <= 1e-8);
        }
    }
}
