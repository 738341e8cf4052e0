//! Composition-operator experiments on a domain `Ω`: Poincaré and
//! Carathéodory distances, compact divergence of automorphism iterates,
//! fixed points, generalized translations and Birkhoff transitivity
//! witnesses.

use nalgebra::DVector;
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::domains::{membership, sample_boundary, DomainSpec};
use crate::error::{Error, Result};
use crate::expr::{MapExpr, ScalarExpr};
use crate::hull::{eval_monomials, hull_probe, monomials, Frame, HullCertificate, HullConfig, SampleCloud};
use crate::point::PointCn;
use crate::sampling;

/// `ρ(a, b) = artanh |(a − b)/(1 − āb)|` on the unit disc.
pub fn poincare_distance(a: Complex64, b: Complex64) -> Result<f64> {
    if !(a.norm() < 1.0) || !(b.norm() < 1.0) {
        return Err(Error::OutsideDisc(format!("|a| = {}, |b| = {}", a.norm(), b.norm())));
    }
    let q = ((a - b) / (1.0 - a.conj() * b)).norm();
    Ok(q.min(1.0).atanh())
}

/// A closed set that can answer membership queries.
pub trait CompactSet {
    fn dim(&self) -> usize;
    fn contains(&self, z: &PointCn) -> Result<bool>;
}

/// Closure of the domain: interior or boundary points.
impl CompactSet for DomainSpec {
    fn dim(&self) -> usize {
        DomainSpec::dim(self)
    }

    fn contains(&self, z: &PointCn) -> Result<bool> {
        Ok(!membership(self, z)?.is_exterior())
    }
}

/// A sample cloud thickened by its covering radius, taken as the largest
/// nearest-neighbour distance within the cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudSet {
    pub cloud: SampleCloud,
    pub radius: f64,
}

impl CloudSet {
    pub fn new(cloud: SampleCloud) -> Self {
        let radius = covering_radius(&cloud.points);
        Self { cloud, radius }
    }
}

fn covering_radius(pts: &[PointCn]) -> f64 {
    if pts.len() < 2 {
        return 0.0;
    }
    pts.iter()
        .enumerate()
        .map(|(i, p)| {
            pts.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, q)| p.distance(q))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn distance_to_cloud(z: &PointCn, pts: &[PointCn]) -> f64 {
    pts.iter().map(|p| p.distance(z)).fold(f64::INFINITY, f64::min)
}

impl CompactSet for CloudSet {
    fn dim(&self) -> usize {
        self.cloud.dim()
    }

    fn contains(&self, z: &PointCn) -> Result<bool> {
        z.check_dim(self.cloud.dim())?;
        Ok(distance_to_cloud(z, &self.cloud.points) <= self.radius)
    }
}

/// A holomorphic automorphism of `Ω` with its inverse.
#[derive(Debug, Clone)]
pub struct AutomorphismSpec {
    pub name: String,
    pub forward: MapExpr,
    pub inverse: MapExpr,
    pub domain: DomainSpec,
}

fn literal(c: Complex64) -> String {
    format!("({}+({})*i)", c.re, c.im)
}

fn unit_disc() -> Result<DomainSpec> {
    DomainSpec::parse(1, &["z1*conj(z1)-1"], 2.0, None)
}

impl AutomorphismSpec {
    /// Checks the round trip within 10⁻⁸ and that the forward map keeps a
    /// test cloud inside `Ω`.
    pub fn new(name: impl Into<String>, forward: MapExpr, inverse: MapExpr, domain: DomainSpec) -> Result<Self> {
        let n = domain.dim();
        for m in [&forward, &inverse] {
            if m.domain_dim() != n || m.target_dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: m.target_dim(),
                });
            }
            if !m.is_holomorphic() {
                return Err(Error::NotHolomorphic(m.texts().join(", ")));
            }
        }
        let spec = Self {
            name: name.into(),
            forward,
            inverse,
            domain,
        };
        let mut test = vec![PointCn::origin(n)];
        test.extend(sample_boundary(&spec.domain, 16, 0)?.points.iter().map(|p| p * 0.8));
        for p in &test {
            let img = spec.forward.eval(p)?;
            if !membership(&spec.domain, &img)?.is_interior() {
                return Err(Error::InvalidInput(format!(
                    "automorphism `{}` maps {:?} outside the domain",
                    spec.name,
                    p.coords()
                )));
            }
            let e = spec.inverse.eval(&img)?.distance(p);
            if !(e <= 1e-8) {
                return Err(Error::InverseMismatch(e));
            }
        }
        Ok(spec)
    }

    /// The disc automorphism `z ↦ (z + a)/(1 + āz)`, `|a| < 1`.
    pub fn mobius(a: Complex64) -> Result<Self> {
        if !(a.norm() < 1.0) {
            return Err(Error::OutsideDisc(format!("|a| = {}", a.norm())));
        }
        let (pa, ma, ca, mca) = (literal(a), literal(-a), literal(a.conj()), literal(-a.conj()));
        Self::new(
            format!("mobius({a})"),
            MapExpr::parse(&[format!("(z1+{pa})/(1+{ca}*z1)")], 1)?,
            MapExpr::parse(&[format!("(z1+{ma})/(1+{mca}*z1)")], 1)?,
            unit_disc()?,
        )
    }

    /// The disc rotation `z ↦ e^{iθ}z`.
    pub fn rotation(theta: f64) -> Result<Self> {
        let r = Complex64::from_polar(1.0, theta);
        Self::new(
            format!("rotation({theta})"),
            MapExpr::parse(&[format!("{}*z1", literal(r))], 1)?,
            MapExpr::parse(&[format!("{}*z1", literal(r.conj()))], 1)?,
            unit_disc()?,
        )
    }

    pub fn identity(domain: DomainSpec) -> Result<Self> {
        let n = domain.dim();
        Self::new("identity", MapExpr::identity(n), MapExpr::identity(n), domain)
    }

    /// Built-in automorphisms: `mobius(a)` with real `a` and `rotation(θ)`.
    pub fn builtin(name: &str) -> Result<Self> {
        let name = name.trim();
        let arg = |head: &str| -> Option<f64> {
            name.strip_prefix(head)?
                .strip_prefix('(')?
                .strip_suffix(')')?
                .trim()
                .parse()
                .ok()
        };
        if let Some(a) = arg("mobius") {
            return Self::mobius(Complex64::new(a, 0.0));
        }
        if let Some(t) = arg("rotation") {
            return Self::rotation(t);
        }
        if name == "identity" {
            return Self::identity(unit_disc()?);
        }
        Err(Error::UnknownName(format!("automorphism `{name}`")))
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// `τʲ(z)` by repeated application.
    pub fn iterate(&self, z: &PointCn, j: usize) -> Result<PointCn> {
        let mut p = z.clone();
        for _ in 0..j {
            p = self.forward.eval(&p)?;
        }
        Ok(p)
    }

    /// `[z, τ(z), …, τ^{j_max}(z)]`.
    pub fn orbit(&self, z: &PointCn, j_max: usize) -> Result<Vec<PointCn>> {
        let mut out = Vec::with_capacity(j_max + 1);
        out.push(z.clone());
        for _ in 0..j_max {
            let next = self.forward.eval(out.last().expect("orbit is nonempty"))?;
            out.push(next);
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaratheodoryConfig {
    /// Members are divided by `(1 + eps)·max` over the boundary cloud.
    pub eps: f64,
    /// Number of random polynomial members.
    pub budget: usize,
    pub degree: u32,
    pub boundary_samples: usize,
    pub seed: u64,
}

impl Default for CaratheodoryConfig {
    fn default() -> Self {
        Self {
            eps: 1e-6,
            budget: 64,
            degree: 4,
            boundary_samples: 1024,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaratheodoryBound {
    /// Always a lower bound for the Carathéodory pseudodistance.
    pub lower_bound: f64,
    pub best_member: String,
    pub members_tried: usize,
    pub eps: f64,
}

enum Member {
    Expr(ScalarExpr),
    Linear(Vec<Complex64>),
    Poly(Vec<Vec<u32>>, Vec<Complex64>),
}

impl Member {
    fn eval(&self, z: &PointCn) -> Result<Complex64> {
        match self {
            Member::Expr(e) => e.eval(z),
            Member::Linear(c) => Ok(c.iter().zip(z.coords()).map(|(a, b)| a * b).sum()),
            Member::Poly(exps, c) => Ok(eval_monomials(exps, z.coords())
                .iter()
                .zip(c)
                .map(|(m, a)| m * a)
                .sum()),
        }
    }

    fn describe(&self) -> String {
        match self {
            Member::Expr(e) => e.to_string(),
            Member::Linear(c) => format!("linear{c:?}"),
            Member::Poly(_, c) => format!("polynomial({} coefficients)", c.len()),
        }
    }
}

/// `max ρ(f(z), f(w))` over a searched family of normalized holomorphic
/// functions `Ω → 𝔻`: the supplied members, the coordinate projections,
/// the linear functional along `w − z`, and seeded random polynomials.
pub fn caratheodory_lb(
    d: &DomainSpec,
    z: &PointCn,
    w: &PointCn,
    family: &[ScalarExpr],
    cfg: &CaratheodoryConfig,
) -> Result<CaratheodoryBound> {
    let n = d.dim();
    z.check_dim(n)?;
    w.check_dim(n)?;
    for p in [z, w] {
        if !membership(d, p)?.is_interior() {
            return Err(Error::InvalidInput("points must lie inside the domain".into()));
        }
    }
    let mut members: Vec<Member> = family
        .iter()
        .map(|f| {
            if f.dim() != n {
                Err(Error::DimensionMismatch {
                    expected: n,
                    got: f.dim(),
                })
            } else if !f.is_holomorphic() {
                Err(Error::NotHolomorphic(f.to_string()))
            } else {
                Ok(Member::Expr(f.clone()))
            }
        })
        .collect::<Result<_>>()?;
    for k in 0..n {
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        c[k] = Complex64::new(1.0, 0.0);
        members.push(Member::Linear(c));
    }
    let diff = w - z;
    if diff.norm() > 0.0 {
        let u = &diff * (1.0 / diff.norm());
        members.push(Member::Linear(u.coords().iter().map(|c| c.conj()).collect()));
    }
    let exps: Vec<Vec<u32>> = monomials(n, cfg.degree).into_iter().skip(1).collect();
    for i in 0..cfg.budget {
        let mut rng = sampling::rng_for(cfg.seed, i as u64);
        let coeffs = exps
            .iter()
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re, im)
            })
            .collect();
        members.push(Member::Poly(exps.clone(), coeffs));
    }

    let boundary = sample_boundary(d, cfg.boundary_samples, cfg.seed)?.points;
    let mut best = 0.0f64;
    let mut best_member = String::from("none");
    for m in &members {
        let mut sup = 0.0f64;
        for b in &boundary {
            sup = sup.max(m.eval(b)?.norm());
        }
        if !(sup > 0.0) || !sup.is_finite() {
            continue;
        }
        let s = (1.0 + cfg.eps) * sup;
        let (fz, fw) = (m.eval(z)? / s, m.eval(w)? / s);
        if let Ok(rho) = poincare_distance(fz, fw) {
            if rho > best {
                best = rho;
                best_member = m.describe();
            }
        }
    }
    Ok(CaratheodoryBound {
        lower_bound: best,
        best_member,
        members_tried: members.len(),
        eps: cfg.eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    /// Smallest `j₀` with `τʲ(H) ∩ K = ∅` for every `j ∈ [j₀, j_max]`.
    pub j0: Option<usize>,
    /// `intersects[j]` is whether `τʲ(H)` meets `K`.
    pub intersects: Vec<bool>,
    pub j_max: usize,
}

impl DivergenceReport {
    pub fn observed(&self) -> bool {
        self.j0.is_some()
    }
}

pub fn compact_divergence_check(
    tau: &AutomorphismSpec,
    h: &[PointCn],
    k: &dyn CompactSet,
    j_max: usize,
) -> Result<DivergenceReport> {
    if h.is_empty() {
        return Err(Error::InvalidInput("H is empty".into()));
    }
    if k.dim() != tau.dim() {
        return Err(Error::DimensionMismatch {
            expected: tau.dim(),
            got: k.dim(),
        });
    }
    let mut intersects = vec![false; j_max + 1];
    for z in h {
        for (j, p) in tau.orbit(z, j_max)?.iter().enumerate() {
            if !intersects[j] && k.contains(p)? {
                intersects[j] = true;
            }
        }
    }
    let j0 = match intersects.iter().rposition(|b| *b) {
        None => Some(0),
        Some(last) if last < j_max => Some(last + 1),
        Some(_) => None,
    };
    Ok(DivergenceReport { j0, intersects, j_max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixedPointResult {
    FixedPoint { point: PointCn, residual: f64, start: usize },
    /// Evidence only: no interior fixed point was found from the starts.
    NoneFound { starts: usize, best_residual: f64 },
}

/// Newton's method on `τ(p) − p` from each start; accepts `p` inside `Ω`
/// with `‖τ(p) − p‖ ≤ 10⁻⁹`.
pub fn fixed_point_search(tau: &AutomorphismSpec, starts: &[PointCn], iter_cap: usize) -> Result<FixedPointResult> {
    let n = tau.dim();
    let mut best_residual = f64::INFINITY;
    for (si, s) in starts.iter().enumerate() {
        s.check_dim(n)?;
        let mut p = s.clone();
        for _ in 0..=iter_cap {
            let g = match tau.forward.eval(&p) {
                Ok(v) => &v - &p,
                Err(Error::SingularPoint(_)) | Err(Error::DomainError(_)) => break,
                Err(e) => return Err(e),
            };
            let res = g.norm();
            if !res.is_finite() {
                break;
            }
            let inside = membership(&tau.domain, &p)?.is_interior();
            if inside {
                best_residual = best_residual.min(res);
            }
            if res <= 1e-9 {
                if inside {
                    return Ok(FixedPointResult::FixedPoint {
                        point: p,
                        residual: res,
                        start: si,
                    });
                }
                break;
            }
            let mut j = tau.forward.jacobian(&p)?;
            for k in 0..n {
                j[(k, k)] -= Complex64::new(1.0, 0.0);
            }
            let Some(step) = j.lu().solve(&DVector::from_vec(g.0.clone())) else {
                break;
            };
            p = PointCn((0..n).map(|k| p[k] - step[k]).collect());
            if !p.is_finite() {
                break;
            }
        }
    }
    Ok(FixedPointResult::NoneFound {
        starts: starts.len(),
        best_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitEntry {
    pub j: usize,
    /// Smallest distance between samples of `τʲ(K)` and `K`.
    pub min_distance: f64,
    /// Distance required for disjointness: the two covering radii plus 10⁻⁶.
    pub required_distance: f64,
    pub disjoint: bool,
    pub midpoint_probes: Vec<HullCertificate>,
    pub union_hull_separates: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitReport {
    pub indices: Vec<usize>,
    pub entries: Vec<OrbitEntry>,
    pub found: Option<usize>,
    /// Convexity of the union is judged by sampled polynomial convexity.
    pub approximation: String,
}

impl OrbitReport {
    pub fn passed(&self) -> bool {
        self.found.is_some()
    }
}

fn centroid(pts: &[PointCn]) -> PointCn {
    let n = pts[0].dim();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    for p in pts {
        for (ci, pi) in c.iter_mut().zip(p.coords()) {
            *ci += pi;
        }
    }
    PointCn(c.into_iter().map(|x| x / pts.len() as f64).collect())
}

/// Looks for `j ≤ j_max` with `τʲ(K) ∩ K = ∅` and with points between the
/// two clusters separated from the union by polynomials.
pub fn generalized_translation_check(
    tau: &AutomorphismSpec,
    k: &SampleCloud,
    j_max: usize,
    hull_cfg: &HullConfig,
) -> Result<OrbitReport> {
    let approximation = "sampled polynomial convexity".to_string();
    let mut entries = Vec::new();
    let delta_k = covering_radius(&k.points);
    let mut moved = k.points.clone();
    for j in 1..=j_max {
        moved = moved.iter().map(|p| tau.forward.eval(p)).collect::<Result<_>>()?;
        let delta_m = covering_radius(&moved);
        let mut min_distance = f64::INFINITY;
        let mut pair = (0, 0);
        for (a, p) in k.points.iter().enumerate() {
            for (b, q) in moved.iter().enumerate() {
                let d = p.distance(q);
                if d < min_distance {
                    min_distance = d;
                    pair = (a, b);
                }
            }
        }
        let required = delta_k + delta_m + 1e-6;
        let disjoint = min_distance > required;
        let mut probes = Vec::new();
        let mut separates = false;
        if disjoint {
            let image = SampleCloud::new(moved.clone(), format!("tau^{j}(K)"), k.seed)?;
            let union = k.union(&image)?;
            let mut targets = vec![&(&k.points[pair.0] + &moved[pair.1]) * 0.5];
            let mid = &(&centroid(&k.points) + &centroid(&moved)) * 0.5;
            if distance_to_cloud(&mid, &union.points) > delta_k.max(delta_m) {
                targets.push(mid);
            }
            for t in &targets {
                probes.push(hull_probe(&union, t, hull_cfg)?);
            }
            separates = probes.iter().all(HullCertificate::is_separated);
        }
        entries.push(OrbitEntry {
            j,
            min_distance,
            required_distance: required,
            disjoint,
            midpoint_probes: probes,
            union_hull_separates: separates,
        });
        if disjoint && separates {
            break;
        }
    }
    let found = entries
        .iter()
        .find(|e| e.disjoint && e.union_hull_separates)
        .map(|e| e.j);
    Ok(OrbitReport {
        indices: entries.iter().map(|e| e.j).collect(),
        entries,
        found,
        approximation,
    })
}

/// One step of the orthogonalized monomial recurrence:
/// `q_k = (u_var·q_parent − Σ h_i q_i) / norm`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArnoldiStep {
    pub exponents: Vec<u32>,
    pub var: usize,
    pub parent: usize,
    pub h: Vec<[String; 2]>,
    pub norm: String,
}

/// A polynomial map in the orthogonalized basis built on the fitting points,
/// stored with exact decimal strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArnoldiPolynomial {
    pub center: Vec<[String; 2]>,
    pub scale: String,
    /// `q₀ = q0`, a constant.
    pub q0: String,
    pub steps: Vec<ArnoldiStep>,
    /// Basis coefficients, one row per output component.
    pub coefficients: Vec<Vec<[String; 2]>>,
}

fn num(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("`{s}` is not a decimal number")))
}

fn cnum(p: &[String; 2]) -> Result<Complex64> {
    Ok(Complex64::new(num(&p[0])?, num(&p[1])?))
}

fn cstr(c: Complex64) -> [String; 2] {
    [c.re.to_string(), c.im.to_string()]
}

impl ArnoldiPolynomial {
    pub fn degree(&self) -> u32 {
        self.steps
            .iter()
            .map(|s| s.exponents.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Evaluates from the stored strings alone.
    pub fn eval(&self, z: &PointCn) -> Result<PointCn> {
        z.check_dim(self.center.len())?;
        let scale = num(&self.scale)?;
        let u: Vec<Complex64> = self
            .center
            .iter()
            .zip(z.coords())
            .map(|(c, zi)| Ok((zi - cnum(c)?) / scale))
            .collect::<Result<_>>()?;
        let mut q = vec![Complex64::new(num(&self.q0)?, 0.0)];
        for s in &self.steps {
            let mut v = u[s.var] * q[s.parent];
            for (hi, qi) in s.h.iter().zip(&q) {
                v -= cnum(hi)? * qi;
            }
            let nrm = num(&s.norm)?;
            q.push(if nrm > 0.0 { v / nrm } else { Complex64::new(0.0, 0.0) });
        }
        self.coefficients
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&q)
                    .map(|(c, qi)| Ok(cnum(c)? * qi))
                    .sum::<Result<Complex64>>()
            })
            .collect::<Result<Vec<_>>>()
            .map(PointCn)
    }
}

/// Least-squares fit of a vector-valued polynomial of degree ≤ `degree` to
/// `targets` at `points`, in an orthonormal basis built by Gram–Schmidt on
/// the monomial recurrence, with a ridge `lambda`.
pub fn fit_polynomial_map(
    points: &[PointCn],
    targets: &[PointCn],
    degree: u32,
    lambda: f64,
) -> Result<ArnoldiPolynomial> {
    if points.is_empty() || points.len() != targets.len() {
        return Err(Error::InvalidInput("need matching nonempty points and targets".into()));
    }
    let frame = Frame::fit(points)?;
    let m = points.len();
    let us: Vec<Vec<Complex64>> = points.iter().map(|p| frame.apply(p)).collect();
    let exps = monomials(frame.center.dim(), degree);
    let q0 = 1.0 / (m as f64).sqrt();
    let mut cols: Vec<DVector<Complex64>> = vec![DVector::from_element(m, Complex64::new(q0, 0.0))];
    let mut steps = Vec::with_capacity(exps.len() - 1);
    for alpha in exps.iter().skip(1) {
        let var = alpha.iter().position(|&e| e > 0).expect("non-constant monomial");
        let mut pe = alpha.clone();
        pe[var] -= 1;
        let parent = exps.iter().position(|e| *e == pe).expect("parent precedes child");
        let mut v = DVector::from_iterator(m, (0..m).map(|r| us[r][var] * cols[parent][r]));
        let before = v.norm();
        let mut h = vec![Complex64::new(0.0, 0.0); cols.len()];
        for _ in 0..2 {
            for (i, q) in cols.iter().enumerate() {
                let c = q.dotc(&v);
                h[i] += c;
                v -= q * c;
            }
        }
        let nrm = v.norm();
        let keep = nrm > 1e-13 * before.max(1e-300);
        if keep {
            v /= Complex64::new(nrm, 0.0);
        } else {
            v.fill(Complex64::new(0.0, 0.0));
        }
        steps.push(ArnoldiStep {
            exponents: alpha.clone(),
            var,
            parent,
            h: h.iter().map(|c| cstr(*c)).collect(),
            norm: if keep { nrm.to_string() } else { "0".into() },
        });
        cols.push(v);
    }
    let out_dim = targets[0].dim();
    let mut coefficients = Vec::with_capacity(out_dim);
    for k in 0..out_dim {
        let b = DVector::from_iterator(m, targets.iter().map(|t| t[k]));
        coefficients.push(cols.iter().map(|q| cstr(q.dotc(&b) / (1.0 + lambda))).collect());
    }
    Ok(ArnoldiPolynomial {
        center: frame.center.coords().iter().map(|c| cstr(*c)).collect(),
        scale: frame.scale.to_string(),
        q0: q0.to_string(),
        steps,
        coefficients,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WitnessMap {
    /// `F = g` given as expressions.
    Expr { components: Vec<String> },
    Polynomial(ArnoldiPolynomial),
}

impl WitnessMap {
    pub fn eval(&self, z: &PointCn) -> Result<PointCn> {
        match self {
            WitnessMap::Expr { components } => MapExpr::parse(components, z.dim())?.eval(z),
            WitnessMap::Polynomial(p) => p.eval(z),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitivityWitness {
    pub n: usize,
    pub f: WitnessMap,
    /// `max_K ‖F − g‖`.
    pub err_g: f64,
    /// `max_K ‖F∘τⁿ − h‖`.
    pub err_h: f64,
    pub eps: f64,
}

impl TransitivityWitness {
    /// Recomputes both residuals from the stored map and `τ`.
    pub fn reverify(&self, tau: &AutomorphismSpec, g: &MapExpr, h: &MapExpr, k: &[PointCn]) -> Result<bool> {
        let (eg, eh) = residuals(&self.f, tau, g, h, k, self.n)?;
        Ok(eg <= self.eps && eh <= self.eps)
    }
}

fn residuals(
    f: &WitnessMap,
    tau: &AutomorphismSpec,
    g: &MapExpr,
    h: &MapExpr,
    k: &[PointCn],
    n: usize,
) -> Result<(f64, f64)> {
    let mut eg = 0.0f64;
    let mut eh = 0.0f64;
    for z in k {
        eg = eg.max(f.eval(z)?.distance(&g.eval(z)?));
        eh = eh.max(f.eval(&tau.iterate(z, n)?)?.distance(&h.eval(z)?));
    }
    Ok((eg, eh))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransitivityOutcome {
    Found(TransitivityWitness),
    NotFound { reason: String, best_residual: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransitivityConfig {
    pub eps: f64,
    pub degree_cap: u32,
    pub j_max: usize,
    pub ridge: f64,
}

impl Default for TransitivityConfig {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            degree_cap: 20,
            j_max: 20,
            ridge: 1e-10,
        }
    }
}

/// Finds `n` and a polynomial map `F` with `‖F − g‖ ≤ ε` and
/// `‖F∘τⁿ − h‖ ≤ ε` on `K`, by fitting on `K ∪ τⁿ(K)`.
///
/// `n` starts at the divergence index of `K` under `τ` and increases until
/// the fit succeeds or `j_max` is reached.
pub fn transitivity_witness(
    tau: &AutomorphismSpec,
    g: &MapExpr,
    h: &MapExpr,
    k: &SampleCloud,
    cfg: &TransitivityConfig,
) -> Result<TransitivityOutcome> {
    let n_dim = tau.dim();
    if g.domain_dim() != n_dim || h.domain_dim() != n_dim || g.target_dim() != h.target_dim() {
        return Err(Error::InvalidInput("g and h must map Ω into the same ℂᵐ".into()));
    }
    let mut same = true;
    for z in &k.points {
        if g.eval(z)? != h.eval(z)? {
            same = false;
            break;
        }
    }
    if same {
        let f = WitnessMap::Expr { components: g.texts() };
        return Ok(TransitivityOutcome::Found(TransitivityWitness {
            n: 0,
            f,
            err_g: 0.0,
            err_h: 0.0,
            eps: cfg.eps,
        }));
    }
    let set = CloudSet::new(k.clone());
    let div = compact_divergence_check(tau, &k.points, &set, cfg.j_max)?;
    let Some(j0) = div.j0 else {
        return Ok(TransitivityOutcome::NotFound {
            reason: format!("τʲ(K) still meets K at j = {}", cfg.j_max),
            best_residual: None,
        });
    };
    let mut best: Option<f64> = None;
    for n in j0.max(1)..=cfg.j_max {
        let moved: Vec<PointCn> = k.points.iter().map(|z| tau.iterate(z, n)).collect::<Result<_>>()?;
        let mut pts = k.points.clone();
        pts.extend(moved.iter().cloned());
        let mut targets: Vec<PointCn> = k.points.iter().map(|z| g.eval(z)).collect::<Result<_>>()?;
        for z in &k.points {
            targets.push(h.eval(z)?);
        }
        let poly = fit_polynomial_map(&pts, &targets, cfg.degree_cap, cfg.ridge)?;
        let f = WitnessMap::Polynomial(poly);
        let (eg, eh) = residuals(&f, tau, g, h, &k.points, n)?;
        let r = eg.max(eh);
        best = Some(best.map_or(r, |b: f64| b.min(r)));
        if eg <= cfg.eps && eh <= cfg.eps {
            return Ok(TransitivityOutcome::Found(TransitivityWitness {
                n,
                f,
                err_g: eg,
                err_h: eh,
                eps: cfg.eps,
            }));
        }
    }
    Ok(TransitivityOutcome::NotFound {
        reason: format!("fit residual above {} at degree {}", cfg.eps, cfg.degree_cap),
        best_residual: best,
    })
}

/// Deterministic filled-disc sample in ℂ: a sunflower spiral of `count`
/// points whose last point lies on the rim.
pub fn disc_cloud(center: Complex64, radius: f64, count: usize) -> Result<SampleCloud> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    let denom = (count.max(2) - 1) as f64;
    let pts = (0..count)
        .map(|k| {
            let r = radius * (k as f64 / denom).sqrt();
            PointCn(vec![center + Complex64::from_polar(r, golden * k as f64)])
        })
        .collect();
    SampleCloud::new(pts, format!("disc(c={center}, r={radius}, n={count})"), 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn p1(z: Complex64) -> PointCn {
        PointCn(vec![z])
    }

    fn disc_h(radius: f64) -> Vec<PointCn> {
        let mut h = disc_cloud(c(0.0, 0.0), radius, 20).unwrap().points;
        for e in [c(radius, 0.0), c(-radius, 0.0), c(0.0, radius), c(0.0, -radius)] {
            h.push(p1(e));
        }
        h
    }

    #[test]
    fn poincare_examples() {
        assert_eq!(poincare_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        assert!((poincare_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap() - 0.549306).abs() < 1e-6);
        assert!(matches!(
            poincare_distance(c(1.0, 0.0), c(0.0, 0.0)),
            Err(Error::OutsideDisc(_))
        ));
    }

    #[test]
    fn caratheodory_examples() {
        let disc = unit_disc().unwrap();
        let cfg = CaratheodoryConfig::default();
        let z = p1(c(0.0, 0.0));
        let w = p1(c(0.5, 0.0));
        let id = ScalarExpr::parse("z1", 1).unwrap();
        let b = caratheodory_lb(&disc, &z, &w, &[id], &cfg).unwrap();
        assert!((b.lower_bound - 0.5f64.atanh()).abs() < 1e-5);
        assert_eq!(caratheodory_lb(&disc, &w, &w, &[], &cfg).unwrap().lower_bound, 0.0);

        let bidisc = crate::catalog::builtin("bidisc").unwrap().domain;
        let b = caratheodory_lb(
            &bidisc,
            &PointCn::origin(2),
            &PointCn::from_reals(&[0.5, 0.0]),
            &[],
            &cfg,
        )
        .unwrap();
        assert!((b.lower_bound - 0.5f64.atanh()).abs() < 1e-5);
    }

    #[test]
    fn divergence_examples() {
        let tau = AutomorphismSpec::mobius(c(0.5, 0.0)).unwrap();
        let k = unit_disc().unwrap().scaled(0.9).unwrap();
        let rep = compact_divergence_check(&tau, &disc_h(0.9), &k, 20).unwrap();
        assert_eq!(rep.j0, Some(6));
        // Möbius iteration in artanh coordinates
        let j_closed = (1..).find(|&j| (0.549306 * j as f64 - 1.472219).tanh() > 0.9).unwrap();
        assert_eq!(j_closed, 6);

        let id = AutomorphismSpec::identity(unit_disc().unwrap()).unwrap();
        assert_eq!(compact_divergence_check(&id, &disc_h(0.9), &k, 20).unwrap().j0, None);
        let rot = AutomorphismSpec::rotation(0.7).unwrap();
        assert_eq!(compact_divergence_check(&rot, &disc_h(0.9), &k, 20).unwrap().j0, None);
    }

    #[test]
    fn fixed_point_examples() {
        let starts: Vec<PointCn> = [c(0.3, 0.1), c(-0.5, 0.2), c(0.0, -0.7)].into_iter().map(p1).collect();
        let rot = AutomorphismSpec::rotation(0.7).unwrap();
        match fixed_point_search(&rot, &starts, 50).unwrap() {
            FixedPointResult::FixedPoint { point, .. } => assert!(point.norm() < 1e-9),
            other => panic!("{other:?}"),
        }
        let tau = AutomorphismSpec::mobius(c(0.5, 0.0)).unwrap();
        assert!(matches!(
            fixed_point_search(&tau, &starts, 50).unwrap(),
            FixedPointResult::NoneFound { .. }
        ));
        let id = AutomorphismSpec::identity(unit_disc().unwrap()).unwrap();
        match fixed_point_search(&id, &starts, 50).unwrap() {
            FixedPointResult::FixedPoint { point, start, .. } => {
                assert_eq!(start, 0);
                assert_eq!(point, starts[0]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn translation_examples() {
        let tau = AutomorphismSpec::mobius(c(0.5, 0.0)).unwrap();
        let k = disc_cloud(c(0.0, 0.0), 0.3, 50).unwrap();
        let rep = generalized_translation_check(&tau, &k, 6, &HullConfig::default()).unwrap();
        let j = rep.found.expect("translation index");
        assert_eq!(j, 2);
        let entry = rep.entries.iter().find(|e| e.j == j).unwrap();
        for cert in &entry.midpoint_probes {
            let union: Vec<PointCn> = k
                .points
                .iter()
                .map(|z| tau.iterate(z, j).unwrap())
                .chain(k.points.iter().cloned())
                .collect();
            assert!(cert.reverify(&union).unwrap());
        }

        let annulus: Vec<PointCn> = (0..60)
            .map(|i| {
                let r = if i % 2 == 0 { 0.4 } else { 0.5 };
                p1(Complex64::from_polar(r, i as f64 * 0.2))
            })
            .collect();
        let annulus = SampleCloud::new(annulus, "annulus", 0).unwrap();
        let rot = AutomorphismSpec::rotation(0.7).unwrap();
        let rep = generalized_translation_check(&rot, &annulus, 5, &HullConfig::default()).unwrap();
        assert!(!rep.passed());
        assert!(rep.entries.iter().all(|e| !e.disjoint));

        let rep = generalized_translation_check(&tau, &k, 0, &HullConfig::default()).unwrap();
        assert!(rep.entries.is_empty() && !rep.passed());
    }

    #[test]
    fn transitivity_examples() {
        let tau = AutomorphismSpec::mobius(c(0.5, 0.0)).unwrap();
        let k = disc_cloud(c(0.0, 0.0), 0.3, 50).unwrap();
        let g = MapExpr::parse(&["z1"], 1).unwrap();
        let h = MapExpr::parse(&["z1^2"], 1).unwrap();
        let cfg = TransitivityConfig::default();
        match transitivity_witness(&tau, &g, &h, &k, &cfg).unwrap() {
            TransitivityOutcome::Found(w) => {
                assert!(w.n >= 2);
                assert!(w.err_g <= 1e-3 && w.err_h <= 1e-3);
                let text = serde_json::to_string(&w).unwrap();
                let back: TransitivityWitness = serde_json::from_str(&text).unwrap();
                assert!(back.reverify(&tau, &g, &h, &k.points).unwrap());
            }
            other => panic!("{other:?}"),
        }

        match transitivity_witness(&tau, &g, &g, &k, &cfg).unwrap() {
            TransitivityOutcome::Found(w) => {
                assert_eq!(w.n, 0);
                assert_eq!(w.err_g, 0.0);
            }
            other => panic!("{other:?}"),
        }

        let rot = AutomorphismSpec::rotation(0.7).unwrap();
        assert!(matches!(
            transitivity_witness(&rot, &g, &h, &k, &cfg).unwrap(),
            TransitivityOutcome::NotFound { .. }
        ));
    }

    #[test]
    fn builtin_names() {
        assert!(AutomorphismSpec::builtin("mobius(0.5)").is_ok());
        assert!(AutomorphismSpec::builtin("rotation(1.2)").is_ok());
        assert!(AutomorphismSpec::builtin("identity").is_ok());
        assert!(matches!(AutomorphismSpec::builtin("shear"), Err(Error::UnknownName(_))));
        assert!(matches!(AutomorphismSpec::mobius(c(1.0, 0.0)), Err(Error::OutsideDisc(_))));
    }

    #[test]
    fn arnoldi_fit_reproduces_low_degree_polynomials() {
        let pts: Vec<PointCn> = disc_cloud(c(0.2, 0.1), 0.5, 30).unwrap().points;
        let targets: Vec<PointCn> = pts.iter().map(|p| p1(p[0] * p[0] * 3.0 - p[0] + c(0.0, 1.0))).collect();
        let f = fit_polynomial_map(&pts, &targets, 4, 0.0).unwrap();
        let z = p1(c(-0.1, 0.3));
        let want = z[0] * z[0] * 3.0 - z[0] + c(0.0, 1.0);
        assert!((f.eval(&z).unwrap()[0] - want).norm() < 1e-10);
    }

    proptest! {
        #[test]
        fn poincare_triangle_and_symmetry(
            a in (0.0f64..0.95, 0.0f64..6.3), b in (0.0f64..0.95, 0.0f64..6.3), d in (0.0f64..0.95, 0.0f64..6.3)
        ) {
            let a = Complex64::from_polar(a.0, a.1);
            let b = Complex64::from_polar(b.0, b.1);
            let d = Complex64::from_polar(d.0, d.1);
            let ab = poincare_distance(a, b).unwrap();
            prop_assert!((ab - poincare_distance(b, a).unwrap()).abs() < 1e-12);
            prop_assert!(ab <= poincare_distance(a, d).unwrap() + poincare_distance(d, b).unwrap() + 1e-10);
        }

        #[test]
        fn caratheodory_below_poincare_on_disc(
            a in (0.0f64..0.9, 0.0f64..6.3), b in (0.0f64..0.9, 0.0f64..6.3)
        ) {
            let a = Complex64::from_polar(a.0, a.1);
            let b = Complex64::from_polar(b.0, b.1);
            let cfg = CaratheodoryConfig { budget: 8, boundary_samples: 256, ..CaratheodoryConfig::default() };
            let lb = caratheodory_lb(&unit_disc().unwrap(), &p1(a), &p1(b), &[], &cfg).unwrap();
            prop_assert!(lb.lower_bound <= poincare_distance(a, b).unwrap() + 1e-6);
        }

        #[test]
        fn divergence_monotone_in_k(r1 in 0.1f64..0.9, r2 in 0.1f64..0.9) {
            let (small, big) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let tau = AutomorphismSpec::mobius(Complex64::new(0.5, 0.0)).unwrap();
            let h = disc_h(0.9);
            let d = unit_disc().unwrap();
            let js = compact_divergence_check(&tau, &h, &d.scaled(small).unwrap(), 30).unwrap().j0.unwrap();
            let jb = compact_divergence_check(&tau, &h, &d.scaled(big).unwrap(), 30).unwrap().j0.unwrap();
            prop_assert!(js <= jb);
        }
    }
}
