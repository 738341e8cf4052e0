//! Polynomial-convexity probes on sampled compacts and the Runge-basis
//! inclusion checks for flows.
//!
//! All verdicts concern the hull of the *sampled* set. A `Separated`
//! certificate proves the query lies outside that hull; `Inconclusive`
//! proves nothing.

mod poly;
mod runge;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::PointCn;
use crate::sampling;

pub use poly::{eval_monomials, monomials, Frame, PolynomialWitness, Term};
pub use runge::{closure_layers, runge_basis_check, RungeConfig, RungeReport, RungeRow};

/// Smallest gap accepted for a separation certificate.
pub const MIN_GAP: f64 = 1e-6;
const RANDOM_LINEAR_SEEDS: usize = 4;

/// Finite sample of a compact set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleCloud {
    pub points: Vec<PointCn>,
    pub label: String,
    pub seed: u64,
}

impl SampleCloud {
    pub fn new(points: Vec<PointCn>, label: impl Into<String>, seed: u64) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("sample cloud is empty".into()))?;
        let n = first.dim();
        for p in &points {
            p.check_dim(n)?;
            if !p.is_finite() {
                return Err(Error::InvalidInput("sample cloud has non-finite points".into()));
            }
        }
        Ok(Self {
            points,
            label: label.into(),
            seed,
        })
    }

    pub fn dim(&self) -> usize {
        self.points[0].dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `count` equally spaced points on the circle `|z − c| = r` in ℂ.
    pub fn circle(center: Complex64, radius: f64, count: usize) -> Result<Self> {
        let pts = (0..count)
            .map(|k| {
                let th = std::f64::consts::TAU * k as f64 / count as f64;
                PointCn(vec![center + Complex64::from_polar(radius, th)])
            })
            .collect();
        Self::new(pts, format!("circle(c={center}, r={radius}, n={count})"), 0)
    }

    /// The torus `{|z₁| = r₁, |z₂| = r₂}` on an `m × m` angle grid.
    pub fn torus(r1: f64, r2: f64, m: usize) -> Result<Self> {
        let mut pts = Vec::with_capacity(m * m);
        for a in 0..m {
            for b in 0..m {
                let ta = std::f64::consts::TAU * a as f64 / m as f64;
                let tb = std::f64::consts::TAU * b as f64 / m as f64;
                pts.push(PointCn(vec![
                    Complex64::from_polar(r1, ta),
                    Complex64::from_polar(r2, tb),
                ]));
            }
        }
        Self::new(pts, format!("torus({r1}, {r2}, {m}x{m})"), 0)
    }

    /// Union of two clouds in the same dimension.
    pub fn union(&self, other: &SampleCloud) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        Self::new(pts, format!("{} ∪ {}", self.label, other.label), self.seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HullConfig {
    pub degree_cap: u32,
    /// Total Lawson iterations (objective evaluations) across all degrees.
    pub budget: usize,
    pub seed: u64,
}

impl Default for HullConfig {
    fn default() -> Self {
        Self {
            degree_cap: 8,
            budget: 2000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HullVerdict {
    Separated {
        witness: PolynomialWitness,
        degree: u32,
        gap: f64,
    },
    Inconclusive {
        degree_cap: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullCertificate {
    pub query: PointCn,
    pub verdict: HullVerdict,
    pub evaluations: usize,
    /// Always "of the sampled set": the probe never sees the true compact.
    pub scope: String,
}

impl HullCertificate {
    pub fn is_separated(&self) -> bool {
        matches!(self.verdict, HullVerdict::Separated { .. })
    }

    /// Re-checks a `Separated` certificate from the stored coefficients only.
    /// `Inconclusive` certificates claim nothing and always pass.
    pub fn reverify(&self, k: &[PointCn]) -> Result<bool> {
        match &self.verdict {
            HullVerdict::Separated { witness, .. } => Ok(witness.gap(k, &self.query)? >= MIN_GAP),
            HullVerdict::Inconclusive { .. } => Ok(true),
        }
    }
}

fn degree_ladder(cap: u32) -> Vec<u32> {
    let mut out = Vec::new();
    let mut d = 1;
    while d < cap {
        out.push(d);
        d *= 2;
    }
    out.push(cap);
    out
}

/// Best verified witness at one degree, or `None`.
struct Attempt {
    witness: Option<(PolynomialWitness, f64)>,
    iterations: usize,
}

/// Lawson iteration for `min max_K |p|` subject to `p(z₀) = 1` over
/// polynomials of degree ≤ `degree`, in an SVD-orthonormalized basis.
fn lawson(
    k: &[PointCn],
    frame: &Frame,
    z0: &PointCn,
    degree: u32,
    max_iter: usize,
) -> Attempt {
    let exps = monomials(k[0].dim(), degree);
    let m = exps.len() - 1;
    let u0 = eval_monomials(&exps, &frame.apply(z0));
    let nk = k.len();
    let mut b = DMatrix::<Complex64>::zeros(nk, m);
    for (i, w) in k.iter().enumerate() {
        let row = eval_monomials(&exps, &frame.apply(w));
        for j in 0..m {
            b[(i, j)] = row[j + 1] - u0[j + 1];
        }
    }
    let svd = b.svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Attempt {
            witness: None,
            iterations: 0,
        };
    };
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Attempt {
            witness: None,
            iterations: 0,
        };
    }
    let rank = svd
        .singular_values
        .iter()
        .take_while(|s| **s > 1e-12 * smax)
        .count();
    let q = u.columns(0, rank).into_owned();
    let one = Complex64::new(1.0, 0.0);

    let mut w = vec![1.0 / nk as f64; nk];
    let mut best: Option<(f64, DVector<Complex64>)> = None;
    let mut since_improved = 0;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        // weighted normal equations G c = −Qᴴ W 1
        let mut g = DMatrix::<Complex64>::zeros(rank, rank);
        let mut rhs = DVector::<Complex64>::zeros(rank);
        for i in 0..nk {
            let wi = w[i];
            if wi == 0.0 {
                continue;
            }
            for a in 0..rank {
                let qa = q[(i, a)].conj() * wi;
                rhs[a] -= qa;
                for bcol in a..rank {
                    g[(a, bcol)] += qa * q[(i, bcol)];
                }
            }
        }
        for a in 0..rank {
            for bcol in 0..a {
                g[(a, bcol)] = g[(bcol, a)].conj();
            }
        }
        let ridge = 1e-14 * (0..rank).map(|a| g[(a, a)].re).sum::<f64>().max(1e-300);
        let Some(c) = crate::linalg::solve_regularized(&g, &rhs, ridge) else {
            break;
        };
        let res: Vec<Complex64> = (0..nk)
            .map(|i| one + (0..rank).map(|a| q[(i, a)] * c[a]).sum::<Complex64>())
            .collect();
        let mods: Vec<f64> = res.iter().map(|r| r.norm()).collect();
        let mu = mods.iter().copied().fold(0.0, f64::max);
        // weighted L2 error bounds the minimax value from below
        let lower = mods
            .iter()
            .zip(&w)
            .map(|(r, wi)| wi * r * r)
            .sum::<f64>()
            .sqrt();
        match &best {
            Some((bm, _)) if mu >= *bm * (1.0 - 1e-9) => since_improved += 1,
            _ => {
                best = Some((mu, c.clone()));
                since_improved = 0;
            }
        }
        if lower >= 1.0 - 1e-12 || since_improved >= 30 {
            break;
        }
        let total: f64 = w.iter().zip(&mods).map(|(wi, r)| wi * r).sum();
        if !(total > 0.0) {
            break;
        }
        for (wi, r) in w.iter_mut().zip(&mods) {
            *wi = *wi * r / total;
        }
    }
    let Some((mu, c)) = best else {
        return Attempt {
            witness: None,
            iterations,
        };
    };
    if mu >= 1.0 {
        return Attempt {
            witness: None,
            iterations,
        };
    }
    // back to monomial coefficients: B a = Q c  ⇒  a = V Σ⁻¹ c
    let mut a = vec![Complex64::new(0.0, 0.0); m];
    for (j, aj) in a.iter_mut().enumerate() {
        for r in 0..rank {
            *aj += v_t[(r, j)].conj() * c[r] / svd.singular_values[r];
        }
    }
    let mut coeffs = vec![one - (0..m).map(|j| a[j] * u0[j + 1]).sum::<Complex64>()];
    coeffs.extend(a);
    let witness = PolynomialWitness::new(frame, &exps, &coeffs);
    let verified = witness
        .gap(k, z0)
        .ok()
        .filter(|g| *g >= MIN_GAP)
        .map(|g| (witness, g));
    Attempt {
        witness: verified,
        iterations,
    }
}

/// Cheap degree-one candidates: coordinate functions, the affine form
/// pointing at `z₀`, and a few random linear forms.
fn seed_candidates(
    k: &[PointCn],
    frame: &Frame,
    z0: &PointCn,
    seed: u64,
) -> Option<(PolynomialWitness, f64)> {
    let n = z0.dim();
    let u0 = frame.apply(z0);
    let mut forms: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::new(0.0, 0.0); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    forms.push(u0.iter().map(|x| x.conj()).collect());
    let mut rng = sampling::rng_for(seed, u64::MAX);
    for _ in 0..RANDOM_LINEAR_SEEDS {
        forms.push(
            (0..n)
                .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect(),
        );
    }
    let exps = monomials(n, 1);
    let mut best: Option<(PolynomialWitness, f64)> = None;
    for f in forms {
        let at0: Complex64 = f.iter().zip(&u0).map(|(a, b)| a * b).sum();
        if at0.norm() < 1e-300 {
            continue;
        }
        let mut coeffs = vec![Complex64::new(0.0, 0.0)];
        coeffs.extend(f.iter().map(|c| c / at0));
        let w = PolynomialWitness::new(frame, &exps, &coeffs);
        if let Ok(g) = w.gap(k, z0) {
            if g >= MIN_GAP && best.as_ref().is_none_or(|(_, bg)| g > *bg) {
                best = Some((w, g));
            }
        }
    }
    best
}

/// Searches for a polynomial of degree ≤ `degree_cap` that is larger at `z0`
/// than anywhere on the sampled `k`.
pub fn hull_probe(k: &SampleCloud, z0: &PointCn, cfg: &HullConfig) -> Result<HullCertificate> {
    if cfg.degree_cap == 0 {
        return Err(Error::InvalidInput("degree cap must be at least 1".into()));
    }
    z0.check_dim(k.dim())?;
    let frame = Frame::fit(&k.points)?;
    let scope = format!("hull of the sampled set `{}`", k.label);
    let mut evaluations = 0;
    let ladder = degree_ladder(cfg.degree_cap);

    let seeded = seed_candidates(&k.points, &frame, z0, cfg.seed);
    for (step, &degree) in ladder.iter().enumerate() {
        let left = cfg.budget.saturating_sub(evaluations);
        if left == 0 {
            break;
        }
        let share = (left / (ladder.len() - step)).max(1);
        let attempt = lawson(&k.points, &frame, z0, degree, share);
        evaluations += attempt.iterations;
        let mut found = attempt.witness;
        if degree == 1 {
            if let Some((w, g)) = &seeded {
                if found.as_ref().is_none_or(|(_, fg)| g > fg) {
                    found = Some((w.clone(), *g));
                }
            }
        }
        if let Some((witness, gap)) = found {
            return Ok(HullCertificate {
                query: z0.clone(),
                verdict: HullVerdict::Separated {
                    degree: witness.degree(),
                    witness,
                    gap,
                },
                evaluations,
                scope,
            });
        }
    }
    Ok(HullCertificate {
        query: z0.clone(),
        verdict: match seeded {
            Some((witness, gap)) => HullVerdict::Separated {
                degree: witness.degree(),
                witness,
                gap,
            },
            None => HullVerdict::Inconclusive {
                degree_cap: cfg.degree_cap,
            },
        },
        evaluations,
        scope,
    })
}

/// `hull_probe` for every grid point; point `i` uses seed stream `i`.
pub fn hull_membership_grid(
    k: &SampleCloud,
    grid: &[PointCn],
    cfg: &HullConfig,
) -> Result<Vec<HullCertificate>> {
    grid.par_iter()
        .enumerate()
        .map(|(i, z)| {
            let local = HullConfig {
                seed: cfg.seed.wrapping_add(i as u64),
                ..*cfg
            };
            hull_probe(k, z, &local)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(re: f64, im: f64) -> PointCn {
        PointCn(vec![c(re, im)])
    }

    #[test]
    fn circle_examples() {
        let k = SampleCloud::circle(c(0.0, 0.0), 1.0, 64).unwrap();
        let cert = hull_probe(&k, &pt(2.0, 0.0), &HullConfig::default()).unwrap();
        match &cert.verdict {
            HullVerdict::Separated { degree, gap, .. } => {
                assert_eq!(*degree, 1);
                assert!((gap - 1.0).abs() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        assert!(cert.reverify(&k.points).unwrap());
        for cap in [1, 2, 4, 8, 12] {
            let cfg = HullConfig {
                degree_cap: cap,
                ..HullConfig::default()
            };
            assert!(!hull_probe(&k, &pt(0.0, 0.0), &cfg).unwrap().is_separated());
        }
    }

    #[test]
    fn torus_coordinate_witness() {
        let k = SampleCloud::torus(1.0, 1.0, 32).unwrap();
        let z0 = PointCn(vec![c(1.5, 0.0), c(0.0, 0.0)]);
        let cert = hull_probe(&k, &z0, &HullConfig::default()).unwrap();
        assert!(cert.is_separated());
        assert!(cert.reverify(&k.points).unwrap());
        if let HullVerdict::Separated { witness, gap, .. } = &cert.verdict {
            assert_eq!(witness.degree(), 1);
            assert!((gap - 0.5).abs() < 1e-6);
            // depends on z1 only
            let a = witness.eval(&PointCn(vec![c(0.3, 0.1), c(0.9, 0.0)])).unwrap();
            let b = witness.eval(&PointCn(vec![c(0.3, 0.1), c(-0.2, 0.4)])).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn grid_examples() {
        let k = SampleCloud::circle(c(0.0, 0.0), 1.0, 64).unwrap();
        let grid = [pt(0.0, 0.0), pt(0.5, 0.0), pt(2.0, 0.0), pt(3.0, 0.0)];
        let certs = hull_membership_grid(&k, &grid, &HullConfig::default()).unwrap();
        let sep: Vec<bool> = certs.iter().map(|c| c.is_separated()).collect();
        assert_eq!(sep, vec![false, false, true, true]);
        assert!(hull_membership_grid(&k, &[], &HullConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn two_discs_midpoint_is_separated() {
        let a = SampleCloud::circle(c(0.0, 0.0), 1.0, 128).unwrap();
        let b = SampleCloud::circle(c(5.0, 0.0), 1.0, 128).unwrap();
        let k = a.union(&b).unwrap();
        let cert = hull_probe(&k, &pt(2.5, 0.0), &HullConfig::default()).unwrap();
        assert!(cert.is_separated());
        assert!(cert.reverify(&k.points).unwrap());
        assert!(!hull_probe(&k, &pt(5.2, 0.1), &HullConfig::default()).unwrap().is_separated());
    }

    #[test]
    fn scaling_preserves_verdicts() {
        let lambda = c(-0.7, 1.9);
        let k = SampleCloud::circle(c(0.0, 0.0), 1.0, 64).unwrap();
        let ks = SampleCloud::new(
            k.points.iter().map(|p| p.scale(lambda)).collect(),
            "scaled",
            0,
        )
        .unwrap();
        for q in [pt(0.0, 0.0), pt(0.3, -0.2), pt(1.3, 0.4), pt(-2.0, 1.0)] {
            let a = hull_probe(&k, &q, &HullConfig::default()).unwrap();
            let b = hull_probe(&ks, &q.scale(lambda), &HullConfig::default()).unwrap();
            assert_eq!(a.is_separated(), b.is_separated());
        }
    }

    #[test]
    fn separation_is_monotone_in_cap() {
        let a = SampleCloud::circle(c(0.0, 0.0), 1.0, 128).unwrap();
        let b = SampleCloud::circle(c(5.0, 0.0), 1.0, 128).unwrap();
        let k = a.union(&b).unwrap();
        let q = pt(2.5, 0.3);
        let mut seen = false;
        for cap in 1..=8 {
            let cfg = HullConfig {
                degree_cap: cap,
                ..HullConfig::default()
            };
            let s = hull_probe(&k, &q, &cfg).unwrap().is_separated();
            assert!(!seen || s, "lost separation at cap {cap}");
            seen |= s;
        }
        assert!(seen);
    }
}
