//! Polynomials in ℂⁿ written in shifted, scaled coordinates `u = (z − c)/s`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::PointCn;

/// Exponent vectors of total degree ≤ `degree`, graded, lexicographic
/// within each degree. The constant term comes first.
pub fn monomials(dim: usize, degree: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    for total in 0..=degree {
        let mut cur = vec![0u32; dim];
        fill(&mut out, &mut cur, 0, total);
    }
    out
}

fn fill(out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>, k: usize, left: u32) {
    if k + 1 == cur.len() {
        cur[k] = left;
        out.push(cur.clone());
        return;
    }
    for e in (0..=left).rev() {
        cur[k] = e;
        fill(out, cur, k + 1, left - e);
    }
    cur[k] = 0;
}

/// All monomials at `u`, in the order of `exps`.
pub fn eval_monomials(exps: &[Vec<u32>], u: &[Complex64]) -> Vec<Complex64> {
    let max_deg = exps.iter().flatten().copied().max().unwrap_or(0) as usize;
    let powers: Vec<Vec<Complex64>> = u
        .iter()
        .map(|&x| {
            let mut p = Vec::with_capacity(max_deg + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=max_deg {
                p.push(acc);
                acc *= x;
            }
            p
        })
        .collect();
    exps.iter()
        .map(|e| {
            e.iter()
                .enumerate()
                .fold(Complex64::new(1.0, 0.0), |acc, (k, &ek)| acc * powers[k][ek as usize])
        })
        .collect()
}

/// Affine change of variables `u = (z − center)/scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub center: PointCn,
    pub scale: f64,
}

impl Frame {
    /// Centroid of the points and the largest distance to it.
    pub fn fit(points: &[PointCn]) -> Result<Self> {
        let first = points
            .first()
            .ok_or_else(|| Error::InvalidInput("cannot fit a frame to no points".into()))?;
        let n = first.dim();
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for p in points {
            for (ci, pi) in c.iter_mut().zip(p.coords()) {
                *ci += pi;
            }
        }
        let center = PointCn(c.into_iter().map(|x| x / points.len() as f64).collect());
        let scale = points.iter().map(|p| p.distance(&center)).fold(0.0, f64::max);
        Ok(Self {
            center,
            scale: if scale > 0.0 { scale } else { 1.0 },
        })
    }

    pub fn apply(&self, z: &PointCn) -> Vec<Complex64> {
        z.coords()
            .iter()
            .zip(self.center.coords())
            .map(|(a, b)| (a - b) / self.scale)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    /// Real and imaginary parts as shortest round-trip decimal strings.
    pub re: String,
    pub im: String,
}

/// A polynomial `Σ c_α u^α` in `u = (z − center)/scale`, stored with exact
/// decimal strings so that it re-evaluates bit for bit after serialization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolynomialWitness {
    pub center: Vec<[String; 2]>,
    pub scale: String,
    pub terms: Vec<Term>,
}

fn num(s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("`{s}` is not a decimal number")))
}

impl PolynomialWitness {
    pub fn new(frame: &Frame, exps: &[Vec<u32>], coeffs: &[Complex64]) -> Self {
        Self {
            center: frame
                .center
                .coords()
                .iter()
                .map(|c| [c.re.to_string(), c.im.to_string()])
                .collect(),
            scale: frame.scale.to_string(),
            terms: exps
                .iter()
                .zip(coeffs)
                .filter(|(_, c)| c.norm() != 0.0)
                .map(|(e, c)| Term {
                    exponents: e.clone(),
                    re: c.re.to_string(),
                    im: c.im.to_string(),
                })
                .collect(),
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|t| t.exponents.iter().sum())
            .max()
            .unwrap_or(0)
    }

    /// Evaluates from the stored strings alone.
    pub fn eval(&self, z: &PointCn) -> Result<Complex64> {
        z.check_dim(self.center.len())?;
        let scale = num(&self.scale)?;
        let u: Vec<Complex64> = self
            .center
            .iter()
            .zip(z.coords())
            .map(|(c, zi)| Ok((zi - Complex64::new(num(&c[0])?, num(&c[1])?)) / scale))
            .collect::<Result<_>>()?;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mono = t
                .exponents
                .iter()
                .zip(&u)
                .fold(Complex64::new(1.0, 0.0), |m, (&e, &x)| m * x.powu(e));
            acc += Complex64::new(num(&t.re)?, num(&t.im)?) * mono;
        }
        Ok(acc)
    }

    /// `|p(z₀)| / max_K |p| − 1`, recomputed independently.
    pub fn gap(&self, k: &[PointCn], z0: &PointCn) -> Result<f64> {
        let top = self.eval(z0)?.norm();
        let mut sup = 0.0f64;
        for w in k {
            sup = sup.max(self.eval(w)?.norm());
        }
        Ok(if sup == 0.0 {
            if top > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            top / sup - 1.0
        })
    }
}
