//! Wirtinger differentiation on expression trees.
//!
//! `z_j` and `z̄_j` are treated as independent variables. Non-holomorphic nodes
//! reduce to holomorphic pieces: `|u| = (u ū)^{1/2}`, `re u = (u + ū)/2`,
//! `im u = (u − ū)/2i`, with `∂ū/∂z = conj(∂u/∂z̄)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use super::{add, conj, div, eval_node, konst, mul, neg, pow, sub, Node, ScalarExpr};
use crate::error::Result;
use crate::point::PointCn;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiffMethod {
    Exact,
    CentralDifference { h: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WirtingerGrad {
    pub dz: Vec<Complex64>,
    pub dzbar: Vec<Complex64>,
    pub method: DiffMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealHessian {
    /// Symmetric 2n×2n matrix in coordinates `(x₁, y₁, …, xₙ, yₙ)`.
    pub matrix: DMatrix<f64>,
    pub method: DiffMethod,
}

/// `(∂/∂z_j, ∂/∂z̄_j)` of a node.
fn diff_pair(n: &Arc<Node>, j: usize) -> (Arc<Node>, Arc<Node>) {
    let two = || konst(Complex64::new(2.0, 0.0));
    match n.as_ref() {
        Node::Const(_) => (super::zero(), super::zero()),
        Node::Var(k) if *k == j => (konst(Complex64::new(1.0, 0.0)), super::zero()),
        Node::Var(_) => (super::zero(), super::zero()),
        Node::Conj(a) => {
            let (az, azb) = diff_pair(a, j);
            (conj(azb), conj(az))
        }
        Node::Neg(a) => {
            let (az, azb) = diff_pair(a, j);
            (neg(az), neg(azb))
        }
        Node::Add(a, b) => {
            let (az, azb) = diff_pair(a, j);
            let (bz, bzb) = diff_pair(b, j);
            (add(az, bz), add(azb, bzb))
        }
        Node::Sub(a, b) => {
            let (az, azb) = diff_pair(a, j);
            let (bz, bzb) = diff_pair(b, j);
            (sub(az, bz), sub(azb, bzb))
        }
        Node::Mul(a, b) => {
            let (az, azb) = diff_pair(a, j);
            let (bz, bzb) = diff_pair(b, j);
            let prod = |da: Arc<Node>, db: Arc<Node>| {
                add(mul(da, b.clone()), mul(a.clone(), db))
            };
            (prod(az, bz), prod(azb, bzb))
        }
        Node::Div(a, b) => {
            let (az, azb) = diff_pair(a, j);
            let (bz, bzb) = diff_pair(b, j);
            let quot = |da: Arc<Node>, db: Arc<Node>| {
                sub(
                    div(da, b.clone()),
                    div(mul(a.clone(), db), pow(b.clone(), 2)),
                )
            };
            (quot(az, bz), quot(azb, bzb))
        }
        Node::Pow(a, k) => {
            let (az, azb) = diff_pair(a, j);
            let outer = mul(konst(Complex64::new(*k as f64, 0.0)), pow(a.clone(), k - 1));
            (mul(outer.clone(), az), mul(outer, azb))
        }
        Node::Exp(a) => {
            let (az, azb) = diff_pair(a, j);
            (mul(n.clone(), az), mul(n.clone(), azb))
        }
        Node::Log(a) => {
            let (az, azb) = diff_pair(a, j);
            (div(az, a.clone()), div(azb, a.clone()))
        }
        Node::Abs(a) => {
            let (az, azb) = diff_pair(a, j);
            let den = mul(two(), n.clone());
            let abar = conj(a.clone());
            let dz = add(mul(abar.clone(), az.clone()), mul(a.clone(), conj(azb.clone())));
            let dzb = add(mul(abar, azb), mul(a.clone(), conj(az)));
            (div(dz, den.clone()), div(dzb, den))
        }
        Node::Re(a) => {
            let (az, azb) = diff_pair(a, j);
            let half = konst(Complex64::new(0.5, 0.0));
            (
                mul(half.clone(), add(az.clone(), conj(azb.clone()))),
                mul(half, add(azb, conj(az))),
            )
        }
        Node::Im(a) => {
            let (az, azb) = diff_pair(a, j);
            let c = konst(Complex64::new(0.0, -0.5)); // 1/(2i)
            (
                mul(c.clone(), sub(az.clone(), conj(azb.clone()))),
                mul(c, sub(azb, conj(az))),
            )
        }
    }
}

/// Real-direction partials from a Wirtinger pair: `∂x = ∂z + ∂z̄`, `∂y = i(∂z − ∂z̄)`.
fn real_partials(n: &Arc<Node>, j: usize) -> (Arc<Node>, Arc<Node>) {
    let (dz, dzb) = diff_pair(n, j);
    (
        add(dz.clone(), dzb.clone()),
        mul(konst(I), sub(dz, dzb)),
    )
}

/// Precompiled Wirtinger gradient of one expression.
#[derive(Debug, Clone)]
pub struct GradientForm {
    expr: ScalarExpr,
    dz: Vec<Arc<Node>>,
    dzbar: Vec<Arc<Node>>,
}

impl GradientForm {
    pub fn new(expr: &ScalarExpr) -> Self {
        let (dz, dzbar) = (0..expr.dim()).map(|j| diff_pair(expr.root(), j)).unzip();
        Self {
            expr: expr.clone(),
            dz,
            dzbar,
        }
    }

    pub fn expr(&self) -> &ScalarExpr {
        &self.expr
    }

    pub fn eval(&self, p: &PointCn) -> Result<WirtingerGrad> {
        self.expr.check_regular(p)?;
        let z = p.coords();
        Ok(WirtingerGrad {
            dz: self.dz.iter().map(|d| eval_node(d, z)).collect::<Result<_>>()?,
            dzbar: self.dzbar.iter().map(|d| eval_node(d, z)).collect::<Result<_>>()?,
            method: DiffMethod::Exact,
        })
    }

    /// Only `∂/∂z_j`; skips the conjugate half.
    pub fn eval_dz(&self, p: &PointCn) -> Result<Vec<Complex64>> {
        self.expr.check_regular(p)?;
        self.dz.iter().map(|d| eval_node(d, p.coords())).collect()
    }

    /// Gradient of the real part in real coordinates `(∂x₁, ∂y₁, …)`.
    pub fn real_gradient(&self, p: &PointCn) -> Result<Vec<f64>> {
        let g = self.eval(p)?;
        Ok(g.dz
            .iter()
            .zip(&g.dzbar)
            .flat_map(|(a, b)| {
                let dx = a + b;
                let dy = I * (a - b);
                [dx.re, dy.re]
            })
            .collect())
    }
}

/// Precompiled real Hessian (upper triangle) of one expression.
#[derive(Debug, Clone)]
pub struct HessianForm {
    expr: ScalarExpr,
    second: Vec<Vec<Arc<Node>>>,
}

impl HessianForm {
    pub fn new(expr: &ScalarExpr) -> Self {
        let n = expr.dim();
        let first: Vec<Arc<Node>> = (0..n)
            .flat_map(|j| {
                let (dx, dy) = real_partials(expr.root(), j);
                [dx, dy]
            })
            .collect();
        let second = first
            .iter()
            .enumerate()
            .map(|(a, da)| {
                (0..n)
                    .flat_map(|j| {
                        let (dx, dy) = real_partials(da, j);
                        [dx, dy]
                    })
                    .skip(a)
                    .collect()
            })
            .collect();
        Self {
            expr: expr.clone(),
            second,
        }
    }

    /// Hessian of the complex-valued expression: entry `(a,b)` is
    /// `∂²f/∂u_a∂u_b` over real coordinates; real/imag parts are the Hessians
    /// of `Re f` and `Im f`.
    pub fn eval_complex(&self, p: &PointCn) -> Result<DMatrix<Complex64>> {
        self.expr.check_regular(p)?;
        let m = 2 * self.expr.dim();
        let mut h = DMatrix::zeros(m, m);
        for (a, row) in self.second.iter().enumerate() {
            for (off, node) in row.iter().enumerate() {
                let b = a + off;
                let v = eval_node(node, p.coords())?;
                h[(a, b)] = v;
                h[(b, a)] = v;
            }
        }
        Ok(h)
    }

    pub fn eval(&self, p: &PointCn) -> Result<RealHessian> {
        let h = self.eval_complex(p)?;
        Ok(RealHessian {
            matrix: h.map(|c| c.re),
            method: DiffMethod::Exact,
        })
    }
}

pub fn wirtinger_grad(expr: &ScalarExpr, p: &PointCn) -> Result<WirtingerGrad> {
    GradientForm::new(expr).eval(p)
}

pub fn real_gradient(expr: &ScalarExpr, p: &PointCn) -> Result<Vec<f64>> {
    GradientForm::new(expr).real_gradient(p)
}

pub fn real_hessian(expr: &ScalarExpr, p: &PointCn) -> Result<RealHessian> {
    HessianForm::new(expr).eval(p)
}

fn shifted(p: &PointCn, axis: usize, delta: f64) -> PointCn {
    let mut q = p.clone();
    if axis.is_multiple_of(2) {
        q[axis / 2].re += delta;
    } else {
        q[axis / 2].im += delta;
    }
    q
}

/// Central-difference Wirtinger gradient with `h = 1e-6·(1+‖p‖)`.
pub fn wirtinger_grad_fd(expr: &ScalarExpr, p: &PointCn) -> Result<WirtingerGrad> {
    expr.check_regular(p)?;
    let h = 1e-6 * (1.0 + p.norm());
    let mut dz = Vec::with_capacity(p.dim());
    let mut dzbar = Vec::with_capacity(p.dim());
    for j in 0..p.dim() {
        let fx = (expr.eval(&shifted(p, 2 * j, h))? - expr.eval(&shifted(p, 2 * j, -h))?)
            / (2.0 * h);
        let fy = (expr.eval(&shifted(p, 2 * j + 1, h))?
            - expr.eval(&shifted(p, 2 * j + 1, -h))?)
            / (2.0 * h);
        dz.push((fx - I * fy) * 0.5);
        dzbar.push((fx + I * fy) * 0.5);
    }
    Ok(WirtingerGrad {
        dz,
        dzbar,
        method: DiffMethod::CentralDifference { h },
    })
}

/// Second central differences of `Re expr` with `h = 1e-4·(1+‖p‖)`.
pub fn real_hessian_fd(expr: &ScalarExpr, p: &PointCn) -> Result<RealHessian> {
    expr.check_regular(p)?;
    let h = 1e-4 * (1.0 + p.norm());
    let m = 2 * p.dim();
    let f = |q: &PointCn| expr.eval_real(q);
    let f0 = f(p)?;
    let mut out = DMatrix::zeros(m, m);
    for a in 0..m {
        out[(a, a)] = (f(&shifted(p, a, h))? - 2.0 * f0 + f(&shifted(p, a, -h))?) / (h * h);
        for b in (a + 1)..m {
            let pp = f(&shifted(&shifted(p, a, h), b, h))?;
            let pm = f(&shifted(&shifted(p, a, h), b, -h))?;
            let mp = f(&shifted(&shifted(p, a, -h), b, h))?;
            let mm = f(&shifted(&shifted(p, a, -h), b, -h))?;
            let v = (pp - pm - mp + mm) / (4.0 * h * h);
            out[(a, b)] = v;
            out[(b, a)] = v;
        }
    }
    Ok(RealHessian {
        matrix: out,
        method: DiffMethod::CentralDifference { h },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(v: &[(f64, f64)]) -> PointCn {
        PointCn(v.iter().map(|&(a, b)| c(a, b)).collect())
    }

    #[test]
    fn modulus_squared_gradient() {
        let e = ScalarExpr::parse("z1*conj(z1)", 1).unwrap();
        let g = wirtinger_grad(&e, &pt(&[(2.0, 0.0)])).unwrap();
        assert_eq!(g.dz, vec![c(2.0, 0.0)]);
        assert_eq!(g.dzbar, vec![c(2.0, 0.0)]);
        assert_eq!(g.method, DiffMethod::Exact);
    }

    #[test]
    fn abs_gradient_is_conj_over_twice_modulus() {
        let e = ScalarExpr::parse("abs(z1)", 1).unwrap();
        let g = wirtinger_grad(&e, &pt(&[(1.0, 0.0)])).unwrap();
        assert!((g.dz[0] - c(0.5, 0.0)).norm() < 1e-15);
        // off the real axis: z̄/(2|z|)
        let z = c(0.6, -0.8);
        let g = wirtinger_grad(&e, &PointCn(vec![z])).unwrap();
        assert!((g.dz[0] - z.conj() / 2.0).norm() < 1e-15);
        assert!((g.dzbar[0] - z / 2.0).norm() < 1e-15);
    }

    #[test]
    fn log_abs_gradient() {
        let e = ScalarExpr::parse("log(abs(z2))", 2).unwrap();
        let g = wirtinger_grad(&e, &pt(&[(0.3, 0.1), (0.5, 0.0)])).unwrap();
        assert!((g.dz[1] - c(1.0, 0.0)).norm() < 1e-14);
        assert!(g.dz[0].norm() < 1e-15);
    }

    #[test]
    fn singular_points_are_rejected() {
        let e = ScalarExpr::parse("abs(z1)", 1).unwrap();
        assert!(matches!(
            wirtinger_grad(&e, &pt(&[(0.0, 0.0)])),
            Err(Error::SingularPoint(_))
        ));
        assert!(matches!(
            real_hessian(&e, &pt(&[(0.0, 0.0)])),
            Err(Error::SingularPoint(_))
        ));
    }

    #[test]
    fn holomorphic_has_zero_dzbar() {
        let e = ScalarExpr::parse("exp(z1*z2) - 3z2 + pow(z1,3)/(2+z2)", 2).unwrap();
        let g = wirtinger_grad(&e, &pt(&[(0.4, -0.2), (0.1, 0.7)])).unwrap();
        assert!(g.dzbar.iter().all(|d| *d == c(0.0, 0.0)));
        let fd = wirtinger_grad_fd(&e, &pt(&[(0.4, -0.2), (0.1, 0.7)])).unwrap();
        let DiffMethod::CentralDifference { h } = fd.method else { panic!() };
        assert!(fd.dzbar.iter().all(|d| d.norm() <= 10.0 * h * h + 1e-9));
        for (a, b) in g.dz.iter().zip(&fd.dz) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn hessian_of_modulus_squared_is_twice_identity() {
        let e = ScalarExpr::parse("z1*conj(z1)", 1).unwrap();
        let h = real_hessian(&e, &pt(&[(0.3, -1.7)])).unwrap();
        assert_eq!(h.matrix, DMatrix::from_diagonal_element(2, 2, 2.0));
    }

    #[test]
    fn hessian_of_product_of_moduli() {
        let e = ScalarExpr::parse("z1*conj(z1)*z2*conj(z2)", 2).unwrap();
        let h = real_hessian(&e, &pt(&[(1.0, 0.0), (0.0, 0.0)])).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.0, 0.0, 2.0, 2.0]));
        assert!((h.matrix - want).abs().max() < 1e-14);
    }

    #[test]
    fn hessian_of_constant_is_zero() {
        let e = ScalarExpr::parse("3-2i", 2).unwrap();
        let h = real_hessian(&e, &pt(&[(0.1, 0.2), (0.3, 0.4)])).unwrap();
        assert_eq!(h.matrix, DMatrix::zeros(4, 4));
    }

    #[test]
    fn complex_hessian_of_abs_is_quarter_over_modulus() {
        // ∂²|z|/∂z∂z̄ = (H_xx + H_yy)/4 = 1/(4|z|)
        let e = ScalarExpr::parse("abs(z1)", 1).unwrap();
        let z = c(1.2, 0.5);
        let h = real_hessian(&e, &PointCn(vec![z])).unwrap().matrix;
        let levi = (h[(0, 0)] + h[(1, 1)]) / 4.0;
        assert!((levi - 1.0 / (4.0 * z.norm())).abs() < 1e-14);
    }

    #[test]
    fn exact_and_fd_hessians_agree() {
        let e = ScalarExpr::parse(
            "exp(-abs(z1)) + re(z1*z1*z2) + im(conj(z2)*z1) + log(abs(z2))",
            2,
        )
        .unwrap();
        let p = pt(&[(0.7, -0.4), (0.2, 0.9)]);
        let ex = real_hessian(&e, &p).unwrap().matrix;
        let fd = real_hessian_fd(&e, &p).unwrap().matrix;
        assert!((ex - fd).abs().max() < 1e-5);
    }
}
