//! Expression trees over `z₁..zₙ` and their conjugates.
//!
//! The grammar is deliberately closed: complex literals, the variables,
//! `conj`, `+ − × ÷`, integer powers, `exp`, `log`, `abs`, `re`, `im`.
//! Every operator has a closed-form Wirtinger rule (see [`diff`]), so
//! gradients and real Hessians are computed exactly on the tree; the central
//! difference path is kept for cross-checks and callers that ask for it.

mod diff;
mod parse;

pub use diff::{
    real_gradient, real_hessian, real_hessian_fd, wirtinger_grad, wirtinger_grad_fd, DiffMethod,
    GradientForm, HessianForm, RealHessian, WirtingerGrad,
};
pub use parse::parse_complex_literal;

use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::point::PointCn;

/// |argument| below which `abs`/`log` nodes are treated as singular.
pub const SINGULAR_RADIUS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(Complex64),
    /// `z_{k+1}`; indices are zero-based internally.
    Var(usize),
    Conj(Arc<Node>),
    Neg(Arc<Node>),
    Add(Arc<Node>, Arc<Node>),
    Sub(Arc<Node>, Arc<Node>),
    Mul(Arc<Node>, Arc<Node>),
    Div(Arc<Node>, Arc<Node>),
    Pow(Arc<Node>, i32),
    Exp(Arc<Node>),
    Log(Arc<Node>),
    Abs(Arc<Node>),
    Re(Arc<Node>),
    Im(Arc<Node>),
}

/// A scalar expression on ℂⁿ. Immutable once built; cheap to clone.
#[derive(Debug, Clone)]
pub struct ScalarExpr {
    root: Arc<Node>,
    dim: usize,
}

impl PartialEq for ScalarExpr {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.root == other.root
    }
}

impl ScalarExpr {
    /// Parses the text syntax (`z1`, `conj(e)`, `abs(e)`, `pow(e,k)`, `2+3i`, …)
    /// in ambient dimension `dim`.
    pub fn parse(text: &str, dim: usize) -> Result<Self> {
        let root = parse::parse(text)?;
        let used = max_var(&root).map_or(0, |k| k + 1);
        if used > dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: used,
            });
        }
        Ok(Self { root, dim })
    }

    pub fn from_node(root: Arc<Node>, dim: usize) -> Self {
        debug_assert!(max_var(&root).map_or(0, |k| k + 1) <= dim);
        Self { root, dim }
    }

    pub fn constant(c: Complex64, dim: usize) -> Self {
        Self::from_node(Arc::new(Node::Const(c)), dim)
    }

    pub fn var(k: usize, dim: usize) -> Self {
        assert!(k < dim, "variable index out of range");
        Self::from_node(Arc::new(Node::Var(k)), dim)
    }

    pub fn root(&self) -> &Arc<Node> {
        &self.root
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True iff the tree holds no `conj`, `abs`, `re` or `im` node.
    pub fn is_holomorphic(&self) -> bool {
        fn scan(n: &Node) -> bool {
            match n {
                Node::Const(_) | Node::Var(_) => true,
                Node::Conj(_) | Node::Abs(_) | Node::Re(_) | Node::Im(_) => false,
                Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Log(a) => scan(a),
                Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                    scan(a) && scan(b)
                }
            }
        }
        scan(&self.root)
    }

    pub fn eval(&self, p: &PointCn) -> Result<Complex64> {
        p.check_dim(self.dim)?;
        let v = eval_node(&self.root, p.coords())?;
        if !v.re.is_finite() || !v.im.is_finite() {
            return Err(Error::DomainError(format!("non-finite value of `{self}`")));
        }
        Ok(v)
    }

    /// Real part of [`eval`](Self::eval); for real-valued defining functions.
    pub fn eval_real(&self, p: &PointCn) -> Result<f64> {
        Ok(self.eval(p)?.re)
    }

    /// Fails with `SingularPoint` if an `abs`/`log` argument nearly vanishes at `p`.
    pub fn check_regular(&self, p: &PointCn) -> Result<()> {
        p.check_dim(self.dim)?;
        let mut sing = Vec::new();
        collect_singular_args(&self.root, &mut sing);
        for arg in sing {
            let v = eval_node(arg, p.coords())?;
            if v.norm() < SINGULAR_RADIUS {
                return Err(Error::SingularPoint(self.to_string()));
            }
        }
        Ok(())
    }

    /// Substitutes `z_k ↦ images[k]` (and `z̄_k ↦ conj(images[k])`).
    pub fn substitute(&self, images: &[ScalarExpr]) -> Result<ScalarExpr> {
        if images.len() < self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: images.len(),
            });
        }
        let out_dim = images.iter().map(|e| e.dim).max().unwrap_or(0);
        let nodes: Vec<Arc<Node>> = images.iter().map(|e| e.root.clone()).collect();
        Ok(Self {
            root: substitute_node(&self.root, &nodes),
            dim: out_dim,
        })
    }

    /// Renames `z_k` to `z_{k+shift}` in ambient dimension `dim + shift`.
    pub fn shift_vars(&self, shift: usize) -> ScalarExpr {
        let nodes: Vec<Arc<Node>> = (0..self.dim)
            .map(|k| Arc::new(Node::Var(k + shift)))
            .collect();
        Self {
            root: substitute_node(&self.root, &nodes),
            dim: self.dim + shift,
        }
    }

    pub fn add(&self, other: &ScalarExpr) -> ScalarExpr {
        Self {
            root: add(self.root.clone(), other.root.clone()),
            dim: self.dim.max(other.dim),
        }
    }

    pub fn sub(&self, other: &ScalarExpr) -> ScalarExpr {
        Self {
            root: sub(self.root.clone(), other.root.clone()),
            dim: self.dim.max(other.dim),
        }
    }

    pub fn mul(&self, other: &ScalarExpr) -> ScalarExpr {
        Self {
            root: mul(self.root.clone(), other.root.clone()),
            dim: self.dim.max(other.dim),
        }
    }

    pub fn neg(&self) -> ScalarExpr {
        Self {
            root: neg(self.root.clone()),
            dim: self.dim,
        }
    }

    pub fn with_dim(mut self, dim: usize) -> Result<ScalarExpr> {
        let used = max_var(&self.root).map_or(0, |k| k + 1);
        if used > dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: used,
            });
        }
        self.dim = dim;
        Ok(self)
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

/// A holomorphic-or-not map ℂⁿ → ℂᵐ given componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MapExpr {
    pub components: Vec<ScalarExpr>,
}

impl MapExpr {
    pub fn new(components: Vec<ScalarExpr>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("map with no components".into()));
        }
        let dim = components[0].dim();
        if components.iter().any(|c| c.dim() != dim) {
            return Err(Error::InvalidInput("map components disagree on dimension".into()));
        }
        Ok(Self { components })
    }

    pub fn parse(texts: &[impl AsRef<str>], dim: usize) -> Result<Self> {
        Self::new(
            texts
                .iter()
                .map(|t| ScalarExpr::parse(t.as_ref(), dim))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            components: (0..dim).map(|k| ScalarExpr::var(k, dim)).collect(),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.components
            .iter()
            .enumerate()
            .all(|(k, c)| matches!(c.root().as_ref(), Node::Var(j) if *j == k))
            && self.components.len() == self.domain_dim()
    }

    pub fn domain_dim(&self) -> usize {
        self.components[0].dim()
    }

    pub fn target_dim(&self) -> usize {
        self.components.len()
    }

    pub fn is_holomorphic(&self) -> bool {
        self.components.iter().all(ScalarExpr::is_holomorphic)
    }

    pub fn eval(&self, p: &PointCn) -> Result<PointCn> {
        Ok(PointCn(
            self.components
                .iter()
                .map(|c| c.eval(p))
                .collect::<Result<Vec<_>>>()?,
        ))
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &MapExpr) -> Result<MapExpr> {
        MapExpr::new(
            self.components
                .iter()
                .map(|c| c.substitute(&inner.components))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Complex Jacobian `∂F_j/∂z_k` (exact; holomorphic maps only make sense here).
    pub fn jacobian(&self, p: &PointCn) -> Result<nalgebra::DMatrix<Complex64>> {
        let m = self.target_dim();
        let n = self.domain_dim();
        let mut jac = nalgebra::DMatrix::zeros(m, n);
        for (j, c) in self.components.iter().enumerate() {
            let g = wirtinger_grad(c, p)?;
            for k in 0..n {
                jac[(j, k)] = g.dz[k];
            }
        }
        Ok(jac)
    }

    pub fn texts(&self) -> Vec<String> {
        self.components.iter().map(|c| c.to_string()).collect()
    }
}

fn max_var(n: &Node) -> Option<usize> {
    match n {
        Node::Const(_) => None,
        Node::Var(k) => Some(*k),
        Node::Conj(a)
        | Node::Neg(a)
        | Node::Pow(a, _)
        | Node::Exp(a)
        | Node::Log(a)
        | Node::Abs(a)
        | Node::Re(a)
        | Node::Im(a) => max_var(a),
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            max_var(a).max(max_var(b))
        }
    }
}

fn collect_singular_args<'a>(n: &'a Node, out: &mut Vec<&'a Arc<Node>>) {
    match n {
        Node::Const(_) | Node::Var(_) => {}
        Node::Abs(a) | Node::Log(a) => {
            out.push(a);
            collect_singular_args(a, out);
        }
        Node::Conj(a) | Node::Neg(a) | Node::Pow(a, _) | Node::Exp(a) | Node::Re(a) | Node::Im(a) => {
            collect_singular_args(a, out)
        }
        Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
            collect_singular_args(a, out);
            collect_singular_args(b, out);
        }
    }
}

pub(crate) fn eval_node(n: &Node, z: &[Complex64]) -> Result<Complex64> {
    Ok(match n {
        Node::Const(c) => *c,
        Node::Var(k) => z[*k],
        Node::Conj(a) => eval_node(a, z)?.conj(),
        Node::Neg(a) => -eval_node(a, z)?,
        Node::Add(a, b) => eval_node(a, z)? + eval_node(b, z)?,
        Node::Sub(a, b) => eval_node(a, z)? - eval_node(b, z)?,
        Node::Mul(a, b) => eval_node(a, z)? * eval_node(b, z)?,
        Node::Div(a, b) => {
            let den = eval_node(b, z)?;
            if den.norm_sqr() == 0.0 {
                return Err(Error::DomainError("division by zero".into()));
            }
            eval_node(a, z)? / den
        }
        Node::Pow(a, k) => {
            let base = eval_node(a, z)?;
            if *k < 0 && base.norm_sqr() == 0.0 {
                return Err(Error::DomainError("negative power of zero".into()));
            }
            base.powi(*k)
        }
        Node::Exp(a) => eval_node(a, z)?.exp(),
        Node::Log(a) => {
            let u = eval_node(a, z)?;
            if u.norm() < SINGULAR_RADIUS {
                return Err(Error::DomainError("log of zero".into()));
            }
            u.ln()
        }
        Node::Abs(a) => Complex64::new(eval_node(a, z)?.norm(), 0.0),
        Node::Re(a) => Complex64::new(eval_node(a, z)?.re, 0.0),
        Node::Im(a) => Complex64::new(eval_node(a, z)?.im, 0.0),
    })
}

fn substitute_node(n: &Arc<Node>, images: &[Arc<Node>]) -> Arc<Node> {
    let s = |a: &Arc<Node>| substitute_node(a, images);
    match n.as_ref() {
        Node::Const(_) => n.clone(),
        Node::Var(k) => images[*k].clone(),
        Node::Conj(a) => conj(s(a)),
        Node::Neg(a) => neg(s(a)),
        Node::Add(a, b) => add(s(a), s(b)),
        Node::Sub(a, b) => sub(s(a), s(b)),
        Node::Mul(a, b) => mul(s(a), s(b)),
        Node::Div(a, b) => div(s(a), s(b)),
        Node::Pow(a, k) => pow(s(a), *k),
        Node::Exp(a) => Arc::new(Node::Exp(s(a))),
        Node::Log(a) => Arc::new(Node::Log(s(a))),
        Node::Abs(a) => Arc::new(Node::Abs(s(a))),
        Node::Re(a) => Arc::new(Node::Re(s(a))),
        Node::Im(a) => Arc::new(Node::Im(s(a))),
    }
}

// Smart constructors with light constant folding; they keep derivative trees small.

fn as_const(n: &Node) -> Option<Complex64> {
    match n {
        Node::Const(c) => Some(*c),
        _ => None,
    }
}

pub(crate) fn konst(c: Complex64) -> Arc<Node> {
    Arc::new(Node::Const(c))
}

pub(crate) fn zero() -> Arc<Node> {
    konst(Complex64::new(0.0, 0.0))
}

pub(crate) fn is_zero(n: &Node) -> bool {
    as_const(n) == Some(Complex64::new(0.0, 0.0))
}

fn is_one(n: &Node) -> bool {
    as_const(n) == Some(Complex64::new(1.0, 0.0))
}

pub(crate) fn add(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x + y),
        _ if is_zero(&a) => b,
        _ if is_zero(&b) => a,
        _ => Arc::new(Node::Add(a, b)),
    }
}

pub(crate) fn sub(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x - y),
        _ if is_zero(&b) => a,
        _ if is_zero(&a) => neg(b),
        _ => Arc::new(Node::Sub(a, b)),
    }
}

pub(crate) fn mul(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => konst(x * y),
        _ if is_zero(&a) || is_zero(&b) => zero(),
        _ if is_one(&a) => b,
        _ if is_one(&b) => a,
        _ => Arc::new(Node::Mul(a, b)),
    }
}

pub(crate) fn div(a: Arc<Node>, b: Arc<Node>) -> Arc<Node> {
    if is_zero(&a) {
        return zero();
    }
    if is_one(&b) {
        return a;
    }
    Arc::new(Node::Div(a, b))
}

pub(crate) fn neg(a: Arc<Node>) -> Arc<Node> {
    match a.as_ref() {
        Node::Const(c) => konst(-c),
        Node::Neg(inner) => inner.clone(),
        _ => Arc::new(Node::Neg(a)),
    }
}

pub(crate) fn conj(a: Arc<Node>) -> Arc<Node> {
    match a.as_ref() {
        Node::Const(c) => konst(c.conj()),
        Node::Conj(inner) => inner.clone(),
        _ => Arc::new(Node::Conj(a)),
    }
}

pub(crate) fn pow(a: Arc<Node>, k: i32) -> Arc<Node> {
    match k {
        0 => konst(Complex64::new(1.0, 0.0)),
        1 => a,
        _ => match as_const(&a) {
            Some(c) if c.norm_sqr() != 0.0 || k > 0 => konst(c.powi(k)),
            _ => Arc::new(Node::Pow(a, k)),
        },
    }
}

fn write_complex(c: Complex64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if c.im == 0.0 {
        write!(f, "{:?}", c.re)
    } else if c.re == 0.0 {
        write!(f, "{:?}i", c.im)
    } else if c.im < 0.0 {
        write!(f, "({:?}-{:?}i)", c.re, -c.im)
    } else {
        write!(f, "({:?}+{:?}i)", c.re, c.im)
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let func = |name: &str, a: &Node, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        write!(f, "{name}(")?;
        write_node(a, f)?;
        write!(f, ")")
    };
    let bin = |op: &str, a: &Node, b: &Node, f: &mut fmt::Formatter<'_>| -> fmt::Result {
        write!(f, "(")?;
        write_node(a, f)?;
        write!(f, "{op}")?;
        write_node(b, f)?;
        write!(f, ")")
    };
    match n {
        Node::Const(c) => {
            if c.re < 0.0 || (c.re == 0.0 && c.im < 0.0) {
                write!(f, "(")?;
                write_complex(*c, f)?;
                write!(f, ")")
            } else {
                write_complex(*c, f)
            }
        }
        Node::Var(k) => write!(f, "z{}", k + 1),
        Node::Conj(a) => func("conj", a, f),
        Node::Neg(a) => {
            write!(f, "(-")?;
            write_node(a, f)?;
            write!(f, ")")
        }
        Node::Add(a, b) => bin("+", a, b, f),
        Node::Sub(a, b) => bin("-", a, b, f),
        Node::Mul(a, b) => bin("*", a, b, f),
        Node::Div(a, b) => bin("/", a, b, f),
        Node::Pow(a, k) => {
            write!(f, "pow(")?;
            write_node(a, f)?;
            write!(f, ",{k})")
        }
        Node::Exp(a) => func("exp", a, f),
        Node::Log(a) => func("log", a, f),
        Node::Abs(a) => func("abs", a, f),
        Node::Re(a) => func("re", a, f),
        Node::Im(a) => func("im", a, f),
    }
}
