use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::point::PointCn;

/// Known exact flows. Only the catalog attaches these to fields, so a
/// closed form can never disagree with the expression it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClosedFormFlow {
    /// `X(t, z) = e^{−t} z` for `V = −z`.
    Radial,
    /// `X(t, z) = (z₁e^{−2t}, z₂e^{−3t}e^{(z₁/2)(1−e^{−2t})})` for
    /// `V = (−2z₁, −3z₂ + z₁z₂)`.
    Hartogs,
    /// Flow of `(−z₀, V(z₁, …))`: `(e^{−t}z₀, X(t, z₁, …))`.
    Prepend { inner: Box<ClosedFormFlow> },
}

impl ClosedFormFlow {
    pub fn eval(&self, t: f64, z: &PointCn) -> Result<PointCn> {
        match self {
            ClosedFormFlow::Radial => Ok(z * (-t).exp()),
            ClosedFormFlow::Hartogs => {
                z.check_dim(2)?;
                let e2 = (-2.0 * t).exp();
                let w1 = z[0] * e2;
                let w2 = z[1] * (-3.0 * t).exp() * (z[0] * 0.5 * (1.0 - e2)).exp();
                Ok(PointCn(vec![w1, w2]))
            }
            ClosedFormFlow::Prepend { inner } => {
                if z.dim() < 2 {
                    return Err(Error::DimensionMismatch {
                        expected: 2,
                        got: z.dim(),
                    });
                }
                let rest = inner.eval(t, &PointCn(z.coords()[1..].to_vec()))?;
                let mut out: Vec<Complex64> = vec![z[0] * (-t).exp()];
                out.extend(rest.0);
                Ok(PointCn(out))
            }
        }
    }
}
