//! Built-in domains and fields: the Hartogs spiral domain with its explicit
//! flow, the ovoid, balls, the bidisc and the radial field.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domains::{DomainJson, DomainSpec};
use crate::error::{Error, Result};
use crate::expr::ScalarExpr;
use crate::point::PointCn;
use crate::vectorfield::{ClosedFormFlow, VectorField};

/// Excluded neighbourhood of `z₁ = 0`, where `|z₁|` is not differentiable.
pub const HARTOGS_SINGULAR: &str = "abs(z1) < 0.001";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FieldJson {
    pub components: Vec<String>,
}

/// The JSON spec format shared by the command-line tool:
/// `{"domain": …, "field": {"components": […]}, "maps": {name: […]}}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SpecDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainJson>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldJson>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: String,
    pub domain: DomainSpec,
    pub field: Option<VectorField>,
    /// A second defining function for the smooth part of the boundary, used
    /// by the differential spirallikeness criterion.
    pub criterion_function: Option<ScalarExpr>,
    pub note: String,
}

impl CatalogEntry {
    pub fn closed_form(&self) -> Option<&ClosedFormFlow> {
        self.field.as_ref().and_then(|f| f.closed_form())
    }

    pub fn to_spec(&self) -> SpecDoc {
        SpecDoc {
            domain: Some(self.domain.to_json()),
            field: self.field.as_ref().map(|f| FieldJson {
                components: f.texts(),
            }),
            maps: BTreeMap::new(),
        }
    }
}

/// Names accepted by [`builtin`], with one-line descriptions.
pub fn list() -> Vec<(&'static str, &'static str)> {
    vec![
        (
            "hartogs-spiral(r)",
            "{|z1|<r, |z2|<exp(-|z1|)} with F=(-2z1, -3z2+z1z2); r defaults to 5",
        ),
        ("ovoid", "{|z1|^2+|z2|^2+|z1|^2|z2|^2<1} with V=-z"),
        ("ball(n)", "unit ball of C^n with V=-z"),
        ("bidisc", "unit bidisc with V=-z"),
        ("radial(n)", "radial field V=-z on the unit ball of C^n"),
    ]
}

/// Exact flow of `F = (−2z₁, −3z₂ + z₁z₂)`.
pub fn hartogs_flow(t: f64, z: &PointCn) -> Result<PointCn> {
    ClosedFormFlow::Hartogs.eval(t, z)
}

fn split_call(name: &str) -> Result<(&str, Option<&str>)> {
    let name = name.trim();
    match name.split_once('(') {
        None => Ok((name, None)),
        Some((head, rest)) => {
            let arg = rest
                .strip_suffix(')')
                .ok_or_else(|| Error::UnknownName(name.to_string()))?;
            Ok((head.trim(), Some(arg.trim())))
        }
    }
}

fn dim_arg(name: &str, arg: Option<&str>) -> Result<usize> {
    let n: usize = arg
        .ok_or_else(|| Error::UnknownName(format!("{name} needs a dimension, e.g. {name}(2)")))?
        .parse()
        .map_err(|_| Error::UnknownName(format!("{name}: dimension must be a positive integer")))?;
    if n == 0 {
        return Err(Error::UnknownName(format!("{name}: dimension must be positive")));
    }
    Ok(n)
}

fn radial_field(n: usize) -> Result<VectorField> {
    let texts: Vec<String> = (1..=n).map(|k| format!("-z{k}")).collect();
    Ok(VectorField::parse(&texts)?.with_closed_form(ClosedFormFlow::Radial))
}

fn unit_ball(n: usize) -> Result<DomainSpec> {
    let sq: Vec<String> = (1..=n).map(|k| format!("z{k}*conj(z{k})")).collect();
    DomainSpec::parse(n, &[format!("{}-1", sq.join("+"))], 2.0, None)
}

pub fn builtin(name: &str) -> Result<CatalogEntry> {
    let (head, arg) = split_call(name)?;
    let canonical;
    let entry = match head {
        "hartogs-spiral" => {
            let r: f64 = match arg {
                None | Some("") => 5.0,
                Some(a) => a
                    .parse()
                    .ok()
                    .filter(|r: &f64| *r > 0.0 && r.is_finite())
                    .ok_or_else(|| Error::UnknownName(format!("hartogs-spiral: bad radius `{a}`")))?,
            };
            canonical = format!("hartogs-spiral({r})");
            let domain = DomainSpec::parse(
                2,
                &[format!("abs(z1)-{r}"), "abs(z2)-exp(-abs(z1))".to_string()],
                (r * r + 1.0).sqrt() + 1.0,
                Some(HARTOGS_SINGULAR),
            )?;
            let field = VectorField::parse(&["-2z1", "-3z2+z1z2"])?
                .with_closed_form(ClosedFormFlow::Hartogs);
            CatalogEntry {
                name: canonical.clone(),
                domain,
                field: Some(field),
                criterion_function: Some(ScalarExpr::parse("log(abs(z2))+abs(z1)", 2)?),
                note: "Hartogs domain over the disc of radius r; not convex, strictly \
                       spirallike for F with X(t,z)=(z1 e^{-2t}, z2 e^{-3t} e^{(z1/2)(1-e^{-2t})})"
                    .into(),
            }
        }
        "ovoid" if arg.is_none() => CatalogEntry {
            name: "ovoid".into(),
            domain: DomainSpec::parse(
                2,
                &["z1*conj(z1)+z2*conj(z2)+z1*conj(z1)*z2*conj(z2)-1"],
                2.0,
                None,
            )?,
            field: Some(radial_field(2)?),
            criterion_function: None,
            note: "strongly convex, so strictly spirallike for -z; not biholomorphic to the ball"
                .into(),
        },
        "bidisc" if arg.is_none() => CatalogEntry {
            name: "bidisc".into(),
            domain: DomainSpec::parse(2, &["z1*conj(z1)-1", "z2*conj(z2)-1"], 2.0, None)?,
            field: Some(radial_field(2)?),
            criterion_function: None,
            note: "convex with a corner torus; strictly spirallike for -z".into(),
        },
        "ball" => {
            let n = dim_arg("ball", arg)?;
            CatalogEntry {
                name: format!("ball({n})"),
                domain: unit_ball(n)?,
                field: Some(radial_field(n)?),
                criterion_function: None,
                note: "unit ball with r=|z|^2-1 and flow e^{-t}z".into(),
            }
        }
        "radial" => {
            let n = dim_arg("radial", arg)?;
            CatalogEntry {
                name: format!("radial({n})"),
                domain: unit_ball(n)?,
                field: Some(radial_field(n)?),
                criterion_function: None,
                note: "every convex domain containing 0 is strictly spirallike for -z".into(),
            }
        }
        _ => return Err(Error::UnknownName(name.trim().to_string())),
    };
    Ok(entry)
}
