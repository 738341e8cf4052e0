//! Resolves `--spec`, `--catalog` and `--field` into parsed objects, keeping
//! the verbatim expression texts for the report.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use spirallab_core::catalog::{builtin, SpecDoc};
use spirallab_core::domains::{DomainJson, DomainSpec};
use spirallab_core::point::parse_point;
use spirallab_core::{MapExpr, PointCn, ScalarExpr, VectorField};

use crate::args::Common;

/// A configuration problem: bad flags, unreadable or invalid input. Maps to
/// exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

/// Input expressions exactly as supplied.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InputsEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub catalog: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<Vec<String>>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub maps: BTreeMap<String, Vec<String>>,
}

pub struct Inputs {
    pub domain: Option<DomainSpec>,
    pub field: Option<VectorField>,
    pub maps: BTreeMap<String, MapExpr>,
    pub criterion: Option<ScalarExpr>,
    pub echo: InputsEcho,
}

fn split_components(text: &str) -> Vec<String> {
    text.split(';').map(|s| s.trim().to_string()).collect()
}

impl Inputs {
    pub fn load(common: &Common) -> anyhow::Result<Self> {
        let mut echo = InputsEcho::default();
        let (mut domain, mut field, mut criterion, mut maps_text) = (None, None, None, BTreeMap::new());
        match (&common.catalog, &common.spec) {
            (Some(_), Some(_)) => return Err(usage("--catalog and --spec are mutually exclusive")),
            (Some(name), None) => {
                let entry = builtin(name).map_err(|e| usage(e.to_string()))?;
                echo.catalog = Some(entry.name.clone());
                echo.domain = Some(entry.domain.to_json());
                echo.field = entry.field.as_ref().map(|f| f.texts());
                domain = Some(entry.domain);
                field = entry.field;
                criterion = entry.criterion_function;
            }
            (None, Some(path)) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
                let doc: SpecDoc = serde_json::from_str(&text)
                    .map_err(|e| usage(format!("{}: not a spec document: {e}", path.display())))?;
                if let Some(d) = &doc.domain {
                    domain = Some(DomainSpec::from_json(d).map_err(|e| usage(format!("domain: {e}")))?);
                }
                if let Some(f) = &doc.field {
                    field = Some(VectorField::parse(&f.components).map_err(|e| usage(format!("field: {e}")))?);
                }
                echo.domain = doc.domain.clone();
                echo.field = doc.field.as_ref().map(|f| f.components.clone());
                maps_text = doc.maps;
            }
            (None, None) => {}
        }
        if let Some(text) = &common.field {
            let comps = split_components(text);
            field = Some(VectorField::parse(&comps).map_err(|e| usage(format!("--field: {e}")))?);
            echo.field = Some(comps);
        }
        let dim = domain
            .as_ref()
            .map(DomainSpec::dim)
            .or_else(|| field.as_ref().map(VectorField::dim));
        if let (Some(d), Some(f)) = (&domain, &field) {
            if d.dim() != f.dim() {
                return Err(usage(format!(
                    "domain lives in C^{} but the field has {} components",
                    d.dim(),
                    f.dim()
                )));
            }
        }
        let mut maps = BTreeMap::new();
        for (name, texts) in &maps_text {
            let n = dim.ok_or_else(|| usage("maps need a domain or field to fix the dimension"))?;
            let m = MapExpr::parse(texts, n).map_err(|e| usage(format!("map `{name}`: {e}")))?;
            maps.insert(name.clone(), m);
        }
        echo.maps = maps_text;
        Ok(Self {
            domain,
            field,
            maps,
            criterion,
            echo,
        })
    }

    pub fn domain(&self) -> anyhow::Result<&DomainSpec> {
        self.domain
            .as_ref()
            .ok_or_else(|| usage("this command needs a domain (--catalog or --spec)"))
    }

    pub fn field(&self) -> anyhow::Result<&VectorField> {
        self.field
            .as_ref()
            .ok_or_else(|| usage("this command needs a field (--field, --catalog or --spec)"))
    }

    pub fn map(&self, name: &str) -> Option<&MapExpr> {
        self.maps.get(name)
    }
}

pub fn parse_points(texts: &[String], dim: usize) -> anyhow::Result<Vec<PointCn>> {
    texts
        .iter()
        .map(|t| {
            let p = parse_point(t).map_err(|e| usage(format!("point `{t}`: {e}")))?;
            p.check_dim(dim).map_err(|e| usage(format!("point `{t}`: {e}")))?;
            Ok(p)
        })
        .collect()
}

pub fn parse_map(text: &str, dim: usize, what: &str) -> anyhow::Result<MapExpr> {
    MapExpr::parse(&split_components(text), dim).map_err(|e| usage(format!("{what}: {e}")))
}

/// Effective `(tmax, tgrid)`: an explicit grid wins, otherwise
/// `tmax·10^{-k}` for `k = 3, 2, 1, 0`.
pub fn time_grid(common: &Common, default_tmax: f64) -> anyhow::Result<(f64, Vec<f64>)> {
    let tmax = common.tmax.unwrap_or(default_tmax);
    if !(tmax > 0.0) || !tmax.is_finite() {
        return Err(usage("--tmax must be positive"));
    }
    let grid = match &common.tgrid {
        Some(text) => {
            let mut g = text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .ok()
                        .filter(|t| *t > 0.0 && t.is_finite())
                        .ok_or_else(|| usage(format!("--tgrid: `{}` is not a positive time", s.trim())))
                })
                .collect::<anyhow::Result<Vec<f64>>>()?;
            g.sort_by(f64::total_cmp);
            g.dedup();
            g
        }
        None => (0..4).rev().map(|k| tmax * 10f64.powi(-k)).collect(),
    };
    Ok((tmax, grid))
}

pub fn check_common(common: &Common) -> anyhow::Result<()> {
    if !(common.tol > 0.0) || !(common.tol < 1.0) {
        return Err(usage("--tol must lie in (0, 1)"));
    }
    if common.samples == 0 {
        return Err(usage("--samples must be positive"));
    }
    if common.degree == 0 {
        return Err(usage("--degree must be positive"));
    }
    Ok(())
}
