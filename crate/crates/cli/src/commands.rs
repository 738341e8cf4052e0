//! One function per subcommand. Each returns the report and, when it has
//! something to draw, a plot.

use serde_json::{json, Value};
use spirallab_core::catalog;
use spirallab_core::domains::{sample_boundary, strong_convexity_check, transversality_report, ConvexityVerdict};
use spirallab_core::hull::{closure_layers, hull_probe, runge_basis_check, HullConfig, HullVerdict, RungeConfig, SampleCloud};
use spirallab_core::loewner::{
    chain_map, chain_samples, check_inclusion, check_normalization, filtering_window, ld_bound_constant,
    range_exhaustion_time, Exhaustion, LoewnerChainSpec,
};
use spirallab_core::operators::{
    caratheodory_lb, compact_divergence_check, fixed_point_search, generalized_translation_check,
    transitivity_witness, AutomorphismSpec, CaratheodoryConfig, FixedPointResult, TransitivityConfig,
    TransitivityOutcome,
};
use spirallab_core::sampling::{in_ball, rng_for};
use spirallab_core::spirallike::{check_strict_spirallike, criterion_sweep, CriterionVerdict, SpirallikeConfig, SpirallikeVerdict};
use spirallab_core::vectorfield::{classify_stability, DecayProbe, FlowStatus, StabilityVerdict};
use spirallab_core::{Error, MapExpr, PointCn};

use crate::args::{Common, FlowArgs, HullArgs, LoewnerArgs, OperatorsArgs, SpirallikeArgs, StabilityArgs};
use crate::inputs::{check_common, parse_map, parse_points, time_grid, usage, Inputs};
use crate::report::{CheckResult, ReportDoc};
use crate::svg::{Plot, Projection};

pub struct Outcome {
    pub report: ReportDoc,
    pub plot: Option<Plot>,
}

/// Flags shared by every subcommand, with defaults filled in.
fn common_config(c: &Common, tmax: f64, tgrid: &[f64]) -> serde_json::Map<String, Value> {
    let v = json!({
        "spec": c.spec.as_ref().map(|p| p.display().to_string()),
        "catalog": c.catalog,
        "field": c.field,
        "tol": c.tol,
        "seed": c.seed,
        "samples": c.samples,
        "tmax": tmax,
        "tgrid": tgrid,
        "degree": c.degree,
        "budget": c.budget,
        "out": c.out.as_ref().map(|p| p.display().to_string()),
        "svg": c.svg.as_ref().map(|p| p.display().to_string()),
        "proj": c.proj,
    });
    match v {
        Value::Object(m) => m,
        _ => unreachable!("json! object literal"),
    }
}

fn with_extra(mut base: serde_json::Map<String, Value>, extra: Value) -> Value {
    if let Value::Object(m) = extra {
        base.extend(m);
    }
    Value::Object(base)
}

fn spirallike_verdict(v: &SpirallikeVerdict) -> String {
    match v {
        SpirallikeVerdict::EvidenceStrict => "EvidenceStrict".into(),
        SpirallikeVerdict::EvidenceNonStrict { margin, time, .. } => {
            format!("EvidenceNonStrict (margin {margin:.3e} at t={time})")
        }
        SpirallikeVerdict::CounterexampleFound { index, time, .. } => {
            format!("CounterexampleFound (sample {index} at t={time})")
        }
        SpirallikeVerdict::Inconclusive { reason, .. } => format!("Inconclusive ({reason})"),
    }
}

fn thin(points: &[PointCn], max: usize) -> Vec<PointCn> {
    if points.len() <= max {
        return points.to_vec();
    }
    let step = (points.len() - 1) as f64 / (max - 1) as f64;
    (0..max).map(|k| points[(k as f64 * step).round() as usize].clone()).collect()
}

pub fn stability(a: &StabilityArgs) -> anyhow::Result<Outcome> {
    let c = &a.common;
    check_common(c)?;
    let inputs = Inputs::load(c)?;
    let v = inputs.field()?;
    let (tmax, _) = time_grid(c, 20.0)?;
    if !(a.radius > 0.0) {
        return Err(usage("--radius must be positive"));
    }
    let probe = DecayProbe {
        starts: c.samples,
        radius: a.radius,
        t_final: tmax,
        eps: 1e-6,
        seed: c.seed,
        tol: c.tol,
    };
    let rep = classify_stability(v, Some(&probe))?;
    let verdict = match &rep.verdict {
        StabilityVerdict::HyperbolicStable => "HyperbolicStable".to_string(),
        StabilityVerdict::Inconclusive { reason } => format!("Inconclusive ({reason})"),
    };
    let decay = rep.sampled.clone();
    let mut checks = vec![CheckResult::new(
        "spectral_stability",
        rep.is_stable(),
        verdict,
        json!({"eigenvalues": rep.eigenvalues, "max_real_part": rep.max_real_part, "scope": rep.scope}),
    )];
    if let Some(d) = &decay {
        checks.push(CheckResult::new(
            "sampled_decay",
            d.all_reached(),
            format!("{}/{} starts reached |z| < {:e} by t={}", d.reached, d.probe.starts, d.probe.eps, tmax),
            d,
        ));
    }
    let proj = Projection::parse(c.proj.as_deref(), v.dim())?;
    let mut plot = Plot::new("decay trajectories", proj);
    for i in 0..c.samples.min(8) {
        let z = in_ball(&mut rng_for(c.seed, i as u64), v.dim(), a.radius);
        if let Ok(traj) = v.integrate(&z, tmax, c.tol) {
            plot.polyline(&traj.points, i);
        }
    }
    let config = with_extra(common_config(c, tmax, &[]), json!({"radius": a.radius, "decay_eps": 1e-6}));
    Ok(Outcome {
        report: ReportDoc::new("stability", config, inputs.echo, checks),
        plot: Some(plot),
    })
}

pub fn flow(a: &FlowArgs) -> anyhow::Result<Outcome> {
    let c = &a.common;
    check_common(c)?;
    let inputs = Inputs::load(c)?;
    let v = inputs.field()?;
    let (tmax, _) = time_grid(c, 1.0)?;
    let z = parse_points(std::slice::from_ref(&a.point), v.dim())?.remove(0);
    let traj = v.integrate(&z, tmax, c.tol)?;
    let completed = traj.status == FlowStatus::Completed;
    let mut checks = vec![CheckResult::new(
        "integration",
        completed,
        format!("{:?} at t={}", traj.status, traj.end_time()),
        json!({
            "end": traj.end(),
            "end_time": traj.end_time(),
            "stats": traj.stats,
            "trajectory": thin(&traj.points, 200),
        }),
    )];
    if completed {
        if let Some(exact) = v.exact_flow(tmax, &z) {
            let exact = exact?;
            let rel = traj.end().distance(&exact) / exact.norm().max(f64::MIN_POSITIVE);
            checks.push(CheckResult::new(
                "closed_form_agreement",
                rel <= 1e-6,
                format!("relative error {rel:.3e}"),
                json!({"exact": exact, "relative_error": rel, "threshold": 1e-6}),
            ));
        }
    }
    let proj = Projection::parse(c.proj.as_deref(), v.dim())?;
    let mut plot = Plot::new(format!("trajectory to t={tmax}"), proj);
    plot.polyline(&traj.points, 0);
    plot.scatter(std::slice::from_ref(&z), 1, 3.0);
    let config = with_extra(common_config(c, tmax, &[]), json!({"point": a.point}));
    Ok(Outcome {
        report: ReportDoc::new("flow", config, inputs.echo, checks),
        plot: Some(plot),
    })
}

pub fn spirallike(a: &SpirallikeArgs) -> anyhow::Result<Outcome> {
    let c = &a.common;
    check_common(c)?;
    let inputs = Inputs::load(c)?;
    let (d, v) = (inputs.domain()?, inputs.field()?);
    let (tmax, tgrid) = time_grid(c, 5.0)?;
    let cloud = sample_boundary(d, c.samples, c.seed)?;
    let cfg = SpirallikeConfig {
        tol: c.tol,
        ..SpirallikeConfig::default()
    };
    let rep = check_strict_spirallike(v, d, &cloud, &tgrid, &cfg)?;
    let mut checks = vec![CheckResult::new(
        "strict_spirallike",
        rep.is_strict(),
        spirallike_verdict(&rep.verdict),
        json!({"report": rep, "excluded": cloud.excluded}),
    )];

    let mut non_transversal = Vec::new();
    for p in &cloud.points {
        if !transversality_report(v, d, p)?.transversal {
            non_transversal.push(p.clone());
        }
    }
    checks.push(CheckResult::new(
        "transversality",
        non_transversal.is_empty(),
        format!("{} of {} samples tangent to the boundary", non_transversal.len(), cloud.points.len()),
        json!({"tangent_points": non_transversal}),
    ));

    if let Some(r) = &inputs.criterion {
        let sweep = criterion_sweep(v, r, &cloud.points)?;
        checks.push(CheckResult::new(
            "criterion_sweep",
            sweep.verdict == CriterionVerdict::CriterionHolds,
            format!("max Re V~(r) = {:.6e}", sweep.max_value),
            json!({"function": r.to_string(), "report": sweep}),
        ));
    }
    if a.convexity {
        let conv = strong_convexity_check(d, &cloud)?;
        checks.push(CheckResult::new(
            "strong_convexity",
            conv.verdict == ConvexityVerdict::StronglyConvexEvidence,
            format!("c_min = {:.6e}", conv.c_min),
            conv,
        ));
    }

    let proj = Projection::parse(c.proj.as_deref(), v.dim())?;
    let mut plot = Plot::new("boundary sample and trajectories", proj);
    plot.scatter(&cloud.points, 5, 1.5);
    for (i, p) in cloud.points.iter().take(12).enumerate() {
        if let Ok(traj) = v.integrate(p, tmax, c.tol) {
            plot.polyline(&traj.points, i % 5);
        }
    }
    plot.legend("boundary sample", 5);
    let config = with_extra(common_config(c, tmax, &tgrid), json!({"convexity": a.convexity}));
    Ok(Outcome {
        report: ReportDoc::new("spirallike", config, inputs.echo, checks),
        plot: Some(plot),
    })
}

pub fn hull(a: &HullArgs) -> anyhow::Result<Outcome> {
    let c = &a.common;
    check_common(c)?;
    let inputs = Inputs::load(c)?;
    let d = inputs.domain()?;
    if a.probe.is_empty() && a.runge.is_none() {
        return Err(usage("hull needs --probe points or --runge"));
    }
    let probes = parse_points(&a.probe, d.dim())?;
    let (tmax, tgrid) = time_grid(c, 1.0)?;
    let boundary = sample_boundary(d, c.samples, c.seed)?;
    let k = SampleCloud::new(boundary.points.clone(), "boundary sample", c.seed)?;
    let cfg = HullConfig {
        degree_cap: c.degree,
        budget: c.budget,
        seed: c.seed,
    };
    let mut checks = Vec::new();
    let mut separated = Vec::new();
    let mut inconclusive = Vec::new();
    for (i, (text, p)) in a.probe.iter().zip(&probes).enumerate() {
        let cert = hull_probe(&k, p, &HullConfig { seed: c.seed.wrapping_add(i as u64), ..cfg })?;
        let verdict = match &cert.verdict {
            HullVerdict::Separated { degree, gap, .. } => {
                separated.push(p.clone());
                format!("Separated (degree {degree}, gap {gap:.3e})")
            }
            HullVerdict::Inconclusive { degree_cap } => {
                inconclusive.push(p.clone());
                format!("Inconclusive (degree cap {degree_cap})")
            }
        };
        checks.push(CheckResult::new(format!("hull_probe[{text}]"), cert.is_separated(), verdict, cert));
    }
    if let Some(scale) = a.runge {
        let v = inputs.field()?;
        if !(scale > 1.0) {
            return Err(usage("--runge scale must exceed 1"));
        }
        let u = d.scaled(scale)?;
        let rep = runge_basis_check(
            v,
            d,
            &tgrid,
            &boundary.points,
            &u,
            &RungeConfig {
                tol: c.tol,
                ..RungeConfig::default()
            },
        )?;
        let ok = rep.clause_a() && rep.clause_b_in_window();
        checks.push(CheckResult::new(
            "runge_basis",
            ok,
            format!(
                "clause (a) {}, clause (b) {} below T' = {:.4}",
                if rep.clause_a() { "holds" } else { "fails" },
                if rep.clause_b_in_window() { "holds" } else { "fails" },
                rep.t_prime
            ),
            rep,
        ));
    }
    let proj = Projection::parse(c.proj.as_deref(), d.dim())?;
    let mut plot = Plot::new("hull probes", proj);
    plot.scatter(&k.points, 5, 1.5);
    plot.scatter(&separated, 2, 4.0);
    plot.scatter(&inconclusive, 1, 4.0);
    plot.legend("K sample", 5);
    plot.legend("separated", 2);
    plot.legend("inconclusive", 1);
    let config = with_extra(
        common_config(c, tmax, &tgrid),
        json!({"probe": a.probe, "runge": a.runge}),
    );
    Ok(Outcome {
        report: ReportDoc::new("hull", config, inputs.echo, checks),
        plot: Some(plot),
    })
}

fn chain_spec(inputs: &Inputs, tol: f64) -> anyhow::Result<LoewnerChainSpec> {
    let (d, v) = (inputs.domain()?, inputs.field()?);
    let n = v.dim();
    let id = MapExpr::identity(n);
    let (f, f_inv) = match (inputs.map("f"), inputs.map("f_inv")) {
        (Some(f), inv) => (f.clone(), inv.cloned()),
        (None, None) => (id.clone(), Some(id.clone())),
        (None, Some(_)) => return Err(usage("map `f_inv` given without `f`")),
    };
    let (psi, psi_inv) = match (inputs.map("psi"), inputs.map("psi_inv")) {
        (Some(p), Some(q)) => (p.clone(), q.clone()),
        (None, None) => (id.clone(), id),
        _ => return Err(usage("maps `psi` and `psi_inv` must be given together")),
    };
    LoewnerChainSpec::new(f, f_inv, psi, psi_inv, v.clone(), d.clone())
        .map(|s| s.with_tol(tol))
        .map_err(|e| usage(format!("chain: {e}")))
}

pub fn loewner(a: &LoewnerArgs) -> anyhow::Result<Outcome> {
    let c = &a.common;
    check_common(c)?;
    let inputs = Inputs::load(c)?;
    let spec = chain_spec(&inputs, c.tol)?;
    let d = &spec.domain;
    if !(a.u_scale > 1.0) {
        return Err(usage("--u-scale must exceed 1"));
    }
    let probes = parse_points(&a.probe, d.dim())?;
    let (tmax, tgrid) = time_grid(c, 1.0)?;
    let boundary = sample_boundary(d, c.samples, c.seed)?.points;
    let mut checks = Vec::new();

    let mut start_err = 0.0f64;
    for z in &boundary {
        start_err = start_err.max(chain_map(&spec, 0.0, z)?.distance(&spec.f.eval(z)?));
    }
    checks.push(CheckResult::new(
        "chain_start",
        start_err <= 1e-8,
        format!("max |f_0 - f| = {start_err:.3e}"),
        json!({"max_error": start_err, "threshold": 1e-8}),
    ));

    let mut times = vec![0.0];
    times.extend(tgrid.iter().copied());
    for (i, &s) in times.iter().enumerate() {
        for &t in &times[i + 1..] {
            let rep = check_inclusion(&spec, s, t, &boundary)?;
            checks.push(CheckResult::new(
                format!("inclusion[s={s},t={t}]"),
                rep.all_interior,
                format!("min margin {:.3e}", rep.min_margin),
                rep,
            ));
        }
    }
    for &t in &tgrid {
        let rep = check_normalization(&spec, t)?;
        checks.push(CheckResult::new(
            format!("normalization[t={t}]"),
            rep.passes,
            format!("|Df_t(0) - ref| = {:.3e} (|ref| = {:.3e})", rep.err, rep.ref_norm),
            rep,
        ));
    }
    let u = d.scaled(a.u_scale)?;
    match filtering_window(&spec, 0.0, &u, &boundary, c.seed) {
        Ok(rep) => checks.push(CheckResult::new(
            "filtering_window[s=0]",
            rep.all_verified,
            format!("t0 = {:.4e} (r_s = {:.4e}, R = {:.4e})", rep.t0, rep.r_s, rep.big_r),
            rep,
        )),
        Err(Error::EmptyWindow(r)) => checks.push(CheckResult::new(
            "filtering_window[s=0]",
            false,
            format!("empty window (r_s = {r:e})"),
            json!({"r_s": r}),
        )),
        Err(e) => return Err(e.into()),
    }
    let k: Vec<PointCn> = boundary.iter().map(|p| p * 0.5).collect();
    let ld = ld_bound_constant(&spec, &k, tmax, 100, c.seed)?;
    checks.push(CheckResult::new(
        "ld_bound",
        ld.violations == 0,
        format!("kappa = {:.4e}, {} violations in {} triples", ld.kappa, ld.violations, ld.triples_checked),
        ld,
    ));
    for (text, w) in a.probe.iter().zip(&probes) {
        let hit = range_exhaustion_time(&spec, w, a.tcap, 1e-3)?;
        let (ok, verdict) = match hit {
            Exhaustion::Hit { t } => (true, format!("absorbed at t = {t:.3}")),
            Exhaustion::NotReached { t_cap } => (false, format!("not absorbed by t = {t_cap}")),
        };
        checks.push(CheckResult::new(format!("range_exhaustion[{text}]"), ok, verdict, hit));
    }

    let proj = Projection::parse(c.proj.as_deref(), d.dim())?;
    let mut plot = Plot::new("images f_t of the boundary sample", proj);
    let shown = thin(&boundary, 100);
    for (i, sample) in chain_samples(&spec, &times, &shown)?.iter().enumerate() {
        plot.scatter(&sample.image, i, 1.8);
        plot.legend(format!("t = {}", sample.t), i);
    }
    let config = with_extra(
        common_config(c, tmax, &tgrid),
        json!({"u_scale": a.u_scale, "probe": a.probe, "tcap": a.tcap, "exhaustion_step": 1e-3, "ld_triples": 100}),
    );
    Ok(Outcome {
        report: ReportDoc::new("loewner", config, inputs.echo, checks),
        plot: Some(plot),
    })
}

fn default_targets(n: usize) -> (String, String) {
    let g: Vec<String> = (1..=n).map(|k| format!("z{k}")).collect();
    let h: Vec<String> = (1..=n).map(|k| format!("z{k}^2")).collect();
    (g.join(";"), h.join(";"))
}

pub fn operators(a: &OperatorsArgs) -> anyhow::Result<Outcome> {
    let c = &a.common;
    check_common(c)?;
    let inputs = Inputs::load(c)?;
    let tau = match (inputs.map("tau"), inputs.map("tau_inv")) {
        (Some(f), Some(g)) => AutomorphismSpec::new("tau", f.clone(), g.clone(), inputs.domain()?.clone())
            .map_err(|e| usage(format!("tau: {e}")))?,
        (None, None) => AutomorphismSpec::builtin(&a.auto).map_err(|e| usage(e.to_string()))?,
        _ => return Err(usage("maps `tau` and `tau_inv` must be given together")),
    };
    for (name, r) in [("--div-radius", a.div_radius), ("--k-radius", a.k_radius)] {
        if !(r > 0.0 && r < 1.0) {
            return Err(usage(format!("{name} must lie in (0, 1)")));
        }
    }
    let n = tau.dim();
    let (g_default, h_default) = default_targets(n);
    let g_text = a.g.clone().unwrap_or(g_default);
    let h_text = a.h.clone().unwrap_or(h_default);
    let g = parse_map(&g_text, n, "--g")?;
    let h = parse_map(&h_text, n, "--h")?;
    let probes = parse_points(&a.probe, n)?;
    if !probes.is_empty() && probes.len() != 2 {
        return Err(usage("operators takes exactly two --probe points"));
    }
    let mut checks = Vec::new();

    let k_div = tau.domain.scaled(a.div_radius)?;
    let h_cloud = closure_layers(&sample_boundary(&k_div, c.samples, c.seed)?.points);
    let div = compact_divergence_check(&tau, &h_cloud, &k_div, a.jmax)?;
    checks.push(CheckResult::new(
        "compact_divergence",
        div.observed(),
        match div.j0 {
            Some(j) => format!("j0 = {j}"),
            None => format!("NotObserved up to j = {}", a.jmax),
        },
        &div,
    ));

    let starts: Vec<PointCn> = sample_boundary(&tau.domain, 16, c.seed)?
        .points
        .iter()
        .map(|p| p * 0.6)
        .chain(std::iter::once(PointCn::origin(n)))
        .collect();
    let fp = fixed_point_search(&tau, &starts, 60)?;
    checks.push(CheckResult::new(
        "no_interior_fixed_point",
        matches!(fp, FixedPointResult::NoneFound { .. }),
        match &fp {
            FixedPointResult::FixedPoint { point, .. } => format!("FixedPoint at {:?}", point.coords()),
            FixedPointResult::NoneFound { .. } => "NoneFound".into(),
        },
        &fp,
    ));

    let k_region = tau.domain.scaled(a.k_radius)?;
    let k_points = closure_layers(&sample_boundary(&k_region, (c.samples / 4).max(8), c.seed)?.points);
    let k = SampleCloud::new(k_points, format!("{}·domain", a.k_radius), c.seed)?;
    let hull_cfg = HullConfig {
        degree_cap: c.degree,
        budget: c.budget,
        seed: c.seed,
    };
    let orbit = generalized_translation_check(&tau, &k, a.jmax, &hull_cfg)?;
    checks.push(CheckResult::new(
        "generalized_translation",
        orbit.passed(),
        match orbit.found {
            Some(j) => format!("j = {j} (disjoint, union hull separates midpoints)"),
            None => format!("not found up to j = {}", a.jmax),
        },
        &orbit,
    ));

    let tcfg = TransitivityConfig {
        eps: a.eps,
        degree_cap: a.fit_degree,
        j_max: a.jmax,
        ..TransitivityConfig::default()
    };
    let outcome = transitivity_witness(&tau, &g, &h, &k, &tcfg)?;
    let (ok, verdict) = match &outcome {
        TransitivityOutcome::Found(w) => {
            let re = w.reverify(&tau, &g, &h, &k.points)?;
            (re, format!("n = {}, residuals {:.2e} / {:.2e}, re-verified: {re}", w.n, w.err_g, w.err_h))
        }
        TransitivityOutcome::NotFound { reason, .. } => (false, format!("NotFound ({reason})")),
    };
    checks.push(CheckResult::new("transitivity_witness", ok, verdict, &outcome));

    if let [z, w] = probes.as_slice() {
        let lb = caratheodory_lb(
            &tau.domain,
            z,
            w,
            &[],
            &CaratheodoryConfig {
                seed: c.seed,
                ..CaratheodoryConfig::default()
            },
        )?;
        checks.push(CheckResult::new(
            "caratheodory_lower_bound",
            true,
            format!("c(z, w) ≥ {:.6}", lb.lower_bound),
            lb,
        ));
    }

    let proj = Projection::parse(c.proj.as_deref(), n)?;
    let mut plot = Plot::new(format!("orbits of {}", tau.name), proj);
    plot.scatter(&k.points, 5, 1.5);
    for (i, z) in thin(&h_cloud, 8).iter().enumerate() {
        plot.polyline(&tau.orbit(z, a.jmax.min(30))?, i % 5);
    }
    plot.legend("K sample", 5);
    let config = with_extra(
        common_config(c, 0.0, &[]),
        json!({
            "auto": tau.name, "g": g_text, "h": h_text, "eps": a.eps, "jmax": a.jmax,
            "div_radius": a.div_radius, "k_radius": a.k_radius, "fit_degree": a.fit_degree,
            "probe": a.probe,
        }),
    );
    Ok(Outcome {
        report: ReportDoc::new("operators", config, inputs.echo, checks),
        plot: Some(plot),
    })
}

pub fn catalog_list() -> anyhow::Result<String> {
    let entries: Vec<Value> = catalog::list()
        .into_iter()
        .map(|(name, about)| json!({"name": name, "description": about}))
        .collect();
    Ok(serde_json::to_string_pretty(&entries)? + "\n")
}

pub fn catalog_show(name: &str) -> anyhow::Result<String> {
    let entry = catalog::builtin(name).map_err(|e| usage(e.to_string()))?;
    Ok(serde_json::to_string_pretty(&entry.to_spec())? + "\n")
}
