#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

//! Acceptance checks, one per criterion. Runs without the libtest harness so
//! every criterion prints a PASS/FAIL line; any failure exits nonzero.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use spirallab_core::catalog::{builtin, hartogs_flow};
use spirallab_core::domains::{
    pushforward_hessian, sample_boundary, strong_convexity_check, ConvexityVerdict, DomainSpec,
};
use spirallab_core::hull::{closure_layers, hull_probe, runge_basis_check, HullConfig, RungeConfig, SampleCloud};
use spirallab_core::loewner::{
    chain_map, check_inclusion, check_normalization, filtering_window, range_exhaustion_time, Exhaustion,
    LoewnerChainSpec,
};
use spirallab_core::operators::{
    compact_divergence_check, disc_cloud, fixed_point_search, transitivity_witness, AutomorphismSpec,
    FixedPointResult, TransitivityConfig, TransitivityOutcome, TransitivityWitness,
};
use spirallab_core::sampling::{in_ball, in_shell, rng_for, unit_direction};
use spirallab_core::spirallike::{check_strict_spirallike, criterion_sweep, SpirallikeConfig};
use spirallab_core::vectorfield::{flow_point, jacobian_sup_bound, lipschitz_estimate_check, IntegratorConfig};
use spirallab_core::{MapExpr, PointCn, ScalarExpr};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn flow_oracle_agreement() -> Check {
    let e_ = builtin("hartogs-spiral(5)").map_err(e)?;
    let field = e_.field.ok_or("hartogs entry has no field")?;
    let cfg = IntegratorConfig::with_tol(1e-9);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let z = in_ball(&mut rng_for(101, i), 2, 2.0);
        for t in [0.1, 1.0, 5.0] {
            let num = flow_point(&field, &z, t, &cfg).map_err(e)?;
            let exact = hartogs_flow(t, &z).map_err(e)?;
            worst = worst.max(num.distance(&exact) / exact.norm().max(f64::MIN_POSITIVE));
        }
    }
    ensure(worst <= 1e-6, || format!("max relative error {worst:e}"))?;
    Ok(format!("max relative error {worst:.2e} over 300 runs"))
}

fn hartogs_strict_spirallike() -> Check {
    let entry = builtin("hartogs-spiral(5)").map_err(e)?;
    let field = entry.field.clone().ok_or("no field")?;
    let cloud = sample_boundary(&entry.domain, 200, 7).map_err(e)?;
    let tgrid = [0.01, 0.1, 1.0, 5.0];
    let rep = check_strict_spirallike(&field, &entry.domain, &cloud, &tgrid, &SpirallikeConfig::default())
        .map_err(e)?;
    ensure(rep.is_strict(), || format!("verdict {:?}", rep.verdict))?;
    ensure(rep.min_margin_by_time.iter().all(|m| *m > 0.0), || {
        format!("margins {:?}", rep.min_margin_by_time)
    })?;
    let mut closed_min = f64::INFINITY;
    for z in &cloud.points {
        for &t in &tgrid {
            let w = hartogs_flow(t, z).map_err(e)?;
            let gap = (-w[0].norm()).exp() - w[1].norm();
            ensure(gap > 1e-12 && w[0].norm() < 5.0, || {
                format!("closed form leaves the domain at t={t}: gap {gap:e}")
            })?;
            closed_min = closed_min.min(gap);
        }
    }
    Ok(format!(
        "EvidenceStrict on {} points, worst margin {:.3e}, closed-form gap ≥ {:.3e}",
        rep.cloud_size, rep.worst_margin, closed_min
    ))
}

fn criterion_sweeps() -> Check {
    let ball = builtin("ball(2)").map_err(e)?;
    let v = ball.field.clone().ok_or("no field")?;
    let r = ScalarExpr::parse("z1*conj(z1)+z2*conj(z2)-1", 2).map_err(e)?;
    let cloud: Vec<PointCn> = (0..300).map(|i| in_shell(&mut rng_for(33, i), 2, 0.1, 1.0)).collect();
    let rep = criterion_sweep(&v, &r, &cloud).map_err(e)?;
    let min_sq = cloud.iter().map(|z| z.norm().powi(2)).fold(f64::INFINITY, f64::min);
    ensure((rep.max_value + min_sq).abs() <= 1e-10, || {
        format!("ball: max {} vs -min|z|^2 {}", rep.max_value, -min_sq)
    })?;

    let hartogs = builtin("hartogs-spiral(5)").map_err(e)?;
    let hv = hartogs.field.clone().ok_or("no field")?;
    let hr = hartogs.criterion_function.clone().ok_or("no criterion function")?;
    let mut pts = Vec::new();
    let mut rng = rng_for(34, 0);
    while pts.len() < 300 {
        let z1 = in_ball(&mut rng, 1, 5.0)[0];
        let z2 = in_ball(&mut rng, 1, 1.0)[0];
        if z1.norm() >= 1e-3 && z2.norm() > 0.0 {
            pts.push(PointCn(vec![z1, z2]));
        }
    }
    let hrep = criterion_sweep(&hv, &hr, &pts).map_err(e)?;
    let hand = -1.5 + pts.iter().map(|z| z[0].re / 2.0 - z[0].norm()).fold(f64::NEG_INFINITY, f64::max);
    ensure(hrep.max_value <= hand + 1e-6 && hand <= -1.5 + 1e-6, || {
        format!("hartogs: max {} vs hand bound {}", hrep.max_value, hand)
    })?;
    Ok(format!(
        "ball max {:.3e} = -min|z|^2; hartogs max {:.6} ≤ {:.6} ≤ -1.5",
        rep.max_value, hrep.max_value, hand
    ))
}

fn lipschitz_estimate() -> Check {
    let entry = builtin("hartogs-spiral(5)").map_err(e)?;
    let v = entry.field.clone().ok_or("no field")?;
    let tol = 1e-10;
    let boundary = sample_boundary(&entry.domain, 200, 11).map_err(e)?.points;
    let mut cloud = closure_layers(&boundary);
    let mut cases = Vec::new();
    for i in 0..100 {
        let mut rng = rng_for(44, i);
        let z = &boundary[rng.random_range(0..boundary.len())] * rng.random_range(0.2..1.0);
        let t = rng.random_range(0.05..1.0);
        let xt = v.flow(&z, t, tol).map_err(e)?;
        let w = &xt + &(&unit_direction(&mut rng, 2) * 1e-2);
        // cover both backward paths with the Jacobian sample
        for (p, span) in [(&z, t), (&w, -t)] {
            cloud.extend(v.integrate(p, span, tol).map_err(e)?.points);
        }
        cases.push((w, z, t));
    }
    let b = jacobian_sup_bound(&v, &cloud).map_err(e)?;
    let mut worst_ratio = 0.0f64;
    for (w, z, t) in &cases {
        let rep = lipschitz_estimate_check(&v, w, z, *t, b, tol).map_err(e)?;
        ensure(rep.lhs <= rep.rhs * (1.0 + 1e-6), || {
            format!("violated at t={t}: {} > {}", rep.lhs, rep.rhs)
        })?;
        worst_ratio = worst_ratio.max(rep.lhs / rep.rhs);
    }

    let ball = builtin("ball(2)").map_err(e)?;
    let lin = ball.field.clone().ok_or("no field")?;
    let mut worst_rel = 0.0f64;
    for i in 0..100 {
        let mut rng = rng_for(45, i);
        let z = in_ball(&mut rng, 2, 1.0);
        let w = in_ball(&mut rng, 2, 1.0);
        let t = rng.random_range(0.1..2.0);
        let rep = lipschitz_estimate_check(&lin, &w, &z, t, 1.0, 1e-12).map_err(e)?;
        worst_rel = worst_rel.max((rep.lhs - rep.rhs).abs() / rep.rhs);
    }
    ensure(worst_rel <= 1e-8, || format!("linear equality off by {worst_rel:e}"))?;
    Ok(format!(
        "B = {b:.4}, worst lhs/rhs {worst_ratio:.4}; linear case relative gap {worst_rel:.2e}"
    ))
}

fn runge_inclusions() -> Check {
    let entry = builtin("ball(2)").map_err(e)?;
    let v = entry.field.clone().ok_or("no field")?;
    let cloud = sample_boundary(&entry.domain, 100, 5).map_err(e)?.points;
    let u = entry.domain.scaled(1.5).map_err(e)?;
    let grid = [0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.8, 1.0, 2.0];
    let rep = runge_basis_check(&v, &entry.domain, &grid, &cloud, &u, &RungeConfig::default()).map_err(e)?;
    let ln15 = 1.5f64.ln();
    ensure(rep.clause_a(), || "clause (a) failed".into())?;
    for row in &rep.rows {
        ensure(row.b_holds == (row.t < ln15), || format!("clause (b) wrong at t={}", row.t))?;
    }
    let limit = rep.b_limit.ok_or("clause (b) never failed")?;
    ensure((limit - ln15).abs() <= 1e-3, || format!("b limit {limit} vs ln 1.5"))?;
    ensure((rep.jacobian_bound - 1.0).abs() < 1e-12, || format!("B = {}", rep.jacobian_bound))?;
    ensure(rep.t_prime < rep.log_window && rep.clause_b_in_window(), || {
        format!("T' = {} vs window {}", rep.t_prime, rep.log_window)
    })?;
    Ok(format!(
        "(a) on all {} times; (b) ends at {limit:.3} (ln 1.5 = {ln15:.4}); T' = {:.4}",
        rep.rows.len(),
        rep.t_prime
    ))
}

/// Cells reachable from the border avoiding cells within `block` of the
/// curve samples; unreachable cells are in the polynomial hull.
struct FloodOracle {
    lo: f64,
    step: f64,
    n: usize,
    outside: Vec<bool>,
}

impl FloodOracle {
    fn new(samples: &[Complex64], lo: f64, hi: f64, n: usize, block: f64) -> Self {
        let step = (hi - lo) / n as f64;
        let center = |i: usize| lo + (i as f64 + 0.5) * step;
        let mut blocked = vec![false; n * n];
        for (idx, b) in blocked.iter_mut().enumerate() {
            let p = c(center(idx % n), center(idx / n));
            *b = samples.iter().any(|s| (s - p).norm() <= block);
        }
        let mut outside = vec![false; n * n];
        let mut stack: Vec<usize> = (0..n)
            .flat_map(|k| [k, (n - 1) * n + k, k * n, k * n + n - 1])
            .filter(|&i| !blocked[i])
            .collect();
        while let Some(i) = stack.pop() {
            if outside[i] || blocked[i] {
                continue;
            }
            outside[i] = true;
            let (x, y) = (i % n, i / n);
            if x > 0 {
                stack.push(i - 1);
            }
            if x + 1 < n {
                stack.push(i + 1);
            }
            if y > 0 {
                stack.push(i - n);
            }
            if y + 1 < n {
                stack.push(i + n);
            }
        }
        Self { lo, step, n, outside }
    }

    fn in_hull(&self, z: Complex64) -> bool {
        let ix = (((z.re - self.lo) / self.step) as usize).min(self.n - 1);
        let iy = (((z.im - self.lo) / self.step) as usize).min(self.n - 1);
        !self.outside[iy * self.n + ix]
    }
}

fn hull_soundness() -> Check {
    let circle = SampleCloud::circle(c(0.0, 0.0), 1.0, 512).map_err(e)?;
    let discs = SampleCloud::circle(c(-1.0, 0.0), 0.6, 512)
        .and_then(|a| a.union(&SampleCloud::circle(c(1.2, 0.0), 0.6, 512)?))
        .map_err(e)?;
    let curves: [(&SampleCloud, &dyn Fn(Complex64) -> f64); 2] = [
        (&circle, &|z: Complex64| (z.norm() - 1.0).abs()),
        (&discs, &|z: Complex64| {
            ((z - c(-1.0, 0.0)).norm() - 0.6)
                .abs()
                .min(((z - c(1.2, 0.0)).norm() - 0.6).abs())
        }),
    ];
    let cfg = HullConfig::default();
    let (mut agree, mut total, mut unsound, mut wrong_side) = (0, 0, 0, 0);
    for (ci, (cloud, band)) in curves.iter().enumerate() {
        let samples: Vec<Complex64> = cloud.points.iter().map(|p| p[0]).collect();
        let oracle = FloodOracle::new(&samples, -2.5, 2.5, 500, 0.012);
        let mut rng = rng_for(66, ci as u64);
        let mut count = 0;
        while count < 100 {
            let z = c(rng.random_range(-2.5..2.5), rng.random_range(-2.0..2.0));
            if band(z) < 0.02 {
                continue;
            }
            count += 1;
            total += 1;
            let member = oracle.in_hull(z);
            let cert = hull_probe(cloud, &PointCn(vec![z]), &HullConfig { seed: total, ..cfg }).map_err(e)?;
            if cert.is_separated() {
                if !cert.reverify(&cloud.points).map_err(e)? {
                    unsound += 1;
                }
                if member {
                    wrong_side += 1;
                } else {
                    agree += 1;
                }
            } else if member {
                agree += 1;
            }
        }
    }
    let rate = agree as f64 / total as f64;
    ensure(unsound == 0 && wrong_side == 0, || {
        format!("{unsound} certificates failed re-verification, {wrong_side} separated hull members")
    })?;
    ensure(rate >= 0.95, || format!("agreement {rate:.3}"))?;
    Ok(format!("{agree}/{total} agree with the flood fill, 0 unsound, disagreements one-sided"))
}

fn loewner_chain() -> Check {
    let mut notes = Vec::new();
    for name in ["ball(2)", "hartogs-spiral(5)"] {
        let entry = builtin(name).map_err(e)?;
        let spec = LoewnerChainSpec::identity(entry.field.clone().ok_or("no field")?, entry.domain.clone())
            .map_err(e)?;
        let boundary = sample_boundary(&entry.domain, 60, 9).map_err(e)?.points;
        let cloud = closure_layers(&boundary);
        for z in &cloud {
            let f0 = chain_map(&spec, 0.0, z).map_err(e)?;
            ensure(f0.distance(z) <= 1e-8, || format!("{name}: f_0 != f"))?;
        }
        let mut min_margin = f64::INFINITY;
        for (s, t) in [(0.0, 0.5), (0.0, 1.0), (0.5, 1.0)] {
            let rep = check_inclusion(&spec, s, t, &boundary).map_err(e)?;
            ensure(rep.all_interior, || format!("{name}: inclusion ({s},{t}) margin {}", rep.min_margin))?;
            min_margin = min_margin.min(rep.min_margin);
        }
        for t in [0.5, 1.0] {
            let rep = check_normalization(&spec, t).map_err(e)?;
            ensure(rep.passes, || format!("{name}: Df_t(0) error {:e} at t={t}", rep.err))?;
            if name.starts_with("hartogs") {
                let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                    c((2.0 * t).exp(), 0.0),
                    c((3.0 * t).exp(), 0.0),
                ]));
                for i in 0..2 {
                    for j in 0..2 {
                        let diff = (rep.j_num[i][j] - want[(i, j)]).norm();
                        ensure(diff <= 1e-5 * (3.0 * t).exp(), || {
                            format!("hartogs Df_t(0)[{i}][{j}] off by {diff:e}")
                        })?;
                    }
                }
            }
        }
        // X₋ₛ(D̄) must sit inside U, so the ball at s = 0.5 needs radius > e^{0.5}
        let (scale, starts): (f64, &[f64]) = if name.starts_with("ball") {
            (2.0, &[0.0, 0.5])
        } else {
            (1.5, &[0.0])
        };
        let u = entry.domain.scaled(scale).map_err(e)?;
        for &s in starts {
            let rep = filtering_window(&spec, s, &u, &boundary, 3).map_err(|err| format!("{name} s={s}: {err}"))?;
            ensure(rep.all_verified && rep.t0 > 0.0, || format!("{name}: window at s={s} not verified"))?;
            notes.push(format!("{name} t0(s={s})={:.4}", rep.t0));
        }
        for w in [[4.0, 4.0], [10.0, 0.0]] {
            let hit = range_exhaustion_time(&spec, &PointCn::from_reals(&w), 20.0, 1e-3).map_err(e)?;
            match hit {
                Exhaustion::Hit { t } => notes.push(format!("{name} w={w:?} t={t:.3}")),
                Exhaustion::NotReached { .. } => return Err(format!("{name}: w={w:?} never absorbed")),
            }
        }
        notes.push(format!("{name} inclusion margin {min_margin:.3e}"));
    }
    Ok(notes.join("; "))
}

fn strong_convexity() -> Check {
    let ovoid = builtin("ovoid").map_err(e)?;
    let cloud = sample_boundary(&ovoid.domain, 1000, 21).map_err(e)?;
    let rep = strong_convexity_check(&ovoid.domain, &cloud).map_err(e)?;
    ensure(rep.c_min > 0.0, || format!("ovoid c_min {}", rep.c_min))?;

    let ball = builtin("ball(2)").map_err(e)?;
    let bcloud = sample_boundary(&ball.domain, 1000, 22).map_err(e)?;
    let brep = strong_convexity_check(&ball.domain, &bcloud).map_err(e)?;
    ensure((brep.c_min - 2.0).abs() <= 1e-8, || format!("ball c_min {}", brep.c_min))?;

    let hartogs = builtin("hartogs-spiral(5)").map_err(e)?;
    let hcloud = sample_boundary(&hartogs.domain, 1000, 23).map_err(e)?;
    let hrep = strong_convexity_check(&hartogs.domain, &hcloud).map_err(e)?;
    ensure(
        hrep.verdict == ConvexityVerdict::NotStronglyConvex && hrep.c_min < 0.0,
        || format!("hartogs c_min {}", hrep.c_min),
    )?;
    Ok(format!(
        "ovoid c_min {:.4}, ball c_min {:.10}, hartogs witness c = {:.4}",
        rep.c_min, brep.c_min, hrep.c_min
    ))
}

fn operators() -> Check {
    let tau = AutomorphismSpec::mobius(c(0.5, 0.0)).map_err(e)?;
    let disc = DomainSpec::parse(1, &["z1*conj(z1)-1"], 2.0, None).map_err(e)?;
    let k = disc.scaled(0.9).map_err(e)?;
    let mut h = disc_cloud(c(0.0, 0.0), 0.9, 20).map_err(e)?.points;
    for z in [c(0.9, 0.0), c(-0.9, 0.0), c(0.0, 0.9), c(0.0, -0.9)] {
        h.push(PointCn(vec![z]));
    }
    let div = compact_divergence_check(&tau, &h, &k, 30).map_err(e)?;
    let oracle = (1..100).find(|&j| (0.549306 * j as f64 - 1.472219).tanh() > 0.9);
    ensure(div.j0 == Some(6) && oracle == Some(6), || format!("j0 {:?}, oracle {:?}", div.j0, oracle))?;

    let starts: Vec<PointCn> = (0..8)
        .map(|i| PointCn(vec![Complex64::from_polar(0.6, TAU * i as f64 / 8.0)]))
        .collect();
    ensure(
        matches!(fixed_point_search(&tau, &starts, 60).map_err(e)?, FixedPointResult::NoneFound { .. }),
        || "hyperbolic automorphism has an interior fixed point".into(),
    )?;
    let rot = AutomorphismSpec::rotation(1.0).map_err(e)?;
    match fixed_point_search(&rot, &starts, 60).map_err(e)? {
        FixedPointResult::FixedPoint { point, .. } if point.norm() < 1e-9 => {}
        other => return Err(format!("rotation: {other:?}")),
    }

    let kc = disc_cloud(c(0.0, 0.0), 0.3, 50).map_err(e)?;
    let g = MapExpr::parse(&["z1"], 1).map_err(e)?;
    let hh = MapExpr::parse(&["z1^2"], 1).map_err(e)?;
    let cfg = TransitivityConfig {
        eps: 1e-3,
        degree_cap: 20,
        ..TransitivityConfig::default()
    };
    let witness = match transitivity_witness(&tau, &g, &hh, &kc, &cfg).map_err(e)? {
        TransitivityOutcome::Found(w) => w,
        other => return Err(format!("transitivity: {other:?}")),
    };
    let text = serde_json::to_string(&witness).map_err(e)?;
    let back: TransitivityWitness = serde_json::from_str(&text).map_err(e)?;
    ensure(back.reverify(&tau, &g, &hh, &kc.points).map_err(e)?, || "witness does not re-verify".into())?;
    let j_cloud = compact_divergence_check(
        &tau,
        &kc.points,
        &spirallab_core::operators::CloudSet::new(kc.clone()),
        30,
    )
    .map_err(e)?
    .j0;
    Ok(format!(
        "j0 = 6; NoneFound / FixedPoint(0); witness n = {} (divergence index {:?}), residuals {:.1e}, {:.1e}",
        witness.n, j_cloud, witness.err_g, witness.err_h
    ))
}

fn hessian_chain_rule() -> Check {
    let mut worst = 0.0f64;
    for i in 0..50 {
        let mut rng = rng_for(77, i);
        let mut q = [[0.0f64; 4]; 4];
        for a in 0..4 {
            for b in a..4 {
                let v = rng.random_range(-1.0..1.0);
                q[a][b] = v;
                q[b][a] = v;
            }
        }
        let lin: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let u = ["re(z1)", "im(z1)", "re(z2)", "im(z2)"];
        let mut terms = Vec::new();
        for a in 0..4 {
            for b in 0..4 {
                terms.push(format!("({})*{}*{}", q[a][b], u[a], u[b]));
            }
            terms.push(format!("({})*{}", lin[a], u[a]));
        }
        let text = format!("{}-1", terms.join("+"));
        let d = DomainSpec::parse(2, &[text], 10.0, None).map_err(e)?;

        let m: Vec<Complex64> = (0..4)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let m = nalgebra::Matrix2::new(m[0] + 2.0, m[1], m[2], m[3] + 2.0);
        let inv = m.try_inverse().ok_or("singular affine map")?;
        let b: Vec<Complex64> = (0..2)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let lit = |z: Complex64| format!("({}+({})*i)", z.re, z.im);
        let fwd = MapExpr::parse(
            &[
                format!("{}*z1+{}*z2+{}", lit(m[(0, 0)]), lit(m[(0, 1)]), lit(b[0])),
                format!("{}*z1+{}*z2+{}", lit(m[(1, 0)]), lit(m[(1, 1)]), lit(b[1])),
            ],
            2,
        )
        .map_err(e)?;
        // inv(x) = M⁻¹(x − b)
        let shift = inv * nalgebra::Vector2::new(b[0], b[1]);
        let bwd = MapExpr::parse(
            &[
                format!("{}*z1+{}*z2-{}", lit(inv[(0, 0)]), lit(inv[(0, 1)]), lit(shift[0])),
                format!("{}*z1+{}*z2-{}", lit(inv[(1, 0)]), lit(inv[(1, 1)]), lit(shift[1])),
            ],
            2,
        )
        .map_err(e)?;
        let x = in_ball(&mut rng, 2, 1.0);
        let chain = pushforward_hessian(&d, &fwd, &bwd, &x).map_err(e)?;
        let direct = d.pullback(&bwd, 100.0).map_err(e)?.hessian(&x).map_err(e)?;
        let err = (&chain - &direct).abs().max() / (1.0 + direct.abs().max());
        worst = worst.max(err);
    }
    ensure(worst <= 1e-6, || format!("max relative difference {worst:e}"))?;
    Ok(format!("max relative difference {worst:.2e} over 50 pairs"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("flow oracle agreement", flow_oracle_agreement),
        ("hartogs strict spirallikeness", hartogs_strict_spirallike),
        ("criterion sweeps", criterion_sweeps),
        ("lipschitz estimate", lipschitz_estimate),
        ("runge-basis inclusions", runge_inclusions),
        ("hull probe soundness", hull_soundness),
        ("loewner chain", loewner_chain),
        ("strong convexity", strong_convexity),
        ("operators", operators),
        ("hessian chain rule", hessian_chain_rule),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("PASS {:>2} {name} ({secs:.1}s): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
