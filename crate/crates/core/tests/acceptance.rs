//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use modstab::control::{
    alpha_eval, closed_form_power_bound, series, stability_bound, BoundTerm, ControlFunction,
    Regime, SeriesKind,
};
use modstab::direct::{uniqueness_check, PointOutcome, PointResult};
use modstab::equation::{check_additive_first, check_quadratic_second, TensorMap};
use modstab::experiment::{run_experiment, ExperimentOutcome};
use modstab::modular::{axiom_samples, check_axioms, delta2_tau, ModularSpec};
use modstab::{DyadicVector, EquationForm, ExperimentConfig, MapEvaluator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn load(name: &str) -> ExperimentConfig {
    ExperimentConfig::load(&configs_dir().join(name)).expect("bundled config parses")
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs())
}

fn solved(outcome: &ExperimentOutcome) -> Result<Vec<&PointResult>, String> {
    outcome
        .report
        .stability
        .points
        .iter()
        .map(|p| match p {
            PointOutcome::Solved(r) => Ok(r),
            PointOutcome::Failed(f) => Err(format!("({}; {}) failed: {}", f.x, f.z, f.error)),
        })
        .collect()
}

fn unit_point(rng: &mut ChaCha8Rng, dim: usize) -> DyadicVector {
    // coordinates k/2^6 with k in [−64, 64]: norms of order one
    loop {
        let parts: Vec<(i64, i64)> = (0..dim).map(|_| (rng.gen_range(-64..=64), -6)).collect();
        let v = DyadicVector::from_parts(&parts).unwrap();
        if !v.is_zero() {
            return v;
        }
    }
}

// 1 ─────────────────────────────────────────────────────────────────────────

fn constant_scale_up() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut evaluated = 0;
    for eps in [0.3, 1.0] {
        let cf = ControlFunction::constant(eps).unwrap();
        for _ in 0..20 {
            let (x, z) = (unit_point(&mut rng, 1), unit_point(&mut rng, 1));
            let b =
                stability_bound(Regime::ScaleUp, &cf, &x, &z, 1e-12).map_err(|e| e.to_string())?;
            ensure((b.value - eps * eps / 3.0).abs() <= 1e-12, || {
                format!("ε={eps}: bound {} vs ε²/3 = {}", b.value, eps * eps / 3.0)
            })?;
            evaluated += 1;
        }
    }
    let mut ends = Vec::new();
    for eps in [0.3, 1.0] {
        let mut cfg = load("corollary24.cfg");
        cfg.control.epsilon = Some(eps);
        let out = run_experiment(&cfg).map_err(|e| e.to_string())?;
        let points = solved(&out)?;
        ensure(points.len() == 100, || {
            format!("{} grid points", points.len())
        })?;
        for p in &points {
            ensure(p.pass && p.measured <= eps * eps / 3.0, || {
                format!(
                    "ε={eps} ({}; {}): measured {} bound {}",
                    p.x, p.z, p.measured, p.bound
                )
            })?;
            ensure((p.bound - eps * eps / 3.0).abs() <= 1e-12, || {
                format!("ε={eps}: reported bound {}", p.bound)
            })?;
        }
        let h = out.report.hypothesis.as_ref().unwrap();
        ensure(h.pass(), || {
            format!("ε={eps}: hypothesis {}/{}", h.passed, h.samples)
        })?;
        ends.push(format!(
            "ε={eps}: {}/100",
            out.report.stability.aggregate.pass_count
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 10.0, || format!("took {secs:.2}s"))?;
    Ok(format!(
        "{evaluated} bound evaluations, {}; {secs:.2}s",
        ends.join(", ")
    ))
}

// 2 ─────────────────────────────────────────────────────────────────────────

/// Σ_{j≥1} 2^{−jk} α(2^{j−1}x, 2^{j−1}x), summed smallest term first.
fn brute_up(theta: f64, r: f64, norm: f64, k: i32) -> f64 {
    let terms: Vec<f64> = (1..=10_000)
        .map(|j| {
            let s = 2f64.powi(j - 1);
            if s.is_infinite() {
                return 0.0;
            }
            let a = theta.sqrt() * 2.0 * (s * norm).powf(r);
            (a / 2f64.powi(j * k)).max(0.0)
        })
        .map(|t| if t.is_finite() { t } else { 0.0 })
        .collect();
    terms.iter().rev().sum()
}

fn power_scale_up() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checked = 0;
    for r in [0.25, 0.5, 0.9] {
        for theta in [0.5, 1.0, 2.0] {
            let cf = ControlFunction::power(theta, r).unwrap();
            for _ in 0..20 {
                let (x, z) = (unit_point(&mut rng, 2), unit_point(&mut rng, 2));
                let (nx, nz) = (x.euclidean_norm().unwrap(), z.euclidean_norm().unwrap());
                let b = stability_bound(Regime::ScaleUp, &cf, &x, &z, 1e-12)
                    .map_err(|e| e.to_string())?;
                let want = 2.0 * theta * nx.powf(r) * nz.powf(r) / (4.0 - r.exp2());
                ensure(rel_close(b.value, want, 1e-9), || {
                    format!("r={r} θ={theta}: {} vs {want}", b.value)
                })?;
                let first = b.first.ok_or("first term missing")?;
                let second = b.second.ok_or("second term missing")?;
                let first_oracle = brute_up(theta, r, nx, 1) * theta.sqrt() * nz.powf(r);
                let second_oracle = brute_up(theta, r, nz, 2) * theta.sqrt() * nx.powf(r);
                ensure(
                    rel_close(first, first_oracle, 1e-9) && rel_close(second, second_oracle, 1e-9),
                    || format!("series terms {first}/{second} vs {first_oracle}/{second_oracle}"),
                )?;
                ensure(
                    b.value == first.min(second) && b.term == BoundTerm::Second,
                    || format!("bound {} is not min({first}, {second})", b.value),
                )?;
                checked += 1;
            }
        }
    }
    let out = run_experiment(&load("corollary23.cfg")).map_err(|e| e.to_string())?;
    let points = solved(&out)?;
    for p in &points {
        let want = 2.0 / (4.0 - 2f64.sqrt())
            * p.x.euclidean_norm().unwrap().sqrt()
            * p.z.euclidean_norm().unwrap().sqrt();
        ensure(rel_close(p.bound, want, 1e-9), || {
            format!(
                "config point ({}; {}): bound {} vs {want}",
                p.x, p.z, p.bound
            )
        })?;
    }
    Ok(format!(
        "{checked} points over 9 (r, θ) pairs; bundled config {} points",
        points.len()
    ))
}

// 3 ─────────────────────────────────────────────────────────────────────────

fn power_scale_down() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut applicable = 0;
    let mut psi_divergent = 0;
    for p in [1.0, 2.0] {
        let spec = ModularSpec::power(p, 1).unwrap();
        let tau = delta2_tau(&spec, None).unwrap().tau;
        let floor = (tau * tau / 2.0).log2();
        for r in [floor + 0.5, floor + 2.0] {
            for theta in [0.5, 1.0, 2.0] {
                let cf = ControlFunction::power(theta, r).unwrap();
                for _ in 0..20 {
                    let (x, z) = (unit_point(&mut rng, 1), unit_point(&mut rng, 1));
                    let b = stability_bound(Regime::ScaleDown { tau }, &cf, &x, &z, 1e-12)
                        .map_err(|e| e.to_string())?;
                    let first = b.first.ok_or("φ-branch unexpectedly divergent")?;
                    let larger = match b.second {
                        None => {
                            psi_divergent += 1;
                            true
                        }
                        Some(s) => s >= first,
                    };
                    if !larger {
                        continue;
                    }
                    let (nx, nz) = (x.euclidean_norm().unwrap(), z.euclidean_norm().unwrap());
                    let closed =
                        closed_form_power_bound(Regime::ScaleDown { tau }, theta, r, nx, nz)
                            .map_err(|e| e.to_string())?;
                    let direct = theta * tau * tau * nx.powf(r) * nz.powf(r)
                        / ((r + 1.0).exp2() - tau * tau);
                    ensure(
                        rel_close(b.value, direct, 1e-9) && rel_close(closed, direct, 1e-12),
                        || format!("p={p} r={r} θ={theta}: {} vs {direct}", b.value),
                    )?;
                    applicable += 1;
                }
            }
        }
    }
    ensure(applicable > 0, || "no applicable case".into())?;
    Ok(format!(
        "{applicable} applicable cases ({psi_divergent} with divergent ψ-branch)"
    ))
}

// 4 ─────────────────────────────────────────────────────────────────────────

/// Brute-force power-control series over 10⁴ terms, smallest term first.
/// The first 30 terms evaluate α at the scaled dyadic points; later ones use
/// the closed-form ratio.
fn brute_series(
    kind: SeriesKind,
    cf: &ControlFunction,
    r: f64,
    x: &DyadicVector,
    y: &DyadicVector,
) -> f64 {
    let (w, up) = match kind {
        SeriesKind::PhiUp => (0.5, true),
        SeriesKind::PsiUp => (0.25, true),
        SeriesKind::PhiDown { tau } => (tau * tau / 2.0, false),
        SeriesKind::PsiDown { tau } => (tau * tau * tau / 2.0, false),
    };
    let (theta, _) = match cf {
        ControlFunction::Power { theta, r } => (*theta, *r),
        _ => unreachable!(),
    };
    let a0 =
        theta.sqrt() * (x.euclidean_norm().unwrap().powf(r) + y.euclidean_norm().unwrap().powf(r));
    let step = if up { w * r.exp2() } else { w / r.exp2() };
    let terms: Vec<f64> = (1..=10_000i32)
        .map(|j| {
            if j <= 30 {
                let k = if up { j as i64 - 1 } else { -(j as i64) };
                let a =
                    alpha_eval(cf, &x.scale_pow2(k).unwrap(), &y.scale_pow2(k).unwrap()).unwrap();
                w.powi(j) * a
            } else if up {
                step.powi(j) / r.exp2() * a0
            } else {
                step.powi(j) * a0
            }
        })
        .collect();
    terms.iter().rev().sum()
}

fn series_bracketing() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_tail = 0.0f64;
    let mut count = 0;
    for which in 0..4 {
        for _ in 0..100 {
            let theta = rng.gen_range(0.1..3.0);
            let p = rng.gen_range(1..=3) as f64;
            let tau = p.exp2();
            // r ranges keeping the term ratio at most 2^−0.1
            let (kind, r, bound, exp) = match which {
                0 => (SeriesKind::PhiUp, rng.gen_range(0.05..0.9), 8, (-3, -1)),
                1 => (SeriesKind::PsiUp, rng.gen_range(0.05..1.9), 8, (-3, -1)),
                2 => (
                    SeriesKind::PhiDown { tau },
                    2.0 * p - 1.0 + rng.gen_range(0.1..4.0),
                    8,
                    (-3, -3),
                ),
                _ => (
                    SeriesKind::PsiDown { tau },
                    3.0 * p - 1.0 + rng.gen_range(0.1..4.0),
                    8,
                    (-3, -3),
                ),
            };
            let dim = rng.gen_range(1..=2);
            let pt = |rng: &mut ChaCha8Rng| {
                let parts: Vec<(i64, i64)> = (0..dim)
                    .map(|_| (rng.gen_range(-bound..=bound), rng.gen_range(exp.0..=exp.1)))
                    .collect();
                DyadicVector::from_parts(&parts).unwrap()
            };
            let (x, y) = (pt(&mut rng), pt(&mut rng));
            let cf = ControlFunction::power(theta, r).unwrap();
            let s = series(kind, &cf, &x, &y, 1e-12).map_err(|e| e.to_string())?;
            let brute = brute_series(kind, &cf, r, &x, &y);
            ensure(s.converged, || {
                format!("{kind:?} r={r}: not converged ({:?})", s.diagnostic)
            })?;
            ensure(s.value <= brute && brute <= s.value + s.tail_bound, || {
                format!(
                    "{kind:?} θ={theta} r={r} x={x} y={y}: brute {brute} outside [{}, {}]",
                    s.value,
                    s.value + s.tail_bound
                )
            })?;
            ensure(s.tail_bound <= 1e-9, || format!("tail {}", s.tail_bound))?;
            worst_tail = worst_tail.max(s.tail_bound);
            count += 1;
        }
    }
    Ok(format!("{count} series, worst tail bound {worst_tail:.2e}"))
}

// pool of hypothesis-verified experiments, shared by 5, 7 and 8 ─────────────

fn experiment_pool() -> Result<Vec<(String, ExperimentOutcome)>, String> {
    let bases = [
        "corollary24.cfg",
        "corollary23.cfg",
        "scale_down.cfg",
        "symmetrized_tensor.cfg",
        "orlicz.cfg",
    ];
    let mut out = Vec::new();
    for (b, base) in bases.iter().enumerate() {
        for k in 0..10u64 {
            let mut cfg = load(base);
            let seed = 1000 + 17 * k + b as u64;
            cfg.perturbation.as_mut().unwrap().seed = seed;
            cfg.solver.grid_seed = seed;
            cfg.solver.grid_points = Some(12);
            cfg.verify.seed = seed;
            cfg.verify.samples = 2000;
            let o = run_experiment(&cfg).map_err(|e| format!("{base} seed {seed}: {e}"))?;
            out.push((format!("{base}#{seed}"), o));
        }
    }
    Ok(out)
}

fn hypothesis_verified(o: &ExperimentOutcome) -> bool {
    o.report.hypothesis.as_ref().is_some_and(|h| h.pass())
}

// 5 ─────────────────────────────────────────────────────────────────────────

fn cauchy_soundness(pool: &[(String, ExperimentOutcome)]) -> Check {
    let mut experiments = 0;
    let mut increments = 0;
    let mut worst = f64::NEG_INFINITY;
    for (name, o) in pool.iter().filter(|(_, o)| hypothesis_verified(o)) {
        experiments += 1;
        for p in solved(o)? {
            for trace in [&p.first, &p.second] {
                for (m, (inc, tail)) in trace.increments.iter().zip(&trace.step_tails).enumerate() {
                    ensure(*inc <= tail + 1e-9, || {
                        format!(
                            "{name} ({}; {}) m={m}: increment {inc} > tail {tail}",
                            p.x, p.z
                        )
                    })?;
                    worst = worst.max(inc - tail);
                    increments += 1;
                }
            }
        }
    }
    ensure(experiments >= 50, || {
        format!("only {experiments} hypothesis-verified experiments")
    })?;
    Ok(format!(
        "{experiments} experiments, {increments} increments, max(increment − tail) = {worst:.2e}"
    ))
}

// 6 ─────────────────────────────────────────────────────────────────────────

fn modular_axioms() -> Check {
    for p in [1.0, 2.0, 3.0] {
        for dim in [1, 3] {
            let spec = ModularSpec::power(p, dim).unwrap();
            let report = check_axioms(&spec, &axiom_samples(p as u64 * 10 + dim as u64, 1000, dim))
                .map_err(|e| e.to_string())?;
            ensure(report.all_pass(), || format!("p={p} d={dim}: {report:?}"))?;
            let tau = delta2_tau(&spec, None).map_err(|e| e.to_string())?.tau;
            ensure(tau == p.exp2(), || format!("p={p}: τ = {tau}"))?;
            ensure(tau >= 2.0, || format!("p={p}: τ = {tau} < 2"))?;
        }
    }
    let convex = ModularSpec::power(1.0, 1).unwrap();
    ensure(convex.with_delta2_tau(1.5).is_err(), || {
        "τ < 2 accepted on a convex modular".into()
    })?;

    let half = ModularSpec::power(0.5, 2).unwrap();
    ensure(!half.convex, || "p = 1/2 flagged convex".into())?;
    let report = check_axioms(&half, &axiom_samples(5, 1000, 2)).map_err(|e| e.to_string())?;
    let w = report
        .convexity
        .witness
        .as_ref()
        .ok_or("no convexity witness for p = 1/2")?;
    ensure(!report.convexity.passed && w.lhs > w.rhs, || {
        "convexity not refuted".into()
    })?;
    ensure(
        report.definiteness.passed && report.symmetry.passed && report.modular_inequality.passed,
        || "p = 1/2 fails a non-convex axiom".into(),
    )?;
    ensure(report.consistent_with(&half), || {
        "report inconsistent with flags".into()
    })?;
    Ok(format!(
        "p ∈ {{1, 2, 3}} pass, τ = 2ᵖ exactly; p = 1/2 witness {:.4} > {:.4}",
        w.lhs, w.rhs
    ))
}

// 7 ─────────────────────────────────────────────────────────────────────────

fn exact_point(rng: &mut ChaCha8Rng, dim: usize) -> DyadicVector {
    let parts: Vec<(i64, i64)> = (0..dim)
        .map(|_| (rng.gen_range(-64..=64), rng.gen_range(-3..=3)))
        .collect();
    DyadicVector::from_parts(&parts).unwrap()
}

fn structural(pool: &[(String, ExperimentOutcome)]) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut tensors = 0;
    for _ in 0..10 {
        let dx = rng.gen_range(1..=3);
        let dy = rng.gen_range(1..=2);
        let entries: Vec<_> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(0..dy),
                    rng.gen_range(0..dx),
                    rng.gen_range(0..dx),
                    rng.gen_range(0..dx),
                    rng.gen_range(-16..=16) as f64 / 8.0,
                )
            })
            .collect();
        let phi = MapEvaluator::new(dx, dy, Some(TensorMap::new(dx, dy, entries).unwrap()), None)
            .unwrap();
        let triples: Vec<_> = (0..1000)
            .map(|_| {
                (
                    exact_point(&mut rng, dx),
                    exact_point(&mut rng, dx),
                    exact_point(&mut rng, dx),
                )
            })
            .collect();
        let add = check_additive_first(&phi, &triples, 1e-12).map_err(|e| e.to_string())?;
        let quad = check_quadratic_second(&phi, &triples, 1e-12).map_err(|e| e.to_string())?;
        ensure(add.passed && quad.passed, || {
            format!(
                "tensor check failed: additive worst {}, quadratic worst {}",
                add.worst, quad.worst
            )
        })?;
        tensors += 1;
    }

    let mut base = 0;
    let mut max_rho = 0.0f64;
    let mut max_abs = 0.0f64;
    let bundled: Vec<(String, ExperimentOutcome)> = [
        "corollary24.cfg",
        "corollary23.cfg",
        "scale_down.cfg",
        "orlicz.cfg",
    ]
    .iter()
    .map(|c| {
        Ok((
            c.to_string(),
            run_experiment(&load(c)).map_err(|e| e.to_string())?,
        ))
    })
    .collect::<Result<_, String>>()?;
    for (name, o) in pool.iter().chain(&bundled) {
        if o.report.config.equation.form != EquationForm::PaperAQ || !hypothesis_verified(o) {
            continue;
        }
        let fz = o
            .report
            .stability
            .aggregate
            .structural_checks
            .as_ref()
            .and_then(|s| s.forced_zero.as_ref())
            .ok_or_else(|| format!("{name}: no forced-zero diagnostic"))?;
        ensure(fz.passed && fz.max_rho <= 1e-6, || {
            format!("{name}: max ρ(H) = {}", fz.max_rho)
        })?;
        for p in solved(o)? {
            max_abs = max_abs.max(p.h_a.max_abs()).max(p.h_c.max_abs());
        }
        max_rho = max_rho.max(fz.max_rho);
        base += 1;
    }
    ensure(base > 0, || "no paper_aq experiments".into())?;
    Ok(format!(
        "{tensors} tensors × 1000 triples exact; {base} paper_aq experiments with max ρ(H) {max_rho:.2e}, max |H| {max_abs:.2e}"
    ))
}

// 8 ─────────────────────────────────────────────────────────────────────────

fn uniqueness(pool: &[(String, ExperimentOutcome)]) -> Check {
    let mut points = 0;
    let mut worst = 0.0f64;
    for (name, o) in pool {
        let spec = o.report.config.modular_spec().map_err(|e| e.to_string())?;
        for p in solved(o)? {
            let u = uniqueness_check(&p.h_a, &p.h_c, &spec, 1e-5);
            ensure(u.pass, || {
                format!("{name} ({}; {}): distance {}", p.x, p.z, u.distance)
            })?;
            worst = worst.max(u.distance);
            points += 1;
        }
    }
    Ok(format!(
        "{points} converged points, worst ρ((H_A − H_C)/2) = {worst:.2e}"
    ))
}

// 9 ─────────────────────────────────────────────────────────────────────────

fn determinism() -> Check {
    let mut names = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(configs_dir())
        .map_err(|e| e.to_string())?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    entries.sort();
    let single = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let multi = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    for path in entries {
        let cfg = ExperimentConfig::load(&path).map_err(|e| e.to_string())?;
        let run = |pool: &rayon::ThreadPool| {
            pool.install(|| match run_experiment(&cfg) {
                Ok(o) => o.json,
                Err(e) => format!("error: {e}"),
            })
        };
        let (a, b) = (run(&single), run(&multi));
        let c = run(&multi);
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        ensure(a == b && b == c, || format!("{name}: reports differ"))?;
        names.push(name);
    }
    Ok(format!(
        "{} bundled configs byte-identical across runs and 1/4 workers",
        names.len()
    ))
}

fn main() {
    let started = Instant::now();
    let mut results: Vec<(&str, Check)> = vec![
        (
            "1 constant control, scale-up bound ε²/3",
            constant_scale_up(),
        ),
        ("2 power control, scale-up closed form", power_scale_up()),
        (
            "3 power control, scale-down closed form",
            power_scale_down(),
        ),
        ("4 series bracketing", series_bracketing()),
    ];
    let pool = experiment_pool();
    match &pool {
        Ok(pool) => {
            results.push(("5 Cauchy-tail soundness", cauchy_soundness(pool)));
            results.push(("6 modular axioms and Δ₂ constants", modular_axioms()));
            results.push(("7 structural checks and forced zero", structural(pool)));
            results.push(("8 uniqueness / branch agreement", uniqueness(pool)));
        }
        Err(e) => {
            for name in [
                "5 Cauchy-tail soundness",
                "7 structural checks and forced zero",
                "8 uniqueness / branch agreement",
            ] {
                results.push((name, Err(format!("experiment pool: {e}"))));
            }
            results.push(("6 modular axioms and Δ₂ constants", modular_axioms()));
        }
    }
    results.push(("9 determinism", determinism()));
    results.sort_by_key(|(name, _)| name.split(' ').next().unwrap().parse::<u32>().unwrap());

    let mut failed = 0;
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {name}: {why}");
            }
        }
    }
    println!(
        "{} passed, {failed} failed in {:.1}s",
        results.len() - failed,
        started.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
