//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Run with `cargo test -p geoquad --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use geoquad::allocation::{self, AllocationConfig};
use geoquad::controllers::{attitude_control, position_control, position_induced_attitude, ForceLaw, GainSet};
use geoquad::dynamics::{self, QuadParams, RigidBodyState};
use geoquad::reference::{AttitudeCommand, ConstantRateCommand, PositionTarget};
use geoquad::roa::{self, BasinVariant};
use geoquad::sim::{self, ControllerKind, RunLog, ScenarioConfig, Winner};
use geoquad::so3::{self, AttitudeErrorState, Vec3};
use nalgebra::{Matrix2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{random_axis, random_rotation, random_vector};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Geometric identities on 10⁴ random attitude pairs.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let tol = 1e-9;
    let (mut worst_identity, mut worst_jac, mut prop_a_pairs) = (0.0f64, 0.0f64, 0usize);
    let mut failures = Vec::new();
    for i in 0..10_000 {
        let rd = random_rotation(&mut rng, std::f64::consts::PI);
        let r = random_rotation(&mut rng, std::f64::consts::PI);
        let psi = so3::psi_error(&r, &rd);
        let e_r = so3::attitude_error_vector(&r, &rd);
        let e2 = e_r.norm_squared();
        // ‖e_R‖² = Ψ(2 − Ψ)
        worst_identity = worst_identity.max((e2 - psi * (2.0 - psi)).abs());
        // ½‖e_R‖² ≤ Ψ, and Ψ ≤ ‖e_R‖²/(2 − ψ) for any cap ψ ∈ (Ψ, 2)
        if 0.5 * e2 > psi + tol {
            failures.push(format!("pair {i}: lower bound"));
        }
        let cap = 0.5 * (psi + 2.0);
        if psi > 0.0 && psi < 2.0 - 1e-6 && psi > e2 / (2.0 - cap) + tol {
            failures.push(format!("pair {i}: upper bound"));
        }
        let jac = so3::error_jacobian(&r, &rd);
        let sigma = jac.singular_values().max();
        worst_jac = worst_jac.max(sigma);
        if sigma > 1.0 + tol {
            failures.push(format!("pair {i}: ‖E‖ = {sigma}"));
        }
        if psi < 1.0 {
            prop_a_pairs += 1;
            match roa::prop_a_bounds_tol(&r, &rd, tol) {
                Ok(b) if b.cos_lb_ok && b.sine_le_e_r => {}
                other => failures.push(format!("pair {i}: tilt bounds {other:?}")),
            }
        }
    }
    if worst_identity > tol {
        failures.push(format!("identity residual {worst_identity:e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 5.0 {
        failures.push(format!("took {secs:.2} s"));
    }
    let detail = format!(
        "10000 pairs, identity residual {worst_identity:.1e}, max ‖E‖ {worst_jac:.12}, tilt bounds on {prop_a_pairs} pairs, {secs:.2} s"
    );
    check(
        failures.is_empty(),
        if failures.is_empty() {
            detail
        } else {
            format!("{detail}; {}", failures.join("; "))
        },
    )
}

/// Barrier gradient against central differences at interior points.
fn criterion_2() -> Outcome {
    let p = QuadParams::reference();
    let cfg = AllocationConfig::for_vehicle(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let margin = 0.1;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let f = Vector4::from_fn(|_, _| rng.random_range(cfg.f_min + margin..cfg.f_max - margin));
        let g = allocation::barrier_gradient(&f, &cfg).map_err(|e| e.to_string())?;
        let mut fd = Vector4::zeros();
        for i in 0..4 {
            let h = 1e-6 * f[i].abs().max(1.0);
            let (mut fp, mut fm) = (f, f);
            fp[i] += h;
            fm[i] -= h;
            let hp = allocation::barrier_cost(&fp, &cfg).map_err(|e| e.to_string())?;
            let hm = allocation::barrier_cost(&fm, &cfg).map_err(|e| e.to_string())?;
            fd[i] = (hp - hm) / (2.0 * h);
        }
        worst = worst.max((g - fd).norm() / g.norm().max(1e-12));
    }
    check(
        worst <= 1e-6,
        format!("100 interior points, max relative error {worst:.2e} (≤ 1e-6)"),
    )
}

/// Null-space projector annihilates the moment map.
fn criterion_3() -> Outcome {
    let p = QuadParams::reference();
    let a = allocation::moment_matrix(&p);
    let n = allocation::null_space_projector(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let xi = Vector4::from_fn(|_, _| rng.random_range(-100.0..100.0));
        worst = worst.max((a * n * xi).norm() / xi.norm());
    }
    check(
        worst <= 1e-10,
        format!("10000 vectors, max ‖A N ξ‖/‖ξ‖ {worst:.2e} (≤ 1e-10)"),
    )
}

/// Attitude Lyapunov decrease and exponential envelope from random
/// initial conditions inside the attitude basin.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let p = QuadParams::reference();
    let g = GainSet::reference();
    let (dt, horizon) = (1e-3f64, 3.0f64);
    let steps = (horizon / dt) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let (mut max_rise, mut max_env_ratio, mut max_cap_ratio) = (0.0f64, 0.0f64, 0.0f64);
    for ic in 0..50 {
        let cmd = ConstantRateCommand {
            r0: random_rotation(&mut rng, std::f64::consts::PI),
            omega: random_vector(&mut rng, 1.0),
            t0: 0.0,
        };
        let target0 = cmd.at(0.0);
        let r = target0.r * random_rotation(&mut rng, std::f64::consts::PI);
        let psi0 = so3::psi_error(&r, &target0.r);
        let bound = 2.0 * g.eta * g.k_r * (2.0 - psi0);
        let e_omega0 = random_axis(&mut rng) * (bound * rng.random_range(0.0..1.0)).sqrt();
        let omega = e_omega0 + r.transpose() * target0.r * target0.omega;
        let mut s = RigidBodyState {
            r,
            omega,
            ..RigidBodyState::default()
        };
        let e0 = AttitudeErrorState::new(&s.r, &s.omega, &target0.r, &target0.omega);
        if !roa::attitude_basin(&s, &target0, &g).inside {
            failures.push(format!("ic {ic}: sampled outside the basin"));
            continue;
        }
        let env = roa::attitude_envelope(&e0, &g).map_err(|e| e.to_string())?;
        let mut v_prev = roa::attitude_lyapunov(&e0, &g);
        for k in 0..=steps {
            let t = k as f64 * dt;
            let target = cmd.at(t);
            let ctl = attitude_control(&s, &target, &g, &p);
            let v = roa::attitude_lyapunov(&ctl.errors, &g);
            if k > 0 {
                max_rise = max_rise.max(v - v_prev);
                if v > v_prev + 1e-8 {
                    failures.push(format!("ic {ic}: V rose by {:.3e} at t = {t:.3}", v - v_prev));
                    break;
                }
            }
            v_prev = v;
            let psi = ctl.errors.psi;
            let envelope = env.mu * (-env.tau * t).exp();
            max_env_ratio = max_env_ratio.max(psi / envelope);
            max_cap_ratio = max_cap_ratio.max(psi / env.psi_a.max(f64::EPSILON));
            if psi > envelope || psi > env.psi_a + 1e-12 {
                failures.push(format!("ic {ic}: Ψ = {psi:.3e} exceeds envelope at t = {t:.3}"));
                break;
            }
            if k < steps {
                s = dynamics::step(&s, p.mass * p.gravity, &ctl.u, &p, dt).map_err(|e| e.to_string())?;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs > 30.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    let detail = format!(
        "50 ICs over {horizon} s, max step rise of V {max_rise:.1e}, max Ψ/(μe^(−τt)) {max_env_ratio:.3}, max Ψ/ψ_a {max_cap_ratio:.3}, {secs:.1} s"
    );
    check(
        failures.is_empty(),
        if failures.is_empty() {
            detail
        } else {
            format!("{detail}; {}", failures.join("; "))
        },
    )
}

/// Position-mode convergence from initial conditions inside the certified basin.
fn criterion_5() -> Outcome {
    let p = QuadParams::reference();
    let g = GainSet::reference();
    let target = PositionTarget::hold(Vec3::zeros());
    let b = 1.01 * p.mass * p.gravity;
    let psi_p = roa::max_certified_psi_p(&g, &p, b, BasinVariant::PositionFree, None)
        .map_err(|e| e.to_string())?
        .ok_or("gain condition fails at θ = 0")?;
    let (dt, horizon) = (1e-3f64, 5.0f64);
    let steps = (horizon / dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut failures = Vec::new();
    let (mut worst_psi_ratio, mut worst_final) = (0.0f64, 0.0f64);
    for ic in 0..20 {
        let mut s = RigidBodyState {
            x: random_vector(&mut rng, 0.01),
            v: random_vector(&mut rng, 0.01),
            ..RigidBodyState::default()
        };
        // R_x depends only on (x, v); ω_x also depends on R, so set R first
        let law = ForceLaw::proposed(&g, &p);
        let r_x = position_induced_attitude(&s, &target, &law, &p)
            .map_err(|e| e.to_string())?
            .r_x;
        let psi_target = 0.5 * psi_p * rng.random_range(0.0..1.0);
        s.r = r_x * so3::axis_angle(&random_axis(&mut rng), (1.0 - psi_target).acos());
        let induced = position_induced_attitude(&s, &target, &law, &p).map_err(|e| e.to_string())?;
        let psi0 = so3::psi_error(&s.r, &induced.r_x);
        let slack = 2.0 * g.eta * g.k_r * (psi_p - psi0);
        let delta = random_axis(&mut rng) * (slack * rng.random_range(0.0..1.0)).sqrt();
        s.omega = s.r.transpose() * induced.r_x * induced.omega_x + delta;
        let report = roa::position_basin(&s, &target, &g, &p, b, BasinVariant::PositionFree, None, Some(psi_p))
            .map_err(|e| e.to_string())?;
        if !report.inside {
            failures.push(format!("ic {ic}: sampled outside the basin ({report:?})"));
            continue;
        }
        let mut last = (0.0, 0.0);
        for k in 0..=steps {
            let ctl = position_control(&s, &target, &g, &p).map_err(|e| e.to_string())?;
            let psi = ctl.attitude.errors.psi;
            worst_psi_ratio = worst_psi_ratio.max(psi / psi_p);
            if psi > psi_p {
                failures.push(format!("ic {ic}: Ψ = {psi:.3e} > ψ_p at t = {:.3}", k as f64 * dt));
                break;
            }
            last = (ctl.errors.e_x.norm(), ctl.attitude.errors.e_omega.norm());
            if k < steps {
                s = dynamics::step(&s, ctl.f, &ctl.u, &p, dt).map_err(|e| e.to_string())?;
            }
        }
        worst_final = worst_final.max(last.0.max(last.1));
        if last.0 >= 1e-4 || last.1 >= 1e-4 {
            failures.push(format!(
                "ic {ic}: at t = 5 s ‖e_x‖ = {:.2e}, ‖e_ω‖ = {:.2e}",
                last.0, last.1
            ));
        }
    }
    let detail = format!(
        "20 ICs, ψ_p = {psi_p:.3e}, max Ψ/ψ_p {worst_psi_ratio:.3}, max final error {worst_final:.2e} (< 1e-4)"
    );
    check(
        failures.is_empty(),
        if failures.is_empty() {
            detail
        } else {
            format!("{detail}; {}", failures.join("; "))
        },
    )
}

/// `θ_max` against an independent root of `det Π₁(θ) = 0`.
fn criterion_6() -> Outcome {
    let p = QuadParams::reference();
    let g = GainSet::reference();
    let (a, kx, kv, m) = (g.a, g.k_x, g.k_v, p.mass);
    let pi1 = |th: f64| {
        let off = -th * (a * kx * kv + m * kx * kx / (2.0 * kv));
        Matrix2::new(
            a * kx * kx * (1.0 - th),
            off,
            off,
            a * kv * kv - th * (m * kx + a * kv * kv),
        )
    };
    let first = a * kv * kv / (a * kv * kv + m * kx);
    // det Π₁ is positive at θ = 0 and changes sign at the positivity boundary
    let (mut lo, mut hi) = (0.0, first);
    let det_hi = pi1(hi).determinant();
    let root = if det_hi > 0.0 {
        first
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if pi1(mid).determinant() > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let oracle = first.min(root);
    let got = roa::theta_max_position_free(&g, &p);
    let err = (got - oracle).abs();
    check(
        err <= 1e-12,
        format!("θ_max = {got:.15}, oracle {oracle:.15}, |Δ| = {err:.1e} (≤ 1e-12)"),
    )
}

fn flip_rows(log: &RunLog) -> impl Iterator<Item = &sim::LogRow> {
    log.phase_rows(1)
}

/// Flip maneuver with constrained allocation.
fn criterion_7(log: &RunLog, secs: f64) -> Outcome {
    let thrusts = log.rows.iter().flat_map(|r| r.thrusts.iter().copied());
    let (lo, hi) = thrusts.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), f| (l.min(f), h.max(f)));
    let att = log
        .rows
        .iter()
        .filter(|r| r.mode == geoquad::trajectory::FlightMode::Attitude);
    let (psi, e_omega) = att.fold((0.0f64, 0.0f64), |(p, w), r| (p.max(r.psi), w.max(r.e_omega)));
    let e_x = flip_rows(log).map(|r| r.e_x).fold(0.0, f64::max);
    let ok = lo > 0.0 && hi < 20.0 && psi <= 1e-6 && e_omega <= 0.05 && e_x <= 1.0 && secs < 10.0;
    check(
        ok,
        format!(
            "thrusts in [{lo:.3}, {hi:.3}] ⊂ (0, 20) N, attitude-mode max Ψ {psi:.2e} (≤ 1e-6), max ‖e_ω‖ {e_omega:.2e} (≤ 0.05), flip max ‖e_x‖ {e_x:.3} (≤ 1.0), {secs:.2} s"
        ),
    )
}

/// Without the allocation strategy the flip demands negative rotor thrust.
fn criterion_8() -> Outcome {
    let cfg =
        ScenarioConfig::preset_with("flip_full", &["strategy_enabled=false".into()]).map_err(|e| e.to_string())?;
    let log = sim::run(&cfg).map_err(|e| e.to_string())?;
    let lo = flip_rows(&log)
        .flat_map(|r| r.thrusts.iter().copied())
        .fold(f64::INFINITY, f64::min);
    check(lo < 0.0, format!("strategy off: min flip thrust {lo:.3} N (< 0)"))
}

fn deviations(log: &RunLog) -> (f64, f64, f64) {
    let rows: Vec<_> = flip_rows(log).collect();
    let dx1 = rows.iter().map(|r| (r.x[0] - 2.0).abs()).fold(0.0, f64::max);
    let dx3 = rows.iter().map(|r| (r.x[2] - 5.0).abs()).fold(0.0, f64::max);
    let mean3 = rows.iter().map(|r| r.x[2] - 5.0).sum::<f64>() / rows.len() as f64;
    (dx1, dx3, mean3)
}

/// The secondary thrust task keeps the vehicle near its hold point.
fn criterion_9(with_fp: &RunLog) -> Outcome {
    let cfg = ScenarioConfig::preset_with("flip_full", &["fp_enabled=false".into()]).map_err(|e| e.to_string())?;
    let without = sim::run(&cfg).map_err(|e| e.to_string())?;
    let (on1, _, on_mean) = deviations(with_fp);
    let (off1, off3, _) = deviations(&without);
    let ok = off1 > 1.0 && off3 > 1.2 && on1 < 1.0 && on_mean.abs() <= 0.1;
    check(
        ok,
        format!(
            "f_p off: max |Δx₁| {off1:.3} (> 1.0), max |Δx₃| {off3:.3} (> 1.2); f_p on: max |Δx₁| {on1:.3} (< 1.0), mean Δx₃ {on_mean:+.3} (|·| ≤ 0.1)"
        ),
    )
}

/// RMS effort is exact on constant signals, and at matched effort the
/// proposed controller settles faster than the benchmark.
fn criterion_10() -> Outcome {
    let hover = ScenarioConfig::preset_with("hover", &["t_final=0.5".into()]).map_err(|e| e.to_string())?;
    let mut log = sim::run(&hover).map_err(|e| e.to_string())?;
    let c = Vector4::new(1.0, 2.0, 3.0, 4.0);
    for r in &mut log.rows {
        r.thrusts = c;
    }
    let rms = sim::rms_effort(&log, 0.5);
    let exact = 30f64.sqrt();
    let rms_err = (rms - exact).abs() / exact;

    let proposed = ScenarioConfig::preset("step90").map_err(|e| e.to_string())?;
    let bench = ScenarioConfig {
        controller: ControllerKind::Benchmark,
        ..proposed.clone()
    };
    let verbatim = sim::compare(&proposed, &bench).map_err(|e| e.to_string())?;
    let matched = sim::compare_matched_rms(&proposed, &bench).map_err(|e| e.to_string())?;
    let rms_match = (matched.a.rms_effort - matched.b.rms_effort).abs() / matched.a.rms_effort;
    let ok = rms_err <= 1e-12 && rms_match <= 1e-6 && matched.faster_settling == Winner::A;
    check(
        ok,
        format!(
            "constant-signal RMS error {rms_err:.1e}; matched RMS {:.3} N (scale {:.4}, mismatch {rms_match:.1e}): 2% settling proposed {:.3} s vs benchmark {:.3} s; verbatim gains: {:.3} s ({:.2} N) vs {:.3} s ({:.2} N)",
            matched.a.rms_effort,
            matched.b_attitude_scale.unwrap_or(1.0),
            matched.a.settling_time_psi,
            matched.b.settling_time_psi,
            verbatim.a.settling_time_psi,
            verbatim.a.rms_effort,
            verbatim.b.settling_time_psi,
            verbatim.b.rms_effort,
        ),
    )
}

/// Identical configurations produce byte-identical logs.
fn criterion_11(first: &RunLog, cfg: &ScenarioConfig) -> Outcome {
    let again = sim::run(cfg).map_err(|e| e.to_string())?;
    let a = first.to_csv_string().map_err(|e| e.to_string())?;
    let b = again.to_csv_string().map_err(|e| e.to_string())?;
    check(
        a == b,
        format!("two flip runs, {} CSV bytes, identical: {}", a.len(), a == b),
    )
}

fn main() -> ExitCode {
    let flip_cfg = ScenarioConfig::preset("flip_full").expect("flip preset");
    let start = Instant::now();
    let flip = sim::run(&flip_cfg);
    let flip_secs = start.elapsed().as_secs_f64();

    let mut results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3()),
        (4, criterion_4()),
        (5, criterion_5()),
        (6, criterion_6()),
    ];
    match &flip {
        Ok(log) => {
            results.push((7, criterion_7(log, flip_secs)));
            results.push((8, criterion_8()));
            results.push((9, criterion_9(log)));
            results.push((10, criterion_10()));
            results.push((11, criterion_11(log, &flip_cfg)));
        }
        Err(e) => {
            for n in [7, 8, 9] {
                results.push((n, Err(format!("flip run failed: {e}"))));
            }
            results.push((10, criterion_10()));
            results.push((11, Err(format!("flip run failed: {e}"))));
        }
    }

    let mut failed = 0;
    for (n, outcome) in &results {
        match outcome {
            Ok(d) => println!("criterion {n:>2}: PASS — {d}"),
            Err(d) => {
                failed += 1;
                println!("criterion {n:>2}: FAIL — {d}");
            }
        }
    }
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
