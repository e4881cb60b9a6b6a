//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout; exits nonzero if any fail.

use std::f64::consts::{LN_2, PI};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use inclusionlab::classify::{bj_run_profile, bj_verdict, BjVerdict};
use inclusionlab::lyapunov::{random_switching_exponent, sample_trial, simulate};
use inclusionlab::spectral::{
    chaos_feasibility, cojsr_bounds, growth_curve, fit_exponent, jsr_bounds, periodic_stability_check,
    FeasibilityVerdict, GrowthStrategy, StabilityVerdict,
};
use inclusionlab::synth::{
    line_angle, replay_fixed_schedule, synthesize_rotation, synthesize_uniform, synthesize_zero_exponent,
    verify_pointwise_chaotic, verify_uniform_chaotic, DriveSpec, RotationCaps, RotationSynthInput, UniformOptions,
};
use inclusionlab::{
    co_norm, co_spectral_radius, operator_norm, spectral_radius, word_product, LawProgram, Mat, SystemSpec, Word,
};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    check(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.2}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn w(s: &[u32]) -> Word {
    Word::new(s.to_vec()).unwrap()
}

fn diag_pair() -> SystemSpec {
    SystemSpec::new(vec![Mat::diag(&[2.0, 0.5]), Mat::diag(&[3.0, 1.0 / 3.0])]).unwrap()
}

fn scalar_pair() -> SystemSpec {
    SystemSpec::new(vec![Mat::diag(&[0.5]), Mat::diag(&[2.0])]).unwrap()
}

/// 100 pairs of 2×2 matrices with entries in [-1, 1] and condition number below 50.
fn corpus() -> Vec<SystemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut out = Vec::with_capacity(100);
    while out.len() < 100 {
        let mut draw = || {
            let m = Mat::from_row_major(2, (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
            let c = co_norm(&m);
            (c > 0.0 && operator_norm(&m) / c < 50.0).then_some(m)
        };
        if let (Some(a), Some(b)) = (draw(), draw()) {
            out.push(SystemSpec::new(vec![a, b]).unwrap());
        }
    }
    out
}

fn c1_diagonal_exactness() -> Outcome {
    let t0 = Instant::now();
    let sys = diag_pair();
    let b = jsr_bounds(&sys, 3).map_err(|e| e.to_string())?;
    let c = cojsr_bounds(&sys, 3).map_err(|e| e.to_string())?;
    let el = t0.elapsed();
    check((b.best_lower - 3.0).abs() <= 1e-9, format!("best_lower {}", b.best_lower))?;
    check((b.best_upper - 3.0).abs() <= 1e-9, format!("best_upper {}", b.best_upper))?;
    check((c.best_lower - 1.0 / 3.0).abs() <= 1e-9, format!("co best_lower {}", c.best_lower))?;
    check((c.best_upper - 1.0 / 3.0).abs() <= 1e-9, format!("co best_upper {}", c.best_upper))?;
    within(el, 1.0)?;
    Ok(format!("JSR {} / {}, co-JSR {} / {} in {:.3}s", b.best_lower, b.best_upper, c.best_lower, c.best_upper, el.as_secs_f64()))
}

fn c2_sandwich() -> Outcome {
    let t0 = Instant::now();
    let mut rows = 0;
    for (i, sys) in corpus().iter().enumerate() {
        let t = jsr_bounds(sys, 8).map_err(|e| e.to_string())?;
        check(t.completed_depth == 8, format!("system {i} stopped at depth {}", t.completed_depth))?;
        for r in &t.rows {
            rows += 1;
            check(r.lower <= r.upper + 1e-9, format!("system {i} row {}: {} > {}", r.n, r.lower, r.upper))?;
        }
        for pair in t.rows.windows(2) {
            check(
                pair[1].best_upper <= pair[0].best_upper,
                format!("system {i}: best_upper rises at n={}", pair[1].n),
            )?;
        }
    }
    let el = t0.elapsed();
    within(el, 30.0)?;
    Ok(format!("{rows} rows over 100 systems in {:.2}s", el.as_secs_f64()))
}

/// Least repeat counts for the scalar pair {1/2, 2} in exact integer
/// arithmetic: `c` is the exponent of 2 in the running product.
fn scalar_counts(k_max: u64) -> Vec<(u64, u64)> {
    let mut c: i64 = 0;
    let mut out = Vec::new();
    for k in 1..=k_max {
        // least ℓ with 2^(c-ℓ) < 1/k, i.e. 2^(ℓ-c) > k
        let mut ell = 0u64;
        while !(ell as i64 - c > 0 && (1u128 << (ell as i64 - c)) > k as u128) {
            ell += 1;
        }
        c -= ell as i64;
        // least L with 2^(c+L) > k
        let mut big_l = 0u64;
        while !(c + big_l as i64 > 0 && (1u128 << (c + big_l as i64)) > k as u128) {
            big_l += 1;
        }
        c += big_l as i64;
        out.push((ell, big_l));
    }
    out
}

fn c3_uniform_scalar() -> Outcome {
    let t0 = Instant::now();
    let sys = scalar_pair();
    let syn = synthesize_uniform(&sys, &w(&[1]), &w(&[2]), &[], 10, &UniformOptions::default())
        .map_err(|e| e.to_string())?;
    let cert = &syn.certificate;
    let expected = scalar_counts(10);
    check(cert.stages.len() == 10, "stage count")?;
    let got: Vec<(u64, u64)> = cert.stages.iter().map(|s| (s.ell_k, s.big_l_k)).collect();
    check(got == expected, format!("counts {got:?} vs closed form {expected:?}"))?;
    let horizon = cert.stages.last().unwrap().cumulative_length;
    let ledger = replay_fixed_schedule(&sys, &syn.law, horizon).map_err(|e| e.to_string())?;
    for st in &cert.stages {
        let k = st.k as f64;
        let norm = ledger[st.contract_end as usize - 1].log_norm.exp();
        let conorm = ledger[st.cumulative_length as usize - 1].log_conorm.exp();
        check((norm - st.norm_after_contract).abs() <= 1e-8 * norm, format!("stage {} norm replay", st.k))?;
        check((conorm - st.conorm_after_expand).abs() <= 1e-8 * conorm, format!("stage {} co-norm replay", st.k))?;
        check(norm < 1.0 / k && conorm > k, format!("stage {} inequalities", st.k))?;
    }
    let v = verify_uniform_chaotic(&sys, &syn.law, horizon, 0.1, 10.0).map_err(|e| e.to_string())?;
    check(v.pass, "verify_uniform_chaotic at (0.1, 10) failed")?;
    let el = t0.elapsed();
    within(el, 1.0)?;
    Ok(format!("ℓ,L = {got:?}; replay and verification ok in {:.3}s", el.as_secs_f64()))
}

fn c4_dyadic_ledger() -> Outcome {
    let sys = scalar_pair();
    let law = LawProgram::geometric(vec![1, 2], 2, 2).map_err(|e| e.to_string())?;
    let h = 1u64 << 12;
    let ledger = replay_fixed_schedule(&sys, &law, h).map_err(|e| e.to_string())?;
    let log2 = |n: u64| ledger[n as usize - 1].log_norm / LN_2;
    // blocks of length 2, 4, 8, … alternating 1/2 and 2
    let (mut end, mut len, mut exp, mut sign) = (0u64, 2u64, 0i64, -1i64);
    let mut blocks = 0;
    while end + len <= h {
        end += len;
        exp += sign * len as i64;
        check((log2(end) - exp as f64).abs() < 1e-9, format!("block end {end}: {} vs {exp}", log2(end)))?;
        if blocks >= 2 {
            let (lo, hi) = (1..=end).map(log2).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            check(lo <= -((end / 3) as f64) + 1e-9 || hi >= (end / 3) as f64 - 1e-9, format!("no ⌊n/3⌋ excursion by {end}"))?;
        }
        len *= 2;
        sign = -sign;
        blocks += 1;
    }
    let first_min = (1..=h).find(|&n| log2(n) <= -2.0 + 1e-12);
    let first_max = (1..=h).find(|&n| log2(n) >= 2.0 - 1e-12);
    check(first_min == Some(2), format!("min log2 ≤ -2 first at {first_min:?}"))?;
    check(first_max == Some(6), format!("max log2 ≥ 2 first at {first_max:?}"))?;
    Ok(format!("{blocks} blocks replayed exactly; min ≤ -2 at n=2, max ≥ 2 at n=6"))
}

fn remark_system() -> SystemSpec {
    let alpha = (5f64.sqrt() - 1.0) / 2.0;
    SystemSpec::new(vec![
        Mat::rotation(-2.0 * PI * alpha),
        Mat::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap(),
        Mat::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.5]]).unwrap(),
    ])
    .unwrap()
}

fn c5_rotation() -> Outcome {
    let t0 = Instant::now();
    let sys = remark_system();
    // S_2·S_3 = [[2, 1/2], [1, 1/2]]: dominant eigenvalue (5/2 + √17/2)/2 with eigenvector (1/2, λ-2)
    let lam = (2.5 + (6.25f64 - 2.0).sqrt()) / 2.0;
    let v = [0.5, lam - 2.0];
    let n = v[0].hypot(v[1]);
    let ybar = vec![v[0] / n, v[1] / n];
    let input = RotationSynthInput {
        rot_index: 1,
        stable: DriveSpec { x: vec![0.0, 1.0], law: LawProgram::periodic(vec![], vec![3, 1, 1, 1, 3]).unwrap() },
        divergent: DriveSpec { x: ybar.clone(), law: LawProgram::periodic(vec![], vec![3, 2]).unwrap() },
        u: vec![1.0, 0.0],
        eps_schedule: vec![1e-3, 5e-4, 2.5e-4],
        caps: RotationCaps { align_cap: 1_000_000, drive_cap: 10_000, q_max: 64 },
    };
    let out = synthesize_rotation(&sys, &input, 3).map_err(|e| e.to_string())?;
    let last = out.stages.last().unwrap().max_index;
    let rec = simulate(&sys, &out.law, &input.u, last).map_err(|e| e.to_string())?;
    let at = |n: u64| rec.log_norms[n as usize - 1].exp();
    let mut alignments = 0;
    for st in &out.stages {
        check(st.min_norm < 1e-3 && st.max_norm > 1e3, format!("stage {} extremes {} {}", st.k, st.min_norm, st.max_norm))?;
        check((at(st.min_index) - st.min_norm).abs() <= 1e-9 * st.min_norm, "min replay")?;
        check((at(st.max_index) - st.max_norm).abs() <= 1e-9 * st.max_norm, "max replay")?;
        check(st.drive_down <= 10_000 && st.drive_up <= 10_000, "drive cap")?;
        for (al, dir) in [(&st.align_down, &input.stable.x), (&st.align_up, &ybar)] {
            check(al.repeats <= 1_000_000, "align cap")?;
            let state = if al.end_index == 0 {
                input.u.clone()
            } else {
                simulate(&sys, &out.law, &input.u, al.end_index).map_err(|e| e.to_string())?.final_state().to_vec()
            };
            let angle = line_angle(&state, dir);
            check(angle <= al.delta, format!("stage {} alignment {angle} > {}", st.k, al.delta))?;
            alignments += 1;
        }
    }
    let el = t0.elapsed();
    within(el, 60.0)?;
    let mins: Vec<String> = out.stages.iter().map(|s| format!("{:.2e}/{:.2e}", s.min_norm, s.max_norm)).collect();
    Ok(format!(
        "3 stages min/max {}; {alignments} alignments re-verified; law length {last}; {:.2}s",
        mins.join(", "),
        el.as_secs_f64()
    ))
}

fn c6_zero_exponent() -> Outcome {
    let sys = scalar_pair();
    let z = synthesize_zero_exponent(&sys, &w(&[1]), &w(&[2]), &[1.0], (0.25, 4.0), 10_000).map_err(|e| e.to_string())?;
    let rec = simulate(&sys, &z.law, &[1.0], 10_000).map_err(|e| e.to_string())?;
    let first = z.excursion.first_crossing.ok_or("no crossing")? as usize;
    let (lo, hi) = rec.log_norms[first.saturating_sub(1)..]
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    check(lo >= (0.125f64).ln() - 1e-12 && hi <= 8f64.ln() + 1e-12, format!("norms span [{}, {}]", lo.exp(), hi.exp()))?;
    let lam = rec.log_norms[9_999] / 10_000.0;
    check(lam.abs() < 3e-4, format!("|λ_10⁴| = {}", lam.abs()))?;
    check(lam.abs() <= 16f64.ln() / 10_000.0, "band bound log(16)/n")?;
    Ok(format!("norms in [{}, {}] after crossing at {first}; |λ_10⁴| = {:.3e}", lo.exp(), hi.exp(), lam.abs()))
}

/// Rotation about a unit axis (Rodrigues).
fn rotation3(axis: [f64; 3], t: f64) -> Mat {
    let [x, y, z] = axis;
    let (s, c) = t.sin_cos();
    let k = 1.0 - c;
    Mat::from_rows(&[
        vec![c + x * x * k, x * y * k - z * s, x * z * k + y * s],
        vec![y * x * k + z * s, c + y * y * k, y * z * k - x * s],
        vec![z * x * k - y * s, z * y * k + x * s, c + z * z * k],
    ])
    .unwrap()
}

fn c7_orthogonal(bin: &Path) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut systems = vec![
        SystemSpec::new(vec![Mat::rotation(0.7), Mat::diag(&[1.0, -1.0]), Mat::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()])
            .unwrap(),
    ];
    for _ in 0..10 {
        let mut axis = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0f64)];
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        axis.iter_mut().for_each(|a| *a /= n);
        let r = rotation3(axis, rng.random_range(0.0..2.0 * PI));
        systems.push(SystemSpec::new(vec![r, Mat::diag(&[1.0, -1.0, 1.0])]).unwrap());
    }
    for (i, sys) in systems.iter().enumerate() {
        match chaos_feasibility(sys, 4).map_err(|e| e.to_string())? {
            FeasibilityVerdict::InfeasibleCertified { n, value, .. } => {
                check(n == 1 && (value - 1.0).abs() <= 1e-12, format!("system {i}: n={n} value={value}"))?;
            }
            other => return Err(format!("system {i}: {other:?}")),
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("ortho.json");
    std::fs::write(&path, r#"{"schema_version":1,"dim":2,"matrices":[[[0.6,-0.8],[0.8,0.6]],[[1,0],[0,-1]]]}"#)
        .map_err(|e| e.to_string())?;
    let out = Command::new(bin).args(["feasibility", "--in"]).arg(&path).output().map_err(|e| e.to_string())?;
    check(out.status.code() == Some(2), format!("CLI exit {:?}", out.status.code()))?;
    let text = String::from_utf8_lossy(&out.stdout);
    check(text.contains("infeasible_certified"), "CLI verdict")?;
    Ok(format!("{} systems certified at n=1; CLI exit 2", systems.len()))
}

fn c8_periodic_regression() -> Outcome {
    let sys = scalar_pair();
    let law = LawProgram::periodic(vec![], vec![1, 2]).unwrap();
    let v = verify_uniform_chaotic(&sys, &law, 10_000, 0.4, 1.1).map_err(|e| e.to_string())?;
    check(!v.pass, "verification passed")?;
    let ledger = replay_fixed_schedule(&sys, &law, 10_000).map_err(|e| e.to_string())?;
    let ok = ledger.iter().all(|e| {
        let (a, b) = (e.log_norm.exp(), e.log_conorm.exp());
        (0.5 - 1e-12..=1.0 + 1e-12).contains(&a) && (0.5 - 1e-12..=1.0 + 1e-12).contains(&b)
    });
    check(ok, "ledger leaves [1/2, 1]")?;
    Ok(format!("fails as required; min {} max {}", v.min_norm.value, v.max_value.value))
}

fn c9_monte_carlo() -> Outcome {
    let t0 = Instant::now();
    let sys = diag_pair();
    let (trials, horizon, seed) = (100_000u64, 50u64, 20_240_601u64);
    let mc = random_switching_exponent(&sys, &[0.5, 0.5], trials, horizon, seed).map_err(|e| e.to_string())?;
    let target = (2f64.ln() + 3f64.ln()) / 2.0;
    check((mc.mean - target).abs() <= 0.05, format!("mean {} vs {target}", mc.mean))?;
    let mut passes = 0u64;
    for t in 0..trials {
        let (law, x0) = sample_trial(2, 2, &[0.5, 0.5], horizon, seed, t).map_err(|e| e.to_string())?;
        if verify_pointwise_chaotic(&sys, &law, &x0, horizon, 1e-3, 1e3).map_err(|e| e.to_string())?.pass {
            passes += 1;
        }
    }
    check(passes == 0, format!("{passes} sampled laws passed the pointwise check"))?;
    let el = t0.elapsed();
    within(el, 60.0)?;
    Ok(format!("mean {:.4} (target {target:.4}, se {:.1e}); 0/{trials} pointwise passes; {:.2}s", mc.mean, mc.std_error, el.as_secs_f64()))
}

fn shear_block_system(c: f64) -> (SystemSpec, [[f64; 4]; 2]) {
    let f = [[1.0, 1.0, 0.0, 1.0], [1.0, 0.0, 1.0, 1.0]];
    let block = |m: &[f64; 4]| {
        let [a, b, cc, d] = m.map(|x| x * c);
        Mat::from_rows(&[
            vec![a, b, a, b],
            vec![cc, d, cc, d],
            vec![0.0, 0.0, a, b],
            vec![0.0, 0.0, cc, d],
        ])
        .unwrap()
    };
    (SystemSpec::new(vec![block(&f[0]), block(&f[1])]).unwrap(), f)
}

fn c10_block_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst: f64 = 0.0;
    for (c, label) in [(1.0, "unit"), (2.0 / (1.0 + 5f64.sqrt()), "1/φ")] {
        let (sys, f) = shear_block_system(c);
        for _ in 0..20 {
            let len = rng.random_range(1..=64usize);
            let word: Vec<u32> = (0..len).map(|_| rng.random_range(1..=2u32)).collect();
            // P = c^n F_{w_n}⋯F_{w_1}, 2×2 by hand
            let mut p = [1.0, 0.0, 0.0, 1.0];
            for &s in &word {
                let m = f[s as usize - 1].map(|x| x * c);
                p = [
                    m[0] * p[0] + m[1] * p[2],
                    m[0] * p[1] + m[1] * p[3],
                    m[2] * p[0] + m[3] * p[2],
                    m[2] * p[1] + m[3] * p[3],
                ];
            }
            let n = len as f64;
            let expect = [
                [p[0], p[1], n * p[0], n * p[1]],
                [p[2], p[3], n * p[2], n * p[3]],
                [0.0, 0.0, p[0], p[1]],
                [0.0, 0.0, p[2], p[3]],
            ];
            let got = word_product(&sys, &Word::new(word).unwrap()).map_err(|e| e.to_string())?;
            let scale = expect.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
            let err = (0..4)
                .flat_map(|i| (0..4).map(move |j| (i, j)))
                .map(|(i, j)| (got.get(i, j) - expect[i][j]).powi(2))
                .sum::<f64>()
                .sqrt()
                / scale;
            worst = worst.max(err);
            check(err <= 1e-9, format!("{label}: relative error {err}"))?;
        }
    }
    // unit shears grow like φⁿ, so the polynomial fit is taken on the 1/φ-scaled system
    let (sys, _) = shear_block_system(2.0 / (1.0 + 5f64.sqrt()));
    let curve = growth_curve(&sys, 64).map_err(|e| e.to_string())?;
    check(curve.strategy == GrowthStrategy::Dominance, "expected dominance strategy")?;
    check(curve.completed_depth == 64, format!("growth stopped at {}", curve.completed_depth))?;
    let fit = fit_exponent(&curve.points, 16, 64).ok_or("no fit")?;
    check((fit.slope - 1.0).abs() <= 0.1, format!("fitted exponent {}", fit.slope))?;
    Ok(format!("40 words, worst relative error {worst:.1e}; exponent over [16,64] = {:.4}", fit.slope))
}

fn c11_scaled_rotations() -> Outcome {
    let sys = SystemSpec::new(vec![Mat::rotation(1.0).scale(0.99), Mat::rotation(2.0).scale(0.99)]).unwrap();
    let rep = periodic_stability_check(&sys, 6).map_err(|e| e.to_string())?;
    check(
        matches!(rep.verdict, StabilityVerdict::AllStableUpTo { length: 6 }),
        format!("verdict {:?}", rep.verdict),
    )?;
    check((rep.max_ratio - 0.99).abs() <= 1e-12, format!("max ratio {}", rep.max_ratio))?;
    let curve = growth_curve(&sys, 12).map_err(|e| e.to_string())?;
    for p in &curve.points {
        check((p.g - 0.99f64.powi(p.n as i32)).abs() <= 1e-12, format!("g_{} = {}", p.n, p.g))?;
    }
    check(curve.points.windows(2).all(|q| q[1].g < q[0].g), "growth curve not decreasing")?;
    Ok(format!("AllStableUpTo(6), max ratio {}; g_n = 0.99ⁿ decreasing to n=12", rep.max_ratio))
}

fn c12_classification() -> Outcome {
    let h = 1u64 << 14;
    let constant = bj_verdict(&LawProgram::constant(1).unwrap(), h).map_err(|e| e.to_string())?;
    check(constant == BjVerdict::NonchaoticCertified, format!("constant: {constant:?}"))?;
    let periodic = bj_verdict(&LawProgram::periodic(vec![], vec![1, 2]).unwrap(), h).map_err(|e| e.to_string())?;
    check(matches!(periodic, BjVerdict::ChaoticCertified { .. }), format!("period (1,2): {periodic:?}"))?;
    let dyadic = LawProgram::geometric(vec![1, 2], 2, 2).unwrap();
    let v = bj_verdict(&dyadic, h).map_err(|e| e.to_string())?;
    match &v {
        BjVerdict::CandidateNonchaotic { growing_symbols, .. } => {
            check(growing_symbols == &vec![1, 2], format!("growing {growing_symbols:?}"))?
        }
        other => return Err(format!("dyadic law: {other:?}")),
    }
    let profile = bj_run_profile(&dyadic, h).map_err(|e| e.to_string())?;
    for s in &profile.symbols {
        check(s.growing, format!("symbol {} not growing", s.symbol))?;
        let recs: Vec<u64> = s.envelope.iter().map(|r| r.record).collect();
        check(recs.windows(2).all(|p| p[1] >= p[0]), format!("symbol {} envelope {recs:?}", s.symbol))?;
    }
    Ok("constant → nonchaotic, period (1,2) → chaotic, dyadic law → candidate nonchaotic (1, 2 growing)".into())
}

fn c13_duality() -> Outcome {
    let mut count = 0;
    let mut worst: f64 = 0.0;
    for sys in corpus() {
        for a in sys.matrices() {
            let inv = a.inverse().map_err(|e| e.to_string())?;
            let (co, norm) = (co_norm(a), operator_norm(a));
            let diff = (co - 1.0 / operator_norm(&inv)).abs();
            worst = worst.max(diff);
            check(diff <= 1e-9, format!("duality gap {diff}"))?;
            let cr = co_spectral_radius(a, 1e-10).map_err(|e| e.to_string())?;
            let r = spectral_radius(a).map_err(|e| e.to_string())?;
            let slack = 1e-12 * norm;
            check(
                co <= cr + slack && cr <= r + slack && r <= norm + slack,
                format!("chain {co} ≤ {cr} ≤ {r} ≤ {norm} broken"),
            )?;
            count += 1;
        }
    }
    Ok(format!("{count} matrices; worst duality gap {worst:.1e}"))
}

fn c14_determinism(bin: &Path) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let sys = dir.path().join("sys.json");
    std::fs::write(&sys, r#"{"schema_version":1,"dim":2,"matrices":[[[1,1],[0,1]],[[1,0],[1,1]],[[0.5,0.2],[-0.3,1.1]]]}"#)
        .map_err(|e| e.to_string())?;
    let runs: Vec<Vec<String>> = vec![
        vec!["analyze".into(), "--depth".into(), "9".into()],
        vec!["feasibility".into(), "--depth".into(), "6".into()],
        vec!["growth".into(), "--depth".into(), "10".into()],
        vec!["simulate".into(), "--weights".into(), "1,2,1".into(), "--trials".into(), "500".into(), "--horizon".into(), "64".into(), "--seed".into(), "9".into()],
    ];
    for args in &runs {
        let mut outputs = Vec::new();
        for threads in ["1", "8", "8", "1"] {
            let out = Command::new(bin)
                .args(args)
                .arg("--in")
                .arg(&sys)
                .env("INCLUSIONLAB_THREADS", threads)
                .output()
                .map_err(|e| e.to_string())?;
            check(out.status.success(), format!("{} exited {:?}", args[0], out.status.code()))?;
            outputs.push(out.stdout);
        }
        check(outputs.windows(2).all(|p| p[0] == p[1]), format!("{} output differs across runs", args[0]))?;
    }
    Ok(format!("{} commands byte-identical over threads 1, 8, 8, 1", runs.len()))
}

fn main() {
    let bin = Path::new(env!("CARGO_BIN_EXE_inclusionlab"));
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("JSR/co-JSR exactness on diagonal systems", Box::new(c1_diagonal_exactness)),
        ("Berger–Wang sandwich on a seeded corpus", Box::new(c2_sandwich)),
        ("uniform construction on {1/2, 2}", Box::new(c3_uniform_scalar)),
        ("dyadic block law ledger", Box::new(c4_dyadic_ledger)),
        ("rotation construction on the golden-angle system", Box::new(c5_rotation)),
        ("zero-exponent law on {1/2, 2}", Box::new(c6_zero_exponent)),
        ("orthogonal generators are certified infeasible", Box::new(move || c7_orthogonal(bin))),
        ("period-(1,2) law is not uniformly chaotic", Box::new(c8_periodic_regression)),
        ("Monte Carlo random switching exponent", Box::new(c9_monte_carlo)),
        ("4×4 shear block identity and linear growth", Box::new(c10_block_identity)),
        ("scaled rotations: stable and decreasing growth", Box::new(c11_scaled_rotations)),
        ("Balde–Jouan classification", Box::new(c12_classification)),
        ("co-norm duality and ordering chain", Box::new(c13_duality)),
        ("CLI determinism across thread counts", Box::new(move || c14_determinism(bin))),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("acceptance {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("acceptance {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
