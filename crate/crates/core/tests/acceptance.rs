//! End-to-end acceptance checks. Prints one `PASS`/`FAIL` line per criterion
//! and exits nonzero if any criterion fails.

use std::time::Instant;

use peakon::collision::{
    annihilator_defect_fd, collision_bound_2d, d1_gap_rate, integrability_defect_3d, predict, Outcome,
};
use peakon::geometry::{curvature_eigenvalues, gauss_curvature_2d, riemann_3d, sectional_curvature_3d};
use peakon::geometry::{gauss_curvature_fd, riemann_fd};
use peakon::invariants::{drift_of, hhat, hhat_from_integrals};
use peakon::model::eom_rhs;
use peakon::par::Exec;
use peakon::scan::{run_scan, sample_states, ScanConfig, ScanFilter};
use peakon::{integrate, IntegratorOptions, PeakonState, Status, TangentVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Samples with a smaller adjacent gap are left out of the drift measurement.
const RESOLVED_GAP: f64 = 1e-4;

struct Check {
    ok: bool,
    detail: String,
}

fn pass(ok: bool, detail: impl Into<String>) -> Check {
    Check { ok, detail: detail.into() }
}

fn random_state(rng: &mut ChaCha8Rng, n: usize, gaps: (f64, f64), moms: (f64, f64)) -> PeakonState {
    let mut q = vec![0.0; n];
    for i in (0..n - 1).rev() {
        q[i] = q[i + 1] + rng.random_range(gaps.0..=gaps.1);
    }
    let p = (0..n)
        .map(|_| {
            let m = rng.random_range(moms.0..=moms.1);
            if rng.random_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect();
    PeakonState::new(q, p).unwrap()
}

fn random_q(rng: &mut ChaCha8Rng, n: usize, gaps: (f64, f64)) -> Vec<f64> {
    random_state(rng, n, gaps, (1.0, 1.0)).q().to_vec()
}

fn conservation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let opts = IntegratorOptions::default().with_horizon(10.0).with_sample_dt(0.05);
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for _ in 0..100 {
            let s = random_state(&mut rng, n, (0.2, 3.0), (0.2, 2.0));
            let traj = integrate(&s, &opts).unwrap();
            if traj.status == Status::StepFailure {
                return pass(false, format!("step failure from {s:?}"));
            }
            let resolved: Vec<_> =
                traj.samples.iter().filter(|x| x.state.min_gap() >= RESOLVED_GAP).map(|x| x.invariants).collect();
            let d = drift_of(&resolved).unwrap();
            if n == 3 && d.h2.is_none() {
                return pass(false, "missing H2 drift");
            }
            worst = worst.max(d.max());
        }
    }
    pass(worst < 1e-8, format!("max relative drift {worst:.3e} (< 1e-8) while gaps >= {RESOLVED_GAP:e}"))
}

fn scan_2d() -> (Check, Check) {
    let cfg = ScanConfig { n: 2, samples: 200, seed: 7, escape_horizon: 50.0, ..Default::default() };
    let report = run_scan(&cfg, Exec::default()).unwrap();
    let contradictions = report.contradictions();
    let c2 = pass(
        contradictions == 0,
        format!("{} states, {} collisions, {contradictions} contradictions", report.rows.len(), report.collisions()),
    );

    let mut late = 0;
    let mut checked = 0;
    for row in &report.rows {
        if let (Some(tc), Some(tb)) = (row.collision_time, row.verdict.bound_time) {
            checked += 1;
            if tc > tb + 1e-6 {
                late += 1;
            }
        }
    }
    let spot = PeakonState::new(vec![1.0, 0.0], vec![-1.0, 1.0]).unwrap();
    let t_star = collision_bound_2d(&spot).unwrap();
    let traj = integrate(&spot, &IntegratorOptions::default().with_horizon(2.0 * t_star)).unwrap();
    let t_event = traj.first_event().map(|e| e.t_hi).unwrap_or(f64::INFINITY);
    let ok = late == 0 && checked > 0 && (t_star - 3.2868).abs() < 1e-4 && t_event <= t_star;
    let c3 = pass(
        ok,
        format!("{checked} collisions all before t*, spot t* = {t_star:.6} (3.2868), simulated event at {t_event:.6}"),
    );
    (c2, c3)
}

fn curvature_vs_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let q2 = random_q(&mut rng, 2, (0.5, 5.0));
        let exact = gauss_curvature_2d(&q2).unwrap();
        let fd = gauss_curvature_fd(&q2).unwrap();
        worst = worst.max((exact - fd).abs() / exact.abs().max(1e-300));

        let q3 = random_q(&mut rng, 3, (0.5, 5.0));
        let exact = riemann_3d(&q3).unwrap().as_array();
        let fd = riemann_fd(&q3).unwrap().as_array();
        let scale = exact.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        for (a, b) in exact.iter().zip(&fd) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    pass(worst < 1e-5, format!("max relative deviation {worst:.3e} over 50 + 50 points (< 1e-5)"))
}

fn trichotomy() -> Check {
    let k = |z: f64| gauss_curvature_2d(&[z, 0.0]).unwrap();
    let at_ln2 = k(2f64.ln());
    let near = k(1e-8);
    let mut signs_ok = true;
    for i in 1..200 {
        let below = 2f64.ln() * i as f64 / 200.0;
        let above = 2f64.ln() + 0.05 * i as f64;
        signs_ok &= k(below) < 0.0 && k(above) > 0.0;
    }
    pass(
        at_ln2.abs() < 1e-12 && (near + 0.25).abs() < 1e-6 && signs_ok,
        format!("kappa(ln 2) = {at_ln2:.2e}, kappa(1e-8) = {near:.9}, signs correct: {signs_ok}"),
    )
}

fn plane(rng: &mut ChaCha8Rng) -> (TangentVector, TangentVector) {
    let mut v = || TangentVector((0..3).map(|_| rng.random_range(-1.0..1.0)).collect());
    (v(), v())
}

fn eigen_bounds() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let gaps: Vec<f64> = (1..=20).map(|k| 0.05 + 9.95 * k as f64 / 20.0).collect();
    let mut max_lambda = f64::NEG_INFINITY;
    let mut max_outer = f64::NEG_INFINITY;
    let mut sectional_excess = f64::NEG_INFINITY;
    let mut planes = 0;
    for (i, &a) in gaps.iter().enumerate() {
        for (j, &b) in gaps.iter().enumerate() {
            let q = [a + b, b, 0.0];
            let ev = curvature_eigenvalues(&q).unwrap();
            max_lambda = max_lambda.max(ev.max());
            max_outer = max_outer.max(ev.lambda1.max(ev.lambda3));
            if (i + j) % 4 == 0 {
                for _ in 0..1000 {
                    let (x, y) = plane(&mut rng);
                    let Ok(k) = sectional_curvature_3d(&q, &x, &y) else { continue };
                    sectional_excess = sectional_excess.max(k - ev.max());
                    planes += 1;
                }
            }
        }
    }
    let far = curvature_eigenvalues(&[40.0, 20.0, 0.0]).unwrap();
    let far_max = far.as_array().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let ok = max_lambda < 0.25 && max_outer <= 1.0 / 12.0 + 1e-12 && sectional_excess <= 1e-9 && far_max < 1e-6;
    pass(
        ok,
        format!(
            "max lambda {max_lambda:.6}, max lambda1/lambda3 {max_outer:.6}, \
             sectional excess {sectional_excess:.2e} over {planes} planes, |lambda| at gaps 20: {far_max:.2e}"
        ),
    )
}

fn leaves() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let opts = IntegratorOptions::default().with_horizon(10.0).with_sample_dt(0.05);
    let mut p1_max = 0.0f64;
    let mut leaf_drift = 0.0f64;
    for _ in 0..50 {
        let mut s = random_state(&mut rng, 2, (0.2, 3.0), (0.2, 2.0));
        let (q, mut p) = s.into_parts();
        p[0] = 0.0;
        s = PeakonState::new(q, p).unwrap();
        let traj = integrate(&s, &opts).unwrap();
        let c0 = s.q()[0].exp() - s.q()[1].exp();
        for sample in &traj.samples {
            let (q, p) = (sample.state.q(), sample.state.p());
            p1_max = p1_max.max(p[0].abs());
            let scale = q[0].exp().max(1.0);
            leaf_drift = leaf_drift.max((q[0].exp() - q[1].exp() - c0).abs() / scale);
        }
    }
    let mut rate_err = 0.0f64;
    for _ in 0..50 {
        let s = random_state(&mut rng, 3, (0.2, 3.0), (0.2, 2.0));
        let (q, mut p) = s.into_parts();
        p[0] = 0.0;
        let s = PeakonState::new(q, p).unwrap();
        let traj = integrate(&s, &opts).unwrap();
        for sample in &traj.samples {
            p1_max = p1_max.max(sample.state.p()[0].abs());
            let (v, _) = eom_rhs(&sample.state);
            let predicted = d1_gap_rate(&sample.state).unwrap();
            rate_err = rate_err.max((v[0] - v[1] - predicted).abs());
        }
    }
    pass(
        p1_max < 1e-10 && leaf_drift < 1e-9 && rate_err < 1e-6,
        format!("max |p1| {p1_max:.2e}, leaf drift {leaf_drift:.2e}, 3D gap-rate error {rate_err:.2e}"),
    )
}

fn exclusion_3d() -> Check {
    let cfg = ScanConfig {
        n: 3,
        samples: 200,
        seed: 808,
        escape_horizon: 50.0,
        filter: ScanFilter::Excluded,
        ..Default::default()
    };
    let states = sample_states(&cfg).unwrap();
    let all_excluded = states.iter().all(|s| predict(s).unwrap().outcome == Outcome::Escapes);
    let report = run_scan(&cfg, Exec::default()).unwrap();
    let collisions = report.collisions();
    let failures = report.rows.iter().filter(|r| r.observed == Status::StepFailure).count();
    pass(
        all_excluded && collisions == 0 && failures == 0 && report.rows.len() == 200,
        format!("{} excluded states, {collisions} collisions, {failures} step failures", report.rows.len()),
    )
}

fn non_integrability() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut min_d2 = f64::INFINITY;
    let mut max_d1 = 0.0f64;
    for _ in 0..100 {
        let q = random_q(&mut rng, 3, (0.2, 3.0));
        min_d2 = min_d2.min(integrability_defect_3d(&q).unwrap().abs());
        max_d1 = max_d1.max(annihilator_defect_fd(&q, 0, 1e-5).unwrap().abs());
    }
    pass(
        min_d2 > 1e-10 && max_d1 < 1e-10,
        format!("min |D2 defect| {min_d2:.3e} (> 1e-10), max |D1 defect| {max_d1:.3e} (< 1e-10)"),
    )
}

fn hhat_paths() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let mut worst = 0.0f64;
    for n in [2, 3] {
        for _ in 0..100 {
            let s = random_state(&mut rng, n, (0.2, 3.0), (0.2, 2.0));
            worst = worst.max((hhat(&s).unwrap() - hhat_from_integrals(&s).unwrap()).abs());
        }
    }
    pass(worst < 1e-12, format!("max |difference| {worst:.3e} over 200 states (< 1e-12)"))
}

fn main() {
    let (c2, c3) = {
        let start = Instant::now();
        let r = scan_2d();
        eprintln!("2D scan took {:.2?}", start.elapsed());
        r
    };
    let mut results: Vec<(usize, &str, Check)> = Vec::new();
    let timed = |f: fn() -> Check| {
        let start = Instant::now();
        let o = f();
        (o, start.elapsed())
    };
    let (c1, t1) = timed(conservation);
    results.push((1, "conservation of first integrals", pass(c1.ok, format!("{} in {t1:.2?}", c1.detail))));
    results.push((2, "twopeakon collision iff sector I", c2));
    results.push((3, "collision time bound", c3));
    let (c4, t4) = timed(curvature_vs_oracle);
    results.push((4, "curvature closed forms vs oracle", pass(c4.ok, format!("{} in {t4:.2?}", c4.detail))));
    results.push((5, "Gauss curvature trichotomy", trichotomy()));
    results.push((6, "curvature eigenvalue bounds", eigen_bounds()));
    results.push((7, "p1 = 0 leaves", leaves()));
    let (c8, t8) = timed(exclusion_3d);
    results.push((8, "threepeakon exclusion", pass(c8.ok, format!("{} in {t8:.2?}", c8.detail))));
    results.push((9, "integrability of distributions", non_integrability()));
    results.push((10, "two routes to H-hat", hhat_paths()));

    let mut failed = 0;
    for (k, name, o) in &results {
        let tag = if o.ok { "PASS" } else { "FAIL" };
        println!("{tag} criterion {k:>2} {name}: {}", o.detail);
        failed += usize::from(!o.ok);
    }
    if failed > 0 {
        eprintln!("{failed} criteria failed");
        std::process::exit(1);
    }
}
