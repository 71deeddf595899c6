//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line to
//! stderr (uncaptured) and the test fails if any criterion fails.

mod common;

use std::f64::consts::PI;
use std::io::Write;
use std::time::Instant;

use common::*;
use pwillmore_core::flow::{flow_step, FlowConfig, FlowState};
use pwillmore_core::geometry::{
    conformal_distortion, enclosed_volume, mean_curvature_vector, p_willmore_energy, surface_area,
};
use pwillmore_core::regularize::{
    adjust_angles, close_scaled_angles, reference_angles, reference_metrics, regularize_with_angles, triangle_angles,
};
use pwillmore_core::shapes::{self, planar_grid};
use pwillmore_core::vec3;
use pwillmore_core::{Mesh, RegularizeConfig, RegularizeMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = (bool, String);

fn energy(st: &FlowState, p: u32) -> f64 {
    p_willmore_energy(&st.mesh, &st.y, p).unwrap()
}

fn sphere_energy() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for (level, tol) in [(4, 0.03), (5, 0.01)] {
        let m = shapes::icosphere(level, 1.0);
        let y = mean_curvature_vector(&m).unwrap();
        let e = p_willmore_energy(&m, &y, 2).unwrap();
        let err = rel(e, 16.0 * PI);
        ok &= err <= tol;
        detail.push(format!("level {level}: {} faces, E/16pi - 1 = {:+.3e}", m.face_count(), e / (16.0 * PI) - 1.0));
    }
    let secs = start.elapsed().as_secs_f64();
    ok &= secs <= 30.0;
    (ok, format!("{}; {secs:.1}s", detail.join(", ")))
}

fn mcf_law() -> Outcome {
    let start = Instant::now();
    let cfg = FlowConfig {
        p: 0,
        tau0: 1e-3,
        tau_max: 1e-3,
        ..Default::default()
    };
    let mut st = FlowState::new(shapes::icosphere(3, 1.0), &cfg).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        st = match flow_step(&st, &cfg) {
            Ok(s) => s,
            Err(e) => return (false, format!("step {} failed: {e}", st.step + 1)),
        };
        let exact = (1.0 - 4.0 * st.t).sqrt();
        worst = worst.max(rel(mean_radius(&st.mesh), exact));
    }
    let secs = start.elapsed().as_secs_f64();
    (
        worst <= 0.01 && secs <= 60.0,
        format!("max relative radius error {worst:.3e} over 100 steps; {secs:.1}s"),
    )
}

fn energy_monotone() -> Outcome {
    let mesh = shapes::ellipsoid([1.5, 1.0, 1.0], 11);
    let mut ok = true;
    let mut detail = vec![format!("{} faces", mesh.face_count())];
    // (p, tau0, s, tau_max, steps)
    for (p, tau, s, tau_max, steps) in [
        (0, 1e-3, 1.0, 1e-3, 100),
        (2, 1e-4, 1.0, 1e-4, 120),
        (4, 1e-6, 1.05, 1e-4, 100),
    ] {
        let cfg = FlowConfig {
            p,
            tau0: tau,
            scale_s: s,
            tau_max,
            ..Default::default()
        };
        let mut st = FlowState::new(mesh.clone(), &cfg).unwrap();
        let e0 = energy(&st, p);
        let mut prev = e0;
        let mut worst_rise = f64::NEG_INFINITY;
        let mut failed = None;
        for _ in 0..steps {
            match flow_step(&st, &cfg) {
                Ok(next) => st = next,
                Err(e) => {
                    failed = Some(e.to_string());
                    break;
                }
            }
            let e = energy(&st, p);
            worst_rise = worst_rise.max((e - prev) / e0);
            prev = e;
        }
        if let Some(e) = failed {
            ok = false;
            detail.push(format!("p = {p}: failed after {} steps: {e}", st.step));
            continue;
        }
        ok &= worst_rise <= 1e-10;
        let mut line = format!("p = {p}: {} steps, E {e0:.4} -> {prev:.4}, max rise {worst_rise:.2e}", st.step);
        if p == 2 {
            let gap = prev / (16.0 * PI) - 1.0;
            ok &= gap.abs() <= 0.05;
            line += &format!(", E/16pi - 1 = {gap:.4}");
        }
        detail.push(line);
    }
    (ok, detail.join("; "))
}

fn jittered_sphere() -> Mesh {
    shapes::jitter(&shapes::icosphere(3, 1.0), 0.02, 7)
}

fn area_constraint() -> Outcome {
    let cfg = FlowConfig {
        p: 2,
        fix_area: true,
        ..Default::default()
    };
    let mut st = FlowState::new(jittered_sphere(), &cfg).unwrap();
    let a0 = surface_area(&st.mesh).unwrap();
    for _ in 0..100 {
        st = match flow_step(&st, &cfg) {
            Ok(s) => s,
            Err(e) => return (false, format!("step {} failed: {e}", st.step + 1)),
        };
    }
    let drift = rel(surface_area(&st.mesh).unwrap(), a0);
    (drift < 3e-3, format!("area drift {drift:.3e} after 100 steps"))
}

fn volume_constraint() -> Outcome {
    let cfg = FlowConfig {
        p: 2,
        fix_volume: true,
        ..Default::default()
    };
    let mut st = FlowState::new(jittered_sphere(), &cfg).unwrap();
    let v0 = enclosed_volume(&st.mesh).unwrap();
    let mut prev = v0;
    let mut per_step: f64 = 0.0;
    for _ in 0..100 {
        st = match flow_step(&st, &cfg) {
            Ok(s) => s,
            Err(e) => return (false, format!("step {} failed: {e}", st.step + 1)),
        };
        let v = enclosed_volume(&st.mesh).unwrap();
        per_step = per_step.max(rel(v, prev));
        prev = v;
    }
    let total = rel(prev, v0);
    (
        per_step <= 1e-6 && total <= 1e-3,
        format!("max per-step drift {per_step:.3e}, cumulative {total:.3e}"),
    )
}

fn conformal_gradient_exact() -> Outcome {
    let start = Instant::now();
    let m = shapes::jitter(&shapes::icosahedron(1.0), 0.08, 3);
    let refs = reference_metrics(&m, &reference_angles(&m).unwrap()).unwrap();
    let worst = (0..20)
        .map(|seed| {
            let (a, fd) = gradient_vs_fd(&m, &refs, seed);
            rel(a, fd)
        })
        .fold(0.0, f64::max);
    let secs = start.elapsed().as_secs_f64();
    (
        m.face_count() == 20 && worst <= 1e-5 && secs <= 5.0,
        format!("{} faces, worst relative error {worst:.2e} over 20 directions", m.face_count()),
    )
}

fn cauchy_riemann() -> Outcome {
    let z2 = |x: f64, y: f64| [x * x - y * y, 2.0 * x * y, 0.0];
    let cds: Vec<f64> = [4, 8, 16, 32]
        .iter()
        .map(|&n| {
            let param = planar_grid(n, (1.0, 2.0), (1.0, 2.0), |x, y| [x, y, 0.0]);
            let m = planar_grid(n, (1.0, 2.0), (1.0, 2.0), z2);
            conformal_distortion(&m, &own_metrics(&param)).unwrap()
        })
        .collect();
    let ratios: Vec<f64> = cds.windows(2).map(|w| w[0] / w[1]).collect();
    let param = planar_grid(1, (0.0, 1.0), (0.0, 1.0), |x, y| [x, y, 0.0]);
    let sheared = planar_grid(1, (0.0, 1.0), (0.0, 1.0), |x, y| [x + y, y, 0.0]);
    let cd = conformal_distortion(&sheared, &own_metrics(&param)).unwrap();
    (
        ratios.iter().all(|&r| r >= 2.0) && (cd - 0.5).abs() <= 1e-10,
        format!("refinement ratios {ratios:.3?}, sheared {cd:.15}"),
    )
}

fn regularization_efficacy() -> Outcome {
    let m = shapes::jitter_tangential(&shapes::icosphere(3, 1.0), 0.1, 7);
    let angles = reference_angles(&m).unwrap();
    let run = |mode| {
        let cfg = RegularizeConfig {
            mode,
            ..Default::default()
        };
        regularize_with_angles(&m, &angles, &cfg).unwrap()
    };
    let (non, lin) = (run(RegularizeMode::Nonlinear), run(RegularizeMode::Linear));
    let drop = |r: &pwillmore_core::regularize::RegularizeReport| 1.0 - r.cd_after / r.cd_before;
    let ok = drop(&non) >= 0.5
        && non.quality_after > non.quality_before
        && drop(&lin) >= 0.3
        && non.normal_residual <= 1e-10
        && lin.normal_residual <= 1e-10;
    (
        ok,
        format!(
            "nonlinear: CD -{:.1}%, quality {:.3} -> {:.3}, residual {:.1e}, accepted {}; \
             linear: CD -{:.1}%, quality {:.3} -> {:.3}, residual {:.1e}, accepted {}",
            100.0 * drop(&non),
            non.quality_before,
            non.quality_after,
            non.normal_residual,
            non.accepted,
            100.0 * drop(&lin),
            lin.quality_before,
            lin.quality_after,
            lin.normal_residual,
            lin.accepted,
        ),
    )
}

fn reference_angle_rules() -> Outcome {
    let same = |a: [f64; 3], b: [f64; 3]| a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12);
    let sums = |a: [f64; 3]| (a.iter().sum::<f64>() - PI).abs() <= 1e-12;
    let examples = [
        (adjust_angles([PI / 3.0; 3], [6, 6, 6]), [PI / 3.0; 3]),
        (
            adjust_angles([PI / 2.0, PI / 4.0, PI / 4.0], [4, 8, 8]),
            [PI / 8.0, 7.0 * PI / 16.0, 7.0 * PI / 16.0],
        ),
        (
            close_scaled_angles([PI / 6.0, PI / 6.0, PI / 12.0]),
            [2.0 * PI / 5.0, 2.0 * PI / 5.0, PI / 5.0],
        ),
    ];
    let worked = examples.iter().all(|&(got, want)| same(got, want) && sums(got));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut bad = 0;
    let mut n = 0;
    while n < 1000 {
        let p: [[f64; 3]; 3] = [0; 3].map(|_| [0; 3].map(|_| rng.random_range(-1.0..1.0)));
        let c = vec3::cross(&vec3::sub(&p[1], &p[0]), &vec3::sub(&p[2], &p[0]));
        if vec3::norm(&c) < 1e-3 {
            continue;
        }
        n += 1;
        let val = [0; 3].map(|_| rng.random_range(3..=12usize));
        let a = adjust_angles(triangle_angles(&p), val);
        if !(sums(a) && a.iter().all(|&x| x > 0.0)) {
            bad += 1;
        }
    }
    (
        worked && bad == 0,
        format!("worked examples {}, {bad} of 1000 random triangles invalid", if worked { "exact" } else { "wrong" }),
    )
}

fn jacobian_exact() -> Outcome {
    let worst = [1, 2, 4]
        .iter()
        .flat_map(|&p| (0..10).map(move |seed| jacobian_fd_error(p, seed)))
        .fold(0.0, f64::max);
    (worst <= 1e-5, format!("worst relative error {worst:.2e} over 30 trial points"))
}

fn scaling_identities() -> Outcome {
    let m = shapes::jitter(&shapes::ellipsoid([1.0, 0.8, 0.6], 4), 0.02, 3);
    let quantities = |m: &Mesh| {
        let y = mean_curvature_vector(m).unwrap();
        let e = p_willmore_energy(m, &y, 2).unwrap();
        (surface_area(m).unwrap(), enclosed_volume(m).unwrap(), y, e)
    };
    let (a, v, y, e) = quantities(&m);
    let ymax = y.norms().into_iter().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for c in [0.1, 10.0] {
        let (ac, vc, yc, ec) = quantities(&m.scaled(c));
        let yerr = yc
            .values()
            .iter()
            .zip(y.values())
            .map(|(p, q)| vec3::dist(&vec3::scalef(p, c), q) / ymax)
            .fold(0.0, f64::max);
        worst = worst.max(rel(ac, c * c * a)).max(rel(vc, c * c * c * v)).max(yerr).max(rel(ec, e));
        let (at, vt, yt, et) = quantities(&m.translated([3.0 * c, -7.0, 11.0 / c]));
        worst = worst.max(rel(at, a)).max(rel(vt, v)).max(yt.max_diff(&y) / ymax).max(rel(et, e));
    }
    (worst <= 1e-9, format!("worst relative deviation {worst:.2e}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("sphere energy", sphere_energy),
        ("mean curvature flow law", mcf_law),
        ("energy monotonicity", energy_monotone),
        ("area constraint", area_constraint),
        ("volume constraint", volume_constraint),
        ("conformal gradient", conformal_gradient_exact),
        ("Cauchy-Riemann limit", cauchy_riemann),
        ("regularization efficacy", regularization_efficacy),
        ("reference angles", reference_angle_rules),
        ("Jacobian", jacobian_exact),
        ("scaling and translation", scaling_identities),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = check();
        let line = format!("criterion {} ({name}): {} {detail}\n", i + 1, if ok { "PASS" } else { "FAIL" });
        std::io::stderr().write_all(line.as_bytes()).unwrap();
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
