//! Acceptance gate: one test per quantitative contract the crate must meet.
//!
//! Every test draws its inputs from a fixed-seed RNG, asserts a hard error
//! bound, and (where a wall-clock budget applies) asserts the runtime too.
//! Each passing test prints a `[PASS]` line with the measured numbers, so a
//! `--nocapture` run doubles as a small report.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nambu::actionangle::cartesian_to_spherical_aa;
use nambu::bracket::{flow_field, fundamental_identity_residual, nambu_bracket, NambuSystem};
use nambu::dynamics::{
    drift_report, euler_rhs, integrate, symmetric_top_analytic, top_precession_frequency,
    IntegratorSpec, Rhs,
};
use nambu::field::{GradientMode, ScalarField};
use nambu::reduction::{
    angular_momentum_map, commutation_residual, hopf_map, induced_three_form,
    jacobian_minor_three_form, wedge_identity_residual, MomentumMap, WedgeChart,
};
use nambu::space::PhaseSpace;
use nambu::systems::{builtin_system, BuiltinSystem, SystemKind};

// ── shared helpers ──────────────────────────────────────────────────────────

fn finish(name: &str, started: Instant, budget: Option<Duration>, detail: &str) {
    let elapsed = started.elapsed();
    if let Some(budget) = budget {
        assert!(
            elapsed <= budget,
            "{name}: runtime {elapsed:.2?} exceeded budget {budget:.2?}"
        );
        println!("[PASS] {name}: {detail}; runtime {elapsed:.2?} within {budget:.2?}");
    } else {
        println!("[PASS] {name}: {detail}; runtime {elapsed:.2?}");
    }
}

fn sample_box(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Euler-angle points with `|sin(theta)| >= 0.2`: central differences of the
/// momentum map lose digits like `1/sin^4(theta)` near the gimbal circle, so
/// finite-difference checks stay inside this band.
fn sample_euler_band(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let lo = 0.2f64.asin();
    let theta = rng.random_range(lo..(PI - lo));
    let phi = rng.random_range(0.0..TAU);
    let psi = rng.random_range(0.0..TAU);
    let mut z = vec![theta, phi, psi];
    z.extend((0..3).map(|_| rng.random_range(-1.5..1.5)));
    z
}

/// `c + a . x + x' Q x / 2` with symmetric `Q`, coefficients in `[-1, 1]`,
/// carrying its analytic gradient `a + Q x`.
fn random_quadratic(space: &PhaseSpace, rng: &mut ChaCha8Rng) -> ScalarField {
    let n = space.dim();
    let c: f64 = rng.random_range(-1.0..1.0);
    let lin = sample_box(rng, -1.0, 1.0, n);
    let raw: Vec<Vec<f64>> = (0..n).map(|_| sample_box(rng, -1.0, 1.0, n)).collect();
    let quad: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (raw[i][j] + raw[j][i])).collect())
        .collect();
    let (lin2, quad2) = (lin.clone(), quad.clone());
    ScalarField::from_closure(space.clone(), "quadratic", move |x| {
        let mut acc = c;
        for (i, xi) in x.iter().enumerate() {
            acc += lin[i] * xi;
            for (j, xj) in x.iter().enumerate() {
                acc += 0.5 * quad[i][j] * xi * xj;
            }
        }
        Ok(acc)
    })
    .with_analytic_gradient(move |x, out| {
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = lin2[i];
            for (j, xj) in x.iter().enumerate() {
                *slot += quad2[i][j] * xj;
            }
        }
        Ok(())
    })
}

fn builtin(name: &str) -> BuiltinSystem {
    builtin_system(name, &BTreeMap::new()).expect("known builtin")
}

fn bracket_system(sys: &BuiltinSystem) -> NambuSystem {
    match sys.kind() {
        SystemKind::Nambu(ns) => ns.clone(),
        SystemKind::Canonical(_) => unreachable!("expected a bracket system"),
    }
}

fn with_fd_gradients(system: &NambuSystem) -> NambuSystem {
    NambuSystem::new(
        system.space().clone(),
        system
            .hamiltonians()
            .iter()
            .map(|h| h.clone().with_gradient_mode(GradientMode::CentralDifference))
            .collect(),
    )
    .expect("same shape")
}

fn space3() -> PhaseSpace {
    PhaseSpace::new(&["x1", "x2", "x3"]).expect("valid")
}

fn max_abs(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

// ── criteria ────────────────────────────────────────────────────────────────

/// The determinant-bracket flow of (squared momentum / 2, kinetic energy)
/// reproduces the closed-form body-momentum equations at 1000 random points:
/// componentwise below 1e-10 with analytic gradients and below 1e-6 with
/// central differences, inside one second.
#[test]
fn criterion_1_euler_flow_equivalence() {
    let start = Instant::now();
    let body = bracket_system(&builtin("rigid_body"));
    let body_fd = with_fd_gradients(&body);
    let moments = [1.0, 2.0, 3.0];

    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let (mut max_analytic, mut max_fd) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let l = sample_box(&mut rng, -1.5, 1.5, 3);
        let reference = euler_rhs(&[l[0], l[1], l[2]], &moments).unwrap();
        let va = flow_field(&body, &l).unwrap();
        let vf = flow_field(&body_fd, &l).unwrap();
        for k in 0..3 {
            max_analytic = max_analytic.max((va[k] - reference[k]).abs());
            max_fd = max_fd.max((vf[k] - reference[k]).abs());
        }
    }
    assert!(max_analytic < 1e-10, "analytic max {max_analytic:.3e}");
    assert!(max_fd < 1e-6, "finite-difference max {max_fd:.3e}");
    finish(
        "euler flow equivalence",
        start,
        Some(Duration::from_secs(1)),
        &format!(
            "1000 points; analytic max {max_analytic:.3e} < 1e-10, \
             finite-difference max {max_fd:.3e} < 1e-6"
        ),
    );
}

/// Integrating the rigid body (moments (1, 2, 3), start (1, 1, 1)) with RK4
/// at dt = 1e-3 to t = 50 drifts both conserved quantities — half the squared
/// momentum and the kinetic energy — by less than 1e-8, inside five seconds.
#[test]
fn criterion_2_rigid_body_conservation() {
    let start = Instant::now();
    let sys = builtin("rigid_body");
    let spec = IntegratorSpec::rk4(1e-3, 50.0);
    let traj = integrate(&sys.rhs(), sys.default_state(), &spec, sys.invariants()).unwrap();
    let report = drift_report(&traj);
    let mut parts = Vec::new();
    for inv in &report.invariants {
        assert!(
            inv.max_abs_drift < 1e-8,
            "{} drift {:.3e}",
            inv.name,
            inv.max_abs_drift
        );
        parts.push(format!("{} drift {:.3e}", inv.name, inv.max_abs_drift));
    }
    finish(
        "rigid body conservation",
        start,
        Some(Duration::from_secs(5)),
        &format!("{} steps; {} (both < 1e-8)", traj.len() - 1, parts.join(", ")),
    );
}

/// Integrating the four-dimensional isotropic oscillator to t = 20 keeps
/// every component of the quadratic invariant map (and the energy) within
/// 1e-8 of its initial value, inside five seconds.
#[test]
fn criterion_3_oscillator_invariant_constancy() {
    let start = Instant::now();
    let sys = builtin("hopf_oscillator");
    let spec = IntegratorSpec::rk4(1e-3, 20.0);
    let traj = integrate(&sys.rhs(), sys.default_state(), &spec, sys.invariants()).unwrap();
    let report = drift_report(&traj);
    let mut worst = 0.0f64;
    for inv in &report.invariants {
        assert!(
            inv.max_abs_drift < 1e-8,
            "{} drift {:.3e}",
            inv.name,
            inv.max_abs_drift
        );
        worst = worst.max(inv.max_abs_drift);
    }
    finish(
        "oscillator invariant constancy",
        start,
        Some(Duration::from_secs(5)),
        &format!(
            "{} steps; worst drift over x1, x2, x3, energy {worst:.3e} < 1e-8",
            traj.len() - 1
        ),
    );
}

/// With finite-difference brackets, the component closure relations of both
/// built-in maps hold below 1e-6 at 100 random points each: the angular
/// momentum components close against the structure function -|L|^2/2 and the
/// oscillator invariants against -2|x|^2, inside two seconds.
#[test]
fn criterion_4_commutation_relations() {
    let start = Instant::now();

    let am = angular_momentum_map().with_gradient_mode(GradientMode::CentralDifference);
    let h2_am = ScalarField::from_closure(am.target().clone(), "-|L|^2/2", |y| {
        Ok(-0.5 * y.iter().map(|v| v * v).sum::<f64>())
    })
    .with_analytic_gradient(|y, out| {
        for (slot, v) in out.iter_mut().zip(y.iter()) {
            *slot = -v;
        }
        Ok(())
    });

    let hm = hopf_map().with_gradient_mode(GradientMode::CentralDifference);
    let h2_hopf = ScalarField::from_closure(hm.target().clone(), "-2|x|^2", |y| {
        Ok(-2.0 * y.iter().map(|v| v * v).sum::<f64>())
    })
    .with_analytic_gradient(|y, out| {
        for (slot, v) in out.iter_mut().zip(y.iter()) {
            *slot = -4.0 * v;
        }
        Ok(())
    });

    let residual = |map: &MomentumMap, h2: &ScalarField, z: &[f64]| -> f64 {
        let r = commutation_residual(map, h2, z).unwrap();
        max_abs(r.iter().flat_map(|row| row.iter().copied()))
    };

    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let (mut max_am, mut max_hopf) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let z = sample_euler_band(&mut rng);
        max_am = max_am.max(residual(&am, &h2_am, &z));
        let z = sample_box(&mut rng, -1.5, 1.5, 4);
        max_hopf = max_hopf.max(residual(&hm, &h2_hopf, &z));
    }
    assert!(max_am < 1e-6, "angular momentum closure max {max_am:.3e}");
    assert!(max_hopf < 1e-6, "oscillator closure max {max_hopf:.3e}");
    finish(
        "commutation relations",
        start,
        Some(Duration::from_secs(2)),
        &format!(
            "100 points per map; angular momentum max {max_am:.3e}, \
             oscillator max {max_hopf:.3e} (both < 1e-6)"
        ),
    );
}

/// The finite-difference Jacobian determinant of each coordinate chart
/// composed with the quadratic map matches its closed-form volume factor —
/// 8 r1 r2 (r1^2 + r2^2) and r^2 sin(theta) — below 1e-5 at 100 chart
/// interior points each, inside one second.
#[test]
fn criterion_5_wedge_volume_identities() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    let (mut max_r1r2, mut max_sph) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let p = [
            rng.random_range(0.5..1.5),
            rng.random_range(0.5..1.5),
            rng.random_range(0.0..TAU),
        ];
        max_r1r2 = max_r1r2.max(
            wedge_identity_residual(WedgeChart::HopfR1R2, &p)
                .unwrap()
                .abs(),
        );
        let p = [
            rng.random_range(0.5..1.5),
            rng.random_range(0.3..(PI - 0.3)),
            rng.random_range(0.0..TAU),
        ];
        max_sph = max_sph.max(
            wedge_identity_residual(WedgeChart::HopfSpherical, &p)
                .unwrap()
                .abs(),
        );
    }
    assert!(max_r1r2 < 1e-5, "polar-radii chart max {max_r1r2:.3e}");
    assert!(max_sph < 1e-5, "spherical chart max {max_sph:.3e}");
    finish(
        "wedge volume identities",
        start,
        Some(Duration::from_secs(1)),
        &format!(
            "100 points per chart; polar-radii max {max_r1r2:.3e}, \
             spherical max {max_sph:.3e} (both < 1e-5)"
        ),
    );
}

/// The three-form of the quadratic map computed through the symplectic
/// structure (gradient, Hamiltonian vector field, contraction, wedge) matches
/// the direct Jacobian-minor route componentwise below 1e-8 at 100 points.
#[test]
fn criterion_6_three_form_routes_agree() {
    let start = Instant::now();
    let map = hopf_map();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let z = sample_box(&mut rng, -1.5, 1.5, 4);
        let a = induced_three_form(&map, &z).unwrap();
        let b = jacobian_minor_three_form(&map, &z).unwrap();
        worst = worst.max(a.max_abs_diff(&b));
    }
    assert!(worst < 1e-8, "route difference max {worst:.3e}");
    finish(
        "three-form routes agree",
        start,
        None,
        &format!("100 points; componentwise max {worst:.3e} < 1e-8"),
    );
}

/// End-to-end symmetric top (moments (2, 2, 1), start (1, 0, 1)): the RK4
/// trajectory tracks the closed-form momentum below 1e-6 over t in [0, 20];
/// in the spherical chart the action and tilt drift below 1e-7 and the
/// unwrapped azimuth stays within 1e-5 of phi(0) - omega t, where omega is
/// the precession frequency L3 (1/I3 - 1/I1). All inside five seconds.
#[test]
fn criterion_7_symmetric_top_end_to_end() {
    let start = Instant::now();
    let sys = builtin("symmetric_top");
    let (i1, i3) = (sys.params()["I1"], sys.params()["I3"]);
    let x0 = sys.default_state().to_vec();
    let l0 = [x0[0], x0[1], x0[2]];
    let spec = IntegratorSpec::rk4(1e-3, 20.0);
    let traj = integrate(&sys.rhs(), &x0, &spec, sys.invariants()).unwrap();

    let mut max_state_err = 0.0f64;
    for (t, state) in traj.times.iter().zip(traj.states.iter()) {
        let exact = symmetric_top_analytic(&l0, i1, i3, *t).unwrap();
        for k in 0..3 {
            max_state_err = max_state_err.max((state[k] - exact[k]).abs());
        }
    }
    assert!(max_state_err < 1e-6, "trajectory max {max_state_err:.3e}");

    // Chart route. The transverse momentum rotates clockwise, so the azimuth
    // advances at -omega; the wrap to [0, 2 pi) is undone by tracking jumps.
    let omega = top_precession_frequency(l0[2], i1, i3);
    let first = cartesian_to_spherical_aa(&l0).unwrap();
    let mut offset = 0.0f64;
    let mut prev = first.phi;
    let (mut max_j, mut max_mu, mut max_phi) = (0.0f64, 0.0f64, 0.0f64);
    for (t, state) in traj.times.iter().zip(traj.states.iter()) {
        let aa = cartesian_to_spherical_aa(&[state[0], state[1], state[2]]).unwrap();
        assert!(!aa.degenerate, "trajectory touched the polar axis");
        let jump = aa.phi - prev;
        if jump > PI {
            offset -= TAU;
        } else if jump < -PI {
            offset += TAU;
        }
        prev = aa.phi;
        max_j = max_j.max((aa.action - first.action).abs());
        max_mu = max_mu.max((aa.mu - first.mu).abs());
        max_phi = max_phi.max((aa.phi + offset - (first.phi - omega * t)).abs());
    }
    assert!(max_j < 1e-7, "action drift {max_j:.3e}");
    assert!(max_mu < 1e-7, "tilt drift {max_mu:.3e}");
    assert!(max_phi < 1e-5, "azimuth deviation {max_phi:.3e}");
    finish(
        "symmetric top end-to-end",
        start,
        Some(Duration::from_secs(5)),
        &format!(
            "trajectory max {max_state_err:.3e} < 1e-6; action drift {max_j:.3e}, \
             tilt drift {max_mu:.3e} (< 1e-7); azimuth deviation {max_phi:.3e} < 1e-5"
        ),
    );
}

/// The derivation property of the bracket (nested brackets expanded by the
/// product of first-level brackets) holds below 1e-4 over 50 random quadratic
/// quintuples, with the inner bracket values differentiated numerically.
#[test]
fn criterion_8_fundamental_identity() {
    let start = Instant::now();
    let s = space3();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f1 = random_quadratic(&s, &mut rng);
        let f2 = random_quadratic(&s, &mut rng);
        let g1 = random_quadratic(&s, &mut rng);
        let g2 = random_quadratic(&s, &mut rng);
        let g3 = random_quadratic(&s, &mut rng);
        let x = sample_box(&mut rng, -1.0, 1.0, 3);
        let r = fundamental_identity_residual([&f1, &f2], [&g1, &g2, &g3], &x).unwrap();
        worst = worst.max(r.abs());
    }
    assert!(worst < 1e-4, "residual max {worst:.3e}");
    finish(
        "fundamental identity",
        start,
        None,
        &format!("50 quintuples; residual max {worst:.3e} < 1e-4"),
    );
}

/// Bracket algebra spot checks — antisymmetry under every transposition
/// (1e-10), exact vanishing on repeated arguments, the product rule in the
/// last slot (1e-8) — plus fourth-order convergence of RK4: halving the step
/// shrinks the harmonic-oscillator error by a factor in [12, 20].
#[test]
fn criterion_9_bracket_algebra_and_rk4_order() {
    let start = Instant::now();
    let s = space3();
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    let (mut max_anti, mut max_repeat, mut max_leibniz) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let f = random_quadratic(&s, &mut rng);
        let g = random_quadratic(&s, &mut rng);
        let h = random_quadratic(&s, &mut rng);
        let x = sample_box(&mut rng, -1.0, 1.0, 3);

        let base = nambu_bracket(&[&f, &g, &h], &x).unwrap();
        for swapped in [
            nambu_bracket(&[&g, &f, &h], &x).unwrap(),
            nambu_bracket(&[&f, &h, &g], &x).unwrap(),
            nambu_bracket(&[&h, &g, &f], &x).unwrap(),
        ] {
            max_anti = max_anti.max((base + swapped).abs());
        }

        max_repeat = max_repeat.max(nambu_bracket(&[&f, &f, &h], &x).unwrap().abs());
        max_repeat = max_repeat.max(nambu_bracket(&[&f, &g, &g], &x).unwrap().abs());

        // Independent quadruple for the product rule: the product field
        // carries the product-rule gradient, so the residual probes the
        // bracket's linear-algebra side rather than differencing.
        let f1 = random_quadratic(&s, &mut rng);
        let f2 = random_quadratic(&s, &mut rng);
        let g = random_quadratic(&s, &mut rng);
        let h = random_quadratic(&s, &mut rng);
        let (gc, hc) = (g.clone(), h.clone());
        let product = ScalarField::from_closure(s.clone(), "g*h", move |y| {
            Ok(gc.eval(y)? * hc.eval(y)?)
        })
        .with_analytic_gradient({
            let (g, h) = (g.clone(), h.clone());
            move |y, out| {
                let gv = g.eval(y)?;
                let hv = h.eval(y)?;
                let gg = g.gradient(y)?;
                let gh = h.gradient(y)?;
                for (i, slot) in out.iter_mut().enumerate() {
                    *slot = gv * gh[i] + hv * gg[i];
                }
                Ok(())
            }
        });
        let lhs = nambu_bracket(&[&f1, &f2, &product], &x).unwrap();
        let rhs = g.eval(&x).unwrap() * nambu_bracket(&[&f1, &f2, &h], &x).unwrap()
            + h.eval(&x).unwrap() * nambu_bracket(&[&f1, &f2, &g], &x).unwrap();
        max_leibniz = max_leibniz.max((lhs - rhs).abs());
    }
    assert!(max_anti < 1e-10, "antisymmetry max {max_anti:.3e}");
    assert!(max_repeat < 1e-12, "repeated-argument max {max_repeat:.3e}");
    assert!(max_leibniz < 1e-8, "product rule max {max_leibniz:.3e}");

    let plane = PhaseSpace::canonical_interleaved(&["q", "p"]).unwrap();
    let energy = ScalarField::from_closure(plane, "energy", |x| {
        Ok(0.5 * (x[0] * x[0] + x[1] * x[1]))
    })
    .with_analytic_gradient(|x, out| {
        out.copy_from_slice(x);
        Ok(())
    });
    let rhs = Rhs::Canonical(&energy);
    let err = |dt: f64| -> f64 {
        let spec = IntegratorSpec::rk4(dt, 1.0);
        let traj = integrate(&rhs, &[1.0, 0.0], &spec, &[]).unwrap();
        let xf = traj.final_state();
        let exact = [1.0f64.cos(), -(1.0f64.sin())];
        ((xf[0] - exact[0]).powi(2) + (xf[1] - exact[1]).powi(2)).sqrt()
    };
    let ratio = err(0.02) / err(0.01);
    assert!(
        (12.0..=20.0).contains(&ratio),
        "halving dt changed the error by {ratio:.2}, expected ~16"
    );

    finish(
        "bracket algebra and RK4 order",
        start,
        None,
        &format!(
            "antisymmetry max {max_anti:.3e} < 1e-10, repeats max {max_repeat:.3e}, \
             product rule max {max_leibniz:.3e} < 1e-8; RK4 halving ratio {ratio:.2} in [12, 20]"
        ),
    );
}
