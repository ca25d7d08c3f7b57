//! Seeded randomized verification of the structural identities the rest of
//! the crate relies on.
//!
//! Each check draws its own deterministic RNG from `(seed, check index)`, so
//! a check's residuals do not depend on which suite it runs in, and a report
//! for a given `(suite, seed, samples)` triple is reproducible byte for byte.
//! Checks record the sampling domain they used; several restrict it, e.g.
//! Euler-angle sampling stays away from the gimbal circle where central
//! differences lose too many digits to say anything.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::actionangle::{
    cartesian_to_spherical_aa, spherical_aa_to_cartesian, spherical_chart_fields, top_reduced_flow,
    top_reduced_system, TopParams,
};
use crate::bracket::{
    flow_field, fundamental_identity_residual, nambu_bracket, poisson_bracket, NambuSystem,
};
use crate::dynamics::euler_rhs;
use crate::error::{Error, Result};
use crate::expr::Expression;
use crate::field::{GradientMode, ScalarField};
use crate::reduction::{
    angular_momentum_map, chart_embedding, commutation_residual, conservation_residual, hopf,
    hopf_map, induced_three_form, jacobian_minor_three_form, wedge_identity_residual, MomentumMap,
    ThreeForm4D, WedgeChart,
};
use crate::space::PhaseSpace;
use crate::systems::{builtin_system, SystemKind};

/// Which group of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Brackets,
    Reductions,
    ActionAngle,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Result<Suite> {
        match s {
            "brackets" => Ok(Suite::Brackets),
            "reductions" => Ok(Suite::Reductions),
            "actionangle" => Ok(Suite::ActionAngle),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite `{other}`; available: brackets, reductions, actionangle, all"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Brackets => "brackets",
            Suite::Reductions => "reductions",
            Suite::ActionAngle => "actionangle",
            Suite::All => "all",
        }
    }

    fn includes(&self, group: Suite) -> bool {
        *self == Suite::All || *self == group
    }
}

/// Outcome of one randomized check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Where the samples were drawn, including any exclusions.
    pub domain: String,
}

/// A full verification run.
#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub suite: String,
    pub seed: u64,
    pub requested_samples: usize,
    pub checks: Vec<CheckResult>,
    pub all_pass: bool,
}

impl VerifyReport {
    /// Plain-text table, checks sorted by name.
    pub fn render_table(&self) -> String {
        let mut rows = self.checks.clone();
        rows.sort_by(|a, b| a.name.cmp(&b.name));
        let width = rows.iter().map(|c| c.name.len()).max().unwrap_or(0);
        let mut out = format!(
            "suite {}  seed {}  samples {}\n",
            self.suite, self.seed, self.requested_samples
        );
        for c in &rows {
            out.push_str(&format!(
                "[{}] {:width$}  max {:9.3e}  tol {:7.1e}  n {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tolerance,
                c.samples,
            ));
            out.push_str(&format!("       domain: {}\n", c.domain));
        }
        out.push_str(if self.all_pass {
            "all checks passed\n"
        } else {
            "SOME CHECKS FAILED\n"
        });
        out
    }
}

/// Runs the chosen suite. `samples` is the number of random draws per check
/// and must be positive.
pub fn run_suite(suite: Suite, seed: u64, samples: usize) -> Result<VerifyReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument(
            "samples must be positive".to_string(),
        ));
    }
    let mut checks = Vec::new();
    if suite.includes(Suite::Brackets) {
        checks.push(antisymmetry(seed, samples)?);
        checks.push(conservation(seed, samples)?);
        checks.push(leibniz(seed, samples)?);
        checks.push(poisson_nambu_2d(seed, samples)?);
        checks.push(fundamental_identity(seed, samples)?);
        checks.push(euler_flow(seed, samples, GradientMode::Analytic)?);
        checks.push(euler_flow(seed, samples, GradientMode::CentralDifference)?);
    }
    if suite.includes(Suite::Reductions) {
        checks.push(commutation_angular_momentum(seed, samples)?);
        checks.push(commutation_hopf(seed, samples)?);
        checks.push(conservation_rigid_body(seed, samples)?);
        checks.push(conservation_hopf(seed, samples)?);
        checks.push(hopf_norm(seed, samples)?);
        checks.push(l_magnitude(seed, samples)?);
        checks.push(three_form_hopf(seed, samples)?);
        checks.push(three_form_rank_deficient(seed, samples)?);
        checks.push(wedge(seed, samples, WedgeChart::HopfR1R2)?);
        checks.push(wedge(seed, samples, WedgeChart::HopfSpherical)?);
        checks.push(wedge_chart_overlap(seed, samples)?);
    }
    if suite.includes(Suite::ActionAngle) {
        checks.push(planar_jacobian(seed, samples)?);
        checks.push(spherical_roundtrip(seed, samples)?);
        checks.push(volume_action(seed, samples)?);
        checks.push(top_flow_routes(seed, samples)?);
        checks.push(top_chart_pushforward(seed, samples)?);
    }
    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        suite: suite.as_str().to_string(),
        seed,
        requested_samples: samples,
        checks,
        all_pass,
    })
}

// Stable per-check RNG stream indices. Appending new checks must not renumber
// existing ones, or old seeds stop reproducing old reports.
const IDX_ANTISYMMETRY: u64 = 0;
const IDX_CONSERVATION: u64 = 1;
const IDX_LEIBNIZ: u64 = 2;
const IDX_POISSON_NAMBU: u64 = 3;
const IDX_FUNDAMENTAL: u64 = 4;
const IDX_EULER_ANALYTIC: u64 = 5;
const IDX_EULER_FD: u64 = 6;
const IDX_COMM_ANGULAR: u64 = 7;
const IDX_COMM_HOPF: u64 = 8;
const IDX_CONS_RIGID: u64 = 9;
const IDX_CONS_HOPF: u64 = 10;
const IDX_HOPF_NORM: u64 = 11;
const IDX_L_MAGNITUDE: u64 = 12;
const IDX_THREE_FORM: u64 = 13;
const IDX_THREE_FORM_RANK: u64 = 14;
const IDX_WEDGE_R1R2: u64 = 15;
const IDX_WEDGE_SPH: u64 = 16;
const IDX_WEDGE_OVERLAP: u64 = 17;
const IDX_PLANAR_JAC: u64 = 18;
const IDX_SPH_ROUNDTRIP: u64 = 19;
const IDX_VOLUME_ACTION: u64 = 20;
const IDX_TOP_ROUTES: u64 = 21;
const IDX_TOP_PUSHFORWARD: u64 = 22;

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

fn run_check<F>(
    name: &str,
    seed: u64,
    index: u64,
    samples: usize,
    tolerance: f64,
    domain: &str,
    mut one: F,
) -> Result<CheckResult>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<f64>,
{
    let mut rng = rng_for(seed, index);
    let mut max_residual = 0.0f64;
    for _ in 0..samples {
        max_residual = max_residual.max(one(&mut rng)?.abs());
    }
    Ok(CheckResult {
        name: name.to_string(),
        samples,
        max_residual,
        tolerance,
        pass: max_residual < tolerance,
        domain: domain.to_string(),
    })
}

// ── sampling helpers ────────────────────────────────────────────────────────

fn sample_box(rng: &mut ChaCha8Rng, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

/// Fraction of the gimbal circle excluded from Euler-angle sampling. Central
/// differences of the momentum components lose accuracy like 1/sin^4(theta)
/// near the circle, so finite-difference checks sample |sin(theta)| >= 0.2.
const SIN_THETA_BAND: f64 = 0.2;
const EULER_BAND_DOMAIN: &str =
    "Euler angles with |sin(theta)| >= 0.2, phi and psi in [0, 2 pi), momenta in [-1.5, 1.5]";

fn sample_euler_band(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let lo = SIN_THETA_BAND.asin();
    let theta = rng.random_range(lo..(std::f64::consts::PI - lo));
    let phi = rng.random_range(0.0..std::f64::consts::TAU);
    let psi = rng.random_range(0.0..std::f64::consts::TAU);
    let mut z = vec![theta, phi, psi];
    z.extend(sample_box(rng, -1.5, 1.5, 3));
    z
}

/// `c + a . x + x' Q x / 2` with symmetric `Q`, all coefficients in
/// `[-1, 1]`, carrying its analytic gradient `a + Q x`.
#[allow(clippy::needless_range_loop)] // mirrored writes need two rows at once
fn random_quadratic(space: &PhaseSpace, rng: &mut ChaCha8Rng) -> ScalarField {
    let n = space.dim();
    let c = rng.random_range(-1.0..1.0);
    let lin = sample_box(rng, -1.0, 1.0, n);
    let mut quad = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-1.0..1.0);
            quad[i][j] = v;
            quad[j][i] = v;
        }
    }
    let (lin2, quad2) = (lin.clone(), quad.clone());
    ScalarField::from_closure(space.clone(), "quadratic", move |x| {
        let mut acc = c;
        for i in 0..x.len() {
            acc += lin[i] * x[i];
            for j in 0..x.len() {
                acc += 0.5 * quad[i][j] * x[i] * x[j];
            }
        }
        Ok(acc)
    })
    .with_analytic_gradient(move |x, out| {
        for i in 0..x.len() {
            out[i] = lin2[i];
            for j in 0..x.len() {
                out[i] += quad2[i][j] * x[j];
            }
        }
        Ok(())
    })
}

fn space3() -> PhaseSpace {
    PhaseSpace::new(&["x1", "x2", "x3"]).expect("valid")
}

fn target_expression(map: &MomentumMap, src: &str) -> ScalarField {
    let e = Expression::parse(src, map.target(), &BTreeMap::new()).expect("valid expression");
    ScalarField::from_expression(e)
}

fn body_nambu_system(moments: [f64; 3]) -> NambuSystem {
    let mut o = BTreeMap::new();
    o.insert("I1".to_string(), moments[0]);
    o.insert("I2".to_string(), moments[1]);
    o.insert("I3".to_string(), moments[2]);
    let sys = builtin_system("rigid_body", &o).expect("valid moments");
    match sys.kind() {
        SystemKind::Nambu(ns) => ns.clone(),
        SystemKind::Canonical(_) => unreachable!("rigid body is a bracket system"),
    }
}

fn with_mode(system: &NambuSystem, mode: GradientMode) -> NambuSystem {
    NambuSystem::new(
        system.space().clone(),
        system
            .hamiltonians()
            .iter()
            .map(|h| h.clone().with_gradient_mode(mode))
            .collect(),
    )
    .expect("same shape")
}

// ── bracket checks ──────────────────────────────────────────────────────────

fn antisymmetry(seed: u64, samples: usize) -> Result<CheckResult> {
    let s = space3();
    run_check(
        "bracket.antisymmetry",
        seed,
        IDX_ANTISYMMETRY,
        samples,
        1e-10,
        "unit-scale quadratics with analytic gradients at points in [-1, 1]^3, random transpositions",
        |rng| {
            let f = random_quadratic(&s, rng);
            let g = random_quadratic(&s, rng);
            let h = random_quadratic(&s, rng);
            let x = sample_box(rng, -1.0, 1.0, 3);
            let base = nambu_bracket(&[&f, &g, &h], &x)?;
            let swapped = match rng.random_range(0..3) {
                0 => nambu_bracket(&[&g, &f, &h], &x)?,
                1 => nambu_bracket(&[&f, &h, &g], &x)?,
                _ => nambu_bracket(&[&h, &g, &f], &x)?,
            };
            Ok(swapped + base)
        },
    )
}

fn conservation(seed: u64, samples: usize) -> Result<CheckResult> {
    let s = space3();
    run_check(
        "bracket.conservation",
        seed,
        IDX_CONSERVATION,
        samples,
        1e-13,
        "random quadratic Hamiltonian pairs at points in [-1, 1]^3; residual is the flow's rate of change of each Hamiltonian",
        |rng| {
            let h1 = random_quadratic(&s, rng);
            let h2 = random_quadratic(&s, rng);
            let x = sample_box(rng, -1.0, 1.0, 3);
            let sys = NambuSystem::new(s.clone(), vec![h1.clone(), h2.clone()])?;
            let v = flow_field(&sys, &x)?;
            let mut worst = 0.0f64;
            for h in [&h1, &h2] {
                let g = h.gradient(&x)?;
                let rate: f64 = v.iter().zip(g.iter()).map(|(a, b)| a * b).sum();
                worst = worst.max(rate.abs());
            }
            Ok(worst)
        },
    )
}

fn leibniz(seed: u64, samples: usize) -> Result<CheckResult> {
    let s = space3();
    run_check(
        "bracket.leibniz",
        seed,
        IDX_LEIBNIZ,
        samples,
        1e-8,
        "random quadruples of quadratics at points in [-1, 1]^3; product field carries the product-rule gradient",
        |rng| {
            let f1 = random_quadratic(&s, rng);
            let f2 = random_quadratic(&s, rng);
            let g = random_quadratic(&s, rng);
            let h = random_quadratic(&s, rng);
            let x = sample_box(rng, -1.0, 1.0, 3);
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
                    for i in 0..out.len() {
                        out[i] = gv * gh[i] + hv * gg[i];
                    }
                    Ok(())
                }
            });
            let lhs = nambu_bracket(&[&f1, &f2, &product], &x)?;
            let rhs = g.eval(&x)? * nambu_bracket(&[&f1, &f2, &h], &x)?
                + h.eval(&x)? * nambu_bracket(&[&f1, &f2, &g], &x)?;
            Ok(lhs - rhs)
        },
    )
}

fn poisson_nambu_2d(seed: u64, samples: usize) -> Result<CheckResult> {
    let s = PhaseSpace::canonical_interleaved(&["q", "p"]).expect("valid");
    run_check(
        "bracket.poisson_nambu_2d",
        seed,
        IDX_POISSON_NAMBU,
        samples,
        1e-12,
        "random quadratic pairs on the canonical plane at points in [-1, 1]^2; two-field determinant bracket against the canonical bracket",
        |rng| {
            let f = random_quadratic(&s, rng);
            let g = random_quadratic(&s, rng);
            let x = sample_box(rng, -1.0, 1.0, 2);
            Ok(nambu_bracket(&[&f, &g], &x)? - poisson_bracket(&f, &g, &x)?)
        },
    )
}

fn fundamental_identity(seed: u64, samples: usize) -> Result<CheckResult> {
    let s = space3();
    run_check(
        "bracket.fundamental_identity",
        seed,
        IDX_FUNDAMENTAL,
        samples,
        1e-4,
        "random quadratic quintuples at points in [-1, 1]^3; inner bracket values differentiated by central differences",
        |rng| {
            let f1 = random_quadratic(&s, rng);
            let f2 = random_quadratic(&s, rng);
            let g1 = random_quadratic(&s, rng);
            let g2 = random_quadratic(&s, rng);
            let g3 = random_quadratic(&s, rng);
            let x = sample_box(rng, -1.0, 1.0, 3);
            fundamental_identity_residual([&f1, &f2], [&g1, &g2, &g3], &x)
        },
    )
}

fn euler_flow(seed: u64, samples: usize, mode: GradientMode) -> Result<CheckResult> {
    let (name, idx, tol, domain) = match mode {
        GradientMode::Analytic => (
            "bracket.euler_flow_analytic",
            IDX_EULER_ANALYTIC,
            1e-10,
            "moments in [0.5, 3]^3, momenta in [-1.5, 1.5]^3; bracket flow with analytic gradients against the closed-form equations",
        ),
        GradientMode::CentralDifference => (
            "bracket.euler_flow_fd",
            IDX_EULER_FD,
            1e-6,
            "moments in [0.5, 3]^3, momenta in [-1.5, 1.5]^3; bracket flow with central differences against the closed-form equations",
        ),
    };
    run_check(name, seed, idx, samples, tol, domain, |rng| {
        let moments = [
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..3.0),
            rng.random_range(0.5..3.0),
        ];
        let l = sample_box(rng, -1.5, 1.5, 3);
        let sys = with_mode(&body_nambu_system(moments), mode);
        let v = flow_field(&sys, &l)?;
        let reference = euler_rhs(&[l[0], l[1], l[2]], &moments)?;
        let mut worst = 0.0f64;
        for i in 0..3 {
            worst = worst.max((v[i] - reference[i]).abs());
        }
        Ok(worst)
    })
}

// ── reduction checks ────────────────────────────────────────────────────────

fn max_abs3x3(m: &[[f64; 3]; 3]) -> f64 {
    m.iter()
        .flat_map(|row| row.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn commutation_angular_momentum(seed: u64, samples: usize) -> Result<CheckResult> {
    let map = angular_momentum_map().with_gradient_mode(GradientMode::CentralDifference);
    let h2 = target_expression(&map, "-(L1^2 + L2^2 + L3^2)/2");
    run_check(
        "reduction.commutation_angular_momentum",
        seed,
        IDX_COMM_ANGULAR,
        samples,
        1e-6,
        EULER_BAND_DOMAIN,
        |rng| {
            let z = sample_euler_band(rng);
            Ok(max_abs3x3(&commutation_residual(&map, &h2, &z)?))
        },
    )
}

fn commutation_hopf(seed: u64, samples: usize) -> Result<CheckResult> {
    let map = hopf_map().with_gradient_mode(GradientMode::CentralDifference);
    let h2 = target_expression(&map, "-2*(x1^2 + x2^2 + x3^2)");
    run_check(
        "reduction.commutation_hopf",
        seed,
        IDX_COMM_HOPF,
        samples,
        1e-6,
        "oscillator points in [-1.5, 1.5]^4, central differences on the map components",
        |rng| {
            let z = sample_box(rng, -1.5, 1.5, 4);
            Ok(max_abs3x3(&commutation_residual(&map, &h2, &z)?))
        },
    )
}

fn conservation_rigid_body(seed: u64, samples: usize) -> Result<CheckResult> {
    let map = angular_momentum_map().with_gradient_mode(GradientMode::CentralDifference);
    let sphere = target_expression(&map, "(L1^2 + L2^2 + L3^2)/2");
    let kinetic = target_expression(&map, "L1^2/2 + L2^2/4 + L3^2/6");
    let system = NambuSystem::new(map.target().clone(), vec![sphere, kinetic.clone()])?;
    let m2 = map.clone();
    let h0 = ScalarField::from_closure(map.source().clone(), "kinetic(L(z))", move |z| {
        kinetic.eval(&m2.apply(z)?)
    });
    // Central differences pass through 1/sin(theta) twice here (map components
    // and the composite Hamiltonian), costing ~4 digits at the band edge;
    // measured max residual 6.6e-6 over 200 draws.
    run_check(
        "reduction.conservation_rigid_body",
        seed,
        IDX_CONS_RIGID,
        samples,
        1e-4,
        EULER_BAND_DOMAIN,
        |rng| {
            let z = sample_euler_band(rng);
            let r = conservation_residual(&map, &h0, &system, &z)?;
            Ok(r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
        },
    )
}

fn conservation_hopf(seed: u64, samples: usize) -> Result<CheckResult> {
    let map = hopf_map();
    let collective = target_expression(&map, "x1^2/2 + x2^2/4 + x3^2/6");
    let h2 = target_expression(&map, "-2*(x1^2 + x2^2 + x3^2)");
    let system = NambuSystem::new(map.target().clone(), vec![collective.clone(), h2])?;
    let m2 = map.clone();
    let h0 = ScalarField::from_closure(map.source().clone(), "collective(x(z))", move |z| {
        collective.eval(&m2.apply(z)?)
    });
    // The composite Hamiltonian is quartic in z, so its central-difference
    // truncation error is genuine; measured max residual 4.4e-9 over 200 draws.
    run_check(
        "reduction.conservation_hopf",
        seed,
        IDX_CONS_HOPF,
        samples,
        1e-7,
        "oscillator points in [-1.5, 1.5]^4; collective Hamiltonian differentiated by central differences",
        |rng| {
            let z = sample_box(rng, -1.5, 1.5, 4);
            let r = conservation_residual(&map, &h0, &system, &z)?;
            Ok(r.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
        },
    )
}

fn hopf_norm(seed: u64, samples: usize) -> Result<CheckResult> {
    run_check(
        "reduction.hopf_norm",
        seed,
        IDX_HOPF_NORM,
        samples,
        1e-14,
        "oscillator points in [-1, 1]^4; |x(z)| against the squared radius of z",
        |rng| {
            let z = sample_box(rng, -1.0, 1.0, 4);
            let x = hopf(&[z[0], z[1], z[2], z[3]]);
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let r2 = z.iter().map(|v| v * v).sum::<f64>();
            Ok(norm - r2)
        },
    )
}

fn l_magnitude(seed: u64, samples: usize) -> Result<CheckResult> {
    let map = angular_momentum_map();
    run_check(
        "reduction.l_magnitude",
        seed,
        IDX_L_MAGNITUDE,
        samples,
        1e-10,
        EULER_BAND_DOMAIN,
        |rng| {
            let z = sample_euler_band(rng);
            let l = map.apply(&z)?;
            let a = (z[4] - z[5] * z[0].cos()) / z[0].sin();
            let expected = z[3] * z[3] + a * a + z[5] * z[5];
            Ok(l.iter().map(|v| v * v).sum::<f64>() - expected)
        },
    )
}

fn three_form_hopf(seed: u64, samples: usize) -> Result<CheckResult> {
    let map = hopf_map();
    run_check(
        "reduction.three_form_hopf",
        seed,
        IDX_THREE_FORM,
        samples,
        1e-8,
        "oscillator points in [-1.5, 1.5]^4; symplectic-contraction route against Jacobian minors",
        |rng| {
            let z = sample_box(rng, -1.5, 1.5, 4);
            let a = induced_three_form(&map, &z)?;
            let b = jacobian_minor_three_form(&map, &z)?;
            Ok(a.max_abs_diff(&b))
        },
    )
}

fn three_form_rank_deficient(seed: u64, samples: usize) -> Result<CheckResult> {
    let source = PhaseSpace::canonical_interleaved(&["q1", "p1", "q2", "p2"]).expect("valid");
    let target = PhaseSpace::new(&["a", "b", "c"]).expect("valid");
    let comps = vec![
        ScalarField::coordinate(source.clone(), 0).expect("q1"),
        ScalarField::coordinate(source.clone(), 1).expect("p1"),
        ScalarField::from_closure(source.clone(), "q1*p1", |z| Ok(z[0] * z[1]))
            .with_analytic_gradient(|z, out| {
                out.fill(0.0);
                out[0] = z[1];
                out[1] = z[0];
                Ok(())
            }),
    ];
    let map = MomentumMap::new(source, target, comps)?;
    let zero = ThreeForm4D::new([0.0; 4]);
    run_check(
        "reduction.three_form_rank_deficient",
        seed,
        IDX_THREE_FORM_RANK,
        samples,
        1e-9,
        "components (q1, p1, q1 p1) with dependent differentials at points in [-1.5, 1.5]^4; both routes must vanish",
        |rng| {
            let z = sample_box(rng, -1.5, 1.5, 4);
            let a = induced_three_form(&map, &z)?.max_abs_diff(&zero);
            let b = jacobian_minor_three_form(&map, &z)?.max_abs_diff(&zero);
            Ok(a.max(b))
        },
    )
}

fn wedge(seed: u64, samples: usize, chart: WedgeChart) -> Result<CheckResult> {
    let (name, idx, domain) = match chart {
        WedgeChart::HopfR1R2 => (
            "reduction.wedge_r1r2",
            IDX_WEDGE_R1R2,
            "radii in [0.5, 1.5], relative phase in [0, 2 pi); finite-difference determinant against 8 r1 r2 (r1^2 + r2^2)",
        ),
        WedgeChart::HopfSpherical => (
            "reduction.wedge_spherical",
            IDX_WEDGE_SPH,
            "radius in [0.5, 1.5], colatitude in [0.3, pi - 0.3], azimuth in [0, 2 pi); finite-difference determinant against r^2 sin(theta)",
        ),
    };
    run_check(name, seed, idx, samples, 1e-5, domain, |rng| {
        let p = match chart {
            WedgeChart::HopfR1R2 => [
                rng.random_range(0.5..1.5),
                rng.random_range(0.5..1.5),
                rng.random_range(0.0..std::f64::consts::TAU),
            ],
            WedgeChart::HopfSpherical => [
                rng.random_range(0.5..1.5),
                rng.random_range(0.3..(std::f64::consts::PI - 0.3)),
                rng.random_range(0.0..std::f64::consts::TAU),
            ],
        };
        wedge_identity_residual(chart, &p)
    })
}

fn wedge_chart_overlap(seed: u64, samples: usize) -> Result<CheckResult> {
    run_check(
        "reduction.wedge_chart_overlap",
        seed,
        IDX_WEDGE_OVERLAP,
        samples,
        1e-5,
        "spherical parameters with radius in [0.5, 1.5], colatitude in [0.3, pi - 0.3]; corresponding parameters of the two charts must map to the same point despite different fixed phase sums",
        |rng| {
            let r = rng.random_range(0.5..1.5);
            let theta = rng.random_range(0.3..(std::f64::consts::PI - 0.3));
            let phi = rng.random_range(0.0..std::f64::consts::TAU);
            let a = hopf(&chart_embedding(WedgeChart::HopfSpherical, &[r, theta, phi])?);
            let r1 = r.sqrt() * (theta / 2.0).cos();
            let r2 = r.sqrt() * (theta / 2.0).sin();
            let b = hopf(&chart_embedding(WedgeChart::HopfR1R2, &[r1, r2, phi])?);
            Ok(a.iter()
                .zip(b.iter())
                .fold(0.0f64, |acc, (u, v)| acc.max((u - v).abs())))
        },
    )
}

// ── action-angle checks ─────────────────────────────────────────────────────

fn planar_jacobian(seed: u64, samples: usize) -> Result<CheckResult> {
    let s = PhaseSpace::canonical_interleaved(&["q", "p"]).expect("valid");
    let action = ScalarField::from_closure(s.clone(), "action", |x| {
        Ok(0.5 * (x[0] * x[0] + x[1] * x[1]))
    });
    let angle = ScalarField::from_closure(s.clone(), "angle", |x| Ok(x[1].atan2(x[0])));
    run_check(
        "actionangle.planar_jacobian",
        seed,
        IDX_PLANAR_JAC,
        samples,
        1e-8,
        "annulus with radius in [0.5, 1.5], polar angle in (-2.9, 2.9) away from the atan2 branch cut; canonical bracket {action, angle} must be 1",
        |rng| {
            let rho: f64 = rng.random_range(0.5..1.5);
            let alpha: f64 = rng.random_range(-2.9..2.9);
            let x = [rho * alpha.cos(), rho * alpha.sin()];
            Ok(poisson_bracket(&action, &angle, &x)? - 1.0)
        },
    )
}

fn sample_chart_interior(rng: &mut ChaCha8Rng) -> [f64; 3] {
    // (J, mu, phi) interior: away from the poles and the azimuth branch cut.
    [
        rng.random_range(0.5..2.0),
        rng.random_range(-0.8..0.8),
        rng.random_range(0.3..2.8),
    ]
}

fn spherical_roundtrip(seed: u64, samples: usize) -> Result<CheckResult> {
    run_check(
        "actionangle.spherical_roundtrip",
        seed,
        IDX_SPH_ROUNDTRIP,
        samples,
        1e-12,
        "chart interior: action in [0.5, 2], |mu| <= 0.8, azimuth in [0.3, 2.8]; both round-trip directions",
        |rng| {
            let [j, mu, phi] = sample_chart_interior(rng);
            let x = spherical_aa_to_cartesian(j, mu, phi)?;
            let aa = cartesian_to_spherical_aa(&x)?;
            let back = spherical_aa_to_cartesian(aa.action, aa.mu, aa.phi)?;
            let mut worst = (aa.action - j)
                .abs()
                .max((aa.mu - mu).abs())
                .max((aa.phi - phi).abs());
            for (u, v) in x.iter().zip(back.iter()) {
                worst = worst.max((u - v).abs());
            }
            Ok(worst)
        },
    )
}

fn volume_action(seed: u64, samples: usize) -> Result<CheckResult> {
    let fields = spherical_chart_fields(&space3())?;
    run_check(
        "actionangle.volume_action",
        seed,
        IDX_VOLUME_ACTION,
        samples,
        1e-12,
        "chart interior points; analytic chart Jacobian determinant must be exactly 1 (the chart preserves volume)",
        |rng| {
            let [j, mu, phi] = sample_chart_interior(rng);
            let x = spherical_aa_to_cartesian(j, mu, phi)?;
            let rows: Result<Vec<Vec<f64>>> =
                fields.iter().map(|f| f.gradient(&x)).collect();
            Ok(crate::linalg::det(rows?) - 1.0)
        },
    )
}

fn random_top_params(rng: &mut ChaCha8Rng) -> TopParams {
    TopParams::new(rng.random_range(0.5..3.0), rng.random_range(0.5..3.0)).expect("positive draws")
}

fn top_flow_routes(seed: u64, samples: usize) -> Result<CheckResult> {
    run_check(
        "actionangle.top_flow_routes",
        seed,
        IDX_TOP_ROUTES,
        samples,
        1e-6,
        "moments in [0.5, 3], chart interior points; closed-form reduced flow against the determinant-bracket flow with central differences",
        |rng| {
            let params = random_top_params(rng);
            let [j, mu, phi] = sample_chart_interior(rng);
            let closed = top_reduced_flow(params, j, mu)?;
            let system = with_mode(
                &top_reduced_system(params),
                GradientMode::CentralDifference,
            );
            let v = flow_field(&system, &[j, mu, phi])?;
            let mut worst = 0.0f64;
            for i in 0..3 {
                worst = worst.max((closed[i] - v[i]).abs());
            }
            Ok(worst)
        },
    )
}

fn top_chart_pushforward(seed: u64, samples: usize) -> Result<CheckResult> {
    let chart: Vec<ScalarField> = spherical_chart_fields(&PhaseSpace::new(&["L1", "L2", "L3"])?)?
        .into_iter()
        .map(|f| f.with_gradient_mode(GradientMode::CentralDifference))
        .collect();
    run_check(
        "actionangle.top_chart_pushforward",
        seed,
        IDX_TOP_PUSHFORWARD,
        samples,
        1e-5,
        "moments in [0.5, 3], chart interior points; body flow pushed through the finite-difference chart Jacobian against the sign-reversed reduced flow",
        |rng| {
            let params = random_top_params(rng);
            let [j, mu, phi] = sample_chart_interior(rng);
            let x = spherical_aa_to_cartesian(j, mu, phi)?;
            let body = body_nambu_system([params.i1, params.i1, params.i3]);
            let v = flow_field(&body, &x)?;
            // Push the body velocity through the chart differential.
            let mut w = [0.0f64; 3];
            for (k, f) in chart.iter().enumerate() {
                let g = f.gradient(&x)?;
                w[k] = g.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            }
            // The chart swaps the Hamiltonians' roles relative to the reduced
            // system, so the pushed-forward flow is the reduced flow reversed.
            let reduced = top_reduced_flow(params, j, mu)?;
            let mut worst = 0.0f64;
            for k in 0..3 {
                worst = worst.max((w[k] + reduced[k]).abs());
            }
            Ok(worst)
        },
    )
}
