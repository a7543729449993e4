//! Acceptance suite: one test per criterion, each printing exactly one
//! pass/fail line (visible with `cargo test --test acceptance -- --nocapture`).
//! Thresholds are pinned here, not read from configuration.

use std::sync::OnceLock;
use std::time::Instant;

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use choreo::action::{minimize_action, ActionProblem, Ansatz, MinimizeOptions, MinimizeOutcome};
use choreo::analysis::{
    deviation_identity_flat, deviation_residual_curved, deviation_residual_flat,
    great_circle_test, mass_feasibility, mode_residual_curved, mode_terms_flat,
    reflection_identities, span_dimension, FeasibilityClass,
};
use choreo::canonical;
use choreo::choreography::{
    detect_symmetry_axis, normalize_to_axis, polygon_curved, polygon_flat,
    polygon_flat_with_center, ChoreographyConfig,
};
use choreo::dynamics::{energy, integrate, Scheme};
use choreo::model::{Curvature, ForceLaw, MassVector, Tolerances};
use choreo::spectral::{dft_basis, mass_modes};

const CONSTRUCTOR_RESIDUAL: f64 = 1e-8;
const CONSTRUCTOR_SECONDS: f64 = 5.0;
const IDENTITY_RESIDUAL: f64 = 1e-10;
const BRIDGE_TOLERANCE: f64 = 1e-10;
const SPECTRAL_GAP_MIN: f64 = 1e3;
const FEASIBILITY_SECONDS: f64 = 30.0;
const MODE_EXCLUSION_MIN: f64 = 1e-4;
const REFLECTION_EQUAL_MAX: f64 = 1e-3;
const REFLECTION_PERTURBED_MIN: f64 = 1e-2;
const ORTHONORMALITY_TOL: f64 = 1e-13;
const GRADIENT_REL_TOL: f64 = 1e-6;
const ENERGY_RATIO_MIN: f64 = 12.0;
const CONSTRAINT_DRIFT_MAX: f64 = 1e-8;
const SEARCH_RESIDUAL: f64 = 1e-4;
const SEARCH_SECONDS: f64 = 60.0;

const CURVED_CASES: [(Curvature, usize, f64); 6] = [
    (Curvature::Positive, 3, 0.0),
    (Curvature::Positive, 3, 0.5),
    (Curvature::Positive, 4, 0.5),
    (Curvature::Positive, 5, 0.3),
    (Curvature::Negative, 3, 1.2),
    (Curvature::Negative, 5, 1.5),
];

fn report(criterion: usize, ok: bool, detail: &str) {
    println!("criterion {criterion}: {} — {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {criterion} failed: {detail}");
}

fn flat_polygons() -> Vec<(usize, ChoreographyConfig)> {
    (2..=8)
        .map(|n| (n, polygon_flat(n, 1.0, &ForceLaw::classical()).unwrap()))
        .collect()
}

fn curved_polygons() -> Vec<((Curvature, usize, f64), ChoreographyConfig)> {
    CURVED_CASES
        .iter()
        .map(|&(sigma, n, z)| ((sigma, n, z), polygon_curved(n, z, sigma, 0.0).unwrap()))
        .collect()
}

/// The laboratory's figure eight: the default search at order 12, shared
/// by the feasibility and reflection criteria.
fn eight() -> &'static MinimizeOutcome {
    static EIGHT: OnceLock<MinimizeOutcome> = OnceLock::new();
    EIGHT.get_or_init(|| {
        let opts = MinimizeOptions { seed: 7, ..MinimizeOptions::default() };
        minimize_action(
            3,
            &MassVector::equal(3, 1.0).unwrap(),
            &ForceLaw::classical(),
            Ansatz::Eight,
            &opts,
        )
        .expect("search runs")
    })
}

#[test]
fn criterion_1_constructor_soundness() {
    let mut worst = 0.0f64;
    let mut slowest = 0.0f64;
    for (n, config) in flat_polygons() {
        let t0 = Instant::now();
        let check = config.verify(128).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        worst = worst.max(check.max_residual);
        slowest = slowest.max(secs);
        assert!(
            check.max_residual < CONSTRUCTOR_RESIDUAL && secs < CONSTRUCTOR_SECONDS,
            "flat n={n}: residual {:.3e}, {secs:.2}s",
            check.max_residual
        );
    }
    for ((sigma, n, z), config) in curved_polygons() {
        let t0 = Instant::now();
        let check = config.verify(128).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        worst = worst.max(check.max_residual);
        slowest = slowest.max(secs);
        assert!(
            check.max_residual < CONSTRUCTOR_RESIDUAL && secs < CONSTRUCTOR_SECONDS,
            "curved ({sigma:?},{n},{z}): residual {:.3e}, {secs:.2}s",
            check.max_residual
        );
    }
    report(
        1,
        worst < CONSTRUCTOR_RESIDUAL && slowest < CONSTRUCTOR_SECONDS,
        &format!(
            "7 flat + 6 curved constructors, max residual {worst:.2e}, slowest {slowest:.3}s"
        ),
    );
}

#[test]
fn criterion_2_identity_suite() {
    let mut worst = 0.0f64;
    for (_, config) in flat_polygons() {
        for k in 0..config.n_bodies() as isize {
            let (with_f, without_f) = deviation_residual_flat(&config, k, 128).unwrap();
            worst = worst.max(with_f).max(without_f);
        }
    }
    let mut worst_curved = 0.0f64;
    for (_, config) in curved_polygons() {
        for k in 0..config.n_bodies() as isize {
            worst_curved = worst_curved.max(deviation_residual_curved(&config, k, 128).unwrap());
        }
    }
    report(
        2,
        worst < IDENTITY_RESIDUAL && worst_curved < IDENTITY_RESIDUAL,
        &format!(
            "equal-mass deviation identities: flat max {worst:.2e}, curved max {worst_curved:.2e}"
        ),
    );
}

#[test]
fn criterion_3_linearity_bridge() {
    let config = polygon_flat(5, 1.0, &ForceLaw::classical()).unwrap();
    let basis = dft_basis(5).unwrap();
    let sqrt_n = 5.0f64.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let masses =
            MassVector::new((0..5).map(|_| rng.random_range(0.2..3.0)).collect()).unwrap();
        let probe = ChoreographyConfig { masses: masses.clone(), ..config.clone() };
        let modes = mass_modes(&masses).unwrap();
        let t = rng.random_range(0.0..5.0);
        let k = rng.random_range(0..5i32) as isize;
        let (direct_f, direct_c) = deviation_identity_flat(&probe, k, t).unwrap();
        let mut combo_f = [Complex64::ZERO; 2];
        let mut combo_c = [Complex64::ZERO; 2];
        for l in 1..5 {
            let (mf, mc) = mode_terms_flat(&probe, l, t).unwrap();
            // Deviations at slot k+j carry λ^{k+j} = λ^{k+1}·λ^{j−1}.
            let w = modes.get(l) * basis.eigenvalue(l as isize).powi(k as i32 + 1) / sqrt_n;
            for d in 0..2 {
                combo_f[d] += w * mf[d];
                combo_c[d] += w * mc[d];
            }
        }
        for d in 0..2 {
            worst = worst
                .max((combo_f[d].re - direct_f[d]).abs())
                .max(combo_f[d].im.abs())
                .max((combo_c[d].re - direct_c[d]).abs())
                .max(combo_c[d].im.abs());
        }
    }
    report(
        3,
        worst < BRIDGE_TOLERANCE,
        &format!("100 random mass vectors on the n=5 polygon, worst pointwise gap {worst:.2e}"),
    );
}

#[test]
fn criterion_4_flat_rigidity() {
    let tol = Tolerances::default();
    let mut cases: Vec<(String, ChoreographyConfig, usize)> = (3..=5)
        .map(|n| {
            (format!("polygon n={n}"), polygon_flat(n, 1.0, &ForceLaw::classical()).unwrap(), 2)
        })
        .collect();
    cases.push(("figure eight".into(), eight().config.clone(), 2));

    let mut min_gap = f64::INFINITY;
    let mut slowest = 0.0f64;
    for (name, config, expected_d) in &cases {
        let t0 = Instant::now();
        let profile = span_dimension(config, 128, &tol).unwrap();
        let feas = mass_feasibility(config, 128, &tol).unwrap();
        let secs = t0.elapsed().as_secs_f64();
        slowest = slowest.max(secs);
        let gap = feas.spectral_gap.unwrap_or(0.0);
        min_gap = min_gap.min(gap);
        assert_eq!(profile.dim, *expected_d, "{name}: span dimension");
        assert_eq!(feas.nullspace_dim, 0, "{name}: nullspace");
        assert_eq!(feas.classification, FeasibilityClass::Rigid, "{name}");
        assert!(gap >= SPECTRAL_GAP_MIN, "{name}: gap {gap:.2e}");
        assert!(secs < FEASIBILITY_SECONDS, "{name}: {secs:.1}s");
    }
    report(
        4,
        min_gap >= SPECTRAL_GAP_MIN && slowest < FEASIBILITY_SECONDS,
        &format!(
            "nullspace dim 0 for polygons n=3,4,5 and the eight; smallest spectral gap {min_gap:.1e}, slowest {slowest:.2}s"
        ),
    );
}

#[test]
fn criterion_5_curved_mode_exclusion() {
    let tol = Tolerances::default();
    let required: &[(usize, &[usize])] = &[(3, &[1, 2]), (4, &[1, 3]), (5, &[1, 2, 3, 4])];
    let mut min_residual = f64::INFINITY;
    for ((sigma, n, z), config) in curved_polygons() {
        let great = great_circle_test(&config, 128, &tol).unwrap();
        let expect_great = sigma == Curvature::Positive && z == 0.0;
        assert_eq!(great, expect_great, "great circle flag for ({sigma:?},{n},{z})");
        if expect_great {
            continue;
        }
        let ls = required.iter().find(|(m, _)| *m == n).unwrap().1;
        for &l in ls {
            let r = mode_residual_curved(&config, l, 128).unwrap();
            min_residual = min_residual.min(r);
            assert!(
                r > MODE_EXCLUSION_MIN,
                "({sigma:?},{n},{z}) mode {l}: residual {r:.3e}"
            );
        }
    }
    report(
        5,
        min_residual > MODE_EXCLUSION_MIN,
        &format!(
            "non-great-circle modes all excluded, smallest residual {min_residual:.2e}; great-circle flag true only at z=0 spherical"
        ),
    );
}

#[test]
fn criterion_6_fixed_center_variants() {
    let tol = Tolerances::default();
    let mut worst_residual = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for n in 3..=5 {
        let config = polygon_flat_with_center(n, 1.0, &ForceLaw::classical(), 1.0).unwrap();
        let check = config.verify(128).unwrap();
        worst_residual = worst_residual.max(check.max_residual);
        assert!(check.max_residual < CONSTRUCTOR_RESIDUAL, "flat+center n={n}");
        let feas = mass_feasibility(&config, 128, &tol).unwrap();
        assert_eq!(feas.nullspace_dim, 0, "flat+center n={n}");
        min_gap = min_gap.min(feas.spectral_gap.unwrap_or(0.0));
    }
    let mut min_mode = f64::INFINITY;
    for (sigma, z) in [(Curvature::Positive, 0.5), (Curvature::Negative, 1.2)] {
        let config = polygon_curved(3, z, sigma, 1.0).unwrap();
        let check = config.verify(128).unwrap();
        worst_residual = worst_residual.max(check.max_residual);
        assert!(check.max_residual < CONSTRUCTOR_RESIDUAL, "curved+center {sigma:?}");
        for l in 1..3 {
            let r = mode_residual_curved(&config, l, 128).unwrap();
            min_mode = min_mode.min(r);
            assert!(r > MODE_EXCLUSION_MIN, "curved+center {sigma:?} mode {l}");
        }
    }
    report(
        6,
        worst_residual < CONSTRUCTOR_RESIDUAL
            && min_gap >= SPECTRAL_GAP_MIN
            && min_mode > MODE_EXCLUSION_MIN,
        &format!(
            "fixed-center residual max {worst_residual:.2e}; flat nullspace dim 0 (gap {min_gap:.1e}), curved modes excluded (min {min_mode:.2e})"
        ),
    );
}

#[test]
fn criterion_7_reflection_identities() {
    let config = &eight().config;
    let axis = detect_symmetry_axis(&config.path, 256, 1e-6)
        .unwrap()
        .expect("the eight has a reflection axis");
    let normalized =
        ChoreographyConfig { path: normalize_to_axis(&config.path, &axis).unwrap(), ..config.clone() };

    let mut equal_worst = [0.0f64; 4];
    for (k, l) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let check = reflection_identities(&normalized, k, l, 128).unwrap();
        for i in 0..4 {
            equal_worst[i] = equal_worst[i].max(check.residuals[i]);
        }
    }
    let equal_ok = equal_worst.iter().all(|&r| r < REFLECTION_EQUAL_MAX);

    let mut masses = normalized.masses.as_slice().to_vec();
    masses[0] *= 1.1;
    let perturbed = ChoreographyConfig {
        masses: MassVector::new(masses).unwrap(),
        ..normalized.clone()
    };
    let mut perturbed_worst = 0.0f64;
    for (k, l) in [(0usize, 1usize), (0, 2), (1, 2)] {
        let check = reflection_identities(&perturbed, k, l, 128).unwrap();
        for r in check.residuals {
            perturbed_worst = perturbed_worst.max(r);
        }
    }
    let perturbed_ok = perturbed_worst > REFLECTION_PERTURBED_MIN;

    report(
        7,
        equal_ok && perturbed_ok,
        &format!(
            "axis at {:.4} rad (residual {:.1e}); equal-mass identity residuals ≤ {:.1e}; +10% on one mass drives the worst to {perturbed_worst:.2e}",
            axis.angle,
            axis.residual,
            equal_worst.iter().cloned().fold(0.0, f64::max)
        ),
    );
}

#[test]
fn criterion_8_numerical_hygiene() {
    // DFT orthonormality.
    let mut ortho_worst = 0.0f64;
    for n in [2usize, 3, 4, 8, 16, 32, 64] {
        let basis = dft_basis(n).unwrap();
        for i in 1..=n {
            for j in 1..=n {
                let inner = choreo::spectral::SpectralBasis::inner(basis.vector(i), basis.vector(j));
                let expected = if i == j { 1.0 } else { 0.0 };
                ortho_worst = ortho_worst.max((inner - Complex64::from(expected)).norm());
            }
        }
    }
    let ortho_ok = ortho_worst < ORTHONORMALITY_TOL;

    // Analytic action gradient against central finite differences.
    let masses = MassVector::equal(3, 1.0).unwrap();
    let f = ForceLaw::classical();
    let mut grad_worst = 0.0f64;
    for (ansatz, order) in [(Ansatz::Eight, 6usize), (Ansatz::Free, 4)] {
        let problem = ActionProblem::new(3, &masses, &f, ansatz, order, 128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut params = vec![0.0; problem.n_params()];
        for p in params.iter_mut() {
            *p = rng.random_range(-0.3..0.3);
        }
        params[0] += 1.0;
        let (_, grad) = problem.action_with_gradient(&params).unwrap();
        let h = 1e-5;
        let mut diff_sq = 0.0;
        let mut norm_sq = 0.0;
        for i in 0..params.len() {
            let mut plus = params.clone();
            plus[i] += h;
            let mut minus = params.clone();
            minus[i] -= h;
            let fd =
                (problem.action(&plus).unwrap() - problem.action(&minus).unwrap()) / (2.0 * h);
            diff_sq += (grad[i] - fd) * (grad[i] - fd);
            norm_sq += grad[i] * grad[i];
        }
        grad_worst = grad_worst.max((diff_sq / norm_sq).sqrt());
    }
    let grad_ok = grad_worst < GRADIENT_REL_TOL;

    // Energy-drift convergence of rk4 between dt and dt/2.
    let config = polygon_flat(3, 1.0, &ForceLaw::classical()).unwrap();
    let problem = config.problem();
    let drift = |dt: f64| {
        let steps = (config.path.period() / dt).round() as usize;
        let traj = integrate(config.state_at(0.0), &problem, dt, steps, Scheme::Rk4).unwrap();
        let e0 = energy(&problem, &traj.states[0]).unwrap();
        traj.states
            .iter()
            .map(|s| (energy(&problem, s).unwrap() - e0).abs())
            .fold(0.0, f64::max)
    };
    let ratio = drift(2e-2) / drift(1e-2);
    let ratio_ok = ratio >= ENERGY_RATIO_MIN;

    // Curved constraint drift over one projected period.
    let curved = polygon_curved(3, 0.5, Curvature::Positive, 0.0).unwrap();
    let steps = (curved.path.period() / 1e-3).round() as usize;
    let traj = integrate(
        curved.state_at(0.0),
        &curved.problem(),
        curved.path.period() / steps as f64,
        steps,
        Scheme::Rk4Projected,
    )
    .unwrap();
    let drift_curved = traj.max_constraint_defect();
    let drift_ok = drift_curved < CONSTRAINT_DRIFT_MAX;

    report(
        8,
        ortho_ok && grad_ok && ratio_ok && drift_ok,
        &format!(
            "orthonormality {ortho_worst:.1e}; gradient vs FD {grad_worst:.1e}; rk4 drift ratio {ratio:.1}; constraint drift {drift_curved:.1e}"
        ),
    );
}

#[test]
fn criterion_9_search_reproduction() {
    let opts = MinimizeOptions { seed: 7, ..MinimizeOptions::default() };
    let masses = MassVector::equal(3, 1.0).unwrap();
    let f = ForceLaw::classical();

    let t0 = Instant::now();
    let first = minimize_action(3, &masses, &f, Ansatz::Eight, &opts).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let second = minimize_action(3, &masses, &f, Ansatz::Eight, &opts).unwrap();

    let deterministic = first.action.to_bits() == second.action.to_bits()
        && canonical::to_canonical(&first.config).unwrap()
            == canonical::to_canonical(&second.config).unwrap();
    assert!(deterministic, "same seed must reproduce the same configuration");
    assert!(secs < SEARCH_SECONDS, "search took {secs:.1}s");

    let residual = first.check.max_residual;
    report(
        9,
        residual < SEARCH_RESIDUAL,
        &format!(
            "order-12 search: deterministic, {secs:.2}s, residual {residual:.2e} vs target {SEARCH_RESIDUAL:.0e} — \
             the order-12 coefficient space cannot represent the eight below ≈7e-2 in this metric \
             (harmonics 13+ carry ≈1e-4 of position amplitude, amplified by ω² ≈ 740 in the \
             acceleration residual); see eight_search_reaches_target_with_enough_harmonics"
        ),
    );
}

/// The same search pipeline reaches the criterion-9 residual target once
/// the coefficient space has enough harmonics to carry the eight.
#[test]
fn eight_search_reaches_target_with_enough_harmonics() {
    let opts =
        MinimizeOptions { order: 26, iterations: 400, grid: 512, seed: 7, restarts: 0 };
    let outcome = minimize_action(
        3,
        &MassVector::equal(3, 1.0).unwrap(),
        &ForceLaw::classical(),
        Ansatz::Eight,
        &opts,
    )
    .unwrap();
    assert!(
        outcome.check.max_residual < SEARCH_RESIDUAL,
        "order-26 residual {:.3e}",
        outcome.check.max_residual
    );
}
