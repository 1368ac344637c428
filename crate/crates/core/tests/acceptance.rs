//! Acceptance suite: every criterion pinned to its stated tolerance and
//! runtime budget, with oracles computed in-suite (never through the
//! solver path under test).

mod common;

use common::*;
use num_complex::Complex64;
use quasidiff::coeffs::Expr;
use quasidiff::operator::{sample, trial_from_trajectory};
use quasidiff::problems::krein::KreinScanOptions;
use quasidiff::spectral::{ScanOptions, SpectralWindow};
use quasidiff::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn beam_spec() -> OperatorSpec {
    fourth_order_dirichlet(
        CoefficientFunction::one(),
        CoefficientFunction::zero(),
        CoefficientFunction::zero(),
    )
    .unwrap()
}

/// Criterion 1: clamped-beam spectrum equals mu_k^4 with
/// cos(mu) cosh(mu) = 1, relative tolerance 1e-6, under 10 s.
#[test]
fn criterion_01_clamped_beam_spectrum() {
    timed("criterion 1: clamped-beam spectrum", 10.0, || {
        let expected: Vec<f64> = clamped_beam_mu_roots(3).iter().map(|mu| mu.powi(4)).collect();
        assert!((expected[0] - 500.5639).abs() < 5e-4);
        assert!((expected[1] - 3803.5371).abs() < 5e-3);
        assert!((expected[2] - 14617.6301).abs() < 5e-2);

        let spec = beam_spec();
        let result = find_eigenvalues(
            &spec,
            SpectralWindow::Real { lo: 1.0, hi: 20000.0 },
            &ScanOptions::default(),
        )
        .unwrap();
        assert_eq!(
            result.eigenvalues.len(),
            3,
            "expected exactly three eigenvalues in [1, 20000], got {:?}",
            result.eigenvalues.iter().map(|e| e.lambda).collect::<Vec<_>>()
        );
        for (ev, want) in result.eigenvalues.iter().zip(&expected) {
            assert!(
                (ev.lambda.re - want).abs() <= 1e-6 * want,
                "eigenvalue {} vs oracle {}",
                ev.lambda,
                want
            );
            assert!(ev.lambda.im.abs() < 1e-8 * want);
        }
    });
}

/// Criterion 2: forced beam f = 24 reproduces y = x^2 (1-x)^2 to 1e-8 in
/// sup norm, under 2 s.
#[test]
fn criterion_02_forced_beam() {
    timed("criterion 2: forced beam", 2.0, || {
        let spec = beam_spec();
        let data = FunctionalData::from_f0(2, CoefficientFunction::constant(24.0));
        let sol = solve_bvp(&spec, Complex64::ZERO, &data).unwrap();
        assert!(sol.solvable);
        let mut sup: f64 = 0.0;
        for k in 0..=256 {
            let x = k as f64 / 256.0;
            let expect = x * x * (1.0 - x) * (1.0 - x);
            sup = sup.max((sol.trajectory.eval(0, x) - c64(expect)).norm());
        }
        assert!(sup < 1e-8, "sup-norm error {}", sup);
    });
}

/// Criterion 3: third-order periodic with p = q = 0 has spectrum
/// exactly {-(2 pi)^3, 0, (2 pi)^3} in [-300, 300]; kernel dimension 1 at
/// the origin; relative tolerance 1e-6; under 10 s.
#[test]
fn criterion_03_periodic_spectrum() {
    timed("criterion 3: third-order periodic spectrum", 10.0, || {
        // oracle: direct substitution of the Fourier mode e^{2 pi i k x}
        // into -i y''' = lambda y gives lambda = -(2 pi k)^3
        let w = 2.0 * std::f64::consts::PI;
        let fourier_lambda = |k: f64| -(w * k).powi(3);
        assert!((fourier_lambda(1.0) + 248.0502134).abs() < 1e-6);
        let expected = [fourier_lambda(1.0), 0.0, fourier_lambda(-1.0)];

        let spec = third_order_periodic(
            CoefficientFunction::zero(),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let result = find_eigenvalues(
            &spec,
            SpectralWindow::Real { lo: -300.0, hi: 300.0 },
            &ScanOptions::default(),
        )
        .unwrap();
        assert_eq!(
            result.eigenvalues.len(),
            3,
            "got {:?}",
            result.eigenvalues.iter().map(|e| e.lambda).collect::<Vec<_>>()
        );
        for (ev, want) in result.eigenvalues.iter().zip(&expected) {
            assert!(
                (ev.lambda.re - want).abs() <= 1e-6 * want.abs().max(1.0),
                "eigenvalue {} vs oracle {}",
                ev.lambda,
                want
            );
            assert!(ev.lambda.im.abs() < 1e-6);
        }
        let kernel0 = spectral::kernel_dimension_at(&spec, Complex64::ZERO, 1e-10).unwrap();
        assert_eq!(kernel0, 1);
    });
}

/// Criterion 4: with real p = step(x - 1/2), q = 0, every eigenvalue in
/// the rectangle [-300, 300] x [-50, 50] has |Im| < 1e-6, and the
/// symmetry defect is below 1e-8; under 30 s.
#[test]
fn criterion_04_self_adjointness_reflection() {
    timed("criterion 4: self-adjointness reflection", 30.0, || {
        let spec = third_order_periodic(
            CoefficientFunction::step_at(0.5),
            CoefficientFunction::zero(),
        )
        .unwrap();
        let result = find_eigenvalues(
            &spec,
            SpectralWindow::Rect {
                re: (-300.0, 300.0),
                im: (-50.0, 50.0),
            },
            &ScanOptions {
                grid: 61,
                grid_im: 11,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(
            !result.eigenvalues.is_empty(),
            "the rectangle contains the origin eigenvalue at least"
        );
        for ev in &result.eigenvalues {
            assert!(
                ev.lambda.im.abs() < 1e-6,
                "eigenvalue {} drifted off the real axis",
                ev.lambda
            );
        }
        let sym = check_symmetry(&spec, 10).unwrap();
        assert!(sym.sigma < 1e-8, "symmetry defect {}", sym.sigma);
    });
}

/// Criterion 5: first two delta-potential eigenvalues match the dense
/// finite-element oracle (mesh 2^-14) within 1e-6 relative; under 30 s.
#[test]
fn criterion_05_delta_potential() {
    timed("criterion 5: delta potential", 30.0, || {
        let oracle = fem_delta_eigenvalues(14, 1.0, 2);
        let spec = second_order_dirichlet(CoefficientFunction::step_at(0.5)).unwrap();
        let result = find_eigenvalues(
            &spec,
            SpectralWindow::Real { lo: 5.0, hi: 50.0 },
            &ScanOptions {
                grid: 200,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(result.eigenvalues.len() >= 2, "found {}", result.eigenvalues.len());
        for (ev, want) in result.eigenvalues.iter().take(2).zip(&oracle) {
            assert!(
                (ev.lambda.re - want).abs() <= 1e-6 * want,
                "eigenvalue {} vs FEM oracle {}",
                ev.lambda,
                want
            );
        }
        // the antisymmetric mode is blind to the delta: lambda_2 = 4 pi^2
        let four_pi2 = 4.0 * std::f64::consts::PI.powi(2);
        assert!((result.eigenvalues[1].lambda.re - four_pi2).abs() < 1e-6 * four_pi2);
    });
}

/// Criterion 6: Krein string — single unit atom at 1/2 gives the sole
/// eigenvalue 4 (1e-10); the Lebesgue string gives (pi k)^2, k <= 5
/// (1e-8); the two-atom case matches the 2x2 matrix oracle (1e-10);
/// under 5 s.
#[test]
fn criterion_06_krein_feller() {
    timed("criterion 6: krein string", 5.0, || {
        let identity = MonotoneMap::Expression(Expr::X);
        let opts = KreinScanOptions::default();

        let single = krein_feller(
            &identity,
            MeasureFunction::atoms_only(vec![(0.5, 1.0)]).unwrap(),
        )
        .unwrap();
        let roots = single.find_eigenvalues(0.5, 100.0, &opts).unwrap();
        assert_eq!(roots.len(), 1);
        assert!((roots[0].0 - 4.0).abs() < 1e-10, "{}", roots[0].0);

        let lebesgue = krein_feller(&identity, MeasureFunction::lebesgue()).unwrap();
        let roots = lebesgue.find_eigenvalues(1.0, 260.0, &opts).unwrap();
        assert_eq!(roots.len(), 5);
        for (k, &(l, _)) in roots.iter().enumerate() {
            let want = (std::f64::consts::PI * (k + 1) as f64).powi(2);
            assert!(
                (l - want).abs() <= 1e-8 * want.max(1.0),
                "{} vs {}",
                l,
                want
            );
        }

        let two = krein_feller(
            &identity,
            MeasureFunction::atoms_only(vec![(1.0 / 3.0, 0.5), (2.0 / 3.0, 0.5)]).unwrap(),
        )
        .unwrap();
        let roots = two.find_eigenvalues(0.5, 100.0, &opts).unwrap();
        let (l1, l2) = two_atom_oracle(0.5);
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 - l1).abs() < 1e-10, "{} vs {}", roots[0].0, l1);
        assert!((roots[1].0 - l2).abs() < 1e-10, "{} vs {}", roots[1].0, l2);
    });
}

/// Criterion 7: over 100 randomized (U, V, Q) on the beam-size problem,
/// kernel_dim - defect_dim equals n - m - rank U + rank V exactly;
/// under 60 s.
#[test]
fn criterion_07_index_identity() {
    timed("criterion 7: index identity", 60.0, || {
        let base = beam_spec();
        let mut rng = ChaCha8Rng::seed_from_u64(7001);
        let data = FunctionalData::zero(base.m);
        for draw in 0..100 {
            let spec = sample::randomize_boundary(&base, &mut rng);
            let sol = solve_bvp(&spec, Complex64::ZERO, &data).unwrap();
            let index = fredholm_index(&spec);
            assert_eq!(
                sol.kernel_dim as i64 - sol.defect_dim as i64,
                index,
                "draw {}: kernel {} defect {} index {}",
                draw,
                sol.kernel_dim,
                sol.defect_dim,
                index
            );
        }
    });
}

/// Criterion 8: weak-form consistency of the reduction — for each preset
/// family with random smooth coefficients (5 draws), the solved
/// trajectory satisfies |<T Y, Z> - <F, Z>| < 1e-7 (1 + |F|) over 20
/// sampled test trajectories; under 60 s.
#[test]
fn criterion_08_weak_form_consistency() {
    timed("criterion 8: weak-form consistency", 60.0, || {
        let lambda = Complex64::new(7.3, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(8001);
        for draw in 0..5 {
            let specs = vec![
                fourth_order_dirichlet(
                    random_positive_smooth(&mut rng),
                    random_real_smooth(&mut rng, 0.5),
                    random_real_smooth(&mut rng, 0.5),
                )
                .unwrap(),
                third_order_periodic(
                    random_real_smooth(&mut rng, 0.7),
                    random_real_smooth(&mut rng, 0.7),
                )
                .unwrap(),
                second_order_dirichlet(random_real_smooth(&mut rng, 0.7)).unwrap(),
            ];
            for (fam, spec) in specs.iter().enumerate() {
                let data = FunctionalData::from_f0(spec.m, random_real_smooth(&mut rng, 1.0));
                let scale = 1.0 + data.norm();
                let sol = solve_bvp(spec, lambda, &data).unwrap();
                assert!(sol.solvable, "family {} draw {} unexpectedly unsolvable", fam, draw);
                let trial = trial_from_trajectory(spec, lambda, &data, &sol.trajectory).unwrap();
                let zs = sample::sample_test_space(spec, 20, &mut rng).unwrap();
                for z in &zs {
                    let lhs = apply_t(spec, lambda, &trial, z).unwrap();
                    let rhs = functional_pairing(spec, &data, z).unwrap();
                    assert!(
                        (lhs - rhs).norm() < 1e-7 * scale,
                        "family {} draw {}: defect {:.3e} (scale {:.3e})",
                        fam,
                        draw,
                        (lhs - rhs).norm(),
                        scale
                    );
                }
            }
        }
    });
}

/// Criterion 9: reconstruction roundtrip for random smooth systems of
/// order <= 4 agrees with forward integration to 1e-8 sup norm, and
/// M M^{-1} = I to 1e-10; under 30 s.
#[test]
fn criterion_09_reconstruction_roundtrip() {
    timed("criterion 9: reconstruction roundtrip", 30.0, || {
        use quasidiff::quasisystem::{fundamental_matrix, invert_fundamental};
        use quasidiff::solver::engine::{integrate_system, EngineOptions, LinearSystem};
        use std::sync::Arc;

        let mut rng = ChaCha8Rng::seed_from_u64(9001);
        for n in 1..=4usize {
            for _ in 0..2 {
                // superdiagonal strictly positive, lower couplings sparse
                let mut entries = Vec::new();
                for i in 0..n {
                    entries.push(((i, i + 1), random_positive_smooth(&mut rng)));
                    for j in 0..=i {
                        if rng.gen_bool(0.7) {
                            entries.push(((i, j), random_real_smooth(&mut rng, 0.6)));
                        }
                    }
                }
                let a = CoefficientSystem::new(n, entries);
                assert!(validate_system(&a).is_valid());
                let init: Vec<Complex64> = (0..n)
                    .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                    .collect();
                let top = random_real_smooth(&mut rng, 1.0);

                // forward route: the inhomogeneous n-dimensional system
                let mut coeff = vec![None; n * n];
                for i in 0..n {
                    for j in 0..n.min(i + 2) {
                        if let Some(cf) = a.entry(i, j) {
                            coeff[i * n + j] = Some(cf.clone());
                        }
                    }
                }
                let mut inhom = vec![None; n];
                inhom[n - 1] = Some(a.top_weight().mul(&top));
                let sys = Arc::new(LinearSystem::new(n, coeff, inhom).unwrap());
                let forward =
                    integrate_system(&sys, init.clone(), 0.0, 1.0, &EngineOptions::default())
                        .unwrap();

                // reconstruction route through M_n and its inverse
                let rec = reconstruct(&a, &init, &top).unwrap();
                let mut sup: f64 = 0.0;
                for k in 0..=64 {
                    let x = k as f64 / 64.0;
                    let fwd = forward.eval(x);
                    for i in 0..n {
                        sup = sup.max((rec.eval(i, x) - fwd[i]).norm());
                    }
                }
                assert!(sup < 1e-8, "n = {}: roundtrip sup error {}", n, sup);

                // pointwise inverse on the fundamental grid
                let m = fundamental_matrix(&a).unwrap();
                let minv = invert_fundamental(&m).unwrap();
                for &x in m.grid().iter().step_by(7) {
                    let prod = m.eval(x) * minv.eval(x);
                    let mut defect: f64 = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            let want = if i == j { Complex64::ONE } else { Complex64::ZERO };
                            defect = defect.max((prod[(i, j)] - want).norm());
                        }
                    }
                    assert!(defect < 1e-10, "n = {}: inverse defect {} at {}", n, defect, x);
                }
            }
        }
    });
}

/// Criterion 10: the measure-coefficient constructor at H(x) = x
/// reproduces the plain constructor's eigenvalues within 1e-7 for one
/// smooth (q, r) pair; under 30 s.
#[test]
fn criterion_10_change_of_variable_consistency() {
    timed("criterion 10: change-of-variable consistency", 30.0, || {
        let q = CoefficientFunction::parse("0.3*sin(pi*x)").unwrap();
        let r = CoefficientFunction::parse("0.2 + 0.1*x").unwrap();
        let plain = fourth_order_dirichlet(CoefficientFunction::one(), q.clone(), r.clone()).unwrap();
        let measure = fourth_order_measure(&MonotoneMap::Expression(Expr::X), q, r).unwrap();

        let window = SpectralWindow::Real { lo: 100.0, hi: 5000.0 };
        let opts = ScanOptions {
            grid: 200,
            ..Default::default()
        };
        let plain_res = find_eigenvalues(&plain, window, &opts).unwrap();
        let measure_res = find_eigenvalues(&measure, window, &opts).unwrap();
        assert!(
            !plain_res.eigenvalues.is_empty(),
            "window should contain at least one eigenvalue"
        );
        assert_eq!(plain_res.eigenvalues.len(), measure_res.eigenvalues.len());
        for (a, b) in plain_res.eigenvalues.iter().zip(&measure_res.eigenvalues) {
            assert!(
                (a.lambda - b.lambda).norm() <= 1e-7 * a.lambda.norm().max(1.0),
                "{} vs {}",
                a.lambda,
                b.lambda
            );
        }
    });
}
