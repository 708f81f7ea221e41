use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use poscub::lscf::{exactness_residual, ls_weights, moment_residual, try_ls_rule};
use poscub::points::{generate_in_domain, DomainSampler};
use poscub::spaces::moments;
use poscub::subsample::{nnls_weights, steinitz_reduce, SubsampleMethod};
use poscub::{build_positive_lscf, BasisSpec, BuildOptions, CubatureRule, Domain, GeneratorSpec, PointSet, Problem, RuleKind, WeightFunction};

fn generator() -> impl Strategy<Value = GeneratorSpec> {
    prop_oneof![Just(GeneratorSpec::halton()), Just(GeneratorSpec::sobol()), any::<u64>().prop_map(GeneratorSpec::random)]
}

fn domain() -> impl Strategy<Value = Domain> {
    prop_oneof![
        (prop::collection::vec(-2.0..2.0f64, 2), 0.1..3.0f64).prop_map(|(c, r)| Domain::new_ball(c, r).unwrap()),
        (prop::collection::vec(-2.0..0.0f64, 2), prop::collection::vec(0.1..2.0f64, 2))
            .prop_map(|(lo, hi)| Domain::new_box(lo, hi).unwrap()),
        Just(Domain::disk_and_square()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generated_points_lie_in_the_domain(d in domain(), g in generator(), count in 1usize..200) {
        let pts = generate_in_domain(&g, &d, &WeightFunction::One, count).unwrap();
        prop_assert_eq!(pts.len(), count);
        for x in pts.iter() {
            prop_assert!(d.contains(x).unwrap());
        }
    }

    #[test]
    fn positivity_flag_matches_weights(w in prop::collection::vec(-1.0..1.0f64, 1..20)) {
        let coords: Vec<f64> = (0..w.len()).map(|i| i as f64 / 20.0).collect();
        let pts = PointSet::from_points(1, &coords.iter().map(|&x| vec![x]).collect::<Vec<_>>()).unwrap();
        let rule = CubatureRule::new(pts, w.clone(), None, None, RuleKind::LeastSquares);
        prop_assert_eq!(rule.positive, w.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn full_rank_ls_rules_are_exact(degree in 0usize..5, factor in 1usize..4, g in generator(), d in domain()) {
        let problem = Problem::new(&BasisSpec::Algebraic { degree }, &d, &WeightFunction::One).unwrap();
        let mut sampler = DomainSampler::new(&g, &d, &WeightFunction::One).unwrap();
        let (attempt, rule) = try_ls_rule(&problem, &mut sampler, factor * problem.k(), 1e-10).unwrap();
        prop_assume!(attempt.rank == problem.k());
        let pts = sampler.points().prefix(attempt.n);
        let phi = problem.basis_matrix(&pts).unwrap();
        let w = ls_weights(&phi, &problem.discrete_weights(&pts).unwrap(), &problem.moments).unwrap();
        prop_assert!(moment_residual(&phi, &w, &problem.moments.values) <= 1e-9 * problem.residual_scale());
        // the constant is in the space, so the weights sum to the volume
        assert_relative_eq!(w.iter().sum::<f64>(), d.volume(), max_relative = 1e-9);
        if let Some(rule) = rule {
            prop_assert!(rule.positive);
        }
    }

    #[test]
    fn steinitz_conserves_moments(degree in 1usize..5, seed in any::<u64>()) {
        let d = Domain::unit_ball(2).unwrap();
        let problem = Problem::new(&BasisSpec::Algebraic { degree }, &d, &WeightFunction::One).unwrap();
        let (rule, _) = build_positive_lscf(&problem, &GeneratorSpec::random(seed), &BuildOptions::default()).unwrap();
        let before = exactness_residual(&rule, &problem).unwrap();
        let out = steinitz_reduce(&rule, &problem, &SubsampleMethod::steinitz()).unwrap();
        prop_assert!(out.rule.len() <= problem.k());
        prop_assert!(out.rule.positive);
        prop_assert!(out.rule.weights.iter().all(|&w| w > 0.0));
        for x in out.rule.points.iter() {
            prop_assert!(rule.points.iter().any(|y| y == x));
        }
        let after = exactness_residual(&out.rule, &problem).unwrap();
        prop_assert!(after <= before + 1e-12 * problem.residual_scale(), "{before:e} -> {after:e}");
        assert_relative_eq!(out.rule.weights.iter().sum::<f64>(), rule.weights.iter().sum::<f64>(), max_relative = 1e-12);
    }

    #[test]
    fn nnls_satisfies_kkt(k in 1usize..6, extra in 0usize..20, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = k + extra;
        let phi = DMatrix::from_fn(k, n, |_, _| rng.gen_range(-1.0..1.0));
        let m: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sol = nnls_weights(&phi, &m, &SubsampleMethod::nnls()).unwrap();
        prop_assert!(sol.converged);
        prop_assert!(sol.weights.iter().all(|&w| w >= 0.0));
        let w = nalgebra::DVector::from_column_slice(&sol.weights);
        let r = nalgebra::DVector::from_column_slice(&m) - &phi * &w;
        prop_assert!((r.norm() - sol.residual).abs() <= 1e-10 * (1.0 + r.norm()));
        let grad = phi.transpose() * &r;
        let scale = (phi.transpose() * nalgebra::DVector::from_column_slice(&m)).amax().max(1.0);
        for (g, w) in grad.iter().zip(&sol.weights) {
            prop_assert!(*g <= 1e-8 * scale, "ascent direction left: {g:e}");
            if *w > 0.0 {
                prop_assert!(g.abs() <= 1e-8 * scale, "passive gradient {g:e}");
            }
        }
    }
}

#[test]
fn moments_of_the_constant_are_volumes() {
    for d in [Domain::cube(3, -1.0, 1.0).unwrap(), Domain::unit_ball(3).unwrap(), Domain::disk_and_square()] {
        let problem = Problem::new(&BasisSpec::Algebraic { degree: 0 }, &d, &WeightFunction::One).unwrap();
        let m = moments(&poscub::spaces::make_basis(&BasisSpec::Algebraic { degree: 0 }, &d).unwrap(), &d, &WeightFunction::One).unwrap();
        assert_relative_eq!(m.values[0], d.volume(), max_relative = 1e-12);
        assert_eq!(problem.moments.values, m.values);
    }
}
