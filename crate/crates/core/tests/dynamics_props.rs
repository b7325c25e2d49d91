use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use reachkit::gramian::reachability_gramian;
use reachkit::lp::{lp_optimal_control, q_norm_q, LpKernel, LpSpec};
use reachkit::lti::{convolution_integral, matrix_exponential, ControlSignal};
use reachkit::LtiSystem;

fn square(n: usize, scale: f64) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-scale..scale, n * n).prop_map(move |v| DMatrix::from_row_slice(n, n, &v))
}

fn system() -> impl Strategy<Value = LtiSystem> {
    (2usize..=4, 1usize..=2).prop_flat_map(|(n, m)| {
        (square(n, 1.5), prop::collection::vec(-2.0f64..2.0, n * m))
            .prop_map(move |(a, b)| LtiSystem::new(a, DMatrix::from_row_slice(n, m, &b)).unwrap())
    })
}

fn costate(n: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-5.0f64..5.0, n).prop_map(DVector::from_vec)
}

fn system_and_costate() -> impl Strategy<Value = (LtiSystem, DVector<f64>)> {
    system().prop_flat_map(|s| {
        let n = s.n();
        (Just(s), costate(n))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exponential_semigroup_and_inverse(a in square(3, 2.0), s in 0.0f64..1.0, t in 0.0f64..1.0) {
        let whole = matrix_exponential(&a, s + t).unwrap();
        let split = matrix_exponential(&a, s).unwrap() * matrix_exponential(&a, t).unwrap();
        prop_assert!((&whole - &split).norm() <= 1e-12 * whole.norm().max(1.0));
        let id = matrix_exponential(&a, t).unwrap() * matrix_exponential(&a, -t).unwrap();
        prop_assert!((id - DMatrix::identity(3, 3)).norm() <= 1e-12);
    }

    #[test]
    fn convolution_is_additive(sys in system(), a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0) {
        let mut t = [a, b, c];
        t.sort_by(f64::total_cmp);
        let whole = convolution_integral(&sys, 1.0, t[0], t[2]).unwrap();
        let parts = convolution_integral(&sys, 1.0, t[0], t[1]).unwrap() + convolution_integral(&sys, 1.0, t[1], t[2]).unwrap();
        prop_assert!((&whole - &parts).norm() <= 1e-12 * whole.norm().max(1.0));
    }

    #[test]
    fn gramian_is_symmetric_positive_semidefinite(sys in system(), t in 0.1f64..2.0) {
        let g = reachability_gramian(&sys, t).unwrap();
        prop_assert_eq!(&g.w, &g.w.transpose());
        prop_assert!(g.min_eigenvalue() >= -1e-12 * g.max_eigenvalue().max(1.0));
        prop_assert!((g.trace() - g.eigen_sum()).abs() <= 1e-10 * g.trace().abs().max(1.0));
    }

    #[test]
    fn costate_homogeneity((sys, l) in system_and_costate(), alpha in 0.1f64..10.0, p in prop::sample::select(vec![2u32, 4, 6])) {
        let spec = LpSpec::new(p, 1.0, 1.0).unwrap().with_nodes(401).unwrap();
        let k = LpKernel::new(&sys, &spec).unwrap();
        let (x, c) = k.endpoint_and_cost(&l);
        prop_assume!(c > 1e-200);
        let (xa, ca) = k.endpoint_and_cost(&(&l * alpha.powi(p as i32 - 1)));
        prop_assert!((&xa - &x * alpha).norm() <= 1e-8 * x.norm() * alpha);
        prop_assert!((ca - c * alpha.powi(p as i32)).abs() <= 1e-8 * c * alpha.powi(p as i32));
    }

    #[test]
    fn certified_costates_meet_the_budget(
        (sys, d) in system_and_costate(),
        frac in 0.0f64..1.0,
        budget in 0.2f64..3.0,
        p in prop::sample::select(vec![2u32, 4, 6, 8]),
    ) {
        let spec = LpSpec::new(p, budget, 1.0).unwrap().with_nodes(401).unwrap();
        let k = LpKernel::new(&sys, &spec).unwrap();
        let radius = k.prop2_radius();
        let qq = q_norm_q(&d, spec.q());
        prop_assume!(qq > 0.0);
        let l = &d * (frac * radius * spec.cost_bound() / qq).powf(1.0 / spec.q());
        let s = k.sample(&l, radius);
        prop_assert!(s.within_prop2_bound);
        prop_assert!(s.reachable);
        prop_assert!(s.cost_p <= spec.cost_bound() * (1.0 + 1e-9));
    }

    #[test]
    fn optimal_control_minimizes_the_hamiltonian(
        (sys, l) in system_and_costate(),
        t in 0.0f64..1.0,
        deltas in prop::collection::vec(prop::collection::vec(-0.1f64..0.1, 2), 100),
    ) {
        let p = 6.0;
        let spec = LpSpec::new(6, 1.0, 1.0).unwrap().with_nodes(5).unwrap();
        let u = lp_optimal_control(&sys, &l, &spec).unwrap();
        let lt = matrix_exponential(&-sys.a().transpose(), t).unwrap() * &l;
        let ham = |w: &DVector<f64>| w.iter().map(|x| x.abs().powf(p)).sum::<f64>() / p + lt.dot(&(sys.b() * w));
        let us = u.value(t);
        let h0 = ham(&us);
        for d in &deltas {
            let du = DVector::from_iterator(sys.m(), d.iter().copied().take(sys.m()));
            prop_assert!(ham(&(&us + du)) >= h0 - 1e-12 * h0.abs().max(1.0));
        }
    }
}
