use proptest::prelude::*;

use quasilin::fields::{is_uniform_node, Interpolator};
use quasilin::geometry::{make_grid, Arm};
use quasilin::solver2d::stencil::{gradients, hessians, Hessian};
use quasilin::verify::{
    euclid_root, lorentz_alpha_max, lorentz_root, lower_bound_euclid, lower_bound_lorentz,
};
use quasilin::{ConvexDomain, ProblemSpec};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn euclidean_big_g_closed_form(s in 0.0f64..50.0) {
        let spec = ProblemSpec::euclidean(2);
        let d = spec.diffusivity(s).unwrap();
        prop_assert!(close(d.big_g, (1.0 + s).powf(-1.5), 1e-12));
        prop_assert!(close(d.g, (1.0 + s).powf(-0.5), 1e-12));
        prop_assert!(close(spec.big_g_prime(s).unwrap(), -1.5 * (1.0 + s).powf(-2.5), 1e-10));
    }

    #[test]
    fn lorentzian_big_g_closed_form(s in 0.0f64..0.99) {
        let spec = ProblemSpec::lorentzian(2);
        let d = spec.diffusivity(s).unwrap();
        prop_assert!(close(d.big_g, (1.0 - s).powf(-1.5), 1e-12));
        prop_assert!(close(d.g_prime, 0.5 * (1.0 - s).powf(-1.5), 1e-12));
        prop_assert!(close(spec.big_g_prime(s).unwrap(), 1.5 * (1.0 - s).powf(-2.5), 1e-9));
    }

    #[test]
    fn cumulative_and_transform_closed_forms(u in -5.0f64..-1e-6) {
        let spec = ProblemSpec::euclidean(2);
        prop_assert!(close(spec.cumulative_f(u).unwrap(), -u, 1e-12));
        prop_assert!(close(spec.v_of_u(u).unwrap(), 2.0 * (-u).sqrt(), 1e-8));
    }

    #[test]
    fn cumulative_and_transform_decrease_in_u(a in -5.0f64..-1e-3, b in -5.0f64..-1e-3) {
        prop_assume!((a - b).abs() > 1e-6);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let spec = ProblemSpec::lorentzian(2);
        prop_assert!(spec.cumulative_f(lo).unwrap() > spec.cumulative_f(hi).unwrap());
        prop_assert!(spec.v_of_u(lo).unwrap() > spec.v_of_u(hi).unwrap());
    }

    #[test]
    fn euclidean_root_solves_cubic(alpha in 0.0f64..100.0) {
        let q = euclid_root(alpha).unwrap();
        prop_assert!(q >= 0.0);
        prop_assert!((q * q * q + q - alpha).abs() <= 1e-12 * (1.0 + alpha));
    }

    #[test]
    fn lorentzian_root_solves_cubic(frac in 0.0f64..=1.0) {
        let alpha = frac * lorentz_alpha_max();
        let q = lorentz_root(alpha).unwrap();
        prop_assert!((0.0..=1.0 / 3f64.sqrt() + 1e-12).contains(&q));
        prop_assert!((q * q * q - q + alpha).abs() <= 1e-14);
    }

    #[test]
    fn bounds_increase_and_order(a in 1e-4f64..0.38, b in 1e-4f64..0.38) {
        prop_assume!((a - b).abs() > 1e-9);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (el, eh) = (lower_bound_euclid(lo).unwrap(), lower_bound_euclid(hi).unwrap());
        let (ll, lh) = (lower_bound_lorentz(lo).unwrap(), lower_bound_lorentz(hi).unwrap());
        prop_assert!(el < eh);
        prop_assert!(ll < lh);
        prop_assert!(el < ll);
        prop_assert!(el <= lo * lo && lo * lo <= ll);
    }

    #[test]
    fn hessian_eigenvalues_ordered(xx in -10.0f64..10.0, xy in -10.0f64..10.0, yy in -10.0f64..10.0) {
        let h = Hessian { xx, xy, yy };
        let (lo, hi) = h.eigenvalues();
        prop_assert!(lo <= hi);
        prop_assert!(close(lo + hi, h.trace(), 1e-12));
        prop_assert!(close(lo * hi, xx * yy - xy * xy, 1e-10));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stencils_exact_on_quadratics_away_from_boundary(
        c in prop::array::uniform6(-3.0f64..3.0),
        a in 1.0f64..2.0,
    ) {
        let domain = ConvexDomain::ellipse(a, 1.0).unwrap();
        let grid = make_grid(&domain, 0.08).unwrap();
        let q = |x: f64, y: f64| c[0] + c[1] * x + c[2] * y + c[3] * x * x + c[4] * x * y + c[5] * y * y;
        let values: Vec<f64> = grid.nodes.iter().map(|n| q(n.x, n.y)).collect();
        let grads = gradients(&grid, &values, 0.0);
        let hess = hessians(&grid, &values, &grads, 0.0);
        let mut checked = 0;
        for (k, n) in grid.nodes.iter().enumerate() {
            let block = is_uniform_node(&grid, k)
                && n.arms.iter().all(|arm| match arm {
                    Arm::Node(m) => is_uniform_node(&grid, *m),
                    Arm::Boundary(_) => false,
                });
            if !block {
                continue;
            }
            checked += 1;
            prop_assert!(close(grads[k][0], c[1] + 2.0 * c[3] * n.x + c[4] * n.y, 1e-9));
            prop_assert!(close(grads[k][1], c[2] + c[4] * n.x + 2.0 * c[5] * n.y, 1e-9));
            prop_assert!(close(hess[k].xx, 2.0 * c[3], 1e-8));
            prop_assert!(close(hess[k].xy, c[4], 1e-8));
            prop_assert!(close(hess[k].yy, 2.0 * c[5], 1e-8));
        }
        prop_assert!(checked > 100);
    }

    #[test]
    fn interpolation_reproduces_boundary_vanishing_quadratic(
        a in 1.0f64..2.0,
        scale in -2.0f64..2.0,
        px in -0.95f64..0.95,
        py in -0.95f64..0.95,
    ) {
        let domain = ConvexDomain::ellipse(a, 1.0).unwrap();
        let grid = make_grid(&domain, 0.05).unwrap();
        let q = |x: f64, y: f64| scale * (x * x / (a * a) + y * y - 1.0);
        let values: Vec<f64> = grid.nodes.iter().map(|n| q(n.x, n.y)).collect();
        let interp = Interpolator::new(&grid, &values);
        let p = [px * a, py];
        let expected = if domain.contains(p) { q(p[0], p[1]) } else { 0.0 };
        prop_assert!((interp.value(p) - expected).abs() <= 1e-10);
    }

    #[test]
    fn ray_exit_lands_on_boundary(
        eps in 0.0f64..0.09,
        k in 2u32..4,
        rx in -0.5f64..0.5,
        ry in -0.5f64..0.5,
        angle in 0.0f64..std::f64::consts::TAU,
    ) {
        prop_assume!(eps * f64::from(k * k + 1) < 0.95);
        let domain = ConvexDomain::blob(1.0, eps, k).unwrap();
        let p = [rx, ry];
        prop_assume!(domain.contains(p));
        let dir = [angle.cos(), angle.sin()];
        let s = domain.ray_exit(p, dir);
        let hit = [p[0] + s * dir[0], p[1] + s * dir[1]];
        prop_assert!(domain.indicator(hit).abs() <= 1e-12);
        prop_assert!(s >= domain.distance_to_boundary(p) - 1e-12);
    }

    #[test]
    fn convex_blobs_have_positive_curvature(
        eps in 0.0f64..0.09,
        k in 2u32..5,
        t in 0.0f64..std::f64::consts::TAU,
    ) {
        prop_assume!(eps * f64::from(k * k + 1) < 0.95);
        let domain = ConvexDomain::blob(1.0, eps, k).unwrap();
        let kappa = domain.curvature(t).unwrap();
        prop_assert!(kappa > 0.0);
        prop_assert!(kappa <= domain.k_max() + 1e-12);
    }
}
