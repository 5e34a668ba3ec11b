use std::f64::consts::PI;

use axisym::diagnostics::{blowup_bounds, sobolev_surrogate};
use axisym::elliptic::{solve_dirichlet, BcSpec, EllipticSolver};
use axisym::grid::{apply_l5, integrate_weighted, Domain, Field, Grid};
use axisym::oracle::{closed_form_lower, closed_form_lower_derivative, integrate_comparison, pole_time, Y_CAP};
use axisym::specfun::{bessel_k1, bessel_ode_residual};
use proptest::prelude::*;

fn interior(n: usize) -> std::sync::Arc<Grid<f64>> {
    Grid::new(Domain::interior(), n, n).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn quadrature_of_constants(n in 9usize..80, c in -5.0f64..5.0) {
        let g = interior(n);
        let v = integrate_weighted(&Field::constant(&g, c)).unwrap();
        prop_assert!((v - c / 4.0).abs() < 1e-12);
    }

    #[test]
    fn l5_is_linear(a in -3.0f64..3.0, k in 1.0f64..3.0, m in 1u32..3) {
        let g = Grid::<f64>::new(Domain::exterior(3.0).unwrap(), 33, 17).unwrap();
        let f = Field::from_fn(&g, |r, z| (-k * r).exp() * (m as f64 * PI * z).cos());
        let h = Field::from_fn(&g, |r, z| r * r * z);
        let lhs = apply_l5(&f.scale(a).add(&h).unwrap()).unwrap();
        let rhs = apply_l5(&f).unwrap().scale(a).add(&apply_l5(&h).unwrap()).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-9 * (1.0 + rhs.max_abs()));
    }

    #[test]
    fn dirichlet_solution_satisfies_the_discrete_equation(p in 1u32..4, q in 1u32..4, amp in 0.1f64..10.0) {
        let g = interior(33);
        let omega = Field::from_fn(&g, |r, z| amp * (1.0 - r * r) * (p as f64 * r).cos() * (q as f64 * PI * z).sin());
        let solver = EllipticSolver::new(&g, BcSpec::DirichletHomog).unwrap();
        let psi = solver.solve(&omega).unwrap();
        prop_assert!(solver.residual(&psi, &omega).unwrap() <= 1e-8 * omega.max_abs());
    }

    #[test]
    fn dirichlet_maximum_principle(cr in 0.1f64..2.0, cz in 0.1f64..2.0) {
        let g = interior(25);
        let omega = Field::from_fn(&g, |r, z| (1.0 + cr * r * r) * (1.0 + cz * z));
        let psi = solve_dirichlet(&omega).unwrap();
        for i in 0..g.nr - 1 {
            for j in 1..g.nz - 1 {
                prop_assert!(psi.at(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn sobolev_surrogate_is_homogeneous(c in -4.0f64..4.0, s in 0usize..4) {
        let g = interior(17);
        let f = Field::from_fn(&g, |r, z| (1.0 - r * r) * (PI * z).sin());
        let a = sobolev_surrogate(&f.scale(c), s).unwrap();
        let b = sobolev_surrogate(&f, s).unwrap();
        prop_assert!((a - c.abs() * b).abs() <= 1e-12 * (1.0 + b));
    }

    #[test]
    fn closed_form_is_zero_energy(y0 in 1e-3f64..10.0, c0 in 0.05f64..5.0, frac in 0.0f64..0.95) {
        let t = frac * pole_time(y0, c0);
        let y = closed_form_lower(y0, c0, t).unwrap();
        let yp = closed_form_lower_derivative(y0, c0, t).unwrap();
        prop_assert!((yp * yp - y.powi(3) / c0).abs() <= 1e-10 * yp * yp);
    }

    #[test]
    fn lower_curve_increases(y0 in 1e-3f64..10.0, c0 in 0.05f64..5.0) {
        let b = blowup_bounds(y0, 1.0, c0, None).unwrap();
        let mut prev = 0.0;
        for k in 0..20 {
            let v = b.curve(b.t_star * k as f64 / 21.0).unwrap();
            prop_assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn steeper_start_stays_above(y0 in 0.01f64..1.0, c0 in 0.1f64..2.0, boost in 1.01f64..2.0) {
        let slope = (y0.powi(3) / c0).sqrt();
        let t_end = 0.5 * pole_time(y0, c0);
        let a = integrate_comparison(y0, boost * slope, c0, 1e-2, t_end, Y_CAP).unwrap();
        let b = integrate_comparison(y0, slope, c0, 1e-2, t_end, Y_CAP).unwrap();
        for (sa, sb) in a.states.iter().zip(&b.states) {
            prop_assert!(sa.y >= sb.y);
        }
    }

    #[test]
    fn modified_bessel_ode(x in 0.2f64..20.0) {
        let scale = (1.0 + x * x) * bessel_k1(x).unwrap();
        prop_assert!(bessel_ode_residual(x).unwrap().abs() <= 1e-8 * scale);
    }
}
