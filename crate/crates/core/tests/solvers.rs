use std::f64::consts::PI;

use axisym::diagnostics::{functionals, TestFunctionPair};
use axisym::dynamics::{step_model, ModelState, StepControl};
use axisym::elliptic::{boundary_residuals, BcSpec, EllipticSolver};
use axisym::grid::{Domain, Field, Grid};
use axisym::jet::{manufacture, Jet};

#[test]
fn exterior_solve_meets_robin_condition() {
    let alpha = 3.0;
    let g = Grid::<f64>::new(Domain::exterior(4.0).unwrap(), 129, 33).unwrap();
    let m = manufacture(&g, |r, z| (r * r * (-alpha)).exp() * (z * PI).cos());
    let bc = BcSpec::ExteriorNeumannRobin { beta: 2.0 * alpha };
    let sol = EllipticSolver::new(&g, bc).unwrap().solve_exterior(&m.omega).unwrap();
    let res = boundary_residuals(&sol.psi, bc).unwrap();
    assert!(res.get("robin_r1").unwrap() < 1e-8);
    assert!(sol.psi.sub(&m.psi).unwrap().max_abs() < 2e-3);
}

#[test]
fn zero_data_is_stationary_and_u_vanishes_on_lids() {
    let g = Grid::<f64>::new(Domain::exterior(4.0).unwrap(), 65, 17).unwrap();
    let solver = EllipticSolver::new(&g, BcSpec::ExteriorNeumannRobin { beta: 6.0 }).unwrap();
    let zero = ModelState::new(0.0, Field::zeros(&g), Field::zeros(&g), 0.0, &solver).unwrap();
    let mut ctrl = StepControl::for_initial(1.0);
    let step = step_model(&zero, &mut ctrl, &solver).unwrap();
    assert_eq!(step.state.u.max_abs(), 0.0);
    assert_eq!(step.state.omega.max_abs(), 0.0);

    let u = Field::from_fn(&g, |r, z| (PI * z).sin() * (-r).exp());
    let state = ModelState::new(0.0, u, Field::zeros(&g), 0.0, &solver).unwrap();
    let mut ctrl = StepControl::for_initial(1.0);
    let step = step_model(&state, &mut ctrl, &solver).unwrap();
    assert!(step.dt_taken > 0.0);
    for i in 0..g.nr {
        assert_eq!(step.state.u.at(i, 0), 0.0);
        assert_eq!(step.state.u.at(i, g.nz - 1), 0.0);
    }
}

#[test]
fn canonical_functionals_are_positive() {
    let (alpha, b) = (3.0, 8.0);
    let g = Grid::<f64>::new(Domain::exterior(4.0).unwrap(), 129, 33).unwrap();
    let solver = EllipticSolver::new(&g, BcSpec::ExteriorNeumannRobin { beta: 2.0 * alpha }).unwrap();
    let pair = TestFunctionPair::exterior(&g, alpha).unwrap();
    let omega = Field::from_fn(&g, |r, z| {
        (b / PI) * (4.0 * alpha * alpha * r * r - 8.0 * alpha - PI * PI) * (-alpha * r * r).exp() * (PI * z).cos()
    });
    let mut u = Field::zeros(&g);
    for i in 0..g.nr {
        for j in 1..g.nz - 1 {
            let s = (PI * g.z_nodes[j]).sin();
            u.values[[i, j]] = (2.0 * s * s * pair.phi.at(i, j).exp()).sqrt();
        }
    }
    let state = ModelState::new(0.0, u, omega, 0.0, &solver).unwrap();
    let f = functionals(&state, &pair).unwrap();
    assert!(f.y > 0.0 && f.p > 0.0);
    assert!(f.y * f.y <= 8.0 * pair.c0.unwrap() * PI * PI / 3.0 * f.u2phi);
}

#[test]
fn f32_pipeline_runs() {
    let g = Grid::<f32>::new(Domain::interior(), 17, 17).unwrap();
    let solver = EllipticSolver::new(&g, BcSpec::DirichletHomog).unwrap();
    let m = manufacture(&g, |r, z| {
        (Jet::constant(1.0f32) - r * r) * (z * std::f32::consts::PI).sin()
    });
    let psi = solver.solve(&m.omega).unwrap();
    assert!(psi.sub(&m.psi).unwrap().max_abs() < 2e-2);
}
