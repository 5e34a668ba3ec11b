//! Time integration of the model and of the reformulated decay system.
//!
//! The model is advanced with classical RK4 on `(u, ω)`; `ψ` is recomputed
//! from `ω` at every stage with the boundary-appropriate elliptic solver.
//! The step adapts as `dt ← cfl_c / (1 + 4‖∂_zψ‖∞)`, never growing by more
//! than a factor two per step.

use crate::diagnostics::FunctionalSeries;
use crate::elliptic::{BcSpec, EllipticSolver};
use crate::error::{Error, Result};
use crate::grid::{apply_l5, diff_z, Field};
use crate::scalar::Scalar;

/// `(u, ω, ψ)` at time `t`.
#[derive(Debug, Clone)]
pub struct ModelState<T> {
    pub t: T,
    pub u: Field<T>,
    pub omega: Field<T>,
    pub psi: Field<T>,
    pub nu: T,
    pub bc: BcSpec<T>,
}

impl<T: Scalar> ModelState<T> {
    /// Builds a state from `(u, ω)`, solving for `ψ`.
    pub fn new(t: T, u: Field<T>, omega: Field<T>, nu: T, solver: &EllipticSolver<T>) -> Result<Self> {
        if nu < T::zero() {
            return Err(Error::InvalidArgument("viscosity must be nonnegative".into()));
        }
        u.ensure_finite()?;
        let psi = solver.solve(&omega)?;
        Ok(Self {
            t,
            u,
            omega,
            psi,
            nu,
            bc: solver.bc(),
        })
    }
}

/// Step-size policy and termination thresholds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepControl<T> {
    pub dt: T,
    pub dt_min: T,
    pub cfl_c: T,
    /// Terminate once `sup|u|` exceeds this.
    pub blowup_threshold: T,
    /// Optional cap on the discrete `H³` surrogate of `u`.
    pub h3_threshold: Option<T>,
    pub max_steps: usize,
}

impl<T: Scalar> StepControl<T> {
    /// Defaults: threshold `10⁶ sup|u₀|`, `dt_min = 10⁻¹⁰`, `cfl_c = 0.5`.
    pub fn for_initial(sup_u0: T) -> Self {
        Self {
            dt: T::lit(1e-3),
            dt_min: T::lit(1e-10),
            cfl_c: T::lit(0.5),
            blowup_threshold: T::lit(1e6) * sup_u0,
            h3_threshold: None,
            max_steps: 1_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > T::zero()) {
            return Err(Error::InvalidArgument("dt_min must be positive".into()));
        }
        if !(self.cfl_c > T::zero() && self.cfl_c <= T::one()) {
            return Err(Error::InvalidArgument("cfl_c must lie in (0, 1]".into()));
        }
        if !(self.dt >= self.dt_min) {
            return Err(Error::InvalidArgument("dt below dt_min".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminal {
    /// `sup|u|` crossed the threshold or the state became non-finite.
    BlowupDetected,
    /// The adaptive step fell below `dt_min`.
    StepCollapse,
}

impl Terminal {
    pub fn message(self) -> &'static str {
        match self {
            Terminal::BlowupDetected => "blow-up detected",
            Terminal::StepCollapse => "blow-up suspected: step collapse",
        }
    }
}

/// Outcome of one step: the new state, the step actually taken, and a
/// terminal flag when the run must stop.
#[derive(Debug, Clone)]
pub struct Step<T> {
    pub state: ModelState<T>,
    pub dt_taken: T,
    pub terminal: Option<Terminal>,
}

fn zero_boundary_diffusion<T: Scalar>(f: &mut Field<T>) {
    let (nr, nz) = f.grid.shape();
    let axis = f.grid.has_axis();
    for j in 0..nz {
        if !axis {
            f.values[[0, j]] = T::zero();
        }
        f.values[[nr - 1, j]] = T::zero();
    }
    for i in 0..nr {
        f.values[[i, 0]] = T::zero();
        f.values[[i, nz - 1]] = T::zero();
    }
}

fn rhs_with_psi<T: Scalar>(u: &Field<T>, omega: &Field<T>, psi: &Field<T>, nu: T) -> Result<(Field<T>, Field<T>)> {
    let psi_z = diff_z(psi, 1)?;
    let mut du = u.zip_with(&psi_z, |a, b| T::lit(2.0) * a * b)?;
    let mut domega = diff_z(&u.map(|v| v * v), 1)?;
    if nu > T::zero() {
        let mut lu = apply_l5(u)?;
        let mut lw = apply_l5(omega)?;
        zero_boundary_diffusion(&mut lu);
        zero_boundary_diffusion(&mut lw);
        du = du.axpy(nu, &lu)?;
        domega = domega.axpy(nu, &lw)?;
    }
    Ok((du, domega))
}

/// `(∂_t u, ∂_t ω) = (2u∂_zψ + νL₅u, ∂_z(u²) + νL₅ω)` with `ψ` re-solved
/// from `state.omega`.
pub fn rhs_model<T: Scalar>(state: &ModelState<T>, solver: &EllipticSolver<T>) -> Result<(Field<T>, Field<T>)> {
    let psi = solver.solve(&state.omega)?;
    rhs_with_psi(&state.u, &state.omega, &psi, state.nu)
}

fn enforce_u_boundary<T: Scalar>(u: &mut Field<T>) {
    let nz = u.grid.nz;
    u.values.column_mut(0).fill(T::zero());
    u.values.column_mut(nz - 1).fill(T::zero());
}

/// `cfl_c / (1 + 4‖∂_zψ‖∞)`, further capped by the diffusive limit
/// `h²/(8ν)` when `ν > 0`.
pub fn stable_dt<T: Scalar>(psi: &Field<T>, nu: T, cfl_c: T) -> Result<T> {
    let rate = diff_z(psi, 1)?.max_abs();
    let mut dt = cfl_c / (T::one() + T::lit(4.0) * rate);
    if nu > T::zero() {
        let h = psi.grid.hr.min(psi.grid.hz);
        dt = dt.min(h * h / (T::lit(8.0) * nu));
    }
    Ok(dt)
}

/// One RK4 step of `(u, ω)` with step `dt`, no adaptivity.
pub fn rk4_model<T: Scalar>(state: &ModelState<T>, dt: T, solver: &EllipticSolver<T>) -> Result<ModelState<T>> {
    let half = dt * T::lit(0.5);
    let nu = state.nu;
    let (k1u, k1w) = rhs_with_psi(&state.u, &state.omega, &state.psi, nu)?;
    let u2 = state.u.axpy(half, &k1u)?;
    let w2 = state.omega.axpy(half, &k1w)?;
    let (k2u, k2w) = rhs_with_psi(&u2, &w2, &solver.solve(&w2)?, nu)?;
    let u3 = state.u.axpy(half, &k2u)?;
    let w3 = state.omega.axpy(half, &k2w)?;
    let (k3u, k3w) = rhs_with_psi(&u3, &w3, &solver.solve(&w3)?, nu)?;
    let u4 = state.u.axpy(dt, &k3u)?;
    let w4 = state.omega.axpy(dt, &k3w)?;
    let (k4u, k4w) = rhs_with_psi(&u4, &w4, &solver.solve(&w4)?, nu)?;
    let sixth = dt / T::lit(6.0);
    let combine = |y: &Field<T>, a: &Field<T>, b: &Field<T>, c: &Field<T>, d: &Field<T>| -> Result<Field<T>> {
        let two = T::lit(2.0);
        y.axpy(sixth, a)?
            .axpy(two * sixth, b)?
            .axpy(two * sixth, c)?
            .axpy(sixth, d)
    };
    let mut u = combine(&state.u, &k1u, &k2u, &k3u, &k4u)?;
    let omega = combine(&state.omega, &k1w, &k2w, &k3w, &k4w)?;
    if matches!(
        state.bc,
        BcSpec::ExteriorNeumannRobin { .. } | BcSpec::InteriorDirichletRobin { .. }
    ) {
        enforce_u_boundary(&mut u);
    }
    let psi = solver.solve(&omega)?;
    Ok(ModelState {
        t: state.t + dt,
        u,
        omega,
        psi,
        nu,
        bc: state.bc,
    })
}

/// Adaptive RK4 step. Updates `ctrl.dt` for the next step.
///
/// Non-finite intermediate states and threshold crossings are reported as
/// [`Terminal::BlowupDetected`]; a step below `dt_min` as
/// [`Terminal::StepCollapse`]. In both cases the returned state is the last
/// finite one.
pub fn step_model<T: Scalar>(
    state: &ModelState<T>,
    ctrl: &mut StepControl<T>,
    solver: &EllipticSolver<T>,
) -> Result<Step<T>> {
    let target = stable_dt(&state.psi, state.nu, ctrl.cfl_c)?;
    let dt = target.min(ctrl.dt * T::lit(2.0));
    if dt < ctrl.dt_min {
        return Ok(Step {
            state: state.clone(),
            dt_taken: T::zero(),
            terminal: Some(Terminal::StepCollapse),
        });
    }
    let next = match rk4_model(state, dt, solver) {
        Ok(s) if s.u.is_finite() && s.omega.is_finite() && s.psi.is_finite() => s,
        Ok(_) | Err(Error::NonFiniteField) | Err(Error::SolverNonConvergence { .. }) => {
            return Ok(Step {
                state: state.clone(),
                dt_taken: T::zero(),
                terminal: Some(Terminal::BlowupDetected),
            })
        }
        Err(e) => return Err(e),
    };
    ctrl.dt = dt;
    let terminal = (next.u.max_abs() > ctrl.blowup_threshold).then_some(Terminal::BlowupDetected);
    Ok(Step {
        state: next,
        dt_taken: dt,
        terminal,
    })
}

/// `(ũ, v)` of the decay system `ũ_t = −4Mũ − 4ũv`, `v_t = Δ₅⁻¹∂_z²ũ`.
#[derive(Debug, Clone)]
pub struct DecayState<T> {
    pub t: T,
    pub u_tilde: Field<T>,
    pub v: Field<T>,
    pub m: T,
}

impl<T: Scalar> DecayState<T> {
    pub fn new(u_tilde: Field<T>, v: Field<T>, m: T) -> Result<Self> {
        if !(m > T::zero()) {
            return Err(Error::InvalidArgument("M must be positive".into()));
        }
        if u_tilde.min() < T::zero() {
            return Err(Error::PositivityViolated {
                undershoot: (-u_tilde.min()).as_f64(),
            });
        }
        let mut v = v;
        zero_boundary(&mut v);
        Ok(Self {
            t: T::zero(),
            u_tilde,
            v,
            m,
        })
    }
}

fn zero_boundary<T: Scalar>(f: &mut Field<T>) {
    let (nr, nz) = f.grid.shape();
    f.values.row_mut(nr - 1).fill(T::zero());
    if !f.grid.has_axis() {
        f.values.row_mut(0).fill(T::zero());
    }
    f.values.column_mut(0).fill(T::zero());
    f.values.column_mut(nz - 1).fill(T::zero());
}

fn decay_rhs<T: Scalar>(
    ut: &Field<T>,
    v: &Field<T>,
    m: T,
    dirichlet: &EllipticSolver<T>,
) -> Result<(Field<T>, Field<T>)> {
    let four = T::lit(4.0);
    let dut = ut.zip_with(v, |a, b| -four * m * a - four * a * b)?;
    // Δ₅⁻¹f = −solve(f) for the solver of −L₅ψ = f
    let dv = dirichlet.solve(&diff_z(ut, 2)?)?.scale(-T::one());
    Ok((dut, dv))
}

/// Result of a decay step.
#[derive(Debug, Clone)]
pub struct DecayStep<T> {
    pub state: DecayState<T>,
    pub dt_taken: T,
    /// Largest negative undershoot clipped to zero in this step.
    pub clipped: T,
}

/// Adaptive RK4 step of the decay system. `dirichlet` must be a
/// [`BcSpec::DirichletHomog`] solver on the state's grid.
pub fn step_decay<T: Scalar>(
    state: &DecayState<T>,
    ctrl: &mut StepControl<T>,
    dirichlet: &EllipticSolver<T>,
    clip_tol: T,
) -> Result<DecayStep<T>> {
    if dirichlet.bc() != BcSpec::DirichletHomog {
        return Err(Error::InvalidArgument(
            "decay steps need the homogeneous Dirichlet solver".into(),
        ));
    }
    let rate = state.m + state.v.max_abs();
    let dt = (ctrl.cfl_c / (T::one() + T::lit(4.0) * rate)).min(ctrl.dt * T::lit(2.0));
    if dt < ctrl.dt_min {
        return Err(Error::InvalidArgument("decay step below dt_min".into()));
    }
    let m = state.m;
    let half = dt * T::lit(0.5);
    let (k1u, k1v) = decay_rhs(&state.u_tilde, &state.v, m, dirichlet)?;
    let (k2u, k2v) = decay_rhs(
        &state.u_tilde.axpy(half, &k1u)?,
        &state.v.axpy(half, &k1v)?,
        m,
        dirichlet,
    )?;
    let (k3u, k3v) = decay_rhs(
        &state.u_tilde.axpy(half, &k2u)?,
        &state.v.axpy(half, &k2v)?,
        m,
        dirichlet,
    )?;
    let (k4u, k4v) = decay_rhs(&state.u_tilde.axpy(dt, &k3u)?, &state.v.axpy(dt, &k3v)?, m, dirichlet)?;
    let sixth = dt / T::lit(6.0);
    let two = T::lit(2.0);
    let mut u_tilde = state
        .u_tilde
        .axpy(sixth, &k1u)?
        .axpy(two * sixth, &k2u)?
        .axpy(two * sixth, &k3u)?
        .axpy(sixth, &k4u)?;
    let mut v = state
        .v
        .axpy(sixth, &k1v)?
        .axpy(two * sixth, &k2v)?
        .axpy(two * sixth, &k3v)?
        .axpy(sixth, &k4v)?;
    zero_boundary(&mut v);
    let low = u_tilde.min();
    let mut clipped = T::zero();
    if low < T::zero() {
        if -low > clip_tol {
            return Err(Error::PositivityViolated {
                undershoot: (-low).as_f64(),
            });
        }
        clipped = -low;
        u_tilde.values.mapv_inplace(|x| x.max(T::zero()));
    }
    u_tilde.ensure_finite()?;
    v.ensure_finite()?;
    ctrl.dt = dt;
    Ok(DecayStep {
        state: DecayState {
            t: state.t + dt,
            u_tilde,
            v,
            m,
        },
        dt_taken: dt,
        clipped,
    })
}

/// Why and when a run was judged to blow up.
#[derive(Debug, Clone, PartialEq)]
pub struct BlowupReport<T> {
    pub detected: bool,
    pub t_detect: Option<T>,
    pub reason: Option<&'static str>,
    pub t_star: Option<T>,
    /// `t_detect ≤ T*` when both are known.
    pub within_bound: Option<bool>,
}

/// Scans a history for the first sup-norm crossing, `H³`-surrogate crossing
/// or step collapse.
pub fn detect_blowup<T: Scalar>(
    history: &FunctionalSeries<T>,
    ctrl: &StepControl<T>,
    t_star: Option<T>,
) -> BlowupReport<T> {
    let mut hit = None;
    for k in 0..history.len() {
        let t = history.times[k];
        if history.linf_u[k] > ctrl.blowup_threshold || !history.linf_u[k].is_finite() {
            hit = Some((t, "sup|u| above threshold"));
        } else if let (Some(cap), Some(&h3)) = (ctrl.h3_threshold, history.h3_surrogate.get(k)) {
            if h3 > cap {
                hit = Some((t, "H3 surrogate above threshold"));
            }
        }
        if hit.is_none() && k > 0 && history.dt.get(k).is_some_and(|&d| d < ctrl.dt_min) {
            hit = Some((t, "step collapse"));
        }
        if hit.is_some() {
            break;
        }
    }
    let t_detect = hit.map(|h| h.0);
    BlowupReport {
        detected: hit.is_some(),
        t_detect,
        reason: hit.map(|h| h.1),
        t_star,
        within_bound: t_detect.zip(t_star).map(|(a, b)| a <= b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{Domain, Grid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn exterior_setup() -> (Arc<Grid<f64>>, EllipticSolver<f64>) {
        let g = Grid::<f64>::new(Domain::exterior(4.0).unwrap(), 49, 17).unwrap();
        let s = EllipticSolver::new(&g, BcSpec::ExteriorNeumannRobin { beta: 6.0 }).unwrap();
        (g, s)
    }

    fn small_state(g: &Arc<Grid<f64>>, s: &EllipticSolver<f64>) -> ModelState<f64> {
        let u = Field::from_fn(g, |r, z| (PI * z).sin() * (-(r - 1.0).powi(2)).exp());
        let omega = Field::from_fn(g, |r, z| (-3.0 * r * r).exp() * (PI * z).cos() * 5.0);
        ModelState::new(0.0, u, omega, 0.0, s).unwrap()
    }

    #[test]
    fn zero_u_is_equilibrium() {
        let (g, s) = exterior_setup();
        let omega = Field::from_fn(&g, |r, z| (-3.0 * r * r).exp() * (PI * z).cos());
        let state = ModelState::new(0.0, Field::zeros(&g), omega.clone(), 0.0, &s).unwrap();
        let (du, dw) = rhs_model(&state, &s).unwrap();
        assert_eq!(du.max_abs(), 0.0);
        assert_eq!(dw.max_abs(), 0.0);
        let mut ctrl = StepControl::for_initial(1.0);
        let step = step_model(&state, &mut ctrl, &s).unwrap();
        assert!(step.state.t > 0.0);
        assert_eq!(step.state.omega, omega);
    }

    #[test]
    fn z_independent_psi_has_no_stretching() {
        let g = Grid::<f64>::new(Domain::interior(), 17, 17).unwrap();
        let u = Field::from_fn(&g, |r, z| (1.0 - r * r) * (PI * z).sin());
        let psi = Field::from_fn(&g, |r, _| 1.0 - r * r);
        let (du, _) = rhs_with_psi(&u, &Field::zeros(&g), &psi, 0.0).unwrap();
        assert!(du.max_abs() < 1e-12);
    }

    #[test]
    fn sign_of_u_preserved() {
        let (g, s) = exterior_setup();
        let mut state = small_state(&g, &s);
        let u0 = state.u.clone();
        let mut ctrl = StepControl::for_initial(u0.max_abs());
        for _ in 0..20 {
            state = step_model(&state, &mut ctrl, &s).unwrap().state;
        }
        let prod = state.u.mul(&u0).unwrap();
        assert!(prod.min() >= -1e-14);
        assert_eq!(state.u.values.column(0).iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn u_squared_follows_stretching_exponent() {
        // u² = u₀² exp(4∫∂_zψ) at a node, integral by Simpson in time
        let (g, s) = exterior_setup();
        let mut state = small_state(&g, &s);
        let (i, j) = (6, 5);
        let u0 = state.u.at(i, j);
        let mut integral = 0.0;
        let dt = 0.01;
        for _ in 0..50 {
            let a0 = diff_z(&state.psi, 1).unwrap().at(i, j);
            let mid = {
                let (_, dw) = rhs_model(&state, &s).unwrap();
                let w = state.omega.axpy(dt / 2.0, &dw).unwrap();
                diff_z(&s.solve(&w).unwrap(), 1).unwrap().at(i, j)
            };
            let next = rk4_model(&state, dt, &s).unwrap();
            let a1 = diff_z(&next.psi, 1).unwrap().at(i, j);
            integral += dt / 6.0 * (a0 + 4.0 * mid + a1);
            state = next;
        }
        let predicted = u0 * u0 * (4.0 * integral).exp();
        let actual = state.u.at(i, j).powi(2);
        assert!((predicted - actual).abs() < 1e-4 * actual, "{predicted} vs {actual}");
    }

    #[test]
    fn rk4_short_reversibility() {
        let (g, s) = exterior_setup();
        let state = small_state(&g, &s);
        let dt = 1e-3;
        let fwd = rk4_model(&state, dt, &s).unwrap();
        let back = rk4_model(&fwd, -dt, &s).unwrap();
        let err = back.u.sub(&state.u).unwrap().max_abs();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn reflection_symmetry_preserved() {
        // u even and ψ odd about z = 1/2 keep u_t even and ω_t odd
        let g = Grid::<f64>::new(Domain::interior(), 17, 33).unwrap();
        let u = Field::from_fn(&g, |r, z| (1.0 - r * r) * (PI * z).sin());
        let psi = Field::from_fn(&g, |r, z| (1.0 - r * r) * (PI * z).cos());
        let (du, dw) = rhs_with_psi(&u, &Field::zeros(&g), &psi, 0.0).unwrap();
        let nz = g.nz;
        for i in 0..g.nr {
            for j in 0..nz {
                assert!((du.at(i, j) - du.at(i, nz - 1 - j)).abs() < 1e-10);
                assert!((dw.at(i, j) + dw.at(i, nz - 1 - j)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn decay_linear_mode() {
        let g = Grid::<f64>::new(Domain::interior(), 17, 17).unwrap();
        let dir = EllipticSolver::new(&g, BcSpec::DirichletHomog).unwrap();
        let ut0 = Field::constant(&g, 0.0);
        let state = DecayState::new(ut0, Field::zeros(&g), 2.0).unwrap();
        let mut ctrl = StepControl::for_initial(1.0);
        let out = step_decay(&state, &mut ctrl, &dir, 1e-12).unwrap();
        assert_eq!(out.state.u_tilde.max_abs(), 0.0);
        assert_eq!(out.state.v.max_abs(), 0.0);
    }

    #[test]
    fn model_and_decay_rates_agree() {
        let g = Grid::<f64>::new(Domain::interior(), 17, 17).unwrap();
        let m = 1.5;
        let bc = BcSpec::DecayShiftM { m };
        let s = EllipticSolver::new(&g, bc).unwrap();
        let u = Field::from_fn(&g, |r, z| 0.1 * (1.0 - r * r) * (PI * z).sin());
        let omega = Field::from_fn(&g, |r, z| (1.0 - r * r) * (PI * z).sin());
        let state = ModelState::new(0.0, u.clone(), omega, 0.0, &s).unwrap();
        let (du, _) = rhs_model(&state, &s).unwrap();
        let model_rate = u.zip_with(&du, |a, b| 2.0 * a * b).unwrap();
        let ut = u.map(|x| x * x);
        let v = diff_z(&state.psi, 1).unwrap().map(|x| -x - m);
        let decay_rate = ut.zip_with(&v, |a, b| -4.0 * m * a - 4.0 * a * b).unwrap();
        assert!(model_rate.sub(&decay_rate).unwrap().max_abs() < 1e-12);
    }
}
