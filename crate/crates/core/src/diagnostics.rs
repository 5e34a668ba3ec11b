//! Runtime monitors for the weighted functionals that drive blow-up and
//! decay: test functions, `Y`, `P`, `c₀`, admissibility, Riccati-type
//! residuals, the blow-up time bound and decay checks.

use std::sync::Arc;

use crate::dynamics::{DecayState, ModelState};
use crate::error::{Error, Result};
use crate::grid::{diff_r, diff_z, integrate_weighted, DomainKind, Field, Grid};
use crate::oracle::closed_form_lower;
use crate::scalar::Scalar;
use crate::specfun::{bessel_j1, exterior_alpha_threshold, interior_params, radial_eigenvalue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Exterior,
    Interior,
}

/// Test function `φ` with its `L₅` image `Φ` and the derived constants.
#[derive(Debug, Clone)]
pub struct TestFunctionPair<T> {
    pub variant: Variant,
    pub alpha: T,
    pub beta: T,
    pub phi: Field<T>,
    /// `Φ = L₅φ` in closed form (exterior), `(α² − λ₁)φ` (interior).
    pub big_phi: Field<T>,
    /// `λ₁` for the interior variant.
    pub lambda1: Option<T>,
    pub c0: Option<T>,
    /// Interior analogue of `c₀`. Not given in closed form by the theory;
    /// the default mirrors the exterior Cauchy–Schwarz construction, with
    /// `α²` (the `z`-eigenvalue of `φ`) in place of `π²`.
    pub c1: Option<T>,
}

impl<T: Scalar> TestFunctionPair<T> {
    /// `φ = e^{−αr²} sin(πz)`, `Φ = [4α²r² − (8α + π²)]φ`, `β = 2α`.
    /// Requires `α ≥ 1 + √(1 + π²/4)` so that `Φ ≥ 0` on `r ≥ 1`.
    pub fn exterior(grid: &Arc<Grid<T>>, alpha: T) -> Result<Self> {
        if grid.domain.kind != DomainKind::Exterior {
            return Err(Error::InvalidDomain(
                "exterior test function needs an exterior grid".into(),
            ));
        }
        let thr = exterior_alpha_threshold::<T>();
        if !(alpha >= thr * (T::one() - T::lit(64.0) * T::epsilon())) {
            return Err(Error::PhiPositivity(format!("alpha = {alpha} is below {thr}")));
        }
        let pi = T::PI();
        let a2 = T::lit(4.0) * alpha * alpha;
        let shift = T::lit(8.0) * alpha + pi * pi;
        let phi = Field::from_fn(grid, |r, z| (-alpha * r * r).exp() * (pi * z).sin());
        let big_phi = Field::from_fn(grid, |r, z| {
            (a2 * r * r - shift).max(T::zero()) * (-alpha * r * r).exp() * (pi * z).sin()
        });
        // equality case: 4α² = 8α + π² makes Φ(1, z) vanish; clamp rounding
        let mut pair = Self {
            variant: Variant::Exterior,
            alpha,
            beta: T::lit(2.0) * alpha,
            phi,
            big_phi,
            lambda1: None,
            c0: None,
            c1: None,
        };
        let cap = a2 * (-alpha).exp();
        let tiny = T::lit(1e3) * T::epsilon() * cap;
        if pair.big_phi.min() < -tiny || pair.big_phi.max_abs() > cap + tiny {
            return Err(Error::PhiPositivity("Φ outside [0, 4α²e^{−α}]".into()));
        }
        pair.c0 = Some(compute_c0(&pair)?);
        Ok(pair)
    }

    /// `φ = cosh(α(z − 1)) θ₁(r)` with `β = (λ₁/α) tanh α`.
    pub fn interior(grid: &Arc<Grid<T>>, alpha: T) -> Result<Self> {
        if grid.domain.kind != DomainKind::Interior {
            return Err(Error::InvalidDomain(
                "interior test function needs an interior grid".into(),
            ));
        }
        let params = interior_params(alpha)?;
        let lambda1 = radial_eigenvalue::<T>(1)?;
        let j = lambda1.sqrt();
        let theta = |r: T| {
            let x = j * r;
            if x < T::lit(1e-6) {
                T::one()
            } else {
                T::lit(2.0) * bessel_j1(x) / x
            }
        };
        let mut phi = Field::from_fn(grid, |r, z| (alpha * (z - T::one())).cosh() * theta(r));
        phi.values.row_mut(grid.nr - 1).fill(T::zero());
        let big_phi = phi.scale(alpha * alpha - lambda1);
        let pi2 = T::PI() * T::PI();
        let _ = pi2;
        let weight = integrate_weighted(&phi)?;
        let c1 = T::lit(1.5) / (alpha * alpha) * (alpha * alpha - lambda1).powi(2) * weight;
        Ok(Self {
            variant: Variant::Interior,
            alpha,
            beta: params.beta,
            phi,
            big_phi,
            lambda1: Some(lambda1),
            c0: None,
            c1: Some(c1),
        })
    }

    /// The blow-up constant: `c₀` (exterior) or `c₁` (interior).
    pub fn constant(&self) -> T {
        self.c0.or(self.c1).unwrap_or(T::zero())
    }

    /// Weight of the `Y` functional: `Φ` (exterior) or `φ` (interior).
    pub fn y_weight(&self) -> &Field<T> {
        match self.variant {
            Variant::Exterior => &self.big_phi,
            Variant::Interior => &self.phi,
        }
    }
}

/// `c₀ = (3/2π²) ∫∫ (4α²r² − (8α + π²))² φ r³ dr dz` by grid quadrature.
pub fn compute_c0<T: Scalar>(pair: &TestFunctionPair<T>) -> Result<T> {
    if pair.variant != Variant::Exterior {
        return Err(Error::InvalidArgument("c0 is defined for the exterior pair".into()));
    }
    let pi = T::PI();
    let a2 = T::lit(4.0) * pair.alpha * pair.alpha;
    let shift = T::lit(8.0) * pair.alpha + pi * pi;
    let grid = &pair.phi.grid;
    let integrand = Field::from_fn(grid, |r, _| (a2 * r * r - shift).powi(2)).mul(&pair.phi)?;
    Ok(T::lit(1.5) / (pi * pi) * integrate_weighted(&integrand)?)
}

/// Instantaneous functionals of a model state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functionals<T> {
    /// `∫∫ (log u²) w r³` with `w = Φ` (exterior) or `φ` (interior).
    pub y: T,
    /// `∫∫ ψ_z w r³`.
    pub p: T,
    /// `∫∫ u² r³`.
    pub l2u: T,
    /// `∫∫ u² φ r³`.
    pub u2phi: T,
    pub linf_u: T,
}

/// `∫∫ (log u²) w r³` over the interior `z`-nodes. At `z = 0, 1` the
/// integrand's limit is zero because `w` carries a `sin(πz)` factor.
pub fn log_functional<T: Scalar>(u: &Field<T>, w: &Field<T>) -> Result<T> {
    let g = &u.grid;
    let (nr, nz) = g.shape();
    let mut integrand = Field::zeros(g);
    for i in 0..nr {
        for j in 1..nz - 1 {
            let u2 = u.values[[i, j]] * u.values[[i, j]];
            if !(u2 > T::zero()) {
                return Err(Error::LogDomain { i, j });
            }
            integrand.values[[i, j]] = u2.ln() * w.values[[i, j]];
        }
    }
    integrate_weighted(&integrand)
}

pub fn functionals<T: Scalar>(state: &ModelState<T>, pair: &TestFunctionPair<T>) -> Result<Functionals<T>> {
    let w = pair.y_weight();
    let u2 = state.u.map(|v| v * v);
    Ok(Functionals {
        y: log_functional(&state.u, w)?,
        p: integrate_weighted(&diff_z(&state.psi, 1)?.mul(w)?)?,
        l2u: integrate_weighted(&u2)?,
        u2phi: integrate_weighted(&u2.mul(&pair.phi)?)?,
        linf_u: state.u.max_abs(),
    })
}

/// One inequality check with its signed margin (`≥ 0` means it holds).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Check<T> {
    pub holds: bool,
    pub margin: T,
}

impl<T: Scalar> Check<T> {
    fn of(margin: T) -> Self {
        Self {
            holds: margin >= T::zero(),
            margin,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdmissibilityReport<T> {
    pub y0: T,
    pub p0: T,
    pub c0: T,
    pub y_positive: Check<T>,
    pub p_positive: Check<T>,
    /// `P₀² ≥ (16/c₀) Y₀³`, the stated condition.
    pub stated: Check<T>,
    /// `16 P₀² ≥ Y₀³ / c₀`, the condition the first-integral step uses.
    pub operative: Check<T>,
    /// `Y₀` within rounding of zero.
    pub marginal: bool,
}

impl<T: Scalar> AdmissibilityReport<T> {
    /// All checks gated by the stated condition.
    pub fn passes(&self) -> bool {
        !self.marginal && self.y_positive.holds && self.p_positive.holds && self.stated.holds
    }
}

pub fn check_admissibility<T: Scalar>(
    u0: &Field<T>,
    psi0: &Field<T>,
    pair: &TestFunctionPair<T>,
) -> Result<AdmissibilityReport<T>> {
    let nz = u0.grid.nz;
    let scale = u0.max_abs().max(T::one());
    let boundary = u0
        .values
        .column(0)
        .iter()
        .chain(u0.values.column(nz - 1).iter())
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if boundary > T::lit(1e3) * T::epsilon() * scale {
        return Err(Error::InvalidArgument("u0 must vanish at z = 0 and z = 1".into()));
    }
    let w = pair.y_weight();
    let y0 = log_functional(u0, w)?;
    let p0 = integrate_weighted(&diff_z(psi0, 1)?.mul(w)?)?;
    let c0 = pair.constant();
    let sixteen = T::lit(16.0);
    let tiny = T::lit(1e3) * T::epsilon() * integrate_weighted(&w.map(|v| v.abs()))?.max(T::epsilon());
    Ok(AdmissibilityReport {
        y0,
        p0,
        c0,
        y_positive: Check::of(y0),
        p_positive: Check::of(p0),
        stated: Check::of(p0 * p0 - sixteen / c0 * y0.powi(3)),
        operative: Check::of(sixteen * p0 * p0 - y0.powi(3) / c0),
        marginal: y0.abs() <= tiny,
    })
}

/// Time series of the monitored quantities, one entry per accepted step.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FunctionalSeries<T> {
    pub times: Vec<T>,
    /// Step that led to each sample (0 for the first).
    pub dt: Vec<T>,
    pub y: Vec<T>,
    pub p: Vec<T>,
    pub l2u: Vec<T>,
    pub u2phi: Vec<T>,
    pub linf_u: Vec<T>,
    pub h3_surrogate: Vec<T>,
    /// Largest change of `log u² − log u₀²` between neighboring nodes.
    pub resolution: Vec<T>,
}

impl<T: Scalar> FunctionalSeries<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn push(&mut self, t: T, dt: T, f: &Functionals<T>, h3: T, resolution: T) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::InvalidArgument("series times must increase".into()));
            }
        }
        self.times.push(t);
        self.dt.push(dt);
        self.y.push(f.y);
        self.p.push(f.p);
        self.l2u.push(f.l2u);
        self.u2phi.push(f.u2phi);
        self.linf_u.push(f.linf_u);
        self.h3_surrogate.push(h3);
        self.resolution.push(resolution);
        Ok(())
    }

    /// Keeps the first `n` samples.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.len());
        Self {
            times: self.times[..n].to_vec(),
            dt: self.dt[..n].to_vec(),
            y: self.y[..n].to_vec(),
            p: self.p[..n].to_vec(),
            l2u: self.l2u[..n].to_vec(),
            u2phi: self.u2phi[..n].to_vec(),
            linf_u: self.linf_u[..n].to_vec(),
            h3_surrogate: self.h3_surrogate[..n].to_vec(),
            resolution: self.resolution[..n].to_vec(),
        }
    }
}

/// Largest change of the accumulated stretching exponent
/// `log u² − log u₀² = 4∫∂_zψ` between neighboring nodes (interior
/// `z`-nodes only). Small values mean the growth factor is resolved by the
/// grid.
pub fn resolution_indicator<T: Scalar>(u: &Field<T>, u0: &Field<T>) -> T {
    let (nr, nz) = u.grid.shape();
    let e = |i: usize, j: usize| {
        let a = u.values[[i, j]];
        let b = u0.values[[i, j]];
        (a * a).ln() - (b * b).ln()
    };
    let mut worst = T::zero();
    for i in 0..nr {
        for j in 1..nz - 1 {
            let here = e(i, j);
            if !here.is_finite() {
                return T::infinity();
            }
            if j + 1 < nz - 1 {
                worst = worst.max((e(i, j + 1) - here).abs());
            }
            if i + 1 < nr {
                worst = worst.max((e(i + 1, j) - here).abs());
            }
        }
    }
    worst
}

/// Finite-difference residuals of the functional identities and
/// inequalities, at the interior samples of a series.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RiccatiResiduals<T> {
    pub times: Vec<T>,
    /// `dP/dt − π²∫∫u²φ r³`.
    pub r1: Vec<T>,
    /// `dY/dt − 4P`.
    pub r2: Vec<T>,
    /// `Y″ − (3/2c₀)Y²`.
    pub r3: Vec<T>,
    /// `(Y′)² − Y³/c₀`.
    pub r4: Vec<T>,
    /// `(3/2c₀)Y²`, the scale of `r3`.
    pub r3_scale: Vec<T>,
    /// `Y³/c₀`, the scale of `r4`.
    pub r4_scale: Vec<T>,
}

/// Centered three-point weights for the first and second derivative on a
/// non-uniform stencil `t_{k−1}, t_k, t_{k+1}`.
fn stencil<T: Scalar>(h1: T, h2: T) -> ([T; 3], [T; 3]) {
    let s = h1 + h2;
    let d1 = [-h2 / (h1 * s), (h2 - h1) / (h1 * h2), h1 / (h2 * s)];
    let two = T::lit(2.0);
    let d2 = [two / (h1 * s), -two / (h1 * h2), two / (h2 * s)];
    (d1, d2)
}

pub fn riccati_residuals<T: Scalar>(series: &FunctionalSeries<T>, c0: T) -> Result<RiccatiResiduals<T>> {
    let n = series.len();
    if n < 3 {
        return Err(Error::InvalidArgument("need at least 3 samples".into()));
    }
    let pi2 = T::PI() * T::PI();
    let mut out = RiccatiResiduals::default();
    for k in 1..n - 1 {
        let t = &series.times;
        let (d1, d2) = stencil(t[k] - t[k - 1], t[k + 1] - t[k]);
        let apply = |w: &[T; 3], f: &[T]| w[0] * f[k - 1] + w[1] * f[k] + w[2] * f[k + 1];
        let dp = apply(&d1, &series.p);
        let dy = apply(&d1, &series.y);
        let d2y = apply(&d2, &series.y);
        let y = series.y[k];
        let r3_scale = T::lit(1.5) / c0 * y * y;
        let r4_scale = y.powi(3) / c0;
        out.times.push(t[k]);
        out.r1.push(dp - pi2 * series.u2phi[k]);
        out.r2.push(dy - T::lit(4.0) * series.p[k]);
        out.r3.push(d2y - r3_scale);
        out.r4.push(dy * dy - r4_scale);
        out.r3_scale.push(r3_scale);
        out.r4_scale.push(r4_scale);
    }
    Ok(out)
}

/// Blow-up time bound and the lower-bound curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupBounds<T> {
    pub y0: T,
    pub c0: T,
    /// `2√c₀ / √Y₀`.
    pub t_star: T,
    /// `4α²e^{−α}`, the envelope constant (exterior only).
    pub envelope: Option<T>,
}

impl<T: Scalar> BlowupBounds<T> {
    /// `4c₀Y₀ / (2√c₀ − t√Y₀)²`.
    pub fn curve(&self, t: T) -> Result<T> {
        closed_form_lower(self.y0, self.c0, t)
    }

    /// Lower bound for `∫∫u²r³` implied by the envelope.
    pub fn l2_lower(&self, t: T) -> Result<T> {
        let env = self
            .envelope
            .ok_or_else(|| Error::InvalidArgument("no envelope constant".into()))?;
        Ok(self.curve(t)? / env)
    }
}

pub fn blowup_bounds<T: Scalar>(y0: T, p0: T, c0: T, alpha: Option<T>) -> Result<BlowupBounds<T>> {
    if !(y0 > T::zero()) {
        return Err(Error::Domain(format!("Y0 must be positive, got {y0}")));
    }
    if !(p0 > T::zero()) || !(c0 > T::zero()) {
        return Err(Error::Domain("P0 and c0 must be positive".into()));
    }
    Ok(BlowupBounds {
        y0,
        c0,
        t_star: T::lit(2.0) * c0.sqrt() / y0.sqrt(),
        envelope: alpha.map(|a| T::lit(4.0) * a * a * (-a).exp()),
    })
}

/// Discrete `H^s` stand-in: the `L²(r³ dr dz)` norm of all mixed
/// finite-difference derivatives `∂_r^a ∂_z^b f`, `a + b ≤ s`.
pub fn sobolev_surrogate<T: Scalar>(f: &Field<T>, s: usize) -> Result<T> {
    Ok(sobolev_terms(f, s, 0)?.sqrt())
}

/// Sum of squared weighted norms of derivatives with order in `min_order..=s`.
fn sobolev_terms<T: Scalar>(f: &Field<T>, s: usize, min_order: usize) -> Result<T> {
    if s > 3 {
        return Err(Error::InvalidArgument(format!("surrogate order {s} exceeds 3")));
    }
    let (nr, nz) = f.grid.shape();
    if nr < 2 * s + 1 || nz < 2 * s + 1 {
        return Err(Error::GridTooCoarse(format!(
            "order-{s} surrogate needs {} nodes",
            2 * s + 1
        )));
    }
    let dr = |g: &Field<T>, a: usize| -> Result<Field<T>> {
        match a {
            0 => Ok(g.clone()),
            1 => diff_r(g, 1),
            2 => diff_r(g, 2),
            _ => diff_r(&diff_r(g, 2)?, 1),
        }
    };
    let dz = |g: &Field<T>, b: usize| -> Result<Field<T>> {
        match b {
            0 => Ok(g.clone()),
            1 => diff_z(g, 1),
            2 => diff_z(g, 2),
            _ => diff_z(&diff_z(g, 2)?, 1),
        }
    };
    let mut total = T::zero();
    for a in 0..=s {
        for b in 0..=s - a {
            if a + b < min_order {
                continue;
            }
            let d = dz(&dr(f, a)?, b)?;
            total += integrate_weighted(&d.map(|v| v * v))?;
        }
    }
    Ok(total)
}

/// Surrogate of `‖∇f‖_{H^{s−1}}`: derivatives of orders `1..=s`.
pub fn gradient_surrogate<T: Scalar>(f: &Field<T>, s: usize) -> Result<T> {
    Ok(sobolev_terms(f, s, 1)?.sqrt())
}

/// Discrete Poincaré-type constant `Ĉ = ‖f‖_{H³}/‖∇f‖_{H²}` measured on
/// the lowest Dirichlet mode `(1 − r²) sin(πz)` of the grid.
pub fn measure_poincare_constant<T: Scalar>(grid: &Arc<Grid<T>>) -> Result<T> {
    let pi = T::PI();
    let f = Field::from_fn(grid, |r, z| (T::one() - r * r) * (pi * z).sin());
    Ok((sobolev_surrogate(&f, 3)? / gradient_surrogate(&f, 3)?).max(T::one()))
}

/// Incremental monitor for decay runs.
#[derive(Debug, Clone)]
pub struct DecayMonitor<T> {
    u0: Field<T>,
    m: T,
    tol: T,
    pub c_hat: T,
    /// `M / (2Ĉ²)`.
    pub guard_level: T,
    pub times: Vec<T>,
    pub sup_u: Vec<T>,
    pub sup_v: Vec<T>,
    pub grad_v: Vec<T>,
    pub sobolev_u: Vec<T>,
    /// Largest `ũ(t,x) / (ũ₀(x) e^{−2Mt})` seen while `‖v‖∞ ≤ M/2` held.
    pub pointwise_ratio: T,
    pub pointwise_ok: bool,
    pub v_guard_held: bool,
    pub first_guard_violation: Option<T>,
}

impl<T: Scalar> DecayMonitor<T> {
    pub fn new(initial: &DecayState<T>, tol: T) -> Result<Self> {
        let c_hat = measure_poincare_constant(&initial.u_tilde.grid)?;
        let mut mon = Self {
            u0: initial.u_tilde.clone(),
            m: initial.m,
            tol,
            c_hat,
            guard_level: initial.m / (T::lit(2.0) * c_hat * c_hat),
            times: Vec::new(),
            sup_u: Vec::new(),
            sup_v: Vec::new(),
            grad_v: Vec::new(),
            sobolev_u: Vec::new(),
            pointwise_ratio: T::zero(),
            pointwise_ok: true,
            v_guard_held: true,
            first_guard_violation: None,
        };
        mon.observe(initial)?;
        Ok(mon)
    }

    pub fn observe(&mut self, state: &DecayState<T>) -> Result<()> {
        let sup_v = state.v.max_abs();
        let grad_v = gradient_surrogate(&state.v, 3)?;
        if sup_v > self.m / T::lit(2.0) {
            self.v_guard_held = false;
        }
        if grad_v > self.guard_level && self.first_guard_violation.is_none() {
            self.first_guard_violation = Some(state.t);
        }
        if self.v_guard_held {
            let decay = (-T::lit(2.0) * self.m * state.t).exp();
            for (&now, &then) in state.u_tilde.values.iter().zip(self.u0.values.iter()) {
                let bound = then * decay;
                if now > bound * (T::one() + self.tol) {
                    self.pointwise_ok = false;
                }
                if bound > T::zero() {
                    self.pointwise_ratio = self.pointwise_ratio.max(now / bound);
                }
            }
        }
        self.times.push(state.t);
        self.sup_u.push(state.u_tilde.max_abs());
        self.sup_v.push(sup_v);
        self.grad_v.push(grad_v);
        self.sobolev_u.push(sobolev_surrogate(&state.u_tilde, 3)?);
        Ok(())
    }

    pub fn report(&self) -> DecayReport<T> {
        DecayReport {
            m: self.m,
            c_hat: self.c_hat,
            guard_level: self.guard_level,
            pointwise_ok: self.pointwise_ok,
            pointwise_ratio: self.pointwise_ratio,
            v_guard_held: self.v_guard_held,
            first_guard_violation: self.first_guard_violation,
            max_grad_v: self.grad_v.iter().fold(T::zero(), |m, &v| m.max(v)),
            max_sup_v: self.sup_v.iter().fold(T::zero(), |m, &v| m.max(v)),
            decay_exponent: fit_decay_exponent(&self.times, &self.sup_u),
            sobolev_monotone_after: monotone_from(&self.sobolev_u),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport<T> {
    pub m: T,
    pub c_hat: T,
    pub guard_level: T,
    pub pointwise_ok: bool,
    pub pointwise_ratio: T,
    /// `‖v‖∞ ≤ M/2` at every observed time.
    pub v_guard_held: bool,
    /// First time the `∇v` surrogate exceeded `M/(2Ĉ²)`.
    pub first_guard_violation: Option<T>,
    pub max_grad_v: T,
    pub max_sup_v: T,
    /// Least-squares slope of `−log ‖ũ‖∞` against `t`; `None` if `ũ ≡ 0`.
    pub decay_exponent: Option<T>,
    /// Index from which the `H³` surrogate of `ũ` never increases.
    pub sobolev_monotone_after: Option<usize>,
}

fn fit_decay_exponent<T: Scalar>(times: &[T], sup: &[T]) -> Option<T> {
    let pts: Vec<(T, T)> = times
        .iter()
        .zip(sup)
        .filter(|(_, &s)| s > T::zero())
        .map(|(&t, &s)| (t, s.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = T::from_usize_lossy(pts.len());
    let mt = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    (sxx > T::zero()).then(|| -sxy / sxx)
}

fn monotone_from<T: Scalar>(v: &[T]) -> Option<usize> {
    if v.is_empty() {
        return None;
    }
    let mut start = 0;
    for k in 1..v.len() {
        if v[k] > v[k - 1] {
            start = k;
        }
    }
    Some(start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{BcSpec, EllipticSolver};
    use crate::grid::Domain;
    use std::f64::consts::PI;

    fn exterior_grid(nr: usize, nz: usize) -> Arc<Grid<f64>> {
        Grid::<f64>::new(Domain::exterior(8.0).unwrap(), nr, nz).unwrap()
    }

    /// `∫₁^∞ r^{2n+1} e^{−αr²} dr = n! e^{−α} Σ_{k≤n} α^k/k! / (2α^{n+1})`.
    fn moment(n: u32, alpha: f64) -> f64 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for k in 0..=n {
            if k > 0 {
                term *= alpha / k as f64;
            }
            sum += term;
        }
        let fact: f64 = (1..=n).map(|v| v as f64).product();
        fact * (-alpha).exp() * sum / (2.0 * alpha.powi(n as i32 + 1))
    }

    fn c0_closed_form(alpha: f64) -> f64 {
        // (a r² − b)² r³ = a² r⁷ − 2ab r⁵ + b² r³
        let a = 4.0 * alpha * alpha;
        let b = 8.0 * alpha + PI * PI;
        let radial = a * a * moment(3, alpha) - 2.0 * a * b * moment(2, alpha) + b * b * moment(1, alpha);
        1.5 / (PI * PI) * (2.0 / PI) * radial
    }

    #[test]
    fn c0_matches_closed_form() {
        let exact = c0_closed_form(3.0);
        assert!((exact - 0.535_718_648_062_185_8).abs() < 1e-12);
        let pair = TestFunctionPair::exterior(&exterior_grid(2049, 257), 3.0).unwrap();
        let c0 = pair.c0.unwrap();
        assert!((c0 - exact).abs() < 1e-8 * exact, "{c0} vs {exact}");
    }

    #[test]
    fn c0_truncation_is_negligible() {
        let a = TestFunctionPair::exterior(&Grid::<f64>::new(Domain::exterior(8.0).unwrap(), 701, 65).unwrap(), 3.0)
            .unwrap();
        let b = TestFunctionPair::exterior(&Grid::<f64>::new(Domain::exterior(6.0).unwrap(), 501, 65).unwrap(), 3.0)
            .unwrap();
        assert!((a.c0.unwrap() - b.c0.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn exterior_pair_threshold() {
        let g = exterior_grid(65, 17);
        let thr = exterior_alpha_threshold::<f64>();
        let pair = TestFunctionPair::exterior(&g, thr).unwrap();
        assert!(pair.big_phi.values.row(0).iter().all(|v| v.abs() < 1e-12));
        assert!(matches!(
            TestFunctionPair::exterior(&g, 2.5),
            Err(Error::PhiPositivity(_))
        ));
        let p3 = TestFunctionPair::exterior(&g, 3.0).unwrap();
        let j = 8;
        let ratio = p3.big_phi.at(0, j) / p3.phi.at(0, j);
        assert!((ratio - (36.0 - 24.0 - PI * PI)).abs() < 1e-12);
    }

    #[test]
    fn interior_pair_is_positive() {
        let g = Grid::<f64>::new(Domain::interior(), 65, 33).unwrap();
        let pair = TestFunctionPair::interior(&g, 1.0).unwrap();
        for i in 0..g.nr - 1 {
            for j in 0..g.nz {
                assert!(pair.phi.at(i, j) > 0.0);
            }
        }
        assert!(pair.c1.unwrap() > 0.0);
        assert!((pair.beta - 11.181_703_038_955_666).abs() < 1e-9);
    }

    #[test]
    fn y_vanishes_for_unit_u() {
        let g = exterior_grid(65, 17);
        let pair = TestFunctionPair::exterior(&g, 3.0).unwrap();
        let u = Field::constant(&g, 1.0);
        assert_eq!(log_functional(&u, &pair.big_phi).unwrap(), 0.0);
        assert!(matches!(
            log_functional(&Field::zeros(&g), &pair.big_phi),
            Err(Error::LogDomain { .. })
        ));
    }

    #[test]
    fn p_of_canonical_stream_function() {
        let g = exterior_grid(1025, 129);
        let pair = TestFunctionPair::exterior(&g, 3.0).unwrap();
        let b = 6.0;
        let psi = Field::from_fn(&g, |r, z| -(b / PI) * (-3.0 * r * r).exp() * (PI * z).cos());
        let p = integrate_weighted(&diff_z(&psi, 1).unwrap().mul(&pair.big_phi).unwrap()).unwrap();
        let exact = b * integrate_weighted(&pair.phi.mul(&pair.big_phi).unwrap()).unwrap();
        assert!(p > 0.0);
        assert!((p - exact).abs() < 3e-4 * exact, "{p} vs {exact}");
        assert!((exact / b - 0.001_082_952_52).abs() < 1e-8, "{}", exact / b);
    }

    #[test]
    fn admissibility_flags_zero_b() {
        let g = exterior_grid(257, 65);
        let pair = TestFunctionPair::exterior(&g, 3.0).unwrap();
        let u0 = Field::from_fn(&g, |_, z| 2f64.sqrt() * (PI * z).sin());
        let psi0 = Field::from_fn(&g, |r, _| (-3.0 * r * r).exp());
        let rep = check_admissibility(&u0, &psi0, &pair).unwrap();
        assert!(!rep.p_positive.holds || rep.p0.abs() < 1e-14);
        assert!(!rep.passes());
    }

    #[test]
    fn bounds_examples() {
        let b = blowup_bounds(1.0, 1.0, 1.0, None).unwrap();
        assert_eq!(b.t_star, 2.0);
        assert_eq!(b.curve(0.0).unwrap(), 1.0);
        assert_eq!(b.curve(1.0).unwrap(), 4.0);
        assert!(b.curve(2.0).is_err());
        let eps: f64 = 1e-3;
        let grow = b.curve(2.0 * (1.0 - eps)).unwrap() * eps * eps;
        assert!((grow - 1.0).abs() < 1e-9);
        assert!(blowup_bounds(0.0, 1.0, 1.0, None).is_err());
    }

    #[test]
    fn residuals_of_equality_solution() {
        // Y = 4/(2 − t)² with c₀ = 1 satisfies Y″ = (3/2)Y², (Y′)² = Y³
        let mut s = FunctionalSeries::default();
        let n = 400;
        for k in 0..n {
            let t = 1.0 * k as f64 / n as f64;
            let y = 4.0 / (2.0 - t).powi(2);
            let f = Functionals {
                y,
                p: 2.0 / (2.0 - t).powi(3),
                l2u: 0.0,
                u2phi: 0.0,
                linf_u: 0.0,
            };
            s.push(t, 0.0, &f, 0.0, 0.0).unwrap();
        }
        let r = riccati_residuals(&s, 1.0).unwrap();
        for k in 0..r.times.len() {
            assert!(r.r2[k].abs() < 1e-3);
            assert!(r.r3[k].abs() < 1e-3 * r.r3_scale[k]);
            assert!(r.r4[k].abs() < 1e-3 * r.r4_scale[k]);
        }
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid::<f64>::new(Domain::interior(), 129, 129).unwrap();
        let c = Field::constant(&g, 2.0);
        assert!((sobolev_surrogate(&c, 1).unwrap() - 2.0 * 0.5).abs() < 1e-12);
        let f = Field::from_fn(&g, |_, z| (PI * z).sin());
        let exact = (0.25 * (0.5 + PI * PI / 2.0)).sqrt();
        assert!((sobolev_surrogate(&f, 1).unwrap() - exact).abs() < 1e-3);
        let h = Field::from_fn(&g, |r, z| r * r * z);
        let sum = f.add(&h).unwrap();
        for s in 0..=3 {
            let lhs = sobolev_surrogate(&sum, s).unwrap();
            assert!(lhs <= sobolev_surrogate(&f, s).unwrap() + sobolev_surrogate(&h, s).unwrap() + 1e-12);
        }
        assert!(sobolev_surrogate(&f, 4).is_err());
    }

    #[test]
    fn decay_monitor_zero_data() {
        let g = Grid::<f64>::new(Domain::interior(), 17, 17).unwrap();
        let state = DecayState::new(Field::zeros(&g), Field::zeros(&g), 1.0).unwrap();
        let dir = EllipticSolver::new(&g, BcSpec::DirichletHomog).unwrap();
        let mut mon = DecayMonitor::new(&state, 1e-6).unwrap();
        let mut ctrl = crate::dynamics::StepControl::for_initial(1.0);
        let next = crate::dynamics::step_decay(&state, &mut ctrl, &dir, 1e-12).unwrap();
        mon.observe(&next.state).unwrap();
        let rep = mon.report();
        assert!(rep.pointwise_ok && rep.v_guard_held && rep.first_guard_violation.is_none());
        assert_eq!(rep.max_grad_v, 0.0);
        assert!(rep.decay_exponent.is_none());
    }
}
